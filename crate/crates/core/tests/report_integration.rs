//! End-to-end report assembly with every estimator on a confounded design.

use ate_toolkit::dataio::synth::{generate_synthetic, preset};
use ate_toolkit::diagnostics::build_report;
use ate_toolkit::estimators::estimate;
use ate_toolkit::linalg;
use ate_toolkit::model::{Estimand, Method, RunConfig};
use ate_toolkit::rng;

fn small_cfg() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.bootstrap_reps = 20;
    cfg.half_sample_reps = 8;
    cfg.dml_folds = 2;
    cfg.forest.n_trees = 60;
    cfg.linmod.lambda_grid_size = 25;
    cfg.linmod.cv_folds = 3;
    cfg
}

#[test]
fn six_method_report_fills_every_cell() {
    let spec = preset("confounded_linear", 250).unwrap();
    let s = generate_synthetic(&spec, 17).unwrap();
    let report = build_report(
        &s.dataset,
        &Method::REPORT_SET,
        &small_cfg(),
        23,
        Estimand::Att,
    )
    .unwrap();

    assert_eq!(report.rows.len(), 6);
    for row in &report.rows {
        assert!(row.estimate.is_some(), "{:?}: {:?}", row.method, row.notes);
        assert!(row.se.is_some(), "{:?}: {:?}", row.method, row.notes);
        assert!(row.trimmed.is_some(), "{:?}: {:?}", row.method, row.notes);
        assert!(row.sbb.is_some(), "{:?}: {:?}", row.method, row.notes);
        assert!(row.covsplit_mean.is_some(), "{:?}: {:?}", row.method, row.notes);
        assert!(row.notes.is_empty(), "{:?}: {:?}", row.method, row.notes);
        for v in [row.estimate, row.se, row.trimmed, row.sbb, row.covsplit_mean, row.covsplit_std]
        {
            assert!(v.unwrap().is_finite());
        }
    }
    let bounds = &report.bounds;
    assert!(bounds.ate_bound.is_some() && bounds.weighted_bound.is_some());
    assert!(bounds.ratio.unwrap() > 0.0);
    let bias = report.bias_summary.as_ref().unwrap();
    assert!(bias.summary.q025 <= bias.summary.q975);
    assert!(bias.naive_minus_reference.is_some());
    assert_eq!(report.meta.methods.len(), 6);

    // serialized form parses back and keeps the row order
    let json: serde_json::Value = serde_json::from_str(&report.to_json_string()).unwrap();
    assert_eq!(json["rows"][0]["method"], "naive");
    assert_eq!(json["rows"][5]["method"], "dmle");
}

#[test]
fn report_is_identical_across_thread_counts() {
    let spec = preset("randomized", 90).unwrap();
    let s = generate_synthetic(&spec, 31).unwrap();
    let cfg = small_cfg();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            build_report(&s.dataset, &[Method::Naive, Method::Dre], &cfg, 31, Estimand::Att)
                .unwrap()
                .to_json_string()
        })
    };
    assert_eq!(run(1), run(2), "report depends on worker count");
}

#[test]
fn score_based_estimators_beat_naive_on_confounded_data() {
    let spec = preset("confounded_linear", 900).unwrap();
    let cfg = small_cfg();
    let reps = 20;
    let mut naive_err = Vec::new();
    let mut dre_err = Vec::new();
    let mut dmle_err = Vec::new();
    for rep in 0..reps {
        let s = generate_synthetic(&spec, rng::derive_seed(3100, rep)).unwrap();
        let naive = estimate(Method::Naive, &s.dataset, &cfg, rep, Estimand::Ate).unwrap();
        let dre = estimate(Method::Dre, &s.dataset, &cfg, rep, Estimand::Ate).unwrap();
        let dmle = estimate(Method::Dmle, &s.dataset, &cfg, rep, Estimand::Ate).unwrap();
        naive_err.push(naive.value - s.tau_true);
        dre_err.push(dre.value - s.tau_true);
        dmle_err.push(dmle.value - s.tau_true);
    }
    let naive_bias = linalg::mean(&naive_err).abs();
    let dre_bias = linalg::mean(&dre_err).abs();
    let dmle_bias = linalg::mean(&dmle_err).abs();
    assert!(
        dre_bias < naive_bias / 3.0,
        "dre bias {dre_bias} vs naive bias {naive_bias}"
    );
    assert!(
        dmle_bias < naive_bias / 3.0,
        "dmle bias {dmle_bias} vs naive bias {naive_bias}"
    );
}
