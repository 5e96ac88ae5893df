//! Seeded synthetic data generators with stored potential outcomes, used as
//! oracles throughout the test suites and by the `simulate` command.

use rand::RngExt;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::Dataset;
use crate::rng;

/// How the propensity depends on the linear index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropensityLink {
    /// e(x) = 1/(1+exp(-x'gamma))
    Logistic,
    /// e(x) = clamp(x'gamma + 0.5, 0.02, 0.98)
    ClippedLinear,
}

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub n: usize,
    pub d: usize,
    /// Outcome coefficients.
    pub beta: Vec<f64>,
    /// Propensity coefficients.
    pub gamma: Vec<f64>,
    /// Constant treatment effect.
    pub tau: f64,
    pub link: PropensityLink,
    pub noise_sd: f64,
    /// Optional per-covariate effect modifiers: y1 - y0 = tau + x'hetero.
    pub hetero: Option<Vec<f64>>,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.beta.len() != self.d || self.gamma.len() != self.d {
            return Err(Error::InvalidInput(
                "beta and gamma must have length d".into(),
            ));
        }
        if let Some(h) = &self.hetero {
            if h.len() != self.d {
                return Err(Error::InvalidInput("hetero must have length d".into()));
            }
        }
        if self.noise_sd < 0.0 {
            return Err(Error::InvalidInput("noise_sd must be >= 0".into()));
        }
        if self.n < 2 || self.d < 1 {
            return Err(Error::InvalidInput("need n >= 2 and d >= 1".into()));
        }
        Ok(())
    }
}

/// A generated sample together with everything the generator knows: both
/// potential outcomes and the true nuisance values at each point.
#[derive(Debug, Clone)]
pub struct OracleSample {
    pub dataset: Dataset,
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
    pub e_true: Vec<f64>,
    pub mu0_true: Vec<f64>,
    pub mu1_true: Vec<f64>,
    /// Population average effect (equals the spec's tau).
    pub tau_true: f64,
    /// Sample average effect among the treated units.
    pub tau_t_true: f64,
}

impl OracleSample {
    /// Sample average of y1 - y0 over all units.
    pub fn sample_ate(&self) -> f64 {
        self.y0
            .iter()
            .zip(&self.y1)
            .map(|(a, b)| b - a)
            .sum::<f64>()
            / self.y0.len() as f64
    }
}

pub fn generate_synthetic(spec: &SynthSpec, seed: u64) -> Result<OracleSample> {
    spec.validate()?;
    let mut r = rng::stream(seed);
    let n = spec.n;
    let d = spec.d;

    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n * d {
        data.push(rng::standard_normal(&mut r));
    }
    let x = Matrix::from_vec(n, d, data);

    let mut e_true = Vec::with_capacity(n);
    let mut mu0_true = Vec::with_capacity(n);
    let mut mu1_true = Vec::with_capacity(n);
    for i in 0..n {
        let row = x.row(i);
        let xg: f64 = row.iter().zip(&spec.gamma).map(|(a, b)| a * b).sum();
        let xb: f64 = row.iter().zip(&spec.beta).map(|(a, b)| a * b).sum();
        let e = match spec.link {
            PropensityLink::Logistic => 1.0 / (1.0 + (-xg).exp()),
            PropensityLink::ClippedLinear => (xg + 0.5).clamp(0.02, 0.98),
        };
        let het = spec
            .hetero
            .as_ref()
            .map_or(0.0, |h| row.iter().zip(h).map(|(a, b)| a * b).sum());
        e_true.push(e);
        mu0_true.push(xb);
        mu1_true.push(spec.tau + xb + het);
    }

    let mut w = Vec::with_capacity(n);
    let mut y0 = Vec::with_capacity(n);
    let mut y1 = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let wi = u8::from(r.random::<f64>() < e_true[i]);
        let e0 = spec.noise_sd * rng::standard_normal(&mut r);
        let e1 = spec.noise_sd * rng::standard_normal(&mut r);
        let y0i = mu0_true[i] + e0;
        let y1i = mu1_true[i] + e1;
        w.push(wi);
        y0.push(y0i);
        y1.push(y1i);
        y.push(if wi == 1 { y1i } else { y0i });
    }

    let names = (0..d).map(|j| format!("x{}", j + 1)).collect();
    let dataset = Dataset::new(x, w, y, names)?;

    let treated: Vec<usize> = dataset.treated_indices();
    let tau_t_true = if treated.is_empty() {
        spec.tau
    } else {
        treated.iter().map(|&i| y1[i] - y0[i]).sum::<f64>() / treated.len() as f64
    };

    Ok(OracleSample {
        dataset,
        y0,
        y1,
        e_true,
        mu0_true,
        mu1_true,
        tau_true: spec.tau,
        tau_t_true,
    })
}

/// Named designs for the `simulate` command and the oracle test suites.
pub fn preset(name: &str, n: usize) -> Result<SynthSpec> {
    match name {
        "randomized" => Ok(SynthSpec {
            n,
            d: 4,
            beta: vec![1.0, 0.5, -0.5, 0.25],
            gamma: vec![0.0; 4],
            tau: 1.0,
            link: PropensityLink::ClippedLinear,
            noise_sd: 1.0,
            hetero: None,
        }),
        "confounded_linear" => Ok(SynthSpec {
            n,
            d: 6,
            beta: vec![0.6; 6],
            gamma: vec![0.4; 6],
            tau: 1.0,
            link: PropensityLink::Logistic,
            noise_sd: 1.0,
            hetero: None,
        }),
        "poor_overlap" => Ok(SynthSpec {
            n,
            d: 4,
            beta: vec![1.0, 1.0, 0.5, 0.5],
            gamma: vec![2.0, 1.5, 0.0, 0.0],
            tau: 1.0,
            link: PropensityLink::Logistic,
            noise_sd: 1.0,
            hetero: None,
        }),
        "product_sparse" => {
            let d = 50;
            let mut beta = vec![0.0; d];
            let mut gamma = vec![0.0; d];
            beta[0] = 2.0;
            gamma[1] = 1.5;
            Ok(SynthSpec {
                n,
                d,
                beta,
                gamma,
                tau: 1.0,
                link: PropensityLink::Logistic,
                noise_sd: 1.0,
                hetero: None,
            })
        }
        other => Err(Error::UnknownDgp { name: other.into() }),
    }
}

pub const PRESET_NAMES: [&str; 4] = [
    "randomized",
    "confounded_linear",
    "poor_overlap",
    "product_sparse",
];
