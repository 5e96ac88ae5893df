//! Histogram rendering as a self-contained SVG bar chart. Pure string
//! assembly, so outputs are byte-stable and diffable in tests.

use ate_toolkit::diagnostics::HistogramBin;

pub fn histogram_svg(bins: &[HistogramBin], title: &str) -> String {
    let width = 640.0;
    let height = 400.0;
    let margin_left = 60.0;
    let margin_right = 20.0;
    let margin_top = 40.0;
    let margin_bottom = 50.0;
    let plot_w = width - margin_left - margin_right;
    let plot_h = height - margin_top - margin_bottom;

    let max_count = bins.iter().map(|b| b.count).max().unwrap_or(0).max(1) as f64;
    let lo = bins.first().map_or(0.0, |b| b.bin_left);
    let hi = bins.last().map_or(1.0, |b| b.bin_right);
    let span = if hi > lo { hi - lo } else { 1.0 };

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\">{title}</text>\n",
        width / 2.0
    ));
    // axes
    s.push_str(&format!(
        "<line x1=\"{margin_left}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        height - margin_bottom,
        width - margin_right,
        height - margin_bottom
    ));
    s.push_str(&format!(
        "<line x1=\"{margin_left}\" y1=\"{margin_top}\" x2=\"{margin_left}\" y2=\"{}\" \
         stroke=\"black\"/>\n",
        height - margin_bottom
    ));

    for bin in bins {
        let x = margin_left + (bin.bin_left - lo) / span * plot_w;
        let w = ((bin.bin_right - bin.bin_left) / span * plot_w).max(0.5);
        let h = bin.count as f64 / max_count * plot_h;
        let y = height - margin_bottom - h;
        s.push_str(&format!(
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" \
             fill=\"steelblue\" stroke=\"white\" stroke-width=\"0.5\"/>\n"
        ));
    }

    // tick labels: min, zero-ish center, max, and the count axis
    for (frac, value) in [(0.0, lo), (0.5, lo + span / 2.0), (1.0, hi)] {
        let x = margin_left + frac * plot_w;
        s.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\">{value:.3}</text>\n",
            height - margin_bottom + 20.0
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"end\">{}</text>\n",
        margin_left - 6.0,
        margin_top + 12.0,
        max_count as usize
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"end\">0</text>\n",
        margin_left - 6.0,
        height - margin_bottom
    ));
    s.push_str("</svg>\n");
    s
}
