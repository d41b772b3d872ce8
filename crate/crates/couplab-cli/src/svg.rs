//! Minimal hand-rolled SVG bar chart. No plotting dependency; the chart is a
//! courtesy view of numbers the CSV already carries.

/// Renders labeled bars with a zero-based y axis. Deterministic output:
/// fixed geometry, fixed decimal formatting, no randomness or clock.
pub fn bar_chart(title: &str, bars: &[(&str, f64)], manifest_json: &str) -> String {
    const W: f64 = 480.0;
    const H: f64 = 320.0;
    const ML: f64 = 60.0; // left margin for axis labels
    const MR: f64 = 20.0;
    const MT: f64 = 48.0;
    const MB: f64 = 48.0;
    let plot_w = W - ML - MR;
    let plot_h = H - MT - MB;

    let max = bars.iter().map(|b| b.1).fold(0.0_f64, f64::max);
    // round the axis top up to one significant step so gridlines land on
    // readable values
    let step = if max <= 0.0 {
        1.0
    } else {
        let raw = max / 4.0;
        let mag = 10f64.powf(raw.log10().floor());
        let unit = raw / mag;
        let nice = if unit <= 1.0 {
            1.0
        } else if unit <= 2.0 {
            2.0
        } else if unit <= 5.0 {
            5.0
        } else {
            10.0
        };
        nice * mag
    };
    let top = step * (max / step).ceil().max(1.0);

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"monospace\" font-size=\"12\">\n"
    ));
    s.push_str(&format!("<!-- manifest: {} -->\n", manifest_json));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        W / 2.0,
        escape(title)
    ));

    // gridlines and y labels
    let mut y = 0.0;
    while y <= top + 1e-9 {
        let py = MT + plot_h * (1.0 - y / top);
        s.push_str(&format!(
            "<line x1=\"{ML:.1}\" y1=\"{py:.1}\" x2=\"{:.1}\" y2=\"{py:.1}\" \
             stroke=\"#ccc\" stroke-width=\"1\"/>\n",
            ML + plot_w
        ));
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
            ML - 6.0,
            py + 4.0,
            trim_zeros(y)
        ));
        y += step;
    }

    // bars
    let slot = plot_w / bars.len() as f64;
    for (k, (label, value)) in bars.iter().enumerate() {
        let bw = slot * 0.5;
        let x = ML + slot * (k as f64 + 0.25);
        let h = plot_h * (value / top).clamp(0.0, 1.0);
        let py = MT + plot_h - h;
        s.push_str(&format!(
            "<rect x=\"{x:.1}\" y=\"{py:.1}\" width=\"{bw:.1}\" height=\"{h:.1}\" \
             fill=\"#4477aa\"/>\n"
        ));
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            x + bw / 2.0,
            MT + plot_h + 16.0,
            escape(label)
        ));
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{:.6}</text>\n",
            x + bw / 2.0,
            py - 6.0,
            value
        ));
    }

    // axes on top of the grid
    s.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        MT + plot_h
    ));
    s.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        MT + plot_h,
        ML + plot_w,
        MT + plot_h
    ));
    s.push_str("</svg>\n");
    s
}

fn trim_zeros(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() {
        "0".into()
    } else {
        s.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
