//! Minimal hand-written SVG rendering for track series and factor planes:
//! polylines, circles and text labels, no plotting dependency.

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 70.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn finite_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in values {
        if v.is_finite() {
            min = min.min(v);
            max = max.max(v);
        }
    }
    if min > max {
        (0.0, 1.0)
    } else if min == max {
        (min - 0.5, max + 0.5)
    } else {
        (min, max)
    }
}

/// A line chart with one polyline per series over a shared ordered x axis.
/// `x_labels` name the positions; up to 12 are drawn as ticks.
pub fn line_chart(title: &str, x_labels: &[String], series: &[(String, Vec<f64>)]) -> String {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let n = x_labels.len().max(1);
    let (y_min, y_max) = finite_range(series.iter().flat_map(|(_, v)| v.iter().copied()));
    let y_min = y_min.min(0.0);
    let x_pos = |i: usize| {
        if n == 1 {
            MARGIN_LEFT + plot_w / 2.0
        } else {
            MARGIN_LEFT + plot_w * i as f64 / (n - 1) as f64
        }
    };
    let y_pos = |v: f64| MARGIN_TOP + plot_h * (1.0 - (v - y_min) / (y_max - y_min));

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         width=\"{WIDTH}\" height=\"{HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"17\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));

    // y grid and ticks
    for tick in 0..=5 {
        let v = y_min + (y_max - y_min) * tick as f64 / 5.0;
        let y = y_pos(v);
        svg.push_str(&format!(
            "<line x1=\"{MARGIN_LEFT:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
             stroke=\"#dddddd\"/>\n",
            MARGIN_LEFT + plot_w
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" \
             font-size=\"11\">{v:.3}</text>\n",
            MARGIN_LEFT - 8.0,
            y + 4.0
        ));
    }

    // x ticks, at most 12
    let step = n.div_ceil(12).max(1);
    for i in (0..n).step_by(step) {
        let x = x_pos(i);
        svg.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#999999\"/>\n",
            MARGIN_TOP + plot_h,
            MARGIN_TOP + plot_h + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" \
             font-size=\"10\" transform=\"rotate(-35 {x:.1} {:.1})\">{}</text>\n",
            MARGIN_TOP + plot_h + 18.0,
            MARGIN_TOP + plot_h + 18.0,
            escape(&x_labels[i])
        ));
    }

    // axes
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_LEFT:.1}\" y1=\"{MARGIN_TOP:.1}\" x2=\"{MARGIN_LEFT:.1}\" \
         y2=\"{:.1}\" stroke=\"#333333\"/>\n",
        MARGIN_TOP + plot_h
    ));
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_LEFT:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" \
         stroke=\"#333333\"/>\n",
        MARGIN_TOP + plot_h,
        MARGIN_LEFT + plot_w,
        MARGIN_TOP + plot_h
    ));

    for (s_idx, (label, values)) in series.iter().enumerate() {
        let color = PALETTE[s_idx % PALETTE.len()];
        let points: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| format!("{:.2},{:.2}", x_pos(i), y_pos(v)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\" points=\"{}\"/>\n",
            points.join(" ")
        ));
        for (i, &v) in values.iter().enumerate() {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.6\" fill=\"{color}\"/>\n",
                x_pos(i),
                y_pos(v)
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
             fill=\"{color}\">{}</text>\n",
            MARGIN_LEFT + plot_w - 150.0,
            MARGIN_TOP + 16.0 * (s_idx as f64 + 1.0),
            escape(label)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// A labeled scatter of points in one factor plane, axes crossing at the
/// origin.
pub fn scatter_plot(
    title: &str,
    x_axis: &str,
    y_axis: &str,
    points: &[(String, f64, f64)],
) -> String {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let (x_min, x_max) = finite_range(points.iter().map(|p| p.1));
    let (y_min, y_max) = finite_range(points.iter().map(|p| p.2));
    // symmetric limits keep the origin centered, as factor planes expect
    let x_lim = x_min.abs().max(x_max.abs()).max(1e-9);
    let y_lim = y_min.abs().max(y_max.abs()).max(1e-9);
    let x_pos = |v: f64| MARGIN_LEFT + plot_w * (v + x_lim) / (2.0 * x_lim);
    let y_pos = |v: f64| MARGIN_TOP + plot_h * (1.0 - (v + y_lim) / (2.0 * y_lim));

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         width=\"{WIDTH}\" height=\"{HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"17\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));
    // origin cross
    svg.push_str(&format!(
        "<line x1=\"{:.1}\" y1=\"{MARGIN_TOP:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" \
         stroke=\"#bbbbbb\"/>\n",
        x_pos(0.0),
        x_pos(0.0),
        MARGIN_TOP + plot_h
    ));
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_LEFT:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" \
         stroke=\"#bbbbbb\"/>\n",
        y_pos(0.0),
        MARGIN_LEFT + plot_w,
        y_pos(0.0)
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"12\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 18.0,
        escape(x_axis)
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"12\" transform=\"rotate(-90 18 {:.1})\">{}</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape(y_axis)
    ));
    for (label, x, y) in points {
        let (px, py) = (x_pos(*x), y_pos(*y));
        svg.push_str(&format!(
            "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"3\" fill=\"#1f77b4\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\" \
             fill=\"#333333\">{}</text>\n",
            px + 4.0,
            py - 4.0,
            escape(label)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
