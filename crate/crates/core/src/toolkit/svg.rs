//! Static line chart of mean convergence curves.

use std::fmt::Write as _;

use crate::toolkit::bench::MethodCurve;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 540.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const MAX_POINTS: usize = 800;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Indices to plot: evenly spaced, always including both ends.
fn sample_indices(len: usize) -> Vec<usize> {
    if len <= MAX_POINTS {
        return (0..len).collect();
    }
    let mut idx: Vec<usize> = (0..MAX_POINTS)
        .map(|k| k * (len - 1) / (MAX_POINTS - 1))
        .collect();
    idx.dedup();
    idx
}

/// One polyline per method over `x = evaluation`, `y = mean best fitness`.
pub fn render_svg(curves: &[MethodCurve]) -> String {
    let xmax = curves
        .iter()
        .map(|c| c.mean.len())
        .max()
        .unwrap_or(0)
        .max(1) as f64;
    let values = curves.iter().flat_map(|c| c.mean.iter().copied());
    let (mut ylo, mut yhi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !ylo.is_finite() {
        (ylo, yhi) = (0.0, 1.0);
    }
    if yhi - ylo < 1e-12 {
        ylo -= 0.5;
        yhi += 0.5;
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - 1.0).max(0.0) / (xmax - 1.0).max(1.0) * pw;
    let sy = |y: f64| TOP + (yhi - y) / (yhi - ylo) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let y = ylo + f * (yhi - ylo);
        let x = 1.0 + f * (xmax - 1.0);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.2}</text>"#,
            LEFT - 6.0,
            sy(y) + 4.0,
            y
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.0}</text>"#,
            sx(x),
            TOP + ph + 18.0,
            x
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">evaluations</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">best fitness</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    for (i, c) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = sample_indices(c.mean.len())
            .into_iter()
            .map(|j| format!("{:.2},{:.2}", sx((j + 1) as f64), sy(c.mean[j])))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            lx + 25.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 32.0,
            ly + 4.0,
            c.method
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heuristics::Method;

    fn curve(method: Method, mean: Vec<f64>) -> MethodCurve {
        MethodCurve {
            method,
            min: mean.clone(),
            max: mean.clone(),
            mean,
        }
    }

    #[test]
    fn one_polyline_per_method() {
        let svg = render_svg(&[
            curve(Method::Ga, vec![5.0, 3.0, 3.0]),
            curve(Method::Sa, vec![4.0, 4.0]),
        ]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains(r#"viewBox="0 0 960 540""#));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(">ga</text>") && svg.contains(">sa</text>"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn long_and_flat_curves_render() {
        let svg = render_svg(&[curve(Method::Rhc, vec![2.0; 5000])]);
        let pts = svg
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap();
        assert_eq!(pts.split(' ').count(), MAX_POINTS);
        assert!(!svg.contains("NaN"));
        assert!(render_svg(&[]).contains("</svg>"));
    }
}
