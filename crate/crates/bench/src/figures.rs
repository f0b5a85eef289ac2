//! Static SVG line charts with shaded bands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::aggregate::Aggregate;
use crate::error::{BenchError, Result};

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 400.0;
pub const MARGIN: f64 = 56.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Affine map from data coordinates to pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axes {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Axes {
    /// Axes covering every value given, padded by 5% vertically. Degenerate
    /// ranges are widened to unit size.
    pub fn fit(x_max: f64, ys: impl IntoIterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = ys
            .into_iter()
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if lo > hi {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.05 * (hi - lo);
        Axes { x_min: 1.0, x_max: x_max.max(2.0), y_min: lo - pad, y_max: hi + pad }
    }

    pub fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - 2.0 * MARGIN)
    }

    pub fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - 2.0 * MARGIN)
    }
}

/// One plotted curve with an optional band.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub label: String,
    pub mean: Vec<f64>,
    pub band: Option<(Vec<f64>, Vec<f64>)>,
}

fn points(axes: &Axes, ys: &[f64]) -> String {
    ys.iter()
        .enumerate()
        .map(|(k, y)| format!("{:.3},{:.3}", axes.px((k + 1) as f64), axes.py(*y)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render curves (and horizontal reference lines) as a standalone SVG.
pub fn line_chart(title: &str, y_label: &str, curves: &[Curve], references: &[(String, f64)]) -> String {
    let steps = curves.iter().map(|c| c.mean.len()).max().unwrap_or(0);
    let ys = curves
        .iter()
        .flat_map(|c| {
            let band = c.band.iter().flat_map(|(lo, hi)| lo.iter().chain(hi));
            c.mean.iter().chain(band).copied().collect::<Vec<_>>()
        })
        .chain(references.iter().map(|r| r.1));
    let axes = Axes::fit(steps as f64, ys);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ =
        writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));

    // Frame and ticks.
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(s, r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let v = axes.y_min + (axes.y_max - axes.y_min) * k as f64 / 4.0;
        let y = axes.py(v);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.3}" text-anchor="end">{}</text>"#,
            x0 - 4.0,
            y + 4.0,
            tick(v, (axes.y_max - axes.y_min) / 4.0)
        );
        let xv = axes.x_min + (axes.x_max - axes.x_min) * k as f64 / 4.0;
        let _ =
            writeln!(s, r#"<text x="{:.3}" y="{}" text-anchor="middle">{}</text>"#, axes.px(xv), y0 + 16.0, xv.round());
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">step t</text>"#, WIDTH / 2.0, HEIGHT - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );

    for (label, v) in references {
        let y = axes.py(*v);
        let _ = writeln!(
            s,
            r#"<line class="reference" x1="{x0}" y1="{y:.3}" x2="{x1}" y2="{y:.3}" stroke="gray" stroke-dasharray="6 4"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.3}" text-anchor="end" fill="gray">{}</text>"#,
            x1,
            y - 4.0,
            escape(label)
        );
    }

    for (k, c) in curves.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if let Some((lo, hi)) = &c.band {
            let mut edge = points(&axes, hi);
            let lower: Vec<f64> = lo.iter().rev().copied().collect();
            let rev = lower
                .iter()
                .enumerate()
                .map(|(j, y)| format!("{:.3},{:.3}", axes.px((lo.len() - j) as f64), axes.py(*y)))
                .collect::<Vec<_>>()
                .join(" ");
            if !rev.is_empty() {
                edge.push(' ');
                edge.push_str(&rev);
            }
            let _ = writeln!(
                s,
                r#"<polygon class="band" points="{edge}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#
            );
        }
        let _ = writeln!(
            s,
            r#"<polyline class="mean" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            points(&axes, &c.mean)
        );
        let ly = MARGIN + 16.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            x0 + 10.0,
            x0 + 30.0
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, x0 + 36.0, ly + 4.0, escape(&c.label));
    }
    s.push_str("</svg>\n");
    s
}

/// Tick label with enough decimals to tell neighbouring ticks apart.
fn tick(v: f64, step: f64) -> String {
    if !(1e-4..1e6).contains(&step) {
        return format!("{v:.2e}");
    }
    let decimals = (1.0 - step.log10().floor()).clamp(0.0, 6.0) as usize;
    format!("{v:.decimals$}")
}

fn curves(agg: &Aggregate, series: &str, offset: f64) -> Vec<Curve> {
    agg.algorithms
        .iter()
        .filter_map(|a| {
            let s = a.series(series)?;
            let shift = |v: Vec<f64>| v.into_iter().map(|x| x + offset).collect::<Vec<_>>();
            let (lo, hi) = s.band(agg.band_multiplier);
            Some(Curve { label: a.algorithm.clone(), mean: shift(s.mean.clone()), band: Some((shift(lo), shift(hi))) })
        })
        .collect()
}

/// Write the standard figure set for an aggregate into `dir`; returns the
/// file paths.
pub fn emit_figures(agg: &Aggregate, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let m = agg.band_multiplier;
    let mut figs = vec![
        (
            "cum_regret.svg".to_string(),
            line_chart(
                &format!("{}: cumulative contextual regret (±{m} sd)", agg.name),
                "R_t",
                &curves(agg, "cum_regret", 0.0),
                &[],
            ),
        ),
        (
            "cum_cost.svg".to_string(),
            line_chart(
                &format!("{}: cumulative cost (±{m} sd)", agg.name),
                "sum of f",
                &curves(agg, "cum_cost", 0.0),
                &[],
            ),
        ),
    ];
    for i in 1..=agg.n_constraints {
        let offset = agg.constraint_offsets.get(i - 1).copied().unwrap_or(0.0);
        figs.push((
            format!("cum_g_{i}.svg"),
            line_chart(
                &format!("{}: cumulative constraint {i} (±{m} sd)", agg.name),
                &format!("sum of g_{i}"),
                &curves(agg, &format!("cum_g_{i}"), 0.0),
                &[("zero".to_string(), 0.0)],
            ),
        ));
        figs.push((
            format!("avg_g_{i}.svg"),
            line_chart(
                &format!("{}: running-average constraint {i} (±{m} sd)", agg.name),
                &format!("mean of g_{i} + {offset}"),
                &curves(agg, &format!("avg_g_{i}"), offset),
                &[("threshold".to_string(), offset)],
            ),
        ));
    }
    let mut out = Vec::new();
    for (name, svg) in figs {
        let path = dir.join(name);
        std::fs::write(&path, svg).map_err(|e| BenchError::io(&path, e))?;
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregate::{AlgorithmSummary, Series};

    fn parse_points(svg: &str, class: &str) -> Vec<(f64, f64)> {
        let tag = format!(r#"class="{class}" points=""#);
        let start = svg.find(&tag).unwrap() + tag.len();
        let end = start + svg[start..].find('"').unwrap();
        svg[start..end]
            .split_whitespace()
            .map(|p| {
                let (x, y) = p.split_once(',').unwrap();
                (x.parse().unwrap(), y.parse().unwrap())
            })
            .collect()
    }

    #[test]
    fn empty_aggregate_gives_empty_axes() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_figures(&Aggregate::empty("none", 0.5), dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        let svg = std::fs::read_to_string(&files[0]).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(!svg.contains("polyline"));
    }

    #[test]
    fn constant_series_is_horizontal() {
        let c = Curve { label: "c".into(), mean: vec![3.0; 5], band: None };
        let svg = line_chart("t", "y", &[c], &[]);
        let pts = parse_points(&svg, "mean");
        let axes = Axes::fit(5.0, [3.0; 5]);
        assert_eq!(pts.len(), 5);
        for (k, (x, y)) in pts.iter().enumerate() {
            assert!((x - axes.px((k + 1) as f64)).abs() < 1e-3);
            assert!((y - axes.py(3.0)).abs() < 1e-3);
        }
        // Range [2.5, 3.5] padded by 5%: the constant sits mid-height.
        assert!((axes.py(3.0) - HEIGHT / 2.0).abs() < 1e-9);
    }

    #[test]
    fn band_upper_edge_is_mean_plus_m_std() {
        let s = Series { name: "cum_regret".into(), mean: vec![1.0, 2.0, 4.0], std: vec![0.5, 1.0, 2.0] };
        let agg = Aggregate {
            name: "x".into(),
            band_multiplier: 0.5,
            n_constraints: 0,
            constraint_offsets: vec![],
            algorithms: vec![AlgorithmSummary { algorithm: "a".into(), replicates: 3, series: vec![s.clone()] }],
        };
        let cs = curves(&agg, "cum_regret", 0.0);
        let svg = line_chart("t", "y", &cs, &[]);
        let band = parse_points(&svg, "band");
        assert_eq!(band.len(), 6);
        let all = s.mean.iter().zip(&s.std).flat_map(|(m, d)| [m - 0.5 * d, m + 0.5 * d]);
        let axes = Axes::fit(3.0, all);
        for k in 0..3 {
            let upper = s.mean[k] + 0.5 * s.std[k];
            assert!((band[k].1 - axes.py(upper)).abs() < 1e-3);
            let lower = s.mean[2 - k] - 0.5 * s.std[2 - k];
            assert!((band[3 + k].1 - axes.py(lower)).abs() < 1e-3);
        }
    }
}
