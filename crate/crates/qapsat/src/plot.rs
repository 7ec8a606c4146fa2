//! SVG renderings of the fitted tables.
//!
//! Output is plain text built with fixed-precision formatting, so identical
//! tables give identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;

use crate::analysis::{
    phase_parameter, FitTables, PowerFit, KIND_EFFORT, KIND_PROPORTION, KIND_SUCCESS, MODEL_CORR_EFFORT,
    MODEL_CORR_SUCCESS, MODEL_EFFORT, MODEL_LOGIT, MODEL_POWER, MODEL_SUCCESS,
};
use crate::error::{Error, Result};

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

const PANEL_W: f64 = 300.0;
const PANEL_H: f64 = 220.0;
const MARGIN_L: f64 = 56.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_B: f64 = 40.0;
const LEGEND_W: f64 = 90.0;

#[derive(Clone, Debug)]
struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    /// Markers only, no connecting line.
    scatter: bool,
}

#[derive(Clone, Debug)]
struct Panel {
    title: String,
    x_label: String,
    y_label: String,
    series: Vec<Series>,
}

impl Panel {
    fn new(title: impl Into<String>, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
        }
    }

    fn bounds(&self) -> Option<(f64, f64, f64, f64)> {
        let mut it = self
            .series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter(|p| p.0.is_finite() && p.1.is_finite());
        let first = it.next()?;
        let (mut x0, mut x1, mut y0, mut y1) = (first.0, first.0, first.1, first.1);
        for p in it {
            x0 = x0.min(p.0);
            x1 = x1.max(p.0);
            y0 = y0.min(p.1);
            y1 = y1.max(p.1);
        }
        Some((x0, x1, y0, y1))
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Tick positions covering `[lo, hi]` with 1-2-5 spacing.
fn ticks(lo: f64, hi: f64) -> (f64, f64, Vec<f64>) {
    let (lo, hi) = if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    };
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|f| f * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let start = (lo / step).floor() * step;
    let end = (hi / step).ceil() * step;
    let count = ((end - start) / step).round() as usize;
    let ts = (0..=count).map(|i| start + step * i as f64).collect();
    (start, end, ts)
}

fn tick_label(v: f64) -> String {
    if v.abs() >= 1e5 {
        format!("{v:.1e}")
    } else if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').to_string()
    }
}

fn render(title: &str, panels: &[Panel], columns: usize) -> String {
    let columns = columns.max(1).min(panels.len().max(1));
    let rows = panels.len().div_ceil(columns);
    let cell_w = MARGIN_L + PANEL_W + MARGIN_R + LEGEND_W;
    let cell_h = MARGIN_T + PANEL_H + MARGIN_B;
    let width = cell_w * columns as f64;
    let height = cell_h * rows as f64 + 30.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        width / 2.0,
        escape(title)
    );
    for (idx, panel) in panels.iter().enumerate() {
        let ox = cell_w * (idx % columns) as f64;
        let oy = 30.0 + cell_h * (idx / columns) as f64;
        render_panel(&mut s, panel, ox, oy);
    }
    s.push_str("</svg>\n");
    s
}

fn render_panel(s: &mut String, panel: &Panel, ox: f64, oy: f64) {
    let (px, py) = (ox + MARGIN_L, oy + MARGIN_T);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">{}</text>"#,
        px + PANEL_W / 2.0,
        oy + 16.0,
        escape(&panel.title)
    );
    let _ = writeln!(
        s,
        r##"<rect x="{px:.1}" y="{py:.1}" width="{PANEL_W:.1}" height="{PANEL_H:.1}" fill="none" stroke="#444"/>"##
    );
    let Some((x0, x1, y0, y1)) = panel.bounds() else {
        return;
    };
    let (xa, xb, xt) = ticks(x0, x1);
    let (ya, yb, yt) = ticks(y0.min(0.0).max(y0 - (y1 - y0).abs()), y1);
    let sx = |x: f64| px + (x - xa) / (xb - xa) * PANEL_W;
    let sy = |y: f64| py + PANEL_H - (y - ya) / (yb - ya) * PANEL_H;
    for t in &xt {
        let x = sx(*t);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#444"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"##,
            py + PANEL_H,
            py + PANEL_H + 4.0,
            py + PANEL_H + 16.0,
            tick_label(*t)
        );
    }
    for t in &yt {
        let y = sy(*t);
        let _ = writeln!(
            s,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{px:.1}" y2="{y:.1}" stroke="#444"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            px - 4.0,
            px - 6.0,
            y + 4.0,
            tick_label(*t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        px + PANEL_W / 2.0,
        py + PANEL_H + 32.0,
        escape(&panel.x_label)
    );
    let (lx, ly) = (ox + 14.0, py + PANEL_H / 2.0);
    let _ = writeln!(
        s,
        r#"<text x="{lx:.1}" y="{ly:.1}" text-anchor="middle" transform="rotate(-90 {lx:.1} {ly:.1})">{}</text>"#,
        escape(&panel.y_label)
    );
    for (i, series) in panel.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = series
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| (sx(x), sy(y)))
            .collect();
        if series.scatter {
            for (x, y) in &pts {
                let _ = writeln!(s, r#"<circle cx="{x:.1}" cy="{y:.1}" r="2.5" fill="{color}"/>"#);
            }
        } else if !pts.is_empty() {
            let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                path.join(" ")
            );
        }
        let ky = py + 10.0 + 14.0 * i as f64;
        let kx = px + PANEL_W + 8.0;
        let _ = writeln!(
            s,
            r#"<rect x="{kx:.1}" y="{:.1}" width="10" height="10" fill="{color}"/><text x="{:.1}" y="{ky:.1}">{}</text>"#,
            ky - 9.0,
            kx + 14.0,
            escape(&series.label)
        );
    }
}

/// `(n -> m1 -> points)` for one curve kind.
fn faceted(tables: &FitTables, kind: &str) -> BTreeMap<usize, BTreeMap<usize, Vec<(f64, f64)>>> {
    let mut out: BTreeMap<usize, BTreeMap<usize, Vec<(f64, f64)>>> = BTreeMap::new();
    for c in tables.curves_of(kind) {
        out.entry(c.n)
            .or_default()
            .entry(c.m1)
            .or_default()
            .push((c.m as f64, c.value));
    }
    out
}

fn curve_figure(tables: &FitTables, kind: &str, title: &str, y_label: &str) -> Option<String> {
    let facets = faceted(tables, kind);
    if facets.is_empty() {
        return None;
    }
    let panels: Vec<Panel> = facets
        .into_iter()
        .map(|(n, by_m1)| {
            let mut p = Panel::new(format!("n = {n}"), "m", y_label);
            p.series = by_m1
                .into_iter()
                .map(|(m1, points)| Series {
                    label: format!("m1={m1}"),
                    points,
                    scatter: false,
                })
                .collect();
            p
        })
        .collect();
    Some(render(title, &panels, 3))
}

fn critical_figure(tables: &FitTables) -> Option<String> {
    let mut by_n: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    let mut by_m1: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for f in tables.fits_of(MODEL_LOGIT) {
        let (Some(n), Some(m1), Some(mc)) = (f.n, f.m1, f.m_c) else {
            continue;
        };
        by_n.entry(n).or_default().push((m1 as f64, mc));
        by_m1.entry(m1).or_default().push((n as f64, mc));
    }
    if by_n.is_empty() {
        return None;
    }
    let mut left = Panel::new("m_c vs m1", "m1", "m_c");
    left.series = by_n
        .into_iter()
        .map(|(n, points)| Series {
            label: format!("n={n}"),
            points,
            scatter: false,
        })
        .collect();
    let mut right = Panel::new("m_c vs n", "n", "m_c");
    right.series = by_m1
        .into_iter()
        .map(|(m1, points)| Series {
            label: format!("m1={m1}"),
            points,
            scatter: false,
        })
        .collect();
    Some(render("Critical number of clauses", &[left, right], 2))
}

fn power_from_tables(tables: &FitTables) -> Option<PowerFit> {
    let f = tables.fits_of(MODEL_POWER).next()?;
    Some(PowerFit {
        log_k: f.log_k?,
        alpha1: f.alpha1?,
        alpha2: f.alpha2?,
        r_squared_log: f.r_squared.unwrap_or(f64::NAN),
        r_squared_raw: f.r_squared_raw.unwrap_or(f64::NAN),
        rows_used: f.points_used.unwrap_or(0),
        rows_excluded: 0,
    })
}

fn collapse_figure(tables: &FitTables) -> Option<String> {
    let power = power_from_tables(tables)?;
    let facets = faceted(tables, KIND_PROPORTION);
    if facets.is_empty() {
        return None;
    }
    let mut panel = Panel::new(
        format!(
            "k = {:.3}, alpha1 = {:.3}, alpha2 = {:.3}",
            power.k(),
            power.alpha1,
            power.alpha2
        ),
        "m / (n^alpha1 m1^alpha2)",
        "proportion satisfied",
    );
    for (n, by_m1) in facets {
        let points = by_m1
            .into_iter()
            .flat_map(|(m1, pts)| {
                pts.into_iter()
                    .map(move |(m, p)| (phase_parameter(n as f64, m1 as f64, m, &power), p))
            })
            .collect();
        panel.series.push(Series {
            label: format!("n={n}"),
            points,
            scatter: true,
        });
    }
    Some(render("Satisfaction against the phase parameter", &[panel], 1))
}

fn relation_panel(tables: &FitTables, model: &str, corr_model: &str, title: &str) -> Option<Panel> {
    let m_c: BTreeMap<(usize, usize), f64> = tables
        .fits_of(MODEL_LOGIT)
        .filter_map(|f| Some(((f.n?, f.m1?), f.m_c?)))
        .collect();
    let mut by_n: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for f in tables.fits_of(model) {
        let (Some(n), Some(m1), Some(mt)) = (f.n, f.m1, f.m_t) else {
            continue;
        };
        if let Some(mc) = m_c.get(&(n, m1)) {
            by_n.entry(n).or_default().push((*mc, mt));
        }
    }
    if by_n.is_empty() {
        return None;
    }
    let corr = tables.fits_of(corr_model).find(|f| f.n.is_none());
    let title = match corr.and_then(|c| Some((c.rho?, c.beta1?))) {
        Some((rho, slope)) => format!("{title} (rho = {rho:.3}, slope = {slope:.3})"),
        None => title.to_string(),
    };
    let mut p = Panel::new(title, "m_c", "m_t");
    p.series = by_n
        .into_iter()
        .map(|(n, points)| Series {
            label: format!("n={n}"),
            points,
            scatter: true,
        })
        .collect();
    Some(p)
}

fn relation_figure(tables: &FitTables) -> Option<String> {
    let panels: Vec<Panel> = [
        relation_panel(tables, MODEL_EFFORT, MODEL_CORR_EFFORT, "branch-and-bound"),
        relation_panel(tables, MODEL_SUCCESS, MODEL_CORR_SUCCESS, "tabu search"),
    ]
    .into_iter()
    .flatten()
    .collect();
    if panels.is_empty() {
        return None;
    }
    Some(render(
        "Critical parameters of satisfaction and solver behaviour",
        &panels,
        2,
    ))
}

/// File names of the six figures, in order.
pub const FIGURE_FILES: [&str; 6] = [
    "fig2_proportions.svg",
    "fig3_critical.svg",
    "fig4_collapse.svg",
    "fig5_effort.svg",
    "fig6_success.svg",
    "fig7_relation.svg",
];

/// Renders every figure the tables support into `out_dir`, returning the
/// written paths. Figures without data are skipped with a warning.
pub fn emit_plots(tables: &FitTables, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if tables.is_empty() {
        warn!("nothing to plot");
        return Ok(Vec::new());
    }
    let figures = [
        curve_figure(
            tables,
            KIND_PROPORTION,
            "Proportion of satisfied instances",
            "proportion satisfied",
        ),
        critical_figure(tables),
        collapse_figure(tables),
        curve_figure(tables, KIND_EFFORT, "Branch-and-bound effort", "mean nodes expanded"),
        curve_figure(tables, KIND_SUCCESS, "Tabu search success rate", "success rate"),
        relation_figure(tables),
    ];
    let mut written = Vec::new();
    for (name, svg) in FIGURE_FILES.iter().zip(figures) {
        let Some(svg) = svg else {
            warn!("{name}: no data, skipped");
            continue;
        };
        if written.is_empty() {
            fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        }
        let path = out_dir.join(name);
        fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
