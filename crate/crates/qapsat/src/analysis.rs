//! Curve extraction and model fits over experiment ledgers.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::path::Path;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::rng_from_seed;
use crate::harness::RunRecord;

/// A `(n, m1)` cell of the design; curves run over `m` inside it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub n: usize,
    pub m1: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub m: usize,
    pub value: f64,
    pub samples: usize,
}

/// Per-`m` aggregate of one cell, sorted by `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct CellCurve {
    pub cell: CellKey,
    pub points: Vec<CurvePoint>,
}

/// Proportion of satisfied instances per `m`.
pub type ProportionCurve = CellCurve;

impl CellCurve {
    pub fn xy(&self) -> (Vec<f64>, Vec<f64>) {
        self.points.iter().map(|p| (p.m as f64, p.value)).unzip()
    }
}

fn group_curves<F>(rows: &[RunRecord], value: F) -> Vec<CellCurve>
where
    F: Fn(&RunRecord) -> Option<f64>,
{
    let mut acc: BTreeMap<CellKey, BTreeMap<usize, (f64, usize)>> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.is_usable()) {
        if let Some(v) = value(row) {
            let slot = acc
                .entry(CellKey { n: row.n, m1: row.m1 })
                .or_default()
                .entry(row.m)
                .or_insert((0.0, 0));
            slot.0 += v;
            slot.1 += 1;
        }
    }
    acc.into_iter()
        .map(|(cell, by_m)| CellCurve {
            cell,
            points: by_m
                .into_iter()
                .map(|(m, (sum, count))| CurvePoint {
                    m,
                    value: sum / count as f64,
                    samples: count,
                })
                .collect(),
        })
        .collect()
}

/// Groups proven rows by `(n, m1)` and reports the satisfied share per `m`.
pub fn satisfaction_proportions(rows: &[RunRecord]) -> Vec<ProportionCurve> {
    group_curves(rows, |r| r.satisfied.map(|s| if s { 1.0 } else { 0.0 }))
}

/// Mean branch-and-bound node count per `(n, m1, m)`.
pub fn effort_curves(rows: &[RunRecord]) -> Vec<CellCurve> {
    group_curves(rows, |r| r.bnb_nodes.map(|v| v as f64))
}

/// Mean wall-clock seconds per cell; empty unless the ledger recorded them.
pub fn seconds_curves(rows: &[RunRecord]) -> Vec<CellCurve> {
    group_curves(rows, |r| r.bnb_seconds)
}

/// Mean tabu-search success rate per cell.
pub fn success_curves(rows: &[RunRecord]) -> Vec<CellCurve> {
    group_curves(rows, |r| r.rots_success_rate)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub beta0: f64,
    pub beta1: f64,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub points_used: usize,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.beta0 + self.beta1 * x
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn r_squared(y: &[f64], fitted: impl Iterator<Item = f64>) -> f64 {
    let my = mean(y);
    let sst: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let sse: f64 = y.iter().zip(fitted).map(|(v, f)| (v - f).powi(2)).sum();
    if sst == 0.0 {
        if sse == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - sse / sst
    }
}

fn ols_line(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::contract("x and y lengths differ"));
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx.is_nan() || sxx <= 0.0 {
        return Err(Error::NoFit("regressor is constant".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let beta1 = sxy / sxx;
    Ok((my - beta1 * mx, beta1))
}

/// Ordinary least squares `y = beta0 + beta1 x` with adjusted R².
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() < 3 {
        return Err(Error::NoFit(format!("{} points, need at least 3", x.len())));
    }
    let (beta0, beta1) = ols_line(x, y)?;
    let r2 = r_squared(y, x.iter().map(|v| beta0 + beta1 * v));
    let n = x.len() as f64;
    Ok(LinearFit {
        beta0,
        beta1,
        r_squared: r2,
        adj_r_squared: 1.0 - (1.0 - r2) * (n - 1.0) / (n - 2.0),
        points_used: x.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogitFit {
    pub beta0: f64,
    pub beta1: f64,
    /// `-beta0 / beta1`, the `m` where the fitted proportion is one half.
    pub m_c: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

impl LogitFit {
    pub fn probability(&self, m: f64) -> f64 {
        1.0 / (1.0 + (-(self.beta0 + self.beta1 * m)).exp())
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// OLS of `logit(p)` on `m` over points with `0 < p < 1`.
pub fn logit_fit(curve: &ProportionCurve) -> Result<LogitFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = curve
        .points
        .iter()
        .filter(|p| p.value > 0.0 && p.value < 1.0)
        .map(|p| (p.m as f64, logit(p.value)))
        .unzip();
    if x.len() < 2 {
        return Err(Error::NoFit(format!(
            "n={} m1={}: {} interior proportion(s), need 2",
            curve.cell.n,
            curve.cell.m1,
            x.len()
        )));
    }
    let (beta0, beta1) = ols_line(&x, &y)?;
    if beta1 == 0.0 {
        return Err(Error::NoFit("flat logit line".into()));
    }
    Ok(LogitFit {
        beta0,
        beta1,
        m_c: -beta0 / beta1,
        r_squared: r_squared(&y, x.iter().map(|v| beta0 + beta1 * v)),
        points_used: x.len(),
    })
}

/// Which way the fitted sigmoid may run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Increasing,
    /// Searched with negative rates.
    Decreasing,
    Either,
}

/// Search space of [`sigmoid_fit_grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct SigmoidGrid {
    /// Bounds on `L` as multiples of the largest observed value.
    pub l_scale: (f64, f64),
    pub l_steps: usize,
    /// Rate magnitudes `r_step, 2 r_step, ..., r_steps · r_step`.
    pub r_step: f64,
    pub r_steps: usize,
    pub m_t_step: f64,
    /// Second pass over `[m_t* - m_t_step, m_t* + m_t_step]` at this step.
    pub m_t_refine: f64,
    pub orientation: Orientation,
}

impl Default for SigmoidGrid {
    fn default() -> Self {
        Self {
            l_scale: (0.5, 1.5),
            l_steps: 41,
            r_step: 0.05,
            r_steps: 60,
            m_t_step: 1.0,
            m_t_refine: 0.1,
            orientation: Orientation::Increasing,
        }
    }
}

impl SigmoidGrid {
    pub fn with_orientation(orientation: Orientation) -> Self {
        Self {
            orientation,
            ..Self::default()
        }
    }

    pub fn l_values(&self, vmax: f64) -> Vec<f64> {
        let (lo, hi) = self.l_scale;
        if self.l_steps <= 1 {
            return vec![lo * vmax];
        }
        (0..self.l_steps)
            .map(|i| (lo + (hi - lo) * i as f64 / (self.l_steps - 1) as f64) * vmax)
            .collect()
    }

    pub fn r_values(&self) -> Vec<f64> {
        let mags = (1..=self.r_steps).map(|j| self.r_step * j as f64);
        match self.orientation {
            Orientation::Increasing => mags.collect(),
            Orientation::Decreasing => mags.map(|r| -r).collect(),
            Orientation::Either => {
                let pos: Vec<f64> = mags.collect();
                pos.iter().map(|r| -r).chain(pos.iter().copied()).collect()
            }
        }
    }

    fn coarse_m_t(&self, lo: f64, hi: f64) -> Vec<f64> {
        let steps = ((hi - lo) / self.m_t_step).floor() as usize;
        (0..=steps).map(|i| lo + self.m_t_step * i as f64).collect()
    }

    fn refined_m_t(&self, center: f64) -> Vec<f64> {
        let half = (self.m_t_step / self.m_t_refine).round() as i64;
        (-half..=half).map(|i| center + self.m_t_refine * i as f64).collect()
    }
}

/// `t(m) = L / (1 + exp(-r (m - m_t)))`; decreasing curves carry `r < 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmoidFit {
    pub l: f64,
    pub r: f64,
    pub m_t: f64,
    pub mse: f64,
    pub r_squared: f64,
}

pub fn sigmoid(l: f64, r: f64, m_t: f64, m: f64) -> f64 {
    l / (1.0 + (-r * (m - m_t)).exp())
}

impl SigmoidFit {
    pub fn evaluate(&self, m: f64) -> f64 {
        sigmoid(self.l, self.r, self.m_t, m)
    }
}

/// Mean squared error of one parameter triple.
pub fn sigmoid_mse(points: &[(f64, f64)], l: f64, r: f64, m_t: f64) -> f64 {
    points
        .iter()
        .map(|&(m, v)| (sigmoid(l, r, m_t, m) - v).powi(2))
        .sum::<f64>()
        / points.len() as f64
}

struct Best {
    l: f64,
    r: f64,
    m_t: f64,
    sse: f64,
}

fn scan(points: &[(f64, f64)], ls: &[f64], rs: &[f64], mts: &[f64], best: &mut Best) {
    let syy: f64 = points.iter().map(|p| p.1 * p.1).sum();
    let mut s = vec![0.0; points.len()];
    for &m_t in mts {
        for &r in rs {
            let (mut sss, mut ssy) = (0.0, 0.0);
            for (si, &(m, v)) in s.iter_mut().zip(points) {
                *si = 1.0 / (1.0 + (-r * (m - m_t)).exp());
                sss += *si * *si;
                ssy += *si * v;
            }
            for &l in ls {
                let sse = l * l * sss - 2.0 * l * ssy + syy;
                if sse < best.sse {
                    *best = Best { l, r, m_t, sse };
                }
            }
        }
    }
}

/// Exhaustive grid search for the sigmoid minimizing the mean squared error.
pub fn sigmoid_fit_grid(points: &[(f64, f64)], grid: &SigmoidGrid) -> Result<SigmoidFit> {
    if points.len() < 4 {
        return Err(Error::NoFit(format!("{} points, need at least 4", points.len())));
    }
    if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::NoFit("non-finite point".into()));
    }
    let first = points[0].1;
    if points.iter().all(|p| p.1 == first) {
        return Err(Error::NoFit("all values equal".into()));
    }
    let vmax = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if vmax <= 0.0 {
        return Err(Error::NoFit("largest value is not positive".into()));
    }
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let ls = grid.l_values(vmax);
    let rs = grid.r_values();
    let mut best = Best {
        l: f64::NAN,
        r: f64::NAN,
        m_t: f64::NAN,
        sse: f64::INFINITY,
    };
    scan(points, &ls, &rs, &grid.coarse_m_t(lo, hi), &mut best);
    if grid.m_t_refine > 0.0 && grid.m_t_refine < grid.m_t_step {
        scan(points, &ls, &rs, &grid.refined_m_t(best.m_t), &mut best);
    }
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let fit = SigmoidFit {
        l: best.l,
        r: best.r,
        m_t: best.m_t,
        mse: sigmoid_mse(points, best.l, best.r, best.m_t),
        r_squared: 0.0,
    };
    Ok(SigmoidFit {
        r_squared: r_squared(&y, points.iter().map(|p| fit.evaluate(p.0))),
        ..fit
    })
}

/// `log m_c = log_k + alpha1 log n + alpha2 log m1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub log_k: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub r_squared_log: f64,
    /// R² of `exp(prediction)` against the untransformed `m_c`.
    pub r_squared_raw: f64,
    pub rows_used: usize,
    pub rows_excluded: usize,
}

impl PowerFit {
    pub fn k(&self) -> f64 {
        self.log_k.exp()
    }

    pub fn predict(&self, n: f64, m1: f64) -> f64 {
        (self.log_k + self.alpha1 * n.ln() + self.alpha2 * m1.ln()).exp()
    }
}

/// Multilinear OLS on logs, solved by QR; rows with `m_c <= 0` are dropped.
pub fn power_model_fit(rows: &[(f64, f64, f64)]) -> Result<PowerFit> {
    let kept: Vec<(f64, f64, f64)> = rows
        .iter()
        .copied()
        .filter(|&(n, m1, mc)| mc > 0.0 && n > 0.0 && m1 > 0.0 && mc.is_finite())
        .collect();
    let excluded = rows.len() - kept.len();
    if excluded > 0 {
        warn!("power fit: {excluded} row(s) with non-positive values excluded");
    }
    if kept.len() < 4 {
        return Err(Error::NoFit(format!("{} usable rows, need at least 4", kept.len())));
    }
    let x = DMatrix::from_fn(kept.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => kept[i].0.ln(),
        _ => kept[i].1.ln(),
    });
    let y = DVector::from_iterator(kept.len(), kept.iter().map(|r| r.2.ln()));
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..3).map(|j| x.column(j).norm()).fold(0.0, f64::max);
    for j in 0..3 {
        if r[(j, j)].abs() <= 1e-10 * scale {
            return Err(Error::NoFit(format!(
                "design is rank deficient ({} is not identifiable)",
                ["intercept", "alpha1", "alpha2"][j]
            )));
        }
    }
    let qty = qr.q().transpose() * &y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::NoFit("singular triangular factor".into()))?;
    let fitted = &x * &beta;
    let ylog: Vec<f64> = y.iter().copied().collect();
    let raw: Vec<f64> = kept.iter().map(|r| r.2).collect();
    Ok(PowerFit {
        log_k: beta[0],
        alpha1: beta[1],
        alpha2: beta[2],
        r_squared_log: r_squared(&ylog, fitted.iter().copied()),
        r_squared_raw: r_squared(&raw, fitted.iter().map(|v| v.exp())),
        rows_used: kept.len(),
        rows_excluded: excluded,
    })
}

/// `m / (n^alpha1 · m1^alpha2)`.
pub fn phase_parameter(n: f64, m1: f64, m: f64, fit: &PowerFit) -> f64 {
    m / (n.powf(fit.alpha1) * m1.powf(fit.alpha2))
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::NoFit("need two equally long series of 2+ values".into()));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::NoFit("constant series".into()));
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalCorrelation {
    pub rho: f64,
    /// `m_t = beta0 + beta1 m_c`.
    pub line: LinearFit,
    pub cells: usize,
}

/// Pearson correlation and OLS line between two per-cell parameters over
/// the cells present in both maps.
pub fn critical_correlation(m_c: &BTreeMap<CellKey, f64>, m_t: &BTreeMap<CellKey, f64>) -> Result<CriticalCorrelation> {
    let (x, y): (Vec<f64>, Vec<f64>) = m_c.iter().filter_map(|(k, a)| m_t.get(k).map(|b| (*a, *b))).unzip();
    if x.len() < 3 {
        return Err(Error::NoFit(format!("{} shared cells, need at least 3", x.len())));
    }
    Ok(CriticalCorrelation {
        rho: pearson(&x, &y)?,
        line: linear_fit(&x, &y)?,
        cells: x.len(),
    })
}

/// Spread of `m_c` over bootstrap resamples of each `m` column's replicates,
/// as (mean, standard deviation) of the successful refits.
pub fn bootstrap_m_c(rows: &[RunRecord], cell: CellKey, resamples: usize, seed: u64) -> Result<(f64, f64)> {
    let mut by_m: BTreeMap<usize, Vec<bool>> = BTreeMap::new();
    for r in rows
        .iter()
        .filter(|r| r.is_usable() && r.n == cell.n && r.m1 == cell.m1)
    {
        by_m.entry(r.m).or_default().push(r.satisfied == Some(true));
    }
    if by_m.is_empty() {
        return Err(Error::NoFit(format!("no rows for n={} m1={}", cell.n, cell.m1)));
    }
    let mut rng = rng_from_seed(seed);
    let mut estimates = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let points = by_m
            .iter()
            .map(|(&m, sats)| {
                let hits = (0..sats.len()).filter(|_| sats[rng.gen_range(0..sats.len())]).count();
                CurvePoint {
                    m,
                    value: hits as f64 / sats.len() as f64,
                    samples: sats.len(),
                }
            })
            .collect();
        if let Ok(fit) = logit_fit(&CellCurve { cell, points }) {
            estimates.push(fit.m_c);
        }
    }
    if estimates.len() < 2 {
        return Err(Error::NoFit("too few successful resamples".into()));
    }
    let mu = mean(&estimates);
    let var = estimates.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (estimates.len() - 1) as f64;
    Ok((mu, var.sqrt()))
}

/// Everything `analyze` derives from a ledger.
#[derive(Clone, Debug, Default)]
pub struct AnalysisReport {
    pub proportions: Vec<ProportionCurve>,
    pub effort: Vec<CellCurve>,
    pub success: Vec<CellCurve>,
    pub logit: BTreeMap<CellKey, LogitFit>,
    /// `m_c = beta0 + beta1 m1` per dimension.
    pub linear_by_n: BTreeMap<usize, LinearFit>,
    pub power: Option<PowerFit>,
    pub effort_fits: BTreeMap<CellKey, SigmoidFit>,
    pub success_fits: BTreeMap<CellKey, SigmoidFit>,
    pub effort_correlation: Option<CriticalCorrelation>,
    pub effort_correlation_by_n: BTreeMap<usize, CriticalCorrelation>,
    pub success_correlation: Option<CriticalCorrelation>,
    /// `(model, cell, reason)` for every fit that could not be made.
    pub skipped: Vec<(String, Option<CellKey>, String)>,
}

fn sigmoid_fits(
    curves: &[CellCurve],
    orientation: Orientation,
    model: &str,
    skipped: &mut Vec<(String, Option<CellKey>, String)>,
) -> BTreeMap<CellKey, SigmoidFit> {
    let grid = SigmoidGrid::with_orientation(orientation);
    let mut fits = BTreeMap::new();
    for c in curves {
        let pts: Vec<(f64, f64)> = c.points.iter().map(|p| (p.m as f64, p.value)).collect();
        match sigmoid_fit_grid(&pts, &grid) {
            Ok(f) => {
                fits.insert(c.cell, f);
            }
            Err(e) => skipped.push((model.into(), Some(c.cell), e.to_string())),
        }
    }
    fits
}

/// Runs every fit the ledger supports.
pub fn analyze(rows: &[RunRecord]) -> AnalysisReport {
    let mut report = AnalysisReport {
        proportions: satisfaction_proportions(rows),
        effort: effort_curves(rows),
        success: success_curves(rows),
        ..AnalysisReport::default()
    };
    let unusable = rows.iter().filter(|r| !r.is_usable()).count();
    if unusable > 0 {
        warn!("{unusable} ledger row(s) unproven or failed; excluded");
    }

    for curve in &report.proportions {
        match logit_fit(curve) {
            Ok(f) => {
                report.logit.insert(curve.cell, f);
            }
            Err(e) => report.skipped.push(("logit".into(), Some(curve.cell), e.to_string())),
        }
    }

    let mut by_n: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (cell, fit) in &report.logit {
        let e = by_n.entry(cell.n).or_default();
        e.0.push(cell.m1 as f64);
        e.1.push(fit.m_c);
    }
    for (n, (x, y)) in by_n {
        match linear_fit(&x, &y) {
            Ok(f) => {
                report.linear_by_n.insert(n, f);
            }
            Err(e) => report.skipped.push((format!("linear n={n}"), None, e.to_string())),
        }
    }

    let triples: Vec<(f64, f64, f64)> = report
        .logit
        .iter()
        .map(|(c, f)| (c.n as f64, c.m1 as f64, f.m_c))
        .collect();
    match power_model_fit(&triples) {
        Ok(f) => report.power = Some(f),
        Err(e) => report.skipped.push(("power".into(), None, e.to_string())),
    }

    report.effort_fits = sigmoid_fits(
        &report.effort,
        Orientation::Increasing,
        "sigmoid-effort",
        &mut report.skipped,
    );
    report.success_fits = sigmoid_fits(
        &report.success,
        Orientation::Decreasing,
        "sigmoid-success",
        &mut report.skipped,
    );

    let m_c: BTreeMap<CellKey, f64> = report.logit.iter().map(|(k, f)| (*k, f.m_c)).collect();
    let effort_t: BTreeMap<CellKey, f64> = report.effort_fits.iter().map(|(k, f)| (*k, f.m_t)).collect();
    let success_t: BTreeMap<CellKey, f64> = report.success_fits.iter().map(|(k, f)| (*k, f.m_t)).collect();
    if !effort_t.is_empty() {
        match critical_correlation(&m_c, &effort_t) {
            Ok(c) => report.effort_correlation = Some(c),
            Err(e) => report.skipped.push(("correlation-effort".into(), None, e.to_string())),
        }
        let dims: std::collections::BTreeSet<usize> = effort_t.keys().map(|k| k.n).collect();
        for n in dims {
            let sub_c: BTreeMap<CellKey, f64> = m_c.iter().filter(|(k, _)| k.n == n).map(|(k, v)| (*k, *v)).collect();
            match critical_correlation(&sub_c, &effort_t) {
                Ok(c) => {
                    report.effort_correlation_by_n.insert(n, c);
                }
                Err(e) => report
                    .skipped
                    .push((format!("correlation-effort n={n}"), None, e.to_string())),
            }
        }
    }
    if !success_t.is_empty() {
        match critical_correlation(&m_c, &success_t) {
            Ok(c) => report.success_correlation = Some(c),
            Err(e) => report.skipped.push(("correlation-success".into(), None, e.to_string())),
        }
    }
    report
}

/// One fitted model, flattened for `fits.csv`. Unused columns stay empty.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub model: String,
    pub n: Option<usize>,
    pub m1: Option<usize>,
    pub beta0: Option<f64>,
    pub beta1: Option<f64>,
    pub m_c: Option<f64>,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub r: Option<f64>,
    pub m_t: Option<f64>,
    pub log_k: Option<f64>,
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    pub r_squared: Option<f64>,
    pub adj_r_squared: Option<f64>,
    pub r_squared_raw: Option<f64>,
    pub rho: Option<f64>,
    pub points_used: Option<usize>,
    pub error: Option<String>,
}

/// One curve point, flattened for `curves.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    /// `proportion`, `effort` or `success`.
    pub kind: String,
    pub n: usize,
    pub m1: usize,
    pub m: usize,
    pub value: f64,
    pub samples: usize,
}

pub const FITS_FILE: &str = "fits.csv";
pub const CURVES_FILE: &str = "curves.csv";

pub const MODEL_LOGIT: &str = "logit";
pub const MODEL_LINEAR: &str = "linear";
pub const MODEL_POWER: &str = "power";
pub const MODEL_EFFORT: &str = "sigmoid-effort";
pub const MODEL_SUCCESS: &str = "sigmoid-success";
pub const MODEL_CORR_EFFORT: &str = "correlation-effort";
pub const MODEL_CORR_SUCCESS: &str = "correlation-success";

pub const KIND_PROPORTION: &str = "proportion";
pub const KIND_EFFORT: &str = "effort";
pub const KIND_SUCCESS: &str = "success";

/// Flat tables behind `fits.csv` and `curves.csv`; the plots read only this.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FitTables {
    pub fits: Vec<FitRow>,
    pub curves: Vec<CurveRow>,
}

fn corr_row(model: &str, n: Option<usize>, c: &CriticalCorrelation) -> FitRow {
    FitRow {
        model: model.into(),
        n,
        beta0: Some(c.line.beta0),
        beta1: Some(c.line.beta1),
        r_squared: Some(c.line.r_squared),
        adj_r_squared: Some(c.line.adj_r_squared),
        rho: Some(c.rho),
        points_used: Some(c.cells),
        ..FitRow::default()
    }
}

fn sigmoid_row(model: &str, cell: CellKey, f: &SigmoidFit) -> FitRow {
    FitRow {
        model: model.into(),
        n: Some(cell.n),
        m1: Some(cell.m1),
        l: Some(f.l),
        r: Some(f.r),
        m_t: Some(f.m_t),
        r_squared: Some(f.r_squared),
        ..FitRow::default()
    }
}

impl AnalysisReport {
    pub fn tables(&self) -> FitTables {
        let mut fits = Vec::new();
        for (cell, f) in &self.logit {
            fits.push(FitRow {
                model: MODEL_LOGIT.into(),
                n: Some(cell.n),
                m1: Some(cell.m1),
                beta0: Some(f.beta0),
                beta1: Some(f.beta1),
                m_c: Some(f.m_c),
                r_squared: Some(f.r_squared),
                points_used: Some(f.points_used),
                ..FitRow::default()
            });
        }
        for (n, f) in &self.linear_by_n {
            fits.push(FitRow {
                model: MODEL_LINEAR.into(),
                n: Some(*n),
                beta0: Some(f.beta0),
                beta1: Some(f.beta1),
                r_squared: Some(f.r_squared),
                adj_r_squared: Some(f.adj_r_squared),
                points_used: Some(f.points_used),
                ..FitRow::default()
            });
        }
        if let Some(p) = &self.power {
            fits.push(FitRow {
                model: MODEL_POWER.into(),
                log_k: Some(p.log_k),
                alpha1: Some(p.alpha1),
                alpha2: Some(p.alpha2),
                r_squared: Some(p.r_squared_log),
                r_squared_raw: Some(p.r_squared_raw),
                points_used: Some(p.rows_used),
                ..FitRow::default()
            });
        }
        fits.extend(self.effort_fits.iter().map(|(c, f)| sigmoid_row(MODEL_EFFORT, *c, f)));
        fits.extend(self.success_fits.iter().map(|(c, f)| sigmoid_row(MODEL_SUCCESS, *c, f)));
        if let Some(c) = &self.effort_correlation {
            fits.push(corr_row(MODEL_CORR_EFFORT, None, c));
        }
        for (n, c) in &self.effort_correlation_by_n {
            fits.push(corr_row(MODEL_CORR_EFFORT, Some(*n), c));
        }
        if let Some(c) = &self.success_correlation {
            fits.push(corr_row(MODEL_CORR_SUCCESS, None, c));
        }
        for (model, cell, reason) in &self.skipped {
            fits.push(FitRow {
                model: model.clone(),
                n: cell.map(|c| c.n),
                m1: cell.map(|c| c.m1),
                error: Some(reason.clone()),
                ..FitRow::default()
            });
        }

        let mut curves = Vec::new();
        for (kind, set) in [
            (KIND_PROPORTION, &self.proportions),
            (KIND_EFFORT, &self.effort),
            (KIND_SUCCESS, &self.success),
        ] {
            for c in set {
                curves.extend(c.points.iter().map(|p| CurveRow {
                    kind: kind.into(),
                    n: c.cell.n,
                    m1: c.cell.m1,
                    m: p.m,
                    value: p.value,
                    samples: p.samples,
                }));
            }
        }
        FitTables { fits, curves }
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

impl FitTables {
    pub fn is_empty(&self) -> bool {
        self.fits.is_empty() && self.curves.is_empty()
    }

    /// Writes `fits.csv` and `curves.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(FITS_FILE);
        let mut w = csv_writer(&path)?;
        if self.fits.is_empty() {
            w.write_record(fit_header())?;
        }
        for r in &self.fits {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        let path = dir.join(CURVES_FILE);
        let mut w = csv_writer(&path)?;
        if self.curves.is_empty() {
            w.write_record(["kind", "n", "m1", "m", "value", "samples"])?;
        }
        for r in &self.curves {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))
    }

    /// Reads the pair written by [`FitTables::write`].
    pub fn read(dir: &Path) -> Result<Self> {
        Ok(Self {
            fits: read_csv(&dir.join(FITS_FILE))?,
            curves: read_csv(&dir.join(CURVES_FILE))?,
        })
    }

    pub fn fits_of<'a>(&'a self, model: &'a str) -> impl Iterator<Item = &'a FitRow> + 'a {
        self.fits.iter().filter(move |f| f.model == model && f.error.is_none())
    }

    pub fn curves_of<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a CurveRow> + 'a {
        self.curves.iter().filter(move |c| c.kind == kind)
    }
}

fn fit_header() -> [&'static str; 18] {
    [
        "model",
        "n",
        "m1",
        "beta0",
        "beta1",
        "m_c",
        "L",
        "r",
        "m_t",
        "log_k",
        "alpha1",
        "alpha2",
        "r_squared",
        "adj_r_squared",
        "r_squared_raw",
        "rho",
        "points_used",
        "error",
    ]
}

pub fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv_from(file, path)
}

pub fn read_csv_from<T: serde::de::DeserializeOwned, R: std::io::Read>(reader: R, origin: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize().enumerate() {
        out.push(row.map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: i + 2,
            reason: e.to_string(),
        })?);
    }
    Ok(out)
}
