//! Distribution statistics for standardised returns: CCDFs, power-law tail
//! fits, Student density fits, kurtosis, two-sample KS distance and the
//! tail-exponent regression surface.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use libm::{exp, fabs, log, log10, pow, sqrt};
use thiserror::Error;

use crate::special::ln_beta;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("empty sample")]
    Empty,
    #[error("need at least {need} samples, have {have}")]
    InsufficientSamples { need: usize, have: usize },
    #[error("invalid range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("sample has zero variance")]
    Degenerate,
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("no stable scaling range found")]
    NoScalingRange,
}

/// Which part of a two-sided sample a tail statistic looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TailSide {
    /// `g > 0`.
    Positive,
    /// `−g` for `g < 0`.
    Negative,
    /// `|g|`.
    Absolute,
}

impl TailSide {
    pub fn name(self) -> &'static str {
        match self {
            TailSide::Positive => "positive",
            TailSide::Negative => "negative",
            TailSide::Absolute => "absolute",
        }
    }

    /// The positive magnitudes this side refers to.
    pub fn magnitudes(self, samples: &[f64]) -> Vec<f64> {
        match self {
            TailSide::Positive => samples.iter().copied().filter(|&g| g > 0.0).collect(),
            TailSide::Negative => samples.iter().filter(|&&g| g < 0.0).map(|g| -g).collect(),
            TailSide::Absolute => samples.iter().map(|g| fabs(*g)).filter(|&g| g > 0.0).collect(),
        }
    }
}

impl fmt::Display for TailSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// Empirical `P(X ≥ x)` at every distinct sample value, ascending in `x`.
pub fn ccdf(samples: &[f64]) -> Result<Vec<(f64, f64)>, AnalysisError> {
    if samples.is_empty() {
        return Err(AnalysisError::Empty);
    }
    Ok(ccdf_sorted(&sorted(samples)))
}

fn ccdf_sorted(v: &[f64]) -> Vec<(f64, f64)> {
    let n = v.len() as f64;
    let mut out = Vec::new();
    let mut i = 0;
    while i < v.len() {
        out.push((v[i], (v.len() - i) as f64 / n));
        let x = v[i];
        while i < v.len() && v[i] == x {
            i += 1;
        }
    }
    out
}

/// A fitted power-law tail `P(X ≥ x) ∼ x^{−α}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    pub exponent: f64,
    pub stderr: f64,
    pub lo: f64,
    pub hi: f64,
    pub side: TailSide,
    pub n_in_range: usize,
}

/// Minimum number of samples inside the fitting range.
pub const MIN_TAIL_SAMPLES: usize = 50;

#[derive(Debug, Clone, Copy)]
struct Line {
    slope: f64,
    rss: f64,
}

fn ols(xs: &[f64], ys: &[f64]) -> Option<Line> {
    let n = xs.len();
    if n < 3 {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - my - slope * (x - mx);
            r * r
        })
        .sum();
    Some(Line { slope, rss })
}

/// Log-log least squares of the CCDF over `[lo, hi]`.
///
/// The CCDF of the chosen side's magnitudes is read off on a log grid of
/// 20 points per decade starting at `lo`, and the exponent is the negated
/// OLS slope. Neighbouring CCDF values share almost all their samples, so
/// the plain regression error is far too small; the reported standard error
/// is a delete-one-block jackknife over 20 contiguous blocks of the input,
/// which also covers serially dependent samples.
pub fn fit_tail_exponent(samples: &[f64], range: (f64, f64), side: TailSide) -> Result<TailFit, AnalysisError> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(AnalysisError::InvalidRange { lo, hi });
    }
    // (magnitude, block) sorted by magnitude
    let n = samples.len();
    let mut tagged: Vec<(f64, u8)> = samples
        .iter()
        .enumerate()
        .filter_map(|(i, &g)| {
            let m = match side {
                TailSide::Positive if g > 0.0 => g,
                TailSide::Negative if g < 0.0 => -g,
                TailSide::Absolute if g != 0.0 => fabs(g),
                _ => return None,
            };
            Some((m, (i * JACKKNIFE_BLOCKS / n) as u8))
        })
        .collect();
    if tagged.is_empty() {
        return Err(AnalysisError::Empty);
    }
    tagged.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let v: Vec<f64> = tagged.iter().map(|t| t.0).collect();
    let n_in_range = v.iter().filter(|&&x| x >= lo && x <= hi).count();
    if n_in_range < MIN_TAIL_SAMPLES {
        return Err(AnalysisError::InsufficientSamples { need: MIN_TAIL_SAMPLES, have: n_in_range });
    }
    let exponent = -grid_slope(&v, lo, hi)?;

    let mut leave_out = Vec::with_capacity(JACKKNIFE_BLOCKS);
    let mut rest = Vec::with_capacity(v.len());
    for b in 0..JACKKNIFE_BLOCKS as u8 {
        rest.clear();
        rest.extend(tagged.iter().filter(|t| t.1 != b).map(|t| t.0));
        if let Ok(s) = grid_slope(&rest, lo, hi) {
            leave_out.push(-s);
        }
    }
    let k = leave_out.len() as f64;
    let stderr = if leave_out.len() >= 2 {
        let mean = leave_out.iter().sum::<f64>() / k;
        sqrt((k - 1.0) / k * leave_out.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>())
    } else {
        f64::NAN
    };
    Ok(TailFit { exponent, stderr, lo, hi, side, n_in_range })
}

/// Blocks used for the jackknife standard error of a tail fit.
pub const JACKKNIFE_BLOCKS: usize = 20;

fn grid_slope(v: &[f64], lo: f64, hi: f64) -> Result<f64, AnalysisError> {
    let top = log10(hi) + 1e-9;
    let points: Vec<(f64, f64)> = log_grid(v, lo, 1).into_iter().filter(|p| p.0 <= top).collect();
    if points.len() < 3 {
        return Err(AnalysisError::InsufficientSamples { need: 3, have: points.len() });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    Ok(ols(&xs, &ys).ok_or(AnalysisError::Degenerate)?.slope)
}

/// Grid points per decade used by the range picker and the verdict.
const GRID_PER_DECADE: f64 = 20.0;
/// Half-width, in decades, of the window behind each local slope.
const LOCAL_HALF_WIDTH: f64 = 0.25;
/// The CCDF must still count this many samples at the top of a range.
const MIN_TAIL_COUNT: usize = 30;

/// `log10 x` grid with the CCDF count at each point; stops where fewer than
/// `min_count` samples remain.
fn log_grid(v: &[f64], start: f64, min_count: usize) -> Vec<(f64, f64)> {
    let n = v.len() as f64;
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let lx = log10(start) + k as f64 / GRID_PER_DECADE;
        let x = pow(10.0, lx);
        let above = v.len() - v.partition_point(|&s| s < x);
        if above < min_count {
            break;
        }
        out.push((lx, log10(above as f64 / n)));
        k += 1;
    }
    out
}

/// Local log-log slopes of the CCDF on a log grid, each from an OLS over a
/// half-decade window.
fn local_slopes(grid: &[(f64, f64)]) -> Vec<Option<f64>> {
    let w = (LOCAL_HALF_WIDTH * GRID_PER_DECADE) as usize;
    (0..grid.len())
        .map(|i| {
            if i < w || i + w >= grid.len() {
                return None;
            }
            let win = &grid[i - w..=i + w];
            let xs: Vec<f64> = win.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = win.iter().map(|p| p.1).collect();
            ols(&xs, &ys).map(|l| l.slope)
        })
        .collect()
}

/// Widest range starting at or above `floor` over which every local CCDF
/// slope stays within `±tolerance` of the range's midpoint slope.
pub fn pick_scaling_range(samples: &[f64], side: TailSide, floor: f64, tolerance: f64) -> Result<(f64, f64), AnalysisError> {
    if !(floor > 0.0) {
        return Err(AnalysisError::InvalidRange { lo: floor, hi: f64::INFINITY });
    }
    let v = sorted(&side.magnitudes(samples));
    let grid = log_grid(&v, floor, MIN_TAIL_COUNT);
    let slopes = local_slopes(&grid);
    let w = (LOCAL_HALF_WIDTH * GRID_PER_DECADE) as usize;
    let mut best: Option<(usize, usize)> = None;
    for i in 0..slopes.len() {
        let Some(s0) = slopes[i] else { continue };
        let (mut lo_s, mut hi_s) = (s0, s0);
        for (j, s) in slopes.iter().enumerate().skip(i + 1) {
            let Some(s) = *s else { break };
            lo_s = lo_s.min(s);
            hi_s = hi_s.max(s);
            if hi_s - lo_s > 2.0 * tolerance {
                break;
            }
            if best.is_none_or(|(a, b)| j - i > b - a) {
                best = Some((i, j));
            }
        }
    }
    let (i, j) = best.ok_or(AnalysisError::NoScalingRange)?;
    // a local slope at grid point i already covers the half window around it
    let lo = grid[i - w].0;
    let hi = grid[j + w].0;
    Ok((pow(10.0, lo), pow(10.0, hi)))
}

/// [`fit_tail_exponent`] over the range from [`pick_scaling_range`] with a
/// `±0.1` slope tolerance.
pub fn fit_tail_auto(samples: &[f64], side: TailSide, floor: f64) -> Result<TailFit, AnalysisError> {
    let range = pick_scaling_range(samples, side, floor, 0.1)?;
    fit_tail_exponent(samples, range, side)
}

/// Hill estimate of the tail exponent from the `k` largest magnitudes.
pub fn hill_estimator(samples: &[f64], side: TailSide, k: usize) -> Result<f64, AnalysisError> {
    let v = sorted(&side.magnitudes(samples));
    if k == 0 || k >= v.len() {
        return Err(AnalysisError::InsufficientSamples { need: k + 1, have: v.len() });
    }
    let threshold = v[v.len() - k - 1];
    if !(threshold > 0.0) {
        return Err(AnalysisError::Degenerate);
    }
    let s: f64 = v[v.len() - k..].iter().map(|&x| log(x / threshold)).sum();
    if !(s > 0.0) {
        return Err(AnalysisError::Degenerate);
    }
    Ok(k as f64 / s)
}

/// Outcome of the power-law test on one tail.
#[derive(Debug, Clone, PartialEq)]
pub struct TailVerdict {
    pub power_law: bool,
    /// Local slopes of the log CCDF, one per segment, left to right.
    pub segment_slopes: Vec<f64>,
    pub steepening: bool,
    pub pareto_rss: f64,
    pub exponential_rss: f64,
}

const VERDICT_SEGMENTS: usize = 4;
const STEEPENING_SLACK: f64 = 0.1;

/// Decide whether a tail looks like a power law.
///
/// The tail above `floor` is cut into equal log-width segments. It is
/// called *not* a power law when the segment slopes steepen monotonically
/// (each no flatter than the previous up to a small slack, the last clearly
/// steeper than the first) and a straight line in `(x, log P)` fits better
/// than one in `(log x, log P)`.
pub fn power_law_verdict(samples: &[f64], side: TailSide, floor: f64) -> Result<TailVerdict, AnalysisError> {
    let v = sorted(&side.magnitudes(samples));
    let grid = log_grid(&v, floor, 10);
    let per = grid.len() / VERDICT_SEGMENTS;
    if per < 3 {
        return Err(AnalysisError::InsufficientSamples { need: 3 * VERDICT_SEGMENTS, have: grid.len() });
    }
    let mut segment_slopes = Vec::with_capacity(VERDICT_SEGMENTS);
    for s in 0..VERDICT_SEGMENTS {
        let end = if s + 1 == VERDICT_SEGMENTS { grid.len() } else { (s + 1) * per + 1 };
        let seg = &grid[s * per..end.min(grid.len())];
        let xs: Vec<f64> = seg.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = seg.iter().map(|p| p.1).collect();
        segment_slopes.push(ols(&xs, &ys).ok_or(AnalysisError::Degenerate)?.slope);
    }
    let steepening = segment_slopes.windows(2).all(|w| w[1] <= w[0] + STEEPENING_SLACK)
        && segment_slopes[VERDICT_SEGMENTS - 1] < segment_slopes[0] - 2.0 * STEEPENING_SLACK;

    let ys: Vec<f64> = grid.iter().map(|p| p.1).collect();
    let log_x: Vec<f64> = grid.iter().map(|p| p.0).collect();
    let lin_x: Vec<f64> = grid.iter().map(|p| pow(10.0, p.0)).collect();
    let pareto_rss = ols(&log_x, &ys).ok_or(AnalysisError::Degenerate)?.rss;
    let exponential_rss = ols(&lin_x, &ys).ok_or(AnalysisError::Degenerate)?.rss;
    let power_law = !(steepening && pareto_rss > exponential_rss);
    Ok(TailVerdict { power_law, segment_slopes, steepening, pareto_rss, exponential_rss })
}

/// Fourth standardised moment (not excess).
pub fn kurtosis(samples: &[f64]) -> Result<f64, AnalysisError> {
    if samples.len() < 4 {
        return Err(AnalysisError::InsufficientSamples { need: 4, have: samples.len() });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for x in samples {
        let d = (x - mean) * (x - mean);
        m2 += d;
        m4 += d * d;
    }
    m2 /= n;
    m4 /= n;
    if !(m2 > 0.0) || m2 <= 1e-24 * mean * mean {
        return Err(AnalysisError::Degenerate);
    }
    Ok(m4 / (m2 * m2))
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    if a.is_empty() || b.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let a = sorted(a);
    let b = sorted(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max(fabs(i as f64 / na - j as f64 / nb));
    }
    Ok(d)
}

/// Student density `√L α^{α/2} / B(½, α/2) · (α + L g²)^{−(α+1)/2}` in log
/// form.
pub fn student_log_density(g: f64, alpha: f64, l: f64) -> f64 {
    0.5 * log(l / alpha) - ln_beta(0.5, alpha / 2.0) - (alpha + 1.0) / 2.0 * log(1.0 + l * g * g / alpha)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudentFit {
    pub alpha: f64,
    pub l: f64,
    /// Sum of squared log-density residuals over the fitted bins.
    pub residual: f64,
    pub bins: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Central region left out of the Student fit.
pub const STUDENT_EXCLUDE: f64 = 0.5;
pub const BINS_PER_DECADE: f64 = 25.0;
/// Sparser tail bins are left out of the Student fit.
pub const STUDENT_MIN_BIN: usize = 10;
const LM_MAX_ITER: usize = 200;
const ALPHA_CAP: f64 = 1e3;

/// Log-binned density of `|g|` folded onto one side: points `(g, f(g))`
/// with `f` normalised so the two-sided density integrates to one. Bins
/// holding fewer than `min_count` samples are dropped.
pub fn log_binned_density(samples: &[f64], from: f64, min_count: usize) -> Result<Vec<(f64, f64)>, AnalysisError> {
    if samples.is_empty() {
        return Err(AnalysisError::Empty);
    }
    if !(from > 0.0) {
        return Err(AnalysisError::InvalidRange { lo: from, hi: f64::INFINITY });
    }
    let n = samples.len() as f64;
    let v = sorted(&TailSide::Absolute.magnitudes(samples));
    let Some(&max) = v.last() else { return Ok(Vec::new()) };
    let mut out = Vec::new();
    let mut k = 0;
    let mut start = v.partition_point(|&x| x < from);
    loop {
        let a = from * pow(10.0, k as f64 / BINS_PER_DECADE);
        if a > max {
            break;
        }
        let b = from * pow(10.0, (k + 1) as f64 / BINS_PER_DECADE);
        let end = v.partition_point(|&x| x < b);
        let count = end - start;
        if count >= min_count {
            out.push((sqrt(a * b), count as f64 / (2.0 * n * (b - a))));
        }
        start = end;
        k += 1;
    }
    Ok(out)
}

/// Nonlinear least squares of the log binned density against the log
/// Student density, skipping `|g| < 0.5`. Levenberg–Marquardt in
/// `(ln α, ln L)`; a run that hits the iteration cap or the `α` ceiling is
/// returned with `converged = false`.
pub fn fit_student_density(samples: &[f64]) -> Result<StudentFit, AnalysisError> {
    const MIN: usize = 10_000;
    if samples.len() < MIN {
        return Err(AnalysisError::InsufficientSamples { need: MIN, have: samples.len() });
    }
    let pts = log_binned_density(samples, STUDENT_EXCLUDE, STUDENT_MIN_BIN)?;
    if pts.len() < 3 {
        return Err(AnalysisError::InsufficientSamples { need: 3, have: pts.len() });
    }
    let gs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| log(p.1)).collect();
    let cost = |p: [f64; 2]| -> f64 {
        let (a, l) = (exp(p[0]), exp(p[1]));
        gs.iter().zip(&ys).map(|(&g, &y)| (y - student_log_density(g, a, l)).powi(2)).sum()
    };

    // start from the moment-matched Student with α = 3
    let mut p = [log(3.0), log(3.0)];
    let mut c = cost(p);
    let mut mu = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let h = 1e-6;
    while iterations < LM_MAX_ITER {
        iterations += 1;
        let (a, l) = (exp(p[0]), exp(p[1]));
        let (a1, a2) = (exp(p[0] + h), exp(p[0] - h));
        let (l1, l2) = (exp(p[1] + h), exp(p[1] - h));
        let mut jtj = [[0.0; 2]; 2];
        let mut jtr = [0.0; 2];
        for (&g, &y) in gs.iter().zip(&ys) {
            let r = y - student_log_density(g, a, l);
            let j0 = (student_log_density(g, a1, l) - student_log_density(g, a2, l)) / (2.0 * h);
            let j1 = (student_log_density(g, a, l1) - student_log_density(g, a, l2)) / (2.0 * h);
            jtj[0][0] += j0 * j0;
            jtj[0][1] += j0 * j1;
            jtj[1][1] += j1 * j1;
            jtr[0] += j0 * r;
            jtr[1] += j1 * r;
        }
        jtj[1][0] = jtj[0][1];
        let mut stepped = false;
        while mu < 1e12 {
            let m00 = jtj[0][0] * (1.0 + mu);
            let m11 = jtj[1][1] * (1.0 + mu);
            let det = m00 * m11 - jtj[0][1] * jtj[1][0];
            if det.abs() < 1e-300 {
                mu *= 10.0;
                continue;
            }
            let d0 = (m11 * jtr[0] - jtj[0][1] * jtr[1]) / det;
            let d1 = (m00 * jtr[1] - jtj[1][0] * jtr[0]) / det;
            let next = [p[0] + d0, (p[1] + d1)];
            let next = [next[0].min(log(ALPHA_CAP)), next[1]];
            let nc = cost(next);
            if nc.is_finite() && nc <= c {
                let small = fabs(d0) < 1e-9 && fabs(d1) < 1e-9;
                let flat = c - nc <= 1e-12 * c.max(1e-300);
                p = next;
                c = nc;
                mu = (mu / 10.0).max(1e-12);
                stepped = true;
                if small || flat {
                    converged = true;
                }
                break;
            }
            mu *= 10.0;
        }
        if !stepped {
            // no downhill step at any damping: a stationary point
            converged = true;
        }
        if converged {
            break;
        }
    }
    let alpha = exp(p[0]);
    if alpha >= ALPHA_CAP * (1.0 - 1e-9) {
        converged = false;
    }
    Ok(StudentFit { alpha, l: exp(p[1]), residual: c, bins: gs.len(), iterations, converged })
}

/// `α_r = c₀ + c₁ α_x + c₂ H_s + c₃ H_s α_x` fitted by least squares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceRegression {
    pub coefficients: [f64; 4],
    pub r_squared: f64,
}

impl SurfaceRegression {
    pub fn predict(&self, alpha_x: f64, hurst: f64) -> f64 {
        let c = &self.coefficients;
        c[0] + c[1] * alpha_x + c[2] * hurst + c[3] * hurst * alpha_x
    }

    /// `∂α_r/∂H_s = c₂ + c₃ α_x`.
    pub fn hurst_sensitivity(&self, alpha_x: f64) -> f64 {
        self.coefficients[2] + self.coefficients[3] * alpha_x
    }
}

/// One grid cell: `(α_x, H_s, measured α_r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub alpha_x: f64,
    pub hurst: f64,
    pub alpha_r: f64,
}

/// OLS on `(1, α_x, H_s, H_s α_x)` by Householder QR.
pub fn regress_alpha_surface(points: &[SurfacePoint]) -> Result<SurfaceRegression, AnalysisError> {
    const P: usize = 4;
    if points.len() < 8 {
        return Err(AnalysisError::InsufficientSamples { need: 8, have: points.len() });
    }
    let m = points.len();
    let mut a: Vec<[f64; P]> = points.iter().map(|q| [1.0, q.alpha_x, q.hurst, q.hurst * q.alpha_x]).collect();
    let mut y: Vec<f64> = points.iter().map(|q| q.alpha_r).collect();
    let scale = a.iter().flat_map(|r| r.iter()).fold(0.0_f64, |s, v| s.max(fabs(*v)));
    for k in 0..P {
        let norm = sqrt((k..m).map(|i| a[i][k] * a[i][k]).sum::<f64>());
        if norm <= 1e-10 * scale * sqrt(m as f64) {
            return Err(AnalysisError::RankDeficient);
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v = vec![0.0; m];
        v[k] = a[k][k] - alpha;
        for i in k + 1..m {
            v[i] = a[i][k];
        }
        let vnorm2: f64 = v[k..].iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..P {
            let dot: f64 = (k..m).map(|i| v[i] * a[i][j]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..m {
                a[i][j] -= f * v[i];
            }
        }
        let dot: f64 = (k..m).map(|i| v[i] * y[i]).sum();
        let f = 2.0 * dot / vnorm2;
        for i in k..m {
            y[i] -= f * v[i];
        }
        if fabs(a[k][k]) <= 1e-10 * scale {
            return Err(AnalysisError::RankDeficient);
        }
    }
    let mut c = [0.0; P];
    for k in (0..P).rev() {
        let s: f64 = (k + 1..P).map(|j| a[k][j] * c[j]).sum();
        c[k] = (y[k] - s) / a[k][k];
    }
    let fit = SurfaceRegression { coefficients: c, r_squared: 0.0 };
    let mean = points.iter().map(|q| q.alpha_r).sum::<f64>() / m as f64;
    let tss: f64 = points.iter().map(|q| (q.alpha_r - mean) * (q.alpha_r - mean)).sum();
    let rss: f64 = points
        .iter()
        .map(|q| {
            let r = q.alpha_r - fit.predict(q.alpha_x, q.hurst);
            r * r
        })
        .sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    Ok(SurfaceRegression { coefficients: c, r_squared })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ccdf_counts() {
        assert_eq!(ccdf(&[3.0, 1.0, 2.0]).unwrap(), vec![(1.0, 1.0), (2.0, 2.0 / 3.0), (3.0, 1.0 / 3.0)]);
        assert_eq!(ccdf(&[5.0; 4]).unwrap(), vec![(5.0, 1.0)]);
        assert_eq!(ccdf(&[]), Err(AnalysisError::Empty));
    }

    #[test]
    fn kurtosis_two_point() {
        assert!((kurtosis(&[1.0, -1.0, 1.0, -1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(kurtosis(&[2.0; 10]), Err(AnalysisError::Degenerate));
    }

    #[test]
    fn ks_identical_is_zero() {
        let a = [0.3, 0.1, 0.9, 0.5];
        assert_eq!(ks_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_distance(&[0.0, 1.0], &[2.0, 3.0]).unwrap(), 1.0);
    }

    #[test]
    fn surface_recovers_exact_coefficients() {
        let c = [0.61, 2.05, -0.11, -0.34];
        let mut pts = Vec::new();
        for i in 0..11 {
            for j in 0..9 {
                let ax = 0.9 + 0.1 * i as f64;
                let hs = 0.1 + 0.1 * j as f64;
                pts.push(SurfacePoint { alpha_x: ax, hurst: hs, alpha_r: c[0] + c[1] * ax + c[2] * hs + c[3] * hs * ax });
            }
        }
        let fit = regress_alpha_surface(&pts).unwrap();
        for k in 0..4 {
            assert!((fit.coefficients[k] - c[k]).abs() < 1e-9, "{:?}", fit.coefficients);
        }
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!((fit.predict(1.3, 0.8) - 2.833).abs() < 1e-3);
    }

    #[test]
    fn surface_rank_deficient() {
        let pts: Vec<SurfacePoint> =
            (0..9).map(|i| SurfacePoint { alpha_x: 1.0 + 0.1 * i as f64, hurst: 0.5, alpha_r: 3.0 }).collect();
        assert_eq!(regress_alpha_surface(&pts), Err(AnalysisError::RankDeficient));
    }
}
