//! Stochastic order-flow inputs.
//!
//! Relative prices come from a composite density: one symmetric zero-mean
//! family on `x ≤ 0` and another on `x ≥ 0`, with parameters tied together so
//! both halves agree at the origin. Order signs are thresholded fractional
//! Gaussian noise, which keeps the long memory of the underlying process.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_2_PI, PI};
use core::fmt;

use libm::{erf, exp, fabs, log, pow, sqrt};
use rand::Rng;
use thiserror::Error;

use crate::fft::{fft, Complex};
use crate::special::{beta, inc_beta, inc_beta_inv};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StochasticError {
    #[error("parameter {name} must be positive and finite, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("Hurst index must lie in (0, 1), got {0}")]
    InvalidHurst(f64),
    #[error("series of length {len} is too short; need at least {min}")]
    SeriesTooShort { len: usize, min: usize },
    #[error("series has zero variance")]
    DegenerateSeries,
    #[error("circulant embedding has a negative eigenvalue {0:e}")]
    EmbeddingNotPsd(f64),
}

fn positive(name: &'static str, value: f64) -> Result<f64, StochasticError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(StochasticError::InvalidParameter { name, value })
    }
}

/// Family name as it appears in run-config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FamilyKind {
    StudentQG,
    Laplace,
    Gaussian,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 3] = [FamilyKind::StudentQG, FamilyKind::Laplace, FamilyKind::Gaussian];

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::StudentQG => "studentqg",
            FamilyKind::Laplace => "laplace",
            FamilyKind::Gaussian => "gaussian",
        }
    }

    /// Short tag used in directory names.
    pub fn tag(self) -> &'static str {
        match self {
            FamilyKind::StudentQG => "qG",
            FamilyKind::Laplace => "DE",
            FamilyKind::Gaussian => "G",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let lower = s.trim();
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(lower) || k.tag().eq_ignore_ascii_case(lower))
    }

    pub fn has_power_law_tail(self) -> bool {
        matches!(self, FamilyKind::StudentQG)
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A symmetric zero-mean density with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityFamily {
    /// `√L α^{α/2} / B(½, α/2) · (α + L x²)^{−(α+1)/2}`
    StudentQG { alpha: f64, l: f64 },
    /// `λ/2 · e^{−λ|x|}`
    Laplace { lambda: f64 },
    /// `1/(√(2π) σ) · e^{−x²/2σ²}`
    Gaussian { sigma: f64 },
}

impl DensityFamily {
    pub fn student(alpha: f64, l: f64) -> Result<Self, StochasticError> {
        Ok(Self::StudentQG { alpha: positive("alpha_x", alpha)?, l: positive("L", l)? })
    }

    pub fn laplace(lambda: f64) -> Result<Self, StochasticError> {
        Ok(Self::Laplace { lambda: positive("lambda", lambda)? })
    }

    pub fn gaussian(sigma: f64) -> Result<Self, StochasticError> {
        Ok(Self::Gaussian { sigma: positive("sigma", sigma)? })
    }

    pub fn kind(&self) -> FamilyKind {
        match self {
            Self::StudentQG { .. } => FamilyKind::StudentQG,
            Self::Laplace { .. } => FamilyKind::Laplace,
            Self::Gaussian { .. } => FamilyKind::Gaussian,
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match *self {
            Self::StudentQG { alpha, l } => {
                let norm = sqrt(l) * pow(alpha, alpha / 2.0) / beta(0.5, alpha / 2.0);
                norm * pow(alpha + l * x * x, -(alpha + 1.0) / 2.0)
            }
            Self::Laplace { lambda } => lambda / 2.0 * exp(-lambda * fabs(x)),
            Self::Gaussian { sigma } => exp(-x * x / (2.0 * sigma * sigma)) / (sqrt(2.0 * PI) * sigma),
        }
    }

    /// Density at the origin, in a form that avoids the `α^{α/2}` overflow
    /// path: `√(L/α) / B(½, α/2)` for the Student family.
    pub fn at_zero(&self) -> f64 {
        match *self {
            Self::StudentQG { alpha, l } => sqrt(l / alpha) / beta(0.5, alpha / 2.0),
            _ => self.density(0.0),
        }
    }

    /// `P(X ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::StudentQG { alpha, l } => {
                let t2 = l * x * x;
                let tail = 0.5 * inc_beta(alpha / 2.0, 0.5, alpha / (alpha + t2));
                if x <= 0.0 {
                    tail
                } else {
                    1.0 - tail
                }
            }
            Self::Laplace { lambda } => {
                if x <= 0.0 {
                    0.5 * exp(lambda * x)
                } else {
                    1.0 - 0.5 * exp(-lambda * x)
                }
            }
            Self::Gaussian { sigma } => 0.5 * (1.0 + erf(x / (sigma * core::f64::consts::SQRT_2))),
        }
    }

    /// Draw `|X|`.
    pub fn sample_magnitude<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::StudentQG { alpha, l } => {
                // two-sided tail probability u = P(|t| > τ) = I_{α/(α+τ²)}(α/2, ½)
                let u = open_unit(rng);
                let z = inc_beta_inv(alpha / 2.0, 0.5, u);
                sqrt(alpha * (1.0 - z) / z) / sqrt(l)
            }
            Self::Laplace { lambda } => -log(open_unit(rng)) / lambda,
            Self::Gaussian { sigma } => fabs(standard_normal(rng)) * sigma,
        }
    }
}

/// Uniform on `(0, 1]`.
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Standard normal deviate (Marsaglia polar method, one value per call).
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u = 2.0 * rng.random::<f64>() - 1.0;
        let v = 2.0 * rng.random::<f64>() - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            return u * sqrt(-2.0 * log(s) / s);
        }
    }
}

/// Parameters of all three families tied to one `(α_x, σ_x)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuityParams {
    /// Student scale `L = α_x / ((1 + α_x) σ_x²)`.
    pub l: f64,
    /// Laplace rate from `2√(L/α_x) = λ B(½, α_x/2)`.
    pub lambda: f64,
    /// Gaussian width from `B(½, α_x/2) = σ √(2πL/α_x)`.
    pub sigma: f64,
}

/// Solve the continuity constraints so every pairing of the three families
/// has equal densities at `x = 0`.
pub fn solve_continuity(alpha_x: f64, sigma_x: f64) -> Result<ContinuityParams, StochasticError> {
    let alpha = positive("alpha_x", alpha_x)?;
    let sx = positive("sigma_x", sigma_x)?;
    let l = alpha / ((1.0 + alpha) * sx * sx);
    let b = beta(0.5, alpha / 2.0);
    let lambda = 2.0 * sqrt(l / alpha) / b;
    let sigma = b / sqrt(2.0 * PI * l / alpha);
    Ok(ContinuityParams { l, lambda, sigma })
}

impl ContinuityParams {
    pub fn family(&self, kind: FamilyKind, alpha_x: f64) -> DensityFamily {
        match kind {
            FamilyKind::StudentQG => DensityFamily::StudentQG { alpha: alpha_x, l: self.l },
            FamilyKind::Laplace => DensityFamily::Laplace { lambda: self.lambda },
            FamilyKind::Gaussian => DensityFamily::Gaussian { sigma: self.sigma },
        }
    }

    /// `λ²σ²`, which equals `2/π` for any consistent solution.
    pub fn laplace_gauss_product(&self) -> f64 {
        self.lambda * self.lambda * self.sigma * self.sigma
    }
}

/// Expected value of [`ContinuityParams::laplace_gauss_product`].
pub const LAPLACE_GAUSS_PRODUCT: f64 = FRAC_2_PI;

/// Composite relative-price density: `left` on `x ≤ 0`, `right` on `x ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceSamplerSpec {
    pub left: DensityFamily,
    pub right: DensityFamily,
    pub alpha_x: f64,
    pub sigma_x: f64,
}

impl PriceSamplerSpec {
    /// Build the composite from family choices; every parameter other than
    /// `α_x` and `σ_x` is solved, never supplied.
    pub fn solve(left: FamilyKind, right: FamilyKind, alpha_x: f64, sigma_x: f64) -> Result<Self, StochasticError> {
        let params = solve_continuity(alpha_x, sigma_x)?;
        Ok(Self {
            left: params.family(left, alpha_x),
            right: params.family(right, alpha_x),
            alpha_x,
            sigma_x,
        })
    }

    /// The standard model: Student on both sides.
    pub fn student(alpha_x: f64, sigma_x: f64) -> Result<Self, StochasticError> {
        Self::solve(FamilyKind::StudentQG, FamilyKind::StudentQG, alpha_x, sigma_x)
    }

    pub fn density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            self.left.density(x)
        } else {
            self.right.density(x)
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            self.left.cdf(x)
        } else {
            self.right.cdf(x)
        }
    }

    /// Relative mismatch `|f_L(0) − f_R(0)| / f_L(0)`.
    pub fn continuity_gap(&self) -> f64 {
        let l = self.left.at_zero();
        fabs(l - self.right.at_zero()) / l
    }

    /// One relative price: a fair coin picks the half, then the magnitude is
    /// drawn from that half's family.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if rng.random::<bool>() {
            self.right.sample_magnitude(rng)
        } else {
            -self.left.sample_magnitude(rng)
        }
    }
}

/// Autocovariance of unit-variance fractional Gaussian noise at lag `k`.
pub fn fgn_autocovariance(hurst: f64, k: usize) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * (pow(k + 1.0, h2) - 2.0 * pow(k, h2) + pow(fabs(k - 1.0), h2))
}

/// Unit-variance fractional Gaussian noise of length `n` by exact circulant
/// embedding.
pub fn fractional_gaussian_noise<R: Rng + ?Sized>(
    hurst: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>, StochasticError> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(StochasticError::InvalidHurst(hurst));
    }
    if n == 0 {
        return Err(StochasticError::SeriesTooShort { len: 0, min: 1 });
    }
    let m = (2 * n).next_power_of_two().max(2);
    let mut row: Vec<Complex> = (0..m)
        .map(|j| Complex::new(fgn_autocovariance(hurst, j.min(m - j)), 0.0))
        .collect();
    fft(&mut row);
    let scale = row.iter().fold(0.0_f64, |acc, c| acc.max(fabs(c.re)));
    let mut weights = Vec::with_capacity(m);
    for c in &row {
        let ev = c.re;
        if ev < -1e-9 * scale {
            return Err(StochasticError::EmbeddingNotPsd(ev));
        }
        weights.push(sqrt(ev.max(0.0) / m as f64));
    }
    let mut buf: Vec<Complex> = weights
        .iter()
        .map(|&w| Complex::new(w * standard_normal(rng), w * standard_normal(rng)))
        .collect();
    fft(&mut buf);
    Ok(buf[..n].iter().map(|c| c.re).collect())
}

/// Order signs as a `±1` series with a target Hurst index.
#[derive(Debug, Clone, PartialEq)]
pub struct SignSeries {
    pub values: Vec<i8>,
    pub target_hurst: f64,
}

impl SignSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&s| s as f64).collect()
    }
}

/// Signs of fractional Gaussian noise; exact zeros map to `+1`.
pub fn generate_sign_series<R: Rng + ?Sized>(
    hurst: f64,
    n: usize,
    rng: &mut R,
) -> Result<SignSeries, StochasticError> {
    let noise = fractional_gaussian_noise(hurst, n, rng)?;
    let values = noise.iter().map(|&z| if z < 0.0 { -1 } else { 1 }).collect();
    Ok(SignSeries { values, target_hurst: hurst })
}

/// Minimum series length accepted by [`estimate_hurst`].
pub const DFA_MIN_LEN: usize = 1 << 10;

/// Hurst exponent by first-order detrended fluctuation analysis.
///
/// Box sizes are log-spaced from 16 to `n/8`; boxes tile the profile from
/// both ends. The exponent is the OLS slope of `log F(s)` on `log s`.
pub fn estimate_hurst(series: &[f64]) -> Result<f64, StochasticError> {
    let n = series.len();
    if n < DFA_MIN_LEN {
        return Err(StochasticError::SeriesTooShort { len: n, min: DFA_MIN_LEN });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let var = series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    if !(var > 0.0) {
        return Err(StochasticError::DegenerateSeries);
    }
    let mut profile = vec![0.0; n];
    let mut acc = 0.0;
    for (p, v) in profile.iter_mut().zip(series) {
        acc += v - mean;
        *p = acc;
    }

    let s_min = 16.0_f64;
    let s_max = (n / 8) as f64;
    let n_scales = 20;
    let mut scales: Vec<usize> = (0..n_scales)
        .map(|i| libm::round(s_min * pow(s_max / s_min, i as f64 / (n_scales - 1) as f64)) as usize)
        .collect();
    scales.dedup();

    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &s in &scales {
        let boxes = n / s;
        let mut total = 0.0;
        let mut count = 0usize;
        for b in 0..boxes {
            total += detrended_sq(&profile[b * s..(b + 1) * s]);
            total += detrended_sq(&profile[n - (b + 1) * s..n - b * s]);
            count += 2 * s;
        }
        let f = sqrt(total / count as f64);
        if f > 0.0 {
            xs.push(log(s as f64));
            ys.push(log(f));
        }
    }
    if xs.len() < 2 {
        return Err(StochasticError::DegenerateSeries);
    }
    Ok(slope(&xs, &ys))
}

// Residual sum of squares of a box after removing its least-squares line.
fn detrended_sq(seg: &[f64]) -> f64 {
    let m = seg.len() as f64;
    let t_mean = (m - 1.0) / 2.0;
    let y_mean = seg.iter().sum::<f64>() / m;
    let (mut sty, mut stt) = (0.0, 0.0);
    for (i, y) in seg.iter().enumerate() {
        let dt = i as f64 - t_mean;
        sty += dt * (y - y_mean);
        stt += dt * dt;
    }
    let b = sty / stt;
    seg.iter()
        .enumerate()
        .map(|(i, y)| {
            let r = y - y_mean - b * (i as f64 - t_mean);
            r * r
        })
        .sum()
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn laplace_at_zero_is_half_rate() {
        let d = DensityFamily::laplace(208.9).unwrap();
        assert!((d.density(0.0) - 104.45).abs() < 1e-12);
    }

    #[test]
    fn gaussian_at_zero() {
        let s = 0.0038;
        let d = DensityFamily::gaussian(s).unwrap();
        assert!((d.density(0.0) - 1.0 / (s * sqrt(2.0 * PI))).abs() < 1e-9);
    }

    #[test]
    fn student_at_zero_matches_closed_form() {
        let d = DensityFamily::student(1.3, 9.813e4).unwrap();
        let want = sqrt(9.813e4 / 1.3) / beta(0.5, 0.65);
        assert!((d.density(0.0) / want - 1.0).abs() < 1e-12);
        assert!((d.at_zero() / want - 1.0).abs() < 1e-14);
        assert!((want - 104.4).abs() < 0.1, "{want}");
    }

    #[test]
    fn continuity_values() {
        let p = solve_continuity(1.3, 0.0024).unwrap();
        assert!((p.l - 9.813e4).abs() / 9.813e4 < 1e-4, "{}", p.l);
        assert!((p.lambda - 208.9).abs() < 0.1, "{}", p.lambda);
        assert!((p.sigma - 3.820e-3).abs() < 1e-6, "{}", p.sigma);
        assert!((p.laplace_gauss_product() / LAPLACE_GAUSS_PRODUCT - 1.0).abs() < 1e-10);
    }

    #[test]
    fn continuity_rejects_bad_domain() {
        assert!(solve_continuity(0.0, 0.0024).is_err());
        assert!(solve_continuity(1.3, -1.0).is_err());
        assert!(solve_continuity(f64::NAN, 0.0024).is_err());
    }

    #[test]
    fn all_pairings_are_continuous() {
        for &a in &[0.9, 1.3, 1.9, 3.5] {
            for l in FamilyKind::ALL {
                for r in FamilyKind::ALL {
                    let spec = PriceSamplerSpec::solve(l, r, a, 0.0024).unwrap();
                    assert!(spec.continuity_gap() < 1e-10, "{l} {r} {a}");
                }
            }
        }
    }

    #[test]
    fn family_names_parse() {
        for k in FamilyKind::ALL {
            assert_eq!(FamilyKind::parse(k.name()), Some(k));
            assert_eq!(FamilyKind::parse(k.tag()), Some(k));
        }
        assert_eq!(FamilyKind::parse("StudentQG"), Some(FamilyKind::StudentQG));
        assert_eq!(FamilyKind::parse("cauchy"), None);
    }

    #[test]
    fn fgn_has_unit_variance_and_right_lag_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 0.8;
        let z = fractional_gaussian_noise(h, 1 << 16, &mut rng).unwrap();
        let n = z.len() as f64;
        let var = z.iter().map(|v| v * v).sum::<f64>() / n;
        let lag1 = z.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (n - 1.0);
        assert!((var - 1.0).abs() < 0.05, "{var}");
        assert!((lag1 - fgn_autocovariance(h, 1)).abs() < 0.05, "{lag1}");
    }

    #[test]
    fn fgn_rejects_bad_hurst() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(fractional_gaussian_noise(1.0, 8, &mut rng).is_err());
        assert!(fractional_gaussian_noise(0.0, 8, &mut rng).is_err());
        assert!(fractional_gaussian_noise(0.5, 0, &mut rng).is_err());
    }

    #[test]
    fn signs_are_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = generate_sign_series(0.7, 1000, &mut rng).unwrap();
        assert_eq!(s.len(), 1000);
        assert!(s.values.iter().all(|&v| v == 1 || v == -1));
    }

    #[test]
    fn dfa_rejects_short_and_constant() {
        assert!(matches!(estimate_hurst(&[1.0; 100]), Err(StochasticError::SeriesTooShort { .. })));
        assert_eq!(estimate_hurst(&[1.0; 2048]), Err(StochasticError::DegenerateSeries));
    }

    #[test]
    fn dfa_white_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z: Vec<f64> = (0..1 << 16).map(|_| standard_normal(&mut rng)).collect();
        let h = estimate_hurst(&z).unwrap();
        assert!((h - 0.5).abs() < 0.05, "{h}");
    }
}
