use mfsim_core::special::beta;
use mfsim_core::stochastic::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SIGMA_X: f64 = 0.0024;

// Densities written out from their closed forms, independent of the crate.
fn student_pdf(x: f64, alpha: f64, l: f64) -> f64 {
    l.sqrt() * alpha.powf(alpha / 2.0) / beta(0.5, alpha / 2.0) * (alpha + l * x * x).powf(-(alpha + 1.0) / 2.0)
}

fn laplace_pdf(x: f64, lambda: f64) -> f64 {
    lambda / 2.0 * (-lambda * x.abs()).exp()
}

fn gauss_pdf(x: f64, sigma: f64) -> f64 {
    (-x * x / (2.0 * sigma * sigma)).exp() / ((2.0 * std::f64::consts::PI).sqrt() * sigma)
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// KS distance between magnitudes and the one-sided CDF `2∫₀^m f`,
/// integrated piecewise along the sorted sample.
fn ks_against_quadrature(mut mags: Vec<f64>, pdf: &dyn Fn(f64) -> f64) -> f64 {
    mags.sort_by(f64::total_cmp);
    let n = mags.len() as f64;
    let (mut prev, mut cdf, mut d) = (0.0, 0.0, 0.0f64);
    for (i, &m) in mags.iter().enumerate() {
        cdf += 2.0 * simpson(pdf, prev, m, 16);
        prev = m;
        d = d.max((cdf - i as f64 / n).abs()).max((cdf - (i + 1) as f64 / n).abs());
    }
    d
}

#[test]
fn samplers_match_quadrature_cdf() {
    let n = 100_000;
    let band = 1.63 / (n as f64).sqrt();
    for &alpha in &[0.9, 1.3, 1.9] {
        let p = solve_continuity(alpha, SIGMA_X).unwrap();
        let cases: [(DensityFamily, Box<dyn Fn(f64) -> f64>); 3] = [
            (DensityFamily::student(alpha, p.l).unwrap(), Box::new(move |x| student_pdf(x, alpha, p.l))),
            (DensityFamily::laplace(p.lambda).unwrap(), Box::new(move |x| laplace_pdf(x, p.lambda))),
            (DensityFamily::gaussian(p.sigma).unwrap(), Box::new(move |x| gauss_pdf(x, p.sigma))),
        ];
        for (k, (fam, pdf)) in cases.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
            let mags: Vec<f64> = (0..n).map(|_| fam.sample_magnitude(&mut rng)).collect();
            let d = ks_against_quadrature(mags, pdf.as_ref());
            assert!(d < band, "{fam:?}: D = {d}");
        }
    }
}

#[test]
fn student_cdf_matches_quadrature() {
    let (alpha, l) = (1.3, 9.813e4);
    let d = DensityFamily::student(alpha, l).unwrap();
    let pdf = |x: f64| student_pdf(x, alpha, l);
    for &x in &[1e-4, 1e-3, 5e-3, 0.02] {
        let want = 0.5 + simpson(&pdf, 0.0, x, 4000);
        assert!((d.cdf(x) - want).abs() < 1e-9, "{x}: {} vs {want}", d.cdf(x));
        assert!((d.cdf(-x) - (1.0 - want)).abs() < 1e-9);
    }
}

#[test]
fn continuity_constraints_hold() {
    for &alpha in &[0.9, 1.3, 1.9] {
        let p = solve_continuity(alpha, SIGMA_X).unwrap();
        let l = alpha / ((1.0 + alpha) * SIGMA_X * SIGMA_X);
        assert!((p.l / l - 1.0).abs() < 1e-10);
        let b = beta(0.5, alpha / 2.0);
        // 2√(L/α) = λ B(½, α/2)
        assert!((2.0 * (p.l / alpha).sqrt() / (p.lambda * b) - 1.0).abs() < 1e-10);
        // B(½, α/2) = σ √(2πL/α)
        assert!((b / (p.sigma * (2.0 * std::f64::consts::PI * p.l / alpha).sqrt()) - 1.0).abs() < 1e-10);
        assert!((p.laplace_gauss_product() / (2.0 / std::f64::consts::PI) - 1.0).abs() < 1e-10);
        let f0 = student_pdf(0.0, alpha, p.l);
        assert!((laplace_pdf(0.0, p.lambda) / f0 - 1.0).abs() < 1e-10);
        assert!((gauss_pdf(0.0, p.sigma) / f0 - 1.0).abs() < 1e-10);
    }
}

#[test]
fn composite_uses_each_half() {
    let spec = PriceSamplerSpec::solve(FamilyKind::Gaussian, FamilyKind::Laplace, 1.3, SIGMA_X).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let xs: Vec<f64> = (0..200_000).map(|_| spec.sample(&mut rng)).collect();
    let neg: Vec<f64> = xs.iter().filter(|&&x| x < 0.0).map(|x| -x).collect();
    let pos: Vec<f64> = xs.iter().copied().filter(|&x| x > 0.0).collect();
    let frac = neg.len() as f64 / xs.len() as f64;
    assert!((frac - 0.5).abs() < 3.0 * (0.25 / xs.len() as f64).sqrt() + 1e-12, "{frac}");
    let p = solve_continuity(1.3, SIGMA_X).unwrap();
    let band = 1.63 / (neg.len().min(pos.len()) as f64).sqrt();
    assert!(ks_against_quadrature(neg, &|x| gauss_pdf(x, p.sigma)) < band);
    assert!(ks_against_quadrature(pos, &|x| laplace_pdf(x, p.lambda)) < band);
}

#[test]
fn sign_series_hurst_targets() {
    for (k, &h) in [0.5, 0.7, 0.8].iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(40 + k as u64);
        let s = generate_sign_series(h, 1 << 17, &mut rng).unwrap();
        let est = estimate_hurst(&s.as_f64()).unwrap();
        assert!((est - h).abs() <= 0.05, "target {h}, got {est}");
    }
}

#[test]
fn sign_series_is_balanced() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let s = generate_sign_series(0.5, 1 << 16, &mut rng).unwrap();
    let mean = s.values.iter().map(|&v| v as f64).sum::<f64>() / s.len() as f64;
    assert!(mean.abs() < 0.02, "{mean}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn continuity_for_any_pairing(alpha in 0.5f64..4.0, sx in 1e-4f64..1e-2, l in 0usize..3, r in 0usize..3) {
        let spec = PriceSamplerSpec::solve(FamilyKind::ALL[l], FamilyKind::ALL[r], alpha, sx).unwrap();
        prop_assert!(spec.continuity_gap() < 1e-10);
        prop_assert!((spec.cdf(0.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cdf_is_monotone(alpha in 0.5f64..4.0, a in -0.05f64..0.05, b in -0.05f64..0.05, k in 0usize..3) {
        let spec = PriceSamplerSpec::solve(FamilyKind::ALL[k], FamilyKind::ALL[(k + 1) % 3], alpha, SIGMA_X).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(spec.cdf(lo) <= spec.cdf(hi) + 1e-15);
        prop_assert!((0.0..=1.0).contains(&spec.cdf(lo)));
    }

    #[test]
    fn fgn_length_and_finiteness(h in 0.05f64..0.95, n in 1usize..3000, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = fractional_gaussian_noise(h, n, &mut rng).unwrap();
        prop_assert_eq!(z.len(), n);
        prop_assert!(z.iter().all(|v| v.is_finite()));
    }
}
