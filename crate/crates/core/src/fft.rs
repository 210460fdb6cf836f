//! In-place radix-2 complex FFT (power-of-two lengths only).

use core::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }
}

impl Add for Complex {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for Complex {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for Complex {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
}

/// Forward transform `X_k = Σ_j x_j e^{−2πijk/n}`.
///
/// Panics if `buf.len()` is not a power of two.
pub fn fft(buf: &mut [Complex]) {
    let n = buf.len();
    assert!(n.is_power_of_two(), "fft length must be a power of two");
    if n < 2 {
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * core::f64::consts::PI / len as f64;
        let half = len / 2;
        for k in 0..half {
            // Twiddles computed directly rather than by recurrence; keeps
            // round-off at O(ε log n) for the 2^18-point transforms we run.
            let (s, c) = libm::sincos(ang * k as f64);
            let w = Complex::new(c, s);
            for start in (0..n).step_by(len) {
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn naive_dft(x: &[Complex]) -> Vec<Complex> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter().enumerate().fold(Complex::default(), |acc, (j, v)| {
                    let ang = -2.0 * core::f64::consts::PI * (j * k) as f64 / n as f64;
                    acc + *v * Complex::new(libm::cos(ang), libm::sin(ang))
                })
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        let x: Vec<Complex> = (0..64)
            .map(|i| Complex::new(libm::sin(i as f64 * 0.37) + 0.1 * i as f64, libm::cos(i as f64 * 1.3)))
            .collect();
        let want = naive_dft(&x);
        let mut got = x.clone();
        fft(&mut got);
        for (g, w) in got.iter().zip(&want) {
            assert!((g.re - w.re).abs() < 1e-10 && (g.im - w.im).abs() < 1e-10);
        }
    }

    #[test]
    #[should_panic]
    fn rejects_non_power_of_two() {
        let mut x = alloc::vec![Complex::default(); 12];
        fft(&mut x);
    }
}
