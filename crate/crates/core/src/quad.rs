//! Quadrature and interpolation on uniform periodic grids.

use std::f64::consts::TAU;

/// Uniform grid of `n` points on `[0, 2π)`.
pub fn phase_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| TAU * i as f64 / n as f64).collect()
}

/// Trapezoid rule for a `period`-periodic integrand with `n` nodes.
///
/// For analytic periodic integrands the error decays geometrically in `n`.
pub fn periodic_trapezoid(f: impl Fn(f64) -> f64, period: f64, n: usize) -> f64 {
    let h = period / n as f64;
    (0..n).map(|i| f(i as f64 * h)).sum::<f64>() * h
}

/// Trigonometric interpolant of samples on a uniform `[0, 2π)` grid.
///
/// Holds the real Fourier coefficients `a_j, b_j` of
/// `p(φ) = a_0 + Σ a_j cos jφ + b_j sin jφ`; the Nyquist term (even `n`) is
/// kept with half weight in cosine form so that `p` reproduces the samples.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl TrigInterpolant {
    pub fn new(samples: &[f64]) -> Self {
        let n = samples.len();
        assert!(n > 0, "empty sample set");
        let half = n / 2;
        let mut a = vec![0.0; half + 1];
        let mut b = vec![0.0; half + 1];
        for (j, (aj, bj)) in a.iter_mut().zip(b.iter_mut()).enumerate() {
            let mut sa = 0.0;
            let mut sb = 0.0;
            for (i, &v) in samples.iter().enumerate() {
                // (i*j) mod n keeps the angle small and exact.
                let ang = TAU * ((i * j) % n) as f64 / n as f64;
                sa += v * ang.cos();
                sb += v * ang.sin();
            }
            let w = if j == 0 || (n.is_multiple_of(2) && j == half) {
                1.0
            } else {
                2.0
            };
            *aj = w * sa / n as f64;
            *bj = w * sb / n as f64;
        }
        Self { a, b }
    }

    pub fn eval(&self, phi: f64) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .enumerate()
            .map(|(j, (a, b))| {
                let x = j as f64 * phi;
                a * x.cos() + b * x.sin()
            })
            .sum()
    }

    pub fn derivative(&self, phi: f64) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .enumerate()
            .map(|(j, (a, b))| {
                let jf = j as f64;
                let x = jf * phi;
                jf * (b * x.cos() - a * x.sin())
            })
            .sum()
    }

    /// Mean value (the `j = 0` coefficient).
    pub fn mean(&self) -> f64 {
        self.a[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_is_spectral_for_periodic() {
        // ∫_0^{2π} e^{cos t} dt = 2π I0(1)
        let exact = TAU * 1.266_065_877_752_008_4;
        let v = periodic_trapezoid(|t| t.cos().exp(), TAU, 32);
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn interpolant_reproduces_bandlimited() {
        let g = phase_grid(16);
        let f = |p: f64| 0.3 - 1.2 * p.sin() + 0.5 * (3.0 * p).cos();
        let s: Vec<f64> = g.iter().map(|&p| f(p)).collect();
        let ip = TrigInterpolant::new(&s);
        for &p in &[0.123, 1.7, 4.4] {
            assert!((ip.eval(p) - f(p)).abs() < 1e-13);
            let d = -1.2 * p.cos() - 1.5 * (3.0 * p).sin();
            assert!((ip.derivative(p) - d).abs() < 1e-12);
        }
        assert!((ip.mean() - 0.3).abs() < 1e-15);
    }
}
