//! Complete elliptic integrals and Jacobi elliptic functions.
//!
//! Everything here runs off the arithmetic–geometric mean of `1` and the
//! complementary modulus `k'`. Keeping `k'` as a first-class field (rather
//! than recomputing `sqrt(1 - k^2)`) is what makes moduli extremely close to
//! one usable: orbits near a homoclinic loop need `k'` far below the
//! resolution of `1 - k` in double precision.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest modulus accepted by [`EllipticModulus::new`].
pub const K_MAX: f64 = 1.0 - 1e-12;

/// Smallest complementary modulus accepted by
/// [`EllipticModulus::from_complement`].
pub const KPRIME_MIN: f64 = 1e-100;

const AGM_REL_TOL: f64 = 1e-15;
const AGM_MAX_ITER: usize = 64;

/// An elliptic modulus `k` in `[0, 1)` together with `k' = sqrt(1 - k^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticModulus {
    k: f64,
    kprime: f64,
}

impl EllipticModulus {
    /// Modulus from `k`; `k` must lie in `[0, 1 - 1e-12]`.
    pub fn new(k: f64) -> Result<Self> {
        if !k.is_finite() || !(0.0..=K_MAX).contains(&k) {
            return Err(Error::Domain(format!(
                "elliptic modulus k = {k} outside [0, 1 - 1e-12]"
            )));
        }
        // (1 - k)(1 + k) keeps relative accuracy for k near one.
        let kprime = ((1.0 - k) * (1.0 + k)).sqrt();
        Ok(Self { k, kprime })
    }

    /// Modulus from the complementary modulus `k'` in `[1e-100, 1]`.
    pub fn from_complement(kprime: f64) -> Result<Self> {
        if !kprime.is_finite() || !(KPRIME_MIN..=1.0).contains(&kprime) {
            return Err(Error::Domain(format!(
                "complementary modulus k' = {kprime} outside [1e-100, 1]"
            )));
        }
        let k = ((1.0 - kprime) * (1.0 + kprime)).sqrt();
        Ok(Self { k, kprime })
    }

    /// Modulus parameterised by `y = ln(k'/k)`, accurate at both ends.
    ///
    /// Used by root finders that need to resolve `k -> 0` and `k -> 1`
    /// with full relative precision.
    pub fn from_log_ratio(y: f64) -> Result<Self> {
        if !y.is_finite() {
            return Err(Error::Domain(format!("log-ratio {y} is not finite")));
        }
        let (k, kprime) = if y >= 0.0 {
            let e = (-y).exp();
            let s = (1.0 + e * e).sqrt();
            (e / s, 1.0 / s)
        } else {
            let e = y.exp();
            let s = (1.0 + e * e).sqrt();
            (1.0 / s, e / s)
        };
        if kprime < KPRIME_MIN {
            return Err(Error::Domain(format!(
                "complementary modulus k' = {kprime} below 1e-100"
            )));
        }
        Ok(Self { k, kprime })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn kprime(&self) -> f64 {
        self.kprime
    }

    /// `ln(k'/k)`; inverse of [`EllipticModulus::from_log_ratio`].
    pub fn log_ratio(&self) -> f64 {
        self.kprime.ln() - self.k.ln()
    }

    /// The complementary modulus as a modulus in its own right (`k <-> k'`).
    pub fn complement(&self) -> Self {
        Self {
            k: self.kprime,
            kprime: self.k,
        }
    }
}

/// AGM sequence of `(a0, b0)`; returns the `a_n` and `c_n = (a_{n-1} - b_{n-1})/2`.
fn agm_sequence(a0: f64, b0: f64) -> (Vec<f64>, Vec<f64>) {
    let mut a = vec![a0];
    let mut c = vec![0.0];
    let (mut an, mut bn) = (a0, b0);
    for _ in 0..AGM_MAX_ITER {
        if (an - bn).abs() < AGM_REL_TOL * an.abs() {
            break;
        }
        let a_next = 0.5 * (an + bn);
        let b_next = (an * bn).sqrt();
        c.push(0.5 * (an - bn));
        an = a_next;
        bn = b_next;
        a.push(an);
    }
    (a, c)
}

/// Complete elliptic integral of the first kind, `K(k)`.
pub fn ellip_k(m: &EllipticModulus) -> f64 {
    if m.k == 0.0 {
        return FRAC_PI_2;
    }
    let (a, _) = agm_sequence(1.0, m.kprime);
    PI / (2.0 * a[a.len() - 1])
}

/// Complete elliptic integral of the second kind, `E(k)`.
pub fn ellip_e(m: &EllipticModulus) -> f64 {
    if m.k == 0.0 {
        return FRAC_PI_2;
    }
    let (a, c) = agm_sequence(1.0, m.kprime);
    // E = K (1 - sum_{n>=0} 2^{n-1} c_n^2), c_0 = k.
    let mut sum = 0.5 * m.k * m.k;
    let mut pow = 1.0;
    for cn in c.iter().skip(1) {
        sum += pow * cn * cn;
        pow *= 2.0;
    }
    let kk = PI / (2.0 * a[a.len() - 1]);
    kk * (1.0 - sum)
}

/// `K(k)` for a raw modulus; domain error outside `[0, 1 - 1e-12]`.
pub fn complete_k(k: f64) -> Result<f64> {
    Ok(ellip_k(&EllipticModulus::new(k)?))
}

/// `E(k)` for a raw modulus in `[0, 1]` (`E(1) = 1`).
pub fn complete_e(k: f64) -> Result<f64> {
    if k == 1.0 {
        return Ok(1.0);
    }
    if !k.is_finite() || !(0.0..1.0).contains(&k) {
        return Err(Error::Domain(format!("E(k) needs k in [0, 1], got {k}")));
    }
    if k > K_MAX {
        // Past the modulus cap E is flat to machine precision near 1.
        let kp = ((1.0 - k) * (1.0 + k)).sqrt();
        return Ok(ellip_e(&EllipticModulus::from_complement(kp)?));
    }
    Ok(ellip_e(&EllipticModulus::new(k)?))
}

/// Jacobi elliptic functions `(sn, cn, dn)` of argument `t` and modulus `m`.
///
/// Descending Landen (AGM) scheme. The argument is first reduced modulo the
/// real period `4K`.
pub fn jacobi_sncndn(t: f64, m: &EllipticModulus) -> Result<(f64, f64, f64)> {
    if !t.is_finite() {
        return Err(Error::Domain(format!("jacobi argument {t} is not finite")));
    }
    Ok(sncndn_unchecked(t, m))
}

pub(crate) fn sncndn_unchecked(t: f64, m: &EllipticModulus) -> (f64, f64, f64) {
    if m.k == 0.0 {
        return (t.sin(), t.cos(), 1.0);
    }
    let (a, c) = agm_sequence(1.0, m.kprime);
    let n = a.len() - 1;
    let big_k = PI / (2.0 * a[n]);
    let period = 4.0 * big_k;
    let u = t - period * (t / period).round();

    let mut phi = 2f64.powi(n as i32) * a[n] * u;
    for j in (1..=n).rev() {
        let s = (c[j] / a[j] * phi.sin()).clamp(-1.0, 1.0);
        phi = 0.5 * (phi + s.asin());
    }
    let sn = phi.sin();
    let cn = phi.cos();
    // dn^2 = cn^2 + k'^2 sn^2 is a sum of squares and stays accurate at
    // the quarter period where the usual cn / cos(phi1 - phi0) form is 0/0.
    let dn = cn.hypot(m.kprime * sn);
    (sn, cn, dn)
}

/// Hyperbolic secant with underflow flushed to zero.
pub fn sech(x: f64) -> f64 {
    let ax = x.abs();
    if ax > 700.0 {
        return 0.0;
    }
    let e = (-ax).exp();
    let v = 2.0 * e / (1.0 + e * e);
    if v < 1e-300 {
        0.0
    } else {
        v
    }
}

/// Hyperbolic cosecant with underflow flushed to zero; infinite at zero.
pub fn csch(x: f64) -> f64 {
    if x == 0.0 {
        return f64::INFINITY;
    }
    let ax = x.abs();
    let v = if ax > 700.0 {
        0.0
    } else {
        let e = (-ax).exp();
        2.0 * e / (1.0 - e * e)
    };
    let v = if v < 1e-300 { 0.0 } else { v };
    v.copysign(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent quadrature oracle: ∫_0^{π/2} f(θ) dθ for an even,
    // π-periodic integrand, by the trapezoid rule on [0, π].
    fn half_period_trapezoid(f: impl Fn(f64) -> f64, n: usize) -> f64 {
        let h = PI / n as f64;
        (0..n).map(|i| f(i as f64 * h)).sum::<f64>() * h / 2.0
    }

    // Incomplete F(φ, k) by composite Gauss–Legendre (5 points, 400 panels).
    fn incomplete_f(phi: f64, k: f64) -> f64 {
        const X: [f64; 5] = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683,
            0.0,
            0.538_469_310_105_683,
            0.906_179_845_938_664,
        ];
        const W: [f64; 5] = [
            0.236_926_885_056_189,
            0.478_628_670_499_366,
            0.568_888_888_888_889,
            0.478_628_670_499_366,
            0.236_926_885_056_189,
        ];
        let panels = 400;
        let h = phi / panels as f64;
        let mut s = 0.0;
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for (x, w) in X.iter().zip(W) {
                let th = mid + 0.5 * h * x;
                s += w * 0.5 * h / (1.0 - k * k * th.sin().powi(2)).sqrt();
            }
        }
        s
    }

    #[test]
    fn circular_case() {
        let m = EllipticModulus::new(0.0).unwrap();
        assert_eq!(ellip_k(&m), FRAC_PI_2);
        assert_eq!(ellip_e(&m), FRAC_PI_2);
        for t in [-3.0, 0.1, 2.5, 17.0] {
            let (s, c, d) = jacobi_sncndn(t, &m).unwrap();
            assert_eq!((s, c, d), (t.sin(), t.cos(), 1.0));
        }
    }

    #[test]
    fn k_at_inverse_sqrt2_matches_quadrature() {
        let k = std::f64::consts::FRAC_1_SQRT_2;
        let oracle = half_period_trapezoid(|t| 1.0 / (1.0 - k * k * t.sin().powi(2)).sqrt(), 256);
        assert!((oracle - 1.854_074_677_301_372).abs() < 1e-13);
        let val = complete_k(k).unwrap();
        assert!((val - oracle).abs() < 1e-13, "{val} vs {oracle}");
    }

    #[test]
    fn e_at_inverse_sqrt2_matches_quadrature() {
        let k = std::f64::consts::FRAC_1_SQRT_2;
        let oracle = half_period_trapezoid(|t| (1.0 - k * k * t.sin().powi(2)).sqrt(), 256);
        let val = complete_e(k).unwrap();
        assert!((val - oracle).abs() < 1e-12, "{val} vs {oracle}");
    }

    #[test]
    fn e_endpoints() {
        assert_eq!(complete_e(0.0).unwrap(), FRAC_PI_2);
        assert_eq!(complete_e(1.0).unwrap(), 1.0);
        assert!(complete_e(1.5).is_err());
        assert!(complete_e(-0.1).is_err());
    }

    #[test]
    fn k_near_one_follows_log_asymptote() {
        let k = 0.999_999;
        let val = complete_k(k).unwrap();
        let kp = ((1.0 - k) * (1.0 + k)).sqrt();
        let l = (4.0 / kp).ln();
        let asym = l + 0.25 * kp * kp * (l - 1.0);
        assert!(val.is_finite());
        assert!((val - asym).abs() < 1e-9, "{val} vs {asym}");
    }

    #[test]
    fn domain_errors() {
        assert!(complete_k(1.0).is_err());
        assert!(complete_k(-1e-3).is_err());
        assert!(complete_k(1.0 - 1e-13).is_err());
        assert!(EllipticModulus::from_complement(0.0).is_err());
        assert!(jacobi_sncndn(f64::NAN, &EllipticModulus::new(0.3).unwrap()).is_err());
    }

    #[test]
    fn far_complement_is_usable() {
        let m = EllipticModulus::from_complement(1e-40).unwrap();
        assert_eq!(m.k(), 1.0);
        let kk = ellip_k(&m);
        assert!((kk - (4e40f64).ln()).abs() < 1e-12);
        assert!((ellip_e(&m) - 1.0).abs() < 1e-12);
        // dn(t) ~ sech(t) for t well below K.
        let (_, _, dn) = jacobi_sncndn(3.0, &m).unwrap();
        assert!((dn - sech(3.0)).abs() < 1e-14);
    }

    #[test]
    fn quarter_period_identity() {
        let m = EllipticModulus::new(0.6).unwrap();
        let kk = ellip_k(&m);
        let (s, c, d) = jacobi_sncndn(kk, &m).unwrap();
        assert!((s - 1.0).abs() < 1e-14);
        assert!(c.abs() < 1e-12, "cn(K) = {c}");
        assert!((d - 0.8).abs() < 1e-13);
    }

    #[test]
    fn inverse_via_incomplete_integral() {
        for &k in &[0.3, 0.6, 0.9, 0.99] {
            let m = EllipticModulus::new(k).unwrap();
            for &phi in &[0.2, 0.7, 1.3] {
                let t = incomplete_f(phi, k);
                let (s, c, d) = jacobi_sncndn(t, &m).unwrap();
                assert!((s - phi.sin()).abs() < 1e-12);
                assert!((c - phi.cos()).abs() < 1e-12);
                assert!((d - (1.0 - k * k * phi.sin().powi(2)).sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn log_ratio_roundtrip() {
        for &k in &[1e-6, 0.2, 0.5, 0.9, 1.0 - 1e-9] {
            let m = EllipticModulus::new(k).unwrap();
            let back = EllipticModulus::from_log_ratio(m.log_ratio()).unwrap();
            assert!((back.k() - k).abs() < 1e-15);
            assert!((back.kprime() - m.kprime()).abs() <= 1e-15 * m.kprime().max(1e-300) * 16.0);
        }
    }

    #[test]
    fn sech_csch_guards() {
        assert_eq!(sech(800.0), 0.0);
        assert_eq!(csch(-800.0), -0.0);
        assert!((sech(1.0) - 1.0 / 1f64.cosh()).abs() < 4e-16);
        assert!((csch(0.5) - 1.0 / 0.5f64.sinh()).abs() < 1e-15);
    }

    #[test]
    fn monotone_on_fine_grid() {
        let ks: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        let kv: Vec<f64> = ks.iter().map(|&k| complete_k(k).unwrap()).collect();
        let ev: Vec<f64> = ks.iter().map(|&k| complete_e(k).unwrap()).collect();
        assert!(kv.windows(2).all(|w| w[1] > w[0]));
        assert!(ev.windows(2).all(|w| w[1] < w[0]));
    }
}
