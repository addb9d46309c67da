//! Subharmonic and homoclinic Melnikov functions for the forced Duffing
//! oscillator, by quadrature along the exact orbits and by closed form.
//!
//! Resonance convention: the pair `(l, n)` means `l T(k) = 2 pi n / nu`, so
//! the orbit closes after `l` of its own periods while the forcing runs
//! through `n` of its periods. The subharmonic integral is taken over that
//! common period `2 pi n / nu`, with the forcing evaluated at `nu t + phi`.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::quad::{phase_grid, TrigInterpolant};
use crate::specfun::{ellip_e, ellip_k, sech, EllipticModulus};
use crate::systems::{orbit_family, ForcedPlanarSystem, OrbitFamily, OrbitKind};

/// Smallest admissible phase grid.
pub const MIN_GRID: usize = 16;
/// Relative mismatch `|l T(k) - 2 pi n / nu| / (2 pi n / nu)` accepted by the
/// subharmonic quadrature.
pub const RESONANCE_TOL: f64 = 1e-10;
/// Relative residual targeted by [`solve_resonance`].
pub const SOLVE_TOL: f64 = 1e-12;
/// Initial trapezoid node count for subharmonic integrals.
pub const SUB_NODES: usize = 2048;
/// Successive quadrature refinements must agree to this (absolute, scaled by
/// `max(1, beta + delta)`).
pub const QUAD_TOL: f64 = 1e-10;
const SUB_NODES_MAX: usize = 1 << 20;
/// Largest truncation time allowed for the homoclinic integral.
pub const HOMOCLINIC_T_MAX: f64 = 60.0;
const HOM_H0: f64 = 0.05;
const HOM_REFINEMENTS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResonancePair {
    l: u32,
    n: u32,
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl ResonancePair {
    pub fn new(l: u32, n: u32) -> Result<Self> {
        if l == 0 || n == 0 {
            return Err(Error::InvalidParameters(format!(
                "resonance ({l}, {n}) needs l, n >= 1"
            )));
        }
        if gcd(l, n) != 1 {
            return Err(Error::InvalidParameters(format!("resonance ({l}, {n}) is not coprime")));
        }
        Ok(Self { l, n })
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Common period `2 pi n / nu` of orbit and forcing.
    pub fn window(&self, nu: f64) -> f64 {
        TAU * f64::from(self.n) / nu
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Subharmonic,
    Homoclinic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub kind: CurveKind,
    pub family: OrbitKind,
    pub resonance: Option<ResonancePair>,
    pub k: Option<f64>,
    pub nu: f64,
    pub beta: f64,
    pub delta: f64,
    pub method: Method,
}

/// Samples of a Melnikov function on a uniform phase grid over `[0, 2 pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelnikovCurve {
    pub phi: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: CurveMeta,
}

impl MelnikovCurve {
    /// Wrap raw samples; checks the grid invariants.
    pub fn from_samples(values: Vec<f64>, meta: CurveMeta) -> Result<Self> {
        if values.len() < MIN_GRID {
            return Err(Error::Domain(format!("phase grid needs at least {MIN_GRID} points")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("curve values must be finite".into()));
        }
        Ok(Self {
            phi: phase_grid(values.len()),
            values,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Pointwise `sup |self - other|`; grids must match.
    pub fn sup_distance(&self, other: &MelnikovCurve) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::Domain("curves live on different grids".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

fn check_grid(n: usize) -> Result<()> {
    if n < MIN_GRID {
        Err(Error::Domain(format!("phase grid size {n} below {MIN_GRID}")))
    } else {
        Ok(())
    }
}

/// Relative mismatch of the resonance relation at modulus `m`.
pub fn resonance_residual(family: &OrbitFamily, m: &EllipticModulus, res: ResonancePair, nu: f64) -> Result<f64> {
    let period = family
        .period(m)
        .ok_or_else(|| Error::IncompatibleFamily(format!("{} is not periodic", family.kind())))?;
    let target = res.window(nu);
    Ok((f64::from(res.l()) * period - target).abs() / target)
}

/// Subharmonic Melnikov function along `family` at the resonant modulus `m`.
pub fn subharmonic_melnikov(
    system: &ForcedPlanarSystem,
    family: &OrbitFamily,
    m: &EllipticModulus,
    res: ResonancePair,
    grid: usize,
) -> Result<MelnikovCurve> {
    subharmonic_melnikov_shifted(system, family, m, res, grid, 0.0)
}

/// As [`subharmonic_melnikov`] along the time-shifted orbit `x^k(t - shift)`.
/// The result is the unshifted curve translated in phase by `nu shift`.
pub fn subharmonic_melnikov_shifted(
    system: &ForcedPlanarSystem,
    family: &OrbitFamily,
    m: &EllipticModulus,
    res: ResonancePair,
    grid: usize,
    shift: f64,
) -> Result<MelnikovCurve> {
    check_grid(grid)?;
    orbit_family(system, family.kind())?;
    if !family.kind().is_periodic() {
        return Err(Error::IncompatibleFamily(format!("{} is not periodic", family.kind())));
    }
    if !family.contains(m) {
        return Err(Error::Domain(format!(
            "k = {} outside the range of {}",
            m.k(),
            family.kind()
        )));
    }
    let nu = system.nu();
    let mismatch = resonance_residual(family, m, res, nu)?;
    if mismatch > RESONANCE_TOL {
        return Err(Error::ResonanceMismatch(format!(
            "k = {} misses the ({}, {}) resonance at nu = {nu} by relative {mismatch:e}",
            m.k(),
            res.l(),
            res.n()
        )));
    }
    let window = res.window(nu);
    let phis = phase_grid(grid);
    let scale = 1.0f64.max(system.beta() + system.delta());

    // Trapezoid sums are refined by adding the odd nodes of the doubled grid.
    let node_sums = |count: usize, offset: f64, step: f64| -> Vec<f64> {
        let xs: Vec<[f64; 2]> = (0..count)
            .map(|j| family.orbit(m, offset + j as f64 * step - shift))
            .collect();
        exec::map_slice(&phis, |&phi| {
            xs.iter()
                .enumerate()
                .map(|(j, x)| system.energy_rate(*x, nu * (offset + j as f64 * step) + phi))
                .sum::<f64>()
        })
    };

    let mut n = SUB_NODES;
    let mut sums = node_sums(n, 0.0, window / n as f64);
    let mut values: Vec<f64> = sums.iter().map(|s| s * window / n as f64).collect();
    loop {
        if n >= SUB_NODES_MAX {
            return Err(Error::Domain(format!(
                "subharmonic quadrature did not settle by {n} nodes"
            )));
        }
        let h = window / (2 * n) as f64;
        let odd = node_sums(n, h, 2.0 * h);
        for (s, o) in sums.iter_mut().zip(&odd) {
            *s += o;
        }
        n *= 2;
        let next: Vec<f64> = sums.iter().map(|s| s * h).collect();
        let diff = values.iter().zip(&next).fold(0.0f64, |d, (a, b)| d.max((a - b).abs()));
        values = next;
        if diff < QUAD_TOL * scale {
            break;
        }
    }
    MelnikovCurve::from_samples(
        values,
        CurveMeta {
            kind: CurveKind::Subharmonic,
            family: family.kind(),
            resonance: Some(res),
            k: Some(m.k()),
            nu,
            beta: system.beta(),
            delta: system.delta(),
            method: Method::Quadrature,
        },
    )
}

/// Truncation time for the homoclinic integral. On the loop
/// `|x2| <= 2 sqrt 2 e^{-|t|}` and `x2^2 <= 8 e^{-2|t|}`, so the two tails
/// together are below `4 sqrt 2 beta e^{-T} + 8 delta e^{-2T}`; each term is
/// held below half of `tail_tol`.
pub fn homoclinic_truncation(beta: f64, delta: f64, tail_tol: f64) -> Result<f64> {
    if !(tail_tol > 0.0) {
        return Err(Error::Domain(format!("tail tolerance must be > 0, got {tail_tol}")));
    }
    let mut t: f64 = 1.0;
    if beta > 0.0 {
        t = t.max((8.0 * SQRT_2 * beta / tail_tol).ln());
    }
    if delta > 0.0 {
        t = t.max(0.5 * (16.0 * delta / tail_tol).ln());
    }
    if t > HOMOCLINIC_T_MAX {
        return Err(Error::TailBound(format!(
            "tail below {tail_tol:e} needs T* = {t:.3} > {HOMOCLINIC_T_MAX}"
        )));
    }
    Ok(t)
}

/// Homoclinic Melnikov function along the loop `x^h_sign`, forcing phase
/// `nu t + phi`.
pub fn homoclinic_melnikov(
    system: &ForcedPlanarSystem,
    sign: f64,
    grid: usize,
    tail_tol: f64,
) -> Result<MelnikovCurve> {
    check_grid(grid)?;
    let kind = if sign >= 0.0 {
        OrbitKind::HomoclinicPlus
    } else {
        OrbitKind::HomoclinicMinus
    };
    let family = orbit_family(system, kind)?;
    let t_star = homoclinic_truncation(system.beta(), system.delta(), tail_tol)?;
    let nu = system.nu();
    let phis = phase_grid(grid);
    let dummy = EllipticModulus::new(0.0)?;
    let scale = 1.0f64.max(system.beta() + system.delta());

    let trap = |h: f64| -> Vec<f64> {
        let count = (t_star / h).round() as i64;
        let hh = t_star / count as f64;
        let xs: Vec<(f64, [f64; 2], f64)> = (-count..=count)
            .map(|j| {
                let t = j as f64 * hh;
                let w = if j.abs() == count { 0.5 } else { 1.0 };
                (t, family.orbit(&dummy, t), w)
            })
            .collect();
        exec::map_slice(&phis, |&phi| {
            xs.iter()
                .map(|(t, x, w)| w * system.energy_rate(*x, nu * t + phi))
                .sum::<f64>()
                * hh
        })
    };
    let mut h = HOM_H0;
    let mut values = trap(h);
    let mut settled = false;
    for _ in 0..HOM_REFINEMENTS {
        h *= 0.5;
        let next = trap(h);
        let diff = values.iter().zip(&next).fold(0.0f64, |d, (a, b)| d.max((a - b).abs()));
        values = next;
        if diff < QUAD_TOL * scale {
            settled = true;
            break;
        }
    }
    if !settled {
        return Err(Error::Domain("homoclinic quadrature did not settle".into()));
    }
    MelnikovCurve::from_samples(
        values,
        CurveMeta {
            kind: CurveKind::Homoclinic,
            family: kind,
            resonance: None,
            k: None,
            nu,
            beta: system.beta(),
            delta: system.delta(),
            method: Method::Quadrature,
        },
    )
}

/// Orbit families accepted by [`closed_form_duffing`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedFormCase {
    Interior,
    Exterior,
    Soft,
    Homoclinic,
}

impl ClosedFormCase {
    pub fn of(kind: OrbitKind) -> Self {
        match kind {
            OrbitKind::InteriorPlus | OrbitKind::InteriorMinus => Self::Interior,
            OrbitKind::Exterior => Self::Exterior,
            OrbitKind::Soft => Self::Soft,
            OrbitKind::HomoclinicPlus | OrbitKind::HomoclinicMinus => Self::Homoclinic,
        }
    }
}

/// Damping and forcing coefficients `(J1, J2)` with
/// `M(phi) = -delta J1 + sign beta J2 sin(phi)`.
pub fn closed_form_coefficients(
    case: ClosedFormCase,
    k: Option<&EllipticModulus>,
    res: Option<ResonancePair>,
    nu: f64,
) -> Result<(f64, f64)> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("nu must be > 0, got {nu}")));
    }
    if case == ClosedFormCase::Homoclinic {
        return Ok((4.0 / 3.0, SQRT_2 * PI * nu * sech(0.5 * PI * nu)));
    }
    let (Some(m), Some(res)) = (k, res) else {
        return Err(Error::Domain(
            "periodic closed forms need a modulus and a resonance".into(),
        ));
    };
    let (kk, ee) = (ellip_k(m), ellip_e(m));
    let kp2 = m.kprime() * m.kprime();
    let l = f64::from(res.l());
    let n = f64::from(res.n());
    let kk_c = ellip_k(&m.complement());
    let resonant_forcing = res.l() == 1;
    let odd_n = res.n() % 2 == 1;
    match case {
        ClosedFormCase::Interior => {
            let d = 1.0 + kp2; // 2 - k^2
            let j1 = 4.0 * l * (d * ee - 2.0 * kp2 * kk) / (3.0 * d.powf(1.5));
            let j2 = if resonant_forcing {
                SQRT_2 * PI * nu * sech(n * PI * kk_c / kk)
            } else {
                0.0
            };
            Ok((j1, j2))
        }
        ClosedFormCase::Exterior => {
            let (k, kp) = (m.k(), m.kprime());
            let s2 = (k - kp) * (k + kp); // 2k^2 - 1
            if s2 <= 0.0 {
                return Err(Error::Domain(format!("k = {k} outside the exterior range")));
            }
            let j1 = 8.0 * l * (s2 * ee + kp2 * kk) / (3.0 * s2.powf(1.5));
            let j2 = if resonant_forcing && odd_n {
                2.0 * SQRT_2 * PI * nu * sech(n * PI * kk_c / (2.0 * kk))
            } else {
                0.0
            };
            Ok((j1, j2))
        }
        ClosedFormCase::Soft => {
            let (k, kp) = (m.k(), m.kprime());
            let s2 = (kp - k) * (kp + k); // 1 - 2k^2
            if s2 <= 0.0 || k == 0.0 {
                return Err(Error::Domain(format!("k = {k} outside the soft range")));
            }
            let j1 = 8.0 * l * (-s2 * ee + kp2 * kk) / (3.0 * s2.powf(1.5));
            let j2 = if resonant_forcing && odd_n {
                SQRT_2 * PI * PI * n / (kk * s2.sqrt()) * sech(PI * n * kk_c / (2.0 * kk))
            } else {
                0.0
            };
            Ok((j1, j2))
        }
        ClosedFormCase::Homoclinic => unreachable!(),
    }
}

/// Closed-form Melnikov value `-delta J1 + sign beta J2 sin(phi)`.
#[allow(clippy::too_many_arguments)]
pub fn closed_form_duffing(
    case: ClosedFormCase,
    sign: f64,
    k: Option<&EllipticModulus>,
    res: Option<ResonancePair>,
    delta: f64,
    beta: f64,
    nu: f64,
    phi: f64,
) -> Result<f64> {
    let (j1, j2) = closed_form_coefficients(case, k, res, nu)?;
    let s = if sign >= 0.0 { 1.0 } else { -1.0 };
    Ok(-delta * j1 + s * beta * j2 * phi.sin())
}

/// Closed-form counterpart of [`subharmonic_melnikov`] /
/// [`homoclinic_melnikov`] on a `grid`-point phase grid.
pub fn closed_form_curve(
    system: &ForcedPlanarSystem,
    kind: OrbitKind,
    m: Option<&EllipticModulus>,
    res: Option<ResonancePair>,
    grid: usize,
) -> Result<MelnikovCurve> {
    check_grid(grid)?;
    let family = orbit_family(system, kind)?;
    if let (Some(m), Some(r)) = (m, res) {
        if kind.is_periodic() && !family.contains(m) {
            return Err(Error::Domain(format!("k = {} outside the range of {kind}", m.k())));
        }
        let _ = r;
    }
    let (j1, j2) = closed_form_coefficients(ClosedFormCase::of(kind), m, res, system.nu())?;
    let s = kind.sign();
    let values = phase_grid(grid)
        .iter()
        .map(|phi| -system.delta() * j1 + s * system.beta() * j2 * phi.sin())
        .collect();
    MelnikovCurve::from_samples(
        values,
        CurveMeta {
            kind: if kind.is_periodic() {
                CurveKind::Subharmonic
            } else {
                CurveKind::Homoclinic
            },
            family: kind,
            resonance: if kind.is_periodic() { res } else { None },
            k: if kind.is_periodic() {
                m.map(EllipticModulus::k)
            } else {
                None
            },
            nu: system.nu(),
            beta: system.beta(),
            delta: system.delta(),
            method: Method::ClosedForm,
        },
    )
}

// ---------------------------------------------------------------------------
// Resonance solving
// ---------------------------------------------------------------------------

/// Bisection runs in `y = ln(k'/k)`; these bound it (`k >= 1e-9` and
/// `k' >= 1e-100`).
const Y_HI: f64 = 20.723_265_836_946_41; // ln(1e9)
const Y_LO: f64 = -230.0; // k' = 1.3e-100
const Y_EDGE: f64 = 1e-12;
const BISECT_MAX: usize = 200;

fn y_bracket(kind: OrbitKind) -> (f64, f64) {
    match kind {
        OrbitKind::InteriorPlus | OrbitKind::InteriorMinus => (Y_LO, Y_HI),
        OrbitKind::Exterior => (Y_LO, -Y_EDGE),
        OrbitKind::Soft => (Y_EDGE, Y_HI),
        _ => (0.0, 0.0),
    }
}

fn period_at(family: &OrbitFamily, y: f64) -> Result<f64> {
    let m = EllipticModulus::from_log_ratio(y)?;
    Ok(family.period(&m).expect("periodic family"))
}

/// Grid check that the period map is monotone in `y` on the bracket. Run
/// once per family kind.
fn monotonicity(kind: OrbitKind) -> &'static std::result::Result<(), String> {
    static CELLS: [OnceLock<std::result::Result<(), String>>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let idx = match kind {
        OrbitKind::Exterior => 1,
        OrbitKind::Soft => 2,
        _ => 0,
    };
    CELLS[idx].get_or_init(|| {
        let family = OrbitFamily::of(kind);
        let (lo, hi) = y_bracket(kind);
        let npts = 2000;
        let mut prev: Option<f64> = None;
        // Period decreases in y for interior/exterior (k falls as y rises)
        // and increases for the soft family.
        let increasing_in_y = kind == OrbitKind::Soft;
        for i in 0..=npts {
            let y = lo + (hi - lo) * i as f64 / npts as f64;
            let p = period_at(&family, y).map_err(|e| e.to_string())?;
            if let Some(q) = prev {
                // Rounding noise is tolerated where the map is flat (k -> 0).
                let slack = 1e-13 * q;
                let ok = if increasing_in_y {
                    p >= q - slack
                } else {
                    p <= q + slack
                };
                if !ok {
                    return Err(format!("period map of {kind} is not monotone near y = {y}"));
                }
            }
            prev = Some(p);
        }
        Ok(())
    })
}

/// Modulus `k` of the `family` orbit with `l T(k) = 2 pi n / nu`.
pub fn solve_resonance(kind: OrbitKind, nu: f64, res: ResonancePair) -> Result<EllipticModulus> {
    if !(nu.is_finite() && nu > 0.0) {
        return Err(Error::Domain(format!("nu must be > 0, got {nu}")));
    }
    if !kind.is_periodic() {
        return Err(Error::IncompatibleFamily(format!("{kind} has no resonances")));
    }
    if let Err(e) = monotonicity(kind) {
        return Err(Error::Domain(e.clone()));
    }
    let family = OrbitFamily::of(kind);
    let target = res.window(nu) / f64::from(res.l());
    let (mut lo, mut hi) = y_bracket(kind);
    let f = |y: f64| -> Result<f64> { Ok(period_at(&family, y)? - target) };
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if flo == 0.0 {
        return EllipticModulus::from_log_ratio(lo);
    }
    if fhi == 0.0 {
        return EllipticModulus::from_log_ratio(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoResonance(format!(
            "no {kind} orbit with period {target} (nu = {nu}, l = {}, n = {}); attainable periods lie between {} and {}",
            res.l(),
            res.n(),
            (flo + target).min(fhi + target),
            (flo + target).max(fhi + target)
        )));
    }
    let sign_lo = flo.signum();
    for _ in 0..BISECT_MAX {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if fm.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (rlo, rhi) = (f(lo)?.abs(), f(hi)?.abs());
    let y = if rlo <= rhi { lo } else { hi };
    let m = EllipticModulus::from_log_ratio(y)?;
    let rel = (family.period(&m).unwrap() - target).abs() / target;
    if rel > SOLVE_TOL {
        return Err(Error::NoResonance(format!(
            "resonance bisection stalled at relative residual {rel:e}"
        )));
    }
    Ok(m)
}

// ---------------------------------------------------------------------------
// Subharmonic to homoclinic limit
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitEntry {
    /// Number of forcing periods per orbit period.
    pub order: u32,
    pub k: f64,
    pub kprime: f64,
    pub sup_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCheck {
    pub entries: Vec<LimitEntry>,
    /// Orders at which the sup-difference failed to decrease.
    pub warnings: Vec<String>,
}

impl LimitCheck {
    pub fn differences(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.sup_diff).collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.warnings.is_empty()
    }
}

/// Tail tolerance used for the homoclinic reference curve in
/// [`melnikov_limit_check`].
pub const LIMIT_TAIL_TOL: f64 = 1e-12;

/// Distance between the subharmonic functions of the interior orbits whose
/// period is `L` forcing periods (`L` in `orders`) and the homoclinic
/// Melnikov function of the `+` loop.
pub fn melnikov_limit_check(system: &ForcedPlanarSystem, nu: f64, orders: &[u32], grid: usize) -> Result<LimitCheck> {
    check_grid(grid)?;
    if orders.windows(2).any(|w| w[1] <= w[0]) || orders.is_empty() {
        return Err(Error::Domain("orders must be a non-empty increasing list".into()));
    }
    let sys = system.with_nu(nu)?;
    let hom = homoclinic_melnikov(&sys, 1.0, grid, LIMIT_TAIL_TOL)?;
    let family = orbit_family(&sys, OrbitKind::InteriorPlus)?;
    let mut entries = Vec::with_capacity(orders.len());
    for &order in orders {
        let res = ResonancePair::new(1, order)?;
        let m = solve_resonance(OrbitKind::InteriorPlus, nu, res)?;
        let sub = subharmonic_melnikov(&sys, &family, &m, res, grid)?;
        entries.push(LimitEntry {
            order,
            k: m.k(),
            kprime: m.kprime(),
            sup_diff: sub.sup_distance(&hom)?,
        });
    }
    let warnings = entries
        .windows(2)
        .filter(|w| w[1].sup_diff > w[0].sup_diff)
        .map(|w| format!("sup difference grew from order {} to {}", w[0].order, w[1].order))
        .collect();
    Ok(LimitCheck { entries, warnings })
}

// ---------------------------------------------------------------------------
// Zeros and the chaos threshold
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveZero {
    pub phi: f64,
    pub is_simple: bool,
    /// Derivative of the interpolated curve at the zero.
    pub slope: f64,
}

/// Zero location accuracy.
pub const ZERO_TOL: f64 = 1e-10;
/// A zero is simple when `|slope|` exceeds this fraction of `max |values|`.
pub const SIMPLE_SLOPE_REL: f64 = 1e-6;
/// Local extrema with `|value|` below this fraction of `max |values|` are
/// reported as tangential (non-simple) zeros.
pub const TANGENCY_REL: f64 = 1e-8;
const SCAN_REFINE: usize = 8;
const MERGE_DIST: f64 = 1e-5;

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    while b - a > ZERO_TOL {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

fn wrap(phi: f64) -> f64 {
    let p = phi.rem_euclid(TAU);
    if TAU - p < 1e-9 {
        0.0
    } else {
        p
    }
}

fn circ_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Zeros of the trigonometric interpolant of `curve`, located by sign
/// changes on a refined grid and bisection, plus tangential zeros at local
/// extrema that touch zero.
pub fn simple_zero_scan(curve: &MelnikovCurve) -> Vec<CurveZero> {
    let scale = curve.max_abs();
    if scale == 0.0 || curve.values.iter().any(|v| !v.is_finite()) {
        return Vec::new();
    }
    let p = TrigInterpolant::new(&curve.values);
    let n = curve.len() * SCAN_REFINE;
    let grid: Vec<f64> = (0..=n).map(|i| TAU * i as f64 / n as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&x| p.eval(x)).collect();
    let ders: Vec<f64> = grid.iter().map(|&x| p.derivative(x)).collect();

    let mut found: Vec<CurveZero> = Vec::new();
    let slope_min = SIMPLE_SLOPE_REL * scale;
    let push = |phi: f64, found: &mut Vec<CurveZero>, tangent: bool| {
        let phi = wrap(phi);
        let slope = p.derivative(phi);
        let simple = !tangent && slope.abs() > slope_min;
        if let Some(z) = found.iter_mut().find(|z| circ_dist(z.phi, phi) < MERGE_DIST) {
            if !simple {
                z.is_simple = false;
            }
            return;
        }
        found.push(CurveZero {
            phi,
            is_simple: simple,
            slope,
        });
    };

    let flat = 1e-14 * scale;
    for i in 0..n {
        let (a, b) = (grid[i], grid[i + 1]);
        let (fa, fb) = (vals[i], vals[i + 1]);
        if fa.abs() <= flat {
            push(a, &mut found, false);
        } else if fa.signum() != fb.signum() && fb.abs() > flat {
            let r = bisect(|x| p.eval(x), a, b);
            push(r, &mut found, false);
        }
    }
    // Tangencies: extrema of the interpolant with |value| near zero.
    let touch = TANGENCY_REL * scale;
    for i in 0..n {
        let (da, db) = (ders[i], ders[i + 1]);
        if da.signum() != db.signum() || da == 0.0 {
            let x = if da == 0.0 {
                grid[i]
            } else {
                bisect(|x| p.derivative(x), grid[i], grid[i + 1])
            };
            if p.eval(x).abs() <= touch {
                push(x, &mut found, true);
            }
        }
    }
    found.sort_by(|a, b| a.phi.total_cmp(&b.phi));
    found
}

/// Critical ratio `delta / beta` below which the homoclinic Melnikov
/// function has simple zeros: `(3/4) sqrt 2 pi nu sech(pi nu / 2)`.
pub fn chaos_threshold(nu: f64) -> Result<f64> {
    if !(nu.is_finite() && nu > 0.0) {
        return Err(Error::Domain(format!("nu must be > 0, got {nu}")));
    }
    Ok(0.75 * SQRT_2 * PI * nu * sech(0.5 * PI * nu))
}

/// Resolve a family and its resonant modulus in one call.
pub fn resonant_orbit(
    system: &ForcedPlanarSystem,
    kind: OrbitKind,
    res: ResonancePair,
) -> Result<(OrbitFamily, EllipticModulus)> {
    let family = orbit_family(system, kind)?;
    let m = solve_resonance(kind, system.nu(), res)?;
    Ok((family, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hard(beta: f64, delta: f64, nu: f64) -> ForcedPlanarSystem {
        ForcedPlanarSystem::duffing(1.0, beta, delta, nu).unwrap()
    }

    /// Reference `sech(pi nu / 2)` kernel from a plain trapezoid of
    /// `x2(t) sin(nu t)` along the loop, independent of the module code.
    fn loop_forcing_integral(nu: f64) -> f64 {
        let h = 1e-3;
        let mut s = 0.0;
        let mut t = -40.0;
        while t <= 40.0 {
            let x2 = -SQRT_2 * sech(t) * t.tanh();
            s += x2 * (nu * t).sin() * h;
            t += h;
        }
        -s
    }

    #[test]
    fn pair_requires_coprime() {
        assert!(ResonancePair::new(2, 4).is_err());
        assert!(ResonancePair::new(0, 1).is_err());
        assert!(ResonancePair::new(3, 5).is_ok());
    }

    #[test]
    fn kernel_is_sech_not_csch() {
        for nu in [0.5, 1.0, 2.0] {
            let direct = loop_forcing_integral(nu);
            let (_, j2) = closed_form_coefficients(ClosedFormCase::Homoclinic, None, None, nu).unwrap();
            assert!((direct - j2).abs() < 1e-6, "nu = {nu}: {direct} vs {j2}");
        }
    }

    #[test]
    fn round_trip_interior() {
        let k0 = EllipticModulus::new(0.5).unwrap();
        let nu = TAU / (2.0 * ellip_k(&k0) * (2.0f64 - 0.25).sqrt());
        let m = solve_resonance(OrbitKind::InteriorPlus, nu, ResonancePair::new(1, 1).unwrap()).unwrap();
        assert!((m.k() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn round_trip_soft() {
        let k0 = EllipticModulus::new(0.3).unwrap();
        let res = ResonancePair::new(1, 3).unwrap();
        let nu = TAU * 3.0 / (4.0 * ellip_k(&k0) * (1.0f64 - 0.18).sqrt());
        let m = solve_resonance(OrbitKind::Soft, nu, res).unwrap();
        assert!((m.k() - 0.3).abs() < 1e-10);
    }

    #[test]
    fn interior_frequency_ceiling() {
        let nu = TAU / (PI * SQRT_2) * 1.001;
        let r = solve_resonance(OrbitKind::InteriorPlus, nu, ResonancePair::new(1, 1).unwrap());
        assert!(matches!(r, Err(Error::NoResonance(_))));
    }

    #[test]
    fn deep_resonance_beyond_modulus_cap() {
        let m = solve_resonance(OrbitKind::InteriorPlus, 1.0, ResonancePair::new(1, 8).unwrap()).unwrap();
        assert!(m.kprime() < 1e-9);
        let fam = OrbitFamily::of(OrbitKind::InteriorPlus);
        let r = resonance_residual(&fam, &m, ResonancePair::new(1, 8).unwrap(), 1.0).unwrap();
        assert!(r < SOLVE_TOL);
    }

    #[test]
    fn quadrature_needs_resonance() {
        let sys = hard(1.0, 0.0, 1.0);
        let fam = orbit_family(&sys, OrbitKind::InteriorPlus).unwrap();
        let m = EllipticModulus::new(0.5).unwrap();
        let r = subharmonic_melnikov(&sys, &fam, &m, ResonancePair::new(1, 1).unwrap(), 64);
        assert!(matches!(r, Err(Error::ResonanceMismatch(_))));
    }

    #[test]
    fn interior_quadrature_matches_closed_form() {
        let sys = hard(1.0, 0.3, 1.0);
        let res = ResonancePair::new(1, 1).unwrap();
        let (fam, m) = resonant_orbit(&sys, OrbitKind::InteriorPlus, res).unwrap();
        let q = subharmonic_melnikov(&sys, &fam, &m, res, 64).unwrap();
        let c = closed_form_curve(&sys, OrbitKind::InteriorPlus, Some(&m), Some(res), 64).unwrap();
        assert!(q.sup_distance(&c).unwrap() < 1e-6);
    }

    #[test]
    fn interior_higher_l_has_no_forcing_part() {
        let sys = hard(1.0, 0.0, 0.5);
        let res = ResonancePair::new(2, 1).unwrap();
        let (fam, m) = resonant_orbit(&sys, OrbitKind::InteriorPlus, res).unwrap();
        let q = subharmonic_melnikov(&sys, &fam, &m, res, 64).unwrap();
        assert!(q.max_abs() < 1e-8, "{}", q.max_abs());
    }

    #[test]
    fn homoclinic_damping_only() {
        let sys = hard(0.0, 1.0, 1.0);
        let c = homoclinic_melnikov(&sys, 1.0, 32, 1e-12).unwrap();
        assert!(c.values.iter().all(|v| (v + 4.0 / 3.0).abs() < 1e-9));
    }

    #[test]
    fn homoclinic_quadrature_matches_closed_form() {
        for sign in [1.0, -1.0] {
            let sys = hard(1.0, 0.5, 1.0);
            let q = homoclinic_melnikov(&sys, sign, 64, 1e-12).unwrap();
            let kind = if sign > 0.0 {
                OrbitKind::HomoclinicPlus
            } else {
                OrbitKind::HomoclinicMinus
            };
            let c = closed_form_curve(&sys, kind, None, None, 64).unwrap();
            assert!(q.sup_distance(&c).unwrap() < 1e-6);
        }
    }

    #[test]
    fn truncation_bounds() {
        assert!(homoclinic_truncation(1.0, 1.0, 1e-12).unwrap() < HOMOCLINIC_T_MAX);
        assert!(matches!(
            homoclinic_truncation(1.0, 0.0, 1e-30),
            Err(Error::TailBound(_))
        ));
        assert_eq!(homoclinic_truncation(0.0, 0.0, 1e-12).unwrap(), 1.0);
    }

    #[test]
    fn sine_zeros() {
        let meta = CurveMeta {
            kind: CurveKind::Homoclinic,
            family: OrbitKind::HomoclinicPlus,
            resonance: None,
            k: None,
            nu: 1.0,
            beta: 0.0,
            delta: 0.0,
            method: Method::ClosedForm,
        };
        let c = MelnikovCurve::from_samples(phase_grid(64).iter().map(|x| x.sin()).collect(), meta).unwrap();
        let z = simple_zero_scan(&c);
        assert_eq!(z.len(), 2, "{z:?}");
        assert!(z[0].phi.abs() < 1e-9 && (z[1].phi - PI).abs() < 1e-9);
        assert!(z.iter().all(|z| z.is_simple));

        let flat = MelnikovCurve::from_samples(vec![-4.0 / 3.0; 64], meta).unwrap();
        assert!(simple_zero_scan(&flat).is_empty());
    }

    #[test]
    fn threshold_limits() {
        // sech(0) = 1, so the ratio vanishes linearly as nu -> 0.
        let small = chaos_threshold(1e-9).unwrap();
        assert!((small / 1e-9 - 0.75 * SQRT_2 * PI).abs() < 1e-9);
        let two = chaos_threshold(2.0).unwrap();
        assert!((two - 0.75 * SQRT_2 * 2.0 * PI / PI.cosh()).abs() < 1e-14);
        assert!(chaos_threshold(0.0).is_err());
    }

    #[test]
    fn threshold_tangency() {
        let nu = 1.0;
        let thr = chaos_threshold(nu).unwrap();
        for (ratio, count, simple) in [(0.99, 2, true), (1.01, 0, true), (1.0, 1, false)] {
            let sys = hard(1.0, thr * ratio, nu);
            let c = closed_form_curve(&sys, OrbitKind::HomoclinicPlus, None, None, 128).unwrap();
            let z = simple_zero_scan(&c);
            assert_eq!(z.len(), count, "ratio {ratio}: {z:?}");
            assert!(z.iter().all(|z| z.is_simple == simple), "ratio {ratio}: {z:?}");
        }
    }
}
