//! Adaptive Dormand–Prince 5(4) integration, stroboscopic maps and Newton
//! shooting for periodic points of forced planar systems.

use std::f64::consts::TAU;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::systems::ForcedPlanarSystem;

/// Right-hand side of `x' = f(t, x)`.
pub trait VectorField: Sync {
    fn dimension(&self) -> usize;
    /// Writes `f(t, x)` into `out` (both of length [`VectorField::dimension`]).
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]);
    fn is_autonomous(&self) -> bool {
        false
    }
}

/// A [`VectorField`] built from a closure.
pub struct FnField<F> {
    dimension: usize,
    autonomous: bool,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(f64, &[f64], &mut [f64]) + Sync,
{
    pub fn new(dimension: usize, autonomous: bool, f: F) -> Self {
        Self {
            dimension,
            autonomous,
            f,
        }
    }
}

impl<F> VectorField for FnField<F>
where
    F: Fn(f64, &[f64], &mut [f64]) + Sync,
{
    fn dimension(&self) -> usize {
        self.dimension
    }
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (self.f)(t, x, out)
    }
    fn is_autonomous(&self) -> bool {
        self.autonomous
    }
}

/// `x' = J DH(x) + eps u(x, nu t + phi0)` as a non-autonomous planar field.
#[derive(Debug, Clone, Copy)]
pub struct ForcedField {
    pub system: ForcedPlanarSystem,
    pub eps: f64,
    pub phi0: f64,
}

impl VectorField for ForcedField {
    fn dimension(&self) -> usize {
        2
    }
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let f = self
            .system
            .field(self.eps, [x[0], x[1]], self.system.nu() * t + self.phi0);
        out.copy_from_slice(&f);
    }
}

/// Autonomous extension `(x, phi)' = (J DH(x) + eps u(x, phi), nu)`.
#[derive(Debug, Clone, Copy)]
pub struct ExtendedField {
    pub system: ForcedPlanarSystem,
    pub eps: f64,
}

impl VectorField for ExtendedField {
    fn dimension(&self) -> usize {
        3
    }
    fn eval(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        let f = self.system.field(self.eps, [x[0], x[1]], x[2]);
        out[0] = f[0];
        out[1] = f[1];
        out[2] = self.system.nu();
    }
    fn is_autonomous(&self) -> bool {
        true
    }
}

/// Accepted steps of an integration, with the field values needed for
/// cubic Hermite dense output.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub derivatives: Vec<Vec<f64>>,
    pub tolerance_used: f64,
}

impl Trajectory {
    pub fn terminal(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Cubic Hermite interpolation between accepted steps.
    pub fn interpolate(&self, t: f64) -> Result<Vec<f64>> {
        let (first, last) = match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => (*a, *b),
            _ => return Err(Error::Domain("empty trajectory".into())),
        };
        if !(first..=last).contains(&t) {
            return Err(Error::Domain(format!("t = {t} outside [{first}, {last}]")));
        }
        let i = match self.times.partition_point(|&s| s <= t) {
            0 => 0,
            p if p >= self.times.len() => self.times.len() - 2,
            p => p - 1,
        };
        if self.times.len() == 1 {
            return Ok(self.states[0].clone());
        }
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        Ok((0..self.states[i].len())
            .map(|d| {
                h00 * self.states[i][d]
                    + h10 * h * self.derivatives[i][d]
                    + h01 * self.states[i + 1][d]
                    + h11 * h * self.derivatives[i + 1][d]
            })
            .collect())
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Cap on accepted plus rejected steps of one integration.
pub const MAX_STEPS: usize = 500_000;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
// PI controller exponents (beta = 0.04, alpha = 1/5 - 0.75 beta).
const PI_BETA: f64 = 0.04;
const PI_ALPHA: f64 = 0.2 - 0.75 * PI_BETA;

struct Stepper<'a, V: ?Sized> {
    field: &'a V,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
}

impl<'a, V: VectorField + ?Sized> Stepper<'a, V> {
    fn new(field: &'a V) -> Self {
        let n = field.dimension();
        Self {
            field,
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
        }
    }

    /// One DP step from `(t, y)` with `k[0] = f(t, y)` already set. Writes the
    /// fifth-order solution to `out` and returns the embedded error vector
    /// in `err` (when given).
    fn step(&mut self, t: f64, y: &[f64], h: f64, out: &mut [f64], err: Option<&mut [f64]>) {
        for s in 1..7 {
            for (d, (td, yd)) in self.tmp.iter_mut().zip(y).enumerate() {
                let mut acc = 0.0;
                for (j, a) in A[s][..s].iter().enumerate() {
                    acc += a * self.k[j][d];
                }
                *td = yd + h * acc;
            }
            self.field.eval(t + C[s] * h, &self.tmp, &mut self.k[s]);
        }
        // Stage 7 is evaluated at the fifth-order solution (FSAL).
        out.copy_from_slice(&self.tmp);
        if let Some(e) = err {
            for (d, ed) in e.iter_mut().enumerate() {
                let mut acc = 0.0;
                for s in 0..7 {
                    acc += (B5[s] - B4[s]) * self.k[s][d];
                }
                *ed = h * acc;
            }
        }
    }
}

fn check_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Integrate `field` from `(t0, x0)` to `t1 > t0` with mixed absolute and
/// relative error tolerance `tol` per step.
pub fn integrate<V: VectorField + ?Sized>(field: &V, x0: &[f64], t0: f64, t1: f64, tol: f64) -> Result<Trajectory> {
    let n = field.dimension();
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Domain(format!("tolerance must be > 0, got {tol}")));
    }
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::Domain(format!("need finite t1 > t0, got [{t0}, {t1}]")));
    }
    if x0.len() != n {
        return Err(Error::Domain(format!(
            "initial state has length {}, field dimension is {n}",
            x0.len()
        )));
    }
    if !check_finite(x0) {
        return Err(Error::Domain("initial state is not finite".into()));
    }

    let mut st = Stepper::new(field);
    let mut y = x0.to_vec();
    let mut t = t0;
    field.eval(t, &y, &mut st.k[0]);
    let mut traj = Trajectory {
        times: vec![t],
        states: vec![y.clone()],
        derivatives: vec![st.k[0].clone()],
        tolerance_used: tol,
    };

    let scale = |a: f64, b: f64| tol + tol * a.abs().max(b.abs());
    // Starting step from the size of the initial derivative.
    let d0 = rms(y.iter().map(|v| v / scale(*v, *v)));
    let d1 = rms(y.iter().zip(&st.k[0]).map(|(v, f)| f / scale(*v, *v)));
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(t1 - t0);

    let mut ynew = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut err_old: f64 = 1e-4;
    let mut steps = 0usize;
    while t < t1 {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::Integration {
                t,
                reason: format!("exceeded {MAX_STEPS} steps"),
            });
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        if h <= 1e-14 * t.abs().max(1.0) && !last {
            return Err(Error::Integration {
                t,
                reason: format!("step size underflow (h = {h:e})"),
            });
        }
        st.step(t, &y, h, &mut ynew, Some(&mut err));
        let e = rms(err.iter().enumerate().map(|(d, e)| e / scale(y[d], ynew[d])));
        if !e.is_finite() || !check_finite(&ynew) {
            h *= 0.25;
            if h <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::Integration {
                    t,
                    reason: "non-finite state".into(),
                });
            }
            continue;
        }
        if e <= 1.0 {
            let fac = if e == 0.0 {
                FAC_MAX
            } else {
                (SAFETY * e.powf(-PI_ALPHA) * err_old.powf(PI_BETA)).clamp(FAC_MIN, FAC_MAX)
            };
            err_old = e.max(1e-4);
            t = if last { t1 } else { t + h };
            std::mem::swap(&mut y, &mut ynew);
            let (k0, rest) = st.k.split_at_mut(1);
            std::mem::swap(&mut k0[0], &mut rest[5]);
            traj.times.push(t);
            traj.states.push(y.clone());
            traj.derivatives.push(st.k[0].clone());
            h *= fac;
        } else {
            h *= (SAFETY * e.powf(-PI_ALPHA)).clamp(FAC_MIN, 1.0);
        }
    }
    Ok(traj)
}

fn rms(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    if n == 0 {
        0.0
    } else {
        (s / n as f64).sqrt()
    }
}

/// Fixed-step fifth-order Dormand–Prince integration; used for order checks.
pub fn integrate_fixed<V: VectorField + ?Sized>(
    field: &V,
    x0: &[f64],
    t0: f64,
    t1: f64,
    steps: usize,
) -> Result<Vec<f64>> {
    if steps == 0 || !(t1 > t0) || x0.len() != field.dimension() {
        return Err(Error::Domain("need steps > 0, t1 > t0 and a matching state".into()));
    }
    let mut st = Stepper::new(field);
    let h = (t1 - t0) / steps as f64;
    let mut y = x0.to_vec();
    let mut ynew = vec![0.0; y.len()];
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        field.eval(t, &y, &mut st.k[0]);
        st.step(t, &y, h, &mut ynew, None);
        std::mem::swap(&mut y, &mut ynew);
    }
    Ok(y)
}

/// Default tolerance of [`stroboscopic_map`].
pub const STROBE_TOL: f64 = 1e-12;

/// State after one forcing period `2 pi / nu`, starting from `x0` at forcing
/// phase `phi0`.
pub fn stroboscopic_map(system: &ForcedPlanarSystem, eps: f64, x0: [f64; 2], phi0: f64) -> Result<[f64; 2]> {
    stroboscopic_map_tol(system, eps, x0, phi0, STROBE_TOL)
}

pub fn stroboscopic_map_tol(
    system: &ForcedPlanarSystem,
    eps: f64,
    x0: [f64; 2],
    phi0: f64,
    tol: f64,
) -> Result<[f64; 2]> {
    let field = ExtendedField { system: *system, eps };
    let traj = integrate(&field, &[x0[0], x0[1], phi0], 0.0, TAU / system.nu(), tol)?;
    let y = traj.terminal();
    Ok([y[0], y[1]])
}

fn iterate_map(system: &ForcedPlanarSystem, eps: f64, x: [f64; 2], phi0: f64, l: u32, tol: f64) -> Result<[f64; 2]> {
    // Each application starts at the same section phase since the forcing
    // phase advances by exactly 2 pi per period.
    let mut y = x;
    for _ in 0..l {
        y = stroboscopic_map_tol(system, eps, y, phi0, tol)?;
    }
    Ok(y)
}

/// Newton iteration cap for [`newton_shoot_periodic`].
pub const NEWTON_MAX_STEPS: usize = 25;
/// Shooting Jacobians with a larger condition number are flagged degenerate.
pub const DEGENERATE_CONDITION: f64 = 1e12;
/// States beyond this norm are treated as divergence.
const DIVERGENCE_NORM: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootOutcome {
    pub point: [f64; 2],
    pub converged: bool,
    /// `|P^l(y) - y|` at the returned point.
    pub residual: f64,
    pub iterations: usize,
    /// Condition number of the last shooting Jacobian exceeded
    /// [`DEGENERATE_CONDITION`].
    pub degenerate: bool,
}

/// Newton's method on `G(y) = P^l(y) - y` where `P` is the stroboscopic map
/// at section phase `phi0`, with a forward-difference Jacobian.
pub fn newton_shoot_periodic(
    system: &ForcedPlanarSystem,
    eps: f64,
    guess: [f64; 2],
    phi0: f64,
    l: u32,
    tol: f64,
) -> Result<ShootOutcome> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be > 0, got {tol}")));
    }
    if l == 0 {
        return Err(Error::Domain("l must be >= 1".into()));
    }
    if !check_finite(&guess) {
        return Err(Error::Domain("initial guess is not finite".into()));
    }
    let itol = (tol * 1e-3).clamp(1e-13, 1e-10);
    let g = |y: [f64; 2]| -> Result<[f64; 2]> {
        let p = iterate_map(system, eps, y, phi0, l, itol)?;
        Ok([p[0] - y[0], p[1] - y[1]])
    };
    let fail = |point: [f64; 2], residual: f64, iterations: usize, degenerate: bool| ShootOutcome {
        point,
        converged: false,
        residual,
        iterations,
        degenerate,
    };

    let mut y = guess;
    let Ok(mut gy) = g(y) else {
        return Ok(fail(y, f64::INFINITY, 0, false));
    };
    let mut degenerate = false;
    for it in 0..=NEWTON_MAX_STEPS {
        let res = gy[0].hypot(gy[1]);
        if res < tol {
            if it == 0 {
                // Already periodic; report whether the Jacobian is degenerate.
                if let Ok(j) = jacobian(&g, y, gy) {
                    degenerate = condition(&j) > DEGENERATE_CONDITION;
                }
            }
            return Ok(ShootOutcome {
                point: y,
                converged: true,
                residual: res,
                iterations: it,
                degenerate,
            });
        }
        if it == NEWTON_MAX_STEPS {
            return Ok(fail(y, res, it, degenerate));
        }
        let Ok(j) = jacobian(&g, y, gy) else {
            return Ok(fail(y, res, it, degenerate));
        };
        degenerate = condition(&j) > DEGENERATE_CONDITION;
        let Some(inv) = j.try_inverse() else {
            return Ok(fail(y, res, it, true));
        };
        let dy = inv * nalgebra::Vector2::new(-gy[0], -gy[1]);
        let ynew = [y[0] + dy[0], y[1] + dy[1]];
        if !check_finite(&ynew) || ynew[0].hypot(ynew[1]) > DIVERGENCE_NORM {
            return Ok(fail(y, res, it + 1, degenerate));
        }
        y = ynew;
        gy = match g(y) {
            Ok(v) => v,
            Err(_) => return Ok(fail(y, f64::INFINITY, it + 1, degenerate)),
        };
    }
    unreachable!("loop returns on its last iteration")
}

fn jacobian(g: &impl Fn([f64; 2]) -> Result<[f64; 2]>, y: [f64; 2], gy: [f64; 2]) -> Result<Matrix2<f64>> {
    let mut j = Matrix2::zeros();
    for c in 0..2 {
        let h = 1e-6 * (1.0 + y[c].abs());
        let mut yp = y;
        yp[c] += h;
        let gp = g(yp)?;
        j[(0, c)] = (gp[0] - gy[0]) / h;
        j[(1, c)] = (gp[1] - gy[1]) / h;
    }
    Ok(j)
}

fn condition(j: &Matrix2<f64>) -> f64 {
    let sv = j.singular_values();
    let (hi, lo) = (sv.max(), sv.min());
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::EllipticModulus;
    use crate::systems::{orbit_family, OrbitKind};

    fn harmonic() -> FnField<impl Fn(f64, &[f64], &mut [f64]) + Sync> {
        FnField::new(2, true, |_t, x: &[f64], o: &mut [f64]| {
            o[0] = x[1];
            o[1] = -x[0];
        })
    }

    #[test]
    fn harmonic_oscillator_returns() {
        let tr = integrate(&harmonic(), &[1.0, 0.0], 0.0, TAU, 1e-10).unwrap();
        let y = tr.terminal();
        assert!((y[0] - 1.0).hypot(y[1]) < 1e-8, "{y:?}");
        assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn dense_output_tracks_exact_solution() {
        let tr = integrate(&harmonic(), &[1.0, 0.0], 0.0, TAU, 1e-10).unwrap();
        for i in 0..=50 {
            let t = TAU * i as f64 / 50.0;
            let y = tr.interpolate(t).unwrap();
            assert!((y[0] - t.cos()).abs() < 1e-6 && (y[1] + t.sin()).abs() < 1e-6);
        }
        assert!(tr.interpolate(7.0).is_err());
    }

    #[test]
    fn fixed_step_order() {
        let err = |n| {
            let y = integrate_fixed(&harmonic(), &[1.0, 0.0], 0.0, TAU, n).unwrap();
            (y[0] - 1.0).hypot(y[1])
        };
        let (e1, e2) = (err(20), err(40));
        assert!(e1 / e2 > 16.0, "{e1} {e2}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(integrate(&harmonic(), &[1.0, 0.0], 0.0, 1.0, 0.0).is_err());
        assert!(integrate(&harmonic(), &[1.0, 0.0], 1.0, 1.0, 1e-8).is_err());
        assert!(integrate(&harmonic(), &[1.0], 0.0, 1.0, 1e-8).is_err());
    }

    #[test]
    fn blow_up_reports_integration_failure() {
        let f = FnField::new(1, true, |_t, x: &[f64], o: &mut [f64]| o[0] = x[0] * x[0]);
        match integrate(&f, &[1.0], 0.0, 2.0, 1e-8) {
            Err(Error::Integration { t, .. }) => assert!(t < 1.0 + 1e-3 && t > 0.9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duffing_interior_orbit_closes() {
        let sys = ForcedPlanarSystem::duffing(1.0, 0.0, 0.0, 1.0).unwrap();
        let fam = orbit_family(&sys, OrbitKind::InteriorPlus).unwrap();
        let m = EllipticModulus::new(0.8).unwrap();
        let x0 = fam.orbit(&m, 0.0);
        let p = fam.period(&m).unwrap();
        let field = ForcedField {
            system: sys,
            eps: 0.0,
            phi0: 0.0,
        };
        let tr = integrate(&field, &x0, 0.0, p, 1e-11).unwrap();
        let y = tr.terminal();
        assert!((y[0] - x0[0]).hypot(y[1] - x0[1]) < 1e-7);
        let h0 = sys.hamiltonian(x0);
        for s in &tr.states {
            assert!((sys.hamiltonian([s[0], s[1]]) - h0).abs() < 1e-8);
        }
    }

    #[test]
    fn unforced_map_ignores_phase() {
        let sys = ForcedPlanarSystem::duffing(1.0, 0.0, 0.0, 1.3).unwrap();
        let a = stroboscopic_map(&sys, 0.0, [0.5, 0.2], 0.0).unwrap();
        let b = stroboscopic_map(&sys, 0.0, [0.5, 0.2], 2.0).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    }

    #[test]
    fn map_perturbation_is_order_eps() {
        let sys = ForcedPlanarSystem::duffing(1.0, 1.0, 0.1, 1.0).unwrap();
        let eps = 1e-3;
        let a = stroboscopic_map(&sys, 0.0, [1.2, 0.1], 0.4).unwrap();
        let b = stroboscopic_map(&sys, eps, [1.2, 0.1], 0.4).unwrap();
        let d = (a[0] - b[0]).hypot(a[1] - b[1]);
        assert!(d < 10.0 * eps && d > 0.0, "{d}");
    }

    #[test]
    fn newton_far_guess_fails() {
        let sys = ForcedPlanarSystem::duffing(1.0, 1.0, 0.1, 1.0).unwrap();
        let out = newton_shoot_periodic(&sys, 1e-3, [1e3, 0.0], 0.0, 1, 1e-9).unwrap();
        assert!(!out.converged);
    }
}
