//! Fourier spectra of action-angle perturbations, resonance lattices and the
//! resonant-torus integrals
//! `I(tau) = int_0^T h(I, omega(I) t + tau) dt = T sum_{r in Lambda} h_r(I) e^{i r.tau}`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::systems::ActionAngleSystem;

/// Default lattice and spectrum truncation `|r|_inf <= R`.
pub const DEFAULT_TRUNCATION: u32 = 12;
/// Default bound on continued-fraction denominators.
pub const DEFAULT_DENOM_BOUND: u64 = 64;
/// Default per-axis size of tau grids.
pub const DEFAULT_TAU_GRID: usize = 32;
/// Smallest per-axis tau grid.
pub const MIN_TAU_GRID: usize = 16;
/// `|r . omega| < RESONANCE_REL |omega|` puts `r` in the lattice.
pub const RESONANCE_REL: f64 = 1e-10;
/// Ratio residual accepted by the continued-fraction detector.
pub const RATIO_TOL: f64 = 1e-10;
/// Largest allowed imaginary part of a Fourier-formula curve.
pub const IMAG_TOL: f64 = 1e-10;
/// Candidate subsets examined by [`check_poincare_point`].
pub const POINCARE_SUBSET_CAP: usize = 1000;
/// Singular values above this count towards a rank in [`check_poincare_point`].
pub const POINCARE_RANK_TOL: f64 = 1e-10;
/// Relative singular-value threshold in [`jacobian_rank_omega`].
pub const JACOBIAN_RANK_REL: f64 = 1e-8;

const QUAD_NODES0: usize = 256;
const QUAD_NODES_MAX: usize = 1 << 16;
const QUAD_TOL: f64 = 1e-12;

/// Fourier coefficients `h_r(I)` for `|r|_inf <= R`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSpectrum {
    pub m: usize,
    pub ell: usize,
    pub truncation: u32,
    coeffs: BTreeMap<Vec<i32>, Vec<Complex64>>,
}

impl FourierSpectrum {
    /// Spectrum from explicit coefficients; missing modes are zero.
    pub fn from_coeffs(
        m: usize,
        ell: usize,
        truncation: u32,
        coeffs: BTreeMap<Vec<i32>, Vec<Complex64>>,
    ) -> Result<Self> {
        for (r, c) in &coeffs {
            if r.len() != m || c.len() != ell {
                return Err(Error::Domain("coefficient shape does not match (m, ell)".into()));
            }
            if r.iter().any(|x| x.unsigned_abs() > truncation) {
                return Err(Error::Domain(format!("mode {r:?} exceeds truncation {truncation}")));
            }
        }
        Ok(Self {
            m,
            ell,
            truncation,
            coeffs,
        })
    }

    pub fn get(&self, r: &[i32]) -> Option<&[Complex64]> {
        self.coeffs.get(r).map(Vec::as_slice)
    }

    /// Coefficient of mode `r`, zero when it was not stored.
    pub fn coeff(&self, r: &[i32]) -> Vec<Complex64> {
        self.get(r)
            .map(<[Complex64]>::to_vec)
            .unwrap_or_else(|| vec![Complex64::new(0.0, 0.0); self.ell])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<i32>, &Vec<Complex64>)> {
        self.coeffs.iter()
    }

    /// Largest coefficient modulus over all modes and components.
    pub fn max_norm(&self) -> f64 {
        self.coeffs.values().flatten().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Largest coefficient modulus on the outer shell `|r|_inf = R`; a
    /// proxy for the truncation tail.
    pub fn shell_norm(&self) -> f64 {
        let r = self.truncation;
        self.coeffs
            .iter()
            .filter(|(k, _)| k.iter().any(|x| x.unsigned_abs() == r))
            .flat_map(|(_, c)| c.iter())
            .fold(0.0, |m, c| m.max(c.norm()))
    }

    /// `sum_r h_r e^{i r.theta}` (real part).
    pub fn reconstruct(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ell];
        for (r, c) in &self.coeffs {
            let ang: f64 = r.iter().zip(theta).map(|(ri, t)| f64::from(*ri) * t).sum();
            let e = Complex64::from_polar(1.0, ang);
            for (o, ci) in out.iter_mut().zip(c) {
                *o += (ci * e).re;
            }
        }
        out
    }
}

fn grid_index_to_angles(mut idx: usize, m: usize, g: usize) -> Vec<f64> {
    let mut th = vec![0.0; m];
    for a in (0..m).rev() {
        th[a] = TAU * (idx % g) as f64 / g as f64;
        idx /= g;
    }
    th
}

/// Coefficients of `h(I, . ; 0)` by FFT on a `(4R)^m` angle grid.
pub fn fourier_coeffs(system: &ActionAngleSystem, action: &[f64], truncation: u32) -> Result<FourierSpectrum> {
    system.check_action(action)?;
    if truncation == 0 {
        return Err(Error::Domain("truncation R must be >= 1".into()));
    }
    let m = system.m;
    let ell = system.ell;
    let g = 4 * truncation as usize;
    let total = g
        .checked_pow(m as u32)
        .filter(|t| *t <= 1 << 24)
        .ok_or_else(|| Error::Domain(format!("angle grid (4R)^m = {g}^{m} is too large")))?;
    let samples: Vec<Vec<f64>> = exec::map_indexed(total, |i| (system.h)(action, &grid_index_to_angles(i, m, g)));
    if samples.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Domain("perturbation is not finite on the angle grid".into()));
    }

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(g);
    let norm = 1.0 / total as f64;
    let mut per_component: Vec<Vec<Complex64>> = Vec::with_capacity(ell);
    for c in 0..ell {
        let mut data: Vec<Complex64> = samples.iter().map(|v| Complex64::new(v[c], 0.0)).collect();
        let mut line = vec![Complex64::new(0.0, 0.0); g];
        for axis in 0..m {
            let stride = g.pow((m - 1 - axis) as u32);
            let block = stride * g;
            for start in 0..total {
                // Visit each line once, from its first element.
                if (start % block) / stride != 0 {
                    continue;
                }
                for j in 0..g {
                    line[j] = data[start + j * stride];
                }
                fft.process(&mut line);
                for j in 0..g {
                    data[start + j * stride] = line[j];
                }
            }
        }
        per_component.push(data.into_iter().map(|z| z * norm).collect());
    }

    let mut coeffs = BTreeMap::new();
    for r in box_modes(m, truncation) {
        let mut idx = 0usize;
        for &ri in &r {
            idx = idx * g + ri.rem_euclid(g as i32) as usize;
        }
        let v: Vec<Complex64> = per_component.iter().map(|d| d[idx]).collect();
        coeffs.insert(r, v);
    }
    FourierSpectrum::from_coeffs(m, ell, truncation, coeffs)
}

/// All `r` with `|r|_inf <= R`, in lexicographic order.
pub fn box_modes(m: usize, truncation: u32) -> Vec<Vec<i32>> {
    let r = truncation as i32;
    let mut out = vec![Vec::with_capacity(m)];
    for _ in 0..m {
        let mut next = Vec::with_capacity(out.len() * (2 * r as usize + 1));
        for p in &out {
            for v in -r..=r {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// `{ r : |r|_inf <= R, r . omega = 0 }` and the fundamental frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceLattice {
    pub omega: Vec<f64>,
    pub truncation: u32,
    pub denom_bound: u64,
    pub members: Vec<Vec<i32>>,
    /// Largest `omega0 > 0` with `omega / omega0` integral, when the
    /// frequency ratios are rational within the denominator bound.
    pub omega0: Option<f64>,
    /// Least common denominator of the frequency ratios, when rational.
    pub denominator: Option<u64>,
}

impl ResonanceLattice {
    pub fn m(&self) -> usize {
        self.omega.len()
    }

    /// `2 pi / omega0`.
    pub fn period(&self) -> Option<f64> {
        self.omega0.map(|w| TAU / w)
    }

    pub fn contains(&self, r: &[i32]) -> bool {
        self.members.iter().any(|x| x.as_slice() == r)
    }
}

fn gcd_u(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Best rational approximation `p/q` of `x` with `q <= bound` whose error is
/// below `RATIO_TOL`, found from the continued-fraction convergents.
pub fn rational_approx(x: f64, bound: u64) -> Option<(i64, u64)> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1): (i64, i64) = (0, 1);
    let (mut k0, mut k1): (u64, u64) = (1, 0);
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i64;
        let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
        // Only the leading partial quotient can be negative, and it meets k1 = 0.
        let k2 = if k1 == 0 {
            k0
        } else {
            (ai as u64).checked_mul(k1)?.checked_add(k0)?
        };
        if k2 > bound {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (x - h1 as f64 / k1 as f64).abs() < RATIO_TOL * x.abs().max(1.0) {
            return Some((h1, k1));
        }
        let frac = y - a;
        if frac == 0.0 {
            break;
        }
        y = 1.0 / frac;
    }
    None
}

/// Fundamental frequency of `omega` and the common denominator of its ratios.
pub fn fundamental_frequency(omega: &[f64], denom_bound: u64) -> Option<(f64, u64)> {
    let (iref, wref) = omega
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))?;
    if wref == 0.0 {
        return None;
    }
    let mut fracs = Vec::with_capacity(omega.len());
    for (i, w) in omega.iter().enumerate() {
        if i == iref {
            fracs.push((1i64, 1u64));
            continue;
        }
        fracs.push(rational_approx(w / wref, denom_bound)?);
    }
    let lcm = fracs
        .iter()
        .try_fold(1u64, |l, (_, q)| l.checked_mul(*q / gcd_u(l, *q)))?;
    let nums: Vec<u64> = fracs.iter().map(|(p, q)| p.unsigned_abs() * (lcm / q)).collect();
    let g = nums.iter().fold(0u64, |g, n| gcd_u(g, *n));
    if g == 0 {
        return None;
    }
    Some((wref.abs() * g as f64 / lcm as f64, lcm))
}

/// Resonance lattice of `omega` within `|r|_inf <= R`.
pub fn resonance_lattice(omega: &[f64], truncation: u32, denom_bound: u64) -> Result<ResonanceLattice> {
    if omega.is_empty() || omega.iter().any(|w| !w.is_finite()) {
        return Err(Error::Domain("frequency vector must be finite and non-empty".into()));
    }
    let norm = omega.iter().map(|w| w * w).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Domain("frequency vector is zero".into()));
    }
    let members = box_modes(omega.len(), truncation)
        .into_iter()
        .filter(|r| {
            let dot: f64 = r.iter().zip(omega).map(|(ri, w)| f64::from(*ri) * w).sum();
            dot.abs() < RESONANCE_REL * norm
        })
        .collect();
    let fund = fundamental_frequency(omega, denom_bound);
    Ok(ResonanceLattice {
        omega: omega.to_vec(),
        truncation,
        denom_bound,
        members,
        omega0: fund.map(|f| f.0),
        denominator: fund.map(|f| f.1),
    })
}

/// Values of `I(tau)` on a product grid over the angle torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralCurve {
    pub m: usize,
    pub per_axis: usize,
    /// `values[i]` belongs to the grid point with row-major index `i`.
    pub values: Vec<Vec<f64>>,
    pub period: f64,
}

impl IntegralCurve {
    pub fn tau(&self, index: usize) -> Vec<f64> {
        grid_index_to_angles(index, self.m, self.per_axis)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest spread `max - min` over the grid, over all components.
    pub fn spread(&self) -> f64 {
        let ell = self.values.first().map_or(0, Vec::len);
        (0..ell)
            .map(|c| {
                let (lo, hi) = self
                    .values
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v[c]), hi.max(v[c]))
                    });
                hi - lo
            })
            .fold(0.0, f64::max)
    }

    pub fn sup_distance(&self, other: &IntegralCurve) -> Result<f64> {
        if self.values.len() != other.values.len() {
            return Err(Error::Domain("curves live on different grids".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max))
    }
}

fn check_tau_grid(per_axis: usize, m: usize) -> Result<usize> {
    if per_axis < MIN_TAU_GRID {
        return Err(Error::Domain(format!(
            "tau grid needs at least {MIN_TAU_GRID} points per axis"
        )));
    }
    per_axis
        .checked_pow(m as u32)
        .filter(|t| *t <= 1 << 22)
        .ok_or_else(|| Error::Domain(format!("tau grid {per_axis}^{m} is too large")))
}

/// `T sum_{r in Lambda} h_r e^{i r.tau}` on a product tau grid.
pub fn resonant_integral_fourier(
    spectrum: &FourierSpectrum,
    lattice: &ResonanceLattice,
    per_axis: usize,
) -> Result<IntegralCurve> {
    if spectrum.m != lattice.m() {
        return Err(Error::Domain(
            "spectrum and lattice disagree on the angle dimension".into(),
        ));
    }
    let period = lattice
        .period()
        .ok_or_else(|| Error::NotResonant(format!("omega = {:?} has no fundamental frequency", lattice.omega)))?;
    let m = spectrum.m;
    let total = check_tau_grid(per_axis, m)?;
    let terms: Vec<(&Vec<i32>, &[Complex64])> = lattice
        .members
        .iter()
        .filter_map(|r| spectrum.get(r).map(|c| (r, c)))
        .collect();
    let scale = spectrum.max_norm().max(1.0) * period;
    let out: Vec<Result<Vec<f64>>> = exec::map_indexed(total, |i| {
        let tau = grid_index_to_angles(i, m, per_axis);
        let mut acc = vec![Complex64::new(0.0, 0.0); spectrum.ell];
        for (r, c) in &terms {
            let ang: f64 = r.iter().zip(&tau).map(|(ri, t)| f64::from(*ri) * t).sum();
            let e = Complex64::from_polar(1.0, ang);
            for (a, ci) in acc.iter_mut().zip(c.iter()) {
                *a += ci * e;
            }
        }
        let mut v = Vec::with_capacity(acc.len());
        for a in acc {
            let z = a * period;
            if z.im.abs() > IMAG_TOL * scale {
                return Err(Error::Domain(format!("imaginary residue {} at tau = {tau:?}", z.im)));
            }
            v.push(z.re);
        }
        Ok(v)
    });
    let values = out.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(IntegralCurve {
        m,
        per_axis,
        values,
        period,
    })
}

/// `int_0^T h(I, omega t + tau) dt` at one `tau` by the periodic trapezoid
/// rule, doubling the node count until it settles.
pub fn resonant_integral_at(
    system: &ActionAngleSystem,
    action: &[f64],
    omega: &[f64],
    period: f64,
    tau: &[f64],
) -> Vec<f64> {
    let eval = |t: f64| -> Vec<f64> {
        let th: Vec<f64> = omega.iter().zip(tau).map(|(w, s)| w * t + s).collect();
        (system.h)(action, &th)
    };
    let mut n = QUAD_NODES0;
    let mut sums = vec![0.0; system.ell];
    for j in 0..n {
        for (s, v) in sums.iter_mut().zip(eval(period * j as f64 / n as f64)) {
            *s += v;
        }
    }
    let mut vals: Vec<f64> = sums.iter().map(|s| s * period / n as f64).collect();
    while n < QUAD_NODES_MAX {
        let h = period / (2 * n) as f64;
        for j in 0..n {
            for (s, v) in sums.iter_mut().zip(eval(h * (2 * j + 1) as f64)) {
                *s += v;
            }
        }
        n *= 2;
        let next: Vec<f64> = sums.iter().map(|s| s * h).collect();
        let scale = next.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let diff = vals.iter().zip(&next).fold(0.0f64, |d, (a, b)| d.max((a - b).abs()));
        vals = next;
        if diff < QUAD_TOL * scale {
            break;
        }
    }
    vals
}

/// Direct quadrature of the resonant integral on a product tau grid.
pub fn resonant_integral_quadrature(
    system: &ActionAngleSystem,
    action: &[f64],
    per_axis: usize,
) -> Result<IntegralCurve> {
    resonant_integral_quadrature_with(system, action, per_axis, DEFAULT_DENOM_BOUND)
}

pub fn resonant_integral_quadrature_with(
    system: &ActionAngleSystem,
    action: &[f64],
    per_axis: usize,
    denom_bound: u64,
) -> Result<IntegralCurve> {
    system.check_action(action)?;
    let m = system.m;
    let total = check_tau_grid(per_axis, m)?;
    let omega = (system.omega)(action);
    let (omega0, _) = fundamental_frequency(&omega, denom_bound).ok_or_else(|| {
        Error::NotResonant(format!(
            "omega = {omega:?} is not resonant within denominators <= {denom_bound}"
        ))
    })?;
    let period = TAU / omega0;
    let values = exec::map_indexed(total, |i| {
        let tau = grid_index_to_angles(i, m, per_axis);
        resonant_integral_at(system, action, &omega, period, &tau)
    });
    if values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Domain("resonant integral is not finite".into()));
    }
    Ok(IntegralCurve {
        m,
        per_axis,
        values,
        period,
    })
}

/// Tristate answer of [`check_poincare_point`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoincareCheck {
    Yes,
    No,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareReport {
    pub result: PoincareCheck,
    /// Modes of the independent set found, if any.
    pub witness: Vec<Vec<i32>>,
    pub subsets_checked: usize,
}

fn int_rank(rows: &[&Vec<i32>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let m = rows[0].len();
    let mat = DMatrix::from_fn(rows.len(), m, |i, j| f64::from(rows[i][j]));
    let sv = mat.singular_values();
    let top = sv.max();
    sv.iter().filter(|s| **s > 1e-9 * top.max(1.0)).count()
}

fn complex_rank(cols: &[&[Complex64]]) -> usize {
    let ell = cols[0].len();
    let mat = DMatrix::from_fn(ell, cols.len(), |i, j| cols[j][i]);
    let sv: DVector<f64> = mat.singular_values();
    sv.iter().filter(|s| **s > POINCARE_RANK_TOL).count()
}

fn mode_order(r: &[i32]) -> (u32, u32, Vec<i32>) {
    let inf = r.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0);
    let one = r.iter().map(|x| x.unsigned_abs()).sum();
    (inf, one, r.to_vec())
}

/// Whether `action` is a Poincare point of order `s`: some `ell - s`
/// distinct lattice modes (nonzero ones linearly independent, `r = 0`
/// admitted) carry linearly independent coefficient vectors.
pub fn check_poincare_point(
    action: &[f64],
    spectrum: &FourierSpectrum,
    lattice: &ResonanceLattice,
    s: usize,
) -> Result<PoincareReport> {
    let ell = spectrum.ell;
    if action.len() != ell {
        return Err(Error::Domain("action dimension differs from the spectrum".into()));
    }
    if s >= ell {
        return Err(Error::Domain(format!("need ell - s >= 1 (ell = {ell}, s = {s})")));
    }
    let d = ell - s;
    let mut cands: Vec<&Vec<i32>> = lattice.members.iter().filter(|r| spectrum.get(r).is_some()).collect();
    cands.sort_by_key(|r| mode_order(r));
    // Modes whose coefficient vector vanishes cannot help.
    cands.retain(|r| spectrum.get(r).unwrap().iter().any(|c| c.norm() > POINCARE_RANK_TOL));
    let mut checked = 0usize;
    if cands.len() < d {
        return Ok(PoincareReport {
            result: PoincareCheck::No,
            witness: vec![],
            subsets_checked: 0,
        });
    }
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        if checked >= POINCARE_SUBSET_CAP {
            return Ok(PoincareReport {
                result: PoincareCheck::Inconclusive,
                witness: vec![],
                subsets_checked: checked,
            });
        }
        checked += 1;
        let pick: Vec<&Vec<i32>> = idx.iter().map(|&i| cands[i]).collect();
        let nonzero: Vec<&Vec<i32>> = pick.iter().copied().filter(|r| r.iter().any(|x| *x != 0)).collect();
        if int_rank(&nonzero) == nonzero.len() {
            let cols: Vec<&[Complex64]> = pick.iter().map(|r| spectrum.get(r).unwrap()).collect();
            if complex_rank(&cols) == d {
                return Ok(PoincareReport {
                    result: PoincareCheck::Yes,
                    witness: pick.into_iter().cloned().collect(),
                    subsets_checked: checked,
                });
            }
        }
        // Next combination in lexicographic order.
        let n = cands.len();
        let mut i = d;
        loop {
            if i == 0 {
                return Ok(PoincareReport {
                    result: PoincareCheck::No,
                    witness: vec![],
                    subsets_checked: checked,
                });
            }
            i -= 1;
            if idx[i] < n - d + i {
                idx[i] += 1;
                for j in i + 1..d {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// A detected resonant action and its lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonantAction {
    pub action: Vec<f64>,
    pub lattice: ResonanceLattice,
}

const LINE_SAMPLES: usize = 256;
const CONSTANT_RATIO_TOL: f64 = 1e-12;

/// Resonant actions in `action_box`, found along the lines through the box
/// centre parallel to each action axis. Along each line every frequency
/// ratio `omega_i / omega_j` is bracketed against the rationals `p/q` with
/// `q, |p| <= denom_bound` and bisected. Results are sorted by the lattice
/// denominator and truncated to `max_points`.
pub fn detect_resonant_actions(
    system: &ActionAngleSystem,
    action_box: &[(f64, f64)],
    denom_bound: u64,
    max_points: usize,
) -> Result<Vec<ResonantAction>> {
    let ell = system.ell;
    if action_box.len() != ell
        || action_box
            .iter()
            .any(|(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite())
    {
        return Err(Error::Domain(
            "action box must have one finite, nonempty interval per action".into(),
        ));
    }
    let centre: Vec<f64> = action_box.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
    let rationals = farey_like(denom_bound);
    let mut found: Vec<ResonantAction> = Vec::new();

    for axis in 0..ell {
        let (lo, hi) = action_box[axis];
        let at = |s: f64| {
            let mut a = centre.clone();
            a[axis] = s;
            a
        };
        let ss: Vec<f64> = (0..LINE_SAMPLES)
            .map(|i| lo + (hi - lo) * i as f64 / (LINE_SAMPLES - 1) as f64)
            .collect();
        let om: Vec<Vec<f64>> = exec::map_slice(&ss, |s| (system.omega)(&at(*s)));
        let mm = om[0].len();
        let accept = |a: Vec<f64>, found: &mut Vec<ResonantAction>| {
            let w = (system.omega)(&a);
            if let Ok(lat) = resonance_lattice(&w, DEFAULT_TRUNCATION, denom_bound) {
                if lat.omega0.is_some() && !found.iter().any(|f| dist(&f.action, &a) < 1e-9 * (1.0 + norm(&a))) {
                    found.push(ResonantAction {
                        action: a,
                        lattice: lat,
                    });
                }
            }
        };
        if mm == 1 {
            // Every action with omega != 0 is resonant.
            for (s, w) in ss.iter().zip(&om) {
                if w[0] != 0.0 {
                    accept(at(*s), &mut found);
                }
            }
            continue;
        }
        for i in 0..mm {
            for j in 0..mm {
                if i == j {
                    continue;
                }
                let ratio: Vec<f64> = om.iter().map(|w| w[i] / w[j]).collect();
                if ratio.iter().any(|r| !r.is_finite()) {
                    continue;
                }
                let (rmin, rmax) = ratio
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(*r), b.max(*r)));
                if rmax - rmin <= CONSTANT_RATIO_TOL * rmax.abs().max(1.0) {
                    if rational_approx(ratio[0], denom_bound).is_some() {
                        for s in &ss {
                            accept(at(*s), &mut found);
                        }
                    }
                    continue;
                }
                for &(p, q) in &rationals {
                    let target = p as f64 / q as f64;
                    if target < rmin || target > rmax {
                        continue;
                    }
                    for k in 0..LINE_SAMPLES - 1 {
                        let (fa, fb) = (ratio[k] - target, ratio[k + 1] - target);
                        if fa == 0.0 {
                            accept(at(ss[k]), &mut found);
                        } else if fa.signum() != fb.signum() && fb != 0.0 {
                            let f = |s: f64| {
                                let w = (system.omega)(&at(s));
                                w[i] / w[j] - target
                            };
                            let s = bisect_root(f, ss[k], ss[k + 1]);
                            accept(at(s), &mut found);
                        }
                    }
                }
            }
        }
    }
    found.sort_by(|a, b| {
        a.lattice.denominator.cmp(&b.lattice.denominator).then_with(|| {
            a.action
                .iter()
                .zip(&b.action)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    found.truncate(max_points);
    Ok(found)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Reduced fractions `p/q` with `1 <= q <= bound` and `|p| <= bound`.
fn farey_like(bound: u64) -> Vec<(i64, u64)> {
    let b = bound as i64;
    let mut out = Vec::new();
    for q in 1..=bound {
        for p in -b..=b {
            if gcd_u(p.unsigned_abs(), q) == 1 || (p == 0 && q == 1) {
                out.push((p, q));
            }
        }
    }
    out
}

fn bisect_root(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
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
    if f(a).abs() <= f(b).abs() {
        a
    } else {
        b
    }
}

/// Numerical rank of the finite-difference Jacobian of `omega` at `action`.
pub fn jacobian_rank_omega(system: &ActionAngleSystem, action: &[f64]) -> Result<usize> {
    system.check_action(action)?;
    let ell = system.ell;
    let m = system.m;
    let mut jac = DMatrix::<f64>::zeros(m, ell);
    for c in 0..ell {
        let h = 1e-6 * (1.0 + action[c].abs());
        let (lo, hi) = system.action_box[c];
        let mut ap = action.to_vec();
        let mut am = action.to_vec();
        ap[c] = (action[c] + h).min(hi);
        am[c] = (action[c] - h).max(lo);
        let span = ap[c] - am[c];
        if span <= 0.0 {
            continue;
        }
        let wp = (system.omega)(&ap);
        let wm = (system.omega)(&am);
        for r in 0..m {
            jac[(r, c)] = (wp[r] - wm[r]) / span;
        }
    }
    let sv = jac.singular_values();
    let top = sv.max();
    if !(top > 0.0) {
        return Ok(0);
    }
    Ok(sv.iter().filter(|s| **s > JACOBIAN_RANK_REL * top).count())
}
