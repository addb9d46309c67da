//! Hypothesis tests on computed curves and theorem-level verdicts.
//!
//! A verdict never claims more than its theorem: a positive conclusion
//! requires every hypothesis to pass, and the key-set hypothesis is only
//! ever supported by numerical accumulation evidence. A `no_conclusion`
//! verdict says nothing about integrability.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::actionangle::{
    fourier_coeffs, jacobian_rank_omega, resonance_lattice, resonant_integral_fourier, IntegralCurve,
};
use crate::error::{Error, Result};
use crate::melnikov::{
    chaos_threshold, homoclinic_melnikov, simple_zero_scan, solve_resonance, subharmonic_melnikov, MelnikovCurve,
    ResonancePair,
};
use crate::systems::{
    canonical_name, coupled_oscillators, orbit_family, pendulum_torque, ActionAngleSystem, CatalogParams,
    CoupledParams, CouplingTerm, ForcedPlanarSystem, OrbitKind,
};

/// Default relative tolerance of [`test_identically_zero`] and [`test_constant`].
pub const DEFAULT_REL_TOL: f64 = 1e-7;
/// Shortest chain of resonance parameters accepted as accumulation evidence.
pub const ACCUMULATION_MIN: usize = 8;
/// Significant digits kept in reported evidence.
pub const EVIDENCE_DIGITS: usize = 6;

/// Curves the hypothesis tests apply to.
pub trait CurveSamples {
    fn max_abs(&self) -> f64;
    /// `max - min`; vector-valued curves use the largest per-component spread.
    fn spread(&self) -> f64;
    /// Magnitude scale for relative tolerances.
    fn scale(&self) -> f64;
}

impl CurveSamples for MelnikovCurve {
    fn max_abs(&self) -> f64 {
        MelnikovCurve::max_abs(self)
    }
    fn spread(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        if self.values.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }
    fn scale(&self) -> f64 {
        1.0f64.max(self.meta.beta + self.meta.delta)
    }
}

impl CurveSamples for IntegralCurve {
    fn max_abs(&self) -> f64 {
        IntegralCurve::max_abs(self)
    }
    fn spread(&self) -> f64 {
        IntegralCurve::spread(self)
    }
    fn scale(&self) -> f64 {
        1.0
    }
}

fn check_tol(rel_tol: f64) -> Result<()> {
    if rel_tol > 0.0 && rel_tol.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("rel_tol must be > 0, got {rel_tol}")))
    }
}

/// `(max |values| < rel_tol scale, max |values|)`.
pub fn test_identically_zero(curve: &impl CurveSamples, rel_tol: f64) -> Result<(bool, f64)> {
    check_tol(rel_tol)?;
    let m = curve.max_abs();
    Ok((m < rel_tol * curve.scale(), m))
}

/// `(max - min < rel_tol scale, max - min)`.
pub fn test_constant(curve: &impl CurveSamples, rel_tol: f64) -> Result<(bool, f64)> {
    check_tol(rel_tol)?;
    let spread = curve.spread();
    Ok((spread < rel_tol * curve.scale(), spread))
}

// ---------------------------------------------------------------------------
// Verdicts
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    #[serde(rename = "thm2_4_no_first_integrals")]
    Thm2_4,
    #[serde(rename = "thm2_6_nonintegrable")]
    Thm2_6,
    #[serde(rename = "thm4_1")]
    Thm4_1,
    #[serde(rename = "thm4_2")]
    Thm4_2,
    #[serde(rename = "thm4_3")]
    Thm4_3,
    #[serde(rename = "thm5_1")]
    Thm5_1,
    #[serde(rename = "thm5_2")]
    Thm5_2,
    #[serde(rename = "thm5_3")]
    Thm5_3,
    #[serde(rename = "thm5_4")]
    Thm5_4,
}

impl Theorem {
    fn positive(self) -> Conclusion {
        match self {
            Self::Thm2_4 | Self::Thm4_1 | Self::Thm4_2 | Self::Thm5_1 | Self::Thm5_3 => {
                Conclusion::NoNMinusQFirstIntegrals
            }
            Self::Thm2_6 | Self::Thm4_3 | Self::Thm5_2 | Self::Thm5_4 => Conclusion::NotRealAnalyticallyIntegrable,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    fn from_flag(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conclusion {
    NoNMinusQFirstIntegrals,
    NotRealAnalyticallyIntegrable,
    NoConclusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub name: String,
    pub status: Status,
    pub evidence: BTreeMap<String, f64>,
}

impl Hypothesis {
    pub fn new(name: &str, status: Status, evidence: &[(&str, f64)]) -> Self {
        Self {
            name: name.to_string(),
            status,
            evidence: evidence
                .iter()
                .map(|(k, v)| (k.to_string(), round_sig(*v, EVIDENCE_DIGITS)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub theorem: Theorem,
    pub hypotheses: Vec<Hypothesis>,
    pub conclusion: Conclusion,
    pub scope_note: String,
}

const INCONCLUSIVE_NOTE: &str = "No conclusion: failing or inconclusive hypotheses prove nothing about integrability.";
const KEY_SET_NOTE: &str = "Subject to the key-set hypothesis, supported here only by numerical accumulation evidence.";

impl Verdict {
    /// Assemble a verdict; the conclusion is positive only if every
    /// hypothesis passes.
    pub fn assemble(theorem: Theorem, hypotheses: Vec<Hypothesis>, scope: &str, key_set: bool) -> Self {
        let all = !hypotheses.is_empty() && hypotheses.iter().all(|h| h.status == Status::Pass);
        let (conclusion, scope_note) = if all {
            let note = if key_set {
                format!("{scope} {KEY_SET_NOTE}")
            } else {
                scope.to_string()
            };
            (theorem.positive(), note)
        } else {
            (Conclusion::NoConclusion, format!("{scope} {INCONCLUSIVE_NOTE}"))
        };
        Self {
            theorem,
            hypotheses,
            conclusion,
            scope_note,
        }
    }

    pub fn is_positive(&self) -> bool {
        self.conclusion != Conclusion::NoConclusion
    }

    pub fn hypothesis(&self, name: &str) -> Option<&Hypothesis> {
        self.hypotheses.iter().find(|h| h.name == name)
    }
}

/// Round to `digits` significant digits so reports are byte-stable.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x)
}

/// Summary of the longest accumulating chain among sampled resonance
/// parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accumulation {
    pub points: usize,
    pub chain: usize,
    /// Last parameter of the chain, an estimate of the accumulation point.
    pub limit_estimate: f64,
    /// Smallest gap in the chain.
    pub last_gap: f64,
}

/// Longest chain of distinct parameters, monotone in value, whose
/// successive gaps strictly decrease.
pub fn accumulation_chain(keys: &[f64]) -> Accumulation {
    let mut xs: Vec<f64> = keys.iter().copied().filter(|x| x.is_finite()).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
    let n = xs.len();
    let mut best = Accumulation {
        points: n,
        chain: n.min(1),
        limit_estimate: xs.first().copied().unwrap_or(f64::NAN),
        last_gap: f64::NAN,
    };
    if n < 2 {
        return best;
    }
    for dir in [1.0, -1.0] {
        let seq: Vec<f64> = if dir > 0.0 {
            xs.clone()
        } else {
            xs.iter().rev().copied().collect()
        };
        // len[i][j]: longest chain ending with the step seq[i] -> seq[j].
        let mut len = vec![vec![0usize; n]; n];
        for j in 1..n {
            for i in 0..j {
                let gap = (seq[j] - seq[i]).abs();
                let mut l = 2;
                for h in 0..i {
                    if len[h][i] > 0 && (seq[i] - seq[h]).abs() > gap {
                        l = l.max(len[h][i] + 1);
                    }
                }
                len[i][j] = l;
                if l > best.chain {
                    best.chain = l;
                    best.limit_estimate = seq[j];
                    best.last_gap = gap;
                }
            }
        }
    }
    best
}

fn accumulation_hypothesis(name: &str, keys: &[f64]) -> Hypothesis {
    let acc = accumulation_chain(keys);
    let ok = acc.chain >= ACCUMULATION_MIN;
    Hypothesis::new(
        name,
        Status::from_flag(ok),
        &[
            ("points", acc.points as f64),
            ("chain_length", acc.chain as f64),
            ("chain_required", ACCUMULATION_MIN as f64),
            ("limit_estimate", if acc.chain > 0 { acc.limit_estimate } else { 0.0 }),
            ("last_gap", if acc.chain > 1 { acc.last_gap } else { 0.0 }),
        ],
    )
}

// ---------------------------------------------------------------------------
// Configuration and evidence
// ---------------------------------------------------------------------------

/// Fully resolved system parameters, echoed in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "snake_case")]
pub enum SystemConfig {
    PendulumTorque { beta: f64 },
    CoupledOscillators(CoupledParams),
    Duffing { a: f64, beta: f64, delta: f64, nu: f64 },
}

impl SystemConfig {
    pub fn resolve(name: &str, params: &CatalogParams) -> Result<Self> {
        Ok(match canonical_name(name)? {
            "pendulum_torque" => Self::PendulumTorque {
                beta: params.beta.unwrap_or(0.0),
            },
            "coupled_oscillators" => Self::CoupledOscillators(params.coupled()),
            _ => Self::Duffing {
                a: params.a.unwrap_or(1.0),
                beta: params.beta.unwrap_or(0.0),
                delta: params.delta.unwrap_or(0.0),
                nu: params.nu.unwrap_or(1.0),
            },
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::PendulumTorque { .. } => "pendulum_torque",
            Self::CoupledOscillators(_) => "coupled_oscillators",
            Self::Duffing { .. } => "duffing",
        }
    }
}

/// Numeric knobs of evidence collection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictOptions {
    pub rel_tol: f64,
    pub phi_grid: usize,
    pub tau_grid: usize,
    pub truncation: u32,
    pub denom_bound: u64,
    /// Resonance samples per sequence.
    pub evidence_points: usize,
    pub tail_tol: f64,
}

impl Default for VerdictOptions {
    fn default() -> Self {
        Self {
            rel_tol: DEFAULT_REL_TOL,
            phi_grid: 64,
            tau_grid: 16,
            truncation: 12,
            denom_bound: 64,
            evidence_points: 11,
            tail_tol: 1e-12,
        }
    }
}

/// One tested resonance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceSample {
    /// Accumulation parameter: the frequency ratio for action-angle
    /// systems, the complementary modulus `k'` for forced systems (it stays
    /// resolvable where `k` rounds to 1).
    pub key: f64,
    pub label: String,
    pub not_zero: bool,
    pub max_abs: f64,
    pub not_constant: bool,
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomoclinicEvidence {
    pub not_zero: bool,
    pub max_abs: f64,
    pub not_constant: bool,
    pub spread: f64,
    pub simple_zeros: usize,
    pub threshold: f64,
}

/// Everything the decision table looks at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Evidence {
    ActionAngle {
        ell: usize,
        m: usize,
        jacobian_rank: usize,
        /// Resonance samples whose torus is resonant (all have `omega0`).
        samples: Vec<ResonanceSample>,
        /// Samples where `omega != 0`.
        nonzero_frequency: usize,
    },
    Forced {
        a: f64,
        family: OrbitKind,
        /// `(l, n) = (j, j + 1)` resonances accumulating at the 1:1 orbit.
        damped: Vec<ResonanceSample>,
        /// `l = 1` resonances.
        primary: Vec<ResonanceSample>,
        homoclinic: Option<HomoclinicEvidence>,
    },
}

impl Evidence {
    /// Append more resonance samples (used to check monotonicity).
    pub fn extend_samples(&mut self, more: &[ResonanceSample]) {
        match self {
            Evidence::ActionAngle { samples, .. } => samples.extend_from_slice(more),
            Evidence::Forced { damped, primary, .. } => {
                damped.extend_from_slice(more);
                primary.extend_from_slice(more);
            }
        }
    }
}

fn action_angle_system(cfg: &SystemConfig) -> Result<ActionAngleSystem> {
    match cfg {
        SystemConfig::PendulumTorque { beta } => pendulum_torque(*beta),
        SystemConfig::CoupledOscillators(p) => coupled_oscillators(p),
        SystemConfig::Duffing { .. } => Err(Error::IncompatibleFamily("duffing is not in action-angle form".into())),
    }
}

/// Sample actions for an action-angle system with `omega(I) = I`: two ratio
/// sequences `(1, (j+1)/j, 1, ...)` and `(1, 1/j, 1, ...)`, or the levels
/// `I = j/2` when `ell = 1`.
fn sample_actions(ell: usize, count: usize) -> Vec<(f64, Vec<f64>)> {
    let mut out = Vec::new();
    if ell == 1 {
        for j in 1..=count {
            let a = 0.5 * j as f64;
            out.push((a, vec![a]));
        }
        return out;
    }
    for j in 1..=count {
        let r = (j + 1) as f64 / j as f64;
        let mut a = vec![1.0; ell];
        a[1] = r;
        out.push((r, a));
    }
    for j in 1..=count {
        let r = 1.0 / j as f64;
        let mut a = vec![1.0; ell];
        a[1] = r;
        out.push((r, a));
    }
    out
}

fn forced_system(cfg: &SystemConfig) -> Result<ForcedPlanarSystem> {
    match cfg {
        SystemConfig::Duffing { a, beta, delta, nu } => ForcedPlanarSystem::duffing(*a, *beta, *delta, *nu),
        _ => Err(Error::IncompatibleFamily(format!(
            "{} is not a forced planar system",
            cfg.name()
        ))),
    }
}

fn melnikov_sample(curve: &MelnikovCurve, key: f64, label: String, rel_tol: f64) -> Result<ResonanceSample> {
    let (zero, max_abs) = test_identically_zero(curve, rel_tol)?;
    let (constant, spread) = test_constant(curve, rel_tol)?;
    Ok(ResonanceSample {
        key,
        label,
        not_zero: !zero,
        max_abs,
        not_constant: !constant,
        spread,
    })
}

/// Largest `j` tried when looking for `(j, j + 1)` resonances.
const MAX_ORDER_SCAN: u32 = 200;

/// Compute the evidence the decision table needs.
pub fn collect_evidence(cfg: &SystemConfig, opts: &VerdictOptions) -> Result<Evidence> {
    check_tol(opts.rel_tol)?;
    match cfg {
        SystemConfig::Duffing { .. } => {
            let sys = forced_system(cfg)?;
            let kind = if sys.a() > 0.0 {
                OrbitKind::InteriorPlus
            } else {
                OrbitKind::Soft
            };
            let family = orbit_family(&sys, kind)?;
            let curve_at = |l: u32, n: u32| -> Result<Option<ResonanceSample>> {
                let res = ResonancePair::new(l, n)?;
                let m = match solve_resonance(kind, sys.nu(), res) {
                    Ok(m) => m,
                    Err(Error::NoResonance(_)) => return Ok(None),
                    Err(e) => return Err(e),
                };
                let c = subharmonic_melnikov(&sys, &family, &m, res, opts.phi_grid)?;
                melnikov_sample(&c, m.kprime(), format!("l={l},n={n}"), opts.rel_tol).map(Some)
            };
            let mut damped = Vec::new();
            let mut j = 1;
            while damped.len() < opts.evidence_points && j <= MAX_ORDER_SCAN {
                if let Some(s) = curve_at(j, j + 1)? {
                    damped.push(s);
                }
                j += 1;
            }
            let mut primary = Vec::new();
            for n in 1..=opts.evidence_points as u32 {
                if let Some(s) = curve_at(1, n)? {
                    primary.push(s);
                }
            }
            let homoclinic = if sys.a() > 0.0 {
                let c = homoclinic_melnikov(&sys, 1.0, opts.phi_grid, opts.tail_tol)?;
                let (zero, max_abs) = test_identically_zero(&c, opts.rel_tol)?;
                let (constant, spread) = test_constant(&c, opts.rel_tol)?;
                let simple_zeros = simple_zero_scan(&c).iter().filter(|z| z.is_simple).count();
                Some(HomoclinicEvidence {
                    not_zero: !zero,
                    max_abs,
                    not_constant: !constant,
                    spread,
                    simple_zeros,
                    threshold: chaos_threshold(sys.nu())?,
                })
            } else {
                None
            };
            Ok(Evidence::Forced {
                a: sys.a(),
                family: kind,
                damped,
                primary,
                homoclinic,
            })
        }
        _ => {
            let sys = action_angle_system(cfg)?;
            let points = sample_actions(sys.ell, opts.evidence_points);
            let mut samples = Vec::new();
            let mut nonzero_frequency = 0;
            for (key, action) in &points {
                if !sys.in_box(action) {
                    continue;
                }
                let omega = (sys.omega)(action);
                if omega.iter().any(|w| *w != 0.0) {
                    nonzero_frequency += 1;
                }
                let lattice = resonance_lattice(&omega, opts.truncation, opts.denom_bound)?;
                if lattice.omega0.is_none() {
                    continue;
                }
                let spectrum = fourier_coeffs(&sys, action, opts.truncation)?;
                let curve = resonant_integral_fourier(&spectrum, &lattice, opts.tau_grid)?;
                let (zero, max_abs) = test_identically_zero(&curve, opts.rel_tol)?;
                let (constant, spread) = test_constant(&curve, opts.rel_tol)?;
                samples.push(ResonanceSample {
                    key: *key,
                    label: format!("I={action:?}"),
                    not_zero: !zero,
                    max_abs,
                    not_constant: !constant,
                    spread,
                });
            }
            let centre: Vec<f64> = vec![1.0; sys.ell];
            let jacobian_rank = jacobian_rank_omega(&sys, &centre)?;
            Ok(Evidence::ActionAngle {
                ell: sys.ell,
                m: sys.m,
                jacobian_rank,
                samples,
                nonzero_frequency,
            })
        }
    }
}

/// Apply the decision table to collected evidence.
pub fn verdict_for_system(cfg: &SystemConfig, evidence: &Evidence) -> Result<Vec<Verdict>> {
    match (cfg, evidence) {
        (
            SystemConfig::Duffing { .. },
            Evidence::Forced {
                a,
                family,
                damped,
                primary,
                homoclinic,
            },
        ) => Ok(forced_verdicts(*a, *family, damped, primary, homoclinic.as_ref(), cfg)),
        (SystemConfig::Duffing { .. }, _) | (_, Evidence::Forced { .. }) => {
            Err(Error::InvalidParameters("evidence does not match the system".into()))
        }
        (
            _,
            Evidence::ActionAngle {
                ell,
                m,
                jacobian_rank,
                samples,
                nonzero_frequency,
            },
        ) => Ok(action_angle_verdicts(
            *ell,
            *m,
            *jacobian_rank,
            samples,
            *nonzero_frequency,
        )),
    }
}

fn action_angle_verdicts(
    ell: usize,
    m: usize,
    rank: usize,
    samples: &[ResonanceSample],
    nonzero_frequency: usize,
) -> Vec<Verdict> {
    let resonant = samples.len() as f64;
    let nz: Vec<&ResonanceSample> = samples.iter().filter(|s| s.not_zero).collect();
    let nc: Vec<&ResonanceSample> = samples.iter().filter(|s| s.not_constant).collect();
    let best_zero = samples.iter().fold(0.0f64, |a, s| a.max(s.max_abs));
    let best_spread = samples.iter().fold(0.0f64, |a, s| a.max(s.spread));
    let dims = Hypothesis::new(
        if m == 1 { "m_equals_1" } else { "m_greater_than_1" },
        Status::Pass,
        &[("m", m as f64), ("ell", ell as f64)],
    );
    let mut out = Vec::new();
    if m == 1 {
        out.push(Verdict::assemble(
            Theorem::Thm4_2,
            vec![
                dims,
                Hypothesis::new(
                    "omega_nonzero",
                    Status::from_flag(nonzero_frequency > 0),
                    &[("samples_with_nonzero_omega", nonzero_frequency as f64)],
                ),
                Hypothesis::new(
                    "h0_nonzero",
                    Status::from_flag(!nz.is_empty()),
                    &[("samples_nonzero", nz.len() as f64), ("max_abs_integral", best_zero)],
                ),
            ],
            &format!(
                "No {ell} real-analytic first integrals, functionally independent for eps != 0 and analytic in eps, \
                 in a neighborhood of the level sets {{c}} x S^1 near eps = 0."
            ),
            false,
        ));
        out.push(Verdict::assemble(
            Theorem::Thm4_3,
            vec![Hypothesis::new("m_greater_than_1", Status::Fail, &[("m", m as f64)])],
            "Not applicable: with m = 1 the resonant integral is constant on every torus.",
            true,
        ));
        return out;
    }
    let k2 = Hypothesis::new(
        "k2_nondegenerate_frequencies",
        Status::from_flag(rank == m),
        &[("jacobian_rank", rank as f64), ("m", m as f64)],
    );
    let a3 = Hypothesis::new(
        "a3_resonant_tori",
        Status::from_flag(resonant > 0.0),
        &[("resonant_samples", resonant)],
    );
    let nz_keys: Vec<f64> = nz.iter().map(|s| s.key).collect();
    let nc_keys: Vec<f64> = nc.iter().map(|s| s.key).collect();
    let mut h41 = accumulation_hypothesis("key_set_some_lattice_coefficient_nonzero", &nz_keys);
    h41.evidence
        .insert("max_abs_integral".into(), round_sig(best_zero, EVIDENCE_DIGITS));
    out.push(Verdict::assemble(
        Theorem::Thm4_1,
        vec![dims.clone(), k2.clone(), a3.clone(), h41],
        &format!(
            "No {ell} real-analytic first integrals, functionally independent for eps != 0 and analytic in eps, \
             in a neighborhood of the level sets {{c}} x T^{m} near eps = 0."
        ),
        true,
    ));
    let a4 = Hypothesis::new(
        "a4_frequency_rank",
        Status::from_flag(rank == ell),
        &[("jacobian_rank", rank as f64), ("required", ell as f64)],
    );
    let mut h43 = accumulation_hypothesis("key_set_nonzero_mode_coefficient_nonzero", &nc_keys);
    h43.evidence
        .insert("max_spread_integral".into(), round_sig(best_spread, EVIDENCE_DIGITS));
    out.push(Verdict::assemble(
        Theorem::Thm4_3,
        vec![dims, k2, a3, a4, h43],
        &format!("Not real-analytically integrable for small eps != 0 near the level sets {{c}} x T^{m}."),
        true,
    ));
    out
}

fn forced_verdicts(
    a: f64,
    family: OrbitKind,
    damped: &[ResonanceSample],
    primary: &[ResonanceSample],
    hom: Option<&HomoclinicEvidence>,
    cfg: &SystemConfig,
) -> Vec<Verdict> {
    let (beta, delta) = match cfg {
        SystemConfig::Duffing { beta, delta, .. } => (*beta, *delta),
        _ => (0.0, 0.0),
    };
    let all: Vec<&ResonanceSample> = damped.iter().chain(primary).collect();
    let nz_keys: Vec<f64> = all.iter().filter(|s| s.not_zero).map(|s| s.key).collect();
    let nc_keys: Vec<f64> = all.iter().filter(|s| s.not_constant).map(|s| s.key).collect();
    let cyl = format!("the resonant orbit cylinders {{x^k(t)}} x S^1 of the {family} family");
    let resonances = Hypothesis::new(
        "resonant_orbits_solved",
        Status::from_flag(!all.is_empty()),
        &[
            ("damped_sequence", damped.len() as f64),
            ("primary_sequence", primary.len() as f64),
        ],
    );
    let mut out = Vec::new();

    let mut h51 = accumulation_hypothesis("key_set_subharmonic_not_identically_zero", &nz_keys);
    h51.evidence.insert(
        "max_abs_curve".into(),
        round_sig(all.iter().fold(0.0f64, |m, s| m.max(s.max_abs)), EVIDENCE_DIGITS),
    );
    out.push(Verdict::assemble(
        Theorem::Thm5_1,
        vec![resonances.clone(), h51],
        &format!("No real-analytic first integral analytic in eps near eps = 0 in a neighborhood of {cyl}."),
        true,
    ));

    let mut h52 = accumulation_hypothesis("key_set_subharmonic_not_constant", &nc_keys);
    h52.evidence.insert(
        "max_spread_curve".into(),
        round_sig(all.iter().fold(0.0f64, |m, s| m.max(s.spread)), EVIDENCE_DIGITS),
    );
    let mut scope52 = format!("Not real-analytically integrable for small eps != 0 in a neighborhood of {cyl}.");
    if a < 0.0 {
        let constant_higher = damped.iter().filter(|s| !s.not_constant).count();
        scope52 = format!(
            "Not applicable here: the subharmonic Melnikov functions with l != 1 are constant \
             ({constant_higher} of {} sampled), and only {} l = 1 resonances exist at this forcing frequency, \
             so no accumulating family of non-constant curves is available.",
            damped.len(),
            primary.len()
        );
    }
    out.push(Verdict::assemble(
        Theorem::Thm5_2,
        vec![resonances, h52],
        &scope52,
        a > 0.0,
    ));

    if let Some(h) = hom {
        out.push(Verdict::assemble(
            Theorem::Thm5_3,
            vec![Hypothesis::new(
                "homoclinic_not_identically_zero",
                Status::from_flag(h.not_zero),
                &[("max_abs_curve", h.max_abs)],
            )],
            "No real-analytic first integral analytic in eps near eps = 0 in a region bounded by the \
             homoclinic loop, times S^1.",
            false,
        ));
        let ratio = if beta > 0.0 { delta / beta } else { f64::INFINITY };
        let chaos = beta > 0.0 && ratio < h.threshold;
        let mut scope = String::from(
            "Not real-analytically integrable for small eps != 0 in a region bounded by the homoclinic loop, times S^1.",
        );
        scope.push_str(&format!(
            " Transverse homoclinic chaos condition delta/beta < {:.6}: {} ({} simple zeros of M+).",
            round_sig(h.threshold, EVIDENCE_DIGITS),
            if chaos { "holds" } else { "fails" },
            h.simple_zeros
        ));
        out.push(Verdict::assemble(
            Theorem::Thm5_4,
            vec![Hypothesis::new(
                "homoclinic_not_constant",
                Status::from_flag(h.not_constant),
                &[
                    ("spread_curve", h.spread),
                    ("simple_zeros", h.simple_zeros as f64),
                    ("chaos_threshold", h.threshold),
                ],
            )],
            &scope,
            false,
        ));
    }
    out
}

/// A verdict report: resolved configuration plus verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub config: ReportConfig,
    pub verdicts: Vec<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    #[serde(flatten)]
    pub system: SystemConfig,
    pub options: VerdictOptions,
}

impl VerdictReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }
}

/// Evidence plus verdicts for one configuration.
pub fn verdict_report(cfg: &SystemConfig, opts: &VerdictOptions) -> Result<VerdictReport> {
    let ev = collect_evidence(cfg, opts)?;
    let verdicts = verdict_for_system(cfg, &ev)?;
    Ok(VerdictReport {
        config: ReportConfig {
            system: cfg.clone(),
            options: *opts,
        },
        verdicts,
    })
}

/// Coupling `a_k = scale exp(-rate (k1 + k2))` for all `k1, k2 >= 1` with
/// `k1 + k2 <= max_order`.
pub fn exponential_coupling(scale: f64, rate: f64, max_order: u32) -> Vec<CouplingTerm> {
    let mut out = Vec::new();
    for s in 2..=max_order {
        for k1 in 1..s {
            out.push(CouplingTerm {
                k1,
                k2: s - k1,
                a: scale * (-(rate * f64::from(s))).exp(),
            });
        }
    }
    out
}

/// The six catalog configurations reproduced as golden reports.
pub fn catalog_configs() -> Vec<(&'static str, SystemConfig)> {
    vec![
        ("pendulum", SystemConfig::PendulumTorque { beta: 0.7 }),
        (
            "coupled_part_i",
            SystemConfig::CoupledOscillators(CoupledParams {
                ell: 2,
                delta: 0.5,
                drive: vec![1.0, 0.5],
                coupling: vec![CouplingTerm { k1: 1, k2: 1, a: 1.0 }],
                decay_bound: None,
                truncation: 12,
            }),
        ),
        (
            "coupled_part_ii",
            SystemConfig::CoupledOscillators(CoupledParams {
                ell: 2,
                delta: 0.0,
                drive: vec![0.0, 0.0],
                coupling: exponential_coupling(1.0, 1.0, 12),
                decay_bound: Some(crate::systems::DecayBound { scale: 1.0, rate: 1.0 }),
                truncation: 12,
            }),
        ),
        (
            "duffing_no_first_integral",
            SystemConfig::Duffing {
                a: 1.0,
                beta: 0.0,
                delta: 0.2,
                nu: 1.0,
            },
        ),
        (
            "duffing_nonintegrable",
            SystemConfig::Duffing {
                a: 1.0,
                beta: 1.0,
                delta: 2.0,
                nu: 1.0,
            },
        ),
        (
            "duffing_soft",
            SystemConfig::Duffing {
                a: -1.0,
                beta: 1.0,
                delta: 0.3,
                nu: 2.0,
            },
        ),
    ]
}

/// Reports for [`catalog_configs`] with default options.
pub fn catalog_reports() -> Result<Vec<(&'static str, VerdictReport)>> {
    let opts = VerdictOptions::default();
    catalog_configs()
        .into_iter()
        .map(|(name, cfg)| verdict_report(&cfg, &opts).map(|r| (name, r)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::melnikov::{CurveKind, CurveMeta, Method};
    use crate::quad::phase_grid;

    fn curve(values: Vec<f64>, beta: f64, delta: f64) -> MelnikovCurve {
        MelnikovCurve::from_samples(
            values,
            CurveMeta {
                kind: CurveKind::Homoclinic,
                family: OrbitKind::HomoclinicPlus,
                resonance: None,
                k: None,
                nu: 1.0,
                beta,
                delta,
                method: Method::ClosedForm,
            },
        )
        .unwrap()
    }

    #[test]
    fn zero_and_constant_tests() {
        let z = curve(vec![0.0; 32], 0.0, 0.0);
        assert_eq!(test_identically_zero(&z, DEFAULT_REL_TOL).unwrap(), (true, 0.0));
        let c = curve(vec![-4.0 / 3.0; 32], 0.0, 1.0);
        let (flag, ev) = test_identically_zero(&c, DEFAULT_REL_TOL).unwrap();
        assert!(!flag && (ev - 4.0 / 3.0).abs() < 1e-15);
        let (flag, ev) = test_constant(&c, DEFAULT_REL_TOL).unwrap();
        assert!(flag && ev < 1e-12);
        let s = curve(phase_grid(64).iter().map(|x| x.sin()).collect(), 1.0, 0.0);
        let (flag, ev) = test_constant(&s, DEFAULT_REL_TOL).unwrap();
        assert!(!flag && (ev - 2.0).abs() < 1e-12);
        assert!(test_constant(&s, 0.0).is_err());
    }

    #[test]
    fn accumulation_chain_examples() {
        let harmonic: Vec<f64> = (1..=10).map(|j| 1.0 / j as f64).collect();
        assert_eq!(accumulation_chain(&harmonic).chain, 10);
        let even: Vec<f64> = (0..10).map(f64::from).collect();
        // 0, 4, 6, 7 is the longest shrinking-gap subsequence
        assert_eq!(accumulation_chain(&even).chain, 4);
        assert_eq!(accumulation_chain(&[]).chain, 0);
        assert_eq!(accumulation_chain(&[0.3]).chain, 1);
    }

    #[test]
    fn verdict_requires_all_hypotheses() {
        let v = Verdict::assemble(
            Theorem::Thm4_2,
            vec![
                Hypothesis::new("a", Status::Pass, &[("x", 1.0)]),
                Hypothesis::new("b", Status::Inconclusive, &[("y", 0.0)]),
            ],
            "scope",
            false,
        );
        assert_eq!(v.conclusion, Conclusion::NoConclusion);
        assert!(v.scope_note.contains("prove nothing"));
    }

    #[test]
    fn rounding_is_stable() {
        assert_eq!(round_sig(1.234_567_89, 6), 1.23457);
        assert_eq!(round_sig(-0.000_123_456_78, 6), -0.000123457);
        assert_eq!(round_sig(0.0, 6), 0.0);
    }

    #[test]
    fn pendulum_verdict() {
        let cfg = SystemConfig::PendulumTorque { beta: 0.7 };
        let r = verdict_report(&cfg, &VerdictOptions::default()).unwrap();
        assert_eq!(r.verdicts[0].theorem, Theorem::Thm4_2);
        assert_eq!(r.verdicts[0].conclusion, Conclusion::NoNMinusQFirstIntegrals);
        assert_eq!(r.verdicts[1].conclusion, Conclusion::NoConclusion);
    }

    #[test]
    fn unperturbed_coupled_has_no_conclusion() {
        let cfg = SystemConfig::CoupledOscillators(CoupledParams {
            ell: 2,
            delta: 0.0,
            drive: vec![0.0, 0.0],
            coupling: vec![],
            decay_bound: None,
            truncation: 12,
        });
        let r = verdict_report(&cfg, &VerdictOptions::default()).unwrap();
        assert!(r.verdicts.iter().all(|v| v.conclusion == Conclusion::NoConclusion));
    }

    use proptest::prelude::*;

    fn sample(key: f64, not_zero: bool, not_constant: bool) -> ResonanceSample {
        ResonanceSample {
            key,
            label: String::new(),
            not_zero,
            max_abs: if not_zero { 1.0 } else { 0.0 },
            not_constant,
            spread: if not_constant { 1.0 } else { 0.0 },
        }
    }

    fn positives(v: &[Verdict]) -> Vec<Theorem> {
        v.iter().filter(|v| v.is_positive()).map(|v| v.theorem).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn more_passing_evidence_keeps_conclusions(
            base in prop::collection::vec((0.0f64..2.0, any::<bool>(), any::<bool>()), 0..14),
            extra in prop::collection::vec(0.0f64..2.0, 0..10),
            harmonic in 0usize..12,
        ) {
            let mut samples: Vec<ResonanceSample> = base.iter().map(|(k, z, c)| sample(*k, *z, *c)).collect();
            samples.extend((1..=harmonic).map(|j| sample(1.0 / j as f64, true, true)));
            let cfg = SystemConfig::PendulumTorque { beta: 0.0 };
            let ev = Evidence::ActionAngle { ell: 2, m: 2, jacobian_rank: 2, samples, nonzero_frequency: 1 };
            let before = positives(&verdict_for_system(&cfg, &ev).unwrap());
            let mut grown = ev.clone();
            let more: Vec<ResonanceSample> = extra.iter().map(|k| sample(*k, true, true)).collect();
            grown.extend_samples(&more);
            let after = positives(&verdict_for_system(&cfg, &grown).unwrap());
            for t in before {
                prop_assert!(after.contains(&t));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]

        #[test]
        fn forcing_scale_invariance(beta in 0.05f64..1.0, delta in 0.05f64..1.0) {
            let opts = VerdictOptions { phi_grid: 32, evidence_points: 3, ..VerdictOptions::default() };
            let small = SystemConfig::Duffing { a: 1.0, beta, delta, nu: 1.0 };
            let big = SystemConfig::Duffing { a: 1.0, beta: beta * 1e3, delta: delta * 1e3, nu: 1.0 };
            let statuses = |cfg: &SystemConfig| -> Vec<(Theorem, Conclusion, Vec<Status>)> {
                verdict_report(cfg, &opts)
                    .unwrap()
                    .verdicts
                    .into_iter()
                    .map(|v| (v.theorem, v.conclusion, v.hypotheses.iter().map(|h| h.status).collect()))
                    .collect()
            };
            prop_assert_eq!(statuses(&small), statuses(&big));
        }
    }
}
