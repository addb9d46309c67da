//! Catalog of example systems and the exact Duffing orbit families.
//!
//! Two shapes of system live here:
//!
//! * [`ForcedPlanarSystem`]: `x' = J DH(x) + eps u(x, nu t)` on the plane,
//!   realised for the forced, damped Duffing oscillator with `a = +1`
//!   (double well, homoclinic loops) or `a = -1` (single well).
//! * [`ActionAngleSystem`]: `I' = eps h(I, theta)`, `theta' = omega(I) + eps g`,
//!   realised for the pendulum with constant torque and for second-order
//!   coupled oscillators.
//!
//! Orbit families are anchored at `t = 0` on the symmetry axis `x2 = 0`
//! (dn-peak for the interior orbits, cn-peak for exterior and soft ones).

use std::f64::consts::{SQRT_2, TAU};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{ellip_k, sech, sncndn_unchecked, EllipticModulus};

/// `a = +1` or `a = -1` in `H = -a x1^2/2 + x1^4/4 + x2^2/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DuffingCase {
    /// `a = +1`: saddle at the origin with a pair of homoclinic loops.
    APlus,
    /// `a = -1`: a single center surrounded by periodic orbits.
    AMinus,
}

impl DuffingCase {
    pub fn from_a(a: f64) -> Result<Self> {
        if a == 1.0 {
            Ok(Self::APlus)
        } else if a == -1.0 {
            Ok(Self::AMinus)
        } else {
            Err(Error::InvalidParameters(format!(
                "Duffing coefficient a must be exactly +1 or -1, got {a}"
            )))
        }
    }

    pub fn a(self) -> f64 {
        match self {
            Self::APlus => 1.0,
            Self::AMinus => -1.0,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Self::APlus => "duffing_a_plus",
            Self::AMinus => "duffing_a_minus",
        }
    }
}

/// Periodically forced, damped Duffing oscillator
/// `x1' = x2, x2' = a x1 - x1^3 + eps (beta cos(nu t) - delta x2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcedPlanarSystem {
    case: DuffingCase,
    beta: f64,
    delta: f64,
    nu: f64,
}

impl ForcedPlanarSystem {
    pub fn duffing(a: f64, beta: f64, delta: f64, nu: f64) -> Result<Self> {
        let case = DuffingCase::from_a(a)?;
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "forcing frequency nu must be > 0, got {nu}"
            )));
        }
        if !(beta.is_finite() && beta >= 0.0) || !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::InvalidParameters(format!(
                "beta and delta must be finite and >= 0, got beta = {beta}, delta = {delta}"
            )));
        }
        Ok(Self { case, beta, delta, nu })
    }

    pub fn case(&self) -> DuffingCase {
        self.case
    }

    pub fn case_tag(&self) -> &'static str {
        self.case.tag()
    }

    pub fn a(&self) -> f64 {
        self.case.a()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Same oscillator with a different forcing frequency.
    pub fn with_nu(&self, nu: f64) -> Result<Self> {
        Self::duffing(self.a(), self.beta, self.delta, nu)
    }

    /// Same oscillator with different forcing amplitude and damping.
    pub fn with_forcing(&self, beta: f64, delta: f64) -> Result<Self> {
        Self::duffing(self.a(), beta, delta, self.nu)
    }

    pub fn hamiltonian(&self, x: [f64; 2]) -> f64 {
        let x1sq = x[0] * x[0];
        -0.5 * self.a() * x1sq + 0.25 * x1sq * x1sq + 0.5 * x[1] * x[1]
    }

    pub fn grad_h(&self, x: [f64; 2]) -> [f64; 2] {
        [-self.a() * x[0] + x[0] * x[0] * x[0], x[1]]
    }

    /// Unperturbed field `J DH(x)` with `J = [[0, 1], [-1, 0]]`.
    pub fn hamiltonian_field(&self, x: [f64; 2]) -> [f64; 2] {
        let g = self.grad_h(x);
        [g[1], -g[0]]
    }

    /// Perturbation `u(x, phase) = (0, beta cos(phase) - delta x2)`.
    pub fn perturbation(&self, x: [f64; 2], phase: f64) -> [f64; 2] {
        [0.0, self.beta * phase.cos() - self.delta * x[1]]
    }

    /// `DH(x) . u(x, phase)`, the Melnikov integrand.
    pub fn energy_rate(&self, x: [f64; 2], phase: f64) -> f64 {
        let g = self.grad_h(x);
        let u = self.perturbation(x, phase);
        g[0] * u[0] + g[1] * u[1]
    }

    /// Full field `J DH(x) + eps u(x, phase)`.
    pub fn field(&self, eps: f64, x: [f64; 2], phase: f64) -> [f64; 2] {
        let f = self.hamiltonian_field(x);
        let u = self.perturbation(x, phase);
        [f[0] + eps * u[0], f[1] + eps * u[1]]
    }
}

/// Kinds of exact unperturbed orbits of the Duffing oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum OrbitKind {
    /// `a = +1`, inside the right homoclinic loop (dn orbits).
    InteriorPlus,
    /// `a = +1`, inside the left homoclinic loop.
    InteriorMinus,
    /// `a = +1`, outside both loops (cn orbits).
    Exterior,
    /// `a = -1`, around the single center (cn orbits).
    Soft,
    HomoclinicPlus,
    HomoclinicMinus,
}

impl OrbitKind {
    pub const ALL: [OrbitKind; 6] = [
        Self::InteriorPlus,
        Self::InteriorMinus,
        Self::Exterior,
        Self::Soft,
        Self::HomoclinicPlus,
        Self::HomoclinicMinus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::InteriorPlus => "duffing_interior_plus",
            Self::InteriorMinus => "duffing_interior_minus",
            Self::Exterior => "duffing_exterior",
            Self::Soft => "duffing_soft",
            Self::HomoclinicPlus => "homoclinic_plus",
            Self::HomoclinicMinus => "homoclinic_minus",
        }
    }

    /// Parse the short names used on the command line as well as [`OrbitKind::name`].
    pub fn parse(s: &str) -> Result<Self> {
        let k = match s {
            "interior" | "interior_plus" | "duffing_interior_plus" => Self::InteriorPlus,
            "interior_minus" | "duffing_interior_minus" => Self::InteriorMinus,
            "exterior" | "duffing_exterior" => Self::Exterior,
            "soft" | "duffing_soft" => Self::Soft,
            "homoclinic" | "homoclinic_plus" => Self::HomoclinicPlus,
            "homoclinic_minus" => Self::HomoclinicMinus,
            other => return Err(Error::InvalidParameters(format!("unknown orbit family `{other}`"))),
        };
        Ok(k)
    }

    pub fn is_periodic(self) -> bool {
        !matches!(self, Self::HomoclinicPlus | Self::HomoclinicMinus)
    }

    pub fn case(self) -> DuffingCase {
        match self {
            Self::Soft => DuffingCase::AMinus,
            _ => DuffingCase::APlus,
        }
    }

    /// `+1` for the right-hand (or unsigned) orbits, `-1` for the mirrored ones.
    pub fn sign(self) -> f64 {
        match self {
            Self::InteriorMinus | Self::HomoclinicMinus => -1.0,
            _ => 1.0,
        }
    }
}

impl fmt::Display for OrbitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Monotonicity of the period map on the family's modulus range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodTrend {
    Increasing,
    Decreasing,
}

/// A one-parameter family of exact Duffing orbits indexed by the elliptic modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitFamily {
    kind: OrbitKind,
}

/// Scale factor `s(k)` in `orbit(k, t) = f(t / s)`; the differences of
/// squares are factored to stay accurate near the range ends.
fn time_scale(kind: OrbitKind, m: &EllipticModulus) -> f64 {
    let (k, kp) = (m.k(), m.kprime());
    match kind {
        // 2 - k^2 = 1 + k'^2
        OrbitKind::InteriorPlus | OrbitKind::InteriorMinus => (1.0 + kp * kp).sqrt(),
        // 2k^2 - 1 = (k - k')(k + k')
        OrbitKind::Exterior => ((k - kp) * (k + kp)).sqrt(),
        // 1 - 2k^2 = (k' - k)(k' + k)
        OrbitKind::Soft => ((kp - k) * (kp + k)).sqrt(),
        OrbitKind::HomoclinicPlus | OrbitKind::HomoclinicMinus => 1.0,
    }
}

impl OrbitFamily {
    /// Family of the given kind, without tying it to a system.
    pub fn of(kind: OrbitKind) -> Self {
        Self { kind }
    }

    pub fn kind(&self) -> OrbitKind {
        self.kind
    }

    /// Open modulus interval on which the family exists.
    pub fn k_range(&self) -> (f64, f64) {
        match self.kind {
            OrbitKind::InteriorPlus | OrbitKind::InteriorMinus => (0.0, 1.0),
            OrbitKind::Exterior => (std::f64::consts::FRAC_1_SQRT_2, 1.0),
            OrbitKind::Soft => (0.0, std::f64::consts::FRAC_1_SQRT_2),
            OrbitKind::HomoclinicPlus | OrbitKind::HomoclinicMinus => (1.0, 1.0),
        }
    }

    pub fn contains(&self, m: &EllipticModulus) -> bool {
        if !self.kind.is_periodic() {
            return true;
        }
        let (lo, hi) = self.k_range();
        match self.kind {
            OrbitKind::Exterior => m.k() > m.kprime(),
            OrbitKind::Soft => m.k() < m.kprime() && m.k() > lo,
            _ => m.k() > lo && m.k() <= hi && m.kprime() > 0.0,
        }
    }

    pub fn period_trend(&self) -> Option<PeriodTrend> {
        match self.kind {
            OrbitKind::Soft => Some(PeriodTrend::Decreasing),
            k if k.is_periodic() => Some(PeriodTrend::Increasing),
            _ => None,
        }
    }

    /// Period of the orbit with modulus `m`; `None` for homoclinic kinds.
    pub fn period(&self, m: &EllipticModulus) -> Option<f64> {
        let s = time_scale(self.kind, m);
        let kk = ellip_k(m);
        match self.kind {
            OrbitKind::InteriorPlus | OrbitKind::InteriorMinus => Some(2.0 * kk * s),
            OrbitKind::Exterior | OrbitKind::Soft => Some(4.0 * kk * s),
            _ => None,
        }
    }

    /// Point on the orbit at time `t`. The modulus is ignored for the
    /// homoclinic kinds.
    pub fn orbit(&self, m: &EllipticModulus, t: f64) -> [f64; 2] {
        let sg = self.kind.sign();
        match self.kind {
            OrbitKind::HomoclinicPlus | OrbitKind::HomoclinicMinus => {
                let s = sech(t);
                [sg * SQRT_2 * s, -sg * SQRT_2 * s * t.tanh()]
            }
            OrbitKind::InteriorPlus | OrbitKind::InteriorMinus => {
                let s = time_scale(self.kind, m);
                let (sn, cn, dn) = sncndn_unchecked(t / s, m);
                let k2 = m.k() * m.k();
                [sg * SQRT_2 / s * dn, -sg * SQRT_2 * k2 / (s * s) * sn * cn]
            }
            OrbitKind::Exterior | OrbitKind::Soft => {
                let s = time_scale(self.kind, m);
                let (sn, cn, dn) = sncndn_unchecked(t / s, m);
                let c = SQRT_2 * m.k() / s;
                [c * cn, -c / s * sn * dn]
            }
        }
    }

    /// Energy level `H` of the orbit with modulus `m` (0 on the homoclinic loops).
    pub fn energy(&self, m: &EllipticModulus) -> f64 {
        let (k, kp) = (m.k(), m.kprime());
        match self.kind {
            OrbitKind::HomoclinicPlus | OrbitKind::HomoclinicMinus => 0.0,
            OrbitKind::InteriorPlus | OrbitKind::InteriorMinus => {
                let d = 1.0 + kp * kp;
                -kp * kp / (d * d)
            }
            OrbitKind::Exterior => {
                let x = 2.0 * k * k / ((k - kp) * (k + kp));
                -0.5 * x + 0.25 * x * x
            }
            OrbitKind::Soft => {
                let x = 2.0 * k * k / ((kp - k) * (kp + k));
                0.5 * x + 0.25 * x * x
            }
        }
    }

    /// `dH/dk` along the family (zero for homoclinic kinds).
    pub fn energy_slope(&self, m: &EllipticModulus) -> f64 {
        let (k, kp) = (m.k(), m.kprime());
        match self.kind {
            OrbitKind::HomoclinicPlus | OrbitKind::HomoclinicMinus => 0.0,
            OrbitKind::InteriorPlus | OrbitKind::InteriorMinus => {
                let d = 1.0 + kp * kp;
                2.0 * k * k * k / (d * d * d)
            }
            OrbitKind::Exterior => {
                let s2 = (k - kp) * (k + kp);
                let x = 2.0 * k * k / s2;
                (-0.5 + 0.5 * x) * (-4.0 * k / (s2 * s2))
            }
            OrbitKind::Soft => {
                let s2 = (kp - k) * (kp + k);
                let x = 2.0 * k * k / s2;
                (0.5 + 0.5 * x) * (4.0 * k / (s2 * s2))
            }
        }
    }

    /// Right-hand side `2 pi n / nu` divided by `l` that the period must
    /// match for the `(l, n)` resonance, `l T(k) = 2 pi n / nu`.
    pub fn resonant_period(l: u32, n: u32, nu: f64) -> f64 {
        TAU * n as f64 / (l as f64 * nu)
    }
}

/// Exact orbit family `kind` of `system`; errors if the kind belongs to the
/// other sign of `a`.
pub fn orbit_family(system: &ForcedPlanarSystem, kind: OrbitKind) -> Result<OrbitFamily> {
    if kind.case() != system.case() {
        return Err(Error::IncompatibleFamily(format!(
            "family {kind} requires {}, system is {}",
            kind.case().tag(),
            system.case_tag()
        )));
    }
    Ok(OrbitFamily { kind })
}

/// Max over `samples` uniform times of `|d/dt orbit - J DH(orbit)|`, the
/// time derivative taken by a fourth-order difference. Periodic kinds sample one
/// period; homoclinic kinds sample `[-10, 10]`.
pub fn orbit_residual(
    family: &OrbitFamily,
    system: &ForcedPlanarSystem,
    m: &EllipticModulus,
    samples: usize,
) -> Result<f64> {
    if family.kind.case() != system.case() {
        return Err(Error::IncompatibleFamily(format!(
            "family {} does not belong to {}",
            family.kind,
            system.case_tag()
        )));
    }
    if !family.contains(m) {
        return Err(Error::Domain(format!(
            "modulus k = {} outside the range of {}",
            m.k(),
            family.kind
        )));
    }
    if samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let (t0, span) = match family.period(m) {
        Some(p) => (0.0, p),
        None => (-10.0, 20.0),
    };
    // Five-point stencil: the fast large-amplitude orbits near the
    // separatrix of the soft well defeat a plain central difference.
    let h = 1e-3 * time_scale(family.kind, m).min(1.0);
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let t = t0 + span * i as f64 / samples as f64;
        let [p2, p1, m1, m2] = [2.0, 1.0, -1.0, -2.0].map(|j| family.orbit(m, t + j * h));
        let d = |c: usize| (m2[c] - 8.0 * m1[c] + 8.0 * p1[c] - p2[c]) / (12.0 * h);
        let f = system.hamiltonian_field(family.orbit(m, t));
        let r0 = d(0) - f[0];
        let r1 = d(1) - f[1];
        worst = worst.max(r0.hypot(r1));
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Action-angle systems
// ---------------------------------------------------------------------------

pub type ActionMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type AngleMap = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionAngleCase {
    PendulumTorque,
    CoupledOscillators,
    Generic,
}

/// `I' = eps h(I, theta; 0)`, `theta' = omega(I) + eps g(I, theta; 0)` on
/// `R^ell x T^m`, to leading order in `eps`.
#[derive(Clone)]
pub struct ActionAngleSystem {
    pub ell: usize,
    pub m: usize,
    pub omega: ActionMap,
    pub h: AngleMap,
    /// Leading angle perturbation, when the catalog knows it.
    pub g: Option<AngleMap>,
    pub case_tag: ActionAngleCase,
    /// Box of admissible actions, one `(lo, hi)` per action coordinate.
    pub action_box: Vec<(f64, f64)>,
}

impl fmt::Debug for ActionAngleSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ActionAngleSystem")
            .field("ell", &self.ell)
            .field("m", &self.m)
            .field("case_tag", &self.case_tag)
            .field("action_box", &self.action_box)
            .finish_non_exhaustive()
    }
}

impl ActionAngleSystem {
    pub fn in_box(&self, action: &[f64]) -> bool {
        action.len() == self.ell
            && action
                .iter()
                .zip(&self.action_box)
                .all(|(x, (lo, hi))| x.is_finite() && *lo <= *x && *x <= *hi)
    }

    pub fn check_action(&self, action: &[f64]) -> Result<()> {
        if self.in_box(action) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "action {action:?} outside the box {:?}",
                self.action_box
            )))
        }
    }
}

/// Pendulum with constant torque: `I' = eps (beta sin theta + 1)`, `theta' = I`.
pub fn pendulum_torque(beta: f64) -> Result<ActionAngleSystem> {
    if !beta.is_finite() {
        return Err(Error::InvalidParameters(format!("beta = {beta} is not finite")));
    }
    Ok(ActionAngleSystem {
        ell: 1,
        m: 1,
        omega: Arc::new(|i: &[f64]| vec![i[0]]),
        h: Arc::new(move |_i: &[f64], th: &[f64]| vec![beta * th[0].sin() + 1.0]),
        g: Some(Arc::new(|_i: &[f64], _th: &[f64]| vec![0.0])),
        case_tag: ActionAngleCase::PendulumTorque,
        action_box: vec![(-10.0, 10.0)],
    })
}

/// One coupling harmonic `a_k sin(k1 theta_j - k2 theta_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingTerm {
    pub k1: u32,
    pub k2: u32,
    pub a: f64,
}

/// Analyticity guard `|a_k| <= M exp(-(k1 + k2) rate)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayBound {
    pub scale: f64,
    pub rate: f64,
}

pub const DEFAULT_COUPLING_TRUNCATION: u32 = 12;

/// Parameters of the coupled-oscillator model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledParams {
    pub ell: usize,
    pub delta: f64,
    /// Constant drives `Omega_j`, one per oscillator.
    pub drive: Vec<f64>,
    pub coupling: Vec<CouplingTerm>,
    pub decay_bound: Option<DecayBound>,
    /// Harmonics with `k1 + k2` above this are rejected.
    pub truncation: u32,
}

/// Second-order coupled oscillators
/// `I_j' = eps(-delta I_j + Omega_j + sum_i sum_k a_k sin(k1 theta_j - k2 theta_i))`,
/// `theta_j' = I_j`. The sum over `i` includes `i = j`.
pub fn coupled_oscillators(p: &CoupledParams) -> Result<ActionAngleSystem> {
    let ell = p.ell;
    if ell == 0 {
        return Err(Error::InvalidParameters("need at least one oscillator".into()));
    }
    if p.drive.len() != ell {
        return Err(Error::InvalidParameters(format!(
            "{} drive values given for {ell} oscillators",
            p.drive.len()
        )));
    }
    if !(p.delta.is_finite() && p.delta >= 0.0) || p.drive.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidParameters(
            "delta and drives must be finite and >= 0".into(),
        ));
    }
    for c in &p.coupling {
        if c.k1 == 0 && c.k2 == 0 {
            return Err(Error::InvalidParameters(
                "coupling harmonic k = (0, 0) is not allowed".into(),
            ));
        }
        if c.k1 + c.k2 > p.truncation {
            return Err(Error::InvalidParameters(format!(
                "coupling harmonic ({}, {}) exceeds truncation k1 + k2 <= {}",
                c.k1, c.k2, p.truncation
            )));
        }
        if !c.a.is_finite() {
            return Err(Error::InvalidParameters("coupling coefficient is not finite".into()));
        }
        if let Some(b) = p.decay_bound {
            let cap = b.scale * (-(f64::from(c.k1 + c.k2)) * b.rate).exp();
            if c.a.abs() > cap * (1.0 + 1e-12) {
                return Err(Error::InvalidParameters(format!(
                    "|a_({},{})| = {} violates the decay bound {} exp(-{} (k1 + k2)) = {cap}",
                    c.k1,
                    c.k2,
                    c.a.abs(),
                    b.scale,
                    b.rate
                )));
            }
        }
    }
    let delta = p.delta;
    let drive = p.drive.clone();
    let coupling: Vec<CouplingTerm> = p.coupling.iter().copied().filter(|c| c.a != 0.0).collect();
    let h = move |i: &[f64], th: &[f64]| -> Vec<f64> {
        (0..ell)
            .map(|j| {
                let mut s = -delta * i[j] + drive[j];
                for src in 0..ell {
                    for c in &coupling {
                        s += c.a * (f64::from(c.k1) * th[j] - f64::from(c.k2) * th[src]).sin();
                    }
                }
                s
            })
            .collect()
    };
    Ok(ActionAngleSystem {
        ell,
        m: ell,
        omega: Arc::new(|i: &[f64]| i.to_vec()),
        h: Arc::new(h),
        g: Some(Arc::new(move |_i: &[f64], _th: &[f64]| vec![0.0; ell])),
        case_tag: ActionAngleCase::CoupledOscillators,
        action_box: vec![(-10.0, 10.0); ell],
    })
}

/// The forced planar system seen in action-angle form, with the modulus as
/// action: `omega(k) = (2 pi / T(k), nu)` and
/// `h(k, theta) = DH(x^k(t)) . u(x^k(t), theta_2) / (dH/dk)` where
/// `t = theta_1 T(k) / 2 pi`. The angle perturbation is not tabulated.
pub fn forced_action_angle(system: &ForcedPlanarSystem, kind: OrbitKind) -> Result<ActionAngleSystem> {
    let family = orbit_family(system, kind)?;
    if !kind.is_periodic() {
        return Err(Error::IncompatibleFamily(format!("{kind} has no action-angle chart")));
    }
    let sys = *system;
    let nu = sys.nu();
    let (lo, hi) = family.k_range();
    let omega = move |i: &[f64]| -> Vec<f64> {
        match EllipticModulus::new(i[0]) {
            Ok(m) => vec![TAU / family.period(&m).unwrap_or(f64::NAN), nu],
            Err(_) => vec![f64::NAN, nu],
        }
    };
    let h = move |i: &[f64], th: &[f64]| -> Vec<f64> {
        let Ok(m) = EllipticModulus::new(i[0]) else {
            return vec![f64::NAN];
        };
        let period = family.period(&m).unwrap_or(f64::NAN);
        let x = family.orbit(&m, th[0] * period / TAU);
        vec![sys.energy_rate(x, th[1]) / family.energy_slope(&m)]
    };
    Ok(ActionAngleSystem {
        ell: 1,
        m: 2,
        omega: Arc::new(omega),
        h: Arc::new(h),
        g: None,
        case_tag: ActionAngleCase::Generic,
        action_box: vec![(lo.max(1e-6) + 1e-9, (hi - 1e-9).min(crate::specfun::K_MAX))],
    })
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

/// Parameters accepted by [`catalog_get`]. Missing values take the defaults
/// documented on each field.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CatalogParams {
    /// Duffing `a` (default `1`).
    pub a: Option<f64>,
    /// Forcing amplitude / pendulum torque harmonic (default `0`).
    pub beta: Option<f64>,
    /// Damping (default `0`).
    pub delta: Option<f64>,
    /// Forcing frequency (default `1`).
    pub nu: Option<f64>,
    /// Number of coupled oscillators (default `2`).
    pub ell: Option<usize>,
    /// Coupled-oscillator drives (default all zero).
    pub drive: Option<Vec<f64>>,
    pub coupling: Vec<CouplingTerm>,
    pub decay_bound: Option<DecayBound>,
    /// Coupling truncation (default 12).
    pub truncation: Option<u32>,
}

impl CatalogParams {
    pub fn coupled(&self) -> CoupledParams {
        let ell = self.ell.unwrap_or(2);
        CoupledParams {
            ell,
            delta: self.delta.unwrap_or(0.0),
            drive: self.drive.clone().unwrap_or_else(|| vec![0.0; ell]),
            coupling: self.coupling.clone(),
            decay_bound: self.decay_bound,
            truncation: self.truncation.unwrap_or(DEFAULT_COUPLING_TRUNCATION),
        }
    }
}

/// A catalog entry.
#[derive(Debug, Clone)]
pub enum CatalogSystem {
    Forced(ForcedPlanarSystem),
    ActionAngle(ActionAngleSystem),
}

pub const CATALOG_NAMES: [&str; 3] = ["pendulum_torque", "coupled_oscillators", "duffing"];

/// Look up a catalog system by name. Accepts `pendulum` and `coupled` as
/// short aliases.
pub fn catalog_get(name: &str, params: &CatalogParams) -> Result<CatalogSystem> {
    match name {
        "duffing" => Ok(CatalogSystem::Forced(ForcedPlanarSystem::duffing(
            params.a.unwrap_or(1.0),
            params.beta.unwrap_or(0.0),
            params.delta.unwrap_or(0.0),
            params.nu.unwrap_or(1.0),
        )?)),
        "pendulum_torque" | "pendulum" => Ok(CatalogSystem::ActionAngle(pendulum_torque(params.beta.unwrap_or(0.0))?)),
        "coupled_oscillators" | "coupled" => Ok(CatalogSystem::ActionAngle(coupled_oscillators(&params.coupled())?)),
        other => Err(Error::UnknownSystem(other.to_string())),
    }
}

/// Canonical catalog name for an accepted alias.
pub fn canonical_name(name: &str) -> Result<&'static str> {
    match name {
        "duffing" => Ok("duffing"),
        "pendulum_torque" | "pendulum" => Ok("pendulum_torque"),
        "coupled_oscillators" | "coupled" => Ok("coupled_oscillators"),
        other => Err(Error::UnknownSystem(other.to_string())),
    }
}
