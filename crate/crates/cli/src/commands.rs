//! The seven analyses. Each builds a [`Table`] from a resolved config.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nonint::actionangle::detect_resonant_actions;
use nonint::criteria::verdict_report;
use nonint::melnikov::{
    chaos_threshold, closed_form_curve, homoclinic_melnikov, melnikov_limit_check, resonance_residual, resonant_orbit,
    simple_zero_scan, solve_resonance, subharmonic_melnikov, MelnikovCurve, ResonancePair,
};
use nonint::odecore::newton_shoot_periodic;
use nonint::systems::{coupled_oscillators, orbit_family, pendulum_torque, OrbitKind};
use nonint::Error;

use crate::config::{Command, Format, RunConfig};
use crate::emit::{Cell, Table};
use crate::CliError;

/// Random scan tuples stay this far from the threshold in `delta / beta`,
/// relative, so zero counting is not asked to resolve a tangency.
const SCAN_MARGIN: f64 = 0.01;
/// Random ratio factors are drawn log-uniformly from `[1/R, R]`.
const SCAN_FACTOR_RANGE: f64 = 4.0;

/// Run the configured analysis and render its output.
pub fn run(cfg: &RunConfig) -> Result<String, CliError> {
    let table = match cfg.command {
        Command::Verdict => return verdict(cfg),
        Command::Sub => sub(cfg)?,
        Command::Hom => hom(cfg)?,
        Command::Resonances => resonances(cfg)?,
        Command::Limit => limit(cfg)?,
        Command::Persist => persist(cfg)?,
        Command::Scan => scan(cfg)?,
    };
    Ok(table.render(cfg))
}

fn family(cfg: &RunConfig) -> OrbitKind {
    cfg.family.unwrap_or(OrbitKind::InteriorPlus)
}

fn curve_table(quad: &MelnikovCurve, closed: &MelnikovCurve) -> Table {
    let mut t = Table::new(&["phi", "M_quadrature", "M_closed_form", "abs_diff"])
        .json_name("M_quadrature", "values")
        .json_name("M_closed_form", "closed_form");
    let mut max_diff = 0.0_f64;
    for ((phi, q), c) in quad.phi.iter().zip(&quad.values).zip(&closed.values) {
        let d = (q - c).abs();
        max_diff = max_diff.max(d);
        t.push(vec![(*phi).into(), (*q).into(), (*c).into(), d.into()]);
    }
    t.meta("max_abs_diff", max_diff);
    t
}

fn sub(cfg: &RunConfig) -> Result<Table, CliError> {
    let sys = cfg.duffing()?;
    let res = cfg.single_resonance()?;
    let kind = family(cfg);
    let (fam, m) = resonant_orbit(&sys, kind, res)?;
    let quad = subharmonic_melnikov(&sys, &fam, &m, res, cfg.grid)?;
    let closed = closed_form_curve(&sys, kind, Some(&m), Some(res), cfg.grid)?;
    let mut t = curve_table(&quad, &closed);
    t.meta("k", m.k());
    t.meta("kprime", m.kprime());
    if let Some(p) = fam.period(&m) {
        t.meta("period", p);
    }
    Ok(t)
}

fn hom(cfg: &RunConfig) -> Result<Table, CliError> {
    let sys = cfg.duffing()?;
    let kind = family(cfg);
    if kind.is_periodic() {
        return Err(Error::IncompatibleFamily(format!("`hom` needs a homoclinic family, got {kind}")).into());
    }
    let quad = homoclinic_melnikov(&sys, kind.sign(), cfg.grid, cfg.tail_tol)?;
    let closed = closed_form_curve(&sys, kind, None, None, cfg.grid)?;
    let mut t = curve_table(&quad, &closed);
    let zeros = simple_zero_scan(&quad).iter().filter(|z| z.is_simple).count();
    t.meta("chaos_threshold", chaos_threshold(sys.nu())?);
    t.meta("simple_zeros", zeros);
    Ok(t)
}

fn resonances(cfg: &RunConfig) -> Result<Table, CliError> {
    if cfg.system != "duffing" {
        return resonant_actions(cfg);
    }
    let sys = cfg.duffing()?;
    let kind = family(cfg);
    let fam = orbit_family(&sys, kind)?;
    let mut t = Table::new(&["l", "n", "k", "kprime", "period", "residual"]);
    let mut missing = 0usize;
    for &l in &cfg.l {
        for &n in &cfg.n {
            // Pairs sharing a factor repeat a coprime pair.
            let Ok(res) = ResonancePair::new(l, n) else { continue };
            match solve_resonance(kind, sys.nu(), res) {
                Ok(m) => {
                    let period = fam.period(&m).unwrap_or(f64::NAN);
                    let residual = resonance_residual(&fam, &m, res, sys.nu())?;
                    t.push(vec![
                        l.into(),
                        n.into(),
                        m.k().into(),
                        m.kprime().into(),
                        period.into(),
                        residual.into(),
                    ]);
                }
                Err(Error::NoResonance(_)) => missing += 1,
                Err(e) => return Err(e.into()),
            }
        }
    }
    if t.rows.is_empty() {
        return Err(Error::NoResonance(format!("no (l, n) pair from the lists is resonant on {kind}")).into());
    }
    t.meta("unresolved_pairs", missing);
    Ok(t)
}

fn join(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| crate::emit::fmt_f64(*x))
        .collect::<Vec<_>>()
        .join(";")
}

fn resonant_actions(cfg: &RunConfig) -> Result<Table, CliError> {
    let sys = match cfg.system_config() {
        nonint::criteria::SystemConfig::PendulumTorque { beta } => pendulum_torque(beta)?,
        nonint::criteria::SystemConfig::CoupledOscillators(p) => coupled_oscillators(&p)?,
        nonint::criteria::SystemConfig::Duffing { .. } => unreachable!("handled by the caller"),
    };
    let found = detect_resonant_actions(&sys, &sys.action_box, cfg.denom_bound, cfg.max_points)?;
    let mut t = Table::new(&["action", "omega", "omega0", "denominator", "lattice_members"]);
    for r in &found {
        t.push(vec![
            join(&r.action).into(),
            join(&r.lattice.omega).into(),
            r.lattice.omega0.map_or(Cell::S("none".into()), Cell::F),
            r.lattice.denominator.map_or(Cell::S("none".into()), Cell::U),
            r.lattice.members.len().into(),
        ]);
    }
    Ok(t)
}

fn limit(cfg: &RunConfig) -> Result<Table, CliError> {
    let sys = cfg.duffing()?;
    if family(cfg) != OrbitKind::InteriorPlus {
        return Err(Error::IncompatibleFamily("`limit` follows the interior_plus family".into()).into());
    }
    let check = melnikov_limit_check(&sys, sys.nu(), &cfg.l, cfg.grid)?;
    let mut t = Table::new(&["order", "k", "kprime", "sup_diff"]);
    for e in &check.entries {
        t.push(vec![e.order.into(), e.k.into(), e.kprime.into(), e.sup_diff.into()]);
    }
    let d = check.differences();
    let (first, last) = (d[0], d[d.len() - 1]);
    t.meta("monotone", check.is_monotone());
    t.meta("final_below_quarter", last < 0.25 * first);
    for w in &check.warnings {
        t.meta("warning", w.as_str());
    }
    Ok(t)
}

fn persist(cfg: &RunConfig) -> Result<Table, CliError> {
    let sys = cfg.duffing()?;
    let res = cfg.single_resonance()?;
    let kind = family(cfg);
    let (fam, m) = resonant_orbit(&sys, kind, res)?;
    let curve = subharmonic_melnikov(&sys, &fam, &m, res, cfg.grid)?;
    let zeros: Vec<_> = simple_zero_scan(&curve).into_iter().filter(|z| z.is_simple).collect();
    let mut t = Table::new(&[
        "zero",
        "phi",
        "slope",
        "eps",
        "x",
        "y",
        "converged",
        "residual",
        "iterations",
        "degenerate",
    ]);
    for (i, z) in zeros.iter().enumerate() {
        // The zero at phase phi corresponds to the orbit shifted by phi / nu.
        let guess = fam.orbit(&m, -z.phi / sys.nu());
        for &eps in &cfg.eps {
            let out = newton_shoot_periodic(&sys, eps, guess, 0.0, res.n(), cfg.tol)?;
            t.push(vec![
                i.into(),
                z.phi.into(),
                z.slope.into(),
                eps.into(),
                out.point[0].into(),
                out.point[1].into(),
                out.converged.into(),
                out.residual.into(),
                out.iterations.into(),
                out.degenerate.into(),
            ]);
        }
    }
    t.meta("k", m.k());
    t.meta("simple_zeros", zeros.len());
    Ok(t)
}

fn scan(cfg: &RunConfig) -> Result<Table, CliError> {
    let base = cfg.duffing()?;
    let beta = if base.beta() > 0.0 { base.beta() } else { 1.0 };
    if !(cfg.nu_min > 0.0 && cfg.nu_max >= cfg.nu_min) {
        return Err(Error::Domain(format!(
            "need 0 < nu_min <= nu_max, got {} and {}",
            cfg.nu_min, cfg.nu_max
        ))
        .into());
    }
    let mut tuples = Vec::new();
    let steps = cfg.points.max(1);
    for i in 0..steps {
        let nu = if steps == 1 {
            cfg.nu_min
        } else {
            cfg.nu_min + (cfg.nu_max - cfg.nu_min) * i as f64 / (steps - 1) as f64
        };
        for &f in &cfg.ratio_factors {
            tuples.push((nu, f));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let span = SCAN_FACTOR_RANGE.ln();
    while tuples.len() < steps * cfg.ratio_factors.len() + cfg.random {
        let nu = rng.random_range(cfg.nu_min..=cfg.nu_max);
        let f = rng.random_range(-span..span).exp();
        if (f - 1.0).abs() > SCAN_MARGIN {
            tuples.push((nu, f));
        }
    }
    let mut t = Table::new(&[
        "nu",
        "beta",
        "delta",
        "ratio",
        "threshold",
        "simple_zeros",
        "predicted",
        "agree",
    ]);
    let mut agree_all = true;
    for (nu, f) in tuples {
        let threshold = chaos_threshold(nu)?;
        let delta = f * threshold * beta;
        let sys = base.with_nu(nu)?.with_forcing(beta, delta)?;
        let curve = homoclinic_melnikov(&sys, family(cfg).sign(), cfg.grid, cfg.tail_tol)?;
        let zeros = simple_zero_scan(&curve).iter().filter(|z| z.is_simple).count();
        let predicted = delta / beta < threshold;
        let agree = (zeros > 0) == predicted;
        agree_all &= agree;
        t.push(vec![
            nu.into(),
            beta.into(),
            delta.into(),
            (delta / beta).into(),
            threshold.into(),
            zeros.into(),
            predicted.into(),
            agree.into(),
        ]);
    }
    t.meta("all_agree", agree_all);
    Ok(t)
}

fn verdict(cfg: &RunConfig) -> Result<String, CliError> {
    let report = verdict_report(&cfg.system_config(), &cfg.verdict_options())?;
    if cfg.format == Format::Json {
        return Ok(report.to_json());
    }
    let mut t = Table::new(&["theorem", "conclusion", "hypothesis", "status", "evidence"]);
    for v in &report.verdicts {
        let theorem = enum_name(&v.theorem);
        let conclusion = enum_name(&v.conclusion);
        for h in &v.hypotheses {
            let evidence: Vec<String> = h.evidence.iter().map(|(k, x)| format!("{k}={x:e}")).collect();
            t.push(vec![
                theorem.clone().into(),
                conclusion.clone().into(),
                h.name.clone().into(),
                enum_name(&h.status).into(),
                evidence.join(";").into(),
            ]);
        }
        t.meta(&format!("{theorem}.scope_note"), v.scope_note.as_str());
    }
    Ok(t.to_csv(cfg))
}

fn enum_name(v: &impl serde::Serialize) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}
