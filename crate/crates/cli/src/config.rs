//! Run configuration: sectioned `key = value` files merged with flags.
//!
//! ```text
//! # comment
//! [system]
//! name = duffing
//! a = 1
//! beta = 1.0
//!
//! [analysis]
//! l = 1,2,3,5,8
//!
//! [output]
//! format = csv
//! ```
//!
//! Every key belongs to exactly one section; unknown keys, keys outside a
//! section and repeated keys are rejected. Flags override file values.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::Serialize;

use nonint::criteria::{exponential_coupling, SystemConfig, VerdictOptions};
use nonint::melnikov::ResonancePair;
use nonint::specfun::EllipticModulus;
use nonint::systems::{canonical_name, orbit_family, CouplingTerm, DecayBound, ForcedPlanarSystem, OrbitKind};

use crate::CliError;

/// Keys accepted in each config-file section. `name` in `[system]` is the
/// file spelling of the `--system` flag.
pub const SECTIONS: [(&str, &[&str]); 3] = [
    (
        "system",
        &[
            "name",
            "a",
            "beta",
            "delta",
            "nu",
            "nu_from_k",
            "family",
            "ell",
            "drive",
            "coupling",
            "coupling_exp",
            "decay",
            "truncation",
        ],
    ),
    (
        "analysis",
        &[
            "l",
            "n",
            "grid",
            "tol",
            "tail_tol",
            "eps",
            "rel_tol",
            "tau_grid",
            "lattice_truncation",
            "denom_bound",
            "evidence_points",
            "max_points",
            "nu_min",
            "nu_max",
            "points",
            "ratio_factors",
            "random",
            "seed",
        ],
    ),
    ("output", &["out", "format"]),
];

pub const DEFAULT_SEED: u64 = 20240601;

/// Parse a config file into a flat key map.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    let mut section: Option<&'static [&'static str]> = None;
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = no + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            section = Some(
                SECTIONS
                    .iter()
                    .find(|(s, _)| *s == name)
                    .map(|(_, keys)| *keys)
                    .ok_or_else(|| CliError::Usage(format!("line {lineno}: unknown section [{name}]")))?,
            );
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("line {lineno}: expected `key = value`")))?;
        let key = key.trim();
        let keys = section.ok_or_else(|| CliError::Usage(format!("line {lineno}: `{key}` outside a section")))?;
        if !keys.contains(&key) {
            return Err(CliError::Usage(format!("line {lineno}: unknown key `{key}`")));
        }
        let key = if key == "name" { "system" } else { key };
        if out.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(CliError::Usage(format!("line {lineno}: `{key}` given twice")));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Sub,
    Hom,
    Resonances,
    Limit,
    Persist,
    Scan,
    Verdict,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sub => "sub",
            Self::Hom => "hom",
            Self::Resonances => "resonances",
            Self::Limit => "limit",
            Self::Persist => "persist",
            Self::Scan => "scan",
            Self::Verdict => "verdict",
        }
    }
}

/// Fully resolved configuration; every default is expanded.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub system: String,
    pub a: f64,
    pub beta: f64,
    pub delta: f64,
    pub nu: f64,
    pub nu_from_k: Option<f64>,
    pub family: Option<OrbitKind>,
    pub ell: usize,
    pub drive: Vec<f64>,
    pub coupling: Vec<CouplingTerm>,
    pub decay: Option<DecayBound>,
    pub truncation: u32,
    pub l: Vec<u32>,
    pub n: Vec<u32>,
    pub grid: usize,
    pub tol: f64,
    pub tail_tol: f64,
    pub eps: Vec<f64>,
    pub rel_tol: f64,
    pub tau_grid: usize,
    pub lattice_truncation: u32,
    pub denom_bound: u64,
    pub evidence_points: usize,
    pub max_points: usize,
    pub nu_min: f64,
    pub nu_max: f64,
    pub points: usize,
    pub ratio_factors: Vec<f64>,
    pub random: usize,
    pub seed: u64,
    #[serde(skip)]
    pub out: Option<String>,
    pub format: Format,
}

fn usage(key: &str, value: &str, what: &str) -> CliError {
    CliError::Usage(format!("--{}: `{value}` is not {what}", key.replace('_', "-")))
}

struct Lookup<'a>(&'a BTreeMap<String, String>);

impl Lookup<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, CliError> {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|_| usage(key, v, what)))
            .transpose()
    }

    fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        let v = self.parse::<f64>(key, "a number")?;
        match v {
            Some(x) if !x.is_finite() => Err(usage(key, self.raw(key).unwrap_or(""), "a finite number")),
            _ => Ok(v),
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<Vec<T>>, CliError> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|s| s.trim().parse::<T>().map_err(|_| usage(key, v, what)))
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()
    }
}

fn parse_coupling(text: &str) -> Result<Vec<CouplingTerm>, CliError> {
    let bad = || usage("coupling", text, "a list of `k1:k2=a` terms");
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|term| {
            let (k, a) = term.split_once('=').ok_or_else(bad)?;
            let (k1, k2) = k.split_once(':').ok_or_else(bad)?;
            Ok(CouplingTerm {
                k1: k1.trim().parse().map_err(|_| bad())?,
                k2: k2.trim().parse().map_err(|_| bad())?,
                a: a.trim().parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// Resolve flags and file values into a [`RunConfig`].
pub fn resolve(command: Command, map: &BTreeMap<String, String>) -> Result<RunConfig, CliError> {
    let get = Lookup(map);
    let system = canonical_name(get.raw("system").unwrap_or("duffing"))
        .map_err(|e| CliError::Usage(e.to_string()))?
        .to_string();
    let a = get.f64("a")?.unwrap_or(1.0);
    let family = get
        .raw("family")
        .map(|f| OrbitKind::parse(f).map_err(|e| CliError::Usage(e.to_string())))
        .transpose()?;
    let family = match (command, family) {
        (_, Some(f)) => Some(f),
        _ if system != "duffing" => None,
        (Command::Hom | Command::Scan, None) => Some(OrbitKind::HomoclinicPlus),
        (Command::Limit, None) => Some(OrbitKind::InteriorPlus),
        (_, None) => Some(if a < 0.0 {
            OrbitKind::Soft
        } else {
            OrbitKind::InteriorPlus
        }),
    };
    let ell = get.parse::<usize>("ell", "a positive integer")?.unwrap_or(2);
    let mut coupling = get.raw("coupling").map(parse_coupling).transpose()?.unwrap_or_default();
    if let Some(v) = get.list::<f64>("coupling_exp", "`scale,rate,max_order`")? {
        if v.len() != 3 || v[2] < 2.0 || v[2].fract() != 0.0 {
            return Err(usage(
                "coupling_exp",
                get.raw("coupling_exp").unwrap_or(""),
                "`scale,rate,max_order`",
            ));
        }
        coupling.extend(exponential_coupling(v[0], v[1], v[2] as u32));
    }
    let decay = match get.list::<f64>("decay", "`scale,rate`")? {
        Some(v) if v.len() == 2 => Some(DecayBound {
            scale: v[0],
            rate: v[1],
        }),
        Some(_) => return Err(usage("decay", get.raw("decay").unwrap_or(""), "`scale,rate`")),
        None => None,
    };
    let default_orders = if command == Command::Limit {
        vec![1, 2, 3, 5, 8]
    } else {
        vec![1]
    };
    let format = match get.raw("format") {
        None if command == Command::Verdict => Format::Json,
        None | Some("csv") => Format::Csv,
        Some("json") => Format::Json,
        Some(other) => return Err(usage("format", other, "`csv` or `json`")),
    };
    let mut cfg = RunConfig {
        command,
        system,
        a,
        beta: get.f64("beta")?.unwrap_or(0.0),
        delta: get.f64("delta")?.unwrap_or(0.0),
        nu: get.f64("nu")?.unwrap_or(1.0),
        nu_from_k: get.f64("nu_from_k")?,
        family,
        ell,
        drive: get
            .list::<f64>("drive", "a list of numbers")?
            .unwrap_or_else(|| vec![0.0; ell]),
        coupling,
        decay,
        truncation: get.parse("truncation", "a positive integer")?.unwrap_or(12),
        l: get.list("l", "a list of positive integers")?.unwrap_or(default_orders),
        n: get.list("n", "a list of positive integers")?.unwrap_or_else(|| vec![1]),
        grid: get.parse("grid", "a positive integer")?.unwrap_or(64),
        tol: get.f64("tol")?.unwrap_or(1e-10),
        tail_tol: get.f64("tail_tol")?.unwrap_or(1e-12),
        eps: get.list("eps", "a list of numbers")?.unwrap_or_else(|| vec![1e-3]),
        rel_tol: get.f64("rel_tol")?.unwrap_or(nonint::criteria::DEFAULT_REL_TOL),
        tau_grid: get.parse("tau_grid", "a positive integer")?.unwrap_or(16),
        lattice_truncation: get.parse("lattice_truncation", "a positive integer")?.unwrap_or(12),
        denom_bound: get.parse("denom_bound", "a positive integer")?.unwrap_or(64),
        evidence_points: get.parse("evidence_points", "a positive integer")?.unwrap_or(11),
        max_points: get.parse("max_points", "a positive integer")?.unwrap_or(50),
        nu_min: get.f64("nu_min")?.unwrap_or(0.5),
        nu_max: get.f64("nu_max")?.unwrap_or(2.0),
        points: get.parse("points", "a positive integer")?.unwrap_or(4),
        ratio_factors: get
            .list("ratio_factors", "a list of numbers")?
            .unwrap_or_else(|| vec![0.5, 0.99, 1.01, 2.0]),
        random: get.parse("random", "a count")?.unwrap_or(0),
        seed: get.parse("seed", "an unsigned integer")?.unwrap_or(DEFAULT_SEED),
        out: get.raw("out").map(str::to_string),
        format,
    };
    if cfg.l.iter().chain(&cfg.n).any(|v| *v == 0) {
        return Err(CliError::Usage("--l and --n take positive integers".into()));
    }
    if let Some(k) = cfg.nu_from_k {
        cfg.nu = nu_from_k(&cfg, k)?;
    }
    Ok(cfg)
}

/// `nu` making the orbit of modulus `k` resonant: `l T(k) = 2 pi n / nu`.
fn nu_from_k(cfg: &RunConfig, k: f64) -> Result<f64, CliError> {
    if cfg.system != "duffing" {
        return Err(CliError::Usage("--nu-from-k applies to duffing only".into()));
    }
    let kind = cfg.family.unwrap_or(OrbitKind::InteriorPlus);
    let sys = ForcedPlanarSystem::duffing(cfg.a, cfg.beta, cfg.delta, 1.0)?;
    let fam = orbit_family(&sys, kind)?;
    let m = EllipticModulus::new(k)?;
    if !fam.contains(&m) {
        return Err(nonint::Error::Domain(format!("k = {k} outside the range of {kind}")).into());
    }
    let period = fam
        .period(&m)
        .ok_or_else(|| nonint::Error::IncompatibleFamily(format!("{kind} is not periodic")))?;
    let res = ResonancePair::new(cfg.l[0], cfg.n[0])?;
    Ok(TAU * f64::from(res.n()) / (f64::from(res.l()) * period))
}

impl RunConfig {
    pub fn system_config(&self) -> SystemConfig {
        match self.system.as_str() {
            "pendulum_torque" => SystemConfig::PendulumTorque { beta: self.beta },
            "coupled_oscillators" => SystemConfig::CoupledOscillators(nonint::systems::CoupledParams {
                ell: self.ell,
                delta: self.delta,
                drive: self.drive.clone(),
                coupling: self.coupling.clone(),
                decay_bound: self.decay,
                truncation: self.truncation,
            }),
            _ => SystemConfig::Duffing {
                a: self.a,
                beta: self.beta,
                delta: self.delta,
                nu: self.nu,
            },
        }
    }

    pub fn verdict_options(&self) -> VerdictOptions {
        VerdictOptions {
            rel_tol: self.rel_tol,
            phi_grid: self.grid,
            tau_grid: self.tau_grid,
            truncation: self.lattice_truncation,
            denom_bound: self.denom_bound,
            evidence_points: self.evidence_points,
            tail_tol: self.tail_tol,
        }
    }

    pub fn duffing(&self) -> Result<ForcedPlanarSystem, CliError> {
        if self.system != "duffing" {
            return Err(nonint::Error::IncompatibleFamily(format!(
                "`{}` needs the duffing system, got {}",
                self.command.name(),
                self.system
            ))
            .into());
        }
        Ok(ForcedPlanarSystem::duffing(self.a, self.beta, self.delta, self.nu)?)
    }

    pub fn single_resonance(&self) -> Result<ResonancePair, CliError> {
        match (self.l.as_slice(), self.n.as_slice()) {
            ([l], [n]) => Ok(ResonancePair::new(*l, *n)?),
            _ => Err(CliError::Usage(format!(
                "`{}` takes a single --l and --n",
                self.command.name()
            ))),
        }
    }

    /// Resolved configuration as `(key, value)` pairs in key order.
    pub fn echo(&self) -> Vec<(String, String)> {
        let value = serde_json::to_value(self).expect("config serialises");
        let serde_json::Value::Object(map) = value else {
            unreachable!()
        };
        let mut pairs: Vec<(String, String)> = map
            .into_iter()
            .map(|(k, v)| {
                let s = match v {
                    serde_json::Value::String(s) => s,
                    serde_json::Value::Null => "none".into(),
                    other => other.to_string(),
                };
                (k, s)
            })
            .collect();
        pairs.sort();
        pairs
    }

    pub fn echo_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_sections_and_errors() {
        let m = parse_config_text("# run\n[system]\nname = duffing\na = -1\n\n[analysis]\nl = 1,3\n").unwrap();
        assert_eq!(m["system"], "duffing");
        assert_eq!(m["a"], "-1");
        assert_eq!(m["l"], "1,3");
        assert!(parse_config_text("a = 1\n").is_err());
        assert!(parse_config_text("[system]\nbogus = 1\n").is_err());
        assert!(parse_config_text("[analysis]\na = 1\n").is_err());
        assert!(parse_config_text("[nope]\n").is_err());
        assert!(parse_config_text("[system]\na = 1\na = 2\n").is_err());
    }

    #[test]
    fn defaults_expand() {
        let cfg = resolve(Command::Limit, &BTreeMap::new()).unwrap();
        assert_eq!(cfg.l, vec![1, 2, 3, 5, 8]);
        assert_eq!(cfg.seed, DEFAULT_SEED);
        assert_eq!(cfg.family, Some(OrbitKind::InteriorPlus));
        assert_eq!(
            resolve(Command::Verdict, &BTreeMap::new()).unwrap().format,
            Format::Json
        );
    }

    #[test]
    fn nu_from_k_round_trip() {
        let mut m = BTreeMap::new();
        m.insert("nu_from_k".to_string(), "0.5".to_string());
        let cfg = resolve(Command::Sub, &m).unwrap();
        let res = ResonancePair::new(1, 1).unwrap();
        let k = nonint::melnikov::solve_resonance(OrbitKind::InteriorPlus, cfg.nu, res)
            .unwrap()
            .k();
        assert!((k - 0.5).abs() < 1e-10);
    }

    #[test]
    fn coupling_terms() {
        let c = parse_coupling("1:1=1.0, 2:3=-0.5").unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!((c[1].k1, c[1].k2, c[1].a), (2, 3, -0.5));
        assert!(parse_coupling("1-1=2").is_err());
    }
}
