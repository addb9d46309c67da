use std::path::Path;
use std::process::{Command, Output};

fn nonint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonint"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = nonint(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

struct Csv {
    meta: Vec<(String, String)>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn parse(text: &str) -> Self {
        let mut meta = Vec::new();
        let mut lines = text.lines().peekable();
        while let Some(l) = lines.next_if(|l| l.starts_with('#')) {
            let (k, v) = l[1..].trim().split_once('=').expect("metadata is key=value");
            meta.push((k.to_string(), v.to_string()));
        }
        let header = lines
            .next()
            .expect("header row")
            .split(',')
            .map(str::to_string)
            .collect();
        let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
        Self { meta, header, rows }
    }

    fn meta(&self, key: &str) -> &str {
        &self
            .meta
            .iter()
            .find(|(k, _)| k == key)
            .unwrap_or_else(|| panic!("no `{key}`"))
            .1
    }

    fn column(&self, name: &str) -> Vec<f64> {
        let i = self.header.iter().position(|h| h == name).unwrap();
        self.rows.iter().map(|r| r[i].parse().unwrap()).collect()
    }
}

const SUB_EXAMPLE: &[&str] = &[
    "sub",
    "--system",
    "duffing",
    "--a",
    "1",
    "--family",
    "interior",
    "--l",
    "1",
    "--n",
    "1",
    "--nu-from-k",
    "0.5",
    "--delta",
    "0.3",
    "--beta",
    "1",
];

const LIMIT_EXAMPLE: &[&str] = &[
    "limit",
    "--system",
    "duffing",
    "--a",
    "1",
    "--delta",
    "0.2",
    "--beta",
    "1",
    "--l",
    "1,2,3,5,8",
];

#[test]
fn sub_example_matches_closed_form() {
    let csv = Csv::parse(&stdout(SUB_EXAMPLE));
    assert_eq!(csv.header, ["phi", "M_quadrature", "M_closed_form", "abs_diff"]);
    assert_eq!(csv.rows.len(), 64);
    let diff = csv.column("abs_diff");
    let max = diff.iter().cloned().fold(0.0, f64::max);
    assert!(max < 1e-6, "max abs_diff {max}");
    assert!((csv.meta("k").parse::<f64>().unwrap() - 0.5).abs() < 1e-10);
}

#[test]
fn pendulum_verdict_matches_golden_file() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden/pendulum.json");
    let expected = std::fs::read_to_string(golden).unwrap();
    assert_eq!(stdout(&["verdict", "--system", "pendulum", "--beta", "0.7"]), expected);
}

#[test]
fn limit_example_decays() {
    let csv = Csv::parse(&stdout(LIMIT_EXAMPLE));
    let d = csv.column("sup_diff");
    assert_eq!(d.len(), 5);
    assert!(d[4] < d[0] / 4.0, "{d:?}");
    assert_eq!(csv.meta("final_below_quarter"), "true");
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| nonint(args).status.code().unwrap();
    assert_eq!(code(&["sub", "--nu", "5", "--beta", "1"]), 2, "no resonance");
    assert_eq!(code(&["hom", "--a", "-1"]), 2, "soft case has no loop");
    assert_eq!(code(&["sub", "--bogus", "1"]), 64);
    assert_eq!(code(&["sub", "--grid", "many"]), 64);
    assert_eq!(code(&["sub", "--format", "xml"]), 64);
    assert_eq!(code(&["frobnicate"]), 64);
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["verdict", "--system", "pendulum", "--out", "/dev/null/x"]), 1);
}

#[test]
fn outputs_are_deterministic() {
    let args = ["scan", "--beta", "1", "--points", "2", "--random", "3", "--seed", "7"];
    let a = stdout(&args);
    assert_eq!(a, stdout(&args));
    let other = stdout(&["scan", "--beta", "1", "--points", "2", "--random", "3", "--seed", "8"]);
    assert_ne!(a, other);
    let csv = Csv::parse(&a);
    assert_eq!(csv.rows.len(), 2 * 4 + 3);
    assert_eq!(csv.meta("all_agree"), "true");

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut with_out = args.to_vec();
    with_out.extend(["--out", out]);
    stdout(&with_out);
    assert_eq!(std::fs::read_to_string(dir.path().join("scan.csv")).unwrap(), a);
}

#[test]
fn json_round_trip_is_bit_exact() {
    let csv = Csv::parse(&stdout(SUB_EXAMPLE));
    let mut args = SUB_EXAMPLE.to_vec();
    args.extend(["--format", "json"]);
    let json: serde_json::Value = serde_json::from_str(&stdout(&args)).unwrap();
    let values: Vec<f64> = json["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let phi: Vec<f64> = json["phi"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let bits = |xs: &[f64]| xs.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&values), bits(&csv.column("M_quadrature")));
    assert_eq!(bits(&phi), bits(&csv.column("phi")));
    assert_eq!(json["meta"]["config"]["nu_from_k"], 0.5);
    assert_eq!(json["meta"]["config"]["seed"], 20240601);
}

#[test]
fn csv_dialect() {
    let text = stdout(&["hom", "--beta", "1", "--delta", "0.5", "--grid", "32"]);
    assert!(!text.contains('\r'));
    let csv = Csv::parse(&text);
    assert!(csv.rows.iter().all(|r| r.len() == csv.header.len()));
    for cell in &csv.rows[1] {
        let mantissa = cell.split('e').next().unwrap().trim_start_matches('-');
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{cell}");
    }
    for key in ["grid", "tail_tol", "seed", "family", "rel_tol"] {
        csv.meta(key);
    }
    assert_eq!(csv.meta("simple_zeros"), "2");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("limit.conf");
    std::fs::write(
        &path,
        "# limit run\n[system]\nname = duffing\na = 1\nbeta = 1\ndelta = 0.2\n\n[analysis]\nl = 1,2,3,5,8\ngrid = 32\n",
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let from_file = Csv::parse(&stdout(&["limit", "--config", p]));
    assert_eq!(from_file.meta("grid"), "32");
    assert_eq!(from_file.rows.len(), 5);
    let overridden = Csv::parse(&stdout(&["limit", "--config", p, "--l", "1,2"]));
    assert_eq!(overridden.rows.len(), 2);

    std::fs::write(&path, "[system]\nname = duffing\nwobble = 3\n").unwrap();
    assert_eq!(nonint(&["limit", "--config", p]).status.code(), Some(64));
    std::fs::write(&path, "beta = 1\n").unwrap();
    assert_eq!(nonint(&["limit", "--config", p]).status.code(), Some(64));
}

#[test]
fn resonance_sweep_and_persistence() {
    let csv = Csv::parse(&stdout(&["resonances", "--l", "1,2", "--n", "1,2,3", "--nu", "1"]));
    // (2, 1) asks for period pi, shorter than any interior orbit.
    assert_eq!(csv.rows.len(), 4);
    assert_eq!(csv.meta("unresolved_pairs"), "1");
    assert!(csv.column("residual").iter().all(|r| *r < 1e-10));

    let csv = Csv::parse(&stdout(&[
        "persist",
        "--beta",
        "1",
        "--delta",
        "0.3",
        "--nu-from-k",
        "0.5",
        "--eps",
        "1e-4",
    ]));
    assert_eq!(csv.meta("simple_zeros"), "2");
    let i = csv.header.iter().position(|h| h == "converged").unwrap();
    assert!(csv.rows.iter().all(|r| r[i] == "true"));
}

#[test]
fn verdict_csv_lists_hypotheses() {
    let csv = Csv::parse(&stdout(&[
        "verdict", "--system", "pendulum", "--beta", "0.7", "--format", "csv",
    ]));
    assert_eq!(
        csv.header,
        ["theorem", "conclusion", "hypothesis", "status", "evidence"]
    );
    assert!(csv
        .rows
        .iter()
        .any(|r| r[0] == "thm4_2" && r[1] == "no_n_minus_q_first_integrals"));
    csv.meta("thm4_2.scope_note");
}
