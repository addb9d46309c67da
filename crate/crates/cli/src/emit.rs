//! CSV and JSON writers.
//!
//! CSV: `# key=value` metadata lines, one header row, comma-separated
//! records, LF endings. Floats carry 17 significant digits. JSON: an object
//! with a `meta` block and one array per column.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;

use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    B(bool),
    S(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::U(x) => x.to_string(),
            Cell::B(x) => x.to_string(),
            Cell::S(x) => x.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(x) => json!(x),
            Cell::U(x) => json!(x),
            Cell::B(x) => json!(x),
            Cell::S(x) => json!(x),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::U(u64::from(x))
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::U(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::U(x as u64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::B(x)
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::S(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A result table. `json_names` lets a column use a different key in JSON
/// (curves expose their quadrature column as `values`).
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub json_names: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub meta: Vec<(String, Cell)>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            json_names: columns.to_vec(),
            ..Self::default()
        }
    }

    pub fn json_name(mut self, column: &str, name: &'static str) -> Self {
        if let Some(i) = self.columns.iter().position(|c| *c == column) {
            self.json_names[i] = name;
        }
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn meta(&mut self, key: &str, value: impl Into<Cell>) {
        self.meta.push((key.to_string(), value.into()));
    }

    pub fn to_csv(&self, cfg: &RunConfig) -> String {
        let mut s = String::new();
        for (k, v) in cfg.echo() {
            let _ = writeln!(s, "# {k}={v}");
        }
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k}={}", v.csv());
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(s, "{}", line.join(","));
        }
        s
    }

    pub fn to_json(&self, cfg: &RunConfig) -> String {
        let mut meta = Map::new();
        meta.insert("config".into(), cfg.echo_json());
        for (k, v) in &self.meta {
            meta.insert(k.clone(), v.json());
        }
        let mut obj = Map::new();
        obj.insert("meta".into(), Value::Object(meta));
        for (i, name) in self.json_names.iter().enumerate() {
            let col: Vec<Value> = self.rows.iter().map(|r| r[i].json()).collect();
            obj.insert((*name).into(), Value::Array(col));
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("table serialises");
        s.push('\n');
        s
    }

    pub fn render(&self, cfg: &RunConfig) -> String {
        match cfg.format {
            Format::Csv => self.to_csv(cfg),
            Format::Json => self.to_json(cfg),
        }
    }
}

/// Write `text` to `<out>/<command>.<ext>` or to stdout when no directory
/// was given. Returns the path written, if any.
pub fn write_output(cfg: &RunConfig, text: &str) -> Result<Option<PathBuf>, CliError> {
    match &cfg.out {
        Some(dir) => {
            let dir = PathBuf::from(dir);
            fs::create_dir_all(&dir)?;
            let ext = match cfg.format {
                Format::Csv => "csv",
                Format::Json => "json",
            };
            let path = dir.join(format!("{}.{ext}", cfg.command.name()));
            fs::write(&path, text)?;
            Ok(Some(path))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(None)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
        }
    }

    #[test]
    fn constant_column_prints_identically() {
        let mut t = Table::new(&["phi", "value"]);
        for i in 0..4 {
            t.push(vec![Cell::F(i as f64), Cell::F(0.7)]);
        }
        let cfg = crate::config::resolve(crate::config::Command::Sub, &Default::default()).unwrap();
        let csv = t.to_csv(&cfg);
        let second: Vec<&str> = csv
            .lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap())
            .collect();
        assert_eq!(second.len(), 4);
        assert!(second.iter().all(|v| *v == second[0]));
        assert!(!csv.contains('\r'));
    }
}
