//! Study reports: a CSV table whose every row carries the config hash, the
//! fits, per-property verdicts and a separate metadata file for the
//! non-deterministic parts (timestamp, runtimes).

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Missing,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Cell {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Cell {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Cell {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Cell {
        Cell::Text(v.to_string())
    }
}

/// Least-squares fit of one model.
#[derive(Clone, Debug, PartialEq)]
pub struct Fit {
    pub model: String,
    pub params: Vec<(String, f64)>,
    /// Root-mean-square residual.
    pub residual: f64,
}

/// Verdict on one property.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Check {
        Check { name: name.to_string(), passed, detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Metadata {
    pub config_hash: String,
    pub code_version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    /// Wall time per labelled run, seconds.
    pub runtimes: Vec<(String, f64)>,
}

impl Metadata {
    pub fn new(config_hash: String) -> Metadata {
        let timestamp =
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Metadata { config_hash, code_version: env!("CARGO_PKG_VERSION").to_string(), timestamp, runtimes: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub study: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub fits: Vec<Fit>,
    pub checks: Vec<Check>,
    pub metadata: Metadata,
}

pub const HASH_COLUMN: &str = "config_hash";

impl ExperimentReport {
    pub fn new(study: &str, columns: &[&str], config_hash: String) -> ExperimentReport {
        ExperimentReport {
            study: study.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            fits: Vec::new(),
            checks: Vec::new(),
            metadata: Metadata::new(config_hash),
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<Cell>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k].clone()).collect())
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn fit(&self, model: &str) -> Option<&Fit> {
        self.fits.iter().find(|f| f.model == model)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Stable sort of the rows by decreasing value of `column`.
    pub fn sort_decreasing(&mut self, column: &str) {
        if let Some(k) = self.columns.iter().position(|c| c == column) {
            self.rows.sort_by(|a, b| {
                let (x, y) = (a[k].as_f64().unwrap_or(f64::NAN), b[k].as_f64().unwrap_or(f64::NAN));
                y.total_cmp(&x)
            });
        }
    }

    pub fn csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{},{HASH_COLUMN}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            let _ = writeln!(s, "{},{}", cells.join(","), self.metadata.config_hash);
        }
        s
    }

    pub fn fits_csv(&self) -> String {
        let mut s = String::from("model,parameter,value,rms_residual\n");
        for f in &self.fits {
            for (p, v) in &f.params {
                let _ = writeln!(s, "{},{p},{v:.16e},{:.16e}", f.model, f.residual);
            }
        }
        s
    }

    pub fn checks_csv(&self) -> String {
        let mut s = String::from("check,passed,detail\n");
        for c in &self.checks {
            let _ = writeln!(s, "{},{},\"{}\"", c.name, c.passed, c.detail.replace('"', "'"));
        }
        s
    }

    pub fn metadata_toml(&self) -> String {
        let m = &self.metadata;
        let mut s = String::new();
        let _ = writeln!(s, "study = {:?}", self.study);
        let _ = writeln!(s, "config_hash = {:?}", m.config_hash);
        let _ = writeln!(s, "code_version = {:?}", m.code_version);
        let _ = writeln!(s, "timestamp = {}", m.timestamp);
        let _ = writeln!(s, "\n[runtimes]");
        for (k, v) in &m.runtimes {
            let _ = writeln!(s, "{k:?} = {v:.3}");
        }
        s
    }

    /// Writes `report.csv`, `fits.csv`, `checks.csv` and `metadata.toml`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.csv"), self.csv())?;
        std::fs::write(dir.join("fits.csv"), self.fits_csv())?;
        std::fs::write(dir.join("checks.csv"), self.checks_csv())?;
        std::fs::write(dir.join("metadata.toml"), self.metadata_toml())?;
        Ok(())
    }
}

/// Confirms that every row of `report_csv` was produced by a config with
/// hash `expected`.
pub fn verify_report(report_csv: &str, expected: &str) -> Result<()> {
    let mut lines = report_csv.lines();
    let header = lines.next().ok_or_else(|| Error::Data("empty report".into()))?;
    if header.rsplit(',').next() != Some(HASH_COLUMN) {
        return Err(Error::Data("report has no config_hash column".into()));
    }
    for (k, line) in lines.enumerate() {
        let h = line.rsplit(',').next().unwrap_or("");
        if h != expected {
            return Err(Error::Data(format!("row {} carries config hash {h}, expected {expected}", k + 1)));
        }
    }
    Ok(())
}

/// Ordinary least squares `y = a + b x`; returns `(a, b, rms)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return Err(Error::Data(format!("linear fit needs >= 2 matched points, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Data("linear fit needs distinct abscissae".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rms = (x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum::<f64>() / nf).sqrt();
    Ok((a, b, rms))
}

/// Least squares through the origin `y = a x`; returns `(a, rms)`.
pub fn proportional_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = x.len();
    if n == 0 || n != y.len() {
        return Err(Error::Data("proportional fit needs matched points".into()));
    }
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if !(sxx > 0.0) {
        return Err(Error::Data("proportional fit needs a nonzero abscissa".into()));
    }
    let a = x.iter().zip(y).map(|(u, v)| u * v).sum::<f64>() / sxx;
    let rms = (x.iter().zip(y).map(|(u, v)| (v - a * u).powi(2)).sum::<f64>() / n as f64).sqrt();
    Ok((a, rms))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_recover_lines() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 1.5 - 0.25 * v).collect();
        let (a, b, r) = linear_fit(&x, &y).unwrap();
        assert!((a - 1.5).abs() < 1e-14 && (b + 0.25).abs() < 1e-14 && r < 1e-14);
        let (k, r) = proportional_fit(&[1.0, 2.0], &[3.0, 6.0]).unwrap();
        assert!((k - 3.0).abs() < 1e-14 && r < 1e-14);
        assert!(linear_fit(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn csv_rows_carry_hash_and_verify() {
        let mut r = ExperimentReport::new("demo", &["epsilon", "value"], "abc".into());
        r.push_row(vec![0.01.into(), Cell::Missing]);
        r.push_row(vec![0.04.into(), 2.0.into()]);
        r.sort_decreasing("epsilon");
        let csv = r.csv();
        assert_eq!(csv.lines().next().unwrap(), "epsilon,value,config_hash");
        assert_eq!(csv.lines().nth(1).unwrap(), "4.0000000000000001e-2,2.0000000000000000e0,abc");
        assert_eq!(csv.lines().nth(2).unwrap(), "1.0000000000000000e-2,,abc");
        verify_report(&csv, "abc").unwrap();
        assert!(matches!(verify_report(&csv, "abd"), Err(Error::Data(_))));
    }
}
