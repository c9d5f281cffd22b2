//! `left,right,x1..xp` survival CSV.
//!
//! One header row. `right` is empty or `inf` for right-censored subjects.
//! Covariate columns may carry any names; they label the JSON output.

use std::fmt::Write as _;
use std::path::Path;

use icselect::data::{IntervalDataset, IntervalObservation};

use crate::commands::Failure;

/// A dataset with its covariate column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    pub data: IntervalDataset,
}

fn parse_time(field: &str, column: &str, line: u64, allow_inf: bool) -> Result<f64, Failure> {
    let bad = |why: &str| Failure::data(format!("line {line}: column `{column}`: {why}"));
    if allow_inf && (field.is_empty() || field.eq_ignore_ascii_case("inf")) {
        return Ok(f64::INFINITY);
    }
    let v: f64 = field.parse().map_err(|_| bad(&format!("`{field}` is not a number")))?;
    if !v.is_finite() || v < 0.0 {
        return Err(bad(&format!("`{field}` is not a finite nonnegative time")));
    }
    Ok(v)
}

pub fn parse_csv<R: std::io::Read>(reader: R) -> Result<Table, Failure> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Failure::data(format!("line 1: unreadable header: {e}")))?
        .clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < 3 || !cols[0].eq_ignore_ascii_case("left") || !cols[1].eq_ignore_ascii_case("right") {
        return Err(Failure::data("line 1: header must be `left,right,x1,..,xp` with at least one covariate"));
    }
    let names: Vec<String> = cols[2..].iter().map(|s| s.to_string()).collect();
    let mut obs = Vec::new();
    let mut lines = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Failure::data(format!("line {line}: {e}"))
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let left = parse_time(&rec[0], "left", line, false)?;
        let right = parse_time(&rec[1], "right", line, true)?;
        let x = names
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let f = &rec[j + 2];
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Failure::data(format!("line {line}: column `{name}`: `{f}` is not a finite number")))
            })
            .collect::<Result<Vec<f64>, Failure>>()?;
        obs.push(IntervalObservation::new(left, right, x));
        lines.push(line);
    }
    if obs.len() < 2 {
        return Err(Failure::data(format!("need at least 2 subjects, found {}", obs.len())));
    }
    let data = IntervalDataset::new(obs).map_err(|e| match e {
        icselect::Error::InvalidObservation { index, reason } => {
            Failure::data(format!("line {}: {reason}", lines[index]))
        }
        other => Failure::data(other.to_string()),
    })?;
    Ok(Table { names, data })
}

pub fn read_csv(path: &Path) -> Result<Table, Failure> {
    let file = std::fs::File::open(path).map_err(|e| Failure::data(format!("cannot open {}: {e}", path.display())))?;
    parse_csv(std::io::BufReader::new(file))
}

/// Canonical form: shortest round-trip decimals and `inf` for censoring.
pub fn write_csv(table: &Table) -> String {
    let mut s = String::from("left,right");
    for n in &table.names {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for o in table.data.observations() {
        let _ = write!(s, "{},{}", o.left, o.right);
        for x in &o.covariates {
            let _ = write!(s, ",{x}");
        }
        s.push('\n');
    }
    s
}
