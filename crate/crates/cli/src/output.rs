//! Summary, CSV, budget-diff and plot files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use olab_core::verify::report::write_csv;
use olab_core::verify::{CheckKind, VerificationReport};

use crate::suites::SuiteReports;

/// A check aggregated over every report of one suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub kind: String,
    pub instances: usize,
    pub violations: usize,
    pub degenerate: usize,
    /// `None` when no instance had a positive left side; infinite ratios
    /// are written as `"inf"`.
    pub worst_ratio: Option<String>,
    pub witness: Option<String>,
    pub budget: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub suite: String,
    pub pass: bool,
    pub checks: Vec<CheckRow>,
    pub flags: Vec<String>,
    pub reports: Vec<serde_json::Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub pass: bool,
    pub seed: u64,
    pub suites: Vec<SuiteSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetEntry {
    pub suite: String,
    pub check: String,
    pub budget: Option<f64>,
    pub observed: Option<String>,
    /// `within`, `regression` or `unbudgeted`.
    pub status: String,
}

/// Full-precision float text; infinities spelled out.
pub fn float_text(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:e}")
    }
}

pub fn parse_float_text(s: &str) -> Option<f64> {
    match s {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

/// `x` rounded to `digits` significant digits, `%g` style.
pub fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else { float_text(x) };
    }
    let e = x.abs().log10().floor() as i32;
    if e < -4 || e >= digits as i32 {
        let s = format!("{:.*e}", digits - 1, x);
        let (m, ex) = s.split_once('e').expect("exponent");
        let m = if m.contains('.') { m.trim_end_matches('0').trim_end_matches('.') } else { m };
        format!("{m}e{ex}")
    } else {
        let decimals = (digits as i32 - 1 - e).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    }
}

fn aggregate(reports: &[VerificationReport]) -> Vec<CheckRow> {
    let mut rows: Vec<(CheckRow, f64)> = Vec::new();
    for rep in reports {
        for c in &rep.checks {
            let idx = match rows.iter().position(|(r, _)| r.name == c.name) {
                Some(i) => i,
                None => {
                    rows.push((
                        CheckRow {
                            name: c.name.clone(),
                            kind: match c.kind {
                                CheckKind::Exact => "exact".into(),
                                CheckKind::Empirical => "empirical".into(),
                            },
                            instances: 0,
                            violations: 0,
                            degenerate: 0,
                            worst_ratio: None,
                            witness: None,
                            budget: c.budget,
                            pass: true,
                        },
                        f64::NEG_INFINITY,
                    ));
                    rows.len() - 1
                }
            };
            let (row, ln_worst) = &mut rows[idx];
            row.instances += c.instances;
            row.violations += c.violations;
            row.degenerate += c.degenerate;
            row.pass &= c.pass;
            if c.witness.is_some() && c.ln_worst_ratio > *ln_worst {
                *ln_worst = c.ln_worst_ratio;
                row.worst_ratio = Some(float_text(c.worst_ratio));
                row.witness = Some(format!("{} {}", rep.label, c.witness.as_deref().unwrap_or("")).trim().to_string());
            }
        }
    }
    rows.into_iter().map(|(r, _)| r).collect()
}

pub fn summarize(seed: u64, suites: &SuiteReports) -> Result<Summary> {
    let mut out = Vec::new();
    for (name, reports) in suites {
        let mut flags: Vec<String> = reports
            .iter()
            .flat_map(|r| r.flags.iter().map(move |f| format!("{}: {f}", r.label)))
            .collect();
        flags.dedup();
        out.push(SuiteSummary {
            suite: name.clone(),
            pass: reports.iter().all(|r| r.pass),
            checks: aggregate(reports),
            flags,
            reports: reports.iter().map(serde_json::to_value).collect::<std::result::Result<_, _>>()?,
        });
    }
    Ok(Summary { pass: out.iter().all(|s| s.pass), seed, suites: out })
}

pub fn budget_diff(summary: &Summary) -> Vec<BudgetEntry> {
    let mut out = Vec::new();
    for s in &summary.suites {
        for c in s.checks.iter().filter(|c| c.kind == "empirical") {
            let observed = c.worst_ratio.as_deref().and_then(parse_float_text);
            let status = match (c.budget, observed) {
                (None, _) => "unbudgeted",
                (Some(_), _) if c.pass => "within",
                _ => "regression",
            };
            out.push(BudgetEntry {
                suite: s.suite.clone(),
                check: c.name.clone(),
                budget: c.budget,
                observed: c.worst_ratio.clone(),
                status: status.into(),
            });
        }
    }
    out
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Writes `summary.json`, `budget_diff.json` and one `<suite>.csv` per suite.
pub fn write_outputs(dir: &Path, suites: &SuiteReports, summary: &Summary) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, reports) in suites {
        let path = dir.join(format!("{name}.csv"));
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        write_csv(reports, BufWriter::new(file))?;
    }
    write_json(&dir.join("summary.json"), summary)?;
    write_json(&dir.join("budget_diff.json"), &budget_diff(summary))?;
    Ok(())
}

pub fn read_summary(dir: &Path) -> Result<Summary> {
    let path = dir.join("summary.json");
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn render_table(summary: &Summary) -> String {
    let header = ["suite", "check", "kind", "instances", "violations", "worst_ratio", "budget", "pass"];
    let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for s in &summary.suites {
        for c in &s.checks {
            rows.push(vec![
                s.suite.clone(),
                c.name.clone(),
                c.kind.clone(),
                c.instances.to_string(),
                c.violations.to_string(),
                c.worst_ratio.as_deref().and_then(parse_float_text).map(|x| sig(x, 6)).unwrap_or_else(|| "-".into()),
                c.budget.map(|b| sig(b, 6)).unwrap_or_else(|| "-".into()),
                if c.pass { "yes".into() } else { "NO".into() },
            ]);
        }
    }
    let widths: Vec<usize> = (0..header.len()).map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in &rows {
        let line: Vec<String> = r.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Collects `suite,t,ratio` rows from the suite CSVs of `dir` into `plot.csv`.
pub fn write_plot(dir: &Path, summary: &Summary) -> Result<usize> {
    let path = dir.join("plot.csv");
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&path)?));
    w.write_record(["suite", "t", "ratio"])?;
    let mut rows = 0;
    for s in &summary.suites {
        let src = dir.join(format!("{}.csv", s.suite));
        let mut rdr = csv::Reader::from_path(&src).with_context(|| format!("reading {}", src.display()))?;
        let headers = rdr.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let (Some(ti), Some(ri)) = (col("t"), col("ratio")) else {
            continue;
        };
        for rec in rdr.records() {
            let rec = rec?;
            let t = rec.get(ti).unwrap_or("");
            if t.is_empty() {
                continue;
            }
            w.write_record([s.suite.as_str(), t, rec.get(ri).unwrap_or("")])?;
            rows += 1;
        }
    }
    w.flush()?;
    Ok(rows)
}

pub fn print_table<W: Write>(mut out: W, summary: &Summary) -> Result<()> {
    out.write_all(render_table(summary).as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(sig(1.23456789, 6), "1.23457");
        assert_eq!(sig(123456789.0, 6), "1.23457e8");
        assert_eq!(sig(0.000123456789, 6), "0.000123457");
        assert_eq!(sig(2.0, 6), "2");
        assert_eq!(sig(1e-7, 6), "1e-7");
        assert_eq!(sig(f64::INFINITY, 6), "inf");
    }

    #[test]
    fn float_text_round_trip() {
        for x in [0.0, 1.5, -2e-300, f64::INFINITY, 123.456] {
            assert_eq!(parse_float_text(&float_text(x)), Some(x));
        }
    }
}
