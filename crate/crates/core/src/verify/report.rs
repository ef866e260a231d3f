//! Verification reports: per-instance records, per-check summaries and CSV
//! output.
//!
//! Instances keep `ln lhs` and `ln rhs`; the linear values are derived and
//! may under- or overflow for extreme inputs, the ratio never does.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::grid::DyadicCube;

/// Relative float slack for inequalities with explicit constants.
pub const EXACT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Explicit-constant inequality: every instance must hold up to
    /// [`EXACT_SLACK`].
    Exact,
    /// Inequality with an unspecified constant: the sup of the ratios is
    /// recorded and compared with an optional budget.
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance {
    pub check: String,
    pub id: String,
    pub k: Option<i32>,
    pub l: Option<i32>,
    pub cube: Option<DyadicCube>,
    pub t: Option<f64>,
    pub ln_lhs: f64,
    pub ln_rhs: f64,
    pub ratio: f64,
    pub pass: bool,
    /// Both sides vanish, or the instance is outside the inequality's premise.
    pub degenerate: bool,
}

impl Instance {
    pub fn new(check: &str, id: impl Into<String>, ln_lhs: f64, ln_rhs: f64) -> Self {
        let (ratio, degenerate) = if ln_lhs == f64::NEG_INFINITY {
            (0.0, ln_rhs == f64::NEG_INFINITY)
        } else if ln_rhs == f64::NEG_INFINITY {
            (f64::INFINITY, false)
        } else {
            ((ln_lhs - ln_rhs).exp(), false)
        };
        Self {
            check: check.to_string(),
            id: id.into(),
            k: None,
            l: None,
            cube: None,
            t: None,
            ln_lhs,
            ln_rhs,
            ratio,
            pass: true,
            degenerate,
        }
    }

    pub fn at_cube(mut self, k: i32, l: Option<i32>, cube: DyadicCube) -> Self {
        self.k = Some(k);
        self.l = l;
        self.cube = Some(cube);
        self
    }

    pub fn at_t(mut self, t: f64) -> Self {
        self.t = Some(t);
        self
    }

    /// Marks an instance whose premise does not hold; it is kept for the
    /// record but never counts as a violation.
    pub fn out_of_premise(mut self) -> Self {
        self.degenerate = true;
        self
    }

    pub fn lhs(&self) -> f64 {
        self.ln_lhs.exp()
    }

    pub fn rhs(&self) -> f64 {
        self.ln_rhs.exp()
    }

    /// `ln lhs ≤ ln rhs + ln(1 + slack)`.
    pub fn holds_exactly(&self) -> bool {
        self.ln_lhs == f64::NEG_INFINITY || self.ln_lhs <= self.ln_rhs + EXACT_SLACK.ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub kind: CheckKind,
    pub instances: usize,
    pub violations: usize,
    pub degenerate: usize,
    /// Largest ratio over non-degenerate instances; for empirical checks
    /// this is the empirical constant.
    pub worst_ratio: f64,
    pub ln_worst_ratio: f64,
    pub witness: Option<String>,
    pub budget: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub suite: String,
    /// Distinguishes reports of one suite run on different inputs.
    pub label: String,
    pub descriptor: BTreeMap<String, String>,
    pub constants: BTreeMap<String, f64>,
    pub flags: Vec<String>,
    pub checks: Vec<CheckSummary>,
    #[serde(skip)]
    pub instances: Vec<Instance>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn new(suite: &str) -> Self {
        Self {
            suite: suite.to_string(),
            label: String::new(),
            descriptor: BTreeMap::new(),
            constants: BTreeMap::new(),
            flags: Vec::new(),
            checks: Vec::new(),
            instances: Vec::new(),
            pass: true,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn describe(&mut self, key: &str, value: impl ToString) {
        self.descriptor.insert(key.to_string(), value.to_string());
    }

    pub fn constant(&mut self, key: &str, value: f64) {
        self.constants.insert(key.to_string(), value);
    }

    pub fn flag(&mut self, msg: impl Into<String>) {
        self.flags.push(msg.into());
    }

    /// Registers a check; instances are attached with [`Self::push`].
    pub fn declare(&mut self, name: &str, kind: CheckKind, budget: Option<f64>) {
        if self.checks.iter().all(|c| c.name != name) {
            self.checks.push(CheckSummary {
                name: name.to_string(),
                kind,
                instances: 0,
                violations: 0,
                degenerate: 0,
                worst_ratio: 0.0,
                ln_worst_ratio: f64::NEG_INFINITY,
                witness: None,
                budget,
                pass: true,
            });
        }
    }

    pub fn push(&mut self, inst: Instance) {
        self.instances.push(inst);
    }

    /// Computes instance pass flags and check summaries.
    pub fn finalize(mut self) -> Self {
        let kinds: BTreeMap<String, (CheckKind, Option<f64>)> =
            self.checks.iter().map(|c| (c.name.clone(), (c.kind, c.budget))).collect();
        for inst in &mut self.instances {
            let (kind, budget) = kinds.get(&inst.check).copied().unwrap_or((CheckKind::Exact, None));
            inst.pass = inst.degenerate
                || match kind {
                    CheckKind::Exact => inst.holds_exactly(),
                    CheckKind::Empirical => {
                        inst.ratio.is_finite() && budget.map_or(true, |b| inst.ratio <= b * (1.0 + EXACT_SLACK))
                    }
                };
        }
        for check in &mut self.checks {
            let mut worst: Option<&Instance> = None;
            check.instances = 0;
            check.violations = 0;
            check.degenerate = 0;
            for inst in self.instances.iter().filter(|i| i.check == check.name) {
                check.instances += 1;
                if inst.degenerate {
                    check.degenerate += 1;
                    continue;
                }
                if !inst.pass {
                    check.violations += 1;
                }
                let lr = inst.ln_lhs - inst.ln_rhs;
                let worse = match worst {
                    None => true,
                    Some(w) => lr > w.ln_lhs - w.ln_rhs || (inst.ratio.is_infinite() && w.ratio.is_finite()),
                };
                if worse && inst.ln_lhs > f64::NEG_INFINITY {
                    worst = Some(inst);
                }
            }
            if let Some(w) = worst {
                check.ln_worst_ratio = if w.ratio.is_infinite() { f64::INFINITY } else { w.ln_lhs - w.ln_rhs };
                check.worst_ratio = w.ratio;
                check.witness = Some(witness_label(w));
            }
            check.pass = check.violations == 0
                && (check.kind == CheckKind::Exact
                    || (check.ln_worst_ratio < f64::INFINITY
                        && check.budget.map_or(true, |b| check.worst_ratio <= b * (1.0 + EXACT_SLACK))));
        }
        self.pass = self.checks.iter().all(|c| c.pass);
        self
    }

    /// Sets budgets of empirical checks by name and recomputes the summaries.
    pub fn with_budgets(mut self, budgets: &BTreeMap<String, f64>) -> Self {
        for c in &mut self.checks {
            if c.kind == CheckKind::Empirical {
                if let Some(&b) = budgets.get(&c.name) {
                    c.budget = Some(b);
                }
            }
        }
        self.finalize()
    }

    pub fn check(&self, name: &str) -> Option<&CheckSummary> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn witness_label(inst: &Instance) -> String {
    let mut s = inst.id.clone();
    if let Some(c) = inst.cube {
        s.push_str(&format!(" cube={c}"));
    }
    if let Some(k) = inst.k {
        s.push_str(&format!(" k={k}"));
    }
    if let Some(t) = inst.t {
        s.push_str(&format!(" t={t:e}"));
    }
    s
}

/// CSV column order.
pub const CSV_HEADER: [&str; 10] = ["suite", "instance_id", "k", "l", "cube", "lhs", "rhs", "ratio", "pass", "t"];

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes the instances of `reports` in order.
pub fn write_csv<W: Write>(reports: &[VerificationReport], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(CSV_HEADER)?;
    for rep in reports {
        for i in &rep.instances {
            wtr.write_record([
                rep.suite.clone(),
                if rep.label.is_empty() {
                    format!("{}:{}", i.check, i.id)
                } else {
                    format!("{}/{}:{}", rep.label, i.check, i.id)
                },
                opt(i.k),
                opt(i.l),
                opt(i.cube),
                format!("{:e}", i.lhs()),
                format!("{:e}", i.rhs()),
                format!("{:e}", i.ratio),
                i.pass.to_string(),
                i.t.map(|t| format!("{t:e}")).unwrap_or_default(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_and_empirical_summaries() {
        let mut r = VerificationReport::new("demo");
        r.declare("exact", CheckKind::Exact, None);
        r.declare("emp", CheckKind::Empirical, Some(3.0));
        r.push(Instance::new("exact", "a", 0.0, 0.0));
        r.push(Instance::new("exact", "b", 1.0, 0.0));
        r.push(Instance::new("emp", "c", 2.0f64.ln(), 0.0));
        r.push(Instance::new("emp", "d", f64::NEG_INFINITY, f64::NEG_INFINITY));
        let r = r.finalize();
        let e = r.check("exact").unwrap();
        assert_eq!((e.instances, e.violations), (2, 1));
        assert!(!e.pass);
        let m = r.check("emp").unwrap();
        assert!((m.worst_ratio - 2.0).abs() < 1e-15);
        assert_eq!(m.degenerate, 1);
        assert!(m.pass);
        assert!(!r.pass);
    }

    #[test]
    fn hard_violation_when_rhs_vanishes() {
        let mut r = VerificationReport::new("demo");
        r.declare("emp", CheckKind::Empirical, None);
        r.push(Instance::new("emp", "x", 0.0, f64::NEG_INFINITY));
        let r = r.finalize();
        assert!(!r.pass);
        assert_eq!(r.check("emp").unwrap().worst_ratio, f64::INFINITY);
    }

    #[test]
    fn csv_layout() {
        let mut r = VerificationReport::new("s");
        r.declare("c", CheckKind::Exact, None);
        r.push(Instance::new("c", "i0", 0.5f64.ln(), 0.0).at_cube(2, Some(0), DyadicCube::root(1)).at_t(1.0));
        let r = r.finalize();
        let mut buf = Vec::new();
        write_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "suite,instance_id,k,l,cube,lhs,rhs,ratio,pass,t");
        assert_eq!(lines.next().unwrap(), "s,c:i0,2,0,0/0,5e-1,1e0,5e-1,true,1e0");
    }
}
