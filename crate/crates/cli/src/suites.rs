//! Expands a config into verifier jobs and runs them.

use std::collections::BTreeMap;

use anyhow::{Context, Result};
use rayon::prelude::*;

use olab_core::cz::{classify, decompose, CzDecomposition, CzParams};
use olab_core::verify::claims::{verify_claim, Claim, ClaimInputs};
use olab_core::verify::corollaries::{verify_corollaries, CorollaryInputs, PsiEquivalent};
use olab_core::verify::fractional::{verify_fractional_diag, verify_fractional_mid, FractionalInputs};
use olab_core::verify::level_set::verify_level_set_lemma;
use olab_core::verify::reverse_holder::{verify_reverse_holder, ReverseHolderParams};
use olab_core::verify::theorem1::{admissible_eps, log_grid, verify_theorem1, Theorem1Inputs};
use olab_core::verify::VerificationReport;
use olab_core::weights::certify_q;
use olab_core::{Error, GridFunction, YoungFunction};

use crate::config::ExperimentConfig;
use crate::corpus::Corpus;

/// Suites in canonical order, each with its reports in job order.
pub type SuiteReports = Vec<(String, Vec<VerificationReport>)>;

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    corpus: &'a Corpus,
    phi: YoungFunction,
    t_grid: Vec<f64>,
}

impl Ctx<'_> {
    fn u(&self, i: usize) -> &GridFunction {
        &self.corpus.weights[self.corpus.u[i]].1
    }

    fn v(&self, j: usize) -> &GridFunction {
        &self.corpus.weights[self.corpus.v[j]].1
    }

    fn f(&self, k: usize) -> &GridFunction {
        &self.corpus.functions[k].1
    }

    fn triples(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.corpus.u.len() {
            for j in 0..self.corpus.v.len() {
                for k in 0..self.corpus.functions.len() {
                    out.push((i, j, k));
                }
            }
        }
        out
    }

    fn eps_for(&self, i: usize, j: usize) -> Result<Vec<f64>> {
        if !self.cfg.ladders.eps.is_empty() {
            return Ok(self.cfg.ladders.eps.clone());
        }
        Ok(admissible_eps(self.u(i), self.v(j), self.cfg.young.r)?.values.to_vec())
    }

    fn decomposition(&self, j: usize, k: usize, a: f64) -> Result<CzDecomposition> {
        let g = self.f(k).mul(self.v(j))?;
        let mut d = decompose(&g, &self.phi, CzParams { a, k_range: None })?;
        classify(&mut d, self.v(j), self.cfg.young.r)?;
        Ok(d)
    }
}

/// A failed precondition turns into an empty, flagged report.
fn precondition(suite: &str, label: &str, r: olab_core::Result<VerificationReport>) -> Result<VerificationReport> {
    match r {
        Ok(rep) => Ok(rep.with_label(label)),
        Err(Error::Precondition(msg)) => {
            let mut rep = VerificationReport::new(suite).with_label(label);
            rep.flag(format!("skipped: {msg}"));
            Ok(rep.finalize())
        }
        Err(e) => Err(e).with_context(|| format!("{suite} {label}")),
    }
}

fn run_suite(ctx: &Ctx<'_>, suite: &str) -> Result<Vec<VerificationReport>> {
    let cfg = ctx.cfg;
    let r = cfg.young.r;
    let a_vals = cfg.a_values();
    match suite {
        "reverse_holder" => {
            let mut jobs: Vec<(String, GridFunction)> =
                ctx.corpus.weights.iter().enumerate().map(|(i, (_, w))| (format!("w{i}"), w.clone())).collect();
            if r != 1.0 {
                for (j, &w) in ctx.corpus.v.iter().enumerate() {
                    jobs.push((format!("v{j}^r"), ctx.corpus.weights[w].1.powf(r)?));
                }
            }
            let params = ReverseHolderParams { subsets_per_cube: cfg.subsets_per_cube, seed: cfg.seed };
            jobs.par_iter()
                .map(|(label, w)| Ok(verify_reverse_holder(w, params)?.with_label(label.clone())))
                .collect()
        }
        "level_set" => {
            let mut jobs = Vec::new();
            for (i, j, k) in ctx.triples() {
                for (m, &a) in a_vals.iter().enumerate() {
                    jobs.push((i, j, k, m, a));
                }
            }
            jobs.par_iter()
                .map(|&(i, j, k, m, a)| {
                    let label = format!("u{i}/v{j}/f{k}/a{m}");
                    let d = ctx.decomposition(j, k, a)?;
                    let q = certify_q(&ctx.v(j).powf(r)?)?;
                    precondition(suite, &label, verify_level_set_lemma(ctx.u(i), r, &q, &d))
                })
                .collect()
        }
        "claim1" | "claim3" => {
            let claim = if suite == "claim1" { Claim::One } else { Claim::Three };
            let mut jobs = Vec::new();
            for (i, j, k) in ctx.triples() {
                let eps = ctx.eps_for(i, j)?;
                for (m, &a) in a_vals.iter().enumerate() {
                    for (e, &eps) in eps.iter().enumerate() {
                        jobs.push((i, j, k, m, a, e, eps));
                    }
                }
            }
            jobs.par_iter()
                .map(|&(i, j, k, m, a, e, eps)| {
                    let label = format!("u{i}/v{j}/f{k}/a{m}/e{e}");
                    let d = ctx.decomposition(j, k, a)?;
                    let inp = ClaimInputs { f: ctx.f(k), v: ctx.v(j), phi: &ctx.phi, eps, d: &d };
                    precondition(suite, &label, verify_claim(&inp, claim))
                })
                .collect()
        }
        "theorem1" => {
            let mut jobs = Vec::new();
            for (i, j, k) in ctx.triples() {
                for (m, &a) in a_vals.iter().enumerate() {
                    jobs.push((i, j, k, m, a));
                }
            }
            jobs.par_iter()
                .map(|&(i, j, k, m, a)| {
                    let label = format!("u{i}/v{j}/f{k}/a{m}");
                    let inp = Theorem1Inputs {
                        u: ctx.u(i),
                        v: ctx.v(j),
                        f: ctx.f(k),
                        phi: &ctx.phi,
                        a,
                        eps: &cfg.ladders.eps,
                        t_grid: &ctx.t_grid,
                    };
                    precondition(suite, &label, verify_theorem1(&inp))
                })
                .collect()
        }
        "corollaries" => {
            let psi = PsiEquivalent::default_for(r, cfg.young.delta);
            ctx.triples()
                .par_iter()
                .map(|&(i, j, k)| {
                    let label = format!("u{i}/v{j}/f{k}");
                    let eps = ctx.eps_for(i, j)?[0];
                    let inp = CorollaryInputs {
                        u: ctx.u(i),
                        v: ctx.v(j),
                        f: ctx.f(k),
                        phi: &ctx.phi,
                        psi: Some(&psi),
                        eps,
                        t_grid: &ctx.t_grid,
                        seed: cfg.seed,
                        contraction_draws: 100,
                    };
                    precondition(suite, &label, verify_corollaries(&inp))
                })
                .collect()
        }
        "fractional_mid" | "fractional_diag" => {
            let second: &[f64] = if suite == "fractional_mid" { &cfg.ladders.p } else { &cfg.ladders.eps_fractional };
            let mut jobs = Vec::new();
            for (i, j, k) in ctx.triples() {
                for (g, &gamma) in cfg.ladders.gamma.iter().enumerate() {
                    for (s, &x) in second.iter().enumerate() {
                        jobs.push((i, j, k, g, gamma, s, x));
                    }
                }
            }
            jobs.par_iter()
                .map(|&(i, j, k, g, gamma, s, x)| {
                    let inp = FractionalInputs {
                        u: ctx.u(i),
                        v: ctx.v(j),
                        f: ctx.f(k),
                        r,
                        delta: cfg.young.delta,
                        gamma,
                        t_grid: &ctx.t_grid,
                    };
                    if suite == "fractional_mid" {
                        let label = format!("u{i}/v{j}/f{k}/g{g}/p{s}");
                        precondition(suite, &label, verify_fractional_mid(&inp, x, cfg.seed))
                    } else {
                        let label = format!("u{i}/v{j}/f{k}/g{g}/e{s}");
                        precondition(suite, &label, verify_fractional_diag(&inp, x))
                    }
                })
                .collect()
        }
        other => unreachable!("suite {other} passed validation"),
    }
}

/// Runs the requested suites in canonical order and applies budgets.
pub fn run_suites(cfg: &ExperimentConfig, corpus: &Corpus, suites: &[String]) -> Result<SuiteReports> {
    let ctx = Ctx {
        cfg,
        corpus,
        phi: YoungFunction::canonical(cfg.young.r, cfg.young.delta)?,
        t_grid: log_grid(cfg.t_grid.lo, cfg.t_grid.hi, cfg.t_grid.points),
    };
    let empty = BTreeMap::new();
    let mut out = Vec::new();
    for &name in crate::config::SUITES.iter().filter(|s| suites.iter().any(|x| x == *s)) {
        let budgets = cfg.budgets.get(name).unwrap_or(&empty);
        let reports = run_suite(&ctx, name)?.into_iter().map(|r| r.with_budgets(budgets)).collect();
        out.push((name.to_string(), reports));
    }
    Ok(out)
}
