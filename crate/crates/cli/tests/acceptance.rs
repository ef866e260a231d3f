//! One line per acceptance criterion; exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use olab::config::ExperimentConfig;
use olab::corpus::Corpus;
use olab::output::budget_diff;
use olab::suites::{run_suites, SuiteReports};
use olab_core::cz::{classify, decompose, secondary_decompose, CzParams};
use olab_core::maximal::{fractional_scale, m_gamma_phi, m_phi_dyadic};
use olab_core::orlicz::{ln_luxemburg_norm, luxemburg_norm, LuxemburgQuery};
use olab_core::verify::{CheckKind, VerificationReport};
use olab_core::weights::WeightSpec;
use olab_core::{CellSet, DyadicGrid, GridFunction, YoungFunction};

type Outcome = Result<String, String>;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str, seed: u64, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::load(&configs_dir().join(format!("{name}.json"))).expect("bundled config");
    cfg.seed = seed;
    cfg.output = out.to_path_buf();
    cfg
}

fn run(cfg: &ExperimentConfig, suites: &[&str]) -> SuiteReports {
    let corpus = Corpus::build(cfg).expect("corpus");
    let names: Vec<String> = suites.iter().map(|s| s.to_string()).collect();
    run_suites(cfg, &corpus, &names).expect("suites run")
}

fn reports<'a>(r: &'a SuiteReports, suite: &str) -> &'a [VerificationReport] {
    &r.iter().find(|(s, _)| s == suite).expect("suite present").1
}

/// `(check, report label)` for every violated check.
fn violations(reps: &[VerificationReport], filter: impl Fn(&str) -> bool) -> Vec<(String, String)> {
    reps.iter()
        .flat_map(|r| r.checks.iter().filter(|c| filter(&c.name) && c.violations > 0).map(|c| (c.name.clone(), r.label.clone())))
        .collect()
}

fn instance_count(reps: &[VerificationReport], filter: impl Fn(&str) -> bool) -> usize {
    reps.iter().flat_map(|r| &r.checks).filter(|c| filter(&c.name)).map(|c| c.instances).sum()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn luxemburg_closed_forms() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut power, mut worst_power) = (0, 0.0f64);
    while power < 120 {
        let n = rng.gen_range(1..=2u8);
        let levels = rng.gen_range(1..=8 / n as u32);
        let grid = DyadicGrid::new(n, levels).unwrap();
        let vals: Vec<f64> =
            (0..grid.cell_count()).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..10.0) }).collect();
        let g = GridFunction::new(grid, vals).unwrap();
        let j = rng.gen_range(0..=levels);
        let q = grid.cube_at(j, rng.gen_range(0..grid.cube_count(j)));
        let r = rng.gen_range(1.0..6.0);
        let cells = grid.cells(&q);
        let avg = cells.iter().map(|&c| g.value(c).powf(r)).sum::<f64>() / cells.len() as f64;
        if avg == 0.0 {
            continue;
        }
        let phi = YoungFunction::power_log(r, 0.0).unwrap();
        let got = luxemburg_norm(&LuxemburgQuery::lebesgue(&g, q, &phi)).unwrap();
        worst_power = worst_power.max(rel(got, avg.powf(1.0 / r)));
        power += 1;
    }
    let phis = [YoungFunction::canonical(1.0, 0.0).unwrap(), YoungFunction::canonical(2.0, 1.0).unwrap()];
    let grid = DyadicGrid::new(2, 4).unwrap();
    let (mut indicator, mut worst_ind) = (0, 0.0f64);
    while indicator < 100 {
        let picks: Vec<bool> = (0..grid.cell_count()).map(|_| rng.gen_bool(0.4)).collect();
        let e = CellSet::from_fn(grid, |c| picks[c]);
        let j = rng.gen_range(0..=2);
        let q = grid.cube_at(j, rng.gen_range(0..grid.cube_count(j)));
        let inside = grid.cells(&q).iter().filter(|&&c| e.contains(c)).count();
        if inside == 0 {
            continue;
        }
        let phi = &phis[indicator % 2];
        let want = 1.0 / phi.inverse(grid.cells(&q).len() as f64 / inside as f64).unwrap();
        let got = luxemburg_norm(&LuxemburgQuery::lebesgue(&GridFunction::indicator(&e), q, phi)).unwrap();
        worst_ind = worst_ind.max(rel(got, want));
        indicator += 1;
    }
    let elapsed = start.elapsed();
    let detail = format!(
        "{power} power instances worst rel {worst_power:.1e}, {indicator} indicator instances worst rel {worst_ind:.1e}, {:.2}s",
        elapsed.as_secs_f64()
    );
    if worst_power <= 1e-10 && worst_ind <= 1e-8 && elapsed < Duration::from_secs(5) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn maximal_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let phis = [YoungFunction::canonical(1.0, 0.0).unwrap(), YoungFunction::canonical(2.0, 1.5).unwrap()];
    let (mut grids, mut cells, mut mismatches) = (0, 0usize, 0usize);
    for n in 1..=2u8 {
        for levels in 0..=8 / n as u32 {
            let grid = DyadicGrid::new(n, levels).unwrap();
            grids += 1;
            let f = GridFunction::new(grid, (0..grid.cell_count()).map(|_| rng.gen_range(0.0..5.0)).collect()).unwrap();
            let cubes: Vec<_> = grid.all_cubes().collect();
            for phi in &phis {
                let norms: Vec<f64> = cubes
                    .iter()
                    .map(|q| ln_luxemburg_norm(&LuxemburgQuery::lebesgue(&f, *q, phi)).unwrap().exp())
                    .collect();
                let slow = |c: usize, gamma: Option<f64>| {
                    let cell = grid.cell_cube(c);
                    cubes
                        .iter()
                        .zip(&norms)
                        .filter(|(q, _)| q.contains(&cell))
                        .map(|(q, &v)| gamma.map_or(v, |g| fractional_scale(q.level, g) * v))
                        .fold(f64::NEG_INFINITY, f64::max)
                };
                let gamma = 0.5 * n as f64;
                let fast = m_phi_dyadic(&f, phi).unwrap().output;
                let fast_g = m_gamma_phi(&f, phi, gamma).unwrap().output;
                for c in 0..grid.cell_count() {
                    cells += 2;
                    mismatches += usize::from(fast.value(c).to_bits() != slow(c, None).to_bits());
                    mismatches += usize::from(fast_g.value(c).to_bits() != slow(c, Some(gamma)).to_bits());
                }
            }
        }
    }
    let detail = format!("{grids} grids, {cells} cell values, {mismatches} mismatches");
    if mismatches == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn cz_sandwich(tmp: &Path) -> Outcome {
    let (mut counts, mut bad) = (Vec::new(), 0usize);
    for name in ["classical", "lemmas", "full"] {
        let mut cubes = 0usize;
        let cfg = load(name, 1, tmp);
        let corpus = Corpus::build(&cfg).unwrap();
        let r = cfg.young.r;
        let phi = YoungFunction::canonical(r, cfg.young.delta).unwrap();
        for &vi in &corpus.v {
            let v = &corpus.weights[vi].1;
            for (_, f) in &corpus.functions {
                for a in cfg.a_values().iter().flat_map(|&a| [a, 2.0 * a, 4.0 * a]) {
                    let mut d = decompose(&f.mul(v).unwrap(), &phi, CzParams { a, k_range: None }).unwrap();
                    classify(&mut d, v, r).unwrap();
                    secondary_decompose(&mut d, v, r).unwrap();
                    cubes += d.cubes().map(|(_, c)| 1 + c.secondary.len()).sum::<usize>();
                    bad += d.sandwich_violations();
                }
            }
        }
        counts.push(format!("{name} {cubes}"));
    }
    let detail = format!("cubes per corpus: {}, {bad} violations", counts.join(", "));
    if bad == 0 && !counts.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn reverse_holder(tmp: &Path) -> Outcome {
    let start = Instant::now();
    let cfg = load("lemmas", 1, tmp);
    let reps = run(&cfg, &["reverse_holder"]);
    let elapsed = start.elapsed();
    let mut all = reps[0].1.clone();
    all.extend(reports(&run(&load("full", 1, tmp), &["reverse_holder"]), "reverse_holder").iter().cloned());
    let bad = violations(&all, |_| true);
    let n = instance_count(&all, |_| true);
    let detail = format!(
        "{} weights, {n} instances, {} violated checks, L={} run {:.1}s",
        all.len(),
        bad.len(),
        cfg.grid.levels,
        elapsed.as_secs_f64()
    );
    if bad.is_empty() && n > 0 && elapsed < Duration::from_secs(60) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn level_set(tmp: &Path) -> Outcome {
    let mut all = Vec::new();
    for name in ["lemmas", "full"] {
        all.extend(reports(&run(&load(name, 1, tmp), &["level_set"]), "level_set").iter().cloned());
    }
    let skipped = all.iter().filter(|r| r.flags.iter().any(|f| f.starts_with("skipped"))).count();
    let n = instance_count(&all, |_| true);
    let bad = violations(&all, |_| true);
    let detail = format!("{} reports ({skipped} skipped), {n} instances, {} violated checks", all.len(), bad.len());
    if bad.is_empty() && n > 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

const CHAIN: [&str; 8] = ["triangle", "branch_i", "branch_ii", "holder", "rh_step", "wk_norm", "eta_tilde_mean", "tau_step"];

/// Largest `ln` empirical constant of a claim suite over its reports.
fn ln_empirical(reps: &[VerificationReport]) -> f64 {
    reps.iter()
        .filter_map(|r| r.check("empirical"))
        .filter(|c| c.witness.is_some())
        .map(|c| c.ln_worst_ratio)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn claims(tmp: &Path) -> Outcome {
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    for delta in [0.0, 1.0] {
        let mut ln_c: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for seed in 1..=3 {
            let mut cfg = load("full", seed, tmp);
            cfg.young.delta = delta;
            let out = run(&cfg, &["claim1", "claim3"]);
            for suite in ["claim1", "claim3"] {
                let reps = reports(&out, suite);
                if seed == 1 {
                    let mut by_check: BTreeMap<String, usize> = BTreeMap::new();
                    for (check, _) in violations(reps, |c| CHAIN.contains(&c) || c == "final") {
                        *by_check.entry(check).or_default() += 1;
                    }
                    for (check, n) in by_check {
                        failures.push(format!("delta={delta} {suite} {check} violated in {n} reports"));
                    }
                }
                ln_c.entry(suite).or_default().push(ln_empirical(reps));
            }
        }
        for (suite, xs) in ln_c {
            let spread = xs.iter().map(|x| (x - xs[0]).abs()).fold(0.0, f64::max);
            if !(spread <= 1.1f64.ln()) {
                failures.push(format!("delta={delta} {suite} ln empirical constant spreads by {spread:.2} over seeds ({xs:.1?})"));
            }
            notes.push(format!("delta={delta} {suite} ln C = {:.4}", xs[0]));
        }
    }
    if failures.is_empty() {
        Ok(notes.join(", "))
    } else {
        Err(failures.join("; "))
    }
}

fn theorem1(tmp: &Path) -> Outcome {
    let mut failures = Vec::new();
    let mut observed = Vec::new();
    let start = Instant::now();
    for seed in 1..=3 {
        let cfg = load("classical", seed, &tmp.join(format!("classical{seed}")));
        let summary = olab::run(&cfg, Some(&["theorem1".to_string()])).unwrap();
        let theorem = &summary.suites[0];
        if !theorem.pass {
            failures.push(format!("classical seed {seed} fails"));
        }
        for e in budget_diff(&summary) {
            let (Some(b), Some(o)) = (e.budget, e.observed.as_deref().and_then(olab::output::parse_float_text)) else {
                continue;
            };
            if !(o.is_finite() && (o / b - 1.0).abs() <= 0.1) {
                failures.push(format!("seed {seed} {} observed {o} against budget {b}", e.check));
            }
            if e.check == "weak_type_e0" {
                observed.push(o);
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(300) {
        failures.push(format!("classical sweep took {:.0}s", elapsed.as_secs_f64()));
    }
    let full = run(&load("full", 1, tmp), &["theorem1"]);
    let reps = reports(&full, "theorem1");
    let infinite = reps
        .iter()
        .flat_map(|r| &r.checks)
        .filter(|c| c.kind == CheckKind::Empirical && c.ln_worst_ratio == f64::INFINITY)
        .count();
    if infinite > 0 {
        failures.push(format!("{infinite} infinite empirical constants on the full corpus"));
    }
    failures.extend(violations(reps, |c| c == "covering").into_iter().map(|(c, l)| format!("{l} {c}")));
    let detail = format!(
        "classical weak-type constants {observed:?} over t in [1e-3, 1e3], {} full-corpus reports finite, {:.1}s",
        reps.len(),
        elapsed.as_secs_f64()
    );
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{}; {detail}", failures.join("; ")))
    }
}

fn corollaries(tmp: &Path) -> Outcome {
    let mut failures = Vec::new();
    let (mut draws, mut c_min) = (0usize, f64::INFINITY);
    for name in ["classical", "full"] {
        let cfg = load(name, 1, tmp);
        let out = run(&cfg, &["corollaries"]);
        for rep in reports(&out, "corollaries") {
            let t = rep.check("t_contraction").expect("contraction check");
            draws += t.instances;
            if t.violations > 0 || t.instances < 100 {
                failures.push(format!("{name} {} contraction: {} of {}", rep.label, t.violations, t.instances));
            }
            let c = rep.constants["c"];
            c_min = c_min.min(c);
            let j: usize = rep.label.split('/').nth(1).and_then(|s| s.strip_prefix('v')).unwrap().parse().unwrap();
            let constant_v = matches!(cfg.v[j], WeightSpec::Constant { .. });
            if !(c > 0.0) || (constant_v && c < 1.0) {
                failures.push(format!("{name} {} c = {c}", rep.label));
            }
        }
    }
    let detail = format!("{draws} contraction draws, smallest c = {c_min:.4}");
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{}; {detail}", failures.join("; ")))
    }
}

fn fractional(tmp: &Path) -> Outcome {
    let out = run(&load("full", 1, tmp), &["fractional_mid", "fractional_diag"]);
    let mut all = reports(&out, "fractional_mid").to_vec();
    all.extend(reports(&out, "fractional_diag").iter().cloned());
    let identities = instance_count(&all[..1], |c| c.starts_with("identity"));
    let bad = violations(&all, |_| true);
    let infinite: Vec<String> = all
        .iter()
        .flat_map(|r| r.checks.iter().filter(|c| c.ln_worst_ratio == f64::INFINITY).map(move |c| format!("{} {}", r.label, c.name)))
        .collect();
    let pointwise = all
        .iter()
        .filter_map(|r| r.check("xi_beta_pointwise"))
        .map(|c| c.worst_ratio)
        .fold(0.0, f64::max);
    let detail = format!(
        "{} reports, {identities} identity draws per report, pointwise C = {pointwise:.4}, {} violated checks, {} infinite",
        all.len(),
        bad.len(),
        infinite.len()
    );
    if bad.is_empty() && infinite.is_empty() && identities >= 100 && pointwise.is_finite() && pointwise > 0.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn determinism(tmp: &Path) -> Outcome {
    let mut outputs = Vec::new();
    for (i, threads) in [1usize, 4].into_iter().enumerate() {
        let dir = tmp.join(format!("det{i}"));
        let cfg = load("full", 7, &dir);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| olab::run(&cfg, None)).unwrap();
        outputs.push(csv_files(&dir));
    }
    let differing: Vec<&String> =
        outputs[0].iter().filter(|(name, bytes)| outputs[1].get(*name) != Some(bytes)).map(|(n, _)| n).collect();
    let detail = format!("{} CSV files compared across 1 and 4 threads, {} differ", outputs[0].len(), differing.len());
    if differing.is_empty() && outputs[0].len() == outputs[1].len() && !outputs[0].is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}: {differing:?}"))
    }
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temp dir");
    let p = tmp.path();
    let criteria: [(&str, &dyn Fn() -> Outcome); 10] = [
        ("luxemburg closed forms", &luxemburg_closed_forms),
        ("maximal operator oracle", &maximal_oracle),
        ("cz sandwiches", &|| cz_sandwich(p)),
        ("reverse hoelder", &|| reverse_holder(p)),
        ("level set", &|| level_set(p)),
        ("claim chains", &|| claims(p)),
        ("theorem 1 constants", &|| theorem1(p)),
        ("corollaries", &|| corollaries(p)),
        ("fractional suites", &|| fractional(p)),
        ("determinism", &|| determinism(p)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
