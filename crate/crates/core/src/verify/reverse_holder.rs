//! The reverse Hölder lemma with `τ_n = 2^{11+n}`:
//! `(avg_Q w^{r_w})^{1/r_w} ≤ 2 avg_Q w` and
//! `w(E)/w(Q) ≤ 2 (|E|/|Q|)^{ε_w}` for `E ⊆ Q`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::grid::{DyadicCube, GridFunction, LevelSums};
use crate::verify::report::{CheckKind, Instance, VerificationReport};
use crate::weights::{a_infty_constant, eps_w, r_w, tau_n};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReverseHolderParams {
    /// Random subsets drawn per cube, on top of the greedy heaviest-cells
    /// subsets of every size.
    pub subsets_per_cube: usize,
    pub seed: u64,
}

impl Default for ReverseHolderParams {
    fn default() -> Self {
        Self { subsets_per_cube: 200, seed: 0 }
    }
}

/// Per-cube generator seed, independent of scheduling.
pub(crate) fn cube_seed(seed: u64, global_index: usize) -> u64 {
    seed ^ (global_index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Largest `ln(w(E)/w(Q)) − ln(2(|E|/|Q|)^ε)` over the tried subsets, with
/// the subset size attaining it.
fn worst_subset(values: &[f64], eps: f64, draws: usize, rng: &mut ChaCha8Rng) -> (f64, f64, usize) {
    let n = values.len();
    let total: f64 = values.iter().sum();
    let ln_total = total.ln();
    let ln_bound = |m: usize| std::f64::consts::LN_2 + eps * (m as f64 / n as f64).ln();
    let mut best = (f64::NEG_INFINITY, 0.0, 0usize);
    let mut consider = |mass: f64, m: usize| {
        let lhs = mass.ln() - ln_total;
        let rhs = ln_bound(m);
        if lhs - rhs > best.0 - best.1 || best.2 == 0 {
            best = (lhs, rhs, m);
        }
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    for (m, x) in sorted.iter().enumerate() {
        acc += x;
        consider(acc, m + 1);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    for _ in 0..draws {
        let m = rng.gen_range(1..=n);
        let (chosen, _) = idx.partial_shuffle(rng, m);
        let mass: f64 = chosen.iter().map(|&i| values[i]).sum();
        consider(mass, m);
    }
    best
}

pub fn verify_reverse_holder(w: &GridFunction, params: ReverseHolderParams) -> Result<VerificationReport> {
    let grid = w.grid();
    let n = grid.dim();
    let ainf = a_infty_constant(w)?;
    let (rw, ew) = (r_w(n, ainf.value), eps_w(n, ainf.value));
    let mut rep = VerificationReport::new("reverse_holder");
    rep.describe("grid", format!("n={n} L={}", grid.max_level()));
    rep.constant("a_infty", ainf.value);
    rep.constant("tau_n", tau_n(n));
    rep.constant("r_w", rw);
    rep.constant("eps_w", ew);
    rep.declare("rh_power", CheckKind::Exact, None);
    rep.declare("rh_subset", CheckKind::Exact, None);

    let sums = LevelSums::new(w);
    let powers = LevelSums::new(&w.powf(rw)?);
    let cubes: Vec<DyadicCube> = grid.all_cubes().collect();
    let rows: Vec<(Instance, Instance)> = cubes
        .par_iter()
        .enumerate()
        .map(|(gi, q)| {
            let level = q.level as i32;
            let lhs = powers.average(q).ln() / rw;
            let rhs = std::f64::consts::LN_2 + sums.average(q).ln();
            let power = Instance::new("rh_power", format!("cube{gi}"), lhs, rhs).at_cube(level, None, *q);
            let values: Vec<f64> = grid.cells(q).into_iter().map(|c| w.value(c)).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(cube_seed(params.seed, gi));
            let (sl, sr, m) = worst_subset(&values, ew, params.subsets_per_cube, &mut rng);
            let subset = Instance::new("rh_subset", format!("cube{gi}/m{m}"), sl, sr).at_cube(level, None, *q);
            (power, subset)
        })
        .collect();
    for (a, b) in rows {
        rep.push(a);
        rep.push(b);
    }
    Ok(rep.finalize())
}
