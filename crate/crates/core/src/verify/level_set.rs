//! The level-set lemma: for `Q ∈ Γ_{ℓ,k}`, `ℓ ≥ 0`,
//! `u(E_k ∩ Q) ≤ c₁ e^{−c₂ r ℓ} u(Q)` with
//! `c₁ = 2([v^r]_{A_q} a^r)^{1/((q−1)(1+τ_n[u]_{A∞}))}` and
//! `c₂ = ln a/((q−1)(1+τ_n[u]_{A∞}))`.

use crate::cz::CzDecomposition;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::orlicz::log_sum_exp;
use crate::verify::report::{CheckKind, Instance, VerificationReport};
use crate::weights::{a1_constant, a_infty_constant, tau_n, QCertificate};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSetConstants {
    pub c1: f64,
    pub c2: f64,
    pub u_a_infty: f64,
    pub vr_a_q: f64,
    pub q: f64,
}

pub fn level_set_constants(n: u8, u_a_infty: f64, vr_a_q: f64, q: f64, a: f64, r: f64) -> LevelSetConstants {
    let e = 1.0 / ((q - 1.0) * (1.0 + tau_n(n) * u_a_infty));
    LevelSetConstants { c1: 2.0 * (vr_a_q * a.powf(r)).powf(e), c2: a.ln() * e, u_a_infty, vr_a_q, q }
}

/// `q_vr` certifies `v^r ∈ A_q`; `d` must be classified with the same `v`, `r`.
pub fn verify_level_set_lemma(
    u: &GridFunction,
    r: f64,
    q_vr: &QCertificate,
    d: &CzDecomposition,
) -> Result<VerificationReport> {
    if !q_vr.certified {
        return Err(Error::Precondition(format!(
            "v^r is not certified in A_q (best [v^r]_A_{} = {})",
            q_vr.q, q_vr.constant.value
        )));
    }
    if d.r != Some(r) {
        return Err(Error::Precondition("decomposition is not classified with this r".into()));
    }
    let grid = u.grid();
    if grid != d.grid() {
        return Err(Error::Domain("u and the decomposition live on different grids".into()));
    }
    let a1 = a1_constant(u)?;
    let ainf = a_infty_constant(u)?;
    let k = level_set_constants(grid.dim(), ainf.value, q_vr.constant.value, q_vr.q, d.a, r);
    let mut rep = VerificationReport::new("level_set");
    rep.describe("q", q_vr.q);
    rep.constant("u_a1", a1.value);
    rep.constant("u_a_infty", ainf.value);
    rep.constant("vr_a_q", k.vr_a_q);
    rep.constant("c1", k.c1);
    rep.constant("c2", k.c2);
    rep.declare("level_set", CheckKind::Exact, None);
    rep.declare("level_set_chain", CheckKind::Exact, None);
    let ln_cell = grid.cell_measure().ln();
    let ln_a = d.a.ln();
    for level in d.levels.iter().filter(|l| !l.skipped) {
        for (j, c) in level.cubes.iter().enumerate() {
            let ell = match c.ell {
                Some(l) if l >= 0 && c.gamma => l,
                _ => continue,
            };
            let cells = grid.cells(&c.cube);
            let ln_uq = log_sum_exp(cells.iter().map(|&x| u.value(x).ln() + ln_cell));
            let in_e: Vec<usize> = cells.iter().copied().filter(|&x| level.e_k.contains(x)).collect();
            let ln_ue = log_sum_exp(in_e.iter().map(|&x| u.value(x).ln() + ln_cell));
            let id = format!("k{}/j{j}", level.k);
            let rhs = k.c1.ln() - k.c2 * r * ell as f64 + ln_uq;
            rep.push(Instance::new("level_set", id.clone(), ln_ue, rhs).at_cube(level.k, Some(ell), c.cube));
            let frac = (in_e.len() as f64 / cells.len() as f64).ln();
            let chain_l = (k.q - 1.0) * frac;
            let chain_r = k.vr_a_q.ln() + (1 - ell) as f64 * r * ln_a;
            rep.push(Instance::new("level_set_chain", id, chain_l, chain_r).at_cube(level.k, Some(ell), c.cube));
        }
    }
    Ok(rep.finalize())
}
