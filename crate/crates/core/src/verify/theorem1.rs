//! The mixed weak-type estimate
//! `uv^r({M_Φ(fv)/v > t}) ≤ C ∫ Ψ_ε(|f|/t) u v^r` over a grid of `t`, with
//! the finite partial sums `A_N`, `B_N` of the cube decomposition at each `t`.
//!
//! For `g = |f|v/t`, every cell of `{M_Φ g > v}` with `v` inside the
//! decomposed range lies in some `E_k ∩ Q_j^k`, and
//! `uv^r(E_k ∩ Q) ≤ a^{(k+1)r} u(E_k ∩ Q)`. The pieces over `Γ_{ℓ,k}`,
//! `ℓ ≥ 0`, form `A_N`, the pieces over `Γ_{−1,k}` form `B_N`.

use crate::cz::{classify, decompose_norms, CzParams};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, LevelSums};
use crate::maximal::{m_phi_from_norms, CubeNorms};
use crate::orlicz::log_sum_exp;
use crate::verify::level_set::level_set_constants;
use crate::verify::report::{CheckKind, Instance, VerificationReport};
use crate::weights::{a1_constant, a_infty_constant, certify_q, eps1_candidate, tau_n, Eps1Candidate, QCertificate};
use crate::young::{psi_eps, YoungFunction};

/// `n` log-spaced points from `lo` to `hi`, both included.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// 25 points in `[1e-3, 1e3]`.
pub fn default_t_grid() -> Vec<f64> {
    log_grid(1e-3, 1e3, 25)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EpsLadder {
    pub eps1: Eps1Candidate,
    /// `r/((q−1)(1+τ_n[u]_{A∞}))`.
    pub eps2: f64,
    pub eps0: f64,
    pub q: QCertificate,
    pub u_a_infty: f64,
    pub values: [f64; 3],
}

/// `ε₀ = min(ε₁, ε₂)` and the ladder `ε₀/2, ε₀/4, ε₀/8`.
pub fn admissible_eps(u: &GridFunction, v: &GridFunction, r: f64) -> Result<EpsLadder> {
    let eps1 = eps1_candidate(v, r)?;
    let q = certify_q(&v.powf(r)?)?;
    let u_a_infty = a_infty_constant(u)?.value;
    let eps2 = r / ((q.q - 1.0) * (1.0 + tau_n(u.grid().dim()) * u_a_infty));
    let eps0 = eps1.eps.min(eps2);
    Ok(EpsLadder { eps1, eps2, eps0, q, u_a_infty, values: [eps0 / 2.0, eps0 / 4.0, eps0 / 8.0] })
}

#[derive(Debug, Clone, Copy)]
pub struct Theorem1Inputs<'a> {
    pub u: &'a GridFunction,
    pub v: &'a GridFunction,
    pub f: &'a GridFunction,
    pub phi: &'a YoungFunction,
    pub a: f64,
    /// Empty selects the admissible ladder.
    pub eps: &'a [f64],
    pub t_grid: &'a [f64],
}

fn ln_sum_over(cells: impl Iterator<Item = usize>, term: impl Fn(usize) -> f64) -> f64 {
    log_sum_exp(cells.map(term))
}

pub fn verify_theorem1(inp: &Theorem1Inputs<'_>) -> Result<VerificationReport> {
    let fam = inp
        .phi
        .family()
        .ok_or_else(|| Error::Precondition("Young function carries no family parameters".into()))?;
    let (r, delta) = (fam.r, fam.delta);
    let grid = inp.f.grid();
    if grid != inp.u.grid() || grid != inp.v.grid() {
        return Err(Error::Domain("inputs live on different grids".into()));
    }
    let n = grid.dim();
    if !(inp.a > 2f64.powi(n as i32)) {
        return Err(Error::Parameter(format!("a must exceed 2^n, got {}", inp.a)));
    }
    let ladder = admissible_eps(inp.u, inp.v, r)?;
    let eps: Vec<f64> = if inp.eps.is_empty() { ladder.values.to_vec() } else { inp.eps.to_vec() };
    if let Some(e) = eps.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::Parameter(format!("eps must lie in (0,1), got {e}")));
    }
    let a1 = a1_constant(inp.u)?;
    let ls = level_set_constants(n, ladder.u_a_infty, ladder.q.constant.value, ladder.q.q, inp.a, r);

    let mut rep = VerificationReport::new("theorem1");
    rep.describe("r", r);
    rep.describe("delta", delta);
    rep.describe("a", inp.a);
    rep.describe("t_points", inp.t_grid.len());
    for (i, e) in eps.iter().enumerate() {
        rep.describe(&format!("eps{i}"), e);
        rep.declare(&format!("weak_type_e{i}"), CheckKind::Empirical, None);
        rep.declare(&format!("a_pieces_e{i}"), CheckKind::Empirical, None);
        rep.declare(&format!("b_pieces_e{i}"), CheckKind::Empirical, None);
    }
    rep.declare("covering", CheckKind::Exact, None);
    rep.constant("u_a1", a1.value);
    rep.constant("u_a_infty", ladder.u_a_infty);
    rep.constant("eps1", ladder.eps1.eps);
    rep.constant("eps2", ladder.eps2);
    rep.constant("eps0", ladder.eps0);
    rep.constant("q", ladder.q.q);
    rep.constant("vr_a_q", ladder.q.constant.value);
    rep.constant("c1", ls.c1);
    rep.constant("c2", ls.c2);
    rep.constant("tau_n", tau_n(n));
    if !ladder.q.certified {
        rep.flag(format!("v^r not certified in A_q up to q = {}", ladder.q.q));
    }
    if !ladder.eps1.certified {
        rep.flag("no eps1 candidate certified on the ladder".to_string());
    }
    if eps.iter().any(|&e| e >= ladder.eps0) {
        rep.flag("some eps is not below eps0".to_string());
    }

    let psis = eps.iter().map(|&e| psi_eps(inp.phi, delta, e)).collect::<Result<Vec<_>>>()?;
    let ln_cell = grid.cell_measure().ln();
    let ln_u: Vec<f64> = inp.u.values().iter().map(|x| x.ln()).collect();
    let ln_v: Vec<f64> = inp.v.values().iter().map(|x| x.ln()).collect();
    let ln_uvr: Vec<f64> = (0..grid.cell_count()).map(|c| ln_u[c] + r * ln_v[c] + ln_cell).collect();
    let u_sums = LevelSums::new(inp.u);
    let norms = CubeNorms::compute(&inp.f.mul(inp.v)?, inp.phi)?;
    let ln_m: Vec<f64> = m_phi_from_norms(&norms)?.output.values().iter().map(|x| x.ln()).collect();
    let ln_a = inp.a.ln();
    let mut residual_t = 0usize;

    for (ti, &t) in inp.t_grid.iter().enumerate() {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Parameter(format!("t must be positive, got {t}")));
        }
        let ln_t = t.ln();
        let level_cells: Vec<usize> = (0..grid.cell_count()).filter(|&c| ln_m[c] - ln_t > ln_v[c]).collect();
        let ln_lhs = ln_sum_over(level_cells.iter().copied(), |c| ln_uvr[c]);
        let ln_psi: Vec<Vec<f64>> = psis
            .iter()
            .map(|p| inp.f.values().iter().map(|&x| p.ln_eval(x / t)).collect())
            .collect();
        for (i, lp) in ln_psi.iter().enumerate() {
            let ln_rhs = ln_sum_over(0..grid.cell_count(), |c| lp[c] + ln_uvr[c]);
            rep.push(Instance::new(&format!("weak_type_e{i}"), format!("t{ti}"), ln_lhs, ln_rhs).at_t(t));
        }

        let mut d = decompose_norms(&norms.scaled(-ln_t), CzParams { a: inp.a, k_range: None })?;
        classify(&mut d, inp.v, r)?;
        let mut covered = vec![false; grid.cell_count()];
        let mut pieces = Vec::new();
        for level in d.levels.iter().filter(|l| !l.skipped) {
            for (j, c) in level.cubes.iter().enumerate().filter(|(_, c)| c.gamma) {
                let ell = c.ell.expect("classified");
                let cells: Vec<usize> = grid.cells(&c.cube).into_iter().filter(|&x| level.e_k.contains(x)).collect();
                for &x in &cells {
                    covered[x] = true;
                }
                let ln_ue = ln_sum_over(cells.iter().copied(), |x| ln_u[x] + ln_cell);
                let ln_piece = (level.k + 1) as f64 * r * ln_a + ln_ue;
                pieces.push(ln_piece);
                let ln_uq_avg = u_sums.average(&c.cube).ln();
                let q_cells = grid.cells(&c.cube);
                for (i, e) in eps.iter().enumerate() {
                    // ∫_Q Ψ_ε(|f|/t) v^r, kept in log form since Ψ_ε overflows for small ε
                    let ln_int = ln_sum_over(q_cells.iter().copied(), |x| ln_psi[i][x] + r * ln_v[x] + ln_cell);
                    let id = format!("t{ti}/k{}/j{j}", level.k);
                    let (name, ln_bound) = if ell >= 0 {
                        let ln_lf = if delta == 0.0 { 0.0 } else { delta / e * (ell.max(1) as f64).ln() }
                            + ell as f64 * e * ln_a;
                        let b = r * ln_a + ls.c1.ln() - ls.c2 * r * ell as f64 + ln_lf + ln_uq_avg + ln_int;
                        (format!("a_pieces_e{i}"), b)
                    } else {
                        (format!("b_pieces_e{i}"), r * ln_a + ln_uq_avg + ln_int)
                    };
                    rep.push(Instance::new(&name, id, ln_piece, ln_bound).at_cube(level.k, Some(ell), c.cube).at_t(t));
                }
            }
        }
        let residual: Vec<usize> = level_cells.iter().copied().filter(|&c| !covered[c]).collect();
        if !residual.is_empty() {
            residual_t += 1;
        }
        pieces.push(ln_sum_over(residual.into_iter(), |c| ln_uvr[c]));
        rep.push(Instance::new("covering", format!("t{ti}"), ln_lhs, log_sum_exp(pieces.into_iter())).at_t(t));
    }
    rep.constant("t_with_residual", residual_t as f64);
    if residual_t == 0 {
        rep.flag("partial sums stabilized: every level-set cell is covered by A_N + B_N".to_string());
    } else {
        rep.flag(format!("partial sums left level-set cells uncovered at {residual_t} values of t"));
    }
    Ok(rep.finalize())
}
