//! Consequences for the quotient operators `S_Φ f = M_Φ(fv)/v` and
//! `𝒯_Φ f = M_Φ(fv)/M_Φ v`.
//!
//! With `c = min M_Φ v / v > 0`, `{𝒯_Φ f > t} ⊆ {S_Φ f > ct}`, so the weak
//! type of `S_Φ` transfers to `𝒯_Φ` at `ct`. For `Ψ ≈ Φ` above `t₀` the cube
//! norms satisfy `A‖·‖_Φ ≤ ‖·‖_Ψ ≤ B‖·‖_Φ`; both constants are measured over
//! every dyadic cube for `h = |f|v` and `h = v`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{DyadicCube, GridFunction};
use crate::maximal::{m_phi_dyadic, sawyer_quotients, CubeNorms};
use crate::orlicz::log_sum_exp;
use crate::verify::report::{CheckKind, Instance, VerificationReport};
use crate::young::{eta_eps, psi_eps, Shape, YoungFunction};

/// A Young function equivalent to `Φ` on `[t₀, ∞)`.
#[derive(Debug, Clone)]
pub struct PsiEquivalent {
    pub psi: YoungFunction,
    pub t0: f64,
}

impl PsiEquivalent {
    /// `z^{r+1}` on `[0,1]`, `Φ` above 1.
    pub fn default_for(r: f64, delta: f64) -> Self {
        Self { psi: YoungFunction::from_shape(Shape::Piecewise { low: r + 1.0, power: r, log_power: delta }), t0: 1.0 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CorollaryInputs<'a> {
    pub u: &'a GridFunction,
    pub v: &'a GridFunction,
    pub f: &'a GridFunction,
    pub phi: &'a YoungFunction,
    /// `None` runs the norm-equivalence part with `Ψ = Φ`.
    pub psi: Option<&'a PsiEquivalent>,
    pub eps: f64,
    pub t_grid: &'a [f64],
    pub seed: u64,
    /// Random inputs for the `L^∞` contraction of `𝒯_Φ`.
    pub contraction_draws: usize,
}

/// Extreme values of `‖h‖_Ψ/‖h‖_Φ` over all cubes where both are positive.
fn norm_ratio_range(h: &GridFunction, phi: &YoungFunction, psi: &YoungFunction) -> Result<[(f64, DyadicCube); 2]> {
    let a = CubeNorms::compute(h, phi)?;
    let b = CubeNorms::compute(h, psi)?;
    let grid = h.grid();
    let mut lo = (f64::INFINITY, grid.root());
    let mut hi = (f64::NEG_INFINITY, grid.root());
    for q in grid.all_cubes() {
        let (x, y) = (a.ln_norm(&q), b.ln_norm(&q));
        if x == f64::NEG_INFINITY || y == f64::NEG_INFINITY {
            continue;
        }
        let d = y - x;
        if d < lo.0 {
            lo = (d, q);
        }
        if d > hi.0 {
            hi = (d, q);
        }
    }
    Ok([lo, hi])
}

fn ln_measure(cells: impl Iterator<Item = usize>, ln_w: &[f64]) -> f64 {
    log_sum_exp(cells.map(|c| ln_w[c]))
}

pub fn verify_corollaries(inp: &CorollaryInputs<'_>) -> Result<VerificationReport> {
    let fam = inp
        .phi
        .family()
        .ok_or_else(|| Error::Precondition("Young function carries no family parameters".into()))?;
    let (r, delta) = (fam.r, fam.delta);
    let grid = inp.f.grid();
    if grid != inp.u.grid() || grid != inp.v.grid() {
        return Err(Error::Domain("inputs live on different grids".into()));
    }
    let psi_eq = inp.psi.cloned().unwrap_or(PsiEquivalent { psi: inp.phi.clone(), t0: 0.0 });
    let psi_e = psi_eps(inp.phi, delta, inp.eps)?;
    let eta_phi = eta_eps(delta, inp.eps)?.compose(inp.phi);

    let mut rep = VerificationReport::new("corollaries");
    rep.describe("r", r);
    rep.describe("delta", delta);
    rep.describe("eps", inp.eps);
    rep.describe("t0", psi_eq.t0);
    rep.declare("lower_bound", CheckKind::Empirical, None);
    rep.declare("inclusion", CheckKind::Exact, None);
    rep.declare("corollary1", CheckKind::Empirical, None);
    rep.declare("norm_equiv_upper", CheckKind::Empirical, None);
    rep.declare("norm_equiv_lower", CheckKind::Empirical, None);
    rep.declare("corollary3", CheckKind::Empirical, None);
    rep.declare("t_contraction", CheckKind::Exact, None);

    let ln_cell = grid.cell_measure().ln();
    let ln_v: Vec<f64> = inp.v.values().iter().map(|x| x.ln()).collect();
    let ln_uvr: Vec<f64> =
        (0..grid.cell_count()).map(|c| inp.u.value(c).ln() + r * ln_v[c] + ln_cell).collect();

    // M_Φ v ≥ c v
    let sq = sawyer_quotients(inp.f, inp.v, inp.phi)?;
    let ln_mfv: Vec<f64> = sq.m_fv.output.values().iter().map(|x| x.ln()).collect();
    let ln_mv: Vec<f64> = sq.m_v.output.values().iter().map(|x| x.ln()).collect();
    let (c_cell, ln_c) = (0..grid.cell_count())
        .map(|c| (c, ln_mv[c] - ln_v[c]))
        .fold((0, f64::INFINITY), |b, x| if x.1 < b.1 { x } else { b });
    rep.constant("c", ln_c.exp());
    rep.push(Instance::new("lower_bound", format!("cell{c_cell}"), 0.0, ln_c));

    // Ψ-equivalence constants
    let fv = inp.f.mul(inp.v)?;
    let mut ln_a = 0f64;
    let mut ln_b = 0f64;
    for (name, h) in [("fv", &fv), ("v", inp.v)] {
        let [(lo, qlo), (hi, qhi)] = norm_ratio_range(h, inp.phi, &psi_eq.psi)?;
        if lo.is_finite() {
            ln_a = if name == "fv" { lo } else { ln_a.min(lo) };
            rep.push(Instance::new("norm_equiv_lower", name, 0.0, lo).at_cube(0, None, qlo));
        }
        if hi.is_finite() {
            ln_b = if name == "fv" { hi } else { ln_b.max(hi) };
            rep.push(Instance::new("norm_equiv_upper", name, hi, 0.0).at_cube(0, None, qhi));
        }
    }
    let ln_c2 = std::f64::consts::LN_2 + psi_eq.t0.max(1.0).ln() + ln_b - ln_a;
    rep.constant("norm_a", ln_a.exp());
    rep.constant("norm_b", ln_b.exp());
    rep.constant("c2", ln_c2.exp());

    let m_psi_fv = m_phi_dyadic(&fv, &psi_eq.psi)?;
    let m_psi_v = m_phi_dyadic(inp.v, &psi_eq.psi)?;
    let ln_q3: Vec<f64> = (0..grid.cell_count())
        .map(|c| m_psi_fv.output.value(c).ln() - m_psi_v.output.value(c).ln())
        .collect();

    for (ti, &t) in inp.t_grid.iter().enumerate() {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Parameter(format!("t must be positive, got {t}")));
        }
        let ln_t = t.ln();
        let id = format!("t{ti}");
        let t_set = (0..grid.cell_count()).filter(|&c| ln_mfv[c] - ln_mv[c] > ln_t);
        let ln_t_meas = ln_measure(t_set, &ln_uvr);
        let s_set = (0..grid.cell_count()).filter(|&c| ln_mfv[c] - ln_v[c] > ln_c + ln_t);
        let ln_s_meas = ln_measure(s_set, &ln_uvr);
        rep.push(Instance::new("inclusion", id.clone(), ln_t_meas, ln_s_meas).at_t(t));

        let ct = (ln_c + ln_t).exp();
        let rhs1 = log_sum_exp((0..grid.cell_count()).map(|c| psi_e.ln_eval(inp.f.value(c) / ct) + ln_uvr[c]));
        rep.push(Instance::new("corollary1", id.clone(), ln_t_meas, rhs1).at_t(t));

        let lhs3 = ln_measure((0..grid.cell_count()).filter(|&c| ln_q3[c] > ln_t), &ln_uvr);
        let scale = (ln_c2 - ln_t).exp();
        let rhs3 = log_sum_exp((0..grid.cell_count()).map(|c| eta_phi.ln_eval(scale * inp.f.value(c)) + ln_uvr[c]));
        rep.push(Instance::new("corollary3", id, lhs3, rhs3).at_t(t));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(inp.seed);
    let mv = &sq.m_v;
    for i in 0..inp.contraction_draws {
        let sparse = rng.gen_bool(0.5);
        let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
        let vals: Vec<f64> = (0..grid.cell_count())
            .map(|_| if sparse && rng.gen_bool(0.8) { 0.0 } else { scale * rng.gen::<f64>() })
            .collect();
        let g = GridFunction::new(grid, vals)?;
        let m = m_phi_dyadic(&g.mul(inp.v)?, inp.phi)?;
        let sup_t = (0..grid.cell_count())
            .map(|c| m.output.value(c) / mv.output.value(c))
            .fold(0.0, f64::max);
        rep.push(Instance::new("t_contraction", format!("f{i}"), sup_t.ln(), g.max_value().ln()));
    }
    Ok(rep.finalize())
}
