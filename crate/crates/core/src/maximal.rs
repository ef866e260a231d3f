//! Dyadic Orlicz maximal operators.
//!
//! Each cube's Luxemburg norm is computed once ([`CubeNorms`]); the maximal
//! function is then a single root-to-leaf sweep per cell over its `L + 1`
//! dyadic ancestors. On ties the coarsest cube wins.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{parameter, Result};
use crate::grid::{DyadicCube, DyadicGrid, GridFunction};
use crate::orlicz::{CubeSample, LuxemburgQuery};
use crate::young::YoungFunction;

/// `ln ‖f‖_{Φ,Q}` for every dyadic cube, indexed by level then cube index.
#[derive(Debug, Clone)]
pub struct CubeNorms {
    grid: DyadicGrid,
    ln_norms: Vec<Vec<f64>>,
}

impl CubeNorms {
    pub fn compute(f: &GridFunction, phi: &YoungFunction) -> Result<Self> {
        let grid = f.grid();
        let ln_norms = (0..=grid.max_level())
            .map(|j| {
                (0..grid.cube_count(j))
                    .into_par_iter()
                    .map(|i| {
                        let q = LuxemburgQuery::lebesgue(f, grid.cube_at(j, i), phi);
                        CubeSample::new(&q)?.ln_norm(phi)
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, ln_norms })
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    /// Norms of `c·f`, `c = e^{ln_c}`, by homogeneity.
    pub fn scaled(&self, ln_c: f64) -> Self {
        let ln_norms = self.ln_norms.iter().map(|l| l.iter().map(|x| x + ln_c).collect()).collect();
        Self { grid: self.grid, ln_norms }
    }

    pub fn ln_norm(&self, q: &DyadicCube) -> f64 {
        self.ln_norms[q.level as usize][self.grid.index_of(q)]
    }

    pub fn norm(&self, q: &DyadicCube) -> f64 {
        self.ln_norm(q).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "operator", rename_all = "snake_case")]
pub enum Operator {
    /// `M_{Φ,𝒟}`.
    Orlicz,
    /// `M_{γ,Φ}` over dyadic cubes.
    Fractional { gamma: f64 },
}

#[derive(Debug, Clone)]
pub struct MaximalResult {
    pub output: GridFunction,
    /// Cube attaining the maximum at each cell.
    pub argmax: Vec<DyadicCube>,
    pub operator: Operator,
}

/// `|Q|^{γ/n} = 2^{−jγ}` for a level-`j` cube.
pub fn fractional_scale(level: u32, gamma: f64) -> f64 {
    (-(level as f64) * gamma * std::f64::consts::LN_2).exp()
}

fn sweep(norms: &CubeNorms, value: impl Fn(&DyadicCube, f64) -> f64, operator: Operator) -> Result<MaximalResult> {
    let grid = norms.grid;
    let mut out = Vec::with_capacity(grid.cell_count());
    let mut argmax = Vec::with_capacity(grid.cell_count());
    for cell in 0..grid.cell_count() {
        let mut best = f64::NEG_INFINITY;
        let mut arg = grid.root();
        for j in 0..=grid.max_level() {
            let q = grid.ancestor_of_cell(cell, j);
            let v = value(&q, norms.norm(&q));
            if v > best {
                best = v;
                arg = q;
            }
        }
        out.push(best);
        argmax.push(arg);
    }
    Ok(MaximalResult { output: GridFunction::new(grid, out)?, argmax, operator })
}

/// `M_{Φ,𝒟} f` from precomputed cube norms.
pub fn m_phi_from_norms(norms: &CubeNorms) -> Result<MaximalResult> {
    sweep(norms, |_, n| n, Operator::Orlicz)
}

/// `M_{Φ,𝒟} f(x) = max_{Q ∋ x} ‖f‖_{Φ,Q}`.
pub fn m_phi_dyadic(f: &GridFunction, phi: &YoungFunction) -> Result<MaximalResult> {
    m_phi_from_norms(&CubeNorms::compute(f, phi)?)
}

pub fn m_gamma_from_norms(norms: &CubeNorms, gamma: f64) -> Result<MaximalResult> {
    let n = norms.grid.dim() as f64;
    if !(gamma > 0.0 && gamma < n) {
        return Err(parameter(format!("gamma must lie in (0, {n}), got {gamma}")));
    }
    sweep(norms, |q, v| fractional_scale(q.level, gamma) * v, Operator::Fractional { gamma })
}

/// `M_{γ,Φ} f(x) = max_{Q ∋ x} |Q|^{γ/n} ‖f‖_{Φ,Q}`.
pub fn m_gamma_phi(f: &GridFunction, phi: &YoungFunction, gamma: f64) -> Result<MaximalResult> {
    let n = f.grid().dim() as f64;
    if !(gamma > 0.0 && gamma < n) {
        return Err(parameter(format!("gamma must lie in (0, {n}), got {gamma}")));
    }
    m_gamma_from_norms(&CubeNorms::compute(f, phi)?, gamma)
}

#[derive(Debug, Clone)]
pub struct SawyerQuotients {
    /// `S_Φ f = M_Φ(fv)/v`.
    pub s: GridFunction,
    /// `𝒯_Φ f = M_Φ(fv)/M_Φ v`.
    pub t: GridFunction,
    pub m_fv: MaximalResult,
    pub m_v: MaximalResult,
}

pub fn sawyer_quotients(f: &GridFunction, v: &GridFunction, phi: &YoungFunction) -> Result<SawyerQuotients> {
    if let Some(i) = v.values().iter().position(|&x| !(x > 0.0)) {
        return Err(crate::error::domain(format!("v vanishes on cell {i}")));
    }
    let m_fv = m_phi_dyadic(&f.mul(v)?, phi)?;
    let m_v = m_phi_dyadic(v, phi)?;
    let s = m_fv.output.zip_with(v, |a, b| a / b)?;
    let t = m_fv.output.zip_with(&m_v.output, |a, b| a / b)?;
    Ok(SawyerQuotients { s, t, m_fv, m_v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CellSet;
    use crate::orlicz::luxemburg_norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn half_indicator(level: u32) -> GridFunction {
        let grid = DyadicGrid::new(1, level).unwrap();
        let half = grid.cell_count() / 2;
        GridFunction::indicator(&CellSet::from_fn(grid, |c| c < half))
    }

    #[test]
    fn linear_operator_on_half_indicator() {
        let f = half_indicator(3);
        let phi = YoungFunction::canonical(1.0, 0.0).unwrap();
        let m = m_phi_dyadic(&f, &phi).unwrap();
        for c in 0..8 {
            let expect = if c < 4 { 1.0 } else { 0.5 };
            assert!((m.output.value(c) - expect).abs() < 1e-14);
        }
        assert_eq!(m.argmax[5], DyadicCube::root(1));
        assert!(m.argmax[0].level >= 1);
    }

    #[test]
    fn square_operator_on_half_indicator() {
        let f = half_indicator(4);
        let phi = YoungFunction::canonical(2.0, 0.0).unwrap();
        let m = m_phi_dyadic(&f, &phi).unwrap();
        assert!((m.output.value(0) - 1.0).abs() < 1e-14);
        assert!((m.output.value(15) - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn constant_input_is_fixed() {
        let grid = DyadicGrid::new(2, 3).unwrap();
        let f = GridFunction::constant(grid, 2.5).unwrap();
        let phi = YoungFunction::canonical(1.5, 1.0).unwrap();
        let m = m_phi_dyadic(&f, &phi).unwrap();
        assert!(m.output.values().iter().all(|&x| (x - 2.5).abs() < 1e-12));
        let one = GridFunction::constant(grid, 1.0).unwrap();
        let g = m_gamma_phi(&one, &phi, 0.7).unwrap();
        assert!(g.output.values().iter().all(|&x| (x - 1.0).abs() < 1e-12));
        assert!(g.argmax.iter().all(|q| q.level == 0));
    }

    #[test]
    fn gamma_out_of_range_rejected() {
        let f = half_indicator(2);
        let phi = YoungFunction::canonical(1.0, 0.0).unwrap();
        assert!(m_gamma_phi(&f, &phi, 0.0).is_err());
        assert!(m_gamma_phi(&f, &phi, 1.0).is_err());
    }

    #[test]
    fn power_case_matches_linear_fractional_of_power() {
        // δ = 0, Φ(t) = t^r: M_{γ,Φ} f = (M_{γr, t}(f^r))^{1/r}
        let grid = DyadicGrid::new(1, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let vals = (0..grid.cell_count()).map(|_| rng.gen_range(0.0..4.0)).collect();
        let f = GridFunction::new(grid, vals).unwrap();
        let (r, gamma) = (2.0, 0.3);
        let lhs = m_gamma_phi(&f, &YoungFunction::canonical(r, 0.0).unwrap(), gamma).unwrap();
        let rhs = m_gamma_phi(&f.powf(r).unwrap(), &YoungFunction::canonical(1.0, 0.0).unwrap(), gamma * r).unwrap();
        for c in 0..grid.cell_count() {
            let b = rhs.output.value(c).powf(1.0 / r);
            assert!((lhs.output.value(c) - b).abs() <= 1e-10 * b);
        }
    }

    #[test]
    fn sawyer_quotients_of_unit_f() {
        let grid = DyadicGrid::new(1, 4).unwrap();
        let v = GridFunction::from_fn(grid, |c| 1.0 + c as f64).unwrap();
        let f = GridFunction::constant(grid, 1.0).unwrap();
        let phi = YoungFunction::canonical(1.0, 1.0).unwrap();
        let sq = sawyer_quotients(&f, &v, &phi).unwrap();
        assert!(sq.t.values().iter().all(|&x| x == 1.0));
        assert!(sq.s.values().iter().all(|&x| x >= 1.0 - 1e-12));
    }

    #[test]
    fn norms_match_direct_calls() {
        let grid = DyadicGrid::new(2, 2).unwrap();
        let f = GridFunction::from_fn(grid, |c| (c % 3) as f64).unwrap();
        let phi = YoungFunction::canonical(1.0, 2.0).unwrap();
        let norms = CubeNorms::compute(&f, &phi).unwrap();
        for q in grid.all_cubes() {
            let direct = luxemburg_norm(&LuxemburgQuery::lebesgue(&f, q, &phi)).unwrap();
            assert_eq!(norms.norm(&q).to_bits(), direct.to_bits());
        }
    }
}
