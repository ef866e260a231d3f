//! Weight constructors and dyadic Muckenhoupt / reverse-Hölder constants.
//!
//! Every constant is an exact maximum over the finite dyadic family of the
//! grid, computed from per-level sum pyramids. Ties keep the first cube in
//! coarse-to-fine, lexicographic order.

use std::fs::File;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{domain, parameter, Error, Result};
use crate::grid::{DyadicCube, DyadicGrid, GridFunction, LevelSums};

/// A weight constant together with the cube attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constant {
    pub value: f64,
    pub witness: DyadicCube,
}

fn require_positive(w: &GridFunction) -> Result<()> {
    match w.values().iter().position(|&x| !(x > 0.0)) {
        Some(i) => Err(domain(format!("weight vanishes on cell {i}"))),
        None => Ok(()),
    }
}

fn max_over_cubes(grid: DyadicGrid, f: impl Fn(&DyadicCube) -> f64) -> Constant {
    let mut best = Constant { value: f64::NEG_INFINITY, witness: grid.root() };
    for q in grid.all_cubes() {
        let v = f(&q);
        if v > best.value {
            best = Constant { value: v, witness: q };
        }
    }
    best
}

/// Per-level minima, built bottom-up like [`LevelSums`].
struct LevelMins {
    grid: DyadicGrid,
    levels: Vec<Vec<f64>>,
}

impl LevelMins {
    fn new(w: &GridFunction) -> Self {
        let grid = w.grid();
        let l = grid.max_level() as usize;
        let mut levels = vec![Vec::new(); l + 1];
        levels[l] = w.values().to_vec();
        for j in (0..l).rev() {
            let finer = &levels[j + 1];
            levels[j] = grid
                .cubes_at(j as u32)
                .map(|q| {
                    q.children()
                        .iter()
                        .map(|c| finer[grid.index_of(c)])
                        .fold(f64::INFINITY, f64::min)
                })
                .collect();
        }
        Self { grid, levels }
    }

    fn min(&self, q: &DyadicCube) -> f64 {
        self.levels[q.level as usize][self.grid.index_of(q)]
    }
}

/// `[w]_{A∞} = sup_Q (avg_Q w) exp(avg_Q log w^{-1})`.
pub fn a_infty_constant(w: &GridFunction) -> Result<Constant> {
    require_positive(w)?;
    let grid = w.grid();
    let sums = LevelSums::new(w);
    let logs = LevelSums::from_values(grid, w.values().iter().map(|x| x.ln()).collect());
    Ok(max_over_cubes(grid, |q| (sums.average(q).ln() - logs.average(q)).exp()))
}

/// `[w]_{A_q} = sup_Q (avg_Q w)(avg_Q w^{1-q'})^{q-1}`.
pub fn a_q_constant(w: &GridFunction, q: f64) -> Result<Constant> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(parameter(format!("A_q needs q > 1, got {q}")));
    }
    require_positive(w)?;
    let grid = w.grid();
    let qp = q / (q - 1.0);
    let sums = LevelSums::new(w);
    let dual = LevelSums::from_values(grid, w.values().iter().map(|x| x.powf(1.0 - qp)).collect());
    Ok(max_over_cubes(grid, |c| sums.average(c) * dual.average(c).powf(q - 1.0)))
}

/// `[w]_{A_1} = sup_Q (avg_Q w) / min_Q w`.
pub fn a1_constant(w: &GridFunction) -> Result<Constant> {
    require_positive(w)?;
    let sums = LevelSums::new(w);
    let mins = LevelMins::new(w);
    Ok(max_over_cubes(w.grid(), |q| sums.average(q) / mins.min(q)))
}

/// `[w]_{RH_s} = sup_Q (avg_Q w^s)^{1/s} / avg_Q w`.
pub fn rh_constant(w: &GridFunction, s: f64) -> Result<Constant> {
    if !(s > 1.0 && s.is_finite()) {
        return Err(parameter(format!("RH_s needs s > 1, got {s}")));
    }
    require_positive(w)?;
    let grid = w.grid();
    let sums = LevelSums::new(w);
    let powers = LevelSums::from_values(grid, w.values().iter().map(|x| x.powf(s)).collect());
    Ok(max_over_cubes(grid, |q| powers.average(q).powf(1.0 / s) / sums.average(q)))
}

/// `τ_n = 2^{11+n}`.
pub fn tau_n(n: u8) -> f64 {
    2f64.powi(11 + n as i32)
}

/// `r_w = 1 + 1/(τ_n [w]_{A∞})`.
pub fn r_w(n: u8, a_infty: f64) -> f64 {
    1.0 + 1.0 / (tau_n(n) * a_infty)
}

/// `ε_w = 1/(1 + τ_n [w]_{A∞})`.
pub fn eps_w(n: u8, a_infty: f64) -> f64 {
    1.0 / (1.0 + tau_n(n) * a_infty)
}

/// Candidate exponents for `w ∈ A_q`, scanned in increasing order.
pub const Q_LADDER: [f64; 5] = [1.25, 1.5, 2.0, 4.0, 8.0];
/// Largest `[w]_{A_q}` accepted when certifying `q`.
pub const Q_CERTIFY_BOUND: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QCertificate {
    pub q: f64,
    pub constant: Constant,
    /// `false` when no ladder value met [`Q_CERTIFY_BOUND`]; `q` is then the
    /// last ladder value.
    pub certified: bool,
}

/// Smallest `q` on [`Q_LADDER`] with `[w]_{A_q} ≤ Q_CERTIFY_BOUND`.
pub fn certify_q(w: &GridFunction) -> Result<QCertificate> {
    let mut last = None;
    for &q in &Q_LADDER {
        let c = a_q_constant(w, q)?;
        if c.value <= Q_CERTIFY_BOUND {
            return Ok(QCertificate { q, constant: c, certified: true });
        }
        last = Some(QCertificate { q, constant: c, certified: false });
    }
    Ok(last.expect("non-empty ladder"))
}

/// Candidate values for `ε₁`, scanned from the largest down.
pub const EPS1_LADDER: [f64; 7] = [1.0, 0.5, 0.25, 0.1, 0.05, 0.01, 0.001];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eps1Candidate {
    pub eps: f64,
    /// `[v^r]_{A∞}`.
    pub base: f64,
    /// `[v^{r+ε}]_{A∞}`.
    pub raised: f64,
    pub certified: bool,
}

/// Largest `ε` on [`EPS1_LADDER`] with `[v^{r+ε}]_{A∞} ≤ 2 [v^r]_{A∞}`.
pub fn eps1_candidate(v: &GridFunction, r: f64) -> Result<Eps1Candidate> {
    let base = a_infty_constant(&v.powf(r)?)?.value;
    let mut last = None;
    for &eps in &EPS1_LADDER {
        let raised = a_infty_constant(&v.powf(r + eps)?)?.value;
        if raised <= 2.0 * base {
            return Ok(Eps1Candidate { eps, base, raised, certified: true });
        }
        last = Some(Eps1Candidate { eps, base, raised, certified: false });
    }
    Ok(last.expect("non-empty ladder"))
}

/// A weight with its dyadic constants.
#[derive(Debug, Clone, Serialize)]
pub struct WeightProfile {
    #[serde(skip)]
    pub weight: GridFunction,
    pub a1: Constant,
    pub a_q: Vec<(f64, Constant)>,
    pub a_infty: Constant,
    pub rh: Vec<(f64, Constant)>,
    pub tau_n: f64,
    pub r_w: f64,
    pub eps_w: f64,
}

impl WeightProfile {
    pub fn new(weight: &GridFunction, qs: &[f64], ss: &[f64]) -> Result<Self> {
        let n = weight.grid().dim();
        let a_infty = a_infty_constant(weight)?;
        let a_q = qs.iter().map(|&q| Ok((q, a_q_constant(weight, q)?))).collect::<Result<_>>()?;
        let rh = ss.iter().map(|&s| Ok((s, rh_constant(weight, s)?))).collect::<Result<_>>()?;
        Ok(Self {
            weight: weight.clone(),
            a1: a1_constant(weight)?,
            a_q,
            a_infty,
            rh,
            tau_n: tau_n(n),
            r_w: r_w(n, a_infty.value),
            eps_w: eps_w(n, a_infty.value),
        })
    }
}

/// Weight description as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Constant {
        value: f64,
    },
    /// Piecewise constant on the level-`j` cubes, `values.len() = 2^{nj}`,
    /// in lexicographic cube order.
    Step {
        values: Vec<f64>,
    },
    /// `|x − x₀|^{−α}`, cell-averaged.
    Power {
        alpha: f64,
        #[serde(default)]
        center: Center,
    },
    Product {
        factors: Vec<WeightSpec>,
    },
    /// Cell-wise maximum of the parts.
    Max {
        parts: Vec<WeightSpec>,
    },
    /// `scale · w`.
    Scaled {
        scale: f64,
        weight: Box<WeightSpec>,
    },
    FromCsv {
        path: PathBuf,
    },
}

/// A point of `[0,1]^n`; a bare number is accepted in one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Center {
    Scalar(f64),
    Point(Vec<f64>),
}

impl Default for Center {
    fn default() -> Self {
        Center::Scalar(0.0)
    }
}

impl Center {
    fn coords(&self, dim: u8) -> Result<[f64; 2]> {
        match self {
            Center::Scalar(x) if dim == 1 => Ok([*x, 0.0]),
            Center::Scalar(x) => Ok([*x, *x]),
            Center::Point(p) if p.len() == dim as usize => Ok([p[0], p.get(1).copied().unwrap_or(0.0)]),
            Center::Point(p) => Err(parameter(format!("center has {} coordinates, grid has {dim}", p.len()))),
        }
    }
}

/// `∫_a^b |x − x₀|^{−α} dx`.
fn power_integral_1d(a: f64, b: f64, x0: f64, alpha: f64) -> f64 {
    let e = 1.0 - alpha;
    let anti = |x: f64| {
        let d = x - x0;
        d.signum() * d.abs().powf(e) / e
    };
    anti(b) - anti(a)
}

fn power_weight(grid: DyadicGrid, alpha: f64, center: &Center) -> Result<GridFunction> {
    let n = grid.dim() as f64;
    if !(alpha < n) || !alpha.is_finite() {
        return Err(parameter(format!("power weight needs alpha < {n}, got {alpha}")));
    }
    let x0 = center.coords(grid.dim())?;
    if alpha == 0.0 {
        return GridFunction::constant(grid, 1.0);
    }
    let h = grid.cell_measure().powf(1.0 / n);
    let values = (0..grid.cell_count())
        .map(|c| {
            if grid.dim() == 1 {
                let a = c as f64 * h;
                power_integral_1d(a, a + h, x0[0], alpha) / h
            } else {
                let p = grid.cell_center(c);
                let d = ((p[0] - x0[0]).powi(2) + (p[1] - x0[1]).powi(2)).sqrt();
                d.powf(-alpha)
            }
        })
        .collect::<Vec<_>>();
    if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(domain(format!("power weight is singular on cell {i}; move the center")));
    }
    GridFunction::new(grid, values)
}

/// Materializes a weight on `grid`. The result is strictly positive.
pub fn make_weight(spec: &WeightSpec, grid: DyadicGrid) -> Result<GridFunction> {
    let w = match spec {
        WeightSpec::Constant { value } => GridFunction::constant(grid, *value)?,
        WeightSpec::Step { values } => {
            let per = 1usize << grid.dim();
            let mut level = 0u32;
            let mut count = 1usize;
            while count < values.len() && level < grid.max_level() {
                count *= per;
                level += 1;
            }
            if count != values.len() {
                return Err(parameter(format!(
                    "step weight needs 2^(n j) values with j <= {}, got {}",
                    grid.max_level(),
                    values.len()
                )));
            }
            GridFunction::from_fn(grid, |c| values[grid.index_of(&grid.ancestor_of_cell(c, level))])?
        }
        WeightSpec::Power { alpha, center } => power_weight(grid, *alpha, center)?,
        WeightSpec::Product { factors } => {
            let mut acc = GridFunction::constant(grid, 1.0)?;
            for f in factors {
                acc = acc.mul(&make_weight(f, grid)?)?;
            }
            acc
        }
        WeightSpec::Max { parts } => {
            if parts.is_empty() {
                return Err(parameter("max weight needs at least one part"));
            }
            let mut acc = make_weight(&parts[0], grid)?;
            for p in &parts[1..] {
                acc = acc.zip_with(&make_weight(p, grid)?, f64::max)?;
            }
            acc
        }
        WeightSpec::Scaled { scale, weight } => make_weight(weight, grid)?.scale(*scale)?,
        WeightSpec::FromCsv { path } => {
            let file = File::open(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
            GridFunction::read_csv(grid, file)?
        }
    };
    require_positive(&w)?;
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn step12() -> GridFunction {
        let grid = DyadicGrid::new(1, 1).unwrap();
        GridFunction::new(grid, vec![1.0, 2.0]).unwrap()
    }

    fn random_weight(grid: DyadicGrid, seed: u64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals = (0..grid.cell_count()).map(|_| rng.gen_range(0.05..20.0)).collect();
        GridFunction::new(grid, vals).unwrap()
    }

    /// Direct evaluation over explicit cell lists.
    fn oracle(w: &GridFunction, f: impl Fn(&[f64]) -> f64) -> f64 {
        let grid = w.grid();
        grid.all_cubes()
            .map(|q| {
                let vals: Vec<f64> = grid.cells(&q).into_iter().map(|c| w.value(c)).collect();
                f(&vals)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn mean(xs: &[f64]) -> f64 {
        xs.iter().sum::<f64>() / xs.len() as f64
    }

    #[test]
    fn constants_of_constant_weight_are_one() {
        let grid = DyadicGrid::new(2, 3).unwrap();
        let w = GridFunction::constant(grid, 3.7).unwrap();
        assert_eq!(a_infty_constant(&w).unwrap().value, 1.0);
        assert_eq!(a1_constant(&w).unwrap().value, 1.0);
        for q in [1.25, 2.0, 8.0] {
            assert!((a_q_constant(&w, q).unwrap().value - 1.0).abs() < 1e-14);
        }
        assert!((rh_constant(&w, 2.0).unwrap().value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn step_weight_by_hand() {
        let w = step12();
        let ainf = a_infty_constant(&w).unwrap();
        assert!((ainf.value - 1.5 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(ainf.witness, DyadicCube::root(1));
        assert_eq!(a1_constant(&w).unwrap().value, 1.5);
        assert!((rh_constant(&w, 2.0).unwrap().value - 2.5f64.sqrt() / 1.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        let grid = DyadicGrid::new(1, 2).unwrap();
        let w = GridFunction::new(grid, vec![1.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(matches!(a_infty_constant(&w), Err(Error::Domain(_))));
        assert!(matches!(a_q_constant(&step12(), 1.0), Err(Error::Parameter(_))));
        assert!(matches!(rh_constant(&step12(), 0.5), Err(Error::Parameter(_))));
    }

    #[test]
    fn constants_match_exhaustive_oracle() {
        for (dim, level) in [(1u8, 5u32), (2, 3)] {
            let grid = DyadicGrid::new(dim, level).unwrap();
            for seed in 0..10 {
                let w = random_weight(grid, seed);
                let ainf = oracle(&w, |x| mean(x) * (-mean(&x.iter().map(|v| v.ln()).collect::<Vec<_>>())).exp());
                assert!((a_infty_constant(&w).unwrap().value - ainf).abs() <= 1e-12 * ainf);
                let a1 = oracle(&w, |x| mean(x) / x.iter().copied().fold(f64::INFINITY, f64::min));
                assert!((a1_constant(&w).unwrap().value - a1).abs() <= 1e-12 * a1);
                let q = 3.0;
                let aq = oracle(&w, |x| {
                    mean(x) * mean(&x.iter().map(|v| v.powf(-0.5)).collect::<Vec<_>>()).powf(2.0)
                });
                assert!((a_q_constant(&w, q).unwrap().value - aq).abs() <= 1e-12 * aq);
                let rh = oracle(&w, |x| mean(&x.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt() / mean(x));
                assert!((rh_constant(&w, 2.0).unwrap().value - rh).abs() <= 1e-12 * rh);
            }
        }
    }

    #[test]
    fn power_weight_a_infty_matches_oracle() {
        let grid = DyadicGrid::new(1, 8).unwrap();
        let w = make_weight(&WeightSpec::Power { alpha: 0.5, center: Center::Scalar(0.0) }, grid).unwrap();
        let expect = oracle(&w, |x| mean(x) * (-mean(&x.iter().map(|v| v.ln()).collect::<Vec<_>>())).exp());
        let got = a_infty_constant(&w).unwrap().value;
        assert!((got - expect).abs() <= 1e-12 * expect);
        assert_eq!(grid.total_cubes(), 511);
    }

    #[test]
    fn tau_and_derived_exponents() {
        assert_eq!(tau_n(1), 4096.0);
        assert_eq!(tau_n(2), 8192.0);
        let r = r_w(1, 1.0);
        let e = eps_w(1, 1.0);
        assert!(r > 1.0 && e > 0.0 && e < 1.0);
        assert_eq!(e, 1.0 / 4097.0);
    }

    #[test]
    fn power_weight_cell_averages() {
        let grid = DyadicGrid::new(1, 6).unwrap();
        let w = make_weight(&WeightSpec::Power { alpha: 0.5, center: Center::Scalar(0.0) }, grid).unwrap();
        let h: f64 = 1.0 / 64.0;
        // ∫_0^h x^{-1/2} = 2√h
        assert!((w.value(0) - 2.0 * h.sqrt() / h).abs() < 1e-12 * w.value(0));
        // composite midpoint rule away from the singularity
        for c in [1usize, 7, 40, 63] {
            let a = c as f64 * h;
            let m = 20_000;
            let quad: f64 = (0..m).map(|i| (a + (i as f64 + 0.5) * h / m as f64).powf(-0.5)).sum::<f64>() / m as f64;
            assert!((w.value(c) - quad).abs() < 1e-7 * quad, "cell {c}");
        }
        let flat = make_weight(&WeightSpec::Power { alpha: 0.0, center: Center::Scalar(0.3) }, grid).unwrap();
        assert!(flat.values().iter().all(|&v| v == 1.0));
        assert!(make_weight(&WeightSpec::Power { alpha: 1.0, center: Center::Scalar(0.0) }, grid).is_err());
    }

    #[test]
    fn step_and_composite_weights() {
        let grid = DyadicGrid::new(1, 3).unwrap();
        let w = make_weight(&WeightSpec::Step { values: vec![1.0, 2.0] }, grid).unwrap();
        assert_eq!(w.values(), &[1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0]);
        assert!(make_weight(&WeightSpec::Step { values: vec![1.0, 2.0, 3.0] }, grid).is_err());
        let c = make_weight(&WeightSpec::Constant { value: 3.0 }, grid).unwrap();
        assert!(c.values().iter().all(|&v| v == 3.0));
        let p = make_weight(
            &WeightSpec::Product {
                factors: vec![WeightSpec::Constant { value: 3.0 }, WeightSpec::Step { values: vec![1.0, 2.0] }],
            },
            grid,
        )
        .unwrap();
        assert_eq!(p.value(7), 6.0);
        let m = make_weight(
            &WeightSpec::Max {
                parts: vec![WeightSpec::Constant { value: 1.5 }, WeightSpec::Step { values: vec![1.0, 2.0] }],
            },
            grid,
        )
        .unwrap();
        assert_eq!((m.value(0), m.value(7)), (1.5, 2.0));
        assert!(make_weight(&WeightSpec::Constant { value: 0.0 }, grid).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let s: WeightSpec = serde_json::from_str(r#"{"kind":"power","alpha":0.5,"center":0.0}"#).unwrap();
        assert_eq!(s, WeightSpec::Power { alpha: 0.5, center: Center::Scalar(0.0) });
        let back = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<WeightSpec>(&back).unwrap(), s);
    }

    #[test]
    fn certified_exponents() {
        let grid = DyadicGrid::new(1, 6).unwrap();
        let w = GridFunction::constant(grid, 2.0).unwrap();
        let q = certify_q(&w).unwrap();
        assert!(q.certified);
        assert_eq!(q.q, 1.25);
        let e = eps1_candidate(&w, 1.0).unwrap();
        assert_eq!(e.eps, 1.0);
        let p = make_weight(&WeightSpec::Power { alpha: 0.5, center: Center::Scalar(0.0) }, grid).unwrap();
        let e = eps1_candidate(&p, 1.0).unwrap();
        assert!(e.certified && e.raised <= 2.0 * e.base);
    }

    #[test]
    fn profile_fields_are_consistent() {
        let grid = DyadicGrid::new(1, 5).unwrap();
        let w = random_weight(grid, 4);
        let prof = WeightProfile::new(&w, &[2.0], &[2.0]).unwrap();
        assert!(prof.a1.value >= 1.0 && prof.a_infty.value >= 1.0);
        assert!(prof.a_q[0].1.value >= 1.0 && prof.rh[0].1.value >= 1.0);
        assert_eq!(prof.eps_w, 1.0 / (1.0 + 4096.0 * prof.a_infty.value));
    }

    proptest! {
        #[test]
        fn scale_invariance(seed in 0u64..500, c in 0.01f64..100.0) {
            let grid = DyadicGrid::new(1, 4).unwrap();
            let w = random_weight(grid, seed);
            let cw = w.scale(c).unwrap();
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b;
            prop_assert!(close(a_infty_constant(&cw).unwrap().value, a_infty_constant(&w).unwrap().value));
            prop_assert!(close(a1_constant(&cw).unwrap().value, a1_constant(&w).unwrap().value));
            prop_assert!(close(a_q_constant(&cw, 2.0).unwrap().value, a_q_constant(&w, 2.0).unwrap().value));
            prop_assert!(close(rh_constant(&cw, 1.5).unwrap().value, rh_constant(&w, 1.5).unwrap().value));
        }

        #[test]
        fn constants_at_least_one(seed in 0u64..500) {
            let grid = DyadicGrid::new(2, 2).unwrap();
            let w = random_weight(grid, seed);
            prop_assert!(a_infty_constant(&w).unwrap().value >= 1.0);
            prop_assert!(a1_constant(&w).unwrap().value >= 1.0);
            prop_assert!(a_q_constant(&w, 1.5).unwrap().value >= 1.0 - 1e-14);
            prop_assert!(rh_constant(&w, 3.0).unwrap().value >= 1.0 - 1e-14);
        }
    }
}
