//! Calderón–Zygmund decomposition at levels `a^k`, the `Λ`/`Γ` families,
//! the secondary decomposition of `v^r`, and principal cubes.
//!
//! All threshold tests on Luxemburg norms are done in log space against
//! `k·ln a`, the same expression used for `Ω_k` and `E_k`, so the cube
//! families and the cell sets agree exactly.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{parameter, Result};
use crate::grid::{CellSet, DyadicCube, DyadicGrid, GridFunction, LevelSums};
use crate::maximal::CubeNorms;
use crate::young::YoungFunction;

/// Relative float slack allowed on the upper sandwich bound, which goes
/// through two independent bisections.
pub const SANDWICH_SLACK: f64 = 1e-9;

/// `2^{n+1}`, the smallest power of two above `2^n`.
pub fn default_a(n: u8) -> f64 {
    2f64.powi(n as i32 + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondaryCube {
    pub cube: DyadicCube,
    pub avg_vr: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CzCube {
    pub cube: DyadicCube,
    pub norm: f64,
    pub ln_norm: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// `ℓ ≥ 0` for `Λ_{ℓ,k}`, `-1` for `Λ_{−1,k}`; `None` before classification.
    pub ell: Option<i32>,
    pub avg_vr: Option<f64>,
    /// Member of `Γ_{ℓ,k}`: meets `{a^k < v ≤ a^{k+1}}` in at least one cell.
    pub gamma: bool,
    pub secondary: Vec<SecondaryCube>,
    /// The secondary search found no crossing subcube.
    pub secondary_empty: bool,
    pub principal_generation: Option<u32>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CzLevel {
    pub k: i32,
    /// `‖g‖` over the whole grid already exceeds `a^k`.
    pub skipped: bool,
    pub cubes: Vec<CzCube>,
    #[serde(skip)]
    pub omega: CellSet,
    #[serde(skip)]
    pub e_k: CellSet,
    pub omega_measure: f64,
    pub e_k_cells: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CzDecomposition {
    pub dim: u8,
    pub max_level: u32,
    pub a: f64,
    pub k_min: i32,
    pub k_max: i32,
    pub levels: Vec<CzLevel>,
    /// `r` used by [`classify`], once run.
    pub r: Option<f64>,
    #[serde(skip)]
    ln_mg: Vec<f64>,
}

impl CzDecomposition {
    pub fn grid(&self) -> DyadicGrid {
        DyadicGrid::new(self.dim, self.max_level).expect("grid was valid at construction")
    }

    pub fn level(&self, k: i32) -> Option<&CzLevel> {
        self.levels.iter().find(|l| l.k == k)
    }

    /// `ln M_{Φ,𝒟} g` per cell.
    pub fn ln_maximal(&self) -> &[f64] {
        &self.ln_mg
    }

    pub fn cubes(&self) -> impl Iterator<Item = (i32, &CzCube)> {
        self.levels.iter().flat_map(|l| l.cubes.iter().map(move |c| (l.k, c)))
    }

    /// Count of sandwich failures over primary and secondary cubes.
    pub fn sandwich_violations(&self) -> usize {
        self.cubes()
            .map(|(_, c)| {
                usize::from(!(c.lower_ok && c.upper_ok))
                    + c.secondary.iter().filter(|s| !(s.lower_ok && s.upper_ok)).count()
            })
            .sum()
    }
}

/// Range of `k` to decompose; `None` picks it from the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CzParams {
    pub a: f64,
    pub k_range: Option<(i32, i32)>,
}

impl CzParams {
    pub fn new(n: u8) -> Self {
        Self { a: default_a(n), k_range: None }
    }
}

fn ln_maximal(norms: &CubeNorms) -> Vec<f64> {
    let grid = norms.grid();
    (0..grid.cell_count())
        .map(|c| {
            (0..=grid.max_level())
                .map(|j| norms.ln_norm(&grid.ancestor_of_cell(c, j)))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Decomposes `g` given its cube norms.
pub fn decompose_norms(norms: &CubeNorms, params: CzParams) -> Result<CzDecomposition> {
    let grid = norms.grid();
    let n = grid.dim();
    let a = params.a;
    if !(a > 2f64.powi(n as i32)) || !a.is_finite() {
        return Err(parameter(format!("a must exceed 2^{n}, got {a}")));
    }
    let ln_a = a.ln();
    let ln_mg = ln_maximal(norms);
    let (k_min, k_max) = match params.k_range {
        Some((lo, hi)) if lo <= hi => (lo, hi),
        Some((lo, hi)) => return Err(parameter(format!("empty k range [{lo}, {hi}]"))),
        None => {
            let top = ln_mg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let bottom = ln_mg.iter().copied().filter(|x| x.is_finite()).fold(f64::INFINITY, f64::min);
            if !top.is_finite() {
                (0, -1)
            } else {
                ((bottom / ln_a).floor() as i32 - 1, (top / ln_a).ceil() as i32)
            }
        }
    };
    let root = grid.root();
    let mut levels = Vec::new();
    for k in k_min..=k_max {
        let thr = k as f64 * ln_a;
        let upper = thr + n as f64 * std::f64::consts::LN_2 + SANDWICH_SLACK.ln_1p();
        let mut level = CzLevel {
            k,
            skipped: false,
            cubes: Vec::new(),
            omega: CellSet::empty(grid),
            e_k: CellSet::empty(grid),
            omega_measure: 0.0,
            e_k_cells: 0,
        };
        if norms.ln_norm(&root) > thr {
            level.skipped = true;
            level.omega = CellSet::full(grid);
            level.omega_measure = 1.0;
            levels.push(level);
            continue;
        }
        let mut stack = vec![root];
        while let Some(q) = stack.pop() {
            let ln_norm = norms.ln_norm(&q);
            if ln_norm > thr {
                level.cubes.push(CzCube {
                    cube: q,
                    norm: ln_norm.exp(),
                    ln_norm,
                    lower_ok: true,
                    upper_ok: ln_norm <= upper,
                    ell: None,
                    avg_vr: None,
                    gamma: false,
                    secondary: Vec::new(),
                    secondary_empty: false,
                    principal_generation: None,
                });
            } else if q.level < grid.max_level() {
                stack.extend(q.children().into_iter().rev());
            }
        }
        for c in &level.cubes {
            level.omega.union_with(&CellSet::from_cube(grid, &c.cube));
        }
        level.omega_measure = level.omega.measure();
        levels.push(level);
    }
    Ok(CzDecomposition { dim: n, max_level: grid.max_level(), a, k_min, k_max, levels, r: None, ln_mg })
}

/// Maximal dyadic cubes with `‖g‖_{Φ,Q} > a^k` for each `k` in range.
pub fn decompose(g: &GridFunction, phi: &YoungFunction, params: CzParams) -> Result<CzDecomposition> {
    decompose_norms(&CubeNorms::compute(g, phi)?, params)
}

/// Assigns `ℓ`, `Γ` membership and `E_k`.
pub fn classify(d: &mut CzDecomposition, v: &GridFunction, r: f64) -> Result<()> {
    let grid = d.grid();
    if v.grid() != grid {
        return Err(crate::error::domain("v lives on a different grid"));
    }
    if !(r >= 1.0) {
        return Err(parameter(format!("r must be >= 1, got {r}")));
    }
    let ln_a = d.a.ln();
    let vr = LevelSums::new(&v.powf(r)?);
    let ln_v: Vec<f64> = v.values().iter().map(|x| x.ln()).collect();
    for level in &mut d.levels {
        let k = level.k;
        let lo = k as f64 * ln_a;
        let hi = (k + 1) as f64 * ln_a;
        let in_band = |c: usize| ln_v[c] > lo && ln_v[c] <= hi;
        for cz in &mut level.cubes {
            let avg = vr.average(&cz.cube);
            let la = avg.ln();
            let ell = if la < k as f64 * r * ln_a {
                -1
            } else {
                let mut l = (la / (r * ln_a) - k as f64).floor() as i32;
                while l > 0 && ((k + l) as f64) * r * ln_a > la {
                    l -= 1;
                }
                while ((k + l + 1) as f64) * r * ln_a <= la {
                    l += 1;
                }
                l.max(0)
            };
            cz.ell = Some(ell);
            cz.avg_vr = Some(avg);
            cz.gamma = grid.cells(&cz.cube).into_iter().any(in_band);
        }
        level.e_k = CellSet::from_fn(grid, |c| d.ln_mg[c] > ln_v[c] && in_band(c));
        level.e_k_cells = level.e_k.len();
    }
    d.r = Some(r);
    Ok(())
}

/// Within each `Λ_{−1,k}` cube, the maximal dyadic subcubes with
/// `avg v^r > a^{kr}`.
pub fn secondary_decompose(d: &mut CzDecomposition, v: &GridFunction, r: f64) -> Result<()> {
    let grid = d.grid();
    let vr = LevelSums::new(&v.powf(r)?);
    let spread = 2f64.powi(grid.dim() as i32);
    for level in &mut d.levels {
        let thr = d.a.powf(level.k as f64 * r);
        for cz in level.cubes.iter_mut().filter(|c| c.ell == Some(-1)) {
            let mut found = Vec::new();
            let mut stack = vec![cz.cube];
            while let Some(q) = stack.pop() {
                let avg = vr.average(&q);
                if avg > thr {
                    found.push(SecondaryCube { cube: q, avg_vr: avg, lower_ok: true, upper_ok: avg <= spread * thr });
                } else if q.level < grid.max_level() {
                    stack.extend(q.children().into_iter().rev());
                }
            }
            cz.secondary_empty = found.is_empty();
            cz.secondary = found;
        }
    }
    Ok(())
}

/// A member of a cube family, tagged with the `k` of its decomposition level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyMember {
    pub cube: DyadicCube,
    pub k: i32,
}

/// `Δ_ℓ = ∪_k Γ_{ℓ,k}`.
pub fn family_ell(d: &CzDecomposition, ell: i32) -> Vec<FamilyMember> {
    d.cubes()
        .filter(|(_, c)| c.ell == Some(ell) && c.gamma)
        .map(|(k, c)| FamilyMember { cube: c.cube, k })
        .collect()
}

/// `Δ_{−1}`: secondary cubes of the `Γ_{−1,k}` cubes.
pub fn family_minus_one(d: &CzDecomposition) -> Vec<FamilyMember> {
    d.cubes()
        .filter(|(_, c)| c.ell == Some(-1) && c.gamma)
        .flat_map(|(k, c)| c.secondary.iter().map(move |s| FamilyMember { cube: s.cube, k }))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PrincipalMode {
    /// Promote when `avg_Q u > 2 avg_P u`.
    Ell,
    /// Promote when `avg_Q u > a^{(k−t)βr} avg_P u`, `k` and `t` the levels of
    /// `Q` and of the principal cube `P`.
    MinusOne { beta: f64, a: f64, r: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct PrincipalCubes {
    pub mode: PrincipalMode,
    pub members: Vec<FamilyMember>,
    /// Generations `P_0, P_1, …` as indices into `members`.
    pub generations: Vec<Vec<usize>>,
    /// `𝒜`: member index to the index of its smallest containing principal cube.
    pub assignment: Vec<usize>,
}

impl PrincipalCubes {
    pub fn principal(&self) -> impl Iterator<Item = &FamilyMember> {
        self.generations.iter().flatten().map(|&i| &self.members[i])
    }

    pub fn generation_of(&self, member: usize) -> Option<u32> {
        self.generations.iter().position(|g| g.contains(&member)).map(|g| g as u32)
    }
}

/// Nearest strict family ancestor of each member, by walking up the grid.
fn family_forest(grid: DyadicGrid, members: &[FamilyMember]) -> (Vec<Option<usize>>, Vec<Vec<usize>>) {
    let key = |q: &DyadicCube| (q.level, grid.index_of(q));
    let mut index: HashMap<(u32, usize), usize> = HashMap::new();
    for (i, m) in members.iter().enumerate() {
        index.entry(key(&m.cube)).or_insert(i);
    }
    let mut parent = vec![None; members.len()];
    let mut children = vec![Vec::new(); members.len()];
    for (i, m) in members.iter().enumerate() {
        let mut q = m.cube;
        while q.level > 0 {
            q = q.parent().expect("level > 0");
            if let Some(&p) = index.get(&key(&q)) {
                parent[i] = Some(p);
                children[p].push(i);
                break;
            }
        }
    }
    (parent, children)
}

/// Principal cubes of a family with respect to `u`.
pub fn build_principal(members: Vec<FamilyMember>, u: &GridFunction, mode: PrincipalMode) -> Result<PrincipalCubes> {
    let grid = u.grid();
    for m in &members {
        grid.check(&m.cube)?;
    }
    let sums = LevelSums::new(u);
    let avg: Vec<f64> = members.iter().map(|m| sums.average(&m.cube)).collect();
    let (parent, children) = family_forest(grid, &members);
    let promotes = |q: usize, p: usize| match mode {
        PrincipalMode::Ell => avg[q] > 2.0 * avg[p],
        PrincipalMode::MinusOne { beta, a, r } => {
            avg[q] > a.powf((members[q].k - members[p].k) as f64 * beta * r) * avg[p]
        }
    };
    let mut assignment = vec![usize::MAX; members.len()];
    let roots: Vec<usize> = (0..members.len()).filter(|&i| parent[i].is_none()).collect();
    let mut generations = vec![roots.clone()];
    for &r in &roots {
        assignment[r] = r;
    }
    let mut current = roots;
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            let mut stack: Vec<usize> = children[p].iter().rev().copied().collect();
            while let Some(q) = stack.pop() {
                if promotes(q, p) {
                    assignment[q] = q;
                    next.push(q);
                } else {
                    assignment[q] = p;
                    stack.extend(children[q].iter().rev().copied());
                }
            }
        }
        if !next.is_empty() {
            generations.push(next.clone());
        }
        current = next;
    }
    Ok(PrincipalCubes { mode, members, generations, assignment })
}

/// Records principal generations on the decomposition's cubes.
pub fn annotate_principal(d: &mut CzDecomposition, p: &PrincipalCubes) {
    let mut gen: HashMap<(i32, DyadicCube), u32> = HashMap::new();
    for (g, ids) in p.generations.iter().enumerate() {
        for &i in ids {
            gen.insert((p.members[i].k, p.members[i].cube), g as u32);
        }
    }
    for level in &mut d.levels {
        for c in &mut level.cubes {
            if let Some(&g) = gen.get(&(level.k, c.cube)) {
                c.principal_generation = Some(g);
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PrincipalSum {
    #[serde(skip)]
    pub h: GridFunction,
    /// Smallest `C` with `h ≤ C u` cell-wise.
    pub c: f64,
    pub witness_cell: usize,
}

/// `h = Σ_{P} (u(P)/|P|) χ_P`.
pub fn principal_sum(p: &PrincipalCubes, u: &GridFunction) -> Result<PrincipalSum> {
    let grid = u.grid();
    let sums = LevelSums::new(u);
    let mut h = vec![0.0; grid.cell_count()];
    for m in p.principal() {
        let a = sums.average(&m.cube);
        for c in grid.cells(&m.cube) {
            h[c] += a;
        }
    }
    let h = GridFunction::new(grid, h)?;
    let (witness_cell, c) = h
        .values()
        .iter()
        .zip(u.values())
        .map(|(a, b)| a / b)
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, x)| if x > best.1 { (i, x) } else { best });
    Ok(PrincipalSum { h, c, witness_cell })
}
