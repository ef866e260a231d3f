//! Finite dyadic geometry over the unit cube `[0,1)^n`, `n ∈ {1, 2}`.
//!
//! Functions are piecewise constant on the finest cells, so every integral
//! below is a finite sum. Sums over a cube are always formed by folding the
//! children in lexicographic order, which makes
//! `integrate(Q) == Σ integrate(child)` hold bit for bit and lets the
//! [`LevelSums`] pyramid agree exactly with direct evaluation.
//!
//! Cell and cube indices are lexicographic by axis coordinate: in two
//! dimensions the cube with coordinates `(c0, c1)` at level `j` has index
//! `c0 * 2^j + c1`.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, parameter, Error, Result};

/// Largest supported finest level per dimension (keeps cell counts at 2^20).
pub const MAX_CELLS_LOG2: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicGrid {
    dim: u8,
    max_level: u32,
}

/// A dyadic cube `∏ [c_i 2^{-j}, (c_i + 1) 2^{-j})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube {
    pub level: u32,
    pub coords: [u32; 2],
    dim: u8,
}

impl DyadicCube {
    pub fn new(dim: u8, level: u32, coords: [u32; 2]) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(parameter(format!("dimension {dim} not in {{1,2}}")));
        }
        if level >= 32 {
            return Err(domain(format!("level {level} too deep")));
        }
        let side = 1u64 << level;
        for (axis, &c) in coords.iter().enumerate().take(dim as usize) {
            if u64::from(c) >= side {
                return Err(domain(format!(
                    "coordinate {c} on axis {axis} exceeds 2^{level}"
                )));
            }
        }
        if dim == 1 && coords[1] != 0 {
            return Err(domain("second coordinate must be 0 in dimension 1"));
        }
        Ok(Self { level, coords, dim })
    }

    pub fn root(dim: u8) -> Self {
        Self { level: 0, coords: [0, 0], dim }
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }

    pub fn side_length(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    /// Lebesgue measure `2^{-jn}`.
    pub fn measure(&self) -> f64 {
        (-((self.level * self.dim as u32) as f64)).exp2()
    }

    pub fn parent(&self) -> Result<Self> {
        if self.level == 0 {
            return Err(domain("the root cube has no parent"));
        }
        Ok(Self {
            level: self.level - 1,
            coords: [self.coords[0] >> 1, self.coords[1] >> 1],
            dim: self.dim,
        })
    }

    /// The `2^n` children in lexicographic order.
    pub fn children(&self) -> Vec<Self> {
        let level = self.level + 1;
        let [c0, c1] = self.coords;
        if self.dim == 1 {
            vec![
                Self { level, coords: [2 * c0, 0], dim: 1 },
                Self { level, coords: [2 * c0 + 1, 0], dim: 1 },
            ]
        } else {
            let mut out = Vec::with_capacity(4);
            for d0 in 0..2 {
                for d1 in 0..2 {
                    out.push(Self { level, coords: [2 * c0 + d0, 2 * c1 + d1], dim: 2 });
                }
            }
            out
        }
    }

    /// Every level-`level` cube inside `self`, in lexicographic order.
    pub fn descendants(&self, level: u32) -> Result<Vec<Self>> {
        if level < self.level {
            return Err(domain(format!(
                "level {level} is coarser than the cube level {}",
                self.level
            )));
        }
        let shift = level - self.level;
        let span = 1u32 << shift;
        let mut out = Vec::new();
        let base0 = self.coords[0] << shift;
        if self.dim == 1 {
            for i in 0..span {
                out.push(Self { level, coords: [base0 + i, 0], dim: 1 });
            }
        } else {
            let base1 = self.coords[1] << shift;
            for i in 0..span {
                for k in 0..span {
                    out.push(Self { level, coords: [base0 + i, base1 + k], dim: 2 });
                }
            }
        }
        Ok(out)
    }

    /// Whether `other ⊆ self`.
    pub fn contains(&self, other: &Self) -> bool {
        if other.level < self.level || other.dim != self.dim {
            return false;
        }
        let shift = other.level - self.level;
        (0..self.dim as usize).all(|a| other.coords[a] >> shift == self.coords[a])
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        !self.contains(other) && !other.contains(self)
    }

    /// The ancestor of `self` at a coarser `level`.
    pub fn ancestor(&self, level: u32) -> Result<Self> {
        if level > self.level {
            return Err(domain("ancestor level finer than the cube"));
        }
        let shift = self.level - level;
        Ok(Self {
            level,
            coords: [self.coords[0] >> shift, self.coords[1] >> shift],
            dim: self.dim,
        })
    }
}

impl fmt::Display for DyadicCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dim == 1 {
            write!(f, "{}/{}", self.level, self.coords[0])
        } else {
            write!(f, "{}/{}/{}", self.level, self.coords[0], self.coords[1])
        }
    }
}

impl FromStr for DyadicCube {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<u32> = s
            .split('/')
            .map(|p| p.trim().parse::<u32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("cube `{s}`: {e}")))?;
        match parts.as_slice() {
            [level, c0] => DyadicCube::new(1, *level, [*c0, 0]),
            [level, c0, c1] => DyadicCube::new(2, *level, [*c0, *c1]),
            _ => Err(Error::Format(format!("cube `{s}`: expected level/c0[/c1]"))),
        }
    }
}

impl Serialize for DyadicCube {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DyadicCube {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl DyadicGrid {
    pub fn new(dim: u8, max_level: u32) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(parameter(format!("dimension {dim} not in {{1,2}}")));
        }
        if max_level * dim as u32 > MAX_CELLS_LOG2 {
            return Err(parameter(format!(
                "2^({dim}*{max_level}) cells exceeds the supported 2^{MAX_CELLS_LOG2}"
            )));
        }
        Ok(Self { dim, max_level })
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    pub fn cell_count(&self) -> usize {
        1usize << (self.max_level * self.dim as u32)
    }

    pub fn cube_count(&self, level: u32) -> usize {
        1usize << (level * self.dim as u32)
    }

    /// Total number of dyadic cubes in levels `0..=L`.
    pub fn total_cubes(&self) -> usize {
        (0..=self.max_level).map(|j| self.cube_count(j)).sum()
    }

    pub fn cell_measure(&self) -> f64 {
        (-((self.max_level * self.dim as u32) as f64)).exp2()
    }

    pub fn root(&self) -> DyadicCube {
        DyadicCube::root(self.dim)
    }

    pub fn check(&self, cube: &DyadicCube) -> Result<()> {
        if cube.dim != self.dim {
            return Err(domain(format!(
                "cube {cube} has dimension {}, grid has {}",
                cube.dim, self.dim
            )));
        }
        if cube.level > self.max_level {
            return Err(domain(format!(
                "cube {cube} is finer than the grid level {}",
                self.max_level
            )));
        }
        Ok(())
    }

    /// Index of `cube` among the cubes of its level.
    pub fn index_of(&self, cube: &DyadicCube) -> usize {
        if self.dim == 1 {
            cube.coords[0] as usize
        } else {
            ((cube.coords[0] as usize) << cube.level) | cube.coords[1] as usize
        }
    }

    pub fn cube_at(&self, level: u32, index: usize) -> DyadicCube {
        if self.dim == 1 {
            DyadicCube { level, coords: [index as u32, 0], dim: 1 }
        } else {
            let mask = (1usize << level) - 1;
            DyadicCube {
                level,
                coords: [(index >> level) as u32, (index & mask) as u32],
                dim: 2,
            }
        }
    }

    pub fn cubes_at(&self, level: u32) -> impl Iterator<Item = DyadicCube> + '_ {
        (0..self.cube_count(level)).map(move |i| self.cube_at(level, i))
    }

    /// All cubes of levels `0..=L`, coarse to fine.
    pub fn all_cubes(&self) -> impl Iterator<Item = DyadicCube> + '_ {
        (0..=self.max_level).flat_map(move |j| self.cubes_at(j))
    }

    pub fn cell_cube(&self, cell: usize) -> DyadicCube {
        self.cube_at(self.max_level, cell)
    }

    /// The level-`level` cube containing `cell`.
    pub fn ancestor_of_cell(&self, cell: usize, level: u32) -> DyadicCube {
        let shift = self.max_level - level;
        let c = self.cell_cube(cell);
        DyadicCube {
            level,
            coords: [c.coords[0] >> shift, c.coords[1] >> shift],
            dim: self.dim,
        }
    }

    /// Cell indices inside `cube`, in increasing order.
    pub fn cells(&self, cube: &DyadicCube) -> Vec<usize> {
        let shift = self.max_level - cube.level;
        let span = 1usize << shift;
        if self.dim == 1 {
            let start = (cube.coords[0] as usize) << shift;
            (start..start + span).collect()
        } else {
            let side = 1usize << self.max_level;
            let r0 = (cube.coords[0] as usize) << shift;
            let c0 = (cube.coords[1] as usize) << shift;
            let mut out = Vec::with_capacity(span * span);
            for row in r0..r0 + span {
                out.extend(row * side + c0..row * side + c0 + span);
            }
            out
        }
    }

    /// Centre of `cell` (used for point evaluation of weights in 2D).
    pub fn cell_center(&self, cell: usize) -> [f64; 2] {
        let c = self.cell_cube(cell);
        let h = c.side_length();
        [(c.coords[0] as f64 + 0.5) * h, (c.coords[1] as f64 + 0.5) * h]
    }

    pub fn descendants(&self, cube: &DyadicCube, level: u32) -> Result<Vec<DyadicCube>> {
        self.check(cube)?;
        if level > self.max_level {
            return Err(domain(format!("level {level} exceeds grid level {}", self.max_level)));
        }
        cube.descendants(level)
    }

    pub fn parent(&self, cube: &DyadicCube) -> Result<DyadicCube> {
        self.check(cube)?;
        cube.parent()
    }
}

/// A set of finest-level cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSet {
    grid: DyadicGrid,
    members: Vec<bool>,
}

impl CellSet {
    pub fn empty(grid: DyadicGrid) -> Self {
        Self { grid, members: vec![false; grid.cell_count()] }
    }

    pub fn full(grid: DyadicGrid) -> Self {
        Self { grid, members: vec![true; grid.cell_count()] }
    }

    pub fn from_fn(grid: DyadicGrid, pred: impl Fn(usize) -> bool) -> Self {
        Self { grid, members: (0..grid.cell_count()).map(pred).collect() }
    }

    pub fn from_cube(grid: DyadicGrid, cube: &DyadicCube) -> Self {
        let mut set = Self::empty(grid);
        for c in grid.cells(cube) {
            set.members[c] = true;
        }
        set
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.members[cell]
    }

    pub fn insert(&mut self, cell: usize) {
        self.members[cell] = true;
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&b| b)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.members.iter().zip(&other.members).all(|(&a, &b)| !a || b)
    }

    pub fn intersects(&self, other: &CellSet) -> bool {
        self.members.iter().zip(&other.members).any(|(&a, &b)| a && b)
    }

    pub fn union_with(&mut self, other: &CellSet) {
        for (a, &b) in self.members.iter_mut().zip(&other.members) {
            *a |= b;
        }
    }

    pub fn intersection(&self, other: &CellSet) -> CellSet {
        CellSet {
            grid: self.grid,
            members: self.members.iter().zip(&other.members).map(|(&a, &b)| a && b).collect(),
        }
    }

    /// Lebesgue measure of the set.
    pub fn measure(&self) -> f64 {
        self.len() as f64 * self.grid.cell_measure()
    }
}

/// A nonnegative function, constant on each finest cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: DyadicGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: DyadicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(domain(format!(
                "{} values supplied for {} cells",
                values.len(),
                grid.cell_count()
            )));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Evaluation(format!("cell {i} has invalid value {v}")));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: DyadicGrid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.cell_count()])
    }

    pub fn from_fn(grid: DyadicGrid, f: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new(grid, (0..grid.cell_count()).map(f).collect())
    }

    pub fn indicator(set: &CellSet) -> Self {
        Self {
            grid: set.grid(),
            values: set.members.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, cell: usize) -> f64 {
        self.values[cell]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(domain("grid functions live on different grids"));
        }
        Self::new(
            self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn mul(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn powf(&self, e: f64) -> Result<Self> {
        self.map(|v| v.powf(e))
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        self.map(|v| v * c)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }

    /// Unscaled sum of cell values over `cube`, children folded in order.
    fn cube_sum(&self, cube: &DyadicCube) -> f64 {
        if cube.level == self.grid.max_level {
            return self.values[self.grid.index_of(cube)];
        }
        cube.children().iter().fold(0.0, |acc, c| acc + self.cube_sum(c))
    }

    /// `∫_Q F`.
    pub fn integrate(&self, cube: &DyadicCube) -> Result<f64> {
        self.grid.check(cube)?;
        Ok(self.cube_sum(cube) * self.grid.cell_measure())
    }

    /// `(1/|Q|) ∫_Q F`.
    pub fn average(&self, cube: &DyadicCube) -> Result<f64> {
        Ok(self.integrate(cube)? / cube.measure())
    }

    /// `∫_E F` for a cell set `E`.
    pub fn weighted_measure(&self, set: &CellSet) -> f64 {
        set.iter().map(|c| self.values[c]).sum::<f64>() * self.grid.cell_measure()
    }

    pub fn min_on(&self, cube: &DyadicCube) -> f64 {
        self.grid.cells(cube).into_iter().map(|c| self.values[c]).fold(f64::INFINITY, f64::min)
    }

    pub fn max_on(&self, cube: &DyadicCube) -> f64 {
        self.grid.cells(cube).into_iter().map(|c| self.values[c]).fold(0.0, f64::max)
    }

    pub fn level_sums(&self) -> LevelSums {
        LevelSums::new(self)
    }

    /// Writes `cell_index,value` rows (header included).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["cell_index", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            wtr.write_record([i.to_string(), format!("{v:e}")])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(grid: DyadicGrid, r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut values = vec![f64::NAN; grid.cell_count()];
        for rec in rdr.records() {
            let rec = rec?;
            let idx: usize = rec
                .get(0)
                .ok_or_else(|| Error::Format("missing cell_index".into()))?
                .trim()
                .parse()
                .map_err(|e| Error::Format(format!("cell_index: {e}")))?;
            let val: f64 = rec
                .get(1)
                .ok_or_else(|| Error::Format("missing value".into()))?
                .trim()
                .parse()
                .map_err(|e| Error::Format(format!("value: {e}")))?;
            if idx >= values.len() {
                return Err(domain(format!("cell_index {idx} outside grid")));
            }
            values[idx] = val;
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::Format(format!("cell {i} missing from CSV")));
        }
        Self::new(grid, values)
    }
}

/// Per-level cube sums of a grid function, built bottom-up.
#[derive(Debug, Clone)]
pub struct LevelSums {
    grid: DyadicGrid,
    levels: Vec<Vec<f64>>,
}

impl LevelSums {
    pub fn new(f: &GridFunction) -> Self {
        Self::from_values(f.grid, f.values.clone())
    }

    /// Pyramid over arbitrary (possibly negative) cell values, such as `ln w`.
    pub fn from_values(grid: DyadicGrid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.cell_count(), "one value per cell");
        let l = grid.max_level as usize;
        let mut levels = vec![Vec::new(); l + 1];
        levels[l] = values;
        for j in (0..l).rev() {
            let finer = &levels[j + 1];
            let sums: Vec<f64> = grid
                .cubes_at(j as u32)
                .map(|q| {
                    q.children()
                        .iter()
                        .fold(0.0, |acc, c| acc + finer[grid.index_of(c)])
                })
                .collect();
            levels[j] = sums;
        }
        Self { grid, levels }
    }

    /// Raw sum of cell values over `cube`.
    pub fn sum(&self, cube: &DyadicCube) -> f64 {
        self.levels[cube.level as usize][self.grid.index_of(cube)]
    }

    pub fn integral(&self, cube: &DyadicCube) -> f64 {
        self.levels[cube.level as usize][self.grid.index_of(cube)] * self.grid.cell_measure()
    }

    pub fn average(&self, cube: &DyadicCube) -> f64 {
        self.integral(cube) / cube.measure()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g1(l: u32) -> DyadicGrid {
        DyadicGrid::new(1, l).unwrap()
    }

    #[test]
    fn unit_function_integrates_to_one() {
        for (n, l) in [(1, 0), (1, 5), (2, 3)] {
            let g = DyadicGrid::new(n, l).unwrap();
            let one = GridFunction::constant(g, 1.0).unwrap();
            assert_eq!(one.integrate(&g.root()).unwrap(), 1.0);
        }
    }

    #[test]
    fn half_indicator() {
        let g = g1(3);
        let left = CellSet::from_cube(g, &DyadicCube::new(1, 1, [0, 0]).unwrap());
        let f = GridFunction::indicator(&left);
        assert_eq!(f.integrate(&g.root()).unwrap(), 0.5);
        assert_eq!(f.average(&g.root()).unwrap(), 0.5);
        assert_eq!(f.average(&DyadicCube::new(1, 1, [0, 0]).unwrap()).unwrap(), 1.0);
    }

    #[test]
    fn constant_average() {
        let g = DyadicGrid::new(2, 3).unwrap();
        let f = GridFunction::constant(g, 3.25).unwrap();
        for q in g.all_cubes() {
            assert_eq!(f.average(&q).unwrap(), 3.25);
        }
    }

    #[test]
    fn weighted_measure_step() {
        let g = g1(2);
        let w = GridFunction::new(g, vec![1.0, 1.0, 2.0, 2.0]).unwrap();
        let left = CellSet::from_fn(g, |c| c < 2);
        assert_eq!(w.weighted_measure(&left), 0.5);
        assert_eq!(w.weighted_measure(&CellSet::empty(g)), 0.0);
        let one = GridFunction::constant(g, 1.0).unwrap();
        assert_eq!(one.weighted_measure(&CellSet::full(g)), 1.0);
    }

    #[test]
    fn descendants_and_parent() {
        let g = g1(3);
        let kids = g.descendants(&g.root(), 1).unwrap();
        assert_eq!(
            kids,
            vec![DyadicCube::new(1, 1, [0, 0]).unwrap(), DyadicCube::new(1, 1, [1, 0]).unwrap()]
        );
        assert_eq!(g.parent(&kids[0]).unwrap(), g.root());
        assert!(matches!(g.parent(&g.root()), Err(Error::Domain(_))));
        let g2 = DyadicGrid::new(2, 4).unwrap();
        let q = DyadicCube::new(2, 1, [1, 0]).unwrap();
        assert_eq!(g2.descendants(&q, 3).unwrap().len(), 16);
        assert_eq!(g.descendants(&kids[0], 3).unwrap().len(), 4);
    }

    #[test]
    fn domain_errors() {
        let g = g1(2);
        let deep = DyadicCube::new(1, 3, [0, 0]).unwrap();
        let f = GridFunction::constant(g, 1.0).unwrap();
        assert!(matches!(f.integrate(&deep), Err(Error::Domain(_))));
        assert!(DyadicCube::new(1, 2, [4, 0]).is_err());
        assert!(DyadicGrid::new(3, 2).is_err());
    }

    #[test]
    fn cells_of_cube_2d() {
        let g = DyadicGrid::new(2, 2).unwrap();
        let q = DyadicCube::new(2, 1, [1, 0]).unwrap();
        assert_eq!(g.cells(&q), vec![8, 9, 12, 13]);
        for c in g.cells(&q) {
            assert!(q.contains(&g.cell_cube(c)));
            assert_eq!(g.ancestor_of_cell(c, 1), q);
        }
    }

    #[test]
    fn level_sums_match_direct_integration_exactly() {
        let g = DyadicGrid::new(2, 3).unwrap();
        let f = GridFunction::from_fn(g, |c| ((c * 7919) % 13) as f64 * 0.37 + 0.1).unwrap();
        let sums = f.level_sums();
        for q in g.all_cubes() {
            assert_eq!(sums.integral(&q), f.integrate(&q).unwrap());
        }
    }

    #[test]
    fn csv_round_trip() {
        let g = DyadicGrid::new(2, 2).unwrap();
        let f = GridFunction::from_fn(g, |c| 1.0 / (c as f64 + 3.0)).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let back = GridFunction::read_csv(g, buf.as_slice()).unwrap();
        assert_eq!(back, f);
        assert!(GridFunction::read_csv(g, "cell_index,value\n0,1\n".as_bytes()).is_err());
    }

    #[test]
    fn cube_string_round_trip() {
        let q = DyadicCube::new(2, 3, [5, 2]).unwrap();
        assert_eq!(q.to_string().parse::<DyadicCube>().unwrap(), q);
        let p = DyadicCube::new(1, 4, [9, 0]).unwrap();
        assert_eq!(p.to_string(), "4/9");
    }
}
