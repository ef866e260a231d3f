//! Experiment configuration (JSON).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use olab_core::weights::WeightSpec;

pub const SUITES: [&str; 8] = [
    "reverse_holder",
    "level_set",
    "claim1",
    "claim3",
    "theorem1",
    "corollaries",
    "fractional_mid",
    "fractional_diag",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: u8,
    pub levels: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YoungSpec {
    pub r: f64,
    pub delta: f64,
}

/// Test functions. Everything except `random_piecewise` ignores the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Constant { value: f64 },
    /// `height · χ_Q` for the `index`-th cube of `level`.
    Indicator { level: u32, index: usize, #[serde(default = "one")] height: f64 },
    /// `height` on one cell, zero elsewhere.
    Spike { cell: usize, height: f64 },
    /// Constant on the cubes of `level`, zero with probability `sparsity`,
    /// otherwise uniform in `[0, max)`.
    RandomPiecewise { level: u32, max: f64, #[serde(default)] sparsity: f64 },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ladders {
    /// Empty selects `ε₀/2, ε₀/4, ε₀/8` per weight pair.
    pub eps: Vec<f64>,
    /// Empty selects `2^{n+1}`.
    pub a: Vec<f64>,
    pub gamma: Vec<f64>,
    pub p: Vec<f64>,
    /// `ε` of the diagonal fractional estimate.
    pub eps_fractional: Vec<f64>,
}

impl Default for Ladders {
    fn default() -> Self {
        Self { eps: Vec::new(), a: Vec::new(), gamma: vec![0.5], p: Vec::new(), eps_fractional: vec![0.5] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for TGrid {
    fn default() -> Self {
        Self { lo: 1e-3, hi: 1e3, points: 25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    pub u: Vec<WeightSpec>,
    pub v: Vec<WeightSpec>,
    pub young: YoungSpec,
    #[serde(default)]
    pub functions: Vec<FunctionSpec>,
    #[serde(default)]
    pub ladders: Ladders,
    #[serde(default)]
    pub t_grid: TGrid,
    #[serde(default)]
    pub suites: Vec<String>,
    /// Suite name to check name to the largest accepted empirical constant.
    #[serde(default)]
    pub budgets: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default)]
    pub seed: u64,
    pub output: PathBuf,
    /// Random draws per subset-form reverse Hölder cube.
    #[serde(default = "default_subsets")]
    pub subsets_per_cube: usize,
}

fn default_subsets() -> usize {
    200
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if cfg.output.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.output = dir.join(&cfg.output);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn a_values(&self) -> Vec<f64> {
        if self.ladders.a.is_empty() {
            vec![olab_core::cz::default_a(self.grid.n)]
        } else {
            self.ladders.a.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.grid.n;
        if !(1..=2).contains(&n) {
            bail!("grid.n must be 1 or 2, got {n}");
        }
        if n as u32 * self.grid.levels > olab_core::grid::MAX_CELLS_LOG2 {
            bail!("grid has more than 2^{} cells", olab_core::grid::MAX_CELLS_LOG2);
        }
        let YoungSpec { r, delta } = self.young;
        if !(r >= 1.0 && r.is_finite()) {
            bail!("young.r must be >= 1, got {r}");
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            bail!("young.delta must be >= 0, got {delta}");
        }
        if self.u.is_empty() || self.v.is_empty() {
            bail!("u and v need at least one weight each");
        }
        let nf = n as f64;
        for &a in &self.a_values() {
            if !(a > 2f64.powi(n as i32)) {
                bail!("a must exceed 2^n = {}, got {a}", 2f64.powi(n as i32));
            }
        }
        for &e in &self.ladders.eps {
            if !(e > 0.0 && e < 1.0) {
                bail!("eps ladder values must lie in (0,1), got {e}");
            }
        }
        for &e in &self.ladders.eps_fractional {
            if !(e > 0.0 && e.is_finite()) {
                bail!("eps_fractional values must be > 0, got {e}");
            }
        }
        let fractional = self.suites.iter().any(|s| s.starts_with("fractional"));
        for &g in &self.ladders.gamma {
            if fractional && !(g > 0.0 && g < nf / r) {
                bail!("gamma must lie in (0, n/r) = (0, {}), got {g}", nf / r);
            }
        }
        if self.suites.iter().any(|s| s == "fractional_mid") {
            if self.ladders.p.is_empty() {
                bail!("fractional_mid needs at least one p");
            }
            for &g in &self.ladders.gamma {
                for &p in &self.ladders.p {
                    if !(p > r && p < nf / g) {
                        bail!("p must lie in (r, n/gamma) = ({r}, {}), got {p}", nf / g);
                    }
                }
            }
        }
        let TGrid { lo, hi, points } = self.t_grid;
        if !(lo > 0.0 && hi >= lo && hi.is_finite() && points >= 1) {
            bail!("t_grid needs 0 < lo <= hi and at least one point");
        }
        for s in &self.suites {
            if !SUITES.contains(&s.as_str()) {
                bail!("unknown suite {s:?}; known: {}", SUITES.join(", "));
            }
        }
        for s in self.budgets.keys() {
            if !SUITES.contains(&s.as_str()) {
                bail!("budget for unknown suite {s:?}");
            }
        }
        let cells = 1usize << (n as u32 * self.grid.levels);
        for (i, f) in self.functions.iter().enumerate() {
            match *f {
                FunctionSpec::Constant { value } if !(value >= 0.0) => bail!("function {i}: value must be >= 0"),
                FunctionSpec::Indicator { level, index, height } => {
                    if level > self.grid.levels || index >= 1usize << (n as u32 * level) || !(height >= 0.0) {
                        bail!("function {i}: indicator cube out of range");
                    }
                }
                FunctionSpec::Spike { cell, height } if cell >= cells || !(height >= 0.0) => {
                    bail!("function {i}: spike out of range")
                }
                FunctionSpec::RandomPiecewise { level, max, sparsity } => {
                    if level > self.grid.levels || !(max > 0.0) || !(0.0..1.0).contains(&sparsity) {
                        bail!("function {i}: random piecewise needs level <= L, max > 0, sparsity in [0,1)");
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}
