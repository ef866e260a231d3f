//! Materialized weights and test functions.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use anyhow::{Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use olab_core::weights::{a1_constant, a_infty_constant, certify_q, make_weight, rh_constant, QCertificate, WeightSpec};
use olab_core::{DyadicGrid, GridFunction};

use crate::config::{ExperimentConfig, FunctionSpec};

/// Default functions when the config lists none.
pub fn default_functions(levels: u32) -> Vec<FunctionSpec> {
    let l = levels.min(3);
    vec![
        FunctionSpec::Indicator { level: l, index: 1, height: 4.0 },
        FunctionSpec::Spike { cell: 0, height: 10.0 },
        FunctionSpec::RandomPiecewise { level: levels.min(4), max: 5.0, sparsity: 0.5 },
    ]
}

pub struct Corpus {
    pub grid: DyadicGrid,
    /// Distinct weights; `u` and `v` index into it.
    pub weights: Vec<(WeightSpec, GridFunction)>,
    pub u: Vec<usize>,
    pub v: Vec<usize>,
    pub functions: Vec<(FunctionSpec, GridFunction)>,
}

fn intern(weights: &mut Vec<(WeightSpec, GridFunction)>, spec: &WeightSpec, grid: DyadicGrid) -> Result<usize> {
    if let Some(i) = weights.iter().position(|(s, _)| s == spec) {
        return Ok(i);
    }
    let w = make_weight(spec, grid).with_context(|| format!("building weight {spec:?}"))?;
    weights.push((spec.clone(), w));
    Ok(weights.len() - 1)
}

/// Each random function gets its own stream derived from the seed and its
/// position, so adding functions does not perturb the others.
pub fn make_function(spec: &FunctionSpec, grid: DyadicGrid, seed: u64, index: usize) -> Result<GridFunction> {
    let f = match *spec {
        FunctionSpec::Constant { value } => GridFunction::constant(grid, value)?,
        FunctionSpec::Indicator { level, index: q, height } => {
            let cube = grid.cube_at(level, q);
            GridFunction::from_fn(grid, |c| if cube.contains(&grid.cell_cube(c)) { height } else { 0.0 })?
        }
        FunctionSpec::Spike { cell, height } => GridFunction::from_fn(grid, |c| if c == cell { height } else { 0.0 })?,
        FunctionSpec::RandomPiecewise { level, max, sparsity } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03));
            let vals: Vec<f64> = (0..grid.cube_count(level))
                .map(|_| if rng.gen::<f64>() < sparsity { 0.0 } else { rng.gen_range(0.0..max) })
                .collect();
            GridFunction::from_fn(grid, |c| vals[grid.index_of(&grid.ancestor_of_cell(c, level))])?
        }
    };
    Ok(f)
}

impl Corpus {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let grid = DyadicGrid::new(cfg.grid.n, cfg.grid.levels)?;
        let mut weights = Vec::new();
        let u = cfg.u.iter().map(|s| intern(&mut weights, s, grid)).collect::<Result<Vec<_>>>()?;
        let v = cfg.v.iter().map(|s| intern(&mut weights, s, grid)).collect::<Result<Vec<_>>>()?;
        let specs = if cfg.functions.is_empty() { default_functions(cfg.grid.levels) } else { cfg.functions.clone() };
        let functions = specs
            .into_iter()
            .enumerate()
            .map(|(i, s)| make_function(&s, grid, cfg.seed, i).map(|f| (s, f)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, weights, u, v, functions })
    }
}

#[derive(Serialize)]
struct WeightEntry<'a> {
    file: String,
    spec: &'a WeightSpec,
    a1: f64,
    a_infty: f64,
    a_q: QCertificate,
    rh2: f64,
}

#[derive(Serialize)]
struct FunctionEntry<'a> {
    file: String,
    spec: &'a FunctionSpec,
}

#[derive(Serialize)]
struct Manifest<'a> {
    n: u8,
    levels: u32,
    seed: u64,
    weights: Vec<WeightEntry<'a>>,
    u: &'a [usize],
    v: &'a [usize],
    functions: Vec<FunctionEntry<'a>>,
}

fn write_function(path: &Path, f: &GridFunction) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_csv(BufWriter::new(file))?;
    Ok(())
}

/// Writes `corpus/` under the output directory; returns the number of files.
pub fn write_corpus(cfg: &ExperimentConfig, corpus: &Corpus) -> Result<usize> {
    let dir = cfg.output.join("corpus");
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut weights = Vec::new();
    for (i, (spec, w)) in corpus.weights.iter().enumerate() {
        let file = format!("weight{i}.csv");
        write_function(&dir.join(&file), w)?;
        weights.push(WeightEntry {
            file,
            spec,
            a1: a1_constant(w)?.value,
            a_infty: a_infty_constant(w)?.value,
            a_q: certify_q(w)?,
            rh2: rh_constant(w, 2.0)?.value,
        });
    }
    let mut functions = Vec::new();
    for (i, (spec, f)) in corpus.functions.iter().enumerate() {
        let file = format!("f{i}.csv");
        write_function(&dir.join(&file), f)?;
        functions.push(FunctionEntry { file, spec });
    }
    let manifest = Manifest {
        n: cfg.grid.n,
        levels: cfg.grid.levels,
        seed: cfg.seed,
        weights,
        u: &corpus.u,
        v: &corpus.v,
        functions,
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(corpus.weights.len() + corpus.functions.len())
}
