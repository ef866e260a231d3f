use olab_core::maximal::{fractional_scale, m_gamma_phi, m_phi_dyadic};
use olab_core::orlicz::{ln_luxemburg_norm, LuxemburgQuery};
use olab_core::{DyadicGrid, GridFunction, YoungFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every cube of the grid is visited for every cell; containment is tested
/// geometrically rather than through ancestor indexing.
fn oracle(f: &GridFunction, phi: &YoungFunction, gamma: Option<f64>) -> Vec<f64> {
    let grid = f.grid();
    let cubes: Vec<_> = grid.all_cubes().collect();
    let norms: Vec<f64> =
        cubes.iter().map(|q| ln_luxemburg_norm(&LuxemburgQuery::lebesgue(f, *q, phi)).unwrap().exp()).collect();
    (0..grid.cell_count())
        .map(|c| {
            let cell = grid.cell_cube(c);
            cubes
                .iter()
                .zip(&norms)
                .filter(|(q, _)| q.contains(&cell))
                .map(|(q, &n)| match gamma {
                    Some(g) => fractional_scale(q.level, g) * n,
                    None => n,
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

fn inputs(grid: DyadicGrid, rng: &mut ChaCha8Rng) -> Vec<GridFunction> {
    vec![
        GridFunction::constant(grid, 2.5).unwrap(),
        GridFunction::from_fn(grid, |c| if c == 0 { 7.0 } else { 0.0 }).unwrap(),
        GridFunction::new(grid, (0..grid.cell_count()).map(|_| rng.gen_range(0.0..4.0)).collect()).unwrap(),
        GridFunction::new(
            grid,
            (0..grid.cell_count()).map(|_| if rng.gen_bool(0.6) { 0.0 } else { rng.gen_range(0.0..100.0) }).collect(),
        )
        .unwrap(),
    ]
}

#[test]
fn fast_sweeps_equal_all_cubes_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let phis = [
        YoungFunction::canonical(1.0, 0.0).unwrap(),
        YoungFunction::canonical(2.0, 1.0).unwrap(),
        YoungFunction::canonical(1.5, 2.5).unwrap(),
    ];
    for n in 1..=2u8 {
        for levels in 0..=8 / n as u32 {
            let grid = DyadicGrid::new(n, levels).unwrap();
            for f in inputs(grid, &mut rng) {
                for phi in &phis {
                    let fast = m_phi_dyadic(&f, phi).unwrap();
                    let slow = oracle(&f, phi, None);
                    for (c, (a, b)) in fast.output.values().iter().zip(&slow).enumerate() {
                        assert_eq!(a.to_bits(), b.to_bits(), "n={n} L={levels} cell {c}");
                    }
                    for gamma in [0.25 * n as f64, 0.5 * n as f64] {
                        let fast = m_gamma_phi(&f, phi, gamma).unwrap();
                        let slow = oracle(&f, phi, Some(gamma));
                        for (c, (a, b)) in fast.output.values().iter().zip(&slow).enumerate() {
                            assert_eq!(a.to_bits(), b.to_bits(), "gamma={gamma} n={n} L={levels} cell {c}");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn argmax_attains_the_value() {
    let grid = DyadicGrid::new(2, 3).unwrap();
    let f = GridFunction::from_fn(grid, |c| (c * 37 % 11) as f64).unwrap();
    let phi = YoungFunction::canonical(2.0, 1.0).unwrap();
    let m = m_phi_dyadic(&f, &phi).unwrap();
    for c in 0..grid.cell_count() {
        let q = m.argmax[c];
        assert!(q.contains(&grid.cell_cube(c)));
        let n = ln_luxemburg_norm(&LuxemburgQuery::lebesgue(&f, q, &phi)).unwrap().exp();
        assert_eq!(n.to_bits(), m.output.value(c).to_bits());
    }
}
