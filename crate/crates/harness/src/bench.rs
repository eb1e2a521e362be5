//! Assignment solver comparison on grid-padded instances.
//!
//! Images of the grid embedding are dominated by diagonal points at equal
//! spacing, so their cost matrices are full of near ties.

use std::time::Instant;

use anyhow::{ensure, Result};
use serde::Serialize;
use wpd_core::assignment::{solve, Backend, CostMatrix};
use wpd_core::embeddings::{diagrams_to_measures_quasi, windowed_grid_distance, Images, Params};

use crate::gen::{sample_diagram, trial_rng, Bbox};

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub solver: String,
    pub size: usize,
    pub distance: f64,
    /// Median wall-clock time over the repeats.
    pub median_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub seed: u64,
    pub p: f64,
    pub eps: f64,
    pub resolution: u64,
    pub rows: Vec<BenchRow>,
    /// Whether all solvers found the same distance (relative 1e-9).
    pub agree: bool,
}

fn median_ms(repeats: usize, mut f: impl FnMut() -> Result<f64>) -> Result<(f64, f64)> {
    let mut times = Vec::with_capacity(repeats);
    let mut value = f64::NAN;
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        value = f()?;
        times.push(start.elapsed().as_secs_f64() * 1e3);
    }
    times.sort_by(f64::total_cmp);
    Ok((value, times[times.len() / 2]))
}

/// Solves the distance between the first two grid images with every dense
/// backend (when the support is at most `dense_limit`) and with the windowed
/// sparse solver.
pub fn bench_assignment(seed: u64, p: f64, eps: f64, repeats: usize, dense_limit: usize) -> Result<BenchReport> {
    let mut rng = trial_rng(seed, 0);
    let diagrams = loop {
        let ds = vec![sample_diagram(&mut rng, 4, Bbox::UNIT), sample_diagram(&mut rng, 4, Bbox::UNIT)];
        if ds.iter().all(|d| !d.is_empty()) {
            break ds;
        }
    };
    let r = diagrams_to_measures_quasi(&diagrams, p, eps)?;
    let (Params::Grid(g), Images::Measures(ms)) = (&r.params, &r.images) else { unreachable!() };
    let (a, b) = (&ms[0], &ms[1]);
    let k = a.len();
    let mut rows = Vec::new();
    if k <= dense_limit {
        let costs = CostMatrix::from_fn(k, |i, j| a.atoms()[i].linf_dist(&b.atoms()[j]).powf(p));
        for backend in Backend::ALL {
            let (distance, ms) = median_ms(repeats, || Ok((solve(&costs, backend)?.cost / k as f64).powf(1.0 / p)))?;
            rows.push(BenchRow { solver: backend.name().to_string(), size: k, distance, median_ms: ms });
        }
    }
    let (distance, ms) = median_ms(repeats, || Ok(windowed_grid_distance(a, g.sizes[0], b, g.sizes[1], p)?))?;
    rows.push(BenchRow { solver: "windowed-sparse".into(), size: k, distance, median_ms: ms });
    ensure!(!rows.is_empty(), "no solver ran");
    let reference = rows[0].distance;
    let agree = rows.iter().all(|r| (r.distance - reference).abs() <= 1e-9 * reference.max(1.0));
    Ok(BenchReport { seed, p, eps, resolution: g.resolution, rows, agree })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solvers_agree_on_a_small_grid() {
        let r = bench_assignment(3, 2.0, 0.8, 1, 2000).unwrap();
        assert_eq!(r.rows.len(), 4);
        assert!(r.agree, "{r:?}");
    }
}
