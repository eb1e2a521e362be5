//! Seeded random instances.
//!
//! Every generator draws from a caller-supplied RNG, so campaigns can give
//! each trial its own stream. The `gen_*` wrappers seed a fresh stream.

use anyhow::{ensure, Result};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use wpd_core::diagrams::PersistenceDiagram;
use wpd_core::geometry::{FiniteMetricSpace, PlanePoint};
use wpd_core::rational::Rational;
use wpd_core::transport::DiscreteMeasure;

/// Axis-aligned square `[lo, hi]²` from which coordinates are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bbox {
    pub lo: f64,
    pub hi: f64,
}

impl Bbox {
    pub const UNIT: Bbox = Bbox { lo: 0.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        ensure!(lo.is_finite() && hi.is_finite() && lo < hi, "bbox needs finite lo < hi, got [{lo}, {hi}]");
        Ok(Bbox { lo, hi })
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        rng.gen_range(self.lo..self.hi)
    }
}

impl std::str::FromStr for Bbox {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .split_once(',')
            .ok_or_else(|| anyhow::anyhow!("expected LO,HI, got {s:?}"))?;
        Bbox::new(lo.trim().parse()?, hi.trim().parse()?)
    }
}

/// Stream `trial` of the generator seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn random_point(rng: &mut impl Rng, bbox: Bbox) -> PlanePoint {
    PlanePoint { x: bbox.sample(rng), y: bbox.sample(rng) }
}

/// Diagram with a uniform number of points in `0..=max_points`, each with
/// `lo ≤ birth < death ≤ hi`.
pub fn sample_diagram(rng: &mut impl Rng, max_points: usize, bbox: Bbox) -> PersistenceDiagram {
    let n = rng.gen_range(0..=max_points);
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        let (a, b) = (bbox.sample(rng), bbox.sample(rng));
        if a != b {
            points.push(PlanePoint { x: a.min(b), y: a.max(b) });
        }
    }
    PersistenceDiagram::new(points).expect("births precede deaths")
}

pub fn gen_diagram(seed: u64, max_points: usize, bbox: Bbox) -> PersistenceDiagram {
    sample_diagram(&mut trial_rng(seed, 0), max_points, bbox)
}

/// Measure with `1..=max_atoms` atoms whose weights are a random
/// composition of `denominator` into positive parts.
pub fn sample_measure(rng: &mut impl Rng, max_atoms: usize, denominator: u64, bbox: Bbox) -> Result<DiscreteMeasure> {
    ensure!(max_atoms >= 1, "max_atoms must be at least 1");
    ensure!(denominator >= max_atoms as u64, "denominator {denominator} is smaller than max_atoms {max_atoms}");
    ensure!(denominator <= i64::MAX as u64, "denominator too large");
    let k = rng.gen_range(1..=max_atoms);
    let mut cuts: Vec<u64> = sample(rng, denominator as usize - 1, k - 1).into_iter().map(|c| c as u64 + 1).collect();
    cuts.sort_unstable();
    cuts.push(denominator);
    let mut prev = 0;
    let weights = cuts
        .into_iter()
        .map(|c| {
            let w = Rational::new((c - prev) as i64, denominator as i64);
            prev = c;
            w
        })
        .collect();
    let atoms = (0..k).map(|_| random_point(rng, bbox)).collect();
    Ok(DiscreteMeasure::from_rationals(atoms, weights)?)
}

pub fn gen_measure(seed: u64, max_atoms: usize, denominator: u64, bbox: Bbox) -> Result<DiscreteMeasure> {
    sample_measure(&mut trial_rng(seed, 0), max_atoms, denominator, bbox)
}

/// Measure with `1..=max_atoms` atoms and real weights, which are almost
/// never exact fractions.
pub fn sample_real_measure(rng: &mut impl Rng, max_atoms: usize, bbox: Bbox) -> DiscreteMeasure {
    let k = rng.gen_range(1..=max_atoms.max(1));
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let head: f64 = weights[..k - 1].iter().sum();
    weights[k - 1] = 1.0 - head;
    let atoms = (0..k).map(|_| random_point(rng, bbox)).collect();
    DiscreteMeasure::from_reals(atoms, weights).expect("normalized positive weights")
}

/// Metric space on `n` points with every distance drawn from `[lo, hi]`.
/// With `hi ≤ 2·lo` every such matrix satisfies the triangle inequality.
pub fn sample_metric_space(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Result<FiniteMetricSpace> {
    ensure!(0.0 < lo && lo <= hi && hi <= 2.0 * lo, "distance range must satisfy 0 < lo <= hi <= 2 lo");
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = if lo == hi { lo } else { rng.gen_range(lo..=hi) };
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    Ok(FiniteMetricSpace::new(dist)?)
}
