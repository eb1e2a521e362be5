//! Embeddings of finite families between the space of planar measures and
//! the space of persistence diagrams, both with their p-Wasserstein metric.
//!
//! | construction | direction | guarantee per pair |
//! |---|---|---|
//! | [`measures_to_diagrams_isometric`] | ot → pd | `d' = d` |
//! | [`measures_to_diagrams_quasi`] | ot → pd | `d − ε ≤ d' ≤ d + ε` |
//! | [`diagrams_to_measures_bilipschitz`] | pd → ot | `d ≤ d' ≤ 2^{1/p} d` |
//! | [`diagrams_to_measures_quasi`] | pd → ot, `p > 1` | `d ≤ d' ≤ d + ε` |
//!
//! Every construction is deterministic: its parameters are recorded in
//! [`Params`] and fully determine the images.

mod bilipschitz;
mod grid;
mod isometric;

use serde::{Deserialize, Serialize};

use crate::diagrams::{wasserstein_pd, PersistenceDiagram};
use crate::error::Result;
use crate::transport::{wasserstein_uniform, DiscreteMeasure, UniformMeasure};

pub use bilipschitz::{augment_with_projections, diagrams_to_measures_bilipschitz};
pub use grid::{
    diagrams_to_measures_quasi, diagrams_to_measures_quasi_with, grid_resolution,
    grid_resolution_by_scan, windowed_grid_distance, GridOptions, DEFAULT_S_CAP,
};
pub use isometric::{measures_to_diagrams_isometric, measures_to_diagrams_quasi};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Measures to diagrams.
    Ot2pd,
    /// Diagrams to measures.
    Pd2ot,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsometricParams {
    pub p: f64,
    /// Common denominator of all weights; every image has this many points.
    pub denominator: u64,
    /// Atom scaling `N^{-1/p}`.
    pub scale: f64,
    /// ℓ∞ diameter of the scaled atoms.
    pub diameter: f64,
    /// `max (x − y)` over the scaled atoms.
    pub skew: f64,
    /// Translation `(0, 4·diameter + skew + 1)` applied after scaling.
    pub translation: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureQuasiParams {
    pub eps: f64,
    /// Denominator of the rational approximations, or the common
    /// denominator when the inputs were rational and used as is.
    pub approx_denominator: u64,
    /// Certified `W_p(α_i, β_i)` for each input and its approximation.
    pub approx_errors: Vec<f64>,
    pub isometric: IsometricParams,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiLipschitzParams {
    pub p: f64,
    /// Total number of points over all diagrams, with multiplicity.
    pub total_points: usize,
    /// Dilation `N^{1/p}`.
    pub dilation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationRecord {
    pub displaced: usize,
    pub max_offset: f64,
    /// Bound on `W_p` between the input diagram and its perturbation.
    pub distance_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridParams {
    pub p: f64,
    pub eps: f64,
    /// Share of `eps` reserved for separating repeated points.
    pub eps_perturbation: f64,
    /// Share of `eps` used by the grid thresholds.
    pub eps_grid: f64,
    pub perturbations: Vec<PerturbationRecord>,
    /// `N_i`, the size of each (perturbed) diagram.
    pub sizes: Vec<usize>,
    /// `N = max N_i`.
    pub max_size: usize,
    /// Smallest and largest `(x + y)/2` over all points.
    pub lowest_projection: f64,
    pub highest_projection: f64,
    /// Grid resolution `s`.
    pub resolution: u64,
    /// Spacing `(M − m)/s` before dilation.
    pub spacing: f64,
    /// `|I| = s + 1`.
    pub shared_grid_len: usize,
    /// `|I_i| = N − N_i`.
    pub extra_grid_lens: Vec<usize>,
    /// `|D̄_i| = N + s + 1`.
    pub support_size: usize,
    /// Dilation `(N + s + 1)^{1/p}`.
    pub dilation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "construction", rename_all = "kebab-case")]
pub enum Params {
    Isometric(IsometricParams),
    MeasureQuasi(MeasureQuasiParams),
    BiLipschitz(BiLipschitzParams),
    Grid(GridParams),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Images {
    Diagrams(Vec<PersistenceDiagram>),
    Measures(Vec<UniformMeasure>),
}

impl Images {
    pub fn len(&self) -> usize {
        match self {
            Images::Diagrams(d) => d.len(),
            Images::Measures(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Serialize for Images {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Images::Diagrams(d) => d.serialize(s),
            Images::Measures(m) => {
                let discrete: Vec<DiscreteMeasure> = m.iter().map(UniformMeasure::to_discrete).collect();
                discrete.serialize(s)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingResult {
    pub direction: Direction,
    pub params: Params,
    pub images: Images,
}

impl EmbeddingResult {
    pub fn p(&self) -> f64 {
        match &self.params {
            Params::Isometric(x) => x.p,
            Params::MeasureQuasi(x) => x.isometric.p,
            Params::BiLipschitz(x) => x.p,
            Params::Grid(x) => x.p,
        }
    }

    /// Certified interval for the image distance of pair `(i, j)` given the
    /// source distance.
    pub fn bounds(&self, i: usize, j: usize, source_dist: f64) -> (f64, f64) {
        match &self.params {
            Params::Isometric(_) => (source_dist, source_dist),
            Params::MeasureQuasi(q) => (source_dist - q.eps, source_dist + q.eps),
            Params::BiLipschitz(b) => (source_dist, 2f64.powf(1.0 / b.p) * source_dist),
            Params::Grid(g) => {
                let slack = g.perturbations[i].distance_bound + g.perturbations[j].distance_bound;
                (source_dist - slack, source_dist + g.eps_grid + slack)
            }
        }
    }

    /// Exact distance between images `i` and `j`.
    pub fn image_distance(&self, i: usize, j: usize) -> Result<f64> {
        let p = self.p();
        match (&self.images, &self.params) {
            (Images::Diagrams(d), _) => Ok(wasserstein_pd(&d[i], &d[j], p)?.distance),
            (Images::Measures(m), Params::Grid(g)) => {
                windowed_grid_distance(&m[i], g.sizes[i], &m[j], g.sizes[j], p)
            }
            (Images::Measures(m), _) => wasserstein_uniform(&m[i], &m[j], p),
        }
    }
}
