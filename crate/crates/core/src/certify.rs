//! Pairwise verification of an embedding against its source family.

use rayon::prelude::*;
use serde::Serialize;

use crate::diagrams::{wasserstein_pd, PersistenceDiagram};
use crate::embeddings::EmbeddingResult;
use crate::error::{Error, Result};
use crate::transport::{oracle_wasserstein_discrete, wasserstein, DiscreteMeasure};

/// Default relative slack for floating point comparisons.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Where the source distances come from.
#[derive(Debug, Clone, Copy)]
pub enum Sources<'a> {
    Measures(&'a [DiscreteMeasure]),
    Diagrams(&'a [PersistenceDiagram]),
    /// A precomputed symmetric distance matrix.
    Distances(&'a [Vec<f64>]),
}

impl Sources<'_> {
    pub fn len(&self) -> usize {
        match self {
            Sources::Measures(m) => m.len(),
            Sources::Diagrams(d) => d.len(),
            Sources::Distances(d) => d.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Exact `W_p` between sources `i` and `j`. Measures whose weights are
    /// not exact fractions fall back to the small exhaustive solver.
    pub fn distance(&self, i: usize, j: usize, p: f64) -> Result<f64> {
        match self {
            Sources::Measures(m) => match wasserstein(&m[i], &m[j], p) {
                Ok(t) => Ok(t.distance),
                Err(Error::InvalidMeasure(_)) | Err(Error::DenominatorCap { .. }) => {
                    oracle_wasserstein_discrete(&m[i], &m[j], p)
                }
                Err(e) => Err(e),
            },
            Sources::Diagrams(d) => Ok(wasserstein_pd(&d[i], &d[j], p)?.distance),
            Sources::Distances(d) => Ok(d[i][j]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCertificate {
    pub i: usize,
    pub j: usize,
    pub lower: f64,
    pub upper: f64,
    pub source_dist: f64,
    pub image_dist: f64,
    pub pass: bool,
}

impl PairCertificate {
    /// Distance to the nearer end of the certified interval; negative when
    /// the image distance falls outside.
    pub fn margin(&self) -> f64 {
        (self.image_dist - self.lower).min(self.upper - self.image_dist)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certification {
    pub certificates: Vec<PairCertificate>,
    pub pass: bool,
    /// Smallest margin over all pairs (`+∞` for fewer than two sources).
    pub min_margin: f64,
}

impl Certification {
    pub fn failures(&self) -> impl Iterator<Item = &PairCertificate> {
        self.certificates.iter().filter(|c| !c.pass)
    }
}

/// Checks `lower ≤ image ≤ upper` for every pair `i < j`, with slack
/// `tol · max(1, source distance)` on both ends.
pub fn certify_pairwise(result: &EmbeddingResult, sources: Sources<'_>, tol: f64) -> Result<Certification> {
    let n = sources.len();
    if result.images.len() != n {
        return Err(Error::InvalidParameter(format!(
            "{} images for {} sources",
            result.images.len(),
            n
        )));
    }
    let p = result.p();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let certificates = pairs
        .par_iter()
        .map(|&(i, j)| {
            let source_dist = sources.distance(i, j, p)?;
            let image_dist = result.image_distance(i, j)?;
            let (lower, upper) = result.bounds(i, j, source_dist);
            let slack = tol * source_dist.max(1.0);
            let pass = lower - slack <= image_dist && image_dist <= upper + slack;
            Ok(PairCertificate { i, j, lower, upper, source_dist, image_dist, pass })
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = certificates.iter().all(|c| c.pass);
    let min_margin = certificates.iter().map(PairCertificate::margin).fold(f64::INFINITY, f64::min);
    Ok(Certification { certificates, pass, min_margin })
}
