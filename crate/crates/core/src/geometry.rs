//! Plane geometry under the ℓ∞ norm, finite metric spaces, snowflakes and
//! distortion of maps between finite metric spaces.
//!
//! All constructions in this crate measure planar distances with ℓ∞. An ℓq
//! evaluator is available through [`PlanePoint::lq_dist`] for experiments, but
//! no guarantee elsewhere in the crate refers to it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute slack allowed when validating the triangle inequality.
pub const TRIANGLE_TOLERANCE: f64 = 1e-9;

/// A point of the plane. Coordinates are always finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl TryFrom<[f64; 2]> for PlanePoint {
    type Error = Error;

    fn try_from([x, y]: [f64; 2]) -> Result<Self> {
        PlanePoint::new(x, y)
    }
}

impl From<PlanePoint> for [f64; 2] {
    fn from(p: PlanePoint) -> Self {
        [p.x, p.y]
    }
}

impl PlanePoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if x.is_finite() && y.is_finite() {
            Ok(PlanePoint { x, y })
        } else {
            Err(Error::NonFinitePoint { x, y })
        }
    }

    /// ℓ∞ distance `max(|Δx|, |Δy|)`.
    #[inline]
    pub fn linf_dist(&self, other: &PlanePoint) -> f64 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    /// ℓq distance for `q >= 1`; `q = ∞` is accepted and equals [`Self::linf_dist`].
    pub fn lq_dist(&self, other: &PlanePoint, q: f64) -> Result<f64> {
        if q.is_nan() || q < 1.0 {
            return Err(Error::InvalidParameter(format!("q must be >= 1, got {q}")));
        }
        if q.is_infinite() {
            return Ok(self.linf_dist(other));
        }
        let dx = (self.x - other.x).abs();
        let dy = (self.y - other.y).abs();
        Ok((dx.powf(q) + dy.powf(q)).powf(1.0 / q))
    }

    /// Closest point of the diagonal under ℓ∞, `((x+y)/2, (x+y)/2)`.
    #[inline]
    pub fn diagonal_projection(&self) -> PlanePoint {
        let mid = 0.5 * (self.x + self.y);
        PlanePoint { x: mid, y: mid }
    }

    /// ℓ∞ distance to the diagonal, `|y - x| / 2`.
    #[inline]
    pub fn diagonal_distance(&self) -> f64 {
        self.linf_dist(&self.diagonal_projection())
    }

    #[inline]
    pub fn translate(&self, dx: f64, dy: f64) -> PlanePoint {
        PlanePoint { x: self.x + dx, y: self.y + dy }
    }

    #[inline]
    pub fn scale(&self, r: f64) -> PlanePoint {
        PlanePoint { x: self.x * r, y: self.y * r }
    }
}

/// ℓ∞ distance between two points.
#[inline]
pub fn linf_dist(p: &PlanePoint, q: &PlanePoint) -> f64 {
    p.linf_dist(q)
}

#[inline]
pub fn diagonal_projection(p: &PlanePoint) -> PlanePoint {
    p.diagonal_projection()
}

#[inline]
pub fn diagonal_distance(p: &PlanePoint) -> f64 {
    p.diagonal_distance()
}

/// ℓ∞ diameter of a point set; zero for fewer than two points.
pub fn linf_diameter(points: &[PlanePoint]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in points {
        x_lo = x_lo.min(p.x);
        x_hi = x_hi.max(p.x);
        y_lo = y_lo.min(p.y);
        y_hi = y_hi.max(p.y);
    }
    (x_hi - x_lo).max(y_hi - y_lo)
}

/// A finite metric space given by its full distance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMetricSpace")]
pub struct FiniteMetricSpace {
    n: usize,
    dist: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawMetricSpace {
    n: usize,
    dist: Vec<Vec<f64>>,
}

impl TryFrom<RawMetricSpace> for FiniteMetricSpace {
    type Error = Error;

    fn try_from(raw: RawMetricSpace) -> Result<Self> {
        if raw.dist.len() != raw.n {
            return Err(Error::InvalidMetric(format!(
                "n = {} but the matrix has {} rows",
                raw.n,
                raw.dist.len()
            )));
        }
        FiniteMetricSpace::new(raw.dist)
    }
}

impl FiniteMetricSpace {
    /// Builds a space and validates every metric axiom, including the
    /// triangle inequality up to [`TRIANGLE_TOLERANCE`].
    pub fn new(dist: Vec<Vec<f64>>) -> Result<Self> {
        let space = Self::new_unchecked(dist)?;
        space.validate_triangle()?;
        Ok(space)
    }

    /// Checks shape, symmetry, zero diagonal and positivity but skips the
    /// O(n³) triangle check.
    pub fn new_unchecked(dist: Vec<Vec<f64>>) -> Result<Self> {
        let n = dist.len();
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMetric(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, &d) in row.iter().enumerate() {
                if !d.is_finite() {
                    return Err(Error::InvalidMetric(format!("d({i},{j}) is not finite")));
                }
                if i == j && d != 0.0 {
                    return Err(Error::InvalidMetric(format!("d({i},{i}) = {d} is not zero")));
                }
                if i != j && d <= 0.0 {
                    return Err(Error::InvalidMetric(format!(
                        "d({i},{j}) = {d} must be positive for distinct points"
                    )));
                }
                if d != dist[j][i] {
                    return Err(Error::InvalidMetric(format!(
                        "d({i},{j}) = {d} differs from d({j},{i}) = {}",
                        dist[j][i]
                    )));
                }
            }
        }
        Ok(FiniteMetricSpace { n, dist })
    }

    /// Metric space induced by ℓ∞ on a set of pairwise distinct points.
    pub fn from_points(points: &[PlanePoint]) -> Result<Self> {
        let dist = points
            .iter()
            .map(|p| points.iter().map(|q| p.linf_dist(q)).collect())
            .collect();
        Self::new(dist)
    }

    fn validate_triangle(&self) -> Result<()> {
        let d = &self.dist;
        for i in 0..self.n {
            for j in 0..self.n {
                for k in 0..self.n {
                    if d[i][k] > d[i][j] + d[j][k] + TRIANGLE_TOLERANCE {
                        return Err(Error::InvalidMetric(format!(
                            "triangle inequality fails: d({i},{k}) = {} > d({i},{j}) + d({j},{k}) = {}",
                            d[i][k],
                            d[i][j] + d[j][k]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.dist
    }

    /// Smallest distance between distinct points, `None` when `n < 2`.
    pub fn min_positive_distance(&self) -> Option<f64> {
        self.pairs().map(|(i, j)| self.dist[i][j]).reduce(f64::min)
    }

    /// All index pairs `(i, j)` with `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| (i + 1..self.n).map(move |j| (i, j)))
    }

    /// The θ-snowflake `(X, d^θ)` for `0 < θ <= 1`.
    pub fn snowflake(&self, theta: f64) -> Result<FiniteMetricSpace> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "snowflake exponent must lie in (0, 1], got {theta}"
            )));
        }
        if theta == 1.0 {
            return Ok(self.clone());
        }
        let dist = self
            .dist
            .iter()
            .map(|row| row.iter().map(|d| d.powf(theta)).collect())
            .collect();
        FiniteMetricSpace::new(dist)
    }
}

pub fn snowflake(space: &FiniteMetricSpace, theta: f64) -> Result<FiniteMetricSpace> {
    space.snowflake(theta)
}

/// A map between finite metric spaces, `assignment[i]` being the image of
/// domain point `i`.
#[derive(Debug, Clone)]
pub struct PointMap {
    pub domain: FiniteMetricSpace,
    pub codomain: FiniteMetricSpace,
    pub assignment: Vec<usize>,
}

impl PointMap {
    pub fn new(
        domain: FiniteMetricSpace,
        codomain: FiniteMetricSpace,
        assignment: Vec<usize>,
    ) -> Result<Self> {
        if assignment.len() != domain.len() {
            return Err(Error::InvalidParameter(format!(
                "assignment covers {} points but the domain has {}",
                assignment.len(),
                domain.len()
            )));
        }
        if let Some(&bad) = assignment.iter().find(|&&k| k >= codomain.len()) {
            return Err(Error::InvalidParameter(format!(
                "assignment target {bad} is outside the codomain of size {}",
                codomain.len()
            )));
        }
        Ok(PointMap { domain, codomain, assignment })
    }

    /// `other ∘ self`: first `self`, then `other`.
    pub fn then(&self, other: &PointMap) -> Result<PointMap> {
        if self.codomain != other.domain {
            return Err(Error::InvalidParameter(
                "maps are not composable: codomain and domain differ".into(),
            ));
        }
        let assignment = self.assignment.iter().map(|&k| other.assignment[k]).collect();
        PointMap::new(self.domain.clone(), other.codomain.clone(), assignment)
    }

    /// Ratios `d_cod(f(i), f(j)) / d_dom(i, j)` over all pairs `i < j`.
    pub fn ratios(&self) -> Vec<f64> {
        self.domain
            .pairs()
            .map(|(i, j)| {
                self.codomain.dist(self.assignment[i], self.assignment[j]) / self.domain.dist(i, j)
            })
            .collect()
    }
}

/// Summary of the pairwise expansion ratios of a map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistortionSummary {
    /// Optimal scale `s`: the smallest ratio.
    pub scale: f64,
    pub max_ratio: f64,
    /// `max_ratio / scale`, or `+∞` if some pair collapses.
    pub distortion: f64,
}

/// Distortion of a map between finite metric spaces. A map collapsing two
/// distinct points has distortion `+∞`.
pub fn distortion(map: &PointMap) -> Result<f64> {
    distortion_summary(map).map(|s| s.distortion)
}

pub fn distortion_summary(map: &PointMap) -> Result<DistortionSummary> {
    if map.domain.len() < 2 {
        return Err(Error::InvalidParameter(
            "distortion needs a domain with at least two points".into(),
        ));
    }
    let ratios = map.ratios();
    let scale = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let distortion = if scale == 0.0 { f64::INFINITY } else { max_ratio / scale };
    Ok(DistortionSummary { scale, max_ratio, distortion })
}
