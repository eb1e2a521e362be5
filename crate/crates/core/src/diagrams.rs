//! Persistence diagrams and their p-Wasserstein distance.
//!
//! The distance is the cheapest partial matching, where unmatched points pay
//! their ℓ∞ distance to the diagonal. It is computed exactly by the usual
//! reduction to a square assignment problem: each diagram is padded with one
//! diagonal copy per point of the other diagram.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::assignment::{self, Backend, CostMatrix};
use crate::error::{check_p, Error, Result};
use crate::geometry::PlanePoint;

/// Largest diagram size accepted by [`oracle_wasserstein_pd`].
pub const PD_ORACLE_LIMIT: usize = 5;

/// A finite multiset of points `(birth, death)` with `birth < death`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawDiagram")]
pub struct PersistenceDiagram {
    points: Vec<PlanePoint>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDiagram {
    points: Vec<PlanePoint>,
}

impl TryFrom<RawDiagram> for PersistenceDiagram {
    type Error = Error;

    fn try_from(raw: RawDiagram) -> Result<Self> {
        PersistenceDiagram::new(raw.points)
    }
}

impl PersistenceDiagram {
    pub fn new(points: Vec<PlanePoint>) -> Result<Self> {
        if let Some((i, p)) = points.iter().enumerate().find(|(_, p)| p.x >= p.y) {
            return Err(Error::InvalidDiagram(format!(
                "point {i} = ({}, {}) does not satisfy birth < death",
                p.x, p.y
            )));
        }
        Ok(PersistenceDiagram { points })
    }

    /// Builds a diagram from `(birth, death)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let points = pairs
            .iter()
            .map(|&(b, d)| PlanePoint::new(b, d))
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    pub fn empty() -> Self {
        PersistenceDiagram::default()
    }

    pub fn points(&self) -> &[PlanePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Whether every point has multiplicity one.
    pub fn is_simple(&self) -> bool {
        let mut seen = HashSet::new();
        self.points.iter().all(|p| seen.insert(point_key(p)))
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.points.len().cmp(&other.points.len()).then_with(|| {
            self.points
                .iter()
                .zip(&other.points)
                .map(|(p, q)| p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
    }
}

fn point_key(p: &PlanePoint) -> (u64, u64) {
    // +0.0 and -0.0 are the same point.
    ((p.x + 0.0).to_bits(), (p.y + 0.0).to_bits())
}

/// A bijection between a subset of `D₁` and a subset of `D₂`, as index pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PartialMatching {
    pub matched: Vec<(usize, usize)>,
}

impl PartialMatching {
    pub fn new(matched: Vec<(usize, usize)>) -> Self {
        PartialMatching { matched }
    }

    pub fn validate(&self, d1: &PersistenceDiagram, d2: &PersistenceDiagram) -> Result<()> {
        let mut left = vec![false; d1.len()];
        let mut right = vec![false; d2.len()];
        for &(i, j) in &self.matched {
            if i >= d1.len() || j >= d2.len() {
                return Err(Error::InvalidMatching(format!(
                    "pair ({i}, {j}) is out of range for diagrams of sizes {} and {}",
                    d1.len(),
                    d2.len()
                )));
            }
            if std::mem::replace(&mut left[i], true) || std::mem::replace(&mut right[j], true) {
                return Err(Error::InvalidMatching(format!("index reused in pair ({i}, {j})")));
            }
        }
        Ok(())
    }

    pub fn transposed(&self) -> PartialMatching {
        let mut matched: Vec<_> = self.matched.iter().map(|&(i, j)| (j, i)).collect();
        matched.sort_unstable();
        PartialMatching { matched }
    }
}

/// The p-cost of a partial matching: matched pairs pay their ℓ∞ distance,
/// every other point its distance to the diagonal.
pub fn cost_p(
    m: &PartialMatching,
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    p: f64,
) -> Result<f64> {
    check_p(p)?;
    m.validate(d1, d2)?;
    Ok(cost_pow(m, d1, d2, p).powf(1.0 / p))
}

/// `cost_p^p`, summed as matched pairs, then unmatched points of `d1`, then
/// unmatched points of `d2`, each in index order.
fn cost_pow(m: &PartialMatching, d1: &PersistenceDiagram, d2: &PersistenceDiagram, p: f64) -> f64 {
    let mut left = vec![false; d1.len()];
    let mut right = vec![false; d2.len()];
    let mut total = 0.0;
    for &(i, j) in &m.matched {
        left[i] = true;
        right[j] = true;
        total += d1.points[i].linf_dist(&d2.points[j]).powf(p);
    }
    for (x, _) in d1.points.iter().zip(&left).filter(|(_, used)| !**used) {
        total += x.diagonal_distance().powf(p);
    }
    for (y, _) in d2.points.iter().zip(&right).filter(|(_, used)| !**used) {
        total += y.diagonal_distance().powf(p);
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdDistance {
    pub distance: f64,
    pub matching: PartialMatching,
}

/// Exact `W_p` between two diagrams and an optimal partial matching.
pub fn wasserstein_pd(d1: &PersistenceDiagram, d2: &PersistenceDiagram, p: f64) -> Result<PdDistance> {
    wasserstein_pd_with(d1, d2, p, Backend::Hungarian)
}

pub fn wasserstein_pd_with(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    p: f64,
    backend: Backend,
) -> Result<PdDistance> {
    check_p(p)?;
    if d1.canonical_cmp(d2) == Ordering::Greater {
        let r = wasserstein_pd_with(d2, d1, p, backend)?;
        return Ok(PdDistance { distance: r.distance, matching: r.matching.transposed() });
    }
    let matching = optimal_matching(d1, d2, p, backend)?;
    let distance = cost_pow(&matching, d1, d2, p).powf(1.0 / p);
    Ok(PdDistance { distance, matching })
}

/// Cost matrix of the diagonal-augmented assignment problem.
///
/// Rows `0..n` are the points `x_i` of `d1`, rows `n..n+m` diagonal copies of
/// the points of `d2`; columns `0..m` are the points `y_j` of `d2`, columns
/// `m..m+n` diagonal copies of the points of `d1`. Forbidden cells get a
/// finite sentinel, twice the sum of all admissible entries.
pub fn augmented_cost_matrix(d1: &PersistenceDiagram, d2: &PersistenceDiagram, p: f64) -> CostMatrix {
    let (n, m) = (d1.len(), d2.len());
    let diag1: Vec<f64> = d1.points.iter().map(|x| x.diagonal_distance().powf(p)).collect();
    let diag2: Vec<f64> = d2.points.iter().map(|y| y.diagonal_distance().powf(p)).collect();
    let pair = |i: usize, j: usize| d1.points[i].linf_dist(&d2.points[j]).powf(p);

    let mut finite_sum: f64 = diag1.iter().chain(&diag2).sum();
    for i in 0..n {
        for j in 0..m {
            finite_sum += pair(i, j);
        }
    }
    let forbidden = if finite_sum > 0.0 { 2.0 * finite_sum } else { 1.0 };

    CostMatrix::from_fn(n + m, |r, c| match (r < n, c < m) {
        (true, true) => pair(r, c),
        (true, false) => {
            if c - m == r {
                diag1[r]
            } else {
                forbidden
            }
        }
        (false, true) => {
            if r - n == c {
                diag2[c]
            } else {
                forbidden
            }
        }
        (false, false) => 0.0,
    })
}

fn optimal_matching(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    p: f64,
    backend: Backend,
) -> Result<PartialMatching> {
    let (n, m) = (d1.len(), d2.len());
    if n + m == 0 {
        return Ok(PartialMatching::default());
    }
    let costs = augmented_cost_matrix(d1, d2, p);
    let sol = assignment::solve(&costs, backend)?;
    let matched = sol
        .row_to_col
        .iter()
        .take(n)
        .enumerate()
        .filter(|&(_, &c)| c < m)
        .map(|(i, &c)| (i, c))
        .collect();
    Ok(PartialMatching { matched })
}

/// Exhaustive minimum of [`cost_p`] over every partial matching; the
/// reference for [`wasserstein_pd`] on small diagrams.
pub fn oracle_wasserstein_pd(d1: &PersistenceDiagram, d2: &PersistenceDiagram, p: f64) -> Result<f64> {
    check_p(p)?;
    let size = d1.len().max(d2.len());
    if size > PD_ORACLE_LIMIT {
        return Err(Error::OracleLimit { size, limit: PD_ORACLE_LIMIT });
    }

    // Each point of d1 is either left for the diagonal or paired with an
    // unused point of d2; the leftovers of d2 go to the diagonal.
    fn search(
        i: usize,
        d1: &[PlanePoint],
        d2: &[PlanePoint],
        used: &mut Vec<bool>,
        acc: f64,
        p: f64,
        best: &mut f64,
    ) {
        if i == d1.len() {
            let rest: f64 = d2
                .iter()
                .zip(used.iter())
                .filter(|(_, u)| !**u)
                .map(|(y, _)| y.diagonal_distance().powf(p))
                .sum();
            *best = best.min(acc + rest);
            return;
        }
        search(i + 1, d1, d2, used, acc + d1[i].diagonal_distance().powf(p), p, best);
        for j in 0..d2.len() {
            if !used[j] {
                used[j] = true;
                search(i + 1, d1, d2, used, acc + d1[i].linf_dist(&d2[j]).powf(p), p, best);
                used[j] = false;
            }
        }
    }

    let mut best = f64::INFINITY;
    search(0, &d1.points, &d2.points, &mut vec![false; d2.len()], 0.0, p, &mut best);
    Ok(best.powf(1.0 / p))
}

/// A diagram with repeated points pulled apart.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub diagram: PersistenceDiagram,
    /// Number of points that were moved.
    pub displaced: usize,
    /// Offset budget that was requested.
    pub delta: f64,
    /// Largest ℓ∞ offset actually applied.
    pub max_offset: f64,
    /// Whether some offset had to be reduced below its nominal value.
    pub shrunk: bool,
}

impl Perturbation {
    /// Bound on `W_p(original, perturbed)`: `(k · max_offset^p)^{1/p}`.
    pub fn distance_bound(&self, p: f64) -> f64 {
        if self.displaced == 0 {
            return 0.0;
        }
        (self.displaced as f64).powf(1.0 / p) * self.max_offset
    }
}

/// Moves every repeated copy of a point by a distinct offset of ℓ∞ size at
/// most `delta`, so that all points become distinct.
///
/// Copies move along `(−a, +a)`, which lengthens their lifetime and can
/// never reach the diagonal. The `k`-th extra copy of a point repeated `c`
/// times uses `a = δ·k/c`; if that lands on an existing point the offset is
/// halved until it does not.
pub fn perturb_to_multiplicity_one(d: &PersistenceDiagram, delta: f64) -> Result<Perturbation> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter(format!("perturbation size must be > 0, got {delta}")));
    }
    let mut occupied: HashSet<(u64, u64)> = d.points.iter().map(point_key).collect();
    let mut multiplicity: std::collections::HashMap<(u64, u64), usize> = Default::default();
    for p in &d.points {
        *multiplicity.entry(point_key(p)).or_default() += 1;
    }
    let mut seen: std::collections::HashMap<(u64, u64), usize> = Default::default();
    let mut points = Vec::with_capacity(d.len());
    let (mut displaced, mut max_offset, mut shrunk) = (0usize, 0.0f64, false);

    for p in &d.points {
        let key = point_key(p);
        let copy = seen.entry(key).or_default();
        let k = *copy;
        *copy += 1;
        if k == 0 {
            points.push(*p);
            continue;
        }
        let c = multiplicity[&key] as f64;
        let mut a = delta * k as f64 / c;
        let mut moved = None;
        for attempt in 0..64 {
            let candidate = PlanePoint { x: p.x - a, y: p.y + a };
            let offset = candidate.linf_dist(p);
            if offset > 0.0 && offset <= delta && occupied.insert(point_key(&candidate)) {
                shrunk |= attempt > 0;
                moved = Some((candidate, offset));
                break;
            }
            a *= 0.5;
        }
        let (q, offset) = moved.ok_or_else(|| {
            Error::InvalidParameter(format!(
                "cannot separate copies of ({}, {}) with offsets of size at most {delta}",
                p.x, p.y
            ))
        })?;
        points.push(q);
        displaced += 1;
        max_offset = max_offset.max(offset);
    }
    Ok(Perturbation {
        diagram: PersistenceDiagram::new(points)?,
        displaced,
        delta,
        max_offset,
        shrunk,
    })
}
