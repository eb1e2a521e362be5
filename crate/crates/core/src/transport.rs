//! Finitely supported probability measures on the plane and their exact
//! p-Wasserstein distance.
//!
//! A measure with rational weights is rewritten over a common denominator
//! `N` as `N` equally weighted atoms (with multiplicity). Between two such
//! uniform measures an optimal coupling is a permutation, so
//!
//! ```text
//! W_p(α, β)^p = min_σ (1/N) Σ_j ‖x_j − y_σ(j)‖∞^p
//! ```
//!
//! which is solved exactly as an assignment problem.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use itertools::Itertools;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::assignment::{self, Backend, CostMatrix};
use crate::error::{check_p, Error, Result};
use crate::geometry::{linf_diameter, PlanePoint};
use crate::rational::{
    common_denominator, format_rational, lcm_capped, parse_rational, snap_real, to_f64, Rational,
    DEFAULT_DENOMINATOR_CAP,
};

/// Tolerance on the total mass of real-valued weights.
pub const REAL_MASS_TOLERANCE: f64 = 1e-12;

/// A real weight counts as the fraction `p/q` only when it is within a few
/// ulps of it. Any looser and almost every float matches some fraction
/// below the denominator cap.
const SNAP_TOLERANCE: f64 = 8.0 * f64::EPSILON;

/// Largest `N` accepted by [`oracle_wasserstein_uniform`].
pub const UNIFORM_ORACLE_LIMIT: usize = 8;

/// Largest support size per side accepted by [`oracle_wasserstein_discrete`].
pub const DISCRETE_ORACLE_LIMIT: usize = 5;

/// Weight of one atom, either exact or a floating-point real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    Rational(Rational),
    Real(f64),
}

impl Weight {
    pub fn to_f64(&self) -> f64 {
        match self {
            Weight::Rational(r) => to_f64(r),
            Weight::Real(x) => *x,
        }
    }

    fn is_positive(&self) -> bool {
        match self {
            Weight::Rational(r) => *r > Rational::zero(),
            Weight::Real(x) => x.is_finite() && *x > 0.0,
        }
    }
}

impl Serialize for Weight {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Weight::Rational(r) => s.serialize_str(&format_rational(r)),
            Weight::Real(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Text(s) => parse_rational(&s).map(Weight::Rational).map_err(serde::de::Error::custom),
            Raw::Number(x) => Ok(Weight::Real(x)),
        }
    }
}

/// A finitely supported probability measure `Σ w_j δ_{x_j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure")]
pub struct DiscreteMeasure {
    atoms: Vec<PlanePoint>,
    weights: Vec<Weight>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasure {
    atoms: Vec<PlanePoint>,
    weights: Vec<Weight>,
}

impl TryFrom<RawMeasure> for DiscreteMeasure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        DiscreteMeasure::new(raw.atoms, raw.weights)
    }
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<PlanePoint>, weights: Vec<Weight>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("a measure needs at least one atom".into()));
        }
        if atoms.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_positive()) {
            return Err(Error::InvalidMeasure(format!("weight {i} is not strictly positive")));
        }
        let all_rational = weights.iter().all(|w| matches!(w, Weight::Rational(_)));
        if all_rational {
            let total: Rational = weights
                .iter()
                .map(|w| match w {
                    Weight::Rational(r) => *r,
                    Weight::Real(_) => unreachable!(),
                })
                .sum();
            if !total.is_one() {
                return Err(Error::InvalidMeasure(format!(
                    "rational weights sum to {}, not 1",
                    format_rational(&total)
                )));
            }
        } else {
            let total: f64 = weights.iter().map(Weight::to_f64).sum();
            if (total - 1.0).abs() > REAL_MASS_TOLERANCE {
                return Err(Error::InvalidMeasure(format!("weights sum to {total}, not 1")));
            }
        }
        Ok(DiscreteMeasure { atoms, weights })
    }

    pub fn from_rationals(atoms: Vec<PlanePoint>, weights: Vec<Rational>) -> Result<Self> {
        Self::new(atoms, weights.into_iter().map(Weight::Rational).collect())
    }

    pub fn from_reals(atoms: Vec<PlanePoint>, weights: Vec<f64>) -> Result<Self> {
        Self::new(atoms, weights.into_iter().map(Weight::Real).collect())
    }

    /// The Dirac mass at `x`.
    pub fn dirac(x: PlanePoint) -> Self {
        DiscreteMeasure { atoms: vec![x], weights: vec![Weight::Rational(Rational::one())] }
    }

    /// Uniform measure on a multiset of points, weights `1/n`.
    pub fn uniform(atoms: Vec<PlanePoint>) -> Result<Self> {
        let n = atoms.len() as i64;
        let w = vec![Rational::new(1, n.max(1)); atoms.len()];
        Self::from_rationals(atoms, w)
    }

    pub fn atoms(&self) -> &[PlanePoint] {
        &self.atoms
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_rational(&self) -> bool {
        self.weights.iter().all(|w| matches!(w, Weight::Rational(_)))
    }

    pub fn rational_weights(&self) -> Option<Vec<Rational>> {
        self.weights
            .iter()
            .map(|w| match w {
                Weight::Rational(r) => Some(*r),
                Weight::Real(_) => None,
            })
            .collect()
    }

    pub fn real_weights(&self) -> Vec<f64> {
        self.weights.iter().map(Weight::to_f64).collect()
    }

    /// Least common denominator of the weights. Real weights are first
    /// recovered as exact fractions; one that is not a fraction under the
    /// cap (up to rounding) is an error.
    pub fn common_denominator(&self, cap: u64) -> Result<u64> {
        common_denominator(&self.exact_weights(cap)?, cap)
    }

    /// Weights as exact rationals, recovering real weights that are
    /// fractions in disguise (such as `0.25`).
    pub fn exact_weights(&self, cap: u64) -> Result<Vec<Rational>> {
        if let Some(ws) = self.rational_weights() {
            return Ok(ws);
        }
        let snapped: Option<Vec<Rational>> = self
            .weights
            .iter()
            .map(|w| match w {
                Weight::Rational(r) => Some(*r),
                Weight::Real(x) => snap_real(*x, cap, SNAP_TOLERANCE),
            })
            .collect();
        match snapped {
            Some(ws) if ws.iter().copied().sum::<Rational>().is_one() => Ok(ws),
            _ => Err(Error::InvalidMeasure(
                "real weights are not exact fractions within the denominator cap; \
                 approximate them with rational_approx and an explicit denominator"
                    .into(),
            )),
        }
    }

    pub fn support_diameter(&self) -> f64 {
        linf_diameter(&self.atoms)
    }

    /// Pushforward by `x ↦ x + v`.
    pub fn translate(&self, dx: f64, dy: f64) -> DiscreteMeasure {
        DiscreteMeasure {
            atoms: self.atoms.iter().map(|a| a.translate(dx, dy)).collect(),
            weights: self.weights.clone(),
        }
    }

    /// Total order on measures used to make distance evaluation symmetric.
    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.atoms
            .len()
            .cmp(&other.atoms.len())
            .then_with(|| cmp_points(&self.atoms, &other.atoms))
            .then_with(|| {
                self.weights
                    .iter()
                    .zip(&other.weights)
                    .map(|(a, b)| a.to_f64().total_cmp(&b.to_f64()))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            })
    }
}

fn cmp_points(a: &[PlanePoint], b: &[PlanePoint]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        a.iter()
            .zip(b)
            .map(|(p, q)| p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// The dilated measure `λ_r(α) = Σ w_j δ_{r x_j}`.
pub fn dilate(m: &DiscreteMeasure, r: f64) -> Result<DiscreteMeasure> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParameter(format!("dilation factor must be > 0, got {r}")));
    }
    Ok(DiscreteMeasure {
        atoms: m.atoms.iter().map(|a| a.scale(r)).collect(),
        weights: m.weights.clone(),
    })
}

/// `N` atoms each carrying mass `1/N`. `origin[k]` is the index of the
/// atom of the source measure that copy `k` came from.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformMeasure {
    atoms: Vec<PlanePoint>,
    origin: Vec<usize>,
}

impl UniformMeasure {
    pub fn new(atoms: Vec<PlanePoint>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("a uniform measure needs N >= 1 atoms".into()));
        }
        let origin = (0..atoms.len()).collect();
        Ok(UniformMeasure { atoms, origin })
    }

    pub fn atoms(&self) -> &[PlanePoint] {
        &self.atoms
    }

    pub fn origin(&self) -> &[usize] {
        &self.origin
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dilate(&self, r: f64) -> Result<UniformMeasure> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidParameter(format!("dilation factor must be > 0, got {r}")));
        }
        Ok(UniformMeasure {
            atoms: self.atoms.iter().map(|a| a.scale(r)).collect(),
            origin: self.origin.clone(),
        })
    }

    /// The same measure as a [`DiscreteMeasure`] with one `1/N` weight per copy.
    pub fn to_discrete(&self) -> DiscreteMeasure {
        let w = Rational::new(1, self.atoms.len() as i64);
        DiscreteMeasure {
            atoms: self.atoms.clone(),
            weights: vec![Weight::Rational(w); self.atoms.len()],
        }
    }
}

/// Rewrites a rational measure as a uniform one over its least common
/// denominator.
pub fn uniformize(m: &DiscreteMeasure) -> Result<UniformMeasure> {
    uniformize_capped(m, DEFAULT_DENOMINATOR_CAP)
}

pub fn uniformize_capped(m: &DiscreteMeasure, cap: u64) -> Result<UniformMeasure> {
    let n = m.common_denominator(cap)?;
    uniformize_to(m, n, cap)
}

/// Uniformizes over a given denominator `n`, which must be a multiple of the
/// measure's own least common denominator.
pub fn uniformize_to(m: &DiscreteMeasure, n: u64, cap: u64) -> Result<UniformMeasure> {
    if n == 0 || n > cap {
        return Err(Error::DenominatorCap { denominator: n as u128, cap });
    }
    let weights = m.exact_weights(cap)?;
    let mut atoms = Vec::with_capacity(n as usize);
    let mut origin = Vec::with_capacity(n as usize);
    for (j, w) in weights.iter().enumerate() {
        let copies = *w * Rational::from_integer(n as i64);
        if !copies.is_integer() {
            return Err(Error::InvalidParameter(format!(
                "{n} is not a multiple of the denominator of weight {}",
                format_rational(w)
            )));
        }
        for _ in 0..copies.to_integer() {
            atoms.push(m.atoms[j]);
            origin.push(j);
        }
    }
    Ok(UniformMeasure { atoms, origin })
}

/// A transport plan over the atoms of the original measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    /// `(source atom, target atom, mass)`, sorted by indices.
    pub plan: Vec<(usize, usize, f64)>,
    /// Transport cost `Σ mass · ‖x − y‖∞^p`, i.e. `W_p^p` for an optimal plan.
    pub cost: f64,
}

impl Coupling {
    /// Largest deviation of the plan's marginals from the given weights.
    pub fn marginal_error(&self, source: &[f64], target: &[f64]) -> f64 {
        let mut rows = vec![0.0; source.len()];
        let mut cols = vec![0.0; target.len()];
        for &(i, j, mass) in &self.plan {
            rows[i] += mass;
            cols[j] += mass;
        }
        let row_err = rows.iter().zip(source).map(|(a, b)| (a - b).abs());
        let col_err = cols.iter().zip(target).map(|(a, b)| (a - b).abs());
        row_err.chain(col_err).fold(0.0, f64::max)
    }
}

/// Distance together with a realizing coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct Transport {
    pub distance: f64,
    pub coupling: Coupling,
}

#[derive(Debug, Clone, Copy)]
pub struct TransportOptions {
    pub denominator_cap: u64,
    pub backend: Backend,
}

impl Default for TransportOptions {
    fn default() -> Self {
        TransportOptions { denominator_cap: DEFAULT_DENOMINATOR_CAP, backend: Backend::Hungarian }
    }
}

/// Solves the permutation problem for `(a, b)`, returning the matched
/// copies and `Σ ‖·‖∞^p` over the optimal permutation.
fn solve_uniform(
    a: &UniformMeasure,
    b: &UniformMeasure,
    p: f64,
    backend: Backend,
) -> Result<(Vec<usize>, f64)> {
    check_p(p)?;
    if a.len() != b.len() {
        return Err(Error::SizeMismatch { left: a.len(), right: b.len() });
    }
    // Evaluate in a canonical orientation so that W(a, b) and W(b, a) are
    // computed by identical arithmetic.
    if cmp_points(&a.atoms, &b.atoms) == Ordering::Greater {
        let (perm, total) = solve_uniform(b, a, p, backend)?;
        let mut inverse = vec![0; perm.len()];
        for (i, &j) in perm.iter().enumerate() {
            inverse[j] = i;
        }
        return Ok((inverse, total));
    }
    let n = a.len();
    let costs = CostMatrix::from_fn(n, |i, j| a.atoms[i].linf_dist(&b.atoms[j]).powf(p));
    let sol = assignment::solve(&costs, backend)?;
    Ok((sol.row_to_col, sol.cost))
}

/// Exact `W_p` between uniform measures of equal size.
pub fn wasserstein_uniform(a: &UniformMeasure, b: &UniformMeasure, p: f64) -> Result<f64> {
    wasserstein_uniform_with(a, b, p, Backend::Hungarian)
}

pub fn wasserstein_uniform_with(
    a: &UniformMeasure,
    b: &UniformMeasure,
    p: f64,
    backend: Backend,
) -> Result<f64> {
    let (_, total) = solve_uniform(a, b, p, backend)?;
    Ok((total / a.len() as f64).powf(1.0 / p))
}

/// Exact `W_p` between rational measures, with an optimal coupling over the
/// original atoms.
pub fn wasserstein(a: &DiscreteMeasure, b: &DiscreteMeasure, p: f64) -> Result<Transport> {
    wasserstein_with(a, b, p, &TransportOptions::default())
}

pub fn wasserstein_with(
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    p: f64,
    opts: &TransportOptions,
) -> Result<Transport> {
    check_p(p)?;
    if a.canonical_cmp(b) == Ordering::Greater {
        let mut t = wasserstein_with(b, a, p, opts)?;
        for entry in &mut t.coupling.plan {
            *entry = (entry.1, entry.0, entry.2);
        }
        t.coupling.plan.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        return Ok(t);
    }
    let cap = opts.denominator_cap;
    let n = lcm_capped(a.common_denominator(cap)?, b.common_denominator(cap)?, cap)?;
    let ua = uniformize_to(a, n, cap)?;
    let ub = uniformize_to(b, n, cap)?;
    let (perm, total) = solve_uniform(&ua, &ub, p, opts.backend)?;

    let mut counts: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for (k, &l) in perm.iter().enumerate() {
        *counts.entry((ua.origin[k], ub.origin[l])).or_default() += 1;
    }
    let plan: Vec<_> = counts
        .into_iter()
        .map(|((i, j), c)| (i, j, c as f64 / n as f64))
        .collect();
    let cost = total / n as f64;
    Ok(Transport { distance: cost.powf(1.0 / p), coupling: Coupling { plan, cost } })
}

/// Result of snapping a measure's weights to multiples of `1/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalApprox {
    pub measure: DiscreteMeasure,
    pub denominator: u64,
    /// `½ Σ |w_j − w'_j|`, the mass that has to move.
    pub moved_mass: f64,
    /// ℓ∞ diameter of the original support.
    pub diameter: f64,
    /// Indices of atoms whose rounded weight was zero and were removed.
    pub dropped: Vec<usize>,
}

impl RationalApprox {
    /// Certified bound on `W_p(original, approximation)`: the moved mass
    /// travels at most one diameter.
    pub fn error_bound(&self, p: f64) -> f64 {
        if self.moved_mass == 0.0 {
            return 0.0;
        }
        self.moved_mass.powf(1.0 / p) * self.diameter
    }
}

/// Rounds weights to multiples of `1/denominator` by largest remainders,
/// keeping the total exactly one.
pub fn rational_approx(m: &DiscreteMeasure, denominator: u64) -> Result<RationalApprox> {
    if denominator == 0 || denominator > i64::MAX as u64 {
        return Err(Error::InvalidParameter(format!("bad denominator {denominator}")));
    }
    let n = denominator as i64;
    // Integer part and fractional remainder of w_j · N.
    let mut units: Vec<i64> = Vec::with_capacity(m.len());
    let mut remainders: Vec<f64> = Vec::with_capacity(m.len());
    for w in &m.weights {
        match w {
            Weight::Rational(r) => {
                let scaled = *r * Rational::from_integer(n);
                let floor = scaled.floor();
                units.push(floor.to_integer());
                remainders.push(to_f64(&(scaled - floor)));
            }
            Weight::Real(x) => {
                let scaled = x * n as f64;
                let nearest = scaled.round();
                let k = if (scaled - nearest).abs() < 1e-9 { nearest } else { scaled.floor() };
                units.push(k as i64);
                remainders.push((scaled - k).max(0.0));
            }
        }
    }
    let mut left = n - units.iter().sum::<i64>();
    let order: Vec<usize> = (0..m.len())
        .sorted_by(|&i, &j| remainders[j].total_cmp(&remainders[i]).then(i.cmp(&j)))
        .collect();
    let mut cursor = 0;
    while left > 0 {
        units[order[cursor % order.len()]] += 1;
        cursor += 1;
        left -= 1;
    }
    // Only reachable when real weights overshoot 1 by rounding.
    let mut cursor = order.len();
    while left < 0 && cursor > 0 {
        cursor -= 1;
        let j = order[cursor];
        if units[j] > 0 {
            units[j] -= 1;
            left += 1;
        }
    }

    let mut moved = 0.0;
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    let mut dropped = Vec::new();
    for (j, (&k, w)) in units.iter().zip(&m.weights).enumerate() {
        let approx = Rational::new(k, n);
        moved += match w {
            Weight::Rational(r) => to_f64(&(*r - approx)).abs(),
            Weight::Real(x) => (x - k as f64 / n as f64).abs(),
        };
        if k == 0 {
            dropped.push(j);
        } else {
            atoms.push(m.atoms[j]);
            weights.push(approx);
        }
    }
    Ok(RationalApprox {
        measure: DiscreteMeasure::from_rationals(atoms, weights)?,
        denominator,
        moved_mass: 0.5 * moved,
        diameter: m.support_diameter(),
        dropped,
    })
}

/// Brute force over all `N!` permutations; independent reference for
/// [`wasserstein_uniform`].
pub fn oracle_wasserstein_uniform(a: &UniformMeasure, b: &UniformMeasure, p: f64) -> Result<f64> {
    check_p(p)?;
    if a.len() != b.len() {
        return Err(Error::SizeMismatch { left: a.len(), right: b.len() });
    }
    let n = a.len();
    if n > UNIFORM_ORACLE_LIMIT {
        return Err(Error::OracleLimit { size: n, limit: UNIFORM_ORACLE_LIMIT });
    }
    let best = (0..n)
        .permutations(n)
        .map(|perm| {
            perm.iter()
                .enumerate()
                .map(|(i, &j)| a.atoms[i].linf_dist(&b.atoms[j]).powf(p))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    Ok((best / n as f64).powf(1.0 / p))
}

/// Exact `W_p` for measures with arbitrary real weights and at most
/// [`DISCRETE_ORACLE_LIMIT`] atoms each, by enumerating every basic
/// solution (spanning tree of the bipartite support graph) of the
/// transportation polytope.
pub fn oracle_wasserstein_discrete(a: &DiscreteMeasure, b: &DiscreteMeasure, p: f64) -> Result<f64> {
    check_p(p)?;
    let (n, m) = (a.len(), b.len());
    if n.max(m) > DISCRETE_ORACLE_LIMIT {
        return Err(Error::OracleLimit { size: n.max(m), limit: DISCRETE_ORACLE_LIMIT });
    }
    let supply = a.real_weights();
    let demand = b.real_weights();
    let cells: Vec<(usize, usize)> = (0..n).cartesian_product(0..m).collect();
    let cost = |(i, j): (usize, usize)| a.atoms[i].linf_dist(&b.atoms[j]).powf(p);

    let mut best = f64::INFINITY;
    for tree in cells.iter().copied().combinations(n + m - 1) {
        if let Some(flows) = tree_flows(&tree, n, m, &supply, &demand) {
            let total: f64 = tree.iter().zip(&flows).map(|(&c, f)| f * cost(c)).sum();
            best = best.min(total);
        }
    }
    Ok(best.max(0.0).powf(1.0 / p))
}

/// Flows on a spanning tree of `K_{n,m}` meeting the marginals, or `None`
/// when the edges contain a cycle or a flow is negative.
fn tree_flows(
    tree: &[(usize, usize)],
    n: usize,
    m: usize,
    supply: &[f64],
    demand: &[f64],
) -> Option<Vec<f64>> {
    // Nodes 0..n are sources, n..n+m targets.
    let mut parent: Vec<usize> = (0..n + m).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(i, j) in tree {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, n + j));
        if ri == rj {
            return None;
        }
        parent[ri] = rj;
    }

    let mut residual: Vec<f64> = supply.iter().chain(demand).copied().collect();
    let mut degree = vec![0usize; n + m];
    for &(i, j) in tree {
        degree[i] += 1;
        degree[n + j] += 1;
    }
    let mut flows = vec![f64::NAN; tree.len()];
    let mut remaining = tree.len();
    while remaining > 0 {
        let (e, leaf) = tree.iter().enumerate().find_map(|(e, &(i, j))| {
            if !flows[e].is_nan() {
                None
            } else if degree[i] == 1 {
                Some((e, i))
            } else if degree[n + j] == 1 {
                Some((e, n + j))
            } else {
                None
            }
        })?;
        let (i, j) = tree[e];
        let other = if leaf == i { n + j } else { i };
        let f = residual[leaf];
        if f < -1e-12 {
            return None;
        }
        flows[e] = f.max(0.0);
        residual[other] -= f;
        residual[leaf] = 0.0;
        degree[i] -= 1;
        degree[n + j] -= 1;
        remaining -= 1;
    }
    Some(flows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pt(x: f64, y: f64) -> PlanePoint {
        PlanePoint::new(x, y).unwrap()
    }

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn measure_validation() {
        assert!(DiscreteMeasure::from_rationals(vec![], vec![]).is_err());
        assert!(DiscreteMeasure::from_rationals(vec![pt(0.0, 0.0)], vec![q(1, 2)]).is_err());
        assert!(
            DiscreteMeasure::from_rationals(vec![pt(0.0, 0.0), pt(1.0, 1.0)], vec![q(0, 1), q(1, 1)])
                .is_err()
        );
        assert!(DiscreteMeasure::from_reals(vec![pt(0.0, 0.0), pt(1.0, 0.0)], vec![0.3, 0.7]).is_ok());
        assert!(DiscreteMeasure::from_reals(vec![pt(0.0, 0.0), pt(1.0, 0.0)], vec![0.3, 0.71]).is_err());
        // duplicate atoms are fine
        assert!(DiscreteMeasure::uniform(vec![pt(0.0, 0.0), pt(0.0, 0.0)]).is_ok());
    }

    #[test]
    fn measure_json() {
        let m: DiscreteMeasure =
            serde_json::from_str(r#"{"atoms": [[0,0],[1,0]], "weights": ["1/3", "2/3"]}"#).unwrap();
        assert_eq!(m.rational_weights().unwrap(), vec![q(1, 3), q(2, 3)]);
        assert_eq!(
            serde_json::to_string(&m).unwrap(),
            r#"{"atoms":[[0.0,0.0],[1.0,0.0]],"weights":["1/3","2/3"]}"#
        );
        let r: DiscreteMeasure =
            serde_json::from_str(r#"{"atoms": [[0,0],[1,0]], "weights": [0.25, 0.75]}"#).unwrap();
        assert!(!r.is_rational());
        assert!(serde_json::from_str::<DiscreteMeasure>(
            r#"{"atoms": [[0,0]], "weights": ["1/2"]}"#
        )
        .is_err());
        assert!(serde_json::from_str::<DiscreteMeasure>(r#"{"points": [[0,1]]}"#).is_err());
    }

    #[test]
    fn uniformize_examples() {
        let a = DiscreteMeasure::from_rationals(vec![pt(0.0, 0.0), pt(1.0, 0.0)], vec![q(1, 2), q(1, 2)])
            .unwrap();
        assert_eq!(uniformize(&a).unwrap().atoms(), &[pt(0.0, 0.0), pt(1.0, 0.0)]);

        let b = DiscreteMeasure::from_rationals(vec![pt(0.0, 0.0), pt(5.0, 5.0)], vec![q(2, 3), q(1, 3)])
            .unwrap();
        assert_eq!(uniformize(&b).unwrap().atoms(), &[pt(0.0, 0.0), pt(0.0, 0.0), pt(5.0, 5.0)]);

        let c = DiscreteMeasure::from_rationals(vec![pt(0.0, 0.0), pt(1.0, 1.0)], vec![q(3, 5), q(2, 5)])
            .unwrap();
        let u = uniformize(&c).unwrap();
        assert_eq!(u.len(), 5);
        assert_eq!(u.atoms().iter().filter(|&&x| x == pt(0.0, 0.0)).count(), 3);
        assert_eq!(u.origin(), &[0, 0, 0, 1, 1]);
    }

    #[test]
    fn uniformize_cap() {
        let m = DiscreteMeasure::from_rationals(
            vec![pt(0.0, 0.0), pt(1.0, 0.0)],
            vec![q(1, 1_000_003), q(1_000_002, 1_000_003)],
        )
        .unwrap();
        match uniformize(&m) {
            Err(Error::DenominatorCap { denominator, .. }) => assert_eq!(denominator, 1_000_003),
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn uniform_examples() {
        let a = UniformMeasure::new(vec![pt(0.0, 0.0)]).unwrap();
        let b = UniformMeasure::new(vec![pt(3.0, 4.0)]).unwrap();
        for p in [1.0, 1.5, 2.0, 3.0] {
            assert_relative_eq!(wasserstein_uniform(&a, &b, p).unwrap(), 4.0, max_relative = 1e-12);
            assert_eq!(wasserstein_uniform(&a, &a, p).unwrap(), 0.0);
        }
        // Both permutations cost ((1 + 1)/2)^(1/2) = 1 under ℓ∞.
        let a = UniformMeasure::new(vec![pt(0.0, 0.0), pt(1.0, 0.0)]).unwrap();
        let b = UniformMeasure::new(vec![pt(0.0, 1.0), pt(1.0, 1.0)]).unwrap();
        assert_relative_eq!(wasserstein_uniform(&a, &b, 2.0).unwrap(), 1.0, max_relative = 1e-12);

        let c = UniformMeasure::new(vec![pt(0.0, 0.0)]).unwrap();
        match wasserstein_uniform(&a, &c, 1.0) {
            Err(Error::SizeMismatch { left: 2, right: 1 }) => {}
            other => panic!("{other:?}"),
        }
        assert!(wasserstein_uniform(&a, &b, 0.5).is_err());
    }

    #[test]
    fn wasserstein_examples() {
        let a = DiscreteMeasure::dirac(pt(0.0, 0.0));
        let b = DiscreteMeasure::from_rationals(vec![pt(0.0, 0.0), pt(2.0, 0.0)], vec![q(1, 2), q(1, 2)])
            .unwrap();
        assert_eq!(wasserstein(&a, &a, 2.0).unwrap().distance, 0.0);
        let t1 = wasserstein(&a, &b, 1.0).unwrap();
        assert_relative_eq!(t1.distance, 1.0, max_relative = 1e-12);
        assert_relative_eq!(wasserstein(&a, &b, 2.0).unwrap().distance, 2f64.sqrt(), max_relative = 1e-12);
        assert_eq!(t1.coupling.plan, vec![(0, 0, 0.5), (0, 1, 0.5)]);
        assert!(t1.coupling.marginal_error(&a.real_weights(), &b.real_weights()) < 1e-9);

        let back = wasserstein(&b, &a, 1.0).unwrap();
        assert_eq!(back.distance, t1.distance);
        assert_eq!(back.coupling.plan, vec![(0, 0, 0.5), (1, 0, 0.5)]);
    }

    #[test]
    fn real_weights_need_exact_fractions() {
        let a = DiscreteMeasure::from_reals(vec![pt(0.0, 0.0), pt(2.0, 0.0)], vec![0.5, 0.5]).unwrap();
        let b = DiscreteMeasure::dirac(pt(0.0, 0.0));
        assert_relative_eq!(wasserstein(&a, &b, 1.0).unwrap().distance, 1.0, max_relative = 1e-12);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let irr = DiscreteMeasure::from_reals(vec![pt(0.0, 0.0), pt(2.0, 0.0)], vec![s, 1.0 - s]).unwrap();
        assert!(matches!(wasserstein(&irr, &b, 1.0), Err(Error::InvalidMeasure(_))));
    }

    #[test]
    fn common_denominator_cap_is_reported() {
        let a = DiscreteMeasure::from_rationals(
            vec![pt(0.0, 0.0), pt(1.0, 0.0)],
            vec![q(1, 999_983), q(999_982, 999_983)],
        )
        .unwrap();
        let b = DiscreteMeasure::from_rationals(
            vec![pt(0.0, 0.0), pt(1.0, 0.0)],
            vec![q(1, 999_979), q(999_978, 999_979)],
        )
        .unwrap();
        let err = wasserstein(&a, &b, 1.0).unwrap_err();
        assert!(matches!(err, Error::DenominatorCap { .. }));
        assert!(err.to_string().contains("rational_approx"));
    }

    #[test]
    fn dilate_examples() {
        let m = DiscreteMeasure::dirac(pt(1.0, 2.0));
        assert_eq!(dilate(&m, 1.0).unwrap(), m);
        assert_eq!(dilate(&m, 3.0).unwrap().atoms(), &[pt(3.0, 6.0)]);
        assert!(dilate(&m, 0.0).is_err());
        assert!(dilate(&m, -1.0).is_err());
    }

    #[test]
    fn rational_approx_examples() {
        let atoms = vec![pt(0.0, 0.0), pt(1.0, 0.0)];
        let half = DiscreteMeasure::from_rationals(atoms.clone(), vec![q(1, 2), q(1, 2)]).unwrap();
        let r = rational_approx(&half, 2).unwrap();
        assert_eq!(r.measure, half);
        assert_eq!(r.error_bound(2.0), 0.0);

        let m = DiscreteMeasure::from_reals(atoms.clone(), vec![0.6, 0.4]).unwrap();
        let r = rational_approx(&m, 5).unwrap();
        assert_eq!(r.measure.rational_weights().unwrap(), vec![q(3, 5), q(2, 5)]);
        assert_eq!(r.error_bound(1.0), 0.0);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let m = DiscreteMeasure::from_reals(atoms.clone(), vec![s, 1.0 - s]).unwrap();
        let r = rational_approx(&m, 100).unwrap();
        assert_eq!(r.measure.rational_weights().unwrap(), vec![q(71, 100), q(29, 100)]);
        assert!(r.dropped.is_empty());
        for p in [1.0, 2.0, 3.0] {
            let exact = oracle_wasserstein_discrete(&m, &r.measure, p).unwrap();
            assert!(exact <= r.error_bound(p), "p={p}: {exact} > {}", r.error_bound(p));
        }
    }

    #[test]
    fn rational_approx_drops_atoms() {
        let atoms = vec![pt(0.0, 0.0), pt(1.0, 0.0), pt(2.0, 0.0)];
        let m = DiscreteMeasure::from_reals(atoms, vec![0.1, 0.1, 0.8]).unwrap();
        let r = rational_approx(&m, 2).unwrap();
        assert_eq!(r.dropped, vec![0, 1]);
        assert_eq!(r.measure.len(), 1);
        assert!((r.moved_mass - 0.2).abs() < 1e-12);
    }

    #[test]
    fn oracle_examples_and_limits() {
        let a = UniformMeasure::new(vec![pt(0.0, 0.0)]).unwrap();
        let b = UniformMeasure::new(vec![pt(2.0, -1.0)]).unwrap();
        assert_eq!(oracle_wasserstein_uniform(&a, &b, 1.0).unwrap(), 2.0);
        assert_eq!(oracle_wasserstein_uniform(&a, &a, 3.0).unwrap(), 0.0);
        let big = UniformMeasure::new(vec![pt(0.0, 0.0); 9]).unwrap();
        assert!(matches!(
            oracle_wasserstein_uniform(&big, &big, 1.0),
            Err(Error::OracleLimit { size: 9, limit: 8 })
        ));
    }

    #[test]
    fn discrete_oracle_matches_hand_value() {
        let a = DiscreteMeasure::dirac(pt(0.0, 0.0));
        let b = DiscreteMeasure::from_reals(vec![pt(0.0, 0.0), pt(2.0, 0.0)], vec![0.5, 0.5]).unwrap();
        assert_relative_eq!(oracle_wasserstein_discrete(&a, &b, 1.0).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(
            oracle_wasserstein_discrete(&a, &b, 2.0).unwrap(),
            2f64.sqrt(),
            max_relative = 1e-12
        );
    }
}
