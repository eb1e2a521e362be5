use std::collections::HashSet;

use crate::assignment::{solve_sparse, SparseCosts};
use crate::diagrams::{perturb_to_multiplicity_one, PersistenceDiagram};
use crate::error::{check_p, Error, Result};
use crate::geometry::PlanePoint;
use crate::transport::UniformMeasure;

use super::{Direction, EmbeddingResult, GridParams, Images, Params, PerturbationRecord};

/// Default cap on the grid resolution search.
pub const DEFAULT_S_CAP: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    pub s_cap: u64,
    /// Refuse families whose supports would exceed this many atoms.
    pub max_support: Option<usize>,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions { s_cap: DEFAULT_S_CAP, max_support: None }
    }
}

fn thresholds_hold(s: u64, n: usize, n_min: usize, spread: f64, p: f64, eps: f64) -> bool {
    let h = n as f64 * spread / s as f64;
    let hp = h.powf(p);
    let budget = eps.powf(p) / 3.0;
    n as f64 * hp < budget && (s + 1 + (n - n_min) as u64) as f64 * hp < budget
}

/// Smallest `s > n` satisfying both grid thresholds, where `spread = M − m`.
///
/// Both threshold terms decrease in `s` when `p > 1`, so the predicate is
/// monotone and a galloping search followed by bisection finds the same `s`
/// as a linear scan.
pub fn grid_resolution(n: usize, n_min: usize, spread: f64, p: f64, eps: f64, cap: u64) -> Result<u64> {
    check_grid_args(n, n_min, spread, p, eps)?;
    let lo = n as u64 + 1;
    if spread == 0.0 || thresholds_hold(lo, n, n_min, spread, p, eps) {
        return Ok(lo);
    }
    let (mut bad, mut good) = (lo, lo);
    loop {
        if good >= cap {
            return Err(Error::SearchCap { what: "grid resolution", cap });
        }
        good = good.saturating_mul(2).min(cap);
        if thresholds_hold(good, n, n_min, spread, p, eps) {
            break;
        }
        bad = good;
    }
    while good - bad > 1 {
        let mid = bad + (good - bad) / 2;
        if thresholds_hold(mid, n, n_min, spread, p, eps) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good)
}

/// Same answer as [`grid_resolution`] by checking every `s` in turn.
pub fn grid_resolution_by_scan(n: usize, n_min: usize, spread: f64, p: f64, eps: f64, cap: u64) -> Result<u64> {
    check_grid_args(n, n_min, spread, p, eps)?;
    let lo = n as u64 + 1;
    if spread == 0.0 {
        return Ok(lo);
    }
    (lo..=cap)
        .find(|&s| thresholds_hold(s, n, n_min, spread, p, eps))
        .ok_or(Error::SearchCap { what: "grid resolution", cap })
}

fn check_grid_args(n: usize, n_min: usize, spread: f64, p: f64, eps: f64) -> Result<()> {
    if p.is_nan() || p <= 1.0 {
        return Err(Error::GridRequiresPGreaterThanOne(p));
    }
    check_p(p)?;
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be > 0, got {eps}")));
    }
    if !(spread.is_finite() && spread >= 0.0) {
        return Err(Error::InvalidParameter(format!("projection spread must be >= 0, got {spread}")));
    }
    if n_min > n {
        return Err(Error::InvalidParameter("smallest diagram larger than largest".into()));
    }
    Ok(())
}

/// Sends diagrams to uniform measures with `d ≤ d' ≤ d + eps`, for `p > 1`.
pub fn diagrams_to_measures_quasi(diagrams: &[PersistenceDiagram], p: f64, eps: f64) -> Result<EmbeddingResult> {
    diagrams_to_measures_quasi_with(diagrams, p, eps, GridOptions::default())
}

/// Repeated points are first pulled apart, each diagram by at most `eps/6`
/// in `W_p`. The remaining `2·eps/3` drives the grid. Each image is the
/// uniform measure on the diagram points, followed by the shared diagonal
/// grid `t = 0..=s`, followed by the private grid `t = s+1..=s+N−N_i`, all
/// dilated by `(N + s + 1)^{1/p}`.
pub fn diagrams_to_measures_quasi_with(
    diagrams: &[PersistenceDiagram],
    p: f64,
    eps: f64,
    options: GridOptions,
) -> Result<EmbeddingResult> {
    if p.is_nan() || p <= 1.0 {
        return Err(Error::GridRequiresPGreaterThanOne(p));
    }
    check_p(p)?;
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be > 0, got {eps}")));
    }
    if diagrams.iter().all(PersistenceDiagram::is_empty) {
        return Err(Error::InvalidParameter(
            "grid construction needs at least one off-diagonal point in the family".into(),
        ));
    }

    let eps_perturbation = eps / 3.0;
    let eps_grid = eps - eps_perturbation;
    let mut perturbed = Vec::with_capacity(diagrams.len());
    let mut perturbations = Vec::with_capacity(diagrams.len());
    for d in diagrams {
        let repeats = d.len() - distinct_points(d);
        if repeats == 0 {
            perturbed.push(d.clone());
            perturbations.push(PerturbationRecord { displaced: 0, max_offset: 0.0, distance_bound: 0.0 });
            continue;
        }
        let delta = (eps_perturbation / 2.0) / (repeats as f64).powf(1.0 / p);
        let pert = perturb_to_multiplicity_one(d, delta)?;
        perturbations.push(PerturbationRecord {
            displaced: pert.displaced,
            max_offset: pert.max_offset,
            distance_bound: pert.distance_bound(p),
        });
        perturbed.push(pert.diagram);
    }

    let sizes: Vec<usize> = perturbed.iter().map(PersistenceDiagram::len).collect();
    let n = *sizes.iter().max().unwrap_or(&0);
    let n_min = *sizes.iter().min().unwrap_or(&0);
    let (mut lowest, mut highest) = (f64::INFINITY, f64::NEG_INFINITY);
    for q in perturbed.iter().flat_map(|d| d.points()) {
        let c = (q.x + q.y) / 2.0;
        lowest = lowest.min(c);
        highest = highest.max(c);
    }
    let spread = highest - lowest;
    let s = grid_resolution(n, n_min, spread, p, eps_grid, options.s_cap)?;
    let support = n as u64 + s + 1;
    if let Some(max) = options.max_support {
        if support > max as u64 {
            return Err(Error::SearchCap { what: "grid support size", cap: max as u64 });
        }
    }
    let support = support as usize;
    let spacing = spread / s as f64;
    let dilation = (support as f64).powf(1.0 / p);

    let images = perturbed
        .iter()
        .map(|d| {
            let grid_len = support - d.len();
            let mut atoms = Vec::with_capacity(support);
            atoms.extend(d.points().iter().map(|q| q.scale(dilation)));
            atoms.extend((0..grid_len).map(|t| {
                let c = (lowest + t as f64 * spacing) * dilation;
                PlanePoint { x: c, y: c }
            }));
            UniformMeasure::new(atoms)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(EmbeddingResult {
        direction: Direction::Pd2ot,
        params: Params::Grid(GridParams {
            p,
            eps,
            eps_perturbation,
            eps_grid,
            perturbations,
            extra_grid_lens: sizes.iter().map(|&k| n - k).collect(),
            sizes,
            max_size: n,
            lowest_projection: lowest,
            highest_projection: highest,
            resolution: s,
            spacing,
            shared_grid_len: s as usize + 1,
            support_size: support,
            dilation,
        }),
        images: Images::Measures(images),
    })
}

fn distinct_points(d: &PersistenceDiagram) -> usize {
    d.points()
        .iter()
        .map(|q| ((q.x + 0.0).to_bits(), (q.y + 0.0).to_bits()))
        .collect::<HashSet<_>>()
        .len()
}

/// Exact `W_p` between two grid images, whose atoms are `na` (resp. `nb`)
/// diagram points followed by diagonal grid points in increasing order.
///
/// Some optimal matching sends the leftover grid points of one image to
/// those of the other in increasing order, which shifts grid indices by at
/// most `max(na, nb)`. Grid-to-grid edges outside that window are dropped
/// and the remaining sparse instance is solved exactly.
pub fn windowed_grid_distance(a: &UniformMeasure, na: usize, b: &UniformMeasure, nb: usize, p: f64) -> Result<f64> {
    check_p(p)?;
    if a.len() != b.len() {
        return Err(Error::SizeMismatch { left: a.len(), right: b.len() });
    }
    let k = a.len();
    if na > k || nb > k {
        return Err(Error::InvalidParameter("diagram prefix longer than the support".into()));
    }
    let (xa, xb) = (a.atoms(), b.atoms());
    let window = na.max(nb);
    let cost = |r: usize, c: usize| xa[r].linf_dist(&xb[c]).powf(p);
    let mut sparse = SparseCosts::new(k);
    for r in 0..k {
        if r < na {
            for c in 0..k {
                sparse.add_edge(r, c, cost(r, c));
            }
            continue;
        }
        for c in 0..nb {
            sparse.add_edge(r, c, cost(r, c));
        }
        let t = r - na;
        let lo = (t.saturating_sub(window) + nb).max(nb);
        let hi = (t + window + nb).min(k - 1);
        for c in lo..=hi {
            sparse.add_edge(r, c, cost(r, c));
        }
    }
    let assignment = solve_sparse(&sparse)?;
    Ok((assignment.cost / k as f64).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagrams::wasserstein_pd;
    use crate::transport::wasserstein_uniform;

    fn pd(pairs: &[(f64, f64)]) -> PersistenceDiagram {
        PersistenceDiagram::from_pairs(pairs).unwrap()
    }

    fn grid(r: &EmbeddingResult) -> &GridParams {
        match &r.params {
            Params::Grid(g) => g,
            _ => panic!("expected grid params"),
        }
    }

    #[test]
    fn resolution_regression_anchor() {
        let scan = grid_resolution_by_scan(2, 0, 1.0, 2.0, 0.1, 1_000_000).unwrap();
        assert_eq!(scan, 1203);
        assert_eq!(grid_resolution(2, 0, 1.0, 2.0, 0.1, DEFAULT_S_CAP).unwrap(), 1203);
    }

    #[test]
    fn search_matches_scan() {
        for &(n, n_min) in &[(1, 0), (1, 1), (3, 1), (4, 4), (7, 2)] {
            for &spread in &[0.0, 0.01, 0.7, 2.5] {
                for &p in &[1.1, 1.5, 2.0, 3.0] {
                    for &eps in &[0.05, 0.3, 1.0] {
                        let fast = grid_resolution(n, n_min, spread, p, eps, 10_000_000);
                        let slow = grid_resolution_by_scan(n, n_min, spread, p, eps, 10_000_000);
                        assert_eq!(fast, slow, "n={n} n_min={n_min} spread={spread} p={p} eps={eps}");
                    }
                }
            }
        }
    }

    #[test]
    fn resolution_cap_and_p_check() {
        assert_eq!(
            grid_resolution(2, 0, 1.0, 2.0, 0.1, 500),
            Err(Error::SearchCap { what: "grid resolution", cap: 500 })
        );
        assert_eq!(grid_resolution(2, 0, 1.0, 1.0, 0.1, 500), Err(Error::GridRequiresPGreaterThanOne(1.0)));
        let err = diagrams_to_measures_quasi(&[pd(&[(0.0, 1.0)])], 1.0, 0.1).unwrap_err();
        assert!(err.to_string().contains("p > 1"), "{err}");
    }

    #[test]
    fn collapsed_projections_use_smallest_resolution() {
        // Both points project to (1, 1).
        let ds = vec![pd(&[(0.0, 2.0)]), pd(&[(0.5, 1.5)])];
        let r = diagrams_to_measures_quasi(&ds, 2.0, 0.1).unwrap();
        let g = grid(&r);
        assert_eq!(g.resolution, 2);
        assert_eq!(g.support_size, 4);
        let d = wasserstein_pd(&ds[0], &ds[1], 2.0).unwrap().distance;
        let image = r.image_distance(0, 1).unwrap();
        assert!(d - 1e-9 <= image && image <= d + 0.1, "{d} {image}");
    }

    #[test]
    fn cardinalities_and_bounds() {
        let ds = vec![pd(&[(0.0, 1.0), (0.5, 2.0)]), pd(&[(0.2, 0.9)]), PersistenceDiagram::empty()];
        let r = diagrams_to_measures_quasi(&ds, 2.0, 0.5).unwrap();
        let g = grid(&r);
        assert_eq!(g.max_size, 2);
        assert_eq!(g.shared_grid_len as u64, g.resolution + 1);
        assert_eq!(g.extra_grid_lens, vec![0, 1, 2]);
        let Images::Measures(ms) = &r.images else { panic!() };
        for (m, &k) in ms.iter().zip(&g.sizes) {
            assert_eq!(m.len(), g.support_size);
            assert_eq!(m.len(), k + g.shared_grid_len + (g.max_size - k));
        }
        for i in 0..3 {
            for j in 0..3 {
                let d = wasserstein_pd(&ds[i], &ds[j], 2.0).unwrap().distance;
                let image = r.image_distance(i, j).unwrap();
                let (lo, hi) = r.bounds(i, j, d);
                assert!(lo - 1e-9 <= image && image <= hi + 1e-9, "({i},{j}): {lo} {image} {hi}");
                assert!(hi <= d + 0.5 + 1e-12);
            }
        }
    }

    #[test]
    fn windowed_distance_matches_dense() {
        let ds = vec![
            pd(&[(0.0, 1.0), (0.3, 0.5), (0.1, 0.9)]),
            pd(&[(0.6, 1.0)]),
            pd(&[(0.2, 0.8), (0.2, 0.8)]),
            PersistenceDiagram::empty(),
        ];
        for p in [1.5, 2.0, 3.0] {
            let r = diagrams_to_measures_quasi(&ds, p, 1.5).unwrap();
            let g = grid(&r);
            assert!(g.support_size < 400, "support {}", g.support_size);
            let Images::Measures(ms) = &r.images else { panic!() };
            for i in 0..ds.len() {
                for j in 0..ds.len() {
                    let dense = wasserstein_uniform(&ms[i], &ms[j], p).unwrap();
                    let sparse = r.image_distance(i, j).unwrap();
                    assert!((dense - sparse).abs() <= 1e-9 * dense.max(1.0), "p={p} ({i},{j}): {dense} vs {sparse}");
                }
            }
        }
    }

    #[test]
    fn repeated_points_are_separated_within_budget() {
        let ds = vec![pd(&[(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)]), pd(&[(0.5, 1.0)])];
        let eps = 0.3;
        let r = diagrams_to_measures_quasi(&ds, 2.0, eps).unwrap();
        let g = grid(&r);
        assert_eq!(g.perturbations[0].displaced, 2);
        assert!(g.perturbations[0].distance_bound <= eps / 6.0 + 1e-15);
        assert_eq!(g.perturbations[1].displaced, 0);
        let d = wasserstein_pd(&ds[0], &ds[1], 2.0).unwrap().distance;
        let image = r.image_distance(0, 1).unwrap();
        let (lo, hi) = r.bounds(0, 1, d);
        assert!(lo <= image && image <= hi && hi <= d + eps, "{lo} {image} {hi}");
    }

    #[test]
    fn empty_family_is_rejected() {
        assert!(diagrams_to_measures_quasi(&[], 2.0, 0.1).is_err());
        assert!(diagrams_to_measures_quasi(&[PersistenceDiagram::empty()], 2.0, 0.1).is_err());
    }
}
