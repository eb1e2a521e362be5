//! Numerical check of the snowflake composition argument.
//!
//! A finite space `W` is snowflaked to `W^θ` and sent through two stages:
//!
//! 1. an embedding `f` into diagram space with scale `k₁` and distortion
//!    `1 + ε₁`: `W^θ` is placed isometrically in the ℓ∞ plane, its points
//!    become Dirac measures and those go through the isometric
//!    measures-to-diagrams construction;
//! 2. the grid construction `g` from diagrams back to measures, with
//!    additive error `ε₂`.
//!
//! When `ε₁ < δ/2` and `ε₂ < δ·k₁·M/2` (with `M` the smallest distance in
//! `W^θ`) the distortion of `g ∘ f` is at most `(1+δ)/(1−δ)`.

use anyhow::{bail, ensure, Result};
use serde::{Deserialize, Serialize};
use wpd_core::diagrams::wasserstein_pd;
use wpd_core::embeddings::{diagrams_to_measures_quasi_with, measures_to_diagrams_isometric, GridOptions, Images, Params};
use wpd_core::geometry::{distortion, distortion_summary, FiniteMetricSpace, PlanePoint, PointMap};
use wpd_core::rational::DEFAULT_DENOMINATOR_CAP;
use wpd_core::transport::DiscreteMeasure;

/// How `ε₂` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum EpsSchedule {
    /// `ε₂ = f · δ·k₁·M/2`; certified when `f < 1`.
    Fraction(f64),
    /// A fixed `ε₂`, certified only if it happens to be small enough.
    Absolute(f64),
    /// Skip the second stage (`ε₂ = 0`, `g` the identity).
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnowflakeConfig {
    pub theta: f64,
    pub p: f64,
    pub delta: f64,
    pub schedule: EpsSchedule,
    /// Largest grid support the second stage may build.
    pub max_support: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnowflakeOutcome {
    pub config: SnowflakeConfig,
    /// `M`, the smallest distance in `W^θ`.
    pub min_distance: f64,
    pub k1: f64,
    pub eps1: f64,
    pub eps2: f64,
    /// `δ·k₁·M/2`.
    pub eps2_limit: f64,
    pub grid_resolution: Option<u64>,
    pub measured_distortion: f64,
    /// `(1+δ)/(1−δ)`.
    pub bound: f64,
    /// Whether the schedule meets `ε₁ < δ/2` and `ε₂ < δ·k₁·M/2`.
    pub certified: bool,
    pub within_bound: bool,
    pub skipped: Option<String>,
}

impl SnowflakeOutcome {
    /// A certified run must stay within the bound; uncertified runs are
    /// reported but not judged.
    pub fn pass(&self) -> bool {
        self.skipped.is_some() || !self.certified || self.within_bound
    }
}

/// Isometric placement of a small metric space in the ℓ∞ plane, if one
/// exists.
///
/// Every pair picks the coordinate and sign that realize its distance. Each
/// choice gives two independent systems of difference constraints (one per
/// coordinate), solved by Bellman–Ford. Tries all `4^{n(n−1)/2}` choices, so
/// it is only meant for `n ≤ 5`.
pub fn embed_in_linf_plane(w: &FiniteMetricSpace) -> Option<Vec<PlanePoint>> {
    let n = w.len();
    if n > 5 {
        return None;
    }
    let pairs: Vec<(usize, usize)> = w.pairs().collect();
    let scale = pairs.iter().map(|&(i, j)| w.dist(i, j)).fold(1.0, f64::max);
    'choices: for code in 0..4usize.pow(pairs.len() as u32) {
        let mut coords = [Vec::new(), Vec::new()];
        for (axis, out) in coords.iter_mut().enumerate() {
            // (from, to, bound) encodes v_to − v_from ≤ bound.
            let mut edges = Vec::with_capacity(4 * pairs.len());
            for (k, &(i, j)) in pairs.iter().enumerate() {
                let d = w.dist(i, j);
                edges.push((i, j, d));
                edges.push((j, i, d));
                let choice = (code >> (2 * k)) & 3;
                if choice >> 1 == axis {
                    let signed = if choice & 1 == 0 { d } else { -d };
                    edges.push((j, i, -signed));
                    edges.push((i, j, signed));
                }
            }
            match solve_difference_constraints(n, &edges, 1e-12 * scale) {
                Some(v) => *out = v,
                None => continue 'choices,
            }
        }
        let points: Vec<PlanePoint> = (0..n).map(|i| PlanePoint { x: coords[0][i], y: coords[1][i] }).collect();
        let exact = pairs
            .iter()
            .all(|&(i, j)| (points[i].linf_dist(&points[j]) - w.dist(i, j)).abs() <= 1e-9 * scale);
        if exact {
            return Some(points);
        }
    }
    None
}

fn solve_difference_constraints(n: usize, edges: &[(usize, usize, f64)], tol: f64) -> Option<Vec<f64>> {
    let mut v = vec![0.0; n];
    for _ in 0..=n {
        let mut changed = false;
        for &(from, to, bound) in edges {
            if v[from] + bound < v[to] - tol {
                v[to] = v[from] + bound;
                changed = true;
            }
        }
        if !changed {
            return Some(v);
        }
    }
    None
}

fn space_of(images: usize, d: impl Fn(usize, usize) -> Result<f64>) -> Result<FiniteMetricSpace> {
    let mut dist = vec![vec![0.0; images]; images];
    for i in 0..images {
        for j in i + 1..images {
            let x = d(i, j)?;
            dist[i][j] = x;
            dist[j][i] = x;
        }
    }
    Ok(FiniteMetricSpace::new_unchecked(dist)?)
}

pub fn verify_snowflake_transfer(w: &FiniteMetricSpace, config: SnowflakeConfig) -> Result<SnowflakeOutcome> {
    ensure!(config.theta > 0.0 && config.theta <= 1.0, "theta must lie in (0, 1], got {}", config.theta);
    ensure!(config.delta > 0.0 && config.delta < 1.0, "delta must lie in (0, 1), got {}", config.delta);
    ensure!(w.len() >= 2, "need at least two points");
    let bound = (1.0 + config.delta) / (1.0 - config.delta);
    let snow = w.snowflake(config.theta)?;
    let min_distance = snow.min_positive_distance().unwrap_or(0.0);
    let mut outcome = SnowflakeOutcome {
        config,
        min_distance,
        k1: f64::NAN,
        eps1: f64::NAN,
        eps2: f64::NAN,
        eps2_limit: f64::NAN,
        grid_resolution: None,
        measured_distortion: f64::NAN,
        bound,
        certified: false,
        within_bound: false,
        skipped: None,
    };
    if config.p <= 1.0 && config.schedule != EpsSchedule::Exact {
        outcome.skipped = Some(format!("grid stage requires p > 1, got p = {}", config.p));
        return Ok(outcome);
    }

    let Some(points) = embed_in_linf_plane(&snow) else {
        bail!("no isometric placement of the snowflaked space in the l-infinity plane");
    };
    let diracs: Vec<DiscreteMeasure> = points.iter().map(|&x| DiscreteMeasure::dirac(x)).collect();
    let stage_one = measures_to_diagrams_isometric(&diracs, config.p, DEFAULT_DENOMINATOR_CAP)?;
    let Images::Diagrams(diagrams) = &stage_one.images else { unreachable!() };
    let x_space = space_of(diagrams.len(), |i, j| Ok(wasserstein_pd(&diagrams[i], &diagrams[j], config.p)?.distance))?;
    let identity: Vec<usize> = (0..snow.len()).collect();
    let f = PointMap::new(snow.clone(), x_space.clone(), identity.clone())?;
    let f_summary = distortion_summary(&f)?;
    outcome.k1 = f_summary.scale;
    outcome.eps1 = f_summary.distortion - 1.0;
    outcome.eps2_limit = config.delta * outcome.k1 * min_distance / 2.0;

    let composed = match config.schedule {
        EpsSchedule::Exact => {
            outcome.eps2 = 0.0;
            f
        }
        EpsSchedule::Fraction(frac) | EpsSchedule::Absolute(frac) => {
            let eps2 = match config.schedule {
                EpsSchedule::Fraction(_) => frac * outcome.eps2_limit,
                _ => frac,
            };
            ensure!(eps2 > 0.0, "eps2 must be positive, got {eps2}");
            outcome.eps2 = eps2;
            let options = GridOptions { max_support: config.max_support, ..GridOptions::default() };
            let stage_two = match diagrams_to_measures_quasi_with(diagrams, config.p, eps2, options) {
                Ok(r) => r,
                Err(e @ wpd_core::Error::SearchCap { .. }) => {
                    outcome.skipped = Some(e.to_string());
                    return Ok(outcome);
                }
                Err(e) => return Err(e.into()),
            };
            if let Params::Grid(g) = &stage_two.params {
                outcome.grid_resolution = Some(g.resolution);
            }
            let y_space = space_of(diagrams.len(), |i, j| Ok(stage_two.image_distance(i, j)?))?;
            let g = PointMap::new(x_space, y_space, identity)?;
            f.then(&g)?
        }
    };
    outcome.measured_distortion = distortion(&composed)?;
    outcome.certified = outcome.eps1 < config.delta / 2.0 && outcome.eps2 < outcome.eps2_limit;
    outcome.within_bound = outcome.measured_distortion <= bound;
    Ok(outcome)
}
