//! Seeded verification campaigns and their reports.
//!
//! Trial `t` draws its instance from stream `t` of the campaign seed and is
//! checked at every combination of the campaign's `p` and `ε` values, one
//! record per combination. Every tenth trial is a degenerate instance
//! (identical pair, or a Dirac measure / empty diagram).

use std::time::Instant;

use anyhow::{anyhow, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use wpd_core::certify::{certify_pairwise, Certification, Sources};
use wpd_core::diagrams::{oracle_wasserstein_pd, wasserstein_pd, PersistenceDiagram};
use wpd_core::embeddings::{
    augment_with_projections, diagrams_to_measures_bilipschitz, diagrams_to_measures_quasi_with,
    measures_to_diagrams_isometric, measures_to_diagrams_quasi, GridOptions, Params,
};
use wpd_core::geometry::PlanePoint;
use wpd_core::rational::DEFAULT_DENOMINATOR_CAP;
use wpd_core::transport::{oracle_wasserstein_uniform, wasserstein, wasserstein_uniform, DiscreteMeasure, UniformMeasure};
use wpd_core::Error;

use crate::gen::{random_point, sample_diagram, sample_measure, sample_metric_space, sample_real_measure, trial_rng, Bbox};
use crate::snowflake::{verify_snowflake_transfer, EpsSchedule, SnowflakeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Assignment-based W_p between uniform measures against brute force.
    OracleOt,
    /// Diagram W_p against exhaustive partial matchings.
    OraclePd,
    /// Exactness of the isometric measures-to-diagrams embedding.
    Isometric,
    /// Additive error of the measures-to-diagrams embedding on real weights.
    Ot2pdQuasi,
    /// Sandwich bounds of the diagrams-to-measures bi-Lipschitz embedding.
    Bilipschitz,
    /// Additive error and cardinalities of the grid embedding.
    Pd2otQuasi,
    /// The grid embedding refuses p = 1.
    P1Rejection,
    /// Symmetry and triangle inequality of both distances.
    MetricAxioms,
    /// Distortion of the two-stage snowflake composition.
    Snowflake,
}

impl Mode {
    pub const ALL: [Mode; 9] = [
        Mode::OracleOt,
        Mode::OraclePd,
        Mode::Isometric,
        Mode::Ot2pdQuasi,
        Mode::Bilipschitz,
        Mode::Pd2otQuasi,
        Mode::P1Rejection,
        Mode::MetricAxioms,
        Mode::Snowflake,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::OracleOt => "oracle-ot",
            Mode::OraclePd => "oracle-pd",
            Mode::Isometric => "isometric",
            Mode::Ot2pdQuasi => "ot2pd-quasi",
            Mode::Bilipschitz => "bilipschitz",
            Mode::Pd2otQuasi => "pd2ot-quasi",
            Mode::P1Rejection => "p1-rejection",
            Mode::MetricAxioms => "metric-axioms",
            Mode::Snowflake => "snowflake",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub mode: Mode,
    pub seed: u64,
    pub trials: u64,
    /// Largest family (or metric space) size.
    pub family_size: usize,
    /// Largest number of points per diagram or atoms per measure.
    pub max_points: usize,
    pub p_values: Vec<f64>,
    /// `ε` for the quasi modes, `δ` for the snowflake mode.
    pub eps_values: Vec<f64>,
    /// Relative slack on exact claims.
    pub tolerance: f64,
    pub bbox: Bbox,
    /// Grid supports above this size are skipped.
    pub max_support: usize,
}

/// Denominators for the isometric mode; all divide 12.
const DENOMINATORS: [u64; 6] = [1, 2, 3, 4, 6, 12];

impl Campaign {
    /// Default parameters for each mode.
    pub fn new(mode: Mode, seed: u64, trials: u64) -> Self {
        let all_p = vec![1.0, 1.5, 2.0, 3.0];
        let (family_size, max_points, p_values, eps_values) = match mode {
            Mode::OracleOt => (2, 7, all_p, vec![]),
            Mode::OraclePd => (2, 5, all_p, vec![]),
            Mode::Isometric => (5, 3, all_p, vec![]),
            Mode::Ot2pdQuasi => (3, 3, vec![1.0], vec![0.1, 0.01]),
            Mode::Bilipschitz => (4, 4, vec![1.0, 2.0, 3.0], vec![]),
            Mode::Pd2otQuasi => (3, 3, vec![1.5, 2.0, 3.0], vec![0.05]),
            Mode::P1Rejection => (3, 4, vec![1.0], vec![0.05]),
            Mode::MetricAxioms => (3, 4, all_p, vec![]),
            Mode::Snowflake => (4, 0, vec![2.0], vec![0.1]),
        };
        Campaign {
            mode,
            seed,
            trials,
            family_size,
            max_points,
            p_values,
            eps_values,
            tolerance: 1e-9,
            bbox: Bbox::UNIT,
            max_support: 50_000,
        }
    }

    /// Bounding box for the grid mode at exponent `p`. For `p < 2` the grid
    /// resolution grows like `(spread/ε)^{2p/(p−1)}`, so families are shrunk
    /// tenfold to keep supports within `max_support`.
    pub fn grid_bbox(&self, p: f64) -> Bbox {
        if p < 2.0 {
            Bbox { lo: self.bbox.lo, hi: self.bbox.lo + 0.1 * (self.bbox.hi - self.bbox.lo) }
        } else {
            self.bbox
        }
    }

    fn combos(&self) -> Vec<(f64, Option<f64>)> {
        let eps: Vec<Option<f64>> =
            if self.eps_values.is_empty() { vec![None] } else { self.eps_values.iter().copied().map(Some).collect() };
        self.p_values.iter().flat_map(|&p| eps.iter().map(move |&e| (p, e))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Instance {
    Random,
    IdenticalPair,
    /// A Dirac measure for measure modes, an empty diagram otherwise.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub p: f64,
    pub eps: Option<f64>,
    pub instance: Instance,
    pub status: Status,
    /// Slack left by the tightest check; negative exactly when it failed.
    pub margin: Option<f64>,
    pub worst_pair: Option<[usize; 2]>,
    pub detail: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Worst {
    pub trial: u64,
    pub p: f64,
    pub margin: f64,
    pub pair: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub records: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub degenerate_instances: usize,
    pub min_margin: Option<f64>,
    pub max_margin: Option<f64>,
    pub mean_margin: Option<f64>,
    pub worst: Option<Worst>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub total_ms: f64,
    pub trial_ms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub campaign: Campaign,
    pub trials: Vec<TrialRecord>,
    pub summary: Summary,
    pub pass: bool,
    pub timing: Timing,
}

impl Report {
    /// The report as JSON without wall-clock fields, for comparing runs.
    pub fn deterministic_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().expect("object").remove("timing");
        v
    }
}

pub fn instance_for(trial: u64) -> Instance {
    match (trial % 10, (trial / 10) % 2) {
        (0, 0) => Instance::IdenticalPair,
        (0, _) => Instance::Degenerate,
        _ => Instance::Random,
    }
}

pub fn run_campaign(campaign: &Campaign) -> Report {
    let start = Instant::now();
    let per_trial: Vec<(Vec<TrialRecord>, f64)> = (0..campaign.trials)
        .into_par_iter()
        .map(|t| {
            let started = Instant::now();
            let records = run_trial(campaign, t);
            (records, started.elapsed().as_secs_f64() * 1e3)
        })
        .collect();
    let trial_ms = per_trial.iter().map(|(_, ms)| *ms).collect();
    let trials: Vec<TrialRecord> = per_trial.into_iter().flat_map(|(r, _)| r).collect();
    let summary = summarize(&trials);
    let pass = summary.failed == 0;
    Report {
        campaign: campaign.clone(),
        trials,
        summary,
        pass,
        timing: Timing { total_ms: start.elapsed().as_secs_f64() * 1e3, trial_ms },
    }
}

fn summarize(trials: &[TrialRecord]) -> Summary {
    let count = |s: Status| trials.iter().filter(|r| r.status == s).count();
    let margins: Vec<f64> = trials.iter().filter_map(|r| r.margin).collect();
    let worst = trials
        .iter()
        .filter_map(|r| r.margin.map(|m| (r, m)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(r, m)| Worst { trial: r.trial, p: r.p, margin: m, pair: r.worst_pair });
    Summary {
        records: trials.len(),
        passed: count(Status::Pass),
        failed: count(Status::Fail),
        skipped: count(Status::Skipped),
        degenerate_instances: trials.iter().filter(|r| r.instance != Instance::Random).count(),
        min_margin: margins.iter().copied().reduce(f64::min),
        max_margin: margins.iter().copied().reduce(f64::max),
        mean_margin: (!margins.is_empty()).then(|| margins.iter().sum::<f64>() / margins.len() as f64),
        worst,
    }
}

/// Outcome of one check before it is stamped with trial metadata.
struct Check {
    status: Status,
    margin: Option<f64>,
    worst_pair: Option<[usize; 2]>,
    detail: Option<serde_json::Value>,
}

impl Check {
    fn from_margin(margin: f64, worst_pair: Option<[usize; 2]>, detail: Option<serde_json::Value>) -> Self {
        let status = if margin >= 0.0 { Status::Pass } else { Status::Fail };
        Check { status, margin: Some(margin), worst_pair, detail }
    }

    fn failed(msg: impl ToString) -> Self {
        Check { status: Status::Fail, margin: None, worst_pair: None, detail: Some(json!({ "error": msg.to_string() })) }
    }

    fn skipped(detail: serde_json::Value) -> Self {
        Check { status: Status::Skipped, margin: None, worst_pair: None, detail: Some(detail) }
    }
}

/// Instances of one trial, drawn once and reused for every `(p, ε)`.
enum Family {
    Uniform(UniformMeasure, UniformMeasure),
    Measures(Vec<DiscreteMeasure>),
    Diagrams(Vec<PersistenceDiagram>),
    Both(Vec<DiscreteMeasure>, Vec<PersistenceDiagram>),
    Space(wpd_core::geometry::FiniteMetricSpace),
}

fn run_trial(c: &Campaign, trial: u64) -> Vec<TrialRecord> {
    let instance = instance_for(trial);
    let mut rng = trial_rng(c.seed, trial);
    let family = draw_family(c, instance, &mut rng);
    c.combos()
        .into_iter()
        .map(|(p, eps)| {
            let check = match &family {
                Ok(f) => check_family(c, f, p, eps).unwrap_or_else(Check::failed),
                Err(e) => Check::failed(e),
            };
            TrialRecord {
                trial,
                p,
                eps,
                instance,
                status: check.status,
                margin: check.margin,
                worst_pair: check.worst_pair,
                detail: check.detail,
            }
        })
        .collect()
}

fn family_len(c: &Campaign, rng: &mut ChaCha8Rng) -> usize {
    rng.gen_range(2..=c.family_size.max(2))
}

fn nonempty_diagrams(c: &Campaign, rng: &mut ChaCha8Rng, k: usize, bbox: Bbox) -> Vec<PersistenceDiagram> {
    loop {
        let ds: Vec<PersistenceDiagram> = (0..k).map(|_| sample_diagram(rng, c.max_points, bbox)).collect();
        if ds.iter().any(|d| !d.is_empty()) || c.max_points == 0 {
            return ds;
        }
    }
}

fn apply_degeneracy<T: Clone>(family: &mut [T], instance: Instance, degenerate: impl FnOnce() -> T) {
    match instance {
        Instance::IdenticalPair if family.len() >= 2 => family[1] = family[0].clone(),
        Instance::Degenerate if !family.is_empty() => family[0] = degenerate(),
        _ => {}
    }
}

fn draw_family(c: &Campaign, instance: Instance, rng: &mut ChaCha8Rng) -> Result<Family> {
    let dirac = |rng: &mut ChaCha8Rng| DiscreteMeasure::dirac(random_point(rng, c.bbox));
    Ok(match c.mode {
        Mode::OracleOt => {
            let n = if instance == Instance::Degenerate { 1 } else { rng.gen_range(1..=c.max_points.max(1)) };
            let a = UniformMeasure::new((0..n).map(|_| random_point(rng, c.bbox)).collect())?;
            let b = if instance == Instance::IdenticalPair {
                a.clone()
            } else {
                UniformMeasure::new((0..n).map(|_| random_point(rng, c.bbox)).collect())?
            };
            Family::Uniform(a, b)
        }
        Mode::OraclePd | Mode::P1Rejection => {
            let k = family_len(c, rng);
            let mut ds = nonempty_diagrams(c, rng, k, c.bbox);
            apply_degeneracy(&mut ds, instance, PersistenceDiagram::empty);
            Family::Diagrams(ds)
        }
        // Both embeddings need an off-diagonal point somewhere in the family.
        Mode::Bilipschitz | Mode::Pd2otQuasi => {
            let k = family_len(c, rng);
            let mut ds = nonempty_diagrams(c, rng, k, c.bbox);
            if instance == Instance::Degenerate && ds[1..].iter().all(|d| d.is_empty()) {
                ds[1] = nonempty_diagrams(c, rng, 1, c.bbox).remove(0);
            }
            apply_degeneracy(&mut ds, instance, PersistenceDiagram::empty);
            Family::Diagrams(ds)
        }
        Mode::Isometric => {
            let k = family_len(c, rng);
            let mut ms = (0..k)
                .map(|_| {
                    let den = DENOMINATORS[rng.gen_range(0..DENOMINATORS.len())];
                    sample_measure(rng, c.max_points.min(den as usize).max(1), den, c.bbox)
                })
                .collect::<Result<Vec<_>>>()?;
            let d = dirac(rng);
            apply_degeneracy(&mut ms, instance, || d);
            Family::Measures(ms)
        }
        Mode::Ot2pdQuasi => {
            let k = family_len(c, rng);
            let mut ms: Vec<DiscreteMeasure> = (0..k).map(|_| sample_real_measure(rng, c.max_points, c.bbox)).collect();
            let d = dirac(rng);
            apply_degeneracy(&mut ms, instance, || d);
            Family::Measures(ms)
        }
        Mode::MetricAxioms => {
            let mut ms = (0..3)
                .map(|_| {
                    let den = rng.gen_range(1..=12u64);
                    sample_measure(rng, c.max_points.min(den as usize).max(1), den, c.bbox)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut ds: Vec<PersistenceDiagram> = (0..3).map(|_| sample_diagram(rng, c.max_points, c.bbox)).collect();
            let d = dirac(rng);
            apply_degeneracy(&mut ms, instance, || d);
            apply_degeneracy(&mut ds, instance, PersistenceDiagram::empty);
            Family::Both(ms, ds)
        }
        Mode::Snowflake => {
            let n = c.family_size.max(2);
            let space = match instance {
                Instance::Random => sample_metric_space(rng, n, 1.0, 2.0)?,
                // Equilateral: every pair ties.
                _ => sample_metric_space(rng, n, 1.5, 1.5)?,
            };
            Family::Space(space)
        }
    })
}

fn pair_margin(cert: &Certification, tol: f64) -> (f64, Option<[usize; 2]>) {
    cert.certificates
        .iter()
        .map(|x| (tol * x.source_dist.max(1.0) + x.margin(), Some([x.i, x.j])))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap_or((f64::INFINITY, None))
}

fn check_family(c: &Campaign, family: &Family, p: f64, eps: Option<f64>) -> Result<Check> {
    let tol = c.tolerance;
    let eps_or = |what: &str| eps.ok_or_else(|| anyhow!("mode {} needs an {what} value", c.mode.name()));
    match (c.mode, family) {
        (Mode::OracleOt, Family::Uniform(a, b)) => {
            let fast = wasserstein_uniform(a, b, p)?;
            let slow = oracle_wasserstein_uniform(a, b, p)?;
            let margin = tol * slow.abs().max(1.0) - (fast - slow).abs();
            Ok(Check::from_margin(margin, None, Some(json!({ "n": a.len(), "distance": fast, "oracle": slow }))))
        }
        (Mode::OraclePd, Family::Diagrams(ds)) => {
            let fast = wasserstein_pd(&ds[0], &ds[1], p)?.distance;
            let slow = oracle_wasserstein_pd(&ds[0], &ds[1], p)?;
            let margin = tol * slow.abs().max(1.0) - (fast - slow).abs();
            Ok(Check::from_margin(
                margin,
                Some([0, 1]),
                Some(json!({ "sizes": [ds[0].len(), ds[1].len()], "distance": fast, "oracle": slow })),
            ))
        }
        (Mode::Isometric, Family::Measures(ms)) => {
            let r = measures_to_diagrams_isometric(ms, p, DEFAULT_DENOMINATOR_CAP)?;
            let cert = certify_pairwise(&r, Sources::Measures(ms), tol)?;
            let (margin, pair) = pair_margin(&cert, tol);
            let Params::Isometric(params) = &r.params else { unreachable!() };
            Ok(Check::from_margin(margin, pair, Some(json!({ "denominator": params.denominator, "family": ms.len() }))))
        }
        (Mode::Ot2pdQuasi, Family::Measures(ms)) => {
            let eps = eps_or("eps")?;
            let r = measures_to_diagrams_quasi(ms, p, eps, DEFAULT_DENOMINATOR_CAP)?;
            let cert = certify_pairwise(&r, Sources::Measures(ms), tol)?;
            let (margin, pair) = pair_margin(&cert, tol);
            let Params::MeasureQuasi(q) = &r.params else { unreachable!() };
            Ok(Check::from_margin(margin, pair, Some(json!({ "approx_denominator": q.approx_denominator }))))
        }
        (Mode::Bilipschitz, Family::Diagrams(ds)) => {
            let r = diagrams_to_measures_bilipschitz(ds, p)?;
            let cert = certify_pairwise(&r, Sources::Diagrams(ds), tol)?;
            let (mut margin, mut pair) = pair_margin(&cert, tol);
            // Undilated bounds d/N^{1/p} ≤ W ≤ (2/N)^{1/p} d.
            let aug = augment_with_projections(ds)?;
            let n = aug[0].len() as f64;
            for x in &cert.certificates {
                let raw = wasserstein_uniform(&aug[x.i], &aug[x.j], p)?;
                let (lo, hi) = (x.source_dist / n.powf(1.0 / p), (2.0 / n).powf(1.0 / p) * x.source_dist);
                let m = tol * x.source_dist.max(1.0) + (raw - lo).min(hi - raw);
                if m < margin {
                    margin = m;
                    pair = Some([x.i, x.j]);
                }
            }
            Ok(Check::from_margin(margin, pair, Some(json!({ "total_points": n }))))
        }
        (Mode::Pd2otQuasi, Family::Diagrams(ds)) => {
            let eps = eps_or("eps")?;
            let bbox = c.grid_bbox(p);
            let scale = (bbox.hi - bbox.lo) / (c.bbox.hi - c.bbox.lo);
            let ds: Vec<PersistenceDiagram> = ds
                .iter()
                .map(|d| {
                    let pts = d
                        .points()
                        .iter()
                        .map(|q| PlanePoint { x: bbox.lo + (q.x - c.bbox.lo) * scale, y: bbox.lo + (q.y - c.bbox.lo) * scale })
                        .collect();
                    PersistenceDiagram::new(pts)
                })
                .collect::<std::result::Result<_, _>>()?;
            let options = GridOptions { max_support: Some(c.max_support), ..GridOptions::default() };
            let r = match diagrams_to_measures_quasi_with(&ds, p, eps, options) {
                Ok(r) => r,
                Err(e @ Error::SearchCap { .. }) => return Ok(Check::skipped(json!({ "reason": e.to_string() }))),
                Err(e) => return Err(e.into()),
            };
            let Params::Grid(g) = &r.params else { unreachable!() };
            let wpd_core::embeddings::Images::Measures(images) = &r.images else { unreachable!() };
            let cardinalities_ok = g.shared_grid_len as u64 == g.resolution + 1
                && g.support_size == g.max_size + g.resolution as usize + 1
                && images.iter().zip(&g.sizes).zip(&g.extra_grid_lens).all(|((m, &n_i), &extra)| {
                    extra == g.max_size - n_i && m.len() == n_i + g.shared_grid_len + extra
                });
            let cert = certify_pairwise(&r, Sources::Diagrams(&ds), tol)?;
            let (mut margin, pair) = pair_margin(&cert, tol);
            // The certified interval must sit inside [d − perturbation, d + ε].
            for x in &cert.certificates {
                margin = margin.min(x.source_dist + eps - x.upper + tol);
            }
            if !cardinalities_ok {
                margin = margin.min(-1.0);
            }
            let detail = json!({
                "resolution": g.resolution,
                "support_size": g.support_size,
                "sizes": g.sizes,
                "cardinalities_ok": cardinalities_ok,
                "bbox": bbox,
            });
            Ok(Check::from_margin(margin, pair, Some(detail)))
        }
        (Mode::P1Rejection, Family::Diagrams(ds)) => {
            let eps = eps.unwrap_or(0.05);
            Ok(match diagrams_to_measures_quasi_with(ds, p, eps, GridOptions::default()) {
                Err(Error::GridRequiresPGreaterThanOne(_)) => {
                    Check { status: Status::Pass, margin: None, worst_pair: None, detail: None }
                }
                Err(e) => Check::failed(format!("wrong error: {e}")),
                Ok(_) => Check::failed("construction accepted p <= 1"),
            })
        }
        (Mode::MetricAxioms, Family::Both(ms, ds)) => {
            let ot = |i: usize, j: usize| -> Result<f64> { Ok(wasserstein(&ms[i], &ms[j], p)?.distance) };
            let pd = |i: usize, j: usize| -> Result<f64> { Ok(wasserstein_pd(&ds[i], &ds[j], p)?.distance) };
            let mut margin = f64::INFINITY;
            let mut worst = None;
            for d in [&ot as &dyn Fn(usize, usize) -> Result<f64>, &pd] {
                let mut m = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        m[i][j] = d(i, j)?;
                    }
                }
                for i in 0..3 {
                    if m[i][i] != 0.0 {
                        margin = margin.min(-m[i][i]);
                    }
                    for j in 0..3 {
                        if m[i][j] != m[j][i] {
                            margin = margin.min(-(m[i][j] - m[j][i]).abs().max(f64::MIN_POSITIVE));
                            worst = Some([i, j]);
                        }
                        for k in 0..3 {
                            let slack = 1e-9 + m[i][k] + m[k][j] - m[i][j];
                            if slack < margin {
                                margin = slack;
                                worst = Some([i, j]);
                            }
                        }
                    }
                }
            }
            Ok(Check::from_margin(margin, worst, None))
        }
        (Mode::Snowflake, Family::Space(w)) => {
            let delta = eps_or("delta")?;
            let config = SnowflakeConfig {
                theta: 1.0 / p,
                p,
                delta,
                schedule: EpsSchedule::Fraction(0.9),
                max_support: Some(c.max_support),
            };
            let out = verify_snowflake_transfer(w, config)?;
            let detail = serde_json::to_value(&out)?;
            if out.skipped.is_some() {
                return Ok(Check::skipped(detail));
            }
            if !out.certified {
                return Ok(Check { status: Status::Pass, margin: None, worst_pair: None, detail: Some(detail) });
            }
            Ok(Check::from_margin(out.bound - out.measured_distortion, None, Some(detail)))
        }
        (mode, _) => Err(anyhow!("instance does not fit mode {}", mode.name())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_instances_appear_every_hundred_trials() {
        let kinds: Vec<Instance> = (0..100).map(instance_for).collect();
        assert!(kinds.contains(&Instance::IdenticalPair));
        assert!(kinds.contains(&Instance::Degenerate));
    }

    #[test]
    fn small_campaigns_pass_and_repeat() {
        for mode in Mode::ALL {
            let mut c = Campaign::new(mode, 7, 12);
            if mode == Mode::Pd2otQuasi || mode == Mode::Snowflake {
                c.trials = 3;
                c.eps_values = vec![0.3];
            }
            let a = run_campaign(&c);
            assert!(a.pass, "{}: {}", mode.name(), serde_json::to_string_pretty(&a.summary).unwrap());
            let b = run_campaign(&c);
            assert_eq!(a.deterministic_json(), b.deterministic_json(), "{}", mode.name());
        }
    }
}
