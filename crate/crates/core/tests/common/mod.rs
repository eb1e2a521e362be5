#![allow(dead_code)]

use proptest::prelude::*;
use wpd_core::diagrams::PersistenceDiagram;
use wpd_core::geometry::PlanePoint;
use wpd_core::rational::Rational;
use wpd_core::transport::{DiscreteMeasure, UniformMeasure};

pub const P_VALUES: [f64; 4] = [1.0, 1.5, 2.0, 3.0];

pub fn p_value() -> impl Strategy<Value = f64> {
    prop::sample::select(P_VALUES.to_vec())
}

/// Coordinates on a coarse lattice half the time, to provoke ties.
pub fn coord() -> impl Strategy<Value = f64> {
    prop_oneof![(-8i32..=8).prop_map(|k| k as f64 * 0.5), -4.0f64..4.0]
}

pub fn point() -> impl Strategy<Value = PlanePoint> {
    (coord(), coord()).prop_map(|(x, y)| PlanePoint::new(x, y).unwrap())
}

pub fn uniform_pair(max_n: usize) -> impl Strategy<Value = (UniformMeasure, UniformMeasure)> {
    (1..=max_n).prop_flat_map(|n| {
        (prop::collection::vec(point(), n), prop::collection::vec(point(), n)).prop_map(|(a, b)| {
            (UniformMeasure::new(a).unwrap(), UniformMeasure::new(b).unwrap())
        })
    })
}

/// Positive integer parts summing to `den`, one per atom.
fn composition(parts: usize, den: i64) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(0..den, parts - 1).prop_map(move |mut cuts| {
        cuts.sort_unstable();
        let mut out = Vec::with_capacity(parts);
        let mut prev = 0;
        let mut extra = 0;
        for c in cuts {
            out.push(c - prev);
            prev = c;
        }
        out.push(den - prev);
        // Shift mass so every part is positive.
        for w in out.iter_mut() {
            if *w == 0 {
                *w = 1;
                extra += 1;
            }
        }
        while extra > 0 {
            let k = out.iter().position(|&w| w > 1).unwrap();
            out[k] -= 1;
            extra -= 1;
        }
        out
    })
}

/// Rational measure with at most `max_atoms` atoms and denominator at most
/// `max_den`.
pub fn rational_measure(max_atoms: usize, max_den: i64) -> impl Strategy<Value = DiscreteMeasure> {
    (1..=max_atoms)
        .prop_flat_map(move |k| (Just(k), (k as i64).max(1)..=max_den.max(k as i64)))
        .prop_flat_map(|(k, den)| (prop::collection::vec(point(), k), composition(k, den), Just(den)))
        .prop_map(|(atoms, parts, den)| {
            let w = parts.into_iter().map(|c| Rational::new(c, den)).collect();
            DiscreteMeasure::from_rationals(atoms, w).unwrap()
        })
}

/// Measure with real weights, typically irrational.
pub fn real_measure(max_atoms: usize) -> impl Strategy<Value = DiscreteMeasure> {
    (1..=max_atoms)
        .prop_flat_map(|k| (prop::collection::vec(point(), k), prop::collection::vec(0.05f64..1.0, k)))
        .prop_map(|(atoms, raw)| {
            let total: f64 = raw.iter().sum();
            let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let head: f64 = w[..w.len() - 1].iter().sum();
            *w.last_mut().unwrap() = 1.0 - head;
            DiscreteMeasure::from_reals(atoms, w).unwrap()
        })
}

pub fn diagram(max_points: usize) -> impl Strategy<Value = PersistenceDiagram> {
    prop::collection::vec((coord(), prop_oneof![(1i32..=8).prop_map(|k| k as f64 * 0.5), 0.01f64..4.0]), 0..=max_points)
        .prop_map(|pairs| {
            let pts: Vec<(f64, f64)> = pairs.into_iter().map(|(b, l)| (b, b + l)).collect();
            PersistenceDiagram::from_pairs(&pts).unwrap()
        })
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
