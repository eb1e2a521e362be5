use crate::diagrams::PersistenceDiagram;
use crate::error::{check_p, Error, Result};
use crate::transport::UniformMeasure;

use super::{BiLipschitzParams, Direction, EmbeddingResult, Images, Params};

/// `D̄_i = D_i ∪ ⋃_{j≠i} ρ(D_j)` as uniform measures, before dilation.
///
/// Each support lists the points of `D_i` first, then the diagonal
/// projections of the other diagrams in family order, so every support has
/// the total point count `N`.
pub fn augment_with_projections(diagrams: &[PersistenceDiagram]) -> Result<Vec<UniformMeasure>> {
    let total: usize = diagrams.iter().map(PersistenceDiagram::len).sum();
    if total == 0 {
        return Err(Error::InvalidParameter("family must contain at least one off-diagonal point".into()));
    }
    diagrams
        .iter()
        .enumerate()
        .map(|(i, di)| {
            let mut atoms = di.points().to_vec();
            for (j, dj) in diagrams.iter().enumerate() {
                if j != i {
                    atoms.extend(dj.points().iter().map(|x| x.diagonal_projection()));
                }
            }
            UniformMeasure::new(atoms)
        })
        .collect()
}

/// Sends diagrams to uniform measures with `d ≤ d' ≤ 2^{1/p} d`.
pub fn diagrams_to_measures_bilipschitz(diagrams: &[PersistenceDiagram], p: f64) -> Result<EmbeddingResult> {
    check_p(p)?;
    let augmented = augment_with_projections(diagrams)?;
    let total = augmented[0].len();
    let dilation = (total as f64).powf(1.0 / p);
    let images = augmented.iter().map(|m| m.dilate(dilation)).collect::<Result<Vec<_>>>()?;
    Ok(EmbeddingResult {
        direction: Direction::Pd2ot,
        params: Params::BiLipschitz(BiLipschitzParams { p, total_points: total, dilation }),
        images: Images::Measures(images),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagrams::wasserstein_pd;
    use crate::transport::wasserstein_uniform;
    use approx::assert_relative_eq;

    fn pd(pairs: &[(f64, f64)]) -> PersistenceDiagram {
        PersistenceDiagram::from_pairs(pairs).unwrap()
    }

    #[test]
    fn single_point_families_hit_both_ends() {
        // Far apart points: each goes to the diagonal and the lower bound is tight.
        let a = pd(&[(0.0, 2.0)]);
        let b = pd(&[(10.0, 12.0)]);
        let r = diagrams_to_measures_bilipschitz(&[a.clone(), b.clone()], 1.0).unwrap();
        let d = wasserstein_pd(&a, &b, 1.0).unwrap().distance;
        let image = r.image_distance(0, 1).unwrap();
        assert_relative_eq!(d, 2.0);
        assert_relative_eq!(image, 2.0, epsilon = 1e-12);
        let (lo, hi) = r.bounds(0, 1, d);
        assert!(lo <= image && image <= hi + 1e-12);

        // Nearby points: both the points and the projections are one unit
        // apart, so the upper bound is tight.
        let c = pd(&[(0.0, 10.0)]);
        let e = pd(&[(1.0, 11.0)]);
        let r = diagrams_to_measures_bilipschitz(&[c.clone(), e.clone()], 2.0).unwrap();
        let d = wasserstein_pd(&c, &e, 2.0).unwrap().distance;
        assert_relative_eq!(d, 1.0);
        assert_relative_eq!(r.image_distance(0, 1).unwrap(), 2f64.sqrt() * d, epsilon = 1e-12);
    }

    #[test]
    fn supports_have_total_size_and_sandwich_holds() {
        let ds = vec![pd(&[(0.0, 1.0), (2.0, 5.0)]), pd(&[(1.0, 3.0)]), PersistenceDiagram::empty()];
        let aug = augment_with_projections(&ds).unwrap();
        assert!(aug.iter().all(|m| m.len() == 3));
        for p in [1.0, 2.0] {
            let r = diagrams_to_measures_bilipschitz(&ds, p).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let d = wasserstein_pd(&ds[i], &ds[j], p).unwrap().distance;
                    let undilated = wasserstein_uniform(&aug[i], &aug[j], p).unwrap();
                    let n = 3f64.powf(1.0 / p);
                    assert!(d / n <= undilated + 1e-12);
                    assert!(undilated <= 2f64.powf(1.0 / p) * d / n + 1e-12);
                    assert_relative_eq!(r.image_distance(i, j).unwrap(), n * undilated, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn all_empty_family_is_rejected() {
        let ds = vec![PersistenceDiagram::empty(), PersistenceDiagram::empty()];
        assert!(diagrams_to_measures_bilipschitz(&ds, 1.0).is_err());
    }
}
