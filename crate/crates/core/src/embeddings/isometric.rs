use crate::diagrams::PersistenceDiagram;
use crate::error::{check_p, Error, Result};
use crate::geometry::{linf_diameter, PlanePoint};
use crate::rational::{lcm_capped, Rational};
use crate::transport::{rational_approx, uniformize_to, DiscreteMeasure};

use super::{Direction, EmbeddingResult, Images, IsometricParams, MeasureQuasiParams, Params};

/// Sends rational measures to diagrams with `W_p` preserved exactly.
///
/// All measures are uniformized over one common denominator `N`, atoms are
/// scaled by `N^{-1/p}` and shifted upward far enough that every atom sits
/// strictly above the diagonal and no optimal matching uses it.
pub fn measures_to_diagrams_isometric(
    measures: &[DiscreteMeasure],
    p: f64,
    cap: u64,
) -> Result<EmbeddingResult> {
    check_p(p)?;
    if measures.is_empty() {
        return Err(Error::InvalidParameter("empty family of measures".into()));
    }
    let mut n = 1u64;
    for m in measures {
        n = lcm_capped(n, m.common_denominator(cap)?, cap)?;
    }
    let scale = (n as f64).powf(-1.0 / p);
    let scaled: Vec<Vec<PlanePoint>> = measures
        .iter()
        .map(|m| {
            let u = uniformize_to(m, n, cap)?;
            Ok(u.atoms().iter().map(|a| a.scale(scale)).collect())
        })
        .collect::<Result<_>>()?;

    let all: Vec<PlanePoint> = scaled.iter().flatten().copied().collect();
    let diameter = linf_diameter(&all);
    let skew = all.iter().map(|a| a.x - a.y).fold(f64::NEG_INFINITY, f64::max);
    let shift = 4.0 * diameter + skew + 1.0;

    let images = scaled
        .into_iter()
        .map(|atoms| PersistenceDiagram::new(atoms.iter().map(|a| a.translate(0.0, shift)).collect()))
        .collect::<Result<Vec<_>>>()?;

    Ok(EmbeddingResult {
        direction: Direction::Ot2pd,
        params: Params::Isometric(IsometricParams {
            p,
            denominator: n,
            scale,
            diameter,
            skew,
            translation: [0.0, shift],
        }),
        images: Images::Diagrams(images),
    })
}

/// Sends arbitrary measures to diagrams with additive distortion below `eps`.
///
/// Rational families within the denominator cap go straight through the
/// isometric construction. Otherwise the smallest `N ≤ cap` is searched for
/// which rounding every weight to a multiple of `1/N` costs less than `eps/2`
/// per measure, and the rounded family is embedded isometrically.
pub fn measures_to_diagrams_quasi(
    measures: &[DiscreteMeasure],
    p: f64,
    eps: f64,
    cap: u64,
) -> Result<EmbeddingResult> {
    check_p(p)?;
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be > 0, got {eps}")));
    }
    if measures.is_empty() {
        return Err(Error::InvalidParameter("empty family of measures".into()));
    }

    if let Ok(exact) = exact_family(measures, cap) {
        let iso = measures_to_diagrams_isometric(&exact, p, cap)?;
        let Params::Isometric(params) = iso.params else { unreachable!() };
        return Ok(EmbeddingResult {
            direction: Direction::Ot2pd,
            params: Params::MeasureQuasi(MeasureQuasiParams {
                eps,
                approx_denominator: params.denominator,
                approx_errors: vec![0.0; measures.len()],
                isometric: params,
            }),
            images: iso.images,
        });
    }

    for n in 1..=cap {
        let approx = measures.iter().map(|m| rational_approx(m, n)).collect::<Result<Vec<_>>>()?;
        let errors: Vec<f64> = approx.iter().map(|a| a.error_bound(p)).collect();
        if errors.iter().all(|&e| e < eps / 2.0) {
            let rounded: Vec<DiscreteMeasure> = approx.into_iter().map(|a| a.measure).collect();
            let iso = measures_to_diagrams_isometric(&rounded, p, cap)?;
            let Params::Isometric(params) = iso.params else { unreachable!() };
            return Ok(EmbeddingResult {
                direction: Direction::Ot2pd,
                params: Params::MeasureQuasi(MeasureQuasiParams {
                    eps,
                    approx_denominator: n,
                    approx_errors: errors,
                    isometric: params,
                }),
                images: iso.images,
            });
        }
    }
    Err(Error::SearchCap { what: "approximation denominator", cap })
}

fn exact_family(measures: &[DiscreteMeasure], cap: u64) -> Result<Vec<DiscreteMeasure>> {
    let mut n = 1u64;
    let mut out = Vec::with_capacity(measures.len());
    for m in measures {
        let w: Vec<Rational> = m.exact_weights(cap)?;
        let measure = DiscreteMeasure::from_rationals(m.atoms().to_vec(), w)?;
        n = lcm_capped(n, measure.common_denominator(cap)?, cap)?;
        out.push(measure);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagrams::wasserstein_pd;
    use crate::rational::DEFAULT_DENOMINATOR_CAP;
    use crate::transport::{oracle_wasserstein_discrete, wasserstein};
    use approx::assert_relative_eq;

    fn pt(x: f64, y: f64) -> PlanePoint {
        PlanePoint::new(x, y).unwrap()
    }

    fn diagrams(r: &EmbeddingResult) -> &[PersistenceDiagram] {
        match &r.images {
            Images::Diagrams(d) => d,
            Images::Measures(_) => panic!("expected diagrams"),
        }
    }

    #[test]
    fn dirac_pair_is_preserved() {
        let a = DiscreteMeasure::dirac(pt(0.0, 0.0));
        let b = DiscreteMeasure::dirac(pt(3.0, 0.0));
        let r = measures_to_diagrams_isometric(&[a, b], 2.0, DEFAULT_DENOMINATOR_CAP).unwrap();
        let Params::Isometric(params) = &r.params else { panic!() };
        assert_eq!(params.denominator, 1);
        let d = diagrams(&r);
        assert_eq!((d[0].len(), d[1].len()), (1, 1));
        assert_relative_eq!(wasserstein_pd(&d[0], &d[1], 2.0).unwrap().distance, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn rational_weights_are_preserved() {
        let a = DiscreteMeasure::from_rationals(
            vec![pt(0.0, 0.0), pt(1.0, 0.0)],
            vec![Rational::new(1, 3), Rational::new(2, 3)],
        )
        .unwrap();
        let b = DiscreteMeasure::from_rationals(
            vec![pt(0.0, 1.0), pt(2.0, 2.0)],
            vec![Rational::new(1, 2), Rational::new(1, 2)],
        )
        .unwrap();
        for p in [1.0, 2.0, 3.0] {
            let r = measures_to_diagrams_isometric(&[a.clone(), b.clone()], p, DEFAULT_DENOMINATOR_CAP).unwrap();
            let d = diagrams(&r);
            assert_eq!(d[0].len(), 6);
            for pt in d.iter().flat_map(|d| d.points()) {
                assert!(pt.y > pt.x);
            }
            let source = wasserstein(&a, &b, p).unwrap().distance;
            let image = wasserstein_pd(&d[0], &d[1], p).unwrap().distance;
            assert_relative_eq!(source, image, max_relative = 1e-9);
        }
    }

    #[test]
    fn irrational_weights_need_the_quasi_map() {
        let w = std::f64::consts::FRAC_1_SQRT_2;
        let a = DiscreteMeasure::from_reals(vec![pt(0.0, 0.0), pt(1.0, 0.0)], vec![w, 1.0 - w]).unwrap();
        let b = DiscreteMeasure::dirac(pt(0.0, 1.0));
        assert!(measures_to_diagrams_isometric(&[a.clone(), b.clone()], 2.0, DEFAULT_DENOMINATOR_CAP).is_err());

        let eps = 0.2;
        let r = measures_to_diagrams_quasi(&[a.clone(), b.clone()], 2.0, eps, DEFAULT_DENOMINATOR_CAP).unwrap();
        let Params::MeasureQuasi(q) = &r.params else { panic!() };
        assert!(q.approx_errors.iter().all(|&e| e < eps / 2.0));
        let d = diagrams(&r);
        let source = oracle_wasserstein_discrete(&a, &b, 2.0).unwrap();
        let image = wasserstein_pd(&d[0], &d[1], 2.0).unwrap().distance;
        assert!((source - image).abs() < eps, "{source} vs {image}");
    }

    #[test]
    fn quasi_on_rational_input_is_exact() {
        let a = DiscreteMeasure::from_reals(vec![pt(0.0, 0.0), pt(1.0, 0.0)], vec![0.25, 0.75]).unwrap();
        let b = DiscreteMeasure::dirac(pt(0.0, 1.0));
        let r = measures_to_diagrams_quasi(&[a.clone(), b.clone()], 1.0, 0.01, DEFAULT_DENOMINATOR_CAP).unwrap();
        let Params::MeasureQuasi(q) = &r.params else { panic!() };
        assert_eq!(q.approx_denominator, 4);
        assert_eq!(q.approx_errors, vec![0.0, 0.0]);
        let d = diagrams(&r);
        let source = wasserstein(&a, &b, 1.0).unwrap().distance;
        assert_relative_eq!(wasserstein_pd(&d[0], &d[1], 1.0).unwrap().distance, source, max_relative = 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(measures_to_diagrams_isometric(&[], 1.0, 10).is_err());
        let a = DiscreteMeasure::dirac(pt(0.0, 0.0));
        assert!(measures_to_diagrams_quasi(&[a.clone()], 1.0, 0.0, 10).is_err());
        assert!(measures_to_diagrams_isometric(&[a], 0.5, 10).is_err());
    }
}
