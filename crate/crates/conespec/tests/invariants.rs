//! Property-based invariants over randomized models, clouds, and formulas.

use ndarray::Array2;
use proptest::prelude::*;

use conespec::domain::Domain;
use conespec::embedding::{self, EmbeddedCloud, Normalization};
use conespec::graph;
use conespec::mixture::{ComponentKind, MixtureModel};
use conespec::quad::QuadratureSpec;
use conespec::report;

fn gaussian_mixture_strategy() -> impl Strategy<Value = (MixtureModel, Vec<f64>)> {
    // 2..4 gaussian components with random means/scales/weights plus probe points
    (2usize..=4)
        .prop_flat_map(|k| {
            (
                proptest::collection::vec((-3.0f64..3.0, 0.4f64..1.5), k),
                proptest::collection::vec(0.1f64..1.0, k),
                proptest::collection::vec(-4.0f64..7.0, 8),
            )
        })
        .prop_map(|(comps, raw_w, probes)| {
            let total: f64 = raw_w.iter().sum();
            let mut weights: Vec<f64> = raw_w.iter().map(|w| w / total).collect();
            let correction: f64 = 1.0 - weights.iter().sum::<f64>();
            weights[0] += correction;
            let kinds = comps
                .iter()
                .map(|(mean, sd)| ComponentKind::Gaussian {
                    mean: *mean,
                    sd: *sd,
                })
                .collect();
            let spec = QuadratureSpec::simpson(257).unwrap();
            let model = MixtureModel::new(
                Domain::interval(-25.0, 25.0).unwrap(),
                kinds,
                weights,
                &spec,
            )
            .unwrap();
            (model, probes)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn likelihoods_are_normalized((model, probes) in gaussian_mixture_strategy()) {
        // Σ_k q_k(x)² = 1 wherever the density is positive
        for x in probes {
            let q = model.likelihood_vector([x, 0.0]).unwrap();
            let sum_sq: f64 = q.iter().map(|v| v * v).sum();
            prop_assert!((sum_sq - 1.0).abs() < 1e-10, "sum of squares {sum_sq} at x={x}");
            prop_assert!(q.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn overlap_stays_in_the_stated_range((model, _) in gaussian_mixture_strategy()) {
        let spec = QuadratureSpec::simpson(2049).unwrap();
        let s = model.overlap_parameter(&spec).value;
        let w_min = model.weights.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(s > 0.0, "overlapping gaussians must overlap, S = {s}");
        prop_assert!(s < 1.0 / w_min + 1e-9, "S = {s} exceeds 1/w_min = {}", 1.0 / w_min);
    }

    #[test]
    fn binning_equals_quadratic_scan(
        pts in proptest::collection::vec((0.0f64..4.0, 0.0f64..2.0), 2..200),
        eps in 0.05f64..0.8,
    ) {
        let points: Vec<[f64; 2]> = pts.iter().map(|(x, y)| [*x, *y]).collect();
        let fast = graph::neighbor_pairs(&points, eps);
        let mut brute = Vec::new();
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                let d2 = (points[i][0] - points[j][0]).powi(2) + (points[i][1] - points[j][1]).powi(2);
                if d2 < eps * eps {
                    brute.push((i, j));
                }
            }
        }
        prop_assert_eq!(fast.len(), brute.len());
        for (a, b) in fast.iter().zip(&brute) {
            prop_assert_eq!((a.0, a.1), *b);
        }
    }

    #[test]
    fn w2_symmetry_and_identity(
        a in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 6),
        b in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 6),
    ) {
        let mk = |rows: &[(f64, f64)]| {
            let mut pts = Array2::zeros((rows.len(), 2));
            for (i, (x, y)) in rows.iter().enumerate() {
                pts[[i, 0]] = *x;
                pts[[i, 1]] = *y;
            }
            EmbeddedCloud::uniform(pts, Normalization::Unspecified)
        };
        let (ca, cb) = (mk(&a), mk(&b));
        let dab = embedding::wasserstein2(&ca, &cb).unwrap().value;
        let dba = embedding::wasserstein2(&cb, &ca).unwrap().value;
        prop_assert!((dab - dba).abs() < 1e-12);
        prop_assert!(embedding::wasserstein2(&ca, &ca).unwrap().value == 0.0);
        prop_assert!(dab >= 0.0);
    }

    #[test]
    fn verify_cone_structure_rotation_invariant(
        angles in proptest::collection::vec(0.0f64..std::f64::consts::TAU, 40),
        rot in 0.0f64..std::f64::consts::TAU,
        sigma in 0.05f64..0.7,
        r in 0.0f64..1.0,
    ) {
        let mut pts = Array2::zeros((angles.len(), 2));
        for (i, th) in angles.iter().enumerate() {
            pts[[i, 0]] = 2.0 * th.cos();
            pts[[i, 1]] = 2.0 * th.sin();
        }
        let cloud = EmbeddedCloud::uniform(pts.clone(), Normalization::Unspecified);
        let basis = ndarray::array![[1.0, 0.0], [0.0, 1.0]];
        let before = embedding::verify_cone_structure(&cloud, &basis, sigma, r).unwrap();
        let rotm = ndarray::array![[rot.cos(), -rot.sin()], [rot.sin(), rot.cos()]];
        let rotated = EmbeddedCloud::uniform(pts.dot(&rotm.t()), Normalization::Unspecified);
        let rotated_basis = rotm.dot(&basis);
        let after = embedding::verify_cone_structure(&rotated, &rotated_basis, sigma, r).unwrap();
        prop_assert!((before.delta - after.delta).abs() < 1e-12);
    }

    #[test]
    fn certificate_formulas_are_total_and_pure(
        s in 0.0f64..0.2,
        c in 1e-6f64..0.5,
        theta in 0.05f64..10.0,
        n in 2usize..6,
    ) {
        let t1 = report::tau(s, c, theta, n);
        let t2 = report::tau(s, c, theta, n);
        prop_assert_eq!(t1.value, t2.value);
        if let Some(t) = t1.value {
            prop_assert!(t.is_finite());
            prop_assert!(t >= s.sqrt());
        }
        let d = report::delta_star(s, 0.4, &vec![1.0 / n as f64; n], n);
        prop_assert!(d.value.is_finite() && d.value >= 0.0);
        let p = report::phi(s, c, theta, n, 0.1, 5000, 2, 1.0);
        if let Some(v) = p.value {
            prop_assert!(v.is_finite() && v > 0.0);
        }
    }
}

#[test]
fn fq_dumbbell_detection_stays_below_delta_star() {
    // the square-root-likelihood cloud of the well-separated dumbbell
    // concentrates inside the cones more tightly than the admissible defect
    use conespec::embedding::DetectionOutcome;
    use conespec::presets::{dumbbell, DumbbellPartition};

    let quad = QuadratureSpec::simpson(1025).unwrap();
    let built = dumbbell(0.01, 0.1, DumbbellPartition::Good, &quad).unwrap();
    let s = built.model.overlap_parameter(&quad).value;
    let sigma = std::f64::consts::FRAC_PI_8;
    let delta_star = report::delta_star(s, sigma, &built.model.weights, 2).value;

    let pts = built.model.sample(1500, 11).unwrap();
    let cloud = embedding::fq_embedding(&built.model, &pts).unwrap();
    match embedding::detect_cone_structure_at(&cloud, 2, sigma, 1.0) {
        DetectionOutcome::Detected(c) => {
            assert!(
                c.delta <= delta_star,
                "achieved delta {} above delta* {delta_star}",
                c.delta
            );
        }
        DetectionOutcome::Failed { reason } => panic!("{reason}"),
    }
}

#[test]
fn quadrature_doubling_is_stable_on_the_worked_models() {
    // the gaussian pair and the dumbbell both settle below 1e-6 under a
    // doubling of the quadrature rule
    let spec = QuadratureSpec::simpson(4097).unwrap();
    let gauss = conespec::presets::gaussian_pair(4.0, &spec).unwrap();
    let s = gauss.model.overlap_parameter(&spec);
    let c = gauss.model.coupling_parameter(&spec);
    assert!(
        s.refinement_delta < 1e-6 && !s.accuracy_warning,
        "gaussian S delta {}",
        s.refinement_delta
    );
    assert!(
        c.refinement_delta < 1e-6 && !c.accuracy_warning,
        "gaussian C delta {}",
        c.refinement_delta
    );

    let spec = QuadratureSpec::simpson(8193).unwrap();
    let built =
        conespec::presets::dumbbell(0.01, 0.1, conespec::presets::DumbbellPartition::Good, &spec)
            .unwrap();
    let s = built.model.overlap_parameter(&spec);
    let c = built.model.coupling_parameter(&spec);
    assert!(
        s.refinement_delta < 1e-6 && !s.accuracy_warning,
        "dumbbell S delta {}",
        s.refinement_delta
    );
    assert!(
        c.refinement_delta < 1e-6 && !c.accuracy_warning,
        "dumbbell C delta {}",
        c.refinement_delta
    );
}
