//! Invariants checked over generated operators and cone elements.

mod common;

use common::{oracle_spr, scaled_to};
use posstab::cones::{self, ConeKind};
use posstab::criteria::{strict_decay_point, DEFAULT_BOUNDARY_BAND};
use posstab::io::{parse_operator_json, to_json_string};
use posstab::linalg::{add, dot, sub};
use posstab::operators::spectral_radius_on_cone;
use posstab::sampling::{cone_point, stream, unit_cone_point, unit_direction};
use posstab::{cross_check, CertificateReport, ConeSpec, Consensus, CriterionId, CrossCheckConfig, Matrix, Norm, OperatorSpec};
use proptest::prelude::*;

const NORMS: [Norm; 3] = [Norm::L1, Norm::L2, Norm::LInf];

fn any_cone() -> impl Strategy<Value = ConeSpec> {
    (prop::bool::ANY, 2usize..=6, 0usize..3).prop_map(|(lorentz, n, k)| {
        if lorentz {
            ConeSpec::lorentz(n, NORMS[k])
        } else {
            ConeSpec::orthant(n, NORMS[k])
        }
    })
}

fn case() -> impl Strategy<Value = (u64, usize, f64, Norm)> {
    (any::<u64>(), 2usize..=6, prop::sample::select(vec![0.3, 0.7, 0.9, 1.1, 1.5, 3.0]), 0usize..3)
        .prop_map(|(seed, n, t, k)| (seed, n, t, NORMS[k]))
}

fn operator(seed: u64, n: usize, target: f64) -> OperatorSpec {
    scaled_to(&mut stream(seed, "properties"), n, target)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decomposition_splits_within_constant(cone in any_cone(), seed in any::<u64>()) {
        let mut rng = stream(seed, "decompose");
        let x: Vec<f64> = (0..cone.dim).map(|_| 2.0 * rand::Rng::random::<f64>(&mut rng) - 1.0).collect();
        let (y, z) = cones::decompose(&cone, &x).unwrap();
        let m = cone.constants().decomposition_m;
        let nx = cone.norm.of(&x);
        prop_assert!(cone.contains(&y, 1e-12).unwrap());
        prop_assert!(cone.contains(&z, 1e-12).unwrap());
        prop_assert!(cone.norm.of(&sub(&sub(&y, &z), &x)) <= 1e-12 * (1.0 + nx));
        prop_assert!(cone.norm.of(&y) <= m * nx * (1.0 + 1e-12) + 1e-15);
        prop_assert!(cone.norm.of(&z) <= m * nx * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn normality_bounds_ordered_pairs(cone in any_cone(), seed in any::<u64>()) {
        let mut rng = stream(seed, "normality");
        let x = cone_point(&mut rng, &cone);
        let y = add(&x, &cone_point(&mut rng, &cone));
        let c = cone.constants().normality_c;
        prop_assert!(cone.norm.of(&x) <= c * cone.norm.of(&y) * (1.0 + 1e-12));
    }

    #[test]
    fn dual_functional_is_positive_and_bounded(cone in any_cone(), seed in any::<u64>()) {
        let mut rng = stream(seed, "dual");
        let x = unit_cone_point(&mut rng, &cone);
        let f = cones::dual_functional(&cone, &x).unwrap();
        // both cones are self-dual
        prop_assert!(cone.contains(&f, 1e-12).unwrap());
        prop_assert!(dot(&f, &x) >= 1.0 - 1e-12);
        prop_assert!(cone.norm.dual().of(&f) <= cone.constants().dual_m_prime * (1.0 + 1e-12));
        for _ in 0..8 {
            let w = cone_point(&mut rng, &cone);
            prop_assert!(dot(&f, &w) >= -1e-12);
        }
    }

    #[test]
    fn interior_margin_ball_lies_in_cone(cone in any_cone(), seed in any::<u64>()) {
        let mut rng = stream(seed, "interior");
        let mut x = cone_point(&mut rng, &cone);
        if cone.kind == ConeKind::Orthant {
            x.iter_mut().for_each(|v| *v += 0.1);
        }
        let (inside, margin) = cone.is_interior(&x).unwrap();
        if inside {
            prop_assert!(margin > 0.0);
            for _ in 0..32 {
                let u = unit_direction(&mut rng, cone.dim);
                let u: Vec<f64> = u.iter().map(|v| v / cone.norm.of(&u)).collect();
                let p: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + 0.999 * margin * b).collect();
                prop_assert!(cone.contains(&p, 1e-12).unwrap(), "margin {} at {:?}", margin, x);
            }
        } else {
            prop_assert!(margin <= 0.0);
        }
    }

    #[test]
    fn every_witness_reverifies((seed, n, target, norm) in case()) {
        let op = operator(seed, n, target);
        let cone = ConeSpec::orthant(n, norm);
        let r = cross_check(&op, &cone, &CrossCheckConfig { include_iss: false, include_lyapunov: false, ..Default::default() }).unwrap();
        for v in &r.criteria {
            prop_assert!(v.witness.is_none() || v.reverify(&op, &cone), "{:?}", v);
        }
    }

    #[test]
    fn consensus_follows_spectral_radius((seed, n, target, norm) in case()) {
        let op = operator(seed, n, target);
        let rho = oracle_spr(&op.to_matrix());
        prop_assume!((rho - 1.0).abs() > 2.0 * DEFAULT_BOUNDARY_BAND);
        let r = cross_check(&op, &ConeSpec::orthant(n, norm), &CrossCheckConfig::default()).unwrap();
        let expected = if rho < 1.0 { Consensus::Stable } else { Consensus::Unstable };
        prop_assert_eq!(r.consensus, expected);
    }

    #[test]
    fn diagonal_similarity_preserves_verdicts(
        (seed, n, target, norm) in case(),
        scales in prop::collection::vec(prop::sample::select(vec![0.5, 2.0]), 6),
    ) {
        let op = operator(seed, n, target);
        let d = &scales[..n];
        let t = op.to_matrix();
        let similar = OperatorSpec::dense(Matrix::from_fn(n, n, |i, j| d[i] * t[(i, j)] / d[j])).unwrap();
        let cone = ConeSpec::orthant(n, norm);
        let config = CrossCheckConfig { include_iss: false, include_lyapunov: false, ..Default::default() };
        let a = cross_check(&op, &cone, &config).unwrap();
        let b = cross_check(&similar, &cone, &config).unwrap();
        for id in [CriterionId::SimpleSg, CriterionId::SubfixedPos, CriterionId::ResolventPos, CriterionId::DualSg] {
            prop_assert_eq!(a.verdict(id).map(|v| v.holds), b.verdict(id).map(|v| v.holds), "{:?}", id);
        }
    }

    #[test]
    fn strict_decay_point_decays_along_orbit(
        (seed, n, _, norm) in case(),
        target in prop::sample::select(vec![0.3, 0.7, 0.9]),
    ) {
        let op = operator(seed, n, target);
        let cone = ConeSpec::orthant(n, norm);
        let upper = spectral_radius_on_cone(&op, &cone).unwrap().upper;
        let lambda = 0.5 * (upper + 1.0);
        let cert = strict_decay_point(&op, &cone, lambda, &vec![1.0; n]).unwrap();
        let mut v = cert.z.clone();
        let mut lk = 1.0;
        for _ in 0..20 {
            v = op.apply(&v).unwrap();
            lk *= lambda;
            for (a, z) in v.iter().zip(&cert.z) {
                prop_assert!(*a <= lk * z + 1e-10 * z.max(1.0));
            }
        }
    }

    #[test]
    fn operator_json_round_trips((seed, n, target, _) in case()) {
        let op = operator(seed, n, target);
        let back = parse_operator_json(&to_json_string(&op).unwrap()).unwrap();
        prop_assert_eq!(back, op);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn report_json_round_trips((seed, n, target, norm) in case()) {
        let op = operator(seed, n, target);
        let r = cross_check(&op, &ConeSpec::orthant(n, norm), &CrossCheckConfig::default()).unwrap();
        let text = to_json_string(&r).unwrap();
        let back: CertificateReport = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(to_json_string(&back).unwrap(), text);
    }
}
