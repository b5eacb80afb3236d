use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ucp_trunc::harmonic::{box_points, convolve, fejer_kernel, random_self_adjoint, sup_norm, TrigPoly};
use ucp_trunc::lattice::{intersection_counts, lattice_points, polyhedral_fejer_kernel, LatticePolytope};
use ucp_trunc::linalg::{eigh, CMat, C64};
use ucp_trunc::opsys::{commutator, operator_norm, DiracTruncation, IndexSet, ToeplitzOperator};
use ucp_trunc::truncation::{TruncationPair, Truncated, Variant};
use ucp_trunc::ucpmetric::{sample_choi_ucp, truncated_triple, DistanceSolver, MetricConfig, UcpMap};

fn c64() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn hermitian(n: usize) -> impl Strategy<Value = CMat> {
    prop::collection::vec(c64(), n * n).prop_map(move |v| {
        let a = CMat::from_fn(n, n, |i, j| v[i * n + j]);
        a.add(&a.adjoint()).scale(C64::new(0.5, 0.0))
    })
}

fn circle_variant() -> impl Strategy<Value = Variant> {
    (1usize..12, any::<bool>()).prop_map(|(n, fr)| if fr { Variant::FejerRiesz { n } } else { Variant::ToeplitzCircle { n } })
}

fn torus_variant() -> impl Strategy<Value = Variant> {
    (1usize..4, 0usize..3).prop_map(|(l, kind)| match kind {
        0 => Variant::TorusSpherical { dim: 2, radius: l },
        1 => Variant::TorusPolyhedral { polytope: LatticePolytope::cube(2), level: l },
        _ => Variant::TorusPolyhedral { polytope: LatticePolytope::cross(2), level: l },
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fejer_coefficients_and_positivity(n in 1usize..80) {
        let k = fejer_kernel(n).unwrap();
        prop_assert!(k.grid_min() >= -1e-10);
        for j in -(n as i64) - 1..=n as i64 + 1 {
            let want = (1.0 - j.abs() as f64 / n as f64).max(0.0);
            prop_assert!((k.hat(&[j]).re - want).abs() <= 1e-15);
        }
    }

    #[test]
    fn intersection_counts_are_symmetric_and_total(level in 1usize..5, cross in any::<bool>()) {
        let p = if cross { LatticePolytope::cross(2) } else { LatticePolytope::cube(2) };
        let s = lattice_points(&p, level).unwrap();
        let counts = intersection_counts(&s);
        prop_assert_eq!(counts.values().sum::<usize>(), s.len() * s.len());
        prop_assert_eq!(counts[&vec![0, 0]], s.len());
        for (m, c) in &counts {
            prop_assert_eq!(counts.get(&vec![-m[0], -m[1]]), Some(c));
        }
        let k = polyhedral_fejer_kernel(&p, level).unwrap();
        prop_assert!(k.grid_min() >= -1e-10);
        prop_assert!((k.mean() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn convolution_multiplies_coefficients(n in 1usize..10, coeffs in prop::collection::vec(c64(), 1..15)) {
        let b = coeffs.len() as i64 / 2;
        let f = TrigPoly::from_coeffs(1, coeffs.iter().enumerate().map(|(i, c)| (vec![i as i64 - b], *c)));
        let k = fejer_kernel(n).unwrap();
        let g = convolve(&k, &f).unwrap();
        for j in -b - 1..=b + 1 {
            prop_assert!((g.coeff(&[j]) - f.coeff(&[j]) * k.hat(&[j])).norm() <= 1e-14);
        }
    }

    #[test]
    fn eigh_reconstructs(a in (1usize..7).prop_flat_map(hermitian)) {
        let e = eigh(&a);
        let v = &e.vectors;
        let back = v.mul(&CMat::diag(&e.values)).mul(&v.adjoint());
        prop_assert!(back.sub(&a).max_abs() <= 1e-10);
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn adjoint_has_equal_norm(n in 1usize..7, sym in prop::collection::vec(c64(), 13)) {
        let set = Arc::new(IndexSet::interval(n).unwrap());
        let t = ToeplitzOperator::new(set, sym.iter().enumerate().map(|(i, c)| (vec![i as i64 - 6], *c)));
        prop_assert_eq!(t.adjoint().matrix(), t.matrix().adjoint());
        prop_assert!((t.adjoint().norm().unwrap() - t.norm().unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn commutator_is_translation_invariant(shift in prop::array::uniform2(-5i64..5), sym in prop::collection::vec(c64(), 9)) {
        let base = Arc::new(IndexSet::ball(2, 2).unwrap());
        let moved = Arc::new(base.shifted(&shift));
        let symbol: Vec<(Vec<i64>, C64)> = box_points(2, 1).into_iter().zip(sym).collect();
        let a = commutator(&DiracTruncation::new(base.clone()).unwrap(), &ToeplitzOperator::new(base, symbol.clone())).unwrap();
        let b = commutator(&DiracTruncation::new(moved.clone()).unwrap(), &ToeplitzOperator::new(moved, symbol)).unwrap();
        prop_assert!(a.sub(&b).max_abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn compression_is_contractive(v in prop_oneof![circle_variant(), torus_variant()], seed in any::<u64>()) {
        let pair = TruncationPair::new(v.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_self_adjoint(v.dim(), v.level() as i64 + 1, &mut rng);
        let t = pair.compress(&f).unwrap();
        let norm_f = sup_norm(&f).upper;
        prop_assert!(pair.norm(&t).unwrap().lower <= norm_f + 1e-9);
        let g = pair.symbolize(&t).unwrap();
        prop_assert!(sup_norm(&g).lower <= norm_f + 1e-9);
        if let Truncated::Op(op) = &t {
            let lip_f = ucp_trunc::opsys::lipschitz_seminorm_fn(&f).upper;
            prop_assert!(pair.lipschitz(&t).unwrap().lower <= lip_f + 1e-9);
            prop_assert!(op.is_self_adjoint(1e-12));
        }
    }

    #[test]
    fn roundtrip_is_kernel_convolution(v in prop_oneof![circle_variant(), torus_variant()], seed in any::<u64>()) {
        let pair = TruncationPair::new(v.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_self_adjoint(v.dim(), v.level() as i64 + 2, &mut rng);
        let g = pair.symbolize(&pair.compress(&f).unwrap()).unwrap();
        let want = convolve(pair.kernel().unwrap(), &f).unwrap();
        prop_assert!(g.max_coeff_diff(&want) <= 1e-12);
    }

    #[test]
    fn choi_samples_are_unital(n in 1usize..5, m in 1usize..3, seed in any::<u64>()) {
        let set = Arc::new(IndexSet::interval(n).unwrap());
        let phi = sample_choi_ucp(set.clone(), 1, m, 2, seed).unwrap();
        let one = phi.evaluate_matrix(&CMat::identity(n)).unwrap();
        prop_assert!(one.sub(&CMat::identity(m)).max_abs() <= 1e-12);
        prop_assert!(operator_norm(&phi.evaluate_matrix(&ToeplitzOperator::new(set, [(vec![1], C64::new(1.0, 0.0))]).matrix()).unwrap()).unwrap() <= 1.0 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn distance_is_a_pseudometric(n in 2usize..4, seeds in prop::array::uniform3(any::<u64>())) {
        let cfg = MetricConfig::default();
        let pair = TruncationPair::new(Variant::ToeplitzCircle { n }).unwrap();
        let set = pair.index_set().unwrap().clone();
        let solver = DistanceSolver::new(truncated_triple(&pair, &cfg).unwrap(), cfg.clone()).unwrap();
        let maps: Vec<UcpMap> = seeds.iter().map(|&s| UcpMap::Choi(sample_choi_ucp(set.clone(), 1, 1, 2, s).unwrap())).collect();
        let d = |i: usize, j: usize| solver.distance(&maps[i], &maps[j]).unwrap().value;
        prop_assert_eq!(d(0, 0), 0.0);
        prop_assert_eq!(d(0, 1).to_bits(), d(1, 0).to_bits());
        prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 3.0 * cfg.tol_obj);
        prop_assert!(d(0, 1) >= 0.0);
    }
}
