//! Property tests for the structural invariants: kernel block symmetry,
//! estimator exchange symmetry, component identities, assignment purity and
//! variance monotonicity.

use proptest::prelude::*;

use tuplewise::data::{DataPoint, GeneralizedSamples, TwoSampleDataset};
use tuplewise::estimators::{complete_generalized, complete_two_sample};
use tuplewise::kernels::Kernel;
use tuplewise::model::{
    hoeffding_components_enumerated, DiscreteAucDistribution, VarianceComponents,
};
use tuplewise::partition::{assign, SchemeKind};
use tuplewise::rng::SeedProtocol;
use tuplewise::util::fmt_f64;
use tuplewise::variance::{
    var_local_complete_propswor, var_local_complete_propswr, var_repart_complete_propswor,
    var_repart_complete_propswr,
};

fn finite_point() -> impl Strategy<Value = f64> {
    -1e6f64..1e6f64
}

proptest! {
    // Permuting the arguments inside one block leaves any degree-2 kernel
    // value unchanged.
    #[test]
    fn block_symmetry_of_degree_two_kernels(a in finite_point(), b in finite_point()) {
        for kernel in [Kernel::Gini, Kernel::SampleVariance] {
            let fwd = GeneralizedSamples::from_scalar_samples(vec![vec![a, b]], vec![2]).unwrap();
            let rev = GeneralizedSamples::from_scalar_samples(vec![vec![b, a]], vec![2]).unwrap();
            prop_assert_eq!(
                complete_generalized(&fwd, &kernel).unwrap(),
                complete_generalized(&rev, &kernel).unwrap()
            );
        }
    }

    // The complete statistic is invariant under reordering either sample.
    #[test]
    fn exchange_symmetry(
        mut xs in proptest::collection::vec(finite_point(), 2..8),
        mut zs in proptest::collection::vec(finite_point(), 2..8),
        seed in any::<u64>(),
    ) {
        let kernel = Kernel::AucIndicator;
        let before = complete_two_sample(
            &TwoSampleDataset::from_scalars(xs.clone(), zs.clone()).unwrap(),
            &kernel,
        )
        .unwrap();
        let mut rng = SeedProtocol::new(seed).run_stream(0, tuplewise::rng::StreamPurpose::Eval);
        tuplewise::rng::shuffle(&mut rng, &mut xs);
        tuplewise::rng::shuffle(&mut rng, &mut zs);
        let after = complete_two_sample(
            &TwoSampleDataset::from_scalars(xs, zs).unwrap(),
            &kernel,
        )
        .unwrap();
        prop_assert_eq!(before, after);
    }

    // Enumerated components satisfy the decomposition identity for every
    // built-in pairwise kernel evaluable on the discrete support.
    #[test]
    fn component_identity_for_all_pairwise_kernels(
        p in 0.0f64..=1.0,
        q in 0.0f64..=1.0,
        w in -2.0f64..2.0,
    ) {
        let dist = DiscreteAucDistribution::new(p, q).unwrap();
        let kernels = [
            Kernel::AucIndicator,
            Kernel::AucHalfTies,
            Kernel::Product,
            Kernel::Gini,
            Kernel::SampleVariance,
            Kernel::HingeSurrogate { weights: vec![w], bias: 0.3 },
            Kernel::Constant { value: 1.7 },
        ];
        for kernel in kernels {
            let c = hoeffding_components_enumerated(&kernel, &dist).unwrap();
            let sum = c.sigma0_sq + c.sigma1_sq + c.sigma2_sq;
            let scale = sum.abs().max(c.sigma_sq.abs()).max(1.0);
            prop_assert!(
                (sum - c.sigma_sq).abs() <= 1e-12 * scale,
                "{kernel:?}: {sum} vs {}", c.sigma_sq
            );
        }
    }

    // Assignments are pure functions of (scheme, sizes, protocol, epoch).
    #[test]
    fn assignment_determinism(
        seed in any::<u64>(),
        epoch in 0u64..1000,
        blocks in 1usize..5,
    ) {
        let workers = 3;
        let n = workers * blocks * 2;
        let m = workers * blocks;
        for scheme in [
            SchemeKind::PropSwor,
            SchemeKind::Swor,
            SchemeKind::PropSwr,
            SchemeKind::DeterministicShuffle,
        ] {
            let p = SeedProtocol::new(seed);
            let a = assign(scheme, n, m, workers, &p, epoch).unwrap();
            let b = assign(scheme, n, m, workers, &p, epoch).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    // Repartitioned variance is nonincreasing in T; worker-local variance is
    // nondecreasing in N; both schemes.
    #[test]
    fn variance_monotonicity(
        s0 in 0.0f64..1.0,
        s1 in 0.0f64..1.0,
        s2 in 0.0f64..1.0,
    ) {
        let c = VarianceComponents::from_parts(s0, s1, s2);
        let (n, m) = (840u64, 840u64);
        let mut prev = f64::INFINITY;
        for t in 1..=8u64 {
            let v = var_repart_complete_propswor(&c, n, m, 4, t).unwrap();
            prop_assert!(v <= prev + 1e-18);
            prev = v;
        }
        let mut prev = f64::INFINITY;
        for t in 1..=8u64 {
            let v = var_repart_complete_propswr(&c, n, m, 4, t).unwrap();
            prop_assert!(v <= prev + 1e-18);
            prev = v;
        }
        let mut prev = 0.0;
        for workers in [1u64, 2, 3, 4, 6, 8] {
            let v = var_local_complete_propswor(&c, n, m, workers).unwrap();
            prop_assert!(v >= prev - 1e-18);
            prev = v;
        }
        let mut prev = 0.0;
        for workers in [1u64, 2, 3, 4, 6, 8] {
            let v = var_local_complete_propswr(&c, n, m, workers).unwrap();
            prop_assert!(v >= prev - 1e-18);
            prev = v;
        }
    }

    // 17-significant-digit serialization round-trips exactly.
    #[test]
    fn csv_float_format_round_trips(x in any::<f64>()) {
        prop_assume!(x.is_finite());
        let s = fmt_f64(x);
        prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    // Kernel evaluation is deterministic and finite on finite inputs.
    #[test]
    fn kernels_are_finite_and_deterministic(
        x in proptest::collection::vec(finite_point(), 2),
        z in proptest::collection::vec(finite_point(), 2),
    ) {
        let kernels = [
            Kernel::Product,
            Kernel::KendallTau,
            Kernel::HingeSurrogate { weights: vec![0.5, -0.25], bias: 1.0 },
        ];
        for kernel in kernels {
            let a = kernel
                .eval_pair(&x, &z)
                .unwrap();
            let b = kernel.eval_pair(&x, &z).unwrap();
            prop_assert!(a.is_finite());
            prop_assert_eq!(a, b);
        }
    }

    // Generalized VUS block symmetry is trivial (degree-one blocks), but the
    // evaluator must stay consistent under K = 2 with the pairwise view.
    #[test]
    fn vus_pairwise_matches_tuple_form(a in finite_point(), b in finite_point()) {
        prop_assume!(a != b);
        let pair = Kernel::Vus.eval_pair(&[a], &[b]).unwrap();
        let pa = DataPoint::scalar(a).unwrap();
        let pb = DataPoint::scalar(b).unwrap();
        let g = GeneralizedSamples::new(vec![vec![pa], vec![pb]], vec![1, 1]).unwrap();
        let tuple = complete_generalized(&g, &Kernel::Vus).unwrap();
        prop_assert_eq!(pair, tuple);
    }
}
