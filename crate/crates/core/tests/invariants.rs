//! Property tests for the spec-level invariants of the distribution and
//! network layers.

use hemo_uq_core::assembly::{steady_state, Externals};
use hemo_uq_core::dist::{lognormal_from_moments, Distribution1D, SpdpModel};
use hemo_uq_core::network::{build_ocular_network, starling_resistance, CircuitParameters};
use hemo_uq_core::rng::sample_rng;
use hemo_uq_core::uq::summary_stats;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lognormal_moment_matching_is_exact(mean in 0.5f64..200.0, sd in 0.05f64..40.0) {
        let d = lognormal_from_moments(mean, sd).unwrap();
        prop_assert!((d.mean() - mean).abs() / mean < 1e-12);
        prop_assert!((d.sd() - sd).abs() / sd < 1e-12);
    }

    #[test]
    fn lognormal_samples_stay_positive(seed in 0u64..1000, mean in 1.0f64..50.0, sd in 0.1f64..10.0) {
        let d = lognormal_from_moments(mean, sd).unwrap();
        for j in 0..64 {
            let x = d.sample_with(&mut sample_rng(seed, 0, j));
            prop_assert!(x > 0.0);
        }
    }

    #[test]
    fn truncated_normal_honours_physiological_floor(
        seed in 0u64..1000,
        mean in 8.0f64..25.0,
        sd in 0.5f64..6.0,
    ) {
        // IOP floor of 5 mmHg expressed as a truncation bound.
        let d = Distribution1D::TruncatedNormal { mean, sd, lo: 5.0, hi: 60.0 };
        for j in 0..64 {
            let x = d.sample_with(&mut sample_rng(seed, 1, j));
            prop_assert!((5.0..=60.0).contains(&x));
        }
    }

    #[test]
    fn quantile_cdf_round_trip(
        mean in -50.0f64..150.0,
        sd in 0.1f64..30.0,
        u in 1e-6f64..0.999999,
    ) {
        let d = Distribution1D::Normal { mean, sd };
        let x = d.quantile(u).unwrap();
        prop_assert!((d.cdf(x) - u).abs() < 1e-8);
    }

    #[test]
    fn spdp_round_trip_where_defined(map in 40.0f64..180.0) {
        let model = SpdpModel::default();
        if let Ok((sp, dp)) = model.spdp_from_map(map) {
            let back = hemo_uq_core::dist::map_from_spdp(sp, dp).unwrap();
            prop_assert!((back - map).abs() < 1e-12);
        }
    }

    #[test]
    fn starling_resistance_monotone_and_bounded(
        r_base in 10.0f64..1e6,
        k in 0.05f64..5.0,
        p_int in -20.0f64..80.0,
    ) {
        let mut prev = f64::NEG_INFINITY;
        for step in 0..60 {
            let p_ext = -30.0 + 2.0 * step as f64;
            let r = starling_resistance(r_base, p_int, p_ext, k);
            prop_assert!(r >= r_base);
            prop_assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn boxplot_outliers_lie_outside_fences(values in prop::collection::vec(-100.0f64..100.0, 8..200)) {
        let stat = summary_stats(&values);
        let iqr = stat.boxplot.q3 - stat.boxplot.q1;
        prop_assert!(stat.boxplot.q1 <= stat.boxplot.median);
        prop_assert!(stat.boxplot.median <= stat.boxplot.q3);
        for o in &stat.boxplot.outliers {
            prop_assert!(*o < stat.boxplot.q1 - 1.5 * iqr || *o > stat.boxplot.q3 + 1.5 * iqr);
        }
        prop_assert_eq!(stat.histogram.counts.iter().sum::<usize>(), values.len());
    }
}

proptest! {
    // Steady solves are heavier; fewer cases.
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn starling_branch_flow_non_increasing_in_iop(
        source in 70.0f64..140.0,
        rltp in 5.0f64..12.0,
    ) {
        let model = build_ocular_network(&CircuitParameters::default()).unwrap();
        let crv_probe = 1; // observable order: CRA, CRV, LC
        let mut prev = f64::INFINITY;
        for i in 0..=35 {
            let iop = 5.0 + i as f64;
            let sol = steady_state(&model, source, Externals { iop, rltp }).unwrap();
            let q = sol.observable_flows[crv_probe];
            prop_assert!(q <= prev + prev.abs().max(1e-12) * 1e-9,
                "flow rose from {prev} to {q} at IOP {iop}");
            prev = q;
        }
    }
}
