//! Property tests for the structural invariants: permutation and scale
//! behavior of the statistics, leave-one-out identities, and the
//! exact/incremental agreement of the sensitivity-curve routes.

use proptest::prelude::*;

use rscreg_core::functionals::{der_alienation, Functional};
use rscreg_core::influence::{rsc_full, Strategy as LooStrategy};
use rscreg_core::sample::{Observations, Sample};

fn value_vec(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0..150.0f64, 3..max_len)
}

fn positive_vec(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.1..100.0f64, 3..max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn functionals_are_permutation_invariant(values in positive_vec(60), seed in 0u64..1000) {
        let s = Sample::new(values.clone()).unwrap();
        // deterministic shuffle
        let mut shuffled = values;
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).max(1);
        for i in (1..shuffled.len()).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            shuffled.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let p = Sample::new(shuffled).unwrap();
        for f in [Functional::mean(), Functional::variance(), Functional::gini(),
                  Functional::quantile(0.37).unwrap(), Functional::der(0.5).unwrap()] {
            let a = f.eval(&s).unwrap();
            let b = f.eval(&p).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{} changed under permutation", f.name());
        }
    }

    #[test]
    fn scale_behavior_of_the_statistics(values in positive_vec(60), c in 0.01..50.0f64) {
        let s = Sample::new(values.clone()).unwrap();
        let scaled = Sample::new(values.iter().map(|v| v * c).collect()).unwrap();
        let gini = Functional::gini();
        let variance = Functional::variance();
        let mean = Functional::mean();
        prop_assert!((gini.eval(&scaled).unwrap() - gini.eval(&s).unwrap()).abs() <= 1e-12);
        let v = variance.eval(&s).unwrap();
        prop_assert!((variance.eval(&scaled).unwrap() - c * c * v).abs() <= 1e-9 * (1.0 + c * c * v));
        let m = mean.eval(&s).unwrap();
        prop_assert!((mean.eval(&scaled).unwrap() - c * m).abs() <= 1e-9 * (1.0 + (c * m).abs()));
    }

    #[test]
    fn leave_one_out_mean_identity(values in value_vec(40), j in 0usize..40) {
        let s = Sample::new(values).unwrap();
        let j = j % s.n();
        let view = s.leave_one_out(j).unwrap();
        let n = s.n() as f64;
        let expect = (n * s.cached_mean() - s.values()[j]) / (n - 1.0);
        prop_assert!((view.mean() - expect).abs() <= 1e-12 * expect.abs().max(1.0));
        prop_assert_eq!(view.values_iter().count(), s.n() - 1);
    }

    #[test]
    fn incremental_rsc_matches_exact(values in positive_vec(50)) {
        let s = Sample::new(values).unwrap();
        for f in [Functional::mean(), Functional::variance(), Functional::gini()] {
            let exact = rsc_full(&f, &s, LooStrategy::Exact).unwrap();
            let incr = rsc_full(&f, &s, LooStrategy::Incremental).unwrap();
            let scale = 1.0 + exact.v_n().abs()
                + exact.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, b) in exact.values().iter().zip(incr.values()) {
                prop_assert!((a - b).abs() <= 1e-9 * scale, "{} routes disagree", f.name());
            }
        }
    }

    #[test]
    fn alienation_mean_is_twice_mean_times_gini(values in positive_vec(80)) {
        let s = Sample::new(values).unwrap();
        let a = der_alienation(&s).unwrap();
        let gini = Functional::gini().eval(&s).unwrap();
        let target = 2.0 * s.cached_mean() * gini;
        prop_assert!((a.mean() - target).abs() <= 1e-10 * target.abs().max(1.0));
    }
}
