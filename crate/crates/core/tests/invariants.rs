use std::collections::BTreeSet;
use std::sync::OnceLock;

use num_rational::BigRational;
use num_traits::FromPrimitive;
use proptest::prelude::*;

use poisson_k::distribution::principal_mode;
use poisson_k::params::kappa;
use poisson_k::{
    analyze_shape, exact_pmf_polynomial, excluded_values, median, mode_set, OrderKParams,
    ScaledPmfTable, DEFAULT_TIE_TOLERANCE,
};

fn table(k: u32, lambda: f64, n_max: usize) -> ScaledPmfTable {
    ScaledPmfTable::new(OrderKParams::new(k, lambda).unwrap(), n_max).unwrap()
}

fn excluded(k: u32) -> &'static BTreeSet<usize> {
    static CELL: OnceLock<Vec<BTreeSet<usize>>> = OnceLock::new();
    &CELL.get_or_init(|| (2..=12).map(|k| excluded_values(k).unwrap()).collect())[(k - 2) as usize]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recurrence_matches_enumeration(k in 1u32..=8, n in 0usize..=24, lambda in 0.05f64..2.0) {
        let exact = exact_pmf_polynomial(k, n).unwrap().eval_f64(&BigRational::from_f64(lambda).unwrap());
        let got = table(k, lambda, n).value(n);
        prop_assert!((got - exact).abs() <= 1e-12 * exact.abs(), "{got} vs {exact}");
    }

    #[test]
    fn pmf_sums_to_one(k in 1u32..=30, lambda in 0.01f64..3.0) {
        let p = OrderKParams::new(k, lambda).unwrap();
        let d = p.derived();
        let n_max = (d.mean + 40.0 * d.std_dev() + 10.0) as usize;
        let t = ScaledPmfTable::new(p, n_max).unwrap();
        prop_assert!((t.partial_mass() - 1.0).abs() < 1e-10, "mass {}", t.partial_mass());
    }

    #[test]
    fn increasing_run_up_to_k(k in 2u32..=40, lambda in 0.001f64..2.0) {
        let t = table(k, lambda, k as usize);
        for n in 1..k as usize {
            prop_assert!(t.value(n + 1) > t.value(n));
        }
        let p = OrderKParams::new(k, lambda).unwrap();
        let shape = analyze_shape(&ScaledPmfTable::new(p, poisson_k::distribution::mode_window_end(&p)).unwrap()).unwrap();
        prop_assert!(shape.increasing_run_ok);
    }

    #[test]
    fn heights_increase_with_lambda(k in 1u32..=20, n in 1usize..=60, lambda in 0.01f64..1.9, dl in 0.001f64..0.1) {
        prop_assert!(table(k, lambda + dl, n).value(n) > table(k, lambda, n).value(n));
    }

    #[test]
    fn mode_and_median_nondecreasing_in_lambda(k in 1u32..=25, lambda in 0.0f64..1.9, dl in 0.0f64..0.1) {
        let a = OrderKParams::new(k, lambda).unwrap();
        let b = OrderKParams::new(k, lambda + dl).unwrap();
        prop_assert!(principal_mode(&a).unwrap() <= principal_mode(&b).unwrap());
        prop_assert!(median(&a).unwrap() <= median(&b).unwrap());
    }

    #[test]
    fn mode_location(k in 2u32..=40, lambda in 0.001f64..2.0) {
        let p = OrderKParams::new(k, lambda).unwrap();
        let fm = (kappa(k) as f64 * lambda).floor() as usize;
        for m in mode_set(&p, DEFAULT_TIE_TOLERANCE).unwrap().modes {
            prop_assert!(m == 0 || (m >= k as usize && m != k as usize + 1 && m <= fm), "mode {m}");
        }
    }

    #[test]
    fn excluded_values_are_never_modes(k in 2u32..=12, lambda in 0.001f64..2.0) {
        let modes = mode_set(&OrderKParams::new(k, lambda).unwrap(), DEFAULT_TIE_TOLERANCE).unwrap().modes;
        for m in modes {
            prop_assert!(!excluded(k).contains(&m), "mode {m} is excluded for k = {k}");
        }
    }

    #[test]
    fn median_zero_iff_below_ln2_over_k(k in 1u32..=300, x in 0.0f64..3.0) {
        let threshold = std::f64::consts::LN_2 / k as f64;
        let lambda = x * threshold;
        prop_assume!((x - 1.0).abs() > 1e-9);
        let nu = median(&OrderKParams::new(k, lambda).unwrap()).unwrap();
        prop_assert_eq!(nu == 0, lambda <= threshold);
    }

    #[test]
    fn log_space_agrees_with_linear(k in 1u32..=20, lambda in 0.01f64..2.0, n in 0usize..200) {
        let p = OrderKParams::new(k, lambda).unwrap();
        let lin = ScaledPmfTable::linear(p, n).unwrap();
        let log = ScaledPmfTable::log_space(p, n);
        let (a, b) = (lin.ln_value(n), log.ln_value(n));
        prop_assert!((a - b).abs() <= 1e-11 * a.abs().max(1.0), "{a} vs {b}");
    }
}
