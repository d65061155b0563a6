use std::sync::Arc;

use proptest::prelude::*;
use vix_core::cir::CirParams;
use vix_core::config::RunConfig;
use vix_core::contract::{OptionSpec, Problem, VixMarket};
use vix_core::error::VixError;
use vix_core::models::*;
use vix_core::quadrature::QuadratureConfig;

fn central_diff(f: impl Fn(f64) -> f64, y: f64) -> f64 {
    let h = 1e-5 * y;
    (f(y + h) - f(y - h)) / (2.0 * h)
}

fn check_derivatives(m: &dyn VixModel, y: f64) -> std::result::Result<(), TestCaseError> {
    for k in 0..3u32 {
        let fd = central_diff(|v| m.deriv(v, k), y);
        let an = m.deriv(y, k + 1);
        prop_assert!((fd - an).abs() <= 1e-6 * an.abs().max(m.deriv(y, k).abs() / y), "k={} y={} fd={} an={}", k, y, fd, an);
    }
    Ok(())
}

fn term() -> impl Strategy<Value = Term> {
    (0.01f64..2.0, 0.1f64..2.0).prop_map(|(weight, power)| Term { weight, power })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn decreasing_derivatives(terms in prop::collection::vec(term(), 1..4), y in 0.05f64..20.0) {
        let m = DecreasingModel::new(&terms).unwrap();
        check_derivatives(&m, y)?;
        prop_assert!(m.f_d1(y) < 0.0 && m.f_d2(y) > 0.0);
    }

    #[test]
    fn increasing_derivatives(ws in prop::collection::vec((0.01f64..2.0, 0.1f64..1.0), 1..4), y in 0.05f64..20.0) {
        let terms: Vec<Term> = ws.into_iter().map(|(weight, power)| Term { weight, power }).collect();
        let m = IncreasingModel::new(&terms).unwrap();
        check_derivatives(&m, y)?;
        prop_assert!(m.f_d1(y) > 0.0 && m.f_d2(y) <= 0.0);
    }

    #[test]
    fn inverse_roundtrip(terms in prop::collection::vec(term(), 1..4), y in 0.01f64..50.0) {
        let m = DecreasingModel::new(&terms).unwrap();
        let back = m.inverse(m.f(y)).unwrap();
        prop_assert!((back / y - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mixture_branches(a in 0.01f64..1.0, b in 0.01f64..1.0, bump in 0.001f64..1.0) {
        let m = MixtureModel::three_halves_one_half(a, b).unwrap();
        let ym = m.y_min().unwrap();
        prop_assert!((ym - (a / b).sqrt()).abs() < 1e-9 * ym);
        let x = m.f(ym) + bump;
        let lo = m.mixture_inverse(x, Branch::Lower).unwrap();
        let hi = m.mixture_inverse(x, Branch::Upper).unwrap();
        prop_assert!(lo < ym && ym < hi);
        // roots of b y^2 - x y + a = 0
        let disc = (x * x - 4.0 * a * b).sqrt();
        prop_assert!((lo / ((x - disc) / (2.0 * b)) - 1.0).abs() < 1e-8);
        prop_assert!((hi / ((x + disc) / (2.0 * b)) - 1.0).abs() < 1e-8);
    }
}

#[test]
fn registry_builds_bundled_models() {
    let reg = ModelRegistry::default();
    assert_eq!(reg.names(), vec!["A1", "A2", "mixture"]);
    for n in RunConfig::bundled_names() {
        let c = RunConfig::bundled(n).unwrap();
        let m = reg.build(&c.model).unwrap();
        assert_eq!(m.to_doc().class, c.model.class);
    }
    let bad = ModelDoc { class: "cubic".into(), terms: vec![], terms_a2: vec![] };
    assert!(matches!(reg.build(&bad), Err(VixError::UnknownEntry(_))));
}

#[test]
fn fig7_map_at_one() {
    let m = MixtureModel::three_halves_one_half(0.07, 0.07).unwrap();
    assert!((m.f(1.0) - 0.14).abs() < 1e-15);
    assert!(m.f_d1(1.0).abs() < 1e-15);
}

fn problem(m: DynModel, cir: CirParams) -> Problem {
    let mk = VixMarket::new(m, cir, QuadratureConfig::default()).unwrap();
    Problem::new(mk, OptionSpec::call(0.15, 1.0, 0.05)).unwrap()
}

#[test]
fn waiting_benefit_three_halves() {
    let p = problem(Arc::new(DecreasingModel::three_halves()), CirParams::new(2.94, 17.10, 2.05).unwrap());
    // x (alpha - r) - (beta - kappa^2) x^2 + r K at x = 0.1
    let want = 0.1 * 2.89 - 12.8975 * 0.01 + 0.0075;
    assert!((p.h_kernel(0.1).unwrap() - want).abs() < 1e-12);
    assert!((want - 0.167525).abs() < 1e-12);
}

#[test]
fn critical_levels_closed_forms() {
    let p = problem(Arc::new(DecreasingModel::three_halves()), CirParams::new(2.94, 17.10, 2.05).unwrap());
    let (a, b, c): (f64, f64, f64) = (12.8975, 2.89, 0.0075);
    let want: f64 = (b + (b * b + 4.0 * a * c).sqrt()) / (2.0 * a);
    assert!((p.critical_levels().unwrap().x_star.unwrap() - want).abs() < 1e-12);

    let q = problem(Arc::new(IncreasingModel::one_half()), CirParams::new(3.0, 0.68, 1.0).unwrap());
    let x = q.critical_levels().unwrap().x_star.unwrap();
    assert!((x - 0.6875 / 3.05).abs() < 1e-12);

    let r = problem(Arc::new(MixtureModel::three_halves_one_half(0.07, 0.07).unwrap()), CirParams::new(1.0, 2.0, 1.0).unwrap());
    let l = r.critical_levels().unwrap();
    let disc = (0.15f64 * 0.15 - 4.0 * 0.07 * 0.07).sqrt();
    assert!((l.k_lower.unwrap() - (0.15 - disc) / 0.14).abs() < 1e-12);
    assert!((l.k_upper.unwrap() - (0.15 + disc) / 0.14).abs() < 1e-12);
    assert_eq!(l.y_min, Some(1.0));
    assert!(l.terminal_lower.unwrap() <= l.k_lower.unwrap());
    assert!(l.terminal_upper.unwrap() >= l.k_upper.unwrap());
}

#[test]
fn example_condition_enforced_for_american() {
    // nu = 3 needs beta > kappa^2 (nu + 1) / 2 = 8
    let m = Arc::new(DecreasingModel::new(&[Term { weight: 1.0, power: 3.0 }]).unwrap());
    let p = problem(m, CirParams::new(1.0, 4.0, 2.0).unwrap());
    assert!(matches!(p.critical_levels(), Err(VixError::AssumptionViolation(_))));
}

#[test]
fn mixture_strike_below_minimum_rejected() {
    let m = Arc::new(MixtureModel::three_halves_one_half(0.07, 0.07).unwrap());
    let mk = VixMarket::new(m, CirParams::new(1.0, 2.0, 1.0).unwrap(), QuadratureConfig::default()).unwrap();
    assert!(Problem::new(mk, OptionSpec::call(0.1, 1.0, 0.05)).is_err());
}
