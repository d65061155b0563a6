use vix_core::american::SolverConfig;
use vix_core::config::RunConfig;
use vix_core::mc::{mc_american_policy, mc_european, mc_futures, mc_futures_stepped};

#[test]
fn seeds_are_deterministic() {
    let p = RunConfig::bundled("fig1").unwrap().problem().unwrap();
    let a = mc_european(&p, 0.0, 0.2, 50_000, 3).unwrap();
    let b = mc_european(&p, 0.0, 0.2, 50_000, 3).unwrap();
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    assert_ne!(a.mean, mc_european(&p, 0.0, 0.2, 50_000, 4).unwrap().mean);
}

#[test]
fn zero_horizon_futures() {
    let m = RunConfig::bundled("fig1").unwrap().market().unwrap();
    let e = mc_futures(&m, 0.0, 0.2, 1000, 1).unwrap();
    assert_eq!((e.mean, e.std_error), (0.2, 0.0));
    assert_eq!(e.z_score(0.2), 0.0);
}

#[test]
fn error_scales_with_root_n() {
    let p = RunConfig::bundled("fig2").unwrap().problem().unwrap();
    let a = mc_european(&p, 0.0, 0.2, 100_000, 8).unwrap();
    let b = mc_european(&p, 0.0, 0.2, 400_000, 8).unwrap();
    let ratio = a.std_error / b.std_error;
    assert!((ratio / 2.0 - 1.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn chained_steps_match_single_step() {
    for name in ["fig1", "fig7"] {
        let c = RunConfig::bundled(name).unwrap();
        let m = c.market().unwrap();
        let s = c.state.unwrap();
        let one = mc_futures(&m, 1.0, s, 100_000, 12).unwrap();
        let many = mc_futures_stepped(&m, 1.0, s, 100, 100_000, 13).unwrap();
        let se = one.std_error.hypot(many.std_error);
        assert!((one.mean - many.mean).abs() < 3.0 * se, "{name}: {} vs {}", one.mean, many.mean);
    }
}

#[test]
fn policy_in_exercise_region_is_payoff() {
    let p = RunConfig::bundled("fig1").unwrap().problem().unwrap();
    let b = p.solve_boundary(&SolverConfig::with_steps(50)).unwrap();
    let x = 1.2 * b.vix_at(0.0).unwrap();
    let e = mc_american_policy(&p, &b, 0.0, x, 1000, 50, 1).unwrap();
    assert_eq!(e.estimate.std_error, 0.0);
    assert!((e.estimate.mean - (x - 0.15)).abs() < 1e-15);
}

#[test]
fn policy_dominates_european() {
    let p = RunConfig::bundled("fig1").unwrap().problem().unwrap();
    let b = p.solve_boundary(&SolverConfig::with_steps(50)).unwrap();
    let eu = mc_european(&p, 0.0, 0.2, 100_000, 2).unwrap();
    let am = mc_american_policy(&p, &b, 0.0, 0.2, 20_000, 50, 2).unwrap();
    assert!(am.estimate.mean >= eu.mean - 3.0 * eu.std_error);
}
