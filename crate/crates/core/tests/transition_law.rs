use proptest::prelude::*;
use vix_core::cir::{ChiSquareLaw, CirParams};
use vix_core::quadrature::{integrate, QuadratureConfig};

// (df, noncentrality, x, pdf) from scipy.stats.ncx2 / chi2
const REFERENCE: [(f64, f64, f64, f64); 7] = [
    (2.5, 3.0, 1.0, 0.10722619461638663),
    (2.5, 3.0, 7.5, 0.06329406646130784),
    (0.816, 0.4, 0.05, 1.6511211534480346),
    (33.0, 120.0, 150.0, 0.017163854274720974),
    (4.0, 0.0, 2.0, 0.18393972058572114),
    (1.5, 800.0, 780.0, 0.006683775083959324),
    (6.0, 10.0, 40.0, 0.0010919475086504024),
];

fn unit(df: f64, lam: f64) -> ChiSquareLaw {
    ChiSquareLaw { df, noncentrality: lam, scale: 1.0 }
}

fn moment<F: Fn(f64) -> f64>(law: &ChiSquareLaw, g: F) -> f64 {
    let (lo, hi) = law.truncation_bounds(1e-14);
    let q = QuadratureConfig { rel_tol: 1e-11, abs_tol: 1e-14, ..Default::default() };
    integrate(|y| g(y) * law.density(y), lo, hi, &[law.mean()], &q).unwrap().0
}

#[test]
fn density_matches_reference_values() {
    for (df, lam, x, want) in REFERENCE {
        let got = unit(df, lam).density(x);
        assert!((got / want - 1.0).abs() < 1e-10, "df={df} lam={lam} x={x}: {got} vs {want}");
    }
}

#[test]
fn scaled_density_and_moments_by_integration() {
    let p = CirParams::new(2.94, 17.10, 2.05).unwrap();
    for (t, y0) in [(0.05, 4.0), (0.5, 5.0), (2.0, 1.0)] {
        let law = p.transition_law(t, y0).unwrap();
        let m = law.mean();
        assert!((m - p.mean(t, y0)).abs() < 1e-12 * m);
        assert!((moment(&law, |_| 1.0) - 1.0).abs() < 1e-9);
        assert!((moment(&law, |y| y) / m - 1.0).abs() < 1e-9);
        for k in 2..=4u32 {
            let num = moment(&law, |y| (y - m).powi(k as i32));
            let cf = law.central_moment(k).unwrap();
            assert!((num - cf).abs() < 1e-7 * cf.abs().max(law.variance().powf(k as f64 / 2.0)), "k={k}");
        }
    }
}

#[test]
fn truncation_window_holds_the_mass() {
    for (df, lam) in [(0.816, 2.0), (33.0, 5.0), (4.0, 300.0)] {
        let law = unit(df, lam);
        let (lo, hi) = law.truncation_bounds(1e-8);
        assert!(lo < law.mean() && law.mean() < hi);
        let inside = moment(&law, |y| if y >= lo && y <= hi { 1.0 } else { 0.0 });
        assert!(inside > 1.0 - 1e-8, "df={df} lam={lam} inside={inside}");
    }
}

// Kolmogorov-Smirnov distance against the numerically integrated CDF.
fn ks_distance(law: &ChiSquareLaw, seed: u64, n: usize) -> f64 {
    let mut xs = law.sample(seed, n);
    xs.sort_by(f64::total_cmp);
    let q = QuadratureConfig::default();
    let (lo, _) = law.truncation_bounds(1e-14);
    let mut cdf = 0.0;
    let mut prev = lo.min(xs[0]);
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        if x > prev {
            cdf += integrate(|y| law.density(y), prev, x, &[], &q).unwrap().0;
            prev = x;
        }
        let e_hi = (i + 1) as f64 / n as f64;
        let e_lo = i as f64 / n as f64;
        d = d.max((e_hi - cdf).abs()).max((cdf - e_lo).abs());
    }
    d
}

#[test]
fn exact_draws_pass_ks() {
    let n = 20_000;
    // 1% critical value of the one-sample KS statistic
    let crit = 1.63 / (n as f64).sqrt();
    for (i, law) in [unit(0.816, 1.5), unit(5.0, 20.0), CirParams::new(1.0, 2.0, 1.0).unwrap().transition_law(0.3, 1.0).unwrap()]
        .iter()
        .enumerate()
    {
        let d = ks_distance(law, 100 + i as u64, n);
        assert!(d < crit, "law {i}: D = {d}, critical {crit}");
    }
}

#[test]
fn sampling_is_reproducible() {
    let law = unit(3.0, 2.0);
    assert_eq!(law.sample(9, 100), law.sample(9, 100));
    assert_ne!(law.sample(9, 100), law.sample(10, 100));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn density_normalizes(df in 0.5f64..30.0, lam in 0.0f64..200.0) {
        let total = moment(&unit(df, lam), |_| 1.0);
        prop_assert!((total - 1.0).abs() < 1e-8, "total {}", total);
    }

    #[test]
    fn mean_reverts_to_attractor(alpha in 0.2f64..5.0, beta in 1.0f64..20.0, y0 in 0.01f64..10.0) {
        let p = CirParams::new(alpha, beta, 1.0).unwrap();
        let far = p.mean(200.0 / alpha, y0);
        prop_assert!((far - beta / alpha).abs() < 1e-9 * (beta / alpha));
        // the mean is formed around the attractor, so rounding scales with it
        prop_assert!((p.mean(0.0, y0) - y0).abs() < 4.0 * f64::EPSILON * (y0 + beta / alpha));
    }
}
