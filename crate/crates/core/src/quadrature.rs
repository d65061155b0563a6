//! Globally adaptive Gauss-Kronrod (G10/K21) quadrature on finite intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VixError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Probability mass dropped from each transition law (split over both tails).
    pub tail_mass_cut: f64,
    /// Accept expectations of A1 power terms that are not integrable at zero
    /// and report the value over the truncated window instead of failing.
    pub truncate_divergent: bool,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_subdivisions: 200,
            tail_mass_cut: 1e-12,
            truncate_divergent: false,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rel_tol > 0.0
            && self.rel_tol < 1.0
            && self.abs_tol > 0.0
            && self.max_subdivisions > 0
            && self.tail_mass_cut > 0.0
            && self.tail_mass_cut < 1.0;
        if ok {
            Ok(())
        } else {
            Err(VixError::Config(format!("invalid quadrature config {self:?}")))
        }
    }
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_460,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_958_109_831,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for the odd-indexed Kronrod nodes (x = XGK[1], XGK[3], ...)
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[10];
    let mut gauss = 0.0;
    for i in 0..10 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    let value = kron * h;
    let error = ((kron - gauss) * h).abs();
    Segment { a, b, value, error }
}

/// Adaptive integral of `f` over `[a, b]`, first splitting at the interior
/// points of `breaks`. Returns `(value, error_estimate)`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Result<(f64, f64)> {
    if !(b > a) {
        return Ok((0.0, 0.0));
    }
    let mut pts: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
    pts.push(a);
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();

    let mut segs: Vec<Segment> = pts.windows(2).map(|w| gk21(&mut f, w[0], w[1])).collect();
    let mut total: f64 = segs.iter().map(|s| s.value).sum();
    let mut err: f64 = segs.iter().map(|s| s.error).sum();
    let mut splits = 0usize;
    while err > cfg.abs_tol.max(cfg.rel_tol * total.abs()) {
        if splits >= cfg.max_subdivisions {
            return Err(VixError::QuadratureNonConvergence {
                estimate: total,
                error: err,
                subdivisions: splits,
            });
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap())
            .expect("at least one segment");
        let s = segs.swap_remove(idx);
        let m = 0.5 * (s.a + s.b);
        if !(m > s.a && m < s.b) {
            // interval exhausted at machine precision
            return Err(VixError::QuadratureNonConvergence {
                estimate: total,
                error: err,
                subdivisions: splits,
            });
        }
        let l = gk21(&mut f, s.a, m);
        let r = gk21(&mut f, m, s.b);
        segs.push(l);
        segs.push(r);
        splits += 1;
        // re-sum to avoid drift from repeated add/subtract
        total = segs.iter().map(|s| s.value).sum();
        err = segs.iter().map(|s| s.error).sum();
    }
    if !total.is_finite() {
        return Err(VixError::NonFinite("quadrature produced a non-finite value".into()));
    }
    Ok((total, err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let cfg = QuadratureConfig::default();
        let (v, _) = integrate(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, &[], &cfg).unwrap();
        assert!((v - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn kinked_integrand_with_break() {
        let cfg = QuadratureConfig::default();
        let (v, _) = integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0, &[0.3], &cfg).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-14);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let cfg = QuadratureConfig::default();
        let (v, _) = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, &[], &cfg).unwrap();
        assert!((v - 2.0).abs() < 1e-8);
    }

    #[test]
    fn non_integrable_reports_failure() {
        let cfg = QuadratureConfig { max_subdivisions: 50, ..Default::default() };
        assert!(integrate(|x: f64| 1.0 / x, 0.0, 1.0, &[], &cfg).is_err());
    }

    #[test]
    fn empty_interval_is_zero() {
        let cfg = QuadratureConfig::default();
        assert_eq!(integrate(|x| x, 1.0, 1.0, &[], &cfg).unwrap().0, 0.0);
    }
}
