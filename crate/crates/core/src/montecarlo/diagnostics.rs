//! Q-Q pairs and Kolmogorov–Smirnov distances against the standard normal
//! and χ² references.

use statrs::function::gamma::gamma_lr;

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    StdNormal,
    ChiSquare(f64),
}

impl Reference {
    pub fn label(&self) -> String {
        match self {
            Reference::StdNormal => "std_normal".to_string(),
            Reference::ChiSquare(df) => format!("chi_square({df})"),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Reference::ChiSquare(df) if !(df.is_finite() && df > 0.0) => domain(format!(
                "chi-square degrees of freedom must be positive, got {df}"
            )),
            _ => Ok(()),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Reference::StdNormal => normal_cdf(x),
            Reference::ChiSquare(df) => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_lr(0.5 * df, 0.5 * x)
                }
            }
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            Reference::StdNormal => normal_quantile(u),
            Reference::ChiSquare(df) => chi_square_quantile(df, u),
        }
    }
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Φ⁻¹(p) by Wichura's algorithm AS 241 (PPND16), relative accuracy about 1e-16.
#[allow(clippy::inconsistent_digit_grouping, clippy::excessive_precision)]
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((2509.080_928_730_122_7 * r + 33430.575_583_588_128) * r
                + 67265.770_927_008_7)
                * r
                + 45921.953_931_549_87)
                * r
                + 13731.693_765_509_461)
                * r
                + 1971.590_950_306_551_3)
                * r
                + 133.141_667_891_784_38)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((5226.495_278_852_545 * r + 28729.085_735_721_943) * r
                + 39307.895_800_092_71)
                * r
                + 21213.794_301_586_597)
                * r
                + 5394.196_021_424_751)
                * r
                + 687.187_007_492_057_9)
                * r
                + 42.313_330_701_600_91)
                * r
                + 1.0);
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        let r = r - 1.6;
        (((((((7.745_450_142_783_414e-4 * r + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_6)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r
            + 1.423_437_110_749_683_5)
            / (((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
                + 0.015_198_666_563_616_457)
                * r
                + 0.148_103_976_427_480_08)
                * r
                + 0.689_767_334_985_100_1)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_759)
                * r
                + 1.0)
    } else {
        let r = r - 5.0;
        (((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_124)
            * r
            + 0.296_560_571_828_504_87)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103)
            / (((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
                + 1.846_318_317_510_054_8e-5)
                * r
                + 7.868_691_311_456_133e-4)
                * r
                + 0.014_875_361_290_850_615)
                * r
                + 0.136_929_880_922_735_8)
                * r
                + 0.599_832_206_555_888)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

/// χ²(df) quantile by bisection on the regularised lower incomplete gamma.
pub fn chi_square_quantile(df: f64, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return f64::INFINITY;
    }
    let cdf = |x: f64| gamma_lr(0.5 * df, 0.5 * x);
    let mut hi = df.max(1.0);
    while cdf(hi) < u {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn sorted_samples(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return domain("diagnostics need at least one sample");
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return domain("diagnostics need finite samples");
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    Ok(xs)
}

/// (theoretical quantile, sample quantile) pairs at plotting positions (i − ½)/R.
pub fn qq_data(samples: &[f64], reference: Reference) -> Result<Vec<(f64, f64)>> {
    reference.validate()?;
    let xs = sorted_samples(samples)?;
    let r = xs.len() as f64;
    Ok(xs
        .into_iter()
        .enumerate()
        .map(|(i, x)| (reference.quantile((i as f64 + 0.5) / r), x))
        .collect())
}

/// sup |F_R − F| between the empirical and reference distribution functions.
pub fn ks_distance(samples: &[f64], reference: Reference) -> Result<f64> {
    reference.validate()?;
    let xs = sorted_samples(samples)?;
    let r = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = reference.cdf(x);
        d = d.max((i as f64 + 1.0) / r - f).max(f - i as f64 / r);
    }
    Ok(d.clamp(0.0, 1.0))
}
