//! Bjøntegaard delta rate and delta distortion between RD curves.
//!
//! BD-rate interpolates `log10(rate)` as a function of distortion, BD-distortion
//! interpolates distortion as a function of `log10(rate)`. Both integrate the
//! gap between anchor and test exactly over the strict overlap of the two
//! curves. The default interpolant is a monotone piecewise cubic; the classic
//! single cubic polynomial fit is available through [`Interpolation::Cubic`].

mod interp;
mod io;
mod table;

pub use io::{read_curves, read_curves_file, write_curves};
pub use table::{bd_table, BdCell, BdRow, BdTable, Mark};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::metrics::CIEDE_QUALITY_OFFSET;
use crate::{Error, Result};
use interp::{Cubic, Integrable, Pchip};

/// Minimum number of points a curve needs to enter a BD computation.
pub const MIN_POINTS: usize = 3;

/// Quality metric carried by a curve. All are higher-is-better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// PSNR in dB.
    Psnr,
    /// MS-SSIM as `−10·log10(1 − v)`.
    MsssimDb,
    /// `5.0 − ΔE00`.
    CiedeQuality,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Psnr, Metric::MsssimDb, Metric::CiedeQuality];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Psnr => "psnr",
            Metric::MsssimDb => "msssim_db",
            Metric::CiedeQuality => "ciede_quality",
        }
    }

    /// Axis label with units.
    pub fn axis_label(self) -> &'static str {
        match self {
            Metric::Psnr => "PSNR [dB]",
            Metric::MsssimDb => "MS-SSIM [dB]",
            Metric::CiedeQuality => "5.0 − ΔE00",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "psnr" | "psnr_db" => Ok(Metric::Psnr),
            "msssim_db" | "ms_ssim_db" | "msssim" | "ms_ssim" => Ok(Metric::MsssimDb),
            "ciede_quality" | "ciede" | "ciede2000" | "de00" => Ok(Metric::CiedeQuality),
            other => Err(Error::InvalidConfig(format!("unknown metric '{other}'"))),
        }
    }
}

/// Transform applied to the distortion axis before interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    /// Use the metric value as stored.
    #[default]
    Quality,
    /// `1/ΔE00`, recovered from the `5 − ΔE00` form. CIEDE2000 curves only.
    Reciprocal,
}

impl Transform {
    pub fn name(self) -> &'static str {
        match self {
            Transform::Quality => "quality",
            Transform::Reciprocal => "reciprocal",
        }
    }

    pub fn apply(self, metric: Metric, value: f64) -> Result<f64> {
        match (self, metric) {
            (Transform::Quality, _) => Ok(value),
            (Transform::Reciprocal, Metric::CiedeQuality) => {
                let de = CIEDE_QUALITY_OFFSET - value;
                if de > 0.0 {
                    Ok(1.0 / de)
                } else {
                    Err(Error::Curve(format!("ΔE00 {de} has no reciprocal")))
                }
            }
            (Transform::Reciprocal, m) => Err(Error::InvalidConfig(format!(
                "the reciprocal transform applies to ciede_quality curves, not {m}"
            ))),
        }
    }

    /// Distortion form recorded in [`BdResult::method`].
    fn form(self, metric: Metric) -> &'static str {
        match (self, metric) {
            (Transform::Reciprocal, _) => "1/dE00",
            (_, Metric::Psnr) => "psnr_db",
            (_, Metric::MsssimDb) => "msssim_db",
            (_, Metric::CiedeQuality) => "5-dE00",
        }
    }
}

impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "quality" | "identity" | "none" => Ok(Transform::Quality),
            "reciprocal" | "inverse" => Ok(Transform::Reciprocal),
            other => Err(Error::InvalidConfig(format!("unknown transform '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Monotone piecewise-cubic Hermite.
    #[default]
    Pchip,
    /// Least-squares cubic polynomial (needs 4 points per curve).
    Cubic,
}

impl Interpolation {
    pub fn name(self) -> &'static str {
        match self {
            Interpolation::Pchip => "pchip",
            Interpolation::Cubic => "cubic",
        }
    }

    fn fit(self, xs: &[f64], ys: &[f64]) -> Result<Box<dyn Integrable>> {
        Ok(match self {
            Interpolation::Pchip => Box::new(Pchip::new(xs, ys)?),
            Interpolation::Cubic => Box::new(Cubic::fit(xs, ys)?),
        })
    }
}

impl FromStr for Interpolation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pchip" | "monotone" => Ok(Interpolation::Pchip),
            "cubic" | "classic" | "polyfit" => Ok(Interpolation::Cubic),
            other => Err(Error::InvalidConfig(format!("unknown interpolation '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BdOptions {
    pub interpolation: Interpolation,
    pub transform: Transform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    pub rate: f64,
    pub distortion: f64,
}

/// Points of one codec under one metric, sorted by strictly increasing rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdCurve {
    pub codec: String,
    pub metric: Metric,
    points: Vec<RdPoint>,
}

impl RdCurve {
    pub fn new(codec: impl Into<String>, metric: Metric, mut points: Vec<RdPoint>) -> Result<Self> {
        let codec = codec.into();
        if points.is_empty() {
            return Err(Error::Curve(format!("{codec}: no points")));
        }
        if let Some(p) = points
            .iter()
            .find(|p| !p.rate.is_finite() || !p.distortion.is_finite() || p.rate <= 0.0)
        {
            return Err(Error::Curve(format!(
                "{codec}: invalid point ({}, {})",
                p.rate, p.distortion
            )));
        }
        points.sort_by(|a, b| a.rate.total_cmp(&b.rate));
        if points.windows(2).any(|w| w[1].rate == w[0].rate) {
            return Err(Error::Curve(format!("{codec}: duplicate rate")));
        }
        if points.windows(2).any(|w| w[1].distortion <= w[0].distortion) {
            log::warn!("{codec} ({metric}): quality is not strictly increasing with rate");
        }
        Ok(Self { codec, metric, points })
    }

    /// Builds a curve from `(rate, distortion)` pairs.
    pub fn from_pairs(codec: impl Into<String>, metric: Metric, pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            codec,
            metric,
            pairs.iter().map(|&(rate, distortion)| RdPoint { rate, distortion }).collect(),
        )
    }

    pub fn points(&self) -> &[RdPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(log10 rate, transformed distortion)` for every point.
    fn samples(&self, transform: Transform) -> Result<Vec<(f64, f64)>> {
        self.points
            .iter()
            .map(|p| Ok((p.rate.log10(), transform.apply(self.metric, p.distortion)?)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdResult {
    /// Rate change of the test codec at equal quality; negative is a saving.
    pub bd_rate_percent: f64,
    /// Quality change at equal rate, in transformed metric units.
    pub bd_distortion: f64,
    /// Distortion interval (transformed) used for BD-rate.
    pub distortion_overlap: (f64, f64),
    /// Rate interval in bpp used for BD-distortion.
    pub rate_overlap: (f64, f64),
    /// Interpolation and distortion form, e.g. `pchip:psnr_db`.
    pub method: String,
}

fn check_pair(anchor: &RdCurve, test: &RdCurve) -> Result<()> {
    if anchor.metric != test.metric {
        return Err(Error::Curve(format!(
            "metric mismatch: {} vs {}",
            anchor.metric, test.metric
        )));
    }
    for c in [anchor, test] {
        if c.len() < MIN_POINTS {
            return Err(Error::Curve(format!(
                "{}: {} points, at least {MIN_POINTS} required",
                c.codec,
                c.len()
            )));
        }
    }
    Ok(())
}

fn overlap(a: &[f64], b: &[f64], what: &str) -> Result<(f64, f64)> {
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = min(a).max(min(b));
    let hi = max(a).min(max(b));
    if lo < hi {
        Ok((lo, hi))
    } else {
        Err(Error::EmptyOverlap(format!("{what} ranges do not intersect")))
    }
}

/// Mean of `g(x) − f(x)` over the overlap of the x ranges.
fn mean_gap(anchor: &[(f64, f64)], test: &[(f64, f64)], method: Interpolation, what: &str) -> Result<(f64, (f64, f64))> {
    let prep = |s: &[(f64, f64)]| {
        let mut s = s.to_vec();
        s.sort_by(|a, b| a.0.total_cmp(&b.0));
        if s.windows(2).any(|w| w[1].0 == w[0].0) {
            return Err(Error::Curve(format!("repeated {what} value")));
        }
        Ok(s.into_iter().unzip::<f64, f64, Vec<f64>, Vec<f64>>())
    };
    let (ax, ay) = prep(anchor)?;
    let (tx, ty) = prep(test)?;
    let (lo, hi) = overlap(&ax, &tx, what)?;
    let fa = method.fit(&ax, &ay)?;
    let ft = method.fit(&tx, &ty)?;
    Ok(((ft.integrate(lo, hi) - fa.integrate(lo, hi)) / (hi - lo), (lo, hi)))
}

/// BD-rate and BD-distortion of `test` against `anchor`.
pub fn bd(anchor: &RdCurve, test: &RdCurve, opts: BdOptions) -> Result<BdResult> {
    check_pair(anchor, test)?;
    let a = anchor.samples(opts.transform)?;
    let t = test.samples(opts.transform)?;
    let swap = |s: &[(f64, f64)]| s.iter().map(|&(r, d)| (d, r)).collect::<Vec<_>>();
    let (log_gap, d_overlap) = mean_gap(&swap(&a), &swap(&t), opts.interpolation, "distortion")?;
    let (d_gap, r_overlap) = mean_gap(&a, &t, opts.interpolation, "rate")?;
    Ok(BdResult {
        bd_rate_percent: (10f64.powf(log_gap) - 1.0) * 100.0,
        bd_distortion: d_gap,
        distortion_overlap: d_overlap,
        rate_overlap: (10f64.powf(r_overlap.0), 10f64.powf(r_overlap.1)),
        method: format!("{}:{}", opts.interpolation.name(), opts.transform.form(anchor.metric)),
    })
}

/// BD-rate in percent with default options.
pub fn bd_rate(anchor: &RdCurve, test: &RdCurve) -> Result<f64> {
    Ok(bd(anchor, test, BdOptions::default())?.bd_rate_percent)
}

/// BD-distortion in metric units with default options.
pub fn bd_distortion(anchor: &RdCurve, test: &RdCurve) -> Result<f64> {
    Ok(bd(anchor, test, BdOptions::default())?.bd_distortion)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn curve(name: &str, pts: &[(f64, f64)]) -> RdCurve {
        RdCurve::from_pairs(name, Metric::Psnr, pts).unwrap()
    }

    fn base() -> RdCurve {
        curve("a", &[(0.1, 28.0), (0.25, 31.0), (0.5, 34.0), (0.9, 37.0)])
    }

    #[test]
    fn closed_forms() {
        let a = base();
        let r = bd(&a, &a, BdOptions::default()).unwrap();
        assert_eq!(r.bd_rate_percent, 0.0);
        assert_eq!(r.bd_distortion, 0.0);

        let doubled = curve("b", &a.points().iter().map(|p| (2.0 * p.rate, p.distortion)).collect::<Vec<_>>());
        let shifted = curve("c", &a.points().iter().map(|p| (p.rate, p.distortion + 1.0)).collect::<Vec<_>>());
        for interpolation in [Interpolation::Pchip, Interpolation::Cubic] {
            let opts = BdOptions { interpolation, ..Default::default() };
            assert!((bd(&a, &doubled, opts).unwrap().bd_rate_percent - 100.0).abs() < 1e-9);
            assert!((bd(&a, &shifted, opts).unwrap().bd_distortion - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn errors() {
        let a = base();
        let two = curve("t", &[(0.1, 28.0), (0.2, 30.0)]);
        assert!(matches!(bd_rate(&a, &two), Err(Error::Curve(_))));
        let disjoint = curve("d", &[(2.0, 40.0), (3.0, 41.0), (4.0, 42.0)]);
        assert!(matches!(bd_rate(&a, &disjoint), Err(Error::EmptyOverlap(_))));
        let three = curve("e", &[(0.1, 28.0), (0.3, 31.0), (0.7, 35.0)]);
        assert!(bd_rate(&a, &three).is_ok());
        let cubic = BdOptions { interpolation: Interpolation::Cubic, ..Default::default() };
        assert!(bd(&a, &three, cubic).is_err());
        assert!(RdCurve::from_pairs("x", Metric::Psnr, &[(0.0, 1.0)]).is_err());
        assert!(RdCurve::from_pairs("x", Metric::Psnr, &[(0.1, f64::NAN)]).is_err());
        assert!(RdCurve::from_pairs("x", Metric::Psnr, &[(0.1, 1.0), (0.1, 2.0)]).is_err());
        let recip = BdOptions { transform: Transform::Reciprocal, ..Default::default() };
        assert!(matches!(bd(&a, &a, recip), Err(Error::InvalidConfig(_))));
        let ms = RdCurve::from_pairs("m", Metric::MsssimDb, &[(0.1, 10.0), (0.2, 12.0), (0.4, 14.0)]).unwrap();
        assert!(bd_rate(&a, &ms).is_err());
    }

    #[test]
    fn points_are_sorted_by_rate() {
        let c = curve("s", &[(0.5, 34.0), (0.1, 28.0), (0.25, 31.0)]);
        assert!(c.points().windows(2).all(|w| w[0].rate < w[1].rate));
    }

    #[test]
    fn reciprocal_transform() {
        assert!((Transform::Reciprocal.apply(Metric::CiedeQuality, 3.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(Transform::Reciprocal.apply(Metric::CiedeQuality, 5.0).is_err());
        assert_eq!(Transform::Quality.apply(Metric::Psnr, 31.5).unwrap(), 31.5);
    }

    #[test]
    fn method_is_recorded() {
        let c = |n| {
            RdCurve::from_pairs(n, Metric::CiedeQuality, &[(0.1, 1.0), (0.3, 2.0), (0.6, 2.7), (1.0, 3.1)]).unwrap()
        };
        let r = bd(&c("a"), &c("b"), BdOptions { interpolation: Interpolation::Cubic, transform: Transform::Reciprocal }).unwrap();
        assert_eq!(r.method, "cubic:1/dE00");
        assert_eq!(bd(&c("a"), &c("b"), BdOptions::default()).unwrap().method, "pchip:5-dE00");
    }

    #[test]
    fn parsing() {
        assert_eq!("MS-SSIM".parse::<Metric>().unwrap(), Metric::MsssimDb);
        assert_eq!("ciede2000".parse::<Metric>().unwrap(), Metric::CiedeQuality);
        assert_eq!("classic".parse::<Interpolation>().unwrap(), Interpolation::Cubic);
        assert!("ssim".parse::<Metric>().is_err());
    }

    /// Log-concave quality curve `q(r) = a + b·ln r − c·(ln r)²` over ln r < b/(2c).
    fn smooth(a: f64, b: f64, c: f64, rates: &[f64]) -> Vec<(f64, f64)> {
        rates.iter().map(|&r| (r, a + b * r.ln() - c * r.ln().powi(2))).collect()
    }

    proptest! {
        #[test]
        fn antisymmetry(shift in -3.0f64..3.0, scale in 0.6f64..1.6, bend in 0.0f64..0.4) {
            let rates = [0.08, 0.15, 0.3, 0.55, 0.9];
            let a = curve("a", &smooth(38.0, 4.0, 0.2, &rates));
            let t = curve("t", &smooth(38.0 + shift, 4.0, 0.2 + bend * 0.1, &rates.map(|r| r * scale)));
            if let (Ok(x), Ok(y)) = (bd_rate(&a, &t), bd_rate(&t, &a)) {
                let prod = (1.0 + x / 100.0) * (1.0 + y / 100.0);
                prop_assert!((prod - 1.0).abs() < 0.005, "{x} {y} {prod}");
            }
        }

        #[test]
        fn extra_points_barely_matter(shift in -1.5f64..1.5, extra in 0.2f64..0.7) {
            let rates = vec![0.08, 0.15, 0.3, 0.55, 0.9];
            let a = curve("a", &smooth(38.0, 4.0, 0.2, &rates));
            let t = curve("t", &smooth(38.0 + shift, 4.2, 0.2, &rates));
            let before = bd_rate(&a, &t).unwrap();
            let mut more = rates.clone();
            more.push(extra);
            more.sort_by(f64::total_cmp);
            more.dedup();
            let a2 = curve("a", &smooth(38.0, 4.0, 0.2, &more));
            let t2 = curve("t", &smooth(38.0 + shift, 4.2, 0.2, &more));
            let after = bd_rate(&a2, &t2).unwrap();
            prop_assert!((before - after).abs() < 0.1, "{before} vs {after}");
        }
    }
}
