//! Classic cubic BD on the bundled Kodak point sets against published values.

use std::path::PathBuf;

use chromabench::bd::{self, BdOptions, Interpolation, Metric, RdCurve, Transform};

fn curves() -> Vec<RdCurve> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/kodak_codecs.csv");
    bd::read_curves_file(path).unwrap()
}

fn find<'a>(curves: &'a [RdCurve], codec: &str, metric: Metric) -> &'a RdCurve {
    curves
        .iter()
        .find(|c| c.codec == codec && c.metric == metric)
        .unwrap_or_else(|| panic!("missing {codec} {metric:?}"))
}

fn cubic(transform: Transform) -> BdOptions {
    BdOptions {
        interpolation: Interpolation::Cubic,
        transform,
    }
}

#[test]
fn cubic_psnr_matches_published() {
    let curves = curves();
    let anchor = find(&curves, "VTM", Metric::Psnr);
    for (codec, rate, dist) in [
        ("SLIC-RGB", 12.60, -0.5298),
        ("SLIC-YUV", 21.73, -0.8274),
        ("SLIC-LAB", 22.65, -0.8305),
        ("JPEG-AI", 55.75, -1.7562),
    ] {
        let r = bd::bd(anchor, find(&curves, codec, Metric::Psnr), cubic(Transform::Quality)).unwrap();
        assert!((r.bd_rate_percent - rate).abs() <= 0.01, "{codec}: {}", r.bd_rate_percent);
        assert!((r.bd_distortion - dist).abs() <= 1e-3, "{codec}: {}", r.bd_distortion);
    }
}

#[test]
fn cubic_reciprocal_ciede_matches_published() {
    let curves = curves();
    let anchor = find(&curves, "VTM", Metric::CiedeQuality);
    for (codec, rate, dist) in [
        ("SLIC-RGB", -17.96, 0.0302),
        ("SLIC-YUV", -4.66, 0.0080),
        ("SLIC-LAB", -7.99, 0.0157),
        ("JPEG-AI", 69.68, -0.0614),
    ] {
        let test = find(&curves, codec, Metric::CiedeQuality);
        let r = bd::bd(anchor, test, cubic(Transform::Reciprocal)).unwrap();
        assert!((r.bd_rate_percent - rate).abs() <= 0.01, "{codec}: {}", r.bd_rate_percent);
        assert!((r.bd_distortion - dist).abs() <= 1.5e-4, "{codec}: {}", r.bd_distortion);
    }
}

#[test]
fn cubic_and_pchip_agree_in_sign() {
    let curves = curves();
    let anchor = find(&curves, "VTM", Metric::Psnr);
    for codec in ["SLIC-RGB", "SLIC-YUV", "SLIC-LAB", "JPEG-AI"] {
        let test = find(&curves, codec, Metric::Psnr);
        let c = bd::bd(anchor, test, cubic(Transform::Quality)).unwrap();
        let p = bd::bd(anchor, test, BdOptions::default()).unwrap();
        assert_eq!(c.bd_rate_percent.signum(), p.bd_rate_percent.signum(), "{codec}");
    }
}
