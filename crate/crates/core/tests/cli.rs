use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chromabench::analysis::{MOSAIC_SINGLE, PATCH_SIZE};
use chromabench::imageio;
use chromabench::metrics;
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_chromabench"));
    c.env_remove("CHROMABENCH_THREADS").env("RUST_LOG", "error");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn validate(schema: &str, instance: &Value) {
    let text = std::fs::read_to_string(root().join("schemas").join(format!("{schema}.schema.json"))).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "schema violations: {errors:?}");
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn corpus(dir: &Path, count: usize, size: usize) -> PathBuf {
    let imgs = dir.join("imgs");
    let (n, s) = (count.to_string(), size.to_string());
    ok(&["synth", p(&imgs), "--count", &n, "--width", &s, "--height", &s]);
    imgs
}

#[test]
fn encode_decode_roundtrip() {
    let t = tempfile::tempdir().unwrap();
    let imgs = corpus(t.path(), 1, 64);
    let src = imgs.join("synth_000.png");
    let stream = t.path().join("a.cbs");
    let trace = t.path().join("trace.json");
    let out = ok(&[
        "encode", p(&src), p(&stream), "--space", "lab", "--op-point", "q4", "--chroma-channels", "32", "--trace", p(&trace),
    ]);
    assert!(out.starts_with("bpp total="));
    for part in ["luma_side=", "luma_main=", "chroma_side=", "chroma_main="] {
        assert!(out.contains(part), "{out}");
    }
    let tr = read_json(&trace);
    validate("encode_trace", &tr);
    assert_eq!(tr["config"]["id"], "lab-32-q4");
    assert_eq!(tr["file_bytes"].as_u64().unwrap(), std::fs::metadata(&stream).unwrap().len());

    let dec = t.path().join("dec.png");
    ok(&["decode", p(&stream), p(&dec)]);
    let x = imageio::read_image(&src).unwrap();
    let y = imageio::read_image(&dec).unwrap();
    assert_eq!((y.width(), y.height()), (64, 64));
    assert!(metrics::psnr(&x, &y, 1.0).unwrap() > 25.0);
}

#[test]
fn exit_codes() {
    let t = tempfile::tempdir().unwrap();
    let imgs = corpus(t.path(), 1, 32);
    let src = imgs.join("synth_000.png");
    let stream = t.path().join("s.cbs");
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["encode"]), 1);
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["encode", p(&src), p(&stream), "--space", "rgb", "--chroma-channels", "16"]), 1);
    assert_eq!(code(&["encode", p(&src), p(&stream), "--chroma-channels", "0"]), 1);
    assert_eq!(code(&["encode", p(&src), p(&stream), "--chroma-channels", "65"]), 1);
    assert_eq!(code(&["encode", p(&t.path().join("missing.png")), p(&stream)]), 2);

    ok(&["encode", p(&src), p(&stream)]);
    let mut bytes = std::fs::read(&stream).unwrap();
    bytes.truncate(bytes.len() - 3);
    let cut = t.path().join("cut.cbs");
    std::fs::write(&cut, &bytes).unwrap();
    let o = run(&["decode", p(&cut), p(&t.path().join("x.png"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    std::fs::write(t.path().join("bad.csv"), "codec,metric,rate_bpp,distortion\na,psnr,x,1\n").unwrap();
    assert_eq!(code(&["bd", p(&t.path().join("bad.csv"))]), 2);
}

fn sweep_once(dir: &Path, imgs: &Path, threads: &str, tag: &str) -> PathBuf {
    let manifest = dir.join(format!("manifest_{tag}.json"));
    let out = dir.join(format!("out_{tag}"));
    let m = serde_json::json!({
        "corpus": imgs,
        "output": out,
        "configs": [
            {"space": "srgb", "operating_points": ["q1", "q3"]},
            {"space": "yuv", "chroma_channels": [64, 8]},
            {"space": "lab", "operating_points": ["q2", "q4"], "chroma_channels": [16]}
        ]
    });
    validate("manifest", &m);
    std::fs::write(&manifest, serde_json::to_string_pretty(&m).unwrap()).unwrap();
    let o = bin().args(["sweep", p(&manifest)]).env("CHROMABENCH_THREADS", threads).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn sweep_is_deterministic_and_well_formed() {
    let t = tempfile::tempdir().unwrap();
    let imgs = corpus(t.path(), 3, 48);
    let a = sweep_once(t.path(), &imgs, "1", "a");
    let b = sweep_once(t.path(), &imgs, "3", "b");
    for f in ["rows.csv", "rd_points.csv"] {
        let (x, y) = (std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
        assert!(x == y, "{f} differs between thread counts");
    }
    let meta_a = read_json(&a.join("sweep.json"));
    assert_eq!(meta_a, read_json(&b.join("sweep.json")));
    validate("sweep", &meta_a);
    assert_eq!(meta_a["aggregation"], "mean_of_means");
    assert_eq!(meta_a["configs"].as_array().unwrap().len(), 2 + 8 + 2);

    let mut rows = csv::Reader::from_path(a.join("rows.csv")).unwrap();
    let header: Vec<String> = rows.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(&header[..7], ["image", "config", "space", "chroma_channels", "operating_point", "width", "height"]);
    let idx = |name: &str| header.iter().position(|h| h == name).unwrap();
    let records: Vec<csv::StringRecord> = rows.records().map(|r| r.unwrap()).collect();
    assert_eq!(records.len(), 3 * 12);
    let keys: Vec<(String, String)> = records.iter().map(|r| (r[0].to_string(), r[1].to_string())).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    for r in &records {
        let bpp: f64 = r[idx("bpp")].parse().unwrap();
        let parts: f64 = ["bpp_luma_side", "bpp_luma_main", "bpp_chroma_side", "bpp_chroma_main", "bpp_rgb_side", "bpp_rgb_main"]
            .iter()
            .filter_map(|c| r[idx(c)].parse::<f64>().ok())
            .sum();
        assert!((bpp - parts).abs() < 1e-9);
        assert!(r[idx("error")].is_empty());
    }

    let timings = csv::Reader::from_path(a.join("timings.csv")).unwrap().into_records().count();
    assert_eq!(timings, 36);
    let curves = chromabench::bd::read_curves_file(a.join("rd_points.csv")).unwrap();
    assert_eq!(curves.len(), 4 * 3);
    assert!(curves.iter().filter(|c| c.codec == "srgb").all(|c| c.len() == 2));
}

#[test]
fn bd_against_itself_is_zero() {
    let data = root().join("data/kodak_codecs.csv");
    let out = ok(&["bd", p(&data), p(&data), "--anchor-codec", "VTM", "--format", "json"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    validate("bd_table", &v);
    let vtm = v["rows"].as_array().unwrap().iter().find(|r| r["codec"] == "VTM").unwrap();
    for cell in vtm["cells"].as_array().unwrap() {
        assert_eq!(cell["result"]["bd_rate_percent"], 0.0);
        assert_eq!(cell["result"]["bd_distortion"], 0.0);
    }
}

#[test]
fn bd_text_and_csv() {
    let data = root().join("data/kodak_codecs.csv");
    let text = ok(&["bd", p(&data), "--metric", "psnr"]);
    assert!(text.starts_with("anchor: VTM"));
    assert!(text.lines().any(|l| l.starts_with("SLIC-RGB") && l.contains("11.81*")));
    let csv_out = ok(&["bd", p(&data), "--method", "cubic", "--transform", "reciprocal", "--format", "csv"]);
    let rgb = csv_out.lines().find(|l| l.starts_with("SLIC-RGB,ciede_quality")).unwrap();
    assert!(rgb.contains(",-17.96") && rgb.contains("cubic:1/dE00"), "{rgb}");
}

#[test]
fn metrics_pair_and_batch() {
    let t = tempfile::tempdir().unwrap();
    let imgs = corpus(t.path(), 2, 48);
    let single = ok(&["metrics", p(&imgs.join("synth_000.png")), p(&imgs.join("synth_001.png"))]);
    let v: Value = serde_json::from_str(&single).unwrap();
    validate("metrics", &v);
    assert!(v["ciede2000"].as_f64().unwrap() > 0.0);
    let batch: Value = serde_json::from_str(&ok(&["metrics", p(&imgs), p(&imgs)])).unwrap();
    validate("metrics", &batch);
    assert_eq!(batch["rows"].as_array().unwrap().len(), 2);
    assert_eq!(batch["mean"]["psnr_db"], 100.0);
    let csv_out = ok(&["metrics", p(&imgs), p(&imgs), "--format", "csv"]);
    assert!(csv_out.starts_with("image,psnr_db,"));
    assert_eq!(csv_out.lines().last().unwrap().split(',').next(), Some("mean"));
}

#[test]
fn convert_roundtrip() {
    let t = tempfile::tempdir().unwrap();
    let imgs = corpus(t.path(), 1, 40);
    let src = imgs.join("synth_000.png");
    for space in ["yuv", "lab", "linear"] {
        let dir = t.path().join(space);
        ok(&["convert", p(&src), p(&dir), "--space", space]);
        validate("planes", &read_json(&dir.join("planes.json")));
        let back = t.path().join(format!("{space}.png"));
        ok(&["convert", p(&dir), p(&back), "--inverse"]);
        let x = imageio::read_image(&src).unwrap();
        let y = imageio::read_image(&back).unwrap();
        assert!(x.to_rgb8().unwrap() == y.to_rgb8().unwrap(), "{space} roundtrip changed 8-bit pixels");
    }
    assert_eq!(code(&["convert", p(&src), p(&t.path().join("r")), "--space", "rgb"]), 1);
}

#[test]
fn plot_writes_one_svg_per_metric() {
    let t = tempfile::tempdir().unwrap();
    let data = root().join("data/kodak_rgb_codecs.csv");
    ok(&["plot", p(&data), "--out-dir", p(t.path()), "--title", "Kodak"]);
    let svg = std::fs::read_to_string(t.path().join("rd_psnr.svg")).unwrap();
    let curves = chromabench::bd::read_curves_file(&data).unwrap();
    let psnr_points: usize = curves
        .iter()
        .filter(|c| c.metric == chromabench::bd::Metric::Psnr)
        .map(|c| c.len())
        .sum();
    assert_eq!(svg.matches(r#"class="marker""#).count(), psnr_points);
    assert!(t.path().join("rd_msssim_db.svg").exists());
    assert!(!t.path().join("rd_ciede_quality.svg").exists());
}

#[test]
fn impulse_outputs() {
    let t = tempfile::tempdir().unwrap();
    let mosaic = t.path().join("m.png");
    let ranking = t.path().join("rank.csv");
    let dc = t.path().join("dc.png");
    let out = ok(&[
        "impulse", "--space", "rgb", "--out", p(&mosaic), "--ranking", p(&ranking), "--dc-out", p(&dc),
    ]);
    assert!(out.starts_with(&format!("{MOSAIC_SINGLE} patches")), "{out}");
    let m = imageio::read_image(&mosaic).unwrap();
    assert_eq!(m.width(), 8 * PATCH_SIZE + 9 * 2);
    assert_eq!(m.height(), 6 * PATCH_SIZE + 7 * 2);
    let r = std::fs::read_to_string(&ranking).unwrap();
    assert!(r.starts_with("branch,channel,bits,rank"));
    assert_eq!(r.lines().count(), 1 + 3 * 64);
    assert_eq!(imageio::read_image(&dc).unwrap().width(), 256);
}

#[test]
fn presets_and_complexity() {
    let v: Value = serde_json::from_str(&ok(&["presets"])).unwrap();
    validate("presets", &v);
    assert_eq!(v["lagrangian"][2]["lambda_msssim"], 2.4);
    assert_eq!(v["steps"][0]["luma_step"], 64.0 / 255.0);

    let arch = root().join("data/arch_example.json");
    let c: Value = serde_json::from_str(&ok(&["complexity", p(&arch)])).unwrap();
    validate("complexity", &c);
    let spec = read_json(&arch);
    let mut params = 0u64;
    let mut macs = 0.0;
    for l in spec["layers"].as_array().unwrap() {
        let g = |k: &str| l[k].as_u64().unwrap();
        let w = g("in_channels") * g("out_channels") * g("kernel_h") * g("kernel_w");
        params += w + g("out_channels");
        macs += w as f64 / (g("divisor") * g("divisor")) as f64;
    }
    assert_eq!(c["params"].as_u64().unwrap(), params);
    assert!((c["kmacs_per_pixel"].as_f64().unwrap() - macs / 1000.0).abs() < 1e-9);
}
