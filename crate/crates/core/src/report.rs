//! Corpus sweeps: encode/decode every (image, config) pair, record per-image
//! rows and aggregate dataset-level RD curves.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bd::{write_curves, Metric, RdCurve, RdPoint};
use crate::codec::{decode_bitstream, encode_image, Bitstream, CodecConfig, ComponentId, OperatingPoint};
use crate::color::{self, ColorMatrix, LabContext};
use crate::imageio::{self, ColorSpace, PlanarImage};
use crate::metrics::{self, MetricReport};
use crate::rdo::{lagrangian_presets, LagrangianConfig, LossBreakdown};
use crate::{Error, Result};

/// Environment variable overriding the sweep worker count.
pub const THREADS_ENV: &str = "CHROMABENCH_THREADS";

/// How per-image results are pooled into one RD point per config.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Arithmetic mean of per-image bpp and per-image metric values.
    #[default]
    MeanOfMeans,
    /// Total bits over total pixels; metrics from pixel-weighted MSE,
    /// MS-SSIM and ΔE00.
    Pooled,
}

/// One family of configs in a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSpec {
    pub space: ColorSpace,
    #[serde(default = "all_points")]
    pub operating_points: Vec<OperatingPoint>,
    /// Kept chroma channels; ignored for `srgb`. Defaults to all.
    #[serde(default)]
    pub chroma_channels: Vec<usize>,
}

fn all_points() -> Vec<OperatingPoint> {
    OperatingPoint::PRESETS.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepManifest {
    pub corpus: PathBuf,
    pub configs: Vec<ConfigSpec>,
    pub output: PathBuf,
    /// Worker threads; `None` uses all cores.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub aggregation: Aggregation,
}

impl SweepManifest {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: SweepManifest = serde_json::from_str(&text)?;
        // Relative paths are taken from the manifest's directory.
        let base = path.parent().unwrap_or(Path::new(""));
        if m.corpus.is_relative() {
            m.corpus = base.join(&m.corpus);
        }
        if m.output.is_relative() {
            m.output = base.join(&m.output);
        }
        Ok(m)
    }

    /// Expands the config families into concrete codec configs.
    pub fn expand(&self) -> Result<Vec<SweepConfig>> {
        if self.configs.is_empty() {
            return Err(Error::Empty("manifest lists no configs".into()));
        }
        let mut out = Vec::new();
        for spec in &self.configs {
            if spec.operating_points.is_empty() {
                return Err(Error::Empty(format!("{} config has no operating points", spec.space.name())));
            }
            let channels = if spec.space == ColorSpace::Srgb || spec.chroma_channels.is_empty() {
                vec![None]
            } else {
                spec.chroma_channels.iter().copied().map(Some).collect()
            };
            for c in channels {
                for &point in &spec.operating_points {
                    let mut cfg = CodecConfig::preset(spec.space, point)?;
                    if let Some(c) = c {
                        cfg = cfg.with_chroma_channels(c)?;
                    }
                    out.push(SweepConfig::new(cfg));
                }
            }
        }
        Ok(out)
    }
}

/// Concrete config with its identifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// `family-point`, e.g. `yuv-32-q2`.
    pub id: String,
    /// Curve label shared by all operating points, e.g. `yuv-32` or `srgb`.
    pub family: String,
    pub codec: CodecConfig,
}

impl SweepConfig {
    pub fn new(codec: CodecConfig) -> Self {
        let family = if codec.is_dual() {
            format!("{}-{}", codec.space.name(), codec.chroma_channels)
        } else {
            codec.space.name().to_string()
        };
        Self {
            id: format!("{family}-{}", codec.operating_point),
            family,
            codec,
        }
    }

    pub fn lagrangian(&self) -> Option<LagrangianConfig> {
        let k = self.codec.operating_point.code() as usize;
        (k > 0).then(|| lagrangian_presets()[k - 1].clone())
    }
}

/// One (image, config) result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub image: String,
    pub config: String,
    pub space: ColorSpace,
    pub chroma_channels: usize,
    pub operating_point: OperatingPoint,
    pub width: usize,
    pub height: usize,
    pub bpp: Option<f64>,
    pub bpp_luma_side: Option<f64>,
    pub bpp_luma_main: Option<f64>,
    pub bpp_chroma_side: Option<f64>,
    pub bpp_chroma_main: Option<f64>,
    pub bpp_rgb_side: Option<f64>,
    pub bpp_rgb_main: Option<f64>,
    pub psnr_db: Option<f64>,
    pub mse: Option<f64>,
    pub msssim: Option<f64>,
    pub msssim_db: Option<f64>,
    pub ciede2000: Option<f64>,
    pub ciede_quality: Option<f64>,
    /// Composite objective under the operating point's multipliers.
    pub loss: Option<f64>,
    pub error: Option<String>,
}

impl ReportRow {
    fn component_bpp(&self) -> [Option<f64>; 6] {
        [
            self.bpp_luma_side,
            self.bpp_luma_main,
            self.bpp_chroma_side,
            self.bpp_chroma_main,
            self.bpp_rgb_side,
            self.bpp_rgb_main,
        ]
    }

    /// Sum of the per-component columns.
    pub fn component_bpp_sum(&self) -> f64 {
        self.component_bpp().iter().flatten().sum()
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub image: String,
    pub config: String,
    pub encode_ms: f64,
    pub decode_ms: f64,
    pub metrics_ms: f64,
}

/// Corpus entry; images that failed to load are kept so the sweep can
/// report them.
#[derive(Debug, Clone)]
pub struct CorpusImage {
    pub id: String,
    pub image: std::result::Result<PlanarImage, String>,
}

/// Lists `.png`/`.ppm` files of `dir` sorted by file name.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Vec<CorpusImage>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "ppm"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Empty(format!("no .png or .ppm images in {}", dir.display())));
    }
    Ok(paths
        .into_iter()
        .map(|p| CorpusImage {
            id: p.file_name().unwrap_or_default().to_string_lossy().into_owned(),
            image: imageio::read_image(&p).map_err(|e| e.to_string()),
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct ColorEcho {
    pub yuv_matrix: ColorMatrix,
    pub lab: LabContext,
}

impl ColorEcho {
    pub fn current() -> Self {
        Self {
            yuv_matrix: *color::yuv_matrix(),
            lab: LabContext::d65().clone(),
        }
    }
}

/// Metric conventions behind every reported number.
#[derive(Debug, Clone, Serialize)]
pub struct MetricEcho {
    pub sample_scale: &'static str,
    pub psnr_peak: f64,
    pub psnr_cap_db: f64,
    pub msssim_weights: Vec<f64>,
    pub msssim_channels: &'static str,
    pub msssim_db: &'static str,
    pub ciede2000_pooling: &'static str,
    pub ciede_quality: &'static str,
    pub yuv: &'static str,
}

impl MetricEcho {
    pub fn current() -> Self {
        Self {
            sample_scale: "[0, 1]",
            psnr_peak: 1.0,
            psnr_cap_db: crate::metrics::DB_CAP,
            msssim_weights: crate::metrics::MsSsimConfig::default().weights,
            msssim_channels: "mean of R, G, B",
            msssim_db: "-10*log10(1 - msssim)",
            ciede2000_pooling: "arithmetic mean over pixels",
            ciede_quality: "5 - ciede2000",
            yuv: "BT.709 full range on non-linear sRGB",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub id: String,
    pub family: String,
    pub codec: CodecConfig,
    pub lagrangian: Option<LagrangianConfig>,
}

impl From<&SweepConfig> for ConfigEcho {
    fn from(c: &SweepConfig) -> Self {
        Self {
            id: c.id.clone(),
            family: c.family.clone(),
            codec: c.codec.clone(),
            lagrangian: c.lagrangian(),
        }
    }
}

/// Resolved settings written next to the sweep outputs.
#[derive(Debug, Clone, Serialize)]
pub struct SweepMetadata {
    pub aggregation: Aggregation,
    pub images: usize,
    pub failures: usize,
    pub configs: Vec<ConfigEcho>,
    pub color: ColorEcho,
    pub metrics: MetricEcho,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    /// Sorted by image id, then config id.
    pub rows: Vec<ReportRow>,
    pub timings: Vec<TimingRow>,
    /// One curve per (config family, metric).
    pub curves: Vec<RdCurve>,
    pub metadata: SweepMetadata,
}

fn failed_row(image: &str, cfg: &SweepConfig, err: String) -> ReportRow {
    ReportRow {
        image: image.to_string(),
        config: cfg.id.clone(),
        space: cfg.codec.space,
        chroma_channels: cfg.codec.chroma_channels,
        operating_point: cfg.codec.operating_point,
        width: 0,
        height: 0,
        bpp: None,
        bpp_luma_side: None,
        bpp_luma_main: None,
        bpp_chroma_side: None,
        bpp_chroma_main: None,
        bpp_rgb_side: None,
        bpp_rgb_main: None,
        psnr_db: None,
        mse: None,
        msssim: None,
        msssim_db: None,
        ciede2000: None,
        ciede_quality: None,
        loss: None,
        error: Some(err),
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1000.0
}

/// Encodes, serializes, decodes and scores one image under one config.
pub fn evaluate(id: &str, image: &PlanarImage, cfg: &SweepConfig) -> Result<(ReportRow, TimingRow)> {
    let t0 = Instant::now();
    let encoded = encode_image(image, &cfg.codec)?;
    let bytes = encoded.to_bytes();
    let encode_ms = ms(t0);
    let t1 = Instant::now();
    let bitstream = Bitstream::from_bytes(&bytes)?;
    let decoded = decode_bitstream(&bitstream)?;
    let decode_ms = ms(t1);
    let t2 = Instant::now();
    let m = MetricReport::compute(image, &decoded.image)?;
    let metrics_ms = ms(t2);
    let bpp = bitstream.bpp();
    let comp = |id: ComponentId| bitstream.component(id).map(|_| bitstream.component_bpp(id));
    let loss = cfg
        .lagrangian()
        .map(|l| LossBreakdown::from_parts(bpp, m.mse, m.msssim, m.ciede2000, &l).total);
    let row = ReportRow {
        image: id.to_string(),
        config: cfg.id.clone(),
        space: cfg.codec.space,
        chroma_channels: cfg.codec.chroma_channels,
        operating_point: cfg.codec.operating_point,
        width: image.width(),
        height: image.height(),
        bpp: Some(bpp),
        bpp_luma_side: comp(ComponentId::LumaSide),
        bpp_luma_main: comp(ComponentId::LumaMain),
        bpp_chroma_side: comp(ComponentId::ChromaSide),
        bpp_chroma_main: comp(ComponentId::ChromaMain),
        bpp_rgb_side: comp(ComponentId::RgbSide),
        bpp_rgb_main: comp(ComponentId::RgbMain),
        psnr_db: Some(m.psnr_db),
        mse: Some(m.mse),
        msssim: Some(m.msssim),
        msssim_db: Some(m.msssim_db),
        ciede2000: Some(m.ciede2000),
        ciede_quality: Some(m.ciede_quality),
        loss,
        error: None,
    };
    let timing = TimingRow {
        image: id.to_string(),
        config: cfg.id.clone(),
        encode_ms,
        decode_ms,
        metrics_ms,
    };
    Ok((row, timing))
}

/// Runs every (image, config) pair on `threads` workers.
///
/// Per-pair failures become rows with an `error`; the output order does not
/// depend on the worker count.
pub fn run_sweep(
    corpus: &[CorpusImage],
    configs: &[SweepConfig],
    aggregation: Aggregation,
    threads: Option<usize>,
) -> Result<SweepOutput> {
    if corpus.is_empty() {
        return Err(Error::Empty("corpus has no images".into()));
    }
    if configs.is_empty() {
        return Err(Error::Empty("no configs".into()));
    }
    let jobs: Vec<(&CorpusImage, &SweepConfig)> =
        corpus.iter().flat_map(|img| configs.iter().map(move |c| (img, c))).collect();
    let run = || -> Vec<(ReportRow, Option<TimingRow>)> {
        jobs.par_iter()
            .map(|(img, cfg)| match &img.image {
                Err(e) => (failed_row(&img.id, cfg, e.clone()), None),
                Ok(image) => match evaluate(&img.id, image, cfg) {
                    Ok((row, t)) => (row, Some(t)),
                    Err(e) => {
                        log::warn!("{} / {}: {e}", img.id, cfg.id);
                        (failed_row(&img.id, cfg, e.to_string()), None)
                    }
                },
            })
            .collect()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let mut results = pool.install(run);
    results.sort_by(|a, b| (&a.0.image, &a.0.config).cmp(&(&b.0.image, &b.0.config)));
    let (rows, timings): (Vec<ReportRow>, Vec<Option<TimingRow>>) = results.into_iter().unzip();
    let timings = timings.into_iter().flatten().collect();
    let curves = aggregate(&rows, configs, aggregation);
    let metadata = SweepMetadata {
        aggregation,
        images: corpus.len(),
        failures: rows.iter().filter(|r| !r.is_ok()).count(),
        configs: configs.iter().map(ConfigEcho::from).collect(),
        color: ColorEcho::current(),
        metrics: MetricEcho::current(),
    };
    Ok(SweepOutput {
        rows,
        timings,
        curves,
        metadata,
    })
}

/// Dataset-level point of one config under one metric.
fn aggregate_point(rows: &[&ReportRow], metric: Metric, mode: Aggregation) -> Option<RdPoint> {
    if rows.is_empty() {
        return None;
    }
    let n = rows.len() as f64;
    let mean = |f: &dyn Fn(&ReportRow) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
    let point = match mode {
        Aggregation::MeanOfMeans => RdPoint {
            rate: mean(&|r| r.bpp.unwrap_or(0.0)),
            distortion: match metric {
                Metric::Psnr => mean(&|r| r.psnr_db.unwrap_or(0.0)),
                Metric::MsssimDb => mean(&|r| r.msssim_db.unwrap_or(0.0)),
                Metric::CiedeQuality => mean(&|r| r.ciede_quality.unwrap_or(0.0)),
            },
        },
        Aggregation::Pooled => {
            let pixels: f64 = rows.iter().map(|r| (r.width * r.height) as f64).sum();
            let weighted = |f: &dyn Fn(&ReportRow) -> f64| {
                rows.iter().map(|r| f(r) * (r.width * r.height) as f64).sum::<f64>() / pixels
            };
            RdPoint {
                rate: weighted(&|r| r.bpp.unwrap_or(0.0)),
                distortion: match metric {
                    Metric::Psnr => metrics::cap_db(metrics::psnr_from_mse(weighted(&|r| r.mse.unwrap_or(0.0)), 1.0)),
                    Metric::MsssimDb => metrics::ms_ssim_db(weighted(&|r| r.msssim.unwrap_or(0.0))),
                    Metric::CiedeQuality => metrics::ciede_quality(weighted(&|r| r.ciede2000.unwrap_or(0.0))),
                },
            }
        }
    };
    Some(point)
}

/// Builds one RD curve per (config family, metric) from successful rows.
pub fn aggregate(rows: &[ReportRow], configs: &[SweepConfig], mode: Aggregation) -> Vec<RdCurve> {
    let mut families: Vec<&str> = Vec::new();
    for c in configs {
        if !families.contains(&c.family.as_str()) {
            families.push(&c.family);
        }
    }
    let mut curves = Vec::new();
    for family in families {
        for metric in Metric::ALL {
            let points: Vec<RdPoint> = configs
                .iter()
                .filter(|c| c.family == family)
                .filter_map(|c| {
                    let ok: Vec<&ReportRow> = rows.iter().filter(|r| r.config == c.id && r.is_ok()).collect();
                    aggregate_point(&ok, metric, mode)
                })
                .collect();
            if points.is_empty() {
                continue;
            }
            match RdCurve::new(family, metric, points) {
                Ok(c) => curves.push(c),
                Err(e) => log::warn!("skipping {family} {metric} curve: {e}"),
            }
        }
    }
    curves
}

fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(!rows.is_empty()).from_writer(file);
    if rows.is_empty() {
        w.write_record(header)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

impl SweepOutput {
    /// Writes `rows.csv`, `rd_points.csv`, `timings.csv` and `sweep.json`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_csv_rows(&dir.join("rows.csv"), &self.rows, &["image", "config"])?;
        write_csv_rows(
            &dir.join("timings.csv"),
            &self.timings,
            &["image", "config", "encode_ms", "decode_ms", "metrics_ms"],
        )?;
        let rd = dir.join("rd_points.csv");
        let file = std::fs::File::create(&rd).map_err(|e| Error::io(&rd, e))?;
        write_curves(file, &self.curves)?;
        let meta = dir.join("sweep.json");
        let text = serde_json::to_string_pretty(&self.metadata)?;
        std::fs::write(&meta, text + "\n").map_err(|e| Error::io(&meta, e))?;
        Ok(())
    }
}
