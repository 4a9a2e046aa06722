use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use super::{ComplexityArgs, ConvertArgs, DecodeArgs, EncodeArgs, Format, ImpulseArgs, MetricsArgs, PlotArgs, SweepArgs, SynthArgs, UsageError, BdArgs};
use crate::analysis::{self, Architecture};
use crate::bd::{self, BdOptions, Metric, RdCurve};
use crate::codec::{self, Bitstream, CodecConfig, OperatingPoint, CHROMA_STEP_FACTOR, DEFAULT_SIDE_STEP, LUMA_STEPS};
use crate::color;
use crate::imageio::{self, ColorSpace, PlanarImage};
use crate::metrics::MetricReport;
use crate::plot;
use crate::rdo::{lagrangian_presets, LagrangianConfig};
use crate::report::{self, ColorEcho, ConfigEcho, SweepConfig, SweepManifest};
use crate::synth;

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Serialize, Deserialize)]
struct PlaneMeta {
    file: String,
    name: String,
    /// Plane value mapped to 0 in the PNG.
    min: f32,
    /// Plane value mapped to 1 in the PNG.
    max: f32,
}

#[derive(Debug, Serialize, Deserialize)]
struct ConvertMeta {
    space: ColorSpace,
    width: usize,
    height: usize,
    planes: Vec<PlaneMeta>,
}

const CONVERT_META: &str = "planes.json";

pub(super) fn convert(a: ConvertArgs, out: &mut dyn Write) -> Result<()> {
    let space = ColorSpace::from(a.space);
    if a.inverse {
        let meta_path = a.input.join(CONVERT_META);
        let text = std::fs::read_to_string(&meta_path).with_context(|| format!("reading {}", meta_path.display()))?;
        let meta: ConvertMeta = serde_json::from_str(&text)?;
        if meta.planes.len() != 3 {
            return Err(crate::Error::UnsupportedFormat(format!("{} lists {} planes", CONVERT_META, meta.planes.len())).into());
        }
        let mut planes: [Vec<f32>; 3] = Default::default();
        for (k, p) in meta.planes.iter().enumerate() {
            let (w, h, samples) = imageio::read_gray16_png(a.input.join(&p.file))?;
            if (w, h) != (meta.width, meta.height) {
                return Err(crate::Error::DimensionMismatch(meta.width, meta.height, w, h).into());
            }
            planes[k] = samples.iter().map(|s| p.min + s * (p.max - p.min)).collect();
        }
        let image = PlanarImage::new(meta.width, meta.height, planes, meta.space)?;
        let srgb = color::convert(&image, ColorSpace::Srgb)?;
        imageio::write_image(&a.output, &srgb)?;
        writeln!(out, "wrote {} ({}x{})", a.output.display(), meta.width, meta.height)?;
        return Ok(());
    }
    if space == ColorSpace::Srgb {
        return Err(UsageError("convert needs a target space other than rgb".into()).into());
    }
    let image = imageio::read_image(&a.input)?;
    let converted = color::convert(&image, space)?;
    std::fs::create_dir_all(&a.output).with_context(|| format!("creating {}", a.output.display()))?;
    let mut planes = Vec::new();
    for (k, range) in space.plane_ranges().iter().enumerate() {
        let file = format!("{}_{}.png", k, range.name);
        let span = range.max - range.min;
        let display: Vec<f32> = converted.plane(k).iter().map(|v| (v - range.min) / span).collect();
        imageio::write_gray16_png(a.output.join(&file), image.width(), image.height(), &display)?;
        planes.push(PlaneMeta {
            file,
            name: range.name.to_string(),
            min: range.min,
            max: range.max,
        });
    }
    let meta = ConvertMeta {
        space,
        width: image.width(),
        height: image.height(),
        planes,
    };
    write_json_file(&a.output.join(CONVERT_META), &meta)?;
    writeln!(out, "wrote 3 {} planes to {}", space.name(), a.output.display())?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct MetricsRow {
    image: String,
    #[serde(flatten)]
    report: MetricReport,
}

fn mean_report(rows: &[MetricsRow]) -> MetricReport {
    let n = rows.len() as f64;
    let m = |f: fn(&MetricReport) -> f64| rows.iter().map(|r| f(&r.report)).sum::<f64>() / n;
    MetricReport {
        psnr_db: m(|r| r.psnr_db),
        psnr_r_db: m(|r| r.psnr_r_db),
        psnr_g_db: m(|r| r.psnr_g_db),
        psnr_b_db: m(|r| r.psnr_b_db),
        mse: m(|r| r.mse),
        msssim: m(|r| r.msssim),
        msssim_db: m(|r| r.msssim_db),
        ciede2000: m(|r| r.ciede2000),
        ciede_quality: m(|r| r.ciede_quality),
    }
}

pub(super) fn metrics(a: MetricsArgs, out: &mut dyn Write) -> Result<()> {
    let batch = a.reference.is_dir();
    let pairs: Vec<(String, PathBuf, PathBuf)> = if batch {
        if !a.distorted.is_dir() {
            return Err(UsageError("reference is a directory but distorted is not".into()).into());
        }
        let corpus = report::load_corpus(&a.reference)?;
        corpus
            .into_iter()
            .map(|c| (c.id.clone(), a.reference.join(&c.id), a.distorted.join(&c.id)))
            .collect()
    } else {
        let name = a.reference.file_name().unwrap_or_default().to_string_lossy().into_owned();
        vec![(name, a.reference.clone(), a.distorted.clone())]
    };
    let mut rows = Vec::new();
    for (id, r, d) in &pairs {
        let x = imageio::read_image(r)?;
        let y = imageio::read_image(d).with_context(|| format!("distorted image for {id}"))?;
        rows.push(MetricsRow {
            image: id.clone(),
            report: MetricReport::compute(&x, &y)?,
        });
    }
    let mean = batch.then(|| MetricsRow {
        image: "mean".into(),
        report: mean_report(&rows),
    });
    match a.format {
        Format::Json | Format::Text => {
            if let Some(mean) = mean {
                #[derive(Serialize)]
                struct Batch {
                    rows: Vec<MetricsRow>,
                    mean: MetricsRow,
                }
                write_json(out, &Batch { rows, mean })?;
            } else {
                write_json(out, &rows[0])?;
            }
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record([
                "image",
                "psnr_db",
                "psnr_r_db",
                "psnr_g_db",
                "psnr_b_db",
                "mse",
                "msssim",
                "msssim_db",
                "ciede2000",
                "ciede_quality",
            ])?;
            for r in rows.iter().chain(mean.as_ref()) {
                let m = &r.report;
                let values = [
                    m.psnr_db,
                    m.psnr_r_db,
                    m.psnr_g_db,
                    m.psnr_b_db,
                    m.mse,
                    m.msssim,
                    m.msssim_db,
                    m.ciede2000,
                    m.ciede_quality,
                ];
                let mut record = vec![r.image.clone()];
                record.extend(values.iter().map(|v| v.to_string()));
                w.write_record(&record)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn codec_config(space: ColorSpace, point: OperatingPoint, chroma: Option<usize>) -> Result<CodecConfig> {
    if space == ColorSpace::LinearRgb {
        return Err(UsageError("the codec operates in rgb, yuv or lab".into()).into());
    }
    let cfg = CodecConfig::preset(space, point)?;
    match chroma {
        Some(c) if space == ColorSpace::Srgb && c != cfg.chroma_channels => Err(UsageError(format!(
            "--chroma-channels {c} needs a dual-branch space (yuv or lab)"
        ))
        .into()),
        Some(c) => Ok(cfg.with_chroma_channels(c).map_err(|e| UsageError(e.to_string()))?),
        None => Ok(cfg),
    }
}

#[derive(Debug, Serialize)]
struct EncodeReport<'a> {
    config: ConfigEcho,
    color: ColorEcho,
    bpp: f64,
    header_bytes: usize,
    file_bytes: usize,
    trace: &'a codec::EncodeTrace,
}

pub(super) fn encode(a: EncodeArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = codec_config(a.space.into(), a.op_point.into(), a.chroma_channels)?;
    let image = imageio::read_image(&a.input)?;
    let enc = codec::encode_image(&image, &cfg)?;
    let bytes = enc.to_bytes();
    std::fs::write(&a.output, &bytes).with_context(|| format!("writing {}", a.output.display()))?;
    let bs = &enc.bitstream;
    let mut line = format!("bpp total={:.6}", bs.bpp());
    for c in &bs.components {
        line.push_str(&format!(" {}={:.6}", c.id, bs.component_bpp(c.id)));
    }
    let header_bpp = (bs.header_bytes() * 8) as f64 / bs.pixels() as f64;
    line.push_str(&format!(
        " header={header_bpp:.6} file_bytes={} pixels={}",
        bytes.len(),
        bs.pixels()
    ));
    writeln!(out, "{line}")?;
    if let Some(path) = &a.trace {
        let report = EncodeReport {
            config: ConfigEcho::from(&SweepConfig::new(cfg)),
            color: ColorEcho::current(),
            bpp: bs.bpp(),
            header_bytes: bs.header_bytes(),
            file_bytes: bytes.len(),
            trace: &enc.trace,
        };
        write_json_file(path, &report)?;
    }
    Ok(())
}

pub(super) fn decode(a: DecodeArgs, out: &mut dyn Write) -> Result<()> {
    let bytes = std::fs::read(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let bs = Bitstream::from_bytes(&bytes)?;
    let dec = codec::decode_bitstream(&bs)?;
    imageio::write_image(&a.output, &dec.image)?;
    writeln!(
        out,
        "decoded {}x{} {} {} bpp={:.6}",
        dec.image.width(),
        dec.image.height(),
        bs.header.space.name(),
        bs.header.operating_point,
        bs.bpp()
    )?;
    Ok(())
}

pub(super) fn sweep(a: SweepArgs, out: &mut dyn Write) -> Result<()> {
    let mut manifest = SweepManifest::from_file(&a.manifest)?;
    if let Some(o) = a.output {
        manifest.output = o;
    }
    if let Some(agg) = a.aggregation {
        manifest.aggregation = agg.into();
    }
    let threads = a.threads.or(manifest.threads);
    if threads == Some(0) {
        return Err(UsageError("thread count must be positive".into()).into());
    }
    let configs = manifest.expand()?;
    let corpus = report::load_corpus(&manifest.corpus)?;
    let result = report::run_sweep(&corpus, &configs, manifest.aggregation, threads)?;
    result.write(&manifest.output)?;
    writeln!(
        out,
        "{} images x {} configs: {} rows, {} failures, {} curves -> {}",
        corpus.len(),
        configs.len(),
        result.rows.len(),
        result.metadata.failures,
        result.curves.len(),
        manifest.output.display()
    )?;
    Ok(())
}

pub(super) fn bd(a: BdArgs, out: &mut dyn Write) -> Result<()> {
    let anchor_file = bd::read_curves_file(&a.anchor)?;
    let anchor_codec = match &a.anchor_codec {
        Some(c) => c.clone(),
        None => anchor_file[0].codec.clone(),
    };
    let anchors: Vec<RdCurve> = anchor_file.iter().filter(|c| c.codec == anchor_codec).cloned().collect();
    if anchors.is_empty() {
        return Err(UsageError(format!("no curves for anchor codec '{anchor_codec}'")).into());
    }
    let tests: Vec<RdCurve> = match &a.tests {
        Some(p) => bd::read_curves_file(p)?,
        None => anchor_file.iter().filter(|c| c.codec != anchor_codec).cloned().collect(),
    };
    let metrics: Vec<Metric> = if !a.metrics.is_empty() {
        a.metrics.clone()
    } else if a.transform == bd::Transform::Reciprocal {
        vec![Metric::CiedeQuality]
    } else {
        Metric::ALL.into_iter().filter(|m| anchors.iter().any(|c| c.metric == *m)).collect()
    };
    let opts = BdOptions {
        interpolation: a.method,
        transform: a.transform,
    };
    let table = bd::bd_table(&anchors, &tests, &metrics, opts)?;
    match a.format {
        Format::Text => write!(out, "{}", table.to_text())?,
        Format::Json => write_json(out, &table)?,
        Format::Csv => table.write_csv(&mut *out)?,
    }
    Ok(())
}

pub(super) fn plot(a: PlotArgs, out: &mut dyn Write) -> Result<()> {
    let mut curves = Vec::new();
    for p in &a.inputs {
        curves.extend(bd::read_curves_file(p)?);
    }
    let metrics: Vec<Metric> = Metric::ALL
        .into_iter()
        .filter(|m| a.metrics.is_empty() || a.metrics.contains(m))
        .filter(|m| curves.iter().any(|c| c.metric == *m))
        .collect();
    if metrics.is_empty() {
        return Err(crate::Error::Empty("no curves for the requested metrics".into()).into());
    }
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    for m in metrics {
        let selected: Vec<&RdCurve> = curves.iter().filter(|c| c.metric == m).collect();
        let svg = plot::render_svg(&selected, a.title.as_deref())?;
        let path = a.out_dir.join(format!("rd_{}.svg", m.name()));
        std::fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
        writeln!(out, "{} ({} curves)", path.display(), selected.len())?;
    }
    Ok(())
}

pub(super) fn impulse(a: ImpulseArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = codec_config(a.space.into(), a.op_point.into(), a.chroma_channels)?;
    let image = match &a.image {
        Some(p) => imageio::read_image(p)?,
        None => synth::natural_image(a.seed, 256, 256),
    };
    let enc = codec::encode_image(&image, &cfg)?;
    let ranking = analysis::channel_bit_allocation(&enc.trace)?;
    let chosen = analysis::mosaic_channels(&cfg, &ranking);
    let mosaic = analysis::impulse_mosaic(&cfg, &ranking, a.amplitude)?;
    imageio::write_image(&a.out, &mosaic)?;
    if let Some(p) = &a.ranking {
        let file = std::fs::File::create(p).with_context(|| format!("writing {}", p.display()))?;
        ranking.write_csv(file)?;
    }
    if let Some(p) = &a.dc_out {
        let latents = codec::ImageLatents::analyze(&image, &cfg)?;
        imageio::write_image(p, &analysis::single_channel_reconstruction(&latents, 0)?)?;
    }
    let luma = chosen.iter().filter(|(b, _)| *b == codec::Branch::Luma).count();
    let chroma = chosen.iter().filter(|(b, _)| *b == codec::Branch::Chroma).count();
    writeln!(
        out,
        "{} patches (luma {luma}, chroma {chroma}, rgb {}) -> {}",
        chosen.len(),
        chosen.len() - luma - chroma,
        a.out.display()
    )?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct ComplexityReport {
    name: String,
    layers: usize,
    params: u64,
    kmacs_per_pixel: f64,
}

pub(super) fn complexity(a: ComplexityArgs, out: &mut dyn Write) -> Result<()> {
    let text = std::fs::read_to_string(&a.arch).with_context(|| format!("reading {}", a.arch.display()))?;
    let arch: Architecture = serde_json::from_str(&text)?;
    let c = analysis::complexity(&arch.layers)?;
    write_json(
        out,
        &ComplexityReport {
            name: arch.name,
            layers: arch.layers.len(),
            params: c.params,
            kmacs_per_pixel: c.kmacs_per_pixel,
        },
    )
}

#[derive(Debug, Serialize)]
struct StepPreset {
    label: &'static str,
    luma_step: f64,
    chroma_step: f64,
    side_step: f64,
}

#[derive(Debug, Serialize)]
struct Presets {
    lagrangian: Vec<LagrangianConfig>,
    steps: Vec<StepPreset>,
    color: ColorEcho,
}

pub(super) fn presets(out: &mut dyn Write) -> Result<()> {
    let steps = OperatingPoint::PRESETS
        .iter()
        .zip(LUMA_STEPS)
        .map(|(p, s)| StepPreset {
            label: p.label(),
            luma_step: s,
            chroma_step: s * CHROMA_STEP_FACTOR,
            side_step: DEFAULT_SIDE_STEP,
        })
        .collect();
    write_json(
        out,
        &Presets {
            lagrangian: lagrangian_presets(),
            steps,
            color: ColorEcho::current(),
        },
    )
}

pub(super) fn synth(a: SynthArgs, out: &mut dyn Write) -> Result<()> {
    if a.count == 0 || a.width == 0 || a.height == 0 {
        bail!(UsageError("count, width and height must be positive".into()));
    }
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    for k in 0..a.count {
        let img = synth::natural_image(a.seed + k as u64, a.width, a.height);
        imageio::write_image(a.out_dir.join(format!("synth_{k:03}.png")), &img)?;
    }
    writeln!(out, "wrote {} images to {}", a.count, a.out_dir.display())?;
    Ok(())
}
