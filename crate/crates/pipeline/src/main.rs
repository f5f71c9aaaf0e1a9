//! `depthsynth` command line.
//!
//! Every flag can also be set through an environment variable named
//! `DEPTHSYNTH_<FLAG>` (upper case, dashes as underscores), e.g.
//! `DEPTHSYNTH_WORKERS=8`. Exit status: 0 success, 1 partial failure or
//! validation violations, 2 invalid input.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use depthsynth::{
    run_synthesize, run_validate, stats_from_index, stats_from_manifest, PipelineConfig, Stage, ValidateOptions,
};
use depthsynth_core::io::{read_depth, read_gray, write_depth, DepthFormat, DepthUnit};
use depthsynth_core::samplers::{sample, FeatureParams, LidarParams, SampleContext};
use depthsynth_core::{g2_loss_with, l1l2_loss, seeded_rng, CameraIntrinsics, DepthMap, GradientNormalization, SamplerSpec};

#[derive(Parser)]
#[command(name = "depthsynth", version, about = "Pseudo triplet synthesis for depth completion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize pseudo labels and sparse maps for every manifest entry.
    Synthesize {
        #[arg(long, env = "DEPTHSYNTH_MANIFEST")]
        manifest: PathBuf,
        /// TOML run configuration; defaults apply when omitted.
        #[arg(long, env = "DEPTHSYNTH_CONFIG")]
        config: Option<PathBuf>,
        #[arg(long, env = "DEPTHSYNTH_OUT")]
        out: PathBuf,
        /// Overrides `global_seed`.
        #[arg(long, env = "DEPTHSYNTH_SEED")]
        seed: Option<u64>,
        #[arg(long, env = "DEPTHSYNTH_WORKERS")]
        workers: Option<usize>,
        #[arg(long, env = "DEPTHSYNTH_LABELS_PER_IMAGE")]
        labels_per_image: Option<usize>,
        #[arg(long, env = "DEPTHSYNTH_SPARSE_PER_LABEL")]
        sparse_per_label: Option<usize>,
        #[arg(long, env = "DEPTHSYNTH_FORMAT")]
        format: Option<FormatArg>,
    },
    /// Sample one sparse map from a dense depth file.
    Sample {
        #[arg(long, env = "DEPTHSYNTH_DEPTH")]
        depth: PathBuf,
        /// Unit of the input; defaults to the format's convention.
        #[arg(long, env = "DEPTHSYNTH_UNIT")]
        unit: Option<UnitArg>,
        #[arg(long, env = "DEPTHSYNTH_PATTERN")]
        pattern: Pattern,
        #[arg(long, env = "DEPTHSYNTH_RHO")]
        rho: Option<f64>,
        #[arg(long, env = "DEPTHSYNTH_BEAMS", default_value_t = 64)]
        beams: usize,
        #[arg(long, env = "DEPTHSYNTH_BUDGET", default_value_t = 1500)]
        budget: usize,
        /// `fx,fy,cx,cy`, required by the lidar pattern.
        #[arg(long, env = "DEPTHSYNTH_INTRINSICS", value_delimiter = ',', num_args = 4)]
        intrinsics: Option<Vec<f64>>,
        /// Grayscale image, required by the features pattern.
        #[arg(long, env = "DEPTHSYNTH_IMAGE")]
        image: Option<PathBuf>,
        #[arg(long, env = "DEPTHSYNTH_SEED", default_value_t = 0)]
        seed: u64,
        /// Output file; format from its extension.
        #[arg(long, env = "DEPTHSYNTH_OUT")]
        out: PathBuf,
    },
    /// Per-image depth statistics and their spread, per synthesis stage.
    Stats {
        /// Replays the labels of an existing index.
        #[arg(long, env = "DEPTHSYNTH_INDEX", conflicts_with = "manifest", required_unless_present = "manifest")]
        index: Option<PathBuf>,
        /// Synthesizes one label per entry instead.
        #[arg(long, env = "DEPTHSYNTH_MANIFEST")]
        manifest: Option<PathBuf>,
        #[arg(long, env = "DEPTHSYNTH_CONFIG", requires = "manifest")]
        config: Option<PathBuf>,
        #[arg(long, env = "DEPTHSYNTH_SEED")]
        seed: Option<u64>,
        #[arg(long, env = "DEPTHSYNTH_STAGES", value_delimiter = ',', default_value = "original,interpolation,relocation")]
        stages: Vec<String>,
        /// Also write a tab-separated table for plotting.
        #[arg(long, env = "DEPTHSYNTH_TABLE")]
        table: Option<PathBuf>,
        #[arg(long, env = "DEPTHSYNTH_WORKERS")]
        workers: Option<usize>,
    },
    /// Evaluate a loss between a prediction and a label.
    Loss {
        #[arg(long, env = "DEPTHSYNTH_PRED")]
        pred: PathBuf,
        #[arg(long, env = "DEPTHSYNTH_LABEL")]
        label: PathBuf,
        #[arg(long, env = "DEPTHSYNTH_PRED_UNIT")]
        pred_unit: Option<UnitArg>,
        #[arg(long, env = "DEPTHSYNTH_LABEL_UNIT")]
        label_unit: Option<UnitArg>,
        #[arg(long = "loss", env = "DEPTHSYNTH_LOSS", value_enum, default_value_t = LossKind::G2)]
        kind: LossKind,
        #[arg(long, env = "DEPTHSYNTH_NORMALIZATION", value_enum, default_value_t = Normalization::PerLevel)]
        normalization: Normalization,
    },
    /// Re-check every record of a triplet index.
    Validate {
        #[arg(long, env = "DEPTHSYNTH_INDEX")]
        index: PathBuf,
        #[arg(long, env = "DEPTHSYNTH_REPLAY_FRACTION", default_value_t = 0.1)]
        replay_fraction: f64,
        #[arg(long, env = "DEPTHSYNTH_WORKERS")]
        workers: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Png,
    Pfm,
}

#[derive(Clone, Copy, ValueEnum)]
enum UnitArg {
    Mm,
    M,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pattern {
    Uniform,
    Lidar,
    Features,
}

#[derive(Clone, Copy, ValueEnum)]
enum LossKind {
    G2,
    L1l2,
}

#[derive(Clone, Copy, ValueEnum)]
enum Normalization {
    PerLevel,
    FullResolution,
}

impl From<FormatArg> for DepthFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Png => DepthFormat::Png,
            FormatArg::Pfm => DepthFormat::Pfm,
        }
    }
}

impl From<UnitArg> for DepthUnit {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Mm => DepthUnit::Mm,
            UnitArg::M => DepthUnit::M,
        }
    }
}

/// How a finished command ended.
enum Outcome {
    Ok,
    Partial,
}

fn print_json(v: &impl serde::Serialize) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn read_any(path: &Path, unit: Option<UnitArg>) -> anyhow::Result<DepthMap<f64>> {
    let unit = match unit {
        Some(u) => u.into(),
        None => DepthUnit::conventional_for(DepthFormat::from_path(path)?),
    };
    read_depth(path, unit).with_context(|| format!("reading {}", path.display()))
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Synthesize { manifest, config, out, seed, workers, labels_per_image, sparse_per_label, format } => {
            let mut cfg = match config {
                Some(p) => PipelineConfig::load(&p)?,
                None => PipelineConfig::default(),
            };
            if let Some(s) = seed {
                cfg.global_seed = s;
            }
            if workers.is_some() {
                cfg.workers = workers;
            }
            if let Some(n) = labels_per_image {
                cfg.labels_per_image = n;
            }
            if let Some(m) = sparse_per_label {
                cfg.sparse_per_label = m;
            }
            if let Some(f) = format {
                cfg.output.format = f.into();
                cfg.output.unit = None;
            }
            let summary = run_synthesize(&manifest, &cfg, &out)?;
            log::info!(
                "{} of {} entries, {} labels, {} sparse maps, {:.1} images/s",
                summary.entries_ok,
                summary.entries,
                summary.labels,
                summary.sparse_maps,
                summary.images_per_sec
            );
            print_json(&summary)?;
            Ok(if summary.partial_failure() { Outcome::Partial } else { Outcome::Ok })
        }
        Command::Sample { depth, unit, pattern, rho, beams, budget, intrinsics, image, seed, out } => {
            let dense = read_any(&depth, unit)?;
            let k = match intrinsics.as_deref() {
                Some([fx, fy, cx, cy]) => Some(CameraIntrinsics::new(*fx, *fy, *cx, *cy)?),
                Some(_) => bail!("--intrinsics takes fx,fy,cx,cy"),
                None => None,
            };
            let img = image.as_ref().map(read_gray::<f64>).transpose()?;
            let spec = match pattern {
                Pattern::Uniform => SamplerSpec::Uniform { rho },
                Pattern::Lidar => SamplerSpec::Lidar(LidarParams::with_beams(beams)),
                Pattern::Features => SamplerSpec::Features(FeatureParams::with_budget(budget)),
            };
            let mut rng = seeded_rng(seed);
            let spec = spec.resolve(&mut rng);
            let ctx = SampleContext { intrinsics: k.as_ref(), image: img.as_ref() };
            let sparse = sample(&dense, &spec, ctx, &mut rng)?;
            let format = DepthFormat::from_path(&out)?;
            write_depth(&sparse.to_depth_map(), &out, format, DepthUnit::conventional_for(format))?;
            print_json(&serde_json::json!({ "path": out, "sampler": spec, "count": sparse.len() }))?;
            Ok(Outcome::Ok)
        }
        Command::Stats { index, manifest, config, seed, stages, table, workers } => {
            let stages = stages.iter().map(|s| s.parse::<Stage>()).collect::<Result<Vec<_>, _>>()?;
            let report = match (index, manifest) {
                (Some(i), _) => stats_from_index(&i, &stages, workers)?,
                (None, Some(m)) => {
                    let mut cfg = match config {
                        Some(p) => PipelineConfig::load(&p)?,
                        None => PipelineConfig::default(),
                    };
                    if let Some(s) = seed {
                        cfg.global_seed = s;
                    }
                    if workers.is_some() {
                        cfg.workers = workers;
                    }
                    stats_from_manifest(&m, &cfg, &stages)?
                }
                (None, None) => bail!("give --index or --manifest"),
            };
            if let Some(t) = table {
                std::fs::write(&t, report.to_tsv()).with_context(|| format!("writing {}", t.display()))?;
            }
            for w in &report.warnings {
                log::warn!("{w}");
            }
            print_json(&report)?;
            Ok(Outcome::Ok)
        }
        Command::Loss { pred, label, pred_unit, label_unit, kind, normalization } => {
            let p = read_any(&pred, pred_unit)?;
            let l = read_any(&label, label_unit)?;
            match kind {
                LossKind::G2 => {
                    let norm = match normalization {
                        Normalization::PerLevel => GradientNormalization::PerLevel,
                        Normalization::FullResolution => GradientNormalization::FullResolution,
                    };
                    print_json(&g2_loss_with(&p, &l, norm)?)?;
                }
                LossKind::L1l2 => print_json(&l1l2_loss(&p, &l)?)?,
            }
            Ok(Outcome::Ok)
        }
        Command::Validate { index, replay_fraction, workers } => {
            if !(0.0..=1.0).contains(&replay_fraction) {
                bail!("--replay-fraction must lie in [0, 1]");
            }
            let report = run_validate(&index, ValidateOptions { replay_fraction, workers })?;
            for v in &report.violations {
                log::error!("{}: {:?}: {}", v.record_id, v.kind, v.message);
            }
            print_json(&report)?;
            Ok(if report.is_clean() { Outcome::Ok } else { Outcome::Partial })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
