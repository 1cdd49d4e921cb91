use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use occlubench_core::classifier::KernelKind;
use occlubench_core::dataset::AttackKind;
use occlubench_core::features::Extractor;
use occlubench_core::harness::{
    self, cmd_evaluate, cmd_extract, cmd_occlude, cmd_report, cmd_train, load_assets, write_marker, Granularity, Hyper,
    OccludeSummary, OcclusionRequest, RunConfig, ASSETS_ENV,
};
use occlubench_core::metrics::{report_csv, NO_OCCLUSION};
use occlubench_core::synthdata::SynthConfig;

#[derive(Parser)]
#[command(
    name = "occlubench",
    version,
    about = "Occlusion attacks on classical face presentation-attack detectors"
)]
struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value = "rbf", value_parser = parse_kernel)]
    kernel: KernelKind,
    /// Fixed C (disables the grid)
    #[arg(long = "c")]
    c: Option<f64>,
    /// Fixed RBF gamma (default 1 / (dim * var) of the normalized training data)
    #[arg(long)]
    gamma: Option<f64>,
    /// Select C and gamma on the dev set over the default grid
    #[arg(long, conflicts_with_all = ["c", "gamma"])]
    grid: bool,
    #[arg(long, default_value = "video", value_parser = parse_granularity)]
    granularity: Granularity,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

impl ModelArgs {
    fn hyper(&self) -> Hyper {
        match (self.grid, self.c) {
            (false, Some(c)) => Hyper::Fixed { c, gamma: self.gamma },
            (false, None) if self.gamma.is_some() => Hyper::Fixed {
                c: 1.0,
                gamma: self.gamma,
            },
            _ => Hyper::Grid,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a procedural corpus with a subject-disjoint train/dev/test split
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        subjects: u32,
        #[arg(long, default_value_t = 10)]
        frames: u32,
        #[arg(long, default_value_t = 320)]
        width: usize,
        #[arg(long, default_value_t = 240)]
        height: usize,
        /// Attack kinds, comma separated
        #[arg(long, default_value = "print,replay", value_delimiter = ',', value_parser = parse_attack)]
        attacks: Vec<AttackKind>,
    },
    /// Write occluded copies of the test partition
    Occlude {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// low|medium|high|round|mask3d[:<id>]|glasses[:<id>]; repeatable
        #[arg(long, required = true, value_delimiter = ',', value_parser = parse_occlusion)]
        occlusion: Vec<OcclusionRequest>,
        /// Asset-pack manifest or directory
        #[arg(long, env = ASSETS_ENV)]
        assets: Option<PathBuf>,
    },
    /// Extract one feature type for every sample of a manifest
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        /// Output CSV
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = parse_extractor)]
        extractor: Extractor,
    },
    /// Train an SVM on the train partition, selecting by dev EER
    Train {
        /// Clean feature CSV covering train and dev
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Model JSON to write
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Threshold at the dev EER and score a test feature file
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        /// Clean feature CSV (dev rows set the threshold)
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Test feature CSV (defaults to --features)
        #[arg(long)]
        test_features: Option<PathBuf>,
        /// Manifest of the test samples (defaults to --manifest)
        #[arg(long)]
        test_manifest: Option<PathBuf>,
        /// Occlusion name for the report row
        #[arg(long, default_value = NO_OCCLUSION)]
        occlusion: String,
        #[arg(long, default_value = "video", value_parser = parse_granularity)]
        granularity: Granularity,
        /// Metrics CSV to write (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge metric CSVs into report.md and report.csv
    Report {
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Run the whole protocol: occlude, extract, train, evaluate, report
    Run {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Extractors, comma separated
        #[arg(long, default_value = "lbp,iqm,motion", value_delimiter = ',', value_parser = parse_extractor)]
        extractor: Vec<Extractor>,
        /// Occlusions, comma separated; `none` for a baseline-only run
        #[arg(long, default_value = "low,medium,high,round,mask3d,glasses", value_delimiter = ',')]
        occlusion: Vec<String>,
        #[arg(long, env = ASSETS_ENV)]
        assets: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
    },
}

fn parse_kernel(s: &str) -> Result<KernelKind, String> {
    s.parse().map_err(|e: occlubench_core::Error| e.to_string())
}

fn parse_granularity(s: &str) -> Result<Granularity, String> {
    s.parse().map_err(|e: occlubench_core::Error| e.to_string())
}

fn parse_attack(s: &str) -> Result<AttackKind, String> {
    s.parse().map_err(|e: occlubench_core::Error| e.to_string())
}

fn parse_occlusion(s: &str) -> Result<OcclusionRequest, String> {
    s.parse().map_err(|e: occlubench_core::Error| e.to_string())
}

fn parse_extractor(s: &str) -> Result<Extractor, String> {
    s.parse().map_err(|e: occlubench_core::Error| e.to_string())
}

/// Runs `f` with a `.incomplete` marker in `dir` that is removed on success.
fn guarded<T>(dir: &Path, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let marker = write_marker(dir).with_context(|| format!("cannot write to {}", dir.display()))?;
    let value = f()?;
    std::fs::remove_file(&marker).with_context(|| format!("removing {}", marker.display()))?;
    Ok(value)
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon_threads(j)?;
    }
    match cli.command {
        Command::Synth {
            out,
            seed,
            subjects,
            frames,
            width,
            height,
            attacks,
        } => {
            let cfg = SynthConfig {
                seed,
                n_subjects: subjects,
                frames_per_video: frames,
                width,
                height,
                attack_kinds: attacks,
            };
            let records = guarded(&out, || harness::cmd_synth(&cfg, &out).context("synth"))?;
            println!(
                "wrote {} samples to {}",
                records.len(),
                out.join("manifest.jsonl").display()
            );
        }
        Command::Occlude {
            manifest,
            out,
            occlusion,
            assets,
        } => {
            let pack = load_assets(assets.as_deref()).context("loading asset pack")?;
            guarded(&out, || {
                for o in &occlusion {
                    let s: OccludeSummary = cmd_occlude(&manifest, &out, o, &pack)?;
                    println!(
                        "{}: {} samples, {} unoccluded fallback frames -> {}",
                        s.occlusion,
                        s.samples,
                        s.unoccluded_fallback,
                        s.manifest.display()
                    );
                }
                Ok(())
            })?;
        }
        Command::Extract {
            manifest,
            out,
            extractor,
        } => {
            let s = guarded(&parent_dir(&out), || Ok(cmd_extract(&manifest, extractor, &out)?))?;
            println!(
                "{}: {} vectors, {} skipped -> {}",
                extractor.tag(),
                s.vectors.len(),
                s.skipped.len(),
                out.display()
            );
        }
        Command::Train {
            features,
            manifest,
            out,
            model,
        } => {
            let s = guarded(&parent_dir(&out), || {
                Ok(cmd_train(
                    &features,
                    &manifest,
                    model.kernel,
                    model.hyper(),
                    model.granularity,
                    model.seed,
                    &out,
                )?)
            })?;
            println!(
                "{} {}: C={} gamma={:?} dev EER {:.2}% ({} support vectors, converged: {})",
                s.extractor, s.kernel, s.c, s.gamma, s.dev_eer, s.support_vectors, s.converged
            );
        }
        Command::Evaluate {
            model,
            features,
            manifest,
            test_features,
            test_manifest,
            occlusion,
            granularity,
            out,
        } => {
            let test_features = test_features.unwrap_or_else(|| features.clone());
            let test_manifest = test_manifest.unwrap_or_else(|| manifest.clone());
            let fallback = OccludeSummary::load_beside(&test_manifest)?.map_or(0, |s| s.unoccluded_fallback);
            let eval = || -> Result<String> {
                let row = cmd_evaluate(
                    &model,
                    &features,
                    &manifest,
                    &test_features,
                    &test_manifest,
                    &occlusion,
                    granularity,
                    fallback,
                )?;
                Ok(report_csv(&[row]))
            };
            match out {
                Some(path) => {
                    let csv = guarded(&parent_dir(&path), eval)?;
                    std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
                }
                None => print!("{}", eval()?),
            }
        }
        Command::Report { out, inputs } => {
            let refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
            let rows = guarded(&out, || Ok(cmd_report(&refs, &out)?))?;
            println!("{} rows -> {}", rows.len(), out.join("report.md").display());
        }
        Command::Run {
            manifest,
            out,
            extractor,
            occlusion,
            assets,
            model,
        } => {
            let occlusions = if occlusion.iter().any(|o| o == NO_OCCLUSION) {
                if occlusion.len() > 1 {
                    bail!("`none` cannot be combined with other occlusions");
                }
                Vec::new()
            } else {
                occlusion
                    .iter()
                    .map(|o| o.parse())
                    .collect::<Result<_, occlubench_core::Error>>()?
            };
            let cfg = RunConfig {
                extractors: extractor,
                occlusions,
                kernel: model.kernel,
                hyper: model.hyper(),
                granularity: model.granularity,
                seed: model.seed,
                jobs: cli.jobs,
                assets,
                ..RunConfig::new(manifest, out.clone())
            };
            let outcome = harness::run_protocol(&cfg)?;
            println!(
                "{} report rows; audit {} -> {}",
                outcome.rows.len(),
                if outcome.audit.unchanged {
                    "unchanged"
                } else {
                    "CHANGED"
                },
                out.join("report.md").display()
            );
        }
    }
    Ok(())
}

fn rayon_threads(n: usize) -> Result<()> {
    occlubench_core::harness::init_global_threads(n).context("configuring worker threads")
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
