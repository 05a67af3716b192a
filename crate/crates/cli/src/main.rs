use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use beamsynth::array::{ElementModel, PeakField, PeakFinder};
use beamsynth::codebook::{build_planar_codebook, calibrate_with};
use beamsynth::Codebook;
use beamsynth::harness::{
    derive_seed, evaluate_approach, export_report, generate_dataset, measure_inference_latency, quantization_sweep,
    read_samples_csv, run_pipeline, split_dataset, summary_json, train_regressor, write_cdf_series, write_trace,
    CsimReference, Dataset, EvalContext, EvalReport, EvalSummary, ExperimentConfig, Precision, Provider, ReportMeta,
};
use beamsynth::neural::{AnyModel, EpochLoss, MlpSpec, ScalerKind, TargetEncoding};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "beamsynth", version, about = "Phase-only beam steering experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Master seed; stage seeds are derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Array shape as `rows,cols,spacing` (spacing in wavelengths).
    #[arg(long, global = true, value_name = "ROWS,COLS,SPACING")]
    geometry: Option<String>,
    /// Cosine-similarity grid step in degrees.
    #[arg(long, global = true)]
    grid_step: Option<f64>,
    /// Flat TOML experiment config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// `xy` or `panel:<facing azimuth>`.
    #[arg(long, global = true)]
    orientation: Option<String>,
    /// `isotropic` or `small-dipole-z`.
    #[arg(long, global = true)]
    element: Option<String>,
    /// Field searched for the beam peak: `array-factor` or `total`.
    #[arg(long, global = true)]
    peak_field: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    #[command(subcommand)]
    Dataset(DatasetCmd),
    #[command(subcommand)]
    Codebook(CodebookCmd),
    /// Train the regressor on a training and a validation CSV.
    Train(TrainArgs),
    /// Evaluate one approach on a test CSV.
    Eval(EvalArgs),
    /// Evaluate the model and a codebook across phase-shifter bit depths.
    SweepBits(SweepArgs),
    /// Time single-angle predictions.
    Latency(LatencyArgs),
    /// Build a CDF CSV from per-sample CSVs.
    ExportCdf(CdfArgs),
    /// Run dataset generation through export in one go.
    Pipeline(PipelineArgs),
    /// Print the effective configuration as TOML.
    ShowConfig,
}

#[derive(Subcommand)]
enum DatasetCmd {
    /// Sample pointing angles over the sector and compute steering phases.
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Shuffle and split into train/validation/test CSVs.
    Split {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum CodebookCmd {
    /// Build a planar codebook of `size` codewords.
    Gen {
        #[arg(long)]
        size: usize,
        #[arg(long)]
        bits: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Locate every codeword's beam peak.
    Calibrate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Coarse peak-search step in degrees.
        #[arg(long)]
        peak_step: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    F32,
    F64,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    validation: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long, value_enum)]
    precision: Option<PrecisionArg>,
    /// `standard` or `min-max`.
    #[arg(long)]
    normalization: Option<String>,
    /// `unwrapped` or `wrapped`.
    #[arg(long)]
    target_encoding: Option<String>,
    #[arg(long)]
    no_batch_norm: bool,
    /// Per-epoch loss CSV.
    #[arg(long)]
    loss_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Approach {
    Mgb,
    Nn,
    Cb,
}

#[derive(Args)]
struct EvalInputs {
    /// Test CSV; only the angle columns are used.
    #[arg(long)]
    test: PathBuf,
    /// Evaluate only the first N test angles.
    #[arg(long)]
    samples: Option<usize>,
    /// `unquantized` or `matched-resolution`.
    #[arg(long)]
    csim_reference: Option<String>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_enum)]
    approach: Approach,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Calibrated codebook JSON.
    #[arg(long)]
    codebook: Option<PathBuf>,
    /// Quantize weights to this many bits before evaluation.
    #[arg(long)]
    bits: Option<u32>,
    #[command(flatten)]
    inputs: EvalInputs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    codebook: PathBuf,
    /// Comma-separated bit depths.
    #[arg(long, value_delimiter = ',')]
    bits: Option<Vec<u32>>,
    #[command(flatten)]
    inputs: EvalInputs,
}

#[derive(Args)]
struct LatencyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CdfArgs {
    /// Per-sample CSVs named `samples_<label>.csv`.
    #[arg(long = "samples", required = true, num_args = 1..)]
    samples: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    out_dir: PathBuf,
    /// Use the full-size dataset and epoch count.
    #[arg(long)]
    full_scale: bool,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Skip the latency measurement.
    #[arg(long)]
    no_latency: bool,
}

fn resolve_config(g: &Global) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &g.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(geo) = &g.geometry {
        let parts: Vec<&str> = geo.split(',').map(str::trim).collect();
        let [r, c, d] = parts[..] else {
            bail!("--geometry expects rows,cols,spacing, got `{geo}`");
        };
        cfg.rows = r.parse().with_context(|| format!("bad row count `{r}`"))?;
        cfg.cols = c.parse().with_context(|| format!("bad column count `{c}`"))?;
        cfg.spacing = d.parse().with_context(|| format!("bad spacing `{d}`"))?;
    }
    if let Some(s) = g.grid_step {
        cfg.grid_step = s;
    }
    if let Some(o) = &g.orientation {
        cfg.orientation = o.clone();
    }
    if let Some(e) = &g.element {
        cfg.element = e.parse::<ElementModel>()?;
    }
    if let Some(f) = &g.peak_field {
        cfg.peak_field = f.parse::<PeakField>()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn eval_context(cfg: &ExperimentConfig, inputs: &EvalInputs) -> anyhow::Result<EvalContext> {
    let mut settings = cfg.eval_settings();
    if let Some(r) = &inputs.csim_reference {
        settings.csim_reference = r.parse::<CsimReference>()?;
    }
    let meta = ReportMeta {
        seed: cfg.seed,
        config_hash: cfg.hash()?,
    };
    Ok(EvalContext::new(&cfg.geometry()?, settings, meta)?)
}

fn load_targets(inputs: &EvalInputs, cfg: &ExperimentConfig) -> anyhow::Result<Vec<beamsynth::Bpa>> {
    let mut targets = Dataset::load(&inputs.test)?.bpas();
    let n = inputs.samples.unwrap_or(cfg.eval_samples);
    if n > 0 {
        targets.truncate(n);
    }
    Ok(targets)
}

fn print_summaries(reports: &[EvalReport]) -> anyhow::Result<()> {
    let list: Vec<&EvalSummary> = reports.iter().map(|r| &r.summary).collect();
    println!("{}", serde_json::to_string_pretty(&list)?);
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = resolve_config(&cli.global)?;
    match cli.command {
        Command::ShowConfig => print!("{}", cfg.to_toml()?),
        Command::Dataset(DatasetCmd::Gen { out, samples }) => {
            let mut sector = cfg.sector(derive_seed(cfg.seed, "dataset"));
            if let Some(n) = samples {
                sector.samples = n;
            }
            let geom = cfg.geometry()?;
            let data = generate_dataset(&sector, &geom)?;
            data.save(&out, geom.len())?;
            eprintln!("wrote {} rows to {}", data.len(), out.display());
        }
        Command::Dataset(DatasetCmd::Split { input, out_dir }) => {
            let data = Dataset::load(&input)?;
            let n = data.elements().unwrap_or(cfg.rows * cfg.cols);
            let split = split_dataset(&data, cfg.split_ratios(), derive_seed(cfg.seed, "split"))?;
            std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            for (name, part) in [("train", &split.train), ("validation", &split.validation), ("test", &split.test)] {
                part.save(&out_dir.join(format!("{name}.csv")), n)?;
            }
            eprintln!(
                "split {} rows into {}/{}/{}",
                data.len(),
                split.train.len(),
                split.validation.len(),
                split.test.len()
            );
        }
        Command::Codebook(CodebookCmd::Gen { size, bits, out }) => {
            let cb = build_planar_codebook(&cfg.geometry()?, size, bits.unwrap_or(cfg.codebook_bits))?;
            cb.save(&out)?;
            eprintln!("wrote CB-{size} to {}", out.display());
        }
        Command::Codebook(CodebookCmd::Calibrate { input, out, peak_step }) => {
            let cb = Codebook::load(&input)?;
            let finder = PeakFinder::with_field(&cb.geometry()?, peak_step.unwrap_or(cfg.peak_step), cfg.peak_field)?;
            let cb = calibrate_with(&cb, &finder)?;
            cb.save(&out)?;
            eprintln!("calibrated CB-{} into {}", cb.size(), out.display());
        }
        Command::Train(a) => train(&cfg, a)?,
        Command::Eval(a) => {
            let ctx = eval_context(&cfg, &a.inputs)?;
            let targets = load_targets(&a.inputs, &cfg)?;
            let (model, codebook);
            let provider = match a.approach {
                Approach::Mgb => Provider::Mgb,
                Approach::Nn => {
                    let p = a.model.as_ref().context("--model is required for --approach nn")?;
                    model = AnyModel::load(p)?;
                    Provider::Neural(&model)
                }
                Approach::Cb => {
                    let p = a.codebook.as_ref().context("--codebook is required for --approach cb")?;
                    codebook = Codebook::load(p)?;
                    Provider::Codebook(&codebook)
                }
            };
            let report = evaluate_approach(provider, a.bits, &targets, &ctx)?;
            let reports = [report];
            export_report(&reports, &a.inputs.out_dir)?;
            print_summaries(&reports)?;
        }
        Command::SweepBits(a) => {
            let ctx = eval_context(&cfg, &a.inputs)?;
            let targets = load_targets(&a.inputs, &cfg)?;
            let model = AnyModel::load(&a.model)?;
            let cb = Codebook::load(&a.codebook)?;
            let bits = a.bits.unwrap_or_else(|| cfg.sweep_bits.clone());
            let reports = quantization_sweep(&[Provider::Neural(&model), Provider::Codebook(&cb)], &bits, &targets, &ctx)?;
            export_report(&reports, &a.inputs.out_dir)?;
            print_summaries(&reports)?;
        }
        Command::Latency(a) => {
            let model = AnyModel::load(&a.model)?;
            let bpas = cfg.sector(derive_seed(cfg.seed, "latency")).sample()?;
            let bpas = &bpas[..bpas.len().min(1000)];
            let report = measure_inference_latency(&model, bpas, a.trials.unwrap_or(cfg.latency_trials))?;
            let text = serde_json::to_string_pretty(&report)? + "\n";
            if let Some(out) = &a.out {
                write_text(out, &text)?;
            }
            print!("{text}");
        }
        Command::ExportCdf(a) => {
            let mut loaded = Vec::with_capacity(a.samples.len());
            for p in &a.samples {
                let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("samples");
                let label = stem.strip_prefix("samples_").unwrap_or(stem).to_string();
                let file = std::fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
                loaded.push((label, read_samples_csv(file)?));
            }
            let series: Vec<_> = loaded.iter().map(|(l, s)| (l.as_str(), s.as_slice())).collect();
            let f = std::fs::File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
            write_cdf_series(&series, std::io::BufWriter::new(f))?;
            eprintln!("wrote {}", a.out.display());
        }
        Command::Pipeline(a) => {
            let mut cfg = cfg;
            cfg.full_scale |= a.full_scale;
            if let Some(n) = a.samples {
                cfg.samples = n;
            }
            if let Some(e) = a.epochs {
                cfg.epochs = e;
            }
            let out = run_pipeline(&cfg, Some(&a.out_dir), |m| eprintln!("{m}"))?;
            if !a.no_latency {
                let bpas = out.split.test.bpas();
                let report = measure_inference_latency(&out.model, &bpas[..bpas.len().min(1000)], cfg.latency_trials)?;
                write_text(&a.out_dir.join("latency.json"), &(serde_json::to_string_pretty(&report)? + "\n"))?;
                eprintln!(
                    "latency median {:.0} ns, p95 {:.0} ns on {}",
                    report.median_ns, report.p95_ns, report.hardware_descriptor
                );
            }
            print!("{}", summary_json(&out.reports)?);
        }
    }
    Ok(())
}

fn train(cfg: &ExperimentConfig, a: TrainArgs) -> anyhow::Result<()> {
    let mut cfg = cfg.clone();
    if let Some(e) = a.epochs {
        cfg.epochs = e;
    }
    if let Some(b) = a.batch_size {
        cfg.batch_size = b;
    }
    if let Some(lr) = a.learning_rate {
        cfg.learning_rate = lr;
    }
    if let Some(p) = a.precision {
        cfg.precision = match p {
            PrecisionArg::F32 => Precision::F32,
            PrecisionArg::F64 => Precision::F64,
        };
    }
    if let Some(n) = &a.normalization {
        cfg.normalization = n.parse::<ScalerKind>()?;
    }
    if let Some(t) = &a.target_encoding {
        cfg.target_encoding = t.parse::<TargetEncoding>()?;
    }
    if a.no_batch_norm {
        cfg.batch_norm = false;
    }
    cfg.validate()?;
    let geom = cfg.geometry()?;
    let train = Dataset::load(&a.train)?;
    let val = Dataset::load(&a.validation)?;
    let tcfg = cfg.train_config(derive_seed(cfg.seed, "train"));
    let every = (tcfg.epochs / 20).max(1);
    let progress = |e: &EpochLoss| {
        if e.epoch.is_multiple_of(every) || e.epoch == 1 {
            eprintln!("epoch {} train {:.6} val {:.6}", e.epoch, e.train_loss, e.val_loss);
        }
    };
    let (model, trace) = match cfg.precision {
        Precision::F32 => {
            let o = train_regressor::<f32>(&train, &val, &geom, MlpSpec::default(), &tcfg, progress)?;
            (AnyModel::F32(o.model), o.trace)
        }
        Precision::F64 => {
            let o = train_regressor::<f64>(&train, &val, &geom, MlpSpec::default(), &tcfg, progress)?;
            (AnyModel::F64(o.model), o.trace)
        }
    };
    model.save(&a.out)?;
    if let Some(p) = &a.loss_out {
        write_trace(&trace, p)?;
    }
    eprintln!("wrote {}", a.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let body = serde_json::json!({ "error": { "code": "usage", "message": e.to_string().trim_end() } });
            eprintln!("{body}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.downcast_ref::<beamsynth::Error>().map_or("cli", beamsynth::Error::code);
            let body = serde_json::json!({ "error": { "code": code, "message": format!("{e:#}") } });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
