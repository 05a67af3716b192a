use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{derive_seed, ExperimentConfig, Precision};
use super::dataset::{generate_dataset, split_dataset, Split};
use super::eval::{evaluate_approach, quantization_sweep, EvalContext, EvalReport, EvalSummary, Provider, ReportMeta};
use super::report::export_report;
use super::training::train_regressor;
use crate::array::BeamPointingAngle;
use crate::codebook::{build_planar_codebook, calibrate_with, Codebook};
use crate::error::{Error, Result};
use crate::neural::{AnyModel, EpochLoss, MlpSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSeeds {
    pub dataset: u64,
    pub split: u64,
    pub train: u64,
}

impl StageSeeds {
    pub fn from_master(master: u64) -> Self {
        Self {
            dataset: derive_seed(master, "dataset"),
            split: derive_seed(master, "split"),
            train: derive_seed(master, "train"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub evaluated: usize,
    pub swept: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub epochs: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub final_train_loss: f64,
}

/// Deterministic record of a pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub seed: u64,
    pub config_hash: String,
    pub stage_seeds: StageSeeds,
    pub geometry: String,
    pub sizes: SplitSizes,
    pub training: TrainingSummary,
    pub reports: Vec<EvalSummary>,
}

/// In-memory results of [`run_pipeline`].
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub summary: PipelineSummary,
    pub split: Split,
    pub model: AnyModel,
    pub codebooks: Vec<Codebook<f64>>,
    pub reports: Vec<EvalReport>,
    /// Quantization sweep entries; also present in `reports`.
    pub sweep: Vec<EvalReport>,
    pub trace: Vec<EpochLoss>,
}

fn head(targets: &[BeamPointingAngle<f64>], n: usize) -> &[BeamPointingAngle<f64>] {
    if n == 0 {
        targets
    } else {
        &targets[..n.min(targets.len())]
    }
}

/// Generate, split, train, evaluate every approach on the same test
/// angles, sweep quantization, and export. When `out_dir` is given the
/// model, loss trace, per-sample CSVs, `summary.json`, `cdf.csv` and
/// `pipeline.json` are written there.
pub fn run_pipeline(cfg: &ExperimentConfig, out_dir: Option<&Path>, mut log: impl FnMut(&str)) -> Result<PipelineOutput> {
    cfg.validate()?;
    let cfg = cfg.effective();
    let seeds = StageSeeds::from_master(cfg.seed);
    let config_hash = cfg.hash()?;
    let geom = cfg.geometry()?;

    log(&format!("generating {} angles", cfg.samples));
    let data = generate_dataset(&cfg.sector(seeds.dataset), &geom)?;
    let split = split_dataset(&data, cfg.split_ratios(), seeds.split)?;
    drop(data);
    if split.test.is_empty() {
        return Err(Error::Empty("test split"));
    }

    log(&format!(
        "training on {} rows ({} validation), {} epochs",
        split.train.len(),
        split.validation.len(),
        cfg.epochs
    ));
    let tcfg = cfg.train_config(seeds.train);
    let every = (cfg.epochs / 20).max(1);
    let mut progress = |e: &EpochLoss| {
        if e.epoch.is_multiple_of(every) || e.epoch == 1 {
            log(&format!("epoch {} train {:.6} val {:.6}", e.epoch, e.train_loss, e.val_loss));
        }
    };
    let (model, trace) = match cfg.precision {
        Precision::F32 => {
            let o = train_regressor::<f32>(&split.train, &split.validation, &geom, MlpSpec::default(), &tcfg, &mut progress)?;
            (AnyModel::F32(o.model), o.trace)
        }
        Precision::F64 => {
            let o = train_regressor::<f64>(&split.train, &split.validation, &geom, MlpSpec::default(), &tcfg, &mut progress)?;
            (AnyModel::F64(o.model), o.trace)
        }
    };
    let best_epoch = match &model {
        AnyModel::F32(m) => m.best_epoch,
        AnyModel::F64(m) => m.best_epoch,
    };

    let ctx = EvalContext::new(
        &geom,
        cfg.eval_settings(),
        ReportMeta {
            seed: cfg.seed,
            config_hash: config_hash.clone(),
        },
    )?;
    let mut codebooks = Vec::with_capacity(cfg.codebook_sizes.len());
    for &k in &cfg.codebook_sizes {
        log(&format!("building and calibrating CB-{k}"));
        codebooks.push(calibrate_with(&build_planar_codebook(&geom, k, cfg.codebook_bits)?, ctx.finder())?);
    }

    let test = split.test.bpas();
    let targets = head(&test, cfg.eval_samples);
    let mut reports = Vec::new();
    let mut providers = vec![Provider::Mgb, Provider::Neural(&model)];
    providers.extend(codebooks.iter().map(Provider::Codebook));
    for p in &providers {
        log(&format!("evaluating {} on {} angles", p.label(), targets.len()));
        reports.push(evaluate_approach(*p, None, targets, &ctx)?);
    }

    let sweep_targets = head(&test, cfg.sweep_samples);
    let sweep = if cfg.sweep_bits.is_empty() {
        Vec::new()
    } else {
        let cb = codebooks
            .iter()
            .find(|c| c.size() == cfg.sweep_codebook)
            .ok_or_else(|| Error::Config(format!("no CB-{} for the sweep", cfg.sweep_codebook)))?;
        log(&format!("quantization sweep over bits {:?}", cfg.sweep_bits));
        quantization_sweep(
            &[Provider::Neural(&model), Provider::Codebook(cb)],
            &cfg.sweep_bits,
            sweep_targets,
            &ctx,
        )?
    };
    reports.extend(sweep.iter().cloned());

    let last = trace.last().copied().ok_or(Error::Empty("training trace"))?;
    let summary = PipelineSummary {
        seed: cfg.seed,
        config_hash,
        stage_seeds: seeds,
        geometry: geom.descriptor(),
        sizes: SplitSizes {
            train: split.train.len(),
            validation: split.validation.len(),
            test: split.test.len(),
            evaluated: targets.len(),
            swept: if sweep.is_empty() { 0 } else { sweep_targets.len() },
        },
        training: TrainingSummary {
            epochs: trace.len(),
            best_epoch,
            best_val_loss: trace[best_epoch - 1].val_loss,
            final_train_loss: last.train_loss,
        },
        reports: reports.iter().map(|r| r.summary.clone()).collect(),
    };

    if let Some(dir) = out_dir {
        export_report(&reports, dir)?;
        model.save(&dir.join("model.json"))?;
        write_trace(&trace, &dir.join("training_loss.csv"))?;
        let p = dir.join("pipeline.json");
        std::fs::write(&p, serde_json::to_string_pretty(&summary)? + "\n").map_err(|e| Error::io(&p, e))?;
        log(&format!("wrote results to {}", dir.display()));
    }

    Ok(PipelineOutput {
        summary,
        split,
        model,
        codebooks,
        reports,
        sweep,
        trace,
    })
}

pub fn write_trace(trace: &[EpochLoss], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(f));
    w.write_record(["epoch", "train_loss", "val_loss"])?;
    for e in trace {
        w.write_record([e.epoch.to_string(), e.train_loss.to_string(), e.val_loss.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
