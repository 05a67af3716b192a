use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::array::BeamPointingAngle;
use crate::error::{Error, Result};
use crate::metrics::quantiles;
use crate::neural::AnyModel;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HardwareInfo {
    pub cpu: String,
    pub arch: String,
    pub os: String,
    pub logical_cpus: usize,
    pub optimized_build: bool,
}

impl HardwareInfo {
    pub fn detect() -> Self {
        let cpu = std::fs::read_to_string("/proc/cpuinfo")
            .ok()
            .and_then(|s| {
                s.lines()
                    .find(|l| l.starts_with("model name"))
                    .and_then(|l| l.split_once(':'))
                    .map(|(_, v)| v.trim().to_string())
            })
            .unwrap_or_else(|| "unknown".into());
        Self {
            cpu,
            arch: std::env::consts::ARCH.into(),
            os: std::env::consts::OS.into(),
            logical_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            optimized_build: !cfg!(debug_assertions),
        }
    }

    pub fn descriptor(&self) -> String {
        format!(
            "{} ({} {}, {} logical cpus, {} build)",
            self.cpu,
            self.arch,
            self.os,
            self.logical_cpus,
            if self.optimized_build { "optimized" } else { "debug" }
        )
    }
}

/// Wall-clock cost of one single-angle prediction, in nanoseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub trials: usize,
    pub warmup: usize,
    pub precision: String,
    pub median_ns: f64,
    pub p95_ns: f64,
    pub mean_ns: f64,
    pub min_ns: f64,
    pub hardware: HardwareInfo,
    pub hardware_descriptor: String,
}

/// Times `trials` single predictions, cycling through `bpas`, after an
/// untimed warm-up.
pub fn measure_inference_latency(
    model: &AnyModel,
    bpas: &[BeamPointingAngle<f64>],
    trials: usize,
) -> Result<LatencyReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("latency needs at least one trial".into()));
    }
    if bpas.is_empty() {
        return Err(Error::Empty("latency inputs"));
    }
    let warmup = trials.min(200);
    for b in bpas.iter().cycle().take(warmup) {
        black_box(model.predict_phases(black_box(b))?);
    }
    let mut ns = Vec::with_capacity(trials);
    for b in bpas.iter().cycle().take(trials) {
        let t = Instant::now();
        black_box(model.predict_phases(black_box(b))?);
        ns.push(t.elapsed().as_nanos() as f64);
    }
    let q = quantiles(&ns, &[50.0, 95.0])?;
    let hardware = HardwareInfo::detect();
    Ok(LatencyReport {
        trials,
        warmup,
        precision: match model {
            AnyModel::F32(_) => "f32".into(),
            AnyModel::F64(_) => "f64".into(),
        },
        median_ns: q[0],
        p95_ns: q[1],
        mean_ns: ns.iter().sum::<f64>() / trials as f64,
        min_ns: ns.iter().copied().fold(f64::INFINITY, f64::min),
        hardware_descriptor: hardware.descriptor(),
        hardware,
    })
}
