use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::array::{
    mgb_weights, quantize_phases, ArrayGeometry, BeamPointingAngle, DirectionGrid, GridDescriptor, PatternSynth,
    PeakField, PeakFinder, PhaseVector, PlanarSpec,
};
use crate::codebook::Codebook;
use crate::error::{Error, Result};
use crate::metrics::{central_angle, cosine_similarity_raw, quantiles, MetricSample};
use crate::neural::AnyModel;

/// Percentiles reported for every metric.
pub const REPORT_PERCENTILES: [f64; 4] = [25.0, 50.0, 75.0, 95.0];

/// Where beam weights come from.
#[derive(Debug, Clone, Copy)]
pub enum Provider<'a> {
    /// Exact steering weights.
    Mgb,
    Neural(&'a AnyModel),
    /// Weights of the calibrated codeword nearest to each target.
    Codebook(&'a Codebook<f64>),
}

impl Provider<'_> {
    pub fn label(&self) -> String {
        match self {
            Provider::Mgb => "MGB".into(),
            Provider::Neural(_) => "NN".into(),
            Provider::Codebook(cb) => format!("CB-{}", cb.size()),
        }
    }

    fn planar_spec(&self) -> Option<&PlanarSpec> {
        match self {
            Provider::Mgb => None,
            Provider::Neural(m) => Some(m.geometry()),
            Provider::Codebook(cb) => Some(cb.geometry_spec()),
        }
    }
}

/// Pattern that cosine similarity is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CsimReference {
    /// Exact steering weights at full precision.
    Unquantized,
    /// Exact steering weights quantized to the same bit depth as the
    /// evaluated weights; identical to `Unquantized` without quantization.
    #[default]
    MatchedResolution,
}

impl std::str::FromStr for CsimReference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unquantized" => Ok(Self::Unquantized),
            "matched-resolution" => Ok(Self::MatchedResolution),
            _ => Err(Error::InvalidArgument(format!(
                "csim reference {s:?}; expected unquantized or matched-resolution"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    /// Step of the full-sphere grid used for cosine similarity.
    pub csim_grid_step: f64,
    /// Coarse step of the peak search.
    pub peak_step: f64,
    pub peak_field: PeakField,
    pub csim_reference: CsimReference,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            csim_grid_step: 2.0,
            peak_step: 1.0,
            peak_field: PeakField::ArrayFactor,
            csim_reference: CsimReference::MatchedResolution,
        }
    }
}

/// Provenance stamped into every report.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub seed: u64,
    pub config_hash: String,
}

/// Shared synthesis state for evaluating many approaches on one geometry.
#[derive(Debug, Clone)]
pub struct EvalContext {
    geom: ArrayGeometry<f64>,
    synth: PatternSynth<f64>,
    finder: PeakFinder<f64>,
    settings: EvalSettings,
    meta: ReportMeta,
}

impl EvalContext {
    pub fn new(geom: &ArrayGeometry<f64>, settings: EvalSettings, meta: ReportMeta) -> Result<Self> {
        let grid = Arc::new(DirectionGrid::full_sphere(settings.csim_grid_step)?);
        Ok(Self {
            geom: geom.clone(),
            synth: PatternSynth::new(geom, grid),
            finder: PeakFinder::with_field(geom, settings.peak_step, settings.peak_field)?,
            settings,
            meta,
        })
    }

    pub fn geometry(&self) -> &ArrayGeometry<f64> {
        &self.geom
    }

    pub fn finder(&self) -> &PeakFinder<f64> {
        &self.finder
    }

    pub fn settings(&self) -> &EvalSettings {
        &self.settings
    }

    pub fn meta(&self) -> &ReportMeta {
        &self.meta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Result<Self> {
        let q = quantiles(values, &REPORT_PERCENTILES)?;
        Ok(Self {
            p25: q[0],
            p50: q[1],
            p75: q[2],
            p95: q[3],
        })
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.p25, self.p50, self.p75, self.p95]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileSummary {
    pub central_angle_deg: Quartiles,
    pub cosine_similarity: Quartiles,
}

impl QuantileSummary {
    pub fn of(samples: &[MetricSample]) -> Result<Self> {
        let ca: Vec<f64> = samples.iter().map(|s| s.central_angle_deg).collect();
        let cs: Vec<f64> = samples.iter().map(|s| s.cosine_similarity).collect();
        Ok(Self {
            central_angle_deg: Quartiles::of(&ca)?,
            cosine_similarity: Quartiles::of(&cs)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakSearch {
    pub coarse_step_deg: f64,
    pub fine_step_deg: f64,
    pub field: PeakField,
}

/// Everything in a report except the per-sample rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub label: String,
    pub bits: Option<u32>,
    pub samples: usize,
    pub quantiles: QuantileSummary,
    pub csim_reference: CsimReference,
    pub csim_grid: GridDescriptor,
    pub peak_search: PeakSearch,
    pub geometry: String,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub summary: EvalSummary,
    pub samples: Vec<MetricSample>,
}

impl EvalReport {
    pub fn label(&self) -> &str {
        &self.summary.label
    }

    pub fn median_central_angle(&self) -> f64 {
        self.summary.quantiles.central_angle_deg.p50
    }

    pub fn median_cosine_similarity(&self) -> f64 {
        self.summary.quantiles.cosine_similarity.p50
    }
}

const CHUNK: usize = 64;

/// Runs `provider` on every target: weights, optional quantization, peak
/// search and pattern comparison against the exact steering pattern.
pub fn evaluate_approach(
    provider: Provider<'_>,
    bits: Option<u32>,
    targets: &[BeamPointingAngle<f64>],
    ctx: &EvalContext,
) -> Result<EvalReport> {
    if targets.is_empty() {
        return Err(Error::Empty("evaluation targets"));
    }
    if let Some(b) = bits {
        crate::array::phase_resolution::<f64>(b)?;
    }
    if let (Some(p), Some(g)) = (provider.planar_spec(), ctx.geom.planar_spec()) {
        if p != g {
            return Err(Error::InvalidGeometry(format!(
                "{} was built for a different array than the evaluation geometry",
                provider.label()
            )));
        }
    }
    if let Provider::Codebook(cb) = provider {
        if cb.calibrated_bpas().is_none() {
            return Err(Error::Uncalibrated);
        }
    }
    let quantize = |pv: PhaseVector<f64>| match bits {
        Some(b) => quantize_phases(&pv, b),
        None => Ok(pv),
    };
    let mut codeword_peaks: HashMap<usize, BeamPointingAngle<f64>> = HashMap::new();
    let mut samples = Vec::with_capacity(targets.len());

    for chunk in targets.chunks(CHUNK) {
        let exact: Vec<PhaseVector<f64>> = chunk.iter().map(|b| mgb_weights(b, &ctx.geom)).collect();
        let (weights, achieved) = match provider {
            Provider::Codebook(cb) => {
                let idx = chunk.iter().map(|t| cb.nearest(t)).collect::<Result<Vec<_>>>()?;
                let weights = idx
                    .iter()
                    .map(|&k| quantize(cb.codeword(k).clone()))
                    .collect::<Result<Vec<_>>>()?;
                let mut fresh: Vec<(usize, &PhaseVector<f64>)> = Vec::new();
                for (&k, w) in idx.iter().zip(&weights) {
                    if !codeword_peaks.contains_key(&k) && fresh.iter().all(|(j, _)| *j != k) {
                        fresh.push((k, w));
                    }
                }
                let found = ctx.finder.find_batch(&fresh.iter().map(|(_, w)| *w).collect::<Vec<_>>())?;
                codeword_peaks.extend(fresh.iter().map(|(k, _)| *k).zip(found));
                let achieved: Vec<_> = idx.iter().map(|k| codeword_peaks[k]).collect();
                (weights, achieved)
            }
            Provider::Mgb | Provider::Neural(_) => {
                let raw = match provider {
                    Provider::Neural(m) => m.predict_batch(chunk)?,
                    _ => exact.clone(),
                };
                let weights = raw.into_iter().map(quantize).collect::<Result<Vec<_>>>()?;
                let refs: Vec<&PhaseVector<f64>> = weights.iter().collect();
                let achieved = ctx.finder.find_batch(&refs)?;
                (weights, achieved)
            }
        };
        let reference = match (ctx.settings.csim_reference, bits) {
            (CsimReference::MatchedResolution, Some(_)) => exact.into_iter().map(quantize).collect::<Result<Vec<_>>>()?,
            _ => exact,
        };
        let refs: Vec<&PhaseVector<f64>> = reference.iter().collect();
        let ref_mag = ctx.synth.magnitudes(&refs)?;
        let refs: Vec<&PhaseVector<f64>> = weights.iter().collect();
        let mag = ctx.synth.magnitudes(&refs)?;
        for (i, target) in chunk.iter().enumerate() {
            let a = mag.column(i);
            let r = ref_mag.column(i);
            let csim = cosine_similarity_raw(&a.to_vec(), &r.to_vec())?;
            samples.push(MetricSample {
                target: *target,
                achieved: achieved[i],
                central_angle_deg: central_angle(target, &achieved[i]),
                cosine_similarity: csim,
            });
        }
    }
    let label = match bits {
        Some(b) => format!("{}-b{b}", provider.label()),
        None => provider.label(),
    };
    report_from_samples(label, bits, samples, ctx)
}

fn report_from_samples(label: String, bits: Option<u32>, samples: Vec<MetricSample>, ctx: &EvalContext) -> Result<EvalReport> {
    Ok(EvalReport {
        summary: EvalSummary {
            label,
            bits,
            samples: samples.len(),
            quantiles: QuantileSummary::of(&samples)?,
            csim_reference: ctx.settings.csim_reference,
            csim_grid: ctx.synth.grid().descriptor(),
            peak_search: PeakSearch {
                coarse_step_deg: ctx.finder.coarse_step(),
                fine_step_deg: ctx.finder.fine_step(),
                field: ctx.finder.field(),
            },
            geometry: ctx.geom.descriptor(),
            seed: ctx.meta.seed,
            config_hash: ctx.meta.config_hash.clone(),
        },
        samples,
    })
}

/// One report per provider and bit depth, in that nesting order.
pub fn quantization_sweep(
    providers: &[Provider<'_>],
    bits: &[u32],
    targets: &[BeamPointingAngle<f64>],
    ctx: &EvalContext,
) -> Result<Vec<EvalReport>> {
    let mut out = Vec::with_capacity(providers.len() * bits.len());
    for p in providers {
        for &b in bits {
            out.push(evaluate_approach(*p, Some(b), targets, ctx)?);
        }
    }
    Ok(out)
}
