//! Dataset generation, training orchestration, evaluation and reporting.

mod config;
mod dataset;
mod eval;
mod latency;
mod pipeline;
mod report;
mod training;

pub use config::{derive_seed, ExperimentConfig, Precision, FULL_SCALE_EPOCHS, FULL_SCALE_SAMPLES};
pub use dataset::{generate_dataset, split_dataset, Dataset, DatasetRow, SectorSpec, Split};
pub use eval::{
    evaluate_approach, quantization_sweep, CsimReference, EvalContext, EvalReport, EvalSettings, EvalSummary,
    PeakSearch, Provider, QuantileSummary, Quartiles, ReportMeta, REPORT_PERCENTILES,
};
pub use latency::{measure_inference_latency, HardwareInfo, LatencyReport};
pub use pipeline::{run_pipeline, write_trace, PipelineOutput, PipelineSummary, SplitSizes, StageSeeds, TrainingSummary};
pub use report::{
    export_report, label_slug, read_samples_csv, summary_json, write_cdf_csv, write_cdf_series, write_samples_csv, ExportedFiles,
    CDF_COLUMNS, SAMPLE_COLUMNS,
};
pub use training::{regression_arrays, train_regressor, TrainOutcome};
