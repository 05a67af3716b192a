use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::eval::{EvalReport, EvalSummary};
use crate::array::BeamPointingAngle;
use crate::error::{Error, Result};
use crate::metrics::{empirical_cdf, MetricSample};

pub const SAMPLE_COLUMNS: [&str; 6] = [
    "target_phi",
    "target_theta",
    "achieved_phi",
    "achieved_theta",
    "central_angle_deg",
    "cosine_similarity",
];

pub const CDF_COLUMNS: [&str; 4] = ["approach", "metric", "value", "cumulative_fraction"];

pub fn write_samples_csv<W: Write>(report: &EvalReport, out: W) -> Result<()> {
    if report.samples.is_empty() {
        return Err(Error::Empty("report samples"));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SAMPLE_COLUMNS)?;
    for s in &report.samples {
        w.write_record([
            s.target.az_deg().to_string(),
            s.target.el_deg().to_string(),
            s.achieved.az_deg().to_string(),
            s.achieved.el_deg().to_string(),
            s.central_angle_deg.to_string(),
            s.cosine_similarity.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_samples_csv<R: Read>(input: R) -> Result<Vec<MetricSample>> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().ne(SAMPLE_COLUMNS) {
        return Err(Error::InvalidArgument(format!("sample CSV header must be {}", SAMPLE_COLUMNS.join(","))));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let v = rec
            .iter()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidArgument(format!("sample CSV line {}: {e}", out.len() + 2)))?;
        if v.len() != SAMPLE_COLUMNS.len() {
            return Err(Error::InvalidArgument(format!("sample CSV line {} has {} fields", out.len() + 2, v.len())));
        }
        out.push(MetricSample {
            target: BeamPointingAngle::new(v[0], v[1])?,
            achieved: BeamPointingAngle::new(v[2], v[3])?,
            central_angle_deg: v[4],
            cosine_similarity: v[5],
        });
    }
    Ok(out)
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    reports: Vec<&'a EvalSummary>,
}

/// Pretty JSON `{"reports": [...]}` of the report summaries.
pub fn summary_json(reports: &[EvalReport]) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::Empty("report list"));
    }
    let file = SummaryFile {
        reports: reports.iter().map(|r| &r.summary).collect(),
    };
    Ok(serde_json::to_string_pretty(&file)? + "\n")
}

/// Long-format empirical CDFs of both metrics for every report.
pub fn write_cdf_csv<W: Write>(reports: &[EvalReport], out: W) -> Result<()> {
    let series: Vec<(&str, &[MetricSample])> = reports.iter().map(|r| (r.label(), r.samples.as_slice())).collect();
    write_cdf_series(&series, out)
}

/// [`write_cdf_csv`] for labelled sample sets that are not full reports.
pub fn write_cdf_series<W: Write>(series: &[(&str, &[MetricSample])], out: W) -> Result<()> {
    if series.is_empty() {
        return Err(Error::Empty("report list"));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CDF_COLUMNS)?;
    for (label, samples) in series {
        let ca: Vec<f64> = samples.iter().map(|s| s.central_angle_deg).collect();
        let cs: Vec<f64> = samples.iter().map(|s| s.cosine_similarity).collect();
        for (metric, values) in [("central_angle_deg", ca), ("cosine_similarity", cs)] {
            for (v, f) in empirical_cdf(&values)? {
                w.write_record([label, metric, &v.to_string(), &f.to_string()])?;
            }
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// File-name-safe form of a report label.
pub fn label_slug(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportedFiles {
    pub samples: Vec<PathBuf>,
    pub summary: PathBuf,
    pub cdf: PathBuf,
}

/// Writes `samples_<label>.csv` per report, `summary.json` and `cdf.csv`
/// into `dir`.
pub fn export_report(reports: &[EvalReport], dir: &Path) -> Result<ExportedFiles> {
    let summary_text = summary_json(reports)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let create = |p: &Path| std::fs::File::create(p).map(std::io::BufWriter::new).map_err(|e| Error::io(p, e));
    let mut samples = Vec::with_capacity(reports.len());
    for r in reports {
        let p = dir.join(format!("samples_{}.csv", label_slug(r.label())));
        write_samples_csv(r, create(&p)?)?;
        samples.push(p);
    }
    let summary = dir.join("summary.json");
    std::fs::write(&summary, summary_text).map_err(|e| Error::io(&summary, e))?;
    let cdf = dir.join("cdf.csv");
    write_cdf_csv(reports, create(&cdf)?)?;
    Ok(ExportedFiles { samples, summary, cdf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::eval::{EvalSummary, PeakSearch, QuantileSummary};
    use crate::harness::CsimReference;
    use crate::array::{DirectionGrid, PeakField};

    fn fake_report(n: usize) -> EvalReport {
        let samples: Vec<MetricSample> = (0..n)
            .map(|i| MetricSample {
                target: BeamPointingAngle::new(i as f64 * 1.1, 40.0 + i as f64 * 0.37).unwrap(),
                achieved: BeamPointingAngle::new(i as f64 * 1.1 + 0.1, 40.0).unwrap(),
                central_angle_deg: (i % 7) as f64 * 0.3 + 1.0 / 3.0,
                cosine_similarity: 1.0 - (i % 5) as f64 * 1e-3,
            })
            .collect();
        EvalReport {
            summary: EvalSummary {
                label: "CB-16-b2".into(),
                bits: Some(2),
                samples: n,
                quantiles: QuantileSummary::of(&samples).unwrap(),
                csim_reference: CsimReference::Unquantized,
                csim_grid: DirectionGrid::<f64>::full_sphere(10.0).unwrap().descriptor(),
                peak_search: PeakSearch {
                    coarse_step_deg: 1.0,
                    fine_step_deg: 0.1,
                    field: PeakField::ArrayFactor,
                },
                geometry: "test".into(),
                seed: 1,
                config_hash: "abc".into(),
            },
            samples,
        }
    }

    #[test]
    fn sample_csv_reproduces_quantiles() {
        let r = fake_report(57);
        let mut buf = Vec::new();
        write_samples_csv(&r, &mut buf).unwrap();
        let back = read_samples_csv(buf.as_slice()).unwrap();
        assert_eq!(back, r.samples);
        let q = QuantileSummary::of(&back).unwrap();
        for (a, b) in q.central_angle_deg.as_array().iter().zip(r.summary.quantiles.central_angle_deg.as_array()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn cdf_is_monotone_and_ends_at_one() {
        let reports = [fake_report(30), fake_report(8)];
        let mut buf = Vec::new();
        write_cdf_csv(&reports, &mut buf).unwrap();
        let mut rd = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(rd.headers().unwrap().iter().collect::<Vec<_>>(), CDF_COLUMNS);
        let rows: Vec<(String, f64, f64)> = rd
            .records()
            .map(|r| {
                let r = r.unwrap();
                (format!("{}/{}", &r[0], &r[1]), r[2].parse().unwrap(), r[3].parse().unwrap())
            })
            .collect();
        for w in rows.windows(2) {
            if w[0].0 == w[1].0 {
                assert!(w[1].2 >= w[0].2 && w[1].1 > w[0].1);
            } else {
                assert_eq!(w[0].2, 1.0);
            }
        }
        assert_eq!(rows.last().unwrap().2, 1.0);
    }

    #[test]
    fn summary_has_four_quantiles_per_metric() {
        let text = summary_json(&[fake_report(10)]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let q = &v["reports"][0]["quantiles"];
        for m in ["central_angle_deg", "cosine_similarity"] {
            let keys: Vec<_> = q[m].as_object().unwrap().keys().cloned().collect();
            assert_eq!(keys.len(), 4);
            assert!(["p25", "p50", "p75", "p95"].iter().all(|k| keys.contains(&k.to_string())));
        }
        assert_eq!(v["reports"][0]["config_hash"], "abc");
    }

    #[test]
    fn empty_inputs_error() {
        assert!(summary_json(&[]).is_err());
        let mut empty = fake_report(1);
        empty.samples.clear();
        assert!(write_samples_csv(&empty, Vec::new()).is_err());
        let dir = tempfile::tempdir().unwrap();
        assert!(export_report(&[], dir.path()).is_err());
        let files = export_report(&[fake_report(5)], dir.path()).unwrap();
        assert!(files.samples[0].ends_with("samples_CB-16-b2.csv"));
        assert!(files.summary.exists() && files.cdf.exists());
    }
}
