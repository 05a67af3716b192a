use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::array::{mgb_weights, ArrayGeometry, BeamPointingAngle, PhaseVector};
use crate::error::{Error, Result};

/// Uniform sampling region for pointing angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorSpec {
    /// `[low, high)` azimuth in degrees.
    pub az_range: [f64; 2],
    /// `[low, high)` elevation in degrees.
    pub el_range: [f64; 2],
    pub samples: usize,
    pub seed: u64,
}

impl Default for SectorSpec {
    fn default() -> Self {
        Self {
            az_range: [0.0, 120.0],
            el_range: [30.0, 150.0],
            samples: 100_000,
            seed: 0,
        }
    }
}

impl SectorSpec {
    pub fn validate(&self) -> Result<()> {
        let [a0, a1] = self.az_range;
        let [e0, e1] = self.el_range;
        let ok = a0.is_finite() && a1.is_finite() && e0.is_finite() && e1.is_finite();
        if !ok || !(0.0 <= a0 && a0 < a1 && a1 <= 360.0) || !(0.0 <= e0 && e0 < e1 && e1 <= 180.0) {
            return Err(Error::InvalidArgument(format!(
                "sector az {:?} el {:?} outside the pointing-angle domain",
                self.az_range, self.el_range
            )));
        }
        Ok(())
    }

    /// Draws `samples` pointing angles.
    pub fn sample(&self) -> Result<Vec<BeamPointingAngle<f64>>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.samples)
            .map(|_| {
                let az = rng.random_range(self.az_range[0]..self.az_range[1]);
                let el = rng.random_range(self.el_range[0]..self.el_range[1]);
                BeamPointingAngle::new(az, el)
            })
            .collect()
    }
}

/// A pointing angle and its exact steering phases.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRow {
    pub bpa: BeamPointingAngle<f64>,
    pub phases: PhaseVector<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub rows: Vec<DatasetRow>,
}

pub fn generate_dataset(spec: &SectorSpec, geom: &ArrayGeometry<f64>) -> Result<Dataset> {
    let rows = spec
        .sample()?
        .into_iter()
        .map(|bpa| DatasetRow {
            phases: mgb_weights(&bpa, geom),
            bpa,
        })
        .collect();
    Ok(Dataset { rows })
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn bpas(&self) -> Vec<BeamPointingAngle<f64>> {
        self.rows.iter().map(|r| r.bpa).collect()
    }

    /// Number of phase columns, or `None` when empty.
    pub fn elements(&self) -> Option<usize> {
        self.rows.first().map(|r| r.phases.len())
    }

    /// CSV with header `az_deg,el_deg,p0,...`. Floats use the shortest
    /// representation that parses back to the same value.
    pub fn write_csv<W: Write>(&self, out: W, elements: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["az_deg".to_string(), "el_deg".to_string()];
        header.extend((0..elements).map(|i| format!("p{i}")));
        w.write_record(&header)?;
        let mut rec = Vec::with_capacity(elements + 2);
        for r in &self.rows {
            r.phases.check_len(elements)?;
            rec.clear();
            rec.push(r.bpa.az_deg().to_string());
            rec.push(r.bpa.el_deg().to_string());
            rec.extend(r.phases.as_slice().iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        if header.len() < 3 || &header[0] != "az_deg" || &header[1] != "el_deg" {
            return Err(Error::InvalidArgument("dataset header must start with az_deg,el_deg,p0".into()));
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let vals = rec
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidArgument(format!("dataset line {}: {e}", rows.len() + 2)))?;
            rows.push(DatasetRow {
                bpa: BeamPointingAngle::new(vals[0], vals[1])?,
                phases: PhaseVector::from_degrees(vals[2..].iter().copied())?,
            });
        }
        Ok(Self { rows })
    }

    pub fn save(&self, path: &Path, elements: usize) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f), elements)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(f))
    }
}

/// Training, validation and test partitions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Split {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

/// Seeded shuffle, then contiguous partitions of `round(ratio * n)` rows;
/// the test split takes the remainder.
pub fn split_dataset(data: &Dataset, ratios: [f64; 3], seed: u64) -> Result<Split> {
    if ratios.iter().any(|r| !(r.is_finite() && *r >= 0.0)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("split ratios {ratios:?} must be non-negative and sum to 1")));
    }
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((ratios[0] * n as f64).round() as usize).min(n);
    let n_val = ((ratios[1] * n as f64).round() as usize).min(n - n_train);
    let take = |idx: &[usize]| Dataset {
        rows: idx.iter().map(|&i| data.rows[i].clone()).collect(),
    };
    Ok(Split {
        train: take(&order[..n_train]),
        validation: take(&order[n_train..n_train + n_val]),
        test: take(&order[n_train + n_val..]),
    })
}
