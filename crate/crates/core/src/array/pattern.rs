use std::io::Write;
use std::sync::Arc;

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, Axis, Zip};
use num_complex::Complex;

use super::angle::unit_vector;
use super::geometry::{ArrayGeometry, ElementModel};
use super::grid::DirectionGrid;
use super::phase::PhaseVector;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Element field magnitude toward `(az, el)`.
pub fn element_factor<T: Real>(az_deg: T, el_deg: T, model: ElementModel) -> T {
    model.factor(az_deg, el_deg)
}

/// Far-field value `EF(dir) · Σ_n I_n exp(+j 2π P_n·û(dir))`.
pub fn array_field<T: Real>(
    pv: &PhaseVector<T>,
    geom: &ArrayGeometry<T>,
    az_deg: T,
    el_deg: T,
) -> Result<Complex<T>> {
    pv.check_len(geom.len())?;
    let u = unit_vector(az_deg, el_deg);
    let two_pi = T::TAU();
    let mut acc = Complex::new(T::zero(), T::zero());
    for (p, &phase) in geom.positions().iter().zip(pv.as_slice()) {
        let arg = phase.to_radians() + two_pi * (p[0] * u[0] + p[1] * u[1] + p[2] * u[2]);
        let (s, c) = arg.sin_cos();
        acc.re += c;
        acc.im += s;
    }
    Ok(acc * geom.element().factor(az_deg, el_deg))
}

/// Sampled far-field magnitudes `|F|` over a direction grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiationPattern<T> {
    grid: Arc<DirectionGrid<T>>,
    magnitude: Vec<T>,
}

impl<T: Real> RadiationPattern<T> {
    pub fn new(grid: Arc<DirectionGrid<T>>, magnitude: Vec<T>) -> Result<Self> {
        if magnitude.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                actual: magnitude.len(),
            });
        }
        if magnitude.iter().any(|m| !(m.is_finite() && *m >= T::zero())) {
            return Err(Error::InvalidArgument(
                "pattern magnitudes must be finite and non-negative".into(),
            ));
        }
        Ok(Self { grid, magnitude })
    }

    pub fn grid(&self) -> &Arc<DirectionGrid<T>> {
        &self.grid
    }

    pub fn magnitude(&self) -> &[T] {
        &self.magnitude
    }

    /// Writes `phi_deg,theta_deg,magnitude` rows in grid order.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["phi_deg", "theta_deg", "magnitude"])?;
        for (i, m) in self.magnitude.iter().enumerate() {
            let (phi, theta) = self.grid.direction(i);
            w.write_record([phi.to_string(), theta.to_string(), m.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<pattern csv>", e))?;
        Ok(())
    }
}

/// Samples `|F|` over `grid` by direct summation.
pub fn radiation_pattern<T: Real>(
    pv: &PhaseVector<T>,
    geom: &ArrayGeometry<T>,
    grid: &Arc<DirectionGrid<T>>,
) -> Result<RadiationPattern<T>> {
    pv.check_len(geom.len())?;
    let magnitude = grid
        .directions()
        .map(|(phi, theta)| array_field(pv, geom, phi, theta).map(|f| f.norm()))
        .collect::<Result<Vec<_>>>()?;
    RadiationPattern::new(grid.clone(), magnitude)
}

/// Which field a beam is judged by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeakField {
    /// Element factor times array factor.
    #[default]
    Total,
    /// Array factor alone. The element pattern is common to every weight
    /// set and pulls the total-field maximum toward its own broadside.
    ArrayFactor,
}

impl std::str::FromStr for PeakField {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "total" => Ok(PeakField::Total),
            "array-factor" => Ok(PeakField::ArrayFactor),
            other => Err(Error::InvalidArgument(format!("unknown peak field `{other}`"))),
        }
    }
}

/// Precomputed steering phasors for one geometry on one grid, so that many
/// weight vectors can be synthesized with dense matrix products.
#[derive(Debug, Clone)]
pub struct PatternSynth<T> {
    grid: Arc<DirectionGrid<T>>,
    /// `[Re S | Im S]`, `D x 2N`.
    steer: Array2<T>,
    element: Array1<T>,
    n: usize,
}

impl<T: Real> PatternSynth<T> {
    pub fn new(geom: &ArrayGeometry<T>, grid: Arc<DirectionGrid<T>>) -> Self {
        Self::with_field(geom, grid, PeakField::Total)
    }

    /// Like [`PatternSynth::new`], optionally dropping the element factor.
    pub fn with_field(geom: &ArrayGeometry<T>, grid: Arc<DirectionGrid<T>>, field: PeakField) -> Self {
        let n = geom.len();
        let d = grid.len();
        let mut steer = Array2::zeros((d, 2 * n));
        let mut element = Array1::zeros(d);
        let two_pi = T::TAU();
        for (i, (phi, theta)) in grid.directions().enumerate() {
            let u = unit_vector(phi, theta);
            element[i] = match field {
                PeakField::Total => geom.element().factor(phi, theta),
                PeakField::ArrayFactor => T::one(),
            };
            for (k, p) in geom.positions().iter().enumerate() {
                let (s, c) = (two_pi * (p[0] * u[0] + p[1] * u[1] + p[2] * u[2])).sin_cos();
                steer[[i, k]] = c;
                steer[[i, n + k]] = s;
            }
        }
        Self {
            grid,
            steer,
            element,
            n,
        }
    }

    pub fn grid(&self) -> &Arc<DirectionGrid<T>> {
        &self.grid
    }

    pub fn elements(&self) -> usize {
        self.n
    }

    /// Magnitudes for a batch of weight vectors, one column per vector.
    ///
    /// One real product `[Re S | Im S] · [[Re W, Im W], [-Im W, Re W]]`
    /// yields `[Re F | Im F]`.
    pub fn magnitudes(&self, batch: &[&PhaseVector<T>]) -> Result<Array2<T>> {
        let (n, b) = (self.n, batch.len());
        let mut w = Array2::zeros((2 * n, 2 * b));
        for (j, pv) in batch.iter().enumerate() {
            pv.check_len(n)?;
            for (k, p) in pv.as_slice().iter().enumerate() {
                let (s, c) = p.to_radians().sin_cos();
                w[[k, j]] = c;
                w[[n + k, b + j]] = c;
                w[[k, b + j]] = s;
                w[[n + k, j]] = -s;
            }
        }
        let mut f = Array2::zeros((self.grid.len(), 2 * b));
        general_mat_mul(T::one(), &self.steer, &w, T::zero(), &mut f);
        let mut mag = Array2::zeros((self.grid.len(), b));
        Zip::from(mag.rows_mut())
            .and(f.rows())
            .and(&self.element)
            .for_each(|mut out, row, &ef| {
                let (re, im) = row.split_at(Axis(0), b);
                Zip::from(&mut out)
                    .and(&re)
                    .and(&im)
                    .for_each(|m, &re, &im| *m = ef * (re * re + im * im).sqrt());
            });
        Ok(mag)
    }

    pub fn pattern(&self, pv: &PhaseVector<T>) -> Result<RadiationPattern<T>> {
        let m = self.magnitudes(&[pv])?;
        Ok(RadiationPattern {
            grid: self.grid.clone(),
            magnitude: m.column(0).to_vec(),
        })
    }

    pub fn patterns(&self, batch: &[&PhaseVector<T>]) -> Result<Vec<RadiationPattern<T>>> {
        let m = self.magnitudes(batch)?;
        Ok(m.columns()
            .into_iter()
            .map(|c| RadiationPattern {
                grid: self.grid.clone(),
                magnitude: c.to_vec(),
            })
            .collect())
    }
}

/// Directivity per grid sample: `4π |F_i|² / Σ_k |F_k|² w_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Directivity<T> {
    linear: Vec<T>,
}

impl<T: Real> Directivity<T> {
    pub fn linear(&self) -> &[T] {
        &self.linear
    }

    pub fn dbi(&self) -> Vec<T> {
        self.linear.iter().map(|d| T::lit(10.0) * d.log10()).collect()
    }

    /// Largest value and its grid index (first on ties).
    pub fn peak(&self) -> (usize, T) {
        self.linear
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
    }
}

pub fn directivity<T: Real>(p: &RadiationPattern<T>) -> Result<Directivity<T>> {
    let w = p.grid.solid_angle_weights();
    let radiated: T = p.magnitude.iter().zip(w).map(|(&f, &w)| f * f * w).sum();
    if !(radiated > T::zero()) {
        return Err(Error::ZeroPattern);
    }
    let scale = T::lit(4.0) * T::PI() / radiated;
    Ok(Directivity {
        linear: p.magnitude.iter().map(|&f| f * f * scale).collect(),
    })
}
