use std::sync::Arc;

use ndarray::ArrayView2;

use super::angle::{unit_vector, BeamPointingAngle};
use super::geometry::ArrayGeometry;
use super::grid::DirectionGrid;
use super::pattern::{PatternSynth, PeakField};
use super::phase::PhaseVector;
use crate::error::{Error, Result};
use crate::scalar::{wrap_az, Real};

const BATCH: usize = 64;
/// Refinement window: the fine grid spans one coarse step on each side at a
/// tenth of the coarse step.
const REFINE_DIVISIONS: i32 = 10;

/// Two-stage beam-peak search: a full-sphere coarse grid, then a local
/// grid at a tenth of the coarse step around the coarse winner.
///
/// Values within a relative `1e-9` of the maximum count as ties. Planar
/// arrays radiate symmetrically about their own plane, so mirror-image lobes
/// tie exactly; for arrays with a planar description a tied direction on the
/// front face (see [`Orientation::normal`](super::Orientation::normal)) wins,
/// and otherwise the lowest grid index does.
#[derive(Debug, Clone)]
pub struct PeakFinder<T> {
    geom: ArrayGeometry<T>,
    coarse: PatternSynth<T>,
    coarse_step: f64,
    field: PeakField,
    normal: Option<[T; 3]>,
    /// Whether each coarse grid direction is on the front face.
    coarse_front: Vec<bool>,
}

impl<T: Real> PeakFinder<T> {
    /// Searches the total field `|F|`.
    pub fn new(geom: &ArrayGeometry<T>, coarse_step: f64) -> Result<Self> {
        Self::with_field(geom, coarse_step, PeakField::Total)
    }

    pub fn with_field(geom: &ArrayGeometry<T>, coarse_step: f64, field: PeakField) -> Result<Self> {
        if !(coarse_step.is_finite() && coarse_step > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "coarse step {coarse_step} must be positive"
            )));
        }
        let grid = Arc::new(DirectionGrid::full_sphere(coarse_step)?);
        let normal = geom.planar_spec().map(|s| s.orientation.normal().map(T::lit));
        let coarse_front = grid.directions().map(|(phi, theta)| is_front(normal, phi, theta)).collect();
        Ok(Self {
            geom: geom.clone(),
            coarse: PatternSynth::with_field(geom, grid, field),
            coarse_step,
            field,
            normal,
            coarse_front,
        })
    }

    pub fn coarse_step(&self) -> f64 {
        self.coarse_step
    }

    /// Resolution of the refined search, in degrees.
    pub fn fine_step(&self) -> f64 {
        self.coarse_step / f64::from(REFINE_DIVISIONS)
    }

    pub fn field(&self) -> PeakField {
        self.field
    }

    pub fn geometry(&self) -> &ArrayGeometry<T> {
        &self.geom
    }

    pub fn find(&self, pv: &PhaseVector<T>) -> Result<BeamPointingAngle<T>> {
        Ok(self.find_batch(&[pv])?.remove(0))
    }

    pub fn find_batch(&self, batch: &[&PhaseVector<T>]) -> Result<Vec<BeamPointingAngle<T>>> {
        let mut out = Vec::with_capacity(batch.len());
        for chunk in batch.chunks(BATCH) {
            let mags = self.coarse.magnitudes(chunk)?;
            for (pv, (idx, val)) in chunk.iter().zip(tie_argmax_columns(mags.view(), &self.coarse_front)) {
                out.push(self.refine(pv, idx, val)?);
            }
        }
        Ok(out)
    }

    fn refine(&self, pv: &PhaseVector<T>, idx: usize, coarse_val: T) -> Result<BeamPointingAngle<T>> {
        let (phi_c, theta_c) = self.coarse.grid().direction(idx);
        let (phi_c, theta_c) = (phi_c.as_f64(), theta_c.as_f64());
        let fine = self.fine_step();
        let weights = pv.weights();
        // the coarse winner goes first so it keeps ties against its neighbours
        let mut candidates = Vec::with_capacity(((2 * REFINE_DIVISIONS + 1) as usize).pow(2) + 1);
        candidates.push((T::lit(phi_c), T::lit(theta_c), coarse_val, self.coarse_front[idx]));
        for i in -REFINE_DIVISIONS..=REFINE_DIVISIONS {
            let theta = theta_c + f64::from(i) * fine;
            if !(0.0..=180.0).contains(&theta) {
                continue;
            }
            for j in -REFINE_DIVISIONS..=REFINE_DIVISIONS {
                let phi = phi_c + f64::from(j) * fine;
                let (phi, theta) = (T::lit(phi), T::lit(theta));
                let front = is_front(self.normal, phi, theta);
                candidates.push((phi, theta, self.magnitude(&weights, phi, theta), front));
            }
        }
        let max = candidates.iter().fold(coarse_val, |m, c| m.max(c.2));
        let floor = max * (T::one() - tie_rtol::<T>());
        let c = candidates
            .iter()
            .find(|c| c.2 >= floor && c.3)
            .or_else(|| candidates.iter().find(|c| c.2 >= floor))
            .expect("max is attained");
        let (phi, theta) = (c.0, c.1);
        BeamPointingAngle::new(wrap_az(phi), theta.max(T::zero()).min(T::lit(180.0)))
    }

    fn magnitude(&self, weights: &[num_complex::Complex<T>], phi: T, theta: T) -> T {
        let u = unit_vector(phi, theta);
        let two_pi = T::TAU();
        let (mut re, mut im) = (T::zero(), T::zero());
        for (p, w) in self.geom.positions().iter().zip(weights) {
            let (s, c) = (two_pi * (p[0] * u[0] + p[1] * u[1] + p[2] * u[2])).sin_cos();
            re += w.re * c - w.im * s;
            im += w.re * s + w.im * c;
        }
        let ef = match self.field {
            PeakField::Total => self.geom.element().factor(phi, theta),
            PeakField::ArrayFactor => T::one(),
        };
        ef * re.hypot(im)
    }
}

fn tie_rtol<T: Real>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(64.0))
}

/// Whether `(phi, theta)` lies on the front face; everything does without a
/// face.
fn is_front<T: Real>(normal: Option<[T; 3]>, phi: T, theta: T) -> bool {
    normal.is_none_or(|n| {
        let u = unit_vector(phi, theta);
        u[0] * n[0] + u[1] * n[1] + u[2] * n[2] >= -T::lit(1e-12)
    })
}

/// Per column: the first row within the tie tolerance of the column
/// maximum that is on the front face, else the first such row at all, and
/// its value. Walks the matrix row by row.
fn tie_argmax_columns<T: Real>(m: ArrayView2<'_, T>, front: &[bool]) -> Vec<(usize, T)> {
    let mut max = vec![T::neg_infinity(); m.ncols()];
    for row in m.rows() {
        for (mx, &v) in max.iter_mut().zip(row) {
            *mx = mx.max(v);
        }
    }
    let keep = T::one() - tie_rtol::<T>();
    let floor: Vec<T> = max.iter().map(|&v| v * keep).collect();
    let mut any: Vec<Option<(usize, T)>> = vec![None; m.ncols()];
    let mut facing: Vec<Option<(usize, T)>> = vec![None; m.ncols()];
    let mut remaining = m.ncols();
    for (i, row) in m.rows().into_iter().enumerate() {
        for (((a, f), &fl), &v) in any.iter_mut().zip(facing.iter_mut()).zip(&floor).zip(row) {
            if v >= fl {
                a.get_or_insert((i, v));
                if f.is_none() && front[i] {
                    *f = Some((i, v));
                    remaining -= 1;
                }
            }
        }
        if remaining == 0 {
            break;
        }
    }
    facing
        .into_iter()
        .zip(any)
        .map(|(f, a)| f.or(a).unwrap_or((0, T::zero())))
        .collect()
}

/// Locates the main beam of `pv` with a coarse full-sphere search refined at
/// a tenth of `coarse_step`. Builds a fresh [`PeakFinder`]; reuse one when
/// searching many weight vectors.
pub fn find_peak<T: Real>(
    pv: &PhaseVector<T>,
    geom: &ArrayGeometry<T>,
    coarse_step: f64,
) -> Result<BeamPointingAngle<T>> {
    PeakFinder::new(geom, coarse_step)?.find(pv)
}
