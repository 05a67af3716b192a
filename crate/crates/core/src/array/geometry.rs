use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Radiation model of a single element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElementModel {
    Isotropic,
    /// Short dipole along z: field magnitude `|sin θ|`.
    SmallDipoleZ,
}

impl ElementModel {
    /// Element field magnitude toward `(az, el)`.
    #[inline]
    pub fn factor<T: Real>(self, _az_deg: T, el_deg: T) -> T {
        match self {
            ElementModel::Isotropic => T::one(),
            ElementModel::SmallDipoleZ => el_deg.to_radians().sin().abs(),
        }
    }
}

impl std::str::FromStr for ElementModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "isotropic" => Ok(ElementModel::Isotropic),
            "small-dipole-z" | "dipole" => Ok(ElementModel::SmallDipoleZ),
            other => Err(Error::InvalidArgument(format!("unknown element model `{other}`"))),
        }
    }
}

/// Plane a rectangular grid is laid out in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Orientation {
    /// Columns along x, rows along y; broadside is the z-axis.
    Xy,
    /// Vertical panel whose broadside points at azimuth `facing_az_deg` in
    /// the horizon plane. Columns run horizontally, rows along z.
    Panel { facing_az_deg: f64 },
}

impl Orientation {
    /// Unit vectors of the column and row axes.
    pub fn axes(self) -> ([f64; 3], [f64; 3]) {
        match self {
            Orientation::Xy => ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
            Orientation::Panel { facing_az_deg } => {
                let (s, c) = facing_az_deg.to_radians().sin_cos();
                ([-s, c, 0.0], [0.0, 0.0, 1.0])
            }
        }
    }

    /// Unit normal of the array's front face: the facing direction of a
    /// panel, +z for the x-y plane.
    pub fn normal(self) -> [f64; 3] {
        let (c, r) = self.axes();
        [c[1] * r[2] - c[2] * r[1], c[2] * r[0] - c[0] * r[2], c[0] * r[1] - c[1] * r[0]]
    }
}

impl std::str::FromStr for Orientation {
    type Err = Error;
    /// `xy` or `panel:<azimuth>`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "xy" {
            return Ok(Orientation::Xy);
        }
        if let Some(az) = s.strip_prefix("panel:") {
            let facing_az_deg: f64 = az
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad panel azimuth `{az}`")))?;
            if !facing_az_deg.is_finite() {
                return Err(Error::InvalidArgument("panel azimuth must be finite".into()));
            }
            return Ok(Orientation::Panel { facing_az_deg });
        }
        Err(Error::InvalidArgument(format!(
            "unknown orientation `{s}` (expected `xy` or `panel:<az>`)"
        )))
    }
}

impl std::fmt::Display for Orientation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Orientation::Xy => write!(f, "xy"),
            Orientation::Panel { facing_az_deg } => write!(f, "panel:{facing_az_deg}"),
        }
    }
}

/// Parameters of a uniform rectangular array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarSpec {
    pub rows: usize,
    pub cols: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
    pub orientation: Orientation,
    pub element: ElementModel,
}

impl Default for PlanarSpec {
    fn default() -> Self {
        Self {
            rows: 8,
            cols: 8,
            spacing: 0.5,
            orientation: Orientation::Panel { facing_az_deg: 60.0 },
            element: ElementModel::SmallDipoleZ,
        }
    }
}

/// Element positions in wavelengths, element 0 at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry<T> {
    positions: Vec<[T; 3]>,
    element: ElementModel,
    planar: Option<PlanarSpec>,
}

impl<T: Real> ArrayGeometry<T> {
    pub fn new(positions: Vec<[T; 3]>, element: ElementModel) -> Result<Self> {
        validate_positions(&positions)?;
        Ok(Self {
            positions,
            element,
            planar: None,
        })
    }

    /// Rectangular grid; element `n = row * cols + col`.
    pub fn planar(spec: PlanarSpec) -> Result<Self> {
        if spec.rows == 0 || spec.cols == 0 {
            return Err(Error::InvalidGeometry("rows and cols must be >= 1".into()));
        }
        if !(spec.spacing.is_finite() && spec.spacing > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "spacing {} must be positive",
                spec.spacing
            )));
        }
        let (col_axis, row_axis) = spec.orientation.axes();
        let mut positions = Vec::with_capacity(spec.rows * spec.cols);
        for r in 0..spec.rows {
            for c in 0..spec.cols {
                let (x, y) = (c as f64 * spec.spacing, r as f64 * spec.spacing);
                positions.push([
                    T::lit(x * col_axis[0] + y * row_axis[0]),
                    T::lit(x * col_axis[1] + y * row_axis[1]),
                    T::lit(x * col_axis[2] + y * row_axis[2]),
                ]);
            }
        }
        validate_positions(&positions)?;
        Ok(Self {
            positions,
            element: spec.element,
            planar: Some(spec),
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[[T; 3]] {
        &self.positions
    }

    pub fn element(&self) -> ElementModel {
        self.element
    }

    pub fn planar_spec(&self) -> Option<&PlanarSpec> {
        self.planar.as_ref()
    }

    /// Shifts every element by `offset`. The result no longer has element 0
    /// at the origin, so it is only reachable from inside the crate.
    #[cfg(test)]
    pub(crate) fn translated(&self, offset: [T; 3]) -> Self {
        Self {
            positions: self
                .positions
                .iter()
                .map(|p| [p[0] + offset[0], p[1] + offset[1], p[2] + offset[2]])
                .collect(),
            element: self.element,
            planar: self.planar,
        }
    }

    /// Human-readable one-line descriptor.
    pub fn descriptor(&self) -> String {
        match &self.planar {
            Some(p) => format!(
                "planar {}x{} spacing {} orientation {} element {}",
                p.rows,
                p.cols,
                p.spacing,
                p.orientation,
                element_name(p.element)
            ),
            None => format!("custom {} elements element {}", self.len(), element_name(self.element)),
        }
    }
}

fn element_name(e: ElementModel) -> &'static str {
    match e {
        ElementModel::Isotropic => "isotropic",
        ElementModel::SmallDipoleZ => "small-dipole-z",
    }
}

fn validate_positions<T: Real>(positions: &[[T; 3]]) -> Result<()> {
    let first = positions
        .first()
        .ok_or_else(|| Error::InvalidGeometry("array needs at least one element".into()))?;
    if first.iter().any(|v| !v.is_zero()) {
        return Err(Error::InvalidGeometry("element 0 must sit at the origin".into()));
    }
    if positions.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidGeometry("non-finite element position".into()));
    }
    let tol = T::lit(1e-12);
    for (i, a) in positions.iter().enumerate() {
        for (j, b) in positions.iter().enumerate().skip(i + 1) {
            let d2: T = (0..3).map(|k| (a[k] - b[k]) * (a[k] - b[k])).sum();
            if d2 <= tol * tol {
                return Err(Error::InvalidGeometry(format!(
                    "elements {i} and {j} coincide"
                )));
            }
        }
    }
    Ok(())
}
