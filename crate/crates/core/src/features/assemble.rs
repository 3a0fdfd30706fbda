//! Feature-vector variants and neighborhood assembly into design matrices.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::flow::VelocityField;
use crate::grid::{Grid, HeightImage, IntensityImage, TemperatureImage};

/// Physical feature sets extracted per pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureVariant {
    /// Raw temperature and height.
    X1,
    /// Window-corrected temperature and height.
    X2,
    /// Increment over the background and scaled height.
    X3,
    /// Velocity magnitude, 8-bit intensity and increment over the background.
    X4,
}

impl FeatureVariant {
    pub const ALL: [FeatureVariant; 4] = [Self::X1, Self::X2, Self::X3, Self::X4];

    pub fn base_dim(&self) -> usize {
        match self {
            Self::X4 => 3,
            _ => 2,
        }
    }

    /// Index of the temperature-like column in the base feature block; used to
    /// orient unsupervised clusters (the warmer cluster is cloud).
    pub fn temperature_column(&self) -> usize {
        match self {
            Self::X4 => 2,
            _ => 0,
        }
    }

    fn names(&self) -> &'static [&'static str] {
        match self {
            Self::X1 => &["T", "H"],
            Self::X2 => &["T'", "H'"],
            Self::X3 => &["dT", "H''"],
            Self::X4 => &["|v|", "I", "dT"],
        }
    }
}

/// Which neighboring pixels contribute feature blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Neighborhood {
    Single,
    FirstOrder,
    SecondOrder,
}

impl Neighborhood {
    pub const ALL: [Neighborhood; 3] = [Self::Single, Self::FirstOrder, Self::SecondOrder];

    /// Row/column offsets, center first, then neighbors in listing order.
    pub fn offsets(&self) -> &'static [(isize, isize)] {
        const OFFSETS: [(isize, isize); 9] = [
            (0, 0),
            (-1, 0),
            (0, -1),
            (0, 1),
            (1, 0),
            (-1, -1),
            (-1, 1),
            (1, -1),
            (1, 1),
        ];
        match self {
            Self::Single => &OFFSETS[..1],
            Self::FirstOrder => &OFFSETS[..5],
            Self::SecondOrder => &OFFSETS[..9],
        }
    }

    pub fn blocks(&self) -> usize {
        self.offsets().len()
    }
}

/// A feature configuration: variant, neighborhood and polynomial expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureSpec {
    pub variant: FeatureVariant,
    pub neighborhood: Neighborhood,
    /// Polynomial expansion order; only the primal discriminative models use it.
    pub expansion_order: u32,
    pub expansion_bias: f64,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        Self::new(FeatureVariant::X3, Neighborhood::FirstOrder)
    }
}

impl FeatureSpec {
    pub fn new(variant: FeatureVariant, neighborhood: Neighborhood) -> Self {
        Self {
            variant,
            neighborhood,
            expansion_order: 1,
            expansion_bias: 1.0,
        }
    }

    pub fn with_expansion(mut self, order: u32, bias: f64) -> Self {
        self.expansion_order = order;
        self.expansion_bias = bias;
        self
    }

    /// Raw (unexpanded) column count.
    pub fn dim(&self) -> usize {
        self.variant.base_dim() * self.neighborhood.blocks()
    }

    /// All twelve variant × neighborhood configurations.
    pub fn grid() -> impl Iterator<Item = FeatureSpec> {
        FeatureVariant::ALL
            .into_iter()
            .flat_map(|v| Neighborhood::ALL.into_iter().map(move |n| FeatureSpec::new(v, n)))
    }
}

/// Every per-pixel field the feature variants can draw from.
#[derive(Debug, Clone, Default)]
pub struct FeatureBundle {
    pub t: Option<TemperatureImage>,
    pub h: Option<HeightImage>,
    pub t_prime: Option<TemperatureImage>,
    pub h_prime: Option<HeightImage>,
    pub delta_t: Option<TemperatureImage>,
    pub h_second: Option<HeightImage>,
    pub intensity: Option<IntensityImage>,
    pub velocity: Option<VelocityField>,
}

impl FeatureBundle {
    fn fields(&self, variant: FeatureVariant) -> Result<Vec<Grid<f64>>> {
        fn req<'a, T>(v: &'a Option<T>, name: &'static str) -> Result<&'a T> {
            v.as_ref().ok_or(Error::MissingField(name))
        }
        Ok(match variant {
            FeatureVariant::X1 => alloc::vec![
                req(&self.t, "T")?.grid().clone(),
                req(&self.h, "H")?.grid().clone(),
            ],
            FeatureVariant::X2 => alloc::vec![
                req(&self.t_prime, "T'")?.grid().clone(),
                req(&self.h_prime, "H'")?.grid().clone(),
            ],
            FeatureVariant::X3 => alloc::vec![
                req(&self.delta_t, "dT")?.grid().clone(),
                req(&self.h_second, "H''")?.grid().clone(),
            ],
            FeatureVariant::X4 => alloc::vec![
                req(&self.velocity, "V")?.magnitude(),
                req(&self.intensity, "I")?.map(|&i| i as f64),
                req(&self.delta_t, "dT")?.grid().clone(),
            ],
        })
    }
}

/// Row-per-pixel design matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    names: Vec<String>,
    /// `(width, height)` of the source frame when rows are pixels in raster order.
    shape: Option<(usize, usize)>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidValue(format!(
                "feature matrix has {} values, expected {rows}x{cols}",
                data.len()
            )));
        }
        let names = (0..cols).map(|j| format!("x{j}")).collect();
        Ok(Self {
            rows,
            cols,
            data,
            names,
            shape: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidValue("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn with_shape(mut self, width: usize, height: usize) -> Result<Self> {
        if width * height != self.rows {
            return Err(Error::ShapeMismatch {
                expected: (width, height),
                actual: (self.rows, 1),
            });
        }
        self.shape = Some((width, height));
        Ok(self)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: names.len(),
            });
        }
        self.names = names;
        Ok(self)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on zero-width rows
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn shape(&self) -> Option<(usize, usize)> {
        self.shape
    }

    /// Rows selected by index, in the given order. Drops the grid shape.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
            names: self.names.clone(),
            shape: None,
        }
    }

    /// Stacks matrices with equal column counts. Drops the grid shape.
    pub fn vstack(parts: &[&FeatureMatrix]) -> Result<Self> {
        let first = parts.first().ok_or(Error::Empty("feature matrices"))?;
        let cols = first.cols;
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            if p.cols != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: p.cols,
                });
            }
            data.extend_from_slice(&p.data);
            rows += p.rows;
        }
        Ok(Self {
            rows,
            cols,
            data,
            names: first.names.clone(),
            shape: None,
        })
    }
}

/// Assembles the per-pixel design matrix for `spec` (without expansion).
/// Border pixels take their missing neighbors by edge replication.
pub fn assemble(bundle: &FeatureBundle, spec: &FeatureSpec) -> Result<FeatureMatrix> {
    let fields = bundle.fields(spec.variant)?;
    let (w, h) = fields[0].shape();
    for f in &fields[1..] {
        fields[0].ensure_same_shape(f)?;
    }
    let offsets = spec.neighborhood.offsets();
    let cols = spec.dim();
    let mut data = Vec::with_capacity(w * h * cols);
    for r in 0..h as isize {
        for c in 0..w as isize {
            for &(dr, dc) in offsets {
                for f in &fields {
                    data.push(*f.get_clamped(r + dr, c + dc));
                }
            }
        }
    }
    let base = spec.variant.names();
    let mut names = Vec::with_capacity(cols);
    for &(dr, dc) in offsets {
        for n in base {
            names.push(if (dr, dc) == (0, 0) {
                String::from(*n)
            } else {
                format!("{n}[{dr:+},{dc:+}]")
            });
        }
    }
    FeatureMatrix::new(w * h, cols, data)?
        .with_names(names)?
        .with_shape(w, h)
}
