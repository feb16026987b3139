//! Periodic grid, complex grid functions, and the algebraic weights `⟨x⟩^p`.
//!
//! The box is `[-L, L)^N` sampled with `M` points per axis (spacing
//! `h = 2L/M`), and the per-axis wavenumbers are `k_j = π j / L` with `j` in
//! the standard FFT ordering `0, 1, …, M/2-1, -M/2, …, -1`. Fields are
//! value-semantic snapshots: every operation takes inputs by reference and
//! returns a fresh output.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::{Error, Result};

/// Coordinate frame a field lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    /// Physical frame, time `t ≥ 0`.
    U,
    /// Transformed frame, time `τ ∈ [0, 1/b)`.
    V,
}

impl Frame {
    pub fn name(self) -> &'static str {
        match self {
            Frame::U => "u",
            Frame::V => "v",
        }
    }
}

/// Specification of the periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    dimension: usize,
    half_width: f64,
    points_per_axis: usize,
}

impl GridSpec {
    /// Build a grid. `dimension ∈ {1,2,3}`, `half_width > 0`,
    /// `points_per_axis` positive and even.
    pub fn new(dimension: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        if !(1..=3).contains(&dimension) {
            return Err(Error::InvalidParameter(format!(
                "dimension must be 1, 2 or 3, got {dimension}"
            )));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "half_width must be positive and finite, got {half_width}"
            )));
        }
        if points_per_axis == 0 || points_per_axis % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "points_per_axis must be positive and even, got {points_per_axis}"
            )));
        }
        Ok(Self { dimension, half_width, points_per_axis })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Grid spacing `h = 2L/M`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    /// Total number of points `M^N`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of index `i` along one axis: `x_i = -L + i h`.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Per-axis coordinates.
    pub fn axis_coords(&self) -> Vec<f64> {
        (0..self.points_per_axis).map(|i| self.coord(i)).collect()
    }

    /// Per-axis wavenumbers in FFT ordering, `k_j = π j / L` with the Nyquist
    /// index carrying `j = -M/2`.
    pub fn axis_wavenumbers(&self) -> Vec<f64> {
        let m = self.points_per_axis;
        let base = std::f64::consts::PI / self.half_width;
        (0..m)
            .map(|i| {
                let j = if i < m / 2 { i as i64 } else { i as i64 - m as i64 };
                base * j as f64
            })
            .collect()
    }

    /// Decompose a flat (row-major) index into per-axis indices.
    pub fn unflatten(&self, mut flat: usize) -> [usize; 3] {
        let m = self.points_per_axis;
        let mut idx = [0usize; 3];
        for d in (0..self.dimension).rev() {
            idx[d] = flat % m;
            flat /= m;
        }
        idx
    }

    /// `|x|²` at a flat index.
    pub fn radius_sq(&self, flat: usize) -> f64 {
        let idx = self.unflatten(flat);
        (0..self.dimension).map(|d| self.coord(idx[d]).powi(2)).sum()
    }

    /// Samples of `|x|²` over the whole grid.
    pub fn radius_sq_field(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.radius_sq(i)).collect()
    }
}

/// Samples of the weight `⟨x⟩^p = (1 + |x|²)^{p/2}` on `grid`.
pub fn weight_field(grid: &GridSpec, p: f64) -> Vec<f64> {
    (0..grid.len()).map(|i| (1.0 + grid.radius_sq(i)).powf(p / 2.0)).collect()
}

/// A complex grid function tagged with its frame and time stamp.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<GridSpec>,
    values: Vec<Complex64>,
    frame: Frame,
    time: f64,
}

impl Field {
    pub fn new(grid: Arc<GridSpec>, values: Vec<Complex64>, frame: Frame, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "field has {} values, grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values, frame, time })
    }

    /// Zero field.
    pub fn zeros(grid: Arc<GridSpec>, frame: Frame, time: f64) -> Self {
        let n = grid.len();
        Self { grid, values: vec![Complex64::default(); n], frame, time }
    }

    /// Sample a function of the coordinates.
    pub fn from_fn(
        grid: Arc<GridSpec>,
        frame: Frame,
        time: f64,
        mut f: impl FnMut(&[f64]) -> Complex64,
    ) -> Self {
        let n = grid.len();
        let dim = grid.dimension();
        let mut values = Vec::with_capacity(n);
        let mut x = [0.0f64; 3];
        for flat in 0..n {
            let idx = grid.unflatten(flat);
            for d in 0..dim {
                x[d] = grid.coord(idx[d]);
            }
            values.push(f(&x[..dim]));
        }
        Self { grid, values, frame, time }
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn set_frame(&mut self, frame: Frame) {
        self.frame = frame;
    }

    /// Reject fields containing NaN or Inf, naming the first bad index.
    pub fn check_finite(&self, context: &str) -> Result<()> {
        for (i, z) in self.values.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { index: i, context: context.to_string() });
            }
        }
        Ok(())
    }

    pub fn expect_frame(&self, frame: Frame) -> Result<()> {
        if self.frame != frame {
            return Err(Error::WrongFrame { expected: frame.name(), got: self.frame.name() });
        }
        Ok(())
    }

    /// Grid L² norm: `(h^N Σ |f_i|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        let h = self.grid.spacing().powi(self.grid.dimension() as i32);
        (self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * h).sqrt()
    }

    /// Grid sup norm.
    pub fn linf_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Relative L² distance to another field on the same grid.
    pub fn rel_l2_distance(&self, other: &Field) -> f64 {
        assert_eq!(self.grid.len(), other.grid.len(), "fields on different grids");
        let num: f64 =
            self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        let den: f64 = other.values.iter().map(|z| z.norm_sqr()).sum();
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }

    /// Pointwise scale by a complex constant.
    pub fn scaled(&self, c: Complex64) -> Field {
        let mut out = self.clone();
        for z in out.values.iter_mut() {
            *z *= c;
        }
        out
    }
}

/// How the initial profile is eased near the box boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaperMode {
    /// No modification.
    None,
    /// Cosine-blend toward the profile's own |x| = L value over the outer
    /// band, exactly constant over the last few percent; keeps the weighted
    /// lower bound positive and the periodic extension smooth at the seam.
    BlendEdge,
    /// Cosine-blend to zero; for localized diagnostics where the lower-bound
    /// hypothesis is not used.
    Zero,
}

/// Cosine ramp: 1 at `r ≤ r0·L`, 0 at `r ≥ r1·L`.
fn ramp(r: f64, l: f64, r0: f64, r1: f64) -> f64 {
    let a = r0 * l;
    let b = r1 * l;
    if r <= a {
        1.0
    } else if r >= b {
        0.0
    } else {
        let xi = (r - a) / (b - a);
        (0.5 * (1.0 + (std::f64::consts::PI * xi).cos())).powi(2)
    }
}

/// Apply a radial taper to a sampled profile. `edge_value` is the blend
/// target for [`TaperMode::BlendEdge`] (the profile's value at |x| = L).
pub fn taper_field(field: &mut Field, mode: TaperMode, edge_value: Complex64) {
    if mode == TaperMode::None {
        return;
    }
    let grid = field.grid().clone();
    let l = grid.half_width();
    // Ramp over [0.90 L, 0.96 L]; exactly flat beyond, so the wrap at the
    // seam sees a constant.
    let (r0, r1) = (0.90, 0.96);
    let target = match mode {
        TaperMode::Zero => Complex64::default(),
        _ => edge_value,
    };
    for (i, z) in field.values_mut().iter_mut().enumerate() {
        let r = grid.radius_sq(i).sqrt();
        let s = ramp(r, l, r0, r1);
        *z = *z * s + target * (1.0 - s);
    }
}
