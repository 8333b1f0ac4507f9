//! Uniform 1-D grids and complex-valued fields sampled on them.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Uniform one-dimensional grid: x_j = x0 + j * h.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x0: f64,
    h: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(x0: f64, h: f64, n: usize) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::BadSpacing(h));
        }
        if n < 4 {
            return Err(Error::GridTooSmall(n));
        }
        if !x0.is_finite() {
            return Err(Error::NonFinite("grid origin"));
        }
        Ok(Self { x0, h, n })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.h
    }

    /// Total extent n * h (one period in periodic mode).
    pub fn length(&self) -> f64 {
        self.n as f64 * self.h
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.x(j))
    }

    /// Index range covering the innermost 80% of the grid, used for
    /// interior-only norms that exclude boundary-cascade contamination.
    pub fn interior(&self) -> std::ops::Range<usize> {
        let skip = self.n / 10;
        skip..self.n - skip
    }
}

/// Boundary handling for the discrete fractional derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    /// Wrapped history over one period, acting on the mean-subtracted field.
    Periodic,
    /// Samples left of the domain are frozen at the left-edge value.
    ZeroExtension,
}

/// Complex samples of a field on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid1D,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Grid1D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::GridMismatch);
        }
        let f = Self { grid, values };
        f.check_finite()?;
        Ok(f)
    }

    pub fn constant(grid: Grid1D, value: Complex64) -> Self {
        Self {
            grid,
            values: vec![value; grid.n()],
        }
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self::constant(grid, Complex64::ZERO)
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.points().map(f).collect();
        Self { grid, values }
    }

    pub fn from_real_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
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

    pub fn check_finite(&self) -> Result<()> {
        if self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("grid function"))
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|v| v * s)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// Discrete L2 norm sqrt(h * sum |v|^2).
    pub fn l2_norm(&self) -> f64 {
        (self.grid.h() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// L2 norm restricted to the innermost 80% of the grid.
    pub fn interior_l2_norm(&self) -> f64 {
        let range = self.grid.interior();
        (self.grid.h()
            * self.values[range].iter().map(|v| v.norm_sqr()).sum::<f64>())
        .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn interior_max_abs(&self) -> f64 {
        let range = self.grid.interior();
        self.values[range].iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Max |self - other| over the whole grid.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.values.len() as f64
    }

    /// True if every imaginary part is below `tol` in magnitude.
    pub fn is_real(&self, tol: f64) -> bool {
        self.values.iter().all(|v| v.im.abs() <= tol)
    }

    /// Linear interpolation of the real part at position x (clamped to the domain).
    pub fn interp_real(&self, x: f64) -> f64 {
        let g = self.grid;
        let t = (x - g.x0()) / g.h();
        if t <= 0.0 {
            return self.values[0].re;
        }
        let jmax = (g.n() - 1) as f64;
        if t >= jmax {
            return self.values[g.n() - 1].re;
        }
        let j = t.floor() as usize;
        let frac = t - j as f64;
        self.values[j].re * (1.0 - frac) + self.values[j + 1].re * frac
    }
}
