//! Discretized functional objects on `[0, 1]`.
//!
//! Curves are stored as raw evaluations on a shared [`Grid`]. Integrals are
//! computed with the grid's quadrature weights (trapezoidal by default), so the
//! inner product is `<f, g> = sum_k w_k f(t_k) g(t_k)`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Two grids are considered equal when their points agree to this tolerance.
pub const GRID_EQ_TOL: f64 = 1e-14;

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Ascending evaluation points in `[0, 1]` with positive quadrature weights
/// summing to one.
#[derive(Debug, Clone)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Grid with trapezoidal weights. The points must span `[0, 1]` so that the
    /// weights integrate the constant one exactly.
    pub fn trapezoid(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid("need at least two points".into()));
        }
        let n = points.len();
        let mut weights = vec![0.0; n];
        for k in 0..n - 1 {
            let h = points[k + 1] - points[k];
            weights[k] += 0.5 * h;
            weights[k + 1] += 0.5 * h;
        }
        Self::with_weights(points, weights)
    }

    /// `n` equispaced points `k / (n - 1)`, trapezoidal weights.
    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid("need at least two points".into()));
        }
        let h = 1.0 / (n - 1) as f64;
        let points = (0..n).map(|k| k as f64 * h).collect();
        Self::trapezoid(points)
    }

    pub fn with_weights(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidGrid(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if points.is_empty() {
            return Err(Error::InvalidGrid("empty grid".into()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidGrid("non-finite grid point".into()));
        }
        if points[0] < 0.0 || points[points.len() - 1] > 1.0 {
            return Err(Error::InvalidGrid("points must lie in [0, 1]".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("points must be strictly increasing".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidGrid("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidGrid(format!(
                "weights sum to {total}, expected 1 (does the grid span [0, 1]?)"
            )));
        }
        Ok(Self { points, weights })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Quadrature of `f` over `[0, 1]`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Quadrature inner product of two evaluation vectors.
    pub fn dot(&self, f: &[f64], g: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        debug_assert_eq!(g.len(), self.len());
        self.weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    /// Pointwise equality within [`GRID_EQ_TOL`].
    pub fn same_as(&self, other: &Grid) -> bool {
        std::ptr::eq(self, other)
            || (self.len() == other.len()
                && self
                    .points
                    .iter()
                    .zip(&other.points)
                    .all(|(a, b)| (a - b).abs() <= GRID_EQ_TOL))
    }

    /// Evaluate a function at every grid point.
    pub fn evaluate(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.points.iter().map(|&t| f(t)).collect()
    }
}

/// A single curve evaluated on a grid.
#[derive(Debug, Clone)]
pub struct Curve {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Curve {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidSample(format!(
                "curve has {} values but grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSample("non-finite curve value".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.evaluate(f);
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        self.grid.dot(&self.values, &self.values).sqrt()
    }
}

/// `<f, g> = ∫ f(t) g(t) dt` under the shared grid's quadrature.
pub fn inner_product(f: &Curve, g: &Curve) -> Result<f64> {
    if !f.grid.same_as(&g.grid) {
        return Err(Error::GridMismatch);
    }
    Ok(f.grid.dot(&f.values, &g.values))
}

/// `N` curves on a common grid, stored row-major (row `i` is curve `X_i`).
#[derive(Debug, Clone)]
pub struct FunctionalSample {
    grid: Arc<Grid>,
    n_curves: usize,
    values: Vec<f64>,
}

impl FunctionalSample {
    pub fn from_rows(grid: Arc<Grid>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let t = grid.len();
        let n = rows.len();
        let mut values = Vec::with_capacity(n * t);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != t {
                return Err(Error::InvalidSample(format!(
                    "curve {i} has {} values but grid has {t} points",
                    row.len()
                )));
            }
            values.extend(row);
        }
        Self::from_flat(grid, n, values)
    }

    /// Row-major `n_curves × grid.len()` values.
    pub fn from_flat(grid: Arc<Grid>, n_curves: usize, values: Vec<f64>) -> Result<Self> {
        if n_curves < 2 {
            return Err(Error::InsufficientSample {
                needed: 2,
                got: n_curves,
            });
        }
        if values.len() != n_curves * grid.len() {
            return Err(Error::InvalidSample(format!(
                "expected {} values, got {}",
                n_curves * grid.len(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSample(format!(
                "non-finite value in curve {}",
                pos / grid.len()
            )));
        }
        Ok(Self {
            grid,
            n_curves,
            values,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn n_curves(&self) -> usize {
        self.n_curves
    }

    pub fn grid_len(&self) -> usize {
        self.grid.len()
    }

    pub fn curve(&self, i: usize) -> &[f64] {
        let t = self.grid.len();
        &self.values[i * t..(i + 1) * t]
    }

    pub fn curves(&self) -> impl DoubleEndedIterator<Item = &[f64]> + ExactSizeIterator + '_ {
        self.values.chunks_exact(self.grid.len())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Curves `range.start..range.end` as a new sample on the same grid.
    pub fn subsample(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.end > self.n_curves || range.start > range.end {
            return Err(Error::InvalidSample(format!(
                "range {range:?} out of bounds for {} curves",
                self.n_curves
            )));
        }
        let t = self.grid.len();
        Self::from_flat(
            self.grid.clone(),
            range.len(),
            self.values[range.start * t..range.end * t].to_vec(),
        )
    }

    /// Same curves in reverse order.
    pub fn reversed(&self) -> Self {
        let values = self.curves().rev().flatten().copied().collect();
        Self {
            grid: self.grid.clone(),
            n_curves: self.n_curves,
            values,
        }
    }

    /// Apply `f(curve index, grid point, value)` to every entry.
    pub fn map_values(&self, f: impl Fn(usize, f64, f64) -> f64) -> Result<Self> {
        let t = self.grid.len();
        let points = self.grid.points();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, &v)| f(idx / t, points[idx % t], v))
            .collect();
        Self::from_flat(self.grid.clone(), self.n_curves, values)
    }

    /// Row-major values with the sample mean subtracted from every curve.
    pub fn centered_values(&self) -> Vec<f64> {
        let mean = mean_values(self);
        let mut out = self.values.clone();
        for row in out.chunks_exact_mut(self.grid.len()) {
            row.iter_mut().zip(&mean).for_each(|(v, m)| *v -= m);
        }
        out
    }
}

fn mean_values(sample: &FunctionalSample) -> Vec<f64> {
    let t = sample.grid_len();
    let mut mean = vec![0.0; t];
    for row in sample.curves() {
        mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
    }
    let n = sample.n_curves() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

/// Pointwise sample mean `X̄_N(t)`.
pub fn sample_mean(sample: &FunctionalSample) -> Curve {
    Curve {
        grid: sample.grid.clone(),
        values: mean_values(sample),
    }
}

/// A covariance kernel sampled on `grid × grid`.
#[derive(Debug, Clone)]
pub struct CovarianceSurface {
    grid: Arc<Grid>,
    values: DMatrix<f64>,
}

impl CovarianceSurface {
    pub fn new(grid: Arc<Grid>, values: DMatrix<f64>) -> Result<Self> {
        let t = grid.len();
        if values.nrows() != t || values.ncols() != t {
            return Err(Error::InvalidSample(format!(
                "surface is {}x{} but grid has {t} points",
                values.nrows(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSample("non-finite covariance value".into()));
        }
        let scale = values.amax().max(f64::MIN_POSITIVE);
        for i in 0..t {
            if values[(i, i)] < -1e-10 * scale {
                return Err(Error::InvalidSample(format!(
                    "negative diagonal entry {} at {i}",
                    values[(i, i)]
                )));
            }
            for j in 0..i {
                if (values[(i, j)] - values[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::InvalidSample(format!(
                        "surface is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { grid, values })
    }

    /// Sample a kernel `k(s, t)` on the grid.
    pub fn from_kernel(grid: Arc<Grid>, kernel: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let p = grid.points();
        let values = DMatrix::from_fn(p.len(), p.len(), |i, j| kernel(p[i], p[j]));
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// `∫ c(t, t) dt` under the grid quadrature.
    pub fn trace(&self) -> f64 {
        let w = self.grid.weights();
        (0..w.len()).map(|k| w[k] * self.values[(k, k)]).sum()
    }

    /// `self + weight · other` on a shared grid.
    pub fn add_scaled(&self, other: &CovarianceSurface, weight: f64) -> Result<Self> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid.clone(),
            values: &self.values + &other.values * weight,
        })
    }
}

/// `ĉ_N(t, s) = N⁻¹ Σ (X_i(t) − X̄_N(t))(X_i(s) − X̄_N(s))`, divisor `N`.
pub fn empirical_covariance(sample: &FunctionalSample) -> Result<CovarianceSurface> {
    let n = sample.n_curves();
    if n < 2 {
        return Err(Error::InsufficientSample { needed: 2, got: n });
    }
    let t = sample.grid_len();
    let centered = DMatrix::from_row_slice(n, t, &sample.centered_values());
    let mut values = centered.transpose() * &centered;
    values /= n as f64;
    // Exact symmetry; the product is symmetric only up to rounding.
    for i in 0..t {
        for j in 0..i {
            let v = 0.5 * (values[(i, j)] + values[(j, i)]);
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    Ok(CovarianceSurface {
        grid: sample.grid.clone(),
        values,
    })
}
