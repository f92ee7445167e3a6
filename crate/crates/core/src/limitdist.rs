//! Simulation of the limit law of `∫∫ Γ²(u, x) du dx`.
//!
//! Two independent samplers are provided:
//!
//! - the double eigen-series `Σ_{k,ℓ ≤ K} λ_k ν_ℓ N²_{k,ℓ}`, where
//!   `λ_k = (π(k − 1/2))^{-2}` are the Wiener-process eigenvalues and `ν_ℓ`
//!   are the eigenvalues of the integral operator with kernel
//!   `2(min(s, t) − st)²`, computed here by the Nyström method;
//! - a direct simulation of `Γ(u, x) = √2 (1 − x)² W(u, x² / (1 − x)²)` from a
//!   Brownian sheet `W` on a product grid.
//!
//! Also here: Monte Carlo moments of `sup_x B²(x)` for a Brownian bridge `B`.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::curves::{CovarianceSurface, Grid};
use crate::fpca::operator_spectrum;
use crate::report::fmt_float;
use crate::rng::{domain, stream_rng};
use crate::{Error, Result};

/// Truncation level of the double series.
pub const DEFAULT_TRUNCATION: usize = 49;
/// Nyström grid size used for the bridge-kernel eigenvalues.
pub const DEFAULT_NYSTROM_POINTS: usize = 1000;
/// Significance levels reported in critical-value tables.
pub const STANDARD_ALPHAS: [f64; 3] = [0.01, 0.05, 0.10];

/// `λ_k = (π(k − 1/2))^{-2}` for `k = 1..=k_max`.
pub fn wiener_eigenvalues(k_max: usize) -> Vec<f64> {
    (1..=k_max)
        .map(|k| 1.0 / (PI * (k as f64 - 0.5)).powi(2))
        .collect()
}

/// The kernel `2(min(s, t) − st)²`, covariance of the squared Brownian bridge.
pub fn bridge_sq_kernel(s: f64, t: f64) -> f64 {
    let c = s.min(t) - s * t;
    2.0 * c * c
}

/// All Nyström eigenvalues of the bridge-square kernel on a uniform grid of
/// `nystrom_points` points with trapezoidal weights, descending.
pub fn bridge_sq_kernel_spectrum(nystrom_points: usize) -> Result<Vec<f64>> {
    if nystrom_points < 2 {
        return Err(Error::Resolution("need at least two Nyström points".into()));
    }
    let grid = Arc::new(Grid::uniform(nystrom_points)?);
    let surface = CovarianceSurface::from_kernel(grid, bridge_sq_kernel)?;
    Ok(operator_spectrum(&surface))
}

/// Leading `k_max` eigenvalues `ν_ℓ` of the bridge-square kernel.
pub fn bridge_sq_kernel_eigenvalues(k_max: usize, nystrom_points: usize) -> Result<Vec<f64>> {
    if k_max == 0 {
        return Err(Error::Configuration("truncation must be at least 1".into()));
    }
    if nystrom_points < 4 * k_max {
        return Err(Error::Resolution(format!(
            "{nystrom_points} Nyström points cannot resolve {k_max} eigenvalues (need at least {})",
            4 * k_max
        )));
    }
    let mut spectrum = bridge_sq_kernel_spectrum(nystrom_points)?;
    spectrum.truncate(k_max);
    Ok(spectrum)
}

/// Type-7 quantile of sorted data: linear interpolation at `(n − 1) p`.
pub fn type7_quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Two-sample Kolmogorov–Smirnov distance `sup |F_a − F_b|`.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut best: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}

pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Simulated limit law of the Cramér–von-Mises functional.
#[derive(Debug, Clone, Serialize)]
pub struct LimitLaw {
    truncation: usize,
    nystrom_points: usize,
    wiener_eigs: Vec<f64>,
    bridge_sq_eigs: Vec<f64>,
    reps: usize,
    seed: u64,
    #[serde(skip)]
    samples: Vec<f64>,
}

impl LimitLaw {
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn nystrom_points(&self) -> usize {
        self.nystrom_points
    }

    pub fn wiener_eigs(&self) -> &[f64] {
        &self.wiener_eigs
    }

    pub fn bridge_sq_eigs(&self) -> &[f64] {
        &self.bridge_sq_eigs
    }

    pub fn reps(&self) -> usize {
        self.reps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Simulated replicate values, ascending.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Upper `alpha` critical value (type-7 quantile at `1 − alpha`).
    pub fn critical_value(&self, alpha: f64) -> f64 {
        type7_quantile(&self.samples, 1.0 - alpha)
    }

    /// `(alpha, critical value)` at the standard levels.
    pub fn critical_values(&self) -> Vec<(f64, f64)> {
        STANDARD_ALPHAS
            .iter()
            .map(|&a| (a, self.critical_value(a)))
            .collect()
    }

    /// Smoothed upper-tail p-value `(1 + #{samples > statistic}) / (1 + reps)`.
    pub fn p_value(&self, statistic: f64) -> f64 {
        let at_or_below = self.samples.partition_point(|&x| x <= statistic);
        let exceed = self.samples.len() - at_or_below;
        (1 + exceed) as f64 / (1 + self.samples.len()) as f64
    }

    pub fn mean(&self) -> f64 {
        mean_and_se(&self.samples).0
    }

    pub fn standard_error(&self) -> f64 {
        mean_and_se(&self.samples).1
    }

    /// Exact expectation of the truncated series, `Σ λ_k · Σ ν_ℓ`.
    pub fn expected_mean(&self) -> f64 {
        self.wiener_eigs.iter().sum::<f64>() * self.bridge_sq_eigs.iter().sum::<f64>()
    }

    /// Critical-value table with columns `alpha, critical_value, reps, K, seed`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["alpha", "critical_value", "reps", "K", "seed"])?;
        for (alpha, cv) in self.critical_values() {
            w.write_record([
                fmt_float(alpha),
                fmt_float(cv),
                self.reps.to_string(),
                self.truncation.to_string(),
                self.seed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Simulate `reps` draws of the truncated series with `ν_ℓ` from a
/// [`DEFAULT_NYSTROM_POINTS`]-point Nyström grid (or `4K`, if larger).
pub fn simulate_tld(truncation: usize, reps: usize, seed: u64) -> Result<LimitLaw> {
    let points = DEFAULT_NYSTROM_POINTS.max(4 * truncation);
    simulate_tld_with(truncation, points, reps, seed)
}

pub fn simulate_tld_with(
    truncation: usize,
    nystrom_points: usize,
    reps: usize,
    seed: u64,
) -> Result<LimitLaw> {
    if reps == 0 {
        return Err(Error::Configuration("reps must be at least 1".into()));
    }
    let wiener_eigs = wiener_eigenvalues(truncation);
    let bridge_sq_eigs = bridge_sq_kernel_eigenvalues(truncation, nystrom_points)?;
    let coefs: Vec<f64> = wiener_eigs
        .iter()
        .flat_map(|l| bridge_sq_eigs.iter().map(move |n| l * n))
        .collect();
    let mut samples: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, domain::TLD, r);
            coefs
                .iter()
                .map(|c| {
                    let g: f64 = rng.sample(StandardNormal);
                    c * g * g
                })
                .sum()
        })
        .collect();
    samples.sort_by(f64::total_cmp);
    Ok(LimitLaw {
        truncation,
        nystrom_points,
        wiener_eigs,
        bridge_sq_eigs,
        reps,
        seed,
        samples,
    })
}

/// One realization of `Γ` on the product grid `u_i = i / grid_u`,
/// `x_j = j / grid_x`, returned row-major with `grid_x + 1` columns.
pub fn gamma_field<R: Rng + ?Sized>(grid_u: usize, grid_x: usize, rng: &mut R) -> Vec<f64> {
    let cols = grid_x + 1;
    let x: Vec<f64> = (0..cols).map(|j| j as f64 / grid_x as f64).collect();
    // Time change y = x² / (1 − x)², undefined at x = 1 where Γ vanishes.
    let y: Vec<f64> = x[..grid_x].iter().map(|x| (x / (1.0 - x)).powi(2)).collect();
    let dy_sqrt: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]).sqrt()).collect();
    let scale: Vec<f64> = x.iter().map(|x| 2f64.sqrt() * (1.0 - x).powi(2)).collect();
    let du_sqrt = (1.0 / grid_u as f64).sqrt();

    let mut field = vec![0.0; (grid_u + 1) * cols];
    let mut sheet = vec![0.0; grid_x];
    for i in 1..=grid_u {
        let mut bm = 0.0;
        for j in 1..grid_x {
            let g: f64 = rng.sample(StandardNormal);
            bm += dy_sqrt[j - 1] * g;
            sheet[j] += du_sqrt * bm;
        }
        let row = &mut field[i * cols..(i + 1) * cols];
        for j in 0..grid_x {
            row[j] = scale[j] * sheet[j];
        }
    }
    field
}

/// `∫∫ Γ²` of each of `reps` simulated sheets, trapezoidal in both arguments.
pub fn simulate_gamma_functional(
    grid_u: usize,
    grid_x: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if grid_u < 50 || grid_x < 50 {
        return Err(Error::Resolution(format!(
            "sheet grids must have at least 50 intervals, got {grid_u} x {grid_x}"
        )));
    }
    let trap = |n: usize| -> Vec<f64> {
        let mut w = vec![1.0 / n as f64; n + 1];
        w[0] *= 0.5;
        w[n] *= 0.5;
        w
    };
    let (wu, wx) = (trap(grid_u), trap(grid_x));
    let cols = grid_x + 1;
    Ok((0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, domain::GAMMA_SHEET, r);
            let field = gamma_field(grid_u, grid_x, &mut rng);
            field
                .chunks_exact(cols)
                .zip(&wu)
                .map(|(row, a)| a * row.iter().zip(&wx).map(|(g, b)| b * g * g).sum::<f64>())
                .sum()
        })
        .collect())
}

/// Moments of `sup_x B²(x)` for a standard Brownian bridge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BridgeSupMoments {
    pub mu0: f64,
    pub sigma0: f64,
    pub reps: usize,
    pub grid_size: usize,
}

impl BridgeSupMoments {
    /// Closed form: `sup |B|` is Kolmogorov distributed, so `E sup B² = π²/12`
    /// and `E sup B⁴ = 7π⁴/720`. `reps` and `grid_size` are zero.
    pub fn analytic() -> Self {
        let m2 = PI * PI / 12.0;
        let m4 = 7.0 * PI.powi(4) / 720.0;
        Self {
            mu0: m2,
            sigma0: (m4 - m2 * m2).sqrt(),
            reps: 0,
            grid_size: 0,
        }
    }
}

/// Random-walk Brownian bridge at `k / grid_size`, `k = 0..=grid_size`.
pub fn brownian_bridge_path<R: Rng + ?Sized>(rng: &mut R, grid_size: usize) -> Vec<f64> {
    let sd = (1.0 / grid_size as f64).sqrt();
    let mut path = Vec::with_capacity(grid_size + 1);
    path.push(0.0);
    let mut w = 0.0;
    for _ in 0..grid_size {
        let g: f64 = rng.sample(StandardNormal);
        w += sd * g;
        path.push(w);
    }
    let end = w;
    for (k, v) in path.iter_mut().enumerate() {
        *v -= k as f64 / grid_size as f64 * end;
    }
    path
}

/// Monte Carlo estimates of `μ₀ = E sup B²` and `σ₀ = sd(sup B²)` from
/// `reps` random-walk bridges with `grid_size` increments.
pub fn bridge_sup_moments(reps: usize, grid_size: usize, seed: u64) -> Result<BridgeSupMoments> {
    if reps < 1000 {
        return Err(Error::Configuration(format!(
            "need at least 1000 replications, got {reps}"
        )));
    }
    if grid_size < 500 {
        return Err(Error::Resolution(format!(
            "need at least 500 grid intervals, got {grid_size}"
        )));
    }
    let sups: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, domain::BRIDGE_SUP, r);
            brownian_bridge_path(&mut rng, grid_size)
                .iter()
                .map(|b| b * b)
                .fold(0.0, f64::max)
        })
        .collect();
    let n = reps as f64;
    let mu0 = sups.iter().sum::<f64>() / n;
    let var = sups.iter().map(|s| (s - mu0).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(BridgeSupMoments {
        mu0,
        sigma0: var.sqrt(),
        reps,
        grid_size,
    })
}
