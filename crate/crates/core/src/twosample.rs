//! Two-sample test for equality of mean functions.
//!
//! The mean difference `X̄_N − Ȳ_M` is projected on the eigenfunctions `û_i`
//! of the pooled covariance `ĉ_P = ĉ_N + (N/M) ĉ_M`, and
//! `D̂ = Σ_{i≤d} N ⟨X̄_N − Ȳ_M, û_i⟩² / κ̂_i` is compared with its normal
//! approximation `(2d)^{-1/2}(D̂ − d) ≈ N(0, 1)`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::changepoint::normal_upper_tail;
use crate::curves::{empirical_covariance, sample_mean, CovarianceSurface, FunctionalSample};
use crate::fpca::{eigendecompose_factor, EigenSystem};
use crate::{Error, Result};

/// Eigensystem of the pooled covariance and the ratio `N/M` used to build it.
#[derive(Debug, Clone)]
pub struct PooledEigen {
    pub eigen: EigenSystem,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TwoSampleOutcome {
    pub d: usize,
    pub d_hat: f64,
    pub z: f64,
    pub p_value: f64,
    /// Spacings of the pooled eigenvalues used.
    pub spacings: Vec<f64>,
}

impl TwoSampleOutcome {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value <= alpha
    }
}

fn check_pair(x: &FunctionalSample, y: &FunctionalSample) -> Result<f64> {
    if !x.grid().same_as(y.grid()) {
        return Err(Error::GridMismatch);
    }
    Ok(x.n_curves() as f64 / y.n_curves() as f64)
}

/// `ĉ_N + (N/M) ĉ_M`, each centered at its own sample mean with divisor equal
/// to its sample size.
pub fn pooled_covariance(x: &FunctionalSample, y: &FunctionalSample) -> Result<CovarianceSurface> {
    let ratio = check_pair(x, y)?;
    empirical_covariance(x)?.add_scaled(&empirical_covariance(y)?, ratio)
}

/// FPCA of the pooled covariance with up to `d_max` components.
pub fn pooled_eigen(x: &FunctionalSample, y: &FunctionalSample, d_max: usize) -> Result<PooledEigen> {
    let ratio = check_pair(x, y)?;
    let (n, m, t) = (x.n_curves(), y.n_curves(), x.grid_len());
    // Factor rows: X_c/√N and √N·Y_c/M, so that FᵀF = ĉ_N + (N/M) ĉ_M.
    let mut factor = DMatrix::zeros(n + m, t);
    let sx = (n as f64).sqrt().recip();
    let sy = (n as f64).sqrt() / m as f64;
    for (i, row) in x.centered_values().chunks_exact(t).enumerate() {
        factor.row_mut(i).iter_mut().zip(row).for_each(|(f, v)| *f = sx * v);
    }
    for (i, row) in y.centered_values().chunks_exact(t).enumerate() {
        factor.row_mut(n + i).iter_mut().zip(row).for_each(|(f, v)| *f = sy * v);
    }
    let eigen = eigendecompose_factor(x.grid().clone(), &factor, d_max.min(t))?;
    Ok(PooledEigen { eigen, ratio })
}

/// `D̂` for a given pooled eigensystem.
pub fn two_sample_statistic(
    x: &FunctionalSample,
    y: &FunctionalSample,
    pooled: &PooledEigen,
    d: usize,
) -> Result<f64> {
    check_pair(x, y)?;
    if !x.grid().same_as(pooled.eigen.grid()) {
        return Err(Error::GridMismatch);
    }
    if d == 0 || d > pooled.eigen.retained() {
        return Err(Error::Dimension {
            requested: d,
            retained: pooled.eigen.retained(),
        });
    }
    let grid = x.grid();
    let diff: Vec<f64> = sample_mean(x)
        .values()
        .iter()
        .zip(sample_mean(y).values())
        .map(|(a, b)| a - b)
        .collect();
    let n = x.n_curves() as f64;
    Ok((0..d)
        .map(|i| {
            let proj = grid.dot(&diff, pooled.eigen.eigenfunction(i));
            n * proj * proj / pooled.eigen.eigenvalues()[i]
        })
        .sum())
}

/// Test `H₀: E X = E Y` with `d` pooled components.
pub fn two_sample_test(x: &FunctionalSample, y: &FunctionalSample, d: usize) -> Result<TwoSampleOutcome> {
    let pooled = pooled_eigen(x, y, d.max(1))?;
    let d_hat = two_sample_statistic(x, y, &pooled, d)?;
    let z = (d_hat - d as f64) / (2.0 * d as f64).sqrt();
    Ok(TwoSampleOutcome {
        d,
        d_hat,
        z,
        p_value: normal_upper_tail(z),
        spacings: pooled.eigen.spacings()[..d].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::Grid;
    use crate::rng::stream_rng;
    use crate::simharness::{generate_bm_sample_with, inject_shift, ShiftTarget};
    use std::sync::Arc;

    fn bm(seed: u64, n: usize) -> FunctionalSample {
        generate_bm_sample_with(&mut stream_rng(seed, 0, 0), n, 100).unwrap()
    }

    #[test]
    fn identical_second_sample_adds_nothing() {
        let x = bm(1, 20);
        let g = x.grid().clone();
        let y = FunctionalSample::from_rows(g.clone(), vec![g.evaluate(|t| t * t); 5]).unwrap();
        let p = pooled_covariance(&x, &y).unwrap();
        let c = empirical_covariance(&x).unwrap();
        assert!((p.values() - c.values()).amax() < 1e-15);
    }

    #[test]
    fn same_dataset_doubles_covariance() {
        let x = bm(2, 20);
        let p = pooled_covariance(&x, &x).unwrap();
        let c = empirical_covariance(&x).unwrap();
        assert!((p.values() - c.values() * 2.0).amax() < 1e-14);
    }

    #[test]
    fn pooled_bm_covariance_is_twice_min() {
        let x = generate_bm_sample_with(&mut stream_rng(3, 0, 0), 2000, 50).unwrap();
        let y = generate_bm_sample_with(&mut stream_rng(3, 0, 1), 2000, 50).unwrap();
        let y = FunctionalSample::from_flat(x.grid().clone(), 2000, y.into_values()).unwrap();
        let p = pooled_covariance(&x, &y).unwrap();
        let pts = x.grid().points();
        let err = (0..pts.len())
            .flat_map(|i| (0..pts.len()).map(move |j| (i, j)))
            .map(|(i, j)| (p.at(i, j) - 2.0 * pts[i].min(pts[j])).abs())
            .fold(0.0, f64::max);
        assert!(err < 0.2, "{err}");
    }

    #[test]
    fn factor_route_matches_pooled_surface() {
        let x = bm(4, 15);
        let y = FunctionalSample::from_flat(x.grid().clone(), 9, bm(5, 9).into_values()).unwrap();
        let pooled = pooled_eigen(&x, &y, 4).unwrap();
        let dense = crate::fpca::eigendecompose(&pooled_covariance(&x, &y).unwrap(), 4).unwrap();
        for j in 0..4 {
            let (a, b) = (pooled.eigen.eigenvalues()[j], dense.eigenvalues()[j]);
            assert!((a - b).abs() < 1e-10 * b.max(1e-3), "{a} {b}");
        }
        assert!((pooled.ratio - 15.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn identical_datasets_give_zero_statistic() {
        let x = bm(6, 40);
        let out = two_sample_test(&x, &x, 5).unwrap();
        assert_eq!(out.d_hat, 0.0);
        assert!((out.z + 2.5f64.sqrt()).abs() < 1e-15);
        assert!((out.p_value - 0.94308).abs() < 1e-4, "{}", out.p_value);
    }

    #[test]
    fn swapping_equal_size_samples_preserves_statistic() {
        let x = bm(7, 30);
        let y = FunctionalSample::from_flat(x.grid().clone(), 30, bm(8, 30).into_values()).unwrap();
        let a = two_sample_test(&x, &y, 3).unwrap();
        let b = two_sample_test(&y, &x, 3).unwrap();
        assert!((a.d_hat - b.d_hat).abs() < 1e-9 * a.d_hat.max(1.0));
    }

    #[test]
    fn statistic_is_convex_quadratic_in_shift() {
        let x = bm(9, 30);
        let y0 = FunctionalSample::from_flat(x.grid().clone(), 30, bm(10, 30).into_values()).unwrap();
        let pooled = pooled_eigen(&x, &y0, 3).unwrap();
        let d = |a: f64| {
            let y = inject_shift(&y0, a, ShiftTarget::All).unwrap();
            two_sample_statistic(&x, &y, &pooled, 3).unwrap()
        };
        let (d0, d1, d2) = (d(0.0), d(1.0), d(2.0));
        // Second difference = 2 × leading coefficient.
        assert!(d2 - 2.0 * d1 + d0 > 0.0);
        let d3 = d(3.0);
        assert!(((d3 - 3.0 * d2 + 3.0 * d1 - d0) / d0.max(1.0)).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        let x = bm(11, 10);
        let other = Arc::new(Grid::uniform(50).unwrap());
        let y = FunctionalSample::from_rows(other.clone(), vec![other.evaluate(|t| t); 3]).unwrap();
        assert!(matches!(two_sample_test(&x, &y, 2), Err(Error::GridMismatch)));
        let g = x.grid().clone();
        let flat = FunctionalSample::from_rows(g.clone(), vec![g.evaluate(|t| t); 4]).unwrap();
        assert!(matches!(two_sample_test(&flat, &flat, 2), Err(Error::Dimension { .. })));
    }
}
