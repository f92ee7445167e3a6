//! Functional principal components.
//!
//! The covariance operator `(C v)(t) = ∫ c(t, s) v(s) ds` is discretized with
//! the grid's quadrature weights `W`. Its eigenpairs are obtained from the
//! symmetric matrix `W^{1/2} C W^{1/2}`; eigenvectors are mapped back with
//! `W^{-1/2}` so that eigenfunctions are orthonormal under the quadrature.
//!
//! For a sample of `N` curves on `T` grid points the covariance has rank at
//! most `N`, and when `N < T` the same eigenpairs are recovered from the
//! `N × N` Gram matrix of the centered curves. [`eigendecompose_sample`] uses
//! whichever of the two symmetric problems is smaller.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::curves::{CovarianceSurface, FunctionalSample, Grid};
use crate::linalg::{orient, symmetric_eigen_desc, symmetric_eigenvalues_desc};
use crate::{Error, Result};

/// Components with eigenvalue at or below this are never retained.
pub fn eigenvalue_floor(largest: f64) -> f64 {
    1e-12_f64.max(1e-10 * largest)
}

/// Retained eigenpairs of a covariance operator, eigenvalues non-increasing.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    grid: Arc<Grid>,
    eigenvalues: Vec<f64>,
    eigenfunctions: Vec<Vec<f64>>,
    spacings: Vec<f64>,
    floor: f64,
    requested: usize,
}

impl EigenSystem {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenfunction(&self, j: usize) -> &[f64] {
        &self.eigenfunctions[j]
    }

    pub fn eigenfunctions(&self) -> &[Vec<f64>] {
        &self.eigenfunctions
    }

    /// Empirical spacings `ζ_1 = λ_1 − λ_2`, `ζ_j = min(λ_{j−1} − λ_j, λ_j − λ_{j+1})`.
    pub fn spacings(&self) -> &[f64] {
        &self.spacings
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn retained(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn requested(&self) -> usize {
        self.requested
    }

    /// Set when fewer components than requested cleared the eigenvalue floor.
    pub fn is_truncated(&self) -> bool {
        self.retained() < self.requested
    }

    pub fn warning(&self) -> Option<String> {
        self.is_truncated().then(|| {
            format!(
                "requested {} components but only {} eigenvalues exceed the floor {:e}",
                self.requested,
                self.retained(),
                self.floor
            )
        })
    }

    /// Keep the first `d` components.
    pub fn truncate(&self, d: usize) -> Result<Self> {
        if d > self.retained() {
            return Err(Error::Dimension {
                requested: d,
                retained: self.retained(),
            });
        }
        Ok(Self {
            grid: self.grid.clone(),
            eigenvalues: self.eigenvalues[..d].to_vec(),
            eigenfunctions: self.eigenfunctions[..d].to_vec(),
            spacings: self.spacings[..d].to_vec(),
            floor: self.floor,
            requested: d,
        })
    }

    /// Cumulative fractions `f_k` of retained variance.
    pub fn variance_explained(&self) -> Result<Vec<f64>> {
        variance_explained(self)
    }
}

/// Centered scores `η̂_{i,j} = <X_i − X̄_N, v̂_j>`, stored row-major `N × d`.
#[derive(Debug, Clone)]
pub struct ScoreMatrix {
    n: usize,
    d: usize,
    scores: Vec<f64>,
    eigenvalues: Vec<f64>,
    floor: f64,
}

impl ScoreMatrix {
    /// Build from raw parts; `scores` is row-major `n × eigenvalues.len()`.
    pub fn from_parts(n: usize, scores: Vec<f64>, eigenvalues: Vec<f64>, floor: f64) -> Result<Self> {
        let d = eigenvalues.len();
        if scores.len() != n * d {
            return Err(Error::InvalidSample(format!(
                "expected {} scores, got {}",
                n * d,
                scores.len()
            )));
        }
        Ok(Self {
            n,
            d,
            scores,
            eigenvalues,
            floor,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.scores[i * self.d + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.at(i, j)).collect()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// First `d` columns.
    pub fn leading(&self, d: usize) -> Result<Self> {
        if d > self.d {
            return Err(Error::Dimension {
                requested: d,
                retained: self.d,
            });
        }
        let scores = (0..self.n)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| self.at(i, j))
            .collect();
        Ok(Self {
            n: self.n,
            d,
            scores,
            eigenvalues: self.eigenvalues[..d].to_vec(),
            floor: self.floor,
        })
    }

    /// Negate column `j`, as if the eigenfunction's sign were flipped.
    pub fn flip_sign(&mut self, j: usize) {
        for i in 0..self.n {
            self.scores[i * self.d + j] = -self.scores[i * self.d + j];
        }
    }
}

fn assemble(
    grid: Arc<Grid>,
    spectrum: &[f64],
    mut functions: impl FnMut(usize) -> Vec<f64>,
    d_max: usize,
) -> EigenSystem {
    let largest = spectrum.first().copied().unwrap_or(0.0).max(0.0);
    let floor = eigenvalue_floor(largest);
    let retained = spectrum
        .iter()
        .take(d_max)
        .take_while(|&&l| l > floor)
        .count();
    let eigenvalues = spectrum[..retained].to_vec();
    let eigenfunctions = (0..retained)
        .map(|j| {
            let mut v = functions(j);
            orient(&mut v);
            v
        })
        .collect();
    let at = |j: usize| spectrum.get(j).copied().unwrap_or(0.0).max(0.0);
    let spacings = (0..retained)
        .map(|j| {
            let below = at(j) - at(j + 1);
            if j == 0 {
                below
            } else {
                (at(j - 1) - at(j)).min(below)
            }
        })
        .collect();
    EigenSystem {
        grid,
        eigenvalues,
        eigenfunctions,
        spacings,
        floor,
        requested: d_max,
    }
}

fn check_d_max(d_max: usize, t: usize) -> Result<()> {
    if d_max == 0 || d_max > t {
        return Err(Error::Configuration(format!(
            "d_max must lie in 1..={t}, got {d_max}"
        )));
    }
    Ok(())
}

fn check_psd(spectrum: &[f64], trace: f64) -> Result<()> {
    if let Some(&min) = spectrum.last() {
        if min < -1e-8 * trace.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidSample(format!(
                "covariance surface is not positive semidefinite (eigenvalue {min:e})"
            )));
        }
    }
    Ok(())
}

/// Solve `λ v(t) = ∫ c(t, s) v(s) ds` on the surface's grid with a dense
/// symmetric eigensolve, keeping at most `d_max` components above the floor.
pub fn eigendecompose(surface: &CovarianceSurface, d_max: usize) -> Result<EigenSystem> {
    let grid = surface.grid().clone();
    let t = grid.len();
    check_d_max(d_max, t)?;
    let sqrt_w: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    let c = surface.values();
    let m = DMatrix::from_fn(t, t, |i, j| sqrt_w[i] * c[(i, j)] * sqrt_w[j]);
    let (spectrum, vectors) = symmetric_eigen_desc(m);
    check_psd(&spectrum, surface.trace())?;
    Ok(assemble(
        grid,
        &spectrum,
        |j| (0..t).map(|k| vectors[(k, j)] / sqrt_w[k]).collect(),
        d_max,
    ))
}

/// Eigenpairs of the operator with kernel `Σ_r F_r(t) F_r(s)` for a factor
/// matrix `F` (`r × T`), without forming the `T × T` surface when `r < T`.
pub(crate) fn eigendecompose_factor(
    grid: Arc<Grid>,
    factor: &DMatrix<f64>,
    d_max: usize,
) -> Result<EigenSystem> {
    let t = grid.len();
    check_d_max(d_max, t)?;
    debug_assert_eq!(factor.ncols(), t);
    let sqrt_w: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    // B = F W^{1/2}; the weighted operator matrix is BᵀB.
    let mut b = factor.clone();
    for (k, mut col) in b.column_iter_mut().enumerate() {
        col *= sqrt_w[k];
    }
    if b.nrows() >= t {
        let (spectrum, vectors) = symmetric_eigen_desc(b.transpose() * &b);
        let trace = spectrum.iter().sum::<f64>();
        check_psd(&spectrum, trace)?;
        return Ok(assemble(
            grid,
            &spectrum,
            |j| (0..t).map(|k| vectors[(k, j)] / sqrt_w[k]).collect(),
            d_max,
        ));
    }
    // BBᵀ g = κ g  ⇒  φ = Bᵀ g / √κ is a unit eigenvector of BᵀB, and the
    // eigenfunction W^{-1/2} φ equals Fᵀ g / √κ.
    let gram = &b * b.transpose();
    let (spectrum, vectors) = symmetric_eigen_desc(gram);
    Ok(assemble(
        grid,
        &spectrum,
        |j| {
            let kappa = spectrum[j];
            let g = vectors.column(j);
            let v = factor.transpose() * g;
            v.iter().map(|x| x / kappa.sqrt()).collect()
        },
        d_max,
    ))
}

/// Every eigenvalue of the discretized operator, descending, with no floor
/// applied.
pub fn operator_spectrum(surface: &CovarianceSurface) -> Vec<f64> {
    let grid = surface.grid();
    let t = grid.len();
    let sqrt_w: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    let c = surface.values();
    symmetric_eigenvalues_desc(DMatrix::from_fn(t, t, |i, j| sqrt_w[i] * c[(i, j)] * sqrt_w[j]))
}

/// Eigendecomposition of the empirical covariance `ĉ_N` of `sample`, computed
/// from the centered curves directly.
pub fn eigendecompose_sample(sample: &FunctionalSample, d_max: usize) -> Result<EigenSystem> {
    let n = sample.n_curves();
    let mut factor = DMatrix::from_row_slice(n, sample.grid_len(), &sample.centered_values());
    factor /= (n as f64).sqrt();
    eigendecompose_factor(sample.grid().clone(), &factor, d_max)
}

/// Scores of the centered curves on the first `d` eigenfunctions.
pub fn compute_scores(sample: &FunctionalSample, eig: &EigenSystem, d: usize) -> Result<ScoreMatrix> {
    if !sample.grid().same_as(eig.grid()) {
        return Err(Error::GridMismatch);
    }
    if d > eig.retained() {
        return Err(Error::Dimension {
            requested: d,
            retained: eig.retained(),
        });
    }
    let n = sample.n_curves();
    let t = sample.grid_len();
    let w = sample.grid().weights();
    let centered = DMatrix::from_row_slice(n, t, &sample.centered_values());
    let weighted = DMatrix::from_fn(t, d, |k, j| w[k] * eig.eigenfunctions[j][k]);
    let s = centered * weighted;
    let scores = (0..n)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| s[(i, j)])
        .collect();
    ScoreMatrix::from_parts(n, scores, eig.eigenvalues[..d].to_vec(), eig.floor)
}

/// FPCA of `sample` followed by scores on `d` components. Fails with a
/// degenerate-covariance error if no component survives the floor and with a
/// dimension error if fewer than `d` do.
pub fn project(sample: &FunctionalSample, d: usize) -> Result<(EigenSystem, ScoreMatrix)> {
    let d_max = d.max(1).min(sample.grid_len());
    let eig = eigendecompose_sample(sample, d_max)?;
    if eig.retained() == 0 {
        return Err(Error::DegenerateCovariance(
            "no eigenvalue of the empirical covariance exceeds the floor".into(),
        ));
    }
    let scores = compute_scores(sample, &eig, d)?;
    Ok((eig, scores))
}

/// `f_k = Σ_{i≤k} λ_i / Σ_j λ_j` over the retained eigenvalues.
pub fn variance_explained(eig: &EigenSystem) -> Result<Vec<f64>> {
    cumulative_variance(eig.eigenvalues())
}

/// Cumulative variance fractions of a non-empty list of eigenvalues.
pub fn cumulative_variance(eigenvalues: &[f64]) -> Result<Vec<f64>> {
    if eigenvalues.is_empty() {
        return Err(Error::DegenerateInput("no retained eigenvalues".into()));
    }
    let total: f64 = eigenvalues.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateInput("eigenvalues sum to zero".into()));
    }
    let mut acc = 0.0;
    let mut out: Vec<f64> = eigenvalues
        .iter()
        .map(|l| {
            acc += l;
            acc / total
        })
        .collect();
    *out.last_mut().unwrap() = 1.0;
    Ok(out)
}

/// Eigenvalue decay regime used to suggest a number of projections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayMode {
    /// Polynomially decaying eigenvalues: `d ≈ (log N)^β`.
    PowerLaw,
    /// Exponentially decaying eigenvalues: `d ≈ (log log N)^β`.
    Exponential,
}

/// Advisory number of projections for a sample of size `n`, never below 2.
pub fn suggest_d(n: usize, beta: f64, mode: DecayMode) -> usize {
    let ln = (n.max(3) as f64).ln();
    let raw = match mode {
        DecayMode::PowerLaw => ln.powf(beta),
        DecayMode::Exponential => ln.ln().powf(beta),
    };
    (raw.ceil() as usize).max(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::empirical_covariance;
    use crate::rng::stream_rng;
    use crate::simharness::generate_bm_sample_with;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn uniform(n: usize) -> Arc<Grid> {
        Arc::new(Grid::uniform(n).unwrap())
    }

    fn bm_eigenvalue(k: usize) -> f64 {
        1.0 / (PI * (k as f64 - 0.5)).powi(2)
    }

    #[test]
    fn brownian_covariance_spectrum() {
        let g = uniform(1001);
        let s = CovarianceSurface::from_kernel(g.clone(), f64::min).unwrap();
        let eig = eigendecompose(&s, 5).unwrap();
        assert!((eig.eigenvalues()[0] - 0.405285).abs() < 1e-3);
        assert!((eig.eigenvalues()[1] - 0.045032).abs() < 1e-3);
        for k in 1..=5 {
            assert!((eig.eigenvalues()[k - 1] - bm_eigenvalue(k)).abs() < 1e-3);
        }
        // v_1(t) = √2 sin(πt/2)
        let v1 = eig.eigenfunction(0);
        for (v, t) in v1.iter().zip(g.points()) {
            assert!((v - 2f64.sqrt() * (PI * t / 2.0).sin()).abs() < 1e-2);
        }
        for i in 0..5 {
            for j in 0..5 {
                let ip = g.dot(eig.eigenfunction(i), eig.eigenfunction(j));
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((ip - target).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rank_one_surface() {
        let g = uniform(201);
        let raw = g.evaluate(|t| (1.0 + t).ln() + t * t);
        let norm = g.dot(&raw, &raw).sqrt();
        let f: Vec<f64> = raw.iter().map(|v| v / norm).collect();
        let p = g.points().to_vec();
        let fi = |t: f64| {
            let k = p.iter().position(|x| *x == t).unwrap();
            f[k]
        };
        let s = CovarianceSurface::from_kernel(g.clone(), |a, b| fi(a) * fi(b)).unwrap();
        let eig = eigendecompose(&s, 3).unwrap();
        assert_eq!(eig.retained(), 1);
        assert!(eig.is_truncated());
        assert!(eig.warning().is_some());
        assert!((eig.eigenvalues()[0] - 1.0).abs() < 1e-10);
        for (a, b) in eig.eigenfunction(0).iter().zip(&f) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_surface_retains_nothing() {
        let g = uniform(21);
        let s = CovarianceSurface::from_kernel(g, |_, _| 0.0).unwrap();
        let eig = eigendecompose(&s, 4).unwrap();
        assert_eq!(eig.retained(), 0);
        assert!(eig.is_truncated());
        assert!(matches!(variance_explained(&eig), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn identical_curves_give_empty_scores() {
        let g = uniform(31);
        let f = g.evaluate(|t| t.sin());
        let s = FunctionalSample::from_rows(g, vec![f; 6]).unwrap();
        let eig = eigendecompose_sample(&s, 3).unwrap();
        assert_eq!(eig.retained(), 0);
        let scores = compute_scores(&s, &eig, 0).unwrap();
        assert_eq!(scores.d(), 0);
        assert!(matches!(
            compute_scores(&s, &eig, 1),
            Err(Error::Dimension { requested: 1, retained: 0 })
        ));
        assert!(matches!(project(&s, 2), Err(Error::DegenerateCovariance(_))));
    }

    #[test]
    fn two_point_symmetric_sample() {
        let g = uniform(101);
        let raw = g.evaluate(|t| 1.0 + (PI * t).cos());
        let norm = g.dot(&raw, &raw).sqrt();
        let f: Vec<f64> = raw.iter().map(|v| v / norm).collect();
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        let s = FunctionalSample::from_rows(g, vec![f, neg]).unwrap();
        let (eig, scores) = project(&s, 1).unwrap();
        assert!((eig.eigenvalues()[0] - 1.0).abs() < 1e-10);
        let col = scores.column(0);
        assert!((col[0].abs() - 1.0).abs() < 1e-10);
        assert!((col[0] + col[1]).abs() < 1e-10);
    }

    #[test]
    fn gram_and_dense_routes_agree() {
        let mut rng = stream_rng(3, 0, 0);
        let s = generate_bm_sample_with(&mut rng, 40, 120).unwrap();
        let dense = eigendecompose(&empirical_covariance(&s).unwrap(), 10).unwrap();
        let gram = eigendecompose_sample(&s, 10).unwrap();
        assert_eq!(dense.retained(), gram.retained());
        for j in 0..10 {
            let (a, b) = (dense.eigenvalues()[j], gram.eigenvalues()[j]);
            assert!((a - b).abs() < 1e-10 * a);
            for (x, y) in dense.eigenfunction(j).iter().zip(gram.eigenfunction(j)) {
                assert!((x - y).abs() < 1e-6, "component {j}");
            }
        }
    }

    #[test]
    fn brownian_scores_are_gaussian_with_matching_variance() {
        let mut rng = stream_rng(5, 0, 0);
        let s = generate_bm_sample_with(&mut rng, 500, 200).unwrap();
        let (eig, scores) = project(&s, 3).unwrap();
        let n = scores.n() as f64;
        for j in 0..3 {
            let col = scores.column(j);
            let lambda = eig.eigenvalues()[j];
            let sum: f64 = col.iter().sum();
            assert!(sum.abs() < 1e-8 * n * lambda.sqrt());
            let var = col.iter().map(|x| x * x).sum::<f64>() / n;
            assert!((var - lambda).abs() < 1e-6 * lambda);
            // Population eigenvalue of Brownian motion.
            assert!((var - bm_eigenvalue(j + 1)).abs() < 0.15 * bm_eigenvalue(j + 1));
            // Normality sanity: standardized skewness and excess kurtosis.
            let sd = var.sqrt();
            let skew = col.iter().map(|x| (x / sd).powi(3)).sum::<f64>() / n;
            let kurt = col.iter().map(|x| (x / sd).powi(4)).sum::<f64>() / n - 3.0;
            assert!(skew.abs() < 0.4, "skewness {skew}");
            assert!(kurt.abs() < 0.8, "excess kurtosis {kurt}");
        }
        // Distinct columns are uncorrelated to rounding.
        for a in 0..3 {
            for b in 0..a {
                let (ca, cb) = (scores.column(a), scores.column(b));
                let cov: f64 = ca.iter().zip(&cb).map(|(x, y)| x * y).sum::<f64>() / n;
                let corr = cov / (eig.eigenvalues()[a] * eig.eigenvalues()[b]).sqrt();
                assert!(corr.abs() < 1e-6);
            }
        }
    }

    #[test]
    fn variance_explained_examples() {
        assert_eq!(cumulative_variance(&[2.0, 1.0, 1.0]).unwrap(), vec![0.5, 0.75, 1.0]);
        assert_eq!(cumulative_variance(&[0.3]).unwrap(), vec![1.0]);
        assert!(cumulative_variance(&[]).is_err());
    }

    // Eigenvalues of the temperature-curve example (48 listed values); the
    // printed fractions divide by a total that also includes a 49th value.
    const MELBOURNE_EIGENVALUES: [f64; 48] = [
        0.7151, 0.1469, 0.1295, 0.1154, 0.1046, 0.1021, 0.0944, 0.0868, 0.0845, 0.0833, 0.0758,
        0.0732, 0.0726, 0.0687, 0.0661, 0.0641, 0.0620, 0.0586, 0.0559, 0.0559, 0.0534, 0.0508,
        0.0472, 0.0463, 0.0440, 0.0427, 0.0426, 0.0400, 0.0377, 0.0367, 0.0359, 0.0325, 0.0320,
        0.0299, 0.0281, 0.0274, 0.0252, 0.0248, 0.0228, 0.0211, 0.0207, 0.0201, 0.0188, 0.0171,
        0.0166, 0.0163, 0.0129, 0.0114,
    ];
    const MELBOURNE_FRACTIONS: [f64; 8] = [
        0.2248, 0.2711, 0.3118, 0.3480, 0.3809, 0.4130, 0.4427, 0.4700,
    ];

    #[test]
    fn melbourne_variance_fractions() {
        // Only the 48 listed values: f_1 = 0.7151 / 3.1705.
        let f = cumulative_variance(&MELBOURNE_EIGENVALUES).unwrap();
        assert!((f[0] - 0.7151 / 3.1705).abs() < 1e-12);
        // Recover the unlisted 49th eigenvalue from f_1 and f_48 = 0.9969, then
        // the printed fractions are reproduced to rounding.
        let total = 0.7151 / 0.2248;
        let last = total * (1.0 - 0.9969);
        let mut all = MELBOURNE_EIGENVALUES.to_vec();
        all.push(last);
        let f = cumulative_variance(&all).unwrap();
        for (got, want) in f.iter().zip(MELBOURNE_FRACTIONS) {
            assert!((got - want).abs() < 6e-4, "{got} vs {want}");
        }
        assert!((f[47] - 0.9969).abs() < 6e-4);
    }

    #[test]
    fn suggest_d_examples() {
        assert_eq!(suggest_d(100, 1.0, DecayMode::PowerLaw), 5);
        assert_eq!(suggest_d(200, 1.0, DecayMode::PowerLaw), 6);
        assert_eq!(suggest_d(100, 1.0, DecayMode::Exponential), 2);
        assert_eq!(suggest_d(3, 0.1, DecayMode::PowerLaw), 2);
    }

    #[test]
    fn spacings_follow_definition() {
        let g = uniform(401);
        let s = CovarianceSurface::from_kernel(g, f64::min).unwrap();
        let eig = eigendecompose(&s, 4).unwrap();
        let l = eig.eigenvalues();
        let z = eig.spacings();
        assert!((z[0] - (l[0] - l[1])).abs() < 1e-15);
        assert!((z[1] - (l[0] - l[1]).min(l[1] - l[2])).abs() < 1e-15);
        assert!(z.iter().all(|x| *x > 0.0));
    }

    #[test]
    fn deterministic_output() {
        let mut rng = stream_rng(9, 0, 0);
        let s = generate_bm_sample_with(&mut rng, 30, 60).unwrap();
        let a = eigendecompose_sample(&s, 5).unwrap();
        let b = eigendecompose_sample(&s, 5).unwrap();
        assert_eq!(a.eigenvalues(), b.eigenvalues());
        assert_eq!(a.eigenfunctions(), b.eigenfunctions());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn full_spectrum_reconstructs_trace(
            rows in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 9), 3..12)
        ) {
            let g = uniform(9);
            let s = FunctionalSample::from_rows(g, rows).unwrap();
            let surface = empirical_covariance(&s).unwrap();
            let eig = eigendecompose(&surface, 9).unwrap();
            let total: f64 = eig.eigenvalues().iter().sum();
            let trace = surface.trace();
            prop_assert!(total <= trace * (1.0 + 1e-10) + 1e-12);
            let full: f64 = operator_spectrum(&surface).iter().sum();
            prop_assert!((full - trace).abs() <= 1e-8 * trace.abs().max(1e-12));
            for w in eig.eigenvalues().windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
        }
    }
}
