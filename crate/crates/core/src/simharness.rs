//! Size and power simulations with Brownian-motion curves.
//!
//! Each replicate draws its data from its own random stream, runs FPCA once
//! and evaluates every `(d, α)` combination on the same data, so the rows of a
//! [`SimReport`] share common random numbers.

use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::changepoint::{
    corollary_tests, cusum_matrix, cvm2d_statistic, estimate_changepoint, CorollaryVariant,
};
use crate::curves::{FunctionalSample, Grid};
use crate::fpca::project;
use crate::limitdist::{BridgeSupMoments, LimitLaw};
use crate::report::fmt_float;
use crate::rng::{domain, stream_rng};
use crate::twosample::two_sample_test;
use crate::{Error, Result};

/// Quantile of the standard normal used for the 90% bands.
pub const BAND_Z: f64 = 1.654;

/// Which curves receive the mean shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftTarget {
    /// Curves with 0-based index `≥ k*` (the change occurs after curve `k*`).
    After(usize),
    All,
}

/// `n` Brownian motions as random walks with `grid_size` steps on a uniform
/// grid of `grid_size + 1` points.
pub fn generate_bm_sample(n: usize, grid_size: usize, seed: u64) -> Result<FunctionalSample> {
    generate_bm_sample_with(&mut stream_rng(seed, domain::SAMPLE, 0), n, grid_size)
}

pub fn generate_bm_sample_with<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    grid_size: usize,
) -> Result<FunctionalSample> {
    if grid_size < 2 {
        return Err(Error::InvalidGrid(format!("grid_size must be at least 2, got {grid_size}")));
    }
    let grid = Arc::new(Grid::uniform(grid_size + 1)?);
    Ok(generate_on_grid(rng, n, grid)?)
}

fn generate_on_grid<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    grid: Arc<Grid>,
) -> Result<FunctionalSample> {
    let t = grid.len();
    let sd = ((t - 1) as f64).sqrt().recip();
    let mut values = Vec::with_capacity(n * t);
    for _ in 0..n {
        let mut w = 0.0;
        values.push(w);
        for _ in 1..t {
            let z: f64 = rng.sample(StandardNormal);
            w += sd * z;
            values.push(w);
        }
    }
    FunctionalSample::from_flat(grid, n, values)
}

/// Add `a·t(1 − t)` to the targeted curves.
pub fn inject_shift(sample: &FunctionalSample, a: f64, target: ShiftTarget) -> Result<FunctionalSample> {
    let first = match target {
        ShiftTarget::All => 0,
        ShiftTarget::After(k) if k < sample.n_curves() => k,
        ShiftTarget::After(k) => {
            return Err(Error::Configuration(format!(
                "k* = {k} must be below the sample size {}",
                sample.n_curves()
            )))
        }
    };
    if a == 0.0 {
        return Ok(sample.clone());
    }
    sample.map_values(|i, t, v| if i >= first { v + a * t * (1.0 - t) } else { v })
}

/// Settings of one simulation experiment.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SimScenario {
    pub n: usize,
    /// Size of the second sample (two-sample designs only).
    pub m: Option<usize>,
    /// Number of random-walk steps; curves have `grid_size + 1` points.
    pub grid_size: usize,
    /// Shift amplitude.
    pub a: f64,
    /// Change location for change-point designs; `None` with `a ≠ 0` shifts
    /// every curve of the second sample.
    pub k_star: Option<usize>,
    pub d_list: Vec<usize>,
    pub alpha_list: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
}

impl SimScenario {
    /// Null design with `n` curves, a 1000-step grid, `d = 5` and `α = 0.05`.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            m: None,
            grid_size: 1000,
            a: 0.0,
            k_star: None,
            d_list: vec![5],
            alpha_list: vec![0.05],
            reps: 1000,
            seed: 0,
        }
    }

    pub fn with_shift(mut self, a: f64, k_star: Option<usize>) -> Self {
        self.a = a;
        self.k_star = k_star;
        self
    }

    pub fn with_second_sample(mut self, m: usize) -> Self {
        self.m = Some(m);
        self
    }

    pub fn with_d_list(mut self, d_list: Vec<usize>) -> Self {
        self.d_list = d_list;
        self
    }

    pub fn with_alpha_list(mut self, alpha_list: Vec<f64>) -> Self {
        self.alpha_list = alpha_list;
        self
    }

    pub fn with_reps(mut self, reps: usize) -> Self {
        self.reps = reps;
        self
    }

    pub fn with_grid_size(mut self, grid_size: usize) -> Self {
        self.grid_size = grid_size;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self, selector: TestSelector) -> Result<()> {
        let bad = |msg: String| Err(Error::Configuration(msg));
        if self.grid_size < 2 {
            return bad(format!("grid_size must be at least 2, got {}", self.grid_size));
        }
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.n < 2 {
            return bad(format!("N must be at least 2, got {}", self.n));
        }
        if let Some(k) = self.k_star {
            if k >= self.n {
                return bad(format!("k* = {k} must be below N = {}", self.n));
            }
        }
        if self.d_list.is_empty() || self.d_list.contains(&0) {
            return bad("d_list must be non-empty with positive entries".into());
        }
        if self.alpha_list.is_empty() || self.alpha_list.iter().any(|a| !(*a > 0.0 && *a <= 1.0)) {
            return bad("every alpha must lie in (0, 1]".into());
        }
        if selector == TestSelector::TwoSample && self.m.is_none_or(|m| m < 2) {
            return bad("two-sample designs need a second sample size M >= 2".into());
        }
        Ok(())
    }
}

/// The test evaluated in each replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestSelector {
    Cvm2d,
    Corollary(CorollaryVariant),
    TwoSample,
}

/// Reference distributions a selector may need.
#[derive(Debug, Clone, Copy, Default)]
pub struct Calibration<'a> {
    pub law: Option<&'a LimitLaw>,
    pub moments: Option<&'a BridgeSupMoments>,
}

/// `p̂ ± 1.654·√(p̂(1 − p̂)/R)`, clipped to `[0, 1]`.
pub fn confidence_band(p_hat: f64, reps: usize) -> (f64, f64) {
    let half = BAND_Z * (p_hat * (1.0 - p_hat) / reps as f64).sqrt();
    ((p_hat - half).max(0.0), (p_hat + half).min(1.0))
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SimRow {
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub a: f64,
    pub k_star: Option<usize>,
    pub p_hat: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    pub reps: usize,
    pub seed: u64,
}

impl SimRow {
    /// Whether each rate lies inside the other's band.
    pub fn mutually_within(&self, other: &SimRow) -> bool {
        (other.band_lo..=other.band_hi).contains(&self.p_hat)
            && (self.band_lo..=self.band_hi).contains(&other.p_hat)
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SimReport {
    pub selector: TestSelector,
    pub rows: Vec<SimRow>,
}

impl SimReport {
    pub fn row(&self, d: usize, alpha: f64) -> Option<&SimRow> {
        self.rows.iter().find(|r| r.d == d && r.alpha == alpha)
    }

    /// Columns `N, d, alpha, a, k_star, p_hat, band_lo, band_hi, R, seed`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["N", "d", "alpha", "a", "k_star", "p_hat", "band_lo", "band_hi", "R", "seed"])?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                r.d.to_string(),
                fmt_float(r.alpha),
                fmt_float(r.a),
                r.k_star.map(|k| k.to_string()).unwrap_or_default(),
                fmt_float(r.p_hat),
                fmt_float(r.band_lo),
                fmt_float(r.band_hi),
                r.reps.to_string(),
                r.seed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Data for replicate `r`: the first sample (with any change-point shift) and,
/// for two-sample designs, the second sample (with the shift on every curve).
fn replicate_data(
    scenario: &SimScenario,
    r: u64,
) -> Result<(FunctionalSample, Option<FunctionalSample>)> {
    let mut rng = stream_rng(scenario.seed, domain::SIMULATION, r);
    let x = generate_bm_sample_with(&mut rng, scenario.n, scenario.grid_size)?;
    match scenario.m {
        Some(m) => {
            let y = generate_on_grid(&mut rng, m, x.grid().clone())?;
            let y = inject_shift(&y, scenario.a, ShiftTarget::All)?;
            Ok((x, Some(y)))
        }
        None => {
            let x = match scenario.k_star {
                Some(k) => inject_shift(&x, scenario.a, ShiftTarget::After(k))?,
                None => inject_shift(&x, scenario.a, ShiftTarget::All)?,
            };
            Ok((x, None))
        }
    }
}

/// P-values for every `d` in `d_list` on one replicate.
fn replicate_p_values(
    scenario: &SimScenario,
    selector: TestSelector,
    calib: Calibration<'_>,
    r: u64,
) -> Result<Vec<f64>> {
    let (x, y) = replicate_data(scenario, r)?;
    let d_max = *scenario.d_list.iter().max().expect("validated non-empty");
    match selector {
        TestSelector::TwoSample => {
            let y = y.expect("validated second sample");
            scenario
                .d_list
                .iter()
                .map(|&d| two_sample_test(&x, &y, d).map(|o| o.p_value))
                .collect()
        }
        TestSelector::Cvm2d | TestSelector::Corollary(_) => {
            let (_, scores) = project(&x, d_max)?;
            let full = cusum_matrix(&scores)?;
            scenario
                .d_list
                .iter()
                .map(|&d| {
                    let cusum = full.leading(d)?;
                    match selector {
                        TestSelector::Cvm2d => {
                            let law = calib.law.expect("validated law");
                            Ok(law.p_value(cvm2d_statistic(&cusum)))
                        }
                        TestSelector::Corollary(v) => {
                            corollary_tests(&cusum, v, calib.moments).map(|o| o.p_value)
                        }
                        TestSelector::TwoSample => unreachable!(),
                    }
                })
                .collect()
        }
    }
}

/// Rejection frequencies for every `(d, α)` over `scenario.reps` replicates.
pub fn run_size_power(
    scenario: &SimScenario,
    selector: TestSelector,
    calib: Calibration<'_>,
) -> Result<SimReport> {
    scenario.validate(selector)?;
    if selector == TestSelector::Cvm2d && calib.law.is_none() {
        return Err(Error::Configuration("the Cramér–von-Mises test needs a limit law".into()));
    }
    if selector == TestSelector::Corollary(CorollaryVariant::SupBridge) && calib.moments.is_none() {
        return Err(Error::Configuration("the sup-bridge test needs bridge sup moments".into()));
    }
    let p_values: Vec<Vec<f64>> = (0..scenario.reps as u64)
        .into_par_iter()
        .map(|r| replicate_p_values(scenario, selector, calib, r))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (slot, &d) in scenario.d_list.iter().enumerate() {
        for &alpha in &scenario.alpha_list {
            let rejections = p_values.iter().filter(|p| p[slot] <= alpha).count();
            let p_hat = rejections as f64 / scenario.reps as f64;
            let (band_lo, band_hi) = confidence_band(p_hat, scenario.reps);
            rows.push(SimRow {
                n: scenario.n,
                d,
                alpha,
                a: scenario.a,
                k_star: scenario.k_star,
                p_hat,
                band_lo,
                band_hi,
                reps: scenario.reps,
                seed: scenario.seed,
            });
        }
    }
    Ok(SimReport { selector, rows })
}

/// `θ̂` with `d` components in each replicate of a change-point design.
pub fn run_localization(scenario: &SimScenario, d: usize) -> Result<Vec<usize>> {
    scenario.validate(TestSelector::Cvm2d)?;
    if scenario.m.is_some() {
        return Err(Error::Configuration("localization needs a one-sample design".into()));
    }
    (0..scenario.reps as u64)
        .into_par_iter()
        .map(|r| {
            let (x, _) = replicate_data(scenario, r)?;
            let (_, scores) = project(&x, d)?;
            estimate_changepoint(&cusum_matrix(&scores)?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::empirical_covariance;
    use crate::limitdist::simulate_tld_with;

    #[test]
    fn bm_paths_start_at_zero_with_unit_endpoint_variance() {
        let s = generate_bm_sample(10000, 20, 1).unwrap();
        assert_eq!(s.grid_len(), 21);
        assert!(s.curves().all(|c| c[0] == 0.0));
        let ends: Vec<f64> = s.curves().map(|c| c[20]).collect();
        let mean = ends.iter().sum::<f64>() / 1e4;
        let var = ends.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / 1e4;
        assert!((var - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn bm_covariance_at_half_and_three_quarters() {
        let s = generate_bm_sample(5000, 100, 2).unwrap();
        let c = empirical_covariance(&s).unwrap();
        assert!((c.at(50, 75) - 0.5).abs() < 0.05);
    }

    #[test]
    fn grid_size_must_be_at_least_two() {
        assert!(generate_bm_sample(3, 1, 0).is_err());
    }

    #[test]
    fn shift_is_exact() {
        let s = generate_bm_sample(6, 100, 3).unwrap();
        assert_eq!(inject_shift(&s, 0.0, ShiftTarget::All).unwrap().values(), s.values());
        let shifted = inject_shift(&s, 1.5, ShiftTarget::After(3)).unwrap();
        let pts = s.grid().points();
        for i in 0..6 {
            for (k, t) in pts.iter().enumerate() {
                let diff = shifted.curve(i)[k] - s.curve(i)[k];
                let expect = if i >= 3 { 1.5 * t * (1.0 - t) } else { 0.0 };
                assert!((diff - expect).abs() < 1e-14);
            }
        }
        let max = (0..6).map(|i| shifted.curve(i)[50] - s.curve(i)[50]).fold(0.0, f64::max);
        assert!((max - 0.375).abs() < 1e-14);
        assert!(inject_shift(&s, 1.0, ShiftTarget::After(6)).is_err());
    }

    #[test]
    fn band_is_clipped() {
        assert_eq!(confidence_band(0.0, 100), (0.0, 0.0));
        assert_eq!(confidence_band(1.0, 100), (1.0, 1.0));
        let (lo, hi) = confidence_band(0.05, 1000);
        assert!((hi - lo - 2.0 * 1.654 * (0.05f64 * 0.95 / 1000.0).sqrt()).abs() < 1e-15);
    }

    fn small_law() -> LimitLaw {
        simulate_tld_with(20, 200, 2000, 11).unwrap()
    }

    #[test]
    fn alpha_one_always_rejects() {
        let law = small_law();
        let sc = SimScenario::new(30)
            .with_grid_size(50)
            .with_reps(20)
            .with_d_list(vec![2, 3])
            .with_alpha_list(vec![1.0]);
        let calib = Calibration { law: Some(&law), moments: None };
        let rep = run_size_power(&sc, TestSelector::Cvm2d, calib).unwrap();
        assert!(rep.rows.iter().all(|r| r.p_hat == 1.0));
    }

    #[test]
    fn reports_are_reproducible() {
        let law = small_law();
        let sc = SimScenario::new(30).with_grid_size(50).with_reps(30).with_seed(9);
        let calib = Calibration { law: Some(&law), moments: None };
        let a = run_size_power(&sc, TestSelector::Cvm2d, calib).unwrap();
        let b = run_size_power(&sc, TestSelector::Cvm2d, calib).unwrap();
        assert_eq!(a, b);
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("N,d,alpha,a,k_star,p_hat,band_lo,band_hi,R,seed\n"));
    }

    #[test]
    fn power_grows_with_shift_under_common_random_numbers() {
        let law = small_law();
        let calib = Calibration { law: Some(&law), moments: None };
        let base = SimScenario::new(60).with_grid_size(50).with_reps(60).with_seed(5);
        let rate = |a: f64| {
            let sc = base.clone().with_shift(a, Some(30));
            run_size_power(&sc, TestSelector::Cvm2d, calib).unwrap().rows[0].p_hat
        };
        assert!(rate(1.5) >= rate(1.0));
        assert!(rate(3.0) >= rate(1.5));
    }

    #[test]
    fn scenario_validation() {
        let calib = Calibration::default();
        let sc = SimScenario::new(30).with_grid_size(50).with_reps(5);
        assert!(run_size_power(&sc, TestSelector::Cvm2d, calib).is_err());
        assert!(run_size_power(&sc, TestSelector::TwoSample, calib).is_err());
        let bad = sc.clone().with_shift(1.0, Some(30));
        assert!(run_size_power(&bad, TestSelector::Corollary(CorollaryVariant::CvmSum), calib).is_err());
        let bad = sc.clone().with_alpha_list(vec![0.0]);
        assert!(run_size_power(&bad, TestSelector::Corollary(CorollaryVariant::CvmSum), calib).is_err());
        assert!(run_size_power(&sc, TestSelector::Corollary(CorollaryVariant::SupBridge), calib).is_err());
    }
}
