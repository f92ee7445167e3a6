//! Change-point tests built on the CUSUM of principal-component scores.
//!
//! For scores `η̂_{i,j}` with eigenvalues `λ̂_j` the normalized partial sums are
//! `Ŝ_j(k) = λ̂_j^{-1/2} Σ_{i≤k} η̂_{i,j}`, and the two-parameter process is
//!
//! ```text
//! Ẑ_N(u, x) = d^{-1/2} Σ_{j ≤ ⌊du⌋} { N^{-1} [Ŝ_j(⌊Nx⌋) − x Ŝ_j(N)]² − x(1 − x) }
//! ```
//!
//! evaluated at `x = m/N`, `m = 0..=N`. The main test rejects for large
//! `∫∫ Ẑ²_N`, calibrated by a simulated [`LimitLaw`]. The one-parameter
//! statistics with normal limits and the change-point estimator `θ̂_N` are
//! computed from the same CUSUM matrix.

use std::io::Write;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::curves::FunctionalSample;
use crate::fpca::{project, ScoreMatrix};
use crate::limitdist::{BridgeSupMoments, LimitLaw};
use crate::report::{fmt_float, Provenance};
use crate::{Error, Result};

/// `Ŝ_j(k)` for `j < d`, `k = 0..=N`, stored row-major by component.
#[derive(Debug, Clone)]
pub struct CusumMatrix {
    d: usize,
    n: usize,
    values: Vec<f64>,
}

impl CusumMatrix {
    /// Build from raw rows (`d` rows of `n + 1` entries). Column 0 must be zero
    /// and column `n` must vanish to `1e-8` relative to the row scale.
    pub fn from_values(d: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || values.len() != d * (n + 1) {
            return Err(Error::InvalidSample(format!(
                "expected {d} x {} CUSUM values, got {}",
                n + 1,
                values.len()
            )));
        }
        for (j, row) in values.chunks_exact(n + 1).enumerate() {
            if row[0] != 0.0 {
                return Err(Error::InvalidSample(format!("row {j}: S(0) must be 0")));
            }
            let scale = row.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            if row[n].abs() > 1e-8 * scale {
                return Err(Error::InvalidSample(format!(
                    "row {j}: S(N) = {} is not zero; scores must be centered",
                    row[n]
                )));
            }
        }
        Ok(Self { d, n, values })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * (self.n + 1)..(j + 1) * (self.n + 1)]
    }

    pub fn at(&self, j: usize, k: usize) -> f64 {
        self.values[j * (self.n + 1) + k]
    }

    /// `V̂_j(k/N)² = N^{-1} [Ŝ_j(k) − (k/N) Ŝ_j(N)]²`.
    fn bridge_sq(&self, j: usize, k: usize) -> f64 {
        let n = self.n as f64;
        let row = self.row(j);
        let b = row[k] - (k as f64 / n) * row[self.n];
        b * b / n
    }

    /// `x(1 − x)` at `x = k/N`.
    fn correction(&self, k: usize) -> f64 {
        let x = k as f64 / self.n as f64;
        x * (1.0 - x)
    }

    /// Copy restricted to the first `d` components.
    pub fn leading(&self, d: usize) -> Result<Self> {
        if d > self.d {
            return Err(Error::Dimension {
                requested: d,
                retained: self.d,
            });
        }
        Ok(Self {
            d,
            n: self.n,
            values: self.values[..d * (self.n + 1)].to_vec(),
        })
    }
}

/// Normalized partial sums of the score columns.
pub fn cusum_matrix(scores: &ScoreMatrix) -> Result<CusumMatrix> {
    let (n, d) = (scores.n(), scores.d());
    let mut values = Vec::with_capacity(d * (n + 1));
    for (j, &lambda) in scores.eigenvalues().iter().enumerate() {
        if !(lambda > scores.floor()) {
            return Err(Error::DegenerateComponent {
                index: j,
                eigenvalue: lambda,
                floor: scores.floor(),
            });
        }
        let scale = lambda.sqrt().recip();
        let mut acc = 0.0;
        values.push(0.0);
        for i in 0..n {
            acc += scores.at(i, j);
            values.push(scale * acc);
        }
    }
    CusumMatrix::from_values(d, n, values)
}

/// `Ẑ_N(k/d, m/N)` for `k = 1..=d`, `m = 0..=N`.
#[derive(Debug, Clone)]
pub struct ProcessGrid {
    d: usize,
    n: usize,
    values: Vec<f64>,
}

impl ProcessGrid {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Value at `u = k/d`, `x = m/N`; `k = 0` is the empty sum.
    pub fn value(&self, k: usize, m: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.values[(k - 1) * (self.n + 1) + m]
        }
    }

    /// Step-process evaluation: depends on `(u, x)` only through `⌊du⌋` and `⌊Nx⌋`.
    pub fn at(&self, u: f64, x: f64) -> f64 {
        let k = ((self.d as f64 * u.clamp(0.0, 1.0)).floor() as usize).min(self.d);
        let m = ((self.n as f64 * x.clamp(0.0, 1.0)).floor() as usize).min(self.n);
        self.value(k, m)
    }

    /// `∫∫ Ẑ²`: exact in `u` (the process is constant on `[k/d, (k+1)/d)`),
    /// Riemann sum with cell width `1/N` in `x`.
    pub fn cvm_integral(&self) -> f64 {
        let sum: f64 = (1..self.d)
            .map(|k| (0..=self.n).map(|m| self.value(k, m).powi(2)).sum::<f64>())
            .sum();
        sum / (self.d as f64 * self.n as f64)
    }
}

/// Evaluate `Ẑ_N` on its step grid.
pub fn z_process(cusum: &CusumMatrix) -> ProcessGrid {
    let (d, n) = (cusum.d, cusum.n);
    let norm = (d as f64).sqrt().recip();
    let mut values = vec![0.0; d * (n + 1)];
    let mut partial = vec![0.0; n + 1];
    for j in 0..d {
        for (m, p) in partial.iter_mut().enumerate() {
            *p += cusum.bridge_sq(j, m) - cusum.correction(m);
        }
        let row = &mut values[j * (n + 1)..(j + 1) * (n + 1)];
        for (dst, p) in row.iter_mut().zip(&partial) {
            *dst = norm * p;
        }
        // Both endpoints vanish identically.
        row[0] = 0.0;
        row[n] = 0.0;
    }
    ProcessGrid { d, n, values }
}

/// `∫∫ Ẑ²_N(u, x) du dx` computed from a CUSUM matrix.
pub fn cvm2d_statistic(cusum: &CusumMatrix) -> f64 {
    z_process(cusum).cvm_integral()
}

/// Which test produced an outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Cramér–von-Mises functional of the two-parameter process.
    Cvm2d,
    /// Sum over components of the supremum of each squared bridge.
    SupBridge,
    /// Sum over components of the integrated squared bridge.
    CvmSum,
    /// Supremum over `x` of the summed squared bridges.
    SupSum,
    /// Two-sample projection statistic.
    TwoSample,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Cvm2d => "cvm2d",
            Method::SupBridge => "sup-bridge",
            Method::CvmSum => "cvm-sum",
            Method::SupSum => "sup-sum",
            Method::TwoSample => "two-sample",
        }
    }
}

/// Extra information attached to a test result.
#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct Diagnostics {
    /// Empirical eigen-spacings of the components used.
    pub spacings: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TestOutcome {
    pub method: Method,
    pub statistic: f64,
    pub p_value: f64,
    pub d: usize,
    pub diagnostics: Diagnostics,
}

impl TestOutcome {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value <= alpha
    }
}

pub(crate) fn normal_upper_tail(z: f64) -> f64 {
    Normal::standard().sf(z).clamp(0.0, 1.0)
}

/// Cramér–von-Mises test from precomputed scores.
pub fn cvm2d_test_scores(scores: &ScoreMatrix, law: &LimitLaw) -> Result<TestOutcome> {
    let cusum = cusum_matrix(scores)?;
    let statistic = cvm2d_statistic(&cusum);
    let mut warnings = Vec::new();
    if scores.d() < 2 {
        warnings.push("d = 1 makes the u-integral vanish; use d >= 2".to_string());
    }
    Ok(TestOutcome {
        method: Method::Cvm2d,
        statistic,
        p_value: law.p_value(statistic),
        d: scores.d(),
        diagnostics: Diagnostics {
            spacings: Vec::new(),
            warnings,
        },
    })
}

/// FPCA of `sample` on `d` components followed by the Cramér–von-Mises test.
pub fn cvm2d_test(sample: &FunctionalSample, d: usize, law: Option<&LimitLaw>) -> Result<TestOutcome> {
    let law = law.ok_or_else(|| {
        Error::Configuration("the Cramér–von-Mises test needs a simulated limit law".into())
    })?;
    let (eig, scores) = project(sample, d)?;
    let mut outcome = cvm2d_test_scores(&scores, law)?;
    outcome.diagnostics.spacings = eig.spacings()[..d].to_vec();
    outcome.diagnostics.warnings.extend(eig.warning());
    Ok(outcome)
}

/// Variants with standard normal limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorollaryVariant {
    /// `(d^{1/2} σ₀)^{-1} {Σ_j sup_x V̂_j²(x) − d μ₀}`
    SupBridge,
    /// `(d/45)^{-1/2} {Σ_j ∫ V̂_j²(x) dx − d/6}`
    CvmSum,
    /// `(d/8)^{-1/2} {sup_x Σ_j V̂_j²(x) − d/4}`
    SupSum,
}

impl CorollaryVariant {
    pub fn method(self) -> Method {
        match self {
            CorollaryVariant::SupBridge => Method::SupBridge,
            CorollaryVariant::CvmSum => Method::CvmSum,
            CorollaryVariant::SupSum => Method::SupSum,
        }
    }

    /// The unstandardized functional of the squared bridges.
    pub fn raw_statistic(self, cusum: &CusumMatrix) -> f64 {
        let (d, n) = (cusum.d, cusum.n);
        match self {
            CorollaryVariant::SupBridge => (0..d)
                .map(|j| (0..=n).map(|k| cusum.bridge_sq(j, k)).fold(0.0, f64::max))
                .sum(),
            CorollaryVariant::CvmSum => {
                (0..d)
                    .map(|j| (0..n).map(|k| cusum.bridge_sq(j, k)).sum::<f64>())
                    .sum::<f64>()
                    / n as f64
            }
            CorollaryVariant::SupSum => (0..=n)
                .map(|k| (0..d).map(|j| cusum.bridge_sq(j, k)).sum::<f64>())
                .fold(0.0, f64::max),
        }
    }

    /// Center and scale a raw statistic to its standard normal limit.
    pub fn standardize(self, raw: f64, d: usize, moments: Option<&BridgeSupMoments>) -> Result<f64> {
        let d = d as f64;
        Ok(match self {
            CorollaryVariant::SupBridge => {
                let m = moments.ok_or_else(|| {
                    Error::Configuration("the sup-bridge test needs bridge sup moments".into())
                })?;
                (raw - d * m.mu0) / (d.sqrt() * m.sigma0)
            }
            CorollaryVariant::CvmSum => (raw - d / 6.0) / (d / 45.0).sqrt(),
            CorollaryVariant::SupSum => (raw - d / 4.0) / (d / 8.0).sqrt(),
        })
    }
}

/// One-sided upper-tail normal test for one of the [`CorollaryVariant`]s.
pub fn corollary_tests(
    cusum: &CusumMatrix,
    variant: CorollaryVariant,
    moments: Option<&BridgeSupMoments>,
) -> Result<TestOutcome> {
    let raw = variant.raw_statistic(cusum);
    let statistic = variant.standardize(raw, cusum.d, moments)?;
    Ok(TestOutcome {
        method: variant.method(),
        statistic,
        p_value: normal_upper_tail(statistic),
        d: cusum.d,
        diagnostics: Diagnostics::default(),
    })
}

/// `I_N(ℓ)` for `ℓ = 1..=N` (entry `ℓ − 1`).
pub fn i_n_profile(cusum: &CusumMatrix) -> Result<Vec<f64>> {
    let (d, n) = (cusum.d, cusum.n);
    if d < 2 {
        return Err(Error::Dimension {
            requested: 2,
            retained: d,
        });
    }
    let scale = 1.0 / (d * d) as f64;
    Ok((1..=n)
        .map(|l| {
            let corr = cusum.correction(l);
            let mut inner = 0.0;
            let mut total = 0.0;
            for j in 0..d - 1 {
                inner += cusum.bridge_sq(j, l) - corr;
                total += inner * inner;
            }
            scale * total
        })
        .collect())
}

/// `θ̂_N`: the smallest `ℓ` maximizing `I_N(ℓ)`. The change occurs after curve
/// `θ̂_N`, i.e. curves `θ̂_N + 1, …` (1-based) belong to the second regime.
pub fn estimate_changepoint(cusum: &CusumMatrix) -> Result<usize> {
    let profile = i_n_profile(cusum)?;
    let mut best = 0usize;
    for (i, v) in profile.iter().enumerate() {
        if *v > profile[best] {
            best = i;
        }
    }
    Ok(best + 1)
}

/// Outcome of testing one segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeStatus {
    /// Rejected; split at the estimated change-point.
    Split,
    /// No rejection at the configured level.
    NoChange,
    /// Shorter than the minimum segment length.
    TooShort,
    /// Long enough, but no listed `d` could be tested.
    Untestable,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SegmentNode {
    /// Position in depth-first pre-order, starting at 1.
    pub iteration: usize,
    /// First curve of the segment (0-based, inclusive).
    pub start: usize,
    /// Last curve of the segment (inclusive).
    pub end: usize,
    /// P-value for each entry of the tree's `d_list`; `None` when not tested.
    pub p_values: Vec<Option<f64>>,
    /// First curve after the estimated change.
    pub change_point: Option<usize>,
    /// The `d` used to estimate the change-point.
    pub estimate_d: Option<usize>,
    pub status: NodeStatus,
    pub children: Option<(usize, usize)>,
}

impl SegmentNode {
    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SegmentationTree {
    pub nodes: Vec<SegmentNode>,
    pub d_list: Vec<usize>,
    pub alpha: f64,
    pub min_segment: usize,
}

/// Smallest allowed minimum segment length.
pub const MIN_SEGMENT_FLOOR: usize = 4;
/// Default minimum segment length.
pub const DEFAULT_MIN_SEGMENT: usize = 8;

impl SegmentationTree {
    /// Estimated change-points (first curve of each new regime), ascending.
    pub fn change_points(&self) -> Vec<usize> {
        let mut cps: Vec<usize> = self.nodes.iter().filter_map(|n| n.change_point).collect();
        cps.sort_unstable();
        cps
    }

    pub fn leaves(&self) -> impl Iterator<Item = &SegmentNode> {
        self.nodes.iter().filter(|n| n.children.is_none())
    }

    /// Table with columns `iteration, segment_start, segment_end,
    /// change_point, p_d<d>...`. Curve labels replace indices when given.
    pub fn write_csv<W: Write>(&self, out: W, labels: Option<&[String]>) -> Result<()> {
        let label = |i: usize| match labels {
            Some(l) => l[i].clone(),
            None => i.to_string(),
        };
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![
            "iteration".to_string(),
            "segment_start".to_string(),
            "segment_end".to_string(),
            "change_point".to_string(),
        ];
        header.extend(self.d_list.iter().map(|d| format!("p_d{d}")));
        w.write_record(&header)?;
        for node in &self.nodes {
            let mut rec = vec![
                node.iteration.to_string(),
                label(node.start),
                label(node.end),
                node.change_point.map(label).unwrap_or_default(),
            ];
            rec.extend(
                node.p_values
                    .iter()
                    .map(|p| p.map(fmt_float).unwrap_or_default()),
            );
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// JSON report with provenance and optional curve labels.
    pub fn write_json<W: Write>(
        &self,
        out: W,
        provenance: &Provenance,
        labels: Option<&[String]>,
    ) -> Result<()> {
        #[derive(Serialize)]
        struct Report<'a> {
            provenance: &'a Provenance,
            #[serde(skip_serializing_if = "Option::is_none")]
            labels: Option<&'a [String]>,
            change_points: Vec<usize>,
            tree: &'a SegmentationTree,
        }
        serde_json::to_writer_pretty(
            out,
            &Report {
                provenance,
                labels,
                change_points: self.change_points(),
                tree: self,
            },
        )?;
        Ok(())
    }
}

/// Recursive test-then-split segmentation with the Cramér–von-Mises test.
///
/// Every segment gets its own FPCA. A segment is tested for each `d` in
/// `d_list` with `d + 2` below its length; if the smallest p-value is below
/// `alpha` it is split at `θ̂` estimated with the first rejecting `d`.
pub fn binary_segmentation(
    sample: &FunctionalSample,
    d_list: &[usize],
    alpha: f64,
    law: &LimitLaw,
    min_segment: usize,
) -> Result<SegmentationTree> {
    if d_list.is_empty() || d_list.iter().any(|&d| d < 2) {
        return Err(Error::Configuration(
            "d_list must be non-empty with every d >= 2".into(),
        ));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Configuration(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if min_segment < MIN_SEGMENT_FLOOR {
        return Err(Error::Configuration(format!(
            "min_segment must be at least {MIN_SEGMENT_FLOOR}, got {min_segment}"
        )));
    }
    let mut tree = SegmentationTree {
        nodes: Vec::new(),
        d_list: d_list.to_vec(),
        alpha,
        min_segment,
    };
    segment(sample, 0, sample.n_curves() - 1, law, &mut tree)?;
    Ok(tree)
}

fn segment(
    sample: &FunctionalSample,
    start: usize,
    end: usize,
    law: &LimitLaw,
    tree: &mut SegmentationTree,
) -> Result<usize> {
    let idx = tree.nodes.len();
    let len = end + 1 - start;
    tree.nodes.push(SegmentNode {
        iteration: idx + 1,
        start,
        end,
        p_values: vec![None; tree.d_list.len()],
        change_point: None,
        estimate_d: None,
        status: NodeStatus::TooShort,
        children: None,
    });
    if len < tree.min_segment {
        return Ok(idx);
    }

    let sub = sample.subsample(start..end + 1)?;
    let testable: Vec<usize> = tree.d_list.iter().copied().filter(|d| d + 2 < len).collect();
    let Some(&d_top) = testable.iter().max() else {
        tree.nodes[idx].status = NodeStatus::Untestable;
        return Ok(idx);
    };
    let scores = match project(&sub, d_top) {
        Ok((_, s)) => s,
        Err(Error::Dimension { retained, .. }) if retained >= 2 => project(&sub, retained)?.1,
        Err(Error::Dimension { .. }) | Err(Error::DegenerateCovariance(_)) => {
            tree.nodes[idx].status = NodeStatus::Untestable;
            return Ok(idx);
        }
        Err(e) => return Err(e),
    };
    let full = cusum_matrix(&scores)?;

    let mut first_reject: Option<usize> = None;
    for (slot, &d) in tree.d_list.clone().iter().enumerate() {
        if d + 2 >= len || d > full.d() {
            continue;
        }
        let cusum = full.leading(d)?;
        let p = law.p_value(cvm2d_statistic(&cusum));
        tree.nodes[idx].p_values[slot] = Some(p);
        if p < tree.alpha && first_reject.is_none() {
            first_reject = Some(d);
        }
    }
    if tree.nodes[idx].p_values.iter().all(Option::is_none) {
        tree.nodes[idx].status = NodeStatus::Untestable;
        return Ok(idx);
    }
    let Some(d) = first_reject else {
        tree.nodes[idx].status = NodeStatus::NoChange;
        return Ok(idx);
    };
    let theta = estimate_changepoint(&full.leading(d)?)?;
    tree.nodes[idx].estimate_d = Some(d);
    if theta >= len {
        tree.nodes[idx].status = NodeStatus::NoChange;
        return Ok(idx);
    }
    tree.nodes[idx].change_point = Some(start + theta);
    tree.nodes[idx].status = NodeStatus::Split;
    let left = segment(sample, start, start + theta - 1, law, tree)?;
    let right = segment(sample, start + theta, end, law, tree)?;
    tree.nodes[idx].children = Some((left, right));
    Ok(idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::Grid;
    use crate::limitdist::simulate_tld_with;
    use crate::rng::stream_rng;
    use crate::simharness::{generate_bm_sample_with, inject_shift, ShiftTarget};
    use std::sync::Arc;

    fn pm_sample() -> FunctionalSample {
        let g = Arc::new(Grid::uniform(101).unwrap());
        let raw = g.evaluate(|t| 1.0 + t);
        let norm = g.dot(&raw, &raw).sqrt();
        let f: Vec<f64> = raw.iter().map(|v| v / norm).collect();
        let neg = f.iter().map(|v| -v).collect();
        FunctionalSample::from_rows(g, vec![f, neg]).unwrap()
    }

    #[test]
    fn two_curve_cusum() {
        let (_, scores) = project(&pm_sample(), 1).unwrap();
        let c = cusum_matrix(&scores).unwrap();
        assert_eq!(c.row(0).len(), 3);
        assert_eq!(c.at(0, 0), 0.0);
        assert!((c.at(0, 1).abs() - 1.0).abs() < 1e-10);
        assert!(c.at(0, 2).abs() < 1e-10);
    }

    #[test]
    fn cusum_rejects_floored_component() {
        let s = ScoreMatrix::from_parts(2, vec![1.0, -1.0], vec![1e-13], 1e-12).unwrap();
        assert!(matches!(cusum_matrix(&s), Err(Error::DegenerateComponent { .. })));
    }

    #[test]
    fn from_values_validation() {
        assert!(CusumMatrix::from_values(1, 2, vec![0.0, 1.0, 0.0]).is_ok());
        assert!(CusumMatrix::from_values(1, 2, vec![0.1, 1.0, 0.0]).is_err());
        assert!(CusumMatrix::from_values(1, 2, vec![0.0, 1.0, 0.5]).is_err());
        assert!(CusumMatrix::from_values(1, 2, vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn z_process_endpoints_and_empty_sum() {
        let mut rng = stream_rng(1, 0, 0);
        let s = generate_bm_sample_with(&mut rng, 40, 50).unwrap();
        let (_, scores) = project(&s, 4).unwrap();
        let z = z_process(&cusum_matrix(&scores).unwrap());
        for k in 0..=4 {
            assert_eq!(z.value(k, 0), 0.0);
            assert_eq!(z.value(k, 40), 0.0);
            assert_eq!(z.at(k as f64 / 4.0, 1.0), 0.0);
        }
        assert_eq!(z.at(0.2, 0.5), 0.0);
        // Step structure.
        assert_eq!(z.at(0.5, 0.3), z.at(0.74, 0.3249));

        let (_, one) = project(&s, 1).unwrap();
        let z1 = z_process(&cusum_matrix(&one).unwrap());
        for m in 0..=40 {
            assert_eq!(z1.at(0.99, m as f64 / 40.0), 0.0);
        }
        assert_eq!(z1.cvm_integral(), 0.0);
    }

    #[test]
    fn corollary_standardization() {
        let z = CorollaryVariant::CvmSum.standardize(10.0 / 6.0, 10, None).unwrap();
        assert!(z.abs() < 1e-15);
        assert!((normal_upper_tail(z) - 0.5).abs() < 1e-15);
        let z = CorollaryVariant::SupSum.standardize(2.5, 10, None).unwrap();
        assert!(z.abs() < 1e-15);
        assert!(matches!(
            CorollaryVariant::SupBridge.standardize(1.0, 3, None),
            Err(Error::Configuration(_))
        ));
        let m = BridgeSupMoments::analytic();
        let z = CorollaryVariant::SupBridge.standardize(3.0 * m.mu0, 3, Some(&m)).unwrap();
        assert!(z.abs() < 1e-12);
    }

    #[test]
    fn i_n_needs_two_components_and_vanishes_at_n() {
        let c = CusumMatrix::from_values(1, 2, vec![0.0, 1.0, 0.0]).unwrap();
        assert!(matches!(estimate_changepoint(&c), Err(Error::Dimension { .. })));
        let c = CusumMatrix::from_values(2, 4, vec![0.0, 1.0, 2.0, 1.0, 0.0, 0.0, 0.5, 0.0, -0.5, 0.0])
            .unwrap();
        let prof = i_n_profile(&c).unwrap();
        assert_eq!(prof.len(), 4);
        assert_eq!(prof[3], 0.0);
    }

    #[test]
    fn ties_resolve_to_smallest_index() {
        // Symmetric profile: ℓ = 1 and ℓ = 3 give identical I_N.
        let c = CusumMatrix::from_values(2, 4, vec![0.0, 3.0, 0.0, 3.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0])
            .unwrap();
        let prof = i_n_profile(&c).unwrap();
        assert_eq!(prof[0], prof[2]);
        assert!(prof[0] > prof[1]);
        assert_eq!(estimate_changepoint(&c).unwrap(), 1);
    }

    #[test]
    fn missing_law_is_a_configuration_error() {
        assert!(matches!(
            cvm2d_test(&pm_sample(), 1, None),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn huge_shift_is_detected_and_located() {
        let law = simulate_tld_with(49, 400, 5000, 3).unwrap();
        let mut rng = stream_rng(2, 0, 0);
        let s = generate_bm_sample_with(&mut rng, 100, 100).unwrap();
        let s = inject_shift(&s, 100.0, ShiftTarget::After(50)).unwrap();
        let out = cvm2d_test(&s, 3, Some(&law)).unwrap();
        assert!(out.p_value < 0.001);
        assert_eq!(out.diagnostics.spacings.len(), 3);
        let (_, scores) = project(&s, 3).unwrap();
        let theta = estimate_changepoint(&cusum_matrix(&scores).unwrap()).unwrap();
        assert_eq!(theta, 50);
    }

    #[test]
    fn segmentation_configuration_checks() {
        let law = simulate_tld_with(5, 100, 500, 3).unwrap();
        let s = pm_sample();
        assert!(binary_segmentation(&s, &[], 0.05, &law, 8).is_err());
        assert!(binary_segmentation(&s, &[1, 3], 0.05, &law, 8).is_err());
        assert!(binary_segmentation(&s, &[3], 1.5, &law, 8).is_err());
        assert!(binary_segmentation(&s, &[3], 0.05, &law, 2).is_err());
        let tree = binary_segmentation(&s, &[3], 0.05, &law, 8).unwrap();
        assert_eq!(tree.nodes.len(), 1);
        assert_eq!(tree.nodes[0].status, NodeStatus::TooShort);
    }

    #[test]
    fn short_segments_skip_large_d() {
        let law = simulate_tld_with(10, 100, 2000, 3).unwrap();
        let mut rng = stream_rng(4, 0, 0);
        let s = generate_bm_sample_with(&mut rng, 7, 100).unwrap();
        let tree = binary_segmentation(&s, &[3, 4, 5, 8, 9], 0.05, &law, 4).unwrap();
        let p = &tree.nodes[0].p_values;
        assert!(p[0].is_some() && p[1].is_some());
        assert!(p[2].is_none() && p[3].is_none() && p[4].is_none());
    }
}
