//! Reading curves from CSV files and Fourier smoothing.
//!
//! Three layouts are understood:
//!
//! - curves as rows: a header of grid points `t_0, …, t_{T−1}`, then one row per curve;
//! - long format: columns `curve_id, t, value`;
//! - daily series: columns `date, value` with ISO dates, one curve per calendar
//!   year. Day 366 of leap years is dropped and day `k + 1` maps to `t = k/364`.
//!
//! Each curve is fitted by least squares on `{1, √2 sin(2πkt), √2 cos(2πkt)}`
//! and re-evaluated on a uniform grid, unless smoothing is disabled, in which
//! case the curves must share a grid and have no missing values.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::sync::Arc;

use chrono::{Datelike, NaiveDate};
use nalgebra::{DMatrix, DVector};

use crate::curves::{FunctionalSample, Grid};
use crate::report::fmt_float;
use crate::{Error, Result};

pub const DEFAULT_BASIS_SIZE: usize = 49;
pub const DEFAULT_GRID_SIZE: usize = 365;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    CurvesAsRows,
    Long,
    Daily,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothing {
    /// Least-squares Fourier fit with `basis_size` functions, re-evaluated on
    /// `grid_size` equispaced points.
    Fourier { basis_size: usize, grid_size: usize },
    /// Keep the raw values on the file's own grid.
    None,
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing::Fourier {
            basis_size: DEFAULT_BASIS_SIZE,
            grid_size: DEFAULT_GRID_SIZE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    /// Fit each curve from its observed points only.
    #[default]
    Drop,
    /// Any missing value is an error.
    Reject,
}

#[derive(Debug, Clone)]
pub struct IngestionConfig {
    pub path: PathBuf,
    pub layout: Layout,
    pub smoothing: Smoothing,
    pub missing: MissingPolicy,
}

impl IngestionConfig {
    pub fn new(path: impl Into<PathBuf>, layout: Layout) -> Self {
        Self {
            path: path.into(),
            layout,
            smoothing: Smoothing::default(),
            missing: MissingPolicy::default(),
        }
    }
}

/// A sample together with one label per curve (row number, curve id or year).
#[derive(Debug, Clone)]
pub struct Ingested {
    pub sample: FunctionalSample,
    pub labels: Vec<String>,
}

/// The orthonormal Fourier system on `[0, 1]`: the constant, then
/// `√2 sin(2πkt), √2 cos(2πkt)` for `k = 1, …, (size − 1)/2`.
#[derive(Debug, Clone, Copy)]
pub struct FourierBasis {
    size: usize,
}

impl FourierBasis {
    pub fn new(size: usize) -> Result<Self> {
        if size < 3 || size % 2 == 0 {
            return Err(Error::Configuration(format!(
                "basis size must be odd and at least 3, got {size}"
            )));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn eval(&self, t: f64) -> impl Iterator<Item = f64> {
        let r2 = std::f64::consts::SQRT_2;
        std::iter::once(1.0).chain((1..=self.size / 2).flat_map(move |k| {
            let arg = 2.0 * PI * k as f64 * t;
            [r2 * arg.sin(), r2 * arg.cos()]
        }))
    }

    fn design(&self, ts: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(ts.len(), self.size);
        for (i, &t) in ts.iter().enumerate() {
            for (j, b) in self.eval(t).enumerate() {
                m[(i, j)] = b;
            }
        }
        m
    }

    /// Least-squares coefficients for observations `(ts, ys)`.
    pub fn fit(&self, ts: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
        if ts.len() < self.size {
            return Err(Error::InsufficientSample {
                needed: self.size,
                got: ts.len(),
            });
        }
        let svd = self.design(ts).svd(true, true);
        let coef = svd
            .solve(&DVector::from_column_slice(ys), 1e-12)
            .map_err(|e| Error::DegenerateInput(e.to_string()))?;
        Ok(coef.iter().copied().collect())
    }

    pub fn evaluate(&self, coef: &[f64], ts: &[f64]) -> Vec<f64> {
        ts.iter()
            .map(|&t| self.eval(t).zip(coef).map(|(b, c)| b * c).sum())
            .collect()
    }
}

/// Observations of one curve before smoothing.
struct RawCurve {
    label: String,
    ts: Vec<f64>,
    ys: Vec<Option<f64>>,
}

fn parse_value(cell: &str, line: usize) -> Result<Option<f64>> {
    let cell = cell.trim();
    if cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    cell.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::Parse {
            line,
            message: format!("`{cell}` is not a number"),
        })
}

fn parse_required(cell: &str, line: usize, what: &str) -> Result<f64> {
    parse_value(cell, line)?.ok_or_else(|| Error::Parse {
        line,
        message: format!("missing {what}"),
    })
}

fn line_of(rec: &csv::StringRecord) -> usize {
    rec.position().map(|p| p.line() as usize).unwrap_or(0)
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn read_rows<R: Read>(input: R) -> Result<Vec<RawCurve>> {
    let mut rdr = reader(input);
    let header = rdr.headers()?.clone();
    let ts = header
        .iter()
        .map(|c| parse_required(c, 1, "grid point"))
        .collect::<Result<Vec<_>>>()?;
    let mut curves = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let label = curves.len().to_string();
        if rec.len() != ts.len() {
            return Err(Error::Row {
                curve: label,
                message: format!("line {line}: {} values for {} grid points", rec.len(), ts.len()),
            });
        }
        let ys = rec
            .iter()
            .map(|c| parse_value(c, line))
            .collect::<Result<Vec<_>>>()?;
        curves.push(RawCurve {
            label,
            ts: ts.clone(),
            ys,
        });
    }
    Ok(curves)
}

fn read_long<R: Read>(input: R) -> Result<Vec<RawCurve>> {
    let mut rdr = reader(input);
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut curves: Vec<RawCurve> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected curve_id,t,value, got {} fields", rec.len()),
            });
        }
        let id = rec[0].to_string();
        let t = parse_required(&rec[1], line, "t")?;
        let y = parse_value(&rec[2], line)?;
        let slot = *index.entry(id.clone()).or_insert_with(|| {
            curves.push(RawCurve {
                label: id,
                ts: Vec::new(),
                ys: Vec::new(),
            });
            curves.len() - 1
        });
        curves[slot].ts.push(t);
        curves[slot].ys.push(y);
    }
    Ok(curves)
}

fn read_daily<R: Read>(input: R) -> Result<Vec<RawCurve>> {
    let mut rdr = reader(input);
    let mut index: HashMap<i32, usize> = HashMap::new();
    let mut curves: Vec<RawCurve> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected date,value, got {} fields", rec.len()),
            });
        }
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d").map_err(|e| Error::Parse {
            line,
            message: format!("bad date `{}`: {e}", &rec[0]),
        })?;
        let y = parse_value(&rec[1], line)?;
        let day = date.ordinal0();
        if day >= 365 {
            continue;
        }
        let slot = *index.entry(date.year()).or_insert_with(|| {
            curves.push(RawCurve {
                label: date.year().to_string(),
                ts: Vec::new(),
                ys: Vec::new(),
            });
            curves.len() - 1
        });
        curves[slot].ts.push(day as f64 / 364.0);
        curves[slot].ys.push(y);
    }
    Ok(curves)
}

/// Affine map of `[lo, hi]` onto `[0, 1]`.
fn rescale(curves: &mut [RawCurve]) -> Result<()> {
    let lo = curves.iter().flat_map(|c| &c.ts).copied().fold(f64::INFINITY, f64::min);
    let hi = curves.iter().flat_map(|c| &c.ts).copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::InvalidGrid("time points must span a non-empty interval".into()));
    }
    if lo == 0.0 && hi == 1.0 {
        return Ok(());
    }
    for c in curves.iter_mut() {
        c.ts.iter_mut().for_each(|t| *t = (*t - lo) / (hi - lo));
    }
    Ok(())
}

/// Parse `input` with `layout` and apply smoothing.
pub fn ingest_reader<R: Read>(
    input: R,
    layout: Layout,
    smoothing: Smoothing,
    missing: MissingPolicy,
) -> Result<Ingested> {
    let mut curves = match layout {
        Layout::CurvesAsRows => read_rows(input)?,
        Layout::Long => read_long(input)?,
        Layout::Daily => read_daily(input)?,
    };
    if curves.len() < 2 {
        return Err(Error::InsufficientSample {
            needed: 2,
            got: curves.len(),
        });
    }
    if missing == MissingPolicy::Reject {
        if let Some(c) = curves.iter().find(|c| c.ys.iter().any(Option::is_none)) {
            return Err(Error::Row {
                curve: c.label.clone(),
                message: "missing value".into(),
            });
        }
    }
    rescale(&mut curves)?;
    let labels: Vec<String> = curves.iter().map(|c| c.label.clone()).collect();
    let sample = match smoothing {
        Smoothing::None => raw_sample(curves)?,
        Smoothing::Fourier {
            basis_size,
            grid_size,
        } => smooth_sample(curves, basis_size, grid_size)?,
    };
    Ok(Ingested { sample, labels })
}

pub fn ingest(config: &IngestionConfig) -> Result<Ingested> {
    let file = std::fs::File::open(&config.path)?;
    ingest_reader(
        std::io::BufReader::new(file),
        config.layout,
        config.smoothing,
        config.missing,
    )
}

fn raw_sample(curves: Vec<RawCurve>) -> Result<FunctionalSample> {
    let ts = curves[0].ts.clone();
    let mut values = Vec::with_capacity(curves.len() * ts.len());
    for c in &curves {
        if c.ts != ts {
            return Err(Error::Row {
                curve: c.label.clone(),
                message: "curves must share one grid when smoothing is off".into(),
            });
        }
        for y in &c.ys {
            values.push(y.ok_or_else(|| Error::Row {
                curve: c.label.clone(),
                message: "missing value; enable smoothing to fit around gaps".into(),
            })?);
        }
    }
    let grid = Arc::new(Grid::trapezoid(ts)?);
    FunctionalSample::from_flat(grid, curves.len(), values)
}

fn smooth_sample(curves: Vec<RawCurve>, basis_size: usize, grid_size: usize) -> Result<FunctionalSample> {
    let basis = FourierBasis::new(basis_size)?;
    if grid_size < basis_size {
        return Err(Error::Configuration(format!(
            "grid size {grid_size} is below the basis size {basis_size}"
        )));
    }
    let grid = Arc::new(Grid::uniform(grid_size)?);
    let mut values = Vec::with_capacity(curves.len() * grid_size);
    for c in &curves {
        let (ts, ys): (Vec<f64>, Vec<f64>) = c
            .ts
            .iter()
            .zip(&c.ys)
            .filter_map(|(t, y)| y.map(|y| (*t, y)))
            .unzip();
        let coef = basis.fit(&ts, &ys).map_err(|e| match e {
            Error::InsufficientSample { needed, got } => Error::Row {
                curve: c.label.clone(),
                message: format!("{got} observed points, need at least {needed}"),
            },
            other => other,
        })?;
        values.extend(basis.evaluate(&coef, grid.points()));
    }
    FunctionalSample::from_flat(grid, curves.len(), values)
}

/// Curves-as-rows CSV with 17 significant digits, readable by [`ingest_reader`]
/// with [`Smoothing::None`].
pub fn write_sample_csv<W: Write>(sample: &FunctionalSample, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(sample.grid().points().iter().map(|t| fmt_float(*t)))?;
    for c in sample.curves() {
        w.write_record(c.iter().map(|v| fmt_float(*v)))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::simharness::generate_bm_sample;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn days() -> Vec<f64> {
        (0..365).map(|k| k as f64 / 364.0).collect()
    }

    #[test]
    fn basis_size_must_be_odd() {
        assert!(FourierBasis::new(2).is_err());
        assert!(FourierBasis::new(48).is_err());
        assert!(FourierBasis::new(1).is_err());
        assert_eq!(FourierBasis::new(49).unwrap().eval(0.3).count(), 49);
    }

    #[test]
    fn in_span_functions_are_reproduced() {
        let b = FourierBasis::new(49).unwrap();
        let ts = days();
        let ys: Vec<f64> = ts.iter().map(|t| 2f64.sqrt() * (2.0 * PI * t).sin()).collect();
        let fit = b.evaluate(&b.fit(&ts, &ys).unwrap(), &ts);
        let err = fit.iter().zip(&ys).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");

        let c = vec![3.25; 365];
        let fit = b.evaluate(&b.fit(&ts, &c).unwrap(), &ts);
        assert!(fit.iter().all(|v| (v - 3.25).abs() < 1e-12));
    }

    #[test]
    fn white_noise_keeps_a_basis_share_of_energy() {
        let b = FourierBasis::new(49).unwrap();
        let ts = days();
        let mut rng = stream_rng(1, 0, 0);
        let mut ratio = 0.0;
        for _ in 0..200 {
            let ys: Vec<f64> = (0..365).map(|_| rng.sample(StandardNormal)).collect();
            let fit = b.evaluate(&b.fit(&ts, &ys).unwrap(), &ts);
            let rss: f64 = fit.iter().zip(&ys).map(|(f, y)| (f - y).powi(2)).sum();
            let tss: f64 = ys.iter().map(|y| y * y).sum();
            ratio += rss / tss / 200.0;
        }
        let expect = 1.0 - 49.0 / 365.0;
        assert!((ratio - expect).abs() < 0.1 * expect, "{ratio}");
    }

    #[test]
    fn raw_round_trip_is_bitwise() {
        let s = generate_bm_sample(5, 30, 2).unwrap();
        let mut buf = Vec::new();
        write_sample_csv(&s, &mut buf).unwrap();
        let back = ingest_reader(&buf[..], Layout::CurvesAsRows, Smoothing::None, MissingPolicy::Reject)
            .unwrap();
        assert_eq!(back.sample.values(), s.values());
        assert_eq!(back.sample.grid().points(), s.grid().points());
        assert_eq!(back.labels, ["0", "1", "2", "3", "4"]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "0,0.5,1\n1,2,3\n4,x,6\n";
        let err = ingest_reader(text.as_bytes(), Layout::CurvesAsRows, Smoothing::None, MissingPolicy::Drop)
            .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn short_rows_name_the_curve() {
        let text = "0,0.5,1\n1,2,3\n4,5\n";
        let err = ingest_reader(text.as_bytes(), Layout::CurvesAsRows, Smoothing::None, MissingPolicy::Drop)
            .unwrap_err();
        assert!(matches!(err, Error::Row { ref curve, .. } if curve == "1"), "{err}");
    }

    #[test]
    fn missing_values() {
        let text = "0,0.5,1\n1,,3\n4,5,6\n";
        assert!(matches!(
            ingest_reader(text.as_bytes(), Layout::CurvesAsRows, Smoothing::None, MissingPolicy::Drop),
            Err(Error::Row { .. })
        ));
        assert!(matches!(
            ingest_reader(text.as_bytes(), Layout::CurvesAsRows, Smoothing::default(), MissingPolicy::Reject),
            Err(Error::Row { .. })
        ));
        // Too few observed points for a 3-function fit.
        let err = ingest_reader(
            text.as_bytes(),
            Layout::CurvesAsRows,
            Smoothing::Fourier { basis_size: 3, grid_size: 5 },
            MissingPolicy::Drop,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Row { ref curve, .. } if curve == "0"), "{err}");
    }

    #[test]
    fn long_format_groups_by_id_and_rescales() {
        let mut text = String::from("curve_id,t,value\n");
        for id in ["a", "b"] {
            for k in 0..=10 {
                text.push_str(&format!("{id},{},{}\n", 10 + 2 * k, if id == "a" { 1.0 } else { -1.0 }));
            }
        }
        let out = ingest_reader(
            text.as_bytes(),
            Layout::Long,
            Smoothing::Fourier { basis_size: 3, grid_size: 11 },
            MissingPolicy::Drop,
        )
        .unwrap();
        assert_eq!(out.labels, ["a", "b"]);
        assert!(out.sample.curve(0).iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(out.sample.curve(1).iter().all(|v| (v + 1.0).abs() < 1e-12));
    }

    #[test]
    fn daily_series_drop_leap_day_and_split_years() {
        let mut text = String::from("date,value\n");
        for year in [1999, 2000] {
            let mut d = NaiveDate::from_ymd_opt(year, 1, 1).unwrap();
            while d.year() == year {
                let t = d.ordinal0().min(364) as f64 / 364.0;
                let v = if d.ordinal() == 366 { 1e6 } else { (2.0 * PI * t).cos() };
                text.push_str(&format!("{d},{v}\n"));
                d = d.succ_opt().unwrap();
            }
        }
        let out = ingest_reader(text.as_bytes(), Layout::Daily, Smoothing::default(), MissingPolicy::Drop)
            .unwrap();
        assert_eq!(out.labels, ["1999", "2000"]);
        assert_eq!(out.sample.grid_len(), 365);
        for c in out.sample.curves() {
            let err = c
                .iter()
                .zip(out.sample.grid().points())
                .map(|(v, t)| (v - (2.0 * PI * t).cos()).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-8, "{err}");
        }
    }

    #[test]
    fn grid_must_hold_the_basis() {
        let text = "0,0.5,1\n1,2,3\n4,5,6\n";
        let err = ingest_reader(
            text.as_bytes(),
            Layout::CurvesAsRows,
            Smoothing::Fourier { basis_size: 3, grid_size: 2 },
            MissingPolicy::Drop,
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }
}
