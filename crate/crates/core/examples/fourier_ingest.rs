//! Read a daily series, smooth each year with 49 Fourier functions and
//! summarize the principal components.
//!
//! cargo run --example fourier_ingest -- [daily.csv]
//!
//! Without an argument a synthetic series is generated first.

use std::f64::consts::PI;
use std::io::Write;

use chrono::Datelike;

use fdproj::fpca::{eigendecompose_sample, variance_explained};
use fdproj::ingest::{ingest, IngestionConfig, Layout};
use rand::Rng;

fn synthetic(path: &std::path::Path) -> std::io::Result<()> {
    let mut rng = fdproj::rng::stream_rng(3, 0, 0);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "date,value")?;
    let mut date = chrono::NaiveDate::from_ymd_opt(1950, 1, 1).unwrap();
    while date.year() < 1980 {
        let t = date.ordinal0() as f64 / 365.0;
        let v = 20.0 - 6.0 * (2.0 * PI * t).cos() + 3.0 * (rng.random::<f64>() - 0.5);
        writeln!(f, "{date},{v:.1}")?;
        date = date.succ_opt().unwrap();
    }
    Ok(())
}

fn main() -> fdproj::Result<()> {
    let path = match std::env::args().nth(1) {
        Some(p) => p.into(),
        None => {
            let p = std::env::temp_dir().join("fdproj_daily.csv");
            synthetic(&p)?;
            p
        }
    };
    let data = ingest(&IngestionConfig::new(&path, Layout::Daily))?;
    println!("{} curves on {} points", data.sample.n_curves(), data.sample.grid_len());
    let eig = eigendecompose_sample(&data.sample, 10)?;
    for (k, f) in variance_explained(&eig)?.iter().enumerate().take(10) {
        println!("f_{} = {f:.4}", k + 1);
    }
    Ok(())
}
