//! Empirical size and power of the Cramér–von-Mises test with 90% bands.
//!
//! cargo run --release --example size_power -- [reps]

use fdproj::limitdist::simulate_tld;
use fdproj::simharness::{run_size_power, Calibration, SimScenario, TestSelector};

fn main() -> fdproj::Result<()> {
    let reps = std::env::args().nth(1).map(|a| a.parse().expect("integer")).unwrap_or(200);
    let law = simulate_tld(49, 100_000, 1)?;
    let calib = Calibration { law: Some(&law), moments: None };
    let base = SimScenario::new(100).with_reps(reps).with_d_list(vec![3, 5, 10]).with_seed(7);

    let size = run_size_power(&base, TestSelector::Cvm2d, calib)?;
    let power = run_size_power(&base.clone().with_shift(1.0, Some(50)), TestSelector::Cvm2d, calib)?;
    let mut out = std::io::stdout().lock();
    size.write_csv(&mut out)?;
    power.write_csv(&mut out)?;
    Ok(())
}
