//! Simulate the limit law and print its critical values.
//!
//! cargo run --release --example critical_values -- [K] [reps] [seed]

use fdproj::limitdist::simulate_tld;

fn main() -> fdproj::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let k = args.first().copied().unwrap_or(49) as usize;
    let reps = args.get(1).copied().unwrap_or(100_000) as usize;
    let seed = args.get(2).copied().unwrap_or(1);

    let law = simulate_tld(k, reps, seed)?;
    println!("K = {k}, {reps} draws, seed {seed}");
    println!("mean {:.6} (series expectation {:.6})", law.mean(), law.expected_mean());
    for (alpha, cv) in law.critical_values() {
        println!("alpha {alpha:.2}: {cv:.6}");
    }
    Ok(())
}
