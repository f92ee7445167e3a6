//! Principal components of simulated Brownian motions against the
//! Karhunen–Loève spectrum `(π(k − 1/2))^{-2}`.

use fdproj::fpca::{project, variance_explained};
use fdproj::limitdist::wiener_eigenvalues;
use fdproj::simharness::generate_bm_sample;

fn main() -> fdproj::Result<()> {
    let sample = generate_bm_sample(500, 200, 3)?;
    let (eig, scores) = project(&sample, 5)?;
    let f = variance_explained(&eig)?;
    println!("k  empirical  theoretical  f_k");
    for (k, (lhat, l)) in eig.eigenvalues().iter().zip(wiener_eigenvalues(5)).enumerate() {
        println!("{}  {lhat:.5}    {l:.5}      {:.3}", k + 1, f[k]);
    }
    let var1 = scores.column(0).iter().map(|s| s * s).sum::<f64>() / scores.n() as f64;
    println!("variance of first scores: {var1:.5}");
    Ok(())
}
