//! Two-sample mean test on Brownian motions with and without a shift.

use fdproj::simharness::{generate_bm_sample, inject_shift, ShiftTarget};
use fdproj::twosample::two_sample_test;

fn main() -> fdproj::Result<()> {
    let x = generate_bm_sample(100, 500, 1)?;
    let y = generate_bm_sample(100, 500, 2)?;
    for a in [0.0, 0.5, 1.0] {
        let shifted = inject_shift(&y, a, ShiftTarget::All)?;
        let o = two_sample_test(&x, &shifted, 3)?;
        println!("a = {a:.1}: D = {:8.3}  z = {:7.3}  p = {:.4}", o.d_hat, o.z, o.p_value);
    }
    Ok(())
}
