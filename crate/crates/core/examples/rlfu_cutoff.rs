//! Truncation cutoff curve: bound value against the number of cached files.

use coded_caching::analysis::{cutoff_curve, optimize_mtilde, thm2_bound};
use coded_caching::model::{zipf, SystemParams};
use num_rational::Ratio;

fn main() -> coded_caching::Result<()> {
    let params = SystemParams::new(10, 1000, Ratio::from_integer(50), 1, 1)?;
    for alpha in [0.4, 0.8, 1.2] {
        let q = zipf(1000, alpha)?;
        let uniform = thm2_bound(&params)?.value();
        let (best, bound) = optimize_mtilde(&params, &q)?;
        println!(
            "alpha={alpha}: best m~={best} value={:.3} uniform={uniform:.3} ratio={:.3}",
            bound.value(),
            bound.value() / uniform
        );
        for (t, b) in cutoff_curve(&params, &q)?.into_iter().step_by(100) {
            println!("  m~={t:4} value={:.3} binding={}", b.value(), b.binding());
        }
    }
    Ok(())
}
