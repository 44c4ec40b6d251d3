//! Fraction of Monte Carlo trials whose rate exceeds the random-placement
//! bound by more than 5%, as the packet count grows.

use coded_caching::analysis::{thm1_bound, CachedMass};
use coded_caching::harness::{monte_carlo, Scheme};
use coded_caching::model::{zipf, RequestMode, SystemParams};
use coded_caching::placement::uniform_distribution;
use num_rational::Ratio;

fn main() -> coded_caching::Result<()> {
    let q = zipf(10, 0.0)?;
    let p = uniform_distribution(10)?;
    for b in [10, 100, 1000] {
        let params = SystemParams::new(4, 10, Ratio::from_integer(2), 2, b)?;
        let bound = thm1_bound(&q, &p, &params, CachedMass::Verbatim)?.value();
        let start = std::time::Instant::now();
        let report = monte_carlo(&params, &Scheme::Up, &q, RequestMode::Iid, 100, 2024)?;
        let over = report
            .trials
            .iter()
            .filter(|t| t.rate > 1.05 * bound)
            .count();
        println!(
            "B={b:5} bound={bound:.4} mean={:.4} se={:.4} above={over}/100 ({:.2?})",
            report.mean_rate,
            report.std_error,
            start.elapsed()
        );
    }
    Ok(())
}
