//! Scalar whole-file placement: the measured rate approaches the closed-form
//! bound as each user asks for more files.

use coded_caching::analysis::{thm5_bound, thm5_regime};
use coded_caching::harness::{monte_carlo, Scheme};
use coded_caching::model::{zipf, RequestMode, SystemParams};
use num_rational::Ratio;

fn main() -> coded_caching::Result<()> {
    let q = zipf(12, 0.0)?;
    println!("L,mean_rate,std_error,bound,ratio,threshold");
    for l in [1, 2, 4, 6, 8, 12] {
        let params = SystemParams::new(3, 12, Ratio::from_integer(6), l, 1)?;
        let report = monte_carlo(&params, &Scheme::Sup, &q, RequestMode::Distinct, 500, 99)?;
        let bound = thm5_bound(&params)?.value();
        let regime = thm5_regime(&params)?;
        println!(
            "{l},{:.4},{:.4},{bound},{:.4},{}",
            report.mean_rate,
            report.std_error,
            report.mean_rate / bound,
            regime.threshold
        );
    }
    Ok(())
}
