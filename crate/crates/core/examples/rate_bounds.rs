//! Analytical rate bounds as the number of requests per user grows.

use coded_caching::analysis::{
    corollary1_bound, optimize_mtilde, psi, thm1_bound, thm2_bound, CachedMass,
};
use coded_caching::model::{zipf, SystemParams};
use coded_caching::placement::uniform_distribution;
use num_rational::Ratio;

fn main() -> coded_caching::Result<()> {
    let (n, m) = (5, 40);
    let q = zipf(m, 0.8)?;
    let p = uniform_distribution(m)?;

    println!("L,psi,thm1,thm1_binding,uniform,cutoff_opt,m_tilde,cutoff_at_m");
    for l in [1, 2, 4, 8, 16] {
        let params = SystemParams::new(n, m, Ratio::from_integer(8), l, 1)?;
        let t1 = thm1_bound(&q, &p, &params, CachedMass::default())?;
        let (best, opt) = optimize_mtilde(&params, &q)?;
        println!(
            "{l},{:.4},{:.4},{},{:.4},{:.4},{best},{:.4}",
            psi(&q, &p, 8.0, n, l)?,
            t1.value(),
            t1.binding(),
            thm2_bound(&params)?.value(),
            opt.value(),
            corollary1_bound(&params, &q, m)?.value()
        );
    }
    Ok(())
}
