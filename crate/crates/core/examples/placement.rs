//! Packet budgets and random placement under uniform and truncated-uniform caching.

use coded_caching::model::SystemParams;
use coded_caching::placement::{
    packet_budgets, rap_cache, rlfu_distribution, uniform_distribution,
};
use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> coded_caching::Result<()> {
    let params = SystemParams::new(3, 6, Ratio::new(3, 2), 1, 4)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    for (name, p) in [
        ("uniform", uniform_distribution(6)?),
        ("truncated m~=3", rlfu_distribution(6, 3, params.cache)?),
    ] {
        let budgets = packet_budgets(&p, &params);
        let cache = rap_cache(&p, &params, &mut rng)?;
        println!(
            "{name}: budgets {budgets:?}, capacity {}",
            params.cache_packets()
        );
        for u in 0..params.users {
            let held: Vec<String> = (0..params.files)
                .filter(|&f| !cache.cached(u, f).is_empty())
                .map(|f| {
                    let ids: Vec<u32> = cache.cached(u, f).iter().map(|i| i + 1).collect();
                    format!("W{}{ids:?}", f + 1)
                })
                .collect();
            println!(
                "  user {} load {}: {}",
                u + 1,
                cache.load(u),
                held.join(" ")
            );
        }
    }
    Ok(())
}
