//! Each greedy ordering against the best-of combination and the exact optimum.

use coded_caching::coloring::{color_with, exact_local_chromatic, gclc_color, Strategy};
use coded_caching::conflict::build_conflict_graph;
use coded_caching::model::{sample_demands, zipf, RequestMode, SystemParams};
use coded_caching::placement::{rap_cache, uniform_distribution};
use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> coded_caching::Result<()> {
    let params = SystemParams::new(3, 4, Ratio::from_integer(1), 1, 3)?;
    let q = zipf(4, 0.5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(17);

    println!("instance,vertices,canonical,label,packet,gclc,exact");
    for instance in 0..8 {
        let cache = rap_cache(&uniform_distribution(4)?, &params, &mut rng)?;
        let demands = sample_demands(&q, 3, 1, RequestMode::Iid, &mut rng)?;
        let g = build_conflict_graph(&cache, &demands, &params)?;
        let per: Vec<String> = Strategy::ALL
            .iter()
            .map(|&s| color_with(&g, s).transmissions().to_string())
            .collect();
        let exact = if g.len() <= 10 {
            exact_local_chromatic(&g)?.to_string()
        } else {
            "-".into()
        };
        println!(
            "{instance},{},{},{},{exact}",
            g.len(),
            per.join(","),
            gclc_color(&g).transmissions()
        );
    }
    Ok(())
}
