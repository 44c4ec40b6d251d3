//! Builds the delivery conflict graph and prints its arcs.

use coded_caching::conflict::build_conflict_graph;
use coded_caching::model::{sample_demands, zipf, RequestMode, SystemParams};
use coded_caching::placement::{rap_cache, uniform_distribution};
use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> coded_caching::Result<()> {
    let params = SystemParams::new(3, 4, Ratio::from_integer(2), 1, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cache = rap_cache(&uniform_distribution(4)?, &params, &mut rng)?;
    let demands = sample_demands(&zipf(4, 0.0)?, 3, 1, RequestMode::Iid, &mut rng)?;
    let g = build_conflict_graph(&cache, &demands, &params)?;

    println!("{} vertices, {} arcs", g.len(), g.edge_count());
    for (id, v) in g.vertices().iter().enumerate() {
        println!(
            "v{id}: user {} wants W{}.{} -> out-degree {}",
            v.user + 1,
            v.packet.file + 1,
            v.packet.index + 1,
            g.out_neighbors(id).len()
        );
    }
    print!("{}", g.to_edge_list());
    Ok(())
}
