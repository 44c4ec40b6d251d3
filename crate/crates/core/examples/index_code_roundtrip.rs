//! Encodes one delivery over GF(2^16) and decodes it at every user.

use coded_caching::codec::{decode, encode, Library, Payloads};
use coded_caching::coloring::gclc_color;
use coded_caching::conflict::build_conflict_graph;
use coded_caching::gf::GaloisField;
use coded_caching::model::{sample_demands, zipf, RequestMode, SystemParams};
use coded_caching::placement::{rap_cache, uniform_distribution};
use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> coded_caching::Result<()> {
    let field = GaloisField::new(16)?;
    let params = SystemParams::new(4, 6, Ratio::from_integer(2), 2, 6)?;
    let mut rng = ChaCha8Rng::seed_from_u64(23);

    let library = Library::random(6, 6, &field, &mut rng);
    let cache = rap_cache(&uniform_distribution(6)?, &params, &mut rng)?;
    let demands = sample_demands(&zipf(6, 0.6)?, 4, 2, RequestMode::Distinct, &mut rng)?;
    let g = build_conflict_graph(&cache, &demands, &params)?;
    let coloring = gclc_color(&g);
    let cw = encode(&g, &coloring, &library, &field)?;

    println!(
        "{} requested packets, {} colors, {} transmitted symbols",
        g.len(),
        coloring.num_colors(),
        cw.len()
    );
    for user in g.requesting_users() {
        let got = decode(user, &cw, &g, &library, &field)?;
        let ok = got.iter().all(|(&p, &s)| library.symbol(p) == Some(s));
        println!(
            "user {}: recovered {} packets, correct: {ok}",
            user + 1,
            got.len()
        );
    }
    Ok(())
}
