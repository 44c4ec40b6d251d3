//! Zipf popularity and the two request models.

use coded_caching::model::{sample_demands, zipf, RequestMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> coded_caching::Result<()> {
    let (m, users, requests, draws) = (8, 4, 3, 20_000);
    let q = zipf(m, 0.8)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    let mut counts = [vec![0usize; m], vec![0usize; m]];
    for (slot, mode) in [RequestMode::Iid, RequestMode::Distinct]
        .into_iter()
        .enumerate()
    {
        for _ in 0..draws {
            let d = sample_demands(&q, users, requests, mode, &mut rng)?;
            for u in 0..users {
                for &f in d.column(u) {
                    counts[slot][f] += 1;
                }
            }
        }
    }

    let total = (draws * users * requests) as f64;
    println!("file,q,iid_freq,distinct_freq");
    for (f, (&qf, (iid, distinct))) in q
        .probs()
        .iter()
        .zip(counts[0].iter().zip(&counts[1]))
        .enumerate()
    {
        println!(
            "{},{qf:.4},{:.4},{:.4}",
            f + 1,
            *iid as f64 / total,
            *distinct as f64 / total
        );
    }
    Ok(())
}
