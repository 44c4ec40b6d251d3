//! Caching phase: caching distributions and the random cache samplers.

use std::collections::BTreeMap;

use num_rational::Ratio;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{neumaier_sum, CacheSize, SystemParams, SUM_TOLERANCE};

/// Per-file caching mass `p`. User `u` stores about `p_f * M * B` packets of
/// file `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CachingDistribution {
    probs: Vec<f64>,
}

impl CachingDistribution {
    /// Validates `sum p = 1` and `0 <= p_f <= 1/M`.
    pub fn new(probs: Vec<f64>, cache: CacheSize) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution(
                "empty caching distribution".into(),
            ));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidDistribution(
                "caching distribution entries must be finite and non-negative".into(),
            ));
        }
        let total = neumaier_sum(probs.iter().copied());
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "caching distribution sums to {total}"
            )));
        }
        if cache > Ratio::from_integer(1) {
            let cap = *cache.denom() as f64 / *cache.numer() as f64;
            if let Some((f, p)) = probs
                .iter()
                .enumerate()
                .find(|(_, &p)| p > cap * (1.0 + 1e-12))
            {
                return Err(Error::InvalidDistribution(format!(
                    "p_{} = {p} exceeds 1/M = {cap}",
                    f + 1
                )));
            }
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Uniform placement, `p_f = 1/m`.
pub fn uniform_distribution(m: usize) -> Result<CachingDistribution> {
    if m == 0 {
        return Err(Error::InvalidDistribution(
            "library size must be positive".into(),
        ));
    }
    Ok(CachingDistribution {
        probs: vec![1.0 / m as f64; m],
    })
}

/// Truncated uniform placement: the `m_tilde` most popular files share the
/// mass equally and the tail is never cached. `m_tilde = m` is uniform
/// placement.
pub fn rlfu_distribution(
    m: usize,
    m_tilde: usize,
    cache: CacheSize,
) -> Result<CachingDistribution> {
    if m_tilde == 0 || m_tilde > m {
        return Err(Error::InvalidArgument(format!(
            "cutoff must lie in 1..={m}, got {m_tilde}"
        )));
    }
    if Ratio::from_integer(m_tilde as u64) < cache {
        return Err(Error::InvalidArgument(format!(
            "cutoff {m_tilde} is below the cache size {cache}"
        )));
    }
    let mut probs = vec![0.0; m];
    probs[..m_tilde].fill(1.0 / m_tilde as f64);
    Ok(CachingDistribution { probs })
}

/// Number of packets of each file a user stores under `p`.
///
/// Each file gets `floor(p_f * M * B)`; the leftover of `floor(M * B)` goes
/// one packet at a time to the files with the largest fractional parts (ties
/// to the lower index). No file exceeds `B` and files with `p_f = 0` get
/// nothing.
pub fn packet_budgets(p: &CachingDistribution, params: &SystemParams) -> Vec<usize> {
    let b = params.packets;
    let budget = params.cache_packets();
    let scale = params.cache_f64() * b as f64;
    let raw: Vec<f64> = p.probs().iter().map(|&pf| pf * scale).collect();
    let mut counts: Vec<usize> = raw.iter().map(|&x| (x.floor() as usize).min(b)).collect();
    let mut used: usize = counts.iter().sum();

    let frac = |f: usize| raw[f] - raw[f].floor();
    while used > budget {
        // Float overshoot only; trim the file whose floor is least earned.
        let f = (0..counts.len())
            .filter(|&f| counts[f] > 0)
            .min_by(|&a, &b| frac(a).total_cmp(&frac(b)).then(b.cmp(&a)))
            .expect("positive count exists while over budget");
        counts[f] -= 1;
        used -= 1;
    }

    let mut order: Vec<usize> = (0..counts.len()).filter(|&f| p.probs()[f] > 0.0).collect();
    order.sort_by(|&a, &b| frac(b).total_cmp(&frac(a)).then(a.cmp(&b)));
    for f in order {
        if used == budget {
            break;
        }
        if counts[f] < b {
            counts[f] += 1;
            used += 1;
        }
    }
    counts
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlacementKind {
    /// Packet-level placement (RAP).
    Packetized,
    /// Whole-file placement with `B = 1` (SUP).
    Scalar,
}

/// Cache realization: for every user and file the sorted packet indices
/// stored at that user.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CacheConfiguration {
    users: usize,
    files: usize,
    packets: usize,
    kind: PlacementKind,
    sets: Vec<Vec<u32>>,
}

impl CacheConfiguration {
    /// Builds a configuration from explicit per-user, per-file packet lists
    /// (0-based). Lists are sorted; duplicates and out-of-range indices are
    /// rejected.
    pub fn from_sets(
        packets: usize,
        kind: PlacementKind,
        per_user: Vec<Vec<Vec<u32>>>,
    ) -> Result<Self> {
        let users = per_user.len();
        let files = per_user.first().map_or(0, Vec::len);
        if users == 0 || files == 0 || packets == 0 {
            return Err(Error::Dimension(
                "cache configuration must be non-empty".into(),
            ));
        }
        if kind == PlacementKind::Scalar && packets != 1 {
            return Err(Error::InvalidParams(
                "scalar placement requires B = 1".into(),
            ));
        }
        let mut sets = Vec::with_capacity(users * files);
        for (u, row) in per_user.into_iter().enumerate() {
            if row.len() != files {
                return Err(Error::Dimension(format!(
                    "user {} lists {} files, expected {files}",
                    u + 1,
                    row.len()
                )));
            }
            for (f, mut set) in row.into_iter().enumerate() {
                set.sort_unstable();
                let dup = set.windows(2).any(|w| w[0] == w[1]);
                if dup || set.last().is_some_and(|&b| b as usize >= packets) {
                    return Err(Error::Dimension(format!(
                        "invalid packet set for user {} file {}",
                        u + 1,
                        f + 1
                    )));
                }
                sets.push(set);
            }
        }
        Ok(Self {
            users,
            files,
            packets,
            kind,
            sets,
        })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn packets(&self) -> usize {
        self.packets
    }

    pub fn kind(&self) -> PlacementKind {
        self.kind
    }

    /// Sorted packet indices of file `f` cached at user `u`.
    pub fn cached(&self, user: usize, file: usize) -> &[u32] {
        &self.sets[user * self.files + file]
    }

    pub fn contains(&self, user: usize, file: usize, packet: usize) -> bool {
        self.cached(user, file)
            .binary_search(&(packet as u32))
            .is_ok()
    }

    /// Total packets stored at user `u`.
    pub fn load(&self, user: usize) -> usize {
        (0..self.files).map(|f| self.cached(user, f).len()).sum()
    }

    /// Serializes as `{scheme, users, files, packets, caches}` where `caches`
    /// maps 1-based user ids to 1-based file ids to 1-based packet lists.
    /// Empty file entries are omitted.
    pub fn to_json(&self) -> Result<String> {
        let mut caches = BTreeMap::new();
        for u in 0..self.users {
            let mut per_file = BTreeMap::new();
            for f in 0..self.files {
                let set = self.cached(u, f);
                if !set.is_empty() {
                    per_file.insert(f + 1, set.iter().map(|&b| b + 1).collect::<Vec<_>>());
                }
            }
            caches.insert(u + 1, per_file);
        }
        let doc = CacheDocument {
            scheme: self.kind,
            users: self.users,
            files: self.files,
            packets: self.packets,
            caches,
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CacheDocument = serde_json::from_str(text)?;
        let mut per_user = vec![vec![Vec::new(); doc.files]; doc.users];
        for (u, per_file) in doc.caches {
            if u == 0 || u > doc.users {
                return Err(Error::Dimension(format!("user id {u} out of range")));
            }
            for (f, set) in per_file {
                if f == 0 || f > doc.files {
                    return Err(Error::Dimension(format!("file id {f} out of range")));
                }
                if set.contains(&0) {
                    return Err(Error::Dimension("packet ids are 1-based".into()));
                }
                per_user[u - 1][f - 1] = set.into_iter().map(|b| b - 1).collect();
            }
        }
        Self::from_sets(doc.packets, doc.scheme, per_user)
    }
}

#[derive(Serialize, Deserialize)]
struct CacheDocument {
    scheme: PlacementKind,
    users: usize,
    files: usize,
    packets: usize,
    caches: BTreeMap<usize, BTreeMap<usize, Vec<u32>>>,
}

/// Random popularity-based packetized placement: every user independently
/// stores, for each file, a uniformly random subset of
/// [`packet_budgets`]`[f]` distinct packets.
pub fn rap_cache<R: Rng + ?Sized>(
    p: &CachingDistribution,
    params: &SystemParams,
    rng: &mut R,
) -> Result<CacheConfiguration> {
    params.validate()?;
    if p.len() != params.files {
        return Err(Error::Dimension(format!(
            "caching distribution has {} entries, library has {}",
            p.len(),
            params.files
        )));
    }
    let budgets = packet_budgets(p, params);
    let mut sets = Vec::with_capacity(params.users * params.files);
    for _ in 0..params.users {
        for &k in &budgets {
            let mut set: Vec<u32> = index::sample(rng, params.packets, k)
                .into_iter()
                .map(|b| b as u32)
                .collect();
            set.sort_unstable();
            sets.push(set);
        }
    }
    Ok(CacheConfiguration {
        users: params.users,
        files: params.files,
        packets: params.packets,
        kind: PlacementKind::Packetized,
        sets,
    })
}

/// Scalar uniform placement: every user stores `M` whole files chosen
/// uniformly at random. Requires `B = 1` and integer `M`.
pub fn sup_cache<R: Rng + ?Sized>(
    params: &SystemParams,
    rng: &mut R,
) -> Result<CacheConfiguration> {
    params.validate()?;
    if params.packets != 1 {
        return Err(Error::InvalidParams(format!(
            "scalar placement requires B = 1, got {}",
            params.packets
        )));
    }
    let cache = params.cache_files().ok_or_else(|| {
        Error::InvalidParams(format!(
            "scalar placement requires an integer cache size, got {}",
            params.cache
        ))
    })?;
    let mut sets = vec![Vec::new(); params.users * params.files];
    for u in 0..params.users {
        for f in index::sample(rng, params.files, cache) {
            sets[u * params.files + f] = vec![0];
        }
    }
    Ok(CacheConfiguration {
        users: params.users,
        files: params.files,
        packets: 1,
        kind: PlacementKind::Scalar,
        sets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(n: usize, m: usize, cache: u64, b: usize) -> SystemParams {
        SystemParams::new(n, m, Ratio::from_integer(cache), 1, b).unwrap()
    }

    #[test]
    fn uniform_examples() {
        assert_eq!(uniform_distribution(4).unwrap().probs(), &[0.25; 4]);
        assert_eq!(uniform_distribution(1).unwrap().probs(), &[1.0]);
        assert!(uniform_distribution(5000)
            .unwrap()
            .probs()
            .iter()
            .all(|&p| p == 2e-4));
        assert!(uniform_distribution(0).is_err());
    }

    #[test]
    fn rlfu_examples() {
        let one = Ratio::from_integer(1);
        assert_eq!(
            rlfu_distribution(5, 5, one).unwrap(),
            uniform_distribution(5).unwrap()
        );
        let two = Ratio::from_integer(2);
        assert_eq!(
            rlfu_distribution(5, 2, two).unwrap().probs(),
            &[0.5, 0.5, 0.0, 0.0, 0.0]
        );
        assert!(rlfu_distribution(5, 1, two).is_err());
        assert!(rlfu_distribution(5, 6, two).is_err());
        assert!(rlfu_distribution(5, 2, Ratio::new(5, 2)).is_err());
    }

    #[test]
    fn distribution_checks_cap() {
        let two = Ratio::from_integer(2);
        assert!(CachingDistribution::new(vec![0.7, 0.3], two).is_err());
        assert!(CachingDistribution::new(vec![0.7, 0.3], Ratio::from_integer(1)).is_ok());
        assert!(CachingDistribution::new(vec![0.5, 0.4], two).is_err());
    }

    #[test]
    fn budgets_use_capacity_exactly() {
        // p_f M B = 10/3 each: floors give 9, the leftover goes to file 1.
        let p = uniform_distribution(3).unwrap();
        let params = params(1, 3, 1, 10);
        assert_eq!(packet_budgets(&p, &params), vec![4, 3, 3]);

        let p =
            CachingDistribution::new(vec![0.5, 0.25, 0.25, 0.0], Ratio::from_integer(2)).unwrap();
        let params = params_frac(4, Ratio::new(3, 2), 5);
        // M B = 7.5 -> budget 7; raw = 3.75, 1.875, 1.875, 0.
        assert_eq!(packet_budgets(&p, &params), vec![3, 2, 2, 0]);
    }

    fn params_frac(m: usize, cache: CacheSize, b: usize) -> SystemParams {
        SystemParams::new(1, m, cache, 1, b).unwrap()
    }

    #[test]
    fn full_cache_stores_everything() {
        let p = uniform_distribution(2).unwrap();
        let params = params(5, 2, 2, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = rap_cache(&p, &params, &mut rng).unwrap();
        for u in 0..5 {
            for f in 0..2 {
                assert_eq!(c.cached(u, f), &[0, 1, 2, 3]);
            }
        }
    }

    #[test]
    fn zero_mass_files_are_not_cached() {
        let params = params(6, 5, 2, 8);
        let p = rlfu_distribution(5, 2, params.cache).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = rap_cache(&p, &params, &mut rng).unwrap();
        for u in 0..6 {
            assert!((2..5).all(|f| c.cached(u, f).is_empty()));
            assert_eq!(c.load(u), 16);
        }
    }

    #[test]
    fn rap_packet_frequency() {
        let p = uniform_distribution(4).unwrap();
        let params = params(1000, 4, 1, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let c = rap_cache(&p, &params, &mut rng).unwrap();
        let hits = (0..1000).filter(|&u| c.contains(u, 2, 5)).count() as f64;
        let freq = hits / 1000.0;
        let se = (0.25f64 * 0.75 / 1000.0).sqrt();
        assert!((freq - 0.25).abs() <= 3.0 * se, "{freq}");
    }

    #[test]
    fn sup_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = sup_cache(&params(4, 3, 3, 1), &mut rng).unwrap();
        assert!((0..4).all(|u| (0..3).all(|f| c.contains(u, f, 0))));
        let c = sup_cache(&params(4, 3, 0, 1), &mut rng).unwrap();
        assert!((0..4).all(|u| c.load(u) == 0));
        assert!(sup_cache(&params(4, 3, 1, 2), &mut rng).is_err());
        let half = SystemParams::new(4, 3, Ratio::new(3, 2), 1, 1).unwrap();
        assert!(sup_cache(&half, &mut rng).is_err());
    }

    #[test]
    fn sup_file_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let users = 100_000;
        let c = sup_cache(&params(users, 6, 2, 1), &mut rng).unwrap();
        let se = ((1.0 / 3.0) * (2.0 / 3.0) / users as f64).sqrt();
        for f in 0..6 {
            let freq = (0..users).filter(|&u| c.contains(u, f, 0)).count() as f64 / users as f64;
            assert!((freq - 1.0 / 3.0).abs() <= 3.0 * se, "file {f}: {freq}");
        }
    }

    #[test]
    fn users_are_independent() {
        // Covariance of "user 0 caches packet (0,0)" and "user 1 caches
        // packet (0,0)" over many seeds.
        let p = uniform_distribution(4).unwrap();
        let params = params(2, 4, 1, 8);
        let trials = 20_000;
        let (mut a, mut b, mut ab) = (0.0, 0.0, 0.0);
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = rap_cache(&p, &params, &mut rng).unwrap();
            let x = c.contains(0, 0, 0) as u8 as f64;
            let y = c.contains(1, 0, 0) as u8 as f64;
            a += x;
            b += y;
            ab += x * y;
        }
        let t = trials as f64;
        let cov = ab / t - (a / t) * (b / t);
        // Var of the product indicator is at most 1/4; 4 standard errors.
        assert!(cov.abs() < 4.0 * (0.25 / t).sqrt(), "covariance {cov}");
    }

    #[test]
    fn json_round_trip_and_format() {
        let c = CacheConfiguration::from_sets(
            3,
            PlacementKind::Packetized,
            vec![vec![vec![2, 0], vec![]], vec![vec![], vec![1]]],
        )
        .unwrap();
        let json = c.to_json().unwrap();
        assert_eq!(
            json,
            r#"{"scheme":"packetized","users":2,"files":2,"packets":3,"caches":{"1":{"1":[1,3]},"2":{"2":[2]}}}"#
        );
        assert_eq!(CacheConfiguration::from_json(&json).unwrap(), c);
        assert!(CacheConfiguration::from_json(&json.replace("[2]", "[0]")).is_err());
    }

    #[test]
    fn from_sets_rejects_duplicates() {
        let bad =
            CacheConfiguration::from_sets(3, PlacementKind::Packetized, vec![vec![vec![1, 1]]]);
        assert!(bad.is_err());
        let bad = CacheConfiguration::from_sets(3, PlacementKind::Packetized, vec![vec![vec![3]]]);
        assert!(bad.is_err());
    }

    proptest! {
        #[test]
        fn capacity_and_distinctness(
            n in 1usize..6,
            m in 1usize..12,
            b in 1usize..20,
            cache_num in 0u64..24,
            cache_den in 1u64..4,
            seed in any::<u64>(),
        ) {
            let cache = Ratio::new(cache_num, cache_den).min(Ratio::from_integer(m as u64));
            let params = SystemParams::new(n, m, cache, 1, b).unwrap();
            let p = uniform_distribution(m).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = rap_cache(&p, &params, &mut rng).unwrap();
            for u in 0..n {
                prop_assert_eq!(c.load(u), params.cache_packets());
                for f in 0..m {
                    let set = c.cached(u, f);
                    prop_assert!(set.len() <= b);
                    prop_assert!(set.windows(2).all(|w| w[0] < w[1]));
                }
            }
        }
    }
}
