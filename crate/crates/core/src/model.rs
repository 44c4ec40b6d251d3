//! System parameters, demand distributions and random request matrices.
//!
//! Files and users are 0-based internally. Every external format (JSON cache
//! dumps, edge lists, CSV) shifts them to the 1-based labels `1..=m` and
//! `1..=n`.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cache capacity in file units. Rational so packetized schemes can use
/// fractional sizes such as `3/2`.
pub type CacheSize = Ratio<u64>;

/// Tolerance for the unit-sum invariant of probability vectors.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Parses a cache size written as an integer (`"3"`), a decimal (`"2.5"`)
/// or a fraction (`"5/2"`).
pub fn parse_cache_size(text: &str) -> Result<CacheSize> {
    let text = text.trim();
    let bad = || Error::InvalidParams(format!("cannot parse cache size {text:?}"));
    if let Some((num, den)) = text.split_once('/') {
        let num: u64 = num.trim().parse().map_err(|_| bad())?;
        let den: u64 = den.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(num, den));
    }
    if let Some((int, frac)) = text.split_once('.') {
        if frac.len() > 18 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let int: u64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let den = 10u64.pow(frac.len() as u32);
        let frac: u64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        let num = int
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(bad)?;
        return Ok(Ratio::new(num, den));
    }
    text.parse::<u64>()
        .map(Ratio::from_integer)
        .map_err(|_| bad())
}

/// The parameter tuple of one experiment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemParams {
    /// Number of users `n`.
    pub users: usize,
    /// Library size `m`.
    pub files: usize,
    /// Cache capacity `M`, in files.
    pub cache: CacheSize,
    /// Requests per user `L`.
    pub requests: usize,
    /// Packets per file `B`.
    pub packets: usize,
    pub seed: u64,
}

impl SystemParams {
    pub fn new(
        users: usize,
        files: usize,
        cache: CacheSize,
        requests: usize,
        packets: usize,
    ) -> Result<Self> {
        let params = Self {
            users,
            files,
            cache,
            requests,
            packets,
            seed: 0,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.users == 0 || self.files == 0 || self.requests == 0 || self.packets == 0 {
            return Err(Error::InvalidParams(format!(
                "n, m, L and B must be positive (n={}, m={}, L={}, B={})",
                self.users, self.files, self.requests, self.packets
            )));
        }
        if self.cache > Ratio::from_integer(self.files as u64) {
            return Err(Error::InvalidParams(format!(
                "cache size {} exceeds library size {}",
                self.cache, self.files
            )));
        }
        Ok(())
    }

    pub fn cache_f64(&self) -> f64 {
        *self.cache.numer() as f64 / *self.cache.denom() as f64
    }

    /// `Some(M)` when the cache size is a whole number of files.
    pub fn cache_files(&self) -> Option<usize> {
        self.cache
            .is_integer()
            .then(|| self.cache.to_integer() as usize)
    }

    /// Packet budget per user, `floor(M * B)`.
    pub fn cache_packets(&self) -> usize {
        (self.cache * Ratio::from_integer(self.packets as u64)).to_integer() as usize
    }
}

/// Per-request file popularity `q`, stored in non-increasing order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandDistribution {
    probs: Vec<f64>,
    /// `original[i]` is the caller's index of the file stored at rank `i`.
    original: Vec<usize>,
}

impl DemandDistribution {
    /// Builds a distribution from probabilities in any order. The input is
    /// re-sorted descending (stable, so equal entries keep their relative
    /// order) and the permutation is kept in [`Self::original_index`].
    ///
    /// Inputs summing to 1 within `1e-6` are renormalized; decimal files
    /// rarely sum to exactly one.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution(
                "empty probability vector".into(),
            ));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::InvalidDistribution(format!(
                "entry {} is {p}, expected a finite non-negative value",
                i + 1
            )));
        }
        let total = neumaier_sum(probs.iter().copied());
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {total}, expected 1"
            )));
        }
        let mut order: Vec<usize> = (0..probs.len()).collect();
        order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]));
        let sorted: Vec<f64> = order.iter().map(|&i| probs[i] / total).collect();
        Ok(Self {
            probs: sorted,
            original: order,
        })
    }

    /// Reads a newline-delimited list of decimal probabilities. Blank lines
    /// and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let probs = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                f64::from_str(l)
                    .map_err(|_| Error::InvalidDistribution(format!("bad probability {l:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(probs)
    }

    /// Uniform over `m` files.
    pub fn uniform(m: usize) -> Result<Self> {
        zipf(m, 0.0)
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

    pub fn original_index(&self) -> &[usize] {
        &self.original
    }

    /// Prefix sums `G_k = q_1 + ... + q_k`, with `G_0 = 0` at index 0.
    pub fn prefix_mass(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.probs.len() + 1);
        let mut acc = NeumaierSum::default();
        out.push(0.0);
        for &p in &self.probs {
            acc.add(p);
            out.push(acc.value());
        }
        out
    }
}

/// Zipf popularity `q_f = f^-alpha / sum_i i^-alpha`.
pub fn zipf(m: usize, alpha: f64) -> Result<DemandDistribution> {
    if m == 0 {
        return Err(Error::InvalidDistribution(
            "library size must be positive".into(),
        ));
    }
    if alpha < 0.0 || !alpha.is_finite() {
        return Err(Error::InvalidDistribution(format!(
            "Zipf exponent must be a finite non-negative number, got {alpha}"
        )));
    }
    let weights: Vec<f64> = (1..=m).map(|f| (f as f64).powf(-alpha)).collect();
    let total = neumaier_sum(weights.iter().copied());
    Ok(DemandDistribution {
        probs: weights.into_iter().map(|w| w / total).collect(),
        original: (0..m).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RequestMode {
    /// Every request drawn independently from `q`; a user may repeat a file.
    #[default]
    Iid,
    /// A user's requests are pairwise distinct.
    Distinct,
}

impl FromStr for RequestMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "iid" => Ok(Self::Iid),
            "distinct" => Ok(Self::Distinct),
            other => Err(Error::InvalidArgument(format!(
                "unknown request mode {other:?}"
            ))),
        }
    }
}

impl fmt::Display for RequestMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Iid => "iid",
            Self::Distinct => "distinct",
        })
    }
}

/// The `L x n` request matrix, stored column-wise (one column per user).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DemandMatrix {
    columns: Vec<Vec<usize>>,
    files: usize,
    mode: RequestMode,
}

impl DemandMatrix {
    /// Wraps explicit columns of 0-based file ids.
    pub fn from_columns(columns: Vec<Vec<usize>>, files: usize, mode: RequestMode) -> Result<Self> {
        let requests = columns.first().map_or(0, Vec::len);
        if columns.is_empty() || requests == 0 {
            return Err(Error::Dimension("demand matrix must be non-empty".into()));
        }
        for (u, col) in columns.iter().enumerate() {
            if col.len() != requests {
                return Err(Error::Dimension(format!(
                    "user {} has {} requests, expected {requests}",
                    u + 1,
                    col.len()
                )));
            }
            if let Some(&f) = col.iter().find(|&&f| f >= files) {
                return Err(Error::Dimension(format!(
                    "user {} requests file {} outside 1..={files}",
                    u + 1,
                    f + 1
                )));
            }
            if mode == RequestMode::Distinct {
                let mut sorted = col.clone();
                sorted.sort_unstable();
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::Dimension(format!(
                        "user {} repeats a file in distinct mode",
                        u + 1
                    )));
                }
            }
        }
        Ok(Self {
            columns,
            files,
            mode,
        })
    }

    pub fn users(&self) -> usize {
        self.columns.len()
    }

    pub fn requests(&self) -> usize {
        self.columns[0].len()
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn mode(&self) -> RequestMode {
        self.mode
    }

    /// Requests of user `u` in draw order.
    pub fn column(&self, u: usize) -> &[usize] {
        &self.columns[u]
    }

    pub fn get(&self, request: usize, user: usize) -> usize {
        self.columns[user][request]
    }

    /// Sorted, deduplicated files requested by user `u`.
    pub fn distinct_files(&self, u: usize) -> Vec<usize> {
        let mut files = self.columns[u].clone();
        files.sort_unstable();
        files.dedup();
        files
    }
}

/// Samples an `L x n` request matrix.
///
/// In [`RequestMode::Distinct`] each user draws sequentially from `q`
/// renormalized over the files it has not yet requested.
pub fn sample_demands<R: Rng + ?Sized>(
    q: &DemandDistribution,
    users: usize,
    requests: usize,
    mode: RequestMode,
    rng: &mut R,
) -> Result<DemandMatrix> {
    if users == 0 || requests == 0 {
        return Err(Error::InvalidArgument("n and L must be positive".into()));
    }
    let m = q.len();
    let columns = match mode {
        RequestMode::Iid => {
            let dist = WeightedIndex::new(q.probs())
                .map_err(|e| Error::InvalidDistribution(e.to_string()))?;
            (0..users)
                .map(|_| (0..requests).map(|_| dist.sample(rng)).collect())
                .collect()
        }
        RequestMode::Distinct => {
            if requests > m {
                return Err(Error::InvalidArgument(format!(
                    "distinct mode needs L <= m (L={requests}, m={m})"
                )));
            }
            let support = q.probs().iter().filter(|&&p| p > 0.0).count();
            if support < requests {
                return Err(Error::InvalidArgument(format!(
                    "distinct mode needs at least L={requests} files with positive probability, found {support}"
                )));
            }
            let mut columns = Vec::with_capacity(users);
            for _ in 0..users {
                let mut weights = q.probs().to_vec();
                let mut col = Vec::with_capacity(requests);
                for _ in 0..requests {
                    let dist = WeightedIndex::new(&weights)
                        .map_err(|e| Error::InvalidDistribution(e.to_string()))?;
                    let f = dist.sample(rng);
                    weights[f] = 0.0;
                    col.push(f);
                }
                columns.push(col);
            }
            columns
        }
    };
    DemandMatrix::from_columns(columns, m, mode)
}

/// Compensated (Neumaier) running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = NeumaierSum::default();
    values.into_iter().for_each(|v| acc.add(v));
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zipf_alpha_zero_is_uniform() {
        let q = zipf(4, 0.0).unwrap();
        assert_eq!(q.probs(), &[0.25; 4]);
    }

    #[test]
    fn zipf_two_files() {
        let q = zipf(2, 1.0).unwrap();
        assert!((q.probs()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((q.probs()[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zipf_rejects_bad_input() {
        assert!(zipf(0, 1.0).is_err());
        assert!(zipf(5, -0.1).is_err());
        assert!(zipf(5, f64::NAN).is_err());
    }

    #[test]
    fn zipf_large_library_sums_to_one() {
        let q = zipf(5000, 0.9).unwrap();
        assert!((neumaier_sum(q.probs().iter().copied()) - 1.0).abs() <= SUM_TOLERANCE);
        assert!(q.probs().windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn arbitrary_input_is_sorted_with_permutation() {
        let q = DemandDistribution::new(vec![0.1, 0.6, 0.3]).unwrap();
        assert_eq!(q.probs(), &[0.6, 0.3, 0.1]);
        assert_eq!(q.original_index(), &[1, 2, 0]);
        assert!(DemandDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(DemandDistribution::new(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn parses_probability_file() {
        let q = DemandDistribution::parse("# popularity\n0.25\n\n0.5\n0.25\n").unwrap();
        assert_eq!(q.probs(), &[0.5, 0.25, 0.25]);
        assert!(DemandDistribution::parse("0.5\nabc\n").is_err());
    }

    #[test]
    fn cache_size_parsing() {
        assert_eq!(parse_cache_size("3").unwrap(), Ratio::from_integer(3));
        assert_eq!(parse_cache_size("2.5").unwrap(), Ratio::new(5, 2));
        assert_eq!(parse_cache_size("3/2").unwrap(), Ratio::new(3, 2));
        assert!(parse_cache_size("1/0").is_err());
        assert!(parse_cache_size("-1").is_err());
    }

    #[test]
    fn params_validation() {
        assert!(SystemParams::new(2, 3, Ratio::from_integer(4), 1, 1).is_err());
        assert!(SystemParams::new(0, 3, Ratio::from_integer(1), 1, 1).is_err());
        let p = SystemParams::new(2, 3, Ratio::new(3, 2), 1, 5).unwrap();
        assert_eq!(p.cache_packets(), 7);
        assert_eq!(p.cache_files(), None);
    }

    #[test]
    fn distinct_with_l_equal_m_gives_permutations() {
        let q = DemandDistribution::uniform(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = sample_demands(&q, 2, 3, RequestMode::Distinct, &mut rng).unwrap();
        for u in 0..2 {
            assert_eq!(d.distinct_files(u), vec![0, 1, 2]);
        }
    }

    #[test]
    fn degenerate_distribution_gives_all_first_file() {
        let q = DemandDistribution::new(vec![1.0, 0.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = sample_demands(&q, 5, 1, RequestMode::Iid, &mut rng).unwrap();
        assert!((0..5).all(|u| d.column(u) == [0]));
    }

    #[test]
    fn distinct_mode_rejects_too_many_requests() {
        let q = DemandDistribution::uniform(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_demands(&q, 2, 4, RequestMode::Distinct, &mut rng).is_err());
        let sparse = DemandDistribution::new(vec![0.5, 0.5, 0.0]).unwrap();
        assert!(sample_demands(&sparse, 2, 3, RequestMode::Distinct, &mut rng).is_err());
    }

    #[test]
    fn sampling_is_reproducible() {
        let q = zipf(50, 0.8).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sample_demands(&q, 6, 3, RequestMode::Distinct, &mut rng).unwrap()
        };
        assert_eq!(draw(11), draw(11));
        assert_ne!(draw(11), draw(12));
    }

    #[test]
    fn iid_marginals_match_q() {
        // 125_000 matrices of 8 entries = 10^6 samples.
        let q = zipf(100, 0.9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut counts = vec![0u64; 100];
        for _ in 0..125_000 {
            let d = sample_demands(&q, 4, 2, RequestMode::Iid, &mut rng).unwrap();
            for u in 0..4 {
                for &f in d.column(u) {
                    counts[f] += 1;
                }
            }
        }
        let total = 1_000_000f64;
        let mut chi2 = 0.0;
        for (f, &c) in counts.iter().enumerate() {
            let p = q.probs()[f];
            let se = (p * (1.0 - p) / total).sqrt();
            let freq = c as f64 / total;
            assert!((freq - p).abs() <= 3.0 * se, "file {f}: {freq} vs {p}");
            chi2 += (c as f64 - total * p).powi(2) / (total * p);
        }
        // 99 degrees of freedom, upper 0.1% point is about 148.2.
        assert!(chi2 < 148.2, "chi-square {chi2}");
    }
}
