//! Closed-form achievable-rate bounds and the truncated-uniform cutoff search.
//!
//! All bounds are in file units per time slot. The asymptotic slack `epsilon`
//! of the random-placement bound is reported as zero.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{DemandDistribution, NeumaierSum, SystemParams};
use crate::placement::CachingDistribution;

/// Above this many users binomial weights are evaluated in log space.
const LOG_SPACE_USERS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundKind {
    /// `min{psi, m_bar - M_bar}` for a fixed caching distribution.
    RandomPlacement,
    /// `min{L(m/M - 1), Ln, m - M}` for uniform placement.
    UniformPlacement,
    /// The truncated-uniform bound at a given cutoff.
    TruncatedUniform,
    /// Scalar whole-file placement, `B = 1`.
    ScalarPlacement,
}

impl BoundKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::RandomPlacement => "rap-gclc",
            Self::UniformPlacement => "up-gclc",
            Self::TruncatedUniform => "rlfu-gclc",
            Self::ScalarPlacement => "sup-gclc",
        }
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A bound as the minimum of labeled components.
#[derive(Clone, Debug, PartialEq)]
pub struct RateBound {
    pub kind: BoundKind,
    pub components: Vec<(&'static str, f64)>,
}

impl RateBound {
    fn new(kind: BoundKind, components: Vec<(&'static str, f64)>) -> Self {
        debug_assert!(components.iter().all(|(_, v)| *v >= 0.0 || v.is_nan()));
        Self { kind, components }
    }

    pub fn value(&self) -> f64 {
        self.components
            .iter()
            .map(|&(_, v)| v)
            .fold(f64::INFINITY, f64::min)
    }

    /// Label of the smallest component; the first one on ties.
    pub fn binding(&self) -> &'static str {
        self.components
            .iter()
            .fold(None::<(&'static str, f64)>, |best, &(name, v)| match best {
                Some((_, b)) if b <= v => best,
                _ => Some((name, v)),
            })
            .map_or("", |(name, _)| name)
    }

    pub fn component(&self, name: &str) -> Option<f64> {
        self.components
            .iter()
            .find(|(n, _)| *n == name)
            .map(|&(_, v)| v)
    }
}

/// How `M_bar` treats the cache size.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CachedMass {
    /// `sum_f p_f (1 - (1 - q_f)^(nL))`, exactly as the bound is stated.
    #[default]
    Verbatim,
    /// The same sum multiplied by `M`, i.e. weighting by the cached
    /// fraction `p_f M` of each file.
    Scaled,
}

fn check_lengths(q: &DemandDistribution, p: &CachingDistribution) -> Result<()> {
    if q.len() != p.len() {
        return Err(Error::Dimension(format!(
            "demand distribution has {} files, caching distribution {}",
            q.len(),
            p.len()
        )));
    }
    Ok(())
}

/// `ln((p M)^(l-1) (1 - p M)^(n-l+1))` with `0^0 = 1`.
fn log_score(pm: f64, users: usize, ell: usize) -> f64 {
    let pm = pm.clamp(0.0, 1.0);
    let part = |base: f64, exp: usize| {
        if exp == 0 {
            0.0
        } else {
            exp as f64 * base.ln()
        }
    };
    part(pm, ell - 1) + part(1.0 - pm, users - ell + 1)
}

/// Probability that file `f` maximizes `(p_j M)^(l-1) (1 - p_j M)^(n-l+1)`
/// among `l` iid demands drawn from `q`, ties broken toward the lower file
/// index. The entries sum to exactly `1.0` in index order.
pub fn rho(
    q: &DemandDistribution,
    p: &CachingDistribution,
    cache: f64,
    users: usize,
    ell: usize,
) -> Result<Vec<f64>> {
    check_lengths(q, p)?;
    if ell == 0 || ell > users {
        return Err(Error::InvalidArgument(format!(
            "ell must lie in 1..={users}, got {ell}"
        )));
    }
    let m = q.len();
    let scores: Vec<f64> = p
        .probs()
        .iter()
        .map(|&pf| log_score(pf * cache, users, ell))
        .collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    // suffix[j] = q-mass of the files at ranks j.. in `order`.
    let mut suffix = vec![0.0; m + 1];
    let mut acc = NeumaierSum::default();
    for j in (0..m).rev() {
        acc.add(q.probs()[order[j]]);
        suffix[j] = acc.value();
    }
    let mut out = vec![0.0; m];
    let e = ell as i32;
    for (j, &f) in order.iter().enumerate() {
        out[f] = suffix[j].powi(e) - suffix[j + 1].powi(e);
    }
    // Let the last entry absorb the rounding residue so that the index-order
    // sum is exactly one.
    let top = (0..m)
        .max_by(|&a, &b| out[a].total_cmp(&out[b]))
        .unwrap_or(0);
    let last = m - 1;
    for _ in 0..64 {
        if out.iter().sum::<f64>() == 1.0 {
            break;
        }
        let partial: f64 = out[..last].iter().sum();
        if partial > 1.0 {
            out[top] = out[top].next_down();
            continue;
        }
        let target = 1.0 - partial;
        out[last] = if target != out[last] {
            target
        } else if partial + target < 1.0 {
            target.next_up()
        } else {
            target.next_down().max(0.0)
        };
    }
    Ok(out)
}

/// Coded-multicast term
/// `psi = L sum_l C(n,l) sum_f rho_{f,l} (1 - p_f M)^(n-l+1) (p_f M)^(l-1)`.
pub fn psi(
    q: &DemandDistribution,
    p: &CachingDistribution,
    cache: f64,
    users: usize,
    requests: usize,
) -> Result<f64> {
    check_lengths(q, p)?;
    let mut total = NeumaierSum::default();
    let mut log_binom = 0.0;
    let mut binom = 1.0;
    for ell in 1..=users {
        log_binom += ((users - ell + 1) as f64).ln() - (ell as f64).ln();
        binom = binom * (users - ell + 1) as f64 / ell as f64;
        let r = rho(q, p, cache, users, ell)?;
        for (f, &pf) in p.probs().iter().enumerate() {
            if r[f] == 0.0 {
                continue;
            }
            let pm = (pf * cache).clamp(0.0, 1.0);
            let weight = if users > LOG_SPACE_USERS {
                (log_binom + log_score(pm, users, ell)).exp()
            } else {
                binom * pm.powi(ell as i32 - 1) * (1.0 - pm).powi((users - ell + 1) as i32)
            };
            total.add(r[f] * weight);
        }
    }
    Ok(requests as f64 * total.value())
}

/// `1 - (1 - q)^k`, accurate for small `q`.
fn hit_probability(q: f64, k: usize) -> f64 {
    -((k as f64) * (-q).ln_1p()).exp_m1()
}

/// Expected number of distinct requested files,
/// `m_bar = sum_f (1 - (1 - q_f)^(nL))`.
pub fn m_bar(q: &DemandDistribution, users: usize, requests: usize) -> f64 {
    let draws = users * requests;
    let mut acc = NeumaierSum::default();
    q.probs()
        .iter()
        .for_each(|&qf| acc.add(hit_probability(qf, draws)));
    acc.value()
}

/// Cached mass of the requested files, `M_bar = sum_f p_f (1 - (1 - q_f)^(nL))`,
/// optionally scaled by `M`.
pub fn cached_mass(
    q: &DemandDistribution,
    p: &CachingDistribution,
    users: usize,
    requests: usize,
    cache: f64,
    mode: CachedMass,
) -> Result<f64> {
    check_lengths(q, p)?;
    let draws = users * requests;
    let mut acc = NeumaierSum::default();
    for (&qf, &pf) in q.probs().iter().zip(p.probs()) {
        acc.add(pf * hit_probability(qf, draws));
    }
    Ok(match mode {
        CachedMass::Verbatim => acc.value(),
        CachedMass::Scaled => acc.value() * cache,
    })
}

/// `min{psi, m_bar - M_bar}` for random placement under `p`.
pub fn thm1_bound(
    q: &DemandDistribution,
    p: &CachingDistribution,
    params: &SystemParams,
    mode: CachedMass,
) -> Result<RateBound> {
    params.validate()?;
    if q.len() != params.files {
        return Err(Error::Dimension(format!(
            "demand distribution has {} files, library has {}",
            q.len(),
            params.files
        )));
    }
    let cache = params.cache_f64();
    let psi = psi(q, p, cache, params.users, params.requests)?;
    let distinct = m_bar(q, params.users, params.requests);
    let cached = cached_mass(q, p, params.users, params.requests, cache, mode)?;
    Ok(RateBound::new(
        BoundKind::RandomPlacement,
        vec![("psi", psi), ("mbar-Mbar", (distinct - cached).max(0.0))],
    ))
}

/// The three closed-form terms shared by the uniform and scalar bounds.
fn uniform_terms(params: &SystemParams) -> Vec<(&'static str, f64)> {
    let (m, cache) = (params.files as f64, params.cache_f64());
    let l = params.requests as f64;
    let coded = if cache > 0.0 {
        (l * (m / cache - 1.0)).max(0.0)
    } else {
        f64::INFINITY
    };
    vec![
        ("L(m/M-1)", coded),
        ("Ln", l * params.users as f64),
        ("m-M", (m - cache).max(0.0)),
    ]
}

/// `min{L(m/M - 1), Ln, m - M}`; the first term is infinite at `M = 0`.
pub fn thm2_bound(params: &SystemParams) -> Result<RateBound> {
    params.validate()?;
    Ok(RateBound::new(
        BoundKind::UniformPlacement,
        uniform_terms(params),
    ))
}

/// Truncated-uniform bound at cutoff `m_tilde`:
/// `min{ min{L(m~/M - 1), m~ - M} + min{Ln(1 - G), m - m~}, Ln, m - M }`
/// with `G` the demand mass of the `m~` most popular files.
pub fn corollary1_bound(
    params: &SystemParams,
    q: &DemandDistribution,
    m_tilde: usize,
) -> Result<RateBound> {
    params.validate()?;
    let prefix = q.prefix_mass();
    cutoff_bound(params, &prefix, m_tilde)
}

fn cutoff_bound(params: &SystemParams, prefix: &[f64], m_tilde: usize) -> Result<RateBound> {
    let m = params.files;
    let cache = params.cache_f64();
    if prefix.len() != m + 1 {
        return Err(Error::Dimension(format!(
            "demand distribution has {} files, library has {m}",
            prefix.len() - 1
        )));
    }
    if m_tilde == 0 || m_tilde > m || (m_tilde as f64) < cache {
        return Err(Error::InvalidArgument(format!(
            "cutoff must satisfy M <= m~ <= m, got m~ = {m_tilde}"
        )));
    }
    let l = params.requests as f64;
    let ln = l * params.users as f64;
    let mt = m_tilde as f64;
    let head_coded = if cache > 0.0 {
        l * (mt / cache - 1.0)
    } else {
        f64::INFINITY
    };
    let head = head_coded.min(mt - cache).max(0.0);
    let tail_mass = (1.0 - prefix[m_tilde]).max(0.0);
    let tail = (ln * tail_mass).min((m - m_tilde) as f64);
    Ok(RateBound::new(
        BoundKind::TruncatedUniform,
        vec![
            ("head+tail", head + tail),
            ("Ln", ln),
            ("m-M", (m as f64 - cache).max(0.0)),
        ],
    ))
}

/// The truncated-uniform bound at every cutoff in `max(1, ceil(M))..=m`.
pub fn cutoff_curve(
    params: &SystemParams,
    q: &DemandDistribution,
) -> Result<Vec<(usize, RateBound)>> {
    params.validate()?;
    let prefix = q.prefix_mass();
    let start = (params.cache.ceil().to_integer() as usize).max(1);
    (start..=params.files)
        .map(|t| cutoff_bound(params, &prefix, t).map(|b| (t, b)))
        .collect()
}

/// Exhaustive scan of the cutoff; returns the first minimizer.
pub fn optimize_mtilde(
    params: &SystemParams,
    q: &DemandDistribution,
) -> Result<(usize, RateBound)> {
    let mut best: Option<(usize, RateBound)> = None;
    for (t, bound) in cutoff_curve(params, q)? {
        if best.as_ref().is_none_or(|(_, b)| bound.value() < b.value()) {
            best = Some((t, bound));
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("empty cutoff range".into()))
}

fn check_scalar(params: &SystemParams) -> Result<usize> {
    params.validate()?;
    if params.packets != 1 {
        return Err(Error::InvalidParams(format!(
            "scalar placement requires B = 1, got {}",
            params.packets
        )));
    }
    params.cache_files().ok_or_else(|| {
        Error::InvalidParams(format!(
            "scalar placement requires an integer cache size, got {}",
            params.cache
        ))
    })
}

/// Scalar-placement bound `min{L(m/M - 1), Ln, m - M}`, valid up to a
/// `1 + o(1)` factor in the large-`L` regime.
pub fn thm5_bound(params: &SystemParams) -> Result<RateBound> {
    check_scalar(params)?;
    Ok(RateBound::new(
        BoundKind::ScalarPlacement,
        uniform_terms(params),
    ))
}

/// How far `L` is from the growth condition of the scalar-placement bound.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarRegime {
    /// `n (m/(m-M))^n` when `M/m >= 1/2`, else `(nM/m)(m/M)^n / (1 - M/m)`.
    pub threshold: f64,
    /// `L / threshold`; the bound needs this to grow without limit.
    pub ratio: f64,
    pub below_threshold: bool,
    /// `M / L`; the bound also needs this to grow without limit.
    pub cache_per_request: f64,
    pub half_or_more_cached: bool,
}

pub fn thm5_regime(params: &SystemParams) -> Result<ScalarRegime> {
    let cache = check_scalar(params)? as f64;
    let (n, m) = (params.users as f64, params.files as f64);
    let l = params.requests as f64;
    let frac = cache / m;
    let half = frac >= 0.5;
    let threshold = if half {
        if cache >= m {
            f64::INFINITY
        } else {
            n * (m / (m - cache)).powf(n)
        }
    } else if cache == 0.0 {
        f64::INFINITY
    } else {
        (n * frac) * (m / cache).powf(n) / (1.0 - frac)
    };
    Ok(ScalarRegime {
        threshold,
        ratio: l / threshold,
        below_threshold: l < threshold,
        cache_per_request: cache / l,
        half_or_more_cached: half,
    })
}

/// One row of the bounds CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundRow {
    pub scheme: String,
    pub params: SystemParams,
    pub alpha: Option<f64>,
    pub m_tilde: Option<usize>,
    pub bound: RateBound,
}

impl BoundRow {
    pub const HEADER: &'static str = "scheme,n,m,M,L,alpha,m_tilde,value,binding_component";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.scheme,
            self.params.users,
            self.params.files,
            self.params.cache,
            self.params.requests,
            self.alpha.map(|a| a.to_string()).unwrap_or_default(),
            self.m_tilde.map(|m| m.to_string()).unwrap_or_default(),
            self.bound.value(),
            self.bound.binding()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::zipf;
    use crate::placement::{rlfu_distribution, uniform_distribution};
    use num_rational::Ratio;

    fn params(n: usize, m: usize, cache: u64, l: usize) -> SystemParams {
        SystemParams::new(n, m, Ratio::from_integer(cache), l, 1).unwrap()
    }

    #[test]
    fn rho_uniform_p_is_q_at_ell_one() {
        let q = zipf(6, 0.7).unwrap();
        let p = uniform_distribution(6).unwrap();
        let r = rho(&q, &p, 2.0, 4, 1).unwrap();
        for (a, b) in r.iter().zip(q.probs()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rho_single_file() {
        let q = zipf(1, 0.5).unwrap();
        let p = uniform_distribution(1).unwrap();
        for ell in 1..=3 {
            assert_eq!(rho(&q, &p, 1.0, 3, ell).unwrap(), vec![1.0]);
        }
        assert!(rho(&q, &p, 1.0, 3, 0).is_err());
        assert!(rho(&q, &p, 1.0, 3, 4).is_err());
    }

    #[test]
    fn psi_zero_at_full_cache() {
        let q = zipf(5, 0.0).unwrap();
        let p = uniform_distribution(5).unwrap();
        assert_eq!(psi(&q, &p, 5.0, 4, 2).unwrap(), 0.0);
    }

    #[test]
    fn m_bar_examples() {
        let q = zipf(4, 0.0).unwrap();
        assert!((m_bar(&q, 2, 2) - 2.734375).abs() < 1e-15);
        let q = zipf(7, 1.3).unwrap();
        assert!((m_bar(&q, 1, 1) - 1.0).abs() < 1e-15);
        let point = DemandDistribution::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(m_bar(&point, 5, 3), 1.0);
    }

    #[test]
    fn cached_mass_examples() {
        let q = zipf(8, 0.6).unwrap();
        let p = uniform_distribution(8).unwrap();
        let mb = cached_mass(&q, &p, 3, 2, 2.0, CachedMass::Verbatim).unwrap();
        assert!((mb - m_bar(&q, 3, 2) / 8.0).abs() < 1e-15);
        let scaled = cached_mass(&q, &p, 3, 2, 2.0, CachedMass::Scaled).unwrap();
        assert!((scaled - 2.0 * mb).abs() < 1e-15);

        let point = DemandDistribution::new(vec![1.0, 0.0, 0.0]).unwrap();
        let p = CachingDistribution::new(vec![0.5, 0.3, 0.2], Ratio::from_integer(1)).unwrap();
        assert_eq!(
            cached_mass(&point, &p, 4, 2, 1.0, CachedMass::Verbatim).unwrap(),
            0.5
        );
    }

    #[test]
    fn thm1_full_cache_is_zero() {
        let params = params(3, 4, 4, 2);
        let q = zipf(4, 0.0).unwrap();
        let p = uniform_distribution(4).unwrap();
        let b = thm1_bound(&q, &p, &params, CachedMass::Scaled).unwrap();
        assert_eq!(b.value(), 0.0);
    }

    #[test]
    fn thm1_without_cache_is_m_bar() {
        let params = params(4, 6, 0, 2);
        let q = zipf(6, 0.5).unwrap();
        let p = uniform_distribution(6).unwrap();
        let b = thm1_bound(&q, &p, &params, CachedMass::Verbatim).unwrap();
        // psi collapses to L n at M = 0, above m_bar.
        assert!((b.component("psi").unwrap() - 8.0).abs() < 1e-12);
        assert_eq!(b.binding(), "mbar-Mbar");
    }

    #[test]
    fn thm2_examples() {
        assert_eq!(thm2_bound(&params(3, 5, 5, 2)).unwrap().value(), 0.0);
        let b = thm2_bound(&params(9, 5, 1, 1)).unwrap();
        assert_eq!(b.value(), 4.0);
        let b = thm2_bound(&params(2, 5, 0, 1)).unwrap();
        assert_eq!((b.value(), b.binding()), (2.0, "Ln"));
    }

    #[test]
    fn corollary1_at_full_cutoff_is_uniform() {
        let params = params(7, 40, 3, 2);
        let q = zipf(40, 0.8).unwrap();
        let b = corollary1_bound(&params, &q, 40).unwrap();
        let up = (2.0f64 * (40.0 / 3.0 - 1.0)).min(37.0).min(14.0).min(37.0);
        assert_eq!(b.value(), up);
        assert!(corollary1_bound(&params, &q, 2).is_err());
        assert!(corollary1_bound(&params, &q, 41).is_err());
    }

    #[test]
    fn corollary1_at_cutoff_equal_cache() {
        let params = params(7, 40, 3, 2);
        let q = zipf(40, 0.8).unwrap();
        let b = corollary1_bound(&params, &q, 3).unwrap();
        let g = q.probs()[..3].iter().sum::<f64>();
        let expected = (14.0 * (1.0 - g)).min(37.0).min(14.0).min(37.0);
        assert!((b.value() - expected).abs() < 1e-12);
    }

    #[test]
    fn optimize_on_point_mass() {
        let params = params(5, 10, 1, 2);
        let q = DemandDistribution::new([vec![1.0], vec![0.0; 9]].concat()).unwrap();
        let (m_tilde, bound) = optimize_mtilde(&params, &q).unwrap();
        assert_eq!((m_tilde, bound.value()), (1, 0.0));
    }

    #[test]
    fn optimize_uniform_scan() {
        // Uniform demand: head+tail at m~ = M is L n (1 - M/m) = 10.8, below
        // the full-cutoff value 12.
        let params = params(6, 30, 3, 2);
        let q = zipf(30, 0.0).unwrap();
        let (m_tilde, best) = optimize_mtilde(&params, &q).unwrap();
        assert_eq!(m_tilde, 3);
        assert!((best.value() - 10.8).abs() < 1e-12);
        for t in 3..=30 {
            assert!(corollary1_bound(&params, &q, t).unwrap().value() >= best.value());
        }
    }

    #[test]
    fn thm5_examples() {
        let b = thm5_bound(&params(3, 6, 6, 4)).unwrap();
        assert_eq!(b.value(), 0.0);
        let regime = thm5_regime(&params(3, 6, 3, 6)).unwrap();
        assert_eq!(regime.threshold, 24.0);
        assert!(regime.below_threshold);
        assert_eq!(regime.ratio, 0.25);
        let low = thm5_regime(&params(2, 10, 2, 3)).unwrap();
        // (2 * 0.2) * 5^2 / 0.8
        assert!((low.threshold - 12.5).abs() < 1e-12);
        let packetized = SystemParams::new(3, 6, Ratio::from_integer(3), 2, 2).unwrap();
        assert!(thm5_bound(&packetized).is_err());
    }

    #[test]
    fn binding_component_and_csv() {
        let params = params(2, 10, 2, 1);
        let b = thm2_bound(&params).unwrap();
        assert_eq!(b.binding(), "Ln");
        let row = BoundRow {
            scheme: "up".into(),
            params,
            alpha: Some(0.9),
            m_tilde: None,
            bound: b,
        };
        assert_eq!(row.to_csv(), "up,2,10,2,1,0.9,,2,Ln");
    }

    #[test]
    fn rlfu_psi_at_fig1_point_beats_uniform() {
        let params = SystemParams::new(50, 5000, Ratio::from_integer(50), 1, 1).unwrap();
        let q = zipf(5000, 0.9).unwrap();
        let (m_tilde, _) = optimize_mtilde(&params, &q).unwrap();
        let rlfu = rlfu_distribution(5000, m_tilde, params.cache).unwrap();
        let up = uniform_distribution(5000).unwrap();
        let a = thm1_bound(&q, &rlfu, &params, CachedMass::Verbatim)
            .unwrap()
            .value();
        let b = thm1_bound(&q, &up, &params, CachedMass::Verbatim)
            .unwrap()
            .value();
        assert!(a <= 0.8 * b, "{a} vs {b}");
    }
}
