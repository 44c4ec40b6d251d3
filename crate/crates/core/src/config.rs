//! JSON experiment configuration, parameter sweeps and bound tables.
//!
//! ```json
//! {
//!   "n": 50, "m": 5000, "M": 50, "L": 1, "B": 1,
//!   "alpha": 0.9,
//!   "scheme": "rlfu", "mode": "iid", "seed": 7, "trials": 100,
//!   "sweep": { "schemes": ["rlfu"], "run": "analytical",
//!              "grid": { "m_tilde": [50, 100, 317, 5000] } }
//! }
//! ```
//!
//! `M` may be a number or a string such as `"5/2"`. The demand distribution
//! comes from `alpha` (Zipf), an inline `q` array, or `q_file` (one
//! probability per line, resolved relative to the config file).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer};

use crate::analysis::{
    corollary1_bound, optimize_mtilde, thm1_bound, thm2_bound, thm5_bound, BoundRow, CachedMass,
    RateBound,
};
use crate::error::{Error, Result};
use crate::harness::{monte_carlo, Scheme};
use crate::model::{
    parse_cache_size, zipf, CacheSize, DemandDistribution, RequestMode, SystemParams,
};
use crate::placement::{uniform_distribution, CachingDistribution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeName {
    Up,
    Rlfu,
    Rap,
    Sup,
}

impl FromStr for SchemeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "up" => Ok(Self::Up),
            "rlfu" => Ok(Self::Rlfu),
            "rap" => Ok(Self::Rap),
            "sup" => Ok(Self::Sup),
            other => Err(Error::InvalidArgument(format!("unknown scheme {other:?}"))),
        }
    }
}

impl fmt::Display for SchemeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Up => "up",
            Self::Rlfu => "rlfu",
            Self::Rap => "rap",
            Self::Sup => "sup",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunKind {
    #[default]
    Analytical,
    Empirical,
    Both,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum MassMode {
    #[default]
    Verbatim,
    Scaled,
}

fn de_cache<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CacheSize, D::Error> {
    let value = serde_json::Value::deserialize(d)?;
    let text = match &value {
        serde_json::Value::Number(n) => n.to_string(),
        serde_json::Value::String(s) => s.clone(),
        other => return Err(serde::de::Error::custom(format!("bad cache size {other}"))),
    };
    parse_cache_size(&text).map_err(serde::de::Error::custom)
}

fn de_cache_list<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<Option<Vec<CacheSize>>, D::Error> {
    #[derive(Deserialize)]
    struct Wrap(#[serde(deserialize_with = "de_cache")] CacheSize);
    let list = Option::<Vec<Wrap>>::deserialize(d)?;
    Ok(list.map(|v| v.into_iter().map(|w| w.0).collect()))
}

/// Axes of a sweep. Points are the cartesian product of the listed axes in
/// the order `n, M, L, B, alpha, m_tilde`; unlisted axes keep the base value.
/// A grid listing no axis has no points.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub n: Option<Vec<usize>>,
    #[serde(rename = "M", default, deserialize_with = "de_cache_list")]
    pub cache: Option<Vec<CacheSize>>,
    #[serde(rename = "L", default)]
    pub requests: Option<Vec<usize>>,
    #[serde(rename = "B", default)]
    pub packets: Option<Vec<usize>>,
    #[serde(default)]
    pub alpha: Option<Vec<f64>>,
    #[serde(default)]
    pub m_tilde: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Defaults to the top-level scheme.
    #[serde(default)]
    pub schemes: Vec<SchemeName>,
    #[serde(default)]
    pub run: RunKind,
    #[serde(default)]
    pub grid: Grid,
}

fn one() -> usize {
    1
}

fn default_trials() -> usize {
    100
}

fn default_scheme() -> SchemeName {
    SchemeName::Up
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "M", deserialize_with = "de_cache")]
    pub cache: CacheSize,
    #[serde(rename = "L", default = "one")]
    pub requests: usize,
    #[serde(rename = "B", default = "one")]
    pub packets: usize,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub q: Option<Vec<f64>>,
    #[serde(default)]
    pub q_file: Option<PathBuf>,
    /// Caching distribution for the `rap` scheme, in file order.
    #[serde(default)]
    pub p: Option<Vec<f64>>,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeName,
    #[serde(default)]
    pub m_tilde: Option<usize>,
    #[serde(default)]
    pub mode: RequestMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    mbar: MassMode,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads a config and resolves `q_file` against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_json(&std::fs::read_to_string(path)?)?;
        if let (Some(q), Some(dir)) = (&cfg.q_file, path.parent()) {
            if q.is_relative() {
                cfg.q_file = Some(dir.join(q));
            }
        }
        Ok(cfg)
    }

    pub fn params(&self) -> Result<SystemParams> {
        Ok(
            SystemParams::new(self.n, self.m, self.cache, self.requests, self.packets)?
                .with_seed(self.seed),
        )
    }

    pub fn cached_mass(&self) -> CachedMass {
        match self.mbar {
            MassMode::Verbatim => CachedMass::Verbatim,
            MassMode::Scaled => CachedMass::Scaled,
        }
    }

    pub fn set_cached_mass(&mut self, mode: CachedMass) {
        self.mbar = match mode {
            CachedMass::Verbatim => MassMode::Verbatim,
            CachedMass::Scaled => MassMode::Scaled,
        };
    }

    pub fn demand(&self) -> Result<DemandDistribution> {
        let q = match (&self.q, &self.q_file, self.alpha) {
            (Some(q), None, None) => DemandDistribution::new(q.clone())?,
            (None, Some(path), None) => DemandDistribution::parse(&std::fs::read_to_string(path)?)?,
            (None, None, Some(alpha)) => zipf(self.m, alpha)?,
            (None, None, None) => {
                return Err(Error::Config("one of alpha, q, q_file is required".into()))
            }
            _ => {
                return Err(Error::Config(
                    "alpha, q and q_file are mutually exclusive".into(),
                ))
            }
        };
        if q.len() != self.m {
            return Err(Error::Config(format!(
                "demand distribution has {} files, m = {}",
                q.len(),
                self.m
            )));
        }
        Ok(q)
    }

    pub fn scheme(&self) -> Result<Scheme> {
        self.scheme_named(self.scheme)
    }

    pub fn scheme_named(&self, name: SchemeName) -> Result<Scheme> {
        Ok(match name {
            SchemeName::Up => Scheme::Up,
            SchemeName::Rlfu => Scheme::Rlfu(self.m_tilde),
            SchemeName::Sup => Scheme::Sup,
            SchemeName::Rap => {
                let p = self.p.clone().ok_or_else(|| {
                    Error::Config("scheme rap needs a caching distribution p".into())
                })?;
                Scheme::Rap(CachingDistribution::new(p, self.cache)?)
            }
        })
    }

    /// The copy of this config at every grid point, in sweep order.
    pub fn grid_points(&self) -> Vec<ExperimentConfig> {
        let Some(grid) = self.sweep.as_ref().map(|s| &s.grid) else {
            return Vec::new();
        };
        if grid == &Grid::default() {
            return Vec::new();
        }
        let mut points = vec![self.clone()];
        fn expand<T: Clone>(
            points: Vec<ExperimentConfig>,
            axis: &Option<Vec<T>>,
            set: impl Fn(&mut ExperimentConfig, T),
        ) -> Vec<ExperimentConfig> {
            let Some(values) = axis else { return points };
            let mut out = Vec::with_capacity(points.len() * values.len());
            for p in points {
                for v in values {
                    let mut c = p.clone();
                    set(&mut c, v.clone());
                    out.push(c);
                }
            }
            out
        }
        points = expand(points, &grid.n, |c, v| c.n = v);
        points = expand(points, &grid.cache, |c, v| c.cache = v);
        points = expand(points, &grid.requests, |c, v| c.requests = v);
        points = expand(points, &grid.packets, |c, v| c.packets = v);
        points = expand(points, &grid.alpha, |c, v| c.alpha = Some(v));
        points = expand(points, &grid.m_tilde, |c, v| c.m_tilde = Some(v));
        points
    }
}

/// Headline bound of a scheme: uniform and scalar closed forms, the
/// truncated-uniform bound at the configured (or optimal) cutoff, and the
/// random-placement bound for an explicit `p`.
pub fn headline_bound(
    cfg: &ExperimentConfig,
    name: SchemeName,
) -> Result<(Option<usize>, RateBound)> {
    let params = cfg.params()?;
    match name {
        SchemeName::Up => Ok((None, thm2_bound(&params)?)),
        SchemeName::Sup => Ok((None, thm5_bound(&params)?)),
        SchemeName::Rlfu => {
            let q = cfg.demand()?;
            match cfg.m_tilde {
                Some(t) => Ok((Some(t), corollary1_bound(&params, &q, t)?)),
                None => optimize_mtilde(&params, &q).map(|(t, b)| (Some(t), b)),
            }
        }
        SchemeName::Rap => {
            let q = cfg.demand()?;
            let Scheme::Rap(p) = cfg.scheme_named(SchemeName::Rap)? else {
                unreachable!()
            };
            Ok((None, thm1_bound(&q, &p, &params, cfg.cached_mass())?))
        }
    }
}

/// Every bound that applies at the config's point.
pub fn analyze(cfg: &ExperimentConfig) -> Result<Vec<BoundRow>> {
    let params = cfg.params()?;
    let q = cfg.demand()?;
    let mut rows = Vec::new();
    let mut push = |scheme: String, m_tilde: Option<usize>, bound: RateBound| {
        rows.push(BoundRow {
            scheme,
            params: params.clone(),
            alpha: cfg.alpha,
            m_tilde,
            bound,
        })
    };

    let p = match cfg.scheme {
        SchemeName::Sup => uniform_distribution(cfg.m)?,
        name => cfg
            .scheme_named(name)?
            .caching_distribution(&params, &q)?
            .expect("random placement"),
    };
    let cutoff = cfg.scheme_named(cfg.scheme)?.cutoff(&params, &q)?;
    push(
        format!("rap-gclc:{}", cfg.scheme),
        cutoff,
        thm1_bound(&q, &p, &params, cfg.cached_mass())?,
    );
    push("up-gclc".into(), None, thm2_bound(&params)?);
    if let Some(t) = cfg.m_tilde {
        push(
            "rlfu-gclc".into(),
            Some(t),
            corollary1_bound(&params, &q, t)?,
        );
    }
    let (t, best) = optimize_mtilde(&params, &q)?;
    push("rlfu-gclc:opt".into(), Some(t), best);
    if let Ok(b) = thm5_bound(&params) {
        push("sup-gclc".into(), None, b);
    }
    Ok(rows)
}

pub const SWEEP_HEADER: &str = "scheme,n,m,M,L,B,alpha,mode,m_tilde,bound_value,binding_component,trials,mean_rate,std_error,status";

fn csv_field(text: &str) -> String {
    text.replace([',', '\n', '\r'], ";")
}

fn sweep_row(cfg: &ExperimentConfig, name: SchemeName, run: RunKind) -> Result<String> {
    let prefix = format!(
        "{},{},{},{},{},{},{},{}",
        name,
        cfg.n,
        cfg.m,
        cfg.cache,
        cfg.requests,
        cfg.packets,
        cfg.alpha.map(|a| a.to_string()).unwrap_or_default(),
        cfg.mode
    );
    let infeasible = |e: Error| -> Result<String> {
        if e.is_decode_failure() {
            return Err(e);
        }
        Ok(format!(
            "{prefix},,,,,,,infeasible: {}",
            csv_field(&e.to_string())
        ))
    };

    let mut m_tilde = cfg.m_tilde;
    let (mut bound_value, mut binding) = (String::new(), String::new());
    if matches!(run, RunKind::Analytical | RunKind::Both) {
        match headline_bound(cfg, name) {
            Ok((t, b)) => {
                m_tilde = t;
                bound_value = b.value().to_string();
                binding = b.binding().to_string();
            }
            Err(e) => return infeasible(e),
        }
    }
    let (mut trials, mut mean, mut se) = (String::new(), String::new(), String::new());
    if matches!(run, RunKind::Empirical | RunKind::Both) {
        let report = cfg
            .params()
            .and_then(|params| Ok((params, cfg.demand()?, cfg.scheme_named(name)?)))
            .and_then(|(params, q, scheme)| {
                monte_carlo(&params, &scheme, &q, cfg.mode, cfg.trials, cfg.seed)
            });
        match report {
            Ok(r) => {
                m_tilde = r.m_tilde;
                trials = r.trial_count().to_string();
                mean = r.mean_rate.to_string();
                se = r.std_error.to_string();
            }
            Err(e) => return infeasible(e),
        }
    }
    Ok(format!(
        "{prefix},{},{bound_value},{binding},{trials},{mean},{se},ok",
        m_tilde.map(|t| t.to_string()).unwrap_or_default()
    ))
}

/// Runs every grid point for every scheme; one CSV row each. Infeasible
/// points become rows with an `infeasible` status; decode failures abort.
pub fn sweep(cfg: &ExperimentConfig) -> Result<String> {
    let spec = cfg.sweep.clone().unwrap_or_default();
    let schemes = if spec.schemes.is_empty() {
        vec![cfg.scheme]
    } else {
        spec.schemes.clone()
    };
    let jobs: Vec<(ExperimentConfig, SchemeName)> = cfg
        .grid_points()
        .into_iter()
        .flat_map(|p| schemes.iter().map(move |&s| (p.clone(), s)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|(point, name)| sweep_row(point, *name, spec.run))
        .collect::<Result<Vec<_>>>()?;
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    Ok(out)
}
