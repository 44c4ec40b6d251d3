//! Monte Carlo runner: placement, demands, conflict graph, coloring, encoding
//! and decoding at every user.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{
    corollary1_bound, optimize_mtilde, thm1_bound, thm2_bound, thm5_bound, CachedMass,
};
use crate::codec::{decode, encode};
use crate::coloring::gclc_color;
use crate::conflict::{build_conflict_graph, PacketId};
use crate::error::{Error, Result};
use crate::gf::{GaloisField, Symbol, DEFAULT_FIELD_BITS};
use crate::model::{sample_demands, DemandDistribution, NeumaierSum, RequestMode, SystemParams};
use crate::placement::{
    rap_cache, rlfu_distribution, sup_cache, uniform_distribution, CacheConfiguration,
    CachingDistribution,
};

/// Placement scheme of an experiment.
#[derive(Clone, Debug, PartialEq)]
pub enum Scheme {
    Up,
    /// Truncated uniform; `None` picks the cutoff minimizing the bound.
    Rlfu(Option<usize>),
    Rap(CachingDistribution),
    Sup,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Up => "up",
            Self::Rlfu(_) => "rlfu",
            Self::Rap(_) => "rap",
            Self::Sup => "sup",
        }
    }

    /// Cutoff actually used by a truncated-uniform scheme.
    pub fn cutoff(&self, params: &SystemParams, q: &DemandDistribution) -> Result<Option<usize>> {
        match self {
            Self::Rlfu(Some(t)) => Ok(Some(*t)),
            Self::Rlfu(None) => Ok(Some(optimize_mtilde(params, q)?.0)),
            _ => Ok(None),
        }
    }

    /// Caching distribution driving random placement; `None` for scalar placement.
    pub fn caching_distribution(
        &self,
        params: &SystemParams,
        q: &DemandDistribution,
    ) -> Result<Option<CachingDistribution>> {
        match self {
            Self::Up => uniform_distribution(params.files).map(Some),
            Self::Rlfu(_) => {
                let t = self
                    .cutoff(params, q)?
                    .expect("truncated scheme has a cutoff");
                rlfu_distribution(params.files, t, params.cache).map(Some)
            }
            Self::Rap(p) => Ok(Some(p.clone())),
            Self::Sup => Ok(None),
        }
    }

    fn placement(&self, params: &SystemParams, q: &DemandDistribution) -> Result<Placement> {
        Ok(match self.caching_distribution(params, q)? {
            Some(p) => Placement::Random(p),
            None => Placement::Scalar,
        })
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

enum Placement {
    Random(CachingDistribution),
    Scalar,
}

impl Placement {
    fn sample<R: Rng + ?Sized>(
        &self,
        params: &SystemParams,
        rng: &mut R,
    ) -> Result<CacheConfiguration> {
        match self {
            Self::Random(p) => rap_cache(p, params, rng),
            Self::Scalar => sup_cache(params, rng),
        }
    }
}

/// Outcome of one delivery.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialResult {
    /// Transmissions divided by `B`, in file units.
    pub rate: f64,
    pub decode_ok: bool,
    pub num_vertices: usize,
    pub num_colors: usize,
    pub local_value: usize,
    pub transmissions: usize,
}

impl TrialResult {
    pub const CSV_HEADER: &'static str =
        "trial,rate,decode_ok,num_vertices,num_colors,local_value,transmissions";

    fn csv_row(&self, trial: usize) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            trial,
            self.rate,
            self.decode_ok,
            self.num_vertices,
            self.num_colors,
            self.local_value,
            self.transmissions
        )
    }
}

pub fn default_field() -> &'static GaloisField {
    static FIELD: OnceLock<GaloisField> = OnceLock::new();
    FIELD.get_or_init(|| GaloisField::new(DEFAULT_FIELD_BITS).expect("supported degree"))
}

/// Samples caches and demands, then delivers with random payloads and
/// checks every user's decoded packets.
pub fn run_trial<R: Rng + ?Sized>(
    params: &SystemParams,
    scheme: &Scheme,
    q: &DemandDistribution,
    mode: RequestMode,
    rng: &mut R,
) -> Result<TrialResult> {
    let placement = scheme.placement(params, q)?;
    trial_with(params, &placement, q, mode, rng)
}

fn trial_with<R: Rng + ?Sized>(
    params: &SystemParams,
    placement: &Placement,
    q: &DemandDistribution,
    mode: RequestMode,
    rng: &mut R,
) -> Result<TrialResult> {
    let cache = placement.sample(params, rng)?;
    let demands = sample_demands(q, params.users, params.requests, mode, rng)?;
    deliver(&cache, &demands, params, rng)
}

/// Delivery for a fixed cache configuration and demand matrix.
pub fn deliver<R: Rng + ?Sized>(
    cache: &CacheConfiguration,
    demands: &crate::model::DemandMatrix,
    params: &SystemParams,
    rng: &mut R,
) -> Result<TrialResult> {
    let field = default_field();
    let g = build_conflict_graph(cache, demands, params)?;
    let coloring = gclc_color(&g);

    // Only requested packets ever enter a class, so they are the only payloads read.
    let payloads: HashMap<PacketId, Symbol> = g
        .packets()
        .iter()
        .map(|&p| (p, field.element(rng.random::<u32>())))
        .collect();

    let cw = encode(&g, &coloring, &payloads, field)?;
    for user in g.requesting_users() {
        let got = decode(user, &cw, &g, &payloads, field)?;
        for v in g.vertices().iter().filter(|v| v.user == user) {
            if got.get(&v.packet) != payloads.get(&v.packet) {
                return Err(Error::DecodeMismatch {
                    user: user + 1,
                    file: v.packet.file + 1,
                    packet: v.packet.index + 1,
                });
            }
        }
    }
    Ok(TrialResult {
        rate: cw.len() as f64 / params.packets as f64,
        decode_ok: true,
        num_vertices: g.len(),
        num_colors: coloring.num_colors(),
        local_value: coloring.local_value(),
        transmissions: coloring.transmissions(),
    })
}

/// Independent generator for trial `trial` under `seed`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Aggregate of a Monte Carlo run.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub scheme: String,
    pub params: SystemParams,
    pub mode: RequestMode,
    pub m_tilde: Option<usize>,
    pub trials: Vec<TrialResult>,
    pub mean_rate: f64,
    pub std_error: f64,
    /// Analytical bounds at this point, labeled.
    pub bounds: Vec<(String, f64)>,
}

impl ExperimentReport {
    pub fn trial_count(&self) -> usize {
        self.trials.len()
    }

    pub fn trials_csv(&self) -> String {
        let mut out = String::from(TrialResult::CSV_HEADER);
        out.push('\n');
        for (i, t) in self.trials.iter().enumerate() {
            out.push_str(&t.csv_row(i));
            out.push('\n');
        }
        out
    }

    pub fn write_trials_csv(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.trials_csv().as_bytes())?;
        Ok(())
    }

    pub fn bound(&self, label: &str) -> Option<f64> {
        self.bounds
            .iter()
            .find(|(l, _)| l == label)
            .map(|&(_, v)| v)
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let k = values.len();
    if k == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut sum = NeumaierSum::default();
    values.iter().for_each(|&x| sum.add(x));
    let mean = sum.value() / k as f64;
    if k == 1 {
        return (mean, 0.0);
    }
    let mut sq = NeumaierSum::default();
    values.iter().for_each(|&x| sq.add((x - mean) * (x - mean)));
    let var = sq.value() / (k - 1) as f64;
    (mean, (var / k as f64).sqrt())
}

/// Analytical bounds relevant to `scheme` at this point. Infeasible ones
/// are omitted.
pub fn scheme_bounds(
    params: &SystemParams,
    scheme: &Scheme,
    q: &DemandDistribution,
    mbar: CachedMass,
) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    match scheme {
        Scheme::Sup => {
            out.push(("sup".to_string(), thm5_bound(params)?.value()));
        }
        _ => {
            let p = scheme
                .caching_distribution(params, q)?
                .expect("random placement");
            out.push(("rap".to_string(), thm1_bound(q, &p, params, mbar)?.value()));
            match scheme {
                Scheme::Up => out.push(("up".to_string(), thm2_bound(params)?.value())),
                Scheme::Rlfu(_) => {
                    let t = scheme.cutoff(params, q)?.expect("cutoff");
                    out.push(("rlfu".to_string(), corollary1_bound(params, q, t)?.value()));
                }
                _ => {}
            }
        }
    }
    Ok(out)
}

/// Runs `trials` independent deliveries in parallel. Trial `i` draws from
/// stream `i` of the generator seeded with `seed`, so results do not depend
/// on scheduling.
pub fn monte_carlo(
    params: &SystemParams,
    scheme: &Scheme,
    q: &DemandDistribution,
    mode: RequestMode,
    trials: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    params.validate()?;
    let placement = scheme.placement(params, q)?;
    let results = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            trial_with(params, &placement, q, mode, &mut rng).map_err(|e| Error::Trial {
                trial: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rates: Vec<f64> = results.iter().map(|t| t.rate).collect();
    let (mean_rate, std_error) = mean_and_std_error(&rates);
    Ok(ExperimentReport {
        scheme: scheme.name().to_string(),
        params: params.clone(),
        mode,
        m_tilde: scheme.cutoff(params, q)?,
        trials: results,
        mean_rate,
        std_error,
        bounds: scheme_bounds(params, scheme, q, CachedMass::Verbatim).unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{zipf, DemandMatrix};
    use crate::placement::PlacementKind;
    use num_rational::Ratio;

    fn params(n: usize, m: usize, cache: u64, l: usize, b: usize) -> SystemParams {
        SystemParams::new(n, m, Ratio::from_integer(cache), l, b).unwrap()
    }

    #[test]
    fn full_cache_sends_nothing() {
        let params = params(3, 4, 4, 2, 5);
        let q = zipf(4, 0.8).unwrap();
        for scheme in [Scheme::Up, Scheme::Rlfu(Some(4))] {
            let t =
                run_trial(&params, &scheme, &q, RequestMode::Iid, &mut trial_rng(1, 0)).unwrap();
            assert_eq!(t.rate, 0.0);
            assert!(t.decode_ok);
        }
        let sup = SystemParams::new(3, 4, Ratio::from_integer(4), 2, 1).unwrap();
        let t = run_trial(
            &sup,
            &Scheme::Sup,
            &q,
            RequestMode::Iid,
            &mut trial_rng(1, 0),
        )
        .unwrap();
        assert_eq!(t.rate, 0.0);
    }

    #[test]
    fn xor_configuration_costs_one_packet() {
        // User 1 holds packet (A,1) and wants (B,1); user 2 the converse.
        let b = 4;
        let params = SystemParams::new(2, 2, Ratio::new(1, 4), 1, b).unwrap();
        let cache = CacheConfiguration::from_sets(
            b,
            PlacementKind::Packetized,
            vec![vec![vec![0], vec![]], vec![vec![], vec![0]]],
        )
        .unwrap();
        let params1 = SystemParams::new(2, 2, Ratio::from_integer(1), 1, 1).unwrap();
        let cache1 = CacheConfiguration::from_sets(
            1,
            PlacementKind::Packetized,
            vec![vec![vec![0], vec![]], vec![vec![], vec![0]]],
        )
        .unwrap();
        let demands =
            DemandMatrix::from_columns(vec![vec![1], vec![0]], 2, RequestMode::Iid).unwrap();
        let t = deliver(&cache1, &demands, &params1, &mut trial_rng(3, 0)).unwrap();
        assert_eq!((t.rate, t.transmissions, t.num_vertices), (1.0, 1, 2));

        // With B = 4 only the first packets pair up: 8 vertices, 7 classes.
        let t = deliver(&cache, &demands, &params, &mut trial_rng(3, 0)).unwrap();
        assert_eq!(t.num_vertices, 8);
        assert_eq!(t.rate, 7.0 / b as f64);
    }

    #[test]
    fn rate_never_exceeds_vertices() {
        let params = params(4, 6, 2, 2, 8);
        let q = zipf(6, 0.6).unwrap();
        let report = monte_carlo(&params, &Scheme::Up, &q, RequestMode::Iid, 20, 9).unwrap();
        for t in &report.trials {
            assert!(t.rate <= t.num_vertices as f64 / 8.0 + 1e-12);
            assert!(t.rate <= 8.0);
            assert!(t.local_value <= t.transmissions);
        }
    }

    #[test]
    fn single_trial_report() {
        let params = params(3, 5, 1, 1, 4);
        let q = zipf(5, 0.5).unwrap();
        let report = monte_carlo(&params, &Scheme::Up, &q, RequestMode::Iid, 1, 77).unwrap();
        let t = run_trial(
            &params,
            &Scheme::Up,
            &q,
            RequestMode::Iid,
            &mut trial_rng(77, 0),
        )
        .unwrap();
        assert_eq!(report.trials, vec![t]);
        assert_eq!((report.mean_rate, report.std_error), (t.rate, 0.0));
    }

    #[test]
    fn reports_are_deterministic() {
        let params = params(4, 8, 2, 2, 6);
        let q = zipf(8, 1.0).unwrap();
        let a = monte_carlo(
            &params,
            &Scheme::Rlfu(None),
            &q,
            RequestMode::Distinct,
            16,
            5,
        )
        .unwrap();
        let b = monte_carlo(
            &params,
            &Scheme::Rlfu(None),
            &q,
            RequestMode::Distinct,
            16,
            5,
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trials_csv(), b.trials_csv());
    }

    #[test]
    fn zero_trials_rejected() {
        let params = params(2, 3, 1, 1, 2);
        let q = zipf(3, 0.5).unwrap();
        assert!(monte_carlo(&params, &Scheme::Up, &q, RequestMode::Iid, 0, 1).is_err());
    }

    #[test]
    fn sup_requires_scalar_params() {
        let params = params(2, 4, 2, 1, 3);
        let q = zipf(4, 0.5).unwrap();
        assert!(run_trial(
            &params,
            &Scheme::Sup,
            &q,
            RequestMode::Iid,
            &mut trial_rng(0, 0)
        )
        .is_err());
    }

    #[test]
    fn mean_and_std_error_oracle() {
        let (m, s) = mean_and_std_error(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        // sample variance 5/3, divided by 4.
        assert!((s - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn std_error_halves_with_four_times_the_trials() {
        let params = params(3, 6, 1, 1, 4);
        let q = zipf(6, 0.5).unwrap();
        let small = monte_carlo(&params, &Scheme::Up, &q, RequestMode::Iid, 200, 11).unwrap();
        let large = monte_carlo(&params, &Scheme::Up, &q, RequestMode::Iid, 800, 12).unwrap();
        let ratio = large.std_error / small.std_error;
        assert!((0.35..0.7).contains(&ratio), "ratio {ratio}");
    }
}
