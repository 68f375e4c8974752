//! Seeded sampling of measurement outcomes.
//!
//! Every run draws from a ChaCha8 stream seeded with `RunConfig::seed`.
//! Within a trial the draw order is fixed: setting pair (uniform policy
//! only), then λ (hidden-variable source only), then outcomes. Settings are
//! drawn before and independently of λ.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::lhv::{LhvModel, Object};
use crate::quantum::{joint_distribution, make_phi_plus, trine_bases, MeasurementBasis, TwoQubitState};
use crate::{BellError, Result, Setting};

/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.5758293035489004;

#[derive(Debug, Clone)]
pub enum Source {
    /// A two-qubit state measured in the bases for A, B, C.
    Quantum {
        state: TwoQubitState,
        bases: [MeasurementBasis; 3],
    },
    Lhv(LhvModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Quantum,
    Lhv,
}

impl Source {
    /// |Φ⁺⟩ with the trine bases.
    pub fn quantum_trine() -> Self {
        Source::Quantum {
            state: make_phi_plus(),
            bases: trine_bases(),
        }
    }

    pub fn kind(&self) -> SourceKind {
        match self {
            Source::Quantum { .. } => SourceKind::Quantum,
            Source::Lhv(_) => SourceKind::Lhv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SettingsPolicy {
    Fixed(Setting, Setting),
    /// Each trial picks one of the nine ordered pairs uniformly.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_samples: u64,
    pub seed: u64,
    pub settings_policy: SettingsPolicy,
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(BellError::InvalidArgument(
                "n_samples must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialRecord {
    pub index: u64,
    pub settings: (Setting, Setting),
    pub outcomes: (u8, u8),
    /// Index of the drawn λ for hidden-variable sources.
    pub lambda: Option<usize>,
}

/// Outcome tables for one source, built once per run.
#[derive(Debug, Clone)]
pub struct Sampler {
    inner: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    /// `[X][X']` → probabilities of (0,0), (0,1), (1,0), (1,1).
    Quantum([[[f64; 4]; 3]; 3]),
    Lhv {
        model: LhvModel,
        weights: Vec<f64>,
    },
}

fn pick(probs: impl IntoIterator<Item = f64>, u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, p) in probs.into_iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left the total just under u.
    last_positive
}

impl Sampler {
    pub fn new(source: &Source) -> Result<Self> {
        let inner = match source {
            Source::Quantum { state, bases } => {
                let mut tables = [[[0.0; 4]; 3]; 3];
                for s1 in Setting::ALL {
                    for s2 in Setting::ALL {
                        let d = joint_distribution(state, &bases[s1.index()], &bases[s2.index()])?;
                        tables[s1.index()][s2.index()] = [d.p[0][0], d.p[0][1], d.p[1][0], d.p[1][1]];
                    }
                }
                SamplerKind::Quantum(tables)
            }
            Source::Lhv(model) => SamplerKind::Lhv {
                model: model.clone(),
                weights: model.lambdas().iter().map(|l| l.weight).collect(),
            },
        };
        Ok(Sampler { inner })
    }

    pub fn sample<R: Rng + ?Sized>(
        &self,
        index: u64,
        settings: (Setting, Setting),
        rng: &mut R,
    ) -> TrialRecord {
        let (s1, s2) = settings;
        match &self.inner {
            SamplerKind::Quantum(tables) => {
                let k = pick(tables[s1.index()][s2.index()], rng.random::<f64>());
                TrialRecord {
                    index,
                    settings,
                    outcomes: ((k >> 1) as u8, (k & 1) as u8),
                    lambda: None,
                }
            }
            SamplerKind::Lhv { model, weights } => {
                let li = pick(weights.iter().copied(), rng.random::<f64>());
                let table = &model.lambdas()[li].table;
                let x1 = (rng.random::<f64>() >= table.prob(Object::First, s1, 0)) as u8;
                let x2 = (rng.random::<f64>() >= table.prob(Object::Second, s2, 0)) as u8;
                TrialRecord {
                    index,
                    settings,
                    outcomes: (x1, x2),
                    lambda: Some(li),
                }
            }
        }
    }
}

/// Samples one trial. Builds a [`Sampler`] on every call; loops should
/// build one sampler and reuse it.
pub fn sample_trial<R: Rng + ?Sized>(
    source: &Source,
    index: u64,
    settings: (Setting, Setting),
    rng: &mut R,
) -> Result<TrialRecord> {
    Ok(Sampler::new(source)?.sample(index, settings, rng))
}

fn draw_settings<R: Rng + ?Sized>(policy: SettingsPolicy, rng: &mut R) -> (Setting, Setting) {
    match policy {
        SettingsPolicy::Fixed(a, b) => (a, b),
        SettingsPolicy::Uniform => {
            let k = rng.random_range(0..9usize);
            (Setting::ALL[k / 3], Setting::ALL[k % 3])
        }
    }
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn drive<F: FnMut(&TrialRecord)>(
    sampler: &Sampler,
    policy: SettingsPolicy,
    rng: &mut ChaCha8Rng,
    indices: std::ops::Range<u64>,
    mut f: F,
) {
    for index in indices {
        let settings = draw_settings(policy, rng);
        let t = sampler.sample(index, settings, rng);
        f(&t);
    }
}

/// Calls `f` on every trial of the single-stream reference run.
pub fn for_each_trial<F: FnMut(&TrialRecord)>(config: &RunConfig, source: &Source, f: F) -> Result<()> {
    config.validate()?;
    let sampler = Sampler::new(source)?;
    let mut rng = rng_for(config.seed, 0);
    drive(&sampler, config.settings_policy, &mut rng, 0..config.n_samples, f);
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally {
    /// `[X][X']` → (trials, agreements)
    counts: [[(u64, u64); 3]; 3],
}

impl Tally {
    fn add(&mut self, t: &TrialRecord) {
        let c = &mut self.counts[t.settings.0.index()][t.settings.1.index()];
        c.0 += 1;
        c.1 += (t.outcomes.0 == t.outcomes.1) as u64;
    }

    fn merge(&mut self, other: &Tally) {
        for i in 0..3 {
            for j in 0..3 {
                self.counts[i][j].0 += other.counts[i][j].0;
                self.counts[i][j].1 += other.counts[i][j].1;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalMethod {
    Normal,
    Wilson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairEstimate {
    pub settings: (Setting, Setting),
    pub trials: u64,
    pub agreements: u64,
    pub p_same: f64,
    pub standard_error: f64,
    /// 99% interval, clipped to [0, 1].
    pub interval: (f64, f64),
    pub method: IntervalMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BellSumEstimate {
    pub value: f64,
    pub standard_error: f64,
    /// 99% interval, clipped to [0, 3].
    pub interval: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub source: SourceKind,
    pub config: RunConfig,
    /// Only pairs that received at least one trial, in (X, X') order.
    pub pairs: Vec<PairEstimate>,
    /// Present when (A,B), (A,C) and (B,C) all received trials.
    pub bell_sum: Option<BellSumEstimate>,
}

impl EstimateReport {
    pub fn pair(&self, s1: Setting, s2: Setting) -> Option<&PairEstimate> {
        self.pairs.iter().find(|p| p.settings == (s1, s2))
    }
}

/// Agreement estimate with a 99% interval: normal approximation, or Wilson
/// when fewer than five agreements or disagreements were seen. For Wilson
/// the reported standard error is the half-width over z.
pub fn estimate_proportion(agreements: u64, trials: u64) -> (f64, f64, (f64, f64), IntervalMethod) {
    assert!(trials > 0 && agreements <= trials);
    let n = trials as f64;
    let p = agreements as f64 / n;
    let near_edge = agreements < 5 || trials - agreements < 5;
    if near_edge {
        let z2 = Z_99 * Z_99;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = Z_99 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        let lo = (center - half).max(0.0);
        let hi = (center + half).min(1.0);
        (p, half / Z_99, (lo, hi), IntervalMethod::Wilson)
    } else {
        let se = (p * (1.0 - p) / n).sqrt();
        let lo = (p - Z_99 * se).max(0.0);
        let hi = (p + Z_99 * se).min(1.0);
        (p, se, (lo, hi), IntervalMethod::Normal)
    }
}

fn build_report(config: &RunConfig, source: SourceKind, tally: &Tally) -> EstimateReport {
    let mut pairs = Vec::new();
    for s1 in Setting::ALL {
        for s2 in Setting::ALL {
            let (trials, agreements) = tally.counts[s1.index()][s2.index()];
            if trials == 0 {
                continue;
            }
            let (p_same, standard_error, interval, method) = estimate_proportion(agreements, trials);
            pairs.push(PairEstimate {
                settings: (s1, s2),
                trials,
                agreements,
                p_same,
                standard_error,
                interval,
                method,
            });
        }
    }
    let find = |s: (Setting, Setting)| pairs.iter().find(|p| p.settings == s).copied();
    let bell = Setting::BELL_PAIRS
        .iter()
        .map(|&s| find(s))
        .collect::<Option<Vec<_>>>();
    let bell_sum = bell.map(|ps| {
        let value: f64 = ps.iter().map(|p| p.p_same).sum();
        let standard_error = ps
            .iter()
            .map(|p| p.standard_error * p.standard_error)
            .sum::<f64>()
            .sqrt();
        BellSumEstimate {
            value,
            standard_error,
            interval: (
                (value - Z_99 * standard_error).max(0.0),
                (value + Z_99 * standard_error).min(3.0),
            ),
        }
    });
    EstimateReport {
        source,
        config: *config,
        pairs,
        bell_sum,
    }
}

/// Single-stream reference run. Identical inputs give identical reports.
pub fn run_experiment(config: &RunConfig, source: &Source) -> Result<EstimateReport> {
    let mut tally = Tally::default();
    for_each_trial(config, source, |t| tally.add(t))?;
    Ok(build_report(config, source.kind(), &tally))
}

/// Splits the run across `shards` threads. Shard `k` uses ChaCha stream
/// `k + 1` of the same seed, so results depend on `shards` but not on
/// scheduling. Statistically equivalent to, not identical with,
/// [`run_experiment`].
pub fn run_experiment_sharded(config: &RunConfig, source: &Source, shards: usize) -> Result<EstimateReport> {
    config.validate()?;
    if shards == 0 {
        return Err(BellError::InvalidArgument("shards must be at least 1".into()));
    }
    let sampler = Sampler::new(source)?;
    let n = config.n_samples;
    let k = shards as u64;
    let ranges: Vec<std::ops::Range<u64>> = (0..k)
        .map(|s| {
            let start = s * (n / k) + s.min(n % k);
            let len = n / k + u64::from(s < n % k);
            start..start + len
        })
        .collect();
    let tallies: Vec<Tally> = std::thread::scope(|scope| {
        let handles: Vec<_> = ranges
            .into_iter()
            .enumerate()
            .map(|(s, range)| {
                let sampler = &sampler;
                scope.spawn(move || {
                    let mut rng = rng_for(config.seed, s as u64 + 1);
                    let mut tally = Tally::default();
                    drive(sampler, config.settings_policy, &mut rng, range, |t| tally.add(t));
                    tally
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sampling thread panicked"))
            .collect()
    });
    let mut total = Tally::default();
    for t in &tallies {
        total.merge(t);
    }
    Ok(build_report(config, source.kind(), &total))
}

/// Writes `trial,X,X',x,x'` rows for the reference run.
pub fn write_trials_csv<W: Write>(config: &RunConfig, source: &Source, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trial", "X", "X'", "x", "x'"])?;
    let mut err = None;
    for_each_trial(config, source, |t| {
        if err.is_some() {
            return;
        }
        if let Err(e) = w.write_record([
            t.index.to_string(),
            t.settings.0.to_string(),
            t.settings.1.to_string(),
            t.outcomes.0.to_string(),
            t.outcomes.1.to_string(),
        ]) {
            err = Some(e);
        }
    })?;
    if let Some(e) = err {
        return Err(e.into());
    }
    w.flush().map_err(|e| BellError::Csv(e.into()))?;
    Ok(())
}

pub fn write_trials_csv_file(config: &RunConfig, source: &Source, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| BellError::io(path, e))?;
    write_trials_csv(config, source, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lhv::{
        lhv_p_same, model_from_triplet_distribution, uniform_triplet_weights, PropertyTriplet,
        TripletWeights,
    };
    use crate::quantum::p_same;

    fn uniform_lhv() -> Source {
        Source::Lhv(model_from_triplet_distribution(&uniform_triplet_weights()).unwrap())
    }

    fn config(n: u64, seed: u64, settings_policy: SettingsPolicy) -> RunConfig {
        RunConfig {
            n_samples: n,
            seed,
            settings_policy,
        }
    }

    #[test]
    fn quantum_same_setting_always_agrees() {
        let sampler = Sampler::new(&Source::quantum_trine()).unwrap();
        for seed in 0..5 {
            let mut rng = rng_for(seed, 0);
            for i in 0..2000 {
                for s in Setting::ALL {
                    let t = sampler.sample(i, (s, s), &mut rng);
                    assert_eq!(t.outcomes.0, t.outcomes.1);
                }
            }
        }
    }

    #[test]
    fn deterministic_lhv_always_gives_triplet_values() {
        let m = model_from_triplet_distribution(&TripletWeights::from([(
            PropertyTriplet::new(0, 0, 1),
            1.0,
        )]))
        .unwrap();
        let src = Source::Lhv(m);
        let mut rng = rng_for(3, 0);
        for i in 0..1000 {
            let t = sample_trial(&src, i, (Setting::A, Setting::C), &mut rng).unwrap();
            assert_eq!(t.outcomes, (0, 1));
            assert_eq!(t.lambda, Some(0));
        }
    }

    #[test]
    fn quantum_zero_zero_frequency_tends_to_one_eighth() {
        let cfg = config(200_000, 11, SettingsPolicy::Fixed(Setting::A, Setting::B));
        let mut zero_zero = 0u64;
        for_each_trial(&cfg, &Source::quantum_trine(), |t| {
            zero_zero += (t.outcomes == (0, 0)) as u64;
        })
        .unwrap();
        let n = cfg.n_samples as f64;
        let p = zero_zero as f64 / n;
        let se = (0.125f64 * 0.875 / n).sqrt();
        assert!((p - 0.125).abs() < 4.0 * se, "p={p}");
    }

    #[test]
    fn zero_samples_rejected() {
        let cfg = config(0, 1, SettingsPolicy::Uniform);
        assert!(matches!(
            run_experiment(&cfg, &Source::quantum_trine()),
            Err(BellError::InvalidArgument(_))
        ));
        assert!(run_experiment_sharded(&cfg, &Source::quantum_trine(), 2).is_err());
    }

    #[test]
    fn identical_runs_are_identical() {
        let cfg = config(20_000, 42, SettingsPolicy::Uniform);
        for src in [Source::quantum_trine(), uniform_lhv()] {
            let a = run_experiment(&cfg, &src).unwrap();
            let b = run_experiment(&cfg, &src).unwrap();
            assert_eq!(
                serde_json::to_string(&a).unwrap(),
                serde_json::to_string(&b).unwrap()
            );
        }
    }

    #[test]
    fn sharded_runs_are_deterministic_and_complete() {
        let cfg = config(30_001, 9, SettingsPolicy::Uniform);
        let a = run_experiment_sharded(&cfg, &uniform_lhv(), 4).unwrap();
        let b = run_experiment_sharded(&cfg, &uniform_lhv(), 4).unwrap();
        assert_eq!(a, b);
        let total: u64 = a.pairs.iter().map(|p| p.trials).sum();
        assert_eq!(total, 30_001);
        let bell = a.bell_sum.unwrap();
        assert!((bell.value - 1.5).abs() < 4.0 * bell.standard_error);
    }

    #[test]
    fn fixed_policy_has_no_bell_sum() {
        let cfg = config(100, 1, SettingsPolicy::Fixed(Setting::B, Setting::C));
        let r = run_experiment(&cfg, &Source::quantum_trine()).unwrap();
        assert_eq!(r.pairs.len(), 1);
        assert_eq!(r.pairs[0].trials, 100);
        assert!(r.bell_sum.is_none());
    }

    /// Empirical p_same for every pair lands within 4 SE of the exact layer.
    #[test]
    fn estimates_converge_to_exact_values() {
        let cfg = config(100_000, 2024, SettingsPolicy::Uniform);
        let asym = {
            use crate::lhv::{HiddenState, LhvModel, ResponseTable};
            let t1 = ResponseTable::new(
                [[0.2, 0.8], [1.0, 0.0], [0.6, 0.4]],
                [[0.5, 0.5], [0.1, 0.9], [0.0, 1.0]],
            );
            let t2 = ResponseTable::deterministic(PropertyTriplet::new(1, 0, 1));
            LhvModel::new(vec![
                HiddenState { id: "s".into(), weight: 0.7, table: t1 },
                HiddenState { id: "d".into(), weight: 0.3, table: t2 },
            ])
            .unwrap()
        };
        let sources = [Source::quantum_trine(), uniform_lhv(), Source::Lhv(asym)];
        for src in sources {
            let r = run_experiment(&cfg, &src).unwrap();
            for est in &r.pairs {
                let (s1, s2) = est.settings;
                let exact = match &src {
                    Source::Quantum { state, bases } => {
                        p_same(state, &bases[s1.index()], &bases[s2.index()]).unwrap()
                    }
                    Source::Lhv(m) => lhv_p_same(m, s1, s2),
                };
                let exact = exact.clamp(0.0, 1.0);
                let se = (exact * (1.0 - exact) / est.trials as f64).sqrt();
                assert!(
                    (est.p_same - exact).abs() <= 4.0 * se + 1e-12,
                    "{s1}{s2}: {} vs {exact}",
                    est.p_same
                );
            }
        }
    }

    /// Chi-squared independence of setting pair and λ index.
    #[test]
    fn settings_are_independent_of_lambda() {
        let cfg = config(90_000, 77, SettingsPolicy::Uniform);
        let mut counts = [[0f64; 8]; 9];
        for_each_trial(&cfg, &uniform_lhv(), |t| {
            let row = t.settings.0.index() * 3 + t.settings.1.index();
            counts[row][t.lambda.unwrap()] += 1.0;
        })
        .unwrap();
        let n = cfg.n_samples as f64;
        let rows: Vec<f64> = counts.iter().map(|r| r.iter().sum()).collect();
        let cols: Vec<f64> = (0..8).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        let mut chi2 = 0.0;
        for i in 0..9 {
            for j in 0..8 {
                let e = rows[i] * cols[j] / n;
                chi2 += (counts[i][j] - e).powi(2) / e;
            }
        }
        // 56 degrees of freedom; the 99.99% quantile is about 102.
        assert!(chi2 < 102.0, "chi2={chi2}");
    }

    #[test]
    fn wilson_interval_at_the_edge() {
        let (p, se, (lo, hi), m) = estimate_proportion(1000, 1000);
        assert_eq!(p, 1.0);
        assert_eq!(m, IntervalMethod::Wilson);
        assert!(se > 0.0);
        assert!(hi <= 1.0 && lo < 1.0 && lo > 0.99);
        let (_, _, (lo, hi), m) = estimate_proportion(500, 1000);
        assert_eq!(m, IntervalMethod::Normal);
        assert!(lo > 0.45 && hi < 0.55);
    }

    #[test]
    fn trial_csv_has_fixed_columns() {
        let cfg = config(5, 1, SettingsPolicy::Uniform);
        let mut buf = Vec::new();
        write_trials_csv(&cfg, &Source::quantum_trine(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "trial,X,X',x,x'");
        assert_eq!(lines.len(), 6);
        assert!(lines[1].starts_with("0,"));
    }
}
