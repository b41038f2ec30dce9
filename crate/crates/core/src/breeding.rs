//! Breeding protocol: closed-form binomial states, the balanced breed tree,
//! post-selection policies and Monte-Carlo yield estimation.

use std::f64::consts::SQRT_2;

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{Basis, GaussianTerm, PruneReport, WaveFunction, DEFAULT_PRUNE_TOL};
use crate::metrics::fidelity;
use crate::optics::{self, make_cat, CatSpec, OutcomeSampler};
use crate::SQRT_PI;

/// Largest order for which binomial coefficients are computed exactly.
pub const MAX_EXACT_ORDER: u32 = 20;

/// Order `m`, squeezing `zeta` and distance `spacing` between adjacent peaks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BinomialSpec {
    pub m: u32,
    pub zeta: f64,
    pub spacing: f64,
}

impl BinomialSpec {
    /// Peaks on the `2√π` lattice.
    pub fn lattice(m: u32, zeta: f64) -> Self {
        Self { m, zeta, spacing: 2.0 * SQRT_PI }
    }
}

/// `ln binom(2^m, k)` for `k = 0..=2^m`, from exact integer arithmetic.
pub fn pascal_row_ln(m: u32) -> Result<Vec<f64>> {
    if m > MAX_EXACT_ORDER {
        return Err(Error::OrderTooLarge(m));
    }
    let n: u64 = 1 << m;
    let half = (n / 2) as usize;
    let mut lower = Vec::with_capacity(half + 1);
    let mut c = BigUint::from(1u32);
    for k in 0..=half as u64 {
        lower.push(ln_biguint(&c));
        c = c * (n - k) / (k + 1);
    }
    let mut row = lower.clone();
    row.extend(lower[..(n as usize - half)].iter().rev());
    Ok(row)
}

fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    let shift = bits.saturating_sub(64);
    let top = (x >> shift).iter_u64_digits().next().unwrap_or(0);
    (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
}

/// Closed-form order-`m` binomial state
/// `Σₙ binom(2^m, n) G(x, e^{−2ζ}, spacing·(n − 2^{m−1}))`.
pub fn binomial_state(spec: BinomialSpec) -> Result<WaveFunction> {
    if !(spec.spacing > 0.0) {
        return Err(Error::InvalidParameter(format!("spacing must be positive, got {}", spec.spacing)));
    }
    let row = pascal_row_ln(spec.m)?;
    let variance = (-2.0 * spec.zeta).exp();
    let centre = (1u64 << spec.m) as f64 / 2.0;
    let terms = row
        .iter()
        .enumerate()
        .map(|(n, &ln)| {
            GaussianTerm::from_ln_coeff(ln.into(), variance.into(), (spec.spacing * (n as f64 - centre)).into())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WaveFunction::new(Basis::Position, terms))
}

/// One breeding step with its bookkeeping.
#[derive(Clone, Debug)]
pub struct StepResult {
    pub state: WaveFunction,
    pub density: f64,
    pub report: PruneReport,
}

/// Beam-split `a` and `b`, condition on `p₂ = r`, then merge and prune.
///
/// With `a = b = β(m)` and `r = 0` the result is `β(m+1)` with the peak
/// spacing contracted by `√2`, up to a global constant.
pub fn breed_step(a: &WaveFunction, b: &WaveFunction, r: f64, prune_tol: f64) -> Result<WaveFunction> {
    breed_step_detailed(a, b, r, prune_tol).map(|s| s.state)
}

pub fn breed_step_detailed(a: &WaveFunction, b: &WaveFunction, r: f64, prune_tol: f64) -> Result<StepResult> {
    let raw = optics::project_pair(a, b, r)?;
    let density = optics::outcome_density(a, b, r)?;
    let (state, report) = raw.merge_prune(prune_tol)?;
    Ok(StepResult { state, density, report })
}

fn default_spacing() -> f64 {
    2.0 * SQRT_PI
}

fn default_prune_tol() -> f64 {
    DEFAULT_PRUNE_TOL
}

fn default_retry_budget() -> u64 {
    100_000
}

/// Protocol parameters, read from JSON with these field names.
///
/// `base_spacing` is the peak spacing of the final comb; the cat amplitude is
/// chosen so that `m_target` rounds of `√2` contraction land on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub m_target: u32,
    pub zeta: f64,
    #[serde(default = "default_spacing")]
    pub base_spacing: f64,
    #[serde(default)]
    pub window_epsilon: f64,
    #[serde(default = "default_prune_tol")]
    pub prune_tol: f64,
    #[serde(default)]
    pub seed: u64,
    /// Attempts allowed per tree node under the window policy.
    #[serde(default = "default_retry_budget")]
    pub retry_budget: u64,
}

impl ProtocolConfig {
    pub fn new(m_target: u32, zeta: f64) -> Self {
        Self {
            m_target,
            zeta,
            base_spacing: default_spacing(),
            window_epsilon: 0.0,
            prune_tol: default_prune_tol(),
            seed: 0,
            retry_budget: default_retry_budget(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_target < 1 || self.m_target > MAX_EXACT_ORDER {
            return Err(Error::InvalidParameter(format!("m_target must be in 1..={MAX_EXACT_ORDER}, got {}", self.m_target)));
        }
        if !(self.zeta >= 0.0) || !self.zeta.is_finite() {
            return Err(Error::InvalidParameter(format!("zeta must be finite and non-negative, got {}", self.zeta)));
        }
        if !(self.base_spacing > 0.0) || !self.base_spacing.is_finite() {
            return Err(Error::InvalidParameter(format!("base_spacing must be positive, got {}", self.base_spacing)));
        }
        if !(self.window_epsilon >= 0.0) {
            return Err(Error::InvalidParameter(format!("window_epsilon must be non-negative, got {}", self.window_epsilon)));
        }
        if !(self.prune_tol >= 0.0) {
            return Err(Error::InvalidParameter(format!("prune_tol must be non-negative, got {}", self.prune_tol)));
        }
        if self.retry_budget == 0 {
            return Err(Error::InvalidParameter("retry_budget must be at least 1".into()));
        }
        Ok(())
    }

    pub fn cat_spec(&self) -> Result<CatSpec> {
        CatSpec::for_final_spacing(self.m_target, self.zeta, self.base_spacing)
    }

    /// Minimum number of cats, `2^m_target`.
    pub fn cat_budget(&self) -> u64 {
        1u64 << self.m_target
    }
}

/// How homodyne outcomes are chosen and accepted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// Force `r = 0` at every node.
    ExactZero,
    /// Sample `r`; accept iff `|r| ≤ window_epsilon`, otherwise rebuild the branch.
    Window,
    /// Sample `r` and accept every outcome.
    Sample,
}

/// One beam-split + homodyne event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreedRecord {
    /// Tree level, 1 for cat+cat.
    pub round: u32,
    /// Running index of measurement events in this run.
    pub node: u64,
    /// Attempt number at this tree position.
    pub attempt: u64,
    pub r: f64,
    pub accepted: bool,
    pub density: f64,
    pub terms_before: usize,
    pub terms_after: usize,
    /// Cats consumed so far in the run.
    pub cats_consumed: u64,
}

#[derive(Clone, Debug)]
pub struct ProtocolRun {
    pub state: WaveFunction,
    pub records: Vec<BreedRecord>,
    pub cats_consumed: u64,
    pub cat: CatSpec,
}

struct Runner<'a> {
    cfg: &'a ProtocolConfig,
    policy: Policy,
    rng: &'a mut ChaCha8Rng,
    cat: WaveFunction,
    cat_sampler: Option<&'a OutcomeSampler>,
    own_cat_sampler: Option<OutcomeSampler>,
    records: Vec<BreedRecord>,
    cats: u64,
    events: u64,
    keep_records: bool,
    // window-only sampling for rounds ≥ 2; rejected outcomes are not resolved
    fast_reject: bool,
    // (attempts, accepts) per round
    counts: Vec<(u64, u64)>,
    first_accepted: Option<bool>,
}

impl Runner<'_> {
    fn tally(&mut self, level: u32, accepted: bool) {
        let c = &mut self.counts[level as usize - 1];
        c.0 += 1;
        c.1 += accepted as u64;
        self.first_accepted.get_or_insert(accepted);
    }

    fn sample_r(&mut self, level: u32, a: &WaveFunction, b: &WaveFunction) -> Result<f64> {
        if level == 1 {
            if let Some(s) = self.cat_sampler {
                return Ok(s.sample(self.rng));
            }
            if self.own_cat_sampler.is_none() {
                self.own_cat_sampler = Some(OutcomeSampler::new(&self.cat, &self.cat)?);
            }
            let s = self.own_cat_sampler.as_ref().expect("initialised above");
            return Ok(s.sample(self.rng));
        }
        Ok(OutcomeSampler::new(a, b)?.sample(self.rng))
    }

    fn produce(&mut self, level: u32) -> Result<WaveFunction> {
        if level == 0 {
            self.cats += 1;
            return Ok(self.cat.clone());
        }
        let mut attempt = 0;
        loop {
            attempt += 1;
            let a = self.produce(level - 1)?;
            let b = self.produce(level - 1)?;
            if self.fast_reject && level >= 2 && self.policy == Policy::Window {
                self.events += 1;
                match optics::sample_in_window(&a, &b, self.cfg.window_epsilon, self.rng)? {
                    Some(r) => {
                        self.tally(level, true);
                        return Ok(optics::project_pair(&a, &b, r)?.merge_prune(self.cfg.prune_tol)?.0);
                    }
                    None => {
                        self.tally(level, false);
                        if attempt >= self.cfg.retry_budget {
                            return Err(Error::Rejected { round: level, attempts: attempt });
                        }
                        continue;
                    }
                }
            }
            let r = match self.policy {
                Policy::ExactZero => 0.0,
                Policy::Window | Policy::Sample => self.sample_r(level, &a, &b)?,
            };
            let accepted = match self.policy {
                Policy::Window => r.abs() <= self.cfg.window_epsilon,
                Policy::ExactZero | Policy::Sample => true,
            };
            self.events += 1;
            self.tally(level, accepted);
            let node = self.events;
            let raw = optics::project_pair(&a, &b, r)?;
            let density = optics::outcome_density(&a, &b, r)?;
            let terms_before = raw.len();
            let state = if accepted { Some(raw.merge_prune(self.cfg.prune_tol)?.0) } else { None };
            if self.keep_records {
                self.records.push(BreedRecord {
                    round: level,
                    node,
                    attempt,
                    r,
                    accepted,
                    density,
                    terms_before,
                    terms_after: state.as_ref().map_or(0, WaveFunction::len),
                    cats_consumed: self.cats,
                });
            }
            if let Some(state) = state {
                return Ok(state);
            }
            if attempt >= self.cfg.retry_budget {
                return Err(Error::Rejected { round: level, attempts: attempt });
            }
        }
    }
}

/// Run the balanced breed tree of depth `m_target` over `2^m_target` squeezed
/// cats. The random stream is seeded from `cfg.seed`; the exact-zero policy
/// draws nothing from it.
pub fn run_protocol(cfg: &ProtocolConfig, policy: Policy) -> Result<ProtocolRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    run_protocol_with(cfg, policy, &mut rng, None)
}

/// As [`run_protocol`] with a caller-supplied stream and an optional
/// precomputed sampler for the cat+cat nodes.
pub fn run_protocol_with(
    cfg: &ProtocolConfig,
    policy: Policy,
    rng: &mut ChaCha8Rng,
    cat_sampler: Option<&OutcomeSampler>,
) -> Result<ProtocolRun> {
    run_inner(cfg, policy, rng, cat_sampler, true)
}

fn run_inner(
    cfg: &ProtocolConfig,
    policy: Policy,
    rng: &mut ChaCha8Rng,
    cat_sampler: Option<&OutcomeSampler>,
    keep_records: bool,
) -> Result<ProtocolRun> {
    cfg.validate()?;
    let spec = cfg.cat_spec()?;
    let mut runner = Runner {
        cfg,
        policy,
        rng,
        cat: make_cat(spec),
        cat_sampler,
        own_cat_sampler: None,
        records: Vec::new(),
        cats: 0,
        events: 0,
        keep_records,
        fast_reject: false,
        counts: vec![(0, 0); cfg.m_target as usize],
        first_accepted: None,
    };
    let state = runner.produce(cfg.m_target)?;
    Ok(ProtocolRun { state, records: runner.records, cats_consumed: runner.cats, cat: spec })
}

/// Acceptance counts for one tree level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundStats {
    pub round: u32,
    pub attempts: u64,
    pub accepts: u64,
    pub acceptance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct YieldStats {
    pub trials: u64,
    pub successes: u64,
    /// Trials that exhausted the retry budget.
    pub rejected_trials: u64,
    pub node_attempts: u64,
    pub node_accepts: u64,
    /// Per-node acceptance probability, `node_accepts / node_attempts`.
    pub acceptance: f64,
    /// Binomial standard error of `acceptance`.
    pub acceptance_std_error: f64,
    pub rounds: Vec<RoundStats>,
    /// Trials whose first measurement event was accepted.
    pub first_attempt_accepts: u64,
    /// Minimum cat count, `2^m`.
    pub min_cats: u64,
    /// Cats consumed across all trials per successful final state.
    pub expected_cats: f64,
    /// Mean fidelity of successful outputs to the exact-zero state.
    pub mean_fidelity: f64,
}

struct TrialOutcome {
    attempts: Vec<u64>,
    accepts: Vec<u64>,
    first_accepted: bool,
    cats: u64,
    fidelity: Option<f64>,
}

/// Independent stream for trial `index` under `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Monte-Carlo yield of the window policy over `n_trials` independent runs.
/// Deterministic for a given `cfg.seed`.
///
/// Rounds above the first tabulate the outcome distribution only inside the
/// window, so their random streams differ from [`run_protocol`] while the
/// acceptance statistics are the same.
pub fn yield_estimate(cfg: &ProtocolConfig, n_trials: u64) -> Result<YieldStats> {
    cfg.validate()?;
    if !(cfg.window_epsilon > 0.0) {
        return Err(Error::InvalidParameter("yield estimation needs window_epsilon > 0".into()));
    }
    if n_trials == 0 {
        return Err(Error::InvalidParameter("n_trials must be at least 1".into()));
    }
    let reference = run_protocol(cfg, Policy::ExactZero)?.state;
    let cat = make_cat(cfg.cat_spec()?);
    let sampler = OutcomeSampler::new(&cat, &cat)?;
    let m = cfg.m_target as usize;

    let outcomes = (0..n_trials)
        .into_par_iter()
        .map(|trial| -> Result<TrialOutcome> {
            let mut rng = trial_rng(cfg.seed, trial);
            let mut runner = Runner {
                cfg,
                policy: Policy::Window,
                rng: &mut rng,
                cat: cat.clone(),
                cat_sampler: Some(&sampler),
                own_cat_sampler: None,
                records: Vec::new(),
                cats: 0,
                events: 0,
                keep_records: false,
                fast_reject: true,
                counts: vec![(0, 0); m],
                first_accepted: None,
            };
            let result = runner.produce(cfg.m_target);
            let attempts = runner.counts.iter().map(|c| c.0).collect();
            let accepts = runner.counts.iter().map(|c| c.1).collect();
            let first_accepted = runner.first_accepted.unwrap_or(false);
            let cats = runner.cats;
            let fidelity = match result {
                Ok(state) => Some(fidelity(&state, &reference)?),
                Err(Error::Rejected { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(TrialOutcome { attempts, accepts, first_accepted, cats, fidelity })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut attempts = vec![0u64; m];
    let mut accepts = vec![0u64; m];
    let mut successes = 0;
    let mut cats = 0;
    let mut first = 0;
    let mut fid_sum = 0.0;
    for o in &outcomes {
        for k in 0..m {
            attempts[k] += o.attempts[k];
            accepts[k] += o.accepts[k];
        }
        cats += o.cats;
        first += o.first_accepted as u64;
        if let Some(f) = o.fidelity {
            successes += 1;
            fid_sum += f;
        }
    }
    let node_attempts: u64 = attempts.iter().sum();
    let node_accepts: u64 = accepts.iter().sum();
    let acceptance = node_accepts as f64 / node_attempts as f64;
    let rounds = (0..m)
        .map(|k| RoundStats {
            round: k as u32 + 1,
            attempts: attempts[k],
            accepts: accepts[k],
            acceptance: accepts[k] as f64 / attempts[k].max(1) as f64,
        })
        .collect();
    Ok(YieldStats {
        trials: n_trials,
        successes,
        rejected_trials: n_trials - successes,
        node_attempts,
        node_accepts,
        acceptance,
        acceptance_std_error: (acceptance * (1.0 - acceptance) / node_attempts as f64).sqrt(),
        rounds,
        first_attempt_accepts: first,
        min_cats: cfg.cat_budget(),
        expected_cats: if successes > 0 { cats as f64 / successes as f64 } else { f64::INFINITY },
        mean_fidelity: if successes > 0 { fid_sum / successes as f64 } else { f64::NAN },
    })
}

/// Momentum displacement `gain · r` applied to a state accepted at outcome `r`.
pub fn correction_hook(state: &WaveFunction, r: f64, gain: f64) -> WaveFunction {
    state.displace(0.0, gain * r)
}

/// Fidelity to `reference` after [`correction_hook`] for each gain.
pub fn correction_sweep(state: &WaveFunction, reference: &WaveFunction, r: f64, gains: &[f64]) -> Result<Vec<(f64, f64)>> {
    gains
        .iter()
        .map(|&g| Ok((g, fidelity(&correction_hook(state, r, g), reference)?)))
        .collect()
}

/// Peak spacing after one breeding round at `r = 0`.
pub fn contracted_spacing(spacing: f64) -> f64 {
    spacing / SQRT_2
}
