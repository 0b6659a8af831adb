//! Simulation of single-site Glauber dynamics on the full configuration.
//!
//! The field at a vertex depends only on the number of other spin-1
//! vertices, so a step costs O(1): pick a vertex uniformly, read
//! `S = ones - X(i)`, draw `U` and set the spin to 1 iff `U <= P+(S)`.
//! Each step draws the vertex first and `U` second from the chain's own
//! stream (see [`crate::rng`]).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{classify_phase, FixedPointKind, Phase};
use crate::error::{domain, Error, Result};
use crate::exactchain::build_kernel;
use crate::model::{ModelParams, SpinConfiguration};
use crate::rng::{stream, uniform_index, unit_f64, ChainRng};

/// Precomputed `P+(s)` for `s = 0..n`.
#[derive(Debug, Clone)]
pub struct Glauber {
    params: ModelParams,
    plus: Vec<f64>,
}

impl Glauber {
    pub fn new(params: &ModelParams) -> Self {
        let plus = (0..params.n())
            .map(|s| params.update_probs_unchecked(s).0)
            .collect();
        Glauber {
            params: *params,
            plus,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    /// `P+(s)`, identical to [`ModelParams::update_prob_plus`].
    pub fn plus(&self, s: usize) -> f64 {
        self.plus[s]
    }

    #[inline]
    fn update(&self, config: &mut SpinConfiguration, i: usize, u: f64) {
        let s = config.ones_count() - config.get(i) as usize;
        config.set(i, u8::from(u <= self.plus[s]));
    }

    pub fn step(&self, state: &mut ChainState) {
        let i = uniform_index(&mut state.rng, self.n());
        let u = unit_f64(&mut state.rng);
        self.update(&mut state.config, i, u);
        state.time += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Start {
    AllOnes,
    AllZeros,
    /// The first `k` vertices carry spin 1.
    Level(usize),
    Given(SpinConfiguration),
}

impl Start {
    pub fn configuration(&self, n: usize) -> Result<SpinConfiguration> {
        match self {
            Start::AllOnes => Ok(SpinConfiguration::ones(n)),
            Start::AllZeros => Ok(SpinConfiguration::zeros(n)),
            Start::Level(k) => SpinConfiguration::at_level(n, *k),
            Start::Given(c) if c.len() == n => Ok(c.clone()),
            Start::Given(c) => domain(format!(
                "configuration has {} vertices, expected {n}",
                c.len()
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChainState {
    pub config: SpinConfiguration,
    pub time: u64,
    pub rng: ChainRng,
}

impl ChainState {
    /// A chain at time 0 whose stream is `stream(seed, 0)`.
    pub fn new(config: SpinConfiguration, seed: u64) -> Self {
        ChainState {
            config,
            time: 0,
            rng: stream(seed, 0),
        }
    }
}

/// Outcome of a stopping time with a step cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopTime {
    Hit(u64),
    TimedOut(u64),
}

impl StopTime {
    pub fn hit(self) -> Option<u64> {
        match self {
            StopTime::Hit(t) => Some(t),
            StopTime::TimedOut(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub stride: u64,
    pub magnetizations: Vec<f64>,
    pub seed: u64,
    pub params: ModelParams,
}

/// Bytes a trajectory may occupy before [`run`] refuses it.
pub const DEFAULT_MEMORY_BUDGET: u64 = 1 << 30;

pub fn run(
    params: &ModelParams,
    start: &Start,
    steps: u64,
    stride: u64,
    seed: u64,
) -> Result<Trajectory> {
    run_with_budget(params, start, steps, stride, seed, DEFAULT_MEMORY_BUDGET)
}

/// Records `c` at steps `0, stride, 2 stride, ...` up to `steps`.
pub fn run_with_budget(
    params: &ModelParams,
    start: &Start,
    steps: u64,
    stride: u64,
    seed: u64,
    memory_budget: u64,
) -> Result<Trajectory> {
    if stride == 0 {
        return domain("stride must be at least 1");
    }
    let records = steps / stride + 1;
    let bytes = records.saturating_mul(8).saturating_add(params.n() as u64);
    if bytes > memory_budget {
        return Err(Error::Refused(format!(
            "trajectory needs about {bytes} bytes, budget is {memory_budget}"
        )));
    }
    let dynamics = Glauber::new(params);
    let mut state = ChainState::new(start.configuration(params.n())?, seed);
    let nf = params.n() as f64;
    let mut magnetizations = Vec::with_capacity(records as usize);
    magnetizations.push(state.config.ones_count() as f64 / nf);
    for _ in 1..records {
        for _ in 0..stride {
            dynamics.step(&mut state);
        }
        magnetizations.push(state.config.ones_count() as f64 / nf);
    }
    Ok(Trajectory {
        stride,
        magnetizations,
        seed,
        params: *params,
    })
}

/// Two chains driven by the same vertex and the same uniform at every step.
/// For non-negative interaction parameters `P+` is nondecreasing in `S`,
/// so `top >= bottom` is preserved.
#[derive(Debug, Clone)]
pub struct CoupledPair {
    pub top: SpinConfiguration,
    pub bottom: SpinConfiguration,
    pub time: u64,
    rho: usize,
    rng: ChainRng,
}

impl CoupledPair {
    pub fn new(top: SpinConfiguration, bottom: SpinConfiguration, seed: u64) -> Result<Self> {
        if !top.dominates(&bottom) {
            return domain("coupled pair needs top >= bottom coordinatewise");
        }
        let rho = top.hamming(&bottom);
        Ok(CoupledPair {
            top,
            bottom,
            time: 0,
            rho,
            rng: stream(seed, 0),
        })
    }

    /// Hamming distance, maintained incrementally.
    pub fn rho(&self) -> usize {
        self.rho
    }

    pub fn step(&mut self, dynamics: &Glauber) {
        let i = uniform_index(&mut self.rng, dynamics.n());
        let u = unit_f64(&mut self.rng);
        let before = self.top.get(i) != self.bottom.get(i);
        dynamics.update(&mut self.top, i, u);
        dynamics.update(&mut self.bottom, i, u);
        let after = self.top.get(i) != self.bottom.get(i);
        debug_assert!(
            self.top.get(i) >= self.bottom.get(i),
            "monotone coupling broke order"
        );
        self.rho = self.rho + usize::from(after) - usize::from(before);
        self.time += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingRun {
    pub tau: StopTime,
    pub seed: u64,
}

/// Coalescence time of the chains started from all-ones and all-zeros.
pub fn coupling_time(params: &ModelParams, seed: u64, cap: u64) -> Result<CouplingRun> {
    if cap == 0 {
        return domain("cap must be at least 1");
    }
    let n = params.n();
    let dynamics = Glauber::new(params);
    let mut pair = CoupledPair::new(
        SpinConfiguration::ones(n),
        SpinConfiguration::zeros(n),
        seed,
    )?;
    while pair.rho > 0 {
        if pair.time == cap {
            return Ok(CouplingRun {
                tau: StopTime::TimedOut(cap),
                seed,
            });
        }
        pair.step(&dynamics);
    }
    Ok(CouplingRun {
        tau: StopTime::Hit(pair.time),
        seed,
    })
}

/// Expected Hamming distance after one coupled step from a pair that
/// differs at a single vertex, when `k` of the `n - 1` agreeing vertices
/// carry spin 1:
/// `1 - 1/n + (1/n) [k (f(k) - f(k-1)) + (n-1-k) (f(k+1) - f(k))]`
/// with `f = P+`.
pub fn one_step_contraction_exact(params: &ModelParams, k: usize) -> Result<f64> {
    let n = params.n();
    if k >= n {
        return domain(format!("k = {k} outside 0..={}", n - 1));
    }
    let f = |s: usize| params.update_probs_unchecked(s).0;
    let nf = n as f64;
    let mut bracket = 0.0;
    if k > 0 {
        bracket += k as f64 * (f(k) - f(k - 1));
    }
    if k + 1 < n {
        bracket += (n - 1 - k) as f64 * (f(k + 1) - f(k));
    }
    Ok(1.0 - 1.0 / nf + bracket / nf)
}

/// The same expectation by enumeration: for every vertex choice, split
/// `[0, 1)` at the two update thresholds and apply the coupled update to
/// explicit configurations on each piece. Limited to `n <= 16`.
pub fn one_step_contraction_enumerated(params: &ModelParams, k: usize) -> Result<f64> {
    let n = params.n();
    if k >= n {
        return domain(format!("k = {k} outside 0..={}", n - 1));
    }
    if n > 16 {
        return Err(Error::Refused(format!(
            "enumeration needs n <= 16, got {n}"
        )));
    }
    // Vertex 0 is the disagreeing one; vertices 1..=k carry spin 1 in both.
    let mut x = vec![0u8; n];
    x[1..=k].fill(1);
    let y = x.clone();
    x[0] = 1;
    let count = |c: &[u8], w: usize| {
        c.iter()
            .enumerate()
            .filter(|&(j, &s)| j != w && s == 1)
            .count()
    };
    let mut expectation = 0.0;
    for w in 0..n {
        let tx = params.update_prob_plus(count(&x, w))?;
        let ty = params.update_prob_plus(count(&y, w))?;
        let mut cuts = vec![0.0, tx.min(ty), tx.max(ty), 1.0];
        cuts.dedup();
        for piece in cuts.windows(2) {
            let (lo, hi) = (piece[0], piece[1]);
            if hi <= lo {
                continue;
            }
            let u = 0.5 * (lo + hi);
            let mut x1 = x.clone();
            let mut y1 = y.clone();
            x1[w] = u8::from(u <= tx);
            y1[w] = u8::from(u <= ty);
            let rho = x1.iter().zip(&y1).filter(|(a, b)| a != b).count();
            expectation += (hi - lo) / n as f64 * rho as f64;
        }
    }
    Ok(expectation)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BurnInOptions {
    /// Target magnetization; required in the low-temperature phase.
    pub target: Option<f64>,
    /// Half-width of the target band; defaults to `1/n`.
    pub band: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurnInResult {
    pub tau0: StopTime,
    pub c_star: f64,
    pub start_c: f64,
}

/// The target of a burn-in run: the unique fixed point of `lambda`, or the
/// explicit target. Low temperature without a target is refused.
pub fn burn_in_target(params: &ModelParams, target: Option<f64>) -> Result<f64> {
    if let Some(c) = target {
        if !(0.0..=1.0).contains(&c) {
            return domain(format!("target must lie in [0, 1], got {c}"));
        }
        return Ok(c);
    }
    let report = classify_phase(params);
    match (report.phase, report.unique_fixed_point()) {
        (Phase::LowTemperature, _) => Err(Error::Refused(
            "low-temperature parameters have several attractors; give an explicit target".into(),
        )),
        (_, Some(c)) => Ok(c),
        _ => Err(Error::Refused("no unique fixed point to target".into())),
    }
}

/// First `t` with `|c_t - c*| <= band`, starting from level
/// `floor(start_c n)`.
pub fn burn_in_time(
    params: &ModelParams,
    start_c: f64,
    seed: u64,
    cap: u64,
    options: BurnInOptions,
) -> Result<BurnInResult> {
    if !(0.0..=1.0).contains(&start_c) {
        return domain(format!("start_c must lie in [0, 1], got {start_c}"));
    }
    let c_star = burn_in_target(params, options.target)?;
    let n = params.n();
    let nf = n as f64;
    // Band in units of levels; the default 1/n band is exactly one level.
    let half_width = match options.band {
        None => 1.0,
        Some(b) if b > 0.0 => b * nf,
        Some(b) => return domain(format!("band must be positive, got {b}")),
    };
    let centre = c_star * nf;
    let lo = (centre - half_width).ceil().max(0.0) as usize;
    let hi = (centre + half_width).floor().min(nf) as usize;
    let start_level = ((start_c * nf).floor() as usize).min(n);
    let dynamics = Glauber::new(params);
    let mut state = ChainState::new(SpinConfiguration::at_level(n, start_level)?, seed);
    let inside = |k: usize| lo <= k && k <= hi;
    let tau0 = loop {
        if inside(state.config.ones_count()) {
            break StopTime::Hit(state.time);
        }
        if state.time == cap {
            break StopTime::TimedOut(cap);
        }
        dynamics.step(&mut state);
    };
    Ok(BurnInResult {
        tau0,
        c_star,
        start_c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftEstimate {
    pub level: usize,
    pub mean_drift: f64,
    pub std_err: f64,
    /// `(up_k - down_k) / n` from the level kernel.
    pub exact_drift: f64,
    pub replicas: u64,
}

/// Replicas per random stream in [`drift_estimate`]; fixing the chunking
/// makes the result independent of the thread count.
const DRIFT_CHUNK: u64 = 1 << 14;

/// Empirical mean of `c_{t+1} - c_t` over independent single steps from
/// level `floor(c n)`, alongside the exact kernel drift.
pub fn drift_estimate(
    params: &ModelParams,
    c: f64,
    replicas: u64,
    seed: u64,
) -> Result<DriftEstimate> {
    if !(0.0..=1.0).contains(&c) {
        return domain(format!("c must lie in [0, 1], got {c}"));
    }
    if replicas == 0 {
        return domain("replicas must be at least 1");
    }
    let n = params.n();
    let level = ((c * n as f64).floor() as usize).min(n);
    let dynamics = Glauber::new(params);
    let base = SpinConfiguration::at_level(n, level)?;
    let chunks = replicas.div_ceil(DRIFT_CHUNK);
    let (ups, downs) = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let size = DRIFT_CHUNK.min(replicas - chunk * DRIFT_CHUNK);
            let mut state = ChainState {
                config: base.clone(),
                time: 0,
                rng: stream(seed, chunk),
            };
            let (mut ups, mut downs) = (0u64, 0u64);
            for _ in 0..size {
                let i = uniform_index(&mut state.rng, n);
                let u = unit_f64(&mut state.rng);
                let old = state.config.get(i);
                dynamics.update(&mut state.config, i, u);
                match state.config.ones_count().cmp(&level) {
                    std::cmp::Ordering::Greater => ups += 1,
                    std::cmp::Ordering::Less => downs += 1,
                    std::cmp::Ordering::Equal => {}
                }
                state.config.set(i, old);
            }
            (ups, downs)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let nf = n as f64;
    let r = replicas as f64;
    let mean_steps = (ups as f64 - downs as f64) / r;
    let second = (ups + downs) as f64 / r;
    let variance = (second - mean_steps * mean_steps).max(0.0);
    let kernel = build_kernel(params);
    Ok(DriftEstimate {
        level,
        mean_drift: mean_steps / nf,
        std_err: (variance / r).sqrt() / nf,
        exact_drift: kernel.drift(level) / nf,
        replicas,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basin {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeResult {
    pub time: StopTime,
    pub attractor: f64,
    pub repellor: f64,
}

/// First time the chain started at `floor(c* n)` for the chosen attractor
/// crosses the repellor level towards the other attractor.
pub fn mode_escape_time(
    params: &ModelParams,
    from: Basin,
    seed: u64,
    cap: u64,
) -> Result<EscapeResult> {
    let report = classify_phase(params);
    if report.phase != Phase::LowTemperature {
        return Err(Error::Refused(format!(
            "escape times need low-temperature parameters, phase is {:?}",
            report.phase
        )));
    }
    let attractors: Vec<f64> = report.attractors().map(|f| f.c).collect();
    let (lower, upper) = (attractors[0], attractors[attractors.len() - 1]);
    let repellor = report
        .fixed_points
        .iter()
        .find(|f| f.kind != FixedPointKind::Attractor && f.c > lower && f.c < upper)
        .map(|f| f.c)
        .ok_or_else(|| Error::Inconsistency("no repellor between the attractors".into()))?;
    let attractor = match from {
        Basin::Lower => lower,
        Basin::Upper => upper,
    };
    let n = params.n();
    let nf = n as f64;
    let boundary = repellor * nf;
    let crossed = |k: usize| match from {
        Basin::Lower => k as f64 > boundary,
        Basin::Upper => (k as f64) < boundary,
    };
    let start = ((attractor * nf).floor() as usize).min(n);
    let dynamics = Glauber::new(params);
    let mut state = ChainState::new(SpinConfiguration::at_level(n, start)?, seed);
    let time = loop {
        if crossed(state.config.ones_count()) {
            break StopTime::Hit(state.time);
        }
        if state.time == cap {
            break StopTime::TimedOut(cap);
        }
        dynamics.step(&mut state);
    };
    Ok(EscapeResult {
        time,
        attractor,
        repellor,
    })
}
