//! Exact computations on the projected magnetization chain.
//!
//! The number of spin-1 vertices of a Glauber chain is itself a
//! birth-death chain on `0..=n`. Everything here works on that
//! `(n + 1)`-state chain; [`full_chain_oracle`] ties it back to the full
//! `2^n`-state chain for small `n`.

mod oracle;
mod spectral;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::ModelParams;
use crate::numeric::{log_add_exp, log_sum_exp};

pub use oracle::{full_chain_oracle, run_oracle_checks, OracleCheck, OracleReport, ORACLE_MAX_N};
pub use spectral::{spectral_gap, SpectralReport};

/// Level transition probabilities. All three arrays have length `n + 1`;
/// `up[n]` and `down[0]` are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnetizationKernel {
    pub n: usize,
    pub up: Vec<f64>,
    pub down: Vec<f64>,
    pub stay: Vec<f64>,
}

impl MagnetizationKernel {
    /// Expected one-step change of the level from level `k`.
    pub fn drift(&self, k: usize) -> f64 {
        self.up[k] - self.down[k]
    }

    /// One step of the forward equation `x <- x P`, written into `out`.
    pub fn step(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        for k in 0..=n {
            let mut v = x[k] * self.stay[k];
            if k > 0 {
                v += x[k - 1] * self.up[k - 1];
            }
            if k < n {
                v += x[k + 1] * self.down[k + 1];
            }
            out[k] = v;
        }
    }
}

/// `P(k -> k+1) = ((n-k)/n) P+(k)` and `P(k -> k-1) = (k/n) P-(k-1)`.
pub fn build_kernel(params: &ModelParams) -> MagnetizationKernel {
    let n = params.n();
    let nf = n as f64;
    let mut up = vec![0.0; n + 1];
    let mut down = vec![0.0; n + 1];
    for k in 0..n {
        let (plus, minus) = params.update_probs_unchecked(k);
        up[k] = (n - k) as f64 / nf * plus;
        down[k + 1] = (k + 1) as f64 / nf * minus;
    }
    let stay = up.iter().zip(&down).map(|(u, d)| 1.0 - u - d).collect();
    MagnetizationKernel { n, up, down, stay }
}

/// Level log-weights `ln a_k` and `ln Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pub log_weights: Vec<f64>,
    pub log_z: f64,
}

impl StationaryDistribution {
    pub fn n(&self) -> usize {
        self.log_weights.len() - 1
    }

    pub fn log_prob(&self, k: usize) -> f64 {
        self.log_weights[k] - self.log_z
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.log_weights
            .iter()
            .map(|w| (w - self.log_z).exp())
            .collect()
    }
}

pub fn stationary(params: &ModelParams) -> StationaryDistribution {
    let log_weights = params.log_level_weights();
    let log_z = log_sum_exp(&log_weights);
    StationaryDistribution { log_weights, log_z }
}

fn check_sizes(kernel: &MagnetizationKernel, dist: &StationaryDistribution) -> Result<()> {
    if kernel.n != dist.n() {
        return Err(Error::Inconsistency(format!(
            "kernel has n = {} but distribution has n = {}",
            kernel.n,
            dist.n()
        )));
    }
    Ok(())
}

/// `max_k |pi_k up_k / (pi_{k+1} down_{k+1}) - 1|`, evaluated in log space.
pub fn check_detailed_balance(
    kernel: &MagnetizationKernel,
    dist: &StationaryDistribution,
) -> Result<f64> {
    check_sizes(kernel, dist)?;
    Ok((0..kernel.n)
        .map(|k| {
            let forward = dist.log_weights[k] + kernel.up[k].ln();
            let backward = dist.log_weights[k + 1] + kernel.down[k + 1].ln();
            (forward - backward).exp_m1().abs()
        })
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Starts {
    /// Every level.
    All,
    /// Levels `0` and `n`. For a monotone birth-death chain the worst start
    /// is one of these.
    Extremes,
}

/// Default work budget for mixing iterations, in level-updates: the step cap
/// is this divided by `n + 1`.
pub const DEFAULT_WORK_BUDGET: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingOptions {
    pub epsilon: f64,
    pub starts: Starts,
    /// Step cap; `None` means `DEFAULT_WORK_BUDGET / (n + 1)`.
    pub cap: Option<u64>,
}

impl Default for MixingOptions {
    fn default() -> Self {
        MixingOptions {
            epsilon: 0.25,
            starts: Starts::Extremes,
            cap: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub epsilon: f64,
    pub t_mix: u64,
    pub worst_start: usize,
    /// `d(t_mix)`.
    pub distance: f64,
    /// `d(t_mix - 1)`; exceeds `epsilon`.
    pub distance_before: f64,
}

fn tv(x: &[f64], pi: &[f64]) -> f64 {
    0.5 * x.iter().zip(pi).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Slack allowed on the monotonicity of `d(t)` for rounding.
const MONOTONE_SLACK: f64 = 1e-12;

struct StartOutcome {
    start: usize,
    t: u64,
}

fn mix_from(
    kernel: &MagnetizationKernel,
    pi: &[f64],
    start: usize,
    epsilon: f64,
    cap: u64,
) -> Result<StartOutcome> {
    let mut x = vec![0.0; kernel.n + 1];
    x[start] = 1.0;
    let mut next = vec![0.0; kernel.n + 1];
    let mut previous = tv(&x, pi);
    let mut t = 0u64;
    while previous > epsilon {
        if t == cap {
            return Err(Error::CapExceeded {
                cap,
                distance: previous,
            });
        }
        kernel.step(&x, &mut next);
        std::mem::swap(&mut x, &mut next);
        t += 1;
        let d = tv(&x, pi);
        if d > previous + MONOTONE_SLACK {
            return Err(Error::Verification(format!(
                "d(t) increased from {previous:e} to {d:e} at t = {t} from level {start}"
            )));
        }
        if d <= epsilon {
            return Ok(StartOutcome { start, t });
        }
        previous = d;
    }
    Ok(StartOutcome { start, t: 0 })
}

fn mixing_starts(n: usize, starts: Starts) -> Vec<usize> {
    match starts {
        Starts::All => (0..=n).collect(),
        Starts::Extremes if n == 0 => vec![0],
        Starts::Extremes => vec![0, n],
    }
}

/// First `t` with `max_start TV(P^t(start, .), pi) <= epsilon`, by direct
/// iteration of the forward equation. Starts run in parallel.
pub fn exact_mixing_time(
    kernel: &MagnetizationKernel,
    dist: &StationaryDistribution,
    options: MixingOptions,
) -> Result<MixingReport> {
    check_sizes(kernel, dist)?;
    let epsilon = options.epsilon;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return domain(format!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    let cap = options
        .cap
        .unwrap_or(DEFAULT_WORK_BUDGET / (kernel.n as u64 + 1));
    let pi = dist.probabilities();
    let outcomes: Vec<Result<StartOutcome>> = mixing_starts(kernel.n, options.starts)
        .into_par_iter()
        .map(|s| mix_from(kernel, &pi, s, epsilon, cap))
        .collect();

    let mut worst: Option<StartOutcome> = None;
    let mut cap_error: Option<Error> = None;
    for outcome in outcomes {
        match outcome {
            Ok(o) => {
                if worst.as_ref().is_none_or(|w| o.t > w.t) {
                    worst = Some(o);
                }
            }
            Err(Error::CapExceeded { cap, distance }) => {
                let keep = match &cap_error {
                    Some(Error::CapExceeded { distance: d, .. }) => distance > *d,
                    _ => true,
                };
                if keep {
                    cap_error = Some(Error::CapExceeded { cap, distance });
                }
            }
            Err(e) => return Err(e),
        }
    }
    if let Some(e) = cap_error {
        return Err(e);
    }
    let w = worst.expect("at least one start");
    // The report carries d(t) maximized over starts, not the worst start's.
    let (distance, distance_before) = max_distances(kernel, &pi, options.starts, w.t);
    Ok(MixingReport {
        epsilon,
        t_mix: w.t,
        worst_start: w.start,
        distance,
        distance_before,
    })
}

fn max_distances(kernel: &MagnetizationKernel, pi: &[f64], starts: Starts, t: u64) -> (f64, f64) {
    mixing_starts(kernel.n, starts)
        .into_par_iter()
        .map(|s| {
            let profile = distance_profile(kernel, pi, s, t);
            let at = profile[t as usize];
            let before = if t == 0 {
                f64::INFINITY
            } else {
                profile[t as usize - 1]
            };
            (at, before)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)))
}

/// `TV(P^t(start, .), pi)` for `t = 0..=steps`.
pub fn distance_profile(
    kernel: &MagnetizationKernel,
    pi: &[f64],
    start: usize,
    steps: u64,
) -> Vec<f64> {
    let mut x = vec![0.0; kernel.n + 1];
    x[start] = 1.0;
    let mut next = vec![0.0; kernel.n + 1];
    let mut out = Vec::with_capacity(steps as usize + 1);
    out.push(tv(&x, pi));
    for _ in 0..steps {
        kernel.step(&x, &mut next);
        std::mem::swap(&mut x, &mut next);
        out.push(tv(&x, pi));
    }
    out
}

/// Largest `n` accepted by [`exact_mixing_time_doubling`]; it stores about
/// 64 dense `(n+1) x (n+1)` matrices.
pub const DOUBLING_MAX_N: usize = 400;

/// Same result as [`exact_mixing_time`] from the extreme starts, found by
/// binary lifting over the dense powers `P^(2^j)`. Cost is `O(n^3 log t)`
/// instead of `O(n t)`, which makes exponentially long mixing times
/// reachable at moderate `n`.
pub fn exact_mixing_time_doubling(
    kernel: &MagnetizationKernel,
    dist: &StationaryDistribution,
    epsilon: f64,
) -> Result<MixingReport> {
    check_sizes(kernel, dist)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return domain(format!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    let n = kernel.n;
    if n > DOUBLING_MAX_N {
        return Err(Error::Refused(format!(
            "doubling mixing time needs n <= {DOUBLING_MAX_N}, got {n}"
        )));
    }
    let pi = dist.probabilities();
    let starts = mixing_starts(n, Starts::Extremes);
    let dim = n + 1;
    let d_of = |rows: &[Vec<f64>]| rows.iter().map(|r| tv(r, &pi)).fold(0.0, f64::max);

    let mut rows: Vec<Vec<f64>> = starts
        .iter()
        .map(|&s| {
            let mut r = vec![0.0; dim];
            r[s] = 1.0;
            r
        })
        .collect();
    if d_of(&rows) <= epsilon {
        return Ok(MixingReport {
            epsilon,
            t_mix: 0,
            worst_start: starts[0],
            distance: d_of(&rows),
            distance_before: f64::INFINITY,
        });
    }

    // powers[j] = P^(2^j); extend until d(2^j) <= epsilon.
    let mut powers = vec![dense_kernel(kernel)];
    loop {
        let last = powers.last().expect("non-empty");
        let probe: Vec<Vec<f64>> = rows.iter().map(|r| row_times(r, last)).collect();
        if d_of(&probe) <= epsilon {
            break;
        }
        if powers.len() >= 63 {
            return Err(Error::CapExceeded {
                cap: u64::MAX,
                distance: d_of(&probe),
            });
        }
        powers.push(square(last));
    }

    // Largest t with d(t) > epsilon, built from the top bit down.
    let mut t = 0u64;
    for j in (0..powers.len()).rev() {
        let probe: Vec<Vec<f64>> = rows.iter().map(|r| row_times(r, &powers[j])).collect();
        if d_of(&probe) > epsilon {
            rows = probe;
            t += 1u64 << j;
        }
    }
    let distance_before = d_of(&rows);
    let last: Vec<Vec<f64>> = rows.iter().map(|r| row_times(r, &powers[0])).collect();
    let worst = last
        .iter()
        .zip(&starts)
        .map(|(r, &s)| (tv(r, &pi), s))
        .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a });
    Ok(MixingReport {
        epsilon,
        t_mix: t + 1,
        worst_start: worst.1,
        distance: d_of(&last),
        distance_before,
    })
}

fn dense_kernel(kernel: &MagnetizationKernel) -> Vec<Vec<f64>> {
    let dim = kernel.n + 1;
    (0..dim)
        .map(|k| {
            let mut row = vec![0.0; dim];
            row[k] = kernel.stay[k];
            if k + 1 < dim {
                row[k + 1] = kernel.up[k];
            }
            if k > 0 {
                row[k - 1] = kernel.down[k];
            }
            row
        })
        .collect()
}

fn row_times(x: &[f64], m: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for (xi, row) in x.iter().zip(m) {
        if *xi != 0.0 {
            for (o, v) in out.iter_mut().zip(row) {
                *o += xi * v;
            }
        }
    }
    out
}

fn square(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    m.par_iter().map(|row| row_times(row, m)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutSide {
    /// The set `{0..=k}`.
    Bottom,
    /// The set `{k+1..=n}`.
    Top,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BottleneckReport {
    pub phi_star: f64,
    pub log_phi_star: f64,
    /// The minimizing cut separates level `argmin_cut` from `argmin_cut + 1`.
    pub argmin_cut: usize,
    pub side: CutSide,
    /// `1 / (4 phi_star)`.
    pub mixing_lower_bound: f64,
}

/// Minimum of `Q(S, S^c) / pi(S)` over level cuts `S = {0..=k}` and
/// `S = {k+1..=n}` with `pi(S) <= 1/2`. The flow across either cut is
/// `pi_k up_k`.
pub fn bottleneck_ratio(
    kernel: &MagnetizationKernel,
    dist: &StationaryDistribution,
) -> Result<BottleneckReport> {
    check_sizes(kernel, dist)?;
    let n = kernel.n;
    let log_pi: Vec<f64> = (0..=n).map(|k| dist.log_prob(k)).collect();
    let mut below = vec![f64::NEG_INFINITY; n + 1];
    let mut acc = f64::NEG_INFINITY;
    for k in 0..=n {
        acc = log_add_exp(acc, log_pi[k]);
        below[k] = acc;
    }
    // above[k] = ln pi({k+1..=n})
    let mut above = vec![f64::NEG_INFINITY; n + 1];
    let mut acc = f64::NEG_INFINITY;
    for k in (0..n).rev() {
        acc = log_add_exp(acc, log_pi[k + 1]);
        above[k] = acc;
    }
    let half = 0.5f64.ln();
    let mut best: Option<(f64, usize, CutSide)> = None;
    for k in 0..n {
        let log_q = log_pi[k] + kernel.up[k].ln();
        for (side, mass) in [(CutSide::Bottom, below[k]), (CutSide::Top, above[k])] {
            if mass <= half {
                let r = log_q - mass;
                if best.is_none_or(|b| r < b.0) {
                    best = Some((r, k, side));
                }
            }
        }
    }
    let (log_phi_star, argmin_cut, side) = best
        .ok_or_else(|| Error::Refused("no level cut carries stationary mass at most 1/2".into()))?;
    let phi_star = log_phi_star.exp();
    Ok(BottleneckReport {
        phi_star,
        log_phi_star,
        argmin_cut,
        side,
        mixing_lower_bound: 0.25 * (-log_phi_star).exp(),
    })
}

/// `|ln a_k / n - phi(c)|` at `k = floor(c n)`.
pub fn stirling_residual(params: &ModelParams, c: f64) -> Result<f64> {
    if !(c > 0.0 && c < 1.0) {
        return domain(format!("c must lie in (0, 1), got {c}"));
    }
    let n = params.n();
    // The nudge keeps products such as 0.2 * 1000 on the intended level.
    let k = ((c * n as f64) * (1.0 + 1e-12)).floor() as usize;
    Ok((params.log_level_weight(k.min(n))? / n as f64 - params.phi(c)?).abs())
}
