//! Sweeps over `n`, replica aggregation and scaling-law fits.
//!
//! Every run in a sweep gets the seed `mix64(mix64(master, n), replicate)`,
//! so a row depends only on its key and never on scheduling. Runs that hit
//! their cap are kept as censored rows with the cap as a lower bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{barrier_rate, classify_phase, critical_point, Phase};
use crate::dynamics::{
    burn_in_time, coupling_time, mode_escape_time, Basin, BurnInOptions, StopTime,
};
use crate::error::{domain, Error, Result};
use crate::exactchain::{
    bottleneck_ratio, build_kernel, exact_mixing_time, exact_mixing_time_doubling, spectral_gap,
    stationary, MixingOptions,
};
use crate::model::ModelParams;
use crate::rng::mix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepKind {
    /// Exact `t_mix(1/4)` of the level chain.
    Mixing,
    /// Spectral gap of the level chain.
    Gap,
    /// Level-cut bottleneck ratio.
    Bottleneck,
    /// Coalescence time of the monotone coupling from all-ones/all-zeros.
    Coupling,
    /// Time to enter the `1/n` band of the target fixed point.
    BurnIn,
    /// Time to cross the repellor from an attractor.
    Escape,
}

impl SweepKind {
    pub fn is_stochastic(self) -> bool {
        matches!(
            self,
            SweepKind::Coupling | SweepKind::BurnIn | SweepKind::Escape
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MixingMethod {
    /// Forward iteration, capped.
    #[default]
    Iterate,
    /// Binary lifting over dense matrix powers; limited to moderate `n`.
    Doubling,
}

fn default_start_c() -> f64 {
    1.0
}

fn default_basin() -> Basin {
    Basin::Lower
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub kind: SweepKind,
    /// Template; its `n` is replaced by each entry of `n_values`.
    pub params: ModelParams,
    pub n_values: Vec<usize>,
    pub replicas: u64,
    pub master_seed: u64,
    /// Step cap per run. For [`SweepKind::Mixing`] with iteration, `None`
    /// means the default work budget; stochastic kinds require a cap.
    #[serde(default)]
    pub cap: Option<u64>,
    #[serde(default)]
    pub mixing_method: MixingMethod,
    /// Starting magnetization for burn-in runs.
    #[serde(default = "default_start_c")]
    pub start_c: f64,
    /// Explicit burn-in target; required at low temperature.
    #[serde(default)]
    pub target: Option<f64>,
    #[serde(default = "default_basin")]
    pub basin: Basin,
}

impl SweepSpec {
    pub fn new(
        kind: SweepKind,
        params: ModelParams,
        n_values: Vec<usize>,
        replicas: u64,
        master_seed: u64,
    ) -> Self {
        SweepSpec {
            kind,
            params,
            n_values,
            replicas,
            master_seed,
            cap: None,
            mixing_method: MixingMethod::Iterate,
            start_c: default_start_c(),
            target: None,
            basin: default_basin(),
        }
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = Some(cap);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            return domain("n_values must be non-empty");
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return domain("n_values must be strictly increasing");
        }
        for &n in &self.n_values {
            self.params.with_n(n)?;
        }
        if self.replicas == 0 {
            return domain("replicas must be at least 1");
        }
        if self.kind.is_stochastic() && self.cap.is_none_or(|c| c == 0) {
            return domain("stochastic sweeps need a positive cap");
        }
        if !(0.0..=1.0).contains(&self.start_c) {
            return domain(format!("start_c must lie in [0, 1], got {}", self.start_c));
        }
        Ok(())
    }

    /// Replicates per `n`: one for the deterministic kinds.
    pub fn replicates(&self) -> u64 {
        if self.kind.is_stochastic() {
            self.replicas
        } else {
            1
        }
    }
}

/// Seed of replicate `replicate` at size `n`.
pub fn run_seed(master: u64, n: usize, replicate: u64) -> u64 {
    mix64(mix64(master, n as u64), replicate)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Observation {
    Value(f64),
    /// The run hit its cap; the true value is at least `lower_bound`.
    Censored {
        lower_bound: f64,
    },
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub replicate: u64,
    pub seed: u64,
    pub observation: Observation,
}

fn stop_observation(t: StopTime) -> Observation {
    match t {
        StopTime::Hit(t) => Observation::Value(t as f64),
        StopTime::TimedOut(cap) => Observation::Censored {
            lower_bound: cap as f64,
        },
    }
}

fn observe(spec: &SweepSpec, n: usize, seed: u64) -> Result<Observation> {
    let params = spec.params.with_n(n)?;
    let cap = spec.cap.unwrap_or(0);
    Ok(match spec.kind {
        SweepKind::Mixing => {
            let kernel = build_kernel(&params);
            let dist = stationary(&params);
            let report = match spec.mixing_method {
                MixingMethod::Iterate => exact_mixing_time(
                    &kernel,
                    &dist,
                    MixingOptions {
                        cap: spec.cap,
                        ..Default::default()
                    },
                ),
                MixingMethod::Doubling => exact_mixing_time_doubling(&kernel, &dist, 0.25),
            };
            match report {
                Ok(r) => Observation::Value(r.t_mix as f64),
                Err(Error::CapExceeded { cap, .. }) => Observation::Censored {
                    lower_bound: cap as f64,
                },
                Err(e) => return Err(e),
            }
        }
        SweepKind::Gap => {
            Observation::Value(spectral_gap(&build_kernel(&params), &stationary(&params))?.gap)
        }
        SweepKind::Bottleneck => Observation::Value(
            bottleneck_ratio(&build_kernel(&params), &stationary(&params))?.phi_star,
        ),
        SweepKind::Coupling => stop_observation(coupling_time(&params, seed, cap)?.tau),
        SweepKind::BurnIn => {
            let opts = BurnInOptions {
                target: spec.target,
                band: None,
            };
            stop_observation(burn_in_time(&params, spec.start_c, seed, cap, opts)?.tau0)
        }
        SweepKind::Escape => {
            stop_observation(mode_escape_time(&params, spec.basin, seed, cap)?.time)
        }
    })
}

/// Runs every `(n, replicate)` of the sweep. Per-run errors become
/// [`Observation::Failed`] rows; only an invalid spec fails the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let keys: Vec<(usize, u64)> = spec
        .n_values
        .iter()
        .flat_map(|&n| (0..spec.replicates()).map(move |r| (n, r)))
        .collect();
    Ok(keys
        .into_par_iter()
        .map(|(n, replicate)| {
            let seed = run_seed(spec.master_seed, n, replicate);
            let observation =
                observe(spec, n, seed).unwrap_or_else(|e| Observation::Failed(e.to_string()));
            SweepRow {
                n,
                replicate,
                seed,
                observation,
            }
        })
        .collect())
}

/// Per-`n` aggregate. `mean` and `std_err` use completed runs only; censored
/// runs are reported by count and their largest lower bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub n: usize,
    pub completed: u64,
    pub censored: u64,
    pub failed: u64,
    pub mean: Option<f64>,
    pub std_err: Option<f64>,
    pub censoring_bound: Option<f64>,
}

pub fn summarize(rows: &[SweepRow]) -> Vec<SweepSummary> {
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    ns.into_iter()
        .map(|n| {
            let mut values = Vec::new();
            let (mut censored, mut failed) = (0, 0);
            let mut bound: Option<f64> = None;
            for r in rows.iter().filter(|r| r.n == n) {
                match &r.observation {
                    Observation::Value(v) => values.push(*v),
                    Observation::Censored { lower_bound } => {
                        censored += 1;
                        bound = Some(bound.map_or(*lower_bound, |b| b.max(*lower_bound)));
                    }
                    Observation::Failed(_) => failed += 1,
                }
            }
            let k = values.len() as f64;
            let mean = (!values.is_empty()).then(|| values.iter().sum::<f64>() / k);
            let std_err = mean.filter(|_| values.len() > 1).map(|m| {
                let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (k - 1.0);
                (var / k).sqrt()
            });
            SweepSummary {
                n,
                completed: values.len() as u64,
                censored,
                failed,
                mean,
                std_err,
                censoring_bound: bound,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalingModel {
    /// `y = a n^b`, fitted on `(ln n, ln y)`.
    PowerLaw,
    /// `y = a n ln n`, fitted through the origin on `x = n ln n`.
    NLogN,
    /// `y = a e^(r n)`, fitted on `(n, ln y)`.
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub n: f64,
    pub y: f64,
    pub censored: bool,
}

impl FitPoint {
    pub fn new(n: f64, y: f64) -> Self {
        FitPoint {
            n,
            y,
            censored: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub model: ScalingModel,
    pub coefficient: f64,
    /// Exponent `b` (power law), rate `r` (exponential), or for `NLogN` the
    /// log-log slope of `y / (n ln n)` against `n`, which is 0 for an exact
    /// `n ln n` law.
    pub exponent_or_rate: f64,
    pub r_squared: f64,
    pub points_used: usize,
    /// Censored points left out of the fit.
    pub excluded_censored: usize,
    /// `max / min` of `y / (n ln n)` (`NLogN` only).
    pub ratio_spread: Option<f64>,
    /// `max |y / (a n ln n) - 1|` (`NLogN` only).
    pub max_ratio_deviation: Option<f64>,
}

struct Line {
    intercept: f64,
    slope: f64,
    r_squared: f64,
}

fn least_squares(x: &[f64], y: &[f64]) -> Line {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Line {
        intercept,
        slope,
        r_squared,
    }
}

pub fn fit_scaling(points: &[FitPoint], model: ScalingModel) -> Result<ScalingFit> {
    let used: Vec<&FitPoint> = points.iter().filter(|p| !p.censored).collect();
    let excluded_censored = points.len() - used.len();
    if used.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} uncensored points, at least 3 needed",
            used.len()
        )));
    }
    if let Some(p) = used.iter().find(|p| !(p.y > 0.0 && p.y.is_finite())) {
        return domain(format!(
            "fit values must be positive and finite, got {}",
            p.y
        ));
    }
    let min_n = if model == ScalingModel::NLogN {
        2.0
    } else {
        0.0
    };
    if let Some(p) = used.iter().find(|p| !(p.n > min_n && p.n.is_finite())) {
        return domain(format!("fit sizes must exceed {min_n}, got {}", p.n));
    }
    {
        let mut ns: Vec<f64> = used.iter().map(|p| p.n).collect();
        ns.sort_by(f64::total_cmp);
        ns.dedup();
        if ns.len() < 2 {
            return Err(Error::InsufficientData(
                "fit needs at least two distinct sizes".into(),
            ));
        }
    }
    let ln_y: Vec<f64> = used.iter().map(|p| p.y.ln()).collect();
    let base = ScalingFit {
        model,
        coefficient: 0.0,
        exponent_or_rate: 0.0,
        r_squared: 0.0,
        points_used: used.len(),
        excluded_censored,
        ratio_spread: None,
        max_ratio_deviation: None,
    };
    Ok(match model {
        ScalingModel::PowerLaw => {
            let x: Vec<f64> = used.iter().map(|p| p.n.ln()).collect();
            let l = least_squares(&x, &ln_y);
            ScalingFit {
                coefficient: l.intercept.exp(),
                exponent_or_rate: l.slope,
                r_squared: l.r_squared,
                ..base
            }
        }
        ScalingModel::Exponential => {
            let x: Vec<f64> = used.iter().map(|p| p.n).collect();
            let l = least_squares(&x, &ln_y);
            ScalingFit {
                coefficient: l.intercept.exp(),
                exponent_or_rate: l.slope,
                r_squared: l.r_squared,
                ..base
            }
        }
        ScalingModel::NLogN => {
            let x: Vec<f64> = used.iter().map(|p| p.n * p.n.ln()).collect();
            let y: Vec<f64> = used.iter().map(|p| p.y).collect();
            let a = x.iter().zip(&y).map(|(u, v)| u * v).sum::<f64>()
                / x.iter().map(|u| u * u).sum::<f64>();
            let my = y.iter().sum::<f64>() / y.len() as f64;
            let ss_res: f64 = x.iter().zip(&y).map(|(u, v)| (v - a * u).powi(2)).sum();
            let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
            let r_squared = if ss_tot == 0.0 {
                if ss_res == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
            };
            let ratios: Vec<f64> = x.iter().zip(&y).map(|(u, v)| v / u).collect();
            let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            let deviation = ratios
                .iter()
                .map(|r| (r / a - 1.0).abs())
                .fold(0.0, f64::max);
            let ln_n: Vec<f64> = used.iter().map(|p| p.n.ln()).collect();
            let ln_r: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
            let drift = least_squares(&ln_n, &ln_r).slope;
            ScalingFit {
                coefficient: a,
                exponent_or_rate: drift,
                r_squared,
                ratio_spread: Some(max / min),
                max_ratio_deviation: Some(deviation),
                ..base
            }
        }
    })
}

/// Fit points from per-`n` means. Sizes with any censored run become
/// censored points so they are excluded from the fit.
pub fn mean_points(summaries: &[SweepSummary]) -> Vec<FitPoint> {
    summaries
        .iter()
        .filter_map(|s| {
            let censored = s.censored > 0 || s.failed > 0;
            s.mean.map(|m| FitPoint {
                n: s.n as f64,
                y: m,
                censored,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseTarget {
    High,
    Low,
    Critical,
}

impl PhaseTarget {
    pub fn expected_phase(self) -> Phase {
        match self {
            PhaseTarget::High => Phase::HighTemperature,
            PhaseTarget::Low => Phase::LowTemperature,
            PhaseTarget::Critical => Phase::Degenerate,
        }
    }

    /// `(0.5, 0.5, 0.5)`, `(0.05, 6, 0)` and the critical point at
    /// `cbar = 0.55`.
    pub fn canonical_params(self) -> ModelParams {
        match self {
            PhaseTarget::High => ModelParams::new(1, 0.5, 0.5, 0.5),
            PhaseTarget::Low => ModelParams::new(1, 0.05, 6.0, 0.0),
            PhaseTarget::Critical => critical_point(0.55).and_then(|cp| cp.params(1)),
        }
        .expect("canonical parameters are valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentBudget {
    pub params: ModelParams,
    pub n_values: Vec<usize>,
    /// Sizes for escape-time runs, which grow exponentially in `n`.
    pub escape_n_values: Vec<usize>,
    pub replicas: u64,
    pub master_seed: u64,
    pub cap: u64,
}

impl ExperimentBudget {
    pub fn canonical(target: PhaseTarget) -> Self {
        let params = target.canonical_params();
        match target {
            PhaseTarget::High => ExperimentBudget {
                params,
                n_values: vec![100, 200, 400, 800],
                escape_n_values: vec![],
                replicas: 100,
                master_seed: 1,
                cap: 100_000_000,
            },
            PhaseTarget::Low => ExperimentBudget {
                params,
                n_values: (30..=120).step_by(10).collect(),
                escape_n_values: vec![30, 40, 50, 60],
                replicas: 20,
                master_seed: 2,
                cap: 1_000_000_000,
            },
            PhaseTarget::Critical => ExperimentBudget {
                params,
                n_values: vec![250, 500, 1000, 2000],
                escape_n_values: vec![],
                replicas: 50,
                master_seed: 3,
                cap: 1_000_000_000,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SweepSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedFit {
    pub name: String,
    pub fit: ScalingFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseExperimentReport {
    pub target: PhaseTarget,
    pub params: ModelParams,
    pub sweeps: Vec<SweepResult>,
    pub fits: Vec<NamedFit>,
    /// Exponential rate predicted for `1/phi_star` (low temperature), or the
    /// burn-in exponent `3/2` (critical).
    pub prediction: Option<f64>,
}

impl PhaseExperimentReport {
    pub fn fit(&self, name: &str) -> Option<&ScalingFit> {
        self.fits.iter().find(|f| f.name == name).map(|f| &f.fit)
    }

    pub fn sweep(&self, kind: SweepKind) -> Option<&SweepResult> {
        self.sweeps.iter().find(|s| s.spec.kind == kind)
    }
}

fn sweep(spec: SweepSpec) -> Result<SweepResult> {
    let rows = run_sweep(&spec)?;
    let summary = summarize(&rows);
    Ok(SweepResult {
        spec,
        rows,
        summary,
    })
}

fn inverse_points(result: &SweepResult) -> Vec<FitPoint> {
    mean_points(&result.summary)
        .into_iter()
        .map(|p| FitPoint { y: 1.0 / p.y, ..p })
        .collect()
}

/// The sweeps and fits behind one phase's scaling law.
///
/// * High: exact mixing and coupling times, each with an `n ln n` fit.
/// * Low: spectral gap, bottleneck ratio, mixing time by doubling and
///   escape times, with exponential fits of `1/gap`, `1/phi_star` and the
///   mean escape time.
/// * Critical: burn-in from all-ones with a power-law fit.
pub fn phase_experiment(
    target: PhaseTarget,
    budget: &ExperimentBudget,
) -> Result<PhaseExperimentReport> {
    let phase = classify_phase(&budget.params).phase;
    if phase != target.expected_phase() {
        return Err(Error::Refused(format!(
            "{target:?} experiment needs {:?} parameters, these are {phase:?}",
            target.expected_phase()
        )));
    }
    let spec = |kind, n_values: &[usize], replicas| {
        SweepSpec::new(
            kind,
            budget.params,
            n_values.to_vec(),
            replicas,
            budget.master_seed,
        )
        .with_cap(budget.cap)
    };
    let mut sweeps = Vec::new();
    let mut fits = Vec::new();
    let mut prediction = None;
    let mut add_fit = |name: &str, points: Vec<FitPoint>, model| -> Result<()> {
        fits.push(NamedFit {
            name: name.to_string(),
            fit: fit_scaling(&points, model)?,
        });
        Ok(())
    };
    match target {
        PhaseTarget::High => {
            let mixing = sweep(spec(SweepKind::Mixing, &budget.n_values, 1))?;
            let coupling = sweep(spec(SweepKind::Coupling, &budget.n_values, budget.replicas))?;
            add_fit("mixing", mean_points(&mixing.summary), ScalingModel::NLogN)?;
            add_fit(
                "coupling",
                mean_points(&coupling.summary),
                ScalingModel::NLogN,
            )?;
            sweeps.extend([mixing, coupling]);
        }
        PhaseTarget::Low => {
            let gap = sweep(spec(SweepKind::Gap, &budget.n_values, 1))?;
            let bottleneck = sweep(spec(SweepKind::Bottleneck, &budget.n_values, 1))?;
            let mut mixing_spec = spec(SweepKind::Mixing, &budget.n_values, 1);
            mixing_spec.mixing_method = MixingMethod::Doubling;
            let mixing = sweep(mixing_spec)?;
            add_fit(
                "inverse_gap",
                inverse_points(&gap),
                ScalingModel::Exponential,
            )?;
            add_fit(
                "inverse_bottleneck",
                inverse_points(&bottleneck),
                ScalingModel::Exponential,
            )?;
            add_fit(
                "mixing",
                mean_points(&mixing.summary),
                ScalingModel::Exponential,
            )?;
            sweeps.extend([gap, bottleneck, mixing]);
            if budget.escape_n_values.len() >= 3 {
                let escape = sweep(spec(
                    SweepKind::Escape,
                    &budget.escape_n_values,
                    budget.replicas,
                ))?;
                add_fit(
                    "escape",
                    mean_points(&escape.summary),
                    ScalingModel::Exponential,
                )?;
                sweeps.push(escape);
            }
            prediction = barrier_rate(&budget.params);
        }
        PhaseTarget::Critical => {
            let burn_in = sweep(spec(SweepKind::BurnIn, &budget.n_values, budget.replicas))?;
            add_fit(
                "burn_in",
                mean_points(&burn_in.summary),
                ScalingModel::PowerLaw,
            )?;
            sweeps.push(burn_in);
            prediction = Some(1.5);
        }
    }
    Ok(PhaseExperimentReport {
        target,
        params: budget.params,
        sweeps,
        fits,
        prediction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: f64, a1: f64, a2: f64) -> ModelParams {
        ModelParams::new(1, p, a1, a2).unwrap()
    }

    fn values(rows: &[SweepRow]) -> Vec<f64> {
        rows.iter()
            .map(|r| match r.observation {
                Observation::Value(v) => v,
                ref o => panic!("unexpected {o:?}"),
            })
            .collect()
    }

    #[test]
    fn gap_sweep_without_interaction() {
        let spec = SweepSpec::new(
            SweepKind::Gap,
            params(0.3, 0.0, 0.0),
            vec![50, 100, 200],
            5,
            0,
        );
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 3);
        for (g, want) in values(&rows).iter().zip([0.02, 0.01, 0.005]) {
            assert!((g - want).abs() < 1e-8);
        }
    }

    #[test]
    fn coupling_sweep_without_interaction() {
        let spec = SweepSpec::new(
            SweepKind::Coupling,
            params(0.5, 0.0, 0.0),
            vec![100],
            200,
            4,
        )
        .with_cap(1_000_000);
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 200);
        let s = summarize(&rows);
        assert_eq!(s[0].completed, 200);
        assert!((s[0].mean.unwrap() / 518.74 - 1.0).abs() < 0.15);
    }

    #[test]
    fn sweeps_are_deterministic() {
        let spec = SweepSpec::new(
            SweepKind::BurnIn,
            params(0.5, 0.5, 0.5),
            vec![50, 80],
            8,
            99,
        )
        .with_cap(100_000);
        let a = run_sweep(&spec).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| run_sweep(&spec).unwrap());
        assert_eq!(a, b);
        assert_eq!(a[3].seed, run_seed(99, 50, 3));
    }

    #[test]
    fn censoring_is_reported_and_stable() {
        let low = params(0.05, 6.0, 0.0);
        let short = SweepSpec::new(SweepKind::Coupling, low, vec![40, 80], 6, 5).with_cap(2_000);
        let long = SweepSpec {
            cap: Some(200_000),
            ..short.clone()
        };
        let a = run_sweep(&short).unwrap();
        let b = run_sweep(&long).unwrap();
        assert!(a.iter().any(|r| matches!(r.observation, Observation::Censored { lower_bound } if lower_bound == 2_000.0)));
        for (x, y) in a.iter().zip(&b) {
            if let Observation::Value(_) = x.observation {
                assert_eq!(x, y);
            }
        }
        let s = summarize(&a);
        assert!(s
            .iter()
            .any(|s| s.censored > 0 && s.censoring_bound == Some(2_000.0)));
    }

    #[test]
    fn failures_stay_in_rows() {
        // Escape times are refused at high temperature; the sweep still runs.
        let spec = SweepSpec::new(SweepKind::Escape, params(0.5, 0.5, 0.5), vec![10, 20], 2, 0)
            .with_cap(10);
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows
            .iter()
            .all(|r| matches!(r.observation, Observation::Failed(_))));
        assert_eq!(summarize(&rows)[0].failed, 2);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let m = params(0.5, 0.0, 0.0);
        assert!(run_sweep(&SweepSpec::new(SweepKind::Gap, m, vec![], 1, 0)).is_err());
        assert!(run_sweep(&SweepSpec::new(SweepKind::Gap, m, vec![10, 10], 1, 0)).is_err());
        assert!(run_sweep(&SweepSpec::new(SweepKind::Gap, m, vec![10], 0, 0)).is_err());
        assert!(run_sweep(&SweepSpec::new(SweepKind::Coupling, m, vec![10], 3, 0)).is_err());
    }

    #[test]
    fn fit_examples() {
        let pts = [
            FitPoint::new(1.0, 1.0),
            FitPoint::new(2.0, 4.0),
            FitPoint::new(4.0, 16.0),
        ];
        let f = fit_scaling(&pts, ScalingModel::PowerLaw).unwrap();
        assert!((f.exponent_or_rate - 2.0).abs() < 1e-12);
        assert!((f.coefficient - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);

        let pts: Vec<FitPoint> = [10.0, 20.0, 40.0, 80.0]
            .iter()
            .map(|&n: &f64| FitPoint::new(n, n * n.ln()))
            .collect();
        let f = fit_scaling(&pts, ScalingModel::NLogN).unwrap();
        assert!((f.coefficient - 1.0).abs() < 1e-12);
        assert!(f.max_ratio_deviation.unwrap() < 1e-12);
        assert!((f.ratio_spread.unwrap() - 1.0).abs() < 1e-12);
        assert!(f.exponent_or_rate.abs() < 1e-12);

        let pts = [
            FitPoint::new(30.0, 3f64.exp()),
            FitPoint::new(40.0, 4f64.exp()),
            FitPoint::new(50.0, 5f64.exp()),
        ];
        let f = fit_scaling(&pts, ScalingModel::Exponential).unwrap();
        assert!((f.exponent_or_rate - 0.1).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_synthetic_parameters() {
        let ns = [7.0, 13.0, 29.0, 61.0, 100.0];
        let pts: Vec<FitPoint> = ns
            .iter()
            .map(|&n: &f64| FitPoint::new(n, 3.7 * n.powf(1.37)))
            .collect();
        let f = fit_scaling(&pts, ScalingModel::PowerLaw).unwrap();
        assert!((f.exponent_or_rate - 1.37).abs() < 1e-10 && (f.coefficient - 3.7).abs() < 1e-10);
        let pts: Vec<FitPoint> = ns
            .iter()
            .map(|&n: &f64| FitPoint::new(n, 0.2 * (0.05 * n).exp()))
            .collect();
        let f = fit_scaling(&pts, ScalingModel::Exponential).unwrap();
        assert!((f.exponent_or_rate - 0.05).abs() < 1e-10 && (f.coefficient - 0.2).abs() < 1e-10);
        let pts: Vec<FitPoint> = ns
            .iter()
            .map(|&n: &f64| FitPoint::new(n, 2.5 * n * n.ln()))
            .collect();
        let f = fit_scaling(&pts, ScalingModel::NLogN).unwrap();
        assert!((f.coefficient - 2.5).abs() < 1e-10);
    }

    #[test]
    fn fit_errors_and_censoring() {
        let mut pts = vec![
            FitPoint::new(1.0, 1.0),
            FitPoint::new(2.0, 4.0),
            FitPoint::new(4.0, 16.0),
        ];
        pts.push(FitPoint {
            n: 8.0,
            y: 1.0,
            censored: true,
        });
        let f = fit_scaling(&pts, ScalingModel::PowerLaw).unwrap();
        assert_eq!(f.excluded_censored, 1);
        assert_eq!(f.points_used, 3);
        assert!((f.exponent_or_rate - 2.0).abs() < 1e-12);
        assert!(matches!(
            fit_scaling(&pts[..2], ScalingModel::PowerLaw),
            Err(Error::InsufficientData(_))
        ));
        let bad = [
            FitPoint::new(1.0, 1.0),
            FitPoint::new(2.0, 0.0),
            FitPoint::new(3.0, 1.0),
        ];
        assert!(matches!(
            fit_scaling(&bad, ScalingModel::PowerLaw),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn phase_mismatch_is_refused() {
        let budget = ExperimentBudget::canonical(PhaseTarget::High);
        assert!(matches!(
            phase_experiment(PhaseTarget::Low, &budget),
            Err(Error::Refused(_))
        ));
        for t in [PhaseTarget::High, PhaseTarget::Low, PhaseTarget::Critical] {
            assert_eq!(
                classify_phase(&t.canonical_params()).phase,
                t.expected_phase()
            );
        }
    }

    #[test]
    fn low_temperature_gap_fit() {
        let budget = ExperimentBudget {
            n_values: (30..=80).step_by(10).collect(),
            escape_n_values: vec![],
            ..ExperimentBudget::canonical(PhaseTarget::Low)
        };
        let report = phase_experiment(PhaseTarget::Low, &budget).unwrap();
        let f = report.fit("inverse_gap").unwrap();
        assert!(f.exponent_or_rate > 0.0 && f.r_squared >= 0.9, "{f:?}");
        assert!(report.prediction.unwrap() > 0.0);
    }
}
