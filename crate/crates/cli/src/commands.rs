use std::path::PathBuf;

use glauber_core::analysis::{
    barrier_rate, cbar_for_alpha2, classify_phase, critical_point, phase_diagram_scan,
    sup_lambda_prime, v_region_boundary, verify_criticality, CriticalPoint, CriticalityReport,
    FixedPoint, Phase,
};
use glauber_core::dynamics::run as run_chain;
use glauber_core::dynamics::{coupling_time, StopTime};
use glauber_core::exactchain::{
    bottleneck_ratio, build_kernel, check_detailed_balance, exact_mixing_time,
    exact_mixing_time_doubling, run_oracle_checks, spectral_gap, stationary, BottleneckReport,
    MagnetizationKernel, MixingOptions, MixingReport, SpectralReport,
};
use glauber_core::experiments::{
    fit_scaling, mean_points, phase_experiment, run_seed, run_sweep, summarize, ExperimentBudget,
    FitPoint, MixingMethod, NamedFit, Observation, ScalingFit, SweepKind, SweepRow, SweepSpec,
    SweepSummary,
};
use glauber_core::{Error, ModelParams};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{
    Cli, Command, CoupleArgs, CriticalArgs, CurveArgs, ExactArgs, MethodArg, ModelArgs,
    PhaseDiagramArgs, SimulateArgs, SweepArgs,
};
use crate::output::{curve_csv, emit_curve, json, real, Csv};
use crate::{sibling, Failure, Outcome, RunRecord};

fn done(data: Vec<u8>) -> Result<Outcome, Failure> {
    Ok(Outcome {
        data,
        side: None,
        status: Ok(()),
    })
}

pub(crate) fn side_path(cli: &Cli) -> Option<PathBuf> {
    match &cli.command {
        Command::Sweep(a) => a
            .fit_out
            .clone()
            .or_else(|| cli.out.as_ref().map(|o| sibling(o, ".fit.json"))),
        _ => None,
    }
}

pub(crate) fn run(cli: &Cli, record: &mut RunRecord) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Analyze(a) => analyze(a, record),
        Command::Critical(a) => critical(a, record),
        Command::Exact(a) => exact(a, record),
        Command::Simulate(a) => simulate(a, record),
        Command::Couple(a) => couple(a, record),
        Command::Sweep(a) => sweep(a, record),
        Command::PhaseDiagram(a) => phase_diagram(a),
        Command::Curve(a) => curve(a, record),
        Command::Oracle(a) => oracle(a, record),
    }
}

/// Parameters for the `n`-free commands; `n` defaults to 1.
fn limit_params(m: &ModelArgs, record: &mut RunRecord) -> Result<ModelParams, Failure> {
    let params = ModelParams::new(m.n.unwrap_or(1), m.p, m.a1, m.a2)?;
    record.params = Some(params);
    Ok(params)
}

fn sized_params(m: &ModelArgs, record: &mut RunRecord) -> Result<ModelParams, Failure> {
    let n =
        m.n.ok_or_else(|| Failure::usage("--n is required for this command"))?;
    let params = ModelParams::new(n, m.p, m.a1, m.a2)?;
    record.params = Some(params);
    Ok(params)
}

#[derive(Serialize)]
struct AnalyzeOutput {
    p: f64,
    alpha1: f64,
    alpha2: f64,
    phase: Phase,
    fixed_points: Vec<FixedPoint>,
    sup_lambda_prime: f64,
    /// Exponential rate of the bottleneck at low temperature.
    barrier_rate: Option<f64>,
}

fn analyze(m: &ModelArgs, record: &mut RunRecord) -> Result<Outcome, Failure> {
    let params = limit_params(m, record)?;
    let report = classify_phase(&params);
    done(json(&AnalyzeOutput {
        p: params.p(),
        alpha1: params.alpha1(),
        alpha2: params.alpha2(),
        phase: report.phase,
        fixed_points: report.fixed_points,
        sup_lambda_prime: sup_lambda_prime(&params),
        barrier_rate: barrier_rate(&params),
    }))
}

#[derive(Serialize)]
struct CriticalOutput {
    #[serde(flatten)]
    point: CriticalPoint,
    identities: CriticalityReport,
}

fn critical(a: &CriticalArgs, record: &mut RunRecord) -> Result<Outcome, Failure> {
    let cbar = match (a.cbar, a.a2) {
        (Some(c), _) => c,
        (None, Some(a2)) => cbar_for_alpha2(a2)?,
        (None, None) => return Err(Failure::usage("give --cbar or --a2")),
    };
    let point = critical_point(cbar)?;
    record.params = Some(point.params(1)?);
    let identities = verify_criticality(&point)?;
    done(json(&CriticalOutput { point, identities }))
}

#[derive(Serialize)]
struct CapInfo {
    cap: u64,
    distance: f64,
}

#[derive(Serialize)]
struct ExactOutput {
    params: ModelParams,
    detailed_balance_violation: f64,
    spectral: SpectralReport,
    bottleneck: BottleneckReport,
    mixing: Option<MixingReport>,
    mixing_cap_exceeded: Option<CapInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kernel: Option<MagnetizationKernel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stationary: Option<Vec<f64>>,
}

fn exact(a: &ExactArgs, record: &mut RunRecord) -> Result<Outcome, Failure> {
    let params = sized_params(&a.model, record)?;
    let kernel = build_kernel(&params);
    let dist = stationary(&params);
    let mixing = match a.method {
        MethodArg::Iterate => {
            if let Some(cap) = a.cap {
                record.caps.push(cap);
            }
            exact_mixing_time(
                &kernel,
                &dist,
                MixingOptions {
                    epsilon: a.epsilon,
                    starts: a.starts.into(),
                    cap: a.cap,
                },
            )
        }
        MethodArg::Doubling => exact_mixing_time_doubling(&kernel, &dist, a.epsilon),
    };
    let (mixing, mixing_cap_exceeded, status) = match mixing {
        Ok(r) => (Some(r), None, Ok(())),
        Err(e @ Error::CapExceeded { cap, distance }) => {
            (None, Some(CapInfo { cap, distance }), Err(e.into()))
        }
        Err(e) => return Err(e.into()),
    };
    let out = ExactOutput {
        params,
        detailed_balance_violation: check_detailed_balance(&kernel, &dist)?,
        spectral: spectral_gap(&kernel, &dist)?,
        bottleneck: bottleneck_ratio(&kernel, &dist)?,
        mixing,
        mixing_cap_exceeded,
        stationary: a.kernel.then(|| dist.probabilities()),
        kernel: a.kernel.then_some(kernel),
    };
    Ok(Outcome {
        data: json(&out),
        side: None,
        status,
    })
}

fn simulate(a: &SimulateArgs, record: &mut RunRecord) -> Result<Outcome, Failure> {
    let params = sized_params(&a.model, record)?;
    let seed = record.seed(a.seed);
    let traj = run_chain(&params, &a.start, a.steps, a.stride, seed)?;
    let mut csv = Csv::new(&["t", "c"]);
    for (i, c) in traj.magnetizations.iter().enumerate() {
        csv.row([(i as u64 * a.stride).to_string(), real(*c)]);
    }
    done(csv.into_bytes())
}

fn couple(a: &CoupleArgs, record: &mut RunRecord) -> Result<Outcome, Failure> {
    let params = sized_params(&a.model, record)?;
    let master = record.seed(a.seed);
    record.caps.push(a.cap);
    if a.replicas == 0 {
        return Err(Failure::usage("--replicas must be at least 1"));
    }
    let runs: Vec<(u64, u64, StopTime)> = (0..a.replicas)
        .into_par_iter()
        .map(|rep| {
            let seed = run_seed(master, params.n(), rep);
            coupling_time(&params, seed, a.cap).map(|r| (rep, seed, r.tau))
        })
        .collect::<Result<_, _>>()?;
    let mut csv = Csv::new(&["replicate", "seed", "tau", "censored"]);
    let mut censored = 0;
    for (rep, seed, tau) in runs {
        let (t, c) = match tau {
            StopTime::Hit(t) => (t, false),
            StopTime::TimedOut(cap) => {
                censored += 1;
                (cap, true)
            }
        };
        csv.row([
            rep.to_string(),
            seed.to_string(),
            t.to_string(),
            c.to_string(),
        ]);
    }
    let status = if censored > 0 {
        Err(Failure::cap(format!(
            "{censored} of {} runs hit the cap of {}",
            a.replicas, a.cap
        )))
    } else {
        Ok(())
    };
    Ok(Outcome {
        data: csv.into_bytes(),
        side: None,
        status,
    })
}

fn kind_name(kind: SweepKind) -> &'static str {
    match kind {
        SweepKind::Mixing => "mixing",
        SweepKind::Gap => "gap",
        SweepKind::Bottleneck => "bottleneck",
        SweepKind::Coupling => "coupling",
        SweepKind::BurnIn => "burn-in",
        SweepKind::Escape => "escape",
    }
}

const SWEEP_HEADER: [&str; 6] = ["kind", "n", "replicate", "seed", "status", "value"];

/// Appends rows and returns `(censored, failed)` counts.
fn sweep_rows(csv: &mut Csv, kind: SweepKind, rows: &[SweepRow]) -> (usize, Vec<String>) {
    let mut censored = 0;
    let mut failures = Vec::new();
    for r in rows {
        let (status, value) = match &r.observation {
            Observation::Value(v) => ("value", real(*v)),
            Observation::Censored { lower_bound } => {
                censored += 1;
                ("censored", real(*lower_bound))
            }
            Observation::Failed(msg) => {
                failures.push(format!("n = {} replicate {}: {msg}", r.n, r.replicate));
                ("failed", String::new())
            }
        };
        csv.row([
            kind_name(kind).to_string(),
            r.n.to_string(),
            r.replicate.to_string(),
            r.seed.to_string(),
            status.to_string(),
            value,
        ]);
    }
    (censored, failures)
}

fn sweep_status(
    censored: usize,
    failures: &[String],
    fit_error: Option<Failure>,
) -> Result<(), Failure> {
    if !failures.is_empty() {
        return Err(Failure::numeric(format!(
            "{} runs failed: {}",
            failures.len(),
            failures.join("; ")
        )));
    }
    if let Some(f) = fit_error {
        return Err(f);
    }
    if censored > 0 {
        return Err(Failure::cap(format!("{censored} runs hit their cap")));
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepSide {
    spec: SweepSpec,
    summary: Vec<SweepSummary>,
    fit: Option<ScalingFit>,
}

#[derive(Serialize)]
struct KindSummary {
    kind: SweepKind,
    summary: Vec<SweepSummary>,
}

#[derive(Serialize)]
struct PhaseSide {
    budget: ExperimentBudget,
    summaries: Vec<KindSummary>,
    fits: Vec<NamedFit>,
    prediction: Option<f64>,
}

fn sweep(a: &SweepArgs, record: &mut RunRecord) -> Result<Outcome, Failure> {
    let master = record.seed(a.seed);
    let mut csv = Csv::new(&SWEEP_HEADER);

    if let Some(phase) = a.phase {
        let mut budget = ExperimentBudget::canonical(phase.into());
        budget.master_seed = master;
        if let Some(r) = a.replicas {
            budget.replicas = r;
        }
        if let Some(c) = a.cap {
            budget.cap = c;
        }
        record.params = Some(budget.params);
        record.caps.push(budget.cap);
        let report = phase_experiment(phase.into(), &budget)?;
        let mut censored = 0;
        let mut failures = Vec::new();
        for s in &report.sweeps {
            let (c, f) = sweep_rows(&mut csv, s.spec.kind, &s.rows);
            censored += c;
            failures.extend(f);
        }
        let side = PhaseSide {
            budget,
            summaries: report
                .sweeps
                .iter()
                .map(|s| KindSummary {
                    kind: s.spec.kind,
                    summary: s.summary.clone(),
                })
                .collect(),
            fits: report.fits,
            prediction: report.prediction,
        };
        return Ok(Outcome {
            data: csv.into_bytes(),
            side: Some(json(&side)),
            status: sweep_status(censored, &failures, None),
        });
    }

    let kind = a
        .kind
        .ok_or_else(|| Failure::usage("--kind is required"))?
        .into();
    let p = a.p.ok_or_else(|| Failure::usage("--p is required"))?;
    let n_values = a.n_values.clone().map(|s| s.0).unwrap_or_default();
    let first = *n_values
        .first()
        .ok_or_else(|| Failure::usage("--n-values must list at least one size"))?;
    let params = ModelParams::new(first, p, a.a1, a.a2)?;
    record.params = Some(params);
    let mut spec = SweepSpec::new(kind, params, n_values, a.replicas.unwrap_or(1), master);
    spec.cap = a.cap;
    if let Some(c) = a.cap {
        record.caps.push(c);
    }
    spec.mixing_method = match a.method {
        MethodArg::Iterate => MixingMethod::Iterate,
        MethodArg::Doubling => MixingMethod::Doubling,
    };
    spec.start_c = a.start_c;
    spec.target = a.target;
    spec.basin = a.basin.into();

    let rows = run_sweep(&spec)?;
    let summary = summarize(&rows);
    let (censored, failures) = sweep_rows(&mut csv, kind, &rows);
    let mut fit_error = None;
    let fit = a.fit.and_then(|model| {
        let points: Vec<FitPoint> = mean_points(&summary)
            .into_iter()
            .map(|pt| {
                if a.invert {
                    FitPoint {
                        y: 1.0 / pt.y,
                        ..pt
                    }
                } else {
                    pt
                }
            })
            .collect();
        fit_scaling(&points, model.into())
            .map_err(|e| fit_error = Some(Failure::from(e)))
            .ok()
    });
    Ok(Outcome {
        data: csv.into_bytes(),
        side: Some(json(&SweepSide { spec, summary, fit })),
        status: sweep_status(censored, &failures, fit_error),
    })
}

fn linspace(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>, Failure> {
    if steps == 0 || lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Failure::usage(format!(
            "bad grid: {steps} steps over [{lo}, {hi}]"
        )));
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    let last = (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            if i + 1 == steps {
                hi
            } else {
                lo + (hi - lo) * i as f64 / last
            }
        })
        .collect())
}

fn phase_name(phase: Phase) -> &'static str {
    match phase {
        Phase::HighTemperature => "HighTemperature",
        Phase::LowTemperature => "LowTemperature",
        Phase::Degenerate => "Degenerate",
    }
}

fn phase_diagram(a: &PhaseDiagramArgs) -> Result<Outcome, Failure> {
    let p_grid = linspace(a.p_min, a.p_max, a.p_steps)?;
    if a.boundary {
        let mut csv = Csv::new(&["p", "alpha1_lower", "alpha1_upper", "valid"]);
        for &p in &p_grid {
            let b = v_region_boundary(a.a2, p)?;
            csv.row([
                real(b.p),
                real(b.alpha1_lower),
                real(b.alpha1_upper),
                b.valid.to_string(),
            ]);
        }
        return done(csv.into_bytes());
    }
    let a1_grid = linspace(a.a1_min, a.a1_max, a.a1_steps)?;
    let rows = phase_diagram_scan(a.a2, &p_grid, &a1_grid)?;
    let mut csv = Csv::new(&["p", "alpha1", "phase", "fixed_points"]);
    for r in rows {
        csv.row([
            real(r.p),
            real(r.alpha1),
            phase_name(r.phase).to_string(),
            r.fixed_points.to_string(),
        ]);
    }
    done(csv.into_bytes())
}

fn curve(a: &CurveArgs, record: &mut RunRecord) -> Result<Outcome, Failure> {
    let params = limit_params(&a.model, record)?;
    let points = emit_curve(a.what, &params, a.samples)?;
    done(curve_csv(&points).into_bytes())
}

fn oracle(m: &ModelArgs, record: &mut RunRecord) -> Result<Outcome, Failure> {
    let params = sized_params(m, record)?;
    let report = run_oracle_checks(&params)?;
    let status = if report.passed {
        Ok(())
    } else {
        let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        Err(Failure::numeric(format!(
            "oracle checks failed: {}",
            names.join(", ")
        )))
    };
    Ok(Outcome {
        data: json(&report),
        side: None,
        status,
    })
}
