//! The four pipelines. Each writes its artifacts into the output directory
//! and reports threshold misses as [`Failure::Check`].

use std::path::{Path, PathBuf};

use demuxforge_core::dynamics::{propagate_verified, ConvergenceReport};
use demuxforge_core::io::{
    read_curve_csv, read_schedule, write_curve_csv, write_json, write_populations_csv, write_schedule,
    write_wavefunction_csv, PropagationSummary,
};
use demuxforge_core::mapping::{map_schedule, round_trip, MappingStats, PhysicalSchedule, RoundTrip};
use demuxforge_core::model2l::{fast_adiabatic_curve, ControlCurve, CurveKind, DesignParams};
use demuxforge_core::protocols::{
    baseline_for, design_two_level, doublet_states, population_inversion, shortcut_failures, simulate_channels,
    ChannelRun, DesignChecks, Provenance,
};
use demuxforge_core::Error;
use serde::Serialize;

use crate::config::RunConfig;

/// Design checks: boundary and commutator residuals, and two-level
/// transport infidelity.
const RESIDUAL_TOL: f64 = 1e-8;
const INFIDELITY_TOL: f64 = 1e-6;

#[derive(Debug)]
pub enum Failure {
    /// Bad configuration or missing input (exit 2).
    Invalid(String),
    /// A verification threshold was missed (exit 3).
    Check(String),
    /// Anything else (exit 1).
    Other(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Check(_) => 3,
            Failure::Other(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Invalid(m) => write!(f, "invalid input: {m}"),
            Failure::Check(m) => write!(f, "check failed: {m}"),
            Failure::Other(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match &e {
            Error::InvalidParams(_) | Error::Parse(_) | Error::Json(_) | Error::Csv(_) => Failure::Invalid(e.to_string()),
            Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => Failure::Invalid(e.to_string()),
            Error::UnmappableSample { .. } | Error::NotConverged { .. } | Error::TunnelingNotSuppressed { .. } => {
                Failure::Check(e.to_string())
            }
            _ => Failure::Other(e.to_string()),
        }
    }
}

pub type CmdResult = Result<(), Failure>;

/// Shared per-invocation context.
pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub stride: Option<usize>,
    pub verify_dt: bool,
    pub baseline: bool,
    pub provenance: Provenance,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn require_file(p: &Path) -> Result<(), Failure> {
    if p.is_file() {
        Ok(())
    } else {
        Err(Failure::Invalid(format!("input file {} does not exist", p.display())))
    }
}

#[derive(Serialize)]
struct DesignReport<'a> {
    case: &'a str,
    params: DesignParams,
    checks: &'a DesignChecks,
    /// Adiabaticity figure of the fast-adiabatic reference at `lambda_f`.
    fast_adiabatic_c: f64,
    fast_adiabatic_flagged: bool,
    pass: bool,
    provenance: &'a Provenance,
}

pub fn design(ctx: &Context) -> CmdResult {
    let params = ctx.config.design_params();
    let two = design_two_level(&params)?;
    write_curve_csv(&ctx.path("curve.csv"), &two.curve)?;
    let fa = fast_adiabatic_curve(params.omega0, params.lambda_f, params.tf, params.n_samples)?;
    let pass = two.checks.passes(RESIDUAL_TOL, INFIDELITY_TOL);
    write_json(
        &ctx.path("design_check.json"),
        &DesignReport {
            case: &ctx.config.case,
            params,
            checks: &two.checks,
            fast_adiabatic_c: fa.c,
            fast_adiabatic_flagged: fa.non_adiabatic,
            pass,
            provenance: &ctx.provenance,
        },
    )?;
    log::info!("design: max residual {:.2e}, transport {:?}", two.checks.max_boundary_residual(), two.checks.transport_fidelities);
    if pass {
        Ok(())
    } else {
        Err(Failure::Check(format!("design checks failed: {:?}", two.checks)))
    }
}

fn curve_for(ctx: &Context) -> Result<ControlCurve, Failure> {
    match &ctx.config.curve_csv {
        Some(p) => {
            require_file(p)?;
            Ok(read_curve_csv(p, CurveKind::InvariantDesigned)?)
        }
        None => Ok(design_two_level(&ctx.config.design_params())?.curve),
    }
}

#[derive(Serialize)]
struct MapReport<'a> {
    case: &'a str,
    stats: MappingStats,
    round_trip: RoundTrip,
    cost_tol: f64,
    smoothness_ratio: f64,
    pass: bool,
    provenance: &'a Provenance,
}

fn mapped(ctx: &Context, curve: &ControlCurve) -> Result<(PhysicalSchedule, MappingStats), Failure> {
    let cfg = ctx.config.mapping_config(ctx.stride);
    Ok(map_schedule(curve, &cfg)?)
}

pub fn map(ctx: &Context) -> CmdResult {
    let curve = curve_for(ctx)?;
    let cfg = ctx.config.mapping_config(ctx.stride);
    let (schedule, stats) = mapped(ctx, &curve)?;
    write_schedule(&ctx.path("schedule.csv"), &schedule)?;
    let rt = round_trip(&schedule, &curve)?;
    let bad: Vec<usize> = (0..schedule.len())
        .filter(|&i| !schedule.saturated[i] && schedule.residuals[i] > cfg.cost_tol)
        .collect();
    write_json(
        &ctx.path("mapping.json"),
        &MapReport {
            case: &ctx.config.case,
            stats,
            round_trip: rt,
            cost_tol: cfg.cost_tol,
            smoothness_ratio: schedule.smoothness_ratio(),
            pass: bad.is_empty(),
            provenance: &ctx.provenance,
        },
    )?;
    log::info!("map: {stats:?}");
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("{} samples exceed cost_tol, first at index {}", bad.len(), bad[0])))
    }
}

fn schedule_for(ctx: &Context) -> Result<PhysicalSchedule, Failure> {
    match &ctx.config.schedule_csv {
        Some(p) => {
            require_file(p)?;
            Ok(read_schedule(p)?)
        }
        None => {
            let curve = curve_for(ctx)?;
            Ok(mapped(ctx, &curve)?.0)
        }
    }
}

#[derive(Serialize)]
struct ChannelSummary {
    fidelity: f64,
    summary: PropagationSummary,
    convergence: Option<ConvergenceReport>,
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    case: &'a str,
    shortcut: Vec<ChannelSummary>,
    final_overlap: f64,
    baseline: Option<BaselineSummary>,
    failures: Vec<String>,
    pass: bool,
    provenance: &'a Provenance,
}

#[derive(Serialize)]
struct BaselineSummary {
    channels: Vec<ChannelSummary>,
    /// Set when a channel misses the shortcut fidelity threshold.
    non_adiabatic: bool,
}

fn write_channels(ctx: &Context, prefix: &str, run: &ChannelRun) -> Result<Vec<ChannelSummary>, Failure> {
    let mut out = Vec::new();
    for c in 0..2 {
        let r = &run.results[c];
        write_populations_csv(&ctx.path(&format!("{prefix}_populations_ch{c}.csv")), r)?;
        write_wavefunction_csv(&ctx.path(&format!("{prefix}_final_ch{c}.csv")), &r.final_state)?;
        out.push(ChannelSummary { fidelity: run.fidelities[c], summary: PropagationSummary::of(r), convergence: None });
    }
    Ok(out)
}

pub fn simulate(ctx: &Context) -> CmdResult {
    ctx.config.validate(ctx.stride)?;
    let schedule = schedule_for(ctx)?;
    let opts = ctx.config.dynamics_options();
    let run = simulate_channels(&schedule, &opts)?;
    let mut shortcut = write_channels(ctx, "shortcut", &run)?;
    let th = ctx.config.thresholds;
    let mut failures = shortcut_failures(&run, &th);

    if ctx.verify_dt {
        let grid = schedule.fixed.grid;
        let start = doublet_states(&schedule.first_params(), grid)?;
        let end = doublet_states(&schedule.last_params(), grid)?;
        for c in 0..2 {
            match propagate_verified(&schedule, &start[c], &opts, &end[c], ctx.config.dynamics.fidelity_tol, ctx.config.dynamics.dt_min_s) {
                Ok((_, report)) => shortcut[c].convergence = Some(report),
                Err(e @ Error::NotConverged { .. }) => failures.push(format!("channel {c}: {e}")),
                Err(e) => return Err(e.into()),
            }
        }
    }

    let baseline = if ctx.baseline || ctx.config.baseline {
        let tf = schedule.tf();
        let ramp = baseline_for(&schedule, ctx.config.design_params().omega0, tf)?;
        let base = simulate_channels(&ramp, &opts)?;
        let channels = write_channels(ctx, "baseline", &base)?;
        let non_adiabatic = base.fidelities.iter().any(|f| *f < th.shortcut_fidelity);
        Some(BaselineSummary { channels, non_adiabatic })
    } else {
        None
    };

    let pass = failures.is_empty();
    write_json(
        &ctx.path("summary.json"),
        &SimulateReport {
            case: &ctx.config.case,
            shortcut,
            final_overlap: run.final_overlap(),
            baseline,
            failures: failures.clone(),
            pass,
            provenance: &ctx.provenance,
        },
    )?;
    log::info!("simulate: fidelities {:?}", run.fidelities);
    if pass {
        Ok(())
    } else {
        Err(Failure::Check(failures.join("; ")))
    }
}

pub fn invert(ctx: &Context) -> CmdResult {
    ctx.config.validate(ctx.stride)?;
    let spec = ctx.config.spec(ctx.stride);
    let schedule = schedule_for(ctx)?;
    let report = population_inversion(&spec, &schedule, None, ctx.provenance.clone())?;
    write_json(&ctx.path("inversion_report.json"), &report)?;
    log::info!("invert: fidelities {:?}", report.channel_fidelities);
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Check(report.failures.join("; ")))
    }
}
