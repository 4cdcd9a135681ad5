//! End-to-end experiments: demultiplexing, its reverse, the bias flip and
//! the three-stage population inversion.

use serde::{Deserialize, Serialize};

use crate::dynamics::{linear_ramp_schedule, propagate, DynamicsOptions, PropagationResult, WaveFunction};
use crate::error::{Error, Result};
use crate::mapping::{map_schedule, round_trip, MappingConfig, MappingStats, PhysicalSchedule, RoundTrip, ScheduleFixed};
use crate::model2l::{
    commutator_boundary_residual, design_curve, transport_fidelities, AnglePolynomials, ControlCurve, DesignParams,
};
use crate::spectral::{extract_controls, Hamiltonian, PotentialParams};

/// Default bias-flip duration (s).
pub const DEFAULT_FLIP_DURATION: f64 = 10e-3;

/// Samples in a bias-flip schedule.
const FLIP_SAMPLES: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Demux,
    Mux,
    BiasFlip,
    PopulationInversion,
    BaselineRamp,
}

/// Pass limits. The optional ones are only checked when set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Minimum final fidelity of each shortcut channel.
    pub shortcut_fidelity: f64,
    /// Minimum fidelity of each inverted channel.
    pub inversion_fidelity: f64,
    /// Largest change of either well population across the bias flip.
    pub flip_population_change: f64,
    /// Ceiling on `1 - P0(t)` for the ground channel.
    pub max_ground_leakage: Option<f64>,
    /// Ceiling on `P2(t)` for the ground channel.
    pub max_level2_population: Option<f64>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            shortcut_fidelity: 0.999,
            inversion_fidelity: 0.99,
            flip_population_change: 1e-4,
            max_ground_leakage: None,
            max_level2_population: None,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!("threshold {name} = {v} must lie in (0, 1]")))
            }
        };
        unit("shortcut_fidelity", self.shortcut_fidelity)?;
        unit("inversion_fidelity", self.inversion_fidelity)?;
        unit("flip_population_change", self.flip_population_change)?;
        if let Some(v) = self.max_ground_leakage {
            unit("max_ground_leakage", v)?;
        }
        if let Some(v) = self.max_level2_population {
            unit("max_level2_population", v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    pub design: DesignParams,
    pub mapping: MappingConfig,
    pub dynamics: DynamicsOptions,
    /// Bias-flip duration (s).
    pub bias_flip_duration: f64,
    pub thresholds: Thresholds,
}

impl ProtocolSpec {
    pub fn new(kind: ProtocolKind, design: DesignParams, mapping: MappingConfig) -> Self {
        Self {
            kind,
            design,
            mapping,
            dynamics: DynamicsOptions::default(),
            bias_flip_duration: DEFAULT_FLIP_DURATION,
            thresholds: Thresholds::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.design.validate()?;
        self.mapping.validate()?;
        self.dynamics.validate()?;
        self.thresholds.validate()?;
        if !(self.bias_flip_duration > 0.0 && self.bias_flip_duration.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "bias_flip_duration = {} must be positive",
                self.bias_flip_duration
            )));
        }
        Ok(())
    }
}

/// Design-stage checks of an invariant-designed curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignChecks {
    /// The eleven scaled boundary-condition residuals.
    pub boundary_residuals: Vec<f64>,
    /// Scaled `[H, I]` norms at `t = 0` and `t = tf`.
    pub commutator_residuals: [f64; 2],
    /// Two-level transport fidelities of the lower and upper eigenstates.
    pub transport_fidelities: [f64; 2],
    pub negative_delta_samples: usize,
}

impl DesignChecks {
    pub fn compute(params: &DesignParams, poly: &AnglePolynomials, curve: &ControlCurve) -> Result<Self> {
        let (c0, c1) = commutator_boundary_residual(curve, poly);
        let (lo, hi) = transport_fidelities(curve)?;
        Ok(Self {
            boundary_residuals: poly.boundary_residuals(params).to_vec(),
            commutator_residuals: [c0, c1],
            transport_fidelities: [lo, hi],
            negative_delta_samples: curve.negative_delta_samples(),
        })
    }

    pub fn max_boundary_residual(&self) -> f64 {
        self.boundary_residuals.iter().chain(&self.commutator_residuals).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Residuals below `residual_tol` and both fidelities at least `1 - infidelity_tol`.
    pub fn passes(&self, residual_tol: f64, infidelity_tol: f64) -> bool {
        self.max_boundary_residual() < residual_tol
            && self.transport_fidelities.iter().all(|f| *f >= 1.0 - infidelity_tol)
    }
}

#[derive(Debug, Clone)]
pub struct TwoLevelDesign {
    pub polynomials: AnglePolynomials,
    pub curve: ControlCurve,
    pub checks: DesignChecks,
}

pub fn design_two_level(params: &DesignParams) -> Result<TwoLevelDesign> {
    let (polynomials, curve) = design_curve(params)?;
    let checks = DesignChecks::compute(params, &polynomials, &curve)?;
    Ok(TwoLevelDesign { polynomials, curve, checks })
}

#[derive(Debug, Clone)]
pub struct DemuxDesign {
    pub two_level: TwoLevelDesign,
    pub schedule: PhysicalSchedule,
    pub stats: MappingStats,
    pub round_trip: RoundTrip,
}

/// Designs the curve and maps it onto the trap.
pub fn design_demux(spec: &ProtocolSpec) -> Result<DemuxDesign> {
    spec.design.validate()?;
    spec.mapping.validate()?;
    let two_level = design_two_level(&spec.design)?;
    let (schedule, stats) = map_schedule(&two_level.curve, &spec.mapping)?;
    let round_trip = round_trip(&schedule, &two_level.curve)?;
    Ok(DemuxDesign { two_level, schedule, stats, round_trip })
}

/// Multiplexing schedule: same times, parameters played backwards.
pub fn reverse_schedule(s: &PhysicalSchedule) -> PhysicalSchedule {
    s.reversed()
}

/// Linear `dx` ramp from `p_final.dx_shift` to its negative at the held
/// depth and frequency of `p_final`. Tunneling at both ends must be below
/// `1e-3 omega0`.
pub fn bias_flip_schedule(
    p_final: &PotentialParams,
    grid: crate::spectral::SpatialGrid,
    omega0: f64,
    duration: f64,
    n: usize,
) -> Result<PhysicalSchedule> {
    if !(duration > 0.0 && duration.is_finite()) || n < 2 {
        return Err(Error::InvalidParams(format!("bias flip needs duration > 0 and n >= 2, got {duration}, {n}")));
    }
    p_final.validate()?;
    let limit = 1e-3 * omega0;
    for dx in [p_final.dx_shift, -p_final.dx_shift] {
        let c = extract_controls(&PotentialParams { dx_shift: dx, ..*p_final }, grid)?;
        if c.delta.abs() >= limit {
            return Err(Error::TunnelingNotSuppressed { delta: c.delta });
        }
    }
    let fixed = ScheduleFixed { mass: p_final.mass, d_l: p_final.d_l, dx_shift: p_final.dx_shift, grid };
    let mut s = linear_ramp_schedule(p_final.v0, p_final.omega, duration, n, fixed)?;
    s.v0 = vec![p_final.v0; n];
    s.dx_ramp = Some(s.times.iter().map(|t| p_final.dx_shift * (1.0 - 2.0 * t / duration)).collect());
    Ok(s)
}

/// `(left, right)` probabilities, split at `x = 0`.
pub fn well_populations(psi: &WaveFunction) -> (f64, f64) {
    let right = psi.weight_right_of(0.0);
    (psi.norm_sqr() - right, right)
}

/// Lowest two eigenstates of `p` as wavefunctions.
pub fn doublet_states(p: &PotentialParams, grid: crate::spectral::SpatialGrid) -> Result<[WaveFunction; 2]> {
    let (_, s) = Hamiltonian::new(p, grid)?.lowest(2)?;
    Ok([WaveFunction::from_real(grid, &s[0])?, WaveFunction::from_real(grid, &s[1])?])
}

/// Propagates two inputs through one schedule, concurrently.
pub fn run_channels(
    schedule: &PhysicalSchedule,
    inputs: [&WaveFunction; 2],
    opts: &DynamicsOptions,
) -> Result<[PropagationResult; 2]> {
    let (a, b) = rayon::join(|| propagate(schedule, inputs[0], opts), || propagate(schedule, inputs[1], opts));
    Ok([a?, b?])
}

/// Ground and excited channel through a schedule, with fidelities against
/// the lowest two eigenstates at the end.
#[derive(Debug, Clone)]
pub struct ChannelRun {
    pub results: [PropagationResult; 2],
    pub fidelities: [f64; 2],
}

impl ChannelRun {
    pub fn min_fidelity(&self) -> f64 {
        self.fidelities[0].min(self.fidelities[1])
    }

    /// `|<psi_0(tf)|psi_1(tf)>|`.
    pub fn final_overlap(&self) -> f64 {
        self.results[0].final_state.overlap(&self.results[1].final_state).norm()
    }
}

pub fn simulate_channels(schedule: &PhysicalSchedule, opts: &DynamicsOptions) -> Result<ChannelRun> {
    let grid = schedule.fixed.grid;
    let start = doublet_states(&schedule.first_params(), grid)?;
    let end = doublet_states(&schedule.last_params(), grid)?;
    let mut results = run_channels(schedule, [&start[0], &start[1]], opts)?;
    let mut fidelities = [0.0; 2];
    for c in 0..2 {
        fidelities[c] = end[c].fidelity(&results[c].final_state);
        results[c].fidelities.insert(format!("phi{c}_final"), fidelities[c]);
    }
    Ok(ChannelRun { results, fidelities })
}

/// Linear `V0` ramp at constant `omega0` to the final depth of `shortcut`,
/// over the same duration.
pub fn baseline_for(shortcut: &PhysicalSchedule, omega0: f64, tf: f64) -> Result<PhysicalSchedule> {
    let n = shortcut.len();
    linear_ramp_schedule(shortcut.v0[n - 1], omega0, tf, n, shortcut.fixed)
}

/// Compact record of one channel through one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: String,
    pub channel: usize,
    pub duration: f64,
    /// Fidelity against this stage's target, when it has one.
    pub fidelity: Option<f64>,
    pub well_left: f64,
    pub well_right: f64,
    pub max_populations: Vec<f64>,
    pub min_populations: Vec<f64>,
    pub aa_min_time: f64,
    pub norm_drift: f64,
    pub steps: usize,
    pub dt: f64,
}

impl StageSummary {
    pub fn from_result(stage: &str, channel: usize, r: &PropagationResult, fidelity: Option<f64>) -> Self {
        let k = r.populations.first().map_or(0, Vec::len);
        let (well_left, well_right) = well_populations(&r.final_state);
        Self {
            stage: stage.to_string(),
            channel,
            duration: r.times[r.times.len() - 1] - r.times[0],
            fidelity,
            well_left,
            well_right,
            max_populations: (0..k).map(|n| r.max_population(n)).collect(),
            min_populations: (0..k).map(|n| r.min_population(n)).collect(),
            aa_min_time: r.aa_min_time,
            norm_drift: r.norm_drift,
            steps: r.steps,
            dt: r.dt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub config_hash: Option<String>,
}

impl Provenance {
    pub fn new(config_hash: Option<String>) -> Self {
        Self { version: env!("CARGO_PKG_VERSION").to_string(), config_hash }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub kind: ProtocolKind,
    pub stages: Vec<StageSummary>,
    /// Per-channel end-to-end fidelity.
    pub channel_fidelities: [f64; 2],
    pub overall_fidelity: f64,
    /// Largest well-population change across the bias flip.
    pub flip_population_change: f64,
    pub pass: bool,
    pub failures: Vec<String>,
    pub provenance: Provenance,
}

/// Demux, bias flip, then the reversed demux with mirrored displacement.
/// The ground state ends in the first excited state and vice versa.
///
/// `stage1` may carry an already computed demux run of the two channels
/// (from [`simulate_channels`] on `schedule`) to skip recomputing it.
pub fn population_inversion(
    spec: &ProtocolSpec,
    schedule: &PhysicalSchedule,
    stage1: Option<&ChannelRun>,
    provenance: Provenance,
) -> Result<ProtocolReport> {
    spec.validate()?;
    let opts = &spec.dynamics;
    let grid = schedule.fixed.grid;
    let owned;
    let demux = match stage1 {
        Some(r) => r,
        None => {
            owned = simulate_channels(schedule, opts)?;
            &owned
        }
    };
    let mut stages = Vec::new();
    for c in 0..2 {
        stages.push(StageSummary::from_result("demux", c, &demux.results[c], Some(demux.fidelities[c])));
    }

    let flip = bias_flip_schedule(&schedule.last_params(), grid, spec.design.omega0, spec.bias_flip_duration, FLIP_SAMPLES)?;
    let flipped = run_channels(&flip, [&demux.results[0].final_state, &demux.results[1].final_state], opts)?;
    let mut flip_change: f64 = 0.0;
    for c in 0..2 {
        let (l0, r0) = well_populations(&demux.results[c].final_state);
        let (l1, r1) = well_populations(&flipped[c].final_state);
        flip_change = flip_change.max((l1 - l0).abs()).max((r1 - r0).abs());
        stages.push(StageSummary::from_result("bias_flip", c, &flipped[c], None));
    }

    let mux = reverse_schedule(schedule).mirrored_shift();
    let out = run_channels(&mux, [&flipped[0].final_state, &flipped[1].final_state], opts)?;
    let targets = doublet_states(&mux.last_params(), grid)?;
    let mut channel_fidelities = [0.0; 2];
    for c in 0..2 {
        channel_fidelities[c] = targets[1 - c].fidelity(&out[c].final_state);
        stages.push(StageSummary::from_result("mux", c, &out[c], Some(channel_fidelities[c])));
    }

    let th = &spec.thresholds;
    let mut failures = Vec::new();
    for c in 0..2 {
        if channel_fidelities[c] < th.inversion_fidelity {
            failures.push(format!(
                "channel {c}: inversion fidelity {:.6} < {}",
                channel_fidelities[c], th.inversion_fidelity
            ));
        }
    }
    if flip_change >= th.flip_population_change {
        failures.push(format!("bias flip moved {flip_change:.3e} of the population (limit {})", th.flip_population_change));
    }
    Ok(ProtocolReport {
        kind: ProtocolKind::PopulationInversion,
        stages,
        channel_fidelities,
        overall_fidelity: channel_fidelities[0].min(channel_fidelities[1]),
        flip_population_change: flip_change,
        pass: failures.is_empty(),
        failures,
        provenance,
    })
}

/// Threshold failures of a shortcut run, empty when it passes.
pub fn shortcut_failures(run: &ChannelRun, th: &Thresholds) -> Vec<String> {
    let mut out = Vec::new();
    for c in 0..2 {
        if run.fidelities[c] < th.shortcut_fidelity {
            out.push(format!("channel {c}: fidelity {:.6} < {}", run.fidelities[c], th.shortcut_fidelity));
        }
    }
    let ground = &run.results[0];
    if let Some(limit) = th.max_ground_leakage {
        let leak = 1.0 - ground.min_population(0);
        if leak >= limit {
            out.push(format!("ground channel leakage {leak:.4e} >= {limit}"));
        }
    }
    if let Some(limit) = th.max_level2_population {
        if ground.populations.first().is_some_and(|p| p.len() > 2) {
            let p2 = ground.max_population(2);
            if p2 >= limit {
                out.push(format!("ground channel max P2 {p2:.4e} >= {limit}"));
            }
        }
    }
    for (c, r) in run.results.iter().enumerate() {
        let tf = r.times[r.times.len() - 1] - r.times[0];
        if !(r.aa_min_time < tf) {
            out.push(format!("channel {c}: tf {tf} does not exceed the AA bound {:.4e}", r.aa_min_time));
        }
    }
    out
}
