//! Time-dependent Schrodinger propagation on the finite-difference grid.
//!
//! Steps are Crank-Nicolson with the potential evaluated at the middle of
//! each step, which keeps the propagator exactly unitary for the same
//! discrete Hamiltonian that `spectral` diagonalizes.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::{PhysicalSchedule, ScheduleFixed};
use crate::spectral::{Hamiltonian, PotentialParams, PotentialProfile, SpatialGrid};
use crate::tridiag::ComplexThomas;
use crate::units::{HBAR, PLANCK};

#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    pub grid: SpatialGrid,
    pub amplitudes: Vec<Complex64>,
}

impl WaveFunction {
    pub fn new(grid: SpatialGrid, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.n_points {
            return Err(Error::InvalidParams("wavefunction length differs from grid".into()));
        }
        let w = Self { grid, amplitudes };
        if (w.norm_sqr() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParams(format!("wavefunction norm^2 = {} differs from 1", w.norm_sqr())));
        }
        Ok(w)
    }

    /// Real grid function, normalized on the way in.
    pub fn from_real(grid: SpatialGrid, values: &[f64]) -> Result<Self> {
        let norm = grid.inner(values, values).sqrt();
        if !(norm > 0.0) || values.len() != grid.n_points {
            return Err(Error::InvalidParams("cannot normalize the given state".into()));
        }
        Self::new(grid, values.iter().map(|v| Complex64::new(v / norm, 0.0)).collect())
    }

    /// `h * sum |psi|^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.grid.spacing() * self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &WaveFunction) -> Complex64 {
        let s: Complex64 = self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum();
        s * self.grid.spacing()
    }

    /// `|<real|self>|^2` for a real grid-normalized state.
    pub fn population_in(&self, state: &[f64]) -> f64 {
        let s: Complex64 = state.iter().zip(&self.amplitudes).map(|(u, a)| a * *u).sum();
        (s * self.grid.spacing()).norm_sqr()
    }

    pub fn fidelity(&self, other: &WaveFunction) -> f64 {
        self.overlap(other).norm_sqr()
    }

    /// Probability on `x > x_split` (the point itself counts half).
    pub fn weight_right_of(&self, x_split: f64) -> f64 {
        let h = self.grid.spacing();
        let mut acc = 0.0;
        for (i, a) in self.amplitudes.iter().enumerate() {
            let x = self.grid.x(i);
            if x > x_split {
                acc += a.norm_sqr();
            } else if x == x_split {
                acc += 0.5 * a.norm_sqr();
            }
        }
        acc * h
    }

    /// `<x>` in metres.
    pub fn mean_position(&self) -> f64 {
        let h = self.grid.spacing();
        self.amplitudes.iter().enumerate().map(|(i, a)| self.grid.x(i) * a.norm_sqr()).sum::<f64>() * h
    }

    pub fn conj(&self) -> Self {
        Self { grid: self.grid, amplitudes: self.amplitudes.iter().map(|a| a.conj()).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsOptions {
    /// Nominal time step (s); the actual step divides the span evenly.
    pub dt: f64,
    /// Number of diagnostic times, endpoints included.
    pub diagnostic_samples: usize,
    /// Instantaneous levels tracked.
    pub levels: usize,
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        Self { dt: 2e-6, diagnostic_samples: 201, levels: 6 }
    }
}

impl DynamicsOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParams(format!("dt = {} must be positive", self.dt)));
        }
        if self.diagnostic_samples < 2 || self.levels == 0 {
            return Err(Error::InvalidParams("need >= 2 diagnostic samples and >= 1 level".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub times: Vec<f64>,
    /// `populations[j][n]`: weight of instantaneous level `n` at `times[j]`.
    pub populations: Vec<Vec<f64>>,
    pub final_state: WaveFunction,
    /// Named `|<target|psi(tf)>|^2`, filled in by callers.
    pub fidelities: BTreeMap<String, f64>,
    /// `<H>` at each diagnostic time (J).
    pub energy_mean: Vec<f64>,
    /// Energy standard deviation at each diagnostic time (J).
    pub energy_std: Vec<f64>,
    pub aa_min_time: f64,
    /// Largest `|norm^2 - 1|` seen at diagnostic times.
    pub norm_drift: f64,
    pub steps: usize,
    pub dt: f64,
}

impl PropagationResult {
    pub fn max_population(&self, level: usize) -> f64 {
        self.populations.iter().map(|p| p[level]).fold(0.0, f64::max)
    }

    pub fn min_population(&self, level: usize) -> f64 {
        self.populations.iter().map(|p| p[level]).fold(f64::INFINITY, f64::min)
    }

    pub fn min_total_population(&self) -> f64 {
        self.populations.iter().map(|p| p.iter().sum::<f64>()).fold(f64::INFINITY, f64::min)
    }
}

/// Crank-Nicolson stepper for one grid and mass.
pub struct CrankNicolson {
    profile: PotentialProfile,
    potential: Vec<f64>,
    diag: Vec<Complex64>,
    rhs: Vec<Complex64>,
    thomas: ComplexThomas,
}

impl CrankNicolson {
    pub fn new(fixed: &ScheduleFixed) -> Result<Self> {
        Ok(Self {
            profile: PotentialProfile::new(fixed.grid, fixed.mass, fixed.d_l)?,
            potential: Vec::new(),
            diag: Vec::new(),
            rhs: Vec::new(),
            thomas: ComplexThomas::default(),
        })
    }

    /// Advances `psi` by `dt` (either sign) under constant `(V0, omega, dx)`.
    pub fn step(&mut self, psi: &mut [Complex64], dt: f64, v0: f64, omega: f64, dx: f64) {
        let n = psi.len();
        self.profile.potential_over_hbar(omega, v0, dx, &mut self.potential);
        let k = self.profile.kinetic;
        let a = 0.5 * dt;
        let off = Complex64::new(0.0, -a * k);
        self.diag.resize(n, Complex64::new(0.0, 0.0));
        self.rhs.resize(n, Complex64::new(0.0, 0.0));
        for i in 0..n {
            let d = 2.0 * k + self.potential[i];
            self.diag[i] = Complex64::new(1.0, a * d);
            let mut nb = Complex64::new(0.0, 0.0);
            if i > 0 {
                nb += psi[i - 1];
            }
            if i + 1 < n {
                nb += psi[i + 1];
            }
            // (1 - i a H) psi with H = d on the diagonal and -k off it.
            self.rhs[i] = Complex64::new(1.0, -a * d) * psi[i] + Complex64::new(0.0, a * k) * nb;
        }
        self.thomas.solve(&self.diag, off, &mut self.rhs);
        psi.copy_from_slice(&self.rhs);
    }
}

/// `(<H>, std H)` in joules for the Hamiltonian `h`.
pub fn energy_moments(psi: &WaveFunction, h: &Hamiltonian) -> (f64, f64) {
    let n = psi.amplitudes.len();
    let (mut mean, mut sq) = (0.0, 0.0);
    for i in 0..n {
        let mut hp = psi.amplitudes[i] * h.diag[i];
        if i > 0 {
            hp += psi.amplitudes[i - 1] * h.off;
        }
        if i + 1 < n {
            hp += psi.amplitudes[i + 1] * h.off;
        }
        mean += (psi.amplitudes[i].conj() * hp).re;
        sq += hp.norm_sqr();
    }
    let hs = psi.grid.spacing();
    let (mean, sq) = (mean * hs, sq * hs);
    let var = (sq - mean * mean).max(0.0);
    (mean * HBAR, var.sqrt() * HBAR)
}

/// Populations of the lowest `k` instantaneous levels of `p`.
pub fn instantaneous_populations(psi: &WaveFunction, p: &PotentialParams, k: usize) -> Result<Vec<f64>> {
    let h = Hamiltonian::new(p, psi.grid)?;
    let (_, states) = h.lowest(k)?;
    Ok(states.iter().map(|s| psi.population_in(s)).collect())
}

/// `h / (4 mean(dE))` with a trapezoid time average. Infinite when the
/// energy spread vanishes.
pub fn aa_bound(times: &[f64], energy_std: &[f64]) -> f64 {
    if times.len() < 2 {
        return f64::INFINITY;
    }
    let span = times[times.len() - 1] - times[0];
    let integral: f64 = times
        .windows(2)
        .zip(energy_std.windows(2))
        .map(|(t, e)| 0.5 * (t[1] - t[0]) * (e[0] + e[1]))
        .sum();
    let mean = integral / span;
    if mean > 0.0 {
        PLANCK / (4.0 * mean)
    } else {
        f64::INFINITY
    }
}

/// Step count: the smallest multiple of the diagnostic intervals whose
/// step does not exceed `dt`.
fn step_count(span: f64, dt: f64, intervals: usize) -> usize {
    let raw = (span / dt).ceil().max(1.0) as usize;
    raw.div_ceil(intervals) * intervals
}

/// Propagates `psi0` over the whole schedule.
pub fn propagate(schedule: &PhysicalSchedule, psi0: &WaveFunction, opts: &DynamicsOptions) -> Result<PropagationResult> {
    run(schedule, psi0, opts, false)
}

/// Propagates `psi0` from the end of the schedule back to its start with
/// negative steps; the inverse of [`propagate`] up to round-off.
pub fn propagate_backward(schedule: &PhysicalSchedule, psi0: &WaveFunction, opts: &DynamicsOptions) -> Result<PropagationResult> {
    run(schedule, psi0, opts, true)
}

fn run(schedule: &PhysicalSchedule, psi0: &WaveFunction, opts: &DynamicsOptions, backward: bool) -> Result<PropagationResult> {
    opts.validate()?;
    schedule.validate()?;
    if psi0.grid != schedule.fixed.grid {
        return Err(Error::InvalidParams("initial state and schedule use different grids".into()));
    }
    let interp = schedule.interpolant()?;
    let t_start = schedule.times[0];
    let span = schedule.tf();
    let intervals = opts.diagnostic_samples - 1;
    let steps = step_count(span, opts.dt, intervals);
    let per_diag = steps / intervals;
    let dt = span / steps as f64;
    let mut cn = CrankNicolson::new(&schedule.fixed)?;
    let fixed = schedule.fixed;

    let time_at = |j: usize| {
        // Step index j counted along the direction of travel.
        let s = j as f64 / steps as f64;
        if backward {
            t_start + span * (1.0 - s)
        } else {
            t_start + span * s
        }
    };
    let mut psi = psi0.clone();
    let mut out = Diagnostics::default();
    let record = |psi: &WaveFunction, t: f64, out: &mut Diagnostics| -> Result<()> {
        let (v0, omega, dx) = interp.at(t);
        let p = PotentialParams { mass: fixed.mass, omega, v0, dx_shift: dx, d_l: fixed.d_l };
        let h = Hamiltonian::new(&p, fixed.grid)?;
        let (_, states) = h.lowest(opts.levels)?;
        out.times.push(t);
        out.populations.push(states.iter().map(|s| psi.population_in(s)).collect());
        let (mean, std) = energy_moments(psi, &h);
        out.energy_mean.push(mean);
        out.energy_std.push(std);
        out.norm_drift = out.norm_drift.max((psi.norm_sqr() - 1.0).abs());
        Ok(())
    };
    record(&psi, time_at(0), &mut out)?;
    let signed_dt = if backward { -dt } else { dt };
    for j in 0..steps {
        let t_mid = 0.5 * (time_at(j) + time_at(j + 1));
        let (v0, omega, dx) = interp.at(t_mid);
        cn.step(&mut psi.amplitudes, signed_dt, v0, omega, dx);
        if (j + 1) % per_diag == 0 {
            record(&psi, time_at(j + 1), &mut out)?;
        }
    }
    if backward {
        out.reverse();
    }
    let aa = aa_bound(&out.times, &out.energy_std);
    Ok(PropagationResult {
        times: out.times,
        populations: out.populations,
        final_state: psi,
        fidelities: BTreeMap::new(),
        energy_mean: out.energy_mean,
        energy_std: out.energy_std,
        aa_min_time: aa,
        norm_drift: out.norm_drift,
        steps,
        dt,
    })
}

#[derive(Default)]
struct Diagnostics {
    times: Vec<f64>,
    populations: Vec<Vec<f64>>,
    energy_mean: Vec<f64>,
    energy_std: Vec<f64>,
    norm_drift: f64,
}

impl Diagnostics {
    fn reverse(&mut self) {
        self.times.reverse();
        self.populations.reverse();
        self.energy_mean.reverse();
        self.energy_std.reverse();
    }
}

/// Outcome of the step-halving check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// Steps tried, coarsest first.
    pub dts: Vec<f64>,
    /// Target fidelity at each step.
    pub fidelities: Vec<f64>,
    /// Accepted step.
    pub dt: f64,
    /// Fidelity change between the accepted step and its half.
    pub change: f64,
}

/// Halves the step until the fidelity with `target` changes by less than
/// `tol` between successive runs. Fails once the step would drop below
/// `dt_min`. Returns the finer of the last two runs.
pub fn propagate_verified(
    schedule: &PhysicalSchedule,
    psi0: &WaveFunction,
    opts: &DynamicsOptions,
    target: &WaveFunction,
    tol: f64,
    dt_min: f64,
) -> Result<(PropagationResult, ConvergenceReport)> {
    let mut o = *opts;
    let mut prev = propagate(schedule, psi0, &o)?;
    let mut report = ConvergenceReport {
        dts: vec![prev.dt],
        fidelities: vec![target.fidelity(&prev.final_state)],
        dt: prev.dt,
        change: f64::INFINITY,
    };
    loop {
        o.dt = 0.5 * prev.dt;
        if o.dt < dt_min {
            return Err(Error::NotConverged { dt: prev.dt, change: report.change });
        }
        let next = propagate(schedule, psi0, &o)?;
        let f = target.fidelity(&next.final_state);
        let change = (f - report.fidelities[report.fidelities.len() - 1]).abs();
        report.dts.push(next.dt);
        report.fidelities.push(f);
        report.change = change;
        report.dt = next.dt;
        if change < tol {
            return Ok((next, report));
        }
        prev = next;
    }
}

/// Final-state differences between successive step halvings and the
/// fitted log-log slope. `dts` come out in the order run.
pub fn convergence_order(
    schedule: &PhysicalSchedule,
    psi0: &WaveFunction,
    opts: &DynamicsOptions,
    halvings: usize,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let mut o = DynamicsOptions { diagnostic_samples: 2, levels: 1, ..*opts };
    let mut finals = Vec::new();
    let mut dts = Vec::new();
    for _ in 0..=halvings {
        let r = propagate(schedule, psi0, &o)?;
        dts.push(r.dt);
        finals.push(r.final_state);
        o.dt = 0.5 * r.dt;
    }
    let errors: Vec<f64> = finals
        .windows(2)
        .map(|w| {
            let h = w[0].grid.spacing();
            (w[0].amplitudes.iter().zip(&w[1].amplitudes).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() * h).sqrt()
        })
        .collect();
    let xs: Vec<f64> = dts[..errors.len()].iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok((dts, errors, num / den))
}

/// `V0(t) = v0_final t / tf` at constant `omega`.
pub fn linear_ramp_schedule(v0_final: f64, omega_const: f64, tf: f64, n: usize, fixed: ScheduleFixed) -> Result<PhysicalSchedule> {
    if !(tf > 0.0) || n < 2 || !(v0_final >= 0.0) || !(omega_const >= 0.0) {
        return Err(Error::InvalidParams("linear ramp needs tf > 0, n >= 2 and non-negative levels".into()));
    }
    let times = crate::model2l::uniform_times(tf, n);
    let v0 = times.iter().map(|t| v0_final * t / tf).collect();
    Ok(PhysicalSchedule {
        times,
        v0,
        omega: vec![omega_const; n],
        residuals: vec![0.0; n],
        saturated: vec![false; n],
        fixed,
        dx_ramp: None,
    })
}

/// Constant trap held for `tf`.
pub fn static_schedule(p: &PotentialParams, grid: SpatialGrid, tf: f64) -> Result<PhysicalSchedule> {
    let fixed = ScheduleFixed { mass: p.mass, d_l: p.d_l, dx_shift: p.dx_shift, grid };
    let mut s = linear_ramp_schedule(p.v0, p.omega, tf, 2, fixed)?;
    s.v0 = vec![p.v0; 2];
    Ok(s)
}
