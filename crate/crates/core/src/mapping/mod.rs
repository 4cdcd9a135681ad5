//! Mapping of ideal two-level controls onto trap parameters `(V0, omega)`
//! by per-sample minimization of
//! `F = (delta_id - delta)^2 + (lambda_id - lambda)^2`.

pub mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::model2l::{ControlCurve, TwoLevelControls};
use crate::spectral::{Extractor, PotentialParams, SpatialGrid};
use crate::units::{hz, hz_energy, HBAR, RB87_MASS};
pub use simplex::{golden_section, nelder_mead, SimplexResult};

/// Controls the simplex sees are `V0 / (hbar omega_ref)` and `omega / omega_ref`.
const INITIAL_STEP: [f64; 2] = [0.02, 0.01];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MappingConfig {
    pub grid: SpatialGrid,
    pub mass: f64,
    /// Lattice constant (m).
    pub d_l: f64,
    /// Lattice displacement (m).
    pub dx_shift: f64,
    /// Upper bound on the lattice depth (J).
    pub v0_max: f64,
    /// Allowed trap angular frequencies (rad/s).
    pub omega_bounds: (f64, f64),
    /// Acceptance threshold on F (rad^2/s^2).
    pub cost_tol: f64,
    /// Evaluation budget per sample.
    pub max_evals: usize,
    /// Map every `stride`-th sample and interpolate the rest; 1 maps all.
    pub stride: usize,
}

impl MappingConfig {
    /// Defaults for a trap starting at `omega0`: V0 up to `h * 800 Hz`,
    /// omega between 5 and 300 Hz, and `cost_tol = (1e-3 omega0)^2`.
    pub fn new(omega0: f64, d_l: f64, dx_shift: f64) -> Self {
        Self {
            grid: SpatialGrid::default(),
            mass: RB87_MASS,
            d_l,
            dx_shift,
            v0_max: hz_energy(800.0),
            omega_bounds: (hz(5.0), hz(300.0)),
            cost_tol: (1e-3 * omega0).powi(2),
            max_evals: 600,
            stride: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let (lo, hi) = self.omega_bounds;
        if !(self.v0_max > 0.0 && self.v0_max.is_finite()) {
            return Err(Error::InvalidParams("v0_max must be positive".into()));
        }
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::InvalidParams(format!("omega bounds ({lo}, {hi}) must be ordered and positive")));
        }
        if !(self.cost_tol > 0.0) {
            return Err(Error::InvalidParams("cost_tol must be positive".into()));
        }
        if self.max_evals < 3 || self.stride == 0 {
            return Err(Error::InvalidParams("max_evals must be >= 3 and stride >= 1".into()));
        }
        if !(self.mass > 0.0 && self.d_l > 0.0 && self.dx_shift.is_finite()) {
            return Err(Error::InvalidParams("mass, d_l and dx_shift must be physical".into()));
        }
        Ok(())
    }

    fn extractor(&self) -> Result<Extractor> {
        Extractor::new(self.grid, self.mass, self.d_l, self.dx_shift)
    }
}

/// Parameters held fixed along a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFixed {
    pub mass: f64,
    pub d_l: f64,
    pub dx_shift: f64,
    pub grid: SpatialGrid,
}

/// Time-sampled trap parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalSchedule {
    pub times: Vec<f64>,
    /// Lattice depth per sample (J).
    pub v0: Vec<f64>,
    /// Trap angular frequency per sample (rad/s).
    pub omega: Vec<f64>,
    /// F at the accepted point (rad^2/s^2).
    pub residuals: Vec<f64>,
    pub saturated: Vec<bool>,
    pub fixed: ScheduleFixed,
    /// Per-sample lattice displacement, overriding `fixed.dx_shift`.
    pub dx_ramp: Option<Vec<f64>>,
}

impl PhysicalSchedule {
    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if n < 2
            || self.v0.len() != n
            || self.omega.len() != n
            || self.residuals.len() != n
            || self.saturated.len() != n
            || self.dx_ramp.as_ref().is_some_and(|d| d.len() != n)
        {
            return Err(Error::InvalidParams("schedule columns must share a length >= 2".into()));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams("schedule times must increase strictly".into()));
        }
        if self.v0.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) || self.omega.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParams("schedule V0 and omega must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn tf(&self) -> f64 {
        self.times[self.times.len() - 1] - self.times[0]
    }

    pub fn dx_at(&self, i: usize) -> f64 {
        self.dx_ramp.as_ref().map_or(self.fixed.dx_shift, |d| d[i])
    }

    pub fn params_at(&self, i: usize) -> PotentialParams {
        PotentialParams {
            mass: self.fixed.mass,
            omega: self.omega[i],
            v0: self.v0[i],
            dx_shift: self.dx_at(i),
            d_l: self.fixed.d_l,
        }
    }

    pub fn first_params(&self) -> PotentialParams {
        self.params_at(0)
    }

    pub fn last_params(&self) -> PotentialParams {
        self.params_at(self.len() - 1)
    }

    /// Same times, parameter sequences played backwards.
    pub fn reversed(&self) -> Self {
        let rev = |v: &Vec<f64>| v.iter().rev().copied().collect::<Vec<_>>();
        Self {
            times: self.times.clone(),
            v0: rev(&self.v0),
            omega: rev(&self.omega),
            residuals: rev(&self.residuals),
            saturated: self.saturated.iter().rev().copied().collect(),
            fixed: self.fixed,
            dx_ramp: self.dx_ramp.as_ref().map(rev),
        }
    }

    /// Copy with the lattice displacement negated.
    pub fn mirrored_shift(&self) -> Self {
        let mut s = self.clone();
        s.fixed.dx_shift = -s.fixed.dx_shift;
        if let Some(d) = s.dx_ramp.as_mut() {
            d.iter_mut().for_each(|v| *v = -*v);
        }
        s
    }

    /// Largest ratio between a step in V0 or omega and the larger of the
    /// steps two places before and after it. An optimizer jump between
    /// basins shows up as one or two steps far above their surroundings.
    pub fn smoothness_ratio(&self) -> f64 {
        fn worst(v: &[f64]) -> f64 {
            let steps: Vec<f64> = v.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
            let range = v.iter().copied().fold(f64::NEG_INFINITY, f64::max) - v.iter().copied().fold(f64::INFINITY, f64::min);
            let floor = 1e-4 * range / steps.len().max(1) as f64 + f64::MIN_POSITIVE;
            let mut out: f64 = 0.0;
            for i in 0..steps.len() {
                let left = if i > 1 { steps[i - 2] } else { 0.0 };
                let right = if i + 2 < steps.len() { steps[i + 2] } else { 0.0 };
                out = out.max(steps[i] / left.max(right).max(floor));
            }
            out
        }
        worst(&self.v0).max(worst(&self.omega))
    }

    /// Continuous-time interpolant of the schedule.
    pub fn interpolant(&self) -> Result<ScheduleInterp> {
        Ok(ScheduleInterp {
            t0: self.times[0],
            v0: MonotoneCubic::new(self.times.clone(), self.v0.clone())?,
            omega: MonotoneCubic::new(self.times.clone(), self.omega.clone())?,
            dx: match &self.dx_ramp {
                Some(d) => DxInterp::Ramp(MonotoneCubic::new(self.times.clone(), d.clone())?),
                None => DxInterp::Fixed(self.fixed.dx_shift),
            },
            tf: *self.times.last().unwrap(),
        })
    }
}

#[derive(Debug, Clone)]
enum DxInterp {
    Fixed(f64),
    Ramp(MonotoneCubic),
}

/// Monotone-cubic interpolation of `(V0, omega, dx)` in time.
#[derive(Debug, Clone)]
pub struct ScheduleInterp {
    v0: MonotoneCubic,
    omega: MonotoneCubic,
    dx: DxInterp,
    t0: f64,
    tf: f64,
}

impl ScheduleInterp {
    /// `(V0, omega, dx)` at time `t`, clamped to the schedule's span.
    pub fn at(&self, t: f64) -> (f64, f64, f64) {
        let t = t.clamp(self.t0, self.tf);
        let dx = match &self.dx {
            DxInterp::Fixed(d) => *d,
            DxInterp::Ramp(c) => c.eval(t),
        };
        (self.v0.eval(t).max(0.0), self.omega.eval(t).max(0.0), dx)
    }
}

/// Squared distance between achieved and ideal controls.
pub fn cost_from(c: TwoLevelControls, target: TwoLevelControls) -> f64 {
    (target.delta - c.delta).powi(2) + (target.lambda - c.lambda).powi(2)
}

/// F at `(v0, omega)` for the given target.
pub fn cost_f(v0: f64, omega: f64, target: TwoLevelControls, cfg: &MappingConfig) -> Result<f64> {
    cfg.validate()?;
    let mut ex = cfg.extractor()?;
    Ok(cost_from(ex.extract(omega, v0)?, target))
}

/// Summary numbers of a mapping run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MappingStats {
    pub evaluations: usize,
    pub optimized_samples: usize,
    pub interpolated_samples: usize,
    pub remapped_samples: usize,
    pub saturated_samples: usize,
    pub max_residual: f64,
}

struct Mapper<'a> {
    cfg: &'a MappingConfig,
    ex: Extractor,
    v_scale: f64,
    w_scale: f64,
    evals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Point {
    v0: f64,
    omega: f64,
    residual: f64,
    saturated: bool,
}

impl<'a> Mapper<'a> {
    fn new(cfg: &'a MappingConfig, omega_ref: f64) -> Result<Self> {
        Ok(Self { cfg, ex: cfg.extractor()?, v_scale: HBAR * omega_ref, w_scale: omega_ref, evals: 0 })
    }

    fn in_bounds(&self, v0: f64, omega: f64) -> bool {
        (0.0..=self.cfg.v0_max).contains(&v0) && omega >= self.cfg.omega_bounds.0 && omega <= self.cfg.omega_bounds.1
    }

    fn cost(&mut self, v0: f64, omega: f64, target: TwoLevelControls) -> f64 {
        if !self.in_bounds(v0, omega) {
            return f64::INFINITY;
        }
        self.evals += 1;
        match self.ex.extract(omega, v0) {
            Ok(c) => cost_from(c, target),
            Err(_) => f64::INFINITY,
        }
    }

    fn clamp(&self, v0: f64, omega: f64) -> (f64, f64) {
        (v0.clamp(0.0, self.cfg.v0_max), omega.clamp(self.cfg.omega_bounds.0, self.cfg.omega_bounds.1))
    }

    /// Simplex search from `start`, oriented so the first trial vertices
    /// stay inside the box.
    fn optimize(&mut self, target: TwoLevelControls, start: (f64, f64)) -> SimplexResult {
        let (v0, omega) = self.clamp(start.0, start.1);
        let x0 = [v0 / self.v_scale, omega / self.w_scale];
        let vmax = self.cfg.v0_max / self.v_scale;
        let wmax = self.cfg.omega_bounds.1 / self.w_scale;
        let step0 = if x0[0] + INITIAL_STEP[0] > vmax { -INITIAL_STEP[0] } else { INITIAL_STEP[0] };
        let step1 = if x0[1] + INITIAL_STEP[1] > wmax { -INITIAL_STEP[1] } else { INITIAL_STEP[1] };
        let tol = self.cfg.cost_tol * 1e-6;
        let (vs, ws) = (self.v_scale, self.w_scale);
        let max_evals = self.cfg.max_evals;
        nelder_mead(|x| self.cost(x[0] * vs, x[1] * ws, target), x0, [step0, step1], tol, max_evals)
    }

    /// Best omega with V0 pinned at its bound.
    fn saturated_point(&mut self, target: TwoLevelControls, omega_hint: f64) -> Point {
        let v0 = self.cfg.v0_max;
        let (lo, hi) = self.cfg.omega_bounds;
        // Bracket around the hint first; fall back to the full range.
        let a = (omega_hint * 0.7).max(lo);
        let b = (omega_hint * 1.3).min(hi);
        let (mut w, mut f, _) = golden_section(|w| self.cost(v0, w, target), a, b, 1e-10, 200);
        if !f.is_finite() || (w - a).abs() < 1e-6 * w || (b - w).abs() < 1e-6 * w {
            let (w2, f2, _) = golden_section(|w| self.cost(v0, w, target), lo, hi, 1e-10, 300);
            if f2 < f {
                w = w2;
                f = f2;
            }
        }
        Point { v0, omega: w, residual: f, saturated: true }
    }

    /// Maps one sample; `start` is the warm-start guess.
    fn map_sample(&mut self, index: usize, t: f64, target: TwoLevelControls, start: (f64, f64), fallback: Option<(f64, f64)>) -> Result<Point> {
        let mut best = self.optimize(target, start);
        if best.value > self.cfg.cost_tol {
            if let Some(fb) = fallback {
                let alt = self.optimize(target, fb);
                if alt.value < best.value {
                    best = alt;
                }
            }
        }
        // Restarting from the best vertex escapes premature collapse.
        for _ in 0..3 {
            if best.value <= self.cfg.cost_tol {
                break;
            }
            let restart = self.optimize(target, (best.argmin[0] * self.v_scale, best.argmin[1] * self.w_scale));
            if restart.value >= best.value {
                break;
            }
            best = restart;
        }
        let point = Point {
            v0: best.argmin[0] * self.v_scale,
            omega: best.argmin[1] * self.w_scale,
            residual: best.value,
            saturated: false,
        };
        if point.residual <= self.cfg.cost_tol {
            return Ok(point);
        }
        let sat = self.saturated_point(target, point.omega);
        if self.accepts_saturation(&sat, target) {
            return Ok(sat);
        }
        Err(Error::UnmappableSample { index, t, residual: point.residual.min(sat.residual) })
    }

    /// A saturated sample sits at the V0 bound, has tunneling below
    /// `1e-3 omega_ref` and still matches the bias to that tolerance.
    fn accepts_saturation(&mut self, p: &Point, target: TwoLevelControls) -> bool {
        let tol = self.cfg.cost_tol.sqrt();
        if p.v0 < self.cfg.v0_max {
            return false;
        }
        match self.ex.extract(p.omega, p.v0) {
            Ok(c) => c.delta.abs() < tol && (c.lambda - target.lambda).abs() <= tol,
            Err(_) => false,
        }
    }

    /// Checks an interpolated point, accepting saturation at the bound.
    fn check(&mut self, v0: f64, omega: f64, target: TwoLevelControls) -> Option<Point> {
        let f = self.cost(v0, omega, target);
        if f <= self.cfg.cost_tol {
            return Some(Point { v0, omega, residual: f, saturated: false });
        }
        let p = Point { v0, omega, residual: f, saturated: true };
        if self.accepts_saturation(&p, target) {
            Some(p)
        } else {
            None
        }
    }
}

/// Maps every sample of `curve` onto `(V0, omega)`.
///
/// Sample 0 is fixed at the bare harmonic trap `(0, delta(0))`. Later
/// samples start from a linear extrapolation of the previous two optima.
/// With `stride > 1` only every `stride`-th sample (and the last) is
/// optimized; the others are interpolated and then verified one by one,
/// with a full optimization for any that miss the tolerance.
pub fn map_schedule(curve: &ControlCurve, cfg: &MappingConfig) -> Result<(PhysicalSchedule, MappingStats)> {
    cfg.validate()?;
    let n = curve.len();
    let omega0 = curve.delta[0];
    if !(omega0 > 0.0) || curve.lambda[0].abs() > 1e-9 * omega0 {
        return Err(Error::InvalidParams("curve must start at a harmonic trap (delta > 0, lambda = 0)".into()));
    }
    let mut m = Mapper::new(cfg, omega0)?;
    let mut stats = MappingStats::default();

    let nodes: Vec<usize> = {
        let mut v: Vec<usize> = (0..n).step_by(cfg.stride).collect();
        if *v.last().unwrap() != n - 1 {
            v.push(n - 1);
        }
        v
    };
    let mut points: Vec<Option<Point>> = vec![None; n];
    let seed_res = m.cost(0.0, omega0, curve.controls(0));
    points[0] = Some(Point { v0: 0.0, omega: omega0, residual: seed_res, saturated: false });
    stats.optimized_samples += 1;

    let mut hist: Vec<(f64, f64, f64)> = vec![(curve.times[0], 0.0, omega0)];
    for &i in nodes.iter().skip(1) {
        let t = curve.times[i];
        let (tp, vp, wp) = hist[hist.len() - 1];
        let guess = if hist.len() >= 2 {
            let (tq, vq, wq) = hist[hist.len() - 2];
            let s = (t - tp) / (tp - tq);
            (vp + s * (vp - vq), wp + s * (wp - wq))
        } else {
            (vp, wp)
        };
        let p = m.map_sample(i, t, curve.controls(i), guess, Some((vp, wp)))?;
        log::debug!("sample {i}: V0 = {:.4e} J, omega = {:.4} rad/s, F = {:.3e}", p.v0, p.omega, p.residual);
        hist.push((t, p.v0, p.omega));
        points[i] = Some(p);
        stats.optimized_samples += 1;
    }

    if nodes.len() < n {
        let ts: Vec<f64> = nodes.iter().map(|&i| curve.times[i]).collect();
        let vs = MonotoneCubic::new(ts.clone(), nodes.iter().map(|&i| points[i].unwrap().v0).collect())?;
        let ws = MonotoneCubic::new(ts, nodes.iter().map(|&i| points[i].unwrap().omega).collect())?;
        for i in 0..n {
            if points[i].is_some() {
                continue;
            }
            let t = curve.times[i];
            let (v, w) = m.clamp(vs.eval(t), ws.eval(t));
            let target = curve.controls(i);
            let p = match m.check(v, w, target) {
                Some(p) => {
                    stats.interpolated_samples += 1;
                    p
                }
                None => {
                    let prev = points[i - 1].unwrap();
                    stats.remapped_samples += 1;
                    m.map_sample(i, t, target, (v, w), Some((prev.v0, prev.omega)))?
                }
            };
            points[i] = Some(p);
        }
    }

    let points: Vec<Point> = points.into_iter().map(|p| p.unwrap()).collect();
    stats.evaluations = m.evals;
    stats.saturated_samples = points.iter().filter(|p| p.saturated).count();
    stats.max_residual = points.iter().filter(|p| !p.saturated).map(|p| p.residual).fold(0.0, f64::max);
    let schedule = PhysicalSchedule {
        times: curve.times.clone(),
        v0: points.iter().map(|p| p.v0).collect(),
        omega: points.iter().map(|p| p.omega).collect(),
        residuals: points.iter().map(|p| p.residual).collect(),
        saturated: points.iter().map(|p| p.saturated).collect(),
        fixed: ScheduleFixed { mass: cfg.mass, d_l: cfg.d_l, dx_shift: cfg.dx_shift, grid: cfg.grid },
        dx_ramp: None,
    };
    Ok((schedule, stats))
}

/// Controls realized by every sample of a schedule.
pub fn realized_controls(schedule: &PhysicalSchedule) -> Result<Vec<TwoLevelControls>> {
    let f = schedule.fixed;
    let mut ex = Extractor::new(f.grid, f.mass, f.d_l, f.dx_shift)?;
    (0..schedule.len())
        .map(|i| {
            if schedule.dx_ramp.is_some() {
                crate::spectral::extract_controls(&schedule.params_at(i), f.grid)
            } else {
                ex.extract(schedule.omega[i], schedule.v0[i])
            }
        })
        .collect()
}

/// Largest `|delta - delta_id|` and `|lambda - lambda_id|` over the
/// non-saturated samples, and the largest achieved `delta` over the
/// saturated ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundTrip {
    pub max_delta_error: f64,
    pub max_lambda_error: f64,
    pub max_saturated_delta: f64,
    pub checked_samples: usize,
}

pub fn round_trip(schedule: &PhysicalSchedule, curve: &ControlCurve) -> Result<RoundTrip> {
    if schedule.len() != curve.len() {
        return Err(Error::InvalidParams("schedule and curve sampling differ".into()));
    }
    let realized = realized_controls(schedule)?;
    let mut out = RoundTrip { max_delta_error: 0.0, max_lambda_error: 0.0, max_saturated_delta: 0.0, checked_samples: 0 };
    for (i, c) in realized.iter().enumerate() {
        if schedule.saturated[i] {
            out.max_saturated_delta = out.max_saturated_delta.max(c.delta.abs());
        } else {
            out.max_delta_error = out.max_delta_error.max((c.delta - curve.delta[i]).abs());
            out.max_lambda_error = out.max_lambda_error.max((c.lambda - curve.lambda[i]).abs());
            out.checked_samples += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model2l::CurveKind;

    fn cfg() -> MappingConfig {
        MappingConfig::new(hz(78.0), 5.18e-6, 100e-9)
    }

    #[test]
    fn harmonic_start_costs_nothing() {
        let w0 = hz(78.0);
        let c = cfg();
        let f = cost_f(0.0, w0, TwoLevelControls::new(w0, 0.0), &c).unwrap();
        // Only the finite-difference error of the level gap remains.
        assert!(f < 1e-10 * w0 * w0, "{f}");
    }

    #[test]
    fn cost_is_the_squared_offset() {
        let w0 = hz(78.0);
        let c = cfg();
        let base = cost_f(0.0, w0, TwoLevelControls::new(w0, 0.0), &c).unwrap();
        let shifted = cost_f(0.0, w0, TwoLevelControls::new(w0 + 2.0, 0.0), &c).unwrap();
        assert!((shifted - base - 4.0).abs() < 1e-2, "{shifted}");
    }

    #[test]
    fn reverse_is_an_involution() {
        let s = PhysicalSchedule {
            times: vec![0.0, 1.0, 2.0],
            v0: vec![0.0, 1.0, 3.0],
            omega: vec![5.0, 4.0, 2.0],
            residuals: vec![0.0; 3],
            saturated: vec![false, false, true],
            fixed: ScheduleFixed { mass: RB87_MASS, d_l: 5.18e-6, dx_shift: 1e-7, grid: SpatialGrid::default() },
            dx_ramp: None,
        };
        let r = s.reversed();
        assert_eq!(r.v0[0], s.v0[2]);
        assert_eq!(r.times, s.times);
        assert_eq!(r.reversed(), s);
    }

    #[test]
    fn smoothness_flags_isolated_jumps() {
        let mut s = PhysicalSchedule {
            times: (0..20).map(|i| i as f64).collect(),
            v0: (0..20).map(|i| i as f64).collect(),
            omega: vec![1.0; 20],
            residuals: vec![0.0; 20],
            saturated: vec![false; 20],
            fixed: ScheduleFixed { mass: RB87_MASS, d_l: 5.18e-6, dx_shift: 0.0, grid: SpatialGrid::default() },
            dx_ramp: None,
        };
        assert!(s.smoothness_ratio() < 1.5);
        s.v0[10] += 30.0;
        assert!(s.smoothness_ratio() > 10.0);
    }

    #[test]
    fn short_curve_maps_exactly() {
        let w0 = hz(78.0);
        let c = cfg();
        // Targets produced by known trap parameters are reachable.
        let mut ex = c.extractor().unwrap();
        let pts = [(0.0, w0), (hz_energy(20.0), 0.97 * w0), (hz_energy(45.0), 0.93 * w0)];
        let targets: Vec<TwoLevelControls> = pts.iter().map(|&(v, w)| ex.extract(w, v).unwrap()).collect();
        let curve = ControlCurve::new(
            vec![0.0, 0.01, 0.02],
            targets.iter().map(|t| t.delta).collect(),
            targets.iter().map(|t| t.lambda).collect(),
            CurveKind::InvariantDesigned,
        )
        .unwrap();
        let (s, stats) = map_schedule(&curve, &c).unwrap();
        assert!(s.residuals.iter().all(|r| *r <= c.cost_tol));
        assert_eq!(s.v0[0], 0.0);
        assert_eq!(s.omega[0], curve.delta[0]);
        assert_eq!(stats.saturated_samples, 0);
        let rt = round_trip(&s, &curve).unwrap();
        assert!(rt.max_delta_error < 1e-3 * w0 && rt.max_lambda_error < 1e-3 * w0);
    }
}
