//! Coordinate-space trap: harmonic confinement plus an optical lattice,
//! its finite-difference spectrum, and the effective two-level controls.
//!
//! Internally the Hamiltonian is stored divided by `hbar`, so matrix
//! elements come out directly in rad/s.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model2l::TwoLevelControls;
use crate::tridiag::{parity_blocks, parity_blocks_from_half, unfold_half, SymTridiag};
use crate::units::HBAR;

/// Relative boundary amplitude above which a grid is considered too narrow.
pub const BOUNDARY_TOLERANCE: f64 = 1e-8;

/// Uniform grid on `[x_min, x_max]`, both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl Default for SpatialGrid {
    /// `[-16 um, 16 um]` with 10240 points (spacing about 3.1 nm).
    fn default() -> Self {
        Self { x_min: -16e-6, x_max: 16e-6, n_points: 10240 }
    }
}

impl SpatialGrid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        let g = Self { x_min, x_max, n_points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_min < self.x_max) {
            return Err(Error::InvalidParams(format!(
                "grid bounds [{}, {}] must be finite and ordered",
                self.x_min, self.x_max
            )));
        }
        if self.n_points < 64 {
            return Err(Error::InvalidParams(format!("grid needs >= 64 points, got {}", self.n_points)));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    fn center(&self) -> f64 {
        0.5 * (self.x_min + self.x_max)
    }

    /// Grid coordinate of point `i`. Points are placed symmetrically about
    /// the center so that mirror images are exact negatives.
    pub fn x(&self, i: usize) -> f64 {
        self.center() + (i as f64 - 0.5 * (self.n_points - 1) as f64) * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Even point count centered on `x = 0`, which allows parity reduction.
    pub fn is_mirror_symmetric(&self) -> bool {
        self.n_points % 2 == 0 && self.center() == 0.0
    }

    /// `h * sum(u v)`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.spacing() * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Physical trap parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams {
    /// Atomic mass (kg).
    pub mass: f64,
    /// Harmonic angular frequency (rad/s).
    pub omega: f64,
    /// Lattice depth (J).
    pub v0: f64,
    /// Lattice displacement (m).
    pub dx_shift: f64,
    /// Lattice constant (m).
    pub d_l: f64,
}

impl PotentialParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.mass > 0.0
            && self.omega >= 0.0
            && self.v0 >= 0.0
            && self.d_l > 0.0
            && [self.mass, self.omega, self.v0, self.dx_shift, self.d_l].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("invalid potential parameters {self:?}")))
        }
    }

    pub fn symmetric(&self) -> Self {
        Self { dx_shift: 0.0, ..*self }
    }
}

/// `V(x) = m omega^2 x^2 / 2 + V0 cos^2(pi (x - dx) / d_l)` in joules.
pub fn potential(x: f64, p: &PotentialParams) -> f64 {
    let c = (PI * (x - p.dx_shift) / p.d_l).cos();
    0.5 * p.mass * p.omega * p.omega * x * x + p.v0 * c * c
}

/// Cached potential ingredients on a grid, for repeated evaluation at
/// varying `(V0, omega, dx)` with fixed mass and lattice constant.
#[derive(Debug, Clone)]
pub struct PotentialProfile {
    pub grid: SpatialGrid,
    pub mass: f64,
    pub d_l: f64,
    x2: Vec<f64>,
    cos2k: Vec<f64>,
    sin2k: Vec<f64>,
    /// Kinetic coupling `hbar / (2 m h^2)` in rad/s.
    pub kinetic: f64,
}

impl PotentialProfile {
    pub fn new(grid: SpatialGrid, mass: f64, d_l: f64) -> Result<Self> {
        grid.validate()?;
        if !(mass > 0.0 && d_l > 0.0) {
            return Err(Error::InvalidParams("mass and lattice constant must be positive".into()));
        }
        let xs = grid.points();
        let k = 2.0 * PI / d_l;
        let h = grid.spacing();
        Ok(Self {
            grid,
            mass,
            d_l,
            x2: xs.iter().map(|x| x * x).collect(),
            cos2k: xs.iter().map(|x| (k * x).cos()).collect(),
            sin2k: xs.iter().map(|x| (k * x).sin()).collect(),
            kinetic: HBAR / (2.0 * mass * h * h),
        })
    }

    pub fn for_params(grid: SpatialGrid, p: &PotentialParams) -> Result<Self> {
        p.validate()?;
        Self::new(grid, p.mass, p.d_l)
    }

    /// `V(x_i) / hbar` in rad/s, written into `out`.
    ///
    /// Uses `cos^2(a) = (1 + cos 2a) / 2` and the addition theorem so only
    /// the displacement-dependent constants are recomputed.
    pub fn potential_over_hbar(&self, omega: f64, v0: f64, dx_shift: f64, out: &mut Vec<f64>) {
        let harm = 0.5 * self.mass * omega * omega / HBAR;
        let lat = 0.5 * v0 / HBAR;
        let phase = 2.0 * PI * dx_shift / self.d_l;
        let (sd, cd) = if dx_shift == 0.0 { (0.0, 1.0) } else { phase.sin_cos() };
        out.clear();
        out.extend((0..self.x2.len()).map(|i| {
            harm * self.x2[i] + lat * (1.0 + self.cos2k[i] * cd + self.sin2k[i] * sd)
        }));
    }

    pub fn hamiltonian(&self, omega: f64, v0: f64, dx_shift: f64) -> Hamiltonian {
        let mut v = Vec::with_capacity(self.x2.len());
        self.potential_over_hbar(omega, v0, dx_shift, &mut v);
        let two_k = 2.0 * self.kinetic;
        v.iter_mut().for_each(|d| *d += two_k);
        Hamiltonian { grid: self.grid, diag: v, off: -self.kinetic }
    }

    /// Right-half diagonal of the symmetric (`dx = 0`) Hamiltonian.
    fn symmetric_half_diag(&self, omega: f64, v0: f64) -> Vec<f64> {
        let n = self.x2.len();
        let harm = 0.5 * self.mass * omega * omega / HBAR;
        let lat = 0.5 * v0 / HBAR;
        let two_k = 2.0 * self.kinetic;
        (n / 2..n).map(|i| two_k + harm * self.x2[i] + lat * (1.0 + self.cos2k[i])).collect()
    }
}

/// Finite-difference Hamiltonian divided by `hbar` (rad/s), with Dirichlet
/// walls just outside the grid.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub grid: SpatialGrid,
    pub diag: Vec<f64>,
    pub off: f64,
}

impl Hamiltonian {
    pub fn new(p: &PotentialParams, grid: SpatialGrid) -> Result<Self> {
        Ok(PotentialProfile::for_params(grid, p)?.hamiltonian(p.omega, p.v0, p.dx_shift))
    }

    /// `out = (H / hbar) u`.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let n = self.diag.len();
        for i in 0..n {
            let mut acc = self.diag[i] * u[i];
            if i > 0 {
                acc += self.off * u[i - 1];
            }
            if i + 1 < n {
                acc += self.off * u[i + 1];
            }
            out[i] = acc;
        }
    }

    /// `<u|H|v> / hbar` under the grid inner product, in rad/s.
    pub fn matrix_element(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.diag.len();
        let mut acc = 0.0;
        for i in 0..n {
            let mut hv = self.diag[i] * v[i];
            if i > 0 {
                hv += self.off * v[i - 1];
            }
            if i + 1 < n {
                hv += self.off * v[i + 1];
            }
            acc += u[i] * hv;
        }
        acc * self.grid.spacing()
    }

    fn tridiag(&self) -> SymTridiag {
        SymTridiag {
            diag: self.diag.clone(),
            off: vec![self.off; self.diag.len() - 1],
        }
    }

    /// Lowest `k` eigenpairs with grid-normalized, sign-fixed states.
    /// Energies are in rad/s.
    pub fn lowest(&self, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let floor = self.diag.iter().copied().fold(f64::INFINITY, f64::min) - 2.0 * self.off.abs();
        let (vals, mut vecs) = match self.parity_split() {
            Some((even, odd)) => {
                // Levels of a symmetric 1D well alternate in parity.
                let n_even = k.div_ceil(2);
                let (ev, evec) = even.lowest_eigenpairs_above(n_even, Some(floor))?;
                let (ov, ovec) = if k > 1 {
                    odd.lowest_eigenpairs_above(k / 2, Some(floor))?
                } else {
                    (Vec::new(), Vec::new())
                };
                let mut vals = Vec::with_capacity(k);
                let mut vecs = Vec::with_capacity(k);
                for level in 0..k {
                    let (v, half, parity_odd) = if level % 2 == 0 {
                        (ev[level / 2], &evec[level / 2], false)
                    } else {
                        (ov[level / 2], &ovec[level / 2], true)
                    };
                    vals.push(v);
                    let mut full = unfold_half(half, parity_odd);
                    full.iter_mut().for_each(|a| *a *= std::f64::consts::FRAC_1_SQRT_2);
                    vecs.push(full);
                }
                (vals, vecs)
            }
            None => self.tridiag().lowest_eigenpairs_above(k, Some(floor))?,
        };
        if vals.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::NonConverged(format!("levels are not strictly increasing: {vals:?}")));
        }
        let scale = 1.0 / self.grid.spacing().sqrt();
        for (level, v) in vecs.iter_mut().enumerate() {
            v.iter_mut().for_each(|a| *a *= scale);
            fix_sign(v, level, &self.grid);
            check_boundary(v, level)?;
        }
        Ok((vals, vecs))
    }

    /// Parity blocks when both the grid and the diagonal are mirror
    /// symmetric.
    fn parity_split(&self) -> Option<(SymTridiag, SymTridiag)> {
        if !self.grid.is_mirror_symmetric() {
            return None;
        }
        parity_blocks(&self.diag, self.off)
    }
}

fn check_boundary(v: &[f64], level: usize) -> Result<()> {
    let peak = v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let edge = v[0].abs().max(v[v.len() - 1].abs());
    let ratio = edge / peak;
    if !(ratio < BOUNDARY_TOLERANCE) {
        return Err(Error::GridTooNarrow { level, ratio });
    }
    Ok(())
}

/// Phase convention for real eigenstates.
///
/// Level 0 has a positive integral. Level 1 has positive weight on the
/// right half-line, `sum sign(x) phi > 0`, which for the symmetric trap is
/// the odd state that is positive for `x > 0`. Higher levels make their
/// largest-magnitude sample positive.
pub fn fix_sign(v: &mut [f64], level: usize, grid: &SpatialGrid) {
    let s: f64 = match level {
        0 => v.iter().sum(),
        1 => v
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let x = grid.x(i);
                if x > 0.0 {
                    *a
                } else if x < 0.0 {
                    -*a
                } else {
                    0.0
                }
            })
            .sum(),
        _ => v.iter().copied().fold(0.0f64, |m, a| if a.abs() > m.abs() { a } else { m }),
    };
    if s < 0.0 {
        v.iter_mut().for_each(|a| *a = -*a);
    }
}

/// Flips states in `current` whose overlap with the same level in
/// `previous` is negative. Returns the number of flips.
pub fn align_signs(previous: &[Vec<f64>], current: &mut [Vec<f64>]) -> usize {
    let mut flips = 0;
    for (p, c) in previous.iter().zip(current.iter_mut()) {
        let d: f64 = p.iter().zip(c.iter()).map(|(a, b)| a * b).sum();
        if d < 0.0 {
            c.iter_mut().for_each(|a| *a = -*a);
            flips += 1;
        }
    }
    flips
}

/// Lowest eigenpairs of a trap.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    /// Energies (J), ascending.
    pub energies: Vec<f64>,
    /// Real states normalized with `h * sum(phi^2) = 1`.
    pub states: Vec<Vec<f64>>,
    pub grid: SpatialGrid,
}

pub fn solve_stationary(p: &PotentialParams, grid: SpatialGrid, k: usize) -> Result<EigenSolution> {
    let h = Hamiltonian::new(p, grid)?;
    let (vals, states) = h.lowest(k)?;
    Ok(EigenSolution {
        energies: vals.iter().map(|v| v * HBAR).collect(),
        states,
        grid,
    })
}

/// Ground and first excited states of the symmetric trap with their
/// energies in rad/s. Uses parity blocks when the grid allows it.
fn symmetric_doublet(
    profile: &PotentialProfile,
    omega: f64,
    v0: f64,
    mut cache: Option<&mut DoubletCache>,
) -> Result<([f64; 2], [Vec<f64>; 2])> {
    let grid = profile.grid;
    let (vals, mut states) = if grid.is_mirror_symmetric() {
        let half = profile.symmetric_half_diag(omega, v0);
        let floor = half.iter().copied().fold(f64::INFINITY, f64::min) - 2.0 * profile.kinetic;
        let (even, odd) = parity_blocks_from_half(half, -profile.kinetic);
        let lowest = |block: &SymTridiag, slot: Option<&mut Option<Vec<f64>>>| -> Result<(f64, Vec<f64>)> {
            if let Some(slot) = slot {
                let warm = slot.as_ref().and_then(|g| block.lowest_from_guess(g));
                let (v, x) = match warm {
                    Some(p) => p,
                    None => {
                        let (v, mut x) = block.lowest_eigenpairs_above(1, Some(floor))?;
                        (v[0], x.remove(0))
                    }
                };
                *slot = Some(x.clone());
                return Ok((v, x));
            }
            let (v, mut x) = block.lowest_eigenpairs_above(1, Some(floor))?;
            Ok((v[0], x.remove(0)))
        };
        let (ev, evec) = lowest(&even, cache.as_deref_mut().map(|c| &mut c.even))?;
        let (ov, ovec) = lowest(&odd, cache.as_deref_mut().map(|c| &mut c.odd))?;
        let g = unfold_half(&evec, false);
        let e = unfold_half(&ovec, true);
        ([ev, ov], [g, e])
    } else {
        let h = profile.hamiltonian(omega, v0, 0.0);
        let floor = h.diag.iter().copied().fold(f64::INFINITY, f64::min) - 2.0 * profile.kinetic;
        let (v, s) = h.tridiag().lowest_eigenpairs_above(2, Some(floor))?;
        let mut it = s.into_iter();
        ([v[0], v[1]], [it.next().unwrap(), it.next().unwrap()])
    };
    for (level, v) in states.iter_mut().enumerate() {
        let norm = grid.inner(v, v).sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        fix_sign(v, level, &grid);
        check_boundary(v, level)?;
    }
    Ok((vals, states))
}

/// Last lowest vectors of the two parity blocks, reused as starting
/// guesses when the next parameters are close.
#[derive(Debug, Clone, Default)]
struct DoubletCache {
    even: Option<Vec<f64>>,
    odd: Option<Vec<f64>>,
}

/// Localized basis built from the symmetric trap.
#[derive(Debug, Clone)]
pub struct LRBasis {
    pub g: Vec<f64>,
    pub e: Vec<f64>,
    /// `(g - e) / sqrt 2`, localized on the left.
    pub l: Vec<f64>,
    /// `(g + e) / sqrt 2`, localized on the right.
    pub r: Vec<f64>,
    /// Midpoint of the two lowest levels of the full trap (J).
    pub lambda_shift: f64,
    pub e_minus: f64,
    pub e_plus: f64,
}

pub fn lr_basis(p: &PotentialParams, grid: SpatialGrid) -> Result<LRBasis> {
    let profile = PotentialProfile::for_params(grid, p)?;
    let (_, [g, e]) = symmetric_doublet(&profile, p.omega, p.v0, None)?;
    let (e_minus, e_plus) = if p.dx_shift == 0.0 {
        let (v, _) = symmetric_doublet(&profile, p.omega, p.v0, None)?;
        (v[0] * HBAR, v[1] * HBAR)
    } else {
        let h = profile.hamiltonian(p.omega, p.v0, p.dx_shift);
        let (v, _) = h.lowest(2)?;
        (v[0] * HBAR, v[1] * HBAR)
    };
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let l = g.iter().zip(&e).map(|(a, b)| s * (a - b)).collect();
    let r = g.iter().zip(&e).map(|(a, b)| s * (a + b)).collect();
    Ok(LRBasis { g, e, l, r, lambda_shift: 0.5 * (e_minus + e_plus), e_minus, e_plus })
}

/// Extraction of two-level controls at fixed grid, mass, lattice constant
/// and displacement; only `(V0, omega)` vary between calls.
#[derive(Debug, Clone)]
pub struct Extractor {
    pub profile: PotentialProfile,
    pub dx_shift: f64,
    scratch: Vec<f64>,
    cache: DoubletCache,
}

impl Extractor {
    pub fn new(grid: SpatialGrid, mass: f64, d_l: f64, dx_shift: f64) -> Result<Self> {
        if !dx_shift.is_finite() {
            return Err(Error::InvalidParams("dx_shift must be finite".into()));
        }
        Ok(Self {
            profile: PotentialProfile::new(grid, mass, d_l)?,
            dx_shift,
            scratch: Vec::new(),
            cache: DoubletCache::default(),
        })
    }

    pub fn for_params(p: &PotentialParams, grid: SpatialGrid) -> Result<Self> {
        p.validate()?;
        Self::new(grid, p.mass, p.d_l, p.dx_shift)
    }

    pub fn params(&self, omega: f64, v0: f64) -> PotentialParams {
        PotentialParams { mass: self.profile.mass, omega, v0, dx_shift: self.dx_shift, d_l: self.profile.d_l }
    }

    /// `delta = (<e|H|e> - <g|H|g>) / hbar`, `lambda = 2 <g|H|e> / hbar`.
    ///
    /// The bias is the difference of the diagonal `R` and `L` matrix
    /// elements, which needs no level shift.
    pub fn extract(&mut self, omega: f64, v0: f64) -> Result<TwoLevelControls> {
        if !(omega >= 0.0 && v0 >= 0.0 && omega.is_finite() && v0.is_finite()) {
            return Err(Error::InvalidParams(format!("omega = {omega}, V0 = {v0} out of range")));
        }
        let (_, [g, e]) = symmetric_doublet(&self.profile, omega, v0, Some(&mut self.cache))?;
        let mut v = std::mem::take(&mut self.scratch);
        self.profile.potential_over_hbar(omega, v0, self.dx_shift, &mut v);
        let k = self.profile.kinetic;
        let n = v.len();
        let (mut gg, mut ee, mut ge) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let d = v[i] + 2.0 * k;
            let mut hg = d * g[i];
            let mut he = d * e[i];
            if i > 0 {
                hg -= k * g[i - 1];
                he -= k * e[i - 1];
            }
            if i + 1 < n {
                hg -= k * g[i + 1];
                he -= k * e[i + 1];
            }
            gg += g[i] * hg;
            ee += e[i] * he;
            ge += g[i] * he;
        }
        self.scratch = v;
        let h = self.profile.grid.spacing();
        Ok(TwoLevelControls { delta: (ee - gg) * h, lambda: 2.0 * ge * h })
    }
}

/// Matrix elements behind an extraction, for diagnostics.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub controls: TwoLevelControls,
    /// `<L|H|R> / hbar` and `<R|H|L> / hbar` (rad/s).
    pub h_lr: f64,
    pub h_rl: f64,
    /// `(2/hbar) <R|H - Lambda|R>` and `-(2/hbar) <L|H - Lambda|L>` (rad/s).
    ///
    /// These coincide only when the displaced lattice leaves the mean
    /// energy of the doublet unchanged; their average is the reported
    /// bias.
    pub lambda_from_r: f64,
    pub lambda_from_l: f64,
    /// Level midpoint of the full trap divided by `hbar` (rad/s).
    pub lambda_shift: f64,
}

pub fn extract_controls(p: &PotentialParams, grid: SpatialGrid) -> Result<TwoLevelControls> {
    Extractor::for_params(p, grid)?.extract(p.omega, p.v0)
}

/// Full extraction with the literal matrix elements and cross-checks.
///
/// Fails with `InconsistentExtraction` when `<L|H|R>` and `<R|H|L>`
/// disagree beyond 1e-8 of the diagonal scale, or when the bias average
/// disagrees with the fast path.
pub fn extract_controls_detailed(p: &PotentialParams, grid: SpatialGrid) -> Result<ExtractionReport> {
    let basis = lr_basis(p, grid)?;
    let h = Hamiltonian::new(p, grid)?;
    let h_lr = h.matrix_element(&basis.l, &basis.r);
    let h_rl = h.matrix_element(&basis.r, &basis.l);
    let h_rr = h.matrix_element(&basis.r, &basis.r);
    let h_ll = h.matrix_element(&basis.l, &basis.l);
    let shift = basis.lambda_shift / HBAR;
    let lambda_from_r = 2.0 * (h_rr - shift);
    let lambda_from_l = -2.0 * (h_ll - shift);
    let scale = h_rr.abs().max(h_ll.abs()).max(f64::MIN_POSITIVE);
    if (h_lr - h_rl).abs() > 1e-8 * scale {
        return Err(Error::InconsistentExtraction(format!(
            "<L|H|R> = {h_lr:e} but <R|H|L> = {h_rl:e} rad/s"
        )));
    }
    let controls = TwoLevelControls { delta: -2.0 * h_lr, lambda: h_rr - h_ll };
    let fast = extract_controls(p, grid)?;
    let tol = 1e-8 * scale;
    if (fast.delta - controls.delta).abs() > tol || (fast.lambda - controls.lambda).abs() > tol {
        return Err(Error::InconsistentExtraction(format!(
            "matrix-element controls {controls:?} differ from {fast:?}"
        )));
    }
    if (lambda_from_r - lambda_from_l).abs() > 1e-8 * scale {
        log::debug!(
            "bias from R ({lambda_from_r:e}) and from L ({lambda_from_l:e}) differ; reporting their average"
        );
    }
    Ok(ExtractionReport { controls, h_lr, h_rl, lambda_from_r, lambda_from_l, lambda_shift: shift })
}
