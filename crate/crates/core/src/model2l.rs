//! Two-level model of the trap splitting.
//!
//! The bare basis is ordered `(|R>, |L>)` and the Hamiltonian is
//! `H = (hbar/2) [[lambda, -delta], [-delta, -lambda]]`, so `lambda > 0`
//! makes `|L>` the lower well. Control curves are inverse-engineered from a
//! Lewis-Riesenfeld invariant parameterized by a polar angle `theta(t)` and
//! an azimuthal angle `phi(t)`, both interpolated by polynomials.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::HBAR;

/// Frequency scale of the invariant. It never enters the controls.
pub const INVARIANT_OMEGA0: f64 = 1.0;

/// Final polar angle of the invariant.
///
/// With `theta(tf) = 0` the invariant eigenvector that starts as the
/// two-level ground state ends on `|L>`, the ground state of the biased
/// double well, and `delta(t)` stays non-negative. The opposite pole
/// (`theta(tf) = pi`) transports the ground state onto the upper well and
/// drives `delta` through zero, which no real double well can realize.
pub const THETA_FINAL: f64 = 0.0;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Instantaneous tunneling rate and bias, both in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelControls {
    pub delta: f64,
    pub lambda: f64,
}

impl TwoLevelControls {
    pub fn new(delta: f64, lambda: f64) -> Self {
        Self { delta, lambda }
    }

    /// Level splitting `sqrt(delta^2 + lambda^2)` in rad/s.
    pub fn splitting(&self) -> f64 {
        self.delta.hypot(self.lambda)
    }
}

/// Inputs of an invariant-based demultiplexing design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignParams {
    /// Initial trap angular frequency (rad/s).
    pub omega0: f64,
    /// Final bias (rad/s).
    pub lambda_f: f64,
    /// Initial bias slope (rad/s^2). Must be nonzero.
    pub dlambda0: f64,
    /// Protocol duration (s).
    pub tf: f64,
    /// Number of time samples in the output curve.
    pub n_samples: usize,
}

impl DesignParams {
    pub const DEFAULT_SAMPLES: usize = 2001;

    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega0, self.lambda_f, self.dlambda0, self.tf]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("design parameters must be finite".into()));
        }
        if self.omega0 <= 0.0 {
            return Err(Error::InvalidParams(format!("omega0 = {} must be > 0", self.omega0)));
        }
        if self.tf <= 0.0 {
            return Err(Error::InvalidParams(format!("tf = {} must be > 0", self.tf)));
        }
        if self.n_samples < 2 {
            return Err(Error::InvalidParams("n_samples must be >= 2".into()));
        }
        if self.dlambda0 == 0.0 {
            return Err(Error::InvalidParams(
                "initial bias slope dlambda0 must be nonzero".into(),
            ));
        }
        Ok(())
    }

    /// Uniform sample times on `[0, tf]`.
    pub fn times(&self) -> Vec<f64> {
        uniform_times(self.tf, self.n_samples)
    }
}

pub(crate) fn uniform_times(tf: f64, n: usize) -> Vec<f64> {
    let last = (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { tf } else { tf * i as f64 / last })
        .collect()
}

/// Evaluates the `order`-th derivative of `sum_j c_j t^j`.
fn poly_derivative(coeffs: &[f64], order: usize, t: f64) -> f64 {
    let mut acc = 0.0;
    for j in (order..coeffs.len()).rev() {
        let falling: f64 = ((j - order + 1)..=j).map(|k| k as f64).product();
        acc = acc * t + coeffs[j] * falling;
    }
    acc
}

/// Polynomial interpolants of the invariant angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnglePolynomials {
    /// `theta(t) = sum_{j=0..5} a_j t^j`.
    pub a: [f64; 6],
    /// `phi(t) = sum_{j=0..4} b_j t^j`.
    pub b: [f64; 5],
    pub tf: f64,
}

/// One boundary condition: derivative order, evaluation time, target value.
#[derive(Debug, Clone, Copy)]
struct Condition {
    order: usize,
    at_end: bool,
    value: f64,
}

fn theta_conditions(p: &DesignParams) -> [Condition; 6] {
    let c = |order, at_end, value| Condition { order, at_end, value };
    [
        c(0, false, FRAC_PI_2),
        c(1, false, 0.0),
        c(2, false, 0.0),
        c(3, false, -p.omega0 * p.dlambda0),
        c(0, true, THETA_FINAL),
        c(1, true, 0.0),
    ]
}

fn phi_conditions(p: &DesignParams) -> [Condition; 5] {
    let c = |order, at_end, value| Condition { order, at_end, value };
    [
        c(0, false, PI),
        c(1, false, 0.0),
        c(2, false, -p.dlambda0),
        c(0, true, FRAC_PI_2),
        c(1, true, -p.lambda_f / 3.0),
    ]
}

/// Solves the monomial-basis system in the scaled time `s = t / tf`,
/// returning coefficients for the unscaled variable.
fn solve_conditions(conds: &[Condition], tf: f64) -> Result<Vec<f64>> {
    let n = conds.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for (row, c) in conds.iter().enumerate() {
        let s: f64 = if c.at_end { 1.0 } else { 0.0 };
        for j in c.order..n {
            let falling: f64 = ((j - c.order + 1)..=j).map(|k| k as f64).product();
            m[(row, j)] = falling * s.powi((j - c.order) as i32);
        }
        rhs[row] = c.value * tf.powi(c.order as i32);
    }
    let scaled = m.lu().solve(&rhs).ok_or(Error::SingularSystem)?;
    Ok(scaled
        .iter()
        .enumerate()
        .map(|(j, v)| v / tf.powi(j as i32))
        .collect())
}

impl AnglePolynomials {
    pub fn theta(&self, t: f64) -> f64 {
        poly_derivative(&self.a, 0, t)
    }

    pub fn phi(&self, t: f64) -> f64 {
        poly_derivative(&self.b, 0, t)
    }

    /// `order`-th time derivative of theta.
    pub fn theta_derivative(&self, order: usize, t: f64) -> f64 {
        poly_derivative(&self.a, order, t)
    }

    /// `order`-th time derivative of phi.
    pub fn phi_derivative(&self, order: usize, t: f64) -> f64 {
        poly_derivative(&self.b, order, t)
    }

    /// Raw invariance relations, without endpoint treatment.
    ///
    /// `delta = -theta'/sin(phi)`,
    /// `lambda = -delta cot(theta) cos(phi) - phi'`.
    pub fn controls_at(&self, t: f64) -> TwoLevelControls {
        let (theta, phi) = (self.theta(t), self.phi(t));
        let delta = -self.theta_derivative(1, t) / phi.sin();
        let lambda = -delta * phi.cos() / theta.tan() - self.phi_derivative(1, t);
        TwoLevelControls { delta, lambda }
    }

    /// Residuals of the eleven boundary conditions, each divided by
    /// `max(|target|, tf^-order)`. Theta conditions come first.
    pub fn boundary_residuals(&self, params: &DesignParams) -> [f64; 11] {
        let mut out = [0.0; 11];
        let theta = theta_conditions(params)
            .into_iter()
            .map(|c| (c, self.theta_derivative(c.order, if c.at_end { self.tf } else { 0.0 })));
        let phi = phi_conditions(params)
            .into_iter()
            .map(|c| (c, self.phi_derivative(c.order, if c.at_end { self.tf } else { 0.0 })));
        for (slot, (c, actual)) in out.iter_mut().zip(theta.chain(phi)) {
            let scale = c.value.abs().max(self.tf.powi(-(c.order as i32)));
            *slot = (actual - c.value).abs() / scale;
        }
        out
    }
}

/// Tagged origin of a control curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    InvariantDesigned,
    FastAdiabatic,
    LinearRampDerived,
}

/// Time-sampled ideal controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlCurve {
    pub times: Vec<f64>,
    pub delta: Vec<f64>,
    pub lambda: Vec<f64>,
    pub kind: CurveKind,
}

impl ControlCurve {
    pub fn new(times: Vec<f64>, delta: Vec<f64>, lambda: Vec<f64>, kind: CurveKind) -> Result<Self> {
        if times.len() < 2 || delta.len() != times.len() || lambda.len() != times.len() {
            return Err(Error::InvalidParams("control curve columns must share a length >= 2".into()));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams(
                "control curve times must start at 0 and increase strictly".into(),
            ));
        }
        if delta.iter().chain(&lambda).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("control curve values must be finite".into()));
        }
        Ok(Self { times, delta, lambda, kind })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn tf(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn controls(&self, i: usize) -> TwoLevelControls {
        TwoLevelControls::new(self.delta[i], self.lambda[i])
    }

    /// Number of samples with `delta < 0`. Demux designs should have none.
    pub fn negative_delta_samples(&self) -> usize {
        self.delta.iter().filter(|&&d| d < 0.0).count()
    }
}

/// Two complex amplitudes in the `(|R>, |L>)` ordering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelState {
    pub r: Complex64,
    pub l: Complex64,
}

impl TwoLevelState {
    pub const RIGHT: Self = Self { r: Complex64::new(1.0, 0.0), l: Complex64::new(0.0, 0.0) };
    pub const LEFT: Self = Self { r: Complex64::new(0.0, 0.0), l: Complex64::new(1.0, 0.0) };

    pub fn new(r: Complex64, l: Complex64) -> Result<Self> {
        let s = Self { r, l };
        if (s.norm_sqr() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!(
                "two-level state norm^2 = {} differs from 1",
                s.norm_sqr()
            )));
        }
        Ok(s)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.r.norm_sqr() + self.l.norm_sqr()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.r.conj() * other.r + self.l.conj() * other.l
    }

    /// `|<self|other>|^2`.
    pub fn overlap_sqr(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }
}

/// Spectral decomposition of the two-level Hamiltonian.
#[derive(Debug, Clone, Copy)]
pub struct Eigensystem2 {
    /// Lower energy (J).
    pub e_minus: f64,
    /// Upper energy (J).
    pub e_plus: f64,
    /// Mixing angle in `[0, pi]`.
    pub alpha: f64,
    pub psi_minus: TwoLevelState,
    pub psi_plus: TwoLevelState,
}

pub fn eigensystem_2l(c: TwoLevelControls) -> Result<Eigensystem2> {
    if c.delta == 0.0 && c.lambda == 0.0 {
        return Err(Error::DegenerateHamiltonian);
    }
    let half = 0.5 * HBAR * c.splitting();
    // Vectors use the raw atan2 angle. Negative angles (delta < 0) are
    // reported folded onto [0, pi]; folding the vectors too would swap them.
    let raw = c.delta.atan2(c.lambda);
    let alpha = if raw < 0.0 { raw + PI } else { raw };
    let (s, co) = (0.5 * raw).sin_cos();
    let re = |v: f64| Complex64::new(v, 0.0);
    Ok(Eigensystem2 {
        e_minus: -half,
        e_plus: half,
        alpha,
        psi_minus: TwoLevelState { r: re(s), l: re(co) },
        psi_plus: TwoLevelState { r: re(-co), l: re(s) },
    })
}

pub fn solve_angle_polynomials(params: &DesignParams) -> Result<AnglePolynomials> {
    params.validate()?;
    let a = solve_conditions(&theta_conditions(params), params.tf)?;
    let b = solve_conditions(&phi_conditions(params), params.tf)?;
    Ok(AnglePolynomials {
        a: a.try_into().expect("six theta coefficients"),
        b: b.try_into().expect("five phi coefficients"),
        tf: params.tf,
    })
}

/// Samples the invariance relations on a uniform grid.
///
/// Both endpoints are 0/0 forms of the relations and are replaced by their
/// limits, which the boundary conditions fix: `(omega0, 0)` at `t = 0` and
/// `(0, lambda_f)` at `t = tf`.
pub fn controls_from_angles(poly: &AnglePolynomials, params: &DesignParams) -> Result<ControlCurve> {
    params.validate()?;
    let times = params.times();
    let n = times.len();
    let mut delta = Vec::with_capacity(n);
    let mut lambda = Vec::with_capacity(n);
    for (i, &t) in times.iter().enumerate() {
        let c = if i == 0 {
            TwoLevelControls::new(params.omega0, 0.0)
        } else if i + 1 == n {
            TwoLevelControls::new(0.0, params.lambda_f)
        } else {
            if poly.phi(t).sin().abs() < 1e-12 || poly.theta(t).sin().abs() < 1e-12 {
                return Err(Error::IndeterminateInterior { t });
            }
            poly.controls_at(t)
        };
        delta.push(c.delta);
        lambda.push(c.lambda);
    }
    let curve = ControlCurve::new(times, delta, lambda, CurveKind::InvariantDesigned)?;
    let negative = curve.negative_delta_samples();
    if negative > 0 {
        log::warn!("designed curve has {negative} samples with delta < 0");
    }
    Ok(curve)
}

/// Fast-adiabatic reference curve and its adiabaticity parameter.
#[derive(Debug, Clone)]
pub struct FastAdiabatic {
    pub curve: ControlCurve,
    /// Constant value of `|lambda delta' / (2 (lambda^2 + delta^2)^{3/2})|`.
    pub c: f64,
    /// Set when `c >= 0.1`.
    pub non_adiabatic: bool,
}

/// `delta_fa(t) = omega0 lambda (tf - t) / sqrt(lambda^2 tf^2 + omega0^2 t (2 tf - t))`
pub fn fast_adiabatic_delta(omega0: f64, lambda: f64, tf: f64, t: f64) -> f64 {
    omega0 * lambda * (tf - t) / (lambda * lambda * tf * tf + omega0 * omega0 * t * (2.0 * tf - t)).sqrt()
}

pub fn fast_adiabatic_curve(omega0: f64, lambda_const: f64, tf: f64, n_samples: usize) -> Result<FastAdiabatic> {
    if !(lambda_const > 0.0) || !(tf > 0.0) || !(omega0 > 0.0) || n_samples < 2 {
        return Err(Error::InvalidParams(
            "fast-adiabatic curve needs omega0 > 0, lambda > 0, tf > 0 and >= 2 samples".into(),
        ));
    }
    let times = uniform_times(tf, n_samples);
    let delta = times
        .iter()
        .map(|&t| fast_adiabatic_delta(omega0, lambda_const, tf, t))
        .collect();
    let lambda = vec![lambda_const; n_samples];
    let c = omega0 / (2.0 * lambda_const * omega0.hypot(lambda_const) * tf);
    Ok(FastAdiabatic {
        curve: ControlCurve::new(times, delta, lambda, CurveKind::FastAdiabatic)?,
        c,
        non_adiabatic: c >= 0.1,
    })
}

pub type Matrix2 = [[Complex64; 2]; 2];

/// `I = (hbar Omega0 / 2) [[cos theta, sin theta e^{i phi}], [sin theta e^{-i phi}, -cos theta]]` in joules.
pub fn invariant_matrix(theta: f64, phi: f64, omega0: f64) -> Matrix2 {
    let k = 0.5 * HBAR * omega0;
    let (st, ct) = theta.sin_cos();
    let off = Complex64::from_polar(k * st, phi);
    [
        [Complex64::new(k * ct, 0.0), off],
        [off.conj(), Complex64::new(-k * ct, 0.0)],
    ]
}

/// Two-level Hamiltonian in joules.
pub fn hamiltonian_2l(c: TwoLevelControls) -> Matrix2 {
    let k = 0.5 * HBAR;
    let z = Complex64::new(k * c.lambda, 0.0);
    let x = Complex64::new(-k * c.delta, 0.0);
    [[z, x], [x, -z]]
}

fn mat_mul(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn commutator_norm(h: &Matrix2, inv: &Matrix2) -> f64 {
    let hi = mat_mul(h, inv);
    let ih = mat_mul(inv, h);
    let mut acc = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            acc += (hi[i][j] - ih[i][j]).norm_sqr();
        }
    }
    acc.sqrt()
}

/// Frobenius norms of `[H, I]` at `t = 0` and `t = tf`, divided by
/// `hbar^2 Omega0 omega0` with `omega0 = delta(0)`.
pub fn commutator_boundary_residual(curve: &ControlCurve, poly: &AnglePolynomials) -> (f64, f64) {
    let omega0 = curve.delta[0].abs().max(f64::MIN_POSITIVE);
    let norm = HBAR * HBAR * INVARIANT_OMEGA0 * omega0;
    let at = |i: usize, t: f64| {
        let h = hamiltonian_2l(curve.controls(i));
        let inv = invariant_matrix(poly.theta(t), poly.phi(t), INVARIANT_OMEGA0);
        commutator_norm(&h, &inv) / norm
    };
    (at(0, 0.0), at(curve.len() - 1, curve.tf()))
}

/// `exp(-i H dt / hbar)` applied to `psi` for constant controls.
pub fn step_2l(psi: &TwoLevelState, c: TwoLevelControls, dt: f64) -> TwoLevelState {
    let w = c.splitting();
    if w == 0.0 {
        return *psi;
    }
    let (s, co) = (0.5 * w * dt).sin_cos();
    let (nz, nx) = (c.lambda / w, -c.delta / w);
    // U = cos - i sin (nz sz + nx sx)
    let u_rr = Complex64::new(co, -s * nz);
    let u_ll = Complex64::new(co, s * nz);
    let u_rl = -I * s * nx;
    TwoLevelState {
        r: u_rr * psi.r + u_rl * psi.l,
        l: u_rl * psi.r + u_ll * psi.l,
    }
}

/// Exact stepwise propagation with controls held at their interval
/// midpoint values (average of the two bracketing samples).
pub fn propagate_2l(curve: &ControlCurve, psi0: &TwoLevelState) -> Result<(TwoLevelState, Vec<TwoLevelState>)> {
    let n = curve.len();
    let mut max_phase: f64 = 0.0;
    for i in 0..n - 1 {
        let dt = curve.times[i + 1] - curve.times[i];
        max_phase = max_phase
            .max(curve.controls(i).splitting() * dt)
            .max(curve.controls(i + 1).splitting() * dt);
    }
    if max_phase >= 0.1 {
        return Err(Error::StepTooCoarse { phase: max_phase });
    }
    let mut traj = Vec::with_capacity(n);
    let mut psi = *psi0;
    traj.push(psi);
    for i in 0..n - 1 {
        let dt = curve.times[i + 1] - curve.times[i];
        let mid = TwoLevelControls::new(
            0.5 * (curve.delta[i] + curve.delta[i + 1]),
            0.5 * (curve.lambda[i] + curve.lambda[i + 1]),
        );
        psi = step_2l(&psi, mid, dt);
        traj.push(psi);
    }
    Ok((psi, traj))
}

/// Populations of the final instantaneous eigenstates after propagating
/// the initial ones: `(|<psi-(tf)|U psi-(0)>|^2, |<psi+(tf)|U psi+(0)>|^2)`.
pub fn transport_fidelities(curve: &ControlCurve) -> Result<(f64, f64)> {
    let first = eigensystem_2l(curve.controls(0))?;
    let last = eigensystem_2l(curve.controls(curve.len() - 1))?;
    let (lower, _) = propagate_2l(curve, &first.psi_minus)?;
    let (upper, _) = propagate_2l(curve, &first.psi_plus)?;
    Ok((last.psi_minus.overlap_sqr(&lower), last.psi_plus.overlap_sqr(&upper)))
}

/// Invariant-designed curve for the given parameters.
pub fn design_curve(params: &DesignParams) -> Result<(AnglePolynomials, ControlCurve)> {
    let poly = solve_angle_polynomials(params)?;
    let curve = controls_from_angles(&poly, params)?;
    Ok((poly, curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn case_a() -> DesignParams {
        DesignParams { omega0: 2.0 * PI * 78.0, lambda_f: 10.0, dlambda0: 10.0, tf: 0.25, n_samples: 2001 }
    }

    #[test]
    fn eigensystem_harmonic_point() {
        let w0 = 2.0 * PI * 78.0;
        let es = eigensystem_2l(TwoLevelControls::new(w0, 0.0)).unwrap();
        assert_relative_eq!(es.alpha, FRAC_PI_2, epsilon = 1e-15);
        assert_relative_eq!(es.e_plus, 0.5 * HBAR * w0, max_relative = 1e-15);
        assert_relative_eq!(es.e_minus, -0.5 * HBAR * w0, max_relative = 1e-15);
        let sym = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(es.psi_minus.r.re, sym, epsilon = 1e-15);
        assert_relative_eq!(es.psi_minus.l.re, sym, epsilon = 1e-15);
    }

    #[test]
    fn eigensystem_diagonal_limit() {
        let es = eigensystem_2l(TwoLevelControls::new(0.0, 10.0)).unwrap();
        assert_eq!(es.alpha, 0.0);
        assert_eq!(es.psi_minus.overlap_sqr(&TwoLevelState::LEFT), 1.0);
        assert_relative_eq!(es.e_minus, -5.0 * HBAR, max_relative = 1e-15);
    }

    #[test]
    fn eigensystem_three_four_five() {
        let es = eigensystem_2l(TwoLevelControls::new(3.0, 4.0)).unwrap();
        assert_relative_eq!(es.e_plus, 2.5 * HBAR, max_relative = 1e-15);
        assert_relative_eq!(es.e_minus, -2.5 * HBAR, max_relative = 1e-15);
    }

    #[test]
    fn eigenvectors_diagonalize_hamiltonian() {
        for &(d, l) in &[(3.0, 4.0), (490.0, 0.0), (0.2, -7.0), (-1.0, 2.0)] {
            let c = TwoLevelControls::new(d, l);
            let es = eigensystem_2l(c).unwrap();
            let h = hamiltonian_2l(c);
            for (psi, e) in [(es.psi_minus, es.e_minus), (es.psi_plus, es.e_plus)] {
                let hr = h[0][0] * psi.r + h[0][1] * psi.l;
                let hl = h[1][0] * psi.r + h[1][1] * psi.l;
                assert!((hr - psi.r * e).norm() < 1e-12 * HBAR * c.splitting());
                assert!((hl - psi.l * e).norm() < 1e-12 * HBAR * c.splitting());
            }
        }
    }

    #[test]
    fn degenerate_hamiltonian_is_rejected() {
        assert!(matches!(
            eigensystem_2l(TwoLevelControls::new(0.0, 0.0)),
            Err(Error::DegenerateHamiltonian)
        ));
    }

    #[test]
    fn low_order_coefficients_follow_from_initial_conditions() {
        let p = case_a();
        let poly = solve_angle_polynomials(&p).unwrap();
        assert_relative_eq!(poly.a[0], FRAC_PI_2, epsilon = 1e-14);
        assert!(poly.a[1].abs() < 1e-9);
        assert!(poly.a[2].abs() < 1e-9);
        assert_relative_eq!(poly.a[3], -p.omega0 * p.dlambda0 / 6.0, max_relative = 1e-10);
        assert_relative_eq!(poly.b[0], PI, epsilon = 1e-14);
        assert!(poly.b[1].abs() < 1e-9);
        assert_relative_eq!(poly.b[2], -p.dlambda0 / 2.0, max_relative = 1e-10);
    }

    #[test]
    fn case_a_boundary_conditions() {
        let p = case_a();
        let poly = solve_angle_polynomials(&p).unwrap();
        for r in poly.boundary_residuals(&p) {
            assert!(r < 1e-10, "residual {r}");
        }
        assert_relative_eq!(poly.theta(0.0), FRAC_PI_2, epsilon = 1e-14);
        assert!((poly.theta(p.tf) - THETA_FINAL).abs() < 1e-10);
    }

    #[test]
    fn zero_slope_is_rejected() {
        let p = DesignParams { dlambda0: 0.0, ..case_a() };
        assert!(matches!(solve_angle_polynomials(&p), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn case_a_curve_endpoints() {
        let p = case_a();
        let (_, curve) = design_curve(&p).unwrap();
        assert_eq!(curve.delta[0], p.omega0);
        assert_eq!(curve.lambda[0], 0.0);
        assert_eq!(*curve.delta.last().unwrap(), 0.0);
        assert_eq!(*curve.lambda.last().unwrap(), 10.0);
        assert_eq!(curve.negative_delta_samples(), 0);
    }

    #[test]
    fn delta_limit_at_start() {
        let p = case_a();
        let poly = solve_angle_polynomials(&p).unwrap();
        let mut prev = f64::INFINITY;
        for eps in [1e-3, 1e-4, 1e-5] {
            let err = (poly.controls_at(eps * p.tf).delta - p.omega0).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev / p.omega0 < 1e-3);
    }

    #[test]
    fn lambda_limit_at_end_richardson() {
        let p = case_a();
        let poly = solve_angle_polynomials(&p).unwrap();
        let lam = |eps: f64| poly.controls_at(p.tf * (1.0 - eps)).lambda;
        // Eliminate the linear approach term between successive decades.
        let rich = |e: f64| (10.0 * lam(e / 10.0) - lam(e)) / 9.0;
        for e in [1e-3, 1e-4] {
            assert!((rich(e) - p.lambda_f).abs() / p.lambda_f < 1e-4, "eps {e}: {}", rich(e));
        }
    }

    #[test]
    fn fast_adiabatic_endpoints_and_c() {
        let w0 = 2.0 * PI * 78.0;
        let fa = fast_adiabatic_curve(w0, 10.0, 0.25, 1001).unwrap();
        assert_relative_eq!(fa.curve.delta[0], w0, max_relative = 1e-14);
        assert_eq!(*fa.curve.delta.last().unwrap(), 0.0);
        // independent evaluation of c
        let c2 = 1.0 / (2.0 * 10.0 * (1.0 + (10.0 / w0).powi(2)).sqrt() * 0.25);
        assert_relative_eq!(fa.c, c2, max_relative = 1e-13);
        assert!((fa.c - 0.200).abs() < 5e-4);
        assert!(fa.non_adiabatic);
    }

    #[test]
    fn invariant_examples() {
        let hb2 = 0.5 * HBAR;
        let m = invariant_matrix(0.0, 1.234, 1.0);
        assert_relative_eq!(m[0][0].re, hb2, max_relative = 1e-15);
        assert_relative_eq!(m[1][1].re, -hb2, max_relative = 1e-15);
        assert!(m[0][1].norm() == 0.0 && m[1][0].norm() == 0.0);
        let m = invariant_matrix(FRAC_PI_2, 0.0, 1.0);
        assert!(m[0][0].norm() < 1e-16 * hb2);
        assert_relative_eq!(m[0][1].re, hb2, max_relative = 1e-15);
        assert_relative_eq!(m[1][0].re, hb2, max_relative = 1e-15);
    }

    #[test]
    fn constant_diagonal_propagation() {
        let times = uniform_times(0.25, 101);
        let curve = ControlCurve::new(times, vec![0.0; 101], vec![10.0; 101], CurveKind::LinearRampDerived).unwrap();
        let (psi, _) = propagate_2l(&curve, &TwoLevelState::LEFT).unwrap();
        let expected = Complex64::from_polar(1.0, 10.0 * 0.25 / 2.0);
        assert!((psi.l - expected).norm() < 1e-12);
        assert_eq!(psi.r.norm(), 0.0);
    }

    #[test]
    fn coarse_curve_is_rejected() {
        let w0 = 2.0 * PI * 78.0;
        let p = DesignParams { omega0: w0, lambda_f: 10.0, dlambda0: 10.0, tf: 0.25, n_samples: 101 };
        let (_, curve) = design_curve(&p).unwrap();
        assert!(matches!(
            propagate_2l(&curve, &TwoLevelState::LEFT),
            Err(Error::StepTooCoarse { .. })
        ));
    }

    #[test]
    fn commutator_vanishes_for_aligned_endpoint() {
        let w0 = 2.0 * PI * 78.0;
        let h = hamiltonian_2l(TwoLevelControls::new(w0, 0.0));
        let inv = invariant_matrix(FRAC_PI_2, PI, 1.0);
        assert!(commutator_norm(&h, &inv) / (HBAR * HBAR * w0) < 1e-15);
    }

    #[test]
    fn perturbed_final_angle_breaks_commutation() {
        let p = case_a();
        let (mut poly, curve) = design_curve(&p).unwrap();
        let (r0, rf) = commutator_boundary_residual(&curve, &poly);
        assert!(r0 < 1e-8 && rf < 1e-8, "{r0} {rf}");
        // shift theta(tf) by 0.01 through the constant term
        poly.a[0] += 0.01;
        let (_, rf) = commutator_boundary_residual(&curve, &poly);
        assert!(rf > 1e-4, "{rf}");
    }

    #[test]
    fn opposite_pole_would_invert_the_doublet() {
        // theta(tf) = pi sends the ground state to the upper well and forces
        // delta negative; this checks the reason for THETA_FINAL.
        let p = case_a();
        let mut conds = theta_conditions(&p);
        conds[4].value = PI;
        let a = solve_conditions(&conds, p.tf).unwrap();
        let b = solve_conditions(&phi_conditions(&p), p.tf).unwrap();
        let poly = AnglePolynomials { a: a.try_into().unwrap(), b: b.try_into().unwrap(), tf: p.tf };
        let min_delta = (1..1000)
            .map(|i| poly.controls_at(p.tf * i as f64 / 1000.0).delta)
            .fold(f64::INFINITY, f64::min);
        assert!(min_delta < -1.0, "{min_delta}");
    }
}
