//! Symmetric tridiagonal eigensolver and complex tridiagonal solves.
//!
//! Eigenvalues come from Sturm-sequence bisection, eigenvectors from
//! inverse iteration with a partially pivoted LU factorization. Only the
//! lowest few eigenpairs of large matrices are ever needed here.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real symmetric tridiagonal matrix. `off[i]` couples rows `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::InvalidParams(format!(
                "tridiagonal sizes {} / {} are inconsistent",
                diag.len(),
                off.len()
            )));
        }
        Ok(Self { diag, off })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `y = T x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            y[i] = acc;
        }
    }

    /// `x^T T x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let n = self.len();
        let mut acc = 0.0;
        for i in 0..n {
            acc += self.diag[i] * x[i] * x[i];
            if i + 1 < n {
                acc += 2.0 * self.off[i] * x[i] * x[i + 1];
            }
        }
        acc
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0..self.len() {
            if i > 0 {
                let e = self.off[i - 1];
                q = self.diag[i] - x - e * e / q;
            }
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection inside `[lo, hi]`.
    pub fn bisect(&self, k: usize, mut lo: f64, mut hi: f64) -> f64 {
        loop {
            let mid = 0.5 * (lo + hi);
            let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
            if hi - lo <= 2.0 * f64::EPSILON * scale || mid <= lo || mid >= hi {
                return mid;
            }
            if self.sturm_count(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    /// Solves `(T - sigma I) x = b` in place with partial pivoting.
    ///
    /// Exactly singular pivots are replaced by a tiny value, which is the
    /// usual treatment inside inverse iteration.
    fn shifted_solve(&self, sigma: f64, b: &mut [f64], work: &mut LuWork) {
        let n = self.len();
        let tiny = f64::EPSILON * self.gershgorin_scale();
        work.resize(n);
        // Row i of U holds u0 (diagonal), u1, u2 (superdiagonals).
        let (u0, u1, u2, l, piv) = (&mut work.u0, &mut work.u1, &mut work.u2, &mut work.l, &mut work.piv);
        // Current working row: (a, b, c) at columns (i, i+1, i+2).
        let mut a = self.diag[0] - sigma;
        let mut bb = if n > 1 { self.off[0] } else { 0.0 };
        let mut cc = 0.0;
        for i in 0..n {
            if i + 1 == n {
                u0[i] = if a == 0.0 { tiny } else { a };
                u1[i] = 0.0;
                u2[i] = 0.0;
                break;
            }
            let sub = self.off[i];
            let nd = self.diag[i + 1] - sigma;
            let nsup = if i + 2 < n { self.off[i + 1] } else { 0.0 };
            if a.abs() >= sub.abs() {
                piv[i] = false;
                let a0 = if a == 0.0 { tiny } else { a };
                let m = sub / a0;
                u0[i] = a0;
                u1[i] = bb;
                u2[i] = cc;
                l[i] = m;
                a = nd - m * bb;
                bb = nsup - m * cc;
                cc = 0.0;
            } else {
                piv[i] = true;
                let m = a / sub;
                u0[i] = sub;
                u1[i] = nd;
                u2[i] = nsup;
                l[i] = m;
                a = bb - m * nd;
                bb = cc - m * nsup;
                cc = 0.0;
            }
        }
        // Forward substitution with the recorded row swaps.
        for i in 0..n.saturating_sub(1) {
            if piv[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= l[i] * b[i];
        }
        // Back substitution.
        for i in (0..n).rev() {
            let mut acc = b[i];
            if i + 1 < n {
                acc -= u1[i] * b[i + 1];
            }
            if i + 2 < n {
                acc -= u2[i] * b[i + 2];
            }
            b[i] = acc / u0[i];
        }
    }

    fn gershgorin_scale(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE)
    }

    /// Lowest `k` eigenpairs, ascending. Vectors have unit Euclidean norm.
    pub fn lowest_eigenpairs(&self, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        self.lowest_eigenpairs_above(k, None)
    }

    /// Like [`Self::lowest_eigenpairs`] with an optional lower bound for
    /// the spectrum, which tightens the bisection bracket.
    pub fn lowest_eigenpairs_above(&self, k: usize, floor: Option<f64>) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let n = self.len();
        if k == 0 || k > n {
            return Err(Error::InvalidParams(format!("cannot compute {k} eigenpairs of a {n}x{n} matrix")));
        }
        let (glo, ghi) = self.gershgorin();
        let lo = floor.map_or(glo, |f| f.max(glo));
        // Shrink the upper bracket to just above the k-th eigenvalue.
        let mut hi = lo + (ghi - lo) * 1e-6;
        while self.sturm_count(hi) < k {
            hi = lo + 4.0 * (hi - lo);
            if hi >= ghi {
                hi = ghi + (ghi - glo) * 1e-12 + f64::MIN_POSITIVE;
                break;
            }
        }
        let mut values = Vec::with_capacity(k);
        let mut bracket_lo = lo;
        for j in 0..k {
            let v = self.bisect(j, bracket_lo, hi);
            values.push(v);
            bracket_lo = v.min(hi);
            // Allow exact repeats to resolve as separate eigenvalues.
            bracket_lo -= 4.0 * f64::EPSILON * v.abs();
        }
        let mut work = LuWork::default();
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
        let scale = self.gershgorin_scale();
        let mut tx = vec![0.0; n];
        for j in 0..k {
            let sigma = values[j];
            // Earlier vectors within a cluster must be projected out.
            let cluster: Vec<usize> = (0..j)
                .filter(|&i| (values[i] - sigma).abs() <= 1e-10 * scale)
                .collect();
            let mut x: Vec<f64> = (0..n)
                .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * (0.618_033_988_75 + j as f64 * 0.1)).sin())
                .collect();
            let mut converged = false;
            for iter in 0..8 {
                self.shifted_solve(sigma, &mut x, &mut work);
                for &c in &cluster {
                    let p = dot(&x, &vectors[c]);
                    axpy(-p, &vectors[c], &mut x);
                }
                let nrm = dot(&x, &x).sqrt();
                if !nrm.is_finite() || nrm == 0.0 {
                    return Err(Error::NonConverged(format!("inverse iteration broke down for level {j}")));
                }
                x.iter_mut().for_each(|v| *v /= nrm);
                self.apply(&x, &mut tx);
                let rq = dot(&x, &tx);
                let resid: f64 = tx
                    .iter()
                    .zip(&x)
                    .map(|(t, v)| (t - rq * v).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if iter > 0 && resid <= 1e-11 * scale {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::NonConverged(format!("inverse iteration for level {j} did not converge")));
            }
            vectors.push(x);
        }
        // Rayleigh quotients are more accurate than the bisection midpoint
        // whenever the vector is accurate.
        for (v, x) in values.iter_mut().zip(&vectors) {
            *v = self.quadratic_form(x);
        }
        Ok((values, vectors))
    }
}

impl SymTridiag {
    /// Lowest eigenpair by Rayleigh-quotient iteration from a nearby guess.
    ///
    /// Returns `None` when the iteration does not settle or when a Sturm
    /// count shows that it converged to a level other than the lowest; the
    /// caller then falls back to bisection.
    pub fn lowest_from_guess(&self, guess: &[f64]) -> Option<(f64, Vec<f64>)> {
        let n = self.len();
        if guess.len() != n {
            return None;
        }
        let scale = self.gershgorin_scale();
        let mut x = guess.to_vec();
        let nrm = dot(&x, &x).sqrt();
        if !(nrm > 0.0) || !nrm.is_finite() {
            return None;
        }
        x.iter_mut().for_each(|v| *v /= nrm);
        let mut sigma = self.quadratic_form(&x);
        let mut work = LuWork::default();
        let mut tx = vec![0.0; n];
        let mut done = false;
        for _ in 0..6 {
            self.shifted_solve(sigma, &mut x, &mut work);
            let nrm = dot(&x, &x).sqrt();
            if !nrm.is_finite() || nrm == 0.0 {
                return None;
            }
            x.iter_mut().for_each(|v| *v /= nrm);
            self.apply(&x, &mut tx);
            let rq = dot(&x, &tx);
            let resid: f64 = tx.iter().zip(&x).map(|(t, v)| (t - rq * v).powi(2)).sum::<f64>().sqrt();
            sigma = rq;
            if resid <= 1e-13 * scale {
                done = true;
                break;
            }
        }
        if !done {
            return None;
        }
        let eta = 1e-9 * scale;
        if self.sturm_count(sigma - eta) != 0 || self.sturm_count(sigma + eta) != 1 {
            return None;
        }
        Some((sigma, x))
    }
}

#[derive(Debug, Default)]
struct LuWork {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    l: Vec<f64>,
    piv: Vec<bool>,
}

impl LuWork {
    fn resize(&mut self, n: usize) {
        self.u0.resize(n, 0.0);
        self.u1.resize(n, 0.0);
        self.u2.resize(n, 0.0);
        self.l.resize(n, 0.0);
        self.piv.resize(n, false);
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Parity blocks of a mirror-symmetric tridiagonal matrix of even size
/// with constant off-diagonal: `(even, odd)` acting on the right half.
pub fn parity_blocks(diag: &[f64], off: f64) -> Option<(SymTridiag, SymTridiag)> {
    let n = diag.len();
    if n < 4 || n % 2 != 0 {
        return None;
    }
    let m = n / 2;
    if (0..m).any(|i| diag[i] != diag[n - 1 - i]) {
        return None;
    }
    Some(parity_blocks_from_half(diag[m..].to_vec(), off))
}

/// Parity blocks built directly from the right half of a mirror-symmetric
/// diagonal, `diag_half[0]` being the entry just right of the center.
pub fn parity_blocks_from_half(diag_half: Vec<f64>, off: f64) -> (SymTridiag, SymTridiag) {
    let m = diag_half.len();
    let offs = vec![off; m.saturating_sub(1)];
    let mut even = diag_half.clone();
    even[0] += off;
    let mut odd = diag_half;
    odd[0] -= off;
    (
        SymTridiag { diag: even, off: offs.clone() },
        SymTridiag { diag: odd, off: offs },
    )
}

/// Rebuilds a full-grid vector from its right half with the given parity.
pub fn unfold_half(half: &[f64], odd: bool) -> Vec<f64> {
    let m = half.len();
    let mut out = Vec::with_capacity(2 * m);
    let s = if odd { -1.0 } else { 1.0 };
    out.extend(half.iter().rev().map(|v| s * v));
    out.extend_from_slice(half);
    out
}

/// Reusable complex Thomas solver for `A x = d` where `A` has a constant
/// off-diagonal `c` on both sides and diagonal `diag`.
#[derive(Debug, Default)]
pub struct ComplexThomas {
    cprime: Vec<Complex64>,
}

impl ComplexThomas {
    /// Solves in place: `rhs` is overwritten with the solution. The matrix
    /// must be diagonally dominant; no pivoting is done.
    pub fn solve(&mut self, diag: &[Complex64], c: Complex64, rhs: &mut [Complex64]) {
        let n = diag.len();
        self.cprime.resize(n, Complex64::new(0.0, 0.0));
        let mut denom = diag[0];
        self.cprime[0] = c / denom;
        rhs[0] /= denom;
        for i in 1..n {
            denom = diag[i] - c * self.cprime[i - 1];
            self.cprime[i] = c / denom;
            rhs[i] = (rhs[i] - c * rhs[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            rhs[i] = rhs[i] - self.cprime[i] * rhs[i + 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn random_tridiag(n: usize, seed: u64) -> SymTridiag {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let diag = (0..n).map(|_| next() * 3.0).collect();
        let off = (0..n - 1).map(|_| next()).collect();
        SymTridiag::new(diag, off).unwrap()
    }

    fn dense(t: &SymTridiag) -> DMatrix<f64> {
        let n = t.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                t.diag[i]
            } else if i + 1 == j {
                t.off[i]
            } else if j + 1 == i {
                t.off[j]
            } else {
                0.0
            }
        })
    }

    #[test]
    fn matches_dense_eigensolver() {
        for seed in 1..6 {
            let t = random_tridiag(40, seed);
            let mut reference: Vec<f64> = dense(&t).symmetric_eigen().eigenvalues.iter().copied().collect();
            reference.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let (vals, vecs) = t.lowest_eigenpairs(6).unwrap();
            for (v, r) in vals.iter().zip(&reference) {
                assert!((v - r).abs() < 1e-12, "{v} vs {r}");
            }
            let mut y = vec![0.0; 40];
            for (v, x) in vals.iter().zip(&vecs) {
                t.apply(x, &mut y);
                let r: f64 = y.iter().zip(x).map(|(a, b)| (a - v * b).powi(2)).sum::<f64>().sqrt();
                assert!(r < 1e-11);
            }
            for i in 0..6 {
                for j in 0..6 {
                    let d = dot(&vecs[i], &vecs[j]);
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((d - e).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn discrete_laplacian_spectrum() {
        // Eigenvalues of tridiag(-1, 2, -1) are 2 - 2 cos(k pi / (n + 1)).
        let n = 500;
        let t = SymTridiag::new(vec![2.0; n], vec![-1.0; n - 1]).unwrap();
        let (vals, _) = t.lowest_eigenpairs(4).unwrap();
        for (k, v) in vals.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-14, "{v} {exact}");
        }
    }

    #[test]
    fn degenerate_blocks_get_orthogonal_vectors() {
        // Two decoupled copies of the same chain: every eigenvalue is double.
        let mut off = vec![-1.0; 19];
        off[9] = 0.0;
        let t = SymTridiag::new(vec![2.0; 20], off).unwrap();
        let (vals, vecs) = t.lowest_eigenpairs(2).unwrap();
        assert!((vals[0] - vals[1]).abs() < 1e-13);
        assert!(dot(&vecs[0], &vecs[1]).abs() < 1e-10);
    }

    #[test]
    fn sturm_count_brackets() {
        let t = random_tridiag(30, 9);
        let (lo, hi) = t.gershgorin();
        assert_eq!(t.sturm_count(lo - 1.0), 0);
        assert_eq!(t.sturm_count(hi + 1.0), 30);
    }

    #[test]
    fn parity_blocks_reproduce_full_spectrum() {
        let n = 64;
        let diag: Vec<f64> = (0..n)
            .map(|i| {
                let x = (i as f64 - 31.5) / 10.0;
                2.0 + 0.5 * x * x + 3.0 * (-x * x).exp()
            })
            .collect();
        let full = SymTridiag::new(diag.clone(), vec![-1.0; n - 1]).unwrap();
        let (fv, fvec) = full.lowest_eigenpairs(2).unwrap();
        let (even, odd) = parity_blocks(&diag, -1.0).unwrap();
        let (ev, evec) = even.lowest_eigenpairs(1).unwrap();
        let (ov, ovec) = odd.lowest_eigenpairs(1).unwrap();
        assert!((ev[0] - fv[0]).abs() < 1e-12);
        assert!((ov[0] - fv[1]).abs() < 1e-12);
        let g = unfold_half(&evec[0], false);
        let e = unfold_half(&ovec[0], true);
        // The unfolded halves have norm sqrt(2) and are parallel to the
        // full-problem vectors.
        assert!((dot(&g, &fvec[0]).abs() - 2f64.sqrt()).abs() < 1e-9);
        assert!((dot(&e, &fvec[1]).abs() - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn warm_start_finds_the_lowest_level() {
        let n = 200;
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + ((i as f64 - 99.5) / 30.0).powi(2)).collect();
        let t = SymTridiag::new(diag, vec![-1.0; n - 1]).unwrap();
        let (vals, vecs) = t.lowest_eigenpairs(2).unwrap();
        let mut guess = vecs[0].clone();
        guess.iter_mut().enumerate().for_each(|(i, v)| *v += 1e-3 * (i as f64 * 0.1).sin());
        let (v, x) = t.lowest_from_guess(&guess).unwrap();
        assert!((v - vals[0]).abs() < 1e-12);
        assert!((dot(&x, &vecs[0]).abs() - 1.0).abs() < 1e-12);
        // Starting on the first excited level is detected and refused.
        assert!(t.lowest_from_guess(&vecs[1]).is_none());
    }

    #[test]
    fn asymmetric_diagonal_has_no_parity_blocks() {
        assert!(parity_blocks(&[1.0, 2.0, 3.0, 4.0], -1.0).is_none());
        assert!(parity_blocks(&[1.0, 2.0, 1.0], -1.0).is_none());
    }

    #[test]
    fn complex_thomas_matches_dense() {
        let n = 12;
        let c = Complex64::new(0.0, -0.3);
        let diag: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0, 0.7 + 0.1 * i as f64)).collect();
        let x: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0 - i as f64 * 0.5)).collect();
        let mut rhs: Vec<Complex64> = (0..n)
            .map(|i| {
                let mut v = diag[i] * x[i];
                if i > 0 {
                    v += c * x[i - 1];
                }
                if i + 1 < n {
                    v += c * x[i + 1];
                }
                v
            })
            .collect();
        ComplexThomas::default().solve(&diag, c, &mut rhs);
        for (a, b) in rhs.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
