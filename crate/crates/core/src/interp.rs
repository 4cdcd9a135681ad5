//! Shape-preserving piecewise cubic Hermite interpolation (Fritsch-Carlson
//! slopes, as in PCHIP).

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::InvalidParams("interpolation needs >= 2 matching samples".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams("interpolation abscissae must increase strictly".into()));
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let d: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut m = vec![0.0; n];
        if n == 2 {
            m[0] = d[0];
            m[1] = d[0];
        } else {
            for i in 1..n - 1 {
                if d[i - 1] * d[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
                }
            }
            m[0] = end_slope(h[0], h[1], d[0], d[1]);
            m[n - 1] = end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
        }
        Ok(Self { xs, ys, slopes: m })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let i = match self.xs.partition_point(|&v| v <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1]
    }
}

/// One-sided three-point end slope with the usual shape safeguards.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes() {
        let xs = vec![0.0, 1.0, 2.5, 3.0, 5.0];
        let ys = vec![1.0, 2.0, 2.0, -1.0, 4.0];
        let c = MonotoneCubic::new(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(c.eval(*x), *y);
        }
    }

    #[test]
    fn exact_for_lines() {
        let xs: Vec<f64> = (0..7).map(|i| i as f64 * 0.3).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let c = MonotoneCubic::new(xs, ys).unwrap();
        for k in 0..50 {
            let x = k as f64 * 1.8 / 49.0;
            assert!((c.eval(x) - (2.0 * x - 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn preserves_monotonicity() {
        let xs = vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let ys = vec![0.0, 0.0, 0.1, 5.0, 5.1, 5.1];
        let c = MonotoneCubic::new(xs, ys).unwrap();
        let mut prev = c.eval(0.0);
        for k in 1..=500 {
            let v = c.eval(k as f64 * 0.01);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
        // no overshoot on flat pieces
        assert!(c.eval(0.5).abs() < 1e-15);
        assert!(c.eval(4.5) <= 5.1 + 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(MonotoneCubic::new(vec![0.0], vec![1.0]).is_err());
        assert!(MonotoneCubic::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
    }
}
