//! Derivative-free minimizers.

/// Outcome of a Nelder-Mead run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexResult {
    pub argmin: [f64; 2],
    pub value: f64,
    pub evals: usize,
    /// False when the evaluation budget ran out before the spread test passed.
    pub converged: bool,
}

/// Nelder-Mead in two dimensions with reflection 1, expansion 2,
/// contraction 0.5 and shrink 0.5.
///
/// The initial simplex is `start`, `start + scale[0] e0`, `start + scale[1] e1`.
/// Infinite objective values act as walls. The run stops when the spread of
/// vertex values drops below `tol`, when the simplex has collapsed to
/// rounding level, or after `max_evals` evaluations.
pub fn nelder_mead<F>(mut f: F, start: [f64; 2], scale: [f64; 2], tol: f64, max_evals: usize) -> SimplexResult
where
    F: FnMut([f64; 2]) -> f64,
{
    let mut evals = 0;
    let mut eval = |x: [f64; 2], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut pts = [
        start,
        [start[0] + scale[0], start[1]],
        [start[0], start[1] + scale[1]],
    ];
    let mut vals = [0.0; 3];
    for i in 0..3 {
        vals[i] = eval(pts[i], &mut evals);
    }
    let lerp = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    loop {
        // Sort ascending by value; the stable sort keeps ties in order.
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
        pts = [pts[idx[0]], pts[idx[1]], pts[idx[2]]];
        vals = [vals[idx[0]], vals[idx[1]], vals[idx[2]]];

        let spread = vals[2] - vals[0];
        if spread.is_finite() && spread < tol {
            return SimplexResult { argmin: pts[0], value: vals[0], evals, converged: true };
        }
        let size = (0..2)
            .map(|d| {
                let lo = pts.iter().map(|p| p[d]).fold(f64::INFINITY, f64::min);
                let hi = pts.iter().map(|p| p[d]).fold(f64::NEG_INFINITY, f64::max);
                (hi - lo) / pts[0][d].abs().max(1.0)
            })
            .fold(0.0, f64::max);
        if size < 1e-14 {
            return SimplexResult { argmin: pts[0], value: vals[0], evals, converged: vals[2].is_finite() };
        }
        if evals >= max_evals {
            return SimplexResult { argmin: pts[0], value: vals[0], evals, converged: false };
        }

        let centroid = lerp(pts[0], pts[1], 0.5);
        let xr = lerp(centroid, pts[2], -1.0);
        let fr = eval(xr, &mut evals);
        if fr < vals[0] {
            let xe = lerp(centroid, pts[2], -2.0);
            let fe = eval(xe, &mut evals);
            if fe < fr {
                pts[2] = xe;
                vals[2] = fe;
            } else {
                pts[2] = xr;
                vals[2] = fr;
            }
            continue;
        }
        if fr < vals[1] {
            pts[2] = xr;
            vals[2] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[2] {
            let xc = lerp(centroid, xr, 0.5);
            (xc, eval(xc, &mut evals))
        } else {
            let xc = lerp(centroid, pts[2], 0.5);
            (xc, eval(xc, &mut evals))
        };
        if fc < vals[2].min(fr) {
            pts[2] = xc;
            vals[2] = fc;
            continue;
        }
        for i in 1..3 {
            pts[i] = lerp(pts[0], pts[i], 0.5);
            vals[i] = eval(pts[i], &mut evals);
        }
    }
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub fn golden_section<F>(mut f: F, mut a: f64, mut b: f64, tol: f64, max_evals: usize) -> (f64, f64, usize)
where
    F: FnMut(f64) -> f64,
{
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evals = 2;
    while (b - a).abs() > tol * (a.abs() + b.abs()).max(f64::MIN_POSITIVE) && evals < max_evals {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        evals += 1;
    }
    if fc <= fd {
        (c, fc, evals)
    } else {
        (d, fd, evals)
    }
}
