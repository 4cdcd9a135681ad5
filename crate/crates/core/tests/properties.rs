use demuxforge_core::interp::MonotoneCubic;
use demuxforge_core::model2l::{
    design_curve, eigensystem_2l, hamiltonian_2l, step_2l, DesignParams, TwoLevelControls, TwoLevelState,
};
use demuxforge_core::tridiag::SymTridiag;
use demuxforge_core::units::HBAR;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use proptest::prelude::*;

fn apply(h: &[[Complex64; 2]; 2], s: &TwoLevelState) -> (Complex64, Complex64) {
    (h[0][0] * s.r + h[0][1] * s.l, h[1][0] * s.r + h[1][1] * s.l)
}

fn state() -> impl Strategy<Value = TwoLevelState> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("nonzero", |(a, b, c, d)| a * a + b * b + c * c + d * d > 1e-3)
        .prop_map(|(a, b, c, d)| {
            let n = (a * a + b * b + c * c + d * d).sqrt();
            TwoLevelState::new(Complex64::new(a / n, b / n), Complex64::new(c / n, d / n)).unwrap()
        })
}

proptest! {
    #[test]
    fn eigenvectors_diagonalize_the_hamiltonian(delta in -500.0..500.0f64, lambda in -500.0..500.0f64) {
        prop_assume!(delta.hypot(lambda) > 1e-6);
        let c = TwoLevelControls::new(delta, lambda);
        let es = eigensystem_2l(c).unwrap();
        let h = hamiltonian_2l(c);
        for (e, v) in [(es.e_minus, es.psi_minus), (es.e_plus, es.psi_plus)] {
            let (hr, hl) = apply(&h, &v);
            let scale = HBAR * c.splitting();
            prop_assert!((hr - v.r * e).norm() <= 1e-12 * scale);
            prop_assert!((hl - v.l * e).norm() <= 1e-12 * scale);
        }
        prop_assert!((0.0..=std::f64::consts::PI).contains(&es.alpha));
    }

    #[test]
    fn two_level_steps_are_unitary_and_compose(
        psi in state(),
        delta in -500.0..500.0f64,
        lambda in -500.0..500.0f64,
        t1 in 0.0..0.05f64,
        t2 in 0.0..0.05f64,
    ) {
        let c = TwoLevelControls::new(delta, lambda);
        let split = step_2l(&step_2l(&psi, c, t1), c, t2);
        let whole = step_2l(&psi, c, t1 + t2);
        prop_assert!((split.norm_sqr() - 1.0).abs() < 1e-12);
        prop_assert!((split.r - whole.r).norm() < 1e-10);
        prop_assert!((split.l - whole.l).norm() < 1e-10);
    }

    #[test]
    fn monotone_data_gives_monotone_interpolant(steps in prop::collection::vec((0.01..1.0f64, 0.0..2.0f64), 2..30)) {
        let mut xs = vec![0.0];
        let mut ys = vec![0.0];
        for (dx, dy) in &steps {
            xs.push(xs.last().unwrap() + dx);
            ys.push(ys.last().unwrap() + dy);
        }
        let f = MonotoneCubic::new(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            prop_assert!((f.eval(*x) - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
        let n = 400;
        let last = *xs.last().unwrap();
        let mut prev = f.eval(0.0);
        for i in 1..=n {
            let v = f.eval(last * i as f64 / n as f64);
            prop_assert!(v >= prev - 1e-12, "{v} < {prev}");
            prev = v;
        }
    }

    #[test]
    fn sturm_counts_match_dense_eigenvalues(
        diag in prop::collection::vec(-10.0..10.0f64, 3..25),
        off_seed in prop::collection::vec(-3.0..3.0f64, 24),
        k_frac in 0.0..1.0f64,
    ) {
        let n = diag.len();
        let off: Vec<f64> = off_seed[..n - 1].iter().map(|v| if v.abs() < 1e-3 { 1e-3 } else { *v }).collect();
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == j { diag[i] } else if i + 1 == j { off[i] } else if j + 1 == i { off[j] } else { 0.0 }
        });
        let mut dense = SymmetricEigen::new(m).eigenvalues.as_slice().to_vec();
        dense.sort_by(f64::total_cmp);
        let t = SymTridiag::new(diag, off).unwrap();
        let probe = dense[0] - 1.0 + k_frac * (dense[n - 1] - dense[0] + 2.0);
        let below = dense.iter().filter(|e| **e < probe).count();
        let gap = dense.iter().map(|e| (e - probe).abs()).fold(f64::INFINITY, f64::min);
        prop_assume!(gap > 1e-9);
        prop_assert_eq!(t.sturm_count(probe), below);
        let k = ((n - 1) as f64 * k_frac) as usize;
        let (vals, _) = t.lowest_eigenpairs(k + 1).unwrap();
        prop_assert!((vals[k] - dense[k]).abs() <= 1e-9 * (1.0 + dense[k].abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn designed_curves_hit_their_endpoints(
        f0 in 50.0..100.0f64,
        lambda_f in 5.0..300.0f64,
        dlambda0 in 5.0..300.0f64,
        tf in 0.05..0.5f64,
    ) {
        let omega0 = 2.0 * std::f64::consts::PI * f0;
        let p = DesignParams { omega0, lambda_f, dlambda0, tf, n_samples: 401 };
        let (_, curve) = design_curve(&p).unwrap();
        let last = curve.len() - 1;
        prop_assert_eq!(curve.delta[0], omega0);
        prop_assert_eq!(curve.lambda[0], 0.0);
        prop_assert_eq!(curve.delta[last], 0.0);
        prop_assert_eq!(curve.lambda[last], lambda_f);
        prop_assert!(curve.times.windows(2).all(|w| w[1] > w[0]));
    }
}
