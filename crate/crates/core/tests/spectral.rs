use demuxforge_core::spectral::{
    extract_controls, extract_controls_detailed, lr_basis, potential, solve_stationary, Extractor, Hamiltonian,
    PotentialParams, SpatialGrid,
};
use demuxforge_core::units::{hz, hz_energy, HBAR, RB87_MASS};
use demuxforge_core::Error;

const D_L: f64 = 5.18e-6;

fn params(omega: f64, v0: f64, dx: f64) -> PotentialParams {
    PotentialParams { mass: RB87_MASS, omega, v0, dx_shift: dx, d_l: D_L }
}

fn osc_length(omega: f64) -> f64 {
    (HBAR / (RB87_MASS * omega)).sqrt()
}

/// Lowest-order finite-difference shift of harmonic levels, in units of
/// `hbar omega`, with the spacing `h` in oscillator lengths.
fn fd_shift(n: usize, h: f64) -> f64 {
    let n = n as f64;
    -h * h * (2.0 * n * n + 2.0 * n + 1.0) / 32.0
}

#[test]
fn potential_examples() {
    let p = params(hz(78.0), hz_energy(300.0), 100e-9);
    let x = p.dx_shift;
    let expected = 0.5 * p.mass * p.omega.powi(2) * x * x + p.v0;
    assert!((potential(x, &p) - expected).abs() <= 1e-15 * expected);
    let x = p.dx_shift + 0.5 * D_L;
    let expected = 0.5 * p.mass * p.omega.powi(2) * x * x;
    assert!((potential(x, &p) - expected).abs() <= 1e-12 * expected);
    let q = params(hz(78.0), 0.0, 0.0);
    let expected = 0.5 * RB87_MASS * q.omega.powi(2) * 4e-12;
    assert!((potential(2e-6, &q) - expected).abs() <= 1e-15 * expected);
}

#[test]
fn harmonic_spectrum_matches_finite_difference_oracle() {
    let w = hz(78.0);
    let a0 = osc_length(w);
    let grid = SpatialGrid::new(-10.0 * a0, 10.0 * a0, 1024).unwrap();
    let h = grid.spacing() / a0;
    let sol = solve_stationary(&params(w, 0.0, 0.0), grid, 4).unwrap();
    for (n, e) in sol.energies.iter().enumerate() {
        let exact = n as f64 + 0.5;
        let fd = exact + fd_shift(n, h);
        let got = e / (HBAR * w);
        assert!(((got - fd) / exact).abs() < 1e-7, "level {n}: {got} vs {fd}");
        // This grid is coarse enough that the discretization shift is visible.
        assert!(((got - exact) / exact).abs() < 1e-4);
    }
}

#[test]
fn harmonic_spectrum_on_default_grid() {
    let w = hz(78.0);
    let sol = solve_stationary(&params(w, 0.0, 0.0), SpatialGrid::default(), 4).unwrap();
    for (n, e) in sol.energies.iter().enumerate() {
        let exact = n as f64 + 0.5;
        let rel = (e / (HBAR * w) - exact) / exact;
        assert!(rel.abs() < 1e-5, "level {n}: relative error {rel:e}");
    }
}

#[test]
fn node_counts_and_parity() {
    let w = hz(78.0);
    let grid = SpatialGrid::default();
    let sol = solve_stationary(&params(w, 0.0, 0.0), grid, 4).unwrap();
    for (n, s) in sol.states.iter().enumerate() {
        let peak = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let significant: Vec<f64> = s.iter().copied().filter(|v| v.abs() > 1e-6 * peak).collect();
        let nodes = significant.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
        assert_eq!(nodes, n);
        let m = s.len();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let asym = (0..m).map(|i| (s[i] - sign * s[m - 1 - i]).abs()).fold(0.0, f64::max);
        assert!(asym < 1e-9 * peak, "level {n} parity defect {asym:e}");
    }
}

#[test]
fn states_are_orthonormal() {
    let grid = SpatialGrid::default();
    let sol = solve_stationary(&params(hz(40.0), hz_energy(400.0), 100e-9), grid, 6).unwrap();
    for i in 0..6 {
        for j in 0..6 {
            let d = grid.inner(&sol.states[i], &sol.states[j]);
            let e = if i == j { 1.0 } else { 0.0 };
            assert!((d - e).abs() < 1e-10, "<{i}|{j}> = {d}");
        }
    }
    assert!(sol.energies.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn doublet_splitting_shrinks_with_lattice_depth() {
    let grid = SpatialGrid::default();
    let mut prev = f64::INFINITY;
    for f in [100.0, 200.0, 400.0, 800.0] {
        let sol = solve_stationary(&params(hz(40.0), hz_energy(f), 0.0), grid, 2).unwrap();
        let split = sol.energies[1] - sol.energies[0];
        assert!(split < prev, "splitting grew at V0 = h*{f} Hz");
        prev = split;
    }
}

#[test]
fn deep_lattice_localizes_lr_states() {
    let grid = SpatialGrid::default();
    let w = hz(40.0);
    let p = params(w, hz_energy(600.0), 0.0);
    let sol = solve_stationary(&p, grid, 2).unwrap();
    assert!(sol.energies[1] - sol.energies[0] < 0.01 * HBAR * w);
    let b = lr_basis(&p, grid).unwrap();
    let right: f64 = (0..grid.n_points)
        .filter(|&i| grid.x(i) > 0.0)
        .map(|i| b.r[i] * b.r[i])
        .sum::<f64>()
        * grid.spacing();
    assert!(right > 0.95, "right weight {right}");
    assert!(grid.inner(&b.l, &b.r).abs() < 1e-10);
    let mid = 0.5 * (sol.energies[0] + sol.energies[1]);
    assert!((b.lambda_shift - mid).abs() < 1e-10 * mid);
}

#[test]
fn lr_states_orthonormal_with_bias() {
    let grid = SpatialGrid::default();
    let b = lr_basis(&params(hz(50.0), hz_energy(300.0), 200e-9), grid).unwrap();
    assert!(grid.inner(&b.l, &b.r).abs() < 1e-10);
    assert!((grid.inner(&b.l, &b.l) - 1.0).abs() < 1e-10);
    assert!((grid.inner(&b.r, &b.r) - 1.0).abs() < 1e-10);
    assert!(b.e_plus > b.e_minus);
}

#[test]
fn harmonic_extraction_gives_trap_frequency() {
    let w = hz(78.0);
    let a0 = osc_length(w);
    // Fine grid: the finite-difference error of the gap is h^2/8 relative.
    let grid = SpatialGrid::new(-8.0 * a0, 8.0 * a0, 8192).unwrap();
    let c = extract_controls(&params(w, 0.0, 0.0), grid).unwrap();
    assert!((c.delta - w).abs() < 1e-6 * w, "delta {} vs {w}", c.delta);
    assert!(c.lambda.abs() < 1e-6 * w);
}

#[test]
fn symmetric_trap_has_no_bias() {
    let grid = SpatialGrid::default();
    let w0 = hz(78.0);
    for f in [0.0, 100.0, 500.0] {
        let c = extract_controls(&params(hz(30.0), hz_energy(f), 0.0), grid).unwrap();
        assert!(c.lambda.abs() < 1e-8 * w0, "lambda {} at V0 = h*{f}", c.lambda);
        assert!(c.delta > 0.0);
    }
}

#[test]
fn positive_shift_lowers_the_left_well() {
    let c = extract_controls(&params(hz(30.0), hz_energy(500.0), 100e-9), SpatialGrid::default()).unwrap();
    assert!(c.lambda > 0.0);
}

#[test]
fn detailed_extraction_agrees_with_fast_path() {
    let grid = SpatialGrid::default();
    for (f, v, dx) in [(78.0, 0.0, 0.0), (40.0, 300.0, 100e-9), (25.0, 600.0, 200e-9)] {
        let p = params(hz(f), hz_energy(v), dx);
        let r = extract_controls_detailed(&p, grid).unwrap();
        let fast = extract_controls(&p, grid).unwrap();
        assert!((r.controls.delta - fast.delta).abs() < 1e-6);
        assert!((r.controls.lambda - fast.lambda).abs() < 1e-6);
        assert!((r.h_lr - r.h_rl).abs() < 1e-6);
        let avg = 0.5 * (r.lambda_from_r + r.lambda_from_l);
        assert!((avg - r.controls.lambda).abs() < 1e-6 * r.controls.lambda.abs().max(1.0));
    }
}

#[test]
fn hamiltonian_is_symmetric_on_the_grid() {
    let grid = SpatialGrid::default();
    let h = Hamiltonian::new(&params(hz(40.0), hz_energy(300.0), 100e-9), grid).unwrap();
    let n = grid.n_points;
    let u: Vec<f64> = (0..n).map(|i| ((i * 7919) % 1013) as f64 / 1013.0 - 0.5).collect();
    let v: Vec<f64> = (0..n).map(|i| ((i * 104729) % 997) as f64 / 997.0 - 0.5).collect();
    let a = h.matrix_element(&u, &v);
    let b = h.matrix_element(&v, &u);
    assert!((a - b).abs() < 1e-10 * a.abs().max(b.abs()));
}

#[test]
fn narrow_grid_is_rejected() {
    let grid = SpatialGrid::new(-3e-6, 3e-6, 512).unwrap();
    let err = solve_stationary(&params(hz(78.0), 0.0, 0.0), grid, 4).unwrap_err();
    assert!(matches!(err, Error::GridTooNarrow { .. }), "{err}");
}

#[test]
fn grid_refinement_changes_levels_little() {
    let coarse = SpatialGrid::default();
    let fine = SpatialGrid { n_points: 2 * coarse.n_points, ..coarse };
    let points = [
        params(hz(78.0), 0.0, 100e-9),
        params(hz(30.0), hz_energy(500.0), 100e-9),
        params(hz(20.0), hz_energy(800.0), 100e-9),
        params(hz(60.0), hz_energy(800.0), 200e-9),
    ];
    for p in points {
        let a = solve_stationary(&p, coarse, 2).unwrap();
        let b = solve_stationary(&p, fine, 2).unwrap();
        for k in 0..2 {
            let rel = (a.energies[k] - b.energies[k]).abs() / b.energies[k];
            assert!(rel < 1e-6, "level {k}: {rel:e}");
        }
    }
}

#[test]
fn extractor_reuses_profile() {
    let grid = SpatialGrid::default();
    let mut ex = Extractor::new(grid, RB87_MASS, D_L, 100e-9).unwrap();
    let p = params(hz(35.0), hz_energy(250.0), 100e-9);
    let a = ex.extract(p.omega, p.v0).unwrap();
    let b = extract_controls(&p, grid).unwrap();
    assert_eq!(a, b);
    assert!(ex.extract(-1.0, 0.0).is_err());
}

#[test]
fn sign_continuity_along_a_path() {
    let grid = SpatialGrid::default();
    let mut prev: Option<Vec<Vec<f64>>> = None;
    for i in 0..8 {
        let f = 78.0 - 6.0 * i as f64;
        let v = 60.0 * i as f64;
        let sol = solve_stationary(&params(hz(f), hz_energy(v), 100e-9), grid, 2).unwrap();
        if let Some(p) = &prev {
            for k in 0..2 {
                assert!(grid.inner(&p[k], &sol.states[k]) > 0.0, "level {k} flipped at step {i}");
            }
        }
        prev = Some(sol.states);
    }
}
