use std::sync::Arc;

use varfrac::solver::{solve_with, vie_residual, vie_residual_with, ClosureRhs, FTerm, SolveOptions};
use varfrac::specialfns::{gamma, mittag_leffler, MLParams};
use varfrac::{gauss_nodes, make_mesh, make_sine_order, solve, BuiltinRhs, NewtonConfig, Problem, VariableOrder};

fn half_order() -> VariableOrder {
    VariableOrder::constant(0.5, 1.0).unwrap()
}

fn exact_unit_source(t: f64) -> f64 {
    1.0 + t.sqrt() / gamma(1.5).unwrap()
}

#[test]
fn zero_source_preserves_the_initial_value() {
    let rule = gauss_nodes(80).unwrap();
    for (a0, a1, r) in [(0.6, 0.1, 1.0), (0.6, 0.1, 1.0 / 0.6), (0.3, 0.1, 1.0), (1.0, 0.1, 1.0)] {
        let p = Problem::builtin(BuiltinRhs::Zero, 1.0, 1.0, make_sine_order(a0, a1).unwrap()).unwrap();
        let s = solve(&p, &make_mesh(1.0, 96, r).unwrap(), &rule, &NewtonConfig::default()).unwrap();
        let worst = s.values().iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-8, "({a0},{a1}) r {r}: {worst:e}");
    }
}

#[test]
fn unit_source_tracks_the_closed_form() {
    let rule = gauss_nodes(80).unwrap();
    let p = Problem::builtin(BuiltinRhs::Constant(1.0), 1.0, 1.0, half_order()).unwrap();
    let mesh = make_mesh(1.0, 64, 2.0).unwrap();
    let s = solve(&p, &mesh, &rule, &NewtonConfig::default()).unwrap();
    // f is constant, so the product integration is exact.
    for (t, u) in mesh.nodes().iter().zip(s.values()) {
        assert!((u - exact_unit_source(*t)).abs() <= 1e-13, "t {t}");
    }
}

#[test]
fn relaxation_tracks_mittag_leffler() {
    let rule = gauss_nodes(80).unwrap();
    let p = Problem::builtin(BuiltinRhs::Linear(-1.0), 1.0, 1.0, half_order()).unwrap();
    let ml = MLParams::new(0.5, 1.0).unwrap();
    let mut last = f64::INFINITY;
    for n in [60usize, 120, 240] {
        let mesh = make_mesh(1.0, n, 2.0).unwrap();
        let s = solve(&p, &mesh, &rule, &NewtonConfig::default()).unwrap();
        let err = mesh
            .nodes()
            .iter()
            .zip(s.values())
            .map(|(t, u)| (u - mittag_leffler(&ml, -t.sqrt()).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(err < last / 3.0, "N {n}: {err:e} after {last:e}");
        last = err;
    }
    assert!(last <= 1e-4, "{last:e}");
}

#[test]
fn quadrature_f_term_agrees_with_moments() {
    let rule = gauss_nodes(80).unwrap();
    let p = Problem::builtin(BuiltinRhs::Sin4, 1.0, 1.0, make_sine_order(0.6, 0.4).unwrap()).unwrap();
    let mesh = make_mesh(1.0, 48, 1.0 / 0.6).unwrap();
    let a = solve_with(&p, &mesh, &rule, &SolveOptions::default()).unwrap();
    let b = solve_with(&p, &mesh, &rule, &SolveOptions { f_term: FTerm::Quadrature, ..Default::default() }).unwrap();
    let diff = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(diff <= 1e-4, "{diff:e}");
    // Constant f: both discretizations integrate the weight exactly.
    let p = Problem::builtin(BuiltinRhs::Constant(1.0), 1.0, 1.0, half_order()).unwrap();
    let b = solve_with(&p, &mesh, &rule, &SolveOptions { f_term: FTerm::Quadrature, ..Default::default() }).unwrap();
    for (t, u) in mesh.nodes().iter().zip(b.values()) {
        assert!((u - exact_unit_source(*t)).abs() <= 1e-6, "t {t}");
    }
}

#[test]
fn residual_of_exact_solutions() {
    let rule = gauss_nodes(80).unwrap();
    let p = Problem::builtin(BuiltinRhs::Constant(1.0), 1.0, 1.0, half_order()).unwrap();
    for t in [0.013, 0.4, 0.77, 1.0] {
        let r = vie_residual_with(&p, &exact_unit_source, &[], t, &rule).unwrap();
        assert!(r.abs() <= 1e-6, "t {t}: {r:e}");
    }
    let p = Problem::builtin(BuiltinRhs::Zero, 1.0, 1.0, make_sine_order(0.6, 0.1).unwrap()).unwrap();
    for t in [0.05, 0.31, 0.9, 1.0] {
        let r = vie_residual_with(&p, &|_| 1.0, &[], t, &rule).unwrap();
        assert!(r.abs() <= 1e-8, "t {t}: {r:e}");
    }
}

#[test]
fn residual_at_collocation_nodes_is_small() {
    let rule = gauss_nodes(80).unwrap();
    let p = Problem::builtin(BuiltinRhs::Sin4, 1.0, 1.0, make_sine_order(0.6, 0.4).unwrap()).unwrap();
    let mesh = make_mesh(1.0, 40, 1.0).unwrap();
    // With f sampled by quadrature the collocation equation is the VIE at the node.
    let quad = solve_with(&p, &mesh, &rule, &SolveOptions { f_term: FTerm::Quadrature, ..Default::default() }).unwrap();
    // Product integration adds the O(τ²) interpolation error of f.
    let moments = solve(&p, &mesh, &rule, &NewtonConfig::default()).unwrap();
    for n in [1usize, 9, 25, 40] {
        let r = vie_residual(&p, &quad, mesh.node(n), &rule).unwrap();
        assert!(r.abs() <= 1e-8, "n {n}: {r:e}");
        let r = vie_residual(&p, &moments, mesh.node(n), &rule).unwrap();
        assert!(r.abs() <= 1e-4, "n {n}: {r:e}");
    }
    let off = vie_residual(&p, &quad, 0.5 * (mesh.node(20) + mesh.node(21)), &rule).unwrap();
    assert!(off.abs() <= 1e-3 && off != 0.0, "{off:e}");
}

#[test]
fn newton_counts_and_boundedness_on_benchmark_settings() {
    let rule = gauss_nodes(80).unwrap();
    for (a0, a1) in [(1.0, 0.8), (0.6, 0.4), (0.4, 0.2)] {
        let o = make_sine_order(a0, a1).unwrap();
        let p = Problem::builtin(BuiltinRhs::Sin4, 1.0, 1.0, o.clone()).unwrap();
        let grades = if a0 < 1.0 { vec![1.0, 1.0 / a0] } else { vec![1.0] };
        for r in grades {
            let mut maxes = Vec::new();
            for n in [48usize, 96, 192] {
                let s = solve(&p, &make_mesh(1.0, n, r).unwrap(), &rule, &NewtonConfig::default()).unwrap();
                assert!(s.max_newton_iterations() <= 10);
                // M = |u0| + max|f(0, ·)| = 1
                maxes.push(s.max_abs());
            }
            let spread = maxes.iter().fold(0.0f64, |m, v| m.max(*v)) - maxes.iter().fold(f64::MAX, |m, v| m.min(*v));
            assert!(maxes.iter().all(|m| *m <= 3.0) && spread <= 1e-3, "{maxes:?}");
        }
    }
}

#[test]
fn custom_right_hand_side() {
    let rule = gauss_nodes(40).unwrap();
    let rhs = ClosureRhs::new(Arc::new(|u, _| -u), Arc::new(|_, _| -1.0));
    let p = Problem::new(Arc::new(rhs), 1.0, 1.0, half_order()).unwrap();
    let q = Problem::builtin(BuiltinRhs::Linear(-1.0), 1.0, 1.0, half_order()).unwrap();
    let mesh = make_mesh(1.0, 20, 2.0).unwrap();
    let a = solve(&p, &mesh, &rule, &NewtonConfig::default()).unwrap();
    let b = solve(&q, &mesh, &rule, &NewtonConfig::default()).unwrap();
    assert_eq!(a.values(), b.values());
}
