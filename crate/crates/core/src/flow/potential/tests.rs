use super::*;
use crate::fields::curvature::ricci;
use crate::fields::MetricField;
use crate::flow::{gkrf_rhs, Gauge};
use crate::gkconstruct::{deform, flat_seed, ConstructLimits, Deformation, FourierHamiltonian};
use crate::linalg4::seed_i;
use std::f64::consts::PI;

fn grid(n: usize) -> Grid4 {
    Grid4::new(n, 2.0 * PI)
}

fn deformed(n: usize) -> GkState {
    let seed = flat_seed(grid(n));
    let def = Deformation::new(FourierHamiltonian::standard(0.05, 2.0 * PI), 0.5, 16);
    deform(&seed, &def, &ConstructLimits::default()).unwrap().state
}

fn kahler_potential(n: usize) -> (PotentialState, Background) {
    let g = grid(n);
    let f = Field::<f64>::from_fn(g, |x| 0.05 * (x[0] + x[2]).sin() + 0.03 * (x[1] - x[3]).cos());
    let bg = Background::new(seed_i(), &Mat4::identity());
    (PotentialState { b: Field::zeros(g), f, t: 0.0 }, bg)
}

/// Sup of the potential metric rate minus `−2 Rc` of the reconstructed Kahler metric.
fn kahler_ricci_residual(n: usize) -> f64 {
    let (state, bg) = kahler_potential(n);
    let tan = potential_rhs(&state, &bg, BetaLaplacian::HolomorphicFirst).unwrap();
    assert_eq!(tan.b.max_abs(), 0.0);
    let g = MetricField::new(reconstruct_metric(&state, &bg)).unwrap();
    let expect = ricci(&g).scaled(-2.0);
    metric_rate(&tan, &bg).sub(&expect).max_abs()
}

fn laplacian_mismatch(n: usize, laplacian: BetaLaplacian) -> f64 {
    let state = deformed(n);
    let (pot, bg, _) = initial_potential(&state.g, &seed_i());
    let tan = potential_rhs(&pot, &bg, laplacian).unwrap();
    let direct = gkrf_rhs(&state, Gauge::IFixed).unwrap().g;
    metric_rate(&tan, &bg).sub(&direct).max_abs()
}

#[test]
fn fft_round_trip() {
    let g = grid(8);
    let data: Vec<C> = (0..g.len()).map(|k| C::new((k as f64).sin(), (3.0 * k as f64).cos())).collect();
    let mut v = data.clone();
    fft4(&mut v, &g, false);
    // constant mode holds the sum
    let sum: C = data.iter().sum();
    assert!((v[0] - sum).norm() < 1e-9);
    fft4(&mut v, &g, true);
    let err = v.iter().zip(&data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-13, "{err}");
}

#[test]
fn one_form_solve_recovers_exact_target() {
    let g = grid(8);
    let a = Field::<Vec4>::from_fn(g, |x| {
        Vec4::new(0.1 * x[1].sin(), 0.05 * (x[0] + x[3]).cos(), 0.02 * (2.0 * x[2]).sin(), 0.07 * (x[0] - x[1]).cos())
    });
    let target = metric_from_one_form(&a, &seed_i());
    let (sol, residual) = solve_one_form(&target, &seed_i());
    assert!(residual < 1e-12, "{residual}");
    assert!(metric_from_one_form(&sol, &seed_i()).sub(&target).max_abs() < 1e-12);
}

#[test]
fn initial_potential_reproduces_deformed_metric() {
    let state = deformed(8);
    let (pot, bg, residual) = initial_potential(&state.g, &seed_i());
    assert!(residual < 1e-5);
    assert!(reconstruct_metric(&pot, &bg).sub(&state.g).max_abs() <= residual + 1e-12);
    assert_eq!(pot.f.max_abs(), 0.0);
}

#[test]
fn kahler_data_keeps_beta_zero_and_follows_ricci_flow() {
    let (a, b) = (kahler_ricci_residual(8), kahler_ricci_residual(16));
    let order = (a / b).log2();
    assert!(b < 5e-4 && order > 2.8, "residuals {a:.3e} {b:.3e}, order {order:.2}");
}

#[test]
fn holomorphic_first_laplacian_matches_direct_flow() {
    let hol = [8, 16].map(|n| laplacian_mismatch(n, BetaLaplacian::HolomorphicFirst));
    let anti = [8, 16].map(|n| laplacian_mismatch(n, BetaLaplacian::AntiholomorphicFirst));
    let order = (hol[0] / hol[1]).log2();
    assert!(order > 3.0 && hol[1] < 1e-4, "{hol:?}");
    // the other ordering leaves an O(1) curvature term that does not refine away
    assert!(anti[1] > 10.0 * hol[1] && anti[0] / anti[1] < 2.0, "{anti:?}");
}

#[test]
fn beta_norm_decreases_on_short_run() {
    let state = deformed(8);
    let out = cross_path(&state, 0.05, 4, BetaLaplacian::HolomorphicFirst).unwrap();
    assert!(out.max_rel_error < 1e-3);
    for w in out.records.windows(2) {
        assert!(w[1].sup_beta_sq <= w[0].sup_beta_sq);
    }
}

#[test]
fn cross_path_needs_constant_i() {
    let mut state = deformed(8);
    let mut i = state.i.get(3);
    i[(0, 1)] += 1e-3;
    state.i.set(3, &i);
    assert!(matches!(cross_path(&state, 0.05, 1, BetaLaplacian::HolomorphicFirst), Err(GkError::Config(_))));
}

#[test]
fn degenerate_reconstruction_is_rejected() {
    let (mut state, bg) = kahler_potential(8);
    state.f = state.f.scaled(40.0);
    assert!(matches!(
        potential_rhs(&state, &bg, BetaLaplacian::HolomorphicFirst),
        Err(GkError::MetricNotPositive)
    ));
}
