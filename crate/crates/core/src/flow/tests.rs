use super::*;
use crate::fields::curvature::{christoffel, lc_laplacian};
use crate::fields::diff::{gradient, partial};
use crate::fields::Grid4;
use crate::gkconstruct::{deform, flat_seed, ConstructLimits, Deformation, FourierHamiltonian};
use crate::linalg4::Vec4;
use std::f64::consts::PI;

fn deformed(n: usize) -> GkState {
    let seed = flat_seed(Grid4::new(n, 2.0 * PI));
    let def = Deformation::new(FourierHamiltonian::standard(0.05, 2.0 * PI), 0.5, 16);
    deform(&seed, &def, &ConstructLimits::default()).unwrap().state
}

fn seed(n: usize) -> GkState {
    flat_seed(Grid4::new(n, 2.0 * PI)).to_state()
}

/// Scalar curvature in divergence form,
/// `√g R = ∂_k(√g V^k) + √g g^{ij}(Γ^k_il Γ^l_jk − Γ^k_ij Γ^l_kl)` with
/// `V^k = g^{ij}Γ^k_ij − g^{kj}Γ^l_jl`.
fn scalar_curvature_divergence(g: &MetricField) -> Field<f64> {
    let grid = *g.grid();
    let gamma = christoffel(g);
    let flux = Field::<Vec4>::from_index_fn(grid, |idx| {
        let m = g.at(idx);
        let gm = gamma.at(idx);
        let tr: [f64; 4] = std::array::from_fn(|j| (0..4).map(|l| gm[l][j][l]).sum());
        let mut v = Vec4::zeros();
        for k in 0..4 {
            let mut acc = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    acc += m.ginv[(i, j)] * gm[k][i][j];
                }
                acc -= m.ginv[(k, i)] * tr[i];
            }
            v[k] = m.sqrt_det * acc;
        }
        v
    });
    let mut div = Field::<f64>::zeros(grid);
    for k in 0..4 {
        div.axpy(1.0, &partial(&flux.component(k), k));
    }
    Field::from_index_fn(grid, |idx| {
        let m = g.at(idx);
        let gm = gamma.at(idx);
        let mut q = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let mut s = 0.0;
                for k in 0..4 {
                    for l in 0..4 {
                        s += gm[k][i][l] * gm[l][j][k] - gm[k][i][j] * gm[l][k][l];
                    }
                }
                q += m.ginv[(i, j)] * s;
            }
        }
        div.get(idx) / m.sqrt_det + q
    })
}

fn trace_identity_residual(n: usize) -> f64 {
    let state = deformed(n);
    let g = state.metric().unwrap();
    let tan = gkrf_rhs(&state, Gauge::BField).unwrap();
    let rate = log_det_rate(&g, &tan);
    let r = scalar_curvature_divergence(&g);
    let theta = state.lee_i(&g);
    Field::<f64>::from_index_fn(*g.grid(), |k| {
        rate.get(k) - (-2.0 * r.get(k) + 3.0 * g.at(k).norm2_1(&theta.get(k)))
    })
    .max_abs()
}

fn angle_identity_residual(n: usize) -> f64 {
    let state = deformed(n);
    let g = state.metric().unwrap();
    let tan = gkrf_rhs(&state, Gauge::BField).unwrap();
    let rate = angle_rate(&state, &tan);
    let p = state.angle();
    let lap = lc_laplacian(&g, &p);
    let dp = gradient(&p);
    Field::<f64>::from_index_fn(*g.grid(), |k| {
        let pk = p.get(k);
        let expect = lap.get(k) + 2.0 * pk * g.at(k).norm2_1(&dp.get(k)) / (1.0 - pk * pk);
        rate.get(k) - expect
    })
    .max_abs()
}

#[test]
fn seed_rhs_vanishes() {
    let s = seed(8);
    for gauge in [Gauge::BField, Gauge::IFixed] {
        assert!(gkrf_rhs(&s, gauge).unwrap().max_abs() < 1e-12);
    }
    let next = step(&s, 0.1, Integrator::Rk4, Gauge::BField).unwrap();
    assert!(next.max_diff(&s) < 1e-12);
    assert!((next.t - 0.1).abs() < 1e-15);
}

#[test]
fn euler_step_is_the_tangent_update() {
    let s = deformed(8);
    let dt = 0.01;
    let tan = gkrf_rhs(&s, Gauge::BField).unwrap();
    let next = step(&s, dt, Integrator::Euler, Gauge::BField).unwrap();
    let mut expect = s.g.clone();
    expect.axpy(dt, &tan.g);
    assert_eq!(next.g.sub(&expect).max_abs(), 0.0);
    let mut expect_i = s.i.clone();
    expect_i.axpy(dt, &tan.i);
    assert_eq!(next.i.sub(&expect_i).max_abs(), 0.0);
}

#[test]
fn rk4_step_doubling_ratio_near_sixteen() {
    // Global error over a fixed interval: successive differences at N, 2N, 4N steps.
    let s = deformed(8);
    let t_end = 0.48;
    let solve = |n: usize| {
        let dt = t_end / n as f64;
        (0..n).fold(s.clone(), |st, _| step(&st, dt, Integrator::Rk4, Gauge::BField).unwrap())
    };
    let (a, b, c) = (solve(4), solve(8), solve(16));
    let ratio = a.max_diff(&b) / b.max_diff(&c);
    assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn metric_trace_matches_scalar_curvature_oracle() {
    let (a, b) = (trace_identity_residual(8), trace_identity_residual(16));
    let order = (a / b).log2();
    assert!(b < 1e-4 && order > 3.0, "residuals {a:.3e} {b:.3e}, order {order:.2}");
}

#[test]
fn angle_rate_matches_heat_type_law() {
    let (a, b) = (angle_identity_residual(8), angle_identity_residual(16));
    let order = (a / b).log2();
    assert!(b < 1e-4 && order > 3.0, "residuals {a:.3e} {b:.3e}, order {order:.2}");
}

#[test]
fn i_fixed_gauge_freezes_i() {
    let s = deformed(8);
    let tan = gkrf_rhs(&s, Gauge::IFixed).unwrap();
    assert_eq!(tan.i.max_abs(), 0.0);
    let next = step(&s, 0.02, Integrator::Rk4, Gauge::IFixed).unwrap();
    assert_eq!(next.i.sub(&s.i).max_abs(), 0.0);
    assert!(next.j.sub(&s.j).max_abs() > 0.0);
}

#[test]
fn gauge_transport_is_identity_without_torsion() {
    let s = seed(8);
    let out = gauge_transport(&s, GaugeDirection::ToIFixed, 0.1).unwrap();
    assert_eq!(out.max_diff(&s), 0.0);
}

#[test]
fn transported_i_is_constant_to_second_order() {
    let s = deformed(8);
    let drift = |dt: f64| {
        let next = step(&s, dt, Integrator::Rk4, Gauge::BField).unwrap();
        let back = gauge_transport(&next, GaugeDirection::ToIFixed, dt).unwrap();
        back.i.sub(&s.i).max_abs()
    };
    let (a, b) = (drift(0.04), drift(0.02));
    let order = (a / b).log2();
    assert!(order > 1.7, "drift {a:.3e} {b:.3e}, order {order:.2}");
}

#[test]
fn volume_ratio_extrema_are_gauge_invariant() {
    // det g is a density; the ratio det g_t / det g_0 is a scalar once both are pulled back.
    let s = deformed(8);
    let dt = 0.02;
    let next = step(&s, dt, Integrator::Rk4, Gauge::BField).unwrap();
    let g1 = next.metric().unwrap();
    let x = crate::fields::lie::sharp(&g1, &next.lee_i(&g1)).scaled(-1.0);
    let map = gauge::vector_field_flow(&x, dt, 4).unwrap();
    let ratio = |a: &Field<Sym4>, b: &Field<Sym4>| {
        let (da, db) = (MetricField::new(a.clone()).unwrap().det_field(), MetricField::new(b.clone()).unwrap().det_field());
        Field::<f64>::from_index_fn(*a.grid(), |k| da.get(k) / db.get(k))
    };
    let before = ratio(&next.g, &s.g);
    let after = ratio(&gauge::pullback_sym(&map, &next.g), &gauge::pullback_sym(&map, &s.g));
    assert!((before.max() - after.max()).abs() < 1e-7, "{} {}", before.max(), after.max());
    assert!((before.min() - after.min()).abs() < 1e-7, "{} {}", before.min(), after.min());
}

#[test]
fn flow_config_rejects_bad_values() {
    let bad = [
        FlowConfig { cfl: 0.0, ..Default::default() },
        FlowConfig { cfl: 0.6, ..Default::default() },
        FlowConfig { t_end: 0.0, ..Default::default() },
        FlowConfig { p_max: 1.0, ..Default::default() },
        FlowConfig { constraint_abort: -1.0, ..Default::default() },
    ];
    for c in bad {
        assert!(matches!(c.check(), Err(GkError::Config(_))), "{c:?}");
    }
    assert!(FlowConfig::default().check().is_ok());
}

#[test]
fn run_on_seed_is_stationary() {
    let s = seed(8);
    let cfg = FlowConfig { t_end: 0.2, ..Default::default() };
    let mut recs: Vec<crate::diagnostics::DiagnosticsRecord> = Vec::new();
    let out = run(&s, &cfg, &mut recs).unwrap();
    assert_eq!(recs.len(), out.steps + 1);
    assert!((out.state.t - 0.2).abs() < 1e-14);
    assert!(out.state.max_diff(&s) < 1e-12);
    assert!(recs.iter().all(|r| r.osc_p() == 0.0 && r.sup_theta < 1e-12));
}

#[test]
fn zero_threshold_aborts_with_partial_series() {
    let s = deformed(8);
    let cfg = FlowConfig { constraint_abort: 0.0, ..Default::default() };
    let mut recs: Vec<crate::diagnostics::DiagnosticsRecord> = Vec::new();
    let err = run(&s, &cfg, &mut recs).unwrap_err();
    assert!(matches!(err, GkError::ConstraintDrift { .. }), "{err}");
    assert_eq!(recs.len(), 1);
}

#[test]
fn p_max_rejects_step() {
    let s = deformed(8);
    let cfg = FlowConfig { p_max: 0.01, ..Default::default() };
    let mut recs: Vec<crate::diagnostics::DiagnosticsRecord> = Vec::new();
    let err = run(&s, &cfg, &mut recs).unwrap_err();
    assert!(matches!(err, GkError::StepRejected { .. }), "{err}");
}

#[test]
fn short_run_keeps_angle_extrema_monotone() {
    let s = deformed(8);
    let cfg = FlowConfig { t_end: 0.3, ..Default::default() };
    let mut recs: Vec<crate::diagnostics::DiagnosticsRecord> = Vec::new();
    run(&s, &cfg, &mut recs).unwrap();
    for w in recs.windows(2) {
        assert!(w[1].p_max <= w[0].p_max + 1e-6);
        assert!(w[1].p_min >= w[0].p_min - 1e-6);
        assert!(w[1].decay_bound_slack > -1e-6);
    }
}
