use super::*;
use crate::fields::Grid4;
use crate::gkconstruct::{deform, flat_seed, ConstructLimits, Deformation, FourierHamiltonian};
use proptest::prelude::*;
use std::f64::consts::PI;

fn deformed(n: usize) -> GkState {
    let seed = flat_seed(Grid4::new(n, 2.0 * PI));
    let def = Deformation::new(FourierHamiltonian::standard(0.05, 2.0 * PI), 0.5, 16);
    deform(&seed, &def, &ConstructLimits::default()).unwrap().state
}

fn sample(step: usize, potential: bool) -> DiagnosticsRecord {
    let x = step as f64;
    DiagnosticsRecord {
        step,
        t: 0.1 * x,
        dt: 0.1,
        p_min: -0.042 + 1e-3 * x,
        p_max: 1.0 / 3.0,
        sup_grad_mu_sq: 5.4249e-3,
        decay_bound_value: 1e-300,
        decay_bound_slack: -0.0,
        mu_heat_residual: f64::MIN_POSITIVE / 4.0,
        theta_identity_residual: 2.0f64.sqrt(),
        sup_theta: PI,
        sup_h: 1e300,
        sup_dp: 0.1 + 0.2,
        det_ratio_min: 0.999_999_999_999_999_9,
        det_ratio_max: 1.000_000_000_000_000_2,
        gk_constraint_residual: 5.2e-6,
        torsion_i_residual: 1e-17,
        torsion_j_residual: 3e-6,
        dh_residual: 7.0,
        integral_dp: 123456.789,
        h_identity_residual: 0.0,
        hk_closedness: [6e-4, 2.2e-2, -1.5],
        potential: potential.then_some(PotentialRecord {
            sup_beta_sq: 1e-9,
            df_dt_sup: 0.3,
            trace_bound_slack: -1e-12,
        }),
    }
}

fn same_bits(a: &DiagnosticsRecord, b: &DiagnosticsRecord) -> bool {
    let (ca, cb) = (emit::columns(a), emit::columns(b));
    ca.len() == cb.len()
        && ca.iter().zip(&cb).all(|((na, va), (nb, vb))| {
            na == nb && va.map(f64::to_bits) == vb.map(f64::to_bits)
        })
}

#[test]
fn seed_monitors_are_zero() {
    let state = flat_seed(Grid4::new(8, 2.0 * PI)).to_state();
    let mut m = Monitor::new(&state).unwrap();
    let r = m.record(&state, 0, 0.1).unwrap();
    assert_eq!(r.p_min, 0.0);
    assert_eq!(r.p_max, 0.0);
    assert_eq!(r.sup_grad_mu_sq, 0.0);
    assert_eq!(r.decay_bound_value, 0.0);
    assert_eq!(r.sup_theta, 0.0);
    assert_eq!(r.sup_h, 0.0);
    assert_eq!(r.integral_dp, 0.0);
    assert_eq!((r.det_ratio_min, r.det_ratio_max), (1.0, 1.0));
    assert!(r.gk_constraint_residual < 1e-14);
    assert!(r.hk_closedness.iter().all(|&x| x < 1e-14));
    assert!(r.is_finite());
    let mut later = state.clone();
    later.t = 0.1;
    assert_eq!(m.record(&later, 1, 0.1).unwrap().mu_heat_residual, 0.0);
}

#[test]
fn record_is_reproducible() {
    let state = deformed(8);
    let a = Monitor::new(&state).unwrap().record(&state, 0, 0.05).unwrap();
    let b = Monitor::new(&state).unwrap().record(&state, 0, 0.05).unwrap();
    assert!(same_bits(&a, &b));
    assert!(a.sup_theta > 0.0 && a.decay_bound_slack == 0.0);
    assert!(a.p_min < 0.0 && a.p_max > 0.0);
}

#[test]
fn decay_bound_formula() {
    let state = deformed(8);
    let init = InitialData::new(&state).unwrap();
    let p = state.angle();
    let delta = p.map(|&x| 1.0 - x * x).min() / 8.0;
    assert_eq!(init.delta, delta);
    let s = init.sup_grad_mu0;
    assert_eq!(init.decay_bound(state.t), 1.0 / s.powi(-2));
    let t = 3.0;
    let expect = 1.0 / (1.0 / (s * s) + delta * t);
    assert!((init.decay_bound(t) - expect).abs() < 1e-15);
}

#[test]
fn hk_forms_not_closed_off_hyperkahler() {
    let state = deformed(8);
    let g = state.metric().unwrap();
    let hk = convergence_monitors(&state, &g).unwrap();
    // K1 = I is integrable but not Kahler, so ω_I is not closed on a non-Kahler state.
    assert!(hk.iter().all(|&x| x > 1e-6), "{hk:?}");
}

#[test]
fn volume_band_is_symmetric() {
    let mut a = sample(0, false);
    a.det_ratio_min = 0.5;
    a.det_ratio_max = 1.5;
    assert_eq!(volume_band(&[a.clone()]), 2.0);
    a.det_ratio_min = 0.9;
    assert_eq!(volume_band(&[a]), 1.5);
    assert_eq!(volume_band(&[]), 1.0);
}

#[test]
fn empty_stream_has_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let j = dir.path().join("d.jsonl");
    let c = dir.path().join("d.csv");
    write_jsonl(&j, &[]).unwrap();
    write_csv(&c, &[]).unwrap();
    let text = std::fs::read_to_string(&j).unwrap();
    assert_eq!(text, "{\"schema\":\"gkrf.diagnostics\",\"version\":1}\n");
    assert!(read_jsonl(&j).unwrap().is_empty());
    assert_eq!(std::fs::read_to_string(&c).unwrap().lines().count(), 1);
    assert!(read_csv(&c).unwrap().is_empty());
}

#[test]
fn three_records_round_trip_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let recs = vec![sample(0, false), sample(1, true), sample(2, false)];
    let j = dir.path().join("d.jsonl");
    let c = dir.path().join("d.csv");
    write_jsonl(&j, &recs).unwrap();
    let back = read_jsonl(&j).unwrap();
    write_csv(&c, &back).unwrap();
    let flat = read_csv(&c).unwrap();
    assert_eq!(back.len(), 3);
    for ((a, b), c) in recs.iter().zip(&back).zip(&flat) {
        assert!(same_bits(a, b));
        assert!(same_bits(a, c));
    }
    let csv = std::fs::read_to_string(&c).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("schema_version,step,t,dt,p_min"));
    assert!(csv.lines().nth(1).unwrap().ends_with(",,,"));
}

#[test]
fn wrong_version_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let j = dir.path().join("d.jsonl");
    std::fs::write(&j, "{\"schema\":\"gkrf.diagnostics\",\"version\":2}\n").unwrap();
    assert!(matches!(read_jsonl(&j), Err(GkError::Format(_))));
}

#[test]
fn streaming_writer_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let j = dir.path().join("d.jsonl");
    {
        let mut w = JsonlWriter::create(&j).unwrap();
        w.write(&sample(0, false)).unwrap();
        // Reading before the writer is dropped sees every record written so far.
        assert_eq!(read_jsonl(&j).unwrap().len(), 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn arbitrary_finite_records_round_trip(
        vals in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 27),
        step in 0usize..1_000_000,
        with_pot in any::<bool>(),
    ) {
        let mut r = sample(step, with_pot);
        r.t = vals[0]; r.dt = vals[1]; r.p_min = vals[2]; r.p_max = vals[3];
        r.sup_grad_mu_sq = vals[4]; r.decay_bound_value = vals[5]; r.decay_bound_slack = vals[6];
        r.mu_heat_residual = vals[7]; r.theta_identity_residual = vals[8]; r.sup_theta = vals[9];
        r.sup_h = vals[10]; r.sup_dp = vals[11]; r.det_ratio_min = vals[12]; r.det_ratio_max = vals[13];
        r.gk_constraint_residual = vals[14]; r.torsion_i_residual = vals[15];
        r.torsion_j_residual = vals[16]; r.dh_residual = vals[17]; r.integral_dp = vals[18];
        r.h_identity_residual = vals[19]; r.hk_closedness = [vals[20], vals[21], vals[22]];
        if let Some(p) = r.potential.as_mut() {
            p.sup_beta_sq = vals[23]; p.df_dt_sup = vals[24]; p.trace_bound_slack = vals[25];
        }
        let dir = tempfile::tempdir().unwrap();
        let j = dir.path().join("d.jsonl");
        let c = dir.path().join("d.csv");
        write_jsonl(&j, std::slice::from_ref(&r)).unwrap();
        write_csv(&c, std::slice::from_ref(&r)).unwrap();
        prop_assert!(same_bits(&r, &read_jsonl(&j).unwrap()[0]));
        prop_assert!(same_bits(&r, &read_csv(&c).unwrap()[0]));
    }
}
