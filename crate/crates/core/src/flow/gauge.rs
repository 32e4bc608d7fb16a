//! Diffeomorphism transport between the B-field and I-fixed gauges.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GkError, Result};
use crate::fields::diff::partials;
use crate::fields::interp::interpolate;
use crate::fields::lie::sharp;
use crate::fields::Field;
use crate::gkconstruct::{pullback_endo, FlowMap, GkState};
use crate::linalg4::{Form3, Mat4, Sym4, Vec4, FORM3_TRIPLES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaugeDirection {
    /// Pull back by the flow of `−θ_I♯`, undoing the motion of `I`.
    ToIFixed,
    /// Pull back by the flow of `+θ_I♯`.
    ToBField,
}

/// Flow map of a stationary vector field over time `tau`, with its Jacobian, by RK4 with
/// `substeps` substeps and cubic interpolation of the field and its derivative.
pub fn vector_field_flow(x: &Field<Vec4>, tau: f64, substeps: usize) -> Result<FlowMap> {
    let grid = *x.grid();
    let d = partials(x);
    let dx = Field::<Mat4>::from_index_fn(grid, |i| {
        Mat4::from_columns(&[d[0].get(i), d[1].get(i), d[2].get(i), d[3].get(i)])
    });
    let steps = substeps.max(1);
    let ds = tau / steps as f64;
    let limit = grid.h;
    let rhs = |p: &Vec4, m: &Mat4| -> (Vec4, Mat4) {
        let at = [p[0], p[1], p[2], p[3]];
        (interpolate(x, at), interpolate(&dx, at) * m)
    };
    let pts: Vec<(Vec4, Mat4)> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let start = Vec4::from_column_slice(&grid.point(idx));
            let mut p = start;
            let mut m = Mat4::identity();
            for _ in 0..steps {
                let (k1p, k1m) = rhs(&p, &m);
                let (k2p, k2m) = rhs(&(p + k1p * (ds / 2.0)), &(m + k1m * (ds / 2.0)));
                let (k3p, k3m) = rhs(&(p + k2p * (ds / 2.0)), &(m + k2m * (ds / 2.0)));
                let (k4p, k4m) = rhs(&(p + k3p * ds), &(m + k3m * ds));
                p += (k1p + k2p * 2.0 + k3p * 2.0 + k4p) * (ds / 6.0);
                m += (k1m + k2m * 2.0 + k3m * 2.0 + k4m) * (ds / 6.0);
            }
            let moved = (p - start).amax();
            if moved > limit {
                return Err(GkError::StepTooLarge { moved, limit });
            }
            Ok((p, m))
        })
        .collect::<Result<_>>()?;
    Ok(FlowMap {
        phi: Field::from_index_fn(grid, |i| pts[i].0),
        jacobian: Field::from_index_fn(grid, |i| pts[i].1),
    })
}

/// `Φ^*g = dΦᵀ g(Φ) dΦ`.
pub fn pullback_sym(map: &FlowMap, g: &Field<Sym4>) -> Field<Sym4> {
    Field::from_index_fn(*g.grid(), |i| {
        let x = map.phi.get(i);
        let d = map.jacobian.get(i);
        let at = interpolate(g, [x[0], x[1], x[2], x[3]]).to_mat();
        Sym4::from_mat(&(d.transpose() * at * d))
    })
}

/// `(Φ^*H)_abc = H_pqr(Φ) ∂_aΦ^p ∂_bΦ^q ∂_cΦ^r`.
pub fn pullback_form3(map: &FlowMap, h: &Field<Form3>) -> Field<Form3> {
    Field::from_index_fn(*h.grid(), |i| {
        let x = map.phi.get(i);
        let d = map.jacobian.get(i);
        let full = interpolate(h, [x[0], x[1], x[2], x[3]]).to_full();
        let mut out = [0.0; 4];
        for (k, &(a, b, c)) in FORM3_TRIPLES.iter().enumerate() {
            let mut s = 0.0;
            for p in 0..4 {
                for q in 0..4 {
                    for r in 0..4 {
                        s += full[p][q][r] * d[(p, a)] * d[(q, b)] * d[(r, c)];
                    }
                }
            }
            out[k] = s;
        }
        Form3(out)
    })
}

/// Pulls every field back by the time-`tau` flow of `∓θ_I♯`.
pub fn gauge_transport(state: &GkState, direction: GaugeDirection, tau: f64) -> Result<GkState> {
    let g = state.metric()?;
    let sign = match direction {
        GaugeDirection::ToIFixed => -1.0,
        GaugeDirection::ToBField => 1.0,
    };
    let x = sharp(&g, &state.lee_i(&g)).scaled(sign);
    if x.max_abs() == 0.0 {
        return Ok(state.clone());
    }
    let map = vector_field_flow(&x, tau, 4)?;
    Ok(GkState {
        g: pullback_sym(&map, &state.g),
        i: pullback_endo(&map, &state.i),
        j: pullback_endo(&map, &state.j),
        h: pullback_form3(&map, &state.h),
        t: state.t,
    })
}
