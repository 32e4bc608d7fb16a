//! Residual report for generalized Kahler field data.

use serde::{Deserialize, Serialize};

use super::state::GkState;
use crate::error::Result;
use crate::fields::forms::{d0, d3, dc, kahler_form, pluriclosed_residual, star3, MetricField};
use crate::fields::Field;
use crate::linalg4::{Mat4, Vec4};

/// Sup-norm residuals of the pointwise and differential GK conditions.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GkReport {
    pub i_square: f64,
    pub j_square: f64,
    pub hermitian_i: f64,
    pub hermitian_j: f64,
    /// `d^c_I ω_I + d^c_J ω_J`
    pub torsion_opposition: f64,
    /// `H − d^c_I ω_I`
    pub h_consistency: f64,
    pub dh: f64,
    pub pluriclosed_i: f64,
    pub pluriclosed_j: f64,
    /// `θ^I + θ^J`
    pub lee_opposition: f64,
    /// `θ^I − ⋆H`
    pub lee_star_h: f64,
    /// `dp − ¼(θ^I − θ^J)[I, J]`
    pub dp_identity: f64,
    /// `θ − dp[I, J] / (2(p² − 1))`
    pub theta_reconstruction: f64,
    /// `⟨dp, θ⟩`
    pub orthogonality: f64,
    /// `|θ|² − |dp|²/(1 − p²)`
    pub norm_identity: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub sup_theta: f64,
}

impl GkReport {
    /// Largest compatibility residual (pointwise conditions).
    pub fn compatibility(&self) -> f64 {
        [self.i_square, self.j_square, self.hermitian_i, self.hermitian_j]
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// Largest residual among the differential identities.
    pub fn differential(&self) -> f64 {
        self.named_differential()
            .into_iter()
            .map(|(_, v)| v)
            .fold(0.0, f64::max)
    }

    pub fn max_residual(&self) -> f64 {
        self.compatibility().max(self.differential())
    }

    /// The differential residuals with their names, in a fixed order.
    pub fn named_differential(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("torsion_opposition", self.torsion_opposition),
            ("h_consistency", self.h_consistency),
            ("dh", self.dh),
            ("pluriclosed_i", self.pluriclosed_i),
            ("pluriclosed_j", self.pluriclosed_j),
            ("lee_opposition", self.lee_opposition),
            ("lee_star_h", self.lee_star_h),
            ("dp_identity", self.dp_identity),
            ("theta_reconstruction", self.theta_reconstruction),
            ("orthogonality", self.orthogonality),
            ("norm_identity", self.norm_identity),
        ]
    }
}

fn endo_defect(j: &Field<Mat4>) -> f64 {
    j.map(|m| m * m + Mat4::identity()).max_abs()
}

fn hermitian_defect(g: &MetricField, j: &Field<Mat4>) -> f64 {
    Field::<Mat4>::from_index_fn(*g.grid(), |i| {
        let gm = g.at(i).g;
        let jm = j.get(i);
        jm.transpose() * gm * jm - gm
    })
    .max_abs()
}

/// Computes every residual; never fails on large residuals.
pub fn validate_gk(state: &GkState) -> Result<GkReport> {
    let g = state.metric()?;
    let grid = *state.grid();
    let wi = kahler_form(&g, &state.i);
    let wj = kahler_form(&g, &state.j);
    let hi = dc(&wi, &state.i);
    let hj = dc(&wj, &state.j);
    let ti = state.lee_i(&g);
    let tj = state.lee_j(&g);
    let star_h = star3(&g, &state.h);
    let p = state.angle();
    let dp = d0(&p);

    let comm = Field::<Mat4>::from_index_fn(grid, |k| {
        let (i, j) = (state.i.get(k), state.j.get(k));
        i * j - j * i
    });
    let dp_id = Field::<Vec4>::from_index_fn(grid, |k| {
        dp.get(k) - comm.get(k).transpose() * (ti.get(k) - tj.get(k)) * 0.25
    });
    let recon = Field::<Vec4>::from_index_fn(grid, |k| {
        let pk = p.get(k);
        ti.get(k) - comm.get(k).transpose() * dp.get(k) / (2.0 * (pk * pk - 1.0))
    });
    let orth = Field::<f64>::from_index_fn(grid, |k| g.at(k).inner1(&dp.get(k), &ti.get(k)));
    let norm = Field::<f64>::from_index_fn(grid, |k| {
        let m = g.at(k);
        let pk = p.get(k);
        m.norm2_1(&ti.get(k)) - m.norm2_1(&dp.get(k)) / (1.0 - pk * pk)
    });
    let sup_theta = Field::<f64>::from_index_fn(grid, |k| g.at(k).norm2_1(&ti.get(k)).sqrt()).max();

    Ok(GkReport {
        i_square: endo_defect(&state.i),
        j_square: endo_defect(&state.j),
        hermitian_i: hermitian_defect(&g, &state.i),
        hermitian_j: hermitian_defect(&g, &state.j),
        torsion_opposition: hi.add(&hj).max_abs(),
        h_consistency: state.h.sub(&hi).max_abs(),
        dh: d3(&state.h).max_abs(),
        pluriclosed_i: pluriclosed_residual(&wi, &state.i),
        pluriclosed_j: pluriclosed_residual(&wj, &state.j),
        lee_opposition: ti.add(&tj).max_abs(),
        lee_star_h: ti.sub(&star_h).max_abs(),
        dp_identity: dp_id.max_abs(),
        theta_reconstruction: recon.max_abs(),
        orthogonality: orth.max_abs(),
        norm_identity: norm.max_abs(),
        p_min: p.min(),
        p_max: p.max(),
        sup_theta,
    })
}
