//! Method-of-lines integration of generalized Kahler-Ricci flow on the periodic grid.
//!
//! In the B-field gauge all four fields move:
//! `∂g = −2Rc + ½𝓗`, `∂H = Δ_d H`, `∂I = L_{θ_I♯} I`, `∂J = L_{θ_J♯} J`.
//! The I-fixed gauge subtracts `L_{θ_I♯}` from every equation, which freezes `I` and
//! leaves `(g, H)` moving by pluriclosed flow.
//!
//! `I` and `J` are never projected back onto almost complex structures; their drift is
//! measured by [`constraint_residuals`] and aborts the run past the configured threshold.

pub mod gauge;
pub mod potential;
mod run;

use serde::{Deserialize, Serialize};

use crate::error::{GkError, Result};
use crate::fields::curvature::ricci;
use crate::fields::forms::{d3, dc, hodge_laplacian3, kahler_form, MetricField};
use crate::fields::lie::{lie_endo, lie_metric, lie_three_form, sharp};
use crate::fields::Field;
use crate::gkconstruct::GkState;
use crate::linalg4::{h_squared_star, Form3, Mat4, Sym4};

pub use gauge::{gauge_transport, GaugeDirection};
pub use run::{run, RunOutcome, StepSink};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    Rk4,
    Euler,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gauge {
    BField,
    IFixed,
}

/// Time stepping and abort policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    /// `dt = cfl · h² / sup λ_max(g⁻¹)`, fixed from the initial state.
    pub cfl: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    pub gauge: Gauge,
    /// Largest accepted constraint residual.
    pub constraint_abort: f64,
    /// Largest accepted `sup |p|`.
    pub p_max: f64,
    /// Write a snapshot every this many steps; 0 disables snapshots.
    pub snapshot_every: usize,
    /// Integrate the decomposed potential flow alongside and report its norms.
    pub potential: Option<PotentialConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialConfig {
    pub laplacian: potential::BetaLaplacian,
    /// `A` in the monitored `log tr_g g₀ − A(f − inf f)`.
    pub trace_weight: f64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig {
            laplacian: potential::BetaLaplacian::HolomorphicFirst,
            trace_weight: 1.0,
        }
    }
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            cfl: 0.2,
            t_end: 1.0,
            integrator: Integrator::Rk4,
            gauge: Gauge::BField,
            constraint_abort: 1e-4,
            p_max: crate::gkconstruct::P_MAX,
            snapshot_every: 0,
            potential: None,
        }
    }
}

impl FlowConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 0.5) {
            return Err(GkError::Config(format!("cfl must lie in (0, 0.5], got {}", self.cfl)));
        }
        if !(self.t_end > 0.0) {
            return Err(GkError::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.constraint_abort >= 0.0) {
            return Err(GkError::Config("constraint_abort must be non-negative".into()));
        }
        if !(self.p_max > 0.0 && self.p_max < 1.0) {
            return Err(GkError::Config(format!("p_max must lie in (0, 1), got {}", self.p_max)));
        }
        Ok(())
    }

    /// Time step for a metric: `cfl · h²` divided by the largest eigenvalue of `g⁻¹`.
    pub fn dt(&self, g: &MetricField) -> f64 {
        let scale = (0..g.grid().len())
            .map(|k| g.at(k).ginv.symmetric_eigenvalues().max())
            .fold(0.0, f64::max);
        self.cfl * g.grid().h * g.grid().h / scale
    }
}

/// Time derivative of every evolved field.
#[derive(Clone, Debug)]
pub struct Tangent {
    pub g: Field<Sym4>,
    pub h: Field<Form3>,
    pub i: Field<Mat4>,
    pub j: Field<Mat4>,
}

impl Tangent {
    pub fn max_abs(&self) -> f64 {
        [self.g.max_abs(), self.h.max_abs(), self.i.max_abs(), self.j.max_abs()]
            .into_iter()
            .fold(0.0, f64::max)
    }

    fn axpy(&mut self, a: f64, x: &Tangent) {
        self.g.axpy(a, &x.g);
        self.h.axpy(a, &x.h);
        self.i.axpy(a, &x.i);
        self.j.axpy(a, &x.j);
    }
}

/// `state + a · tangent`, keeping the time label of `state` advanced by `a`.
pub fn advance(state: &GkState, a: f64, tan: &Tangent) -> GkState {
    let mut out = state.clone();
    out.g.axpy(a, &tan.g);
    out.h.axpy(a, &tan.h);
    out.i.axpy(a, &tan.i);
    out.j.axpy(a, &tan.j);
    out.t += a;
    out
}

/// Right-hand side of the flow in the requested gauge.
pub fn gkrf_rhs(state: &GkState, gauge: Gauge) -> Result<Tangent> {
    let p_abs = state.angle().max_abs();
    if !(p_abs < 1.0) {
        return Err(GkError::DegenerateStructure { p_abs, limit: 1.0 });
    }
    let g = state.metric()?;
    let grid = *state.grid();
    let rc = ricci(&g);
    let mut dg = Field::<Sym4>::from_index_fn(grid, |k| {
        let hh = h_squared_star(g.at(k), &state.h.get(k));
        let r = rc.get(k);
        let mut s = Sym4([0.0; 10]);
        for c in 0..10 {
            s.0[c] = -2.0 * r.0[c] + 0.5 * hh.0[c];
        }
        s
    });
    let mut dh = hodge_laplacian3(&g, &state.h);
    let xi = sharp(&g, &state.lee_i(&g));
    let xj = sharp(&g, &state.lee_j(&g));
    let mut dj = lie_endo(&xj, &state.j);
    let di = match gauge {
        Gauge::BField => lie_endo(&xi, &state.i),
        Gauge::IFixed => {
            dg.axpy(-1.0, &lie_metric(&xi, &state.g));
            dh.axpy(-1.0, &lie_three_form(&xi, &state.h));
            dj.axpy(-1.0, &lie_endo(&xi, &state.j));
            Field::zeros(grid)
        }
    };
    Ok(Tangent {
        g: dg,
        h: dh,
        i: di,
        j: dj,
    })
}

/// One explicit step of size `dt`.
pub fn step(state: &GkState, dt: f64, integrator: Integrator, gauge: Gauge) -> Result<GkState> {
    match integrator {
        Integrator::Euler => Ok(advance(state, dt, &gkrf_rhs(state, gauge)?)),
        Integrator::Rk4 => {
            let k1 = gkrf_rhs(state, gauge)?;
            let mut acc = k1.clone();
            let k2 = gkrf_rhs(&advance(state, 0.5 * dt, &k1), gauge)?;
            drop(k1);
            acc.axpy(2.0, &k2);
            let k3 = gkrf_rhs(&advance(state, 0.5 * dt, &k2), gauge)?;
            drop(k2);
            acc.axpy(2.0, &k3);
            let k4 = gkrf_rhs(&advance(state, dt, &k3), gauge)?;
            drop(k3);
            acc.axpy(1.0, &k4);
            let mut out = advance(state, dt / 6.0, &acc);
            out.t = state.t + dt;
            Ok(out)
        }
    }
}

/// Sup-norm residuals of the generalized Kahler constraints carried by the flow.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Constraints {
    /// `H − d^c_I ω_I`
    pub torsion_i: f64,
    /// `H + d^c_J ω_J`
    pub torsion_j: f64,
    pub dh: f64,
    pub i_square: f64,
    pub j_square: f64,
    pub hermitian_i: f64,
    pub hermitian_j: f64,
}

impl Constraints {
    pub fn max(&self) -> f64 {
        [
            self.torsion_i,
            self.torsion_j,
            self.dh,
            self.i_square,
            self.j_square,
            self.hermitian_i,
            self.hermitian_j,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn constraint_residuals(state: &GkState) -> Result<Constraints> {
    let g = state.metric()?;
    let grid = *state.grid();
    let hi = dc(&kahler_form(&g, &state.i), &state.i);
    let hj = dc(&kahler_form(&g, &state.j), &state.j);
    let square = |j: &Field<Mat4>| j.map(|m| m * m + Mat4::identity()).max_abs();
    let herm = |j: &Field<Mat4>| {
        Field::<Mat4>::from_index_fn(grid, |k| {
            let gm = g.at(k).g;
            let jm = j.get(k);
            jm.transpose() * gm * jm - gm
        })
        .max_abs()
    };
    Ok(Constraints {
        torsion_i: state.h.sub(&hi).max_abs(),
        torsion_j: state.h.add(&hj).max_abs(),
        dh: d3(&state.h).max_abs(),
        i_square: square(&state.i),
        j_square: square(&state.j),
        hermitian_i: herm(&state.i),
        hermitian_j: herm(&state.j),
    })
}

/// `∂_t log det g = tr(g⁻¹ ∂g)` from a tangent.
pub fn log_det_rate(g: &MetricField, tan: &Tangent) -> Field<f64> {
    Field::from_index_fn(*g.grid(), |k| (g.at(k).ginv * tan.g.get(k).to_mat()).trace())
}

/// `∂_t p = ¼ tr(δI·J + I·δJ)` from a tangent.
pub fn angle_rate(state: &GkState, tan: &Tangent) -> Field<f64> {
    Field::from_index_fn(*state.grid(), |k| {
        0.25 * (tan.i.get(k) * state.j.get(k) + state.i.get(k) * tan.j.get(k)).trace()
    })
}

#[cfg(test)]
mod tests;
