//! Per-step monitors for the a priori estimates of the flow, and their serialization.
//!
//! Every monitor is a pure function of one or two states. The only state carried
//! between steps by [`Monitor`] is what the estimates freeze at `t = 0`: the decay
//! constant `δ = ⅛ inf(1 − p₀²)`, `sup |∇μ₀|` and the initial volume density.

mod emit;
pub mod identities;

use serde::{Deserialize, Serialize};

use crate::error::{GkError, Result};
use crate::fields::curvature::lc_laplacian;
use crate::fields::diff::gradient;
use crate::fields::forms::{d2, kahler_form, MetricField};
use crate::fields::Field;
use crate::flow::{constraint_residuals, Constraints};
use crate::gkconstruct::GkState;
use crate::linalg4::{associated_triple, h_squared, h_squared_star, GkPoint, Mat4, EPS_ND};

pub use emit::{read_csv, read_jsonl, write_csv, write_jsonl, JsonlWriter, SCHEMA_NAME, SCHEMA_VERSION};

/// Regularization of the unit pairing `a = dp/|dp|` in the torsion integral.
pub const EPS_REG: f64 = 1e-8;

/// Potential-path norms, present only when that path runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PotentialRecord {
    /// `sup |β|²_g`
    pub sup_beta_sq: f64,
    /// `sup |∂f/∂t|`
    pub df_dt_sup: f64,
    /// Running max of `log tr_g g₀ − A(f − inf f)` minus its value at `t = 0`.
    pub trace_bound_slack: f64,
}

/// Scalar summary of one accepted step.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub sup_grad_mu_sq: f64,
    /// `((sup|∇μ₀|)⁻² + δt)⁻¹`
    pub decay_bound_value: f64,
    /// `decay_bound_value − sup_grad_mu_sq`; negative means the bound is violated.
    pub decay_bound_slack: f64,
    /// `‖(μ_t − μ_{t−dt})/dt − Δμ_t‖∞`; zero on the first record.
    pub mu_heat_residual: f64,
    /// `‖|θ|² − |dp|²/(1 − p²)‖∞`
    pub theta_identity_residual: f64,
    pub sup_theta: f64,
    pub sup_h: f64,
    pub sup_dp: f64,
    pub det_ratio_min: f64,
    pub det_ratio_max: f64,
    /// Largest of the torsion, square and Hermitian constraint residuals.
    pub gk_constraint_residual: f64,
    pub torsion_i_residual: f64,
    pub torsion_j_residual: f64,
    pub dh_residual: f64,
    /// `∫ |dp| |a| dV` with `a = dp/|dp|` regularized.
    pub integral_dp: f64,
    /// `‖𝓗 − 2(|⋆H|² g − ⋆H ⊗ ⋆H)‖∞`
    pub h_identity_residual: f64,
    /// `‖dω_{K_i}‖∞` for the associated triple.
    pub hk_closedness: [f64; 3],
    pub potential: Option<PotentialRecord>,
}

impl DiagnosticsRecord {
    pub fn osc_p(&self) -> f64 {
        self.p_max - self.p_min
    }

    pub fn is_finite(&self) -> bool {
        emit::columns(self).iter().all(|(_, v)| v.map_or(true, f64::is_finite))
    }
}

/// Values frozen from the initial state.
#[derive(Clone, Debug)]
pub struct InitialData {
    pub t0: f64,
    /// `⅛ inf(1 − p₀²)`
    pub delta: f64,
    pub sup_grad_mu0: f64,
    pub det0: Field<f64>,
}

impl InitialData {
    pub fn new(state: &GkState) -> Result<Self> {
        let g = state.metric()?;
        let p = state.angle();
        let inf = p.map(|&x| 1.0 - x * x).min();
        Ok(InitialData {
            t0: state.t,
            delta: inf / 8.0,
            sup_grad_mu0: grad_mu_sq(&g, &state.mu()).max().sqrt(),
            det0: g.det_field(),
        })
    }

    /// `((sup|∇μ₀|)⁻² + δ(t − t₀))⁻¹`, infinite-free for a flat start.
    pub fn decay_bound(&self, t: f64) -> f64 {
        let s = self.sup_grad_mu0;
        if s == 0.0 {
            return 0.0;
        }
        1.0 / (s.powi(-2) + self.delta * (t - self.t0))
    }
}

fn grad_mu_sq(g: &MetricField, mu: &Field<f64>) -> Field<f64> {
    let dm = gradient(mu);
    Field::from_index_fn(*g.grid(), |k| g.at(k).norm2_1(&dm.get(k)))
}

/// Angle extrema, the gradient bound, the μ heat residual and the `|θ|²` identity.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AngleMonitors {
    pub p_min: f64,
    pub p_max: f64,
    pub sup_grad_mu_sq: f64,
    pub decay_bound_value: f64,
    pub mu_heat_residual: f64,
    pub theta_identity_residual: f64,
}

/// `prev` is the previous accepted `μ` and the step between them.
pub fn angle_monitors(
    state: &GkState,
    g: &MetricField,
    prev: Option<(&Field<f64>, f64)>,
    init: &InitialData,
) -> AngleMonitors {
    let grid = *state.grid();
    let p = state.angle();
    let mu = state.mu();
    let gm = grad_mu_sq(g, &mu);
    let mu_heat_residual = match prev {
        Some((mu_prev, dt)) => {
            let lap = lc_laplacian(g, &mu);
            Field::<f64>::from_index_fn(grid, |k| (mu.get(k) - mu_prev.get(k)) / dt - lap.get(k)).max_abs()
        }
        None => 0.0,
    };
    let theta = state.lee_i(g);
    let dp = gradient(&p);
    let theta_identity_residual = Field::<f64>::from_index_fn(grid, |k| {
        let m = g.at(k);
        let pk = p.get(k);
        m.norm2_1(&theta.get(k)) - m.norm2_1(&dp.get(k)) / (1.0 - pk * pk)
    })
    .max_abs();
    AngleMonitors {
        p_min: p.min(),
        p_max: p.max(),
        sup_grad_mu_sq: gm.max(),
        decay_bound_value: init.decay_bound(state.t),
        mu_heat_residual,
        theta_identity_residual,
    }
}

/// Torsion sizes, the `dp` integral and the `𝓗` identity residual.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TorsionMonitors {
    pub sup_theta: f64,
    pub sup_h: f64,
    pub sup_dp: f64,
    pub integral_dp: f64,
    pub h_identity_residual: f64,
}

pub fn torsion_monitors(state: &GkState, g: &MetricField) -> TorsionMonitors {
    let grid = *state.grid();
    let theta = state.lee_i(g);
    let dp = gradient(&state.angle());
    let sup_theta = Field::<f64>::from_index_fn(grid, |k| g.at(k).norm2_1(&theta.get(k)).sqrt()).max();
    let sup_h = Field::<f64>::from_index_fn(grid, |k| {
        let h = state.h.get(k);
        g.at(k).inner3(&h, &h).sqrt()
    })
    .max();
    let dp_norm = Field::<f64>::from_index_fn(grid, |k| g.at(k).norm2_1(&dp.get(k)).sqrt());
    let density = Field::<f64>::from_index_fn(grid, |k| {
        let n = dp_norm.get(k);
        let a = n / (n * n + EPS_REG * EPS_REG).sqrt();
        n * a * g.at(k).sqrt_det
    });
    let h_identity_residual = Field::<f64>::from_index_fn(grid, |k| {
        let h = state.h.get(k);
        let (a, b) = (h_squared(g.at(k), &h), h_squared_star(g.at(k), &h));
        (0..10).map(|c| (a.0[c] - b.0[c]).abs()).fold(0.0, f64::max)
    })
    .max();
    TorsionMonitors {
        sup_theta,
        sup_h,
        sup_dp: dp_norm.max(),
        integral_dp: density.integral(),
        h_identity_residual,
    }
}

/// `‖dω_{K_i}‖∞` for the associated almost hyperKahler triple.
pub fn convergence_monitors(state: &GkState, g: &MetricField) -> Result<[f64; 3]> {
    let grid = *state.grid();
    let p_abs = state.angle().max_abs();
    if p_abs >= 1.0 - EPS_ND {
        return Err(GkError::DegenerateStructure {
            p_abs,
            limit: 1.0 - EPS_ND,
        });
    }
    let triples: Vec<[Mat4; 3]> = (0..grid.len())
        .map(|k| {
            let pt = GkPoint {
                g: g.at(k).g,
                i: state.i.get(k),
                j: state.j.get(k),
            };
            associated_triple(&pt, EPS_ND)
        })
        .collect::<Result<_>>()?;
    Ok(std::array::from_fn(|a| {
        let k = Field::<Mat4>::from_index_fn(grid, |idx| triples[idx][a]);
        d2(&kahler_form(g, &k)).max_abs()
    }))
}

/// Builds records along a trajectory, keeping the previous `μ` for the heat residual.
#[derive(Clone, Debug)]
pub struct Monitor {
    pub init: InitialData,
    prev_mu: Option<(f64, Field<f64>)>,
}

impl Monitor {
    pub fn new(initial: &GkState) -> Result<Self> {
        Ok(Monitor {
            init: InitialData::new(initial)?,
            prev_mu: None,
        })
    }

    /// Record for `state`, which must follow the previously recorded state.
    pub fn record(&mut self, state: &GkState, step: usize, dt: f64) -> Result<DiagnosticsRecord> {
        let g = state.metric()?;
        let prev = self.prev_mu.as_ref().map(|(t, mu)| (mu, state.t - t));
        let a = angle_monitors(state, &g, prev, &self.init);
        let tm = torsion_monitors(state, &g);
        let hk = convergence_monitors(state, &g)?;
        let c: Constraints = constraint_residuals(state)?;
        let det = g.det_field();
        let ratio = Field::<f64>::from_index_fn(*state.grid(), |k| det.get(k) / self.init.det0.get(k));
        self.prev_mu = Some((state.t, state.mu()));
        let gk = [c.torsion_i, c.torsion_j, c.i_square, c.j_square, c.hermitian_i, c.hermitian_j]
            .into_iter()
            .fold(0.0, f64::max);
        Ok(DiagnosticsRecord {
            step,
            t: state.t,
            dt,
            p_min: a.p_min,
            p_max: a.p_max,
            sup_grad_mu_sq: a.sup_grad_mu_sq,
            decay_bound_value: a.decay_bound_value,
            decay_bound_slack: a.decay_bound_value - a.sup_grad_mu_sq,
            mu_heat_residual: a.mu_heat_residual,
            theta_identity_residual: a.theta_identity_residual,
            sup_theta: tm.sup_theta,
            sup_h: tm.sup_h,
            sup_dp: tm.sup_dp,
            det_ratio_min: ratio.min(),
            det_ratio_max: ratio.max(),
            gk_constraint_residual: gk,
            torsion_i_residual: c.torsion_i,
            torsion_j_residual: c.torsion_j,
            dh_residual: c.dh,
            integral_dp: tm.integral_dp,
            h_identity_residual: tm.h_identity_residual,
            hk_closedness: hk,
            potential: None,
        })
    }
}

/// `C = max(sup ratio, 1/inf ratio)` over a record series.
pub fn volume_band(records: &[DiagnosticsRecord]) -> f64 {
    records
        .iter()
        .map(|r| r.det_ratio_max.max(1.0 / r.det_ratio_min))
        .fold(1.0, f64::max)
}

/// Absolute slack allowed per step in the maximum-principle checks.
pub const STEP_SLACK: f64 = 1e-6;

/// Outcome of one bound over a record series; `slack` is signed and never clamped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub pass: bool,
    pub slack: f64,
}

impl BoundCheck {
    fn from_slack(name: &str, slack: f64) -> Self {
        BoundCheck { name: name.to_string(), pass: slack >= 0.0, slack }
    }
}

/// Per-step bounds over a run: monotone angle extrema, the `|∇μ|²` decay bound and, when
/// the potential path ran, monotone `sup |β|²_g`. Slack is the worst margin over the run
/// after allowing [`STEP_SLACK`].
pub fn bound_checks(records: &[DiagnosticsRecord]) -> Vec<BoundCheck> {
    let min_over = |f: &dyn Fn(&DiagnosticsRecord, &DiagnosticsRecord) -> f64| {
        records.windows(2).map(|w| f(&w[0], &w[1])).fold(f64::INFINITY, f64::min)
    };
    let mut out = vec![
        BoundCheck::from_slack("p_max_non_increasing", min_over(&|a, b| a.p_max - b.p_max + STEP_SLACK)),
        BoundCheck::from_slack("p_min_non_decreasing", min_over(&|a, b| b.p_min - a.p_min + STEP_SLACK)),
        BoundCheck::from_slack(
            "grad_mu_decay_bound",
            records.iter().map(|r| r.decay_bound_slack + STEP_SLACK).fold(f64::INFINITY, f64::min),
        ),
    ];
    if records.iter().all(|r| r.potential.is_some()) && !records.is_empty() {
        let beta = |r: &DiagnosticsRecord| r.potential.map_or(0.0, |p| p.sup_beta_sq);
        out.push(BoundCheck::from_slack("sup_beta_sq_non_increasing", min_over(&|a, b| beta(a) - beta(b))));
    }
    out
}

#[cfg(test)]
mod tests;
