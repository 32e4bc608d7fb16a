//! Flat hyperKahler seeds and their deformation into nondegenerate generalized Kahler
//! data by an `ω_K`-Hamiltonian diffeomorphism.
//!
//! The deformed pair is `(I, J') = (I, Φ^*J)` with metric `g' = c·ω_K [J', I]`, where `c`
//! is fixed by requiring `g' = g` on the seed (`c = ½` in the standard frame). The
//! metric is symmetric and Hermitian for both structures by construction; whether
//! the pair is generalized Kahler is decided by [`validate_gk`], not assumed.
//!
//! The Hamiltonian vector field is `X_f = −ω_K⁻¹ df`, i.e. `ι_{X_f} ω_K = −df`. With
//! this sign the angle responds as `∂_s p|₀ = ½ Δf`.

mod hamiltonian;
mod state;
mod validate;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use hamiltonian::{FourierHamiltonian, FourierMode};
pub use state::GkState;
pub use validate::{validate_gk, GkReport};

use crate::error::{GkError, Result};
use crate::fields::forms::{d2, MetricField};
use crate::fields::interp::interpolate;
use crate::fields::{Field, Grid4};
use crate::linalg4::{self, wedge22, Form2, Mat4, Sym4, Vec4};

/// Default ceiling on `sup |p|` for constructed data.
pub const P_MAX: f64 = 0.9;

/// Flat metric with the constant quaternionic triple `IJ = K`.
#[derive(Clone, Debug)]
pub struct HyperKahlerSeed {
    pub grid: Grid4,
    pub g: Field<Sym4>,
    pub i: Field<Mat4>,
    pub j: Field<Mat4>,
    pub k: Field<Mat4>,
}

pub fn flat_seed(grid: Grid4) -> HyperKahlerSeed {
    HyperKahlerSeed {
        grid,
        g: Field::constant(grid, Sym4::identity()),
        i: Field::constant(grid, linalg4::seed_i()),
        j: Field::constant(grid, linalg4::seed_j()),
        k: Field::constant(grid, linalg4::seed_k()),
    }
}

impl HyperKahlerSeed {
    pub fn to_state(&self) -> GkState {
        GkState::from_structures(self.g.clone(), self.i.clone(), self.j.clone())
            .expect("flat seed metric is nondegenerate")
    }

    /// `ω_K = gK` at the (constant) seed point.
    fn omega_k(&self) -> Mat4 {
        self.g.get(0).to_mat() * self.k.get(0)
    }
}

/// Sign `σ` in `ι_{X_f} ω_K = σ df`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HamiltonianSign {
    Plus,
    Minus,
}

impl HamiltonianSign {
    fn value(self) -> f64 {
        match self {
            HamiltonianSign::Plus => 1.0,
            HamiltonianSign::Minus => -1.0,
        }
    }
}

/// Hamiltonian deformation parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deformation {
    pub hamiltonian: FourierHamiltonian,
    pub s: f64,
    pub ode_steps: usize,
    pub sign: HamiltonianSign,
}

impl Deformation {
    pub fn new(hamiltonian: FourierHamiltonian, s: f64, ode_steps: usize) -> Self {
        Deformation {
            hamiltonian,
            s,
            ode_steps,
            sign: HamiltonianSign::Minus,
        }
    }
}

/// Forward map `Φ` (unwrapped coordinates) and its Jacobian at every grid point.
#[derive(Clone, Debug)]
pub struct FlowMap {
    pub phi: Field<Vec4>,
    pub jacobian: Field<Mat4>,
}

fn hamiltonian_matrix(seed: &HyperKahlerSeed, sign: HamiltonianSign) -> Mat4 {
    // ω_K^T X = σ df  ⇒  X = −σ ω_K⁻¹ df
    let inv = seed.omega_k().try_inverse().expect("ω_K is nondegenerate");
    -inv * sign.value()
}

/// Integrates `dx/ds = X_f(x)` and the variational equation `dD/ds = DX_f(x) D` by RK4
/// from one starting point over flow time `def.s`.
pub fn trace_point(seed: &HyperKahlerSeed, def: &Deformation, start: Vec4) -> Result<(Vec4, Mat4)> {
    let s_mat = hamiltonian_matrix(seed, def.sign);
    let steps = def.ode_steps.max(1);
    let ds = def.s / steps as f64;
    let f = &def.hamiltonian;
    let limit = seed.grid.l / 4.0;
    let rhs = |x: &Vec4, d: &Mat4| -> (Vec4, Mat4) {
        let (g, h) = f.gradient_hessian([x[0], x[1], x[2], x[3]]);
        (s_mat * g, s_mat * h * d)
    };
    let mut x = start;
    let mut d = Mat4::identity();
    for _ in 0..steps {
        let (k1x, k1d) = rhs(&x, &d);
        let (k2x, k2d) = rhs(&(x + k1x * (ds / 2.0)), &(d + k1d * (ds / 2.0)));
        let (k3x, k3d) = rhs(&(x + k2x * (ds / 2.0)), &(d + k2d * (ds / 2.0)));
        let (k4x, k4d) = rhs(&(x + k3x * ds), &(d + k3d * ds));
        let dx = (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (ds / 6.0);
        let moved = dx.amax();
        if moved > limit {
            return Err(GkError::StepTooLarge { moved, limit });
        }
        x += dx;
        d += (k1d + k2d * 2.0 + k3d * 2.0 + k4d) * (ds / 6.0);
    }
    Ok((x, d))
}

/// Flow map sampled at every grid point.
pub fn hamiltonian_flow_map(seed: &HyperKahlerSeed, def: &Deformation) -> Result<FlowMap> {
    let grid = seed.grid;
    let pts: Vec<(Vec4, Mat4)> = (0..grid.len())
        .into_par_iter()
        .map(|idx| trace_point(seed, def, Vec4::from_column_slice(&grid.point(idx))))
        .collect::<Result<_>>()?;
    Ok(FlowMap {
        phi: Field::from_index_fn(grid, |i| pts[i].0),
        jacobian: Field::from_index_fn(grid, |i| pts[i].1),
    })
}

/// Pullback `Φ^*A = dΦ⁻¹ A(Φ(x)) dΦ` of an endomorphism field.
pub fn pullback_endo(map: &FlowMap, a: &Field<Mat4>) -> Field<Mat4> {
    Field::from_index_fn(*a.grid(), |i| {
        let x = map.phi.get(i);
        let d = map.jacobian.get(i);
        let at = interpolate(a, [x[0], x[1], x[2], x[3]]);
        d.try_inverse().expect("flow Jacobian is invertible") * at * d
    })
}

/// Pullback `Φ^*ω = dΦᵀ ω(Φ(x)) dΦ` of a 2-form field.
pub fn pullback_form2(map: &FlowMap, w: &Field<Form2>) -> Field<Form2> {
    Field::from_index_fn(*w.grid(), |i| {
        let x = map.phi.get(i);
        let d = map.jacobian.get(i);
        let at = interpolate(w, [x[0], x[1], x[2], x[3]]).to_mat();
        Form2::from_mat(&(d.transpose() * at * d))
    })
}

/// Residuals of the two-form description `B = ω_K`, `ω₁ = ω_I − Φ^*ω_J`, `ω₂ = ω_I + Φ^*ω_J`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TripleReport {
    pub b_wedge_w1: f64,
    pub b_wedge_w2: f64,
    pub w1_wedge_w2: f64,
    /// `ω₁² + ω₂² − 4B²`
    pub quadratic: f64,
    /// Range of `λ = ω₁²/ω₂²`, which must stay positive.
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub d_w1: f64,
    pub d_w2: f64,
    /// `ω_K` pulled back by `Φ` minus `ω_K`.
    pub symplectic_defect: f64,
    /// Range of `r` in `σ = [I, J'] g'⁻¹ ≈ r ω_K⁻¹`, and the relative deviation from that form.
    pub poisson_ratio_min: f64,
    pub poisson_ratio_max: f64,
    pub poisson_deviation: f64,
    /// Largest `|g' − g'ᵀ|` before symmetrization.
    pub metric_asymmetry: f64,
}

/// Deformed data together with every construction-level diagnostic.
#[derive(Clone, Debug)]
pub struct Deformed {
    pub state: GkState,
    pub map: FlowMap,
    pub report: GkReport,
    pub triple: TripleReport,
}

/// Thresholds for accepting constructed data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstructLimits {
    pub p_max: f64,
    /// Largest accepted differential residual.
    pub residual_tol: f64,
}

impl Default for ConstructLimits {
    fn default() -> Self {
        ConstructLimits {
            p_max: P_MAX,
            residual_tol: 1e-3,
        }
    }
}

/// Builds `(g', I, J')`, validates it and reports the two-form constraints.
pub fn deform(seed: &HyperKahlerSeed, def: &Deformation, limits: &ConstructLimits) -> Result<Deformed> {
    let grid = seed.grid;
    let map = hamiltonian_flow_map(seed, def)?;
    let jp = pullback_endo(&map, &seed.j);
    let wk = seed.omega_k();
    let (i0, j0) = (seed.i.get(0), seed.j.get(0));
    let c = seed.g.get(0).to_mat().trace() / (wk * (j0 * i0 - i0 * j0)).trace();
    let raw = Field::<Mat4>::from_index_fn(grid, |k| {
        let j = jp.get(k);
        wk * (j * i0 - i0 * j) * c
    });
    let g = raw.map(Sym4::from_mat);
    for k in 0..grid.len() {
        if g.get(k).to_mat().cholesky().is_none() {
            return Err(GkError::MetricNotPositive);
        }
    }
    let state = GkState::from_structures(g, seed.i.clone(), jp)?;
    let p = state.angle();
    let sup = p.max_abs();
    if sup >= limits.p_max {
        return Err(GkError::DegenerateStructure {
            p_abs: sup,
            limit: limits.p_max,
        });
    }
    let report = validate_gk(&state)?;
    let triple = triple_report(seed, &map, &state)?;
    let worst = report.compatibility().max(report.differential());
    if !(worst <= limits.residual_tol) {
        return Err(GkError::ValidationFailed(
            serde_json::to_string(&report).unwrap_or_default(),
        ));
    }
    Ok(Deformed {
        state,
        map,
        report,
        triple,
    })
}

fn triple_report(seed: &HyperKahlerSeed, map: &FlowMap, state: &GkState) -> Result<TripleReport> {
    let grid = seed.grid;
    let flat = MetricField::new(seed.g.clone())?;
    let wi = crate::fields::forms::kahler_form(&flat, &seed.i);
    let wj = crate::fields::forms::kahler_form(&flat, &seed.j);
    let b = crate::fields::forms::kahler_form(&flat, &seed.k);
    let pj = pullback_form2(map, &wj);
    let w1 = wi.sub(&pj);
    let w2 = wi.add(&pj);
    let scalar = |f: &(dyn Fn(usize) -> f64 + Sync)| Field::<f64>::from_index_fn(grid, f);
    let bw1 = scalar(&|k| wedge22(&b.get(k), &w1.get(k))).max_abs();
    let bw2 = scalar(&|k| wedge22(&b.get(k), &w2.get(k))).max_abs();
    let w12 = scalar(&|k| wedge22(&w1.get(k), &w2.get(k))).max_abs();
    let quad = scalar(&|k| {
        let (x, y, z) = (w1.get(k), w2.get(k), b.get(k));
        wedge22(&x, &x) + wedge22(&y, &y) - 4.0 * wedge22(&z, &z)
    })
    .max_abs();
    let lambda = scalar(&|k| {
        let (x, y) = (w1.get(k), w2.get(k));
        wedge22(&x, &x) / wedge22(&y, &y)
    });
    let wk = b.get(0).to_mat();
    let symplectic_defect = pullback_form2(map, &b).sub(&b).max_abs();
    let wk_inv = wk.try_inverse().expect("ω_K is nondegenerate");
    let metric = state.metric()?;
    let ratio = scalar(&|k| {
        let (i, j) = (state.i.get(k), state.j.get(k));
        let sigma = (i * j - j * i) * metric.at(k).ginv;
        sigma.dot(&wk_inv) / wk_inv.norm_squared()
    });
    let deviation = scalar(&|k| {
        let (i, j) = (state.i.get(k), state.j.get(k));
        let sigma = (i * j - j * i) * metric.at(k).ginv;
        let r = ratio.get(k);
        (sigma - wk_inv * r).norm() / (wk_inv * r).norm().max(f64::MIN_POSITIVE)
    });
    let metric_asymmetry = Field::<Mat4>::from_index_fn(grid, |k| {
        let j = state.j.get(k);
        let i = state.i.get(k);
        let m = wk * (j * i - i * j);
        m - m.transpose()
    })
    .max_abs();
    Ok(TripleReport {
        b_wedge_w1: bw1,
        b_wedge_w2: bw2,
        w1_wedge_w2: w12,
        quadratic: quad,
        lambda_min: lambda.min(),
        lambda_max: lambda.max(),
        d_w1: d2(&w1).max_abs(),
        d_w2: d2(&w2).max_abs(),
        symplectic_defect,
        poisson_ratio_min: ratio.min(),
        poisson_ratio_max: ratio.max(),
        poisson_deviation: deviation.max(),
        metric_asymmetry,
    })
}
