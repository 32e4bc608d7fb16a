//! Hermitian operators: the Chern connection, Chern Laplacian and Chern-Ricci form.
//!
//! The Chern connection is `Γ^C^k_ij = Γ^k_ij + ½ g^{kl} J^p_i (dω)_pjl`; it preserves
//! both `g` and `J`, and with it `Δf = Δ_C f + ⟨θ, ∇f⟩` for the Lee form `θ`. The
//! Chern-Ricci form is `ρ_C(X, Y) = Σ g(R^C(X, Y) J e_i, e_i) = tr(R^C(X, Y) J)`, which on a
//! Kahler metric is `−2 Rc(·, J·)`.

use super::curvature::{christoffel, ChristoffelField};
use super::diff::{gradient, hessian, partials};
use super::forms::{d1, d2, kahler_form, MetricField};
use super::grid::Field;
use crate::error::{GkError, Result};
use crate::linalg4::{Form2, Mat4, Vec4, FORM2_PAIRS};

/// `(Ia)(X) = −a(IX)` on 1-forms.
#[inline]
pub fn act_on_one_form(j: &Mat4, a: &Vec4) -> Vec4 {
    -(j.transpose() * a)
}

/// `d^c f = −df∘J`.
pub fn dc_function(f: &Field<f64>, j: &Field<Mat4>) -> Field<Vec4> {
    let df = gradient(f);
    Field::from_index_fn(*f.grid(), |i| act_on_one_form(&j.get(i), &df.get(i)))
}

/// Pointwise angle function `p = ¼ tr(IJ)`.
pub fn angle_field(i: &Field<Mat4>, j: &Field<Mat4>) -> Field<f64> {
    Field::from_index_fn(*i.grid(), |k| 0.25 * (i.get(k) * j.get(k)).trace())
}

/// Chern connection as matrices `(Γ_a)^k_j = Γ^C^k_{aj}`, one field per direction `a`.
pub fn chern_connection(g: &MetricField, j: &Field<Mat4>) -> [Field<Mat4>; 4] {
    let lc = christoffel(g);
    chern_connection_with(g, &lc, j)
}

pub fn chern_connection_with(
    g: &MetricField,
    lc: &ChristoffelField,
    j: &Field<Mat4>,
) -> [Field<Mat4>; 4] {
    let grid = *g.grid();
    let dw = d2(&kahler_form(g, j));
    std::array::from_fn(|a| {
        Field::from_index_fn(grid, |idx| {
            let gm = lc.at(idx);
            let jm = j.get(idx);
            let full = dw.get(idx).to_full();
            let gi = &g.at(idx).ginv;
            // T_jl = ½ J^p_a (dω)_pjl, raised on l
            let mut t = Mat4::zeros();
            for jj in 0..4 {
                for l in 0..4 {
                    let mut s = 0.0;
                    for p in 0..4 {
                        s += jm[(p, a)] * full[p][jj][l];
                    }
                    t[(jj, l)] = 0.5 * s;
                }
            }
            let mut out = Mat4::zeros();
            for k in 0..4 {
                for jj in 0..4 {
                    let mut s = gm[k][a][jj];
                    for l in 0..4 {
                        s += gi[(k, l)] * t[(jj, l)];
                    }
                    out[(k, jj)] = s;
                }
            }
            out
        })
    })
}

/// `∇_a J` for a connection given as matrices `Γ_a`: `∂_a J + [Γ_a, J]`.
pub fn covariant_derivative_endo(conn: &[Field<Mat4>; 4], j: &Field<Mat4>) -> [Field<Mat4>; 4] {
    let dj = partials(j);
    std::array::from_fn(|a| {
        Field::from_index_fn(*j.grid(), |idx| {
            let ga = conn[a].get(idx);
            let jm = j.get(idx);
            dj[a].get(idx) + ga * jm - jm * ga
        })
    })
}

/// Chern Laplacian `g^{ij}(∂_i∂_j f − Γ^C^k_ij ∂_k f)`.
pub fn chern_laplacian(g: &MetricField, j: &Field<Mat4>, f: &Field<f64>) -> Field<f64> {
    let conn = chern_connection(g, j);
    let hess = hessian(f);
    let df = gradient(f);
    Field::from_index_fn(*g.grid(), |idx| {
        let gi = &g.at(idx).ginv;
        let mut s = hess.get(idx).to_mat().component_mul(gi).sum();
        let dfi = df.get(idx);
        for a in 0..4 {
            let ga = conn[a].get(idx);
            for b in 0..4 {
                if gi[(a, b)] == 0.0 {
                    continue;
                }
                // Γ^k_ab = (Γ_a)^k_b
                s -= gi[(a, b)] * (0..4).map(|k| ga[(k, b)] * dfi[k]).sum::<f64>();
            }
        }
        s
    })
}

/// Chern Laplacian through the pairing `−⟨dd^c f, ω⟩`, independent of any connection.
pub fn chern_laplacian_pairing(g: &MetricField, j: &Field<Mat4>, f: &Field<f64>) -> Field<f64> {
    let ddc = d1(&dc_function(f, j));
    let w = kahler_form(g, j);
    Field::from_index_fn(*g.grid(), |idx| -g.at(idx).inner2(&ddc.get(idx), &w.get(idx)))
}

/// Chern-Ricci form `tr(R^C(∂_a, ∂_b) J)` from the curvature of the Chern connection.
pub fn chern_ricci_curvature(g: &MetricField, j: &Field<Mat4>) -> Field<Form2> {
    let grid = *g.grid();
    let conn = chern_connection(g, j);
    let a_form = Field::<Vec4>::from_index_fn(grid, |idx| {
        let jm = j.get(idx);
        Vec4::from_fn(|b, _| (conn[b].get(idx) * jm).trace())
    });
    let da = d1(&a_form);
    let dj = partials(j);
    Field::from_index_fn(grid, |idx| {
        let gam: [Mat4; 4] = std::array::from_fn(|a| conn[a].get(idx));
        let djm: [Mat4; 4] = std::array::from_fn(|a| dj[a].get(idx));
        let jm = j.get(idx);
        let base = da.get(idx);
        let mut c = [0.0; 6];
        for (m, &(a, b)) in FORM2_PAIRS.iter().enumerate() {
            let tr = base.0[m] - (gam[b] * djm[a]).trace() + (gam[a] * djm[b]).trace()
                + ((gam[a] * gam[b] - gam[b] * gam[a]) * jm).trace();
            c[m] = tr;
        }
        Form2(c)
    })
}

/// `ρ_C = −d(I d log(1 − p²))` for nondegenerate GK data on the torus.
pub fn chern_ricci(i: &Field<Mat4>, p: &Field<f64>, eps_nd: f64) -> Result<Field<Form2>> {
    let sup = p.max_abs();
    if sup >= 1.0 - eps_nd {
        return Err(GkError::DegenerateStructure {
            p_abs: sup,
            limit: 1.0 - eps_nd,
        });
    }
    let log = p.map(|v| (1.0 - v * v).ln());
    Ok(d1(&dc_function(&log, i)).scaled(-1.0))
}

/// `Rc(·, J·)`, the Ricci form of a Kahler metric in the same pairing as `ω`.
pub fn ricci_form(rc: &Field<crate::linalg4::Sym4>, j: &Field<Mat4>) -> Field<Form2> {
    Field::from_index_fn(*j.grid(), |idx| Form2::from_mat(&(rc.get(idx).to_mat() * j.get(idx))))
}
