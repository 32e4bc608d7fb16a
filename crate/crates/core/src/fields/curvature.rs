//! Levi-Civita connection, Ricci curvature and the scalar Laplacian.

use rayon::prelude::*;

use super::diff::{hessian, partial, partials};
use super::forms::MetricField;
use super::grid::Field;
use crate::linalg4::{Sym4, Vec4, SYM_PAIRS};

/// `Γ^k_ij` stored as one symmetric field per upper index `k`.
#[derive(Clone, Debug)]
pub struct ChristoffelField {
    pub up: [Field<Sym4>; 4],
}

impl ChristoffelField {
    /// The `4×4×4` array `[k][i][j]` at one point.
    pub fn at(&self, idx: usize) -> [[[f64; 4]; 4]; 4] {
        let mut out = [[[0.0; 4]; 4]; 4];
        for (k, f) in self.up.iter().enumerate() {
            let s = f.get(idx);
            for (c, &(i, j)) in SYM_PAIRS.iter().enumerate() {
                out[k][i][j] = s.0[c];
                out[k][j][i] = s.0[c];
            }
        }
        out
    }

    /// Contracted symbol `g^{ij} Γ^k_ij`.
    pub fn contracted(&self, g: &MetricField) -> Field<Vec4> {
        Field::from_index_fn(*g.grid(), |idx| {
            let gi = &g.at(idx).ginv;
            let mut v = Vec4::zeros();
            for k in 0..4 {
                let s = self.up[k].get(idx);
                let mut acc = 0.0;
                for (c, &(i, j)) in SYM_PAIRS.iter().enumerate() {
                    let w = if i == j { 1.0 } else { 2.0 };
                    acc += w * gi[(i, j)] * s.0[c];
                }
                v[k] = acc;
            }
            v
        })
    }
}

/// `Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)`.
pub fn christoffel(g: &MetricField) -> ChristoffelField {
    let dg = partials(&g.g);
    let grid = *g.grid();
    let mut up: [Field<Sym4>; 4] = std::array::from_fn(|_| Field::zeros(grid));
    let pts: Vec<[Sym4; 4]> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let d: [Sym4; 4] = std::array::from_fn(|a| dg[a].get(idx));
            let gi = &g.at(idx).ginv;
            // first-kind symbols [l][c], then raise
            let mut first = [[0.0; 10]; 4];
            for (l, row) in first.iter_mut().enumerate() {
                for (c, &(i, j)) in SYM_PAIRS.iter().enumerate() {
                    row[c] = 0.5 * (d[i].get(j, l) + d[j].get(i, l) - d[l].get(i, j));
                }
            }
            std::array::from_fn(|k| {
                let mut s = [0.0; 10];
                for (l, row) in first.iter().enumerate() {
                    let w = gi[(k, l)];
                    for c in 0..10 {
                        s[c] += w * row[c];
                    }
                }
                Sym4(s)
            })
        })
        .collect();
    for (k, f) in up.iter_mut().enumerate() {
        for (idx, p) in pts.iter().enumerate() {
            f.set(idx, &p[k]);
        }
    }
    ChristoffelField { up }
}

/// `Rc_ij = ∂_kΓ^k_ij − ∂_i∂_j log√g + Γ^k_kl Γ^l_ij − Γ^k_jl Γ^l_ik`.
pub fn ricci(g: &MetricField) -> Field<Sym4> {
    let gamma = christoffel(g);
    ricci_with(g, &gamma)
}

pub fn ricci_with(g: &MetricField, gamma: &ChristoffelField) -> Field<Sym4> {
    let grid = *g.grid();
    let mut div = partial(&gamma.up[0], 0);
    for k in 1..4 {
        div.axpy(1.0, &partial(&gamma.up[k], k));
    }
    let log_vol = Field::from_index_fn(grid, |idx| g.at(idx).sqrt_det.ln());
    let hess = hessian(&log_vol);
    Field::from_index_fn(grid, |idx| {
        let gm = gamma.at(idx);
        let trace: [f64; 4] = std::array::from_fn(|l| (0..4).map(|k| gm[k][k][l]).sum());
        let dv = div.get(idx);
        let hs = hess.get(idx);
        let mut s = [0.0; 10];
        for (c, &(i, j)) in SYM_PAIRS.iter().enumerate() {
            let mut acc = dv.0[c] - hs.0[c];
            for l in 0..4 {
                acc += trace[l] * gm[l][i][j];
                for k in 0..4 {
                    acc -= gm[k][j][l] * gm[l][i][k];
                }
            }
            s[c] = acc;
        }
        Sym4(s)
    })
}

/// Scalar curvature `g^{ij} Rc_ij`.
pub fn scalar_curvature(g: &MetricField, rc: &Field<Sym4>) -> Field<f64> {
    Field::from_index_fn(*g.grid(), |idx| {
        rc.get(idx).to_mat().component_mul(&g.at(idx).ginv).sum()
    })
}

/// `Δf = g^{ij}(∂_i∂_j f − Γ^k_ij ∂_k f)`.
pub fn lc_laplacian(g: &MetricField, f: &Field<f64>) -> Field<f64> {
    let gamma = christoffel(g);
    lc_laplacian_with(g, &gamma, f)
}

pub fn lc_laplacian_with(g: &MetricField, gamma: &ChristoffelField, f: &Field<f64>) -> Field<f64> {
    let grid = *g.grid();
    let hess = hessian(f);
    let df = super::diff::gradient(f);
    let contracted = gamma.contracted(g);
    Field::from_index_fn(grid, |idx| {
        let h = hess.get(idx).to_mat();
        h.component_mul(&g.at(idx).ginv).sum() - contracted.get(idx).dot(&df.get(idx))
    })
}
