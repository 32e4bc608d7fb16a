//! Decomposed pluriclosed flow for a `(1,0)`-form `β` and a function `f` on the torus
//! with its constant complex structure `I`.
//!
//! Complex quantities live in the global holomorphic chart `z_p = x_{2p} + i x_{2p+1}`
//! (`p = 0, 1`), where the Chern connection of a Hermitian metric has only the symbols
//! `Γ^k_ip = g^{k l̄} ∂_i g_{p l̄}`. Hermitian components are `g_{p q̄} = g(∂_p, ∂_q̄)`, so the
//! flat metric has `g_{p q̄} = ½ δ`. With these conventions
//!
//! - `Δ f = 2 g^{q̄ p} ∂_p ∂_q̄ f` (the real Chern Laplacian),
//! - `Δ β_i = 2 g^{q̄ p} ∇_p ∇_q̄ β_i`,
//! - `tr_g ĝ = g^{q̄ p} ĝ_{p q̄}` and `log det` is the complex determinant.
//!
//! A `(1,0)`-form `α` is stored as the real 1-form `a = α + ᾱ`, so `α_p = ½(a_{2p} − i a_{2p+1})`.
//! The metric is recovered from `α = β − i∂f` as `ω = ω̂ + ∂̄α + ∂ᾱ`, which in real terms is
//! `ω = ω̂ + (d(b + d^c f))^{1,1}` with `d^c f = −df∘I`; the metric is `g_ab = ω(e_a, I e_b)`.
//!
//! The evolution is
//!
//! - `∂β_i = Δβ_i − 2 g^{l̄ k} g^{q̄ p} T_{i k q̄} ∂_l̄ β_p`, with `T_{i k q̄} = ∂_i g_{k q̄} − ∂_k g_{i q̄}`,
//! - `∂f = Δf + tr_g ĝ + log(det g / det h)`,
//!
//! and the reconstructed metric then follows pluriclosed flow, which for constant `I` is the
//! generalized Kahler-Ricci flow in the `I`-fixed gauge.

use num_complex::Complex64 as C;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::diagnostics::PotentialRecord;
use crate::error::{GkError, Result};
use crate::gkconstruct::GkState;
use crate::fields::diff::{hessian, partial, partials};
use crate::fields::hermitian::dc_function;
use crate::fields::{Field, Grid4};
use crate::linalg4::{Form2, Mat4, Sym4, Vec4, FORM2_PAIRS};

const I_UNIT: C = C { re: 0.0, im: 1.0 };

type Herm = [[C; 2]; 2];

/// `g_{p q̄} = g(∂_p, ∂_q̄)` for a real bilinear form.
fn hermitian_part(g: &Mat4) -> Herm {
    std::array::from_fn(|p| {
        std::array::from_fn(|q| {
            let (xp, yp, xq, yq) = (2 * p, 2 * p + 1, 2 * q, 2 * q + 1);
            0.25 * C::new(g[(xp, xq)] + g[(yp, yq)], g[(xp, yq)] - g[(yp, xq)])
        })
    })
}

/// `g^{q̄ p}` stored as `inv[q][p]`.
fn herm_inverse(g: &Herm) -> (Herm, f64) {
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let inv = [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]];
    (inv, det.re)
}

/// Components `α_p` of the `(1,0)` part of a real 1-form.
#[inline]
fn one_zero(a: &Vec4) -> [C; 2] {
    [0.5 * C::new(a[0], -a[1]), 0.5 * C::new(a[2], -a[3])]
}

/// Real 1-form `α + ᾱ` of a `(1,0)`-form.
#[inline]
fn real_form(al: &[C; 2]) -> Vec4 {
    Vec4::new(2.0 * al[0].re, -2.0 * al[0].im, 2.0 * al[1].re, -2.0 * al[1].im)
}

/// `∂_p` and `∂_p̄` from the real partials `d[a]` of a complex quantity.
#[inline]
fn holo(d: &[C; 4], p: usize) -> C {
    0.5 * (d[2 * p] - I_UNIT * d[2 * p + 1])
}

#[inline]
fn antiholo(d: &[C; 4], p: usize) -> C {
    0.5 * (d[2 * p] + I_UNIT * d[2 * p + 1])
}

/// Choice of Laplacian on `(1,0)`-forms. The cross-path test against the direct flow
/// selects [`BetaLaplacian::HolomorphicFirst`]; the other ordering differs by a curvature
/// term and does not agree.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaLaplacian {
    /// `2 g^{q̄ p} ∇_p ∇_q̄ β`
    #[default]
    HolomorphicFirst,
    /// `2 g^{q̄ p} ∇_q̄ ∇_p β`
    AntiholomorphicFirst,
}

/// Weight of `g^{l̄ k} g^{q̄ p} T_{i k q̄} ∂_l̄ β_p` in the `β` equation. The factor 2 comes
/// from counting torsion components as `∂_i g_{k q̄} − ∂_k g_{i q̄}` rather than as the
/// coefficients of `∂ω` over ordered index pairs.
const TORSION_WEIGHT: f64 = -2.0;

/// Flat Kahler background `ω̂` (constant) and flat reference metric `h = ĝ`.
#[derive(Clone, Debug)]
pub struct Background {
    pub i: Mat4,
    pub g_hat: Sym4,
    g_hat_c: Herm,
    log_det_h: f64,
}

impl Background {
    /// Constant `I`-Hermitian metric, the `I`-invariant part of `g`.
    pub fn new(i: Mat4, g: &Mat4) -> Self {
        let sym = 0.5 * (g + i.transpose() * g * i);
        let g_hat_c = hermitian_part(&sym);
        let (_, det) = herm_inverse(&g_hat_c);
        Background {
            i,
            g_hat: Sym4::from_mat(&sym),
            g_hat_c,
            log_det_h: det.ln(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PotentialState {
    /// Real form `β + β̄`.
    pub b: Field<Vec4>,
    pub f: Field<f64>,
    pub t: f64,
}

impl PotentialState {
    pub fn grid(&self) -> &Grid4 {
        self.f.grid()
    }

    /// Real form `α + ᾱ = b + d^c f` of `α = β − i∂f`.
    pub fn alpha(&self, bg: &Background) -> Field<Vec4> {
        let grid = *self.grid();
        let mut a = dc_function(&self.f, &Field::constant(grid, bg.i));
        a.axpy(1.0, &self.b);
        a
    }
}

/// `(da)^{1,1}(·, I·)`: the metric change produced by a real 1-form.
pub fn metric_from_one_form(a: &Field<Vec4>, i: &Mat4) -> Field<Sym4> {
    let d = partials(a);
    Field::from_index_fn(*a.grid(), |k| {
        let da = Mat4::from_fn(|r, c| d[r].get(k)[c] - d[c].get(k)[r]);
        let eta = 0.5 * (da + i.transpose() * da * i);
        Sym4::from_mat(&(eta * i))
    })
}

/// `ω̂ + (d(b + d^c f))^{1,1}` as a metric.
pub fn reconstruct_metric(state: &PotentialState, bg: &Background) -> Field<Sym4> {
    let mut g = metric_from_one_form(&state.alpha(bg), &bg.i);
    let grid = *state.grid();
    g.axpy(1.0, &Field::constant(grid, bg.g_hat));
    g
}

/// Time derivative of `(β, f)`, with `β` as a real 1-form.
#[derive(Clone, Debug)]
pub struct PotentialTangent {
    pub b: Field<Vec4>,
    pub f: Field<f64>,
}

/// Right-hand side of the decomposed flow.
pub fn potential_rhs(
    state: &PotentialState,
    bg: &Background,
    laplacian: BetaLaplacian,
) -> Result<PotentialTangent> {
    let grid = *state.grid();
    let g = reconstruct_metric(state, bg);
    let dg = partials(&g);
    let db = partials(&state.b);
    let ddb: [[Field<Vec4>; 4]; 4] = std::array::from_fn(|a| std::array::from_fn(|c| partial(&db[a], c)));
    let hf = hessian(&state.f);

    // Chern symbols Γ^k_ip, per point, with the Hermitian inverse and determinant
    let gamma_of = |k: usize| -> ([[[C; 2]; 2]; 2], Herm, f64) {
        let gm = g.get(k).to_mat();
        let gc = hermitian_part(&gm);
        let (inv, det) = herm_inverse(&gc);
        let dgc: [Herm; 4] = std::array::from_fn(|a| hermitian_part(&dg[a].get(k).to_mat()));
        let mut gam = [[[C::new(0.0, 0.0); 2]; 2]; 2];
        for (kk, gk) in gam.iter_mut().enumerate() {
            for (i, gki) in gk.iter_mut().enumerate() {
                for (p, v) in gki.iter_mut().enumerate() {
                    for l in 0..2 {
                        let d_i: [C; 4] = std::array::from_fn(|a| dgc[a][p][l]);
                        *v += inv[l][kk] * holo(&d_i, i);
                    }
                }
            }
        }
        (gam, inv, det)
    };
    let gamma: Vec<([[[C; 2]; 2]; 2], Herm, f64)> = (0..grid.len()).into_par_iter().map(gamma_of).collect();
    if gamma.iter().any(|(_, _, det)| !(*det > 0.0)) {
        return Err(GkError::MetricNotPositive);
    }
    // ∂_a of W_pi = Γ^k_pi β_k (slot 2p + i), for the antiholomorphic-first ordering
    let w_partials = match laplacian {
        BetaLaplacian::HolomorphicFirst => None,
        BetaLaplacian::AntiholomorphicFirst => {
            let w: Vec<[C; 4]> = (0..grid.len())
                .map(|k| {
                    let be = one_zero(&state.b.get(k));
                    let gm = &gamma[k].0;
                    std::array::from_fn(|slot| {
                        let (p, i) = (slot / 2, slot % 2);
                        gm[0][p][i] * be[0] + gm[1][p][i] * be[1]
                    })
                })
                .collect();
            let re = Field::<Vec4>::from_index_fn(grid, |k| Vec4::from_fn(|s, _| w[k][s].re));
            let im = Field::<Vec4>::from_index_fn(grid, |k| Vec4::from_fn(|s, _| w[k][s].im));
            Some((partials(&re), partials(&im)))
        }
    };

    let pts: Vec<(Vec4, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (gam, inv, det) = &gamma[k];
            let dgc: [Herm; 4] = std::array::from_fn(|a| hermitian_part(&dg[a].get(k).to_mat()));
            // ∂_a β_p and ∂_c ∂_a β_p as complex numbers
            let d1: [[C; 2]; 4] = std::array::from_fn(|a| one_zero(&db[a].get(k)));
            let d2: [[[C; 2]; 4]; 4] = std::array::from_fn(|a| std::array::from_fn(|c| one_zero(&ddb[a][c].get(k))));
            let dbar_beta = |q: usize, p: usize| -> C {
                let d: [C; 4] = std::array::from_fn(|a| d1[a][p]);
                antiholo(&d, q)
            };
            let dd_beta = |j: usize, q: usize, p: usize| -> C {
                // ∂_j ∂_q̄ β_p
                let inner: [C; 4] = std::array::from_fn(|c| {
                    let d: [C; 4] = std::array::from_fn(|a| d2[a][c][p]);
                    antiholo(&d, q)
                });
                holo(&inner, j)
            };
            let h = hf.get(k);
            let dd_f = |p: usize, q: usize| -> C {
                let (xp, yp, xq, yq) = (2 * p, 2 * p + 1, 2 * q, 2 * q + 1);
                0.25 * C::new(h.get(xp, xq) + h.get(yp, yq), h.get(xp, yq) - h.get(yp, xq))
            };
            // Laplacians
            let mut lap_beta = [C::new(0.0, 0.0); 2];
            for (i, out) in lap_beta.iter_mut().enumerate() {
                let mut s = C::new(0.0, 0.0);
                for p in 0..2 {
                    for q in 0..2 {
                        let mut term = dd_beta(p, q, i);
                        match &w_partials {
                            None => {
                                for kk in 0..2 {
                                    term -= gam[kk][p][i] * dbar_beta(q, kk);
                                }
                            }
                            Some((re, im)) => {
                                let d: [C; 4] = std::array::from_fn(|a| {
                                    C::new(re[a].get(k)[2 * p + i], im[a].get(k)[2 * p + i])
                                });
                                term -= antiholo(&d, q);
                            }
                        }
                        s += inv[q][p] * term;
                    }
                }
                *out = 2.0 * s;
            }
            // torsion T_{i k q̄} = ∂_i g_{k q̄} − ∂_k g_{i q̄}
            let dg_holo = |i: usize, kk: usize, q: usize| -> C {
                let d: [C; 4] = std::array::from_fn(|a| dgc[a][kk][q]);
                holo(&d, i)
            };
            let torsion = |i: usize, kk: usize, q: usize| dg_holo(i, kk, q) - dg_holo(kk, i, q);
            let mut t_term = [C::new(0.0, 0.0); 2];
            for (i, out) in t_term.iter_mut().enumerate() {
                let mut s = C::new(0.0, 0.0);
                for kk in 0..2 {
                    for l in 0..2 {
                        for q in 0..2 {
                            for p in 0..2 {
                                s += inv[l][kk] * inv[q][p] * torsion(i, kk, q) * dbar_beta(l, p);
                            }
                        }
                    }
                }
                *out = s;
            }
            let dbeta: [C; 2] = std::array::from_fn(|i| lap_beta[i] + TORSION_WEIGHT * t_term[i]);
            // f equation
            let mut lap_f = C::new(0.0, 0.0);
            let mut tr_hat = C::new(0.0, 0.0);
            for p in 0..2 {
                for q in 0..2 {
                    lap_f += inv[q][p] * dd_f(p, q);
                    tr_hat += inv[q][p] * bg.g_hat_c[p][q];
                }
            }
            let dfdt = 2.0 * lap_f.re + tr_hat.re + det.ln() - bg.log_det_h;
            (real_form(&dbeta), dfdt)
        })
        .collect();
    Ok(PotentialTangent {
        b: Field::from_index_fn(grid, |k| pts[k].0),
        f: Field::from_index_fn(grid, |k| pts[k].1),
    })
}

/// Metric velocity `(d(δb + d^c δf))^{1,1}(·, I·)` implied by a potential tangent.
pub fn metric_rate(tan: &PotentialTangent, bg: &Background) -> Field<Sym4> {
    let grid = *tan.f.grid();
    let mut a = dc_function(&tan.f, &Field::constant(grid, bg.i));
    a.axpy(1.0, &tan.b);
    metric_from_one_form(&a, &bg.i)
}

impl PotentialState {
    fn advanced(&self, a: f64, tan: &PotentialTangent) -> PotentialState {
        let mut b = self.b.clone();
        b.axpy(a, &tan.b);
        let mut f = self.f.clone();
        f.axpy(a, &tan.f);
        PotentialState { b, f, t: self.t + a }
    }
}

/// One classical RK4 step of the decomposed flow.
pub fn potential_step(
    state: &PotentialState,
    bg: &Background,
    dt: f64,
    laplacian: BetaLaplacian,
) -> Result<PotentialState> {
    let k1 = potential_rhs(state, bg, laplacian)?;
    let k2 = potential_rhs(&state.advanced(0.5 * dt, &k1), bg, laplacian)?;
    let k3 = potential_rhs(&state.advanced(0.5 * dt, &k2), bg, laplacian)?;
    let k4 = potential_rhs(&state.advanced(dt, &k3), bg, laplacian)?;
    let mut next = state.clone();
    for (k, w) in [(&k1, 1.0), (&k2, 2.0), (&k3, 2.0), (&k4, 1.0)] {
        next.b.axpy(dt * w / 6.0, &k.b);
        next.f.axpy(dt * w / 6.0, &k.f);
    }
    next.t = state.t + dt;
    Ok(next)
}

fn herm_field(g: &Field<Sym4>) -> Result<Vec<(Herm, Herm)>> {
    let out: Vec<(Herm, Herm)> = (0..g.grid().len())
        .map(|k| {
            let gc = hermitian_part(&g.get(k).to_mat());
            let (inv, _) = herm_inverse(&gc);
            (gc, inv)
        })
        .collect();
    if out.iter().any(|(gc, _)| !(herm_inverse(gc).1 > 0.0 && gc[0][0].re > 0.0)) {
        return Err(GkError::MetricNotPositive);
    }
    Ok(out)
}

/// `|β|²_g = g^{q̄ p} β_p β̄_q` for the reconstructed metric.
pub fn beta_norm_sq(state: &PotentialState, bg: &Background) -> Result<Field<f64>> {
    let herm = herm_field(&reconstruct_metric(state, bg))?;
    Ok(Field::from_index_fn(*state.grid(), |k| {
        let be = one_zero(&state.b.get(k));
        let inv = &herm[k].1;
        let mut s = C::new(0.0, 0.0);
        for p in 0..2 {
            for q in 0..2 {
                s += inv[q][p] * be[p] * be[q].conj();
            }
        }
        s.re
    }))
}

/// Running potential-path monitors against the initial metric `g₀`.
#[derive(Clone, Debug)]
pub struct PotentialMonitor {
    g0: Vec<Herm>,
    /// Weight `A` in `log tr_g g₀ − A(f − inf f)`.
    pub trace_weight: f64,
    q0: f64,
    running: f64,
}

impl PotentialMonitor {
    pub fn new(state: &PotentialState, bg: &Background, trace_weight: f64) -> Result<Self> {
        let g0 = herm_field(&reconstruct_metric(state, bg))?.into_iter().map(|(gc, _)| gc).collect();
        let mut m = PotentialMonitor { g0, trace_weight, q0: 0.0, running: 0.0 };
        m.q0 = m.trace_quantity(state, bg)?;
        m.running = m.q0;
        Ok(m)
    }

    /// `sup (log tr_g g₀ − A(f − inf f))`.
    pub fn trace_quantity(&self, state: &PotentialState, bg: &Background) -> Result<f64> {
        let herm = herm_field(&reconstruct_metric(state, bg))?;
        let inf_f = state.f.min();
        Ok((0..herm.len())
            .map(|k| {
                let inv = &herm[k].1;
                let mut tr = C::new(0.0, 0.0);
                for p in 0..2 {
                    for q in 0..2 {
                        tr += inv[q][p] * self.g0[k][p][q];
                    }
                }
                tr.re.ln() - self.trace_weight * (state.f.raw()[k] - inf_f)
            })
            .fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn record(&mut self, state: &PotentialState, bg: &Background, laplacian: BetaLaplacian) -> Result<PotentialRecord> {
        let tan = potential_rhs(state, bg, laplacian)?;
        self.running = self.running.max(self.trace_quantity(state, bg)?);
        Ok(PotentialRecord {
            sup_beta_sq: beta_norm_sq(state, bg)?.max(),
            df_dt_sup: tan.f.max_abs(),
            trace_bound_slack: self.running - self.q0,
        })
    }
}

/// Outcome of integrating the direct flow and the potential path side by side.
#[derive(Clone, Debug, Serialize)]
pub struct CrossPath {
    pub steps: usize,
    pub dt: f64,
    /// `max_t ‖g_direct − g_potential‖∞ / ‖g_direct‖∞`
    pub max_rel_error: f64,
    /// Initial reconstruction residual from the spectral solve.
    pub initial_residual: f64,
    pub records: Vec<PotentialRecord>,
}

/// Integrate the direct flow in the `I`-fixed gauge and the decomposed flow with the same
/// RK4 step over `[0, t_end]` and compare the metrics after every step.
///
/// `state.i` must be constant.
pub fn cross_path(state: &GkState, t_end: f64, steps: usize, laplacian: BetaLaplacian) -> Result<CrossPath> {
    let grid = *state.g.grid();
    let i0 = state.i.get(0);
    let dev = state.i.sub(&Field::constant(grid, i0)).max_abs();
    if dev > 1e-12 {
        return Err(GkError::Config(format!("potential path needs a constant I (deviation {dev:.3e})")));
    }
    let (mut pot, bg, initial_residual) = initial_potential(&state.g, &i0);
    let mut monitor = PotentialMonitor::new(&pot, &bg, 1.0)?;
    let mut records = vec![monitor.record(&pot, &bg, laplacian)?];
    let dt = t_end / steps as f64;
    let mut direct = state.clone();
    let mut max_rel_error = 0.0f64;
    for _ in 0..steps {
        direct = super::step(&direct, dt, super::Integrator::Rk4, super::Gauge::IFixed)?;
        pot = potential_step(&pot, &bg, dt, laplacian)?;
        let diff = reconstruct_metric(&pot, &bg).sub(&direct.g).max_abs();
        max_rel_error = max_rel_error.max(diff / direct.g.max_abs());
        records.push(monitor.record(&pot, &bg, laplacian)?);
    }
    Ok(CrossPath { steps, dt, max_rel_error, initial_residual, records })
}

// ---------------------------------------------------------------------------
// initial potential

/// In-place 4-D FFT of grid-ordered complex data.
fn fft4(data: &mut [C], grid: &Grid4, inverse: bool) {
    let n = grid.n;
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut line = vec![C::new(0.0, 0.0); n];
    for axis in 0..4 {
        let stride = grid.stride(axis);
        for start in 0..grid.len() {
            if (start / stride) % n != 0 {
                continue;
            }
            for (c, v) in line.iter_mut().enumerate() {
                *v = data[start + c * stride];
            }
            fft.process(&mut line);
            for (c, v) in line.iter().enumerate() {
                data[start + c * stride] = *v;
            }
        }
    }
    if inverse {
        let scale = 1.0 / grid.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }
}

/// Symbol of the 4th-order centered first difference: `D e^{ikx} = i s(k) e^{ikx}`.
fn fd_symbol(m: usize, grid: &Grid4) -> f64 {
    let kh = 2.0 * std::f64::consts::PI * m as f64 / grid.n as f64;
    (8.0 * kh.sin() - (2.0 * kh).sin()) / (6.0 * grid.h)
}

/// Real 1-form `a` with `(da)^{1,1}(·, I·) = target` in the discrete sense, by a
/// minimum-norm solve per Fourier mode with the difference-operator symbol.
///
/// Returns `a` and the sup-norm of the part of `target` outside the range (its failure to
/// be `∂∂̄`-closed after removing the mean).
pub fn solve_one_form(target: &Field<Sym4>, i: &Mat4) -> (Field<Vec4>, f64) {
    let grid = *target.grid();
    // target as η = −target·I, component-wise FFT
    let eta = Field::<Form2>::from_index_fn(grid, |k| Form2::from_mat(&(-(target.get(k).to_mat() * i))));
    let coeffs: Vec<Vec<C>> = (0..6)
        .map(|c| {
            let mut v: Vec<C> = (0..grid.len()).map(|k| C::new(eta.get(k).0[c], 0.0)).collect();
            fft4(&mut v, &grid, false);
            v
        })
        .collect();
    let sol: Vec<[C; 4]> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let ix = grid.multi_index(k);
            let s: [f64; 4] = std::array::from_fn(|a| fd_symbol(ix[a], &grid));
            if s.iter().all(|&x| x.abs() < 1e-12) {
                return [C::new(0.0, 0.0); 4];
            }
            // columns: image of each basis covector
            let m = nalgebra::DMatrix::<C>::from_fn(6, 4, |row, col| {
                let da = Mat4::from_fn(|r, c| {
                    (if c == col { s[r] } else { 0.0 }) - (if r == col { s[c] } else { 0.0 })
                });
                let eta = 0.5 * (da + i.transpose() * da * i);
                let (a, b) = FORM2_PAIRS[row];
                I_UNIT * eta[(a, b)]
            });
            let rhs = nalgebra::DVector::<C>::from_fn(6, |row, _| coeffs[row][k]);
            let svd = m.svd(true, true);
            let x = svd.solve(&rhs, 1e-10 * svd.singular_values.max()).expect("svd solve");
            std::array::from_fn(|c| x[c])
        })
        .collect();
    let a = (0..4)
        .map(|c| {
            let mut v: Vec<C> = sol.iter().map(|x| x[c]).collect();
            fft4(&mut v, &grid, true);
            v
        })
        .collect::<Vec<_>>();
    let one_form = Field::<Vec4>::from_index_fn(grid, |k| Vec4::new(a[0][k].re, a[1][k].re, a[2][k].re, a[3][k].re));
    let back = metric_from_one_form(&one_form, i);
    let mean = Sym4::from_mat(&Mat4::from_fn(|r, c| target.component(crate::linalg4::sym_index(r, c)).mean()));
    let residual = Field::<Sym4>::from_index_fn(grid, |k| {
        let mut s = target.get(k);
        for c in 0..10 {
            s.0[c] -= back.get(k).0[c] + mean.0[c];
        }
        s
    })
    .max_abs();
    (one_form, residual)
}

/// Potential state reproducing `g0` with the constant background `mean(g0)`:
/// `β₀ = α₀` from [`solve_one_form`] and `f₀ = 0`.
pub fn initial_potential(g0: &Field<Sym4>, i: &Mat4) -> (PotentialState, Background, f64) {
    let grid = *g0.grid();
    let mean = Mat4::from_fn(|r, c| g0.component(crate::linalg4::sym_index(r, c)).mean());
    let bg = Background::new(*i, &mean);
    let target = Field::<Sym4>::from_index_fn(grid, |k| {
        let mut s = g0.get(k);
        for c in 0..10 {
            s.0[c] -= bg.g_hat.0[c];
        }
        s
    });
    let (b, residual) = solve_one_form(&target, i);
    (
        PotentialState {
            b,
            f: Field::zeros(grid),
            t: 0.0,
        },
        bg,
        residual,
    )
}

#[cfg(test)]
mod tests;
