//! Lie derivatives along a vector field, written with partial derivatives only
//! (the connection terms cancel on a torsion-free connection).

use super::diff::partials;
use super::grid::Field;
use crate::linalg4::{Form3, Mat4, Sym4, Vec4, FORM3_TRIPLES, SYM_PAIRS};

/// `∂_a X` as the matrix `m[(l, a)] = ∂_a X^l`.
fn jacobian(x: &Field<Vec4>) -> Field<Mat4> {
    let d = partials(x);
    Field::from_index_fn(*x.grid(), |i| {
        Mat4::from_columns(&[d[0].get(i), d[1].get(i), d[2].get(i), d[3].get(i)])
    })
}

/// Directional derivative `X^q ∂_q T` of any tensor field.
fn advect<T: crate::linalg4::Tensor>(x: &Field<Vec4>, t: &Field<T>) -> Field<T> {
    let d = partials(t);
    let grid = *x.grid();
    let mut out = Field::<T>::zeros(grid);
    let nc = T::N;
    let dst = out.raw_mut();
    use rayon::prelude::*;
    dst.par_chunks_mut(nc).enumerate().for_each(|(i, slot)| {
        let xv = x.get(i);
        for (a, da) in d.iter().enumerate() {
            let src = &da.raw()[i * nc..(i + 1) * nc];
            for c in 0..nc {
                slot[c] += xv[a] * src[c];
            }
        }
    });
    out
}

/// `(L_X J)^l_k = X^q ∂_q J^l_k − J^p_k ∂_p X^l + ∂_k X^p J^l_p`.
pub fn lie_endo(x: &Field<Vec4>, j: &Field<Mat4>) -> Field<Mat4> {
    let adv = advect(x, j);
    let dx = jacobian(x);
    Field::from_index_fn(*x.grid(), |i| {
        let jm = j.get(i);
        let m = dx.get(i);
        adv.get(i) - m * jm + jm * m
    })
}

/// `(L_X g)_ij = X^q ∂_q g_ij + g_qj ∂_i X^q + g_iq ∂_j X^q`.
pub fn lie_metric(x: &Field<Vec4>, g: &Field<Sym4>) -> Field<Sym4> {
    let adv = advect(x, g);
    let dx = jacobian(x);
    Field::from_index_fn(*x.grid(), |i| {
        let gm = g.get(i).to_mat();
        let t = gm * dx.get(i);
        let mut s = adv.get(i);
        for (c, &(a, b)) in SYM_PAIRS.iter().enumerate() {
            s.0[c] += t[(b, a)] + t[(a, b)];
        }
        s
    })
}

/// `(L_X a)_i = X^q ∂_q a_i + a_q ∂_i X^q`.
pub fn lie_one_form(x: &Field<Vec4>, a: &Field<Vec4>) -> Field<Vec4> {
    let adv = advect(x, a);
    let dx = jacobian(x);
    Field::from_index_fn(*x.grid(), |i| adv.get(i) + dx.get(i).transpose() * a.get(i))
}

/// `(L_X H)_abc = X^q ∂_q H_abc + H_qbc ∂_a X^q + H_aqc ∂_b X^q + H_abq ∂_c X^q`.
pub fn lie_three_form(x: &Field<Vec4>, h: &Field<Form3>) -> Field<Form3> {
    let adv = advect(x, h);
    let dx = jacobian(x);
    Field::from_index_fn(*x.grid(), |i| {
        let full = h.get(i).to_full();
        let m = dx.get(i);
        let mut out = adv.get(i);
        for (k, &(a, b, c)) in FORM3_TRIPLES.iter().enumerate() {
            let mut s = 0.0;
            for q in 0..4 {
                s += full[q][b][c] * m[(q, a)] + full[a][q][c] * m[(q, b)] + full[a][b][q] * m[(q, c)];
            }
            out.0[k] += s;
        }
        out
    })
}

/// Raises a 1-form with a metric field: `θ^♯ = g⁻¹θ`.
pub fn sharp(g: &super::forms::MetricField, theta: &Field<Vec4>) -> Field<Vec4> {
    Field::from_index_fn(*g.grid(), |i| g.at(i).raise(&theta.get(i)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::grid::Grid4;
    use crate::linalg4::{seed_i, seed_j};
    use std::f64::consts::PI;

    fn xfield(x: [f64; 4]) -> Vec4 {
        Vec4::new(
            (x[1] + x[2]).sin(),
            0.5 * x[0].cos() + 0.2,
            (x[3] - x[0]).sin() * 0.7,
            0.3 * (x[1] + 2.0 * x[2]).cos(),
        )
    }

    fn frame(x: [f64; 4]) -> Mat4 {
        let mut a = Mat4::identity();
        a[(0, 1)] = 0.3 * x[2].sin();
        a[(2, 3)] = 0.2 * (x[0] + x[1]).cos();
        a[(3, 0)] = 0.25 * x[1].sin();
        a[(1, 2)] = 0.1 * x[3].cos();
        a
    }

    fn jfield(x: [f64; 4]) -> Mat4 {
        let a = frame(x);
        a.try_inverse().unwrap() * seed_i() * a
    }

    fn gfield(x: [f64; 4]) -> Mat4 {
        let a = frame(x);
        a.transpose() * a
    }

    /// Time-`s` flow of `xfield` by small RK4 steps.
    fn flow(mut p: [f64; 4], s: f64) -> [f64; 4] {
        let steps = 40;
        let dt = s / steps as f64;
        let add = |p: [f64; 4], v: Vec4, c: f64| std::array::from_fn(|a| p[a] + c * v[a]);
        for _ in 0..steps {
            let k1 = xfield(p);
            let k2 = xfield(add(p, k1, dt / 2.0));
            let k3 = xfield(add(p, k2, dt / 2.0));
            let k4 = xfield(add(p, k3, dt));
            p = add(p, k1 + k2 * 2.0 + k3 * 2.0 + k4, dt / 6.0);
        }
        p
    }

    fn flow_jacobian(p: [f64; 4], s: f64) -> Mat4 {
        let e = 1e-5;
        Mat4::from_fn(|l, a| {
            let mut pp = p;
            let mut pm = p;
            pp[a] += e;
            pm[a] -= e;
            (flow(pp, s)[l] - flow(pm, s)[l]) / (2.0 * e)
        })
    }

    fn pullback_endo(p: [f64; 4], s: f64) -> Mat4 {
        let d = flow_jacobian(p, s);
        d.try_inverse().unwrap() * jfield(flow(p, s)) * d
    }

    fn pullback_metric(p: [f64; 4], s: f64) -> Mat4 {
        let d = flow_jacobian(p, s);
        d.transpose() * gfield(flow(p, s)) * d
    }

    #[test]
    fn lie_derivative_matches_flow_pullback() {
        let (a, b) = pullback_errors(16);
        let (c, d) = pullback_errors(32);
        assert!(c < 1e-3 && d < 1e-3, "{c:e} {d:e}");
        assert!(a / c > 10.0 && b / d > 10.0, "{a:e} {c:e} {b:e} {d:e}");
    }

    fn pullback_errors(n: usize) -> (f64, f64) {
        let grid = Grid4::new(n, 2.0 * PI);
        let x = Field::from_fn(grid, xfield);
        let lj = lie_endo(&x, &Field::from_fn(grid, jfield));
        let lg = lie_metric(&x, &Field::from_fn(grid, |p| Sym4::from_mat(&gfield(p))));
        let s = 1e-3;
        let mut err_j: f64 = 0.0;
        let mut err_g: f64 = 0.0;
        for idx in (0..grid.len()).step_by(grid.len() / 97) {
            let p = grid.point(idx);
            let oracle_j = (pullback_endo(p, s) - pullback_endo(p, -s)) / (2.0 * s);
            let oracle_g = (pullback_metric(p, s) - pullback_metric(p, -s)) / (2.0 * s);
            err_j = err_j.max((lj.get(idx) - oracle_j).amax());
            err_g = err_g.max((lg.get(idx).to_mat() - oracle_g).amax());
        }
        (err_j, err_g)
    }

    #[test]
    fn trivial_cases_vanish() {
        let grid = Grid4::new(8, 1.0);
        let zero = Field::<Vec4>::zeros(grid);
        let j = Field::from_fn(grid, jfield);
        assert_eq!(lie_endo(&zero, &j).max_abs(), 0.0);
        let c = Field::constant(grid, Vec4::new(1.0, -2.0, 0.5, 0.0));
        assert!(lie_endo(&c, &Field::constant(grid, seed_j())).max_abs() < 1e-15);
        assert!(lie_metric(&c, &Field::constant(grid, Sym4::identity())).max_abs() < 1e-15);
        assert!(lie_three_form(&c, &Field::constant(grid, Form3([1.0, 2.0, 3.0, 4.0]))).max_abs() < 1e-15);
    }

    #[test]
    fn cartan_formula_on_one_forms() {
        let (a, b) = (cartan_residual(16), cartan_residual(32));
        assert!((a / b).log2() > 3.5, "{a:e} {b:e}");
    }

    /// `L_X a − d(ι_X a) − ι_X da`.
    fn cartan_residual(n: usize) -> f64 {
        let grid = Grid4::new(n, 2.0 * PI);
        let x = Field::from_fn(grid, xfield);
        let a = Field::from_fn(grid, |p| Vec4::new(p[2].cos(), (p[0] + p[3]).sin(), 0.4, p[1].sin()));
        let lhs = lie_one_form(&x, &a);
        let contraction = Field::from_index_fn(grid, |i| x.get(i).dot(&a.get(i)));
        let da = crate::fields::forms::d1(&a);
        let rhs = crate::fields::forms::d0(&contraction).add(&Field::from_index_fn(grid, |i| {
            // (ι_X da)_b = X^a (da)_ab
            let m = da.get(i).to_mat();
            m.transpose() * x.get(i)
        }));
        lhs.sub(&rhs).max_abs()
    }

    /// `L_X H − d(ι_X H) − ι_X dH` for a 3-form.
    fn cartan3_residual(n: usize) -> f64 {
        use crate::fields::forms::{d2, d3};
        use crate::linalg4::{Form2, FORM2_PAIRS};
        let grid = Grid4::new(n, 2.0 * PI);
        let x = Field::from_fn(grid, xfield);
        let h = Field::from_fn(grid, |p| Form3([p[0].sin(), (p[1] + p[3]).cos(), 0.3 * p[2].sin(), 0.1]));
        let lhs = lie_three_form(&x, &h);
        let contraction = Field::from_index_fn(grid, |i| {
            let xv = x.get(i);
            let full = h.get(i).to_full();
            let mut c = [0.0; 6];
            for (k, &(b, e)) in FORM2_PAIRS.iter().enumerate() {
                c[k] = (0..4).map(|a| xv[a] * full[a][b][e]).sum();
            }
            Form2(c)
        });
        let dh = d3(&h);
        let mut rhs = d2(&contraction);
        rhs.axpy(1.0, &Field::from_index_fn(grid, |i| {
            let xv = x.get(i);
            let s = dh.get(i);
            Form3([s * xv[0], -s * xv[1], s * xv[2], -s * xv[3]])
        }));
        lhs.sub(&rhs).max_abs()
    }

    #[test]
    fn cartan_formula_on_three_forms() {
        let (a, b) = (cartan3_residual(16), cartan3_residual(32));
        assert!((a / b).log2() > 3.5, "{a:e} {b:e}");
    }
}
