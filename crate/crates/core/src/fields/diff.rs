//! Periodic 4th-order centered differences.
//!
//! Second derivatives are always formed by composing two first-derivative stencils.
//! The composed operator has a smaller spectral radius (about 1.37²/h² per axis) than
//! the compact 5-point second-derivative stencil, which keeps explicit RK4 stable at
//! `dt = 0.2 h²` for the full system.

use rayon::prelude::*;

use super::grid::{Field, Grid4};
use crate::linalg4::{Tensor, Vec4};

const W1: f64 = 8.0 / 12.0;
const W2: f64 = -1.0 / 12.0;

/// `∂_axis` of every component: `(−f₊₂ + 8f₊₁ − 8f₋₁ + f₋₂)/(12h)`.
pub fn partial<T: Tensor>(field: &Field<T>, axis: usize) -> Field<T> {
    let grid = *field.grid();
    let mut out = Field::<T>::zeros(grid);
    partial_into(field.raw(), out.raw_mut(), &grid, T::N, axis);
    out
}

/// Raw kernel on flat component arrays with `nc` components per point.
pub fn partial_into(src: &[f64], dst: &mut [f64], grid: &Grid4, nc: usize, axis: usize) {
    let n = grid.n;
    let inv_h = 1.0 / grid.h;
    let stride = grid.stride(axis) * nc; // f64 distance between neighbours along `axis`
    let block = stride * n; // one full period along `axis`
    dst.par_chunks_mut(block)
        .zip(src.par_chunks(block))
        .for_each(|(out, inp)| {
            for c in 0..n {
                let p1 = ((c + 1) % n) * stride;
                let p2 = ((c + 2) % n) * stride;
                let m1 = ((c + n - 1) % n) * stride;
                let m2 = ((c + n - 2) % n) * stride;
                let o = &mut out[c * stride..(c + 1) * stride];
                for k in 0..stride {
                    o[k] = inv_h
                        * (W1 * (inp[p1 + k] - inp[m1 + k]) + W2 * (inp[p2 + k] - inp[m2 + k]));
                }
            }
        });
}

/// All four partial derivatives.
pub fn partials<T: Tensor>(field: &Field<T>) -> [Field<T>; 4] {
    std::array::from_fn(|a| partial(field, a))
}

/// `df` as a covector field.
pub fn gradient(f: &Field<f64>) -> Field<Vec4> {
    let d = partials(f);
    let grid = *f.grid();
    Field::from_index_fn(grid, |i| {
        Vec4::new(d[0].get(i), d[1].get(i), d[2].get(i), d[3].get(i))
    })
}

/// Hessian `∂_a ∂_b f` by composing first derivatives, as a symmetric tensor.
pub fn hessian(f: &Field<f64>) -> Field<crate::linalg4::Sym4> {
    let grad = gradient(f);
    let dd = partials(&grad);
    let grid = *f.grid();
    Field::from_index_fn(grid, |i| {
        let mut s = [0.0; 10];
        for (k, &(a, b)) in crate::linalg4::SYM_PAIRS.iter().enumerate() {
            // ∂_b of the a-th component and vice versa agree exactly: the stencils commute
            s[k] = dd[b].get(i)[a];
        }
        crate::linalg4::Sym4(s)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn wave_error(n: usize) -> f64 {
        let l = 2.0 * PI;
        let g = Grid4::new(n, l);
        let f = Field::<f64>::from_fn(g, |x| (x[1] + 2.0 * x[2]).sin());
        let d = partial(&f, 2);
        let exact = Field::<f64>::from_fn(g, |x| 2.0 * (x[1] + 2.0 * x[2]).cos());
        d.sub(&exact).max_abs()
    }

    #[test]
    fn constant_field_has_zero_derivative() {
        let g = Grid4::new(8, 1.0);
        let f = Field::<f64>::constant(g, 3.5);
        for a in 0..4 {
            assert_eq!(partial(&f, a).max_abs(), 0.0);
        }
    }

    #[test]
    fn fourth_order_on_sine() {
        let l = 3.0;
        let k = 2.0 * PI / l;
        let errs: Vec<f64> = [8, 16, 32]
            .iter()
            .map(|&n| {
                let g = Grid4::new(n, l);
                let f = Field::<f64>::from_fn(g, |x| (k * x[0]).sin());
                let exact = Field::<f64>::from_fn(g, |x| k * (k * x[0]).cos());
                partial(&f, 0).sub(&exact).max_abs()
            })
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 3.8, "errors {errs:?}");
        }
    }

    #[test]
    fn mixed_axis_wave_converges() {
        let e16 = wave_error(16);
        let e32 = wave_error(32);
        assert!((e16 / e32).log2() > 3.8);
    }

    #[test]
    fn product_rule_residual_is_fourth_order() {
        let res = |n: usize| {
            let l = 2.0 * PI;
            let g = Grid4::new(n, l);
            let f = Field::<f64>::from_fn(g, |x| (x[3]).sin() + 0.3 * (x[0] + x[3]).cos());
            let h = Field::<f64>::from_fn(g, |x| (2.0 * x[3]).cos());
            let fh = Field::<f64>::from_index_fn(g, |i| f.get(i) * h.get(i));
            let d_fh = partial(&fh, 3);
            let df = partial(&f, 3);
            let dh = partial(&h, 3);
            Field::<f64>::from_index_fn(g, |i| {
                d_fh.get(i) - f.get(i) * dh.get(i) - h.get(i) * df.get(i)
            })
            .max_abs()
        };
        let (a, b) = (res(16), res(32));
        assert!((a / b).log2() > 3.5, "{a:e} {b:e}");
    }

    #[test]
    fn mixed_partials_commute_exactly() {
        let g = Grid4::new(8, 1.0);
        let f = Field::<f64>::from_fn(g, |x| (6.0 * x[0] + x[1]).sin() * (x[2] * 6.2).cos());
        let a = partial(&partial(&f, 0), 2);
        let b = partial(&partial(&f, 2), 0);
        assert!(a.sub(&b).max_abs() < 1e-12);
    }
}
