//! Periodic tensor-product cubic Lagrange interpolation (4 nodes per axis).

use super::grid::Field;
use crate::linalg4::Tensor;

/// Lagrange weights for nodes at offsets −1, 0, 1, 2 and fractional position `t ∈ [0, 1)`.
#[inline]
pub fn cubic_weights(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

/// Value of `field` at an arbitrary point, wrapped into the periodic box.
pub fn interpolate<T: Tensor>(field: &Field<T>, x: [f64; 4]) -> T {
    let grid = field.grid();
    let n = grid.n as isize;
    let mut base = [0isize; 4];
    let mut w = [[0.0; 4]; 4];
    for a in 0..4 {
        let s = x[a] / grid.h;
        let fl = s.floor();
        base[a] = fl as isize;
        w[a] = cubic_weights(s - fl);
    }
    let wrap = |i: isize| i.rem_euclid(n) as usize;
    let mut out = T::zero();
    let raw = field.raw();
    for i0 in 0..4 {
        let p0 = wrap(base[0] + i0 as isize - 1);
        for i1 in 0..4 {
            let p1 = wrap(base[1] + i1 as isize - 1);
            let w01 = w[0][i0] * w[1][i1];
            for i2 in 0..4 {
                let p2 = wrap(base[2] + i2 as isize - 1);
                let w012 = w01 * w[2][i2];
                for i3 in 0..4 {
                    let p3 = wrap(base[3] + i3 as isize - 1);
                    let wt = w012 * w[3][i3];
                    let idx = grid.index([p0, p1, p2, p3]) * T::N;
                    for (o, v) in out.comps_mut().iter_mut().zip(&raw[idx..idx + T::N]) {
                        *o += wt * v;
                    }
                }
            }
        }
    }
    out
}
