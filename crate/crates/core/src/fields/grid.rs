use std::marker::PhantomData;

use rayon::prelude::*;

use crate::linalg4::Tensor;

/// Uniform periodic grid with `n` points per axis on the torus `[0, L)⁴`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid4 {
    pub n: usize,
    pub l: f64,
    pub h: f64,
}

impl Grid4 {
    /// Panics unless `n ≥ 8` is even and `l > 0`.
    pub fn new(n: usize, l: f64) -> Self {
        assert!(n >= 8 && n % 2 == 0, "grid needs an even n >= 8, got {n}");
        assert!(l > 0.0, "period must be positive");
        Grid4 { n, l, h: l / n as f64 }
    }

    pub fn len(&self) -> usize {
        self.n.pow(4)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lexicographic index with axis 0 slowest.
    #[inline]
    pub fn index(&self, ix: [usize; 4]) -> usize {
        ((ix[0] * self.n + ix[1]) * self.n + ix[2]) * self.n + ix[3]
    }

    #[inline]
    pub fn multi_index(&self, mut idx: usize) -> [usize; 4] {
        let n = self.n;
        let i3 = idx % n;
        idx /= n;
        let i2 = idx % n;
        idx /= n;
        let i1 = idx % n;
        [idx / n, i1, i2, i3]
    }

    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 4] {
        let m = self.multi_index(idx);
        [
            m[0] as f64 * self.h,
            m[1] as f64 * self.h,
            m[2] as f64 * self.h,
            m[3] as f64 * self.h,
        ]
    }

    /// Cell volume for midpoint quadrature.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(4)
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow(3 - axis as u32)
    }
}

/// A tensor-valued field on a grid, stored point-major as flat `f64` components.
#[derive(Clone, Debug)]
pub struct Field<T> {
    grid: Grid4,
    data: Vec<f64>,
    _marker: PhantomData<T>,
}

const CHUNK: usize = 1024;

impl<T: Tensor> Field<T> {
    pub fn zeros(grid: Grid4) -> Self {
        Field {
            grid,
            data: vec![0.0; grid.len() * T::N],
            _marker: PhantomData,
        }
    }

    pub fn from_raw(grid: Grid4, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), grid.len() * T::N, "field data length mismatch");
        Field {
            grid,
            data,
            _marker: PhantomData,
        }
    }

    pub fn constant(grid: Grid4, v: T) -> Self {
        Self::from_index_fn(grid, |_| v)
    }

    /// Builds a field from a function of the point index.
    pub fn from_index_fn<F>(grid: Grid4, f: F) -> Self
    where
        F: Fn(usize) -> T + Sync,
    {
        let mut out = Self::zeros(grid);
        out.data
            .par_chunks_mut(T::N * CHUNK)
            .enumerate()
            .for_each(|(c, chunk)| {
                for (k, slot) in chunk.chunks_exact_mut(T::N).enumerate() {
                    slot.copy_from_slice(f(c * CHUNK + k).comps());
                }
            });
        out
    }

    /// Builds a field by sampling a function of the coordinates.
    pub fn from_fn<F>(grid: Grid4, f: F) -> Self
    where
        F: Fn([f64; 4]) -> T + Sync,
    {
        Self::from_index_fn(grid, |i| f(grid.point(i)))
    }

    pub fn grid(&self) -> &Grid4 {
        &self.grid
    }

    pub fn raw(&self) -> &[f64] {
        &self.data
    }

    pub fn raw_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_raw(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize) -> T {
        let mut t = T::zero();
        t.comps_mut()
            .copy_from_slice(&self.data[i * T::N..(i + 1) * T::N]);
        t
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: &T) {
        self.data[i * T::N..(i + 1) * T::N].copy_from_slice(v.comps());
    }

    pub fn map<U: Tensor, F>(&self, f: F) -> Field<U>
    where
        F: Fn(&T) -> U + Sync,
    {
        Field::from_index_fn(self.grid, |i| f(&self.get(i)))
    }

    /// Largest absolute component anywhere on the grid.
    pub fn max_abs(&self) -> f64 {
        self.data
            .par_chunks(4096)
            .map(crate::linalg4::max_abs)
            .reduce(|| 0.0, f64::max)
    }

    /// `self += a·x`.
    pub fn axpy(&mut self, a: f64, x: &Field<T>) {
        assert_eq!(self.data.len(), x.data.len());
        self.data
            .par_chunks_mut(4096)
            .zip(x.data.par_chunks(4096))
            .for_each(|(s, x)| {
                for (s, x) in s.iter_mut().zip(x) {
                    *s += a * x;
                }
            });
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.data.par_iter_mut().for_each(|v| *v *= a);
        out
    }

    pub fn sub(&self, other: &Field<T>) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn add(&self, other: &Field<T>) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    /// Extracts one component as a scalar field.
    pub fn component(&self, c: usize) -> Field<f64> {
        assert!(c < T::N);
        Field::from_index_fn(self.grid, |i| self.data[i * T::N + c])
    }
}

impl Field<f64> {
    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Midpoint-rule integral against the coordinate measure.
    pub fn integral(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}
