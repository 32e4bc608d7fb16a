use crate::error::Result;
use crate::fields::forms::{dc, kahler_form, lee_form, MetricField};
use crate::fields::hermitian::angle_field;
use crate::fields::{Field, Grid4, Snapshot};
use crate::linalg4::{Form3, Mat4, Sym4, Vec4};

/// Generalized Kahler field data `(g, I, J, H)` at flow time `t`.
#[derive(Clone, Debug)]
pub struct GkState {
    pub g: Field<Sym4>,
    pub i: Field<Mat4>,
    pub j: Field<Mat4>,
    pub h: Field<Form3>,
    pub t: f64,
}

impl GkState {
    /// Builds a state with `H := d^c_I ω_I`.
    pub fn from_structures(g: Field<Sym4>, i: Field<Mat4>, j: Field<Mat4>) -> Result<Self> {
        let metric = MetricField::new(g.clone())?;
        let h = dc(&kahler_form(&metric, &i), &i);
        Ok(GkState { g, i, j, h, t: 0.0 })
    }

    pub fn grid(&self) -> &Grid4 {
        self.g.grid()
    }

    pub fn metric(&self) -> Result<MetricField> {
        MetricField::new(self.g.clone())
    }

    /// `p = ¼ tr(IJ)`.
    pub fn angle(&self) -> Field<f64> {
        angle_field(&self.i, &self.j)
    }

    /// `μ = log((1 + p)/(1 − p))`.
    pub fn mu(&self) -> Field<f64> {
        self.angle().map(|&p| ((1.0 + p) / (1.0 - p)).ln())
    }

    pub fn lee_i(&self, g: &MetricField) -> Field<Vec4> {
        lee_form(g, &self.i)
    }

    pub fn lee_j(&self, g: &MetricField) -> Field<Vec4> {
        lee_form(g, &self.j)
    }

    pub fn to_snapshot(&self) -> Snapshot {
        let mut s = Snapshot::new(*self.grid());
        s.push("g", &self.g);
        s.push("I", &self.i);
        s.push("J", &self.j);
        s.push("H", &self.h);
        s.push("t", &Field::constant(*self.grid(), self.t));
        s
    }

    pub fn from_snapshot(s: &Snapshot) -> Result<Self> {
        let t: Field<f64> = s.get("t")?;
        Ok(GkState {
            g: s.get("g")?,
            i: s.get("I")?,
            j: s.get("J")?,
            h: s.get("H")?,
            t: t.get(0),
        })
    }

    /// Largest component change between two states on the same grid.
    pub fn max_diff(&self, other: &GkState) -> f64 {
        [
            self.g.sub(&other.g).max_abs(),
            self.i.sub(&other.i).max_abs(),
            self.j.sub(&other.j).max_abs(),
            self.h.sub(&other.h).max_abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}
