//! Pointwise linear algebra on one 4-dimensional tangent space.
//!
//! Conventions used throughout the crate:
//! - An endomorphism `J` is a `Mat4` with `m[(a, b)] = J^a_b`, so `J X` is the
//!   matrix-vector product.
//! - The Kahler form is `ω(X, Y) = g(X, JY)`, i.e. the matrix `g J`.
//! - k-forms carry full antisymmetric components, `(dθ)_ab = ∂_a θ_b − ∂_b θ_a`,
//!   and `⟨α, β⟩ = (1/k!) α_{a..} β^{a..}`.
//! - The volume form is `√det g dx⁰∧dx¹∧dx²∧dx³`, and `α ∧ ⋆β = ⟨α, β⟩ dV`.
//!
//! Holomorphic volume form of the associated triple: `Ω := ω_{K2} + i ω_{K0}` is of
//! type (2,0) for `K1`, and `K0 = K1 K2` exactly. Both facts are unit-tested below.

use nalgebra::{Matrix4, Vector4};
use rand::Rng;

use crate::error::{GkError, Result};

pub type Mat4 = Matrix4<f64>;
pub type Vec4 = Vector4<f64>;

/// Flat component storage shared by every per-point value type.
pub trait Tensor: Copy + Send + Sync + 'static {
    const N: usize;
    fn zero() -> Self;
    fn comps(&self) -> &[f64];
    fn comps_mut(&mut self) -> &mut [f64];
}

impl Tensor for f64 {
    const N: usize = 1;
    fn zero() -> Self {
        0.0
    }
    fn comps(&self) -> &[f64] {
        std::slice::from_ref(self)
    }
    fn comps_mut(&mut self) -> &mut [f64] {
        std::slice::from_mut(self)
    }
}

impl Tensor for Vec4 {
    const N: usize = 4;
    fn zero() -> Self {
        Vec4::zeros()
    }
    fn comps(&self) -> &[f64] {
        self.as_slice()
    }
    fn comps_mut(&mut self) -> &mut [f64] {
        self.as_mut_slice()
    }
}

/// Endomorphisms and bivectors. Storage is nalgebra's column-major order.
impl Tensor for Mat4 {
    const N: usize = 16;
    fn zero() -> Self {
        Mat4::zeros()
    }
    fn comps(&self) -> &[f64] {
        self.as_slice()
    }
    fn comps_mut(&mut self) -> &mut [f64] {
        self.as_mut_slice()
    }
}

macro_rules! array_tensor {
    ($name:ident, $n:expr) => {
        impl Tensor for $name {
            const N: usize = $n;
            fn zero() -> Self {
                $name([0.0; $n])
            }
            fn comps(&self) -> &[f64] {
                &self.0
            }
            fn comps_mut(&mut self) -> &mut [f64] {
                &mut self.0
            }
        }
    };
}

/// Index pairs (a ≤ b) of the ten independent entries of a symmetric 2-tensor.
pub const SYM_PAIRS: [(usize, usize); 10] = [
    (0, 0),
    (0, 1),
    (0, 2),
    (0, 3),
    (1, 1),
    (1, 2),
    (1, 3),
    (2, 2),
    (2, 3),
    (3, 3),
];

/// Index pairs (a < b) of the six independent entries of a 2-form.
pub const FORM2_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Symmetric covariant 2-tensor (metrics, Ricci, 𝓗).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sym4(pub [f64; 10]);
array_tensor!(Sym4, 10);

/// 2-form, components ordered as `FORM2_PAIRS`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Form2(pub [f64; 6]);
array_tensor!(Form2, 6);

/// 3-form stored by omitted index: `c[0] = H_123`, `c[1] = H_023`, `c[2] = H_013`, `c[3] = H_012`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Form3(pub [f64; 4]);
array_tensor!(Form3, 4);

#[inline]
pub fn sym_index(a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    match a {
        0 => b,
        1 => 3 + b,
        2 => 5 + b,
        _ => 9,
    }
}

#[inline]
fn form2_index(a: usize, b: usize) -> usize {
    match (a, b) {
        (0, 1) => 0,
        (0, 2) => 1,
        (0, 3) => 2,
        (1, 2) => 3,
        (1, 3) => 4,
        (2, 3) => 5,
        _ => unreachable!("form2_index expects a < b"),
    }
}

impl Sym4 {
    pub fn identity() -> Self {
        Sym4::from_mat(&Mat4::identity())
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.0[sym_index(a, b)]
    }

    pub fn to_mat(&self) -> Mat4 {
        Mat4::from_fn(|a, b| self.get(a, b))
    }

    /// Symmetric part of `m`.
    pub fn from_mat(m: &Mat4) -> Self {
        let mut out = [0.0; 10];
        for (k, &(a, b)) in SYM_PAIRS.iter().enumerate() {
            out[k] = 0.5 * (m[(a, b)] + m[(b, a)]);
        }
        Sym4(out)
    }
}

impl Form2 {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        use std::cmp::Ordering::*;
        match a.cmp(&b) {
            Less => self.0[form2_index(a, b)],
            Greater => -self.0[form2_index(b, a)],
            Equal => 0.0,
        }
    }

    pub fn to_mat(&self) -> Mat4 {
        Mat4::from_fn(|a, b| self.get(a, b))
    }

    /// Antisymmetric part of `m`.
    pub fn from_mat(m: &Mat4) -> Self {
        let mut out = [0.0; 6];
        for (k, &(a, b)) in FORM2_PAIRS.iter().enumerate() {
            out[k] = 0.5 * (m[(a, b)] - m[(b, a)]);
        }
        Form2(out)
    }
}

/// Sign of the permutation sorting three distinct indices, or 0 if two coincide.
#[inline]
fn perm3_sign(a: usize, b: usize, c: usize) -> f64 {
    if a == b || b == c || a == c {
        return 0.0;
    }
    let inv = (a > b) as u8 + (a > c) as u8 + (b > c) as u8;
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl Form3 {
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        let s = perm3_sign(a, b, c);
        if s == 0.0 {
            return 0.0;
        }
        s * self.0[6 - a - b - c]
    }

    pub fn to_full(&self) -> [[[f64; 4]; 4]; 4] {
        let mut out = [[[0.0; 4]; 4]; 4];
        for (a, plane) in out.iter_mut().enumerate() {
            for (b, row) in plane.iter_mut().enumerate() {
                for (c, v) in row.iter_mut().enumerate() {
                    *v = self.get(a, b, c);
                }
            }
        }
        out
    }

    /// Reads the independent components of an (assumed antisymmetric) array.
    pub fn from_full(t: &[[[f64; 4]; 4]; 4]) -> Self {
        Form3([t[1][2][3], t[0][2][3], t[0][1][3], t[0][1][2]])
    }
}

/// Complementary ascending index triple of `m`.
pub const FORM3_TRIPLES: [(usize, usize, usize); 4] = [(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)];

/// Metric with its inverse and volume density, precomputed once per point.
#[derive(Clone, Copy, Debug)]
pub struct MetricPoint {
    pub g: Mat4,
    pub ginv: Mat4,
    pub det: f64,
    pub sqrt_det: f64,
}

impl MetricPoint {
    /// Panics only if `g` is exactly singular; callers check positivity beforehand.
    pub fn new(g: &Mat4) -> Self {
        let det = g.determinant();
        let ginv = g.try_inverse().expect("metric must be invertible");
        MetricPoint {
            g: *g,
            ginv,
            det,
            sqrt_det: det.abs().sqrt(),
        }
    }

    pub fn from_sym(g: &Sym4) -> Self {
        Self::new(&g.to_mat())
    }

    pub fn flat() -> Self {
        Self::new(&Mat4::identity())
    }

    pub fn raise(&self, a: &Vec4) -> Vec4 {
        self.ginv * a
    }

    pub fn norm2_1(&self, a: &Vec4) -> f64 {
        a.dot(&(self.ginv * a))
    }

    pub fn inner1(&self, a: &Vec4, b: &Vec4) -> f64 {
        a.dot(&(self.ginv * b))
    }

    pub fn inner2(&self, a: &Form2, b: &Form2) -> f64 {
        let w = self.ginv * b.to_mat() * self.ginv;
        0.5 * a.to_mat().component_mul(&w).sum()
    }

    pub fn inner3(&self, a: &Form3, b: &Form3) -> f64 {
        self.inner1(&star3(self, a), &star3(self, b))
    }

    /// Hodge star of a function: the `dx⁰¹²³` component of `f dV`.
    pub fn star0(&self, f: f64) -> f64 {
        f * self.sqrt_det
    }

    /// Hodge star of the 4-form `s dx⁰¹²³`.
    pub fn star4(&self, s: f64) -> f64 {
        s / self.sqrt_det
    }
}

/// `⋆θ = ι_{θ♯} dV`.
pub fn star1(m: &MetricPoint, theta: &Vec4) -> Form3 {
    let u = m.ginv * theta;
    let s = m.sqrt_det;
    Form3([s * u[0], -s * u[1], s * u[2], -s * u[3]])
}

/// Inverse of `star1` up to the sign `⋆⋆ = −1` on 1-forms and 3-forms.
pub fn star3(m: &MetricPoint, h: &Form3) -> Vec4 {
    let s = m.sqrt_det;
    let u = Vec4::new(h.0[0] / s, -h.0[1] / s, h.0[2] / s, -h.0[3] / s);
    -(m.g * u)
}

pub fn star2(m: &MetricPoint, w: &Form2) -> Form2 {
    let r = m.ginv * w.to_mat() * m.ginv;
    let s = m.sqrt_det;
    Form2([
        s * r[(2, 3)],
        -s * r[(1, 3)],
        s * r[(1, 2)],
        s * r[(0, 3)],
        -s * r[(0, 2)],
        s * r[(0, 1)],
    ])
}

/// `dx⁰¹²³` component of `α ∧ β` for 2-forms.
pub fn wedge22(a: &Form2, b: &Form2) -> f64 {
    let a = &a.0;
    let b = &b.0;
    a[0] * b[5] - a[1] * b[4] + a[2] * b[3] + a[3] * b[2] - a[4] * b[1] + a[5] * b[0]
}

/// `θ ∧ ω` for a 1-form and a 2-form.
pub fn wedge12(t: &Vec4, w: &Form2) -> Form3 {
    let mut c = [0.0; 4];
    for (m, &(a, b, d)) in FORM3_TRIPLES.iter().enumerate() {
        c[m] = t[a] * w.get(b, d) + t[b] * w.get(d, a) + t[d] * w.get(a, b);
    }
    Form3(c)
}

/// Maximum absolute entry of a slice of components.
pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

// ---------------------------------------------------------------------------
// Quaternionic seed frame

/// Standard constant complex structure: ∂0 ↦ ∂1, ∂2 ↦ ∂3.
pub fn seed_i() -> Mat4 {
    let mut m = Mat4::zeros();
    m[(1, 0)] = 1.0;
    m[(0, 1)] = -1.0;
    m[(3, 2)] = 1.0;
    m[(2, 3)] = -1.0;
    m
}

/// Second standard structure: ∂0 ↦ ∂2, ∂3 ↦ ∂1.
pub fn seed_j() -> Mat4 {
    let mut m = Mat4::zeros();
    m[(2, 0)] = 1.0;
    m[(0, 2)] = -1.0;
    m[(1, 3)] = 1.0;
    m[(3, 1)] = -1.0;
    m
}

pub fn seed_k() -> Mat4 {
    seed_i() * seed_j()
}

/// Pointwise biHermitian data.
#[derive(Clone, Copy, Debug)]
pub struct GkPoint {
    pub g: Mat4,
    pub i: Mat4,
    pub j: Mat4,
}

impl GkPoint {
    pub fn flat_hyperkahler() -> Self {
        GkPoint {
            g: Mat4::identity(),
            i: seed_i(),
            j: seed_j(),
        }
    }

    /// Pullback by the linear map `a`: `g ↦ aᵀ g a`, `J ↦ a⁻¹ J a`.
    pub fn conjugate(&self, a: &Mat4) -> Self {
        let ainv = a.try_inverse().expect("conjugating map must be invertible");
        GkPoint {
            g: a.transpose() * self.g * a,
            i: ainv * self.i * a,
            j: ainv * self.j * a,
        }
    }
}

pub fn kahler_form(g: &Mat4, j: &Mat4) -> Form2 {
    Form2::from_mat(&(g * j))
}

/// `p = ¼ tr(I J)`.
pub fn angle(pt: &GkPoint) -> f64 {
    0.25 * (pt.i * pt.j).trace()
}

/// `‖⋆ω − ω‖∞` for the Kahler form of `(g, J)`.
pub fn self_duality_residual(g: &Mat4, j: &Mat4) -> f64 {
    let m = MetricPoint::new(g);
    let w = kahler_form(g, j);
    let sw = star2(&m, &w);
    max_abs(&(0..6).map(|k| sw.0[k] - w.0[k]).collect::<Vec<_>>())
}

/// Default tolerance of the self-duality test.
pub const ORIENTATION_TOL: f64 = 1e-10;

/// Checks that both Kahler forms are self-dual for the coordinate orientation.
pub fn check_orientation(pt: &GkPoint) -> Result<()> {
    let r = self_duality_residual(&pt.g, &pt.i).max(self_duality_residual(&pt.g, &pt.j));
    if r < ORIENTATION_TOL {
        Ok(())
    } else {
        Err(GkError::OrientationMismatch { residual: r })
    }
}

/// `{I, J} = IJ + JI`, which equals `2p Id` for same-orientation pairs.
pub fn anticommutator(pt: &GkPoint) -> Result<Mat4> {
    check_orientation(pt)?;
    Ok(pt.i * pt.j + pt.j * pt.i)
}

pub fn commutator(pt: &GkPoint) -> Mat4 {
    pt.i * pt.j - pt.j * pt.i
}

/// `[I, J]²`, which equals `4(p² − 1) Id` for same-orientation pairs.
pub fn commutator_square(pt: &GkPoint) -> Result<Mat4> {
    check_orientation(pt)?;
    let c = commutator(pt);
    Ok(c * c)
}

/// Default nondegeneracy margin.
pub const EPS_ND: f64 = 1e-3;

/// `(K0, K1, K2) = (q⁻¹(IJ − p), I, q⁻¹(J + pI))` with `q = √(1 − p²)`.
///
/// The signs of `p` here match `p = ¼ tr(IJ)`, for which `{I, J} = 2p Id`; with the
/// opposite signs the `K_i` would not square to `−Id`.
pub fn associated_triple(pt: &GkPoint, eps_nd: f64) -> Result<[Mat4; 3]> {
    let p = angle(pt);
    if p.abs() >= 1.0 - eps_nd {
        return Err(GkError::DegenerateStructure {
            p_abs: p.abs(),
            limit: 1.0 - eps_nd,
        });
    }
    let qinv = 1.0 / (1.0 - p * p).sqrt();
    let id = Mat4::identity();
    Ok([
        (pt.i * pt.j - id * p) * qinv,
        pt.i,
        (pt.j + pt.i * p) * qinv,
    ])
}

/// `σ = [I, J] g⁻¹`, the bivector obtained by raising the 2-form `g [I, J]`.
pub fn poisson(pt: &GkPoint) -> Mat4 {
    let ginv = pt.g.try_inverse().expect("metric must be invertible");
    commutator(pt) * ginv
}

/// `H_ijk = −ζ_i ω_jk − ζ_k ω_ij − ζ_j ω_ki` with `ζ = θ∘J`.
pub fn torsion_from_lee(theta: &Vec4, w: &Form2, j: &Mat4) -> Form3 {
    let zeta = j.transpose() * theta;
    let mut c = [0.0; 4];
    for (m, &(a, b, d)) in FORM3_TRIPLES.iter().enumerate() {
        c[m] = -zeta[a] * w.get(b, d) - zeta[d] * w.get(a, b) - zeta[b] * w.get(d, a);
    }
    Form3(c)
}

/// `𝓗_ij = H_ipq H_j^pq` by direct contraction.
pub fn h_squared(m: &MetricPoint, h: &Form3) -> Sym4 {
    let full = h.to_full();
    // raise the last two indices
    let mut up = [[[0.0; 4]; 4]; 4];
    for i in 0..4 {
        for p in 0..4 {
            for q in 0..4 {
                let mut s = 0.0;
                for r in 0..4 {
                    for t in 0..4 {
                        s += m.ginv[(p, r)] * m.ginv[(q, t)] * full[i][r][t];
                    }
                }
                up[i][p][q] = s;
            }
        }
    }
    let mut out = [0.0; 10];
    for (k, &(i, j)) in SYM_PAIRS.iter().enumerate() {
        let mut s = 0.0;
        for p in 0..4 {
            for q in 0..4 {
                s += full[i][p][q] * up[j][p][q];
            }
        }
        out[k] = s;
    }
    Sym4(out)
}

/// The same tensor through the Hodge dual: `𝓗 = 2(|⋆H|² g − ⋆H ⊗ ⋆H)`.
///
/// The factor 2 comes from the full double sum over `p, q` in the contraction.
pub fn h_squared_star(m: &MetricPoint, h: &Form3) -> Sym4 {
    let a = star3(m, h);
    let n2 = m.norm2_1(&a);
    let mut out = [0.0; 10];
    for (k, &(i, j)) in SYM_PAIRS.iter().enumerate() {
        out[k] = 2.0 * (n2 * m.g[(i, j)] - a[i] * a[j]);
    }
    Sym4(out)
}

/// Covariant derivative of `J` from its Lee form, returned as `t[i][j][k] = ∇_i J^k_j`.
pub fn nabla_j_from_lee(theta: &Vec4, m: &MetricPoint, j: &Mat4) -> [[[f64; 4]; 4]; 4] {
    let w = m.g * j;
    let theta_up = m.ginv * theta;
    let zeta = j.transpose() * theta; // ζ_j = θ_q J^q_j
    let zeta_up = m.ginv * zeta;
    let mut t = [[[0.0; 4]; 4]; 4];
    for i in 0..4 {
        for jj in 0..4 {
            for k in 0..4 {
                let delta = if i == k { 1.0 } else { 0.0 };
                t[i][jj][k] = 0.5
                    * (-theta_up[k] * w[(i, jj)] + zeta[jj] * delta
                        - zeta_up[k] * m.g[(i, jj)]
                        - theta[jj] * j[(k, i)]);
            }
        }
    }
    t
}

/// Default relative tolerance on the form-pair preconditions.
pub const EPS_FORMS: f64 = 1e-8;

/// Almost complex structure `A = Φ1⁻¹ Φ2` for which `Φ1 − iΦ2` is of type (2,0).
pub fn acs_from_form_pair(phi1: &Form2, phi2: &Form2, eps_forms: f64) -> Result<Mat4> {
    let v11 = wedge22(phi1, phi1);
    let v22 = wedge22(phi2, phi2);
    let v12 = wedge22(phi1, phi2);
    let scale = v11.abs().max(v22.abs());
    if scale == 0.0 {
        return Err(GkError::ConstraintViolation {
            what: "nondegeneracy",
            residual: 0.0,
        });
    }
    if (v12 / scale).abs() > eps_forms {
        return Err(GkError::ConstraintViolation {
            what: "phi1 ^ phi2 = 0",
            residual: (v12 / scale).abs(),
        });
    }
    if ((v11 - v22) / scale).abs() > eps_forms {
        return Err(GkError::ConstraintViolation {
            what: "phi1 ^ phi1 = phi2 ^ phi2",
            residual: ((v11 - v22) / scale).abs(),
        });
    }
    let inv = phi1
        .to_mat()
        .try_inverse()
        .ok_or(GkError::ConstraintViolation {
            what: "phi1 invertible",
            residual: 0.0,
        })?;
    Ok(inv * phi2.to_mat())
}

/// Residual of `Φ(AX, Y) = i Φ(X, Y)` for `Φ = Φ1 − iΦ2`, split into real and imaginary parts.
pub fn type20_residual(phi1: &Form2, phi2: &Form2, a: &Mat4) -> f64 {
    let p1 = phi1.to_mat();
    let p2 = phi2.to_mat();
    let re = a.transpose() * p1 - p2;
    let im = a.transpose() * p2 + p1;
    re.amax().max(im.amax())
}

// ---------------------------------------------------------------------------
// Random point generation

fn random_rotation<R: Rng>(rng: &mut R) -> Mat4 {
    let m = Mat4::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    let qr = m.qr();
    let mut q = qr.q();
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

fn random_unit3<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Random orientation-preserving linear map with moderate condition number.
pub fn random_frame<R: Rng>(rng: &mut R) -> Mat4 {
    let r = random_rotation(rng);
    let mut t = Mat4::zeros();
    for a in 0..4 {
        t[(a, a)] = rng.gen_range(0.5..2.0);
        for b in (a + 1)..4 {
            t[(a, b)] = rng.gen_range(-0.5..0.5);
        }
    }
    r * t
}

fn quaternion_combo(frame: &[Mat4; 3], v: [f64; 3]) -> Mat4 {
    frame[0] * v[0] + frame[1] * v[1] + frame[2] * v[2]
}

/// Random same-orientation biHermitian point.
///
/// `I` and `J` are independent unit vectors in the span of an SO(4)-rotated standard
/// quaternionic frame on flat space; when `general_metric` is set, the whole point is
/// then pulled back by a random orientation-preserving linear map.
pub fn random_gk_point<R: Rng>(rng: &mut R, general_metric: bool) -> GkPoint {
    let r = random_rotation(rng);
    let frame = [
        r * seed_i() * r.transpose(),
        r * seed_j() * r.transpose(),
        r * seed_k() * r.transpose(),
    ];
    let pt = GkPoint {
        g: Mat4::identity(),
        i: quaternion_combo(&frame, random_unit3(rng)),
        j: quaternion_combo(&frame, random_unit3(rng)),
    };
    if general_metric {
        pt.conjugate(&random_frame(rng))
    } else {
        pt
    }
}

/// Random point with prescribed angle `p ∈ [−1, 1]`.
pub fn random_gk_point_with_angle<R: Rng>(rng: &mut R, p: f64) -> GkPoint {
    let r = random_rotation(rng);
    let frame = [
        r * seed_i() * r.transpose(),
        r * seed_j() * r.transpose(),
        r * seed_k() * r.transpose(),
    ];
    // p = −a·b for unit a, b: take b = −p a + √(1 − p²) c with c ⊥ a.
    let a = random_unit3(rng);
    let w = random_unit3(rng);
    let d = a[0] * w[0] + a[1] * w[1] + a[2] * w[2];
    let mut c = [w[0] - d * a[0], w[1] - d * a[1], w[2] - d * a[2]];
    let cn = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
    for x in c.iter_mut() {
        *x /= cn;
    }
    let q = (1.0 - p * p).max(0.0).sqrt();
    let b = [
        -p * a[0] + q * c[0],
        -p * a[1] + q * c[1],
        -p * a[2] + q * c[2],
    ];
    GkPoint {
        g: Mat4::identity(),
        i: quaternion_combo(&frame, a),
        j: quaternion_combo(&frame, b),
    }
    .conjugate(&random_frame(rng))
}
