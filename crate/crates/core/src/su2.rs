//! SU(2) as unit quaternions over the basis (𝟙, τ₁, τ₂, τ₃).
//!
//! The basis matrices are
//!
//!   τ₁ = [[0, −i], [−i, 0]],  τ₂ = [[0, −1], [1, 0]],  τ₃ = [[−i, 0], [0, i]]
//!
//! with τᵢτⱼ = −δᵢⱼ𝟙 + εᵢⱼₖτₖ, so (τ₁, τ₂, τ₃) multiply like (i, j, k).
//! An element a𝟙 + Σ bᵢτᵢ has the matrix [[a − i b₃, −b₂ − i b₁], [b₂ − i b₁, a + i b₃]].

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vec3::{self, Vec3};

/// Tolerance for constructors and products.
pub const TOL_BUILD: f64 = 1e-12;
/// Tolerance for predicates such as commutation or orthogonality.
pub const TOL_PRED: f64 = 1e-10;
/// Distance to −𝟙 (or to the center) below which branch-dependent operations refuse.
pub const TOL_BRANCH: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Su2Error {
    #[error("logarithm undefined at -1 (distance {0:e})")]
    AntipodalBranch(f64),
    #[error("elements do not commute (commutator norm {0:e})")]
    NotCommuting(f64),
    #[error("both elements are central; the torus is not unique")]
    CentralPair,
    #[error("axes are not orthogonal (inner product {0:e})")]
    NotOrthogonal(f64),
}

pub type Mat2 = [[Complex64; 2]; 2];

/// A unit element of SU(2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupElement2 {
    pub a: f64,
    pub b: Vec3,
}

/// An element μ(v) = Σ vᵢτᵢ of su(2), stored by its coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgElement2 {
    pub v: Vec3,
}

/// A rotation of ℝ³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3 {
    pub m: [[f64; 3]; 3],
}

impl AlgElement2 {
    pub fn new(v: Vec3) -> Self {
        AlgElement2 { v }
    }

    /// [μ(a), μ(b)] = 2μ(a × b).
    pub fn bracket(self, other: AlgElement2) -> AlgElement2 {
        AlgElement2 { v: vec3::scale(2.0, vec3::cross(self.v, other.v)) }
    }

    pub fn to_matrix(self) -> Mat2 {
        let [x, y, w] = self.v;
        [
            [Complex64::new(0.0, -w), Complex64::new(-y, -x)],
            [Complex64::new(y, -x), Complex64::new(0.0, w)],
        ]
    }
}

impl GroupElement2 {
    pub const IDENTITY: GroupElement2 = GroupElement2 { a: 1.0, b: [0.0; 3] };
    pub const MINUS_IDENTITY: GroupElement2 = GroupElement2 { a: -1.0, b: [0.0; 3] };

    /// Builds from raw coefficients and renormalizes onto the unit sphere.
    pub fn new(a: f64, b: Vec3) -> Self {
        GroupElement2 { a, b }.renormalized()
    }

    /// The basis element τₖ (k in 1..=3) as a group element.
    pub fn tau(k: usize) -> Self {
        let mut b = [0.0; 3];
        b[k - 1] = 1.0;
        GroupElement2 { a: 0.0, b }
    }

    pub fn quat(&self) -> [f64; 4] {
        [self.a, self.b[0], self.b[1], self.b[2]]
    }

    pub fn from_quat(q: [f64; 4]) -> Self {
        GroupElement2::new(q[0], [q[1], q[2], q[3]])
    }

    pub fn norm_sq(&self) -> f64 {
        self.a * self.a + vec3::dot(self.b, self.b)
    }

    fn renormalized(self) -> Self {
        let n = self.norm_sq().sqrt();
        if n == 0.0 || (n - 1.0).abs() == 0.0 {
            return self;
        }
        GroupElement2 { a: self.a / n, b: vec3::scale(1.0 / n, self.b) }
    }

    pub fn mul(&self, y: &GroupElement2) -> GroupElement2 {
        let (a1, b1, a2, b2) = (self.a, self.b, y.a, y.b);
        let a = a1 * a2 - vec3::dot(b1, b2);
        let b = vec3::add(
            vec3::add(vec3::scale(a1, b2), vec3::scale(a2, b1)),
            vec3::cross(b1, b2),
        );
        GroupElement2 { a, b }.renormalized()
    }

    pub fn inv(&self) -> GroupElement2 {
        GroupElement2 { a: self.a, b: vec3::neg(self.b) }
    }

    pub fn neg(&self) -> GroupElement2 {
        GroupElement2 { a: -self.a, b: vec3::neg(self.b) }
    }

    /// Conjugation s ↦ self · s · self⁻¹.
    pub fn conj(&self, s: &GroupElement2) -> GroupElement2 {
        self.mul(s).mul(&self.inv())
    }

    pub fn to_matrix(&self) -> Mat2 {
        let [b1, b2, b3] = self.b;
        [
            [Complex64::new(self.a, -b3), Complex64::new(-b2, -b1)],
            [Complex64::new(b2, -b1), Complex64::new(self.a, b3)],
        ]
    }

    /// Reads back a matrix of the form produced by [`to_matrix`](Self::to_matrix).
    pub fn from_matrix(m: &Mat2) -> GroupElement2 {
        let a = 0.5 * (m[0][0].re + m[1][1].re);
        let b3 = 0.5 * (m[1][1].im - m[0][0].im);
        let b1 = -0.5 * (m[0][1].im + m[1][0].im);
        let b2 = 0.5 * (m[1][0].re - m[0][1].re);
        GroupElement2::new(a, [b1, b2, b3])
    }

    /// Euclidean distance of coefficient vectors; equals the operator-norm distance of the matrices.
    pub fn dist(&self, y: &GroupElement2) -> f64 {
        let d = [self.a - y.a, self.b[0] - y.b[0], self.b[1] - y.b[1], self.b[2] - y.b[2]];
        d.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus difference of the 2×2 matrices.
    pub fn max_entry_diff(&self, y: &GroupElement2) -> f64 {
        let (p, q) = (self.to_matrix(), y.to_matrix());
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((p[i][j] - q[i][j]).norm());
            }
        }
        worst
    }

    /// Distance to the nearer of ±𝟙.
    pub fn dist_to_center(&self) -> f64 {
        self.dist(&Self::IDENTITY).min(self.dist(&Self::MINUS_IDENTITY))
    }

    pub fn is_central(&self, tol: f64) -> bool {
        self.dist_to_center() <= tol
    }

    pub fn commutes_with(&self, y: &GroupElement2, tol: f64) -> bool {
        // xy − yx = 2 (b_x × b_y) in the τ-part
        2.0 * vec3::norm(vec3::cross(self.b, y.b)) <= tol
    }
}

/// Raw quaternion product without renormalization (used inside integrators).
pub fn qmul_raw(p: [f64; 4], q: [f64; 4]) -> [f64; 4] {
    let (a1, b1) = (p[0], [p[1], p[2], p[3]]);
    let (a2, b2) = (q[0], [q[1], q[2], q[3]]);
    let a = a1 * a2 - vec3::dot(b1, b2);
    let b = vec3::add(vec3::add(vec3::scale(a1, b2), vec3::scale(a2, b1)), vec3::cross(b1, b2));
    [a, b[0], b[1], b[2]]
}

pub fn mul(x: &GroupElement2, y: &GroupElement2) -> GroupElement2 {
    x.mul(y)
}

pub fn inv(x: &GroupElement2) -> GroupElement2 {
    x.inv()
}

/// exp(μ(v)): for v = t·n with ‖n‖ = 1 this is cos t·𝟙 + sin t·μ(n).
pub fn exp2(v: Vec3) -> GroupElement2 {
    let t = vec3::norm(v);
    if t == 0.0 {
        return GroupElement2::IDENTITY;
    }
    // sin(t)/t stays accurate for tiny t via the direct quotient
    let k = t.sin() / t;
    GroupElement2::new(t.cos(), vec3::scale(k, v))
}

/// Principal logarithm with ‖v‖ < π.
pub fn log2(x: &GroupElement2) -> Result<Vec3, Su2Error> {
    let d = x.dist(&GroupElement2::MINUS_IDENTITY);
    if d <= TOL_BRANCH {
        return Err(Su2Error::AntipodalBranch(d));
    }
    let nb = vec3::norm(x.b);
    if nb == 0.0 {
        return Ok([0.0; 3]);
    }
    let theta = nb.atan2(x.a);
    Ok(vec3::scale(theta / nb, x.b))
}

/// The rotation ϱ(x) with ϱ(x)(v) = μ⁻¹(x μ(v) x⁻¹).
pub fn covering(x: &GroupElement2) -> Rotation3 {
    let (a, b) = (x.a, x.b);
    let bb = vec3::dot(b, b);
    let mut m = [[0.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            *e = 2.0 * b[i] * b[j] + if i == j { a * a - bb } else { 0.0 };
        }
    }
    // 2a [b]ₓ
    m[0][1] -= 2.0 * a * b[2];
    m[0][2] += 2.0 * a * b[1];
    m[1][0] += 2.0 * a * b[2];
    m[1][2] -= 2.0 * a * b[0];
    m[2][0] -= 2.0 * a * b[1];
    m[2][1] += 2.0 * a * b[0];
    Rotation3 { m }
}

/// Ad_x(μ(v)) expressed in coordinates.
pub fn adjoint(x: &GroupElement2, v: Vec3) -> Vec3 {
    covering(x).apply(v)
}

/// A unit axis n with both arguments in the torus H_n = {cos t + sin t μ(n)}.
pub fn torus_axis(s: &GroupElement2, s2: &GroupElement2) -> Result<Vec3, Su2Error> {
    let comm = 2.0 * vec3::norm(vec3::cross(s.b, s2.b));
    if comm > TOL_PRED {
        return Err(Su2Error::NotCommuting(comm));
    }
    if s.is_central(TOL_BRANCH) && s2.is_central(TOL_BRANCH) {
        return Err(Su2Error::CentralPair);
    }
    let b = if vec3::norm(s.b) >= vec3::norm(s2.b) { s.b } else { s2.b };
    Ok(vec3::normalize(b))
}

/// h = exp((π/2)μ(m)) for m ⊥ n; conjugation by h inverts every element of H_n.
pub fn torus_flip(n: Vec3, m: Vec3) -> Result<GroupElement2, Su2Error> {
    let ip = vec3::dot(n, m);
    if ip.abs() > TOL_PRED {
        return Err(Su2Error::NotOrthogonal(ip));
    }
    Ok(GroupElement2 { a: 0.0, b: vec3::normalize(m) })
}

/// Haar-uniform element (normalized 4-dimensional Gaussian).
pub fn haar2<R: Rng + ?Sized>(rng: &mut R) -> GroupElement2 {
    loop {
        let q: [f64; 4] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n2: f64 = q.iter().map(|x| x * x).sum();
        if n2 > 1e-24 {
            return GroupElement2::from_quat(q);
        }
    }
}

/// Δ((x,s),(x,s2)) = s⁻¹s2.
pub fn fiber_delta(s: &GroupElement2, s2: &GroupElement2) -> GroupElement2 {
    s.inv().mul(s2)
}

impl Rotation3 {
    pub const IDENTITY: Rotation3 = Rotation3 { m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] };

    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.m;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn compose(&self, other: &Rotation3) -> Rotation3 {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = (0..3).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        Rotation3 { m }
    }

    pub fn transpose(&self) -> Rotation3 {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = self.m[j][i];
            }
        }
        Rotation3 { m }
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn max_entry_diff(&self, other: &Rotation3) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.m[i][j] - other.m[i][j]).abs());
            }
        }
        worst
    }

    /// One of the two SU(2) lifts (Shepperd's method).
    pub fn lift(&self) -> GroupElement2 {
        let m = &self.m;
        let tr = m[0][0] + m[1][1] + m[2][2];
        let q = if tr > 0.0 {
            let s = (tr + 1.0).sqrt() * 2.0;
            [0.25 * s, (m[2][1] - m[1][2]) / s, (m[0][2] - m[2][0]) / s, (m[1][0] - m[0][1]) / s]
        } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
            let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
            [(m[2][1] - m[1][2]) / s, 0.25 * s, (m[0][1] + m[1][0]) / s, (m[0][2] + m[2][0]) / s]
        } else if m[1][1] > m[2][2] {
            let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
            [(m[0][2] - m[2][0]) / s, (m[0][1] + m[1][0]) / s, 0.25 * s, (m[1][2] + m[2][1]) / s]
        } else {
            let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
            [(m[1][0] - m[0][1]) / s, (m[0][2] + m[2][0]) / s, (m[1][2] + m[2][1]) / s, 0.25 * s]
        };
        GroupElement2::from_quat(q)
    }

    /// The rotation taking the orthonormal frame built from (u1, u2) to the one built from (w1, w2).
    ///
    /// Frames are (û, ⊥-part of the second vector, cross product). The caller is responsible for
    /// the pairs having matching lengths and angles; only directions are used here.
    pub fn from_frames(u1: Vec3, u2: Vec3, w1: Vec3, w2: Vec3) -> Rotation3 {
        let frame = |p: Vec3, q: Vec3| {
            let f1 = vec3::normalize(p);
            let mut f2 = vec3::reject(q, f1);
            if vec3::norm(f2) < 1e-12 {
                f2 = vec3::any_orthogonal(f1);
            }
            let f2 = vec3::normalize(f2);
            let f3 = vec3::cross(f1, f2);
            [f1, f2, f3]
        };
        let fu = frame(u1, u2);
        let fw = frame(w1, w2);
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = (0..3).map(|k| fw[k][i] * fu[k][j]).sum();
            }
        }
        Rotation3 { m }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec3::{E1, E2, E3};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    // --- oracles: plain complex 2×2 matrix arithmetic and a truncated exponential series ---

    fn mat_mul(p: &Mat2, q: &Mat2) -> Mat2 {
        let mut r = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] = p[i][0] * q[0][j] + p[i][1] * q[1][j];
            }
        }
        r
    }

    fn mat_exp_series(m: &Mat2) -> Mat2 {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let mut sum = [[one, zero], [zero, one]];
        let mut term = sum;
        for k in 1..60 {
            term = mat_mul(&term, m);
            for row in term.iter_mut() {
                for e in row.iter_mut() {
                    *e /= k as f64;
                }
            }
            for i in 0..2 {
                for j in 0..2 {
                    sum[i][j] += term[i][j];
                }
            }
        }
        sum
    }

    fn mat_dist(p: &Mat2, q: &Mat2) -> f64 {
        let mut w: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                w = w.max((p[i][j] - q[i][j]).norm());
            }
        }
        w
    }

    fn mat_inv_unitary(p: &Mat2) -> Mat2 {
        [[p[0][0].conj(), p[1][0].conj()], [p[0][1].conj(), p[1][1].conj()]]
    }

    fn alg_from_matrix(m: &Mat2) -> Vec3 {
        // inverse of μ on traceless anti-hermitian matrices
        [-0.5 * (m[0][1].im + m[1][0].im), 0.5 * (m[1][0].re - m[0][1].re), 0.5 * (m[1][1].im - m[0][0].im)]
    }

    fn arb_elem() -> impl Strategy<Value = GroupElement2> {
        any::<u64>().prop_map(|s| haar2(&mut ChaCha8Rng::seed_from_u64(s)))
    }

    fn arb_vec(r: f64) -> impl Strategy<Value = Vec3> {
        [-r..r, -r..r, -r..r]
    }

    #[test]
    fn basis_matrices_match_convention() {
        let i = Complex64::new(0.0, 1.0);
        let o = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        assert!(mat_dist(&GroupElement2::tau(1).to_matrix(), &[[o, -i], [-i, o]]) < 1e-15);
        assert!(mat_dist(&GroupElement2::tau(2).to_matrix(), &[[o, -one], [one, o]]) < 1e-15);
        assert!(mat_dist(&GroupElement2::tau(3).to_matrix(), &[[-i, o], [o, i]]) < 1e-15);
    }

    #[test]
    fn mul_examples() {
        let x = exp2([0.3, -0.2, 0.9]);
        assert_eq!(GroupElement2::IDENTITY.mul(&x), x);
        let t3 = GroupElement2::tau(1).mul(&GroupElement2::tau(2));
        let oracle = mat_mul(&GroupElement2::tau(1).to_matrix(), &GroupElement2::tau(2).to_matrix());
        assert!(mat_dist(&t3.to_matrix(), &oracle) < 1e-15);
        assert!(t3.dist(&GroupElement2::tau(3)) < 1e-15);
        assert!(x.mul(&x.inv()).dist(&GroupElement2::IDENTITY) < 1e-15);
    }

    #[test]
    fn exp2_examples() {
        let t3 = exp2(vec3::scale(FRAC_PI_2, E3));
        assert!(t3.dist(&GroupElement2::tau(3)) < 1e-15);
        let series = mat_exp_series(&AlgElement2::new(vec3::scale(FRAC_PI_2, E3)).to_matrix());
        assert!(mat_dist(&t3.to_matrix(), &series) < 1e-13);
        assert_eq!(exp2([0.0; 3]), GroupElement2::IDENTITY);
        let m1 = exp2(vec3::scale(PI, E1));
        assert!(m1.dist(&GroupElement2::MINUS_IDENTITY) < 1e-15);
        let series = mat_exp_series(&AlgElement2::new(vec3::scale(PI, E1)).to_matrix());
        assert!(mat_dist(&m1.to_matrix(), &series) < 1e-13);
    }

    #[test]
    fn log2_examples() {
        assert_eq!(log2(&GroupElement2::IDENTITY).unwrap(), [0.0; 3]);
        let v = log2(&GroupElement2::tau(3)).unwrap();
        assert!(vec3::max_abs_diff(v, vec3::scale(FRAC_PI_2, E3)) < 1e-15);
        assert!(matches!(log2(&GroupElement2::MINUS_IDENTITY), Err(Su2Error::AntipodalBranch(_))));
    }

    #[test]
    fn covering_examples() {
        assert!(covering(&GroupElement2::IDENTITY).max_entry_diff(&Rotation3::IDENTITY) < 1e-15);
        let s = exp2(vec3::scale(FRAC_PI_4, E3));
        assert!(vec3::max_abs_diff(covering(&s).apply(E1), E2) < 1e-15);
        // conjugation oracle
        let sm = s.to_matrix();
        let conj = mat_mul(&mat_mul(&sm, &AlgElement2::new(E1).to_matrix()), &mat_inv_unitary(&sm));
        assert!(vec3::max_abs_diff(alg_from_matrix(&conj), E2) < 1e-15);
        assert!(covering(&GroupElement2::MINUS_IDENTITY).max_entry_diff(&Rotation3::IDENTITY) < 1e-15);
    }

    #[test]
    fn adjoint_examples() {
        let v = [0.4, -1.0, 2.0];
        assert_eq!(adjoint(&GroupElement2::IDENTITY, v), v);
        let s = exp2(vec3::scale(FRAC_PI_4, E3));
        assert!(vec3::max_abs_diff(adjoint(&s, E1), E2) < 1e-15);
        assert_eq!(adjoint(&s, [0.0; 3]), [0.0; 3]);
    }

    #[test]
    fn torus_axis_examples() {
        let n = torus_axis(&exp2(vec3::scale(0.3, E3)), &exp2(vec3::scale(1.1, E3))).unwrap();
        assert!((vec3::dot(n, E3).abs() - 1.0).abs() < 1e-15);
        let r = torus_axis(&exp2(vec3::scale(0.3, E1)), &exp2(vec3::scale(0.3, E2)));
        assert!(matches!(r, Err(Su2Error::NotCommuting(_))));
        // matrix commutator oracle agrees that the pair does not commute
        let (p, q) = (exp2(vec3::scale(0.3, E1)).to_matrix(), exp2(vec3::scale(0.3, E2)).to_matrix());
        assert!(mat_dist(&mat_mul(&p, &q), &mat_mul(&q, &p)) > 1e-3);
        let r = torus_axis(&GroupElement2::IDENTITY, &GroupElement2::MINUS_IDENTITY);
        assert_eq!(r, Err(Su2Error::CentralPair));
    }

    #[test]
    fn torus_flip_examples() {
        let h = torus_flip(E3, E1).unwrap();
        let s = exp2(vec3::scale(0.7, E3));
        let hm = h.to_matrix();
        let oracle = mat_mul(&mat_mul(&hm, &s.to_matrix()), &mat_inv_unitary(&hm));
        assert!(mat_dist(&oracle, &exp2(vec3::scale(-0.7, E3)).to_matrix()) < 1e-15);
        assert!(h.conj(&s).dist(&s.inv()) < 1e-15);
        assert!(matches!(torus_flip(E3, E3), Err(Su2Error::NotOrthogonal(_))));
        let h = torus_flip(E1, E2).unwrap();
        assert_eq!(h.conj(&GroupElement2::IDENTITY), GroupElement2::IDENTITY);
    }

    #[test]
    fn haar2_fixture_and_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let first = haar2(&mut rng);
        let again = haar2(&mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(first, again);
        assert!((first.norm_sq() - 1.0).abs() < 1e-15);
        // recorded first draw for ChaCha8 seeded with 42
        let fixture = [0.3165798565536775, 0.8835909205907013, -0.13966268754019143, 0.31549740598486786];
        assert_eq!(first.quat(), fixture);

        let n = 100_000;
        let (mut sa, mut sa2, mut st, mut st2) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let x = haar2(&mut rng);
            let tr = 2.0 * x.a; // Re tr of a𝟙 + μ(b)
            sa += x.a;
            sa2 += x.a * x.a;
            st += tr;
            st2 += tr * tr;
        }
        let nf = n as f64;
        let (ma, mt) = (sa / nf, st / nf);
        let (sea, set) = (((sa2 / nf - ma * ma) / nf).sqrt(), ((st2 / nf - mt * mt) / nf).sqrt());
        assert!(ma.abs() <= 3.0 * sea, "mean a = {ma}, se = {sea}");
        assert!(mt.abs() <= 3.0 * set, "mean tr = {mt}, se = {set}");
    }

    #[test]
    fn fiber_delta_examples() {
        let s = exp2([0.2, 0.1, -0.5]);
        assert!(fiber_delta(&s, &s).dist(&GroupElement2::IDENTITY) < 1e-15);
        assert_eq!(fiber_delta(&GroupElement2::IDENTITY, &s), s);
        let arg = GroupElement2::tau(1).mul(&exp2([0.0, 0.3, 0.0]));
        let d = fiber_delta(&GroupElement2::tau(3), &arg);
        let oracle = mat_mul(&mat_inv_unitary(&GroupElement2::tau(3).to_matrix()), &arg.to_matrix());
        assert!(mat_dist(&d.to_matrix(), &oracle) < 1e-15);
    }

    #[test]
    fn rotation_lift_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let x = haar2(&mut rng);
            let l = covering(&x).lift();
            assert!(l.dist(&x).min(l.dist(&x.neg())) < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn mul_matches_matrix_product(x in arb_elem(), y in arb_elem()) {
            let p = x.mul(&y);
            prop_assert!((p.norm_sq() - 1.0).abs() < 1e-12);
            let oracle = mat_mul(&x.to_matrix(), &y.to_matrix());
            prop_assert!(mat_dist(&p.to_matrix(), &oracle) < 1e-12);
        }

        #[test]
        fn matrix_is_special_unitary(x in arb_elem()) {
            let m = x.to_matrix();
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            prop_assert!((det - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            let id = mat_mul(&m, &mat_inv_unitary(&m));
            prop_assert!((id[0][0].re - 1.0).abs() < 1e-12 && id[0][1].norm() < 1e-12);
        }

        #[test]
        fn exp2_one_parameter(v in arb_vec(3.0), s in -2.0..2.0f64, t in -2.0..2.0f64) {
            prop_assert!(exp2(v).mul(&exp2(vec3::neg(v))).dist(&GroupElement2::IDENTITY) < 1e-12);
            let n = vec3::normalize(v);
            let lhs = exp2(vec3::scale(s + t, n));
            let rhs = exp2(vec3::scale(s, n)).mul(&exp2(vec3::scale(t, n)));
            prop_assert!(lhs.dist(&rhs) < 1e-12);
        }

        #[test]
        fn exp2_matches_series(v in arb_vec(2.0)) {
            let series = mat_exp_series(&AlgElement2::new(v).to_matrix());
            prop_assert!(mat_dist(&exp2(v).to_matrix(), &series) < 1e-12);
        }

        #[test]
        fn log_inverts_exp(x in arb_elem()) {
            prop_assume!(x.dist_to_center() > 1e-6);
            let v = log2(&x).unwrap();
            prop_assert!(vec3::norm(v) < PI);
            prop_assert!(exp2(v).dist(&x) < 1e-9);
        }

        #[test]
        fn covering_is_homomorphism(x in arb_elem(), y in arb_elem()) {
            let lhs = covering(&x.mul(&y));
            let rhs = covering(&x).compose(&covering(&y));
            prop_assert!(lhs.max_entry_diff(&rhs) < 1e-10);
            let r = covering(&x);
            prop_assert!(r.compose(&r.transpose()).max_entry_diff(&Rotation3::IDENTITY) < 1e-12);
            prop_assert!((r.det() - 1.0).abs() < 1e-12);
            prop_assert!(covering(&x.neg()).max_entry_diff(&r) < 1e-15);
        }

        #[test]
        fn adjoint_matches_conjugation(x in arb_elem(), v in arb_vec(2.0)) {
            let xm = x.to_matrix();
            let conj = mat_mul(&mat_mul(&xm, &AlgElement2::new(v).to_matrix()), &mat_inv_unitary(&xm));
            prop_assert!(vec3::max_abs_diff(adjoint(&x, v), alg_from_matrix(&conj)) < 1e-12);
        }

        #[test]
        fn bracket_rule(a in arb_vec(2.0), b in arb_vec(2.0)) {
            let (ma, mb) = (AlgElement2::new(a).to_matrix(), AlgElement2::new(b).to_matrix());
            let (p, q) = (mat_mul(&ma, &mb), mat_mul(&mb, &ma));
            let comm = [[p[0][0] - q[0][0], p[0][1] - q[0][1]], [p[1][0] - q[1][0], p[1][1] - q[1][1]]];
            let br = AlgElement2::new(a).bracket(AlgElement2::new(b)).v;
            prop_assert!(vec3::max_abs_diff(alg_from_matrix(&comm), br) < 1e-12);
        }

        #[test]
        fn flip_inverts_torus(seed in any::<u64>(), t in -4.0..4.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = vec3::normalize(haar2(&mut rng).b);
            let m = vec3::any_orthogonal(n);
            let s = exp2(vec3::scale(t, n));
            let h = torus_flip(n, m).unwrap();
            prop_assert!(h.conj(&s).dist(&s.inv()) < 1e-12);
        }
    }
}
