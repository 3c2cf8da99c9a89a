//! Invariant connections on ℝ³ × SU(2), local gauge fields, and the reduced-connection
//! checks (Wang conditions, trivial-bundle conditions).
//!
//! Tangent vectors at (x, s) are pairs (v, σ) with v ∈ ℝ³ and σ the body coordinate
//! s⁻¹σ̇ ∈ su(2). su(2) elements are stored as coordinate vectors w ↦ μ(w).

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::curve::{Gen, SymElement, Symmetry};
use crate::su2::{self, GroupElement2};
use crate::vec3::{self, Vec3};

/// Highest degree accepted for coefficient polynomials of a connection.
pub const MAX_CONN_DEGREE: usize = 8;
/// Highest total degree of a gauge-field component.
pub const MAX_FIELD_DEGREE: u32 = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConnError {
    #[error("symmetry does not act transitively on the base")]
    NotTransitive,
    #[error("gauge field has degree {0}, above the supported bound")]
    NonPolynomial(u32),
    #[error("invalid connection: {0}")]
    Invalid(String),
}

/// 3×3 real matrix, row-major.
pub type Mat3 = [[f64; 3]; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum InvariantConnection {
    /// c·Ad_{s⁻¹}μ(v) + σ.
    Isotropic { c: f64 },
    /// Coefficients of a, b, c as polynomials in ‖x‖².
    Spherical { f: Vec<f64>, g: Vec<f64>, h: Vec<f64> },
    /// ψ(v) = psi · v.
    Homogeneous { psi: Mat3 },
    /// ψ_w(g, ẇ) = A(w)g + b(w)ẇ with w the coordinate along w1 × w2.
    /// `a[i][j]` and `b[i]` are coefficient lists in w.
    SemiHomogeneous { w1: Vec3, w2: Vec3, a: [[Vec<f64>; 2]; 3], b: [Vec<f64>; 3] },
}

fn poly_eval(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

fn mat_vec(m: &Mat3, v: Vec3) -> Vec3 {
    [vec3::dot(m[0], v), vec3::dot(m[1], v), vec3::dot(m[2], v)]
}

impl InvariantConnection {
    pub fn validate(&self) -> Result<(), ConnError> {
        let check = |c: &[f64]| -> Result<(), ConnError> {
            if c.len() > MAX_CONN_DEGREE + 1 {
                return Err(ConnError::Invalid(format!("polynomial degree {} exceeds {MAX_CONN_DEGREE}", c.len() - 1)));
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(ConnError::Invalid("non-finite coefficient".into()));
            }
            Ok(())
        };
        match self {
            InvariantConnection::Isotropic { c } => check(&[*c]),
            InvariantConnection::Spherical { f, g, h } => {
                check(f)?;
                check(g)?;
                check(h)
            }
            InvariantConnection::Homogeneous { psi } => psi.iter().try_for_each(|r| check(r)),
            InvariantConnection::SemiHomogeneous { w1, w2, a, b } => {
                Symmetry::SemiHomogeneous { w1: *w1, w2: *w2 }
                    .validate()
                    .map_err(|e| ConnError::Invalid(e.to_string()))?;
                a.iter().flatten().try_for_each(|c| check(c))?;
                b.iter().try_for_each(|c| check(c))
            }
        }
    }

    /// The symmetry group under which this family is invariant.
    pub fn symmetry(&self) -> Symmetry {
        match self {
            InvariantConnection::Isotropic { .. } => Symmetry::HomogeneousIsotropic,
            InvariantConnection::Spherical { .. } => Symmetry::SphericallySymmetric,
            InvariantConnection::Homogeneous { .. } => Symmetry::Homogeneous,
            InvariantConnection::SemiHomogeneous { w1, w2, .. } => Symmetry::SemiHomogeneous { w1: *w1, w2: *w2 },
        }
    }

    /// The local 1-form A(x)(v) = ω at (x, 𝟙) applied to (v, 0).
    pub fn local_form(&self, x: Vec3, v: Vec3) -> Vec3 {
        match self {
            InvariantConnection::Isotropic { c } => vec3::scale(*c, v),
            InvariantConnection::Spherical { f, g, h } => {
                let r2 = vec3::dot(x, x);
                let xv = vec3::cross(x, v);
                let xxv = vec3::cross(x, xv);
                // [μx, μv] = 2μ(x×v), [μx, [μx, μv]] = 4μ(x×(x×v))
                vec3::add(
                    vec3::scale(poly_eval(f, r2), v),
                    vec3::add(vec3::scale(2.0 * poly_eval(g, r2), xv), vec3::scale(4.0 * poly_eval(h, r2), xxv)),
                )
            }
            InvariantConnection::Homogeneous { psi } => mat_vec(psi, v),
            InvariantConnection::SemiHomogeneous { w1, w2, a, b } => {
                let n = vec3::normalize(vec3::cross(*w1, *w2));
                let w = vec3::dot(x, n);
                let (g1, g2, wd) = (vec3::dot(v, *w1), vec3::dot(v, *w2), vec3::dot(v, n));
                let mut out = [0.0; 3];
                for i in 0..3 {
                    out[i] = poly_eval(&a[i][0], w) * g1 + poly_eval(&a[i][1], w) * g2 + poly_eval(&b[i], w) * wd;
                }
                out
            }
        }
    }

    /// Whether the connection is invariant under the one-parameter group exp(t·g).
    pub fn invariant_under(&self, g: &Gen) -> bool {
        let zero = |w: Vec3| vec3::norm(w) <= 1e-12;
        match self {
            InvariantConnection::Isotropic { .. } => true,
            InvariantConnection::Spherical { .. } => zero(g.v),
            InvariantConnection::Homogeneous { .. } => zero(g.s),
            InvariantConnection::SemiHomogeneous { w1, w2, .. } => {
                zero(g.s) && vec3::dot(g.v, vec3::cross(*w1, *w2)).abs() <= 1e-10
            }
        }
    }
}

/// ω at (x, s) applied to (v, body), with body = s⁻¹σ̇.
pub fn eval_conn(w: &InvariantConnection, x: Vec3, s: &GroupElement2, v: Vec3, body: Vec3) -> Vec3 {
    vec3::add(su2::adjoint(&s.inv(), w.local_form(x, v)), body)
}

/// ‖(Φ_g^*ω − ω)(v, body)‖ at (x, s).
///
/// Φ_g(x, s) = (shift + σx, σs) pushes (v, body) to (σv, body).
pub fn pullback_residual(w: &InvariantConnection, g: &SymElement, x: Vec3, s: &GroupElement2, v: Vec3, body: Vec3) -> f64 {
    let moved = eval_conn(w, g.apply_point(x), &g.rot.mul(s), su2::adjoint(&g.rot, v), body);
    vec3::norm(vec3::sub(moved, eval_conn(w, x, s, v, body)))
}

/// The reduced map ψ = Φ_p^*ω at p = (0, 𝟙) on the basis of 𝔤.
///
/// For the Euclidean group the columns are (e₁, e₂, e₃, τ₁, τ₂, τ₃); for translations
/// only the first three.
pub fn wang_reduce(w: &InvariantConnection, sym: &Symmetry) -> Result<DMatrix<f64>, ConnError> {
    let cols = match sym {
        Symmetry::Homogeneous => 3,
        Symmetry::HomogeneousIsotropic => 6,
        _ => return Err(ConnError::NotTransitive),
    };
    let mut m = DMatrix::zeros(3, cols);
    for j in 0..cols {
        let mut gen = Gen::new([0.0; 3], [0.0; 3]);
        if j < 3 {
            gen.v[j] = 1.0;
        } else {
            gen.s[j - 3] = 1.0;
        }
        // the fundamental field at (0, 𝟙): (2s×0 + v, s)
        let col = eval_conn(w, [0.0; 3], &GroupElement2::IDENTITY, gen.field([0.0; 3]), gen.s);
        for i in 0..3 {
            m[(i, j)] = col[i];
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WangReport {
    /// max |ψ(0, s) − s| over the stabilizer algebra basis.
    pub cond_a: f64,
    /// max |ψ(Ad_h ξ) − Ad_h ψ(ξ)| over sampled stabilizer elements and basis vectors.
    pub cond_b: f64,
    pub pass: bool,
}

fn col3(m: &DMatrix<f64>, j: usize) -> Vec3 {
    [m[(0, j)], m[(1, j)], m[(2, j)]]
}

/// Apply ψ (3×3 or 3×6) to the coordinates of (v, s).
fn apply_psi(psi: &DMatrix<f64>, v: Vec3, s: Vec3) -> Vec3 {
    let mut out = [0.0; 3];
    for j in 0..psi.ncols() {
        let k = if j < 3 { v[j] } else { s[j - 3] };
        out = vec3::add(out, vec3::scale(k, col3(psi, j)));
    }
    out
}

/// Generalized Wang conditions at p = (0, 𝟙) with 32 Haar stabilizer samples.
pub fn wang_check<R: Rng + ?Sized>(psi: &DMatrix<f64>, sym: &Symmetry, rng: &mut R, tol: f64) -> Result<WangReport, ConnError> {
    let euclid = match (sym, psi.ncols()) {
        (Symmetry::HomogeneousIsotropic, 6) => true,
        (Symmetry::Homogeneous, 3) => false,
        (Symmetry::Homogeneous | Symmetry::HomogeneousIsotropic, _) => {
            return Err(ConnError::Invalid("map has the wrong number of columns".into()))
        }
        _ => return Err(ConnError::NotTransitive),
    };
    if psi.nrows() != 3 {
        return Err(ConnError::Invalid("map must have three rows".into()));
    }
    if !euclid {
        // trivial stabilizer: both conditions are empty
        return Ok(WangReport { cond_a: 0.0, cond_b: 0.0, pass: true });
    }
    let mut cond_a: f64 = 0.0;
    for k in 0..3 {
        let mut e = [0.0; 3];
        e[k] = 1.0;
        cond_a = cond_a.max(vec3::norm(vec3::sub(col3(psi, 3 + k), e)));
    }
    let mut cond_b: f64 = 0.0;
    for _ in 0..32 {
        let h = su2::haar2(rng);
        for j in 0..6 {
            let (mut v, mut s) = ([0.0; 3], [0.0; 3]);
            if j < 3 {
                v[j] = 1.0;
            } else {
                s[j - 3] = 1.0;
            }
            // Ad_(0,h)(v, s) = (hv, hs)
            let lhs = apply_psi(psi, su2::adjoint(&h, v), su2::adjoint(&h, s));
            let rhs = su2::adjoint(&h, apply_psi(psi, v, s));
            cond_b = cond_b.max(vec3::norm(vec3::sub(lhs, rhs)));
        }
    }
    Ok(WangReport { cond_a, cond_b, pass: cond_a <= tol && cond_b <= tol })
}

/// The equivariance system for ψ|_ℝ³ under the Euclidean stabilizer.
///
/// Unknown X (row-major, X[j][b] = b-th coordinate of ψ(e_j)); row (i, j, m) encodes
/// [τ_i, ψ(e_j)] = 2ε_{ijk}ψ(e_k) in coordinate m.
pub fn equiv_system(variant: SystemVariant) -> DMatrix<f64> {
    let eps = |a: usize, b: usize, c: usize| -> f64 {
        if a == b || b == c || a == c {
            0.0
        } else if (a, b, c) == (0, 1, 2) || (a, b, c) == (1, 2, 0) || (a, b, c) == (2, 0, 1) {
            1.0
        } else {
            -1.0
        }
    };
    let mut rows = vec![];
    for i in 0..3 {
        for j in 0..3 {
            if variant == SystemVariant::Diagonal && i != j {
                continue;
            }
            for m in 0..3 {
                let mut row = [0.0; 9];
                let sign = if variant == SystemVariant::SignFlipped { -1.0 } else { 1.0 };
                for b in 0..3 {
                    row[3 * j + b] += eps(m, i, b);
                }
                for k in 0..3 {
                    row[3 * k + m] -= sign * eps(i, j, k);
                }
                rows.push(row);
            }
        }
    }
    DMatrix::from_fn(rows.len(), 9, |r, c| rows[r][c])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemVariant {
    Full,
    /// Right-hand side with the opposite sign.
    SignFlipped,
    /// Only the rows with i = j.
    Diagonal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nullspace {
    pub dim: usize,
    /// Orthonormal basis vectors, each a row-major 3×3 matrix flattened.
    pub basis: Vec<[f64; 9]>,
    /// Singular values in ascending order.
    pub singular: Vec<f64>,
}

/// Nullspace of a constraint system (singular values below 1e-10 count as zero).
pub fn nullspace(sys: &DMatrix<f64>) -> Nullspace {
    let n = sys.ncols();
    // eigen-decomposition of the Gram matrix gives the right singular vectors
    let gram = sys.transpose() * sys;
    let eig = nalgebra::SymmetricEigen::new(gram);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|a, b| eig.eigenvalues[*a].partial_cmp(&eig.eigenvalues[*b]).unwrap());
    let singular: Vec<f64> = idx.iter().map(|&k| eig.eigenvalues[k].max(0.0).sqrt()).collect();
    let mut basis = vec![];
    for (pos, &k) in idx.iter().enumerate() {
        if singular[pos] > 1e-10 {
            break;
        }
        let mut b = [0.0; 9];
        for (r, slot) in b.iter_mut().enumerate() {
            *slot = eig.eigenvectors[(r, k)];
        }
        basis.push(b);
    }
    Nullspace { dim: basis.len(), basis, singular }
}

pub fn equiv_nullspace() -> Nullspace {
    nullspace(&equiv_system(SystemVariant::Full))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrivReport {
    pub cond_i: f64,
    pub cond_ii: f64,
    pub cond_iii: f64,
    pub pass: bool,
}

/// Trivial-bundle conditions for the rotation group with the covering ℝ³ × {𝟙}.
///
/// ψ_x(g, v) = A(x)(2g×x + v) + g. Condition i) evaluates ψ⁻ on the kernel
/// (v = −2g×x, s = g); ii) and iii) compare ψ at σx with Ad_σ of ψ at x.
pub fn trivbundle_check<R: Rng + ?Sized>(w: &InvariantConnection, samples: usize, radius: f64, rng: &mut R, tol: f64) -> TrivReport {
    let psi = |x: Vec3, g: Vec3, v: Vec3| vec3::add(w.local_form(x, vec3::add(vec3::scale(2.0, vec3::cross(g, x)), v)), g);
    let gauss = |k: f64, rng: &mut R| -> Vec3 {
        let v: Vec3 = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        vec3::scale(k, v)
    };
    let (mut ri, mut rii, mut riii): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..samples {
        let x = gauss(radius, rng);
        let g = gauss(1.0, rng);
        let v = gauss(1.0, rng);
        let sigma = su2::haar2(rng);
        let kernel_v = vec3::scale(-2.0, vec3::cross(g, x));
        ri = ri.max(vec3::norm(vec3::sub(psi(x, g, kernel_v), g)));
        let y = su2::adjoint(&sigma, x);
        let lhs = psi(y, [0.0; 3], su2::adjoint(&sigma, v));
        let rhs = su2::adjoint(&sigma, psi(x, [0.0; 3], v));
        rii = rii.max(vec3::norm(vec3::sub(lhs, rhs)));
        let lhs = psi(y, su2::adjoint(&sigma, g), [0.0; 3]);
        let rhs = su2::adjoint(&sigma, psi(x, g, [0.0; 3]));
        riii = riii.max(vec3::norm(vec3::sub(lhs, rhs)));
    }
    TrivReport { cond_i: ri, cond_ii: rii, cond_iii: riii, pass: ri <= tol && rii <= tol && riii <= tol }
}

// ---------------------------------------------------------------------------
// Gauge fields

/// Scalar polynomial on ℝ³ keyed by exponent triples.
pub type Poly = BTreeMap<[u32; 3], f64>;

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
            *out.entry(e).or_insert(0.0) += ca * cb;
        }
    }
    out
}

fn poly_add_scaled(acc: &mut Poly, k: f64, p: &Poly) {
    for (e, c) in p {
        *acc.entry(*e).or_insert(0.0) += k * c;
    }
}

fn poly_const(c: f64) -> Poly {
    Poly::from([([0, 0, 0], c)])
}

fn poly_linear(n: Vec3) -> Poly {
    Poly::from([([1, 0, 0], n[0]), ([0, 1, 0], n[1]), ([0, 0, 1], n[2])])
}

/// p(q) for a univariate coefficient list p and a polynomial q.
fn poly_compose(coeffs: &[f64], q: &Poly) -> Poly {
    let mut out = Poly::new();
    for c in coeffs.iter().rev() {
        out = poly_mul(&out, q);
        poly_add_scaled(&mut out, 1.0, &poly_const(*c));
    }
    out
}

fn poly_eval3(p: &Poly, x: Vec3) -> f64 {
    p.iter().map(|(e, c)| c * x[0].powi(e[0] as i32) * x[1].powi(e[1] as i32) * x[2].powi(e[2] as i32)).sum()
}

/// A(x)(v) = Σ_j v_j · comps[j](x), each component an su(2)-valued polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeField {
    /// comps[j][m]: coordinate m of A(x)(e_j).
    pub comps: [[Poly; 3]; 3],
}

impl GaugeField {
    pub fn zero() -> Self {
        GaugeField { comps: Default::default() }
    }

    /// A constant field with A(e_j) = cols[j].
    pub fn constant(cols: [Vec3; 3]) -> Self {
        let mut f = GaugeField::zero();
        for j in 0..3 {
            for m in 0..3 {
                if cols[j][m] != 0.0 {
                    f.comps[j][m].insert([0, 0, 0], cols[j][m]);
                }
            }
        }
        f
    }

    pub fn degree(&self) -> u32 {
        self.comps
            .iter()
            .flatten()
            .flat_map(|p| p.iter().filter(|(_, c)| **c != 0.0).map(|(e, _)| e[0] + e[1] + e[2]))
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: Vec3, v: Vec3) -> Vec3 {
        let mut out = [0.0; 3];
        for j in 0..3 {
            if v[j] == 0.0 {
                continue;
            }
            for m in 0..3 {
                out[m] += v[j] * poly_eval3(&self.comps[j][m], x);
            }
        }
        out
    }

    fn prune(mut self) -> Result<Self, ConnError> {
        for p in self.comps.iter_mut().flatten() {
            p.retain(|_, c| *c != 0.0);
        }
        let d = self.degree();
        if d > MAX_FIELD_DEGREE {
            return Err(ConnError::NonPolynomial(d));
        }
        Ok(self)
    }
}

/// Pullback of ω by the section x ↦ (x, 𝟙), expanded into monomials.
pub fn to_gauge_field(w: &InvariantConnection) -> Result<GaugeField, ConnError> {
    let field = match w {
        InvariantConnection::Isotropic { c } => {
            GaugeField::constant([vec3::scale(*c, vec3::E1), vec3::scale(*c, vec3::E2), vec3::scale(*c, vec3::E3)])
        }
        InvariantConnection::Homogeneous { psi } => {
            GaugeField::constant([0, 1, 2].map(|j| [psi[0][j], psi[1][j], psi[2][j]]))
        }
        InvariantConnection::Spherical { f, g, h } => {
            let r2 = Poly::from([([2, 0, 0], 1.0), ([0, 2, 0], 1.0), ([0, 0, 2], 1.0)]);
            let (pf, pg, ph) = (poly_compose(f, &r2), poly_compose(g, &r2), poly_compose(h, &r2));
            let xs = [poly_linear(vec3::E1), poly_linear(vec3::E2), poly_linear(vec3::E3)];
            let mut out = GaugeField::zero();
            for j in 0..3 {
                for m in 0..3 {
                    let p = &mut out.comps[j][m];
                    // f v
                    if m == j {
                        poly_add_scaled(p, 1.0, &pf);
                    }
                    // 2g (x × e_j)_m = 2g ε_{m k j} x_k
                    for k in 0..3 {
                        let e = levi(m, k, j);
                        if e != 0.0 {
                            poly_add_scaled(p, 2.0 * e, &poly_mul(&pg, &xs[k]));
                        }
                    }
                    // 4h (x (x·e_j) − |x|² e_j)_m
                    let mut t = poly_mul(&xs[m], &xs[j]);
                    if m == j {
                        poly_add_scaled(&mut t, -1.0, &r2);
                    }
                    poly_add_scaled(p, 4.0, &poly_mul(&ph, &t));
                }
            }
            out
        }
        InvariantConnection::SemiHomogeneous { w1, w2, a, b } => {
            let n = vec3::normalize(vec3::cross(*w1, *w2));
            let wcoord = poly_linear(n);
            let mut out = GaugeField::zero();
            for m in 0..3 {
                let (a1, a2, bb) = (poly_compose(&a[m][0], &wcoord), poly_compose(&a[m][1], &wcoord), poly_compose(&b[m], &wcoord));
                for j in 0..3 {
                    let p = &mut out.comps[j][m];
                    poly_add_scaled(p, w1[j], &a1);
                    poly_add_scaled(p, w2[j], &a2);
                    poly_add_scaled(p, n[j], &bb);
                }
            }
            out
        }
    };
    field.prune()
}

fn levi(a: usize, b: usize, c: usize) -> f64 {
    if a == b || b == c || a == c {
        0.0
    } else if (a + 1) % 3 == b {
        1.0
    } else {
        -1.0
    }
}

/// A random member of a family; coefficient polynomials have degree `deg`.
pub fn sample_connection<R: Rng + ?Sized>(family: &str, deg: usize, rng: &mut R) -> InvariantConnection {
    let coeffs = |n: usize, rng: &mut R| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
    match family {
        "Isotropic" => InvariantConnection::Isotropic { c: rng.random_range(-2.0..2.0) },
        "Spherical" => InvariantConnection::Spherical { f: coeffs(deg + 1, rng), g: coeffs(deg + 1, rng), h: coeffs(deg + 1, rng) },
        "Homogeneous" => {
            let c = coeffs(9, rng);
            InvariantConnection::Homogeneous { psi: [[c[0], c[1], c[2]], [c[3], c[4], c[5]], [c[6], c[7], c[8]]] }
        }
        _ => {
            let (w1, w2) = (vec3::E1, vec3::E2);
            let a = [(); 3].map(|_| [coeffs(deg + 1, rng), coeffs(deg + 1, rng)]);
            let b = [(); 3].map(|_| coeffs(deg + 1, rng));
            InvariantConnection::SemiHomogeneous { w1, w2, a, b }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::su2::{exp2, Mat2};
    use crate::vec3::{E1, E2, E3};
    use num_complex::Complex64;
    use proptest::prelude::{any, prop_assert, proptest, Strategy};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    /// su(2) coordinates via the explicit τ matrices and matrix commutators.
    fn tau(k: usize) -> Mat2 {
        let (z, i, o) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(1.0, 0.0));
        match k {
            0 => [[z, -i], [-i, z]],
            1 => [[z, -o], [o, z]],
            _ => [[-i, z], [z, i]],
        }
    }

    fn mu(v: Vec3) -> Mat2 {
        let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
        for k in 0..3 {
            let t = tau(k);
            for r in 0..2 {
                for c in 0..2 {
                    m[r][c] += t[r][c] * v[k];
                }
            }
        }
        m
    }

    fn mm(a: &Mat2, b: &Mat2) -> Mat2 {
        let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        m
    }

    fn comm(a: &Mat2, b: &Mat2) -> Mat2 {
        let (x, y) = (mm(a, b), mm(b, a));
        [[x[0][0] - y[0][0], x[0][1] - y[0][1]], [x[1][0] - y[1][0], x[1][1] - y[1][1]]]
    }

    /// Coordinates of an su(2) matrix: M = Σ v_k τ_k with τ₃ = diag(−i, i), etc.
    fn coords(m: &Mat2) -> Vec3 {
        [-m[0][1].im, m[1][0].re, -m[0][0].im]
    }

    /// Spherical family evaluated from its defining bracket expression.
    fn spherical_oracle(f: &[f64], g: &[f64], h: &[f64], x: Vec3, v: Vec3) -> Vec3 {
        let r2 = vec3::dot(x, x);
        let p = |c: &[f64]| c.iter().enumerate().map(|(k, a)| a * r2.powi(k as i32)).sum::<f64>();
        let (mx, mv) = (mu(x), mu(v));
        let b1 = comm(&mx, &mv);
        let b2 = comm(&mx, &b1);
        let mut out = vec3::scale(p(f), coords(&mv));
        out = vec3::add(out, vec3::scale(p(g), coords(&b1)));
        vec3::add(out, vec3::scale(p(h), coords(&b2)))
    }

    #[test]
    fn eval_examples() {
        let w = InvariantConnection::Isotropic { c: 1.0 };
        assert_eq!(eval_conn(&w, [0.0; 3], &GroupElement2::IDENTITY, E1, [0.0; 3]), E1);
        let w0 = InvariantConnection::Isotropic { c: 0.0 };
        assert_eq!(eval_conn(&w0, [1.0, 2.0, 3.0], &exp2([0.1, 0.2, 0.3]), [4.0, 5.0, 6.0], [0.0; 3]), [0.0; 3]);
        let ws = InvariantConnection::Spherical { f: vec![1.0], g: vec![], h: vec![] };
        let v = [0.3, -0.7, 1.1];
        assert!(vec3::max_abs_diff(eval_conn(&ws, [2.0, 1.0, 0.0], &GroupElement2::IDENTITY, v, [0.0; 3]), v) < 1e-15);
    }

    #[test]
    fn spherical_matches_bracket_oracle() {
        let (f, g, h) = (vec![0.4, -0.2], vec![1.3, 0.1], vec![-0.6, 0.05]);
        let w = InvariantConnection::Spherical { f: f.clone(), g: g.clone(), h: h.clone() };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let x: Vec3 = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let v: Vec3 = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let got = w.local_form(x, v);
            assert!(vec3::max_abs_diff(got, spherical_oracle(&f, &g, &h, x, v)) < 1e-12);
        }
    }

    #[test]
    fn pullback_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let iso = InvariantConnection::Isotropic { c: 1.7 };
        let sph = InvariantConnection::Spherical { f: vec![0.3, 0.2], g: vec![-1.0], h: vec![0.5, 0.1] };
        for _ in 0..50 {
            let x = [rng.random_range(-2.0..2.0), 0.5, rng.random_range(-2.0..2.0)];
            let s = su2::haar2(&mut rng);
            let (v, b) = ([0.2, -0.4, 1.0], [0.3, 0.3, -0.1]);
            let g = Symmetry::HomogeneousIsotropic.sample_element(&mut rng, 1.0);
            assert!(pullback_residual(&iso, &g, x, &s, v, b) <= 1e-10);
            let g = Symmetry::SphericallySymmetric.sample_element(&mut rng, 1.0);
            assert!(pullback_residual(&sph, &g, x, &s, v, b) <= 1e-10);
        }
        let hom = InvariantConnection::Homogeneous { psi: [[1.0, 0.2, 0.0], [0.0, -0.5, 0.3], [0.7, 0.0, 0.1]] };
        let g = SymElement::rotation(exp2([0.4, -0.9, 0.2]));
        assert!(pullback_residual(&hom, &g, [0.1, 0.2, 0.3], &GroupElement2::IDENTITY, E1, [0.0; 3]) > 1e-3);
    }

    #[test]
    fn wang_reduce_examples() {
        for c in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            let m = wang_reduce(&InvariantConnection::Isotropic { c }, &Symmetry::HomogeneousIsotropic).unwrap();
            for i in 0..3 {
                for j in 0..6 {
                    let want = if j < 3 { if i == j { c } else { 0.0 } } else if i + 3 == j { 1.0 } else { 0.0 };
                    assert!((m[(i, j)] - want).abs() <= 1e-10);
                }
            }
        }
        // oracle: numeric derivative of the orbit t ↦ (t e_j, 𝟙), fed to the form
        let psi = [[1.0, 0.2, 0.0], [0.0, -0.5, 0.3], [0.7, 0.0, 0.1]];
        let hom = InvariantConnection::Homogeneous { psi };
        let m = wang_reduce(&hom, &Symmetry::Homogeneous).unwrap();
        for j in 0..3 {
            let mut e = [0.0; 3];
            e[j] = 1.0;
            let h = 1e-6;
            let x1 = vec3::scale(h, e);
            let tangent = vec3::scale(1.0 / (2.0 * h), vec3::sub(x1, vec3::neg(x1)));
            let col = eval_conn(&hom, [0.0; 3], &GroupElement2::IDENTITY, tangent, [0.0; 3]);
            for i in 0..3 {
                assert!((m[(i, j)] - col[i]).abs() < 1e-9);
                assert!((m[(i, j)] - psi[i][j]).abs() < 1e-15);
            }
        }
        assert_eq!(wang_reduce(&hom, &Symmetry::SphericallySymmetric), Err(ConnError::NotTransitive));
    }

    #[test]
    fn wang_check_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sym = Symmetry::HomogeneousIsotropic;
        let good = wang_reduce(&InvariantConnection::Isotropic { c: 0.8 }, &sym).unwrap();
        let r = wang_check(&good, &sym, &mut rng, 1e-10).unwrap();
        assert!(r.pass && r.cond_b < 1e-10);
        let zero = wang_reduce(&InvariantConnection::Isotropic { c: 0.0 }, &sym).unwrap();
        assert!(wang_check(&zero, &sym, &mut rng, 1e-10).unwrap().pass);
        // ψ(e_j) = s₀ for every j
        let mut bad = zero.clone();
        for j in 0..3 {
            bad[(0, j)] = 0.0;
            bad[(1, j)] = 0.0;
            bad[(2, j)] = 1.0;
        }
        let r = wang_check(&bad, &sym, &mut rng, 1e-10).unwrap();
        assert!(!r.pass && r.cond_b > 1e-3);
        // the named witness σ = exp2((π/2)e₃) rotates e₁ to −e₁ while fixing s₀
        let h = exp2(vec3::scale(FRAC_PI_2, E3));
        let lhs = apply_psi(&bad, su2::adjoint(&h, E1), [0.0; 3]);
        let rhs = su2::adjoint(&h, apply_psi(&bad, E1, [0.0; 3]));
        assert!(vec3::norm(vec3::sub(lhs, rhs)) > 1.0);
    }

    /// Rank oracle: Gaussian elimination with partial pivoting.
    fn rank(m: &DMatrix<f64>) -> usize {
        let mut a = m.clone();
        let (rows, cols) = (a.nrows(), a.ncols());
        let mut r = 0;
        for c in 0..cols {
            let Some(p) = (r..rows).max_by(|x, y| a[(*x, c)].abs().partial_cmp(&a[(*y, c)].abs()).unwrap()) else { break };
            if a[(p, c)].abs() < 1e-9 {
                continue;
            }
            a.swap_rows(p, r);
            for k in 0..rows {
                if k != r {
                    let f = a[(k, c)] / a[(r, c)];
                    for j in 0..cols {
                        a[(k, j)] -= f * a[(r, j)];
                    }
                }
            }
            r += 1;
            if r == rows {
                break;
            }
        }
        r
    }

    #[test]
    fn nullspace_examples() {
        let ns = equiv_nullspace();
        assert_eq!(ns.dim, 1);
        assert!(ns.singular[1] > 1e-3);
        let b = ns.basis[0];
        let k = b[0];
        for (i, x) in b.iter().enumerate() {
            let want = if i % 4 == 0 { k } else { 0.0 };
            assert!((x - want).abs() < 1e-10);
        }
        assert_eq!(9 - rank(&equiv_system(SystemVariant::Full)), 1);
        let flipped = nullspace(&equiv_system(SystemVariant::SignFlipped));
        assert_eq!(flipped.dim, 0);
        assert_eq!(9 - rank(&equiv_system(SystemVariant::SignFlipped)), 0);
        let diag = nullspace(&equiv_system(SystemVariant::Diagonal));
        assert!(diag.dim >= 1);
        assert_eq!(diag.dim, 9 - rank(&equiv_system(SystemVariant::Diagonal)));
    }

    #[test]
    fn trivbundle_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sph = InvariantConnection::Spherical { f: vec![0.5, -0.1, 0.02], g: vec![1.0, 0.3], h: vec![-0.2] };
        assert!(trivbundle_check(&sph, 200, 1.5, &mut rng, 1e-9).pass);
        let zero = InvariantConnection::Spherical { f: vec![], g: vec![], h: vec![] };
        assert!(trivbundle_check(&zero, 50, 1.5, &mut rng, 1e-9).pass);
        let hom = InvariantConnection::Homogeneous { psi: [[1.0, 0.2, 0.0], [0.0, -0.5, 0.3], [0.7, 0.0, 0.1]] };
        let r = trivbundle_check(&hom, 50, 1.5, &mut rng, 1e-9);
        assert!(!r.pass && r.cond_ii > 1e-3);
    }

    #[test]
    fn gauge_field_examples() {
        let f = to_gauge_field(&InvariantConnection::Isotropic { c: 2.5 }).unwrap();
        assert_eq!(f.degree(), 0);
        assert_eq!(f.eval([9.0, 9.0, 9.0], E2), [0.0, 2.5, 0.0]);
        let z = to_gauge_field(&InvariantConnection::Isotropic { c: 0.0 }).unwrap();
        assert!(z.comps.iter().flatten().all(|p| p.is_empty()));
        let g = vec![0.7, -0.3];
        let w = InvariantConnection::Spherical { f: vec![], g: g.clone(), h: vec![] };
        let fld = to_gauge_field(&w).unwrap();
        assert_eq!(fld.degree(), 3);
        for (x, v) in [([0.3, -1.0, 0.4], E3), ([1.0, 1.0, 1.0], [0.2, 0.1, -0.5])] {
            assert!(vec3::max_abs_diff(fld.eval(x, v), spherical_oracle(&[], &g, &[], x, v)) < 1e-12);
        }
        let big = InvariantConnection::Spherical { f: vec![0.0, 0.0, 1.0], g: vec![], h: vec![] };
        assert_eq!(to_gauge_field(&big).unwrap().degree(), 4);
        let too_big = InvariantConnection::Spherical { f: vec![], g: vec![], h: vec![0.0, 0.0, 1.0] };
        assert_eq!(to_gauge_field(&too_big), Err(ConnError::NonPolynomial(6)));
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for fam in ["Isotropic", "Spherical", "Homogeneous", "SemiHomogeneous"] {
            let w = sample_connection(fam, 2, &mut rng);
            let s = serde_json::to_string(&w).unwrap();
            assert_eq!(serde_json::from_str::<InvariantConnection>(&s).unwrap(), w);
        }
    }

    fn arb_vec(r: f64) -> impl Strategy<Value = Vec3> {
        [-r..r, -r..r, -r..r]
    }

    proptest! {
        #[test]
        fn eval_is_linear_in_tangent(seed in any::<u64>(), fam in 0usize..4, x in arb_vec(2.0), v1 in arb_vec(1.0), v2 in arb_vec(1.0), b1 in arb_vec(1.0), b2 in arb_vec(1.0), k in -2.0..2.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = sample_connection(["Isotropic", "Spherical", "Homogeneous", "SemiHomogeneous"][fam], 4, &mut rng);
            let s = su2::haar2(&mut rng);
            let lhs = eval_conn(&w, x, &s, vec3::add(v1, vec3::scale(k, v2)), vec3::add(b1, vec3::scale(k, b2)));
            let rhs = vec3::add(eval_conn(&w, x, &s, v1, b1), vec3::scale(k, eval_conn(&w, x, &s, v2, b2)));
            prop_assert!(vec3::max_abs_diff(lhs, rhs) <= 1e-12 * (1.0 + vec3::norm(rhs)));
        }

        #[test]
        fn families_are_invariant(seed in any::<u64>(), fam in 0usize..4, x in arb_vec(0.6), v in arb_vec(1.0), b in arb_vec(1.0)) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = sample_connection(["Isotropic", "Spherical", "Homogeneous", "SemiHomogeneous"][fam], 4, &mut rng);
            let g = w.symmetry().sample_element(&mut rng, 1.0);
            let s = su2::haar2(&mut rng);
            prop_assert!(pullback_residual(&w, &g, x, &s, v, b) <= 1e-10);
        }

        #[test]
        fn gauge_field_matches_form(seed in any::<u64>(), fam in 0usize..4, x in arb_vec(1.5), v in arb_vec(1.0)) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = sample_connection(["Isotropic", "Spherical", "Homogeneous", "SemiHomogeneous"][fam], 1, &mut rng);
            let Ok(fld) = to_gauge_field(&w) else { return Ok(()) };
            prop_assert!(vec3::max_abs_diff(fld.eval(x, v), w.local_form(x, v)) < 1e-11);
        }

        #[test]
        fn wang_recovers_isotropic(c in -2.0..2.0f64) {
            let m = wang_reduce(&InvariantConnection::Isotropic { c }, &Symmetry::HomogeneousIsotropic).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(c.to_bits());
            prop_assert!(wang_check(&m, &Symmetry::HomogeneousIsotropic, &mut rng, 1e-10).unwrap().pass);
        }
    }
}
