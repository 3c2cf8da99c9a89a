//! Supported curve families in ℝ³, the Euclidean-type flow that generates them, and
//! their classification under the four symmetry groups.
//!
//! Every curve is parameterized from 0: lines over [0, len], circles over [0, angle],
//! Lie-algebra-generated curves over [0, len]. Symmetry elements are pairs
//! (shift, rot) ∈ ℝ³ ⋊ SU(2) acting by y ↦ shift + ϱ(rot)y; the smaller groups are
//! subgroups of this one.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

use crate::su2::{self, exp2, GroupElement2, Rotation3};
use crate::vec3::{self, Vec3};

/// Geometric comparison tolerance.
pub const TOL_GEOM: f64 = 1e-10;
const TOL_ZERO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("parameter {t} outside [0, {max}]")]
    OutOfDomain { t: f64, max: f64 },
    #[error("unsupported pair of curves for this operation: {0}")]
    UnsupportedPair(String),
    #[error("generator lies in the stabilizer algebra of the base point")]
    StabilizerElement,
    #[error("invalid curve: {0}")]
    Invalid(String),
}

/// The four symmetry groups acting on ℝ³ × SU(2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum Symmetry {
    /// Translations v·(x,s) = (v + x, s).
    Homogeneous,
    /// Translations restricted to the plane spanned by an orthonormal pair.
    SemiHomogeneous { w1: Vec3, w2: Vec3 },
    /// Rotations σ·(x,s) = (ϱ(σ)x, σs).
    SphericallySymmetric,
    /// The Euclidean group (v,σ)·(x,s) = (v + ϱ(σ)x, σs).
    HomogeneousIsotropic,
}

/// A generator (v, s) ∈ ℝ³ × su(2) of the Euclidean-type Lie algebra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gen {
    pub v: Vec3,
    pub s: Vec3,
}

/// An element (shift, rot) of ℝ³ ⋊ SU(2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymElement {
    pub shift: Vec3,
    pub rot: GroupElement2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Curve {
    Linear { start: Vec3, dir: Vec3, len: f64 },
    Circular { center: Vec3, normal: Vec3, radius: Vec3, angle: f64 },
    LieAlgGen { base: Vec3, gen: Gen, len: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveClass {
    #[serde(rename = "LAG")]
    Lag,
    FreeNonSym,
    FreeSym,
    Unsupported,
}

/// Canonical geometric description used for equivalence and congruence decisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Canon {
    Line { start: Vec3, dir: Vec3, len: f64 },
    Arc { center: Vec3, normal: Vec3, radius: Vec3, angle: f64 },
    /// Helical orbit with nonzero radius and drift; `gen` has unit norm.
    Screw { base: Vec3, gen: Gen, len: f64 },
}

/// One piece of a free decomposition.
#[derive(Debug, Clone, PartialEq)]
pub enum Piece {
    /// The piece is φ_g applied to δ restricted to `sub`, traversed forward (`orient = 1`)
    /// or backward (`orient = -1`).
    Match { g: SymElement, orient: i8, sub: (f64, f64) },
    NoMatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// Breakpoints k₀ < … < kₙ in the parameter of the decomposed curve.
    pub breaks: Vec<f64>,
    pub pieces: Vec<Piece>,
}

// ---------------------------------------------------------------------------
// Symmetry groups and their elements

impl Symmetry {
    pub fn plane_normal(&self) -> Option<Vec3> {
        match self {
            Symmetry::SemiHomogeneous { w1, w2 } => Some(vec3::normalize(vec3::cross(*w1, *w2))),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), CurveError> {
        if let Symmetry::SemiHomogeneous { w1, w2 } = self {
            let ok = (vec3::norm(*w1) - 1.0).abs() <= 1e-12
                && (vec3::norm(*w2) - 1.0).abs() <= 1e-12
                && vec3::dot(*w1, *w2).abs() <= 1e-12;
            if !ok {
                return Err(CurveError::Invalid("plane basis is not orthonormal".into()));
            }
        }
        Ok(())
    }

    /// Whether the group element belongs to this symmetry group.
    pub fn contains(&self, g: &SymElement) -> bool {
        let central = g.rot.is_central(TOL_ZERO);
        match self {
            Symmetry::Homogeneous => central,
            Symmetry::SemiHomogeneous { .. } => {
                let n = self.plane_normal().unwrap();
                central && vec3::dot(g.shift, n).abs() <= TOL_GEOM
            }
            Symmetry::SphericallySymmetric => vec3::norm(g.shift) <= TOL_GEOM,
            Symmetry::HomogeneousIsotropic => true,
        }
    }

    /// Whether the generator lies in this group's Lie algebra.
    pub fn contains_gen(&self, g: &Gen) -> bool {
        match self {
            Symmetry::Homogeneous => vec3::norm(g.s) <= TOL_ZERO,
            Symmetry::SemiHomogeneous { .. } => {
                let n = self.plane_normal().unwrap();
                vec3::norm(g.s) <= TOL_ZERO && vec3::dot(g.v, n).abs() <= TOL_GEOM
            }
            Symmetry::SphericallySymmetric => vec3::norm(g.v) <= TOL_GEOM,
            Symmetry::HomogeneousIsotropic => true,
        }
    }

    /// A random group element (Gaussian shift of scale `spread`, Haar rotation).
    pub fn sample_element<R: Rng + ?Sized>(&self, rng: &mut R, spread: f64) -> SymElement {
        let mut gauss = || -> Vec3 {
            [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)]
        };
        let shift = vec3::scale(spread, gauss());
        match self {
            Symmetry::Homogeneous => SymElement::translation(shift),
            Symmetry::SemiHomogeneous { w1, w2 } => {
                SymElement::translation(vec3::add(vec3::scale(shift[0], *w1), vec3::scale(shift[1], *w2)))
            }
            Symmetry::SphericallySymmetric => SymElement::rotation(su2::haar2(rng)),
            Symmetry::HomogeneousIsotropic => SymElement { shift, rot: su2::haar2(rng) },
        }
    }
}

impl Gen {
    pub fn new(v: Vec3, s: Vec3) -> Self {
        Gen { v, s }
    }

    pub fn scale(&self, k: f64) -> Gen {
        Gen { v: vec3::scale(k, self.v), s: vec3::scale(k, self.s) }
    }

    pub fn norm(&self) -> f64 {
        (vec3::dot(self.v, self.v) + vec3::dot(self.s, self.s)).sqrt()
    }

    /// The vector field y ↦ 2 s×y + v generated on ℝ³.
    pub fn field(&self, y: Vec3) -> Vec3 {
        vec3::add(vec3::scale(2.0, vec3::cross(self.s, y)), self.v)
    }

    /// The group element exp(t·g) in closed Rodrigues form.
    pub fn exp(&self, t: f64) -> SymElement {
        let ns = vec3::norm(self.s);
        let w = 2.0 * ns;
        let shift = if ns <= TOL_ZERO * 1e-3 {
            vec3::scale(t, self.v)
        } else {
            let axis = vec3::scale(1.0 / ns, self.s);
            let par = vec3::scale(vec3::dot(self.v, axis), axis);
            let perp = vec3::sub(self.v, par);
            let wt = w * t;
            let (c1, c2) = if wt.abs() < 1e-5 {
                // series of sin(wt)/w and (1 − cos wt)/w
                (t * (1.0 - wt * wt / 6.0), t * (wt / 2.0 - wt * wt * wt / 24.0))
            } else {
                (wt.sin() / w, (1.0 - wt.cos()) / w)
            };
            vec3::add(
                vec3::add(vec3::scale(t, par), vec3::scale(c1, perp)),
                vec3::scale(c2, vec3::cross(axis, perp)),
            )
        };
        SymElement { shift, rot: exp2(vec3::scale(t, self.s)) }
    }
}

impl SymElement {
    pub const IDENTITY: SymElement = SymElement { shift: [0.0; 3], rot: GroupElement2::IDENTITY };

    pub fn translation(shift: Vec3) -> Self {
        SymElement { shift, rot: GroupElement2::IDENTITY }
    }

    pub fn rotation(rot: GroupElement2) -> Self {
        SymElement { shift: [0.0; 3], rot }
    }

    pub fn rotation_matrix(&self) -> Rotation3 {
        su2::covering(&self.rot)
    }

    pub fn apply_point(&self, y: Vec3) -> Vec3 {
        vec3::add(self.shift, su2::adjoint(&self.rot, y))
    }

    pub fn compose(&self, other: &SymElement) -> SymElement {
        SymElement { shift: self.apply_point(other.shift), rot: self.rot.mul(&other.rot) }
    }

    pub fn inverse(&self) -> SymElement {
        let rinv = self.rot.inv();
        SymElement { shift: vec3::neg(su2::adjoint(&rinv, self.shift)), rot: rinv }
    }

    /// Ad_g on the Lie algebra: (v, s) ↦ (σv − 2σ(s)×shift, σs).
    pub fn ad_gen(&self, g: &Gen) -> Gen {
        let sv = su2::adjoint(&self.rot, g.v);
        let ss = su2::adjoint(&self.rot, g.s);
        Gen { v: vec3::sub(sv, vec3::scale(2.0, vec3::cross(ss, self.shift))), s: ss }
    }

    /// The curve φ_g ∘ c.
    pub fn apply_curve(&self, c: &Curve) -> Curve {
        let rot = |v: Vec3| su2::adjoint(&self.rot, v);
        match c {
            Curve::Linear { start, dir, len } => {
                Curve::Linear { start: self.apply_point(*start), dir: rot(*dir), len: *len }
            }
            Curve::Circular { center, normal, radius, angle } => Curve::Circular {
                center: self.apply_point(*center),
                normal: rot(*normal),
                radius: rot(*radius),
                angle: *angle,
            },
            Curve::LieAlgGen { base, gen, len } => {
                Curve::LieAlgGen { base: self.apply_point(*base), gen: self.ad_gen(gen), len: *len }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Curves

impl Curve {
    pub fn linear(start: Vec3, dir: Vec3, len: f64) -> Curve {
        Curve::Linear { start, dir, len }
    }

    pub fn circular(center: Vec3, normal: Vec3, radius: Vec3, angle: f64) -> Curve {
        Curve::Circular { center, normal, radius, angle }
    }

    pub fn lie_alg_gen(base: Vec3, gen: Gen, len: f64) -> Curve {
        Curve::LieAlgGen { base, gen, len }
    }

    /// Right end of the parameter interval.
    pub fn domain_end(&self) -> f64 {
        match self {
            Curve::Linear { len, .. } | Curve::LieAlgGen { len, .. } => *len,
            Curve::Circular { angle, .. } => *angle,
        }
    }

    pub fn validate(&self) -> Result<(), CurveError> {
        let bad = |m: &str| Err(CurveError::Invalid(m.to_string()));
        match self {
            Curve::Linear { dir, len, .. } => {
                if (vec3::norm(*dir) - 1.0).abs() > 1e-12 {
                    return bad("line direction is not a unit vector");
                }
                if !(*len > 0.0 && len.is_finite()) {
                    return bad("line length must be positive");
                }
            }
            Curve::Circular { normal, radius, angle, .. } => {
                if (vec3::norm(*normal) - 1.0).abs() > 1e-12 {
                    return bad("circle normal is not a unit vector");
                }
                if vec3::dot(*normal, *radius).abs() > 1e-12 || vec3::norm(*radius) <= TOL_ZERO {
                    return bad("circle radius must be nonzero and orthogonal to the normal");
                }
                if !(*angle > 0.0 && *angle < TAU) {
                    return bad("circle angle must lie in (0, 2π)");
                }
            }
            Curve::LieAlgGen { base, gen, len } => {
                if !(*len > 0.0 && len.is_finite()) {
                    return bad("length must be positive");
                }
                let p = period(gen, *base)?;
                if *len >= p - 1e-12 {
                    return bad("length exceeds the period of the flow");
                }
            }
        }
        Ok(())
    }

    fn check_t(&self, t: f64) -> Result<(), CurveError> {
        let max = self.domain_end();
        if !(-1e-12..=max + 1e-12).contains(&t) {
            return Err(CurveError::OutOfDomain { t, max });
        }
        Ok(())
    }

    pub fn evaluate(&self, t: f64) -> Result<Vec3, CurveError> {
        self.check_t(t)?;
        Ok(self.point(t))
    }

    pub fn tangent(&self, t: f64) -> Result<Vec3, CurveError> {
        self.check_t(t)?;
        Ok(self.velocity(t))
    }

    /// Unchecked evaluation.
    pub fn point(&self, t: f64) -> Vec3 {
        match self {
            Curve::Linear { start, dir, .. } => vec3::add(*start, vec3::scale(t, *dir)),
            Curve::Circular { center, normal, radius, .. } => vec3::add(
                *center,
                vec3::add(vec3::scale(t.cos(), *radius), vec3::scale(t.sin(), vec3::cross(*normal, *radius))),
            ),
            Curve::LieAlgGen { base, gen, .. } => gen.exp(t).apply_point(*base),
        }
    }

    /// Unchecked derivative.
    pub fn velocity(&self, t: f64) -> Vec3 {
        match self {
            Curve::Linear { dir, .. } => *dir,
            Curve::Circular { normal, radius, .. } => {
                vec3::add(vec3::scale(-t.sin(), *radius), vec3::scale(t.cos(), vec3::cross(*normal, *radius)))
            }
            Curve::LieAlgGen { gen, .. } => gen.field(self.point(t)),
        }
    }

    pub fn start(&self) -> Vec3 {
        self.point(0.0)
    }

    pub fn end(&self) -> Vec3 {
        self.point(self.domain_end())
    }

    /// Euclidean length (all supported families have constant speed).
    pub fn length(&self) -> f64 {
        vec3::norm(self.velocity(0.0)) * self.domain_end()
    }

    pub fn invert(&self) -> Curve {
        match self {
            Curve::Linear { start, dir, len } => {
                Curve::Linear { start: vec3::add(*start, vec3::scale(*len, *dir)), dir: vec3::neg(*dir), len: *len }
            }
            Curve::Circular { center, normal, radius, angle } => {
                let r_end = vec3::add(
                    vec3::scale(angle.cos(), *radius),
                    vec3::scale(angle.sin(), vec3::cross(*normal, *radius)),
                );
                Curve::Circular { center: *center, normal: vec3::neg(*normal), radius: r_end, angle: *angle }
            }
            Curve::LieAlgGen { base, gen, len } => {
                Curve::LieAlgGen { base: gen.exp(*len).apply_point(*base), gen: gen.scale(-1.0), len: *len }
            }
        }
    }

    pub fn split(&self, t: f64) -> Result<(Curve, Curve), CurveError> {
        let max = self.domain_end();
        if !(t > 0.0 && t < max) {
            return Err(CurveError::OutOfDomain { t, max });
        }
        Ok(match self {
            Curve::Linear { start, dir, len } => (
                Curve::Linear { start: *start, dir: *dir, len: t },
                Curve::Linear { start: self.point(t), dir: *dir, len: len - t },
            ),
            Curve::Circular { center, normal, radius, angle } => {
                let r_mid = vec3::add(vec3::scale(t.cos(), *radius), vec3::scale(t.sin(), vec3::cross(*normal, *radius)));
                (
                    Curve::Circular { center: *center, normal: *normal, radius: *radius, angle: t },
                    Curve::Circular { center: *center, normal: *normal, radius: r_mid, angle: angle - t },
                )
            }
            Curve::LieAlgGen { base, gen, len } => (
                Curve::LieAlgGen { base: *base, gen: *gen, len: t },
                Curve::LieAlgGen { base: self.point(t), gen: *gen, len: len - t },
            ),
        })
    }

    /// The curve as an orbit t ↦ exp(t·g)·base over [0, len].
    pub fn to_lag(&self) -> (Vec3, Gen, f64) {
        match self {
            Curve::Linear { start, dir, len } => (*start, Gen::new(*dir, [0.0; 3]), *len),
            Curve::Circular { center, normal, radius, angle } => {
                let v = vec3::scale(-2.0, vec3::cross(*normal, *center));
                (vec3::add(*center, *radius), Gen::new(v, *normal), angle / 2.0)
            }
            Curve::LieAlgGen { base, gen, len } => (*base, *gen, *len),
        }
    }

    pub fn canonical(&self) -> Result<Canon, CurveError> {
        match self {
            Curve::Linear { start, dir, len } => Ok(Canon::Line { start: *start, dir: *dir, len: *len }),
            Curve::Circular { center, normal, radius, angle } => {
                Ok(Canon::Arc { center: *center, normal: *normal, radius: *radius, angle: *angle })
            }
            Curve::LieAlgGen { base, gen, len } => canon_of_orbit(*base, gen, *len),
        }
    }

    fn family(&self) -> u8 {
        match self {
            Curve::Linear { .. } => 0,
            Curve::Circular { .. } => 1,
            Curve::LieAlgGen { .. } => 2,
        }
    }
}

/// Geometric data of the orbit of `base` under exp(t·g).
struct ScrewData {
    axis: Vec3,
    /// Foot of the base point on the screw axis.
    foot: Vec3,
    /// base − foot.
    arm: Vec3,
    drift: f64,
}

fn screw_data(base: Vec3, g: &Gen) -> Option<ScrewData> {
    let ns = vec3::norm(g.s);
    if ns <= TOL_ZERO {
        return None;
    }
    let axis = vec3::scale(1.0 / ns, g.s);
    let drift = vec3::dot(g.v, axis);
    // a point on the axis: 2 s × p₀ = −v⊥
    let p0 = vec3::scale(1.0 / (2.0 * ns * ns), vec3::cross(g.s, g.v));
    let rel = vec3::sub(base, p0);
    let foot = vec3::add(p0, vec3::scale(vec3::dot(rel, axis), axis));
    Some(ScrewData { axis, foot, arm: vec3::sub(base, foot), drift })
}

fn canon_of_orbit(base: Vec3, g: &Gen, len: f64) -> Result<Canon, CurveError> {
    match screw_data(base, g) {
        None => {
            let nv = vec3::norm(g.v);
            if nv <= TOL_ZERO {
                return Err(CurveError::StabilizerElement);
            }
            Ok(Canon::Line { start: base, dir: vec3::scale(1.0 / nv, g.v), len: len * nv })
        }
        Some(sd) => {
            let ns = vec3::norm(g.s);
            if vec3::norm(sd.arm) <= TOL_ZERO {
                if sd.drift.abs() <= TOL_ZERO {
                    return Err(CurveError::StabilizerElement);
                }
                let dir = vec3::scale(sd.drift.signum(), sd.axis);
                return Ok(Canon::Line { start: base, dir, len: len * sd.drift.abs() });
            }
            if sd.drift.abs() <= TOL_ZERO {
                return Ok(Canon::Arc { center: sd.foot, normal: sd.axis, radius: sd.arm, angle: 2.0 * ns * len });
            }
            let k = g.norm();
            Ok(Canon::Screw { base, gen: g.scale(1.0 / k), len: len * k })
        }
    }
}

fn canon_close(a: &Canon, b: &Canon, tol: f64) -> bool {
    let v = |x: Vec3, y: Vec3| vec3::max_abs_diff(x, y) <= tol;
    match (a, b) {
        (Canon::Line { start: s1, dir: d1, len: l1 }, Canon::Line { start: s2, dir: d2, len: l2 }) => {
            v(*s1, *s2) && v(*d1, *d2) && (l1 - l2).abs() <= tol
        }
        (
            Canon::Arc { center: c1, normal: n1, radius: r1, angle: a1 },
            Canon::Arc { center: c2, normal: n2, radius: r2, angle: a2 },
        ) => v(*c1, *c2) && v(*n1, *n2) && v(*r1, *r2) && (a1 - a2).abs() <= tol,
        (Canon::Screw { base: b1, gen: g1, len: l1 }, Canon::Screw { base: b2, gen: g2, len: l2 }) => {
            v(*b1, *b2) && v(g1.v, g2.v) && v(g1.s, g2.s) && (l1 - l2).abs() <= tol
        }
        _ => false,
    }
}

/// Equality of canonical forms across all families (never errors on supported curves).
pub fn same_curve(c1: &Curve, c2: &Curve) -> bool {
    match (c1.canonical(), c2.canonical()) {
        (Ok(a), Ok(b)) => canon_close(&a, &b, TOL_GEOM),
        _ => false,
    }
}

/// Parametric equivalence of two curves.
///
/// Same-family pairs are decided by canonical parameters. Cross-family pairs are
/// limited to lines against translation orbits and circles against pure rotation
/// orbits, and are decided by sampling 64 points.
pub fn equivalent(c1: &Curve, c2: &Curve) -> Result<bool, CurveError> {
    if c1.family() == c2.family() {
        let (a, b) = (c1.canonical()?, c2.canonical()?);
        return Ok(canon_close(&a, &b, TOL_GEOM));
    }
    let (fixed, orbit) = match (c1, c2) {
        (Curve::LieAlgGen { .. }, _) => (c2, c1),
        (_, Curve::LieAlgGen { .. }) => (c1, c2),
        _ => return Err(CurveError::UnsupportedPair("line against circle".into())),
    };
    let oc = orbit.canonical()?;
    let compatible = matches!(
        (fixed, oc),
        (Curve::Linear { .. }, Canon::Line { .. }) | (Curve::Circular { .. }, Canon::Arc { .. })
    );
    if !compatible {
        return Err(CurveError::UnsupportedPair("orbit is not of the other curve's family".into()));
    }
    let (ef, eo) = (fixed.domain_end(), orbit.domain_end());
    Ok((0..64).all(|k| {
        let f = k as f64 / 63.0;
        vec3::max_abs_diff(fixed.point(f * ef), orbit.point(f * eo)) <= TOL_GEOM
    }))
}

/// Length of the parameter interval after which the orbit of `base` closes up.
pub fn period(gen: &Gen, base: Vec3) -> Result<f64, CurveError> {
    match screw_data(base, gen) {
        None => {
            if vec3::norm(gen.v) <= TOL_ZERO {
                Err(CurveError::StabilizerElement)
            } else {
                Ok(f64::INFINITY)
            }
        }
        Some(sd) => {
            if sd.drift.abs() > TOL_ZERO {
                Ok(f64::INFINITY)
            } else if vec3::norm(sd.arm) <= TOL_ZERO {
                Err(CurveError::StabilizerElement)
            } else {
                Ok(PI / vec3::norm(gen.s))
            }
        }
    }
}

/// Class of a curve under a symmetry group.
pub fn classify(sym: &Symmetry, c: &Curve) -> CurveClass {
    let canon = match c.canonical() {
        Ok(x) => x,
        Err(_) => return CurveClass::Unsupported,
    };
    match canon {
        Canon::Line { start, dir, .. } => match sym {
            Symmetry::Homogeneous | Symmetry::HomogeneousIsotropic => CurveClass::Lag,
            Symmetry::SemiHomogeneous { .. } => {
                let n = sym.plane_normal().unwrap();
                if vec3::dot(dir, n).abs() <= TOL_GEOM {
                    CurveClass::Lag
                } else {
                    CurveClass::FreeNonSym
                }
            }
            Symmetry::SphericallySymmetric => {
                if vec3::norm(vec3::cross(start, dir)) <= TOL_GEOM {
                    CurveClass::FreeSym
                } else {
                    CurveClass::FreeNonSym
                }
            }
        },
        Canon::Arc { center, normal, .. } => match sym {
            Symmetry::Homogeneous | Symmetry::SemiHomogeneous { .. } => CurveClass::FreeNonSym,
            Symmetry::HomogeneousIsotropic => CurveClass::Lag,
            Symmetry::SphericallySymmetric => {
                if vec3::norm(vec3::cross(center, normal)) <= TOL_GEOM {
                    CurveClass::Lag
                } else {
                    CurveClass::FreeNonSym
                }
            }
        },
        Canon::Screw { .. } => match sym {
            Symmetry::HomogeneousIsotropic => CurveClass::Lag,
            _ => CurveClass::Unsupported,
        },
    }
}

// ---------------------------------------------------------------------------
// Congruences

/// Frame-defining data: a point that group elements must map correctly, plus two directions.
fn frame_data(c: &Canon) -> (Vec3, Vec3, Vec3) {
    match *c {
        Canon::Line { start, dir, .. } => {
            // the foot of the perpendicular from the origin fixes the rotation for rotation-only groups
            let foot = vec3::reject(start, dir);
            (start, dir, foot)
        }
        Canon::Arc { center, normal, radius, .. } => (center, normal, radius),
        Canon::Screw { base, gen, .. } => {
            let sd = screw_data(base, &gen).expect("screw has rotation part");
            (sd.foot, sd.axis, sd.arm)
        }
    }
}

/// A group element g of `sym` with φ_g ∘ c1 equivalent to c2, when one exists.
pub fn find_symmetry(sym: &Symmetry, c1: &Curve, c2: &Curve) -> Option<SymElement> {
    let (k1, k2) = (c1.canonical().ok()?, c2.canonical().ok()?);
    if std::mem::discriminant(&k1) != std::mem::discriminant(&k2) {
        return None;
    }
    let (p1, d1, e1) = frame_data(&k1);
    let (p2, d2, e2) = frame_data(&k2);
    let candidate = match sym {
        Symmetry::Homogeneous | Symmetry::SemiHomogeneous { .. } => SymElement::translation(vec3::sub(p2, p1)),
        Symmetry::SphericallySymmetric => {
            let rot = match (k1, k2) {
                // rotation must carry the foot points and the directions
                (Canon::Line { .. }, Canon::Line { .. }) => Rotation3::from_frames(d1, e1, d2, e2),
                // rotation must carry center, normal and radius: use normal and radius
                _ => Rotation3::from_frames(d1, e1, d2, e2),
            };
            SymElement::rotation(rot.lift())
        }
        Symmetry::HomogeneousIsotropic => {
            let rot = Rotation3::from_frames(d1, e1, d2, e2).lift();
            let shift = vec3::sub(p2, su2::adjoint(&rot, p1));
            SymElement { shift, rot }
        }
    };
    if !sym.contains(&candidate) {
        return None;
    }
    let moved = candidate.apply_curve(c1);
    if same_curve(&moved, c2) {
        Some(candidate)
    } else {
        None
    }
}

fn intervals_overlap(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0.max(b.0) < a.1.min(b.1) - TOL_GEOM
}

/// Angular intervals on one oriented circle share an open arc.
fn arcs_overlap(start1: f64, len1: f64, start2: f64, len2: f64) -> bool {
    (-1..=1).any(|k| intervals_overlap((start1, start1 + len1), (start2 + k as f64 * TAU, start2 + k as f64 * TAU + len2)))
}

/// A symmetry element moving c1 onto a curve that shares an open segment with c2.
pub fn translate_overlap(sym: &Symmetry, c1: &Curve, c2: &Curve) -> Result<Option<SymElement>, CurveError> {
    let free = |c: &Curve| matches!(classify(sym, c), CurveClass::FreeNonSym | CurveClass::FreeSym);
    let homogeneous_lines = matches!(sym, Symmetry::Homogeneous)
        && matches!(c1.canonical(), Ok(Canon::Line { .. }))
        && matches!(c2.canonical(), Ok(Canon::Line { .. }));
    if !(homogeneous_lines || (free(c1) && free(c2))) {
        return Err(CurveError::UnsupportedPair("curves are not free segments".into()));
    }
    let (k1, k2) = (c1.canonical()?, c2.canonical()?);
    match (k1, k2) {
        (Canon::Line { start: x1, dir: v1, len: l1 }, Canon::Line { start: x2, dir: v2, len: l2 }) => {
            Ok(line_overlap(sym, (x1, v1, l1), (x2, v2, l2)))
        }
        (Canon::Arc { .. }, Canon::Arc { .. }) => Ok(arc_overlap(sym, c1, &k1, &k2)),
        _ => Ok(None),
    }
}

fn line_overlap(sym: &Symmetry, (x1, v1, l1): (Vec3, Vec3, f64), (x2, v2, l2): (Vec3, Vec3, f64)) -> Option<SymElement> {
    match sym {
        Symmetry::Homogeneous | Symmetry::SemiHomogeneous { .. } => {
            if vec3::norm(vec3::cross(v1, v2)) > TOL_GEOM {
                return None;
            }
            let eps = vec3::dot(v1, v2).signum();
            let n = sym.plane_normal();
            // place c1's start at parameter λ of c2's line; c1 then covers [λ, λ + εl1] there
            let lambda = match n {
                None => if eps > 0.0 { 0.0 } else { l2 },
                Some(n) => {
                    let nv = vec3::dot(n, v2);
                    if nv.abs() <= TOL_GEOM {
                        if vec3::dot(n, vec3::sub(x2, x1)).abs() > TOL_GEOM {
                            return None;
                        }
                        if eps > 0.0 { 0.0 } else { l2 }
                    } else {
                        -vec3::dot(n, vec3::sub(x2, x1)) / nv
                    }
                }
            };
            let covered = if eps > 0.0 { (lambda, lambda + l1) } else { (lambda - l1, lambda) };
            if !intervals_overlap(covered, (0.0, l2)) {
                return None;
            }
            let shift = vec3::sub(vec3::add(x2, vec3::scale(lambda, v2)), x1);
            Some(SymElement::translation(shift))
        }
        Symmetry::SphericallySymmetric => {
            let (p1, p2) = (vec3::reject(x1, v1), vec3::reject(x2, v2));
            if (vec3::norm(p1) - vec3::norm(p2)).abs() > TOL_GEOM {
                return None;
            }
            let (u1, u2) = (vec3::dot(x1, v1), vec3::dot(x2, v2));
            for eps in [1.0, -1.0] {
                // σ v1 = ε v2 maps the coordinate u along line 1 to εu along line 2
                let covered = if eps > 0.0 { (u1, u1 + l1) } else { (-u1 - l1, -u1) };
                if intervals_overlap(covered, (u2, u2 + l2)) {
                    let rot = Rotation3::from_frames(v1, p1, vec3::scale(eps, v2), p2);
                    if vec3::max_abs_diff(rot.apply(p1), p2) <= TOL_GEOM {
                        return Some(SymElement::rotation(rot.lift()));
                    }
                }
            }
            None
        }
        Symmetry::HomogeneousIsotropic => None,
    }
}

fn arc_overlap(sym: &Symmetry, c1: &Curve, k1: &Canon, k2: &Canon) -> Option<SymElement> {
    let (Canon::Arc { center: c1c, normal: n1, radius: r1, angle: _ }, Canon::Arc { center: c2c, normal: n2, radius: r2, angle: a2 }) =
        (*k1, *k2)
    else {
        return None;
    };
    if (vec3::norm(r1) - vec3::norm(r2)).abs() > TOL_GEOM {
        return None;
    }
    // orient c2 like c1 where possible
    let (n2o, r2o) = if vec3::dot(n1, n2) >= 0.0 {
        (n2, r2)
    } else {
        let end = vec3::add(vec3::scale(a2.cos(), r2), vec3::scale(a2.sin(), vec3::cross(n2, r2)));
        (vec3::neg(n2), end)
    };
    let candidate = match sym {
        Symmetry::Homogeneous | Symmetry::SemiHomogeneous { .. } => {
            if vec3::max_abs_diff(n1, n2o) > TOL_GEOM {
                return None;
            }
            SymElement::translation(vec3::sub(c2c, c1c))
        }
        Symmetry::SphericallySymmetric => {
            if (vec3::norm(c1c) - vec3::norm(c2c)).abs() > TOL_GEOM
                || (vec3::dot(c1c, n1) - vec3::dot(c2c, n2o)).abs() > TOL_GEOM
            {
                return None;
            }
            let rot = if vec3::norm(vec3::cross(c1c, n1)) <= TOL_GEOM {
                // free rotation about the normal: align the start radii
                Rotation3::from_frames(n1, r1, n2o, r2o)
            } else {
                Rotation3::from_frames(n1, c1c, n2o, c2c)
            };
            SymElement::rotation(rot.lift())
        }
        Symmetry::HomogeneousIsotropic => return None,
    };
    if !sym.contains(&candidate) {
        return None;
    }
    let moved = candidate.apply_curve(c1);
    let Ok(Canon::Arc { center, normal, radius, angle }) = moved.canonical() else {
        return None;
    };
    if vec3::max_abs_diff(center, c2c) > TOL_GEOM || vec3::max_abs_diff(normal, n2o) > TOL_GEOM {
        return None;
    }
    let rr = vec3::norm(r2o);
    let ang = |r: Vec3| {
        let x = vec3::dot(r, r2o) / (rr * rr);
        let y = vec3::dot(r, vec3::cross(n2o, r2o)) / (rr * rr);
        y.atan2(x)
    };
    let s1 = ang(radius);
    if arcs_overlap(s1, angle, 0.0, a2) {
        Some(candidate)
    } else {
        None
    }
}

/// Decomposition of a line γ into pieces that are symmetry images of sub-segments of δ.
///
/// Supported: translation groups with parallel lines (tiling anchored at the start of γ
/// for the full translation group), and the rotation group with γ, δ on one line
/// through the origin and δ on one side of it.
pub fn free_decompose(sym: &Symmetry, gamma: &Curve, delta: &Curve) -> Result<Decomposition, CurveError> {
    let (Ok(Canon::Line { start: xg, dir: vg, len: lg }), Ok(Canon::Line { start: xd, dir: vd, len: ld })) =
        (gamma.canonical(), delta.canonical())
    else {
        return Err(CurveError::UnsupportedPair("free decomposition needs two lines".into()));
    };
    let no_match = || Decomposition { breaks: vec![0.0, gamma.domain_end()], pieces: vec![Piece::NoMatch] };
    // γ parameter per unit length (LieAlgGen lines may run at non-unit speed)
    let speed = lg / gamma.domain_end();
    let mut breaks = vec![];
    let mut pieces = vec![];
    let eps = vec3::dot(vg, vd).signum();
    let parallel = vec3::norm(vec3::cross(vg, vd)) <= TOL_GEOM;
    match sym {
        Symmetry::Homogeneous => {
            if !parallel {
                return Ok(no_match());
            }
            let mut t = 0.0;
            breaks.push(0.0);
            while t < lg - TOL_GEOM {
                let step = ld.min(lg - t);
                let here = vec3::add(xg, vec3::scale(t, vg));
                let (anchor, sub) = if eps > 0.0 { (xd, (0.0, step)) } else { (vec3::add(xd, vec3::scale(ld, vd)), (ld - step, ld)) };
                pieces.push(Piece::Match { g: SymElement::translation(vec3::sub(here, anchor)), orient: eps as i8, sub });
                t += step;
                breaks.push(t.min(lg));
            }
        }
        Symmetry::SemiHomogeneous { .. } => {
            let n = sym.plane_normal().unwrap();
            let nd = vec3::dot(n, vd);
            if nd.abs() <= TOL_GEOM {
                return Err(CurveError::UnsupportedPair("segment lies in the translation plane".into()));
            }
            if !parallel {
                return Ok(no_match());
            }
            // δ's point u lands at γ-coordinate s0 + εu
            let s0 = vec3::dot(n, vec3::sub(xd, xg)) / vec3::dot(n, vg);
            let cov = if eps > 0.0 { (s0, s0 + ld) } else { (s0 - ld, s0) };
            let (ta, tb) = (cov.0.max(0.0), cov.1.min(lg));
            breaks.push(0.0);
            if tb - ta > TOL_GEOM {
                if ta > TOL_GEOM {
                    pieces.push(Piece::NoMatch);
                    breaks.push(ta);
                }
                let sub = if eps > 0.0 { (ta - s0, tb - s0) } else { (s0 - tb, s0 - ta) };
                let shift = vec3::sub(vec3::add(xg, vec3::scale(s0, vg)), xd);
                pieces.push(Piece::Match { g: SymElement::translation(shift), orient: eps as i8, sub });
                breaks.push(tb);
                if lg - tb > TOL_GEOM {
                    pieces.push(Piece::NoMatch);
                    breaks.push(lg);
                }
            } else {
                pieces.push(Piece::NoMatch);
                breaks.push(lg);
            }
        }
        Symmetry::SphericallySymmetric => {
            let through = |x: Vec3, v: Vec3| vec3::norm(vec3::cross(x, v)) <= TOL_GEOM;
            if !(through(xg, vg) && through(xd, vd) && parallel) {
                return Err(CurveError::UnsupportedPair("curves are not on one line through the origin".into()));
            }
            let ud = vec3::dot(xd, vd);
            let (lo, hi) = (ud, ud + ld);
            if lo < -TOL_GEOM && hi > TOL_GEOM {
                return Err(CurveError::UnsupportedPair("segment crosses the origin".into()));
            }
            // γ at parameter t sits at coordinate u(t) = ug + εt along vd
            let ug = vec3::dot(xg, vd);
            let mut cuts: Vec<f64> = vec![0.0, lg];
            for b in [lo, hi, -lo, -hi] {
                let t = eps * (b - ug);
                if t > TOL_GEOM && t < lg - TOL_GEOM {
                    cuts.push(t);
                }
            }
            cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            cuts.dedup_by(|a, b| (*a - *b).abs() <= TOL_GEOM);
            let flip = SymElement::rotation(su2::torus_flip(vd, vec3::any_orthogonal(vd)).unwrap());
            breaks.push(0.0);
            for w in cuts.windows(2) {
                let (ta, tb) = (w[0], w[1]);
                let um = ug + eps * 0.5 * (ta + tb);
                let (ua, ub) = (ug + eps * ta, ug + eps * tb);
                let piece = if um > lo && um < hi {
                    let sub = if eps > 0.0 { (ua - ud, ub - ud) } else { (ub - ud, ua - ud) };
                    Piece::Match { g: SymElement::IDENTITY, orient: eps as i8, sub }
                } else if -um > lo && -um < hi {
                    // the flipped copy runs along −vd: coordinate u ↦ −u
                    let sub = if eps < 0.0 { (-ua - ud, -ub - ud) } else { (-ub - ud, -ua - ud) };
                    Piece::Match { g: flip, orient: (-eps) as i8, sub }
                } else {
                    Piece::NoMatch
                };
                pieces.push(piece);
                breaks.push(tb);
            }
        }
        Symmetry::HomogeneousIsotropic => {
            return Err(CurveError::UnsupportedPair("lines are orbit curves for the Euclidean group".into()));
        }
    }
    let breaks = breaks.into_iter().map(|b| b / speed).collect();
    Ok(Decomposition { breaks, pieces })
}
