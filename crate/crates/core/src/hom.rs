//! Invariant generalized homomorphisms on finite curve families: holonomy tables,
//! their consistency relations, modification along orbit curves and free segments,
//! and the type classification of equivariant maps.

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::bohr::{BohrElement, FreqModule, TOL_UNIT};
use crate::conn::InvariantConnection;
use crate::curve::{classify, find_symmetry, free_decompose, Canon, Curve, CurveClass, CurveError, Gen, Piece, SymElement, Symmetry};
use crate::su2::{exp2, GroupElement2, Rotation3};
use crate::transport::{transport_closed, TransportError};
use crate::vec3::{self, Vec3, E1};

/// Residual bound for the consistency relations of a table.
pub const TOL_TABLE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HomError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("stability is not verified for this base point and generator: {0}")]
    UnverifiedStability(String),
    #[error("target direction violates the equivariance constraint: {0}")]
    EquivarianceViolation(String),
    #[error("angle map is not invariant under the stabilizer: {0}")]
    StabilizerViolation(String),
    #[error("unsupported pair: {0}")]
    UnsupportedPair(String),
    #[error("background value on curve {0} does not commute with the modification")]
    BackgroundNotInTorus(usize),
    #[error("invalid input: {0}")]
    Invalid(String),
}

// ---------------------------------------------------------------------------
// Curve families

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySeed {
    pub curve: Curve,
    #[serde(default)]
    pub splits: Vec<f64>,
}

/// c[whole] = c[second] ∘ c[first].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub whole: usize,
    pub first: usize,
    pub second: usize,
}

/// Seeds closed under inversion and the declared splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveFamily {
    pub curves: Vec<Curve>,
    pub splits: Vec<Split>,
    pub inverses: Vec<(usize, usize)>,
}

impl CurveFamily {
    pub fn generate(seeds: &[FamilySeed]) -> Result<CurveFamily, HomError> {
        let mut fam = CurveFamily { curves: vec![], splits: vec![], inverses: vec![] };
        for seed in seeds {
            seed.curve.validate()?;
            let c = fam.push_pair(seed.curve.clone());
            for &t in &seed.splits {
                let (a, b) = seed.curve.split(t)?;
                let first = fam.push_pair(a);
                let second = fam.push_pair(b);
                fam.splits.push(Split { whole: c, first, second });
                // the inverse runs through inv(second) before inv(first)
                fam.splits.push(Split { whole: c + 1, first: second + 1, second: first + 1 });
            }
        }
        Ok(fam)
    }

    fn push_pair(&mut self, c: Curve) -> usize {
        let i = self.curves.len();
        let inv = c.invert();
        self.curves.push(c);
        self.curves.push(inv);
        self.inverses.push((i, i + 1));
        i
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn id(i: usize) -> String {
        format!("c{i}")
    }
}

// ---------------------------------------------------------------------------
// Tables

#[derive(Debug, Clone, PartialEq)]
pub struct GenHom {
    pub sym: Symmetry,
    pub family: CurveFamily,
    pub values: Vec<GroupElement2>,
}

/// Largest residual per consistency relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantReport {
    pub multiplicativity: f64,
    pub inversion: f64,
    pub symmetry: f64,
    pub related_pairs: usize,
}

impl InvariantReport {
    pub fn worst(&self) -> f64 {
        self.multiplicativity.max(self.inversion).max(self.symmetry)
    }
}

impl GenHom {
    pub fn trivial(sym: Symmetry, family: CurveFamily) -> GenHom {
        let values = vec![GroupElement2::IDENTITY; family.len()];
        GenHom { sym, family, values }
    }

    pub fn check_invariants(&self) -> InvariantReport {
        let v = &self.values;
        let multiplicativity =
            self.family.splits.iter().map(|s| v[s.whole].dist(&v[s.second].mul(&v[s.first]))).fold(0.0, f64::max);
        let inversion = self.family.inverses.iter().map(|&(a, b)| v[b].dist(&v[a].inv())).fold(0.0, f64::max);
        let mut symmetry: f64 = 0.0;
        let mut related_pairs = 0;
        let curves = &self.family.curves;
        for i in 0..curves.len() {
            for j in 0..curves.len() {
                if let Some(g) = find_symmetry(&self.sym, &curves[i], &curves[j]) {
                    related_pairs += 1;
                    symmetry = symmetry.max(v[j].dist(&g.rot.conj(&v[i])));
                }
            }
        }
        InvariantReport { multiplicativity, inversion, symmetry, related_pairs }
    }

    /// {curve-id: [a, b₁, b₂, b₃]}.
    pub fn table_json(&self) -> Value {
        let mut map = Map::new();
        for (i, g) in self.values.iter().enumerate() {
            map.insert(CurveFamily::id(i), serde_json::json!(g.quat()));
        }
        Value::Object(map)
    }

    pub fn from_table_json(sym: Symmetry, family: CurveFamily, table: &Value) -> Result<GenHom, HomError> {
        let obj = table.as_object().ok_or_else(|| HomError::Invalid("table must be an object".into()))?;
        let mut values = vec![None; family.len()];
        for (k, q) in obj {
            let idx = k
                .strip_prefix('c')
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|i| *i < family.len())
                .ok_or_else(|| HomError::Invalid(format!("unknown curve id {k}")))?;
            let q: [f64; 4] = serde_json::from_value(q.clone()).map_err(|e| HomError::Invalid(e.to_string()))?;
            values[idx] = Some(GroupElement2::from_quat(q));
        }
        let values = values.into_iter().collect::<Option<Vec<_>>>().ok_or_else(|| HomError::Invalid("missing curve ids".into()))?;
        Ok(GenHom { sym, family, values })
    }
}

/// Holonomies of an invariant connection on every curve of the family.
pub fn from_connection(w: &InvariantConnection, sym: &Symmetry, fam: &CurveFamily) -> Result<GenHom, HomError> {
    let values = fam.curves.iter().map(|c| transport_closed(w, sym, c)).collect::<Result<Vec<_>, _>>()?;
    Ok(GenHom { sym: sym.clone(), family: fam.clone(), values })
}

/// For the Euclidean group, the value on a line lies on the torus of its direction.
pub fn torus_constraint(h: &GenHom, id: usize) -> Result<bool, HomError> {
    if h.sym != Symmetry::HomogeneousIsotropic {
        return Err(HomError::Invalid("torus constraint applies to the Euclidean group".into()));
    }
    let c = h.family.curves.get(id).ok_or_else(|| HomError::Invalid(format!("no curve {id}")))?;
    let Canon::Line { dir, .. } = c.canonical()? else {
        return Err(HomError::Invalid("torus constraint applies to lines".into()));
    };
    Ok(vec3::norm(vec3::cross(h.values[id].b, dir)) <= TOL_TABLE)
}

// ---------------------------------------------------------------------------
// Types of equivariant maps

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum TypeTag {
    T1,
    T2 { axis: Vec3 },
    T3 { m: Vec3 },
    T4,
}

impl TypeTag {
    pub fn same_kind(&self, other: &TypeTag) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }

    /// Whether λ ↦ exp2(λ·s) is an equivariant map of this type.
    pub fn admits(&self, s: Vec3) -> bool {
        let tol = 1e-12 * vec3::norm(s).max(1.0);
        match self {
            TypeTag::T1 => vec3::norm(s) <= tol,
            TypeTag::T2 { axis } => vec3::norm(vec3::cross(s, *axis)) <= tol,
            TypeTag::T3 { m } => vec3::dot(s, *m).abs() <= tol,
            TypeTag::T4 => true,
        }
    }
}

/// Type of the equivariant-map space for the verified (symmetry, base point, generator) tables.
pub fn classify_type(sym: &Symmetry, x: Vec3, g: &Gen) -> Result<TypeTag, HomError> {
    let unverified = |why: &str| Err(HomError::UnverifiedStability(why.to_string()));
    if !sym.contains_gen(g) {
        return Err(HomError::Invalid("generator is not in the symmetry algebra".into()));
    }
    match sym {
        Symmetry::Homogeneous | Symmetry::SemiHomogeneous { .. } => {
            if vec3::norm(g.v) <= TOL_TABLE {
                return unverified("zero generator");
            }
            Ok(TypeTag::T4)
        }
        Symmetry::SphericallySymmetric => {
            let on_axis = x[0] > TOL_TABLE && x[1].abs() <= TOL_TABLE && x[2].abs() <= TOL_TABLE;
            if !on_axis {
                return unverified("base point must lie on the positive first axis");
            }
            let s = g.s;
            if s[2].abs() > TOL_TABLE * vec3::norm(s) || s[1].abs() <= TOL_TABLE {
                return unverified("generator outside the angle family");
            }
            // λ·g_α with α ∈ (0, π): choose the sign making the second component positive
            let sign = s[1].signum();
            let alpha = (sign * s[1]).atan2(sign * s[0]);
            if (alpha - std::f64::consts::FRAC_PI_2).abs() <= 1e-12 {
                Ok(TypeTag::T3 { m: E1 })
            } else {
                Ok(TypeTag::T4)
            }
        }
        Symmetry::HomogeneousIsotropic => {
            if vec3::norm(x) > TOL_TABLE {
                return unverified("base point must be the origin");
            }
            if vec3::norm(g.v) <= TOL_TABLE {
                return unverified("generator lies in the stabilizer");
            }
            let axis = vec3::normalize(g.v);
            if vec3::norm(g.s) <= TOL_TABLE {
                return Ok(TypeTag::T2 { axis });
            }
            let perp = vec3::reject(g.s, axis);
            if vec3::norm(perp) <= TOL_TABLE {
                return unverified("rotation part parallel to the translation part");
            }
            Ok(TypeTag::T3 { m: vec3::normalize(vec3::cross(axis, perp)) })
        }
    }
}

// ---------------------------------------------------------------------------
// Points of the type spaces

/// Canonical representatives of {0}, ℝ_Bohr, ℝ_Bohr ×̃ S¹, ℝ_Bohr ×̃ S².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum XgpPoint {
    T1,
    T2 { psi: BohrElement },
    T3 { psi: BohrElement, v: Option<Complex64> },
    T4 { psi: BohrElement, v: Option<Vec3> },
}

/// Raw (ψ, v) data before the quotient by (ψ, v) ~ (ψ⁻¹, −v).
#[derive(Debug, Clone, PartialEq)]
pub enum XgpRaw {
    None,
    Bohr(BohrElement),
    Circle(BohrElement, Complex64),
    Sphere(BohrElement, Vec3),
}

fn is_bohr_zero(psi: &BohrElement) -> bool {
    psi.values.iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() <= TOL_UNIT)
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.partial_cmp(y).unwrap_or(Ordering::Equal)).find(|o| *o != Ordering::Equal).unwrap_or(Ordering::Equal)
}

pub fn canonical_xgp(tag: &TypeTag, raw: XgpRaw) -> Result<XgpPoint, HomError> {
    match (tag, raw) {
        (TypeTag::T1, XgpRaw::None) => Ok(XgpPoint::T1),
        (TypeTag::T2 { .. }, XgpRaw::Bohr(psi)) => Ok(XgpPoint::T2 { psi }),
        (TypeTag::T3 { .. }, XgpRaw::Circle(psi, v)) => {
            if is_bohr_zero(&psi) {
                return Ok(XgpPoint::T3 { psi: BohrElement { values: vec![Complex64::new(1.0, 0.0); psi.values.len()] }, v: None });
            }
            let keep = lex(&[v.re, v.im], &[-v.re, -v.im]) != Ordering::Less;
            Ok(if keep { XgpPoint::T3 { psi, v: Some(v) } } else { XgpPoint::T3 { psi: psi.inv(), v: Some(-v) } })
        }
        (TypeTag::T4, XgpRaw::Sphere(psi, v)) => {
            if is_bohr_zero(&psi) {
                return Ok(XgpPoint::T4 { psi: BohrElement { values: vec![Complex64::new(1.0, 0.0); psi.values.len()] }, v: None });
            }
            let keep = lex(&v, &vec3::neg(v)) != Ordering::Less;
            Ok(if keep { XgpPoint::T4 { psi, v: Some(v) } } else { XgpPoint::T4 { psi: psi.inv(), v: Some(vec3::neg(v)) } })
        }
        _ => Err(HomError::Invalid("raw data does not match the type".into())),
    }
}

pub fn canonical_point(p: &XgpPoint) -> XgpPoint {
    let raw = match p.clone() {
        XgpPoint::T1 => return XgpPoint::T1,
        XgpPoint::T2 { psi } => return XgpPoint::T2 { psi },
        XgpPoint::T3 { psi, v } => match v {
            Some(v) => (TypeTag::T3 { m: E1 }, XgpRaw::Circle(psi, v)),
            None => return p.clone(),
        },
        XgpPoint::T4 { psi, v } => match v {
            Some(v) => (TypeTag::T4, XgpRaw::Sphere(psi, v)),
            None => return p.clone(),
        },
    };
    canonical_xgp(&raw.0, raw.1).expect("tag matches by construction")
}

// ---------------------------------------------------------------------------
// Modification

/// Replace the values on every curve congruent to an orbit segment of exp(λ·g)·x (or its
/// inverse) by the values of the equivariant map λ·g ↦ exp2(λ·s).
pub fn modify_lag(h: &GenHom, x: Vec3, g: &Gen, s: Vec3) -> Result<GenHom, HomError> {
    let tag = classify_type(&h.sym, x, g)?;
    if !tag.admits(s) {
        return Err(HomError::EquivarianceViolation(format!("{s:?} is not admitted by {tag:?}")));
    }
    let speed = vec3::norm(g.field(x));
    let value_at = |l: f64| g.exp(l).rot.mul(&exp2(vec3::scale(l, s)));
    let mut out = h.clone();
    for (i, c) in h.family.curves.iter().enumerate() {
        let l = c.length() / speed;
        let base = Curve::lie_alg_gen(x, *g, l);
        if let Some(e) = find_symmetry(&h.sym, &base, c) {
            out.values[i] = e.rot.conj(&value_at(l));
        } else if let Some(e) = find_symmetry(&h.sym, &base, &c.invert()) {
            out.values[i] = e.rot.conj(&value_at(l)).inv();
        }
    }
    Ok(out)
}

/// Multiply the values of curves built from symmetry images of the free segment δ by the
/// angle map λ ↦ exp2(λ·s) over the matched lengths.
///
/// `t0` must lie in the parameter domain of δ. The background values on affected curves
/// must commute with the modification.
pub fn modify_free(h: &GenHom, delta: &Curve, t0: f64, s: Vec3) -> Result<GenHom, HomError> {
    delta.validate()?;
    if !(0.0..=delta.domain_end()).contains(&t0) {
        return Err(HomError::Invalid(format!("anchor {t0} outside the segment")));
    }
    let class = classify(&h.sym, delta);
    let homogeneous_line = h.sym == Symmetry::Homogeneous && matches!(delta.canonical()?, Canon::Line { .. });
    match class {
        CurveClass::FreeNonSym | CurveClass::FreeSym => {}
        _ if homogeneous_line => {}
        _ => return Err(HomError::UnsupportedPair(format!("segment is classified {class:?}"))),
    }
    if h.sym == Symmetry::SphericallySymmetric {
        let Canon::Line { dir, .. } = delta.canonical()? else {
            return Err(HomError::UnsupportedPair("rotation group needs a radial segment".into()));
        };
        if class != CurveClass::FreeSym {
            return Err(HomError::UnsupportedPair("segment is not on a line through the origin".into()));
        }
        if vec3::norm(vec3::cross(s, dir)) > 1e-12 * vec3::norm(s).max(1.0) {
            return Err(HomError::StabilizerViolation("direction must be parallel to the segment axis".into()));
        }
    }
    // surfaces scope errors of δ itself
    free_decompose(&h.sym, delta, delta).map_err(HomError::from)?;
    let mut out = h.clone();
    for (i, c) in h.family.curves.iter().enumerate() {
        if !matches!(c.canonical(), Ok(Canon::Line { .. })) {
            continue;
        }
        // rotated copies of a radial δ lie on every line through the origin
        let pre = radial_alignment(&h.sym, c, delta);
        let moved = pre.apply_curve(delta);
        // curves outside the decomposition scope share no segment with any image of δ
        let Ok(dec) = free_decompose(&h.sym, c, &moved) else { continue };
        let mut factor = GroupElement2::IDENTITY;
        let mut touched = false;
        for p in &dec.pieces {
            if let Piece::Match { g, orient, sub } = p {
                let lam = f64::from(*orient) * (sub.1 - sub.0);
                let rot = g.rot.mul(&pre.rot);
                factor = rot.conj(&exp2(vec3::scale(lam, s))).mul(&factor);
                touched = true;
            }
        }
        if !touched {
            continue;
        }
        let bg = h.values[i];
        if !bg.commutes_with(&factor, TOL_TABLE) {
            return Err(HomError::BackgroundNotInTorus(i));
        }
        out.values[i] = bg.mul(&factor);
    }
    Ok(out)
}

/// A rotation carrying the radial line of δ onto the line of γ when both pass through the
/// origin; the identity otherwise.
fn radial_alignment(sym: &Symmetry, gamma: &Curve, delta: &Curve) -> SymElement {
    if *sym != Symmetry::SphericallySymmetric {
        return SymElement::IDENTITY;
    }
    let (Ok(Canon::Line { start: xg, dir: vg, .. }), Ok(Canon::Line { dir: vd, .. })) = (gamma.canonical(), delta.canonical())
    else {
        return SymElement::IDENTITY;
    };
    if vec3::norm(vec3::cross(xg, vg)) > 1e-9 || vec3::norm(vec3::cross(vg, vd)) <= 1e-12 {
        return SymElement::IDENTITY;
    }
    let axis = vec3::cross(vd, vg);
    SymElement::rotation(Rotation3::from_frames(vd, axis, vg, axis).lift())
}

// ---------------------------------------------------------------------------
// Bohr data of line values

/// z = a − i(b·v) for a value on the torus of the direction v.
pub fn line_character(value: &GroupElement2, dir: Vec3) -> Complex64 {
    Complex64::new(value.a, -vec3::dot(value.b, vec3::normalize(dir)))
}

/// The one-generator-per-line Bohr element read off from the table values on the given
/// line curves; the module values are the line lengths.
pub fn bohr_from_lines(h: &GenHom, ids: &[usize], dir: Vec3) -> Result<(FreqModule, BohrElement), HomError> {
    let mut labels = vec![];
    let mut values = vec![];
    let mut chars = vec![];
    for &i in ids {
        let c = h.family.curves.get(i).ok_or_else(|| HomError::Invalid(format!("no curve {i}")))?;
        let Canon::Line { dir: d, len, .. } = c.canonical()? else {
            return Err(HomError::Invalid(format!("curve {i} is not a line")));
        };
        if vec3::dot(d, vec3::normalize(dir)) < 1.0 - 1e-12 {
            return Err(HomError::Invalid(format!("curve {i} does not run along the direction")));
        }
        labels.push(CurveFamily::id(i));
        values.push(len);
        chars.push(line_character(&h.values[i], dir));
    }
    let module = FreqModule { labels, values: Some(values) };
    module.validate().map_err(|e| HomError::Invalid(e.to_string()))?;
    Ok((module, BohrElement { values: chars }))
}
