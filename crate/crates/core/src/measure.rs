//! Samplers for the reduced measures: Haar coordinates on free-segment indices with their
//! transition maps, per-factor draws on the orbit-curve sector, and a Fubini check.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

use crate::bohr::{haar_sample, FreqModule};
use crate::curve::{find_symmetry, free_decompose, translate_overlap, Canon, Curve, Gen, Piece, Symmetry};
use crate::hom::{canonical_xgp, classify_type, HomError, TypeTag, XgpPoint, XgpRaw};
use crate::stats::mean_stderr;
use crate::su2::{haar2, GroupElement2};
use crate::vec3::{self, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("invalid index: {0}")]
    InvalidIndex(String),
    #[error("unsupported pair: {0}")]
    UnsupportedPair(String),
    #[error("incompatible specifications: {0}")]
    IncompatibleSpecs(String),
    #[error(transparent)]
    Hom(#[from] HomError),
}

/// Finitely many mutually non-overlapping segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeIndex {
    pub sym: Symmetry,
    pub segments: Vec<Curve>,
}

impl FreeIndex {
    pub fn new(sym: Symmetry, segments: Vec<Curve>) -> Result<FreeIndex, MeasureError> {
        let idx = FreeIndex { sym, segments };
        idx.validate()?;
        Ok(idx)
    }

    pub fn validate(&self) -> Result<(), MeasureError> {
        let bad = |e: String| MeasureError::InvalidIndex(e);
        for c in &self.segments {
            c.validate().map_err(|e| bad(e.to_string()))?;
        }
        for i in 0..self.segments.len() {
            for j in 0..self.segments.len() {
                if i == j {
                    continue;
                }
                match translate_overlap(&self.sym, &self.segments[i], &self.segments[j]) {
                    Ok(None) => {}
                    Ok(Some(_)) => return Err(bad(format!("segments {i} and {j} overlap after a symmetry"))),
                    Err(e) => return Err(bad(e.to_string())),
                }
            }
        }
        Ok(())
    }
}

/// Independent Haar draws, one per segment.
pub fn free_sample<R: Rng + ?Sized>(idx: &FreeIndex, rng: &mut R) -> Vec<GroupElement2> {
    idx.segments.iter().map(|_| haar2(rng)).collect()
}

/// One factor (σ s σ⁻¹)^{±1} of a coarse coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionPiece {
    pub fine: usize,
    pub inverse: bool,
    pub rot: GroupElement2,
}

/// For each coarse segment, its pieces in travel order.
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub parts: Vec<Vec<TransitionPiece>>,
}

impl Refinement {
    pub fn identity(n: usize) -> Refinement {
        Refinement {
            parts: (0..n).map(|i| vec![TransitionPiece { fine: i, inverse: false, rot: GroupElement2::IDENTITY }]).collect(),
        }
    }

    /// Express every coarse segment through symmetry images of fine segments: either one
    /// congruent copy, or (translation group) a tiling by full collinear copies.
    pub fn derive(coarse: &FreeIndex, fine: &FreeIndex) -> Result<Refinement, MeasureError> {
        if coarse.sym != fine.sym {
            return Err(MeasureError::UnsupportedPair("indices belong to different symmetries".into()));
        }
        let sym = &coarse.sym;
        let mut parts = vec![];
        for (j, gamma) in coarse.segments.iter().enumerate() {
            parts.push(Self::single(sym, gamma, fine).or_else(|| Self::tiling(sym, gamma, fine)).ok_or_else(|| {
                MeasureError::UnsupportedPair(format!("coarse segment {j} is not built from fine segments"))
            })?);
        }
        Ok(Refinement { parts })
    }

    fn single(sym: &Symmetry, gamma: &Curve, fine: &FreeIndex) -> Option<Vec<TransitionPiece>> {
        fine.segments.iter().enumerate().find_map(|(i, d)| {
            if let Some(g) = find_symmetry(sym, d, gamma) {
                Some(vec![TransitionPiece { fine: i, inverse: false, rot: g.rot }])
            } else {
                find_symmetry(sym, d, &gamma.invert()).map(|g| vec![TransitionPiece { fine: i, inverse: true, rot: g.rot }])
            }
        })
    }

    fn tiling(sym: &Symmetry, gamma: &Curve, fine: &FreeIndex) -> Option<Vec<TransitionPiece>> {
        fine.segments.iter().enumerate().find_map(|(i, d)| {
            let Ok(Canon::Line { len, .. }) = d.canonical() else { return None };
            let dec = free_decompose(sym, gamma, d).ok()?;
            dec.pieces
                .iter()
                .map(|p| match p {
                    Piece::Match { g, orient, sub } if ((sub.1 - sub.0) - len).abs() <= 1e-10 => {
                        Some(TransitionPiece { fine: i, inverse: *orient < 0, rot: g.rot })
                    }
                    _ => None,
                })
                .collect()
        })
    }

    /// Each fine coordinate enters at most once overall, so the Haar pushforward is Haar.
    pub fn uses_each_fine_at_most_once(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.parts.iter().flatten().all(|p| seen.insert(p.fine))
    }
}

/// Coarse coordinates from fine ones: later pieces multiply on the left.
pub fn free_transition(r: &Refinement, s: &[GroupElement2]) -> Result<Vec<GroupElement2>, MeasureError> {
    r.parts
        .iter()
        .map(|pieces| {
            pieces.iter().try_fold(GroupElement2::IDENTITY, |acc, p| {
                let x = s.get(p.fine).ok_or_else(|| MeasureError::InvalidIndex(format!("no fine coordinate {}", p.fine)))?;
                let f = p.rot.conj(x);
                Ok(if p.inverse { f.inv() } else { f }.mul(&acc))
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Orbit-curve sector

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagFactor {
    pub x: Vec3,
    pub gen: Gen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagFactorSpec {
    pub sym: Symmetry,
    pub factors: Vec<LagFactor>,
}

impl LagFactorSpec {
    pub fn tags(&self) -> Result<Vec<TypeTag>, MeasureError> {
        self.factors.iter().map(|f| classify_type(&self.sym, f.x, &f.gen).map_err(MeasureError::from)).collect()
    }
}

fn one_generator() -> FreqModule {
    FreqModule { labels: vec!["b".into()], values: None }
}

/// One draw per factor: Bohr Haar, times circle or sphere Haar, mapped to the quotient.
pub fn sample_tags<R: Rng + ?Sized>(tags: &[TypeTag], rng: &mut R) -> Vec<XgpPoint> {
    let m = one_generator();
    tags.iter()
        .map(|t| {
            let raw = match t {
                TypeTag::T1 => XgpRaw::None,
                TypeTag::T2 { .. } => XgpRaw::Bohr(haar_sample(&m, rng)),
                TypeTag::T3 { .. } => {
                    let psi = haar_sample(&m, rng);
                    XgpRaw::Circle(psi, Complex64::from_polar(1.0, TAU * rng.random::<f64>()))
                }
                TypeTag::T4 => {
                    let psi = haar_sample(&m, rng);
                    let v = loop {
                        let g: Vec3 = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
                        if vec3::norm(g) > 1e-12 {
                            break vec3::normalize(g);
                        }
                    };
                    XgpRaw::Sphere(psi, v)
                }
            };
            canonical_xgp(t, raw).expect("raw data built for the tag")
        })
        .collect()
}

pub fn lag_sample<R: Rng + ?Sized>(spec: &LagFactorSpec, rng: &mut R) -> Result<Vec<XgpPoint>, MeasureError> {
    Ok(sample_tags(&spec.tags()?, rng))
}

/// Coordinates used for moment comparisons.
pub fn factor_moments(p: &XgpPoint) -> Vec<f64> {
    let z = |psi: &crate::bohr::BohrElement| psi.values[0];
    match p {
        XgpPoint::T1 => vec![],
        XgpPoint::T2 { psi } => {
            let w = z(psi);
            vec![w.re, w.im, (w * w).re, (w * w).im]
        }
        XgpPoint::T3 { psi, v } => {
            let w = z(psi);
            let v = v.unwrap_or_default();
            vec![w.re, w.im, v.re, v.im]
        }
        XgpPoint::T4 { psi, v } => {
            let w = z(psi);
            let v = v.unwrap_or_default();
            vec![w.re, w.im, v[0], v[1], v[2]]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChoiceReport {
    pub tags_a: Vec<TypeTag>,
    pub tags_b: Vec<TypeTag>,
    /// Largest two-sample z-score over all factor moments.
    pub max_z: f64,
    pub pass: bool,
}

/// Compare the factor types and sampled factor moments of two specifications.
pub fn choice_independence<R: Rng + ?Sized>(
    a: &LagFactorSpec,
    b: &LagFactorSpec,
    rng: &mut R,
    n: usize,
) -> Result<ChoiceReport, MeasureError> {
    let (ta, tb) = (a.tags()?, b.tags()?);
    if ta.len() != tb.len() || ta.iter().zip(&tb).any(|(x, y)| !x.same_kind(y)) {
        return Err(MeasureError::IncompatibleSpecs(format!("{ta:?} against {tb:?}")));
    }
    let draw = |tags: &[TypeTag], rng: &mut R| -> Vec<Vec<Vec<f64>>> {
        // [factor][moment][sample]
        let mut acc: Vec<Vec<Vec<f64>>> = vec![];
        for k in 0..n {
            for (f, p) in sample_tags(tags, rng).iter().enumerate() {
                let m = factor_moments(p);
                if k == 0 {
                    acc.push(vec![Vec::with_capacity(n); m.len()]);
                }
                for (j, x) in m.into_iter().enumerate() {
                    acc[f][j].push(x);
                }
            }
        }
        acc
    };
    let (ma, mb) = (draw(&ta, rng), draw(&tb, rng));
    let mut max_z: f64 = 0.0;
    for (fa, fb) in ma.iter().zip(&mb) {
        for (xa, xb) in fa.iter().zip(fb) {
            let ((m1, e1), (m2, e2)) = (mean_stderr(xa), mean_stderr(xb));
            let se = e1.hypot(e2);
            let d = (m1 - m2).abs();
            let z = if se > 0.0 { d / se } else if d == 0.0 { 0.0 } else { f64::INFINITY };
            max_z = max_z.max(z);
        }
    }
    Ok(ChoiceReport { tags_a: ta, tags_b: tb, max_z, pass: max_z <= 3.0 })
}

// ---------------------------------------------------------------------------
// Products

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FubiniReport {
    /// |E[f⊗g] − E[f]·E[g]| over the sample.
    pub residual: f64,
    pub stderr: f64,
}

impl FubiniReport {
    pub fn within(&self, k: f64) -> bool {
        self.residual <= k * self.stderr
    }
}

/// Monte Carlo check of ∫ f⊗g d(μ×ν) = ∫ f dμ · ∫ g dν from paired draws.
pub fn fubini_check_joint<X, Y, R, J>(f: impl Fn(&X) -> f64, g: impl Fn(&Y) -> f64, mut joint: J, rng: &mut R, n: usize) -> FubiniReport
where
    R: Rng + ?Sized,
    J: FnMut(&mut R) -> (X, Y),
{
    let (fs, gs): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|_| {
            let (x, y) = joint(rng);
            (f(&x), g(&y))
        })
        .unzip();
    let nf = n as f64;
    let (mf, mg) = (fs.iter().sum::<f64>() / nf, gs.iter().sum::<f64>() / nf);
    let prod = fs.iter().zip(&gs).map(|(a, b)| a * b).sum::<f64>() / nf;
    let centred: Vec<f64> = fs.iter().zip(&gs).map(|(a, b)| (a - mf) * (b - mg)).collect();
    let (_, stderr) = mean_stderr(&centred);
    FubiniReport { residual: (prod - mf * mg).abs(), stderr }
}

/// Fubini check for the product of two independent samplers.
pub fn fubini_check<X, Y, R, M, N>(f: impl Fn(&X) -> f64, g: impl Fn(&Y) -> f64, mut mu: M, mut nu: N, rng: &mut R, n: usize) -> FubiniReport
where
    R: Rng + ?Sized,
    M: FnMut(&mut R) -> X,
    N: FnMut(&mut R) -> Y,
{
    fubini_check_joint(f, g, |r: &mut R| (mu(r), nu(r)), rng, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec3::{E1, E2, E3};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    /// Matrix-coefficient oracle: entries of the fundamental representation.
    fn entries(g: &GroupElement2) -> [f64; 8] {
        let m = g.to_matrix();
        [m[0][0].re, m[0][0].im, m[0][1].re, m[0][1].im, m[1][0].re, m[1][0].im, m[1][1].re, m[1][1].im]
    }

    fn spherical_free() -> FreeIndex {
        // lines off the origin at distinct distances and an arc not centred on its axis
        FreeIndex::new(
            Symmetry::SphericallySymmetric,
            vec![
                Curve::linear([0.0, 1.0, 0.0], E1, 1.0),
                Curve::linear([0.0, 0.0, 2.0], E2, 0.5),
                Curve::circular([1.0, 0.0, 0.0], E3, [0.0, 0.5, 0.0], 1.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn free_sample_examples() {
        let idx = spherical_free();
        let a = free_sample(&idx, &mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a.len(), 3);
        assert_eq!(a, free_sample(&idx, &mut ChaCha8Rng::seed_from_u64(42)));
        let empty = FreeIndex::new(Symmetry::Homogeneous, vec![]).unwrap();
        assert!(free_sample(&empty, &mut ChaCha8Rng::seed_from_u64(1)).is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let tr: Vec<f64> = (0..n).map(|_| 2.0 * free_sample(&idx, &mut rng)[0].a).collect();
        let (m, se) = mean_stderr(&tr);
        assert!(m.abs() < 3.0 * se);
    }

    #[test]
    fn overlapping_index_is_rejected() {
        let r = FreeIndex::new(
            Symmetry::SphericallySymmetric,
            vec![Curve::linear([0.0, 1.0, 0.0], E1, 1.0), Curve::linear([0.0, 0.0, 1.0], E2, 1.0)],
        );
        assert!(matches!(r, Err(MeasureError::InvalidIndex(_))));
    }

    #[test]
    fn homogeneous_tiling_gives_square() {
        let fine = FreeIndex::new(Symmetry::Homogeneous, vec![Curve::linear([0.0; 3], E1, 1.0)]).unwrap();
        let coarse = FreeIndex { sym: Symmetry::Homogeneous, segments: vec![Curve::linear([3.0, 1.0, 0.0], E1, 2.0)] };
        let r = Refinement::derive(&coarse, &fine).unwrap();
        assert!(!r.uses_each_fine_at_most_once());
        let s = haar2(&mut ChaCha8Rng::seed_from_u64(3));
        let out = free_transition(&r, &[s]).unwrap();
        assert!(out[0].dist(&s.mul(&s)) < 1e-15);
        let back = Refinement::derive(&FreeIndex { sym: Symmetry::Homogeneous, segments: vec![coarse.segments[0].invert()] }, &fine).unwrap();
        let inv = free_transition(&back, &[s]).unwrap();
        assert!(inv[0].dist(&s.mul(&s).inv()) < 1e-15);
    }

    #[test]
    fn identity_refinement() {
        let idx = spherical_free();
        let s = free_sample(&idx, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(free_transition(&Refinement::identity(3), &s).unwrap(), s);
        let derived = Refinement::derive(&idx, &idx).unwrap();
        let t = free_transition(&derived, &s).unwrap();
        for (a, b) in t.iter().zip(&s) {
            assert!(a.dist(b) < 1e-12);
        }
    }

    fn rotated_coarse(idx: &FreeIndex, rng: &mut ChaCha8Rng) -> (FreeIndex, Vec<GroupElement2>) {
        let g1 = Symmetry::SphericallySymmetric.sample_element(rng, 1.0);
        let g2 = Symmetry::SphericallySymmetric.sample_element(rng, 1.0);
        let coarse = FreeIndex {
            sym: Symmetry::SphericallySymmetric,
            segments: vec![g1.apply_curve(&idx.segments[2]), g2.apply_curve(&idx.segments[0]).invert()],
        };
        (coarse, vec![g1.rot, g2.rot])
    }

    #[test]
    fn rotated_refinement_uses_conjugation() {
        let idx = spherical_free();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (coarse, rots) = rotated_coarse(&idx, &mut rng);
        let r = Refinement::derive(&coarse, &idx).unwrap();
        assert!(r.uses_each_fine_at_most_once());
        let s = free_sample(&idx, &mut rng);
        let t = free_transition(&r, &s).unwrap();
        assert!(t[0].dist(&rots[0].conj(&s[2])) < 1e-10);
        assert!(t[1].dist(&rots[1].conj(&s[0]).inv()) < 1e-10);
    }

    #[test]
    fn pushforward_moments_vanish() {
        let idx = spherical_free();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let (coarse, _) = rotated_coarse(&idx, &mut rng);
        let r = Refinement::derive(&coarse, &idx).unwrap();
        let n = 100_000;
        let mut cols: Vec<Vec<f64>> = vec![vec![]; 16 + 64];
        for _ in 0..n {
            let t = free_transition(&r, &free_sample(&idx, &mut rng)).unwrap();
            let (e0, e1) = (entries(&t[0]), entries(&t[1]));
            for k in 0..8 {
                cols[k].push(e0[k]);
                cols[8 + k].push(e1[k]);
                for l in 0..8 {
                    cols[16 + 8 * k + l].push(e0[k] * e1[l]);
                }
            }
        }
        // allow the expected handful of 3σ excursions among 80 moments
        let excursions = cols.iter().filter(|c| {
            let (m, se) = mean_stderr(c);
            m.abs() > 3.0 * se
        });
        assert!(excursions.count() <= 2);
    }

    #[test]
    fn square_map_is_not_haar() {
        // E[Re tr(s²)] = −1 under Haar
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let v: Vec<f64> = (0..100_000).map(|_| {
            let s = haar2(&mut rng);
            2.0 * s.mul(&s).a
        }).collect();
        let (m, se) = mean_stderr(&v);
        assert!((m + 1.0).abs() < 3.0 * se);
    }

    #[test]
    fn lag_sample_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let pts = sample_tags(&[TypeTag::T1, TypeTag::T4], &mut rng);
        assert_eq!(pts[0], XgpPoint::T1);
        assert_eq!(pts, sample_tags(&[TypeTag::T1, TypeTag::T4], &mut ChaCha8Rng::seed_from_u64(42)));
        // circle coordinate of the representative is uniform on the kept half
        let n = 20_000;
        let bins = 10;
        let mut counts = vec![0usize; bins];
        for _ in 0..n {
            let XgpPoint::T3 { v: Some(v), .. } = &sample_tags(&[TypeTag::T3 { m: E3 }], &mut rng)[0] else { panic!() };
            let ang = v.arg();
            assert!((-FRAC_PI_2..=FRAC_PI_2).contains(&ang));
            let k = (((ang + FRAC_PI_2) / PI) * bins as f64).floor().min(bins as f64 - 1.0) as usize;
            counts[k] += 1;
        }
        let e = n as f64 / bins as f64;
        let chi2: f64 = counts.iter().map(|c| (*c as f64 - e).powi(2) / e).sum();
        // 1% critical value with 9 degrees of freedom
        assert!(chi2 < 21.666, "chi2 {chi2}");
    }

    #[test]
    fn quotient_is_well_defined() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let m = one_generator();
        for _ in 0..1000 {
            let psi = haar_sample(&m, &mut rng);
            let v = vec3::normalize([rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5]);
            let a = canonical_xgp(&TypeTag::T4, XgpRaw::Sphere(psi.clone(), v)).unwrap();
            let b = canonical_xgp(&TypeTag::T4, XgpRaw::Sphere(psi.inv(), vec3::neg(v))).unwrap();
            assert_eq!(a, b);
        }
    }

    fn iso_spec(v: Vec3) -> LagFactorSpec {
        LagFactorSpec { sym: Symmetry::HomogeneousIsotropic, factors: vec![LagFactor { x: [0.0; 3], gen: Gen::new(v, [0.0; 3]) }] }
    }

    #[test]
    fn choice_independence_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let r = choice_independence(&iso_spec(E1), &iso_spec(E2), &mut rng, 20_000).unwrap();
        assert!(matches!(r.tags_a[0], TypeTag::T2 { .. }) && matches!(r.tags_b[0], TypeTag::T2 { .. }));
        assert!(r.pass, "{r:?}");
        assert!(choice_independence(&iso_spec(E1), &iso_spec(E1), &mut rng, 5_000).unwrap().pass);
        let t3 = LagFactorSpec { sym: Symmetry::HomogeneousIsotropic, factors: vec![LagFactor { x: [0.0; 3], gen: Gen::new(E1, E2) }] };
        assert!(matches!(choice_independence(&iso_spec(E1), &t3, &mut rng, 10), Err(MeasureError::IncompatibleSpecs(_))));
    }

    #[test]
    fn fubini_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let circle = |r: &mut ChaCha8Rng| Complex64::from_polar(1.0, TAU * r.random::<f64>());
        let ones = fubini_check(|_: &Complex64| 1.0, |_: &Complex64| 1.0, circle, circle, &mut rng, 1000);
        assert_eq!(ones.residual, 0.0);
        let indep = fubini_check(|z: &Complex64| z.re, |z: &Complex64| z.re, circle, circle, &mut rng, 100_000);
        assert!(indep.within(3.0), "{indep:?}");
        let corr = fubini_check_joint(|z: &Complex64| z.re, |z: &Complex64| z.re, |r: &mut ChaCha8Rng| { let z = circle(r); (z, z) }, &mut rng, 100_000);
        assert!(!corr.within(3.0));
    }
}
