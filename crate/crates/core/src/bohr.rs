//! Finite truncations of the Bohr compactification of ℝ.
//!
//! A [`FreqModule`] fixes finitely many generator labels b₁,…,b_k; a frequency is an
//! integer vector over them. A [`BohrElement`] assigns a unit complex number to each
//! generator and extends to the lattice as a character.

use num_complex::Complex64;
use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::f64::consts::TAU;
use thiserror::Error;

/// Unit-circle tolerance for stored values.
pub const TOL_UNIT: f64 = 1e-12;

pub type Freq = Vec<i64>;
pub type FreqTuple = Vec<Freq>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BohrError {
    #[error("frequency is outside the span of the module")]
    OutOfSpan,
    #[error("module declares no real values for its generators")]
    NoValues,
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("root does not satisfy the power relation (residual {0:e})")]
    BadRoot(f64),
    #[error("value {0} is not on the unit circle")]
    NotUnit(Complex64),
    #[error("invalid module: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreqModule {
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

/// Values per generator, in module order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BohrElement {
    pub values: Vec<Complex64>,
}

impl FreqModule {
    pub fn new(labels: &[&str], values: Option<Vec<f64>>) -> Result<Self, BohrError> {
        let m = FreqModule { labels: labels.iter().map(|s| s.to_string()).collect(), values };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), BohrError> {
        let mut seen = std::collections::HashSet::new();
        if !self.labels.iter().all(|l| seen.insert(l)) {
            return Err(BohrError::Invalid("duplicate labels".into()));
        }
        if let Some(v) = &self.values {
            if v.len() != self.labels.len() {
                return Err(BohrError::Invalid("one value per label is required".into()));
            }
            if v.iter().any(|x| *x == 0.0 || !x.is_finite()) {
                return Err(BohrError::Invalid("generator values must be finite and nonzero".into()));
            }
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        self.labels.len()
    }

    pub fn index(&self, label: &str) -> Result<usize, BohrError> {
        self.labels.iter().position(|l| l == label).ok_or_else(|| BohrError::UnknownLabel(label.to_string()))
    }

    /// The unit frequency of one generator.
    pub fn unit(&self, idx: usize) -> Freq {
        let mut f = vec![0; self.rank()];
        f[idx] = 1;
        f
    }

    /// Real value Σ lⱼ value(bⱼ) of a frequency.
    pub fn real_value(&self, l: &Freq) -> Result<f64, BohrError> {
        let v = self.values.as_ref().ok_or(BohrError::NoValues)?;
        if l.len() != v.len() {
            return Err(BohrError::OutOfSpan);
        }
        Ok(l.iter().zip(v).map(|(k, x)| *k as f64 * x).sum())
    }
}

/// Integer rank of a list of integer vectors by fraction-free (Bareiss) elimination.
pub fn integer_rank(freqs: &[Freq]) -> usize {
    if freqs.is_empty() {
        return 0;
    }
    let cols = freqs[0].len();
    let mut a: Vec<Vec<i128>> = freqs.iter().map(|f| f.iter().map(|&x| x as i128).collect()).collect();
    let rows = a.len();
    let mut rank = 0;
    let mut prev: i128 = 1;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&r| a[r][c] != 0) else { continue };
        a.swap(rank, p);
        for r in rank + 1..rows {
            for k in c + 1..cols {
                a[r][k] = (a[rank][c] * a[r][k] - a[r][c] * a[rank][k]) / prev;
            }
            a[r][c] = 0;
        }
        prev = a[rank][c];
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

pub fn z_independent(freqs: &[Freq]) -> bool {
    let same_len = freqs.windows(2).all(|w| w[0].len() == w[1].len());
    same_len && integer_rank(freqs) == freqs.len()
}

/// The integer matrix N with lᵢ = Σⱼ Nᵢⱼ l′ⱼ, if every lᵢ is in the ℤ-span of L′.
pub fn leq_z(l: &FreqTuple, l2: &FreqTuple) -> Option<Vec<Vec<i64>>> {
    if !z_independent(l2) {
        return None;
    }
    let dim = l2.first().map_or(0, |f| f.len());
    let k = l2.len();
    let mut n = vec![];
    for target in l {
        if target.len() != dim {
            return None;
        }
        // augmented system: columns are the l′ⱼ, right-hand side lᵢ
        let mut a: Vec<Vec<Ratio<i128>>> = (0..dim)
            .map(|r| {
                let mut row: Vec<Ratio<i128>> = (0..k).map(|j| Ratio::from_integer(l2[j][r] as i128)).collect();
                row.push(Ratio::from_integer(target[r] as i128));
                row
            })
            .collect();
        let mut pivots = vec![];
        let mut row = 0;
        for c in 0..k {
            let Some(p) = (row..dim).find(|&r| a[r][c] != Ratio::from_integer(0)) else { continue };
            a.swap(row, p);
            let piv = a[row][c];
            for x in a[row].iter_mut() {
                *x /= piv;
            }
            for r in 0..dim {
                if r != row && a[r][c] != Ratio::from_integer(0) {
                    let f = a[r][c];
                    for cc in 0..=k {
                        let sub = f * a[row][cc];
                        a[r][cc] -= sub;
                    }
                }
            }
            pivots.push(c);
            row += 1;
        }
        // inconsistent rows
        if (row..dim).any(|r| a[r][k] != Ratio::from_integer(0)) {
            return None;
        }
        let mut coeffs = vec![0i64; k];
        for (r, &c) in pivots.iter().enumerate() {
            let x = a[r][k];
            if !x.is_integer() {
                return None;
            }
            coeffs[c] = i64::try_from(x.to_integer()).ok()?;
        }
        n.push(coeffs);
    }
    Some(n)
}

fn check_unit(z: Complex64) -> Result<(), BohrError> {
    if (z.norm() - 1.0).abs() > TOL_UNIT {
        return Err(BohrError::NotUnit(z));
    }
    Ok(())
}

/// z^k for an integer exponent (negative exponents use the conjugate of a unit value).
fn upow(z: Complex64, k: i64) -> Complex64 {
    let base = if k < 0 { z.conj() } else { z };
    let mut e = k.unsigned_abs();
    let (mut acc, mut b) = (Complex64::new(1.0, 0.0), base);
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        b *= b;
        e >>= 1;
    }
    acc
}

impl BohrElement {
    pub fn zero(m: &FreqModule) -> Self {
        BohrElement { values: vec![Complex64::new(1.0, 0.0); m.rank()] }
    }

    pub fn new(values: Vec<Complex64>) -> Result<Self, BohrError> {
        values.iter().try_for_each(|z| check_unit(*z))?;
        Ok(BohrElement { values })
    }

    /// ψ(χ_l) = Πⱼ ψ(bⱼ)^{lⱼ}.
    pub fn eval(&self, l: &Freq) -> Result<Complex64, BohrError> {
        if l.len() != self.values.len() {
            return Err(BohrError::OutOfSpan);
        }
        Ok(self.values.iter().zip(l).fold(Complex64::new(1.0, 0.0), |acc, (z, k)| acc * upow(*z, *k)))
    }

    pub fn add(&self, other: &BohrElement) -> BohrElement {
        BohrElement { values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect() }
    }

    pub fn inv(&self) -> BohrElement {
        BohrElement { values: self.values.iter().map(|z| z.conj()).collect() }
    }

    pub fn project(&self, l: &FreqTuple) -> Result<Vec<Complex64>, BohrError> {
        l.iter().map(|f| self.eval(f)).collect()
    }

    /// Overwrite the values of the named generators.
    pub fn modify(&self, m: &FreqModule, assignments: &[(String, Complex64)]) -> Result<BohrElement, BohrError> {
        let mut out = self.clone();
        for (label, z) in assignments {
            check_unit(*z)?;
            out.values[m.index(label)?] = *z;
        }
        Ok(out)
    }

    /// {label: [re, im]} in module order.
    pub fn to_json(&self, m: &FreqModule) -> Value {
        let mut map = Map::new();
        for (l, z) in m.labels.iter().zip(&self.values) {
            map.insert(l.clone(), serde_json::json!([z.re, z.im]));
        }
        Value::Object(map)
    }

    pub fn from_json(m: &FreqModule, v: &Value) -> Result<BohrElement, BohrError> {
        let obj = v.as_object().ok_or_else(|| BohrError::Invalid("element must be an object".into()))?;
        let mut out = BohrElement::zero(m);
        for (k, val) in obj {
            let idx = m.index(k)?;
            let pair: [f64; 2] = serde_json::from_value(val.clone()).map_err(|e| BohrError::Invalid(e.to_string()))?;
            let z = Complex64::new(pair[0], pair[1]);
            check_unit(z)?;
            out.values[idx] = z;
        }
        Ok(out)
    }
}

/// The canonical image of x ∈ ℝ: ψ(b) = exp(i·value(b)·x).
pub fn embed(x: f64, m: &FreqModule) -> Result<BohrElement, BohrError> {
    let v = m.values.as_ref().ok_or(BohrError::NoValues)?;
    Ok(BohrElement { values: v.iter().map(|b| Complex64::from_polar(1.0, b * x)).collect() })
}

/// Componentwise monomials Πⱼ sⱼ^{Nᵢⱼ}.
pub fn transition(n: &[Vec<i64>], s: &[Complex64]) -> Vec<Complex64> {
    n.iter().map(|row| row.iter().zip(s).fold(Complex64::new(1.0, 0.0), |acc, (k, z)| acc * upow(*z, *k))).collect()
}

/// Result of replacing generator b by b/q.
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub module: FreqModule,
    pub element: BohrElement,
    pub index: usize,
    pub q: i64,
}

impl Refinement {
    /// Old frequencies expressed over the refined generators.
    pub fn map_freq(&self, l: &Freq) -> Freq {
        let mut f = l.clone();
        f[self.index] *= self.q;
        f
    }
}

pub fn refine(m: &FreqModule, psi: &BohrElement, label: &str, q: i64, root: Complex64) -> Result<Refinement, BohrError> {
    if q < 1 {
        return Err(BohrError::Invalid("q must be positive".into()));
    }
    let idx = m.index(label)?;
    check_unit(root)?;
    let resid = (upow(root, q) - psi.values[idx]).norm();
    if resid > TOL_UNIT {
        return Err(BohrError::BadRoot(resid));
    }
    let mut module = m.clone();
    let mut element = psi.clone();
    if q != 1 {
        module.labels[idx] = format!("{label}/{q}");
        if let Some(v) = module.values.as_mut() {
            v[idx] /= q as f64;
        }
        element.values[idx] = root;
    }
    Ok(Refinement { module, element, index: idx, q })
}

/// Independent uniform unit-circle values per generator.
pub fn haar_sample<R: Rng + ?Sized>(m: &FreqModule, rng: &mut R) -> BohrElement {
    BohrElement { values: (0..m.rank()).map(|_| Complex64::from_polar(1.0, TAU * rng.random::<f64>())).collect() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest, Strategy};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Rank oracle over ℚ with floating elimination (exact for small integer entries).
    fn float_rank(v: &[Freq]) -> usize {
        let mut a: Vec<Vec<f64>> = v.iter().map(|f| f.iter().map(|x| *x as f64).collect()).collect();
        let cols = a.first().map_or(0, |r| r.len());
        let mut rank = 0;
        for col in 0..cols {
            let Some(p) = (rank..a.len()).max_by(|x, y| a[*x][col].abs().partial_cmp(&a[*y][col].abs()).unwrap()) else { break };
            if a[p][col].abs() < 1e-9 {
                continue;
            }
            a.swap(rank, p);
            for r in 0..a.len() {
                if r != rank {
                    let f = a[r][col] / a[rank][col];
                    for k in 0..cols {
                        a[r][k] -= f * a[rank][k];
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    #[test]
    fn independence_examples() {
        assert!(z_independent(&[vec![1, 0], vec![0, 1]]));
        assert!(!z_independent(&[vec![2, 0], vec![3, 0]]));
        assert!(z_independent(&[vec![1, 1]]));
    }

    #[test]
    fn leq_examples() {
        let l2 = vec![vec![1, 0], vec![0, 1]];
        assert_eq!(leq_z(&vec![vec![1, 1]], &l2), Some(vec![vec![1, 1]]));
        assert_eq!(leq_z(&l2, &l2), Some(vec![vec![1, 0], vec![0, 1]]));
        // span of 2b₁ does not contain b₁
        assert_eq!(leq_z(&vec![vec![1, 0]], &vec![vec![2, 0]]), None);
        assert_eq!(leq_z(&vec![vec![4, 0]], &vec![vec![2, 0]]), Some(vec![vec![2]]));
    }

    #[test]
    fn eval_examples() {
        let m = FreqModule::new(&["b1", "b2"], None).unwrap();
        assert_eq!(BohrElement::zero(&m).eval(&vec![3, -7]).unwrap(), c(1.0, 0.0));
        let psi = BohrElement::new(vec![c(0.0, 1.0), c(-1.0, 0.0)]).unwrap();
        assert_eq!(psi.eval(&vec![2, 0]).unwrap(), c(-1.0, 0.0));
        let l = vec![3, 5];
        assert_eq!(psi.eval(&vec![-3, -5]).unwrap(), psi.eval(&l).unwrap().conj());
        assert_eq!(psi.project(&vec![vec![1, 1]]).unwrap(), vec![c(0.0, -1.0)]);
        assert_eq!(psi.eval(&vec![1]), Err(BohrError::OutOfSpan));
    }

    #[test]
    fn embed_examples() {
        let m = FreqModule::new(&["a", "b"], Some(vec![1.0, 2f64.sqrt()])).unwrap();
        assert_eq!(embed(0.0, &m).unwrap(), BohrElement::zero(&m));
        let z = embed(TAU, &m).unwrap().eval(&vec![1, 0]).unwrap();
        assert!((z - c(1.0, 0.0)).norm() < 1e-15);
        let (x, y) = (0.37, -1.9);
        let l = vec![2, -1];
        let lhs = embed(x, &m).unwrap().eval(&l).unwrap() * embed(y, &m).unwrap().eval(&l).unwrap();
        assert!((lhs - embed(x + y, &m).unwrap().eval(&l).unwrap()).norm() < 1e-14);
        let proj = embed(x, &m).unwrap().project(&vec![vec![0, 1]]).unwrap()[0];
        assert!((proj - Complex64::from_polar(1.0, 2f64.sqrt() * x)).norm() < 1e-15);
        assert_eq!(embed(1.0, &FreqModule::new(&["a"], None).unwrap()), Err(BohrError::NoValues));
    }

    #[test]
    fn group_examples() {
        let m = FreqModule::new(&["a", "b", "c"], None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (x, y, z) = (haar_sample(&m, &mut rng), haar_sample(&m, &mut rng), haar_sample(&m, &mut rng));
        let zero = x.add(&x.inv());
        assert!(zero.values.iter().all(|v| (v - c(1.0, 0.0)).norm() < 1e-15));
        let l = x.add(&y).add(&z);
        let r = x.add(&y.add(&z));
        assert!(l.values.iter().zip(&r.values).all(|(a, b)| (a - b).norm() < 1e-15));
    }

    #[test]
    fn transition_examples() {
        let s = vec![c(0.6, 0.8), c(0.0, -1.0)];
        assert_eq!(transition(&[vec![1, 0], vec![0, 1]], &s), s);
        let t = transition(&[vec![1, 1]], &s);
        assert!((t[0] - s[0] * s[1]).norm() < 1e-16);
    }

    #[test]
    fn modify_examples() {
        let m = FreqModule::new(&["b1", "b2"], None).unwrap();
        let psi = BohrElement::zero(&m).modify(&m, &[("b1".into(), c(0.0, 1.0))]).unwrap();
        assert_eq!(psi.eval(&vec![1, 0]).unwrap(), c(0.0, 1.0));
        assert_eq!(psi.eval(&vec![0, 1]).unwrap(), c(1.0, 0.0));
        let a = psi.modify(&m, &[("b2".into(), c(-1.0, 0.0))]).unwrap().modify(&m, &[("b1".into(), c(0.6, 0.8))]).unwrap();
        let b = psi.modify(&m, &[("b1".into(), c(0.6, 0.8))]).unwrap().modify(&m, &[("b2".into(), c(-1.0, 0.0))]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.project(&vec![vec![1, 0]]).unwrap(), vec![c(0.6, 0.8)]);
        assert_eq!(psi.modify(&m, &[("zz".into(), c(1.0, 0.0))]), Err(BohrError::UnknownLabel("zz".into())));
    }

    #[test]
    fn refine_examples() {
        let m = FreqModule::new(&["b", "d"], Some(vec![2.0, 3.0])).unwrap();
        let psi = BohrElement::new(vec![c(-1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let r1 = refine(&m, &psi, "b", 1, c(-1.0, 0.0)).unwrap();
        assert_eq!((r1.module, r1.element), (m.clone(), psi.clone()));
        let r = refine(&m, &psi, "b", 2, c(0.0, 1.0)).unwrap();
        assert_eq!(r.module.labels[0], "b/2");
        assert_eq!(r.module.values.as_ref().unwrap()[0], 1.0);
        assert_eq!(r.element.eval(&vec![1, 0]).unwrap(), c(0.0, 1.0));
        assert_eq!(r.element.eval(&r.map_freq(&vec![1, 0])).unwrap(), c(-1.0, 0.0));
        for l in [vec![3, -2], vec![-1, 5]] {
            assert!((r.element.eval(&r.map_freq(&l)).unwrap() - psi.eval(&l).unwrap()).norm() < 1e-15);
        }
        assert!(matches!(refine(&m, &psi, "b", 2, c(1.0, 0.0)), Err(BohrError::BadRoot(_))));
    }

    #[test]
    fn haar_fixture_and_moments() {
        let m = FreqModule::new(&["a", "b"], None).unwrap();
        let first = haar_sample(&m, &mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(first, haar_sample(&m, &mut ChaCha8Rng::seed_from_u64(42)));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 100_000;
        let l = vec![vec![1, 1], vec![1, -1]];
        let mut acc = [c(0.0, 0.0); 2];
        for _ in 0..n {
            let p = haar_sample(&m, &mut rng).project(&l).unwrap();
            acc[0] += p[0] * p[1];
            acc[1] += p[0] * p[1].conj() * p[1].conj();
        }
        // each monomial has unit modulus, so its standard error is at most 1/√N
        for a in acc {
            assert!((a / n as f64).norm() < 3.0 * (2.0f64).sqrt() / (n as f64).sqrt());
        }
    }

    #[test]
    fn json_element_round_trip() {
        let m = FreqModule::new(&["x", "y"], Some(vec![1.0, 0.5])).unwrap();
        let psi = haar_sample(&m, &mut ChaCha8Rng::seed_from_u64(3));
        let v = psi.to_json(&m);
        let text = serde_json::to_string(&v).unwrap();
        let back = BohrElement::from_json(&m, &serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, psi);
    }

    fn arb_freqs(k: usize, dim: usize) -> impl Strategy<Value = Vec<Freq>> {
        proptest::collection::vec(proptest::collection::vec(-4i64..=4, dim), k)
    }

    proptest! {
        #[test]
        fn rank_matches_oracle(v in arb_freqs(3, 3)) {
            prop_assert_eq!(integer_rank(&v), float_rank(&v));
        }

        #[test]
        fn transition_consistency(l2 in arb_freqs(2, 3), n in proptest::collection::vec(proptest::collection::vec(-3i64..=3, 2), 1..3), seed in any::<u64>()) {
            if !z_independent(&l2) {
                return Ok(());
            }
            let l: FreqTuple = n.iter().map(|row| (0..3).map(|d| row[0] * l2[0][d] + row[1] * l2[1][d]).collect()).collect();
            let found = leq_z(&l, &l2).unwrap();
            prop_assert_eq!(&found, &n);
            let m = FreqModule::new(&["a", "b", "c"], None).unwrap();
            let psi = haar_sample(&m, &mut ChaCha8Rng::seed_from_u64(seed));
            let lhs = transition(&found, &psi.project(&l2).unwrap());
            let rhs = psi.project(&l).unwrap();
            for (a, b) in lhs.iter().zip(&rhs) {
                prop_assert!((a - b).norm() <= 1e-12);
            }
        }

        #[test]
        fn embed_is_a_homomorphism(x in -50.0..50.0f64, y in -50.0..50.0f64) {
            let m = FreqModule::new(&["a", "b"], Some(vec![1.0, 2f64.sqrt()])).unwrap();
            let lhs = embed(x, &m).unwrap().add(&embed(y, &m).unwrap());
            let rhs = embed(x + y, &m).unwrap();
            for (a, b) in lhs.values.iter().zip(&rhs.values) {
                prop_assert!((a - b).norm() <= 1e-12);
            }
        }
    }
}
