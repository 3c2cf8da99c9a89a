//! The space ℝ ⊔ ℝ_Bohr: points, translations, projections, the measures μ_{ρ,t},
//! and the image of the circular-curve projection.

use crate::bohr::{embed, haar_sample, BohrElement, BohrError, FreqModule, FreqTuple};
use crate::su2::GroupElement2;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "branch")]
pub enum RBarPoint {
    Real { x: f64 },
    Bohr { psi: BohrElement },
}

/// A strictly increasing bijection (0,1) → ℝ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RhoHomeo {
    #[default]
    Tan,
    Logit,
}

impl RhoHomeo {
    pub fn forward(self, t: f64) -> f64 {
        match self {
            RhoHomeo::Tan => (PI * (t - 0.5)).tan(),
            RhoHomeo::Logit => (t / (1.0 - t)).ln(),
        }
    }

    pub fn inverse(self, x: f64) -> f64 {
        match self {
            RhoHomeo::Tan => x.atan() / PI + 0.5,
            RhoHomeo::Logit => 1.0 / (1.0 + (-x).exp()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RBarMeasure {
    pub t: f64,
    #[serde(default)]
    pub rho: RhoHomeo,
    pub module: FreqModule,
}

impl RBarMeasure {
    pub fn new(t: f64, rho: RhoHomeo, module: FreqModule) -> Result<Self, BohrError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(BohrError::Invalid(format!("weight {t} outside [0,1]")));
        }
        module.validate()?;
        Ok(RBarMeasure { t, rho, module })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> RBarPoint {
        if rng.random::<f64>() < self.t {
            // (0,1) open: reject the endpoint 0
            let mut u = rng.random::<f64>();
            while u == 0.0 {
                u = rng.random::<f64>();
            }
            RBarPoint::Real { x: self.rho.forward(u) }
        } else {
            RBarPoint::Bohr { psi: haar_sample(&self.module, rng) }
        }
    }
}

/// 1 + exp(i2π(ρ⁻¹(x) − ½)), a point of the punctured circle centred at 1.
pub fn f_shifted(rho: RhoHomeo, x: f64) -> Complex64 {
    Complex64::new(1.0, 0.0) + Complex64::from_polar(1.0, TAU * (rho.inverse(x) - 0.5))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    Shifted(Complex64),
    Circle(Vec<Complex64>),
}

pub fn pi_l(point: &RBarPoint, l: &FreqTuple, rho: RhoHomeo) -> Result<Projection, BohrError> {
    match point {
        RBarPoint::Real { x } => Ok(Projection::Shifted(f_shifted(rho, *x))),
        RBarPoint::Bohr { psi } => Ok(Projection::Circle(psi.project(l)?)),
    }
}

pub fn translate(v: f64, point: &RBarPoint, m: &FreqModule) -> Result<RBarPoint, BohrError> {
    match point {
        RBarPoint::Real { x } => Ok(RBarPoint::Real { x: v + x }),
        RBarPoint::Bohr { psi } => Ok(RBarPoint::Bohr { psi: embed(v, m)?.add(psi) }),
    }
}

pub fn beta(c: f64, r: f64) -> f64 {
    (c * c * r * r + 0.25).sqrt()
}

/// exp2(−(τ/2)(2rc e₂ + e₃)) written through β_c.
pub fn pi_circ_real(c: f64, tau: f64, r: f64) -> GroupElement2 {
    let b = beta(c, r);
    let k = -(b * tau).sin() / b;
    GroupElement2::new((b * tau).cos(), [0.0, k * r * c, k * 0.5])
}

/// The H_{τ₂} element with circle coordinate z: Re z 𝟙 − Im z τ₂.
pub fn h_tau2(z: Complex64) -> GroupElement2 {
    GroupElement2::new(z.re, [0.0, -z.im, 0.0])
}

/// Frequency of value rτ over the module: a single generator with integer ratio.
fn circ_freq(m: &FreqModule, tau: f64, r: f64) -> Result<Vec<i64>, BohrError> {
    let vals = m.values.as_ref().ok_or(BohrError::NoValues)?;
    let target = r * tau;
    for (j, v) in vals.iter().enumerate() {
        let k = (target / v).round();
        if k != 0.0 && k.abs() <= 1e6 && (k * v - target).abs() <= 1e-12 * target.abs().max(1.0) {
            let mut f = vec![0; vals.len()];
            f[j] = k as i64;
            return Ok(f);
        }
    }
    Err(BohrError::OutOfSpan)
}

pub fn pi_circ(point: &RBarPoint, tau: f64, r: f64, m: &FreqModule) -> Result<GroupElement2, BohrError> {
    match point {
        RBarPoint::Real { x } => Ok(pi_circ_real(*x, tau, r)),
        RBarPoint::Bohr { psi } => Ok(h_tau2(psi.eval(&circ_freq(m, tau, r)?)?)),
    }
}

/// (sign(n)/r)·√(n²π²/τ² − ¼).
pub fn a_n(n: i64, tau: f64, r: f64) -> f64 {
    let nf = n as f64;
    nf.signum() / r * (nf * nf * PI * PI / (tau * tau) - 0.25).sqrt()
}

/// [π_{τ,r}(c)]₁₁ − cos(crτ).
pub fn f_gap(c: f64, tau: f64, r: f64) -> Complex64 {
    let b = beta(c, r);
    Complex64::new((b * tau).cos() - (c * r * tau).cos(), (b * tau).sin() / (2.0 * b))
}

/// Operator-norm distance to the nearest element of H_{τ₂}.
pub fn dist_to_h_tau2(g: &GroupElement2) -> f64 {
    let rad = g.a.hypot(g.b[1]);
    ((1.0 - rad).powi(2) + g.b[0].powi(2) + g.b[2].powi(2)).sqrt()
}

/// Endpoints of B_n.
pub fn b_interval(n: i64, tau: f64, r: f64) -> (f64, f64) {
    if n >= 1 {
        (a_n(2 * n, tau, r), a_n(2 * n + 2, tau, r))
    } else {
        (a_n(2 * n - 2, tau, r), a_n(2 * n, tau, r))
    }
}

/// Endpoints of A_n (open interval).
pub fn a_interval(n: i64, tau: f64, r: f64) -> (f64, f64) {
    match n {
        0 => (a_n(-1, tau, r), a_n(1, tau, r)),
        n if n >= 1 => (a_n(n, tau, r), a_n(n + 1, tau, r)),
        n => (a_n(n - 1, tau, r), a_n(n, tau, r)),
    }
}

pub const MERGE_SAMPLES: usize = 2000;

/// Largest sampled distance of π_{τ,r}(B_n) to H_{τ₂}; n = 0 gives NaN.
pub fn merge_bound(n: i64, tau: f64, r: f64, samples: usize) -> f64 {
    if n == 0 || samples < 2 {
        return f64::NAN;
    }
    let (lo, hi) = b_interval(n, tau, r);
    (0..samples)
        .map(|i| {
            let c = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
            dist_to_h_tau2(&pi_circ_real(c, tau, r))
        })
        .fold(0.0, f64::max)
}

/// One row of the image report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImageRow {
    pub n: i64,
    pub a_n: f64,
    pub dist_to_center: f64,
    pub merge_bound: f64,
}

pub fn image_table(tau: f64, r: f64, nmax: i64) -> Vec<ImageRow> {
    (1..=nmax)
        .map(|n| {
            let a = a_n(n, tau, r);
            ImageRow {
                n,
                a_n: a,
                dist_to_center: pi_circ_real(a, tau, r).dist_to_center(),
                merge_bound: merge_bound(n, tau, r, MERGE_SAMPLES),
            }
        })
        .collect()
}
