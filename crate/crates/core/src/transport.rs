//! Parallel transport in the trivialization ν_x = (x, 𝟙): closed forms along orbit
//! curves of invariant connections, and an RK4 oracle for arbitrary gauge fields.

use thiserror::Error;

use crate::conn::{eval_conn, to_gauge_field, GaugeField, InvariantConnection};
use crate::curve::{classify, Curve, CurveClass, SymElement, Symmetry};
use crate::su2::{self, exp2, GroupElement2};
use crate::vec3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransportError {
    #[error("no closed form: curve is not an orbit curve of a symmetry of the connection")]
    NotLAG,
    #[error("unsupported pair: {0}")]
    UnsupportedPair(String),
}

/// Holonomy along an orbit curve t ↦ exp(t·g)·x, t ∈ [0, l]:
/// h = exp2(l s) · exp2(−l ω((x,𝟙), (2s×x + v, s))).
///
/// The curve must be an orbit curve under `sym` (lines and circles are also accepted
/// for the isotropic family), and the connection must be invariant under exp(t·g).
pub fn transport_closed(w: &InvariantConnection, sym: &Symmetry, c: &Curve) -> Result<GroupElement2, TransportError> {
    let (x, g, l) = c.to_lag();
    let isotropic_basic = matches!(w, InvariantConnection::Isotropic { .. }) && !matches!(c, Curve::LieAlgGen { .. });
    if !(classify(sym, c) == CurveClass::Lag || isotropic_basic) || !w.invariant_under(&g) {
        return Err(TransportError::NotLAG);
    }
    let omega = eval_conn(w, x, &GroupElement2::IDENTITY, g.field(x), g.s);
    Ok(exp2(vec3::scale(l, g.s)).mul(&exp2(vec3::scale(-l, omega))))
}

/// RK4 integration of ṡ = −μ(A(γ)(γ̇))·s, s(0) = 𝟙, renormalized after every step.
pub fn transport_ode(a: &GaugeField, c: &Curve, steps: usize) -> GroupElement2 {
    let steps = steps.max(16);
    let end = c.domain_end();
    let h = end / steps as f64;
    let rhs = |t: f64, q: [f64; 4]| -> [f64; 4] {
        let w = a.eval(c.point(t), c.velocity(t));
        let p = su2::qmul_raw([0.0, w[0], w[1], w[2]], q);
        [-p[0], -p[1], -p[2], -p[3]]
    };
    let axpy = |q: [f64; 4], k: f64, d: [f64; 4]| [q[0] + k * d[0], q[1] + k * d[1], q[2] + k * d[2], q[3] + k * d[3]];
    let mut q = [1.0, 0.0, 0.0, 0.0];
    for i in 0..steps {
        let t = i as f64 * h;
        let k1 = rhs(t, q);
        let k2 = rhs(t + h / 2.0, axpy(q, h / 2.0, k1));
        let k3 = rhs(t + h / 2.0, axpy(q, h / 2.0, k2));
        let k4 = rhs(t + h, axpy(q, h, k3));
        let mut next = q;
        for j in 0..4 {
            next[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        q = GroupElement2::from_quat(next).quat();
    }
    GroupElement2::from_quat(q)
}

/// Closed form when available, otherwise RK4 with `steps` steps on the pulled-back field.
pub fn transport(w: &InvariantConnection, sym: &Symmetry, c: &Curve, steps: usize) -> Result<GroupElement2, TransportError> {
    match transport_closed(w, sym, c) {
        Ok(h) => Ok(h),
        Err(_) => {
            let field = to_gauge_field(w).map_err(|e| TransportError::UnsupportedPair(e.to_string()))?;
            Ok(transport_ode(&field, c, steps))
        }
    }
}

/// ‖h(φ_g∘c) − left·h(c)·right‖ with both holonomies from [`transport`].
pub fn equivariance_residual_with(
    w: &InvariantConnection,
    sym: &Symmetry,
    g: &SymElement,
    c: &Curve,
    left: &GroupElement2,
    right: &GroupElement2,
) -> Result<f64, TransportError> {
    let moved = g.apply_curve(c);
    let h_moved = transport(w, sym, &moved, 2048)?;
    let h = transport(w, sym, c, 2048)?;
    Ok(h_moved.dist(&left.mul(&h).mul(right)))
}

/// Residual of h(φ_g∘c) = σ h(c) σ⁻¹: Φ_g sends ν_x to ν_{gx}·σ, so the fiber factors are σ and σ⁻¹.
pub fn equivariance_residual(w: &InvariantConnection, sym: &Symmetry, g: &SymElement, c: &Curve) -> Result<f64, TransportError> {
    equivariance_residual_with(w, sym, g, c, &g.rot, &g.rot.inv())
}
