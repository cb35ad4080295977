//! Base layer: evaluation context, branched complex carrier, q-Pochhammer
//! symbols, theta functions, the Gaussian kernel E_q, the bridge function P_q,
//! Jacobi theta series, and the bank of cross-checkable identities.

mod branched;
pub mod identities;
mod poch;
mod pq;
pub mod report;
mod theta;

pub use branched::Branched;
pub use identities::{identity_eval, IdentityId};
pub use poch::{ln_qpoch_inf, qpoch, qpoch_fin, qpoch_inf, qpoch_inf_many};
pub use pq::{
    jacobi_theta1, jacobi_theta1_prime, jacobi_theta4, one_minus_p_q, p_q, p_q_gauss,
    p_q_reciprocal_coeff,
};
pub use report::{Cx, ParamPoint, VerificationReport};
pub use theta::{
    e_q, e_q_ln, theta_q, theta_q_ln, theta_q_logderiv, theta_q_logderiv_prime, theta_q_series,
};

use num_complex::Complex64;

use crate::error::{QError, Result};

/// Shared evaluation context for a fixed base `q` in (0, 1).
///
/// Carries the derived constants used throughout: `ln_q`, the dual base
/// `q_hat = exp(2 pi^2 / ln q)`, the kernel normalization
/// `c_q = 1 / sqrt(-2 pi ln q)`, plus cached infinite products.
#[derive(Debug, Clone)]
pub struct QContext {
    pub q: f64,
    pub ln_q: f64,
    pub q_hat: f64,
    pub c_q: f64,
    /// Relative tail tolerance for series, products, and quadrature refinement.
    pub eps: f64,
    /// Hard budget for any single series, product, or grid expansion.
    pub max_terms: usize,
    /// Cached (q; q)_inf.
    pub(crate) qq_inf: f64,
    /// Cached ln of the dual base, `ln q_hat = 2 pi^2 / ln q` (negative).
    pub(crate) ln_q_hat: f64,
    /// Cached (q_hat^2; q_hat^2)_inf.
    pub(crate) qh2_inf: f64,
}

impl QContext {
    /// Context with default tolerances (`eps = 1e-12`, `max_terms = 10_000`).
    pub fn new(q: f64) -> Result<Self> {
        Self::with(q, 1e-12, 10_000)
    }

    pub fn with(q: f64, eps: f64, max_terms: usize) -> Result<Self> {
        if !q.is_finite() || !eps.is_finite() {
            return Err(QError::NonFinite("q or eps".into()));
        }
        if q <= 0.0 || q >= 1.0 {
            return Err(QError::OutOfRange(format!("q = {q} not in (0, 1)")));
        }
        if eps <= 0.0 {
            return Err(QError::OutOfRange(format!("eps = {eps} must be positive")));
        }
        if max_terms < 64 {
            return Err(QError::OutOfRange(format!(
                "max_terms = {max_terms} must be at least 64"
            )));
        }
        let ln_q = q.ln();
        let ln_q_hat = 2.0 * std::f64::consts::PI * std::f64::consts::PI / ln_q;
        let q_hat = ln_q_hat.exp();
        let c_q = 1.0 / (-2.0 * std::f64::consts::PI * ln_q).sqrt();
        let qq_inf = real_poch_inf(q, q, eps, max_terms)?;
        let qh2 = q_hat * q_hat;
        let qh2_inf = if qh2 < f64::MIN_POSITIVE {
            1.0
        } else {
            real_poch_inf(qh2, qh2, eps, max_terms)?
        };
        Ok(QContext {
            q,
            ln_q,
            q_hat,
            c_q,
            eps,
            max_terms,
            qq_inf,
            ln_q_hat,
            qh2_inf,
        })
    }

    /// q^k for integer k, computed through the log to avoid powi drift.
    pub(crate) fn q_pow(&self, k: i64) -> f64 {
        (k as f64 * self.ln_q).exp()
    }

    /// q^{n(n-1)/2} for integer n.
    pub(crate) fn q_pow_binom2(&self, n: i64) -> f64 {
        (binom2(n) * self.ln_q).exp()
    }

    /// Cached (q; q)_inf.
    pub fn q_factorial_inf(&self) -> f64 {
        self.qq_inf
    }
}

/// Stopping rule for series whose terms are not monotone near their peak:
/// stop only after several consecutive terms fall below eps times the
/// largest term seen so far.
pub(crate) struct TailRule {
    max_seen: f64,
    below: u32,
}

impl TailRule {
    const RUN: u32 = 5;

    pub(crate) fn new() -> Self {
        TailRule {
            max_seen: 0.0,
            below: 0,
        }
    }

    /// Record one term's magnitude; true once the tail criterion is met.
    /// The comparison is inclusive so an all-zero tail (terms cancel exactly)
    /// still terminates.
    pub(crate) fn absorb(&mut self, norm: f64, eps: f64) -> bool {
        if norm > self.max_seen {
            self.max_seen = norm;
        }
        if norm <= eps * self.max_seen {
            self.below += 1;
        } else {
            self.below = 0;
        }
        self.below >= Self::RUN
    }
}

/// Constructor mirroring the context record: validates and derives constants.
pub fn make_context(q: f64, eps: f64, max_terms: usize) -> Result<QContext> {
    QContext::with(q, eps, max_terms)
}

/// (a; p)_inf for real 0 <= a < 1, 0 < p < 1. Used for cached constants.
fn real_poch_inf(a: f64, p: f64, eps: f64, max_terms: usize) -> Result<f64> {
    let mut prod = 1.0;
    let mut ap = a;
    for _ in 0..max_terms {
        prod *= 1.0 - ap;
        ap *= p;
        if ap < eps * 1e-2 {
            // First-order tail of sum ln(1 - a p^n).
            return Ok(prod * (-ap / (1.0 - p)).exp());
        }
    }
    Err(QError::TruncationFailure {
        what: "real q-Pochhammer product".into(),
        terms: max_terms,
    })
}

/// Binomial coefficient C(n, 2) = n(n-1)/2 for any integer n.
pub(crate) fn binom2(n: i64) -> f64 {
    // Exact in f64 for |n| well below 2^26.
    0.5 * (n as f64) * ((n - 1) as f64)
}

/// Complex division that stays exact-width when |den| leaves the range where
/// the operator form works. `num / den` divides by den.norm_sqr(), which
/// overflows to infinity once |den| passes about 1.3e154 and then returns a
/// silent zero for quotients that are perfectly representable; theta values
/// reach that scale long before their reciprocals underflow.
pub(crate) fn cdiv(num: Complex64, den: Complex64) -> Complex64 {
    let ns = den.norm_sqr();
    if ns.is_finite() && ns >= f64::MIN_POSITIVE {
        return num / den;
    }
    let m = den.norm();
    if m == 0.0 || !m.is_finite() {
        return num / den;
    }
    (num / m) * (den.conj() / m)
}
