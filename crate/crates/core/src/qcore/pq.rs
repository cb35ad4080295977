//! The q-periodic bridge function P_q and classical Jacobi theta evaluators.
//!
//! P_q(tau) = -ln(q) C_q E_q(tau) theta_q(tau) is q-periodic in tau and very
//! close to 1 for q away from 0. Two independent evaluation paths:
//!   Fourier:  P_q(q^t) = 1 + 2 sum_{n>=1} (-1)^n qhat^{n^2} cos(2 pi n t)
//!   Gaussian: P_q(q^t) = -ln(q) C_q sum_{n in Z} q^{(t - 1/2 + n)^2 / 2}
//! with qhat = exp(2 pi^2 / ln q) the dual nome. The two are a Poisson pair.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{QError, Result};
use crate::qcore::{Branched, QContext};

const JACOBI_MAX_TERMS: usize = 20_000;

fn check_nome(p: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(QError::OutOfRange(format!(
            "theta nome must lie in [0, 1), got {p}"
        )));
    }
    Ok(p.ln())
}

/// Tail of theta_4: 2 sum_{n>=1} (-1)^n p^{n^2} cos(2 n z). Exposing the tail
/// separately keeps 1 - theta_4 free of cancellation when p is tiny.
fn theta4_tail(z: Complex64, p: f64) -> Result<Complex64> {
    let lnp = check_nome(p)?;
    let grow = 2.0 * z.im.abs();
    let peak = if lnp.is_finite() { grow / (-2.0 * lnp) } else { 0.0 };
    let mut sum = Complex64::new(0.0, 0.0);
    let mut sign = -1.0;
    for n in 1..=JACOBI_MAX_TERMS {
        let nf = n as f64;
        let log_bound = nf * nf * lnp + nf * grow;
        sum += 2.0 * sign * (nf * nf * lnp).exp() * (z * (2.0 * nf)).cos();
        sign = -sign;
        if nf >= peak && log_bound < -45.0 {
            return Ok(sum);
        }
    }
    Err(QError::TruncationFailure {
        what: "theta_4 series".into(),
        terms: JACOBI_MAX_TERMS,
    })
}

/// theta_4(z, p) = 1 + 2 sum_{n>=1} (-1)^n p^{n^2} cos(2 n z).
pub fn jacobi_theta4(z: Complex64, nome: f64) -> Result<Complex64> {
    Ok(Complex64::new(1.0, 0.0) + theta4_tail(z, nome)?)
}

/// theta_1(z, p) = 2 sum_{n>=0} (-1)^n p^{(n+1/2)^2} sin((2n+1) z).
pub fn jacobi_theta1(z: Complex64, nome: f64) -> Result<Complex64> {
    jacobi_theta1_impl(z, nome, false)
}

/// d/dz theta_1(z, p) = 2 sum_{n>=0} (-1)^n p^{(n+1/2)^2} (2n+1) cos((2n+1) z).
pub fn jacobi_theta1_prime(z: Complex64, nome: f64) -> Result<Complex64> {
    jacobi_theta1_impl(z, nome, true)
}

fn jacobi_theta1_impl(z: Complex64, p: f64, derivative: bool) -> Result<Complex64> {
    let lnp = check_nome(p)?;
    let grow = z.im.abs();
    let peak = if lnp.is_finite() { grow / (-lnp) } else { 0.0 };
    let mut sum = Complex64::new(0.0, 0.0);
    let mut sign = 1.0;
    for n in 0..JACOBI_MAX_TERMS {
        let nf = n as f64;
        let half = nf + 0.5;
        let odd = 2.0 * nf + 1.0;
        let mag = (half * half * lnp).exp();
        let term = if derivative {
            2.0 * sign * mag * odd * (z * odd).cos()
        } else {
            2.0 * sign * mag * (z * odd).sin()
        };
        sum += term;
        sign = -sign;
        let log_bound = half * half * lnp + odd * grow;
        if nf >= peak && log_bound < -45.0 {
            return Ok(sum);
        }
    }
    Err(QError::TruncationFailure {
        what: "theta_1 series".into(),
        terms: JACOBI_MAX_TERMS,
    })
}

/// P_q through the Fourier expansion in the dual nome.
pub fn p_q(tau: &Branched, ctx: &QContext) -> Result<Complex64> {
    Ok(Complex64::new(1.0, 0.0) + theta4_tail(PI * tau.ln() / ctx.ln_q, ctx.q_hat)?)
}

/// 1 - P_q(tau) computed without subtracting two nearby values. For q bounded
/// away from 0 this difference is of order qhat, far below the rounding floor
/// of 1 - p_q(tau).
pub fn one_minus_p_q(tau: &Branched, ctx: &QContext) -> Result<Complex64> {
    Ok(-theta4_tail(PI * tau.ln() / ctx.ln_q, ctx.q_hat)?)
}

/// P_q through the bilateral Gaussian sum, summed outward from the largest
/// term. Independent of the Fourier path.
pub fn p_q_gauss(tau: &Branched, ctx: &QContext) -> Result<Complex64> {
    let t = tau.ln() / ctx.ln_q;
    let center = (0.5 - t.re).round() as i64;
    let term = |n: i64| -> Complex64 {
        let w = t - 0.5 + n as f64;
        (0.5 * ctx.ln_q * w * w).exp()
    };
    let first = term(center);
    let floor = first.norm().max(1e-280) * ctx.eps * 1e-3;
    let mut sum = first;
    for dir in [1i64, -1] {
        let mut n = center + dir;
        loop {
            let t = term(n);
            sum += t;
            if t.norm() < floor {
                break;
            }
            n += dir;
            if (n - center).unsigned_abs() as usize > ctx.max_terms {
                return Err(QError::TruncationFailure {
                    what: "P_q Gaussian sum".into(),
                    terms: ctx.max_terms,
                });
            }
        }
    }
    Ok(-ctx.ln_q * ctx.c_q * sum)
}

/// Coefficient a~_n of the reciprocal expansion
/// 1/P_q(q^t) = (a~_0 + 2 sum_{n>=1} a~_n qhat^n cos(2 pi n t)) / (qhat^2; qhat^2)_inf^3,
/// a~_n = sum_{m>=0} (-1)^m qhat^{m(m+2n+1)}.
pub fn p_q_reciprocal_coeff(n: u32, ctx: &QContext) -> f64 {
    let lq = ctx.ln_q_hat;
    let mut sum = 0.0;
    let mut sign = 1.0;
    for m in 0..JACOBI_MAX_TERMS {
        let mf = m as f64;
        let term = (mf * (mf + 2.0 * n as f64 + 1.0) * lq).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-19 {
            break;
        }
    }
    sum
}
