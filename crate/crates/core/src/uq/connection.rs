//! Connection to z = infinity. Each kind carries a q-periodic multiplier in
//! front of the two solutions at infinity; every multiplier is implemented
//! in two independent forms (one on the base q, one on the dual base) so
//! they can certify each other. The confluent corollary covers parameter
//! ratios on q^Z, where the generic two-term formula degenerates.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{QError, Result};
use crate::laplace::TransformKind;
use crate::qcore::{
    e_q, jacobi_theta1, jacobi_theta1_prime, p_q, qpoch_fin, qpoch_inf, theta_q,
    theta_q_logderiv, Branched, QContext, TailRule,
};
use crate::quad;
use crate::series::{self, psi_q, PhiParams};

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Bilateral sum over n of `term(n)`, paired outward from n = 0.
fn bilateral_sum(
    term: impl Fn(i64) -> Result<Complex64>,
    ctx: &QContext,
) -> Result<Complex64> {
    let mut acc = term(0)?;
    let mut tail = TailRule::new();
    for n in 1..=200i64 {
        let t = term(n)? + term(-n)?;
        acc += t;
        if tail.absorb(t.norm(), ctx.eps) {
            return Ok(acc);
        }
    }
    Err(QError::TruncationFailure {
        what: "bilateral multiplier sum".into(),
        terms: 200,
    })
}

/// sin(pi (2 n pi i + ln a) / ln q), the denominator shared by the
/// dual-base multiplier sums, guarded against parameter moduli on q^Z rays.
fn dual_sine(n: i64, lna: Complex64, ctx: &QContext) -> Result<Complex64> {
    let w = PI * (Complex64::new(0.0, 2.0 * PI * n as f64) + lna) / ctx.ln_q;
    let s = w.sin();
    if s.norm() < 1e-12 * w.im.abs().exp().max(1.0) {
        return Err(QError::PoleAtParameter(
            "parameter modulus on a q-power ray of the multiplier".into(),
        ));
    }
    Ok(s)
}

fn q_hat_pow_nsq(n: i64, ctx: &QContext) -> f64 {
    (ctx.ln_q_hat * (n * n) as f64).exp()
}

fn sign(n: i64) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Multiplier of the Gaussian kind, dual-base sum form.
pub(super) fn pk_e(a: &Branched, z: &Branched, ctx: &QContext) -> Result<Complex64> {
    let lna = a.ln();
    let az_ln = lna + z.ln();
    let sum = bilateral_sum(
        |n| {
            let phase = (Complex64::new(0.0, -2.0 * PI * n as f64 / ctx.ln_q) * az_ln).exp();
            Ok(sign(n) * q_hat_pow_nsq(n, ctx) * phase / dual_sine(n, lna, ctx)?)
        },
        ctx,
    )?;
    let pre = -PI * e_q(a, ctx)? * theta_q(&a.rotated(PI), ctx)?
        / (ctx.qq_inf.powi(3) * (ctx.ln_q / 8.0).exp() * ctx.ln_q);
    Ok(pre * sum)
}

/// The same multiplier with the prefactor written through the odd dual
/// theta function instead of the kernel-and-theta product.
pub fn pk_e_via_theta1(a: &Branched, z: &Branched, ctx: &QContext) -> Result<Complex64> {
    let alpha = a.ln() / ctx.ln_q;
    let zeta = z.ln() / ctx.ln_q;
    let sum = bilateral_sum(
        |n| {
            let num = (-Complex64::new(0.0, 2.0 * PI * n as f64) * (alpha + zeta)).exp();
            let den = (PI * alpha + Complex64::new(0.0, n as f64 * ctx.ln_q_hat)).sin();
            if den.norm() < 1e-12 {
                return Err(QError::PoleAtParameter(
                    "parameter modulus on a q-power ray of the multiplier".into(),
                ));
            }
            Ok(sign(n) * q_hat_pow_nsq(n, ctx) * num / den)
        },
        ctx,
    )?;
    let root = (-2.0 * PI.powi(3) / ctx.ln_q.powi(3)).sqrt();
    let pre = root * jacobi_theta1(PI * alpha, ctx.q_hat)?
        / ((ctx.ln_q / 8.0).exp() * ctx.qq_inf.powi(3));
    Ok(pre * sum)
}

/// Multiplier of the reciprocal-theta kind, log-derivative form.
pub(super) fn pk_theta(a: &Branched, z: &Branched, ctx: &QContext) -> Result<Complex64> {
    let lna = a.ln();
    let lnz = z.ln();
    let apow = (lna * (lna + lnz) / ctx.ln_q).exp();
    let minus_a = a.rotated(PI);
    let minus_az = a.mul(z).rotated(PI);
    let minus_z = z.rotated(PI);
    let th_z = theta_q(&minus_z, ctx)?;
    if th_z.norm() < 1e-250 {
        return Err(QError::PoleAtParameter(
            "z on the q-power lattice pins the multiplier pole".into(),
        ));
    }
    let bracket = (lnz / ctx.ln_q - theta_q_logderiv(&minus_a, ctx)?
        + theta_q_logderiv(&minus_az, ctx)?)
        / a.value();
    Ok(apow * theta_q(&minus_az, ctx)? * theta_q(&minus_a, ctx)? * bracket
        / (th_z * ctx.qq_inf.powi(3)))
}

/// The same multiplier through odd dual theta functions.
pub fn pk_theta_via_theta1(a: &Branched, z: &Branched, ctx: &QContext) -> Result<Complex64> {
    let alpha = a.ln() / ctx.ln_q;
    let zeta = z.ln() / ctx.ln_q;
    let t_a = jacobi_theta1(PI * alpha, ctx.q_hat)?;
    let t_az = jacobi_theta1(PI * (alpha + zeta), ctx.q_hat)?;
    let t_z = jacobi_theta1(PI * zeta, ctx.q_hat)?;
    if t_z.norm() < 1e-12 {
        return Err(QError::PoleAtParameter(
            "dual theta zero at the z-exponent".into(),
        ));
    }
    if t_a.norm() < 1e-250 || t_az.norm() < 1e-250 {
        return Err(QError::PoleAtParameter(
            "dual theta zero at the parameter exponent".into(),
        ));
    }
    let bracket = jacobi_theta1_prime(PI * alpha, ctx.q_hat)? / t_a
        - jacobi_theta1_prime(PI * (alpha + zeta), ctx.q_hat)? / t_az;
    let root = (-2.0 * PI.powi(3) / ctx.ln_q.powi(3)).sqrt();
    Ok(root * t_a * t_az * bracket / ((ctx.ln_q / 8.0).exp() * ctx.qq_inf.powi(3) * t_z))
}

/// The same multiplier once more, as a pure partial-fraction dual sum;
/// needs |arg z| < 2 pi.
pub fn pk_theta_via_partial_fractions(
    a: &Branched,
    z: &Branched,
    ctx: &QContext,
) -> Result<Complex64> {
    if z.arg().abs() >= 2.0 * PI {
        return Err(QError::ConstraintViolation(
            "partial-fraction multiplier sum needs |arg z| < 2 pi".into(),
        ));
    }
    let lna = a.ln();
    let lnz = z.ln();
    let sum = bilateral_sum(
        |n| {
            let phase = (Complex64::new(0.0, -2.0 * PI * n as f64 / ctx.ln_q) * lnz).exp();
            let s = dual_sine(n, lna, ctx)?;
            Ok(phase / (s * s))
        },
        ctx,
    )?;
    let th = theta_q(&a.rotated(PI), ctx)?;
    let apow = (lna * lna / ctx.ln_q).exp();
    let pre = PI * PI * th * th * apow
        / (a.value() * ctx.qq_inf.powi(6) * ctx.ln_q * ctx.ln_q);
    Ok(pre * sum)
}

/// Multiplier of the discrete kind: a cross-ratio of the q-periodic bridge
/// function over the summation lattice.
pub(super) fn pk_lambda(
    a: &Branched,
    z: &Branched,
    lambda: Complex64,
    ctx: &QContext,
) -> Result<Complex64> {
    let lam = Branched::from_complex(lambda)?;
    let az = a.mul(z);
    let num = p_q(&a.mul(&lam), ctx)? * p_q(&lam.div(&az), ctx)?;
    let den = p_q(&lam, ctx)? * p_q(&lam.div(z), ctx)?;
    if den.norm() < 1e-290 {
        return Err(QError::PoleAtParameter(
            "bridge-function zero under the discrete multiplier".into(),
        ));
    }
    Ok(num / den)
}

/// Discrete multiplier as the residue sum the contour path produces; kept
/// as an independent certificate of `pk_lambda`.
pub fn pk_lambda_via_residue_sum(
    a: &Branched,
    z: &Branched,
    lambda: Complex64,
    ctx: &QContext,
) -> Result<Complex64> {
    let lna = a.ln();
    let lam = Branched::from_complex(lambda)?;
    let lam_ln = lam.ln();
    let az = a.mul(z);
    let sum = bilateral_sum(
        |n| {
            let phase = (Complex64::new(0.0, -2.0 * PI * n as f64 / ctx.ln_q) * lam_ln).exp();
            Ok(phase / dual_sine(n, lna, ctx)?)
        },
        ctx,
    )?;
    let ratio = p_q(&lam.div(&az), ctx)? / p_q(&lam.div(z), ctx)?;
    let pre = -PI * e_q(a, ctx)? * theta_q(&a.rotated(PI), ctx)?
        / (ctx.qq_inf.powi(3) * (ctx.ln_q / 8.0).exp() * ctx.ln_q);
    Ok(pre * ratio * sum)
}

/// q-periodic multiplier of the kind, in its most stable form.
pub fn pk_multiplier(
    kind: TransformKind,
    a: &Branched,
    z: &Branched,
    ctx: &QContext,
) -> Result<Complex64> {
    match kind {
        TransformKind::E => pk_e(a, z, ctx),
        TransformKind::Theta => pk_theta(a, z, ctx),
        TransformKind::Discrete(lambda) => pk_lambda(a, z, lambda, ctx),
    }
}

/// Two-term connection formula: the family re-expanded in the solutions at
/// infinity. Needs the parameter ratio off q^Z and |q/(abz)| < 1.
pub fn connection_infinity(
    kind: TransformKind,
    a: Complex64,
    b: Complex64,
    z: &Branched,
    ctx: &QContext,
) -> Result<Complex64> {
    if a.norm() == 0.0 || b.norm() == 0.0 {
        return Err(QError::OutOfRange(
            "connection to infinity needs a, b nonzero".into(),
        ));
    }
    if quad::near_q_lattice(b / a, 1e-8, ctx).is_some() {
        return Err(QError::PoleAtParameter(
            "parameter ratio on q^Z; use the confluent form".into(),
        ));
    }
    let w = ctx.q / (a * b * z.value());
    if w.norm() >= 1.0 {
        return Err(QError::ConstraintViolation(
            "q/(abz) outside the unit disk".into(),
        ));
    }
    let term = |p: Complex64, s: Complex64| -> Result<Complex64> {
        let pb = Branched::from_complex(p)?;
        let mult = pk_multiplier(kind, &pb, z, ctx)?;
        let power = (-p.ln() * (p.ln() + z.ln()) / ctx.ln_q).exp();
        let ratio = qpoch_inf(s, ctx)? / qpoch_inf(s / p, ctx)?;
        let params = PhiParams::new(vec![p, ZERO], vec![p * ctx.q / s], ctx)?;
        Ok(mult * power * ratio * series::phi(&params, w, ctx)?)
    };
    Ok(term(a, b)? + term(b, a)?)
}

/// Confluent connection at b = a q^m: predicts the family's value from the
/// multiplier, its parameter log-derivative, and three explicit sums.
pub fn connection_confluent(
    kind: TransformKind,
    a: Complex64,
    m: u32,
    z: &Branched,
    ctx: &QContext,
) -> Result<Complex64> {
    if a.norm() == 0.0 {
        return Err(QError::OutOfRange("confluent connection needs a != 0".into()));
    }
    let q = ctx.q;
    let b = a * ctx.q_pow(m as i64);
    let abz = a * b * z.value();
    let w = ctx.q / abz;
    if w.norm() >= 1.0 {
        return Err(QError::ConstraintViolation(
            "q/(abz) outside the unit disk".into(),
        ));
    }
    let ab = Branched::from_complex(a)?;
    let pk = pk_multiplier(kind, &ab, z, ctx)?;

    // a d/da of the multiplier = d/d(ln a), central differences with one
    // Richardson sweep.
    let h = 1e-5;
    let diff = |step: f64| -> Result<Complex64> {
        let up = pk_multiplier(kind, &ab.scaled(step.exp())?, z, ctx)?;
        let dn = pk_multiplier(kind, &ab.scaled((-step).exp())?, z, ctx)?;
        Ok((up - dn) / (2.0 * step))
    };
    let dp = (4.0 * diff(h / 2.0)? - diff(h)?) / 3.0;

    let mi = m as i64;
    let qq_m = qpoch_fin(Complex64::new(q, 0.0), mi, ctx)?;

    let mut head = ZERO;
    if m >= 1 {
        let qm_inv = Complex64::new(ctx.q_pow(-mi), 0.0);
        let mut acc = ZERO;
        let mut a_n = ONE; // (a; q)_n
        let mut q_n = ONE; // (q; q)_n
        let mut w_n = ONE;
        for n in 0..mi {
            let qm_n1 = qpoch_fin(qm_inv, n + 1, ctx)?;
            acc += a_n * w_n / (qm_n1 * q_n);
            a_n *= ONE - a * ctx.q_pow(n);
            q_n *= ONE - Complex64::new(ctx.q_pow(n + 1), 0.0);
            w_n *= w;
        }
        head = -pk * qq_m * acc / (ctx.q_pow(mi) * qpoch_fin(a, mi, ctx)?);
    }

    let ln_abz = a.ln() + b.ln() + z.ln();
    let params = PhiParams::new(
        vec![b, ZERO],
        vec![Complex64::new(ctx.q_pow(mi + 1), 0.0)],
        ctx,
    )?;
    let middle = (pk * (ONE - ln_abz / ctx.ln_q) + dp) * ctx.q_pow_binom2(mi)
        * series::phi(&params, w, ctx)?
        / (qq_m * (-abz / q).powi(mi as i32));

    let mut tail_sum = ZERO;
    let mut b_n = ONE; // (b; q)_n
    let mut q_n = ONE; // (q; q)_n
    let mut q_mn = qq_m; // (q; q)_{m+n}
    let mut w_mn = w.powi(mi as i32); // w^{m+n}
    let mut tail = TailRule::new();
    let mut done = false;
    for n in 0..ctx.max_terms as i64 {
        let digamma = psi_q(b * ctx.q_pow(n), ctx)? - psi_q(Complex64::new(ctx.q_pow(mi + n + 1), 0.0), ctx)?
            - psi_q(Complex64::new(ctx.q_pow(n + 1), 0.0), ctx)?;
        let t = b_n * w_mn * digamma / (q_mn * q_n);
        tail_sum += t;
        if tail.absorb(t.norm(), ctx.eps) {
            done = true;
            break;
        }
        b_n *= ONE - b * ctx.q_pow(n);
        q_n *= ONE - Complex64::new(ctx.q_pow(n + 1), 0.0);
        q_mn *= ONE - Complex64::new(ctx.q_pow(mi + n + 1), 0.0);
        w_mn *= w;
    }
    if !done {
        return Err(QError::TruncationFailure {
            what: "confluent connection tail sum".into(),
            terms: ctx.max_terms,
        });
    }
    let third = pk * sign(mi) * ctx.q_pow_binom2(mi) * tail_sum;

    let front = qpoch_inf(a, ctx)? / ctx.q_factorial_inf()
        * (-a.ln() * (a.ln() + z.ln()) / ctx.ln_q).exp();
    Ok((head + middle + third) * front)
}
