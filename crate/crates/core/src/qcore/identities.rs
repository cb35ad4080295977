//! Evaluators for the structural identities tying together theta_q, E_q and
//! P_q: partial-fraction expansions, log-derivative sums, the elliptic
//! four-term relation, kernel bridges, and monodromy. Each evaluator computes
//! the two sides by genuinely different routes (closed form vs. bilateral
//! sum) and reports the discrepancy.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{QError, Result};
use crate::qcore::{
    e_q, p_q, theta_q, theta_q_logderiv, theta_q_logderiv_prime, Branched, ParamPoint, QContext,
    TailRule, VerificationReport,
};

const POLE_FLOOR: f64 = 1e-250;
const LATTICE_CLEARANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IdentityId {
    PartFrac1,
    PartFrac2,
    PartFrac2a,
    ThetaSumDiff,
    ThetaSumDeriv,
    Elliptic,
    Eqab,
    Bridge,
    ThetaQuotient,
    MonodromyE,
}

impl IdentityId {
    pub fn all() -> [IdentityId; 10] {
        use IdentityId::*;
        [
            PartFrac1,
            PartFrac2,
            PartFrac2a,
            ThetaSumDiff,
            ThetaSumDeriv,
            Elliptic,
            Eqab,
            Bridge,
            ThetaQuotient,
            MonodromyE,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            IdentityId::PartFrac1 => "partfrac1",
            IdentityId::PartFrac2 => "partfrac2",
            IdentityId::PartFrac2a => "partfrac2a",
            IdentityId::ThetaSumDiff => "theta_sumdiff",
            IdentityId::ThetaSumDeriv => "theta_sumderiv",
            IdentityId::Elliptic => "elliptic",
            IdentityId::Eqab => "eqab",
            IdentityId::Bridge => "bridge",
            IdentityId::ThetaQuotient => "theta_quotient",
            IdentityId::MonodromyE => "monodromy_e",
        }
    }
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IdentityId {
    type Err = QError;

    fn from_str(s: &str) -> Result<Self> {
        IdentityId::all()
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| QError::OutOfRange(format!("unknown identity {s:?}")))
    }
}

fn want(point: &ParamPoint, name: &str) -> Result<Complex64> {
    if let Some(re) = point.get(&format!("{name}.re")) {
        let im = point.get(&format!("{name}.im")).unwrap_or(0.0);
        return Ok(Complex64::new(re, im));
    }
    if let Some(v) = point.get(name) {
        return Ok(Complex64::new(v, 0.0));
    }
    Err(QError::ConstraintViolation(format!(
        "missing parameter {name}"
    )))
}

fn want_branched(point: &ParamPoint, name: &str) -> Result<Branched> {
    if let Some(m) = point.get(&format!("{name}.modulus")) {
        let arg = point.get(&format!("{name}.arg")).unwrap_or(0.0);
        return Branched::new(m, arg);
    }
    Branched::from_complex(want(point, name)?)
}

fn theta_of(z: Complex64, ctx: &QContext) -> Result<Complex64> {
    theta_q(&Branched::from_complex(z)?, ctx)
}

fn nonzero(v: Complex64, what: &str) -> Result<Complex64> {
    if v.norm() < POLE_FLOOR {
        return Err(QError::ConstraintViolation(format!(
            "{what} vanishes at this point"
        )));
    }
    Ok(v)
}

/// Bilateral sum with the consecutive-small-terms stopping rule, each
/// direction run independently from n = 0.
fn bilateral_sum<F>(mut term: F, ctx: &QContext) -> Result<Complex64>
where
    F: FnMut(i64) -> Result<Complex64>,
{
    let mut sum = term(0)?;
    for dir in [1i64, -1] {
        let mut tail = TailRule::new();
        let mut n = dir;
        loop {
            let t = term(n)?;
            sum += t;
            if tail.absorb(t.norm(), ctx.eps * 1e-2) {
                break;
            }
            if n.unsigned_abs() as usize > ctx.max_terms {
                return Err(QError::TruncationFailure {
                    what: "bilateral partial-fraction sum".into(),
                    terms: ctx.max_terms,
                });
            }
            n += dir;
        }
    }
    Ok(sum)
}

/// Evaluate one identity at a parameter point. Both sides are computed
/// independently; the report carries the relative error against `tol`.
pub fn identity_eval(
    id: IdentityId,
    point: &ParamPoint,
    tol: f64,
    ctx: &QContext,
) -> Result<VerificationReport> {
    let (lhs, rhs) = match id {
        IdentityId::PartFrac1 => partfrac1(point, ctx)?,
        IdentityId::PartFrac2 => partfrac2(point, ctx)?,
        IdentityId::PartFrac2a => partfrac2a(point, ctx)?,
        IdentityId::ThetaSumDiff => theta_sumdiff(point, ctx)?,
        IdentityId::ThetaSumDeriv => theta_sumderiv(point, ctx)?,
        IdentityId::Elliptic => elliptic(point, ctx)?,
        IdentityId::Eqab => eqab(point, ctx)?,
        IdentityId::Bridge => bridge(point, ctx)?,
        IdentityId::ThetaQuotient => theta_quotient(point, ctx)?,
        IdentityId::MonodromyE => monodromy_e(point, ctx)?,
    };
    Ok(VerificationReport::compare(
        id.name(),
        point.clone(),
        lhs,
        rhs,
        tol,
    ))
}

type Sides = (Complex64, Complex64);

/// 1/theta_q(x) = (q;q)_inf^{-3} sum_n (-1)^n q^{n(n-1)/2} / (x + q^{-n}).
fn partfrac1(point: &ParamPoint, ctx: &QContext) -> Result<Sides> {
    let x = want(point, "x")?;
    let lhs = nonzero(theta_of(x, ctx)?, "theta_q(x)")?.finv();
    let sum = bilateral_sum(
        |n| {
            let lattice = ctx.q_pow(-n);
            let den = x + lattice;
            if den.norm() < LATTICE_CLEARANCE * x.norm().max(lattice) {
                return Err(QError::ConstraintViolation(format!(
                    "x within {:e} of the pole lattice",
                    den.norm()
                )));
            }
            let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            Ok(sign * ctx.q_pow_binom2(n) / den)
        },
        ctx,
    )?;
    Ok((lhs, sum / ctx.qq_inf.powi(3)))
}

/// theta_q(ax)/theta_q(x) = theta_q(-a)/(q;q)_inf^3 sum_n a^n/(1 + x q^n),
/// valid for q < |a| < 1.
fn partfrac2(point: &ParamPoint, ctx: &QContext) -> Result<Sides> {
    let a = want(point, "a")?;
    let x = want(point, "x")?;
    let am = a.norm();
    if am <= ctx.q || am >= 1.0 {
        return Err(QError::ConstraintViolation(format!(
            "need q < |a| < 1, got |a| = {am}"
        )));
    }
    let lhs = theta_of(a * x, ctx)? / nonzero(theta_of(x, ctx)?, "theta_q(x)")?;
    let pref = theta_of(-a, ctx)? / ctx.qq_inf.powi(3);
    let sum = bilateral_sum(
        |n| {
            let den = Complex64::new(1.0, 0.0) + x * ctx.q_pow(n);
            if den.norm() < LATTICE_CLEARANCE {
                return Err(QError::ConstraintViolation(format!(
                    "x within {:e} of the pole lattice",
                    den.norm()
                )));
            }
            Ok(a.powi(n as i32) / den)
        },
        ctx,
    )?;
    Ok((lhs, pref * sum))
}

/// theta_q(ax)/theta_q(x) = -pi theta_q(-a)/((q;q)_inf^3 ln q)
///   sum_n x^{-(2 n pi i + ln a)/ln q} / sin(pi (2 n pi i + ln a)/ln q),
/// the Mellin-Barnes residue form. x is branched; needs |arg x| < pi.
fn partfrac2a(point: &ParamPoint, ctx: &QContext) -> Result<Sides> {
    let a = want(point, "a")?;
    let x = want_branched(point, "x")?;
    let am = a.norm();
    if am <= ctx.q || am >= 1.0 {
        return Err(QError::ConstraintViolation(format!(
            "need q < |a| < 1, got |a| = {am}"
        )));
    }
    if x.arg().abs() >= PI {
        return Err(QError::ConstraintViolation(format!(
            "need |arg x| < pi for the residue sum, got {}",
            x.arg()
        )));
    }
    let xv = x.value();
    let lhs = theta_of(a * xv, ctx)? / nonzero(theta_of(xv, ctx)?, "theta_q(x)")?;
    let la = a.ln();
    let lx = x.ln();
    let sum = bilateral_sum(
        |n| {
            let w = (la + Complex64::new(0.0, 2.0 * PI * n as f64)) / ctx.ln_q;
            let z = PI * w;
            // 1/sin collapses into the exponent once e^{|Im z|} would dominate,
            // keeping huge and tiny factors inside a single exp.
            let t = if z.im > 30.0 {
                (-w * lx + Complex64::i() * z).exp() * Complex64::new(0.0, -2.0)
            } else if z.im < -30.0 {
                (-w * lx - Complex64::i() * z).exp() * Complex64::new(0.0, 2.0)
            } else {
                (-w * lx).exp() / z.sin()
            };
            Ok(t)
        },
        ctx,
    )?;
    let pref = -PI * theta_of(-a, ctx)? / (ctx.qq_inf.powi(3) * ctx.ln_q);
    Ok((lhs, pref * sum))
}

/// D(x) - D(y) = sum_n (x/(x+q^n) - y/(y+q^n)) with D the theta
/// log-derivative; the pairing inside the sum is what converges.
fn theta_sumdiff(point: &ParamPoint, ctx: &QContext) -> Result<Sides> {
    let x = want(point, "x")?;
    let y = want(point, "y")?;
    let dx = theta_q_logderiv(&Branched::from_complex(x)?, ctx)?;
    let dy = theta_q_logderiv(&Branched::from_complex(y)?, ctx)?;
    let sum = bilateral_sum(
        |n| {
            let lat = ctx.q_pow(n);
            let dx = x + lat;
            let dy = y + lat;
            if dx.norm() < LATTICE_CLEARANCE * x.norm().max(lat)
                || dy.norm() < LATTICE_CLEARANCE * y.norm().max(lat)
            {
                return Err(QError::ConstraintViolation(
                    "x or y too close to the pole lattice".into(),
                ));
            }
            Ok(x / dx - y / dy)
        },
        ctx,
    )?;
    Ok((dx - dy, sum))
}

/// d/dx [x theta'(x)/theta(x)] = sum_n q^n/(x+q^n)^2.
fn theta_sumderiv(point: &ParamPoint, ctx: &QContext) -> Result<Sides> {
    let x = want(point, "x")?;
    let lhs = theta_q_logderiv_prime(&Branched::from_complex(x)?, ctx)?;
    let sum = bilateral_sum(
        |n| {
            let lat = ctx.q_pow(n);
            let den = x + lat;
            if den.norm() < LATTICE_CLEARANCE * x.norm().max(lat) {
                return Err(QError::ConstraintViolation(
                    "x too close to the pole lattice".into(),
                ));
            }
            Ok(lat / (den * den))
        },
        ctx,
    )?;
    Ok((lhs, sum))
}

/// Four-term log-derivative combination equals a ratio of seven thetas; both
/// sides are elliptic of order 2 in the multiplicative variable.
fn elliptic(point: &ParamPoint, ctx: &QContext) -> Result<Sides> {
    let x = want(point, "x")?;
    let y = want(point, "y")?;
    let z = want(point, "z")?;
    let d = |v: Complex64| -> Result<Complex64> {
        theta_q_logderiv(&Branched::from_complex(v)?, ctx)
    };
    let lhs = d(x)? - d(x / z)? - d(y)? + d(y / z)?;
    let num = ctx.qq_inf.powi(3)
        * theta_of(-z, ctx)?
        * theta_of(-x / y, ctx)?
        * theta_of(-x * y / z, ctx)?;
    let den = nonzero(theta_of(x, ctx)?, "theta_q(x)")?
        * nonzero(theta_of(y, ctx)?, "theta_q(y)")?
        * nonzero(theta_of(x / z, ctx)?, "theta_q(x/z)")?
        * nonzero(theta_of(z / y, ctx)?, "theta_q(z/y)")?;
    Ok((lhs, num / den))
}

/// E_q(at) E_q(bt) / (E_q(t) E_q(abt)) = exp(-ln(a) ln(b)/ln(q)), exact on
/// the branched carrier.
fn eqab(point: &ParamPoint, ctx: &QContext) -> Result<Sides> {
    let a = want_branched(point, "a")?;
    let b = want_branched(point, "b")?;
    let t = want_branched(point, "t")?;
    let lhs = e_q(&a.mul(&t), ctx)? * e_q(&b.mul(&t), ctx)?
        / (e_q(&t, ctx)? * e_q(&a.mul(&b).mul(&t), ctx)?);
    let rhs = (-a.ln() * b.ln() / ctx.ln_q).exp();
    Ok((lhs, rhs))
}

/// Kernel bridge: C_q E_q(tau) = -P_q(tau) / (ln(q) theta_q(tau)), with P_q
/// taken from its dual-nome Fourier series so the two sides share nothing.
fn bridge(point: &ParamPoint, ctx: &QContext) -> Result<Sides> {
    let tau = want_branched(point, "tau")?;
    let lhs = ctx.c_q * e_q(&tau, ctx)?;
    let th = nonzero(theta_q(&tau, ctx)?, "theta_q(tau)")?;
    let rhs = -p_q(&tau, ctx)? / (ctx.ln_q * th);
    Ok((lhs, rhs))
}

/// theta_q(ax)/theta_q(bx) = x^{ln(b/a)/ln q} E_q(b) P_q(ax) / (E_q(a) P_q(bx)).
fn theta_quotient(point: &ParamPoint, ctx: &QContext) -> Result<Sides> {
    let a = want_branched(point, "a")?;
    let b = want_branched(point, "b")?;
    let x = want_branched(point, "x")?;
    let ax = a.mul(&x);
    let bx = b.mul(&x);
    let lhs = theta_q(&ax, ctx)? / nonzero(theta_q(&bx, ctx)?, "theta_q(bx)")?;
    let power = x.pow((b.ln() - a.ln()) / ctx.ln_q);
    let rhs = power * e_q(&b, ctx)? * p_q(&ax, ctx)?
        / (e_q(&a, ctx)? * nonzero(p_q(&bx, ctx)?, "P_q(bx)")?);
    Ok((lhs, rhs))
}

/// One full turn of the argument multiplies E_q by -qhat^{-1} tau^{2 pi i/ln q}.
fn monodromy_e(point: &ParamPoint, ctx: &QContext) -> Result<Sides> {
    let tau = want_branched(point, "tau")?;
    let up = tau.rotated(2.0 * PI);
    let lhs = e_q(&up, ctx)? / e_q(&tau, ctx)?;
    let rhs = -(Complex64::new(0.0, 2.0 * PI / ctx.ln_q) * tau.ln() - ctx.ln_q_hat).exp();
    Ok((lhs, rhs))
}
