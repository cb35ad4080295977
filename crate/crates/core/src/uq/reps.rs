//! The six evaluation paths. Each continuous path is a half-line integral
//! against the kind's kernel; the discrete kind replaces the integral with a
//! bilateral geometric-lattice sum over q^n lambda. The contour path runs on
//! a vertical line between the two pole ladders of the integrand.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{QError, Result};
use crate::laplace::TransformKind;
use crate::qcore::{ln_qpoch_inf, qpoch_inf, qpoch_inf_many, theta_q, Branched, QContext};
use crate::quad::{self, ContourSpec, QuadratureSpec};
use crate::series::{self, PhiParams};

use super::UqPoint;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Direct-series radius for the coefficient function. Beyond it the value is
/// continued by the three-term ladder in the argument, which follows from
/// splitting the series at the (1 - a q^n)(1 - b q^n) factor.
const LADDER_RADIUS: f64 = 0.5;

/// The coefficient-function sum with zero lower parameter, continued to the
/// whole plane minus its pole ladder at q^{-j}.
pub(crate) fn phi20_borel(
    a: Complex64,
    b: Complex64,
    w: Complex64,
    ctx: &QContext,
) -> Result<Complex64> {
    let params = PhiParams::new(vec![a, b], vec![ZERO], ctx)?;
    if w.norm() <= LADDER_RADIUS || params.terminating_order(ctx).is_some() {
        return series::phi(&params, w, ctx);
    }
    let k = ((w.norm() / LADDER_RADIUS).ln() / -ctx.ln_q).ceil() as i64;
    let mut upper = series::phi(&params, w * ctx.q_pow(k + 1), ctx)?;
    let mut mid = series::phi(&params, w * ctx.q_pow(k), ctx)?;
    let apb = a + b;
    let ab = a * b;
    for j in (0..k).rev() {
        let wj = w * ctx.q_pow(j);
        let den = ONE - wj;
        if den.norm() < 1e-10 * (1.0 + wj.norm()) {
            return Err(QError::PoleAtParameter(format!(
                "argument {w} sits against the pole ladder at step {j}"
            )));
        }
        let next = ((ONE - apb * wj) * mid + ab * wj * upper) / den;
        upper = mid;
        mid = next;
    }
    Ok(mid)
}

/// True when c sits within rel of the forbidden lattice {q^{-j} : j >= 0}
/// where a lower series parameter degenerates.
fn near_inverse_ladder(c: Complex64, ctx: &QContext, rel: f64) -> bool {
    let r = c.norm();
    if r < 1.0 - rel || c.re <= 0.0 {
        return false;
    }
    let j = (r.ln() / -ctx.ln_q).round().max(0.0) as i64;
    let lat = ctx.q_pow(-j);
    (c - lat).norm() <= rel * lat
}

/// Entire solution that the pole-kernel path averages: one rising product
/// times a confluent series. The series orientation is chosen so its lower
/// parameter stays clear of the degenerate lattice; if both orientations
/// degenerate, fall back to the coefficient-function continuation.
pub(crate) fn u_entire(
    a: Complex64,
    b: Complex64,
    t: Complex64,
    ctx: &QContext,
) -> Result<Complex64> {
    let q = ctx.q;
    let (big, small) = if a.norm() >= b.norm() { (a, b) } else { (b, a) };
    if big.norm() == 0.0 {
        let p = PhiParams::new(vec![], vec![ZERO], ctx)?;
        return series::phi(&p, -q * q * t, ctx);
    }
    for (p1, p2) in [(big, small), (small, big)] {
        if p1.norm() == 0.0 {
            continue;
        }
        let lower = -p2 * q * t;
        if near_inverse_ladder(lower, ctx, 1e-6) {
            continue;
        }
        let p = PhiParams::new(vec![p1.finv() * q], vec![lower], ctx)?;
        return Ok(qpoch_inf(lower, ctx)? * series::phi(&p, -p1 * q * t, ctx)?);
    }
    let w = -a * b * t;
    Ok(qpoch_inf(w, ctx)? * phi20_borel(a.finv() * q, b.finv() * q, w, ctx)?)
}

/// ln of the entire solution, assembled so the rising-product factor never
/// has to exist as a value. The confluent series factor itself stays O(|t|^c)
/// and is logged after summation.
pub(crate) fn u_entire_ln(
    a: Complex64,
    b: Complex64,
    t: Complex64,
    ctx: &QContext,
) -> Result<Complex64> {
    let q = ctx.q;
    let (big, small) = if a.norm() >= b.norm() { (a, b) } else { (b, a) };
    if big.norm() == 0.0 {
        let p = PhiParams::new(vec![], vec![ZERO], ctx)?;
        return Ok(series::phi(&p, -q * q * t, ctx)?.ln());
    }
    for (p1, p2) in [(big, small), (small, big)] {
        if p1.norm() == 0.0 {
            continue;
        }
        let lower = -p2 * q * t;
        if near_inverse_ladder(lower, ctx, 1e-6) {
            continue;
        }
        let p = PhiParams::new(vec![p1.finv() * q], vec![lower], ctx)?;
        let phi_val = series::phi(&p, -p1 * q * t, ctx)?;
        return Ok(ln_qpoch_inf(lower, ctx)? + phi_val.ln());
    }
    let w = -a * b * t;
    Ok(ln_qpoch_inf(w, ctx)? + phi20_borel(a.finv() * q, b.finv() * q, w, ctx)?.ln())
}

fn halfline(
    point: &UqPoint,
    f: &impl Fn(&Branched) -> Result<Complex64>,
    ctx: &QContext,
) -> Result<Complex64> {
    let kernel = point.kernel().expect("continuous kind");
    let spec = QuadratureSpec::auto();
    Ok(quad::integrate_halfline(f, &point.z, kernel, &spec, ctx)?.value)
}

fn lattice(
    f: &impl Fn(Complex64) -> Result<Complex64>,
    lambda: Complex64,
    z: &Branched,
    ctx: &QContext,
) -> Result<Complex64> {
    Ok(quad::bilateral_lattice_sum(f, lambda, z, ctx)?.value)
}

fn halfline_ln(
    point: &UqPoint,
    f_ln: &impl Fn(&Branched) -> Result<Complex64>,
    ctx: &QContext,
) -> Result<Complex64> {
    let kernel = point.kernel().expect("continuous kind");
    let spec = QuadratureSpec::auto();
    Ok(quad::integrate_halfline_ln(f_ln, &point.z, kernel, &spec, ctx)?.value)
}

fn lattice_ln(
    f_ln: &impl Fn(Complex64) -> Result<Complex64>,
    lambda: Complex64,
    z: &Branched,
    ctx: &QContext,
) -> Result<Complex64> {
    Ok(quad::bilateral_lattice_sum_ln(f_ln, lambda, z, ctx)?.value)
}

/// ln (-t; q)_inf with the pole guard the value paths apply to their
/// reciprocal factor: denominators below 1e-280 are refused.
fn ln_recip_poch_guard(t: Complex64, ctx: &QContext) -> Result<Complex64> {
    let l = ln_qpoch_inf(-t, ctx)?;
    if l.re < -644.0 {
        return Err(QError::PoleAtParameter(
            "integrand pole of (-t; q)_inf reached".into(),
        ));
    }
    Ok(l)
}

pub(super) fn borel(point: &UqPoint, ctx: &QContext) -> Result<Complex64> {
    let (a, b) = (point.a, point.b);
    match point.kind {
        TransformKind::Discrete(lambda) => {
            lattice(&|t| phi20_borel(a, b, -t, ctx), lambda, &point.z, ctx)
        }
        _ => halfline(point, &|t| phi20_borel(a, b, -t.value(), ctx), ctx),
    }
}

pub(super) fn phi11_term_ln(
    a: Complex64,
    b: Complex64,
    t: Complex64,
    ctx: &QContext,
) -> Result<Complex64> {
    let den = ln_recip_poch_guard(t, ctx)?;
    let lower = -b * t;
    let p = PhiParams::new(vec![b], vec![lower], ctx)?;
    let phi_val = series::phi(&p, -a * t, ctx)?;
    Ok(ln_qpoch_inf(lower, ctx)? + phi_val.ln() - den)
}

pub(super) fn phi11(point: &UqPoint, ctx: &QContext) -> Result<Complex64> {
    let (a, b) = (point.a, point.b);
    match point.kind {
        TransformKind::Discrete(lambda) => {
            lattice_ln(&|t| phi11_term_ln(a, b, t, ctx), lambda, &point.z, ctx)
        }
        _ => halfline_ln(point, &|t| phi11_term_ln(a, b, t.value(), ctx), ctx),
    }
}

pub(super) fn poch(point: &UqPoint, ctx: &QContext) -> Result<Complex64> {
    let (a, b) = (point.a, point.b);
    if (a.norm() * ctx.q) >= 1.0 {
        return Err(QError::ConstraintViolation(
            "product path needs |aq| < 1".into(),
        ));
    }
    let zv = point.z.value();
    let pre = qpoch_inf(a, ctx)?;
    let f_ln = move |t: Complex64| -> Result<Complex64> {
        let den = ln_recip_poch_guard(t, ctx)?;
        Ok(ln_qpoch_inf(-b * t, ctx)? + ln_qpoch_inf(-a * ctx.q * zv / t, ctx)? - den)
    };
    let raw = match point.kind {
        TransformKind::Discrete(lambda) => lattice_ln(&f_ln, lambda, &point.z, ctx)?,
        _ => halfline_ln(point, &|t: &Branched| f_ln(t.value()), ctx)?,
    };
    Ok(pre * raw)
}

pub(super) fn symmetric(point: &UqPoint, ctx: &QContext) -> Result<Complex64> {
    let (a, b) = (point.a, point.b);
    let abz = a * b * point.z.value();
    if abz.norm() >= 1.0 {
        return Err(QError::ConstraintViolation(
            "symmetric path needs |abz| < 1".into(),
        ));
    }
    let pre = qpoch_inf(abz, ctx)?;
    let f_ln = move |t: Complex64| -> Result<Complex64> {
        let den = ln_recip_poch_guard(t, ctx)?;
        Ok(ln_qpoch_inf(-a * t, ctx)? + ln_qpoch_inf(-b * t, ctx)? - den)
    };
    let raw = match point.kind {
        TransformKind::Discrete(lambda) => lattice_ln(&f_ln, lambda, &point.z, ctx)?,
        _ => halfline_ln(point, &|t: &Branched| f_ln(t.value()), ctx)?,
    };
    Ok(pre * raw)
}

pub(super) fn cauchy_heine(point: &UqPoint, ctx: &QContext) -> Result<Complex64> {
    let (a, b) = (point.a, point.b);
    if a.norm() >= 1.0 || b.norm() >= 1.0 {
        return Err(QError::ConstraintViolation(
            "pole-kernel path needs |a| < 1 and |b| < 1".into(),
        ));
    }
    let k0 = point.k0(ctx)?;
    let k0_ln = k0.ln();
    let zv = point.z.value();
    // The kernel argument is q t, which the engines realize as t / z_ref
    // with the fixed reference point 1/q; the extra factor t converts the
    // multiplicative measure back to dt.
    let zref = Branched::positive(1.0 / ctx.q)?;
    let f_ln = move |t: Complex64| -> Result<Complex64> {
        let den = t + zv;
        if den.norm() < 1e-10 * zv.norm().max(1e-300) {
            return Err(QError::PoleAtParameter(
                "simple pole at t = -z reached".into(),
            ));
        }
        Ok(k0_ln + u_entire_ln(a, b, t, ctx)? + t.ln() - den.ln())
    };
    match point.kind {
        TransformKind::Discrete(lambda) => {
            if let Some(n) = quad::near_q_lattice(-zv / lambda, 1e-8, ctx) {
                return Err(QError::PoleAtLattice(format!(
                    "z within 1e-8 of the summation point -q^{n} lambda"
                )));
            }
            lattice_ln(&f_ln, lambda, &zref, ctx)
        }
        _ => {
            if point.z.arg().abs() >= PI {
                return Err(QError::ConstraintViolation(
                    "pole-kernel path covers |arg z| < pi only".into(),
                ));
            }
            // Keep the ray clear of the simple pole at t = -z.
            let pole_angle = (-zv).arg();
            let zeta = if pole_angle.abs() < 0.35 {
                if pole_angle >= 0.0 {
                    -0.7
                } else {
                    0.7
                }
            } else {
                0.0
            };
            let spec = QuadratureSpec::with_ray(zeta);
            let kernel = point.kernel().expect("continuous kind");
            let g = |t: &Branched| f_ln(t.value());
            Ok(quad::integrate_halfline_ln(&g, &zref, kernel, &spec, ctx)?.value)
        }
    }
}

/// Shared meromorphic factor on the contour line: the reciprocal pole
/// ladders of both parameters against the sine that interpolates the
/// coefficient stream.
fn mb_common(a: Complex64, b: Complex64, s: Complex64, ctx: &QContext) -> Result<Complex64> {
    let qs = (s * ctx.ln_q).exp();
    let num = qpoch_inf(qs * ctx.q, ctx)?;
    let den = qpoch_inf_many(&[a * qs, b * qs], ctx)?;
    let sn = (s * PI).sin();
    Ok(num * PI / (sn * den))
}

pub(super) fn mellin_barnes(point: &UqPoint, ctx: &QContext) -> Result<Complex64> {
    let (a, b) = (point.a, point.b);
    let lnq = ctx.ln_q;
    let decade = |p: Complex64| {
        if p.norm() == 0.0 {
            f64::INFINITY
        } else {
            p.norm().ln() / lnq
        }
    };
    let (da, db) = (decade(a), decade(b));
    let lo = -da.min(db);
    let sigma = -0.5 * 1.0_f64.min(da).min(db);
    let spec = ContourSpec::new(sigma, 12.0, 0.1)?.validated(lo, 0.0)?;
    let k0 = point.k0(ctx)?;
    let i_two_pi = Complex64::new(0.0, 2.0 * PI);
    match point.kind {
        TransformKind::E => {
            let zln = point.z.ln();
            let f = |s: Complex64| -> Result<Complex64> {
                let gauss = (-(s * (s - ONE)) * 0.5 * lnq).exp();
                Ok(mb_common(a, b, s, ctx)? * gauss * (s * zln).exp())
            };
            let integral = quad::mb_line_integral(&f, &spec, ctx)?.value;
            Ok(-k0 * integral / i_two_pi)
        }
        TransformKind::Theta => {
            let zln = point.z.ln();
            let f = |s: Complex64| -> Result<Complex64> {
                let qs = (s * ctx.ln_q).exp();
                let num = qpoch_inf(qs * ctx.q, ctx)?;
                let den = qpoch_inf_many(&[a * qs, b * qs], ctx)?;
                let sn = (s * PI).sin();
                let tau = Branched::new(((1.0 - s.re) * lnq).exp(), PI - s.im * lnq)?;
                let th = theta_q(&tau, ctx)?;
                Ok(num * PI * PI * th * (s * zln).exp() / (sn * sn * den))
            };
            let integral = quad::mb_line_integral(&f, &spec, ctx)?.value;
            Ok(k0 * integral / (i_two_pi * ctx.qq_inf.powi(3) * lnq))
        }
        TransformKind::Discrete(lambda) => {
            let loz = lambda / point.z.value();
            let th_base = theta_q(&Branched::from_complex(loz)?, ctx)?;
            if th_base.norm() < 1e-250 {
                return Err(QError::PoleAtLattice(
                    "lambda / z on the zero lattice of the theta normalizer".into(),
                ));
            }
            let lam_ln = lambda.ln();
            let f = |s: Complex64| -> Result<Complex64> {
                let tau = Branched::new(
                    loz.norm() * (s.re * lnq).exp(),
                    loz.arg() + s.im * lnq,
                )?;
                let th = theta_q(&tau, ctx)?;
                Ok(mb_common(a, b, s, ctx)? * (s * lam_ln).exp() * th / th_base)
            };
            let integral = quad::mb_line_integral(&f, &spec, ctx)?.value;
            Ok(-k0 * integral / i_two_pi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> QContext {
        QContext::new(0.5).unwrap()
    }

    fn cx(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn ladder_continuation_matches_confluent_closed_form() {
        // The same function has a single-product times entire-series form
        // valid off the pole ladder; the ladder continuation must hit it.
        let c = ctx();
        let (a, b) = (cx(0.3), cx(0.2));
        for w in [
            Complex64::new(-40.0, 0.0),
            Complex64::new(-3.0, 2.0),
            Complex64::new(1.7, 4.0),
        ] {
            let cont = phi20_borel(a, b, w, &c).unwrap();
            let den = qpoch_inf(w, &c).unwrap();
            let p = PhiParams::new(vec![b], vec![b * w], &c).unwrap();
            let closed =
                qpoch_inf(b * w, &c).unwrap() * series::phi(&p, a * w, &c).unwrap() / den;
            assert!(
                (cont - closed).norm() <= 1e-10 * closed.norm(),
                "{w}: {cont} vs {closed}"
            );
        }
    }

    #[test]
    fn ladder_value_satisfies_contiguous_relation_far_out() {
        let c = ctx();
        let (a, b) = (cx(0.3), cx(0.2));
        let w = Complex64::new(-40.0, 3.0);
        let f0 = phi20_borel(a, b, w, &c).unwrap();
        let f1 = phi20_borel(a, b, w * c.q_pow(1), &c).unwrap();
        let f2 = phi20_borel(a, b, w * c.q_pow(2), &c).unwrap();
        let lhs = f0 * (ONE - w);
        let rhs = f1 * (ONE - (a + b) * w) + a * b * w * f2;
        assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm());
    }

    #[test]
    fn ladder_rejects_pole_ladder_points() {
        let c = ctx();
        let w = cx(4.0); // q^{-2}
        assert!(matches!(
            phi20_borel(cx(0.3), cx(0.2), w, &c),
            Err(QError::PoleAtParameter(_))
        ));
    }

    #[test]
    fn entire_solution_is_parameter_symmetric() {
        let c = ctx();
        let t = Complex64::new(2.0, 1.5);
        let ab = u_entire(cx(0.3), cx(0.2), t, &c).unwrap();
        let ba = u_entire(cx(0.2), cx(0.3), t, &c).unwrap();
        assert!((ab - ba).norm() <= 1e-11 * ab.norm());
    }

    #[test]
    fn entire_solution_degenerate_parameters() {
        let c = ctx();
        let t = Complex64::new(1.0, 0.5);
        // At a = b = 0 the series collapses; check against a tiny-parameter
        // limit from the generic branch.
        let exact = u_entire(ZERO, ZERO, t, &c).unwrap();
        let near = u_entire(cx(1e-9), ZERO, t, &c).unwrap();
        assert!((exact - near).norm() <= 1e-7 * exact.norm());
        // Single zero parameter stays finite and matches the coefficient
        // function continuation at -t via the defining identity.
        let one_zero = u_entire(cx(0.3), ZERO, t, &c).unwrap();
        assert!(one_zero.is_finite());
    }

    #[test]
    fn entire_solution_matches_coefficient_continuation() {
        // u(t) continues the coefficient function of (q/a, q/b) at -abt, so
        // inside the direct radius the product form must match the series.
        let c = ctx();
        let (a, b) = (cx(0.3), cx(0.2));
        let t = cx(1.5); // |ab t| = 0.09, well inside
        let u = u_entire(a, b, t, &c).unwrap();
        let p = PhiParams::new(vec![c.q / 0.3 * ONE, c.q / 0.2 * ONE], vec![ZERO], &c).unwrap();
        let series_side = qpoch_inf(-a * b * t, &c).unwrap()
            * series::phi(&p, -a * b * t, &c).unwrap();
        assert!((u - series_side).norm() <= 1e-11 * u.norm());
    }
}

