//! Difference-equation structure: the kernel-carrying second solution, the
//! two solutions at infinity, residuals of the defining q-difference
//! equation and of the Wronskian pairing, and the two-sheet jump of the
//! continuous kinds.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{QError, Result};
use crate::laplace::TransformKind;
use crate::qcore::{qpoch_inf, Branched, QContext};
use crate::quad::{self, KernelKind, QuadratureSpec};
use crate::series::{self, PhiParams};

use super::reps::{phi11_term_ln, phi20_borel, u_entire};
use super::{uq_default, UqPoint};

/// -w as a quarter-turn-twice rotation; keeping one convention here keeps
/// the kernel arguments of the second solution and the sheet jump coherent.
fn neg(w: &Branched) -> Branched {
    w.rotated(PI)
}

fn kappa_for(kind: TransformKind) -> KernelKind {
    match kind {
        TransformKind::E => KernelKind::E,
        TransformKind::Theta | TransformKind::Discrete(_) => KernelKind::Theta,
    }
}

fn y2_kappa(
    kappa: KernelKind,
    a: Complex64,
    b: Complex64,
    z: &Branched,
    ctx: &QContext,
) -> Result<Complex64> {
    let front = quad::kernel(kappa, &neg(&z.q_shift(ctx, 1)), ctx)?;
    Ok(front * u_entire(a, b, -z.value(), ctx)?)
}

/// Second solution of the family's q-difference equation, carrying the
/// kind's kernel at -qz. The discrete kind pairs with the reciprocal-theta
/// kernel; `wronskian_residual_with` lets callers probe the other pairing.
pub fn y2(
    kind: TransformKind,
    a: Complex64,
    b: Complex64,
    z: &Branched,
    ctx: &QContext,
) -> Result<Complex64> {
    y2_kappa(kappa_for(kind), a, b, z, ctx)
}

/// The same solution through the reciprocal-parameter coefficient series
/// instead of the entire confluent form; needs a, b nonzero.
pub fn y2_alt(
    kind: TransformKind,
    a: Complex64,
    b: Complex64,
    z: &Branched,
    ctx: &QContext,
) -> Result<Complex64> {
    if a.norm() == 0.0 || b.norm() == 0.0 {
        return Err(QError::OutOfRange(
            "reciprocal-parameter form needs a, b nonzero".into(),
        ));
    }
    let front = quad::kernel(kappa_for(kind), &neg(&z.q_shift(ctx, 1)), ctx)?;
    let abz = a * b * z.value();
    let tail = qpoch_inf(abz, ctx)? * phi20_borel(a.finv() * ctx.q, b.finv() * ctx.q, abz, ctx)?;
    Ok(front * tail)
}

/// Solutions around z = infinity: `which` = 3 carries the a-power, 4 the
/// b-power. Both need |q/(abz)| < 1 and the parameter ratio off q^Z.
pub fn y_infinity(
    which: u8,
    a: Complex64,
    b: Complex64,
    z: &Branched,
    ctx: &QContext,
) -> Result<Complex64> {
    let (p, s) = match which {
        3 => (a, b),
        4 => (b, a),
        _ => {
            return Err(QError::OutOfRange(format!(
                "solution index {which} (only 3 and 4 exist)"
            )))
        }
    };
    if p.norm() == 0.0 || s.norm() == 0.0 {
        return Err(QError::OutOfRange(
            "solutions at infinity need a, b nonzero".into(),
        ));
    }
    let power = z.pow(-p.ln() / ctx.ln_q);
    let params = PhiParams::new(vec![p, Complex64::new(0.0, 0.0)], vec![p * ctx.q / s], ctx)?;
    let w = ctx.q / (a * b * z.value());
    Ok(power * series::phi(&params, w, ctx)?)
}

/// Residual and term scale of the defining equation
/// z y(z q^-2) + (q - (a+b) z) y(z q^-1) - (q - a b z) y(z) = 0
/// for an arbitrary solution candidate.
pub fn ode_residual_fn<F>(
    f: &F,
    a: Complex64,
    b: Complex64,
    z: &Branched,
    ctx: &QContext,
) -> Result<(Complex64, f64)>
where
    F: Fn(&Branched) -> Result<Complex64>,
{
    let zv = z.value();
    let y0 = f(z)?;
    let y1 = f(&z.q_shift(ctx, -1))?;
    let y2 = f(&z.q_shift(ctx, -2))?;
    let t2 = zv * y2;
    let t1 = (ctx.q - (a + b) * zv) * y1;
    let t0 = (ctx.q - a * b * zv) * y0;
    Ok((t2 + t1 - t0, t2.norm() + t1.norm() + t0.norm()))
}

/// Equation residual of the family itself at the given point.
pub fn ode_residual(
    kind: TransformKind,
    a: Complex64,
    b: Complex64,
    z: &Branched,
    ctx: &QContext,
) -> Result<(Complex64, f64)> {
    let f = |w: &Branched| {
        let p = UqPoint::new(a, b, w.clone(), kind, ctx)?;
        uq_default(&p, ctx)
    };
    ode_residual_fn(&f, a, b, z, ctx)
}

/// Wronskian residual with an explicit kernel choice in the second solution
/// and on the closed-form side:
/// U(z) y2(z/q) - U(z/q) y2(z) - kappa(-z) (abz; q)_inf.
pub fn wronskian_residual_with(
    kind: TransformKind,
    kappa: KernelKind,
    a: Complex64,
    b: Complex64,
    z: &Branched,
    ctx: &QContext,
) -> Result<(Complex64, f64)> {
    let p0 = UqPoint::new(a, b, z.clone(), kind, ctx)?;
    let zm = z.q_shift(ctx, -1);
    let p1 = p0.at(zm.clone(), ctx)?;
    let u0 = uq_default(&p0, ctx)?;
    let u1 = uq_default(&p1, ctx)?;
    let y0 = y2_kappa(kappa, a, b, z, ctx)?;
    let y1 = y2_kappa(kappa, a, b, &zm, ctx)?;
    let rhs = quad::kernel(kappa, &neg(z), ctx)? * qpoch_inf(a * b * z.value(), ctx)?;
    let cross_a = u0 * y1;
    let cross_b = u1 * y0;
    Ok((
        cross_a - cross_b - rhs,
        cross_a.norm() + cross_b.norm() + rhs.norm(),
    ))
}

/// Wronskian residual with the kind's canonical kernel pairing.
pub fn wronskian_residual(
    kind: TransformKind,
    a: Complex64,
    b: Complex64,
    z: &Branched,
    ctx: &QContext,
) -> Result<(Complex64, f64)> {
    wronskian_residual_with(kind, kappa_for(kind), a, b, z, ctx)
}

/// Jump across one positive turn of z for the continuous kinds, next to its
/// closed form -2 pi i K0 kappa(-qz) u(a, b, -z).
///
/// The Gaussian kernel is branched in t/z, so its jump is simply the value
/// difference between the two sheets. The reciprocal-theta kernel is
/// single-valued; there the turn drags the kernel's pole ray
/// arg t = arg z + pi across the contour once, and the jump is the residue
/// mass collected at that crossing, realized as the difference between the
/// integrals on two rays straddling the pole ray.
pub fn monodromy_jump(
    kind: TransformKind,
    a: Complex64,
    b: Complex64,
    z: &Branched,
    ctx: &QContext,
) -> Result<(Complex64, Complex64)> {
    let p0 = UqPoint::new(a, b, z.clone(), kind, ctx)?;
    let measured = match kind {
        TransformKind::E => {
            let p1 = p0.at(z.rotated(TAU), ctx)?;
            uq_default(&p1, ctx)? - uq_default(&p0, ctx)?
        }
        TransformKind::Theta => {
            let delta = 0.3;
            if z.arg().abs() <= delta + 0.05 || z.arg().abs() >= PI - delta - 0.05 {
                return Err(QError::OutOfRange(format!(
                    "straddling rays need the kernel pole ray at arg z + pi \
                     clear of the integrand poles on the negative axis; \
                     arg z = {} is too close",
                    z.arg()
                )));
            }
            let pole_ray = (-z.value()).arg();
            let f = |t: &Branched| phi11_term_ln(a, b, t.value(), ctx);
            let side = |zeta: f64| -> Result<Complex64> {
                let spec = QuadratureSpec::with_ray(zeta);
                Ok(quad::integrate_halfline_ln(&f, z, KernelKind::Theta, &spec, ctx)?.value)
            };
            side(pole_ray + delta)? - side(pole_ray - delta)?
        }
        TransformKind::Discrete(_) => {
            return Err(QError::OutOfRange(
                "the discrete kind is single-valued in z".into(),
            ))
        }
    };
    let factor = quad::kernel(kappa_for(kind), &neg(&z.q_shift(ctx, 1)), ctx)?;
    let closed =
        -Complex64::new(0.0, TAU) * p0.k0(ctx)? * factor * u_entire(a, b, -z.value(), ctx)?;
    Ok((measured, closed))
}
