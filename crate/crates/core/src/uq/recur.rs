//! Parameter recurrences shared by all kinds, and the continued fraction
//! attached to the ratio U(a, b; z) / U(a, bq; z/q). Its convergents split
//! into two converging subsequences whose limits bracket, but never equal,
//! the ratio itself; only terminating parameters close the gap.

use num_complex::Complex64;

use crate::error::{QError, Result};
use crate::laplace::TransformKind;
use crate::qcore::{Branched, QContext};

use super::{uq_default, UqPoint};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Residuals and term scales of the three parameter recurrences:
///   (1 - b) U(a, qb; z) + b U(a, b; qz) - U(a, b; z),
///   b (1 - a) U(qa, b; z) - a (1 - b) U(a, qb; z) + (a - b) U(a, b; z),
///   (1 - abqz)(1 - aq) U(q^2 a, b; z)
///     - (1 + (1 - a) q - (b - aq) q a z) U(qa, b; z) + q U(a, b; z).
pub fn recurrence_residuals(
    kind: TransformKind,
    a: Complex64,
    b: Complex64,
    z: &Branched,
    ctx: &QContext,
) -> Result<[(Complex64, f64); 3]> {
    let q = ctx.q;
    let zv = z.value();
    let eval = |aa: Complex64, bb: Complex64, w: Branched| -> Result<Complex64> {
        uq_default(&UqPoint::new(aa, bb, w, kind, ctx)?, ctx)
    };
    let base = eval(a, b, z.clone())?;
    let up_z = eval(a, b, z.q_shift(ctx, 1))?;
    let up_b = eval(a, b * q, z.clone())?;
    let up_a = eval(a * q, b, z.clone())?;
    let up_aa = eval(a * q * q, b, z.clone())?;

    let r1 = {
        let t0 = (ONE - b) * up_b;
        let t1 = b * up_z;
        (t0 + t1 - base, t0.norm() + t1.norm() + base.norm())
    };
    let r2 = {
        let t0 = b * (ONE - a) * up_a;
        let t1 = a * (ONE - b) * up_b;
        let t2 = (a - b) * base;
        (t0 - t1 + t2, t0.norm() + t1.norm() + t2.norm())
    };
    let r3 = {
        let t0 = (ONE - a * b * q * zv) * (ONE - a * q) * up_aa;
        let t1 = (ONE + (ONE - a) * q - (b - a * q) * q * a * zv) * up_a;
        let t2 = q * base;
        (t0 - t1 + t2, t0.norm() + t1.norm() + t2.norm())
    };
    Ok([r1, r2, r3])
}

/// Residual of the relation seeding the continued fraction:
/// U(a, b; z) - U(a, bq; z/q) - (1 - a) z q^{-1} U(aq, bq; z/q^2).
pub fn cf_seed_residual(
    kind: TransformKind,
    a: Complex64,
    b: Complex64,
    z: &Branched,
    ctx: &QContext,
) -> Result<(Complex64, f64)> {
    let q = ctx.q;
    let eval = |aa: Complex64, bb: Complex64, w: Branched| -> Result<Complex64> {
        uq_default(&UqPoint::new(aa, bb, w, kind, ctx)?, ctx)
    };
    let t0 = eval(a, b, z.clone())?;
    let t1 = eval(a, b * q, z.q_shift(ctx, -1))?;
    let t2 = (ONE - a) * z.value() / q * eval(a * q, b * q, z.q_shift(ctx, -2))?;
    Ok((t0 - t1 - t2, t0.norm() + t1.norm() + t2.norm()))
}

fn partial_coefficient(k: usize, a: Complex64, b: Complex64, ctx: &QContext) -> Complex64 {
    if k % 2 == 1 {
        let j = ((k - 1) / 2) as i64;
        (ONE - a * ctx.q_pow(j)) / ctx.q_pow(2 * j + 1)
    } else {
        let j = (k / 2) as i64;
        (ONE - b * ctx.q_pow(j)) / ctx.q_pow(2 * j)
    }
}

/// n-th convergent 1 + a1 z / (1 + a2 z / (... + an z)), evaluated backward.
/// The coefficients depend on (a, b, z, q) only, never on the kind.
pub fn cf_convergent(
    n: usize,
    a: Complex64,
    b: Complex64,
    z: Complex64,
    ctx: &QContext,
) -> Result<Complex64> {
    if n == 0 || n > 200 {
        return Err(QError::OutOfRange(format!(
            "convergent index {n} outside 1..=200"
        )));
    }
    let mut acc = ONE + partial_coefficient(n, a, b, ctx) * z;
    for k in (1..n).rev() {
        if acc.norm() < 1e-290 {
            return Err(QError::ZeroDivision { index: k });
        }
        acc = ONE + partial_coefficient(k, a, b, ctx) * z / acc;
    }
    Ok(acc)
}

/// Limits of the even and odd convergent subsequences and their gap.
#[derive(Debug, Clone)]
pub struct CfGap {
    pub even: Complex64,
    pub odd: Complex64,
    pub gap: f64,
}

/// Runs convergents upward until both parities settle to relative 1e-12
/// (or the index cap), then reports their limits and the gap between them.
pub fn cf_gap(a: Complex64, b: Complex64, z: Complex64, ctx: &QContext) -> Result<CfGap> {
    let mut even = cf_convergent(2, a, b, z, ctx)?;
    let mut odd = cf_convergent(1, a, b, z, ctx)?;
    let mut settled_even = 0usize;
    let mut settled_odd = 0usize;
    let mut n = 3;
    while n <= 200 && (settled_even < 3 || settled_odd < 3) {
        let next = cf_convergent(n, a, b, z, ctx)?;
        if n % 2 == 0 {
            if (next - even).norm() <= 1e-12 * next.norm().max(1e-30) {
                settled_even += 1;
            } else {
                settled_even = 0;
            }
            even = next;
        } else {
            if (next - odd).norm() <= 1e-12 * next.norm().max(1e-30) {
                settled_odd += 1;
            } else {
                settled_odd = 0;
            }
            odd = next;
        }
        n += 1;
    }
    Ok(CfGap {
        even,
        odd,
        gap: (even - odd).norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uq::{uq, UqMethod};

    fn ctx() -> QContext {
        QContext::new(0.5).unwrap()
    }

    fn cx(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn recurrences_hold_for_every_kind() {
        let c = ctx();
        let z = Branched::positive(0.4).unwrap();
        for kind in [
            TransformKind::E,
            TransformKind::Theta,
            TransformKind::Discrete(cx(0.9)),
        ] {
            let rs = recurrence_residuals(kind, cx(0.3), cx(0.2), &z, &c).unwrap();
            for (i, (res, scale)) in rs.iter().enumerate() {
                assert!(
                    res.norm() <= 1e-9 * scale,
                    "{kind} relation {}: {} vs {scale}",
                    i + 1,
                    res.norm()
                );
            }
        }
    }

    #[test]
    fn middle_recurrence_degenerates_at_equal_parameters() {
        // At a = b the second relation collapses to a tautology; its
        // residual must vanish at the rounding level rather than the
        // quadrature level.
        let c = ctx();
        let z = Branched::positive(0.4).unwrap();
        let rs =
            recurrence_residuals(TransformKind::Discrete(cx(0.9)), cx(0.3), cx(0.3), &z, &c)
                .unwrap();
        let (res, scale) = rs[1];
        assert!(res.norm() <= 1e-12 * scale.max(1e-30));
    }

    #[test]
    fn seed_relation_holds() {
        let c = ctx();
        let z = Branched::positive(0.4).unwrap();
        for kind in [TransformKind::E, TransformKind::Theta] {
            let (res, scale) = cf_seed_residual(kind, cx(0.3), cx(0.2), &z, &c).unwrap();
            assert!(res.norm() <= 1e-9 * scale, "{kind}: {}", res.norm());
        }
    }

    #[test]
    fn first_convergent_is_the_textbook_value() {
        let c = ctx();
        let (a, b, z) = (cx(0.3), cx(0.2), cx(0.4));
        let c1 = cf_convergent(1, a, b, z, &c).unwrap();
        let hand = ONE + (ONE - a) / c.q * z;
        assert!((c1 - hand).norm() <= 1e-15);
        assert!(cf_convergent(0, a, b, z, &c).is_err());
        assert!(cf_convergent(201, a, b, z, &c).is_err());
    }

    #[test]
    fn terminating_parameters_close_the_fraction() {
        // a = q^{-1}: both sides terminate and the fraction equality is
        // exact, so the convergents' limits coincide with the ratio.
        let c = ctx();
        let (a, b) = (cx(2.0), cx(0.2));
        let z = Branched::positive(0.4).unwrap();
        let num = uq(
            &UqPoint::new(a, b, z.clone(), TransformKind::E, &c).unwrap(),
            UqMethod::Phi11,
            &c,
        )
        .unwrap();
        let den = uq(
            &UqPoint::new(a, b * c.q, z.q_shift(&c, -1), TransformKind::E, &c).unwrap(),
            UqMethod::Phi11,
            &c,
        )
        .unwrap();
        let ratio = num / den;
        let gap = cf_gap(a, b, z.value(), &c).unwrap();
        assert!(gap.gap <= 1e-10 * ratio.norm(), "gap {}", gap.gap);
        assert!(
            (gap.even - ratio).norm() <= 1e-10 * ratio.norm(),
            "{} vs {ratio}",
            gap.even
        );
    }

    #[test]
    fn generic_parameters_leave_a_gap_missing_the_ratio() {
        let c = ctx();
        let (a, b) = (cx(0.3), cx(0.2));
        let z = Branched::positive(0.4).unwrap();
        let num = uq_default(
            &UqPoint::new(a, b, z.clone(), TransformKind::E, &c).unwrap(),
            &c,
        )
        .unwrap();
        let den = uq_default(
            &UqPoint::new(a, b * c.q, z.q_shift(&c, -1), TransformKind::E, &c).unwrap(),
            &c,
        )
        .unwrap();
        let ratio = num / den;
        let gap = cf_gap(a, b, z.value(), &c).unwrap();
        assert!(gap.gap > 1e-6, "gap collapsed: {}", gap.gap);
        assert!((gap.even - ratio).norm() > 1e-6);
        assert!((gap.odd - ratio).norm() > 1e-6);
    }
}
