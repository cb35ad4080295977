//! q-Pochhammer symbols (a; q)_inf, (a; q)_n for integer n, and the
//! general (a; q)_nu with complex order nu.

use num_complex::Complex64;

use crate::error::{QError, Result};
use crate::qcore::QContext;

/// Infinite product (a; q)_inf = prod_{n>=0} (1 - a q^n).
///
/// The product is truncated once |a| q^n drops below `eps / 100`; the cut tail
/// is restored to first order through exp(-a q^n / (1 - q)). A factor whose
/// magnitude falls below 1e-15 makes the product exactly zero, which is the
/// correct value for a on the inverse-power lattice q^{-m}.
pub fn qpoch_inf(a: Complex64, ctx: &QContext) -> Result<Complex64> {
    if !a.re.is_finite() || !a.im.is_finite() {
        return Err(QError::NonFinite("qpoch_inf argument".into()));
    }
    let cutoff = ctx.eps * 1e-2;
    let mut prod = Complex64::new(1.0, 0.0);
    let mut aq = a;
    for _ in 0..ctx.max_terms {
        let factor = Complex64::new(1.0, 0.0) - aq;
        if factor.norm() < 1e-15 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        prod *= factor;
        aq *= ctx.q;
        if aq.norm() < cutoff {
            let tail = -aq / (1.0 - ctx.q);
            return Ok(prod * tail.exp());
        }
    }
    Err(QError::TruncationFailure {
        what: "qpoch_inf".into(),
        terms: ctx.max_terms,
    })
}

/// Sum of principal logarithms ln (a; q)_inf = sum_{n>=0} ln(1 - a q^n).
///
/// exp of the result equals `qpoch_inf` exactly (each factor contributes its
/// own principal log, and exp of a sum of logs reproduces the product on any
/// branch), but the sum stays in range where the product itself would leave
/// f64. A vanishing factor returns re = -inf, matching the exact zero of the
/// product on the lattice a = q^{-m}.
pub fn ln_qpoch_inf(a: Complex64, ctx: &QContext) -> Result<Complex64> {
    if !a.re.is_finite() || !a.im.is_finite() {
        return Err(QError::NonFinite("ln_qpoch_inf argument".into()));
    }
    let cutoff = ctx.eps * 1e-2;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut aq = a;
    for _ in 0..ctx.max_terms {
        let factor = Complex64::new(1.0, 0.0) - aq;
        if factor.norm() < 1e-15 {
            return Ok(Complex64::new(f64::NEG_INFINITY, 0.0));
        }
        sum += factor.ln();
        aq *= ctx.q;
        if aq.norm() < cutoff {
            return Ok(sum - aq / (1.0 - ctx.q));
        }
    }
    Err(QError::TruncationFailure {
        what: "ln_qpoch_inf".into(),
        terms: ctx.max_terms,
    })
}

/// Product of (a_i; q)_inf over a parameter list.
pub fn qpoch_inf_many(args: &[Complex64], ctx: &QContext) -> Result<Complex64> {
    let mut prod = Complex64::new(1.0, 0.0);
    for &a in args {
        prod *= qpoch_inf(a, ctx)?;
    }
    Ok(prod)
}

/// Finite symbol (a; q)_n for any integer n.
///
/// Negative orders use (a; q)_{-m} = 1 / prod_{j=1..m} (1 - a q^{-j}), which
/// has poles at a = q^j; those are reported as `PoleAtParameter`.
pub fn qpoch_fin(a: Complex64, n: i64, ctx: &QContext) -> Result<Complex64> {
    if !a.re.is_finite() || !a.im.is_finite() {
        return Err(QError::NonFinite("qpoch_fin argument".into()));
    }
    let mut prod = Complex64::new(1.0, 0.0);
    if n >= 0 {
        let mut aq = a;
        for _ in 0..n {
            prod *= Complex64::new(1.0, 0.0) - aq;
            aq *= ctx.q;
        }
        Ok(prod)
    } else {
        for j in 1..=(-n) {
            let factor = Complex64::new(1.0, 0.0) - a * ctx.q_pow(-j);
            if factor.norm() < 1e-14 {
                return Err(QError::PoleAtParameter(format!(
                    "(a; q)_n with negative n at a = q^{j}"
                )));
            }
            prod *= factor;
        }
        Ok(prod.finv())
    }
}

/// General symbol (a; q)_nu = (a; q)_inf / (a q^nu; q)_inf with complex nu.
pub fn qpoch(a: Complex64, nu: Complex64, ctx: &QContext) -> Result<Complex64> {
    let numer = qpoch_inf(a, ctx)?;
    let qnu = (nu * ctx.ln_q).exp();
    let denom = qpoch_inf(a * qnu, ctx)?;
    if denom.norm() < 1e-250 {
        return Err(QError::PoleAtParameter(format!(
            "(a; q)_nu denominator vanishes at a = {a}, nu = {nu}"
        )));
    }
    Ok(numer / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(q: f64) -> QContext {
        QContext::new(q).unwrap()
    }

    /// Oracle: plain 200-term partial product, independent of the tail logic.
    fn brute_inf(a: Complex64, q: f64) -> Complex64 {
        let mut prod = Complex64::new(1.0, 0.0);
        let mut aq = a;
        for _ in 0..200 {
            prod *= Complex64::new(1.0, 0.0) - aq;
            aq *= q;
        }
        prod
    }

    #[test]
    fn half_base_value_matches_brute_force() {
        let c = ctx(0.5);
        let got = qpoch_inf(Complex64::new(0.5, 0.0), &c).unwrap();
        let want = brute_inf(Complex64::new(0.5, 0.0), 0.5);
        assert!((got - want).norm() <= 1e-13 * want.norm());
    }

    #[test]
    fn complex_arguments_match_brute_force() {
        for &q in &[0.1, 0.3, 0.7] {
            let c = ctx(q);
            for &a in &[
                Complex64::new(0.4, 0.6),
                Complex64::new(-1.7, 0.2),
                Complex64::new(3.0, -4.0),
            ] {
                let got = qpoch_inf(a, &c).unwrap();
                let want = brute_inf(a, q);
                assert!(
                    (got - want).norm() <= 1e-12 * want.norm().max(1.0),
                    "q={q} a={a}"
                );
            }
        }
    }

    #[test]
    fn lattice_points_give_exact_zero() {
        let c = ctx(0.5);
        // a = q^{-3} makes the n = 3 factor vanish.
        let got = qpoch_inf(Complex64::new(8.0, 0.0), &c).unwrap();
        assert_eq!(got, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn log_form_exponentiates_to_product() {
        for &q in &[0.1, 0.3, 0.7] {
            let c = ctx(q);
            for &a in &[
                Complex64::new(0.4, 0.6),
                Complex64::new(-1.7, 0.2),
                Complex64::new(3.0, -4.0),
            ] {
                let l = ln_qpoch_inf(a, &c).unwrap();
                let want = qpoch_inf(a, &c).unwrap();
                assert!(
                    (l.exp() - want).norm() <= 1e-12 * want.norm(),
                    "q={q} a={a}"
                );
            }
        }
    }

    #[test]
    fn log_form_satisfies_shift_relation() {
        // ln (a; q)_inf - ln (aq; q)_inf = ln(1 - a), factor by factor,
        // including at magnitudes where the plain product overflows f64.
        let c = ctx(0.5);
        for &a in &[
            Complex64::new(2.5, 1.0),
            Complex64::new(-1e160, 3e159),
            Complex64::new(4e200, 0.0),
        ] {
            let lhs = ln_qpoch_inf(a, &c).unwrap();
            let rhs = ln_qpoch_inf(a * c.q, &c).unwrap() + (Complex64::new(1.0, 0.0) - a).ln();
            assert!(lhs.re.is_finite());
            assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0), "a={a}");
        }
    }

    #[test]
    fn log_form_flags_lattice_zero() {
        let c = ctx(0.5);
        let l = ln_qpoch_inf(Complex64::new(8.0, 0.0), &c).unwrap();
        assert_eq!(l.re, f64::NEG_INFINITY);
    }

    #[test]
    fn finite_symbol_agrees_with_ratio_form() {
        let c = ctx(0.3);
        let a = Complex64::new(0.25, 0.1);
        for n in [0i64, 1, 2, 5, 11] {
            let fin = qpoch_fin(a, n, &c).unwrap();
            let ratio = qpoch(a, Complex64::new(n as f64, 0.0), &c).unwrap();
            assert!((fin - ratio).norm() <= 1e-12 * fin.norm().max(1.0));
        }
    }

    #[test]
    fn negative_order_inverts_shifted_product() {
        let c = ctx(0.3);
        let a = Complex64::new(0.4, -0.2);
        let m = 4i64;
        let direct = qpoch_fin(a, -m, &c).unwrap();
        // (a; q)_{-m} = 1 / (a q^{-m}; q)_m
        let shifted = qpoch_fin(a * c.q_pow(-m), m, &c).unwrap();
        assert!((direct * shifted - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn negative_order_pole_detected() {
        let c = ctx(0.3);
        let a = Complex64::new(0.3, 0.0); // a = q^1
        assert!(matches!(
            qpoch_fin(a, -2, &c),
            Err(QError::PoleAtParameter(_))
        ));
    }

    #[test]
    fn general_order_pole_detected() {
        let c = ctx(0.5);
        // a q^nu = q^{-1} => denominator (q^{-1}; q)_inf = 0.
        let got = qpoch(Complex64::new(4.0, 0.0), Complex64::new(-1.0, 0.0), &c);
        assert!(matches!(got, Err(QError::PoleAtParameter(_))));
    }
}
