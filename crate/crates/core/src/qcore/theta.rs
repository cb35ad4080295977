//! Jacobi-style theta function theta_q, its logarithmic derivative, and the
//! branched Gaussian kernel E_q.
//!
//! theta_q(tau) = (q; q)_inf (-tau; q)_inf (-q/tau; q)_inf
//!              = sum_{n in Z} q^{n(n-1)/2} tau^n,  zeros at tau = -q^n.
//!
//! Evaluation rescales tau by an exact quasi-periodicity factor into the
//! fundamental annulus q <= |tau| < 1 first:
//!   theta_q(tau) = tau^k q^{k(k-1)/2} theta_q(q^k tau).

use num_complex::Complex64;

use crate::error::{QError, Result};
use crate::qcore::{binom2, Branched, QContext, TailRule};

/// Rescale to the fundamental annulus: returns (k, q^k tau) with
/// q <= |q^k tau| < 1.
pub(crate) fn annulus_reduce(tau: &Branched, ctx: &QContext) -> (i64, Branched) {
    let t = tau.modulus().ln() / ctx.ln_q; // |tau| = q^t
    let mut k = (1.0 - t).floor() as i64;
    // Fix up floating-point edge cases so that t + k lands in (0, 1].
    while (t + k as f64) <= 0.0 {
        k += 1;
    }
    while (t + k as f64) > 1.0 {
        k -= 1;
    }
    (k, tau.q_shift(ctx, k))
}

/// Quasi-periodicity factor tau^k q^{k(k-1)/2} as a complex value, computed in
/// log space so extreme moduli cannot overflow intermediates.
fn rescale_factor(tau: &Branched, k: i64, ctx: &QContext) -> Complex64 {
    let expo = tau.ln() * (k as f64) + binom2(k) * ctx.ln_q;
    expo.exp()
}

/// theta_q via the triple product on the rescaled annulus.
///
/// Returns exactly zero when a product factor vanishes to working precision
/// (tau on the zero lattice -q^n).
pub fn theta_q(tau: &Branched, ctx: &QContext) -> Result<Complex64> {
    let (k, taur) = annulus_reduce(tau, ctx);
    let v = taur.value();
    let p1 = super::qpoch_inf(-v, ctx)?;
    if p1 == Complex64::new(0.0, 0.0) {
        return Ok(p1);
    }
    let p2 = super::qpoch_inf(-ctx.q / v, ctx)?;
    if p2 == Complex64::new(0.0, 0.0) {
        return Ok(p2);
    }
    Ok(rescale_factor(tau, k, ctx) * ctx.qq_inf * p1 * p2)
}

/// ln theta_q(tau): the annulus factors are O(1), so only the rescale
/// exponent grows, and it is already a log. exp of the result reproduces
/// `theta_q` even where that value leaves f64 range. Zeros of theta come
/// back as re = -inf.
pub fn theta_q_ln(tau: &Branched, ctx: &QContext) -> Result<Complex64> {
    let (k, taur) = annulus_reduce(tau, ctx);
    let v = taur.value();
    let p1 = super::qpoch_inf(-v, ctx)?;
    let p2 = super::qpoch_inf(-ctx.q / v, ctx)?;
    if p1 == Complex64::new(0.0, 0.0) || p2 == Complex64::new(0.0, 0.0) {
        return Ok(Complex64::new(f64::NEG_INFINITY, 0.0));
    }
    let expo = tau.ln() * (k as f64) + binom2(k) * ctx.ln_q;
    Ok(expo + ctx.qq_inf.ln() + p1.ln() + p2.ln())
}

/// theta_q via the bilateral power sum on the rescaled annulus. Slower than
/// the product form; kept as an independent evaluation path.
pub fn theta_q_series(tau: &Branched, ctx: &QContext) -> Result<Complex64> {
    let (k, taur) = annulus_reduce(tau, ctx);
    let v = taur.value();
    let mut sum = Complex64::new(1.0, 0.0); // n = 0 term
    // Ascending n: term ratio q^n tau.
    let mut tail = TailRule::new();
    let mut term = Complex64::new(1.0, 0.0);
    let mut ratio = v;
    for _ in 0..ctx.max_terms {
        term *= ratio;
        sum += term;
        ratio *= ctx.q;
        if tail.absorb(term.norm(), ctx.eps * 1e-3) {
            break;
        }
    }
    // Descending n = -1, -2, ...: term q^{m(m+1)/2} tau^{-m}.
    let mut tail = TailRule::new();
    let mut term = Complex64::new(1.0, 0.0);
    let vinv = v.finv();
    for m in 1..=(ctx.max_terms as i64) {
        term *= ctx.q_pow(m) * vinv;
        sum += term;
        if tail.absorb(term.norm(), ctx.eps * 1e-3) {
            break;
        }
    }
    Ok(rescale_factor(tau, k, ctx) * sum)
}

/// Logarithmic derivative D(tau) = tau theta_q'(tau) / theta_q(tau),
/// evaluated through the bilateral series with the exact shift
/// D(tau) = D(q^k tau) + k on the fundamental annulus.
pub fn theta_q_logderiv(tau: &Branched, ctx: &QContext) -> Result<Complex64> {
    let (k, taur) = annulus_reduce(tau, ctx);
    // Pole clearance: the only theta zero inside [q, 1) is at -q.
    let dist = (taur.value() + ctx.q).norm();
    if dist < 1e-8 {
        return Err(QError::PoleAtParameter(format!(
            "theta_q_logderiv within {dist:e} of the zero lattice"
        )));
    }
    let (num, den) = logderiv_series(taur.value(), ctx)?;
    if den.norm() < 1e-250 {
        return Err(QError::PoleAtParameter(
            "theta_q_logderiv denominator underflow".into(),
        ));
    }
    // theta(q tau) tau = theta(tau) gives D(tau) = D(q^k tau) + k.
    Ok(num / den + k as f64)
}

/// Derivative of the logarithmic derivative, d/dtau [tau theta'/theta],
/// through the same bilateral series. Shift rule: value scales by q^k.
pub fn theta_q_logderiv_prime(tau: &Branched, ctx: &QContext) -> Result<Complex64> {
    let (k, taur) = annulus_reduce(tau, ctx);
    let dist = (taur.value() + ctx.q).norm();
    if dist < 1e-8 {
        return Err(QError::PoleAtParameter(format!(
            "theta_q_logderiv_prime within {dist:e} of the zero lattice"
        )));
    }
    let v = taur.value();
    let (num, den) = logderiv_series(v, ctx)?;
    let num2 = logderiv2_series(v, ctx)?;
    // D'(tau) = (N' theta - N theta') / theta^2 with N = tau theta', and
    // N'(tau) = sum n^2 q^{C(n,2)} tau^{n-1}; theta'(tau) = N / tau.
    let d = num / den;
    let dprime = (num2 - d * num) / (den * v);
    Ok(dprime * ctx.q_pow(k))
}

/// Bilateral sums (sum n q^{C(n,2)} tau^n, sum q^{C(n,2)} tau^n) on the annulus.
fn logderiv_series(v: Complex64, ctx: &QContext) -> Result<(Complex64, Complex64)> {
    let mut den = Complex64::new(1.0, 0.0);
    let mut num = Complex64::new(0.0, 0.0);
    let mut tail = TailRule::new();
    let mut term = Complex64::new(1.0, 0.0);
    let mut ratio = v;
    for n in 1..=(ctx.max_terms as i64) {
        term *= ratio;
        den += term;
        num += term * n as f64;
        ratio *= ctx.q;
        if tail.absorb(term.norm() * (n as f64), ctx.eps * 1e-3) {
            break;
        }
    }
    let mut tail = TailRule::new();
    let mut term = Complex64::new(1.0, 0.0);
    let vinv = v.finv();
    for m in 1..=(ctx.max_terms as i64) {
        term *= ctx.q_pow(m) * vinv;
        den += term;
        num -= term * m as f64;
        if tail.absorb(term.norm() * (m as f64), ctx.eps * 1e-3) {
            break;
        }
    }
    Ok((num, den))
}

/// Bilateral sum (sum n^2 q^{C(n,2)} tau^n, _) on the annulus.
fn logderiv2_series(v: Complex64, ctx: &QContext) -> Result<Complex64> {
    let mut num2 = Complex64::new(0.0, 0.0);
    let mut tail = TailRule::new();
    let mut term = Complex64::new(1.0, 0.0);
    let mut ratio = v;
    for n in 1..=(ctx.max_terms as i64) {
        term *= ratio;
        num2 += term * (n * n) as f64;
        ratio *= ctx.q;
        if tail.absorb(term.norm() * ((n * n) as f64), ctx.eps * 1e-3) {
            break;
        }
    }
    let mut tail = TailRule::new();
    let mut term = Complex64::new(1.0, 0.0);
    let vinv = v.finv();
    for m in 1..=(ctx.max_terms as i64) {
        term *= ctx.q_pow(m) * vinv;
        num2 += term * (m * m) as f64;
        if tail.absorb(term.norm() * ((m * m) as f64), ctx.eps * 1e-3) {
            break;
        }
    }
    Ok(num2)
}

/// Branched Gaussian kernel
/// E_q(tau) = q^{1/8} tau^{-1/2} exp(ln^2 tau / (2 ln q))
///          = exp((ln tau - ln q / 2)^2 / (2 ln q)),
/// with the unwrapped logarithm of tau. Satisfies E_q(q^x) = q^{(x-1/2)^2/2}.
pub fn e_q(tau: &Branched, ctx: &QContext) -> Result<Complex64> {
    let l = tau.ln();
    let expo = l * l / (2.0 * ctx.ln_q) - l * 0.5 + ctx.ln_q / 8.0;
    let v = expo.exp();
    if !v.re.is_finite() || !v.im.is_finite() {
        return Err(QError::NonFinite(
            "e_q overflow: argument too deep on the branch".into(),
        ));
    }
    Ok(v)
}

/// Exponent of the branched Gaussian kernel: ln E_q(tau). Never overflows,
/// since the quadratic exponent is the whole function.
pub fn e_q_ln(tau: &Branched, ctx: &QContext) -> Complex64 {
    let l = tau.ln();
    l * l / (2.0 * ctx.ln_q) - l * 0.5 + ctx.ln_q / 8.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(q: f64) -> QContext {
        QContext::new(q).unwrap()
    }

    /// Oracle: raw bilateral sum with no annulus reduction, valid for
    /// moderate moduli. Returns the value and the absolute-term sum; the
    /// latter bounds the oracle's own cancellation error.
    fn brute_theta(v: Complex64, q: f64) -> (Complex64, f64) {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut scale = 0.0;
        for n in -80i32..=80 {
            let e = 0.5 * (n as f64) * ((n - 1) as f64);
            let term = (e * q.ln()).exp() * v.powi(n);
            sum += term;
            scale += term.norm();
        }
        (sum, scale)
    }

    #[test]
    fn product_matches_series_oracle() {
        for &q in &[0.2, 0.5, 0.8] {
            let c = ctx(q);
            for &(m, a) in &[(0.7, 0.4), (1.9, -2.0), (0.15, 2.9), (3.4, 1.2)] {
                let tau = Branched::new(m, a).unwrap();
                let got = theta_q(&tau, &c).unwrap();
                let (want, scale) = brute_theta(tau.value(), q);
                assert!(
                    (got - want).norm() <= 1e-13 * scale,
                    "q={q} tau=({m},{a})"
                );
            }
        }
    }

    #[test]
    fn series_path_agrees_with_product_path() {
        let c = ctx(0.35);
        for &(m, a) in &[(0.02, 0.3), (55.0, -1.4), (1.0, 1.0)] {
            let tau = Branched::new(m, a).unwrap();
            let p = theta_q(&tau, &c).unwrap();
            let s = theta_q_series(&tau, &c).unwrap();
            assert!((p - s).norm() <= 1e-12 * p.norm());
        }
    }

    #[test]
    fn zero_lattice_is_exact() {
        let c = ctx(0.5);
        for k in [-2i64, 0, 1, 3] {
            let tau = Branched::new(c.q_pow(k), std::f64::consts::PI).unwrap();
            let got = theta_q(&tau, &c).unwrap();
            assert_eq!(got, Complex64::new(0.0, 0.0), "k={k}");
        }
    }

    #[test]
    fn inversion_symmetry_holds() {
        // theta(q/tau) = theta(tau), from the bilateral reindex n -> -n.
        let c = ctx(0.4);
        let tau = Branched::new(0.77, 0.9).unwrap();
        let lhs = theta_q(&tau.recip().q_shift(&c, 1), &c).unwrap();
        let rhs = theta_q(&tau, &c).unwrap();
        assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm());
    }

    #[test]
    fn quasi_periodicity_exact_factor() {
        let c = ctx(0.3);
        let tau = Branched::new(0.6, 0.5).unwrap();
        let base = theta_q(&tau, &c).unwrap();
        for n in [-3i64, -1, 1, 2, 5] {
            let shifted = theta_q(&tau.q_shift(&c, n), &c).unwrap();
            let factor = (tau.ln() * (-n as f64) - binom2(n) * c.ln_q).exp();
            assert!(
                (shifted - base * factor).norm() <= 1e-12 * shifted.norm(),
                "n={n}"
            );
        }
    }

    #[test]
    fn logderiv_matches_finite_difference() {
        let c = ctx(0.45);
        let tau = Branched::new(0.82, 0.7).unwrap();
        let d = theta_q_logderiv(&tau, &c).unwrap();
        let h = 1e-6;
        let up = theta_q(&Branched::new(0.82 * (1.0 + h), 0.7).unwrap(), &c).unwrap();
        let dn = theta_q(&Branched::new(0.82 * (1.0 - h), 0.7).unwrap(), &c).unwrap();
        let mid = theta_q(&tau, &c).unwrap();
        // tau d/dtau log theta = (f(tau(1+h)) - f(tau(1-h))) / (2h f(tau))
        let fd = (up - dn) / (2.0 * h * mid);
        assert!((d - fd).norm() < 1e-7 * d.norm().max(1.0));
    }

    #[test]
    fn logderiv_shift_rule() {
        let c = ctx(0.45);
        let tau = Branched::new(0.82, 0.7).unwrap();
        let d0 = theta_q_logderiv(&tau, &c).unwrap();
        let d3 = theta_q_logderiv(&tau.q_shift(&c, 3), &c).unwrap();
        assert!((d3 - (d0 - 3.0)).norm() < 1e-11);
    }

    #[test]
    fn logderiv_pole_guard() {
        let c = ctx(0.45);
        let tau = Branched::new(0.45, std::f64::consts::PI).unwrap(); // -q
        assert!(matches!(
            theta_q_logderiv(&tau, &c),
            Err(QError::PoleAtParameter(_))
        ));
    }

    #[test]
    fn logderiv_prime_matches_finite_difference() {
        let c = ctx(0.45);
        let m = 0.82;
        let tau = Branched::new(m, 0.4).unwrap();
        let dp = theta_q_logderiv_prime(&tau, &c).unwrap();
        let h = 1e-5 * m;
        let up = theta_q_logderiv(&Branched::new(m + h, 0.4).unwrap(), &c).unwrap();
        let dn = theta_q_logderiv(&Branched::new(m - h, 0.4).unwrap(), &c).unwrap();
        // d/dtau along the ray arg = 0.4: divide by e^{i arg}.
        let fd = (up - dn) / (2.0 * h * Complex64::from_polar(1.0, 0.4));
        assert!((dp - fd).norm() < 1e-6 * dp.norm().max(1.0));
    }

    #[test]
    fn gaussian_kernel_on_power_lattice() {
        // E_q(q^x) = q^{(x - 1/2)^2 / 2}
        let c = ctx(0.35);
        for &x in &[0.0, 0.4, 1.7, -2.2] {
            let tau = Branched::new((x * c.ln_q).exp(), 0.0).unwrap();
            let got = e_q(&tau, &c).unwrap();
            let want = ((x - 0.5).powi(2) / 2.0 * c.ln_q).exp();
            assert!((got - Complex64::new(want, 0.0)).norm() < 1e-14 * want);
        }
    }

    #[test]
    fn gaussian_kernel_quasi_periodicity() {
        // E_q(q^n tau) = tau^n q^{n(n-1)/2} E_q(tau) for complex n; test n = 2
        // and the inversion E_q(1/tau) = tau E_q(tau).
        let c = ctx(0.5);
        let tau = Branched::new(1.3, 2.2).unwrap();
        let base = e_q(&tau, &c).unwrap();
        let shifted = e_q(&tau.q_shift(&c, 2), &c).unwrap();
        let factor = (tau.ln() * 2.0 + binom2(2) * c.ln_q).exp();
        assert!((shifted - base * factor).norm() <= 1e-13 * shifted.norm());

        let inv = e_q(&tau.recip(), &c).unwrap();
        assert!((inv - tau.value() * base).norm() <= 1e-13 * inv.norm());
    }

    #[test]
    fn log_theta_exponentiates_to_theta() {
        let c = ctx(0.4);
        for &(m, a) in &[(0.7, 0.3), (12.0, 2.0), (3e-4, -1.1), (2.0, 7.0)] {
            let tau = Branched::new(m, a).unwrap();
            let l = theta_q_ln(&tau, &c).unwrap();
            let want = theta_q(&tau, &c).unwrap();
            assert!(
                (l.exp() - want).norm() <= 1e-12 * want.norm(),
                "tau = ({m}, {a})"
            );
        }
        // Zero lattice: tau = -q^2.
        let z = Branched::new(0.16, std::f64::consts::PI).unwrap();
        assert_eq!(theta_q_ln(&z, &c).unwrap().re, f64::NEG_INFINITY);
    }

    #[test]
    fn log_theta_stays_finite_past_overflow() {
        // Deep on the lattice the quasi-periodicity factor alone exceeds f64;
        // check the log form against the exact shift rule
        // ln theta(q^{-k} tau) = ln theta(tau) - k ln tau + C(k,2) ln q ... in
        // exponent form: theta(tau) = tau^k q^{C(k,2)} theta(q^k tau).
        let c = ctx(0.5);
        let tau = Branched::new(0.8, 0.3).unwrap();
        let k = 70i64;
        let deep = tau.q_shift(&c, -k);
        let ld = theta_q_ln(&deep, &c).unwrap();
        assert!(ld.re.is_finite() && ld.re > 709.0);
        let l0 = theta_q_ln(&tau, &c).unwrap();
        let want = l0 + deep.ln() * (k as f64) + binom2(k) * c.ln_q;
        assert!((ld - want).norm() <= 1e-9 * ld.norm());
    }

    #[test]
    fn log_gaussian_matches_value_form() {
        let c = ctx(0.35);
        let tau = Branched::new(1.3, 2.2).unwrap();
        let l = e_q_ln(&tau, &c);
        let want = e_q(&tau, &c).unwrap();
        assert!((l.exp() - want).norm() <= 1e-13 * want.norm());
    }
}
