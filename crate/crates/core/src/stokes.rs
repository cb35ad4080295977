//! The universal q-periodic functions that measure the exponentially small
//! gaps between the three resummations, their removable limits on the power
//! lattice, their monodromy, and the Cauchy-Heine machinery that rebuilds
//! each transform from a jump density on the positive axis.

use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

use crate::error::{QError, Result};
use crate::laplace::TransformKind;
use crate::qcore::{
    binom2, cdiv, ln_qpoch_inf, one_minus_p_q, p_q, qpoch_inf_many, theta_q, theta_q_logderiv,
    Branched, QContext, TailRule,
};
use crate::quad::{self, KernelKind, QuadratureSpec};
use crate::uq::u_entire;

/// Selects one of the two q-periodic gap functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GapFn {
    /// Gap between the reciprocal-theta and Gaussian-kernel transforms.
    C,
    /// Gap between the reciprocal-theta transform and the lattice sum
    /// through the carried point.
    D(Complex64),
}

/// Evaluation route for the continuous gap function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PqcMethod {
    /// Dual-nome sine series; the analytic continuation, valid on every
    /// sheet.
    Series,
    /// Weighted log-derivative integral over one multiplicative period;
    /// principal sheet only, since the integrand's poles in z fill the
    /// negative axis and turn it into a cut.
    Integral,
}

/// qhat^{n^2} / sinh(n ln qhat) in overflow-free form: equals
/// -2 exp((n^2 + n) ln qhat) / (1 - exp(2n ln qhat)) since ln qhat < 0.
fn dual_coeff(n: u64, ctx: &QContext) -> f64 {
    let lqh = ctx.ln_q_hat;
    let nf = n as f64;
    -2.0 * ((nf * nf + nf) * lqh).exp() / (1.0 - (2.0 * nf * lqh).exp())
}

fn neg_one(m: i64) -> f64 {
    if m.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// The continuous gap function: q-periodic, odd under z -> 1/z, vanishing
/// on the power lattice q^Z, and of size O(qhat) on the positive axis.
pub fn pqc(z: &Branched, method: PqcMethod, ctx: &QContext) -> Result<Complex64> {
    match method {
        PqcMethod::Series => {
            let w0 = z.ln() * (TAU / ctx.ln_q);
            let mut sum = Complex64::new(0.0, 0.0);
            let mut sign = -1.0;
            let mut tail = TailRule::new();
            for n in 1..=(ctx.max_terms as u64) {
                let term = sign * dual_coeff(n, ctx) * (w0 * n as f64).sin();
                sum += term;
                sign = -sign;
                if tail.absorb(term.norm(), ctx.eps * 1e-3) {
                    break;
                }
            }
            Ok(-TAU / ctx.ln_q * sum)
        }
        PqcMethod::Integral => {
            if z.arg().abs() >= PI {
                return Err(QError::OutOfRange(format!(
                    "the period-integral form needs |arg z| < pi, got {}",
                    z.arg()
                )));
            }
            let zv = z.value();
            let f = |v: f64| -> Result<Complex64> {
                let t = v.exp();
                let weight = p_q(&Branched::positive(t)?, ctx)?;
                let ld = theta_q_logderiv(&Branched::from_complex(t / zv)?, ctx)?;
                Ok(weight * ld)
            };
            let integral = simpson(&f, ctx.ln_q, 0.0, ctx)?;
            Ok(z.ln() / ctx.ln_q + integral / ctx.ln_q)
        }
    }
}

/// The discrete gap function: assembled from the theta log-derivative at the
/// lattice base point and at its image under z, plus the branched ln z term
/// that carries all of the monodromy.
pub fn pqd(z: &Branched, lambda: Complex64, ctx: &QContext) -> Result<Complex64> {
    let at_base = theta_q_logderiv(&Branched::from_complex(lambda)?, ctx)?;
    let at_image = theta_q_logderiv(&Branched::from_complex(lambda / z.value())?, ctx)?;
    Ok(at_base - at_image + z.ln() / ctx.ln_q)
}

/// Closed form for pqd(z; l1) - pqd(z; l2): a ratio of seven theta factors.
/// The z-dependence collapses because the gap between two lattice sums is a
/// single sum of residues over one period annulus.
pub fn pqd_lambda_difference(
    z: &Branched,
    l1: Complex64,
    l2: Complex64,
    ctx: &QContext,
) -> Result<Complex64> {
    let zv = z.value();
    let th = |w: Complex64| -> Result<Complex64> { theta_q(&Branched::from_complex(w)?, ctx) };
    let num = th(-zv)? * th(-l1 / l2)? * th(-l1 * l2 / zv)?;
    let den = th(l1)? * th(l2)? * th(l1 / zv)? * th(zv / l2)?;
    if den.norm() < 1e-250 {
        return Err(QError::PoleAtParameter(
            "a theta factor in the lattice-difference denominator vanished".into(),
        ));
    }
    Ok(ctx.q_factorial_inf().powi(3) * num / den)
}

/// Bilateral series sum_{n in Z} w / (1 + w)^2 with w = lambda q^n: the
/// lambda d/dlambda slope of the theta log-derivative, summed directly.
fn logderiv_slope_sum(lambda: Complex64, ctx: &QContext) -> Result<Complex64> {
    if lambda.norm() == 0.0 || !lambda.is_finite() {
        return Err(QError::NonFinite("slope sum needs a finite nonzero base".into()));
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for dir in [1i64, -1] {
        let mut tail = TailRule::new();
        let mut n = if dir == 1 { 0 } else { -1 };
        loop {
            let w = lambda * ctx.q_pow(n);
            let d = 1.0 + w;
            if d.norm() < 1e-8 {
                return Err(QError::PoleAtParameter(format!(
                    "slope sum pole at lattice index {n}"
                )));
            }
            sum += w / (d * d);
            if tail.absorb((w / (d * d)).norm(), ctx.eps * 1e-3) {
                break;
            }
            n += dir;
            if n.unsigned_abs() as usize > ctx.max_terms {
                return Err(QError::TruncationFailure {
                    what: "logderiv slope sum".into(),
                    terms: ctx.max_terms,
                });
            }
        }
    }
    Ok(sum)
}

/// Limit of P(z) / theta_q(-z) as z -> q^m along the principal sheet. Both
/// factors vanish linearly there; the ratio is the finite value the
/// difference formulas need on the lattice.
pub fn removable_limit(which: GapFn, m: i64, ctx: &QContext) -> Result<Complex64> {
    let prefactor = (binom2(m) * ctx.ln_q).exp() / ctx.q_factorial_inf().powi(3);
    match which {
        GapFn::C => {
            let mut sum = 0.0;
            let mut sign = -1.0;
            let mut tail = TailRule::new();
            for n in 1..=(ctx.max_terms as u64) {
                let term = sign * dual_coeff(n, ctx) * n as f64;
                sum += term;
                sign = -sign;
                if tail.absorb(term.abs(), ctx.eps * 1e-3) {
                    break;
                }
            }
            let square = (TAU / ctx.ln_q) * (TAU / ctx.ln_q);
            Ok(Complex64::new(neg_one(m) * prefactor * square * sum, 0.0))
        }
        GapFn::D(lambda) => {
            let slope = logderiv_slope_sum(lambda, ctx)?;
            Ok(neg_one(m - 1) * prefactor * (1.0 / ctx.ln_q + slope))
        }
    }
}

/// m with z = q^m (1 + O(tol)) on the principal sheet, if any.
fn near_power_point(z: &Branched, tol: f64, ctx: &QContext) -> Option<i64> {
    if z.arg().abs() > tol {
        return None;
    }
    let m = (z.modulus().ln() / ctx.ln_q).round() as i64;
    let p = ctx.q_pow(m);
    if p > 0.0 && p.is_finite() && (z.value() / p - 1.0).norm() < tol {
        Some(m)
    } else {
        None
    }
}

/// P(z) / theta_q(-z) with the removable points z = q^m filled in from their
/// closed-form limits. Within a relative 1e-4 of a lattice point the direct
/// quotient has lost about four digits to cancellation, so the limit value
/// takes over there.
pub fn gap_over_theta(which: GapFn, z: &Branched, ctx: &QContext) -> Result<Complex64> {
    if let Some(m) = near_power_point(z, 1e-4, ctx) {
        return removable_limit(which, m, ctx);
    }
    let p = match which {
        GapFn::C => pqc(z, PqcMethod::Series, ctx)?,
        GapFn::D(lambda) => pqd(z, lambda, ctx)?,
    };
    let th = theta_q(&z.rotated(PI), ctx)?;
    if th.norm() < 1e-250 {
        return Err(QError::PoleAtParameter(
            "theta_q(-z) vanished away from the principal lattice; the gap \
             ratio is only removable on the principal sheet"
                .into(),
        ));
    }
    Ok(cdiv(p, th))
}

/// One full turn of z: returns (measured, closed) where measured is
/// P(z e^{2 pi i}) - P(z) from two evaluations with unwrapped arguments and
/// closed is the jump the weight function prescribes. The discrete jump is a
/// constant; the continuous jump is carried entirely by the dual-nome tail
/// of the weight at the half-period point.
pub fn stokes_monodromy(which: GapFn, z: &Branched, ctx: &QContext) -> Result<(Complex64, Complex64)> {
    let z1 = z.rotated(TAU);
    match which {
        GapFn::C => {
            let measured =
                pqc(&z1, PqcMethod::Series, ctx)? - pqc(z, PqcMethod::Series, ctx)?;
            let closed = Complex64::new(0.0, TAU / ctx.ln_q)
                * one_minus_p_q(&z.rotated(PI), ctx)?;
            Ok((measured, closed))
        }
        GapFn::D(lambda) => {
            let measured = pqd(&z1, lambda, ctx)? - pqd(z, lambda, ctx)?;
            Ok((measured, Complex64::new(0.0, TAU / ctx.ln_q)))
        }
    }
}

/// Closed form for the difference between the reciprocal-theta resummation
/// and the other kind: U^theta - U^other = K0 u(-z) (-z) P(z) / theta_q(-z),
/// the second solution of the difference equation times the gap function.
/// theta_q(-qz) = theta_q(-z) / (-z) folds the quasi-period into the (-z)
/// factor so the removable fill carries over unchanged.
pub fn kind_difference(
    a: Complex64,
    b: Complex64,
    z: &Branched,
    other: TransformKind,
    ctx: &QContext,
) -> Result<Complex64> {
    let which = match other {
        TransformKind::E => GapFn::C,
        TransformKind::Discrete(lambda) => GapFn::D(lambda),
        TransformKind::Theta => {
            return Err(QError::OutOfRange(
                "the gap functions compare the reciprocal-theta transform \
                 with one of the other two kinds"
                    .into(),
            ))
        }
    };
    let k0 = qpoch_inf_many(&[a, b], ctx)? / ctx.q_factorial_inf();
    let entire = u_entire(a, b, -z.value(), ctx)?;
    Ok(k0 * entire * (-z.value()) * gap_over_theta(which, z, ctx)?)
}

/// Envelope constant for the jump-density growth gate.
const GROWTH_C: f64 = 0.95;

/// The hypothesis behind the reconstruction: the density must stay below a
/// multiple of the rising product at some rate below one. Probed on
/// geometric radii along four rays; a log-ratio that keeps climbing across
/// the top radii cannot come from an admissible density.
fn growth_check<F>(s_ln: &F, ctx: &QContext) -> Result<()>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let mut ratios = Vec::with_capacity(13);
    for j in 0..=12i64 {
        let r = ctx.q_pow(-j);
        let envelope = ln_qpoch_inf(Complex64::new(-GROWTH_C * r, 0.0), ctx)?.re;
        let mut worst = f64::NEG_INFINITY;
        for arg in [0.0, 0.5 * PI, PI, -0.5 * PI] {
            worst = worst.max(s_ln(Complex64::from_polar(r, arg))?.re);
        }
        ratios.push(worst - envelope);
    }
    let early = ratios[..7]
        .iter()
        .fold(f64::NEG_INFINITY, |acc, &r| acc.max(r));
    if ratios[10..]
        .iter()
        .all(|&r| r > early + std::f64::consts::LN_10)
    {
        return Err(QError::GrowthViolation(format!(
            "density-to-envelope log ratio climbed from {early:.3} to {:.3} \
             over the top radii; no rate below one admits this",
            ratios[12]
        )));
    }
    Ok(())
}

/// Rebuilds the selected transform from its jump density on the positive
/// axis: the value whose kernel weighs s(-t) / (t + z). The density enters
/// through its logarithm (principal logs of its factors are fine) because a
/// product density's magnitude leaves f64 range while the kernel-weighted
/// terms are still alive; the log-space engines keep the tail honest out to
/// where it genuinely dies. All three kinds take the same density, which is
/// what makes their differences collapse to the gap functions.
pub fn cauchy_heine_reconstruct<F>(
    kind: TransformKind,
    s_ln: &F,
    z: &Branched,
    ctx: &QContext,
) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    growth_check(s_ln, ctx)?;
    if z.arg().abs() >= PI {
        return Err(QError::OutOfRange(format!(
            "the density integral needs the pole at -z off the positive \
             axis: |arg z| < pi, got {}",
            z.arg()
        )));
    }
    let zv = z.value();
    let anchor = Branched::positive(1.0)?;
    match kind {
        TransformKind::E | TransformKind::Theta => {
            let f_ln = |t: &Branched| -> Result<Complex64> {
                let tv = t.value();
                Ok(s_ln(-tv)? + tv.ln() - (tv + zv).ln())
            };
            let kernel = if matches!(kind, TransformKind::E) {
                KernelKind::E
            } else {
                KernelKind::Theta
            };
            Ok(
                quad::integrate_halfline_ln(&f_ln, &anchor, kernel, &QuadratureSpec::auto(), ctx)?
                    .value,
            )
        }
        TransformKind::Discrete(lambda) => {
            let f_ln =
                |t: Complex64| -> Result<Complex64> { Ok(s_ln(-t)? + t.ln() - (t + zv).ln()) };
            Ok(quad::bilateral_lattice_sum_ln(&f_ln, lambda, &anchor, ctx)?.value)
        }
    }
}

/// Moment n of the weight gap between the two continuous kernels: the
/// reciprocal-theta integral of (1 - P_q(t)) t^n. Every nonnegative integer
/// moment vanishes, because both kernels send t^n to the same shifted
/// monomial; this is what lets one jump density serve all kinds.
pub fn weight_gap_moment(n: u32, ctx: &QContext) -> Result<Complex64> {
    let f = |t: &Branched| -> Result<Complex64> {
        Ok(one_minus_p_q(t, ctx)? * t.powf(n as f64 + 1.0))
    };
    let anchor = Branched::positive(1.0)?;
    Ok(quad::integrate_halfline(&f, &anchor, KernelKind::Theta, &QuadratureSpec::auto(), ctx)?
        .value)
}

/// Composite Simpson on [a, b] with panel doubling until two passes agree
/// relative to the integrand's L1 mass.
fn simpson<F>(f: &F, a: f64, b: f64, ctx: &QContext) -> Result<Complex64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let mut panels = 64usize;
    let mut prev: Option<Complex64> = None;
    for _ in 0..14 {
        let h = (b - a) / panels as f64;
        let mut sum = f(a)? + f(b)?;
        let mut l1 = sum.norm();
        for k in 1..panels {
            let v = f(a + h * k as f64)?;
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            sum += v * w;
            l1 += v.norm() * w;
        }
        let cur = sum * (h / 3.0);
        if let Some(p) = prev {
            if (cur - p).norm() <= ctx.eps * (l1 * h / 3.0).max(1e-300) {
                return Ok(cur);
            }
        }
        prev = Some(cur);
        panels *= 2;
    }
    Err(QError::NoConvergence(
        "period integral did not stabilise under panel doubling".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uq::{uq_default, UqPoint};

    fn ctx(q: f64) -> QContext {
        QContext::new(q).unwrap()
    }

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn continuous_gap_vanishes_at_one_and_is_odd_under_inversion() {
        let c = ctx(0.3);
        let one = Branched::positive(1.0).unwrap();
        assert!(pqc(&one, PqcMethod::Series, &c).unwrap().norm() < 1e-16);

        let z = Branched::positive(0.37).unwrap();
        let p = pqc(&z, PqcMethod::Series, &c).unwrap();
        let pinv = pqc(&z.recip(), PqcMethod::Series, &c).unwrap();
        assert!((pinv + p).norm() <= 1e-13 * p.norm());
    }

    #[test]
    fn series_and_integral_paths_agree() {
        let c = ctx(0.05);
        let z = Branched::positive(0.42).unwrap();
        let s = pqc(&z, PqcMethod::Series, &c).unwrap();
        let i = pqc(&z, PqcMethod::Integral, &c).unwrap();
        assert!((s - i).norm() <= 1e-9 * s.norm(), "{s} vs {i}");

        let c = ctx(0.1);
        let z = Branched::new(0.4, 0.7).unwrap();
        let s = pqc(&z, PqcMethod::Series, &c).unwrap();
        let i = pqc(&z, PqcMethod::Integral, &c).unwrap();
        assert!((s - i).norm() <= 1e-8 * s.norm(), "{s} vs {i}");
    }

    #[test]
    fn integral_path_refuses_the_cut() {
        let c = ctx(0.1);
        let z = Branched::new(0.4, PI).unwrap();
        assert!(matches!(
            pqc(&z, PqcMethod::Integral, &c),
            Err(QError::OutOfRange(_))
        ));
    }

    #[test]
    fn both_gaps_are_q_periodic_in_z() {
        let c = ctx(0.05);
        let z = Branched::new(0.7, 0.9).unwrap();
        let p0 = pqc(&z, PqcMethod::Series, &c).unwrap();
        let p1 = pqc(&z.q_shift(&c, 1), PqcMethod::Series, &c).unwrap();
        assert!((p0 - p1).norm() <= 1e-11 * p0.norm().max(1e-6));

        let c = ctx(0.3);
        let z = Branched::new(0.6, -0.4).unwrap();
        let lambda = c64(0.8, 0.0);
        let d0 = pqd(&z, lambda, &c).unwrap();
        let d1 = pqd(&z.q_shift(&c, 1), lambda, &c).unwrap();
        assert!((d0 - d1).norm() <= 1e-11 * d0.norm().max(1.0));
    }

    #[test]
    fn discrete_gap_vanishes_at_one_and_is_q_periodic_in_lambda() {
        let c = ctx(0.3);
        let one = Branched::positive(1.0).unwrap();
        let lambda = c64(0.8, 0.0);
        assert!(pqd(&one, lambda, &c).unwrap().norm() < 1e-14);

        let z = Branched::new(0.6, -0.4).unwrap();
        let d0 = pqd(&z, lambda, &c).unwrap();
        let d1 = pqd(&z, lambda * c.q, &c).unwrap();
        assert!((d0 - d1).norm() <= 1e-11 * d0.norm().max(1.0));
    }

    #[test]
    fn lambda_difference_matches_theta_quotient() {
        let c = ctx(0.3);
        let z = Branched::positive(0.4).unwrap();
        let (l1, l2) = (c64(0.7, 0.0), c64(1.3, 0.0));
        let direct = pqd(&z, l1, &c).unwrap() - pqd(&z, l2, &c).unwrap();
        let closed = pqd_lambda_difference(&z, l1, l2, &c).unwrap();
        assert!(
            (direct - closed).norm() <= 1e-10 * closed.norm(),
            "{direct} vs {closed}"
        );
    }

    #[test]
    fn removable_limits_match_nearby_ratios() {
        let c = ctx(0.05);
        for which in [GapFn::C, GapFn::D(c64(0.8, 0.0))] {
            for m in [0i64, 1] {
                let lim = removable_limit(which, m, &c).unwrap();
                let z = Branched::positive(c.q_pow(m) * (1.0 + 1e-5)).unwrap();
                let p = match which {
                    GapFn::C => pqc(&z, PqcMethod::Series, &c).unwrap(),
                    GapFn::D(l) => pqd(&z, l, &c).unwrap(),
                };
                let th = theta_q(&z.rotated(PI), &c).unwrap();
                let near = p / th;
                assert!(
                    (near - lim).norm() <= 1e-4 * lim.norm(),
                    "{which:?} m={m}: {near} vs {lim}"
                );
            }
        }
    }

    #[test]
    fn removable_prefactor_ladder() {
        let c = ctx(0.2);
        for which in [GapFn::C, GapFn::D(c64(0.8, 0.0))] {
            for m in [-1i64, 0, 1, 2] {
                let lo = removable_limit(which, m, &c).unwrap();
                let hi = removable_limit(which, m + 1, &c).unwrap();
                let want = lo * (-c.q_pow(m));
                assert!(
                    (hi - want).norm() <= 1e-12 * hi.norm(),
                    "{which:?} m={m}"
                );
            }
        }
    }

    #[test]
    fn slope_sum_matches_logderiv_prime() {
        use crate::qcore::theta_q_logderiv_prime;
        for &q in &[0.3, 0.05] {
            let c = ctx(q);
            for lambda in [c64(0.8, 0.0), c64(0.5, 0.3)] {
                let sum = logderiv_slope_sum(lambda, &c).unwrap();
                let tau = Branched::from_complex(lambda).unwrap();
                let want = lambda * theta_q_logderiv_prime(&tau, &c).unwrap();
                assert!(
                    (sum - want).norm() <= 1e-11 * want.norm(),
                    "q={q} lambda={lambda}"
                );
            }
        }
    }

    #[test]
    fn gap_ratio_switches_to_the_limit_near_the_lattice() {
        let c = ctx(0.05);
        let inside = Branched::positive(1.0 + 1e-6).unwrap();
        let lim = removable_limit(GapFn::C, 0, &c).unwrap();
        assert_eq!(gap_over_theta(GapFn::C, &inside, &c).unwrap(), lim);
        // A full turn lands on the same value of z but not on the principal
        // sheet, where the theta zero is a genuine pole of the ratio.
        let turned = Branched::positive(1.0).unwrap().rotated(TAU);
        assert!(gap_over_theta(GapFn::C, &turned, &c).is_err());
    }

    #[test]
    fn discrete_monodromy_is_the_constant_jump() {
        let c = ctx(0.05);
        let z = Branched::new(0.37, 1.1).unwrap();
        let (measured, closed) = stokes_monodromy(GapFn::D(c64(0.9, 0.0)), &z, &c).unwrap();
        assert_eq!(closed, c64(0.0, TAU / c.ln_q));
        assert!((measured - closed).norm() <= 1e-12 * closed.norm());
    }

    #[test]
    fn continuous_monodromy_matches_the_weight_tail() {
        let c = ctx(0.05);
        let z = Branched::positive(0.5).unwrap();
        let (measured, closed) = stokes_monodromy(GapFn::C, &z, &c).unwrap();
        assert!(
            (measured - closed).norm() <= 1e-9 * closed.norm(),
            "{measured} vs {closed}"
        );
    }

    #[test]
    fn continuous_monodromy_shrinks_as_q_falls() {
        // Off the principal axis the weight deviates from 1 by an order-one
        // oscillation, so the turn jump scales like 2 pi / |ln q| and
        // decreases toward q = 0.
        let z = Branched::positive(0.5).unwrap();
        let jump = |q: f64| {
            let c = ctx(q);
            stokes_monodromy(GapFn::C, &z, &c).unwrap().0.norm()
        };
        let (j05, j10, j30) = (jump(0.05), jump(0.1), jump(0.3));
        assert!(j05 < j10 && j10 < j30);
        assert!(j05 < 0.5 * j30);
    }

    #[test]
    fn kind_differences_match_measured_transform_gaps() {
        let c = ctx(0.01);
        let (a, b) = (c64(0.2, 0.0), c64(0.1, 0.0));
        let z = Branched::positive(0.4).unwrap();
        let lambda = c64(0.9, 0.0);

        let value = |kind: TransformKind| {
            let p = UqPoint::new(a, b, z.clone(), kind, &c).unwrap();
            uq_default(&p, &c).unwrap()
        };
        let u_theta = value(TransformKind::Theta);

        for other in [TransformKind::E, TransformKind::Discrete(lambda)] {
            let measured = u_theta - value(other);
            let closed = kind_difference(a, b, &z, other, &c).unwrap();
            assert!(closed.norm() > 1e-9);
            assert!(
                (measured - closed).norm() <= 1e-6 * closed.norm(),
                "{other:?}: {measured} vs {closed}"
            );
        }
    }

    #[test]
    fn unit_density_reconstruction_gaps_are_the_gap_functions() {
        let c = ctx(0.05);
        let z = Branched::positive(0.4).unwrap();
        let s_ln = |_t: Complex64| Ok(c64(0.0, 0.0));
        let via = |kind| cauchy_heine_reconstruct(kind, &s_ln, &z, &c).unwrap();

        let theta = via(TransformKind::Theta);
        let gap_c = theta - via(TransformKind::E);
        let want_c = gap_over_theta(GapFn::C, &z, &c).unwrap();
        assert!((gap_c - want_c).norm() <= 1e-8 * want_c.norm(), "{gap_c} vs {want_c}");

        let lambda = c64(0.9, 0.0);
        let gap_d = theta - via(TransformKind::Discrete(lambda));
        let want_d = gap_over_theta(GapFn::D(lambda), &z, &c).unwrap();
        assert!((gap_d - want_d).norm() <= 1e-7 * want_d.norm(), "{gap_d} vs {want_d}");
    }

    #[test]
    fn rising_product_density_obeys_both_difference_laws() {
        let c = ctx(0.05);
        let z = Branched::positive(0.4).unwrap();
        let s_ln = |t: Complex64| ln_qpoch_inf(-0.3 * t, &c);
        let via = |kind| cauchy_heine_reconstruct(kind, &s_ln, &z, &c).unwrap();
        let s_at_z = qpoch_inf(-0.3 * z.value(), &c).unwrap();

        let theta = via(TransformKind::Theta);
        let gap_c = theta - via(TransformKind::E);
        let want_c = s_at_z * gap_over_theta(GapFn::C, &z, &c).unwrap();
        assert!((gap_c - want_c).norm() <= 1e-7 * want_c.norm(), "{gap_c} vs {want_c}");

        let lambda = c64(0.9, 0.0);
        let gap_d = theta - via(TransformKind::Discrete(lambda));
        let want_d = s_at_z * gap_over_theta(GapFn::D(lambda), &z, &c).unwrap();
        assert!((gap_d - want_d).norm() <= 1e-7 * want_d.norm(), "{gap_d} vs {want_d}");
    }

    #[test]
    fn growth_gate_rejects_a_rate_above_one() {
        let c = ctx(0.05);
        let z = Branched::positive(0.4).unwrap();
        let s = |t: Complex64| qpoch_inf(-2.0 * t, &c);
        assert!(matches!(
            cauchy_heine_reconstruct(TransformKind::Theta, &s, &z, &c),
            Err(QError::GrowthViolation(_))
        ));
    }

    #[test]
    fn weight_gap_moments_vanish() {
        for &q in &[0.3, 0.5] {
            let c = ctx(q);
            for n in 0..=2u32 {
                let moment = weight_gap_moment(n, &c).unwrap();
                let scale = (-binom2(n as i64 + 1) * c.ln_q).exp();
                assert!(
                    moment.norm() <= 1e-9 * scale,
                    "q={q} n={n}: {moment} against scale {scale}"
                );
            }
        }
    }

    #[test]
    fn weighted_logderiv_period_integral_vanishes() {
        // The weight is even in ln t around the period midpoint while the
        // log-derivative is odd there, so the period integral is zero; the
        // integral route for the continuous gap relies on this.
        for &q in &[0.1, 0.4] {
            let c = ctx(q);
            let f = |v: f64| -> Result<Complex64> {
                let t = v.exp();
                let weight = p_q(&Branched::positive(t)?, &c)?;
                let ld = theta_q_logderiv(&Branched::positive(t)?, &c)?;
                Ok(weight * ld)
            };
            let integral = simpson(&f, c.ln_q, 0.0, &c).unwrap();
            assert!(integral.norm() < 1e-10, "q={q}: {integral}");
        }
    }
}
