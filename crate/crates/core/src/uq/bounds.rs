//! Certified remainder envelopes. The family minus its divergent asymptotic
//! partial sum is bounded through one numeric constant: the supremum of the
//! entire solution over the right half t-plane against its product growth
//! envelope. One envelope covers the right half z-plane for every kind; the
//! sectors toward the negative axis each pay a kind-specific factor.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{QError, Result};
use crate::laplace::TransformKind;
use crate::qcore::{qpoch_inf, Branched, QContext};
use crate::series;

use super::reps::u_entire;
use super::{uq_default, UqPoint};

/// Where z sits, which decides the envelope factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Zone {
    HalfPlane,
    SectorE,
    SectorTheta,
    SectorDiscrete,
}

impl std::fmt::Display for Zone {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Zone::HalfPlane => "half-plane",
            Zone::SectorE => "sector-E",
            Zone::SectorTheta => "sector-theta",
            Zone::SectorDiscrete => "sector-discrete",
        };
        f.write_str(s)
    }
}

/// Measured remainder next to its certified envelope.
#[derive(Debug, Clone)]
pub struct RemainderBound {
    pub n: usize,
    pub remainder: Complex64,
    pub bound: f64,
    pub m_q: f64,
    pub c: f64,
    pub zone: Zone,
}

impl RemainderBound {
    pub fn holds(&self) -> bool {
        self.remainder.norm() <= self.bound
    }
}

pub(crate) fn estimate_mq_with_grid(
    a: Complex64,
    b: Complex64,
    moduli: usize,
    rays: usize,
    ctx: &QContext,
) -> Result<f64> {
    if a.norm() >= 1.0 || b.norm() >= 1.0 {
        return Err(QError::ConstraintViolation(
            "envelope constant needs |a| < 1 and |b| < 1".into(),
        ));
    }
    let c = a.norm().max(b.norm());
    let mut sup = 0.0f64;
    for i in 0..moduli {
        let r = 10f64.powf(-3.0 + 6.0 * i as f64 / (moduli - 1) as f64);
        let env = qpoch_inf(Complex64::new(-c * ctx.q * r, 0.0), ctx)?.re;
        for j in 0..rays {
            let phi = -FRAC_PI_2 + PI * j as f64 / (rays - 1) as f64;
            let t = Complex64::from_polar(r, phi);
            let u = u_entire(a, b, t, ctx)?;
            sup = sup.max(u.norm() / env);
        }
    }
    if !(sup.is_finite() && sup > 0.0) {
        return Err(QError::NonFinite("envelope constant".into()));
    }
    Ok(sup * 1.25)
}

/// Envelope constant: 1.25 times the sampled supremum of |u(t)| over the
/// product growth factor, on 61 log-spaced moduli times 12 rays covering
/// Re t >= 0.
pub fn estimate_mq(a: Complex64, b: Complex64, ctx: &QContext) -> Result<f64> {
    estimate_mq_with_grid(a, b, 61, 12, ctx)
}

/// Remainder after N asymptotic terms and its envelope at z. The continuous
/// kinds need N > 1 - ln c / ln q; the discrete kind instead needs a
/// positive real lattice and covers every positive N.
pub fn remainder_and_bound(
    kind: TransformKind,
    a: Complex64,
    b: Complex64,
    z: &Branched,
    n: usize,
    ctx: &QContext,
) -> Result<RemainderBound> {
    if n == 0 {
        return Err(QError::InvalidN(
            "remainder needs a positive truncation order".into(),
        ));
    }
    let c = a.norm().max(b.norm());
    match kind {
        TransformKind::Discrete(lambda) => {
            if lambda.im.abs() > 1e-12 * lambda.norm() || lambda.re <= 0.0 {
                return Err(QError::ConstraintViolation(
                    "discrete-kind envelope needs a positive real lattice".into(),
                ));
            }
        }
        _ => {
            if c > 0.0 && (n as f64) <= 1.0 - c.ln() / ctx.ln_q {
                return Err(QError::InvalidN(format!(
                    "order {n} too small: need N > 1 - ln c / ln q = {:.3}",
                    1.0 - c.ln() / ctx.ln_q
                )));
            }
        }
    }
    let spread = z.arg().abs();
    let zone = if spread <= FRAC_PI_2 + 1e-14 {
        Zone::HalfPlane
    } else if spread < PI {
        match kind {
            TransformKind::E => Zone::SectorE,
            TransformKind::Theta => Zone::SectorTheta,
            TransformKind::Discrete(_) => Zone::SectorDiscrete,
        }
    } else {
        return Err(QError::OutOfRange(
            "remainder envelopes cover |arg z| < pi".into(),
        ));
    };
    let m_q = estimate_mq(a, b, ctx)?;
    let point = UqPoint::new(a, b, z.clone(), kind, ctx)?;
    let value = uq_default(&point, ctx)?;
    let partial = series::phi20_coeffs(a, b, n, ctx)?.eval(z.value());
    let remainder = value - partial;

    let env = qpoch_inf(Complex64::new(c * ctx.q_pow(n as i64), 0.0), ctx)?.re;
    let mut bound = z.modulus().powi(n as i32) * point.k0(ctx)?.norm() * m_q
        / (ctx.q_pow_binom2(n as i64) * env);
    match zone {
        Zone::HalfPlane => {}
        Zone::SectorE | Zone::SectorTheta => {
            let zeta = spread - FRAC_PI_2;
            bound *= (-zeta * zeta / (2.0 * ctx.ln_q)).exp();
            if zone == Zone::SectorTheta {
                let root = ctx.q_hat.sqrt();
                bound *= (1.0 + root) / ((1.0 - root) * ctx.qh2_inf.powi(3));
            }
        }
        Zone::SectorDiscrete => {
            bound /= spread.sin().abs();
        }
    }
    Ok(RemainderBound {
        n,
        remainder,
        bound,
        m_q,
        c,
        zone,
    })
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
    fn envelope_constant_is_stable_under_grid_refinement() {
        let c = ctx();
        for (a, b) in [(cx(0.3), cx(0.2)), (cx(0.0), cx(0.0))] {
            let coarse = estimate_mq(a, b, &c).unwrap();
            let fine = estimate_mq_with_grid(a, b, 121, 24, &c).unwrap();
            assert!(coarse > 0.0 && coarse.is_finite());
            assert!(
                (fine - coarse).abs() <= 0.05 * coarse,
                "{coarse} vs {fine}"
            );
        }
    }

    #[test]
    fn envelope_constant_rejects_large_parameters() {
        let c = ctx();
        assert!(matches!(
            estimate_mq(cx(1.1), cx(0.2), &c),
            Err(QError::ConstraintViolation(_))
        ));
    }

    #[test]
    fn remainder_sits_under_its_envelope_in_the_half_plane() {
        let c = ctx();
        let (a, b) = (cx(0.3), cx(0.2));
        let z = Branched::positive(0.6).unwrap();
        for kind in [
            TransformKind::E,
            TransformKind::Theta,
            TransformKind::Discrete(cx(1.1)),
        ] {
            for n in 5..=12 {
                let r = remainder_and_bound(kind, a, b, &z, n, &c).unwrap();
                assert!(r.zone == Zone::HalfPlane);
                assert!(
                    r.holds(),
                    "{kind} N={n}: |R| = {} > {}",
                    r.remainder.norm(),
                    r.bound
                );
            }
        }
    }

    #[test]
    fn remainder_sits_under_its_envelope_in_the_sector() {
        let c = ctx();
        let (a, b) = (cx(0.3), cx(0.2));
        let z = Branched::new(0.6, 3.0 * PI / 4.0).unwrap();
        let r = remainder_and_bound(TransformKind::E, a, b, &z, 6, &c).unwrap();
        assert_eq!(r.zone, Zone::SectorE);
        assert!(r.holds());
        let r = remainder_and_bound(TransformKind::Theta, a, b, &z, 6, &c).unwrap();
        assert_eq!(r.zone, Zone::SectorTheta);
        assert!(r.holds());
        let r =
            remainder_and_bound(TransformKind::Discrete(cx(1.1)), a, b, &z, 6, &c).unwrap();
        assert_eq!(r.zone, Zone::SectorDiscrete);
        assert!(r.holds());
    }

    #[test]
    fn remainder_rejections() {
        let c = ctx();
        let (a, b) = (cx(0.3), cx(0.2));
        let z = Branched::positive(0.6).unwrap();
        assert!(matches!(
            remainder_and_bound(TransformKind::E, a, b, &z, 0, &c),
            Err(QError::InvalidN(_))
        ));
        let wide = Branched::new(0.6, -1.2 * PI).unwrap();
        assert!(matches!(
            remainder_and_bound(TransformKind::E, a, b, &wide, 6, &c),
            Err(QError::OutOfRange(_))
        ));
        let lam = TransformKind::Discrete(Complex64::new(0.9, 0.4));
        assert!(matches!(
            remainder_and_bound(lam, a, b, &z, 6, &c),
            Err(QError::ConstraintViolation(_))
        ));
    }

    #[test]
    fn first_omitted_term_controls_the_remainder_near_zero() {
        let c = ctx();
        let (a, b) = (cx(0.3), cx(0.2));
        for n in 1..=8usize {
            for z in [
                Branched::positive(0.1).unwrap(),
                Branched::new(0.05, 1.2).unwrap(),
            ] {
                let point = UqPoint::new(a, b, z.clone(), TransformKind::E, &c).unwrap();
                let value = uq_default(&point, &c).unwrap();
                let coeffs = series::phi20_coeffs(a, b, n + 1, &c).unwrap();
                let partial: Complex64 = coeffs
                    .coeffs()
                    .iter()
                    .take(n)
                    .rev()
                    .copied()
                    .fold(Complex64::new(0.0, 0.0), |acc, cn| acc * z.value() + cn);
                let omitted = coeffs.coeffs()[n] * z.value().powi(n as i32);
                assert!(
                    (value - partial).norm() <= 2.0 * omitted.norm(),
                    "N={n} z={z:?}"
                );
            }
        }
    }
}
