//! Branched complex numbers: a positive modulus together with an unwrapped
//! argument. The argument is *not* reduced mod 2 pi, so values on different
//! sheets of the logarithm stay distinguishable. Multivalued functions take
//! this type; single-valued ones may collapse it with [`Branched::value`].

use num_complex::Complex64;

use crate::error::{QError, Result};
use crate::qcore::QContext;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branched {
    modulus: f64,
    arg: f64,
}

impl Branched {
    /// Construct from modulus > 0 and an unwrapped argument in radians.
    pub fn new(modulus: f64, arg: f64) -> Result<Self> {
        if !modulus.is_finite() || !arg.is_finite() {
            return Err(QError::NonFinite("branched modulus/arg".into()));
        }
        if modulus <= 0.0 {
            return Err(QError::OutOfRange(format!(
                "branched modulus {modulus} must be positive"
            )));
        }
        Ok(Branched { modulus, arg })
    }

    /// Promote an ordinary complex number using its principal argument.
    pub fn from_complex(z: Complex64) -> Result<Self> {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(QError::NonFinite("complex promotion".into()));
        }
        let m = z.norm();
        if m <= 0.0 {
            return Err(QError::OutOfRange("cannot promote zero".into()));
        }
        Ok(Branched {
            modulus: m,
            arg: z.im.atan2(z.re),
        })
    }

    /// A positive real point on the principal sheet.
    pub fn positive(x: f64) -> Result<Self> {
        Branched::new(x, 0.0)
    }

    pub fn modulus(&self) -> f64 {
        self.modulus
    }

    pub fn arg(&self) -> f64 {
        self.arg
    }

    /// The underlying single-valued complex number.
    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.modulus, self.arg)
    }

    /// Unwrapped logarithm: ln|z| + i arg with the stored (unreduced) arg.
    pub fn ln(&self) -> Complex64 {
        Complex64::new(self.modulus.ln(), self.arg)
    }

    /// z^w = exp(w ln z) on the current sheet.
    pub fn pow(&self, w: Complex64) -> Complex64 {
        (w * self.ln()).exp()
    }

    pub fn powf(&self, x: f64) -> Complex64 {
        (self.ln() * x).exp()
    }

    /// Branch-tracking product: moduli multiply, arguments add.
    pub fn mul(&self, rhs: &Branched) -> Branched {
        Branched {
            modulus: self.modulus * rhs.modulus,
            arg: self.arg + rhs.arg,
        }
    }

    /// Branch-tracking quotient.
    pub fn div(&self, rhs: &Branched) -> Branched {
        Branched {
            modulus: self.modulus / rhs.modulus,
            arg: self.arg - rhs.arg,
        }
    }

    pub fn recip(&self) -> Branched {
        Branched {
            modulus: 1.0 / self.modulus,
            arg: -self.arg,
        }
    }

    /// Rotate by `dphi` on the same modulus (moves across sheets freely).
    pub fn rotated(&self, dphi: f64) -> Branched {
        Branched {
            modulus: self.modulus,
            arg: self.arg + dphi,
        }
    }

    /// Multiply by e^{i pi}: the convention used for `-z` in branched formulas.
    pub fn rotated_pi(&self) -> Branched {
        self.rotated(std::f64::consts::PI)
    }

    /// Scale by a positive real factor.
    pub fn scaled(&self, c: f64) -> Result<Branched> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(QError::OutOfRange(format!(
                "branched scale factor {c} must be positive"
            )));
        }
        Ok(Branched {
            modulus: self.modulus * c,
            arg: self.arg,
        })
    }

    /// Multiply by q^m for integer m (argument unchanged).
    pub fn q_shift(&self, ctx: &QContext, m: i64) -> Branched {
        Branched {
            modulus: self.modulus * ctx.q_pow(m),
            arg: self.arg,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_and_ln_round_trip() {
        let b = Branched::new(2.0, 0.3).unwrap();
        let v = b.value();
        assert!((v - Complex64::from_polar(2.0, 0.3)).norm() < 1e-15);
        let l = b.ln();
        assert!((l.re - 2.0f64.ln()).abs() < 1e-15);
        assert_eq!(l.im, 0.3);
    }

    #[test]
    fn arg_survives_full_turns() {
        let b = Branched::new(1.5, 0.2).unwrap();
        let turned = b.rotated(2.0 * std::f64::consts::PI);
        // Same complex value, different sheet.
        assert!((turned.value() - b.value()).norm() < 1e-14);
        assert!((turned.ln() - b.ln() - Complex64::new(0.0, 2.0 * std::f64::consts::PI)).norm() < 1e-14);
    }

    #[test]
    fn promotion_uses_principal_branch() {
        let b = Branched::from_complex(Complex64::new(-1.0, 0.0)).unwrap();
        assert!((b.arg() - std::f64::consts::PI).abs() < 1e-15);
        assert!(Branched::from_complex(Complex64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn rejects_nonpositive_modulus() {
        assert!(Branched::new(0.0, 1.0).is_err());
        assert!(Branched::new(-2.0, 1.0).is_err());
        assert!(Branched::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn pow_on_second_sheet_differs() {
        let b = Branched::new(1.0, 0.0).unwrap();
        let up = b.rotated(2.0 * std::f64::consts::PI);
        let w = Complex64::new(0.5, 0.0);
        // sqrt(1) on sheet 0 is 1; one turn up it is -1.
        assert!((b.pow(w) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((up.pow(w) + Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }
}
