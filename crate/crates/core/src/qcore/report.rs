//! Plumbing types for identity checks: parameter records and per-check
//! reports with absolute/relative errors.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::qcore::Branched;

/// Relative-error floor so identities whose both sides vanish do not divide
/// by zero.
const REL_FLOOR: f64 = 1e-300;

/// Serializable complex number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cx {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for Cx {
    fn from(z: Complex64) -> Self {
        Cx { re: z.re, im: z.im }
    }
}

impl Cx {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Named parameter values of one check point, ordered deterministically.
#[derive(Debug, Clone, Default, Serialize)]
#[serde(transparent)]
pub struct ParamPoint(BTreeMap<String, f64>);

impl ParamPoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(mut self, name: &str, value: f64) -> Self {
        self.0.insert(name.to_owned(), value);
        self
    }

    pub fn set_complex(mut self, name: &str, value: Complex64) -> Self {
        self.0.insert(format!("{name}.re"), value.re);
        self.0.insert(format!("{name}.im"), value.im);
        self
    }

    pub fn set_branched(mut self, name: &str, value: &Branched) -> Self {
        self.0.insert(format!("{name}.modulus"), value.modulus());
        self.0.insert(format!("{name}.arg"), value.arg());
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }
}

/// Outcome of one identity/property check at one parameter point.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub identity_id: String,
    pub point: ParamPoint,
    pub lhs: Cx,
    pub rhs: Cx,
    pub abs_err: f64,
    pub rel_err: f64,
    pub pass: bool,
    pub note: String,
}

impl VerificationReport {
    /// Two independently computed sides; passes when the relative error
    /// (normalised by the larger side) stays within `tol`.
    pub fn compare(
        identity_id: &str,
        point: ParamPoint,
        lhs: Complex64,
        rhs: Complex64,
        tol: f64,
    ) -> Self {
        let abs_err = (lhs - rhs).norm();
        let rel_err = abs_err / lhs.norm().max(rhs.norm()).max(REL_FLOOR);
        VerificationReport {
            identity_id: identity_id.to_owned(),
            point,
            lhs: lhs.into(),
            rhs: rhs.into(),
            abs_err,
            rel_err,
            pass: rel_err <= tol,
            note: String::new(),
        }
    }

    /// A quantity whose true value is zero; passes when |value| <= tol * scale.
    pub fn residual(
        identity_id: &str,
        point: ParamPoint,
        value: Complex64,
        scale: f64,
        tol: f64,
    ) -> Self {
        let abs_err = value.norm();
        let rel_err = abs_err / scale.abs().max(REL_FLOOR);
        VerificationReport {
            identity_id: identity_id.to_owned(),
            point,
            lhs: value.into(),
            rhs: Complex64::new(0.0, 0.0).into(),
            abs_err,
            rel_err,
            pass: rel_err <= tol,
            note: String::new(),
        }
    }

    /// A check that could not be evaluated at all.
    pub fn failed(identity_id: &str, point: ParamPoint, note: &str) -> Self {
        VerificationReport {
            identity_id: identity_id.to_owned(),
            point,
            lhs: Complex64::new(f64::NAN, 0.0).into(),
            rhs: Complex64::new(f64::NAN, 0.0).into(),
            abs_err: f64::INFINITY,
            rel_err: f64::INFINITY,
            pass: false,
            note: note.to_owned(),
        }
    }

    pub fn with_note(mut self, note: &str) -> Self {
        self.note = note.to_owned();
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compare_normalises_by_larger_side() {
        let r = VerificationReport::compare(
            "x",
            ParamPoint::new().set("q", 0.5),
            Complex64::new(10.0, 0.0),
            Complex64::new(10.0 + 1e-6, 0.0),
            1e-6,
        );
        assert!((r.rel_err - 1e-7).abs() < 1e-12);
        assert!(r.pass);
    }

    #[test]
    fn residual_uses_supplied_scale() {
        let r = VerificationReport::residual(
            "x",
            ParamPoint::new(),
            Complex64::new(0.0, 2e-9),
            2.0,
            1e-9,
        );
        assert!((r.rel_err - 1e-9).abs() < 1e-22);
        assert!(r.pass);
    }

    #[test]
    fn both_sides_zero_still_passes() {
        let r = VerificationReport::compare(
            "x",
            ParamPoint::new(),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            1e-12,
        );
        assert_eq!(r.abs_err, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn point_round_trips_fields() {
        let p = ParamPoint::new()
            .set("q", 0.3)
            .set_complex("z", Complex64::new(1.0, -2.0))
            .set_branched("tau", &Branched::new(0.7, 4.0).unwrap());
        assert_eq!(p.get("q"), Some(0.3));
        assert_eq!(p.get("z.im"), Some(-2.0));
        assert_eq!(p.get("tau.arg"), Some(4.0));
    }

    #[test]
    fn reports_serialize_to_json() {
        let r = VerificationReport::compare(
            "bridge",
            ParamPoint::new().set("q", 0.5),
            Complex64::new(1.0, 2.0),
            Complex64::new(1.0, 2.0),
            1e-9,
        );
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"identity_id\":\"bridge\""));
        assert!(s.contains("\"pass\":true"));
    }
}
