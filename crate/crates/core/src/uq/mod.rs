//! The resummed two-parameter family U(a, b; z) in its three transform
//! kinds: all integral/sum/contour representations, the difference-equation
//! structure around z = 0 and z = infinity, connection formulas with
//! q-periodic multipliers, remainder bounds, parameter recurrences, and the
//! continued fraction attached to the family.

mod bounds;
mod connection;
mod recur;
mod reps;
mod structure;

pub use bounds::{estimate_mq, remainder_and_bound, RemainderBound, Zone};
pub use connection::{
    connection_confluent, connection_infinity, pk_e_via_theta1, pk_lambda_via_residue_sum,
    pk_multiplier, pk_theta_via_partial_fractions, pk_theta_via_theta1,
};
pub use recur::{cf_convergent, cf_gap, cf_seed_residual, recurrence_residuals, CfGap};
pub use structure::{
    monodromy_jump, ode_residual, ode_residual_fn, wronskian_residual, wronskian_residual_with,
    y2, y2_alt, y_infinity,
};

use num_complex::Complex64;

use crate::error::{QError, Result};
use crate::laplace::TransformKind;
use crate::qcore::{qpoch_inf_many, Branched, QContext};
use crate::quad::{self, KernelKind};

pub(crate) use reps::u_entire;

/// One evaluation point of the family.
#[derive(Debug, Clone)]
pub struct UqPoint {
    pub a: Complex64,
    pub b: Complex64,
    pub z: Branched,
    pub kind: TransformKind,
}

impl UqPoint {
    /// Validates the kind and, for the discrete kind, that z stays off the
    /// pole lattice -q^n lambda. Representation-specific constraints are
    /// checked by each evaluation path.
    pub fn new(
        a: Complex64,
        b: Complex64,
        z: Branched,
        kind: TransformKind,
        ctx: &QContext,
    ) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(QError::NonFinite("parameters a, b".into()));
        }
        kind.validate(ctx)?;
        if let TransformKind::Discrete(lambda) = kind {
            if let Some(n) = quad::near_q_lattice(-z.value() / lambda, 1e-8, ctx) {
                return Err(QError::PoleAtLattice(format!(
                    "z within 1e-8 of the pole lattice point -q^{n} lambda"
                )));
            }
        }
        Ok(UqPoint { a, b, z, kind })
    }

    /// Same parameters and kind at another z.
    pub fn at(&self, z: Branched, ctx: &QContext) -> Result<Self> {
        Self::new(self.a, self.b, z, self.kind, ctx)
    }

    /// Same z and kind with other parameters.
    pub fn with_params(&self, a: Complex64, b: Complex64, ctx: &QContext) -> Result<Self> {
        Self::new(a, b, self.z.clone(), self.kind, ctx)
    }

    /// Kernel of the continuous kinds; the discrete kind has none.
    pub(crate) fn kernel(&self) -> Option<KernelKind> {
        match self.kind {
            TransformKind::E => Some(KernelKind::E),
            TransformKind::Theta => Some(KernelKind::Theta),
            TransformKind::Discrete(_) => None,
        }
    }

    /// Prefactor (a; q)_inf (b; q)_inf / (q; q)_inf shared by several
    /// representations.
    pub(crate) fn k0(&self, ctx: &QContext) -> Result<Complex64> {
        Ok(qpoch_inf_many(&[self.a, self.b], ctx)? / ctx.q_factorial_inf())
    }
}

/// Which representation evaluates the point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UqMethod {
    /// Resummed coefficient function under the kind's transform.
    Borel,
    /// Single rising product times an entire confluent factor.
    Phi11,
    /// Elementary products only; needs |aq| < 1.
    Poch,
    /// Parameter-symmetric products; needs |abz| < 1.
    Symmetric,
    /// Pole-kernel average of the large-argument solution; needs |a|, |b| < 1.
    CauchyHeine,
    /// Vertical-line contour between the two pole ladders.
    MellinBarnes,
}

impl UqMethod {
    pub const ALL: [UqMethod; 6] = [
        UqMethod::Borel,
        UqMethod::Phi11,
        UqMethod::Poch,
        UqMethod::Symmetric,
        UqMethod::CauchyHeine,
        UqMethod::MellinBarnes,
    ];
}

impl std::str::FromStr for UqMethod {
    type Err = QError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "borel" => Ok(UqMethod::Borel),
            "phi11" => Ok(UqMethod::Phi11),
            "poch" => Ok(UqMethod::Poch),
            "symmetric" => Ok(UqMethod::Symmetric),
            "cauchy_heine" => Ok(UqMethod::CauchyHeine),
            "mellin_barnes" => Ok(UqMethod::MellinBarnes),
            _ => Err(QError::OutOfRange(format!("unknown method '{s}'"))),
        }
    }
}

impl std::fmt::Display for UqMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            UqMethod::Borel => "borel",
            UqMethod::Phi11 => "phi11",
            UqMethod::Poch => "poch",
            UqMethod::Symmetric => "symmetric",
            UqMethod::CauchyHeine => "cauchy_heine",
            UqMethod::MellinBarnes => "mellin_barnes",
        };
        f.write_str(s)
    }
}

/// Evaluates the point through the selected representation. All methods
/// admissible at a point agree; that agreement is the main test surface.
pub fn uq(point: &UqPoint, method: UqMethod, ctx: &QContext) -> Result<Complex64> {
    match method {
        UqMethod::Borel => reps::borel(point, ctx),
        UqMethod::Phi11 => reps::phi11(point, ctx),
        UqMethod::Poch => reps::poch(point, ctx),
        UqMethod::Symmetric => reps::symmetric(point, ctx),
        UqMethod::CauchyHeine => reps::cauchy_heine(point, ctx),
        UqMethod::MellinBarnes => reps::mellin_barnes(point, ctx),
    }
}

/// Default evaluation: the simplest integrand when its window |abz| < 1
/// holds, otherwise the unconstrained single-product path.
pub fn uq_default(point: &UqPoint, ctx: &QContext) -> Result<Complex64> {
    if (point.a * point.b * point.z.value()).norm() < 1.0 {
        uq(point, UqMethod::Symmetric, ctx)
    } else {
        uq(point, UqMethod::Phi11, ctx)
    }
}
