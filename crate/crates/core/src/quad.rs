//! Quadrature engines: half-line integrals against the E_q and 1/theta_q
//! kernels in log scale, bilateral lattice sums, and vertical-line contour
//! integrals. All engines return a diagnostics record alongside the value.

use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

use crate::error::{QError, Result};
use crate::qcore::{cdiv, e_q, e_q_ln, theta_q, theta_q_ln, Branched, QContext, TailRule};

/// Consecutive below-threshold grid points required before a tail is cut.
const TAIL_RUN: usize = 8;
/// Hard cap on grid points per side.
const SIDE_CAP: usize = 400_000;
/// Maximum step halvings during refinement.
const MAX_REFINE: usize = 6;

/// Kernel selector: kappa_E(tau) = C_q E_q(tau) or
/// kappa_theta(tau) = -1 / (ln q * theta_q(tau)).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    E,
    Theta,
}

/// kappa of the selected kind. The theta kernel refuses points within 1e-8
/// of its pole lattice -q^n; kernel underflow (huge |ln tau|) returns 0.
pub fn kernel(kind: KernelKind, tau: &Branched, ctx: &QContext) -> Result<Complex64> {
    match kind {
        KernelKind::E => {
            let e = e_q(tau, ctx)?;
            Ok(ctx.c_q * e)
        }
        KernelKind::Theta => {
            let v = tau.value();
            let d = theta_pole_distance(v, ctx);
            if d < 1e-8 {
                return Err(QError::PoleAtParameter(format!(
                    "theta kernel pole: tau = {v} within {d:e} of -q^n"
                )));
            }
            let th = theta_q(tau, ctx)?;
            if !th.is_finite() {
                // theta overflow means the kernel underflowed.
                return Ok(Complex64::new(0.0, 0.0));
            }
            Ok(cdiv(Complex64::new(-1.0, 0.0), ctx.ln_q * th))
        }
    }
}

/// ln kappa of the selected kind. The integrands this serves mix factors
/// whose individual magnitudes leave f64 range while their product stays
/// tame, so the kernel contributes its exponent instead of its value.
pub fn kernel_ln(kind: KernelKind, tau: &Branched, ctx: &QContext) -> Result<Complex64> {
    match kind {
        KernelKind::E => Ok(ctx.c_q.ln() + e_q_ln(tau, ctx)),
        KernelKind::Theta => {
            let v = tau.value();
            let d = theta_pole_distance(v, ctx);
            if d < 1e-8 {
                return Err(QError::PoleAtParameter(format!(
                    "theta kernel pole: tau = {v} within {d:e} of -q^n"
                )));
            }
            // kappa = -1 / (ln q * theta), and -1/ln q > 0.
            Ok((-ctx.ln_q).recip().ln() - theta_q_ln(tau, ctx)?)
        }
    }
}

/// exp(w) under the clamp shared by the log-space engines: deep underflow is
/// an honest zero, while overflow or NaN is a hard error. The comparison
/// `!(w.re <= 709)` also catches a NaN real part.
fn exp_clamped(w: Complex64, site: impl FnOnce() -> String) -> Result<Complex64> {
    if w.re <= -745.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if !(w.re <= 709.0) || !w.im.is_finite() {
        return Err(QError::NonFinite(format!(
            "log-space term at {}: exponent {w}",
            site()
        )));
    }
    Ok(w.exp())
}

/// Relative distance from v to the nearest point of {-q^n : n integer},
/// scaled by that point's modulus so the guard stays meaningful as the
/// lattice accumulates at 0.
fn theta_pole_distance(v: Complex64, ctx: &QContext) -> f64 {
    let r = v.norm();
    if r == 0.0 || !r.is_finite() {
        return f64::INFINITY;
    }
    let n0 = (r.ln() / ctx.ln_q).round() as i64;
    let mut d = f64::INFINITY;
    for n in n0 - 1..=n0 + 1 {
        let p = ctx.q_pow(n);
        if p > 0.0 && p.is_finite() {
            d = d.min((v + p).norm() / p);
        }
    }
    d
}

fn wrap_angle(x: f64) -> f64 {
    let mut w = x % TAU;
    if w > PI {
        w -= TAU;
    } else if w <= -PI {
        w += TAU;
    }
    w
}

/// Grid for the half-line engine, in the variable u with t = e^{u + i zeta}.
///
/// The default contour stays on the positive axis for every z. The kernel
/// argument t/z then carries the full unwrapped -arg z, which is what makes
/// the Gaussian-kind transform branch across sheets; rotating the ray along
/// with z would re-anchor the kernel on each sheet and flatten that jump.
#[derive(Debug, Clone)]
pub struct QuadratureSpec {
    pub step_h: f64,
    /// Minimum half-width around the log-scale center; the walk extends
    /// further until the integrand tail dies.
    pub half_width: f64,
    pub ray_angle: f64,
    pub refine: bool,
}

impl QuadratureSpec {
    pub fn auto() -> Self {
        QuadratureSpec {
            step_h: 0.1,
            half_width: 4.0,
            ray_angle: 0.0,
            refine: true,
        }
    }

    pub fn with_ray(zeta: f64) -> Self {
        QuadratureSpec {
            ray_angle: zeta,
            ..Self::auto()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.step_h > 0.0 && self.step_h <= 0.25) {
            return Err(QError::OutOfRange(format!(
                "step_h = {} not in (0, 0.25]",
                self.step_h
            )));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) || !self.ray_angle.is_finite()
        {
            return Err(QError::OutOfRange("bad half_width or ray_angle".into()));
        }
        Ok(())
    }
}

/// Vertical line Re s = sigma, truncated adaptively beyond +-trunc_t.
#[derive(Debug, Clone)]
pub struct ContourSpec {
    pub sigma: f64,
    pub trunc_t: f64,
    pub step: f64,
}

impl ContourSpec {
    pub fn new(sigma: f64, trunc_t: f64, step: f64) -> Result<Self> {
        if !sigma.is_finite() || !(trunc_t > 0.0) || !(step > 0.0 && step <= 0.25) {
            return Err(QError::OutOfRange(format!(
                "bad contour: sigma={sigma} trunc_t={trunc_t} step={step}"
            )));
        }
        Ok(ContourSpec {
            sigma,
            trunc_t,
            step,
        })
    }

    /// Checks that sigma lies strictly inside the pole-separating interval.
    pub fn validated(self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < self.sigma && self.sigma < hi) {
            return Err(QError::BadAbscissa {
                sigma: self.sigma,
                lo,
                hi,
            });
        }
        Ok(self)
    }
}

/// Value plus diagnostics from any of the engines.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub value: Complex64,
    /// Total integrand/term evaluations across all passes.
    pub evaluations: usize,
    /// |I(h) - I(h/2)| from the last refinement step (NaN if refine was off).
    pub last_delta: f64,
    /// L1 mass of the final pass; the roundoff floor scales with it.
    pub l1_scale: f64,
}

/// One-directional trapezoid walk: sums g(k) for k = start, start + dir, ...
/// until TAIL_RUN consecutive terms fall below eps_tail times the running
/// max, with at least min_pts points taken first.
fn walk(
    g: &mut dyn FnMut(i64) -> Result<Complex64>,
    start: i64,
    dir: i64,
    min_pts: i64,
    eps_tail: f64,
    label: &str,
) -> Result<(Complex64, f64, usize)> {
    let mut sum = CSum::default();
    let mut l1 = 0.0f64;
    let mut max = 0.0f64;
    let mut below = 0usize;
    let mut k = start;
    let mut n = 0usize;
    loop {
        let v = g(k)?;
        sum.add(v);
        let nv = v.norm();
        l1 += nv;
        if nv > max {
            max = nv;
        }
        n += 1;
        if nv <= eps_tail * max && (k - start) * dir >= min_pts {
            below += 1;
            if below >= TAIL_RUN {
                break;
            }
        } else {
            below = 0;
        }
        if n >= SIDE_CAP {
            return Err(QError::TruncationFailure {
                what: label.to_string(),
                terms: n,
            });
        }
        k += dir;
    }
    Ok((sum.value(), l1, n))
}

/// Step-halving wrapper shared by the half-line and contour engines.
fn refine_loop(
    pass: &mut dyn FnMut(f64) -> Result<(Complex64, f64, usize)>,
    h0: f64,
    refine: bool,
    eps: f64,
    label: &str,
) -> Result<Quadrature> {
    let (mut prev, mut l1, mut evals) = pass(h0)?;
    if !refine {
        return Ok(Quadrature {
            value: prev,
            evaluations: evals,
            last_delta: f64::NAN,
            l1_scale: l1,
        });
    }
    let mut h = h0;
    let mut delta = f64::NAN;
    for _ in 0..MAX_REFINE {
        h /= 2.0;
        let (cur, l1c, n) = pass(h)?;
        evals += n;
        delta = (cur - prev).norm();
        // The 1e-13 * l1 term is the roundoff floor for near-zero integrals.
        let tol = (eps * cur.norm()).max(1e-13 * l1c).max(1e-300);
        if delta <= tol {
            return Ok(Quadrature {
                value: cur,
                evaluations: evals,
                last_delta: delta,
                l1_scale: l1c,
            });
        }
        prev = cur;
        l1 = l1c;
    }
    let _ = l1;
    Err(QError::NoConvergence(format!(
        "{label}: last iterates differ by {delta:e} at step {h:e} (value near {prev})"
    )))
}

/// Grid layout and tail/refine control shared by the half-line engines.
/// `term` receives u = ln|t|, the ray point t, and the kernel argument t/z,
/// and returns one finished grid term (integrand times nothing; the trapezoid
/// weight h is applied here).
fn halfline_core(
    term: &dyn Fn(f64, &Branched, &Branched) -> Result<Complex64>,
    z: &Branched,
    kind: KernelKind,
    spec: &QuadratureSpec,
    ctx: &QContext,
) -> Result<Quadrature> {
    spec.validate()?;
    let zeta = spec.ray_angle;
    let rel_arg = zeta - z.arg();
    if kind == KernelKind::Theta {
        let gap = (wrap_angle(rel_arg).abs() - PI).abs();
        if gap < 1e-6 {
            return Err(QError::PoleOnRay { dist: gap });
        }
    }
    let center = z.modulus().ln();
    let zmod = z.modulus();
    let eps_tail = ctx.eps * 1e-3;

    let mut pass = |h: f64| -> Result<(Complex64, f64, usize)> {
        let mut g = |k: i64| -> Result<Complex64> {
            let u = center + k as f64 * h;
            let m = u.exp();
            let mt = m / zmod;
            if m == 0.0 || !m.is_finite() || mt == 0.0 || !mt.is_finite() {
                // A healthy tail dies orders of magnitude before t leaves
                // double range; reaching this point means it has not.
                return Err(QError::NoConvergence(format!(
                    "half-line tail still live at u = {u:.0}, where t leaves \
                     double range; the integrand decays too slowly or \
                     diverges on this ray"
                )));
            }
            let tau = Branched::new(mt, rel_arg)?;
            let t = Branched::new(m, zeta)?;
            term(u, &t, &tau)
        };
        let min_pts = ((spec.half_width / h).ceil() as i64).max(16);
        let (right, l1r, nr) = walk(&mut g, 0, 1, min_pts, eps_tail, "half-line right tail")?;
        let (left, l1l, nl) = walk(&mut g, -1, -1, min_pts, eps_tail, "half-line left tail")?;
        Ok(((right + left) * h, (l1r + l1l) * h, nr + nl))
    };
    refine_loop(
        &mut pass,
        spec.step_h,
        spec.refine,
        ctx.eps,
        "half-line quadrature",
    )
}

/// Trapezoid evaluation of int_0^inf f(t) kappa(t/z) dt/t along the ray
/// arg t = spec.ray_angle, in the variable u = ln|t|. The integrand handle
/// receives t with its unwrapped ray angle, so branched handles see a
/// consistent argument; the kernel argument t/z carries arg = zeta - arg z
/// exactly.
pub fn integrate_halfline<F>(
    f: &F,
    z: &Branched,
    kind: KernelKind,
    spec: &QuadratureSpec,
    ctx: &QContext,
) -> Result<Quadrature>
where
    F: Fn(&Branched) -> Result<Complex64>,
{
    let term = |u: f64, t: &Branched, tau: &Branched| -> Result<Complex64> {
        // Kernel first: where it underflows to zero, f may be far out of
        // range and must not be touched.
        let kv = kernel(kind, tau, ctx)?;
        if kv.re == 0.0 && kv.im == 0.0 {
            return Ok(kv);
        }
        let fv = f(t)?;
        let gv = fv * kv;
        if !gv.is_finite() {
            return Err(QError::NonFinite(format!(
                "half-line integrand at u = {u}: f = {fv}, kernel = {kv}"
            )));
        }
        Ok(gv)
    };
    halfline_core(&term, z, kind, spec, ctx)
}

/// Same integral as [`integrate_halfline`], with the integrand factor
/// supplied through its logarithm. Each grid term is assembled as
/// exp(ln f + ln kappa), so pochhammer-type factors whose values overflow
/// f64 long before the combined term's tail dies remain evaluable. exp of a
/// sum of per-factor logs equals the product on any branch, so `f_ln` may
/// return principal logs of its factors.
pub fn integrate_halfline_ln<F>(
    f_ln: &F,
    z: &Branched,
    kind: KernelKind,
    spec: &QuadratureSpec,
    ctx: &QContext,
) -> Result<Quadrature>
where
    F: Fn(&Branched) -> Result<Complex64>,
{
    let term = |u: f64, t: &Branched, tau: &Branched| -> Result<Complex64> {
        let w = f_ln(t)? + kernel_ln(kind, tau, ctx)?;
        exp_clamped(w, || format!("half-line u = {u}"))
    };
    halfline_core(&term, z, kind, spec, ctx)
}

/// Shared frame for the lattice sums: pole-lattice validation and the
/// two-directional tail-ruled accumulation of `term(n, q^n lambda)`.
fn lattice_core(
    term: &dyn Fn(i64, Complex64) -> Result<Complex64>,
    lambda: Complex64,
    z: &Branched,
    ctx: &QContext,
) -> Result<Quadrature> {
    let zv = z.value();
    if lambda.norm() == 0.0 {
        return Err(QError::OutOfRange("lambda must be nonzero".into()));
    }
    if let Some(n) = near_q_lattice(-lambda, 1e-8, ctx) {
        return Err(QError::PoleAtLattice(format!(
            "lambda = {lambda} within 1e-8 of -q^{n}"
        )));
    }
    if let Some(n) = near_q_lattice(-zv / lambda, 1e-8, ctx) {
        return Err(QError::PoleAtLattice(format!(
            "z = {zv} within 1e-8 of the lattice point -q^{n} lambda"
        )));
    }

    let mut sum = CSum::default();
    let mut l1 = 0.0f64;
    let mut evals = 0usize;
    for dir in [1i64, -1] {
        let mut tail = TailRule::new();
        let mut n = if dir == 1 { 0 } else { -1 };
        loop {
            let v = term(n, lambda * ctx.q_pow(n))?;
            sum.add(v);
            l1 += v.norm();
            evals += 1;
            if tail.absorb(v.norm(), ctx.eps * 1e-2) {
                break;
            }
            if evals > ctx.max_terms {
                return Err(QError::TruncationFailure {
                    what: "bilateral lattice sum".into(),
                    terms: evals,
                });
            }
            n += dir;
        }
    }
    Ok(Quadrature {
        value: sum.value(),
        evaluations: evals,
        last_delta: f64::NAN,
        l1_scale: l1,
    })
}

/// Bilateral lattice sum sum_n f(q^n lambda) / theta_q(q^n lambda / z),
/// the discrete transform evaluated on the geometric lattice through lambda.
pub fn bilateral_lattice_sum<F>(
    f: &F,
    lambda: Complex64,
    z: &Branched,
    ctx: &QContext,
) -> Result<Quadrature>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let zv = z.value();
    let term = |n: i64, t: Complex64| -> Result<Complex64> {
        let tau = Branched::from_complex(t / zv)?;
        let th = theta_q(&tau, ctx)?;
        if !th.is_finite() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if th.norm() < 1e-250 {
            return Err(QError::PoleAtLattice(format!(
                "theta vanished at lattice index {n}"
            )));
        }
        Ok(cdiv(f(t)?, th))
    };
    lattice_core(&term, lambda, z, ctx)
}

/// The same lattice sum with f supplied through its logarithm; each term is
/// exp(ln f - ln theta). Where the value path has to drop terms whose theta
/// denominator overflows, this path keeps them until they genuinely leave
/// f64 range, which matters for slowly decaying summands.
pub fn bilateral_lattice_sum_ln<F>(
    f_ln: &F,
    lambda: Complex64,
    z: &Branched,
    ctx: &QContext,
) -> Result<Quadrature>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    // ln 1e-250: below this the theta denominator counts as a pole hit,
    // matching the value engine's guard.
    const LN_THETA_FLOOR: f64 = -575.0;
    let zv = z.value();
    let term = |n: i64, t: Complex64| -> Result<Complex64> {
        let tau = Branched::from_complex(t / zv)?;
        let lt = theta_q_ln(&tau, ctx)?;
        if lt.re < LN_THETA_FLOOR {
            return Err(QError::PoleAtLattice(format!(
                "theta vanished at lattice index {n}"
            )));
        }
        let w = f_ln(t)? - lt;
        exp_clamped(w, || format!("lattice index {n}"))
    };
    lattice_core(&term, lambda, z, ctx)
}

/// n with |v - q^n| <= tol, if any (v essentially positive real).
pub(crate) fn near_q_lattice(v: Complex64, tol: f64, ctx: &QContext) -> Option<i64> {
    if v.im.abs() > tol || v.re <= 0.0 {
        return None;
    }
    let n0 = (v.re.ln() / ctx.ln_q).round() as i64;
    (n0 - 1..=n0 + 1).find(|&n| (v.re - ctx.q_pow(n)).abs() <= tol)
}

/// Trapezoid along the vertical line s = sigma + i y, y in [-T, T] extended
/// adaptively: returns i h Sigma f(s_k); the 2 pi i normalization is the
/// caller's.
pub fn mb_line_integral<F>(f: &F, spec: &ContourSpec, ctx: &QContext) -> Result<Quadrature>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let eps_tail = ctx.eps * 1e-3;
    let mut pass = |h: f64| -> Result<(Complex64, f64, usize)> {
        let mut g = |k: i64| -> Result<Complex64> {
            let s = Complex64::new(spec.sigma, k as f64 * h);
            let v = f(s)?;
            if !v.is_finite() {
                return Err(QError::NonFinite(format!("contour integrand at s = {s}")));
            }
            Ok(v)
        };
        let min_pts = ((spec.trunc_t / h).ceil() as i64).max(16);
        let (up, l1u, nu) = walk(&mut g, 0, 1, min_pts, eps_tail, "contour upper tail")?;
        let (dn, l1d, nd) = walk(&mut g, -1, -1, min_pts, eps_tail, "contour lower tail")?;
        Ok((
            Complex64::new(0.0, h) * (up + dn),
            (l1u + l1d) * h,
            nu + nd,
        ))
    };
    refine_loop(&mut pass, spec.step, true, ctx.eps, "contour quadrature")
}

/// Compensated (Neumaier) accumulator, componentwise over re/im.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CSum {
    sr: f64,
    cr: f64,
    si: f64,
    ci: f64,
}

impl CSum {
    fn add1(s: &mut f64, c: &mut f64, v: f64) {
        let t = *s + v;
        if s.abs() >= v.abs() {
            *c += (*s - t) + v;
        } else {
            *c += (v - t) + *s;
        }
        *s = t;
    }

    pub(crate) fn add(&mut self, v: Complex64) {
        Self::add1(&mut self.sr, &mut self.cr, v.re);
        Self::add1(&mut self.si, &mut self.ci, v.im);
    }

    pub(crate) fn value(&self) -> Complex64 {
        Complex64::new(self.sr + self.cr, self.si + self.ci)
    }
}
