//! Basic hypergeometric series: one-sided r_phi_s, bilateral r_psi_s, the
//! divergent 2phi0 coefficient stream, the q-Borel transform, Stieltjes-Wigert
//! polynomials, and the digamma-like sum Psi_q.

use num_complex::Complex64;

use crate::error::{QError, Result};
use crate::qcore::{QContext, TailRule};

/// Snap-to-lattice tolerance for terminating-parameter detection.
const TERMINATION_TOL: f64 = 1e-12;
/// Largest terminating order recognised by the snap rule.
const TERMINATION_MAX: i64 = 60;
/// Bilateral-series pole clearance for a_j near q^{m+1}.
const PSI_POLE_TOL: f64 = 1e-10;
/// Hard cap on materialized coefficient streams.
const COEFF_CAP: usize = 200;
/// Coefficients beyond this magnitude would soon leave f64 range.
const COEFF_OVERFLOW: f64 = 1e280;

/// Parameters of a basic hypergeometric series: upper a_1..a_r over lower
/// b_1..b_s in base ctx.q.
#[derive(Debug, Clone)]
pub struct PhiParams {
    upper: Vec<Complex64>,
    lower: Vec<Complex64>,
}

impl PhiParams {
    /// Validates that no lower parameter sits on the forbidden lattice
    /// q^{-m}, which would zero a denominator factor.
    pub fn new(upper: Vec<Complex64>, lower: Vec<Complex64>, ctx: &QContext) -> Result<Self> {
        for b in &lower {
            if let Some(m) = lattice_order(*b, ctx) {
                return Err(QError::PoleAtParameter(format!(
                    "lower parameter {b} equals q^(-{m})"
                )));
            }
        }
        Ok(PhiParams { upper, lower })
    }

    pub fn upper(&self) -> &[Complex64] {
        &self.upper
    }

    pub fn lower(&self) -> &[Complex64] {
        &self.lower
    }

    /// Smallest m with some a_i = q^{-m} (to snap tolerance): the series
    /// terminates after the t^m term.
    pub fn terminating_order(&self, ctx: &QContext) -> Option<usize> {
        self.upper
            .iter()
            .filter_map(|a| lattice_order(*a, ctx))
            .min()
            .map(|m| m as usize)
    }
}

/// m >= 0 such that v = q^{-m} within the snap tolerance.
fn lattice_order(v: Complex64, ctx: &QContext) -> Option<i64> {
    if v.im != 0.0 || v.re <= 0.0 {
        return None;
    }
    for m in 0..=TERMINATION_MAX {
        let lat = ctx.q_pow(-m);
        if (v.re - lat).abs() <= TERMINATION_TOL * (1.0 + lat) {
            return Some(m);
        }
    }
    None
}

/// Finite power series sum coeffs[n] t^n.
#[derive(Debug, Clone, PartialEq)]
pub struct FormalSeries {
    coeffs: Vec<Complex64>,
}

impl FormalSeries {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(QError::NonFinite("series coefficient".into()));
        }
        Ok(FormalSeries { coeffs })
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Horner evaluation of the partial sum.
    pub fn eval(&self, t: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * t + c)
    }
}

/// One-sided r_phi_s(a_1..a_r; b_1..b_s; q, z): terms
/// (a's;q)_n / ((q;q)_n (b's;q)_n) ((-1)^n q^{n(n-1)/2})^{1+s-r} z^n.
///
/// Converges for r < s+1, or r = s+1 with |z| < 1, or whenever an upper
/// parameter terminates the series.
pub fn phi(params: &PhiParams, z: Complex64, ctx: &QContext) -> Result<Complex64> {
    let r = params.upper.len() as i64;
    let s = params.lower.len() as i64;
    let excess = (1 + s - r) as i32;
    let cap = params.terminating_order(ctx);
    if cap.is_none() {
        if excess < 0 {
            return Err(QError::DivergentSeries(format!(
                "{r}phi{s} diverges for every z != 0; resum it instead"
            )));
        }
        if excess == 0 && z.norm() >= 1.0 {
            return Err(QError::DivergentSeries(format!(
                "{r}phi{s} needs |z| < 1, got {}",
                z.norm()
            )));
        }
    }

    let mut sum = Complex64::new(1.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    let mut tail = TailRule::new();
    let mut n: i64 = 0;
    loop {
        if let Some(m) = cap {
            if n >= m as i64 {
                break;
            }
        }
        let qn = ctx.q_pow(n);
        let mut ratio = z / (1.0 - ctx.q_pow(n + 1));
        for a in &params.upper {
            ratio *= 1.0 - a * qn;
        }
        for b in &params.lower {
            ratio /= 1.0 - b * qn;
        }
        ratio *= (-qn).powi(excess);
        term *= ratio;
        sum += term;
        n += 1;
        if cap.is_none() && tail.absorb(term.norm(), ctx.eps * 1e-2) {
            break;
        }
        if n as usize > ctx.max_terms {
            return Err(QError::TruncationFailure {
                what: format!("{r}phi{s} series"),
                terms: ctx.max_terms,
            });
        }
    }
    Ok(sum)
}

/// Bilateral r_psi_s(a's; b's; q, z): terms
/// (a's;q)_n / (b's;q)_n ((-1)^n q^{n(n-1)/2})^{s-r} z^n over all n.
///
/// Needs r <= s and |b_1...b_s / (a_1...a_r z)| < 1 (plus |z| < 1 when
/// r = s), unless a lower parameter equal to q^k kills the n < 0 side.
pub fn psi(params: &PhiParams, z: Complex64, ctx: &QContext) -> Result<Complex64> {
    let r = params.upper.len() as i64;
    let s = params.lower.len() as i64;
    let excess = (s - r) as i32;
    if r > s {
        return Err(QError::DivergentSeries(format!(
            "{r}psi{s} with r > s diverges"
        )));
    }
    for a in &params.upper {
        if positive_power_order(*a, ctx).is_some() {
            return Err(QError::PoleAtParameter(format!(
                "upper parameter {a} lies on the q^(m+1) pole lattice"
            )));
        }
    }
    // A lower parameter on {q, q^2, ...} zeroes every n < 0 term.
    let lower_terminates = params
        .lower
        .iter()
        .any(|b| positive_power_order(*b, ctx).is_some());
    if !lower_terminates {
        let bprod: f64 = params.lower.iter().map(|b| b.norm()).product();
        let aprod: f64 = params.upper.iter().map(|a| a.norm()).product();
        let ratio = bprod / (aprod * z.norm());
        if !ratio.is_finite() || ratio >= 1.0 {
            return Err(QError::DivergentSeries(format!(
                "bilateral tail ratio |b../(a.. z)| = {ratio} not < 1"
            )));
        }
        if excess == 0 && z.norm() >= 1.0 {
            return Err(QError::DivergentSeries(format!(
                "{r}psi{s} needs |z| < 1, got {}",
                z.norm()
            )));
        }
    }

    let mut sum = Complex64::new(1.0, 0.0);
    // Ascending n = 1, 2, ...
    let mut term = Complex64::new(1.0, 0.0);
    let mut tail = TailRule::new();
    let mut n: i64 = 0;
    loop {
        let qn = ctx.q_pow(n);
        let mut ratio = z;
        for a in &params.upper {
            ratio *= 1.0 - a * qn;
        }
        for b in &params.lower {
            let f = 1.0 - b * qn;
            if f.norm() < PSI_POLE_TOL {
                return Err(QError::PoleAtParameter(format!(
                    "lower parameter within {PSI_POLE_TOL:e} of q^({})",
                    -n
                )));
            }
            ratio /= f;
        }
        ratio *= (-qn).powi(excess);
        term *= ratio;
        sum += term;
        n += 1;
        if tail.absorb(term.norm(), ctx.eps * 1e-2) {
            break;
        }
        if n as usize > ctx.max_terms {
            return Err(QError::TruncationFailure {
                what: format!("{r}psi{s} ascending side"),
                terms: ctx.max_terms,
            });
        }
    }
    // Descending n = -1, -2, ...
    let mut term = Complex64::new(1.0, 0.0);
    let mut tail = TailRule::new();
    let mut n: i64 = 0;
    loop {
        let qn = ctx.q_pow(n - 1);
        let mut ratio = 1.0 / z;
        for b in &params.lower {
            ratio *= 1.0 - b * qn;
        }
        for a in &params.upper {
            let f = 1.0 - a * qn;
            if f.norm() < PSI_POLE_TOL {
                return Err(QError::PoleAtParameter(format!(
                    "upper parameter within {PSI_POLE_TOL:e} of q^({})",
                    1 - n
                )));
            }
            ratio /= f;
        }
        ratio *= (-1.0 / qn).powi(excess);
        term *= ratio;
        sum += term;
        n -= 1;
        if tail.absorb(term.norm(), ctx.eps * 1e-2) {
            break;
        }
        if (-n) as usize > ctx.max_terms {
            return Err(QError::TruncationFailure {
                what: format!("{r}psi{s} descending side"),
                terms: ctx.max_terms,
            });
        }
    }
    Ok(sum)
}

/// Coefficients of 2phi0(a, b; -; q, z): c_n = (a;q)_n (b;q)_n / (q;q)_n
/// (-1)^n q^{-n(n-1)/2}. The stream stops early (below the requested length)
/// once a coefficient would leave f64 range; q^{n(n-1)/2} growth makes that
/// unavoidable near n = 44 for q = 0.5.
pub fn phi20_coeffs(a: Complex64, b: Complex64, n_terms: usize, ctx: &QContext) -> Result<FormalSeries> {
    if n_terms == 0 {
        return Err(QError::InvalidN("need at least one coefficient".into()));
    }
    let want = n_terms.min(COEFF_CAP);
    let mut coeffs = Vec::with_capacity(want);
    let mut c = Complex64::new(1.0, 0.0);
    coeffs.push(c);
    for n in 0..want as i64 - 1 {
        let qn = ctx.q_pow(n);
        c *= (1.0 - a * qn) * (1.0 - b * qn) / (1.0 - ctx.q_pow(n + 1));
        c *= -1.0 / qn;
        if c.norm() > COEFF_OVERFLOW {
            break;
        }
        coeffs.push(c);
    }
    FormalSeries::new(coeffs)
}

/// q-Borel transform: coeffs[n] -> coeffs[n] q^{n(n-1)/2}.
pub fn qborel(series: &FormalSeries, ctx: &QContext) -> FormalSeries {
    let coeffs = series
        .coeffs()
        .iter()
        .enumerate()
        .map(|(n, c)| c * ctx.q_pow_binom2(n as i64))
        .collect();
    FormalSeries { coeffs }
}

/// Stieltjes-Wigert polynomial
/// S_n(x; q) = 1phi1(q^{-n}; 0; q, -x q^{n+1}) / (q;q)_n.
pub fn stieltjes_wigert(n: usize, x: f64, ctx: &QContext) -> Result<f64> {
    Ok(stieltjes_wigert_complex(n, Complex64::new(x, 0.0), ctx)?.re)
}

/// Complex-argument variant used when the polynomial rides inside transforms.
pub fn stieltjes_wigert_complex(n: usize, x: Complex64, ctx: &QContext) -> Result<Complex64> {
    let mut norm = Complex64::new(1.0, 0.0);
    for k in 0..n as i64 {
        norm *= 1.0 - ctx.q_pow(k + 1);
    }
    // Terminating sum written out directly: factors (1 - q^{k-n}) hit an
    // exact zero at k = n, so the loop runs k = 0..=n.
    let z = -x * ctx.q_pow(n as i64 + 1);
    let mut sum = Complex64::new(1.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    for k in 0..n as i64 {
        let ratio = (1.0 - ctx.q_pow(k - n as i64)) / (1.0 - ctx.q_pow(k + 1))
            * (-ctx.q_pow(k))
            * z;
        term *= ratio;
        sum += term;
    }
    Ok(sum / norm)
}

/// Psi_q(a) = sum_{l>=0} a q^l / (1 - a q^l), with a geometric tail estimate.
pub fn psi_q(a: Complex64, ctx: &QContext) -> Result<Complex64> {
    let mut sum = Complex64::new(0.0, 0.0);
    for l in 0..=ctx.max_terms as i64 {
        let aq = a * ctx.q_pow(l);
        let den = 1.0 - aq;
        if den.norm() < 1e-10 * aq.norm().max(1.0) {
            return Err(QError::PoleAtParameter(format!(
                "Psi_q pole: a q^{l} within {:e} of 1",
                den.norm()
            )));
        }
        let term = aq / den;
        sum += term;
        if term.norm() < ctx.eps * 1e-2 * sum.norm().max(1e-30) {
            // Remaining tail is nearly geometric in q.
            sum += term * ctx.q / (1.0 - ctx.q);
            return Ok(sum);
        }
    }
    Err(QError::TruncationFailure {
        what: "Psi_q sum".into(),
        terms: ctx.max_terms,
    })
}

/// m >= 0 such that v = q^{m+1} within the bilateral pole tolerance.
fn positive_power_order(v: Complex64, ctx: &QContext) -> Option<i64> {
    if v.im != 0.0 || v.re <= 0.0 {
        return None;
    }
    let mut lat = ctx.q;
    for m in 0..TERMINATION_MAX {
        if (v.re - lat).abs() <= PSI_POLE_TOL {
            return Some(m);
        }
        lat *= ctx.q;
        if lat < PSI_POLE_TOL && v.re > 2.0 * PSI_POLE_TOL {
            break;
        }
    }
    None
}
