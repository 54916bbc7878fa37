//! Exponential sums `P(t) = Σ c_j e^{ı t x_j}`, their norms, and checks of
//! the classical inequalities (Turán, Nikolskii, Salem, Bernstein) that the
//! spectral lower bounds are assembled from.
//!
//! Interval norms use the normalized measure: `‖f‖_{L^p(I)}` integrates
//! against `dt/μ(I)`.

use rug::ops::Pow;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::hp_numeric::{powi, to_decimal_digits, HpComplex, HpReal, Precision};
use crate::node_geometry::wrap_distance;
use crate::quadrature::GaussLegendre;

/// Default cap on L∞ grid sizes.
pub const DEFAULT_GRID_BUDGET: usize = 2_000_000;

/// Coefficients `c` and distinct real frequencies `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpSum {
    coeffs: Vec<HpComplex>,
    freqs: Vec<HpReal>,
}

impl ExpSum {
    pub fn new(coeffs: Vec<HpComplex>, freqs: Vec<HpReal>) -> Result<Self> {
        if coeffs.len() != freqs.len() {
            return Err(LabError::invalid("one coefficient per frequency is required"));
        }
        if coeffs.is_empty() {
            return Err(LabError::invalid("exponential sum has no terms"));
        }
        for i in 0..freqs.len() {
            for j in 0..i {
                if freqs[i] == freqs[j] {
                    return Err(LabError::degenerate(format!(
                        "frequencies {j} and {i} coincide"
                    )));
                }
            }
        }
        Ok(Self { coeffs, freqs })
    }

    pub fn coeffs(&self) -> &[HpComplex] {
        &self.coeffs
    }

    pub fn freqs(&self) -> &[HpReal] {
        &self.freqs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Number of nonzero coefficients.
    pub fn degree(&self) -> usize {
        self.coeffs.iter().filter(|c| !c.is_zero()).count()
    }

    pub fn precision_bits(&self) -> u32 {
        self.coeffs
            .iter()
            .map(HpComplex::prec)
            .chain(self.freqs.iter().map(|x| x.prec()))
            .max()
            .unwrap_or(64)
    }

    fn prec(&self) -> Precision {
        Precision::new(self.precision_bits()).unwrap_or_default()
    }

    /// `‖c‖₂²`.
    pub fn coeff_norm_sqr(&self) -> HpReal {
        let mut acc = self.prec().zero();
        for c in &self.coeffs {
            acc += c.norm_sqr();
        }
        acc
    }

    pub fn eval(&self, t: &HpReal) -> HpComplex {
        let bits = self.precision_bits().max(t.prec());
        let mut acc = HpComplex::zero(Precision::new(bits).unwrap_or_default());
        for (c, x) in self.coeffs.iter().zip(&self.freqs) {
            let phase = HpComplex::cis(&Float::with_val(bits, t * x));
            acc += &(c * &phase);
        }
        acc
    }

    /// `Q(u) = P(a + u(b - a))` on `[0, 1]`, with frequencies shifted so that
    /// `min + max = 0`. The shift multiplies `Q` by a unimodular factor and
    /// leaves `|Q|` unchanged.
    pub fn rescaled(&self, a: &HpReal, b: &HpReal) -> Self {
        let bits = self.precision_bits().max(a.prec()).max(b.prec());
        let len = Float::with_val(bits, b - a);
        let lo = self.freqs.iter().min_by(|x, y| x.total_cmp(y)).unwrap();
        let hi = self.freqs.iter().max_by(|x, y| x.total_cmp(y)).unwrap();
        let mid = Float::with_val(bits, lo + hi) / 2u32;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&self.freqs)
            .map(|(c, x)| c * &HpComplex::cis(&Float::with_val(bits, a * x)))
            .collect();
        let freqs = self
            .freqs
            .iter()
            .map(|x| Float::with_val(bits, x - &mid) * &len)
            .collect();
        Self { coeffs, freqs }
    }
}

fn check_interval(a: &HpReal, b: &HpReal) -> Result<()> {
    if b <= a {
        return Err(LabError::invalid("interval needs b > a"));
    }
    Ok(())
}

/// `∫_a^b e^{ıδt} dt = (b-a) · sinc(δ(b-a)/2) · e^{ıδ(a+b)/2}`.
///
/// Same value as `(e^{ıδb} - e^{ıδa})/(ıδ)`, written to avoid cancellation
/// for small `δ(b-a)`.
pub fn exp_integral(delta: &HpReal, a: &HpReal, b: &HpReal) -> HpComplex {
    let bits = delta.prec().max(a.prec()).max(b.prec());
    let len = Float::with_val(bits, b - a);
    if delta.is_zero() {
        return HpComplex::from_real(len);
    }
    let h = Float::with_val(bits, &len / 2u32) * delta;
    let sinc = Float::with_val(bits, h.sin_ref()) / &h;
    let mid = Float::with_val(bits, a + b) / 2u32 * delta;
    HpComplex::cis(&mid).scale(&(sinc * len))
}

/// `‖P‖_{L²([a, b])}` from the closed-form Gram quadratic form.
pub fn l2_norm_exact(p: &ExpSum, a: &HpReal, b: &HpReal) -> Result<HpReal> {
    Ok(l2_norm_sqr_exact(p, a, b)?.sqrt())
}

/// `‖P‖²_{L²([a, b])}`.
pub fn l2_norm_sqr_exact(p: &ExpSum, a: &HpReal, b: &HpReal) -> Result<HpReal> {
    check_interval(a, b)?;
    let bits = p.precision_bits().max(a.prec()).max(b.prec());
    let prec = Precision::new(bits)?;
    let mut acc = HpComplex::zero(prec);
    let mut magnitude = prec.zero();
    let n = p.len();
    for j in 0..n {
        for k in 0..n {
            let d = Float::with_val(bits, &p.freqs[j] - &p.freqs[k]);
            let weight = &p.coeffs[j] * &p.coeffs[k].conj();
            let term = &weight * &exp_integral(&d, a, b);
            magnitude += term.abs();
            acc += &term;
        }
    }
    let len = Float::with_val(bits, b - a);
    let value = Float::with_val(bits, &acc.re / &len);
    let dust = Float::with_val(bits, &magnitude / &len) * prec.epsilon(16);
    if Float::with_val(bits, acc.im.abs_ref()) / &len > Float::with_val(bits, &dust + Float::with_val(bits, value.abs_ref()) * prec.epsilon(16)) {
        return Err(LabError::Precision(format!(
            "imaginary residue {} in the L2 quadratic form",
            to_decimal_digits(&acc.im, 6)
        )));
    }
    if value.is_sign_negative() {
        if Float::with_val(bits, -&value) > dust {
            return Err(LabError::Precision(format!(
                "negative squared norm {} beyond rounding",
                to_decimal_digits(&value, 6)
            )));
        }
        return Ok(prec.zero());
    }
    Ok(value)
}

/// `‖P‖_{2,N} = (Σ_{k=0}^{N} |P(k)|²)^{1/2}`.
pub fn discrete_norm(p: &ExpSum, n: usize) -> HpReal {
    discrete_norm_sqr(p, n).sqrt()
}

pub fn discrete_norm_sqr(p: &ExpSum, n: usize) -> HpReal {
    let prec = p.prec();
    let mut acc = prec.zero();
    for k in 0..=n {
        acc += p.eval(&prec.int(k as i64)).norm_sqr();
    }
    acc
}

/// Grid estimate of `‖P‖_{L∞([a, b])}` bracketed via the Bernstein inequality.
#[derive(Clone, Debug, PartialEq)]
pub struct LinfEstimate {
    /// Largest sampled modulus; never above the true norm.
    pub lower: HpReal,
    /// `lower / (1 - hB/2)`; above the true norm whenever the Bernstein
    /// factor `B` is valid.
    pub upper: HpReal,
    pub grid_points: usize,
    /// `B = bernstein_c · (108ℓ⁵ + Σ x̃_j²)^{1/2}` for the `[0,1]`-rescaled sum.
    pub bernstein_factor: HpReal,
    pub bernstein_c: HpReal,
}

/// `‖P‖_{L∞([a,b])}` certified from `m` uniform samples with `hB ≤ 1`.
pub fn linf_norm_certified(p: &ExpSum, a: &HpReal, b: &HpReal, bernstein_c: &HpReal) -> Result<LinfEstimate> {
    linf_norm_with_budget(p, a, b, bernstein_c, DEFAULT_GRID_BUDGET, 1)
}

/// As [`linf_norm_certified`] with an explicit grid budget and a density
/// multiplier (`oversample = 10` gives a ten times denser grid).
pub fn linf_norm_with_budget(
    p: &ExpSum,
    a: &HpReal,
    b: &HpReal,
    bernstein_c: &HpReal,
    budget: usize,
    oversample: usize,
) -> Result<LinfEstimate> {
    check_interval(a, b)?;
    if *bernstein_c <= 0 {
        return Err(LabError::invalid("bernstein_c must be positive"));
    }
    let q = p.rescaled(a, b);
    let bits = q.precision_bits();
    let prec = Precision::new(bits)?;
    let ell = p.degree().max(1) as u32;
    let mut sum_sq = Float::with_val(bits, 108u32) * ell.pow(5);
    for x in &q.freqs {
        sum_sq += Float::with_val(bits, x.square_ref());
    }
    let factor = Float::with_val(bits, bernstein_c * sum_sq.sqrt());
    let intervals = factor.to_f64().ceil().max(1.0) * oversample.max(1) as f64;
    if !intervals.is_finite() || intervals + 1.0 > budget as f64 {
        return Err(LabError::Resource(format!(
            "L-infinity grid needs {intervals} intervals, budget is {budget}"
        )));
    }
    let intervals = intervals as usize;
    let mut lower = prec.zero();
    for k in 0..=intervals {
        let u = prec.int(k as i64) / intervals as u32;
        let v = q.eval(&u).abs();
        if v > lower {
            lower = v;
        }
    }
    let h = Float::with_val(bits, intervals).recip();
    let shrink = Float::with_val(bits, 1u32 - Float::with_val(bits, &h * &factor) / 2u32);
    let upper = Float::with_val(bits, &lower / &shrink);
    Ok(LinfEstimate {
        lower,
        upper,
        grid_points: intervals + 1,
        bernstein_factor: factor,
        bernstein_c: bernstein_c.clone(),
    })
}

/// Norm exponent `p ∈ (0, ∞]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormExp {
    Finite(f64),
    Infinity,
}

impl NormExp {
    fn inverse(self) -> f64 {
        match self {
            Self::Finite(p) => 1.0 / p,
            Self::Infinity => 0.0,
        }
    }
}

/// `‖P‖_{L^q([a,b])}` for finite `q` by composite Gauss–Legendre quadrature.
pub fn lq_norm_quadrature(p: &ExpSum, a: &HpReal, b: &HpReal, q_exp: f64, nodes_per_panel: usize) -> Result<HpReal> {
    check_interval(a, b)?;
    if !(q_exp > 0.0 && q_exp.is_finite()) {
        return Err(LabError::invalid("quadrature norm needs a finite positive exponent"));
    }
    let bits = p.precision_bits().max(a.prec()).max(b.prec());
    let prec = Precision::new(bits)?;
    let lo = p.freqs.iter().min_by(|x, y| x.total_cmp(y)).unwrap();
    let hi = p.freqs.iter().max_by(|x, y| x.total_cmp(y)).unwrap();
    let span = Float::with_val(bits, hi - lo);
    let len = Float::with_val(bits, b - a);
    // about one radian of |P|² oscillation per panel
    let panels = (Float::with_val(bits, &span * &len).to_f64().ceil() as usize + 1).max(4);
    let rule = GaussLegendre::new(nodes_per_panel, prec);
    let exponent = Float::with_val(bits, q_exp / 2.0);
    let integral = rule.integrate(a, b, panels, |t| {
        let m2 = p.eval(t).norm_sqr();
        if m2.is_zero() {
            m2
        } else {
            Float::with_val(bits, m2.pow(&exponent))
        }
    });
    let mean = integral / &len;
    Ok(Float::with_val(bits, mean.pow(Float::with_val(bits, 1.0 / q_exp))))
}

/// Left side, right side and verdict of one inequality check.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub lhs: HpReal,
    pub rhs: HpReal,
    pub holds: bool,
}

impl CheckOutcome {
    fn le(lhs: HpReal, rhs: HpReal) -> Self {
        let holds = lhs <= rhs;
        Self { lhs, rhs, holds }
    }

    fn ge(lhs: HpReal, rhs: HpReal) -> Self {
        let holds = lhs >= rhs;
        Self { lhs, rhs, holds }
    }
}

/// Turán: `‖P‖_{L∞(I)} ≤ (4e μ(I)/μ(Ω))^{ℓ-1} ‖P‖_{L∞(Ω)}`.
///
/// The left side uses the grid lower estimate and the right side the
/// certified upper estimate, so a failure is never a sampling artefact.
pub fn check_turan(
    p: &ExpSum,
    interval: (&HpReal, &HpReal),
    omega: (&HpReal, &HpReal),
    bernstein_c: &HpReal,
) -> Result<CheckOutcome> {
    let (a, b) = interval;
    let (c, d) = omega;
    check_interval(a, b)?;
    check_interval(c, d)?;
    if c < a || d > b {
        return Err(LabError::invalid("omega must lie inside the interval"));
    }
    let bits = p.precision_bits();
    let prec = Precision::new(bits)?;
    let ell = p.degree().max(1);
    let big = linf_norm_certified(p, a, b, bernstein_c)?;
    let small = if a == c && b == d {
        big.clone()
    } else {
        linf_norm_certified(p, c, d, bernstein_c)?
    };
    let ratio = Float::with_val(bits, b - a) / Float::with_val(bits, d - c);
    let base = prec.e() * 4u32 * ratio;
    let factor = powi(&base, ell - 1);
    Ok(CheckOutcome::le(big.lower, factor * small.upper))
}

/// Nikolskii: `‖P‖_{L^p[0,1]} ≤ (πℓ/2)^{2/q - 2/p} ‖P‖_{L^q[0,1]}`, `0 < q ≤ 2`, `q < p ≤ ∞`.
///
/// `p = q = 2` is accepted as the degenerate equality case.
pub fn check_nikolskii(p: &ExpSum, p_exp: NormExp, q_exp: NormExp, bernstein_c: &HpReal) -> Result<CheckOutcome> {
    let q = match q_exp {
        NormExp::Finite(q) if q > 0.0 && q <= 2.0 => q,
        _ => return Err(LabError::invalid("Nikolskii needs 0 < q <= 2")),
    };
    let degenerate = p_exp == q_exp;
    if !degenerate {
        if let NormExp::Finite(pe) = p_exp {
            if pe <= q {
                return Err(LabError::invalid("Nikolskii needs q < p"));
            }
        }
    }
    let bits = p.precision_bits();
    let prec = Precision::new(bits)?;
    let (zero, one) = (prec.zero(), prec.int(1));
    let norm = |e: f64| -> Result<HpReal> {
        if e == 2.0 {
            l2_norm_exact(p, &zero, &one)
        } else {
            lq_norm_quadrature(p, &zero, &one, e, 32)
        }
    };
    let lhs = match p_exp {
        NormExp::Infinity => linf_norm_certified(p, &zero, &one, bernstein_c)?.lower,
        NormExp::Finite(e) => norm(e)?,
    };
    let rhs_norm = if degenerate { lhs.clone() } else { norm(q)? };
    let ell = p.degree().max(1) as u32;
    let base = Float::with_val(bits, prec.pi() * ell) / 2u32;
    let expo = Float::with_val(bits, 2.0 * (q_exp.inverse() - p_exp.inverse()));
    let factor = Float::with_val(bits, base.pow(&expo));
    Ok(CheckOutcome::le(lhs, factor * rhs_norm))
}

/// Checks pairwise wrap-around separation of the frequencies.
fn check_separation(p: &ExpSum, delta_sep: &HpReal) -> Result<()> {
    let bits = p.precision_bits().max(delta_sep.prec());
    let prec = Precision::new(bits)?;
    let slack = Float::with_val(bits, delta_sep * prec.epsilon(8)) + prec.epsilon(8) * 4u32;
    let floor = Float::with_val(bits, delta_sep - &slack);
    for i in 0..p.len() {
        for j in 0..i {
            if wrap_distance(&p.freqs[i], &p.freqs[j]) < floor {
                return Err(LabError::invalid(format!(
                    "frequencies {j} and {i} are closer than the required separation"
                )));
            }
        }
    }
    Ok(())
}

/// `‖P‖²_{L²([0, 4π/Δ])} / ‖c‖₂²`, the empirical Salem ratio.
pub fn check_salem_ratio(p: &ExpSum, delta_sep: &HpReal) -> Result<HpReal> {
    if *delta_sep <= 0 {
        return Err(LabError::invalid("separation must be positive"));
    }
    check_separation(p, delta_sep)?;
    let bits = p.precision_bits().max(delta_sep.prec());
    let prec = Precision::new(bits)?;
    let end = prec.pi() * 4u32 / delta_sep;
    let norm = l2_norm_sqr_exact(p, &prec.zero(), &end)?;
    Ok(norm / p.coeff_norm_sqr())
}

/// Riemann-sum gap for `T(u) = |P(Nu)|²` on `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RiemannGap {
    /// `|∫₀¹ T − (1/N) Σ_{k=0}^{N} T(k/N)|`.
    pub gap: HpReal,
    /// `(ℓ⁵/N) ‖T‖_{L∞[0,1]}`, the bound's shape without its constant.
    pub rhs_shape: HpReal,
    /// `∫₀¹ T = ‖P‖²_{L²[0,N]}`.
    pub integral: HpReal,
    /// `‖P‖²_{2,N}`.
    pub discrete_sqr: HpReal,
    /// `gap ≤ ½ ∫₀¹ T`, the hypothesis of the norm relation.
    pub relation_applicable: bool,
    /// `‖P‖²_{2,N} ≥ (N/2) ‖P‖²_{L²[0,N]}`.
    pub relation_holds: bool,
}

pub fn riemann_gap(p: &ExpSum, n: usize, bernstein_c: &HpReal) -> Result<RiemannGap> {
    if n == 0 {
        return Err(LabError::invalid("N must be at least 1"));
    }
    let bits = p.precision_bits();
    let prec = Precision::new(bits)?;
    let (zero, end) = (prec.zero(), prec.int(n as i64));
    let integral = l2_norm_sqr_exact(p, &zero, &end)?;
    let discrete_sqr = discrete_norm_sqr(p, n);
    let riemann = Float::with_val(bits, &discrete_sqr / n as u32);
    let gap = Float::with_val(bits, &integral - &riemann).abs();
    let sup = linf_norm_certified(p, &zero, &end, bernstein_c)?.upper;
    let ell = p.degree().max(1) as u32;
    let rhs_shape = Float::with_val(bits, sup.square_ref()) * ell.pow(5) / n as u32;
    let relation_applicable = gap <= Float::with_val(bits, &integral / 2u32);
    let relation_holds = discrete_sqr >= Float::with_val(bits, &integral * n as u32) / 2u32;
    Ok(RiemannGap {
        gap,
        rhs_shape,
        integral,
        discrete_sqr,
        relation_applicable,
        relation_holds,
    })
}

/// `‖P‖_{L²[0,N]} ≥ (2/(πℓ)) (NΔ/(16πe))^{ℓ-1} ‖P‖_{L²[0,4π/Δ]}` for `N ≤ 4π/Δ`.
pub fn check_cor_turan(p: &ExpSum, n: usize, delta: &HpReal) -> Result<CheckOutcome> {
    if *delta <= 0 || n == 0 {
        return Err(LabError::invalid("need N >= 1 and delta > 0"));
    }
    let bits = p.precision_bits().max(delta.prec());
    let prec = Precision::new(bits)?;
    let long_end = prec.pi() * 4u32 / delta;
    if Float::with_val(bits, n) > long_end {
        return Err(LabError::invalid("N exceeds 4*pi/delta"));
    }
    check_separation(p, delta)?;
    let ell = p.len();
    let zero = prec.zero();
    let lhs = l2_norm_exact(p, &zero, &prec.int(n as i64))?;
    let long = l2_norm_exact(p, &zero, &long_end)?;
    let base = Float::with_val(bits, delta * n as u32) / prec.c16_pi_e();
    let lead = Float::with_val(bits, 2u32) / (prec.pi() * ell as u32);
    Ok(CheckOutcome::ge(lhs, lead * powi(&base, ell - 1) * long))
}
