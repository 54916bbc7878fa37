//! Arbitrary-precision scalars and the precision policy.
//!
//! Real scalars are MPFR floats (`rug::Float`), so every basic operation and
//! every transcendental is correctly rounded at the working precision.
//! Complex values are a pair of such floats sharing one precision.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;

use crate::error::{LabError, Result};

/// Real scalar at a stated binary precision.
pub type HpReal = Float;

/// Smallest precision the lab accepts, in bits.
pub const MIN_PRECISION_BITS: u32 = 64;

/// Working precision in bits, at least [`MIN_PRECISION_BITS`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Precision(u32);

impl Precision {
    pub fn new(bits: u32) -> Result<Self> {
        if bits < MIN_PRECISION_BITS {
            return Err(LabError::invalid(format!(
                "precision {bits} bits is below the {MIN_PRECISION_BITS}-bit minimum"
            )));
        }
        Ok(Self(bits))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn doubled(self) -> Self {
        Self(self.0 * 2)
    }

    /// `2^-(p - slack)`, the relative tolerance used throughout for
    /// "agreement at working precision up to `slack` lost bits".
    pub fn epsilon(self, slack: u32) -> HpReal {
        let exp = self.0.saturating_sub(slack) as i32;
        Float::with_val(self.0, Float::i_exp(1, -exp))
    }

    pub fn zero(self) -> HpReal {
        Float::new(self.0)
    }

    pub fn real(self, v: impl Into<f64>) -> HpReal {
        Float::with_val(self.0, v.into())
    }

    pub fn int(self, v: i64) -> HpReal {
        Float::with_val(self.0, v)
    }

    pub fn pi(self) -> HpReal {
        Float::with_val(self.0, Constant::Pi)
    }

    pub fn e(self) -> HpReal {
        Float::with_val(self.0, 1).exp()
    }

    /// `32πe`, the scaling constant of the single-cluster lower bound.
    pub fn c32_pi_e(self) -> HpReal {
        self.pi() * self.e() * 32u32
    }

    /// `16πe`, the scaling constant of the prolate and Turán-based bounds.
    pub fn c16_pi_e(self) -> HpReal {
        self.pi() * self.e() * 16u32
    }
}

impl Default for Precision {
    fn default() -> Self {
        Self(PrecisionPolicy::default().floor_bits)
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} bits", self.0)
    }
}

/// Sizes the working precision to the dynamic range of the spectra.
///
/// The Gram eigenvalues of a cluster of multiplicity `ell` scale like
/// `N (NΔ/c)^{2(ell-1)}`, hence the factor two in the growth term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrecisionPolicy {
    pub floor_bits: u32,
    pub guard_bits: u32,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        Self {
            floor_bits: 192,
            guard_bits: 64,
        }
    }
}

impl PrecisionPolicy {
    /// `max(floor, ceil(2(ell-1) log2(32πe/(NΔ))) + 32 ell + guard)`.
    ///
    /// The logarithm is clamped at zero so the result stays monotone in
    /// `ell` even when `NΔ > 32πe`.
    pub fn required_bits(&self, ell: usize, n: usize, delta: &HpReal) -> Result<u32> {
        if ell == 0 || n == 0 {
            return Err(LabError::invalid("required_bits needs ell >= 1 and N >= 1"));
        }
        if *delta <= 0 {
            return Err(LabError::invalid("required_bits needs delta > 0"));
        }
        let prec = delta.prec().max(128);
        let p = Precision(prec);
        let n_delta = Float::with_val(prec, delta * n as u32);
        let log_term = (p.c32_pi_e() / n_delta).log2().to_f64().max(0.0);
        let growth = (2.0 * (ell as f64 - 1.0) * log_term).ceil();
        let total = growth + 32.0 * ell as f64 + self.guard_bits as f64;
        let total = if total.is_finite() && total < u32::MAX as f64 {
            total as u32
        } else {
            return Err(LabError::invalid("required precision overflows"));
        };
        Ok(total.max(self.floor_bits))
    }

    pub fn precision_for(&self, ell: usize, n: usize, delta: &HpReal) -> Result<Precision> {
        Ok(Precision(self.required_bits(ell, n, delta)?))
    }
}

/// Parses a decimal string directly at `prec` bits, never through binary64.
pub fn parse_decimal(s: &str, prec: Precision) -> Result<HpReal> {
    let parsed = Float::parse(s.trim())
        .map_err(|e| LabError::parse(format!("invalid decimal {s:?}: {e}")))?;
    let v = Float::with_val(prec.bits(), parsed);
    if !v.is_finite() {
        return Err(LabError::parse(format!("non-finite decimal {s:?}")));
    }
    Ok(v)
}

/// Number of significant decimal digits matched to `bits` of precision.
pub fn decimal_digits(bits: u32) -> usize {
    (bits as f64 * std::f64::consts::LOG10_2).ceil() as usize + 1
}

/// Decimal rendering with enough digits to round-trip the binary value.
pub fn to_decimal_string(x: &HpReal) -> String {
    if x.is_zero() {
        return "0".to_owned();
    }
    x.to_string_radix(10, Some(decimal_digits(x.prec())))
}

/// Short decimal rendering for reports.
pub fn to_decimal_digits(x: &HpReal, digits: usize) -> String {
    if x.is_zero() {
        return "0".to_owned();
    }
    x.to_string_radix(10, Some(digits.max(1)))
}

/// Reduces an angle into `(-π, π]`.
pub fn wrap_angle(x: &HpReal) -> HpReal {
    let prec = x.prec();
    let pi = Float::with_val(prec, Constant::Pi);
    let two_pi = Float::with_val(prec, &pi * 2u32);
    let turns = Float::with_val(prec, x / &two_pi).round();
    let mut r = Float::with_val(prec, x - turns * &two_pi);
    if r <= -pi.clone() {
        r += &two_pi;
    } else if r > pi {
        r -= &two_pi;
    }
    r
}

/// `log10 |x|` as an `f64`, valid far outside the binary64 exponent range.
pub fn log10_abs(x: &HpReal) -> f64 {
    let prec = x.prec();
    Float::with_val(prec, x.abs_ref()).log10().to_f64()
}

/// `base^exp` for a non-negative integer exponent.
pub fn powi(base: &HpReal, exp: usize) -> HpReal {
    Float::with_val(base.prec(), base.pow(exp as u32))
}

/// Complex scalar; both parts share one precision.
#[derive(Clone, Debug, PartialEq)]
pub struct HpComplex {
    pub re: HpReal,
    pub im: HpReal,
}

impl HpComplex {
    pub fn new(re: HpReal, im: HpReal) -> Self {
        let prec = re.prec().max(im.prec());
        Self {
            re: Float::with_val(prec, re),
            im: Float::with_val(prec, im),
        }
    }

    pub fn zero(prec: Precision) -> Self {
        Self {
            re: prec.zero(),
            im: prec.zero(),
        }
    }

    pub fn from_real(re: HpReal) -> Self {
        let im = Float::new(re.prec());
        Self { re, im }
    }

    /// `e^{ıθ}` at the precision of `theta`.
    pub fn cis(theta: &HpReal) -> Self {
        let prec = theta.prec();
        let (s, c) = theta.clone().sin_cos(Float::new(prec));
        Self { re: c, im: s }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn conj(&self) -> Self {
        Self {
            re: self.re.clone(),
            im: Float::with_val(self.im.prec(), -&self.im),
        }
    }

    pub fn norm_sqr(&self) -> HpReal {
        let prec = self.prec();
        Float::with_val(prec, self.re.square_ref()) + Float::with_val(prec, self.im.square_ref())
    }

    pub fn abs(&self) -> HpReal {
        Float::with_val(self.prec(), self.re.hypot_ref(&self.im))
    }

    pub fn arg(&self) -> HpReal {
        Float::with_val(self.prec(), self.im.atan2_ref(&self.re))
    }

    pub fn scale(&self, k: &HpReal) -> Self {
        let prec = self.prec();
        Self {
            re: Float::with_val(prec, &self.re * k),
            im: Float::with_val(prec, &self.im * k),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    /// `|a - b|` relative to `max(|a|, |b|)`; zero when both vanish.
    pub fn rel_diff(&self, other: &Self) -> HpReal {
        let diff = (self - other).abs();
        let scale = self.abs().max(&other.abs());
        if scale.is_zero() {
            diff
        } else {
            diff / scale
        }
    }
}

impl Add for &HpComplex {
    type Output = HpComplex;
    fn add(self, rhs: &HpComplex) -> HpComplex {
        let prec = self.prec();
        HpComplex {
            re: Float::with_val(prec, &self.re + &rhs.re),
            im: Float::with_val(prec, &self.im + &rhs.im),
        }
    }
}

impl Sub for &HpComplex {
    type Output = HpComplex;
    fn sub(self, rhs: &HpComplex) -> HpComplex {
        let prec = self.prec();
        HpComplex {
            re: Float::with_val(prec, &self.re - &rhs.re),
            im: Float::with_val(prec, &self.im - &rhs.im),
        }
    }
}

impl Mul for &HpComplex {
    type Output = HpComplex;
    fn mul(self, rhs: &HpComplex) -> HpComplex {
        let prec = self.prec();
        let ac = Float::with_val(prec, &self.re * &rhs.re);
        let bd = Float::with_val(prec, &self.im * &rhs.im);
        let ad = Float::with_val(prec, &self.re * &rhs.im);
        let bc = Float::with_val(prec, &self.im * &rhs.re);
        HpComplex {
            re: ac - bd,
            im: ad + bc,
        }
    }
}

impl Neg for &HpComplex {
    type Output = HpComplex;
    fn neg(self) -> HpComplex {
        HpComplex {
            re: Float::with_val(self.prec(), -&self.re),
            im: Float::with_val(self.prec(), -&self.im),
        }
    }
}

impl std::ops::AddAssign<&HpComplex> for HpComplex {
    fn add_assign(&mut self, rhs: &HpComplex) {
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}

impl fmt::Display for HpComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {})",
            to_decimal_digits(&self.re, 12),
            to_decimal_digits(&self.im, 12)
        )
    }
}
