//! Closed-form bounds on the spectra and the window checks that gate them.

use rug::{Float, Integer};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::hp_numeric::{powi, to_decimal_string, HpReal, Precision};
use crate::matrix_builders::VandermondeSpec;
use crate::node_geometry::{validate_config, ClusterSpec, PartitionResult};

/// Default stand-in for the unquantified lower end of the `N` window: `Nθ ≥ floor·s`.
pub const DEFAULT_WINDOW_FLOOR: u32 = 10;

fn check_common(n: usize, delta: &HpReal, ell: usize) -> Result<()> {
    if n == 0 {
        return Err(LabError::invalid("N must be at least 1"));
    }
    if *delta <= 0 {
        return Err(LabError::invalid("delta must be positive"));
    }
    if ell == 0 {
        return Err(LabError::invalid("ell must be at least 1"));
    }
    Ok(())
}

/// `√N (NΔ/(32πe))^{ℓ-1}`, the single-cluster lower-bound shape without its constant.
pub fn lower_bound_shape(n: usize, delta: &HpReal, ell: usize) -> Result<HpReal> {
    check_common(n, delta, ell)?;
    let p = Precision::new(delta.prec())?;
    let base = Float::with_val(p.bits(), delta * n as u32) / p.c32_pi_e();
    Ok(Float::with_val(p.bits(), n).sqrt() * powi(&base, ell - 1))
}

/// `½ √(Nℓe) (τNΔ)^{ℓ-1}`, the explicit upper bound on `σ_min`.
pub fn upper_bound_explicit(n: usize, delta: &HpReal, ell: usize, tau: &HpReal) -> Result<HpReal> {
    check_common(n, delta, ell)?;
    if *tau < (ell - 1) as u32 {
        return Err(LabError::invalid("tau must be at least ell - 1"));
    }
    let p = Precision::new(delta.prec())?;
    let root = (p.e() * (n * ell) as u32).sqrt() / 2u32;
    let base = Float::with_val(p.bits(), tau * delta) * n as u32;
    Ok(root * powi(&base, ell - 1))
}

/// `C_EQ(s) = 2^{2s-2} / ((2s-1) · C(2s-2, s-1)^3)`, evaluated from the exact rational.
pub fn slepian_constant(s: usize, prec: Precision) -> Result<HpReal> {
    if s == 0 {
        return Err(LabError::invalid("s must be at least 1"));
    }
    let s = s as u32;
    let num = Integer::from(1) << (2 * s - 2);
    let binom = Integer::from(Integer::binomial_u(2 * s - 2, s - 1));
    let den = Integer::from(2 * s - 1) * binom.clone() * &binom * &binom;
    let q = rug::Rational::from((num, den));
    Ok(Float::with_val(prec.bits(), &q))
}

/// `C_EQ(s) Δ^{2s-2}`, the leading term of `λ_min(G)` for equispaced nodes.
pub fn slepian_asymptotic(s: usize, delta: &HpReal) -> Result<HpReal> {
    let p = Precision::new(delta.prec())?;
    Ok(slepian_constant(s, p)? * powi(delta, 2 * s - 2))
}

/// `C_LL(s) = 2π Σ_{j=0}^{s-1} C(s-1, j) j^s / s!`.
///
/// Recorded for reference next to `C_EQ`; no experiment uses it.
pub fn li_liao_constant(s: usize, prec: Precision) -> Result<HpReal> {
    if s == 0 {
        return Err(LabError::invalid("s must be at least 1"));
    }
    let s = s as u32;
    let mut sum = Integer::new();
    for j in 0..s {
        let b = Integer::from(Integer::binomial_u(s - 1, j));
        sum += b * Integer::from(Integer::u_pow_u(j, s));
    }
    let fact = Integer::from(Integer::factorial(s));
    let q = rug::Rational::from((sum, fact));
    Ok(Float::with_val(prec.bits(), &q) * prec.pi() * 2u32)
}

/// `(Δ/(16πe))^{2(ℓ-1)}`, the prolate lower-bound shape without its constant.
pub fn prolate_lower_shape(delta: &HpReal, ell: usize) -> Result<HpReal> {
    check_common(1, delta, ell)?;
    let p = Precision::new(delta.prec())?;
    let base = Float::with_val(p.bits(), delta / p.c16_pi_e());
    Ok(powi(&base, 2 * (ell - 1)))
}

/// `√N (NΔ/(32πe))^{m-1}` for `m = 1..=ell`: the per-level singular value thresholds.
pub fn level_thresholds(n: usize, delta: &HpReal, ell: usize, c1: &HpReal) -> Result<Vec<HpReal>> {
    (1..=ell)
        .map(|m| Ok(lower_bound_shape(n, delta, m)? * c1))
        .collect()
}

/// Per-level counts of spectral values against the thresholds `t_1 > t_2 > …`.
///
/// `band[m-1]` counts values in `[t_m, t_{m-1})` (with `t_0 = ∞`), and
/// `cumulative[m-1]` counts values `≥ t_m`. The prediction is
/// `band = q` (equivalently `cumulative[m-1] = q_1 + … + q_m`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelCounts {
    pub band: Vec<usize>,
    pub cumulative: Vec<usize>,
    pub q: Vec<usize>,
    pub matches: bool,
}

pub fn level_counts(values: &[HpReal], thresholds: &[HpReal], q: &[usize]) -> LevelCounts {
    let cumulative: Vec<usize> = thresholds
        .iter()
        .map(|t| values.iter().filter(|v| *v >= t).count())
        .collect();
    let band: Vec<usize> = cumulative
        .iter()
        .enumerate()
        .map(|(m, &c)| if m == 0 { c } else { c - cumulative[m - 1] })
        .collect();
    let matches = band.len() >= q.len()
        && band
            .iter()
            .enumerate()
            .all(|(m, &b)| b == q.get(m).copied().unwrap_or(0));
    LevelCounts {
        band,
        cumulative,
        q: q.to_vec(),
        matches,
    }
}

/// Range `[lo, hi)` of constants `c` for which every sample's counts of
/// values `≥ c·t_m` equal `q_1 + … + q_m`, given unit thresholds `t_m`.
///
/// Returns `None` when the samples admit no common constant.
pub fn fit_level_constant(samples: &[(Vec<HpReal>, Vec<HpReal>, Vec<usize>)]) -> Option<(HpReal, HpReal)> {
    let bits = samples.iter().flat_map(|(v, _, _)| v.iter().map(|x| x.prec())).max()?;
    let mut lo = Float::with_val(bits, 0u32);
    let mut hi = Float::with_val(bits, rug::float::Special::Infinity);
    for (values, unit, q) in samples {
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let mut want = 0usize;
        for (m, t) in unit.iter().enumerate() {
            want += q.get(m).copied().unwrap_or(0);
            // the want-th largest value must clear c·t, the next one must not
            if want > 0 {
                let r = Float::with_val(bits, &sorted[want - 1] / t);
                if r < hi {
                    hi = r;
                }
            }
            if want < sorted.len() {
                let r = Float::with_val(bits, &sorted[want] / t);
                if r > lo {
                    lo = r;
                }
            }
        }
    }
    (lo < hi).then_some((lo, hi))
}

/// Tunables for [`evaluate_all`]; the unquantified constants default to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundParams {
    pub c1: HpReal,
    pub window_floor: u32,
}

impl BoundParams {
    pub fn new(prec: Precision) -> Self {
        Self {
            c1: prec.int(1),
            window_floor: DEFAULT_WINDOW_FLOOR,
        }
    }
}

/// Every explicit bound evaluated for one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub lower_shape: HpReal,
    pub upper_explicit: HpReal,
    pub slepian_asymptotic: HpReal,
    pub prolate_shape: HpReal,
    pub srf: HpReal,
    pub window_ok: bool,
    pub window_reason: String,
    pub user_c1: HpReal,
    pub window_floor: u32,
    /// `N·θ/s`, for judging the lower end of the window by hand.
    pub n_theta_over_s: HpReal,
    /// `N·τ·Δ·s`, for judging the upper end of the window by hand.
    pub n_tau_delta_s: HpReal,
    pub partition: PartitionResult,
}

impl BoundReport {
    /// `c1 · lower_shape`.
    pub fn scaled_lower(&self) -> HpReal {
        Float::with_val(self.lower_shape.prec(), &self.lower_shape * &self.user_c1)
    }

    pub fn to_json(&self) -> BoundReportJson {
        BoundReportJson {
            lower_shape: to_decimal_string(&self.lower_shape),
            upper_explicit: to_decimal_string(&self.upper_explicit),
            slepian_asymptotic: to_decimal_string(&self.slepian_asymptotic),
            prolate_shape: to_decimal_string(&self.prolate_shape),
            srf: to_decimal_string(&self.srf),
            window_ok: self.window_ok,
            window_reason: self.window_reason.clone(),
            user_c1: to_decimal_string(&self.user_c1),
            window_floor: self.window_floor,
            n_theta_over_s: to_decimal_string(&self.n_theta_over_s),
            n_tau_delta_s: to_decimal_string(&self.n_tau_delta_s),
            q: self.partition.q.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReportJson {
    pub lower_shape: String,
    pub upper_explicit: String,
    pub slepian_asymptotic: String,
    pub prolate_shape: String,
    pub srf: String,
    pub window_ok: bool,
    pub window_reason: String,
    pub user_c1: String,
    pub window_floor: u32,
    pub n_theta_over_s: String,
    pub n_tau_delta_s: String,
    pub q: Vec<usize>,
}

/// Evaluates all bounds for a validated configuration.
///
/// `window_ok` checks `NτΔ ≤ 2π` and `Nθ ≥ s·window_floor`; the second
/// condition stands in for a constant that is only known to exist.
pub fn evaluate_all(spec: &VandermondeSpec, cluster: &ClusterSpec, params: &BoundParams) -> Result<BoundReport> {
    let partition = validate_config(spec.nodes(), cluster)?;
    let n = spec.n();
    let p = Precision::new(cluster.delta.prec().max(spec.precision().bits()))?;
    let delta = Float::with_val(p.bits(), &cluster.delta);
    let tau = Float::with_val(p.bits(), &cluster.tau);
    let theta = Float::with_val(p.bits(), &cluster.theta);
    let ell = cluster.ell;
    let s = cluster.s;

    let lower_shape = lower_bound_shape(n, &delta, ell)?;
    let upper_explicit = upper_bound_explicit(n, &delta, ell, &tau)?;
    let slepian = slepian_asymptotic(s, &delta)?;
    let prolate_shape = prolate_lower_shape(&delta, ell)?;
    let n_delta = Float::with_val(p.bits(), &delta * n as u32);
    let srf = Float::with_val(p.bits(), n_delta.recip_ref());

    let n_tau_delta = Float::with_val(p.bits(), &tau * &n_delta);
    let n_theta = Float::with_val(p.bits(), &theta * n as u32);
    let two_pi = p.pi() * 2u32;
    let upper_ok = n_tau_delta <= two_pi;
    let lower_ok = n_theta >= (s as u32) * params.window_floor;
    let window_reason = match (upper_ok, lower_ok) {
        (true, true) => "in window".to_owned(),
        (false, true) => "N*tau*delta exceeds 2*pi".to_owned(),
        (true, false) => format!("N*theta below {} * s", params.window_floor),
        (false, false) => format!(
            "N*tau*delta exceeds 2*pi and N*theta below {} * s",
            params.window_floor
        ),
    };

    Ok(BoundReport {
        lower_shape,
        upper_explicit,
        slepian_asymptotic: slepian,
        prolate_shape,
        srf,
        window_ok: upper_ok && lower_ok,
        window_reason,
        user_c1: Float::with_val(p.bits(), &params.c1),
        window_floor: params.window_floor,
        n_theta_over_s: n_theta / s as u32,
        n_tau_delta_s: n_tau_delta * s as u32,
        partition,
    })
}
