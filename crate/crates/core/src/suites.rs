//! Seeded randomized suites over the exponential-sum checks.
//!
//! Instance `i` of a suite draws from `ChaCha8Rng::seed_from_u64(seed + i)`,
//! so any single row can be replayed from its recorded seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::Float;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::Result;
use crate::expsum::{
    check_cor_turan, check_nikolskii, check_salem_ratio, check_turan, riemann_gap, CheckOutcome, ExpSum,
    NormExp,
};
use crate::hp_numeric::{parse_decimal, to_decimal_digits, HpComplex, HpReal, Precision, PrecisionPolicy};

/// Default suite seed, recorded in every row.
pub const DEFAULT_SEED: u64 = 20_190_417;

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub instances: usize,
    pub seed: u64,
    pub max_ell: usize,
    pub bernstein_c: HpReal,
    pub policy: PrecisionPolicy,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            instances: 500,
            seed: DEFAULT_SEED,
            max_ell: 5,
            bernstein_c: Precision::default().int(1),
            policy: PrecisionPolicy::default(),
        }
    }
}

/// One row of an inequality-suite report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub check: String,
    pub params: serde_json::Value,
    pub lhs: String,
    pub rhs: String,
    pub holds: bool,
    pub seed: u64,
}

impl InequalityCheck {
    fn from_outcome(check: &str, params: serde_json::Value, out: &CheckOutcome, seed: u64) -> Self {
        Self {
            check: check.to_owned(),
            params,
            lhs: to_decimal_digits(&out.lhs, 20),
            rhs: to_decimal_digits(&out.rhs, 20),
            holds: out.holds,
            seed,
        }
    }

    fn error(check: &str, params: serde_json::Value, err: &crate::LabError, seed: u64) -> Self {
        Self {
            check: check.to_owned(),
            params: json!({ "instance": params, "error": err.to_string() }),
            lhs: String::new(),
            rhs: String::new(),
            holds: false,
            seed,
        }
    }
}

/// Pass/fail tally of a list of rows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteTally {
    pub check: String,
    pub instances: usize,
    pub violations: usize,
}

impl SuiteTally {
    pub fn of(check: &str, rows: &[InequalityCheck]) -> Self {
        Self {
            check: check.to_owned(),
            instances: rows.len(),
            violations: rows.iter().filter(|r| !r.holds).count(),
        }
    }

    pub fn passed(&self) -> bool {
        self.instances > 0 && self.violations == 0
    }
}

fn rng_for(cfg: &SuiteConfig, i: usize) -> (u64, ChaCha8Rng) {
    let seed = cfg.seed.wrapping_add(i as u64);
    (seed, ChaCha8Rng::seed_from_u64(seed))
}

fn random_coeffs(rng: &mut ChaCha8Rng, ell: usize, prec: Precision) -> Vec<HpComplex> {
    (0..ell)
        .map(|_| loop {
            let (re, im): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if re.hypot(im) > 1e-3 {
                break HpComplex::new(prec.real(re), prec.real(im));
            }
        })
        .collect()
}

/// Frequencies spread over `[-spread, spread]`, at least `0.05` apart.
fn spread_freqs(rng: &mut ChaCha8Rng, ell: usize, spread: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(ell);
    while out.len() < ell {
        let v = rng.gen_range(-spread..spread);
        if out.iter().all(|w| (w - v).abs() > 0.05) {
            out.push(v);
        }
    }
    out
}

/// Unit-scale cluster pattern: consecutive gaps in `[1, tau]`, centered.
fn cluster_pattern(rng: &mut ChaCha8Rng, ell: usize, tau: f64) -> Vec<f64> {
    let mut y = vec![0.0];
    for _ in 1..ell {
        let g = if tau > 1.0 { rng.gen_range(1.0..tau) } else { 1.0 };
        y.push(y.last().unwrap() + g);
    }
    let mid = y.last().unwrap() / 2.0;
    y.iter().map(|v| v - mid).collect()
}

fn scaled(pattern: &[f64], delta: &HpReal) -> Vec<HpReal> {
    let bits = delta.prec();
    pattern.iter().map(|&y| Float::with_val(bits, delta * y)).collect()
}

fn as_strings(x: &[f64]) -> Vec<String> {
    x.iter().map(|v| format!("{v:.17e}")).collect()
}

/// `‖P‖_{L∞[0,T]} ≤ (4e T/μ(Ω))^{ℓ-1} ‖P‖_{L∞(Ω)}` on random sums and sub-intervals.
pub fn turan_suite(cfg: &SuiteConfig) -> Vec<InequalityCheck> {
    (0..cfg.instances)
        .into_par_iter()
        .map(|i| {
            let (seed, mut rng) = rng_for(cfg, i);
            let prec = Precision::new(cfg.policy.floor_bits).unwrap_or_default();
            let ell = rng.gen_range(1..=cfg.max_ell);
            let freqs = spread_freqs(&mut rng, ell, 6.0);
            let coeffs = random_coeffs(&mut rng, ell, prec);
            let len: f64 = rng.gen_range(1.0..4.0);
            let w = len * rng.gen_range(0.05..1.0);
            let c = rng.gen_range(0.0..(len - w).max(1e-9));
            let params = json!({ "ell": ell, "freqs": as_strings(&freqs), "interval": [0.0, len], "omega": [c, c + w] });
            let p = ExpSum::new(coeffs, freqs.iter().map(|&x| prec.real(x)).collect()).unwrap();
            let (a, b) = (prec.zero(), prec.real(len));
            let (oc, od) = (prec.real(c), Float::with_val(prec.bits(), prec.real(c) + w).min(&b));
            match check_turan(&p, (&a, &b), (&oc, &od), &cfg.bernstein_c) {
                Ok(out) => InequalityCheck::from_outcome("turan", params, &out, seed),
                Err(e) => InequalityCheck::error("turan", params, &e, seed),
            }
        })
        .collect()
}

/// `‖P‖_{L∞[0,1]} ≤ (πℓ/2) ‖P‖_{L²[0,1]}` on random sums.
pub fn nikolskii_suite(cfg: &SuiteConfig) -> Vec<InequalityCheck> {
    (0..cfg.instances)
        .into_par_iter()
        .map(|i| {
            let (seed, mut rng) = rng_for(cfg, i);
            let prec = Precision::new(cfg.policy.floor_bits).unwrap_or_default();
            let ell = rng.gen_range(1..=cfg.max_ell);
            let freqs = spread_freqs(&mut rng, ell, 30.0);
            let coeffs = random_coeffs(&mut rng, ell, prec);
            let params = json!({ "ell": ell, "freqs": as_strings(&freqs), "p": "inf", "q": 2 });
            let p = ExpSum::new(coeffs, freqs.iter().map(|&x| prec.real(x)).collect()).unwrap();
            match check_nikolskii(&p, NormExp::Infinity, NormExp::Finite(2.0), &cfg.bernstein_c) {
                Ok(out) => InequalityCheck::from_outcome("nikolskii", params, &out, seed),
                Err(e) => InequalityCheck::error("nikolskii", params, &e, seed),
            }
        })
        .collect()
}

struct Clustered {
    n: usize,
    delta: HpReal,
    sum: ExpSum,
    params: serde_json::Value,
}

/// A single Δ-separated cluster with `NτΔ ≤ 1`, `Δ ∈ {1e-2, 1e-3, 1e-4}`.
fn clustered_instance(rng: &mut ChaCha8Rng, cfg: &SuiteConfig, max_ell: usize) -> Result<Clustered> {
    let ell = rng.gen_range(1..=max_ell);
    let tau = rng.gen_range(1.0..2.0);
    let delta_str = ["1e-2", "1e-3", "1e-4"][rng.gen_range(0..3)];
    let delta_f: f64 = delta_str.parse().unwrap();
    let n_max = ((1.0 / (tau * delta_f)).floor() as usize).min(400);
    let n = rng.gen_range(10.min(n_max)..=n_max).max(1);
    let probe = parse_decimal(delta_str, Precision::default())?;
    let prec = cfg.policy.precision_for(ell, n, &probe)?;
    let delta = parse_decimal(delta_str, prec)?;
    let pattern = cluster_pattern(rng, ell, tau);
    let coeffs = random_coeffs(rng, ell, prec);
    let params = json!({ "ell": ell, "N": n, "delta": delta_str, "tau": tau, "pattern": as_strings(&pattern) });
    let sum = ExpSum::new(coeffs, scaled(&pattern, &delta))?;
    Ok(Clustered { n, delta, sum, params })
}

/// `‖P‖_{L²[0,N]} ≥ (2/(πℓ)) (NΔ/16πe)^{ℓ-1} ‖P‖_{L²[0,4π/Δ]}` on clustered sums.
pub fn cor_turan_suite(cfg: &SuiteConfig) -> Vec<InequalityCheck> {
    (0..cfg.instances)
        .into_par_iter()
        .map(|i| {
            let (seed, mut rng) = rng_for(cfg, i);
            let inst = match clustered_instance(&mut rng, cfg, cfg.max_ell.min(4)) {
                Ok(inst) => inst,
                Err(e) => return InequalityCheck::error("cor_turan", json!(null), &e, seed),
            };
            match check_cor_turan(&inst.sum, inst.n, &inst.delta) {
                Ok(out) => InequalityCheck::from_outcome("cor_turan", inst.params, &out, seed),
                Err(e) => InequalityCheck::error("cor_turan", inst.params, &e, seed),
            }
        })
        .collect()
}

/// `‖P‖²_{2,N} ≥ (N/2) ‖P‖²_{L²[0,N]}` on clustered sums.
///
/// `lhs` is `‖P‖²_{2,N}` and `rhs` the scaled continuous norm; `params`
/// records whether the Riemann-gap hypothesis was met.
pub fn discrete_relation_suite(cfg: &SuiteConfig) -> Vec<InequalityCheck> {
    (0..cfg.instances)
        .into_par_iter()
        .map(|i| {
            let (seed, mut rng) = rng_for(cfg, i);
            let inst = match clustered_instance(&mut rng, cfg, cfg.max_ell) {
                Ok(inst) => inst,
                Err(e) => return InequalityCheck::error("discrete_relation", json!(null), &e, seed),
            };
            match riemann_gap(&inst.sum, inst.n, &cfg.bernstein_c) {
                Ok(g) => {
                    let bits = g.integral.prec();
                    let rhs = Float::with_val(bits, &g.integral * inst.n as u32) / 2u32;
                    let mut params = inst.params;
                    params["gap_hypothesis"] = json!(g.relation_applicable);
                    params["gap"] = json!(to_decimal_digits(&g.gap, 12));
                    params["rhs_shape"] = json!(to_decimal_digits(&g.rhs_shape, 12));
                    let out = CheckOutcome { lhs: g.discrete_sqr, rhs, holds: g.relation_holds };
                    InequalityCheck::from_outcome("discrete_relation", params, &out, seed)
                }
                Err(e) => InequalityCheck::error("discrete_relation", inst.params, &e, seed),
            }
        })
        .collect()
}

/// Largest `gap / rhs_shape` over random `ℓ = 2` sums at fixed `N`.
pub fn riemann_ratio_suite(cfg: &SuiteConfig, n: usize) -> Result<f64> {
    let ratios: Vec<Result<f64>> = (0..cfg.instances)
        .into_par_iter()
        .map(|i| {
            let (_, mut rng) = rng_for(cfg, i);
            let prec = Precision::new(cfg.policy.floor_bits)?;
            let freqs = spread_freqs(&mut rng, 2, 3.0);
            let coeffs = random_coeffs(&mut rng, 2, prec);
            let p = ExpSum::new(coeffs, freqs.iter().map(|&x| prec.real(x)).collect())?;
            let g = riemann_gap(&p, n, &cfg.bernstein_c)?;
            Ok(Float::with_val(prec.bits(), &g.gap / &g.rhs_shape).to_f64())
        })
        .collect();
    let mut worst = 0.0f64;
    for r in ratios {
        worst = worst.max(r?);
    }
    Ok(worst)
}

/// Empirical Salem constant per separation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SalemReport {
    pub deltas: Vec<String>,
    /// Minimum ratio per entry of `deltas`.
    pub minima: Vec<String>,
    /// `(max - min) / min` of `minima`.
    pub spread: f64,
    pub positive: bool,
    pub stable: bool,
    pub rows: Vec<InequalityCheck>,
}

/// Salem ratios for the same seeded patterns scaled to each `Δ`.
///
/// A row records the ratio as `lhs` and `0` as `rhs`; `holds` means the
/// ratio is positive.
pub fn salem_suite(cfg: &SuiteConfig, deltas: &[&str]) -> Result<SalemReport> {
    let prec = Precision::new(cfg.policy.floor_bits)?;
    let mut rows = Vec::new();
    let mut minima = Vec::new();
    for d in deltas {
        let delta = parse_decimal(d, prec)?;
        let batch: Vec<(InequalityCheck, Option<HpReal>)> = (0..cfg.instances)
            .into_par_iter()
            .map(|i| {
                let (seed, mut rng) = rng_for(cfg, i);
                let ell = rng.gen_range(1..=cfg.max_ell);
                let pattern = cluster_pattern(&mut rng, ell, 3.0);
                let coeffs = random_coeffs(&mut rng, ell, prec);
                let params = json!({ "ell": ell, "delta": d, "pattern": as_strings(&pattern) });
                let ratio = ExpSum::new(coeffs, scaled(&pattern, &delta)).and_then(|p| check_salem_ratio(&p, &delta));
                match ratio {
                    Ok(r) => {
                        let out = CheckOutcome { holds: r > 0, lhs: r.clone(), rhs: prec.zero() };
                        (InequalityCheck::from_outcome("salem", params, &out, seed), Some(r))
                    }
                    Err(e) => (InequalityCheck::error("salem", params, &e, seed), None),
                }
            })
            .collect();
        let mut min: Option<HpReal> = None;
        for (row, r) in batch {
            if let Some(r) = r {
                if min.as_ref().map_or(true, |m| r < *m) {
                    min = Some(r);
                }
            }
            rows.push(row);
        }
        minima.push(min.unwrap_or_else(|| prec.zero()));
    }
    let lo = minima.iter().map(Float::to_f64).fold(f64::INFINITY, f64::min);
    let hi = minima.iter().map(Float::to_f64).fold(0.0, f64::max);
    let positive = lo > 0.0 && rows.iter().all(|r| r.holds);
    let spread = if lo > 0.0 { (hi - lo) / lo } else { f64::INFINITY };
    Ok(SalemReport {
        deltas: deltas.iter().map(|d| d.to_string()).collect(),
        minima: minima.iter().map(|m| to_decimal_digits(m, 20)).collect(),
        spread,
        positive,
        stable: spread <= 0.2,
        rows,
    })
}
