//! Hermitian Jacobi eigensolver and the spectral quantities built on it.

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::hp_numeric::{log10_abs, powi, to_decimal_string, HpComplex, HpReal};
use crate::matrix_builders::{
    build_gram_closed_form, build_prolate, scaled_to_circle, HpMatrix, VandermondeSpec,
};
use crate::node_geometry::{validate_config, ClusterSpec, NodeSet, PartitionResult};

/// Largest dimension the Jacobi solver accepts.
pub const MAX_DIMENSION: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumKind {
    Singular,
    Eigen,
}

/// Non-increasing singular values or eigenvalues plus solver diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumResult {
    pub values: Vec<HpReal>,
    pub kind: SpectrumKind,
    pub precision_bits: u32,
    pub offdiag_residual: HpReal,
    pub sweeps_used: usize,
    /// Eigenvalues in the negative rounding band that were set to zero.
    pub clamped: usize,
}

impl SpectrumResult {
    /// Smallest value (the last one).
    pub fn min(&self) -> &HpReal {
        self.values.last().expect("spectra are never empty")
    }

    pub fn max(&self) -> &HpReal {
        &self.values[0]
    }

    pub fn to_json(&self) -> SpectrumJson {
        SpectrumJson {
            kind: self.kind,
            values: self.values.iter().map(to_decimal_string).collect(),
            precision_bits: self.precision_bits,
            offdiag_residual: to_decimal_string(&self.offdiag_residual),
            sweeps_used: self.sweeps_used,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumJson {
    pub kind: SpectrumKind,
    pub values: Vec<String>,
    pub precision_bits: u32,
    pub offdiag_residual: String,
    pub sweeps_used: usize,
}

/// `15 + 2·log2(n)` sweeps.
pub fn max_sweeps(n: usize) -> usize {
    15 + 2 * (n.max(1) as f64).log2().ceil() as usize
}

/// All eigenvalues of a Hermitian matrix by cyclic-by-rows Jacobi rotations.
///
/// Converged once the off-diagonal Frobenius norm is at most
/// `2^-(p-8)·‖A‖_F`. Values come back non-increasing; ties keep their
/// diagonal order.
pub fn hermitian_eigenvalues(a: &HpMatrix) -> Result<SpectrumResult> {
    if !a.is_hermitian() {
        return Err(LabError::invalid("eigensolver needs a Hermitian matrix"));
    }
    let n = a.rows();
    if n == 0 || n > MAX_DIMENSION {
        return Err(LabError::invalid(format!(
            "dimension {n} outside 1..={MAX_DIMENSION}"
        )));
    }
    let prec = a.precision();
    let bits = prec.bits();
    let mut m: Vec<Vec<HpComplex>> = (0..n)
        .map(|i| (0..n).map(|j| a.get(i, j).clone()).collect())
        .collect();
    let threshold = Float::with_val(bits, a.frobenius() * prec.epsilon(8));
    let limit = max_sweeps(n);

    let off_norm = |m: &[Vec<HpComplex>]| {
        let mut acc = prec.zero();
        for (i, row) in m.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                if i != j {
                    acc += z.norm_sqr();
                }
            }
        }
        acc.sqrt()
    };

    let mut residual = off_norm(&m);
    let mut sweeps = 0;
    while residual > threshold {
        if sweeps == limit {
            return Err(LabError::NoConvergence {
                sweeps,
                residual: to_decimal_string(&residual),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut m, p, q, bits);
            }
        }
        residual = off_norm(&m);
    }

    let mut indexed: Vec<(usize, HpReal)> = (0..n).map(|i| (i, m[i][i].re.clone())).collect();
    indexed.sort_by(|(ia, a), (ib, b)| b.total_cmp(a).then(ia.cmp(ib)));
    Ok(SpectrumResult {
        values: indexed.into_iter().map(|(_, v)| v).collect(),
        kind: SpectrumKind::Eigen,
        precision_bits: bits,
        offdiag_residual: residual,
        sweeps_used: sweeps,
        clamped: 0,
    })
}

/// Annihilates `m[p][q]`: a diagonal phase makes it real, then a real
/// rotation zeroes it.
fn rotate(m: &mut [Vec<HpComplex>], p: usize, q: usize, bits: u32) {
    let apq = m[p][q].clone();
    if apq.is_zero() {
        return;
    }
    let n = m.len();
    let r = apq.abs();
    // unit phase u = a_pq/|a_pq|; scaling column q by conj(u) makes a_pq real
    let u = HpComplex::new(
        Float::with_val(bits, &apq.re / &r),
        Float::with_val(bits, &apq.im / &r),
    );
    let uc = u.conj();
    for k in 0..n {
        if k != q {
            m[k][q] = &m[k][q] * &uc;
            m[q][k] = m[k][q].conj();
        }
    }
    m[p][q] = HpComplex::from_real(r.clone());
    m[q][p] = HpComplex::from_real(r.clone());

    let app = m[p][p].re.clone();
    let aqq = m[q][q].re.clone();
    let theta = Float::with_val(bits, &aqq - &app) / Float::with_val(bits, &r * 2u32);
    let root = (Float::with_val(bits, theta.square_ref()) + 1u32).sqrt();
    let t = if theta.is_sign_negative() {
        -(Float::with_val(bits, -&theta) + root).recip()
    } else {
        (Float::with_val(bits, &theta) + root).recip()
    };
    let c = (Float::with_val(bits, t.square_ref()) + 1u32).sqrt().recip();
    let s = Float::with_val(bits, &t * &c);
    let tr = Float::with_val(bits, &t * &r);

    m[p][p] = HpComplex::from_real(Float::with_val(bits, &app - &tr));
    m[q][q] = HpComplex::from_real(Float::with_val(bits, &aqq + &tr));
    m[p][q] = HpComplex::from_real(Float::new(bits));
    m[q][p] = HpComplex::from_real(Float::new(bits));
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = m[k][p].clone();
        let akq = m[k][q].clone();
        let new_kp = &akp.scale(&c) - &akq.scale(&s);
        let new_kq = &akp.scale(&s) + &akq.scale(&c);
        m[p][k] = new_kp.conj();
        m[q][k] = new_kq.conj();
        m[k][p] = new_kp;
        m[k][q] = new_kq;
    }
}

/// Eigenvalues of a positive semidefinite matrix; negative rounding dust
/// above `-2^-(p-16)·‖A‖_F` is clamped to zero, anything lower is an error.
pub fn psd_eigenvalues(a: &HpMatrix) -> Result<SpectrumResult> {
    let mut res = hermitian_eigenvalues(a)?;
    let prec = a.precision();
    let dust = Float::with_val(prec.bits(), a.frobenius() * prec.epsilon(16));
    for v in res.values.iter_mut() {
        if v.is_sign_negative() && !v.is_zero() {
            if Float::with_val(prec.bits(), -&*v) > dust {
                return Err(LabError::Precision(format!(
                    "eigenvalue {} of a positive semidefinite matrix is below the rounding band",
                    to_decimal_string(v)
                )));
            }
            log::debug!("clamping eigenvalue {} to zero", v.to_f64());
            *v = prec.zero();
            res.clamped += 1;
        }
    }
    Ok(res)
}

/// Singular values of `V_N(x)` as square roots of the closed-form Gram spectrum.
pub fn singular_values(spec: &VandermondeSpec) -> Result<SpectrumResult> {
    let gram = build_gram_closed_form(spec);
    let mut res = psd_eigenvalues(&gram)?;
    for v in res.values.iter_mut() {
        *v = Float::with_val(res.precision_bits, v.sqrt_ref());
    }
    res.kind = SpectrumKind::Singular;
    Ok(res)
}

/// `Λ(x, N) = σ_min / (√N (NΔ)^{ℓ-1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedMinSv {
    pub lambda_value: HpReal,
    pub log10_lambda: f64,
    pub sigma_min: HpReal,
    pub n: usize,
    pub delta: HpReal,
    pub ell: usize,
    pub precision_bits: u32,
}

pub fn lambda_from_sigma(sigma_min: &HpReal, n: usize, delta: &HpReal, ell: usize) -> HpReal {
    let bits = sigma_min.prec();
    let n_delta = Float::with_val(bits, delta * n as u32);
    let scale = Float::with_val(bits, n).sqrt() * powi(&n_delta, ell - 1);
    Float::with_val(bits, sigma_min / scale)
}

pub fn normalized_min_sv(spec: &VandermondeSpec, cluster: &ClusterSpec) -> Result<NormalizedMinSv> {
    if spec.n() == 0 {
        return Err(LabError::invalid("normalization needs N >= 1"));
    }
    validate_config(spec.nodes(), cluster)?;
    let sv = singular_values(spec)?;
    let delta = Float::with_val(sv.precision_bits, &cluster.delta);
    let lambda = lambda_from_sigma(sv.min(), spec.n(), &delta, cluster.ell);
    Ok(NormalizedMinSv {
        log10_lambda: log10_abs(&lambda),
        lambda_value: lambda,
        sigma_min: sv.min().clone(),
        n: spec.n(),
        delta,
        ell: cluster.ell,
        precision_bits: sv.precision_bits,
    })
}

/// Eigenvalues of the generalized prolate matrix `G(x)`.
pub fn prolate_eigenvalues(nodes: &NodeSet) -> Result<SpectrumResult> {
    psd_eigenvalues(&build_prolate(nodes)?)
}

/// `|σ²_min(Ṽ_N) - λ_min(G(x))|` for each `N`, with
/// `σ_min(Ṽ_N) = σ_min(V_{2N}(x/N))/√(2N)`.
pub fn prolate_limit_check(nodes: &NodeSet, n_list: &[usize]) -> Result<Vec<(usize, HpReal)>> {
    let lambda_g = prolate_eigenvalues(nodes)?.min().clone();
    n_list
        .iter()
        .map(|&n| {
            if n == 0 {
                return Err(LabError::invalid("N must be positive"));
            }
            let xi = scaled_to_circle(nodes, n)?;
            let spec = VandermondeSpec::new(2 * n, xi)?;
            let gram = build_gram_closed_form(&spec);
            let lambda_v = psd_eigenvalues(&gram)?.min().clone();
            let sigma2 = Float::with_val(lambda_v.prec(), &lambda_v / (2 * n) as u32);
            Ok((n, (sigma2 - &lambda_g).abs()))
        })
        .collect()
}

/// Singular values of `V_N` against the merged per-cluster spectra `σ̃`.
#[derive(Clone, Debug)]
pub struct DecouplingReport {
    pub sigma: Vec<HpReal>,
    pub merged: Vec<HpReal>,
    /// Smallest `σ_j / σ̃_j`.
    pub min_ratio: HpReal,
    pub holds: bool,
}

/// Checks `σ_j(V_N(x)) ≥ ½ σ̃_j` for every `j`.
pub fn decoupling_check(spec: &VandermondeSpec, partition: &PartitionResult) -> Result<DecouplingReport> {
    let full = singular_values(spec)?;
    let mut merged = Vec::with_capacity(spec.s());
    for cluster in &partition.clusters {
        let sub = VandermondeSpec::new(spec.n(), spec.nodes().subset(cluster)?)?;
        merged.extend(singular_values(&sub)?.values);
    }
    merged.sort_by(|a, b| b.total_cmp(a));
    let bits = full.precision_bits;
    let mut min_ratio = Float::with_val(bits, rug::float::Special::Infinity);
    let mut holds = true;
    for (s, t) in full.values.iter().zip(&merged) {
        let ratio = Float::with_val(bits, s / t);
        if Float::with_val(bits, t / 2u32) > *s {
            holds = false;
        }
        if ratio < min_ratio {
            min_ratio = ratio;
        }
    }
    Ok(DecouplingReport {
        sigma: full.values,
        merged,
        min_ratio,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hp_numeric::{parse_decimal, Precision};
    use crate::matrix_builders::build_vandermonde;
    use crate::node_geometry::Domain;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p() -> Precision {
        Precision::default()
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, prec: Precision) -> HpMatrix {
        HpMatrix::hermitian_from_upper(n, prec, |_, _| {
            HpComplex::new(prec.real(rng.gen_range(-1.0..1.0)), prec.real(rng.gen_range(-1.0..1.0)))
        })
    }

    #[test]
    fn identity_spectrum() {
        let id = HpMatrix::hermitian_from_upper(3, p(), |i, j| {
            HpComplex::from_real(p().int((i == j) as i64))
        });
        let res = hermitian_eigenvalues(&id).unwrap();
        assert!(res.values.iter().all(|v| *v == 1));
        assert_eq!(res.sweeps_used, 0);
    }

    #[test]
    fn two_by_two_sinc() {
        let x = parse_decimal("0.1", p()).unwrap();
        let a = Float::with_val(192, x.sin_ref()) / &x;
        let m = HpMatrix::hermitian_from_upper(2, p(), |i, j| {
            HpComplex::from_real(if i == j { p().int(1) } else { a.clone() })
        });
        let res = hermitian_eigenvalues(&m).unwrap();
        let hi = Float::with_val(192, &a + 1u32);
        let lo = Float::with_val(192, 1u32 - &a);
        let tol = p().epsilon(16);
        assert!(Float::with_val(192, &res.values[0] - &hi).abs() <= tol);
        assert!((Float::with_val(192, &res.values[1] - &lo) / &lo).abs() <= tol);
        assert!((res.values[1].to_f64() - 1.6658335e-3).abs() < 1e-10);
    }

    #[test]
    fn trace_identity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tol = p().epsilon(16);
        for n in [1, 2, 4, 7] {
            let m = random_hermitian(&mut rng, n, p());
            let res = hermitian_eigenvalues(&m).unwrap();
            let mut trace = p().zero();
            let mut sum = p().zero();
            for i in 0..n {
                trace += &m.get(i, i).re;
                sum += &res.values[i];
            }
            let scale = m.frobenius();
            assert!(Float::with_val(192, &trace - &sum).abs() / scale <= tol);
            assert!(res.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn complex_two_by_two_closed_form() {
        // [[a, b],[conj b, d]]: (a+d)/2 ± sqrt(((a-d)/2)² + |b|²)
        let pr = p();
        let m = HpMatrix::hermitian_from_upper(2, pr, |i, j| match (i, j) {
            (0, 0) => HpComplex::from_real(pr.real(2.0)),
            (1, 1) => HpComplex::from_real(pr.real(-1.0)),
            _ => HpComplex::new(pr.real(0.5), pr.real(-1.5)),
        });
        let res = hermitian_eigenvalues(&m).unwrap();
        let r = (2.25f64 + 2.5).sqrt();
        assert!((res.values[0].to_f64() - (0.5 + r)).abs() < 1e-15);
        assert!((res.values[1].to_f64() - (0.5 - r)).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = HpMatrix::from_fn(2, 2, p(), |_, _| HpComplex::zero(p()));
        assert!(hermitian_eigenvalues(&m).is_err());
    }

    #[test]
    fn singular_value_examples() {
        let spec = VandermondeSpec::new(3, NodeSet::periodic(vec![p().real(0.4)]).unwrap()).unwrap();
        assert_eq!(*singular_values(&spec).unwrap().min(), 2);

        let set = NodeSet::periodic(vec![p().zero(), p().pi()]).unwrap();
        let sv = singular_values(&VandermondeSpec::new(1, set).unwrap()).unwrap();
        let root2 = Float::with_val(192, 2).sqrt();
        for v in &sv.values {
            assert!(Float::with_val(192, v - &root2).abs() < p().epsilon(16));
        }
    }

    #[test]
    fn two_column_against_explicit_matrix() {
        // oracle: 2×2 Gram of the explicit 11×2 matrix, eigenvalues in closed form
        let set = NodeSet::periodic(vec![p().zero(), parse_decimal("1e-3", p()).unwrap()]).unwrap();
        let spec = VandermondeSpec::new(10, set).unwrap();
        let v = build_vandermonde(&spec);
        let mut b = HpComplex::zero(p());
        for k in 0..11 {
            b += &(&v.get(k, 0).conj() * v.get(k, 1));
        }
        let lo = Float::with_val(192, 11u32 - b.abs()).sqrt();
        let hi = Float::with_val(192, 11u32 + b.abs()).sqrt();
        let sv = singular_values(&spec).unwrap();
        // small value carries relative error ~ ε·N/σ²
        assert!(Float::with_val(192, &sv.values[0] - &hi).abs() / &hi < p().epsilon(16));
        assert!(Float::with_val(192, &sv.values[1] - &lo).abs() / &lo < p().epsilon(48));
    }

    #[test]
    fn normalized_single_node() {
        let pr = p();
        let spec = VandermondeSpec::new(3, NodeSet::periodic(vec![pr.zero()]).unwrap()).unwrap();
        let cluster = ClusterSpec::new(pr.real(0.1), pr.real(1.0), 1, 1, pr.zero()).unwrap();
        let lam = normalized_min_sv(&spec, &cluster).unwrap();
        let want = 2.0 / 3f64.sqrt();
        assert!((lam.lambda_value.to_f64() - want).abs() < 1e-15);
    }

    #[test]
    fn prolate_limit_single_node() {
        let set = NodeSet::line(vec![p().real(0.25)]).unwrap();
        for (n, gap) in prolate_limit_check(&set, &[3, 10, 40]).unwrap() {
            let want = 1.0 / (2.0 * n as f64);
            assert!((gap.to_f64() - want).abs() < 1e-30);
        }
    }

    #[test]
    fn prolate_limit_pair_converges() {
        let set = NodeSet::line(vec![p().zero(), parse_decimal("0.5", p()).unwrap()]).unwrap();
        let lambda_g = prolate_eigenvalues(&set).unwrap().min().to_f64();
        let gaps: Vec<f64> = prolate_limit_check(&set, &[10, 50, 250])
            .unwrap()
            .into_iter()
            .map(|(_, g)| g.to_f64())
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
        assert!(gaps[2] <= 0.01 * lambda_g);
        assert!(prolate_limit_check(&set, &[0]).is_err());
        let far = NodeSet::line(vec![p().zero(), p().real(50.0)]).unwrap();
        assert!(prolate_limit_check(&far, &[10]).is_err());
    }

    #[test]
    fn column_norm_and_trace_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let s = rng.gen_range(1..6);
            let n = rng.gen_range(s..40);
            let vals: Vec<HpReal> = (0..s).map(|j| p().real(-3.0 + j as f64 * 1.1 + rng.gen_range(0.0..0.5))).collect();
            let spec = VandermondeSpec::new(n, NodeSet::periodic(vals).unwrap()).unwrap();
            let sv = singular_values(&spec).unwrap();
            let sq: Vec<HpReal> = sv.values.iter().map(|v| Float::with_val(192, v.square_ref())).collect();
            assert!(sq.last().unwrap().to_f64() <= (n + 1) as f64 * (1.0 + 1e-40));
            let total: HpReal = sq.iter().fold(p().zero(), |acc, v| acc + v);
            let want = (s * (n + 1)) as f64;
            assert!((total.to_f64() - want).abs() / want < 1e-40);
        }
    }

    #[test]
    fn column_augmentation_does_not_raise_sigma_min() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let s = rng.gen_range(2..7);
            let vals: Vec<HpReal> = (0..s).map(|j| p().real(-3.0 + j as f64 * 0.9 + rng.gen_range(0.0..0.3))).collect();
            let spec = VandermondeSpec::new(30, NodeSet::periodic(vals).unwrap()).unwrap();
            let gram = build_gram_closed_form(&spec);
            let full = psd_eigenvalues(&gram).unwrap();
            let idx: Vec<usize> = (0..s - 1).collect();
            let minor = psd_eigenvalues(&gram.principal(&idx)).unwrap();
            assert!(full.min() <= minor.min());
        }
    }

    #[test]
    fn spectrum_json_shape() {
        let spec = VandermondeSpec::new(3, NodeSet::periodic(vec![p().real(0.4)]).unwrap()).unwrap();
        let js = serde_json::to_value(singular_values(&spec).unwrap().to_json()).unwrap();
        assert_eq!(js["kind"], "singular");
        assert_eq!(js["precision_bits"], 192);
        assert!(js["values"][0].as_str().unwrap().starts_with("2"));
    }

    #[test]
    fn decoupling_on_two_far_clusters() {
        let pr = p();
        let cluster = ClusterSpec::new(pr.real(1e-4), pr.real(2.5), 4, 2, pr.real(1.0)).unwrap();
        let set = crate::node_geometry::generate_config(
            &cluster,
            Domain::Periodic,
            crate::node_geometry::Layout::EquispacedInCluster,
            &[pr.zero(), pr.real(3.0)],
            None,
            0,
        )
        .unwrap();
        let part = validate_config(&set, &cluster).unwrap();
        let spec = VandermondeSpec::new(200, set).unwrap();
        let rep = decoupling_check(&spec, &part).unwrap();
        assert!(rep.holds, "min ratio {}", rep.min_ratio.to_f64());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn unitary_diagonal_similarity_invariance(seed in any::<u64>(), n in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_hermitian(&mut rng, n, p());
            let phases: Vec<HpComplex> = (0..n).map(|_| HpComplex::cis(&p().real(rng.gen_range(-3.0..3.0)))).collect();
            let b = HpMatrix::hermitian_from_upper(n, p(), |i, j| &(&phases[i] * a.get(i, j)) * &phases[j].conj());
            let ea = hermitian_eigenvalues(&a).unwrap();
            let eb = hermitian_eigenvalues(&b).unwrap();
            let scale = a.frobenius();
            for (x, y) in ea.values.iter().zip(&eb.values) {
                prop_assert!(Float::with_val(192, x - y).abs() / &scale <= p().epsilon(16));
            }
        }
    }
}
