//! Vandermonde, Gram, prolate and shifted-Vandermonde matrices.

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::hp_numeric::{to_decimal_string, HpComplex, HpReal, Precision};
use crate::node_geometry::{Domain, NodeSet};

/// Dense row-major complex matrix at one precision.
#[derive(Clone, Debug, PartialEq)]
pub struct HpMatrix {
    rows: usize,
    cols: usize,
    precision_bits: u32,
    hermitian: bool,
    data: Vec<HpComplex>,
}

impl HpMatrix {
    pub fn from_fn(
        rows: usize,
        cols: usize,
        prec: Precision,
        mut f: impl FnMut(usize, usize) -> HpComplex,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let z = f(i, j);
                data.push(HpComplex::new(
                    Float::with_val(prec.bits(), z.re),
                    Float::with_val(prec.bits(), z.im),
                ));
            }
        }
        Self {
            rows,
            cols,
            precision_bits: prec.bits(),
            hermitian: false,
            data,
        }
    }

    /// Builds a Hermitian matrix from its upper triangle; the lower triangle
    /// is the exact conjugate and the diagonal is made exactly real.
    pub fn hermitian_from_upper(
        n: usize,
        prec: Precision,
        mut f: impl FnMut(usize, usize) -> HpComplex,
    ) -> Self {
        let mut m = Self::from_fn(n, n, prec, |_, _| HpComplex::zero(prec));
        for i in 0..n {
            for j in i..n {
                let z = f(i, j);
                let z = HpComplex::new(
                    Float::with_val(prec.bits(), z.re),
                    Float::with_val(prec.bits(), z.im),
                );
                if i == j {
                    m.data[i * n + i] = HpComplex::from_real(z.re);
                } else {
                    m.data[j * n + i] = z.conj();
                    m.data[i * n + j] = z;
                }
            }
        }
        m.hermitian = true;
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn precision(&self) -> Precision {
        Precision::new(self.precision_bits).expect("matrix precision is validated on construction")
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn get(&self, i: usize, j: usize) -> &HpComplex {
        &self.data[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<HpComplex> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    /// `Aᴴ A` by direct summation, marked Hermitian.
    pub fn gram(&self) -> Self {
        let prec = self.precision();
        Self::hermitian_from_upper(self.cols, prec, |a, b| {
            let mut acc = HpComplex::zero(prec);
            for k in 0..self.rows {
                acc += &(&self.get(k, a).conj() * self.get(k, b));
            }
            acc
        })
    }

    /// `A · v`.
    pub fn mul_vec(&self, v: &[HpComplex]) -> Result<Vec<HpComplex>> {
        if v.len() != self.cols {
            return Err(LabError::invalid("vector length does not match column count"));
        }
        let prec = self.precision();
        Ok((0..self.rows)
            .map(|i| {
                let mut acc = HpComplex::zero(prec);
                for (j, vj) in v.iter().enumerate() {
                    acc += &(self.get(i, j) * vj);
                }
                acc
            })
            .collect())
    }

    /// Principal submatrix on `indices`.
    pub fn principal(&self, indices: &[usize]) -> Self {
        let mut m = Self::from_fn(indices.len(), indices.len(), self.precision(), |a, b| {
            self.get(indices[a], indices[b]).clone()
        });
        m.hermitian = self.hermitian;
        m
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> HpReal {
        let mut acc = self.precision().zero();
        for z in &self.data {
            acc += z.norm_sqr();
        }
        acc.sqrt()
    }

    pub fn to_dump(&self) -> MatrixDump {
        MatrixDump {
            precision_bits: self.precision_bits,
            rows: self.rows,
            cols: self.cols,
            hermitian: self.hermitian,
            entries: self
                .data
                .iter()
                .map(|z| [to_decimal_string(&z.re), to_decimal_string(&z.im)])
                .collect(),
        }
    }
}

/// JSON matrix dump: row-major `(re, im)` decimal-string pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixDump {
    pub precision_bits: u32,
    pub rows: usize,
    pub cols: usize,
    pub hermitian: bool,
    pub entries: Vec<[String; 2]>,
}

impl MatrixDump {
    pub fn parse(&self) -> Result<HpMatrix> {
        if self.entries.len() != self.rows * self.cols {
            return Err(LabError::parse("entry count does not match dimensions"));
        }
        let prec = Precision::new(self.precision_bits)?;
        let mut data = Vec::with_capacity(self.entries.len());
        for [re, im] in &self.entries {
            data.push(HpComplex::new(
                crate::hp_numeric::parse_decimal(re, prec)?,
                crate::hp_numeric::parse_decimal(im, prec)?,
            ));
        }
        Ok(HpMatrix {
            rows: self.rows,
            cols: self.cols,
            precision_bits: self.precision_bits,
            hermitian: self.hermitian,
            data,
        })
    }
}

/// `V_N(x)` inputs: maximal frequency index and periodic nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct VandermondeSpec {
    n: usize,
    nodes: NodeSet,
}

impl VandermondeSpec {
    pub fn new(n: usize, nodes: NodeSet) -> Result<Self> {
        if nodes.domain() != Domain::Periodic {
            return Err(LabError::invalid("Vandermonde nodes must be periodic"));
        }
        if n + 1 < nodes.len() {
            return Err(LabError::invalid(format!(
                "N = {n} is below s - 1 = {}",
                nodes.len() - 1
            )));
        }
        Ok(Self { n, nodes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    pub fn s(&self) -> usize {
        self.nodes.len()
    }

    pub fn precision(&self) -> Precision {
        Precision::new(self.nodes.precision_bits()).unwrap_or_default()
    }

    pub fn with_precision(&self, prec: Precision) -> Self {
        Self {
            n: self.n,
            nodes: self.nodes.with_precision(prec),
        }
    }
}

/// `(N+1) × s` matrix with entries `e^{ı k x_j}`.
pub fn build_vandermonde(spec: &VandermondeSpec) -> HpMatrix {
    let prec = spec.precision();
    let x = spec.nodes().nodes();
    HpMatrix::from_fn(spec.n() + 1, spec.s(), prec, |k, j| {
        HpComplex::cis(&Float::with_val(prec.bits(), &x[j] * k as u32))
    })
}

/// Dirichlet sum `Σ_{k=0}^{N} e^{ıkδ}`.
///
/// Evaluated as `e^{ıNδ/2} sin((N+1)δ/2) / sin(δ/2)`, which equals the
/// geometric-series quotient but keeps full relative accuracy for tiny `δ`.
/// Works with 32 guard bits and rounds to the precision of `delta`.
pub fn dirichlet_sum(n: usize, delta: &HpReal) -> HpComplex {
    let prec = delta.prec();
    if delta.is_zero() {
        return HpComplex::from_real(Float::with_val(prec, n + 1));
    }
    let work = prec + GUARD_BITS;
    let half = Float::with_val(work, delta) / 2u32;
    let num = Float::with_val(work, &half * (n + 1) as u32).sin();
    let den = Float::with_val(work, half.sin_ref());
    let amp = num / den;
    let phase = HpComplex::cis(&Float::with_val(work, &half * n as u32));
    round_to(&phase.scale(&amp), prec)
}

const GUARD_BITS: u32 = 32;

fn round_to(z: &HpComplex, bits: u32) -> HpComplex {
    HpComplex::new(Float::with_val(bits, &z.re), Float::with_val(bits, &z.im))
}

/// `V_Nᴴ V_N` with entries `Σ_{k=0}^{N} e^{ık(x_m - x_j)}` in closed form.
pub fn build_gram_closed_form(spec: &VandermondeSpec) -> HpMatrix {
    let prec = spec.precision();
    let x = spec.nodes().nodes();
    let work = prec.bits() + GUARD_BITS;
    HpMatrix::hermitian_from_upper(spec.s(), prec, |j, m| {
        if j == m {
            HpComplex::from_real(Float::with_val(prec.bits(), spec.n() + 1))
        } else {
            let d = dirichlet_sum(spec.n(), &Float::with_val(work, &x[m] - &x[j]));
            round_to(&d, prec.bits())
        }
    })
}

/// Real symmetric matrix with entries `sin(x_j - x_k)/(x_j - x_k)`, unit diagonal.
pub fn build_prolate(nodes: &NodeSet) -> Result<HpMatrix> {
    if nodes.domain() != Domain::Line {
        return Err(LabError::invalid("prolate matrix needs line-domain nodes"));
    }
    let prec = Precision::new(nodes.precision_bits())?;
    let x = nodes.nodes();
    let tiny = Float::with_val(prec.bits(), Float::i_exp(1, -(prec.bits() as i32 / 2)));
    for j in 0..x.len() {
        for k in 0..j {
            let d = Float::with_val(prec.bits(), &x[j] - &x[k]);
            if d.is_zero() {
                return Err(LabError::degenerate(format!("nodes {k} and {j} coincide")));
            }
            if d.clone().abs() < tiny {
                log::warn!(
                    "nodes {k} and {j} differ by less than 2^-(p/2); consider raising precision"
                );
            }
        }
    }
    Ok(HpMatrix::hermitian_from_upper(x.len(), prec, |j, k| {
        if j == k {
            HpComplex::from_real(prec.int(1))
        } else {
            let d = Float::with_val(prec.bits(), &x[j] - &x[k]);
            let s = Float::with_val(prec.bits(), d.sin_ref());
            HpComplex::from_real(s / d)
        }
    }))
}

/// `(2N+1) × s` matrix `Ṽ_N` with entries `e^{ık x_j/N}/√(2N)`, `k = -N..=N`.
pub fn build_shifted_vandermonde(nodes: &NodeSet, n: usize) -> Result<HpMatrix> {
    if nodes.domain() != Domain::Line {
        return Err(LabError::invalid("shifted Vandermonde needs line-domain nodes"));
    }
    if n == 0 {
        return Err(LabError::invalid("N must be positive"));
    }
    let scaled = scaled_to_circle(nodes, n)?;
    let prec = Precision::new(nodes.precision_bits())?;
    let norm = Float::with_val(prec.bits(), 2 * n).sqrt().recip();
    let xi = scaled.nodes();
    Ok(HpMatrix::from_fn(2 * n + 1, nodes.len(), prec, |row, j| {
        let k = row as i64 - n as i64;
        let phase = Float::with_val(prec.bits(), &xi[j] * k);
        HpComplex::cis(&phase).scale(&norm)
    }))
}

/// `x/N` as a periodic node set; fails if any scaled node leaves `(-π, π]`.
pub fn scaled_to_circle(nodes: &NodeSet, n: usize) -> Result<NodeSet> {
    nodes.scaled(n, Domain::Periodic).map_err(|e| match e {
        LabError::InvalidParameter(msg) => {
            LabError::invalid(format!("scaled node outside (-pi, pi] for N = {n}: {msg}"))
        }
        other => other,
    })
}
