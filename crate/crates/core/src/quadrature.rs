//! Gauss–Legendre rules at arbitrary precision.

use rug::Float;

use crate::hp_numeric::{HpReal, Precision};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<HpReal>,
    pub weights: Vec<HpReal>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n` from the Tricomi initial guesses.
    pub fn new(n: usize, prec: Precision) -> Self {
        assert!(n >= 1, "Gauss-Legendre needs at least one node");
        let bits = prec.bits();
        let work = bits + 32;
        let pi = Float::with_val(work, rug::float::Constant::Pi);
        let tol = Float::with_val(work, Float::i_exp(1, -(bits as i32 + 8)));
        let mut nodes = vec![Float::new(bits); n];
        let mut weights = vec![Float::new(bits); n];
        let half = n.div_ceil(2);
        for i in 0..half {
            let guess = (Float::with_val(work, &pi * (4 * i + 3) as u32) / (4 * n + 2) as u32).cos();
            let mut x = guess;
            for _ in 0..200 {
                let (p, d) = legendre(n, &x);
                let step = Float::with_val(work, &p / &d);
                x -= &step;
                if step.abs() < tol {
                    break;
                }
            }
            let (_, dp) = legendre(n, &x);
            let one_minus = Float::with_val(work, 1u32 - Float::with_val(work, x.square_ref()));
            let w = Float::with_val(work, 2u32) / (one_minus * Float::with_val(work, dp.square_ref()));
            nodes[i] = Float::with_val(bits, -&x);
            nodes[n - 1 - i] = Float::with_val(bits, &x);
            weights[i] = Float::with_val(bits, &w);
            weights[n - 1 - i] = Float::with_val(bits, &w);
        }
        Self { nodes, weights }
    }

    /// Composite rule over `panels` equal sub-intervals of `[a, b]`.
    pub fn integrate(&self, a: &HpReal, b: &HpReal, panels: usize, mut f: impl FnMut(&HpReal) -> HpReal) -> HpReal {
        let bits = a.prec().max(b.prec());
        let panels = panels.max(1);
        let width = Float::with_val(bits, b - a) / panels as u32;
        let half = Float::with_val(bits, &width / 2u32);
        let mut total = Float::new(bits);
        for k in 0..panels {
            let mid = Float::with_val(bits, a + Float::with_val(bits, &width * k as u32)) + &half;
            let mut acc = Float::new(bits);
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                let t = Float::with_val(bits, &mid + Float::with_val(bits, &half * x));
                acc += f(&t) * w;
            }
            total += acc * &half;
        }
        total
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: &HpReal) -> (HpReal, HpReal) {
    let bits = x.prec();
    let mut p0 = Float::with_val(bits, 1);
    let mut p1 = x.clone();
    for k in 2..=n {
        let a = Float::with_val(bits, x * &p1) * (2 * k - 1) as u32;
        let b = Float::with_val(bits, &p0 * (k - 1) as u32);
        let p2 = (a - b) / k as u32;
        p0 = p1;
        p1 = p2;
    }
    // P_n' = n (x P_n - P_{n-1}) / (x² - 1)
    let num = (Float::with_val(bits, x * &p1) - &p0) * n as u32;
    let den = Float::with_val(bits, x.square_ref()) - 1u32;
    (p1.clone(), num / den)
}
