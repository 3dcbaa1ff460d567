//! Reference divergences between small discrete distributions and 1-D
//! empirical samples. These are test oracles for the critic, not training
//! objectives.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

/// Probability vector over a finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    probs: Vec<f64>,
}

impl DiscreteDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Empty("distribution"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(invalid("probs", "entries must be finite and non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(
                "probs",
                alloc::format!("sums to {total}, expected 1"),
            ));
        }
        Ok(Self { probs })
    }

    /// Normalize arbitrary non-negative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(invalid("weights", "must have positive total"));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(alloc::vec![1.0 - p, p])
    }

    pub fn point_mass(support: usize, at: usize) -> Result<Self> {
        if at >= support {
            return Err(invalid("at", "outside support"));
        }
        let mut probs = alloc::vec![0.0; support];
        probs[at] = 1.0;
        Self::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Equal-weight mixture `(p + q) / 2`.
    pub fn midpoint(&self, other: &Self) -> Result<Self> {
        same_support(self, other)?;
        Ok(Self {
            probs: self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| 0.5 * (a + b))
                .collect(),
        })
    }
}

fn same_support(p: &DiscreteDist, q: &DiscreteDist) -> Result<()> {
    if p.probs.len() != q.probs.len() {
        return Err(Error::LengthMismatch {
            what: "distribution support",
            expected: p.probs.len(),
            actual: q.probs.len(),
        });
    }
    Ok(())
}

/// Logarithm base for divergence values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogBase {
    /// Nats.
    E,
    /// Bits.
    Two,
    Custom(f64),
}

impl LogBase {
    fn ln_base(self) -> f64 {
        match self {
            LogBase::E => 1.0,
            LogBase::Two => core::f64::consts::LN_2,
            LogBase::Custom(b) => libm::log(b),
        }
    }
}

/// KL(p || q) in nats. Returns `+inf` when `p` is not absolutely continuous
/// with respect to `q`.
pub fn kl(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64> {
    kl_with_base(p, q, LogBase::E)
}

pub fn kl_with_base(p: &DiscreteDist, q: &DiscreteDist, base: LogBase) -> Result<f64> {
    same_support(p, q)?;
    let mut acc = 0.0;
    for (&pi, &qi) in p.probs.iter().zip(&q.probs) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Ok(f64::INFINITY);
        }
        acc += pi * libm::log(pi / qi);
    }
    // rounding can leave a tiny negative total for nearly equal inputs
    Ok(acc.max(0.0) / base.ln_base())
}

/// True when every atom of `p` is also an atom of `q`, i.e. `kl(p, q)` is
/// finite.
pub fn absolutely_continuous(p: &DiscreteDist, q: &DiscreteDist) -> Result<bool> {
    same_support(p, q)?;
    Ok(p.probs
        .iter()
        .zip(&q.probs)
        .all(|(&pi, &qi)| pi == 0.0 || qi > 0.0))
}

/// Jensen-Shannon divergence in bits, bounded by [0, 1].
pub fn js(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64> {
    js_with_base(p, q, LogBase::Two)
}

pub fn js_with_base(p: &DiscreteDist, q: &DiscreteDist, base: LogBase) -> Result<f64> {
    let m = p.midpoint(q)?;
    Ok(0.5 * kl_with_base(p, &m, base)? + 0.5 * kl_with_base(q, &m, base)?)
}

/// Non-empty sample of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample {
    values: Vec<f64>,
}

impl EmpiricalSample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("empirical sample"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "must be finite"));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// Wasserstein-1 distance between the empirical measures of two samples.
///
/// Equal sizes use the sorted (quantile) coupling; otherwise the area
/// between the two step CDFs is integrated exactly.
pub fn wasserstein1_empirical(xs: &EmpiricalSample, ys: &EmpiricalSample) -> f64 {
    let a = xs.sorted();
    let b = ys.sorted();
    if a.len() == b.len() {
        let total: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        return total / a.len() as f64;
    }
    cdf_area(&a, &b)
}

/// ∫ |F_a(t) - F_b(t)| dt for sorted samples.
fn cdf_area(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut area = 0.0;
    let mut prev = a[0].min(b[0]);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        let fa = i as f64 / na;
        let fb = j as f64 / nb;
        area += (fa - fb).abs() * (next - prev);
        while a.get(i).is_some_and(|&x| x == next) {
            i += 1;
        }
        while b.get(j).is_some_and(|&y| y == next) {
            j += 1;
        }
        prev = next;
    }
    area
}
