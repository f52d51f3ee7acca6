//! Combinatorial form factors: sums over pair-occupation compositions
//! `Σ_{Σt_j = l} Π_j w_j(t_j)`, built mode by mode as log-domain convolutions.
//!
//! Two table conventions are exposed verbatim ([`phi_plain`] with weights
//! `(1/2)_t λ^{2t}` and [`phi_general`] with `(1/2+n+b)_t (1/2+m+b)_t
//! (4λ)^{2t}/(2t+b)!`). The steady-state moments need the generalized weights
//! at `λ/2`, whose all-zero specialization is `(1/2)_t λ^{2t}/t!`; those are
//! produced by [`mode_weights`] and [`class_weights`] and combined by
//! [`ClassConvolver`].

use crate::specialfn::{ln_factorial, ln_pochhammer_real, LogComplex};
use crate::{Error, Result};

/// Table of `Φ_l`, `l = 0..=cutoff`, all real positive.
#[derive(Clone, Debug, PartialEq)]
pub struct FormFactorTable {
    pub values: Vec<LogComplex>,
    pub lambda: Vec<f64>,
    pub n_vec: Vec<usize>,
    pub m_vec: Vec<usize>,
    pub b_vec: Vec<bool>,
    pub cutoff: usize,
}

impl FormFactorTable {
    pub fn log_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.log_mag).collect()
    }
}

/// Log-domain convolution `c_l = ln Σ_p e^{a_p + b_{l-p}}` for `l ≤ k`.
pub fn convolve(a: &[f64], b: &[f64], k: usize) -> Vec<f64> {
    let mut out = vec![f64::NEG_INFINITY; k + 1];
    let la = a.len().min(k + 1);
    let lb = b.len().min(k + 1);
    let mut buf = Vec::with_capacity(k + 1);
    for (l, o) in out.iter_mut().enumerate() {
        let p_lo = (l + 1).saturating_sub(lb);
        let p_hi = l.min(la.saturating_sub(1));
        if la == 0 || p_lo > p_hi {
            continue;
        }
        buf.clear();
        let mut mx = f64::NEG_INFINITY;
        for p in p_lo..=p_hi {
            let v = a[p] + b[l - p];
            buf.push(v);
            if v > mx {
                mx = v;
            }
        }
        if mx == f64::NEG_INFINITY {
            continue;
        }
        let s: f64 = buf.iter().map(|&v| (v - mx).exp()).sum();
        *o = mx + s.ln();
    }
    out
}

fn ln_pow(x: f64, e: usize) -> f64 {
    if e == 0 {
        0.0
    } else if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        e as f64 * x.ln()
    }
}

/// `ln[(1/2+m+b)_t (1/2+n+b)_t (2λ)^{2t} / (2t+b)!]` for `t = 0..=k`.
///
/// This is the single-mode weight entering every normally ordered moment
/// `⟨b†^{2n+b} b^{2m+b}⟩`; at `n = m = b = 0` it equals `(1/2)_t λ^{2t}/t!`.
pub fn mode_weights(lambda: f64, n: usize, m: usize, b: bool, k: usize) -> Vec<f64> {
    generalized_weights(2.0 * lambda, n, m, b, k)
}

fn generalized_weights(scaled_lambda: f64, n: usize, m: usize, b: bool, k: usize) -> Vec<f64> {
    let bi = b as usize;
    let an = 0.5 + (n + bi) as f64;
    let am = 0.5 + (m + bi) as f64;
    let mut w = Vec::with_capacity(k + 1);
    let mut acc = -ln_factorial(bi);
    w.push(acc);
    for t in 1..=k {
        let tf = (t - 1) as f64;
        // ratio of consecutive terms keeps this O(k)
        acc += (an + tf).ln() + (am + tf).ln() - ((2 * t - 1 + bi) as f64).ln() - ((2 * t + bi) as f64).ln();
        w.push(acc + ln_pow(scaled_lambda, 2 * t));
    }
    w
}

/// `ln[(s/2)_t λ^{2t} / t!]`: `s` identical modes at `n = m = b = 0` combined.
pub fn class_weights(lambda: f64, size: usize, k: usize) -> Vec<f64> {
    if size == 0 {
        let mut w = vec![f64::NEG_INFINITY; k + 1];
        w[0] = 0.0;
        return w;
    }
    let a = size as f64 / 2.0;
    let mut w = Vec::with_capacity(k + 1);
    let mut acc = 0.0;
    w.push(0.0);
    for t in 1..=k {
        acc += (a + (t - 1) as f64).ln() - (t as f64).ln();
        w.push(acc + ln_pow(lambda, 2 * t));
    }
    w
}

fn check_lambda(lambda: &[f64]) -> Result<()> {
    if let Some(l) = lambda.iter().find(|&&l| !(l >= 0.0) || !l.is_finite()) {
        return Err(Error::InvalidArgument(format!("singular values must be finite and non-negative, got {l}")));
    }
    Ok(())
}

fn table_from_logs(logs: Vec<f64>, lambda: &[f64], n: &[usize], m: &[usize], b: &[bool], k: usize) -> FormFactorTable {
    FormFactorTable {
        values: logs.into_iter().map(LogComplex::from_log).collect(),
        lambda: lambda.to_vec(),
        n_vec: n.to_vec(),
        m_vec: m.to_vec(),
        b_vec: b.to_vec(),
        cutoff: k,
    }
}

/// `Φ_l = Σ_{Σk_j=l} Π_j (1/2)_{k_j} λ_j^{2k_j}` by the mode-by-mode recursion.
pub fn phi_plain(lambda: &[f64], k: usize) -> Result<FormFactorTable> {
    check_lambda(lambda)?;
    let mut acc = vec![f64::NEG_INFINITY; k + 1];
    acc[0] = 0.0;
    for &l in lambda {
        let w: Vec<f64> = (0..=k).map(|p| ln_pochhammer_real(0.5, p) + ln_pow(l, 2 * p)).collect();
        acc = convolve(&acc, &w, k);
    }
    let z = vec![0; lambda.len()];
    Ok(table_from_logs(acc, lambda, &z, &z, &vec![false; lambda.len()], k))
}

/// `Φ_l(λ, n, m, b) = Σ_{Σk_j=l} Π_j (1/2+n_j+b_j)_{k_j}(1/2+m_j+b_j)_{k_j}(4λ_j)^{2k_j}/(2k_j+b_j)!`.
pub fn phi_general(lambda: &[f64], n_vec: &[usize], m_vec: &[usize], b_vec: &[bool], k: usize) -> Result<FormFactorTable> {
    let len = lambda.len();
    if n_vec.len() != len || m_vec.len() != len || b_vec.len() != len {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: lambda {len}, n {}, m {}, b {}",
            n_vec.len(),
            m_vec.len(),
            b_vec.len()
        )));
    }
    check_lambda(lambda)?;
    let mut acc = vec![f64::NEG_INFINITY; k + 1];
    acc[0] = 0.0;
    for j in 0..len {
        let w = generalized_weights(4.0 * lambda[j], n_vec[j], m_vec[j], b_vec[j], k);
        acc = convolve(&acc, &w, k);
    }
    Ok(table_from_logs(acc, lambda, n_vec, m_vec, b_vec, k))
}

/// Convolutions over degeneracy classes with single and pair exclusions.
///
/// Classes of equal singular value combine in closed form, so a moment that
/// singles out modes in classes `c1, c2` costs one convolution per remaining
/// class rather than one per mode.
#[derive(Clone, Debug)]
pub struct ClassConvolver {
    lambda: Vec<f64>,
    sizes: Vec<usize>,
    cutoff: usize,
    weights: Vec<Vec<f64>>,
    prefix: Vec<Vec<f64>>,
    suffix: Vec<Vec<f64>>,
}

fn unit(k: usize) -> Vec<f64> {
    let mut u = vec![f64::NEG_INFINITY; k + 1];
    u[0] = 0.0;
    u
}

impl ClassConvolver {
    pub fn new(lambda: &[f64], sizes: &[usize], cutoff: usize) -> Self {
        let c = lambda.len();
        let weights: Vec<Vec<f64>> = (0..c).map(|i| class_weights(lambda[i], sizes[i], cutoff)).collect();
        let mut prefix = Vec::with_capacity(c + 1);
        prefix.push(unit(cutoff));
        for w in &weights {
            let next = convolve(prefix.last().unwrap(), w, cutoff);
            prefix.push(next);
        }
        let mut suffix = vec![unit(cutoff); c + 1];
        for i in (0..c).rev() {
            suffix[i] = convolve(&suffix[i + 1], &weights[i], cutoff);
        }
        ClassConvolver { lambda: lambda.to_vec(), sizes: sizes.to_vec(), cutoff, weights, prefix, suffix }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn n_classes(&self) -> usize {
        self.lambda.len()
    }

    /// `Φ_l` with no distinguished modes.
    pub fn full(&self) -> &[f64] {
        &self.prefix[self.lambda.len()]
    }

    /// All classes except `c`.
    pub fn excluding(&self, c: usize) -> Vec<f64> {
        convolve(&self.prefix[c], &self.suffix[c + 1], self.cutoff)
    }

    /// All classes except `c1` and `c2` (`c1 != c2`).
    pub fn excluding_pair(&self, c1: usize, c2: usize) -> Vec<f64> {
        let (a, b) = if c1 < c2 { (c1, c2) } else { (c2, c1) };
        let mut acc = self.prefix[a].clone();
        for w in &self.weights[a + 1..b] {
            acc = convolve(&acc, w, self.cutoff);
        }
        convolve(&acc, &self.suffix[b + 1], self.cutoff)
    }

    /// Class `c` with `removed` of its modes taken out.
    pub fn reduced_class(&self, c: usize, removed: usize) -> Vec<f64> {
        class_weights(self.lambda[c], self.sizes[c] - removed, self.cutoff)
    }
}
