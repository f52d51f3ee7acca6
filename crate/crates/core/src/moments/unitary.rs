use num_complex::Complex64;

use crate::model::check_nonresonant;
use crate::specialfn::{hyper_pfq_weighted, pochhammer, SeriesOptions, SeriesResult};
use crate::Result;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `₁F₂(a; δ+s, δ*+s; λ²)` with an optional log weight on term `l`.
fn shifted_1f2<W: Fn(usize) -> f64>(a: f64, delta: Complex64, s: f64, lambda: f64, w: W, opts: SeriesOptions) -> Result<SeriesResult> {
    let d = delta + s;
    hyper_pfq_weighted(&[c(a)], &[d, d.conj()], c(lambda * lambda), w, opts)
}

/// `ln ₁F₂(N/2; δ, δ*; λ²)`, the norm of the purification.
pub fn log_norm_unitary(lambda: f64, n_modes: usize, delta: Complex64, opts: SeriesOptions) -> Result<f64> {
    check_nonresonant(delta)?;
    Ok(shifted_1f2(n_modes as f64 / 2.0, delta, 0.0, lambda, |_| 0.0, opts)?.value.log_mag)
}

/// `⟨Ψ|K₊ⁿ N₊ᵏ K₋ᵐ|Ψ⟩/⟨Ψ|Ψ⟩` for `N` modes sharing the singular value `λ`:
/// `λ^{2n}(-1)^{n+m}(N/2)_n(N/2)_m/[(δ*)_n(δ)_m] · ₂F₃(N/2+n, N/2+m; N/2, δ*+n, δ+m; λ²)`
/// with term `l` weighted by `(2l)^k`, over `₁F₂(N/2; δ, δ*; λ²)`.
pub fn collective_moment_unitary(
    n: usize,
    k: u32,
    m: usize,
    lambda: f64,
    n_modes: usize,
    delta: Complex64,
    opts: SeriesOptions,
) -> Result<Complex64> {
    check_nonresonant(delta)?;
    if lambda == 0.0 {
        let v = if n == 0 && m == 0 && k == 0 { 1.0 } else { 0.0 };
        return Ok(c(v));
    }
    let half = n_modes as f64 / 2.0;
    let weight = |l: usize| {
        if k == 0 {
            0.0
        } else if l == 0 {
            f64::NEG_INFINITY
        } else {
            k as f64 * (2.0 * l as f64).ln()
        }
    };
    let z = c(lambda * lambda);
    let top = hyper_pfq_weighted(
        &[c(half + n as f64), c(half + m as f64)],
        &[c(half), delta.conj() + n as f64, delta + m as f64],
        z,
        weight,
        opts,
    )?;
    let norm = shifted_1f2(half, delta, 0.0, lambda, |_| 0.0, opts)?;
    let mut pref = pochhammer(c(half), n) * pochhammer(c(half), m) / pochhammer(delta.conj(), n) / pochhammer(delta, m);
    pref = pref.scale_log(2.0 * n as f64 * lambda.ln());
    if (n + m) % 2 == 1 {
        pref = -pref;
    }
    Ok((pref * top.value / norm.value).to_complex())
}

/// Physical singular-mode moments when every `λ_j = λ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitaryModeMoments {
    /// `⟨b†b⟩`.
    pub occupation: f64,
    /// `⟨b²⟩`.
    pub pair: Complex64,
    /// `⟨b†² b²⟩` on one mode.
    pub same_mode: f64,
    /// `⟨b_i†² b_j²⟩`, `i ≠ j`.
    pub pair_transfer: f64,
    /// `⟨b_i† b_j† b_i b_j⟩`, `i ≠ j`.
    pub density: f64,
    pub log_norm: f64,
}

/// Closed forms from permutation symmetry of the unitary representation:
///
/// * `⟨β†β⟩ = ⟨N₊⟩/N`, `⟨β²⟩ = (2λ/N)⟨K₋⟩`;
/// * `⟨β_i†β_j†β_iβ_j⟩ = λ⁴/|δ(δ+1)|² ₁F₂(N/2+2; δ+2, δ*+2; λ²)`;
/// * `⟨β_i†²β_j²⟩ = 2λ²/(N|δ|²) [(N/2 + z∂_z) ₁F₂(N/2+1; δ+1, δ*+1; z)]_{z=λ²}
///   + 2(δ_ij - 1/N) λ⁴/|δ(δ+1)|² ₁F₂(N/2+2; δ+2, δ*+2; λ²)`,
///
/// each over the norm, for the purification modes `β`. Physical moments carry
/// `2^{-1/2}` per operator.
pub fn unitary_mode_moments(lambda: f64, n_modes: usize, delta: Complex64, opts: SeriesOptions) -> Result<UnitaryModeMoments> {
    check_nonresonant(delta)?;
    let nf = n_modes as f64;
    if lambda == 0.0 {
        return Ok(UnitaryModeMoments {
            occupation: 0.0,
            pair: c(0.0),
            same_mode: 0.0,
            pair_transfer: 0.0,
            density: 0.0,
            log_norm: 0.0,
        });
    }
    let half = nf / 2.0;
    let norm = shifted_1f2(half, delta, 0.0, lambda, |_| 0.0, opts)?.value;
    let total = collective_moment_unitary(0, 1, 0, lambda, n_modes, delta, opts)?.re;
    let k_minus = collective_moment_unitary(0, 0, 1, lambda, n_modes, delta, opts)?;

    let d1 = (delta * (delta + 1.0)).norm_sqr();
    let f2 = shifted_1f2(half + 2.0, delta, 2.0, lambda, |_| 0.0, opts)?.value;
    let density_beta = (f2 / norm).scale_log(4.0 * lambda.ln() - d1.ln()).re();
    let g = shifted_1f2(half + 1.0, delta, 1.0, lambda, |l| (half + l as f64).ln(), opts)?.value;
    let first = (g / norm).scale_log((2.0 * lambda * lambda / (nf * delta.norm_sqr())).ln()).re();
    let same_beta = first + 2.0 * (1.0 - 1.0 / nf) * density_beta;
    let cross_beta = first - 2.0 / nf * density_beta;

    Ok(UnitaryModeMoments {
        occupation: total / (2.0 * nf),
        pair: k_minus * (lambda / nf),
        same_mode: same_beta / 4.0,
        pair_transfer: cross_beta / 4.0,
        density: density_beta / 4.0,
        log_norm: norm.log_mag,
    })
}
