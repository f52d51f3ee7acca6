//! Leading-order dynamical mean field for the all-to-all model.
//!
//! Each site sees the Gaussian Lindbladian of a detuned degenerate parametric
//! amplifier with `δ_e = 2U n̄ - Δ`. Its steady density is
//! `n = 8|G|² / (κ² + 4δ_e² - 16|G|²)`, and self-consistency gives the cubic
//! `16U² n³ - 16UΔ n² + (κ² + 4Δ² - 16|G|²) n - 8|G|² = 0`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::model::ModelSpec;
use crate::moments::collective_moment_unitary;
use crate::specialfn::SeriesOptions;
use crate::{Error, Result};

/// Steady `⟨a†a⟩` of `H = δ_e a†a + G a†² + G* a²` with loss `κ`, from the
/// stationary equations for `⟨a†a⟩` and `⟨a²⟩`.
pub fn gaussian_site_density(delta_e: f64, g: Complex64, kappa: f64) -> Result<f64> {
    let g2 = g.norm_sqr();
    let gap = kappa * kappa + 4.0 * delta_e * delta_e - 16.0 * g2;
    if gap <= 0.0 {
        return Err(Error::AboveThreshold(format!("16|G|² = {:.6e} ≥ κ² + 4δ_e² = {:.6e}", 16.0 * g2, gap + 16.0 * g2)));
    }
    Ok(8.0 * g2 / gap)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Low,
    Middle,
    High,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MFSolution {
    pub nbar_mf: f64,
    pub branch: Branch,
    /// Low and high branches of the cubic are stable, the middle one is not.
    pub stable: bool,
    /// `|n - n_site(n)| / max(1, n)`.
    pub residual: f64,
}

/// Coefficients `[c0, c1, c2, c3]` of the self-consistency cubic.
pub fn selfconsistency_cubic(u: f64, detuning: f64, kappa: f64, g: Complex64) -> [f64; 4] {
    let g2 = g.norm_sqr();
    [
        -8.0 * g2,
        kappa * kappa + 4.0 * detuning * detuning - 16.0 * g2,
        -16.0 * u * detuning,
        16.0 * u * u,
    ]
}

fn poly(c: &[f64; 4], x: f64) -> f64 {
    ((c[3] * x + c[2]) * x + c[1]) * x + c[0]
}

fn dpoly(c: &[f64; 4], x: f64) -> f64 {
    (3.0 * c[3] * x + 2.0 * c[2]) * x + c[1]
}

/// Non-negative real roots of a polynomial of degree ≤ 3, ascending.
fn nonnegative_roots(c: &[f64; 4]) -> Vec<f64> {
    let deg = (0..4).rev().find(|&i| c[i] != 0.0);
    let Some(deg) = deg else { return vec![0.0] };
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg].abs();
    let bound = 1.0 + (0..deg).map(|i| c[i].abs() / lead).fold(0.0, f64::max);
    // Stationary points split [0, bound] into monotone pieces.
    let mut cuts = vec![0.0];
    let (a, b, cc) = (3.0 * c[3], 2.0 * c[2], c[1]);
    if a != 0.0 {
        let disc = b * b - 4.0 * a * cc;
        if disc > 0.0 {
            let s = disc.sqrt();
            let q = -0.5 * (b + b.signum() * s);
            for r in [q / a, if q != 0.0 { cc / q } else { -b / a }] {
                if r > 0.0 && r < bound {
                    cuts.push(r);
                }
            }
        }
    } else if b != 0.0 {
        let r = -cc / b;
        if r > 0.0 && r < bound {
            cuts.push(r);
        }
    }
    cuts.push(bound);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut roots = Vec::new();
    if c[0] == 0.0 {
        roots.push(0.0);
    }
    for w in cuts.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (flo, fhi) = (poly(c, lo), poly(c, hi));
        if fhi == 0.0 && hi < bound {
            roots.push(hi);
            continue;
        }
        if flo == 0.0 || flo.signum() == fhi.signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if poly(c, mid).signum() == flo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..3 {
            let d = dpoly(c, x);
            if d == 0.0 {
                break;
            }
            let nx = x - poly(c, x) / d;
            if nx >= w[0] && nx <= w[1] {
                x = nx;
            }
        }
        roots.push(x);
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1.0));
    roots
}

/// All self-consistent densities at the given scalars, ascending.
pub fn selfconsistent_roots(u: f64, detuning: f64, kappa: f64, g: Complex64) -> Vec<MFSolution> {
    let c = selfconsistency_cubic(u, detuning, kappa, g);
    let roots = nonnegative_roots(&c);
    let count = roots.len();
    let lead_sign = if c[3] != 0.0 { c[3].signum() } else { c[1].signum() };
    roots
        .into_iter()
        .enumerate()
        .filter_map(|(i, n)| {
            let site = gaussian_site_density(2.0 * u * n - detuning, g, kappa).ok()?;
            let branch = match (count, i) {
                (3, 1) => Branch::Middle,
                (c, i) if c > 1 && i == c - 1 => Branch::High,
                _ => Branch::Low,
            };
            Some(MFSolution {
                nbar_mf: n,
                branch,
                stable: lead_sign * dpoly(&c, n) > 0.0,
                residual: (n - site).abs() / n.max(1.0),
            })
        })
        .collect()
}

/// Mean-field solutions of an all-to-all model with on-site drive.
pub fn solve_selfconsistent(spec: &ModelSpec) -> Result<Vec<MFSolution>> {
    spec.validate()?;
    if spec.dimension() != 0 || spec.pairing_override.is_some() {
        return Err(Error::InvalidModel("mean field is defined for the all-to-all model".into()));
    }
    Ok(selfconsistent_roots(spec.interaction, spec.detuning, spec.loss, spec.onsite_drive))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalPoint {
    pub kappa_star: f64,
    pub delta_star: f64,
    /// Width of the final bisection bracket on `κ`.
    pub method_tolerance: f64,
}

/// Cusp of the cubic, where all three roots coincide at
/// `n₀ = (|G|²/2U²)^{1/3}`: `Δ_* = 3U n₀`, `κ_*² = 16|G|² + 3(2U n₀)²`.
pub fn cusp_closed_form(u: f64, g: Complex64) -> CriticalPoint {
    let n0 = (g.norm_sqr() / (2.0 * u * u)).cbrt();
    let delta_star = 3.0 * u * n0;
    CriticalPoint {
        kappa_star: (16.0 * g.norm_sqr() + 12.0 * u * u * n0 * n0).sqrt(),
        delta_star,
        method_tolerance: 0.0,
    }
}

/// `-(4p³ + 27q²)` of the depressed monic cubic in units of the cusp density,
/// positive exactly when there are three distinct real roots.
fn scaled_discriminant(u: f64, detuning: f64, kappa: f64, g: Complex64) -> f64 {
    let c = selfconsistency_cubic(u, detuning, kappa, g);
    let (a2, a1, a0) = (c[2] / c[3], c[1] / c[3], c[0] / c[3]);
    let p = a1 - a2 * a2 / 3.0;
    let q = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + a0;
    let s = (g.norm_sqr() / (2.0 * u * u)).cbrt();
    let (p, q) = (p / (s * s), q / (s * s * s));
    -(4.0 * p * p * p + 27.0 * q * q)
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while (b - a).abs() > tol * (1.0 + a.abs().max(b.abs())) {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    0.5 * (a + b)
}

/// Best detuning for tristability at `κ` and its discriminant.
fn most_tristable(u: f64, kappa: f64, g: Complex64) -> (f64, f64) {
    let hi = 8.0 * (u + g.norm() + kappa);
    let steps = 400;
    let disc = |d: f64| scaled_discriminant(u, d, kappa, g);
    let (i_best, _) = (0..=steps)
        .map(|i| disc(hi * i as f64 / steps as f64))
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let h = hi / steps as f64;
    let lo = (i_best as f64 - 1.0).max(0.0) * h;
    let d = golden_max(disc, lo, lo + 2.0 * h, 1e-13);
    (d, disc(d))
}

/// Largest loss rate with a tristable detuning window, by bisection on `κ`.
pub fn critical_point(u: f64, g: Complex64) -> Result<CriticalPoint> {
    if !(u > 0.0) {
        return Err(Error::InvalidArgument("interaction must be positive".into()));
    }
    let scale = u.max(g.norm());
    let tristable = |k: f64| most_tristable(u, k, g).1 > 0.0;
    let mut lo = 1e-9 * scale;
    if g.norm() == 0.0 || !tristable(lo) {
        return Err(Error::NoFixedPoint("no tristable region at any loss rate".into()));
    }
    let mut hi = scale;
    while tristable(hi) {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if tristable(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (delta_star, _) = most_tristable(u, lo, g);
    Ok(CriticalPoint { kappa_star: 0.5 * (lo + hi), delta_star, method_tolerance: hi - lo })
}

/// Exact `n̄` of the all-to-all model from the closed-form total density.
pub fn exact_density(n_modes: usize, u: f64, detuning: f64, kappa: f64, g: Complex64) -> Result<f64> {
    let spec = ModelSpec::uniform(n_modes, u, detuning, kappa, g);
    let d = spec.derived();
    let lambda = g.norm() / d.kerr_per_mode;
    let opts = SeriesOptions { tol: 1e-15, ..SeriesOptions::default() };
    let total = collective_moment_unitary(0, 1, 0, lambda, n_modes, d.reduced_detuning, opts)?.re;
    Ok(total / (2.0 * n_modes as f64))
}

/// `∂n̄/∂Δ` by central differences, halving the step with Richardson
/// extrapolation until successive estimates agree to 1%.
pub fn exact_susceptibility(n_modes: usize, u: f64, detuning: f64, kappa: f64, g: Complex64) -> Result<f64> {
    let diff = |h: f64| -> Result<f64> {
        let p = exact_density(n_modes, u, detuning + h, kappa, g)?;
        let m = exact_density(n_modes, u, detuning - h, kappa, g)?;
        Ok((p - m) / (2.0 * h))
    };
    let mut h = 1e-4 * u;
    let mut prev = diff(h)?;
    for _ in 0..8 {
        h /= 2.0;
        let next = diff(h)?;
        let rich = (4.0 * next - prev) / 3.0;
        if (next - prev).abs() <= 0.01 * next.abs().max(1e-300) {
            return Ok(rich);
        }
        prev = next;
    }
    Ok(prev)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiMax {
    pub detuning: f64,
    pub chi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SusceptibilityScan {
    pub kappa: f64,
    pub n_list: Vec<usize>,
    pub detunings: Vec<f64>,
    /// `chi[i][j]` at `n_list[i]`, `detunings[j]`.
    pub chi: Vec<Vec<f64>>,
    /// Refined maximum of `|χ|` per system size.
    pub maxima: Vec<ChiMax>,
}

/// `χ(N, Δ)` on a grid plus the refined `χ_max(κ, N)`.
pub fn susceptibility_scan(
    u: f64,
    g: Complex64,
    n_list: &[usize],
    kappa: f64,
    detunings: &[f64],
) -> Result<SusceptibilityScan> {
    if detunings.len() < 3 {
        return Err(Error::GridTooCoarse("need at least three detunings".into()));
    }
    let chi: Vec<Vec<f64>> = n_list
        .par_iter()
        .map(|&n| detunings.par_iter().map(|&d| exact_susceptibility(n, u, d, kappa, g)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut maxima = Vec::with_capacity(n_list.len());
    for (row, &n) in chi.iter().zip(n_list) {
        let (j, _) = row.iter().enumerate().fold((0, f64::NEG_INFINITY), |a, (j, v)| if v.abs() > a.1 { (j, v.abs()) } else { a });
        if j == 0 || j == row.len() - 1 {
            return Err(Error::GridTooCoarse(format!("maximum of |χ| at grid edge for N = {n}")));
        }
        // a jump narrower than the grid step is missed by the pointwise χ but
        // still shows up as the steepest density difference between neighbours
        let density: Vec<f64> = detunings.par_iter().map(|&d| exact_density(n, u, d, kappa, g)).collect::<Result<_>>()?;
        let steepest = (0..detunings.len() - 1)
            .max_by(|&a, &b| {
                let slope = |k: usize| ((density[k + 1] - density[k]) / (detunings[k + 1] - detunings[k])).abs();
                slope(a).total_cmp(&slope(b))
            })
            .unwrap_or(j);
        let f = |d: f64| exact_susceptibility(n, u, d, kappa, g).map(f64::abs).unwrap_or(f64::NEG_INFINITY);
        let mut best = ChiMax { detuning: detunings[j], chi: row[j] };
        for (lo, hi) in [(detunings[j - 1], detunings[j + 1]), (detunings[steepest], detunings[steepest + 1])] {
            let d = golden_max(f, lo, hi, 1e-8);
            let c = exact_susceptibility(n, u, d, kappa, g)?;
            if c.abs() > best.chi.abs() {
                best = ChiMax { detuning: d, chi: c };
            }
        }
        maxima.push(best);
    }
    Ok(SusceptibilityScan { kappa, n_list: n_list.to_vec(), detunings: detunings.to_vec(), chi, maxima })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument("need at least two matching points".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(sxy / sxx)
}

/// `γ` as the log-log slope of `χ_max` against `τ = (κ - κ_*)/κ_*`; a `1/τ`
/// divergence gives `γ = -1`.
pub fn fit_gamma(kappas: &[f64], chi_max: &[f64], kappa_star: f64) -> Result<f64> {
    let tau: Vec<f64> = kappas.iter().map(|k| (k - kappa_star) / kappa_star).collect();
    let chi: Vec<f64> = chi_max.iter().map(|c| c.abs()).collect();
    log_log_slope(&tau, &chi)
}

/// Root-mean-square fluctuation of the pair number `N₊/2` of the exact state.
pub fn pair_number_fluctuation(n_modes: usize, u: f64, detuning: f64, kappa: f64, g: Complex64) -> Result<f64> {
    let spec = ModelSpec::uniform(n_modes, u, detuning, kappa, g);
    let d = spec.derived();
    let lambda = g.norm() / d.kerr_per_mode;
    let opts = SeriesOptions { tol: 1e-15, ..SeriesOptions::default() };
    let first = collective_moment_unitary(0, 1, 0, lambda, n_modes, d.reduced_detuning, opts)?.re;
    let second = collective_moment_unitary(0, 2, 0, lambda, n_modes, d.reduced_detuning, opts)?.re;
    Ok((second - first * first).max(0.0).sqrt() / 2.0)
}
