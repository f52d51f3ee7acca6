//! Pointwise Wigner and Husimi-Q functions of the exact steady state.
//!
//! With `z(α) = -Σ_ij (M_ij/u) α*_i α*_j`,
//! `W(α) = (2/π)^N |₀F₁(δ; z(α))|² e^{-2|α|²} / 𝒩`, which equals
//! `2^N Q(√2 α)` for the Husimi-Q function of the symmetric purification
//! component.

use ndarray::Array2;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::model::{check_nonresonant, ModelSpec, PairingSpectrum};
use crate::moments::{log_norm_unitary, max_pairing_fraction, mode_moments, MomentEngine};
use crate::specialfn::{hyper_pfq, SeriesOptions};
use crate::{Error, Result};

/// Largest mode count accepted by [`wigner_norm_check`].
pub const QUADRATURE_MODE_LIMIT: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    pub alpha: Vec<Complex64>,
}

impl PhasePoint {
    pub fn new(alpha: Vec<Complex64>) -> Self {
        PhasePoint { alpha }
    }

    pub fn origin(n: usize) -> Self {
        PhasePoint { alpha: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.alpha.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// `ln ⟨Ψ|Ψ⟩` of the purification, vacuum coefficient one.
pub fn log_norm(spectrum: &PairingSpectrum, delta: Complex64, tol: f64) -> Result<f64> {
    check_nonresonant(delta)?;
    if spectrum.lambda_star == 0.0 {
        Ok(0.0)
    } else if spectrum.is_unitary() {
        let opts = SeriesOptions { tol, ..SeriesOptions::default() };
        log_norm_unitary(spectrum.lambda_star, spectrum.n_modes(), delta, opts)
    } else {
        Ok(MomentEngine::new(spectrum, delta, tol)?.log_norm())
    }
}

/// `ln |₀F₁(δ; z)|`.
fn ln_abs_0f1(delta: Complex64, z: Complex64, tol: f64) -> Result<f64> {
    if z.norm() > 1e4 {
        let opts = SeriesOptions { tol, ..SeriesOptions::default() };
        return Ok(hyper_pfq(&[], &[delta], z, opts)?.value.log_mag);
    }
    let l_safe = (-delta.re).max(0.0).ceil() as usize + 2;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut small = 0;
    for m in 0..100_000usize {
        term *= z / ((delta + m as f64) * (m + 1) as f64);
        sum += term;
        small = if term.norm() <= tol * sum.norm() { small + 1 } else { 0 };
        if small >= 3 && m >= l_safe {
            return Ok(sum.norm().ln());
        }
    }
    Err(Error::MaxTermsExceeded { max_terms: 100_000 })
}

/// Evaluates `W` and `Q` at arbitrary points for one steady state.
#[derive(Clone, Debug)]
pub struct WignerFunction {
    pairing: Array2<Complex64>,
    delta: Complex64,
    log_norm: f64,
    tol: f64,
}

impl WignerFunction {
    pub fn new(spec: &ModelSpec, spectrum: &PairingSpectrum, delta: Complex64, tol: f64) -> Result<Self> {
        let u = spec.derived().kerr_per_mode;
        let pairing = spec.pairing_matrix()?.mapv(|x| x / u);
        Ok(WignerFunction { pairing, delta, log_norm: log_norm(spectrum, delta, tol)?, tol })
    }

    pub fn n_modes(&self) -> usize {
        self.pairing.nrows()
    }

    fn argument(&self, alpha: &[Complex64]) -> Result<Complex64> {
        if alpha.len() != self.n_modes() {
            return Err(Error::InvalidArgument(format!("expected {} amplitudes, got {}", self.n_modes(), alpha.len())));
        }
        let mut z = Complex64::new(0.0, 0.0);
        for (i, ai) in alpha.iter().enumerate() {
            for (j, aj) in alpha.iter().enumerate() {
                z -= self.pairing[[i, j]] * ai.conj() * aj.conj();
            }
        }
        Ok(z)
    }

    pub fn ln_wigner(&self, point: &PhasePoint) -> Result<f64> {
        let z = self.argument(&point.alpha)?;
        let n = self.n_modes() as f64;
        Ok(n * (2.0 / PI).ln() + 2.0 * ln_abs_0f1(self.delta, z, self.tol)? - 2.0 * point.norm_sqr() - self.log_norm)
    }

    pub fn wigner(&self, point: &PhasePoint) -> Result<f64> {
        Ok(self.ln_wigner(point)?.exp())
    }

    /// Husimi-Q of the symmetric purification component, normalized.
    pub fn husimi_q(&self, point: &PhasePoint) -> Result<f64> {
        let half: Vec<Complex64> = point.alpha.iter().map(|a| a / 2f64.sqrt()).collect();
        let w = self.wigner(&PhasePoint::new(half))?;
        Ok(w / 2f64.powi(self.n_modes() as i32))
    }
}

/// `W` at one point.
pub fn wigner_at(spec: &ModelSpec, spectrum: &PairingSpectrum, delta: Complex64, point: &PhasePoint, tol: f64) -> Result<f64> {
    WignerFunction::new(spec, spectrum, delta, tol)?.wigner(point)
}

/// Trapezoidal weights on `points` nodes spanning `[-radius, radius]`.
fn trapezoid(radius: f64, points: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 2.0 * radius / (points - 1) as f64;
    let x = (0..points).map(|i| -radius + i as f64 * h).collect();
    let w = (0..points).map(|i| if i == 0 || i == points - 1 { h / 2.0 } else { h }).collect();
    (x, w)
}

/// `∫ W d^{2N}α` by tensor-product trapezoidal quadrature.
pub fn wigner_norm_check(
    spec: &ModelSpec,
    spectrum: &PairingSpectrum,
    delta: Complex64,
    grid_radius: f64,
    grid_points: usize,
) -> Result<f64> {
    let n = spec.n_modes;
    if n > QUADRATURE_MODE_LIMIT {
        return Err(Error::DimensionTooLarge { dim: n, limit: QUADRATURE_MODE_LIMIT });
    }
    if grid_points < 3 || !(grid_radius > 0.0) {
        return Err(Error::GridTooCoarse(format!("{grid_points} points over radius {grid_radius}")));
    }
    let wf = WignerFunction::new(spec, spectrum, delta, 1e-14)?;
    let (x, w) = trapezoid(grid_radius, grid_points);
    let axes = 2 * n;
    let mut idx = vec![0usize; axes];
    let mut total = 0.0;
    loop {
        let alpha: Vec<Complex64> = (0..n).map(|k| Complex64::new(x[idx[2 * k]], x[idx[2 * k + 1]])).collect();
        let weight: f64 = idx.iter().map(|&i| w[i]).product();
        total += weight * wf.wigner(&PhasePoint::new(alpha))?;
        let mut a = 0;
        loop {
            if a == axes {
                return Ok(total);
            }
            idx[a] += 1;
            if idx[a] < grid_points {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

/// Fraction of photons in the max-pairing singular modes.
pub fn max_pairing_concentration(spectrum: &PairingSpectrum, delta: Complex64) -> Result<f64> {
    let mm = mode_moments(spectrum, delta, 1e-12, false)?;
    max_pairing_fraction(spectrum, &mm)
}
