//! Semiclassical fixed points in the singular-mode basis.
//!
//! With `A - iB = 2Σ|β|² + 1 - Δ/u - iκ/(2u)` the equations of motion are
//! `∂_t β_j = -iu [2λ_j β_j* + (A - iB) β_j]`. A ring of fixed points on one
//! singular class has `|A - iB| = 2λ`, so `A = ±√(4λ² - B²)`; the `+` root is
//! the candidate stable sphere.

use ndarray::Array2;
use ndarray_linalg::Eig;
use num_complex::Complex64;

use crate::model::{ModelSpec, PairingSpectrum};
use crate::{Error, Result};

/// Residual above which a point is not accepted as a fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-10;

/// Growth rate below which an eigenvalue counts as marginal.
const MARGINAL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct FixedPoint {
    /// Amplitudes in the singular-mode basis.
    pub beta: Vec<Complex64>,
    /// Shared singular value of the nonzero components, zero at the origin.
    pub lambda_class: f64,
    pub theta: f64,
    pub r_ss: f64,
    /// Closed-form stability eigenvalues in absolute rate units.
    pub eigenvalues: Vec<Complex64>,
    pub stable: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sphere {
    pub r_ss: f64,
    pub theta: f64,
    /// Multiplicity of the max-pairing class.
    pub multiplicity: usize,
}

fn scalars(spec: &ModelSpec) -> (f64, f64, f64) {
    let u = spec.derived().kerr_per_mode;
    (u, spec.detuning / u, spec.loss / (2.0 * u))
}

/// `∂_t β` in absolute time units.
pub fn eom_rhs(spec: &ModelSpec, spectrum: &PairingSpectrum, beta: &[Complex64]) -> Vec<Complex64> {
    let (u, d, b) = scalars(spec);
    let total: f64 = beta.iter().map(|x| x.norm_sqr()).sum();
    let shift = Complex64::new(2.0 * total + 1.0 - d, -b);
    let mi = Complex64::new(0.0, -u);
    beta.iter().zip(&spectrum.lambda).map(|(x, &l)| mi * (2.0 * l * x.conj() + shift * x)).collect()
}

/// Largest component of `∂_t β`, in units of `u`.
pub fn residual(spec: &ModelSpec, spectrum: &PairingSpectrum, beta: &[Complex64]) -> f64 {
    let u = spec.derived().kerr_per_mode;
    eom_rhs(spec, spectrum, beta).iter().map(|x| x.norm() / u).fold(0.0, f64::max)
}

/// Principal angle in `(-π/2, π/2]`.
fn principal(theta: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let mut t = theta.rem_euclid(pi);
    if t > pi / 2.0 {
        t -= pi;
    }
    t
}

/// Ring on a class with singular value `lambda`, for the given root sign.
fn ring(d: f64, b: f64, lambda: f64, sign: f64) -> Option<(f64, f64, f64)> {
    let disc = 4.0 * lambda * lambda - b * b;
    if !(lambda > 0.0) || disc <= 0.0 {
        return None;
    }
    let a = sign * disc.sqrt();
    let r2 = (d - 1.0 + a) / 2.0;
    if r2 <= 0.0 {
        return None;
    }
    // e^{2iθ} = -2λ/(A - iB)
    let two_theta = (Complex64::new(-2.0 * lambda, 0.0) / Complex64::new(a, -b)).arg();
    Some((r2.sqrt(), principal(two_theta / 2.0), a))
}

/// The max-pairing sphere when it exists.
pub fn stable_sphere(spec: &ModelSpec, spectrum: &PairingSpectrum) -> Option<Sphere> {
    let (_, d, b) = scalars(spec);
    let (r_ss, theta, _) = ring(d, b, spectrum.lambda_star, 1.0)?;
    Some(Sphere { r_ss, theta, multiplicity: spectrum.multiplicity })
}

fn quadratic_pair(kappa: f64, det: f64) -> [Complex64; 2] {
    let root = Complex64::new(kappa * kappa / 4.0 - det, 0.0).sqrt();
    [Complex64::new(-kappa / 2.0, 0.0) + root, Complex64::new(-kappa / 2.0, 0.0) - root]
}

/// Closed-form spectrum: a radial pair `μ² + κμ + 8u²A R² = 0` on the
/// occupied mode and transverse pairs `μ² + κμ + 4u²(λ² - λ_j²) = 0`.
fn closed_form(spec: &ModelSpec, spectrum: &PairingSpectrum, occupied: Option<(usize, f64, f64)>) -> Vec<Complex64> {
    let (u, d, _) = scalars(spec);
    let kappa = spec.loss;
    let mut out = Vec::with_capacity(2 * spectrum.n_modes());
    for (j, &lj) in spectrum.lambda.iter().enumerate() {
        let det = match occupied {
            None => u * u * ((1.0 - d).powi(2) + (kappa / (2.0 * u)).powi(2) - 4.0 * lj * lj),
            Some((j0, a, r)) if j0 == j => 8.0 * u * u * a * r * r,
            Some((j0, _, _)) => 4.0 * u * u * (spectrum.lambda[j0].powi(2) - lj * lj),
        };
        out.extend(quadratic_pair(kappa, det));
    }
    out
}

fn is_stable(eigs: &[Complex64]) -> bool {
    eigs.iter().all(|e| e.re <= MARGINAL)
}

/// Origin plus both rings on every nonzero singular class.
pub fn fixed_points(spec: &ModelSpec, spectrum: &PairingSpectrum) -> Vec<FixedPoint> {
    let n = spectrum.n_modes();
    let (_, d, b) = scalars(spec);
    let origin_eigs = closed_form(spec, spectrum, None);
    let mut out = vec![FixedPoint {
        beta: vec![Complex64::new(0.0, 0.0); n],
        lambda_class: 0.0,
        theta: 0.0,
        r_ss: 0.0,
        stable: is_stable(&origin_eigs),
        eigenvalues: origin_eigs,
    }];
    for cls in &spectrum.classes {
        let j0 = cls[0];
        let lambda = spectrum.lambda[j0];
        for sign in [1.0, -1.0] {
            if let Some((r, theta, a)) = ring(d, b, lambda, sign) {
                let mut beta = vec![Complex64::new(0.0, 0.0); n];
                beta[j0] = Complex64::from_polar(r, theta);
                let eigenvalues = closed_form(spec, spectrum, Some((j0, a, r)));
                out.push(FixedPoint { beta, lambda_class: lambda, theta, r_ss: r, stable: is_stable(&eigenvalues), eigenvalues });
            }
        }
    }
    out
}

/// Real `2N × 2N` Jacobian of `eom_rhs` in `(Re β, Im β)` coordinates.
///
/// The field is cubic, so Richardson-combined central differences at steps
/// `h` and `h/2` are exact up to rounding.
pub fn numerical_jacobian(spec: &ModelSpec, spectrum: &PairingSpectrum, beta: &[Complex64]) -> Array2<f64> {
    let n = beta.len();
    let scale = beta.iter().map(|x| x.norm()).fold(1.0, f64::max);
    let h = 1e-2 * scale;
    let flat = |v: &[Complex64]| -> Vec<f64> { v.iter().map(|x| x.re).chain(v.iter().map(|x| x.im)).collect() };
    let column = |k: usize, step: f64| -> Vec<f64> {
        let mut p = beta.to_vec();
        let mut m = beta.to_vec();
        let dir = if k < n { Complex64::new(step, 0.0) } else { Complex64::new(0.0, step) };
        p[k % n] += dir;
        m[k % n] -= dir;
        let fp = flat(&eom_rhs(spec, spectrum, &p));
        let fm = flat(&eom_rhs(spec, spectrum, &m));
        fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * step)).collect()
    };
    let mut jac = Array2::zeros((2 * n, 2 * n));
    for k in 0..2 * n {
        let coarse = column(k, h);
        let fine = column(k, h / 2.0);
        for r in 0..2 * n {
            jac[[r, k]] = (4.0 * fine[r] - coarse[r]) / 3.0;
        }
    }
    jac
}

fn sort_eigs(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
}

/// Largest distance in a greedy one-to-one matching of two multisets.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    let mut a = a.to_vec();
    sort_eigs(&mut a);
    for x in a {
        let (k, dist) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .fold((usize::MAX, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
        used[k] = true;
        worst = worst.max(dist);
    }
    worst
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub closed_form: Vec<Complex64>,
    pub numerical: Vec<Complex64>,
    /// Matching distance between the two spectra.
    pub mismatch: f64,
    /// Number of closed-form eigenvalues with `|Re|, |Im| < 1e-8`.
    pub zero_modes: usize,
}

/// Closed-form eigenvalues with the numerical Jacobian spectrum alongside.
pub fn stability_eigenvalues(spec: &ModelSpec, spectrum: &PairingSpectrum, fp: &FixedPoint) -> Result<StabilityReport> {
    let res = residual(spec, spectrum, &fp.beta);
    if res > FIXED_POINT_TOL {
        return Err(Error::NoFixedPoint(format!("residual {res:.3e} exceeds {FIXED_POINT_TOL:.0e}")));
    }
    let jac = numerical_jacobian(spec, spectrum, &fp.beta);
    let (vals, _) = jac.eig()?;
    let mut numerical: Vec<Complex64> = vals.to_vec();
    sort_eigs(&mut numerical);
    let mut closed = fp.eigenvalues.clone();
    sort_eigs(&mut closed);
    let mismatch = multiset_distance(&closed, &numerical);
    let zero_modes = closed.iter().filter(|e| e.re.abs() < 1e-8 && e.im.abs() < 1e-8).count();
    Ok(StabilityReport { closed_form: closed, numerical, mismatch, zero_modes })
}
