use ndarray::{s, Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use super::{Boundary, ModelSpec};
use crate::{Error, Result};

/// Relative tolerance under which two singular values share a class.
pub const DEGENERACY_RTOL: f64 = 1e-10;

/// Takagi factors of `M/u = V diag(λ) Vᵀ`, sorted by descending `λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairingSpectrum {
    pub v: Array2<Complex64>,
    pub lambda: Vec<f64>,
    /// Mode indices grouped into degeneracy classes, largest `λ` first.
    pub classes: Vec<Vec<usize>>,
    pub class_of: Vec<usize>,
    pub lambda_star: f64,
    /// Number of modes attaining `λ_star`.
    pub multiplicity: usize,
}

impl PairingSpectrum {
    /// Builds the class structure for given factors.
    pub fn from_parts(v: Array2<Complex64>, lambda: Vec<f64>) -> Self {
        let n = lambda.len();
        let lambda_star = lambda.iter().cloned().fold(0.0, f64::max);
        let tol = DEGENERACY_RTOL * lambda_star.max(1.0);
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut class_of = vec![0; n];
        for j in 0..n {
            match classes.last_mut() {
                Some(c) if (lambda[c[0]] - lambda[j]).abs() <= tol => c.push(j),
                _ => classes.push(vec![j]),
            }
            class_of[j] = classes.len() - 1;
        }
        let multiplicity = classes.first().map_or(0, |c| c.len());
        PairingSpectrum { v, lambda, classes, class_of, lambda_star, multiplicity }
    }

    /// All `N` singular values equal to `lambda`, with `V = 1`.
    pub fn uniform(n: usize, lambda: f64) -> Self {
        Self::from_parts(Array2::eye(n).mapv(|x| Complex64::new(x, 0.0)), vec![lambda; n])
    }

    pub fn n_modes(&self) -> usize {
        self.lambda.len()
    }

    /// True when every singular value lies in one class.
    pub fn is_unitary(&self) -> bool {
        self.classes.len() == 1
    }

    /// Representative singular value of each class.
    pub fn class_values(&self) -> Vec<f64> {
        self.classes.iter().map(|c| c[0]).map(|j| self.lambda[j]).collect()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        self.classes.iter().map(|c| c.len()).collect()
    }

    /// `V diag(λ) Vᵀ`.
    pub fn reconstruct(&self) -> Array2<Complex64> {
        let n = self.n_modes();
        let mut vs = self.v.clone();
        for j in 0..n {
            let l = self.lambda[j];
            vs.column_mut(j).mapv_inplace(|x| x * l);
        }
        vs.dot(&self.v.t())
    }

    /// Rank of `M`, the number of nonzero singular values.
    pub fn rank(&self) -> usize {
        let tol = DEGENERACY_RTOL * self.lambda_star.max(1.0);
        self.lambda.iter().filter(|&&l| l > tol).count()
    }
}

fn max_abs(m: &Array2<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Takagi factorization of `M/u`.
///
/// Real input is diagonalized orthogonally and negative eigenvalues become a
/// factor `i` on their column. Complex input uses the real symmetric embedding
/// `[[Re A, Im A], [Im A, -Re A]]`, whose eigenvector `(x, y)` at eigenvalue
/// `σ ≥ 0` is the Takagi vector `x + iy`; degenerate classes come out
/// orthonormal without any per-class phase fixing.
pub fn takagi(m: &Array2<Complex64>, u: f64) -> Result<PairingSpectrum> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::InvalidArgument("pairing matrix must be square".into()));
    }
    let scale = max_abs(m);
    let asym = max_abs(&(m - &m.t()));
    if asym > 1e-14 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    let a = m.mapv(|z| z / u);
    let (v, lambda) = if a.iter().all(|z| z.im == 0.0) { takagi_real(&a)? } else { takagi_complex(&a)? };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| lambda[j].partial_cmp(&lambda[i]).unwrap_or(std::cmp::Ordering::Equal));
    let mut vs = Array2::<Complex64>::zeros((n, n));
    let mut ls = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        vs.column_mut(k).assign(&v.column(j));
        ls.push(lambda[j]);
    }
    Ok(PairingSpectrum::from_parts(vs, ls))
}

fn takagi_real(a: &Array2<Complex64>) -> Result<(Array2<Complex64>, Vec<f64>)> {
    let ar = a.mapv(|z| z.re);
    let (w, o) = ar.eigh(UPLO::Lower)?;
    let n = ar.nrows();
    let mut v = Array2::<Complex64>::zeros((n, n));
    for j in 0..n {
        let phase = if w[j] < 0.0 { Complex64::new(0.0, 1.0) } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            v[[i, j]] = phase * o[[i, j]];
        }
    }
    Ok((v, w.iter().map(|x| x.abs()).collect()))
}

fn takagi_complex(a: &Array2<Complex64>) -> Result<(Array2<Complex64>, Vec<f64>)> {
    let n = a.nrows();
    let re = a.mapv(|z| z.re);
    let im = a.mapv(|z| z.im);
    let mut b = Array2::<f64>::zeros((2 * n, 2 * n));
    b.slice_mut(s![..n, ..n]).assign(&re);
    b.slice_mut(s![..n, n..]).assign(&im);
    b.slice_mut(s![n.., ..n]).assign(&im);
    b.slice_mut(s![n.., n..]).assign(&(-&re));
    let (w, q) = b.eigh(UPLO::Lower)?;
    let sigma_max = w[2 * n - 1].max(0.0);
    let zero_tol = 1e-13 * sigma_max;

    let mut cols: Vec<Array1<Complex64>> = Vec::with_capacity(n);
    let mut lambda = Vec::with_capacity(n);
    for k in (n..2 * n).rev() {
        if w[k] <= zero_tol {
            break;
        }
        let col: Array1<Complex64> = (0..n).map(|i| Complex64::new(q[[i, k]], q[[i + n, k]])).collect();
        let nrm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols.push(col.mapv(|z| z / nrm));
        lambda.push(w[k]);
    }
    // null space: any orthonormal completion works because M annihilates it
    let mut e = 0;
    while cols.len() < n {
        if e >= n {
            return Err(Error::Factorization("could not complete the null space basis".into()));
        }
        let mut cand = Array1::<Complex64>::zeros(n);
        cand[e] = Complex64::new(1.0, 0.0);
        e += 1;
        for _ in 0..2 {
            for c in &cols {
                let p: Complex64 = c.iter().zip(cand.iter()).map(|(x, y)| x.conj() * y).sum();
                cand = &cand - &c.mapv(|x| x * p);
            }
        }
        let nrm = cand.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 1e-3 {
            cols.push(cand.mapv(|z| z / nrm));
            lambda.push(0.0);
        }
    }
    let mut v = Array2::<Complex64>::zeros((n, n));
    for (j, c) in cols.iter().enumerate() {
        v.column_mut(j).assign(c);
    }
    Ok((v, lambda))
}

/// `(1/u)|(Λ/D) Σ_j cos k_j + G|` for a periodic hypercubic lattice.
pub fn singular_value_formula(spec: &ModelSpec, k: &[f64]) -> Result<f64> {
    let d = spec.dimension();
    if d == 0 {
        return Err(Error::InvalidArgument("wavevector formula needs D >= 1".into()));
    }
    if spec.boundary != Boundary::Periodic {
        return Err(Error::InvalidArgument("wavevector formula holds only for periodic boundaries".into()));
    }
    if k.len() != d {
        return Err(Error::InvalidArgument(format!("wavevector has {} components, lattice has {d}", k.len())));
    }
    let u = spec.derived().kerr_per_mode;
    let c: f64 = k.iter().map(|x| x.cos()).sum();
    Ok((spec.bond_drive * (c / d as f64) + spec.onsite_drive).norm() / u.abs())
}

/// The formula evaluated over the whole Brillouin zone, sorted descending.
pub fn zone_singular_values(spec: &ModelSpec) -> Result<Vec<f64>> {
    let d = spec.dimension();
    let mut out = Vec::with_capacity(spec.n_modes);
    let mut idx = vec![0usize; d];
    loop {
        let k: Vec<f64> =
            idx.iter().zip(&spec.dims).map(|(&m, &l)| 2.0 * std::f64::consts::PI * m as f64 / l as f64).collect();
        out.push(singular_value_formula(spec, &k)?);
        let mut a = d;
        loop {
            if a == 0 {
                out.sort_by(|x, y| y.partial_cmp(x).unwrap());
                return Ok(out);
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < spec.dims[a] {
                break;
            }
            idx[a] = 0;
        }
    }
}
