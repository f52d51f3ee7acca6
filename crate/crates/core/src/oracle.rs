//! Brute-force steady states in a truncated Fock space.
//!
//! The Lindbladian `ℒρ = -i[H, ρ] + κ Σ_j (a_j ρ a_j† - ½{a_j† a_j, ρ})` is
//! solved directly on the occupation basis `Σ n_j ≤ T`. A passive mode rotation
//! that diagonalizes the pair drive maps this truncation onto itself, and after
//! it every mode parity (or, with hopping, the parity of every coupled cluster)
//! is a weak symmetry. The density matrix is then block diagonal, one block per
//! parity label, and the blocks are coupled only through the jump terms.
//!
//! Small problems are solved by a dense bordered linear system. Larger ones use
//! GMRES on `ρ + S⁻¹ J ρ = 0`, where `S = -i(H_eff · - · H_eff†)` is inverted
//! through the eigenvectors of `H_eff = H - iκN/2` and `J` is the jump part,
//! followed by defect correction on the true residual.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use ndarray::Array2;
use ndarray_linalg::{Eig, Eigh, Inverse, Solve, UPLO};
use num_complex::Complex64;

use crate::formfactors::ClassConvolver;
use crate::model::{check_nonresonant, ModelSpec};
use crate::moments::displaced_pairs;
use crate::specialfn::{ln_factorial, pochhammer};
use crate::{Error, Result};

/// Largest basis handled.
pub const MAX_DIMENSION: usize = 4096;
/// Population on the cutoff shell above which a solve is rejected.
pub const SHELL_REJECT: f64 = 1e-3;
/// Population on the cutoff shell above which a warning is logged.
pub const SHELL_WARN: f64 = 1e-6;
/// Unknown count up to which the dense bordered solve is used.
const DENSE_UNKNOWNS: usize = 1600;
const RESIDUAL_TARGET: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Occupation basis with a per-mode and a total photon cutoff.
#[derive(Clone, Debug)]
pub struct FockConfig {
    pub per_mode_cutoff: usize,
    pub total_cutoff: usize,
    /// Lexicographically sorted occupation vectors.
    pub basis: Vec<Vec<u8>>,
    /// Exact photon-number tail weighted by `(T+1)²`, when the cutoff was
    /// chosen from the exact solution.
    pub tail_estimate: Option<f64>,
    index: HashMap<Vec<u8>, usize>,
}

impl FockConfig {
    pub fn new(n_modes: usize, per_mode_cutoff: usize, total_cutoff: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidArgument("mode count must be positive".into()));
        }
        if per_mode_cutoff > u8::MAX as usize {
            return Err(Error::InvalidArgument(format!("per-mode cutoff {per_mode_cutoff} exceeds 255")));
        }
        let mut basis = Vec::new();
        let mut cur = vec![0u8; n_modes];
        enumerate(&mut cur, 0, per_mode_cutoff, total_cutoff, &mut basis);
        if basis.len() > MAX_DIMENSION {
            return Err(Error::DimensionTooLarge { dim: basis.len(), limit: MAX_DIMENSION });
        }
        let index = basis.iter().enumerate().map(|(i, x)| (x.clone(), i)).collect();
        Ok(FockConfig { per_mode_cutoff, total_cutoff, basis, tail_estimate: None, index })
    }

    /// Smallest total cutoff `T` whose exact photon-number tail satisfies
    /// `P(N > T)·(T+1)² ≤ tol`, with no separate per-mode cutoff.
    pub fn for_model(spec: &ModelSpec, tol: f64) -> Result<Self> {
        let tail = photon_number_tail(spec)?;
        let weighted = |t: usize| tail.get(t).copied().unwrap_or(0.0) * ((t + 1) as f64).powi(2);
        let t = (2..).find(|&t| weighted(t) <= tol).unwrap();
        let mut cfg = FockConfig::new(spec.n_modes, t.min(u8::MAX as usize), t)?;
        cfg.tail_estimate = Some(weighted(t));
        Ok(cfg)
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn n_modes(&self) -> usize {
        self.basis[0].len()
    }

    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    fn on_cutoff_shell(&self, x: &[u8]) -> bool {
        let total: usize = x.iter().map(|&n| n as usize).sum();
        total == self.total_cutoff
            || (self.per_mode_cutoff < self.total_cutoff && x.iter().any(|&n| n as usize == self.per_mode_cutoff))
    }
}

fn enumerate(cur: &mut Vec<u8>, pos: usize, per_mode: usize, remaining: usize, out: &mut Vec<Vec<u8>>) {
    if pos == cur.len() {
        out.push(cur.clone());
        return;
    }
    for n in 0..=per_mode.min(remaining) {
        cur[pos] = n as u8;
        enumerate(cur, pos + 1, per_mode, remaining - n, out);
    }
    cur[pos] = 0;
}

/// Exact `P(N_total > n)` for `n = 0, 1, …` in the steady state.
///
/// The purification holds `2m` photons in the symmetric modes with weight
/// `∝ Φ_m/|(δ)_m|²`, and each of them lands on the physical side with
/// probability ½.
pub fn photon_number_tail(spec: &ModelSpec) -> Result<Vec<f64>> {
    let spectrum = spec.spectrum()?;
    if spectrum.lambda_star == 0.0 {
        return Ok(vec![0.0]);
    }
    let delta = spec.derived().reduced_detuning;
    check_nonresonant(delta)?;
    let lam = spectrum.class_values();
    let sizes = spectrum.class_sizes();
    let mut cutoff = 64;
    let ln_w = loop {
        let conv = ClassConvolver::new(&lam, &sizes, cutoff);
        let w: Vec<f64> = conv.full().iter().enumerate().map(|(m, &phi)| phi - 2.0 * pochhammer(delta, m).log_mag).collect();
        let peak = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if w[cutoff] - peak < -80.0 {
            break w;
        }
        if cutoff >= 8192 {
            return Err(Error::MaxTermsExceeded { max_terms: cutoff });
        }
        cutoff *= 2;
    };
    let peak = ln_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = ln_w.iter().map(|w| (w - peak).exp()).sum();
    let mut pmf = vec![0.0; 2 * cutoff + 1];
    for (m, w) in ln_w.iter().enumerate() {
        let pm = (w - peak).exp() / total;
        if pm < 1e-300 {
            continue;
        }
        let ln_pair = ln_factorial(2 * m) - 2.0 * m as f64 * std::f64::consts::LN_2;
        for (k, slot) in pmf.iter_mut().enumerate().take(2 * m + 1) {
            *slot += pm * (ln_pair - ln_factorial(k) - ln_factorial(2 * m - k)).exp();
        }
    }
    let mut tail = vec![0.0; pmf.len()];
    for k in (0..pmf.len() - 1).rev() {
        tail[k] = tail[k + 1] + pmf[k + 1];
    }
    Ok(tail)
}

/// `H = u N² - Δ N + Σ_ij (P_ij c_i† c_j† + h.c.) + Σ_ij T_ij c_i† c_j` with
/// loss `κ` on every mode.
#[derive(Clone, Debug)]
pub struct KerrModel {
    /// Per-mode Kerr `u = U/N`.
    pub kerr: f64,
    pub detuning: f64,
    pub loss: f64,
    pub pairing: Array2<Complex64>,
    /// Hermitian hopping matrix.
    pub hopping: Array2<Complex64>,
}

impl KerrModel {
    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.n_modes;
        Ok(KerrModel {
            kerr: spec.derived().kerr_per_mode,
            detuning: spec.detuning,
            loss: spec.loss,
            pairing: spec.pairing_matrix()?,
            hopping: Array2::zeros((n, n)),
        })
    }

    pub fn with_hopping(mut self, hopping: &Array2<Complex64>) -> Self {
        self.hopping = &self.hopping + hopping;
        self
    }

    pub fn n_modes(&self) -> usize {
        self.pairing.nrows()
    }

    /// `δ = 1 - (Δ + iκ/2)/(2u)`.
    pub fn reduced_detuning(&self) -> Complex64 {
        ONE - Complex64::new(self.detuning, self.loss / 2.0) / (2.0 * self.kerr)
    }

    /// Same model in modes `c` with `a = W c`.
    fn rotated(&self, w: &Array2<Complex64>) -> Self {
        let wh = w.t().mapv(|z| z.conj());
        let wbar = w.mapv(|z| z.conj());
        KerrModel {
            pairing: wh.dot(&self.pairing).dot(&wbar),
            hopping: wh.dot(&self.hopping).dot(w),
            ..self.clone()
        }
    }

    /// A unitary `W` with `W† P W̄` diagonal, or the identity when none is found
    /// or hopping is present.
    fn diagonalizing_rotation(&self) -> Array2<Complex64> {
        let n = self.n_modes();
        let id = Array2::eye(n);
        let scale = self.pairing.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 || self.hopping.iter().any(|z| z.norm() > 0.0) || off_diagonal(&self.pairing) == 0.0 {
            return id;
        }
        let accept = |w: &Array2<Complex64>| off_diagonal(&self.rotated(w).pairing) <= 1e-12 * scale;

        // real orthogonal rotation, enough whenever Re P and Im P commute; a
        // few mixing weights guard against accidental near-degeneracy
        let mut best: Option<(f64, Array2<Complex64>)> = None;
        for weight in [0.618_033_988_749_895, -std::f64::consts::SQRT_2, std::f64::consts::E, 0.0] {
            let mix = self.pairing.mapv(|z| z.re + weight * z.im);
            if let Ok((_, o)) = mix.eigh(UPLO::Lower) {
                let w = o.mapv(|x| Complex64::new(x, 0.0));
                let err = off_diagonal(&self.rotated(&w).pairing);
                if best.as_ref().is_none_or(|(e, _)| err < *e) {
                    best = Some((err, w));
                }
            }
        }
        if let Some((err, w)) = best {
            if err <= 1e-12 * scale {
                return w;
            }
        }

        // Takagi vectors from P P†, valid for distinct singular values; the
        // eigenvectors may come back conjugated depending on memory layout
        let ph = self.pairing.t().mapv(|z| z.conj());
        if let Ok((_, u0)) = self.pairing.dot(&ph).eigh(UPLO::Lower) {
            for u in [u0.clone(), u0.mapv(|z| z.conj())] {
                let mut w = u.clone();
                for k in 0..n {
                    let col = u.column(k);
                    let y = self.pairing.dot(&col.mapv(|z| z.conj()));
                    let overlap: Complex64 = col.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum();
                    if overlap.norm() > 1e-14 * scale {
                        let phase = Complex64::from_polar(1.0, overlap.arg() / 2.0);
                        w.column_mut(k).mapv_inplace(|z| z * phase);
                    }
                }
                if accept(&w) {
                    return w;
                }
            }
        }
        id
    }
}

fn off_diagonal(m: &Array2<Complex64>) -> f64 {
    let mut acc = 0.0f64;
    for ((i, j), z) in m.indexed_iter() {
        if i != j {
            acc = acc.max(z.norm());
        }
    }
    acc
}

/// Applies ladder operators in order (first element acts first).
fn ladder(x: &[u8], ops: &[(usize, bool)]) -> Option<(Vec<u8>, f64)> {
    let mut y = x.to_vec();
    let mut amp = 1.0;
    for &(mode, create) in ops {
        if create {
            y[mode] = y[mode].checked_add(1)?;
            amp *= (y[mode] as f64).sqrt();
        } else {
            if y[mode] == 0 {
                return None;
            }
            amp *= (y[mode] as f64).sqrt();
            y[mode] -= 1;
        }
    }
    Some((y, amp))
}

/// Parity labels and block bookkeeping.
#[derive(Clone, Debug)]
struct Sectors {
    sector_of: Vec<usize>,
    local_of: Vec<usize>,
    members: Vec<Vec<usize>>,
    /// Label bit flipped by one photon in each mode.
    mode_bit: Vec<usize>,
}

impl Sectors {
    fn new(fock: &FockConfig, model: &KerrModel) -> Self {
        let n = model.n_modes();
        let mut root: Vec<usize> = (0..n).collect();
        fn find(root: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while root[r] != r {
                r = root[r];
            }
            root[i] = r;
            r
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && (model.pairing[[i, j]].norm() > 0.0 || model.hopping[[i, j]].norm() > 0.0) {
                    let (a, b) = (find(&mut root, i), find(&mut root, j));
                    root[a.max(b)] = a.min(b);
                }
            }
        }
        let mut comp_id = HashMap::new();
        let mut mode_bit = Vec::with_capacity(n);
        for i in 0..n {
            let r = find(&mut root, i);
            let next = comp_id.len();
            let c = *comp_id.entry(r).or_insert(next);
            mode_bit.push(1usize << c);
        }
        let n_sectors = 1usize << comp_id.len();
        let mut members = vec![Vec::new(); n_sectors];
        let mut sector_of = Vec::with_capacity(fock.dimension());
        let mut local_of = Vec::with_capacity(fock.dimension());
        for (idx, x) in fock.basis.iter().enumerate() {
            let s = x.iter().zip(&mode_bit).filter(|(&k, _)| k % 2 == 1).fold(0, |acc, (_, &b)| acc ^ b);
            sector_of.push(s);
            local_of.push(members[s].len());
            members[s].push(idx);
        }
        Sectors { sector_of, local_of, members, mode_bit }
    }

    fn sizes(&self) -> Vec<usize> {
        self.members.iter().map(|m| m.len()).collect()
    }
}

/// Block-diagonal operator on the parity sectors.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDensity {
    pub blocks: Vec<Array2<Complex64>>,
}

impl BlockDensity {
    fn zeros(sizes: &[usize]) -> Self {
        BlockDensity { blocks: sizes.iter().map(|&d| Array2::zeros((d, d))).collect() }
    }

    fn flatten(&self) -> Vec<Complex64> {
        self.blocks.iter().flat_map(|b| b.iter().copied()).collect()
    }

    fn unflatten(v: &[Complex64], sizes: &[usize]) -> Self {
        let mut off = 0;
        let blocks = sizes
            .iter()
            .map(|&d| {
                let b = Array2::from_shape_vec((d, d), v[off..off + d * d].to_vec()).unwrap();
                off += d * d;
                b
            })
            .collect();
        BlockDensity { blocks }
    }

    pub fn trace(&self) -> Complex64 {
        self.blocks.iter().map(|b| b.diag().sum()).sum()
    }

    /// `(ρ + ρ†)/2`, then unit trace.
    fn hermitize_normalize(&mut self) {
        for b in &mut self.blocks {
            let h = b.t().mapv(|z| z.conj());
            *b = (&*b + &h).mapv(|z| z * 0.5);
        }
        let tr = self.trace().re;
        for b in &mut self.blocks {
            b.mapv_inplace(|z| z / tr);
        }
    }

    fn frobenius(&self) -> f64 {
        self.blocks.iter().flat_map(|b| b.iter()).map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Liouvillian pieces on the blocked space.
struct Liouvillian {
    sizes: Vec<usize>,
    heff: Vec<Array2<Complex64>>,
    heff_h: Vec<Array2<Complex64>>,
    /// `jumps[s][j]`: rows `a` of block `s` reached by `c_j`, with source local
    /// index and amplitude.
    jumps: Vec<Vec<Vec<(usize, usize, f64)>>>,
    mode_bit: Vec<usize>,
    loss: f64,
}

impl Liouvillian {
    fn new(fock: &FockConfig, sectors: &Sectors, model: &KerrModel) -> Self {
        let n = model.n_modes();
        let sizes = sectors.sizes();
        let mut heff: Vec<Array2<Complex64>> = sizes.iter().map(|&d| Array2::zeros((d, d))).collect();
        let mut jumps = vec![vec![Vec::new(); n]; sizes.len()];
        let add = |heff: &mut Vec<Array2<Complex64>>, x: &[u8], col: usize, s: usize, ops: &[(usize, bool)], c: Complex64| {
            if let Some((y, amp)) = ladder(x, ops) {
                if let Some(row) = fock.index_of(&y) {
                    debug_assert_eq!(sectors.sector_of[row], s);
                    heff[s][[sectors.local_of[row], col]] += c * amp;
                }
            }
        };
        for (idx, x) in fock.basis.iter().enumerate() {
            let s = sectors.sector_of[idx];
            let a = sectors.local_of[idx];
            let total: f64 = x.iter().map(|&k| k as f64).sum();
            heff[s][[a, a]] += Complex64::new(model.kerr * total * total - model.detuning * total, -0.5 * model.loss * total);
            for i in 0..n {
                for j in 0..n {
                    let t = model.hopping[[i, j]];
                    if t.norm() > 0.0 {
                        add(&mut heff, x, a, s, &[(j, false), (i, true)], t);
                    }
                    let p = model.pairing[[i, j]];
                    if p.norm() > 0.0 {
                        add(&mut heff, x, a, s, &[(j, true), (i, true)], p);
                        add(&mut heff, x, a, s, &[(i, false), (j, false)], p.conj());
                    }
                }
            }
            for (j, slot) in jumps[s].iter_mut().enumerate() {
                if let Some((k, amp)) = ladder(x, &[(j, true)]).and_then(|(y, amp)| fock.index_of(&y).map(|k| (k, amp))) {
                    slot.push((a, sectors.local_of[k], amp));
                }
            }
        }
        let heff_h = heff.iter().map(|h| h.t().mapv(|z| z.conj())).collect();
        Liouvillian { sizes, heff, heff_h, jumps, mode_bit: sectors.mode_bit.clone(), loss: model.loss }
    }

    fn unknowns(&self) -> usize {
        self.sizes.iter().map(|d| d * d).sum()
    }

    /// `κ Σ_j c_j ρ c_j†`.
    fn jump(&self, rho: &BlockDensity) -> BlockDensity {
        let mut out = BlockDensity::zeros(&self.sizes);
        for (s, block) in out.blocks.iter_mut().enumerate() {
            let d = block.ncols();
            let dst = block.as_slice_mut().unwrap();
            for (j, rows) in self.jumps[s].iter().enumerate() {
                let src = &rho.blocks[s ^ self.mode_bit[j]];
                let ds = src.ncols();
                let src = src.as_slice().unwrap();
                for &(a, xa, va) in rows {
                    let src_row = &src[xa * ds..(xa + 1) * ds];
                    let dst_row = &mut dst[a * d..(a + 1) * d];
                    let f = self.loss * va;
                    for &(b, xb, vb) in rows {
                        dst_row[b] += src_row[xb] * (f * vb);
                    }
                }
            }
        }
        out
    }

    /// `-i(H_eff ρ - ρ H_eff†)`.
    fn coherent(&self, rho: &BlockDensity) -> BlockDensity {
        let blocks = rho
            .blocks
            .iter()
            .enumerate()
            .map(|(s, r)| (self.heff[s].dot(r) - r.dot(&self.heff_h[s])).mapv(|z| -I * z))
            .collect();
        BlockDensity { blocks }
    }

    fn apply(&self, rho: &BlockDensity) -> BlockDensity {
        let mut out = self.coherent(rho);
        let j = self.jump(rho);
        for (o, b) in out.blocks.iter_mut().zip(&j.blocks) {
            *o += b;
        }
        out
    }
}

/// Inverse of the coherent part through the eigenvectors of `H_eff`.
struct CoherentInverse {
    r: Vec<Array2<Complex64>>,
    r_h: Vec<Array2<Complex64>>,
    rinv: Vec<Array2<Complex64>>,
    rinv_h: Vec<Array2<Complex64>>,
    inv_denom: Vec<Array2<Complex64>>,
}

impl CoherentInverse {
    fn new(l: &Liouvillian) -> Result<Self> {
        let mut out = CoherentInverse { r: vec![], r_h: vec![], rinv: vec![], rinv_h: vec![], inv_denom: vec![] };
        for h in &l.heff {
            let d = h.nrows();
            if d == 0 {
                for v in [&mut out.r, &mut out.r_h, &mut out.rinv, &mut out.rinv_h, &mut out.inv_denom] {
                    v.push(Array2::zeros((0, 0)));
                }
                continue;
            }
            let (lam, r) = h.eig()?;
            let rinv = r.inv()?;
            let inv_denom = Array2::from_shape_fn((d, d), |(a, b)| ONE / (-I * (lam[a] - lam[b].conj())));
            if inv_denom.iter().any(|z| !z.is_finite()) {
                return Err(Error::SolverFailed("coherent part is singular (undamped eigenvector)".into()));
            }
            out.r_h.push(r.t().mapv(|z| z.conj()));
            out.rinv_h.push(rinv.t().mapv(|z| z.conj()));
            out.r.push(r);
            out.rinv.push(rinv);
            out.inv_denom.push(inv_denom);
        }
        Ok(out)
    }

    fn apply(&self, z: &BlockDensity) -> BlockDensity {
        let blocks = z
            .blocks
            .iter()
            .enumerate()
            .map(|(s, zb)| {
                if zb.is_empty() {
                    return zb.clone();
                }
                let y = self.rinv[s].dot(zb).dot(&self.rinv_h[s]) * &self.inv_denom[s];
                self.r[s].dot(&y).dot(&self.r_h[s])
            })
            .collect();
        BlockDensity { blocks }
    }
}

fn norm(v: &[Complex64]) -> f64 {
    dotc(v, v).re.sqrt()
}

/// `Σ conj(a_k) b_k` with independent partial sums so the loop vectorizes.
fn dotc(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut acc = [ZERO; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..4 {
            acc[k] += x[k].conj() * y[k];
        }
    }
    let tail: Complex64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x.conj() * y).sum();
    acc[0] + acc[1] + acc[2] + acc[3] + tail
}

/// `y += c x`.
fn axpy(c: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

/// Restarted GMRES from a zero initial guess. Returns the solution and the
/// final relative residual.
fn gmres<F>(apply: F, b: &[Complex64], restart: usize, max_iter: usize, tol: f64) -> (Vec<Complex64>, f64)
where
    F: Fn(&[Complex64]) -> Vec<Complex64>,
{
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![ZERO; n];
    if bnorm == 0.0 {
        return (x, 0.0);
    }
    let mut iters = 0;
    let mut rel = 1.0;
    while iters < max_iter {
        let ax = apply(&x);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= tol {
            break;
        }
        let mut basis = vec![r.iter().map(|z| z / beta).collect::<Vec<_>>()];
        let mut h = vec![vec![ZERO; restart]; restart + 1];
        let mut cs = vec![ZERO; restart];
        let mut sn = vec![ZERO; restart];
        let mut g = vec![ZERO; restart + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..restart {
            iters += 1;
            let mut w = apply(&basis[k]);
            for (i, v) in basis.iter().enumerate() {
                let hik = dotc(v, &w);
                h[i][k] = hik;
                axpy(-hik, v, &mut w);
            }
            let hn = norm(&w);
            h[k + 1][k] = Complex64::new(hn, 0.0);
            for i in 0..k {
                let t = cs[i].conj() * h[i][k] + sn[i].conj() * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let rho = (h[k][k].norm_sqr() + h[k + 1][k].norm_sqr()).sqrt();
            cs[k] = h[k][k] / rho;
            sn[k] = h[k + 1][k] / rho;
            h[k][k] = Complex64::new(rho, 0.0);
            h[k + 1][k] = ZERO;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k].conj() * g[k];
            k_used = k + 1;
            rel = g[k + 1].norm() / bnorm;
            if rel <= tol || hn == 0.0 || iters >= max_iter {
                break;
            }
            basis.push(w.iter().map(|z| z / hn).collect());
        }
        let mut y = vec![ZERO; k_used];
        for i in (0..k_used).rev() {
            let mut acc = g[i];
            for j in i + 1..k_used {
                acc -= h[i][j] * y[j];
            }
            y[i] = acc / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            axpy(*yj, &basis[j], &mut x);
        }
        if rel <= tol {
            break;
        }
    }
    (x, rel)
}

/// How the null vector was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    Dense,
    Iterative { iterations: usize },
}

/// Steady state on a truncated basis, stored in the rotated working modes.
#[derive(Clone, Debug)]
pub struct SteadyStateOracle {
    pub rho: BlockDensity,
    /// Frobenius norm of `ℒρ`.
    pub residual: f64,
    /// Population on the cutoff shell.
    pub truncation_indicator: f64,
    pub min_eigenvalue: f64,
    /// `a = W c` between physical modes `a` and working modes `c`.
    pub rotation: Array2<Complex64>,
    /// The model written in the working modes.
    pub working_model: KerrModel,
    pub fock: FockConfig,
    pub method: SolveMethod,
    sectors: Sectors,
}

/// Steady state of `spec` in the given basis.
pub fn steady_state(spec: &ModelSpec, fock: &FockConfig) -> Result<SteadyStateOracle> {
    steady_state_model(&KerrModel::from_spec(spec)?, fock, true)
}

/// Steady state of an explicit model. With `rotate`, the pair drive is first
/// diagonalized by a passive rotation when one exists.
pub fn steady_state_model(model: &KerrModel, fock: &FockConfig, rotate: bool) -> Result<SteadyStateOracle> {
    if fock.n_modes() != model.n_modes() {
        return Err(Error::InvalidArgument(format!(
            "basis has {} modes, model has {}",
            fock.n_modes(),
            model.n_modes()
        )));
    }
    if !(model.loss > 0.0) {
        return Err(Error::InvalidArgument("the steady state is unique only for positive loss".into()));
    }
    let rotation = if rotate { model.diagonalizing_rotation() } else { Array2::eye(model.n_modes()) };
    let mut working = model.rotated(&rotation);
    if rotate {
        // the rotation leaves round-off couplings that would merge sectors
        let scale = working.pairing.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for ((i, j), z) in working.pairing.indexed_iter_mut() {
            if i != j && z.norm() <= 1e-12 * scale {
                *z = ZERO;
            }
        }
    }
    let (sectors, l, rho, method) = solve_working(&working, fock, RESIDUAL_TARGET)?;
    let residual = l.apply(&rho).frobenius();

    let mut min_eigenvalue = f64::INFINITY;
    for b in rho.blocks.iter().filter(|b| !b.is_empty()) {
        let (ev, _) = b.eigh(UPLO::Lower)?;
        min_eigenvalue = min_eigenvalue.min(ev.iter().cloned().fold(f64::INFINITY, f64::min));
    }
    let truncation_indicator: f64 = fock
        .basis
        .iter()
        .enumerate()
        .filter(|(_, x)| fock.on_cutoff_shell(x))
        .map(|(k, _)| rho.blocks[sectors.sector_of[k]][[sectors.local_of[k], sectors.local_of[k]]].re)
        .sum();
    if truncation_indicator > SHELL_REJECT {
        return Err(Error::SolverFailed(format!(
            "cutoff shell population {truncation_indicator:.3e} exceeds {SHELL_REJECT:.0e}; raise the cutoff"
        )));
    }
    if truncation_indicator > SHELL_WARN {
        log::warn!("cutoff shell population {truncation_indicator:.3e}");
    }
    if min_eigenvalue < -1e-10 {
        log::warn!("steady state has eigenvalue {min_eigenvalue:.3e}");
    }
    Ok(SteadyStateOracle {
        rho,
        residual,
        truncation_indicator,
        min_eigenvalue,
        rotation,
        working_model: working,
        fock: fock.clone(),
        method,
        sectors,
    })
}

/// Bordered solve: `ℒρ = 0` with the vacuum row replaced by `Tr ρ = 1`.
fn dense_solve(l: &Liouvillian) -> Result<BlockDensity> {
    let n = l.unknowns();
    let mut mat = Array2::<Complex64>::zeros((n, n));
    let mut unit = vec![ZERO; n];
    for col in 0..n {
        unit[col] = ONE;
        let out = l.apply(&BlockDensity::unflatten(&unit, &l.sizes)).flatten();
        unit[col] = ZERO;
        for (row, v) in out.into_iter().enumerate() {
            mat[[row, col]] = v;
        }
    }
    // the vacuum is the first state of sector 0
    let mut off = 0;
    for &d in &l.sizes {
        for a in 0..d {
            mat[[0, off + a * d + a]] = ONE;
        }
        for k in 0..d * d {
            if k % (d + 1) != 0 {
                mat[[0, off + k]] = ZERO;
            }
        }
        off += d * d;
    }
    let mut rhs = ndarray::Array1::<Complex64>::zeros(n);
    rhs[0] = ONE;
    let x = mat
        .solve_into(rhs)
        .map_err(|e| Error::SolverFailed(format!("degenerate null space or singular Liouvillian: {e}")))?;
    Ok(BlockDensity::unflatten(x.as_slice().unwrap(), &l.sizes))
}

/// Solves in the working modes. Large problems start from the solution at a
/// cutoff four photons lower, which leaves only the truncation difference to
/// remove.
fn solve_working(working: &KerrModel, fock: &FockConfig, target: f64) -> Result<(Sectors, Liouvillian, BlockDensity, SolveMethod)> {
    let sectors = Sectors::new(fock, working);
    let l = Liouvillian::new(fock, &sectors, working);
    if l.unknowns() <= DENSE_UNKNOWNS {
        let mut rho = dense_solve(&l)?;
        rho.hermitize_normalize();
        return Ok((sectors, l, rho, SolveMethod::Dense));
    }
    let start = if fock.total_cutoff > 8 {
        let t = fock.total_cutoff - 4;
        let coarse = FockConfig::new(fock.n_modes(), fock.per_mode_cutoff.min(t), t)?;
        let (cs, _, crho, _) = solve_working(working, &coarse, 1e-3 * target.max(1e-9))?;
        let mut rho = BlockDensity::zeros(&l.sizes);
        for (s, members) in cs.members.iter().enumerate() {
            let fine: Vec<usize> = members.iter().map(|&k| sectors.local_of[fock.index_of(&coarse.basis[k]).unwrap()]).collect();
            for (a, &fa) in fine.iter().enumerate() {
                for (b, &fb) in fine.iter().enumerate() {
                    rho.blocks[s][[fa, fb]] = crho.blocks[s][[a, b]];
                }
            }
        }
        rho
    } else {
        // the maximally mixed state has nonzero overlap with the steady state
        let dim = fock.dimension() as f64;
        BlockDensity { blocks: l.sizes.iter().map(|&d| Array2::eye(d).mapv(|z: Complex64| z / dim)).collect() }
    };
    let (rho, method) = iterative_solve(&l, start, target)?;
    Ok((sectors, l, rho, method))
}

/// Defect correction: each step solves `(1 + S⁻¹J) δ = -S⁻¹ ℒρ` by GMRES to the
/// accuracy the current residual calls for.
fn iterative_solve(l: &Liouvillian, mut rho: BlockDensity, target: f64) -> Result<(BlockDensity, SolveMethod)> {
    let pre = CoherentInverse::new(l)?;
    let sizes = l.sizes.clone();
    let count = std::cell::Cell::new(0usize);
    let op = |v: &[Complex64]| {
        count.set(count.get() + 1);
        let x = BlockDensity::unflatten(v, &sizes);
        let mut out = pre.apply(&l.jump(&x));
        for (o, r) in out.blocks.iter_mut().zip(&x.blocks) {
            *o += r;
        }
        out.flatten()
    };
    for _ in 0..8 {
        let r = l.apply(&rho);
        let res = r.frobenius();
        if res < target {
            break;
        }
        let rhs: Vec<Complex64> = pre.apply(&r).flatten().into_iter().map(|z| -z).collect();
        let tol = (0.1 * target / res).clamp(1e-11, 0.1);
        let (dx, _) = gmres(op, &rhs, 60, 3000, tol);
        let step = BlockDensity::unflatten(&dx, &sizes);
        for (b, s) in rho.blocks.iter_mut().zip(&step.blocks) {
            *b += s;
        }
        rho.hermitize_normalize();
    }
    let res = l.apply(&rho).frobenius();
    if !(res < 1e-10) {
        return Err(Error::SolverFailed(format!("iterative solve stalled at residual {res:.3e}")));
    }
    Ok((rho, SolveMethod::Iterative { iterations: count.get() }))
}

impl SteadyStateOracle {
    pub fn n_modes(&self) -> usize {
        self.fock.n_modes()
    }

    /// `ρ` as a dense matrix on the working-mode basis.
    pub fn to_dense(&self) -> Array2<Complex64> {
        let dim = self.fock.dimension();
        let mut out = Array2::zeros((dim, dim));
        for (s, members) in self.sectors.members.iter().enumerate() {
            for (a, &ia) in members.iter().enumerate() {
                for (b, &ib) in members.iter().enumerate() {
                    out[[ia, ib]] = self.rho.blocks[s][[a, b]];
                }
            }
        }
        out
    }

    fn element(&self, row: usize, col: usize) -> Complex64 {
        let s = self.sectors.sector_of[row];
        if self.sectors.sector_of[col] != s {
            return ZERO;
        }
        self.rho.blocks[s][[self.sectors.local_of[row], self.sectors.local_of[col]]]
    }

    /// `Tr(ρ c†_{p1}…c†_{pk} c_{q1}…c_{ql})` in the working modes.
    pub fn expect(&self, creators: &[usize], annihilators: &[usize]) -> Complex64 {
        let ops: Vec<(usize, bool)> =
            annihilators.iter().map(|&q| (q, false)).chain(creators.iter().rev().map(|&p| (p, true))).collect();
        let mut acc = ZERO;
        for (k, x) in self.fock.basis.iter().enumerate() {
            if let Some((y, amp)) = ladder(x, &ops) {
                if let Some(j) = self.fock.index_of(&y) {
                    acc += self.element(k, j) * amp;
                }
            }
        }
        acc
    }

    /// Physical-mode one-body, pairing and density-density matrices.
    pub fn physical_moments(&self) -> OracleMoments {
        let n = self.n_modes();
        let w = &self.rotation;
        let hop = Array2::from_shape_fn((n, n), |(k, l)| self.expect(&[k], &[l]));
        let pair = Array2::from_shape_fn((n, n), |(k, l)| self.expect(&[], &[k, l]));
        let mut quartic = vec![ZERO; n * n * n * n];
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        quartic[((p * n + q) * n + r) * n + s] = self.expect(&[p, q], &[r, s]);
                    }
                }
            }
        }
        let wh = w.t().mapv(|z| z.conj());
        // ⟨a_i† a_j⟩ = Σ W*_ik W_jl ⟨c_k† c_l⟩
        let one_particle = w.mapv(|z| z.conj()).dot(&hop).dot(&w.t());
        let pairing = w.dot(&pair).dot(&w.t());
        let mut density_density = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let mut acc = ZERO;
                for p in 0..n {
                    for q in 0..n {
                        let left = wh[[p, i]] * wh[[q, j]];
                        if left == ZERO {
                            continue;
                        }
                        for r in 0..n {
                            for s in 0..n {
                                acc += left * w[[i, r]] * w[[j, s]] * quartic[((p * n + q) * n + r) * n + s];
                            }
                        }
                    }
                }
                if i == j {
                    acc += one_particle[[i, i]];
                }
                density_density[[i, j]] = acc.re;
            }
        }
        OracleMoments { one_particle, pairing, density_density }
    }

    /// `max |[H, ρ]|` over matrix elements in the working basis.
    pub fn nonthermality(&self) -> f64 {
        let l = Liouvillian::new(&self.fock, &self.sectors, &self.working_model);
        let mut worst = 0.0f64;
        for (s, r) in self.rho.blocks.iter().enumerate() {
            let h = (&l.heff[s] + &l.heff_h[s]).mapv(|z| z * 0.5);
            let c = h.dot(r) - r.dot(&h);
            worst = c.iter().map(|z| z.norm()).fold(worst, f64::max);
        }
        worst
    }

    /// Displaced-parity Wigner function of a single mode.
    pub fn wigner_single_mode(&self, alpha: Complex64) -> Result<f64> {
        if self.n_modes() != 1 {
            return Err(Error::DimensionTooLarge { dim: self.n_modes(), limit: 1 });
        }
        let rho = self.to_dense();
        let dim = rho.nrows();
        let beta = alpha * 2.0;
        let x = beta.norm_sqr();
        let gauss = (-x / 2.0).exp();
        let mut acc = ZERO;
        for m in 0..dim {
            for n in 0..dim {
                let r = rho[[n, m]];
                if r == ZERO {
                    continue;
                }
                // ⟨m|D(β)|n⟩
                let d = if m >= n {
                    let ratio = (0.5 * (ln_factorial(n) - ln_factorial(m))).exp();
                    beta.powu((m - n) as u32) * (ratio * laguerre(n, (m - n) as f64, x))
                } else {
                    let ratio = (0.5 * (ln_factorial(m) - ln_factorial(n))).exp();
                    (-beta.conj()).powu((n - m) as u32) * (ratio * laguerre(m, (n - m) as f64, x))
                };
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                acc += r * d * (sign * gauss);
            }
        }
        Ok(2.0 / PI * acc.re)
    }
}

/// Generalized Laguerre polynomial `L_k^{(a)}(x)`.
fn laguerre(k: usize, a: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if k == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - x;
    for j in 1..k {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + a - x) * cur - (jf + a) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Physical-mode moments of an oracle steady state.
#[derive(Clone, Debug)]
pub struct OracleMoments {
    /// `⟨a_i† a_j⟩`.
    pub one_particle: Array2<Complex64>,
    /// `⟨a_i a_j⟩`.
    pub pairing: Array2<Complex64>,
    /// `⟨n_i n_j⟩`.
    pub density_density: Array2<f64>,
}

/// Site-averaged observables in the same layout as the exact pipeline.
#[derive(Clone, Debug)]
pub struct OracleObservables {
    pub nbar: f64,
    pub site_density: Vec<f64>,
    pub displacements: Vec<usize>,
    pub one_particle: Vec<Complex64>,
    pub pairing: Vec<Complex64>,
    pub g2: Vec<f64>,
}

pub fn observables(spec: &ModelSpec, oracle: &SteadyStateOracle, displacements: &[usize]) -> OracleObservables {
    let n = spec.n_modes;
    let mom = oracle.physical_moments();
    let site_density: Vec<f64> = (0..n).map(|i| mom.one_particle[[i, i]].re).collect();
    let nbar = site_density.iter().sum::<f64>() / n as f64;
    let mut one_particle = Vec::new();
    let mut pairing = Vec::new();
    let mut g2 = Vec::new();
    for &r in displacements {
        let pairs = displaced_pairs(spec, r);
        let cnt = pairs.len().max(1) as f64;
        one_particle.push(pairs.iter().map(|&(i, j)| mom.one_particle[[i, j]]).sum::<Complex64>() / cnt);
        pairing.push(pairs.iter().map(|&(i, j)| mom.pairing[[i, j]]).sum::<Complex64>() / cnt);
        let nn = pairs.iter().map(|&(i, j)| mom.density_density[[i, j]]).sum::<f64>() / cnt;
        g2.push((nn - nbar * nbar) / (nbar * nbar));
    }
    OracleObservables { nbar, site_density, displacements: displacements.to_vec(), one_particle, pairing, g2 }
}

/// `½ Σ|eig(A - B)|` for Hermitian `A`, `B`.
pub fn trace_distance(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Result<f64> {
    let diff = a - b;
    let (ev, _) = diff.eigh(UPLO::Lower)?;
    Ok(0.5 * ev.iter().map(|e| e.abs()).sum::<f64>())
}

/// Trace distance between the steady states with and without `hopping`,
/// both solved in the physical modes.
pub fn hopping_invariance(spec: &ModelSpec, fock: &FockConfig, hopping: &Array2<Complex64>) -> Result<f64> {
    let base = KerrModel::from_spec(spec)?;
    let bare = steady_state_model(&base, fock, false)?;
    let dressed = steady_state_model(&base.with_hopping(hopping), fock, false)?;
    trace_distance(&bare.to_dense(), &dressed.to_dense())
}

/// `max |[H, ρ_ss]|` for `spec`.
pub fn nonthermality(spec: &ModelSpec, fock: &FockConfig) -> Result<f64> {
    Ok(steady_state(spec, fock)?.nonthermality())
}

/// Pure state on `N` left and `N` right modes, keyed by occupations
/// `(n_L…, n_R…)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DoubledState {
    pub n_modes: usize,
    pub amplitudes: BTreeMap<Vec<u8>, Complex64>,
}

type Term = (Complex64, Vec<(usize, bool)>);

impl DoubledState {
    pub fn vacuum(n_modes: usize) -> Self {
        DoubledState { n_modes, amplitudes: BTreeMap::from([(vec![0u8; 2 * n_modes], ONE)]) }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.values().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn apply(&self, terms: &[Term]) -> Self {
        let mut out: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
        for (x, amp) in &self.amplitudes {
            for (c, ops) in terms {
                if let Some((y, f)) = ladder(x, ops) {
                    *out.entry(y).or_insert(ZERO) += amp * c * f;
                }
            }
        }
        DoubledState { n_modes: self.n_modes, amplitudes: out }
    }

    fn axpy(&mut self, c: Complex64, other: &DoubledState) {
        for (k, v) in &other.amplitudes {
            *self.amplitudes.entry(k.clone()).or_insert(ZERO) += c * v;
        }
    }

    fn scale(&mut self, c: Complex64) {
        self.amplitudes.values_mut().for_each(|v| *v *= c);
    }

    /// `Tr_R |ψ⟩⟨ψ|` on `fock`; amplitudes outside the basis are dropped.
    pub fn reduced_density(&self, fock: &FockConfig) -> Array2<Complex64> {
        let n = self.n_modes;
        let mut by_right: BTreeMap<&[u8], Vec<(usize, Complex64)>> = BTreeMap::new();
        for (x, amp) in &self.amplitudes {
            if let Some(k) = fock.index_of(&x[..n]) {
                by_right.entry(&x[n..]).or_default().push((k, *amp));
            }
        }
        let dim = fock.dimension();
        let mut rho = Array2::zeros((dim, dim));
        for entries in by_right.values() {
            for &(a, za) in entries {
                for &(b, zb) in entries {
                    rho[[a, b]] += za * zb.conj();
                }
            }
        }
        rho
    }
}

/// `γ_i† = (a_{iL}† + a_{iR}†)/√2` terms of `½ Σ_ij A_ij γ_i† γ_j†` (or of the
/// lowering form with `create = false`).
fn symmetric_pair_terms(a: &Array2<Complex64>, n: usize, create: bool) -> Vec<Term> {
    let mut terms = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let c = a[[i, j]];
            if c.norm() == 0.0 {
                continue;
            }
            for si in [i, i + n] {
                for sj in [j, j + n] {
                    terms.push((c * 0.25, vec![(sj, create), (si, create)]));
                }
            }
        }
    }
    terms
}

/// `|Ψ⟩ = Σ_{m ≤ max_pairs} (-1)^m/(m!(δ)_m) K₊^m |Ω⟩`, normalized, with
/// `K₊ = ½ Σ_ij (P_ij/u) γ_i† γ_j†` built directly on the doubled Fock space.
pub fn purification_state(model: &KerrModel, max_pairs: usize) -> Result<DoubledState> {
    let n = model.n_modes();
    let delta = model.reduced_detuning();
    check_nonresonant(delta)?;
    let raise = symmetric_pair_terms(&model.pairing.mapv(|z| z / model.kerr), n, true);
    let mut power = DoubledState::vacuum(n);
    let mut psi = power.clone();
    let mut c = ONE;
    let mut top = 0.0;
    for m in 1..=max_pairs {
        power = power.apply(&raise);
        c = -c / (m as f64 * (delta + (m - 1) as f64));
        psi.axpy(c, &power);
        top = (c * power.norm()).norm();
    }
    let nrm = psi.norm();
    let top_weight = (top / nrm).powi(2);
    if top_weight > SHELL_REJECT {
        return Err(Error::SolverFailed(format!("top pair shell carries weight {top_weight:.3e}; raise max_pairs")));
    }
    psi.scale(Complex64::new(1.0 / nrm, 0.0));
    Ok(psi)
}

/// Norm of the two hidden-symmetry conditions,
/// `[(u(N_L+N_R) - Δ_eff)(N_L - N_R) + 2 Σ_ij P_ij α_{i+}† α_{j-}†]|ψ⟩` and
/// `α_{j-}|ψ⟩` for every `j`, with `Δ_eff = Δ + iκ/2`.
///
/// The pair drive raises the photon number, so a state truncated at
/// `max_photons` leaks into the shell above; only components up to
/// `max_photons` are counted.
pub fn htrs_residual(model: &KerrModel, psi: &DoubledState, max_photons: usize) -> f64 {
    let n = model.n_modes();
    let delta_eff = Complex64::new(model.detuning, model.loss / 2.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut drive = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let c = model.pairing[[i, j]];
            if c.norm() == 0.0 {
                continue;
            }
            // α_{i+}† α_{j-}† = ½ (a_{iL}† + a_{iR}†)(a_{jL}† - a_{jR}†)
            for (si, fi) in [(i, 1.0), (i + n, 1.0)] {
                for (sj, fj) in [(j, 1.0), (j + n, -1.0)] {
                    drive.push((c * (fi * fj), vec![(sj, true), (si, true)]));
                }
            }
        }
    }
    let mut first = psi.apply(&drive);
    for (x, amp) in &psi.amplitudes {
        let nl: f64 = x[..n].iter().map(|&k| k as f64).sum();
        let nr: f64 = x[n..].iter().map(|&k| k as f64).sum();
        let v = (model.kerr * (nl + nr) - delta_eff) * (nl - nr) * amp;
        *first.amplitudes.entry(x.clone()).or_insert(ZERO) += v;
    }
    let below = |s: &DoubledState| -> f64 {
        s.amplitudes
            .iter()
            .filter(|(x, _)| x.iter().map(|&k| k as usize).sum::<usize>() <= max_photons)
            .map(|(_, z)| z.norm_sqr())
            .sum()
    };
    let mut acc = below(&first);
    for j in 0..n {
        let anti = psi.apply(&[(Complex64::new(h, 0.0), vec![(j, false)]), (Complex64::new(-h, 0.0), vec![(j + n, false)])]);
        acc += below(&anti);
    }
    acc.sqrt()
}

/// `‖(K₋ + 1)|ψ⟩‖` with `K₋ = ½ Σ_ij (uP⁻¹)_ij γ_i γ_j`, counting components
/// below `max_photons` only.
pub fn pair_lowering_residual(model: &KerrModel, psi: &DoubledState, max_photons: usize) -> Result<f64> {
    let n = model.n_modes();
    let inv = model.pairing.inv()?.mapv(|z| z * model.kerr);
    let lower = symmetric_pair_terms(&inv, n, false);
    let mut out = psi.apply(&lower);
    out.axpy(ONE, psi);
    Ok(out
        .amplitudes
        .iter()
        .filter(|(x, _)| x.iter().map(|&k| k as usize).sum::<usize>() < max_photons)
        .map(|(_, z)| z.norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// Purification built in the oracle's working modes, compared with its
/// steady state.
#[derive(Clone, Debug)]
pub struct PurificationCheck {
    pub trace_distance: f64,
    pub htrs_residual: f64,
}

pub fn purification_check(oracle: &SteadyStateOracle) -> Result<PurificationCheck> {
    // pair shells beyond T/2 still put photons on the physical side below T
    let t = oracle.fock.total_cutoff;
    let psi = purification_state(&oracle.working_model, t)?;
    let reduced = psi.reduced_density(&oracle.fock);
    Ok(PurificationCheck {
        trace_distance: trace_distance(&reduced, &oracle.to_dense())?,
        htrs_residual: htrs_residual(&oracle.working_model, &psi, 2 * t),
    })
}
