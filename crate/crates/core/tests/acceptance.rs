//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::f64::consts::TAU;
use std::time::Instant;

use kerrlattice::formfactors::{phi_general, phi_plain};
use kerrlattice::meanfield::{critical_point, cusp_closed_form, exact_density, fit_gamma, susceptibility_scan};
use kerrlattice::moments::{
    collective_moment_unitary, correlators, max_pairing_cross_correlation, mode_moments, pcs_residual,
    select_cutoff, CorrelatorOptions, MomentEngine,
};
use kerrlattice::oracle::{
    hopping_invariance, nonthermality, observables, pair_lowering_residual, purification_state, steady_state, FockConfig, KerrModel,
};
use kerrlattice::semiclassics::{fixed_points, residual, stability_eigenvalues, stable_sphere};
use kerrlattice::specialfn::ln_factorial;
use kerrlattice::wigner::{max_pairing_concentration, wigner_norm_check, WignerFunction, PhasePoint};
use kerrlattice::{Boundary, Complex64, ModelSpec, PairingSpectrum, SeriesOptions};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn disk(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    let r = radius * rng.random::<f64>().sqrt();
    Complex64::from_polar(r, rng.random_range(0.0..TAU))
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn fail_on_error(e: kerrlattice::Error) -> Outcome {
    outcome(false, format!("error: {e}"))
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return fail_on_error(e.into()),
        }
    };
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn is_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

/// Golden-section maximum of `f` on `[a, b]`.
fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut x1, mut x2) = (b - r * (b - a), a + r * (b - a));
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
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

/// Grid maximum of `f` refined by golden section between the neighbours.
fn refined_max<F: Fn(f64) -> f64>(f: F, grid: &[f64]) -> f64 {
    let vals: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let j = (0..vals.len()).fold(0, |b, j| if vals[j] > vals[b] { j } else { b });
    let lo = grid[j.saturating_sub(1)];
    let hi = grid[(j + 1).min(grid.len() - 1)];
    golden_max(f, lo, hi, 1e-9)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20240101);
    let (mut worst, mut worst_g2, mut draws, mut max_dim) = (0.0f64, 0.0f64, 0, 0);
    let mut failures = Vec::new();
    for n in 1..=3usize {
        for d in 0..=1 {
            for _ in 0..20 {
                let kappa = rng.random_range(0.01..1.0);
                let det = rng.random_range(-1.0..1.0);
                let g = disk(&mut rng, 1.0);
                let spec = if d == 0 {
                    ModelSpec::uniform(n, 1.0, det, kappa, g)
                } else {
                    ModelSpec::lattice(&[n], Boundary::Open, 1.0, det, kappa, g, disk(&mut rng, 1.0))
                };
                let sp = tri!(spec.spectrum());
                let exact = tri!(correlators(&spec, &sp, &CorrelatorOptions::default()));
                // g2 is divided by n̄², so its truncation error is too
                let fock = tri!(FockConfig::for_model(&spec, 5e-9 * exact.nbar.powi(2).min(1.0)));
                let o = tri!(steady_state(&spec, &fock));
                let ob = observables(&spec, &o, &exact.displacements);
                let truncation = fock.tail_estimate.unwrap_or(0.0);
                let tol = 1e-7f64.max(truncation);
                let tol_g2 = 1e-7f64.max(truncation / exact.nbar.powi(2));
                let mut err = (ob.nbar - exact.nbar).abs();
                let mut err_g2 = 0.0f64;
                let g2 = exact.g2.as_ref().unwrap();
                for k in 0..exact.displacements.len() {
                    err = err.max((ob.one_particle[k] - exact.one_particle[k]).norm());
                    err = err.max((ob.pairing[k] - exact.pairing[k]).norm());
                    err_g2 = err_g2.max((ob.g2[k] - g2[k]).abs());
                }
                if err > tol || err_g2 > tol_g2 {
                    failures.push(format!("N={n} D={d} draw {draws}: err {err:.2e} g2 {err_g2:.2e}"));
                }
                worst = worst.max(err / tol);
                worst_g2 = worst_g2.max(err_g2 / tol_g2);
                max_dim = max_dim.max(fock.dimension());
                draws += 1;
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{draws} draws, largest Fock dimension {max_dim}, worst error/tolerance {worst:.2e} (correlators) {worst_g2:.2e} (g2){}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

/// Brute-force `Σ_{Σt=l} Π_j w_j(t_j)` over every composition.
fn enumerate(weights: &[Vec<f64>], k: usize) -> Vec<f64> {
    let mut out = vec![0.0; k + 1];
    let mut t = vec![0usize; weights.len()];
    loop {
        let l: usize = t.iter().sum();
        if l <= k {
            out[l] += t.iter().zip(weights).map(|(&tj, w)| w[tj]).product::<f64>();
        }
        let mut j = 0;
        loop {
            if j == t.len() {
                return out;
            }
            t[j] += 1;
            if t[j] <= k {
                break;
            }
            t[j] = 0;
            j += 1;
        }
    }
}

fn poch(a: f64, t: usize) -> f64 {
    (0..t).map(|i| a + i as f64).product()
}

fn formfactor_enumeration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..=4usize);
        let k = rng.random_range(0..=8usize);
        let lambda: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
        let nv: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let mv: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let bv: Vec<bool> = (0..n).map(|_| rng.random()).collect();

        let plain_w: Vec<Vec<f64>> = lambda.iter().map(|&l| (0..=k).map(|t| poch(0.5, t) * l.powi(2 * t as i32)).collect()).collect();
        let general_w: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let b = bv[j] as usize;
                (0..=k)
                    .map(|t| {
                        poch(0.5 + (nv[j] + b) as f64, t) * poch(0.5 + (mv[j] + b) as f64, t) * (4.0 * lambda[j]).powi(2 * t as i32)
                            / ln_factorial(2 * t + b).exp()
                    })
                    .collect()
            })
            .collect();
        let plain = tri!(phi_plain(&lambda, k));
        let general = tri!(phi_general(&lambda, &nv, &mv, &bv, k));
        for (table, weights) in [(&plain, &plain_w), (&general, &general_w)] {
            let brute = enumerate(weights, k);
            for (v, b) in table.values.iter().zip(&brute) {
                worst = worst.max(rel(v.re(), *b));
            }
        }
    }
    outcome(worst < 1e-12, format!("100 draws, worst relative error {worst:.2e}"))
}

fn unitary_consistency() -> Outcome {
    let opts = SeriesOptions { tol: 1e-15, ..SeriesOptions::default() };
    let mut worst = 0.0f64;
    let mut cases = 0;
    for &n_modes in &[1usize, 2, 5] {
        for &lambda in &[0.3, 2.0, 10.0, 50.0] {
            let delta = c(1.0 - 0.7 * n_modes as f64, -0.2);
            let sp = PairingSpectrum::uniform(n_modes, lambda);
            let cutoff = tri!(select_cutoff(&sp, delta, 1e-15)) + 3;
            let engine = tri!(MomentEngine::with_cutoff(&sp, delta, 1e-15, cutoff));
            for n in 0..=3 {
                for k in 0..=2u32 {
                    for m in 0..=3 {
                        let closed = tri!(collective_moment_unitary(n, k, m, lambda, n_modes, delta, opts));
                        let series = tri!(engine.collective(n, k, m));
                        worst = worst.max((closed - series).norm() / closed.norm().max(1e-300));
                        cases += 1;
                    }
                }
            }
        }
    }
    outcome(worst < 1e-10, format!("{cases} cases, worst relative difference {worst:.2e}"))
}

fn resonance_locations() -> Outcome {
    let (n, kappa, g) = (4usize, 1e-3, c(0.1, 0.0));
    let spacing = 2.0 / n as f64;
    let density = |d: f64| exact_density(n, 1.0, d, kappa, g).unwrap_or(f64::NAN);
    let mut offsets = Vec::new();
    for level in 0..3 {
        let target = 2.0 * (level + 1) as f64 / n as f64;
        let grid = linspace(target - 0.4 * spacing, target + 0.4 * spacing, 4001);
        let peak = refined_max(density, &grid);
        let is_local_max = density(peak) > density(peak - 1e-4) && density(peak) > density(peak + 1e-4);
        offsets.push(if is_local_max { (peak - target).abs() / spacing } else { f64::INFINITY });
    }
    let pass = offsets.iter().all(|&o| o < 0.05);
    outcome(pass, format!("peak offsets / level spacing: {:.2e} {:.2e} {:.2e}", offsets[0], offsets[1], offsets[2]))
}

fn pcs_property() -> Outcome {
    let mut algebraic = Vec::new();
    for &n in &[1usize, 6, 20] {
        let spec = ModelSpec::uniform(n, 1.0, 0.0, 0.0, c(1.0, 0.0));
        let sp = tri!(spec.spectrum());
        algebraic.push(tri!(pcs_residual(&sp, c(n as f64 / 2.0, 0.0), 400)));
    }
    let spec = ModelSpec::uniform(2, 1.0, 0.0, 0.0, c(0.4, 0.0));
    let model = tri!(KerrModel::from_spec(&spec));
    let psi = tri!(purification_state(&model, 14));
    let fock_residual = tri!(pair_lowering_residual(&model, &psi, 28));

    let n = 6;
    let pcs = (2.0 - n as f64) / n as f64;
    let g2k = |d: f64| {
        let spec = ModelSpec::uniform(n, 1.0, d, 0.01, c(1.0, 0.0));
        let sp = spec.spectrum().unwrap();
        let opts = CorrelatorOptions { displacements: Some(vec![0]), ..CorrelatorOptions::default() };
        correlators(&spec, &sp, &opts).ok().and_then(|o| o.g2_k).unwrap_or(f64::NAN)
    };
    let grid = linspace(pcs - 0.5, pcs + 0.5, 201);
    let dip = refined_max(|d| -g2k(d), &grid);
    let worst_alg = algebraic.iter().cloned().fold(0.0, f64::max);
    let pass = worst_alg < 1e-10 && fock_residual < 1e-8 && (dip - pcs).abs() < 0.02;
    outcome(
        pass,
        format!(
            "algebraic residual {worst_alg:.2e}, Fock residual (N=2) {fock_residual:.2e}, g2_K minimum at {dip:.4}U vs {pcs:.4}U"
        ),
    )
}

fn critical_behaviour() -> Outcome {
    let g = c(1.0, 0.0);
    let cusp = cusp_closed_form(1.0, g);
    let bisected = tri!(critical_point(1.0, g));
    let kappa_star = cusp.kappa_star;
    let mf_ok = (kappa_star - 4.0).abs() <= 0.8 && rel(bisected.kappa_star, kappa_star) < 1e-6;

    let sizes = [250usize, 500, 1000, 2000];
    let grid = linspace(0.0, 8.0, 81);
    let below = tri!(susceptibility_scan(1.0, g, &sizes, 0.6 * kappa_star, &grid));
    let above = tri!(susceptibility_scan(1.0, g, &sizes, 1.5 * kappa_star, &grid));
    let chi_below: Vec<f64> = below.maxima.iter().map(|m| m.chi.abs()).collect();
    let chi_above: Vec<f64> = above.maxima.iter().map(|m| m.chi.abs()).collect();
    let diverges = is_increasing(&chi_below) && chi_below[3] / chi_below[2] > 1.5;
    let saturates = rel(chi_above[3], chi_above[2]) < 0.05;

    let taus = [0.1, 0.15, 0.2, 0.3, 0.4];
    let kappas: Vec<f64> = taus.iter().map(|t| kappa_star * (1.0 + t)).collect();
    let mut chi_max = Vec::new();
    for &k in &kappas {
        let scan = tri!(susceptibility_scan(1.0, g, &[2000], k, &grid));
        chi_max.push(scan.maxima[0].chi.abs());
    }
    let gamma = tri!(fit_gamma(&kappas, &chi_max, kappa_star));
    let gamma_ok = (gamma + 1.0).abs() <= 0.3;
    outcome(
        mf_ok && diverges && saturates && gamma_ok,
        format!(
            "mean-field κ_* = {kappa_star:.4}U (bisection {:.4}U, target 4U ± 20%){}; χ_max below {:?}; above {:?}; γ = {gamma:.3}",
            bisected.kappa_star,
            if mf_ok { "" } else { " OUT OF RANGE" },
            chi_below.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>(),
            chi_above.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>(),
        ),
    )
}

fn transition_emergence() -> Outcome {
    let density = |side: usize, d: f64| -> kerrlattice::Result<f64> {
        let spec = ModelSpec::lattice(&[side, side], Boundary::Periodic, 1.0, d, 0.01, c(0.2, 0.0), c(0.25, 0.0));
        let sp = spec.spectrum()?;
        let mm = mode_moments(&sp, spec.derived().reduced_detuning, 1e-12, false)?;
        let total: f64 = mm.occupation.iter().zip(sp.class_sizes()).map(|(o, s)| o * s as f64).sum();
        Ok(total / spec.n_modes as f64)
    };
    let max_slope = |side: usize, grid: &[f64]| -> kerrlattice::Result<(f64, f64)> {
        let nbar = grid.par_iter().map(|&d| density(side, d)).collect::<kerrlattice::Result<Vec<f64>>>()?;
        let h = grid[1] - grid[0];
        Ok((0..grid.len() - 1)
            .map(|i| (((nbar[i + 1] - nbar[i]) / h).abs(), grid[i]))
            .fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a }))
    };
    // the edges are ~κ wide, so a coarse scan only locates them; the slope is
    // measured on a 2e-4 U grid around the steepest coarse interval
    let coarse = linspace(0.0, 5.0, 251);
    let mut slopes = Vec::new();
    for &side in &[4usize, 6, 8] {
        let (_, at) = tri!(max_slope(side, &coarse));
        let (slope, _) = tri!(max_slope(side, &linspace(at - 0.2, at + 0.2, 2001)));
        slopes.push(slope);
    }
    outcome(is_increasing(&slopes), format!("max |dn̄/dΔ| for N = 16, 36, 64: {:.3} {:.3} {:.3}", slopes[0], slopes[1], slopes[2]))
}

fn correlation_sign() -> Outcome {
    let g2_far = |d: f64| -> kerrlattice::Result<f64> {
        let spec = ModelSpec::lattice(&[24], Boundary::Periodic, 1.0, d, 0.01, c(0.2, 0.0), c(0.25, 0.0));
        let sp = spec.spectrum()?;
        let opts = CorrelatorOptions { displacements: Some(vec![12]), ..CorrelatorOptions::default() };
        Ok(correlators(&spec, &sp, &opts)?.g2_far().unwrap_or(f64::NAN))
    };
    let plus = tri!(g2_far(3.0));
    let minus = tri!(g2_far(-3.0));
    outcome(plus > 0.0 && minus < 0.0, format!("g2(r=12) = {plus:.4e} at Δ=+3U, {minus:.4e} at Δ=-3U"))
}

fn semiclassics_closed_forms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut worst, mut spheres, mut points) = (0.0f64, 0, 0);
    let mut problems = Vec::new();
    for draw in 0..50 {
        let n = rng.random_range(1..=8usize);
        let det = rng.random_range(-1.0..4.0);
        let kappa = rng.random_range(0.01..1.0);
        let spec = match draw % 3 {
            0 => ModelSpec::uniform(n, 1.0, det, kappa, disk(&mut rng, 1.0)),
            1 => ModelSpec::lattice(&[n], Boundary::Periodic, 1.0, det, kappa, c(0.0, 0.0), disk(&mut rng, 1.0)),
            _ => ModelSpec::lattice(&[n], Boundary::Open, 1.0, det, kappa, disk(&mut rng, 1.0), disk(&mut rng, 1.0)),
        };
        let sp = tri!(spec.spectrum());
        for fp in fixed_points(&spec, &sp) {
            let report = tri!(stability_eigenvalues(&spec, &sp, &fp));
            worst = worst.max(report.mismatch);
            points += 1;
            let on_sphere = fp.lambda_class > 0.0 && fp.lambda_class == sp.lambda_star && fp.stable;
            if on_sphere && stable_sphere(&spec, &sp).is_some() {
                spheres += 1;
                let res = residual(&spec, &sp, &fp.beta);
                if res >= 1e-12 || report.zero_modes != sp.multiplicity - 1 {
                    problems.push(format!("draw {draw}: residual {res:.1e}, {} zero modes for s={}", report.zero_modes, sp.multiplicity));
                }
            }
        }
    }
    outcome(
        worst < 1e-8 && problems.is_empty() && spheres > 0,
        format!("{points} fixed points, worst eigenvalue mismatch {worst:.2e}, {spheres} stable sphere points{}", problems.join("; ")),
    )
}

fn wigner_consistency() -> Outcome {
    let spec = ModelSpec::uniform(1, 1.0, 0.2, 0.5, c(0.8, 0.0));
    let sp = tri!(spec.spectrum());
    let delta = spec.derived().reduced_detuning;
    let wf = tri!(WignerFunction::new(&spec, &sp, delta, 1e-14));
    let fock = tri!(FockConfig::for_model(&spec, 1e-12));
    let o = tri!(steady_state(&spec, &fock));
    let mut pointwise = 0.0f64;
    for k in 0..10 {
        let a = Complex64::from_polar(0.15 * k as f64, 0.9 * k as f64);
        let exact = tri!(wf.wigner(&PhasePoint::new(vec![a])));
        pointwise = pointwise.max((tri!(o.wigner_single_mode(a)) - exact).abs());
    }

    let norm1 = tri!(wigner_norm_check(&spec, &sp, delta, 6.0, 201));
    let pair = ModelSpec::uniform(2, 1.0, 0.1, 0.6, c(0.5, 0.0));
    let sp2 = tri!(pair.spectrum());
    let d2 = pair.derived().reduced_detuning;
    let norm2 = tri!(wigner_norm_check(&pair, &sp2, d2, 5.0, 31));

    // real rotations of the degenerate modes of a uniform model
    let trio = ModelSpec::uniform(3, 1.0, 0.4, 0.3, c(0.7, 0.2));
    let sp3 = tri!(trio.spectrum());
    let w3 = tri!(WignerFunction::new(&trio, &sp3, trio.derived().reduced_detuning, 1e-14));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut invariance = 0.0f64;
    for _ in 0..10 {
        let alpha: Vec<Complex64> = (0..3).map(|_| disk(&mut rng, 1.2)).collect();
        let r = random_rotation(&mut rng, 3);
        let rotated: Vec<Complex64> = (0..3).map(|i| (0..3).map(|j| alpha[j] * r[[i, j]]).sum()).collect();
        let a = tri!(w3.wigner(&PhasePoint::new(alpha)));
        let b = tri!(w3.wigner(&PhasePoint::new(rotated)));
        invariance = invariance.max(rel(a, b));
    }
    let pass = pointwise < 1e-6 && (norm1 - 1.0).abs() < 1e-4 && (norm2 - 1.0).abs() < 1e-4 && invariance < 1e-10;
    outcome(
        pass,
        format!(
            "pointwise {pointwise:.2e}; normalization N=1 {norm1:.8}, N=2 {norm2:.8}; rotation invariance {invariance:.2e}"
        ),
    )
}

/// Orthogonal matrix from Gram-Schmidt on a random Gaussian-like matrix.
fn random_rotation(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    let mut q = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for k in 0..i {
            let p: f64 = (0..n).map(|j| v[j] * q[[k, j]]).sum();
            for j in 0..n {
                v[j] -= p * q[[k, j]];
            }
        }
        let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for j in 0..n {
            q[[i, j]] = v[j] / nrm;
        }
    }
    q
}

fn symmetry_breaking() -> Outcome {
    let n = 15usize;
    let u = 1.0 / n as f64;
    let drives = [0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0];
    let (mut conc, mut cross) = (Vec::new(), Vec::new());
    for &bond in &drives {
        let spec = ModelSpec::lattice(&[n], Boundary::Open, 1.0, 0.0, u / 100.0, c(0.0, 0.0), c(bond, 0.0));
        let sp = tri!(spec.spectrum());
        let delta = spec.derived().reduced_detuning;
        conc.push(tri!(max_pairing_concentration(&sp, delta)));
        let mm = tri!(mode_moments(&sp, delta, 1e-12, true));
        cross.push(tri!(max_pairing_cross_correlation(&sp, &mm)));
    }
    let last = *cross.last().unwrap();
    let trend = cross.windows(2).all(|w| (w[1] + 0.5).abs() <= (w[0] + 0.5).abs());
    let pass = is_increasing(&conc) && *conc.last().unwrap() > 0.9 && trend && (-0.7..=-0.3).contains(&last);
    outcome(
        pass,
        format!(
            "Λ/U {:?}: concentration {:?}; k=0/π cross-correlation {:?}",
            drives,
            conc.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>(),
            cross.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>()
        ),
    )
}

fn hopping_and_nonthermality() -> Outcome {
    let mut invariance = 0.0f64;
    for (det, kappa, g, t) in [(0.2, 0.6, 0.7, 0.3), (-0.5, 0.3, 0.4, 1.1)] {
        let spec = ModelSpec::uniform(2, 1.0, det, kappa, c(g, 0.0));
        let fock = tri!(FockConfig::for_model(&spec, 1e-11));
        let zero = c(0.0, 0.0);
        let generator = ndarray::arr2(&[[zero, c(0.0, t)], [c(0.0, -t), zero]]);
        invariance = invariance.max(tri!(hopping_invariance(&spec, &fock, &generator)));
    }
    let driven = ModelSpec::uniform(1, 1.0, 0.0, 1.0, c(1.0, 0.0));
    let strong = tri!(nonthermality(&driven, &tri!(FockConfig::for_model(&driven, 1e-12))));
    let weak_spec = ModelSpec::uniform(1, 1.0, 0.0, 1e-6, c(1.0, 0.0));
    let weak = tri!(nonthermality(&weak_spec, &tri!(FockConfig::for_model(&weak_spec, 1e-12))));
    outcome(
        invariance < 1e-8 && strong > 1e-6 && weak < 1e-4,
        format!("hopping trace distance {invariance:.2e}; ‖[H,ρ]‖ = {strong:.3e} at G=κ=U, {weak:.3e} at κ=1e-6U"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("oracle equivalence", oracle_equivalence),
        ("form-factor recursions vs enumeration", formfactor_enumeration),
        ("unitary/nonunitary consistency", unitary_consistency),
        ("resonance locations", resonance_locations),
        ("pair coherent state", pcs_property),
        ("critical point", critical_behaviour),
        ("phase-transition emergence", transition_emergence),
        ("correlation-sign diagnostic", correlation_sign),
        ("semiclassics closed forms", semiclassics_closed_forms),
        ("Wigner consistency", wigner_consistency),
        ("symmetry-breaking concentration", symmetry_breaking),
        ("hopping invariance and nonthermality", hopping_and_nonthermality),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != k + 1) {
            continue;
        }
        let t0 = Instant::now();
        let r = run();
        let secs = t0.elapsed().as_secs_f64();
        println!("{} criterion {:>2} ({name}, {secs:.1}s): {}", if r.pass { "PASS" } else { "FAIL" }, k + 1, r.detail);
        failed += (!r.pass) as usize;
    }
    println!("acceptance: {} of {} criteria failed", failed, if only.is_some() { 1 } else { criteria.len() });
    if failed > 0 {
        std::process::exit(1);
    }
}
