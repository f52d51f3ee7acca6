//! Subcommand implementations.

use std::error::Error as StdError;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use kerrlattice::meanfield::{critical_point, cusp_closed_form, fit_gamma, susceptibility_scan};
use kerrlattice::model::{resonance_distance, ModelConfig};
use kerrlattice::moments::{correlators, default_displacements, pcs_residual, CorrelatorOptions, ObservableSet};
use kerrlattice::oracle::{
    self, hopping_invariance, purification_check, steady_state, FockConfig, OracleObservables, SolveMethod,
};
use kerrlattice::semiclassics::{fixed_points, stability_eigenvalues, stable_sphere};
use kerrlattice::wigner::{max_pairing_concentration, PhasePoint, WignerFunction};
use kerrlattice::{Boundary, Complex64, Error, ModelSpec};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::axes::{assign, grid, Axis, Observable};
use crate::output::{self, num};
use crate::Cli;

type CliResult = Result<ExitCode, Box<dyn StdError>>;

/// Exit status when some grid points failed and others succeeded.
const PARTIAL_FAILURE: u8 = 3;

/// Largest Fock dimension for the purification and hopping checks.
const SMALL_CHECK_DIMENSION: usize = 600;

fn load_config(cli: &Cli) -> Result<ModelConfig, Box<dyn StdError>> {
    let path = cli.config.as_ref().ok_or("--config is required")?;
    Ok(ModelConfig::load(path)?)
}

/// Rejects a state sitting on a multiphoton resonance and names a loss rate
/// that moves it off.
fn guard(spec: &ModelSpec) -> Result<(), String> {
    let d = spec.derived();
    if let Some(dist) = resonance_distance(d.reduced_detuning) {
        if dist < 1e-14 {
            let safe = 4.0e-3 * d.kerr_per_mode;
            return Err(format!(
                "{}; nearest safe loss rate kappa = {safe:e} (moves delta 1e-3 off the resonance)",
                Error::Resonant { delta: d.reduced_detuning.to_string(), distance: dist }
            ));
        }
    }
    Ok(())
}

fn budget(cli: &Cli, cutoff: usize) -> Result<(), Error> {
    match cli.max_terms {
        Some(m) if cutoff > m => Err(Error::MaxTermsExceeded { max_terms: m }),
        _ => Ok(()),
    }
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn energy_scale(cli: &Cli, spec: &ModelSpec) -> f64 {
    if cli.si {
        1.0
    } else {
        spec.interaction
    }
}

#[derive(Serialize)]
struct Parameters {
    n: usize,
    dims: Vec<usize>,
    boundary: Boundary,
    units: &'static str,
    big_u: f64,
    delta: f64,
    kappa: f64,
    g: [f64; 2],
    lambda: [f64; 2],
    reduced_detuning: [f64; 2],
}

fn parameters(cli: &Cli, spec: &ModelSpec) -> Parameters {
    let s = energy_scale(cli, spec);
    Parameters {
        n: spec.n_modes,
        dims: spec.dims.clone(),
        boundary: spec.boundary,
        units: if cli.si { "absolute" } else { "U" },
        big_u: spec.interaction,
        delta: spec.detuning / s,
        kappa: spec.loss / s,
        g: pair(spec.onsite_drive / s),
        lambda: pair(spec.bond_drive / s),
        reduced_detuning: pair(spec.derived().reduced_detuning),
    }
}

#[derive(Serialize)]
struct OracleReport {
    dimension: usize,
    total_cutoff: usize,
    truncation_estimate: Option<f64>,
    residual: f64,
    iterative: bool,
    nbar: f64,
    one_particle: Vec<[f64; 2]>,
    pairing: Vec<[f64; 2]>,
    g2: Vec<f64>,
}

#[derive(Serialize)]
struct ObservablesReport {
    schema: &'static str,
    revision: &'static str,
    parameters: Parameters,
    nbar: f64,
    site_density: Vec<f64>,
    displacements: Vec<usize>,
    one_particle: Vec<[f64; 2]>,
    pairing: Vec<[f64; 2]>,
    g2: Option<Vec<f64>>,
    g2_site: Option<Vec<f64>>,
    g2_k: Option<f64>,
    g2_phi: Option<f64>,
    pcs_residual: f64,
    max_pairing_concentration: Option<f64>,
    cutoff: usize,
    log_norm: f64,
    finite_size_caveat: bool,
    oracle: Option<OracleReport>,
}

/// Fock cutoff tolerance; `g2` divides by `n̄²`, so its truncation error does too.
fn oracle_tolerance(nbar: f64) -> f64 {
    (1e-9 * nbar.powi(2).min(1.0)).max(1e-14)
}

type OracleSolution = (FockConfig, oracle::SteadyStateOracle, OracleObservables);

fn solve_oracle(spec: &ModelSpec, exact: &ObservableSet) -> Result<OracleSolution, Error> {
    let fock = FockConfig::for_model(spec, oracle_tolerance(exact.nbar))?;
    let o = steady_state(spec, &fock)?;
    let obs = oracle::observables(spec, &o, &exact.displacements);
    Ok((fock, o, obs))
}

pub fn observables(cli: &Cli, displacements: Option<Vec<usize>>) -> CliResult {
    let cfg = load_config(cli)?;
    let spec = cfg.to_spec()?;
    guard(&spec)?;
    let sp = spec.spectrum()?;
    let opts = CorrelatorOptions { displacements, quartic: true, tol: cli.tol };
    let obs = correlators(&spec, &sp, &opts)?;
    budget(cli, obs.cutoff)?;
    let delta = spec.derived().reduced_detuning;
    let pcs = pcs_residual(&sp, delta, obs.cutoff)?;
    let concentration = if obs.nbar > 0.0 { Some(max_pairing_concentration(&sp, delta)?) } else { None };
    let oracle = if cli.oracle {
        let (fock, o, ob) = solve_oracle(&spec, &obs)?;
        Some(OracleReport {
            dimension: fock.dimension(),
            total_cutoff: fock.total_cutoff,
            truncation_estimate: fock.tail_estimate,
            residual: o.residual,
            iterative: matches!(o.method, SolveMethod::Iterative { .. }),
            nbar: ob.nbar,
            one_particle: ob.one_particle.iter().map(|&z| pair(z)).collect(),
            pairing: ob.pairing.iter().map(|&z| pair(z)).collect(),
            g2: ob.g2,
        })
    } else {
        None
    };
    let report = ObservablesReport {
        schema: output::OBSERVABLES_SCHEMA,
        revision: output::revision(),
        parameters: parameters(cli, &spec),
        nbar: obs.nbar,
        site_density: obs.site_density.clone(),
        displacements: obs.displacements.clone(),
        one_particle: obs.one_particle.iter().map(|&z| pair(z)).collect(),
        pairing: obs.pairing.iter().map(|&z| pair(z)).collect(),
        g2: obs.g2.clone(),
        g2_site: obs.g2_site.clone(),
        g2_k: obs.g2_k,
        g2_phi: obs.g2_phi,
        pcs_residual: pcs,
        max_pairing_concentration: concentration,
        cutoff: obs.cutoff,
        log_norm: obs.log_norm,
        finite_size_caveat: obs.finite_size_caveat,
        oracle,
    };
    print_observables(&report);
    if let Some(path) = &cli.out {
        output::write_json(Some(path), &report)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn print_observables(r: &ObservablesReport) {
    let or = r.oracle.as_ref();
    let line = |key: String, exact: String, oracle: Option<String>| match oracle {
        Some(o) => println!("{key:<24} {exact:>26} {o:>26}"),
        None => println!("{key:<24} {exact}"),
    };
    if or.is_some() {
        line("observable".into(), "exact".into(), Some("oracle".into()));
    }
    line("nbar".into(), format!("{:.12e}", r.nbar), or.map(|o| format!("{:.12e}", o.nbar)));
    let fmt_c = |z: [f64; 2]| format!("{:+.6e}{:+.6e}i", z[0], z[1]);
    for (k, &d) in r.displacements.iter().enumerate() {
        line(format!("one_particle[r={d}]"), fmt_c(r.one_particle[k]), or.map(|o| fmt_c(o.one_particle[k])));
        line(format!("pairing[r={d}]"), fmt_c(r.pairing[k]), or.map(|o| fmt_c(o.pairing[k])));
        if let Some(g) = &r.g2 {
            line(format!("g2[r={d}]"), format!("{:.12e}", g[k]), or.map(|o| format!("{:.12e}", o.g2[k])));
        }
    }
    let opt = |x: Option<f64>| x.map_or("none".to_string(), |v| format!("{v:.12e}"));
    println!("{:<24} {}", "g2_k", opt(r.g2_k));
    println!("{:<24} {}", "g2_phi", opt(r.g2_phi));
    println!("{:<24} {:.6e}", "pcs_residual", r.pcs_residual);
    println!("{:<24} {}", "concentration", opt(r.max_pairing_concentration));
    println!("{:<24} {}", "cutoff", r.cutoff);
    if let Some(o) = or {
        println!("{:<24} {} (T = {}, residual {:.2e})", "oracle_dimension", o.dimension, o.total_cutoff, o.residual);
    }
}

/// `∂n̄/∂Δ` by Richardson-extrapolated central differences.
fn susceptibility(spec: &ModelSpec, tol: f64) -> Result<f64, Error> {
    let density = |d: f64| -> Result<f64, Error> {
        let mut s = spec.clone();
        s.detuning = d;
        let sp = s.spectrum()?;
        let opts = CorrelatorOptions { displacements: Some(vec![0]), quartic: false, tol };
        Ok(correlators(&s, &sp, &opts)?.nbar)
    };
    let h = 1e-4 * spec.interaction;
    let diff = |h: f64| -> Result<f64, Error> { Ok((density(spec.detuning + h)? - density(spec.detuning - h)?) / (2.0 * h)) };
    let (coarse, fine) = (diff(h)?, diff(h / 2.0)?);
    Ok((4.0 * fine - coarse) / 3.0)
}

struct SweepRow {
    values: Vec<f64>,
    cutoff: usize,
    log_norm: f64,
}

fn sweep_point(cli: &Cli, base: &ModelConfig, axes: &[Axis], point: &[f64], observables: &[Observable], r: usize) -> Result<SweepRow, String> {
    let mut cfg = base.clone();
    for (axis, &v) in axes.iter().zip(point) {
        assign(&mut cfg, &axis.name, v, cli.si)?;
    }
    let spec = cfg.to_spec().map_err(|e| e.to_string())?;
    guard(&spec)?;
    let sp = spec.spectrum().map_err(|e| e.to_string())?;
    let far = *default_displacements(&spec).last().unwrap_or(&0);
    let mut disp = vec![r];
    if far != r {
        disp.push(far);
    }
    let quartic = observables.iter().any(|o| o.needs_quartic());
    let opts = CorrelatorOptions { displacements: Some(disp), quartic, tol: cli.tol };
    let obs = correlators(&spec, &sp, &opts).map_err(|e| e.to_string())?;
    budget(cli, obs.cutoff).map_err(|e| e.to_string())?;
    let delta = spec.derived().reduced_detuning;
    let mut values = Vec::new();
    for o in observables {
        match o {
            Observable::Nbar => values.push(obs.nbar),
            Observable::OneParticle => values.extend(pair(obs.one_particle[0])),
            Observable::Pairing => values.extend(pair(obs.pairing[0])),
            Observable::G2Far => values.push(obs.g2_far().unwrap_or(f64::NAN)),
            Observable::G2K => values.push(obs.g2_k.unwrap_or(f64::NAN)),
            Observable::G2Phi => values.push(obs.g2_phi.unwrap_or(f64::NAN)),
            Observable::Chi => values.push(susceptibility(&spec, cli.tol).map_err(|e| e.to_string())?),
            Observable::Concentration => values.push(if obs.nbar > 0.0 {
                max_pairing_concentration(&sp, delta).map_err(|e| e.to_string())?
            } else {
                f64::NAN
            }),
        }
    }
    Ok(SweepRow { values, cutoff: obs.cutoff, log_norm: obs.log_norm })
}

fn sidecar(out: Option<&PathBuf>) -> Option<PathBuf> {
    out.map(|p| {
        let mut s = p.clone().into_os_string();
        s.push(".failures");
        PathBuf::from(s)
    })
}

pub fn sweep(cli: &Cli, axes: &[Axis], observables: &[Observable], r: usize) -> CliResult {
    let base = load_config(cli)?;
    base.to_spec()?;
    let points = grid(axes);
    let results: Vec<Result<SweepRow, String>> =
        points.par_iter().map(|p| sweep_point(cli, &base, axes, p, observables, r)).collect();

    let mut header: Vec<String> = axes.iter().map(|a| a.name.clone()).collect();
    let n_values: usize = observables.iter().map(|o| o.columns(r).len()).sum();
    header.extend(observables.iter().flat_map(|o| o.columns(r)));
    header.extend(["cutoff", "log_norm", "status"].map(String::from));
    let mut rows = Vec::with_capacity(points.len());
    let mut failures = Vec::new();
    for (k, (p, res)) in points.iter().zip(&results).enumerate() {
        let mut row: Vec<String> = p.iter().map(|&v| num(v)).collect();
        match res {
            Ok(sr) => {
                row.extend(sr.values.iter().map(|&v| num(v)));
                row.extend([sr.cutoff.to_string(), num(sr.log_norm), "ok".into()]);
            }
            Err(e) => {
                row.extend(std::iter::repeat_n("NaN".to_string(), n_values + 2));
                row.push("failed".into());
                failures.push(format!("point {k} {p:?}: {e}"));
            }
        }
        rows.push(row);
    }

    let mut w = output::open(cli.out.as_deref())?;
    let meta = vec![
        ("tol".to_string(), format!("{:e}", cli.tol)),
        ("units".to_string(), if cli.si { "absolute".into() } else { "energies in units of U".into() }),
        ("config".to_string(), cli.config.as_ref().map(|p| p.display().to_string()).unwrap_or_default()),
        ("axes".to_string(), axes.iter().map(|a| format!("{}={}:{}:{}{}", a.name, a.start, a.stop, a.count, if a.log { ":log" } else { "" })).collect::<Vec<_>>().join(" ")),
    ];
    output::write_metadata(&mut w, output::SWEEP_SCHEMA, &meta)?;
    output::write_table(&mut w, &header, &rows)?;
    w.flush()?;

    if failures.is_empty() {
        return Ok(ExitCode::SUCCESS);
    }
    match sidecar(cli.out.as_ref()) {
        Some(path) => std::fs::write(&path, failures.join("\n") + "\n")?,
        None => failures.iter().for_each(|f| eprintln!("{f}")),
    }
    log::warn!("{} of {} grid points failed", failures.len(), points.len());
    Ok(if failures.len() == points.len() { ExitCode::FAILURE } else { ExitCode::from(PARTIAL_FAILURE) })
}

pub fn critical(cli: &Cli, sizes: &[usize], kappas: Option<&[f64]>, detunings: &str) -> CliResult {
    let cfg = load_config(cli)?;
    let spec = cfg.to_spec()?;
    if !spec.dims.is_empty() || spec.pairing_override.is_some() {
        return Err("critical scans need the all-to-all model (no dims, no matrix)".into());
    }
    if sizes.is_empty() {
        return Err("need at least one system size".into());
    }
    let (u, g) = (spec.interaction, spec.onsite_drive);
    let scale = energy_scale(cli, &spec);
    let cusp = cusp_closed_form(u, g);
    let bisected = critical_point(u, g)?;
    let kappa_star = cusp.kappa_star;
    let mut ks: Vec<f64> = match kappas {
        Some(k) => k.iter().map(|x| x * scale).collect(),
        None => [0.6, 0.8, 0.9, 1.1, 1.2, 1.4, 1.7, 2.0].iter().map(|m| m * kappa_star).collect(),
    };
    ks.sort_by(f64::total_cmp);
    let axis: Axis = format!("delta={detunings}").parse()?;
    let grid_d: Vec<f64> = axis.values().iter().map(|d| d * scale).collect();

    let mut scans = Vec::with_capacity(ks.len());
    for &k in &ks {
        scans.push(susceptibility_scan(u, g, sizes, k, &grid_d)?);
    }
    // χ_max stops growing with N once the loss exceeds the critical value
    let saturated: Vec<bool> = scans
        .iter()
        .map(|s| {
            let m = &s.maxima;
            m.len() >= 2 && {
                let (a, b) = (m[m.len() - 2].chi.abs(), m[m.len() - 1].chi.abs());
                (b - a).abs() < 0.05 * b
            }
        })
        .collect();
    let kappa_c = saturated.iter().position(|&s| s).filter(|&i| i > 0).map(|i| 0.5 * (ks[i - 1] + ks[i]));
    let above: Vec<usize> = (0..ks.len()).filter(|&i| ks[i] > kappa_star).collect();
    let gamma = if above.len() >= 2 {
        let kk: Vec<f64> = above.iter().map(|&i| ks[i]).collect();
        let chi: Vec<f64> = above.iter().map(|&i| scans[i].maxima.last().unwrap().chi).collect();
        Some(fit_gamma(&kk, &chi, kappa_star)?)
    } else {
        None
    };

    let opt = |x: Option<f64>| x.map_or("none".to_string(), num);
    let summary = vec![
        ("kappa_star_mean_field".to_string(), num(kappa_star / scale)),
        ("kappa_star_bisection".to_string(), num(bisected.kappa_star / scale)),
        ("delta_star_mean_field".to_string(), num(cusp.delta_star / scale)),
        ("kappa_c_exact_estimate".to_string(), opt(kappa_c.map(|k| k / scale))),
        ("gamma".to_string(), opt(gamma)),
    ];
    let mut meta = vec![
        ("tol".to_string(), format!("{:e}", cli.tol)),
        ("units".to_string(), if cli.si { "absolute".into() } else { "energies in units of U".into() }),
    ];
    meta.extend(summary.iter().cloned());
    let header: Vec<String> = ["kappa", "n", "chi_max", "delta_at_max", "saturated"].map(String::from).to_vec();
    let mut rows = Vec::new();
    for (i, s) in scans.iter().enumerate() {
        for (m, &n) in s.maxima.iter().zip(sizes) {
            rows.push(vec![num(ks[i] / scale), n.to_string(), num(m.chi), num(m.detuning / scale), saturated[i].to_string()]);
        }
    }
    let mut w = output::open(cli.out.as_deref())?;
    output::write_metadata(&mut w, output::CRITICAL_SCHEMA, &meta)?;
    output::write_table(&mut w, &header, &rows)?;
    w.flush()?;
    if cli.out.is_some() {
        for (k, v) in &summary {
            println!("{k:<24} {v}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tol: f64,
    /// `true` when the value must stay below `tol`, `false` when above.
    pub upper: bool,
}

impl Check {
    pub fn pass(&self) -> bool {
        if self.upper {
            self.value <= self.tol
        } else {
            self.value > self.tol
        }
    }
}

/// Largest deviations of the oracle's correlators and `g2` from the exact ones.
pub fn compare_moments(exact: &ObservableSet, oracle: &OracleObservables, tol: f64, tol_g2: f64) -> [Check; 2] {
    let mut err = (exact.nbar - oracle.nbar).abs();
    let mut err_g2: f64 = 0.0;
    for k in 0..exact.displacements.len() {
        err = err.max((exact.one_particle[k] - oracle.one_particle[k]).norm());
        err = err.max((exact.pairing[k] - oracle.pairing[k]).norm());
        if let Some(g) = &exact.g2 {
            err_g2 = err_g2.max((g[k] - oracle.g2[k]).abs());
        }
    }
    [
        Check { name: "moments", value: err, tol, upper: true },
        Check { name: "g2", value: err_g2, tol: tol_g2, upper: true },
    ]
}

fn disk(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    let r = radius * rng.random::<f64>().sqrt();
    Complex64::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU))
}

fn draw_checks(spec: &ModelSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Check>, Error> {
    let sp = spec.spectrum()?;
    let exact = correlators(spec, &sp, &CorrelatorOptions::default())?;
    let (fock, o, ob) = solve_oracle(spec, &exact)?;
    let truncation = fock.tail_estimate.unwrap_or(0.0);
    let tol_g2 = if exact.nbar > 0.0 { 1e-7f64.max(truncation / exact.nbar.powi(2)) } else { 1e-7 };
    let mut checks = compare_moments(&exact, &ob, 1e-7f64.max(truncation), tol_g2).to_vec();

    if spec.n_modes == 1 {
        let delta = spec.derived().reduced_detuning;
        let wf = WignerFunction::new(spec, &sp, delta, 1e-14)?;
        let mut worst: f64 = 0.0;
        for k in 0..5 {
            let a = Complex64::from_polar(0.3 * k as f64, 1.1 * k as f64);
            worst = worst.max((wf.wigner(&PhasePoint::new(vec![a]))? - o.wigner_single_mode(a)?).abs());
        }
        checks.push(Check { name: "wigner", value: worst, tol: 1e-6, upper: true });
    }
    let small = fock.dimension() <= SMALL_CHECK_DIMENSION;
    if small && spec.n_modes >= 2 && spec.dims.is_empty() && spec.pairing_override.is_none() {
        // the uniform drive is invariant under real rotations, generated by imaginary antisymmetric hopping
        let n = spec.n_modes;
        let mut h = Array2::<Complex64>::zeros((n, n));
        for i in 0..n {
            for j in i + 1..n {
                let t = rng.random_range(-1.0..1.0) * spec.interaction;
                h[[i, j]] = Complex64::new(0.0, t);
                h[[j, i]] = Complex64::new(0.0, -t);
            }
        }
        checks.push(Check { name: "hopping", value: hopping_invariance(spec, &fock, &h)?, tol: 1e-8, upper: true });
    }
    if small {
        let p = purification_check(&o)?;
        checks.push(Check { name: "purification", value: p.trace_distance, tol: 1e-7, upper: true });
        checks.push(Check { name: "htrs", value: p.htrs_residual, tol: 1e-8, upper: true });
    }
    checks.push(Check { name: "nonthermality", value: o.nonthermality(), tol: 1e-10, upper: false });
    Ok(checks)
}

pub fn oracle_check(cli: &Cli, draws: usize, kappa_min: f64, kappa_max: f64) -> CliResult {
    let cfg = load_config(cli)?;
    let template = cfg.to_spec()?;
    if template.n_modes > 3 {
        return Err(format!("oracle checks need N <= 3, config has N = {}", template.n_modes).into());
    }
    if !(kappa_min > 0.0) {
        return Err(format!(
            "resonance guard: loss rates must be positive (kappa_min = {kappa_min}); at kappa = 0 the steady state is singular on multiphoton resonances"
        )
        .into());
    }
    if kappa_max < kappa_min {
        return Err("kappa_max must not be below kappa_min".into());
    }
    let scale = energy_scale(cli, &template);
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    println!(
        "tolerances: moments max(1e-7, truncation); g2 max(1e-7, truncation/nbar^2); wigner 1e-6; hopping 1e-8; purification 1e-7; htrs 1e-8; nonthermality > 1e-10"
    );
    let mut failed = 0;
    for draw in 0..draws {
        let mut spec = template.clone();
        spec.detuning = rng.random_range(-1.0..1.0) * spec.interaction;
        spec.loss = rng.random_range(kappa_min..=kappa_max) * scale;
        spec.onsite_drive = disk(&mut rng, spec.interaction);
        spec.bond_drive = if spec.dims.is_empty() { Complex64::new(0.0, 0.0) } else { disk(&mut rng, spec.interaction) };
        let checks = draw_checks(&spec, &mut rng);
        let line = match &checks {
            Ok(cs) => cs
                .iter()
                .map(|c| format!("{} {:.2e}{}{:.0e}", c.name, c.value, if c.upper { "<=" } else { ">" }, c.tol))
                .collect::<Vec<_>>()
                .join("  "),
            Err(e) => format!("error: {e}"),
        };
        let pass = checks.as_ref().is_ok_and(|cs| cs.iter().all(Check::pass));
        failed += (!pass) as usize;
        println!(
            "{} draw {draw:>3} (delta {:+.3}, kappa {:.3}, g {:.3}): {line}",
            if pass { "PASS" } else { "FAIL" },
            spec.detuning / scale,
            spec.loss / scale,
            spec.onsite_drive / scale
        );
    }
    println!("oracle-check: {} of {draws} draws passed", draws - failed);
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

#[derive(Serialize)]
struct FixedPointReport {
    beta: Vec<[f64; 2]>,
    lambda_class: f64,
    r_ss: f64,
    theta: f64,
    stable: bool,
    eigenvalues: Vec<[f64; 2]>,
    jacobian_mismatch: Option<f64>,
    zero_modes: Option<usize>,
}

#[derive(Serialize)]
struct SphereReport {
    r_ss: f64,
    theta: f64,
    multiplicity: usize,
}

#[derive(Serialize)]
struct SemiclassicsReport {
    schema: &'static str,
    revision: &'static str,
    parameters: Parameters,
    lambda_star: f64,
    multiplicity: usize,
    sphere: Option<SphereReport>,
    fixed_points: Vec<FixedPointReport>,
}

pub fn semiclassics(cli: &Cli) -> CliResult {
    let cfg = load_config(cli)?;
    let spec = cfg.to_spec()?;
    let sp = spec.spectrum()?;
    let scale = energy_scale(cli, &spec);
    let mut points = Vec::new();
    for fp in fixed_points(&spec, &sp) {
        let report = stability_eigenvalues(&spec, &sp, &fp).ok();
        points.push(FixedPointReport {
            beta: fp.beta.iter().map(|&b| pair(b)).collect(),
            lambda_class: fp.lambda_class,
            r_ss: fp.r_ss,
            theta: fp.theta,
            stable: fp.stable,
            eigenvalues: fp.eigenvalues.iter().map(|&e| pair(e / scale)).collect(),
            jacobian_mismatch: report.as_ref().map(|r| r.mismatch / scale),
            zero_modes: report.as_ref().map(|r| r.zero_modes),
        });
    }
    let doc = SemiclassicsReport {
        schema: output::SEMICLASSICS_SCHEMA,
        revision: output::revision(),
        parameters: parameters(cli, &spec),
        lambda_star: sp.lambda_star,
        multiplicity: sp.multiplicity,
        sphere: stable_sphere(&spec, &sp).map(|s| SphereReport { r_ss: s.r_ss, theta: s.theta, multiplicity: s.multiplicity }),
        fixed_points: points,
    };
    for (k, p) in doc.fixed_points.iter().enumerate() {
        println!(
            "fixed point {k}: lambda {:.6} radius {:.6} theta {:+.6} {} zero modes {}",
            p.lambda_class,
            p.r_ss,
            p.theta,
            if p.stable { "stable" } else { "unstable" },
            p.zero_modes.map_or("-".into(), |z| z.to_string())
        );
    }
    if let Some(path) = &cli.out {
        output::write_json(Some(path), &doc)?;
    }
    Ok(ExitCode::SUCCESS)
}

pub fn wigner_grid(cli: &Cli, radius: f64, points: usize, mode: usize) -> CliResult {
    let cfg = load_config(cli)?;
    let spec = cfg.to_spec()?;
    guard(&spec)?;
    if mode >= spec.n_modes {
        return Err(format!("mode {mode} out of range for N = {}", spec.n_modes).into());
    }
    if points < 2 || !(radius > 0.0) {
        return Err("need at least two points per axis and a positive radius".into());
    }
    let sp = spec.spectrum()?;
    let wf = WignerFunction::new(&spec, &sp, spec.derived().reduced_detuning, cli.tol)?;
    let axis: Vec<f64> = (0..points).map(|i| -radius + 2.0 * radius * i as f64 / (points - 1) as f64).collect();
    let cells: Vec<(f64, f64)> = axis.iter().flat_map(|&x| axis.iter().map(move |&y| (x, y))).collect();
    let rows: Vec<Result<Vec<String>, Error>> = cells
        .par_iter()
        .map(|&(x, y)| {
            let mut alpha = vec![Complex64::new(0.0, 0.0); spec.n_modes];
            alpha[mode] = Complex64::new(x, y);
            let p = PhasePoint::new(alpha);
            Ok(vec![num(x), num(y), num(wf.wigner(&p)?), num(wf.husimi_q(&p)?)])
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut w = output::open(cli.out.as_deref())?;
    let meta = vec![
        ("tol".to_string(), format!("{:e}", cli.tol)),
        ("mode".to_string(), mode.to_string()),
        ("config".to_string(), cli.config.as_ref().map(|p| p.display().to_string()).unwrap_or_default()),
    ];
    output::write_metadata(&mut w, output::WIGNER_SCHEMA, &meta)?;
    output::write_table(&mut w, &["re_alpha", "im_alpha", "wigner", "husimi_q"].map(String::from), &rows)?;
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}
