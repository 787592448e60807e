//! The command layer behind the `qamem` binary. Each command reads a
//! [`RunConfig`], writes CSV files into the output directory and returns
//! summary values that end up in the manifest.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Map, Value};

use crate::dynamics::{evolve_integrate, evolve_spectral, Trajectory};
use crate::error::{Error, Result};
use crate::fockspace::{annihilation, coherent_state, lobe_states, CoherentAmplitude, DensityMatrix, FockOperator};
use crate::harness::config::{EvolveMethod, InitialState, RunConfig, StrategyKind, WignerSection, WignerTarget};
use crate::harness::manifest::Manifest;
use crate::harness::sweep::{build_liouvillian, locate_contour, run_sweep};
use crate::lindblad::{lobe_amplitude, ModelParams};
use crate::meanfield::{fixed_points, mf_integrate, write_fixed_points_csv, write_trajectory_csv, FixedPointKind, MeanFieldState};
use crate::memory::capacity::{capacity_curve, max_capacity, write_capacity_csv, HEBBIAN_CAPACITY};
use crate::memory::povm::{ambiguous_povm_numerical, ambiguous_povm_theoretical, unambiguous_povm};
use crate::memory::retrieval::{retrieval_experiment, RetrievalExperiment, RetrievalOptions, Strategy};
use crate::metastable::{build_phases, evolve_in_manifold, MetastableManifold};
use crate::ode::Tolerances;
use crate::phasespace::{wigner, PhaseGrid, WignerField};
use crate::spectral::{decompose, eigenvalues, steady_state, write_spectrum_csv, SpectralDecomposition, Timescales};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    PhaseDiagram,
    Evolve,
    Retrieval,
    Capacity,
    Wigner,
    FixedPoints,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::PhaseDiagram => "phase-diagram",
            Command::Evolve => "evolve",
            Command::Retrieval => "retrieval",
            Command::Capacity => "capacity",
            Command::Wigner => "wigner",
            Command::FixedPoints => "fixed-points",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunContext {
    pub out: PathBuf,
    pub seed: u64,
    pub threads: usize,
    pub config_sha256: String,
}

/// Files and summary values accumulated by a command.
#[derive(Default)]
struct Outputs {
    files: Vec<String>,
    derived: Map<String, Value>,
}

impl Outputs {
    fn create(&mut self, dir: &Path, name: &str) -> Result<BufWriter<File>> {
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(dir.join(name))?))
    }

    fn set(&mut self, key: &str, v: Value) {
        self.derived.insert(key.to_string(), v);
    }
}

/// Finite numbers as JSON numbers, everything else as null.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// Runs a command and writes `manifest.json` into `ctx.out`.
pub fn run_command(cmd: Command, cfg: &RunConfig, ctx: &RunContext) -> Result<Manifest> {
    let start = Instant::now();
    std::fs::create_dir_all(&ctx.out)?;
    let mut out = Outputs::default();
    match cmd {
        Command::Spectrum => cmd_spectrum(cfg, ctx, &mut out)?,
        Command::PhaseDiagram => cmd_phase_diagram(cfg, ctx, &mut out)?,
        Command::Evolve => cmd_evolve(cfg, ctx, &mut out)?,
        Command::Retrieval => cmd_retrieval(cfg, ctx, &mut out)?,
        Command::Capacity => cmd_capacity(cfg, ctx, &mut out)?,
        Command::Wigner => cmd_wigner(cfg, ctx, &mut out)?,
        Command::FixedPoints => cmd_fixed_points(cfg, ctx, &mut out)?,
    }
    let manifest = Manifest {
        command: cmd.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: ctx.config_sha256.clone(),
        seed: ctx.seed,
        threads: ctx.threads,
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: out.files,
        derived: Value::Object(out.derived),
    };
    manifest.write(&ctx.out)?;
    Ok(manifest)
}

/// The configured model, calibrated if requested, with its dimension resolved.
fn model(cfg: &RunConfig, out: &mut Outputs) -> Result<ModelParams> {
    let mut p = cfg.model()?;
    if let Some(cal) = &cfg.calibrate {
        let (v, tau) = locate_contour(&p, cfg.form, cal.param, cal.level, cal.lo, cal.hi)?;
        cal.param.set(&mut p, v);
        log::info!("calibrated {} = {v} (γ₁τ_n = {})", cal.param.name(), tau * p.gamma1);
        out.set("calibrated", json!({ "param": cal.param.name(), "value": v, "level": cal.level, "tau_n": tau }));
    }
    let p = p.with_resolved_dimension()?;
    out.set("model", serde_json::to_value(&p).expect("model serializes"));
    Ok(p)
}

fn timescale_summary(ts: &Timescales, n: usize, out: &mut Outputs) {
    out.set("tau_n", num(ts.tau(n)));
    out.set("tau_next", num(ts.tau(n + 1)));
    out.set("gap_ratio", num(ts.gap_ratio(n)));
}

/// Columns: k, l, re, im.
fn write_operator_csv<W: std::io::Write>(w: W, op: &FockOperator) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["k", "l", "re", "im"])?;
    for ((k, l), z) in op.matrix().indexed_iter() {
        w.write_record(&[k.to_string(), l.to_string(), z.re.to_string(), z.im.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_spectrum(cfg: &RunConfig, ctx: &RunContext, out: &mut Outputs) -> Result<()> {
    let p = model(cfg, out)?;
    let l = build_liouvillian(&p, cfg.form)?;
    let vals = eigenvalues(&l)?;
    write_spectrum_csv(out.create(&ctx.out, "spectrum.csv")?, &vals)?;
    out.set("dim", json!(p.dim));
    let ts = Timescales::from_eigenvalues(&vals);
    if p.n >= 2 && vals.len() > p.n as usize {
        timescale_summary(&ts, p.n as usize, out);
    }
    if cfg.spectrum.steady_state {
        let ss = steady_state(&l)?;
        write_operator_csv(out.create(&ctx.out, "steady_state.csv")?, ss.state.operator())?;
        let num_op = crate::fockspace::number_operator(p.dim)?;
        out.set("steady_state_photon_number", num(num_op.trace_product(ss.state.operator()).re));
        out.set("steady_state_purity", num(ss.state.purity()));
        out.set("steady_state_residual", num(ss.residual));
        out.set("steady_state_clipped_mass", num(ss.clipped_mass));
    }
    Ok(())
}

fn cmd_phase_diagram(cfg: &RunConfig, ctx: &RunContext, out: &mut Outputs) -> Result<()> {
    let spec = cfg.sweep.as_ref().ok_or_else(|| Error::Config("phase-diagram needs a `sweep` section".into()))?;
    let base = cfg.model()?;
    let res = run_sweep(&base, cfg.form, spec, ctx.seed)?;
    res.write_cells_csv(out.create(&ctx.out, "phase_diagram.csv")?, spec)?;
    res.write_contours_csv(out.create(&ctx.out, "contours.csv")?)?;
    let failed = res.cells.iter().filter(|c| c.error.is_some()).count();
    out.set("cells", json!(res.cells.len()));
    out.set("failed_cells", json!(failed));
    out.set("contour_points", json!(res.contours.len()));
    let best = res.cells.iter().filter(|c| c.gap_ratio.is_finite()).max_by(|a, b| a.gap_ratio.total_cmp(&b.gap_ratio));
    if let Some(c) = best {
        out.set("max_gap_ratio", json!({ spec.x.param.name(): c.x, spec.y.param.name(): c.y, "gap_ratio": c.gap_ratio }));
    }
    Ok(())
}

fn initial_state(init: &InitialState, p: &ModelParams) -> Result<DensityMatrix> {
    let amp = match *init {
        InitialState::Vacuum => return DensityMatrix::vacuum(p.dim),
        InitialState::Fock { k } => return DensityMatrix::fock(p.dim, k),
        InitialState::Coherent { re, im } => crate::C64::new(re, im),
        InitialState::LobeScaled { scale, phase } => crate::C64::from_polar(scale * lobe_amplitude(p)?, phase),
    };
    coherent_state(p.dim, CoherentAmplitude::new(amp)?)
}

fn cmd_evolve(cfg: &RunConfig, ctx: &RunContext, out: &mut Outputs) -> Result<()> {
    let sec = cfg.evolve.as_ref().ok_or_else(|| Error::Config("evolve needs an `evolve` section".into()))?;
    let p = model(cfg, out)?;
    let n = p.n as usize;
    let l = build_liouvillian(&p, cfg.form)?;
    let rho0 = initial_state(&sec.initial, &p)?;
    let need_dec = sec.method == EvolveMethod::Spectral || sec.metastable;
    let dec = if need_dec { Some(decompose(&l, None)?) } else { None };
    let ts = match &dec {
        Some(d) => d.timescales(),
        None => Timescales::from_eigenvalues(&eigenvalues(&l)?),
    };
    timescale_summary(&ts, n, out);
    let times = sec.times.resolve(Some(ts.tau(n)))?;
    let traj = match (sec.method, &dec) {
        (EvolveMethod::Spectral, Some(d)) => evolve_spectral(d, rho0.operator(), &times, false)?,
        _ => {
            let tol = Tolerances { rtol: sec.rtol, ..Tolerances::default() };
            evolve_integrate(&l, rho0.operator(), &times, &tol, false)?
        }
    };
    traj.write_csv(out.create(&ctx.out, "trajectory.csv")?)?;
    if let (true, Some(d)) = (sec.metastable, &dec) {
        let man = build_phases(d, n)?;
        let rows = metastable_trajectory(&man, rho0.operator(), &times)?;
        write_metastable_csv(out.create(&ctx.out, "metastable.csv")?, &times, &rows)?;
        out.set("max_relative_deviation_abs_a", num(window_deviation(&traj, &rows, 3.0 * ts.tau(n + 1), ts.tau(n))));
    }
    // The semiclassical path from the same initial amplitude.
    let alpha0 = annihilation(p.dim)?.trace_product(rho0.operator());
    match mf_integrate(MeanFieldState::new(alpha0), &p, &times) {
        Ok(states) => write_trajectory_csv(out.create(&ctx.out, "meanfield.csv")?, &times, &states)?,
        Err(e) => log::warn!("mean-field trajectory skipped: {e}"),
    }
    Ok(())
}

/// Per time: quasiprobabilities and ⟨â⟩ of the manifold state.
fn metastable_trajectory(man: &MetastableManifold, rho0: &FockOperator, times: &[f64]) -> Result<Vec<(Vec<f64>, crate::C64)>> {
    let a = annihilation(rho0.dim())?;
    Ok(evolve_in_manifold(man, rho0, times)?
        .into_iter()
        .map(|ps| {
            let alpha = a.trace_product(&man.combine(&ps));
            (ps, alpha)
        })
        .collect())
}

fn write_metastable_csv<W: std::io::Write>(w: W, times: &[f64], rows: &[(Vec<f64>, crate::C64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    let n = rows.first().map_or(0, |r| r.0.len());
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|l| format!("p_{l}")));
    header.extend(["re_a", "im_a", "abs_a"].map(String::from));
    w.write_record(&header)?;
    for (t, (ps, a)) in times.iter().zip(rows) {
        let mut rec = vec![t.to_string()];
        rec.extend(ps.iter().map(|x| x.to_string()));
        rec.extend([a.re.to_string(), a.im.to_string(), a.norm().to_string()]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Largest relative difference of |⟨â⟩| between the two descriptions on [t0, t1].
fn window_deviation(traj: &Trajectory, rows: &[(Vec<f64>, crate::C64)], t0: f64, t1: f64) -> f64 {
    traj.times
        .iter()
        .zip(&traj.expect_a)
        .zip(rows)
        .filter(|((t, _), _)| **t >= t0 && **t <= t1)
        .map(|((_, full), (_, meta))| (full.norm() - meta.norm()).abs() / full.norm())
        .fold(f64::NAN, f64::max)
}

fn strategies(kinds: &[StrategyKind], dec: &SpectralDecomposition, p: &ModelParams, lobes: &[DensityMatrix]) -> Result<Vec<Strategy>> {
    let mut man = None;
    kinds
        .iter()
        .map(|k| {
            let povm = match k {
                StrategyKind::AmbiguousNumerical => {
                    if man.is_none() {
                        man = Some(build_phases(dec, p.n as usize)?);
                    }
                    ambiguous_povm_numerical(man.as_ref().expect("just built"))?
                }
                StrategyKind::AmbiguousTheoretical => ambiguous_povm_theoretical(p.dim, p.n, p.lobe_offset())?,
                StrategyKind::Unambiguous => unambiguous_povm(lobes)?,
            };
            Ok(Strategy { name: k.name().to_string(), povm })
        })
        .collect()
}

/// Per strategy: success at the first time and the extremes over [t0, t1].
fn retrieval_summary(e: &RetrievalExperiment, t0: f64, t1: f64) -> Value {
    let s = &e.summary;
    let mut m = Map::new();
    for (i, name) in s.strategies.iter().enumerate() {
        let window: Vec<usize> = (0..s.times.len()).filter(|&j| s.times[j] >= t0 && s.times[j] <= t1).collect();
        let min = window.iter().map(|&j| s.success[i][j]).fold(f64::NAN, f64::min);
        let max = window.iter().map(|&j| s.success[i][j]).fold(f64::NAN, f64::max);
        m.insert(
            name.clone(),
            json!({
                "initial": num(s.success[i][0]),
                "window_min": num(min),
                "window_max": num(max),
                "window_points": window.len(),
            }),
        );
    }
    Value::Object(m)
}

fn write_retrieval(out: &mut Outputs, dir: &Path, stem: &str, e: &RetrievalExperiment) -> Result<()> {
    e.write_csv(out.create(dir, &format!("{stem}.csv"))?)?;
    e.summary.write_csv(out.create(dir, &format!("{stem}_summary.csv"))?)?;
    Ok(())
}

fn cmd_retrieval(cfg: &RunConfig, ctx: &RunContext, out: &mut Outputs) -> Result<()> {
    let sec = cfg.retrieval.as_ref().ok_or_else(|| Error::Config("retrieval needs a `retrieval` section".into()))?;
    let p = model(cfg, out)?;
    let n = p.n as usize;
    let l = build_liouvillian(&p, cfg.form)?;
    let dec = decompose(&l, None)?;
    let ts = dec.timescales();
    timescale_summary(&ts, n, out);
    let (t0, t1) = (3.0 * ts.tau(n + 1), ts.tau(n));
    out.set("window", json!([num(t0), num(t1)]));
    let times = sec.times.resolve(Some(ts.tau(n)))?;
    let beta = lobe_amplitude(&p)?;
    out.set("beta", num(beta));
    let lobes = lobe_states(p.dim, beta, p.n, p.lobe_offset())?;
    let strats = strategies(&sec.strategies, &dec, &p, &lobes)?;
    let opts = RetrievalOptions { trials: sec.trials, times, seed: ctx.seed, max_amplitude: sec.amplitude_factor * beta };
    let e = retrieval_experiment(&dec, &lobes, &strats, &opts)?;
    write_retrieval(out, &ctx.out, "retrieval", &e)?;
    out.set("success", retrieval_summary(&e, t0, t1));

    if let Some(dt) = sec.truncated_dim {
        if dt < 2 || dt > p.dim {
            return Err(Error::Config(format!("truncated_dim must lie in [2, {}], got {dt}", p.dim)));
        }
        let pt = ModelParams { dim: dt, ..p.clone() };
        let dec_t = decompose(&build_liouvillian(&pt, cfg.form)?, None)?;
        let lobes_t = lobe_states(dt, beta, p.n, p.lobe_offset())?;
        let strats_t = strats
            .iter()
            .map(|s| Ok(Strategy { name: s.name.clone(), povm: s.povm.truncate(dt)? }))
            .collect::<Result<Vec<_>>>()?;
        let e_t = retrieval_experiment(&dec_t, &lobes_t, &strats_t, &opts)?;
        write_retrieval(out, &ctx.out, "retrieval_truncated", &e_t)?;
        out.set("truncated_dim", json!(dt));
        out.set("success_truncated", retrieval_summary(&e_t, t0, t1));
    }
    Ok(())
}

fn cmd_capacity(cfg: &RunConfig, ctx: &RunContext, out: &mut Outputs) -> Result<()> {
    let sec = cfg.capacity.clone().unwrap_or_default();
    if sec.points < 2 || !(sec.beta_min > 0.0) || !(sec.beta_max > sec.beta_min) {
        return Err(Error::Config("capacity needs points ≥ 2 and 0 < beta_min < beta_max".into()));
    }
    let step = (sec.beta_max - sec.beta_min) / (sec.points - 1) as f64;
    let betas: Vec<f64> = (0..sec.points).map(|i| sec.beta_min + i as f64 * step).collect();
    let mut all = Vec::new();
    let mut maxima = Vec::new();
    for &n in &sec.ns {
        let curve = capacity_curve(n, &betas, sec.epsilon).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(m) = max_capacity(&curve) {
            maxima.push(json!({ "n": n, "beta": m.beta, "alpha_tilde": m.alpha_tilde, "above_hebbian": m.alpha_tilde > HEBBIAN_CAPACITY }));
        }
        all.extend(curve);
    }
    write_capacity_csv(out.create(&ctx.out, "capacity.csv")?, &all)?;
    out.set("maxima", Value::Array(maxima));
    out.set("hebbian_capacity", json!(HEBBIAN_CAPACITY));
    Ok(())
}

fn write_field(out: &mut Outputs, dir: &Path, stem: &str, field: &WignerField, binary: bool) -> Result<Value> {
    field.write_csv(out.create(dir, &format!("{stem}.csv"))?)?;
    if binary {
        field.write_binary(out.create(dir, &format!("{stem}.bin"))?)?;
    }
    Ok(json!({
        "min": num(field.min_negativity()),
        "peak": num(field.peak()),
        "integral": num(field.integral()),
        "boundary_max": num(field.boundary_max()),
    }))
}

fn cmd_wigner(cfg: &RunConfig, ctx: &RunContext, out: &mut Outputs) -> Result<()> {
    let sec = cfg.wigner.clone().unwrap_or_else(WignerSection::default);
    let p = model(cfg, out)?;
    let beta = lobe_amplitude(&p)?;
    let grid = match sec.half_width {
        Some(h) => PhaseGrid::square(h, sec.points),
        None => PhaseGrid::square(beta + 3.0, sec.points),
    }
    .map_err(|e| Error::Config(e.to_string()))?;
    let mut fields = Map::new();
    for target in &sec.targets {
        match target {
            WignerTarget::SteadyState => {
                let gammas = if sec.gamma1_values.is_empty() { vec![p.gamma1] } else { sec.gamma1_values.clone() };
                for g in gammas {
                    let pg = ModelParams { gamma1: g, ..p.clone() };
                    let ss = steady_state(&build_liouvillian(&pg, cfg.form)?)?;
                    let stem = format!("wigner_steady_gamma1_{g}");
                    let v = write_field(out, &ctx.out, &stem, &wigner(ss.state.operator(), grid), sec.binary)?;
                    fields.insert(stem, v);
                }
            }
            WignerTarget::MetastablePhases => {
                let dec = decompose(&build_liouvillian(&p, cfg.form)?, None)?;
                let man = build_phases(&dec, p.n as usize)?;
                for (l, mu) in man.phases().iter().enumerate() {
                    let stem = format!("wigner_phase_{}", l + 1);
                    let v = write_field(out, &ctx.out, &stem, &wigner(mu, grid), sec.binary)?;
                    fields.insert(stem, v);
                }
            }
            WignerTarget::Lobes => {
                for (l, rho) in lobe_states(p.dim, beta, p.n, p.lobe_offset())?.iter().enumerate() {
                    let stem = format!("wigner_lobe_{}", l + 1);
                    let v = write_field(out, &ctx.out, &stem, &wigner(rho.operator(), grid), sec.binary)?;
                    fields.insert(stem, v);
                }
            }
            WignerTarget::AmbiguousPovm => {
                let povm = ambiguous_povm_theoretical(p.dim, p.n, p.lobe_offset())?;
                for (l, e) in povm.elements().iter().enumerate() {
                    let stem = format!("wigner_povm_{}", l + 1);
                    let v = write_field(out, &ctx.out, &stem, &wigner(e, grid), sec.binary)?;
                    fields.insert(stem, v);
                }
            }
        }
    }
    out.set("fields", Value::Object(fields));
    Ok(())
}

fn cmd_fixed_points(cfg: &RunConfig, ctx: &RunContext, out: &mut Outputs) -> Result<()> {
    let p = model(cfg, out)?;
    let points = fixed_points(&p)?;
    write_fixed_points_csv(out.create(&ctx.out, "fixed_points.csv")?, &points)?;
    let lobes: Vec<&_> = points.iter().filter(|f| f.kind == FixedPointKind::Lobe).collect();
    out.set("lobes", json!(lobes.len()));
    out.set("stable_lobes", json!(lobes.iter().filter(|f| f.stable).count()));
    if let Ok(beta) = lobe_amplitude(&p) {
        out.set("large_amplitude_estimate", num(beta));
    }
    if let Some(f) = lobes.first() {
        out.set("lobe_radius", num(f.state.r()));
    }
    Ok(())
}
