//! Two-parameter sweeps of the slow timescales and contour location.

use std::io::Write;

use rayon::prelude::*;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::dynamics::geometric_times;
use crate::error::{Error, Result};
use crate::fockspace::lobe_states;
use crate::lindblad::{build_liouvillian_general, build_liouvillian_shifted, lobe_amplitude, Liouvillian, LiouvillianForm, ModelParams};
use crate::memory::capacity::{capacity_point, DEFAULT_EPSILON};
use crate::memory::povm::ambiguous_povm_numerical;
use crate::memory::retrieval::{retrieval_experiment, RetrievalOptions, Strategy};
use crate::metastable::build_phases;
use crate::spectral::{decompose, eigenvalues, Timescales};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    Eta,
    GammaM,
    Gamma1,
    Delta,
    Theta,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::Eta => "eta",
            Param::GammaM => "gamma_m",
            Param::Gamma1 => "gamma1",
            Param::Delta => "delta",
            Param::Theta => "theta",
        }
    }

    pub fn set(self, p: &mut ModelParams, v: f64) {
        match self {
            Param::Eta => p.eta = v,
            Param::GammaM => p.gamma_m = v,
            Param::Gamma1 => p.gamma1 = v,
            Param::Delta => p.delta = v,
            Param::Theta => p.theta = v,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum AxisScale {
    #[default]
    Linear,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: Param,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default)]
    pub scale: AxisScale,
}

impl Axis {
    pub fn values(&self) -> Result<Vec<f64>> {
        let ok = self.points >= 2
            && self.max > self.min
            && self.min.is_finite()
            && self.max.is_finite()
            && (self.scale == AxisScale::Linear || self.min > 0.0);
        if !ok {
            return Err(Error::Config(format!(
                "axis {}: need points ≥ 2 and min < max (log axes positive), got [{}, {}] × {}",
                self.param.name(),
                self.min,
                self.max,
                self.points
            )));
        }
        let k = (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| {
                let f = i as f64 / k;
                match self.scale {
                    AxisScale::Linear => self.min + f * (self.max - self.min),
                    AxisScale::Log => (self.min.ln() + f * (self.max / self.min).ln()).exp(),
                }
            })
            .collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Derived {
    GapRatio,
    TauN,
    /// α̃_c at the cell's lobe amplitude.
    Capacity,
    /// Minimum ambiguous success probability over [3τ_{n+1}, τ_n].
    PlateauPs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub x: Axis,
    pub y: Axis,
    #[serde(default = "default_quantities")]
    pub quantities: Vec<Derived>,
    /// Levels of γ₁τ_n traced as contours.
    #[serde(default = "default_levels")]
    pub contour_levels: Vec<f64>,
    /// Refine grid crossings by bisection on the spectrum along x.
    #[serde(default = "default_refine")]
    pub refine_contours: bool,
    #[serde(default = "default_plateau_trials")]
    pub plateau_trials: usize,
    /// Worker threads when not given on the command line.
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_quantities() -> Vec<Derived> {
    vec![Derived::GapRatio, Derived::TauN]
}

fn default_levels() -> Vec<f64> {
    vec![2.0, 10.0, 100.0]
}

fn default_refine() -> bool {
    true
}

fn default_plateau_trials() -> usize {
    50
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub ix: usize,
    pub iy: usize,
    pub x: f64,
    pub y: f64,
    pub dim: usize,
    pub tau_n: f64,
    pub tau_next: f64,
    pub gap_ratio: f64,
    pub capacity: Option<f64>,
    pub plateau: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContourPoint {
    pub level: f64,
    pub x_param: &'static str,
    pub x: f64,
    pub y_param: &'static str,
    pub y: f64,
    pub tau_n: f64,
    pub refined: bool,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub cells: Vec<SweepCell>,
    pub contours: Vec<ContourPoint>,
}

pub fn build_liouvillian(params: &ModelParams, form: LiouvillianForm) -> Result<Liouvillian> {
    match form {
        LiouvillianForm::General => build_liouvillian_general(params),
        LiouvillianForm::Shifted => build_liouvillian_shifted(params),
    }
}

/// Timescales of a parameter point (dimension resolved if left at 0).
pub fn point_timescales(params: &ModelParams, form: LiouvillianForm) -> Result<(ModelParams, Timescales)> {
    let p = params.clone().with_resolved_dimension()?;
    let l = build_liouvillian(&p, form)?;
    Ok((p, Timescales::from_eigenvalues(&eigenvalues(&l)?)))
}

fn plateau_success(p: &ModelParams, form: LiouvillianForm, trials: usize, seed: u64) -> Result<f64> {
    let n = p.n as usize;
    let l = build_liouvillian(p, form)?;
    let dec = decompose(&l, None)?;
    let man = build_phases(&dec, n)?;
    let ts = dec.timescales();
    let times = geometric_times(3.0 * ts.tau(n + 1), ts.tau(n), 6)?;
    let times = times[1..].to_vec();
    let beta = lobe_amplitude(p)?;
    let lobes = lobe_states(p.dim, beta, p.n, p.lobe_offset())?;
    let strategies = vec![Strategy { name: "ambiguous".into(), povm: ambiguous_povm_numerical(&man)? }];
    let opts = RetrievalOptions { trials, times, seed, max_amplitude: 2.0 * beta };
    let e = retrieval_experiment(&dec, &lobes, &strategies, &opts)?;
    Ok(e.summary.success[0].iter().copied().fold(f64::INFINITY, f64::min))
}

fn evaluate_cell(base: &ModelParams, form: LiouvillianForm, spec: &SweepSpec, seed: u64, ix: usize, iy: usize, x: f64, y: f64) -> SweepCell {
    let mut p = base.clone();
    spec.x.param.set(&mut p, x);
    spec.y.param.set(&mut p, y);
    let n = p.n as usize;
    let mut cell = SweepCell {
        ix,
        iy,
        x,
        y,
        dim: p.dim,
        tau_n: f64::NAN,
        tau_next: f64::NAN,
        gap_ratio: f64::NAN,
        capacity: None,
        plateau: None,
        error: None,
    };
    let result = (|| -> Result<()> {
        let (p, ts) = point_timescales(&p, form)?;
        cell.dim = p.dim;
        cell.tau_n = ts.tau(n);
        cell.tau_next = ts.tau(n + 1);
        cell.gap_ratio = ts.gap_ratio(n);
        if spec.quantities.contains(&Derived::Capacity) {
            cell.capacity = Some(capacity_point(p.n, lobe_amplitude(&p)?, DEFAULT_EPSILON)?.alpha_tilde);
        }
        if spec.quantities.contains(&Derived::PlateauPs) {
            cell.plateau = Some(plateau_success(&p, form, spec.plateau_trials, seed)?);
        }
        Ok(())
    })();
    if let Err(e) = result {
        log::warn!("cell ({}={x}, {}={y}) failed: {e}", spec.x.param.name(), spec.y.param.name());
        cell.error = Some(e.to_string());
    }
    cell
}

/// Residual |ln(γ₁τ_n / level)| at which a contour point is accepted.
pub const CONTOUR_TOL: f64 = 1e-5;

/// Parameter value along `param` in [lo, hi] where γ₁τ_n equals `level`,
/// by Illinois false position on ln(γ₁τ_n / level). Returns the value and τ_n
/// there. The level must be bracketed.
pub fn locate_contour(base: &ModelParams, form: LiouvillianForm, param: Param, level: f64, lo: f64, hi: f64) -> Result<(f64, f64)> {
    if !(level > 0.0) || !(hi > lo) {
        return Err(Error::Config(format!("contour search needs level > 0 and lo < hi (level {level}, [{lo}, {hi}])")));
    }
    let n = base.n as usize;
    let f = |v: f64| -> Result<(f64, f64)> {
        let mut p = base.clone();
        param.set(&mut p, v);
        let (p, ts) = point_timescales(&p, form)?;
        Ok(((ts.tau(n) * p.gamma1 / level).ln(), ts.tau(n)))
    };
    let (mut a, mut b) = (lo, hi);
    let (mut fa, ta) = f(a)?;
    let (mut fb, tb) = f(b)?;
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(Error::Solver(format!("level {level} not bracketed on [{lo}, {hi}] along {}", param.name())));
    }
    let mut best = if fa.abs() < fb.abs() { (a, ta, fa.abs()) } else { (b, tb, fb.abs()) };
    let mut side = 0i8;
    for _ in 0..100 {
        if best.2 < CONTOUR_TOL {
            break;
        }
        let c = (a * fb - b * fa) / (fb - fa);
        let (fc, tc) = f(c)?;
        if fc.abs() < best.2 {
            best = (c, tc, fc.abs());
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() < 1e-12 * a.abs().max(1.0) {
            break;
        }
    }
    if best.2 > 1e-3 {
        return Err(Error::NonConvergence { iterations: 100, seed: format!("{} level {level}", param.name()) });
    }
    Ok((best.0, best.1))
}

fn grid_contours(base: &ModelParams, form: LiouvillianForm, spec: &SweepSpec, xs: &[f64], ys: &[f64], cells: &[SweepCell]) -> Vec<ContourPoint> {
    let nx = xs.len();
    let mut jobs = Vec::new();
    for &level in &spec.contour_levels {
        for (iy, &y) in ys.iter().enumerate() {
            for ix in 0..nx - 1 {
                let (c0, c1) = (&cells[iy * nx + ix], &cells[iy * nx + ix + 1]);
                let g0 = c0.tau_n * base.gamma1;
                let g1 = c1.tau_n * base.gamma1;
                if !(g0.is_finite() && g1.is_finite()) {
                    continue;
                }
                if (g0 - level).signum() != (g1 - level).signum() {
                    jobs.push((level, iy, y, ix, g0, g1));
                }
            }
        }
    }
    jobs.into_par_iter()
        .map(|(level, _iy, y, ix, g0, g1)| {
            let (x0, x1) = (xs[ix], xs[ix + 1]);
            // Interpolate in log τ as the fallback estimate.
            let f = ((level.ln() - g0.ln()) / (g1.ln() - g0.ln())).clamp(0.0, 1.0);
            let mut point = ContourPoint {
                level,
                x_param: spec.x.param.name(),
                x: x0 + f * (x1 - x0),
                y_param: spec.y.param.name(),
                y,
                tau_n: level / base.gamma1,
                refined: false,
            };
            if spec.refine_contours {
                let mut p = base.clone();
                spec.y.param.set(&mut p, y);
                match locate_contour(&p, form, spec.x.param, level, x0, x1) {
                    Ok((x, tau)) => {
                        point.x = x;
                        point.tau_n = tau;
                        point.refined = true;
                    }
                    Err(e) => log::warn!("contour refinement failed at {}={y}: {e}", spec.y.param.name()),
                }
            }
            point
        })
        .collect()
}

/// Evaluates every cell in parallel; results are in row-major (y, x) order
/// and do not depend on the number of threads.
pub fn run_sweep(base: &ModelParams, form: LiouvillianForm, spec: &SweepSpec, seed: u64) -> Result<SweepResult> {
    if spec.x.param == spec.y.param {
        return Err(Error::Config("sweep axes must vary different parameters".into()));
    }
    let xs = spec.x.values()?;
    let ys = spec.y.values()?;
    let jobs: Vec<(usize, usize)> = (0..ys.len()).flat_map(|iy| (0..xs.len()).map(move |ix| (ix, iy))).collect();
    let cells: Vec<SweepCell> = jobs
        .into_par_iter()
        .map(|(ix, iy)| evaluate_cell(base, form, spec, seed, ix, iy, xs[ix], ys[iy]))
        .collect();
    let contours = grid_contours(base, form, spec, &xs, &ys, &cells);
    Ok(SweepResult { xs, ys, cells, contours })
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

impl SweepResult {
    /// Columns: ix, iy, <x param>, <y param>, dim, tau_n, tau_next, gap_ratio, capacity, plateau_ps, error.
    pub fn write_cells_csv<W: Write>(&self, out: W, spec: &SweepSpec) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "ix",
            "iy",
            spec.x.param.name(),
            spec.y.param.name(),
            "dim",
            "tau_n",
            "tau_next",
            "gap_ratio",
            "capacity",
            "plateau_ps",
            "error",
        ])?;
        for c in &self.cells {
            w.write_record(&[
                c.ix.to_string(),
                c.iy.to_string(),
                c.x.to_string(),
                c.y.to_string(),
                c.dim.to_string(),
                c.tau_n.to_string(),
                c.tau_next.to_string(),
                c.gap_ratio.to_string(),
                opt(c.capacity),
                opt(c.plateau),
                c.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Columns: level, x_param, x, y_param, y, tau_n, refined.
    pub fn write_contours_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for c in &self.contours {
            w.serialize(c)?;
        }
        if self.contours.is_empty() {
            w.write_record(["level", "x_param", "x", "y_param", "y", "tau_n", "refined"])?;
        }
        w.flush()?;
        Ok(())
    }
}
