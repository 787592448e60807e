//! Mean-field dynamics of the coherent amplitude α = ⟨â⟩ with moments factorized.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use crate::error::{Error, Result};
use crate::lindblad::{lobe_amplitude, ModelParams};
use crate::linalg::{C64, I};
use crate::ode::{self, Tolerances};

/// Residual accepted for a refined fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-9;
pub const MAX_NEWTON_ITERATIONS: usize = 200;
/// Amplitude beyond which an integration is declared divergent.
pub const DIVERGENCE_BOUND: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanFieldState {
    pub alpha: C64,
}

impl MeanFieldState {
    pub fn new(alpha: C64) -> Self {
        Self { alpha }
    }

    pub fn from_polar(r: f64, phi: f64) -> Self {
        Self { alpha: C64::from_polar(r, phi) }
    }

    pub fn r(&self) -> f64 {
        self.alpha.norm()
    }

    /// Phase wrapped to [0, 2π).
    pub fn phi(&self) -> f64 {
        self.alpha.arg().rem_euclid(TAU)
    }
}

fn pow_conj(z: C64, k: i32) -> C64 {
    z.conj().powi(k)
}

/// α̇ = −(γ₁/2 + iΔ)α − nη e^{−inθ} ᾱ^{n−1} − (m/2)γ_m |α|^{2(m−1)} α.
pub fn mf_rhs(state: MeanFieldState, p: &ModelParams) -> C64 {
    let a = state.alpha;
    let (n, m) = (p.n as i32, p.m as i32);
    let drive = n as f64 * p.eta * C64::from_polar(1.0, -(n as f64) * p.theta) * pow_conj(a, n - 1);
    let loss = 0.5 * m as f64 * p.gamma_m * a.norm_sqr().powi(m - 1) * a;
    -(0.5 * p.gamma1 + I * p.delta) * a - drive - loss
}

/// (Ṙ, φ̇) of the polar form. The drive enters through n(φ + θ), matching
/// the complex equation with the e^{−inθ} drive phase.
pub fn polar_rhs(r: f64, phi: f64, p: &ModelParams) -> (f64, f64) {
    let (n, m) = (p.n as i32, p.m as i32);
    let nf = n as f64;
    let arg = nf * (phi + p.theta);
    let r_dot = -0.5 * p.gamma1 * r - 0.5 * m as f64 * p.gamma_m * r.powi(2 * m - 1) - nf * p.eta * r.powi(n - 1) * arg.cos();
    let phi_dot = -p.delta + nf * p.eta * r.powi(n - 2) * arg.sin();
    (r_dot, phi_dot)
}

/// Wirtinger derivatives (∂α̇/∂α, ∂α̇/∂ᾱ).
pub fn wirtinger_jacobian(state: MeanFieldState, p: &ModelParams) -> (C64, C64) {
    let a = state.alpha;
    let (n, m) = (p.n as i32, p.m as i32);
    let (nf, mf) = (n as f64, m as f64);
    let da = -(0.5 * p.gamma1 + I * p.delta) - 0.5 * mf * mf * p.gamma_m * a.norm_sqr().powi(m - 1);
    let mut db = C64::new(0.0, 0.0);
    if n >= 2 {
        db -= nf * p.eta * (nf - 1.0) * C64::from_polar(1.0, -nf * p.theta) * pow_conj(a, n - 2);
    }
    if m >= 2 {
        db -= 0.5 * mf * p.gamma_m * (mf - 1.0) * a.powi(m) * pow_conj(a, m - 2);
    }
    (da, db)
}

/// Real 2×2 Jacobian in (Re α, Im α).
pub fn real_jacobian(state: MeanFieldState, p: &ModelParams) -> [[f64; 2]; 2] {
    let (da, db) = wirtinger_jacobian(state, p);
    let dx = da + db;
    let dy = I * (da - db);
    [[dx.re, dy.re], [dx.im, dy.im]]
}

fn eigenvalues_2x2(j: [[f64; 2]; 2]) -> [C64; 2] {
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = C64::new(tr * tr / 4.0 - det, 0.0).sqrt();
    [tr / 2.0 + disc, tr / 2.0 - disc]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixedPointKind {
    Origin,
    Lobe,
}

#[derive(Clone, Debug)]
pub struct FixedPoint {
    pub state: MeanFieldState,
    pub kind: FixedPointKind,
    pub residual: f64,
    pub jacobian_eigenvalues: [C64; 2],
    pub stable: bool,
    /// Seed amplitude from the large-amplitude balance (0 for the origin).
    pub seed_amplitude: f64,
    /// The seed came from outside the R ≫ 1 regime (R < 2).
    pub outside_large_amplitude: bool,
}

fn classify(state: MeanFieldState, kind: FixedPointKind, seed_amplitude: f64, p: &ModelParams) -> FixedPoint {
    let ev = eigenvalues_2x2(real_jacobian(state, p));
    FixedPoint {
        state,
        kind,
        residual: mf_rhs(state, p).norm(),
        jacobian_eigenvalues: ev,
        stable: ev.iter().all(|z| z.re < 0.0),
        seed_amplitude,
        outside_large_amplitude: seed_amplitude < 2.0,
    }
}

/// Damped Newton on the real 2-variable system.
pub fn refine_fixed_point(seed: MeanFieldState, p: &ModelParams) -> Result<MeanFieldState> {
    let mut s = seed;
    let mut f = mf_rhs(s, p);
    for _ in 0..MAX_NEWTON_ITERATIONS {
        if f.norm() <= 1e-13 {
            return Ok(s);
        }
        let j = real_jacobian(s, p);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dx = -(j[1][1] * f.re - j[0][1] * f.im) / det;
        let dy = -(-j[1][0] * f.re + j[0][0] * f.im) / det;
        let step = C64::new(dx, dy);
        let mut lambda = 1.0;
        loop {
            let trial = MeanFieldState::new(s.alpha + lambda * step);
            let ft = mf_rhs(trial, p);
            if ft.norm() < f.norm() || lambda < 1e-6 {
                s = trial;
                f = ft;
                break;
            }
            lambda *= 0.5;
        }
    }
    if f.norm() <= FIXED_POINT_TOL {
        Ok(s)
    } else {
        Err(Error::NonConvergence {
            iterations: MAX_NEWTON_ITERATIONS,
            seed: format!("R={:.6}, phi={:.6}", seed.r(), seed.phi()),
        })
    }
}

/// Fixed points: the origin (n ≥ 2) and n lobe points seeded at amplitude
/// (2nη/(mγ_m))^{1/(2m−n)} on the odd-multiple phases, each refined on the
/// full equations. No lobe points are returned when the detuning exceeds
/// nηR^{n−2} at the seed amplitude.
pub fn fixed_points(p: &ModelParams) -> Result<Vec<FixedPoint>> {
    p.validate()?;
    let mut out = Vec::new();
    if p.n >= 2 {
        out.push(classify(MeanFieldState::new(C64::new(0.0, 0.0)), FixedPointKind::Origin, 0.0, p));
    }
    if p.eta == 0.0 {
        return Ok(out);
    }
    let r0 = lobe_amplitude(p)?;
    let n = p.n as i32;
    if p.delta.abs() > n as f64 * p.eta * r0.powi(n - 2) {
        return Ok(out);
    }
    if r0 < 2.0 {
        log::warn!("seed amplitude {r0:.3} is outside the large-amplitude regime");
    }
    for j in 0..p.n {
        let phi = -p.theta + PI * (2 * j + 1) as f64 / p.n as f64;
        let s = refine_fixed_point(MeanFieldState::from_polar(r0, phi), p)?;
        out.push(classify(s, FixedPointKind::Lobe, r0, p));
    }
    Ok(out)
}

/// Integrates the mean-field equation, reporting at `times` (from t = 0).
pub fn mf_integrate(state0: MeanFieldState, p: &ModelParams, times: &[f64]) -> Result<Vec<MeanFieldState>> {
    p.validate()?;
    if !state0.alpha.re.is_finite() || !state0.alpha.im.is_finite() {
        return Err(Error::InvalidState("non-finite initial amplitude".into()));
    }
    let tol = Tolerances { rtol: 1e-10, atol: 1e-12, ..Default::default() };
    let mut blown_at: Option<f64> = None;
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let a = C64::new(y[0], y[1]);
        if a.norm() > DIVERGENCE_BOUND || blown_at.is_some() {
            blown_at.get_or_insert(t);
            dy[0] = 0.0;
            dy[1] = 0.0;
            return;
        }
        let d = mf_rhs(MeanFieldState::new(a), p);
        dy[0] = d.re;
        dy[1] = d.im;
    };
    let ys = ode::integrate(rhs, 0.0, &[state0.alpha.re, state0.alpha.im], times, &tol);
    if let Some(t) = blown_at {
        return Err(Error::Divergence(t));
    }
    Ok(ys?.into_iter().map(|y| MeanFieldState::new(C64::new(y[0], y[1]))).collect())
}

/// Columns: kind, re, im, r, phi, stable, eig1_re, eig1_im, eig2_re, eig2_im, residual.
pub fn write_fixed_points_csv<W: Write>(out: W, points: &[FixedPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kind", "re", "im", "r", "phi", "stable", "eig1_re", "eig1_im", "eig2_re", "eig2_im", "residual"])?;
    for fp in points {
        let kind = match fp.kind {
            FixedPointKind::Origin => "origin",
            FixedPointKind::Lobe => "lobe",
        };
        let [e1, e2] = fp.jacobian_eigenvalues;
        w.write_record(&[
            kind.to_string(),
            fp.state.alpha.re.to_string(),
            fp.state.alpha.im.to_string(),
            fp.state.r().to_string(),
            fp.state.phi().to_string(),
            fp.stable.to_string(),
            e1.re.to_string(),
            e1.im.to_string(),
            e2.re.to_string(),
            e2.im.to_string(),
            fp.residual.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns: t, re, im, r, phi.
pub fn write_trajectory_csv<W: Write>(out: W, times: &[f64], states: &[MeanFieldState]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "re", "im", "r", "phi"])?;
    for (t, s) in times.iter().zip(states) {
        w.write_record(&[
            t.to_string(),
            s.alpha.re.to_string(),
            s.alpha.im.to_string(),
            s.r().to_string(),
            s.phi().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
