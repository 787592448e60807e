//! Time evolution of the density matrix, by mode expansion or direct integration.

use std::io::Write;

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fockspace::{annihilation, number_operator, FockOperator};
use crate::lindblad::Liouvillian;
use crate::linalg::C64;
use crate::ode::{self, Tolerances};
use crate::spectral::SpectralDecomposition;

/// Expansion terms with |c_j|·‖R_j‖ below this are dropped.
pub const TERM_CUTOFF: f64 = 1e-12;
/// Maximum Frobenius error of the t = 0 reconstruction.
pub const RECONSTRUCTION_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Option<Vec<FockOperator>>,
    pub expect_a: Vec<C64>,
    pub photon_number: Vec<f64>,
    pub purity: Vec<f64>,
    pub trace: Vec<f64>,
}

impl Trajectory {
    fn from_states(times: &[f64], states: Vec<FockOperator>, keep: bool) -> Result<Self> {
        let dim = states.first().map(|s| s.dim()).unwrap_or(1);
        let a = annihilation(dim)?;
        let num = number_operator(dim)?;
        let mut t = Self {
            times: times.to_vec(),
            states: None,
            expect_a: Vec::with_capacity(states.len()),
            photon_number: Vec::with_capacity(states.len()),
            purity: Vec::with_capacity(states.len()),
            trace: Vec::with_capacity(states.len()),
        };
        for rho in &states {
            t.expect_a.push(a.trace_product(rho));
            t.photon_number.push(num.trace_product(rho).re);
            t.purity.push(rho.inner(rho).re);
            t.trace.push(rho.trace().re);
        }
        if keep {
            t.states = Some(states);
        }
        Ok(t)
    }

    /// Columns: t, re_a, im_a, abs_a, photon_number, purity, trace.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "re_a", "im_a", "abs_a", "photon_number", "purity", "trace"])?;
        for i in 0..self.times.len() {
            let a = self.expect_a[i];
            w.write_record(&[
                self.times[i].to_string(),
                a.re.to_string(),
                a.im.to_string(),
                a.norm().to_string(),
                self.photon_number[i].to_string(),
                self.purity[i].to_string(),
                self.trace[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("empty time grid".into()));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidParameter("times must be finite and nonnegative".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("times must be nondecreasing".into()));
    }
    Ok(())
}

/// `points` times from 0: zero, then geometrically spaced on [start, stop].
pub fn geometric_times(start: f64, stop: f64, points: usize) -> Result<Vec<f64>> {
    if !(start > 0.0 && stop > start && points >= 2) {
        return Err(Error::InvalidParameter(format!("bad geometric grid [{start}, {stop}] with {points} points")));
    }
    let ratio = (stop / start).ln() / (points - 2).max(1) as f64;
    let mut t = vec![0.0];
    t.extend((0..points - 1).map(|i| start * (ratio * i as f64).exp()));
    Ok(t)
}

pub fn linear_times(stop: f64, points: usize) -> Result<Vec<f64>> {
    if !(stop > 0.0 && points >= 2) {
        return Err(Error::InvalidParameter(format!("bad linear grid to {stop} with {points} points")));
    }
    Ok((0..points).map(|i| stop * i as f64 / (points - 1) as f64).collect())
}

/// Expansion coefficients c_j = tr(L_j† ρ0), with the indices worth keeping.
pub fn mode_coefficients(dec: &SpectralDecomposition, rho0: &FockOperator) -> Result<Vec<(usize, C64)>> {
    if rho0.dim() != dec.dim() {
        return Err(Error::DimensionMismatch(rho0.dim(), dec.dim()));
    }
    Ok((0..dec.retained())
        .filter_map(|j| {
            let c = dec.left_overlap(j, rho0);
            (c.norm() * dec.right_norm(j) >= TERM_CUTOFF).then_some((j, c))
        })
        .collect())
}

/// Σ_j c_j e^{λ_j t} R_j.
pub fn state_from_modes(dec: &SpectralDecomposition, coeffs: &[(usize, C64)], t: f64) -> FockOperator {
    let d = dec.dim();
    let mut acc = Array2::<C64>::zeros((d, d));
    for &(j, c) in coeffs {
        let w = c * (dec.modes()[j].eigenvalue * t).exp();
        dec.accumulate_right(j, w, &mut acc);
    }
    FockOperator::from_array(acc).expect("square by construction")
}

/// Evolves by mode expansion. Fails if the retained modes cannot
/// reconstruct `rho0`.
pub fn evolve_spectral(
    dec: &SpectralDecomposition,
    rho0: &FockOperator,
    times: &[f64],
    keep_states: bool,
) -> Result<Trajectory> {
    check_times(times)?;
    let coeffs = mode_coefficients(dec, rho0)?;
    let residual = (&state_from_modes(dec, &coeffs, 0.0) - rho0).frobenius_norm();
    if residual > RECONSTRUCTION_TOL {
        return Err(Error::IncompleteBasis(residual));
    }
    let states: Vec<FockOperator> = times.par_iter().map(|&t| state_from_modes(dec, &coeffs, t)).collect();
    Trajectory::from_states(times, states, keep_states)
}

fn pack(op: &FockOperator, y: &mut [f64]) {
    for (i, z) in op.matrix().iter().enumerate() {
        y[2 * i] = z.re;
        y[2 * i + 1] = z.im;
    }
}

fn unpack(y: &[f64], dim: usize) -> FockOperator {
    let m = Array2::from_shape_fn((dim, dim), |(k, l)| {
        let i = k * dim + l;
        C64::new(y[2 * i], y[2 * i + 1])
    });
    FockOperator::from_array(m).expect("square by construction")
}

/// Evolves by adaptive Runge–Kutta integration of dρ/dt = 𝓛ρ.
pub fn evolve_integrate(
    l: &Liouvillian,
    rho0: &FockOperator,
    times: &[f64],
    tol: &Tolerances,
    keep_states: bool,
) -> Result<Trajectory> {
    check_times(times)?;
    let d = l.dim();
    if rho0.dim() != d {
        return Err(Error::DimensionMismatch(rho0.dim(), d));
    }
    let mut y0 = vec![0.0; 2 * d * d];
    pack(rho0, &mut y0);
    let ys = ode::integrate(|_, y, dy| pack(&l.apply(&unpack(y, d)), dy), 0.0, &y0, times, tol)?;
    let states = ys.iter().map(|y| unpack(y, d)).collect();
    Trajectory::from_states(times, states, keep_states)
}
