//! Storage capacity: patterns stored per effective Fock dimension.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::ln_factorial;

/// Default accuracy threshold for the effective dimension.
pub const DEFAULT_EPSILON: f64 = 1e-9;
/// Critical capacity of a Hebbian network.
pub const HEBBIAN_CAPACITY: f64 = 0.138;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapacityPoint {
    pub n: u32,
    pub beta: f64,
    pub l_max: usize,
    pub fidelity: f64,
    /// n / L_max.
    pub alpha_c: f64,
    /// n(1 − F) / L_max.
    pub alpha_tilde: f64,
}

/// |⟨β_j|β_{j+1}⟩|² = exp(−4β² sin²(π/n)) for neighbouring lobes.
pub fn lobe_fidelity(beta: f64, n: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::UndefinedNeighbour(n));
    }
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("β must be ≥ 0, got {beta}")));
    }
    Ok((-4.0 * beta * beta * (PI / n as f64).sin().powi(2)).exp())
}

fn ln_poisson(mean: f64, l: usize) -> f64 {
    -mean + l as f64 * mean.ln() - ln_factorial(l)
}

/// Fock level whose Poisson(β²) probability is closest to ε, searched from
/// the mode upward. β = 0 gives 1.
pub fn effective_dimension(beta: f64, epsilon: f64) -> Result<usize> {
    if !(beta >= 0.0) || !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("need β ≥ 0 and ε > 0 (β={beta}, ε={epsilon})")));
    }
    if beta == 0.0 {
        return Ok(1);
    }
    let mean = beta * beta;
    let mut l = mean.floor() as usize;
    let mut best = (l, (ln_poisson(mean, l).exp() - epsilon).abs());
    // Past the mode the pmf falls monotonically; stop once it is far below ε.
    loop {
        l += 1;
        let ln_p = ln_poisson(mean, l);
        let gap = (ln_p.exp() - epsilon).abs();
        if gap < best.1 {
            best = (l, gap);
        }
        if ln_p < epsilon.ln() - 2.0 {
            break;
        }
    }
    Ok(best.0.max(1))
}

pub fn capacity_point(n: u32, beta: f64, epsilon: f64) -> Result<CapacityPoint> {
    let fidelity = lobe_fidelity(beta, n)?;
    let l_max = effective_dimension(beta, epsilon)?;
    let alpha_c = n as f64 / l_max as f64;
    Ok(CapacityPoint { n, beta, l_max, fidelity, alpha_c, alpha_tilde: alpha_c * (1.0 - fidelity) })
}

pub fn capacity_curve(n: u32, betas: &[f64], epsilon: f64) -> Result<Vec<CapacityPoint>> {
    if betas.iter().any(|b| !(*b > 0.0)) {
        return Err(Error::InvalidParameter("β grid must be positive".into()));
    }
    betas.iter().map(|&b| capacity_point(n, b, epsilon)).collect()
}

/// Point of largest α̃_c; the first one on ties.
pub fn max_capacity(points: &[CapacityPoint]) -> Option<CapacityPoint> {
    points.iter().copied().fold(None, |best: Option<CapacityPoint>, p| match best {
        Some(b) if b.alpha_tilde >= p.alpha_tilde => Some(b),
        _ => Some(p),
    })
}

/// Columns: n, beta, L_max, F, alpha_c, alpha_tilde.
pub fn write_capacity_csv<W: Write>(out: W, points: &[CapacityPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "beta", "L_max", "F", "alpha_c", "alpha_tilde"])?;
    for p in points {
        w.write_record(&[
            p.n.to_string(),
            p.beta.to_string(),
            p.l_max.to_string(),
            p.fidelity.to_string(),
            p.alpha_c.to_string(),
            p.alpha_tilde.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
