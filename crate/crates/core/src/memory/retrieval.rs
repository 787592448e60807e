//! Monte Carlo retrieval: random coherent inputs relax under the Liouvillian
//! and are read out with a lobe measurement.
//!
//! Each trial draws from its own ChaCha8 stream (stream index = trial index,
//! key = experiment seed), so a trial's input does not depend on how many
//! trials run or in which order.

use std::f64::consts::TAU;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{mode_coefficients, state_from_modes, RECONSTRUCTION_TOL};
use crate::error::{Error, Result};
use crate::fockspace::{coherent_ket, poisson_tail, CoherentAmplitude, DensityMatrix, TRUNCATION_TAIL};
use crate::linalg::C64;
use crate::memory::povm::{classify, Povm};
use crate::spectral::SpectralDecomposition;

/// Probabilities outside [−tol, 1 + tol] are reported before clipping.
pub const PROBABILITY_TOL: f64 = 1e-8;
pub const DEFAULT_TRIALS: usize = 400;

#[derive(Clone, Debug)]
pub struct Strategy {
    pub name: String,
    pub povm: Povm,
}

#[derive(Clone, Debug)]
pub struct RetrievalOptions {
    pub trials: usize,
    pub times: Vec<f64>,
    pub seed: u64,
    /// Initial amplitudes are uniform on [0, max_amplitude], phases on [0, 2π).
    pub max_amplitude: f64,
}

#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub trial: usize,
    pub alpha0: C64,
    /// Lobe nearest to the input (0-based).
    pub k_true: usize,
    /// Per strategy, per time: most likely outcome; `None` is the inconclusive element.
    pub k_hat: Vec<Vec<Option<usize>>>,
    /// Per strategy, per time: tr(E_{k_true} ρ(t)), clipped to [0, 1].
    pub p_click: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct RetrievalSummary {
    pub times: Vec<f64>,
    pub strategies: Vec<String>,
    /// P_s(t) per strategy: class means averaged over the lobes that occurred.
    pub success: Vec<Vec<f64>>,
    pub standard_error: Vec<Vec<f64>>,
    /// Largest excursion of a raw probability outside [0, 1].
    pub max_excursion: f64,
}

#[derive(Clone, Debug)]
pub struct RetrievalExperiment {
    pub seed: u64,
    pub records: Vec<TrialRecord>,
    pub summary: RetrievalSummary,
}

/// Input amplitude of a given trial.
pub fn trial_amplitude(seed: u64, trial: usize, max_amplitude: f64) -> C64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let r = max_amplitude * rng.random::<f64>();
    let phi = TAU * rng.random::<f64>();
    C64::from_polar(r, phi)
}

fn argmax_outcome(probs: &[f64], lobes: usize) -> Option<usize> {
    let best = probs
        .iter()
        .enumerate()
        .fold(0, |b, (i, &p)| if p > probs[b] { i } else { b });
    (best < lobes).then_some(best)
}

/// Runs the experiment on the modes of `dec`. `lobes` define the nearest-lobe
/// label of each input; every strategy's POVM must match the decomposition's dimension.
pub fn retrieval_experiment(
    dec: &SpectralDecomposition,
    lobes: &[DensityMatrix],
    strategies: &[Strategy],
    opts: &RetrievalOptions,
) -> Result<RetrievalExperiment> {
    let d = dec.dim();
    if opts.trials == 0 {
        return Err(Error::InvalidParameter("trials must be ≥ 1".into()));
    }
    if !(opts.max_amplitude >= 0.0) {
        return Err(Error::InvalidParameter(format!("max amplitude {}", opts.max_amplitude)));
    }
    for s in strategies {
        if s.povm.dim() != d {
            return Err(Error::DimensionMismatch(s.povm.dim(), d));
        }
        if s.povm.lobes() != lobes.len() {
            return Err(Error::InvalidParameter(format!("strategy {} has {} lobes, expected {}", s.name, s.povm.lobes(), lobes.len())));
        }
    }
    let tail = poisson_tail(opts.max_amplitude.powi(2), d);
    if tail > TRUNCATION_TAIL {
        log::warn!("largest inputs are truncated at D={d}: tail mass up to {tail:.2e}");
    }

    // tr(E R_j) for every element and retained mode.
    let weights: Vec<Vec<Vec<C64>>> = strategies
        .iter()
        .map(|s| {
            s.povm
                .elements()
                .iter()
                .map(|e| (0..dec.retained()).map(|j| dec.trace_with_right(j, e)).collect())
                .collect()
        })
        .collect();
    let eigen: Vec<C64> = dec.modes().iter().map(|m| m.eigenvalue).collect();

    let run = |trial: usize| -> Result<(TrialRecord, f64)> {
        let alpha0 = trial_amplitude(opts.seed, trial, opts.max_amplitude);
        let rho0 = DensityMatrix::from_ket(&coherent_ket(d, CoherentAmplitude::new(alpha0)?)?)?;
        let coeffs = mode_coefficients(dec, &rho0)?;
        if trial == 0 {
            let residual = (&state_from_modes(dec, &coeffs, 0.0) - rho0.operator()).frobenius_norm();
            if residual > RECONSTRUCTION_TOL {
                return Err(Error::IncompleteBasis(residual));
            }
        }
        let k_true = classify(&rho0, lobes)?;
        let mut excursion = 0.0f64;
        let mut k_hat = Vec::with_capacity(strategies.len());
        let mut p_click = Vec::with_capacity(strategies.len());
        for (s, w) in strategies.iter().zip(&weights) {
            let mut hats = Vec::with_capacity(opts.times.len());
            let mut clicks = Vec::with_capacity(opts.times.len());
            for &t in &opts.times {
                let evolved: Vec<C64> = coeffs.iter().map(|&(j, c)| c * (eigen[j] * t).exp()).collect();
                let probs: Vec<f64> = w
                    .iter()
                    .map(|we| coeffs.iter().zip(&evolved).map(|(&(j, _), z)| z * we[j]).sum::<C64>().re)
                    .collect();
                for &p in &probs {
                    excursion = excursion.max(-p).max(p - 1.0);
                }
                hats.push(argmax_outcome(&probs, s.povm.lobes()));
                clicks.push(probs[k_true].clamp(0.0, 1.0));
            }
            k_hat.push(hats);
            p_click.push(clicks);
        }
        Ok((TrialRecord { trial, alpha0, k_true, k_hat, p_click }, excursion))
    };
    let results: Vec<(TrialRecord, f64)> = (0..opts.trials).into_par_iter().map(run).collect::<Result<_>>()?;
    let max_excursion = results.iter().map(|r| r.1).fold(0.0, f64::max);
    if max_excursion > PROBABILITY_TOL {
        log::warn!("raw click probabilities left [0, 1] by {max_excursion:.2e}; clipped");
    }
    let records: Vec<TrialRecord> = results.into_iter().map(|r| r.0).collect();
    let summary = summarize(&records, strategies, &opts.times, lobes.len(), max_excursion);
    Ok(RetrievalExperiment { seed: opts.seed, records, summary })
}

fn summarize(records: &[TrialRecord], strategies: &[Strategy], times: &[f64], n: usize, max_excursion: f64) -> RetrievalSummary {
    let mut success = Vec::with_capacity(strategies.len());
    let mut standard_error = Vec::with_capacity(strategies.len());
    for s in 0..strategies.len() {
        let mut mean_t = Vec::with_capacity(times.len());
        let mut se_t = Vec::with_capacity(times.len());
        for ti in 0..times.len() {
            let (mut sum, mut var, mut classes) = (0.0, 0.0, 0usize);
            for k in 0..n {
                let xs: Vec<f64> = records.iter().filter(|r| r.k_true == k).map(|r| r.p_click[s][ti]).collect();
                if xs.is_empty() {
                    continue;
                }
                let m = xs.iter().sum::<f64>() / xs.len() as f64;
                let v = if xs.len() > 1 {
                    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
                } else {
                    0.0
                };
                sum += m;
                var += v / xs.len() as f64;
                classes += 1;
            }
            mean_t.push(sum / classes as f64);
            se_t.push(var.sqrt() / classes as f64);
        }
        success.push(mean_t);
        standard_error.push(se_t);
    }
    RetrievalSummary {
        times: times.to_vec(),
        strategies: strategies.iter().map(|s| s.name.clone()).collect(),
        success,
        standard_error,
        max_excursion,
    }
}

impl RetrievalExperiment {
    /// Columns: trial, t, strategy, k_true, k_hat, p_click, success. Lobe labels
    /// are 1-based; an inconclusive outcome is written as "?".
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["trial", "t", "strategy", "k_true", "k_hat", "p_click", "success"])?;
        for r in &self.records {
            for (s, name) in self.summary.strategies.iter().enumerate() {
                for (ti, t) in self.summary.times.iter().enumerate() {
                    let hat = r.k_hat[s][ti];
                    w.write_record(&[
                        r.trial.to_string(),
                        t.to_string(),
                        name.clone(),
                        (r.k_true + 1).to_string(),
                        hat.map_or("?".to_string(), |k| (k + 1).to_string()),
                        r.p_click[s][ti].to_string(),
                        u8::from(hat == Some(r.k_true)).to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

impl RetrievalSummary {
    /// Columns: t, then mean and standard error per strategy.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        for s in &self.strategies {
            header.push(format!("{s}_success"));
            header.push(format!("{s}_se"));
        }
        w.write_record(&header)?;
        for (ti, t) in self.times.iter().enumerate() {
            let mut row = vec![t.to_string()];
            for s in 0..self.strategies.len() {
                row.push(self.success[s][ti].to_string());
                row.push(self.standard_error[s][ti].to_string());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn strategy_index(&self, name: &str) -> Option<usize> {
        self.strategies.iter().position(|s| s == name)
    }
}
