//! Wigner quasi-probability distributions on phase-space grids.
//!
//! Convention: α = x + ip, a coherent state |β⟩ has W(α) = (2/π)e^{−2|α−β|²}
//! and ∫W dx dp = tr ρ.

use std::f64::consts::PI;
use std::io::{Read, Write};

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fockspace::FockOperator;
use crate::linalg::C64;

/// Boundary values above this fraction of the peak trigger a coverage warning.
pub const COVERAGE_FRACTION: f64 = 1e-4;
const MAGIC: &[u8; 4] = b"QWIG";

/// Uniform N×N lattice over [x_min, x_max] × [p_min, p_max].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub n: usize,
}

impl PhaseGrid {
    pub fn new(x_min: f64, x_max: f64, p_min: f64, p_max: f64, n: usize) -> Result<Self> {
        let ok = n >= 2 && x_max > x_min && p_max > p_min && [x_min, x_max, p_min, p_max].iter().all(|v| v.is_finite());
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "bad grid [{x_min}, {x_max}] x [{p_min}, {p_max}] with {n} points"
            )));
        }
        Ok(Self { x_min, x_max, p_min, p_max, n })
    }

    pub fn square(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, -half_width, half_width, n)
    }

    /// 201×201 over [−(β+3), β+3]².
    pub fn for_amplitude(beta: f64) -> Self {
        Self::square(beta.abs() + 3.0, 201).expect("positive half-width")
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.n - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.dp()
    }
}

/// Wigner values; `values[[j, i]]` is W at (x_i, p_j).
#[derive(Clone, Debug)]
pub struct WignerField {
    pub grid: PhaseGrid,
    pub values: Array2<f64>,
    /// Largest |Im W| seen; rounding-level for Hermitian input.
    pub imag_residue: f64,
}

/// W(α) for a single operator, complex in general.
///
/// Uses the three-term recursion over the Wigner functions of |m⟩⟨k|,
/// which stays bounded by 2/π and avoids factorial overflow.
pub fn wigner_at(op: &FockOperator, alpha: C64) -> C64 {
    let d = op.dim();
    let rho = op.matrix();
    let two_a = 2.0 * alpha;
    let two_ac = two_a.conj();
    // row[k] holds the function of |m⟩⟨k| for the current m, k ≥ m.
    let mut row = vec![C64::new(0.0, 0.0); d];
    row[0] = C64::new((2.0 / PI) * (-2.0 * alpha.norm_sqr()).exp(), 0.0);
    let mut total = rho[[0, 0]] * row[0];
    for k in 1..d {
        row[k] = two_a * row[k - 1] / (k as f64).sqrt();
        total += rho[[0, k]] * row[k] + rho[[k, 0]] * row[k].conj();
    }
    for m in 1..d {
        let sm = (m as f64).sqrt();
        let new_mm = (two_ac * row[m] - sm * row[m - 1]) / sm;
        let mut left_old = row[m];
        row[m] = new_mm;
        total += rho[[m, m]] * row[m];
        for k in m + 1..d {
            let next = (two_a * row[k - 1] - sm * left_old) / (k as f64).sqrt();
            left_old = row[k];
            row[k] = next;
            total += rho[[m, k]] * row[k] + rho[[k, m]] * row[k].conj();
        }
    }
    total
}

/// Evaluates W on every grid point, rows in parallel.
pub fn wigner(op: &FockOperator, grid: PhaseGrid) -> WignerField {
    let rows: Vec<(Vec<f64>, f64)> = (0..grid.n)
        .into_par_iter()
        .map(|j| {
            let p = grid.p(j);
            let mut resid = 0.0f64;
            let vals = (0..grid.n)
                .map(|i| {
                    let w = wigner_at(op, C64::new(grid.x(i), p));
                    resid = resid.max(w.im.abs());
                    w.re
                })
                .collect();
            (vals, resid)
        })
        .collect();
    let mut values = Array2::zeros((grid.n, grid.n));
    let mut imag_residue = 0.0f64;
    for (j, (vals, r)) in rows.into_iter().enumerate() {
        for (i, v) in vals.into_iter().enumerate() {
            values[[j, i]] = v;
        }
        imag_residue = imag_residue.max(r);
    }
    let field = WignerField { grid, values, imag_residue };
    let (boundary, peak) = (field.boundary_max(), field.peak());
    if peak > 0.0 && boundary > COVERAGE_FRACTION * peak {
        log::warn!("grid may not cover the state: boundary |W| {boundary:.2e} vs peak {peak:.2e}");
    }
    field
}

/// (2/π)e^{−2|α−β|²}, the field of the coherent state |β⟩.
pub fn coherent_pattern(beta: C64, alpha: C64) -> f64 {
    (2.0 / PI) * (-2.0 * (alpha - beta).norm_sqr()).exp()
}

impl WignerField {
    pub fn peak(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn min_negativity(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn boundary_max(&self) -> f64 {
        let n = self.grid.n;
        let mut m = 0.0f64;
        for k in 0..n {
            for v in [self.values[[0, k]], self.values[[n - 1, k]], self.values[[k, 0]], self.values[[k, n - 1]]] {
                m = m.max(v.abs());
            }
        }
        m
    }

    /// Trapezoidal ∫W dx dp.
    pub fn integral(&self) -> f64 {
        let n = self.grid.n;
        let weight = |i: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let mut s = 0.0;
        for ((j, i), v) in self.values.indexed_iter() {
            s += weight(i) * weight(j) * v;
        }
        s * self.grid.dx() * self.grid.dp()
    }

    /// Interior points strictly above their 8 neighbours and above
    /// `rel_threshold` times the peak, as (x, p, W), strongest first.
    pub fn local_maxima(&self, rel_threshold: f64) -> Vec<(f64, f64, f64)> {
        let n = self.grid.n;
        let floor = rel_threshold * self.peak();
        let mut out = Vec::new();
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let v = self.values[[j, i]];
                if v <= floor {
                    continue;
                }
                let is_max = (j - 1..=j + 1)
                    .flat_map(|jj| (i - 1..=i + 1).map(move |ii| (jj, ii)))
                    .filter(|&(jj, ii)| (jj, ii) != (j, i))
                    .all(|(jj, ii)| self.values[[jj, ii]] < v);
                if is_max {
                    out.push((self.grid.x(i), self.grid.p(j), v));
                }
            }
        }
        out.sort_by(|a, b| b.2.total_cmp(&a.2));
        out
    }

    /// Long format: x, p, w.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "p", "w"])?;
        for ((j, i), v) in self.values.indexed_iter() {
            w.write_record(&[self.grid.x(i).to_string(), self.grid.p(j).to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Binary dump: magic "QWIG", x_min, x_max, p_min, p_max (f64), N (u64),
    /// then N² values row by row in p, all little-endian.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        let g = &self.grid;
        out.write_all(MAGIC)?;
        for v in [g.x_min, g.x_max, g.p_min, g.p_max] {
            out.write_all(&v.to_le_bytes())?;
        }
        out.write_all(&(g.n as u64).to_le_bytes())?;
        for v in self.values.iter() {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::InvalidParameter("not a Wigner grid dump".into()));
        }
        let mut buf = [0u8; 8];
        let mut next_f64 = |input: &mut R| -> Result<f64> {
            input.read_exact(&mut buf)?;
            Ok(f64::from_le_bytes(buf))
        };
        let bounds = [next_f64(&mut input)?, next_f64(&mut input)?, next_f64(&mut input)?, next_f64(&mut input)?];
        let mut nbuf = [0u8; 8];
        input.read_exact(&mut nbuf)?;
        let n = u64::from_le_bytes(nbuf) as usize;
        let grid = PhaseGrid::new(bounds[0], bounds[1], bounds[2], bounds[3], n)?;
        let mut values = Array2::zeros((n, n));
        for v in values.iter_mut() {
            *v = next_f64(&mut input)?;
        }
        Ok(Self { grid, values, imag_residue: 0.0 })
    }
}
