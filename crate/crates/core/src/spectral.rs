//! Eigendecomposition of the Liouvillian, steady state and decay timescales.
//!
//! The superoperator is diagonalized sector by sector. Sector q and its
//! partner −q are adjoints of each other: if (λ, R, L) is a mode in q then
//! (λ*, R†, L†) is a mode in −q, so only q ≤ −q is diagonalized. In a
//! self-adjoint sector conjugate pairs are regenerated from their Im > 0
//! member and real eigenspaces are rotated onto Hermitian bases.
//!
//! Modes are kept raw (exact eigenmatrices, needed for propagation);
//! [`SpectralDecomposition::hermitized`] gives the Hermitian combinations of
//! conjugate pairs used to build metastable phases.

use std::cmp::Ordering;
use std::io::Write;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::fockspace::{DensityMatrix, FockOperator};
use crate::lindblad::{Liouvillian, ModelParams, SectorLayout};
use crate::linalg::{self, c, C64, I};

/// Eigenvalues closer than this to zero count as steady-state modes.
pub const ZERO_TOL: f64 = 1e-8;
/// Largest clipped negative mass tolerated when making ρ_ss physical.
pub const CLIP_BUDGET: f64 = 1e-6;

fn imag_tol(z: C64) -> f64 {
    1e-8 * z.norm().max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeRole {
    /// Real eigenvalue, Hermitian right and left modes.
    Single,
    /// First member of a conjugate pair (Im λ ≥ 0); the next mode is its adjoint.
    PairFirst,
    PairSecond,
}

#[derive(Clone, Debug)]
pub struct Mode {
    pub eigenvalue: C64,
    pub sector: usize,
    pub role: ModeRole,
    right: Vec<C64>,
    left: Vec<C64>,
}

/// A conjugate-pair-combined mode with Hermitian right and left matrices.
#[derive(Clone, Debug)]
pub struct HermitianMode {
    pub eigenvalue: C64,
    pub right: FockOperator,
    pub left: FockOperator,
}

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    params: ModelParams,
    layout: SectorLayout,
    eigenvalues: Vec<C64>,
    modes: Vec<Mode>,
    steady_state: DensityMatrix,
    steady_clipped: f64,
    zero_multiplicity: usize,
}

enum Unit {
    Single(Mode),
    Pair(Mode, Mode),
}

impl Unit {
    fn key(&self) -> C64 {
        match self {
            Unit::Single(m) | Unit::Pair(m, _) => m.eigenvalue,
        }
    }
}

fn cmp_eigen(a: C64, b: C64) -> Ordering {
    b.re.total_cmp(&a.re)
        .then(a.im.abs().total_cmp(&b.im.abs()))
        .then(b.im.total_cmp(&a.im))
}

/// Sorts eigenvalues by decreasing real part, then |Im| ascending, +Im first.
pub fn sort_eigenvalues(values: &mut [C64]) {
    values.sort_by(|a, b| cmp_eigen(*a, *b));
}

fn coeff_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot_conj(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn normalized(mut right: Vec<C64>, mut left: Vec<C64>) -> (Vec<C64>, Vec<C64>) {
    let s = coeff_norm(&right);
    right.iter_mut().for_each(|z| *z /= s);
    left.iter_mut().for_each(|z| *z *= s);
    (right, left)
}

struct RawSector {
    values: Array1<C64>,
    right: Array2<C64>,
    left: Array2<C64>,
}

fn diagonalize_sector(l: &Liouvillian, layout: &SectorLayout, q: usize) -> Result<RawSector> {
    let block = l.sector_block(layout, q);
    let (values, right) = linalg::eig(&block)?;
    let inv = linalg::inverse(&right)?;
    // Row j of V⁻¹ is the dual of column j: vec(L_j) = conj(row).
    let left = inv.mapv(|z| z.conj());
    Ok(RawSector { values, right, left })
}

/// Rotates a real-eigenvalue cluster of a self-adjoint sector onto Hermitian
/// right modes with matching Hermitian duals.
fn hermitian_cluster(layout: &SectorLayout, q: usize, members: &[(C64, Vec<C64>, Vec<C64>)]) -> Result<Vec<Mode>> {
    let size = members.len();
    let mut candidates: Vec<Vec<C64>> = Vec::with_capacity(2 * size);
    for (_, r, _) in members {
        let adj = layout.adjoint_coeffs(r, q);
        candidates.push(r.iter().zip(&adj).map(|(a, b)| (a + b) * 0.5).collect());
        candidates.push(r.iter().zip(&adj).map(|(a, b)| (a - b) * (-0.5 * I)).collect());
    }
    // Gram–Schmidt with pivoting under the real inner product keeps the
    // basis Hermitian.
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(size);
    for _ in 0..size {
        let (best, norm) = candidates
            .iter()
            .enumerate()
            .map(|(i, v)| (i, coeff_norm(v)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| Error::Solver("empty eigenspace".into()))?;
        if norm < 1e-10 {
            return Err(Error::Solver("could not find a Hermitian basis for a real eigenspace".into()));
        }
        let v: Vec<C64> = candidates[best].iter().map(|z| z / norm).collect();
        for cand in candidates.iter_mut() {
            let proj = dot_conj(&v, cand).re;
            cand.iter_mut().zip(&v).for_each(|(x, y)| *x -= y * proj);
        }
        basis.push(v);
    }
    let t = Array2::from_shape_fn((size, size), |(i, a)| dot_conj(&members[i].2, &basis[a]));
    let t_inv = linalg::inverse(&t)?;
    let lambda = members.iter().map(|m| m.0.re).sum::<f64>() / size as f64;
    let mut out = Vec::with_capacity(size);
    for (a, right) in basis.into_iter().enumerate() {
        let mut left = vec![C64::new(0.0, 0.0); right.len()];
        for (i, (_, _, li)) in members.iter().enumerate() {
            let w = t_inv[[a, i]].conj();
            left.iter_mut().zip(li).for_each(|(x, y)| *x += y * w);
        }
        let adj = layout.adjoint_coeffs(&left, q);
        let left: Vec<C64> = left.iter().zip(&adj).map(|(x, y)| (x + y) * 0.5).collect();
        let (right, left) = normalized(right, left);
        out.push(Mode { eigenvalue: c(lambda), sector: q, role: ModeRole::Single, right, left });
    }
    Ok(out)
}

fn sector_units(raw: RawSector, layout: &SectorLayout, q: usize) -> Result<Vec<Unit>> {
    let p = layout.partner(q);
    let count = raw.values.len();
    let take = |j: usize| -> (Vec<C64>, Vec<C64>) {
        normalized(raw.right.column(j).to_vec(), raw.left.row(j).to_vec())
    };
    let mut units = Vec::with_capacity(count);
    if p != q {
        for j in 0..count {
            let (r, l) = take(j);
            let lambda = raw.values[j];
            let adjoint = (lambda.conj(), p, layout.adjoint_coeffs(&r, q), layout.adjoint_coeffs(&l, q));
            let direct = (lambda, q, r, l);
            let (first, second) = if lambda.im >= 0.0 { (direct, adjoint) } else { (adjoint, direct) };
            units.push(Unit::Pair(
                Mode { eigenvalue: first.0, sector: first.1, role: ModeRole::PairFirst, right: first.2, left: first.3 },
                Mode { eigenvalue: second.0, sector: second.1, role: ModeRole::PairSecond, right: second.2, left: second.3 },
            ));
        }
        return Ok(units);
    }

    let mut reals: Vec<(C64, Vec<C64>, Vec<C64>)> = Vec::new();
    let (mut upper, mut lower) = (0usize, 0usize);
    for j in 0..count {
        let lambda = raw.values[j];
        let tol = imag_tol(lambda);
        if lambda.im > tol {
            upper += 1;
            let (r, l) = take(j);
            let rd = layout.adjoint_coeffs(&r, q);
            let ld = layout.adjoint_coeffs(&l, q);
            units.push(Unit::Pair(
                Mode { eigenvalue: lambda, sector: q, role: ModeRole::PairFirst, right: r, left: l },
                Mode { eigenvalue: lambda.conj(), sector: q, role: ModeRole::PairSecond, right: rd, left: ld },
            ));
        } else if lambda.im < -tol {
            lower += 1;
        } else {
            let (r, l) = take(j);
            reals.push((c(lambda.re), r, l));
        }
    }
    if upper != lower {
        return Err(Error::Solver(format!("sector {q}: {upper} eigenvalues above the real axis but {lower} below")));
    }
    reals.sort_by(|a, b| b.0.re.total_cmp(&a.0.re));
    let mut start = 0;
    while start < reals.len() {
        let mut end = start + 1;
        while end < reals.len() && (reals[end - 1].0.re - reals[end].0.re).abs() <= imag_tol(reals[end].0) {
            end += 1;
        }
        for m in hermitian_cluster(layout, q, &reals[start..end])? {
            units.push(Unit::Single(m));
        }
        start = end;
    }
    Ok(units)
}

/// Decomposes the Liouvillian and keeps the `keep` slowest modes (all if None).
/// A conjugate pair is never split: the cut moves past its second member.
pub fn decompose(l: &Liouvillian, keep: Option<usize>) -> Result<SpectralDecomposition> {
    let layout = l.layout();
    let d2 = l.dim() * l.dim();
    let keep = keep.unwrap_or(d2);
    if keep > d2 {
        return Err(Error::InvalidParameter(format!("cannot retain {keep} of {d2} modes")));
    }
    let mut units = Vec::with_capacity(d2);
    for q in layout.canonical_sectors().collect::<Vec<_>>() {
        let raw = diagonalize_sector(l, &layout, q)?;
        units.extend(sector_units(raw, &layout, q)?);
    }
    units.sort_by(|a, b| cmp_eigen(a.key(), b.key()));

    let mut eigenvalues = Vec::with_capacity(d2);
    let mut modes = Vec::with_capacity(keep.min(d2));
    for u in units {
        match u {
            Unit::Single(m) => {
                eigenvalues.push(m.eigenvalue);
                if modes.len() < keep {
                    modes.push(m);
                }
            }
            Unit::Pair(a, b) => {
                eigenvalues.push(a.eigenvalue);
                eigenvalues.push(b.eigenvalue);
                if modes.len() < keep {
                    modes.push(a);
                    modes.push(b);
                }
            }
        }
    }
    if eigenvalues.len() != d2 {
        return Err(Error::Solver(format!("recovered {} of {d2} eigenvalues", eigenvalues.len())));
    }
    let scale = eigenvalues.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    if eigenvalues[0].norm() > ZERO_TOL * scale.max(1.0) {
        return Err(Error::Solver(format!("no zero mode: slowest eigenvalue {}", eigenvalues[0])));
    }
    let zero_multiplicity = eigenvalues.iter().filter(|z| z.norm() <= ZERO_TOL).count().max(1);
    if zero_multiplicity > 1 && l.params().gamma1 > 0.0 {
        log::warn!("{zero_multiplicity} eigenvalues within {ZERO_TOL:e} of zero with γ₁ > 0");
    }
    if modes.len() < zero_multiplicity {
        return Err(Error::InvalidParameter(format!("retain at least the {zero_multiplicity} zero modes")));
    }
    let (steady_state, steady_clipped) = steady_from_modes(l.dim(), &layout, &modes[..zero_multiplicity])?;
    Ok(SpectralDecomposition {
        params: l.params().clone(),
        layout,
        eigenvalues,
        modes,
        steady_state,
        steady_clipped,
        zero_multiplicity,
    })
}

/// Unique zero mode made physical, or, for a degenerate kernel, the state the
/// vacuum relaxes to: Σ_zero tr(L_j†|0⟩⟨0|) R_j.
fn steady_from_modes(dim: usize, layout: &SectorLayout, zero: &[Mode]) -> Result<(DensityMatrix, f64)> {
    let candidate = if zero.len() == 1 {
        layout.scatter(&zero[0].right, zero[0].sector)
    } else {
        let vac = DensityMatrix::vacuum(dim)?;
        let mut acc = FockOperator::zeros(dim)?;
        for m in zero {
            let w = left_overlap(layout, m, &vac);
            acc.add_scaled(w, &layout.scatter(&m.right, m.sector));
        }
        acc
    };
    let (rho, clipped) = DensityMatrix::project_physical(&candidate)?;
    if clipped > CLIP_BUDGET {
        return Err(Error::Solver(format!("steady state needs {clipped:.2e} clipped mass")));
    }
    Ok((rho, clipped))
}

fn left_overlap(layout: &SectorLayout, m: &Mode, rho: &FockOperator) -> C64 {
    layout.members(m.sector).iter().zip(&m.left).map(|(&(k, l), z)| z.conj() * rho.get(k, l)).sum()
}

/// Steady state with its clipped mass and generator residual ‖𝓛ρ‖.
#[derive(Clone, Debug)]
pub struct SteadyState {
    pub state: DensityMatrix,
    pub clipped_mass: f64,
    pub residual: f64,
}

/// Steady state from the zero-difference sector alone.
///
/// For γ₁ = 0 a degenerate kernel is resolved by relaxing the vacuum; for
/// γ₁ > 0 degeneracy is an error.
pub fn steady_state(l: &Liouvillian) -> Result<SteadyState> {
    let layout = l.layout();
    let raw = diagonalize_sector(l, &layout, 0)?;
    let mut units = sector_units(raw, &layout, 0)?;
    units.sort_by(|a, b| cmp_eigen(a.key(), b.key()));
    let zero: Vec<Mode> = units
        .into_iter()
        .filter_map(|u| match u {
            Unit::Single(m) if m.eigenvalue.norm() <= ZERO_TOL => Some(m),
            _ => None,
        })
        .collect();
    if zero.is_empty() {
        return Err(Error::Solver("no zero mode in the diagonal sector".into()));
    }
    if zero.len() > 1 && l.params().gamma1 > 0.0 {
        return Err(Error::UnexpectedDegeneracy(zero.len()));
    }
    let (state, clipped_mass) = steady_from_modes(l.dim(), &layout, &zero)?;
    let residual = l.apply(&state).frobenius_norm();
    Ok(SteadyState { state, clipped_mass, residual })
}

/// All D² eigenvalues, sorted, without eigenvectors.
pub fn eigenvalues(l: &Liouvillian) -> Result<Vec<C64>> {
    let layout = l.layout();
    let mut out = Vec::with_capacity(l.dim() * l.dim());
    for q in layout.canonical_sectors().collect::<Vec<_>>() {
        let vals = linalg::eigvals(&l.sector_block(&layout, q))?;
        if layout.partner(q) == q {
            out.extend(vals.iter().copied());
        } else {
            for v in vals.iter() {
                out.push(*v);
                out.push(v.conj());
            }
        }
    }
    sort_eigenvalues(&mut out);
    Ok(out)
}

impl SpectralDecomposition {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn layout(&self) -> &SectorLayout {
        &self.layout
    }

    /// All D² eigenvalues in sorted order.
    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn retained(&self) -> usize {
        self.modes.len()
    }

    pub fn is_complete(&self) -> bool {
        self.modes.len() == self.eigenvalues.len()
    }

    pub fn steady_state(&self) -> &DensityMatrix {
        &self.steady_state
    }

    pub fn steady_clipped_mass(&self) -> f64 {
        self.steady_clipped
    }

    /// Number of eigenvalues within [`ZERO_TOL`] of zero.
    pub fn zero_multiplicity(&self) -> usize {
        self.zero_multiplicity
    }

    pub fn right(&self, j: usize) -> FockOperator {
        let m = &self.modes[j];
        self.layout.scatter(&m.right, m.sector)
    }

    pub fn left(&self, j: usize) -> FockOperator {
        let m = &self.modes[j];
        self.layout.scatter(&m.left, m.sector)
    }

    /// tr(L_j† ρ).
    pub fn left_overlap(&self, j: usize, rho: &FockOperator) -> C64 {
        left_overlap(&self.layout, &self.modes[j], rho)
    }

    /// tr(A R_j).
    pub fn trace_with_right(&self, j: usize, a: &FockOperator) -> C64 {
        let m = &self.modes[j];
        self.layout.members(m.sector).iter().zip(&m.right).map(|(&(k, l), z)| a.get(l, k) * z).sum()
    }

    /// acc += w · R_j, touching only the mode's sector.
    pub fn accumulate_right(&self, j: usize, w: C64, acc: &mut Array2<C64>) {
        let m = &self.modes[j];
        for (&(k, l), z) in self.layout.members(m.sector).iter().zip(&m.right) {
            acc[[k, l]] += w * z;
        }
    }

    /// ‖R_j‖ in the Frobenius norm (1 by construction).
    pub fn right_norm(&self, j: usize) -> f64 {
        coeff_norm(&self.modes[j].right)
    }

    /// The first `count` modes with conjugate pairs replaced by Hermitian
    /// combinations R_a = (R + R†)/2, R_b = (R − R†)/(2i) and duals
    /// L_a = L + L†, L_b = i(L† − L).
    pub fn hermitized(&self, count: usize) -> Result<Vec<HermitianMode>> {
        if count > self.modes.len() {
            return Err(Error::InvalidParameter(format!("{count} modes requested, {} retained", self.modes.len())));
        }
        if count > 0 && self.modes[count - 1].role == ModeRole::PairFirst {
            return Err(Error::Manifold(format!("mode {count} is half of a conjugate pair")));
        }
        let mut out = Vec::with_capacity(count);
        let mut j = 0;
        while j < count {
            match self.modes[j].role {
                ModeRole::Single => {
                    out.push(HermitianMode { eigenvalue: self.modes[j].eigenvalue, right: self.right(j), left: self.left(j) });
                    j += 1;
                }
                ModeRole::PairFirst => {
                    let (r, rd) = (self.right(j), self.right(j + 1));
                    let (l, ld) = (self.left(j), self.left(j + 1));
                    out.push(HermitianMode {
                        eigenvalue: self.modes[j].eigenvalue,
                        right: &(&r + &rd) * 0.5,
                        left: &l + &ld,
                    });
                    out.push(HermitianMode {
                        eigenvalue: self.modes[j + 1].eigenvalue,
                        right: (&r - &rd).scaled(-0.5 * I),
                        left: (&ld - &l).scaled(I),
                    });
                    j += 2;
                }
                ModeRole::PairSecond => return Err(Error::Solver("mode ordering broke a conjugate pair".into())),
            }
        }
        Ok(out)
    }

    pub fn timescales(&self) -> Timescales {
        Timescales::from_eigenvalues(&self.eigenvalues)
    }
}

/// Decay times τ_j = −1/Re λ_j for j ≥ 2.
#[derive(Clone, Debug, PartialEq)]
pub struct Timescales {
    tau: Vec<f64>,
    /// Set when some Re λ_j (j ≥ 2) vanishes.
    pub infinite: bool,
}

impl Timescales {
    pub fn from_eigenvalues(sorted: &[C64]) -> Self {
        let tau: Vec<f64> = sorted
            .iter()
            .skip(1)
            .map(|z| if z.re < 0.0 { -1.0 / z.re } else { f64::INFINITY })
            .collect();
        let infinite = tau.iter().any(|t| t.is_infinite());
        Self { tau, infinite }
    }

    /// τ_j with the 1-based labels of the sorted spectrum, j ≥ 2.
    pub fn tau(&self, j: usize) -> f64 {
        assert!(j >= 2, "τ_j is defined for j ≥ 2");
        self.tau[j - 2]
    }

    pub fn all(&self) -> &[f64] {
        &self.tau
    }

    /// τ_n / τ_{n+1}; τ₁ counts as infinite.
    pub fn gap_ratio(&self, n: usize) -> f64 {
        if n < 2 {
            return f64::INFINITY;
        }
        self.tau(n) / self.tau(n + 1)
    }
}

/// Timescales of the eigenvalue list (sorted internally).
pub fn timescales(dec: &SpectralDecomposition) -> Timescales {
    dec.timescales()
}

/// Writes (index, re_lambda, im_lambda, tau); index is 1-based.
pub fn write_spectrum_csv<W: Write>(out: W, eigenvalues: &[C64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "re_lambda", "im_lambda", "tau"])?;
    for (i, z) in eigenvalues.iter().enumerate() {
        let tau = if i == 0 || z.re >= 0.0 { f64::INFINITY } else { -1.0 / z.re };
        w.write_record([(i + 1).to_string(), z.re.to_string(), z.im.to_string(), tau.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// ‖𝓛R_j − λ_j R_j‖ for retained mode j.
pub fn mode_residual(l: &Liouvillian, dec: &SpectralDecomposition, j: usize) -> f64 {
    let r = dec.right(j);
    (&l.apply(&r) - &r.scaled(dec.eigenvalues[j])).frobenius_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::build_liouvillian_general;
    use approx::assert_abs_diff_eq;

    fn damped(dim: usize) -> Liouvillian {
        build_liouvillian_general(&ModelParams { n: 4, m: 4, delta: 0.4, eta: 0.0, theta: 0.0, gamma1: 1.0, gamma_m: 0.0, dim }).unwrap()
    }

    #[test]
    fn damped_oscillator_spectrum() {
        let d = 12;
        let l = damped(d);
        let vals = eigenvalues(&l).unwrap();
        // Without nonlinearity the generator is exactly triangular in (k, l),
        // so every λ_kl is reproduced, not just interior ones.
        let want: Vec<C64> = (0..d)
            .flat_map(|k| (0..d).map(move |j| C64::new(-0.5 * (k + j) as f64, -0.4 * (k as f64 - j as f64))))
            .collect();
        let mut used = vec![false; want.len()];
        for a in &vals {
            let (i, dist) = want
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .map(|(i, b)| (i, (a - b).norm()))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap();
            assert!(dist < 1e-8, "{a} has no analytic partner");
            used[i] = true;
        }
        let ts = Timescales::from_eigenvalues(&vals);
        assert_abs_diff_eq!(ts.tau(2), 2.0, epsilon = 1e-8);
    }

    #[test]
    fn vacuum_is_steady_without_drive() {
        let ss = steady_state(&damped(8)).unwrap();
        assert_abs_diff_eq!(ss.state.get(0, 0).re, 1.0, epsilon = 1e-10);
        assert!(ss.residual < 1e-10);
    }

    #[test]
    fn blocked_matches_unblocked() {
        let p = ModelParams { n: 4, m: 4, delta: 0.4, eta: 0.7, theta: 0.0, gamma1: 1.0, gamma_m: 0.2, dim: 8 };
        let l = build_liouvillian_general(&p).unwrap();
        let blocked = decompose(&l, None).unwrap();
        let plain = decompose(&l.clone().with_symmetry_order(1).unwrap(), None).unwrap();
        for (a, b) in blocked.eigenvalues().iter().zip(plain.eigenvalues()) {
            assert!((a - b).norm() < 1e-8 * a.norm().max(1.0), "{a} vs {b}");
        }
        assert!(trace_distance_ok(blocked.steady_state(), plain.steady_state()));
    }

    fn trace_distance_ok(a: &DensityMatrix, b: &DensityMatrix) -> bool {
        crate::fockspace::trace_distance(a, b).unwrap() < 1e-8
    }

    #[test]
    fn biorthonormal_hermitian_and_exact() {
        let p = ModelParams { n: 3, m: 3, delta: 0.4, eta: 0.9, theta: 0.0, gamma1: 1.0, gamma_m: 0.3, dim: 9 };
        let l = build_liouvillian_general(&p).unwrap();
        let dec = decompose(&l, Some(12)).unwrap();
        let norm = l.frobenius_norm();
        let k = dec.retained();
        for j in 0..k {
            assert!(mode_residual(&l, &dec, j) <= 1e-7 * norm);
            for i in 0..k {
                let ov = dec.left(i).inner(&dec.right(j));
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ov - want).norm() < 1e-8, "tr(L{i}†R{j}) = {ov}");
            }
            if j > 0 {
                assert!(dec.right(j).trace().norm() < 1e-8);
            }
            if dec.modes()[j].role == ModeRole::Single {
                assert!(dec.right(j).hermiticity_error() < 1e-8);
                assert!(dec.left(j).hermiticity_error() < 1e-8);
            }
        }
        let herm = dec.hermitized(k).unwrap();
        for (i, a) in herm.iter().enumerate() {
            assert!(a.right.hermiticity_error() < 1e-8 && a.left.hermiticity_error() < 1e-8);
            for (j, b) in herm.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((a.left.inner(&b.right) - want).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn conjugate_pairs_are_adjacent() {
        let p = ModelParams { n: 4, m: 4, delta: 0.4, eta: 1.0, theta: 0.0, gamma1: 1.0, gamma_m: 0.2, dim: 10 };
        let dec = decompose(&build_liouvillian_general(&p).unwrap(), None).unwrap();
        let modes = dec.modes();
        for j in 0..modes.len() {
            if modes[j].role == ModeRole::PairFirst {
                assert_eq!(modes[j + 1].role, ModeRole::PairSecond);
                assert_eq!(modes[j].eigenvalue.conj(), modes[j + 1].eigenvalue);
                assert!(modes[j].eigenvalue.im >= 0.0);
                assert_abs_diff_eq!((&dec.right(j).adjoint() - &dec.right(j + 1)).max_abs(), 0.0, epsilon = 1e-14);
            }
        }
        let ts = dec.timescales();
        for w in ts.all().windows(2) {
            assert!(w[0] >= w[1]);
        }
        assert!(ts.gap_ratio(4) >= 1.0);
    }

    #[test]
    fn kernel_of_lossless_model_is_degenerate() {
        let p = ModelParams { n: 2, m: 2, delta: 0.0, eta: 1.0, theta: 0.0, gamma1: 0.0, gamma_m: 0.5, dim: 25 };
        let l = build_liouvillian_general(&p).unwrap();
        let dec = decompose(&l, Some(8)).unwrap();
        assert_eq!(dec.eigenvalues().iter().filter(|z| z.norm() < 1e-7).count(), 4);
        let mut lossy = p.clone();
        lossy.gamma1 = 1.0;
        assert!(steady_state(&build_liouvillian_general(&lossy).unwrap()).is_ok());
    }

    #[test]
    fn spectrum_csv_layout() {
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &[C64::new(0.0, 0.0), C64::new(-0.5, 0.4)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "index,re_lambda,im_lambda,tau\n1,0,0,inf\n2,-0.5,0.4,2\n");
    }
}
