//! Operators and states on a truncated Fock space |0⟩..|D−1⟩.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Deref, Mul, Neg, Sub};

use ndarray::{Array1, Array2, Zip};

use crate::error::{Error, Result};
use crate::linalg::{self, c, C64, I};

/// Tail mass above which a truncated coherent state triggers a warning.
pub const TRUNCATION_TAIL: f64 = 1e-9;

/// Dense complex D×D matrix acting on the truncated Fock space.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    m: Array2<C64>,
}

impl FockOperator {
    pub fn from_array(m: Array2<C64>) -> Result<Self> {
        let (r, cols) = m.dim();
        if r != cols {
            return Err(Error::DimensionMismatch(r, cols));
        }
        if r < 2 {
            return Err(Error::InvalidDimension(r));
        }
        Ok(Self { m })
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::from_array(Array2::zeros((dim, dim)))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_array(Array2::eye(dim))
    }

    pub fn diagonal(values: &[C64]) -> Result<Self> {
        Self::from_array(Array2::from_diag(&Array1::from(values.to_vec())))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.m
    }

    pub fn get(&self, k: usize, l: usize) -> C64 {
        self.m[[k, l]]
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m.t().mapv(|z| z.conj()) }
    }

    pub fn dot(&self, other: &Self) -> Self {
        Self { m: self.m.dot(&other.m) }
    }

    pub fn trace(&self) -> C64 {
        self.m.diag().sum()
    }

    /// tr(self · other) without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        Zip::from(&self.m).and(&other.m.t()).fold(C64::new(0.0, 0.0), |acc, &a, &b| acc + a * b)
    }

    /// Hilbert–Schmidt inner product tr(self† · other).
    pub fn inner(&self, other: &Self) -> C64 {
        Zip::from(&self.m).and(&other.m).fold(C64::new(0.0, 0.0), |acc, &a, &b| acc + a.conj() * b)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    /// max |A − A†| entrywise.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut err: f64 = 0.0;
        for k in 0..d {
            for l in k..d {
                err = err.max((self.m[[k, l]] - self.m[[l, k]].conj()).norm());
            }
        }
        err
    }

    /// Entrywise Hermiticity relative to the largest entry.
    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermiticity_error() <= rel_tol * self.max_abs().max(1e-300)
    }

    /// (A + A†)/2
    pub fn hermitian_part(&self) -> Self {
        Self { m: (&self.m + &self.m.t().mapv(|z| z.conj())) * 0.5 }
    }

    /// (A − A†)/(2i), Hermitian.
    pub fn anti_hermitian_part(&self) -> Self {
        Self { m: (&self.m - &self.m.t().mapv(|z| z.conj())) * (-0.5 * I) }
    }

    pub fn scaled(&self, z: C64) -> Self {
        Self { m: &self.m * z }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self { m: self.m.dot(&other.m) - other.m.dot(&self.m) }
    }

    /// U A U† with U = exp(i·angle·â†â).
    pub fn rotated(&self, angle: f64) -> Self {
        let mut m = self.m.clone();
        for ((k, l), z) in m.indexed_iter_mut() {
            *z *= C64::from_polar(1.0, angle * (k as f64 - l as f64));
        }
        Self { m }
    }

    /// Leading dim×dim block.
    pub fn truncated(&self, dim: usize) -> Result<Self> {
        if dim > self.dim() {
            return Err(Error::DimensionMismatch(dim, self.dim()));
        }
        Self::from_array(self.m.slice(ndarray::s![..dim, ..dim]).to_owned())
    }

    /// Ascending eigenvalues and eigenvectors of the Hermitian part.
    pub fn hermitian_eigen(&self) -> Result<(Array1<f64>, Array2<C64>)> {
        linalg::eigh(&self.hermitian_part().m)
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }
}

impl Add for &FockOperator {
    type Output = FockOperator;
    fn add(self, rhs: &FockOperator) -> FockOperator {
        FockOperator { m: &self.m + &rhs.m }
    }
}

impl Sub for &FockOperator {
    type Output = FockOperator;
    fn sub(self, rhs: &FockOperator) -> FockOperator {
        FockOperator { m: &self.m - &rhs.m }
    }
}

impl Mul for &FockOperator {
    type Output = FockOperator;
    fn mul(self, rhs: &FockOperator) -> FockOperator {
        self.dot(rhs)
    }
}

impl Mul<C64> for &FockOperator {
    type Output = FockOperator;
    fn mul(self, rhs: C64) -> FockOperator {
        self.scaled(rhs)
    }
}

impl Mul<f64> for &FockOperator {
    type Output = FockOperator;
    fn mul(self, rhs: f64) -> FockOperator {
        FockOperator { m: &self.m * rhs }
    }
}

impl Neg for &FockOperator {
    type Output = FockOperator;
    fn neg(self) -> FockOperator {
        FockOperator { m: self.m.mapv(|z| -z) }
    }
}

impl AddAssign<&FockOperator> for FockOperator {
    fn add_assign(&mut self, rhs: &FockOperator) {
        self.m += &rhs.m;
    }
}

impl FockOperator {
    /// self += z · other
    pub fn add_scaled(&mut self, z: C64, other: &FockOperator) {
        self.m.scaled_add(z, &other.m);
    }
}

/// A trace-one, Hermitian, positive semidefinite FockOperator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: FockOperator,
}

impl DensityMatrix {
    pub const TRACE_TOL: f64 = 1e-10;
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const POSITIVITY_TOL: f64 = 1e-8;

    pub fn new(op: FockOperator) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).norm() > Self::TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let herm = op.hermiticity_error();
        if herm > Self::HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("hermiticity error {herm:.3e}")));
        }
        let min = linalg::eigvalsh(&op.hermitian_part().m)?[0];
        if min < -Self::POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { op })
    }

    /// |ψ⟩⟨ψ| for a ket, normalized.
    pub fn from_ket(ket: &Array1<C64>) -> Result<Self> {
        let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidState("ket has zero or non-finite norm".into()));
        }
        let v = ket / c(norm);
        let d = v.len();
        let mut m = Array2::zeros((d, d));
        for k in 0..d {
            for l in 0..d {
                m[[k, l]] = v[k] * v[l].conj();
            }
        }
        Ok(Self { op: FockOperator::from_array(m)? })
    }

    pub fn fock(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::InvalidParameter(format!("Fock level {k} outside dimension {dim}")));
        }
        let mut ket = Array1::zeros(dim);
        ket[k] = c(1.0);
        Self::from_ket(&ket)
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        Self::fock(dim, 0)
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Ok(Self { op: &FockOperator::identity(dim)? * (1.0 / dim as f64) })
    }

    /// Nearest physical state: Hermitian part, trace-normalized, negative
    /// eigenvalues clipped. Returns the state and the clipped mass.
    pub fn project_physical(op: &FockOperator) -> Result<(Self, f64)> {
        let h = op.hermitian_part();
        let tr = h.trace().re;
        if !(tr.abs() > 1e-300) {
            return Err(Error::InvalidState("operator has zero trace".into()));
        }
        let h = &h * (1.0 / tr);
        let (vals, vecs) = linalg::eigh(h.matrix())?;
        let clipped: f64 = vals.iter().filter(|&&v| v < 0.0).map(|v| -v).sum();
        if clipped == 0.0 {
            return Ok((Self { op: h.hermitian_part() }, 0.0));
        }
        let kept: Vec<f64> = vals.iter().map(|&v| v.max(0.0)).collect();
        let total: f64 = kept.iter().sum();
        let d = h.dim();
        let mut m = Array2::zeros((d, d));
        for (j, &w) in kept.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let col = vecs.column(j);
            for k in 0..d {
                for l in 0..d {
                    m[[k, l]] += col[k] * col[l].conj() * (w / total);
                }
            }
        }
        Ok((Self { op: FockOperator::from_array(m)?.hermitian_part() }, clipped))
    }

    pub fn operator(&self) -> &FockOperator {
        &self.op
    }

    pub fn into_operator(self) -> FockOperator {
        self.op
    }

    pub fn purity(&self) -> f64 {
        self.op.trace_product(&self.op).re
    }

    pub fn rotated(&self, angle: f64) -> Self {
        Self { op: self.op.rotated(angle) }
    }

    /// Photon-number distribution ⟨k|ρ|k⟩.
    pub fn populations(&self) -> Vec<f64> {
        self.op.m.diag().iter().map(|z| z.re).collect()
    }
}

impl Deref for DensityMatrix {
    type Target = FockOperator;
    fn deref(&self) -> &FockOperator {
        &self.op
    }
}

impl AsRef<FockOperator> for DensityMatrix {
    fn as_ref(&self) -> &FockOperator {
        &self.op
    }
}

/// Complex phase-space amplitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherentAmplitude(C64);

impl CoherentAmplitude {
    pub fn new(value: C64) -> Result<Self> {
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite amplitude {value}")));
        }
        Ok(Self(value))
    }

    pub fn polar(r: f64, phi: f64) -> Result<Self> {
        Self::new(C64::from_polar(r, phi))
    }

    pub fn value(&self) -> C64 {
        self.0
    }
}

impl From<f64> for CoherentAmplitude {
    fn from(x: f64) -> Self {
        Self(c(x))
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    Ok(())
}

/// â with ⟨k|â|k+1⟩ = √(k+1).
pub fn annihilation(dim: usize) -> Result<FockOperator> {
    check_dim(dim)?;
    let mut m = Array2::zeros((dim, dim));
    for k in 0..dim - 1 {
        m[[k, k + 1]] = c(((k + 1) as f64).sqrt());
    }
    FockOperator::from_array(m)
}

pub fn creation(dim: usize) -> Result<FockOperator> {
    Ok(annihilation(dim)?.adjoint())
}

pub fn number_operator(dim: usize) -> Result<FockOperator> {
    check_dim(dim)?;
    FockOperator::diagonal(&(0..dim).map(|k| c(k as f64)).collect::<Vec<_>>())
}

/// exp(i·angle·â†â); maps |α⟩ to |α e^{i·angle}⟩.
pub fn rotation_operator(dim: usize, angle: f64) -> Result<FockOperator> {
    check_dim(dim)?;
    FockOperator::diagonal(&(0..dim).map(|k| C64::from_polar(1.0, angle * k as f64)).collect::<Vec<_>>())
}

/// Poisson mass P(N ≥ dim) for mean `mean`.
pub fn poisson_tail(mean: f64, dim: usize) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    let mut ln_term = -mean + dim as f64 * mean.ln() - linalg::ln_factorial(dim);
    let mut sum = 0.0;
    let mut k = dim;
    loop {
        let term = ln_term.exp();
        sum += term;
        if (k as f64 > mean && term <= 1e-18 * sum) || k > dim + 100_000 {
            break;
        }
        k += 1;
        ln_term += mean.ln() - (k as f64).ln();
    }
    sum.min(1.0)
}

/// Smallest D with Poisson(β²) tail below 1e−9, plus a 20% margin.
pub fn default_dimension(beta: f64) -> usize {
    let mean = beta * beta;
    let mut d = 1;
    while poisson_tail(mean, d) >= TRUNCATION_TAIL {
        d += 1;
    }
    ((1.2 * d as f64).ceil() as usize).max(2)
}

/// Fock amplitudes of |α⟩, renormalized after truncation.
pub fn coherent_ket(dim: usize, alpha: CoherentAmplitude) -> Result<Array1<C64>> {
    check_dim(dim)?;
    let a = alpha.value();
    let mut ket = Array1::zeros(dim);
    ket[0] = c((-0.5 * a.norm_sqr()).exp());
    for k in 1..dim {
        ket[k] = ket[k - 1] * a / (k as f64).sqrt();
    }
    let norm = ket.iter().map(|z: &C64| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidState(format!("coherent amplitude {a} has no weight below level {dim}")));
    }
    Ok(ket / c(norm))
}

/// |α⟩⟨α|; warns when the Poisson tail beyond the truncation exceeds 1e−9.
pub fn coherent_state(dim: usize, alpha: CoherentAmplitude) -> Result<DensityMatrix> {
    let tail = poisson_tail(alpha.value().norm_sqr(), dim);
    if tail > TRUNCATION_TAIL {
        log::warn!("coherent state |{}| truncated at D={dim}: tail mass {tail:.2e}", alpha.value());
    }
    DensityMatrix::from_ket(&coherent_ket(dim, alpha)?)
}

/// β·e^{i(θ + (2j+1)π/n)} for j = 1..n.
pub fn lobe_amplitudes(beta: f64, n: u32, theta: f64) -> Vec<C64> {
    (1..=n)
        .map(|j| C64::from_polar(beta, theta + (2 * j + 1) as f64 * PI / n as f64))
        .collect()
}

/// The n coherent lobes at amplitude β and phases θ + (2j+1)π/n, j = 1..n.
pub fn lobe_states(dim: usize, beta: f64, n: u32, theta: f64) -> Result<Vec<DensityMatrix>> {
    if n < 1 || !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("lobes need n ≥ 1 and β ≥ 0 (n={n}, β={beta})")));
    }
    lobe_amplitudes(beta, n, theta)
        .into_iter()
        .map(|a| coherent_state(dim, CoherentAmplitude::new(a)?))
        .collect()
}

/// ½‖a − b‖₁ for arbitrary operators.
pub fn operator_trace_distance(a: &FockOperator, b: &FockOperator) -> Result<f64> {
    a.check_same_dim(b)?;
    let diff = a - b;
    let s: f64 = if diff.is_hermitian(1e-12) {
        linalg::eigvalsh(diff.hermitian_part().matrix())?.iter().map(|v| v.abs()).sum()
    } else {
        linalg::singular_values(diff.matrix())?.sum()
    };
    Ok(0.5 * s)
}

pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    operator_trace_distance(a, b)
}

/// tr(obs · ρ).
pub fn expectation(obs: &FockOperator, rho: &FockOperator) -> Result<C64> {
    obs.check_same_dim(rho)?;
    Ok(obs.trace_product(rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ladder_entries() {
        let a = annihilation(2).unwrap();
        assert_eq!(a.get(0, 1), c(1.0));
        assert_eq!(a.get(1, 0), c(0.0));
        let a3 = annihilation(3).unwrap();
        assert_abs_diff_eq!(a3.get(1, 2).re, 2f64.sqrt(), epsilon = 1e-15);
        assert!(matches!(annihilation(1), Err(Error::InvalidDimension(1))));
    }

    #[test]
    fn truncated_commutator_is_identity() {
        let d = 10;
        let a = annihilation(d).unwrap();
        let comm = a.commutator(&a.adjoint());
        for k in 0..d - 1 {
            for l in 0..d - 1 {
                let want = if k == l { 1.0 } else { 0.0 };
                assert_abs_diff_eq!((comm.get(k, l) - want).norm(), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn coherent_basics() {
        let vac = coherent_state(8, CoherentAmplitude::from(0.0)).unwrap();
        assert_eq!(vac, DensityMatrix::vacuum(8).unwrap());
        let rho = coherent_state(40, CoherentAmplitude::from(3.0)).unwrap();
        let n = expectation(&number_operator(40).unwrap(), &rho).unwrap();
        assert_abs_diff_eq!(n.re, 9.0, epsilon = 1e-6);
        let alpha = C64::new(1.2, -0.7);
        let rho = coherent_state(30, CoherentAmplitude::new(alpha).unwrap()).unwrap();
        let ea = expectation(&annihilation(30).unwrap(), &rho).unwrap();
        assert_abs_diff_eq!((ea - alpha).norm(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn neighbouring_lobe_overlap() {
        let beta = 2.185;
        let amps = lobe_amplitudes(beta, 4, 0.0);
        let k0 = coherent_ket(40, CoherentAmplitude::new(amps[0]).unwrap()).unwrap();
        let k1 = coherent_ket(40, CoherentAmplitude::new(amps[1]).unwrap()).unwrap();
        let ov: C64 = k0.iter().zip(k1.iter()).map(|(a, b)| a.conj() * b).sum();
        let want = (-4.0 * beta * beta * (PI / 4.0).sin().powi(2)).exp();
        assert_abs_diff_eq!(ov.norm_sqr(), want, epsilon = 1e-9);
        assert!((ov.norm_sqr() - 7.1e-5).abs() < 0.1e-5);
    }

    #[test]
    fn lobe_geometry() {
        let one = lobe_amplitudes(2.0, 1, 0.0);
        assert_abs_diff_eq!((one[0] - c(-2.0)).norm(), 0.0, epsilon = 1e-12);
        let four = lobe_amplitudes(1.0, 4, 0.3);
        for j in 0..4 {
            let d = (four[(j + 1) % 4] / four[j]).arg();
            assert_abs_diff_eq!(d, PI / 2.0, epsilon = 1e-12);
        }
        let lobes = lobe_states(30, 1.53, 3, 0.0).unwrap();
        let ov: Vec<f64> = (0..3)
            .map(|j| lobes[j].trace_product(&lobes[(j + 1) % 3]).re)
            .collect();
        assert_abs_diff_eq!(ov[0], ov[1], epsilon = 1e-12);
        assert_abs_diff_eq!(ov[1], ov[2], epsilon = 1e-12);
    }

    #[test]
    fn trace_distance_cases() {
        let rho = coherent_state(20, CoherentAmplitude::new(C64::new(0.5, 0.5)).unwrap()).unwrap();
        assert_abs_diff_eq!(trace_distance(&rho, &rho).unwrap(), 0.0, epsilon = 1e-12);
        let f0 = DensityMatrix::fock(5, 0).unwrap();
        let f1 = DensityMatrix::fock(5, 1).unwrap();
        assert_abs_diff_eq!(trace_distance(&f0, &f1).unwrap(), 1.0, epsilon = 1e-12);
        let a = coherent_state(40, CoherentAmplitude::from(0.0)).unwrap();
        let b = coherent_state(40, CoherentAmplitude::from(3.0)).unwrap();
        let want = (1.0 - (-9.0f64).exp()).sqrt();
        assert_abs_diff_eq!(trace_distance(&a, &b).unwrap(), want, epsilon = 1e-6);
        let small = DensityMatrix::vacuum(4).unwrap();
        assert!(matches!(trace_distance(&a, &small), Err(Error::DimensionMismatch(40, 4))));
    }

    #[test]
    fn expectations_on_fock_states() {
        let vac = DensityMatrix::vacuum(6).unwrap();
        assert_eq!(expectation(&annihilation(6).unwrap(), &vac).unwrap(), c(0.0));
        let f3 = DensityMatrix::fock(6, 3).unwrap();
        assert_abs_diff_eq!(expectation(&number_operator(6).unwrap(), &f3).unwrap().re, 3.0, epsilon = 1e-14);
    }

    #[test]
    fn rotation_moves_coherent_state() {
        let d = 30;
        let alpha = C64::new(1.5, 0.2);
        let rho = coherent_state(d, CoherentAmplitude::new(alpha).unwrap()).unwrap();
        let angle = 2.0 * PI / 5.0;
        let u = rotation_operator(d, angle).unwrap();
        let rotated = u.dot(&rho).dot(&u.adjoint());
        assert_abs_diff_eq!((&rotated - &rho.rotated(angle)).max_abs(), 0.0, epsilon = 1e-14);
        let target = coherent_state(d, CoherentAmplitude::new(alpha * C64::from_polar(1.0, angle)).unwrap()).unwrap();
        assert_abs_diff_eq!(operator_trace_distance(&rotated, &target).unwrap(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn density_validation() {
        let mut m = Array2::zeros((2, 2));
        m[[0, 0]] = c(1.2);
        m[[1, 1]] = c(-0.2);
        let op = FockOperator::from_array(m).unwrap();
        assert!(DensityMatrix::new(op.clone()).is_err());
        let (rho, clipped) = DensityMatrix::project_physical(&op).unwrap();
        assert_abs_diff_eq!(clipped, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.get(0, 0).re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tail_and_default_dimension() {
        assert_eq!(poisson_tail(0.0, 3), 0.0);
        assert_abs_diff_eq!(poisson_tail(2.0, 0), 1.0, epsilon = 1e-12);
        let direct: f64 = (0..3).map(|k| (-2.0f64).exp() * 2f64.powi(k) / [1.0, 1.0, 2.0][k as usize]).sum();
        assert_abs_diff_eq!(poisson_tail(2.0, 3), 1.0 - direct, epsilon = 1e-12);
        let d = default_dimension(2.2);
        assert!(poisson_tail(2.2 * 2.2, (d as f64 / 1.2).floor() as usize) < 1e-8);
    }
}
