//! Metastable phases spanned by the n slowest modes, quasiprobabilities and
//! evolution inside the metastable manifold.
//!
//! Modes are first oriented against lobe 1: each conjugate pair is taken in
//! the representative whose lobe coordinate turns by e^{−i2π/n} from lobe to
//! lobe, phased so that lobe 1 sits at argument 3π/n, and each real mode is
//! signed so that lobe 1 has a positive coordinate. For n = 3, 4 the first
//! phase then follows the sign pattern of lobe 1 (c^min for a negative
//! coordinate, c^max for a positive one, nothing for a vanishing one). For
//! other n it is the physical state most aligned with lobe 1 inside the
//! manifold. The remaining phases are rotations of the first.

use std::f64::consts::PI;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::fockspace::{coherent_state, CoherentAmplitude, DensityMatrix, FockOperator};
use crate::lindblad::lobe_amplitude;
use crate::linalg::{self, C64, I};
use crate::spectral::{ModeRole, SpectralDecomposition};

/// Minimum τ_n/τ_{n+1} for which phases are constructed.
pub const MIN_GAP_RATIO: f64 = 2.0;
/// Tolerance on (1/n)Σμ_l = ρ_ss in trace distance.
pub const SUM_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Coordinate {
    Real(C64),
    /// Real and imaginary parts of a pair coordinate z with z(t) = z e^{λt}:
    /// x_a = 2 Re z, x_b = −2 Im z.
    PairRe(C64),
    PairIm,
}

/// An oriented Hermitian mode R_j with its dual L_j.
#[derive(Clone, Debug)]
pub struct ManifoldMode {
    pub right: FockOperator,
    pub left: FockOperator,
    kind: Coordinate,
}

impl ManifoldMode {
    pub fn eigenvalue(&self) -> Option<C64> {
        match self.kind {
            Coordinate::Real(l) | Coordinate::PairRe(l) => Some(l),
            Coordinate::PairIm => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MetastableManifold {
    n: usize,
    phases: Vec<FockOperator>,
    steady_state: DensityMatrix,
    modes: Vec<ManifoldMode>,
    extreme: Vec<(f64, f64)>,
    coefficients: Array2<f64>,
    dual: Array2<f64>,
}

fn lobe_pair(dec: &SpectralDecomposition, n: usize) -> Result<(DensityMatrix, DensityMatrix)> {
    let p = dec.params();
    let beta = lobe_amplitude(p)?;
    let phase = |j: usize| p.lobe_offset() + (2 * j + 1) as f64 * PI / n as f64;
    let d = dec.dim();
    Ok((
        coherent_state(d, CoherentAmplitude::polar(beta, phase(1))?)?,
        coherent_state(d, CoherentAmplitude::polar(beta, phase(2))?)?,
    ))
}

/// Oriented Hermitian modes 2..n.
fn oriented_modes(dec: &SpectralDecomposition, n: usize) -> Result<Vec<ManifoldMode>> {
    if n > dec.retained() {
        return Err(Error::Manifold(format!("{n} modes needed, {} retained", dec.retained())));
    }
    if dec.modes()[n - 1].role == ModeRole::PairFirst {
        return Err(Error::Manifold(format!("mode {n} is half of a conjugate pair")));
    }
    let (b1, b2) = lobe_pair(dec, n)?;
    let mut out = Vec::with_capacity(n - 1);
    let mut j = 1;
    while j < n {
        let m = &dec.modes()[j];
        match m.role {
            ModeRole::Single => {
                let (mut r, mut l) = (dec.right(j), dec.left(j));
                if dec.left_overlap(j, &b1).re < 0.0 {
                    r = -&r;
                    l = -&l;
                }
                out.push(ManifoldMode { right: r, left: l, kind: Coordinate::Real(m.eigenvalue) });
                j += 1;
            }
            ModeRole::PairFirst => {
                let (z1, z2) = (dec.left_overlap(j, &b1), dec.left_overlap(j, &b2));
                let (idx, z1) = if (z2 / z1).arg() > 0.0 { (j + 1, z1.conj()) } else { (j, z1) };
                let chi = z1.arg() - 3.0 * PI / n as f64;
                let u = C64::from_polar(1.0, chi);
                let r = dec.right(idx).scaled(u);
                let l = dec.left(idx).scaled(u);
                let lambda = dec.modes()[idx].eigenvalue;
                let (rd, ld) = (r.adjoint(), l.adjoint());
                out.push(ManifoldMode { right: &(&r + &rd) * 0.5, left: &l + &ld, kind: Coordinate::PairRe(lambda) });
                out.push(ManifoldMode { right: (&r - &rd).scaled(-0.5 * I), left: (&ld - &l).scaled(I), kind: Coordinate::PairIm });
                j += 2;
            }
            ModeRole::PairSecond => return Err(Error::Manifold("mode ordering broke a conjugate pair".into())),
        }
    }
    Ok(out)
}

fn extremes(modes: &[ManifoldMode]) -> Result<Vec<(f64, f64)>> {
    modes
        .iter()
        .map(|m| {
            let herm = m.left.hermiticity_error();
            if herm > 1e-8 * m.left.max_abs().max(1.0) {
                return Err(Error::Manifold(format!("dual mode not Hermitian ({herm:.2e})")));
            }
            let v = linalg::eigvalsh(m.left.hermitian_part().matrix())?;
            Ok((v[0], v[v.len() - 1]))
        })
        .collect()
}

/// (c_j^min, c_j^max): extreme eigenvalues of the oriented Hermitian duals L_2..L_n.
pub fn extreme_coefficients(dec: &SpectralDecomposition, n: usize) -> Result<Vec<(f64, f64)>> {
    if n < 2 {
        return Ok(Vec::new());
    }
    extremes(&oriented_modes(dec, n)?)
}

fn check_gap(dec: &SpectralDecomposition, n: usize) -> Result<()> {
    if n >= 2 {
        let gap = dec.timescales().gap_ratio(n);
        if !(gap >= MIN_GAP_RATIO) {
            return Err(Error::InsufficientGap(gap));
        }
    }
    Ok(())
}

/// Builds the n metastable phases μ_1..μ_n.
pub fn build_phases(dec: &SpectralDecomposition, n: usize) -> Result<MetastableManifold> {
    if n == 0 {
        return Err(Error::InvalidParameter("manifold size must be ≥ 1".into()));
    }
    check_gap(dec, n)?;
    let rho_ss = dec.steady_state().clone();
    if n == 1 {
        let phases = vec![rho_ss.operator().clone()];
        let one = Array2::from_elem((1, 1), 1.0);
        return Ok(MetastableManifold { n, phases, steady_state: rho_ss, modes: Vec::new(), extreme: Vec::new(), coefficients: one.clone(), dual: one });
    }
    let modes = oriented_modes(dec, n)?;
    let extreme = extremes(&modes)?;
    let (b1, _) = lobe_pair(dec, n)?;
    let x1: Vec<f64> = modes.iter().map(|m| m.left.trace_product(&b1).re).collect();

    let coeffs: Vec<f64> = if n == 3 || n == 4 {
        let scale = x1.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        x1.iter()
            .zip(&extreme)
            .map(|(&x, &(lo, hi))| if x.abs() <= 1e-9 * scale { 0.0 } else if x < 0.0 { lo } else { hi })
            .collect()
    } else {
        let mut f = FockOperator::zeros(dec.dim())?;
        for (m, &x) in modes.iter().zip(&x1) {
            f.add_scaled(C64::new(x, 0.0), &m.left);
        }
        let (_, vecs) = f.hermitian_eigen()?;
        let top = DensityMatrix::from_ket(&vecs.column(vecs.ncols() - 1).to_owned())?;
        modes.iter().map(|m| m.left.trace_product(&top).re).collect()
    };
    let mut mu1 = rho_ss.operator().clone();
    for (m, &cj) in modes.iter().zip(&coeffs) {
        mu1.add_scaled(C64::new(cj, 0.0), &m.right);
    }
    let step = 2.0 * PI / n as f64;
    let phases: Vec<FockOperator> = (0..n).map(|l| mu1.rotated(step * l as f64)).collect();

    let coefficients = Array2::from_shape_fn((n, n), |(j, l)| {
        if j == 0 {
            phases[l].trace().re
        } else {
            modes[j - 1].left.trace_product(&phases[l]).re
        }
    });
    let dual = linalg::inverse_real(&coefficients).map_err(|_| Error::SingularDualSystem)?;
    if dual.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularDualSystem);
    }

    let mut mean = FockOperator::zeros(dec.dim())?;
    for mu in &phases {
        if (mu.trace() - 1.0).norm() > 1e-8 {
            return Err(Error::Manifold(format!("phase trace {} differs from 1", mu.trace())));
        }
        mean.add_scaled(C64::new(1.0 / n as f64, 0.0), mu);
    }
    let dist = crate::fockspace::operator_trace_distance(&mean, rho_ss.operator())?;
    if dist > SUM_TOL {
        return Err(Error::Manifold(format!("phase average misses the steady state by {dist:.2e}")));
    }
    Ok(MetastableManifold { n, phases, steady_state: rho_ss, modes, extreme, coefficients, dual })
}

impl MetastableManifold {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn phases(&self) -> &[FockOperator] {
        &self.phases
    }

    pub fn steady_state(&self) -> &DensityMatrix {
        &self.steady_state
    }

    pub fn modes(&self) -> &[ManifoldMode] {
        &self.modes
    }

    pub fn extreme_coefficients(&self) -> &[(f64, f64)] {
        &self.extreme
    }

    /// Columns: phases; rows: (tr μ_l, tr(L_j μ_l) for j = 2..n).
    pub fn coefficient_matrix(&self) -> &Array2<f64> {
        &self.coefficients
    }

    /// Inverse of the coefficient matrix; row l maps coordinates to p_l.
    pub fn dual_matrix(&self) -> &Array2<f64> {
        &self.dual
    }

    /// (tr ρ, tr(L_j ρ) for j = 2..n).
    pub fn coordinates(&self, rho: &FockOperator) -> Array1<f64> {
        let mut x = Array1::zeros(self.n);
        x[0] = rho.trace().re;
        for (j, m) in self.modes.iter().enumerate() {
            x[j + 1] = m.left.trace_product(rho).re;
        }
        x
    }

    pub fn quasiprobabilities_from_coordinates(&self, x: &Array1<f64>) -> Vec<f64> {
        self.dual.dot(x).to_vec()
    }

    /// ρ_ss + Σ_j tr(L_j ρ) R_j.
    pub fn project(&self, rho: &FockOperator) -> FockOperator {
        let x = self.coordinates(rho);
        let mut out = self.steady_state.operator().scaled(C64::new(x[0], 0.0));
        for (j, m) in self.modes.iter().enumerate() {
            out.add_scaled(C64::new(x[j + 1], 0.0), &m.right);
        }
        out
    }

    /// Σ_l p_l μ_l.
    pub fn combine(&self, p: &[f64]) -> FockOperator {
        let mut out = FockOperator::zeros(self.steady_state.dim()).expect("valid dimension");
        for (mu, &w) in self.phases.iter().zip(p) {
            out.add_scaled(C64::new(w, 0.0), mu);
        }
        out
    }

    fn evolve_coordinates(&self, x0: &Array1<f64>, t: f64) -> Array1<f64> {
        let mut x = x0.clone();
        let mut j = 0;
        while j < self.modes.len() {
            match self.modes[j].kind {
                Coordinate::Real(l) => {
                    x[j + 1] = x0[j + 1] * (l.re * t).exp();
                    j += 1;
                }
                Coordinate::PairRe(l) => {
                    let z = C64::new(0.5 * x0[j + 1], -0.5 * x0[j + 2]) * (l * t).exp();
                    x[j + 1] = 2.0 * z.re;
                    x[j + 2] = -2.0 * z.im;
                    j += 2;
                }
                Coordinate::PairIm => unreachable!("pair coordinates are consumed together"),
            }
        }
        x
    }
}

/// p_l with Σ p_l μ_l equal to the projection of ρ onto the manifold.
pub fn quasiprobabilities(man: &MetastableManifold, rho: &FockOperator) -> Result<Vec<f64>> {
    if rho.dim() != man.steady_state.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), man.steady_state.dim()));
    }
    Ok(man.quasiprobabilities_from_coordinates(&man.coordinates(rho)))
}

/// p(t) for ρ(t) = ρ_ss + Σ_{j=2..n} tr(L_j†ρ₀) e^{λ_j t} R_j.
pub fn evolve_in_manifold(man: &MetastableManifold, rho0: &FockOperator, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::InvalidParameter(format!("negative time {t}")));
    }
    let x0 = quasiprobabilities(man, rho0).map(|_| man.coordinates(rho0))?;
    Ok(times
        .iter()
        .map(|&t| man.quasiprobabilities_from_coordinates(&man.evolve_coordinates(&x0, t)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{annihilation, expectation, lobe_states, operator_trace_distance};
    use crate::lindblad::{build_liouvillian_general, ModelParams};
    use crate::spectral::decompose;
    use approx::assert_abs_diff_eq;
    use std::sync::OnceLock;

    fn four() -> &'static (SpectralDecomposition, MetastableManifold) {
        static CELL: OnceLock<(SpectralDecomposition, MetastableManifold)> = OnceLock::new();
        CELL.get_or_init(|| {
            let p = ModelParams::symmetric(4, 1.14, 0.1, 30);
            let dec = decompose(&build_liouvillian_general(&p).unwrap(), Some(12)).unwrap();
            let man = build_phases(&dec, 4).unwrap();
            (dec, man)
        })
    }

    #[test]
    fn phases_resemble_lobes() {
        let (dec, man) = four();
        let beta = lobe_amplitude(dec.params()).unwrap();
        let lobes = lobe_states(dec.dim(), beta, 4, 0.0).unwrap();
        for (mu, lobe) in man.phases().iter().zip(&lobes) {
            assert!(operator_trace_distance(mu, lobe).unwrap() <= 0.1);
        }
        for &(lo, hi) in man.extreme_coefficients() {
            assert!(lo < 0.0 && hi > 0.0);
            assert!((lo + hi).abs() <= 0.1 * hi);
        }
    }

    #[test]
    fn dual_basis_and_symmetric_point() {
        let (_, man) = four();
        for (k, mu) in man.phases().iter().enumerate() {
            let p = quasiprobabilities(man, mu).unwrap();
            for (l, v) in p.iter().enumerate() {
                assert_abs_diff_eq!(*v, if k == l { 1.0 } else { 0.0 }, epsilon = 1e-6);
            }
        }
        let p = quasiprobabilities(man, man.steady_state()).unwrap();
        for v in p {
            assert_abs_diff_eq!(v, 0.25, epsilon = 1e-6);
        }
    }

    #[test]
    fn projection_is_idempotent_and_covariant() {
        let (dec, man) = four();
        let rho = coherent_state(dec.dim(), CoherentAmplitude::new(C64::new(0.7, 1.3)).unwrap()).unwrap();
        let p = quasiprobabilities(man, &rho).unwrap();
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-8);
        let again = quasiprobabilities(man, &man.project(&rho)).unwrap();
        for (a, b) in p.iter().zip(&again) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
        let combined = man.combine(&p);
        assert_abs_diff_eq!((&combined - &man.project(&rho)).max_abs(), 0.0, epsilon = 1e-10);
        let rotated = quasiprobabilities(man, &rho.rotated(PI / 2.0)).unwrap();
        for l in 0..4 {
            assert_abs_diff_eq!(rotated[(l + 1) % 4], p[l], epsilon = 1e-6);
        }
    }

    #[test]
    fn midway_state_splits_between_neighbours() {
        let (dec, man) = four();
        let beta = lobe_amplitude(dec.params()).unwrap();
        let rho = coherent_state(dec.dim(), CoherentAmplitude::polar(beta, PI).unwrap()).unwrap();
        let p = quasiprobabilities(man, &rho).unwrap();
        // Phase π sits between lobe 1 (3π/4) and lobe 2 (5π/4).
        assert!((p[0] - 0.5).abs() < 0.1 && (p[1] - 0.5).abs() < 0.1, "{p:?}");
        assert!(p[2].abs() < 0.1 && p[3].abs() < 0.1);
    }

    #[test]
    fn manifold_evolution_limits() {
        let (dec, man) = four();
        let rho = coherent_state(dec.dim(), CoherentAmplitude::new(C64::new(-1.0, 0.5)).unwrap()).unwrap();
        let ps = evolve_in_manifold(man, &rho, &[0.0, 1e7]).unwrap();
        let direct = quasiprobabilities(man, &rho).unwrap();
        for (a, b) in ps[0].iter().zip(&direct) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        for v in &ps[1] {
            assert_abs_diff_eq!(*v, 0.25, epsilon = 1e-8);
        }
    }

    #[test]
    fn three_lobe_pattern_and_populations() {
        let p = ModelParams::symmetric(3, 4.6875, 0.6, 30);
        let dec = decompose(&build_liouvillian_general(&p).unwrap(), Some(6)).unwrap();
        let man = build_phases(&dec, 3).unwrap();
        let (lo, hi) = man.extreme_coefficients()[0];
        assert!((lo / hi + 2.0).abs() <= 0.15 * 2.0, "c_min/c_max = {}", lo / hi);
        let beta = lobe_amplitude(&p).unwrap();
        let a = annihilation(30).unwrap();
        for mu in man.phases() {
            let mean: f64 = mu.matrix().diag().iter().enumerate().map(|(k, z)| k as f64 * z.re).sum();
            assert!((mean / (beta * beta) - 1.0).abs() <= 0.1, "mean photon number {mean}");
            assert!((expectation(&a, mu).unwrap().norm() / beta - 1.0).abs() < 0.1);
        }
    }

    #[test]
    fn gap_gate() {
        let p = ModelParams::symmetric(4, 0.05, 0.1, 12);
        let dec = decompose(&build_liouvillian_general(&p).unwrap(), Some(8)).unwrap();
        assert!(matches!(build_phases(&dec, 4), Err(Error::InsufficientGap(_))));
    }
}
