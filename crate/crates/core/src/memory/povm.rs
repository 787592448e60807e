//! Measurements that read out which lobe a state belongs to.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::fockspace::{operator_trace_distance, DensityMatrix, FockOperator};
use crate::linalg::{self, ln_gamma, C64};
use crate::metastable::MetastableManifold;

/// Largest spectral mass the numerical construction may clip.
pub const NUMERICAL_CLIP_LIMIT: f64 = 0.1;
/// Largest rescaling of the lobe projectors that keeps Π_? positive.
pub const UNAMBIGUOUS_CLIP_BUDGET: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PovmKind {
    AmbiguousTheoretical,
    AmbiguousNumerical,
    Unambiguous,
}

impl PovmKind {
    pub fn name(self) -> &'static str {
        match self {
            PovmKind::AmbiguousTheoretical => "ambiguous_theoretical",
            PovmKind::AmbiguousNumerical => "ambiguous_numerical",
            PovmKind::Unambiguous => "unambiguous",
        }
    }
}

/// Lobe elements first; the unambiguous kind carries one extra inconclusive element.
#[derive(Clone, Debug)]
pub struct Povm {
    kind: PovmKind,
    elements: Vec<FockOperator>,
    clipped_mass: f64,
}

impl Povm {
    pub fn kind(&self) -> PovmKind {
        self.kind
    }

    pub fn elements(&self) -> &[FockOperator] {
        &self.elements
    }

    /// Number of lobe outcomes.
    pub fn lobes(&self) -> usize {
        match self.kind {
            PovmKind::Unambiguous => self.elements.len() - 1,
            _ => self.elements.len(),
        }
    }

    pub fn lobe_element(&self, k: usize) -> &FockOperator {
        &self.elements[k]
    }

    pub fn inconclusive(&self) -> Option<&FockOperator> {
        (self.kind == PovmKind::Unambiguous).then(|| self.elements.last().expect("nonempty"))
    }

    /// Spectral mass removed or rescaled to make the elements positive.
    pub fn clipped_mass(&self) -> f64 {
        self.clipped_mass
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    /// max |Σ E − 𝟙| entrywise.
    pub fn completeness_error(&self) -> f64 {
        let d = self.dim();
        let mut sum = Array2::<C64>::zeros((d, d));
        for e in &self.elements {
            sum += e.matrix();
        }
        sum.indexed_iter()
            .map(|((k, l), z)| (z - if k == l { 1.0 } else { 0.0 }).norm())
            .fold(0.0, f64::max)
    }

    /// tr(E ρ) for every element, in element order.
    pub fn probabilities(&self, rho: &FockOperator) -> Vec<f64> {
        self.elements.iter().map(|e| e.trace_product(rho).re).collect()
    }

    /// Leading dim×dim blocks: a resolution of the identity on the smaller space.
    pub fn truncate(&self, dim: usize) -> Result<Povm> {
        Ok(Povm {
            kind: self.kind,
            elements: self.elements.iter().map(|e| e.truncated(dim)).collect::<Result<_>>()?,
            clipped_mass: self.clipped_mass,
        })
    }
}

/// Sector measurement P_j = (1/π)∫ over the wedge |arg α − φ_j| < π/n of |α⟩⟨α| d²α,
/// φ_j = θ + (2j+1)π/n for j = 1..n, evaluated exactly on the truncated space:
/// ⟨k|P_j|l⟩ = Γ((k+l)/2+1)/√(k!l!) · e^{iφ_j(k−l)} sin(π(k−l)/n)/(π(k−l)), diagonal 1/n.
pub fn ambiguous_povm_theoretical(dim: usize, n: u32, theta: f64) -> Result<Povm> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    if n < 1 {
        return Err(Error::InvalidParameter("n must be ≥ 1".into()));
    }
    let nf = n as f64;
    let radial = |k: usize, l: usize| {
        (ln_gamma((k + l) as f64 / 2.0 + 1.0) - 0.5 * ln_gamma(k as f64 + 1.0) - 0.5 * ln_gamma(l as f64 + 1.0)).exp()
    };
    let elements = (1..=n)
        .map(|j| {
            let phi = theta + PI * (2 * j + 1) as f64 / nf;
            let m = Array2::from_shape_fn((dim, dim), |(k, l)| {
                if k == l {
                    return C64::new(1.0 / nf, 0.0);
                }
                let dk = k as f64 - l as f64;
                let angular = (PI * dk / nf).sin() / (PI * dk);
                C64::from_polar(radial(k, l) * angular, phi * dk)
            });
            FockOperator::from_array(m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Povm { kind: PovmKind::AmbiguousTheoretical, elements, clipped_mass: 0.0 })
}

/// Clips the spectrum of a Hermitian operator to [0, 1]; returns the removed mass.
fn clip_unit_interval(op: &FockOperator) -> Result<(FockOperator, f64)> {
    let (vals, vecs) = op.hermitian_part().hermitian_eigen()?;
    let mut removed = 0.0;
    let clipped: Vec<f64> = vals
        .iter()
        .map(|&v| {
            let c = v.clamp(0.0, 1.0);
            removed += (v - c).abs();
            c
        })
        .collect();
    if removed == 0.0 {
        return Ok((op.hermitian_part(), 0.0));
    }
    let scaled = Array2::from_shape_fn(vecs.dim(), |(r, k)| vecs[[r, k]] * clipped[k]);
    let m = scaled.dot(&vecs.t().mapv(|z| z.conj()));
    Ok((FockOperator::from_array(m)?, removed))
}

/// Elements from the dual functionals of the metastable phases,
/// P_l = d_l0 𝟙 + Σ_j d_lj L_j with tr(P_l ρ) = p_l(ρ). Spectra are clipped to
/// [0, 1] and the completeness defect 𝟙 − ΣP is shared out in proportion to tr P_l.
pub fn ambiguous_povm_numerical(man: &MetastableManifold) -> Result<Povm> {
    let d = man.steady_state().dim();
    let dual = man.dual_matrix();
    let mut raw = Vec::with_capacity(man.n());
    for l in 0..man.n() {
        let mut p = FockOperator::identity(d)?.scaled(C64::new(dual[[l, 0]], 0.0));
        for (j, m) in man.modes().iter().enumerate() {
            p.add_scaled(C64::new(dual[[l, j + 1]], 0.0), &m.left);
        }
        raw.push(p);
    }
    let mut clipped_mass = 0.0;
    let mut elements = Vec::with_capacity(raw.len());
    for p in &raw {
        let (c, removed) = clip_unit_interval(p)?;
        clipped_mass += removed;
        elements.push(c);
    }
    if clipped_mass > NUMERICAL_CLIP_LIMIT {
        return Err(Error::IllConditionedManifold(clipped_mass));
    }
    let mut defect = FockOperator::identity(d)?;
    for e in &elements {
        defect = &defect - e;
    }
    let traces: Vec<f64> = elements.iter().map(|e| e.trace().re).collect();
    let total: f64 = traces.iter().sum();
    for (e, tr) in elements.iter_mut().zip(&traces) {
        let share = if total > 0.0 { tr / total } else { 1.0 / traces.len() as f64 };
        e.add_scaled(C64::new(share, 0.0), &defect);
    }
    Ok(Povm { kind: PovmKind::AmbiguousNumerical, elements, clipped_mass })
}

/// Π_j = s·|β_j⟩⟨β_j| and Π_? = 𝟙 − ΣΠ_j, with s = 1/λ_max(Σ|β_j⟩⟨β_j|) when
/// the lobes overlap enough to make Π_? indefinite. 1 − s is reported as the
/// clipped mass and must stay within the budget.
pub fn unambiguous_povm(lobes: &[DensityMatrix]) -> Result<Povm> {
    if lobes.is_empty() {
        return Err(Error::InvalidParameter("no lobes".into()));
    }
    let d = lobes[0].dim();
    let mut sum = FockOperator::zeros(d)?;
    for lobe in lobes {
        if lobe.dim() != d {
            return Err(Error::DimensionMismatch(lobe.dim(), d));
        }
        sum += lobe.operator();
    }
    let top = linalg::eigvalsh(sum.hermitian_part().matrix())?;
    let lambda_max = top[top.len() - 1];
    let scale = if lambda_max > 1.0 { 1.0 / lambda_max } else { 1.0 };
    let clipped_mass = 1.0 - scale;
    if clipped_mass > UNAMBIGUOUS_CLIP_BUDGET {
        return Err(Error::OverlappingLobes(clipped_mass));
    }
    let mut elements: Vec<FockOperator> = lobes.iter().map(|l| l.operator() * scale).collect();
    let inconclusive = &FockOperator::identity(d)? - &(&sum * scale);
    elements.push(inconclusive);
    Ok(Povm { kind: PovmKind::Unambiguous, elements, clipped_mass })
}

/// Index of the lobe nearest to ρ₀ in trace distance. Ties within 1e−12 go
/// to the lowest index.
pub fn classify(rho0: &FockOperator, lobes: &[DensityMatrix]) -> Result<usize> {
    if lobes.is_empty() {
        return Err(Error::InvalidParameter("no lobes".into()));
    }
    let dist = lobes.iter().map(|l| operator_trace_distance(rho0, l)).collect::<Result<Vec<_>>>()?;
    let min = dist.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(dist.iter().position(|&x| x <= min + 1e-12).expect("nonempty"))
}

/// Mean trace distance between corresponding lobe elements. With `normalized`
/// each element is divided by its trace first, which removes the growth with
/// the truncation dimension.
pub fn mean_element_distance(a: &Povm, b: &Povm, normalized: bool) -> Result<f64> {
    if a.lobes() != b.lobes() {
        return Err(Error::InvalidParameter(format!("{} vs {} lobe elements", a.lobes(), b.lobes())));
    }
    let mut s = 0.0;
    for k in 0..a.lobes() {
        let (x, y) = (a.lobe_element(k), b.lobe_element(k));
        s += if normalized {
            let nx = x.scaled(C64::new(1.0 / x.trace().re, 0.0));
            let ny = y.scaled(C64::new(1.0 / y.trace().re, 0.0));
            operator_trace_distance(&nx, &ny)?
        } else {
            operator_trace_distance(x, y)?
        };
    }
    Ok(s / a.lobes() as f64)
}
