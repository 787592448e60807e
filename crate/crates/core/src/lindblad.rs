//! Model parameters, Hamiltonian and Liouvillian superoperator.
//!
//! Vectorization is column stacking: ρ_kl sits at index k + D·l. The
//! generator is written as 𝓛ρ = Aρ + ρA† + Σ γ OρO† with
//! A = −iH − ½Σ γ O†O, so a dense entry reads
//! 𝓛[(k,l),(k',l')] = A_kk' δ_ll' + δ_kk' conj(A_ll') + Σ γ O_kk' conj(O_ll').
//!
//! Every term conserves (k − l) mod n, which splits the superoperator into
//! n independent sector blocks.

use ndarray::{Array1, Array2};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::{annihilation, default_dimension, number_operator, FockOperator};
use crate::linalg::{c, C64, I};

fn default_delta() -> f64 {
    0.4
}

fn default_gamma1() -> f64 {
    1.0
}

/// Physical parameters in units of γ₁.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Drive order.
    pub n: u32,
    /// Nonlinear dissipation order.
    pub m: u32,
    /// Detuning.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Drive strength.
    pub eta: f64,
    /// Drive phase (radians).
    #[serde(default)]
    pub theta: f64,
    /// Linear loss rate.
    #[serde(default = "default_gamma1")]
    pub gamma1: f64,
    /// Nonlinear loss rate.
    pub gamma_m: f64,
    /// Fock truncation; 0 selects the default from the lobe amplitude.
    #[serde(default)]
    pub dim: usize,
}

impl ModelParams {
    /// n = m model with the conventional Δ = 0.4, θ = 0, γ₁ = 1.
    pub fn symmetric(n: u32, eta: f64, gamma_n: f64, dim: usize) -> Self {
        Self { n, m: n, delta: 0.4, eta, theta: 0.0, gamma1: 1.0, gamma_m: gamma_n, dim }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 || self.m < 1 {
            return Err(Error::InvalidParameter(format!("orders must be ≥ 1 (n={}, m={})", self.n, self.m)));
        }
        for (name, v) in [("delta", self.delta), ("eta", self.eta), ("theta", self.theta)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} is not finite")));
            }
        }
        for (name, v) in [("eta", self.eta), ("gamma1", self.gamma1), ("gamma_m", self.gamma_m)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be a finite nonnegative rate, got {v}")));
            }
        }
        if self.dim < 2 {
            return Err(Error::InvalidDimension(self.dim));
        }
        Ok(())
    }

    /// Replaces dim = 0 by the Poisson-tail default for the lobe amplitude.
    pub fn with_resolved_dimension(mut self) -> Result<Self> {
        if self.dim == 0 {
            let beta = lobe_amplitude(&self)?;
            self.dim = default_dimension(beta);
        }
        Ok(self)
    }

    /// Phase offset of the lobes for this Hamiltonian's drive convention.
    ///
    /// The drive term iη(âⁿe^{iθn} − h.c.) pins the lobes at
    /// (2j+1)π/n − θ, so this is what lobe constructors take as `theta`.
    pub fn lobe_offset(&self) -> f64 {
        -self.theta
    }
}

/// Ĥ = Δ â†â + iη(âⁿ e^{iθn} − (â†)ⁿ e^{−iθn}).
pub fn build_hamiltonian(params: &ModelParams) -> Result<FockOperator> {
    params.validate()?;
    let d = params.dim;
    let num = number_operator(d)?;
    let mut h = &num * params.delta;
    if params.eta != 0.0 {
        let an = power(&annihilation(d)?, params.n);
        let phase = C64::from_polar(1.0, params.theta * params.n as f64);
        let drive = &an.scaled(phase) - &an.adjoint().scaled(phase.conj());
        h.add_scaled(I * params.eta, &drive);
    }
    Ok(h)
}

fn power(op: &FockOperator, k: u32) -> FockOperator {
    let mut out = FockOperator::identity(op.dim()).expect("dimension already validated");
    for _ in 0..k {
        out = out.dot(op);
    }
    out
}

/// OρO† − ½(O†Oρ + ρO†O).
pub fn dissipator_apply(jump: &FockOperator, rho: &FockOperator) -> Result<FockOperator> {
    if jump.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(jump.dim(), rho.dim()));
    }
    let od = jump.adjoint();
    let odo = od.dot(jump);
    let anti = &odo.dot(rho) + &rho.dot(&odo);
    Ok(&jump.dot(rho).dot(&od) - &(&anti * 0.5))
}

/// Amplitude of the n lobes, (2nη/(mγ_m))^{1/(2m−n)}.
pub fn lobe_amplitude(params: &ModelParams) -> Result<f64> {
    let (n, m) = (params.n as i64, params.m as i64);
    if n >= 2 * m {
        return Err(Error::RegimeNotSupported(format!("n={n} ≥ 2m={}", 2 * m)));
    }
    if params.eta == 0.0 {
        return Ok(0.0);
    }
    if params.gamma_m <= 0.0 {
        return Err(Error::DivisionByZero("lobe amplitude needs γ_m > 0".into()));
    }
    Ok((2.0 * n as f64 * params.eta / (m as f64 * params.gamma_m)).powf(1.0 / (2 * m - n) as f64))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum LiouvillianForm {
    #[default]
    General,
    Shifted,
}

#[derive(Clone, Debug)]
pub struct Jump {
    pub rate: f64,
    pub op: FockOperator,
}

/// Lindblad generator with its parameters. Dense matrices are assembled on
/// demand, per symmetry sector or in full.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    params: ModelParams,
    form: LiouvillianForm,
    hamiltonian: FockOperator,
    jumps: Vec<Jump>,
    effective: FockOperator,
    symmetry_order: usize,
}

/// −i[Ĥ, ·] + γ₁𝒟[â] + γ_m𝒟[â^m].
pub fn build_liouvillian_general(params: &ModelParams) -> Result<Liouvillian> {
    let h = build_hamiltonian(params)?;
    let d = params.dim;
    let a = annihilation(d)?;
    let mut jumps = Vec::new();
    if params.gamma1 > 0.0 {
        jumps.push(Jump { rate: params.gamma1, op: a.clone() });
    }
    if params.gamma_m > 0.0 {
        jumps.push(Jump { rate: params.gamma_m, op: power(&a, params.m) });
    }
    Ok(Liouvillian::assemble(params.clone(), LiouvillianForm::General, h, jumps))
}

/// −iΔ[â†â, ·] + γ₁𝒟[â] + γ_n𝒟[âⁿ − βⁿ] with βⁿ = 2ηe^{iθn}/γ_n.
pub fn build_liouvillian_shifted(params: &ModelParams) -> Result<Liouvillian> {
    params.validate()?;
    if params.m != params.n {
        return Err(Error::UnsupportedForm(format!("shifted form needs m = n (n={}, m={})", params.n, params.m)));
    }
    if params.gamma_m == 0.0 {
        return Err(Error::DivisionByZero("shifted form needs γ_n > 0".into()));
    }
    let d = params.dim;
    let h = &number_operator(d)? * params.delta;
    let a = annihilation(d)?;
    let beta_n = C64::from_polar(2.0 * params.eta / params.gamma_m, params.theta * params.n as f64);
    let shifted = &power(&a, params.n) - &FockOperator::identity(d)?.scaled(beta_n);
    let mut jumps = Vec::new();
    if params.gamma1 > 0.0 {
        jumps.push(Jump { rate: params.gamma1, op: a });
    }
    jumps.push(Jump { rate: params.gamma_m, op: shifted });
    Ok(Liouvillian::assemble(params.clone(), LiouvillianForm::Shifted, h, jumps))
}

impl Liouvillian {
    fn assemble(params: ModelParams, form: LiouvillianForm, hamiltonian: FockOperator, jumps: Vec<Jump>) -> Self {
        let mut effective = hamiltonian.scaled(-I);
        for j in &jumps {
            effective.add_scaled(c(-0.5 * j.rate), &j.op.adjoint().dot(&j.op));
        }
        let symmetry_order = params.n as usize;
        Self { params, form, hamiltonian, jumps, effective, symmetry_order }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn form(&self) -> LiouvillianForm {
        self.form
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    pub fn hamiltonian(&self) -> &FockOperator {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    /// Order of the phase-rotation symmetry used to block the matrix.
    pub fn symmetry_order(&self) -> usize {
        self.symmetry_order
    }

    /// Same generator, blocked with a different symmetry order (1 = unblocked).
    /// The order must divide n.
    pub fn with_symmetry_order(mut self, order: usize) -> Result<Self> {
        if order == 0 || self.params.n as usize % order != 0 {
            return Err(Error::InvalidParameter(format!("symmetry order {order} does not divide n={}", self.params.n)));
        }
        self.symmetry_order = order;
        Ok(self)
    }

    /// 𝓛ρ.
    pub fn apply(&self, rho: &FockOperator) -> FockOperator {
        let a = &self.effective;
        let mut out = &a.dot(rho) + &rho.dot(&a.adjoint());
        for j in &self.jumps {
            out.add_scaled(c(j.rate), &j.op.dot(rho).dot(&j.op.adjoint()));
        }
        out
    }

    /// Heisenberg-picture generator 𝓛†X = A†X + XA + Σγ O†XO.
    pub fn apply_adjoint(&self, x: &FockOperator) -> FockOperator {
        let ad = self.effective.adjoint();
        let mut out = &ad.dot(x) + &x.dot(&self.effective);
        for j in &self.jumps {
            out.add_scaled(c(j.rate), &j.op.adjoint().dot(x).dot(&j.op));
        }
        out
    }

    pub fn layout(&self) -> SectorLayout {
        SectorLayout::new(self.dim(), self.symmetry_order)
    }

    fn entry(&self, (k, l): (usize, usize), (kp, lp): (usize, usize)) -> C64 {
        let a = self.effective.matrix();
        let mut v = C64::new(0.0, 0.0);
        if l == lp {
            v += a[[k, kp]];
        }
        if k == kp {
            v += a[[l, lp]].conj();
        }
        for j in &self.jumps {
            let o = j.op.matrix();
            let x = o[[k, kp]];
            if x != C64::new(0.0, 0.0) {
                v += x * o[[l, lp]].conj() * j.rate;
            }
        }
        v
    }

    /// Dense block of the sector with (k − l) mod order = q.
    pub fn sector_block(&self, layout: &SectorLayout, q: usize) -> Array2<C64> {
        let members = layout.members(q);
        let b = members.len();
        let mut out = Array2::zeros((b, b));
        for (j, &col) in members.iter().enumerate() {
            for (i, &row) in members.iter().enumerate() {
                out[[i, j]] = self.entry(row, col);
            }
        }
        out
    }

    /// Full D²×D² superoperator in column-stacking order.
    pub fn matrix(&self) -> Array2<C64> {
        let d = self.dim();
        let mut out = Array2::zeros((d * d, d * d));
        for lp in 0..d {
            for kp in 0..d {
                for l in 0..d {
                    for k in 0..d {
                        out[[k + d * l, kp + d * lp]] = self.entry((k, l), (kp, lp));
                    }
                }
            }
        }
        out
    }

    /// Frobenius norm of the superoperator, from its sector blocks.
    pub fn frobenius_norm(&self) -> f64 {
        let layout = self.layout();
        (0..layout.order())
            .map(|q| self.sector_block(&layout, q).iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

/// Partition of the D² matrix units |k⟩⟨l| by (k − l) mod order, each sector
/// listed in column-stacking order.
#[derive(Clone, Debug)]
pub struct SectorLayout {
    dim: usize,
    order: usize,
    members: Vec<Vec<(usize, usize)>>,
    slot: Vec<(usize, usize)>,
}

impl SectorLayout {
    pub fn new(dim: usize, order: usize) -> Self {
        let order = order.max(1);
        let mut members = vec![Vec::new(); order];
        let mut slot = vec![(0, 0); dim * dim];
        for l in 0..dim {
            for k in 0..dim {
                let q = sector_of(k, l, order);
                slot[k + dim * l] = (q, members[q].len());
                members[q].push((k, l));
            }
        }
        Self { dim, order, members, slot }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn members(&self, q: usize) -> &[(usize, usize)] {
        &self.members[q]
    }

    /// (sector, position within sector) of |k⟩⟨l|.
    pub fn slot(&self, k: usize, l: usize) -> (usize, usize) {
        self.slot[k + self.dim * l]
    }

    /// Sector holding the adjoints of sector q.
    pub fn partner(&self, q: usize) -> usize {
        (self.order - q) % self.order
    }

    /// Sectors that are diagonalized directly; the rest follow by adjoint.
    pub fn canonical_sectors(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.order).filter(move |&q| q <= self.partner(q))
    }

    /// Gathers the sector-q entries of an operator.
    pub fn gather(&self, op: &FockOperator, q: usize) -> Array1<C64> {
        self.members[q].iter().map(|&(k, l)| op.get(k, l)).collect()
    }

    /// Scatters sector-q coefficients into a D×D operator.
    pub fn scatter(&self, coeffs: &[C64], q: usize) -> FockOperator {
        let mut m = Array2::zeros((self.dim, self.dim));
        for (&(k, l), &z) in self.members[q].iter().zip(coeffs) {
            m[[k, l]] = z;
        }
        FockOperator::from_array(m).expect("layout dimension is valid")
    }

    /// Coefficients of X† in the partner sector, given X's sector-q coefficients.
    pub fn adjoint_coeffs(&self, coeffs: &[C64], q: usize) -> Vec<C64> {
        let p = self.partner(q);
        let mut out = vec![C64::new(0.0, 0.0); self.members[p].len()];
        for (&(k, l), &z) in self.members[q].iter().zip(coeffs) {
            let (qq, pos) = self.slot(l, k);
            debug_assert_eq!(qq, p);
            out[pos] = z.conj();
        }
        out
    }
}

fn sector_of(k: usize, l: usize, order: usize) -> usize {
    (k as i64 - l as i64).rem_euclid(order as i64) as usize
}

/// Column-stacked vec(ρ).
pub fn vectorize(op: &FockOperator) -> Array1<C64> {
    op.matrix().t().iter().copied().collect()
}

pub fn unvectorize(v: &Array1<C64>, dim: usize) -> Result<FockOperator> {
    if v.len() != dim * dim {
        return Err(Error::DimensionMismatch(v.len(), dim * dim));
    }
    let m = Array2::from_shape_fn((dim, dim), |(k, l)| v[k + dim * l]);
    FockOperator::from_array(m)
}
