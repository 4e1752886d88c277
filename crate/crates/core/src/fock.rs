//! Truncated Fock-space states and operators, quadrature wavefunctions and
//! homodyne measurement.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CubistError, Result};
use crate::linalg;
use crate::sampling::TabulatedPdf;
use crate::C64;

const NORM_TOL: f64 = 1e-10;
const HERMITE_MAX: usize = 400;

/// Pure state on one or more truncated modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateRepr", into = "StateRepr")]
pub struct StateVector {
    mode_dims: Vec<usize>,
    amplitudes: Vec<C64>,
    normalized: bool,
}

#[derive(Serialize, Deserialize)]
struct StateRepr {
    mode_dims: Vec<usize>,
    amplitudes: Vec<[f64; 2]>,
    normalized: bool,
}

impl From<StateVector> for StateRepr {
    fn from(s: StateVector) -> Self {
        StateRepr {
            mode_dims: s.mode_dims,
            amplitudes: s.amplitudes.iter().map(|c| [c.re, c.im]).collect(),
            normalized: s.normalized,
        }
    }
}

impl TryFrom<StateRepr> for StateVector {
    type Error = CubistError;

    fn try_from(r: StateRepr) -> Result<Self> {
        let amps = r.amplitudes.iter().map(|p| C64::new(p[0], p[1])).collect();
        let mut s = StateVector::new(r.mode_dims, amps)?;
        if r.normalized && !s.normalized {
            return Err(CubistError::Precondition(format!(
                "state marked normalized but has norm² {}",
                s.norm_sqr()
            )));
        }
        s.normalized = r.normalized && s.normalized;
        Ok(s)
    }
}

impl StateVector {
    /// The `normalized` flag is set when the squared norm is within 1e-10 of 1.
    pub fn new(mode_dims: Vec<usize>, amplitudes: Vec<C64>) -> Result<Self> {
        if mode_dims.is_empty() {
            return Err(invalid("state needs at least one mode"));
        }
        if let Some(&d) = mode_dims.iter().find(|&&d| d < 2) {
            return Err(CubistError::InvalidDimension(d));
        }
        let total: usize = mode_dims.iter().product();
        if amplitudes.len() != total {
            return Err(invalid(format!(
                "{} amplitudes for mode dims {:?} (expected {})",
                amplitudes.len(),
                mode_dims,
                total
            )));
        }
        let mut s = StateVector { mode_dims, amplitudes, normalized: false };
        s.normalized = (s.norm_sqr() - 1.0).abs() < NORM_TOL;
        Ok(s)
    }

    /// Degenerate zero-mode result of projecting a single-mode state.
    fn scalar(value: C64) -> Self {
        StateVector { mode_dims: vec![1], amplitudes: vec![value], normalized: false }
    }

    /// Single-mode state from Fock coefficients; padded with zeros to dim 2.
    pub fn from_coefficients(coeffs: &[C64]) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(invalid("empty coefficient list"));
        }
        let mut amps = coeffs.to_vec();
        if amps.len() < 2 {
            amps.resize(2, C64::new(0.0, 0.0));
        }
        let n = amps.len();
        StateVector::new(vec![n], amps)
    }

    pub fn fock(dim: usize, n: usize) -> Result<Self> {
        if dim < 2 {
            return Err(CubistError::InvalidDimension(dim));
        }
        if n >= dim {
            return Err(invalid(format!("Fock level {n} does not fit in dim {dim}")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[n] = C64::new(1.0, 0.0);
        StateVector::new(vec![dim], amps)
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        Self::fock(dim, 0)
    }

    pub fn mode_dims(&self) -> &[usize] {
        &self.mode_dims
    }

    pub fn n_modes(&self) -> usize {
        self.mode_dims.len()
    }

    /// Dimension of a single-mode state (first mode otherwise).
    pub fn dim(&self) -> usize {
        self.mode_dims[0]
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn is_scalar(&self) -> bool {
        self.mode_dims == [1]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n2 = self.norm_sqr();
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(CubistError::Precondition("cannot normalize a zero state".into()));
        }
        let inv = 1.0 / n2.sqrt();
        for a in &mut self.amplitudes {
            *a *= inv;
        }
        self.normalized = true;
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    pub fn require_normalized(&self) -> Result<()> {
        if self.normalized {
            Ok(())
        } else {
            Err(CubistError::Precondition(format!(
                "state is not normalized (norm² = {})",
                self.norm_sqr()
            )))
        }
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes() {
            Err(CubistError::ModeOutOfRange { mode, modes: self.n_modes() })
        } else {
            Ok(())
        }
    }

    fn require_single_mode(&self) -> Result<()> {
        if self.n_modes() != 1 || self.is_scalar() {
            Err(invalid(format!("expected a single-mode state, got dims {:?}", self.mode_dims)))
        } else {
            Ok(())
        }
    }

    /// (outer, dim, inner) sizes around `mode`.
    fn split(&self, mode: usize) -> (usize, usize, usize) {
        let outer: usize = self.mode_dims[..mode].iter().product();
        let inner: usize = self.mode_dims[mode + 1..].iter().product();
        (outer, self.mode_dims[mode], inner)
    }

    /// Zero-pad or crop one mode. Returns the new state and the discarded weight.
    pub fn resize_mode(&self, mode: usize, new_dim: usize) -> Result<(Self, f64)> {
        self.check_mode(mode)?;
        if new_dim < 2 {
            return Err(CubistError::InvalidDimension(new_dim));
        }
        let (outer, dim, inner) = self.split(mode);
        let mut amps = vec![C64::new(0.0, 0.0); outer * new_dim * inner];
        let mut lost = 0.0;
        for o in 0..outer {
            for n in 0..dim {
                for i in 0..inner {
                    let a = self.amplitudes[(o * dim + n) * inner + i];
                    if n < new_dim {
                        amps[(o * new_dim + n) * inner + i] = a;
                    } else {
                        lost += a.norm_sqr();
                    }
                }
            }
        }
        let mut dims = self.mode_dims.clone();
        dims[mode] = new_dim;
        let mut s = StateVector::new(dims, amps)?;
        s.normalized = s.normalized && self.normalized;
        Ok((s, lost))
    }

    /// Single-mode convenience wrapper around [`resize_mode`](Self::resize_mode).
    pub fn resized(&self, new_dim: usize) -> Result<(Self, f64)> {
        self.require_single_mode()?;
        self.resize_mode(0, new_dim)
    }

    /// Applies a one-mode operator to `mode`.
    pub fn apply(&self, op: &OperatorMatrix, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        let (outer, dim, inner) = self.split(mode);
        if op.dim() != dim {
            return Err(invalid(format!("operator dim {} vs mode dim {}", op.dim(), dim)));
        }
        let m = op.entries();
        let mut out = vec![C64::new(0.0, 0.0); self.amplitudes.len()];
        let mut col = vec![C64::new(0.0, 0.0); dim];
        for o in 0..outer {
            for i in 0..inner {
                for n in 0..dim {
                    col[n] = self.amplitudes[(o * dim + n) * inner + i];
                }
                for r in 0..dim {
                    let mut acc = C64::new(0.0, 0.0);
                    for n in 0..dim {
                        acc += m[(r, n)] * col[n];
                    }
                    out[(o * dim + r) * inner + i] = acc;
                }
            }
        }
        let mut s = StateVector { mode_dims: self.mode_dims.clone(), amplitudes: out, normalized: false };
        s.normalized = (s.norm_sqr() - 1.0).abs() < NORM_TOL;
        Ok(s)
    }

    /// Applies a two-mode operator on the ordered pair (`mode_a`, `mode_b`);
    /// the operator's basis index is `ia * dim_b + ib`.
    pub fn apply_two(&self, op: &OperatorMatrix, mode_a: usize, mode_b: usize) -> Result<Self> {
        self.check_mode(mode_a)?;
        self.check_mode(mode_b)?;
        if mode_a == mode_b {
            return Err(invalid("two-mode operator needs distinct modes"));
        }
        let da = self.mode_dims[mode_a];
        let db = self.mode_dims[mode_b];
        if op.dim() != da * db {
            return Err(invalid(format!("operator dim {} vs pair dim {}", op.dim(), da * db)));
        }
        let strides = self.strides();
        let (sa, sb) = (strides[mode_a], strides[mode_b]);
        let m = op.entries();
        let bases = self.bases_excluding(&[mode_a, mode_b]);
        let mut out = vec![C64::new(0.0, 0.0); self.amplitudes.len()];
        let mut block = vec![C64::new(0.0, 0.0); da * db];
        for base in bases {
            for ia in 0..da {
                for ib in 0..db {
                    block[ia * db + ib] = self.amplitudes[base + ia * sa + ib * sb];
                }
            }
            for r in 0..da * db {
                let mut acc = C64::new(0.0, 0.0);
                for (c, b) in block.iter().enumerate() {
                    if b.re != 0.0 || b.im != 0.0 {
                        acc += m[(r, c)] * b;
                    }
                }
                out[base + (r / db) * sa + (r % db) * sb] = acc;
            }
        }
        let mut s = StateVector { mode_dims: self.mode_dims.clone(), amplitudes: out, normalized: false };
        s.normalized = (s.norm_sqr() - 1.0).abs() < NORM_TOL;
        Ok(s)
    }

    pub(crate) fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.n_modes()];
        for k in (0..self.n_modes().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.mode_dims[k + 1];
        }
        strides
    }

    /// Flat offsets of every index tuple with the listed modes held at 0.
    fn bases_excluding(&self, skip: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut bases = vec![0usize];
        for (k, &d) in self.mode_dims.iter().enumerate() {
            if skip.contains(&k) {
                continue;
            }
            let mut next = Vec::with_capacity(bases.len() * d);
            for b in &bases {
                for n in 0..d {
                    next.push(b + n * strides[k]);
                }
            }
            bases = next;
        }
        bases
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.mode_dims != other.mode_dims {
            return Err(invalid(format!(
                "inner product of dims {:?} and {:?}",
                self.mode_dims, other.mode_dims
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// ⟨self|A|self⟩ for a one-mode operator at `mode`.
    pub fn expectation(&self, op: &OperatorMatrix, mode: usize) -> Result<C64> {
        let applied = self.apply(op, mode)?;
        self.inner(&applied)
    }

    /// Weight on Fock levels `>= level` in `mode`.
    pub fn tail_weight(&self, mode: usize, level: usize) -> Result<f64> {
        self.check_mode(mode)?;
        let (outer, dim, inner) = self.split(mode);
        let mut w = 0.0;
        for o in 0..outer {
            for n in level.min(dim)..dim {
                for i in 0..inner {
                    w += self.amplitudes[(o * dim + n) * inner + i].norm_sqr();
                }
            }
        }
        Ok(w)
    }

    /// ⟨X_angle²⟩ of one mode, exact at the given truncation.
    pub fn quadrature_second_moment(&self, mode: usize, angle: f64) -> Result<f64> {
        self.check_mode(mode)?;
        let d = self.mode_dims[mode];
        let (padded, _) = self.resize_mode(mode, d + 1)?;
        let xq = quadrature_op(angle, d + 1)?;
        let applied = padded.apply(&xq, mode)?;
        Ok(applied.norm_sqr() / self.norm_sqr())
    }

    /// Contracts `mode` against the bra with components `kernel[n]`.
    fn contract(&self, mode: usize, kernel: &[C64]) -> Vec<C64> {
        let (outer, dim, inner) = self.split(mode);
        let mut out = vec![C64::new(0.0, 0.0); outer * inner];
        for o in 0..outer {
            for n in 0..dim {
                let k = kernel[n];
                for i in 0..inner {
                    out[o * inner + i] += k * self.amplitudes[(o * dim + n) * inner + i];
                }
            }
        }
        out
    }
}

/// |⟨a|b⟩|² / (‖a‖²‖b‖²)
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    let ov = a.inner(b)?;
    Ok(ov.norm_sqr() / (a.norm_sqr() * b.norm_sqr()))
}

/// Kronecker product, first state outermost.
pub fn tensor(states: &[StateVector]) -> Result<StateVector> {
    let first = states.first().ok_or_else(|| invalid("tensor of an empty list"))?;
    let mut dims = first.mode_dims.clone();
    let mut amps = first.amplitudes.clone();
    for s in &states[1..] {
        let mut next = Vec::with_capacity(amps.len() * s.amplitudes.len());
        for a in &amps {
            for b in &s.amplitudes {
                next.push(a * b);
            }
        }
        amps = next;
        dims.extend_from_slice(&s.mode_dims);
    }
    StateVector::new(dims, amps)
}

/// Dense operator on a truncated space with optional structural tags.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    entries: DMatrix<C64>,
    hermitian: bool,
    unitary: bool,
}

impl OperatorMatrix {
    const HERMITIAN_TOL: f64 = 1e-12;
    const UNITARY_TOL: f64 = 1e-10;

    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(invalid("operator matrix must be square"));
        }
        if entries.nrows() < 1 {
            return Err(CubistError::InvalidDimension(0));
        }
        Ok(OperatorMatrix { entries, hermitian: false, unitary: false })
    }

    /// Tags as hermitian after checking max|A − A†| < 1e-12.
    pub fn hermitian(entries: DMatrix<C64>) -> Result<Self> {
        let mut op = Self::new(entries)?;
        let r = linalg::hermitian_residual(&op.entries);
        if r >= Self::HERMITIAN_TOL {
            return Err(invalid(format!("matrix is not hermitian (residual {r:e})")));
        }
        op.hermitian = true;
        Ok(op)
    }

    /// Tags as unitary after checking max|A†A − I| < 1e-10.
    pub fn unitary(entries: DMatrix<C64>) -> Result<Self> {
        let mut op = Self::new(entries)?;
        let r = linalg::unitary_residual(&op.entries);
        if r >= Self::UNITARY_TOL {
            return Err(invalid(format!("matrix is not unitary (residual {r:e})")));
        }
        op.unitary = true;
        Ok(op)
    }

    pub fn identity(dim: usize) -> Self {
        OperatorMatrix { entries: DMatrix::identity(dim, dim), hermitian: true, unitary: true }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    /// Top-left block; keeps the hermitian tag, drops the unitary one.
    pub fn crop(&self, dim: usize) -> Self {
        OperatorMatrix { entries: linalg::crop(&self.entries, dim), hermitian: self.hermitian, unitary: false }
    }

    pub fn adjoint(&self) -> Self {
        OperatorMatrix { entries: self.entries.adjoint(), hermitian: self.hermitian, unitary: self.unitary }
    }

    /// Product `self · other`; tags propagate only when both factors carry them
    /// (and hermiticity only for a square of the same operator).
    pub fn mul(&self, other: &OperatorMatrix) -> Self {
        let entries = &self.entries * &other.entries;
        let same = std::ptr::eq(self, other);
        OperatorMatrix { entries, hermitian: same && self.hermitian, unitary: self.unitary && other.unitary }
    }

    pub fn hermitian_residual(&self) -> f64 {
        linalg::hermitian_residual(&self.entries)
    }

    pub fn unitary_residual(&self) -> f64 {
        linalg::unitary_residual(&self.entries)
    }
}

/// Lowering and raising operators, `a|n⟩ = √n |n−1⟩`.
pub fn ladder_ops(dim: usize) -> Result<(OperatorMatrix, OperatorMatrix)> {
    if dim < 2 {
        return Err(CubistError::InvalidDimension(dim));
    }
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let ad = a.adjoint();
    Ok((
        OperatorMatrix { entries: a, hermitian: false, unitary: false },
        OperatorMatrix { entries: ad, hermitian: false, unitary: false },
    ))
}

/// Position and momentum quadratures.
pub fn quadrature_ops(dim: usize) -> Result<(OperatorMatrix, OperatorMatrix)> {
    Ok((quadrature_op(0.0, dim)?, quadrature_op(PI / 2.0, dim)?))
}

/// `X cos φ + P sin φ = (a e^{−iφ} + a† e^{iφ})/√2`.
pub fn quadrature_op(angle: f64, dim: usize) -> Result<OperatorMatrix> {
    if dim < 2 {
        return Err(CubistError::InvalidDimension(dim));
    }
    let (s, c) = angle.sin_cos();
    // exact zeros at the axis angles keep X real and P purely imaginary
    let c = if c.abs() < 1e-17 { 0.0 } else { c };
    let s = if s.abs() < 1e-17 { 0.0 } else { s };
    let phase = C64::new(c, -s);
    let mut m = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        let v = (n as f64 / 2.0).sqrt();
        m[(n - 1, n)] = phase * v;
        m[(n, n - 1)] = phase.conj() * v;
    }
    Ok(OperatorMatrix { entries: m, hermitian: true, unitary: false })
}

/// Normalized Hermite function ψₙ(x).
pub fn hermite_wavefunction(n: usize, x: f64) -> Result<f64> {
    if n > HERMITE_MAX {
        return Err(CubistError::HermiteOverflow(n));
    }
    let mut buf = vec![0.0; n + 1];
    hermite_functions(x, &mut buf)?;
    Ok(buf[n])
}

/// Fills `out[n] = ψₙ(x)` for `n < out.len()` with the normalized recurrence
/// ψₙ₊₁ = √(2/(n+1)) x ψₙ − √(n/(n+1)) ψₙ₋₁.
pub fn hermite_functions(x: f64, out: &mut [f64]) -> Result<()> {
    let len = out.len();
    if len == 0 {
        return Ok(());
    }
    if len - 1 > HERMITE_MAX {
        return Err(CubistError::HermiteOverflow(len - 1));
    }
    out[0] = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if len > 1 {
        out[1] = std::f64::consts::SQRT_2 * x * out[0];
    }
    for n in 1..len.saturating_sub(1) {
        let nf = n as f64;
        out[n + 1] = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
    }
    Ok(())
}

/// ⟨x_φ = v|n⟩ = e^{−inφ} ψₙ(v) for `n < dim`.
fn quadrature_kernel(dim: usize, angle: f64, v: f64, herm: &mut Vec<f64>) -> Result<Vec<C64>> {
    herm.resize(dim, 0.0);
    hermite_functions(v, herm)?;
    Ok((0..dim)
        .map(|n| C64::from_polar(1.0, -(n as f64) * angle) * herm[n])
        .collect())
}

/// Wavefunction of a single-mode state along the rotated quadrature.
pub fn quadrature_wavefunction(state: &StateVector, angle: f64, v: f64) -> Result<C64> {
    state.require_single_mode()?;
    let mut herm = Vec::new();
    let k = quadrature_kernel(state.dim(), angle, v, &mut herm)?;
    Ok(k.iter().zip(state.amplitudes()).map(|(a, b)| a * b).sum())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("grid must be strictly increasing"));
    }
    Ok(())
}

/// Marginal density of `x cos(angle) + p sin(angle)` on `mode`.
pub fn homodyne_pdf(state: &StateVector, mode: usize, angle: f64, grid: &[f64]) -> Result<Vec<f64>> {
    state.require_normalized()?;
    state.check_mode(mode)?;
    check_grid(grid)?;
    let dim = state.mode_dims[mode];
    let mut herm = Vec::new();
    grid.iter()
        .map(|&v| {
            let k = quadrature_kernel(dim, angle, v, &mut herm)?;
            Ok(state.contract(mode, &k).iter().map(|a| a.norm_sqr()).sum())
        })
        .collect()
}

/// Unnormalized conditional state of the other modes after observing `value`,
/// together with its squared norm (the marginal density at `value`).
/// Projecting a single-mode state yields a dim-1 scalar wrapper.
pub fn project_quadrature(
    state: &StateVector,
    mode: usize,
    angle: f64,
    value: f64,
) -> Result<(StateVector, f64)> {
    state.require_normalized()?;
    project_unchecked(state, mode, angle, value)
}

fn project_unchecked(state: &StateVector, mode: usize, angle: f64, value: f64) -> Result<(StateVector, f64)> {
    state.check_mode(mode)?;
    let dim = state.mode_dims[mode];
    let mut herm = Vec::new();
    let k = quadrature_kernel(dim, angle, value, &mut herm)?;
    let reduced = state.contract(mode, &k);
    let density: f64 = reduced.iter().map(|a| a.norm_sqr()).sum();
    if state.n_modes() == 1 {
        return Ok((StateVector::scalar(reduced[0]), density));
    }
    let mut dims = state.mode_dims.clone();
    dims.remove(mode);
    let mut s = StateVector::new(dims, reduced)?;
    s.normalized = false;
    Ok((s, density))
}

/// Tabulation window for homodyne sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub bins: usize,
}

impl GridSpec {
    pub const DEFAULT_BINS: usize = 4096;
    pub const DEFAULT_SIGMAS: f64 = 8.0;

    /// `[−8σ, 8σ]` with σ² = ⟨X_angle²⟩, 4096 bins.
    pub fn auto(state: &StateVector, mode: usize, angle: f64) -> Result<Self> {
        let sigma = state.quadrature_second_moment(mode, angle)?.sqrt();
        Ok(GridSpec {
            min: -Self::DEFAULT_SIGMAS * sigma,
            max: Self::DEFAULT_SIGMAS * sigma,
            bins: Self::DEFAULT_BINS,
        })
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = (self.max - self.min) / self.bins as f64;
        (0..=self.bins).map(|j| self.min + h * j as f64).collect()
    }
}

/// Tabulated marginal of one quadrature, reusable for many draws.
#[derive(Debug, Clone)]
pub struct HomodyneSampler<'a> {
    state: &'a StateVector,
    mode: usize,
    angle: f64,
    table: TabulatedPdf,
}

impl<'a> HomodyneSampler<'a> {
    pub const MIN_MASS: f64 = 0.999;

    pub fn new(state: &'a StateVector, mode: usize, angle: f64, grid: Option<GridSpec>) -> Result<Self> {
        state.require_normalized()?;
        let grid = match grid {
            Some(g) => g,
            None => GridSpec::auto(state, mode, angle)?,
        };
        if grid.bins < 1 || !(grid.max > grid.min) {
            return Err(invalid("homodyne grid needs max > min and at least one bin"));
        }
        let nodes = grid.nodes();
        let pdf = homodyne_pdf(state, mode, angle, &nodes)?;
        let table = TabulatedPdf::new(nodes, pdf)?;
        let mass = table.total_mass();
        if mass < Self::MIN_MASS {
            return Err(CubistError::Coverage(format!(
                "homodyne grid [{}, {}] holds only {mass} of the marginal",
                grid.min, grid.max
            )));
        }
        Ok(HomodyneSampler { state, mode, angle, table })
    }

    pub fn table(&self) -> &TabulatedPdf {
        &self.table
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.table.sample(rng)
    }

    /// Normalized conditional state of the remaining modes.
    pub fn conditional(&self, value: f64) -> Result<StateVector> {
        let (mut s, density) = project_unchecked(self.state, self.mode, self.angle, value)?;
        if !(density > 0.0) {
            return Err(CubistError::Coverage(format!("zero density at sampled value {value}")));
        }
        if s.is_scalar() {
            s.amplitudes[0] /= density.sqrt();
            return Ok(s);
        }
        s.normalize()?;
        Ok(s)
    }
}

/// Draws a homodyne outcome and returns it with the normalized conditional state.
pub fn sample_homodyne<R: Rng + ?Sized>(
    state: &StateVector,
    mode: usize,
    angle: f64,
    rng: &mut R,
    grid: Option<GridSpec>,
) -> Result<(f64, StateVector)> {
    let sampler = HomodyneSampler::new(state, mode, angle, grid)?;
    let v = sampler.draw(rng);
    Ok((v, sampler.conditional(v)?))
}
