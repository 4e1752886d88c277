//! Gaussian unitaries as truncated Fock matrices and as symplectic maps.

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, CubistError, Result};
use crate::fock::{ladder_ops, quadrature_ops, OperatorMatrix, StateVector};
use crate::linalg;
use crate::C64;

/// Displacement together with a flag raised when `|α|² > dim/4`.
#[derive(Debug, Clone)]
pub struct Displacement {
    pub op: OperatorMatrix,
    pub truncation_risk: bool,
}

/// `D(α) = exp(i√2 Im α X − i√2 Re α P)`.
pub fn displacement_op(alpha: C64, dim: usize) -> Result<Displacement> {
    let (x, p) = quadrature_ops(dim)?;
    let i = C64::new(0.0, 1.0);
    let gen = x.entries() * (i * SQRT_2 * alpha.im) - p.entries() * (i * SQRT_2 * alpha.re);
    let op = OperatorMatrix::unitary(linalg::expm(&gen))?;
    Ok(Displacement { op, truncation_risk: alpha.norm_sqr() > dim as f64 / 4.0 })
}

/// `S(s)` with `S†XS = sX`, `S†PS = P/s`; `s < 1` squeezes X.
pub fn squeeze_op(s: f64, dim: usize) -> Result<OperatorMatrix> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(invalid(format!("squeeze factor must be positive, got {s}")));
    }
    let (a, ad) = ladder_ops(dim)?;
    let r = -s.ln();
    let a2 = a.entries() * a.entries();
    let ad2 = ad.entries() * ad.entries();
    let gen = (a2 - ad2) * C64::new(0.5 * r, 0.0);
    OperatorMatrix::unitary(linalg::expm(&gen))
}

/// `diag(e^{−inθ})`, so that `U†XU = X cos θ + P sin θ`.
pub fn phase_shift_op(theta: f64, dim: usize) -> Result<OperatorMatrix> {
    if dim < 2 {
        return Err(CubistError::InvalidDimension(dim));
    }
    let diag = DVector::from_iterator(dim, (0..dim).map(|n| C64::from_polar(1.0, -(n as f64) * theta)));
    OperatorMatrix::unitary(DMatrix::from_diagonal(&diag))
}

/// Two-mode beam splitter `exp(ϑ(a b† − a† b))`, `cos ϑ = √T`, acting as
/// `x_a → √T x_a − √R x_b`, `x_b → √R x_a + √T x_b`. Basis index `ia·dim_b + ib`.
///
/// The generator conserves `n_a + n_b`, so each photon-number sector is
/// exponentiated on its own.
pub fn beam_splitter_op(t: f64, dim_a: usize, dim_b: usize) -> Result<OperatorMatrix> {
    if !(t > 0.0 && t < 1.0) {
        return Err(invalid(format!("transmittance must lie in (0,1), got {t}")));
    }
    if dim_a < 2 {
        return Err(CubistError::InvalidDimension(dim_a));
    }
    if dim_b < 2 {
        return Err(CubistError::InvalidDimension(dim_b));
    }
    let theta = t.sqrt().acos();
    let n = dim_a * dim_b;
    let mut full = DMatrix::zeros(n, n);
    for total in 0..(dim_a + dim_b - 1) {
        let members: Vec<(usize, usize)> = (0..dim_a)
            .filter_map(|ia| total.checked_sub(ia).filter(|&ib| ib < dim_b).map(|ib| (ia, ib)))
            .collect();
        let k = members.len();
        let mut gen = DMatrix::<C64>::zeros(k, k);
        // members are ordered by ia; a b† moves (ia, ib) → (ia − 1, ib + 1)
        for (col, &(ia, ib)) in members.iter().enumerate() {
            if ia >= 1 && ib + 1 < dim_b {
                let row = col - 1;
                gen[(row, col)] += C64::new(theta * ((ia * (ib + 1)) as f64).sqrt(), 0.0);
            }
            if ib >= 1 && ia + 1 < dim_a {
                let row = col + 1;
                gen[(row, col)] -= C64::new(theta * (((ia + 1) * ib) as f64).sqrt(), 0.0);
            }
        }
        let block = linalg::expm(&gen);
        for (r, &(ra, rb)) in members.iter().enumerate() {
            for (c, &(ca, cb)) in members.iter().enumerate() {
                full[(ra * dim_b + rb, ca * dim_b + cb)] = block[(r, c)];
            }
        }
    }
    OperatorMatrix::unitary(full)
}

/// Coherent state `|α⟩` from its Fock expansion, renormalized after truncation.
pub fn coherent_state(alpha: C64, dim: usize) -> Result<StateVector> {
    if dim < 2 {
        return Err(CubistError::InvalidDimension(dim));
    }
    let mut amps = Vec::with_capacity(dim);
    let mut term = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            term = term * alpha / (n as f64).sqrt();
        }
        amps.push(term);
    }
    StateVector::new(vec![dim], amps)?.normalized()
}

/// Squeezed vacuum `S(s)|0⟩` built at a padded dimension and cropped to `dim`.
/// Returns the state (renormalized) and the weight lost to the crop.
pub fn squeezed_vacuum(s: f64, dim: usize) -> Result<(StateVector, f64)> {
    let work = 2 * dim + 40;
    let op = squeeze_op(s, work)?;
    let vac = StateVector::vacuum(work)?;
    let sq = vac.apply(&op, 0)?;
    let (mut cropped, lost) = sq.resized(dim)?;
    cropped.normalize()?;
    Ok((cropped, lost))
}

/// Affine map on quadratures ordered `(x₁, p₁, …, x_m, p_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMap {
    matrix: DMatrix<f64>,
    displacement: DVector<f64>,
}

impl SymplecticMap {
    pub const TOL: f64 = 1e-12;

    pub fn new(matrix: DMatrix<f64>, displacement: DVector<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || n % 2 != 0 || matrix.ncols() != n || displacement.len() != n {
            return Err(invalid("symplectic map needs a 2m×2m matrix and a 2m displacement"));
        }
        let map = SymplecticMap { matrix, displacement };
        let r = map.symplectic_residual();
        if r >= 1e-10 {
            return Err(invalid(format!("matrix is not symplectic (residual {r:e})")));
        }
        Ok(map)
    }

    pub fn identity(modes: usize) -> Self {
        SymplecticMap {
            matrix: DMatrix::identity(2 * modes, 2 * modes),
            displacement: DVector::zeros(2 * modes),
        }
    }

    pub fn modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn displacement(&self) -> &DVector<f64> {
        &self.displacement
    }

    /// Row of the matrix giving the output quadrature `index`.
    pub fn row(&self, index: usize) -> Vec<f64> {
        self.matrix.row(index).iter().copied().collect()
    }

    pub fn apply(&self, quads: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(quads);
        (&self.matrix * v + &self.displacement).iter().copied().collect()
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &SymplecticMap) -> SymplecticMap {
        SymplecticMap {
            matrix: &self.matrix * &first.matrix,
            displacement: &self.matrix * &first.displacement + &self.displacement,
        }
    }

    /// max |S J Sᵀ − J|
    pub fn symplectic_residual(&self) -> f64 {
        let j = omega(self.modes());
        let diff = &self.matrix * &j * self.matrix.transpose() - &j;
        diff.amax()
    }

    /// Places a map acting on `local_modes` into an `m`-mode identity.
    pub fn embed(&self, local_modes: &[usize], m: usize) -> Result<SymplecticMap> {
        if local_modes.len() != self.modes() || local_modes.iter().any(|&k| k >= m) {
            return Err(invalid("embedding modes do not match the map"));
        }
        let mut out = SymplecticMap::identity(m);
        for (li, &gi) in local_modes.iter().enumerate() {
            for q in 0..2 {
                out.displacement[2 * gi + q] = self.displacement[2 * li + q];
                for (lj, &gj) in local_modes.iter().enumerate() {
                    for r in 0..2 {
                        out.matrix[(2 * gi + q, 2 * gj + r)] = self.matrix[(2 * li + q, 2 * lj + r)];
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn displacement_of(alpha: C64) -> Self {
        SymplecticMap {
            matrix: DMatrix::identity(2, 2),
            displacement: DVector::from_vec(vec![SQRT_2 * alpha.re, SQRT_2 * alpha.im]),
        }
    }

    pub fn squeeze(s: f64) -> Self {
        SymplecticMap {
            matrix: DMatrix::from_row_slice(2, 2, &[s, 0.0, 0.0, 1.0 / s]),
            displacement: DVector::zeros(2),
        }
    }

    pub fn phase_shift(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        SymplecticMap {
            matrix: DMatrix::from_row_slice(2, 2, &[c, s, -s, c]),
            displacement: DVector::zeros(2),
        }
    }

    pub fn beam_splitter(t: f64) -> Self {
        let (st, sr) = (t.sqrt(), (1.0 - t).sqrt());
        #[rustfmt::skip]
        let m = DMatrix::from_row_slice(4, 4, &[
            st, 0.0, -sr, 0.0,
            0.0, st, 0.0, -sr,
            sr, 0.0, st, 0.0,
            0.0, sr, 0.0, st,
        ]);
        SymplecticMap { matrix: m, displacement: DVector::zeros(4) }
    }
}

/// Block-diagonal symplectic form.
pub fn omega(modes: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        j[(2 * k, 2 * k + 1)] = 1.0;
        j[(2 * k + 1, 2 * k)] = -1.0;
    }
    j
}

/// Three-mode map of BS(T1) on modes (0,1) followed by BS(T2) on (1,2).
pub fn symplectic_of_circuit(t1: f64, t2: f64) -> Result<SymplecticMap> {
    for t in [t1, t2] {
        if !(t > 0.0 && t < 1.0) {
            return Err(invalid(format!("transmittance must lie in (0,1), got {t}")));
        }
    }
    let bs1 = SymplecticMap::beam_splitter(t1).embed(&[0, 1], 3)?;
    let bs2 = SymplecticMap::beam_splitter(t2).embed(&[1, 2], 3)?;
    Ok(bs2.after(&bs1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::tensor;

    fn mean_xp(s: &StateVector, mode: usize) -> (f64, f64) {
        let d = s.mode_dims()[mode];
        let (x, p) = quadrature_ops(d).unwrap();
        (s.expectation(&x, mode).unwrap().re, s.expectation(&p, mode).unwrap().re)
    }

    #[test]
    fn displacement_examples() {
        let d0 = displacement_op(C64::new(0.0, 0.0), 10).unwrap();
        assert!((d0.op.entries() - DMatrix::<C64>::identity(10, 10)).camax() < 1e-15);
        let d = displacement_op(C64::new(0.5, 0.0), 30).unwrap();
        assert!(!d.truncation_risk);
        let coh = StateVector::vacuum(30).unwrap().apply(&d.op, 0).unwrap();
        assert!((mean_xp(&coh, 0).0 - SQRT_2 * 0.5).abs() < 1e-8);
        let a = C64::new(0.3, 0.2);
        let prod = displacement_op(a, 30).unwrap().op.entries() * displacement_op(-a, 30).unwrap().op.entries();
        assert!((prod - DMatrix::<C64>::identity(30, 30)).camax() < 1e-10);
        assert!(displacement_op(C64::new(2.0, 0.0), 8).unwrap().truncation_risk);
    }

    #[test]
    fn displacement_matches_coherent_expansion() {
        let a = C64::new(0.4, -0.3);
        let via_op = StateVector::vacuum(40).unwrap().apply(&displacement_op(a, 40).unwrap().op, 0).unwrap();
        let direct = coherent_state(a, 40).unwrap();
        assert!((via_op.inner(&direct).unwrap().norm() - 1.0).abs() < 1e-12);
        // same global phase too: D(α)|0⟩ has real positive vacuum component
        assert!((via_op.amplitudes()[0] - direct.amplitudes()[0]).norm() < 1e-12);
    }

    #[test]
    fn squeeze_examples() {
        let id = squeeze_op(1.0, 12).unwrap();
        assert!((id.entries() - DMatrix::<C64>::identity(12, 12)).camax() < 1e-15);
        let s = 10f64.powf(-10.0 / 20.0);
        let sq = StateVector::vacuum(60).unwrap().apply(&squeeze_op(s, 60).unwrap(), 0).unwrap();
        let (x, _) = quadrature_ops(60).unwrap();
        let var = x.entries() * x.entries();
        let v: C64 = sq.amplitudes().iter().enumerate().map(|(m, am)| {
            sq.amplitudes().iter().enumerate().map(|(n, an)| am.conj() * var[(m, n)] * an).sum::<C64>()
        }).sum();
        assert!((v.re - 0.05).abs() < 1e-4);
        let prod = squeeze_op(1.3, 40).unwrap().entries() * squeeze_op(1.0 / 1.3, 40).unwrap().entries();
        assert!((prod - DMatrix::<C64>::identity(40, 40)).camax() < 1e-8);
        assert!(squeeze_op(0.0, 4).is_err());
        assert!(squeeze_op(-1.0, 4).is_err());
    }

    #[test]
    fn phase_examples() {
        assert!((phase_shift_op(0.0, 6).unwrap().entries() - DMatrix::<C64>::identity(6, 6)).camax() < 1e-15);
        assert!(
            (phase_shift_op(2.0 * std::f64::consts::PI, 6).unwrap().entries() - DMatrix::<C64>::identity(6, 6))
                .camax()
                < 1e-13
        );
        let coh = coherent_state(C64::new(0.7, 0.2), 40).unwrap();
        let (x0, p0) = mean_xp(&coh, 0);
        let rotated = coh.apply(&phase_shift_op(std::f64::consts::FRAC_PI_2, 40).unwrap(), 0).unwrap();
        let (x1, _) = mean_xp(&rotated, 0);
        assert!((x1 - p0).abs() < 1e-10, "{x1} vs {p0} (x0 = {x0})");
    }

    #[test]
    fn beam_splitter_examples() {
        let bs = beam_splitter_op(0.5, 4, 4).unwrap();
        let input = tensor(&[StateVector::fock(4, 1).unwrap(), StateVector::vacuum(4).unwrap()]).unwrap();
        let out = input.apply_two(&bs, 0, 1).unwrap();
        let s = 0.5f64.sqrt();
        assert!((out.amplitudes()[4] - C64::new(s, 0.0)).norm() < 1e-12); // |1,0⟩
        assert!((out.amplitudes()[1] - C64::new(s, 0.0)).norm() < 1e-12); // |0,1⟩

        // swapping the port roles inverts the splitter
        let fwd = input.apply_two(&bs, 0, 1).unwrap();
        let back = fwd.apply_two(&bs, 1, 0).unwrap();
        for (a, b) in back.amplitudes().iter().zip(input.amplitudes()) {
            assert!((a - b).norm() < 1e-10);
        }
        assert!(bs.unitary_residual() < 1e-10);
        assert!(beam_splitter_op(1.0, 4, 4).is_err());
        assert!(beam_splitter_op(0.0, 4, 4).is_err());
    }

    #[test]
    fn beam_splitter_heisenberg_on_coherent_means() {
        let t = 0.3;
        let dim = 24;
        let (a, b) = (C64::new(0.5, -0.2), C64::new(-0.3, 0.4));
        let input = tensor(&[coherent_state(a, dim).unwrap(), coherent_state(b, dim).unwrap()]).unwrap();
        let out = input.apply_two(&beam_splitter_op(t, dim, dim).unwrap(), 0, 1).unwrap();
        let (xa, pa) = mean_xp(&input, 0);
        let (xb, pb) = mean_xp(&input, 1);
        let expect = SymplecticMap::beam_splitter(t).apply(&[xa, pa, xb, pb]);
        let (xa2, pa2) = mean_xp(&out, 0);
        let (xb2, pb2) = mean_xp(&out, 1);
        for (got, want) in [xa2, pa2, xb2, pb2].iter().zip(&expect) {
            assert!((got - want).abs() < 1e-8);
        }
    }

    #[test]
    fn circuit_rows_balanced() {
        let m = symplectic_of_circuit(0.5, 0.5).unwrap();
        let s = 0.5f64.sqrt();
        let want0 = [s, 0.0, -s, 0.0, 0.0, 0.0];
        let want2 = [0.5, 0.0, 0.5, 0.0, s, 0.0];
        for (g, w) in m.row(0).iter().zip(&want0) {
            assert!((g - w).abs() < 1e-15);
        }
        for (g, w) in m.row(4).iter().zip(&want2) {
            assert!((g - w).abs() < 1e-15);
        }
    }

    #[test]
    fn circuit_rows_general() {
        let (t1, t2) = (0.6, 0.7);
        let (r1, r2) = (1.0 - t1, 1.0 - t2);
        let m = symplectic_of_circuit(t1, t2).unwrap();
        let x1 = [(r1 * t2).sqrt(), 0.0, (t1 * t2).sqrt(), 0.0, -r2.sqrt(), 0.0];
        let x2 = [(r1 * r2).sqrt(), 0.0, (t1 * r2).sqrt(), 0.0, t2.sqrt(), 0.0];
        for (g, w) in m.row(2).iter().zip(&x1) {
            assert!((g - w).abs() < 1e-15);
        }
        for (g, w) in m.row(4).iter().zip(&x2) {
            assert!((g - w).abs() < 1e-15);
        }
        assert!(m.symplectic_residual() < 1e-12);
    }

    #[test]
    fn single_mode_maps_are_symplectic() {
        for m in [
            SymplecticMap::squeeze(0.3),
            SymplecticMap::phase_shift(1.1),
            SymplecticMap::displacement_of(C64::new(0.2, 1.0)),
        ] {
            assert!(m.symplectic_residual() < 1e-12);
        }
        assert!(SymplecticMap::beam_splitter(0.37).symplectic_residual() < 1e-12);
    }
}
