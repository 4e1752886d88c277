//! Optimal finite-photon ancillas for the nonlinear quadrature
//! `ŷ(λ′) = λ′P − 3X²/λ′²`.
//!
//! For fixed `(λ′, d)` the smallest eigenvalue of `Y = [(ŷ − d)²]` restricted to
//! `span{|0⟩…|N⟩}` is the best achievable second moment, and at the optimum
//! `d = ⟨ŷ⟩`, so the two-variable landscape of minimum eigenvalues encodes the
//! whole problem.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CubistError, Result};
use crate::fock::{quadrature_ops, OperatorMatrix, StateVector};
use crate::grid_io::{self, Axis};
use crate::linalg;
use crate::parallel::with_workers;
use crate::{C64, SHOT_NOISE};

/// Extra Fock levels used when building `Y` for a cutoff `N`.
pub const WORK_MARGIN: usize = 9;

/// `λ′P − 3X²/λ′²` on `dim` levels, every element exact.
pub fn nlq_operator(lambda: f64, dim: usize) -> Result<OperatorMatrix> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(invalid(format!("λ′ must be finite and non-zero, got {lambda}")));
    }
    if dim < 2 {
        return Err(CubistError::InvalidDimension(dim));
    }
    let (x, p) = quadrature_ops(dim + 2)?;
    let x2 = x.entries() * x.entries();
    let full = p.entries() * C64::new(lambda, 0.0) - x2 * C64::new(3.0 / (lambda * lambda), 0.0);
    OperatorMatrix::hermitian(linalg::crop(&full, dim))
}

/// `Y(λ′, d)` for the cutoff `n`, computed at an explicit working dimension.
pub fn y_shifted_squared_at(lambda: f64, d: f64, n: usize, work: usize) -> Result<OperatorMatrix> {
    if work < n + 3 {
        return Err(invalid(format!("working dimension {work} too small for N = {n}")));
    }
    let y = nlq_operator(lambda, work)?;
    let shifted = y.entries() - DMatrix::<C64>::identity(work, work) * C64::new(d, 0.0);
    let sq = &shifted * &shifted;
    OperatorMatrix::hermitian(linalg::crop(&sq, n + 1))
}

/// `Y(λ′, d)` of size `(N+1)²`, built at working dimension `N + 9`.
pub fn y_shifted_squared(lambda: f64, d: f64, n: usize) -> Result<OperatorMatrix> {
    y_shifted_squared_at(lambda, d, n, n + WORK_MARGIN)
}

fn min_eigenvalue(y: &OperatorMatrix) -> f64 {
    let sym = (y.entries() + y.entries().adjoint()) * C64::new(0.5, 0.0);
    sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Phase convention for coefficient vectors: the largest-modulus even entry
/// (lowest index on ties) is made real, then the sign is chosen so that
/// `c₀ > 0` whenever `c₀` is not negligible. Vectors without even weight fall
/// back to the largest entry overall, made real positive.
pub fn fix_phase(v: &mut [C64]) {
    let pick = |indices: &mut dyn Iterator<Item = usize>| -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in indices {
            let m = v[i].norm();
            match best {
                Some((_, bm)) if m <= bm * (1.0 + 1e-9) => {}
                _ => best = Some((i, m)),
            }
        }
        best.filter(|&(_, m)| m > 1e-12).map(|(i, _)| i)
    };
    let anchor = pick(&mut (0..v.len()).step_by(2)).or_else(|| pick(&mut (0..v.len())));
    let Some(k) = anchor else { return };
    let rot = v[k].conj() / v[k].norm();
    for c in v.iter_mut() {
        *c *= rot;
    }
    if v[0].norm() > 1e-8 && v[0].re < 0.0 {
        for c in v.iter_mut() {
            *c = -*c;
        }
    }
}

/// Smallest eigenvalue of a hermitian matrix and a unit eigenvector.
/// Degenerate ground spaces resolve to the projection of the lowest basis
/// vector with weight in that space; the phase convention is then applied.
pub fn min_eigpair(y: &OperatorMatrix) -> Result<(f64, Vec<C64>)> {
    let r = y.hermitian_residual();
    if r >= 1e-12 {
        return Err(invalid(format!("min_eigpair needs a hermitian matrix (residual {r:e})")));
    }
    let n = y.dim();
    let (vals, vecs) = linalg::hermitian_eigen(y.entries());
    let lo = vals[0];
    let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let deg: Vec<usize> = (0..n).filter(|&k| vals[k] - lo <= 1e-10 * scale).collect();
    let mut v: Vec<C64> = if deg.len() == 1 {
        vecs.column(0).iter().copied().collect()
    } else {
        let mut chosen = None;
        for j in 0..n {
            // P|j⟩ = Σ_k v_k v_k*[j]
            let mut proj = vec![C64::new(0.0, 0.0); n];
            for &k in &deg {
                let w = vecs[(j, k)].conj();
                for i in 0..n {
                    proj[i] += vecs[(i, k)] * w;
                }
            }
            let norm = proj.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-6 {
                chosen = Some(proj.into_iter().map(|c| c / norm).collect());
                break;
            }
        }
        chosen.expect("degenerate eigenspace has weight on some basis vector")
    };
    fix_phase(&mut v);
    Ok((lo, v))
}

/// Landscape of `min eig Y(λ′, d)` over a rectangular window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchMap {
    pub n: usize,
    pub lambda_axis: Axis,
    pub d_axis: Axis,
    /// Row-major `[λ′ index][d index]`.
    pub min_eigenvalues: Vec<f64>,
    /// `10 log₁₀(value / 0.5)`.
    pub db_values: Vec<f64>,
}

impl SearchMap {
    pub fn get(&self, il: usize, id: usize) -> f64 {
        self.min_eigenvalues[il * self.d_axis.count + id]
    }

    /// Cell with the smallest value, lowest flat index on ties.
    pub fn argmin(&self) -> (usize, usize) {
        let mut best = 0;
        for (k, v) in self.min_eigenvalues.iter().enumerate() {
            if *v < self.min_eigenvalues[best] {
                best = k;
            }
        }
        (best / self.d_axis.count, best % self.d_axis.count)
    }

    /// Strict local minima over the 8-neighbourhood (interior and edge cells).
    pub fn local_minima(&self) -> Vec<(usize, usize)> {
        let (nl, nd) = (self.lambda_axis.count, self.d_axis.count);
        let mut out = Vec::new();
        for il in 0..nl {
            for id in 0..nd {
                let v = self.get(il, id);
                let mut is_min = true;
                'nb: for dl in -1i64..=1 {
                    for dd in -1i64..=1 {
                        if dl == 0 && dd == 0 {
                            continue;
                        }
                        let (jl, jd) = (il as i64 + dl, id as i64 + dd);
                        if jl < 0 || jd < 0 || jl >= nl as i64 || jd >= nd as i64 {
                            continue;
                        }
                        if self.get(jl as usize, jd as usize) <= v {
                            is_min = false;
                            break 'nb;
                        }
                    }
                }
                if is_min {
                    out.push((il, id));
                }
            }
        }
        out
    }

    pub fn to_csv(&self, db: bool) -> String {
        if db {
            grid_io::write_grid_csv(&self.lambda_axis, &self.d_axis, &self.db_values, Some("dB"))
        } else {
            grid_io::write_grid_csv(&self.lambda_axis, &self.d_axis, &self.min_eigenvalues, Some("raw"))
        }
    }
}

pub fn to_db(v: f64) -> f64 {
    10.0 * (v.max(f64::MIN_POSITIVE) / SHOT_NOISE).log10()
}

/// Minimum-eigenvalue map; cells are independent and collected in order, so
/// the result does not depend on `workers`.
pub fn search_map(
    n: usize,
    lambda_range: (f64, f64),
    d_range: (f64, f64),
    counts: (usize, usize),
    workers: usize,
) -> Result<SearchMap> {
    let (l0, l1) = lambda_range;
    if l0 <= 0.0 && l1 >= 0.0 {
        return Err(invalid(format!("λ′ range [{l0}, {l1}] crosses 0; split it into two maps")));
    }
    let lambda_axis = Axis::new(l0, l1, counts.0)?;
    let d_axis = Axis::new(d_range.0, d_range.1, counts.1)?;
    let rows: Vec<Result<Vec<f64>>> = with_workers(workers, || {
        (0..lambda_axis.count)
            .into_par_iter()
            .map(|il| {
                let lam = lambda_axis.value(il);
                (0..d_axis.count)
                    .map(|id| Ok(min_eigenvalue(&y_shifted_squared(lam, d_axis.value(id), n)?)))
                    .collect()
            })
            .collect()
    })?;
    let mut values = Vec::with_capacity(lambda_axis.count * d_axis.count);
    for row in rows {
        values.extend(row?);
    }
    if let Some(bad) = values.iter().find(|v| **v < -1e-10) {
        return Err(CubistError::Precondition(format!("negative minimum eigenvalue {bad:e}")));
    }
    for v in values.iter_mut() {
        *v = v.max(0.0);
    }
    let db_values = values.iter().map(|&v| to_db(v)).collect();
    Ok(SearchMap { n, lambda_axis, d_axis, min_eigenvalues: values, db_values })
}

/// Result of the two-variable optimization for cutoff `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AncillaOptimum {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(with = "grid_io::complex_pairs")]
    pub coefficients: Vec<C64>,
    pub lambda_opt: f64,
    pub d_opt: f64,
    pub variance: f64,
    pub ratio: f64,
    /// Displacement cancelling `⟨ŷ⟩` at unit cubic strength; scales as γ^{1/3}.
    pub p0: f64,
    pub working_dim: usize,
}

impl AncillaOptimum {
    pub fn state(&self) -> Result<StateVector> {
        StateVector::from_coefficients(&self.coefficients)
    }

    pub fn variance_db(&self) -> f64 {
        to_db(self.variance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub lambda_range: (f64, f64),
    pub d_range: (f64, f64),
    pub counts: (usize, usize),
    pub tolerance: f64,
    pub max_iterations: usize,
    #[serde(skip)]
    pub workers: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            lambda_range: (0.3, 4.0),
            d_range: (-12.0, 2.0),
            counts: (160, 160),
            tolerance: 1e-9,
            max_iterations: 10_000,
            workers: 0,
        }
    }
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimum of `f` on `[a, b]`; returns `(x, f(x))`.
fn golden_section(f: &mut dyn FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Variance of `ŷ(λ′)` and its mean for a single-mode state.
pub fn nlq_stats(state: &StateVector, lambda: f64) -> Result<(f64, f64)> {
    let (mean, second) = operator_moments(state, 2, |dim| nlq_operator(lambda, dim))?;
    Ok((mean, second - mean * mean))
}

/// `(⟨A⟩, ⟨A²⟩)` for an operator that raises the photon number by at most
/// `raise`; `build(dim)` must return elements exact on `dim` levels.
pub fn operator_moments(
    state: &StateVector,
    raise: usize,
    build: impl Fn(usize) -> Result<OperatorMatrix>,
) -> Result<(f64, f64)> {
    if state.n_modes() != 1 {
        return Err(invalid("moments need a single-mode state"));
    }
    state.require_normalized()?;
    let dim = state.dim() + raise;
    let (padded, _) = state.resized(dim)?;
    let op = build(dim)?;
    let applied = padded.apply(&op, 0)?;
    let mean = padded.inner(&applied)?.re;
    Ok((mean, applied.norm_sqr()))
}

fn objective(lambda: f64, d: f64, n: usize) -> f64 {
    match y_shifted_squared(lambda, d, n) {
        Ok(y) => min_eigenvalue(&y),
        Err(_) => f64::INFINITY,
    }
}

fn optimize_with_reference(n: usize, config: &OptimizerConfig, v0: Option<f64>) -> Result<AncillaOptimum> {
    let map = search_map(n, config.lambda_range, config.d_range, config.counts, config.workers)?;
    let (il, id) = map.argmin();
    let (mut lam, mut d) = (map.lambda_axis.value(il), map.d_axis.value(id));
    let mut f = map.get(il, id);
    let (lo_l, hi_l) = (config.lambda_range.0.min(config.lambda_range.1), config.lambda_range.0.max(config.lambda_range.1));
    let mut wl = 1.5 * map.lambda_axis.step();
    let mut wd = 1.5 * map.d_axis.step();
    let line_tol = config.tolerance * 0.1;
    let mut stagnant = 0;
    let mut iterations = 0;
    let build = |lam: f64, d: f64, v0: Option<f64>| -> Result<AncillaOptimum> { finish(n, lam, d, v0, config) };
    loop {
        iterations += 1;
        if iterations > config.max_iterations {
            let best = build(lam, d, v0)?;
            return Err(CubistError::Convergence { iterations: config.max_iterations, best: Box::new(best) });
        }
        // keep the bracket on the same side of λ′ = 0 as the window
        let (a, b) = if lo_l > 0.0 {
            ((lam - wl).max(lo_l * 0.5), lam + wl)
        } else {
            (lam - wl, (lam + wl).min(hi_l * 0.5))
        };
        let (lam_new, f_l) = golden_section(&mut |x| objective(x, d, n), a, b, line_tol);
        let lam_next = if f_l <= f { lam_new } else { lam };
        let f_mid = f_l.min(f);
        let (d_new, f_d) = golden_section(&mut |y| objective(lam_next, y, n), d - wd, d + wd, line_tol);
        let d_next = if f_d <= f_mid { d_new } else { d };
        let f_next = f_d.min(f_mid);
        let (dl, dd) = (lam_next - lam, d_next - d);
        wl = if dl.abs() > 0.8 * wl { 2.0 * wl } else { (4.0 * dl.abs()).max(10.0 * line_tol) };
        wd = if dd.abs() > 0.8 * wd { 2.0 * wd } else { (4.0 * dd.abs()).max(10.0 * line_tol) };
        let improved = f - f_next > 1e-15 * f.abs().max(1e-300);
        lam = lam_next;
        d = d_next;
        f = f_next;
        if dl.abs().max(dd.abs()) < config.tolerance {
            break;
        }
        stagnant = if improved { 0 } else { stagnant + 1 };
        if stagnant >= 3 {
            break;
        }
    }
    // stationarity in d means d = ⟨ŷ⟩ of the ground vector
    for _ in 0..200 {
        let (_, v) = min_eigpair(&y_shifted_squared(lam, d, n)?)?;
        let (mean, _) = nlq_stats(&StateVector::from_coefficients(&v)?.normalized()?, lam)?;
        let step = mean - d;
        d = mean;
        if step.abs() < 1e-13 {
            break;
        }
    }
    build(lam, d, v0)
}

fn finish(n: usize, lam: f64, d: f64, v0: Option<f64>, _config: &OptimizerConfig) -> Result<AncillaOptimum> {
    let (_, coefficients) = min_eigpair(&y_shifted_squared(lam, d, n)?)?;
    let state = StateVector::from_coefficients(&coefficients)?.normalized()?;
    let (mean, variance) = nlq_stats(&state, lam)?;
    let ratio = match v0 {
        Some(v) => variance / v,
        None => 1.0,
    };
    Ok(AncillaOptimum {
        n,
        coefficients,
        lambda_opt: lam,
        d_opt: d,
        variance,
        ratio,
        p0: -mean,
        working_dim: n + WORK_MARGIN,
    })
}

/// Coarse map scan, then coordinate descent with golden-section line searches.
pub fn optimize_ancilla(n: usize, config: &OptimizerConfig) -> Result<AncillaOptimum> {
    if n == 0 {
        return optimize_with_reference(0, config, None);
    }
    let v0 = optimize_with_reference(0, config, None)?.variance;
    optimize_with_reference(n, config, Some(v0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub variance: f64,
    pub ratio: f64,
    pub variance_db: f64,
}

/// Optimal variances and their ratio to the Gaussian limit for `N = 0..=n_max`.
pub fn variance_ratio_table(n_max: usize, config: &OptimizerConfig) -> Result<Vec<RatioRow>> {
    if n_max < 1 {
        return Err(invalid("variance table needs N_max >= 1"));
    }
    let v0 = optimize_with_reference(0, config, None)?.variance;
    let mut rows = vec![RatioRow { n: 0, variance: v0, ratio: 1.0, variance_db: to_db(v0) }];
    for n in 1..=n_max {
        let opt = optimize_with_reference(n, config, Some(v0))?;
        rows.push(RatioRow { n, variance: opt.variance, ratio: opt.ratio, variance_db: to_db(opt.variance) });
    }
    Ok(rows)
}

/// `(mean, variance)` of `γ^{1/3} ŷ(λ′) + p₀`.
pub fn nlq_moments(state: &StateVector, lambda: f64, gamma: f64, p0: f64) -> Result<(f64, f64)> {
    let (mean, var) = nlq_stats(state, lambda)?;
    let g = gamma.cbrt();
    Ok((g * mean + p0, g * g * var))
}

/// λ′ minimizing `Var(ŷ(λ′))` for a fixed state (positive branch).
pub fn best_prescale(state: &StateVector) -> Result<f64> {
    let var = |l: f64| nlq_stats(state, l).map(|(_, v)| v).unwrap_or(f64::INFINITY);
    // log-spaced scan, then golden refinement around the best node
    let nodes: Vec<f64> = (0..=200).map(|k| 0.05 * (400.0f64).powf(k as f64 / 200.0)).collect();
    let mut best = 0;
    let mut best_v = f64::INFINITY;
    for (k, &l) in nodes.iter().enumerate() {
        let v = var(l);
        if v < best_v {
            best_v = v;
            best = k;
        }
    }
    let a = nodes[best.saturating_sub(1)];
    let b = nodes[(best + 1).min(nodes.len() - 1)];
    let (l, _) = golden_section(&mut |l| var(l), a, b, 1e-12);
    Ok(l)
}
