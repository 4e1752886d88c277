use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::airy::airy;
use crate::error::{invalid, CubistError, Result};
use crate::fock::StateVector;
use crate::grid_io::{self, Axis};
use crate::C64;

/// Real samples of a phase-space function, row-major `[x index][p index]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub x_axis: Axis,
    pub p_axis: Axis,
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn new(x_axis: Axis, p_axis: Axis, values: Vec<f64>) -> Result<Self> {
        if values.len() != x_axis.count * p_axis.count {
            return Err(invalid(format!(
                "{} values for a {}×{} grid",
                values.len(),
                x_axis.count,
                p_axis.count
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("Wigner values must be finite"));
        }
        Ok(WignerGrid { x_axis, p_axis, values })
    }

    /// Default display window: [−6, 6]² at 301 × 301.
    pub fn default_axes() -> (Axis, Axis) {
        let a = Axis { min: -6.0, max: 6.0, count: 301 };
        (a, a)
    }

    pub fn get(&self, ix: usize, ip: usize) -> f64 {
        self.values[ix * self.p_axis.count + ip]
    }

    /// Σ W Δx Δp
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.x_axis.step() * self.p_axis.step()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Largest |W| on the boundary rows and columns.
    pub fn edge_max_abs(&self) -> f64 {
        let (nx, np) = (self.x_axis.count, self.p_axis.count);
        let mut m = 0.0f64;
        for ix in 0..nx {
            m = m.max(self.get(ix, 0).abs()).max(self.get(ix, np - 1).abs());
        }
        for ip in 0..np {
            m = m.max(self.get(0, ip).abs()).max(self.get(nx - 1, ip).abs());
        }
        m
    }

    /// Bilinear interpolation; `None` outside the grid. Fractional indices
    /// within 1e-9 of a node snap to it so on-node lookups are exact.
    pub fn interpolate(&self, x: f64, p: f64) -> Option<f64> {
        let fx = snap(self.x_axis.locate(x)?);
        let fp = snap(self.p_axis.locate(p)?);
        let (ix, tx) = split_index(fx, self.x_axis.count);
        let (ip, tp) = split_index(fp, self.p_axis.count);
        let v00 = self.get(ix, ip);
        if tx == 0.0 && tp == 0.0 {
            return Some(v00);
        }
        let v10 = if tx > 0.0 { self.get(ix + 1, ip) } else { v00 };
        let v01 = if tp > 0.0 { self.get(ix, ip + 1) } else { v00 };
        let v11 = if tx > 0.0 && tp > 0.0 { self.get(ix + 1, ip + 1) } else if tx > 0.0 { v10 } else { v01 };
        Some((1.0 - tx) * ((1.0 - tp) * v00 + tp * v01) + tx * ((1.0 - tp) * v10 + tp * v11))
    }

    /// Sign changes of `p ↦ W(x_ix, p)`, ignoring values below
    /// `1e-8 · max|W|`.
    pub fn sign_changes_along_p(&self, ix: usize) -> usize {
        let floor = 1e-8 * self.max_abs();
        let mut last = 0.0f64;
        let mut changes = 0;
        for ip in 0..self.p_axis.count {
            let v = self.get(ix, ip);
            if v.abs() <= floor {
                continue;
            }
            if last != 0.0 && v.signum() != last.signum() {
                changes += 1;
            }
            last = v;
        }
        changes
    }

    /// Index of the x node closest to `x`.
    pub fn nearest_x(&self, x: f64) -> usize {
        let f = ((x - self.x_axis.min) / self.x_axis.step()).round();
        f.clamp(0.0, (self.x_axis.count - 1) as f64) as usize
    }

    pub fn to_csv(&self) -> String {
        grid_io::write_grid_csv(&self.x_axis, &self.p_axis, &self.values, None)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let g = grid_io::read_grid_csv(text)?;
        WignerGrid::new(g.x, g.p, g.values)
    }
}

fn snap(f: f64) -> f64 {
    let r = f.round();
    if (f - r).abs() < 1e-9 {
        r
    } else {
        f
    }
}

fn split_index(f: f64, count: usize) -> (usize, f64) {
    let i = f.floor() as usize;
    if i + 1 >= count {
        (count - 1, 0.0)
    } else {
        (i, f - i as f64)
    }
}

/// Wigner function of a pure single-mode state at one point, from the
/// Laguerre form of `W_{|m⟩⟨n|}`.
pub fn wigner_point(coeffs: &[C64], x: f64, p: f64) -> f64 {
    let d = coeffs.len();
    let r2 = x * x + p * p;
    let z = 2.0 * r2;
    let u = C64::new(SQRT_2 * x, -SQRT_2 * p);
    let mut total = 0.0;
    let mut upow = C64::new(1.0, 0.0);
    let mut inv_sqrt_kfact = 1.0;
    for k in 0..d {
        if k > 0 {
            upow *= u;
            inv_sqrt_kfact /= (k as f64).sqrt();
        }
        let kf = k as f64;
        // L_n^{(k)}(z) by recurrence, weight √(n!/(n+k)!)
        let mut l_prev = 0.0;
        let mut l_cur = 1.0;
        let mut w = inv_sqrt_kfact;
        let mut s = C64::new(0.0, 0.0);
        for n in 0..(d - k) {
            if n > 0 {
                let nf = (n - 1) as f64;
                let l_next = ((2.0 * nf + 1.0 + kf - z) * l_cur - (nf + kf) * l_prev) / (nf + 1.0);
                l_prev = l_cur;
                l_cur = l_next;
                w *= (n as f64 / (n as f64 + kf)).sqrt();
            }
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            s += coeffs[n + k] * coeffs[n].conj() * (sign * w * l_cur);
        }
        if k == 0 {
            total += s.re;
        } else {
            total += 2.0 * (upow * s).re;
        }
    }
    total * (-r2).exp() / PI
}

fn single_mode_coeffs(state: &StateVector) -> Result<&[C64]> {
    if state.n_modes() != 1 || state.is_scalar() {
        return Err(invalid(format!("Wigner function needs a single-mode state, got dims {:?}", state.mode_dims())));
    }
    state.require_normalized()?;
    Ok(state.amplitudes())
}

/// Wigner grid of a normalized single-mode state.
pub fn wigner_of_state(state: &StateVector, x_axis: Axis, p_axis: Axis) -> Result<WignerGrid> {
    wigner_of_state_mapped(state, x_axis, p_axis, |x, p| (x, p))
}

/// Samples `W(map(x, p))` on the grid; with `map` affine and unimodular this
/// is the Wigner function of a Gaussian-transformed state.
pub fn wigner_of_state_mapped<F>(state: &StateVector, x_axis: Axis, p_axis: Axis, map: F) -> Result<WignerGrid>
where
    F: Fn(f64, f64) -> (f64, f64) + Sync,
{
    let coeffs = single_mode_coeffs(state)?;
    let xs = x_axis.values();
    let ps = p_axis.values();
    let rows: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|&x| {
            ps.iter()
                .map(|&p| {
                    let (xm, pm) = map(x, p);
                    wigner_point(coeffs, xm, pm)
                })
                .collect()
        })
        .collect();
    WignerGrid::new(x_axis, p_axis, rows.concat())
}

/// `2πN |4/(3γ)|^{1/3} Ai((4/(3γ))^{1/3} (3γx² − p))`, with `N` making the
/// grid sum times the cell area equal to 1. Airy arguments beyond +40 are
/// treated as 0 (the function is below 1e−74 there).
pub fn ideal_cubic_wigner(gamma: f64, x_axis: Axis, p_axis: Axis) -> Result<WignerGrid> {
    if gamma == 0.0 || !gamma.is_finite() {
        return Err(invalid("cubic strength must be non-zero and finite"));
    }
    let k = (4.0 / (3.0 * gamma)).cbrt();
    let pref = 2.0 * PI * k.abs();
    let xs = x_axis.values();
    let ps = p_axis.values();
    let mut values = Vec::with_capacity(xs.len() * ps.len());
    for &x in &xs {
        for &p in &ps {
            let arg = k * (3.0 * gamma * x * x - p);
            let ai = if arg > 40.0 { 0.0 } else { airy(arg)? };
            values.push(pref * ai);
        }
    }
    let sum: f64 = values.iter().sum::<f64>() * x_axis.step() * p_axis.step();
    if !(sum.abs() > 0.0) {
        return Err(CubistError::Coverage("ideal cubic Wigner vanishes on the requested grid".into()));
    }
    for v in values.iter_mut() {
        *v /= sum;
    }
    WignerGrid::new(x_axis, p_axis, values)
}
