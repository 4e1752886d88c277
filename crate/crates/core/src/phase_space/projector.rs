use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use super::wigner::WignerGrid;
use crate::error::{invalid, CubistError, Result};
use crate::fock::StateVector;
use crate::gaussian::displacement_op;
use crate::grid_io::Axis;
use crate::C64;

/// Outcomes and settings of the two-detector measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectorParams {
    pub q: f64,
    pub y: f64,
    pub t: f64,
    pub theta: f64,
}

impl ProjectorParams {
    pub fn new(q: f64, y: f64, t: f64, theta: f64) -> Result<Self> {
        if !(t > 0.0 && t < 1.0) {
            return Err(invalid(format!("transmittance must lie in (0,1), got {t}")));
        }
        let c = theta.cos();
        if c.abs() < 1e-12 {
            return Err(CubistError::SingularPhase(c));
        }
        Ok(ProjectorParams { q, y, t, theta })
    }

    pub fn r(&self) -> f64 {
        1.0 - self.t
    }

    /// √(T/R)
    pub fn z1(&self) -> f64 {
        (self.t / self.r()).sqrt()
    }

    /// tan θ / √(RT)
    pub fn z2(&self) -> f64 {
        self.theta.tan() / (self.r() * self.t).sqrt()
    }

    /// Ancilla-grid coordinates `(u, v)` feeding the projector at `(x, p)`.
    fn pullback(&self, x: f64, p: f64) -> (f64, f64) {
        let (t, r) = (self.t, self.r());
        let (tan, cos) = (self.theta.tan(), self.theta.cos());
        let u = self.z1() * x - self.q / r.sqrt();
        let v = -(r / t).sqrt() * p - self.z2() * x + self.q * tan / r.sqrt() + self.y / (t.sqrt() * cos);
        (u, v)
    }

    /// Inverse of [`pullback`](Self::pullback).
    fn pushforward(&self, u: f64, v: f64) -> (f64, f64) {
        let (t, r) = (self.t, self.r());
        let (tan, cos) = (self.theta.tan(), self.theta.cos());
        let x = (u + self.q / r.sqrt()) / self.z1();
        let c = self.q * tan / r.sqrt() + self.y / (t.sqrt() * cos);
        let p = (c - v - self.z2() * x) / (r / t).sqrt();
        (x, p)
    }

    fn prefactor(&self) -> f64 {
        1.0 / ((self.r() * self.t).sqrt() * self.theta.cos()).abs()
    }
}

/// `φ(u) = ψ_A*(u − √2q) e^{i√2(u − √2q)y}` for an ancilla wavefunction.
pub fn pure_projection_wavefunction<F>(ancilla: F, q: f64, y: f64) -> impl Fn(f64) -> C64
where
    F: Fn(f64) -> C64,
{
    move |u: f64| {
        let s = u - SQRT_2 * q;
        ancilla(s).conj() * C64::from_polar(1.0, SQRT_2 * s * y)
    }
}

/// Fock-basis version of [`pure_projection_wavefunction`]: `e^{−iqy} D(q + iy)|ψ_A*⟩`,
/// expanded on enough levels to hold the displaced state.
pub fn pure_projection_state(ancilla: &StateVector, q: f64, y: f64) -> Result<StateVector> {
    if ancilla.n_modes() != 1 || ancilla.is_scalar() {
        return Err(invalid("projection state needs a single-mode ancilla"));
    }
    ancilla.require_normalized()?;
    let alpha = C64::new(q, y);
    let a = alpha.norm();
    let out_dim = ancilla.dim() + (a * a + 12.0 * a).ceil() as usize + 30;
    let work = out_dim + 40;
    let conj: Vec<C64> = ancilla.amplitudes().iter().map(|c| c.conj()).collect();
    let (padded, _) = StateVector::new(vec![ancilla.dim()], conj)?.resized(work)?;
    let disp = displacement_op(alpha, work)?;
    let shifted = padded.apply(&disp.op, 0)?;
    let phase = C64::from_polar(1.0, -q * y);
    let amps: Vec<C64> = shifted.amplitudes()[..out_dim].iter().map(|c| c * phase).collect();
    StateVector::new(vec![out_dim], amps)
}

fn coverage_policy(ancilla: &WignerGrid) -> bool {
    // samples outside the grid may be read as zero only if the grid edge is negligible
    ancilla.edge_max_abs() <= 1e-6 * ancilla.max_abs()
}

fn resample<F>(ancilla: &WignerGrid, x_axis: Axis, p_axis: Axis, pref: f64, pull: F) -> Result<WignerGrid>
where
    F: Fn(f64, f64) -> (f64, f64),
{
    let zero_ok = coverage_policy(ancilla);
    let xs = x_axis.values();
    let ps = p_axis.values();
    let mut values = Vec::with_capacity(xs.len() * ps.len());
    for &x in &xs {
        for &p in &ps {
            let (u, v) = pull(x, p);
            match ancilla.interpolate(u, v) {
                Some(w) => values.push(pref * w),
                None if zero_ok => values.push(0.0),
                None => {
                    return Err(CubistError::Coverage(format!(
                        "point ({u:.4}, {v:.4}) lies outside the ancilla grid and its edge is not negligible"
                    )))
                }
            }
        }
    }
    WignerGrid::new(x_axis, p_axis, values)
}

/// `W_M(x, p) = 2 W_A(x − √2q, −p + √2y)`. Default output axes are the exact
/// image of the ancilla axes, so every output node lands on an ancilla node.
pub fn projector_wigner(ancilla: &WignerGrid, q: f64, y: f64, axes: Option<(Axis, Axis)>) -> Result<WignerGrid> {
    let (sq, sy) = (SQRT_2 * q, SQRT_2 * y);
    let (x_axis, p_axis) = match axes {
        Some(a) => a,
        None => {
            let xa = ancilla.x_axis;
            let pa = ancilla.p_axis;
            (
                Axis::new(xa.min + sq, xa.max + sq, xa.count)?,
                Axis::new(sy - pa.max, sy - pa.min, pa.count)?,
            )
        }
    };
    resample(ancilla, x_axis, p_axis, 2.0, |x, p| (x - sq, -p + sy))
}

/// Unbalanced, rotated projector:
/// `W_M(x,p) = W_A(√(T/R)x − q/√R, −√(R/T)p − z₂x + q tanθ/√R + y/(√T cosθ)) / |√(RT) cosθ|`.
/// Default output axes cover the preimage of the ancilla rectangle.
pub fn generalized_projector_wigner(
    ancilla: &WignerGrid,
    params: &ProjectorParams,
    axes: Option<(Axis, Axis)>,
) -> Result<WignerGrid> {
    let params = ProjectorParams::new(params.q, params.y, params.t, params.theta)?;
    let (x_axis, p_axis) = match axes {
        Some(a) => a,
        None => {
            let (xa, pa) = (ancilla.x_axis, ancilla.p_axis);
            let corners = [
                params.pushforward(xa.min, pa.min),
                params.pushforward(xa.min, pa.max),
                params.pushforward(xa.max, pa.min),
                params.pushforward(xa.max, pa.max),
            ];
            let (mut x0, mut x1, mut p0, mut p1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
            for (x, p) in corners {
                x0 = x0.min(x);
                x1 = x1.max(x);
                p0 = p0.min(p);
                p1 = p1.max(p);
            }
            (Axis::new(x0, x1, xa.count)?, Axis::new(p0, p1, pa.count)?)
        }
    };
    resample(ancilla, x_axis, p_axis, params.prefactor(), |x, p| params.pullback(x, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::quadrature_wavefunction;
    use crate::phase_space::wigner_of_state;

    #[test]
    fn trivial_projection_of_real_even_state() {
        let s = 0.5f64.sqrt();
        let anc = StateVector::from_coefficients(&[C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(s, 0.0)]).unwrap();
        let phi = pure_projection_wavefunction(|u| quadrature_wavefunction(&anc, 0.0, u).unwrap(), 0.0, 0.0);
        for &u in &[-1.3, 0.0, 0.4, 2.2] {
            let direct = quadrature_wavefunction(&anc, 0.0, u).unwrap();
            assert!((phi(u) - direct).norm() < 1e-15);
        }
    }

    #[test]
    fn vacuum_shift_rule() {
        let vac = StateVector::vacuum(4).unwrap();
        let phi = pure_projection_wavefunction(|u| quadrature_wavefunction(&vac, 0.0, u).unwrap(), 1.0, 0.0);
        let peak = phi(SQRT_2).norm();
        assert!(peak > phi(SQRT_2 + 0.1).norm() && peak > phi(SQRT_2 - 0.1).norm());
    }

    #[test]
    fn fock_route_matches_wavefunction_route() {
        let i = C64::new(0.0, 1.0);
        let anc = StateVector::from_coefficients(&[C64::new(0.6, 0.0), i * -0.48, C64::new(-0.64, 0.0)])
            .unwrap()
            .normalized()
            .unwrap();
        for &(q, y) in &[(0.0, 0.0), (0.7, -0.4), (-1.5, 1.1), (2.0, 2.0)] {
            let state = pure_projection_state(&anc, q, y).unwrap();
            assert!((state.norm_sqr() - 1.0).abs() < 1e-10, "norm at ({q},{y})");
            let phi = pure_projection_wavefunction(|u| quadrature_wavefunction(&anc, 0.0, u).unwrap(), q, y);
            for &u in &[-1.0, 0.3, 1.7, 2.9] {
                let from_fock = quadrature_wavefunction(&state, 0.0, u).unwrap();
                assert!((from_fock - phi(u)).norm() < 1e-9, "({q},{y}) at {u}: {from_fock} vs {}", phi(u));
            }
        }
    }

    #[test]
    fn projector_wigner_examples() {
        let vac = StateVector::vacuum(4).unwrap();
        let (x, p) = crate::phase_space::WignerGrid::default_axes();
        let wa = wigner_of_state(&vac, x, p).unwrap();
        let wm = projector_wigner(&wa, 0.0, 0.0, None).unwrap();
        for ix in (0..x.count).step_by(17) {
            for ip in (0..p.count).step_by(13) {
                assert_eq!(wm.get(ix, ip), 2.0 * wa.get(ix, p.count - 1 - ip));
            }
        }
        let shifted = projector_wigner(&wa, 1.0, 0.0, None).unwrap();
        let ix = shifted.nearest_x(SQRT_2);
        let ip = shifted.p_axis.count / 2;
        assert!((shifted.x_axis.value(ix) - SQRT_2).abs() < 1e-12);
        assert!((shifted.get(ix, ip) - 2.0 / std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn singular_phase_rejected() {
        assert!(matches!(
            ProjectorParams::new(0.0, 0.0, 0.5, std::f64::consts::FRAC_PI_2),
            Err(CubistError::SingularPhase(_))
        ));
    }

    #[test]
    fn push_and_pull_are_inverse() {
        let pp = ProjectorParams::new(0.3, -0.8, 0.7, 0.4).unwrap();
        let (u, v) = pp.pullback(1.2, -0.5);
        let (x, p) = pp.pushforward(u, v);
        assert!((x - 1.2).abs() < 1e-14 && (p + 0.5).abs() < 1e-14);
    }
}
