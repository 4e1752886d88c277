//! Position-grid engine. Every mode is a wavefunction on the real line, so
//! mode-1 squeezing costs grid points rather than Fock levels.
//!
//! After the beam splitters the joint wavefunction is `Ψ(Mᵀx′)` with `M`
//! orthogonal. Fixing `x₁′ = q` leaves a function of `(x₀′, x₂′)`; the
//! rotated quadrature `x sin θ + p cos θ = cos θ (p + x tan θ)` has
//! eigenfunctions `e^{i(wx − tx²/2)}/√(2π)` with `y = w cos θ`, so projecting
//! mode 2′ is a chirp followed by a Fourier transform along `x₂′`.

use std::f64::consts::PI;

use rand::Rng;
use rustfft::FftPlanner;

use super::config::{GateConfig, ResolvedAncilla};
use super::heisenberg::{adaptive_theta, feedforward_displacement};
use super::record::{GateShotRecord, OutputMoments};
use super::target::TargetWavefunction;
use crate::error::{invalid, CubistError, Result};
use crate::fock::{hermite_functions, quadrature_ops, StateVector};
use crate::gaussian::symplectic_of_circuit;
use crate::sampling::TabulatedPdf;
use crate::C64;

/// Support half-width, in standard deviations, kept for every mode.
const SIGMAS: f64 = 8.0;
/// Oversampling of the Fourier axis used to tabulate the `w` density.
const FFT_PAD: usize = 8;
const MAX_NODES_PER_AXIS: usize = 16_384;
const MAX_NODES: usize = 1 << 22;
/// Relative density allowed at the ends of the `w` band.
const EDGE_TOLERANCE: f64 = 1e-6;
/// Spectral weight allowed in the top 10% of the output band before refining.
const ALIAS_TOLERANCE: f64 = 1e-10;
const MAX_REFINE: u32 = 3;

/// `√scale Σ cₙ ψₙ(scale·x) e^{i kick x}` with its first two moments.
#[derive(Debug, Clone)]
struct ModeProfile {
    coeffs: Vec<C64>,
    scale: f64,
    kick: f64,
    x_mean: f64,
    x_sd: f64,
    p_mean: f64,
    p_sd: f64,
    table: TabulatedPdf,
}

impl ModeProfile {
    fn new(state: &StateVector, scale: f64, kick: f64) -> Result<Self> {
        let (mx, mx2) = moments(state, true)?;
        let (mp, mp2) = moments(state, false)?;
        let x_mean = mx / scale;
        let x_sd = (mx2 - mx * mx).max(0.0).sqrt() / scale;
        let p_mean = mp * scale + kick;
        let p_sd = (mp2 - mp * mp).max(0.0).sqrt() * scale;
        let mut profile = ModeProfile {
            coeffs: state.amplitudes().to_vec(),
            scale,
            kick,
            x_mean,
            x_sd,
            p_mean,
            p_sd,
            table: TabulatedPdf::new(vec![0.0, 1.0], vec![1.0, 1.0])?,
        };
        let bins = 8192;
        let (lo, hi) = (x_mean - 12.0 * x_sd, x_mean + 12.0 * x_sd);
        let h = (hi - lo) / bins as f64;
        let mut herm = Vec::new();
        let xs: Vec<f64> = (0..=bins).map(|k| lo + h * k as f64).collect();
        let pdf = xs.iter().map(|&x| profile.eval(x, &mut herm).map(|v| v.norm_sqr())).collect::<Result<_>>()?;
        profile.table = TabulatedPdf::new(xs, pdf)?;
        Ok(profile)
    }

    fn eval(&self, x: f64, herm: &mut Vec<f64>) -> Result<C64> {
        herm.resize(self.coeffs.len(), 0.0);
        hermite_functions(self.scale * x, herm)?;
        let v: C64 = self.coeffs.iter().zip(herm.iter()).map(|(c, h)| c * h).sum();
        Ok(v * self.scale.sqrt() * C64::from_polar(1.0, self.kick * x))
    }

    /// Band edge `|p̄| + kσ_p`.
    fn bandwidth(&self) -> f64 {
        self.p_mean.abs() + SIGMAS * self.p_sd
    }

    fn support(&self) -> (f64, f64) {
        (self.x_mean - SIGMAS * self.x_sd, self.x_mean + SIGMAS * self.x_sd)
    }
}

/// `(⟨Q⟩, ⟨Q²⟩)` of X (`position`) or P, exact on a padded space.
fn moments(state: &StateVector, position: bool) -> Result<(f64, f64)> {
    crate::ancilla::operator_moments(state, 1, |d| {
        let (x, p) = quadrature_ops(d)?;
        Ok(if position { x } else { p })
    })
}

/// Sampled conditional wavefunction of modes (0′, 2′) at a fixed `q`.
struct Frame {
    q: f64,
    theta: f64,
    a: Vec<f64>,
    h0: f64,
    b: Vec<f64>,
    h2: f64,
    /// `Φ(a_r, b_j) e^{i t b_j²/2}`, row-major in `r`.
    chirped: Vec<C64>,
    w_center: f64,
}

#[derive(Debug, Clone)]
pub struct GridEngine {
    config: GateConfig,
    profiles: [ModeProfile; 3],
    m: [[f64; 3]; 3],
    target: TargetWavefunction,
    out_dim: usize,
}

impl GridEngine {
    pub fn new(input: &StateVector, config: &GateConfig, ancilla: &ResolvedAncilla) -> Result<Self> {
        config.validate()?;
        if input.n_modes() != 1 || input.is_scalar() {
            return Err(invalid("gate input must be a single-mode state"));
        }
        input.require_normalized()?;
        let squeezed = StateVector::vacuum(2)?;
        let anc = ancilla.state()?.normalized()?;
        let profiles = [
            ModeProfile::new(input, 1.0, 0.0)?,
            ModeProfile::new(&squeezed, 1.0 / config.squeeze_factor(), 0.0)?,
            ModeProfile::new(&anc, ancilla.lambda, ancilla.p0)?,
        ];
        let map = symplectic_of_circuit(config.t1, config.t2)?;
        let mut m = [[0.0; 3]; 3];
        for (a, row) in m.iter_mut().enumerate() {
            for (i, v) in row.iter_mut().enumerate() {
                *v = map.matrix()[(2 * a, 2 * i)];
            }
        }
        Ok(GridEngine {
            config: config.clone(),
            profiles,
            m,
            target: TargetWavefunction::new(input, config)?,
            out_dim: config.resolved_dims()[0],
        })
    }

    /// Draws `q` exactly: `q = Σᵢ M₁ᵢ xᵢ` with independent mode positions.
    pub fn draw_q<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let xs: Vec<f64> = self.profiles.iter().map(|p| p.table.sample(rng)).collect();
        (0..3).map(|i| self.m[1][i] * xs[i]).sum()
    }

    /// One full shot: sample `q`, then `y` from its conditional density.
    pub fn shot<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<GateShotRecord> {
        let q = self.draw_q(rng);
        let frame = self.frame(q, 0)?;
        let density = self.w_density(&frame)?;
        let w = density.sample(rng);
        self.finish_refined(frame, w)
    }

    /// Output for prescribed outcomes `(q, y)`.
    pub fn conditional_output(&self, q: f64, y: f64) -> Result<GateShotRecord> {
        let frame = self.frame(q, 0)?;
        let c = frame.theta.cos();
        if c.abs() < 1e-12 {
            return Err(CubistError::SingularPhase(c));
        }
        self.finish_refined(frame, y / c)
    }

    fn finish_refined(&self, mut frame: Frame, w: f64) -> Result<GateShotRecord> {
        let mut level = 0;
        loop {
            let (out, aliased) = self.finish(&frame, w)?;
            if !aliased {
                return Ok(out);
            }
            if level == MAX_REFINE {
                return Err(CubistError::Coverage(format!(
                    "output band not resolved after {MAX_REFINE} refinements (q = {})",
                    frame.q
                )));
            }
            level += 1;
            frame = self.frame(frame.q, level)?;
        }
    }

    fn frame(&self, q: f64, refine: u32) -> Result<Frame> {
        let theta = adaptive_theta(q, &self.config);
        let t = theta.tan();
        let m = &self.m;
        let (lo, hi) = self.bounding_box(q)?;
        // x₀′ range also covers the target so overlaps see all of it
        let input = &self.profiles[0];
        let target_range = self.target.support(input.x_mean, input.x_sd, SIGMAS);
        let (a_lo, a_hi) = (lo.0.min(target_range.0), hi.0.max(target_range.1));
        let (b_lo, b_hi) = (lo.1, hi.1);

        let bw = |row: usize| -> f64 { (0..3).map(|i| m[row][i].abs() * self.profiles[i].bandwidth()).sum() };
        let bw0 = bw(0).max(self.target.bandwidth((a_lo, a_hi), input.p_mean, input.p_sd, SIGMAS));
        let bw2 = bw(2) + t.abs() * b_lo.abs().max(b_hi.abs());
        let h0 = PI / (bw0 * f64::from(1u32 << refine));
        let h2 = PI / bw2;
        let n0 = (((a_hi - a_lo) / h0).ceil() as usize + 1).max(16);
        let n2 = (((b_hi - b_lo) / h2).ceil() as usize + 1).max(16);
        if n0 > MAX_NODES_PER_AXIS || n2 > MAX_NODES_PER_AXIS || n0 * n2 > MAX_NODES {
            return Err(CubistError::Coverage(format!("conditional grid {n0}×{n2} too large (q = {q})")));
        }
        let a = linspace(a_lo, a_hi, n0);
        let b = linspace(b_lo, b_hi, n2);
        let (h0, h2) = (a[1] - a[0], b[1] - b[0]);

        let mut herm = Vec::new();
        let chirp: Vec<C64> = b.iter().map(|&v| C64::from_polar(1.0, 0.5 * t * v * v)).collect();
        // columns only depend on b when the mode has no x₀′ weight
        let column_only: Vec<Option<Vec<C64>>> = (0..3)
            .map(|i| {
                if m[0][i] == 0.0 {
                    b.iter().map(|&v| self.profiles[i].eval(m[1][i] * q + m[2][i] * v, &mut herm)).collect::<Result<Vec<_>>>().map(Some)
                } else {
                    Ok(None)
                }
            })
            .collect::<Result<_>>()?;
        let mut chirped = Vec::with_capacity(n0 * n2);
        for &av in &a {
            for (j, &bv) in b.iter().enumerate() {
                let mut v = chirp[j];
                for i in 0..3 {
                    v *= match &column_only[i] {
                        Some(col) => col[j],
                        None => self.profiles[i].eval(m[0][i] * av + m[1][i] * q + m[2][i] * bv, &mut herm)?,
                    };
                }
                chirped.push(v);
            }
        }
        let p2_mean: f64 = (0..3).map(|i| m[2][i] * self.profiles[i].p_mean).sum();
        let w_center = t * 0.5 * (b_lo + b_hi) + p2_mean;
        Ok(Frame { q, theta, a, h0, b, h2, chirped, w_center })
    }

    /// Bounding box `((x₀′ min, x₂′ min), (x₀′ max, x₂′ max))` of the polygon
    /// where every input mode lies within its support.
    fn bounding_box(&self, q: f64) -> Result<((f64, f64), (f64, f64))> {
        let m = &self.m;
        // constraint i: lo ≤ m0·a + m2·b ≤ hi
        let cons: Vec<(f64, f64, f64, f64)> = (0..3)
            .map(|i| {
                let (lo, hi) = self.profiles[i].support();
                let off = m[1][i] * q;
                (m[0][i], m[2][i], lo - off, hi - off)
            })
            .collect();
        let mut pts = Vec::new();
        for i in 0..3 {
            for j in (i + 1)..3 {
                let (a1, b1, l1, u1) = cons[i];
                let (a2, b2, l2, u2) = cons[j];
                let det = a1 * b2 - a2 * b1;
                if det.abs() < 1e-12 {
                    continue;
                }
                for r1 in [l1, u1] {
                    for r2 in [l2, u2] {
                        let x = (r1 * b2 - r2 * b1) / det;
                        let y = (a1 * r2 - a2 * r1) / det;
                        let ok = cons.iter().all(|&(ca, cb, cl, cu)| {
                            let v = ca * x + cb * y;
                            let tol = 1e-9 * (1.0 + cl.abs().max(cu.abs()));
                            v >= cl - tol && v <= cu + tol
                        });
                        if ok {
                            pts.push((x, y));
                        }
                    }
                }
            }
        }
        if pts.is_empty() {
            return Err(CubistError::Coverage(format!("outcome q = {q} lies outside the joint support")));
        }
        let mut lo = (f64::INFINITY, f64::INFINITY);
        let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (x, y) in pts {
            lo = (lo.0.min(x), lo.1.min(y));
            hi = (hi.0.max(x), hi.1.max(y));
        }
        if !(hi.0 > lo.0 && hi.1 > lo.1) {
            return Err(CubistError::Coverage(format!("degenerate support at q = {q}")));
        }
        Ok((lo, hi))
    }

    /// Tabulated density of `w = y / cos θ` (up to normalization).
    fn w_density(&self, frame: &Frame) -> Result<TabulatedPdf> {
        let n0 = frame.a.len();
        let n2 = frame.b.len();
        let len = (FFT_PAD * n2).next_power_of_two();
        let fft = FftPlanner::<f64>::new().plan_fft_forward(len);
        let shift: Vec<C64> =
            (0..n2).map(|j| C64::from_polar(1.0, -frame.w_center * j as f64 * frame.h2)).collect();
        let mut power = vec![0.0; len];
        let mut buf = vec![C64::new(0.0, 0.0); len];
        for r in 0..n0 {
            let row = &frame.chirped[r * n2..(r + 1) * n2];
            for (j, slot) in buf.iter_mut().enumerate() {
                *slot = if j < n2 { row[j] * shift[j] } else { C64::new(0.0, 0.0) };
            }
            fft.process(&mut buf);
            for (p, v) in power.iter_mut().zip(&buf) {
                *p += v.norm_sqr();
            }
        }
        let dw = 2.0 * PI / (len as f64 * frame.h2);
        let half = len / 2;
        // reorder to ascending w: negative frequencies first
        let mut ws = Vec::with_capacity(len);
        let mut ps = Vec::with_capacity(len);
        for k in half..len {
            ws.push(frame.w_center + (k as f64 - len as f64) * dw);
            ps.push(power[k]);
        }
        for k in 0..half {
            ws.push(frame.w_center + k as f64 * dw);
            ps.push(power[k]);
        }
        let peak = ps.iter().cloned().fold(0.0, f64::max);
        if !(peak > 0.0) {
            return Err(CubistError::Coverage(format!("vanishing conditional density at q = {}", frame.q)));
        }
        let edge = ps[0].max(ps[len - 1]);
        if edge > EDGE_TOLERANCE * peak {
            return Err(CubistError::Coverage(format!(
                "second-detector band too narrow at q = {} (edge/peak = {:e})",
                frame.q,
                edge / peak
            )));
        }
        TabulatedPdf::new(ws, ps)
    }

    /// Projects mode 2′ on `w`, applies the feedforward and evaluates the
    /// output. The flag reports spectral weight near the band edge.
    fn finish(&self, frame: &Frame, w: f64) -> Result<(GateShotRecord, bool)> {
        let n2 = frame.b.len();
        let kernel: Vec<C64> = frame.b.iter().map(|&v| C64::from_polar(1.0, -w * v)).collect();
        let y = w * frame.theta.cos();
        let p_disp = feedforward_displacement(frame.q, y, frame.theta, &self.config)?;
        let mut out: Vec<C64> = frame
            .a
            .iter()
            .enumerate()
            .map(|(r, &av)| {
                let row = &frame.chirped[r * n2..(r + 1) * n2];
                let g: C64 = row.iter().zip(&kernel).map(|(f, k)| f * k).sum();
                if self.config.feedforward {
                    g * C64::from_polar(1.0, p_disp * av)
                } else {
                    g
                }
            })
            .collect();
        let h0 = frame.h0;
        let norm: f64 = out.iter().map(|v| v.norm_sqr()).sum::<f64>() * h0;
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(CubistError::Coverage(format!("zero conditional state at q = {}, y = {y}", frame.q)));
        }
        let inv = 1.0 / norm.sqrt();
        for v in out.iter_mut() {
            *v *= inv;
        }

        let ov = self.target.overlap(&frame.a, h0, &out, self.config.target)?;
        let fidelity = ov.norm_sqr();

        let (x_mean, x_sq) = frame.a.iter().zip(&out).fold((0.0, 0.0), |(m1, m2), (&x, v)| {
            let d = v.norm_sqr() * h0;
            (m1 + x * d, m2 + x * x * d)
        });
        let (p_mean, p_sq, aliased) = spectral_moments(&out, h0);

        let mut herm = vec![0.0; self.out_dim];
        let mut coeffs = vec![C64::new(0.0, 0.0); self.out_dim];
        for (&x, v) in frame.a.iter().zip(&out) {
            hermite_functions(x, &mut herm)?;
            for (c, h) in coeffs.iter_mut().zip(&herm) {
                *c += v * (h * h0);
            }
        }
        let kept: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        let state = StateVector::new(vec![self.out_dim], coeffs)?.normalized()?;
        Ok((
            GateShotRecord {
                q: frame.q,
                theta: frame.theta,
                y,
                p_disp,
                fidelity,
                moments: OutputMoments { x_mean, x_sq, p_mean, p_sq },
                output_state: state,
                fock_leakage: (1.0 - kept).max(0.0),
            },
            aliased,
        ))
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(|k| if k == n - 1 { hi } else { lo + h * k as f64 }).collect()
}

/// `(⟨p⟩, ⟨p²⟩)` of a normalized sampled wavefunction via its DFT, and
/// whether the top tenth of the band carries more than the alias tolerance.
fn spectral_moments(psi: &[C64], h: f64) -> (f64, f64, bool) {
    let n = psi.len();
    let mut buf = psi.to_vec();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    let dk = 2.0 * PI / (n as f64 * h);
    let kmax = PI / h;
    let (mut total, mut m1, mut m2, mut edge) = (0.0, 0.0, 0.0, 0.0);
    for (j, v) in buf.iter().enumerate() {
        let k = if j < n.div_ceil(2) { j as f64 } else { j as f64 - n as f64 } * dk;
        let wgt = v.norm_sqr();
        total += wgt;
        m1 += k * wgt;
        m2 += k * k * wgt;
        if k.abs() > 0.9 * kmax {
            edge += wgt;
        }
    }
    (m1 / total, m2 / total, edge > ALIAS_TOLERANCE * total)
}
