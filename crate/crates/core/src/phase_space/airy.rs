use std::f64::consts::PI;

use crate::error::{CubistError, Result};

const AI0: f64 = 0.355_028_053_887_817_239;
const AIP0: f64 = 0.258_819_403_792_806_798;
const SEAM: f64 = 6.0;

/// Airy function Ai(x) for |x| ≤ 40: Maclaurin series on |x| ≤ 6, asymptotic
/// expansions (truncated at the smallest term) beyond.
pub fn airy(x: f64) -> Result<f64> {
    if !(x.abs() <= 40.0) {
        return Err(CubistError::AiryDomain(x));
    }
    if x.abs() <= SEAM {
        Ok(series(x))
    } else if x > 0.0 {
        Ok(asymptotic_pos(x))
    } else {
        Ok(asymptotic_neg(x))
    }
}

fn series(x: f64) -> f64 {
    let x3 = x * x * x;
    let mut f = 1.0;
    let mut g = x;
    let mut sf = f;
    let mut sg = g;
    for k in 1..200 {
        let kf = k as f64;
        f *= x3 / ((3.0 * kf - 1.0) * (3.0 * kf));
        g *= x3 / ((3.0 * kf) * (3.0 * kf + 1.0));
        sf += f;
        sg += g;
        if f.abs() < 1e-18 * sf.abs().max(1.0) && g.abs() < 1e-18 * sg.abs().max(1.0) {
            break;
        }
    }
    AI0 * sf - AIP0 * sg
}

/// u_k = Γ(3k + 1/2) / (54ᵏ k! Γ(k + 1/2))
fn coefficients(n: usize) -> Vec<f64> {
    let mut u = vec![1.0; n];
    for k in 1..n {
        let kf = k as f64;
        u[k] = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
            / ((2.0 * kf - 1.0) * 216.0 * kf);
    }
    u
}

fn asymptotic_pos(x: f64) -> f64 {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let u = coefficients(90);
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut zk = 1.0;
    for (k, uk) in u.iter().enumerate() {
        let term = uk / zk;
        if term.abs() >= prev {
            break;
        }
        sum += if k % 2 == 0 { term } else { -term };
        prev = term.abs();
        zk *= zeta;
    }
    (-zeta).exp() / (2.0 * PI.sqrt() * x.powf(0.25)) * sum
}

fn asymptotic_neg(x: f64) -> f64 {
    let ax = -x;
    let zeta = 2.0 / 3.0 * ax.powf(1.5);
    let u = coefficients(90);
    let mut p = 0.0;
    let mut q = 0.0;
    let mut prev = f64::INFINITY;
    let mut zk = 1.0;
    for (k, uk) in u.iter().enumerate() {
        let term = uk / zk;
        if term.abs() >= prev {
            break;
        }
        prev = term.abs();
        // P takes even k with sign (−1)^{k/2}, Q odd k with sign (−1)^{(k−1)/2}
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
        zk *= zeta;
    }
    let phase = zeta + PI / 4.0;
    (phase.sin() * p - phase.cos() * q) / (PI.sqrt() * ax.powf(0.25))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert!((airy(0.0).unwrap() - 0.355_028_053_887_817_2).abs() < 1e-15);
        assert!((airy(1.0).unwrap() - 0.135_292_416_312_881_4).abs() < 1e-14);
        // high-precision references
        assert!((airy(-2.0).unwrap() - 0.227_407_428_201_685_6).abs() < 1e-12);
        assert!((airy(10.0).unwrap() - 1.104_753_255_289_868_6e-10).abs() < 1e-20);
        assert!((airy(-10.0).unwrap() - 0.040_241_238_486_443_19).abs() < 1e-11);
        assert!((airy(5.0).unwrap() - 1.083_444_281_360_744_3e-4).abs() < 1e-13);
    }

    #[test]
    fn seam_continuity() {
        for &s in &[SEAM, -SEAM] {
            let inner = series(s);
            let outer = if s > 0.0 { asymptotic_pos(s) } else { asymptotic_neg(s) };
            assert!((inner - outer).abs() < 1e-10, "seam {s}: {inner} vs {outer}");
        }
    }

    #[test]
    fn decay_and_domain() {
        let (a1, a5, a10) = (airy(1.0).unwrap(), airy(5.0).unwrap(), airy(10.0).unwrap());
        assert!(a10 < a5 && a5 < a1 && a10 > 0.0);
        assert!(airy(40.5).is_err());
        assert!(airy(-41.0).is_err());
        assert!(airy(f64::NAN).is_err());
    }
}
