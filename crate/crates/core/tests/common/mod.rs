//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use cubist::C64;

/// `ŷ(λ′)ψ = λ′Pψ − 3X²ψ/λ′²` by direct ladder arithmetic on a padded vector.
fn apply_y(psi: &[C64], lambda: f64) -> Vec<C64> {
    let len = psi.len() + 3;
    let mut v = psi.to_vec();
    v.resize(len, C64::new(0.0, 0.0));
    let lower = |v: &[C64]| -> Vec<C64> {
        (0..v.len()).map(|k| if k + 1 < v.len() { v[k + 1] * ((k + 1) as f64).sqrt() } else { C64::new(0.0, 0.0) }).collect()
    };
    let raise = |v: &[C64]| -> Vec<C64> {
        (0..v.len()).map(|k| if k > 0 { v[k - 1] * (k as f64).sqrt() } else { C64::new(0.0, 0.0) }).collect()
    };
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = |v: &[C64]| -> Vec<C64> { lower(v).iter().zip(raise(v)).map(|(a, b)| (a + b) * s).collect() };
    let (a, ad) = (lower(&v), raise(&v));
    // P = (a − a†)/(i√2) = −i(a − a†)/√2
    let p: Vec<C64> = a.iter().zip(&ad).map(|(a, b)| (a - b) * C64::new(0.0, -s)).collect();
    let xx = x(&x(&v));
    p.iter().zip(&xx).map(|(p, q)| p * lambda - q * (3.0 / (lambda * lambda))).collect()
}

/// Variance of `ŷ(λ′)` in the normalized state with coefficients `psi`.
pub fn y_variance(psi: &[C64], lambda: f64) -> f64 {
    let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
    let y = apply_y(psi, lambda);
    let mean: f64 = psi.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum::<f64>() / norm;
    let second: f64 = y.iter().map(|c| c.norm_sqr()).sum::<f64>() / norm;
    second - mean * mean
}

/// Grid scan of `f` over the box, then repeated zooms around the best node.
pub fn zoom_minimize(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], coarse: usize, fine: usize, rounds: usize) -> (Vec<f64>, f64) {
    let dims = lo.len();
    let scan = |lo: &[f64], hi: &[f64], nodes: usize| -> (Vec<f64>, f64) {
        let total = nodes.pow(dims as u32);
        let mut best = (vec![0.0; dims], f64::INFINITY);
        let mut pt = vec![0.0; dims];
        for idx in 0..total {
            let mut k = idx;
            for d in 0..dims {
                let i = k % nodes;
                k /= nodes;
                pt[d] = lo[d] + (hi[d] - lo[d]) * i as f64 / (nodes - 1) as f64;
            }
            let v = f(&pt);
            if v < best.1 {
                best = (pt.clone(), v);
            }
        }
        best
    };
    let mut best = scan(lo, hi, coarse);
    let mut half: Vec<f64> = (0..dims).map(|d| 2.0 * (hi[d] - lo[d]) / (coarse - 1) as f64).collect();
    for _ in 0..rounds {
        let l: Vec<f64> = (0..dims).map(|d| best.0[d] - half[d]).collect();
        let h: Vec<f64> = (0..dims).map(|d| best.0[d] + half[d]).collect();
        let cand = scan(&l, &h, fine);
        if cand.1 <= best.1 {
            best = cand;
        }
        for v in half.iter_mut() {
            *v *= 4.0 / (fine - 1) as f64;
        }
    }
    best
}

/// Smallest `Var ŷ(λ′)` over unit vectors on `n + 1` levels (n = 1 or 2) and
/// λ′ in [0.3, 4], from a dense scan of a sphere parametrization.
pub fn brute_force_variance(n: usize) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    match n {
        1 => {
            let f = |v: &[f64]| {
                let psi = [C64::new(v[0].cos(), 0.0), C64::from_polar(v[0].sin(), v[1])];
                y_variance(&psi, v[2])
            };
            zoom_minimize(&f, &[0.0, 0.0, 0.3], &[FRAC_PI_2, 2.0 * PI, 4.0], 41, 9, 40).1
        }
        2 => {
            let f = |v: &[f64]| {
                let psi = [
                    C64::new(v[0].cos(), 0.0),
                    C64::from_polar(v[0].sin() * v[1].cos(), v[2]),
                    C64::from_polar(v[0].sin() * v[1].sin(), v[3]),
                ];
                y_variance(&psi, v[4])
            };
            zoom_minimize(&f, &[0.0, 0.0, 0.0, 0.0, 0.3], &[FRAC_PI_2, FRAC_PI_2, 2.0 * PI, 2.0 * PI, 4.0], 13, 7, 40).1
        }
        _ => panic!("brute force only for n = 1, 2"),
    }
}

/// Analytic Gaussian limit: `Var ŷ(λ′)` in vacuum is `λ′²/2 + 9/(2λ′⁴)`,
/// minimal at `λ′⁶ = 18` with value `(3/4)·18^{1/3}`.
pub fn vacuum_optimum() -> (f64, f64) {
    (18f64.powf(1.0 / 6.0), 0.75 * 18f64.cbrt())
}
