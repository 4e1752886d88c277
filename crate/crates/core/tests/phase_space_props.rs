use std::f64::consts::{FRAC_1_PI, SQRT_2};

use cubist::ancilla::{optimize_ancilla, OptimizerConfig};
use cubist::fock::StateVector;
use cubist::grid_io::Axis;
use cubist::phase_space::*;
use cubist::C64;
use proptest::prelude::*;

fn vacuum_wigner(u: f64, v: f64) -> f64 {
    (-u * u - v * v).exp() * FRAC_1_PI
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn parity_states_are_x_symmetric(c in prop::collection::vec(-1.0f64..1.0, 6)) {
        prop_assume!(c.iter().map(|v| v * v).sum::<f64>() > 1e-3);
        let coeffs: Vec<C64> = c
            .iter()
            .enumerate()
            .map(|(n, &v)| if n % 2 == 0 { C64::new(v, 0.0) } else { C64::new(0.0, v) })
            .collect();
        let s = StateVector::from_coefficients(&coeffs).unwrap().normalized().unwrap();
        let x = Axis::new(-4.0, 4.0, 41).unwrap();
        let p = Axis::new(-4.0, 4.0, 33).unwrap();
        let w = wigner_of_state(&s, x, p).unwrap();
        for ix in 0..x.count {
            for ip in 0..p.count {
                prop_assert!((w.get(ix, ip) - w.get(x.count - 1 - ix, ip)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn generalized_projector_keeps_weight(q in -1.0f64..1.0, y in -1.0f64..1.0, t in 0.2f64..0.8, th in -1.0f64..1.0) {
        let (x, p) = WignerGrid::default_axes();
        let w = wigner_of_state(&StateVector::vacuum(3).unwrap(), x, p).unwrap();
        let params = ProjectorParams::new(q, y, t, th).unwrap();
        let m = generalized_projector_wigner(&w, &params, None).unwrap();
        let scaled = m.integral() * ((1.0 - t) * t).sqrt() * th.cos().abs();
        prop_assert!((scaled - w.integral()).abs() < 1e-3, "{} vs {}", scaled, w.integral());
    }
}

#[test]
fn reference_values() {
    let x = Axis::new(-1.0, 1.0, 3).unwrap();
    let w = wigner_of_state(&StateVector::vacuum(4).unwrap(), x, x).unwrap();
    assert!((w.get(1, 1) - FRAC_1_PI).abs() < 1e-12);
    let w = wigner_of_state(&StateVector::fock(4, 1).unwrap(), x, x).unwrap();
    assert!((w.get(1, 1) + FRAC_1_PI).abs() < 1e-12);
    assert!((airy(1.0).unwrap() - 0.135_292_416_3).abs() < 1e-10);
    assert!(airy(10.0).unwrap() < airy(5.0).unwrap() && airy(5.0).unwrap() < airy(1.0).unwrap());
}

#[test]
fn cubic_ridge_follows_parabola() {
    let gamma = 0.1;
    let x = Axis::new(-3.0, 3.0, 13).unwrap();
    let p = Axis::new(-2.0, 6.0, 8001).unwrap();
    let w = ideal_cubic_wigner(gamma, x, p).unwrap();
    let k = (4.0 / (3.0 * gamma)).cbrt();
    // Ai peaks at −1.0188; the ridge sits that far above 3γx² in p
    let shift = 1.018_792_97 / k;
    for ix in 0..x.count {
        let xv = x.value(ix);
        let best = (0..p.count).max_by(|&a, &b| w.get(ix, a).total_cmp(&w.get(ix, b))).unwrap();
        let off = p.value(best) - 3.0 * gamma * xv * xv;
        assert!((off - shift).abs() <= 2.0 * p.step(), "x={xv}: offset {off} vs {shift}");
    }
}

#[test]
fn projector_examples() {
    let (x, p) = WignerGrid::default_axes();
    let vac = wigner_of_state(&StateVector::vacuum(3).unwrap(), x, p).unwrap();
    let fock = wigner_of_state(&StateVector::fock(4, 1).unwrap(), x, p).unwrap();

    // q = y = 0 is time reversal times 2, and twice gives 4 W
    let once = projector_wigner(&fock, 0.0, 0.0, None).unwrap();
    for ix in 0..x.count {
        for ip in 0..p.count {
            assert_eq!(once.get(ix, ip), 2.0 * fock.get(ix, p.count - 1 - ip));
        }
    }
    let twice = projector_wigner(&once, 0.0, 0.0, None).unwrap();
    for (a, b) in twice.values.iter().zip(&fock.values) {
        assert_eq!(*a, 4.0 * b);
    }

    // vacuum, q = 1: peak 2/π at (√2, 0)
    let m = projector_wigner(&vac, 1.0, 0.0, None).unwrap();
    let (mut best, mut at) = (f64::NEG_INFINITY, (0.0, 0.0));
    for ix in 0..m.x_axis.count {
        for ip in 0..m.p_axis.count {
            if m.get(ix, ip) > best {
                best = m.get(ix, ip);
                at = (m.x_axis.value(ix), m.p_axis.value(ip));
            }
        }
    }
    assert!((best - 2.0 * FRAC_1_PI).abs() < 1e-12);
    assert!((at.0 - SQRT_2).abs() < 1e-12 && at.1.abs() < 1e-12);

    // T = 0.8, q = y = θ = 0: x squeezed by z₁ = 2
    let params = ProjectorParams::new(0.0, 0.0, 0.8, 0.0).unwrap();
    assert!((params.z1() - 2.0).abs() < 1e-15);
    let ax = Axis::new(-2.0, 2.0, 41).unwrap();
    let g = generalized_projector_wigner(&vac, &params, Some((ax, ax))).unwrap();
    for ix in 0..ax.count {
        for ip in 0..ax.count {
            let (xv, pv) = (ax.value(ix), ax.value(ip));
            let want = vacuum_wigner(2.0 * xv, -0.5 * pv) / 0.4;
            assert!((g.get(ix, ip) - want).abs() < 2e-3, "({xv},{pv}) {} vs {want}", g.get(ix, ip));
        }
    }
}

#[test]
fn balanced_reduction_on_three_ancillas() {
    let opt3 = optimize_ancilla(3, &OptimizerConfig::default()).unwrap().state().unwrap();
    for anc in [StateVector::vacuum(4).unwrap(), StateVector::fock(4, 1).unwrap(), opt3] {
        for &(q, y) in &[(0.0, 0.0), (0.3, -0.2), (-0.7, 0.45)] {
            let r = cubist::validation::projector_reduction_residual(&anc, q, y).unwrap();
            assert!(r < 1e-6, "({q},{y}): {r}");
        }
    }
}

#[test]
fn fringes_increase_with_cutoff() {
    let (x, p) = WignerGrid::default_axes();
    let mut last = 0;
    for n in [1, 3, 5, 9] {
        let s = optimize_ancilla(n, &OptimizerConfig::default()).unwrap().state().unwrap();
        let w = wigner_of_state(&s, x, p).unwrap();
        let k = w.sign_changes_along_p(w.nearest_x(0.0));
        assert!(k >= last, "N={n}: {k} < {last}");
        last = k;
    }
}
