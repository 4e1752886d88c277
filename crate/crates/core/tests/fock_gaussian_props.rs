use cubist::fock::*;
use cubist::gaussian::*;
use cubist::C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn state_from(parts: &[(f64, f64)], dims: Vec<usize>) -> StateVector {
    let amps: Vec<C64> = parts.iter().map(|&(a, b)| C64::new(a, b)).collect();
    StateVector::new(dims, amps).unwrap().normalized().unwrap()
}

fn coeffs(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n).prop_filter("non-zero", |v| {
        v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3
    })
}

fn mean_xp(s: &StateVector, mode: usize) -> (f64, f64) {
    let dims = s.mode_dims()[mode];
    let (x, p) = quadrature_ops(dims).unwrap();
    (s.expectation(&x, mode).unwrap().re, s.expectation(&p, mode).unwrap().re)
}

fn photon_number(s: &StateVector) -> f64 {
    let db = s.mode_dims()[1];
    s.amplitudes().iter().enumerate().map(|(k, c)| c.norm_sqr() * ((k / db) + (k % db)) as f64).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tensor_norm_multiplies(a in coeffs(4), b in coeffs(3)) {
        let sa = state_from(&a, vec![4]);
        let sb = state_from(&b, vec![3]);
        let t = tensor(&[sa, sb]).unwrap();
        prop_assert!((t.norm_sqr() - 1.0).abs() < 1e-12);
        prop_assert_eq!(t.mode_dims(), &[4, 3]);
    }

    #[test]
    fn projection_density_matches_marginal(c in coeffs(36), mode in 0usize..3, angle in -3.0f64..3.0, v in -2.5f64..2.5) {
        let s = state_from(&c, vec![3, 4, 3]);
        let (_, density) = project_quadrature(&s, mode, angle, v).unwrap();
        let pdf = homodyne_pdf(&s, mode, angle, &[v]).unwrap()[0];
        prop_assert!((density - pdf).abs() < 1e-12, "{} vs {}", density, pdf);
    }

    #[test]
    fn conditional_states_are_normalized(c in coeffs(16), seed in 0u64..1000) {
        let s = state_from(&c, vec![4, 4]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, cond) = sample_homodyne(&s, 1, 0.4, &mut rng, None).unwrap();
        prop_assert!((cond.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn beam_splitter_conserves_photons(c in coeffs(21), t in 0.05f64..0.95) {
        // support on na + nb <= 5 so no sector is cut by the truncation
        let mut amps = vec![(0.0, 0.0); 36];
        let mut k = 0;
        for na in 0..6 {
            for nb in 0..6 - na {
                amps[na * 6 + nb] = c[k];
                k += 1;
            }
        }
        let s = state_from(&amps, vec![6, 6]);
        let out = s.apply_two(&beam_splitter_op(t, 6, 6).unwrap(), 0, 1).unwrap();
        prop_assert!((photon_number(&out) - photon_number(&s)).abs() < 1e-10);
    }

    #[test]
    fn fock_ops_follow_symplectic_maps(re in -0.8f64..0.8, im in -0.8f64..0.8, s in 0.6f64..1.6, th in -3.0f64..3.0) {
        let dim = 50;
        let alpha = C64::new(re, im);
        let coh = coherent_state(alpha, dim).unwrap();
        let start = [2f64.sqrt() * re, 2f64.sqrt() * im];
        let cases = [
            (squeeze_op(s, dim).unwrap(), SymplecticMap::squeeze(s)),
            (phase_shift_op(th, dim).unwrap(), SymplecticMap::phase_shift(th)),
            (displacement_op(C64::new(0.3, -0.4), dim).unwrap().op, SymplecticMap::displacement_of(C64::new(0.3, -0.4))),
        ];
        for (op, map) in cases {
            let out = coh.apply(&op, 0).unwrap();
            let (x, p) = mean_xp(&out, 0);
            let want = map.apply(&start);
            prop_assert!((x - want[0]).abs() < 1e-8 && (p - want[1]).abs() < 1e-8, "{:?} vs {:?}", (x, p), want);
        }
    }

    #[test]
    fn circuit_map_is_symplectic(t1 in 0.02f64..0.98, t2 in 0.02f64..0.98) {
        prop_assert!(symplectic_of_circuit(t1, t2).unwrap().symplectic_residual() < 1e-12);
    }
}

#[test]
fn gaussian_ops_unitary_at_padded_dims() {
    for dim in [20, 40] {
        assert!(displacement_op(C64::new(0.3, 0.2), dim).unwrap().op.unitary_residual() < 1e-10);
        assert!(squeeze_op(1.3, dim).unwrap().unitary_residual() < 1e-10);
        assert!(phase_shift_op(0.7, dim).unwrap().unitary_residual() < 1e-10);
        assert!(beam_splitter_op(0.3, dim / 2, dim / 2).unwrap().unitary_residual() < 1e-10);
    }
}

#[test]
fn inverse_pairs() {
    let a = C64::new(0.3, 0.2);
    let d = displacement_op(a, 30).unwrap().op.mul(&displacement_op(-a, 30).unwrap().op);
    let id = OperatorMatrix::identity(30);
    // the truncated exponentials are inverse only away from the top levels
    let inner = (d.crop(20).entries() - id.crop(20).entries()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    assert!(inner < 1e-10, "{inner}");
    let s = squeeze_op(1.3, 40).unwrap().mul(&squeeze_op(1.0 / 1.3, 40).unwrap());
    let inner = (s.crop(20).entries() - id.crop(20).entries()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    assert!(inner < 1e-8, "{inner}");
    let full = phase_shift_op(2.0 * std::f64::consts::PI, 10).unwrap();
    assert!((full.entries() - OperatorMatrix::identity(10).entries()).iter().all(|z| z.norm() < 1e-12));
}

#[test]
fn balanced_splitter_twice_reflects() {
    let dim = 20;
    let input = tensor(&[coherent_state(C64::new(0.6, -0.3), dim).unwrap(), StateVector::vacuum(dim).unwrap()]).unwrap();
    let b = beam_splitter_op(0.5, dim, dim).unwrap();
    let out = input.apply_two(&b, 0, 1).unwrap().apply_two(&b, 0, 1).unwrap();
    let (xa, pa) = mean_xp(&input, 0);
    let (xb, pb) = mean_xp(&out, 1);
    assert!((xb - xa).abs() < 1e-10 && (pb - pa).abs() < 1e-10);
    let (x0, p0) = mean_xp(&out, 0);
    assert!(x0.abs() < 1e-10 && p0.abs() < 1e-10);
    let back = b.mul(&b.adjoint());
    assert!((back.entries() - OperatorMatrix::identity(dim * dim).entries()).iter().all(|z| z.norm() < 1e-10));
}

#[test]
fn sampler_statistics() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let vac = StateVector::vacuum(10).unwrap();
    let sampler = HomodyneSampler::new(&vac, 0, 0.0, None).unwrap();
    let draws: Vec<f64> = (0..100_000).map(|_| sampler.draw(&mut rng)).collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
    assert!(mean.abs() < 0.01 && (var - 0.5).abs() < 0.01, "{mean} {var}");

    let (sq, _) = squeezed_vacuum(10f64.powf(-0.5), 40).unwrap();
    let sampler = HomodyneSampler::new(&sq, 0, 0.0, None).unwrap();
    let draws: Vec<f64> = (0..100_000).map(|_| sampler.draw(&mut rng)).collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
    assert!((var - 0.05).abs() < 0.002, "{var}");
}

#[test]
fn vacuum_marginal_normalized_at_any_angle() {
    let vac = StateVector::vacuum(6).unwrap();
    let grid: Vec<f64> = (0..=1200).map(|k| -6.0 + 0.01 * k as f64).collect();
    for angle in [0.0, 0.7, 2.0] {
        let pdf = homodyne_pdf(&vac, 0, angle, &grid).unwrap();
        let mass: f64 = pdf.windows(2).map(|w| 0.005 * (w[0] + w[1])).sum();
        assert!((mass - 1.0).abs() < 1e-6);
    }
}
