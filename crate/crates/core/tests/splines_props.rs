//! Property suite for the B-spline basis: partition of unity, local
//! support, analytic integrals against quadrature, Bernstein equivalence,
//! and mixture normalization, over randomized clamped knot sequences.

mod common;

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use specden::splines::{BsplineDensityBasis, KnotSequence};

/// Random clamped sequence: degree 0..=3, up to 8 spans, occasional zero
/// widths to exercise coincident knots.
fn random_sequence(rng: &mut ChaCha12Rng) -> KnotSequence {
    let degree = rng.gen_range(0..=3usize);
    let spans = rng.gen_range(1..=8usize);
    let unit = Uniform::new(0.0, 1.0f64);
    let mut deltas: Vec<f64> = (0..spans).map(|_| unit.sample(rng)).collect();
    if spans > 1 && rng.gen_bool(0.3) {
        let kill = rng.gen_range(0..spans);
        deltas[kill] = 0.0;
    }
    if deltas.iter().sum::<f64>() == 0.0 {
        deltas[0] = 1.0;
    }
    KnotSequence::from_deltas(&deltas, degree).unwrap()
}

#[test]
fn partition_of_unity_over_random_sequences() {
    let mut rng = ChaCha12Rng::seed_from_u64(101);
    let unit = Uniform::new(0.0, 1.0f64);
    for _ in 0..1000 {
        let ks = random_sequence(&mut rng);
        let mut points = vec![0.0, 1.0, unit.sample(&mut rng), unit.sample(&mut rng)];
        // Knots themselves are the tricky evaluation points.
        points.extend(ks.knots().iter().copied());
        for omega in points {
            let total: f64 = (1..=ks.basis_size())
                .map(|j| ks.basis_value(omega, j).unwrap())
                .sum();
            assert!(
                (total - 1.0).abs() < 1e-12,
                "partition of unity broke: sum {total} at omega {omega} on {:?}",
                ks.knots()
            );
        }
    }
}

#[test]
fn local_support_is_respected() {
    let mut rng = ChaCha12Rng::seed_from_u64(202);
    let unit = Uniform::new(0.0, 1.0f64);
    for _ in 0..300 {
        let ks = random_sequence(&mut rng);
        let r = ks.degree();
        for _ in 0..8 {
            let omega = unit.sample(&mut rng);
            for j in 1..=ks.basis_size() {
                let lo = ks.knots()[j - 1];
                let hi = ks.knots()[j + r];
                if omega < lo || omega > hi {
                    assert_eq!(
                        ks.basis_value(omega, j).unwrap(),
                        0.0,
                        "support leak at omega {omega}, j {j}, knots {:?}",
                        ks.knots()
                    );
                }
            }
        }
    }
}

#[test]
fn analytic_integrals_match_quadrature() {
    let mut rng = ChaCha12Rng::seed_from_u64(303);
    for _ in 0..1000 {
        let ks = random_sequence(&mut rng);
        for j in 1..=ks.basis_size() {
            let analytic = ks.basis_integral(j).unwrap();
            let f = |omega: f64| ks.basis_value(omega, j).unwrap();
            let numeric = common::integrate_piecewise(&f, ks.knots());
            assert!(
                (analytic - numeric).abs() < 1e-8,
                "integral mismatch: analytic {analytic}, quadrature {numeric}, j {j}, knots {:?}",
                ks.knots()
            );
        }
    }
}

/// Beta(a, b) density with integer parameters, in polynomial form so the
/// boundary cases follow the 0^0 = 1 convention.
fn beta_density(omega: f64, a: u64, b: u64) -> f64 {
    let ln_beta = ln_factorial(a - 1) + ln_factorial(b - 1) - ln_factorial(a + b - 1);
    omega.powi((a - 1) as i32) * (1.0 - omega).powi((b - 1) as i32) * (-ln_beta).exp()
}

fn ln_factorial(m: u64) -> f64 {
    (1..=m).map(|i| (i as f64).ln()).sum()
}

#[test]
fn no_internal_knots_reduces_to_beta_densities() {
    for r in 1..=3usize {
        let k = r + 1;
        let basis = BsplineDensityBasis::new(KnotSequence::from_deltas(&[1.0], r).unwrap()).unwrap();
        assert_eq!(basis.knot_sequence().basis_size(), k);
        for j in 1..=k {
            for step in 0..=100 {
                let omega = step as f64 / 100.0;
                let ours = basis.density_value(omega, j).unwrap();
                let reference = beta_density(omega, j as u64, (r + 2 - j) as u64);
                assert!(
                    (ours - reference).abs() < 1e-10,
                    "Beta mismatch r {r} j {j} omega {omega}: ours {ours}, beta {reference}"
                );
            }
        }
    }
}

#[test]
fn densities_integrate_to_one() {
    let mut rng = ChaCha12Rng::seed_from_u64(404);
    for _ in 0..200 {
        let ks = random_sequence(&mut rng);
        let basis = BsplineDensityBasis::new(ks).unwrap();
        for j in 1..=basis.knot_sequence().basis_size() {
            if basis.is_degenerate(j) {
                continue;
            }
            let f = |omega: f64| basis.density_value(omega, j).unwrap();
            let mass = common::integrate_piecewise(&f, basis.knot_sequence().knots());
            assert!(
                (mass - 1.0).abs() < 1e-8,
                "density mass {mass} for j {j} on {:?}",
                basis.knot_sequence().knots()
            );
        }
    }
}

#[test]
fn mixture_integrates_to_total_effective_weight() {
    let mut rng = ChaCha12Rng::seed_from_u64(505);
    let unit = Uniform::new(0.0, 1.0f64);
    for _ in 0..200 {
        let ks = random_sequence(&mut rng);
        let basis = BsplineDensityBasis::new(ks).unwrap();
        let k = basis.knot_sequence().basis_size();
        let mut weights: Vec<f64> = (0..k).map(|_| unit.sample(&mut rng)).collect();
        let scale: f64 = weights.iter().sum::<f64>().max(1.0);
        for w in weights.iter_mut() {
            *w /= scale; // sums to at most 1
        }
        let raw_total: f64 = weights.iter().sum();
        let effective = basis.effective_weights(&weights).unwrap();
        let eff_total: f64 = effective.iter().sum();
        assert!(
            (raw_total - eff_total).abs() < 1e-12,
            "redistribution changed total mass: {raw_total} vs {eff_total}"
        );
        let f = |omega: f64| basis.mixture_value(omega, &weights).unwrap();
        let mass = common::integrate_piecewise(&f, basis.knot_sequence().knots());
        assert!(
            (mass - eff_total).abs() < 1e-8,
            "mixture mass {mass} vs weight total {eff_total} on {:?}",
            basis.knot_sequence().knots()
        );
    }
}

#[test]
fn uniform_weight_mixture_is_a_density() {
    let mut rng = ChaCha12Rng::seed_from_u64(606);
    for _ in 0..100 {
        let ks = random_sequence(&mut rng);
        let basis = BsplineDensityBasis::new(ks).unwrap();
        let k = basis.knot_sequence().basis_size();
        let weights = vec![1.0 / k as f64; k];
        let f = |omega: f64| basis.mixture_value(omega, &weights).unwrap();
        let mass = common::integrate_piecewise(&f, basis.knot_sequence().knots());
        assert!((mass - 1.0).abs() < 1e-8, "uniform mixture mass {mass}");
    }
}
