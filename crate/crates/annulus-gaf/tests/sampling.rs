use std::f64::consts::PI;

use annulus_gaf::gaf::{self, DensityConfig, Model, Truncation};
use annulus_gaf::{Complex, LaurentSample};
use rand::SeedableRng;
use rayon::prelude::*;
use rand_chacha::ChaCha8Rng;

fn window(model: &Model, margin: f64) -> (f64, f64) {
    (if model.q() > 0.0 { model.q() + margin } else { 0.0 }, 1.0 - margin)
}

#[test]
fn zeros_match_the_argument_principle() {
    let model = Model::annulus(0.3, 0.5).unwrap();
    let margin = 0.05;
    let trunc = Truncation::for_margin(&model, margin).unwrap();
    let (inner, outer) = window(&model, margin);
    for replica in 0..6 {
        let s = gaf::sample(&model, trunc, 5, replica);
        let zs = gaf::find_zeros(&s, margin).unwrap();
        let n_neg = trunc.negative as i64;
        let wind_out = gaf::argument_principle_count(&s, outer) + n_neg;
        let wind_in = gaf::argument_principle_count(&s, inner) + n_neg;
        assert_eq!(zs.zeros.len() as i64, wind_out - wind_in, "replica {replica}");
        assert!(zs.residual_max < gaf::RESIDUAL_TOL);
    }
}

#[test]
fn same_seed_same_zeros() {
    let model = Model::annulus(0.4, 0.8).unwrap();
    let trunc = Truncation::for_margin(&model, 0.05).unwrap();
    let a = gaf::find_zeros(&gaf::sample(&model, trunc, 99, 3), 0.05).unwrap();
    let b = gaf::find_zeros(&gaf::sample(&model, trunc, 99, 3), 0.05).unwrap();
    assert_eq!(a.zeros, b.zeros);
    let c = gaf::find_zeros(&gaf::sample(&model, trunc, 100, 3), 0.05).unwrap();
    assert_ne!(a.zeros, c.zeros);
}

#[test]
fn density_estimate_is_independent_of_thread_count() {
    let cfg = DensityConfig { model: Model::annulus(0.3, 0.3).unwrap(), margin: 0.1, bins: 5, samples: 120, seed: 3, truncation: None };
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| gaf::mc_density(&cfg).unwrap());
    let parallel = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| gaf::mc_density(&cfg).unwrap());
    assert_eq!(serial, parallel);
}

#[test]
fn zero_counts_are_stable_under_longer_truncation() {
    let model = Model::annulus(0.3, 0.3).unwrap();
    let margin = 0.1;
    let base = Truncation::for_margin(&model, margin).unwrap();
    let extra = 16;
    let n = 200;
    let changed = (0..n).into_par_iter().filter(|&replica| {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        rng.set_stream(replica);
        let short = gaf::sample(&model, base, 17, replica);
        // Same Gaussians for the shared modes, fresh ones for 16 extra modes
        // on either side.
        let mut coeffs: Vec<Complex> = (0..extra)
            .rev()
            .map(|k| gaf::standard_complex_gaussian(&mut rng) * model.scale(-((base.negative + 1 + k) as i64)))
            .collect();
        coeffs.extend_from_slice(short.coeffs());
        coeffs.extend((1..=extra).map(|k| gaf::standard_complex_gaussian(&mut rng) * model.scale((base.positive + k) as i64)));
        let long = LaurentSample::from_coefficients(coeffs, base.negative + extra, model.q()).unwrap();
        let a = gaf::find_zeros(&short, margin).unwrap().zeros.len();
        let b = gaf::find_zeros(&long, margin).unwrap().zeros.len();
        a != b
    }).count() as u64;
    assert!(changed * 100 <= n, "{changed} of {n} samples changed their count");
}

#[test]
fn values_at_alpha_and_alpha_hat_are_uncorrelated() {
    let n = 4000;
    let corr = gaf::pair_independence(0.35, Complex::from_polar(0.6, 0.8), n, 21).unwrap();
    assert!(corr < 4.0 / (n as f64).sqrt(), "{corr}");
}

#[test]
fn zeros_are_spread_evenly_in_angle() {
    let model = Model::annulus(0.3, 0.6).unwrap();
    let margin = 0.1;
    let trunc = Truncation::for_margin(&model, margin).unwrap();
    let samples = 250;
    let counts: Vec<[f64; 4]> = (0..samples as u64)
        .into_par_iter()
        .map(|k| {
            let mut row = [0.0; 4];
            for z in gaf::find_zeros(&gaf::sample(&model, trunc, 8, k), margin).unwrap().zeros {
                let sector = (((z.arg() + PI) / (PI / 2.0)) as usize).min(3);
                row[sector] += 1.0;
            }
            row
        })
        .collect();
    let mean = |s: usize| counts.iter().map(|r| r[s]).sum::<f64>() / samples as f64;
    let var = |s: usize| {
        let m = mean(s);
        counts.iter().map(|r| (r[s] - m).powi(2)).sum::<f64>() / (samples as f64 - 1.0)
    };
    for s in 1..4 {
        // difference of two sector means against the combined error
        let se = ((var(0) + var(s)) / samples as f64).sqrt();
        assert!((mean(0) - mean(s)).abs() < 4.0 * se, "sector {s}");
    }
}

#[test]
fn explicit_polynomial_roots_are_recovered() {
    // X(z) = (z − 0.5)(z + 0.6i) written as a Laurent polynomial with no
    // negative modes.
    let a = Complex::new(0.5, 0.0);
    let b = Complex::new(0.0, -0.6);
    let coeffs = vec![a * b, -(a + b), Complex::new(1.0, 0.0)];
    let s = LaurentSample::from_coefficients(coeffs, 0, 0.2).unwrap();
    let mut zs = gaf::find_zeros(&s, 0.05).unwrap().zeros;
    zs.sort_by(|x, y| x.re.total_cmp(&y.re));
    assert!((zs[0] - b).norm() < 1e-12);
    assert!((zs[1] - a).norm() < 1e-12);
}

#[test]
fn invalid_requests_are_rejected() {
    assert!(Model::annulus(1.2, 0.5).is_err());
    assert!(Model::annulus(0.3, -1.0).is_err());
    assert!(Model::disk(f64::NAN).is_err());
    let model = Model::annulus(0.3, 0.3).unwrap();
    assert!(Truncation::for_margin(&model, 0.5).is_err());
    let cfg = DensityConfig { model, margin: 0.1, bins: 4, samples: 10, seed: 0, truncation: None };
    assert!(gaf::mc_density(&cfg).is_err());
}
