use piezowave_core::decay::{self, DecayModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ETA: f64 = 0.5;

fn times() -> Vec<f64> {
    (0..=400).map(|i| 0.25 * i as f64).collect()
}

fn series(model: DecayModel, e0: f64, omega: f64, t: &[f64]) -> Vec<f64> {
    t.iter()
        .map(|&s| match model {
            DecayModel::Exponential => e0 * (-omega * s).exp(),
            DecayModel::Polynomial => e0 * (1.0 + omega * ETA * s).powf(-1.0 / ETA),
            DecayModel::Logarithmic => {
                e0 * (1.0 + omega * ETA * decay::log_clock(s, 1.0)).powf(-1.0 / ETA)
            }
        })
        .collect()
}

#[test]
fn model_selection_recovers_the_generating_family() {
    let t = times();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for model in [
        DecayModel::Exponential,
        DecayModel::Polynomial,
        DecayModel::Logarithmic,
    ] {
        for _ in 0..30 {
            let omega = rng.gen_range(0.05..1.0);
            let e0 = rng.gen_range(0.1..10.0);
            let e = series(model, e0, omega, &t);
            let fits = decay::select_model(&t, &e, ETA, 1.0, None).unwrap();
            assert_eq!(
                fits[0].model,
                model,
                "omega = {omega}: {:?}",
                fits.iter().map(|f| f.rmse).collect::<Vec<_>>()
            );
            assert!(
                (fits[0].omega_fit - omega).abs() <= 1e-6 * omega,
                "{} vs {omega}",
                fits[0].omega_fit
            );
        }
    }
}

#[test]
fn noisy_rates_are_recovered_approximately() {
    let t = times();
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..30 {
        let omega = rng.gen_range(0.05..0.5);
        let e: Vec<f64> = series(DecayModel::Exponential, 1.0, omega, &t)
            .into_iter()
            .map(|v| v * (1.0 + rng.gen_range(-1e-3..1e-3)))
            .collect();
        let fit = decay::fit_exponential(&t, &e, None).unwrap();
        assert!(
            (fit.omega_fit - omega).abs() <= 1e-3,
            "{} vs {omega}",
            fit.omega_fit
        );
    }
}

#[test]
fn accepted_fits_dominate_the_series() {
    let t = times();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for model in [
        DecayModel::Exponential,
        DecayModel::Polynomial,
        DecayModel::Logarithmic,
    ] {
        for _ in 0..30 {
            let omega = rng.gen_range(0.05..1.0);
            let e: Vec<f64> = series(model, 2.0, omega, &t)
                .into_iter()
                .map(|v| v * (1.0 + rng.gen_range(-0.05..0.05)))
                .collect();
            for fit in decay::select_model(&t, &e, ETA, 1.0, None).unwrap() {
                assert!(fit.omega <= fit.omega_fit);
                if !fit.accepted {
                    continue;
                }
                let env = match fit.model {
                    DecayModel::Exponential => decay::exponential_envelope(e[0], fit.omega, &t),
                    DecayModel::Polynomial => decay::rational_envelope(e[0], fit.omega, ETA, &t),
                    DecayModel::Logarithmic => {
                        let clock: Vec<f64> = t.iter().map(|&s| decay::log_clock(s, 1.0)).collect();
                        decay::rational_envelope(e[0], fit.omega, ETA, &clock)
                    }
                };
                for (v, b) in e.iter().zip(&env) {
                    assert!(*v <= b * (1.0 + 1e-9), "{:?}: {v} above {b}", fit.model);
                }
            }
        }
    }
}

#[test]
fn nonpositive_samples_are_rejected() {
    let t = times();
    let mut e = series(DecayModel::Exponential, 1.0, 0.1, &t);
    e[7] = 0.0;
    assert!(decay::fit_exponential(&t, &e, None).is_err());
    assert!(decay::fit_polynomial(
        &t,
        &series(DecayModel::Polynomial, 1.0, 0.1, &t),
        -1.0,
        None
    )
    .is_err());
}
