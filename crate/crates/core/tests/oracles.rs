//! Waveform-level oracles: Monte Carlo estimates of the correlation-statistic
//! moments checked against the closed forms they are supposed to follow.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use phyauth_core::authentication::{
    correlation_statistic, eve_hypothesis_stats, eve_tag_estimate, key_detection_probability,
    ml_decode_key, user_hypothesis_stats, user_tag_estimate, TagContext, TagKey,
};
use phyauth_core::channel::{noise_variance, sample_realization, SystemConfig};
use phyauth_core::montecarlo::{
    assign_keys, run_trials, synthesize_received_eve, synthesize_received_user, trial_stream,
    SplitSpec, TrialOptions, TrialPlan, TrialSignals,
};
use phyauth_core::numerics::draw_complex_normal;
use phyauth_core::powerctl::PowerSplit;
use phyauth_core::precoding::{build_precoder_set, PrecoderSet};
use phyauth_core::RngStream;

fn small_cfg() -> SystemConfig {
    SystemConfig {
        tag_length: 512,
        ..SystemConfig::default()
    }
}

/// Per-symbol corruption variance implied by the H0 variance formula:
/// var0 = (L_t/2)(1 + v) => v = 2 var0 / L_t - 1.
fn corruption_from_var0(var0: f64, tag_length: usize) -> f64 {
    2.0 * var0 / tag_length as f64 - 1.0
}

#[allow(clippy::too_many_arguments)]
fn empirical_user_error_variance(
    cfg: &SystemConfig,
    real: &phyauth_core::channel::ChannelRealization,
    set: &PrecoderSet,
    split: &PowerSplit,
    u: usize,
    sigma_n: f64,
    seed: u64,
    trials: u32,
) -> f64 {
    let keys = assign_keys(seed, 0, cfg.users, 256);
    let mut acc = 0.0;
    for t in 0..trials {
        let stream = trial_stream(seed, 0, t);
        let mut rng = stream.rng();
        let signals = TrialSignals::draw_with(&mut rng, cfg, &keys);
        let noise = draw_complex_normal(&mut rng, cfg.tag_length) * Complex64::from(sigma_n);
        let y = synthesize_received_user(real, set, split, &signals, &noise, u).unwrap();
        let estimate = user_tag_estimate(&y, &signals.data[u], real, set, split, u).unwrap();
        acc += (&estimate - &signals.tags[u].symbols).norm_squared();
    }
    acc / (trials as usize * cfg.tag_length) as f64
}

#[test]
fn user_estimate_error_variance_matches_h0_formula() {
    let cfg = small_cfg();
    let real = sample_realization(&cfg, &RngStream::new(200, 0)).unwrap();
    let sigma_n2 = noise_variance(&cfg).unwrap();
    // regularized precoder keeps the multiuser term alive, so every term of
    // the closed form is exercised
    let p_tx = 10f64.powf((10.0 - 30.0) / 10.0);
    let beta = cfg.users as f64 * sigma_n2 / p_tx;
    let set = build_precoder_set(&real.aggregate(), beta, 0.6, cfg.an_streams).unwrap();
    let split = PowerSplit::new(p_tx, 0.6, 0.04).unwrap();
    let u = 1;
    let stats = user_hypothesis_stats(&real, &set, &split, u, sigma_n2, cfg.tag_length).unwrap();
    let expected = corruption_from_var0(stats.var0, cfg.tag_length);
    let empirical =
        empirical_user_error_variance(&cfg, &real, &set, &split, u, sigma_n2.sqrt(), 201, 1000);
    let rel = (empirical - expected).abs() / expected;
    assert!(rel < 0.05, "empirical {empirical}, expected {expected}");
}

#[test]
fn user_estimate_error_shrinks_with_transmit_power() {
    let cfg = small_cfg();
    let real = sample_realization(&cfg, &RngStream::new(202, 0)).unwrap();
    let sigma_n2 = noise_variance(&cfg).unwrap();
    // zero forcing + null-space AN leaves only the additive-noise term
    let set = build_precoder_set(&real.aggregate(), 0.0, 0.6, cfg.an_streams).unwrap();
    let low = PowerSplit::new(0.01, 0.6, 0.04).unwrap();
    let high = PowerSplit::new(1.0, 0.6, 0.04).unwrap();
    let sigma_n = sigma_n2.sqrt();
    let v_low = empirical_user_error_variance(&cfg, &real, &set, &low, 2, sigma_n, 203, 400);
    let v_high = empirical_user_error_variance(&cfg, &real, &set, &high, 2, sigma_n, 203, 400);
    let ratio = v_low / v_high;
    assert!(
        (ratio - 100.0).abs() < 10.0,
        "variance ratio {ratio}, expected about 100"
    );
}

#[test]
fn eve_estimate_error_variance_matches_h0_formula() {
    let cfg = small_cfg();
    let real = sample_realization(&cfg, &RngStream::new(204, 0)).unwrap();
    let sigma_n2 = noise_variance(&cfg).unwrap();
    let (phi, p_t) = phyauth_core::powerctl::allocate_from_factors(0.002, 100.0).unwrap();
    let set = build_precoder_set(&real.aggregate(), 0.0, phi, cfg.an_streams).unwrap();
    let split = PowerSplit::new(1.0, phi, p_t).unwrap();
    let u = 0;
    let stats = eve_hypothesis_stats(&real, &set, &split, u, sigma_n2, cfg.tag_length).unwrap();
    let expected = corruption_from_var0(stats.var0, cfg.tag_length);
    let keys = assign_keys(205, 0, cfg.users, 256);
    let trials = 1000u32;
    let mut acc = 0.0;
    for t in 0..trials {
        let mut rng = trial_stream(205, 0, t).rng();
        let signals = TrialSignals::draw_with(&mut rng, &cfg, &keys);
        let flat = draw_complex_normal(&mut rng, cfg.eve_antennas * cfg.tag_length)
            * Complex64::from(sigma_n2.sqrt());
        let noise = DMatrix::from_fn(cfg.eve_antennas, cfg.tag_length, |r, c| {
            flat[r * cfg.tag_length + c]
        });
        let y = synthesize_received_eve(&real, &set, &split, &signals, &noise).unwrap();
        let estimate =
            eve_tag_estimate(&y, &signals.data, &signals.tags, &real, &set, &split, u).unwrap();
        acc += (&estimate - &signals.tags[u].symbols).norm_squared();
    }
    let empirical = acc / (trials as usize * cfg.tag_length) as f64;
    let rel = (empirical - expected).abs() / expected;
    assert!(rel < 0.05, "empirical {empirical}, expected {expected}");
}

#[test]
fn eve_estimate_error_floors_under_artificial_noise() {
    let cfg = small_cfg();
    let real = sample_realization(&cfg, &RngStream::new(206, 0)).unwrap();
    let (phi, p_t) = phyauth_core::powerctl::allocate_from_factors(0.002, 100.0).unwrap();
    let set = build_precoder_set(&real.aggregate(), 0.0, phi, cfg.an_streams).unwrap();
    let split = PowerSplit::new(1.0, phi, p_t).unwrap();
    // sigma -> 0 limit of the closed form keeps only the AN term
    let asymptotic = corruption_from_var0(
        phyauth_core::powerctl::eve_asymptotic_var0(&real, &set, &split, 0, cfg.tag_length)
            .unwrap(),
        cfg.tag_length,
    );
    assert!(asymptotic > 0.0);
    let keys = assign_keys(207, 0, cfg.users, 256);
    let trials = 500u32;
    let mut acc = 0.0;
    for t in 0..trials {
        let mut rng = trial_stream(207, 0, t).rng();
        let signals = TrialSignals::draw_with(&mut rng, &cfg, &keys);
        // noiseless receiver
        let noise = DMatrix::zeros(cfg.eve_antennas, cfg.tag_length);
        let y = synthesize_received_eve(&real, &set, &split, &signals, &noise).unwrap();
        let estimate =
            eve_tag_estimate(&y, &signals.data, &signals.tags, &real, &set, &split, 0).unwrap();
        acc += (&estimate - &signals.tags[0].symbols).norm_squared();
    }
    let empirical = acc / (trials as usize * cfg.tag_length) as f64;
    let rel = (empirical - asymptotic).abs() / asymptotic;
    assert!(
        rel < 0.10 && empirical > 0.5 * asymptotic,
        "empirical {empirical}, asymptotic {asymptotic}"
    );
}

#[test]
fn h0_statistic_variance_matches_var0_for_user_and_eve() {
    let cfg = small_cfg();
    let real = sample_realization(&cfg, &RngStream::new(208, 0)).unwrap();
    let sigma_n2 = noise_variance(&cfg).unwrap();
    let p_tx = 0.1;
    let beta = cfg.users as f64 * sigma_n2 / p_tx;
    let set = build_precoder_set(&real.aggregate(), beta, 0.5, cfg.an_streams).unwrap();
    let split = PowerSplit::new(p_tx, 0.5, 0.04).unwrap();
    let u = 3;
    let user_var0 = user_hypothesis_stats(&real, &set, &split, u, sigma_n2, cfg.tag_length)
        .unwrap()
        .var0;
    let eve_var0 = eve_hypothesis_stats(&real, &set, &split, u, sigma_n2, cfg.tag_length)
        .unwrap()
        .var0;
    let keys = assign_keys(209, 0, cfg.users, 256);
    let trials = 10_000u32;
    let mut user_taus = Vec::with_capacity(trials as usize);
    let mut eve_taus = Vec::with_capacity(trials as usize);
    for t in 0..trials {
        let mut rng = trial_stream(209, 0, t).rng();
        let signals = TrialSignals::draw_with(&mut rng, &cfg, &keys);
        let noise = draw_complex_normal(&mut rng, cfg.tag_length) * Complex64::from(sigma_n2.sqrt());
        let flat = draw_complex_normal(&mut rng, cfg.eve_antennas * cfg.tag_length)
            * Complex64::from(sigma_n2.sqrt());
        let eve_noise = DMatrix::from_fn(cfg.eve_antennas, cfg.tag_length, |r, c| {
            flat[r * cfg.tag_length + c]
        });
        // expected tag from a wrong key in both pipelines
        let wrong = TagContext::new(&signals.data[u]).tag(&TagKey::from_index(100_000 + t as u64));
        let y = synthesize_received_user(&real, &set, &split, &signals, &noise, u).unwrap();
        let est = user_tag_estimate(&y, &signals.data[u], &real, &set, &split, u).unwrap();
        user_taus.push(correlation_statistic(&est, &wrong).unwrap());
        let ye = synthesize_received_eve(&real, &set, &split, &signals, &eve_noise).unwrap();
        let est_e =
            eve_tag_estimate(&ye, &signals.data, &signals.tags, &real, &set, &split, u).unwrap();
        eve_taus.push(correlation_statistic(&est_e, &wrong).unwrap());
    }
    for (label, taus, var0) in [
        ("user", &user_taus, user_var0),
        ("eve", &eve_taus, eve_var0),
    ] {
        let n = taus.len() as f64;
        let mean = taus.iter().sum::<f64>() / n;
        let var = taus.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
        let rel = (var - var0).abs() / var0;
        assert!(rel < 0.05, "{label}: empirical {var}, var0 {var0}");
        // and the H0 mean sits at zero on the statistic's own scale
        assert!(mean.abs() < 3.0 * (var0 / n).sqrt() + 0.05 * var0.sqrt());
    }
}

#[test]
fn ml_attack_success_tracks_quadrature_smoke() {
    let mut cfg = small_cfg();
    cfg.key_space_size = 16;
    let real = sample_realization(&cfg, &RngStream::new(210, 0)).unwrap();
    let sigma_n2 = noise_variance(&cfg).unwrap();
    let (phi, p_t) = phyauth_core::powerctl::allocate_from_factors(0.002, 100.0).unwrap();
    let set = build_precoder_set(&real.aggregate(), 0.0, phi, cfg.an_streams).unwrap();
    let split = PowerSplit::new(1.0, phi, p_t).unwrap();
    let u = 0;
    let stats = eve_hypothesis_stats(&real, &set, &split, u, sigma_n2, cfg.tag_length).unwrap();
    let analytic = key_detection_probability(&stats, 16).unwrap();
    let keys = assign_keys(211, 0, cfg.users, 16);
    let trials = 600u32;
    let mut hits = 0u32;
    for t in 0..trials {
        let mut rng = trial_stream(211, 0, t).rng();
        let signals = TrialSignals::draw_with(&mut rng, &cfg, &keys);
        let flat = draw_complex_normal(&mut rng, cfg.eve_antennas * cfg.tag_length)
            * Complex64::from(sigma_n2.sqrt());
        let noise = DMatrix::from_fn(cfg.eve_antennas, cfg.tag_length, |r, c| {
            flat[r * cfg.tag_length + c]
        });
        let y = synthesize_received_eve(&real, &set, &split, &signals, &noise).unwrap();
        let est =
            eve_tag_estimate(&y, &signals.data, &signals.tags, &real, &set, &split, u).unwrap();
        if ml_decode_key(&est, &signals.data[u], 16) == keys[u].index() {
            hits += 1;
        }
    }
    let empirical = hits as f64 / trials as f64;
    assert!(
        (empirical - analytic).abs() < 0.06,
        "empirical {empirical}, analytic {analytic}"
    );
}

#[test]
fn empirical_metrics_sit_inside_their_confidence_bands() {
    let cfg = small_cfg();
    let plan = TrialPlan {
        cfg,
        splits: vec![
            SplitSpec {
                strategy: "fixed_psi:0.02".into(),
                phi: 0.5,
                tag_fraction: 0.04,
            },
            SplitSpec {
                strategy: "conventional:0.015".into(),
                phi: 0.8,
                tag_fraction: 0.015,
            },
        ],
        p_tx_dbm: vec![5.0, 15.0],
        n_realizations: 2,
        n_trials: 1500,
        base_seed: 212,
        options: TrialOptions::default(),
    };
    let records = run_trials(&plan).unwrap();
    assert_eq!(records.len(), 8);
    let mut within = 0usize;
    for r in &records {
        let a = r.analytic.as_ref().unwrap();
        let e = r.empirical.as_ref().unwrap();
        let pd_ok =
            (e.detection_prob - a.detection_prob).abs() <= (3.0 * e.detection_ci).max(0.015);
        let fa_ok = (e.false_alarm - plan.cfg.false_alarm_prob).abs()
            <= (3.0 * e.false_alarm_ci).max(0.0035);
        if pd_ok && fa_ok {
            within += 1;
        }
    }
    assert!(
        within as f64 >= 0.95 * records.len() as f64,
        "{within}/{} records within band",
        records.len()
    );

    // one tag-free block: the same plan must keep every probability legal
    for r in &records {
        let a = r.analytic.as_ref().unwrap();
        for p in [a.detection_prob, a.key_detection_prob] {
            assert!((0.0..=1.0).contains(&p));
        }
        let e = r.empirical.as_ref().unwrap();
        for p in [e.detection_prob, e.false_alarm] {
            assert!((0.0..=1.0).contains(&p));
        }
    }
}

/// A tag-power fraction of zero makes the tag path degenerate: the
/// statistics and estimators must refuse rather than divide by zero.
#[test]
fn zero_tag_power_is_rejected_by_the_tag_path() {
    let cfg = small_cfg();
    let real = sample_realization(&cfg, &RngStream::new(213, 0)).unwrap();
    let set = build_precoder_set(&real.aggregate(), 0.0, 0.5, cfg.an_streams).unwrap();
    let split = PowerSplit::new(1.0, 0.5, 0.0).unwrap();
    let sigma_n2 = noise_variance(&cfg).unwrap();
    assert!(user_hypothesis_stats(&real, &set, &split, 0, sigma_n2, cfg.tag_length).is_err());
    assert!(eve_hypothesis_stats(&real, &set, &split, 0, sigma_n2, cfg.tag_length).is_err());
    let y: DVector<Complex64> = DVector::zeros(cfg.tag_length);
    let s: DVector<Complex64> = DVector::zeros(cfg.tag_length);
    assert!(user_tag_estimate(&y, &s, &real, &set, &split, 0).is_err());
}
