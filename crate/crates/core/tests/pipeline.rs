use cvqkd::keyrate::{secret_key_rate, KeyRateParams};
use cvqkd::protocol::{
    channel_output_cm, ChannelParams, ModulationVariance, Protocol, ReconciliationDirection,
};
use cvqkd::simulation::{estimate_covariance, key_rate_from_samples, sift, simulate_protocol};
use cvqkd::CovarianceMatrix64;

fn channel(t: f64, e: f64) -> ChannelParams {
    ChannelParams::new(t, e).unwrap()
}

fn variance(v: f64) -> ModulationVariance {
    ModulationVariance::new(v).unwrap()
}

#[test]
fn million_round_estimate_within_five_standard_errors() {
    let (ch, v) = (channel(0.5, 0.05), variance(2.0));
    let truth: CovarianceMatrix64 = channel_output_cm(v, ch);
    for p in Protocol::ALL {
        let batch = simulate_protocol(p, ch, v, 1_000_000, 21).unwrap();
        let est = estimate_covariance(&batch).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let d = (est.cm.matrix()[(i, j)] - truth.matrix()[(i, j)]).abs();
                assert!(d <= 5.0 * est.standard_errors[(i, j)], "{p} ({i},{j})");
            }
        }
    }
}

#[test]
fn squeezed_homodyne_keeps_half_the_rounds() {
    let n = 1_000_000;
    let batch = simulate_protocol(
        Protocol::SQUEEZED_HOMODYNE,
        channel(0.7, 0.0),
        variance(5.0),
        n,
        2,
    )
    .unwrap();
    let kept = sift(&batch).len() as f64;
    let sigma = (n as f64 * 0.25).sqrt();
    assert!((kept - 0.5 * n as f64).abs() < 5.0 * sigma);
}

#[test]
fn estimated_rate_tracks_the_analytic_rate() {
    let (ch, v, beta) = (channel(0.8, 0.01), variance(10.0), 0.95);
    let d = ReconciliationDirection::Reverse;
    for p in [Protocol::SQUEEZED_HOMODYNE, Protocol::COHERENT_HOMODYNE] {
        let batch = simulate_protocol(p, ch, v, 1_000_000, 5).unwrap();
        let est = key_rate_from_samples(&batch, d, beta).unwrap();
        let exact = secret_key_rate(&KeyRateParams::new(p, d, v, ch, beta).unwrap()).unwrap();
        assert!(
            (est.key_rate - exact.key_rate).abs() < 0.02,
            "{p}: {est:?} vs {exact:?}"
        );
        assert_eq!(est, key_rate_from_samples(&batch, d, beta).unwrap());
    }
}
