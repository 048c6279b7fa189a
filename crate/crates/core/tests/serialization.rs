mod common;

use common::*;
use cvsteer_core::{fit_efficiency, CovarianceMatrix64, LossFit64, SourceParams64};

#[test]
fn covariance_json_round_trips_bit_exactly() {
    let mut r = rng(31);
    for _ in 0..500 {
        let state = random_state(&mut r, 2);
        let text = serde_json::to_string(&state).unwrap();
        let back: CovarianceMatrix64 = serde_json::from_str(&text).unwrap();
        assert_eq!(back, state);
    }
}

#[test]
fn parameter_and_fit_json_round_trip() {
    let mut r = rng(32);
    for _ in 0..100 {
        let p = random_source(&mut r);
        let back: SourceParams64 =
            serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
    }
    let fit = fit_efficiency(&cvsteer_core::dataset::reference_gamma::<f64>()).unwrap();
    let back: LossFit64 = serde_json::from_str(&serde_json::to_string(&fit).unwrap()).unwrap();
    assert_eq!(back, fit);
}

#[test]
fn wrong_ordering_is_rejected() {
    let text = r#"{"n_modes":1,"ordering":"x1x2p1p2","entries":[[1,0],[0,1]]}"#;
    let err = serde_json::from_str::<CovarianceMatrix64>(text).unwrap_err();
    assert!(err.to_string().contains("ordering"));
}
