//! Scenario generation, validation and file round trips.

use crmimo::scenario::{generate_scenario, load_scenario, save_scenario, GenerationParams};
use crmimo::{Error, Scenario};
use serde_json::json;

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("crmimo-scenario-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn generation_is_deterministic() {
    let p = GenerationParams::new(3, 4, 2, 10.0, 42).with_pu(2.0, 1.0);
    assert_eq!(generate_scenario(&p).unwrap(), generate_scenario(&p).unwrap());
    let other = GenerationParams::new(3, 4, 2, 10.0, 43).with_pu(2.0, 1.0);
    assert_ne!(
        generate_scenario(&p).unwrap().channels,
        generate_scenario(&other).unwrap().channels
    );
}

#[test]
fn file_round_trip_is_exact() {
    let s = generate_scenario(
        &GenerationParams::new(2, 3, 2, 20.0, 7)
            .with_pu(1.5, 0.3)
            .with_weights(vec![2.0, 0.5]),
    )
    .unwrap();
    let path = tmp("round.json");
    save_scenario(&s, &path).unwrap();
    assert_eq!(load_scenario(&path).unwrap(), s);
}

#[test]
fn seed_only_document_regenerates_channels() {
    let doc = json!({"K": 2, "N_t": 3, "N_r": 2, "P_u_dB": 10.0, "seed": 5, "pu": [{"l_ratio": 2.0, "P_t_dB": 0.0}]});
    let s = Scenario::from_json(&doc).unwrap();
    let want = generate_scenario(&GenerationParams::new(2, 3, 2, 10.0, 5).with_pu(2.0, 1.0)).unwrap();
    assert_eq!(s.channels, want.channels);
    assert_eq!(s.pu_channels, want.pu_channels);
}

#[test]
fn malformed_documents_are_schema_errors() {
    for doc in [
        json!([]),
        json!({"N_t": 2, "N_r": 1, "P_u": 1.0}),
        json!({"K": 1, "N_t": 2, "N_r": 1, "P_u": "loud"}),
        json!({"K": 1, "N_t": 2, "N_r": 1, "P_u": 1.0, "pu": [{"l_ratio": 1.0}]}),
    ] {
        assert!(matches!(Scenario::from_json(&doc), Err(Error::Schema(_))), "{doc}");
    }
}

#[test]
fn invalid_values_are_rejected() {
    assert!(generate_scenario(&GenerationParams::new(0, 2, 2, 1.0, 0)).is_err());
    assert!(generate_scenario(&GenerationParams::new(1, 2, 2, -1.0, 0)).is_err());
    assert!(generate_scenario(&GenerationParams::new(1, 2, 2, 1.0, 0).with_pu(0.5, 1.0)).is_err());
    assert!(generate_scenario(&GenerationParams::new(2, 2, 2, 1.0, 0).with_weights(vec![1.0])).is_err());
    assert!(load_scenario(tmp("missing.json")).is_err());
}

#[test]
fn channel_statistics() {
    // entries are CN(0, 1); PU entries are scaled by l^-2 in amplitude
    let (mut h, mut pu, mut n_h, mut n_pu) = (0.0, 0.0, 0, 0);
    for seed in 0..400 {
        let s = generate_scenario(&GenerationParams::new(2, 4, 2, 1.0, seed).with_pu(2.0, 1.0)).unwrap();
        for c in &s.channels {
            h += c.data().iter().map(|z| z.norm_sqr()).sum::<f64>();
            n_h += c.data().len();
        }
        pu += s.pu_channels[0].iter().map(|z| z.norm_sqr()).sum::<f64>();
        n_pu += 4;
    }
    let h = h / n_h as f64;
    let pu = pu / n_pu as f64 * 16.0;
    // 6400 and 1600 samples of an Exp(1) variable
    assert!((h - 1.0).abs() < 0.05, "{h}");
    assert!((pu - 1.0).abs() < 0.1, "{pu}");
}
