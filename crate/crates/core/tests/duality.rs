//! Dual MAC solutions mapped to the broadcast channel keep their value.

use crmimo::bc::{bc_constraint_value, bc_rates, bc_rates_logdet, map_mac_to_bc, weighted_sum_rate_bc};
use crmimo::mac::{dipa, noise_shape, DipaOptions};
use crmimo::scenario::{generate_scenario, order_users, GenerationParams};
use crmimo::units::db_to_linear;

/// 50 small instances, some with PUs and a random multiplier mix.
fn instances() -> impl Iterator<Item = (crmimo::Scenario, Vec<f64>, f64)> {
    (0..50u64).map(|seed| {
        let k = 1 + (seed % 5) as usize;
        let n_t = 1 + ((seed / 5) % 5) as usize;
        let n_r = 1 + ((seed / 2) % 3) as usize;
        let pus = (seed % 3) as usize;
        let mut p = GenerationParams::new(k, n_t, n_r, db_to_linear(10.0), seed)
            .with_weights((0..k).map(|i| 1.0 + ((seed as usize + 3 * i) % 4) as f64).collect());
        for _ in 0..pus {
            p = p.with_pu(1.0 + (seed % 4) as f64, 1.0);
        }
        let s = generate_scenario(&p).unwrap();
        let q_t = (0..pus).map(|j| 0.2 + 0.3 * j as f64).collect();
        let q_u = 0.25 + 0.25 * (seed % 3) as f64;
        (s, q_t, q_u)
    })
}

#[test]
fn mac_and_bc_objectives_agree() {
    for (s, q_t, q_u) in instances() {
        let o = order_users(&s.weights);
        let d = dipa(&s, &o, &q_t, q_u, &DipaOptions::default()).unwrap();
        let shape = noise_shape(&s, &q_t, q_u).unwrap();
        let m = map_mac_to_bc(&s, &o, &d.covariances, &shape.r_eff).unwrap();
        let bc = weighted_sum_rate_bc(&s, &o, &m);
        assert!(
            (d.objective - bc).abs() <= 1e-5 * d.objective.max(1.0),
            "seed {}: mac {} bc {bc}",
            s.seed,
            d.objective
        );
        // the weighted constraint is spent exactly as on the MAC side
        let used = bc_constraint_value(&m.covariances, &q_t, q_u, &s.pu_channels);
        assert!(
            (used - shape.budget).abs() <= 1e-6 * shape.budget,
            "seed {}: {used} vs {}",
            s.seed,
            shape.budget
        );
    }
}

#[test]
fn sinr_rates_match_logdet_rates() {
    for (s, q_t, q_u) in instances().step_by(3) {
        let o = order_users(&s.weights);
        let d = dipa(&s, &o, &q_t, q_u, &DipaOptions::default()).unwrap();
        let shape = noise_shape(&s, &q_t, q_u).unwrap();
        let m = map_mac_to_bc(&s, &o, &d.covariances, &shape.r_eff).unwrap();
        let sinr = bc_rates(&s, &o, &m);
        let logdet = bc_rates_logdet(&s, &o, &m.covariances).unwrap();
        for (a, b) in sinr.iter().zip(&logdet) {
            assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "seed {}: {a} vs {b}", s.seed);
        }
    }
}

#[test]
fn bc_covariances_are_psd() {
    for (s, q_t, q_u) in instances().step_by(5) {
        let o = order_users(&s.weights);
        let d = dipa(&s, &o, &q_t, q_u, &DipaOptions::default()).unwrap();
        let shape = noise_shape(&s, &q_t, q_u).unwrap();
        let m = map_mac_to_bc(&s, &o, &d.covariances, &shape.r_eff).unwrap();
        for q in &m.covariances.covariances {
            assert!(q.min_eigenvalue().unwrap() >= -1e-10 * (1.0 + q.trace()));
        }
        assert!(m.covariances.powers.iter().flatten().all(|p| *p >= 0.0));
    }
}
