//! Outer-loop behaviour against brute force and limiting cases.

use crmimo::bc::bc_rates_logdet;
use crmimo::mac::{dipa, DipaOptions};
use crmimo::scenario::{generate_scenario, order_users, GenerationParams};
use crmimo::sipa::{outer_dual, region_sweep, sipa, AuxiliaryPoint, ConstraintMode, SipaOptions};
use crmimo::units::db_to_linear;
use crmimo::{ComplexMatrix, Scenario, C64};

fn scalar_scenario(gains: [f64; 2], pu: Option<(f64, f64)>, p_u: f64) -> Scenario {
    Scenario {
        k: 2,
        n_t: 1,
        n_r: 1,
        channels: gains.iter().map(|&g| ComplexMatrix::real_diag(1, 1, &[g])).collect(),
        pu_channels: pu.iter().map(|&(h, _)| vec![C64::new(h, 0.0)]).collect(),
        l_ratios: pu.iter().map(|_| 1.0).collect(),
        weights: vec![2.0, 1.0],
        p_u,
        p_t: pu.iter().map(|&(_, t)| t).collect(),
        sigma2: 1.0,
        seed: 0,
    }
}

/// Weighted DPC rate of two scalar users, best encoding order.
fn dpc_rate(g: [f64; 2], w: [f64; 2], p: [f64; 2]) -> f64 {
    let order = |a: usize, b: usize| {
        // `a` encoded first sees `b`; `b` sees nothing
        let ra = (1.0 + g[a] * p[a] / (1.0 + g[a] * p[b])).ln();
        let rb = (1.0 + g[b] * p[b]).ln();
        w[a] * ra + w[b] * rb
    };
    order(0, 1).max(order(1, 0))
}

/// 2-D grid over `(p_1, p_2)` with every constraint checked explicitly.
fn constrained_grid(g: [f64; 2], p_u: f64, pu: Option<(f64, f64)>, step: f64) -> f64 {
    let n = (p_u / step).round() as usize;
    let mut best: f64 = 0.0;
    for i in 0..=n {
        let p1 = i as f64 * step;
        for j in 0..=(n - i) {
            let p2 = j as f64 * step;
            if let Some((h, t)) = pu {
                if h * h * (p1 + p2) > t {
                    break;
                }
            }
            best = best.max(dpc_rate(g, [2.0, 1.0], [p1, p2]));
        }
    }
    best
}

#[test]
fn scalar_sum_power_matches_grid() {
    let g = [1.0, 0.36];
    let s = scalar_scenario([1.0, 0.6], None, 4.0);
    let r = sipa(&s, ConstraintMode::SumPowerOnly, &SipaOptions::default()).unwrap();
    let oracle = constrained_grid(g, 4.0, None, 1e-3);
    assert!(
        (r.weighted_sum_rate - oracle).abs() <= 1e-3,
        "{} vs {oracle}",
        r.weighted_sum_rate
    );
}

#[test]
fn scalar_interference_constraint_matches_grid() {
    let g = [1.0, 0.36];
    let pu = Some((0.8, 1.5));
    let s = scalar_scenario([1.0, 0.6], pu, 4.0);
    let r = sipa(&s, ConstraintMode::Cognitive, &SipaOptions::default()).unwrap();
    assert!(r.converged);
    let oracle = constrained_grid(g, 4.0, pu, 1e-3);
    assert!(
        (r.weighted_sum_rate - oracle).abs() <= 2e-3,
        "{} vs {oracle}",
        r.weighted_sum_rate
    );
    // the interference cap binds, the sum-power budget does not
    assert!(r.interference[0] <= 1.5 * (1.0 + 1e-12));
    assert!(r.sum_power < 4.0 * 0.9);
}

#[test]
fn distant_pu_changes_nothing() {
    let base = GenerationParams::new(3, 4, 2, db_to_linear(10.0), 17);
    let with = generate_scenario(&base.clone().with_pu(1e4, db_to_linear(0.0))).unwrap();
    let r = sipa(&with, ConstraintMode::Cognitive, &SipaOptions::default()).unwrap();
    assert!(r.converged);
    let plain = with.without_pus();
    let d = dipa(&plain, &order_users(&plain.weights), &[], 1.0, &DipaOptions::default()).unwrap();
    assert!((r.weighted_sum_rate - d.objective).abs() <= 1e-6 * d.objective);
    assert!(r.interference[0] < 1e-3 * with.p_t[0]);
}

#[test]
fn returned_point_is_feasible_and_consistent() {
    for seed in 0..6 {
        let s = generate_scenario(
            &GenerationParams::new(4, 4, 2, db_to_linear(13.0), seed)
                .with_pu(1.0, 1.0)
                .with_pu(2.0, 0.5),
        )
        .unwrap();
        let r = sipa(&s, ConstraintMode::Cognitive, &SipaOptions::default()).unwrap();
        assert!(r.converged, "seed {seed}");
        assert!(r.sum_power <= s.p_u * (1.0 + 1e-12));
        for (i, t) in r.interference.iter().zip(&s.p_t) {
            assert!(*i <= t * (1.0 + 1e-12));
        }
        for p in r.slackness() {
            assert!(p.abs() <= 1e-4);
        }
        // reported rates are the DPC rates of the reported covariances
        let rates = bc_rates_logdet(&s, &order_users(&s.weights), &r.bc_cov).unwrap();
        for (a, b) in rates.iter().zip(&r.per_user_rates) {
            assert!((a - b).abs() <= 1e-6 * (1.0 + b));
        }
        assert!((r.sum_power - r.bc_cov.total_power()).abs() <= 1e-9 * s.p_u);
    }
}

#[test]
fn per_antenna_mode_caps_every_antenna() {
    let s = generate_scenario(&GenerationParams::new(3, 3, 2, db_to_linear(10.0), 5)).unwrap();
    let threshold = 2.5;
    let r = sipa(&s, ConstraintMode::PerAntenna { threshold }, &SipaOptions::default()).unwrap();
    assert!(r.converged);
    let diag = r.bc_cov.sum().diagonal();
    for (d, q) in diag.iter().zip(&r.aux.q_t) {
        assert!(*d <= threshold * (1.0 + 1e-4));
        assert!((q * (d - threshold)).abs() <= 1e-4);
    }
}

#[test]
fn multiplier_subgradient_inequality() {
    // g(mu) = max_Q f(Q) - sum mu_j (c_j(Q) - limit_j) is convex in
    // mu = lambda (q_t, q_u) and the constraint residual is a subgradient
    let s = generate_scenario(&GenerationParams::new(3, 4, 2, db_to_linear(10.0), 2).with_pu(1.0, 1.0)).unwrap();
    let points: Vec<AuxiliaryPoint> = [(0.1, 0.9), (0.5, 0.5), (0.9, 0.1), (0.3, 0.2), (2.0, 1.0)]
        .iter()
        .map(|&(t, u)| AuxiliaryPoint { q_t: vec![t], q_u: u })
        .collect();
    let opts = DipaOptions::default();
    let evals: Vec<_> = points
        .iter()
        .map(|p| outer_dual(&s, ConstraintMode::Cognitive, p, &opts).unwrap())
        .collect();
    let mu = |i: usize| -> Vec<f64> {
        let p = &points[i];
        p.q_t.iter().chain([&p.q_u]).map(|q| q * evals[i].lambda).collect()
    };
    for x in 0..points.len() {
        for y in 0..points.len() {
            let step: f64 = evals[x]
                .subgradient
                .iter()
                .zip(mu(y).iter().zip(mu(x)))
                .map(|(s, (a, b))| s * (a - b))
                .sum();
            let gap = evals[y].value - evals[x].value - step;
            assert!(gap >= -1e-6, "{x} -> {y}: {gap}");
        }
    }
}

#[test]
fn region_sweep_points_are_not_dominated_by_each_other() {
    let s = generate_scenario(&GenerationParams::new(2, 2, 2, db_to_linear(10.0), 3).with_pu(1.0, 1.0)).unwrap();
    let grid: Vec<Vec<f64>> = (1..10).map(|i| vec![i as f64 / 10.0, 1.0 - i as f64 / 10.0]).collect();
    let pts = region_sweep(&s, &grid, ConstraintMode::Cognitive, &SipaOptions::default(), 2);
    assert_eq!(pts.len(), grid.len());
    let rates: Vec<Vec<f64>> = pts.iter().map(|p| p.rates.clone().unwrap()).collect();
    for a in &rates {
        for b in &rates {
            assert!(!crmimo::sipa::dominates(a, b, 1e-3));
        }
    }
    // more weight on user 0 never lowers its rate (up to solver noise)
    for w in rates.windows(2) {
        assert!(w[1][0] >= w[0][0] - 1e-3);
    }
}

#[test]
fn run_to_cap_and_iteration_limits() {
    let s = generate_scenario(&GenerationParams::new(3, 3, 2, db_to_linear(10.0), 1).with_pu(1.0, 1.0)).unwrap();
    let opts = SipaOptions {
        run_to_cap: true,
        max_outer_iters: 37,
        ..SipaOptions::default()
    };
    assert_eq!(sipa(&s, ConstraintMode::Cognitive, &opts).unwrap().trace.len(), 37);
    let opts = SipaOptions {
        max_outer_iters: 1,
        ..SipaOptions::default()
    };
    let r = sipa(&s, ConstraintMode::Cognitive, &opts).unwrap();
    assert!(!r.converged);
    assert_eq!(r.iterations, 1);
}

#[test]
fn diminishing_step_converges() {
    let s = generate_scenario(&GenerationParams::new(3, 3, 2, db_to_linear(10.0), 4).with_pu(1.0, 1.0)).unwrap();
    let fixed = sipa(&s, ConstraintMode::Cognitive, &SipaOptions::default()).unwrap();
    let dim = sipa(
        &s,
        ConstraintMode::Cognitive,
        &SipaOptions {
            diminishing: true,
            step: 0.5,
            ..SipaOptions::default()
        },
    )
    .unwrap();
    assert!(fixed.converged && dim.converged);
    assert!((fixed.weighted_sum_rate - dim.weighted_sum_rate).abs() <= 1e-3 * fixed.weighted_sum_rate);
}

#[test]
fn bad_options_are_rejected() {
    let s = generate_scenario(&GenerationParams::new(2, 2, 2, 1.0, 0)).unwrap();
    for opts in [
        SipaOptions {
            step: 0.0,
            ..SipaOptions::default()
        },
        SipaOptions {
            eps: -1.0,
            ..SipaOptions::default()
        },
    ] {
        assert!(sipa(&s, ConstraintMode::Cognitive, &opts).is_err());
    }
}

#[test]
fn warm_and_cold_starts_agree() {
    for seed in 0..3 {
        let s = generate_scenario(&GenerationParams::new(3, 3, 2, db_to_linear(10.0), seed).with_pu(1.0, 1.0)).unwrap();
        // the stopping rule bounds the objective error, so agreement at 1e-6
        // needs both runs solved tighter than the default tolerances
        let tight = SipaOptions {
            eps: 1e-7,
            feasibility_tol: 1e-7,
            ..SipaOptions::default()
        };
        let warm = sipa(&s, ConstraintMode::Cognitive, &tight).unwrap();
        let cold = sipa(
            &s,
            ConstraintMode::Cognitive,
            &SipaOptions {
                warm_start: false,
                ..tight
            },
        )
        .unwrap();
        assert!(warm.converged && cold.converged, "seed {seed}");
        let rel = (warm.weighted_sum_rate - cold.weighted_sum_rate).abs() / warm.weighted_sum_rate;
        assert!(
            rel <= 1e-6,
            "seed {seed}: {} vs {}",
            warm.weighted_sum_rate,
            cold.weighted_sum_rate
        );
    }
}
