//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p crmimo --test acceptance`. The process exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use crmimo::bc::{map_mac_to_bc, weighted_sum_rate_bc};
use crmimo::experiment::{
    dominance_check, example3_run, example3_scenario, example4_spec, example5_spec, monotone_check, run_sweep,
    saturation_check, sweep_means, terminal_band, tightness, EXAMPLE3_STEPS,
};
use crmimo::mac::{
    dipa, dual_function, mac_gradient, noise_shape, waterfill_single_user, weighted_sum_rate_mac, DipaOptions,
    MacCovarianceSet, MacProblem,
};
use crmimo::pool::default_threads;
use crmimo::rng::CounterRng;
use crmimo::scenario::{generate_scenario, order_users, GenerationParams};
use crmimo::sipa::{outer_dual, sipa, AuxiliaryPoint, ConstraintMode, SipaOptions};
use crmimo::units::db_to_linear;
use crmimo::{ComplexMatrix, HermitianMatrix, Scenario, C64};

type Outcome = Result<(bool, String), String>;

struct Suite {
    failed: usize,
}

impl Suite {
    fn check(&mut self, id: u8, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let (mut ok, mut detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        if let Some(b) = budget {
            if elapsed > b {
                ok = false;
                detail.push_str(&format!("; over the {:.0} s budget", b.as_secs_f64()));
            }
        }
        if !ok {
            self.failed += 1;
        }
        println!(
            "{} criterion {id:>2}: {name} ({detail}) [{:.2} s]",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
}

fn e(err: impl std::fmt::Display) -> String {
    err.to_string()
}

fn waterfilling() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let s = generate_scenario(&GenerationParams::new(1, 4, 4, db_to_linear(10.0), seed)).map_err(e)?;
        let d = dipa(&s, &order_users(&s.weights), &[], 1.0, &DipaOptions::default()).map_err(e)?;
        let (_, wf) = waterfill_single_user(&s.channels[0], s.p_u, s.sigma2).map_err(e)?;
        worst = worst.max((d.objective - wf).abs());
    }
    Ok((
        worst <= 1e-4,
        format!("max |DIPA - water-filling| {worst:.2e} nats over 20 seeds"),
    ))
}

fn scalar_scenario(pu: Option<(f64, f64)>) -> Scenario {
    Scenario {
        k: 2,
        n_t: 1,
        n_r: 1,
        channels: [1.0, 0.6]
            .iter()
            .map(|&g| ComplexMatrix::real_diag(1, 1, &[g]))
            .collect(),
        pu_channels: pu.iter().map(|&(h, _)| vec![C64::new(h, 0.0)]).collect(),
        l_ratios: pu.iter().map(|_| 1.0).collect(),
        weights: vec![2.0, 1.0],
        p_u: 4.0,
        p_t: pu.iter().map(|&(_, t)| t).collect(),
        sigma2: 1.0,
        seed: 0,
    }
}

/// Best weighted DPC rate over both encoding orders on a power grid.
fn scalar_oracle(pu: Option<(f64, f64)>, two_d: bool) -> f64 {
    let g = [1.0, 0.36];
    let rate = |p: [f64; 2]| {
        let order = |a: usize, b: usize| {
            let w = [2.0, 1.0];
            w[a] * (1.0 + g[a] * p[a] / (1.0 + g[a] * p[b])).ln() + w[b] * (1.0 + g[b] * p[b]).ln()
        };
        order(0, 1).max(order(1, 0))
    };
    let step = 1e-3;
    let n = (4.0 / step) as usize;
    let mut best: f64 = 0.0;
    for i in 0..=n {
        let p1 = i as f64 * step;
        if !two_d {
            best = best.max(rate([p1, 4.0 - p1]));
            continue;
        }
        for j in 0..=(n - i) {
            let p2 = j as f64 * step;
            if pu.is_some_and(|(h, t)| h * h * (p1 + p2) > t) {
                break;
            }
            best = best.max(rate([p1, p2]));
        }
    }
    best
}

fn scalar_grid() -> Outcome {
    let plain = scalar_scenario(None);
    let d = dipa(&plain, &order_users(&plain.weights), &[], 1.0, &DipaOptions::default()).map_err(e)?;
    let gap1 = (d.objective - scalar_oracle(None, false)).abs();
    let pu = Some((0.8, 1.5));
    let r = sipa(&scalar_scenario(pu), ConstraintMode::Cognitive, &SipaOptions::default()).map_err(e)?;
    let gap2 = (r.weighted_sum_rate - scalar_oracle(pu, true)).abs();
    Ok((
        gap1 <= 1e-3 && gap2 <= 2e-3 && r.converged,
        format!("DIPA vs 1-D grid {gap1:.2e} nats, SIPA vs 2-D constrained grid {gap2:.2e} nats"),
    ))
}

fn duality() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let k = 1 + (seed % 5) as usize;
        let n_t = 1 + ((seed / 5) % 5) as usize;
        let n_r = 1 + ((seed / 2) % 3) as usize;
        let mut p = GenerationParams::new(k, n_t, n_r, db_to_linear(10.0), seed);
        let pus = (seed % 3) as usize;
        for _ in 0..pus {
            p = p.with_pu(1.0, 1.0);
        }
        let s = generate_scenario(&p.with_weights((0..k).map(|i| 1.0 + i as f64).collect())).map_err(e)?;
        let q_t: Vec<f64> = (0..pus).map(|j| 0.3 + 0.2 * j as f64).collect();
        let o = order_users(&s.weights);
        let d = dipa(&s, &o, &q_t, 0.5, &DipaOptions::default()).map_err(e)?;
        let shape = noise_shape(&s, &q_t, 0.5).map_err(e)?;
        let m = map_mac_to_bc(&s, &o, &d.covariances, &shape.r_eff).map_err(e)?;
        let bc = weighted_sum_rate_bc(&s, &o, &m);
        worst = worst.max((d.objective - bc).abs() / d.objective.max(1.0));
    }
    Ok((
        worst <= 1e-5,
        format!("max |f_MAC - f_BC| / max(1, f_MAC) = {worst:.2e} over 50 instances"),
    ))
}

fn tightness_check() -> Outcome {
    let opts = SipaOptions {
        step: EXAMPLE3_STEPS[1],
        ..SipaOptions::default()
    };
    let (mut worst_dev, mut worst_slack, mut all) = (0.0f64, 0.0f64, true);
    for seed in 0..5 {
        let s = example3_scenario(seed).map_err(e)?;
        let r = sipa(&s, ConstraintMode::Cognitive, &opts).map_err(e)?;
        all &= r.converged;
        worst_dev = worst_dev.max(tightness(&r));
        worst_slack = r.slackness().iter().fold(worst_slack, |m, p| m.max(p.abs()));
    }
    Ok((
        all && worst_dev <= 1e-2 && worst_slack <= opts.eps,
        format!("t = 0.01, 5 seeds: converged={all}, worst relative deviation {worst_dev:.2e}, worst slackness {worst_slack:.2e}"),
    ))
}

fn gradient() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let mut rng = CounterRng::new(500 + seed);
        let k = 1 + (seed % 4) as usize;
        let s = generate_scenario(
            &GenerationParams::new(k, 4, 3, 10.0, seed).with_weights((0..k).map(|i| 1.0 + 0.5 * i as f64).collect()),
        )
        .map_err(e)?;
        let o = order_users(&s.weights);
        let r_w = HermitianMatrix::identity(4);
        let q = MacCovarianceSet {
            covariances: (0..k)
                .map(|_| {
                    let g = ComplexMatrix::from_fn(3, 3, |_, _| rng.next_cscg());
                    let mut c = HermitianMatrix::from_matrix(&g.matmul(&g.adjoint()).unwrap()).unwrap();
                    c.add_identity(0.1);
                    c.scale(0.3)
                })
                .collect(),
        };
        for user in 0..k {
            let dir = HermitianMatrix::new(3, (0..9).map(|_| rng.next_cscg()).collect()).map_err(e)?;
            let analytic = mac_gradient(&s, &o, &q, &r_w, user).map_err(e)?.inner(&dir);
            let h = 1e-5;
            let at = |c: f64| {
                let mut p = q.clone();
                p.covariances[user] = p.covariances[user].add(&dir.scale(c));
                weighted_sum_rate_mac(&s, &o, &p, &r_w)
            };
            let numeric = (at(h).map_err(e)? - at(-h).map_err(e)?) / (2.0 * h);
            worst = worst.max((analytic - numeric).abs() / analytic.abs().max(1e-3));
        }
    }
    Ok((
        worst <= 1e-5,
        format!("max relative error {worst:.2e} over 20 instances"),
    ))
}

fn subgradients() -> Outcome {
    let mut rng = CounterRng::new(77);
    // water-level dual: convex in lambda
    let s = generate_scenario(&GenerationParams::new(3, 4, 2, db_to_linear(10.0), 3)).map_err(e)?;
    let o = order_users(&s.weights);
    let shape = noise_shape(&s, &[], 1.0).map_err(e)?;
    let p = MacProblem::new(&s, &o, &shape.r_eff).map_err(e)?;
    let top = p.lambda_ceiling().map_err(e)?;
    let init = MacCovarianceSet::zeros(3, 2);
    let opts = DipaOptions::default();
    let mut worst_lambda = f64::MAX;
    for _ in 0..10 {
        let (x, y) = (top * rng.next_f64(), top * rng.next_f64());
        let (gx, sx, _) = dual_function(&p, shape.budget, x, &init, &opts).map_err(e)?;
        let (gy, _, _) = dual_function(&p, shape.budget, y, &init, &opts).map_err(e)?;
        worst_lambda = worst_lambda.min(gy - gx - sx * (y - x));
    }
    // outer dual over the multipliers mu = lambda (q_t, q_u)
    let s = generate_scenario(
        &GenerationParams::new(3, 4, 2, db_to_linear(10.0), 2)
            .with_pu(1.0, 1.0)
            .with_pu(2.0, 0.5),
    )
    .map_err(e)?;
    let (mut worst_mu, mut raw_violations) = (f64::MAX, 0);
    for _ in 0..10 {
        let mut point = || AuxiliaryPoint {
            q_t: vec![0.05 + rng.next_f64(), 0.05 + rng.next_f64()],
            q_u: 0.05 + rng.next_f64(),
        };
        let (a, b) = (point(), point());
        let ea = outer_dual(&s, ConstraintMode::Cognitive, &a, &opts).map_err(e)?;
        let eb = outer_dual(&s, ConstraintMode::Cognitive, &b, &opts).map_err(e)?;
        let flat = |p: &AuxiliaryPoint| -> Vec<f64> { p.q_t.iter().chain([&p.q_u]).copied().collect() };
        let (xa, xb) = (flat(&a), flat(&b));
        let mu_step: f64 = ea
            .subgradient
            .iter()
            .zip(xa.iter().zip(&xb))
            .map(|(g, (u, v))| g * (eb.lambda * v - ea.lambda * u))
            .sum();
        worst_mu = worst_mu.min(eb.value - ea.value - mu_step);
        let raw_step: f64 = ea
            .subgradient
            .iter()
            .zip(xa.iter().zip(&xb))
            .map(|(g, (u, v))| g * (v - u))
            .sum();
        if eb.value - ea.value - raw_step < -1e-6 {
            raw_violations += 1;
        }
    }
    Ok((
        worst_lambda >= -1e-6 && worst_mu >= -1e-6,
        format!(
            "water level: worst gap {worst_lambda:.2e}; multipliers lambda*(q_t, q_u): worst gap {worst_mu:.2e}; \
             unscaled (q_t, q_u) form violated on {raw_violations}/10 pairs"
        ),
    ))
}

fn dominance_and_saturation() -> Outcome {
    let seeds: Vec<u64> = (0..50).collect();
    let threads = default_threads();
    let opts = SipaOptions::default();
    let power = sweep_means(&run_sweep(&example4_spec(), &seeds, &opts, threads).map_err(e)?);
    let distance = sweep_means(&run_sweep(&example5_spec(), &seeds, &opts, threads).map_err(e)?);
    let checks = [
        dominance_check(&power),
        dominance_check(&distance),
        monotone_check(&distance),
        saturation_check(&distance, 15.0),
    ];
    let flagged: usize = power.iter().chain(&distance).map(|m| m.non_converged).sum();
    let detail = checks
        .iter()
        .map(|c| format!("{}: {}", c.name, c.detail))
        .collect::<Vec<_>>()
        .join("; ");
    Ok((
        checks.iter().all(|c| c.passed),
        format!("{detail}; {flagged} non-converged solves"),
    ))
}

fn step_bands() -> Outcome {
    let mut bands = [0.0; 2];
    for (b, &step) in bands.iter_mut().zip(&EXAMPLE3_STEPS) {
        for seed in 0..5 {
            *b += terminal_band(&example3_run(seed, step, &SipaOptions::default()).map_err(e)?) / 5.0;
        }
    }
    Ok((
        bands[1] < bands[0],
        format!(
            "mean terminal band t=0.1: {:.2e} nats, t=0.01: {:.2e} nats (5 seeds)",
            bands[0], bands[1]
        ),
    ))
}

fn csv_files(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(e)? {
        let p = entry.map_err(e)?.path();
        if p.extension().is_some_and(|x| x == "csv") {
            out.push((
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).map_err(e)?,
            ));
        }
    }
    out.sort();
    Ok(out)
}

fn determinism() -> Outcome {
    let root = std::env::temp_dir().join(format!("crmimo-acceptance-{}", std::process::id()));
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let dir = root.join(name);
        let _ = std::fs::remove_dir_all(&dir);
        let status = Command::new(env!("CARGO_BIN_EXE_crmimo"))
            .args(["repro", "--example", "3", "--seeds", "5", "--out"])
            .arg(&dir)
            .output()
            .map_err(e)?
            .status;
        if status.code() != Some(0) {
            return Ok((false, format!("repro exited with {status}")));
        }
        runs.push(csv_files(&dir)?);
    }
    let _ = std::fs::remove_dir_all(&root);
    let same = runs[0] == runs[1] && !runs[0].is_empty();
    Ok((same, format!("{} CSV files compared byte for byte", runs[0].len())))
}

fn per_antenna() -> Outcome {
    let threshold = 2.0;
    let (mut worst_excess, mut worst_slack, mut all) = (f64::MIN, 0.0f64, true);
    for seed in 0..5 {
        let s = generate_scenario(&GenerationParams::new(3, 4, 2, db_to_linear(10.0), seed)).map_err(e)?;
        let r = sipa(&s, ConstraintMode::PerAntenna { threshold }, &SipaOptions::default()).map_err(e)?;
        all &= r.converged;
        for (d, q) in r.bc_cov.sum().diagonal().iter().zip(&r.aux.q_t) {
            worst_excess = worst_excess.max(d / threshold - 1.0);
            worst_slack = worst_slack.max((q * (d - threshold)).abs());
        }
    }
    Ok((
        all && worst_excess <= 1e-4 && worst_slack <= SipaOptions::default().eps,
        format!("5 seeds, 4 antennas: worst relative excess {worst_excess:.2e}, worst slackness {worst_slack:.2e}"),
    ))
}

fn main() -> ExitCode {
    let mut suite = Suite { failed: 0 };
    let secs = |s| Some(Duration::from_secs(s));
    suite.check(1, "water-filling equivalence", secs(1), waterfilling);
    suite.check(2, "scalar brute-force equivalence", secs(5), scalar_grid);
    suite.check(3, "MAC/BC duality", None, duality);
    suite.check(4, "constraint tightness", secs(30), tightness_check);
    suite.check(5, "gradient vs finite differences", None, gradient);
    suite.check(6, "subgradient inequalities", None, subgradients);
    suite.check(7, "dominance and saturation", secs(300), dominance_and_saturation);
    suite.check(8, "step-size behaviour", None, step_bands);
    suite.check(9, "determinism", None, determinism);
    suite.check(10, "per-antenna mode", None, per_antenna);
    println!("{} of 10 criteria passed", 10 - suite.failed);
    if suite.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
