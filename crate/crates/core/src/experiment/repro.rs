//! Desk-scale reproductions of the five reference examples.
//!
//! | id | setup | output |
//! |----|-------|--------|
//! | 1 | K=1, 4x4, P_u=10 dB, no PU | DIPA trace against water-filling |
//! | 2 | K=20, 4x4, P_u=10 dB, no PU | DIPA convergence |
//! | 3 | K=5, 5x3, P_u=13 dB, two PUs, w=(5,1,1,1,1) | SIPA traces for t=0.1 and t=0.01 |
//! | 4 | K=5, 5x3, one PU vs none, P_u in {0,...,20} dB | sum rate vs power |
//! | 5 | K=5, 5x3, P_u in {15,20} dB, l_2/l_1 in {1,...,12} | sum rate vs PU distance |

use std::fs;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;

use super::table::{num, Table};
use super::{header, prepare_out, push_trace_rows, run_sweep, svg, sweep_means, trace_header, write_json};
use super::{RunConfig, Status, SweepMean, SweepPoint, SweepSpec};
use crate::bc::{map_mac_to_bc, weighted_sum_rate_bc};
use crate::error::{Error, Result};
use crate::mac::{dipa, noise_shape, waterfill_single_user, DipaOptions, DipaResult};
use crate::pool::parallel_map;
use crate::scenario::{generate_scenario, order_users, GenerationParams, Scenario};
use crate::sipa::{sipa, ConstraintMode, SipaOptions, SolveReport};
use crate::units::{db_to_linear, linear_to_db, nats_to_bits};

/// `(id, summary, default seed count)`.
pub const EXAMPLES: [(u8, &str, usize); 5] = [
    (1, "DIPA vs water-filling, K=1, 4x4, 10 dB", 20),
    (2, "DIPA convergence, K=20, 4x4, 10 dB", 5),
    (3, "SIPA with two PUs, K=5, 5x3, 13 dB, steps 0.1 and 0.01", 5),
    (4, "sum rate vs sum power, one PU vs none", 50),
    (5, "sum rate vs PU distance, 15 and 20 dB", 50),
];

/// Example 3 step presets.
pub const EXAMPLE3_STEPS: [f64; 2] = [0.1, 0.01];
/// Example 3 runs for `EXAMPLE3_HORIZON / t` iterations, so both steps cover
/// the same span of the subgradient flow.
pub const EXAMPLE3_HORIZON: f64 = 40.0;
/// Fraction of the run, at its end, over which the oscillation band is read.
pub const BAND_WINDOW: f64 = 0.25;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReproOutcome {
    pub example: u8,
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
}

impl ReproOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn status(&self) -> Status {
        Status::from_ok(self.passed())
    }
}

pub fn default_seed_count(example: u8) -> Option<usize> {
    EXAMPLES.iter().find(|e| e.0 == example).map(|e| e.2)
}

/// Reproduces one example into `config.out`.
pub fn cmd_repro(config: &RunConfig, example: u8) -> Result<ReproOutcome> {
    if default_seed_count(example).is_none() {
        return Err(Error::InvalidInput(format!("unknown example {example}; expected 1..5")));
    }
    prepare_out(&config.out)?;
    let mut out = match example {
        1 => example1(config)?,
        2 => example2(config)?,
        3 => example3(config)?,
        4 => example4(config)?,
        _ => example5(config)?,
    };
    let mut doc = header(config);
    doc["example"] = json!(example);
    doc["passed"] = json!(out.passed());
    doc["checks"] = json!(out.checks);
    doc["files"] = json!(out
        .files
        .iter()
        .map(|f| f.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect::<Vec<_>>());
    let summary = config.out.join("summary.json");
    write_json(&summary, &doc)?;
    out.files.push(summary);
    Ok(out)
}

fn write_table(config: &RunConfig, name: &str, t: &Table, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = config.out.join(name);
    t.write(&path)?;
    files.push(path);
    Ok(())
}

fn write_svg(config: &RunConfig, name: &str, body: String, files: &mut Vec<PathBuf>) -> Result<()> {
    if config.svg {
        let path = config.out.join(name);
        fs::write(&path, body)?;
        files.push(path);
    }
    Ok(())
}

fn square_scenario(k: usize, n: usize, p_u_db: f64, seed: u64) -> Result<Scenario> {
    generate_scenario(&GenerationParams::new(k, n, n, db_to_linear(p_u_db), seed))
}

fn plain_dipa(s: &Scenario, opts: &DipaOptions) -> Result<DipaResult> {
    dipa(s, &order_users(&s.weights), &[], 1.0, opts)
}

fn example1(config: &RunConfig) -> Result<ReproOutcome> {
    let runs = parallel_map(
        &config.seeds,
        config.threads,
        |&seed| -> Result<(u64, DipaResult, f64)> {
            let s = square_scenario(1, 4, 10.0, seed)?;
            let d = plain_dipa(&s, &config.solver.dipa)?;
            let (_, wf) = waterfill_single_user(&s.channels[0], s.p_u, s.sigma2)?;
            Ok((seed, d, wf))
        },
    );
    let mut t = Table::new([
        "seed",
        "iteration",
        "lambda",
        "dipa_rate_nats",
        "dipa_rate_bits",
        "waterfill_rate_nats",
        "waterfill_rate_bits",
    ]);
    let mut worst: f64 = 0.0;
    let mut chart = Vec::new();
    for run in runs {
        let (seed, d, wf) = run?;
        for (i, row) in d.trace.iter().enumerate() {
            t.push(vec![
                seed.to_string(),
                (i + 1).to_string(),
                num(row.lambda),
                num(row.objective),
                num(nats_to_bits(row.objective)),
                num(wf),
                num(nats_to_bits(wf)),
            ]);
        }
        worst = worst.max((d.objective - wf).abs());
        if chart.is_empty() {
            let pts: Vec<(f64, f64)> = d
                .trace
                .iter()
                .enumerate()
                .map(|(i, r)| ((i + 1) as f64, nats_to_bits(r.objective)))
                .collect();
            let n = pts.len() as f64;
            chart.push(svg::Series {
                name: "DIPA".into(),
                points: pts,
            });
            chart.push(svg::Series {
                name: "water-filling".into(),
                points: vec![(1.0, nats_to_bits(wf)), (n, nats_to_bits(wf))],
            });
        }
    }
    let mut files = Vec::new();
    write_table(config, "example1_dipa_vs_waterfill.csv", &t, &mut files)?;
    write_svg(
        config,
        "example1_dipa_vs_waterfill.svg",
        svg::line_chart("DIPA vs water-filling", "iteration", "rate (bits)", &chart),
        &mut files,
    )?;
    let checks = vec![Check::new(
        "dipa matches water-filling",
        worst <= 1e-4,
        format!(
            "max |DIPA - water-filling| = {worst:.3e} nats over {} seeds (tol 1e-4)",
            config.seeds.len()
        ),
    )];
    Ok(ReproOutcome {
        example: 1,
        checks,
        files,
    })
}

fn example2(config: &RunConfig) -> Result<ReproOutcome> {
    let runs = parallel_map(
        &config.seeds,
        config.threads,
        |&seed| -> Result<(u64, DipaResult, f64)> {
            let s = square_scenario(20, 4, 10.0, seed)?;
            let ordering = order_users(&s.weights);
            let d = plain_dipa(&s, &config.solver.dipa)?;
            let shape = noise_shape(&s, &[], 1.0)?;
            let mapping = map_mac_to_bc(&s, &ordering, &d.covariances, &shape.r_eff)?;
            Ok((seed, d, weighted_sum_rate_bc(&s, &ordering, &mapping)))
        },
    );
    let mut t = Table::new([
        "seed",
        "iteration",
        "lambda",
        "objective_nats",
        "objective_bits",
        "sum_power",
        "sum_power_db",
    ]);
    let (mut all_converged, mut worst_power, mut worst_gap) = (true, 0.0f64, 0.0f64);
    let mut chart = Vec::new();
    for run in runs {
        let (seed, d, bc) = run?;
        for (i, row) in d.trace.iter().enumerate() {
            t.push(vec![
                seed.to_string(),
                (i + 1).to_string(),
                num(row.lambda),
                num(row.objective),
                num(nats_to_bits(row.objective)),
                num(row.power),
                num(linear_to_db(row.power)),
            ]);
        }
        if chart.len() < 3 {
            chart.push(svg::Series {
                name: format!("seed {seed}"),
                points: d
                    .trace
                    .iter()
                    .enumerate()
                    .map(|(i, r)| ((i + 1) as f64, nats_to_bits(r.objective)))
                    .collect(),
            });
        }
        all_converged &= d.converged;
        worst_power = worst_power.max((d.power - d.budget).abs() / d.budget);
        worst_gap = worst_gap.max((d.objective - bc).abs() / d.objective.max(1.0));
    }
    let mut files = Vec::new();
    write_table(config, "example2_dipa_convergence.csv", &t, &mut files)?;
    write_svg(
        config,
        "example2_dipa_convergence.svg",
        svg::line_chart("DIPA convergence, K=20", "iteration", "sum rate (bits)", &chart),
        &mut files,
    )?;
    let checks = vec![
        Check::new("dipa converged", all_converged, format!("{} seeds", config.seeds.len())),
        Check::new(
            "budget met",
            worst_power <= 1e-4,
            format!("max relative power gap {worst_power:.3e} (tol 1e-4)"),
        ),
        Check::new(
            "mac and bc objectives agree",
            worst_gap <= 1e-5,
            format!("max relative gap {worst_gap:.3e} (tol 1e-5)"),
        ),
    ];
    Ok(ReproOutcome {
        example: 2,
        checks,
        files,
    })
}

/// The Example 3 instance for one seed.
pub fn example3_scenario(seed: u64) -> Result<Scenario> {
    generate_scenario(
        &GenerationParams::new(5, 5, 3, db_to_linear(13.0), seed)
            .with_pu(1.0, db_to_linear(0.0))
            .with_pu(1.0, db_to_linear(0.0))
            .with_weights(vec![5.0, 1.0, 1.0, 1.0, 1.0]),
    )
}

/// Spread (max - min) of the objective over the final `BAND_WINDOW` of a
/// trace.
pub fn terminal_band(report: &SolveReport) -> f64 {
    let n = report.trace.len();
    let w = ((n as f64 * BAND_WINDOW).ceil() as usize).clamp(1, n.max(1));
    let tail = &report.trace[n - w..];
    let max = tail.iter().map(|r| r.rate).fold(f64::MIN, f64::max);
    let min = tail.iter().map(|r| r.rate).fold(f64::MAX, f64::min);
    max - min
}

/// Fixed-horizon Example 3 run for one step preset.
pub fn example3_run(seed: u64, step: f64, base: &SipaOptions) -> Result<SolveReport> {
    let s = example3_scenario(seed)?;
    let opts = SipaOptions {
        step,
        diminishing: false,
        adaptive_step: false,
        run_to_cap: true,
        max_outer_iters: (EXAMPLE3_HORIZON / step).round() as usize,
        ..*base
    };
    sipa(&s, ConstraintMode::Cognitive, &opts)
}

/// Constraint tightness of a finished Example 3 solve: worst relative
/// deviation of the sum power and of the interference from their limits.
pub fn tightness(r: &SolveReport) -> f64 {
    let mut worst = (r.sum_power - r.p_u).abs() / r.p_u;
    for (i, t) in r.interference.iter().zip(&r.thresholds) {
        worst = worst.max((i - t).abs() / t);
    }
    worst
}

fn example3(config: &RunConfig) -> Result<ReproOutcome> {
    let jobs: Vec<(u64, f64)> = EXAMPLE3_STEPS
        .iter()
        .flat_map(|&t| config.seeds.iter().map(move |&s| (s, t)))
        .collect();
    let runs = parallel_map(&jobs, config.threads, |&(seed, step)| {
        example3_run(seed, step, &config.solver)
    });
    let mut files = Vec::new();
    let mut summary = Table::new([
        "step",
        "seed",
        "converged",
        "iterations",
        "rate_nats",
        "rate_bits",
        "sum_power_db",
        "interference_1_db",
        "interference_2_db",
        "terminal_band_nats",
    ]);
    let mut bands = [0.0f64; 2];
    let (mut tight_worst, mut slack_worst, mut all_converged) = (0.0f64, 0.0f64, true);
    let mut chart = Vec::new();
    let mut runs = runs.into_iter();
    for (si, &step) in EXAMPLE3_STEPS.iter().enumerate() {
        let mut t = Table::new(trace_header(2, &["seed"]));
        for &seed in &config.seeds {
            let r = runs.next().expect("one run per job")?;
            push_trace_rows(&mut t, &r, &[seed.to_string()]);
            let band = terminal_band(&r);
            bands[si] += band / config.seeds.len() as f64;
            summary.push(vec![
                num(step),
                seed.to_string(),
                r.converged.to_string(),
                r.iterations.to_string(),
                num(r.weighted_sum_rate),
                num(nats_to_bits(r.weighted_sum_rate)),
                num(linear_to_db(r.sum_power)),
                num(linear_to_db(r.interference[0])),
                num(linear_to_db(r.interference[1])),
                num(band),
            ]);
            if step == EXAMPLE3_STEPS[1] {
                all_converged &= r.converged;
                tight_worst = tight_worst.max(tightness(&r));
                slack_worst = r.slackness().iter().fold(slack_worst, |a, s| a.max(s.abs()));
            }
            if seed == config.seeds[0] {
                chart.push(svg::Series {
                    name: format!("t = {step}"),
                    points: r
                        .trace
                        .iter()
                        .map(|x| (x.iteration as f64, nats_to_bits(x.rate)))
                        .collect(),
                });
            }
        }
        write_table(config, &format!("example3_trace_t{step}.csv"), &t, &mut files)?;
    }
    write_table(config, "example3_summary.csv", &summary, &mut files)?;
    write_svg(
        config,
        "example3_rate.svg",
        svg::line_chart("SIPA weighted sum rate", "iteration", "bits", &chart),
        &mut files,
    )?;
    let eps = config.solver.eps;
    let checks = vec![
        Check::new(
            "constraints tight at convergence (t=0.01)",
            all_converged && tight_worst <= 0.01 && slack_worst <= eps,
            format!(
                "converged={all_converged}, worst relative deviation {tight_worst:.3e} (tol 1e-2), worst slackness product {slack_worst:.3e} (eps {eps:e})"
            ),
        ),
        Check::new(
            "smaller step has smaller terminal band",
            bands[1] < bands[0],
            format!("mean band t=0.1: {:.3e} nats, t=0.01: {:.3e} nats", bands[0], bands[1]),
        ),
    ];
    Ok(ReproOutcome {
        example: 3,
        checks,
        files,
    })
}

/// Example 4 sweep definition.
pub fn example4_spec() -> SweepSpec {
    SweepSpec {
        k: 5,
        n_t: 5,
        n_r: 3,
        p_u_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
        l_ratios: vec![1.0],
        p_t_db: 0.0,
    }
}

/// Example 5 sweep definition.
pub fn example5_spec() -> SweepSpec {
    SweepSpec {
        k: 5,
        n_t: 5,
        n_r: 3,
        p_u_db: vec![15.0, 20.0],
        l_ratios: vec![1.0, 2.0, 4.0, 8.0, 12.0],
        p_t_db: 0.0,
    }
}

/// Relative slack of the dominance check: both curves come out of iterative
/// solves whose objectives are accurate to about this level.
pub const DOMINANCE_TOL: f64 = 1e-6;

/// The no-PU curve never falls below the single-PU curve.
pub fn dominance_check(means: &[SweepMean]) -> Check {
    let worst = means
        .iter()
        .map(|m| (m.rate_pu - m.rate_no_pu) / m.rate_no_pu)
        .fold(f64::MIN, f64::max);
    Check::new(
        "no-PU rate >= single-PU rate",
        worst <= DOMINANCE_TOL,
        format!("largest relative excess of the single-PU mean: {worst:.3e} (tol {DOMINANCE_TOL:e})"),
    )
}

/// Seed-mean rate is nondecreasing in the distance ratio, up to a one-sided
/// tolerance of `2%` of the curve's range, for every power.
pub fn monotone_check(means: &[SweepMean]) -> Check {
    let mut ok = true;
    let mut details = Vec::new();
    let mut powers: Vec<f64> = means.iter().map(|m| m.p_u_db).collect();
    powers.dedup();
    for p in powers {
        let curve: Vec<f64> = means.iter().filter(|m| m.p_u_db == p).map(|m| m.rate_pu).collect();
        let max = curve.iter().cloned().fold(f64::MIN, f64::max);
        let min = curve.iter().cloned().fold(f64::MAX, f64::min);
        let tol = 0.02 * (max - min);
        let drop = curve.windows(2).map(|w| w[0] - w[1]).fold(0.0f64, f64::max);
        ok &= drop <= tol;
        details.push(format!("{p} dB: largest drop {drop:.3e} (tol {tol:.3e})"));
    }
    Check::new("rate nondecreasing in distance", ok, details.join("; "))
}

/// At the farthest distance and `p_u_db`, the single-PU mean is within 0.5%
/// of the no-PU mean.
pub fn saturation_check(means: &[SweepMean], p_u_db: f64) -> Check {
    let far = means
        .iter()
        .filter(|m| m.p_u_db == p_u_db)
        .max_by(|a, b| a.l_ratio.total_cmp(&b.l_ratio));
    match far {
        Some(m) => {
            let gap = (m.rate_no_pu - m.rate_pu).abs() / m.rate_no_pu;
            Check::new(
                "saturates to the no-PU rate",
                gap <= 0.005,
                format!("{p_u_db} dB, l={}: relative gap {gap:.3e} (tol 5e-3)", m.l_ratio),
            )
        }
        None => Check::new("saturates to the no-PU rate", false, format!("no {p_u_db} dB points")),
    }
}

fn sweep_points_table(points: &[SweepPoint]) -> Table {
    super::sweep_points_table(points)
}

fn example4(config: &RunConfig) -> Result<ReproOutcome> {
    let spec = example4_spec();
    let points = run_sweep(&spec, &config.seeds, &config.solver, config.threads)?;
    let means = sweep_means(&points);
    let mut t = Table::new([
        "p_u_db",
        "sum_rate_no_pu_bits",
        "sum_rate_single_pu_bits",
        "sum_rate_no_pu_nats",
        "sum_rate_single_pu_nats",
        "seeds",
        "non_converged",
    ]);
    for m in &means {
        t.push(vec![
            num(m.p_u_db),
            num(nats_to_bits(m.rate_no_pu)),
            num(nats_to_bits(m.rate_pu)),
            num(m.rate_no_pu),
            num(m.rate_pu),
            m.seeds.to_string(),
            m.non_converged.to_string(),
        ]);
    }
    let mut files = Vec::new();
    write_table(config, "example4_rate_vs_power.csv", &t, &mut files)?;
    write_table(config, "example4_points.csv", &sweep_points_table(&points), &mut files)?;
    let series = |name: &str, f: fn(&SweepMean) -> f64| svg::Series {
        name: name.into(),
        points: means.iter().map(|m| (m.p_u_db, nats_to_bits(f(m)))).collect(),
    };
    write_svg(
        config,
        "example4_rate_vs_power.svg",
        svg::line_chart(
            "sum rate vs sum power",
            "P_u (dB)",
            "bits",
            &[series("no PU", |m| m.rate_no_pu), series("single PU", |m| m.rate_pu)],
        ),
        &mut files,
    )?;
    let checks = vec![dominance_check(&means), convergence_check(&points)];
    Ok(ReproOutcome {
        example: 4,
        checks,
        files,
    })
}

fn convergence_check(points: &[SweepPoint]) -> Check {
    let bad = points.iter().filter(|p| !p.converged).count();
    Check::new(
        "all solves converged",
        bad == 0,
        format!("{bad} of {} cells flagged", points.len()),
    )
}

fn example5(config: &RunConfig) -> Result<ReproOutcome> {
    let spec = example5_spec();
    let points = run_sweep(&spec, &config.seeds, &config.solver, config.threads)?;
    let means = sweep_means(&points);
    let mut t = Table::new([
        "p_u_db",
        "l_ratio",
        "sum_rate_pu_bits",
        "sum_rate_no_pu_bits",
        "sum_rate_pu_nats",
        "sum_rate_no_pu_nats",
        "saturated",
        "seeds",
        "non_converged",
    ]);
    for m in &means {
        t.push(vec![
            num(m.p_u_db),
            num(m.l_ratio),
            num(nats_to_bits(m.rate_pu)),
            num(nats_to_bits(m.rate_no_pu)),
            num(m.rate_pu),
            num(m.rate_no_pu),
            ((m.rate_no_pu - m.rate_pu).abs() <= 0.005 * m.rate_no_pu).to_string(),
            m.seeds.to_string(),
            m.non_converged.to_string(),
        ]);
    }
    let mut files = Vec::new();
    write_table(config, "example5_rate_vs_distance.csv", &t, &mut files)?;
    write_table(config, "example5_points.csv", &sweep_points_table(&points), &mut files)?;
    let mut chart = Vec::new();
    for &p in &spec.p_u_db {
        chart.push(svg::Series {
            name: format!("PU, {p} dB"),
            points: means
                .iter()
                .filter(|m| m.p_u_db == p)
                .map(|m| (m.l_ratio, nats_to_bits(m.rate_pu)))
                .collect(),
        });
        chart.push(svg::Series {
            name: format!("no PU, {p} dB"),
            points: means
                .iter()
                .filter(|m| m.p_u_db == p)
                .map(|m| (m.l_ratio, nats_to_bits(m.rate_no_pu)))
                .collect(),
        });
    }
    write_svg(
        config,
        "example5_rate_vs_distance.svg",
        svg::line_chart("sum rate vs PU distance", "l2/l1", "bits", &chart),
        &mut files,
    )?;
    let checks = vec![
        monotone_check(&means),
        saturation_check(&means, 15.0),
        dominance_check(&means),
        convergence_check(&points),
    ];
    Ok(ReproOutcome {
        example: 5,
        checks,
        files,
    })
}
