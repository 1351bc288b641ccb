//! Command harness behind the `crmimo` binary: single solves, power and
//! distance sweeps, capacity-region sweeps and the reproduction of the
//! reference examples.
//!
//! Every command writes into an output directory. Tables are RFC-4180 CSV
//! with 17 significant digits; reports are JSON and carry the solver version
//! and the fully resolved configuration. The CSV layouts are versioned by
//! [`CSV_SCHEMA_VERSION`], recorded in every JSON file next to them.

mod repro;
pub mod svg;
pub mod table;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;
use crate::pool::parallel_map;
use crate::scenario::{generate_scenario, load_scenario, GenerationParams, Scenario};
use crate::sipa::{region_sweep, sipa, ConstraintMode, RegionPoint, SipaOptions, SolveReport};
use crate::units::{db_to_linear, linear_to_db, nats_to_bits};
use crate::VERSION;

pub use repro::{
    cmd_repro, default_seed_count, dominance_check, example3_run, example3_scenario, example4_spec, example5_spec,
    monotone_check, saturation_check, terminal_band, tightness, Check, ReproOutcome, BAND_WINDOW, DOMINANCE_TOL,
    EXAMPLE3_HORIZON, EXAMPLE3_STEPS, EXAMPLES,
};
use table::{num, Table};

pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Smallest weight used when a region grid touches a simplex corner.
pub const MIN_GRID_WEIGHT: f64 = 1e-3;

/// One resolved invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub solver: SipaOptions,
    pub out: PathBuf,
    /// Channel seeds for generated scenarios.
    pub seeds: Vec<u64>,
    pub svg: bool,
    pub threads: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    Solve {
        scenario: PathBuf,
        mode: ConstraintMode,
    },
    Repro {
        example: u8,
    },
    Region {
        scenario: PathBuf,
        grid: usize,
        mode: ConstraintMode,
    },
    SweepPower(SweepSpec),
    SweepDistance(SweepSpec),
}

/// Grid of generated single-PU scenarios, each paired with its no-PU twin
/// (same SU channels).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub k: usize,
    pub n_t: usize,
    pub n_r: usize,
    pub p_u_db: Vec<f64>,
    pub l_ratios: Vec<f64>,
    pub p_t_db: f64,
}

/// How a command finished; maps onto the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Non-convergence or a failed check; outputs are still written.
    Flagged,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Flagged => 2,
        }
    }

    fn from_ok(ok: bool) -> Self {
        if ok {
            Status::Ok
        } else {
            Status::Flagged
        }
    }
}

impl RunConfig {
    pub fn new(command: Command, out: impl Into<PathBuf>) -> Self {
        Self {
            command,
            solver: SipaOptions::default(),
            out: out.into(),
            seeds: vec![0],
            svg: false,
            threads: crate::pool::default_threads(),
        }
    }
}

/// Runs whichever command the configuration holds.
pub fn run(config: &RunConfig) -> Result<Status> {
    match &config.command {
        Command::Solve { .. } => cmd_solve(config).map(|(_, s)| s),
        Command::Repro { example } => cmd_repro(config, *example).map(|o| o.status()),
        Command::Region { .. } => cmd_region(config).map(|(_, s)| s),
        Command::SweepPower(spec) | Command::SweepDistance(spec) => cmd_sweep(config, spec).map(|(_, s)| s),
    }
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_json(path: impl AsRef<Path>, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn header(config: &RunConfig) -> Value {
    json!({
        "solver": "crmimo",
        "version": VERSION,
        "csv_schema_version": CSV_SCHEMA_VERSION,
        "config": config,
    })
}

/// Solves one scenario file; writes `report.json` and `trace.csv`.
pub fn cmd_solve(config: &RunConfig) -> Result<(SolveReport, Status)> {
    let Command::Solve { scenario, mode } = &config.command else {
        return Err(Error::InvalidInput("not a solve command".into()));
    };
    let s = load_scenario(scenario)?;
    prepare_out(&config.out)?;
    let report = sipa(&s, *mode, &config.solver)?;

    let mut doc = header(config);
    doc["scenario"] = s.to_json();
    doc["report"] = report_json(&report);
    write_json(config.out.join("report.json"), &doc)?;
    let trace = trace_table(&report);
    trace.write(config.out.join("trace.csv"))?;
    if config.svg {
        let chart = svg::line_chart(
            "SIPA trace",
            "iteration",
            "weighted sum rate (bits)",
            &[svg::Series {
                name: "objective".into(),
                points: report
                    .trace
                    .iter()
                    .map(|r| (r.iteration as f64, nats_to_bits(r.rate)))
                    .collect(),
            }],
        );
        fs::write(config.out.join("trace.svg"), chart)?;
    }
    let status = Status::from_ok(report.converged);
    Ok((report, status))
}

fn matrix_json(m: &HermitianMatrix) -> Value {
    let n = m.dim();
    Value::Array(
        (0..n)
            .map(|i| Value::Array((0..n).map(|j| json!([m.get(i, j).re, m.get(i, j).im])).collect()))
            .collect(),
    )
}

/// Full report with linear quantities and their dB / bit companions.
pub fn report_json(r: &SolveReport) -> Value {
    let db = |v: &[f64]| v.iter().map(|&x| linear_to_db(x)).collect::<Vec<_>>();
    let bits = |v: &[f64]| v.iter().map(|&x| nats_to_bits(x)).collect::<Vec<_>>();
    json!({
        "converged": r.converged,
        "iterations": r.iterations,
        "inner_warning": r.inner_warning,
        "weighted_sum_rate_nats": r.weighted_sum_rate,
        "weighted_sum_rate_bits": nats_to_bits(r.weighted_sum_rate),
        "mac_objective_nats": r.mac_objective,
        "per_user_rates_nats": r.per_user_rates,
        "per_user_rates_bits": bits(&r.per_user_rates),
        "sum_power": r.sum_power,
        "sum_power_db": linear_to_db(r.sum_power),
        "p_u": r.p_u,
        "interference": r.interference,
        "interference_db": db(&r.interference),
        "thresholds": r.thresholds,
        "q_t": r.aux.q_t,
        "q_u": r.aux.q_u,
        "lambda": r.lambda_star,
        "slackness": r.slackness(),
        "mac_covariances": r.mac_cov.covariances.iter().map(matrix_json).collect::<Vec<_>>(),
        "bc_covariances": r.bc_cov.covariances.iter().map(matrix_json).collect::<Vec<_>>(),
        "trace": r.trace.iter().map(|t| json!({
            "iteration": t.iteration,
            "objective_nats": t.rate,
            "sum_power": t.sum_power,
            "interference": t.interference,
            "q_t": t.q_t,
            "q_u": t.q_u,
            "lambda": t.lambda,
        })).collect::<Vec<_>>(),
    })
}

fn trace_header(n_pu: usize, leading: &[&str]) -> Vec<String> {
    let mut h: Vec<String> = leading.iter().map(|s| s.to_string()).collect();
    h.extend(
        [
            "iteration",
            "objective_nats",
            "objective_bits",
            "sum_power",
            "sum_power_db",
        ]
        .map(String::from),
    );
    for j in 1..=n_pu {
        h.push(format!("interference_{j}"));
        h.push(format!("interference_{j}_db"));
    }
    for j in 1..=n_pu {
        h.push(format!("q_t_{j}"));
    }
    h.extend(["q_u", "lambda"].map(String::from));
    h
}

fn push_trace_rows(table: &mut Table, r: &SolveReport, leading: &[String]) {
    for t in &r.trace {
        let mut row = leading.to_vec();
        row.push(t.iteration.to_string());
        row.push(num(t.rate));
        row.push(num(nats_to_bits(t.rate)));
        row.push(num(t.sum_power));
        row.push(num(linear_to_db(t.sum_power)));
        for &i in &t.interference {
            row.push(num(i));
            row.push(num(linear_to_db(i)));
        }
        row.extend(t.q_t.iter().map(|&q| num(q)));
        row.push(num(t.q_u));
        row.push(num(t.lambda));
        table.push(row);
    }
}

/// Per-outer-iteration trace of one solve.
pub fn trace_table(r: &SolveReport) -> Table {
    let mut t = Table::new(trace_header(r.thresholds.len(), &[]));
    push_trace_rows(&mut t, r, &[]);
    t
}

/// Weight vectors for a region sweep. For `k >= 2` these are the points of
/// the simplex lattice with `grid - 1` subdivisions per edge, floored at
/// [`MIN_GRID_WEIGHT`]; for `k == 1` they are `grid` positive scalings.
pub fn weight_grid(k: usize, grid: usize) -> Result<Vec<Vec<f64>>> {
    if k == 0 || grid == 0 {
        return Err(Error::InvalidInput("region grid needs k >= 1 and grid >= 1".into()));
    }
    if k == 1 {
        return Ok((1..=grid).map(|i| vec![i as f64 / grid as f64]).collect());
    }
    if grid == 1 {
        return Ok(vec![vec![1.0 / k as f64; k]]);
    }
    let m = grid - 1;
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn compose(left: usize, parts: usize, m: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if parts == 1 {
            current.push(left);
            out.push(
                current
                    .iter()
                    .map(|&c| (c as f64 / m as f64).max(MIN_GRID_WEIGHT))
                    .collect(),
            );
            current.pop();
            return;
        }
        for c in (0..=left).rev() {
            current.push(c);
            compose(left - c, parts - 1, m, current, out);
            current.pop();
        }
    }
    compose(m, k, m, &mut current, &mut out);
    Ok(out)
}

/// Indices `(a, b)` where point `a` strictly dominates point `b` beyond `tol`.
pub fn pareto_violations(points: &[RegionPoint], tol: f64) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for (a, pa) in points.iter().enumerate() {
        for (b, pb) in points.iter().enumerate() {
            if let (Some(ra), Some(rb)) = (&pa.rates, &pb.rates) {
                if a != b && crate::sipa::dominates(ra, rb, tol) {
                    v.push((a, b));
                }
            }
        }
    }
    v
}

/// Capacity-region sweep of one scenario file; writes `region.csv`.
pub fn cmd_region(config: &RunConfig) -> Result<(Vec<RegionPoint>, Status)> {
    let Command::Region { scenario, grid, mode } = &config.command else {
        return Err(Error::InvalidInput("not a region command".into()));
    };
    let s = load_scenario(scenario)?;
    prepare_out(&config.out)?;
    let weights = weight_grid(s.k, *grid)?;
    let points = region_sweep(&s, &weights, *mode, &config.solver, config.threads);

    let mut head = vec!["index".to_string()];
    head.extend((1..=s.k).map(|i| format!("w_{i}")));
    head.extend((1..=s.k).map(|i| format!("rate_{i}_nats")));
    head.extend((1..=s.k).map(|i| format!("rate_{i}_bits")));
    head.extend(["converged", "failures"].map(String::from));
    let mut t = Table::new(head);
    for (i, p) in points.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(p.weights.iter().map(|&w| num(w)));
        match &p.rates {
            Some(r) => {
                row.extend(r.iter().map(|&x| num(x)));
                row.extend(r.iter().map(|&x| num(nats_to_bits(x))));
            }
            None => row.extend(std::iter::repeat_n(String::new(), 2 * s.k)),
        }
        row.push(p.converged.to_string());
        row.push(p.failure.clone().unwrap_or_default());
        t.push(row);
    }
    t.write(config.out.join("region.csv"))?;

    let dominated = pareto_violations(&points, 1e-6);
    let mut doc = header(config);
    doc["points"] = json!(points.len());
    doc["failures"] = json!(points.iter().filter(|p| p.failure.is_some()).count());
    doc["non_converged"] = json!(points.iter().filter(|p| !p.converged).count());
    doc["pareto_violations"] = json!(dominated);
    write_json(config.out.join("region.json"), &doc)?;
    let ok = points.iter().all(|p| p.converged) && dominated.is_empty();
    Ok((points, Status::from_ok(ok)))
}

/// One (power, distance, seed) cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub p_u_db: f64,
    pub l_ratio: f64,
    pub seed: u64,
    /// Sum rate with the PU constraint, nats.
    pub rate_pu: f64,
    /// Sum rate of the same channels without PU, nats.
    pub rate_no_pu: f64,
    pub converged: bool,
}

/// Seed-averaged sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepMean {
    pub p_u_db: f64,
    pub l_ratio: f64,
    pub seeds: usize,
    pub rate_pu: f64,
    pub rate_no_pu: f64,
    pub non_converged: usize,
}

fn sweep_scenario(spec: &SweepSpec, p_u_db: f64, l_ratio: f64, seed: u64) -> Result<Scenario> {
    generate_scenario(
        &GenerationParams::new(spec.k, spec.n_t, spec.n_r, db_to_linear(p_u_db), seed)
            .with_pu(l_ratio, db_to_linear(spec.p_t_db)),
    )
}

/// Runs every (power, distance, seed) cell on the worker pool. Results are
/// ordered by power, then distance, then seed, independent of scheduling.
pub fn run_sweep(spec: &SweepSpec, seeds: &[u64], opts: &SipaOptions, threads: usize) -> Result<Vec<SweepPoint>> {
    if spec.p_u_db.is_empty() || spec.l_ratios.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidInput("sweep needs powers, distances and seeds".into()));
    }
    #[derive(Clone, Copy)]
    enum Job {
        NoPu { p: usize, seed: u64 },
        Pu { p: usize, l: usize, seed: u64 },
    }
    let mut jobs = Vec::new();
    for p in 0..spec.p_u_db.len() {
        for &seed in seeds {
            jobs.push(Job::NoPu { p, seed });
            for l in 0..spec.l_ratios.len() {
                jobs.push(Job::Pu { p, l, seed });
            }
        }
    }
    let results = parallel_map(&jobs, threads, |job| -> Result<(f64, bool)> {
        match *job {
            Job::NoPu { p, seed } => {
                let s = sweep_scenario(spec, spec.p_u_db[p], spec.l_ratios[0], seed)?.without_pus();
                let r = sipa(&s, ConstraintMode::SumPowerOnly, opts)?;
                Ok((r.weighted_sum_rate, r.converged))
            }
            Job::Pu { p, l, seed } => {
                let s = sweep_scenario(spec, spec.p_u_db[p], spec.l_ratios[l], seed)?;
                let r = sipa(&s, ConstraintMode::Cognitive, opts)?;
                Ok((r.weighted_sum_rate, r.converged))
            }
        }
    });

    let mut points = Vec::new();
    let mut it = jobs.iter().zip(results);
    for _ in 0..spec.p_u_db.len() * seeds.len() {
        let (Job::NoPu { p, seed }, base) = it.next().expect("job layout") else {
            unreachable!("job layout")
        };
        let (rate_no_pu, base_ok) = base?;
        for _ in 0..spec.l_ratios.len() {
            let (&Job::Pu { l, .. }, res) = it.next().expect("job layout") else {
                unreachable!("job layout")
            };
            let (rate_pu, ok) = res?;
            points.push(SweepPoint {
                p_u_db: spec.p_u_db[*p],
                l_ratio: spec.l_ratios[l],
                seed: *seed,
                rate_pu,
                rate_no_pu,
                converged: ok && base_ok,
            });
        }
    }
    points.sort_by(|a, b| {
        a.p_u_db
            .total_cmp(&b.p_u_db)
            .then(a.l_ratio.total_cmp(&b.l_ratio))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(points)
}

/// Averages over seeds, keeping the (power, distance) order of `points`.
pub fn sweep_means(points: &[SweepPoint]) -> Vec<SweepMean> {
    let mut out: Vec<SweepMean> = Vec::new();
    for p in points {
        match out.last_mut() {
            Some(m) if m.p_u_db == p.p_u_db && m.l_ratio == p.l_ratio => {
                m.seeds += 1;
                m.rate_pu += p.rate_pu;
                m.rate_no_pu += p.rate_no_pu;
                m.non_converged += usize::from(!p.converged);
            }
            _ => out.push(SweepMean {
                p_u_db: p.p_u_db,
                l_ratio: p.l_ratio,
                seeds: 1,
                rate_pu: p.rate_pu,
                rate_no_pu: p.rate_no_pu,
                non_converged: usize::from(!p.converged),
            }),
        }
    }
    for m in &mut out {
        m.rate_pu /= m.seeds as f64;
        m.rate_no_pu /= m.seeds as f64;
    }
    out
}

fn sweep_points_table(points: &[SweepPoint]) -> Table {
    let mut t = Table::new([
        "p_u_db",
        "l_ratio",
        "seed",
        "sum_rate_pu_nats",
        "sum_rate_no_pu_nats",
        "converged",
    ]);
    for p in points {
        t.push(vec![
            num(p.p_u_db),
            num(p.l_ratio),
            p.seed.to_string(),
            num(p.rate_pu),
            num(p.rate_no_pu),
            p.converged.to_string(),
        ]);
    }
    t
}

fn sweep_means_table(means: &[SweepMean]) -> Table {
    let mut t = Table::new([
        "p_u_db",
        "l_ratio",
        "seeds",
        "sum_rate_pu_nats",
        "sum_rate_pu_bits",
        "sum_rate_no_pu_nats",
        "sum_rate_no_pu_bits",
        "non_converged",
    ]);
    for m in means {
        t.push(vec![
            num(m.p_u_db),
            num(m.l_ratio),
            m.seeds.to_string(),
            num(m.rate_pu),
            num(nats_to_bits(m.rate_pu)),
            num(m.rate_no_pu),
            num(nats_to_bits(m.rate_no_pu)),
            m.non_converged.to_string(),
        ]);
    }
    t
}

/// Generic power or distance sweep; writes `sweep.csv` (seed means) and
/// `sweep_points.csv` (every cell).
pub fn cmd_sweep(config: &RunConfig, spec: &SweepSpec) -> Result<(Vec<SweepMean>, Status)> {
    prepare_out(&config.out)?;
    let points = run_sweep(spec, &config.seeds, &config.solver, config.threads)?;
    let means = sweep_means(&points);
    sweep_points_table(&points).write(config.out.join("sweep_points.csv"))?;
    sweep_means_table(&means).write(config.out.join("sweep.csv"))?;
    let mut doc = header(config);
    doc["non_converged"] = json!(points.iter().filter(|p| !p.converged).count());
    write_json(config.out.join("sweep.json"), &doc)?;
    let ok = points.iter().all(|p| p.converged);
    Ok((means, Status::from_ok(ok)))
}
