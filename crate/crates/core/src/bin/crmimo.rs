//! `crmimo`: solve, sweep and reproduce cognitive-radio MIMO broadcast
//! weighted sum-rate problems.
//!
//! Exit codes: 0 success, 1 error (bad input, I/O), 2 finished but flagged
//! (non-convergence or a failed reproduction check).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crmimo::experiment::{self, default_seed_count, Command, RunConfig, Status, SweepSpec};
use crmimo::scenario::{generate_scenario, save_scenario, GenerationParams};
use crmimo::sipa::{ConstraintMode, SipaOptions};
use crmimo::units::db_to_linear;

#[derive(Parser)]
#[command(
    name = "crmimo",
    version,
    about = "Cognitive-radio MIMO broadcast weighted sum-rate solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one scenario file; writes report.json and trace.csv.
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// cognitive | sum-power | per-antenna:<threshold>
        #[arg(long, default_value = "cognitive", value_parser = parse_mode)]
        mode: ConstraintMode,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Reproduce one of the reference examples (1..5).
    Repro {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
        example: u8,
        #[arg(long)]
        out: PathBuf,
        /// Number of channel seeds (0..n-1); defaults depend on the example.
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        svg: bool,
    },
    /// Capacity-region sweep over a weight grid.
    Region {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "cognitive", value_parser = parse_mode)]
        mode: ConstraintMode,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Sum rate versus sum power, with one PU and without.
    SweepPower {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Comma-separated sum powers in dB.
        #[arg(long, value_delimiter = ',', default_value = "0,5,10,15,20")]
        powers_db: Vec<f64>,
        /// PU distance ratio l2/l1.
        #[arg(long, default_value_t = 1.0)]
        l_ratio: f64,
    },
    /// Sum rate versus PU distance ratio, with one PU and without.
    SweepDistance {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Comma-separated distance ratios l2/l1.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,12")]
        l_ratios: Vec<f64>,
        /// Comma-separated sum powers in dB.
        #[arg(long, value_delimiter = ',', default_value = "15,20")]
        powers_db: Vec<f64>,
    },
    /// Write a generated scenario file.
    Generate {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        nt: usize,
        #[arg(long)]
        nr: usize,
        #[arg(long)]
        p_u_db: f64,
        /// PU as `<l_ratio>:<P_t dB>`; repeatable.
        #[arg(long = "pu", value_parser = parse_pu)]
        pus: Vec<(f64, f64)>,
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SolverArgs {
    /// Subgradient step size.
    #[arg(long)]
    step: Option<f64>,
    /// Complementary-slackness tolerance.
    #[arg(long)]
    eps: Option<f64>,
    /// Use step / sqrt(n) at outer iteration n.
    #[arg(long)]
    diminishing: bool,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Also write an SVG chart of the trace.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 5)]
    nt: usize,
    #[arg(long, default_value_t = 3)]
    nr: usize,
    #[arg(long, default_value_t = 0.0)]
    p_t_db: f64,
    #[arg(long, default_value_t = 50)]
    seeds: usize,
    #[command(flatten)]
    solver: SolverArgs,
}

fn parse_mode(s: &str) -> Result<ConstraintMode, String> {
    match s {
        "cognitive" => Ok(ConstraintMode::Cognitive),
        "sum-power" => Ok(ConstraintMode::SumPowerOnly),
        _ => match s.strip_prefix("per-antenna:") {
            Some(t) => t
                .parse::<f64>()
                .ok()
                .filter(|t| *t > 0.0)
                .map(|threshold| ConstraintMode::PerAntenna { threshold })
                .ok_or_else(|| format!("bad per-antenna threshold `{t}`")),
            None => Err(format!("unknown mode `{s}`")),
        },
    }
}

fn parse_pu(s: &str) -> Result<(f64, f64), String> {
    let (l, p) = s.split_once(':').ok_or("expected <l_ratio>:<P_t dB>")?;
    let l = l.parse().map_err(|_| format!("bad l_ratio `{l}`"))?;
    let p = p.parse().map_err(|_| format!("bad P_t `{p}`"))?;
    Ok((l, p))
}

impl SolverArgs {
    fn options(&self) -> SipaOptions {
        let mut o = SipaOptions::default();
        if let Some(t) = self.step {
            o.step = t;
        }
        if let Some(e) = self.eps {
            o.eps = e;
        }
        if let Some(n) = self.max_iters {
            o.max_outer_iters = n;
        }
        o.diminishing = self.diminishing;
        o
    }
}

fn config(command: Command, out: PathBuf, solver: &SolverArgs) -> RunConfig {
    let mut c = RunConfig::new(command, out);
    c.solver = solver.options();
    c.svg = solver.svg;
    c
}

fn sweep_config(sweep: SweepArgs, build: impl FnOnce(SweepSpec) -> Command, spec: SweepSpec) -> RunConfig {
    let mut c = config(build(spec), sweep.out.clone(), &sweep.solver);
    c.seeds = (0..sweep.seeds as u64).collect();
    c
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match cli.command {
        Cmd::Solve {
            scenario,
            out,
            mode,
            solver,
        } => config(Command::Solve { scenario, mode }, out, &solver),
        Cmd::Repro {
            example,
            out,
            seeds,
            svg,
        } => {
            let mut c = RunConfig::new(Command::Repro { example }, out);
            let n = seeds.or(default_seed_count(example)).unwrap_or(1);
            c.seeds = (0..n as u64).collect();
            c.svg = svg;
            c
        }
        Cmd::Region {
            scenario,
            grid,
            out,
            mode,
            solver,
        } => config(Command::Region { scenario, grid, mode }, out, &solver),
        Cmd::SweepPower {
            sweep,
            powers_db,
            l_ratio,
        } => {
            let spec = SweepSpec {
                k: sweep.k,
                n_t: sweep.nt,
                n_r: sweep.nr,
                p_u_db: powers_db,
                l_ratios: vec![l_ratio],
                p_t_db: sweep.p_t_db,
            };
            sweep_config(sweep, Command::SweepPower, spec)
        }
        Cmd::SweepDistance {
            sweep,
            l_ratios,
            powers_db,
        } => {
            let spec = SweepSpec {
                k: sweep.k,
                n_t: sweep.nt,
                n_r: sweep.nr,
                p_u_db: powers_db,
                l_ratios,
                p_t_db: sweep.p_t_db,
            };
            sweep_config(sweep, Command::SweepDistance, spec)
        }
        Cmd::Generate {
            k,
            nt,
            nr,
            p_u_db,
            pus,
            weights,
            seed,
            out,
        } => {
            let mut params = GenerationParams::new(k, nt, nr, db_to_linear(p_u_db), seed);
            for (l, p) in pus {
                params = params.with_pu(l, db_to_linear(p));
            }
            if let Some(w) = weights {
                params = params.with_weights(w);
            }
            return match generate_scenario(&params).and_then(|s| save_scenario(&s, &out)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            };
        }
    };

    let result = match &config.command {
        Command::Repro { example } => experiment::cmd_repro(&config, *example).map(|o| {
            for c in &o.checks {
                println!(
                    "{} example {}: {} ({})",
                    if c.passed { "PASS" } else { "FAIL" },
                    example,
                    c.name,
                    c.detail
                );
            }
            o.status()
        }),
        _ => experiment::run(&config),
    };
    match result {
        Ok(status) => {
            if status == Status::Flagged {
                eprintln!("warning: finished with flagged results (non-convergence or failed check)");
            }
            ExitCode::from(status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
