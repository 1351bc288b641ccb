//! Subgradient iteration over the auxiliary multipliers.
//!
//! Each outer iteration solves the dual MAC for the current `(q_t, q_u)`,
//! maps the solution to broadcast covariances and moves every multiplier
//! along its constraint violation:
//!
//! ```text
//! q_{t,j} <- q_{t,j} + t (sum_i h_j^H Q_i^b h_j - P_{t,j})
//! q_u     <- q_u     + t (sum_i tr(Q_i^b) - P_u)
//! ```
//!
//! The loop stops once every complementary-slackness product is within
//! `eps` and the broadcast covariances are feasible.

use crate::bc::{bc_rates, map_mac_to_bc, BcCovarianceSet, BcMapping};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::mac::{
    dipa_with, DipaOptions, DipaWarmStart, LinearConstraints, MacCovarianceSet, MacProblem, NoiseShape, AUX_FLOOR,
};
use crate::pool::parallel_map;
use crate::scenario::{order_users, Scenario};
use serde::{Deserialize, Serialize};

/// Which linear constraints accompany the sum-power budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConstraintMode {
    /// The scenario's PU channels and thresholds.
    Cognitive,
    /// One constraint per transmit antenna (identity columns), each with
    /// the given power limit.
    PerAntenna { threshold: f64 },
    /// Ignore the PUs.
    SumPowerOnly,
}

impl ConstraintMode {
    pub fn constraints(&self, scenario: &Scenario) -> LinearConstraints {
        match *self {
            ConstraintMode::Cognitive => LinearConstraints::from_scenario(scenario),
            ConstraintMode::PerAntenna { threshold } => LinearConstraints {
                vectors: (0..scenario.n_t)
                    .map(|a| {
                        (0..scenario.n_t)
                            .map(|b| C64::new(if a == b { 1.0 } else { 0.0 }, 0.0))
                            .collect()
                    })
                    .collect(),
                thresholds: vec![threshold; scenario.n_t],
                p_u: scenario.p_u,
            },
            ConstraintMode::SumPowerOnly => LinearConstraints {
                vectors: Vec::new(),
                thresholds: Vec::new(),
                p_u: scenario.p_u,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SipaOptions {
    /// Subgradient step `t`.
    pub step: f64,
    /// Use `t / sqrt(n)` at outer iteration `n`.
    pub diminishing: bool,
    /// Bound on every complementary-slackness product at termination.
    pub eps: f64,
    /// Relative primal feasibility required at termination.
    pub feasibility_tol: f64,
    pub max_outer_iters: usize,
    pub initial_q_t: f64,
    pub initial_q_u: f64,
    /// Iterations at the clamp after which a multiplier is set to zero.
    pub inactive_after: usize,
    /// Start each inner solve from the previous outer iterate.
    pub warm_start: bool,
    /// Keep iterating after the stopping rule is met (for fixed-length
    /// traces); `converged` then reports whether the final iterate meets it.
    pub run_to_cap: bool,
    /// Halve the step whenever a constraint residual keeps alternating in
    /// sign (the step is too long for the local curvature). Off gives the
    /// plain constant- or diminishing-step iteration.
    pub adaptive_step: bool,
    pub dipa: DipaOptions,
}

impl Default for SipaOptions {
    fn default() -> Self {
        Self {
            step: 0.1,
            diminishing: false,
            eps: 1e-4,
            feasibility_tol: 1e-4,
            max_outer_iters: 5000,
            initial_q_t: 1.0,
            initial_q_u: 1.0,
            inactive_after: 50,
            warm_start: true,
            run_to_cap: false,
            adaptive_step: true,
            dipa: DipaOptions::default(),
        }
    }
}

/// Outer dual variables.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryPoint {
    pub q_t: Vec<f64>,
    pub q_u: f64,
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SipaTraceRow {
    pub iteration: usize,
    pub q_t: Vec<f64>,
    pub q_u: f64,
    pub lambda: f64,
    /// Weighted BC sum rate, nats.
    pub rate: f64,
    pub sum_power: f64,
    pub interference: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub aux: AuxiliaryPoint,
    pub lambda_star: f64,
    pub mac_cov: MacCovarianceSet,
    pub bc_cov: BcCovarianceSet,
    /// BC rates per user, nats.
    pub per_user_rates: Vec<f64>,
    pub weighted_sum_rate: f64,
    /// Dual-MAC objective at the final auxiliary point.
    pub mac_objective: f64,
    pub sum_power: f64,
    pub interference: Vec<f64>,
    /// Thresholds the interference values are measured against.
    pub thresholds: Vec<f64>,
    pub p_u: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Some inner DIPA solve hit its iteration cap.
    pub inner_warning: bool,
    pub trace: Vec<SipaTraceRow>,
}

impl SolveReport {
    /// Complementary-slackness products `q (value - limit)`, interference
    /// constraints first, sum power last.
    pub fn slackness(&self) -> Vec<f64> {
        self.aux
            .q_t
            .iter()
            .zip(&self.interference)
            .zip(&self.thresholds)
            .map(|((q, i), t)| q * (i - t))
            .chain([self.aux.q_u * (self.sum_power - self.p_u)])
            .collect()
    }
}

/// `[P_{t,j} - sum_i h_j^H Q_i h_j ..., P_u - sum_i tr(Q_i)]`.
pub fn sipa_subgradient(bc: &BcCovarianceSet, constraints: &LinearConstraints) -> Vec<f64> {
    constraints
        .vectors
        .iter()
        .zip(&constraints.thresholds)
        .map(|(h, &t)| t - bc.received_power(h))
        .chain([constraints.p_u - bc.total_power()])
        .collect()
}

/// Value of the outer dual function at one auxiliary point, together with
/// the BC solution it was evaluated from.
#[derive(Debug, Clone)]
pub struct OuterEvaluation {
    pub value: f64,
    /// Water level of the inner problem; `lambda * (q_t, q_u)` are the
    /// Lagrange multipliers of the original two-constraint problem.
    pub lambda: f64,
    pub bc: BcCovarianceSet,
    pub subgradient: Vec<f64>,
}

/// `g(q_t, q_u)`: the optimal weighted rate for fixed multipliers.
pub fn outer_dual(
    scenario: &Scenario,
    mode: ConstraintMode,
    aux: &AuxiliaryPoint,
    opts: &DipaOptions,
) -> Result<OuterEvaluation> {
    let constraints = mode.constraints(scenario);
    let ordering = order_users(&scenario.weights);
    let shape = NoiseShape::build(scenario.n_t, &constraints, &aux.q_t, aux.q_u)?;
    let problem = MacProblem::new(scenario, &ordering, &shape.r_eff)?;
    let d = dipa_with(&problem, shape.budget, opts, None)?;
    let mapping = map_mac_to_bc(scenario, &ordering, &d.covariances, &shape.r_eff)?;
    let subgradient = sipa_subgradient(&mapping.covariances, &constraints);
    Ok(OuterEvaluation {
        value: d.objective,
        lambda: d.lambda_star,
        bc: mapping.covariances,
        subgradient,
    })
}

/// Largest factor by which one update may shrink or grow a multiplier.
const TRUST_FACTOR: f64 = 2.0;
/// A multiplier may additionally grow by this fraction of the total
/// multiplier mass, so that clamped constraints can reactivate quickly.
const REGROW_FRACTION: f64 = 0.1;

fn normalization(q_t: &[f64], q_u: f64) -> f64 {
    let s: f64 = q_t.iter().sum::<f64>() + q_u;
    if s >= AUX_FLOOR {
        s
    } else {
        1.0
    }
}

/// Limits one subgradient update to a multiplicative trust region.
fn safeguard(old: f64, raw: f64, total: f64) -> f64 {
    let lo = old / TRUST_FACTOR;
    let hi = old * TRUST_FACTOR + REGROW_FRACTION * total;
    raw.clamp(lo, hi)
}

/// Sign history length inspected for oscillation.
const OSCILLATION_WINDOW: usize = 8;
/// Sign changes within the window that count as oscillation.
const OSCILLATION_FLIPS: usize = 6;
/// Smallest fraction of the nominal step adaptive halving may reach.
const MIN_STEP_SCALE: f64 = 1.0 / 1024.0;

/// Detects a residual that keeps alternating in sign.
#[derive(Debug, Default)]
struct FlipDetector {
    signs: Vec<Vec<bool>>,
}

impl FlipDetector {
    fn oscillating(&mut self, residuals: &[f64]) -> bool {
        self.signs.push(residuals.iter().map(|r| *r > 0.0).collect());
        if self.signs.len() > OSCILLATION_WINDOW {
            self.signs.remove(0);
        }
        if self.signs.len() < OSCILLATION_WINDOW {
            return false;
        }
        let hit = (0..residuals.len())
            .any(|j| self.signs.windows(2).filter(|w| w[0][j] != w[1][j]).count() >= OSCILLATION_FLIPS);
        if hit {
            self.signs.clear();
        }
        hit
    }
}

/// Largest `c <= 1` for which `c` times the transmit covariances meet every
/// constraint.
fn shrink_factor(interference: &[f64], thresholds: &[f64], power: f64, p_u: f64) -> f64 {
    interference
        .iter()
        .zip(thresholds)
        .map(|(i, t)| t / i)
        .chain([p_u / power])
        .fold(1.0, f64::min)
}

struct Iterate {
    aux: AuxiliaryPoint,
    lambda: f64,
    mac: MacCovarianceSet,
    mac_objective: f64,
    bc: BcMapping,
    rates: Vec<f64>,
    rate: f64,
    power: f64,
    interference: Vec<f64>,
}

/// Runs the outer subgradient loop. Non-convergence within
/// `max_outer_iters` is not an error: the best feasible iterate (or the last
/// one, if none was feasible) is returned with `converged == false`.
pub fn sipa(scenario: &Scenario, mode: ConstraintMode, opts: &SipaOptions) -> Result<SolveReport> {
    scenario.validate()?;
    if !(opts.step > 0.0) || !(opts.eps > 0.0) {
        return Err(Error::InvalidInput("step and eps must be positive".into()));
    }
    let constraints = mode.constraints(scenario);
    let ordering = order_users(&scenario.weights);
    let n = constraints.len();
    let mut q_t: Vec<f64> = constraints
        .thresholds
        .iter()
        .map(|p| (opts.initial_q_t / p).max(AUX_FLOOR))
        .collect();
    let mut q_u = (opts.initial_q_u / constraints.p_u).max(AUX_FLOOR);
    let mut at_clamp = vec![0usize; n + 1];
    let mut inactive = vec![false; n + 1];

    let mut warm: Option<DipaWarmStart> = None;
    let mut trace = Vec::new();
    let mut best: Option<Iterate> = None;
    let mut last: Option<Iterate> = None;
    let mut converged = false;
    let mut inner_warning = false;
    let mut step_scale: f64 = 1.0;
    let mut flips = FlipDetector::default();

    for iteration in 1..=opts.max_outer_iters {
        // the BC solution only depends on the direction of (q_t, q_u);
        // solving at unit scale keeps the inner tolerances meaningful
        let scale = normalization(&q_t, q_u);
        let unit_q_t: Vec<f64> = q_t.iter().map(|q| q / scale).collect();
        let shape = NoiseShape::build(scenario.n_t, &constraints, &unit_q_t, q_u / scale)?;
        let problem = MacProblem::new(scenario, &ordering, &shape.r_eff)?;
        let d = dipa_with(&problem, shape.budget, &opts.dipa, warm.as_ref())?;
        inner_warning |= !d.converged;
        let mapping = map_mac_to_bc(scenario, &ordering, &d.covariances, &shape.r_eff)?;
        let bc = &mapping.covariances;
        let interference: Vec<f64> = constraints.vectors.iter().map(|h| bc.received_power(h)).collect();
        let power = bc.total_power();
        let rates = bc_rates(scenario, &ordering, &mapping);
        let rate = rates.iter().zip(&scenario.weights).map(|(r, w)| r * w).sum();

        trace.push(SipaTraceRow {
            iteration,
            q_t: q_t.clone(),
            q_u,
            lambda: d.lambda_star / scale,
            rate,
            sum_power: power,
            interference: interference.clone(),
        });

        // the returned point is shrunk onto the feasible set, so slackness
        // is judged there; the shrink itself must stay within tolerance
        let c = shrink_factor(&interference, &constraints.thresholds, power, constraints.p_u);
        let feasible = c * (1.0 + opts.feasibility_tol) >= 1.0;
        let slack_ok = q_t
            .iter()
            .zip(&interference)
            .zip(&constraints.thresholds)
            .all(|((q, i), t)| (q * (c * i - t)).abs() <= opts.eps)
            && (q_u * (c * power - constraints.p_u)).abs() <= opts.eps;

        if opts.warm_start {
            warm = Some(DipaWarmStart {
                covariances: d.covariances.clone(),
                lambda: Some(d.lambda_star).filter(|l| *l > 0.0),
            });
        }
        let it = Iterate {
            aux: AuxiliaryPoint { q_t: q_t.clone(), q_u },
            lambda: d.lambda_star / scale,
            mac: d.covariances.scaled(scale),
            mac_objective: d.objective,
            bc: mapping,
            rates,
            rate,
            power,
            interference,
        };
        converged = feasible && slack_ok;
        if converged && (!opts.run_to_cap || iteration == opts.max_outer_iters) {
            last = Some(it);
            break;
        }

        // residuals of multipliers that are still in play
        let residuals: Vec<f64> = it
            .interference
            .iter()
            .zip(&constraints.thresholds)
            .zip(&q_t)
            .map(|((i, t), q)| if *q > AUX_FLOOR { i / t - 1.0 } else { 0.0 })
            .chain([if q_u > AUX_FLOOR {
                it.power / constraints.p_u - 1.0
            } else {
                0.0
            }])
            .collect();
        if opts.adaptive_step && flips.oscillating(&residuals) {
            step_scale = (step_scale / 2.0).max(MIN_STEP_SCALE);
        }
        let t = step_scale
            * if opts.diminishing {
                opts.step / (iteration as f64).sqrt()
            } else {
                opts.step
            };
        // the step is taken on constraints scaled to unit level, so that
        // `t` is dimensionless: q_hat = q * limit, q_hat += t (value/limit - 1)
        let total: f64 =
            q_t.iter().zip(&constraints.thresholds).map(|(q, p)| q * p).sum::<f64>() + q_u * constraints.p_u;
        for j in 0..n {
            let p = constraints.thresholds[j];
            let raw = q_t[j] * p + t * (it.interference[j] / p - 1.0);
            q_t[j] = (safeguard(q_t[j] * p, raw, total) / p).max(AUX_FLOOR);
        }
        let p = constraints.p_u;
        q_u = (safeguard(q_u * p, q_u * p + t * (it.power / p - 1.0), total) / p).max(AUX_FLOOR);

        let values: Vec<f64> = q_t.iter().copied().chain([q_u]).collect();
        for (c, (count, off)) in values.iter().zip(at_clamp.iter_mut().zip(inactive.iter_mut())) {
            if *c <= AUX_FLOOR {
                *count += 1;
                if *count >= opts.inactive_after {
                    *off = true;
                }
            } else {
                *count = 0;
                *off = false;
            }
        }
        // an inactive multiplier drops out of R_w entirely, unless that
        // would leave the dual noise empty
        let keep_any = inactive.iter().any(|off| !off);
        if keep_any {
            for j in 0..n {
                if inactive[j] {
                    q_t[j] = 0.0;
                }
            }
            if inactive[n] {
                q_u = 0.0;
            }
        }

        if feasible && best.as_ref().is_none_or(|b| it.rate > b.rate) {
            best = Some(it);
        } else {
            last = Some(it);
        }
    }

    let mut chosen = if converged {
        last.expect("loop ran at least once")
    } else {
        best.or(last).expect("loop ran at least once")
    };
    // the stopping rule tolerates a small overshoot; shrink the returned
    // transmit covariances so that every constraint holds exactly
    let shrink = shrink_factor(
        &chosen.interference,
        &constraints.thresholds,
        chosen.power,
        constraints.p_u,
    );
    if shrink < 1.0 {
        chosen.bc.covariances = chosen.bc.covariances.scaled(shrink);
        chosen.rates = bc_rates(scenario, &ordering, &chosen.bc);
        chosen.rate = chosen.rates.iter().zip(&scenario.weights).map(|(r, w)| r * w).sum();
        chosen.power *= shrink;
        chosen.interference.iter_mut().for_each(|i| *i *= shrink);
    }
    Ok(SolveReport {
        aux: AuxiliaryPoint {
            q_t: chosen
                .aux
                .q_t
                .iter()
                .map(|&q| if q <= AUX_FLOOR { 0.0 } else { q })
                .collect(),
            q_u: if chosen.aux.q_u <= AUX_FLOOR {
                0.0
            } else {
                chosen.aux.q_u
            },
        },
        lambda_star: chosen.lambda,
        mac_cov: chosen.mac,
        bc_cov: chosen.bc.covariances,
        per_user_rates: chosen.rates,
        weighted_sum_rate: chosen.rate,
        mac_objective: chosen.mac_objective,
        sum_power: chosen.power,
        interference: chosen.interference,
        thresholds: constraints.thresholds.clone(),
        p_u: constraints.p_u,
        iterations: trace.len(),
        converged,
        inner_warning,
        trace,
    })
}

/// One point of a capacity-region sweep.
#[derive(Debug, Clone)]
pub struct RegionPoint {
    pub weights: Vec<f64>,
    pub rates: Option<Vec<f64>>,
    pub converged: bool,
    pub failure: Option<String>,
}

/// Solves once per weight vector. Failed points are recorded, not fatal.
pub fn region_sweep(
    scenario: &Scenario,
    weight_grid: &[Vec<f64>],
    mode: ConstraintMode,
    opts: &SipaOptions,
    threads: usize,
) -> Vec<RegionPoint> {
    parallel_map(weight_grid, threads, |w| {
        let result = if w.len() != scenario.k {
            Err(Error::DimensionMismatch(format!(
                "weight vector has {} entries, expected {}",
                w.len(),
                scenario.k
            )))
        } else {
            sipa(&scenario.with_weights(w.clone()), mode, opts)
        };
        match result {
            Ok(r) => RegionPoint {
                weights: w.clone(),
                rates: Some(r.per_user_rates),
                converged: r.converged,
                failure: None,
            },
            Err(e) => RegionPoint {
                weights: w.clone(),
                rates: None,
                converged: false,
                failure: Some(e.to_string()),
            },
        }
    })
}

/// Whether `a` strictly dominates `b` beyond `tol` in every coordinate.
pub fn dominates(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| *x > *y + tol)
}
