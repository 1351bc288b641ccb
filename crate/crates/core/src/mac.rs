//! Weighted sum-rate maximization on the dual MIMO multiple-access channel.
//!
//! For fixed auxiliary variables the dual MAC sees the colored noise
//! `R_w = sum_j q_{t,j} h_{o,j} h_{o,j}^H + q_u I` and a single power budget
//! `P = sum_j q_{t,j} P_{t,j} + q_u P_u`. With users sorted by nonincreasing
//! weight and `Delta_i = w_i - w_{i+1}`, the objective is
//!
//! ```text
//! f(Q) = sum_i Delta_i (log|F_i| - log|R_w|),   F_i = R_w + sum_{j<=i} H_j^H Q_j H_j
//! ```
//!
//! which is concave. [`dipa`] maximizes it under `sigma^2 sum_i tr(Q_i) <= P`
//! by bisecting on the water level `lambda` and, for each `lambda`, running a
//! block projected gradient ascent on the Lagrangian ([`inner_ascent`]).

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, psd_project, Cholesky, ComplexMatrix, HermitianMatrix, C64};
use crate::scenario::{Scenario, UserOrdering};

/// Multipliers below this are treated as zero.
pub const AUX_FLOOR: f64 = 1e-8;

/// Relative ridge added to `R_w` before any factorization.
pub const RIDGE: f64 = 1e-9;

/// Per-user MAC transmit covariances (`n_r x n_r`), indexed by original user.
#[derive(Debug, Clone, PartialEq)]
pub struct MacCovarianceSet {
    pub covariances: Vec<HermitianMatrix>,
}

impl MacCovarianceSet {
    pub fn zeros(k: usize, n_r: usize) -> Self {
        Self {
            covariances: vec![HermitianMatrix::zeros(n_r); k],
        }
    }

    pub fn total_trace(&self) -> f64 {
        self.covariances.iter().map(HermitianMatrix::trace).sum()
    }

    pub fn len(&self) -> usize {
        self.covariances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.covariances.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            covariances: self.covariances.iter().map(|q| q.scale(c)).collect(),
        }
    }

    fn to_sorted(&self, ordering: &UserOrdering) -> Vec<HermitianMatrix> {
        ordering.pi.iter().map(|&u| self.covariances[u].clone()).collect()
    }

    fn from_sorted(sorted: Vec<HermitianMatrix>, ordering: &UserOrdering) -> Self {
        let mut covariances = vec![HermitianMatrix::zeros(1); sorted.len()];
        for (q, &u) in sorted.into_iter().zip(&ordering.pi) {
            covariances[u] = q;
        }
        Self { covariances }
    }
}

/// Linear constraints folded into the dual noise: `sum_i a_j^H Q_i a_j <= c_j`
/// for each vector `a_j`, plus `sum_i tr(Q_i) <= p_u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraints {
    pub vectors: Vec<Vec<C64>>,
    pub thresholds: Vec<f64>,
    pub p_u: f64,
}

impl LinearConstraints {
    pub fn from_scenario(scenario: &Scenario) -> Self {
        Self {
            vectors: scenario.pu_channels.clone(),
            thresholds: scenario.p_t.clone(),
            p_u: scenario.p_u,
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Dual-MAC noise covariance and power budget for one auxiliary point.
#[derive(Debug, Clone)]
pub struct NoiseShape {
    pub q_t: Vec<f64>,
    pub q_u: f64,
    /// `sum_j q_{t,j} h_{o,j} h_{o,j}^H + q_u I`.
    pub r_w: HermitianMatrix,
    /// `r_w` plus the ridge; used for every factorization.
    pub r_eff: HermitianMatrix,
    pub budget: f64,
}

/// Builds `R_w` and the budget `P` from the scenario's PU constraints.
pub fn noise_shape(scenario: &Scenario, q_t: &[f64], q_u: f64) -> Result<NoiseShape> {
    NoiseShape::build(scenario.n_t, &LinearConstraints::from_scenario(scenario), q_t, q_u)
}

impl NoiseShape {
    pub fn build(n_t: usize, constraints: &LinearConstraints, q_t: &[f64], q_u: f64) -> Result<NoiseShape> {
        if q_t.len() != constraints.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} interference multipliers for {} constraints",
                q_t.len(),
                constraints.len()
            )));
        }
        if let Some(q) = q_t.iter().chain([&q_u]).find(|q| !(**q >= 0.0 && q.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "auxiliary variables must be nonnegative, got {q}"
            )));
        }
        if q_t.iter().all(|&q| q < AUX_FLOOR) && q_u < AUX_FLOOR {
            return Err(Error::AllZeroAuxiliaries);
        }
        let mut r_w = HermitianMatrix::scaled_identity(n_t, q_u);
        let mut budget = q_u * constraints.p_u;
        for ((h, &q), &p_t) in constraints.vectors.iter().zip(q_t).zip(&constraints.thresholds) {
            if q > 0.0 {
                r_w.add_outer(h, q);
                budget += q * p_t;
            }
        }
        let mut r_eff = r_w.clone();
        r_eff.add_identity(RIDGE * r_w.trace() / n_t as f64);
        Ok(NoiseShape {
            q_t: q_t.to_vec(),
            q_u,
            r_w,
            r_eff,
            budget,
        })
    }
}

/// The dual-MAC objective for a fixed noise covariance, in sorted user order.
#[derive(Debug, Clone)]
pub struct MacProblem {
    k: usize,
    n_r: usize,
    pi: Vec<usize>,
    deltas: Vec<f64>,
    /// `H_i` in sorted order, `n_r x n_t`.
    h: Vec<ComplexMatrix>,
    /// `H_i^H` in sorted order, `n_t x n_r`.
    h_adj: Vec<ComplexMatrix>,
    noise: HermitianMatrix,
    noise_logdet: f64,
    sigma2: f64,
}

/// Outcome of [`inner_ascent`].
#[derive(Debug, Clone)]
pub struct InnerOutcome {
    pub covariances: MacCovarianceSet,
    pub sweeps: usize,
    pub converged: bool,
    /// Largest squared norm of the unit-step projected gradient in the last sweep.
    pub stationarity: f64,
    /// Lagrangian `f(Q) - lambda (sigma^2 sum tr Q)` after each sweep.
    pub lagrangian: Vec<f64>,
}

/// Settings for the inner ascent and the water-level bisection.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DipaOptions {
    /// Initial ascent step.
    pub step: f64,
    /// Stationarity threshold on the squared projected-gradient norm.
    pub grad_tol: f64,
    /// Relative width at which the `lambda` bracket is considered closed.
    pub lambda_tol: f64,
    /// Relative power tolerance; bisection stops early inside this band.
    pub power_rel_tol: f64,
    pub max_inner_iters: usize,
    pub max_bisections: usize,
}

impl Default for DipaOptions {
    fn default() -> Self {
        Self {
            step: 0.1,
            grad_tol: 1e-8,
            lambda_tol: 1e-6,
            power_rel_tol: 1e-5,
            max_inner_iters: 10_000,
            max_bisections: 200,
        }
    }
}

const ARMIJO: f64 = 1e-4;
const MAX_STEP_GROWTH: f64 = 1e8;

impl MacProblem {
    pub fn new(scenario: &Scenario, ordering: &UserOrdering, noise: &HermitianMatrix) -> Result<Self> {
        if noise.dim() != scenario.n_t {
            return Err(Error::DimensionMismatch(format!(
                "noise is {}x{}, expected {}x{}",
                noise.dim(),
                noise.dim(),
                scenario.n_t,
                scenario.n_t
            )));
        }
        if ordering.len() != scenario.k {
            return Err(Error::DimensionMismatch("ordering does not cover every user".into()));
        }
        let h: Vec<ComplexMatrix> = ordering.pi.iter().map(|&u| scenario.channels[u].clone()).collect();
        let h_adj = h.iter().map(ComplexMatrix::adjoint).collect();
        let noise_logdet = Cholesky::factor(noise)?.logdet();
        Ok(Self {
            k: scenario.k,
            n_r: scenario.n_r,
            pi: ordering.pi.clone(),
            deltas: ordering.deltas.clone(),
            h,
            h_adj,
            noise: noise.clone(),
            noise_logdet,
            sigma2: scenario.sigma2,
        })
    }

    fn ordering(&self) -> UserOrdering {
        UserOrdering {
            pi: self.pi.clone(),
            deltas: self.deltas.clone(),
        }
    }

    pub fn noise(&self) -> &HermitianMatrix {
        &self.noise
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// `H_i^H Q_i H_i` for sorted position `i`.
    fn received(&self, i: usize, q: &HermitianMatrix) -> HermitianMatrix {
        q.congruence(&self.h_adj[i])
    }

    /// `F_1, ..., F_K`.
    fn cumulative(&self, sorted: &[HermitianMatrix]) -> Vec<HermitianMatrix> {
        let mut acc = self.noise.clone();
        sorted
            .iter()
            .enumerate()
            .map(|(i, q)| {
                acc.add_scaled(&self.received(i, q), 1.0);
                acc.clone()
            })
            .collect()
    }

    fn check(&self, q: &MacCovarianceSet) -> Result<()> {
        if q.len() != self.k || q.covariances.iter().any(|c| c.dim() != self.n_r) {
            return Err(Error::DimensionMismatch(format!(
                "expected {} covariances of size {}x{}",
                self.k, self.n_r, self.n_r
            )));
        }
        Ok(())
    }

    /// Per-user rates in nats, indexed by original user.
    pub fn rates(&self, q: &MacCovarianceSet) -> Result<Vec<f64>> {
        self.check(q)?;
        let sorted = q.to_sorted(&self.ordering());
        let mut prev = self.noise_logdet;
        let mut out = vec![0.0; self.k];
        for (i, f) in self.cumulative(&sorted).iter().enumerate() {
            let l = Cholesky::factor(f)?.logdet();
            out[self.pi[i]] = (l - prev).max(0.0);
            prev = l;
        }
        Ok(out)
    }

    /// `sum_i Delta_i (log|F_i| - log|R_w|)`.
    pub fn objective(&self, q: &MacCovarianceSet) -> Result<f64> {
        self.check(q)?;
        self.objective_sorted(&q.to_sorted(&self.ordering()))
    }

    fn objective_sorted(&self, sorted: &[HermitianMatrix]) -> Result<f64> {
        let mut total = 0.0;
        for (f, &d) in self.cumulative(sorted).iter().zip(&self.deltas) {
            if d > 0.0 {
                total += d * (Cholesky::factor(f)?.logdet() - self.noise_logdet);
            }
        }
        Ok(total)
    }

    /// `sigma^2 sum_i tr(Q_i)`.
    pub fn power(&self, q: &MacCovarianceSet) -> f64 {
        self.sigma2 * q.total_trace()
    }

    /// Gradient of the objective with respect to the covariance of original
    /// user `user`: `sum_{j >= k} Delta_j H_k F_j^{-1} H_k^H`, `k` its sorted
    /// position.
    pub fn gradient(&self, q: &MacCovarianceSet, user: usize) -> Result<HermitianMatrix> {
        self.check(q)?;
        let k = self
            .pi
            .iter()
            .position(|&u| u == user)
            .ok_or_else(|| Error::InvalidInput(format!("no user {user}")))?;
        let sorted = q.to_sorted(&self.ordering());
        let f = self.cumulative(&sorted);
        self.block_gradient(&f, k)
    }

    fn block_gradient(&self, f: &[HermitianMatrix], k: usize) -> Result<HermitianMatrix> {
        let n_t = self.noise.dim();
        let mut s = HermitianMatrix::zeros(n_t);
        for j in k..self.k {
            if self.deltas[j] > 0.0 {
                s.add_scaled(&Cholesky::factor(&f[j])?.inverse(), self.deltas[j]);
            }
        }
        Ok(s.congruence(&self.h[k]))
    }

    /// Block projected gradient ascent on `f(Q) - lambda sigma^2 sum tr(Q)`,
    /// users visited in sorted order, each block with its own Armijo
    /// backtracking step that doubles after every accepted step.
    pub fn ascend(&self, lambda: f64, init: &MacCovarianceSet, opts: &DipaOptions) -> Result<InnerOutcome> {
        self.check(init)?;
        if !(lambda >= 0.0) {
            return Err(Error::InvalidInput(format!("lambda must be >= 0, got {lambda}")));
        }
        if !(opts.step > 0.0) {
            return Err(Error::InvalidInput(format!("step must be > 0, got {}", opts.step)));
        }
        let price = lambda * self.sigma2;
        let mut q = init.to_sorted(&self.ordering());
        let mut f = self.cumulative(&q);
        let mut steps = vec![opts.step; self.k];
        let max_step = opts.step * MAX_STEP_GROWTH;
        let mut lagrangian = Vec::new();
        let mut stationarity = f64::INFINITY;
        let mut converged = false;
        let mut sweeps = 0;

        while sweeps < opts.max_inner_iters {
            sweeps += 1;
            let mut worst: f64 = 0.0;
            for b in 0..self.k {
                let terms: Vec<usize> = (b..self.k).filter(|&j| self.deltas[j] > 0.0).collect();
                let chols = terms
                    .iter()
                    .map(|&j| Cholesky::factor(&f[j]))
                    .collect::<Result<Vec<_>>>()?;
                let mut grad = HermitianMatrix::zeros(self.noise.dim());
                let mut base = -price * q[b].trace();
                for (c, &j) in chols.iter().zip(&terms) {
                    grad.add_scaled(&c.inverse(), self.deltas[j]);
                    base += self.deltas[j] * c.logdet();
                }
                let mut grad = grad.congruence(&self.h[b]);
                grad.add_identity(-price);

                let mapped = psd_project(&q[b].add(&grad))?.sub(&q[b]);
                let measure = mapped.frobenius_norm().powi(2);
                worst = worst.max(measure);
                if measure == 0.0 {
                    continue;
                }

                let mut s = steps[b];
                let mut backtracked = false;
                let mut accepted = None;
                while s >= opts.step * 1e-20 {
                    let mut cand_in = q[b].clone();
                    cand_in.add_scaled(&grad, s);
                    let cand = psd_project(&cand_in)?;
                    let diff = cand.sub(&q[b]);
                    let d = self.received(b, &diff);
                    let mut val = -price * cand.trace();
                    let mut ok = true;
                    for &j in &terms {
                        match Cholesky::factor(&f[j].add(&d)) {
                            Ok(c) => val += self.deltas[j] * c.logdet(),
                            Err(_) => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if ok && val >= base + ARMIJO * grad.inner(&diff) {
                        accepted = Some((cand, d));
                        break;
                    }
                    s *= 0.5;
                    backtracked = true;
                }
                if let Some((cand, d)) = accepted {
                    q[b] = cand;
                    for fj in f.iter_mut().skip(b) {
                        fj.add_scaled(&d, 1.0);
                    }
                    steps[b] = if backtracked { s } else { (2.0 * s).min(max_step) };
                }
            }
            stationarity = worst;
            lagrangian.push(self.objective_sorted(&q)? - price * q.iter().map(HermitianMatrix::trace).sum::<f64>());
            // with a zero price the supremum is not attained; run to the cap
            if worst <= opts.grad_tol && price > 0.0 {
                converged = true;
                break;
            }
        }
        Ok(InnerOutcome {
            covariances: MacCovarianceSet::from_sorted(q, &self.ordering()),
            sweeps,
            converged,
            stationarity,
            lagrangian,
        })
    }

    /// Water level above which `Q = 0` is optimal:
    /// `w_max max_k lambda_max(H_k R^{-1} H_k^H) / sigma^2`.
    pub fn lambda_ceiling(&self) -> Result<f64> {
        let inv = Cholesky::factor(&self.noise)?.inverse();
        let w_max: f64 = self.deltas.iter().sum();
        let mut top: f64 = 0.0;
        for h in &self.h {
            let e = eig_hermitian(&inv.congruence(h))?;
            top = top.max(e.eigenvalues[0]);
        }
        Ok(w_max * top / self.sigma2)
    }
}

/// Weighted sum rate of the dual MAC (nats), zero at `Q = 0`.
pub fn weighted_sum_rate_mac(
    scenario: &Scenario,
    ordering: &UserOrdering,
    q: &MacCovarianceSet,
    r_w: &HermitianMatrix,
) -> Result<f64> {
    MacProblem::new(scenario, ordering, r_w)?.objective(q)
}

/// SIC rates `log|F_i| - log|F_{i-1}|` per original user.
pub fn per_user_rates_mac(
    scenario: &Scenario,
    ordering: &UserOrdering,
    q: &MacCovarianceSet,
    r_w: &HermitianMatrix,
) -> Result<Vec<f64>> {
    MacProblem::new(scenario, ordering, r_w)?.rates(q)
}

pub fn mac_gradient(
    scenario: &Scenario,
    ordering: &UserOrdering,
    q: &MacCovarianceSet,
    r_w: &HermitianMatrix,
    user: usize,
) -> Result<HermitianMatrix> {
    MacProblem::new(scenario, ordering, r_w)?.gradient(q, user)
}

/// Maximizes the Lagrangian for a fixed water level.
pub fn inner_ascent(
    scenario: &Scenario,
    ordering: &UserOrdering,
    r_w: &HermitianMatrix,
    lambda: f64,
    init: &MacCovarianceSet,
    opts: &DipaOptions,
) -> Result<InnerOutcome> {
    MacProblem::new(scenario, ordering, r_w)?.ascend(lambda, init, opts)
}

/// `P - sigma^2 sum_i tr(Q_i)`, a subgradient of the dual function in `lambda`.
pub fn subgradient_of_dual(q: &MacCovarianceSet, budget: f64, sigma2: f64) -> f64 {
    budget - sigma2 * q.total_trace()
}

/// Dual function value `g(lambda) = max_Q f(Q) - lambda (sigma^2 sum tr Q - P)`
/// and its subgradient, from an inner solve.
pub fn dual_function(
    problem: &MacProblem,
    budget: f64,
    lambda: f64,
    init: &MacCovarianceSet,
    opts: &DipaOptions,
) -> Result<(f64, f64, InnerOutcome)> {
    let inner = problem.ascend(lambda, init, opts)?;
    let f = problem.objective(&inner.covariances)?;
    let power = problem.power(&inner.covariances);
    Ok((f - lambda * (power - budget), budget - power, inner))
}

/// One bisection step of [`dipa`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipaTraceRow {
    pub lambda: f64,
    pub objective: f64,
    pub power: f64,
    pub inner_sweeps: usize,
}

#[derive(Debug, Clone)]
pub struct DipaResult {
    pub covariances: MacCovarianceSet,
    pub lambda_star: f64,
    pub objective: f64,
    pub power: f64,
    pub budget: f64,
    pub trace: Vec<DipaTraceRow>,
    /// False when some inner solve hit its iteration cap.
    pub converged: bool,
    /// The budget did not bind even for a vanishing water level.
    pub constraint_inactive: bool,
}

/// Initial point for [`dipa_with`].
#[derive(Debug, Clone)]
pub struct DipaWarmStart {
    pub covariances: MacCovarianceSet,
    pub lambda: Option<f64>,
}

/// DIPA for the scenario's own PU constraints.
pub fn dipa(
    scenario: &Scenario,
    ordering: &UserOrdering,
    q_t: &[f64],
    q_u: f64,
    opts: &DipaOptions,
) -> Result<DipaResult> {
    let shape = noise_shape(scenario, q_t, q_u)?;
    let problem = MacProblem::new(scenario, ordering, &shape.r_eff)?;
    dipa_with(&problem, shape.budget, opts, None)
}

/// Bisection on the water level around inner ascents.
///
/// The bracket starts at `[0, lambda_ceiling]` (or is grown geometrically
/// around a warm-start guess). It is closed when its relative width drops
/// below `lambda_tol` or an evaluated point lands within `power_rel_tol` of
/// the budget. The final covariances are the convex combination of the two
/// bracket endpoints that spends the budget exactly; by concavity that point
/// is at least as good as the worse endpoint.
pub fn dipa_with(
    problem: &MacProblem,
    budget: f64,
    opts: &DipaOptions,
    warm: Option<&DipaWarmStart>,
) -> Result<DipaResult> {
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(Error::InvalidInput(format!("budget must be positive, got {budget}")));
    }
    let k = problem.k;
    let n_r = problem.n_r;
    let mut trace = Vec::new();
    let mut converged = true;
    let mut current = match warm {
        Some(w) => w.covariances.clone(),
        None => MacCovarianceSet::zeros(k, n_r),
    };
    let tol_power = opts.power_rel_tol * budget;

    struct Point {
        lambda: f64,
        q: MacCovarianceSet,
        power: f64,
    }

    let mut eval = |lambda: f64, start: &MacCovarianceSet, trace: &mut Vec<DipaTraceRow>| -> Result<Point> {
        let inner = problem.ascend(lambda, start, opts)?;
        converged &= inner.converged;
        let power = problem.power(&inner.covariances);
        trace.push(DipaTraceRow {
            lambda,
            objective: problem.objective(&inner.covariances)?,
            power,
            inner_sweeps: inner.sweeps,
        });
        Ok(Point {
            lambda,
            q: inner.covariances,
            power,
        })
    };

    let ceiling = problem.lambda_ceiling()?;
    let mut hi = Point {
        lambda: ceiling,
        q: MacCovarianceSet::zeros(k, n_r),
        power: 0.0,
    };
    let mut lo: Option<Point> = None;

    // true when the point landed above the budget
    let place = |p: Point, lo: &mut Option<Point>, hi: &mut Point| -> bool {
        if p.power > budget {
            *lo = Some(p);
            true
        } else {
            *hi = p;
            false
        }
    };
    let closed = |lo: &Option<Point>, hi: &Point| -> bool {
        if budget - hi.power <= tol_power {
            return true;
        }
        match lo {
            Some(l) => l.power - budget <= tol_power || hi.lambda - l.lambda <= opts.lambda_tol * hi.lambda,
            None => hi.lambda <= opts.lambda_tol * ceiling,
        }
    };

    if let Some(guess) = warm.and_then(|w| w.lambda).filter(|&g| g > 0.0 && g < ceiling) {
        let p = eval(guess, &current, &mut trace)?;
        current = p.q.clone();
        let above = place(p, &mut lo, &mut hi);
        let factor = if above { 2.0 } else { 0.5 };
        let mut lam = guess;
        while !closed(&lo, &hi) {
            lam *= factor;
            if lam >= hi.lambda || lam <= opts.lambda_tol * ceiling {
                break;
            }
            let p = eval(lam, &current, &mut trace)?;
            current = p.q.clone();
            if place(p, &mut lo, &mut hi) != above {
                break;
            }
        }
    }

    let mut bisections = 0;
    while !closed(&lo, &hi) && bisections < opts.max_bisections {
        bisections += 1;
        let mid = 0.5 * (lo.as_ref().map_or(0.0, |p| p.lambda) + hi.lambda);
        let p = eval(mid, &current, &mut trace)?;
        current = p.q.clone();
        place(p, &mut lo, &mut hi);
    }

    let (q, lambda_star, inactive) = match lo {
        Some(lo) => {
            let theta = ((budget - hi.power) / (lo.power - hi.power)).clamp(0.0, 1.0);
            let mixed =
                lo.q.covariances
                    .iter()
                    .zip(&hi.q.covariances)
                    .map(|(a, b)| {
                        let mut m = a.scale(theta);
                        m.add_scaled(b, 1.0 - theta);
                        m
                    })
                    .collect();
            let lam = theta * lo.lambda + (1.0 - theta) * hi.lambda;
            (MacCovarianceSet { covariances: mixed }, lam, false)
        }
        // accepted just below the budget: a uniform rescale spends exactly P,
        // so warm-started sequences do not drift within the tolerance
        None if budget - hi.power <= tol_power && hi.power > 0.0 => (hi.q.scaled(budget / hi.power), hi.lambda, false),
        None if budget - hi.power <= tol_power => (hi.q, hi.lambda, false),
        // the budget never binds: every evaluated level left power below P
        None => (hi.q, 0.0, true),
    };
    let objective = problem.objective(&q)?;
    let power = problem.power(&q);
    Ok(DipaResult {
        covariances: q,
        lambda_star,
        objective,
        power,
        budget,
        trace,
        converged,
        constraint_inactive: inactive,
    })
}

/// Point-to-point water-filling for `y = G x + n`, `n ~ CN(0, sigma2 I)`,
/// under `tr(Q) <= p`. Returns the input covariance and the rate in nats.
pub fn waterfill_single_user(g: &ComplexMatrix, p: f64, sigma2: f64) -> Result<(HermitianMatrix, f64)> {
    if !(p >= 0.0) {
        return Err(Error::InvalidInput(format!("power must be >= 0, got {p}")));
    }
    let gram = HermitianMatrix::from_matrix(&g.adjoint().matmul(g)?)?;
    let e = eig_hermitian(&gram)?;
    let gains: Vec<f64> = e.eigenvalues.iter().map(|&s| s.max(0.0) / sigma2).collect();
    let active: Vec<f64> = gains.iter().copied().filter(|&x| x > 1e-300).collect();
    let mut level = 0.0;
    for m in (1..=active.len()).rev() {
        let inv_sum: f64 = active[..m].iter().map(|x| 1.0 / x).sum();
        let mu = (p + inv_sum) / m as f64;
        if mu - 1.0 / active[m - 1] >= 0.0 {
            level = mu;
            break;
        }
    }
    let powers: Vec<f64> = gains
        .iter()
        .map(|&x| if x > 1e-300 { (level - 1.0 / x).max(0.0) } else { 0.0 })
        .collect();
    let mut q = HermitianMatrix::zeros(gram.dim());
    let mut rate = 0.0;
    for ((&pw, &x), v) in powers.iter().zip(&gains).zip(&e.eigenvectors) {
        if pw > 0.0 {
            q.add_outer(v, pw);
            rate += (1.0 + pw * x).ln();
        }
    }
    Ok((q, rate))
}
