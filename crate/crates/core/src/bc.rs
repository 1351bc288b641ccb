//! MAC-to-BC covariance mapping.
//!
//! Each dual-MAC covariance is split into streams `(v, q)` by its
//! eigendecomposition. The base station decodes them with MMSE-SIC receive
//! vectors `u`; with the same `(u, v)` pairs used as transmit and receive
//! beamformers on the broadcast side, the stream powers `p` that reproduce
//! every MAC SINR follow from a back-substitution over the encoding order.
//!
//! Everything here is indexed by original user; the decoding order comes in
//! through the [`UserOrdering`]. Stream `j` of the user at sorted position
//! `i` sees, on the MAC side, interference from sorted positions `< i` and
//! from streams `< j` of its own user; on the BC side it sees the streams
//! encoded after it (positions `> i`, streams `> j`).

use crate::error::{Error, Result};
use crate::linalg::{dot, eig_hermitian, vec_norm, Cholesky, HermitianMatrix, C64};
use crate::mac::MacCovarianceSet;
use crate::scenario::{Scenario, UserOrdering};

/// Streams with eigenvalue below this are dropped.
pub const STREAM_FLOOR: f64 = 1e-12;

/// Receive gains `|u^H H^H v|` at or below this mark a dead stream.
pub const GAIN_FLOOR: f64 = 1e-12;

/// One dual-MAC data stream: transmit direction `v` (unit norm) and power `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct MacStream {
    pub v: Vec<C64>,
    pub q: f64,
}

/// A stream together with its MMSE receive vector and MAC SINR.
#[derive(Debug, Clone, PartialEq)]
pub struct Beam {
    pub v: Vec<C64>,
    pub q: f64,
    /// Unit-norm receive vector at the base station.
    pub u: Vec<C64>,
    pub sinr: f64,
}

/// BC covariances `Q_i^b = sum_j p_{i,j} u_{i,j} u_{i,j}^H`.
#[derive(Debug, Clone)]
pub struct BcCovarianceSet {
    pub covariances: Vec<HermitianMatrix>,
    /// Stream powers per user, aligned with the beams the set was built from.
    pub powers: Vec<Vec<f64>>,
}

impl BcCovarianceSet {
    pub fn zeros(k: usize, n_t: usize) -> Self {
        Self {
            covariances: vec![HermitianMatrix::zeros(n_t); k],
            powers: vec![Vec::new(); k],
        }
    }

    /// Every covariance and stream power multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            covariances: self.covariances.iter().map(|q| q.scale(c)).collect(),
            powers: self.powers.iter().map(|p| p.iter().map(|x| x * c).collect()).collect(),
        }
    }

    pub fn total_power(&self) -> f64 {
        self.covariances.iter().map(HermitianMatrix::trace).sum()
    }

    /// `sum_i h^H Q_i^b h`.
    pub fn received_power(&self, h: &[C64]) -> f64 {
        self.covariances.iter().map(|q| q.quadratic_form(h)).sum()
    }

    /// `sum_i Q_i^b`.
    pub fn sum(&self) -> HermitianMatrix {
        let mut acc = HermitianMatrix::zeros(self.covariances[0].dim());
        for q in &self.covariances {
            acc.add_scaled(q, 1.0);
        }
        acc
    }
}

/// Complete output of the mapping.
#[derive(Debug, Clone)]
pub struct BcMapping {
    pub beams: Vec<Vec<Beam>>,
    pub covariances: BcCovarianceSet,
}

/// Eigen-streams of every user's covariance, strongest first.
pub fn decompose_streams(q: &MacCovarianceSet) -> Result<Vec<Vec<MacStream>>> {
    q.covariances
        .iter()
        .map(|c| {
            let e = eig_hermitian(c)?;
            Ok(e.eigenvalues
                .into_iter()
                .zip(e.eigenvectors)
                .filter(|(l, _)| *l >= STREAM_FLOOR)
                .map(|(q, v)| MacStream { v, q })
                .collect())
        })
        .collect()
}

fn effective_channel(scenario: &Scenario, user: usize, v: &[C64]) -> Vec<C64> {
    // H^H v
    let h = &scenario.channels[user];
    (0..scenario.n_t)
        .map(|c| (0..scenario.n_r).map(|r| h.get(r, c).conj() * v[r]).sum())
        .collect()
}

/// MMSE-SIC receive vectors and MAC SINRs for the given streams.
pub fn mmse_beamformers(
    scenario: &Scenario,
    ordering: &UserOrdering,
    streams: &[Vec<MacStream>],
    r_w: &HermitianMatrix,
) -> Result<Vec<Vec<Beam>>> {
    if streams.len() != scenario.k {
        return Err(Error::DimensionMismatch(format!(
            "{} stream lists for {} users",
            streams.len(),
            scenario.k
        )));
    }
    let mut out: Vec<Vec<Beam>> = vec![Vec::new(); scenario.k];
    let mut cov = r_w.clone();
    for &user in &ordering.pi {
        for s in &streams[user] {
            let g = effective_channel(scenario, user, &s.v);
            let x = Cholesky::factor(&cov)?.solve(&g);
            let norm = vec_norm(&x);
            let u: Vec<C64> = x.iter().map(|z| z / norm).collect();
            let sinr = (s.q * dot(&g, &x).re).max(0.0);
            out[user].push(Beam {
                v: s.v.clone(),
                q: s.q,
                u,
                sinr,
            });
            cov.add_outer(&g, s.q);
        }
    }
    Ok(out)
}

/// BC stream powers that reproduce the MAC SINRs, computed from the last
/// encoded stream (last user, last stream) backwards.
pub fn bc_power_recursion(
    scenario: &Scenario,
    ordering: &UserOrdering,
    beams: &[Vec<Beam>],
    sigma2: f64,
) -> Result<Vec<Vec<f64>>> {
    let gains: Vec<Vec<Vec<C64>>> = beams
        .iter()
        .enumerate()
        .map(|(user, bs)| bs.iter().map(|b| effective_channel(scenario, user, &b.v)).collect())
        .collect();
    let mut powers: Vec<Vec<f64>> = beams.iter().map(|b| vec![0.0; b.len()]).collect();
    let k = ordering.len();
    for pos in (0..k).rev() {
        let user = ordering.pi[pos];
        for j in (0..beams[user].len()).rev() {
            let g = &gains[user][j];
            let own = dot(&beams[user][j].u, g).norm_sqr();
            if own.sqrt() <= GAIN_FLOOR {
                return Err(Error::DegenerateStream(own.sqrt()));
            }
            let mut interference = sigma2;
            for &later in &ordering.pi[pos + 1..] {
                for (b, &p) in beams[later].iter().zip(&powers[later]) {
                    interference += p * dot(&b.u, g).norm_sqr();
                }
            }
            for l in (j + 1)..beams[user].len() {
                interference += powers[user][l] * dot(&beams[user][l].u, g).norm_sqr();
            }
            powers[user][j] = (beams[user][j].sinr * interference / own).max(0.0);
        }
    }
    Ok(powers)
}

/// `Q_i^b = sum_j p_{i,j} u_{i,j} u_{i,j}^H`.
pub fn assemble_bc(powers: &[Vec<f64>], beams: &[Vec<Beam>], n_t: usize) -> BcCovarianceSet {
    let covariances = powers
        .iter()
        .zip(beams)
        .map(|(ps, bs)| {
            let mut q = HermitianMatrix::zeros(n_t);
            for (&p, b) in ps.iter().zip(bs) {
                if p > 0.0 {
                    q.add_outer(&b.u, p);
                }
            }
            q
        })
        .collect();
    BcCovarianceSet {
        covariances,
        powers: powers.to_vec(),
    }
}

/// Full MAC-to-BC mapping. Streams whose receive gain vanishes are dropped
/// before the recursion.
pub fn map_mac_to_bc(
    scenario: &Scenario,
    ordering: &UserOrdering,
    q: &MacCovarianceSet,
    r_w: &HermitianMatrix,
) -> Result<BcMapping> {
    let streams = decompose_streams(q)?;
    map_streams_to_bc(scenario, ordering, streams, r_w)
}

/// Mapping from an explicit stream list; the order within each user is the
/// encoding order used on the BC side.
pub fn map_streams_to_bc(
    scenario: &Scenario,
    ordering: &UserOrdering,
    mut streams: Vec<Vec<MacStream>>,
    r_w: &HermitianMatrix,
) -> Result<BcMapping> {
    for (user, list) in streams.iter_mut().enumerate() {
        list.retain(|s| vec_norm(&effective_channel(scenario, user, &s.v)) > GAIN_FLOOR);
    }
    let beams = mmse_beamformers(scenario, ordering, &streams, r_w)?;
    let powers = bc_power_recursion(scenario, ordering, &beams, scenario.sigma2)?;
    let covariances = assemble_bc(&powers, &beams, scenario.n_t);
    Ok(BcMapping { beams, covariances })
}

/// BC SINR of every stream, evaluated directly from `(p, u, v)` with DPC
/// encoding in reverse decoding order.
pub fn bc_sinrs(
    scenario: &Scenario,
    ordering: &UserOrdering,
    beams: &[Vec<Beam>],
    powers: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = beams.iter().map(|b| vec![0.0; b.len()]).collect();
    for (pos, &user) in ordering.pi.iter().enumerate() {
        for j in 0..beams[user].len() {
            let g = effective_channel(scenario, user, &beams[user][j].v);
            let signal = powers[user][j] * dot(&beams[user][j].u, &g).norm_sqr();
            let mut interference = scenario.sigma2;
            for &later in &ordering.pi[pos + 1..] {
                for (b, &p) in beams[later].iter().zip(&powers[later]) {
                    interference += p * dot(&b.u, &g).norm_sqr();
                }
            }
            for l in (j + 1)..beams[user].len() {
                interference += powers[user][l] * dot(&beams[user][l].u, &g).norm_sqr();
            }
            out[user][j] = signal / interference;
        }
    }
    out
}

/// Per-user BC rates `sum_j log(1 + SINR_b)`.
pub fn bc_rates(scenario: &Scenario, ordering: &UserOrdering, mapping: &BcMapping) -> Vec<f64> {
    bc_sinrs(scenario, ordering, &mapping.beams, &mapping.covariances.powers)
        .iter()
        .map(|s| s.iter().map(|x| x.ln_1p()).sum())
        .collect()
}

/// Weighted BC sum rate from the stream SINRs.
pub fn weighted_sum_rate_bc(scenario: &Scenario, ordering: &UserOrdering, mapping: &BcMapping) -> f64 {
    bc_rates(scenario, ordering, mapping)
        .iter()
        .zip(&scenario.weights)
        .map(|(r, w)| r * w)
        .sum()
}

/// DPC rates from the covariances alone:
/// `log|s^2 I + H_i (sum_{k>=i} Q_k) H_i^H| - log|s^2 I + H_i (sum_{k>i} Q_k) H_i^H|`,
/// `k` running over users encoded after `i`.
pub fn bc_rates_logdet(scenario: &Scenario, ordering: &UserOrdering, qb: &BcCovarianceSet) -> Result<Vec<f64>> {
    let n_t = scenario.n_t;
    let mut out = vec![0.0; scenario.k];
    let mut later = HermitianMatrix::zeros(n_t);
    for &user in ordering.pi.iter().rev() {
        let h = &scenario.channels[user];
        let mut without = later.congruence(h);
        without.add_identity(scenario.sigma2);
        later.add_scaled(&qb.covariances[user], 1.0);
        let mut with = later.congruence(h);
        with.add_identity(scenario.sigma2);
        out[user] = Cholesky::factor(&with)?.logdet() - Cholesky::factor(&without)?.logdet();
    }
    Ok(out)
}

/// `sum_j q_{t,j} sum_i h_j^H Q_i h_j + q_u sum_i tr(Q_i)`.
pub fn bc_constraint_value(qb: &BcCovarianceSet, q_t: &[f64], q_u: f64, pu_channels: &[Vec<C64>]) -> f64 {
    let interference: f64 = q_t
        .iter()
        .zip(pu_channels)
        .map(|(&q, h)| if q == 0.0 { 0.0 } else { q * qb.received_power(h) })
        .sum();
    interference + q_u * qb.total_power()
}
