//! Problem instances: SU channels, PU channels, weights and budgets.
//!
//! Scenario files are JSON. Power budgets may be given either in dB relative
//! to the unit noise power (`P_u_dB`, `P_t_dB`) or linearly (`P_u`, `P_t`);
//! the linear field wins when both are present. Saved files always carry the
//! linear values and the explicit channel entries so that loading them back
//! reproduces the instance bit for bit.

use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::rng::CounterRng;
use crate::units::{db_to_linear, linear_to_db};

/// One optimization instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub k: usize,
    pub n_t: usize,
    pub n_r: usize,
    /// `H_i`, each `n_r x n_t`.
    pub channels: Vec<ComplexMatrix>,
    /// `h_{o,j}`, each of length `n_t`.
    pub pu_channels: Vec<Vec<C64>>,
    /// Distance ratio `l_2 / l_1` each PU channel was generated with.
    pub l_ratios: Vec<f64>,
    pub weights: Vec<f64>,
    /// Sum-power budget, linear.
    pub p_u: f64,
    /// Interference thresholds, linear, one per PU.
    pub p_t: Vec<f64>,
    pub sigma2: f64,
    pub seed: u64,
}

/// A primary user as requested at generation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PuSpec {
    pub l_ratio: f64,
    /// Linear interference threshold.
    pub p_t: f64,
}

/// Parameters for [`generate_scenario`].
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationParams {
    pub k: usize,
    pub n_t: usize,
    pub n_r: usize,
    pub pus: Vec<PuSpec>,
    /// Linear sum-power budget.
    pub p_u: f64,
    /// Defaults to all ones.
    pub weights: Option<Vec<f64>>,
    pub sigma2: f64,
    pub seed: u64,
}

impl GenerationParams {
    pub fn new(k: usize, n_t: usize, n_r: usize, p_u: f64, seed: u64) -> Self {
        Self {
            k,
            n_t,
            n_r,
            pus: Vec::new(),
            p_u,
            weights: None,
            sigma2: 1.0,
            seed,
        }
    }

    pub fn with_pu(mut self, l_ratio: f64, p_t: f64) -> Self {
        self.pus.push(PuSpec { l_ratio, p_t });
        self
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.weights = Some(weights);
        self
    }
}

/// Draws a random instance.
///
/// Stream layout: the entries of `H_1, ..., H_K` row-major, then the entries
/// of `a_1, ..., a_N`, one complex Gaussian (two stream outputs) per entry.
/// `h_{o,j} = a_j / l_ratio_j^2` (path-loss exponent 4).
pub fn generate_scenario(params: &GenerationParams) -> Result<Scenario> {
    let GenerationParams {
        k,
        n_t,
        n_r,
        ref pus,
        p_u,
        ref weights,
        sigma2,
        seed,
    } = *params;
    if k == 0 || n_t == 0 || n_r == 0 {
        return Err(Error::InvalidInput(format!(
            "dimensions must be positive, got K={k}, N_t={n_t}, N_r={n_r}"
        )));
    }
    for (j, pu) in pus.iter().enumerate() {
        if !(pu.l_ratio >= 1.0) {
            return Err(Error::InvalidInput(format!(
                "pu[{j}].l_ratio must be >= 1, got {}",
                pu.l_ratio
            )));
        }
    }
    let mut rng = CounterRng::new(seed);
    let channels = (0..k)
        .map(|_| ComplexMatrix::from_fn(n_r, n_t, |_, _| rng.next_cscg()))
        .collect();
    let pu_channels = pus
        .iter()
        .map(|pu| {
            let scale = (1.0 / pu.l_ratio).powi(2);
            (0..n_t).map(|_| rng.next_cscg() * scale).collect()
        })
        .collect();
    let scenario = Scenario {
        k,
        n_t,
        n_r,
        channels,
        pu_channels,
        l_ratios: pus.iter().map(|p| p.l_ratio).collect(),
        weights: weights.clone().unwrap_or_else(|| vec![1.0; k]),
        p_u,
        p_t: pus.iter().map(|p| p.p_t).collect(),
        sigma2,
        seed,
    };
    scenario.validate()?;
    Ok(scenario)
}

impl Scenario {
    pub fn num_pus(&self) -> usize {
        self.pu_channels.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.n_t == 0 || self.n_r == 0 {
            return Err(Error::InvalidInput("dimensions must be positive".into()));
        }
        if self.channels.len() != self.k {
            return Err(Error::DimensionMismatch(format!(
                "expected {} channel matrices, got {}",
                self.k,
                self.channels.len()
            )));
        }
        for (i, h) in self.channels.iter().enumerate() {
            if h.rows() != self.n_r || h.cols() != self.n_t {
                return Err(Error::DimensionMismatch(format!(
                    "channels.H[{i}] is {}x{}, expected {}x{}",
                    h.rows(),
                    h.cols(),
                    self.n_r,
                    self.n_t
                )));
            }
        }
        for (j, h) in self.pu_channels.iter().enumerate() {
            if h.len() != self.n_t {
                return Err(Error::DimensionMismatch(format!(
                    "channels.pu[{j}] has length {}, expected {}",
                    h.len(),
                    self.n_t
                )));
            }
        }
        if self.p_t.len() != self.pu_channels.len() || self.l_ratios.len() != self.pu_channels.len() {
            return Err(Error::DimensionMismatch(
                "PU thresholds, distance ratios and channels differ in count".into(),
            ));
        }
        if self.weights.len() != self.k {
            return Err(Error::DimensionMismatch(format!(
                "expected {} weights, got {}",
                self.k,
                self.weights.len()
            )));
        }
        if let Some(w) = self.weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput(format!("weights must be positive, got {w}")));
        }
        if !(self.p_u > 0.0 && self.p_u.is_finite()) {
            return Err(Error::InvalidInput(format!("P_u must be positive, got {}", self.p_u)));
        }
        if let Some(p) = self.p_t.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidInput(format!("P_t must be positive, got {p}")));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "sigma2 must be positive, got {}",
                self.sigma2
            )));
        }
        Ok(())
    }

    /// Same channels with the PU list removed.
    pub fn without_pus(&self) -> Scenario {
        Scenario {
            pu_channels: Vec::new(),
            l_ratios: Vec::new(),
            p_t: Vec::new(),
            ..self.clone()
        }
    }

    pub fn with_weights(&self, weights: Vec<f64>) -> Scenario {
        Scenario {
            weights,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> Value {
        let mat = |m: &ComplexMatrix| -> Value {
            Value::Array(
                (0..m.rows())
                    .map(|i| Value::Array((0..m.cols()).map(|j| pair(m.get(i, j))).collect()))
                    .collect(),
            )
        };
        let pus: Vec<Value> = self
            .p_t
            .iter()
            .zip(&self.l_ratios)
            .map(|(&p_t, &l)| json!({"l_ratio": l, "P_t": p_t, "P_t_dB": linear_to_db(p_t)}))
            .collect();
        json!({
            "K": self.k,
            "N_t": self.n_t,
            "N_r": self.n_r,
            "weights": self.weights,
            "P_u": self.p_u,
            "P_u_dB": linear_to_db(self.p_u),
            "pu": pus,
            "sigma2": self.sigma2,
            "seed": self.seed,
            "channels": {
                "H": self.channels.iter().map(mat).collect::<Vec<_>>(),
                "pu": self
                    .pu_channels
                    .iter()
                    .map(|h| Value::Array(h.iter().copied().map(pair).collect()))
                    .collect::<Vec<_>>(),
            },
        })
    }

    pub fn from_json(v: &Value) -> Result<Scenario> {
        let obj = v.as_object().ok_or_else(|| Error::Schema("$".into()))?;
        let k = req_usize(obj, "K")?;
        let n_t = req_usize(obj, "N_t")?;
        let n_r = req_usize(obj, "N_r")?;
        let weights = match obj.get("weights") {
            None => vec![1.0; k],
            Some(w) => num_array(w, "weights")?,
        };
        let p_u = power(obj, "P_u", "P_u")?;
        let sigma2 = match obj.get("sigma2") {
            None => 1.0,
            Some(s) => s.as_f64().ok_or_else(|| Error::Schema("sigma2".into()))?,
        };
        let seed = match obj.get("seed") {
            None => 0,
            Some(s) => s.as_u64().ok_or_else(|| Error::Schema("seed".into()))?,
        };
        let mut pus = Vec::new();
        if let Some(list) = obj.get("pu") {
            let list = list.as_array().ok_or_else(|| Error::Schema("pu".into()))?;
            for (j, item) in list.iter().enumerate() {
                let path = format!("pu[{j}]");
                let o = item.as_object().ok_or_else(|| Error::Schema(path.clone()))?;
                let l_ratio = match o.get("l_ratio") {
                    None => 1.0,
                    Some(l) => l.as_f64().ok_or_else(|| Error::Schema(format!("{path}.l_ratio")))?,
                };
                let p_t = power(o, "P_t", &format!("{path}.P_t"))?;
                pus.push(PuSpec { l_ratio, p_t });
            }
        }

        let scenario = match obj.get("channels") {
            Some(ch) => {
                let ch = ch.as_object().ok_or_else(|| Error::Schema("channels".into()))?;
                let h_list = ch
                    .get("H")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Schema("channels.H".into()))?;
                let channels = h_list
                    .iter()
                    .enumerate()
                    .map(|(i, m)| complex_matrix(m, &format!("channels.H[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                let pu_channels = match ch.get("pu") {
                    None => Vec::new(),
                    Some(list) => list
                        .as_array()
                        .ok_or_else(|| Error::Schema("channels.pu".into()))?
                        .iter()
                        .enumerate()
                        .map(|(j, h)| complex_vector(h, &format!("channels.pu[{j}]")))
                        .collect::<Result<Vec<_>>>()?,
                };
                if pu_channels.len() != pus.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "{} PU entries but {} explicit PU channels",
                        pus.len(),
                        pu_channels.len()
                    )));
                }
                Scenario {
                    k,
                    n_t,
                    n_r,
                    channels,
                    pu_channels,
                    l_ratios: pus.iter().map(|p| p.l_ratio).collect(),
                    weights,
                    p_u,
                    p_t: pus.iter().map(|p| p.p_t).collect(),
                    sigma2,
                    seed,
                }
            }
            None => generate_scenario(&GenerationParams {
                k,
                n_t,
                n_r,
                pus,
                p_u,
                weights: Some(weights),
                sigma2,
                seed,
            })?,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

fn pair(z: C64) -> Value {
    json!([z.re, z.im])
}

fn req_usize(obj: &Map<String, Value>, key: &str) -> Result<usize> {
    obj.get(key)
        .and_then(Value::as_u64)
        .map(|x| x as usize)
        .ok_or_else(|| Error::Schema(key.into()))
}

/// Linear `key` if present, otherwise `key_dB` converted; `path` names the
/// field in errors.
fn power(obj: &Map<String, Value>, key: &str, path: &str) -> Result<f64> {
    if let Some(v) = obj.get(key) {
        return v.as_f64().ok_or_else(|| Error::Schema(path.into()));
    }
    let db_key = format!("{key}_dB");
    match obj.get(&db_key) {
        Some(v) => v
            .as_f64()
            .map(db_to_linear)
            .ok_or_else(|| Error::Schema(format!("{path}_dB"))),
        None => Err(Error::Schema(path.into())),
    }
}

fn num_array(v: &Value, path: &str) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| Error::Schema(path.into()))?
        .iter()
        .enumerate()
        .map(|(i, x)| x.as_f64().ok_or_else(|| Error::Schema(format!("{path}[{i}]"))))
        .collect()
}

fn complex_entry(v: &Value, path: &str) -> Result<C64> {
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => match (re.as_f64(), im.as_f64()) {
            (Some(re), Some(im)) => Ok(C64::new(re, im)),
            _ => Err(Error::Schema(path.into())),
        },
        _ => Err(Error::Schema(path.into())),
    }
}

fn complex_vector(v: &Value, path: &str) -> Result<Vec<C64>> {
    v.as_array()
        .ok_or_else(|| Error::Schema(path.into()))?
        .iter()
        .enumerate()
        .map(|(i, z)| complex_entry(z, &format!("{path}[{i}]")))
        .collect()
}

fn complex_matrix(v: &Value, path: &str) -> Result<ComplexMatrix> {
    let rows = v.as_array().ok_or_else(|| Error::Schema(path.into()))?;
    let mut data = Vec::new();
    let mut cols = None;
    for (i, row) in rows.iter().enumerate() {
        let r = complex_vector(row, &format!("{path}[{i}]"))?;
        match cols {
            None => cols = Some(r.len()),
            Some(c) if c != r.len() => return Err(Error::DimensionMismatch(format!("{path} has ragged rows"))),
            _ => {}
        }
        data.extend(r);
    }
    ComplexMatrix::new(rows.len(), cols.unwrap_or(0), data)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text)?;
    Scenario::from_json(&v)
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(&scenario.to_json())?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Decoding order that sorts weights in nonincreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct UserOrdering {
    /// `pi[i]` is the (0-based) user at sorted position `i`.
    pub pi: Vec<usize>,
    /// `deltas[i] = w_{pi[i]} - w_{pi[i+1]}`, with a trailing zero weight.
    pub deltas: Vec<f64>,
}

impl UserOrdering {
    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    /// Weights in sorted order.
    pub fn sorted_weights(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut w: Vec<f64> = self
            .deltas
            .iter()
            .rev()
            .map(|d| {
                acc += d;
                acc
            })
            .collect();
        w.reverse();
        w
    }
}

/// Stable descending sort of the weights.
pub fn order_users(weights: &[f64]) -> UserOrdering {
    let mut pi: Vec<usize> = (0..weights.len()).collect();
    pi.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));
    let deltas = (0..pi.len())
        .map(|i| {
            let next = pi.get(i + 1).map_or(0.0, |&j| weights[j]);
            weights[pi[i]] - next
        })
        .collect();
    UserOrdering { pi, deltas }
}
