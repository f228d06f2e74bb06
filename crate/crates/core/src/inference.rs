//! Score aggregation: plain averaging, and the reliability-weighted variant
//! that fits a categorical prior plus per-judge transition matrices by EM.
//!
//! All operations are pure and deterministic; reductions use a fixed
//! summation order so reruns are bit-identical.

use crate::error::{Error, Result};
use crate::levels::{fractional_split, FractionalSplit, ScoreLevels};
use crate::tensor::{ModelParams, Posterior, ScoreTensor};

/// EM loop settings.
#[derive(Debug, Clone)]
pub struct EmConfig {
    pub max_iters: usize,
    /// Convergence threshold on the max-abs change across alpha and all
    /// transition-matrix entries between iterations.
    pub tol: f64,
    /// Pseudo-count added to every transition-matrix cell in the M-step.
    /// Zero disables smoothing; an unobserved truth category then raises a
    /// degenerate-row error.
    pub smoothing: f64,
    /// Record the observed-data log-likelihood each iteration.
    pub track_likelihood: bool,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-6,
            smoothing: 1e-6,
            track_likelihood: false,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tol must be positive".into()));
        }
        if self.smoothing < 0.0 {
            return Err(Error::Config("smoothing must be non-negative".into()));
        }
        Ok(())
    }
}

/// Per-run EM diagnostics.
#[derive(Debug, Clone, Default)]
pub struct EmTrace {
    /// Observed-data log-likelihood after each parameter update, when tracked.
    pub log_likelihood: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
}

/// Mean of the non-missing judge scores per response.
/// A response with no scores at all is an inference error.
pub fn average_aggregate(tensor: &ScoreTensor) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(tensor.num_queries());
    for i in 0..tensor.num_queries() {
        let mut row = Vec::with_capacity(tensor.num_responses());
        for j in 0..tensor.num_responses() {
            row.push(mean_score(tensor, i, j)?);
        }
        out.push(row);
    }
    Ok(out)
}

fn mean_score(tensor: &ScoreTensor, i: usize, j: usize) -> Result<f64> {
    let present: Vec<f64> = tensor.judge_scores(i, j).iter().flatten().copied().collect();
    if present.is_empty() {
        return Err(Error::Inference(format!(
            "response ({i}, {j}) has no judge scores"
        )));
    }
    Ok(present.iter().sum::<f64>() / present.len() as f64)
}

/// Initialize the posterior from the per-response mean score: the two-point
/// distribution given by the fractional split of the mean.
pub fn init_posterior(tensor: &ScoreTensor) -> Result<Posterior> {
    let k = tensor.levels().k();
    let mut rows = vec![0.0; tensor.num_queries() * tensor.num_responses() * k];
    for i in 0..tensor.num_queries() {
        for j in 0..tensor.num_responses() {
            let mean = mean_score(tensor, i, j)?;
            let split = fractional_split(mean, tensor.levels())?;
            let base = (i * tensor.num_responses() + j) * k;
            rows[base + split.lower] += split.conf_lower;
            rows[base + split.upper] += split.conf_upper;
        }
    }
    Posterior::new(tensor.num_queries(), tensor.num_responses(), k, rows)
}

/// Splits of every non-missing entry, computed once per EM run.
struct SplitTensor {
    splits: Vec<Option<FractionalSplit>>,
    num_responses: usize,
    num_judges: usize,
}

impl SplitTensor {
    fn build(tensor: &ScoreTensor) -> Result<Self> {
        let mut splits =
            Vec::with_capacity(tensor.num_queries() * tensor.num_responses() * tensor.num_judges());
        for i in 0..tensor.num_queries() {
            for j in 0..tensor.num_responses() {
                for y in tensor.judge_scores(i, j) {
                    splits.push(match y {
                        Some(y) => Some(fractional_split(*y, tensor.levels())?),
                        None => None,
                    });
                }
            }
        }
        Ok(Self {
            splits,
            num_responses: tensor.num_responses(),
            num_judges: tensor.num_judges(),
        })
    }

    fn get(&self, i: usize, j: usize, judge: usize) -> Option<&FractionalSplit> {
        self.splits[(i * self.num_responses + j) * self.num_judges + judge].as_ref()
    }
}

/// Mixture likelihood of one observed (possibly fractional) score under one
/// truth-category row of a transition matrix.
fn emission(pi_row: &[f64], split: &FractionalSplit) -> f64 {
    split.conf_lower * pi_row[split.lower] + split.conf_upper * pi_row[split.upper]
}

/// Posterior update. Per response, in log space with max-subtraction:
/// `q(k) ∝ alpha_k * prod_j' emission(pi^{j'}[k], split)` over non-missing
/// judges. A row with zero total mass falls back to alpha.
pub fn e_step(tensor: &ScoreTensor, params: &ModelParams) -> Result<Posterior> {
    let splits = SplitTensor::build(tensor)?;
    e_step_inner(tensor, params, &splits)
}

fn e_step_inner(
    tensor: &ScoreTensor,
    params: &ModelParams,
    splits: &SplitTensor,
) -> Result<Posterior> {
    let k_n = params.k();
    if k_n != tensor.levels().k() {
        return Err(Error::Input(format!(
            "params have K={k_n}, tensor has K={}",
            tensor.levels().k()
        )));
    }
    let mut rows = vec![0.0; tensor.num_queries() * tensor.num_responses() * k_n];
    let mut log_row = vec![0.0; k_n];
    for i in 0..tensor.num_queries() {
        for j in 0..tensor.num_responses() {
            for (k, lp) in log_row.iter_mut().enumerate() {
                *lp = params.alpha()[k].ln();
                for jp in 0..tensor.num_judges() {
                    if let Some(split) = splits.get(i, j, jp) {
                        *lp += emission(&params.pi(jp)[k], split).ln();
                    }
                }
            }
            let base = (i * tensor.num_responses() + j) * k_n;
            let max = log_row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if max == f64::NEG_INFINITY {
                // No category has support: fall back to the prior.
                rows[base..base + k_n].copy_from_slice(params.alpha());
                continue;
            }
            let mut total = 0.0;
            for (k, lp) in log_row.iter().enumerate() {
                let p = (lp - max).exp();
                rows[base + k] = p;
                total += p;
            }
            for r in &mut rows[base..base + k_n] {
                *r /= total;
            }
        }
    }
    Posterior::new(tensor.num_queries(), tensor.num_responses(), k_n, rows)
}

/// Closed-form prior update: `alpha_k = sum_ij q(k) / (I*J)`.
pub fn m_step_alpha(posterior: &Posterior) -> Vec<f64> {
    let k_n = posterior.k();
    let mut alpha = vec![0.0; k_n];
    for i in 0..posterior.num_queries() {
        for j in 0..posterior.num_responses() {
            for (a, q) in alpha.iter_mut().zip(posterior.row(i, j)) {
                *a += q;
            }
        }
    }
    let total = (posterior.num_queries() * posterior.num_responses()) as f64;
    for a in &mut alpha {
        *a /= total;
    }
    alpha
}

/// Closed-form transition-matrix update with pseudo-count smoothing:
/// `pi[m][n] = (eps + sum q(m) * psi(y, n)) / (K*eps + sum q(m))`,
/// sums over the non-missing entries of each judge. With `eps == 0` an
/// unobserved truth category is a degenerate-row error.
pub fn m_step_pi(
    posterior: &Posterior,
    tensor: &ScoreTensor,
    smoothing: f64,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let splits = SplitTensor::build(tensor)?;
    m_step_pi_inner(posterior, tensor, smoothing, &splits)
}

fn m_step_pi_inner(
    posterior: &Posterior,
    tensor: &ScoreTensor,
    smoothing: f64,
    splits: &SplitTensor,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let k_n = posterior.k();
    let mut pis = Vec::with_capacity(tensor.num_judges());
    for jp in 0..tensor.num_judges() {
        let mut numer = vec![vec![smoothing; k_n]; k_n];
        let mut denom = vec![k_n as f64 * smoothing; k_n];
        for i in 0..tensor.num_queries() {
            for j in 0..tensor.num_responses() {
                let Some(split) = splits.get(i, j, jp) else {
                    continue;
                };
                let q = posterior.row(i, j);
                for m in 0..k_n {
                    numer[m][split.lower] += q[m] * split.conf_lower;
                    numer[m][split.upper] += q[m] * split.conf_upper;
                    denom[m] += q[m];
                }
            }
        }
        let mut pi = Vec::with_capacity(k_n);
        for (m, (row, d)) in numer.into_iter().zip(&denom).enumerate() {
            if *d == 0.0 {
                return Err(Error::Inference(format!(
                    "degenerate row: judge {jp} truth category {m} has no posterior mass and smoothing is 0"
                )));
            }
            pi.push(row.into_iter().map(|v| v / d).collect::<Vec<f64>>());
        }
        pis.push(pi);
    }
    Ok(pis)
}

/// Observed-data log-likelihood. `-inf` is returned (not hidden) when some
/// response has zero mass under every category.
pub fn log_likelihood(tensor: &ScoreTensor, params: &ModelParams) -> Result<f64> {
    let splits = SplitTensor::build(tensor)?;
    log_likelihood_inner(tensor, params, &splits)
}

fn log_likelihood_inner(
    tensor: &ScoreTensor,
    params: &ModelParams,
    splits: &SplitTensor,
) -> Result<f64> {
    let k_n = params.k();
    let mut total = 0.0;
    let mut log_row = vec![0.0; k_n];
    for i in 0..tensor.num_queries() {
        for j in 0..tensor.num_responses() {
            for (k, lp) in log_row.iter_mut().enumerate() {
                *lp = params.alpha()[k].ln();
                for jp in 0..tensor.num_judges() {
                    if let Some(split) = splits.get(i, j, jp) {
                        *lp += emission(&params.pi(jp)[k], split).ln();
                    }
                }
            }
            total += log_sum_exp(&log_row);
        }
    }
    Ok(total)
}

fn log_sum_exp(log_values: &[f64]) -> f64 {
    let max = log_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + log_values.iter().map(|lp| (lp - max).exp()).sum::<f64>().ln()
}

/// Fit the weighted aggregation model.
///
/// Follows the published loop order: initialize the posterior from score
/// averages, then iterate (update alpha, update transition matrices, update
/// posterior) until the max-abs parameter change drops below `tol` or
/// `max_iters` is reached.
pub fn run_em(tensor: &ScoreTensor, cfg: &EmConfig) -> Result<(Posterior, ModelParams, EmTrace)> {
    cfg.validate()?;
    let splits = SplitTensor::build(tensor)?;
    let mut posterior = init_posterior(tensor)?;
    let mut trace = EmTrace::default();
    let mut prev: Option<ModelParams> = None;
    let mut params = None;
    for iter in 0..cfg.max_iters {
        let alpha = m_step_alpha(&posterior);
        let pis = m_step_pi_inner(&posterior, tensor, cfg.smoothing, &splits)?;
        let current = ModelParams::new(alpha, pis)?;
        posterior = e_step_inner(tensor, &current, &splits)?;
        if cfg.track_likelihood {
            trace
                .log_likelihood
                .push(log_likelihood_inner(tensor, &current, &splits)?);
        }
        trace.iterations_run = iter + 1;
        let delta = prev.as_ref().map(|p| param_delta(p, &current));
        prev = Some(current);
        if let Some(delta) = delta {
            if delta < cfg.tol {
                trace.converged = true;
                params = prev.take();
                break;
            }
        }
    }
    let params = params.or(prev).expect("max_iters >= 1");
    Ok((posterior, params, trace))
}

/// Max-abs change across alpha and all transition-matrix entries.
pub fn param_delta(a: &ModelParams, b: &ModelParams) -> f64 {
    let mut delta: f64 = 0.0;
    for (x, y) in a.alpha().iter().zip(b.alpha()) {
        delta = delta.max((x - y).abs());
    }
    for (pa, pb) in a.pis().iter().zip(b.pis()) {
        for (ra, rb) in pa.iter().zip(pb) {
            for (x, y) in ra.iter().zip(rb) {
                delta = delta.max((x - y).abs());
            }
        }
    }
    delta
}

/// Expected score per response: `S[i][j] = sum_k q(k) * s_k`.
pub fn final_scores(posterior: &Posterior, levels: &ScoreLevels) -> Vec<Vec<f64>> {
    (0..posterior.num_queries())
        .map(|i| {
            (0..posterior.num_responses())
                .map(|j| {
                    posterior
                        .row(i, j)
                        .iter()
                        .zip(levels.values())
                        .map(|(q, s)| q * s)
                        .sum()
                })
                .collect()
        })
        .collect()
}
