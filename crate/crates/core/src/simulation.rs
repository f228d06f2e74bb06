//! Synthetic judges and brute-force oracles.
//!
//! The generative process mirrors the inference model: each response's true
//! category is drawn from the prior, then every judge reports a category
//! drawn from its transition-matrix row. This makes the EM core testable
//! end-to-end without any LLM.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::levels::{fractional_split, ScoreLevels};
use crate::tensor::{ModelParams, ScoreTensor};

/// Ground-truth generator settings.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub num_queries: usize,
    pub num_responses: usize,
    pub levels: ScoreLevels,
    pub true_params: ModelParams,
    pub seed: u64,
    /// When set, each tensor entry is the mean of two sampled integer scores,
    /// mirroring how fractions arise from multi-window averaging.
    pub fractional: bool,
}

impl SyntheticSpec {
    /// Transition matrices with the given diagonal and the remaining mass
    /// spread uniformly off-diagonal; one matrix per judge.
    pub fn diagonal_params(k: usize, diagonals: &[f64]) -> Result<ModelParams> {
        let alpha = vec![1.0 / k as f64; k];
        let pis = diagonals
            .iter()
            .map(|&d| diagonal_matrix(k, d))
            .collect::<Result<Vec<_>>>()?;
        ModelParams::new(alpha, pis)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_queries == 0 || self.num_responses == 0 {
            return Err(Error::Config("empty synthetic spec".into()));
        }
        if self.true_params.k() != self.levels.k() {
            return Err(Error::Config(format!(
                "params have K={}, levels have K={}",
                self.true_params.k(),
                self.levels.k()
            )));
        }
        if self.true_params.num_judges() == 0 {
            return Err(Error::Config("at least one judge required".into()));
        }
        Ok(())
    }
}

pub fn diagonal_matrix(k: usize, diagonal: f64) -> Result<Vec<Vec<f64>>> {
    if !(0.0..=1.0).contains(&diagonal) {
        return Err(Error::Config(format!("diagonal {diagonal} outside [0, 1]")));
    }
    let off = if k > 1 { (1.0 - diagonal) / (k - 1) as f64 } else { 0.0 };
    Ok((0..k)
        .map(|m| {
            (0..k)
                .map(|n| if m == n { if k == 1 { 1.0 } else { diagonal } } else { off })
                .collect()
        })
        .collect())
}

/// Sample truths and the score tensor. Deterministic given the seed; each
/// (query, response) cell draws from its own seeded stream so parallel or
/// reordered sampling cannot change the output.
pub fn sample_synthetic(spec: &SyntheticSpec) -> Result<(Vec<Vec<usize>>, ScoreTensor)> {
    spec.validate()?;
    let num_judges = spec.true_params.num_judges();
    let mut truths = vec![vec![0usize; spec.num_responses]; spec.num_queries];
    let mut tensor = ScoreTensor::new_missing(
        spec.num_queries,
        spec.num_responses,
        num_judges,
        spec.levels.clone(),
    );
    for i in 0..spec.num_queries {
        for j in 0..spec.num_responses {
            let mut rng = cell_rng(spec.seed, i, j);
            let t = sample_categorical(&mut rng, spec.true_params.alpha());
            truths[i][j] = t;
            for jp in 0..num_judges {
                let row = &spec.true_params.pi(jp)[t];
                let y = if spec.fractional {
                    let a = spec.levels.value(sample_categorical(&mut rng, row));
                    let b = spec.levels.value(sample_categorical(&mut rng, row));
                    (a + b) / 2.0
                } else {
                    spec.levels.value(sample_categorical(&mut rng, row))
                };
                tensor.set(i, j, jp, y)?;
            }
        }
    }
    Ok((truths, tensor))
}

fn cell_rng(seed: u64, i: usize, j: usize) -> ChaCha8Rng {
    let mixed = seed
        ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ (j as u64).wrapping_mul(0xc2b2_ae3d_27d4_eb4f);
    ChaCha8Rng::seed_from_u64(mixed)
}

pub fn sample_categorical(rng: &mut impl Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}

/// Independent direct-Bayes posterior for one response, kept deliberately
/// naive (no log space): `alpha_k * prod_j' mixture-likelihood`, normalized.
/// Zero total mass falls back to alpha, matching the production E-step.
pub fn brute_force_posterior(
    scores: &[Option<f64>],
    params: &ModelParams,
    levels: &ScoreLevels,
) -> Result<Vec<f64>> {
    let k_n = params.k();
    let mut weights = Vec::with_capacity(k_n);
    for k in 0..k_n {
        let mut w = params.alpha()[k];
        for (jp, y) in scores.iter().enumerate() {
            let Some(y) = y else { continue };
            let split = fractional_split(*y, levels)?;
            let row = &params.pi(jp)[k];
            w *= split.conf_lower * row[split.lower] + split.conf_upper * row[split.upper];
        }
        weights.push(w);
    }
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return Ok(params.alpha().to_vec());
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Exhaustive grid search over the K=2 parameter space: the prior's first
/// entry and each judge's two diagonal entries, all on a uniform grid.
/// Certifies that EM reaches a likelihood near the global optimum.
pub fn grid_search_mle(tensor: &ScoreTensor, grid_step: f64) -> Result<(ModelParams, f64)> {
    if tensor.levels().k() != 2 {
        return Err(Error::Config("grid search supports K=2 only".into()));
    }
    if !(grid_step > 0.0 && grid_step <= 0.5) {
        return Err(Error::Config(format!("bad grid step {grid_step}")));
    }
    let steps = (1.0 / grid_step).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|s| s as f64 * grid_step).collect();
    let num_judges = tensor.num_judges();

    // Precompute splits once; rows are few by precondition.
    let rows: Vec<Vec<Option<(usize, usize, f64, f64)>>> = (0..tensor.num_queries())
        .flat_map(|i| (0..tensor.num_responses()).map(move |j| (i, j)))
        .map(|(i, j)| {
            tensor
                .judge_scores(i, j)
                .iter()
                .map(|y| {
                    y.map(|y| {
                        let s = fractional_split(y, tensor.levels()).unwrap();
                        (s.lower, s.upper, s.conf_lower, s.conf_upper)
                    })
                })
                .collect()
        })
        .collect();

    let mut best: Option<(Vec<f64>, Vec<[f64; 2]>, f64)> = None;
    let mut diag = vec![[0.0f64; 2]; num_judges];
    for &a1 in &grid {
        let alpha = [a1, 1.0 - a1];
        search_judges(&grid, &rows, &alpha, &mut diag, 0, &mut best);
    }
    let (alpha, diags, ll) = best.expect("non-empty grid");
    let pis = diags
        .iter()
        .map(|&[p11, p22]| vec![vec![p11, 1.0 - p11], vec![1.0 - p22, p22]])
        .collect();
    Ok((ModelParams::new(alpha, pis)?, ll))
}

fn search_judges(
    grid: &[f64],
    rows: &[Vec<Option<(usize, usize, f64, f64)>>],
    alpha: &[f64; 2],
    diag: &mut Vec<[f64; 2]>,
    judge: usize,
    best: &mut Option<(Vec<f64>, Vec<[f64; 2]>, f64)>,
) {
    if judge == diag.len() {
        let ll = grid_log_likelihood(rows, alpha, diag);
        if best.as_ref().map_or(true, |(_, _, b)| ll > *b) {
            *best = Some((alpha.to_vec(), diag.clone(), ll));
        }
        return;
    }
    for &p11 in grid {
        for &p22 in grid {
            diag[judge] = [p11, p22];
            search_judges(grid, rows, alpha, diag, judge + 1, best);
        }
    }
}

fn grid_log_likelihood(
    rows: &[Vec<Option<(usize, usize, f64, f64)>>],
    alpha: &[f64; 2],
    diag: &[[f64; 2]],
) -> f64 {
    let mut ll = 0.0;
    for row in rows {
        let mut mass = 0.0;
        for k in 0..2 {
            let mut w = alpha[k];
            for (jp, split) in row.iter().enumerate() {
                let Some((lower, upper, cl, cu)) = split else { continue };
                let [p11, p22] = diag[jp];
                let pi_row = if k == 0 { [p11, 1.0 - p11] } else { [1.0 - p22, p22] };
                w *= cl * pi_row[*lower] + cu * pi_row[*upper];
            }
            mass += w;
        }
        ll += mass.ln();
    }
    ll
}
