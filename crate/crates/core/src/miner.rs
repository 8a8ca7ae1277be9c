//! Fuzzy C-means clustering over (speed, sender gain, receiver gain, idle
//! factor) samples, and projection of cluster centers onto a rule base.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fuzzy::{FisDefinition, Rule};

/// Coordinates per sample: three gate inputs and the output.
pub const DIM: usize = 4;

pub type Point = [f64; DIM];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MinerError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("row {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("{k} clusters requested from {rows} rows")]
    TooFewRows { rows: usize, k: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("definition has {inputs} inputs; cluster centers carry {expected}")]
    DimensionMismatch { inputs: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<Point>,
}

impl Dataset {
    pub fn new(rows: Vec<Point>) -> Result<Self, MinerError> {
        if let Some(i) = rows.iter().position(|r| !r.iter().all(|v| v.is_finite())) {
            return Err(MinerError::NonFinite(i));
        }
        Ok(Dataset { rows })
    }

    pub fn rows(&self) -> &[Point] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FcmParams {
    pub clusters: usize,
    /// Fuzzifier, > 1.
    pub fuzzifier: f64,
    /// Stop once no center moves farther than this.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for FcmParams {
    fn default() -> Self {
        FcmParams { clusters: 2, fuzzifier: 2.0, tolerance: 1e-6, max_iterations: 300, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcmResult {
    pub centers: Vec<Point>,
    /// `memberships[i][k]`: degree of row `i` in cluster `k`.
    pub memberships: Vec<Vec<f64>>,
    pub objective: f64,
    pub iterations: usize,
    /// Objective after every center update, then once more for the final
    /// membership update.
    pub objective_history: Vec<f64>,
}

/// Snapshot handed to the observer of [`fcm_cluster_observed`].
pub struct FcmIteration<'a> {
    pub iteration: usize,
    pub centers: &'a [Point],
    pub memberships: &'a [Vec<f64>],
    pub objective: f64,
}

fn dist2(a: &Point, b: &Point) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Membership row of `x` against `centers`. A row that coincides with one
/// or more centers belongs to them alone, split evenly.
fn membership_row(x: &Point, centers: &[Point], fuzzifier: f64, out: &mut [f64]) {
    let d2: Vec<f64> = centers.iter().map(|c| dist2(x, c)).collect();
    let zeros = d2.iter().filter(|&&d| d == 0.0).count();
    if zeros > 0 {
        for (u, &d) in out.iter_mut().zip(&d2) {
            *u = if d == 0.0 { 1.0 / zeros as f64 } else { 0.0 };
        }
        return;
    }
    // u_k = 1 / sum_j (d_k / d_j)^(2/(m-1)), written on squared distances.
    let p = 1.0 / (fuzzifier - 1.0);
    for (k, u) in out.iter_mut().enumerate() {
        let s: f64 = d2.iter().map(|&dj| libm::pow(d2[k] / dj, p)).sum();
        *u = 1.0 / s;
    }
}

fn objective(rows: &[Point], centers: &[Point], u: &[Vec<f64>], fuzzifier: f64) -> f64 {
    rows.iter()
        .zip(u)
        .map(|(x, ur)| centers.iter().zip(ur).map(|(c, &uk)| libm::pow(uk, fuzzifier) * dist2(x, c)).sum::<f64>())
        .sum()
}

pub fn fcm_cluster(data: &Dataset, params: &FcmParams) -> Result<FcmResult, MinerError> {
    fcm_cluster_observed(data, params, |_| {})
}

/// Alternating optimization: memberships from centers, then centers as the
/// `u^m`-weighted mean. `observe` sees every iteration.
pub fn fcm_cluster_observed(
    data: &Dataset,
    params: &FcmParams,
    mut observe: impl FnMut(&FcmIteration<'_>),
) -> Result<FcmResult, MinerError> {
    let FcmParams { clusters: k, fuzzifier: m, tolerance, max_iterations, seed } = *params;
    if k == 0 {
        return Err(MinerError::InvalidParameter("cluster count must be at least 1"));
    }
    if !(m > 1.0 && m.is_finite()) {
        return Err(MinerError::InvalidParameter("fuzzifier must exceed 1"));
    }
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(MinerError::InvalidParameter("tolerance must be positive"));
    }
    let rows = data.rows();
    if rows.is_empty() {
        return Err(MinerError::EmptyDataset);
    }
    if rows.len() < k {
        return Err(MinerError::TooFewRows { rows: rows.len(), k });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Point> = rand::seq::index::sample(&mut rng, rows.len(), k).iter().map(|i| rows[i]).collect();
    let mut u = vec![vec![0.0; k]; rows.len()];
    let mut history = Vec::new();
    let mut iterations = 0;

    while iterations < max_iterations {
        iterations += 1;
        for (x, ur) in rows.iter().zip(u.iter_mut()) {
            membership_row(x, &centers, m, ur);
        }
        let mut next = centers.clone();
        for (c, slot) in next.iter_mut().enumerate() {
            let mut acc = [0.0; DIM];
            let mut w = 0.0;
            for (x, ur) in rows.iter().zip(&u) {
                let wk = libm::pow(ur[c], m);
                w += wk;
                for (a, xv) in acc.iter_mut().zip(x) {
                    *a += wk * xv;
                }
            }
            // A cluster nobody belongs to keeps its place.
            if w > 0.0 {
                for a in acc.iter_mut() {
                    *a /= w;
                }
                *slot = acc;
            }
        }
        let shift = centers.iter().zip(&next).map(|(a, b)| libm::sqrt(dist2(a, b))).fold(0.0, f64::max);
        centers = next;
        let j = objective(rows, &centers, &u, m);
        history.push(j);
        observe(&FcmIteration { iteration: iterations, centers: &centers, memberships: &u, objective: j });
        if shift < tolerance {
            break;
        }
    }

    for (x, ur) in rows.iter().zip(u.iter_mut()) {
        membership_row(x, &centers, m, ur);
    }
    let j = objective(rows, &centers, &u, m);
    history.push(j);
    Ok(FcmResult { centers, memberships: u, objective: j, iterations, objective_history: history })
}

/// Maps every center to the rule whose terms best fit its coordinates, then
/// merges centers with identical antecedents. A merged rule takes the
/// majority consequent; ties go to the lower-ranked term. Output is sorted
/// by antecedent, so it does not depend on center order.
pub fn extract_rules(centers: &[Point], fis: &FisDefinition) -> Result<Vec<Rule>, MinerError> {
    if fis.inputs.len() + 1 != DIM {
        return Err(MinerError::DimensionMismatch { inputs: fis.inputs.len(), expected: DIM - 1 });
    }
    let mut votes: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for c in centers {
        let antecedent: Vec<usize> = fis.inputs.iter().zip(c).map(|(var, &x)| var.best_term(var.clamp(x))).collect();
        let consequent = fis.output.best_term(fis.output.clamp(c[DIM - 1]));
        votes.entry(antecedent).or_insert_with(|| vec![0; fis.output.terms.len()])[consequent] += 1;
    }
    Ok(votes
        .into_iter()
        .map(|(antecedent, tally)| {
            let mut consequent = 0;
            for (i, &n) in tally.iter().enumerate() {
                if n > tally[consequent] {
                    consequent = i;
                }
            }
            Rule { antecedent, consequent }
        })
        .collect())
}
