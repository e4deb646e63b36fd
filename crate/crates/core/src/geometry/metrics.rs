use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::decoder::{DecoderConfig, LinearDecoder};
use crate::error::{contract, Error, Result};
use crate::kernels::cka_features;
use crate::linalg::{cosine, Matrix, Rng};
use crate::tasks::{random_balanced_row, TaskSpec};

/// A metric value plus any contexts that had to be skipped.
#[derive(Clone, Debug, PartialEq)]
pub struct Scored {
    pub value: f64,
    pub warnings: Vec<String>,
}

/// Target and input alignment of a representation `z` (d × n) against the
/// labels (k × n) and inputs (N × n) of the same samples.
pub fn alignment_pair(z: &Matrix, labels: &Matrix, x: &Matrix) -> Result<(f64, f64)> {
    let target = cka_features(z, labels)?;
    let input = cka_features(z, x)?;
    Ok((target, input))
}

type ContextKey = Vec<i8>;

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else {
        -1
    }
}

/// Key of the joint setting of every factor other than `i`.
fn context_key(factors: &Matrix, col: usize, i: usize) -> ContextKey {
    (0..factors.rows()).filter(|&r| r != i).map(|r| sign(factors[(r, col)])).collect()
}

/// Condition indices grouped by context, each split into (negative, positive) members.
fn group_by_context(factors: &Matrix, i: usize) -> BTreeMap<ContextKey, (Vec<usize>, Vec<usize>)> {
    let mut groups: BTreeMap<ContextKey, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for col in 0..factors.cols() {
        let entry = groups.entry(context_key(factors, col, i)).or_default();
        if factors[(i, col)] > 0.0 {
            entry.1.push(col);
        } else {
            entry.0.push(col);
        }
    }
    groups
}

/// Number of contexts for variable `i` in which both of its values occur.
pub fn usable_contexts(factors: &Matrix, i: usize) -> usize {
    group_by_context(factors, i).values().filter(|(neg, pos)| !neg.is_empty() && !pos.is_empty()).count()
}

fn mean_of_columns(m: &Matrix, cols: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; m.rows()];
    for &c in cols {
        for (r, o) in out.iter_mut().enumerate() {
            *o += m[(r, c)];
        }
    }
    out.iter_mut().for_each(|v| *v /= cols.len() as f64);
    out
}

fn mean_pairwise_cosine(vectors: &[Vec<f64>], warnings: &mut Vec<String>) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0usize;
    for a in 0..vectors.len() {
        for b in (a + 1)..vectors.len() {
            match cosine(&vectors[a], &vectors[b]) {
                Some(c) => total += c,
                None => warnings.push("zero coding vector; pair counted as cosine 0".into()),
            }
            pairs += 1;
        }
    }
    total / pairs as f64
}

/// Parallelism score of variable `i`.
///
/// `means` is d × C (one representation mean per condition) and `factors`
/// is m × C (±1). For every setting of the other factors, the coding vector
/// is the pooled mean at +1 minus the pooled mean at −1; the score is the
/// average pairwise cosine of those vectors.
pub fn parallelism_score(means: &Matrix, factors: &Matrix, i: usize) -> Result<Scored> {
    check_factor_args(means.cols(), factors, i)?;
    let mut warnings = Vec::new();
    let mut coding = Vec::new();
    for (key, (neg, pos)) in group_by_context(factors, i) {
        if neg.is_empty() || pos.is_empty() {
            warnings.push(format!("context {key:?} lacks one value of variable {i}; skipped"));
            continue;
        }
        let plus = mean_of_columns(means, &pos);
        let minus = mean_of_columns(means, &neg);
        coding.push(plus.iter().zip(&minus).map(|(a, b)| a - b).collect::<Vec<_>>());
    }
    if coding.len() < 2 {
        return Err(Error::UndefinedMetric(format!(
            "parallelism of variable {i} needs at least 2 contexts, found {}",
            coding.len()
        )));
    }
    let value = mean_pairwise_cosine(&coding, &mut warnings);
    Ok(Scored { value, warnings })
}

/// Parallelism of a single dichotomy without other factors: every one-to-one
/// pairing of negative with positive conditions gives a set of coding
/// vectors; the score is the best pairing's average pairwise cosine.
///
/// Pairings are enumerated exhaustively when there are at most `max_pairings`,
/// otherwise `max_pairings` random pairings are drawn.
pub fn parallelism_by_pairings(
    means: &Matrix,
    assignment: &[f64],
    max_pairings: usize,
    rng: &mut Rng,
) -> Result<Scored> {
    if means.cols() != assignment.len() {
        return Err(contract("one assignment entry per condition is required"));
    }
    let neg: Vec<usize> = (0..assignment.len()).filter(|&c| assignment[c] <= 0.0).collect();
    let pos: Vec<usize> = (0..assignment.len()).filter(|&c| assignment[c] > 0.0).collect();
    if neg.len() != pos.len() || neg.len() < 2 {
        return Err(Error::UndefinedMetric(
            "pairing parallelism needs a balanced dichotomy with at least 2 conditions per side".into(),
        ));
    }
    let mut warnings = Vec::new();
    let score = |perm: &[usize], warnings: &mut Vec<String>| {
        let vecs: Vec<Vec<f64>> = neg
            .iter()
            .zip(perm)
            .map(|(&a, &pi)| {
                let b = pos[pi];
                (0..means.rows()).map(|r| means[(r, b)] - means[(r, a)]).collect()
            })
            .collect();
        mean_pairwise_cosine(&vecs, warnings)
    };
    let m = neg.len();
    let mut best = f64::NEG_INFINITY;
    if factorial_at_most(m, max_pairings) {
        for perm in permutations(m) {
            best = best.max(score(&perm, &mut warnings));
        }
    } else {
        for _ in 0..max_pairings {
            let mut perm: Vec<usize> = (0..m).collect();
            rng.shuffle(&mut perm);
            best = best.max(score(&perm, &mut warnings));
        }
    }
    Ok(Scored { value: best, warnings })
}

fn factorial_at_most(m: usize, cap: usize) -> bool {
    let mut f: usize = 1;
    for i in 2..=m {
        f = match f.checked_mul(i) {
            Some(v) => v,
            None => return false,
        };
        if f > cap {
            return false;
        }
    }
    true
}

/// All permutations of 0..m in lexicographic order.
fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..m).collect();
    loop {
        out.push(current.clone());
        // Next lexicographic permutation.
        let Some(i) = (0..m.saturating_sub(1)).rev().find(|&i| current[i] < current[i + 1]) else {
            break;
        };
        let j = (i + 1..m).rev().find(|&j| current[j] > current[i]).unwrap();
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    out
}

fn check_factor_args(n_cols: usize, factors: &Matrix, i: usize) -> Result<()> {
    if factors.cols() != n_cols {
        return Err(contract(format!("{} factor columns for {} conditions", factors.cols(), n_cols)));
    }
    if i >= factors.rows() {
        return Err(contract(format!("variable {i} out of range for {} factors", factors.rows())));
    }
    Ok(())
}

/// Cross-condition generalization of variable `i`.
///
/// `z` is d × n samples and `factors` m × n gives every sample's factor
/// values. A decoder fit on one context's samples is scored on each other
/// context; the result averages over training contexts (at most
/// `max_contexts` of them, in sorted key order, when given).
pub fn ccgp(
    z: &Matrix,
    factors: &Matrix,
    i: usize,
    cfg: &DecoderConfig,
    max_contexts: Option<usize>,
) -> Result<Scored> {
    check_factor_args(z.cols(), factors, i)?;
    let mut warnings = Vec::new();
    let mut contexts: Vec<(Vec<usize>, Vec<f64>)> = Vec::new();
    for (key, (neg, pos)) in group_by_context(factors, i) {
        if neg.is_empty() || pos.is_empty() {
            warnings.push(format!("context {key:?} lacks one value of variable {i}; skipped"));
            continue;
        }
        let mut idx = neg.clone();
        idx.extend(&pos);
        idx.sort_unstable();
        let y = idx.iter().map(|&c| factors[(i, c)]).collect();
        contexts.push((idx, y));
    }
    if contexts.len() < 2 {
        return Err(Error::UndefinedMetric(format!(
            "ccgp of variable {i} needs at least 2 contexts, found {}",
            contexts.len()
        )));
    }
    let n_train = max_contexts.map_or(contexts.len(), |m| m.clamp(1, contexts.len()));
    let held_out: Vec<Matrix> = contexts.iter().map(|(idx, _)| z.select_cols(idx)).collect();
    let mut total = 0.0;
    for t in 0..n_train {
        let decoder = LinearDecoder::fit(&held_out[t], &contexts[t].1, cfg)?;
        let mut acc = 0.0;
        for (o, (_, y)) in contexts.iter().enumerate() {
            if o != t {
                acc += decoder.accuracy(&held_out[o], y);
            }
        }
        total += acc / (contexts.len() - 1) as f64;
    }
    Ok(Scored { value: total / n_train as f64, warnings })
}

/// Cross-condition generalization of a single dichotomy: fit on one
/// condition from each side, test on all remaining conditions, averaged
/// over such training pairs (all of them, or `max_pairs` random ones).
pub fn ccgp_by_holdout(
    z: &Matrix,
    condition: &[usize],
    assignment: &[f64],
    cfg: &DecoderConfig,
    max_pairs: usize,
    rng: &mut Rng,
) -> Result<Scored> {
    if z.cols() != condition.len() {
        return Err(contract("one condition id per sample is required"));
    }
    let neg: Vec<usize> = (0..assignment.len()).filter(|&c| assignment[c] <= 0.0).collect();
    let pos: Vec<usize> = (0..assignment.len()).filter(|&c| assignment[c] > 0.0).collect();
    if neg.len() < 2 || pos.len() < 2 {
        return Err(Error::UndefinedMetric("holdout ccgp needs two conditions per side".into()));
    }
    let mut pairs: Vec<(usize, usize)> = neg.iter().flat_map(|&a| pos.iter().map(move |&b| (a, b))).collect();
    if pairs.len() > max_pairs {
        rng.shuffle(&mut pairs);
        pairs.truncate(max_pairs);
        pairs.sort_unstable();
    }
    let label = |s: usize| assignment[condition[s]];
    let mut total = 0.0;
    for &(a, b) in &pairs {
        let train_idx: Vec<usize> = (0..condition.len()).filter(|&s| condition[s] == a || condition[s] == b).collect();
        let test_idx: Vec<usize> = (0..condition.len()).filter(|&s| condition[s] != a && condition[s] != b).collect();
        let y_train: Vec<f64> = train_idx.iter().map(|&s| label(s)).collect();
        let y_test: Vec<f64> = test_idx.iter().map(|&s| label(s)).collect();
        let decoder = LinearDecoder::fit(&z.select_cols(&train_idx), &y_train, cfg)?;
        total += decoder.accuracy(&z.select_cols(&test_idx), &y_test);
    }
    Ok(Scored { value: total / pairs.len() as f64, warnings: Vec::new() })
}

/// A balanced ±1 labelling of the clusters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dichotomy {
    pub assignment: Vec<f64>,
    pub trained: bool,
}

impl Dichotomy {
    /// Same partition regardless of which side is called positive.
    pub fn same_partition(&self, other: &[f64]) -> bool {
        self.assignment == other || self.assignment.iter().zip(other).all(|(a, b)| *a == -b)
    }
}

/// Fits on `z_train` and reports accuracy on `z_test`; samples are labelled
/// through their cluster ids.
pub fn decode_dichotomy(
    z_train: &Matrix,
    train_clusters: &[usize],
    z_test: &Matrix,
    test_clusters: &[usize],
    dichotomy: &Dichotomy,
    cfg: &DecoderConfig,
) -> Result<f64> {
    let y_train: Vec<f64> = train_clusters.iter().map(|&c| dichotomy.assignment[c]).collect();
    let y_test: Vec<f64> = test_clusters.iter().map(|&c| dichotomy.assignment[c]).collect();
    let decoder = LinearDecoder::fit(z_train, &y_train, cfg)?;
    Ok(decoder.accuracy(z_test, &y_test))
}

/// The trained label rows plus untrained balanced dichotomies: all of them
/// when there are at most `max_count`, otherwise `max_count` random distinct ones.
pub fn enumerate_dichotomies(task: &TaskSpec, max_count: usize, rng: &mut Rng) -> Result<Vec<Dichotomy>> {
    let p = task.n_clusters();
    if p % 2 != 0 || p < 2 {
        return Err(contract(format!("dichotomies need an even cluster count, got {p}")));
    }
    let mut out: Vec<Dichotomy> = (0..task.n_outputs())
        .map(|r| Dichotomy { assignment: task.labels.row(r).to_vec(), trained: true })
        .collect();
    let is_new = |out: &[Dichotomy], a: &[f64]| !out.iter().any(|d| d.same_partition(a));
    let total = balanced_partition_count(p);
    if total.is_some_and(|t| t <= max_count as u128) {
        // Canonical form: cluster 0 on the negative side.
        for mask in 0u64..(1u64 << (p - 1)) {
            if mask.count_ones() as usize != p / 2 {
                continue;
            }
            let a: Vec<f64> = (0..p).map(|c| if c > 0 && (mask >> (c - 1)) & 1 == 1 { 1.0 } else { -1.0 }).collect();
            if is_new(&out, &a) {
                out.push(Dichotomy { assignment: a, trained: false });
            }
        }
    } else {
        let mut attempts = 0;
        let target = out.len() + max_count;
        while out.len() < target && attempts < 100 * max_count + 1000 {
            attempts += 1;
            let mut a = random_balanced_row(p, rng);
            if a[0] > 0.0 {
                a.iter_mut().for_each(|v| *v = -*v);
            }
            if is_new(&out, &a) {
                out.push(Dichotomy { assignment: a, trained: false });
            }
        }
    }
    Ok(out)
}

/// C(P, P/2)/2, the number of distinct balanced partitions.
fn balanced_partition_count(p: usize) -> Option<u128> {
    let mut c: u128 = 1;
    for i in 0..(p / 2) {
        c = c.checked_mul((p - i) as u128)? / (i as u128 + 1);
    }
    Some(c / 2)
}
