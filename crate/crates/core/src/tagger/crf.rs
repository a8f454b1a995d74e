//! Linear-chain CRF over BIEOS tags: structural transition mask, log-space
//! forward algorithm, constrained Viterbi, and forward-backward marginals.
//!
//! All functions are generic in the tag-set size `k` (taken from the
//! emission width); the transition matrix and mask are `(k+2) x (k+2)` with
//! START = k and STOP = k+1.

use crate::corpus::Tag;

/// Index of the START sentinel for a tag set of size `k`.
pub fn start_state(num_tags: usize) -> usize {
    num_tags
}

/// Index of the STOP sentinel for a tag set of size `k`.
pub fn stop_state(num_tags: usize) -> usize {
    num_tags + 1
}

pub fn num_states(num_tags: usize) -> usize {
    num_tags + 2
}

/// `mask[from][to]` — true = transition allowed. From START: {B-x, S-x, O};
/// O → {B-x, S-x, O, STOP}; B-x/I-x → {I-x, E-x}; E-x/S-x → {B-y, S-y, O,
/// STOP}; everything else forbidden.
pub fn build_transition_mask() -> Vec<Vec<bool>> {
    let k = crate::corpus::NUM_TAGS;
    let (start, stop) = (start_state(k), stop_state(k));
    let mut mask = vec![vec![false; num_states(k)]; num_states(k)];
    for from in Tag::all() {
        for to in Tag::all() {
            mask[from.index()][to.index()] = from.may_precede(to);
        }
        mask[start][from.index()] = from.may_start();
        mask[from.index()][stop] = from.may_end();
    }
    mask
}

/// A fully permissive mask of the same shape, for oracle tests.
pub fn unconstrained_mask(num_tags: usize) -> Vec<Vec<bool>> {
    let n = num_states(num_tags);
    let (start, stop) = (start_state(num_tags), stop_state(num_tags));
    let mut mask = vec![vec![false; n]; n];
    for from in 0..num_tags {
        for to in 0..num_tags {
            mask[from][to] = true;
        }
        mask[start][from] = true;
        mask[from][stop] = true;
    }
    mask
}

fn trans(a: &[f64], mask: &[Vec<bool>], n: usize, from: usize, to: usize) -> f64 {
    if mask[from][to] {
        a[from * n + to]
    } else {
        f64::NEG_INFINITY
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// log Σ over all mask-legal paths of exp(path score), via the forward
/// algorithm in log space.
pub fn crf_log_partition(emissions: &[Vec<f64>], a: &[f64], mask: &[Vec<bool>]) -> f64 {
    let k = emissions[0].len();
    let n = num_states(k);
    let (start, stop) = (start_state(k), stop_state(k));
    let mut alpha: Vec<f64> = (0..k)
        .map(|y| trans(a, mask, n, start, y) + emissions[0][y])
        .collect();
    let mut scratch = vec![0.0; k];
    for em in &emissions[1..] {
        let next: Vec<f64> = (0..k)
            .map(|y2| {
                for (y, s) in scratch.iter_mut().enumerate() {
                    *s = alpha[y] + trans(a, mask, n, y, y2);
                }
                log_sum_exp(&scratch) + em[y2]
            })
            .collect();
        alpha = next;
    }
    let finals: Vec<f64> = (0..k).map(|y| alpha[y] + trans(a, mask, n, y, stop)).collect();
    log_sum_exp(&finals)
}

/// Score of one specific path (−∞ if it crosses a forbidden transition).
pub fn crf_path_score(emissions: &[Vec<f64>], a: &[f64], mask: &[Vec<bool>], path: &[usize]) -> f64 {
    assert_eq!(path.len(), emissions.len());
    let k = emissions[0].len();
    let n = num_states(k);
    let (start, stop) = (start_state(k), stop_state(k));
    let mut score = trans(a, mask, n, start, path[0]) + emissions[0][path[0]];
    for t in 1..path.len() {
        score += trans(a, mask, n, path[t - 1], path[t]) + emissions[t][path[t]];
    }
    score + trans(a, mask, n, path[path.len() - 1], stop)
}

/// Maximum-score mask-legal path. Ties break toward the smallest tag index
/// at the earliest differing position: suffix-best scores are computed
/// right-to-left, then the path is chosen greedily left-to-right taking the
/// lowest-index maximizer at each step.
pub fn viterbi_decode(emissions: &[Vec<f64>], a: &[f64], mask: &[Vec<bool>]) -> (Vec<usize>, f64) {
    let len = emissions.len();
    let k = emissions[0].len();
    let n = num_states(k);
    let (start, stop) = (start_state(k), stop_state(k));
    // suffix[t][y] = emission[t][y] + best continuation after tagging t = y
    let mut suffix = vec![vec![f64::NEG_INFINITY; k]; len];
    for y in 0..k {
        suffix[len - 1][y] = emissions[len - 1][y] + trans(a, mask, n, y, stop);
    }
    for t in (0..len - 1).rev() {
        for y in 0..k {
            let mut best = f64::NEG_INFINITY;
            for y2 in 0..k {
                let s = trans(a, mask, n, y, y2) + suffix[t + 1][y2];
                if s > best {
                    best = s;
                }
            }
            suffix[t][y] = emissions[t][y] + best;
        }
    }
    let mut path = Vec::with_capacity(len);
    let mut best_score = f64::NEG_INFINITY;
    let mut choice = 0;
    for y in 0..k {
        let s = trans(a, mask, n, start, y) + suffix[0][y];
        if s > best_score {
            best_score = s;
            choice = y;
        }
    }
    path.push(choice);
    for t in 1..len {
        let prev = path[t - 1];
        let mut best = f64::NEG_INFINITY;
        let mut pick = 0;
        for y in 0..k {
            let s = trans(a, mask, n, prev, y) + suffix[t][y];
            if s > best {
                best = s;
                pick = y;
            }
        }
        path.push(pick);
    }
    (path, best_score)
}

/// NLL of the gold path (no regularization) together with the gradients of
/// that loss w.r.t. emissions and the flat transition matrix. Masked cells
/// receive zero gradient.
pub fn crf_gradients(
    emissions: &[Vec<f64>],
    a: &[f64],
    mask: &[Vec<bool>],
    gold: &[usize],
) -> (f64, Vec<Vec<f64>>, Vec<f64>) {
    let len = emissions.len();
    let k = emissions[0].len();
    let n = num_states(k);
    let (start, stop) = (start_state(k), stop_state(k));

    // alpha[t][y] includes emission at t; beta[t][y] covers everything after t
    let mut alpha = vec![vec![f64::NEG_INFINITY; k]; len];
    for y in 0..k {
        alpha[0][y] = trans(a, mask, n, start, y) + emissions[0][y];
    }
    let mut scratch = vec![0.0; k];
    for t in 1..len {
        for y2 in 0..k {
            for (y, s) in scratch.iter_mut().enumerate() {
                *s = alpha[t - 1][y] + trans(a, mask, n, y, y2);
            }
            alpha[t][y2] = log_sum_exp(&scratch) + emissions[t][y2];
        }
    }
    let mut beta = vec![vec![f64::NEG_INFINITY; k]; len];
    for y in 0..k {
        beta[len - 1][y] = trans(a, mask, n, y, stop);
    }
    for t in (0..len - 1).rev() {
        for y in 0..k {
            for (y2, s) in scratch.iter_mut().enumerate() {
                *s = trans(a, mask, n, y, y2) + emissions[t + 1][y2] + beta[t + 1][y2];
            }
            beta[t][y] = log_sum_exp(&scratch);
        }
    }
    let finals: Vec<f64> = (0..k).map(|y| alpha[len - 1][y] + beta[len - 1][y]).collect();
    let log_z = log_sum_exp(&finals);

    let mut d_em = vec![vec![0.0; k]; len];
    let mut d_trans = vec![0.0; n * n];
    for t in 0..len {
        for y in 0..k {
            let p = (alpha[t][y] + beta[t][y] - log_z).exp();
            d_em[t][y] = p;
        }
        d_em[t][gold[t]] -= 1.0;
    }
    for y in 0..k {
        if mask[start][y] {
            d_trans[start * n + y] = (alpha[0][y] + beta[0][y] - log_z).exp();
        }
        if mask[y][stop] {
            d_trans[y * n + stop] = (alpha[len - 1][y] + beta[len - 1][y] - log_z).exp();
        }
    }
    d_trans[start * n + gold[0]] -= 1.0;
    d_trans[gold[len - 1] * n + stop] -= 1.0;
    for t in 0..len - 1 {
        for y in 0..k {
            if alpha[t][y] == f64::NEG_INFINITY {
                continue;
            }
            for y2 in 0..k {
                if !mask[y][y2] {
                    continue;
                }
                let p = (alpha[t][y] + a[y * n + y2] + emissions[t + 1][y2] + beta[t + 1][y2]
                    - log_z)
                    .exp();
                d_trans[y * n + y2] += p;
            }
        }
        d_trans[gold[t] * n + gold[t + 1]] -= 1.0;
    }
    let gold_score = crf_path_score(emissions, a, mask, gold);
    (log_z - gold_score, d_em, d_trans)
}
