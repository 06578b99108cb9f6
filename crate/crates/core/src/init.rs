//! Starting responsibilities for the EM loop.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mixture::Responsibilities;
use crate::spin_models::{Dataset, SpinConfiguration};

/// Rows drawn independently and uniformly from the probability simplex
/// (a flat Dirichlet), so every entry is strictly positive.
pub fn random_init(b: usize, k: usize, seed: u64) -> Result<Responsibilities> {
    if k == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    if b < k {
        return Err(Error::invalid(format!("{b} samples cannot seed {k} components")));
    }
    if k == 1 {
        return Ok(Responsibilities::ones(b));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gamma = Vec::with_capacity(b * k);
    for _ in 0..b {
        let row: Vec<f64> = (0..k)
            .map(|_| loop {
                let e: f64 = rng.sample(Exp1);
                if e > 0.0 {
                    break e;
                }
            })
            .collect();
        let total: f64 = row.iter().sum();
        gamma.extend(row.into_iter().map(|x| x / total));
    }
    Responsibilities::new(gamma, k)
}

pub fn hamming_distance(a: &SpinConfiguration, b: &SpinConfiguration) -> Result<usize> {
    if a.n_sites() != b.n_sites() || a.q() != b.q() {
        return Err(Error::invalid("configurations differ in shape"));
    }
    Ok(hamming(a.states(), b.states()))
}

fn hamming(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// `min(B, max(10 K, 100))`.
pub fn default_subset_size(b: usize, k: usize) -> usize {
    b.min((10 * k).max(100))
}

/// Greedy farthest-point selection of `k` codewords among `subset`.
///
/// The first codeword has the largest total distance to the rest of the
/// subset; each later one maximizes its minimum distance to the codewords
/// already chosen. Ties go to the earliest entry of `subset`.
pub fn select_codewords(data: &Dataset, subset: &[usize], k: usize) -> Result<Vec<usize>> {
    if k == 0 || subset.len() < k {
        return Err(Error::invalid(format!(
            "cannot pick {k} codewords from {} candidates",
            subset.len()
        )));
    }
    if let Some(&b) = subset.iter().find(|&&b| b >= data.len()) {
        return Err(Error::invalid(format!("sample index {b} out of range")));
    }
    let states = |b: usize| data.get(b).states();
    let totals: Vec<usize> = subset
        .par_iter()
        .map(|&a| subset.iter().map(|&b| hamming(states(a), states(b))).sum())
        .collect();
    let first = argmax_first(&totals);
    let mut chosen = vec![subset[first]];
    let mut taken = vec![false; subset.len()];
    taken[first] = true;
    let mut min_dist: Vec<usize> = subset
        .iter()
        .map(|&b| hamming(states(b), states(subset[first])))
        .collect();
    while chosen.len() < k {
        let next = (0..subset.len())
            .filter(|&i| !taken[i])
            .fold(None, |best: Option<usize>, i| match best {
                Some(j) if min_dist[j] >= min_dist[i] => Some(j),
                _ => Some(i),
            })
            .expect("subset has at least k members");
        taken[next] = true;
        chosen.push(subset[next]);
        for (i, &b) in subset.iter().enumerate() {
            min_dist[i] = min_dist[i].min(hamming(states(b), states(subset[next])));
        }
    }
    Ok(chosen)
}

fn argmax_first(xs: &[usize]) -> usize {
    xs.iter()
        .enumerate()
        .fold(0, |best, (i, &x)| if x > xs[best] { i } else { best })
}

/// Index of the nearest codeword for every sample (lowest index on ties).
pub fn nearest_codeword(data: &Dataset, codewords: &[usize]) -> Vec<usize> {
    data.samples()
        .par_iter()
        .map(|s| {
            let dists: Vec<usize> = codewords
                .iter()
                .map(|&c| hamming(s.states(), data.get(c).states()))
                .collect();
            dists
                .iter()
                .enumerate()
                .fold(0, |best, (i, &d)| if d < dists[best] { i } else { best })
        })
        .collect()
}

/// Sorted uniform random subset of sample indices.
pub fn random_subset(b: usize, size: usize, seed: u64) -> Result<Vec<usize>> {
    if size > b {
        return Err(Error::invalid(format!("subset size {size} exceeds {b} samples")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut subset = index::sample(&mut rng, b, size).into_vec();
    subset.sort_unstable();
    Ok(subset)
}

/// Hard responsibilities from `k` mutually distant codewords picked in a random subset.
pub fn codeword_init(data: &Dataset, k: usize, subset_size: usize, seed: u64) -> Result<Responsibilities> {
    if k == 0 || data.len() < k {
        return Err(Error::invalid(format!("{} samples cannot seed {k} components", data.len())));
    }
    if subset_size < k {
        return Err(Error::invalid(format!("subset size {subset_size} is below K={k}")));
    }
    if k == 1 {
        return Ok(Responsibilities::ones(data.len()));
    }
    let subset = random_subset(data.len(), subset_size, seed)?;
    let codewords = select_codewords(data, &subset, k)?;
    Responsibilities::one_hot(&nearest_codeword(data, &codewords), k)
}
