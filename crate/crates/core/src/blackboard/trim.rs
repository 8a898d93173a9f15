use fixedbitset::FixedBitSet;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Dataset, ModelError, RuleSet};

/// Sampled row indices (ascending) for fingerprinting.
pub fn sample_rows(n: usize, sample_size: usize, seed: u64) -> Vec<usize> {
    if sample_size >= n {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = sample(&mut rng, n, sample_size).into_vec();
    rows.sort_unstable();
    rows
}

/// Match fingerprint of each ruleset over the given rows.
pub fn fingerprints(
    data: &Dataset,
    rulesets: &[RuleSet],
    rows: &[usize],
) -> Result<Vec<FixedBitSet>, ModelError> {
    rulesets
        .iter()
        .map(|rs| {
            let bits = data.match_bits(rs)?;
            let mut fp = FixedBitSet::with_capacity(rows.len());
            for (i, &row) in rows.iter().enumerate() {
                fp.set(i, bits.contains(row));
            }
            Ok(fp)
        })
        .collect()
}

pub fn hamming(a: &FixedBitSet, b: &FixedBitSet) -> u32 {
    a.symmetric_difference_count(b) as u32
}

/// k-medoids (greedy build followed by alternating reassignment) over a
/// precomputed distance matrix. `fixed` indices are always medoids and never
/// swapped out. Returns the medoid indices in ascending order.
pub fn k_medoids(dist: &[Vec<u32>], k: usize, fixed: &[usize]) -> Vec<usize> {
    let n = dist.len();
    if k >= n {
        return (0..n).collect();
    }
    let mut medoids: Vec<usize> = Vec::new();
    for &f in fixed {
        if medoids.len() < k && !medoids.contains(&f) {
            medoids.push(f);
        }
    }
    let mut nearest: Vec<u64> = (0..n)
        .map(|i| {
            medoids
                .iter()
                .map(|&m| dist[i][m] as u64)
                .min()
                .unwrap_or(u64::MAX)
        })
        .collect();
    while medoids.len() < k {
        let mut best: Option<(u64, usize)> = None;
        for c in (0..n).filter(|c| !medoids.contains(c)) {
            let cost: u64 = (0..n).map(|i| nearest[i].min(dist[i][c] as u64)).sum();
            if best.is_none_or(|(b, _)| cost < b) {
                best = Some((cost, c));
            }
        }
        let (_, c) = best.expect("k < n leaves a candidate");
        medoids.push(c);
        for i in 0..n {
            nearest[i] = nearest[i].min(dist[i][c] as u64);
        }
    }

    for _ in 0..100 {
        let assign: Vec<usize> = (0..n)
            .map(|i| {
                let mut best = 0;
                for (j, &m) in medoids.iter().enumerate() {
                    if dist[i][m] < dist[i][medoids[best]] {
                        best = j;
                    }
                }
                best
            })
            .collect();
        let mut changed = false;
        for j in 0..medoids.len() {
            if fixed.contains(&medoids[j]) {
                continue;
            }
            let members: Vec<usize> = (0..n).filter(|&i| assign[i] == j).collect();
            let cost = |c: usize| -> u64 { members.iter().map(|&i| dist[i][c] as u64).sum() };
            let mut best = medoids[j];
            let mut best_cost = cost(best);
            for &c in &members {
                if medoids.contains(&c) {
                    continue;
                }
                let cc = cost(c);
                if cc < best_cost {
                    best = c;
                    best_cost = cc;
                }
            }
            if best != medoids[j] {
                medoids[j] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    medoids.sort_unstable();
    medoids
}
