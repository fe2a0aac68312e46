//! Greedy (n, ε)-separated sets under the sup-metric d_n(x, y) = max_{i<n} d(fⁱx, fⁱy).

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::torus_maps::{torus_sup_dist, TorusMap};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateRole {
    LowerBound,
    Heuristic,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub n: usize,
    pub epsilon: f64,
    pub count: usize,
    /// log(count)/n.
    pub rate: f64,
    pub role: EstimateRole,
    pub samples_used: usize,
    pub seed: u64,
    /// Initial points of the separated set, in acceptance order.
    #[serde(skip)]
    pub set: Vec<Vec<f64>>,
}

/// Additive recurrence points frac(offset + k·α) with α from the generalized golden ratio.
fn kronecker_points(d: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    // φ_d is the positive root of x^(d+1) = x + 1.
    let mut phi = 2.0_f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=d).map(|j| phi.powi(-(j as i32)).fract()).collect();
    let offset: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    (0..count)
        .map(|k| (0..d).map(|j| (offset[j] + (k as f64 + 1.0) * alpha[j]).fract()).collect())
        .collect()
}

/// Orbit segments x, fx, …, f^{n−1}x, flattened.
fn orbits(map: &dyn TorusMap, starts: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    starts
        .par_iter()
        .map(|x| {
            let mut out = Vec::with_capacity(n * x.len());
            let mut cur = x.clone();
            for i in 0..n {
                out.extend_from_slice(&cur);
                if i + 1 < n {
                    cur = map.apply(&cur);
                }
            }
            out
        })
        .collect()
}

fn dn(a: &[f64], b: &[f64], d: usize) -> f64 {
    a.chunks(d).zip(b.chunks(d)).map(|(x, y)| torus_sup_dist(x, y)).fold(0.0, f64::max)
}

/// Cell index of a point in a grid of cells of side ≥ ε.
fn cell_key(orbit: &[f64], d: usize, times: &[usize], cells: usize) -> Vec<u32> {
    times
        .iter()
        .flat_map(|&t| orbit[t * d..(t + 1) * d].iter().map(move |&v| ((v * cells as f64) as usize).min(cells - 1) as u32))
        .collect()
}

fn neighbour_keys(key: &[u32], cells: usize) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::with_capacity(key.len())];
    for &k in key {
        let opts: Vec<u32> = if cells < 3 {
            (0..cells as u32).collect()
        } else {
            let c = cells as u32;
            vec![(k + c - 1) % c, k, (k + 1) % c]
        };
        out = out
            .into_iter()
            .flat_map(|p| {
                opts.iter().map(move |&o| {
                    let mut q = p.clone();
                    q.push(o);
                    q
                })
            })
            .collect();
    }
    out
}

/// Bucketing times: the last orbit point, plus the first when the key stays small.
fn key_times(n: usize, d: usize) -> Vec<usize> {
    if n > 1 && 2 * d <= 6 {
        vec![0, n - 1]
    } else {
        vec![n - 1]
    }
}

/// Greedy maximal (n, ε)-separated subset of `samples` quasi-random points, visited in a
/// seeded shuffled order. Every accepted set is separated, so `count` is a lower bound
/// for s(n, ε).
pub fn separated_set_entropy(map: &dyn TorusMap, n: usize, epsilon: f64, samples: usize, seed: u64) -> Result<EntropyEstimate, Error> {
    if n == 0 || !(epsilon > 0.0) || samples == 0 {
        return Err(Error::Input("need n >= 1, epsilon > 0 and samples >= 1".into()));
    }
    let d = map.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = kronecker_points(d, samples, &mut rng);
    starts.shuffle(&mut rng);
    let orbs = orbits(map, &starts, n);
    let cells = ((1.0 / epsilon).floor() as usize).max(1);
    let times = key_times(n, d);
    let mut buckets: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
    let mut accepted: Vec<usize> = Vec::new();
    for (i, o) in orbs.iter().enumerate() {
        let key = cell_key(o, d, &times, cells);
        let clash = neighbour_keys(&key, cells)
            .iter()
            .filter_map(|k| buckets.get(k))
            .flatten()
            .any(|&j| dn(o, &orbs[j], d) <= epsilon);
        if !clash {
            buckets.entry(key).or_default().push(i);
            accepted.push(i);
        }
    }
    let count = accepted.len();
    Ok(EntropyEstimate {
        n,
        epsilon,
        count,
        rate: (count as f64).ln() / n as f64,
        role: EstimateRole::LowerBound,
        samples_used: samples,
        seed,
        set: accepted.into_iter().map(|i| starts[i].clone()).collect(),
    })
}

/// Whether `points` are pairwise (n, ε)-separated, recomputing orbits from scratch and
/// bucketing on the middle and last orbit points instead of the estimator's keys.
pub fn verify_separated(map: &dyn TorusMap, points: &[Vec<f64>], n: usize, epsilon: f64) -> bool {
    if points.is_empty() {
        return true;
    }
    let d = map.dim();
    let orbs = orbits(map, points, n);
    let cells = ((1.0 / epsilon).floor() as usize).max(1);
    let times = if n > 2 && 2 * d <= 6 { vec![n / 2, n - 1] } else { vec![n / 2] };
    let mut buckets: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
    for (i, o) in orbs.iter().enumerate() {
        buckets.entry(cell_key(o, d, &times, cells)).or_default().push(i);
    }
    orbs.par_iter().enumerate().all(|(i, o)| {
        neighbour_keys(&cell_key(o, d, &times, cells), cells)
            .iter()
            .filter_map(|k| buckets.get(k))
            .flatten()
            .all(|&j| j == i || dn(o, &orbs[j], d) > epsilon)
    })
}
