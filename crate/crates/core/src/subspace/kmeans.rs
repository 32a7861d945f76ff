use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::sq_dist;
use crate::scalar::Real;
use crate::seed;

/// Hard cluster assignment produced by [`kmeans_cluster`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    pub assignments: Vec<usize>,
    pub num_clusters: usize,
    /// Lloyd iterations performed.
    pub iterations: usize,
}

impl Clustering {
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.num_clusters];
        for &a in &self.assignments {
            s[a] += 1;
        }
        s
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == cluster)
            .map(|(g, _)| g)
            .collect()
    }
}

/// Index of the nearest center; ties go to the lowest index.
fn nearest<T: Real>(x: &[T], centers: &[Vec<T>]) -> (usize, T) {
    let mut best = (0, sq_dist(x, &centers[0]));
    for (i, c) in centers.iter().enumerate().skip(1) {
        let d = sq_dist(x, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn plus_plus_init<T: Real, S: AsRef<[T]> + Sync>(
    data: &[S],
    k: usize,
    rng: &mut seed::Rng,
) -> Vec<Vec<T>> {
    let g = data.len();
    let mut centers = vec![data[rng.random_range(0..g)].as_ref().to_vec()];
    let mut d2: Vec<f64> = data
        .iter()
        .map(|x| sq_dist(x.as_ref(), &centers[0]).to_f64_lossy())
        .collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            d2.iter()
                .position(|&d| {
                    acc += d;
                    acc > u
                })
                .unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).unwrap_or(g - 1))
        } else {
            rng.random_range(0..g)
        };
        let c = data[pick].as_ref().to_vec();
        for (d, x) in d2.iter_mut().zip(data) {
            *d = d.min(sq_dist(x.as_ref(), &c).to_f64_lossy());
        }
        centers.push(c);
    }
    centers
}

fn update_centers<T: Real, S: AsRef<[T]>>(data: &[S], assign: &[usize], k: usize) -> Vec<Vec<T>> {
    let r = data[0].as_ref().len();
    let mut sums = vec![vec![T::zero(); r]; k];
    let mut counts = vec![0usize; k];
    for (x, &a) in data.iter().zip(assign) {
        counts[a] += 1;
        for (s, &v) in sums[a].iter_mut().zip(x.as_ref()) {
            *s = *s + v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        let inv = T::one() / T::of_usize(c.max(1));
        s.iter_mut().for_each(|v| *v = *v * inv);
    }
    sums
}

/// Moves the point farthest from its own center into each empty cluster.
fn reseed_empty<T: Real>(assign: &mut [usize], dist: &mut [T], k: usize) {
    let mut counts = vec![0usize; k];
    for &a in assign.iter() {
        counts[a] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut far: Option<usize> = None;
        for (g, &d) in dist.iter().enumerate() {
            if counts[assign[g]] < 2 {
                continue;
            }
            if far.is_none_or(|f| d > dist[f]) {
                far = Some(g);
            }
        }
        let g = far.expect("G >= I leaves a cluster with at least two members");
        counts[assign[g]] -= 1;
        assign[g] = empty;
        counts[empty] = 1;
        dist[g] = T::zero();
    }
}

/// Lloyd's k-means with k-means++ seeding on Euclidean distance.
///
/// Iterates until the assignment no longer changes or `max_iters` is
/// reached. Every returned cluster is nonempty.
pub fn kmeans_cluster<T: Real, S: AsRef<[T]> + Sync>(
    data: &[S],
    num_clusters: usize,
    seed: u64,
    max_iters: usize,
) -> Result<Clustering> {
    let g = data.len();
    if num_clusters == 0 || g < num_clusters {
        return Err(Error::Config(format!(
            "cannot form {num_clusters} clusters from {g} samples"
        )));
    }
    let r = data[0].as_ref().len();
    if data.iter().any(|x| x.as_ref().len() != r) {
        return Err(Error::Config("samples differ in dimension".into()));
    }
    if num_clusters == 1 {
        return Ok(Clustering {
            assignments: vec![0; g],
            num_clusters,
            iterations: 0,
        });
    }
    let mut rng = seed::rng(seed);
    let mut centers = plus_plus_init(data, num_clusters, &mut rng);
    let mut assign: Vec<usize> = Vec::new();
    let mut iterations = 0;
    while iterations < max_iters.max(1) {
        iterations += 1;
        let (mut next, mut dist): (Vec<usize>, Vec<T>) = data
            .par_iter()
            .map(|x| nearest(x.as_ref(), &centers))
            .unzip();
        reseed_empty(&mut next, &mut dist, num_clusters);
        let converged = next == assign;
        assign = next;
        centers = update_centers(data, &assign, num_clusters);
        if converged {
            break;
        }
    }
    Ok(Clustering {
        assignments: assign,
        num_clusters,
        iterations,
    })
}
