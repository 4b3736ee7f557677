//! Monte Carlo sampling of the discrete random graphs.
//!
//! Nodes sit on an equispaced lattice: `n` points on a ring, or an
//! `n_1 x ... x n_K` grid on a torus. Each unordered pair is linked
//! independently with the kernel's probability at the pair's wrapped angular
//! offset.
//!
//! Randomness is derived from the seed alone. Node `i` owns its own ChaCha
//! stream and spends one draw per candidate partner with a larger index, in a
//! fixed candidate order, so a graph does not depend on thread scheduling.
//! Trial `t` of an ensemble samples with [`trial_seed`]`(master, t)`, and
//! per-trial statistics are merged in trial order.

use std::borrow::Borrow;
use std::collections::VecDeque;
use std::f64::consts::PI;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::ConnectionKernel;

/// Ceiling on candidate pairs examined per sample.
pub const MAX_CANDIDATE_WORK: f64 = 4e9;
/// Ceiling on stored adjacency entries per sample.
pub const MAX_ADJACENCY_ENTRIES: f64 = 5e8;
/// Ceiling on path enumeration work for three-intermediate chains.
pub const MAX_CHAIN_WORK: f64 = 1e9;

const CLUSTERING_BLOCKS: usize = 16;

/// Equispaced node positions on a ring or a torus grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Lattice {
    dims: Vec<usize>,
}

impl Lattice {
    pub fn ring(n: usize) -> Result<Self> {
        Self::torus(vec![n])
    }

    pub fn torus(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument("lattice sides must be positive".into()));
        }
        let n: usize = dims.iter().product();
        if n < 2 {
            return Err(Error::InvalidArgument("a graph needs at least 2 nodes".into()));
        }
        if n > u32::MAX as usize {
            return Err(Error::BudgetExceeded {
                what: "node count".into(),
                cost: n as f64,
                budget: u32::MAX as f64,
            });
        }
        Ok(Self { dims })
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Mixed-radix coordinates of node `i`, first dimension fastest.
    pub fn coords(&self, mut i: usize) -> Vec<usize> {
        self.dims
            .iter()
            .map(|&d| {
                let c = i % d;
                i /= d;
                c
            })
            .collect()
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(&self.dims)
            .rev()
            .fold(0, |acc, (c, d)| acc * d + c)
    }
}

/// One realized graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSample {
    lattice: Lattice,
    adjacency: Vec<Vec<u32>>,
    seed: u64,
}

impl GraphSample {
    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sorted neighbor list of node `i`.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&(j as u32)).is_ok()
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| {
                nb.iter()
                    .filter(move |&&j| j as usize > i)
                    .map(move |&j| (i as u32, j))
            })
            .collect()
    }
}

/// Per-dimension offsets with nonzero probability, and that probability.
fn candidate_offsets(lattice: &Lattice, kernel: &ConnectionKernel) -> Result<Vec<(Vec<usize>, f64)>> {
    if kernel.dim() != lattice.dims.len() {
        return Err(Error::DimensionMismatch {
            expected: lattice.dims.len(),
            got: kernel.dim(),
        });
    }
    let per_dim: Vec<Vec<(usize, f64)>> = kernel
        .factors()
        .iter()
        .zip(&lattice.dims)
        .map(|(f, &n)| {
            (0..n)
                .map(|r| (r, f.value_1d(2.0 * PI * r as f64 / n as f64)))
                .filter(|(_, q)| *q > 0.0)
                .collect()
        })
        .collect();
    let mut out: Vec<(Vec<usize>, f64)> = vec![(Vec::new(), 1.0)];
    for dim in &per_dim {
        out = out
            .into_iter()
            .flat_map(|(prefix, q)| {
                dim.iter().map(move |&(r, qr)| {
                    let mut v = prefix.clone();
                    v.push(r);
                    (v, q * qr)
                })
            })
            .collect();
    }
    out.retain(|(v, _)| v.iter().any(|&r| r != 0));
    Ok(out)
}

/// Seed for trial `t` of a run with master seed `master`.
pub fn trial_seed(master: u64, t: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(t);
    rng.next_u64()
}

/// Samples one graph. Identical inputs give identical graphs.
pub fn sample_graph(lattice: &Lattice, kernel: &ConnectionKernel, seed: u64) -> Result<GraphSample> {
    let kernel = kernel.clone().validated()?;
    let offsets = candidate_offsets(lattice, &kernel)?;
    let n = lattice.len();
    let work = n as f64 * offsets.len() as f64;
    if work > MAX_CANDIDATE_WORK {
        return Err(Error::BudgetExceeded {
            what: "candidate pairs".into(),
            cost: work,
            budget: MAX_CANDIDATE_WORK,
        });
    }
    let expected: f64 = n as f64 * offsets.iter().map(|(_, q)| q).sum::<f64>();
    if expected > MAX_ADJACENCY_ENTRIES {
        return Err(Error::BudgetExceeded {
            what: "adjacency storage".into(),
            cost: expected,
            budget: MAX_ADJACENCY_ENTRIES,
        });
    }
    let base = ChaCha8Rng::seed_from_u64(seed);
    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut target = vec![0usize; lattice.dims.len()];
    for i in 0..n {
        let here = lattice.coords(i);
        let mut rng = base.clone();
        rng.set_stream(i as u64);
        for (off, q) in &offsets {
            for (d, ((t, c), o)) in target.iter_mut().zip(&here).zip(off).enumerate() {
                *t = (c + o) % lattice.dims[d];
            }
            let j = lattice.index(&target);
            if j <= i {
                continue;
            }
            let u: f64 = rng.gen();
            if u < *q {
                adjacency[i].push(j as u32);
                adjacency[j].push(i as u32);
            }
        }
    }
    for nb in &mut adjacency {
        nb.sort_unstable();
    }
    Ok(GraphSample {
        lattice: lattice.clone(),
        adjacency,
        seed,
    })
}

/// Mean with a standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

impl McEstimate {
    /// Sample mean and standard error of the mean. One observation has no
    /// spread estimate and reports an infinite error.
    pub fn from_observations(xs: &[f64]) -> Result<Self> {
        let t = xs.len();
        if t == 0 {
            return Err(Error::UndefinedEstimate("no trials".into()));
        }
        let mean = xs.iter().sum::<f64>() / t as f64;
        let std_error = if t < 2 {
            f64::INFINITY
        } else {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t - 1) as f64;
            (var / t as f64).sqrt()
        };
        Ok(Self {
            mean,
            std_error,
            trials: t,
        })
    }

    /// Number of standard errors separating the estimate from `value`.
    pub fn z_score(&self, value: f64) -> f64 {
        let diff = (self.mean - value).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }
}

fn sample_mean_degree(g: &GraphSample) -> f64 {
    2.0 * g.edge_count() as f64 / g.n() as f64
}

fn intersection_size(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// Linked and total neighbor pairs, in contiguous node blocks.
fn clustering_blocks(g: &GraphSample) -> Vec<(u64, u64)> {
    let n = g.n();
    let mut blocks = vec![(0u64, 0u64); CLUSTERING_BLOCKS.min(n)];
    let nb = blocks.len();
    let mut marked = vec![false; n];
    for i in 0..n {
        let nbrs = g.neighbors(i);
        let d = nbrs.len() as u64;
        if d < 2 {
            continue;
        }
        for &j in nbrs {
            marked[j as usize] = true;
        }
        let mut twice_closed = 0u64;
        for &j in nbrs {
            twice_closed += g
                .neighbors(j as usize)
                .iter()
                .filter(|&&k| marked[k as usize])
                .count() as u64;
        }
        for &j in nbrs {
            marked[j as usize] = false;
        }
        let b = &mut blocks[i * nb / n];
        b.0 += twice_closed / 2;
        b.1 += d * (d - 1) / 2;
    }
    blocks
}

/// Pooled ratio over batches with a delta-method standard error.
fn ratio_estimate(batches: &[(f64, f64)], trials: usize) -> Result<McEstimate> {
    let num: f64 = batches.iter().map(|b| b.0).sum();
    let den: f64 = batches.iter().map(|b| b.1).sum();
    if den == 0.0 {
        return Err(Error::UndefinedEstimate(
            "no node has two or more neighbors".into(),
        ));
    }
    let ratio = num / den;
    let k = batches.len() as f64;
    let std_error = if batches.len() < 2 {
        f64::INFINITY
    } else {
        let ss: f64 = batches.iter().map(|(c, p)| (c - ratio * p).powi(2)).sum();
        (k / (k - 1.0) * ss).sqrt() / den
    };
    Ok(McEstimate {
        mean: ratio,
        std_error,
        trials,
    })
}

fn combine_clustering(per_sample: Vec<Vec<(u64, u64)>>) -> Result<McEstimate> {
    let trials = per_sample.len();
    if trials == 0 {
        return Err(Error::UndefinedEstimate("no trials".into()));
    }
    let batches: Vec<(f64, f64)> = if trials >= 2 {
        per_sample
            .iter()
            .map(|blocks| {
                blocks
                    .iter()
                    .fold((0.0, 0.0), |acc, b| (acc.0 + b.0 as f64, acc.1 + b.1 as f64))
            })
            .collect()
    } else {
        per_sample[0]
            .iter()
            .map(|b| (b.0 as f64, b.1 as f64))
            .collect()
    };
    ratio_estimate(&batches, trials)
}

fn check_target(g: &GraphSample, offset: usize) -> Result<usize> {
    let t = offset % g.n();
    if t == 0 {
        return Err(Error::InvalidArgument("offset must not coincide with node 0".into()));
    }
    Ok(t)
}

/// Simple chains with `k` distinct intermediates between node 0 and `target`.
fn sample_chain_count(g: &GraphSample, target: usize, k: usize) -> Result<u64> {
    let src = 0usize;
    let at_target: Vec<bool> = {
        let mut m = vec![false; g.n()];
        for &j in g.neighbors(target) {
            m[j as usize] = true;
        }
        m
    };
    let ends = |c: usize| c == src || c == target;
    let count = match k {
        1 => intersection_size(g.neighbors(src), g.neighbors(target)) as u64,
        2 => {
            let mut c = 0u64;
            for &c1 in g.neighbors(src) {
                let c1 = c1 as usize;
                if ends(c1) {
                    continue;
                }
                for &c2 in g.neighbors(c1) {
                    let c2 = c2 as usize;
                    if !ends(c2) && at_target[c2] {
                        c += 1;
                    }
                }
            }
            c
        }
        3 => {
            let mean_deg = 2.0 * g.edge_count() as f64 / g.n() as f64;
            let work = g.degree(src) as f64 * mean_deg * mean_deg;
            if work > MAX_CHAIN_WORK {
                return Err(Error::BudgetExceeded {
                    what: "3-chain enumeration".into(),
                    cost: work,
                    budget: MAX_CHAIN_WORK,
                });
            }
            let mut c = 0u64;
            for &c1 in g.neighbors(src) {
                let c1 = c1 as usize;
                if ends(c1) {
                    continue;
                }
                for &c2 in g.neighbors(c1) {
                    let c2 = c2 as usize;
                    if ends(c2) {
                        continue;
                    }
                    for &c3 in g.neighbors(c2) {
                        let c3 = c3 as usize;
                        if c3 != c1 && !ends(c3) && at_target[c3] {
                            c += 1;
                        }
                    }
                }
            }
            c
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "chain length k = {k} not in {{1, 2, 3}}"
            )))
        }
    };
    Ok(count)
}

/// Degree of separation `S = L - 1` from node 0 to `target`, where `L` is
/// the shortest path length, or `None` when `S > max_sep`.
fn sample_separation(g: &GraphSample, target: usize, max_sep: usize) -> Option<usize> {
    let max_len = max_sep + 1;
    let mut dist = vec![usize::MAX; g.n()];
    let mut queue = VecDeque::new();
    dist[0] = 0;
    queue.push_back(0usize);
    while let Some(u) = queue.pop_front() {
        let du = dist[u];
        if du >= max_len {
            break;
        }
        for &v in g.neighbors(u) {
            let v = v as usize;
            if dist[v] == usize::MAX {
                dist[v] = du + 1;
                if v == target {
                    return Some(du);
                }
                queue.push_back(v);
            }
        }
    }
    None
}

/// Path lengths from node 0, `usize::MAX` beyond `max_len`.
fn bfs_lengths(g: &GraphSample, max_len: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.n()];
    let mut queue = VecDeque::new();
    dist[0] = 0;
    queue.push_back(0usize);
    while let Some(u) = queue.pop_front() {
        let du = dist[u];
        if du >= max_len {
            break;
        }
        for &v in g.neighbors(u) {
            let v = v as usize;
            if dist[v] == usize::MAX {
                dist[v] = du + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Empirical distribution of the degree of separation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationHistogram {
    /// Entry `s` is the fraction of samples with separation exactly `s`.
    pub probabilities: Vec<McEstimate>,
    /// Fraction of samples where the target lies beyond `max_sep`.
    pub unreached: McEstimate,
    pub trials: usize,
}

fn combine_histogram(seps: &[Option<usize>], max_sep: usize) -> Result<SeparationHistogram> {
    let trials = seps.len();
    if trials == 0 {
        return Err(Error::UndefinedEstimate("no trials".into()));
    }
    let mut counts = vec![0usize; max_sep + 2];
    for s in seps {
        counts[s.unwrap_or(max_sep + 1)] += 1;
    }
    let est = |c: usize| {
        let f = c as f64 / trials as f64;
        McEstimate {
            mean: f,
            std_error: (f * (1.0 - f) / trials as f64).sqrt(),
            trials,
        }
    };
    let unreached = est(counts[max_sep + 1]);
    Ok(SeparationHistogram {
        probabilities: counts[..=max_sep].iter().map(|&c| est(c)).collect(),
        unreached,
        trials,
    })
}

/// Mean degree `2|E|/n` over samples.
pub fn empirical_mean_degree<I>(samples: I) -> Result<McEstimate>
where
    I: IntoIterator,
    I::Item: Borrow<GraphSample>,
{
    let xs: Vec<f64> = samples
        .into_iter()
        .map(|g| sample_mean_degree(g.borrow()))
        .collect();
    McEstimate::from_observations(&xs)
}

/// Pooled clustering: linked neighbor pairs over all neighbor pairs, summed
/// over every node and sample. The error comes from per-sample batches, or
/// from node blocks when there is a single sample.
pub fn empirical_clustering<I>(samples: I) -> Result<McEstimate>
where
    I: IntoIterator,
    I::Item: Borrow<GraphSample>,
{
    combine_clustering(
        samples
            .into_iter()
            .map(|g| clustering_blocks(g.borrow()))
            .collect(),
    )
}

/// Mean number of simple chains with `k` intermediates from node 0 to node `offset`.
pub fn empirical_chain_count<I>(samples: I, offset: usize, k: usize) -> Result<McEstimate>
where
    I: IntoIterator,
    I::Item: Borrow<GraphSample>,
{
    let xs = samples
        .into_iter()
        .map(|g| {
            let g = g.borrow();
            let t = check_target(g, offset)?;
            sample_chain_count(g, t, k).map(|c| c as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    McEstimate::from_observations(&xs)
}

/// Histogram of the separation between node 0 and node `offset`. Entries,
/// including the unreached bucket, sum to one.
pub fn empirical_separation_histogram<I>(samples: I, offset: usize, max_sep: usize) -> Result<SeparationHistogram>
where
    I: IntoIterator,
    I::Item: Borrow<GraphSample>,
{
    let seps = samples
        .into_iter()
        .map(|g| {
            let g = g.borrow();
            check_target(g, offset).map(|t| sample_separation(g, t, max_sep))
        })
        .collect::<Result<Vec<_>>>()?;
    combine_histogram(&seps, max_sep)
}

/// Independent trials of one model, sampled in parallel and merged in trial order.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub lattice: Lattice,
    pub kernel: ConnectionKernel,
    pub seed: u64,
    pub trials: usize,
}

impl Ensemble {
    pub fn new(lattice: Lattice, kernel: ConnectionKernel, seed: u64, trials: usize) -> Result<Self> {
        if trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if kernel.dim() != lattice.dims().len() {
            return Err(Error::DimensionMismatch {
                expected: lattice.dims().len(),
                got: kernel.dim(),
            });
        }
        let kernel = kernel.validated()?;
        Ok(Self {
            lattice,
            kernel,
            seed,
            trials,
        })
    }

    pub fn sample(&self, t: usize) -> Result<GraphSample> {
        sample_graph(&self.lattice, &self.kernel, trial_seed(self.seed, t as u64))
    }

    /// Applies `stat` to every trial's graph; results come back in trial order.
    pub fn map<T, F>(&self, stat: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&GraphSample) -> Result<T> + Sync,
    {
        (0..self.trials)
            .into_par_iter()
            .map(|t| stat(&self.sample(t)?))
            .collect()
    }

    pub fn mean_degree(&self) -> Result<McEstimate> {
        let xs = self.map(|g| Ok(sample_mean_degree(g)))?;
        McEstimate::from_observations(&xs)
    }

    pub fn clustering(&self) -> Result<McEstimate> {
        combine_clustering(self.map(|g| Ok(clustering_blocks(g)))?)
    }

    pub fn chain_count(&self, offset: usize, k: usize) -> Result<McEstimate> {
        let xs = self.map(|g| {
            let t = check_target(g, offset)?;
            sample_chain_count(g, t, k).map(|c| c as f64)
        })?;
        McEstimate::from_observations(&xs)
    }

    pub fn separation_histogram(&self, offset: usize, max_sep: usize) -> Result<SeparationHistogram> {
        let seps = self.map(|g| check_target(g, offset).map(|t| sample_separation(g, t, max_sep)))?;
        combine_histogram(&seps, max_sep)
    }

    /// Histograms for several targets, one search per trial.
    pub fn separation_histograms(&self, offsets: &[usize], max_sep: usize) -> Result<Vec<SeparationHistogram>> {
        let per_trial = self.map(|g| {
            let targets = offsets
                .iter()
                .map(|&o| check_target(g, o))
                .collect::<Result<Vec<_>>>()?;
            let dist = bfs_lengths(g, max_sep + 1);
            Ok(targets
                .iter()
                .map(|&t| (dist[t] != usize::MAX).then(|| dist[t] - 1))
                .collect::<Vec<_>>())
        })?;
        (0..offsets.len())
            .map(|i| {
                let seps: Vec<_> = per_trial.iter().map(|row| row[i]).collect();
                combine_histogram(&seps, max_sep)
            })
            .collect()
    }

    /// Mean chain counts; entry `[i][j]` is for `offsets[i]` and `ks[j]`.
    pub fn chain_counts(&self, offsets: &[usize], ks: &[usize]) -> Result<Vec<Vec<McEstimate>>> {
        let per_trial = self.map(|g| {
            let mut row = Vec::with_capacity(offsets.len() * ks.len());
            for &o in offsets {
                let t = check_target(g, o)?;
                for &k in ks {
                    row.push(sample_chain_count(g, t, k)? as f64);
                }
            }
            Ok(row)
        })?;
        (0..offsets.len())
            .map(|i| {
                (0..ks.len())
                    .map(|j| {
                        let xs: Vec<f64> = per_trial.iter().map(|r| r[i * ks.len() + j]).collect();
                        McEstimate::from_observations(&xs)
                    })
                    .collect()
            })
            .collect()
    }
}
