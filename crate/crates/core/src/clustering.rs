//! Spectral clustering, permutation-aligned Hamming distance and planted
//! membership alternatives.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SymmetricColumns;
use crate::model::Membership;
use crate::rng::CounterRng;
use crate::spectral::{top_k_symmetric, top_k_operator, SpectralOptions, SpectralTopK};

/// Which leading frame the rows are taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Embedding {
    /// Leading eigenvectors of `W`.
    #[default]
    Adjacency,
    /// Leading eigenvectors of `D^{-1/2} W D^{-1/2}`.
    NormalizedLaplacian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterOptions {
    pub restarts: usize,
    pub max_iter: usize,
    /// Scale every embedding row to unit length before k-means.
    pub row_normalize: bool,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_iter: 300,
            row_normalize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub membership: Membership,
    /// k-means objective of the returned assignment.
    pub inertia: f64,
    pub restarts_used: usize,
    pub embedding: Embedding,
}

/// Clusters the rows of the leading `k`-dimensional embedding of `graph`.
pub fn spectral_cluster<G: SymmetricColumns>(
    graph: &G,
    k: usize,
    embedding: Embedding,
    seed: u64,
    opts: &ClusterOptions,
) -> Result<ClusteringResult> {
    let frame = embed(graph, k, embedding)?;
    cluster_frame(&frame.vectors, k, embedding, seed, opts)
}

/// The leading frame used by [`spectral_cluster`].
pub fn embed<G: SymmetricColumns>(graph: &G, k: usize, embedding: Embedding) -> Result<SpectralTopK> {
    match embedding {
        Embedding::Adjacency => top_k_operator(graph, k, &SpectralOptions::default()),
        Embedding::NormalizedLaplacian => {
            top_k_symmetric(&normalized_adjacency(graph)?, k, &SpectralOptions::default())
        }
    }
}

/// `D^{-1/2} W D^{-1/2}`.
pub fn normalized_adjacency<G: SymmetricColumns>(graph: &G) -> Result<DMatrix<f64>> {
    let mut w = graph.to_dense();
    let degrees: Vec<f64> = w.column_iter().map(|c| c.sum()).collect();
    if let Some(node) = degrees.iter().position(|&d| d <= 0.0) {
        return Err(Error::IsolatedNode { node });
    }
    let scale: Vec<f64> = degrees.iter().map(|&d| 1.0 / libm::sqrt(d)).collect();
    for j in 0..w.ncols() {
        for i in 0..w.nrows() {
            w[(i, j)] *= scale[i] * scale[j];
        }
    }
    Ok(w)
}

/// k-means on the rows of an already computed frame.
pub fn cluster_frame(
    frame: &DMatrix<f64>,
    k: usize,
    embedding: Embedding,
    seed: u64,
    opts: &ClusterOptions,
) -> Result<ClusteringResult> {
    let mut points = frame.clone();
    if opts.row_normalize {
        for mut row in points.row_iter_mut() {
            let norm = row.norm();
            if norm > 0.0 {
                row /= norm;
            }
        }
    }
    let fit = kmeans(&points, k, seed, opts)?;
    Ok(ClusteringResult {
        membership: fit.membership,
        inertia: fit.inertia,
        restarts_used: fit.restarts_used,
        embedding,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub membership: Membership,
    pub inertia: f64,
    pub restarts_used: usize,
}

/// Lloyd's algorithm with k-means++ seeding, `opts.restarts` times; keeps the
/// lowest inertia (ties go to the earliest restart). Restarts that end with
/// an empty cluster are discarded. Labels are numbered by first appearance.
pub fn kmeans(points: &DMatrix<f64>, k: usize, seed: u64, opts: &ClusterOptions) -> Result<KMeansFit> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::Domain(format!("k-means needs 1 <= K <= n, got K = {k}, n = {n}")));
    }
    let rows: Vec<Vec<f64>> = points.row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut best: Option<(Vec<usize>, f64)> = None;
    for restart in 0..opts.restarts.max(1) {
        let mut rng = CounterRng::from_path(seed, &[0x6b6d, restart as u64]);
        let Some((labels, inertia)) = lloyd(&rows, k, &mut rng, opts.max_iter) else {
            continue;
        };
        if best.as_ref().is_none_or(|(_, b)| inertia < *b) {
            best = Some((labels, inertia));
        }
    }
    let (labels, inertia) = best.ok_or_else(|| {
        Error::Clustering(format!("every one of {} restarts left a cluster empty", opts.restarts.max(1)))
    })?;
    Ok(KMeansFit {
        membership: Membership::from_labels(canonical_labels(&labels, k), k)?,
        inertia,
        restarts_used: opts.restarts.max(1),
    })
}

fn canonical_labels(labels: &[usize], k: usize) -> Vec<usize> {
    let mut map = vec![usize::MAX; k];
    let mut next = 0;
    labels
        .iter()
        .map(|&l| {
            if map[l] == usize::MAX {
                map[l] = next;
                next += 1;
            }
            map[l]
        })
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn lloyd(rows: &[Vec<f64>], k: usize, rng: &mut CounterRng, max_iter: usize) -> Option<(Vec<usize>, f64)> {
    let n = rows.len();
    let d = rows[0].len();
    let mut centers = seed_plus_plus(rows, k, rng);
    let mut labels = vec![0usize; n];
    for iter in 0..max_iter.max(1) {
        let mut changed = false;
        for (i, row) in rows.iter().enumerate() {
            let mut best = (f64::INFINITY, 0);
            for (c, center) in centers.iter().enumerate() {
                let dist = sq_dist(row, center);
                if dist < best.0 {
                    best = (dist, c);
                }
            }
            if labels[i] != best.1 || iter == 0 {
                changed |= labels[i] != best.1;
                labels[i] = best.1;
            }
        }
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (row, &l) in rows.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(row) {
                *s += x;
            }
        }
        if counts.contains(&0) {
            return None;
        }
        for ((center, sum), &count) in centers.iter_mut().zip(&sums).zip(&counts) {
            for (c, s) in center.iter_mut().zip(sum) {
                *c = s / count as f64;
            }
        }
        if !changed && iter > 0 {
            break;
        }
    }
    let inertia = rows.iter().zip(&labels).map(|(row, &l)| sq_dist(row, &centers[l])).sum();
    Some((labels, inertia))
}

fn seed_plus_plus(rows: &[Vec<f64>], k: usize, rng: &mut CounterRng) -> Vec<Vec<f64>> {
    let n = rows.len();
    let first = (rng.next_f64() * n as f64) as usize;
    let mut centers = vec![rows[first.min(n - 1)].clone()];
    let mut dist: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.next_f64() * total;
            let mut acc = 0.0;
            dist.iter()
                .position(|&w| {
                    acc += w;
                    acc > target
                })
                .unwrap_or(n - 1)
        } else {
            (rng.next_f64() * n as f64) as usize % n
        };
        centers.push(rows[pick].clone());
        let newest = centers.last().expect("just pushed");
        for (d, r) in dist.iter_mut().zip(rows) {
            *d = d.min(sq_dist(r, newest));
        }
    }
    centers
}

/// `C[a][b]` counts nodes with label `a` in `m1` and `b` in `m2`.
pub fn confusion_matrix(m1: &Membership, m2: &Membership) -> Result<Vec<Vec<usize>>> {
    if m1.n() != m2.n() || m1.k() != m2.k() {
        return Err(Error::Domain(format!(
            "memberships differ in shape: (n = {}, K = {}) vs (n = {}, K = {})",
            m1.n(),
            m1.k(),
            m2.n(),
            m2.k()
        )));
    }
    let k = m1.k();
    let mut c = vec![vec![0usize; k]; k];
    for (&a, &b) in m1.labels().iter().zip(m2.labels()) {
        c[a][b] += 1;
    }
    Ok(c)
}

/// Fraction of nodes whose labels disagree under the best relabeling of `m2`.
pub fn hamming_distance(m1: &Membership, m2: &Membership) -> Result<f64> {
    let c = confusion_matrix(m1, m2)?;
    let mismatches = if m1.k() <= 8 {
        min_mismatches_brute_force(&c).0
    } else {
        min_mismatches_assignment(&c)
    };
    Ok(mismatches as f64 / m1.n() as f64)
}

/// Minimum mismatch count over all `K!` relabelings, and how many relabelings attain it.
pub fn min_mismatches_brute_force(confusion: &[Vec<usize>]) -> (usize, usize) {
    let k = confusion.len();
    let n: usize = confusion.iter().flatten().sum();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = (usize::MAX, 0);
    let mut visit = |p: &[usize]| {
        let agree: usize = p.iter().enumerate().map(|(b, &a)| confusion[a][b]).sum();
        let cost = n - agree;
        if cost < best.0 {
            best = (cost, 1);
        } else if cost == best.0 {
            best.1 += 1;
        }
    };
    // Heap's algorithm
    let mut stack = vec![0usize; k];
    visit(&perm);
    let mut i = 1;
    while i < k {
        if stack[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(stack[i], i);
            }
            visit(&perm);
            stack[i] += 1;
            i = 1;
        } else {
            stack[i] = 0;
            i += 1;
        }
    }
    best
}

/// Minimum mismatch count via an optimal assignment on the confusion matrix.
pub fn min_mismatches_assignment(confusion: &[Vec<usize>]) -> usize {
    let n: usize = confusion.iter().flatten().sum();
    let max = confusion.iter().flatten().copied().max().unwrap_or(0) as i64;
    let cost: Vec<Vec<i64>> = confusion
        .iter()
        .map(|row| row.iter().map(|&c| max - c as i64).collect())
        .collect();
    let assign = hungarian(&cost);
    let agree: usize = assign.iter().enumerate().map(|(a, &b)| confusion[a][b]).sum();
    n - agree
}

/// Minimum-cost perfect assignment for a square cost matrix (Kuhn-Munkres with
/// potentials, `O(K^3)`). Returns the column assigned to every row.
pub fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let k = cost.len();
    // 1-based arrays; column 0 is a sentinel
    let mut u = vec![0i64; k + 1];
    let mut v = vec![0i64; k + 1];
    let mut row_of = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for r in 1..=k {
        row_of[0] = r;
        let mut j0 = 0;
        let mut minv = vec![i64::MAX; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=k {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; k];
    for j in 1..=k {
        if row_of[j] > 0 {
            assign[row_of[j] - 1] = j - 1;
        }
    }
    assign
}

/// Moves `round(ell n)` uniformly chosen nodes to uniformly chosen different
/// labels, so that the result sits at Hamming distance exactly
/// `round(ell n) / n` from `m` with the identity as the unique best relabeling.
pub fn plant_alternative(m: &Membership, ell: f64, seed: u64) -> Result<Membership> {
    const ATTEMPTS: u64 = 200;
    if !(0.0..=1.0).contains(&ell) {
        return Err(Error::Domain(format!("ell must lie in [0, 1], got {ell}")));
    }
    let n = m.n();
    let k = m.k();
    let moves = libm::round(ell * n as f64) as usize;
    if moves == 0 {
        return Ok(m.clone());
    }
    if k < 2 {
        return Err(Error::InfeasibleAlternative("a single community cannot be perturbed".into()));
    }
    for attempt in 0..ATTEMPTS {
        let mut rng = CounterRng::from_path(seed, &[0x706c, attempt]);
        let mut order: Vec<usize> = (0..n).collect();
        for i in 0..moves {
            let j = i + (rng.next_f64() * (n - i) as f64) as usize;
            order.swap(i, j.min(n - 1));
        }
        let mut labels = m.labels().to_vec();
        for &node in &order[..moves] {
            let shift = 1 + ((rng.next_f64() * (k - 1) as f64) as usize).min(k - 2);
            labels[node] = (labels[node] + shift) % k;
        }
        let Ok(candidate) = Membership::from_labels(labels, k) else {
            continue;
        };
        let c = confusion_matrix(m, &candidate)?;
        let exact = if k <= 8 {
            min_mismatches_brute_force(&c) == (moves, 1)
        } else {
            min_mismatches_assignment(&c) == moves
        };
        if exact {
            return Ok(candidate);
        }
    }
    Err(Error::InfeasibleAlternative(format!(
        "no relabeling of {moves} of {n} nodes keeps the distance at {moves}/{n} with a unique best permutation"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;
    use crate::model::{expectation_matrix, sample_graph, BlockModelSpec, WeightLaw};
    use proptest::prelude::*;

    fn random_membership(n: usize, k: usize, rng: &mut CounterRng) -> Membership {
        loop {
            let labels: Vec<usize> = (0..n).map(|_| (rng.next_f64() * k as f64) as usize).collect();
            if let Ok(m) = Membership::from_labels(labels, k) {
                return m;
            }
        }
    }

    #[test]
    fn hamming_basic_cases() {
        let m = Membership::from_labels(vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1], 2).unwrap();
        assert_eq!(hamming_distance(&m, &m).unwrap(), 0.0);
        let swapped = m.relabeled(&[1, 0]).unwrap();
        assert_eq!(hamming_distance(&m, &swapped).unwrap(), 0.0);
        let mut labels = m.labels().to_vec();
        labels[3] = 1;
        let flipped = Membership::from_labels(labels, 2).unwrap();
        assert_eq!(hamming_distance(&m, &flipped).unwrap(), 0.1);
        let other = Membership::from_labels(vec![0, 1, 2], 3).unwrap();
        assert!(hamming_distance(&m, &other).is_err());
    }

    #[test]
    fn assignment_matches_brute_force() {
        let mut rng = CounterRng::new(17);
        for trial in 0..2000 {
            let k = 1 + trial % 6;
            let n = k + (rng.next_f64() * 40.0) as usize;
            let a = random_membership(n, k, &mut rng);
            let b = random_membership(n, k, &mut rng);
            let c = confusion_matrix(&a, &b).unwrap();
            assert_eq!(min_mismatches_brute_force(&c).0, min_mismatches_assignment(&c));
        }
    }

    #[test]
    fn hungarian_known_instance() {
        let cost = vec![vec![4, 1, 3], vec![2, 0, 5], vec![3, 2, 2]];
        let a = hungarian(&cost);
        let total: i64 = a.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
        assert_eq!(total, 5);
    }

    #[test]
    fn hamming_large_k_uses_assignment() {
        let mut rng = CounterRng::new(3);
        let a = random_membership(200, 10, &mut rng);
        let perm = [3, 1, 4, 0, 9, 2, 6, 5, 8, 7];
        let b = a.relabeled(&perm).unwrap();
        assert_eq!(hamming_distance(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn triangle_inequality() {
        let mut rng = CounterRng::new(23);
        for trial in 0..1000 {
            let k = 2 + trial % 3;
            let n = 10 + (rng.next_f64() * 20.0) as usize;
            let a = random_membership(n, k, &mut rng);
            let b = random_membership(n, k, &mut rng);
            let c = random_membership(n, k, &mut rng);
            let ab = hamming_distance(&a, &b).unwrap();
            let bc = hamming_distance(&b, &c).unwrap();
            let ac = hamming_distance(&a, &c).unwrap();
            assert!(ac <= ab + bc + 1e-12);
            assert_eq!(ab, hamming_distance(&b, &a).unwrap());
        }
    }

    #[test]
    fn plant_alternative_exact_distance() {
        let m = Membership::proportional(500, &[1, 1]).unwrap();
        assert_eq!(plant_alternative(&m, 0.0, 1).unwrap(), m);
        let alt = plant_alternative(&m, 0.05, 1).unwrap();
        assert_eq!(hamming_distance(&m, &alt).unwrap(), 25.0 / 500.0);
        assert_eq!(plant_alternative(&m, 0.05, 1).unwrap(), alt);
        let m3 = Membership::proportional(90, &[1, 1, 1]).unwrap();
        let alt3 = plant_alternative(&m3, 0.1, 4).unwrap();
        assert_eq!(hamming_distance(&m3, &alt3).unwrap(), 9.0 / 90.0);
    }

    #[test]
    fn plant_alternative_rejects_ambiguous_half() {
        let m = Membership::proportional(40, &[1, 1]).unwrap();
        assert!(matches!(
            plant_alternative(&m, 0.5, 1),
            Err(Error::InfeasibleAlternative(_))
        ));
        assert!(plant_alternative(&m, 1.5, 1).is_err());
    }

    #[test]
    fn noiseless_expectation_is_recovered() {
        for (sizes, p, q) in [(vec![30usize, 20], 0.5, 0.1), (vec![40, 25, 35], 0.9, 0.3), (vec![300, 212], 0.2, 0.19)] {
            let truth = Membership::from_block_sizes(&sizes).unwrap();
            let spec = BlockModelSpec::new(
                truth.clone(),
                WeightLaw::bernoulli(p).unwrap(),
                WeightLaw::bernoulli(q).unwrap(),
                2.0,
            )
            .unwrap();
            let e = expectation_matrix(&spec);
            for embedding in [Embedding::Adjacency, Embedding::NormalizedLaplacian] {
                let fit = spectral_cluster(&e, sizes.len(), embedding, 5, &ClusterOptions::default()).unwrap();
                assert_eq!(hamming_distance(&truth, &fit.membership).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn single_cluster_inertia_is_total_scatter() {
        let mut rng = CounterRng::new(8);
        let pts = DMatrix::from_fn(30, 2, |_, _| rng.next_f64());
        let fit = kmeans(&pts, 1, 0, &ClusterOptions::default()).unwrap();
        let mean = pts.row_mean();
        let scatter: f64 = pts.row_iter().map(|r| (r - &mean).norm_squared()).sum();
        assert!((fit.inertia - scatter).abs() < 1e-12);
        assert_eq!(fit.membership.block_sizes(), &[30]);
    }

    #[test]
    fn kmeans_is_deterministic_and_separates_clouds() {
        let mut rng = CounterRng::new(9);
        let pts = DMatrix::from_fn(60, 2, |i, _| rng.next_f64() * 0.1 + if i < 25 { 0.0 } else { 5.0 });
        let a = kmeans(&pts, 2, 42, &ClusterOptions::default()).unwrap();
        let b = kmeans(&pts, 2, 42, &ClusterOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.membership.block_sizes(), &[25, 35]);
    }

    #[test]
    fn sampled_graph_is_clustered_accurately() {
        let truth = Membership::proportional(400, &[1, 1]).unwrap();
        let spec = BlockModelSpec::new(
            truth.clone(),
            WeightLaw::bernoulli(0.5).unwrap(),
            WeightLaw::bernoulli(0.1).unwrap(),
            2.0,
        )
        .unwrap();
        for seed in 0..5 {
            let g = sample_graph(&spec, seed).unwrap();
            let fit = spectral_cluster(&g, 2, Embedding::Adjacency, seed, &ClusterOptions::default()).unwrap();
            assert!(hamming_distance(&truth, &fit.membership).unwrap() <= 0.01);
        }
    }

    #[test]
    fn laplacian_rejects_isolated_nodes() {
        let g = WeightedGraph::from_upper(4, |i, j| if i == 0 || j == 0 { 0.0 } else { 1.0 });
        assert!(matches!(normalized_adjacency(&g), Err(Error::IsolatedNode { node: 0 })));
    }

    proptest! {
        #[test]
        fn hamming_is_orbit_invariant(seed in any::<u64>(), k in 2usize..6) {
            let mut rng = CounterRng::new(seed);
            let a = random_membership(25, k, &mut rng);
            let b = random_membership(25, k, &mut rng);
            let mut perm: Vec<usize> = (0..k).collect();
            for i in (1..k).rev() {
                let j = (rng.next_f64() * (i + 1) as f64) as usize;
                perm.swap(i, j.min(i));
            }
            let d = hamming_distance(&a, &b).unwrap();
            prop_assert_eq!(d, hamming_distance(&a, &b.relabeled(&perm).unwrap()).unwrap());
            prop_assert!((0.0..=1.0).contains(&d));
        }
    }
}
