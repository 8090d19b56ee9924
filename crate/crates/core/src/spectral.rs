//! Leading eigenpairs of symmetric matrices, Procrustes alignment and
//! subspace distances.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph::{check_symmetric, SymmetricColumns, WeightedGraph};
use crate::rng::CounterRng;

/// Leading `K` eigenpairs of a symmetric matrix, ordered by decreasing `|value|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTopK {
    /// Signed eigenvalues.
    pub values: Vec<f64>,
    /// `n x K`, orthonormal columns.
    pub vectors: DMatrix<f64>,
    /// `|lambda_{K+1}|` (a Ritz estimate on the iterative path).
    pub residual_top: f64,
    /// `|lambda_K|` and `|lambda_{K+1}|` are tied, so the leading subspace is not unique.
    pub unstable: bool,
    /// Subspace-iteration sweeps used; zero for the dense solver.
    pub sweeps: usize,
}

impl SpectralTopK {
    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn n(&self) -> usize {
        self.vectors.nrows()
    }
}

/// Tuning for [`top_k_symmetric`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    /// Extra block columns beyond `K` for subspace iteration.
    pub oversample: usize,
    /// Converged when every leading residual is below `tol * |lambda_1|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Matrices with at most this many rows go straight to the dense solver.
    pub dense_below: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            oversample: 2,
            tol: 1e-11,
            max_iter: 400,
            dense_below: 128,
        }
    }
}

const TIE_TOL: f64 = 1e-10;
const MIN_SWEEPS: usize = 3;

/// Leading `k` eigenpairs of the weight matrix.
pub fn top_k_spectrum(graph: &WeightedGraph, k: usize) -> Result<SpectralTopK> {
    top_k_operator(graph, k, &SpectralOptions::default())
}

/// Leading `k` eigenpairs of any symmetric matrix.
pub fn top_k_symmetric(m: &DMatrix<f64>, k: usize, opts: &SpectralOptions) -> Result<SpectralTopK> {
    check_symmetric(m)?;
    top_k_unchecked(m, k, opts, None)
}

/// Leading `k` eigenpairs of a symmetric matrix in any storage.
pub fn top_k_operator<G: SymmetricColumns>(m: &G, k: usize, opts: &SpectralOptions) -> Result<SpectralTopK> {
    top_k_unchecked(m, k, opts, None)
}

/// As [`top_k_operator`], starting the iteration from the columns of `start`
/// (for example the frame of a closely related matrix).
pub fn top_k_warm<G: SymmetricColumns>(
    m: &G,
    k: usize,
    opts: &SpectralOptions,
    start: &DMatrix<f64>,
) -> Result<SpectralTopK> {
    if start.nrows() != m.n() {
        return Err(Error::DimensionMismatch(format!(
            "start frame has {} rows for a matrix of order {}",
            start.nrows(),
            m.n()
        )));
    }
    top_k_unchecked(m, k, opts, Some(start))
}

fn top_k_unchecked<G: SymmetricColumns>(
    m: &G,
    k: usize,
    opts: &SpectralOptions,
    start: Option<&DMatrix<f64>>,
) -> Result<SpectralTopK> {
    let n = m.n();
    if k == 0 || k >= n {
        return Err(Error::Domain(format!("need 1 <= K < n, got K = {k}, n = {n}")));
    }
    let block = block_width(k + opts.oversample.max(1));
    if n <= opts.dense_below || block >= n {
        return Ok(dense_top_k(&m.to_dense(), k));
    }
    match subspace_iteration(m, k, block, opts, start) {
        Some(top) => Ok(top),
        None => Ok(dense_top_k(&m.to_dense(), k)),
    }
}

/// Leading `k` eigenpairs from a full dense decomposition.
pub fn dense_top_k(m: &DMatrix<f64>, k: usize) -> SpectralTopK {
    let eig = SymmetricEigen::new(m.clone());
    let order = order_by_magnitude(eig.eigenvalues.as_slice());
    let values: Vec<f64> = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::from_fn(m.nrows(), k, |r, c| eig.eigenvectors[(r, order[c])]);
    fix_signs(&mut vectors);
    let next = order.get(k).map_or(0.0, |&i| eig.eigenvalues[i].abs());
    finish(values, vectors, next)
}

fn finish(values: Vec<f64>, vectors: DMatrix<f64>, next: f64) -> SpectralTopK {
    let top = values[0].abs().max(f64::MIN_POSITIVE);
    let last = values[values.len() - 1].abs();
    SpectralTopK {
        unstable: (last - next).abs() <= TIE_TOL * top,
        values,
        vectors,
        residual_top: next,
        sweeps: 0,
    }
}

fn order_by_magnitude(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    order
}

/// Makes the largest-magnitude entry of every column positive.
fn fix_signs(v: &mut DMatrix<f64>) {
    for mut col in v.column_iter_mut() {
        let mut best = 0.0f64;
        let mut sign = 1.0;
        for &x in col.iter() {
            if x.abs() > best {
                best = x.abs();
                sign = x.signum();
            }
        }
        if sign < 0.0 {
            col.neg_mut();
        }
    }
}

fn block_width(b: usize) -> usize {
    match b {
        0..=4 => 4,
        5..=8 => 8,
        _ => b,
    }
}

/// Block subspace iteration with Rayleigh-Ritz extraction. Returns `None`
/// when it fails to converge within `opts.max_iter` sweeps.
fn subspace_iteration<G: SymmetricColumns>(
    m: &G,
    k: usize,
    b: usize,
    opts: &SpectralOptions,
    start: Option<&DMatrix<f64>>,
) -> Option<SpectralTopK> {
    let n = m.n();
    let mut rng = CounterRng::from_path(0x5bec_7a1, &[n as u64, b as u64]);
    let mut q = DMatrix::from_fn(n, b, |_, _| rng.next_f64() - 0.5);
    if let Some(start) = start {
        for c in 0..start.ncols().min(b) {
            q.set_column(c, &start.column(c));
        }
    }
    orthonormalize(&mut q, &mut rng);
    for sweep in 1..=opts.max_iter {
        let z = sym_mul(m, &q);
        let h = q.tr_mul(&z);
        let h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(h);
        let order = order_by_magnitude(eig.eigenvalues.as_slice());
        let s = DMatrix::from_fn(b, b, |r, c| eig.eigenvectors[(r, order[c])]);
        let theta: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let x = &q * &s;
        let mx = &z * &s;
        let scale = theta[0].abs().max(f64::MIN_POSITIVE);
        // an unamplified block can hold exact eigenvectors of a non-dominant
        // eigenvalue (for example of a shifted low-rank matrix), so residuals
        // are only trusted after a few sweeps
        let converged = sweep >= MIN_SWEEPS && (0..k).all(|c| {
            let r = mx.column(c) - x.column(c) * theta[c];
            r.norm() <= opts.tol * scale
        });
        if converged {
            let mut vectors = x.columns(0, k).into_owned();
            fix_signs(&mut vectors);
            let mut top = finish(theta[..k].to_vec(), vectors, theta[k].abs());
            top.sweeps = sweep;
            return Some(top);
        }
        q = mx;
        orthonormalize(&mut q, &mut rng);
    }
    None
}

/// Two passes of modified Gram-Schmidt; columns that collapse are replaced
/// by fresh random directions.
fn orthonormalize(q: &mut DMatrix<f64>, rng: &mut CounterRng) {
    let (n, b) = q.shape();
    for c in 0..b {
        let mut attempts = 0;
        loop {
            let before = q.column(c).norm();
            for _ in 0..2 {
                for prev in 0..c {
                    let dot = q.column(prev).dot(&q.column(c));
                    let p = q.column(prev).into_owned();
                    q.column_mut(c).axpy(-dot, &p, 1.0);
                }
            }
            let after = q.column(c).norm();
            if after > 1e-10 * before && after > 0.0 {
                q.column_mut(c).unscale_mut(after);
                break;
            }
            attempts += 1;
            assert!(attempts < 16, "cannot extend an orthonormal basis of dimension {c} in R^{n}");
            for r in 0..n {
                q[(r, c)] = rng.next_f64() - 0.5;
            }
        }
    }
}

/// `M X` for symmetric `M`, as one dot product per column of `M`.
pub fn sym_mul<G: SymmetricColumns>(m: &G, x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, b) = x.shape();
    assert_eq!(m.n(), n, "dimension mismatch in sym_mul");
    match b {
        1..=4 => sym_mul_fixed::<G, 4>(m, x),
        5..=8 => sym_mul_fixed::<G, 8>(m, x),
        _ => sym_mul_wide(m, x),
    }
}

fn sym_mul_fixed<G: SymmetricColumns, const B: usize>(m: &G, x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, b) = x.shape();
    let mut xr = vec![[0.0f64; B]; n];
    for (i, row) in xr.iter_mut().enumerate() {
        for c in 0..b {
            row[c] = x[(i, c)];
        }
    }
    let mut y = DMatrix::zeros(n, b);
    let split = n - n % 4;
    for j in 0..n {
        // four partial sums keep the dot product off the add-latency chain
        let mut acc = [[0.0f64; B]; 4];
        let col = m.column(j);
        for (w4, x4) in col.chunks_exact(4).zip(xr.chunks_exact(4)) {
            for l in 0..4 {
                let w: f64 = w4[l].into();
                for c in 0..B {
                    acc[l][c] += w * x4[l][c];
                }
            }
        }
        for (&w, xi) in col[split..].iter().zip(&xr[split..]) {
            let w: f64 = w.into();
            for c in 0..B {
                acc[0][c] += w * xi[c];
            }
        }
        for c in 0..b {
            y[(j, c)] = (acc[0][c] + acc[1][c]) + (acc[2][c] + acc[3][c]);
        }
    }
    y
}

fn sym_mul_wide<G: SymmetricColumns>(m: &G, x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, b) = x.shape();
    let xt = x.transpose();
    let mut y = DMatrix::<f64>::zeros(n, b);
    for j in 0..n {
        let mut acc = DVector::<f64>::zeros(b);
        for (i, &w) in m.column(j).iter().enumerate() {
            acc.axpy(w.into(), &xt.column(i), 1.0);
        }
        y.row_mut(j).copy_from(&acc.transpose());
    }
    y
}

/// How the second frame is aligned onto the first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    /// Orthogonal Procrustes rotation (the default).
    #[default]
    Procrustes,
    /// `V1^T V2`.
    CrossGram,
    /// `(V2^T V1)^{-1}`.
    InverseCrossGram,
}

/// An orthogonal Procrustes solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Procrustes {
    pub rotation: DMatrix<f64>,
    /// Singular values of `V1^T V2` (cosines of the principal angles).
    pub cosines: Vec<f64>,
    /// `V1^T V2` lost rank, so the minimizer is not unique.
    pub rank_deficient: bool,
}

fn check_frames(v1: &DMatrix<f64>, v2: &DMatrix<f64>) -> Result<()> {
    if v1.shape() != v2.shape() {
        return Err(Error::DimensionMismatch(format!(
            "frames are {:?} and {:?}",
            v1.shape(),
            v2.shape()
        )));
    }
    Ok(())
}

/// The orthogonal `U` minimizing `||V1 U - V2||_F`: with `V1^T V2 = A S B^T`,
/// `U = A B^T`.
pub fn procrustes(v1: &DMatrix<f64>, v2: &DMatrix<f64>) -> Result<Procrustes> {
    check_frames(v1, v2)?;
    let svd = v1.tr_mul(v2).svd(true, true);
    let a = svd.u.as_ref().expect("left singular vectors requested");
    let bt = svd.v_t.as_ref().expect("right singular vectors requested");
    let cosines: Vec<f64> = svd.singular_values.iter().copied().collect();
    Ok(Procrustes {
        rotation: a * bt,
        rank_deficient: cosines.iter().any(|&s| s < 1e-12),
        cosines,
    })
}

/// The `K x K` matrix applied to `V1` before comparing with `V2`.
pub fn alignment(v1: &DMatrix<f64>, v2: &DMatrix<f64>, transform: Transform) -> Result<DMatrix<f64>> {
    check_frames(v1, v2)?;
    match transform {
        Transform::Procrustes => Ok(procrustes(v1, v2)?.rotation),
        Transform::CrossGram => Ok(v1.tr_mul(v2)),
        Transform::InverseCrossGram => v2
            .tr_mul(v1)
            .try_inverse()
            .ok_or_else(|| Error::Domain("V2^T V1 is singular".into())),
    }
}

/// `||V1 U - V2||_F` with `U` the Procrustes rotation.
pub fn sin_theta_frobenius(v1: &DMatrix<f64>, v2: &DMatrix<f64>) -> Result<f64> {
    let u = procrustes(v1, v2)?.rotation;
    Ok((v1 * u - v2).norm())
}

/// `(1/(nK)) ||(V1 U - V2) diag(lambda2)||_F^2`.
pub fn scaled_subspace_statistic(
    v1: &DMatrix<f64>,
    v2: &DMatrix<f64>,
    lambda2: &[f64],
    transform: Transform,
) -> Result<f64> {
    let (n, k) = v2.shape();
    if lambda2.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "{} eigenvalues for a frame with {k} columns",
            lambda2.len()
        )));
    }
    let u = alignment(v1, v2, transform)?;
    let mut d = v1 * u - v2;
    for (mut col, &l) in d.column_iter_mut().zip(lambda2) {
        col *= l;
    }
    Ok(d.norm_squared() / (n * k) as f64)
}

/// `(1/(nK)) ||(gamma W1 - W2) V||_F^2`.
pub fn linear_term<G1: SymmetricColumns, G2: SymmetricColumns>(
    w1: &G1,
    w2: &G2,
    gamma: f64,
    v: &DMatrix<f64>,
) -> Result<f64> {
    let (n, k) = v.shape();
    if w1.n() != n || w2.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "graphs on {} and {} nodes, frame with {n} rows",
            w1.n(),
            w2.n()
        )));
    }
    let d = sym_mul(w1, v) * gamma - sym_mul(w2, v);
    Ok(d.norm_squared() / (n * k) as f64)
}

/// `(1/(nK)) ||(W - E) V||_F^2` for a single view against its expectation.
pub fn linear_term_one_sample<G: SymmetricColumns>(w: &G, e: &WeightedGraph, v: &DMatrix<f64>) -> Result<f64> {
    linear_term(w, e, 1.0, v)
}

/// `||M V - V diag(values)||_F`.
pub fn residual_norm<G: SymmetricColumns>(m: &G, top: &SpectralTopK) -> f64 {
    let mv = sym_mul(m, &top.vectors);
    let lv = &top.vectors * DMatrix::from_diagonal(&DVector::from_column_slice(&top.values));
    (mv - lv).norm()
}
