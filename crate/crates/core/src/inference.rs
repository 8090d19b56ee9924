//! One- and two-sample statistics, their null moments, plug-in moment
//! estimation and p-values.

use alloc::format;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::clustering::{cluster_frame, ClusterOptions, Embedding};
use crate::error::{Error, Result};
use crate::graph::SymmetricColumns;
use crate::model::{expectation_matrix, BlockModelSpec, Membership};
use crate::spectral::{
    scaled_subspace_statistic, top_k_operator, top_k_warm, SpectralOptions, SpectralTopK, Transform,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentSource {
    Oracle,
    PlugIn,
}

/// Means and variances of one view's intra- and inter-block weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewMoments {
    pub mean_intra: f64,
    pub mean_inter: f64,
    pub sigma2_intra: f64,
    pub sigma2_inter: f64,
}

impl ViewMoments {
    pub fn of_spec(spec: &BlockModelSpec) -> Self {
        Self {
            mean_intra: spec.intra().mean(),
            mean_inter: spec.inter().mean(),
            sigma2_intra: spec.intra().variance(),
            sigma2_inter: spec.inter().variance(),
        }
    }
}

/// Moments entering the null distribution. `gamma_hat` is the factor with
/// `B2 = gamma B1`, i.e. the view-2 mean over the view-1 mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimates {
    pub views: [ViewMoments; 2],
    pub gamma_hat: f64,
    pub source: MomentSource,
}

impl MomentEstimates {
    pub fn new(views: [ViewMoments; 2], gamma_hat: f64, source: MomentSource) -> Result<Self> {
        let est = Self {
            views,
            gamma_hat,
            source,
        };
        est.validate()?;
        Ok(est)
    }

    /// Exact moments of two specs whose block means are proportional.
    pub fn oracle(spec1: &BlockModelSpec, spec2: &BlockModelSpec) -> Result<Self> {
        if spec1.k() != spec2.k() {
            return Err(Error::DimensionMismatch(format!(
                "views have K = {} and K = {}",
                spec1.k(),
                spec2.k()
            )));
        }
        let v1 = ViewMoments::of_spec(spec1);
        let v2 = ViewMoments::of_spec(spec2);
        let gamma = v2.mean_intra / v1.mean_intra;
        let inter_ratio = v2.mean_inter / v1.mean_inter;
        let consistent = if v1.mean_inter == 0.0 {
            v2.mean_inter == 0.0
        } else {
            (inter_ratio - gamma).abs() <= 1e-9 * gamma.abs()
        };
        if !consistent {
            return Err(Error::InvalidSpec(format!(
                "block means are not proportional: intra ratio {gamma}, inter ratio {inter_ratio}"
            )));
        }
        Self::new([v1, v2], gamma, MomentSource::Oracle)
    }

    /// Oracle moments for two views drawn from `spec` and `spec` scaled by `gamma`.
    pub fn oracle_scaled(spec: &BlockModelSpec, gamma: f64) -> Result<Self> {
        Self::oracle(spec, &spec.scaled(gamma)?)
    }

    /// The reciprocal factor, view-1 mean over view-2 mean.
    pub fn gamma_view1_over_view2(&self) -> f64 {
        1.0 / self.gamma_hat
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_hat.is_finite() && self.gamma_hat > 0.0) {
            return Err(Error::Domain(format!("gamma must be finite and positive, got {}", self.gamma_hat)));
        }
        for v in &self.views {
            if !(v.sigma2_intra >= 0.0 && v.sigma2_inter >= 0.0)
                || !v.sigma2_intra.is_finite()
                || !v.sigma2_inter.is_finite()
            {
                return Err(Error::Domain(format!(
                    "variances must be finite and nonnegative, got {} and {}",
                    v.sigma2_intra, v.sigma2_inter
                )));
            }
        }
        Ok(())
    }

    /// `(gamma^2 sigma_P^2(1) + sigma_P^2(2), gamma^2 sigma_Q^2(1) + sigma_Q^2(2))`.
    pub fn combined_variances(&self) -> (f64, f64) {
        let g2 = self.gamma_hat * self.gamma_hat;
        let [a, b] = self.views;
        (
            g2 * a.sigma2_intra + b.sigma2_intra,
            g2 * a.sigma2_inter + b.sigma2_inter,
        )
    }
}

fn check_nk(n: usize, k: usize) -> Result<()> {
    if n == 0 || k == 0 {
        return Err(Error::Domain(format!("n and K must be positive, got n = {n}, K = {k}")));
    }
    Ok(())
}

/// Null mean and variance of the two-sample statistic. A zero variance is
/// returned as is; [`two_sample_test`] refuses to calibrate against it.
pub fn null_moments_two_sample(est: &MomentEstimates, n: usize, k: usize) -> Result<(f64, f64)> {
    check_nk(n, k)?;
    est.validate()?;
    let (p, q) = est.combined_variances();
    let kf = k as f64;
    let mu = q + (p - q) / kf;
    let var = 2.0 / (n as f64 * kf) * (q * q + (p * p - q * q) / kf);
    Ok((mu, var))
}

/// Exact mean of `(1/(nK)) ||(gamma W1 - W2) V_E||_F^2` at finite `n`, for any
/// block sizes: `((K - 1) n Q + (n - K) P) / (nK)` with the combined variances.
/// It differs from the asymptotic mean by `-P/n`, from the zero diagonal.
pub fn linear_term_mean_exact(est: &MomentEstimates, n: usize, k: usize) -> Result<f64> {
    check_nk(n, k)?;
    est.validate()?;
    let (p, q) = est.combined_variances();
    let (nf, kf) = (n as f64, k as f64);
    Ok(((kf - 1.0) * nf * q + (nf - kf) * p) / (nf * kf))
}

/// Null mean and variance of the one-sample statistic.
pub fn null_moments_one_sample(sigma2_p: f64, sigma2_q: f64, n: usize, k: usize) -> Result<(f64, f64)> {
    check_nk(n, k)?;
    if !(sigma2_p >= 0.0 && sigma2_q >= 0.0) {
        return Err(Error::Domain(format!(
            "variances must be nonnegative, got {sigma2_p} and {sigma2_q}"
        )));
    }
    let kf = k as f64;
    let mu = sigma2_q + (sigma2_p - sigma2_q) / kf;
    let var = 2.0 / (n as f64 * kf) * (sigma2_q.powi(2) + (sigma2_p.powi(2) - sigma2_q.powi(2)) / kf);
    Ok((mu, var))
}

#[derive(Default, Clone, Copy)]
struct Accumulator {
    count: f64,
    sum: f64,
    sum_sq: f64,
}

impl Accumulator {
    fn mean(&self) -> f64 {
        self.sum / self.count
    }

    fn variance(&self) -> f64 {
        let m = self.mean();
        ((self.sum_sq - self.count * m * m) / (self.count - 1.0)).max(0.0)
    }
}

/// Intra and inter accumulators; the data are shifted by a pilot value to
/// keep the one-pass variance accurate.
fn view_moments<G: SymmetricColumns>(w: &G, m: &Membership) -> ViewMoments {
    let n = w.n();
    let labels = m.labels();
    let shift: f64 = if n > 1 { w.column(1)[0].into() } else { 0.0 };
    let mut acc = [Accumulator::default(); 2];
    for j in 0..n {
        let col = w.column(j);
        let lj = labels[j];
        for (i, &x) in col[..j].iter().enumerate() {
            let x = Into::<f64>::into(x) - shift;
            let a = &mut acc[usize::from(labels[i] != lj)];
            a.count += 1.0;
            a.sum += x;
            a.sum_sq += x * x;
        }
    }
    ViewMoments {
        mean_intra: acc[0].mean() + shift,
        mean_inter: acc[1].mean() + shift,
        sigma2_intra: acc[0].variance(),
        sigma2_inter: acc[1].variance(),
    }
}

fn check_block_pairs(m: &Membership) -> Result<()> {
    let sizes = m.block_sizes();
    for (a, &sa) in sizes.iter().enumerate() {
        for (b, &sb) in sizes.iter().enumerate().skip(a) {
            let edges = if a == b { sa * sa.saturating_sub(1) / 2 } else { sa * sb };
            if edges < 2 {
                return Err(Error::InsufficientData(format!(
                    "block pair ({}, {}) has {edges} node pairs; at least 2 are needed",
                    a + 1,
                    b + 1
                )));
            }
        }
    }
    Ok(())
}

/// Plug-in moments from two observed graphs and a membership for each.
/// `gamma_hat` averages the intra and inter mean ratios (view 2 over view 1),
/// weighted by the number of node pairs behind each.
pub fn estimate_moments<G1: SymmetricColumns, G2: SymmetricColumns>(
    w1: &G1,
    w2: &G2,
    m1: &Membership,
    m2: &Membership,
) -> Result<MomentEstimates> {
    let n = w1.n();
    if w2.n() != n || m1.n() != n || m2.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "graphs on {} and {} nodes, memberships on {} and {}",
            n,
            w2.n(),
            m1.n(),
            m2.n()
        )));
    }
    if m1.k() != m2.k() {
        return Err(Error::DimensionMismatch(format!("views have K = {} and K = {}", m1.k(), m2.k())));
    }
    check_block_pairs(m1)?;
    check_block_pairs(m2)?;
    let v1 = view_moments(w1, m1);
    let v2 = view_moments(w2, m2);
    let pairs_intra = |m: &Membership| m.block_sizes().iter().map(|&s| (s * (s - 1) / 2) as f64).sum::<f64>();
    let total = (n * (n - 1) / 2) as f64;
    let intra = 0.5 * (pairs_intra(m1) + pairs_intra(m2));
    let inter = total - intra;
    let mut num = 0.0;
    let mut den = 0.0;
    for (count, b1, b2) in [(intra, v1.mean_intra, v2.mean_intra), (inter, v1.mean_inter, v2.mean_inter)] {
        if b1 != 0.0 {
            num += count * b2 / b1;
            den += count;
        }
    }
    if den == 0.0 {
        return Err(Error::InsufficientData("view 1 has no nonzero block mean".into()));
    }
    MomentEstimates::new([v1, v2], num / den, MomentSource::PlugIn)
}

/// `2 (1 - Phi(|z|))`.
pub fn gaussian_two_sided_p(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::Domain(format!("z must be finite, got {z}")));
    }
    Ok(libm::erfc(z.abs() / core::f64::consts::SQRT_2))
}

#[derive(Debug, Clone, PartialEq)]
pub enum MomentChoice {
    Oracle(MomentEstimates),
    /// Cluster view 2 spectrally and estimate the moments from that membership.
    PlugIn { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestOptions {
    pub alpha: f64,
    pub transform: Transform,
    pub moments: MomentChoice,
    pub spectral: SpectralOptions,
    pub cluster: ClusterOptions,
}

impl TestOptions {
    pub fn oracle(est: MomentEstimates) -> Self {
        Self {
            moments: MomentChoice::Oracle(est),
            ..Self::plug_in(0)
        }
    }

    pub fn plug_in(seed: u64) -> Self {
        Self {
            alpha: 0.05,
            transform: Transform::Procrustes,
            moments: MomentChoice::PlugIn { seed },
            spectral: SpectralOptions::default(),
            cluster: ClusterOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: f64,
    pub mu_hat: f64,
    pub var_hat: f64,
    pub z: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub transform_used: Transform,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub moments: MomentEstimates,
    /// Either view's leading subspace was not uniquely determined.
    pub unstable_spectrum: bool,
}

/// Leading frames of both views; view 2 starts from the view-1 frame.
pub fn view_spectra<G1: SymmetricColumns, G2: SymmetricColumns>(
    w1: &G1,
    w2: &G2,
    k: usize,
    opts: &SpectralOptions,
) -> Result<(SpectralTopK, SpectralTopK)> {
    if w1.n() != w2.n() {
        return Err(Error::DimensionMismatch(format!(
            "graphs have {} and {} nodes",
            w1.n(),
            w2.n()
        )));
    }
    let top1 = top_k_operator(w1, k, opts)?;
    let top2 = top_k_warm(w2, k, opts, &top1.vectors)?;
    Ok((top1, top2))
}

/// Tests whether two graphs on the same nodes share their community memberships.
pub fn two_sample_test<G1: SymmetricColumns, G2: SymmetricColumns>(
    w1: &G1,
    w2: &G2,
    k: usize,
    opts: &TestOptions,
) -> Result<TestReport> {
    if k < 2 {
        return Err(Error::Domain(format!("the two-sample test needs K >= 2, got {k}")));
    }
    let (top1, top2) = view_spectra(w1, w2, k, &opts.spectral)?;
    two_sample_from_spectra(w1, w2, &top1, &top2, opts)
}

/// As [`two_sample_test`] with the leading frames already computed.
pub fn two_sample_from_spectra<G1: SymmetricColumns, G2: SymmetricColumns>(
    w1: &G1,
    w2: &G2,
    top1: &SpectralTopK,
    top2: &SpectralTopK,
    opts: &TestOptions,
) -> Result<TestReport> {
    let n = w1.n();
    let k = top2.k();
    let statistic = scaled_subspace_statistic(&top1.vectors, &top2.vectors, &top2.values, opts.transform)?;
    let moments = match &opts.moments {
        MomentChoice::Oracle(est) => *est,
        MomentChoice::PlugIn { seed } => {
            let fit = cluster_frame(&top2.vectors, k, Embedding::Adjacency, *seed, &opts.cluster)?;
            estimate_moments(w1, w2, &fit.membership, &fit.membership)?
        }
    };
    let (mu_hat, var_hat) = null_moments_two_sample(&moments, n, k)?;
    if !(var_hat > 0.0 && var_hat.is_finite()) {
        return Err(Error::ZeroVariance);
    }
    let z = (statistic - mu_hat) / var_hat.sqrt();
    let p_value = gaussian_two_sided_p(z)?;
    Ok(TestReport {
        statistic,
        mu_hat,
        var_hat,
        z,
        p_value,
        alpha: opts.alpha,
        reject: p_value < opts.alpha,
        transform_used: opts.transform,
        n,
        k,
        moments,
        unstable_spectrum: top1.unstable || top2.unstable,
    })
}

/// Leading frame of the expectation of `spec`.
pub fn expectation_spectrum(spec: &BlockModelSpec) -> Result<SpectralTopK> {
    top_k_operator(&expectation_matrix(spec), spec.k(), &SpectralOptions::default())
}

/// `(1/(nK)) ||(V_W U - V_E) Lambda_E||_F^2` with `U` the Procrustes rotation of `V_W` onto `V_E`.
pub fn one_sample_statistic(v_w: &DMatrix<f64>, expected: &SpectralTopK) -> Result<f64> {
    scaled_subspace_statistic(v_w, &expected.vectors, &expected.values, Transform::Procrustes)
}

/// `(n^s / K^{s+1}) sum_k |C_k|^{-s}`; equals one for equal blocks.
pub fn zeta(m: &Membership, s: i32) -> f64 {
    let n = m.n() as f64;
    let k = m.k() as f64;
    let sum: f64 = m.block_sizes().iter().map(|&c| (n / (k * c as f64)).powi(s)).sum();
    sum / k
}

/// Asymptotic mean of `||V_W U - V_E||_F^2` for a sample of `spec`.
pub fn expected_sin_theta_sq(spec: &BlockModelSpec) -> Result<f64> {
    let (bp, bq) = (spec.intra().mean(), spec.inter().mean());
    let (sp, sq) = (spec.intra().variance(), spec.inter().variance());
    if bp == bq {
        return Err(Error::Domain("b_P equals b_Q, so there is no community signal".into()));
    }
    let n = spec.n() as f64;
    let k = spec.k() as f64;
    let z1 = zeta(spec.membership(), 1);
    let z2 = zeta(spec.membership(), 2);
    let d = (bp - bq).powi(2) * (bq * k + bp - bq).powi(2);
    let c = bq * k + bp - 2.0 * bq;
    let first = k.powi(3) / n * (c * c - bq * bq) / d * z2 * sq;
    let second = k * k / n * (k * k * bq * bq * z1 * z1) / d * sq;
    let third = k * k / n * (c * c + (k - 1.0) * bq * bq) / d * z1 * (sp - sq);
    Ok(first + second + third)
}
