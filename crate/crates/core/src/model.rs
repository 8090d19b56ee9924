//! Homogeneous weighted stochastic block models.
//!
//! A model assigns every node to one of `K` communities. The weight of a
//! pair `i < j` is drawn from the intra-community law when both endpoints
//! share a label and from the inter-community law otherwise; the diagonal is
//! zero.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;
use rand::RngCore;
use rand_distr::{ChiSquared, Distribution, Normal};
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{mirror_upper, CompactGraph, SymmetricColumns, Weight, WeightedGraph};
use crate::rng::{self, CounterRng};

/// Node-to-community assignment. Labels are 0-based internally.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Membership {
    labels: Vec<usize>,
    block_sizes: Vec<usize>,
}

impl Membership {
    /// Builds a membership from 0-based labels in `0..k`; every community must be nonempty.
    pub fn from_labels(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidSpec("K must be at least 1".into()));
        }
        let mut block_sizes = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            if l >= k {
                return Err(Error::InvalidSpec(format!(
                    "node {i} has label {l}, outside 0..{k}"
                )));
            }
            block_sizes[l] += 1;
        }
        if let Some(empty) = block_sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidSpec(format!("community {empty} is empty")));
        }
        Ok(Self {
            labels,
            block_sizes,
        })
    }

    /// Contiguous blocks: the first `sizes[0]` nodes get label 0, and so on.
    pub fn from_block_sizes(sizes: &[usize]) -> Result<Self> {
        let labels = sizes
            .iter()
            .enumerate()
            .flat_map(|(k, &s)| core::iter::repeat_n(k, s))
            .collect();
        Self::from_labels(labels, sizes.len())
    }

    /// Contiguous blocks on `n` nodes with sizes proportional to `ratio`.
    ///
    /// Rounding remainders go to the earliest blocks, so `(n = 2000, [2, 1])`
    /// yields sizes `[1334, 666]`.
    pub fn proportional(n: usize, ratio: &[usize]) -> Result<Self> {
        let total: usize = ratio.iter().sum();
        if ratio.is_empty() || total == 0 {
            return Err(Error::InvalidSpec("block ratio must be nonempty and positive".into()));
        }
        let mut sizes: Vec<usize> = ratio.iter().map(|&r| n * r / total).collect();
        let mut missing = n - sizes.iter().sum::<usize>();
        for s in sizes.iter_mut() {
            if missing == 0 {
                break;
            }
            *s += 1;
            missing -= 1;
        }
        Self::from_block_sizes(&sizes)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> usize {
        self.labels[node]
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    /// Members of each community, in increasing node order.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks: Vec<Vec<usize>> = self.block_sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (i, &l) in self.labels.iter().enumerate() {
            blocks[l].push(i);
        }
        blocks
    }

    /// The `n x K` one-hot matrix `Z`.
    pub fn one_hot(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n(), self.k(), |i, k| f64::from(u8::from(self.labels[i] == k)))
    }

    /// `Z (Z^T Z)^{-1/2}`: orthonormal columns spanning the block indicators.
    pub fn normalized_indicator(&self) -> DMatrix<f64> {
        let scale: Vec<f64> = self.block_sizes.iter().map(|&s| 1.0 / (s as f64).sqrt()).collect();
        DMatrix::from_fn(self.n(), self.k(), |i, k| {
            if self.labels[i] == k {
                scale[k]
            } else {
                0.0
            }
        })
    }

    /// Relabels communities: label `l` becomes `perm[l]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.k() {
            return Err(Error::DimensionMismatch(format!(
                "permutation of length {} for K = {}",
                perm.len(),
                self.k()
            )));
        }
        Self::from_labels(self.labels.iter().map(|&l| perm[l]).collect(), self.k())
    }
}

/// Support of a weight law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    UnitInterval,
    NonNegative,
    Real,
}

impl Support {
    pub fn contains(self, x: f64) -> bool {
        match self {
            Support::UnitInterval => (0.0..=1.0).contains(&x),
            Support::NonNegative => x >= 0.0,
            Support::Real => x.is_finite(),
        }
    }
}

type Sampler = dyn Fn(&mut dyn RngCore) -> f64 + Send + Sync;

/// A user-supplied weight law with declared moments.
#[derive(Clone)]
pub struct CustomLaw {
    mean: f64,
    variance: f64,
    support: Support,
    sampler: Arc<Sampler>,
}

impl CustomLaw {
    pub const CHECK_DRAWS: usize = 10_000;
    pub const CHECK_SE: f64 = 5.0;

    /// Wraps `sampler`, checking the declared mean and variance against
    /// [`Self::CHECK_DRAWS`] draws (each within [`Self::CHECK_SE`] standard errors).
    pub fn new(
        mean: f64,
        variance: f64,
        support: Support,
        sampler: impl Fn(&mut dyn RngCore) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !mean.is_finite() || !variance.is_finite() || variance < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "custom law needs finite mean and nonnegative variance, got ({mean}, {variance})"
            )));
        }
        let law = Self {
            mean,
            variance,
            support,
            sampler: Arc::new(sampler),
        };
        law.check_moments()?;
        Ok(law)
    }

    fn check_moments(&self) -> Result<()> {
        let mut rng = CounterRng::from_path(0x5eed, &[0xc0ffee]);
        let draws: Vec<f64> = (0..Self::CHECK_DRAWS).map(|_| (self.sampler)(&mut rng)).collect();
        if let Some(bad) = draws.iter().find(|&&x| !self.support.contains(x)) {
            return Err(Error::InvalidSpec(format!(
                "custom law produced {bad}, outside its declared support {:?}",
                self.support
            )));
        }
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let m2 = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m4 = draws.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        let se_mean = (self.variance.max(m2) / n).sqrt();
        let se_var = ((m4 - m2 * m2).max(0.0) / n).sqrt();
        let tol = |se: f64| Self::CHECK_SE * se + 1e-12;
        if (mean - self.mean).abs() > tol(se_mean) {
            return Err(Error::InvalidSpec(format!(
                "custom law declares mean {} but {} draws give {mean}",
                self.mean,
                Self::CHECK_DRAWS
            )));
        }
        if (m2 - self.variance).abs() > tol(se_var) {
            return Err(Error::InvalidSpec(format!(
                "custom law declares variance {} but {} draws give {m2}",
                self.variance,
                Self::CHECK_DRAWS
            )));
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        (self.sampler)(rng)
    }
}

impl fmt::Debug for CustomLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomLaw")
            .field("mean", &self.mean)
            .field("variance", &self.variance)
            .field("support", &self.support)
            .finish_non_exhaustive()
    }
}

/// Edge-weight distribution.
#[derive(Debug, Clone)]
pub enum WeightLaw {
    Bernoulli { p: f64 },
    ChiSquare { df: f64 },
    Gaussian { mean: f64, sd: f64 },
    /// Takes `high` with probability `p`, else `low`.
    TwoPoint { low: f64, high: f64, p: f64 },
    Custom(CustomLaw),
}

impl WeightLaw {
    pub fn bernoulli(p: f64) -> Result<Self> {
        let law = WeightLaw::Bernoulli { p };
        law.validate()?;
        Ok(law)
    }

    pub fn chi_square(df: f64) -> Result<Self> {
        let law = WeightLaw::ChiSquare { df };
        law.validate()?;
        Ok(law)
    }

    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        let law = WeightLaw::Gaussian { mean, sd };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            WeightLaw::Bernoulli { p } => (0.0..=1.0).contains(&p),
            WeightLaw::ChiSquare { df } => df.is_finite() && df > 0.0,
            WeightLaw::Gaussian { mean, sd } => mean.is_finite() && sd.is_finite() && sd >= 0.0,
            WeightLaw::TwoPoint { low, high, p } => {
                low.is_finite() && high.is_finite() && (0.0..=1.0).contains(&p)
            }
            WeightLaw::Custom(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!("invalid parameters for {self:?}")))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            WeightLaw::Bernoulli { .. } => "bernoulli",
            WeightLaw::ChiSquare { .. } => "chi_square",
            WeightLaw::Gaussian { .. } => "gaussian",
            WeightLaw::TwoPoint { .. } => "two_point",
            WeightLaw::Custom(_) => "custom",
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            WeightLaw::Bernoulli { p } => p,
            WeightLaw::ChiSquare { df } => df,
            WeightLaw::Gaussian { mean, .. } => mean,
            WeightLaw::TwoPoint { low, high, p } => low + p * (high - low),
            WeightLaw::Custom(ref c) => c.mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            WeightLaw::Bernoulli { p } => p * (1.0 - p),
            WeightLaw::ChiSquare { df } => 2.0 * df,
            WeightLaw::Gaussian { sd, .. } => sd * sd,
            WeightLaw::TwoPoint { low, high, p } => p * (1.0 - p) * (high - low) * (high - low),
            WeightLaw::Custom(ref c) => c.variance,
        }
    }

    pub fn support(&self) -> Support {
        match *self {
            WeightLaw::Bernoulli { .. } => Support::UnitInterval,
            WeightLaw::ChiSquare { .. } => Support::NonNegative,
            WeightLaw::Gaussian { .. } => Support::Real,
            WeightLaw::TwoPoint { low, high, .. } => {
                if low >= 0.0 && high >= 0.0 && low <= 1.0 && high <= 1.0 {
                    Support::UnitInterval
                } else if low >= 0.0 && high >= 0.0 {
                    Support::NonNegative
                } else {
                    Support::Real
                }
            }
            WeightLaw::Custom(ref c) => c.support,
        }
    }

    /// The law of the second view under a mean scale factor `gamma`.
    ///
    /// Bernoulli and chi-square stay in their family (`p -> gamma p`,
    /// `df -> gamma df`); the Gaussian shifts its mean; two-point and custom
    /// laws scale the variable itself.
    pub fn scaled(&self, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Domain(format!("scale factor must be positive, got {gamma}")));
        }
        let law = match *self {
            WeightLaw::Bernoulli { p } => WeightLaw::Bernoulli { p: gamma * p },
            WeightLaw::ChiSquare { df } => WeightLaw::ChiSquare { df: gamma * df },
            WeightLaw::Gaussian { mean, sd } => WeightLaw::Gaussian { mean: gamma * mean, sd },
            WeightLaw::TwoPoint { low, high, p } => WeightLaw::TwoPoint {
                low: gamma * low,
                high: gamma * high,
                p,
            },
            WeightLaw::Custom(ref c) => {
                let inner = c.sampler.clone();
                WeightLaw::Custom(CustomLaw {
                    mean: gamma * c.mean,
                    variance: gamma * gamma * c.variance,
                    support: c.support,
                    sampler: Arc::new(move |rng: &mut dyn RngCore| gamma * inner(rng)),
                })
            }
        };
        law.validate().map_err(|_| {
            Error::InvalidSpec(format!("scaling {self:?} by {gamma} leaves the parameter range"))
        })?;
        Ok(law)
    }

    fn prepare(&self) -> Result<PreparedLaw> {
        self.validate()?;
        Ok(match *self {
            WeightLaw::Bernoulli { p } => PreparedLaw::Bernoulli(p),
            WeightLaw::ChiSquare { df } => PreparedLaw::ChiSquare(
                ChiSquared::new(df).map_err(|e| Error::InvalidSpec(format!("{e}")))?,
            ),
            WeightLaw::Gaussian { mean, sd } => PreparedLaw::Gaussian(
                Normal::new(mean, sd).map_err(|e| Error::InvalidSpec(format!("{e}")))?,
            ),
            WeightLaw::TwoPoint { low, high, p } => PreparedLaw::TwoPoint { low, high, p },
            WeightLaw::Custom(ref c) => PreparedLaw::Custom(c.sampler.clone()),
        })
    }
}

enum PreparedLaw {
    Bernoulli(f64),
    ChiSquare(ChiSquared<f64>),
    Gaussian(Normal<f64>),
    TwoPoint { low: f64, high: f64, p: f64 },
    Custom(Arc<Sampler>),
}

impl PreparedLaw {
    #[inline]
    fn draw(&self, rng: &mut CounterRng) -> f64 {
        match self {
            PreparedLaw::Bernoulli(p) => f64::from(u8::from(rng.next_f64() < *p)),
            PreparedLaw::ChiSquare(d) => d.sample(rng),
            PreparedLaw::Gaussian(d) => d.sample(rng),
            PreparedLaw::TwoPoint { low, high, p } => {
                if rng.next_f64() < *p {
                    *high
                } else {
                    *low
                }
            }
            PreparedLaw::Custom(f) => f(rng),
        }
    }
}

/// A homogeneous weighted SBM.
#[derive(Debug, Clone)]
pub struct BlockModelSpec {
    membership: Membership,
    intra: WeightLaw,
    inter: WeightLaw,
    beta: f64,
}

impl BlockModelSpec {
    /// Default block-balance bound used when none is given.
    pub const DEFAULT_BETA: f64 = 2.0;

    pub fn new(membership: Membership, intra: WeightLaw, inter: WeightLaw, beta: f64) -> Result<Self> {
        intra.validate()?;
        inter.validate()?;
        if !(beta.is_finite() && beta >= 1.0) {
            return Err(Error::InvalidSpec(format!("beta must be >= 1, got {beta}")));
        }
        let n = membership.n() as f64;
        let k = membership.k() as f64;
        let (lo, hi) = (n / (beta * k), beta * n / k);
        for (c, &size) in membership.block_sizes().iter().enumerate() {
            let s = size as f64;
            if s < lo - 1e-9 || s > hi + 1e-9 {
                return Err(Error::InvalidSpec(format!(
                    "block {c} has {size} nodes, outside the balance range [{lo:.3}, {hi:.3}] for beta = {beta}"
                )));
            }
        }
        Ok(Self {
            membership,
            intra,
            inter,
            beta,
        })
    }

    pub fn n(&self) -> usize {
        self.membership.n()
    }

    pub fn k(&self) -> usize {
        self.membership.k()
    }

    pub fn membership(&self) -> &Membership {
        &self.membership
    }

    pub fn intra(&self) -> &WeightLaw {
        &self.intra
    }

    pub fn inter(&self) -> &WeightLaw {
        &self.inter
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Checks the ordering `intra mean > inter mean > 0` required for testing.
    pub fn validate_testing_regime(&self) -> Result<()> {
        let (bp, bq) = (self.intra.mean(), self.inter.mean());
        if bp > bq && bq > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!(
                "testing requires intra mean > inter mean > 0, got {bp} and {bq}"
            )))
        }
    }

    /// Same laws and beta, different membership.
    pub fn with_membership(&self, membership: Membership) -> Result<Self> {
        Self::new(membership, self.intra.clone(), self.inter.clone(), self.beta)
    }

    /// Same laws, contiguous blocks of `n` nodes in the current block proportions.
    pub fn rescaled(&self, n: usize) -> Result<Self> {
        self.with_membership(Membership::proportional(n, self.membership.block_sizes())?)
    }

    /// Both laws scaled by `gamma` (see [`WeightLaw::scaled`]).
    pub fn scaled(&self, gamma: f64) -> Result<Self> {
        Self::new(
            self.membership.clone(),
            self.intra.scaled(gamma)?,
            self.inter.scaled(gamma)?,
            self.beta,
        )
    }

    /// The `K x K` block-mean matrix `(b_P - b_Q) I + b_Q 1 1^T`.
    pub fn block_mean_matrix(&self) -> DMatrix<f64> {
        let (bp, bq) = (self.intra.mean(), self.inter.mean());
        DMatrix::from_fn(self.k(), self.k(), |a, b| if a == b { bp } else { bq })
    }
}

/// Draws a graph from `spec`. Edge `{i, j}` uses its own stream keyed by
/// `(seed, i, j)`, so the result does not depend on evaluation order.
pub fn sample_graph(spec: &BlockModelSpec, seed: u64) -> Result<WeightedGraph> {
    let sampler = EdgeSampler::new(spec)?;
    let n = spec.n();
    let mut m = DMatrix::<f64>::zeros(n, n);
    {
        let data = m.as_mut_slice();
        for j in 1..n {
            sampler.fill_column(seed, j, &mut data[j * n..j * n + j])?;
        }
    }
    mirror_upper(m.as_mut_slice(), n);
    Ok(WeightedGraph::from_symmetric_unchecked(m))
}

/// Same draws as [`sample_graph`], written into storage that is reused
/// across calls.
pub fn sample_into<T: Weight>(spec: &BlockModelSpec, seed: u64, out: &mut CompactGraph<T>) -> Result<()> {
    let sampler = EdgeSampler::new(spec)?;
    let n = spec.n();
    if out.n() != n {
        *out = CompactGraph::zeros(n);
    }
    let data = out.data_mut();
    for j in 1..n {
        sampler.fill_column(seed, j, &mut data[j * n..j * n + j])?;
    }
    mirror_upper(data, n);
    Ok(())
}

/// Whether every weight `spec` can produce is a small nonnegative integer,
/// so that graphs fit in `CompactGraph<u8>`.
pub fn fits_u8(spec: &BlockModelSpec) -> bool {
    let small = |law: &WeightLaw| match *law {
        WeightLaw::Bernoulli { .. } => true,
        WeightLaw::TwoPoint { low, high, .. } => [low, high].iter().all(|&v| u8::from_weight(v).is_some()),
        _ => false,
    };
    small(&spec.intra) && small(&spec.inter)
}

struct EdgeSampler<'a> {
    intra: PreparedLaw,
    inter: PreparedLaw,
    labels: &'a [usize],
}

impl<'a> EdgeSampler<'a> {
    fn new(spec: &'a BlockModelSpec) -> Result<Self> {
        Ok(Self {
            intra: spec.intra.prepare()?,
            inter: spec.inter.prepare()?,
            labels: spec.membership.labels(),
        })
    }

    #[inline]
    fn fill_column<T: Weight>(&self, seed: u64, j: usize, col: &mut [T]) -> Result<()> {
        let key = rng::row_key(seed, j);
        let lj = self.labels[j];
        for (i, slot) in col.iter_mut().enumerate() {
            let mut stream = rng::edge_stream(key, i);
            let w = if self.labels[i] == lj {
                self.intra.draw(&mut stream)
            } else {
                self.inter.draw(&mut stream)
            };
            *slot = T::from_weight(w)
                .ok_or_else(|| Error::Domain(format!("weight {w} does not fit the packed storage")))?;
        }
        Ok(())
    }
}

/// `E = Z B Z^T - diag(Z B Z^T)`, the mean of a sampled graph.
pub fn expectation_matrix(spec: &BlockModelSpec) -> WeightedGraph {
    let (bp, bq) = (spec.intra.mean(), spec.inter.mean());
    let labels = spec.membership.labels();
    WeightedGraph::from_upper(spec.n(), |i, j| if labels[i] == labels[j] { bp } else { bq })
}

/// Renyi divergence of order 1/2 between two Bernoulli laws:
/// `-2 log(sqrt(p q) + sqrt((1 - p)(1 - q)))`.
pub fn renyi_half_divergence(p_law: &WeightLaw, q_law: &WeightLaw) -> Result<f64> {
    match (p_law, q_law) {
        (WeightLaw::Bernoulli { p }, WeightLaw::Bernoulli { p: q }) => {
            let affinity = (p * q).sqrt() + ((1.0 - p) * (1.0 - q)).sqrt();
            Ok((-2.0 * affinity.ln()).max(0.0))
        }
        _ => Err(Error::UnsupportedLaw(format!(
            "Renyi divergence is only implemented for two Bernoulli laws, got {} and {}",
            p_law.name(),
            q_law.name()
        ))),
    }
}

/// Signal-to-noise ratio `(p - q)^2 / p` of an unweighted SBM.
pub fn snr(p: f64, q: f64) -> Result<f64> {
    if !(0.0 <= q && q <= p && 0.0 < p && p <= 1.0) {
        return Err(Error::Domain(format!("snr requires 0 <= q <= p <= 1 and p > 0, got p = {p}, q = {q}")));
    }
    Ok((p - q).powi(2) / p)
}

/// Serializable form of a [`WeightLaw`] (custom laws excluded).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum LawDocument {
    Bernoulli { p: f64 },
    ChiSquare { df: f64 },
    Gaussian { mean: f64, sd: f64 },
    TwoPoint { low: f64, high: f64, p: f64 },
}

impl TryFrom<&WeightLaw> for LawDocument {
    type Error = Error;

    fn try_from(law: &WeightLaw) -> Result<Self> {
        Ok(match *law {
            WeightLaw::Bernoulli { p } => LawDocument::Bernoulli { p },
            WeightLaw::ChiSquare { df } => LawDocument::ChiSquare { df },
            WeightLaw::Gaussian { mean, sd } => LawDocument::Gaussian { mean, sd },
            WeightLaw::TwoPoint { low, high, p } => LawDocument::TwoPoint { low, high, p },
            WeightLaw::Custom(_) => {
                return Err(Error::UnsupportedLaw("custom laws cannot be serialized".into()))
            }
        })
    }
}

impl TryFrom<LawDocument> for WeightLaw {
    type Error = Error;

    fn try_from(doc: LawDocument) -> Result<Self> {
        let law = match doc {
            LawDocument::Bernoulli { p } => WeightLaw::Bernoulli { p },
            LawDocument::ChiSquare { df } => WeightLaw::ChiSquare { df },
            LawDocument::Gaussian { mean, sd } => WeightLaw::Gaussian { mean, sd },
            LawDocument::TwoPoint { low, high, p } => WeightLaw::TwoPoint { low, high, p },
        };
        law.validate()?;
        Ok(law)
    }
}

/// JSON shape of a model specification:
/// `{n, K, block_sizes, intra: {kind, params}, inter: {kind, params}}`,
/// plus optional `beta` and 1-based `labels` for non-contiguous blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecDocument {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub block_sizes: Vec<usize>,
    pub intra: LawDocument,
    pub inter: LawDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
}

impl TryFrom<SpecDocument> for BlockModelSpec {
    type Error = Error;

    fn try_from(doc: SpecDocument) -> Result<Self> {
        if doc.block_sizes.len() != doc.k {
            return Err(Error::InvalidSpec(format!(
                "K = {} but {} block sizes given",
                doc.k,
                doc.block_sizes.len()
            )));
        }
        if doc.block_sizes.iter().sum::<usize>() != doc.n {
            return Err(Error::InvalidSpec(format!(
                "block sizes sum to {}, expected n = {}",
                doc.block_sizes.iter().sum::<usize>(),
                doc.n
            )));
        }
        let membership = match doc.labels {
            None => Membership::from_block_sizes(&doc.block_sizes)?,
            Some(labels) => {
                if labels.len() != doc.n || labels.iter().any(|&l| l == 0) {
                    return Err(Error::InvalidSpec("labels must be n values in 1..=K".into()));
                }
                let m = Membership::from_labels(labels.into_iter().map(|l| l - 1).collect(), doc.k)?;
                if m.block_sizes() != doc.block_sizes.as_slice() {
                    return Err(Error::InvalidSpec("labels disagree with block_sizes".into()));
                }
                m
            }
        };
        BlockModelSpec::new(
            membership,
            doc.intra.try_into()?,
            doc.inter.try_into()?,
            doc.beta.unwrap_or(BlockModelSpec::DEFAULT_BETA),
        )
    }
}

impl TryFrom<&BlockModelSpec> for SpecDocument {
    type Error = Error;

    fn try_from(spec: &BlockModelSpec) -> Result<Self> {
        let m = spec.membership();
        let contiguous = Membership::from_block_sizes(m.block_sizes())? == *m;
        Ok(SpecDocument {
            n: spec.n(),
            k: spec.k(),
            block_sizes: m.block_sizes().to_vec(),
            intra: (&spec.intra).try_into()?,
            inter: (&spec.inter).try_into()?,
            beta: Some(spec.beta),
            labels: (!contiguous).then(|| m.labels().iter().map(|l| l + 1).collect()),
        })
    }
}

/// Human-readable one-line description, e.g. for CLI logs.
pub fn describe(spec: &BlockModelSpec) -> String {
    format!(
        "n = {}, K = {}, blocks = {:?}, intra = {} (mean {}, var {}), inter = {} (mean {}, var {})",
        spec.n(),
        spec.k(),
        spec.membership.block_sizes(),
        spec.intra.name(),
        spec.intra.mean(),
        spec.intra.variance(),
        spec.inter.name(),
        spec.inter.mean(),
        spec.inter.variance()
    )
}
