//! Gaussian class mixtures and their one-dimensional projections.
//!
//! Every class `k` is `N(μ_k, Σ)` with a covariance shared across classes and
//! a relative count `n_k / N`. Projecting onto a hyperplane with unit normal
//! `a` gives a scalar Gaussian with mean `μ_kᵀa` and variance `aᵀΣa`, from
//! which side probabilities follow in closed form through the Gaussian
//! Q-function.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{dot, Arrangement, Hyperplane, SignWord};
use crate::rng;

/// Immutable Gaussian mixture with shared covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassModel {
    dimension: usize,
    means: Vec<Vec<f64>>,
    covariance: DMatrix<f64>,
    chol_lower: DMatrix<f64>,
    counts: Vec<f64>,
    total: f64,
}

impl ClassModel {
    /// `covariance` is row-major `n × n`; it must be symmetric (to 1e-12) and
    /// positive definite.
    pub fn new(means: Vec<Vec<f64>>, covariance: Vec<f64>, counts: Vec<f64>) -> Result<Self> {
        let m = means.len();
        if m == 0 {
            return Err(Error::invalid("a class model needs at least one class"));
        }
        if counts.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: counts.len(),
            });
        }
        if counts.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::invalid("class counts must be positive"));
        }
        let n = means[0].len();
        if n == 0 {
            return Err(Error::invalid("feature dimension must be at least 1"));
        }
        for mu in &means {
            if mu.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: mu.len(),
                });
            }
            if mu.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("class means must be finite"));
            }
        }
        if covariance.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: covariance.len(),
            });
        }
        let cov = DMatrix::from_row_slice(n, n, &covariance);
        for i in 0..n {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 {
                    return Err(Error::invalid("covariance must be symmetric"));
                }
            }
        }
        let chol = Cholesky::new(cov.clone()).ok_or_else(|| Error::invalid("covariance must be positive definite"))?;
        let total = counts.iter().sum();
        Ok(Self {
            dimension: n,
            means,
            chol_lower: chol.l(),
            covariance: cov,
            counts,
            total,
        })
    }

    /// Model with identity covariance scaled by `variance`.
    pub fn isotropic(means: Vec<Vec<f64>>, variance: f64, counts: Vec<f64>) -> Result<Self> {
        let n = means.first().map_or(0, Vec::len);
        let cov = (0..n * n).map(|i| if i % (n + 1) == 0 { variance } else { 0.0 }).collect();
        Self::new(means, cov, counts)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn num_classes(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Covariance flattened row-major.
    pub fn covariance_row_major(&self) -> Vec<f64> {
        self.covariance.transpose().iter().copied().collect()
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Relative class frequencies `n_k / N`.
    pub fn weights(&self) -> Vec<f64> {
        self.counts.iter().map(|c| c / self.total).collect()
    }

    /// Largest covariance eigenvalue; bounds every projected variance.
    pub fn max_variance(&self) -> f64 {
        self.covariance
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }

    /// Standard deviation of any class projected on `a`: `sqrt(aᵀΣa)`.
    pub fn projected_sigma(&self, normal: &[f64]) -> f64 {
        let a = DVector::from_column_slice(normal);
        (a.transpose() * &self.covariance * &a)[(0, 0)].sqrt()
    }

    fn check_hyperplane(&self, h: &Hyperplane) -> Result<()> {
        if h.dimension() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: h.dimension(),
            });
        }
        Ok(())
    }

    /// All classes projected on `h`, in class order.
    pub fn project_all(&self, h: &Hyperplane) -> Result<Vec<ProjectedClass>> {
        self.check_hyperplane(h)?;
        let sigma = self.projected_sigma(h.normal());
        Ok(self
            .means
            .iter()
            .map(|mu| ProjectedClass {
                mean: dot(mu, h.normal()),
                sigma,
            })
            .collect())
    }

    /// Mixture probability `P(aᵀx ≥ b)`, i.e. `q_j` for this hyperplane.
    pub fn side_probability(&self, h: &Hyperplane) -> Result<f64> {
        let projected = self.project_all(h)?;
        Ok(projected
            .iter()
            .zip(self.weights())
            .map(|(pc, w)| w * q_function((h.offset() - pc.mean) / pc.sigma))
            .sum())
    }

    /// Draws `x = μ_k + L z` with `L` the lower Cholesky factor of `Σ`.
    pub(crate) fn draw_from_class<R: rand::Rng>(&self, k: usize, rng: &mut R, out: &mut [f64]) {
        let n = self.dimension;
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        for i in 0..n {
            let mut v = self.means[k][i];
            for (j, zj) in z.iter().enumerate().take(i + 1) {
                v += self.chol_lower[(i, j)] * zj;
            }
            out[i] = v;
        }
    }
}

/// A class projected onto a hyperplane normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedClass {
    pub mean: f64,
    pub sigma: f64,
}

/// Projects class `k` (0-based) onto `h`: `m_k = μ_kᵀa`, `σ² = aᵀΣa`.
pub fn project_class(model: &ClassModel, k: usize, h: &Hyperplane) -> Result<ProjectedClass> {
    if k >= model.num_classes() {
        return Err(Error::IndexOutOfRange {
            index: k,
            len: model.num_classes(),
        });
    }
    model.check_hyperplane(h)?;
    Ok(ProjectedClass {
        mean: dot(&model.means[k], h.normal()),
        sigma: model.projected_sigma(h.normal()),
    })
}

/// Standard Gaussian right tail `Q(z) = ½ erfc(z/√2)`.
pub fn q_function(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("sigma must be positive, got {sigma}")))
    }
}

/// Split probability in absolute-value form, `Q(|b − m| / σ) ≤ ½`.
pub fn side_prob(pc: ProjectedClass, b: f64) -> Result<f64> {
    check_sigma(pc.sigma)?;
    Ok(q_function((b - pc.mean).abs() / pc.sigma))
}

/// Right-tail mass `P(u ≥ b) = Q((b − m)/σ)` for `u ~ N(m, σ²)`; exceeds ½
/// when the class mean lies right of the split.
pub fn right_tail_prob(mean: f64, sigma: f64, b: f64) -> Result<f64> {
    check_sigma(sigma)?;
    Ok(q_function((b - mean) / sigma))
}

/// Per-hyperplane right-side probabilities `q_j` together with the
/// membership sets `S_k` (as sign words) of the hyper bins.
#[derive(Debug, Clone, PartialEq)]
pub struct SideProfile {
    q: Vec<f64>,
    bins: Vec<SignWord>,
}

impl SideProfile {
    pub fn new(q: Vec<f64>, bins: Vec<SignWord>) -> Result<Self> {
        if let Some(bad) = q.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidProbability(*bad));
        }
        for w in &bins {
            if w.len() != q.len() {
                return Err(Error::DimensionMismatch {
                    expected: q.len(),
                    found: w.len(),
                });
            }
        }
        Ok(Self { q, bins })
    }

    /// Profile listing all `2^J` bins in lexicographic order.
    pub fn complete(q: Vec<f64>) -> Result<Self> {
        let bins = SignWord::all(q.len()).collect();
        Self::new(q, bins)
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn bins(&self) -> &[SignWord] {
        &self.bins
    }

    /// Independence approximation `Π_{j∈S} q_j · Π_{j∉S} (1 − q_j)`.
    pub fn bin_prob(&self, word: &SignWord) -> f64 {
        self.q
            .iter()
            .enumerate()
            .map(|(j, qj)| if word.bit(j) { *qj } else { 1.0 - qj })
            .product()
    }
}

/// Product-form probability of bin `k` of the profile.
pub fn bin_prob_product(profile: &SideProfile, k: usize) -> Result<f64> {
    let word = profile.bins.get(k).ok_or(Error::IndexOutOfRange {
        index: k,
        len: profile.bins.len(),
    })?;
    Ok(profile.bin_prob(word))
}

/// Labeled draws from a [`ClassModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSample {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub label_counts: Vec<u64>,
}

/// Draws `count` labeled points: the label with probability `n_k / N`, the
/// point from `N(μ_k, Σ)`. Normals come from the ziggurat sampler of
/// `rand_distr` on a ChaCha8 stream, so a seed reproduces the sample exactly.
pub fn sample_features(model: &ClassModel, count: usize, seed: u64) -> Result<FeatureSample> {
    if count == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    let mut rng = rng::seeded(seed);
    let chooser = WeightedIndex::new(&model.counts).map_err(|e| Error::invalid(e.to_string()))?;
    let mut label_counts = vec![0u64; model.num_classes()];
    let mut points = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        let k = chooser.sample(&mut rng);
        let mut x = vec![0.0; model.dimension];
        model.draw_from_class(k, &mut rng, &mut x);
        label_counts[k] += 1;
        labels.push(k);
        points.push(x);
    }
    Ok(FeatureSample {
        points,
        labels,
        label_counts,
    })
}

/// Fraction of points with `a·x ≥ b`.
pub fn empirical_side_fraction(points: &[Vec<f64>], h: &Hyperplane) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::invalid("no points"));
    }
    let mut hits = 0usize;
    for x in points {
        if x.len() != h.dimension() {
            return Err(Error::DimensionMismatch {
                expected: h.dimension(),
                found: x.len(),
            });
        }
        if h.side(x) {
            hits += 1;
        }
    }
    Ok(hits as f64 / points.len() as f64)
}

/// Empirical joint bin frequencies of `points` under `arr`.
pub fn empirical_bin_frequencies(points: &[Vec<f64>], arr: &Arrangement) -> Result<BTreeMap<SignWord, f64>> {
    if points.is_empty() {
        return Err(Error::invalid("no points"));
    }
    let mut counts: BTreeMap<SignWord, u64> = BTreeMap::new();
    for x in points {
        *counts.entry(crate::geometry::sign_word(arr, x)?).or_default() += 1;
    }
    let n = points.len() as f64;
    Ok(counts.into_iter().map(|(w, c)| (w, c as f64 / n)).collect())
}
