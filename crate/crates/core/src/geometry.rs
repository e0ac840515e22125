//! Hyperplanes, arrangements and the regions they cut out of `R^n`.
//!
//! A hyperplane is `{y : a·y = b}` with a unit normal `a`. An arrangement is
//! an ordered list of hyperplanes; the position of a hyperplane in that list
//! is its identity everywhere downstream (sign words, orderings, payloads).
//! A point's [`SignWord`] records on which side of every hyperplane it lies
//! and is the index of its hyper bin.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::distr::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::rng;

/// Maximum number of hyperplanes in an arrangement (sign words are packed
/// into a `u64`).
pub const MAX_HYPERPLANES: usize = 64;

/// Default tolerance on normalized minors for [`is_general_position`].
pub const GP_TOLERANCE: f64 = 1e-9;

// Normals already within this distance of unit length are kept bit-for-bit,
// which makes normalization idempotent and the text format round-trip exact.
const UNIT_SLACK: f64 = 1e-14;

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// The hyperplane `{y : a·y = b}` with `‖a‖ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    normal: Vec<f64>,
    offset: f64,
}

impl Hyperplane {
    /// Builds the hyperplane `normal·y = offset`. Any nonzero normal is
    /// accepted; normal and offset are rescaled together so the point set is
    /// unchanged and the stored normal has unit length.
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        if normal.is_empty() {
            return Err(Error::invalid("hyperplane dimension must be at least 1"));
        }
        if normal.iter().chain(std::iter::once(&offset)).any(|v| !v.is_finite()) {
            return Err(Error::invalid("hyperplane parameters must be finite"));
        }
        let norm = dot(&normal, &normal).sqrt();
        if norm == 0.0 {
            return Err(Error::invalid("hyperplane normal must be nonzero"));
        }
        if (norm - 1.0).abs() <= UNIT_SLACK {
            return Ok(Self { normal, offset });
        }
        Ok(Self {
            normal: normal.iter().map(|v| v / norm).collect(),
            offset: offset / norm,
        })
    }

    pub fn dimension(&self) -> usize {
        self.normal.len()
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// `a·x − b`; the signed Euclidean distance since `a` is a unit vector.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) - self.offset
    }

    /// Tie rule: a point on the hyperplane is on the `≥` side.
    #[inline]
    pub fn side(&self, x: &[f64]) -> bool {
        dot(&self.normal, x) >= self.offset
    }
}

/// Orthogonal projection of `x` onto `h`: `x − a (aᵀa)⁻¹ (aᵀx − b)`.
pub fn project_point(h: &Hyperplane, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(h.dimension(), x.len())?;
    let a = h.normal();
    let scale = (dot(a, x) - h.offset()) / dot(a, a);
    Ok(x.iter().zip(a).map(|(xi, ai)| xi - ai * scale).collect())
}

/// Ordered collection of hyperplanes sharing one ambient dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Arrangement {
    dimension: usize,
    hyperplanes: Vec<Hyperplane>,
}

impl Arrangement {
    pub fn new(dimension: usize, hyperplanes: Vec<Hyperplane>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::invalid("arrangement dimension must be at least 1"));
        }
        if hyperplanes.len() > MAX_HYPERPLANES {
            return Err(Error::invalid(format!(
                "at most {MAX_HYPERPLANES} hyperplanes are supported, got {}",
                hyperplanes.len()
            )));
        }
        for h in &hyperplanes {
            check_dim(dimension, h.dimension())?;
        }
        Ok(Self { dimension, hyperplanes })
    }

    pub fn empty(dimension: usize) -> Result<Self> {
        Self::new(dimension, Vec::new())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of hyperplanes `J`.
    pub fn len(&self) -> usize {
        self.hyperplanes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hyperplanes.is_empty()
    }

    pub fn hyperplanes(&self) -> &[Hyperplane] {
        &self.hyperplanes
    }

    pub fn get(&self, j: usize) -> Option<&Hyperplane> {
        self.hyperplanes.get(j)
    }

    pub fn push(&mut self, h: Hyperplane) -> Result<()> {
        check_dim(self.dimension, h.dimension())?;
        if self.hyperplanes.len() == MAX_HYPERPLANES {
            return Err(Error::invalid("arrangement is full"));
        }
        self.hyperplanes.push(h);
        Ok(())
    }

    /// Sign word without the dimension check, for hot loops.
    #[inline]
    pub(crate) fn word_unchecked(&self, x: &[f64]) -> SignWord {
        let len = self.hyperplanes.len();
        let mut mask = 0u64;
        for (j, h) in self.hyperplanes.iter().enumerate() {
            if h.side(x) {
                mask |= 1 << (len - 1 - j);
            }
        }
        SignWord { len: len as u8, mask }
    }

    /// Renders the text interchange format: a `n J` header followed by one
    /// `a_1 … a_n b` line per hyperplane, 17 significant digits each.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.dimension, self.len());
        for h in &self.hyperplanes {
            let fields: Vec<String> = h
                .normal()
                .iter()
                .chain(std::iter::once(&h.offset()))
                .map(|v| format_real(*v))
                .collect();
            out.push_str(&fields.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses the text format produced by [`Arrangement::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let arr = parse_arrangement_lines(&mut lines)?;
        if let Some((i, line)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(Error::parse(i + 1, format!("unexpected trailing content {line:?}")));
        }
        Ok(arr)
    }
}

impl fmt::Display for Arrangement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for Arrangement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_text(s)
    }
}

/// 17 significant digits: enough to round-trip every `f64`.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn parse_real(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::parse(line, format!("not a number: {tok:?}")))
}

/// Consumes the header and hyperplane lines of an arrangement block from a
/// line iterator, leaving any following content unread.
pub(crate) fn parse_arrangement_lines<'a, I>(lines: &mut I) -> Result<Arrangement>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    let (i, header) = lines.next().ok_or_else(|| Error::parse(1, "missing `n J` header"))?;
    let nums: Vec<&str> = header.split_whitespace().collect();
    if nums.len() != 2 {
        return Err(Error::parse(i + 1, "header must be `n J`"));
    }
    let parse_usize = |t: &str| {
        t.parse::<usize>()
            .map_err(|_| Error::parse(i + 1, format!("not an integer: {t:?}")))
    };
    let n = parse_usize(nums[0])?;
    let count = parse_usize(nums[1])?;
    let mut hyperplanes = Vec::with_capacity(count);
    for _ in 0..count {
        let (li, line) = lines
            .next()
            .ok_or_else(|| Error::parse(i + 1, "fewer hyperplane lines than declared"))?;
        let vals = line
            .split_whitespace()
            .map(|t| parse_real(t, li + 1))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != n + 1 {
            return Err(Error::parse(
                li + 1,
                format!("expected {} numbers, got {}", n + 1, vals.len()),
            ));
        }
        let offset = vals[n];
        let normal = vals[..n].to_vec();
        hyperplanes.push(Hyperplane::new(normal, offset).map_err(|e| Error::parse(li + 1, e.to_string()))?);
    }
    Arrangement::new(n, hyperplanes)
}

/// Side pattern of a point with respect to an arrangement: bit `j` is 1 iff
/// `a_j·x ≥ b_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignWord {
    len: u8,
    // Bit j lives at position len-1-j so integer order equals string order.
    mask: u64,
}

impl SignWord {
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        if bits.len() > MAX_HYPERPLANES {
            return Err(Error::invalid("sign word longer than 64 bits"));
        }
        let len = bits.len();
        let mask = bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .fold(0u64, |m, (j, _)| m | 1 << (len - 1 - j));
        Ok(Self { len: len as u8, mask })
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, j: usize) -> bool {
        assert!(j < self.len(), "bit {j} out of range for word of length {}", self.len);
        self.mask >> (self.len() - 1 - j) & 1 == 1
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.len()).map(|j| self.bit(j)).collect()
    }

    /// Indices of hyperplanes on whose `≥` side the word lies.
    pub fn ones(&self) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.bit(j)).collect()
    }

    /// All `2^len` words in lexicographic order.
    pub fn all(len: usize) -> impl Iterator<Item = SignWord> {
        assert!(len < MAX_HYPERPLANES, "cannot enumerate 2^{len} words");
        (0..1u64 << len).map(move |mask| SignWord { len: len as u8, mask })
    }
}

impl fmt::Display for SignWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for SignWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::invalid(format!("bad sign bit {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bits(&bits)
    }
}

/// Sign word of `x`.
pub fn sign_word(arr: &Arrangement, x: &[f64]) -> Result<SignWord> {
    check_dim(arr.dimension(), x.len())?;
    Ok(arr.word_unchecked(x))
}

fn binomial(n: u32, k: u32) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = acc
            .checked_mul(u128::from(n - i))
            .ok_or(Error::Overflow("binomial coefficient"))?
            / u128::from(i + 1);
    }
    Ok(acc)
}

/// Number of regions cut by `j` hyperplanes in general position in an
/// `s`-dimensional space: `Σ_{k=0}^{min(s,j)} C(j, k)`.
pub fn region_count(s: u32, j: u32) -> Result<u128> {
    if s == 0 {
        return Err(Error::invalid("space dimension s must be at least 1"));
    }
    (0..=s.min(j)).try_fold(0u128, |acc, k| {
        acc.checked_add(binomial(j, k)?).ok_or(Error::Overflow("region count"))
    })
}

/// Largest `n ≥ 1` with `(n + 1)·j ≤ r(s, j)`, or 0 when none qualifies.
pub fn max_feature_dim(j: u32, s: u32) -> Result<u128> {
    if j == 0 {
        return Err(Error::invalid("number of hyperplanes must be at least 1"));
    }
    let regions = region_count(s, j)?;
    // (n+1)j <= r  <=>  n <= floor(r/j) - 1
    Ok((regions / u128::from(j)).saturating_sub(1))
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

fn normal_rows(arr: &Arrangement, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), arr.dimension(), |r, c| arr.hyperplanes[rows[r]].normal[c])
}

/// Smallest normalized volume spanned by any `k ≤ min(J, n)` normals:
/// `sqrt(det(R Rᵀ))` over every row subset `R` of the normal matrix. For
/// square subsets this is the absolute determinant. Returns `+∞` for an
/// empty arrangement.
pub fn general_position_margin(arr: &Arrangement) -> f64 {
    let max_k = arr.len().min(arr.dimension());
    let mut worst = f64::INFINITY;
    for k in 1..=max_k {
        for rows in combinations(arr.len(), k) {
            let r = normal_rows(arr, &rows);
            let gram = &r * r.transpose();
            let vol = gram.determinant().max(0.0).sqrt();
            worst = worst.min(vol);
        }
    }
    worst
}

/// General-position test: every set of at most `n` normals is linearly
/// independent with normalized volume above `tol`.
pub fn is_general_position(arr: &Arrangement, tol: f64) -> bool {
    general_position_margin(arr) > tol
}

/// Per-region Monte Carlo statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionStats {
    pub count: u64,
    pub centroid: Vec<f64>,
}

/// Result of sampling an arrangement over a box.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSample {
    pub regions: BTreeMap<SignWord, RegionStats>,
    /// False when the arrangement failed the general-position check; region
    /// counts are then not expected to match [`region_count`].
    pub general_position: bool,
    pub samples: u64,
}

impl RegionSample {
    pub fn words(&self) -> BTreeSet<SignWord> {
        self.regions.keys().copied().collect()
    }
}

/// Draws `samples` points uniformly from `[-halfwidth, halfwidth]^n` and
/// groups them by sign word, accumulating counts and centroids.
pub fn sample_regions(arr: &Arrangement, halfwidth: f64, samples: u64, seed: u64) -> Result<RegionSample> {
    if samples == 0 {
        return Err(Error::invalid("samples must be positive"));
    }
    if !(halfwidth > 0.0 && halfwidth.is_finite()) {
        return Err(Error::invalid("box halfwidth must be positive and finite"));
    }
    let n = arr.dimension();
    let mut rng = rng::seeded(seed);
    let uniform = Uniform::new_inclusive(-halfwidth, halfwidth).map_err(|e| Error::invalid(e.to_string()))?;
    let mut acc: HashMap<SignWord, (u64, Vec<f64>)> = HashMap::new();
    let mut x = vec![0.0; n];
    for _ in 0..samples {
        for xi in x.iter_mut() {
            *xi = uniform.sample(&mut rng);
        }
        let entry = acc.entry(arr.word_unchecked(&x)).or_insert_with(|| (0, vec![0.0; n]));
        entry.0 += 1;
        for (s, xi) in entry.1.iter_mut().zip(&x) {
            *s += xi;
        }
    }
    let regions = acc
        .into_iter()
        .map(|(w, (count, sum))| {
            let centroid = sum.into_iter().map(|s| s / count as f64).collect();
            (w, RegionStats { count, centroid })
        })
        .collect();
    Ok(RegionSample {
        regions,
        general_position: is_general_position(arr, GP_TOLERANCE),
        samples,
    })
}

/// Distinct sign words observed over uniform draws in the box.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionEnumeration {
    pub words: BTreeSet<SignWord>,
    pub general_position: bool,
}

/// Monte Carlo region enumeration. Exact only when the box meets every
/// region (see [`covering_halfwidth`]) and regions are not vanishingly small.
pub fn enumerate_regions(arr: &Arrangement, halfwidth: f64, samples: u64, seed: u64) -> Result<RegionEnumeration> {
    let sample = sample_regions(arr, halfwidth, samples, seed)?;
    Ok(RegionEnumeration {
        words: sample.words(),
        general_position: sample.general_position,
    })
}

/// Half-width of an origin-centred box containing the minimum-norm point of
/// every intersection of `min(J, n)` hyperplanes, plus `margin`. For an
/// arrangement in general position such a box meets every region.
pub fn covering_halfwidth(arr: &Arrangement, margin: f64) -> f64 {
    let k = arr.len().min(arr.dimension());
    let mut reach: f64 = 0.0;
    for rows in combinations(arr.len(), k) {
        let a = normal_rows(arr, &rows);
        let b = DVector::from_iterator(k, rows.iter().map(|&r| arr.hyperplanes[r].offset));
        let gram = &a * a.transpose();
        if let Some(inv) = gram.try_inverse() {
            let x = a.transpose() * (inv * b);
            reach = reach.max(x.amax());
        }
    }
    reach + margin
}
