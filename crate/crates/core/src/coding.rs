//! Distributed coding schemes: Slepian-Wolf rate checks and Cover's random
//! binning, partition information of block and hyper binnings, and the hyper
//! binning helper (shared arrangement, orderings and lookup table) with its
//! per-source encoder and joint decoder.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use rayon::prelude::*;

use crate::classmodel::ClassModel;
use crate::error::{Error, Result};
use crate::geometry::{format_real, parse_arrangement_lines, parse_real, Arrangement, SignWord};
use crate::infometric::{h, shannon_entropy};
use crate::optimizer::{evaluate_hyperplane, CountMode};
use crate::rng;

/// One of the two distributed sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    First,
    Second,
}

impl Source {
    pub const BOTH: [Source; 2] = [Source::First, Source::Second];

    pub fn index(self) -> usize {
        match self {
            Source::First => 0,
            Source::Second => 1,
        }
    }

    pub fn other(self) -> Source {
        match self {
            Source::First => Source::Second,
            Source::Second => Source::First,
        }
    }
}

/// A function of two discrete sources with its joint pmf.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionTable {
    alphabets: [Vec<i64>; 2],
    values: Vec<f64>,
    pmf: Vec<f64>,
}

impl FunctionTable {
    /// `values` and `pmf` are row-major: pair `(i, j)` at `i * |X2| + j`.
    pub fn new(alphabet1: Vec<i64>, alphabet2: Vec<i64>, values: Vec<f64>, pmf: Vec<f64>) -> Result<Self> {
        for a in [&alphabet1, &alphabet2] {
            if a.is_empty() {
                return Err(Error::invalid("empty alphabet"));
            }
            if a.iter().collect::<BTreeSet<_>>().len() != a.len() {
                return Err(Error::invalid("alphabet symbols must be distinct"));
            }
        }
        let cells = alphabet1.len() * alphabet2.len();
        for v in [&values, &pmf] {
            if v.len() != cells {
                return Err(Error::DimensionMismatch {
                    expected: cells,
                    found: v.len(),
                });
            }
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("function value {bad} is not finite")));
        }
        if let Some(bad) = pmf.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
            return Err(Error::InvalidProbability(*bad));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("pmf sums to {total}, not 1")));
        }
        Ok(Self {
            alphabets: [alphabet1, alphabet2],
            values,
            pmf,
        })
    }

    /// Table of `f` under the uniform pmf.
    pub fn uniform<F: Fn(i64, i64) -> f64>(alphabet1: Vec<i64>, alphabet2: Vec<i64>, f: F) -> Result<Self> {
        let cells = alphabet1.len() * alphabet2.len();
        let values = alphabet1
            .iter()
            .flat_map(|a| alphabet2.iter().map(|b| f(*a, *b)).collect::<Vec<_>>())
            .collect();
        Self::new(alphabet1, alphabet2, values, vec![1.0 / cells as f64; cells])
    }

    pub fn alphabet(&self, source: Source) -> &[i64] {
        &self.alphabets[source.index()]
    }

    pub fn size(&self, source: Source) -> usize {
        self.alphabets[source.index()].len()
    }

    fn cell(&self, i: usize, j: usize) -> usize {
        i * self.alphabets[1].len() + j
    }

    /// `f` at alphabet indices `(i, j)`.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.cell(i, j)]
    }

    pub fn pmf(&self, i: usize, j: usize) -> f64 {
        self.pmf[self.cell(i, j)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn joint_pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// Index of symbol `x` in the alphabet of `source`.
    pub fn symbol_index(&self, source: Source, x: i64) -> Result<usize> {
        self.alphabet(source)
            .iter()
            .position(|s| *s == x)
            .ok_or_else(|| Error::invalid(format!("symbol {x} not in alphabet of source {}", source.index() + 1)))
    }

    /// `f` at symbols `(x1, x2)`.
    pub fn value_at(&self, x1: i64, x2: i64) -> Result<f64> {
        let i = self.symbol_index(Source::First, x1)?;
        let j = self.symbol_index(Source::Second, x2)?;
        Ok(self.value(i, j))
    }

    /// Pairs `(i, j)` with positive probability, in row-major order.
    pub fn support(&self) -> Vec<(usize, usize)> {
        let m = self.alphabets[1].len();
        (0..self.pmf.len())
            .filter(|c| self.pmf[*c] > 0.0)
            .map(|c| (c / m, c % m))
            .collect()
    }

    pub fn marginal(&self, source: Source) -> Vec<f64> {
        let (n1, n2) = (self.alphabets[0].len(), self.alphabets[1].len());
        match source {
            Source::First => (0..n1).map(|i| (0..n2).map(|j| self.pmf(i, j)).sum()).collect(),
            Source::Second => (0..n2).map(|j| (0..n1).map(|i| self.pmf(i, j)).sum()).collect(),
        }
    }

    /// `(H(X1|X2), H(X2|X1), H(X1,X2))` in bits.
    pub fn entropies(&self) -> Result<(f64, f64, f64)> {
        let joint = shannon_entropy(&self.pmf)?;
        let h1 = shannon_entropy(&self.marginal(Source::First))?;
        let h2 = shannon_entropy(&self.marginal(Source::Second))?;
        Ok((joint - h2, joint - h1, joint))
    }

    /// Header `|X1| |X2|`, then `x1 x2 value pmf` per pair in row-major order.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.alphabets[0].len(), self.alphabets[1].len());
        for (i, a) in self.alphabets[0].iter().enumerate() {
            for (j, b) in self.alphabets[1].iter().enumerate() {
                let _ = writeln!(out, "{a} {b} {} {}", self.value(i, j), self.pmf(i, j));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (line, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::parse(line, format!("bad alphabet size `{t}`"))))
            .collect::<Result<_>>()?;
        if dims.len() != 2 {
            return Err(Error::parse(line, "header must be `|X1| |X2|`"));
        }
        let mut entries: BTreeMap<(i64, i64), (f64, f64)> = BTreeMap::new();
        for (line, l) in lines {
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != 4 {
                return Err(Error::parse(line, "expected `x1 x2 value pmf`"));
            }
            let sym = |t: &str| t.parse::<i64>().map_err(|_| Error::parse(line, format!("bad symbol `{t}`")));
            let key = (sym(toks[0])?, sym(toks[1])?);
            let entry = (parse_real(toks[2], line)?, parse_real(toks[3], line)?);
            if entries.insert(key, entry).is_some() {
                return Err(Error::parse(line, format!("duplicate pair ({}, {})", key.0, key.1)));
            }
        }
        let a1: Vec<i64> = entries.keys().map(|k| k.0).collect::<BTreeSet<_>>().into_iter().collect();
        let a2: Vec<i64> = entries.keys().map(|k| k.1).collect::<BTreeSet<_>>().into_iter().collect();
        if a1.len() != dims[0] || a2.len() != dims[1] || entries.len() != dims[0] * dims[1] {
            return Err(Error::invalid(format!(
                "table lists {} pairs over {}x{} symbols, header says {}x{}",
                entries.len(),
                a1.len(),
                a2.len(),
                dims[0],
                dims[1]
            )));
        }
        let (values, pmf) = entries.values().copied().unzip();
        Self::new(a1, a2, values, pmf)
    }
}

impl FromStr for FunctionTable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_text(s)
    }
}

const RATE_SLACK: f64 = 1e-12;

/// Whether `(R1, R2)` lies in the Slepian-Wolf region.
pub fn sw_admissible(r1: f64, r2: f64, h1g2: f64, h2g1: f64, h12: f64) -> Result<bool> {
    if r1 < 0.0 || r2 < 0.0 || r1.is_nan() || r2.is_nan() {
        return Err(Error::invalid("rates must be nonnegative"));
    }
    Ok(r1 >= h1g2 - RATE_SLACK && r2 >= h2g1 - RATE_SLACK && r1 + r2 >= h12 - RATE_SLACK)
}

/// `H(X1,X2) − H(label)`, the information a labeling of the joint alphabet
/// discards. Every pair must be labeled.
pub fn partition_information<L: Ord + Clone>(table: &FunctionTable, labeling: &BTreeMap<(usize, usize), L>) -> Result<f64> {
    let (n1, n2) = (table.size(Source::First), table.size(Source::Second));
    let mut masses: BTreeMap<L, f64> = BTreeMap::new();
    for i in 0..n1 {
        for j in 0..n2 {
            let label = labeling
                .get(&(i, j))
                .ok_or_else(|| Error::invalid(format!("pair ({i}, {j}) is unlabeled")))?;
            *masses.entry(label.clone()).or_insert(0.0) += table.pmf(i, j);
        }
    }
    if labeling.len() != n1 * n2 {
        return Err(Error::invalid("labeling refers to pairs outside the table"));
    }
    let masses: Vec<f64> = masses.into_values().collect();
    information_from_masses(shannon_entropy(table.joint_pmf())?, &masses)
}

/// `joint_entropy − H(masses)` for a partition given by its cell masses.
pub fn information_from_masses(joint_entropy: f64, masses: &[f64]) -> Result<f64> {
    Ok(joint_entropy - shannon_entropy(masses)?)
}

/// Identity labeling: every pair its own label.
pub fn identity_labeling(table: &FunctionTable) -> BTreeMap<(usize, usize), usize> {
    let m = table.size(Source::Second);
    (0..table.size(Source::First))
        .flat_map(|i| (0..m).map(move |j| ((i, j), i * m + j)))
        .collect()
}

/// Typical-set codebook size `2^{Σ_j h(q_j)}`.
pub fn hp_codebook_size(q: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for &qj in q {
        total += crate::infometric::binary_entropy(qj)?;
    }
    Ok(total.exp2())
}

/// Outcome of [`cover_binning_simulate`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoverSimulation {
    pub trials: usize,
    /// Trials where the source sequence was atypical.
    pub atypical: usize,
    /// Trials where another typical sequence shared the bin.
    pub ambiguous: usize,
    pub bins: u64,
    pub typical_set_size: usize,
    pub entropy: f64,
}

impl CoverSimulation {
    pub fn error_rate(&self) -> f64 {
        (self.atypical + self.ambiguous) as f64 / self.trials as f64
    }

    pub fn atypical_rate(&self) -> f64 {
        self.atypical as f64 / self.trials as f64
    }
}

/// Parameters of Cover's random binning experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverConfig {
    pub pmf: Vec<f64>,
    pub n: usize,
    pub rate: f64,
    pub trials: usize,
    pub seed: u64,
    pub epsilon: f64,
}

impl CoverConfig {
    pub fn new(pmf: Vec<f64>, n: usize, rate: f64, trials: usize, seed: u64) -> Self {
        Self {
            pmf,
            n,
            rate,
            trials,
            seed,
            epsilon: 0.1,
        }
    }
}

const MAX_TYPICAL: usize = 1 << 24;

/// Calls `emit` with the sequence index of every length-`n` sequence whose
/// symbol counts equal `counts`. Symbol `s` at position `t` contributes
/// `s · A^t` to the index.
fn for_each_of_type(
    counts: &mut [usize],
    n: usize,
    pos: usize,
    prefix: u128,
    alpha: u128,
    pow: u128,
    emit: &mut dyn FnMut(u128),
) {
    if pos == n {
        emit(prefix);
        return;
    }
    for s in 0..counts.len() {
        if counts[s] > 0 {
            counts[s] -= 1;
            for_each_of_type(counts, n, pos + 1, prefix + s as u128 * pow, alpha, pow * alpha, emit);
            counts[s] += 1;
        }
    }
}

fn compositions(n: usize, parts: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if current.len() + 1 == parts {
        current.push(n);
        out.push(current.clone());
        current.pop();
        return;
    }
    for k in 0..=n {
        current.push(k);
        compositions(n - k, parts, current, out);
        current.pop();
    }
}

fn sequence_hash(index: u128) -> u64 {
    rng::mix64(rng::mix64(index as u64) ^ ((index >> 64) as u64))
}

fn log2_binomial_multinomial(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    let lg = |k: usize| (1..=k).map(|i| (i as f64).log2()).sum::<f64>();
    lg(n) - counts.iter().map(|c| lg(*c)).sum::<f64>()
}

/// Cover's random binning on an i.i.d. source: each trial draws `x^n`, bins
/// every sequence uniformly among `⌊2^{nR}⌋` bins by a seeded hash, and
/// decodes to the unique weakly ε-typical sequence in the received bin.
/// When the bins outnumber all `|X|^n` sequences the encoder sends the
/// sequence itself, so only atypicality can cause an error.
pub fn cover_binning_simulate(cfg: &CoverConfig) -> Result<CoverSimulation> {
    let a = cfg.pmf.len();
    if a == 0 {
        return Err(Error::invalid("empty source alphabet"));
    }
    let entropy = shannon_entropy(&cfg.pmf)?;
    if cfg.n == 0 || cfg.trials == 0 {
        return Err(Error::invalid("blocklength and trials must be positive"));
    }
    if !(cfg.rate > 0.0) || cfg.n as f64 * cfg.rate > 30.0 {
        return Err(Error::invalid(format!(
            "need 0 < R and n*R <= 30, got n={} R={}",
            cfg.n, cfg.rate
        )));
    }
    if !(cfg.epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    let alpha = a as u128;
    let total_bits = cfg.n as f64 * (a as f64).log2();
    if total_bits > 127.0 {
        return Err(Error::invalid("sequence space too large to index"));
    }
    let bins = (cfg.n as f64 * cfg.rate).exp2().floor() as u64;
    let singleton_bins = (bins as f64).log2() >= total_bits;

    // Typical types: weak typicality depends on the sequence only via its
    // symbol counts.
    let mut types = Vec::new();
    compositions(cfg.n, a, &mut Vec::new(), &mut types);
    let typical_types: Vec<Vec<usize>> = types
        .into_iter()
        .filter(|counts| {
            let mut logp = 0.0;
            for (c, p) in counts.iter().zip(&cfg.pmf) {
                if *c > 0 {
                    if *p == 0.0 {
                        return false;
                    }
                    logp += *c as f64 * p.log2();
                }
            }
            (-logp / cfg.n as f64 - entropy).abs() <= cfg.epsilon
        })
        .collect();
    let size_log2 = typical_types
        .iter()
        .map(|c| log2_binomial_multinomial(c).exp2())
        .sum::<f64>()
        .log2();
    if size_log2 > (MAX_TYPICAL as f64).log2() {
        return Err(Error::invalid(format!(
            "typical set of about 2^{size_log2:.1} sequences is too large"
        )));
    }
    let typical_set: BTreeSet<Vec<usize>> = typical_types.iter().cloned().collect();
    let mut hashes = Vec::new();
    for counts in &typical_types {
        let mut c = counts.clone();
        for_each_of_type(&mut c, cfg.n, 0, 0, alpha, 1, &mut |idx| hashes.push(sequence_hash(idx)));
    }
    let mut sorted = hashes.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Overflow("sequence hash collision in typical set"));
    }

    let chooser = WeightedIndex::new(&cfg.pmf).map_err(|e| Error::invalid(e.to_string()))?;
    let outcomes: Vec<(bool, bool)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::substream(rng::mix64(cfg.seed), t as u64);
            let mut counts = vec![0usize; a];
            let mut index: u128 = 0;
            let mut pow: u128 = 1;
            for _ in 0..cfg.n {
                let s = chooser.sample(&mut r);
                counts[s] += 1;
                index += s as u128 * pow;
                pow *= alpha;
            }
            let key: u64 = r.random();
            if !typical_set.contains(&counts) {
                return (true, false);
            }
            if singleton_bins {
                return (false, false);
            }
            let own = sequence_hash(index);
            let bin = |hash: u64| rng::mix64(hash ^ key) % bins;
            let target = bin(own);
            let clash = hashes.iter().any(|hh| *hh != own && bin(*hh) == target);
            (false, clash)
        })
        .collect();
    Ok(CoverSimulation {
        trials: cfg.trials,
        atypical: outcomes.iter().filter(|o| o.0).count(),
        ambiguous: outcomes.iter().filter(|o| o.1).count(),
        bins,
        typical_set_size: hashes.len(),
        entropy,
    })
}

/// Real-valued functions of the two sources' feature points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointFunction {
    /// Sum of all coordinates of both points.
    Sum,
    /// Inner product of the two points.
    Dot,
}

impl JointFunction {
    pub fn eval(self, x1: &[f64], x2: &[f64]) -> f64 {
        match self {
            JointFunction::Sum => x1.iter().sum::<f64>() + x2.iter().sum::<f64>(),
            JointFunction::Dot => x1.iter().zip(x2).map(|(a, b)| a * b).sum(),
        }
    }
}

impl FromStr for JointFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sum" => Ok(JointFunction::Sum),
            "dot" => Ok(JointFunction::Dot),
            other => Err(Error::invalid(format!("unknown function `{other}`"))),
        }
    }
}

impl fmt::Display for JointFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JointFunction::Sum => "sum",
            JointFunction::Dot => "dot",
        })
    }
}

/// Common information shared with both encoders and the decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct HelperPayload {
    pub arrangement: Arrangement,
    /// `orderings[i][t]` is the hyperplane source `i` sends as its bit `t`.
    pub orderings: [Vec<usize>; 2],
    pub lookup: BTreeMap<(SignWord, SignWord), f64>,
}

fn check_permutation(p: &[usize], j: usize) -> Result<()> {
    let set: BTreeSet<usize> = p.iter().copied().collect();
    if p.len() != j || set.len() != j || p.iter().any(|x| *x >= j) {
        return Err(Error::invalid(format!(
            "ordering {p:?} is not a permutation of {j} hyperplanes"
        )));
    }
    Ok(())
}

fn word_text(w: &SignWord) -> String {
    if w.is_empty() {
        "-".to_string()
    } else {
        w.to_string()
    }
}

fn parse_word(tok: &str, j: usize, line: usize) -> Result<SignWord> {
    let w = if tok == "-" {
        SignWord::from_bits(&[])?
    } else {
        tok.parse::<SignWord>().map_err(|e| Error::parse(line, e.to_string()))?
    };
    if w.len() != j {
        return Err(Error::parse(line, format!("word `{tok}` does not have {j} bits")));
    }
    Ok(w)
}

impl HelperPayload {
    pub fn new(
        arrangement: Arrangement,
        orderings: [Vec<usize>; 2],
        lookup: BTreeMap<(SignWord, SignWord), f64>,
    ) -> Result<Self> {
        let j = arrangement.len();
        for p in &orderings {
            check_permutation(p, j)?;
        }
        if lookup.keys().any(|(a, b)| a.len() != j || b.len() != j) {
            return Err(Error::invalid("lookup words must have one bit per hyperplane"));
        }
        Ok(Self {
            arrangement,
            orderings,
            lookup,
        })
    }

    /// Arrangement block, `pi1:` and `pi2:` lines (1-based), then one
    /// `r1 r2 value` line per lookup entry. Zero-length words print as `-`.
    pub fn to_text(&self) -> String {
        let mut out = self.arrangement.to_text();
        for (i, p) in self.orderings.iter().enumerate() {
            let items: Vec<String> = p.iter().map(|x| (x + 1).to_string()).collect();
            let _ = writeln!(
                out,
                "pi{}:{}{}",
                i + 1,
                if items.is_empty() { "" } else { " " },
                items.join(" ")
            );
        }
        for ((a, b), v) in &self.lookup {
            let _ = writeln!(out, "{} {} {}", word_text(a), word_text(b), format_real(*v));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let arrangement = parse_arrangement_lines(&mut lines)?;
        let mut lines = lines.map(|(i, l)| (i + 1, l));
        let j = arrangement.len();
        let mut orderings: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for (i, ordering) in orderings.iter_mut().enumerate() {
            let (line, l) = lines.next().ok_or_else(|| Error::parse(0, "missing ordering line"))?;
            let prefix = format!("pi{}:", i + 1);
            let rest = l
                .strip_prefix(&prefix)
                .ok_or_else(|| Error::parse(line, format!("expected `{prefix}`")))?;
            for tok in rest.split_whitespace() {
                let v: usize = tok.parse().map_err(|_| Error::parse(line, format!("bad index `{tok}`")))?;
                if v == 0 {
                    return Err(Error::parse(line, "orderings are 1-based"));
                }
                ordering.push(v - 1);
            }
        }
        let mut lookup = BTreeMap::new();
        for (line, l) in lines {
            if l.is_empty() {
                continue;
            }
            let toks: Vec<&str> = l.split(' ').collect();
            if toks.len() != 3 {
                return Err(Error::parse(line, "expected `r1 r2 value`"));
            }
            let key = (parse_word(toks[0], j, line)?, parse_word(toks[1], j, line)?);
            if lookup.insert(key, parse_real(toks[2], line)?).is_some() {
                return Err(Error::parse(line, "duplicate region pair"));
            }
        }
        Self::new(arrangement, orderings, lookup)
    }
}

impl fmt::Display for HelperPayload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for HelperPayload {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_text(s)
    }
}

/// Hyperplane indices sorted by single-split information under `model`,
/// most informative first, ties by index.
pub fn informativeness_order(arr: &Arrangement, model: &ClassModel) -> Result<Vec<usize>> {
    let scores: Vec<f64> = arr
        .hyperplanes()
        .iter()
        .map(|hp| evaluate_hyperplane(model, hp, CountMode::Given))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..arr.len()).collect();
    order.sort_by(|a, b| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b)));
    Ok(order)
}

/// Two sources observing the same class label: source `i` draws its own
/// feature point from `models[i]` given that label.
#[derive(Debug, Clone, PartialEq)]
pub struct SourcePair {
    models: [ClassModel; 2],
}

impl SourcePair {
    pub fn new(first: ClassModel, second: ClassModel) -> Result<Self> {
        if first.num_classes() != second.num_classes() {
            return Err(Error::DimensionMismatch {
                expected: first.num_classes(),
                found: second.num_classes(),
            });
        }
        if first.dimension() != second.dimension() {
            return Err(Error::DimensionMismatch {
                expected: first.dimension(),
                found: second.dimension(),
            });
        }
        Ok(Self { models: [first, second] })
    }

    /// Both sources share one model.
    pub fn symmetric(model: ClassModel) -> Self {
        Self {
            models: [model.clone(), model],
        }
    }

    pub fn model(&self, source: Source) -> &ClassModel {
        &self.models[source.index()]
    }

    pub fn dimension(&self) -> usize {
        self.models[0].dimension()
    }

    /// `count` joint draws; the label follows the first model's counts.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        if count == 0 {
            return Err(Error::invalid("sample count must be positive"));
        }
        let mut r = rng::seeded(seed);
        let chooser = WeightedIndex::new(self.models[0].counts()).map_err(|e| Error::invalid(e.to_string()))?;
        let n = self.dimension();
        Ok((0..count)
            .map(|_| {
                let k = chooser.sample(&mut r);
                let mut x1 = vec![0.0; n];
                let mut x2 = vec![0.0; n];
                self.models[0].draw_from_class(k, &mut r, &mut x1);
                self.models[1].draw_from_class(k, &mut r, &mut x2);
                (x1, x2)
            })
            .collect())
    }
}

/// Helper payload plus what was dropped while building it.
#[derive(Debug, Clone, PartialEq)]
pub struct HelperBuild {
    pub payload: HelperPayload,
    /// Region pairs formed from observed regions that never co-occurred.
    pub unobserved_pairs: usize,
    pub warnings: Vec<String>,
}

/// Builds the helper: orderings by informativeness for each source's model
/// and a lookup from every pair of regions seen in `samples` joint draws to
/// `f` at the pair of region centroids. Words never seen are rejected at
/// decode time.
pub fn build_helper(arr: &Arrangement, sources: &SourcePair, f: JointFunction, samples: usize, seed: u64) -> Result<HelperBuild> {
    if arr.dimension() != sources.dimension() {
        return Err(Error::DimensionMismatch {
            expected: sources.dimension(),
            found: arr.dimension(),
        });
    }
    let orderings = [
        informativeness_order(arr, sources.model(Source::First))?,
        informativeness_order(arr, sources.model(Source::Second))?,
    ];
    let n = arr.dimension();
    let draws = sources.sample(samples, seed)?;
    let mut sums: [BTreeMap<SignWord, (Vec<f64>, u64)>; 2] = [BTreeMap::new(), BTreeMap::new()];
    let mut pairs = BTreeSet::new();
    for (x1, x2) in &draws {
        let w1 = arr.word_unchecked(x1);
        let w2 = arr.word_unchecked(x2);
        for (acc, (w, x)) in sums.iter_mut().zip([(w1, x1), (w2, x2)]) {
            let e = acc.entry(w).or_insert_with(|| (vec![0.0; n], 0));
            e.0.iter_mut().zip(x.iter()).for_each(|(s, v)| *s += v);
            e.1 += 1;
        }
        pairs.insert((w1, w2));
    }
    let centroid = |i: usize, w: &SignWord| -> Vec<f64> {
        let (s, c) = &sums[i][w];
        s.iter().map(|v| v / *c as f64).collect()
    };
    // Every pair of observed words gets an entry: the centroids are per
    // source, so a pair never drawn jointly is still well defined.
    let lookup: BTreeMap<(SignWord, SignWord), f64> = sums[0]
        .keys()
        .flat_map(|a| sums[1].keys().map(move |b| (*a, *b)))
        .map(|(a, b)| ((a, b), f.eval(&centroid(0, &a), &centroid(1, &b))))
        .collect();
    let unobserved_pairs = lookup.len() - pairs.len();
    let mut warnings = Vec::new();
    if unobserved_pairs > 0 {
        warnings.push(format!(
            "{unobserved_pairs} region pair(s) never drawn jointly; filled from per-source centroids"
        ));
    }
    Ok(HelperBuild {
        payload: HelperPayload::new(arr.clone(), orderings, lookup)?,
        unobserved_pairs,
        warnings,
    })
}

/// The `J` bits source `source` sends for its point `x`: bit `t` is the side
/// of hyperplane `π(t)`.
pub fn encode_source(payload: &HelperPayload, source: Source, x: &[f64]) -> Result<Vec<bool>> {
    let arr = &payload.arrangement;
    if x.len() != arr.dimension() {
        return Err(Error::DimensionMismatch {
            expected: arr.dimension(),
            found: x.len(),
        });
    }
    Ok(payload.orderings[source.index()]
        .iter()
        .map(|j| arr.hyperplanes()[*j].side(x))
        .collect())
}

/// Sign word of a source from its transmitted bits.
pub fn decode_word(payload: &HelperPayload, source: Source, bits: &[bool]) -> Result<SignWord> {
    let order = &payload.orderings[source.index()];
    if bits.len() != order.len() {
        return Err(Error::DimensionMismatch {
            expected: order.len(),
            found: bits.len(),
        });
    }
    let mut word = vec![false; order.len()];
    for (t, j) in order.iter().enumerate() {
        word[*j] = bits[t];
    }
    SignWord::from_bits(&word)
}

/// Decoder output for one received pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decoded {
    Value(f64),
    Reject,
}

/// Inverts both orderings and looks the region pair up.
pub fn decode_joint(payload: &HelperPayload, bits1: &[bool], bits2: &[bool]) -> Result<Decoded> {
    let key = (
        decode_word(payload, Source::First, bits1)?,
        decode_word(payload, Source::Second, bits2)?,
    );
    Ok(payload.lookup.get(&key).map_or(Decoded::Reject, |v| Decoded::Value(*v)))
}

/// Empirical performance of a helper on fresh joint draws.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperRun {
    pub samples: usize,
    /// Draws whose decoded region pair equals both encoders' sign words.
    pub recovered: usize,
    pub rejected: usize,
    /// Mean `|f(x1, x2) − decoded|` over accepted draws.
    pub distortion: f64,
    /// Standard error of `distortion`.
    pub std_error: f64,
    /// Per-draw absolute errors, `None` for rejected draws.
    pub errors: Vec<Option<f64>>,
}

/// Encodes and decodes `samples` joint draws.
pub fn simulate_hyper_binning(
    payload: &HelperPayload,
    sources: &SourcePair,
    f: JointFunction,
    samples: usize,
    seed: u64,
) -> Result<HyperRun> {
    let draws = sources.sample(samples, seed)?;
    let arr = &payload.arrangement;
    let mut recovered = 0;
    let mut errors = Vec::with_capacity(samples);
    for (x1, x2) in &draws {
        let b1 = encode_source(payload, Source::First, x1)?;
        let b2 = encode_source(payload, Source::Second, x2)?;
        let w1 = decode_word(payload, Source::First, &b1)?;
        let w2 = decode_word(payload, Source::Second, &b2)?;
        if w1 == arr.word_unchecked(x1) && w2 == arr.word_unchecked(x2) {
            recovered += 1;
        }
        errors.push(match decode_joint(payload, &b1, &b2)? {
            Decoded::Value(v) => Some((f.eval(x1, x2) - v).abs()),
            Decoded::Reject => None,
        });
    }
    let accepted: Vec<f64> = errors.iter().flatten().copied().collect();
    let k = accepted.len() as f64;
    let (distortion, std_error) = if accepted.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let mean = accepted.iter().sum::<f64>() / k;
        let var = accepted.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
        (mean, (var / k).sqrt())
    };
    Ok(HyperRun {
        samples,
        recovered,
        rejected: samples - accepted.len(),
        distortion,
        std_error,
        errors,
    })
}

/// Rates, codebook size and error of one scheme run.
#[derive(Debug, Clone, PartialEq)]
pub struct CodingReport {
    pub scheme: String,
    pub bits_per_source: Vec<f64>,
    pub codebook_size: f64,
    /// Error probability for discrete targets, mean absolute error for real
    /// ones.
    pub error: f64,
    pub trials: usize,
}

impl CodingReport {
    pub const CSV_HEADER: &'static str = "scheme,R1,R2,sum_rate,codebook_size,error,trials";

    pub fn sum_rate(&self) -> f64 {
        self.bits_per_source.iter().sum()
    }

    pub fn csv_row(&self) -> String {
        let r = |i: usize| self.bits_per_source.get(i).copied().unwrap_or(0.0);
        format!(
            "{},{},{},{},{},{},{}",
            self.scheme,
            r(0),
            r(1),
            self.sum_rate(),
            self.codebook_size,
            self.error,
            self.trials
        )
    }

    pub fn to_csv(reports: &[CodingReport]) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in reports {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }
}

/// Partition of a source's alphabet into symbols that are interchangeable
/// for computing `f`: `x ~ x'` iff `f(x, y) = f(x', y)` for every `y` where
/// both pairs have positive probability. Classes hold alphabet indices.
pub fn equivalence_classes(table: &FunctionTable, source: Source) -> Vec<Vec<usize>> {
    let (n, m) = (table.size(source), table.size(source.other()));
    let at = |x: usize, y: usize| match source {
        Source::First => (table.value(x, y), table.pmf(x, y)),
        Source::Second => (table.value(y, x), table.pmf(y, x)),
    };
    let same = |a: usize, b: usize| {
        (0..m).all(|y| {
            let (va, pa) = at(a, y);
            let (vb, pb) = at(b, y);
            pa == 0.0 || pb == 0.0 || va == vb
        })
    };
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for x in 0..n {
        match classes.iter_mut().find(|c| c.iter().all(|y| same(*y, x))) {
            Some(c) => c.push(x),
            None => classes.push(vec![x]),
        }
    }
    classes
}

/// Result of [`xor_equivalence_demo`].
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceDemo {
    pub table: FunctionTable,
    /// Equivalence classes per source, as alphabet symbols.
    pub classes: [Vec<Vec<i64>>; 2],
    /// Pairs where `f` is not recovered from the class indices.
    pub decoding_failures: usize,
    pub report: CodingReport,
}

fn bits_for(count: usize) -> f64 {
    (count as f64).log2().ceil()
}

/// Classes, rates and exhaustive decodability for a function table whose
/// sources send only their equivalence-class indices.
pub fn equivalence_coding(table: &FunctionTable, scheme: &str) -> EquivalenceDemo {
    let classes = Source::BOTH.map(|s| equivalence_classes(table, s));
    let class_of = |s: Source, x: usize| {
        classes[s.index()]
            .iter()
            .position(|c| c.contains(&x))
            .expect("classes cover the alphabet")
    };
    let mut decoded: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (i, j) in table.support() {
        decoded
            .entry((class_of(Source::First, i), class_of(Source::Second, j)))
            .or_insert(table.value(i, j));
    }
    let decoding_failures = table
        .support()
        .into_iter()
        .filter(|(i, j)| decoded[&(class_of(Source::First, *i), class_of(Source::Second, *j))] != table.value(*i, *j))
        .count();
    let symbols = Source::BOTH.map(|s| {
        classes[s.index()]
            .iter()
            .map(|c| c.iter().map(|x| table.alphabet(s)[*x]).collect())
            .collect()
    });
    let report = CodingReport {
        scheme: scheme.to_string(),
        bits_per_source: vec![bits_for(classes[0].len()), bits_for(classes[1].len())],
        codebook_size: (classes[0].len() * classes[1].len()) as f64,
        error: decoding_failures as f64 / table.support().len() as f64,
        trials: table.support().len(),
    };
    EquivalenceDemo {
        table: table.clone(),
        classes: symbols,
        decoding_failures,
        report,
    }
}

/// Parity function `(x1 + x2) mod 2` on `{0,1,2,3}²`, uniform.
pub fn parity_table() -> FunctionTable {
    FunctionTable::uniform(vec![0, 1, 2, 3], vec![0, 1, 2, 3], |a, b| ((a + b) % 2) as f64).expect("valid table")
}

/// Equivalence-class coding of the parity table.
pub fn xor_equivalence_demo() -> EquivalenceDemo {
    equivalence_coding(&parity_table(), "parity-classes")
}

/// Mixture split probability `q_j` of each hyperplane.
pub fn split_probabilities(arr: &Arrangement, model: &ClassModel) -> Result<Vec<f64>> {
    arr.hyperplanes()
        .iter()
        .map(|hp| model.side_probability(hp).map(|q| q.clamp(0.0, 1.0)))
        .collect()
}

/// `Σ_j h(q_j)`, the exponent of the hyper binning codebook size.
pub fn codebook_exponent(q: &[f64]) -> f64 {
    q.iter().map(|x| h(*x)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Hyperplane;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sw_region_examples() {
        assert!(sw_admissible(1.0, 1.0, 0.5, 0.5, 1.5).unwrap());
        assert!(!sw_admissible(0.4, 1.5, 0.5, 0.5, 1.5).unwrap());
        assert!(sw_admissible(-0.1, 1.0, 0.0, 0.0, 0.0).is_err());
        let t = FunctionTable::uniform((0..4).collect(), (0..4).collect(), |a, b| (4 * a + b) as f64).unwrap();
        let (h1g2, h2g1, h12) = t.entropies().unwrap();
        assert_abs_diff_eq!(h12, 4.0, epsilon = 1e-12);
        assert!(!sw_admissible(2.0, 1.9, h1g2, h2g1, h12).unwrap());
        assert!(sw_admissible(2.0, 2.0, h1g2, h2g1, h12).unwrap());
    }

    #[test]
    fn codebook_size_examples() {
        assert_abs_diff_eq!(hp_codebook_size(&[0.5; 3]).unwrap(), 8.0, epsilon = 1e-12);
        assert_eq!(hp_codebook_size(&[1.0; 3]).unwrap(), 1.0);
        // 2^{2 h(0.89)}, computed at 30 digits with mpmath.
        assert_abs_diff_eq!(
            hp_codebook_size(&[0.89, 0.89]).unwrap(),
            1.999_767_000_128_063_3,
            epsilon = 1e-12
        );
        assert!(hp_codebook_size(&[1.2]).is_err());
    }

    fn block_labeling() -> BTreeMap<(usize, usize), u8> {
        let mut l = BTreeMap::new();
        for i in 0..4 {
            for j in 0..4 {
                let label = match (i, j) {
                    (0, 1..) => 1,
                    (1.., 1..) => 2,
                    (0 | 1, 0) => 3,
                    _ => 4,
                };
                l.insert((i, j), label);
            }
        }
        l
    }

    #[test]
    fn partition_information_examples() {
        let t = FunctionTable::uniform((0..4).collect(), (0..4).collect(), |_, _| 0.0).unwrap();
        assert_eq!(partition_information(&t, &identity_labeling(&t)).unwrap(), 0.0);
        let block = partition_information(&t, &block_labeling()).unwrap();
        assert_abs_diff_eq!(block, 4.0 - 1.669_736_717_803_482_5, epsilon = 1e-12);
        let hyper = information_from_masses(4.0, &[0.375, 0.531, 0.031, 0.063]).unwrap();
        assert_abs_diff_eq!(hyper, 4.0 - 1.422_191_884_363_877_4, epsilon = 1e-12);
        let mut partial = block_labeling();
        partial.remove(&(2, 2));
        assert!(partition_information(&t, &partial).is_err());
    }

    #[test]
    fn table_text_round_trip() {
        let t = FunctionTable::new(vec![1, 2], vec![0, 5], vec![0.5, -1.0, 2.0, 0.1], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let text = t.to_text();
        let back = FunctionTable::from_text(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_text(), text);
        assert!(FunctionTable::from_text("2 2\n1 0 0 0.5\n1 5 0 0.5\n").is_err());
        assert!(FunctionTable::new(vec![0], vec![0], vec![1.0], vec![0.7]).is_err());
    }

    #[test]
    fn parity_classes() {
        let demo = xor_equivalence_demo();
        assert_eq!(demo.classes[0], vec![vec![0, 2], vec![1, 3]]);
        assert_eq!(demo.classes[1], vec![vec![0, 2], vec![1, 3]]);
        assert_eq!(demo.report.bits_per_source, vec![1.0, 1.0]);
        assert_eq!(demo.report.sum_rate(), 2.0);
        assert_eq!(demo.decoding_failures, 0);
        assert_eq!(demo.report.trials, 16);
    }

    #[test]
    fn cover_degenerate_source_never_errs() {
        let cfg = CoverConfig::new(vec![1.0, 0.0], 20, 0.1, 200, 5);
        let sim = cover_binning_simulate(&cfg).unwrap();
        assert_eq!(sim.error_rate(), 0.0);
        assert_eq!(sim.typical_set_size, 1);
    }

    #[test]
    fn cover_bernoulli_typical_set() {
        let cfg = CoverConfig::new(vec![0.89, 0.11], 20, 0.3, 300, 1);
        let sim = cover_binning_simulate(&cfg).unwrap();
        assert_eq!(sim.typical_set_size, 190);
        assert_eq!(sim.bins, 64);
        assert!(cover_binning_simulate(&CoverConfig::new(vec![0.5, 0.5], 40, 0.8, 10, 0)).is_err());
    }

    #[test]
    fn cover_full_rate_errors_only_from_atypicality() {
        let cfg = CoverConfig::new(vec![0.7, 0.3], 12, 1.0, 1000, 2);
        let sim = cover_binning_simulate(&cfg).unwrap();
        assert_eq!(sim.ambiguous, 0);
        assert_eq!(sim.error_rate(), sim.atypical_rate());
    }

    fn axes_payload(orders: [Vec<usize>; 2]) -> HelperPayload {
        let arr = Arrangement::new(
            2,
            vec![
                Hyperplane::new(vec![1.0, 0.0], 0.0).unwrap(),
                Hyperplane::new(vec![0.0, 1.0], 0.0).unwrap(),
            ],
        )
        .unwrap();
        let mut lookup = BTreeMap::new();
        lookup.insert(("10".parse().unwrap(), "01".parse().unwrap()), 1.25);
        HelperPayload::new(arr, orders, lookup).unwrap()
    }

    #[test]
    fn encode_examples() {
        let p = axes_payload([vec![0, 1], vec![1, 0]]);
        assert_eq!(encode_source(&p, Source::First, &[1.0, -1.0]).unwrap(), vec![true, false]);
        assert_eq!(encode_source(&p, Source::Second, &[1.0, -1.0]).unwrap(), vec![false, true]);
        assert!(encode_source(&p, Source::First, &[1.0]).is_err());
        let b1 = encode_source(&p, Source::First, &[1.0, -1.0]).unwrap();
        let b2 = encode_source(&p, Source::Second, &[-1.0, 1.0]).unwrap();
        assert_eq!(decode_joint(&p, &b1, &b2).unwrap(), Decoded::Value(1.25));
        assert_eq!(decode_joint(&p, &[false, false], &b2).unwrap(), Decoded::Reject);
        assert!(decode_joint(&p, &[true], &b1).is_err());
    }

    #[test]
    fn payload_round_trip() {
        let p = axes_payload([vec![0, 1], vec![1, 0]]);
        let text = p.to_text();
        assert!(text.contains("pi1: 1 2\npi2: 2 1\n"));
        let back = HelperPayload::from_text(&text).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.to_text(), text);
        assert!(HelperPayload::new(p.arrangement.clone(), [vec![0, 0], vec![0, 1]], BTreeMap::new()).is_err());
    }

    #[test]
    fn helper_orders_by_information() {
        let model = ClassModel::isotropic(vec![vec![-2.0, 0.0], vec![2.0, 0.0]], 1.0, vec![1.0, 1.0]).unwrap();
        let arr = Arrangement::new(
            2,
            vec![
                Hyperplane::new(vec![0.0, 1.0], 0.0).unwrap(),
                Hyperplane::new(vec![1.0, 0.0], 0.0).unwrap(),
            ],
        )
        .unwrap();
        let build = build_helper(&arr, &SourcePair::symmetric(model.clone()), JointFunction::Sum, 5000, 3).unwrap();
        assert_eq!(build.payload.orderings, [vec![1, 0], vec![1, 0]]);
        let single = Arrangement::new(2, vec![Hyperplane::new(vec![0.0, 1.0], 0.0).unwrap()]).unwrap();
        let build = build_helper(&single, &SourcePair::symmetric(model.clone()), JointFunction::Sum, 5000, 3).unwrap();
        assert_eq!(build.payload.orderings, [vec![0], vec![0]]);
        let text = build.payload.to_text();
        assert_eq!(HelperPayload::from_text(&text).unwrap().to_text(), text);
    }

    #[test]
    fn empty_arrangement_decodes_global_centroid() {
        let model = ClassModel::isotropic(vec![vec![1.0, 0.0], vec![-1.0, 2.0]], 0.5, vec![1.0, 3.0]).unwrap();
        let sources = SourcePair::symmetric(model);
        let arr = Arrangement::empty(2).unwrap();
        let build = build_helper(&arr, &sources, JointFunction::Sum, 2000, 9).unwrap();
        assert_eq!(build.payload.lookup.len(), 1);
        let text = build.payload.to_text();
        assert!(text.contains("\n- - "));
        assert_eq!(HelperPayload::from_text(&text).unwrap(), build.payload);
        let run = simulate_hyper_binning(&build.payload, &sources, JointFunction::Sum, 1000, 10).unwrap();
        assert_eq!(run.recovered, 1000);
        assert_eq!(run.rejected, 0);
    }
}
