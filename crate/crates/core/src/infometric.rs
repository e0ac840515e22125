//! Entropy primitives and the partition mutual-information objective
//!
//! `I(M) = h(p_{M+1}) − Σ_k (n_k/N) h(p_k)`, with `p_{M+1} = (1/N) Σ n_k p_k`,
//!
//! together with the increment bounds and series used to study how `I(M)`
//! evolves as classes are added. All entropies are in bits.
//!
//! Some published statements about `I(M)` follow from airtight concavity
//! steps and are exposed as checkable bounds; others rest on proof steps with
//! gaps and are only audited empirically by [`proposition_audit`].

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng;

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}

#[inline]
fn plogp(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        p * p.log2()
    }
}

/// Binary entropy without validation; callers guarantee `p ∈ [0, 1]`.
#[inline]
pub(crate) fn h(p: f64) -> f64 {
    -plogp(p) - plogp(1.0 - p)
}

/// Binary entropy `h(p)` in bits, with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    check_probability(p)?;
    Ok(h(p))
}

/// Shannon entropy of a probability vector in bits.
pub fn shannon_entropy(dist: &[f64]) -> Result<f64> {
    if dist.is_empty() {
        return Err(Error::invalid("empty distribution"));
    }
    if let Some(bad) = dist.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
        return Err(Error::InvalidProbability(*bad));
    }
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("distribution sums to {total}, not 1")));
    }
    Ok(-dist.iter().map(|p| plogp(*p)).sum::<f64>())
}

/// Inverse of `h` on `[0, ½]`: the `x ≤ ½` with `h(x) = value`.
pub fn inverse_binary_entropy(value: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::invalid(format!("entropy {value} outside [0, 1]")));
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < value {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Split probabilities and class counts feeding `I(M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionProfile {
    p: Vec<f64>,
    counts: Vec<f64>,
    total: f64,
    p_right: f64,
}

impl PartitionProfile {
    /// Profile with `N = Σ n_k`.
    pub fn new(p: Vec<f64>, counts: Vec<f64>) -> Result<Self> {
        let total = counts.iter().sum();
        Self::with_total(p, counts, total)
    }

    /// Profile with an explicit total, which must equal `Σ n_k` to 1e-9
    /// relative.
    pub fn with_total(p: Vec<f64>, counts: Vec<f64>, total: f64) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::invalid("profile needs at least one class"));
        }
        if p.len() != counts.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                found: counts.len(),
            });
        }
        for &pk in &p {
            check_probability(pk)?;
        }
        if counts.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::invalid("class counts must be positive"));
        }
        let sum: f64 = counts.iter().sum();
        if (sum - total).abs() > 1e-9 * sum {
            return Err(Error::invalid(format!("total {total} does not match count sum {sum}")));
        }
        let p_right = if p.iter().all(|pk| *pk == p[0]) {
            p[0]
        } else {
            (p.iter().zip(&counts).map(|(pk, nk)| pk * nk).sum::<f64>() / total).clamp(0.0, 1.0)
        };
        Ok(Self {
            p,
            counts,
            total,
            p_right,
        })
    }

    /// Symmetric counts `n_k = N / M` (with `N = M`).
    pub fn uniform(p: Vec<f64>) -> Result<Self> {
        let counts = vec![1.0; p.len()];
        Self::new(p, counts)
    }

    /// Asymmetric counts `n_k ∝ p_k`, renormalized to `N = 1`. Classes with
    /// `p_k = 0` carry no data and are dropped.
    pub fn proportional(p: Vec<f64>) -> Result<Self> {
        for &pk in &p {
            check_probability(pk)?;
        }
        let s: f64 = p.iter().sum();
        if s <= 0.0 {
            return Err(Error::invalid("proportional counts need some positive p_k"));
        }
        let kept: Vec<f64> = p.into_iter().filter(|pk| *pk > 0.0).collect();
        let counts = kept.iter().map(|pk| pk / s).collect();
        Self::new(kept, counts)
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// `p_{M+1} = (1/N) Σ n_k p_k`.
    pub fn p_right(&self) -> f64 {
        self.p_right
    }
}

/// `I(M) = h(p_{M+1}) − Σ (n_k/N) h(p_k)`.
pub fn partition_mi(profile: &PartitionProfile) -> f64 {
    let avg: f64 = profile
        .p
        .iter()
        .zip(&profile.counts)
        .map(|(pk, nk)| nk / profile.total * h(*pk))
        .sum();
    h(profile.p_right) - avg
}

/// `I(M)` under symmetric counts: `h(p̄_M) − h̄_M`.
pub(crate) fn uniform_mi(p: &[f64]) -> f64 {
    let m = p.len() as f64;
    let pbar = p.iter().sum::<f64>() / m;
    let hbar = p.iter().map(|x| h(*x)).sum::<f64>() / m;
    h(pbar) - hbar
}

/// `I(M)` under counts proportional to `p_k`.
pub(crate) fn proportional_mi(p: &[f64]) -> f64 {
    let s: f64 = p.iter().sum();
    if s <= 0.0 {
        return 0.0;
    }
    let p_right = p.iter().map(|x| x * x).sum::<f64>() / s;
    let avg: f64 = p.iter().map(|x| x / s * h(*x)).sum();
    h(p_right.clamp(0.0, 1.0)) - avg
}

/// Running means `p̄_M` and `h̄_M` of a probability sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricSequenceStats {
    pub m: usize,
    pub pbar: f64,
    pub hbar: f64,
}

impl SymmetricSequenceStats {
    pub fn new(p: &[f64]) -> Result<Self> {
        let (first, rest) = p.split_first().ok_or_else(|| Error::invalid("empty probability sequence"))?;
        check_probability(*first)?;
        let mut stats = Self {
            m: 1,
            pbar: *first,
            hbar: h(*first),
        };
        for &pk in rest {
            stats = stats.push(pk)?;
        }
        Ok(stats)
    }

    /// Stats after appending `p_{M+1}`:
    /// `(M+1) p̄_{M+1} = M p̄_M + p_{M+1}`, and likewise for `h̄`.
    pub fn push(self, p_next: f64) -> Result<Self> {
        check_probability(p_next)?;
        let m = self.m as f64;
        Ok(Self {
            m: self.m + 1,
            pbar: (m * self.pbar + p_next) / (m + 1.0),
            hbar: (m * self.hbar + h(p_next)) / (m + 1.0),
        })
    }

    /// `p̄*_M ≤ ½` solving `h(p̄*_M) = h̄_M`.
    pub fn pbar_star(&self) -> f64 {
        inverse_binary_entropy(self.hbar.clamp(0.0, 1.0)).expect("clamped into range")
    }

    /// `I(M) = h(p̄_M) − h̄_M`.
    pub fn mi(&self) -> f64 {
        h(self.pbar) - self.hbar
    }
}

/// Bounds on `ΔI = I(M+1) − I(M)` under symmetric counts, with the actual
/// increment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementBounds {
    /// `(h̄_M − h(p̄_M)) / (M+1)`; always a valid lower bound by concavity.
    pub lower: f64,
    /// `(h̄_M − h(p_{M+1})) / (M+1)`; valid under [`increment_upper_preconditions`].
    pub upper: f64,
    pub actual: f64,
}

/// Increment bounds for `p = (p_1, …, p_{M+1})`, `M ≥ 1`.
pub fn mi_increment_bounds(p: &[f64]) -> Result<IncrementBounds> {
    if p.len() < 2 {
        return Err(Error::invalid("need M+1 >= 2 probabilities"));
    }
    let (last, head) = p.split_last().expect("len >= 2");
    let stats = SymmetricSequenceStats::new(head)?;
    check_probability(*last)?;
    let m1 = (stats.m + 1) as f64;
    let next = stats.push(*last)?;
    Ok(IncrementBounds {
        lower: (stats.hbar - h(stats.pbar)) / m1,
        upper: (stats.hbar - h(*last)) / m1,
        actual: next.mi() - stats.mi(),
    })
}

/// Preconditions under which the upper increment bound is derived:
/// `½ < p_1 < … < p_{M+1}` and `h(p̄_{M+1}) ≤ h(p̄_M)`.
pub fn increment_upper_preconditions(p: &[f64]) -> bool {
    if p.len() < 2 || p.iter().any(|x| !(*x > 0.5 && *x <= 1.0)) {
        return false;
    }
    if p.windows(2).any(|w| w[0] >= w[1]) {
        return false;
    }
    let (last, head) = p.split_last().expect("len >= 2");
    let before = head.iter().sum::<f64>() / head.len() as f64;
    let after = (before * head.len() as f64 + last) / p.len() as f64;
    h(after) <= h(before)
}

/// Partial sums of the symmetric-count series
/// `S_T = I(1) + Σ_{M=1}^{T} (h̄_M − h(p_{M+1}))/(M+1)` next to the directly
/// computed `I(T+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSums {
    /// `series[t] = S_t` for `t = 0..=T` (`S_0 = I(1) = 0`).
    pub series: Vec<f64>,
    /// `direct[t] = I(t+1)` under symmetric counts.
    pub direct: Vec<f64>,
    /// `h(p̄_{t+1}) − h(p_1)`: the exact gap `I(t+1) − S_t`, which the series
    /// omits.
    pub residual: Vec<f64>,
}

/// Evaluates the series for `p_k = generator(k)`, `k = 1..=terms+1`.
pub fn mi_symmetric_partial_sums<F>(mut generator: F, terms: usize) -> Result<PartialSums>
where
    F: FnMut(usize) -> f64,
{
    if terms == 0 {
        return Err(Error::invalid("terms must be positive"));
    }
    let p: Vec<f64> = (1..=terms + 1).map(&mut generator).collect();
    if let Some(bad) = p.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
        return Err(Error::invalid(format!("sequence value {bad} not in (0, 1)")));
    }
    let mut stats = SymmetricSequenceStats::new(&p[..1])?;
    let first = stats.mi();
    let mut series = vec![first];
    let mut direct = vec![first];
    let mut residual = vec![0.0];
    let mut s = first;
    for &next in &p[1..] {
        let m1 = (stats.m + 1) as f64;
        s += (stats.hbar - h(next)) / m1;
        stats = stats.push(next)?;
        series.push(s);
        direct.push(stats.mi());
        residual.push(h(stats.pbar) - h(p[0]));
    }
    Ok(PartialSums {
        series,
        direct,
        residual,
    })
}

/// Randomized instance generator and tolerances for [`proposition_audit`].
#[derive(Debug, Clone, PartialEq)]
pub struct AuditConfig {
    pub trials: usize,
    pub seed: u64,
    /// `p_k` drawn i.i.d. uniform on `(low, high)` then sorted ascending.
    pub low: f64,
    pub high: f64,
    /// `M` drawn uniformly from `1..=max_m`.
    pub max_m: usize,
    /// Number of series terms `T` for the convergence rows.
    pub series_terms: usize,
    pub tolerance: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            trials: 10_000,
            seed: 0,
            low: 0.5,
            high: 1.0,
            max_m: 20,
            series_terms: 200,
            tolerance: 1e-12,
        }
    }
}

/// Statement checked by an audit row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Claim {
    /// `I(M+1) ≥ I(M)` with `n_k ∝ p_k`.
    Monotone,
    /// `ΔI ≥ (h̄_M − h(p̄_M))/(M+1)`, symmetric counts.
    IncrementLower,
    /// `ΔI ≤ (h̄_M − h(p_{M+1}))/(M+1)`, on instances meeting
    /// [`increment_upper_preconditions`].
    IncrementUpper,
    /// The same upper bound on every instance.
    IncrementUpperUnconditional,
    /// `S_T = I(T+1)` for the series partial sum.
    SeriesIdentity,
    /// `|S_T − S_{T−1}| ≤ |S_{⌈T/2⌉} − S_{⌈T/2⌉−1}|` for `p_k → 1`.
    SeriesConvergence,
    /// `h((1/N) Σ n_k p_k) > h(p̄_M)` with `n_k ∝ p_k`.
    AsymmetricEntropyOrder,
    /// `I(M)` with `n_k ∝ p_k` at least `I(M)` with symmetric counts.
    AsymmetricDominates,
}

impl Claim {
    pub const ALL: [Claim; 8] = [
        Claim::Monotone,
        Claim::IncrementLower,
        Claim::IncrementUpper,
        Claim::IncrementUpperUnconditional,
        Claim::SeriesIdentity,
        Claim::SeriesConvergence,
        Claim::AsymmetricEntropyOrder,
        Claim::AsymmetricDominates,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Claim::Monotone => "monotone",
            Claim::IncrementLower => "increment_lower",
            Claim::IncrementUpper => "increment_upper",
            Claim::IncrementUpperUnconditional => "increment_upper_unconditional",
            Claim::SeriesIdentity => "series_identity",
            Claim::SeriesConvergence => "series_convergence",
            Claim::AsymmetricEntropyOrder => "asym_entropy_order",
            Claim::AsymmetricDominates => "asym_dominates_sym",
        }
    }
}

/// One audited instance. Unused bounds are NaN and serialize as empty.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub claim: Claim,
    pub trial: usize,
    pub m: usize,
    pub lower: f64,
    pub actual: f64,
    pub upper: f64,
    /// Signed slack; negative beyond tolerance means violated.
    pub margin: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClaimSummary {
    pub instances: usize,
    pub violations: usize,
    pub worst_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub rows: Vec<AuditRow>,
}

impl AuditReport {
    pub fn summary(&self) -> BTreeMap<Claim, ClaimSummary> {
        let mut out: BTreeMap<Claim, ClaimSummary> = BTreeMap::new();
        for row in &self.rows {
            let s = out.entry(row.claim).or_insert(ClaimSummary {
                instances: 0,
                violations: 0,
                worst_margin: f64::INFINITY,
            });
            s.instances += 1;
            s.violations += usize::from(row.violated);
            s.worst_margin = s.worst_margin.min(row.margin);
        }
        out
    }

    pub fn violations(&self, claim: Claim) -> usize {
        self.summary().get(&claim).map_or(0, |s| s.violations)
    }

    /// CSV with header `proposition,trial,M,lower,actual,upper,violated`.
    pub fn to_csv(&self) -> String {
        let cell = |v: f64| if v.is_nan() { String::new() } else { format!("{v}") };
        let mut out = String::from("proposition,trial,M,lower,actual,upper,violated\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.claim.label(),
                r.trial,
                r.m,
                cell(r.lower),
                cell(r.actual),
                cell(r.upper),
                r.violated
            );
        }
        out
    }
}

fn row(claim: Claim, trial: usize, m: usize, lower: f64, actual: f64, upper: f64, margin: f64, tol: f64) -> AuditRow {
    AuditRow {
        claim,
        trial,
        m,
        lower,
        actual,
        upper,
        margin,
        violated: margin < -tol,
    }
}

fn audit_trial(cfg: &AuditConfig, trial: usize) -> Vec<AuditRow> {
    let mut r = rng::substream(cfg.seed, trial as u64);
    let tol = cfg.tolerance;
    let m = r.random_range(1..=cfg.max_m.max(1));
    let mut p: Vec<f64> = (0..=m).map(|_| cfg.low + (cfg.high - cfg.low) * r.random::<f64>()).collect();
    p.sort_by(f64::total_cmp);

    let mut rows = Vec::with_capacity(8);
    let nan = f64::NAN;

    let before = proportional_mi(&p[..m]);
    let after = proportional_mi(&p);
    rows.push(row(Claim::Monotone, trial, m, before, after, nan, after - before, tol));

    let b = mi_increment_bounds(&p).expect("probabilities drawn in range");
    rows.push(row(
        Claim::IncrementLower,
        trial,
        m,
        b.lower,
        b.actual,
        b.upper,
        b.actual - b.lower,
        tol,
    ));
    if increment_upper_preconditions(&p) {
        rows.push(row(
            Claim::IncrementUpper,
            trial,
            m,
            b.lower,
            b.actual,
            b.upper,
            b.upper - b.actual,
            tol,
        ));
    }
    rows.push(row(
        Claim::IncrementUpperUnconditional,
        trial,
        m,
        b.lower,
        b.actual,
        b.upper,
        b.upper - b.actual,
        tol,
    ));

    let head = &p[..m];
    let pbar = head.iter().sum::<f64>() / m as f64;
    let weighted = head.iter().map(|x| x * x).sum::<f64>() / head.iter().sum::<f64>();
    let (hp, hw) = (h(pbar), h(weighted.clamp(0.0, 1.0)));
    rows.push(row(Claim::AsymmetricEntropyOrder, trial, m, hp, hw, nan, hw - hp, 0.0));
    let sym = uniform_mi(head);
    let asym = proportional_mi(head);
    rows.push(row(Claim::AsymmetricDominates, trial, m, sym, asym, nan, asym - sym, tol));

    // Sequences tending to 1 geometrically, so h(p_k) -> 0.
    let start = 0.5 + 0.49 * r.random::<f64>();
    let ratio = 0.5 + 0.45 * r.random::<f64>();
    let t = cfg.series_terms.max(2);
    let sums = mi_symmetric_partial_sums(|k| (1.0 - (1.0 - start) * ratio.powi(k as i32 - 1)).min(1.0 - 1e-15), t)
        .expect("sequence in (0, 1)");
    let (s_t, i_t) = (sums.series[t], sums.direct[t]);
    rows.push(row(
        Claim::SeriesIdentity,
        trial,
        t,
        s_t,
        i_t,
        s_t,
        1e-10 - (s_t - i_t).abs(),
        0.0,
    ));
    let late = (sums.series[t] - sums.series[t - 1]).abs();
    let mid = t.div_ceil(2);
    let early = (sums.series[mid] - sums.series[mid - 1]).abs();
    rows.push(row(Claim::SeriesConvergence, trial, t, nan, late, early, early - late, 0.0));
    rows
}

/// Evaluates every audited claim on `cfg.trials` seeded random instances.
/// Trial `i` draws from stream `seed + i`, so the report does not depend on
/// how trials are scheduled.
pub fn proposition_audit(cfg: &AuditConfig) -> Result<AuditReport> {
    if cfg.trials == 0 {
        return Err(Error::invalid("trials must be positive"));
    }
    if !(0.0..=1.0).contains(&cfg.low) || !(0.0..=1.0).contains(&cfg.high) || cfg.low > cfg.high {
        return Err(Error::invalid("instance interval must satisfy 0 <= low <= high <= 1"));
    }
    let rows = (0..cfg.trials)
        .into_par_iter()
        .map(|t| audit_trial(cfg, t))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    Ok(AuditReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    // Reference values below were computed independently at 30 digits with
    // mpmath.

    #[test]
    fn binary_entropy_examples() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(binary_entropy(9.0 / 16.0).unwrap(), 0.988_699_408_288_497_5, epsilon = 1e-15);
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn binary_entropy_gradient_matches_closed_form() {
        let eps = 1e-6;
        for i in 0..=90 {
            let p = 0.05 + 0.01 * i as f64;
            let fd = (h(p + eps) - h(p - eps)) / (2.0 * eps);
            let exact = ((1.0 - p) / p).log2();
            assert!((fd - exact).abs() < 1e-5, "p={p}: {fd} vs {exact}");
        }
    }

    #[test]
    fn shannon_entropy_examples() {
        assert_abs_diff_eq!(shannon_entropy(&[1.0 / 16.0; 16]).unwrap(), 4.0, epsilon = 1e-14);
        let block = shannon_entropy(&[3.0 / 16.0, 9.0 / 16.0, 2.0 / 16.0, 2.0 / 16.0]).unwrap();
        assert_abs_diff_eq!(block, 1.669_736_717_803_482_5, epsilon = 1e-14);
        assert!((block - 1.67).abs() <= 0.005);
        let hyper = shannon_entropy(&[0.375, 0.531, 0.031, 0.063]).unwrap();
        assert_abs_diff_eq!(hyper, 1.422_191_884_363_877_4, epsilon = 1e-14);
        assert!((hyper - 1.42).abs() <= 0.005);
        assert!(shannon_entropy(&[0.5, 0.4]).is_err());
        assert!(shannon_entropy(&[1.5, -0.5]).is_err());
        assert!(shannon_entropy(&[]).is_err());
    }

    #[test]
    fn partition_mi_examples() {
        let one = PartitionProfile::new(vec![0.73], vec![5.0]).unwrap();
        assert_eq!(partition_mi(&one), 0.0);
        let sep = PartitionProfile::new(vec![0.99, 0.01], vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(partition_mi(&sep), 0.919_206_864_104_088_8, epsilon = 1e-14);
        let mixed = PartitionProfile::uniform(vec![0.6, 0.9]).unwrap();
        assert_abs_diff_eq!(partition_mi(&mixed), 0.091_305_030_437_157_93, epsilon = 1e-14);
    }

    #[test]
    fn profile_validation() {
        assert!(PartitionProfile::new(vec![], vec![]).is_err());
        assert!(PartitionProfile::new(vec![0.5], vec![1.0, 2.0]).is_err());
        assert!(PartitionProfile::new(vec![1.5], vec![1.0]).is_err());
        assert!(PartitionProfile::new(vec![0.5], vec![0.0]).is_err());
        assert!(PartitionProfile::with_total(vec![0.5, 0.5], vec![1.0, 2.0], 4.0).is_err());
        let p = PartitionProfile::with_total(vec![0.2, 0.8], vec![1.0, 3.0], 4.0).unwrap();
        assert_abs_diff_eq!(p.p_right(), (0.2 + 2.4) / 4.0, epsilon = 1e-15);
    }

    #[test]
    fn increment_bounds_examples() {
        let b = mi_increment_bounds(&[0.6, 0.9]).unwrap();
        assert_abs_diff_eq!(b.lower, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.upper, 0.250_977_500_432_693_7, epsilon = 1e-14);
        assert_abs_diff_eq!(b.actual, 0.091_305_030_437_157_93, epsilon = 1e-14);

        let b = mi_increment_bounds(&[0.7, 0.7, 0.7, 0.7]).unwrap();
        assert_abs_diff_eq!(b.lower, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.upper, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.actual, 0.0, epsilon = 1e-15);

        let p = [0.55, 0.7, 0.95];
        assert!(increment_upper_preconditions(&p));
        let b = mi_increment_bounds(&p).unwrap();
        assert_abs_diff_eq!(b.lower, -0.005_800_442_105_238_17, epsilon = 1e-14);
        assert_abs_diff_eq!(b.upper, 0.216_878_573_164_431_44, epsilon = 1e-14);
        assert_abs_diff_eq!(b.actual, 0.099_085_312_180_633_69, epsilon = 1e-14);
        assert!(b.lower <= b.actual && b.actual <= b.upper);

        assert!(mi_increment_bounds(&[0.5]).is_err());
    }

    #[test]
    fn sequence_stats_recursion_and_inverse() {
        let p = [0.6, 0.7, 0.95, 0.51];
        let s = SymmetricSequenceStats::new(&p).unwrap();
        assert_eq!(s.m, 4);
        assert_abs_diff_eq!(s.pbar, p.iter().sum::<f64>() / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h(s.pbar_star()), s.hbar, epsilon = 1e-12);
        assert!(s.pbar_star() <= 0.5);
        assert!(s.pbar >= s.pbar_star() && s.pbar <= 1.0 - s.pbar_star());
        assert_abs_diff_eq!(inverse_binary_entropy(1.0).unwrap(), 0.5, epsilon = 1e-7);
        assert!(inverse_binary_entropy(0.0).unwrap() < 1e-50);
    }

    #[test]
    fn partial_sums_constant_sequence() {
        let s = mi_symmetric_partial_sums(|_| 0.8, 50).unwrap();
        assert!(s.series.iter().all(|v| v.abs() < 1e-14));
        assert!(s.direct.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn partial_sum_increments_shrink_for_geometric_sequence() {
        let s = mi_symmetric_partial_sums(|k| 1.0 - 0.5f64.powi(k as i32), 40).unwrap();
        for t in 11..=40 {
            let a = (s.series[t] - s.series[t - 1]).abs();
            let b = (s.series[t - 1] - s.series[t - 2]).abs();
            assert!(a < b, "T={t}: {a} !< {b}");
        }
    }

    #[test]
    fn partial_sums_plus_residual_reproduce_direct_values() {
        let s = mi_symmetric_partial_sums(|k| 0.5 + 0.49 * ((k as f64) * 0.7).sin().abs(), 200).unwrap();
        for t in 0..=200 {
            assert!((s.series[t] + s.residual[t] - s.direct[t]).abs() <= 1e-10, "T={t}");
        }
    }

    #[test]
    fn audit_degenerate_instances_have_zero_margins() {
        let cfg = AuditConfig {
            trials: 20,
            low: 0.7,
            high: 0.7,
            ..AuditConfig::default()
        };
        let report = proposition_audit(&cfg).unwrap();
        for r in report.rows.iter().filter(|r| {
            matches!(
                r.claim,
                Claim::Monotone | Claim::IncrementLower | Claim::IncrementUpperUnconditional
            )
        }) {
            assert!(r.margin.abs() < 1e-14 && !r.violated, "{r:?}");
        }
    }

    #[test]
    fn audit_is_deterministic_and_serializes() {
        let cfg = AuditConfig {
            trials: 50,
            seed: 17,
            series_terms: 30,
            ..AuditConfig::default()
        };
        let a = proposition_audit(&cfg).unwrap();
        let b = proposition_audit(&cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        let csv = a.to_csv();
        assert!(csv.starts_with("proposition,trial,M,lower,actual,upper,violated\n"));
        assert_eq!(a.violations(Claim::IncrementLower), 0);
        assert!(proposition_audit(&AuditConfig { trials: 0, ..cfg }).is_err());
    }

    proptest! {
        #[test]
        fn partition_mi_single_class_is_zero(p in 0.0f64..=1.0, n in 0.1f64..100.0) {
            let prof = PartitionProfile::new(vec![p], vec![n]).unwrap();
            prop_assert_eq!(partition_mi(&prof), 0.0);
        }

        #[test]
        fn partition_mi_in_unit_interval(
            p in prop::collection::vec(0.0f64..=1.0, 1..12),
            seed in prop::collection::vec(0.1f64..10.0, 12),
        ) {
            let counts = seed[..p.len()].to_vec();
            let v = partition_mi(&PartitionProfile::new(p, counts).unwrap());
            prop_assert!((-1.0..=1.0).contains(&v));
            prop_assert!(v >= -1e-12);
        }

        #[test]
        fn uniform_counts_match_symmetric_form(p in prop::collection::vec(0.0f64..=1.0, 1..12)) {
            let prof = PartitionProfile::uniform(p.clone()).unwrap();
            let s = SymmetricSequenceStats::new(&p).unwrap();
            prop_assert!((partition_mi(&prof) - s.mi()).abs() <= 1e-12);
        }

        #[test]
        fn binary_entropy_is_symmetric(p in 0.0f64..=1.0) {
            prop_assert!((h(p) - h(1.0 - p)).abs() <= 1e-12);
        }

        #[test]
        fn concavity_lower_bound(p in prop::collection::vec(0.0f64..=1.0, 2..20)) {
            let b = mi_increment_bounds(&p).unwrap();
            prop_assert!(b.actual - b.lower >= -1e-12);
        }
    }
}
