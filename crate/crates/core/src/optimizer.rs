//! Hyperplane placement by derivative-free direct search.
//!
//! A single hyperplane is scored analytically with [`evaluate_hyperplane`].
//! Arrangements are grown greedily: each new hyperplane maximizes the mutual
//! information between class labels and the refined sign-word partition,
//! estimated on a fixed stratified Monte Carlo sample so that every candidate
//! is scored against the same points.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::classmodel::{right_tail_prob, ClassModel};
use crate::error::{Error, Result};
use crate::geometry::{dot, is_general_position, region_count, Arrangement, Hyperplane, GP_TOLERANCE};
use crate::infometric::{partition_mi, PartitionProfile};
use crate::rng;

/// How class counts `n_k` enter the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CountMode {
    /// `n_k ∝ p_k`, recomputed for every candidate hyperplane.
    Asymmetric,
    /// `n_k = N / M`.
    Symmetric,
    /// The model's own counts.
    Given,
}

impl fmt::Display for CountMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CountMode::Asymmetric => "asymmetric",
            CountMode::Symmetric => "symmetric",
            CountMode::Given => "given",
        })
    }
}

impl FromStr for CountMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "asymmetric" => Ok(CountMode::Asymmetric),
            "symmetric" => Ok(CountMode::Symmetric),
            "given" => Ok(CountMode::Given),
            other => Err(Error::invalid(format!("unknown count mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub step_shrink: f64,
    /// Initial step for the normal's angles, in radians.
    pub initial_step: f64,
    /// Initial step for the offset.
    pub offset_step: f64,
    pub convergence_tol: f64,
    pub seed: u64,
    /// Total Monte Carlo sample size for arrangement objectives, split evenly
    /// across classes.
    pub mc_samples: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_iterations: 200,
            step_shrink: 0.5,
            initial_step: 0.5,
            offset_step: 1.0,
            convergence_tol: 1e-6,
            seed: 0,
            mc_samples: 100_000,
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iterations == 0 || self.mc_samples == 0 {
            return Err(Error::invalid("restarts, max_iterations and mc_samples must be positive"));
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return Err(Error::invalid("step_shrink must lie in (0, 1)"));
        }
        if !(self.initial_step > 0.0 && self.offset_step > 0.0 && self.convergence_tol > 0.0) {
            return Err(Error::invalid("steps and tolerance must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub arrangement: Arrangement,
    /// Objective of the returned geometry, in bits.
    pub objective: f64,
    /// Objective after each direct-search sweep of the winning restart, for
    /// every placed hyperplane in order.
    pub trace: Vec<f64>,
    /// Objective of the partial arrangement after each placement.
    pub step_objectives: Vec<f64>,
    pub gp_ok: bool,
    pub warnings: Vec<String>,
}

impl OptimizationResult {
    /// First hyperplane of the arrangement.
    pub fn hyperplane(&self) -> &Hyperplane {
        &self.arrangement.hyperplanes()[0]
    }

    /// Trace as CSV `step,iteration,objective`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,objective\n");
        for (i, v) in self.trace.iter().enumerate() {
            out.push_str(&format!("{i},{v}\n"));
        }
        out
    }
}

/// Per-class right-tail probabilities `p_k = Q((b − m_k)/σ)`.
pub fn class_split_probs(model: &ClassModel, h: &Hyperplane) -> Result<Vec<f64>> {
    model
        .project_all(h)?
        .iter()
        .map(|pc| right_tail_prob(pc.mean, pc.sigma, h.offset()))
        .collect()
}

fn mi_from_probs(p: Vec<f64>, model: &ClassModel, mode: CountMode) -> Result<f64> {
    let profile = match mode {
        CountMode::Given => PartitionProfile::new(p, model.counts().to_vec())?,
        CountMode::Symmetric => PartitionProfile::uniform(p)?,
        CountMode::Asymmetric => {
            if p.iter().all(|pk| *pk == 0.0) {
                return Ok(0.0);
            }
            PartitionProfile::proportional(p)?
        }
    };
    Ok(partition_mi(&profile))
}

/// `I(M)` for the single split `h`, with `p_k` the probability that class `k`
/// falls on the `≥` side.
pub fn evaluate_hyperplane(model: &ClassModel, h: &Hyperplane, mode: CountMode) -> Result<f64> {
    mi_from_probs(class_split_probs(model, h)?, model, mode)
}

fn angles_to_normal(theta: &[f64], n: usize) -> Vec<f64> {
    let mut a = vec![0.0; n];
    let mut s = 1.0;
    for (i, t) in theta.iter().enumerate() {
        a[i] = s * t.cos();
        s *= t.sin();
    }
    a[n - 1] = s;
    a
}

fn normal_to_angles(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut theta = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n.saturating_sub(1) {
        if i + 2 == n {
            theta.push(a[n - 1].atan2(a[n - 2]));
        } else {
            let tail = a[i + 1..].iter().map(|v| v * v).sum::<f64>().sqrt();
            theta.push(tail.atan2(a[i]));
        }
    }
    theta
}

fn random_unit<R: rand::Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

struct SearchOutcome {
    params: Vec<f64>,
    value: f64,
    trace: Vec<f64>,
}

/// Coordinate direct search maximizing `f`. The last coordinate is the offset
/// and is clamped to `[-bound, bound]`.
fn direct_search<F: Fn(&[f64]) -> f64>(f: &F, x0: Vec<f64>, bound: f64, cfg: &SearchConfig) -> SearchOutcome {
    let d = x0.len();
    let mut steps: Vec<f64> = (0..d)
        .map(|i| if i + 1 == d { cfg.offset_step } else { cfg.initial_step })
        .collect();
    let mut x = x0;
    x[d - 1] = x[d - 1].clamp(-bound, bound);
    let mut fx = f(&x);
    let mut trace = vec![fx];
    for _ in 0..cfg.max_iterations {
        let mut improved = false;
        for i in 0..d {
            for dir in [1.0, -1.0] {
                let mut cand = x.clone();
                cand[i] += dir * steps[i];
                if i + 1 == d {
                    cand[i] = cand[i].clamp(-bound, bound);
                }
                if cand[i] == x[i] {
                    continue;
                }
                let v = f(&cand);
                if v > fx {
                    x = cand;
                    fx = v;
                    improved = true;
                    break;
                }
            }
        }
        trace.push(fx);
        if !improved {
            steps.iter_mut().for_each(|s| *s *= cfg.step_shrink);
            if steps.iter().all(|s| *s < cfg.convergence_tol) {
                break;
            }
        }
    }
    SearchOutcome {
        params: x,
        value: fx,
        trace,
    }
}

fn hyperplane_from_params(params: &[f64], n: usize) -> Hyperplane {
    let (angles, b) = params.split_at(params.len() - 1);
    Hyperplane::new(angles_to_normal(angles, n), b[0]).expect("unit normal from angles")
}

/// Offset bracket covering every projected class mean ± 4σ in any direction.
fn offset_bound(model: &ClassModel) -> f64 {
    let reach = model.means().iter().map(|m| dot(m, m).sqrt()).fold(0.0, f64::max);
    reach + 4.0 * model.max_variance().sqrt()
}

/// Direction separating the two classes furthest apart in Mahalanobis
/// distance, `Σ⁻¹(μ_a − μ_b)`.
fn discriminant_direction(model: &ClassModel) -> Option<Vec<f64>> {
    let chol = model.covariance().clone().cholesky()?;
    let means = model.means();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for a in 0..means.len() {
        for b in a + 1..means.len() {
            let diff = nalgebra::DVector::from_iterator(means[a].len(), means[a].iter().zip(&means[b]).map(|(x, y)| x - y));
            let w = chol.solve(&diff);
            let dist = diff.dot(&w);
            if dist > 1e-12 && best.as_ref().is_none_or(|(d, _)| dist > *d) {
                best = Some((dist, w.iter().copied().collect()));
            }
        }
    }
    best.map(|(_, w)| {
        let norm = dot(&w, &w).sqrt();
        w.into_iter().map(|x| x / norm).collect()
    })
}

fn start_point<R: rand::Rng>(model: &ClassModel, normal: Vec<f64>, rng: &mut R) -> Vec<f64> {
    let proj: Vec<f64> = model.means().iter().map(|m| dot(m, &normal)).collect();
    let lo = proj.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = proj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let b = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let mut params = normal_to_angles(&normal);
    params.push(b);
    params
}

/// Best of `cfg.restarts` direct searches of `objective`, ties resolved in
/// favor of the lowest restart index.
fn search_restarts<F>(
    model: &ClassModel,
    cfg: &SearchConfig,
    stream: u64,
    first_start: Option<Vec<f64>>,
    objective: F,
) -> SearchOutcome
where
    F: Fn(&Hyperplane) -> f64 + Sync,
{
    let n = model.dimension();
    let bound = offset_bound(model);
    let f = |params: &[f64]| objective(&hyperplane_from_params(params, n));
    let outcomes: Vec<SearchOutcome> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::substream(stream, r as u64);
            let normal = match (&first_start, r) {
                (Some(dir), 0) => dir.clone(),
                _ => random_unit(n, &mut rng),
            };
            let x0 = start_point(model, normal, &mut rng);
            direct_search(&f, x0, bound, cfg)
        })
        .collect();
    let mut best: Option<SearchOutcome> = None;
    for o in outcomes {
        if best.as_ref().is_none_or(|b| o.value > b.value) {
            best = Some(o);
        }
    }
    best.expect("at least one restart")
}

/// Places one hyperplane maximizing [`evaluate_hyperplane`].
pub fn optimize_hyperplane(model: &ClassModel, cfg: &SearchConfig, mode: CountMode) -> Result<OptimizationResult> {
    cfg.validate()?;
    let n = model.dimension();
    let start = discriminant_direction(model);
    let outcome = search_restarts(model, cfg, cfg.seed, start, |h| {
        evaluate_hyperplane(model, h, mode).unwrap_or(f64::NEG_INFINITY)
    });
    let h = hyperplane_from_params(&outcome.params, n);
    let objective = evaluate_hyperplane(model, &h, mode)?;
    let arrangement = Arrangement::new(n, vec![h])?;
    Ok(OptimizationResult {
        gp_ok: is_general_position(&arrangement, GP_TOLERANCE),
        arrangement,
        objective,
        trace: outcome.trace,
        step_objectives: vec![objective],
        warnings: Vec::new(),
    })
}

/// Stratified per-class sample with the current cell of every point.
struct CellSample {
    n: usize,
    points: Vec<Vec<f64>>,
    cells: Vec<Vec<u32>>,
    num_cells: usize,
}

impl CellSample {
    fn new(model: &ClassModel, samples: usize, seed: u64) -> Self {
        let m = model.num_classes();
        let n = model.dimension();
        let per_class = samples.div_ceil(m);
        let points: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|k| {
                let mut rng = rng::substream(rng::mix64(seed), k as u64);
                let mut flat = vec![0.0; per_class * n];
                for chunk in flat.chunks_mut(n) {
                    model.draw_from_class(k, &mut rng, chunk);
                }
                flat
            })
            .collect();
        let cells = vec![vec![0u32; per_class]; m];
        Self {
            n,
            points,
            cells,
            num_cells: 1,
        }
    }

    fn per_class(&self) -> usize {
        self.cells[0].len()
    }

    /// Joint counts of (current cell, side of `h`) per class.
    fn histogram(&self, h: &Hyperplane) -> Vec<Vec<u32>> {
        self.points
            .iter()
            .zip(&self.cells)
            .map(|(pts, cells)| {
                let mut hist = vec![0u32; 2 * self.num_cells];
                for (x, c) in pts.chunks(self.n).zip(cells) {
                    hist[2 * *c as usize + usize::from(h.side(x))] += 1;
                }
                hist
            })
            .collect()
    }

    /// Counts of the current cells per class.
    fn cell_histogram(&self) -> Vec<Vec<u32>> {
        self.cells
            .iter()
            .map(|cells| {
                let mut hist = vec![0u32; self.num_cells];
                for c in cells {
                    hist[*c as usize] += 1;
                }
                hist
            })
            .collect()
    }

    fn refine(&mut self, h: &Hyperplane) {
        let mut ids: HashMap<(u32, bool), u32> = HashMap::new();
        for (pts, cells) in self.points.iter().zip(self.cells.iter_mut()) {
            for (x, c) in pts.chunks(self.n).zip(cells.iter_mut()) {
                let next = ids.len() as u32;
                *c = *ids.entry((*c, h.side(x))).or_insert(next);
            }
        }
        self.num_cells = ids.len();
    }
}

fn class_weights(model: &ClassModel, mode: CountMode, last: Option<&Hyperplane>) -> Result<Vec<f64>> {
    let m = model.num_classes();
    Ok(match mode {
        CountMode::Given => model.weights(),
        CountMode::Symmetric => vec![1.0 / m as f64; m],
        CountMode::Asymmetric => {
            let p = match last {
                Some(h) => class_split_probs(model, h)?,
                None => vec![1.0; m],
            };
            let s: f64 = p.iter().sum();
            if s <= 0.0 {
                vec![1.0 / m as f64; m]
            } else {
                p.into_iter().map(|x| x / s).collect()
            }
        }
    })
}

/// `I(W; K) = H(W) − Σ_k w_k H(W | K = k)` from per-class cell histograms.
fn information_from_histograms(hist: &[Vec<u32>], per_class: usize, weights: &[f64]) -> f64 {
    let cells = hist[0].len();
    let inv = 1.0 / per_class as f64;
    let mut mixture = vec![0.0; cells];
    let mut conditional = 0.0;
    for (row, w) in hist.iter().zip(weights) {
        let mut hk = 0.0;
        for (c, count) in row.iter().enumerate() {
            if *count > 0 {
                let p = *count as f64 * inv;
                hk -= p * p.log2();
                mixture[c] += w * p;
            }
        }
        conditional += w * hk;
    }
    let joint: f64 = mixture.iter().filter(|p| **p > 0.0).map(|p| -p * p.log2()).sum();
    joint - conditional
}

fn mc_seed(cfg: &SearchConfig) -> u64 {
    rng::mix64(cfg.seed ^ 0x6d63_5f73_616d_706c)
}

/// Objective of an arrangement: the analytic single-split value for one
/// hyperplane, otherwise the Monte Carlo estimate of the mutual information
/// between class labels and sign words on the sample fixed by `cfg`. In
/// asymmetric mode the class weights follow the last hyperplane's split.
pub fn evaluate_arrangement(model: &ClassModel, arr: &Arrangement, mode: CountMode, cfg: &SearchConfig) -> Result<f64> {
    if arr.dimension() != model.dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.dimension(),
            found: arr.dimension(),
        });
    }
    match arr.len() {
        0 => Ok(0.0),
        1 => evaluate_hyperplane(model, &arr.hyperplanes()[0], mode),
        _ => {
            let mut sample = CellSample::new(model, cfg.mc_samples, mc_seed(cfg));
            for h in arr.hyperplanes() {
                sample.refine(h);
            }
            let weights = class_weights(model, mode, arr.hyperplanes().last())?;
            Ok(information_from_histograms(
                &sample.cell_histogram(),
                sample.per_class(),
                &weights,
            ))
        }
    }
}

fn perturb<R: rand::Rng>(h: &Hyperplane, angle: f64, rng: &mut R) -> Option<Hyperplane> {
    let a = h.normal();
    let n = a.len();
    if n < 2 {
        return None;
    }
    let mut u = random_unit(n, rng);
    let along = dot(&u, a);
    u.iter_mut().zip(a).for_each(|(ui, ai)| *ui -= along * ai);
    let norm = dot(&u, &u).sqrt();
    if norm < 1e-12 {
        return None;
    }
    let normal = a
        .iter()
        .zip(&u)
        .map(|(ai, ui)| angle.cos() * ai + angle.sin() * ui / norm)
        .collect();
    Hyperplane::new(normal, h.offset()).ok()
}

const GP_RETRIES: usize = 8;
const GP_ROTATION: f64 = 1e-6;

/// Greedy placement of `j` hyperplanes. The first is the single-split
/// optimum; each further hyperplane maximizes the Monte Carlo information of
/// the refined partition. General position is restored by small seeded
/// rotations of the newest normal.
pub fn optimize_arrangement(model: &ClassModel, j: usize, cfg: &SearchConfig, mode: CountMode) -> Result<OptimizationResult> {
    if j == 0 {
        return Err(Error::invalid("arrangement needs at least one hyperplane"));
    }
    let first = optimize_hyperplane(model, cfg, mode)?;
    if j == 1 {
        return Ok(first);
    }
    let n = model.dimension();
    let mut warnings = Vec::new();
    let r = region_count(n as u32, j as u32)?;
    if ((n + 1) * j) as u128 > r {
        warnings.push(format!(
            "{j} hyperplanes carry {} parameters but form at most {r} regions in dimension {n}",
            (n + 1) * j
        ));
    }

    let mut sample = CellSample::new(model, cfg.mc_samples, mc_seed(cfg));
    let mut arr = first.arrangement.clone();
    let mut trace = first.trace.clone();
    let first_h = arr.hyperplanes()[0].clone();
    sample.refine(&first_h);
    let weights = class_weights(model, mode, Some(&first_h))?;
    let mut step_objectives = vec![information_from_histograms(
        &sample.cell_histogram(),
        sample.per_class(),
        &weights,
    )];

    for step in 1..j {
        let score = |h: &Hyperplane| -> f64 {
            match class_weights(model, mode, Some(h)) {
                Ok(w) => information_from_histograms(&sample.histogram(h), sample.per_class(), &w),
                Err(_) => f64::NEG_INFINITY,
            }
        };
        let stream = rng::mix64(cfg.seed ^ (step as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let outcome = search_restarts(model, cfg, stream, None, score);
        let base = hyperplane_from_params(&outcome.params, n);
        let mut h = base.clone();
        let mut candidate = arr.clone();
        candidate.push(h.clone())?;
        let mut attempt = 0;
        let mut prng = rng::substream(stream, u64::MAX);
        while !is_general_position(&candidate, GP_TOLERANCE) {
            if attempt == GP_RETRIES {
                return Err(Error::NotGeneralPosition(format!(
                    "hyperplane {} still degenerate after {GP_RETRIES} rotations of {GP_ROTATION} rad (normal {:?}, offset {})",
                    step + 1,
                    h.normal(),
                    h.offset()
                )));
            }
            attempt += 1;
            h = perturb(&base, GP_ROTATION, &mut prng)
                .ok_or_else(|| Error::NotGeneralPosition(format!("cannot rotate a normal in dimension {n}")))?;
            candidate = arr.clone();
            candidate.push(h.clone())?;
        }
        if attempt > 0 {
            warnings.push(format!(
                "hyperplane {} rotated {attempt} time(s) to restore general position",
                step + 1
            ));
        }
        arr = candidate;
        trace.extend(outcome.trace);
        sample.refine(&h);
        let weights = class_weights(model, mode, Some(&h))?;
        step_objectives.push(information_from_histograms(
            &sample.cell_histogram(),
            sample.per_class(),
            &weights,
        ));
    }

    let objective = *step_objectives.last().expect("nonempty");
    Ok(OptimizationResult {
        gp_ok: is_general_position(&arr, GP_TOLERANCE),
        arrangement: arr,
        objective,
        trace,
        step_objectives,
        warnings,
    })
}
