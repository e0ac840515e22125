//! Experiment runners behind the subcommands. Each returns structured rows
//! and has a matching `*_csv` serializer; all randomness flows from explicit
//! seeds, so output bytes depend only on the inputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use hyperbin::ccc::{
    characteristic_graph, check_ccc, exhaustive_equivalence, is_decodable, merge_conflicts, product_parity_table, PathRule,
    Validation,
};
use hyperbin::classmodel::right_tail_prob;
use hyperbin::coding::{
    build_helper, hp_codebook_size, identity_labeling, information_from_masses, partition_information, simulate_hyper_binning,
    split_probabilities, xor_equivalence_demo, CoverConfig, CoverSimulation, JointFunction, SourcePair,
};
use hyperbin::geometry::{max_feature_dim, region_count};
use hyperbin::infometric::{partition_mi, shannon_entropy};
use hyperbin::optimizer::optimize_arrangement;
use hyperbin::{
    Arrangement, ClassModel, CodingReport, Coloring, CountMode, FunctionTable, PartitionProfile, SearchConfig, Source,
};

use crate::error::{CliError, CliResult};

/// Quotes a CSV field when it contains a separator or quote.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fig2Row {
    pub s: u32,
    pub j: u32,
    pub n_max: u128,
    pub regions: u128,
    /// Feature dimension an orthogonal (per-source) binning supports with the
    /// same hyperplane budget, `⌊J/s⌋`.
    pub n_orthogonal: u32,
}

/// Largest feature dimension per `(s, J)` for `J = 1..=j_max`.
pub fn run_fig2(s_list: &[u32], j_max: u32) -> CliResult<Vec<Fig2Row>> {
    if s_list.is_empty() || j_max == 0 || s_list.contains(&0) {
        return Err(CliError::validation(
            "fig2 needs a nonempty list of positive s and J max >= 1",
        ));
    }
    let mut rows = Vec::new();
    for &s in s_list {
        for j in 1..=j_max {
            rows.push(Fig2Row {
                s,
                j,
                n_max: max_feature_dim(j, s)?,
                regions: region_count(s, j)?,
                n_orthogonal: j / s,
            });
        }
    }
    Ok(rows)
}

pub fn fig2_csv(rows: &[Fig2Row]) -> String {
    let mut out = String::from("s,J,n_max,regions,n_orthogonal\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.s, r.j, r.n_max, r.regions, r.n_orthogonal);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig4Row {
    pub mode: CountMode,
    pub sigma2: f64,
    pub m: usize,
    pub information: f64,
}

/// Settings for [`run_fig4`]. Class means sit on an even grid of `m_max`
/// points over `[mean_low, mean_high]`; the first `M` of them form the
/// `M`-class model, split by `b = 0` with right-tail probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig4Config {
    pub sigma2: Vec<f64>,
    pub m_max: usize,
    pub modes: Vec<CountMode>,
    pub mean_low: f64,
    pub mean_high: f64,
}

impl Default for Fig4Config {
    fn default() -> Self {
        Self {
            sigma2: vec![0.25, 1.0, 4.0],
            m_max: 20,
            modes: vec![CountMode::Asymmetric, CountMode::Symmetric],
            mean_low: 0.0,
            mean_high: 3.0,
        }
    }
}

pub fn run_fig4(cfg: &Fig4Config) -> CliResult<Vec<Fig4Row>> {
    if cfg.m_max < 2 {
        return Err(CliError::validation("fig4 needs M max >= 2"));
    }
    if cfg.sigma2.is_empty() || cfg.sigma2.iter().any(|s| !(*s > 0.0)) {
        return Err(CliError::validation("fig4 needs positive variances"));
    }
    if cfg.modes.contains(&CountMode::Given) {
        return Err(CliError::validation("fig4 modes are asymmetric and symmetric"));
    }
    let grid: Vec<f64> = (0..cfg.m_max)
        .map(|k| cfg.mean_low + (cfg.mean_high - cfg.mean_low) * k as f64 / (cfg.m_max - 1) as f64)
        .collect();
    let mut rows = Vec::new();
    for &mode in &cfg.modes {
        for &sigma2 in &cfg.sigma2 {
            let sigma = sigma2.sqrt();
            let p: Vec<f64> = grid
                .iter()
                .map(|m| right_tail_prob(*m, sigma, 0.0))
                .collect::<Result<_, _>>()?;
            for m in 1..=cfg.m_max {
                let head = p[..m].to_vec();
                let profile = match mode {
                    CountMode::Asymmetric => PartitionProfile::proportional(head)?,
                    _ => PartitionProfile::uniform(head)?,
                };
                rows.push(Fig4Row {
                    mode,
                    sigma2,
                    m,
                    information: partition_mi(&profile),
                });
            }
        }
    }
    Ok(rows)
}

pub fn fig4_csv(rows: &[Fig4Row]) -> String {
    let mut out = String::from("mode,sigma2,M,I\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.mode, r.sigma2, r.m, r.information);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example2Row {
    pub scheme: &'static str,
    pub joint_entropy: f64,
    pub partition_entropy: f64,
    pub information: f64,
}

/// Block labeling of the 4x4 grid with cell counts 3, 9, 2, 2.
pub fn block_labeling() -> BTreeMap<(usize, usize), u8> {
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

/// Masses of the four hyper bins cut by oblique hyperplanes through the
/// uniform 4x4 grid.
pub const HYPER_MASSES: [f64; 4] = [0.375, 0.531, 0.031, 0.063];

/// Information kept by orthogonal, block and hyper binning of 16 equally
/// likely outcomes.
pub fn run_example2() -> CliResult<Vec<Example2Row>> {
    let table = FunctionTable::uniform((0..4).collect(), (0..4).collect(), |a, b| (4 * a + b) as f64)?;
    let joint = shannon_entropy(table.joint_pmf())?;
    let sw = partition_information(&table, &identity_labeling(&table))?;
    let block = partition_information(&table, &block_labeling())?;
    let hyper = information_from_masses(joint, &HYPER_MASSES)?;
    Ok(vec![
        Example2Row {
            scheme: "slepian-wolf",
            joint_entropy: joint,
            partition_entropy: joint - sw,
            information: sw,
        },
        Example2Row {
            scheme: "block",
            joint_entropy: joint,
            partition_entropy: joint - block,
            information: block,
        },
        Example2Row {
            scheme: "hyper",
            joint_entropy: joint,
            partition_entropy: joint - hyper,
            information: hyper,
        },
    ])
}

pub fn example2_csv(rows: &[Example2Row]) -> String {
    let mut out = String::from("scheme,joint_entropy,partition_entropy,information\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.scheme, r.joint_entropy, r.partition_entropy, r.information
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CccRow {
    pub instance: String,
    pub check: String,
    pub result: String,
    pub detail: String,
}

fn ccc_row(instance: &str, check: &str, result: impl ToString, detail: impl Into<String>) -> CccRow {
    CccRow {
        instance: instance.to_string(),
        check: check.to_string(),
        result: result.to_string(),
        detail: detail.into(),
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "satisfied"
    } else {
        "violated"
    }
}

fn symbols(table: &FunctionTable, source: Source, points: &[(usize, usize)]) -> String {
    let _ = source;
    points
        .iter()
        .map(|(i, j)| {
            format!(
                "({} {})",
                table.alphabet(Source::First)[*i],
                table.alphabet(Source::Second)[*j]
            )
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parity and product-parity instances, a constant control and, when
/// `sweep` is given, the exhaustive comparison of the condition with
/// decodability on alphabets up to that size.
pub fn run_ccc_demos(sweep: Option<(usize, usize)>) -> CliResult<Vec<CccRow>> {
    let mut rows = Vec::new();

    let demo = xor_equivalence_demo();
    let t3 = &demo.table;
    let fmt_classes = |classes: &Vec<Vec<i64>>| {
        classes
            .iter()
            .map(|c| format!("{{{}}}", c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")))
            .collect::<Vec<_>>()
            .join(" ")
    };
    rows.push(ccc_row(
        "parity",
        "classes_x1",
        fmt_classes(&demo.classes[0]),
        "f = (x1 + x2) mod 2 on {0..3}^2",
    ));
    rows.push(ccc_row("parity", "classes_x2", fmt_classes(&demo.classes[1]), ""));
    rows.push(ccc_row(
        "parity",
        "rates",
        format!("R1={} R2={}", demo.report.bits_per_source[0], demo.report.bits_per_source[1]),
        format!("sum {}", demo.report.sum_rate()),
    ));
    let p1 = Coloring::from_groups(t3, Source::First, &[&[0, 2], &[1, 3]])?;
    let p2 = Coloring::from_groups(t3, Source::Second, &[&[0, 2], &[1, 3]])?;
    let report = check_ccc([&p1, &p2], t3, PathRule::default(), Validation::Strict)?;
    rows.push(ccc_row(
        "parity",
        "ccc",
        verdict(report.satisfied),
        format!("{} joint classes", report.classes.len()),
    ));
    rows.push(ccc_row(
        "parity",
        "decodable",
        is_decodable([&p1, &p2], t3)?,
        format!("{} of 16 pairs decoded wrongly", demo.decoding_failures),
    ));

    let t4 = product_parity_table();
    let g = characteristic_graph(&t4, Source::First);
    let edges: Vec<String> = g
        .edges()
        .iter()
        .map(|(a, b)| format!("{}-{}", t4.alphabet(Source::First)[*a], t4.alphabet(Source::First)[*b]))
        .collect();
    rows.push(ccc_row(
        "product-parity",
        "graph_x1",
        edges.join(" "),
        "f = (x1 * x2) mod 2; x1 in {1..4}; x2 in {0 1}",
    ));
    let c1 = Coloring::from_groups(&t4, Source::First, &[&[1, 3], &[2, 4]])?;
    let c2 = Coloring::constant(2);
    let report = check_ccc([&c1, &c2], &t4, PathRule::default(), Validation::Warn)?;
    let violated: Vec<String> = report
        .violated_classes()
        .map(|c| symbols(&t4, Source::First, &c.points))
        .collect();
    rows.push(ccc_row(
        "product-parity",
        "ccc_groupings",
        verdict(report.satisfied),
        format!(
            "x1 groups {{1 3}} {{2 4}}; x2 one group; failing class {}",
            violated.join(" | ")
        ),
    ));
    for w in &report.warnings {
        rows.push(ccc_row("product-parity", "warning", "invalid-coloring", w.clone()));
    }
    let conflicts = merge_conflicts(&t4, Source::First, 3, 2)?;
    for c in &conflicts {
        rows.push(ccc_row(
            "product-parity",
            "witness",
            format!("f(3 {y})={} != {}=f(2 {y})", c.value_a, c.value_b, y = c.other),
            "merging x1=3 with x1=2 is ambiguous",
        ));
    }
    let id2 = Coloring::identity(2);
    rows.push(ccc_row(
        "product-parity",
        "decodable_parity_identity",
        is_decodable([&c1, &id2], &t4)?,
        "x1 groups {1 3} {2 4}; x2 identity",
    ));

    let tc = FunctionTable::uniform(vec![0, 1, 2], vec![0, 1, 2], |_, _| 0.0)?;
    let any1 = Coloring::from_groups(&tc, Source::First, &[&[0, 1], &[2]])?;
    let any2 = Coloring::constant(3);
    let report = check_ccc([&any1, &any2], &tc, PathRule::default(), Validation::Strict)?;
    rows.push(ccc_row("constant", "ccc", verdict(report.satisfied), "f = 0 on {0..2}^2"));

    if let Some((a, b)) = sweep {
        let s = exhaustive_equivalence(a, b, PathRule::default())?;
        rows.push(ccc_row(
            "sweep",
            "ccc_iff_decodable",
            s.counterexamples.len(),
            format!(
                "{} functions; {} coloring pairs; alphabets up to {a}x{b}",
                s.functions, s.colorings_checked
            ),
        ));
        for c in s.counterexamples {
            rows.push(ccc_row("sweep", "counterexample", "", c));
        }
    }
    Ok(rows)
}

pub fn ccc_csv(rows: &[CccRow]) -> String {
    let mut out = String::from("instance,check,result,detail\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            csv_field(&r.instance),
            csv_field(&r.check),
            csv_field(&r.result),
            csv_field(&r.detail)
        );
    }
    out
}

/// One Cover binning simulation per rate.
pub fn run_cover_sim(pmf: &[f64], n: usize, rates: &[f64], trials: usize, seed: u64) -> CliResult<Vec<(f64, CoverSimulation)>> {
    if rates.is_empty() {
        return Err(CliError::validation("cover-sim needs at least one rate"));
    }
    rates
        .iter()
        .map(|r| {
            let sim = hyperbin::coding::cover_binning_simulate(&CoverConfig::new(pmf.to_vec(), n, *r, trials, seed))?;
            Ok((*r, sim))
        })
        .collect()
}

pub fn cover_csv(n: usize, rows: &[(f64, CoverSimulation)]) -> String {
    let mut out = String::from("R,n,bins,typical_set_size,trials,atypical,ambiguous,error\n");
    for (r, s) in rows {
        let _ = writeln!(
            out,
            "{r},{n},{},{},{},{},{},{}",
            s.bins,
            s.typical_set_size,
            s.trials,
            s.atypical,
            s.ambiguous,
            s.error_rate()
        );
    }
    out
}

/// Settings for [`run_pipeline`].
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub model: ClassModel,
    pub hyperplanes: Vec<usize>,
    pub function: JointFunction,
    pub mode: CountMode,
    pub search: SearchConfig,
    pub helper_samples: usize,
    pub eval_samples: usize,
    pub seed: u64,
}

/// Four Gaussian classes in the plane used when no model is configured.
pub fn default_pipeline_model() -> ClassModel {
    ClassModel::new(
        vec![vec![-2.0, -1.0], vec![2.0, -1.0], vec![-0.5, 2.0], vec![1.5, 1.5]],
        vec![1.0, 0.3, 0.3, 0.8],
        vec![1.0, 1.0, 1.0, 1.0],
    )
    .expect("valid default model")
}

impl PipelineConfig {
    pub fn new(model: ClassModel, seed: u64) -> Self {
        Self {
            model,
            hyperplanes: vec![0, 1, 2, 3],
            function: JointFunction::Sum,
            mode: CountMode::Given,
            search: SearchConfig {
                seed,
                ..SearchConfig::default()
            },
            helper_samples: 100_000,
            eval_samples: 10_000,
            seed,
        }
    }
}

impl PipelineConfig {
    /// Seed of the draws the helper lookup is built from.
    pub fn helper_seed(&self) -> u64 {
        self.seed.wrapping_add(0x68_656c_7065)
    }

    /// Seed of the evaluation draws, shared by every arrangement size.
    pub fn eval_seed(&self) -> u64 {
        self.seed.wrapping_add(0x6576_616c)
    }
}

/// End-to-end result for one arrangement size.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRow {
    pub j: usize,
    pub arrangement: Arrangement,
    pub q: Vec<f64>,
    pub report: CodingReport,
    pub recovered: usize,
    pub rejected: usize,
    pub std_error: f64,
    /// Per-draw absolute errors on the shared evaluation sample.
    pub errors: Vec<Option<f64>>,
    pub payload: String,
    pub warnings: Vec<String>,
}

/// Optimizes, builds the helper, and encodes/decodes a fresh sample for each
/// arrangement size. Every size is evaluated on the same draws.
pub fn run_pipeline(cfg: &PipelineConfig) -> CliResult<Vec<PipelineRow>> {
    if cfg.hyperplanes.is_empty() {
        return Err(CliError::validation("pipeline needs at least one arrangement size"));
    }
    let sources = SourcePair::symmetric(cfg.model.clone());
    let (helper_seed, eval_seed) = (cfg.helper_seed(), cfg.eval_seed());
    cfg.hyperplanes
        .par_iter()
        .map(|&j| {
            let (arrangement, mut warnings) = if j == 0 {
                (Arrangement::empty(cfg.model.dimension())?, Vec::new())
            } else {
                let res = optimize_arrangement(&cfg.model, j, &cfg.search, cfg.mode)?;
                (res.arrangement, res.warnings)
            };
            let build = build_helper(&arrangement, &sources, cfg.function, cfg.helper_samples, helper_seed)?;
            warnings.extend(build.warnings);
            let run = simulate_hyper_binning(&build.payload, &sources, cfg.function, cfg.eval_samples, eval_seed)?;
            let q = split_probabilities(&arrangement, &cfg.model)?;
            let report = CodingReport {
                scheme: format!("hyper-binning-J{j}"),
                bits_per_source: vec![j as f64, j as f64],
                codebook_size: hp_codebook_size(&q)?,
                error: run.distortion,
                trials: run.samples,
            };
            Ok(PipelineRow {
                j,
                arrangement,
                q,
                report,
                recovered: run.recovered,
                rejected: run.rejected,
                std_error: run.std_error,
                errors: run.errors,
                payload: build.payload.to_text(),
                warnings,
            })
        })
        .collect()
}

pub fn pipeline_csv(rows: &[PipelineRow]) -> String {
    let reports: Vec<CodingReport> = rows.iter().map(|r| r.report.clone()).collect();
    CodingReport::to_csv(&reports)
}

/// Trend checks on fig4 output. Each violation is one line; an empty list
/// means every trend held on the emitted grid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Fig4Trends {
    /// Cells where `I` rose with `σ²` at fixed mode and `M`.
    pub variance_order: Vec<String>,
    /// Cells where the asymmetric value fell below the symmetric one.
    pub asymmetric_below_symmetric: Vec<String>,
    /// Variances where the symmetric increment at the largest `M` exceeds
    /// the one at `M = 3`.
    pub increments_grow: Vec<String>,
}

pub fn fig4_trends(rows: &[Fig4Row]) -> Fig4Trends {
    let mut t = Fig4Trends::default();
    let find = |mode: CountMode, sigma2: f64, m: usize| {
        rows.iter()
            .find(|r| r.mode == mode && r.sigma2 == sigma2 && r.m == m)
            .map(|r| r.information)
    };
    let mut variances: Vec<f64> = rows.iter().map(|r| r.sigma2).collect();
    variances.sort_by(f64::total_cmp);
    variances.dedup();
    let m_max = rows.iter().map(|r| r.m).max().unwrap_or(0);
    for r in rows {
        if let Some(next) = variances.iter().find(|s| **s > r.sigma2) {
            if let Some(i) = find(r.mode, *next, r.m) {
                if i > r.information + 1e-12 {
                    t.variance_order.push(format!(
                        "{} M={}: I={} at sigma2={} < I={i} at sigma2={next}",
                        r.mode, r.m, r.information, r.sigma2
                    ));
                }
            }
        }
        if r.mode == CountMode::Asymmetric {
            if let Some(s) = find(CountMode::Symmetric, r.sigma2, r.m) {
                if r.information < s - 1e-12 {
                    t.asymmetric_below_symmetric.push(format!(
                        "sigma2={} M={}: asymmetric {} < symmetric {s}",
                        r.sigma2, r.m, r.information
                    ));
                }
            }
        }
    }
    if m_max >= 4 {
        for s in &variances {
            let inc = |m: usize| match (find(CountMode::Symmetric, *s, m), find(CountMode::Symmetric, *s, m - 1)) {
                (Some(a), Some(b)) => Some((a - b).abs()),
                _ => None,
            };
            if let (Some(hi), Some(lo)) = (inc(m_max), inc(3)) {
                if hi > lo {
                    t.increments_grow
                        .push(format!("sigma2={s}: |dI| at M={m_max} is {hi} > {lo} at M=3"));
                }
            }
        }
    }
    t
}
