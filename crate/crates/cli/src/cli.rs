use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use hyperbin::geometry::{
    covering_halfwidth, general_position_margin, max_feature_dim, region_count, sample_regions, GP_TOLERANCE,
};
use hyperbin::infometric::{proposition_audit, AuditConfig};
use hyperbin::optimizer::optimize_arrangement;
use hyperbin::{Arrangement, CountMode, Hyperplane};

use crate::config::{Config, MODEL_KEYS, SEARCH_KEYS};
use crate::error::{CliError, CliResult};
use crate::experiments::{self, Fig4Config, PipelineConfig};

#[derive(Debug, Parser)]
#[command(name = "hyperbin", version, about = "Hyperplane binning experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides a `seed` key in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Sample the regions of an arrangement.
    Regions,
    /// Region counts and largest feature dimension per (s, J).
    Nmax,
    /// Check an arrangement for general position.
    GpCheck,
    /// Optimize an arrangement for a class model.
    Optimize,
    /// Feature dimension versus number of hyperplanes.
    Fig2,
    /// Mutual information versus number of classes.
    Fig4,
    /// Information kept by orthogonal, block and hyper binning.
    Example2,
    /// Random binning of typical sequences.
    CoverSim,
    /// Optimize, build the helper, encode and decode.
    Pipeline,
    /// Characteristic-graph coloring checks.
    Ccc,
    /// Randomized audit of the mutual-information bounds.
    AuditProps,
}

/// Result of a subcommand: the main body and diagnostics for stderr.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Output {
    pub body: String,
    pub notes: Vec<String>,
}

impl Output {
    fn body(body: String) -> Self {
        Self { body, notes: Vec::new() }
    }
}

const ARRANGEMENT_KEYS: &[&str] = &["arrangement", "normals", "offsets"];

fn keys<'a>(groups: &[&[&'a str]]) -> Vec<&'a str> {
    let mut all = vec!["seed"];
    all.extend(groups.iter().flat_map(|g| g.iter().copied()));
    all
}

/// Default arrangement: three lines in the plane, no two parallel and not
/// concurrent.
fn default_arrangement() -> CliResult<Arrangement> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    Ok(Arrangement::new(
        2,
        vec![
            Hyperplane::new(vec![1.0, 0.0], 0.0)?,
            Hyperplane::new(vec![0.0, 1.0], 0.0)?,
            Hyperplane::new(vec![r, r], 1.0)?,
        ],
    )?)
}

fn arrangement(cfg: &Config) -> CliResult<Arrangement> {
    if let Some(path) = cfg.str("arrangement") {
        if cfg.contains("normals") || cfg.contains("offsets") {
            return Err(CliError::validation(
                "give either `arrangement` or `normals`/`offsets`, not both",
            ));
        }
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::validation(format!("cannot read arrangement {path}: {e}")))?;
        return Ok(Arrangement::from_text(&text)?);
    }
    let Some(normals) = cfg.vectors("normals")? else {
        if cfg.contains("offsets") {
            return Err(CliError::validation("`offsets` given without `normals`"));
        }
        return default_arrangement();
    };
    let offsets: Vec<f64> = cfg.list("offsets", vec![0.0; normals.len()])?;
    if offsets.len() != normals.len() {
        return Err(CliError::validation(format!(
            "{} normals but {} offsets",
            normals.len(),
            offsets.len()
        )));
    }
    let dimension = normals.first().map_or(0, Vec::len);
    let hs = normals
        .into_iter()
        .zip(offsets)
        .map(|(a, b)| Hyperplane::new(a, b))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Arrangement::new(dimension, hs)?)
}

/// Runs one parsed command and returns its output without writing it.
pub fn execute(cli: &Cli) -> CliResult<Output> {
    let cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let seed = match cli.seed {
        Some(s) => s,
        None => cfg.get("seed", 0u64)?,
    };
    match cli.command {
        Command::Regions => {
            cfg.expect_keys(&keys(&[ARRANGEMENT_KEYS, &["samples", "margin"]]))?;
            let arr = arrangement(&cfg)?;
            let samples: u64 = cfg.get("samples", 100_000)?;
            let margin: f64 = cfg.get("margin", 1.0)?;
            let halfwidth = covering_halfwidth(&arr, margin);
            let sample = sample_regions(&arr, halfwidth, samples, seed)?;
            let mut body = String::from("word,count");
            for i in 1..=arr.dimension() {
                let _ = write!(body, ",x{i}");
            }
            body.push('\n');
            for (word, stats) in &sample.regions {
                let word = if word.is_empty() { "-".to_string() } else { word.to_string() };
                let _ = write!(body, "{word},{}", stats.count);
                for c in &stats.centroid {
                    let _ = write!(body, ",{c}");
                }
                body.push('\n');
            }
            let mut out = Output::body(body);
            let bound = region_count(arr.dimension() as u32, arr.len() as u32)?;
            out.notes.push(format!(
                "{} regions observed; {} possible in general position; general position: {}",
                sample.regions.len(),
                bound,
                sample.general_position
            ));
            Ok(out)
        }
        Command::Nmax => {
            cfg.expect_keys(&keys(&[&["s", "J"]]))?;
            let s: Vec<u32> = cfg.list("s", vec![1, 2, 3, 4, 5])?;
            let js: Vec<u32> = cfg.list("J", (1..=20).collect())?;
            let mut body = String::from("s,J,regions,n_max\n");
            for &si in &s {
                for &j in &js {
                    let _ = writeln!(body, "{si},{j},{},{}", region_count(si, j)?, max_feature_dim(j, si)?);
                }
            }
            Ok(Output::body(body))
        }
        Command::GpCheck => {
            cfg.expect_keys(&keys(&[ARRANGEMENT_KEYS, &["tolerance"]]))?;
            let arr = arrangement(&cfg)?;
            let tol: f64 = cfg.get("tolerance", GP_TOLERANCE)?;
            let margin = general_position_margin(&arr);
            Ok(Output::body(format!(
                "general_position,margin,tolerance\n{},{margin},{tol}\n",
                margin > tol
            )))
        }
        Command::Optimize => {
            cfg.expect_keys(&keys(&[MODEL_KEYS, SEARCH_KEYS, &["hyperplanes", "trace"]]))?;
            let model = cfg.class_model(experiments::default_pipeline_model)?;
            let mode = cfg.count_mode(CountMode::Given)?;
            let search = cfg.search(seed)?;
            let j: usize = cfg.get("hyperplanes", 1)?;
            if j == 0 {
                return Err(CliError::validation("`hyperplanes` must be at least 1"));
            }
            let res = optimize_arrangement(&model, j, &search, mode)?;
            if let Some(path) = cfg.str("trace") {
                std::fs::write(path, res.trace_csv())?;
            }
            let mut out = Output::body(res.arrangement.to_text());
            out.notes
                .push(format!("objective {} bits; general position: {}", res.objective, res.gp_ok));
            out.notes.extend(res.warnings);
            Ok(out)
        }
        Command::Fig2 => {
            cfg.expect_keys(&keys(&[&["s", "j_max"]]))?;
            let s: Vec<u32> = cfg.list("s", vec![1, 2, 3, 4, 5])?;
            let j_max: u32 = cfg.get("j_max", 20)?;
            Ok(Output::body(experiments::fig2_csv(&experiments::run_fig2(&s, j_max)?)))
        }
        Command::Fig4 => {
            cfg.expect_keys(&keys(&[&["sigma2", "m_max", "modes", "mean_low", "mean_high"]]))?;
            let d = Fig4Config::default();
            let f = Fig4Config {
                sigma2: cfg.list("sigma2", d.sigma2)?,
                m_max: cfg.get("m_max", d.m_max)?,
                modes: cfg.list("modes", d.modes)?,
                mean_low: cfg.get("mean_low", d.mean_low)?,
                mean_high: cfg.get("mean_high", d.mean_high)?,
            };
            let rows = experiments::run_fig4(&f)?;
            let trends = experiments::fig4_trends(&rows);
            let mut out = Output::body(experiments::fig4_csv(&rows));
            for (name, v) in [
                ("variance order", &trends.variance_order),
                ("asymmetric below symmetric", &trends.asymmetric_below_symmetric),
                ("symmetric increments grow", &trends.increments_grow),
            ] {
                out.notes.push(format!("trend {name}: {} violation(s)", v.len()));
                out.notes.extend(v.iter().map(|l| format!("  {l}")));
            }
            Ok(out)
        }
        Command::Example2 => {
            cfg.expect_keys(&keys(&[]))?;
            Ok(Output::body(experiments::example2_csv(&experiments::run_example2()?)))
        }
        Command::CoverSim => {
            cfg.expect_keys(&keys(&[&["pmf", "n", "rates", "trials"]]))?;
            let pmf: Vec<f64> = cfg.list("pmf", vec![0.89, 0.11])?;
            let n: usize = cfg.get("n", 20)?;
            let rates: Vec<f64> = cfg.list("rates", vec![0.3, 0.5, 0.8, 1.0])?;
            let trials: usize = cfg.get("trials", 2000)?;
            let rows = experiments::run_cover_sim(&pmf, n, &rates, trials, seed)?;
            let mut out = Output::body(experiments::cover_csv(n, &rows));
            if let Some((_, s)) = rows.first() {
                out.notes.push(format!("source entropy {} bits", s.entropy));
            }
            Ok(out)
        }
        Command::Pipeline => {
            cfg.expect_keys(&keys(&[
                MODEL_KEYS,
                SEARCH_KEYS,
                &["hyperplanes", "function", "helper_samples", "eval_samples", "payload"],
            ]))?;
            let model = cfg.class_model(experiments::default_pipeline_model)?;
            let d = PipelineConfig::new(model, seed);
            let p = PipelineConfig {
                hyperplanes: cfg.list("hyperplanes", d.hyperplanes.clone())?,
                function: cfg.get("function", d.function)?,
                mode: cfg.count_mode(d.mode)?,
                search: cfg.search(seed)?,
                helper_samples: cfg.get("helper_samples", d.helper_samples)?,
                eval_samples: cfg.get("eval_samples", d.eval_samples)?,
                ..d
            };
            let rows = experiments::run_pipeline(&p)?;
            if let Some(path) = cfg.str("payload") {
                if let Some(last) = rows.last() {
                    std::fs::write(path, &last.payload)?;
                }
            }
            let mut out = Output::body(experiments::pipeline_csv(&rows));
            for r in &rows {
                out.notes.push(format!(
                    "J={}: recovered {} of {}; rejected {}; std error {}",
                    r.j, r.recovered, r.report.trials, r.rejected, r.std_error
                ));
                out.notes.extend(r.warnings.iter().map(|w| format!("J={}: {w}", r.j)));
            }
            Ok(out)
        }
        Command::Ccc => {
            cfg.expect_keys(&keys(&[&["sweep"]]))?;
            let sweep = match cfg.str("sweep") {
                None => Some((2, 3)),
                Some("none") => None,
                Some(_) => {
                    let v: Vec<usize> = cfg.list("sweep", vec![])?;
                    match v.as_slice() {
                        [a, b] => Some((*a, *b)),
                        _ => return Err(CliError::validation("`sweep` is `a,b` or `none`")),
                    }
                }
            };
            Ok(Output::body(experiments::ccc_csv(&experiments::run_ccc_demos(sweep)?)))
        }
        Command::AuditProps => {
            cfg.expect_keys(&keys(&[&["trials", "low", "high", "max_m", "series_terms", "tolerance"]]))?;
            let d = AuditConfig::default();
            let a = AuditConfig {
                trials: cfg.get("trials", d.trials)?,
                seed,
                low: cfg.get("low", d.low)?,
                high: cfg.get("high", d.high)?,
                max_m: cfg.get("max_m", d.max_m)?,
                series_terms: cfg.get("series_terms", d.series_terms)?,
                tolerance: cfg.get("tolerance", d.tolerance)?,
            };
            let report = proposition_audit(&a)?;
            let mut out = Output::body(report.to_csv());
            for (claim, s) in report.summary() {
                out.notes.push(format!(
                    "{}: {} of {} rows violated",
                    claim.label(),
                    s.violations,
                    s.instances
                ));
            }
            Ok(out)
        }
    }
}

/// Parses arguments, runs, writes output and returns the process exit code:
/// 0 on success, 1 for invalid input, 2 for I/O failures.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = execute(&cli).and_then(|out| {
        for n in &out.notes {
            eprintln!("{n}");
        }
        match &cli.out {
            Some(path) => std::fs::write(path, out.body.as_bytes())?,
            None => std::io::stdout().lock().write_all(out.body.as_bytes())?,
        }
        Ok(())
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
