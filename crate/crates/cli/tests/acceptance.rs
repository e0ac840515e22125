//! Acceptance harness: one PASS/FAIL line per criterion. Oracles are written
//! here independently of the library code they check.
//!
//! The process fails when any criterion fails, except those listed in
//! `KNOWN_RED`; a known-red criterion must still print FAIL and must satisfy
//! its documented replacement check, otherwise the harness fails too.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;

use hyperbin::ccc::{
    check_ccc, exhaustive_equivalence, is_decodable, merge_conflicts, product_parity_table, PathRule, Validation,
};
use hyperbin::coding::{cover_binning_simulate, xor_equivalence_demo, CoverConfig};
use hyperbin::geometry::{covering_halfwidth, enumerate_regions, general_position_margin};
use hyperbin::infometric::{
    increment_upper_preconditions, mi_increment_bounds, mi_symmetric_partial_sums, proposition_audit, AuditConfig, Claim,
};
use hyperbin::optimizer::optimize_hyperplane;
use hyperbin::rng::seeded;
use hyperbin::{Arrangement, ClassModel, Coloring, CountMode, Hyperplane, SearchConfig, Source};
use hyperbin_cli::experiments::{default_pipeline_model, run_example2, run_fig2, run_pipeline, PipelineConfig};

const KNOWN_RED: &[&str] = &["4c"];

struct Outcome {
    id: &'static str,
    pass: bool,
    /// For known-red criteria: whether the documented replacement holds.
    replacement: Option<bool>,
}

fn line(id: &'static str, name: &str, pass: bool, elapsed: Duration, detail: String) -> Outcome {
    println!(
        "{} {id} {name} [{:.2}s] {detail}",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    Outcome {
        id,
        pass,
        replacement: None,
    }
}

// ---- independent numerics ----

fn h(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

fn entropy(d: &[f64]) -> f64 {
    d.iter().filter(|x| **x > 0.0).map(|x| -x * x.log2()).sum()
}

fn q(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

fn binom(n: u32, k: u32) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn regions(s: u32, j: u32) -> u128 {
    (0..=s.min(j)).map(|k| binom(j, k)).sum()
}

/// Split information of a hyperplane for a shared-covariance model with
/// class weights `w`.
fn split_info(means: &[[f64; 2]], cov: [[f64; 2]; 2], w: &[f64], a: [f64; 2], b: f64) -> f64 {
    let var = a[0] * a[0] * cov[0][0] + 2.0 * a[0] * a[1] * cov[0][1] + a[1] * a[1] * cov[1][1];
    let sigma = var.sqrt();
    let p: Vec<f64> = means.iter().map(|m| q((b - (a[0] * m[0] + a[1] * m[1])) / sigma)).collect();
    let pbar: f64 = p.iter().zip(w).map(|(p, w)| p * w).sum();
    h(pbar) - p.iter().zip(w).map(|(p, w)| w * h(*p)).sum::<f64>()
}

/// Uniform-count mutual information `h(mean p) − mean h(p)`.
fn sym_mi(p: &[f64]) -> f64 {
    let m = p.len() as f64;
    h(p.iter().sum::<f64>() / m) - p.iter().map(|x| h(*x)).sum::<f64>() / m
}

// ---- criteria ----

fn c1() -> Outcome {
    let t = Instant::now();
    let rows = run_example2().expect("example2");
    let el = t.elapsed();
    let get = |s: &str| rows.iter().find(|r| r.scheme == s).expect("scheme row");
    let (sw, b, hb) = (get("slepian-wolf"), get("block"), get("hyper"));
    let oracle_b = entropy(&[3.0 / 16.0, 9.0 / 16.0, 2.0 / 16.0, 2.0 / 16.0]);
    let oracle_hb = entropy(&[0.375, 0.531, 0.031, 0.063]);
    let ok = sw.information == 0.0
        && rows.iter().all(|r| r.joint_entropy == 4.0)
        && (b.information - 2.33).abs() <= 0.005
        && (hb.information - 2.58).abs() <= 0.005
        && (b.partition_entropy - 1.67).abs() <= 0.005
        && (hb.partition_entropy - 1.42).abs() <= 0.005
        && (b.partition_entropy - oracle_b).abs() < 1e-12
        && (hb.partition_entropy - oracle_hb).abs() < 1e-12
        && el < Duration::from_secs(1);
    line(
        "1",
        "example2-table",
        ok,
        el,
        format!(
            "I_SW={} I_B={:.4} I_HB={:.4} H_B={:.4} H_HB={:.4}",
            sw.information, b.information, hb.information, b.partition_entropy, hb.partition_entropy
        ),
    )
}

fn random_unit(r: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.1 && norm <= 1.0 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

/// Smallest distance between two vertices (intersections of `n`
/// hyperplanes) of the arrangement; small values mean tiny bounded regions.
fn min_vertex_separation(arr: &Arrangement) -> f64 {
    let n = arr.dimension();
    let hs = arr.hyperplanes();
    if hs.len() < n {
        return f64::INFINITY;
    }
    let mut vertices = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let a = nalgebra::DMatrix::from_fn(n, n, |r, c| hs[idx[r]].normal()[c]);
        let b = nalgebra::DVector::from_fn(n, |r, _| hs[idx[r]].offset());
        if let Some(x) = a.lu().solve(&b) {
            vertices.push(x);
        }
        let mut i = n;
        loop {
            if i == 0 {
                let mut best = f64::INFINITY;
                for (k, u) in vertices.iter().enumerate() {
                    for v in &vertices[k + 1..] {
                        best = best.min((u - v).norm());
                    }
                }
                return best;
            }
            i -= 1;
            if idx[i] < hs.len() - n + i {
                idx[i] += 1;
                for k in i + 1..n {
                    idx[k] = idx[k - 1] + 1;
                }
                break;
            }
        }
    }
}

const GP_FLOOR: f64 = 0.3;
const SEPARATION_FLOOR: f64 = 0.3;
const BOX_MARGIN: f64 = 2.0;

fn c2() -> Outcome {
    let t = Instant::now();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let example = Arrangement::new(
        2,
        vec![
            Hyperplane::new(vec![1.0, 0.0], 0.0).unwrap(),
            Hyperplane::new(vec![0.0, 1.0], 0.0).unwrap(),
            Hyperplane::new(vec![r, r], 1.0).unwrap(),
        ],
    )
    .unwrap();
    let ex = enumerate_regions(&example, covering_halfwidth(&example, 1.0), 100_000, 1).unwrap();
    let mut mismatches = Vec::new();
    if ex.words.len() as u128 != regions(2, 3) || regions(2, 3) != 7 {
        mismatches.push(format!("example: {} words", ex.words.len()));
    }

    let mut rng = seeded(2024);
    let mut tested = 0;
    let mut rejected = 0;
    while tested < 200 {
        let n = if tested % 2 == 0 { 2 } else { 3 };
        let j = rng.random_range(1..=6usize);
        let hs: Vec<Hyperplane> = (0..j)
            .map(|_| Hyperplane::new(random_unit(&mut rng, n), rng.random_range(-1.0..1.0)).unwrap())
            .collect();
        let arr = Arrangement::new(n, hs).unwrap();
        // Well-conditioned general position: no nearly dependent normals and
        // no nearly coincident vertices.
        if general_position_margin(&arr) < GP_FLOOR || min_vertex_separation(&arr) < SEPARATION_FLOOR {
            rejected += 1;
            continue;
        }
        let found = enumerate_regions(&arr, covering_halfwidth(&arr, BOX_MARGIN), 100_000, tested as u64).unwrap();
        let want = regions(n as u32, j as u32);
        if found.words.len() as u128 != want || !found.general_position {
            mismatches.push(format!("n={n} J={j}: {} vs {want}", found.words.len()));
        }
        tested += 1;
    }
    let el = t.elapsed();
    let ok = mismatches.is_empty() && el < Duration::from_secs(30);
    line(
        "2",
        "region-count-oracle",
        ok,
        el,
        format!(
            "example r(2,3)={} ; {tested} arrangements ({rejected} ill-conditioned draws skipped); mismatches: {}",
            ex.words.len(),
            if mismatches.is_empty() {
                "none".to_string()
            } else {
                mismatches.join("; ")
            }
        ),
    )
}

fn c3() -> Outcome {
    let t = Instant::now();
    let rows = run_fig2(&[1, 2, 3, 4, 5], 20).unwrap();
    let el = t.elapsed();
    let mut bad = Vec::new();
    let mut cells = 0;
    for s in 1..=5u32 {
        for j in 1..=20u32 {
            cells += 1;
            let r = regions(s, j);
            // Brute force: scan n upward while (n+1)J ≤ r; the scan covers
            // 1..64 and continues past 64 where the bound allows it.
            let mut best = 0u128;
            let mut n = 1u128;
            while n <= 64 || (n + 1) * j as u128 <= r {
                if (n + 1) * j as u128 <= r {
                    best = n;
                }
                n += 1;
            }
            match rows.iter().find(|row| row.s == s && row.j == j) {
                Some(row) if row.n_max == best && row.regions == r => {}
                other => bad.push(format!("s={s} J={j}: {:?} vs {best}", other.map(|r| r.n_max))),
            }
        }
    }
    let ok = bad.is_empty() && rows.len() == cells && el < Duration::from_secs(1);
    line(
        "3",
        "fig2-table",
        ok,
        el,
        format!(
            "{cells} cells; mismatches: {}",
            if bad.is_empty() { "none".into() } else { bad.join("; ") }
        ),
    )
}

fn c4() -> Vec<Outcome> {
    let mut out = Vec::new();
    let t = Instant::now();
    let cfg = AuditConfig {
        trials: 10_000,
        seed: 4,
        ..AuditConfig::default()
    };
    let report = proposition_audit(&cfg).unwrap();
    let audit_time = t.elapsed();

    // (a) Concavity bound from the audit rows, plus an independent recheck.
    let lower: Vec<_> = report.rows.iter().filter(|r| r.claim == Claim::IncrementLower).collect();
    let worst = lower.iter().map(|r| r.actual - r.lower).fold(f64::INFINITY, f64::min);
    let mut rng = seeded(40);
    let mut worst_oracle = f64::INFINITY;
    for _ in 0..10_000 {
        let m = rng.random_range(1..=20usize);
        let mut p: Vec<f64> = (0..=m).map(|_| rng.random_range(0.01..0.99)).collect();
        p.sort_by(f64::total_cmp);
        let (im, im1) = (sym_mi(&p[..m]), sym_mi(&p));
        worst_oracle = worst_oracle.min(im1 - (m as f64 / (m as f64 + 1.0)) * im);
        let b = mi_increment_bounds(&p).unwrap();
        worst_oracle = worst_oracle.min(b.actual - b.lower);
    }
    let ok = lower.len() == 10_000 && worst >= -1e-12 && worst_oracle >= -1e-12;
    out.push(line(
        "4a",
        "concavity-lower-bound",
        ok,
        audit_time,
        format!(
            "{} audit rows worst margin {worst:.3e}; oracle worst margin {worst_oracle:.3e}",
            lower.len()
        ),
    ));

    // (b) Upper bound on 10^4 instances meeting its preconditions.
    let t = Instant::now();
    let mut rng = seeded(41);
    let (mut found, mut drawn, mut violations) = (0, 0, 0);
    let mut worst = f64::INFINITY;
    while found < 10_000 {
        drawn += 1;
        let m = rng.random_range(1..=20usize);
        let mut p: Vec<f64> = (0..=m).map(|_| rng.random_range(0.5..1.0)).collect();
        p.sort_by(f64::total_cmp);
        let strictly = p.windows(2).all(|w| w[0] < w[1]) && p[0] > 0.5;
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let pre = strictly && h(mean(&p)) <= h(mean(&p[..m]));
        assert_eq!(pre, increment_upper_preconditions(&p), "precondition disagreement on {p:?}");
        if !pre {
            continue;
        }
        found += 1;
        let hbar = p[..m].iter().map(|x| h(*x)).sum::<f64>() / m as f64;
        let upper = (hbar - h(p[m])) / (m as f64 + 1.0);
        let actual = sym_mi(&p) - sym_mi(&p[..m]);
        let margin = upper + 1e-12 - actual;
        worst = worst.min(margin);
        let b = mi_increment_bounds(&p).unwrap();
        if margin < 0.0 || (b.upper - upper).abs() > 1e-12 || (b.actual - actual).abs() > 1e-12 {
            violations += 1;
        }
    }
    let el = t.elapsed();
    out.push(line(
        "4b",
        "upper-bound-under-preconditions",
        violations == 0 && audit_time + el < Duration::from_secs(60),
        el,
        format!("{found} qualifying of {drawn} drawn; violations {violations}; worst margin {worst:.3e}"),
    ));

    // (c) Literal series identity S_T = I(T+1), T ≤ 200.
    let t = Instant::now();
    type Generator = Box<dyn Fn(usize) -> f64>;
    let gens: Vec<(&str, Generator)> = vec![
        ("constant", Box::new(|_| 0.7)),
        ("harmonic", Box::new(|k| 1.0 - 0.4 / k as f64)),
        ("geometric", Box::new(|k| 1.0 - 0.45 * 0.97f64.powi(k as i32))),
        ("oscillating", Box::new(|k| 0.6 + 0.3 * ((k as f64).sin().abs()))),
    ];
    let mut worst_gap: f64 = 0.0;
    let mut worst_corrected: f64 = 0.0;
    let mut gap_names = Vec::new();
    for (name, g) in &gens {
        let ps = mi_symmetric_partial_sums(g, 200).unwrap();
        let p: Vec<f64> = (1..=201).map(g).collect();
        let mut gap: f64 = 0.0;
        for t in 0..=200 {
            // Independent direct I(t+1) and series S_t.
            let direct = sym_mi(&p[..t + 1]);
            let mut s = 0.0;
            for m in 1..=t {
                let hbar = p[..m].iter().map(|x| h(*x)).sum::<f64>() / m as f64;
                s += (hbar - h(p[m])) / (m as f64 + 1.0);
            }
            assert!((ps.series[t] - s).abs() < 1e-10 && (ps.direct[t] - direct).abs() < 1e-12);
            gap = gap.max((s - direct).abs());
            let pbar = p[..t + 1].iter().sum::<f64>() / (t + 1) as f64;
            worst_corrected = worst_corrected.max((s + h(pbar) - h(p[0]) - direct).abs());
        }
        if gap > 1e-10 {
            gap_names.push(format!("{name} {gap:.3e}"));
        }
        worst_gap = worst_gap.max(gap);
    }
    let el = t.elapsed();
    let mut o = line(
        "4c",
        "series-identity",
        worst_gap <= 1e-10,
        el,
        format!(
            "max |S_T - I(T+1)| = {worst_gap:.3e} (gaps: {}); S_T + h(pbar_(T+1)) - h(p_1) = I(T+1) holds to {worst_corrected:.1e}",
            gap_names.join(", ")
        ),
    );
    o.replacement = Some(worst_corrected <= 1e-10);
    out.push(o);

    // (d) Monotonicity audit report.
    let mono: Vec<_> = report.rows.iter().filter(|r| r.claim == Claim::Monotone).collect();
    let csv = report.to_csv();
    let summary = report.summary();
    let s = &summary[&Claim::Monotone];
    let ok = mono.len() == 10_000
        && s.instances == 10_000
        && s.violations == mono.iter().filter(|r| r.violated).count()
        && csv.starts_with("proposition,trial,M,lower,actual,upper,violated\n")
        && csv.lines().filter(|l| l.starts_with("monotone,")).count() == 10_000;
    out.push(line(
        "4d",
        "monotonicity-audit",
        ok,
        audit_time,
        format!(
            "{} instances; {} violations; worst margin {:.3e}",
            s.instances, s.violations, s.worst_margin
        ),
    ));
    out
}

fn c5() -> Outcome {
    let t = Instant::now();
    let mut details = Vec::new();
    let mut ok = true;
    for seed in 1..=5u64 {
        let err = |rate: f64| {
            cover_binning_simulate(&CoverConfig::new(vec![0.89, 0.11], 20, rate, 2000, seed))
                .unwrap()
                .error_rate()
        };
        let (hi, lo) = (err(0.8), err(0.3));
        ok &= hi < lo;
        details.push(format!("seed {seed}: {hi:.4} < {lo:.4}"));
    }
    let degenerate = cover_binning_simulate(&CoverConfig::new(vec![1.0, 0.0], 20, 0.3, 2000, 9)).unwrap();
    ok &= degenerate.error_rate() == 0.0;
    let el = t.elapsed();
    ok &= el < Duration::from_secs(120);
    line(
        "5",
        "cover-binning",
        ok,
        el,
        format!("{}; degenerate error {}", details.join(", "), degenerate.error_rate()),
    )
}

fn c6() -> Outcome {
    let t = Instant::now();
    let mut rng = seeded(66);
    let mut worst = f64::INFINITY;
    for i in 0..20 {
        let means = [
            [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)],
            [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)],
        ];
        let th: f64 = rng.random_range(0.0..std::f64::consts::PI);
        let (l1, l2): (f64, f64) = (rng.random_range(0.3..2.0), rng.random_range(0.3..2.0));
        let (c, s) = (th.cos(), th.sin());
        let cov = [
            [l1 * c * c + l2 * s * s, (l1 - l2) * c * s],
            [(l1 - l2) * c * s, l1 * s * s + l2 * c * c],
        ];
        let counts = [rng.random_range(1.0..3.0), rng.random_range(1.0..3.0)];
        let w = [counts[0] / (counts[0] + counts[1]), counts[1] / (counts[0] + counts[1])];
        let model = ClassModel::new(
            means.iter().map(|m| m.to_vec()).collect(),
            vec![cov[0][0], cov[0][1], cov[1][0], cov[1][1]],
            counts.to_vec(),
        )
        .unwrap();
        let cfg = SearchConfig {
            seed: i,
            ..SearchConfig::default()
        };
        let res = optimize_hyperplane(&model, &cfg, CountMode::Given).unwrap();
        let hp = res.hyperplane();
        let got = split_info(&means, cov, &w, [hp.normal()[0], hp.normal()[1]], hp.offset());

        // Dense grid: 360 directions, 200 offsets spanning the projected
        // means with three standard deviations of slack.
        let mut oracle: f64 = 0.0;
        for k in 0..360 {
            let ang = k as f64 * std::f64::consts::TAU / 360.0;
            let a = [ang.cos(), ang.sin()];
            let proj: Vec<f64> = means.iter().map(|m| a[0] * m[0] + a[1] * m[1]).collect();
            let sd = (a[0] * a[0] * cov[0][0] + 2.0 * a[0] * a[1] * cov[0][1] + a[1] * a[1] * cov[1][1]).sqrt();
            let lo = proj.iter().cloned().fold(f64::INFINITY, f64::min) - 3.0 * sd;
            let hi = proj.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 3.0 * sd;
            for bi in 0..200 {
                let b = lo + (hi - lo) * bi as f64 / 199.0;
                oracle = oracle.max(split_info(&means, cov, &w, a, b));
            }
        }
        worst = worst.min(got - oracle);
        assert!((got - res.objective).abs() < 1e-9, "reported objective disagrees with oracle");
    }
    let model = ClassModel::new(
        vec![vec![-2.0, 0.0], vec![2.0, 0.0]],
        vec![1.0, 0.0, 0.0, 1.0],
        vec![1.0, 1.0],
    )
    .unwrap();
    let res = optimize_hyperplane(&model, &SearchConfig::default(), CountMode::Given).unwrap();
    let ax = res.hyperplane().normal()[0].abs();
    let el = t.elapsed();
    let ok = worst >= -1e-3 && res.objective >= 0.84 && ax >= 0.99 && el < Duration::from_secs(60);
    line(
        "6",
        "optimizer",
        ok,
        el,
        format!(
            "worst (optimizer - grid) over 20 models {worst:.3e}; bisector objective {:.6} |a_x| {ax:.6}",
            res.objective
        ),
    )
}

fn c7() -> Outcome {
    let t = Instant::now();
    let model = default_pipeline_model();
    let cfg = PipelineConfig::new(model.clone(), 7);
    let rows = run_pipeline(&cfg).unwrap();
    let el = t.elapsed();
    let mut notes = Vec::new();
    let mut ok = true;
    let w = model.weights();
    for r in &rows {
        ok &= r.recovered == r.report.trials && r.report.trials == 10_000;
        // Independent split probabilities.
        let mut exponent = 0.0;
        for hp in r.arrangement.hyperplanes() {
            let a = hp.normal();
            let cov = model.covariance();
            let var: f64 = (0..2)
                .flat_map(|i| (0..2).map(move |j| (i, j)))
                .map(|(i, j)| a[i] * cov[(i, j)] * a[j])
                .sum();
            let qj: f64 = model
                .means()
                .iter()
                .zip(&w)
                .map(|(m, wk)| wk * q((hp.offset() - (a[0] * m[0] + a[1] * m[1])) / var.sqrt()))
                .sum();
            exponent += h(qj);
        }
        let size = exponent.exp2();
        ok &= (r.report.codebook_size - size).abs() <= 1e-10 && r.report.codebook_size <= (1u64 << r.j) as f64 + 1e-12;
        notes.push(format!(
            "J={} distortion {:.4}±{:.4} codebook {:.4} recovered {}/{} rejected {}",
            r.j, r.report.error, r.std_error, r.report.codebook_size, r.recovered, r.report.trials, r.rejected
        ));
    }
    for pair in rows.windows(2).filter(|p| p[0].j >= 1) {
        let (a, b) = (&pair[0], &pair[1]);
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        ok &= b.report.error <= a.report.error + 2.0 * se;
    }
    line("7", "pipeline", ok, el, notes.join("; "))
}

fn c8() -> Outcome {
    let t = Instant::now();
    let mut ok = true;
    // Parity instance.
    let demo = xor_equivalence_demo();
    let tb = &demo.table;
    let c1 = Coloring::from_groups(tb, Source::First, &[&[0, 2], &[1, 3]]).unwrap();
    let c2 = Coloring::from_groups(tb, Source::Second, &[&[0, 2], &[1, 3]]).unwrap();
    let rep = check_ccc([&c1, &c2], tb, PathRule::default(), Validation::Strict).unwrap();
    let mut seen = std::collections::BTreeMap::new();
    let mut decodable = true;
    for x1 in 0..4i64 {
        for x2 in 0..4i64 {
            let key = (x1 % 2, x2 % 2);
            let v = (x1 + x2) % 2;
            decodable &= *seen.entry(key).or_insert(v) == v;
        }
    }
    let rates_ok = demo.report.bits_per_source == vec![1.0, 1.0];
    ok &= rep.satisfied && decodable && is_decodable([&c1, &c2], tb).unwrap() && rates_ok && demo.decoding_failures == 0;

    // Product-parity groupings and witness.
    let t4 = product_parity_table();
    let g1 = Coloring::from_groups(&t4, Source::First, &[&[1, 3], &[2, 4]]).unwrap();
    let g2 = Coloring::constant(2);
    let rep4 = check_ccc([&g1, &g2], &t4, PathRule::default(), Validation::Warn).unwrap();
    let witness = merge_conflicts(&t4, Source::First, 3, 2)
        .unwrap()
        .into_iter()
        .find(|c| c.other == 1 && c.value_a == 1.0 && c.value_b == 0.0);
    let f4 = |a: i64, b: i64| ((a * b) % 2) as f64;
    let table_matches = (1..=4).all(|a| (0..=1).all(|b| t4.value_at(a, b).unwrap() == f4(a, b)));
    ok &= !rep4.satisfied && witness.is_some() && table_matches && f4(3, 1) != f4(2, 1);

    // Exhaustive equivalence on 3x3 alphabets.
    let sweep = exhaustive_equivalence(3, 3, PathRule::default()).unwrap();
    ok &= sweep.counterexamples.is_empty();
    let el = t.elapsed();
    ok &= el < Duration::from_secs(300);
    let mut detail = format!(
        "parity satisfied={} R1=R2=1 {rates_ok} decodable={decodable}; groupings violated={} witness f(3,1)=1 != 0=f(2,1) found={}; sweep {} functions {} coloring pairs counterexamples {}",
        rep.satisfied,
        !rep4.satisfied,
        witness.is_some(),
        sweep.functions,
        sweep.colorings_checked,
        sweep.counterexamples.len()
    );
    for c in &sweep.counterexamples {
        detail.push_str(&format!("\n  counterexample: {c}"));
    }
    line("8", "ccc-suite", ok, el, detail)
}

fn run_cli(args: &[&str], cfg: &Path, out: &Path) -> (i32, Vec<u8>, Vec<u8>) {
    let o = Command::new(env!("CARGO_BIN_EXE_hyperbin"))
        .args(args)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn cli");
    let file = std::fs::read(out).unwrap_or_default();
    (o.status.code().unwrap_or(-1), file, o.stderr)
}

fn c9() -> Outcome {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&str, &str); 11] = [
        ("regions", "samples = 50000\n"),
        ("nmax", "s = 1,2,3\nJ = 1,5,10\n"),
        ("gp-check", "normals = 1,0; 0,1; 1,1\noffsets = 0,0,1\n"),
        ("optimize", "hyperplanes = 2\nrestarts = 4\nmc_samples = 20000\n"),
        ("fig2", ""),
        ("fig4", ""),
        ("example2", ""),
        ("cover-sim", "trials = 500\n"),
        (
            "pipeline",
            "hyperplanes = 0,1,2\nrestarts = 4\nmc_samples = 20000\nhelper_samples = 20000\neval_samples = 2000\n",
        ),
        ("ccc", ""),
        ("audit-props", "trials = 500\n"),
    ];
    let mut differing = Vec::new();
    let mut failed = Vec::new();
    for (cmd, text) in cases {
        let cfg = dir.path().join(format!("{cmd}.cfg"));
        std::fs::write(&cfg, format!("seed = 11\n{text}")).unwrap();
        let (c1, o1, e1) = run_cli(&[cmd], &cfg, &dir.path().join(format!("{cmd}.1")));
        let (c2, o2, e2) = run_cli(&[cmd], &cfg, &dir.path().join(format!("{cmd}.2")));
        if c1 != 0 || c2 != 0 || o1.is_empty() {
            failed.push(format!("{cmd} exit {c1}/{c2}: {}", String::from_utf8_lossy(&e1)));
        }
        if o1 != o2 || e1 != e2 {
            differing.push(cmd);
        }
    }
    let el = t.elapsed();
    let ok = differing.is_empty() && failed.is_empty();
    line(
        "9",
        "determinism",
        ok,
        el,
        format!(
            "11 commands run twice; differing: {}; failed: {}",
            if differing.is_empty() {
                "none".into()
            } else {
                differing.join(" ")
            },
            if failed.is_empty() { "none".into() } else { failed.join("; ") }
        ),
    )
}

fn main() {
    // Ignore libtest flags such as --nocapture.
    let filter: BTreeSet<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |id: &str| filter.is_empty() || filter.contains(id);
    let mut outcomes = Vec::new();
    let runners: [(&str, fn() -> Vec<Outcome>); 9] = [
        ("1", || vec![c1()]),
        ("2", || vec![c2()]),
        ("3", || vec![c3()]),
        ("4", c4),
        ("5", || vec![c5()]),
        ("6", || vec![c6()]),
        ("7", || vec![c7()]),
        ("8", || vec![c8()]),
        ("9", || vec![c9()]),
    ];
    for (id, run) in runners {
        if wanted(id) {
            outcomes.extend(run());
        }
    }
    let mut unexpected = Vec::new();
    for o in &outcomes {
        let known = KNOWN_RED.contains(&o.id);
        match (o.pass, known) {
            (true, _) => {}
            (false, true) if o.replacement == Some(true) => {
                println!("note: {} is a known red criterion; its corrected form holds", o.id)
            }
            _ => unexpected.push(o.id),
        }
    }
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("acceptance: {passed}/{} criteria passed", outcomes.len());
    if !unexpected.is_empty() {
        println!("unexpected failures: {}", unexpected.join(" "));
        std::process::exit(1);
    }
}
