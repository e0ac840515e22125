//! Characteristic graphs, joint coloring classes and the coloring
//! connectivity condition (CCC), with an exhaustive decodability oracle.
//!
//! Within a joint coloring class two support points are adjacent when they
//! differ in exactly one coordinate and, under the default
//! [`PathRule::FunctionPreserving`], carry the same function value. A class
//! satisfies the condition when it is connected or all of its points share
//! one function value.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::coding::{FunctionTable, Source};
use crate::error::{Error, Result};

/// Undirected graph over a source alphabet (alphabet indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    vertices: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn new(vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= vertices || b >= vertices {
                return Err(Error::IndexOutOfRange {
                    index: a.max(b),
                    len: vertices,
                });
            }
            if a != b {
                set.insert((a.min(b), a.max(b)));
            }
        }
        Ok(Self { vertices, edges: set })
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    /// Edges `(a, b)` with `a < b`.
    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }
}

/// `x ~ x'` iff some `y` has positive probability with both and
/// `f(x, y) ≠ f(x', y)`.
pub fn characteristic_graph(table: &FunctionTable, source: Source) -> Graph {
    let n = table.size(source);
    let m = table.size(source.other());
    let at = |x: usize, y: usize| match source {
        Source::First => (table.value(x, y), table.pmf(x, y)),
        Source::Second => (table.value(y, x), table.pmf(y, x)),
    };
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let differs = (0..m).any(|y| {
                let (va, pa) = at(a, y);
                let (vb, pb) = at(b, y);
                pa > 0.0 && pb > 0.0 && va != vb
            });
            if differs {
                edges.push((a, b));
            }
        }
    }
    Graph::new(n, edges).expect("indices in range")
}

/// Color of every alphabet index of one source.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Coloring {
    colors: Vec<u32>,
}

impl Coloring {
    pub fn new(colors: Vec<u32>) -> Self {
        Self { colors }
    }

    /// Coloring from groups of alphabet symbols; every symbol must appear in
    /// exactly one group.
    pub fn from_groups(table: &FunctionTable, source: Source, groups: &[&[i64]]) -> Result<Self> {
        let n = table.size(source);
        let mut colors = vec![None; n];
        for (c, group) in groups.iter().enumerate() {
            for x in *group {
                let i = table.symbol_index(source, *x)?;
                if colors[i].replace(c as u32).is_some() {
                    return Err(Error::invalid(format!("symbol {x} colored twice")));
                }
            }
        }
        let colors = colors
            .into_iter()
            .enumerate()
            .map(|(i, c)| c.ok_or_else(|| Error::invalid(format!("symbol {} uncolored", table.alphabet(source)[i]))))
            .collect::<Result<_>>()?;
        Ok(Self { colors })
    }

    /// Every symbol its own color.
    pub fn identity(size: usize) -> Self {
        Self {
            colors: (0..size as u32).collect(),
        }
    }

    /// One color for every symbol.
    pub fn constant(size: usize) -> Self {
        Self { colors: vec![0; size] }
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn color(&self, x: usize) -> u32 {
        self.colors[x]
    }

    pub fn num_colors(&self) -> usize {
        self.colors.iter().collect::<BTreeSet<_>>().len()
    }

    /// One `x color` line per symbol.
    pub fn to_text(&self, alphabet: &[i64]) -> String {
        let mut out = String::new();
        for (x, c) in alphabet.iter().zip(&self.colors) {
            let _ = writeln!(out, "{x} {c}");
        }
        out
    }

    /// Parses `x color` lines; color tokens are arbitrary and numbered by
    /// first appearance.
    pub fn from_text(text: &str, alphabet: &[i64]) -> Result<Self> {
        let mut names: BTreeMap<String, u32> = BTreeMap::new();
        let mut colors = vec![None; alphabet.len()];
        for (i, l) in text.lines().enumerate() {
            let l = l.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(Error::parse(i + 1, "expected `x color`"));
            }
            let x: i64 = toks[0]
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("bad symbol `{}`", toks[0])))?;
            let idx = alphabet
                .iter()
                .position(|s| *s == x)
                .ok_or_else(|| Error::parse(i + 1, format!("symbol {x} not in alphabet")))?;
            let next = names.len() as u32;
            let c = *names.entry(toks[1].to_string()).or_insert(next);
            if colors[idx].replace(c).is_some() {
                return Err(Error::parse(i + 1, format!("symbol {x} colored twice")));
            }
        }
        let colors = colors
            .into_iter()
            .enumerate()
            .map(|(i, c)| c.ok_or_else(|| Error::invalid(format!("symbol {} uncolored", alphabet[i]))))
            .collect::<Result<_>>()?;
        Ok(Self { colors })
    }
}

/// First edge whose endpoints share a color.
pub fn coloring_conflict(graph: &Graph, coloring: &Coloring) -> Option<(usize, usize)> {
    graph
        .edges()
        .iter()
        .copied()
        .find(|(a, b)| coloring.color(*a) == coloring.color(*b))
}

pub fn is_valid_coloring(graph: &Graph, coloring: &Coloring) -> bool {
    coloring.len() == graph.vertices() && coloring_conflict(graph, coloring).is_none()
}

/// Support points sharing one color pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointClass {
    pub colors: (u32, u32),
    /// Alphabet index pairs, row-major order.
    pub points: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointColoringFamily {
    pub classes: Vec<JointClass>,
}

fn check_lengths(colorings: [&Coloring; 2], table: &FunctionTable) -> Result<()> {
    for s in Source::BOTH {
        let c = colorings[s.index()];
        if c.len() != table.size(s) {
            return Err(Error::DimensionMismatch {
                expected: table.size(s),
                found: c.len(),
            });
        }
    }
    Ok(())
}

/// Partitions the support by color pair; classes sorted by color pair.
pub fn joint_classes(colorings: [&Coloring; 2], table: &FunctionTable) -> Result<JointColoringFamily> {
    check_lengths(colorings, table)?;
    let mut groups: BTreeMap<(u32, u32), Vec<(usize, usize)>> = BTreeMap::new();
    for (i, j) in table.support() {
        groups
            .entry((colorings[0].color(i), colorings[1].color(j)))
            .or_default()
            .push((i, j));
    }
    Ok(JointColoringFamily {
        classes: groups
            .into_iter()
            .map(|(colors, points)| JointClass { colors, points })
            .collect(),
    })
}

/// Which one-coordinate moves count as a path step inside a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PathRule {
    /// Both endpoints must carry the same function value.
    #[default]
    FunctionPreserving,
    /// Any move to a point of the same class.
    Hamming,
}

/// How invalid colorings are treated by [`check_ccc`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Validation {
    #[default]
    Strict,
    /// Record invalid colorings as warnings and check anyway.
    Warn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassVerdict {
    pub colors: (u32, u32),
    pub points: Vec<(usize, usize)>,
    pub components: Vec<Vec<(usize, usize)>>,
    /// Distinct function values in the class.
    pub values: Vec<f64>,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CccReport {
    pub classes: Vec<ClassVerdict>,
    pub satisfied: bool,
    pub warnings: Vec<String>,
}

impl CccReport {
    pub fn violated_classes(&self) -> impl Iterator<Item = &ClassVerdict> {
        self.classes.iter().filter(|c| !c.satisfied)
    }
}

fn components(points: &[(usize, usize)], table: &FunctionTable, rule: PathRule) -> Vec<Vec<(usize, usize)>> {
    let k = points.len();
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for a in 0..k {
        for b in a + 1..k {
            let (pa, pb) = (points[a], points[b]);
            let one_move = (pa.0 == pb.0) != (pa.1 == pb.1);
            let allowed = match rule {
                PathRule::Hamming => true,
                PathRule::FunctionPreserving => table.value(pa.0, pa.1) == table.value(pb.0, pb.1),
            };
            if one_move && allowed {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        groups.entry(find(&mut parent, i)).or_default().push(*p);
    }
    groups.into_values().collect()
}

fn distinct_values(points: &[(usize, usize)], table: &FunctionTable) -> Vec<f64> {
    let mut values: Vec<f64> = points.iter().map(|(i, j)| table.value(*i, *j)).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    values
}

/// Checks every joint class of `colorings`. Under [`Validation::Strict`] an
/// invalid coloring is an error naming the offending edge (alphabet indices).
pub fn check_ccc(colorings: [&Coloring; 2], table: &FunctionTable, rule: PathRule, validation: Validation) -> Result<CccReport> {
    check_lengths(colorings, table)?;
    let mut warnings = Vec::new();
    for s in Source::BOTH {
        let graph = characteristic_graph(table, s);
        if let Some((a, b)) = coloring_conflict(&graph, colorings[s.index()]) {
            match validation {
                Validation::Strict => return Err(Error::InvalidColoring(a, b)),
                Validation::Warn => warnings.push(format!(
                    "coloring of source {} is not valid: symbols {} and {} share a color",
                    s.index() + 1,
                    table.alphabet(s)[a],
                    table.alphabet(s)[b]
                )),
            }
        }
    }
    let family = joint_classes(colorings, table)?;
    let classes: Vec<ClassVerdict> = family
        .classes
        .iter()
        .map(|c| {
            let comps = components(&c.points, table, rule);
            let values = distinct_values(&c.points, table);
            ClassVerdict {
                colors: c.colors,
                points: c.points.clone(),
                satisfied: comps.len() == 1 || values.len() == 1,
                components: comps,
                values,
            }
        })
        .collect();
    Ok(CccReport {
        satisfied: classes.iter().all(|c| c.satisfied),
        classes,
        warnings,
    })
}

/// Whether `f` is a function of the color pair on the support.
pub fn is_decodable(colorings: [&Coloring; 2], table: &FunctionTable) -> Result<bool> {
    Ok(joint_classes(colorings, table)?
        .classes
        .iter()
        .all(|c| distinct_values(&c.points, table).len() == 1))
}

/// A `y` at which merging symbols `a` and `b` of one source is ambiguous.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeConflict {
    pub other: i64,
    pub value_a: f64,
    pub value_b: f64,
}

/// All `y` with `f(a, y) ≠ f(b, y)` (both pairs in the support), in symbols
/// of `source` and its counterpart.
pub fn merge_conflicts(table: &FunctionTable, source: Source, a: i64, b: i64) -> Result<Vec<MergeConflict>> {
    let ia = table.symbol_index(source, a)?;
    let ib = table.symbol_index(source, b)?;
    let other = source.other();
    let at = |x: usize, y: usize| match source {
        Source::First => (table.value(x, y), table.pmf(x, y)),
        Source::Second => (table.value(y, x), table.pmf(y, x)),
    };
    Ok((0..table.size(other))
        .filter_map(|y| {
            let (va, pa) = at(ia, y);
            let (vb, pb) = at(ib, y);
            (pa > 0.0 && pb > 0.0 && va != vb).then_some(MergeConflict {
                other: table.alphabet(other)[y],
                value_a: va,
                value_b: vb,
            })
        })
        .collect())
}

/// `f = (x1 · x2) mod 2` with `x1 ∈ {1,2,3,4}`, `x2 ∈ {0,1}`, uniform.
pub fn product_parity_table() -> FunctionTable {
    FunctionTable::uniform(vec![1, 2, 3, 4], vec![0, 1], |a, b| ((a * b) % 2) as f64).expect("valid table")
}

/// Colorings as restricted growth strings: every set partition of
/// `0..size` exactly once.
pub fn all_partitions(size: usize) -> Vec<Coloring> {
    fn grow(prefix: &mut Vec<u32>, size: usize, out: &mut Vec<Coloring>) {
        if prefix.len() == size {
            out.push(Coloring::new(prefix.clone()));
            return;
        }
        let next = prefix.iter().max().map_or(0, |m| m + 1);
        for c in 0..=next {
            prefix.push(c);
            grow(prefix, size, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), size, &mut out);
    out
}

/// Result of [`exhaustive_equivalence`].
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceSweep {
    pub functions: usize,
    pub colorings_checked: usize,
    /// One line per case where the condition and decodability disagree.
    pub counterexamples: Vec<String>,
}

/// Compares [`check_ccc`] with [`is_decodable`] for every function on every
/// alphabet pair up to `max1 × max2` (uniform pmf) and every pair of valid
/// colorings. Both checks depend on `f` only through which pairs share a
/// value, so functions are enumerated as set partitions of the pairs.
pub fn exhaustive_equivalence(max1: usize, max2: usize, rule: PathRule) -> Result<EquivalenceSweep> {
    if max1 == 0 || max2 == 0 {
        return Err(Error::invalid("alphabet sizes must be positive"));
    }
    if max1 * max2 > 12 {
        return Err(Error::Overflow("too many functions to enumerate"));
    }
    let mut jobs = Vec::new();
    for n1 in 1..=max1 {
        for n2 in 1..=max2 {
            for pattern in all_partitions(n1 * n2) {
                jobs.push((n1, n2, pattern));
            }
        }
    }
    let results: Vec<Result<(usize, Vec<String>)>> = jobs
        .par_iter()
        .map(|(n1, n2, pattern)| {
            let (n1, n2) = (*n1, *n2);
            let values: Vec<f64> = pattern.colors.iter().map(|v| *v as f64).collect();
            let table = FunctionTable::new(
                (0..n1 as i64).collect(),
                (0..n2 as i64).collect(),
                values,
                vec![1.0 / (n1 * n2) as f64; n1 * n2],
            )?;
            let g1 = characteristic_graph(&table, Source::First);
            let g2 = characteristic_graph(&table, Source::Second);
            let c1: Vec<Coloring> = all_partitions(n1).into_iter().filter(|c| is_valid_coloring(&g1, c)).collect();
            let c2: Vec<Coloring> = all_partitions(n2).into_iter().filter(|c| is_valid_coloring(&g2, c)).collect();
            let mut checked = 0;
            let mut bad = Vec::new();
            for a in &c1 {
                for b in &c2 {
                    checked += 1;
                    let ccc = check_ccc([a, b], &table, rule, Validation::Strict)?.satisfied;
                    let dec = is_decodable([a, b], &table)?;
                    if ccc != dec {
                        bad.push(format!(
                            "{n1}x{n2} f={:?} c1={:?} c2={:?}: ccc={ccc} decodable={dec}",
                            table.values(),
                            a.colors,
                            b.colors
                        ));
                    }
                }
            }
            Ok((checked, bad))
        })
        .collect();
    let mut sweep = EquivalenceSweep {
        functions: jobs.len(),
        colorings_checked: 0,
        counterexamples: Vec::new(),
    };
    for r in results {
        let (c, bad) = r?;
        sweep.colorings_checked += c;
        sweep.counterexamples.extend(bad);
    }
    Ok(sweep)
}
