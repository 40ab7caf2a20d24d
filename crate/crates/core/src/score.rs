//! Subjective interestingness of patterns against the degree model.
//!
//! A pattern's self-information is the surprisal of its edges under the
//! background model; its description length is the cost of flagging each
//! graph node as in or out of the pattern with a `p` / `1 − p` code. The
//! ratio of the two is the interestingness used for ranking.

use std::cmp::Ordering;
use std::io::{BufRead, Write};

use indexmap::IndexMap;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::graph::{KPartiteGraph, NodeRef};
use crate::maxent::{database_density, MaxEntModel};
use crate::miner::{nodes_by_type, Pattern};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Bits,
    Nats,
}

impl LogBase {
    #[inline]
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Bits => x.log2(),
            LogBase::Nats => x.ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RankOptions {
    /// Membership probability of the description code; the database density when `None`.
    pub p: Option<f64>,
    pub top_k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedPattern {
    pub pattern: Pattern,
    pub self_information_bits: f64,
    pub description_length_bits: f64,
    pub interestingness: f64,
    pub rank: usize,
}

/// Calls `f(edge_type, left_index, right_index)` for every data edge among `nodes`.
fn for_each_edge(graph: &KPartiteGraph, nodes: &[NodeRef], mut f: impl FnMut(usize, u32, u32) -> Result<()>) -> Result<()> {
    for (i, &a) in nodes.iter().enumerate() {
        for &b in &nodes[i + 1..] {
            let Some(e) = graph.edge_type_between(a.ty(), b.ty()) else { continue };
            if !graph.has_edge(a, b) {
                continue;
            }
            let (l, r) = if graph.edge_types()[e].left() == a.ty() { (a, b) } else { (b, a) };
            f(e, l.node_index, r.node_index)?;
        }
    }
    Ok(())
}

pub fn self_information_in(model: &MaxEntModel, graph: &KPartiteGraph, pattern: &Pattern, base: LogBase) -> Result<f64> {
    let mut total = 0.0;
    for_each_edge(graph, &pattern.nodes, |e, i, j| {
        let rel = model
            .relationships()
            .get(e)
            .ok_or_else(|| Error::InvalidPattern("model does not cover the graph's edge types".into()))?;
        let p = rel.probability(i, j);
        if p <= 0.0 {
            return Err(Error::InvalidPattern(format!(
                "edge ({i}, {j}) of `{}` has model probability 0",
                rel.name()
            )));
        }
        total -= base.log(p);
        Ok(())
    })?;
    Ok(total)
}

/// −Σ log₂ P over the pattern's edges.
pub fn self_information(model: &MaxEntModel, graph: &KPartiteGraph, pattern: &Pattern) -> Result<f64> {
    self_information_in(model, graph, pattern, LogBase::Bits)
}

pub fn description_length_in(total_nodes: usize, pattern_nodes: usize, p: f64, base: LogBase) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("p = {p} is not in (0, 1)")));
    }
    if pattern_nodes > total_nodes {
        return Err(Error::InvalidArgument(format!(
            "pattern has {pattern_nodes} nodes but the graph only {total_nodes}"
        )));
    }
    let n = pattern_nodes as f64;
    let rest = (total_nodes - pattern_nodes) as f64;
    Ok(-n * base.log(p) - rest * base.log(1.0 - p))
}

/// Member nodes cost −log₂ p bits each and the others −log₂(1 − p).
pub fn description_length(total_nodes: usize, pattern_nodes: usize, p: f64) -> Result<f64> {
    description_length_in(total_nodes, pattern_nodes, p, LogBase::Bits)
}

pub fn interestingness_in(model: &MaxEntModel, graph: &KPartiteGraph, pattern: &Pattern, p: f64, base: LogBase) -> Result<f64> {
    let si = self_information_in(model, graph, pattern, base)?;
    let dl = description_length_in(graph.node_count(), pattern.len(), p, base)?;
    Ok(si / dl)
}

pub fn interestingness(model: &MaxEntModel, graph: &KPartiteGraph, pattern: &Pattern, p: f64) -> Result<f64> {
    interestingness_in(model, graph, pattern, p, LogBase::Bits)
}

/// Scores and sorts patterns by descending interestingness, ties broken by
/// the ascending sorted node list. Scores are compared at the printed
/// precision, so values that differ only by rounding noise count as ties.
pub fn rank(
    model: &MaxEntModel,
    graph: &KPartiteGraph,
    patterns: impl IntoIterator<Item = Pattern>,
    options: &RankOptions,
) -> Result<Vec<RankedPattern>> {
    let p = match options.p {
        Some(p) => p,
        None => database_density(graph)?,
    };
    let total = graph.node_count();
    let mut scored = Vec::new();
    for pattern in patterns {
        let si = self_information(model, graph, &pattern)?;
        let dl = description_length(total, pattern.len(), p)?;
        let key: f64 = format_significant(si / dl).parse().unwrap_or(si / dl);
        scored.push(((key, pattern.sorted_nodes()), RankedPattern {
            pattern,
            self_information_bits: si,
            description_length_bits: dl,
            interestingness: si / dl,
            rank: 0,
        }));
    }
    scored.sort_by(|((sa, na), _), ((sb, nb), _)| sb.total_cmp(sa).then_with(|| na.cmp(nb)));
    let keep = options.top_k.unwrap_or(usize::MAX);
    Ok(scored
        .into_iter()
        .take(keep)
        .enumerate()
        .map(|(i, (_, mut r))| {
            r.rank = i + 1;
            r
        })
        .collect())
}

/// Formats `x` with 12 significant digits.
pub fn format_significant(x: f64) -> String {
    const DIGITS: usize = 12;
    if !x.is_finite() {
        return if x.is_nan() { "null".into() } else if x > 0.0 { "1e308".into() } else { "-1e308".into() };
    }
    if x == 0.0 {
        return format!("{:.*}", DIGITS - 1, 0.0);
    }
    let sci = format!("{:.*e}", DIGITS - 1, x);
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (DIGITS as i32 - 1 - exp).max(0) as usize;
        format!("{:.*}", decimals, x)
    } else {
        sci
    }
}

pub fn write_ranked<W: Write>(graph: &KPartiteGraph, ranked: &[RankedPattern], mut out: W) -> std::io::Result<()> {
    for r in ranked {
        let nodes = serde_json::to_string(&nodes_by_type(graph, &r.pattern))?;
        writeln!(
            out,
            r#"{{"rank":{},"interestingness":{},"self_information_bits":{},"description_length_bits":{},"nodes":{},"edge_count":{}}}"#,
            r.rank,
            format_significant(r.interestingness),
            format_significant(r.self_information_bits),
            format_significant(r.description_length_bits),
            nodes,
            r.pattern.edge_count
        )?;
    }
    Ok(())
}

/// One line of ranked output, as read back.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct RankedRecord {
    pub rank: usize,
    pub interestingness: f64,
    pub self_information_bits: f64,
    pub description_length_bits: f64,
    pub nodes: IndexMap<String, Vec<String>>,
    pub edge_count: usize,
}

pub fn read_ranked<R: BufRead>(input: R) -> Result<Vec<RankedRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<ranked stream>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::InvalidPattern(format!("line {}: {e}", lineno + 1)))?,
        );
    }
    Ok(out)
}

/// Order used for tie-breaking, exposed for callers that merge rankings.
pub fn canonical_cmp(a: &Pattern, b: &Pattern) -> Ordering {
    a.sorted_nodes().cmp(&b.sorted_nodes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::fixture_m;
    use crate::maxent::{fit, FitOptions};
    use crate::miner::{mine, MineOptions};

    #[test]
    fn description_length_examples() {
        assert!((description_length(8, 5, 0.5).unwrap() - 8.0).abs() < 1e-12);
        let dl = description_length(8, 3, 8.0 / 15.0).unwrap();
        assert!((dl - 8.218).abs() < 5e-4, "{dl}");
        let p: f64 = 0.3;
        assert!((description_length(8, 0, p).unwrap() + 8.0 * (1.0 - p).log2()).abs() < 1e-12);
        assert!(description_length(8, 3, 1.0).is_err());
        assert!(description_length(8, 3, 0.0).is_err());
        assert!(description_length(2, 3, 0.5).is_err());
    }

    #[test]
    fn natural_log_ratio_matches_bits() {
        let g = fixture_m();
        let model = fit(&g, &FitOptions::default()).unwrap();
        for p in mine(&g, &MineOptions::default()) {
            let a = interestingness_in(&model, &g, &p, 0.4, LogBase::Bits).unwrap();
            let b = interestingness_in(&model, &g, &p, 0.4, LogBase::Nats).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn fixture_m_ranking() {
        let g = fixture_m();
        let model = fit(&g, &FitOptions::default()).unwrap();
        let ranked = rank(&model, &g, mine(&g, &MineOptions::default()), &RankOptions::default()).unwrap();
        assert_eq!(ranked.len(), 2);
        // {T2, Comedy, 2009} joins degree-one nodes, which the model finds
        // far less likely than the denser block
        assert_eq!(ranked[0].pattern.len(), 3);
        assert_eq!(ranked[1].pattern.len(), 5);
        assert!(ranked[0].interestingness > ranked[1].interestingness);
        assert_eq!((ranked[0].rank, ranked[1].rank), (1, 2));

        let top = rank(&model, &g, mine(&g, &MineOptions::default()), &RankOptions { top_k: Some(1), ..Default::default() }).unwrap();
        assert_eq!(top.len(), 1);
        assert_eq!(top[0].pattern, ranked[0].pattern);
    }

    #[test]
    fn duplicates_rank_deterministically() {
        let g = fixture_m();
        let model = fit(&g, &FitOptions::default()).unwrap();
        let ps = mine(&g, &MineOptions::default());
        let doubled: Vec<Pattern> = ps.iter().chain(ps.iter()).cloned().collect();
        let a = rank(&model, &g, doubled.clone(), &RankOptions::default()).unwrap();
        let b = rank(&model, &g, doubled.into_iter().rev(), &RankOptions::default()).unwrap();
        assert_eq!(a.len(), 4);
        let key = |v: &[RankedPattern]| v.iter().map(|r| r.pattern.sorted_nodes()).collect::<Vec<_>>();
        assert_eq!(key(&a), key(&b));
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_significant(0.75), "0.750000000000");
        assert_eq!(format_significant(8.218), "8.21800000000");
        assert_eq!(format_significant(123456.0), "123456.000000");
        assert_eq!(format_significant(0.0), "0.00000000000");
        assert_eq!(format_significant(9.9999999999999), "10.0000000000");
        assert_eq!(format_significant(1.5e-9), "1.50000000000e-9");
        let x = 1.0 / 3.0;
        let back: f64 = format_significant(x).parse().unwrap();
        assert!((back - x).abs() < 1e-12);
    }
}
