//! Fixtures, the seeded random corpus and brute-force oracles shared by the
//! integration suites. The oracles only look at the graph through `has_edge`
//! and the type structure, never through the miner's own helpers.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use mccs::graph::{build_graph, KPartiteGraph, NodeRef};
use mccs::miner::Pattern;
use mccs::schema::MultiRelationalDatabase;
use mccs::synth::random_graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_m() -> KPartiteGraph {
    let mut db = MultiRelationalDatabase::new(["title", "genre", "year"]).unwrap();
    let g = db.add_relationship_type("of_genre", 0, 1).unwrap();
    let y = db.add_relationship_type("film_year", 0, 2).unwrap();
    for (t, genre) in [("T1", "Drama"), ("T1", "History"), ("T3", "Drama"), ("T3", "History"), ("T2", "Comedy")] {
        db.add_instance(g, t, genre);
    }
    for (t, year) in [("T1", "2010"), ("T3", "2010"), ("T2", "2009")] {
        db.add_instance(y, t, year);
    }
    build_graph(&db).unwrap()
}

pub fn fixture_b_db() -> MultiRelationalDatabase {
    let mut db = MultiRelationalDatabase::new(["transaction", "item"]).unwrap();
    let r = db.add_relationship_type("bought", 0, 1).unwrap();
    for (t, i) in [("T1", "I1"), ("T1", "I2"), ("T2", "I1"), ("T2", "I2"), ("T3", "I3"), ("T4", "I1")] {
        db.add_instance(r, t, i);
    }
    db
}

pub fn fixture_b() -> KPartiteGraph {
    build_graph(&fixture_b_db()).unwrap()
}

pub const FIXTURE_M_SCHEMA: &str = r#"{
  "entity_types": [{"name": "title"}, {"name": "genre"}, {"name": "year"}],
  "relationship_types": [
    {"name": "of_genre", "left": "title", "right": "genre", "file": "of_genre.csv", "left_column": "title", "right_column": "genre"},
    {"name": "film_year", "left": "title", "right": "year", "file": "film_year.csv", "left_column": "title", "right_column": "year"}
  ]
}
"#;

pub const FIXTURE_M_GENRES: &str = "title,genre\nT1,Drama\nT1,History\nT3,Drama\nT3,History\nT2,Comedy\n";
pub const FIXTURE_M_YEARS: &str = "title,year\nT1,2010\nT3,2010\nT2,2009\n";

pub fn write_fixture_m(dir: &std::path::Path) -> std::path::PathBuf {
    std::fs::write(dir.join("of_genre.csv"), FIXTURE_M_GENRES).unwrap();
    std::fs::write(dir.join("film_year.csv"), FIXTURE_M_YEARS).unwrap();
    let schema = dir.join("schema.json");
    std::fs::write(&schema, FIXTURE_M_SCHEMA).unwrap();
    schema
}

/// One random K-partite graph of the oracle corpus.
pub fn corpus_graph(seed: u64) -> KPartiteGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE ^ seed);
    let k = 2 + (seed % 3) as usize;
    let sizes: Vec<usize> = (0..k).map(|_| rng.gen_range(1..=6)).collect();
    let mut topology = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            if rng.gen_bool(0.65) {
                topology.push((a, b));
            }
        }
    }
    if topology.is_empty() {
        topology.push((0, 1));
    }
    let densities: Vec<f64> = topology.iter().map(|_| rng.gen_range(0.1..0.9)).collect();
    random_graph(&sizes, &topology, &densities, seed).unwrap()
}

pub fn corpus(n: u64) -> Vec<KPartiteGraph> {
    (0..n).map(corpus_graph).collect()
}

/// Every node, numbered in the total order.
pub fn all_nodes(g: &KPartiteGraph) -> Vec<NodeRef> {
    let mut v = Vec::new();
    for t in 0..g.type_count() {
        for i in 0..g.type_len(t) as u32 {
            v.push(NodeRef::new(t, i));
        }
    }
    v
}

/// Exhaustive CCS enumeration over bitmasks of at most 64 nodes.
///
/// A set is complete when every pair of nodes whose types share an edge type
/// is joined by an edge, and connected when its data edges connect it. Every
/// connected complete set is reached from a single node by adding one edge
/// neighbour at a time while staying complete, so a flood fill over
/// that relation from every singleton visits all of them.
pub struct Oracle {
    pub nodes: Vec<NodeRef>,
    conflict: Vec<u64>,
    adjacent: Vec<u64>,
    pub ccs: HashSet<u64>,
}

impl Oracle {
    pub fn new(g: &KPartiteGraph) -> Self {
        let nodes = all_nodes(g);
        assert!(nodes.len() <= 64, "oracle limited to 64 nodes");
        let n = nodes.len();
        let mut conflict = vec![0u64; n];
        let mut adjacent = vec![0u64; n];
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let (x, y) = (nodes[a], nodes[b]);
                let linked = x.ty() != y.ty() && g.edge_type_between(x.ty(), y.ty()).is_some();
                if linked && g.has_edge(x, y) {
                    adjacent[a] |= 1 << b;
                } else if linked {
                    conflict[a] |= 1 << b;
                }
            }
        }
        let mut ccs = HashSet::new();
        let mut stack = Vec::new();
        for a in 0..n {
            let s = 1u64 << a;
            if ccs.insert(s) {
                stack.push(s);
            }
        }
        while let Some(s) = stack.pop() {
            for x in Self::extensions_of(&adjacent, &conflict, s) {
                let t = s | (1 << x);
                if ccs.insert(t) {
                    stack.push(t);
                }
            }
        }
        Oracle {
            nodes,
            conflict,
            adjacent,
            ccs,
        }
    }

    fn extensions_of(adjacent: &[u64], conflict: &[u64], s: u64) -> Vec<usize> {
        let mut out = Vec::new();
        for x in 0..adjacent.len() {
            let bit = 1u64 << x;
            if s & bit == 0 && adjacent[x] & s != 0 && conflict[x] & s == 0 {
                out.push(x);
            }
        }
        out
    }

    pub fn is_maximal(&self, s: u64) -> bool {
        Self::extensions_of(&self.adjacent, &self.conflict, s).is_empty()
    }

    pub fn to_set(&self, s: u64) -> Vec<NodeRef> {
        (0..self.nodes.len()).filter(|&i| s >> i & 1 == 1).map(|i| self.nodes[i]).collect()
    }

    /// CCSs with at least `min` nodes, as sorted node lists.
    pub fn all_ccs(&self, min: u32) -> BTreeSet<Vec<NodeRef>> {
        self.ccs.iter().filter(|s| s.count_ones() >= min).map(|&s| self.to_set(s)).collect()
    }

    pub fn mccs(&self, min: u32) -> BTreeSet<Vec<NodeRef>> {
        self.ccs
            .iter()
            .filter(|&&s| s.count_ones() >= min && self.is_maximal(s))
            .map(|&s| self.to_set(s))
            .collect()
    }
}

pub fn pattern_set(ps: &[Pattern]) -> BTreeSet<Vec<NodeRef>> {
    ps.iter().map(Pattern::sorted_nodes).collect()
}

/// True when no node set occurs twice.
pub fn all_distinct(ps: &[Pattern]) -> bool {
    pattern_set(ps).len() == ps.len()
}

pub fn labels(g: &KPartiteGraph, nodes: &[NodeRef]) -> Vec<String> {
    nodes.iter().map(|&n| g.label(n).to_string()).collect()
}
