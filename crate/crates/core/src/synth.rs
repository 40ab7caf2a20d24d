//! Planted-pattern experiments and seeded random K-partite graphs.
//!
//! [`embed`] adds `k` fresh nodes to a hub type and to each satellite type,
//! links every new hub node to every new satellite node, and then adds
//! background edges between new and existing nodes so that each existing
//! node keeps, in expectation, the fraction of the opposite type it links to.

use std::io::Write;
use std::path::Path;

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph, KPartiteGraph, NodeRef};
use crate::schema::{MultiRelationalDatabase, RelationshipType, SchemaDescriptor};
use crate::score::RankedPattern;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbedSpec {
    pub k: usize,
    pub hub_type: String,
    pub satellite_types: Vec<String>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddedEdge {
    #[serde(rename = "type")]
    pub relationship: String,
    pub left: String,
    pub right: String,
}

/// The planted nodes and edges, by label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub nodes: IndexMap<String, Vec<String>>,
    pub edges: Vec<EmbeddedEdge>,
}

impl GroundTruth {
    /// Resolves the planted labels in `graph`.
    pub fn node_refs(&self, graph: &KPartiteGraph) -> Result<Vec<NodeRef>> {
        let mut out = Vec::new();
        for (ty, labels) in &self.nodes {
            for l in labels {
                out.push(graph.node(ty, l).ok_or_else(|| {
                    Error::InvalidArgument(format!("planted node {ty}/{l} not in graph"))
                })?);
            }
        }
        out.sort_unstable();
        Ok(out)
    }
}

fn fresh_label(existing: &indexmap::IndexSet<String>, i: usize) -> String {
    let mut label = format!("planted_{i}");
    while existing.contains(&label) {
        label.insert(0, '_');
    }
    label
}

/// Plants a `k`-per-type CCS into a copy of `graph`.
pub fn embed(graph: &KPartiteGraph, spec: &EmbedSpec) -> Result<(KPartiteGraph, GroundTruth)> {
    if spec.k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let find = |name: &str| {
        graph
            .type_index(name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown entity type `{name}`")))
    };
    let hub = find(&spec.hub_type)?;
    let mut selected = vec![hub];
    for s in &spec.satellite_types {
        let t = find(s)?;
        if selected.contains(&t) {
            return Err(Error::InvalidArgument(format!("entity type `{s}` selected twice")));
        }
        if graph.edge_type_between(hub, t).is_none() {
            return Err(Error::InvalidArgument(format!(
                "no relationship type links `{}` and `{s}`",
                spec.hub_type
            )));
        }
        selected.push(t);
    }

    let mut db = graph.to_mrd();
    let before: Vec<usize> = (0..graph.type_count()).map(|t| graph.type_len(t)).collect();
    let mut planted: Vec<Vec<u32>> = vec![Vec::new(); graph.type_count()];
    let mut truth_nodes = IndexMap::new();
    for &t in &selected {
        let mut labels = Vec::with_capacity(spec.k);
        for i in 0..spec.k {
            let label = fresh_label(&db.entity_types()[t].labels, i);
            planted[t].push(db.add_entity(t, &label));
            labels.push(label);
        }
        truth_nodes.insert(graph.node_types()[t].name().to_string(), labels);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut truth_edges = Vec::new();
    let label = |db: &MultiRelationalDatabase, t: usize, i: u32| db.entity_types()[t].labels[i as usize].clone();
    for (e, et) in graph.edge_types().iter().enumerate() {
        let (a, b) = (et.left(), et.right());
        for &i in &planted[a] {
            for &j in &planted[b] {
                let (l, r) = (label(&db, a, i), label(&db, b, j));
                db.add_instance(e, &l, &r);
                truth_edges.push(EmbeddedEdge {
                    relationship: et.name().to_string(),
                    left: l,
                    right: r,
                });
            }
        }
        // existing left nodes to new right nodes, then existing right to new left
        if before[b] > 0 {
            for u in 0..before[a] as u32 {
                let frac = et.right_of(u).len() as f64 / before[b] as f64;
                for &v in &planted[b] {
                    if rng.gen::<f64>() < frac {
                        let (l, r) = (label(&db, a, u), label(&db, b, v));
                        db.add_instance(e, &l, &r);
                    }
                }
            }
        }
        if before[a] > 0 {
            for u in 0..before[b] as u32 {
                let frac = et.left_of(u).len() as f64 / before[a] as f64;
                for &v in &planted[a] {
                    if rng.gen::<f64>() < frac {
                        let (l, r) = (label(&db, a, v), label(&db, b, u));
                        db.add_instance(e, &l, &r);
                    }
                }
            }
        }
    }
    let augmented = build_graph(&db)?;
    Ok((
        augmented,
        GroundTruth {
            nodes: truth_nodes,
            edges: truth_edges,
        },
    ))
}

/// Best rank among patterns containing every planted node.
pub fn rank_of_embedded(ranked: &[RankedPattern], planted: &[NodeRef]) -> Option<usize> {
    ranked
        .iter()
        .filter(|r| planted.iter().all(|&n| r.pattern.contains(n)))
        .map(|r| r.rank)
        .min()
}

/// Independent Bernoulli edges per declared type pair. Type `t` is named
/// `E{t}` and its nodes `v{t}_{i}` with zero-padded `i`.
pub fn random_graph(type_sizes: &[usize], topology: &[(usize, usize)], densities: &[f64], seed: u64) -> Result<KPartiteGraph> {
    if topology.len() != densities.len() {
        return Err(Error::InvalidArgument("one density per edge type is required".into()));
    }
    if let Some(d) = densities.iter().find(|d| !(0.0..=1.0).contains(*d)) {
        return Err(Error::InvalidArgument(format!("density {d} outside [0, 1]")));
    }
    let names: Vec<String> = (0..type_sizes.len()).map(|t| format!("E{t}")).collect();
    let mut db = MultiRelationalDatabase::new(names)?;
    let labels: Vec<Vec<String>> = type_sizes
        .iter()
        .enumerate()
        .map(|(t, &n)| {
            let width = n.saturating_sub(1).to_string().len();
            (0..n).map(|i| format!("v{t}_{i:0width$}")).collect()
        })
        .collect();
    for (t, ls) in labels.iter().enumerate() {
        for l in ls {
            db.add_entity(t, l);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (e, (&(a, b), &density)) in topology.iter().zip(densities).enumerate() {
        let r = db.add_relationship_type(format!("R{a}_{b}"), a, b)?;
        debug_assert_eq!(r, e);
        for la in &labels[a] {
            for lb in &labels[b] {
                if rng.gen::<f64>() < density {
                    db.add_instance(r, la, lb);
                }
            }
        }
    }
    build_graph(&db)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

/// Writes `graph` as a schema descriptor plus one CSV per relationship type.
/// Nodes with no edges are kept as rows with an empty opposite cell; node
/// types without any relationship type cannot be represented and are
/// written without nodes.
pub fn write_dataset(graph: &KPartiteGraph, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut rels = Vec::new();
    let mut isolated_home: Vec<Option<usize>> = vec![None; graph.type_count()];
    for (e, et) in graph.edge_types().iter().enumerate() {
        for t in [et.left(), et.right()] {
            isolated_home[t].get_or_insert(e);
        }
    }
    for (e, et) in graph.edge_types().iter().enumerate() {
        let (lname, rname) = (graph.node_types()[et.left()].name(), graph.node_types()[et.right()].name());
        let file = format!("{}.csv", et.name());
        let path = dir.join(&file);
        let mut w = csv::Writer::from_path(&path).map_err(|source| Error::Csv { path: path.clone(), source })?;
        let werr = |source| Error::Csv { path: path.clone(), source };
        w.write_record([lname, rname]).map_err(werr)?;
        for (i, j) in et.edges() {
            let l = &graph.node_types()[et.left()].labels()[i as usize];
            let r = &graph.node_types()[et.right()].labels()[j as usize];
            w.write_record([l.as_str(), r.as_str()]).map_err(werr)?;
        }
        for (side, t) in [(0, et.left()), (1, et.right())] {
            if isolated_home[t] != Some(e) {
                continue;
            }
            for (i, label) in graph.node_types()[t].labels().iter().enumerate() {
                if graph.total_degree(NodeRef::new(t, i as u32)) == 0 {
                    let rec = if side == 0 { [label.as_str(), ""] } else { ["", label.as_str()] };
                    w.write_record(rec).map_err(werr)?;
                }
            }
        }
        w.flush().map_err(io_err(&path))?;
        rels.push(RelationshipType {
            name: et.name().to_string(),
            left: lname.to_string(),
            right: rname.to_string(),
            file,
            left_column: lname.to_string(),
            right_column: rname.to_string(),
        });
    }
    let schema = SchemaDescriptor {
        entity_types: graph.node_types().iter().map(|t| t.name().to_string()).collect(),
        relationship_types: rels,
        attribute_tables: Vec::new(),
    };
    let path = dir.join("schema.json");
    std::fs::write(&path, schema.to_json() + "\n").map_err(io_err(&path))?;
    Ok(())
}

pub fn write_ground_truth<W: Write>(truth: &GroundTruth, mut out: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut out, truth)?;
    out.write_all(b"\n")
}
