//! The K-partite graph representation of a multi-relational database.
//!
//! Nodes are addressed by [`NodeRef`]: the entity type's position in the
//! schema plus the node's rank in the lexicographic (byte-wise) order of its
//! type's labels. Deriving `Ord` on that pair gives the total node order the
//! miner's duplicate avoidance relies on.

use std::collections::HashMap;
use std::io::Write;
use std::rc::Rc;

use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::schema::MultiRelationalDatabase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeRef {
    pub type_index: u32,
    pub node_index: u32,
}

impl NodeRef {
    pub fn new(type_index: usize, node_index: u32) -> Self {
        NodeRef {
            type_index: type_index as u32,
            node_index,
        }
    }

    #[inline]
    pub fn ty(self) -> usize {
        self.type_index as usize
    }
}

#[derive(Debug, Clone)]
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Csr {
    fn build(rows: usize, pairs: impl Iterator<Item = (u32, u32)>) -> Self {
        let mut lists = vec![Vec::new(); rows];
        for (a, b) in pairs {
            lists[a as usize].push(b);
        }
        let mut offsets = Vec::with_capacity(rows + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for mut list in lists {
            list.sort_unstable();
            list.dedup();
            targets.extend_from_slice(&list);
            offsets.push(targets.len());
        }
        Csr { offsets, targets }
    }

    #[inline]
    fn row(&self, i: u32) -> &[u32] {
        let i = i as usize;
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }
}

#[derive(Debug, Clone)]
pub struct NodeType {
    name: String,
    labels: Vec<String>,
    index: HashMap<String, u32>,
}

impl NodeType {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// One declared relationship type, stored as a bipartite adjacency in both directions.
#[derive(Debug, Clone)]
pub struct EdgeType {
    name: String,
    left: usize,
    right: usize,
    forward: Csr,
    backward: Csr,
}

impl EdgeType {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn left(&self) -> usize {
        self.left
    }

    pub fn right(&self) -> usize {
        self.right
    }

    pub fn edge_count(&self) -> usize {
        self.forward.targets.len()
    }

    pub fn left_len(&self) -> usize {
        self.forward.offsets.len() - 1
    }

    pub fn right_len(&self) -> usize {
        self.backward.offsets.len() - 1
    }

    /// Right-side neighbours of left node `i`.
    pub fn right_of(&self, i: u32) -> &[u32] {
        self.forward.row(i)
    }

    /// Left-side neighbours of right node `j`.
    pub fn left_of(&self, j: u32) -> &[u32] {
        self.backward.row(j)
    }

    pub fn left_degrees(&self) -> Vec<usize> {
        self.forward.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn right_degrees(&self) -> Vec<usize> {
        self.backward.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Edges as (left, right) pairs in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.left_len() as u32).flat_map(move |i| self.right_of(i).iter().map(move |&j| (i, j)))
    }

    pub fn contains(&self, i: u32, j: u32) -> bool {
        self.right_of(i).binary_search(&j).is_ok()
    }
}

/// Immutable K-partite graph: typed node partitions plus per-type-pair adjacency.
#[derive(Debug, Clone)]
pub struct KPartiteGraph {
    types: Vec<NodeType>,
    edge_types: Vec<EdgeType>,
    /// `link[a * k + b]` is the edge type joining node types `a` and `b`.
    link: Vec<Option<usize>>,
    linked: Vec<Vec<usize>>,
}

/// Builds the graph of `mrd`: one node per entity, one edge per relationship instance.
pub fn build_graph(mrd: &MultiRelationalDatabase) -> Result<KPartiteGraph> {
    mrd.validate()?;
    let mut types = Vec::new();
    // first-appearance index -> canonical index, per type
    let mut remap: Vec<Vec<u32>> = Vec::new();
    for domain in mrd.entity_types() {
        let mut order: Vec<u32> = (0..domain.labels.len() as u32).collect();
        order.sort_by(|&a, &b| domain.labels[a as usize].as_bytes().cmp(domain.labels[b as usize].as_bytes()));
        let mut inverse = vec![0u32; order.len()];
        for (canon, &orig) in order.iter().enumerate() {
            inverse[orig as usize] = canon as u32;
        }
        let labels: Vec<String> = order.iter().map(|&i| domain.labels[i as usize].clone()).collect();
        let index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i as u32)).collect();
        types.push(NodeType {
            name: domain.name.clone(),
            labels,
            index,
        });
        remap.push(inverse);
    }
    let edges = mrd
        .relationships()
        .iter()
        .map(|rel| {
            let pairs: Vec<(u32, u32)> = rel
                .instances
                .iter()
                .map(|&(l, r)| (remap[rel.left][l as usize], remap[rel.right][r as usize]))
                .collect();
            (rel.name.clone(), rel.left, rel.right, pairs)
        })
        .collect();
    KPartiteGraph::from_parts(types, edges)
}

impl KPartiteGraph {
    fn from_parts(types: Vec<NodeType>, edges: Vec<(String, usize, usize, Vec<(u32, u32)>)>) -> Result<Self> {
        let k = types.len();
        let mut link = vec![None; k * k];
        let mut linked = vec![Vec::new(); k];
        let mut edge_types = Vec::with_capacity(edges.len());
        for (name, left, right, pairs) in edges {
            if left == right || left >= k || right >= k {
                return Err(Error::InvalidDatabase(format!(
                    "edge type `{name}` must join two distinct known node types"
                )));
            }
            if link[left * k + right].is_some() {
                return Err(Error::InvalidDatabase(format!(
                    "edge type `{name}` duplicates a node type pair"
                )));
            }
            let (nl, nr) = (types[left].len(), types[right].len());
            if pairs.iter().any(|&(a, b)| a as usize >= nl || b as usize >= nr) {
                return Err(Error::InvalidDatabase(format!(
                    "edge type `{name}` references a missing node"
                )));
            }
            let id = edge_types.len();
            link[left * k + right] = Some(id);
            link[right * k + left] = Some(id);
            linked[left].push(right);
            linked[right].push(left);
            edge_types.push(EdgeType {
                name,
                left,
                right,
                forward: Csr::build(nl, pairs.iter().copied()),
                backward: Csr::build(nr, pairs.iter().map(|&(a, b)| (b, a))),
            });
        }
        for l in &mut linked {
            l.sort_unstable();
        }
        Ok(KPartiteGraph {
            types,
            edge_types,
            link,
            linked,
        })
    }

    pub fn type_count(&self) -> usize {
        self.types.len()
    }

    pub fn node_types(&self) -> &[NodeType] {
        &self.types
    }

    pub fn type_len(&self, t: usize) -> usize {
        self.types[t].len()
    }

    pub fn type_index(&self, name: &str) -> Option<usize> {
        self.types.iter().position(|t| t.name == name)
    }

    pub fn edge_types(&self) -> &[EdgeType] {
        &self.edge_types
    }

    pub fn edge_type_index(&self, name: &str) -> Option<usize> {
        self.edge_types.iter().position(|e| e.name == name)
    }

    pub fn node_count(&self) -> usize {
        self.types.iter().map(NodeType::len).sum()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_types.iter().map(EdgeType::edge_count).sum()
    }

    pub fn label(&self, node: NodeRef) -> &str {
        &self.types[node.ty()].labels[node.node_index as usize]
    }

    pub fn node(&self, type_name: &str, label: &str) -> Option<NodeRef> {
        let t = self.type_index(type_name)?;
        self.types[t].index.get(label).map(|&i| NodeRef::new(t, i))
    }

    /// All nodes in the total order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeRef> + '_ {
        self.types
            .iter()
            .enumerate()
            .flat_map(|(t, nt)| (0..nt.len() as u32).map(move |i| NodeRef::new(t, i)))
    }

    #[inline]
    pub fn edge_type_between(&self, a: usize, b: usize) -> Option<usize> {
        self.link[a * self.types.len() + b]
    }

    /// Node types sharing an edge type with `t`, ascending.
    #[inline]
    pub fn linked_types(&self, t: usize) -> &[usize] {
        &self.linked[t]
    }

    /// Sorted node indices of type `t` adjacent to `node`; empty if the types are not linked.
    #[inline]
    pub fn neighbours(&self, node: NodeRef, t: usize) -> &[u32] {
        match self.edge_type_between(node.ty(), t) {
            None => &[],
            Some(e) => {
                let et = &self.edge_types[e];
                if et.left == node.ty() {
                    et.right_of(node.node_index)
                } else {
                    et.left_of(node.node_index)
                }
            }
        }
    }

    pub fn degree(&self, node: NodeRef, t: usize) -> usize {
        self.neighbours(node, t).len()
    }

    pub fn total_degree(&self, node: NodeRef) -> usize {
        self.linked[node.ty()].iter().map(|&t| self.degree(node, t)).sum()
    }

    pub fn has_edge(&self, a: NodeRef, b: NodeRef) -> bool {
        self.neighbours(a, b.ty()).binary_search(&b.node_index).is_ok()
    }

    /// Number of data edges among `nodes`.
    pub fn induced_edge_count(&self, nodes: &[NodeRef]) -> usize {
        let mut by_type: Vec<Vec<u32>> = vec![Vec::new(); self.types.len()];
        for n in nodes {
            by_type[n.ty()].push(n.node_index);
        }
        for v in &mut by_type {
            v.sort_unstable();
            v.dedup();
        }
        let mut count = 0;
        for e in &self.edge_types {
            let right = &by_type[e.right()];
            if right.is_empty() {
                continue;
            }
            for &i in &by_type[e.left()] {
                let nb = e.right_of(i);
                let (small, large) = if nb.len() < right.len() { (nb, &right[..]) } else { (&right[..], nb) };
                count += small.iter().filter(|x| large.binary_search(x).is_ok()).count();
            }
        }
        count
    }

    /// Every node that, for each member of `nodes` whose type is linked to its
    /// own, is adjacent to that member. Returned in the total order.
    pub fn common_neighbours(&self, nodes: &[NodeRef]) -> Vec<NodeRef> {
        let set = CommonSet::of(self, nodes);
        set.iter_all(self).collect()
    }

    /// The common neighbours with at least one edge into `nodes`.
    pub fn adjacent_common_neighbours(&self, nodes: &[NodeRef]) -> Vec<NodeRef> {
        let set = CommonSet::of(self, nodes);
        set.iter_adjacent().collect()
    }

    /// The database this graph represents, labels in canonical order.
    pub fn to_mrd(&self) -> MultiRelationalDatabase {
        let mut db = MultiRelationalDatabase::new(self.types.iter().map(|t| t.name.clone()))
            .expect("graph type names are unique");
        for (t, nt) in self.types.iter().enumerate() {
            for label in &nt.labels {
                db.add_entity(t, label);
            }
        }
        for et in &self.edge_types {
            let r = db
                .add_relationship_type(et.name.clone(), et.left, et.right)
                .expect("graph edge types are valid");
            for (i, j) in et.edges() {
                db.add_instance(r, &self.types[et.left].labels[i as usize], &self.types[et.right].labels[j as usize]);
            }
        }
        db
    }

    /// Writes one JSON record per edge: `{"type", "left", "right"}`.
    pub fn write_edge_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct EdgeRecord<'a> {
            #[serde(rename = "type")]
            ty: &'a str,
            left: &'a str,
            right: &'a str,
        }
        for et in &self.edge_types {
            for (i, j) in et.edges() {
                let rec = EdgeRecord {
                    ty: &et.name,
                    left: &self.types[et.left].labels[i as usize],
                    right: &self.types[et.right].labels[j as usize],
                };
                serde_json::to_writer(&mut out, &rec)?;
                out.write_all(b"\n")?;
            }
        }
        Ok(())
    }
}

/// Sorted intersection of two ascending slices; gallops when sizes are skewed.
pub(crate) fn intersect(a: &[u32], b: &[u32]) -> Vec<u32> {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut out = Vec::with_capacity(small.len());
    if small.is_empty() {
        return out;
    }
    if large.len() / small.len() >= 16 {
        let mut base = 0;
        for &x in small {
            match large[base..].binary_search(&x) {
                Ok(p) => {
                    out.push(x);
                    base += p + 1;
                }
                Err(p) => base += p,
            }
            if base >= large.len() {
                break;
            }
        }
    } else {
        let (mut i, mut j) = (0, 0);
        while i < small.len() && j < large.len() {
            match small[i].cmp(&large[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(small[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    out
}

/// `a ⊆ b` for ascending slices.
pub(crate) fn is_sorted_subset(a: &[u32], b: &[u32]) -> bool {
    if a.len() > b.len() {
        return false;
    }
    if b.len() / a.len().max(1) >= 4 {
        let mut base = 0;
        for &x in a {
            match b[base..].binary_search(&x) {
                Ok(p) => base += p + 1,
                Err(_) => return false,
            }
        }
        return true;
    }
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j == b.len() || b[j] != x {
            return false;
        }
        j += 1;
    }
    true
}

/// Intersections with at least this many nodes on both sides are memoized.
const MEMO_AT: usize = 64;

/// Large intersections computed during one search, keyed by the set that was
/// narrowed and the node narrowing it. The key set is held so its address
/// stays unique.
#[derive(Debug, Default)]
pub(crate) struct ExtendMemo {
    map: FxHashMap<(*const [u32], NodeRef), (Rc<[u32]>, Rc<[u32]>)>,
}

fn narrow(cur: &Rc<[u32]>, nb: &[u32]) -> Rc<[u32]> {
    let next = intersect(cur, nb);
    if next.len() == cur.len() {
        cur.clone()
    } else {
        next.into()
    }
}

/// Common-neighbour set of a node list, kept per node type.
///
/// A type no member is linked to is unconstrained (`None`: every node of the
/// type qualifies). A constrained type is exactly a reachable type, and its
/// members are exactly the adjacent common neighbours of that type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct CommonSet {
    pub(crate) per_type: Vec<Option<Rc<[u32]>>>,
}

impl CommonSet {
    pub(crate) fn empty_pattern(graph: &KPartiteGraph) -> Self {
        CommonSet {
            per_type: vec![None; graph.type_count()],
        }
    }

    pub(crate) fn of(graph: &KPartiteGraph, nodes: &[NodeRef]) -> Self {
        nodes
            .iter()
            .fold(Self::empty_pattern(graph), |acc, &n| acc.extend(graph, n))
    }

    /// Common-neighbour set after adding `node`. Unchanged types share storage
    /// with `self`.
    pub(crate) fn extend(&self, graph: &KPartiteGraph, node: NodeRef) -> Self {
        self.extend_memo(graph, node, &mut ExtendMemo::default())
    }

    /// As `extend`, reusing large intersections already computed in `memo`.
    pub(crate) fn extend_memo(&self, graph: &KPartiteGraph, node: NodeRef, memo: &mut ExtendMemo) -> Self {
        let mut per_type = self.per_type.clone();
        for &t in graph.linked_types(node.ty()) {
            let nb = graph.neighbours(node, t);
            per_type[t] = Some(match &self.per_type[t] {
                None => nb.into(),
                Some(cur) if cur.len().min(nb.len()) >= MEMO_AT => {
                    let key = (Rc::as_ptr(cur), node);
                    let (_, next) = memo
                        .map
                        .entry(key)
                        .or_insert_with(|| (cur.clone(), narrow(cur, nb)));
                    next.clone()
                }
                Some(cur) => narrow(cur, nb),
            });
        }
        CommonSet { per_type }
    }

    #[inline]
    pub(crate) fn is_reachable(&self, t: usize) -> bool {
        self.per_type[t].is_some()
    }

    /// `self ⊆ other`, where both were derived from `parent` by one extension.
    pub(crate) fn is_subset_of(&self, other: &Self, parent: &Self, graph: &KPartiteGraph) -> bool {
        for t in 0..self.per_type.len() {
            let ok = match (&self.per_type[t], &other.per_type[t]) {
                (_, None) => true,
                (None, Some(b)) => b.len() == graph.type_len(t),
                (Some(a), Some(b)) => {
                    if a.len() > b.len() {
                        false
                    } else if Rc::ptr_eq(a, b) {
                        true
                    } else if matches!(&parent.per_type[t], Some(p) if Rc::ptr_eq(p, b)) {
                        // a is an intersection of the parent's set
                        true
                    } else {
                        is_sorted_subset(a, b)
                    }
                }
            };
            if !ok {
                return false;
            }
        }
        true
    }

    pub(crate) fn iter_all<'a>(&'a self, graph: &'a KPartiteGraph) -> impl Iterator<Item = NodeRef> + 'a {
        self.per_type.iter().enumerate().flat_map(move |(t, s)| {
            let it: Box<dyn Iterator<Item = NodeRef>> = match s {
                None => Box::new((0..graph.type_len(t) as u32).map(move |i| NodeRef::new(t, i))),
                Some(s) => Box::new(s.iter().map(move |&i| NodeRef::new(t, i))),
            };
            it
        })
    }

    pub(crate) fn iter_adjacent(&self) -> impl Iterator<Item = NodeRef> + '_ {
        self.per_type.iter().enumerate().flat_map(|(t, s)| {
            s.iter()
                .flat_map(move |s| s.iter().map(move |&i| NodeRef::new(t, i)))
        })
    }

    pub(crate) fn adjacent_len(&self) -> usize {
        self.per_type.iter().flatten().map(|s| s.len()).sum()
    }
}
