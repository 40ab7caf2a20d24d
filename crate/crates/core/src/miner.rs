//! Depth-first enumeration of connected complete subgraphs (CCSs) and of
//! the maximal ones (MCCSs).
//!
//! Every CCS is generated through exactly one node list, its representative
//! permutation: the root is the CCS's smallest node, and every later node is
//! larger than all nodes added after its type first became reachable. Sibling
//! extensions whose common-neighbour set is contained in an earlier sibling's
//! are skipped, and a pattern is reported when the recursion bottoms out and
//! no adjacent common neighbour lies outside it.

use std::io::{BufRead, Write};

use indexmap::IndexMap;
use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CommonSet, ExtendMemo, KPartiteGraph, NodeRef};

/// A CCS as the ordered node list that generated it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub nodes: Vec<NodeRef>,
    pub edge_count: usize,
}

impl Pattern {
    pub fn new(graph: &KPartiteGraph, nodes: Vec<NodeRef>) -> Self {
        let edge_count = graph.induced_edge_count(&nodes);
        Pattern { nodes, edge_count }
    }

    /// Nodes in the total order; the canonical form used for comparisons.
    pub fn sorted_nodes(&self) -> Vec<NodeRef> {
        let mut v = self.nodes.clone();
        v.sort_unstable();
        v
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, node: NodeRef) -> bool {
        self.nodes.contains(&node)
    }

    pub fn spans_all_types(&self, graph: &KPartiteGraph) -> bool {
        (0..graph.type_count()).all(|t| self.nodes.iter().any(|n| n.ty() == t))
    }
}

/// Which reading of the search rules to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchVariant {
    /// Representative permutations with endpoint emission.
    #[default]
    Representative,
    /// The simplified pseudocode taken literally: the comparison window also
    /// contains the node that made the candidate's type reachable, there is no
    /// separate root check, and a pattern is only reported when at least one
    /// extension was accepted. Kept for study; it misses patterns.
    Pseudocode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MineOptions {
    pub maximal_only: bool,
    pub min_nodes: usize,
    pub require_all_types: bool,
    pub prune: bool,
    pub variant: SearchVariant,
}

impl Default for MineOptions {
    fn default() -> Self {
        MineOptions {
            maximal_only: true,
            min_nodes: 2,
            require_all_types: false,
            prune: true,
            variant: SearchVariant::Representative,
        }
    }
}

impl MineOptions {
    pub fn all_ccs() -> Self {
        MineOptions {
            maximal_only: false,
            prune: false,
            ..Self::default()
        }
    }
}

/// Per-branch search state: the node list plus, per node type, the 1-based
/// step at which the type first became reachable. Membership, per-type counts
/// and the comparison thresholds are kept incrementally so that deep branches
/// stay cheap to extend.
#[derive(Debug, Clone)]
pub struct SearchState {
    nodes: Vec<NodeRef>,
    reachable_since: Vec<Option<usize>>,
    members: FxHashSet<NodeRef>,
    type_count: Vec<usize>,
    type_max: Vec<Option<NodeRef>>,
    // largest node added after the type became reachable, and the same
    // including the node that made it reachable
    after: Vec<Option<NodeRef>>,
    from: Vec<Option<NodeRef>>,
    // overwritten slots, most recent last, and the log length before each push
    log: Vec<Change>,
    marks: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
enum Change {
    Reachable(usize),
    TypeMax(usize, Option<NodeRef>),
    After(usize, Option<NodeRef>),
    From(usize, Option<NodeRef>),
}

impl SearchState {
    pub fn new(graph: &KPartiteGraph) -> Self {
        let k = graph.type_count();
        SearchState {
            nodes: Vec::new(),
            reachable_since: vec![None; k],
            members: FxHashSet::default(),
            type_count: vec![0; k],
            type_max: vec![None; k],
            after: vec![None; k],
            from: vec![None; k],
            log: Vec::new(),
            marks: Vec::new(),
        }
    }

    pub fn from_nodes(graph: &KPartiteGraph, nodes: &[NodeRef]) -> Self {
        let mut s = Self::new(graph);
        for &n in nodes {
            s.push(graph, n);
        }
        s
    }

    pub fn nodes(&self) -> &[NodeRef] {
        &self.nodes
    }

    pub fn reachable_since(&self, t: usize) -> Option<usize> {
        self.reachable_since[t]
    }

    pub fn contains(&self, node: NodeRef) -> bool {
        self.members.contains(&node)
    }

    fn push(&mut self, graph: &KPartiteGraph, node: NodeRef) {
        self.marks.push(self.log.len());
        let some = Some(node);
        for t in 0..self.reachable_since.len() {
            if self.reachable_since[t].is_some() && self.after[t] < some {
                self.log.push(Change::After(t, self.after[t]));
                self.after[t] = some;
            }
        }
        for &t in graph.linked_types(node.ty()) {
            if self.reachable_since[t].is_none() {
                self.reachable_since[t] = Some(self.nodes.len() + 1);
                self.log.push(Change::Reachable(t));
            }
        }
        for t in 0..self.reachable_since.len() {
            if self.reachable_since[t].is_some() && self.from[t] < some {
                self.log.push(Change::From(t, self.from[t]));
                self.from[t] = some;
            }
        }
        let t = node.ty();
        self.log.push(Change::TypeMax(t, self.type_max[t]));
        self.type_max[t] = self.type_max[t].max(some);
        self.type_count[t] += 1;
        self.nodes.push(node);
        self.members.insert(node);
    }

    fn pop(&mut self) {
        let node = self.nodes.pop().expect("pop on an empty state");
        self.members.remove(&node);
        self.type_count[node.ty()] -= 1;
        let mark = self.marks.pop().expect("mark per node");
        for c in self.log.drain(mark..).rev() {
            match c {
                Change::Reachable(t) => self.reachable_since[t] = None,
                Change::TypeMax(t, v) => self.type_max[t] = v,
                Change::After(t, v) => self.after[t] = v,
                Change::From(t, v) => self.from[t] = v,
            }
        }
    }

    /// Position in `set`, a common-neighbour set of type `t`, of its first
    /// node outside the pattern. The pattern's nodes of type `t` all lie in
    /// such a set, so when they fill a prefix the answer is its length.
    fn first_outside(&self, t: usize, set: &[u32]) -> Option<usize> {
        let k = self.type_count[t];
        if k == 0 {
            return (!set.is_empty()).then_some(0);
        }
        if set.get(k - 1).map(|&i| NodeRef::new(t, i)) == self.type_max[t] {
            return (k < set.len()).then_some(k);
        }
        set.iter().position(|&i| !self.contains(NodeRef::new(t, i)))
    }

    /// Largest node a candidate of type `t` has to exceed, if any.
    fn threshold(&self, t: usize, variant: SearchVariant) -> Option<NodeRef> {
        self.reachable_since[t]?;
        match variant {
            SearchVariant::Representative => self.after[t].max(self.nodes.first().copied()),
            SearchVariant::Pseudocode => self.from[t],
        }
    }
}

/// Whether `candidate` may extend the state's node list: it must exceed the
/// root and every node added strictly after its type became reachable.
pub fn admissible(state: &SearchState, candidate: NodeRef) -> bool {
    admissible_with(state, candidate, SearchVariant::Representative)
}

pub fn admissible_with(state: &SearchState, candidate: NodeRef, variant: SearchVariant) -> bool {
    if state.nodes.is_empty() {
        return true;
    }
    if state.reachable_since[candidate.ty()].is_none() {
        return false;
    }
    match state.threshold(candidate.ty(), variant) {
        Some(th) => candidate > th,
        None => true,
    }
}

/// True iff the adjacent common neighbours of `nodes` are exactly `nodes`.
pub fn is_maximal(graph: &KPartiteGraph, nodes: &[NodeRef]) -> Result<bool> {
    if nodes.len() < 2 {
        return Err(Error::PatternTooSmall(nodes.len()));
    }
    let cs = CommonSet::of(graph, nodes);
    Ok(maximal_given(nodes, &cs))
}

/// Maximality from a precomputed common-neighbour set. For a singleton this
/// holds exactly when the node is isolated.
fn maximal_given(nodes: &[NodeRef], cs: &CommonSet) -> bool {
    let members_in_reachable = nodes.iter().filter(|n| cs.is_reachable(n.ty())).count();
    cs.adjacent_len() == members_in_reachable
}

/// Common-neighbour sets of the accepted extensions of one pattern, indexed
/// by the extending node so inclusion tests only visit plausible siblings.
struct Accepted {
    sets: Vec<CommonSet>,
    // per type, the accepted nodes in ascending order and their set ids
    by_type: Vec<(Vec<u32>, Vec<usize>)>,
}

impl Accepted {
    fn new(types: usize) -> Self {
        Accepted {
            sets: Vec::new(),
            by_type: vec![(Vec::new(), Vec::new()); types],
        }
    }

    fn push(&mut self, node: NodeRef, set: CommonSet) {
        let (nodes, ids) = &mut self.by_type[node.ty()];
        debug_assert!(nodes.last().is_none_or(|&l| l < node.node_index));
        nodes.push(node.node_index);
        ids.push(self.sets.len());
        self.sets.push(set);
    }

    /// Whether `next` is included in an accepted sibling's set.
    ///
    /// A sibling extended by `c` only differs from `parent` in the types
    /// linked to `c`, where it is `parent ∩ N(c)`. Containing `next` there
    /// requires `c` to neighbour every node of `next`, so one node of `next`
    /// outside the pattern with a short neighbour list yields all siblings
    /// worth testing.
    fn subsumes(&self, g: &KPartiteGraph, state: &SearchState, parent: &CommonSet, next: &CommonSet) -> bool {
        for (t, (nodes, ids)) in self.by_type.iter().enumerate() {
            if nodes.is_empty() {
                continue;
            }
            let mut pivot: Option<&[u32]> = None;
            let mut exhaustive = false;
            for &u in g.linked_types(t) {
                match &next.per_type[u] {
                    None => exhaustive = true,
                    Some(s) => {
                        if let Some(k) = state.first_outside(u, s) {
                            let x = s[k];
                            let nb = g.neighbours(NodeRef::new(u, x), t);
                            if pivot.is_none_or(|p| nb.len() < p.len()) {
                                pivot = Some(nb);
                            }
                        }
                    }
                }
            }
            let test = |k: usize| next.is_subset_of(&self.sets[ids[k]], parent, g);
            let hit = match pivot {
                Some(nb) if !exhaustive => {
                    if nb.len() < nodes.len() {
                        nb.iter().any(|i| nodes.binary_search(i).is_ok_and(test))
                    } else {
                        (0..nodes.len()).any(|k| nb.binary_search(&nodes[k]).is_ok() && test(k))
                    }
                }
                _ => (0..nodes.len()).any(test),
            };
            if hit {
                return true;
            }
        }
        false
    }
}

enum Addable<'a> {
    Set(&'a [u32]),
    /// Node indices `lo..hi` of the type.
    Range(u32, u32),
}

struct Expander<'g, F> {
    graph: &'g KPartiteGraph,
    opts: MineOptions,
    state: SearchState,
    memo: ExtendMemo,
    emit: F,
}

impl<'g, F: FnMut(Pattern)> Expander<'g, F> {
    fn report(&mut self) {
        let nodes = self.state.nodes.clone();
        if nodes.len() < self.opts.min_nodes {
            return;
        }
        let pattern = Pattern::new(self.graph, nodes);
        if self.opts.require_all_types && !pattern.spans_all_types(self.graph) {
            return;
        }
        (self.emit)(pattern);
    }

    /// Nodes of type `u` this branch may still add: the part of `C_u` above
    /// its threshold, or for a type not yet reachable everything above the root.
    fn addable<'a>(&self, common: &'a CommonSet, u: usize) -> Addable<'a> {
        let g = self.graph;
        match &common.per_type[u] {
            Some(set) => {
                let th = self.state.threshold(u, self.opts.variant).expect("reachable type has a threshold");
                let start = match th.ty().cmp(&u) {
                    std::cmp::Ordering::Equal => set.partition_point(|&i| i <= th.node_index),
                    std::cmp::Ordering::Greater => set.len(),
                    std::cmp::Ordering::Less => 0,
                };
                Addable::Set(&set[start..])
            }
            None => {
                let root = self.state.nodes[0];
                let n = g.type_len(u) as u32;
                let lo = match root.ty().cmp(&u) {
                    std::cmp::Ordering::Less => 0,
                    std::cmp::Ordering::Equal => root.node_index + 1,
                    std::cmp::Ordering::Greater => n,
                };
                Addable::Range(lo, n)
            }
        }
    }

    /// Whether `x` is adjacent to every node the branch may still add in the
    /// types linked to its own.
    fn covers(&self, common: &CommonSet, x: NodeRef) -> bool {
        let g = self.graph;
        g.linked_types(x.ty()).iter().all(|&u| {
            let nb = g.neighbours(x, u);
            match self.addable(common, u) {
                Addable::Set(s) => crate::graph::is_sorted_subset(s, nb),
                Addable::Range(lo, hi) => nb.len() - nb.partition_point(|&i| i < lo) == (hi - lo) as usize,
            }
        })
    }

    /// A permanently blocked common neighbour adjacent to everything the
    /// branch could still add is compatible with every completion, so no
    /// completion is maximal.
    fn branch_is_dead(&self, common: &CommonSet) -> bool {
        let g = self.graph;
        for v in 0..g.type_count() {
            let Some(set) = &common.per_type[v] else { continue };
            let Some(th) = self.state.threshold(v, self.opts.variant) else { continue };
            let blocked = match th.ty().cmp(&v) {
                std::cmp::Ordering::Equal => &set[..set.partition_point(|&i| i < th.node_index)],
                std::cmp::Ordering::Greater => &set[..],
                std::cmp::Ordering::Less => &set[..0],
            };
            // members of type v are all common neighbours no larger than th
            let members_blocked = self.state.type_count[v] - usize::from(th.ty() == v);
            if blocked.len() == members_blocked {
                continue;
            }
            // a covering node neighbours every addable node, so it lies in
            // the neighbour list of the first addable node of each linked type
            let mut lists: Vec<&[u32]> = vec![blocked];
            for &u in g.linked_types(v) {
                let first = match self.addable(common, u) {
                    Addable::Set(s) => s.first().copied(),
                    Addable::Range(lo, hi) => (lo < hi).then_some(lo),
                };
                if let Some(a) = first {
                    let nb = g.neighbours(NodeRef::new(u, a), v);
                    let end = blocked.last().map_or(0, |&l| nb.partition_point(|&i| i <= l));
                    lists.push(&nb[..end]);
                }
            }
            let k = (0..lists.len()).min_by_key(|&k| lists[k].len()).expect("blocked list");
            let pool = lists.swap_remove(k);
            for &i in pool {
                if !lists.iter().all(|l| l.binary_search(&i).is_ok()) {
                    continue;
                }
                let x = NodeRef::new(v, i);
                if !self.state.contains(x) && self.covers(common, x) {
                    return true;
                }
            }
        }
        false
    }

    fn expand(&mut self, common: &CommonSet) {
        let g = self.graph;
        let opts = self.opts;
        if !opts.maximal_only {
            self.report();
        } else if opts.prune && opts.variant == SearchVariant::Representative && self.branch_is_dead(common) {
            return;
        }

        let pruning = opts.prune && opts.maximal_only && opts.variant == SearchVariant::Representative;
        let mut accepted = Accepted::new(g.type_count());
        let mut recursed = false;
        for t in 0..g.type_count() {
            let Some(set) = common.per_type[t].clone() else { continue };
            let th = self.state.threshold(t, opts.variant);
            let start = match th {
                Some(th) if th.ty() == t => set.partition_point(|&i| i <= th.node_index),
                Some(th) if th.ty() > t => set.len(),
                _ => 0,
            };
            let mut end = set.len();
            // Adding a node of type t blocks every linked type that is already
            // reachable and ordered before t. If all linked types are like
            // that, the first non-member of C_t is a blocked node that covers
            // everything left, so each candidate after it starts a dead branch.
            if pruning
                && g.linked_types(t).iter().all(|&u| u < t && self.state.reachable_since[u].is_some())
            {
                if let Some(k) = self.state.first_outside(t, &set) {
                    end = end.min(k + 1);
                }
            }
            for &i in &set[start..end.max(start)] {
                let c = NodeRef::new(t, i);
                if self.state.contains(c) {
                    continue;
                }
                let next = common.extend_memo(g, c, &mut self.memo);
                if opts.prune && opts.maximal_only && accepted.subsumes(g, &self.state, common, &next) {
                    continue;
                }
                self.state.push(g, c);
                self.expand(&next);
                self.state.pop();
                recursed = true;
                accepted.push(c, next);
            }
        }

        if opts.maximal_only {
            let endpoint = match opts.variant {
                SearchVariant::Representative => !recursed,
                SearchVariant::Pseudocode => !accepted.sets.is_empty(),
            };
            if endpoint && maximal_given(&self.state.nodes, common) {
                self.report();
            }
        }
    }
}

/// Runs the search from a single root, emitting patterns in discovery order.
pub fn expand_root(graph: &KPartiteGraph, root: NodeRef, opts: &MineOptions, emit: impl FnMut(Pattern)) {
    let mut ex = Expander {
        graph,
        opts: *opts,
        state: SearchState::new(graph),
        memo: ExtendMemo::default(),
        emit,
    };
    let common = CommonSet::empty_pattern(graph).extend(graph, root);
    ex.state.push(graph, root);
    ex.expand(&common);
    ex.state.pop();
}

/// Streams every qualifying pattern once, roots taken in the total order.
pub fn mine_with(graph: &KPartiteGraph, opts: &MineOptions, mut emit: impl FnMut(Pattern)) {
    for root in graph.nodes() {
        expand_root(graph, root, opts, &mut emit);
    }
}

pub fn mine(graph: &KPartiteGraph, opts: &MineOptions) -> Vec<Pattern> {
    let mut out = Vec::new();
    mine_with(graph, opts, |p| out.push(p));
    out
}

/// Like [`mine`], with roots searched in parallel on the current rayon pool.
/// The output order is identical to the sequential one.
pub fn mine_parallel(graph: &KPartiteGraph, opts: &MineOptions) -> Vec<Pattern> {
    let roots: Vec<NodeRef> = graph.nodes().collect();
    roots
        .par_iter()
        .map(|&root| {
            let mut out = Vec::new();
            expand_root(graph, root, opts, |p| out.push(p));
            out
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Definition check: every linked pair of members is adjacent and the members
/// are connected through their own edges.
pub fn is_ccs(graph: &KPartiteGraph, nodes: &[NodeRef]) -> bool {
    if nodes.is_empty() {
        return false;
    }
    for (i, &a) in nodes.iter().enumerate() {
        for &b in &nodes[i + 1..] {
            if a == b {
                return false;
            }
            if graph.edge_type_between(a.ty(), b.ty()).is_some() && !graph.has_edge(a, b) {
                return false;
            }
        }
    }
    let mut seen = vec![false; nodes.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..nodes.len() {
            if !seen[j] && graph.has_edge(nodes[i], nodes[j]) {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// One line of a pattern stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternRecord {
    pub id: u64,
    pub nodes: IndexMap<String, Vec<String>>,
    pub edge_count: usize,
}

/// Groups a pattern's labels by node type, types in schema order and labels in canonical order.
pub fn nodes_by_type(graph: &KPartiteGraph, pattern: &Pattern) -> IndexMap<String, Vec<String>> {
    let mut map = IndexMap::new();
    for n in pattern.sorted_nodes() {
        map.entry(graph.node_types()[n.ty()].name().to_string())
            .or_insert_with(Vec::new)
            .push(graph.label(n).to_string());
    }
    map
}

impl PatternRecord {
    pub fn from_pattern(graph: &KPartiteGraph, id: u64, pattern: &Pattern) -> Self {
        PatternRecord {
            id,
            nodes: nodes_by_type(graph, pattern),
            edge_count: pattern.edge_count,
        }
    }

    /// Resolves labels against `graph`; unknown types or labels are errors.
    pub fn to_pattern(&self, graph: &KPartiteGraph) -> Result<Pattern> {
        let mut nodes = Vec::new();
        for (ty, labels) in &self.nodes {
            for label in labels {
                let n = graph.node(ty, label).ok_or_else(|| {
                    Error::InvalidPattern(format!("pattern {}: unknown node {ty}/{label}", self.id))
                })?;
                nodes.push(n);
            }
        }
        nodes.sort_unstable();
        if nodes.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidPattern(format!("pattern {}: repeated node", self.id)));
        }
        Ok(Pattern::new(graph, nodes))
    }
}

pub fn write_patterns<W: Write>(graph: &KPartiteGraph, patterns: &[Pattern], mut out: W) -> std::io::Result<()> {
    for (id, p) in patterns.iter().enumerate() {
        serde_json::to_writer(&mut out, &PatternRecord::from_pattern(graph, id as u64, p))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_patterns<R: BufRead>(graph: &KPartiteGraph, input: R) -> Result<Vec<Pattern>> {
    let mut out = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<pattern stream>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PatternRecord = serde_json::from_str(&line)
            .map_err(|e| Error::InvalidPattern(format!("line {}: {e}", lineno + 1)))?;
        out.push(rec.to_pattern(graph)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::graph::tests::{fixture_m, names};
    use crate::schema::MultiRelationalDatabase;

    fn n(g: &KPartiteGraph, ty: &str, label: &str) -> NodeRef {
        g.node(ty, label).unwrap()
    }

    fn sets(g: &KPartiteGraph, ps: &[Pattern]) -> Vec<Vec<String>> {
        let mut v: Vec<Vec<String>> = ps.iter().map(|p| names(g, &p.sorted_nodes())).collect();
        v.sort();
        v
    }

    fn fixture_b() -> KPartiteGraph {
        let mut db = MultiRelationalDatabase::new(["transaction", "item"]).unwrap();
        let r = db.add_relationship_type("bought", 0, 1).unwrap();
        for (t, i) in [("T1", "I1"), ("T1", "I2"), ("T2", "I1"), ("T2", "I2"), ("T3", "I3"), ("T4", "I1")] {
            db.add_instance(r, t, i);
        }
        build_graph(&db).unwrap()
    }

    #[test]
    fn admissibility_examples() {
        let g = fixture_m();
        let (t1, t3) = (n(&g, "title", "T1"), n(&g, "title", "T3"));
        let (drama, history) = (n(&g, "genre", "Drama"), n(&g, "genre", "History"));

        let s = SearchState::from_nodes(&g, &[t1, drama]);
        assert_eq!(s.reachable_since(0), Some(2));
        assert!(admissible(&s, t3));

        let s = SearchState::from_nodes(&g, &[t1, drama, history]);
        assert!(!admissible(&s, t3));

        let s = SearchState::from_nodes(&g, &[drama]);
        assert!(!admissible(&s, t1));
    }

    #[test]
    fn literal_window_blocks_the_fixture_pattern() {
        let g = fixture_m();
        let (t1, t3) = (n(&g, "title", "T1"), n(&g, "title", "T3"));
        let drama = n(&g, "genre", "Drama");
        let s = SearchState::from_nodes(&g, &[t1, drama]);
        assert!(!admissible_with(&s, t3, SearchVariant::Pseudocode));
    }

    #[test]
    fn expand_from_t1_and_drama() {
        let g = fixture_m();
        let mut got = Vec::new();
        expand_root(&g, n(&g, "title", "T1"), &MineOptions::default(), |p| got.push(p));
        assert_eq!(got.len(), 1);
        assert_eq!(names(&g, &got[0].nodes), ["T1", "Drama", "T3", "History", "2010"]);
        assert_eq!(got[0].edge_count, 6);

        let mut got = Vec::new();
        expand_root(&g, n(&g, "genre", "Drama"), &MineOptions::default(), |p| got.push(p));
        assert!(got.is_empty());
    }

    #[test]
    fn fixture_m_mccs() {
        let g = fixture_m();
        let ps = mine(&g, &MineOptions::default());
        assert_eq!(
            sets(&g, &ps),
            vec![
                vec!["T1", "T3", "Drama", "History", "2010"],
                vec!["T2", "Comedy", "2009"],
            ]
        );
        let unpruned = mine(&g, &MineOptions { prune: false, ..Default::default() });
        assert_eq!(sets(&g, &ps), sets(&g, &unpruned));
        assert_eq!(mine_parallel(&g, &MineOptions::default()), ps);
    }

    #[test]
    fn fixture_b_bicliques() {
        let g = fixture_b();
        let ps = mine(&g, &MineOptions::default());
        assert_eq!(
            sets(&g, &ps),
            vec![vec!["T1", "T2", "I1", "I2"], vec!["T1", "T2", "T4", "I1"], vec!["T3", "I3"]]
        );
    }

    #[test]
    fn edgeless_graph_yields_nothing_unless_singletons_requested() {
        let mut db = MultiRelationalDatabase::new(["a", "b"]).unwrap();
        db.add_relationship_type("r", 0, 1).unwrap();
        db.add_entity(0, "x");
        db.add_entity(1, "y");
        let g = build_graph(&db).unwrap();
        assert!(mine(&g, &MineOptions::default()).is_empty());
        let singles = mine(&g, &MineOptions { min_nodes: 1, ..Default::default() });
        assert_eq!(singles.len(), 2);
    }

    #[test]
    fn maximality_examples() {
        let g = fixture_m();
        let big: Vec<NodeRef> = [("title", "T1"), ("title", "T3"), ("genre", "Drama"), ("genre", "History"), ("year", "2010")]
            .iter()
            .map(|&(t, l)| n(&g, t, l))
            .collect();
        assert!(is_maximal(&g, &big).unwrap());
        assert!(!is_maximal(&g, &[n(&g, "title", "T1"), n(&g, "genre", "Drama")]).unwrap());
        assert!(!is_maximal(&g, &[n(&g, "title", "T2"), n(&g, "genre", "Comedy")]).unwrap());
        assert!(matches!(is_maximal(&g, &big[..1]), Err(Error::PatternTooSmall(1))));
    }

    #[test]
    fn all_ccs_mode_emits_prefixes() {
        let g = fixture_m();
        let ps = mine(&g, &MineOptions::all_ccs());
        assert!(ps.iter().all(|p| is_ccs(&g, &p.nodes) && p.len() >= 2));
        let mut keys: Vec<_> = ps.iter().map(Pattern::sorted_nodes).collect();
        keys.sort();
        let before = keys.len();
        keys.dedup();
        assert_eq!(before, keys.len());
    }

    #[test]
    fn require_all_types_filters() {
        let mut db = MultiRelationalDatabase::new(["transaction", "item", "store"]).unwrap();
        let r = db.add_relationship_type("bought", 0, 1).unwrap();
        db.add_relationship_type("sold_at", 1, 2).unwrap();
        db.add_instance(r, "T1", "I1");
        db.add_entity(2, "S1");
        let g = build_graph(&db).unwrap();
        assert_eq!(mine(&g, &MineOptions::default()).len(), 1);
        let opts = MineOptions { require_all_types: true, ..Default::default() };
        assert!(mine(&g, &opts).is_empty());
    }

    #[test]
    fn pattern_records_round_trip() {
        let g = fixture_m();
        let ps = mine(&g, &MineOptions::default());
        let mut buf = Vec::new();
        write_patterns(&g, &ps, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(r#"{"id":0,"nodes":{"title":["T1","T3"],"genre":["Drama","History"],"year":["2010"]},"edge_count":6}"#));
        let back = read_patterns(&g, &buf[..]).unwrap();
        for (a, b) in ps.iter().zip(&back) {
            assert_eq!(a.sorted_nodes(), b.nodes);
            assert_eq!(a.edge_count, b.edge_count);
        }
        assert!(read_patterns(&g, &b"{\"id\": 0}\n"[..]).is_err());
        assert!(read_patterns(&g, &br#"{"id":0,"nodes":{"title":["T9"]},"edge_count":0}"#[..]).is_err());
    }
}
