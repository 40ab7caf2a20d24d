//! Maximum-entropy background model of the node degrees.
//!
//! Each relationship type is modelled on its own as a matrix of independent
//! Bernoulli cells with `P(i, j) = 1 / (1 + exp(λ_i + μ_j))`, the multipliers
//! chosen so every node's expected degree equals its observed degree.
//!
//! Margins that pin cells to 0 or 1 (empty or full rows and columns, and more
//! generally any tight Gale-Ryser face) would send multipliers to infinity.
//! Those cells are split off first: the matrix is recursively partitioned
//! into forced all-ones / all-zeros blocks and residual blocks whose margins
//! lie strictly inside the feasible region, and only those are fitted, by
//! coordinate ascent on the dual with one multiplier per distinct degree.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::KPartiteGraph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Largest allowed |expected degree − observed degree|.
    pub tolerance: f64,
    /// Maximum number of full sweeps per residual block.
    pub max_iterations: usize,
    /// Starting value of every multiplier.
    pub initial_multiplier: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tolerance: 1e-8,
            max_iterations: 10_000,
            initial_multiplier: 0.0,
        }
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BlockKind {
    /// Rows entering `a` and columns entering `b` meet in an all-ones block;
    /// rows entering `b` and columns entering `a` meet in an all-zeros block.
    Split { a: u32, b: u32 },
    Leaf { fitted: bool },
}

#[derive(Debug, Clone, Copy)]
struct Block {
    parent: Option<u32>,
    depth: u32,
    kind: BlockKind,
}

/// Fitted model of one relationship type.
#[derive(Debug, Clone)]
pub struct RelationshipModel {
    name: String,
    left_type: usize,
    right_type: usize,
    lambda: Vec<Option<f64>>,
    mu: Vec<Option<f64>>,
    blocks: Vec<Block>,
    row_leaf: Vec<u32>,
    col_leaf: Vec<u32>,
    residual: f64,
    iterations: usize,
}

/// Solves `Σ_h w_h σ(−x − a_h) = target` for `x`; the left side is decreasing in `x`.
fn solve_coordinate(x0: f64, offsets: &[f64], weights: &[f64], target: f64) -> f64 {
    let total: f64 = weights.iter().sum();
    let q = target / total;
    let base = (q / (1.0 - q)).ln();
    let amax = offsets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let amin = offsets.iter().copied().fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (-base - amax, -base - amin);
    if hi - lo <= 0.0 {
        return lo;
    }
    let mut x = x0.clamp(lo, hi);
    for _ in 0..200 {
        let mut f = -target;
        let mut df = 0.0;
        for (&a, &w) in offsets.iter().zip(weights) {
            let p = sigmoid(-x - a);
            f += w * p;
            df -= w * p * (1.0 - p);
        }
        if f == 0.0 {
            return x;
        }
        if f > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
            return x;
        }
        let newton = x - f / df;
        x = if df < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    x
}

struct Grouped {
    /// distinct degrees, ascending
    values: Vec<usize>,
    counts: Vec<f64>,
    /// group of each member
    member_group: Vec<usize>,
}

fn group_by_degree(degrees: &[usize]) -> Grouped {
    let mut map: BTreeMap<usize, usize> = BTreeMap::new();
    for &d in degrees {
        *map.entry(d).or_default() += 1;
    }
    let values: Vec<usize> = map.keys().copied().collect();
    let counts = map.values().map(|&c| c as f64).collect();
    let member_group = degrees
        .iter()
        .map(|d| values.binary_search(d).expect("degree present"))
        .collect();
    Grouped {
        values,
        counts,
        member_group,
    }
}

struct LeafFit {
    row_mult: Vec<f64>,
    col_mult: Vec<f64>,
    residual: f64,
    iterations: usize,
}

/// Coordinate ascent over grouped multipliers for margins strictly inside the feasible region.
fn fit_interior(row_deg: &[usize], col_deg: &[usize], opts: &FitOptions) -> std::result::Result<LeafFit, (usize, f64)> {
    let rows = group_by_degree(row_deg);
    let cols = group_by_degree(col_deg);
    let mut lam = vec![opts.initial_multiplier; rows.values.len()];
    let mut mu = vec![opts.initial_multiplier; cols.values.len()];

    let residual = |lam: &[f64], mu: &[f64]| -> f64 {
        let mut worst: f64 = 0.0;
        for (g, &d) in rows.values.iter().enumerate() {
            let e: f64 = mu.iter().zip(&cols.counts).map(|(&m, &w)| w * sigmoid(-lam[g] - m)).sum();
            worst = worst.max((e - d as f64).abs());
        }
        for (h, &d) in cols.values.iter().enumerate() {
            let e: f64 = lam.iter().zip(&rows.counts).map(|(&l, &w)| w * sigmoid(-l - mu[h])).sum();
            worst = worst.max((e - d as f64).abs());
        }
        worst
    };

    let mut res = residual(&lam, &mu);
    let mut sweeps = 0;
    while res > opts.tolerance {
        if sweeps == opts.max_iterations {
            return Err((sweeps, res));
        }
        for g in 0..lam.len() {
            lam[g] = solve_coordinate(lam[g], &mu, &cols.counts, rows.values[g] as f64);
        }
        for h in 0..mu.len() {
            mu[h] = solve_coordinate(mu[h], &lam, &rows.counts, cols.values[h] as f64);
        }
        sweeps += 1;
        res = residual(&lam, &mu);
    }
    Ok(LeafFit {
        row_mult: rows.member_group.iter().map(|&g| lam[g]).collect(),
        col_mult: cols.member_group.iter().map(|&h| mu[h]).collect(),
        residual: res,
        iterations: sweeps,
    })
}

struct Task {
    id: u32,
    rows: Vec<(u32, usize)>,
    cols: Vec<(u32, usize)>,
}

impl RelationshipModel {
    /// Fits one relationship type given its left and right degree sequences.
    pub fn fit_degrees(
        name: &str,
        left_type: usize,
        right_type: usize,
        left_degrees: &[usize],
        right_degrees: &[usize],
        opts: &FitOptions,
    ) -> Result<Self> {
        if !(opts.tolerance > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        let (m, n) = (left_degrees.len(), right_degrees.len());
        if left_degrees.iter().sum::<usize>() != right_degrees.iter().sum::<usize>()
            || left_degrees.iter().any(|&d| d > n)
            || right_degrees.iter().any(|&d| d > m)
        {
            return Err(Error::InvalidArgument(format!(
                "relationship `{name}`: inconsistent degree sequences"
            )));
        }
        let mut model = RelationshipModel {
            name: name.to_string(),
            left_type,
            right_type,
            lambda: vec![None; m],
            mu: vec![None; n],
            blocks: vec![Block {
                parent: None,
                depth: 0,
                kind: BlockKind::Leaf { fitted: false },
            }],
            row_leaf: vec![0; m],
            col_leaf: vec![0; n],
            residual: 0.0,
            iterations: 0,
        };
        let mut stack = vec![Task {
            id: 0,
            rows: left_degrees.iter().enumerate().map(|(i, &d)| (i as u32, d)).collect(),
            cols: right_degrees.iter().enumerate().map(|(j, &d)| (j as u32, d)).collect(),
        }];
        while let Some(task) = stack.pop() {
            model.process(task, opts, &mut stack)?;
        }
        Ok(model)
    }

    fn new_block(&mut self, parent: u32) -> u32 {
        let depth = self.blocks[parent as usize].depth + 1;
        self.blocks.push(Block {
            parent: Some(parent),
            depth,
            kind: BlockKind::Leaf { fitted: false },
        });
        (self.blocks.len() - 1) as u32
    }

    fn process(&mut self, mut task: Task, opts: &FitOptions, stack: &mut Vec<Task>) -> Result<()> {
        for &(i, _) in &task.rows {
            self.row_leaf[i as usize] = task.id;
        }
        for &(j, _) in &task.cols {
            self.col_leaf[j as usize] = task.id;
        }
        if task.rows.is_empty() || task.cols.is_empty() {
            return Ok(());
        }
        let m = task.rows.len();
        task.rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

        // Gale-Ryser: Σ_{top k rows} r ≤ Σ_j min(c_j, k); equality forces a block structure.
        let mut at_least = vec![0usize; m + 2];
        for &(_, c) in &task.cols {
            at_least[c.min(m + 1)] += 1;
        }
        for k in (0..=m).rev() {
            at_least[k] += at_least[k + 1];
        }
        let has_zero_col = task.cols.iter().any(|&(_, c)| c == 0);
        let mut split = None;
        if has_zero_col {
            split = Some(0);
        } else {
            let (mut lhs, mut rhs) = (0usize, 0usize);
            for k in 1..=m {
                lhs += task.rows[k - 1].1;
                rhs += at_least[k];
                if lhs == rhs && (k < m || at_least[m] > 0) {
                    split = Some(k);
                    break;
                }
            }
        }

        let Some(k) = split else {
            let row_deg: Vec<usize> = task.rows.iter().map(|r| r.1).collect();
            let col_deg: Vec<usize> = task.cols.iter().map(|c| c.1).collect();
            let fit = fit_interior(&row_deg, &col_deg, opts).map_err(|(iterations, residual)| Error::NoConvergence {
                relationship: self.name.clone(),
                iterations,
                residual,
            })?;
            for (&(i, _), &l) in task.rows.iter().zip(&fit.row_mult) {
                self.lambda[i as usize] = Some(l);
            }
            for (&(j, _), &u) in task.cols.iter().zip(&fit.col_mult) {
                self.mu[j as usize] = Some(u);
            }
            self.residual = self.residual.max(fit.residual);
            self.iterations = self.iterations.max(fit.iterations);
            self.blocks[task.id as usize].kind = BlockKind::Leaf { fitted: true };
            return Ok(());
        };

        let in_j = |c: usize| if k == 0 { c > 0 } else { c >= k };
        let j_size = task.cols.iter().filter(|&&(_, c)| in_j(c)).count();
        let a = self.new_block(task.id);
        let b = self.new_block(task.id);
        self.blocks[task.id as usize].kind = BlockKind::Split { a, b };

        let (top, bottom) = task.rows.split_at(k);
        let a_rows = top.iter().map(|&(i, r)| (i, r - j_size)).collect();
        let b_rows = bottom.to_vec();
        let mut a_cols = Vec::new();
        let mut b_cols = Vec::new();
        for &(j, c) in &task.cols {
            if in_j(c) {
                b_cols.push((j, c - k));
            } else {
                a_cols.push((j, c));
            }
        }
        stack.push(Task { id: a, rows: a_rows, cols: a_cols });
        stack.push(Task { id: b, rows: b_rows, cols: b_cols });
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn left_type(&self) -> usize {
        self.left_type
    }

    pub fn right_type(&self) -> usize {
        self.right_type
    }

    pub fn left_len(&self) -> usize {
        self.lambda.len()
    }

    pub fn right_len(&self) -> usize {
        self.mu.len()
    }

    pub fn lambda(&self) -> &[Option<f64>] {
        &self.lambda
    }

    pub fn mu(&self) -> &[Option<f64>] {
        &self.mu
    }

    /// Worst margin residual over the fitted blocks.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Forced value of cell (i, j), or `None` when it is a fitted Bernoulli cell.
    pub fn forced(&self, i: u32, j: u32) -> Option<f64> {
        let (mut x, mut y) = (self.row_leaf[i as usize], self.col_leaf[j as usize]);
        if x == y {
            return match self.blocks[x as usize].kind {
                BlockKind::Leaf { fitted: true } => None,
                _ => unreachable!("row and column share an unfitted block"),
            };
        }
        // climb to the children of the lowest common ancestor
        loop {
            let (dx, dy) = (self.blocks[x as usize].depth, self.blocks[y as usize].depth);
            let (px, py) = (self.blocks[x as usize].parent, self.blocks[y as usize].parent);
            if dx > dy {
                x = px.expect("non-root");
            } else if dy > dx {
                y = py.expect("non-root");
            } else if px == py {
                let parent = px.expect("distinct blocks share an ancestor");
                let BlockKind::Split { a, .. } = self.blocks[parent as usize].kind else {
                    unreachable!("ancestor is a split");
                };
                return Some(if x == a { 1.0 } else { 0.0 });
            } else {
                x = px.expect("non-root");
                y = py.expect("non-root");
            }
        }
    }

    /// Bernoulli success probability of cell (i, j).
    pub fn probability(&self, i: u32, j: u32) -> f64 {
        match self.forced(i, j) {
            Some(v) => v,
            None => sigmoid(
                -self.lambda[i as usize].expect("fitted row") - self.mu[j as usize].expect("fitted column"),
            ),
        }
    }

    pub fn expected_left_degree(&self, i: u32) -> f64 {
        (0..self.right_len() as u32).map(|j| self.probability(i, j)).sum()
    }

    pub fn expected_right_degree(&self, j: u32) -> f64 {
        (0..self.left_len() as u32).map(|i| self.probability(i, j)).sum()
    }

    /// Entropy of the product distribution in bits. Visits every cell.
    pub fn entropy_bits(&self) -> f64 {
        let mut h = 0.0;
        for i in 0..self.left_len() as u32 {
            for j in 0..self.right_len() as u32 {
                let p = self.probability(i, j);
                if p > 0.0 && p < 1.0 {
                    h -= p * p.log2() + (1.0 - p) * (1.0 - p).log2();
                }
            }
        }
        h
    }

    fn subtree_members(&self) -> (Vec<Vec<u32>>, Vec<Vec<u32>>) {
        let nb = self.blocks.len();
        let mut rows = vec![Vec::new(); nb];
        let mut cols = vec![Vec::new(); nb];
        for (i, &leaf) in self.row_leaf.iter().enumerate() {
            let mut b = Some(leaf);
            while let Some(x) = b {
                rows[x as usize].push(i as u32);
                b = self.blocks[x as usize].parent;
            }
        }
        for (j, &leaf) in self.col_leaf.iter().enumerate() {
            let mut b = Some(leaf);
            while let Some(x) = b {
                cols[x as usize].push(j as u32);
                b = self.blocks[x as usize].parent;
            }
        }
        (rows, cols)
    }

    pub fn dump(&self) -> RelationshipDump {
        let (rows, cols) = self.subtree_members();
        let mut forced = Vec::new();
        for block in &self.blocks {
            if let BlockKind::Split { a, b } = block.kind {
                let (a, b) = (a as usize, b as usize);
                if !rows[a].is_empty() && !cols[b].is_empty() {
                    forced.push(ForcedBlock { value: 1, rows: rows[a].clone(), cols: cols[b].clone() });
                }
                if !rows[b].is_empty() && !cols[a].is_empty() {
                    forced.push(ForcedBlock { value: 0, rows: rows[b].clone(), cols: cols[a].clone() });
                }
            }
        }
        RelationshipDump {
            name: self.name.clone(),
            lambda: self.lambda.clone(),
            mu: self.mu.clone(),
            frozen_rows: (0..self.left_len() as u32).filter(|&i| self.lambda[i as usize].is_none()).collect(),
            frozen_cols: (0..self.right_len() as u32).filter(|&j| self.mu[j as usize].is_none()).collect(),
            forced,
            residual: self.residual,
            iterations: self.iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcedBlock {
    pub value: u8,
    pub rows: Vec<u32>,
    pub cols: Vec<u32>,
}

/// Serialisable view of a fitted relationship model. Cells outside every
/// forced block have probability `1 / (1 + exp(lambda[i] + mu[j]))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationshipDump {
    pub name: String,
    pub lambda: Vec<Option<f64>>,
    pub mu: Vec<Option<f64>>,
    pub frozen_rows: Vec<u32>,
    pub frozen_cols: Vec<u32>,
    pub forced: Vec<ForcedBlock>,
    pub residual: f64,
    pub iterations: usize,
}

/// One independent model per relationship type, indexed like the graph's edge types.
#[derive(Debug, Clone)]
pub struct MaxEntModel {
    relationships: Vec<RelationshipModel>,
}

pub fn fit_relationship(graph: &KPartiteGraph, edge_type: usize, opts: &FitOptions) -> Result<RelationshipModel> {
    let et = &graph.edge_types()[edge_type];
    RelationshipModel::fit_degrees(
        et.name(),
        et.left(),
        et.right(),
        &et.left_degrees(),
        &et.right_degrees(),
        opts,
    )
}

/// Fits every relationship type; types are independent and fitted in parallel.
pub fn fit(graph: &KPartiteGraph, opts: &FitOptions) -> Result<MaxEntModel> {
    let relationships = (0..graph.edge_types().len())
        .into_par_iter()
        .map(|e| fit_relationship(graph, e, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(MaxEntModel { relationships })
}

impl MaxEntModel {
    pub fn relationships(&self) -> &[RelationshipModel] {
        &self.relationships
    }

    pub fn relationship(&self, name: &str) -> Result<&RelationshipModel> {
        self.relationships
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| Error::UnknownRelationship(name.to_string()))
    }

    /// Probability of an edge between left node `left` and right node `right` of `relationship`.
    pub fn edge_probability(&self, relationship: &str, left: u32, right: u32) -> Result<f64> {
        let r = self.relationship(relationship)?;
        if left as usize >= r.left_len() || right as usize >= r.right_len() {
            return Err(Error::InvalidArgument(format!(
                "cell ({left}, {right}) outside relationship `{relationship}`"
            )));
        }
        Ok(r.probability(left, right))
    }

    pub fn residual(&self) -> f64 {
        self.relationships.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn write_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let dumps: Vec<RelationshipDump> = self.relationships.iter().map(RelationshipModel::dump).collect();
        serde_json::to_writer_pretty(&mut out, &dumps)?;
        out.write_all(b"\n")
    }
}

/// Edges over potential edges, summed across declared edge types.
pub fn database_density(graph: &KPartiteGraph) -> Result<f64> {
    let cells: usize = graph
        .edge_types()
        .iter()
        .map(|e| e.left_len() * e.right_len())
        .sum();
    if cells == 0 {
        return Err(Error::InvalidArgument(
            "density undefined: no edge type has two non-empty sides".into(),
        ));
    }
    Ok(graph.edge_count() as f64 / cells as f64)
}
