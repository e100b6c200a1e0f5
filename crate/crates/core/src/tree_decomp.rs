//! Tree decompositions of host graphs: bags, width, validation, text I/O.
//!
//! A decomposition is stored as a rooted tree of bags (vertex sets). The
//! three defining properties — every vertex appears, every edge fits in a
//! bag, and the bags containing any fixed vertex form a connected subtree —
//! are checked by [`validate`], which solvers call before running dynamic
//! programs over the tree.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::MetricGraph;

#[derive(Debug, Error)]
pub enum TreeDecompError {
    #[error("vertex {0} appears in no bag")]
    MissingVertex(usize),
    #[error("edge {0}-{1} is contained in no bag")]
    MissingEdge(usize, usize),
    #[error("bags containing vertex {0} are not connected in the tree")]
    BrokenSubtree(usize),
    #[error("bag {0} has invalid parent {1}")]
    BadParent(usize, usize),
    #[error("decomposition has no bags")]
    Empty,
    #[error("parse error: {0}")]
    Parse(String),
}

/// A rooted tree decomposition. Bag `i`'s parent is `parent[i]`; the root
/// points to itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeDecomposition {
    pub bags: Vec<Vec<usize>>,
    pub parent: Vec<usize>,
    pub root: usize,
}

impl TreeDecomposition {
    pub fn new(bags: Vec<Vec<usize>>, parent: Vec<usize>, root: usize) -> Self {
        let mut bags = bags;
        for b in &mut bags {
            b.sort_unstable();
            b.dedup();
        }
        TreeDecomposition { bags, parent, root }
    }

    /// Width: largest bag size minus one.
    pub fn width(&self) -> usize {
        self.bags.iter().map(|b| b.len()).max().unwrap_or(0).saturating_sub(1)
    }

    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.bags.len()];
        for (i, &p) in self.parent.iter().enumerate() {
            if i != self.root {
                ch[p].push(i);
            }
        }
        ch
    }

    /// Bag indices in an order where children precede parents.
    pub fn bottom_up(&self) -> Vec<usize> {
        let ch = self.children();
        let mut order = Vec::with_capacity(self.bags.len());
        let mut stack = vec![self.root];
        while let Some(b) = stack.pop() {
            order.push(b);
            stack.extend(&ch[b]);
        }
        order.reverse();
        order
    }

    /// Validates the three decomposition properties against `g`.
    pub fn validate(&self, g: &MetricGraph) -> Result<(), TreeDecompError> {
        if self.bags.is_empty() {
            return Err(TreeDecompError::Empty);
        }
        let k = self.bags.len();
        for (i, &p) in self.parent.iter().enumerate() {
            if p >= k || (i == self.root) != (p == i) {
                return Err(TreeDecompError::BadParent(i, p));
            }
        }
        let n = g.vertex_count();
        let mut seen = vec![false; n];
        for b in &self.bags {
            for &v in b {
                if v >= n {
                    return Err(TreeDecompError::Parse(format!("vertex {v} out of range")));
                }
                seen[v] = true;
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(TreeDecompError::MissingVertex(v));
        }
        for e in g.edges() {
            let ok = self
                .bags
                .iter()
                .any(|b| b.binary_search(&e.u).is_ok() && b.binary_search(&e.v).is_ok());
            if !ok {
                return Err(TreeDecompError::MissingEdge(e.u, e.v));
            }
        }
        // Subtree connectivity: the bags holding v, contracted along tree
        // edges between two holders, must form one component.
        for v in 0..n {
            let holders: Vec<usize> = (0..k)
                .filter(|&b| self.bags[b].binary_search(&v).is_ok())
                .collect();
            if holders.is_empty() {
                return Err(TreeDecompError::MissingVertex(v));
            }
            let mut comp = vec![usize::MAX; k];
            for &h in &holders {
                comp[h] = h;
            }
            // Union child into parent when both hold v.
            fn find(comp: &mut Vec<usize>, x: usize) -> usize {
                if comp[x] == x {
                    return x;
                }
                let r = find(comp, comp[x]);
                comp[x] = r;
                r
            }
            for &h in &holders {
                let p = self.parent[h];
                if h != self.root && comp[p] != usize::MAX {
                    let (a, b) = (find(&mut comp, h), find(&mut comp, p));
                    if a != b {
                        comp[a] = b;
                    }
                }
            }
            let mut roots: Vec<usize> = holders.iter().map(|&h| find(&mut comp, h)).collect();
            roots.sort_unstable();
            roots.dedup();
            if roots.len() != 1 {
                return Err(TreeDecompError::BrokenSubtree(v));
            }
        }
        Ok(())
    }

    /// Text form: one line per bag, `bag_id parent_id v1 v2 ...`, with the
    /// root's parent written as `-1`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, b) in self.bags.iter().enumerate() {
            let p = if i == self.root { -1 } else { self.parent[i] as i64 };
            out.push_str(&format!("{i} {p}"));
            for &v in b {
                out.push_str(&format!(" {v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self, TreeDecompError> {
        let mut rows: Vec<(usize, i64, Vec<usize>)> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let id: usize = it
                .next()
                .ok_or_else(|| TreeDecompError::Parse("missing bag id".into()))?
                .parse()
                .map_err(|e| TreeDecompError::Parse(format!("bad bag id: {e}")))?;
            let p: i64 = it
                .next()
                .ok_or_else(|| TreeDecompError::Parse("missing parent id".into()))?
                .parse()
                .map_err(|e| TreeDecompError::Parse(format!("bad parent id: {e}")))?;
            let verts: Result<Vec<usize>, _> = it.map(|t| t.parse()).collect();
            let verts = verts.map_err(|e| TreeDecompError::Parse(format!("bad vertex: {e}")))?;
            rows.push((id, p, verts));
        }
        if rows.is_empty() {
            return Err(TreeDecompError::Empty);
        }
        let k = rows.len();
        let mut bags = vec![Vec::new(); k];
        let mut parent = vec![usize::MAX; k];
        let mut root = None;
        for (id, p, verts) in rows {
            if id >= k {
                return Err(TreeDecompError::Parse(format!("bag id {id} out of range")));
            }
            bags[id] = verts;
            if p < 0 {
                if root.replace(id).is_some() {
                    return Err(TreeDecompError::Parse("multiple roots".into()));
                }
                parent[id] = id;
            } else {
                parent[id] = p as usize;
            }
        }
        let root = root.ok_or_else(|| TreeDecompError::Parse("no root bag".into()))?;
        if parent.contains(&usize::MAX) {
            return Err(TreeDecompError::Parse("duplicate or missing bag ids".into()));
        }
        Ok(TreeDecomposition::new(bags, parent, root))
    }
}
