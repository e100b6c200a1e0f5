//! Nice tree decompositions: leaf / introduce / forget / join normal form.
//!
//! Dynamic programs walk decompositions one change at a time, so an
//! arbitrary decomposition is first rewritten into a tree whose nodes each
//! differ from their child by a single vertex (or join two identical
//! bags). The rewrite can force a set of vertices into every bag (solvers
//! keep depots visible everywhere) and holds them back so they are
//! forgotten last, in ascending id order, at the very top. The final root
//! bag is empty.

use serde::{Deserialize, Serialize};

use crate::tree_decomp::TreeDecomposition;

/// One node of a nice decomposition; children are indices into the node
/// vector (children always precede parents).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum NiceNode {
    /// Empty bag, no children.
    Leaf,
    /// Adds `v` to the child's bag.
    Introduce { child: usize, v: usize },
    /// Removes `v` from the child's bag.
    Forget { child: usize, v: usize },
    /// Two children with identical bags.
    Join { left: usize, right: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NiceDecomposition {
    pub nodes: Vec<NiceNode>,
    /// Sorted bag per node.
    pub bags: Vec<Vec<usize>>,
    /// The top node; its bag is empty.
    pub root: usize,
}

impl NiceDecomposition {
    pub fn width(&self) -> usize {
        self.bags.iter().map(|b| b.len()).max().unwrap_or(0).saturating_sub(1)
    }

    /// Internal consistency: bag algebra matches the node kinds.
    pub fn check(&self) -> bool {
        self.nodes.iter().enumerate().all(|(i, node)| match node {
            NiceNode::Leaf => self.bags[i].is_empty(),
            NiceNode::Introduce { child, v } => {
                let mut want = self.bags[*child].clone();
                want.push(*v);
                want.sort_unstable();
                *child < i && !self.bags[*child].contains(v) && self.bags[i] == want
            }
            NiceNode::Forget { child, v } => {
                let want: Vec<usize> =
                    self.bags[*child].iter().copied().filter(|x| x != v).collect();
                *child < i
                    && self.bags[*child].contains(v)
                    && self.bags[i] == want
            }
            NiceNode::Join { left, right } => {
                *left < i
                    && *right < i
                    && self.bags[*left] == self.bags[i]
                    && self.bags[*right] == self.bags[i]
            }
        }) && self.bags[self.root].is_empty()
            && self.root == self.nodes.len() - 1
    }
}

struct Builder {
    nodes: Vec<NiceNode>,
    bags: Vec<Vec<usize>>,
}

impl Builder {
    fn push(&mut self, node: NiceNode, bag: Vec<usize>) -> usize {
        self.nodes.push(node);
        self.bags.push(bag);
        self.nodes.len() - 1
    }

    /// Chain of introduces building `target` (sorted) on top of `from`.
    fn introduce_up(&mut self, mut node: usize, target: &[usize]) -> usize {
        let missing: Vec<usize> = target
            .iter()
            .copied()
            .filter(|v| !self.bags[node].contains(v))
            .collect();
        for v in missing {
            let mut bag = self.bags[node].clone();
            bag.push(v);
            bag.sort_unstable();
            node = self.push(NiceNode::Introduce { child: node, v }, bag);
        }
        node
    }

    /// Chain of forgets removing everything not in `target`, keeping
    /// `last` (sorted) for the very end and forgetting those ascending.
    fn forget_down(&mut self, mut node: usize, target: &[usize], last: &[usize]) -> usize {
        let mut extra: Vec<usize> = self.bags[node]
            .iter()
            .copied()
            .filter(|v| !target.contains(v))
            .collect();
        extra.sort_by_key(|v| (last.contains(v), *v));
        for v in extra {
            let bag: Vec<usize> =
                self.bags[node].iter().copied().filter(|&x| x != v).collect();
            node = self.push(NiceNode::Forget { child: node, v }, bag);
        }
        node
    }
}

/// Rewrites `td` into nice form over the same graph.
///
/// `pinned` vertices are added to every bag first (callers pin depots so
/// the routing programs can always reach them) and are forgotten last at
/// the top, in ascending id order.
pub fn make_nice(td: &TreeDecomposition, pinned: &[usize]) -> NiceDecomposition {
    let mut pinned: Vec<usize> = pinned.to_vec();
    pinned.sort_unstable();
    pinned.dedup();
    let mut bags: Vec<Vec<usize>> = td.bags.clone();
    for b in &mut bags {
        b.extend(pinned.iter().copied());
        b.sort_unstable();
        b.dedup();
    }
    let children = td.children();
    let mut builder = Builder { nodes: Vec::new(), bags: Vec::new() };
    let top = build_rec(&mut builder, &bags, &children, td.root);
    // Dismantle the root bag, pinned vertices last.
    let root = builder.forget_down(top, &[], &pinned);
    NiceDecomposition { nodes: builder.nodes, bags: builder.bags, root }
}

fn build_rec(
    builder: &mut Builder,
    bags: &[Vec<usize>],
    children: &[Vec<usize>],
    bag: usize,
) -> usize {
    let target = &bags[bag];
    if children[bag].is_empty() {
        let leaf = builder.push(NiceNode::Leaf, Vec::new());
        return builder.introduce_up(leaf, target);
    }
    // Lift each child subtree to this bag, then join them pairwise.
    let mut tops: Vec<usize> = Vec::new();
    for &c in &children[bag] {
        let sub = build_rec(builder, bags, children, c);
        let shrunk = builder.forget_down(sub, target, &[]);
        tops.push(builder.introduce_up(shrunk, target));
    }
    let mut acc = tops[0];
    for &t in &tops[1..] {
        acc = builder.push(
            NiceNode::Join { left: acc, right: t },
            builder.bags[acc].clone(),
        );
    }
    acc
}
