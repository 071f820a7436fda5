//! Rooted trees in standardized form, their enumeration, the
//! semi-lone-child-avoiding reduction, and the rational weights of the
//! tree-indexed error expansion.
//!
//! A tree is stored as the number of leaf children of its root plus the
//! multiset of non-leaf child subtrees, kept in a canonical order so that
//! structural equality is plain `==`. The text encoding is nested brackets:
//! `[]` is the single vertex, `[[[]][]]` is the root with a two-vertex child
//! and one leaf child.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use std::cmp::Ordering;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RootedTree {
    leaf_children: usize,
    children: Vec<RootedTree>, // each has >= 2 vertices; sorted ascending
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("tree order {0} out of supported range 1..=10")]
    OrderOutOfRange(usize),
    #[error("invalid tree encoding: {0}")]
    Parse(String),
    #[error("invalid vertex path {0:?}: {1}")]
    InvalidVertex(Vec<usize>, String),
}

impl RootedTree {
    /// The single-vertex tree.
    pub fn leaf() -> RootedTree {
        RootedTree { leaf_children: 0, children: Vec::new() }
    }

    /// Root with `leaf_children` leaves plus the given subtrees. Single-vertex
    /// subtrees are absorbed into the leaf count; the rest are sorted.
    pub fn node(leaf_children: usize, children: Vec<RootedTree>) -> RootedTree {
        let mut ell = leaf_children;
        let mut kids = Vec::with_capacity(children.len());
        for child in children {
            if child.order() == 1 {
                ell += 1;
            } else {
                kids.push(child);
            }
        }
        kids.sort();
        RootedTree { leaf_children: ell, children: kids }
    }

    pub fn order(&self) -> usize {
        1 + self.leaf_children + self.children.iter().map(RootedTree::order).sum::<usize>()
    }

    pub fn leaf_count_at_root(&self) -> usize {
        self.leaf_children
    }

    pub fn subtrees(&self) -> &[RootedTree] {
        &self.children
    }

    /// True for `[tau_0^ell]`: every non-root vertex is a leaf child of the
    /// root. Includes the single vertex itself.
    pub fn is_bushy(&self) -> bool {
        self.children.is_empty()
    }

    /// Nested-bracket encoding. Non-leaf children print first (largest
    /// first), leaves last; parsing accepts any order.
    pub fn encoding(&self) -> String {
        let mut out = String::from("[");
        for child in self.children.iter().rev() {
            out.push_str(&child.encoding());
        }
        for _ in 0..self.leaf_children {
            out.push_str("[]");
        }
        out.push(']');
        out
    }

    pub fn parse(text: &str) -> Result<RootedTree, TreeError> {
        let bytes: Vec<u8> = text.bytes().filter(|b| !b.is_ascii_whitespace()).collect();
        let err = |msg: &str| TreeError::Parse(format!("{msg} in `{text}`"));
        if bytes.is_empty() {
            return Err(err("empty input"));
        }
        let (tree, rest) = parse_node(&bytes).ok_or_else(|| err("malformed brackets"))?;
        if !rest.is_empty() {
            return Err(err("trailing characters"));
        }
        Ok(tree)
    }

    /// No vertex has exactly one child with that child not a leaf.
    pub fn is_semi_lone_child_avoiding(&self) -> bool {
        if self.leaf_children == 0 && self.children.len() == 1 {
            return false;
        }
        self.children.iter().all(RootedTree::is_semi_lone_child_avoiding)
    }

    /// Paths (child-index sequences from the root) of all vertices in
    /// canonical addressing: indices `0..leaf_children` are the root's leaf
    /// children, the remaining indices its subtrees in stored order. The
    /// root is the empty path.
    pub fn vertex_paths(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        for i in 0..self.leaf_children {
            out.push(vec![i]);
        }
        for (j, child) in self.children.iter().enumerate() {
            for mut sub in child.vertex_paths() {
                sub.insert(0, self.leaf_children + j);
                out.push(sub);
            }
        }
        out
    }

    /// Paths of vertices with exactly one child where that child is not a
    /// leaf, i.e. the vertices whose suppression is defined.
    pub fn suppressible_paths(&self) -> Vec<Vec<usize>> {
        self.vertex_paths()
            .into_iter()
            .filter(|p| {
                let v = self.vertex_at(p).expect("path from enumeration");
                v.leaf_children == 0 && v.children.len() == 1
            })
            .collect()
    }

    pub fn vertex_at(&self, path: &[usize]) -> Option<&RootedTree> {
        static LEAF: RootedTree = RootedTree { leaf_children: 0, children: Vec::new() };
        let Some((&idx, rest)) = path.split_first() else {
            return Some(self);
        };
        if idx < self.leaf_children {
            return if rest.is_empty() { Some(&LEAF) } else { None };
        }
        self.children
            .get(idx - self.leaf_children)
            .and_then(|c| c.vertex_at(rest))
    }

    /// Remove the vertex at `path` and attach its single non-leaf child to
    /// the vertex's parent (or make it the root). The resulting tree has one
    /// vertex fewer.
    pub fn suppress_vertex(&self, path: &[usize]) -> Result<RootedTree, TreeError> {
        let bad = |msg: &str| TreeError::InvalidVertex(path.to_vec(), msg.to_string());
        let Some((&idx, rest)) = path.split_first() else {
            if self.leaf_children == 0 && self.children.len() == 1 {
                return Ok(self.children[0].clone());
            }
            return Err(bad("vertex does not have exactly one non-leaf child"));
        };
        if idx < self.leaf_children {
            return Err(bad("path descends into a leaf"));
        }
        let j = idx - self.leaf_children;
        let child = self.children.get(j).ok_or_else(|| bad("child index out of range"))?;
        let new_child = child.suppress_vertex(rest)?;
        let mut kids: Vec<RootedTree> = self
            .children
            .iter()
            .enumerate()
            .filter_map(|(i, c)| (i != j).then(|| c.clone()))
            .collect();
        kids.push(new_child);
        Ok(RootedTree::node(self.leaf_children, kids))
    }

    /// Weight of this tree in the tree-indexed error series, computed in
    /// exact rational arithmetic.
    pub fn series_weight(&self) -> BigRational {
        self.series_weight_with(&default_expansion_coefficient)
    }

    /// Weight with a caller-supplied coefficient family `lambda(ell, k)`;
    /// used by the abstract-recursion oracle.
    pub fn series_weight_with(
        &self,
        lambda: &dyn Fn(usize, usize) -> BigRational,
    ) -> BigRational {
        if self.children.is_empty() {
            return BigRational::one();
        }
        let k = self.children.len();
        // permutation count k! / (mu_1! ... mu_sigma!) over equal-child runs
        let mut perms = factorial(k);
        let mut run = 1usize;
        for i in 1..=k {
            if i < k && self.children[i] == self.children[i - 1] {
                run += 1;
            } else {
                perms /= factorial(run);
                run = 1;
            }
        }
        let mut weight = lambda(self.leaf_children, k)
            * BigRational::from_integer(BigInt::from(perms as u64));
        for child in &self.children {
            weight *= child.series_weight_with(lambda);
        }
        weight
    }
}

/// `lambda(ell, k) = (-1)^(k+1) / (k! ell!)`.
pub fn default_expansion_coefficient(ell: usize, k: usize) -> BigRational {
    let sign = if k % 2 == 1 { 1 } else { -1 };
    BigRational::new(
        BigInt::from(sign),
        BigInt::from((factorial(k) * factorial(ell)) as u64),
    )
}

fn factorial(n: usize) -> usize {
    (1..=n).product::<usize>().max(1)
}

fn parse_node(bytes: &[u8]) -> Option<(RootedTree, &[u8])> {
    let mut rest = bytes.strip_prefix(b"[")?;
    let mut children = Vec::new();
    while let Some(next) = rest.first() {
        match next {
            b']' => return Some((RootedTree::node(0, children), &rest[1..])),
            b'[' => {
                let (child, tail) = parse_node(rest)?;
                children.push(child);
                rest = tail;
            }
            _ => return None,
        }
    }
    None
}

impl PartialOrd for RootedTree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RootedTree {
    /// Total order: by vertex count, then lexicographically by encoding.
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| self.encoding().cmp(&other.encoding()))
    }
}

impl fmt::Display for RootedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encoding())
    }
}

/// All rooted trees with exactly `order` vertices, canonical and sorted.
pub fn enumerate_trees(order: usize) -> Result<Vec<RootedTree>, TreeError> {
    if order == 0 || order > 10 {
        return Err(TreeError::OrderOutOfRange(order));
    }
    Ok(trees_by_order(order).pop().expect("nonempty"))
}

/// Trees of every order `1..=max_order`, flattened in canonical order.
pub fn enumerate_trees_up_to(max_order: usize) -> Result<Vec<RootedTree>, TreeError> {
    if max_order == 0 || max_order > 10 {
        return Err(TreeError::OrderOutOfRange(max_order));
    }
    Ok(trees_by_order(max_order).into_iter().flatten().collect())
}

// levels[i] = sorted trees of order i+1
fn trees_by_order(max_order: usize) -> Vec<Vec<RootedTree>> {
    let mut levels: Vec<Vec<RootedTree>> = vec![vec![RootedTree::leaf()]];
    for n in 2..=max_order {
        let pool: Vec<&RootedTree> = levels.iter().flatten().collect();
        let mut out = Vec::new();
        let mut picked = Vec::new();
        multisets_summing(&pool, n - 1, 0, &mut picked, &mut out);
        out.sort();
        levels.push(out);
    }
    levels
}

// Non-decreasing index sequences into `pool` with vertex counts summing to
// `remaining`; each sequence becomes the child multiset of one new tree.
fn multisets_summing(
    pool: &[&RootedTree],
    remaining: usize,
    min_index: usize,
    picked: &mut Vec<RootedTree>,
    out: &mut Vec<RootedTree>,
) {
    if remaining == 0 {
        out.push(RootedTree::node(0, picked.clone()));
        return;
    }
    for (i, candidate) in pool.iter().enumerate().skip(min_index) {
        if candidate.order() > remaining {
            continue;
        }
        picked.push((*candidate).clone());
        multisets_summing(pool, remaining - candidate.order(), i, picked, out);
        picked.pop();
    }
}
