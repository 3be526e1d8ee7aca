//! Labeled rooted trees built by successive leaf addition.
//!
//! Vertices are labeled `1..=n`; vertex 1 is the root and every vertex
//! `v >= 2` has a parent `< v`. Trees are identified by their parent arrays
//! and labeled duplicates are kept: observables are indexed by labeled trees,
//! not by isomorphism classes.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// Largest order accepted by [`enumerate_trees`].
pub const MAX_ENUMERATION_ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabeledTree {
    /// `parents[v - 2]` is the parent of vertex `v`, for `v = 2..=n`.
    parents: Vec<usize>,
}

impl LabeledTree {
    /// The one-vertex tree `T_1`.
    pub fn root() -> Self {
        LabeledTree {
            parents: Vec::new(),
        }
    }

    /// Builds a tree from the parents of vertices `2..=n`.
    pub fn from_parents(parents: &[usize]) -> Result<Self> {
        for (k, &p) in parents.iter().enumerate() {
            let v = k + 2;
            if p == 0 || p >= v {
                return Err(Error::OutOfRange {
                    context: "tree parent",
                    index: p,
                    max: v - 1,
                });
            }
        }
        Ok(LabeledTree {
            parents: parents.to_vec(),
        })
    }

    pub fn order(&self) -> usize {
        self.parents.len() + 1
    }

    /// Parent of `v`, `None` for the root.
    pub fn parent(&self, v: usize) -> Option<usize> {
        if v >= 2 {
            self.parents.get(v - 2).copied()
        } else {
            None
        }
    }

    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    /// `T + i`: attaches the new leaf `n + 1` at vertex `i`.
    pub fn add_leaf(&self, i: usize) -> Result<Self> {
        if i == 0 || i > self.order() {
            return Err(Error::OutOfRange {
                context: "add_leaf",
                index: i,
                max: self.order(),
            });
        }
        let mut parents = self.parents.clone();
        parents.push(i);
        Ok(LabeledTree { parents })
    }

    /// Oriented edges `(parent, child)`, ordered by child.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.parents
            .iter()
            .enumerate()
            .map(|(k, &p)| (p, k + 2))
            .collect()
    }

    /// Children of `v` in ascending order.
    pub fn children(&self, v: usize) -> Result<Vec<usize>> {
        if v == 0 || v > self.order() {
            return Err(Error::OutOfRange {
                context: "children",
                index: v,
                max: self.order(),
            });
        }
        Ok(self
            .parents
            .iter()
            .enumerate()
            .filter(|(_, &p)| p == v)
            .map(|(k, _)| k + 2)
            .collect())
    }

    /// Child lists for every vertex, indexed by `v - 1`.
    pub(crate) fn child_lists(&self) -> Vec<Vec<usize>> {
        let mut lists = vec![Vec::new(); self.order()];
        for (k, &p) in self.parents.iter().enumerate() {
            lists[p - 1].push(k + 2);
        }
        lists
    }

    /// Vertices in depth-first preorder from the root, children ascending.
    pub fn preorder(&self) -> Vec<usize> {
        let lists = self.child_lists();
        let mut out = Vec::with_capacity(self.order());
        let mut stack = vec![1usize];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(lists[v - 1].iter().rev());
        }
        out
    }

    /// Canonical text form, e.g. `-,1,2`.
    pub fn to_text(&self) -> String {
        use core::fmt::Write;
        let mut s = String::from("-");
        for p in &self.parents {
            let _ = write!(s, ",{p}");
        }
        s
    }
}

impl fmt::Display for LabeledTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for LabeledTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(',').map(str::trim);
        if parts.next() != Some("-") {
            return Err(Error::invalid("tree", "text form must start with `-`"));
        }
        let parents = parts
            .map(|p| {
                p.parse::<usize>()
                    .map_err(|_| Error::invalid("tree", "parent is not an integer"))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_parents(&parents)
    }
}

/// All labeled trees of order `n` produced by the leaf-addition recursion,
/// in lexicographic order of parent arrays. There are `(n-1)!` of them.
pub fn enumerate_trees(n: usize) -> Result<Vec<LabeledTree>> {
    if n == 0 || n > MAX_ENUMERATION_ORDER {
        return Err(Error::OutOfRange {
            context: "enumerate_trees order",
            index: n,
            max: MAX_ENUMERATION_ORDER,
        });
    }
    let mut level = vec![LabeledTree::root()];
    for order in 1..n {
        let mut next = Vec::with_capacity(level.len() * order);
        for t in &level {
            for i in 1..=order {
                next.push(t.add_leaf(i)?);
            }
        }
        level = next;
    }
    Ok(level)
}
