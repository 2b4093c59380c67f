use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::value::{is_symbol_text, ValueSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("a path needs at least one label")]
    EmptyPath,
    #[error("invalid feature label {0:?}")]
    InvalidLabel(String),
    #[error("path {0} runs through an atomic value")]
    PathThroughLeaf(Path),
}

/// A non-empty sequence of feature labels addressing a node from the root.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path(Vec<String>);

impl Path {
    pub fn new<I, S>(labels: I) -> Result<Self, TreeError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(TreeError::EmptyPath);
        }
        if let Some(bad) = labels.iter().find(|l| !is_symbol_text(l)) {
            return Err(TreeError::InvalidLabel(bad.clone()));
        }
        Ok(Path(labels))
    }

    /// Parses a blank-separated label list such as `"agr pers"`.
    pub fn parse(text: &str) -> Result<Self, TreeError> {
        Path::new(text.split_whitespace())
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn starts_with(&self, prefix: &[String]) -> bool {
        self.0.starts_with(prefix)
    }
}

impl AsRef<[String]> for Path {
    fn as_ref(&self) -> &[String] {
        &self.0
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

fn path_of(labels: &[String]) -> Path {
    Path(labels.to_vec())
}

/// A tree-shaped feature structure. `L` is the leaf payload: [`ValueSet`]
/// for finished structures, a term type for source-level structures that
/// still carry rule invocations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree<L> {
    children: BTreeMap<String, Node<L>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node<L> {
    Leaf(L),
    Tree(Tree<L>),
}

impl<L> Node<L> {
    pub fn as_leaf(&self) -> Option<&L> {
        match self {
            Node::Leaf(l) => Some(l),
            Node::Tree(_) => None,
        }
    }

    pub fn as_tree(&self) -> Option<&Tree<L>> {
        match self {
            Node::Tree(t) => Some(t),
            Node::Leaf(_) => None,
        }
    }
}

impl<L> Default for Tree<L> {
    fn default() -> Self {
        Tree {
            children: BTreeMap::new(),
        }
    }
}

impl<L: Clone> Tree<L> {
    pub fn new() -> Self {
        Self::default()
    }

    /// A tree holding exactly one node at `path`.
    pub fn singleton(path: &[String], node: Node<L>) -> Result<Self, TreeError> {
        let mut t = Tree::new();
        t.insert(path, node)?;
        Ok(t)
    }

    pub fn is_empty(&self) -> bool {
        self.children.is_empty()
    }

    pub fn len(&self) -> usize {
        self.children.len()
    }

    pub fn child(&self, label: &str) -> Option<&Node<L>> {
        self.children.get(label)
    }

    pub fn children(&self) -> impl Iterator<Item = (&String, &Node<L>)> {
        self.children.iter()
    }

    pub fn labels(&self) -> impl Iterator<Item = &String> {
        self.children.keys()
    }

    /// Follows `path` from the root. Absent if a step is missing or would
    /// descend through a leaf.
    pub fn get(&self, path: &[String]) -> Option<&Node<L>> {
        let (last, init) = path.split_last()?;
        let mut cur = self;
        for label in init {
            match cur.children.get(label)? {
                Node::Tree(t) => cur = t,
                Node::Leaf(_) => return None,
            }
        }
        cur.children.get(last)
    }

    pub fn get_leaf(&self, path: &[String]) -> Option<&L> {
        self.get(path).and_then(Node::as_leaf)
    }

    /// In-place form of [`Tree::set_augment`].
    pub fn insert(&mut self, path: &[String], node: Node<L>) -> Result<(), TreeError> {
        let (last, init) = path.split_last().ok_or(TreeError::EmptyPath)?;
        let mut cur = self;
        for (depth, label) in init.iter().enumerate() {
            let next = cur
                .children
                .entry(label.clone())
                .or_insert_with(|| Node::Tree(Tree::new()));
            cur = match next {
                Node::Tree(t) => t,
                Node::Leaf(_) => return Err(TreeError::PathThroughLeaf(path_of(&path[..=depth]))),
            };
        }
        cur.children.insert(last.clone(), node);
        Ok(())
    }

    /// Places `node` at `path`, creating missing interior nodes and replacing
    /// whatever was there.
    pub fn set_augment(&self, path: &[String], node: Node<L>) -> Result<Self, TreeError> {
        let mut t = self.clone();
        t.insert(path, node)?;
        Ok(t)
    }

    /// In-place form of [`Tree::delete`]; returns the removed node.
    pub fn remove(&mut self, path: &[String]) -> Option<Node<L>> {
        let (last, init) = path.split_last()?;
        let mut cur = self;
        for label in init {
            match cur.children.get_mut(label)? {
                Node::Tree(t) => cur = t,
                Node::Leaf(_) => return None,
            }
        }
        cur.children.remove(last)
    }

    /// The tree without the branch at `path`. Absent paths leave the tree
    /// unchanged. Parents emptied by the deletion are kept.
    pub fn delete(&self, path: &[String]) -> Self {
        let mut t = self.clone();
        t.remove(path);
        t
    }

    /// Default-inheritance merge, consuming both sides: interior nodes present
    /// on both sides merge recursively, any other collision takes the
    /// overlay's node.
    pub fn merged(mut self, overlay: Tree<L>) -> Tree<L> {
        for (label, over) in overlay.children {
            let combined = match (self.children.remove(&label), over) {
                (Some(Node::Tree(base)), Node::Tree(over)) => Node::Tree(base.merged(over)),
                (_, over) => over,
            };
            self.children.insert(label, combined);
        }
        self
    }

    pub fn merge_override(&self, overlay: &Tree<L>) -> Tree<L> {
        self.clone().merged(overlay.clone())
    }

    /// Removes interior nodes that have no children, bottom-up.
    pub fn prune_empty(&mut self) {
        self.children.retain(|_, node| match node {
            Node::Leaf(_) => true,
            Node::Tree(t) => {
                t.prune_empty();
                !t.is_empty()
            }
        });
    }

    pub fn pruned(mut self) -> Self {
        self.prune_empty();
        self
    }

    /// Every leaf with its full path, in lexicographic path order.
    pub fn leaves(&self) -> Vec<(Vec<String>, &L)> {
        let mut out = Vec::new();
        let mut prefix = Vec::new();
        self.collect_leaves(&mut prefix, &mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, prefix: &mut Vec<String>, out: &mut Vec<(Vec<String>, &'a L)>) {
        for (label, node) in &self.children {
            prefix.push(label.clone());
            match node {
                Node::Leaf(l) => out.push((prefix.clone(), l)),
                Node::Tree(t) => t.collect_leaves(prefix, out),
            }
            prefix.pop();
        }
    }

    /// Rewrites every leaf. Leaves mapped to `None` disappear, and interior
    /// nodes left empty by that are pruned.
    pub fn filter_map_leaves<M, E, F>(&self, f: &mut F) -> Result<Tree<M>, E>
    where
        M: Clone,
        F: FnMut(&[String], &L) -> Result<Option<M>, E>,
    {
        let mut prefix = Vec::new();
        self.filter_map_inner(&mut prefix, f)
    }

    fn filter_map_inner<M, E, F>(&self, prefix: &mut Vec<String>, f: &mut F) -> Result<Tree<M>, E>
    where
        M: Clone,
        F: FnMut(&[String], &L) -> Result<Option<M>, E>,
    {
        let mut out = Tree::new();
        for (label, node) in &self.children {
            prefix.push(label.clone());
            let mapped = match node {
                Node::Leaf(l) => f(prefix, l)?.map(Node::Leaf),
                Node::Tree(t) => {
                    let sub = t.filter_map_inner(prefix, f)?;
                    (!sub.is_empty()).then_some(Node::Tree(sub))
                }
            };
            prefix.pop();
            if let Some(n) = mapped {
                out.children.insert(label.clone(), n);
            }
        }
        Ok(out)
    }
}

pub type FeatureTree = Tree<ValueSet>;
pub type FeatureNode = Node<ValueSet>;

impl Node<ValueSet> {
    /// Unification of two nodes; `None` on clash.
    pub fn unify(&self, other: &Self) -> Option<Self> {
        match (self, other) {
            (Node::Leaf(a), Node::Leaf(b)) => a.intersect(b).map(Node::Leaf),
            (Node::Tree(a), Node::Tree(b)) => a.unify(b).map(Node::Tree),
            _ => None,
        }
    }
}

impl Tree<ValueSet> {
    /// Unification with disjunctive leaves: labels on one side are copied,
    /// shared interiors recurse, shared leaves intersect. `None` on an empty
    /// intersection or a leaf/interior clash.
    pub fn unify(&self, other: &Self) -> Option<Self> {
        let mut out = self.clone();
        for (label, theirs) in &other.children {
            let node = match self.children.get(label) {
                None => theirs.clone(),
                Some(ours) => ours.unify(theirs)?,
            };
            out.children.insert(label.clone(), node);
        }
        Some(out)
    }

    /// One `path = v1 v2 …` line per leaf, paths and values sorted.
    pub fn canonical_form(&self) -> String {
        let mut out = String::new();
        for (path, values) in self.leaves() {
            out.push_str(&path.join(" "));
            out.push_str(" = ");
            out.push_str(&values.to_string());
            out.push('\n');
        }
        out
    }
}
