//! Rooted, leveled trees whose leaves are the points of a space.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::SimilaritySpace;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub id: String,
    pub parent: Option<usize>,
    pub level: u32,
}

/// A finite rooted tree. Every childless non-root node is a leaf and carries
/// exactly one point identifier; each point labels exactly one leaf.
///
/// The Gromov product of two leaves with respect to the root under the graph
/// distance is the level of their lowest common ancestor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "TreeFile", try_from = "TreeFile")]
pub struct CompatibleTree {
    nodes: Vec<TreeNode>,
    children: Vec<Vec<usize>>,
    root: usize,
    leaf_point: HashMap<usize, String>,
    point_leaf: HashMap<String, usize>,
}

/// Incremental construction of a [`CompatibleTree`].
#[derive(Debug, Default)]
pub struct TreeBuilder {
    nodes: Vec<TreeNode>,
    leaves: Vec<(usize, String)>,
}

impl TreeBuilder {
    pub fn new(root_id: impl Into<String>) -> Self {
        Self {
            nodes: vec![TreeNode {
                id: root_id.into(),
                parent: None,
                level: 0,
            }],
            leaves: Vec::new(),
        }
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn add_child(&mut self, parent: usize, id: impl Into<String>) -> usize {
        let level = self.nodes[parent].level + 1;
        self.nodes.push(TreeNode {
            id: id.into(),
            parent: Some(parent),
            level,
        });
        self.nodes.len() - 1
    }

    /// Adds a leaf for `point` under `parent`.
    pub fn add_leaf(&mut self, parent: usize, id: impl Into<String>, point: impl Into<String>) -> usize {
        let node = self.add_child(parent, id);
        self.leaves.push((node, point.into()));
        node
    }

    pub fn finish(self) -> Result<CompatibleTree> {
        CompatibleTree::from_parts(self.nodes, 0, self.leaves)
    }
}

impl CompatibleTree {
    fn from_parts(nodes: Vec<TreeNode>, root: usize, leaves: Vec<(usize, String)>) -> Result<Self> {
        let n = nodes.len();
        if root >= n || nodes[root].parent.is_some() || nodes[root].level != 0 {
            return Err(Error::MalformedTree(
                "root must exist, be parentless and have level 0".into(),
            ));
        }
        let mut children = vec![Vec::new(); n];
        let mut ids = HashMap::with_capacity(n);
        for (i, node) in nodes.iter().enumerate() {
            if ids.insert(node.id.clone(), i).is_some() {
                return Err(Error::MalformedTree(format!("duplicate node id {:?}", node.id)));
            }
            match node.parent {
                None if i != root => {
                    return Err(Error::MalformedTree(format!("node {:?} has no parent", node.id)));
                }
                None => {}
                Some(p) => {
                    if p >= n {
                        return Err(Error::MalformedTree(format!(
                            "node {:?} has a dangling parent",
                            node.id
                        )));
                    }
                    if nodes[p].level + 1 != node.level {
                        return Err(Error::MalformedTree(format!(
                            "node {:?} at level {} under a level-{} parent",
                            node.id, node.level, nodes[p].level
                        )));
                    }
                    children[p].push(i);
                }
            }
        }
        // levels strictly increase along parent links, so every path reaches
        // a parentless node, which can only be the root
        let mut leaf_point = HashMap::with_capacity(leaves.len());
        let mut point_leaf = HashMap::with_capacity(leaves.len());
        for (node, point) in leaves {
            if node >= n || node == root {
                return Err(Error::MalformedTree("leaf must be a non-root node".into()));
            }
            if leaf_point.insert(node, point.clone()).is_some() {
                return Err(Error::MalformedTree(format!(
                    "node {:?} labels two points",
                    nodes[node].id
                )));
            }
            if point_leaf.insert(point.clone(), node).is_some() {
                return Err(Error::MalformedTree(format!("point {point:?} labels two leaves")));
            }
        }
        for i in 0..n {
            let childless = children[i].is_empty() && i != root;
            if childless != leaf_point.contains_key(&i) {
                return Err(Error::MalformedTree(format!(
                    "node {:?}: leaves must be exactly the childless non-root nodes",
                    nodes[i].id
                )));
            }
        }
        Ok(Self {
            nodes,
            children,
            root,
            leaf_point,
            point_leaf,
        })
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn num_leaves(&self) -> usize {
        self.point_leaf.len()
    }

    pub fn depth(&self) -> u32 {
        self.nodes.iter().map(|n| n.level).max().unwrap_or(0)
    }

    pub fn leaf_of(&self, point: &str) -> Option<usize> {
        self.point_leaf.get(point).copied()
    }

    pub fn point_of(&self, node: usize) -> Option<&str> {
        self.leaf_point.get(&node).map(String::as_str)
    }

    /// Points of all leaves, in node order.
    pub fn points(&self) -> Vec<&str> {
        (0..self.nodes.len()).filter_map(|i| self.point_of(i)).collect()
    }

    fn lca_level(&self, mut a: usize, mut b: usize) -> u32 {
        while self.nodes[a].level > self.nodes[b].level {
            a = self.nodes[a].parent.expect("non-root");
        }
        while self.nodes[b].level > self.nodes[a].level {
            b = self.nodes[b].parent.expect("non-root");
        }
        while a != b {
            a = self.nodes[a].parent.expect("non-root");
            b = self.nodes[b].parent.expect("non-root");
        }
        self.nodes[a].level
    }

    /// `(x, y)_r`: the level of the lowest common ancestor of the leaves of
    /// `x` and `y`. For `x == y` this is the depth of the leaf.
    pub fn gromov_product(&self, x: &str, y: &str) -> Result<u32> {
        let a = self.leaf_of(x).ok_or_else(|| Error::UnknownLeaf(x.to_string()))?;
        let b = self.leaf_of(y).ok_or_else(|| Error::UnknownLeaf(y.to_string()))?;
        Ok(self.lca_level(a, b))
    }

    /// Leaf nodes listed in the point order of `space`.
    pub fn leaves_for(&self, space: &SimilaritySpace) -> Result<Vec<usize>> {
        if space.len() != self.num_leaves() {
            return Err(Error::LeafMismatch(format!(
                "{} points but {} leaves",
                space.len(),
                self.num_leaves()
            )));
        }
        space
            .points
            .iter()
            .map(|p| {
                self.leaf_of(p)
                    .ok_or_else(|| Error::LeafMismatch(format!("no leaf for point {p:?}")))
            })
            .collect()
    }

    /// Matrix of Gromov products `(x, y)_r` in the point order of `space`.
    pub fn product_matrix(&self, space: &SimilaritySpace) -> Result<Vec<Vec<u32>>> {
        let leaves = self.leaves_for(space)?;
        let n = leaves.len();
        let mut out = vec![vec![0u32; n]; n];
        for i in 0..n {
            out[i][i] = self.nodes[leaves[i]].level;
            for j in i + 1..n {
                let l = self.lca_level(leaves[i], leaves[j]);
                out[i][j] = l;
                out[j][i] = l;
            }
        }
        Ok(out)
    }

    /// Points below `node`, in depth-first order.
    pub fn points_below(&self, node: usize) -> Vec<&str> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            if let Some(p) = self.point_of(v) {
                out.push(p);
            }
            stack.extend(self.children[v].iter().rev());
        }
        out
    }

    /// Nodes at `level`.
    pub fn nodes_at(&self, level: u32) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].level == level)
            .collect()
    }

    /// Removes the given leaves, then prunes internal nodes left childless.
    /// Levels of the remaining nodes are unchanged.
    pub fn without_leaves(&self, drop: &[usize]) -> Result<CompatibleTree> {
        let n = self.nodes.len();
        let mut alive = vec![true; n];
        let mut child_count: Vec<usize> = self.children.iter().map(Vec::len).collect();
        for &leaf in drop {
            if !self.leaf_point.contains_key(&leaf) {
                return Err(Error::MalformedTree(format!("node {leaf} is not a leaf")));
            }
            let mut v = leaf;
            if !alive[v] {
                continue;
            }
            alive[v] = false;
            while let Some(p) = self.nodes[v].parent {
                child_count[p] -= 1;
                if child_count[p] > 0 || p == self.root {
                    break;
                }
                alive[p] = false;
                v = p;
            }
        }
        let mut remap = vec![usize::MAX; n];
        let mut nodes = Vec::new();
        for i in 0..n {
            if alive[i] {
                remap[i] = nodes.len();
                nodes.push(TreeNode {
                    id: self.nodes[i].id.clone(),
                    parent: self.nodes[i].parent.map(|p| remap[p]),
                    level: self.nodes[i].level,
                });
            }
        }
        let leaves = self
            .leaf_point
            .iter()
            .filter(|(node, _)| alive[**node])
            .map(|(node, p)| (remap[*node], p.clone()))
            .collect::<BTreeMap<_, _>>()
            .into_iter()
            .collect();
        CompatibleTree::from_parts(nodes, remap[self.root], leaves)
    }

    /// Renames leaf labels through `rename` (point -> new point).
    pub fn relabel(&self, rename: &HashMap<String, String>) -> Result<CompatibleTree> {
        let leaves = self
            .leaf_point
            .iter()
            .map(|(node, p)| (*node, rename.get(p).cloned().unwrap_or_else(|| p.clone())))
            .collect::<BTreeMap<_, _>>()
            .into_iter()
            .collect();
        CompatibleTree::from_parts(self.nodes.clone(), self.root, leaves)
    }

    pub fn to_file(&self) -> TreeFile {
        TreeFile {
            root: self.nodes[self.root].id.clone(),
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeRecord {
                    id: n.id.clone(),
                    parent: n.parent.map(|p| self.nodes[p].id.clone()),
                    level: n.level,
                })
                .collect(),
            leaves: self
                .leaf_point
                .iter()
                .map(|(node, p)| (self.nodes[*node].id.clone(), p.clone()))
                .collect(),
        }
    }

    pub fn from_file(file: &TreeFile) -> Result<Self> {
        let index: HashMap<&str, usize> = file.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        let mut nodes = Vec::with_capacity(file.nodes.len());
        for rec in &file.nodes {
            let parent = match &rec.parent {
                None => None,
                Some(p) => Some(
                    *index
                        .get(p.as_str())
                        .ok_or_else(|| Error::MalformedTree(format!("unknown parent {p:?}")))?,
                ),
            };
            nodes.push(TreeNode {
                id: rec.id.clone(),
                parent,
                level: rec.level,
            });
        }
        let root = *index
            .get(file.root.as_str())
            .ok_or_else(|| Error::MalformedTree(format!("unknown root {:?}", file.root)))?;
        let mut leaves = Vec::with_capacity(file.leaves.len());
        for (leaf, point) in &file.leaves {
            let node = *index
                .get(leaf.as_str())
                .ok_or_else(|| Error::MalformedTree(format!("unknown leaf node {leaf:?}")))?;
            leaves.push((node, point.clone()));
        }
        Self::from_parts(nodes, root, leaves)
    }

    /// Newick string with unit branch lengths. Leaves are labeled by point,
    /// internal nodes by node id.
    pub fn to_newick(&self) -> String {
        fn label(s: &str) -> String {
            if s.chars().any(|c| "()[]':;, \t\n".contains(c)) {
                format!("'{}'", s.replace('\'', "''"))
            } else {
                s.to_string()
            }
        }
        fn walk(t: &CompatibleTree, v: usize, out: &mut String) {
            if let Some(p) = t.point_of(v) {
                out.push_str(&label(p));
            } else {
                out.push('(');
                for (k, &c) in t.children[v].iter().enumerate() {
                    if k > 0 {
                        out.push(',');
                    }
                    walk(t, c, out);
                    out.push_str(":1");
                }
                out.push(')');
                out.push_str(&label(&t.nodes[v].id));
            }
        }
        let mut out = String::new();
        walk(self, self.root, &mut out);
        out.push(';');
        out
    }

    /// Graphviz rendering of the tree.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph tree {\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let label = self.point_of(i).unwrap_or(&n.id).replace('"', "'");
            let shape = if self.point_of(i).is_some() { "box" } else { "ellipse" };
            let _ = writeln!(out, "  n{i} [label=\"{label}\", shape={shape}];");
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                let _ = writeln!(out, "  n{p} -> n{i};");
            }
        }
        out.push_str("}\n");
        out
    }
}

/// On-disk tree: `{"root": id, "nodes": [{"id", "parent", "level"}], "leaves": {leaf: point}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeFile {
    pub root: String,
    pub nodes: Vec<NodeRecord>,
    pub leaves: BTreeMap<String, String>,
}

impl From<CompatibleTree> for TreeFile {
    fn from(tree: CompatibleTree) -> Self {
        tree.to_file()
    }
}

impl TryFrom<TreeFile> for CompatibleTree {
    type Error = Error;

    fn try_from(file: TreeFile) -> Result<Self> {
        CompatibleTree::from_file(&file)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: String,
    pub parent: Option<String>,
    pub level: u32,
}

#[cfg(test)]
mod tests {
    use super::*;

    // root -> a -> {x, y}, root -> z
    fn small() -> CompatibleTree {
        let mut b = TreeBuilder::new("r");
        let a = b.add_child(0, "a");
        b.add_leaf(a, "lx", "x");
        b.add_leaf(a, "ly", "y");
        b.add_leaf(0, "lz", "z");
        b.finish().unwrap()
    }

    #[test]
    fn products_are_lca_levels() {
        let t = small();
        assert_eq!(t.gromov_product("x", "y").unwrap(), 1);
        assert_eq!(t.gromov_product("x", "z").unwrap(), 0);
        assert_eq!(t.gromov_product("x", "x").unwrap(), 2);
        assert_eq!(t.gromov_product("z", "z").unwrap(), 1);
        assert!(matches!(t.gromov_product("x", "q"), Err(Error::UnknownLeaf(_))));
    }

    #[test]
    fn rejects_unlabeled_childless_node() {
        let mut b = TreeBuilder::new("r");
        b.add_child(0, "dangling");
        b.add_leaf(0, "l", "x");
        assert!(b.finish().is_err());
    }

    #[test]
    fn newick_and_file_round_trip() {
        let t = small();
        assert_eq!(t.to_newick(), "((x:1,y:1)a:1,z:1)r;");
        let back = CompatibleTree::from_file(&t.to_file()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn pruning_keeps_levels() {
        let t = small();
        let lx = t.leaf_of("x").unwrap();
        let ly = t.leaf_of("y").unwrap();
        let pruned = t.without_leaves(&[lx, ly]).unwrap();
        assert_eq!(pruned.num_leaves(), 1);
        assert_eq!(pruned.nodes().len(), 2);
        let pruned = t.without_leaves(&[lx]).unwrap();
        assert_eq!(pruned.gromov_product("y", "y").unwrap(), 2);
    }
}
