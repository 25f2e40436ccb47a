//! Minimum spanning trees over point subsets and tree-to-tour shortcutting.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{Instance, PointId};
use crate::schedule::Schedule;

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// A tree over instance points. Edges are stored with the smaller index first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tree {
    vertices: Vec<PointId>,
    edges: Vec<(PointId, PointId)>,
    cost: f64,
}

impl Tree {
    pub fn singleton(p: PointId) -> Tree {
        Tree {
            vertices: vec![p],
            edges: Vec::new(),
            cost: 0.0,
        }
    }

    /// Builds a tree from its edges, checking that they form a tree.
    pub fn from_edges(inst: &Instance, edges: Vec<(PointId, PointId)>) -> Result<Tree> {
        let mut vertices: Vec<PointId> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        vertices.sort_unstable();
        vertices.dedup();
        for &v in &vertices {
            inst.check_point(v)?;
        }
        Self::from_parts(inst, vertices, edges)
    }

    pub(crate) fn from_parts(
        inst: &Instance,
        vertices: Vec<PointId>,
        edges: Vec<(PointId, PointId)>,
    ) -> Result<Tree> {
        if vertices.is_empty() {
            return Err(Error::EmptySubset);
        }
        let mut edges: Vec<_> = edges.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        edges.sort_unstable();
        let tree = Tree {
            cost: edges.iter().map(|&(a, b)| inst.dist(a, b)).sum(),
            vertices,
            edges,
        };
        if !tree.is_spanning_tree() {
            return Err(Error::InvalidParameter("edge set is not a tree on its vertices".into()));
        }
        Ok(tree)
    }

    fn is_spanning_tree(&self) -> bool {
        if self.edges.len() + 1 != self.vertices.len() {
            return false;
        }
        let pos = |p: PointId| self.vertices.binary_search(&p);
        let mut uf = UnionFind::new(self.vertices.len());
        self.edges.iter().all(|&(a, b)| match (pos(a), pos(b)) {
            (Ok(i), Ok(j)) => uf.union(i, j),
            _ => false,
        })
    }

    pub fn vertices(&self) -> &[PointId] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(PointId, PointId)] {
        &self.edges
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn contains(&self, p: PointId) -> bool {
        self.vertices.binary_search(&p).is_ok()
    }

    /// Lowest-index vertex; the start of every tour built from this tree.
    pub fn root(&self) -> PointId {
        self.vertices[0]
    }

    /// Children lists (ascending) of a rooted orientation, keyed by position
    /// in `vertices`.
    pub(crate) fn children(&self, root: PointId) -> Vec<Vec<usize>> {
        let n = self.vertices.len();
        let pos = |p: PointId| self.vertices.binary_search(&p).expect("edge endpoint is a vertex");
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            let (i, j) = (pos(a), pos(b));
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut children = vec![Vec::new(); n];
        let mut seen = vec![false; n];
        let mut stack = vec![pos(root)];
        seen[pos(root)] = true;
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    children[v].push(u);
                    stack.push(u);
                }
            }
        }
        // Positions follow vertex order, so sorting positions sorts by point index.
        for c in &mut children {
            c.sort_unstable();
        }
        children
    }
}

/// Kruskal over the complete graph on `subset`; ties broken by `(dist, a, b)`.
pub fn minimum_spanning_tree(inst: &Instance, subset: &[PointId]) -> Result<Tree> {
    minimum_spanning_forest(inst, subset, f64::INFINITY)?
        .into_iter()
        .next()
        .ok_or(Error::EmptySubset)
}

/// Minimum spanning forest of the graph on `subset` keeping only edges of
/// length at most `max_edge`. One tree per connected component, ordered by
/// their lowest vertex.
pub fn minimum_spanning_forest(inst: &Instance, subset: &[PointId], max_edge: f64) -> Result<Vec<Tree>> {
    let mut vertices = subset.to_vec();
    vertices.sort_unstable();
    vertices.dedup();
    if vertices.is_empty() {
        return Err(Error::EmptySubset);
    }
    for &v in &vertices {
        inst.check_point(v)?;
    }

    let m = vertices.len();
    let mut candidates = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            let d = inst.dist(vertices[i], vertices[j]);
            if d <= max_edge {
                candidates.push((d, i, j));
            }
        }
    }
    candidates.sort_unstable_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));

    let mut uf = UnionFind::new(m);
    let mut chosen = Vec::with_capacity(m.saturating_sub(1));
    for (_, i, j) in candidates {
        if uf.union(i, j) {
            chosen.push((i, j));
            if chosen.len() + 1 == m {
                break;
            }
        }
    }

    let mut component_of = vec![usize::MAX; m];
    let mut groups: Vec<(Vec<PointId>, Vec<(PointId, PointId)>)> = Vec::new();
    for i in 0..m {
        let r = uf.find(i);
        if component_of[r] == usize::MAX {
            component_of[r] = groups.len();
            groups.push((Vec::new(), Vec::new()));
        }
        groups[component_of[r]].0.push(vertices[i]);
    }
    for (i, j) in chosen {
        let g = component_of[uf.find(i)];
        groups[g].1.push((vertices[i], vertices[j]));
    }
    groups
        .into_iter()
        .map(|(vs, es)| Tree::from_parts(inst, vs, es))
        .collect()
}

/// Depth-first preorder of `tree` from `start`, children in ascending index
/// order, read as a cyclic tour. By the triangle inequality its period is at
/// most twice the tree cost.
pub fn euler_shortcut(tree: &Tree, start: PointId) -> Result<Schedule> {
    if !tree.contains(start) {
        return Err(Error::StartNotInTree(start.0));
    }
    let children = tree.children(start);
    let root = tree.vertices.binary_search(&start).unwrap();
    let mut order = Vec::with_capacity(tree.vertices.len());
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        order.push(tree.vertices[v]);
        stack.extend(children[v].iter().rev());
    }
    Schedule::new(order)
}
