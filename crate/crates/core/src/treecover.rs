//! Min-max tree cover: cover a point set by at most `k` trees while keeping
//! the most expensive tree cheap.
//!
//! [`try_budget`] is the budget probe. For a guess `B` it drops every edge
//! longer than `B`, takes a minimum spanning tree per remaining component,
//! charges each component `floor(cost / 2B) + 1` trees and fails if that
//! exceeds `k`. Otherwise each component tree is cut into one piece of cost
//! below `2B` plus pieces of cost in `[2B, 4B)`. A failed probe certifies
//! that `B` is below the optimum, and success is monotone in `B`, so
//! [`minmax_tree_cover`] binary-searches the smallest successful budget.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{Instance, PointId};
use crate::mst::{minimum_spanning_forest, minimum_spanning_tree, Tree};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentSummary {
    pub vertices: usize,
    pub mst_cost: f64,
    /// `floor(mst_cost / 2B)`.
    pub extra_trees: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeCover {
    pub trees: Vec<Tree>,
    pub budget_used: f64,
    pub k: usize,
    pub components: Vec<ComponentSummary>,
}

impl TreeCover {
    pub fn max_tree_cost(&self) -> f64 {
        self.trees.iter().map(Tree::cost).fold(0.0, f64::max)
    }

    pub fn covers(&self, p: PointId) -> bool {
        self.trees.iter().any(|t| t.contains(p))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum BudgetOutcome {
    Success(TreeCover),
    /// The budget is too low: the components need `required > k` trees.
    Fail { required: usize },
}

impl BudgetOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self, BudgetOutcome::Success(_))
    }

    pub fn into_cover(self) -> Option<TreeCover> {
        match self {
            BudgetOutcome::Success(c) => Some(c),
            BudgetOutcome::Fail { .. } => None,
        }
    }
}

fn normalized_subset(inst: &Instance, subset: &[PointId]) -> Result<Vec<PointId>> {
    let mut s = subset.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.is_empty() {
        return Err(Error::EmptySubset);
    }
    for &p in &s {
        inst.check_point(p)?;
    }
    Ok(s)
}

/// One run of the budget probe with guess `budget`.
pub fn try_budget(inst: &Instance, subset: &[PointId], k: usize, budget: f64) -> Result<BudgetOutcome> {
    if !(budget.is_finite() && budget > 0.0) {
        return Err(Error::InvalidParameter(format!("budget must be positive, got {budget}")));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let subset = normalized_subset(inst, subset)?;
    let forest = minimum_spanning_forest(inst, &subset, budget)?;

    let components: Vec<ComponentSummary> = forest
        .iter()
        .map(|t| ComponentSummary {
            vertices: t.vertices().len(),
            mst_cost: t.cost(),
            extra_trees: (t.cost() / (2.0 * budget)).floor() as usize,
        })
        .collect();
    let required: usize = components.iter().map(|c| c.extra_trees + 1).sum();
    if required > k {
        return Ok(BudgetOutcome::Fail { required });
    }

    let mut trees = Vec::with_capacity(required);
    for component in &forest {
        let mut pieces = decompose_tree(inst, component, budget)?;
        // An edgeless remainder is redundant when its vertex sits in another piece.
        if pieces.len() > 1 && pieces[0].edges().is_empty() {
            let v = pieces[0].root();
            if pieces[1..].iter().any(|t| t.contains(v)) {
                pieces.remove(0);
            }
        }
        trees.extend(pieces);
    }
    Ok(BudgetOutcome::Success(TreeCover {
        trees,
        budget_used: budget,
        k,
        components,
    }))
}

/// Cuts `tree` into edge-disjoint subtrees: the first has cost below
/// `2 * budget`, every other one has cost in `[2 * budget, 4 * budget)`.
///
/// Works bottom-up from the lowest-index vertex. Each child hands its parent
/// an unemitted remainder (cost < 2B) which, together with the connecting
/// edge (<= B), forms a group of cost < 3B. A group reaching 2B is emitted on
/// its own; smaller groups are pooled at the parent and the pool is emitted
/// once it reaches 2B, so it stays below 4B. Pieces may share vertices.
pub fn decompose_tree(inst: &Instance, tree: &Tree, budget: f64) -> Result<Vec<Tree>> {
    if let Some(&(a, b)) = tree.edges().iter().find(|&&(a, b)| inst.dist(a, b) > budget) {
        return Err(Error::EdgeExceedsBudget {
            a: a.0,
            b: b.0,
            length: inst.dist(a, b),
            budget,
        });
    }
    let threshold = 2.0 * budget;
    let verts = tree.vertices();
    let root = 0;
    let children = tree.children(verts[root]);

    // Iterative post-order.
    let mut order = Vec::with_capacity(verts.len());
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        order.push(v);
        stack.extend(children[v].iter().copied());
    }

    let mut residual: Vec<(Vec<(PointId, PointId)>, f64)> = vec![(Vec::new(), 0.0); verts.len()];
    let mut emitted: Vec<Vec<(PointId, PointId)>> = Vec::new();
    for &v in order.iter().rev() {
        let mut pool: Vec<(PointId, PointId)> = Vec::new();
        let mut pool_cost = 0.0;
        for &u in &children[v] {
            let (mut group, below) = std::mem::take(&mut residual[u]);
            group.push((verts[v], verts[u]));
            let group_cost = below + inst.dist(verts[v], verts[u]);
            if group_cost >= threshold {
                emitted.push(group);
            } else {
                pool.extend(group);
                pool_cost += group_cost;
                if pool_cost >= threshold {
                    emitted.push(std::mem::take(&mut pool));
                    pool_cost = 0.0;
                }
            }
        }
        residual[v] = (pool, pool_cost);
    }

    let (rest, _) = std::mem::take(&mut residual[root]);
    let mut pieces = Vec::with_capacity(emitted.len() + 1);
    pieces.push(if rest.is_empty() {
        Tree::singleton(verts[root])
    } else {
        Tree::from_edges(inst, rest)?
    });
    for edges in emitted {
        pieces.push(Tree::from_edges(inst, edges)?);
    }
    Ok(pieces)
}

/// Smallest successful budget up to relative precision `eps`, searched over
/// `[min_distance / 2, mst_cost]`. The returned cover has at most `k` trees
/// and its costliest tree is within `4 (1 + eps)` of the optimum.
pub fn minmax_tree_cover(inst: &Instance, subset: &[PointId], k: usize, eps: f64) -> Result<TreeCover> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let subset = normalized_subset(inst, subset)?;
    let Some(min_d) = inst.min_distance(&subset) else {
        return Ok(TreeCover {
            trees: vec![Tree::singleton(subset[0])],
            budget_used: 0.0,
            k,
            components: vec![ComponentSummary {
                vertices: 1,
                mst_cost: 0.0,
                extra_trees: 0,
            }],
        });
    };

    let mut lo = min_d / 2.0;
    if let BudgetOutcome::Success(cover) = try_budget(inst, &subset, k, lo)? {
        return Ok(cover);
    }
    let mut hi = minimum_spanning_tree(inst, &subset)?.cost();
    let mut best = try_budget(inst, &subset, k, hi)?
        .into_cover()
        .expect("a single spanning tree always fits the full MST budget");
    while hi > lo * (1.0 + eps) {
        let mid = 0.5 * (lo + hi);
        match try_budget(inst, &subset, k, mid)? {
            BudgetOutcome::Success(cover) => {
                hi = mid;
                best = cover;
            }
            BudgetOutcome::Fail { .. } => lo = mid,
        }
    }

    // The least successful budget sits where an edge stops being heavy or a
    // component's tree count drops; try the edge lengths inside the bracket.
    let mut breakpoints: Vec<f64> = subset
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| subset[i + 1..].iter().map(move |&b| inst.dist(a, b)))
        .filter(|&d| d > lo && d < hi)
        .collect();
    breakpoints.sort_unstable_by(f64::total_cmp);
    breakpoints.dedup();
    for b in breakpoints {
        if let BudgetOutcome::Success(cover) = try_budget(inst, &subset, k, b)? {
            best = cover;
            break;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{line, unit_triangle};

    fn all(inst: &Instance) -> Vec<PointId> {
        inst.points().collect()
    }

    #[test]
    fn budget_probe_on_line() {
        let l = line(&[0.0, 1.0, 2.0, 3.0]);
        let cover = try_budget(&l, &all(&l), 2, 1.0).unwrap().into_cover().unwrap();
        assert_eq!(cover.components.len(), 1);
        assert_eq!(cover.components[0].extra_trees, 1);
        assert_eq!(cover.trees.len(), 2);
        assert_eq!(cover.max_tree_cost(), 2.0);
        assert!(l.points().all(|p| cover.covers(p)));

        assert_eq!(try_budget(&l, &all(&l), 1, 1.0).unwrap(), BudgetOutcome::Fail { required: 2 });
    }

    #[test]
    fn tiny_budget_gives_singletons() {
        let l = line(&[0.0, 1.0, 2.5, 3.0]);
        let cover = try_budget(&l, &all(&l), 4, 0.25).unwrap().into_cover().unwrap();
        assert_eq!(cover.trees.len(), 4);
        assert!(cover.trees.iter().all(|t| t.edges().is_empty()));
    }

    #[test]
    fn probe_rejects_bad_parameters() {
        let l = line(&[0.0, 1.0]);
        assert!(try_budget(&l, &all(&l), 1, 0.0).is_err());
        assert!(try_budget(&l, &all(&l), 0, 1.0).is_err());
        assert!(matches!(try_budget(&l, &[], 1, 1.0), Err(Error::EmptySubset)));
    }

    #[test]
    fn decompose_path_of_three() {
        let l = line(&[0.0, 1.0, 2.0, 3.0]);
        let t = minimum_spanning_tree(&l, &all(&l)).unwrap();
        let pieces = decompose_tree(&l, &t, 1.0).unwrap();
        let costs: Vec<f64> = pieces.iter().map(Tree::cost).collect();
        assert_eq!(costs, vec![1.0, 2.0]);
    }

    #[test]
    fn decompose_cheap_tree_is_itself() {
        let l = line(&[0.0, 1.0, 2.0]);
        let t = minimum_spanning_tree(&l, &all(&l)).unwrap();
        let pieces = decompose_tree(&l, &t, 5.0).unwrap();
        assert_eq!(pieces, vec![t]);
    }

    #[test]
    fn decompose_rejects_heavy_edges() {
        let l = line(&[0.0, 3.0]);
        let t = minimum_spanning_tree(&l, &all(&l)).unwrap();
        assert!(matches!(decompose_tree(&l, &t, 1.0), Err(Error::EdgeExceedsBudget { .. })));
    }

    #[test]
    fn search_examples() {
        let l = line(&[0.0, 1.0, 2.0, 3.0]);
        let cover = minmax_tree_cover(&l, &all(&l), 2, 1e-6).unwrap();
        assert_eq!(cover.max_tree_cost(), 2.0);
        assert_eq!(cover.budget_used, 1.0);

        let singles = minmax_tree_cover(&l, &all(&l), 4, 1e-6).unwrap();
        assert_eq!(singles.max_tree_cost(), 0.0);
        assert_eq!(singles.trees.len(), 4);

        let tri = unit_triangle([1.0; 3]);
        let one = minmax_tree_cover(&tri, &all(&tri), 1, 1e-6).unwrap();
        assert_eq!(one.trees.len(), 1);
        assert_eq!(one.max_tree_cost(), 2.0);

        let lone = minmax_tree_cover(&tri, &[PointId(2)], 3, 1e-6).unwrap();
        assert_eq!(lone.trees, vec![Tree::singleton(PointId(2))]);
    }
}
