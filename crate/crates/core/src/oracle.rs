//! Exact and exhaustive baselines for small instances.
//!
//! These are exponential by nature; every entry point enforces a hard size
//! limit and reports what it searched. The schedule-space search is only an
//! upper bound on the true optimum since optimal periods may be longer than
//! any fixed limit.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{Instance, PointId};
use crate::mst::minimum_spanning_tree;
use crate::schedule::{cost_of_lengths, CostValue, Exponent, Schedule};

/// Held-Karp keeps a table of `2^(m-1) * m` entries.
pub const HELD_KARP_MAX_POINTS: usize = 16;
/// Schedule enumeration visits about `(n-1)^max_period` sequences.
pub const BRUTE_FORCE_MAX_POINTS: usize = 6;
pub const BRUTE_FORCE_MAX_PERIOD: usize = 10;
/// Set partitions of 10 points into at most 4 blocks number about 44k.
pub const PARTITION_MAX_POINTS: usize = 10;
pub const PARTITION_MAX_PARTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Schedule { visits: Schedule },
    Partition { parts: Vec<Vec<PointId>> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchBound {
    /// True when `value` is the exact optimum of the stated problem.
    pub exact: bool,
    pub max_period: Option<usize>,
    pub max_parts: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub value: CostValue,
    pub witness: Witness,
    pub search_bound: SearchBound,
}

fn checked_subset(inst: &Instance, subset: &[PointId]) -> Result<Vec<PointId>> {
    let mut s = subset.to_vec();
    s.sort_unstable();
    s.dedup();
    for &p in &s {
        inst.check_point(p)?;
    }
    Ok(s)
}

/// Optimal closed tour through `subset` by dynamic programming over subsets.
pub fn held_karp_tsp(inst: &Instance, subset: &[PointId]) -> Result<OracleResult> {
    let pts = checked_subset(inst, subset)?;
    if pts.len() > HELD_KARP_MAX_POINTS {
        return Err(Error::OracleLimit(format!(
            "Held-Karp supports at most {HELD_KARP_MAX_POINTS} points, got {}",
            pts.len()
        )));
    }
    let exact = SearchBound {
        exact: true,
        max_period: None,
        max_parts: None,
    };
    if pts.len() < 2 {
        let visits = Schedule::new(pts.first().copied().into_iter().collect())?;
        return Ok(OracleResult {
            value: CostValue::Finite(0.0),
            witness: Witness::Schedule { visits },
            search_bound: exact,
        });
    }
    let (value, order) = held_karp(inst, &pts);
    Ok(OracleResult {
        value: CostValue::Finite(value),
        witness: Witness::Schedule {
            visits: Schedule::new(order)?,
        },
        search_bound: exact,
    })
}

/// Tour cost and order, starting from `pts[0]`. Requires `pts.len() >= 2`.
fn held_karp(inst: &Instance, pts: &[PointId]) -> (f64, Vec<PointId>) {
    // Masks range over pts[1..]; entry [mask][j] is the shortest path from
    // pts[0] through exactly `mask`, ending at pts[j + 1].
    let m = pts.len() - 1;
    let full = 1usize << m;
    let d = |a: usize, b: usize| inst.dist(pts[a], pts[b]);
    let mut cost = vec![f64::INFINITY; full * m];
    let mut parent = vec![usize::MAX; full * m];
    for j in 0..m {
        cost[(1 << j) * m + j] = d(0, j + 1);
    }
    for mask in 1..full {
        for j in 0..m {
            if mask & (1 << j) == 0 {
                continue;
            }
            let here = cost[mask * m + j];
            if here.is_infinite() {
                continue;
            }
            for k in 0..m {
                if mask & (1 << k) != 0 {
                    continue;
                }
                let next = mask | (1 << k);
                let cand = here + d(j + 1, k + 1);
                if cand < cost[next * m + k] {
                    cost[next * m + k] = cand;
                    parent[next * m + k] = j;
                }
            }
        }
    }
    let last_mask = full - 1;
    let (mut end, mut best) = (0, f64::INFINITY);
    for j in 0..m {
        let total = cost[last_mask * m + j] + d(j + 1, 0);
        if total < best {
            best = total;
            end = j;
        }
    }
    let mut order = Vec::with_capacity(pts.len());
    let (mut mask, mut j) = (last_mask, end);
    while j != usize::MAX {
        order.push(pts[j + 1]);
        let prev = parent[mask * m + j];
        mask &= !(1 << j);
        j = prev;
    }
    order.push(pts[0]);
    order.reverse();
    (best, order)
}

/// Minimum of the weighted objective over every cyclic visit sequence of
/// length `n..=max_period` that visits all points, starts at point 0 and has
/// no immediate repeats. An upper bound on the unrestricted optimum.
pub fn brute_force_weighted_opt(inst: &Instance, p: Exponent, max_period: usize) -> Result<OracleResult> {
    let n = inst.len();
    if n > BRUTE_FORCE_MAX_POINTS || max_period > BRUTE_FORCE_MAX_PERIOD {
        return Err(Error::OracleLimit(format!(
            "schedule enumeration supports n <= {BRUTE_FORCE_MAX_POINTS} and max_period <= \
             {BRUTE_FORCE_MAX_PERIOD}, got n = {n}, max_period = {max_period}"
        )));
    }
    if max_period < n {
        return Err(Error::OracleLimit(format!(
            "max_period {max_period} cannot visit all {n} points"
        )));
    }
    let search_bound = SearchBound {
        exact: false,
        max_period: Some(max_period),
        max_parts: None,
    };
    if n == 1 {
        return Ok(OracleResult {
            value: CostValue::Finite(0.0),
            witness: Witness::Schedule {
                visits: Schedule::from_indices(&[0])?,
            },
            search_bound,
        });
    }

    // Split the search by the second visit; merge keeps the lexicographically
    // first optimum so the witness does not depend on scheduling.
    let best = (1..n)
        .into_par_iter()
        .map(|second| {
            let mut search = Enumeration::new(inst, p, max_period);
            search.seq.extend([0, second]);
            search.visited[0] += 1;
            search.visited[second] += 1;
            search.run();
            search.best
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (Some(x), Some(y)) => Some(if y.0 < x.0 { y } else { x }),
                (x, None) => x,
                (None, y) => y,
            },
        );
    let (value, seq) = best.expect("a sequence visiting every point exists when max_period >= n");
    Ok(OracleResult {
        value: CostValue::Finite(value),
        witness: Witness::Schedule {
            visits: Schedule::from_indices(&seq)?,
        },
        search_bound,
    })
}

struct Enumeration<'a> {
    inst: &'a Instance,
    p: Exponent,
    max_period: usize,
    seq: Vec<usize>,
    visited: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
}

impl<'a> Enumeration<'a> {
    fn new(inst: &'a Instance, p: Exponent, max_period: usize) -> Self {
        Enumeration {
            inst,
            p,
            max_period,
            seq: Vec::with_capacity(max_period),
            visited: vec![0; inst.len()],
            best: None,
        }
    }

    fn run(&mut self) {
        let n = self.inst.len();
        let len = self.seq.len();
        let last = *self.seq.last().unwrap();
        if last != 0 && self.visited.iter().all(|&c| c > 0) {
            self.consider();
        }
        if len == self.max_period {
            return;
        }
        let missing = self.visited.iter().filter(|&&c| c == 0).count();
        if len + missing > self.max_period {
            return;
        }
        for next in 0..n {
            if next == last {
                continue;
            }
            self.seq.push(next);
            self.visited[next] += 1;
            self.run();
            self.visited[next] -= 1;
            self.seq.pop();
        }
    }

    fn consider(&mut self) {
        let value = weighted_cost_of_sequence(self.inst, &self.seq, self.p);
        if self.best.as_ref().is_none_or(|(b, _)| value < *b) {
            self.best = Some((value, self.seq.clone()));
        }
    }
}

/// Weighted objective of a sequence already known to visit every point with
/// no cyclic repeats.
fn weighted_cost_of_sequence(inst: &Instance, seq: &[usize], p: Exponent) -> f64 {
    let n = inst.len();
    let len = seq.len();
    let mut clock = 0.0;
    let mut first = vec![f64::NAN; n];
    let mut last = vec![0.0; n];
    let mut lengths: Vec<Vec<f64>> = vec![Vec::new(); n];
    for k in 0..len {
        let x = seq[k];
        if first[x].is_nan() {
            first[x] = clock;
        } else {
            lengths[x].push(clock - last[x]);
        }
        last[x] = clock;
        clock += inst.dist(PointId(x), PointId(seq[(k + 1) % len]));
    }
    (0..n)
        .map(|x| {
            lengths[x].push(clock - last[x] + first[x]);
            inst.weights()[x] * cost_of_lengths(&lengths[x], p)
        })
        .fold(0.0, f64::max)
}

/// Best split of `subset` into at most `k` nonempty parts, scored by the
/// largest MST cost among the parts. Covers may overlap while partitions may
/// not, so this upper-bounds the min-max tree cover optimum.
pub fn partition_tree_cover_oracle(inst: &Instance, subset: &[PointId], k: usize) -> Result<OracleResult> {
    let pts = checked_subset(inst, subset)?;
    if pts.is_empty() {
        return Err(Error::EmptySubset);
    }
    if pts.len() > PARTITION_MAX_POINTS || k > PARTITION_MAX_PARTS || k == 0 {
        return Err(Error::OracleLimit(format!(
            "partition oracle supports 1 <= k <= {PARTITION_MAX_PARTS} and at most \
             {PARTITION_MAX_POINTS} points, got k = {k}, {} points",
            pts.len()
        )));
    }
    let m = pts.len();
    let mut mst_cost = vec![0.0; 1 << m];
    for (mask, slot) in mst_cost.iter_mut().enumerate().skip(1) {
        let members: Vec<PointId> = (0..m).filter(|i| mask & (1 << i) != 0).map(|i| pts[i]).collect();
        *slot = minimum_spanning_tree(inst, &members)?.cost();
    }

    // Restricted growth strings: block[i] <= 1 + max(block[..i]).
    let mut block = vec![0usize; m];
    let mut best = (f64::INFINITY, Vec::new());
    fn recurse(
        i: usize,
        used: usize,
        k: usize,
        block: &mut Vec<usize>,
        mst_cost: &[f64],
        best: &mut (f64, Vec<usize>),
    ) {
        let m = block.len();
        if i == m {
            let mut masks = vec![0usize; used];
            for (v, &b) in block.iter().enumerate() {
                masks[b] |= 1 << v;
            }
            let value = masks.iter().map(|&mk| mst_cost[mk]).fold(0.0, f64::max);
            if value < best.0 {
                *best = (value, block.clone());
            }
            return;
        }
        for b in 0..(used + 1).min(k) {
            block[i] = b;
            recurse(i + 1, used.max(b + 1), k, block, mst_cost, best);
        }
    }
    recurse(0, 0, k, &mut block, &mst_cost, &mut best);

    let parts_used = best.1.iter().copied().max().map_or(0, |b| b + 1);
    let mut parts = vec![Vec::new(); parts_used];
    for (v, &b) in best.1.iter().enumerate() {
        parts[b].push(pts[v]);
    }
    Ok(OracleResult {
        value: CostValue::Finite(best.0),
        witness: Witness::Partition { parts },
        search_bound: SearchBound {
            exact: true,
            max_period: None,
            max_parts: Some(k),
        },
    })
}

/// A value no larger than the optimal weighted max-absence objective.
///
/// For every weight value `w`, the points of weight at least `w` must all be
/// visited during the longest absence among them, so `w * TSP(those points)`
/// is a lower bound; tours through more than [`HELD_KARP_MAX_POINTS`] points
/// fall back to the MST cost. Separately, visiting `x` and `y` forces an
/// absence of at least `d(x, y)` at a weight-1 point.
pub fn lower_bound(inst: &Instance) -> Result<f64> {
    let mut thresholds: Vec<f64> = inst.weights().to_vec();
    thresholds.sort_unstable_by(|a, b| b.total_cmp(a));
    thresholds.dedup();

    let mut bound = inst.diameter();
    for w in thresholds {
        let heavy: Vec<PointId> = inst.points().filter(|&p| inst.weight(p) >= w).collect();
        let tour = if heavy.len() <= HELD_KARP_MAX_POINTS {
            held_karp_tsp(inst, &heavy)?.value.as_f64()
        } else {
            minimum_spanning_tree(inst, &heavy)?.cost()
        };
        bound = bound.max(w * tour);
    }
    Ok(bound)
}
