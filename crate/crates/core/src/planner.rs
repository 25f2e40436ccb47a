//! The logarithmic-factor planner.
//!
//! Weights are rounded down to powers of two and points grouped into classes
//! `i` of rounded weight `2^-i`. Class `i` is covered by at most
//! `theta_i = min(n_i, 2^i)` trees whose shortcut tours are enumerated
//! heaviest class first as `sigma_1..sigma_J`. Tours are then split into
//! lists `L_0..L_I`, list `i` holding `sigma_{2^i}..sigma_{2^(i+1)-1}` (the
//! last list takes whatever remains). Phase `j` runs tour `j mod lambda_i` of
//! every list in order, so list `i` is swept once every `lambda_i` phases.

use num_integer::Integer;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{Instance, PointId};
use crate::mst::{euler_shortcut, minimum_spanning_tree};
use crate::oracle::lower_bound;
use crate::schedule::{CostValue, Exponent, Schedule};
use crate::treecover::{minmax_tree_cover, TreeCover};

/// Multiplier of the certified lower bound that the planner's max-absence
/// objective never exceeds, per list: 2 for weight rounding times
/// (4 for the tree cover x 2 for shortcutting + 1 for the hop between tours).
pub const ENVELOPE_FACTOR: f64 = 18.0;

/// Relative slack for floating-point comparisons in the run-time checks.
const CHECK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightClass {
    pub index: u32,
    pub rounded_weight: f64,
    pub members: Vec<PointId>,
    pub theta: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundedWeights {
    /// Rounded weight per point.
    pub rounded: Vec<f64>,
    /// Nonempty classes in ascending index order.
    pub classes: Vec<WeightClass>,
}

/// `min(n, 2^i)` without overflowing for large class indices.
fn class_theta(members: usize, index: u32) -> usize {
    1usize.checked_shl(index).map_or(members, |cap| members.min(cap))
}

/// Rounds each weight down to the nearest power of two and groups points by
/// the resulting exponent. Expects normalized weights (maximum 1).
pub fn round_weights(inst: &Instance) -> RoundedWeights {
    let mut rounded = Vec::with_capacity(inst.len());
    let mut classes: Vec<WeightClass> = Vec::new();
    for p in inst.points() {
        let w = inst.weight(p);
        let (mut index, mut level) = (0u32, 1.0f64);
        while w < level {
            level *= 0.5;
            index += 1;
        }
        rounded.push(level);
        match classes.iter_mut().find(|c| c.index == index) {
            Some(c) => c.members.push(p),
            None => classes.push(WeightClass {
                index,
                rounded_weight: level,
                members: vec![p],
                theta: 0,
            }),
        }
    }
    classes.sort_by_key(|c| c.index);
    for c in &mut classes {
        c.theta = class_theta(c.members.len(), c.index);
    }
    RoundedWeights { rounded, classes }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlannedTour {
    pub class: u32,
    pub schedule: Schedule,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassTours {
    /// One cover per class, parallel to the input classes.
    pub covers: Vec<TreeCover>,
    /// `sigma_1..sigma_J`, heaviest class first.
    pub tours: Vec<PlannedTour>,
}

/// Covers each class by `theta_i` trees and shortcuts every tree into a tour
/// starting at its lowest-index vertex.
pub fn build_class_tours(inst: &Instance, classes: &[WeightClass], eps: f64) -> Result<ClassTours> {
    let mut covers = Vec::with_capacity(classes.len());
    let mut tours = Vec::new();
    for class in classes {
        let cover = minmax_tree_cover(inst, &class.members, class.theta, eps)?;
        for tree in &cover.trees {
            let schedule = euler_shortcut(tree, tree.root())?;
            let length = schedule.period_length(inst)?;
            tours.push(PlannedTour {
                class: class.index,
                schedule,
                length,
            });
        }
        covers.push(cover);
    }
    Ok(ClassTours { covers, tours })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TourList {
    pub index: usize,
    /// Zero-based positions into the tour enumeration.
    pub tours: Vec<usize>,
    pub lambda: usize,
}

/// `ceil(log2(J + 1)) - 1`.
pub fn last_list_index(tour_count: usize) -> usize {
    let bits = usize::BITS - tour_count.leading_zeros();
    // ceil(log2(J+1)) is the bit length of J.
    bits as usize - 1
}

/// Splits `J` tours into lists of doubling length.
pub fn build_lists(tour_count: usize) -> Result<Vec<TourList>> {
    if tour_count == 0 {
        return Err(Error::InvalidParameter("at least one tour is required".into()));
    }
    let last = last_list_index(tour_count);
    let lists = (0..=last)
        .map(|i| {
            let start = 1usize << i;
            let end = if i == last { tour_count } else { (1usize << (i + 1)) - 1 };
            TourList {
                index: i,
                tours: (start - 1..end).collect(),
                lambda: end + 1 - start,
            }
        })
        .collect();
    Ok(lists)
}

/// Number of phases after which the phase pattern repeats.
pub fn phase_count(lists: &[TourList]) -> usize {
    lists.iter().fold(1, |acc, l| acc.lcm(&l.lambda))
}

/// One full period of the phase loop, concatenated.
pub fn emit_schedule(lists: &[TourList], tours: &[Schedule]) -> Result<Schedule> {
    let phases = phase_count(lists);
    let mut visits = Vec::new();
    for phase in 0..phases {
        for list in lists {
            let tour = list.tours[phase % list.lambda];
            let schedule = tours
                .get(tour)
                .ok_or_else(|| Error::InvalidParameter(format!("list refers to missing tour {tour}")))?;
            visits.extend_from_slice(schedule.visits());
        }
    }
    Schedule::new(visits)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanDiagnostics {
    pub objective_inf: CostValue,
    pub objective_2: CostValue,
    pub lower_bound: f64,
    /// `ENVELOPE_FACTOR * (I + 1) * lower_bound`.
    pub envelope_bound: f64,
    /// `objective_inf / lower_bound`, absent when the bound is zero.
    pub envelope_ratio: Option<f64>,
    pub checks: Vec<InvariantCheck>,
}

impl PlanDiagnostics {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanResult {
    pub eps: f64,
    pub schedule: Schedule,
    pub rounded: RoundedWeights,
    pub covers: Vec<TreeCover>,
    pub tours: Vec<PlannedTour>,
    pub lists: Vec<TourList>,
    /// Index of the last list.
    pub last_list: usize,
    pub tour_count: usize,
    pub phases: usize,
    pub diagnostics: PlanDiagnostics,
}

/// Runs the full pipeline and checks its guarantees on the result.
pub fn plan(inst: &Instance, eps: f64) -> Result<PlanResult> {
    let rounded = round_weights(inst);
    let ClassTours { covers, tours } = build_class_tours(inst, &rounded.classes, eps)?;
    let lists = build_lists(tours.len())?;
    let schedules: Vec<Schedule> = tours.iter().map(|t| t.schedule.clone()).collect();
    let schedule = emit_schedule(&lists, &schedules)?;
    let last_list = lists.len() - 1;

    let objective_inf = schedule.weighted_objective(inst, Exponent::Infinity)?;
    let objective_2 = schedule.weighted_objective(inst, Exponent::QUADRATIC)?;
    let lb = lower_bound(inst)?;
    let envelope_bound = ENVELOPE_FACTOR * (last_list + 1) as f64 * lb;
    let envelope_ratio = objective_inf.finite().filter(|_| lb > 0.0).map(|v| v / lb);

    let mut checks = vec![
        check_list_weights(&rounded, &lists, &tours),
        check_cover_bound(inst, &rounded, &covers, eps)?,
        InvariantCheck {
            name: "visits_every_point",
            passed: objective_inf.is_finite(),
            detail: format!("{} of {} points visited", count_visited(&schedule, inst), inst.len()),
        },
    ];
    checks.push(InvariantCheck {
        name: "envelope",
        passed: objective_inf.as_f64() <= envelope_bound * (1.0 + CHECK_TOLERANCE),
        detail: format!("objective {objective_inf} vs bound {envelope_bound}"),
    });

    Ok(PlanResult {
        eps,
        phases: phase_count(&lists),
        tour_count: tours.len(),
        schedule,
        rounded,
        covers,
        tours,
        lists,
        last_list,
        diagnostics: PlanDiagnostics {
            objective_inf,
            objective_2,
            lower_bound: lb,
            envelope_bound,
            envelope_ratio,
            checks,
        },
    })
}

fn count_visited(s: &Schedule, inst: &Instance) -> usize {
    inst.points().filter(|&p| s.contains(p)).count()
}

/// Every point on a tour of list `i` has rounded weight at most `2^-i`.
fn check_list_weights(rounded: &RoundedWeights, lists: &[TourList], tours: &[PlannedTour]) -> InvariantCheck {
    let mut failures = Vec::new();
    for list in lists {
        let cap = 0.5f64.powi(list.index as i32);
        for &t in &list.tours {
            for &p in tours[t].schedule.visits() {
                if rounded.rounded[p.0] > cap {
                    failures.push(format!("point {} (rounded weight {}) in list {}", p.0, rounded.rounded[p.0], list.index));
                }
            }
        }
    }
    InvariantCheck {
        name: "list_for_weight",
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{} lists checked", lists.len())
        } else {
            failures.join("; ")
        },
    }
}

/// For every class with `theta_i = 2^i`:
/// `theta_i * max tree cost <= 4 (1 + eps) * MST(class)`.
fn check_cover_bound(
    inst: &Instance,
    rounded: &RoundedWeights,
    covers: &[TreeCover],
    eps: f64,
) -> Result<InvariantCheck> {
    let mut failures = Vec::new();
    let mut checked = 0;
    for (class, cover) in rounded.classes.iter().zip(covers) {
        if 1usize.checked_shl(class.index) != Some(class.theta) {
            continue;
        }
        checked += 1;
        let mst = minimum_spanning_tree(inst, &class.members)?.cost();
        let lhs = class.theta as f64 * cover.max_tree_cost();
        let rhs = 4.0 * (1.0 + eps) * mst;
        if lhs > rhs {
            failures.push(format!("class {}: {lhs} > {rhs}", class.index));
        }
    }
    Ok(InvariantCheck {
        name: "key_lower_bound",
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{checked} saturated classes checked")
        } else {
            failures.join("; ")
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{line, unit_triangle};

    #[test]
    fn rounding() {
        let r = round_weights(&unit_triangle([1.0, 0.5, 0.5]));
        assert_eq!(r.classes.len(), 2);
        assert_eq!((r.classes[0].index, r.classes[0].members.len()), (0, 1));
        assert_eq!((r.classes[1].index, r.classes[1].members.len()), (1, 2));

        let r = round_weights(&unit_triangle([1.0, 0.7, 0.25]));
        assert_eq!(r.rounded, vec![1.0, 0.5, 0.25]);
        assert_eq!(r.classes.iter().map(|c| c.index).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn theta_is_capped_by_class_size() {
        assert_eq!(class_theta(5, 0), 1);
        assert_eq!(class_theta(5, 2), 4);
        assert_eq!(class_theta(3, 2), 3);
        assert_eq!(class_theta(7, 200), 7);
    }

    #[test]
    fn list_structure() {
        assert_eq!(last_list_index(1), 0);
        assert_eq!(last_list_index(3), 1);
        assert_eq!(last_list_index(4), 2);
        assert_eq!(last_list_index(7), 2);
        assert_eq!(last_list_index(8), 3);

        let lists = build_lists(3).unwrap();
        assert_eq!(lists.iter().map(|l| l.tours.clone()).collect::<Vec<_>>(), vec![vec![0], vec![1, 2]]);
        assert_eq!(lists.iter().map(|l| l.lambda).collect::<Vec<_>>(), vec![1, 2]);

        let lambdas: Vec<usize> = build_lists(7).unwrap().iter().map(|l| l.lambda).collect();
        assert_eq!(lambdas, vec![1, 2, 4]);
        assert_eq!(phase_count(&build_lists(7).unwrap()), 4);

        let lambdas: Vec<usize> = build_lists(5).unwrap().iter().map(|l| l.lambda).collect();
        assert_eq!(lambdas, vec![1, 2, 2]);

        assert!(build_lists(0).is_err());
    }

    #[test]
    fn unit_triangle_trace() {
        let inst = unit_triangle([1.0, 0.5, 0.5]);
        let rounded = round_weights(&inst);
        let ct = build_class_tours(&inst, &rounded.classes, 1e-6).unwrap();
        let visits: Vec<Vec<usize>> = ct
            .tours
            .iter()
            .map(|t| t.schedule.visits().iter().map(|p| p.0).collect())
            .collect();
        assert_eq!(visits, vec![vec![0], vec![1], vec![2]]);

        let result = plan(&inst, 1e-6).unwrap();
        assert_eq!(result.schedule, Schedule::from_indices(&[0, 1, 0, 2]).unwrap());
        assert_eq!(result.phases, 2);
        assert_eq!(result.diagnostics.objective_inf, CostValue::Finite(2.0));
        assert_eq!(result.diagnostics.objective_2, CostValue::Finite(2.0));
        assert_eq!(result.diagnostics.lower_bound, 1.5);
        assert!(result.diagnostics.all_passed());
    }

    #[test]
    fn uniform_weights_give_one_tour() {
        let inst = line(&[0.0, 1.0, 2.0, 3.0]);
        let result = plan(&inst, 1e-6).unwrap();
        assert_eq!(result.tour_count, 1);
        let len = result.schedule.period_length(&inst).unwrap();
        assert_eq!(result.diagnostics.objective_inf, CostValue::Finite(len));
    }

    #[test]
    fn single_point() {
        let inst = Instance::new(vec!["a".into()], vec![3.0], vec![vec![0.0]]).unwrap();
        let result = plan(&inst, 1e-6).unwrap();
        assert_eq!(result.schedule.visits(), &[PointId(0)]);
        assert_eq!(result.diagnostics.objective_inf, CostValue::Finite(0.0));
        assert_eq!(result.diagnostics.objective_2, CostValue::Finite(0.0));
        assert!(result.diagnostics.all_passed());
    }

    #[test]
    fn emit_single_tour() {
        let s = Schedule::from_indices(&[2, 0, 1]).unwrap();
        let lists = build_lists(1).unwrap();
        assert_eq!(emit_schedule(&lists, std::slice::from_ref(&s)).unwrap(), s);
    }
}
