//! Label-based, serializable views of results for JSON reports.

use serde::Serialize;

use crate::instance::{Instance, PointId};
use crate::mst::Tree;
use crate::oracle::{OracleResult, SearchBound, Witness};
use crate::planner::{InvariantCheck, PlanResult};
use crate::schedule::{CostValue, ScheduleDocument};
use crate::security::{AttackOutcome, MixResult};
use crate::treecover::TreeCover;

fn labels(inst: &Instance, ps: &[PointId]) -> Vec<String> {
    ps.iter().map(|&p| inst.label(p).to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeReport {
    pub vertices: Vec<String>,
    pub edges: Vec<[String; 2]>,
    pub cost: f64,
}

impl TreeReport {
    pub fn new(inst: &Instance, tree: &Tree) -> Self {
        TreeReport {
            vertices: labels(inst, tree.vertices()),
            edges: tree
                .edges()
                .iter()
                .map(|&(a, b)| [inst.label(a).to_string(), inst.label(b).to_string()])
                .collect(),
            cost: tree.cost(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverReport {
    pub k: usize,
    pub budget: f64,
    pub max_tree_cost: f64,
    pub trees: Vec<TreeReport>,
}

impl CoverReport {
    pub fn new(inst: &Instance, cover: &TreeCover) -> Self {
        CoverReport {
            k: cover.k,
            budget: cover.budget_used,
            max_tree_cost: cover.max_tree_cost(),
            trees: cover.trees.iter().map(|t| TreeReport::new(inst, t)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub index: u32,
    pub rounded_weight: f64,
    pub members: Vec<String>,
    pub theta: usize,
    pub cover: CoverReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ListReport {
    pub index: usize,
    pub lambda: usize,
    /// One-based tour numbers.
    pub tours: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanReport {
    pub schedule: ScheduleDocument,
    pub period_length: f64,
    pub classes: Vec<ClassReport>,
    pub tours: Vec<ScheduleDocument>,
    pub lists: Vec<ListReport>,
    #[serde(rename = "I")]
    pub last_list: usize,
    #[serde(rename = "J")]
    pub tour_count: usize,
    pub phases: usize,
    pub objective_inf: CostValue,
    pub objective_2: CostValue,
    pub lower_bound: f64,
    pub envelope_bound: f64,
    pub envelope_ratio: Option<f64>,
    pub checks: Vec<InvariantCheck>,
}

impl PlanReport {
    pub fn new(inst: &Instance, result: &PlanResult) -> Self {
        let d = &result.diagnostics;
        PlanReport {
            schedule: result.schedule.to_document(inst),
            period_length: result.schedule.period_length(inst).unwrap_or(f64::NAN),
            classes: result
                .rounded
                .classes
                .iter()
                .zip(&result.covers)
                .map(|(c, cover)| ClassReport {
                    index: c.index,
                    rounded_weight: c.rounded_weight,
                    members: labels(inst, &c.members),
                    theta: c.theta,
                    cover: CoverReport::new(inst, cover),
                })
                .collect(),
            tours: result.tours.iter().map(|t| t.schedule.to_document(inst)).collect(),
            lists: result
                .lists
                .iter()
                .map(|l| ListReport {
                    index: l.index,
                    lambda: l.lambda,
                    tours: l.tours.iter().map(|t| t + 1).collect(),
                })
                .collect(),
            last_list: result.last_list,
            tour_count: result.tour_count,
            phases: result.phases,
            objective_inf: d.objective_inf,
            objective_2: d.objective_2,
            lower_bound: d.lower_bound,
            envelope_bound: d.envelope_bound,
            envelope_ratio: d.envelope_ratio,
            checks: d.checks.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessReport {
    Schedule { visits: Vec<String> },
    Partition { parts: Vec<Vec<String>> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub value: CostValue,
    pub witness: WitnessReport,
    pub search_bound: SearchBound,
}

impl OracleReport {
    pub fn new(inst: &Instance, r: &OracleResult) -> Self {
        OracleReport {
            value: r.value,
            witness: match &r.witness {
                Witness::Schedule { visits } => WitnessReport::Schedule {
                    visits: labels(inst, visits.visits()),
                },
                Witness::Partition { parts } => WitnessReport::Partition {
                    parts: parts.iter().map(|p| labels(inst, p)).collect(),
                },
            },
            search_bound: r.search_bound.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackReport {
    pub target: String,
    pub duration: Option<f64>,
    pub utility: CostValue,
}

impl AttackReport {
    pub fn new(inst: &Instance, a: &AttackOutcome) -> Self {
        AttackReport {
            target: inst.label(a.target).to_string(),
            duration: a.duration,
            utility: a.utility,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixReport {
    pub schedule: ScheduleDocument,
    pub entries_used: Vec<usize>,
    pub copies: Vec<usize>,
    pub q: f64,
    pub longest_period: f64,
    pub scale: f64,
    pub degenerate: bool,
}

impl MixReport {
    pub fn new(inst: &Instance, m: &MixResult) -> Self {
        MixReport {
            schedule: m.schedule.to_document(inst),
            entries_used: m.parts.iter().map(|p| p.entry).collect(),
            copies: m.parts.iter().map(|p| p.copies).collect(),
            q: m.q,
            longest_period: m.longest_period,
            scale: m.scale,
            degenerate: m.degenerate,
        }
    }
}
