//! Python bindings. Points are addressed by label; unbounded costs come back
//! as `float("inf")`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use patrol_core::oracle;
use patrol_core::report::PlanReport;
use patrol_core::security::{self, MixedStrategy};
use patrol_core::treecover;
use patrol_core::{CostValue, Exponent, GeneratorSpec, PointId};

fn err(e: patrol_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn cost(c: CostValue) -> f64 {
    c.as_f64()
}

#[derive(FromPyObject)]
enum ExponentArg {
    Number(f64),
    Text(String),
}

impl ExponentArg {
    fn get(&self) -> PyResult<Exponent> {
        match self {
            ExponentArg::Number(p) if p.is_infinite() => Ok(Exponent::Infinity),
            ExponentArg::Number(p) => Exponent::finite(*p).map_err(err),
            ExponentArg::Text(s) => s.parse().map_err(err),
        }
    }
}

fn exponent(p: Option<ExponentArg>) -> PyResult<Exponent> {
    p.map_or(Ok(Exponent::Infinity), |p| p.get())
}

#[pyclass(frozen, skip_from_py_object, module = "patrol")]
#[derive(Clone)]
pub struct Instance {
    inner: patrol_core::Instance,
}

impl Instance {
    fn ids(&self, labels: Option<Vec<String>>) -> PyResult<Vec<PointId>> {
        match labels {
            None => Ok(self.inner.points().collect()),
            Some(ls) => ls.iter().map(|l| self.inner.point_by_label(l).map_err(err)).collect(),
        }
    }

    fn id(&self, label: &str) -> PyResult<PointId> {
        self.inner.point_by_label(label).map_err(err)
    }

    fn labels_of(&self, ps: &[PointId]) -> Vec<String> {
        ps.iter().map(|&p| self.inner.label(p).to_string()).collect()
    }
}

#[pymethods]
impl Instance {
    /// Explicit distance matrix; weights are normalized to a maximum of 1.
    #[new]
    fn new(labels: Vec<String>, weights: Vec<f64>, dist: Vec<Vec<f64>>) -> PyResult<Self> {
        patrol_core::Instance::new(labels, weights, dist)
            .map(|inner| Instance { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn from_coords(labels: Vec<String>, weights: Vec<f64>, coords: Vec<[f64; 2]>) -> PyResult<Self> {
        patrol_core::Instance::from_coords(labels, weights, &coords)
            .map(|inner| Instance { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        patrol_core::Instance::from_json(text)
            .map(|inner| Instance { inner })
            .map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (n, weights = "random", geometry = "euclidean-plane", seed = 0))]
    fn generate(n: usize, weights: &str, geometry: &str, seed: u64) -> PyResult<Self> {
        let spec = GeneratorSpec {
            n,
            weight_law: weights.parse().map_err(err)?,
            geometry: geometry.parse().map_err(err)?,
        };
        patrol_core::generate_random(&spec, seed)
            .map(|inner| Instance { inner })
            .map_err(err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    fn dist(&self, a: &str, b: &str) -> PyResult<f64> {
        Ok(self.inner.dist(self.id(a)?, self.id(b)?))
    }

    fn diameter(&self) -> f64 {
        self.inner.diameter()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Instance(n={})", self.inner.len())
    }
}

#[pyclass(frozen, from_py_object, module = "patrol")]
#[derive(Clone)]
pub struct Schedule {
    inner: patrol_core::Schedule,
    labels: Vec<String>,
}

impl Schedule {
    fn wrap(inst: &Instance, inner: patrol_core::Schedule) -> Self {
        Schedule {
            labels: inst.labels_of(inner.visits()),
            inner,
        }
    }

    fn checked(&self, inst: &Instance) -> PyResult<()> {
        self.inner.check_against(&inst.inner).map_err(err)?;
        if inst.labels_of(self.inner.visits()) != self.labels {
            return Err(PyValueError::new_err("schedule was built for a different instance"));
        }
        Ok(())
    }
}

#[pymethods]
impl Schedule {
    /// One period of visits, by label. Immediate repeats are collapsed.
    #[new]
    fn new(instance: &Instance, visits: Vec<String>) -> PyResult<Self> {
        let inner = patrol_core::Schedule::from_labels(&instance.inner, &visits).map_err(err)?;
        Ok(Schedule::wrap(instance, inner))
    }

    #[staticmethod]
    fn from_json(instance: &Instance, text: &str) -> PyResult<Self> {
        let inner = patrol_core::Schedule::from_json(&instance.inner, text).map_err(err)?;
        Ok(Schedule::wrap(instance, inner))
    }

    #[getter]
    fn visits(&self) -> Vec<String> {
        self.labels.clone()
    }

    fn period_length(&self, instance: &Instance) -> PyResult<f64> {
        self.checked(instance)?;
        self.inner.period_length(&instance.inner).map_err(err)
    }

    /// Cyclic absence lengths of `point`, or None if it is never visited.
    fn absence_lengths(&self, instance: &Instance, point: &str) -> PyResult<Option<Vec<f64>>> {
        self.checked(instance)?;
        let profile = self.inner.absence_profile(instance.id(point)?, &instance.inner).map_err(err)?;
        Ok(profile.map(|p| p.lengths))
    }

    #[pyo3(signature = (instance, point, p = None))]
    fn point_cost(&self, instance: &Instance, point: &str, p: Option<ExponentArg>) -> PyResult<f64> {
        self.checked(instance)?;
        let c = self.inner.point_cost(instance.id(point)?, &instance.inner, exponent(p)?);
        c.map(cost).map_err(err)
    }

    #[pyo3(signature = (instance, p = None))]
    fn weighted_objective(&self, instance: &Instance, p: Option<ExponentArg>) -> PyResult<f64> {
        self.checked(instance)?;
        self.inner.weighted_objective(&instance.inner, exponent(p)?).map(cost).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Schedule({:?})", self.labels)
    }
}

#[pyclass(frozen, module = "patrol")]
pub struct PlanResult {
    #[pyo3(get)]
    schedule: Schedule,
    #[pyo3(get)]
    objective_inf: f64,
    #[pyo3(get)]
    objective_2: f64,
    #[pyo3(get)]
    lower_bound: f64,
    #[pyo3(get)]
    envelope_bound: f64,
    /// Index of the last tour list.
    #[pyo3(get)]
    last_list: usize,
    #[pyo3(get)]
    tour_count: usize,
    #[pyo3(get)]
    phases: usize,
    /// `(name, passed, detail)` per run-time check.
    #[pyo3(get)]
    checks: Vec<(String, bool, String)>,
    report: String,
}

#[pymethods]
impl PlanResult {
    /// Full plan report as JSON.
    fn report_json(&self) -> String {
        self.report.clone()
    }

    fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.1)
    }
}

#[pyfunction]
#[pyo3(signature = (instance, eps = 1e-6))]
fn plan(instance: &Instance, eps: f64) -> PyResult<PlanResult> {
    let r = patrol_core::plan(&instance.inner, eps).map_err(err)?;
    let d = &r.diagnostics;
    let report = serde_json_string(&PlanReport::new(&instance.inner, &r));
    Ok(PlanResult {
        schedule: Schedule::wrap(instance, r.schedule.clone()),
        objective_inf: cost(d.objective_inf),
        objective_2: cost(d.objective_2),
        lower_bound: d.lower_bound,
        envelope_bound: d.envelope_bound,
        last_list: r.last_list,
        tour_count: r.tour_count,
        phases: r.phases,
        checks: d
            .checks
            .iter()
            .map(|c| (c.name.to_string(), c.passed, c.detail.clone()))
            .collect(),
        report,
    })
}

fn serde_json_string<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes")
}

/// `(length, tour labels)` of the shortest closed tour through `subset`.
#[pyfunction]
#[pyo3(signature = (instance, subset = None))]
fn held_karp_tsp(instance: &Instance, subset: Option<Vec<String>>) -> PyResult<(f64, Vec<String>)> {
    let r = oracle::held_karp_tsp(&instance.inner, &instance.ids(subset)?).map_err(err)?;
    Ok((cost(r.value), witness_visits(instance, &r.witness)))
}

fn witness_visits(instance: &Instance, w: &oracle::Witness) -> Vec<String> {
    match w {
        oracle::Witness::Schedule { visits } => instance.labels_of(visits.visits()),
        oracle::Witness::Partition { .. } => Vec::new(),
    }
}

/// `(value, best schedule labels)` over all periods up to `max_period` visits.
#[pyfunction]
#[pyo3(signature = (instance, p = None, max_period = None))]
fn brute_force_weighted_opt(
    instance: &Instance,
    p: Option<ExponentArg>,
    max_period: Option<usize>,
) -> PyResult<(f64, Vec<String>)> {
    let max_period = max_period.unwrap_or(instance.inner.len());
    let r = oracle::brute_force_weighted_opt(&instance.inner, exponent(p)?, max_period).map_err(err)?;
    Ok((cost(r.value), witness_visits(instance, &r.witness)))
}

#[pyfunction]
fn lower_bound(instance: &Instance) -> PyResult<f64> {
    oracle::lower_bound(&instance.inner).map_err(err)
}

/// `(budget, max tree cost, trees)` where each tree is a list of label edges.
#[pyfunction]
#[pyo3(signature = (instance, k, eps = 1e-6, subset = None))]
fn minmax_tree_cover(
    instance: &Instance,
    k: usize,
    eps: f64,
    subset: Option<Vec<String>>,
) -> PyResult<(f64, f64, Vec<Vec<(String, String)>>)> {
    let cover = treecover::minmax_tree_cover(&instance.inner, &instance.ids(subset)?, k, eps).map_err(err)?;
    let label = |p: PointId| instance.inner.label(p).to_string();
    let trees = cover
        .trees
        .iter()
        .map(|t| t.edges().iter().map(|&(a, b)| (label(a), label(b))).collect())
        .collect();
    Ok((cover.budget_used, cover.max_tree_cost(), trees))
}

/// `(target, duration, utility)` of the attacker's best response; the
/// duration is None when the target is never visited.
#[pyfunction]
fn attacker_best_response(instance: &Instance, schedule: &Schedule) -> PyResult<(String, Option<f64>, f64)> {
    schedule.checked(instance)?;
    let a = security::attacker_best_response(&schedule.inner, &instance.inner).map_err(err)?;
    Ok((instance.inner.label(a.target).to_string(), a.duration, cost(a.utility)))
}

#[pyfunction]
fn success_probability(instance: &Instance, schedule: &Schedule, point: &str, duration: f64) -> PyResult<f64> {
    schedule.checked(instance)?;
    security::success_probability(&schedule.inner, &instance.inner, instance.id(point)?, duration).map_err(err)
}

/// Deterministic schedule from `[(schedule, probability), ...]`.
#[pyfunction]
fn mix_tours(instance: &Instance, entries: Vec<(Schedule, f64)>) -> PyResult<Schedule> {
    for (s, _) in &entries {
        s.checked(instance)?;
    }
    let m = MixedStrategy::new(entries.into_iter().map(|(s, p)| (s.inner, p)).collect()).map_err(err)?;
    let r = security::mix_tours(&m, &instance.inner).map_err(err)?;
    Ok(Schedule::wrap(instance, r.schedule))
}

#[pymodule]
fn patrol(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Instance>()?;
    m.add_class::<Schedule>()?;
    m.add_class::<PlanResult>()?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(held_karp_tsp, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_weighted_opt, m)?)?;
    m.add_function(wrap_pyfunction!(lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(minmax_tree_cover, m)?)?;
    m.add_function(wrap_pyfunction!(attacker_best_response, m)?)?;
    m.add_function(wrap_pyfunction!(success_probability, m)?)?;
    m.add_function(wrap_pyfunction!(mix_tours, m)?)?;
    Ok(())
}
