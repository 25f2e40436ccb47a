use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use patrol_core::instance::Violation;
use patrol_core::oracle::{brute_force_weighted_opt, held_karp_tsp, partition_tree_cover_oracle};
use patrol_core::report::{AttackReport, CoverReport, MixReport, OracleReport, PlanReport};
use patrol_core::security::{attacker_best_response, expected_return_time, mix_tours, per_target_responses, MixedStrategy};
use patrol_core::treecover::{minmax_tree_cover, try_budget, BudgetOutcome};
use patrol_core::{
    generate_random, plan, CostValue, Error, Exponent, GeneratorSpec, Instance, PointId, Schedule,
};

use crate::{bench, digest, file_name, read_file, write_file, CheckOutcome, CliError, CliResult, Command, Outcome, RunReport};

pub(crate) fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("report values serialize")
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Maps a core error raised while reading `path` to the right exit class.
fn input_error(path: &Path, e: Error) -> CliError {
    match e {
        Error::Parse(_) => CliError::Parse {
            path: path.to_path_buf(),
            source: e,
        },
        other => CliError::Domain(other),
    }
}

pub(crate) struct Loaded {
    pub instance: Instance,
    pub digest: String,
}

pub(crate) fn load_instance(path: &Path) -> CliResult<Loaded> {
    let text = read_file(path)?;
    let instance = Instance::from_json(&text).map_err(|e| input_error(path, e))?;
    Ok(Loaded {
        instance,
        digest: digest(text.as_bytes()),
    })
}

fn load_schedule(inst: &Instance, path: &Path) -> CliResult<Schedule> {
    let text = read_file(path)?;
    Schedule::from_json(inst, &text).map_err(|e| input_error(path, e))
}

fn subset_ids(inst: &Instance, subset: &Option<Vec<String>>) -> CliResult<Vec<PointId>> {
    match subset {
        None => Ok(inst.points().collect()),
        Some(labels) => Ok(labels
            .iter()
            .map(|l| inst.point_by_label(l.trim()))
            .collect::<patrol_core::Result<_>>()?),
    }
}

fn labels_of(inst: &Instance, ids: &[PointId]) -> Vec<String> {
    ids.iter().map(|&p| inst.label(p).to_string()).collect()
}

fn base_report(command: &str, inputs: &[&PathBuf], loaded: &Loaded) -> RunReport {
    let mut r = RunReport::new(command);
    r.inputs = inputs.iter().map(|p| file_name(p)).collect();
    r.instance_digest = Some(loaded.digest.clone());
    r
}

fn finish(mut report: RunReport, summary: String, start: Instant) -> Outcome {
    report.timings.insert("total".into(), elapsed_ms(start));
    let exit_code = if report.all_checks_passed() { 0 } else { 1 };
    Outcome {
        report,
        summary,
        exit_code,
    }
}

pub fn dispatch(cmd: &Command) -> CliResult<Outcome> {
    match cmd {
        Command::Validate { instance, .. } => validate(instance),
        Command::Gen {
            n,
            weights,
            geometry,
            seed,
            count,
            out,
        } => gen(
            GeneratorSpec {
                n: *n,
                weight_law: *weights,
                geometry: *geometry,
            },
            *seed,
            *count,
            out,
        ),
        Command::Plan {
            instance,
            eps,
            schedule_out,
            ..
        } => plan_cmd(instance, *eps, schedule_out.as_deref()),
        Command::Eval {
            instance, schedule, p, ..
        } => eval(instance, schedule, p),
        Command::OracleTsp { instance, subset, .. } => oracle_tsp(instance, subset),
        Command::OracleOpt {
            instance, p, max_period, ..
        } => oracle_opt(instance, *p, *max_period),
        Command::OracleCover {
            instance, k, subset, ..
        } => oracle_cover(instance, *k, subset),
        Command::Treecover {
            instance,
            k,
            eps,
            subset,
            budget,
            ..
        } => treecover(instance, *k, *eps, subset, *budget),
        Command::Attack { instance, schedule, .. } => attack(instance, schedule),
        Command::Mix {
            instance, strategy, out, ..
        } => mix(instance, strategy, out.as_deref()),
        Command::Bench {
            corpus,
            eps,
            random,
            seed,
            max_n,
            max_period,
            csv,
            ..
        } => bench::run(&bench::BenchConfig {
            corpus: corpus.clone(),
            eps: *eps,
            random: *random,
            seed: *seed,
            max_n: *max_n,
            max_period: *max_period,
            csv: csv.clone(),
        }),
    }
}

pub fn validate(path: &Path) -> CliResult<Outcome> {
    let start = Instant::now();
    let text = read_file(path)?;
    let mut report = RunReport::new("validate");
    report.inputs = vec![file_name(path)];
    report.instance_digest = Some(digest(text.as_bytes()));
    report.parameters = json!({});
    let (violations, n): (Vec<Violation>, Option<usize>) = match Instance::from_json(&text) {
        Ok(inst) => (Vec::new(), Some(inst.len())),
        Err(Error::InvalidMetric(m)) => (m.violations, None),
        Err(e) => return Err(input_error(path, e)),
    };
    let valid = violations.is_empty();
    report.results = json!({ "valid": valid, "n": n, "violations": to_value(&violations) });
    report.checks.push(CheckOutcome {
        name: "metric".into(),
        passed: valid,
        detail: format!("{} violation(s)", violations.len()),
    });
    let mut summary = if valid {
        format!("{}: valid metric on {} points\n", file_name(path), n.unwrap_or(0))
    } else {
        format!("{}: invalid metric, {} violation(s)\n", file_name(path), violations.len())
    };
    for v in violations.iter().take(10) {
        let _ = writeln!(summary, "  {v}");
    }
    Ok(finish(report, summary, start))
}

pub fn gen(spec: GeneratorSpec, seed: u64, count: usize, out: &Path) -> CliResult<Outcome> {
    let start = Instant::now();
    if count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    if count > 1 {
        std::fs::create_dir_all(out).map_err(|source| CliError::Io {
            path: out.to_path_buf(),
            source,
        })?;
    }
    let mut files = Vec::new();
    for i in 0..count as u64 {
        let inst = generate_random(&spec, seed + i)?;
        let text = inst.to_json();
        let path = if count == 1 {
            out.to_path_buf()
        } else {
            out.join(format!("instance-{:05}.json", seed + i))
        };
        write_file(&path, &text)?;
        files.push(json!({ "file": file_name(&path), "seed": seed + i, "digest": digest(text.as_bytes()) }));
    }
    let mut report = RunReport::new("gen");
    report.parameters = json!({ "spec": to_value(&spec), "seed": seed, "count": count });
    let summary = format!("wrote {} instance(s) with n = {}\n", files.len(), spec.n);
    report.results = json!({ "files": files });
    Ok(finish(report, summary, start))
}

pub fn plan_cmd(path: &PathBuf, eps: f64, schedule_out: Option<&Path>) -> CliResult<Outcome> {
    let start = Instant::now();
    let loaded = load_instance(path)?;
    let inst = &loaded.instance;
    let result = plan(inst, eps)?;
    let pr = PlanReport::new(inst, &result);
    if let Some(p) = schedule_out {
        let doc = serde_json::to_string_pretty(&pr.schedule).expect("schedule serializes") + "\n";
        write_file(p, &doc)?;
    }
    let mut report = base_report("plan", &[path], &loaded);
    report.parameters = json!({ "eps": eps });
    report.checks = pr
        .checks
        .iter()
        .map(|c| CheckOutcome {
            name: c.name.to_string(),
            passed: c.passed,
            detail: c.detail.clone(),
        })
        .collect();
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "{}: n = {}, {} tour(s) in {} list(s), {} phase(s), {} visits per period",
        file_name(path),
        inst.len(),
        pr.tour_count,
        pr.lists.len(),
        pr.phases,
        pr.schedule.visits.len()
    );
    let _ = writeln!(
        summary,
        "objective inf = {}, objective 2 = {}, lower bound = {}, envelope bound = {}",
        fmt_cost(pr.objective_inf),
        fmt_cost(pr.objective_2),
        pr.lower_bound,
        pr.envelope_bound
    );
    for c in &pr.checks {
        let _ = writeln!(summary, "  [{}] {}: {}", pass_word(c.passed), c.name, c.detail);
    }
    report.results = to_value(&pr);
    Ok(finish(report, summary, start))
}

fn fmt_cost(c: CostValue) -> String {
    match c {
        CostValue::Finite(v) => v.to_string(),
        CostValue::Unbounded => "UNBOUNDED".into(),
    }
}

fn pass_word(passed: bool) -> &'static str {
    if passed {
        "pass"
    } else {
        "FAIL"
    }
}

#[derive(Serialize)]
struct PointCost {
    label: String,
    weight: f64,
    cost: CostValue,
}

pub fn eval(path: &PathBuf, schedule: &PathBuf, ps: &[Exponent]) -> CliResult<Outcome> {
    let start = Instant::now();
    let loaded = load_instance(path)?;
    let inst = &loaded.instance;
    let s = load_schedule(inst, schedule)?;
    let mut report = base_report("eval", &[path, schedule], &loaded);
    report.parameters = json!({ "p": to_value(&ps) });

    let mut summary = format!("{}: period length {}\n", file_name(schedule), s.period_length(inst)?);
    let mut per_p = Vec::new();
    for &p in ps {
        let costs = s.point_costs(inst, p)?;
        let objective = s.weighted_objective(inst, p)?;
        let _ = writeln!(summary, "p = {p}: weighted objective {}", fmt_cost(objective));
        per_p.push(json!({
            "p": to_value(&p),
            "objective": to_value(&objective),
            "points": to_value(&inst.points().map(|x| PointCost {
                label: inst.label(x).to_string(),
                weight: inst.weight(x),
                cost: costs[x.index()],
            }).collect::<Vec<_>>()),
        }));
    }
    report.results = json!({
        "schedule": to_value(&s.to_document(inst)),
        "period_length": s.period_length(inst)?,
        "evaluations": per_p,
    });
    Ok(finish(report, summary, start))
}

pub fn oracle_tsp(path: &PathBuf, subset: &Option<Vec<String>>) -> CliResult<Outcome> {
    let start = Instant::now();
    let loaded = load_instance(path)?;
    let inst = &loaded.instance;
    let ids = subset_ids(inst, subset)?;
    let r = held_karp_tsp(inst, &ids)?;
    let mut report = base_report("oracle-tsp", &[path], &loaded);
    report.parameters = json!({ "subset": labels_of(inst, &ids) });
    let summary = format!("shortest closed tour through {} point(s): {}\n", ids.len(), fmt_cost(r.value));
    report.results = to_value(&OracleReport::new(inst, &r));
    Ok(finish(report, summary, start))
}

pub fn oracle_opt(path: &PathBuf, p: Exponent, max_period: Option<usize>) -> CliResult<Outcome> {
    let start = Instant::now();
    let loaded = load_instance(path)?;
    let inst = &loaded.instance;
    let max_period = max_period.unwrap_or(inst.len());
    let r = brute_force_weighted_opt(inst, p, max_period)?;
    let mut report = base_report("oracle-opt", &[path], &loaded);
    report.parameters = json!({ "p": to_value(&p), "max_period": max_period });
    let summary = format!(
        "best objective over periods up to {max_period} visits (p = {p}): {}{}\n",
        fmt_cost(r.value),
        if r.search_bound.exact { "" } else { " (upper bound)" }
    );
    report.results = to_value(&OracleReport::new(inst, &r));
    Ok(finish(report, summary, start))
}

pub fn oracle_cover(path: &PathBuf, k: usize, subset: &Option<Vec<String>>) -> CliResult<Outcome> {
    let start = Instant::now();
    let loaded = load_instance(path)?;
    let inst = &loaded.instance;
    let ids = subset_ids(inst, subset)?;
    let r = partition_tree_cover_oracle(inst, &ids, k)?;
    let mut report = base_report("oracle-cover", &[path], &loaded);
    report.parameters = json!({ "k": k, "subset": labels_of(inst, &ids) });
    let summary = format!("best {k}-partition max spanning tree cost: {}\n", fmt_cost(r.value));
    report.results = to_value(&OracleReport::new(inst, &r));
    Ok(finish(report, summary, start))
}

pub fn treecover(
    path: &PathBuf,
    k: usize,
    eps: f64,
    subset: &Option<Vec<String>>,
    budget: Option<f64>,
) -> CliResult<Outcome> {
    let start = Instant::now();
    let loaded = load_instance(path)?;
    let inst = &loaded.instance;
    let ids = subset_ids(inst, subset)?;
    let mut report = base_report("treecover", &[path], &loaded);
    report.parameters = json!({ "k": k, "eps": eps, "budget": budget, "subset": labels_of(inst, &ids) });
    let summary;
    match budget {
        Some(b) => match try_budget(inst, &ids, k, b)? {
            BudgetOutcome::Success(cover) => {
                let c = CoverReport::new(inst, &cover);
                summary = format!("budget {b}: success, {} tree(s), max cost {}\n", c.trees.len(), c.max_tree_cost);
                report.results = json!({ "outcome": "success", "cover": to_value(&c) });
            }
            BudgetOutcome::Fail { required } => {
                summary = format!("budget {b}: too low, {required} trees needed\n");
                report.results = json!({ "outcome": "fail", "required": required });
            }
        },
        None => {
            let cover = minmax_tree_cover(inst, &ids, k, eps)?;
            let c = CoverReport::new(inst, &cover);
            summary = format!(
                "{} tree(s) at budget {}, max tree cost {}\n",
                c.trees.len(),
                c.budget,
                c.max_tree_cost
            );
            report.results = json!({ "outcome": "success", "cover": to_value(&c) });
        }
    }
    Ok(finish(report, summary, start))
}

pub fn attack(path: &PathBuf, schedule: &PathBuf) -> CliResult<Outcome> {
    let start = Instant::now();
    let loaded = load_instance(path)?;
    let inst = &loaded.instance;
    let s = load_schedule(inst, schedule)?;
    let responses = per_target_responses(&s, inst)?;
    let best = attacker_best_response(&s, inst)?;
    let mut targets = Vec::new();
    for r in &responses {
        targets.push(json!({
            "response": to_value(&AttackReport::new(inst, r)),
            "quadratic_cost": to_value(&s.point_cost(r.target, inst, Exponent::QUADRATIC)?),
            "expected_return_time": to_value(&expected_return_time(&s, inst, r.target)?),
        }));
    }
    let mut report = base_report("attack", &[path, schedule], &loaded);
    report.parameters = json!({});
    let b = AttackReport::new(inst, &best);
    let summary = format!(
        "best attack: target {}, duration {}, utility {}\n",
        b.target,
        b.duration.map_or("-".to_string(), |d| d.to_string()),
        fmt_cost(b.utility)
    );
    report.results = json!({ "best": to_value(&b), "targets": targets });
    Ok(finish(report, summary, start))
}

pub fn mix(path: &PathBuf, strategy: &PathBuf, out: Option<&Path>) -> CliResult<Outcome> {
    let start = Instant::now();
    let loaded = load_instance(path)?;
    let inst = &loaded.instance;
    let text = read_file(strategy)?;
    let m = MixedStrategy::from_json(inst, &text).map_err(|e| input_error(strategy, e))?;
    let result = mix_tours(&m, inst)?;
    let mr = MixReport::new(inst, &result);
    if let Some(p) = out {
        write_file(p, &(serde_json::to_string_pretty(&mr.schedule).expect("schedule serializes") + "\n"))?;
    }
    let mut report = base_report("mix", &[path, strategy], &loaded);
    report.parameters = json!({ "strategy_digest": digest(text.as_bytes()) });
    let summary = format!(
        "mixed {} of {} entries into {} visits per period (scale {})\n",
        mr.entries_used.len(),
        m.entries().len(),
        mr.schedule.visits.len(),
        mr.scale
    );
    report.results = to_value(&mr);
    Ok(finish(report, summary, start))
}
