//! Ratio tables over a corpus of instances.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use patrol_core::oracle::{brute_force_weighted_opt, BRUTE_FORCE_MAX_PERIOD, BRUTE_FORCE_MAX_POINTS};
use patrol_core::{generate_random, plan, Exponent, GeneratorSpec, Geometry, Instance, WeightLaw};

use crate::commands::to_value;
use crate::{digest, file_name, read_file, CheckOutcome, CliError, CliResult, Outcome, RunReport};

#[derive(Debug, Clone, Serialize)]
pub struct BenchConfig {
    pub corpus: Option<PathBuf>,
    pub eps: f64,
    pub random: usize,
    pub seed: u64,
    pub max_n: usize,
    pub max_period: usize,
    #[serde(skip)]
    pub csv: Option<PathBuf>,
}

/// One table row. Unbounded or unavailable values are left empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BenchRow {
    pub name: String,
    pub digest: String,
    pub status: String,
    pub error: Option<String>,
    pub n: Option<usize>,
    pub classes: Option<usize>,
    pub tours: Option<usize>,
    pub lists: Option<usize>,
    pub phases: Option<usize>,
    pub visits: Option<usize>,
    pub period_length: Option<f64>,
    pub objective_inf: Option<f64>,
    pub objective_2: Option<f64>,
    pub lower_bound: Option<f64>,
    pub envelope_bound: Option<f64>,
    pub envelope_ratio: Option<f64>,
    /// `objective_inf / ((I + 1) * lower_bound)`, compared against the envelope factor.
    pub normalized_ratio: Option<f64>,
    pub envelope_ok: Option<bool>,
    pub invariants_ok: Option<bool>,
    pub oracle_max_period: Option<usize>,
    pub oracle_value: Option<f64>,
    pub ratio_vs_oracle: Option<f64>,
}

enum Source {
    File(PathBuf),
    Generated { spec: GeneratorSpec, seed: u64 },
}

struct Entry {
    name: String,
    source: Source,
}

const LAWS: [WeightLaw; 4] = [
    WeightLaw::Uniform,
    WeightLaw::Random,
    WeightLaw::Dyadic { levels: 4 },
    WeightLaw::Skewed,
];

fn entries(cfg: &BenchConfig) -> CliResult<Vec<Entry>> {
    let mut out = Vec::new();
    if let Some(dir) = &cfg.corpus {
        let io = |source| CliError::Io {
            path: dir.clone(),
            source,
        };
        for item in std::fs::read_dir(dir).map_err(io)? {
            let path = item.map_err(io)?.path();
            if path.is_file() && path.extension().is_some_and(|e| e == "json") {
                out.push(Entry {
                    name: file_name(&path),
                    source: Source::File(path),
                });
            }
        }
    }
    if cfg.random > 0 && cfg.max_n < 3 {
        return Err(CliError::Usage("--max-n must be at least 3".into()));
    }
    for i in 0..cfg.random as u64 {
        let seed = cfg.seed + i;
        let spec = GeneratorSpec {
            n: 3 + (i as usize % (cfg.max_n - 2)),
            weight_law: LAWS[i as usize % LAWS.len()],
            geometry: if i % 2 == 0 {
                Geometry::EuclideanPlane
            } else {
                Geometry::RandomClosure
            },
        };
        out.push(Entry {
            name: format!("random-{seed:06}"),
            source: Source::Generated { spec, seed },
        });
    }
    out.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(out)
}

fn load(entry: &Entry) -> Result<(Instance, String), String> {
    match &entry.source {
        Source::File(path) => {
            let text = read_file(path).map_err(|e| e.to_string())?;
            let d = digest(text.as_bytes());
            Instance::from_json(&text).map(|i| (i, d.clone())).map_err(|e| e.to_string())
        }
        Source::Generated { spec, seed } => {
            let inst = generate_random(spec, *seed).map_err(|e| e.to_string())?;
            let d = digest(inst.to_json().as_bytes());
            Ok((inst, d))
        }
    }
}

fn row_for(entry: &Entry, cfg: &BenchConfig) -> BenchRow {
    let failed = |digest: String, e: String| BenchRow {
        name: entry.name.clone(),
        digest,
        status: "failed".into(),
        error: Some(e),
        ..BenchRow::default()
    };
    let (inst, d) = match load(entry) {
        Ok(x) => x,
        Err(e) => return failed(String::new(), e),
    };
    let result = match plan(&inst, cfg.eps) {
        Ok(r) => r,
        Err(e) => return failed(d, e.to_string()),
    };
    let diag = &result.diagnostics;
    let envelope_ok = diag.checks.iter().find(|c| c.name == "envelope").map(|c| c.passed);
    let objective_inf = diag.objective_inf.finite();
    let lists = result.last_list + 1;
    let normalized_ratio = match (objective_inf, diag.lower_bound > 0.0) {
        (Some(v), true) => Some(v / (lists as f64 * diag.lower_bound)),
        _ => None,
    };

    let mut row = BenchRow {
        name: entry.name.clone(),
        digest: d,
        status: "ok".into(),
        error: None,
        n: Some(inst.len()),
        classes: Some(result.rounded.classes.len()),
        tours: Some(result.tour_count),
        lists: Some(lists),
        phases: Some(result.phases),
        visits: Some(result.schedule.len()),
        period_length: result.schedule.period_length(&inst).ok(),
        objective_inf,
        objective_2: diag.objective_2.finite(),
        lower_bound: Some(diag.lower_bound),
        envelope_bound: Some(diag.envelope_bound),
        envelope_ratio: diag.envelope_ratio,
        normalized_ratio,
        envelope_ok,
        invariants_ok: Some(diag.all_passed()),
        ..BenchRow::default()
    };

    let max_period = cfg.max_period.min(BRUTE_FORCE_MAX_PERIOD);
    if inst.len() <= BRUTE_FORCE_MAX_POINTS && max_period >= inst.len() {
        match brute_force_weighted_opt(&inst, Exponent::Infinity, max_period) {
            Ok(r) => {
                row.oracle_max_period = Some(max_period);
                row.oracle_value = r.value.finite();
                row.ratio_vs_oracle = match (objective_inf, r.value.finite()) {
                    (Some(a), Some(b)) if b > 0.0 => Some(a / b),
                    _ => None,
                };
            }
            Err(e) => {
                row.status = "failed".into();
                row.error = Some(e.to_string());
            }
        }
    }
    row
}

pub fn write_csv(path: &Path, rows: &[BenchRow]) -> CliResult<()> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        // serde only emits headers alongside the first record
        w.write_record(BENCH_COLUMNS)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

pub const BENCH_COLUMNS: [&str; 22] = [
    "name",
    "digest",
    "status",
    "error",
    "n",
    "classes",
    "tours",
    "lists",
    "phases",
    "visits",
    "period_length",
    "objective_inf",
    "objective_2",
    "lower_bound",
    "envelope_bound",
    "envelope_ratio",
    "normalized_ratio",
    "envelope_ok",
    "invariants_ok",
    "oracle_max_period",
    "oracle_value",
    "ratio_vs_oracle",
];

pub fn run(cfg: &BenchConfig) -> CliResult<Outcome> {
    let start = Instant::now();
    let list = entries(cfg)?;
    let timed: Vec<(BenchRow, f64)> = list
        .par_iter()
        .map(|e| {
            let t = Instant::now();
            let row = row_for(e, cfg);
            (row, t.elapsed().as_secs_f64() * 1e3)
        })
        .collect();

    let mut report = RunReport::new("bench");
    report.inputs = cfg.corpus.iter().map(|p| file_name(p)).collect();
    report.parameters = to_value(cfg);
    for (row, ms) in &timed {
        report.timings.insert(format!("row:{}", row.name), *ms);
    }
    let rows: Vec<BenchRow> = timed.into_iter().map(|(r, _)| r).collect();
    if let Some(path) = &cfg.csv {
        write_csv(path, &rows)?;
    }

    let ok: Vec<&BenchRow> = rows.iter().filter(|r| r.status == "ok").collect();
    let envelope_failures: Vec<&str> = ok
        .iter()
        .filter(|r| r.envelope_ok == Some(false))
        .map(|r| r.name.as_str())
        .collect();
    let invariant_failures: Vec<&str> = ok
        .iter()
        .filter(|r| r.invariants_ok == Some(false))
        .map(|r| r.name.as_str())
        .collect();
    report.checks = vec![
        CheckOutcome {
            name: "envelope".into(),
            passed: envelope_failures.is_empty(),
            detail: format!("{} of {} planned rows violate the envelope {:?}", envelope_failures.len(), ok.len(), envelope_failures),
        },
        CheckOutcome {
            name: "planner_invariants".into(),
            passed: invariant_failures.is_empty(),
            detail: format!("{} of {} planned rows fail an invariant {:?}", invariant_failures.len(), ok.len(), invariant_failures),
        },
    ];
    let worst = ok.iter().filter_map(|r| r.normalized_ratio).fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    report.results = json!({
        "rows": to_value(&rows),
        "planned": ok.len(),
        "failed": rows.len() - ok.len(),
        "worst_normalized_ratio": worst,
    });

    let mut summary = format!("{} row(s): {} planned, {} failed\n", rows.len(), ok.len(), rows.len() - ok.len());
    for r in &rows {
        match &r.error {
            Some(e) => {
                let _ = writeln!(summary, "  {:<28} failed: {e}", r.name);
            }
            None => {
                let _ = writeln!(
                    summary,
                    "  {:<28} n={:<4} ratio/(I+1)={}",
                    r.name,
                    r.n.unwrap_or(0),
                    r.normalized_ratio.map_or("-".into(), |v| format!("{v:.3}"))
                );
            }
        }
    }
    report.timings.insert("total".into(), start.elapsed().as_secs_f64() * 1e3);
    let exit_code = if report.all_checks_passed() { 0 } else { 1 };
    Ok(Outcome {
        report,
        summary,
        exit_code,
    })
}
