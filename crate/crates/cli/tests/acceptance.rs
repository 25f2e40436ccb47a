//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::Parser;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use patrol_cli::{run, Cli};
use patrol_core::fixtures::{line, unit_triangle};
use patrol_core::mst::minimum_spanning_tree;
use patrol_core::oracle::{brute_force_weighted_opt, held_karp_tsp, lower_bound, partition_tree_cover_oracle};
use patrol_core::planner::ENVELOPE_FACTOR;
use patrol_core::security::{mix_tours, target_best_response, MixedStrategy};
use patrol_core::treecover::{minmax_tree_cover, try_budget};
use patrol_core::{generate_random, plan, Exponent, GeneratorSpec, Geometry, Instance, PointId, Schedule, WeightLaw};

/// Agreement between the exact oracles and the algebraic identities.
const EXACT_TOL: f64 = 1e-9;
/// Relative slack on the envelope and on the security and mixing brackets.
const BOUND_TOL: f64 = 1e-9;
const EPS: f64 = 1e-6;

const TREE_COVER_FACTOR: f64 = 4.0;
const ATTACK_LOWER_DIVISOR: f64 = 8.0;
const ATTACK_UPPER_DIVISOR: f64 = 2.0;
const MIX_FACTOR: f64 = 8.0;
const QUADRATIC_VS_TSP_FACTOR: f64 = 480.0;

const ONE_MINUTE: Duration = Duration::from_secs(60);
const TWO_MINUTES: Duration = Duration::from_secs(120);

/// `a <= b` up to relative slack `tol`.
fn le(a: f64, b: f64, tol: f64) -> bool {
    a <= b + tol * a.abs().max(b.abs())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn instance(n: usize, law: WeightLaw, geometry: Geometry, seed: u64) -> Instance {
    generate_random(&GeneratorSpec { n, weight_law: law, geometry }, seed).expect("generator")
}

fn geometry(seed: u64) -> Geometry {
    if seed.is_multiple_of(2) {
        Geometry::EuclideanPlane
    } else {
        Geometry::RandomClosure
    }
}

const LAWS: [WeightLaw; 5] = [
    WeightLaw::Uniform,
    WeightLaw::Random,
    WeightLaw::Dyadic { levels: 3 },
    WeightLaw::Dyadic { levels: 8 },
    WeightLaw::Skewed,
];

fn random_schedule(rng: &mut ChaCha8Rng, n: usize, max_len: usize) -> Schedule {
    let len = rng.gen_range(1..=max_len);
    let v: Vec<usize> = (0..len).map(|_| rng.gen_range(0..n)).collect();
    Schedule::from_indices(&v).expect("nonempty")
}

/// A schedule visiting every point: a random permutation with extra visits spliced in.
fn covering_schedule(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> Schedule {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    for _ in 0..rng.gen_range(0..=extra) {
        let at = rng.gen_range(0..=v.len());
        v.insert(at, rng.gen_range(0..n));
    }
    let s = Schedule::from_indices(&v).expect("nonempty");
    // collapsing repeats never removes a point entirely
    debug_assert!((0..n).all(|i| s.contains(PointId(i))));
    s
}

type Verdict = Result<String, String>;

fn tsp_to_weighted() -> Verdict {
    let mut worst = 0.0f64;
    let mut count = 0;
    for seed in 0..60u64 {
        let n = 3 + (seed % 3) as usize;
        let inst = instance(n, WeightLaw::Uniform, geometry(seed), seed);
        let pts: Vec<PointId> = inst.points().collect();
        let hk = held_karp_tsp(&inst, &pts).map_err(|e| e.to_string())?.value.as_f64();
        let bf = brute_force_weighted_opt(&inst, Exponent::Infinity, n)
            .map_err(|e| e.to_string())?
            .value
            .as_f64();
        if !close(hk, bf, EXACT_TOL) {
            return Err(format!("seed {seed}, n {n}: held-karp {hk} vs brute force {bf}"));
        }
        worst = worst.max((hk - bf).abs() / hk.max(1.0));
        count += 1;
    }
    Ok(format!("{count} instances, worst relative gap {worst:.2e}"))
}

/// Instances for the envelope and invariant criteria: n up to 200, every law.
fn envelope_corpus() -> Vec<(u64, Instance)> {
    const SIZES: [usize; 8] = [3, 5, 8, 13, 25, 50, 100, 200];
    (0..120u64)
        .map(|seed| {
            let n = SIZES[seed as usize % SIZES.len()];
            let law = LAWS[(seed as usize / SIZES.len()) % LAWS.len()];
            (seed, instance(n, law, geometry(seed / 3), 1000 + seed))
        })
        .collect()
}

fn envelope(corpus: &[(u64, Instance)]) -> Verdict {
    let mut worst = 0.0f64;
    for (seed, inst) in corpus {
        let r = plan(inst, EPS).map_err(|e| format!("seed {seed}: {e}"))?;
        let obj = r.schedule.weighted_objective(inst, Exponent::Infinity).map_err(|e| e.to_string())?;
        let lb = lower_bound(inst).map_err(|e| e.to_string())?;
        let lists = (r.last_list + 1) as f64;
        let bound = ENVELOPE_FACTOR * lists * lb;
        let obj = obj.finite().ok_or_else(|| format!("seed {seed}: schedule misses a point"))?;
        if !le(obj, bound, BOUND_TOL) {
            return Err(format!("seed {seed}, n {}: objective {obj} > 18 * {lists} * {lb}", inst.len()));
        }
        worst = worst.max(obj / (lists * lb));
    }
    Ok(format!(
        "{} instances, worst objective / ((I+1) * lower bound) = {worst:.3} (limit {ENVELOPE_FACTOR})",
        corpus.len()
    ))
}

/// Recomputes both invariants from the plan output with no slack beyond eps.
fn planner_invariants(corpus: &[(u64, Instance)]) -> Verdict {
    let mut saturated = 0;
    let mut plans = 0;
    let extra = [
        (u64::MAX, unit_triangle([1.0, 0.5, 0.5])),
        (u64::MAX, line(&[0.0, 1.0, 2.0, 3.0])),
    ];
    for (seed, inst) in corpus.iter().chain(extra.iter()) {
        let r = plan(inst, EPS).map_err(|e| format!("seed {seed}: {e}"))?;
        plans += 1;
        if !r.diagnostics.all_passed() {
            return Err(format!("seed {seed}: planner reported {:?}", r.diagnostics.checks));
        }
        // list-for-weight: rounded weight of every point on list i is at most 2^-i
        for list in &r.lists {
            let cap = 0.5f64.powi(list.index as i32);
            for &t in &list.tours {
                for &p in r.tours[t].schedule.visits() {
                    let w = inst.weight(p);
                    let rounded = 2f64.powi(w.log2().floor() as i32);
                    if rounded > cap {
                        return Err(format!("seed {seed}: point {} of weight {w} on list {}", p.0, list.index));
                    }
                }
            }
        }
        // key-lower-bound on every saturated class
        for (class, cover) in r.rounded.classes.iter().zip(&r.covers) {
            if class.index >= 63 || class.theta != 1usize << class.index {
                continue;
            }
            saturated += 1;
            let mst = minimum_spanning_tree(inst, &class.members).map_err(|e| e.to_string())?.cost();
            let lhs = class.theta as f64 * cover.max_tree_cost();
            let rhs = 4.0 * (1.0 + EPS) * mst;
            if lhs > rhs {
                return Err(format!("seed {seed}, class {}: {lhs} > {rhs}", class.index));
            }
        }
    }
    Ok(format!("{plans} plans, {saturated} saturated classes, exact comparisons"))
}

fn tree_cover_guarantee() -> Verdict {
    let mut worst = 0.0f64;
    let mut count = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for seed in 0..60u64 {
        let n = rng.gen_range(3..=12);
        let inst = instance(n, WeightLaw::Uniform, geometry(seed), 4000 + seed);
        let mut pts: Vec<PointId> = inst.points().collect();
        pts.shuffle(&mut rng);
        pts.truncate(rng.gen_range(1..=9.min(n)));
        let k = rng.gen_range(1..=3);
        let cover = minmax_tree_cover(&inst, &pts, k, EPS).map_err(|e| e.to_string())?;
        let oracle = partition_tree_cover_oracle(&inst, &pts, k)
            .map_err(|e| e.to_string())?
            .value
            .as_f64();
        let alg = cover.max_tree_cost();
        if alg > TREE_COVER_FACTOR * (1.0 + EPS) * oracle {
            return Err(format!("seed {seed}: cover {alg} > 4(1+eps) * {oracle}"));
        }
        if oracle > 0.0 {
            worst = worst.max(alg / oracle);
        }
        count += 1;
    }
    Ok(format!("{count} instances, worst cover / oracle = {worst:.3}"))
}

fn security_bracket() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut targets, mut lo_worst, mut hi_worst) = (0, f64::INFINITY, 0.0f64);
    for seed in 0..150u64 {
        let n = rng.gen_range(3..=10);
        let law = LAWS[seed as usize % LAWS.len()];
        let inst = instance(n, law, geometry(seed), 5000 + seed);
        let s = random_schedule(&mut rng, n, 3 * n);
        for x in inst.points().filter(|&x| s.contains(x)) {
            let w = inst.weight(x);
            let c2 = s.point_cost(x, &inst, Exponent::QUADRATIC).map_err(|e| e.to_string())?.as_f64();
            let u = target_best_response(&s, &inst, x).map_err(|e| e.to_string())?.utility.as_f64();
            let (lo, hi) = (w * c2 / ATTACK_LOWER_DIVISOR, w * c2 / ATTACK_UPPER_DIVISOR);
            if !le(lo, u, BOUND_TOL) || !le(u, hi, BOUND_TOL) {
                return Err(format!("seed {seed}, target {}: {lo} <= {u} <= {hi} fails", x.0));
            }
            if c2 > 0.0 {
                lo_worst = lo_worst.min(u / (w * c2));
                hi_worst = hi_worst.max(u / (w * c2));
            }
            targets += 1;
        }
    }
    Ok(format!(
        "150 schedules, {targets} targets, utility / (w C2) in [{lo_worst:.4}, {hi_worst:.4}]"
    ))
}

fn mixing_bound() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for seed in 0..60u64 {
        let n = rng.gen_range(3..=8);
        let inst = instance(n, LAWS[seed as usize % LAWS.len()], geometry(seed), 6000 + seed);
        let support = rng.gen_range(1..=4);
        let raw: Vec<f64> = (0..support).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let entries: Vec<(Schedule, f64)> = raw
            .iter()
            .map(|p| (covering_schedule(&mut rng, n, 2 * n), p / total))
            .collect();
        let m = MixedStrategy::new(entries.clone()).map_err(|e| e.to_string())?;
        let mixed = mix_tours(&m, &inst).map_err(|e| format!("seed {seed}: {e}"))?;
        for x in inst.points() {
            let got = mixed.schedule.point_cost(x, &inst, Exponent::QUADRATIC).map_err(|e| e.to_string())?.as_f64();
            let mut expected = 0.0;
            for (s, p) in &entries {
                expected += p * s.point_cost(x, &inst, Exponent::QUADRATIC).map_err(|e| e.to_string())?.as_f64();
            }
            if !le(got, MIX_FACTOR * expected, BOUND_TOL) {
                return Err(format!("seed {seed}, point {}: {got} > 8 * {expected}", x.0));
            }
            if expected > 0.0 {
                worst = worst.max(got / expected);
            }
        }
    }
    Ok(format!("60 strategies, worst C2(mix) / E[C2] = {worst:.3}"))
}

fn quadratic_vs_tsp() -> Verdict {
    let mut worst = 0.0f64;
    for seed in 0..36u64 {
        let n = 3 + (seed % 3) as usize;
        let inst = instance(n, WeightLaw::Uniform, geometry(seed), 7000 + seed);
        let pts: Vec<PointId> = inst.points().collect();
        let hk = held_karp_tsp(&inst, &pts).map_err(|e| e.to_string())?.value.as_f64();
        let bf = brute_force_weighted_opt(&inst, Exponent::QUADRATIC, 8)
            .map_err(|e| e.to_string())?
            .value
            .as_f64();
        if hk > QUADRATIC_VS_TSP_FACTOR * bf {
            return Err(format!("seed {seed}: tsp {hk} > 480 * {bf}"));
        }
        worst = worst.max(hk / bf);
    }
    Ok(format!("36 instances, worst tsp / opt_2 = {worst:.3}"))
}

fn cost_algebra() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let ps = [Exponent::Finite(2.0), Exponent::Finite(3.0), Exponent::Finite(10.0), Exponent::Infinity];
    let mut pairs = 0;
    let mut seed = 0u64;
    while pairs < 1200 {
        seed += 1;
        let n = rng.gen_range(3..=10);
        let inst = instance(n, LAWS[seed as usize % LAWS.len()], geometry(seed), 8000 + seed);
        let s = random_schedule(&mut rng, n, 4 * n);
        let doubled = Schedule::concat([&s, &s]).map_err(|e| e.to_string())?;
        let rotated = s.rotated(rng.gen_range(0..s.len().max(1) * 2));
        let period = s.period_length(&inst).map_err(|e| e.to_string())?;
        for x in inst.points().filter(|&x| s.contains(x)) {
            pairs += 1;
            let costs: Vec<f64> = ps
                .iter()
                .map(|&p| s.point_cost(x, &inst, p).map(|c| c.as_f64()))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            if costs.windows(2).any(|w| !le(w[0], w[1], EXACT_TOL)) {
                return Err(format!("seed {seed}, point {}: not monotone in p: {costs:?}", x.0));
            }
            for &p in &ps {
                let base = costs[ps.iter().position(|&q| q == p).unwrap()];
                for (what, other) in [("concatenation", &doubled), ("rotation", &rotated)] {
                    let c = other.point_cost(x, &inst, p).map_err(|e| e.to_string())?.as_f64();
                    if !close(base, c, EXACT_TOL) {
                        return Err(format!("seed {seed}, point {}, p {p}: {what} changed {base} to {c}", x.0));
                    }
                }
            }
            let lengths = s.absence_profile(x, &inst).map_err(|e| e.to_string())?.expect("visited").lengths;
            let total: f64 = lengths.iter().sum();
            if !close(total, period, EXACT_TOL) {
                return Err(format!("seed {seed}, point {}: lengths sum {total} vs period {period}", x.0));
            }
        }
    }
    Ok(format!("{pairs} schedule/point pairs, four properties each"))
}

fn run_cli(args: &[&str]) -> Result<u8, String> {
    let cli = Cli::try_parse_from(std::iter::once("patrol").chain(args.iter().copied())).map_err(|e| e.to_string())?;
    run(&cli).map(|o| o.exit_code).map_err(|e| e.to_string())
}

fn report_without_timings(path: &Path) -> Result<String, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let mut v: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    v.as_object_mut().ok_or("report is not an object")?.remove("timings");
    Ok(serde_json::to_string_pretty(&v).expect("value serializes"))
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let corpus = d("corpus");
    if run_cli(&["gen", "--n", "12", "--weights", "skewed", "--seed", "11", "--count", "5", "--out", &corpus])? != 0 {
        return Err("gen failed".into());
    }
    let inst = format!("{corpus}/instance-00011.json");
    for (i, out) in [d("plan1.json"), d("plan2.json")].iter().enumerate() {
        let sched = d(&format!("sched{i}.json"));
        if run_cli(&["plan", &inst, "--out", out, "--schedule-out", &sched])? != 0 {
            return Err("plan reported a failed check".into());
        }
    }
    for out in [d("bench1.json"), d("bench2.json")] {
        let code = run_cli(&[
            "bench", &corpus, "--random", "20", "--seed", "3", "--max-n", "12", "--out", &out, "--csv",
            &out.replace(".json", ".csv"),
        ])?;
        if code != 0 {
            return Err("bench reported an envelope or invariant failure".into());
        }
    }
    let same = |a: &str, b: &str| -> Result<bool, String> {
        Ok(report_without_timings(Path::new(a))? == report_without_timings(Path::new(b))?)
    };
    let csv_same = std::fs::read(d("bench1.csv")).map_err(|e| e.to_string())?
        == std::fs::read(d("bench2.csv")).map_err(|e| e.to_string())?;
    match (same(&d("plan1.json"), &d("plan2.json"))?, same(&d("bench1.json"), &d("bench2.json"))?, csv_same) {
        (true, true, true) => Ok("plan and bench reports (25 rows) identical without timings; bench CSV identical".into()),
        (p, b, c) => Err(format!("identical: plan {p}, bench {b}, csv {c}")),
    }
}

fn golden_traces() -> Verdict {
    let tri = unit_triangle([1.0, 0.5, 0.5]);
    let r = plan(&tri, EPS).map_err(|e| e.to_string())?;
    let labels: Vec<&str> = r.schedule.visits().iter().map(|&p| tri.label(p)).collect();
    let d = &r.diagnostics;
    if labels != ["a", "b", "a", "c"] {
        return Err(format!("triangle schedule {labels:?}"));
    }
    if (d.objective_inf.as_f64(), d.objective_2.as_f64(), d.lower_bound) != (2.0, 2.0, 1.5) {
        return Err(format!(
            "triangle objectives {} / {} / lower bound {}",
            d.objective_inf, d.objective_2, d.lower_bound
        ));
    }

    let l = line(&[0.0, 1.0, 2.0, 3.0]);
    let pts: Vec<PointId> = l.points().collect();
    let probe = try_budget(&l, &pts, 2, 1.0).map_err(|e| e.to_string())?;
    let probe_cost = probe.into_cover().ok_or("budget 1 failed on the line")?.max_tree_cost();
    let cover = minmax_tree_cover(&l, &pts, 2, EPS).map_err(|e| e.to_string())?;
    if probe_cost != 2.0 || cover.budget_used != 1.0 || cover.max_tree_cost() != 2.0 {
        return Err(format!(
            "line: probe max {probe_cost}, search budget {} max {}",
            cover.budget_used,
            cover.max_tree_cost()
        ));
    }
    Ok("triangle [a,b,a,c] objectives 2/2 lower bound 1.5; line k=2 max tree cost 2 at B=1".into())
}

fn main() -> ExitCode {
    let corpus = envelope_corpus();
    let criteria: Vec<(&str, Duration, Box<dyn Fn() -> Verdict + '_>)> = vec![
        ("tsp-to-weighted equality", ONE_MINUTE, Box::new(tsp_to_weighted)),
        ("envelope 18(I+1) * lower bound", TWO_MINUTES, Box::new(|| envelope(&corpus))),
        ("planner invariants", TWO_MINUTES, Box::new(|| planner_invariants(&corpus))),
        ("tree cover within 4(1+eps) of oracle", ONE_MINUTE, Box::new(tree_cover_guarantee)),
        ("security bracket", ONE_MINUTE, Box::new(security_bracket)),
        ("mixing bound", ONE_MINUTE, Box::new(mixing_bound)),
        ("quadratic vs tsp", TWO_MINUTES, Box::new(quadratic_vs_tsp)),
        ("cost-function algebra", ONE_MINUTE, Box::new(cost_algebra)),
        ("determinism", TWO_MINUTES, Box::new(determinism)),
        ("golden traces", ONE_MINUTE, Box::new(golden_traces)),
    ];

    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = check();
        let took = start.elapsed();
        let verdict = match verdict {
            Ok(d) if took > *limit => Err(format!("{d}; took {took:.1?}, limit {limit:?}")),
            v => v,
        };
        match verdict {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} ({took:.2?})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} ({took:.2?})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
