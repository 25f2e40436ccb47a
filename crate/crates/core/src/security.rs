//! Schedules as randomized patrols.
//!
//! The defender runs a periodic schedule from a uniformly random offset. An
//! attacker picks a target `x` and a duration `t` and gains `w_x * t` if the
//! defender stays away from `x` for the whole attack. Against a period of
//! length `D` in which `x` has absences `l_1..l_m`, the attack succeeds with
//! probability `sum_k max(l_k - t, 0) / D`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, PointId};
use crate::schedule::{cost_of_lengths, CostValue, Exponent, Schedule, ScheduleDocument};

/// Tolerance on the total probability of a mixed strategy.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// Refuse to materialize mixed schedules longer than this many visits.
pub const MAX_MIXED_VISITS: usize = 50_000_000;

/// Probability that an attack of length `t` on `x` starting at a uniformly
/// random time goes unnoticed.
pub fn success_probability(s: &Schedule, inst: &Instance, x: PointId, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("attack duration must be nonnegative, got {t}")));
    }
    let Some(profile) = s.absence_profile(x, inst)? else {
        return Ok(1.0);
    };
    let period: f64 = profile.lengths.iter().sum();
    if period == 0.0 {
        return Ok(if t == 0.0 { 1.0 } else { 0.0 });
    }
    let open: f64 = profile.lengths.iter().map(|&l| (l - t).max(0.0)).sum();
    Ok((open / period).clamp(0.0, 1.0))
}

/// Mean time until the defender next reaches `x`: half the quadratic cost.
pub fn expected_return_time(s: &Schedule, inst: &Instance, x: PointId) -> Result<CostValue> {
    Ok(s.point_cost(x, inst, Exponent::QUADRATIC)?.scale(0.5))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackOutcome {
    pub target: PointId,
    /// `None` when the target is never visited and any duration pays off.
    pub duration: Option<f64>,
    pub utility: CostValue,
}

/// Maximizes `weight * t * sum_k max(l_k - t, 0) / period` over `t >= 0`.
///
/// With lengths sorted in decreasing order, on `[l_{j+1}, l_j]` the objective
/// is `weight * t * (S_j - j t) / period` with `S_j` the sum of the `j`
/// longest absences. Its maximum on the piece is the vertex `S_j / 2j`
/// clamped to the piece. Ties go to the shorter duration.
pub fn best_duration(lengths: &[f64], weight: f64) -> (f64, f64) {
    let period: f64 = lengths.iter().sum();
    if period <= 0.0 {
        return (0.0, 0.0);
    }
    let mut sorted = lengths.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut best = (0.0, 0.0);
    let mut prefix = 0.0;
    for j in 1..=sorted.len() {
        prefix += sorted[j - 1];
        let hi = sorted[j - 1];
        let lo = sorted.get(j).copied().unwrap_or(0.0);
        let jf = j as f64;
        let value = |t: f64| weight * t * (prefix - jf * t) / period;
        let vertex = (prefix / (2.0 * jf)).clamp(lo, hi);
        for t in [lo, vertex, hi] {
            let u = value(t);
            if u > best.1 || (u == best.1 && t < best.0) {
                best = (t, u);
            }
        }
    }
    best
}

/// Best attack on one target.
pub fn target_best_response(s: &Schedule, inst: &Instance, x: PointId) -> Result<AttackOutcome> {
    Ok(match s.absence_profile(x, inst)? {
        None => AttackOutcome {
            target: x,
            duration: None,
            utility: CostValue::Unbounded,
        },
        Some(profile) => {
            let (duration, utility) = best_duration(&profile.lengths, inst.weight(x));
            AttackOutcome {
                target: x,
                duration: Some(duration),
                utility: CostValue::Finite(utility),
            }
        }
    })
}

/// Best attack on every target, indexed by point.
pub fn per_target_responses(s: &Schedule, inst: &Instance) -> Result<Vec<AttackOutcome>> {
    s.check_against(inst)?;
    let (_, profiles) = s.all_profiles(inst);
    Ok(inst
        .points()
        .map(|x| match &profiles[x.0] {
            None => AttackOutcome {
                target: x,
                duration: None,
                utility: CostValue::Unbounded,
            },
            Some(lengths) => {
                let (duration, utility) = best_duration(lengths, inst.weight(x));
                AttackOutcome {
                    target: x,
                    duration: Some(duration),
                    utility: CostValue::Finite(utility),
                }
            }
        })
        .collect())
}

/// The attacker's best (target, duration) pair. Ties go to the lowest point
/// index, then the shortest duration.
pub fn attacker_best_response(s: &Schedule, inst: &Instance) -> Result<AttackOutcome> {
    let mut best: Option<AttackOutcome> = None;
    for outcome in per_target_responses(s, inst)? {
        if best.as_ref().is_none_or(|b| outcome.utility > b.utility) {
            best = Some(outcome);
        }
    }
    Ok(best.expect("instances have at least one point"))
}

/// A finite distribution over schedules.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedStrategy {
    entries: Vec<(Schedule, f64)>,
}

impl MixedStrategy {
    pub fn new(entries: Vec<(Schedule, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidStrategy("no entries".into()));
        }
        if let Some((_, p)) = entries.iter().find(|(_, p)| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidStrategy(format!("probability {p} is not positive")));
        }
        let total: f64 = entries.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::InvalidStrategy(format!("probabilities sum to {total}, not 1")));
        }
        Ok(MixedStrategy { entries })
    }

    pub fn from_json(inst: &Instance, text: &str) -> Result<Self> {
        let doc: MixedStrategyDocument = serde_json::from_str(text)?;
        let entries = doc
            .entries
            .into_iter()
            .map(|e| Ok((Schedule::from_labels(inst, &e.schedule.visits)?, e.prob)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }

    pub fn entries(&self) -> &[(Schedule, f64)] {
        &self.entries
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedStrategyDocument {
    pub entries: Vec<MixedEntryDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedEntryDocument {
    pub schedule: ScheduleDocument,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixedPart {
    /// Position of the entry in the input strategy.
    pub entry: usize,
    pub probability: f64,
    pub period: f64,
    pub copies: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixResult {
    pub schedule: Schedule,
    /// The most likely entries whose probabilities first reach 1/2, in order.
    pub parts: Vec<MixedPart>,
    /// Probability of the last selected entry.
    pub q: f64,
    /// Longest period among the selected entries.
    pub longest_period: f64,
    pub scale: f64,
    /// Set when every selected period is zero and the scale fell back to 1.
    pub degenerate: bool,
}

/// Replaces a mixed strategy by one deterministic periodic schedule.
///
/// Entries are ranked by probability (ties by input position) and the
/// shortest prefix with total probability at least 1/2 is kept. With `q` the
/// last kept probability, `D_bar` the longest kept period and
/// `K = max_{i,x} 8 D_bar / C_2(x, sigma_i)`, entry `i` is repeated
/// `ceil(K (p_i / q) (D_bar / D_i))` times and the blocks are concatenated.
pub fn mix_tours(m: &MixedStrategy, inst: &Instance) -> Result<MixResult> {
    for (i, (s, _)) in m.entries.iter().enumerate() {
        s.check_against(inst)?;
        if let Some(p) = inst.points().find(|&p| !s.contains(p)) {
            return Err(Error::InvalidStrategy(format!(
                "schedule {i} never visits `{}`",
                inst.label(p)
            )));
        }
    }

    let mut order: Vec<usize> = (0..m.entries.len()).collect();
    order.sort_by(|&a, &b| m.entries[b].1.total_cmp(&m.entries[a].1).then(a.cmp(&b)));
    let mut mass = 0.0;
    let mut selected = Vec::new();
    for &i in &order {
        selected.push(i);
        mass += m.entries[i].1;
        if mass >= 0.5 {
            break;
        }
    }
    let q = m.entries[*selected.last().unwrap()].1;
    let periods: Vec<f64> = selected
        .iter()
        .map(|&i| m.entries[i].0.period_length(inst))
        .collect::<Result<_>>()?;
    let longest = periods.iter().copied().fold(0.0, f64::max);

    let degenerate = longest == 0.0;
    let (scale, copies): (f64, Vec<usize>) = if degenerate {
        (1.0, vec![1; selected.len()])
    } else {
        let mut scale: f64 = 0.0;
        for &i in &selected {
            for c in m.entries[i].0.point_costs(inst, Exponent::QUADRATIC)? {
                scale = scale.max(8.0 * longest / c.as_f64());
            }
        }
        let copies = selected
            .iter()
            .zip(&periods)
            .map(|(&i, &d)| (scale * (m.entries[i].1 / q) * (longest / d)).ceil() as usize)
            .collect();
        (scale, copies)
    };

    let total_visits: usize = selected
        .iter()
        .zip(&copies)
        .map(|(&i, &c)| c.saturating_mul(m.entries[i].0.len()))
        .fold(0usize, usize::saturating_add);
    if total_visits > MAX_MIXED_VISITS {
        return Err(Error::InvalidStrategy(format!(
            "mixed schedule would have {total_visits} visits (limit {MAX_MIXED_VISITS})"
        )));
    }

    let mut visits = Vec::with_capacity(total_visits);
    for (&i, &c) in selected.iter().zip(&copies) {
        for _ in 0..c {
            visits.extend_from_slice(m.entries[i].0.visits());
        }
    }
    let parts = selected
        .iter()
        .zip(&periods)
        .zip(&copies)
        .map(|((&entry, &period), &copies)| MixedPart {
            entry,
            probability: m.entries[entry].1,
            period,
            copies,
        })
        .collect();
    Ok(MixResult {
        schedule: Schedule::new(visits)?,
        parts,
        q,
        longest_period: longest,
        scale,
        degenerate,
    })
}

/// `sum_i p_i * C_2(x, sigma_i)` for every point: the mixed strategy's
/// expected quadratic cost per point.
pub fn expected_quadratic_costs(m: &MixedStrategy, inst: &Instance) -> Result<Vec<CostValue>> {
    let mut totals = vec![CostValue::Finite(0.0); inst.len()];
    for (s, p) in &m.entries {
        s.check_against(inst)?;
        let (_, profiles) = s.all_profiles(inst);
        for (x, pr) in profiles.iter().enumerate() {
            totals[x] = match (totals[x], pr) {
                (CostValue::Finite(acc), Some(l)) => CostValue::Finite(acc + p * cost_of_lengths(l, Exponent::QUADRATIC)),
                _ => CostValue::Unbounded,
            };
        }
    }
    Ok(totals)
}
