//! Periodic tours and their absence-based cost functions.
//!
//! A [`Schedule`] is one period of an infinite tour. Time is measured in
//! distance travelled, so an *absence* from a point is the distance covered
//! between two consecutive visits to it, wrapping around the period.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::instance::{Instance, PointId};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schedule {
    visits: Vec<PointId>,
}

impl Schedule {
    /// Builds a schedule, collapsing immediate (cyclic) repeats of a point.
    pub fn new(visits: Vec<PointId>) -> Result<Self> {
        if visits.is_empty() {
            return Err(Error::EmptySchedule);
        }
        let mut out: Vec<PointId> = Vec::with_capacity(visits.len());
        for v in visits {
            if out.last() != Some(&v) {
                out.push(v);
            }
        }
        while out.len() > 1 && out.first() == out.last() {
            out.pop();
        }
        Ok(Schedule { visits: out })
    }

    pub fn from_indices(indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().copied().map(PointId).collect())
    }

    pub fn from_labels<S: AsRef<str>>(inst: &Instance, labels: &[S]) -> Result<Self> {
        let visits = labels
            .iter()
            .map(|l| inst.point_by_label(l.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(visits)
    }

    pub fn from_json(inst: &Instance, text: &str) -> Result<Self> {
        let doc: ScheduleDocument = serde_json::from_str(text)?;
        Self::from_labels(inst, &doc.visits)
    }

    pub fn to_document(&self, inst: &Instance) -> ScheduleDocument {
        ScheduleDocument {
            visits: self.visits.iter().map(|&p| inst.label(p).to_string()).collect(),
        }
    }

    pub fn visits(&self) -> &[PointId] {
        &self.visits
    }

    pub fn len(&self) -> usize {
        self.visits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.visits.is_empty()
    }

    pub fn contains(&self, p: PointId) -> bool {
        self.visits.contains(&p)
    }

    /// The same cyclic sequence started `k` positions later.
    pub fn rotated(&self, k: usize) -> Schedule {
        let mut visits = self.visits.clone();
        let len = visits.len();
        visits.rotate_left(k % len);
        Schedule { visits }
    }

    /// `times` consecutive copies of the period.
    pub fn repeated(&self, times: usize) -> Schedule {
        Schedule::new(self.visits.repeat(times.max(1))).expect("nonempty")
    }

    /// Concatenates the visit sequences of several schedules into one period.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Schedule>) -> Result<Schedule> {
        Schedule::new(parts.into_iter().flat_map(|s| s.visits.iter().copied()).collect())
    }

    pub fn check_against(&self, inst: &Instance) -> Result<()> {
        self.visits.iter().try_for_each(|&p| inst.check_point(p))
    }

    /// Total distance of one period, including the closing hop back to the start.
    pub fn period_length(&self, inst: &Instance) -> Result<f64> {
        self.check_against(inst)?;
        Ok(self.hops(inst).sum())
    }

    fn hops<'a>(&'a self, inst: &'a Instance) -> impl Iterator<Item = f64> + 'a {
        let n = self.visits.len();
        (0..n).map(move |k| inst.dist(self.visits[k], self.visits[(k + 1) % n]))
    }

    /// Cyclic absence lengths of point `x`, or `None` if it is never visited.
    pub fn absence_profile(&self, x: PointId, inst: &Instance) -> Result<Option<AbsenceProfile>> {
        inst.check_point(x)?;
        self.check_against(inst)?;
        let (_, profiles) = self.all_profiles(inst);
        Ok(profiles[x.0].clone().map(|lengths| AbsenceProfile { point: x, lengths }))
    }

    /// Period length together with the absence lengths of every point, in
    /// one pass. Points are indexed by `PointId`; unvisited points map to `None`.
    pub(crate) fn all_profiles(&self, inst: &Instance) -> (f64, Vec<Option<Vec<f64>>>) {
        let mut clock = 0.0;
        let mut first_visit: Vec<Option<f64>> = vec![None; inst.len()];
        let mut last_visit: Vec<f64> = vec![0.0; inst.len()];
        let mut profiles: Vec<Option<Vec<f64>>> = vec![None; inst.len()];
        for (k, hop) in self.hops(inst).enumerate() {
            let p = self.visits[k].0;
            match first_visit[p] {
                None => {
                    first_visit[p] = Some(clock);
                    profiles[p] = Some(Vec::new());
                }
                Some(_) => {
                    profiles[p].as_mut().unwrap().push(clock - last_visit[p]);
                }
            }
            last_visit[p] = clock;
            clock += hop;
        }
        let period = clock;
        for p in 0..inst.len() {
            if let (Some(first), Some(lengths)) = (first_visit[p], profiles[p].as_mut()) {
                lengths.push(period - last_visit[p] + first);
            }
        }
        (period, profiles)
    }

    /// Cost of point `x` under exponent `p`; see [`cost_of_lengths`].
    pub fn point_cost(&self, x: PointId, inst: &Instance, p: Exponent) -> Result<CostValue> {
        Ok(match self.absence_profile(x, inst)? {
            Some(profile) => CostValue::Finite(cost_of_lengths(&profile.lengths, p)),
            None => CostValue::Unbounded,
        })
    }

    /// Unweighted cost of every point, indexed by `PointId`.
    pub fn point_costs(&self, inst: &Instance, p: Exponent) -> Result<Vec<CostValue>> {
        self.check_against(inst)?;
        let (_, profiles) = self.all_profiles(inst);
        Ok(profiles
            .iter()
            .map(|pr| match pr {
                Some(lengths) => CostValue::Finite(cost_of_lengths(lengths, p)),
                None => CostValue::Unbounded,
            })
            .collect())
    }

    /// Weighted maximum over all points of `w_x * cost_x`.
    pub fn weighted_objective(&self, inst: &Instance, p: Exponent) -> Result<CostValue> {
        Ok(self
            .point_costs(inst, p)?
            .into_iter()
            .enumerate()
            .map(|(i, c)| c.scale(inst.weights()[i]))
            .fold(CostValue::Finite(0.0), CostValue::max))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleDocument {
    pub visits: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsenceProfile {
    pub point: PointId,
    pub lengths: Vec<f64>,
}

/// Which cost function to evaluate: the length-biased power mean for a finite
/// exponent, or the longest absence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub const QUADRATIC: Exponent = Exponent::Finite(2.0);

    pub fn finite(p: f64) -> Result<Self> {
        if p.is_nan() || p < 2.0 {
            Err(Error::InvalidExponent(p))
        } else if p.is_infinite() {
            Ok(Exponent::Infinity)
        } else {
            Ok(Exponent::Finite(p))
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "max" => Ok(Exponent::Infinity),
            other => other
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("cannot parse exponent `{s}`")))
                .and_then(Exponent::finite),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// `max l` for `p = inf`, otherwise `sum l^p / sum l^(p-1)`.
///
/// Lengths are rescaled by their maximum first so large exponents do not
/// overflow. An all-zero profile (a single-point schedule) costs 0.
pub fn cost_of_lengths(lengths: &[f64], p: Exponent) -> f64 {
    let max = lengths.iter().copied().fold(0.0, f64::max);
    match p {
        Exponent::Infinity => max,
        _ if max == 0.0 => 0.0,
        Exponent::Finite(2.0) => {
            let (sq, lin) = lengths.iter().fold((0.0, 0.0), |(sq, lin), &l| (sq + l * l, lin + l));
            sq / lin
        }
        Exponent::Finite(p) => {
            let (num, den) = lengths.iter().fold((0.0, 0.0), |(num, den), &l| {
                let r = l / max;
                (num + r.powf(p), den + r.powf(p - 1.0))
            });
            max * num / den
        }
    }
}

/// A cost that is either finite or infinite because a point is never visited.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostValue {
    Finite(f64),
    Unbounded,
}

impl CostValue {
    pub fn is_finite(self) -> bool {
        matches!(self, CostValue::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            CostValue::Finite(v) => Some(v),
            CostValue::Unbounded => None,
        }
    }

    /// `f64::INFINITY` for unbounded values.
    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn scale(self, factor: f64) -> CostValue {
        match self {
            CostValue::Finite(v) => CostValue::Finite(v * factor),
            CostValue::Unbounded => CostValue::Unbounded,
        }
    }

    pub fn max(self, other: CostValue) -> CostValue {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl PartialOrd for CostValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.as_f64().partial_cmp(&other.as_f64())
    }
}

impl fmt::Display for CostValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostValue::Finite(v) => write!(f, "{v}"),
            CostValue::Unbounded => f.write_str("UNBOUNDED"),
        }
    }
}

impl Serialize for CostValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CostValue::Finite(v) => s.serialize_f64(*v),
            CostValue::Unbounded => s.serialize_str("UNBOUNDED"),
        }
    }
}

impl<'de> Deserialize<'de> for CostValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Tag(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(CostValue::Finite(v)),
            Repr::Tag(t) if t == "UNBOUNDED" => Ok(CostValue::Unbounded),
            Repr::Tag(t) => Err(serde::de::Error::custom(format!("unexpected cost `{t}`"))),
        }
    }
}
