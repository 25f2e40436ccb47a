//! Points, weights and the finite metric they live in.
//!
//! An [`Instance`] is immutable once built. Every constructor validates the
//! metric (symmetry, zero diagonal, strictly positive off-diagonal entries,
//! triangle inequality up to a relative tolerance) and rescales the weights
//! so that the largest one is exactly 1.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when checking the triangle inequality.
pub const METRIC_TOLERANCE: f64 = 1e-9;

/// Dense index of a point inside an [`Instance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointId(pub usize);

impl PointId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    labels: Vec<String>,
    weights: Vec<f64>,
    dist: Vec<f64>,
}

impl Instance {
    /// Builds an instance from an explicit distance matrix.
    pub fn new(labels: Vec<String>, weights: Vec<f64>, dist: Vec<Vec<f64>>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::TooFewPoints { min: 1, got: 0 });
        }
        if weights.len() != n {
            return Err(Error::LengthMismatch {
                what: "weights",
                expected: n,
                got: weights.len(),
            });
        }
        let mut seen = HashSet::with_capacity(n);
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        for (label, &w) in labels.iter().zip(&weights) {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::NonpositiveWeight {
                    label: label.clone(),
                    value: w,
                });
            }
        }
        if dist.len() != n {
            return Err(Error::LengthMismatch {
                what: "distance matrix",
                expected: n,
                got: dist.len(),
            });
        }
        let report = validate_metric(&dist, METRIC_TOLERANCE);
        if !report.is_valid() {
            return Err(Error::InvalidMetric(report));
        }

        let max_w = weights.iter().copied().fold(f64::MIN, f64::max);
        let weights = weights.into_iter().map(|w| w / max_w).collect();
        let dist = dist.into_iter().flatten().collect();
        Ok(Instance {
            labels,
            weights,
            dist,
        })
    }

    /// Builds an instance whose metric is the planar Euclidean distance
    /// between the given coordinates.
    pub fn from_coords(labels: Vec<String>, weights: Vec<f64>, coords: &[[f64; 2]]) -> Result<Self> {
        if coords.len() != labels.len() {
            return Err(Error::LengthMismatch {
                what: "coordinates",
                expected: labels.len(),
                got: coords.len(),
            });
        }
        Self::new(labels, weights, euclidean_matrix(coords))
    }

    pub fn from_document(doc: InstanceDocument) -> Result<Self> {
        match doc.metric {
            MetricDocument::Explicit { dist } => Self::new(doc.labels, doc.weights, dist),
            MetricDocument::Euclidean { coords } => Self::from_coords(doc.labels, doc.weights, &coords),
        }
    }

    /// Parses and validates an instance document.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: InstanceDocument = serde_json::from_str(text)?;
        Self::from_document(doc)
    }

    /// Explicit-metric document describing this instance.
    pub fn to_document(&self) -> InstanceDocument {
        InstanceDocument {
            labels: self.labels.clone(),
            weights: self.weights.clone(),
            metric: MetricDocument::Explicit {
                dist: self.dist.chunks(self.len()).map(<[f64]>::to_vec).collect(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("instance documents always serialize")
    }

    /// Same metric and labels with different weights (normalized again).
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        Self::new(self.labels.clone(), weights, self.dist_matrix())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = PointId> + '_ {
        (0..self.len()).map(PointId)
    }

    #[inline]
    pub fn dist(&self, a: PointId, b: PointId) -> f64 {
        self.dist[a.0 * self.len() + b.0]
    }

    #[inline]
    pub fn weight(&self, p: PointId) -> f64 {
        self.weights[p.0]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, p: PointId) -> &str {
        &self.labels[p.0]
    }

    pub fn point_by_label(&self, label: &str) -> Result<PointId> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(PointId)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn check_point(&self, p: PointId) -> Result<()> {
        if p.0 < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownPoint {
                index: p.0,
                n: self.len(),
            })
        }
    }

    pub fn dist_matrix(&self) -> Vec<Vec<f64>> {
        self.dist.chunks(self.len()).map(<[f64]>::to_vec).collect()
    }

    /// Largest pairwise distance.
    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest positive distance among the given points, if there are two.
    pub fn min_distance(&self, subset: &[PointId]) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (i, &a) in subset.iter().enumerate() {
            for &b in &subset[i + 1..] {
                let d = self.dist(a, b);
                if d > 0.0 && best.is_none_or(|m| d < m) {
                    best = Some(d);
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub labels: Vec<String>,
    pub weights: Vec<f64>,
    pub metric: MetricDocument,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MetricDocument {
    Explicit { dist: Vec<Vec<f64>> },
    Euclidean { coords: Vec<[f64; 2]> },
}

fn euclidean_matrix(coords: &[[f64; 2]]) -> Vec<Vec<f64>> {
    coords
        .iter()
        .map(|a| coords.iter().map(|b| (a[0] - b[0]).hypot(a[1] - b[1])).collect())
        .collect()
}

/// A single way in which a matrix fails to be a metric. Indices are rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NotSquare { row: usize, len: usize },
    NonFinite { a: usize, b: usize, value: f64 },
    Negative { a: usize, b: usize, value: f64 },
    NonzeroDiagonal { a: usize, value: f64 },
    ZeroDistance { a: usize, b: usize },
    Asymmetric { a: usize, b: usize, ab: f64, ba: f64 },
    Triangle { a: usize, b: usize, c: usize, ab: f64, bc: f64, ac: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::NotSquare { row, len } => write!(f, "row {row} has {len} entries"),
            Violation::NonFinite { a, b, value } => write!(f, "non-finite distance {value} at ({a}, {b})"),
            Violation::Negative { a, b, value } => write!(f, "negative distance {value} at ({a}, {b})"),
            Violation::NonzeroDiagonal { a, value } => write!(f, "nonzero self-distance {value} at {a}"),
            Violation::ZeroDistance { a, b } => write!(f, "zero distance between distinct points {a} and {b}"),
            Violation::Asymmetric { a, b, ab, ba } => write!(f, "asymmetric pair ({a}, {b}): {ab} vs {ba}"),
            Violation::Triangle { a, b, c, ab, bc, ac } => write!(
                f,
                "triangle inequality violated by ({a}, {b}, {c}): {ab} + {bc} < {ac}"
            ),
        }
    }
}

/// Findings of [`validate_metric`]. Empty iff the matrix is a metric.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricReport {
    pub violations: Vec<Violation>,
}

impl MetricReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const SHOWN: usize = 3;
        if self.violations.is_empty() {
            return f.write_str("no violations");
        }
        for (i, v) in self.violations.iter().take(SHOWN).enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        if self.violations.len() > SHOWN {
            write!(f, "; and {} more", self.violations.len() - SHOWN)?;
        }
        Ok(())
    }
}

/// Checks every metric axiom and reports each violation with its witness.
///
/// The triangle inequality `d(a,c) <= d(a,b) + d(b,c)` is accepted up to a
/// relative slack of `tol`. Triangle checks are skipped when the entry-wise
/// checks already failed, since they would only repeat the same defect.
pub fn validate_metric(dist: &[Vec<f64>], tol: f64) -> MetricReport {
    let n = dist.len();
    let mut violations = Vec::new();
    for (row, r) in dist.iter().enumerate() {
        if r.len() != n {
            violations.push(Violation::NotSquare { row, len: r.len() });
        }
    }
    if !violations.is_empty() {
        return MetricReport { violations };
    }

    for a in 0..n {
        let daa = dist[a][a];
        if daa != 0.0 {
            violations.push(Violation::NonzeroDiagonal { a, value: daa });
        }
        for b in 0..n {
            let v = dist[a][b];
            if !v.is_finite() {
                violations.push(Violation::NonFinite { a, b, value: v });
            } else if v < 0.0 {
                violations.push(Violation::Negative { a, b, value: v });
            }
        }
        for b in a + 1..n {
            let (ab, ba) = (dist[a][b], dist[b][a]);
            if ab != ba {
                violations.push(Violation::Asymmetric { a, b, ab, ba });
            }
            if ab == 0.0 || ba == 0.0 {
                violations.push(Violation::ZeroDistance { a, b });
            }
        }
    }
    if !violations.is_empty() {
        return MetricReport { violations };
    }

    for a in 0..n {
        for c in a + 1..n {
            let ac = dist[a][c];
            for b in 0..n {
                if b == a || b == c {
                    continue;
                }
                let (ab, bc) = (dist[a][b], dist[b][c]);
                if ac > (ab + bc) * (1.0 + tol) {
                    violations.push(Violation::Triangle { a, b, c, ab, bc, ac });
                }
            }
        }
    }
    MetricReport { violations }
}

/// How point weights are drawn by [`generate_random`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightLaw {
    /// Every weight is 1.
    Uniform,
    /// Uniform on (0, 1].
    Random,
    /// `2^-k` with `k` uniform on `0..=levels`.
    Dyadic { levels: u32 },
    /// `u^4` with `u` uniform on (0, 1]; spreads weights over many scales.
    Skewed,
}

impl FromStr for WeightLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(WeightLaw::Uniform),
            "random" => Ok(WeightLaw::Random),
            "skewed" => Ok(WeightLaw::Skewed),
            "dyadic" => Ok(WeightLaw::Dyadic { levels: 4 }),
            _ => s
                .strip_prefix("dyadic:")
                .and_then(|l| l.parse().ok())
                .map(|levels| WeightLaw::Dyadic { levels })
                .ok_or_else(|| Error::InvalidParameter(format!("unknown weight law `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Geometry {
    /// Points uniform in the unit square, Euclidean distances.
    EuclideanPlane,
    /// Symmetric random edge costs closed under shortest paths.
    RandomClosure,
}

impl FromStr for Geometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean-plane" | "euclidean" => Ok(Geometry::EuclideanPlane),
            "random-closure" | "closure" => Ok(Geometry::RandomClosure),
            _ => Err(Error::InvalidParameter(format!("unknown geometry `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n: usize,
    pub weight_law: WeightLaw,
    pub geometry: Geometry,
}

/// Deterministic random instance for a given seed. Labels are `p0..p{n-1}`.
pub fn generate_random(spec: &GeneratorSpec, seed: u64) -> Result<Instance> {
    let n = spec.n;
    if n < 3 {
        return Err(Error::TooFewPoints { min: 3, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = (0..n).map(|i| format!("p{i}")).collect();

    let dist = match spec.geometry {
        Geometry::EuclideanPlane => {
            let coords: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
            euclidean_matrix(&coords)
        }
        Geometry::RandomClosure => {
            let mut d = vec![vec![0.0; n]; n];
            for a in 0..n {
                for b in a + 1..n {
                    let c = rng.gen_range(0.1..1.0);
                    d[a][b] = c;
                    d[b][a] = c;
                }
            }
            // Floyd-Warshall; the closure of positive symmetric costs is a metric.
            for k in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        let via = d[a][k] + d[k][b];
                        if via < d[a][b] {
                            d[a][b] = via;
                        }
                    }
                }
            }
            d
        }
    };

    let weights = (0..n)
        .map(|_| match spec.weight_law {
            WeightLaw::Uniform => 1.0,
            WeightLaw::Random => 1.0 - rng.gen::<f64>(),
            WeightLaw::Dyadic { levels } => 0.5f64.powi(rng.gen_range(0..=levels) as i32),
            WeightLaw::Skewed => (1.0 - rng.gen::<f64>()).powi(4),
        })
        .collect();

    Instance::new(labels, weights, dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::unit_triangle;

    #[test]
    fn weights_are_normalized_by_max() {
        let inst = unit_triangle([2.0, 1.0, 1.0]);
        assert_eq!(inst.weights(), &[1.0, 0.5, 0.5]);
    }

    #[test]
    fn triangle_violation_is_rejected_with_witness() {
        let doc = r#"{"labels":["a","b","c"],"weights":[1,1,1],
            "metric":{"type":"explicit","dist":[[0,1,5],[1,0,1],[5,1,0]]}}"#;
        match Instance::from_json(doc) {
            Err(Error::InvalidMetric(report)) => {
                assert!(report
                    .violations
                    .iter()
                    .any(|v| matches!(v, Violation::Triangle { a: 0, b: 1, c: 2, .. })));
            }
            other => panic!("expected metric violation, got {other:?}"),
        }
    }

    #[test]
    fn zero_distance_between_distinct_points() {
        let doc = r#"{"labels":["a","b"],"weights":[1,1],
            "metric":{"type":"explicit","dist":[[0,0],[0,0]]}}"#;
        let err = Instance::from_json(doc).unwrap_err();
        assert!(err.to_string().contains("zero distance between distinct points"), "{err}");
    }

    #[test]
    fn nonpositive_weight() {
        let doc = r#"{"labels":["a","b"],"weights":[1,0],
            "metric":{"type":"euclidean","coords":[[0,0],[1,0]]}}"#;
        assert!(matches!(Instance::from_json(doc), Err(Error::NonpositiveWeight { .. })));
    }

    #[test]
    fn malformed_document() {
        assert!(matches!(Instance::from_json("{\"labels\": 3}"), Err(Error::Parse(_))));
    }

    #[test]
    fn validate_metric_cases() {
        let unit = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        assert!(validate_metric(&unit, 1e-9).is_valid());

        let asym = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        let report = validate_metric(&asym, 1e-9);
        assert!(report.violations.contains(&Violation::Asymmetric {
            a: 0,
            b: 1,
            ab: 1.0,
            ba: 2.0
        }));

        let line: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| (i as f64 - j as f64).abs()).collect())
            .collect();
        assert!(validate_metric(&line, 1e-9).is_valid());

        let ragged = vec![vec![0.0, 1.0], vec![1.0]];
        assert!(matches!(
            validate_metric(&ragged, 1e-9).violations[0],
            Violation::NotSquare { row: 1, len: 1 }
        ));
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = GeneratorSpec {
            n: 5,
            weight_law: WeightLaw::Random,
            geometry: Geometry::EuclideanPlane,
        };
        assert_eq!(generate_random(&spec, 7).unwrap(), generate_random(&spec, 7).unwrap());
        assert_ne!(generate_random(&spec, 7).unwrap(), generate_random(&spec, 8).unwrap());
    }

    #[test]
    fn generation_requires_three_points() {
        let spec = GeneratorSpec {
            n: 2,
            weight_law: WeightLaw::Uniform,
            geometry: Geometry::RandomClosure,
        };
        assert!(matches!(generate_random(&spec, 0), Err(Error::TooFewPoints { min: 3, got: 2 })));
    }

    #[test]
    fn random_closure_is_a_metric() {
        for seed in 0..10 {
            let spec = GeneratorSpec {
                n: 12,
                weight_law: WeightLaw::Skewed,
                geometry: Geometry::RandomClosure,
            };
            let inst = generate_random(&spec, seed).unwrap();
            assert!(validate_metric(&inst.dist_matrix(), 1e-9).is_valid());
        }
    }

    #[test]
    fn euclidean_plane_within_unit_square_diameter() {
        let spec = GeneratorSpec {
            n: 100,
            weight_law: WeightLaw::Dyadic { levels: 5 },
            geometry: Geometry::EuclideanPlane,
        };
        let inst = generate_random(&spec, 3).unwrap();
        assert!(inst.diameter() <= 2f64.sqrt());
        assert!(inst.weights().iter().all(|&w| w > 0.0 && w <= 1.0));
        assert!(inst.weights().contains(&1.0));
    }

    #[test]
    fn weight_law_parsing() {
        assert_eq!("dyadic:6".parse::<WeightLaw>().unwrap(), WeightLaw::Dyadic { levels: 6 });
        assert!("bogus".parse::<WeightLaw>().is_err());
        assert_eq!("random-closure".parse::<Geometry>().unwrap(), Geometry::RandomClosure);
    }
}
