//! Small hand-checkable instances shared by tests, the CLI and the bindings.

use crate::instance::Instance;

/// Three points `a, b, c` at mutual distance 1.
pub fn unit_triangle(weights: [f64; 3]) -> Instance {
    Instance::new(
        vec!["a".into(), "b".into(), "c".into()],
        weights.to_vec(),
        vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]],
    )
    .expect("unit triangle is a metric")
}

/// Points on a line at the given coordinates, labelled `0, 1, ...`, unit weights.
pub fn line(coords: &[f64]) -> Instance {
    let labels = (0..coords.len()).map(|i| i.to_string()).collect();
    let dist = coords
        .iter()
        .map(|a| coords.iter().map(|b| (a - b).abs()).collect())
        .collect();
    Instance::new(labels, vec![1.0; coords.len()], dist).expect("distinct line points form a metric")
}
