//! Benchmark fixtures shared by the criterion benches.

use hyperbin::{Arrangement, ClassModel, Hyperplane};

/// Four planar Gaussian classes with a shared correlated covariance.
pub fn planar_model() -> ClassModel {
    ClassModel::new(
        vec![vec![-2.0, -1.0], vec![2.0, -1.0], vec![-0.5, 2.0], vec![1.5, 1.5]],
        vec![1.0, 0.3, 0.3, 0.8],
        vec![1.0, 2.0, 1.0, 3.0],
    )
    .expect("valid model")
}

/// `j` lines through the unit disc at evenly spread angles.
pub fn fan(j: usize) -> Arrangement {
    let hs = (0..j)
        .map(|k| {
            let t = std::f64::consts::PI * (k as f64 + 0.3) / j as f64;
            Hyperplane::new(vec![t.cos(), t.sin()], 0.2 * k as f64 - 0.3).expect("unit normal")
        })
        .collect();
    Arrangement::new(2, hs).expect("consistent dimension")
}
