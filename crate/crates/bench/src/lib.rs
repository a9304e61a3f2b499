//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use eshape_core::builtin;
use eshape_core::model::ModelFile;
use eshape_core::ModelSpec;

/// The built-in double pendulum with default constants.
pub fn pendulum() -> Arc<ModelSpec> {
    let text = builtin::model_text("double-pendulum").expect("built-in model");
    Arc::new(
        ModelFile::parse(&text)
            .and_then(|f| f.build(&[]))
            .expect("valid built-in model"),
    )
}

/// Points of a small in-domain box around the origin.
pub fn sample_points(count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| {
            let t = i as f64 / count.max(1) as f64;
            vec![0.12 * (2.0 * t - 1.0), 0.1 * (6.0 * t).sin()]
        })
        .collect()
}
