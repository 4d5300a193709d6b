//! Seeded domain sampling and the parallel sample-sweep primitive.
//!
//! Reproducibility contract: random state is derived from `(seed, stream)`
//! pairs, never from a shared mutable generator, so results are identical no
//! matter how samples are scheduled across threads.

use crate::chart::{AdaptedManifold, MetricAtPoint, Point};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent generator for a given `(seed, stream)`; used one stream per
/// sample index.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw from the manifold's rectangular domain.
pub fn uniform_point(m: &AdaptedManifold, rng: &mut ChaCha8Rng) -> Point {
    let coords = m
        .domain()
        .iter()
        .map(|d| rng.gen_range(d[0]..=d[1]))
        .collect();
    Point::new(coords).expect("domain bounds are finite")
}

/// Draw a point where the metric evaluates and is positive definite,
/// resampling up to 100 times.
pub fn sample_point(m: &AdaptedManifold, rng: &mut ChaCha8Rng) -> Result<(Point, MetricAtPoint)> {
    let mut last: Option<Error> = None;
    for _ in 0..100 {
        let p = uniform_point(m, rng);
        match m.metric_at(&p) {
            Ok(metric) => return Ok((p, metric)),
            Err(e) => last = Some(e),
        }
    }
    Err(Error::SamplingExhausted {
        tries: 100,
        last: last.map(|e| e.to_string()).unwrap_or_default(),
    })
}

/// Apply `f` to `0..count`, in parallel when the `parallel` feature is on.
/// Output order is by index either way, so downstream reductions are
/// scheduling-independent.
#[cfg(feature = "parallel")]
pub fn map_samples<T: Send>(count: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_samples<T: Send>(count: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    map_samples_seq(count, f)
}

/// Sequential sweep; always available so benchmarks can compare it against
/// the parallel path in a single build.
pub fn map_samples_seq<T: Send>(count: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..count).map(f).collect()
}
