//! Deterministic workloads shared by the benchmarks.

use sphere_degree::geometry::{uniform_point, SpherePoint};
use sphere_degree::seed;

/// `count` tuples of `m` uniform points on S^{2n-1}.
pub fn tuples(n: usize, m: usize, count: usize, master: u64) -> Vec<Vec<SpherePoint>> {
    let mut rng = seed::stream(master, "bench-tuples", n as u64);
    (0..count)
        .map(|_| (0..m).map(|_| uniform_point(&mut rng, n)).collect())
        .collect()
}

/// Point pairs for kernel evaluation.
pub fn pairs(n: usize, count: usize, master: u64) -> Vec<(SpherePoint, SpherePoint)> {
    tuples(n, 2, count, master)
        .into_iter()
        .map(|mut t| {
            let b = t.pop().unwrap();
            let a = t.pop().unwrap();
            (a, b)
        })
        .collect()
}
