//! Seeded generators for matrices that satisfy the monotone-gain conditions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{GroupRecord, IncrementMatrix};

/// Small random instance with unit masses and unit costs: `1..=max_groups`
/// groups, `0..=max_increments` increments each, `A` in `[0.1, 10]`, gains in
/// `[0.05, 2]` sorted descending and `beta` in `[0.5, 1.5]`.
pub fn random_instance<R: Rng>(rng: &mut R, max_groups: usize, max_increments: usize) -> IncrementMatrix {
    let n = rng.random_range(1..=max_groups);
    let groups = (0..n)
        .map(|id| {
            let d = rng.random_range(0..=max_increments);
            let mut alphas: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..2.0)).collect();
            alphas.sort_by(|a, b| b.total_cmp(a));
            let baseline = rng.random_range(0.1..10.0);
            let beta = rng.random_range(0.5..1.5);
            GroupRecord::unit(id as u32, baseline, alphas, beta)
        })
        .collect();
    IncrementMatrix::new(groups).expect("generated groups are well formed")
}

/// Large benchmark matrix: `groups` groups with `increments` geometrically
/// decaying gains each. Every group draws from its own stream, so the result
/// does not depend on the number of threads.
pub fn bench_matrix(groups: usize, increments: usize, seed: u64) -> IncrementMatrix {
    let records = (0..groups)
        .into_par_iter()
        .map(|id| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id as u64);
            let mut alpha = rng.random_range(0.1..1.0);
            let alphas = (0..increments)
                .map(|_| {
                    let a = alpha;
                    alpha *= rng.random_range(0.95..1.0);
                    a
                })
                .collect();
            let mut g = GroupRecord::unit(id as u32, rng.random_range(0.5..5.0), alphas, 1.0);
            g.mass = rng.random_range(0.1..1.0);
            g.increment_cost = g.mass;
            g
        })
        .collect();
    IncrementMatrix::new(records).expect("generated groups are well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alloc::validate_inputs;

    #[test]
    fn generated_instances_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            assert!(validate_inputs(&random_instance(&mut rng, 6, 4), 0.0).is_clean());
        }
        let m = bench_matrix(20, 8, 1);
        assert!(validate_inputs(&m, 0.0).is_clean());
        assert_eq!(m.total_increments(), 160);
        assert_eq!(bench_matrix(20, 8, 1), m);
    }
}
