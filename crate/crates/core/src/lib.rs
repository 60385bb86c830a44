//! Optimal discrete allocation of transfers across heterogeneous groups,
//! together with the life-cycle household model that produces the inputs.

pub mod alloc;
pub mod calibration;
pub mod inputs;
pub mod lifecycle;
pub mod scenarios;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Sizes the global worker pool. Has no effect once the pool is running.
pub fn set_threads(threads: usize) -> bool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().is_ok()
}

/// Workers in the current pool.
pub fn current_threads() -> usize {
    rayon::current_num_threads()
}
