//! Worker pool shared by the compute kernels.
//!
//! The pool size is read once from `CARDINAL_MRA_THREADS` (a positive
//! integer); unset or invalid values fall back to rayon's default. Every
//! parallel kernel in this crate writes per-cell results and reduces them
//! sequentially, so output does not depend on the worker count.

use std::sync::OnceLock;

use rayon::{ThreadPool, ThreadPoolBuilder};

pub const THREADS_ENV: &str = "CARDINAL_MRA_THREADS";

pub fn pool() -> &'static ThreadPool {
    static POOL: OnceLock<ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut builder = ThreadPoolBuilder::new();
        if let Some(n) = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
        {
            builder = builder.num_threads(n);
        }
        builder
            .build()
            .expect("worker pool initialization should succeed")
    })
}
