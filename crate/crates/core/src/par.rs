//! Execution schedule for the data-parallel loops.
//!
//! Every parallel map in the crate goes through [`map_range`], which always
//! returns results in index order. Reductions are then folded sequentially
//! by the caller, so serial and parallel schedules give bit-identical output.

use std::cell::Cell;
use std::sync::atomic::{AtomicU8, Ordering};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    Serial,
    Parallel,
}

static DEFAULT: AtomicU8 = AtomicU8::new(1);

thread_local! {
    static OVERRIDE: Cell<Option<Schedule>> = const { Cell::new(None) };
}

/// Sets the process-wide default schedule.
pub fn set_default(schedule: Schedule) {
    DEFAULT.store(matches!(schedule, Schedule::Parallel) as u8, Ordering::Relaxed);
}

/// The schedule in effect on the current thread.
pub fn current() -> Schedule {
    OVERRIDE.with(|o| o.get()).unwrap_or_else(|| {
        if DEFAULT.load(Ordering::Relaxed) == 1 {
            Schedule::Parallel
        } else {
            Schedule::Serial
        }
    })
}

/// Runs `f` with `schedule` forced on the calling thread.
pub fn with_schedule<R>(schedule: Schedule, f: impl FnOnce() -> R) -> R {
    let prev = OVERRIDE.with(|o| o.replace(Some(schedule)));
    let out = f();
    OVERRIDE.with(|o| o.set(prev));
    out
}

/// Maps `f` over `0..n`, returning results in index order.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match current() {
        Schedule::Serial => (0..n).map(f).collect(),
        Schedule::Parallel => parallel_map(n, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Caps the global worker pool. Only the first call has an effect.
pub fn init_threads(threads: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
}
