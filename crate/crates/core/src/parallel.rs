//! Shared rayon pool. `NMK_THREADS` caps the worker count; unset or invalid
//! values fall back to rayon's default.

use std::sync::OnceLock;

use rayon::ThreadPool;

static POOL: OnceLock<ThreadPool> = OnceLock::new();

pub fn pool() -> &'static ThreadPool {
    POOL.get_or_init(|| {
        let mut b = rayon::ThreadPoolBuilder::new().thread_name(|i| format!("nmk-{i}"));
        if let Some(n) = thread_cap() {
            b = b.num_threads(n);
        }
        b.build().expect("failed to build thread pool")
    })
}

fn thread_cap() -> Option<usize> {
    let raw = std::env::var("NMK_THREADS").ok()?;
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => Some(n),
        _ => {
            log::warn!("ignoring NMK_THREADS={raw:?}");
            None
        }
    }
}

/// Run `f` inside the shared pool.
pub fn install<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    pool().install(f)
}
