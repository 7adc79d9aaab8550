pub mod extract;
pub mod lid_report;
pub mod run;
pub mod split;
pub mod stats;

/// Worker pool honoring `NSDID_WORKERS` (defaults to the rayon default).
pub fn worker_pool() -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(n) = std::env::var("NSDID_WORKERS") {
        if let Ok(n) = n.parse::<usize>() {
            if n > 0 {
                builder = builder.num_threads(n);
            }
        }
    }
    builder.build().expect("thread pool")
}
