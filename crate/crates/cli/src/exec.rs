use altdesign_core::Executor;
use rayon::prelude::*;

/// Runs index-parallel maps on a dedicated rayon pool; results keep index order.
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    /// `threads == 0` lets rayon pick the thread count.
    pub fn new(threads: usize) -> Result<RayonExecutor, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        Ok(RayonExecutor { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for RayonExecutor {
    fn map_collect<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        // Nested calls from a worker run inline on that worker's pool.
        self.pool.install(|| (0..len).into_par_iter().map(&f).collect())
    }
}
