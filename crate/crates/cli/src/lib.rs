//! Experiment plumbing behind the `cvlearn` binary: object specs, run
//! configurations, sweeps and result records.

pub mod commands;
pub mod config;
pub mod specs;
pub mod sweep;

use anyhow::{anyhow, Context};

/// Environment variable bounding the worker pool.
pub const THREADS_ENV: &str = "CVLEARN_THREADS";

/// A failed command, split by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad configuration or input files; exit code 2.
    Config(anyhow::Error),
    /// Failure while running; exit code 1.
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Runtime(e) => e,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

pub trait ConfigContext<T> {
    /// Mark an error as a configuration problem.
    fn config(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> ConfigContext<T> for Result<T, E> {
    fn config(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Config(e.into()))
    }
}

/// Worker count: `CVLEARN_THREADS` if set, else `requested`, else all cores.
pub fn thread_count(requested: Option<usize>) -> Result<usize, Failure> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().with_context(|| format!("{THREADS_ENV}={v:?} is not a count")).config()?;
        if n == 0 {
            return Err(Failure::Config(anyhow!("{THREADS_ENV} must be at least 1")));
        }
        return Ok(n);
    }
    Ok(requested.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())))
}

/// Run `f` inside a dedicated rayon pool of `threads` workers.
pub fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| Failure::Runtime(e.into()))?;
    Ok(pool.install(f))
}
