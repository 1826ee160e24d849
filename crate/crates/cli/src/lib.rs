//! Command-line front end for `sharpquad`.

pub mod args;
pub mod config;
pub mod format;
pub mod run;

pub use args::{parse_config, Cli};
pub use config::RunConfig;
pub use run::{render, run, Outcome};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SHARPQUAD_THREADS";

/// Sizes the global thread pool from [`THREADS_ENV`], when set.
pub fn init_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = match raw.trim().parse() {
        Ok(t) if t > 0 => t,
        _ => anyhow::bail!("{THREADS_ENV}: expected a positive integer, got {raw:?}"),
    };
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}
