//! Batch driver around `asymdir-core`: TOML run configs in, CSV tables,
//! TOML reports and binary field files out.
//!
//! Exit statuses: 0 success, 1 IO failure, 2 invalid configuration,
//! 3 numerical failure (a `diagnostics.txt` is written next to the artifacts).

pub mod commands;
pub mod config;
pub mod io;

use std::path::PathBuf;

use asymdir_core::Error as CoreError;

pub use config::{Command, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Core { stage: &'static str, source: CoreError },

    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Whether a core error means the inputs were inadmissible rather than a
/// computation going wrong.
fn is_validation(e: &CoreError) -> bool {
    matches!(
        e,
        CoreError::InvalidArgument(_)
            | CoreError::OutOfRange { .. }
            | CoreError::Domain { .. }
            | CoreError::StretchTooLarge { .. }
    )
}

pub fn error_code(e: &CoreError) -> &'static str {
    match e {
        CoreError::InvalidArgument(_) => "invalid-argument",
        CoreError::OutOfRange { .. } => "out-of-range",
        CoreError::Domain { .. } => "outside-domain",
        CoreError::NoAdmissibleShift { .. } => "no-admissible-shift",
        CoreError::IntegrationFailure { .. } => "integration-failure",
        CoreError::QuadratureFailure { .. } => "quadrature-failure",
        CoreError::HorizonTooSmall { .. } => "horizon-too-small",
        CoreError::CriterionDivergent => "criterion-divergent",
        CoreError::CriterionInconclusive => "criterion-inconclusive",
        CoreError::ScanInconclusive { .. } => "scan-inconclusive",
        CoreError::NonMonotoneEndpoints { .. } => "non-monotone-endpoints",
        CoreError::DegenerateGradient { .. } => "degenerate-gradient",
        CoreError::HessianTooLarge { .. } => "hessian-too-large",
        CoreError::SearchExhausted { .. } => "search-exhausted",
        CoreError::StretchTooLarge { .. } => "stretch-too-large",
        CoreError::NoConvergence { .. } => "no-convergence",
        CoreError::DegenerateSystem { .. } => "degenerate-system",
        CoreError::MissingSample { .. } => "missing-sample",
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Core { source, .. } if is_validation(source) => 2,
            RunError::Core { .. } => 3,
            RunError::Io { .. } => 1,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            RunError::Config(_) => "invalid-config",
            RunError::Core { source, .. } => error_code(source),
            RunError::Io { .. } => "io-error",
        }
    }
}

pub(crate) trait Stage<T> {
    fn at(self, stage: &'static str) -> Result<T, RunError>;
}

impl<T> Stage<T> for asymdir_core::Result<T> {
    fn at(self, stage: &'static str) -> Result<T, RunError> {
        self.map_err(|source| RunError::Core { stage, source })
    }
}

/// Everything one process run needs.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: RunConfig,
    pub out: PathBuf,
    /// Worker threads for radius fan-out; 0 lets rayon decide.
    pub threads: usize,
}

impl Invocation {
    pub fn run(&self) -> Result<(), RunError> {
        let out = io::OutDir::create(&self.out)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| RunError::Config(format!("thread pool: {e}")))?;
        let cfg = &self.config;
        log::info!(
            "{} on {} (config {})",
            self.command.as_str(),
            cfg.metric.describe(),
            &cfg.hash()[..12]
        );
        let lo = cfg.lower()?;
        match self.command {
            Command::Classify => commands::classify(cfg, &lo, &out),
            Command::VerifyBarrier => commands::verify_barrier(cfg, &lo, &out),
            Command::Solve => commands::solve(cfg, &lo, &out),
            Command::Experiment => pool.install(|| commands::experiment(cfg, &lo, &out)),
        }
    }

    /// Run and map the outcome to an exit status, writing diagnostics on
    /// failure.
    pub fn execute(&self) -> i32 {
        match self.run() {
            Ok(()) => 0,
            Err(e) => {
                report_failure(&self.out, Some(self.command), Some(&self.config), &e);
                e.exit_code()
            }
        }
    }
}

/// Log the failure and leave a `diagnostics.txt` in `out` when possible.
pub fn report_failure(
    out: &std::path::Path,
    command: Option<Command>,
    cfg: Option<&RunConfig>,
    e: &RunError,
) {
    eprintln!("error[{}]: {e}", e.code());
    let mut body = format!("status = {}\ncode = \"{}\"\n", e.exit_code(), e.code());
    if let Some(c) = command {
        body.push_str(&format!("command = \"{}\"\n", c.as_str()));
    }
    if let Some(cfg) = cfg {
        body.push_str(&format!("config_sha256 = \"{}\"\n", cfg.hash()));
    }
    if let RunError::Core { stage, .. } = e {
        body.push_str(&format!("stage = \"{stage}\"\n"));
    }
    body.push_str(&format!("message = {}\n", toml::Value::from(e.to_string())));
    if let Err(w) = io::write_diagnostics(out, &body) {
        eprintln!("could not write diagnostics: {w}");
    }
}
