//! Library half of the `atomtf` binary: configuration, commands and output.

// `!(x > 0.0)` is deliberate throughout: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod table;
pub mod verify;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Convergence(String),
    #[error("{0}")]
    Invariant(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// 2 for bad input, 3 for a solver that did not converge, 4 for a
    /// violated invariant, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Convergence(_) => 3,
            CliError::Invariant(_) => 4,
        }
    }
}

impl From<atomtf::Error> for CliError {
    fn from(e: atomtf::Error) -> Self {
        use atomtf::Error as E;
        let msg = e.to_string();
        match e {
            E::Parameter(_) | E::DivergentTail { .. } => CliError::Config(msg),
            E::Convergence { .. } | E::Fit(_) => CliError::Convergence(msg),
            E::InvariantViolation(_) => CliError::Invariant(msg),
        }
    }
}

/// The subcommands of the binary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Neutral Thomas-Fermi atom: density and potential.
    Tf,
    /// TFDW ground state by normalized gradient flow.
    Tfdw,
    /// Screened potentials of the TFDW and TF atoms compared.
    Screen,
    /// Radius of the atom for each kappa.
    Radius,
    /// Ionization scan over a list of Z.
    Ionize,
    /// Liquid drop fission threshold over a list of Z.
    Drop,
    /// Seeded invariant suite.
    Verify,
}

pub fn run(command: Command, cfg: &config::RunConfig) -> Result<commands::Outcome, CliError> {
    cfg.validate()?;
    match command {
        Command::Tf => commands::tf(cfg),
        Command::Tfdw => commands::tfdw(cfg),
        Command::Screen => commands::screen(cfg),
        Command::Radius => commands::radius(cfg),
        Command::Ionize => commands::ionize(cfg),
        Command::Drop => commands::drop(cfg),
        Command::Verify => verify::verify(cfg.seed),
    }
}
