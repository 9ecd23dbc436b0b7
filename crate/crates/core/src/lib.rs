//! Socio-technical mining of Git repositories.
//!
//! The crate reads a repository through [`RepositoryHandle`], turns commits,
//! files and developers into dense integer ids ([`mappers`]), mines
//! developer/file relations from the history ([`miners`]) and derives
//! coordination metrics from them ([`calculations`]). [`pipeline::run`] ties
//! the stages together and writes every result as JSON.

pub mod calculations;
pub mod error;
pub mod mappers;
pub mod matrix;
pub mod miners;
pub mod pipeline;
pub mod repo;
pub mod synth;

pub use error::{Error, Result};
pub use mappers::{AliasTable, EntityId, EntityKind, IdRegistry, Registries};
pub use pipeline::{run, CalculationKind, MinerKind, MiningSession, RunConfig, RunMeta};
pub use repo::{BranchSelector, RepositoryHandle};
