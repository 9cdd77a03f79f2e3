//! Deterministic token-based record linkage.
//!
//! `tokenlink` links a patient extract to an external death master file. Both
//! sides are cleaned identically, turned into linkage tokens (concatenations
//! of standardized name, date and SSN elements), profiled for completeness
//! and distinctiveness, and joined on tokens that are unique on both sides.
//! Each rule is scored on patients whose death date is already known, and the
//! resulting ranking decides which token a patient's death date is taken from.
//!
//! ```text
//! ingest -> normalizer -> tokenizer -> profiler
//!                                   \-> linker -> LinkedRow per patient
//! ```
//!
//! The `examples/` directory has one runnable program per stage; the
//! `tokenlink` binary wraps [`pipeline`] as subcommands.

pub mod error;
pub mod ingest;
pub mod linker;
pub mod normalizer;
pub mod pipeline;
pub mod profiler;
pub mod report;
pub mod synth;
pub mod tokenizer;

pub use error::{Error, Result};
pub use ingest::{RawRecord, Role, SourceLayout};
pub use linker::{Category, LinkDataset, LinkedRow, TokenIndex, ValidationStats};
pub use normalizer::{CleanRecord, Cleaned, ValidityConfig};
pub use tokenizer::{RuleTable, TokenId, TokenSet};
