//! Random ensembles of short surreal forms.
//!
//! Forms live in a hash-consed [`FormStore`] so every ensemble is a shared
//! DAG rooted at `{ | }`. The [`evolution`] module grows populations
//! ("clades") of forms generation-weighted so that the birthday distribution
//! settles on the two-parameter surreal distribution in [`stochastic`].

pub mod analysis;
pub mod dyadic;
pub mod error;
pub mod evolution;
pub mod form;
pub mod stochastic;

pub use dyadic::{simplest_between, Dyadic};
pub use error::CoreError;
pub use evolution::{Clade, DedupPolicy, GenParams};
pub use form::{DagMetrics, FormId, FormStore};
pub use stochastic::{SplitKind, SurrealDist};
