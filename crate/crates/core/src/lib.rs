//! SLOCC classification of `2 x 2 x n` pure states.
//!
//! Local ranks, the rank of `R^T R` (the bilinear form of the state in the
//! magic basis) and the `2x2x2` / `2x2x3` hyperdeterminants separate nine
//! classes, ordered by noninvertible local operations. The crate also
//! checks the monotone inequality for hyperdeterminant moduli under random
//! local POVMs and runs swapping and distillation protocols on two Bell pairs.
//!
//! ```
//! use entclass::{classify, representative, ClassLabel, TolerancePolicy};
//!
//! let ghz = representative(ClassLabel::Ghz, 2).unwrap();
//! let c = classify(&ghz, &TolerancePolicy::default()).unwrap();
//! assert_eq!(c.label, ClassLabel::Ghz);
//! ```

pub mod classify;
pub mod error;
pub mod invariants;
pub mod monotone;
pub mod numerics;
pub mod protocols;
pub mod serde_util;
pub mod tensor;

pub use classify::{classify, reachable, witness_map, ClassLabel, Classification, PartialOrder};
pub use error::{Error, Result};
pub use invariants::{invariant_report, InvariantReport};
pub use monotone::{run_monotone_trials, Measure, MonteCarloSummary};
pub use numerics::{RandomSource, TolerancePolicy};
pub use tensor::{apply_local, make_state, representative, LocalOperation, StateTensor};
