//! Group-testing estimation under `λ`-threshold queries.
//!
//! * [`probability`]: exact hypergeometric laws, `P_λ(d, p)` and the tail
//!   bounds used throughout.
//! * [`oracle`]: defect sets, queries, non-adaptive plans and their responses.
//! * [`estimator`]: the calibrated non-adaptive α-estimator.
//! * [`lab`]: hard distribution pair, coupling, exact disagreement
//!   probabilities, total variation and the seed-fixing derandomizer.
//! * [`stream`]: labelled random substreams derived from a master seed.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod estimator;
pub mod lab;
pub mod oracle;
pub mod probability;
pub mod stream;
