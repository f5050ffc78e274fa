// SPDX-License-Identifier: Apache-2.0

//! Run traces and post-run analysis: error metrics, the dwls/gbp
//! equivalence audit, and the spectral-radius error envelope.

pub mod audit;
pub mod envelope;
pub mod metrics;
pub mod trace;

pub use audit::{equivalence_audit, EquivalenceReport, RoundDiscrepancy};
pub use envelope::{rate_envelope, EnvelopeReport, RATE_SLACK};
pub use metrics::{error_trace, ErrorTrace};
pub use trace::{
    Algorithm, Breakdown, BreakdownKind, MessageRecord, RoundRecord, RunOptions, RunTrace, StopReason, TraceDetail,
};
