//! A simulation laboratory for ring-based secure sum protocols.
//!
//! Three protocols are implemented as deterministic message-passing state
//! machines over a ring of parties:
//!
//! * `clifton` — the classic masked single-pass secure sum: the initiator
//!   adds a random mask, every party adds its full input, and the mask is
//!   subtracted before the sum is announced.
//! * `ksecure` — segmented secure sum: every party splits its input into
//!   `k = n - 1` additive shares and one share per party is summed in each
//!   of `k` rounds over a fixed ring.
//! * `ck` — changing-neighbors segmented secure sum: like `ksecure`, but
//!   the second party swaps positions with the next party after every
//!   round, so no party keeps the same neighbors throughout.
//!
//! Every run produces a [`engine::Transcript`], the complete ordered record
//! of messages. The [`adversary`] module computes exactly what a
//! semi-honest coalition can infer from a transcript, using both a fast
//! rule-based closure and an exact linear-algebra oracle over the prime
//! field `Z_M`.

pub mod adversary;
pub mod claims;
pub mod cli;
pub mod engine;
pub mod modular;
pub mod shares;
pub mod topology;

pub use engine::{run_protocol, Config, ProtocolKind, ProtocolRun, Transcript};
pub use modular::{Modulus, Residue, DEFAULT_MODULUS};
pub use topology::PartyId;
