//! Ring orderings per round and the neighbor-exchange schedule.
//!
//! The initiator `P1` holds position 1 in every round. After round `j` the
//! party `P2` swaps positions with `P_{j+2}`, for `j = 1 .. n-2`, so every
//! non-initiator party sees its neighbors change at least once across the
//! `n-1` rounds.

use std::fmt;

use serde::Serializer;
use thiserror::Error;

/// Segmented protocols need at least four parties.
pub const MIN_PARTIES: usize = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("too few parties: need at least {min}, got {n}")]
    TooFewParties { n: usize, min: usize },
    #[error("round {j} out of range, protocol has rounds 1..={rounds}")]
    RoundOutOfRange { j: usize, rounds: usize },
    #[error("party {0} does not appear in the ring order")]
    UnknownParty(PartyId),
}

/// 1-based party identifier; `P1` is always the protocol initiator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PartyId(usize);

impl PartyId {
    pub const INITIATOR: PartyId = PartyId(1);

    pub fn new(index: usize) -> Self {
        assert!(index >= 1, "party indices are 1-based");
        PartyId(index)
    }

    pub fn index(self) -> usize {
        self.0
    }

    pub fn is_initiator(self) -> bool {
        self.0 == 1
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

impl serde::Serialize for PartyId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// The arrangement of all `n` parties around the ring in one round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingOrder(Vec<PartyId>);

impl RingOrder {
    /// `[P1, P2, ..., Pn]` without the segmented-protocol party minimum;
    /// used by the single-round baseline which allows `n >= 3`.
    pub(crate) fn sequential(n: usize) -> Self {
        RingOrder((1..=n).map(PartyId::new).collect())
    }

    pub fn parties(&self) -> &[PartyId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 0-based ring position of `p`.
    pub fn position_of(&self, p: PartyId) -> Option<usize> {
        self.0.iter().position(|&q| q == p)
    }

    fn swap_parties(&mut self, a: PartyId, b: PartyId) {
        let ia = self.position_of(a).expect("swap party in ring");
        let ib = self.position_of(b).expect("swap party in ring");
        self.0.swap(ia, ib);
    }
}

impl fmt::Display for RingOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut sep = "";
        for p in &self.0 {
            write!(f, "{sep}{p}")?;
            sep = ",";
        }
        Ok(())
    }
}

/// One position swap performed after a round completes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Swap {
    pub after_round: usize,
    pub a: PartyId,
    pub b: PartyId,
}

/// The `n-2` swaps that drive the changing-neighbors protocol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExchangeSchedule(Vec<Swap>);

impl ExchangeSchedule {
    pub fn swaps(&self) -> &[Swap] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn check_party_count(n: usize) -> Result<(), TopologyError> {
    if n < MIN_PARTIES {
        Err(TopologyError::TooFewParties { n, min: MIN_PARTIES })
    } else {
        Ok(())
    }
}

/// Round-1 arrangement `[P1, P2, ..., Pn]`.
pub fn initial_order(n: usize) -> Result<RingOrder, TopologyError> {
    check_party_count(n)?;
    Ok(RingOrder::sequential(n))
}

/// After round `j`, `P2` swaps with `P_{j+2}`, for `j = 1 .. n-2`.
/// No swap follows the final round.
pub fn exchange_schedule(n: usize) -> Result<ExchangeSchedule, TopologyError> {
    check_party_count(n)?;
    let swaps = (1..=n - 2)
        .map(|j| Swap {
            after_round: j,
            a: PartyId::new(2),
            b: PartyId::new(j + 2),
        })
        .collect();
    Ok(ExchangeSchedule(swaps))
}

/// Ring arrangement in round `j` (1-based), i.e. the initial order with the
/// first `j-1` swaps applied.
pub fn order_for_round(n: usize, j: usize) -> Result<RingOrder, TopologyError> {
    check_party_count(n)?;
    let rounds = n - 1;
    if j < 1 || j > rounds {
        return Err(TopologyError::RoundOutOfRange { j, rounds });
    }
    let mut order = RingOrder::sequential(n);
    for swap in &exchange_schedule(n)?.0[..j - 1] {
        order.swap_parties(swap.a, swap.b);
    }
    Ok(order)
}

/// Cyclic (predecessor, successor) of `p` in the ring.
pub fn neighbors(order: &RingOrder, p: PartyId) -> Result<(PartyId, PartyId), TopologyError> {
    let n = order.len();
    let pos = order
        .position_of(p)
        .ok_or(TopologyError::UnknownParty(p))?;
    let pred = order.0[(pos + n - 1) % n];
    let succ = order.0[(pos + 1) % n];
    Ok((pred, succ))
}
