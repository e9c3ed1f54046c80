//! Protocol execution: party state machines driven by a lock-step scheduler.
//!
//! A run is strictly sequential: rounds execute in order, and within a round
//! the cumulative sum travels hop by hop around the ring, ending back at the
//! initiator. Identical `(Config, inputs)` always produce a byte-identical
//! transcript.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::modular::{Modulus, Residue};
use crate::shares::{
    make_segments, party_stream, seeded_stream, SecretInput, ShareError, MASK_STREAM,
};
use crate::topology::{self, PartyId, RingOrder, TopologyError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("too few parties: {kind} needs at least {min}, got {n}")]
    TooFewParties {
        kind: ProtocolKind,
        n: usize,
        min: usize,
    },
    #[error("expected {expected} inputs, got {got}")]
    InputCountMismatch { expected: usize, got: usize },
    #[error("input {value} of {party} out of range for modulus {modulus}")]
    InputOutOfRange {
        party: PartyId,
        value: u64,
        modulus: u64,
    },
    #[error("expected one segment per party: order has {order}, got {segments}")]
    SegmentCountMismatch { order: usize, segments: usize },
    #[error("malformed transcript: {0}")]
    MalformedTranscript(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Share(#[from] ShareError),
}

/// The three protocols the laboratory executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProtocolKind {
    /// Single-pass masked sum: the initiator adds a random mask, every
    /// party adds its full input, the mask is subtracted at the end.
    CliftonSum,
    /// Segmented sum over a fixed ring, one segment per party per round.
    KSecureSum,
    /// Segmented sum with the changing-neighbors exchange schedule.
    CkSecureSum,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 3] = [
        ProtocolKind::CliftonSum,
        ProtocolKind::KSecureSum,
        ProtocolKind::CkSecureSum,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ProtocolKind::CliftonSum => "clifton",
            ProtocolKind::KSecureSum => "ksecure",
            ProtocolKind::CkSecureSum => "ck",
        }
    }

    pub fn min_parties(self) -> usize {
        match self {
            ProtocolKind::CliftonSum => 3,
            ProtocolKind::KSecureSum | ProtocolKind::CkSecureSum => topology::MIN_PARTIES,
        }
    }

    pub fn is_segmented(self) -> bool {
        !matches!(self, ProtocolKind::CliftonSum)
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl serde::Serialize for ProtocolKind {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl FromStr for ProtocolKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "clifton" => Ok(ProtocolKind::CliftonSum),
            "ksecure" => Ok(ProtocolKind::KSecureSum),
            "ck" => Ok(ProtocolKind::CkSecureSum),
            other => Err(format!(
                "unknown protocol '{other}', expected clifton, ksecure or ck"
            )),
        }
    }
}

/// Everything that determines a run besides the inputs themselves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Config {
    pub n: usize,
    pub modulus: Modulus,
    pub kind: ProtocolKind,
    pub master_seed: u64,
    /// When set, segmented rounds start with a random initiator mask that
    /// is subtracted before the announcement, like the clifton baseline.
    pub initiator_mask: bool,
}

impl Config {
    pub fn new(n: usize, modulus: Modulus, kind: ProtocolKind, master_seed: u64) -> Self {
        Config {
            n,
            modulus,
            kind,
            master_seed,
            initiator_mask: false,
        }
    }

    pub fn with_initiator_mask(mut self, on: bool) -> Self {
        self.initiator_mask = on;
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let min = self.kind.min_parties();
        if self.n < min {
            return Err(EngineError::TooFewParties {
                kind: self.kind,
                n: self.n,
                min,
            });
        }
        Ok(())
    }

    /// Rounds of computation: `n-1` for segmented kinds, 1 for clifton.
    pub fn rounds(&self) -> usize {
        if self.kind.is_segmented() {
            self.n - 1
        } else {
            1
        }
    }

    /// Segments per party; always equals the number of rounds.
    pub fn segments_per_party(&self) -> usize {
        self.rounds()
    }

    /// Whether round values carry a random initiator mask.
    pub fn masked(&self) -> bool {
        !self.kind.is_segmented() || self.initiator_mask
    }
}

/// One hop of the traveling cumulative sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Message {
    pub round: usize,
    pub hop: usize,
    pub sender: PartyId,
    pub receiver: PartyId,
    pub value: Residue,
}

/// The complete ordered record of a protocol run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub config: Config,
    pub orders: Vec<RingOrder>,
    pub messages: Vec<Message>,
    pub announced: Residue,
}

impl Transcript {
    pub fn n(&self) -> usize {
        self.config.n
    }

    /// Line-oriented text form: a header with the run parameters and the
    /// per-round orders, one message per line as
    /// `round hop sender receiver value`, terminated by `announced <value>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("protocol {}\n", self.config.kind));
        out.push_str(&format!("n {}\n", self.config.n));
        out.push_str(&format!("modulus {}\n", self.config.modulus));
        out.push_str(&format!("seed {}\n", self.config.master_seed));
        out.push_str(&format!(
            "initiator_mask {}\n",
            if self.config.initiator_mask { 1 } else { 0 }
        ));
        for (i, order) in self.orders.iter().enumerate() {
            out.push_str(&format!("order {}", i + 1));
            for p in order.parties() {
                out.push_str(&format!(" {}", p.index()));
            }
            out.push('\n');
        }
        for msg in &self.messages {
            out.push_str(&format!(
                "{} {} {} {} {}\n",
                msg.round,
                msg.hop,
                msg.sender.index(),
                msg.receiver.index(),
                msg.value
            ));
        }
        out.push_str(&format!("announced {}\n", self.announced));
        out
    }
}

/// The per-party segment assignment realized in a run; ground truth for the
/// adversary analyses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentMatrix {
    rows: Vec<Vec<Residue>>,
}

impl SegmentMatrix {
    pub fn k(&self) -> usize {
        self.rows[0].len()
    }

    /// Segment of party `p` used in round `j` (1-based).
    pub fn segment(&self, p: PartyId, j: usize) -> Residue {
        self.rows[p.index() - 1][j - 1]
    }

    pub fn party_segments(&self, p: PartyId) -> &[Residue] {
        &self.rows[p.index() - 1]
    }

    /// Mod-M sum of a party's segments, i.e. its input.
    pub fn party_total(&self, p: PartyId, m: Modulus) -> Residue {
        m.sum(self.party_segments(p).iter().copied())
    }
}

/// A completed run: the public transcript plus the private ground truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolRun {
    pub transcript: Transcript,
    pub segments: SegmentMatrix,
    /// Per-round initiator masks; empty when the run is unmasked.
    pub masks: Vec<Residue>,
}

impl ProtocolRun {
    pub fn config(&self) -> &Config {
        &self.transcript.config
    }

    pub fn announced(&self) -> Residue {
        self.transcript.announced
    }
}

/// Prefix sums of one round: `V_t = sum of the first t parties' round
/// segments mod M`; `V_n` is the round total delivered to the initiator.
pub fn round_values(
    order: &RingOrder,
    round_segments: &[Residue],
    m: Modulus,
) -> Result<Vec<Residue>, EngineError> {
    if order.len() != round_segments.len() {
        return Err(EngineError::SegmentCountMismatch {
            order: order.len(),
            segments: round_segments.len(),
        });
    }
    let mut values = Vec::with_capacity(round_segments.len());
    let mut acc = 0u64;
    for &d in round_segments {
        acc = m.add(acc, d);
        values.push(acc);
    }
    Ok(values)
}

/// Execute one protocol run end to end.
pub fn run_protocol(config: &Config, inputs: &[Residue]) -> Result<ProtocolRun, EngineError> {
    config.validate()?;
    if inputs.len() != config.n {
        return Err(EngineError::InputCountMismatch {
            expected: config.n,
            got: inputs.len(),
        });
    }
    let m = config.modulus;
    for (i, &x) in inputs.iter().enumerate() {
        if x >= m.get() {
            return Err(EngineError::InputOutOfRange {
                party: PartyId::new(i + 1),
                value: x,
                modulus: m.get(),
            });
        }
    }

    let n = config.n;
    let rounds = config.rounds();
    let k = config.segments_per_party();

    let rows: Vec<Vec<Residue>> = if config.kind.is_segmented() {
        inputs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let party = PartyId::new(i + 1);
                let input = SecretInput { party, value: x };
                let mut rng = party_stream(config.master_seed, party);
                make_segments(input, k, m, &mut rng).map(|sv| sv.segments)
            })
            .collect::<Result<_, _>>()?
    } else {
        inputs.iter().map(|&x| vec![x]).collect()
    };
    let segments = SegmentMatrix { rows };

    let masks: Vec<Residue> = if config.masked() {
        let mut rng = seeded_stream(config.master_seed, MASK_STREAM);
        (0..rounds).map(|_| rng.gen_range(0..m.get())).collect()
    } else {
        Vec::new()
    };

    let mut orders = Vec::with_capacity(rounds);
    let mut messages = Vec::with_capacity(rounds * n);
    let mut grand_total = 0u64;

    for j in 1..=rounds {
        let order = match config.kind {
            ProtocolKind::CkSecureSum => topology::order_for_round(n, j)?,
            _ => RingOrder::sequential(n),
        };
        let round_segments: Vec<Residue> = order
            .parties()
            .iter()
            .map(|&p| segments.segment(p, j))
            .collect();
        let mut values = round_values(&order, &round_segments, m)?;
        if config.masked() {
            for v in &mut values {
                *v = m.add(*v, masks[j - 1]);
            }
        }
        for t in 1..=n {
            messages.push(Message {
                round: j,
                hop: t,
                sender: order.parties()[t - 1],
                receiver: order.parties()[t % n],
                value: values[t - 1],
            });
        }
        grand_total = m.add(grand_total, values[n - 1]);
        orders.push(order);
    }

    let announced = m.sub(grand_total, m.sum(masks.iter().copied()));

    Ok(ProtocolRun {
        transcript: Transcript {
            config: *config,
            orders,
            messages,
            announced,
        },
        segments,
        masks,
    })
}

/// Communication metrics derived purely from a transcript.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Metrics {
    pub rounds: usize,
    pub messages: usize,
    pub exchanges: usize,
}

/// Validate a transcript and count rounds, messages and position exchanges.
pub fn compute_metrics(t: &Transcript) -> Result<Metrics, EngineError> {
    let n = t.n();
    let rounds = t.orders.len();
    if rounds == 0 {
        return Err(EngineError::MalformedTranscript("no rounds".into()));
    }
    if t.messages.len() != rounds * n {
        return Err(EngineError::MalformedTranscript(format!(
            "expected {} messages, found {}",
            rounds * n,
            t.messages.len()
        )));
    }
    for (i, msg) in t.messages.iter().enumerate() {
        let (round, hop) = (i / n + 1, i % n + 1);
        if msg.round != round || msg.hop != hop {
            return Err(EngineError::MalformedTranscript(format!(
                "message {i} out of order: round {} hop {}",
                msg.round, msg.hop
            )));
        }
        let order = &t.orders[round - 1];
        if msg.sender != order.parties()[hop - 1]
            || msg.receiver != order.parties()[hop % n]
        {
            return Err(EngineError::MalformedTranscript(format!(
                "round {round} hop {hop}: {} -> {} does not follow the ring",
                msg.sender, msg.receiver
            )));
        }
        if msg.value >= t.config.modulus.get() {
            return Err(EngineError::MalformedTranscript(format!(
                "round {round} hop {hop}: value {} out of range",
                msg.value
            )));
        }
    }
    let mut exchanges = 0;
    for pair in t.orders.windows(2) {
        let differing = pair[0]
            .parties()
            .iter()
            .zip(pair[1].parties())
            .filter(|(a, b)| a != b)
            .count();
        match differing {
            0 => {}
            2 => exchanges += 1,
            _ => {
                return Err(EngineError::MalformedTranscript(
                    "adjacent rounds differ by more than one transposition".into(),
                ))
            }
        }
    }
    Ok(Metrics {
        rounds,
        messages: t.messages.len(),
        exchanges,
    })
}
