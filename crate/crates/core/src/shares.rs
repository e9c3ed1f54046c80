//! Additive secret sharing: splitting an input into segments that sum to it
//! mod M, and the seeded per-party random streams that make runs
//! reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::modular::{Modulus, Residue};
use crate::topology::PartyId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ShareError {
    #[error("segment count must be at least 1")]
    ZeroSegments,
    #[error("segment list is empty")]
    EmptySegmentList,
    #[error("input {value} out of range for modulus {modulus}")]
    ValueOutOfRange { value: u64, modulus: u64 },
}

/// One party's private input, a residue in `[0, M)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SecretInput {
    pub party: PartyId,
    pub value: Residue,
}

/// A party's input split into `k` additive segments over `Z_M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentVector {
    pub party: PartyId,
    pub segments: Vec<Residue>,
}

/// Stream id 0 is reserved for the initiator's masks; party `Pi` draws its
/// segments from stream `i`.
pub const MASK_STREAM: u64 = 0;

/// An independent ChaCha stream derived from the master seed.
pub fn seeded_stream(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// The segment stream of one party.
pub fn party_stream(master_seed: u64, party: PartyId) -> ChaCha8Rng {
    seeded_stream(master_seed, party.index() as u64)
}

/// Split `x` into `k` additive segments: the first `k-1` are uniform over
/// `[0, M)`, the last is forced so the segments sum to `x` mod M.
pub fn make_segments(
    input: SecretInput,
    k: usize,
    m: Modulus,
    rng: &mut impl Rng,
) -> Result<SegmentVector, ShareError> {
    if k == 0 {
        return Err(ShareError::ZeroSegments);
    }
    if input.value >= m.get() {
        return Err(ShareError::ValueOutOfRange {
            value: input.value,
            modulus: m.get(),
        });
    }
    let mut segments: Vec<Residue> = (0..k - 1).map(|_| rng.gen_range(0..m.get())).collect();
    let partial = m.sum(segments.iter().copied());
    segments.push(m.sub(input.value, partial));
    Ok(SegmentVector {
        party: input.party,
        segments,
    })
}

/// Mod-M sum of the segments, recovering the original input.
pub fn recombine(sv: &SegmentVector, m: Modulus) -> Result<Residue, ShareError> {
    if sv.segments.is_empty() {
        return Err(ShareError::EmptySegmentList);
    }
    Ok(m.sum(sv.segments.iter().copied()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modular::DEFAULT_MODULUS;
    use proptest::prelude::*;

    fn input(value: Residue) -> SecretInput {
        SecretInput {
            party: PartyId::new(1),
            value,
        }
    }

    #[test]
    fn single_segment_is_the_value() {
        let m = Modulus::new(97).unwrap();
        let mut rng = party_stream(0, PartyId::new(1));
        let sv = make_segments(input(5), 1, m, &mut rng).unwrap();
        assert_eq!(sv.segments, vec![5]);
    }

    #[test]
    fn zero_input_segments_sum_to_zero() {
        let m = Modulus::new(97).unwrap();
        let mut rng = party_stream(3, PartyId::new(1));
        let sv = make_segments(input(0), 3, m, &mut rng).unwrap();
        assert_eq!(sv.segments.len(), 3);
        assert_eq!(recombine(&sv, m).unwrap(), 0);
    }

    #[test]
    fn default_modulus_recombines() {
        let m = Modulus::default();
        let mut rng = party_stream(7, PartyId::new(1));
        let sv = make_segments(input(42), 4, m, &mut rng).unwrap();
        assert_eq!(sv.segments.len(), 4);
        assert!(sv.segments.iter().all(|&d| d < DEFAULT_MODULUS));
        assert_eq!(recombine(&sv, m).unwrap(), 42);
    }

    #[test]
    fn rejects_zero_segment_count() {
        let m = Modulus::new(97).unwrap();
        let mut rng = party_stream(0, PartyId::new(1));
        assert_eq!(
            make_segments(input(5), 0, m, &mut rng),
            Err(ShareError::ZeroSegments)
        );
    }

    #[test]
    fn rejects_out_of_range_input() {
        let m = Modulus::new(97).unwrap();
        let mut rng = party_stream(0, PartyId::new(1));
        assert_eq!(
            make_segments(input(97), 3, m, &mut rng),
            Err(ShareError::ValueOutOfRange { value: 97, modulus: 97 })
        );
    }

    #[test]
    fn rejects_empty_recombine() {
        let m = Modulus::new(97).unwrap();
        let sv = SegmentVector {
            party: PartyId::new(1),
            segments: vec![],
        };
        assert_eq!(recombine(&sv, m), Err(ShareError::EmptySegmentList));
    }

    #[test]
    fn recombine_direct() {
        let m = Modulus::new(97).unwrap();
        let sv = SegmentVector {
            party: PartyId::new(1),
            segments: vec![96, 96],
        };
        // (96 + 96) mod 97 = 192 - 97
        assert_eq!(recombine(&sv, m).unwrap(), 95);
    }

    #[test]
    fn identical_seed_identical_segments() {
        let m = Modulus::default();
        let a = make_segments(input(99), 8, m, &mut party_stream(11, PartyId::new(3))).unwrap();
        let b = make_segments(input(99), 8, m, &mut party_stream(11, PartyId::new(3))).unwrap();
        assert_eq!(a, b);
        let c = make_segments(input(99), 8, m, &mut party_stream(12, PartyId::new(3))).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn party_streams_are_independent() {
        let m = Modulus::default();
        let a = make_segments(input(99), 8, m, &mut party_stream(11, PartyId::new(1))).unwrap();
        let b = make_segments(input(99), 8, m, &mut party_stream(11, PartyId::new(2))).unwrap();
        assert_ne!(a.segments, b.segments);
    }

    #[test]
    fn first_segment_uniform_chi_square() {
        // For k = 2 the first segment is drawn uniformly by construction;
        // chi-square sanity check over 10^4 seeded draws.
        let m = Modulus::new(17).unwrap();
        let draws = 10_000usize;
        let mut counts = [0usize; 17];
        for seed in 0..draws as u64 {
            let sv = make_segments(input(13), 2, m, &mut party_stream(seed, PartyId::new(1)))
                .unwrap();
            counts[sv.segments[0] as usize] += 1;
        }
        let expected = draws as f64 / 17.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        // df = 16; 60 is far beyond the 99.9999% quantile
        assert!(chi2 < 60.0, "chi-square statistic {chi2} too large");
    }

    proptest! {
        #[test]
        fn round_trip(x in 0u64..97, k in 1usize..=32, seed in any::<u64>()) {
            let m = Modulus::new(97).unwrap();
            let mut rng = party_stream(seed, PartyId::new(1));
            let sv = make_segments(input(x), k, m, &mut rng).unwrap();
            prop_assert_eq!(sv.segments.len(), k);
            prop_assert!(sv.segments.iter().all(|&d| d < 97));
            prop_assert_eq!(recombine(&sv, m).unwrap(), x);
        }

        #[test]
        fn round_trip_default_modulus(x in 0u64..DEFAULT_MODULUS, k in 1usize..=32, seed in any::<u64>()) {
            let m = Modulus::default();
            let mut rng = party_stream(seed, PartyId::new(1));
            let sv = make_segments(input(x), k, m, &mut rng).unwrap();
            prop_assert_eq!(recombine(&sv, m).unwrap(), x);
        }
    }
}
