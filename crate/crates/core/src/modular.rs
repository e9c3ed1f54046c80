//! Modular arithmetic over a configurable ring `Z_M`.
//!
//! All protocol values are residues in `[0, M)`. The default modulus is the
//! Mersenne prime `2^61 - 1`, which keeps every intermediate product inside
//! `u128` and makes `Z_M` a field, as the linear-algebra oracle requires.

use std::fmt;

use thiserror::Error;

/// A value in `[0, M)`.
pub type Residue = u64;

/// The Mersenne prime `2^61 - 1`.
pub const DEFAULT_MODULUS: u64 = (1u64 << 61) - 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModulusError {
    #[error("modulus must be at least 2, got {0}")]
    TooSmall(u64),
    #[error("modulus {0} must be prime for the linear-algebra oracle")]
    NotPrime(u64),
}

/// The ring size `M` for all protocol arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(transparent)]
pub struct Modulus(u64);

impl Modulus {
    pub fn new(value: u64) -> Result<Self, ModulusError> {
        if value < 2 {
            return Err(ModulusError::TooSmall(value));
        }
        Ok(Modulus(value))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    /// Check the field requirement of the linear-algebra oracle.
    pub fn require_prime(self) -> Result<Self, ModulusError> {
        if self.is_prime() {
            Ok(self)
        } else {
            Err(ModulusError::NotPrime(self.0))
        }
    }

    /// Deterministic Miller-Rabin, exact for all 64-bit integers.
    pub fn is_prime(self) -> bool {
        let n = self.0;
        if n < 2 {
            return false;
        }
        for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
            if n == p {
                return true;
            }
            if n.is_multiple_of(p) {
                return false;
            }
        }
        let mut d = n - 1;
        let mut s = 0u32;
        while d.is_multiple_of(2) {
            d /= 2;
            s += 1;
        }
        'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
            let mut x = self.pow(a % n, d);
            if x == 1 || x == n - 1 {
                continue;
            }
            for _ in 0..s - 1 {
                x = self.mul(x, x);
                if x == n - 1 {
                    continue 'witness;
                }
            }
            return false;
        }
        true
    }

    pub fn reduce(self, a: u64) -> Residue {
        a % self.0
    }

    pub fn add(self, a: Residue, b: Residue) -> Residue {
        debug_assert!(a < self.0 && b < self.0);
        (((a as u128) + (b as u128)) % (self.0 as u128)) as u64
    }

    pub fn sub(self, a: Residue, b: Residue) -> Residue {
        debug_assert!(a < self.0 && b < self.0);
        if a >= b {
            a - b
        } else {
            self.0 - (b - a)
        }
    }

    pub fn neg(self, a: Residue) -> Residue {
        debug_assert!(a < self.0);
        if a == 0 {
            0
        } else {
            self.0 - a
        }
    }

    pub fn mul(self, a: Residue, b: Residue) -> Residue {
        debug_assert!(a < self.0 && b < self.0);
        (((a as u128) * (b as u128)) % (self.0 as u128)) as u64
    }

    pub fn pow(self, base: Residue, mut exp: u64) -> Residue {
        let mut base = self.reduce(base);
        let mut acc = 1 % self.0;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via extended Euclid; `None` when
    /// `gcd(a, M) != 1`.
    pub fn inv(self, a: Residue) -> Option<Residue> {
        let m = self.0 as i128;
        let (mut r0, mut r1) = (m, (a % self.0) as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        if r0 != 1 {
            return None;
        }
        Some(t0.rem_euclid(m) as u64)
    }

    /// Sum an iterator of residues mod M.
    pub fn sum<I: IntoIterator<Item = Residue>>(self, iter: I) -> Residue {
        iter.into_iter().fold(0, |acc, v| self.add(acc, v))
    }
}

impl Default for Modulus {
    fn default() -> Self {
        Modulus(DEFAULT_MODULUS)
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Convenience wrapper matching the protocol's primitive operation.
pub fn mod_add(a: Residue, b: Residue, m: Modulus) -> Residue {
    m.add(a, b)
}
