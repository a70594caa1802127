use std::fmt;

use super::QStateError;

/// A classical bit string. Protocol code uses these for gate choices `x`,
/// measurement outcomes `y`, and basis-state labels.
///
/// Bit 0 of the string corresponds to qubit 1 and to the most significant bit
/// of a basis-state index.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<u8>);

impl BitString {
    pub fn new(bits: Vec<u8>) -> Result<Self, QStateError> {
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(QStateError::BadBit(b));
        }
        Ok(Self(bits))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    /// Big-endian decode of a basis-state index into `len` bits.
    pub fn from_index(index: usize, len: usize) -> Self {
        let bits = (0..len).map(|i| ((index >> (len - 1 - i)) & 1) as u8).collect();
        Self(bits)
    }

    /// Big-endian encode; inverse of [`BitString::from_index`].
    pub fn to_index(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    /// The `k`-th even-parity string of length `len`: the first `len - 1`
    /// bits are the big-endian digits of `k`, the last bit fixes the parity.
    /// `k` ranges over `0..2^(len-1)`.
    pub fn even_parity(k: usize, len: usize) -> Self {
        debug_assert!(len >= 1);
        let mut bits: Vec<u8> = (0..len - 1)
            .map(|i| ((k >> (len - 2 - i)) & 1) as u8)
            .collect();
        let parity = bits.iter().fold(0u8, |a, &b| a ^ b);
        bits.push(parity);
        Self(bits)
    }

    /// All `2^(len-1)` even-parity strings of length `len`, in `k` order.
    pub fn all_even_parity(len: usize) -> impl Iterator<Item = BitString> {
        (0..1usize << (len - 1)).map(move |k| Self::even_parity(k, len))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bit(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn parity(&self) -> u8 {
        self.0.iter().fold(0, |a, &b| a ^ b)
    }

    pub fn weight(&self) -> usize {
        self.0.iter().map(|&b| b as usize).sum()
    }

    pub fn xor(&self, other: &Self) -> Result<Self, QStateError> {
        if self.len() != other.len() {
            return Err(QStateError::BadBitLength { got: other.len(), want: self.len() });
        }
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect()))
    }

    /// The string with position `i` (0-based) removed; the protocol leaks
    /// `x` and `y` with the verifier's own coordinate withheld.
    pub fn without(&self, i: usize) -> Self {
        let mut v = self.0.clone();
        v.remove(i);
        Self(v)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip_is_big_endian() {
        let x = BitString::new(vec![1, 0, 1]).unwrap();
        assert_eq!(x.to_index(), 0b101);
        assert_eq!(BitString::from_index(0b101, 3), x);
        // Qubit 1 is the most significant bit.
        assert_eq!(BitString::from_index(4, 3).bits(), &[1, 0, 0]);
    }

    #[test]
    fn rejects_non_bits() {
        assert!(BitString::new(vec![0, 2]).is_err());
    }

    #[test]
    fn even_parity_enumeration_covers_exactly_the_even_strings() {
        for len in 1..=5usize {
            let all: Vec<_> = BitString::all_even_parity(len).collect();
            assert_eq!(all.len(), 1 << (len - 1));
            for x in &all {
                assert_eq!(x.parity(), 0, "odd string {x} in even-parity set");
            }
            let mut dedup = all.clone();
            dedup.sort();
            dedup.dedup();
            assert_eq!(dedup.len(), all.len(), "duplicates in even-parity set");
        }
    }

    #[test]
    fn xor_and_without() {
        let a = BitString::new(vec![1, 1, 0]).unwrap();
        let b = BitString::new(vec![0, 1, 1]).unwrap();
        assert_eq!(a.xor(&b).unwrap().bits(), &[1, 0, 1]);
        assert!(a.xor(&BitString::zeros(2)).is_err());
        assert_eq!(a.without(1).bits(), &[1, 0]);
    }
}
