//! Fixed-length bit strings and position subsets.
//!
//! `BitString` is the universal carrier for registers, messages and keys.
//! Bits are stored packed, 64 per machine word, so registers of length
//! `k * 2^nu` stay cheap; all operations are specified positionally and the
//! packing is invisible at the API level. Values are treated as immutable
//! once published to another component; in-place mutation is reserved for
//! construction and for the reversible `xor_in_place` step.

use std::collections::HashMap;
use std::fmt;

use rand::{Rng, RngCore};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Errors from bit-level operations. These signal caller bugs, not runtime
/// conditions a protocol should tolerate.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BitError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("subset is over universe {universe}, host string has length {len}")]
    UniverseMismatch { universe: usize, len: usize },
    #[error("requested {count} elements from universe of size {universe}")]
    CountExceedsUniverse { count: usize, universe: usize },
    #[error("positions must be strictly increasing and below the universe")]
    InvalidPositions,
    #[error("invalid hex encoding: {0}")]
    InvalidHex(String),
}

const WORD_BITS: usize = 64;

#[inline]
fn word_count(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

/// A fixed-length sequence of bits, position 0 first.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    /// The all-zero string of the given length.
    pub fn zeros(len: usize) -> Self {
        BitString {
            words: vec![0; word_count(len)],
            len,
        }
    }

    /// Uniformly random string; deterministic for a fixed generator state.
    pub fn random(len: usize, rng: &mut impl RngCore) -> Self {
        let mut words: Vec<u64> = (0..word_count(len)).map(|_| rng.next_u64()).collect();
        mask_tail(&mut words, len);
        BitString { words, len }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut s = BitString::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            s.set(i, b);
        }
        s
    }

    /// Parses the text form, e.g. `"10110"`. Test convenience.
    pub fn from_bit_str(text: &str) -> Self {
        let bits: Vec<bool> = text
            .chars()
            .map(|c| match c {
                '0' => false,
                '1' => true,
                _ => panic!("bit string literal may contain only 0 and 1"),
            })
            .collect();
        BitString::from_bools(&bits)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, index: usize) -> bool {
        assert!(index < self.len, "bit index {index} out of range {}", self.len);
        (self.words[index / WORD_BITS] >> (index % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, index: usize, value: bool) {
        assert!(index < self.len, "bit index {index} out of range {}", self.len);
        let w = index / WORD_BITS;
        let mask = 1u64 << (index % WORD_BITS);
        if value {
            self.words[w] |= mask;
        } else {
            self.words[w] &= !mask;
        }
    }

    pub fn flip(&mut self, index: usize) {
        let v = self.get(index);
        self.set(index, !v);
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    /// Packed words of bits `start..start + len`, for word-level consumers.
    pub(crate) fn extract_words(&self, start: usize, len: usize) -> Vec<u64> {
        assert!(start + len <= self.len, "window out of range");
        let n_words = word_count(len);
        let mut out = Vec::with_capacity(n_words);
        let shift = start % WORD_BITS;
        let base = start / WORD_BITS;
        for wi in 0..n_words {
            let lo = self.words.get(base + wi).copied().unwrap_or(0);
            let mut word = lo >> shift;
            if shift != 0 {
                let hi = self.words.get(base + wi + 1).copied().unwrap_or(0);
                word |= hi << (WORD_BITS - shift);
            }
            out.push(word);
        }
        mask_tail(&mut out, len);
        out
    }

    /// The string with positions reversed.
    pub fn reversed(&self) -> BitString {
        let mut out = BitString::zeros(self.len);
        for i in 0..self.len {
            if self.get(i) {
                out.set(self.len - 1 - i, true);
            }
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Bitwise exclusive-or. `xor(xor(a, b), b) == a`.
    pub fn xor(&self, other: &BitString) -> Result<BitString, BitError> {
        let mut out = self.clone();
        out.xor_in_place(other)?;
        Ok(out)
    }

    /// The reversible in-place variant; zero free-energy cost in the ledger
    /// model.
    pub fn xor_in_place(&mut self, other: &BitString) -> Result<(), BitError> {
        if self.len != other.len {
            return Err(BitError::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        for (w, o) in self.words.iter_mut().zip(other.words.iter()) {
            *w ^= o;
        }
        Ok(())
    }

    /// Number of ones.
    pub fn hamming_weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of positions where the strings differ.
    pub fn hamming_distance(&self, other: &BitString) -> Result<usize, BitError> {
        if self.len != other.len {
            return Err(BitError::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        Ok(self
            .words
            .iter()
            .zip(other.words.iter())
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    /// Reads off the bits at the subset's positions, in order.
    pub fn extract(&self, subset: &SubsetIndex) -> Result<BitString, BitError> {
        if subset.universe() != self.len {
            return Err(BitError::UniverseMismatch {
                universe: subset.universe(),
                len: self.len,
            });
        }
        let mut out = BitString::zeros(subset.len());
        for (i, &pos) in subset.positions().iter().enumerate() {
            if self.get(pos) {
                out.set(i, true);
            }
        }
        Ok(out)
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut out = BitString::zeros(self.len + other.len);
        for (i, b) in self.iter().enumerate() {
            out.set(i, b);
        }
        for (i, b) in other.iter().enumerate() {
            out.set(self.len + i, b);
        }
        out
    }

    /// Copies bits `start..start + len` into a new string.
    pub fn slice(&self, start: usize, len: usize) -> BitString {
        assert!(start + len <= self.len, "slice out of range");
        let mut out = BitString::zeros(len);
        for i in 0..len {
            if self.get(start + i) {
                out.set(i, true);
            }
        }
        out
    }

    /// Lexicographic order with position 0 most significant (string reading
    /// order). Only meaningful for equal lengths.
    pub fn cmp_lex(&self, other: &BitString) -> std::cmp::Ordering {
        debug_assert_eq!(self.len, other.len);
        for i in 0..self.len {
            match (self.get(i), other.get(i)) {
                (false, true) => return std::cmp::Ordering::Less,
                (true, false) => return std::cmp::Ordering::Greater,
                _ => {}
            }
        }
        std::cmp::Ordering::Equal
    }

    /// Hex encoding, one nibble per 4 bits; bit 0 of the string is the most
    /// significant bit of the first nibble. Lengths not divisible by 4 are
    /// zero-padded at the tail, which is why serialized form always carries
    /// an explicit bit length alongside.
    pub fn to_hex(&self) -> String {
        let nibbles = self.len.div_ceil(4);
        let mut out = String::with_capacity(nibbles);
        for n in 0..nibbles {
            let mut v = 0u8;
            for j in 0..4 {
                let idx = 4 * n + j;
                if idx < self.len && self.get(idx) {
                    v |= 8 >> j;
                }
            }
            out.push(char::from_digit(v as u32, 16).unwrap());
        }
        out
    }

    pub fn from_hex(hex: &str, len: usize) -> Result<BitString, BitError> {
        let nibbles = len.div_ceil(4);
        if hex.len() != nibbles {
            return Err(BitError::InvalidHex(format!(
                "expected {nibbles} hex digits for {len} bits, got {}",
                hex.len()
            )));
        }
        let mut out = BitString::zeros(len);
        for (n, c) in hex.chars().enumerate() {
            let v = c
                .to_digit(16)
                .ok_or_else(|| BitError::InvalidHex(format!("bad digit {c:?}")))?
                as u8;
            for j in 0..4 {
                let idx = 4 * n + j;
                let bit = v & (8 >> j) != 0;
                if idx < len {
                    if bit {
                        out.set(idx, true);
                    }
                } else if bit {
                    return Err(BitError::InvalidHex(
                        "nonzero padding past declared length".into(),
                    ));
                }
            }
        }
        Ok(out)
    }
}

fn mask_tail(words: &mut [u64], len: usize) {
    let rem = len % WORD_BITS;
    if rem != 0 {
        if let Some(last) = words.last_mut() {
            *last &= (1u64 << rem) - 1;
        }
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(len={}, hex={})", self.len, self.to_hex())
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            len: usize,
            hex: &'a str,
        }
        let hex = self.to_hex();
        Repr { len: self.len, hex: &hex }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            len: usize,
            hex: String,
        }
        let repr = Repr::deserialize(deserializer)?;
        BitString::from_hex(&repr.hex, repr.len).map_err(D::Error::custom)
    }
}

/// A sorted set of distinct positions into a host string of length
/// `universe`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetIndex {
    positions: Vec<usize>,
    universe: usize,
}

impl SubsetIndex {
    pub fn new(positions: Vec<usize>, universe: usize) -> Result<Self, BitError> {
        let increasing = positions.windows(2).all(|w| w[0] < w[1]);
        let in_range = positions.last().map_or(true, |&p| p < universe);
        if !increasing || !in_range {
            return Err(BitError::InvalidPositions);
        }
        Ok(SubsetIndex { positions, universe })
    }

    pub fn empty(universe: usize) -> Self {
        SubsetIndex { positions: Vec::new(), universe }
    }

    pub fn full(universe: usize) -> Self {
        SubsetIndex {
            positions: (0..universe).collect(),
            universe,
        }
    }

    /// Uniformly random `count`-subset, sampled without replacement by a
    /// partial Fisher-Yates shuffle. O(count) extra space regardless of the
    /// universe size.
    pub fn sample(universe: usize, count: usize, rng: &mut impl Rng) -> Result<Self, BitError> {
        if count > universe {
            return Err(BitError::CountExceedsUniverse { count, universe });
        }
        let mut displaced: HashMap<usize, usize> = HashMap::with_capacity(count * 2);
        let mut picked = Vec::with_capacity(count);
        for j in 0..count {
            let r = rng.gen_range(j..universe);
            let value_r = *displaced.get(&r).unwrap_or(&r);
            let value_j = *displaced.get(&j).unwrap_or(&j);
            displaced.insert(r, value_j);
            picked.push(value_r);
        }
        picked.sort_unstable();
        Ok(SubsetIndex { positions: picked, universe })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn contains(&self, position: usize) -> bool {
        self.positions.binary_search(&position).is_ok()
    }

    /// Positions of this subset not selected, over the same universe.
    pub fn complement(&self) -> SubsetIndex {
        let mut positions = Vec::with_capacity(self.universe - self.positions.len());
        let mut next = self.positions.iter().peekable();
        for p in 0..self.universe {
            if next.peek() == Some(&&p) {
                next.next();
            } else {
                positions.push(p);
            }
        }
        SubsetIndex { positions, universe: self.universe }
    }

    /// Re-indexes through this subset: `inner` selects entries of this
    /// subset's position list, producing positions in the original universe.
    pub fn compose(&self, inner: &SubsetIndex) -> Result<SubsetIndex, BitError> {
        if inner.universe != self.positions.len() {
            return Err(BitError::UniverseMismatch {
                universe: inner.universe,
                len: self.positions.len(),
            });
        }
        let positions = inner.positions.iter().map(|&i| self.positions[i]).collect();
        Ok(SubsetIndex { positions, universe: self.universe })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn zero_length_random() {
        let mut rng = stream_rng(1, 0);
        let s = BitString::random(0, &mut rng);
        assert_eq!(s.len(), 0);
        assert!(s.is_empty());
    }

    #[test]
    fn random_is_deterministic_per_seed() {
        let a = BitString::random(8, &mut stream_rng(42, 0));
        let b = BitString::random(8, &mut stream_rng(42, 0));
        assert_eq!(a, b);
        let c = BitString::random(8, &mut stream_rng(43, 0));
        assert_ne!(a, c); // 1-in-256 chance per seed pair; these seeds differ
    }

    #[test]
    fn million_bit_frequency() {
        // Law-of-large-numbers check at the 4-sigma level: 0.5 +/- 0.002.
        let s = BitString::random(1_000_000, &mut stream_rng(7, 0));
        let freq = s.hamming_weight() as f64 / 1e6;
        assert!((freq - 0.5).abs() < 0.002, "freq {freq}");
    }

    #[test]
    fn xor_truth_table() {
        let a = BitString::from_bit_str("1100");
        let b = BitString::from_bit_str("1010");
        assert_eq!(a.xor(&b).unwrap(), BitString::from_bit_str("0110"));
        let z = BitString::from_bit_str("0000");
        assert_eq!(z.xor(&z).unwrap(), z);
        assert_eq!(b.xor(&b).unwrap(), z);
    }

    #[test]
    fn xor_length_mismatch() {
        let a = BitString::zeros(4);
        let b = BitString::zeros(5);
        assert_eq!(
            a.xor(&b).unwrap_err(),
            BitError::LengthMismatch { left: 4, right: 5 }
        );
    }

    #[test]
    fn extract_examples() {
        // position 0 is the first character of the string
        let x = BitString::from_bit_str("10110");
        let s = SubsetIndex::new(vec![0, 2, 4], 5).unwrap();
        assert_eq!(x.extract(&s).unwrap(), BitString::from_bit_str("110"));
        let s2 = SubsetIndex::new(vec![0, 2, 3], 5).unwrap();
        assert_eq!(x.extract(&s2).unwrap(), BitString::from_bit_str("111"));

        let empty = SubsetIndex::empty(5);
        assert_eq!(x.extract(&empty).unwrap().len(), 0);

        let x2 = BitString::from_bit_str("01010101");
        let s2 = SubsetIndex::new(vec![1, 3, 5, 7], 8).unwrap();
        assert_eq!(x2.extract(&s2).unwrap(), BitString::from_bit_str("1111"));
    }

    #[test]
    fn extract_universe_mismatch() {
        let x = BitString::zeros(4);
        let s = SubsetIndex::new(vec![0], 5).unwrap();
        assert!(matches!(
            x.extract(&s),
            Err(BitError::UniverseMismatch { universe: 5, len: 4 })
        ));
    }

    #[test]
    fn sample_full_and_empty() {
        let mut rng = stream_rng(3, 0);
        let full = SubsetIndex::sample(5, 5, &mut rng).unwrap();
        assert_eq!(full.positions(), &[0, 1, 2, 3, 4]);
        let empty = SubsetIndex::sample(9, 0, &mut rng).unwrap();
        assert!(empty.is_empty());
        assert!(SubsetIndex::sample(3, 4, &mut rng).is_err());
    }

    #[test]
    fn sample_uniformity_chi_squared() {
        // universe=4, count=2: six possible subsets, each should appear with
        // frequency 1/6 +/- 0.01 over 1e5 trials.
        let mut rng = stream_rng(11, 0);
        let mut counts = HashMap::new();
        let trials = 100_000;
        for _ in 0..trials {
            let s = SubsetIndex::sample(4, 2, &mut rng).unwrap();
            *counts.entry(s.positions().to_vec()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 6);
        for (subset, count) in counts {
            let freq = count as f64 / trials as f64;
            assert!(
                (freq - 1.0 / 6.0).abs() < 0.01,
                "subset {subset:?} freq {freq}"
            );
        }
    }

    #[test]
    fn hamming_examples() {
        let x = BitString::from_bit_str("1100");
        assert_eq!(x.hamming_distance(&x).unwrap(), 0);
        let zero = BitString::from_bit_str("0000");
        let ones = BitString::from_bit_str("1111");
        assert_eq!(zero.hamming_distance(&ones).unwrap(), 4);
        let y = BitString::from_bit_str("1010");
        assert_eq!(x.hamming_distance(&y).unwrap(), 2);
        assert!(zero.hamming_distance(&BitString::zeros(5)).is_err());
    }

    #[test]
    fn hex_round_trip_odd_length() {
        // 5 bits "11001" -> nibbles 1100 | 1(000 pad) -> "c8"
        let s = BitString::from_bit_str("11001");
        assert_eq!(s.to_hex(), "c8");
        assert_eq!(BitString::from_hex("c8", 5).unwrap(), s);
        // nonzero padding is rejected
        assert!(BitString::from_hex("c9", 5).is_err());
        // wrong digit count is rejected
        assert!(BitString::from_hex("c", 5).is_err());
    }

    #[test]
    fn serde_hex_header() {
        let s = BitString::from_bit_str("1011001");
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"len":7,"hex":"b2"}"#);
        let back: BitString = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn compose_and_complement() {
        let raw = SubsetIndex::new(vec![1, 3, 4, 7], 9).unwrap();
        let inner = SubsetIndex::new(vec![0, 2], 4).unwrap();
        let composed = raw.compose(&inner).unwrap();
        assert_eq!(composed.positions(), &[1, 4]);
        assert_eq!(composed.universe(), 9);
        let rest = raw.compose(&inner.complement()).unwrap();
        assert_eq!(rest.positions(), &[3, 7]);
    }

    #[test]
    fn large_register_statistics_do_not_overflow() {
        let len = 1usize << 24;
        let s = BitString::random(len, &mut stream_rng(5, 0));
        let w = s.hamming_weight();
        assert!(w > 0 && w < len);
    }

    #[test]
    fn slice_and_concat() {
        let a = BitString::from_bit_str("101");
        let b = BitString::from_bit_str("0110");
        let joined = a.concat(&b);
        assert_eq!(joined, BitString::from_bit_str("1010110"));
        assert_eq!(joined.slice(0, 3), a);
        assert_eq!(joined.slice(3, 4), b);
    }
}
