//! Wire encodings for public-channel messages.
//!
//! Position sets travel as sorted index lists, each index in
//! `ceil(log2(universe))` bits, most significant bit first. Integers use the
//! same fixed-width big-endian layout.

use crate::bits::{BitError, BitString, SubsetIndex};

/// Bits needed to encode an index below `universe` (at least 1).
pub fn index_width(universe: usize) -> usize {
    if universe <= 2 {
        1
    } else {
        (usize::BITS - (universe - 1).leading_zeros()) as usize
    }
}

/// Fixed-width big-endian integer.
pub fn encode_uint(value: u64, width: usize) -> BitString {
    assert!(width == 64 || value >> width == 0, "value does not fit");
    let mut out = BitString::zeros(width);
    for j in 0..width {
        if value >> (width - 1 - j) & 1 == 1 {
            out.set(j, true);
        }
    }
    out
}

pub fn decode_uint(bits: &BitString) -> u64 {
    let width = bits.len();
    assert!(width <= 64);
    let mut v = 0u64;
    for j in 0..width {
        if bits.get(j) {
            v |= 1 << (width - 1 - j);
        }
    }
    v
}

/// Sorted index list, `index_width(universe)` bits per position.
pub fn encode_positions(subset: &SubsetIndex) -> BitString {
    let width = index_width(subset.universe());
    let mut out = BitString::zeros(subset.len() * width);
    for (i, &pos) in subset.positions().iter().enumerate() {
        for j in 0..width {
            if pos >> (width - 1 - j) & 1 == 1 {
                out.set(i * width + j, true);
            }
        }
    }
    out
}

pub fn decode_positions(
    bits: &BitString,
    count: usize,
    universe: usize,
) -> Result<SubsetIndex, BitError> {
    let width = index_width(universe);
    if bits.len() != count * width {
        return Err(BitError::LengthMismatch {
            left: bits.len(),
            right: count * width,
        });
    }
    let mut positions = Vec::with_capacity(count);
    for i in 0..count {
        let mut pos = 0usize;
        for j in 0..width {
            if bits.get(i * width + j) {
                pos |= 1 << (width - 1 - j);
            }
        }
        positions.push(pos);
    }
    SubsetIndex::new(positions, universe)
}

/// Broadcast size of a position set over the given universe.
pub fn positions_wire_len(count: usize, universe: usize) -> usize {
    count * index_width(universe)
}
