//! Strongly 2-universal hashing plus the information-theoretic oracles used
//! to verify it: binary entropy, variational distance, min-entropy, and an
//! exact leftover-hash-lemma distance computed by family enumeration.
//!
//! The hash family is Toeplitz-with-offset over GF(2): `h(x) = T x + b`,
//! where the `m x n` matrix `T` is defined by a diagonal seed of length
//! `n + m - 1` and `b` is an m-bit offset. Seed length is linear in `n + m`,
//! which matters because seeds travel the capped public channel. For any
//! distinct `x1, x2` and any `y1, y2`, exactly `#H / 2^(2m)` members map
//! `x1 -> y1` and `x2 -> y2`; [`toeplitz_pair_count`] checks that count by
//! enumeration.

use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::bits::{BitError, BitString};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HashingError {
    #[error(transparent)]
    Bits(#[from] BitError),
    #[error("probability {0} outside [0,1]")]
    Domain(f64),
    #[error("distribution not normalized: sum is {0}")]
    Unnormalized(f64),
    #[error("negative probability {0}")]
    NegativeProbability(f64),
    #[error("duplicate outcome value {0}")]
    DuplicateOutcome(u64),
    #[error("outcome value {value} does not fit in {bits} bits")]
    ValueRange { value: u64, bits: usize },
    #[error("exhaustive oracle limited to {limit}, got {got}")]
    OracleTooLarge { limit: usize, got: usize },
}

/// One member of the Toeplitz-with-offset family, `{0,1}^n -> {0,1}^m`.
///
/// Row `i`, column `j` of the matrix is `diagonal[(n-1) + i - j]`. Rows are
/// pre-packed into words at construction so hashing costs `m * ceil(n/64)`
/// word operations.
#[derive(Clone, Debug)]
pub struct ToeplitzHash {
    n: usize,
    m: usize,
    diagonal: BitString,
    offset: BitString,
    rows: Vec<u64>,
    stride: usize,
}

impl ToeplitzHash {
    pub fn from_parts(diagonal: BitString, offset: BitString) -> Result<Self, HashingError> {
        let m = offset.len();
        if diagonal.len() + 1 < m {
            return Err(BitError::LengthMismatch {
                left: diagonal.len(),
                right: m,
            }
            .into());
        }
        let n = diagonal.len() + 1 - m;
        let stride = n.div_ceil(64).max(1);
        let mut rows = Vec::with_capacity(m * stride);
        let reversed = diagonal.reversed();
        for i in 0..m {
            rows.extend_from_slice(&reversed.extract_words(m - 1 - i, n));
        }
        Ok(ToeplitzHash {
            n,
            m,
            diagonal,
            offset,
            rows,
            stride,
        })
    }

    /// Uniformly random family member for the given dimensions.
    pub fn random(n: usize, m: usize, rng: &mut impl RngCore) -> Self {
        let diagonal = BitString::random(n + m - 1, rng);
        let offset = BitString::random(m, rng);
        ToeplitzHash::from_parts(diagonal, offset).expect("dimensions consistent")
    }

    pub fn input_len(&self) -> usize {
        self.n
    }

    pub fn output_len(&self) -> usize {
        self.m
    }

    pub fn diagonal(&self) -> &BitString {
        &self.diagonal
    }

    pub fn offset(&self) -> &BitString {
        &self.offset
    }

    /// The same matrix with a zero offset; `h(x) = h0(x) + offset`.
    pub fn with_zero_offset(&self) -> ToeplitzHash {
        ToeplitzHash::from_parts(self.diagonal.clone(), BitString::zeros(self.m))
            .expect("dimensions consistent")
    }

    /// `diagonal || offset`, the wire form broadcast over the public channel.
    pub fn seed_bits(&self) -> BitString {
        self.diagonal.concat(&self.offset)
    }

    /// Rebuilds a member from its wire form.
    pub fn from_seed_bits(n: usize, m: usize, seed: &BitString) -> Result<Self, HashingError> {
        let expect = n + m - 1 + m;
        if seed.len() != expect {
            return Err(BitError::LengthMismatch {
                left: seed.len(),
                right: expect,
            }
            .into());
        }
        let diagonal = seed.slice(0, n + m - 1);
        let offset = seed.slice(n + m - 1, m);
        ToeplitzHash::from_parts(diagonal, offset)
    }

    /// Number of bits it takes to broadcast a member of this family.
    pub fn seed_len(n: usize, m: usize) -> usize {
        (n + m - 1) + m
    }

    pub fn hash(&self, x: &BitString) -> Result<BitString, HashingError> {
        if x.len() != self.n {
            return Err(BitError::LengthMismatch {
                left: x.len(),
                right: self.n,
            }
            .into());
        }
        let xw = x.words();
        let mut out = BitString::zeros(self.m);
        for i in 0..self.m {
            let row = &self.rows[i * self.stride..(i + 1) * self.stride];
            let mut fold = 0u64;
            for (r, v) in row.iter().zip(xw.iter()) {
                fold ^= r & v;
            }
            let bit = (fold.count_ones() & 1 == 1) ^ self.offset.get(i);
            if bit {
                out.set(i, true);
            }
        }
        Ok(out)
    }
}

// Word-sized fast path used by the enumeration oracles (n, m <= 12 keeps
// matrix, input and output inside one u64 each).

/// Reverses the low `len` bits of `v`.
fn reverse_low_bits(v: u64, len: usize) -> u64 {
    let mut out = 0u64;
    for i in 0..len {
        if v >> i & 1 == 1 {
            out |= 1 << (len - 1 - i);
        }
    }
    out
}

/// Packed rows of the Toeplitz matrix for a diagonal seed given as the low
/// `n + m - 1` bits of `diag`.
pub(crate) fn toeplitz_rows_u64(n: usize, m: usize, diag: u64) -> Vec<u64> {
    debug_assert!(n + m - 1 <= 63);
    let rev = reverse_low_bits(diag, n + m - 1);
    let mask = (1u64 << n) - 1;
    (0..m).map(|i| (rev >> (m - 1 - i)) & mask).collect()
}

pub(crate) fn toeplitz_hash_u64(rows: &[u64], offset: u64, x: u64) -> u64 {
    let mut out = offset;
    for (i, row) in rows.iter().enumerate() {
        out ^= (((row & x).count_ones() & 1) as u64) << i;
    }
    out
}

/// Counts, by full enumeration of the `2^(n+2m-1)` family members, how many
/// map `x1 -> y1` and `x2 -> y2`. For distinct inputs the count equals
/// `#H / 2^(2m)` exactly; that is the 2-universality property.
pub fn toeplitz_pair_count(
    n: usize,
    m: usize,
    x1: u64,
    x2: u64,
    y1: u64,
    y2: u64,
) -> Result<u64, HashingError> {
    if n + 2 * m - 1 > 26 {
        return Err(HashingError::OracleTooLarge {
            limit: 26,
            got: n + 2 * m - 1,
        });
    }
    for &(v, bits) in &[(x1, n), (x2, n), (y1, m), (y2, m)] {
        if bits < 64 && v >> bits != 0 {
            return Err(HashingError::ValueRange { value: v, bits });
        }
    }
    let mut count = 0u64;
    for diag in 0..1u64 << (n + m - 1) {
        let rows = toeplitz_rows_u64(n, m, diag);
        for offset in 0..1u64 << m {
            if toeplitz_hash_u64(&rows, offset, x1) == y1
                && toeplitz_hash_u64(&rows, offset, x2) == y2
            {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Family size `#H = 2^(n+2m-1)` for the enumeration regime.
pub fn toeplitz_family_size(n: usize, m: usize) -> u64 {
    1u64 << (n + 2 * m - 1)
}

/// Binary entropy `h_b(p) = -p log2 p - (1-p) log2 (1-p)`, with
/// `0 log 0 := 0`.
pub fn binary_entropy(p: f64) -> Result<f64, HashingError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(HashingError::Domain(p));
    }
    let term = |q: f64| if q == 0.0 { 0.0 } else { -q * q.log2() };
    Ok(term(p) + term(1.0 - p))
}

const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// A finite distribution over `u64` outcome values.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiniteDistribution {
    outcomes: Vec<(u64, f64)>,
}

impl FiniteDistribution {
    pub fn new(outcomes: Vec<(u64, f64)>) -> Result<Self, HashingError> {
        let mut seen = std::collections::HashSet::new();
        let mut sum = 0.0;
        for &(v, p) in &outcomes {
            if p < 0.0 {
                return Err(HashingError::NegativeProbability(p));
            }
            if !seen.insert(v) {
                return Err(HashingError::DuplicateOutcome(v));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(HashingError::Unnormalized(sum));
        }
        Ok(FiniteDistribution { outcomes })
    }

    pub fn point_mass(value: u64) -> Self {
        FiniteDistribution {
            outcomes: vec![(value, 1.0)],
        }
    }

    pub fn uniform_on(values: &[u64]) -> Result<Self, HashingError> {
        let p = 1.0 / values.len() as f64;
        FiniteDistribution::new(values.iter().map(|&v| (v, p)).collect())
    }

    /// Uniform over all `2^bits` values.
    pub fn uniform_bits(bits: usize) -> Self {
        let count = 1u64 << bits;
        let p = 1.0 / count as f64;
        FiniteDistribution {
            outcomes: (0..count).map(|v| (v, p)).collect(),
        }
    }

    pub fn outcomes(&self) -> &[(u64, f64)] {
        &self.outcomes
    }

    pub fn max_probability(&self) -> f64 {
        self.outcomes.iter().map(|&(_, p)| p).fold(0.0, f64::max)
    }
}

/// `H_inf(X) = -log2 max_x P(X = x)`.
pub fn min_entropy(dist: &FiniteDistribution) -> f64 {
    -dist.max_probability().log2()
}

/// A joint distribution over pairs `(x, y)`.
#[derive(Clone, Debug)]
pub struct JointDistribution {
    outcomes: Vec<((u64, u64), f64)>,
}

impl JointDistribution {
    pub fn new(outcomes: Vec<((u64, u64), f64)>) -> Result<Self, HashingError> {
        let mut seen = std::collections::HashSet::new();
        let mut sum = 0.0;
        for &((x, y), p) in &outcomes {
            if p < 0.0 {
                return Err(HashingError::NegativeProbability(p));
            }
            if !seen.insert((x, y)) {
                return Err(HashingError::DuplicateOutcome(x));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(HashingError::Unnormalized(sum));
        }
        Ok(JointDistribution { outcomes })
    }

    pub fn outcomes(&self) -> &[((u64, u64), f64)] {
        &self.outcomes
    }

    /// Marginal distribution of the first component.
    pub fn marginal_x(&self) -> FiniteDistribution {
        let mut acc: BTreeMap<u64, f64> = BTreeMap::new();
        for &((x, _), p) in &self.outcomes {
            *acc.entry(x).or_insert(0.0) += p;
        }
        FiniteDistribution {
            outcomes: acc.into_iter().collect(),
        }
    }
}

/// `H_inf(X|Y) = -log2 sum_y max_x P(X = x, Y = y)`: the negative log of the
/// optimal probability of guessing X given side information Y.
pub fn conditional_min_entropy(joint: &JointDistribution) -> f64 {
    let mut best_per_y: BTreeMap<u64, f64> = BTreeMap::new();
    for &((_, y), p) in joint.outcomes() {
        let e = best_per_y.entry(y).or_insert(0.0);
        if p > *e {
            *e = p;
        }
    }
    let guess: f64 = best_per_y.values().sum();
    -guess.log2()
}

/// `delta(P, Q) = (1/2) sum |P(i) - Q(i)|` over the union support.
pub fn variational_distance(
    p: &FiniteDistribution,
    q: &FiniteDistribution,
) -> Result<f64, HashingError> {
    let mut union: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for &(v, pp) in p.outcomes() {
        union.entry(v).or_insert((0.0, 0.0)).0 += pp;
    }
    for &(v, qq) in q.outcomes() {
        union.entry(v).or_insert((0.0, 0.0)).1 += qq;
    }
    Ok(union.values().map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0)
}

/// Exact `delta((h(S,X), S), U (x) S)` for the Toeplitz-with-offset family,
/// by enumeration. `X` ranges over `n`-bit values, outputs over `m` bits.
///
/// XOR by the offset permutes outputs and leaves the distance to uniform
/// unchanged, so the enumeration runs over diagonal seeds only; the average
/// over offsets is identical (cross-checked against full-family enumeration
/// in the tests).
pub fn lhl_distance_oracle(
    dist: &FiniteDistribution,
    n: usize,
    m: usize,
) -> Result<f64, HashingError> {
    if n > 12 {
        return Err(HashingError::OracleTooLarge { limit: 12, got: n });
    }
    if m > n {
        return Err(HashingError::OracleTooLarge { limit: n, got: m });
    }
    for &(v, _) in dist.outcomes() {
        if n < 64 && v >> n != 0 {
            return Err(HashingError::ValueRange { value: v, bits: n });
        }
    }
    if m == 0 {
        return Ok(0.0);
    }
    let seeds = 1u64 << (n + m - 1);
    let uniform = 1.0 / (1u64 << m) as f64;
    let mut acc = 0.0f64;
    let mut hashed = vec![0.0f64; 1 << m];
    for diag in 0..seeds {
        let rows = toeplitz_rows_u64(n, m, diag);
        hashed.iter_mut().for_each(|p| *p = 0.0);
        for &(x, p) in dist.outcomes() {
            hashed[toeplitz_hash_u64(&rows, 0, x) as usize] += p;
        }
        let d: f64 = hashed.iter().map(|&p| (p - uniform).abs()).sum::<f64>() / 2.0;
        acc += d;
    }
    Ok(acc / seeds as f64)
}
