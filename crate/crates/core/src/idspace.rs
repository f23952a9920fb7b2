//! The `d`-bit identifier space.
//!
//! Identifiers are stored most-significant bit first and left-aligned in four
//! 64-bit words, so lexicographic word order is the numeric order of the ids
//! and XOR distances can be compared without building big integers.
//! Bit `1` is "right" of bit `0` in every ordering used by this crate.

use std::cmp::Ordering;
use std::fmt;
use std::path::Path;

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported id length in bits.
pub const MAX_BITS: usize = 256;

const WORDS: usize = MAX_BITS / 64;

/// A `d`-bit node identifier `(x_1, ..., x_d)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId {
    words: [u64; WORDS],
    bits: u16,
}

/// An XOR distance, exposed as an arbitrary-precision integer.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Distance(BigUint);

impl Distance {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn into_inner(self) -> BigUint {
        self.0
    }

    /// Number of significant bits; `0` for the zero distance.
    pub fn bit_length(&self) -> u64 {
        self.0.bits()
    }

    pub fn is_zero(&self) -> bool {
        self.0.bits() == 0
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

fn check_len(d: usize) -> Result<()> {
    if d == 0 || d > MAX_BITS {
        return Err(Error::BadLength {
            got: d,
            max: MAX_BITS,
        });
    }
    Ok(())
}

fn word_mask(d: usize, w: usize) -> u64 {
    let valid = d.saturating_sub(64 * w).min(64);
    match valid {
        0 => 0,
        64 => u64::MAX,
        v => u64::MAX << (64 - v),
    }
}

fn shl(words: [u64; WORDS], s: usize) -> [u64; WORDS] {
    let mut out = [0u64; WORDS];
    let (ws, bs) = (s / 64, s % 64);
    for i in 0..WORDS {
        let src = i + ws;
        if src >= WORDS {
            break;
        }
        out[i] = words[src] << bs;
        if bs > 0 && src + 1 < WORDS {
            out[i] |= words[src + 1] >> (64 - bs);
        }
    }
    out
}

fn shr(words: [u64; WORDS], s: usize) -> [u64; WORDS] {
    let mut out = [0u64; WORDS];
    let (ws, bs) = (s / 64, s % 64);
    for i in (0..WORDS).rev() {
        if i < ws {
            break;
        }
        let src = i - ws;
        out[i] = words[src] >> bs;
        if bs > 0 && src >= 1 {
            out[i] |= words[src - 1] << (64 - bs);
        }
    }
    out
}

impl NodeId {
    /// The all-zero id `0̄` of length `d`.
    ///
    /// Panics if `d` is not in `1..=MAX_BITS`.
    pub fn zeros(d: usize) -> Self {
        check_len(d).expect("invalid id length");
        NodeId {
            words: [0; WORDS],
            bits: d as u16,
        }
    }

    /// The all-one id `1̄` of length `d`.
    ///
    /// Panics if `d` is not in `1..=MAX_BITS`.
    pub fn ones(d: usize) -> Self {
        NodeId::zeros(d).complement()
    }

    /// Builds an id from a slice of binary digits, most significant first.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        check_len(bits.len())?;
        let mut id = NodeId::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => id.words[i / 64] |= 1u64 << (63 - i % 64),
                other => {
                    return Err(Error::Parse {
                        line: 0,
                        msg: format!("bit {i} is {other}, expected 0 or 1"),
                    })
                }
            }
        }
        Ok(id)
    }

    /// The `d`-bit id whose binary value is `value`.
    pub fn from_u64(value: u64, d: usize) -> Result<Self> {
        check_len(d)?;
        if d < 64 && value >> d != 0 {
            return Err(Error::Parse {
                line: 0,
                msg: format!("{value} does not fit in {d} bits"),
            });
        }
        let mut right = [0u64; WORDS];
        right[WORDS - 1] = value;
        Ok(NodeId {
            words: shl(right, MAX_BITS - d),
            bits: d as u16,
        })
    }

    /// The `d`-bit id whose binary value is `value`.
    pub fn from_biguint(value: &BigUint, d: usize) -> Result<Self> {
        check_len(d)?;
        if value.bits() > d as u64 {
            return Err(Error::Parse {
                line: 0,
                msg: format!("{value} does not fit in {d} bits"),
            });
        }
        let mut right = [0u64; WORDS];
        for (i, digit) in value.to_u64_digits().into_iter().enumerate() {
            right[WORDS - 1 - i] = digit;
        }
        Ok(NodeId {
            words: shl(right, MAX_BITS - d),
            bits: d as u16,
        })
    }

    /// Uniformly random `d`-bit id.
    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        let mut id = NodeId::zeros(d);
        let used = d.div_ceil(64);
        for w in 0..used {
            id.words[w] = rng.random::<u64>() & word_mask(d, w);
        }
        id
    }

    /// Id length `d`.
    #[inline]
    pub fn len(&self) -> usize {
        self.bits as usize
    }

    /// Always false; ids have at least one bit.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Bit at 0-based position `i`, where position 0 is `x_1`.
    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        debug_assert!(i < self.len());
        (self.words[i / 64] >> (63 - i % 64)) & 1 == 1
    }

    pub fn bits(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.len()).map(|i| self.bit(i) as u8)
    }

    /// Returns a copy with bit `i` set to `value`.
    pub fn with_bit(mut self, i: usize, value: bool) -> Self {
        assert!(
            i < self.len(),
            "bit {i} out of range for {}-bit id",
            self.len()
        );
        let m = 1u64 << (63 - i % 64);
        if value {
            self.words[i / 64] |= m;
        } else {
            self.words[i / 64] &= !m;
        }
        self
    }

    /// Keeps the first `depth` bits and sets every later bit to `fill`.
    pub fn with_suffix(&self, depth: usize, fill: bool) -> Self {
        let d = self.len();
        assert!(depth <= d);
        let mut out = *self;
        for w in 0..WORDS {
            let keep = word_mask(depth, w);
            let valid = word_mask(d, w);
            out.words[w] = (self.words[w] & keep) | if fill { valid & !keep } else { 0 };
        }
        out
    }

    /// Binary value of the id.
    pub fn to_biguint(&self) -> BigUint {
        let right = shr(self.words, MAX_BITS - self.len());
        let digits: Vec<u64> = right.iter().rev().copied().collect();
        BigUint::from_slice(
            &digits
                .iter()
                .flat_map(|d| [*d as u32, (*d >> 32) as u32])
                .collect::<Vec<_>>(),
        )
    }

    /// Binary value of the id when `d <= 64`.
    pub fn to_u64(&self) -> Option<u64> {
        (self.len() <= 64).then(|| shr(self.words, MAX_BITS - self.len())[WORDS - 1])
    }

    #[inline]
    pub fn xor(&self, other: &NodeId) -> NodeId {
        debug_assert_eq!(self.bits, other.bits);
        let mut words = [0u64; WORDS];
        for (w, (a, b)) in words.iter_mut().zip(self.words.iter().zip(&other.words)) {
            *w = a ^ b;
        }
        NodeId {
            words,
            bits: self.bits,
        }
    }

    /// Bitwise complement (the polar opposite).
    pub fn complement(&self) -> NodeId {
        let d = self.len();
        let mut words = self.words;
        for (w, word) in words.iter_mut().enumerate() {
            *word = !*word & word_mask(d, w);
        }
        NodeId {
            words,
            bits: self.bits,
        }
    }

    /// Length of the common prefix, without a dimension check.
    #[inline]
    pub fn prefix_len_with(&self, other: &NodeId) -> usize {
        debug_assert_eq!(self.bits, other.bits);
        for w in 0..WORDS {
            let x = self.words[w] ^ other.words[w];
            if x != 0 {
                return (64 * w + x.leading_zeros() as usize).min(self.len());
            }
        }
        self.len()
    }

    /// Orders `self` against `other` by XOR distance to `target`;
    /// `Less` means `self` is closer. No dimension check.
    #[inline]
    pub fn cmp_distance(&self, other: &NodeId, target: &NodeId) -> Ordering {
        debug_assert_eq!(self.bits, other.bits);
        debug_assert_eq!(self.bits, target.bits);
        for w in 0..WORDS {
            let a = self.words[w] ^ target.words[w];
            let b = other.words[w] ^ target.words[w];
            if a != b {
                return a.cmp(&b);
            }
        }
        Ordering::Equal
    }

    /// Relabels `self` as `self XOR complement(y)`, mapping `y` to `1̄`.
    pub fn rotate_by_target(&self, y: &NodeId) -> Result<NodeId> {
        same_dim(self, y)?;
        Ok(self.xor(&y.complement()))
    }

    pub fn to_binary_string(&self) -> String {
        self.bits()
            .map(|b| if b == 1 { '1' } else { '0' })
            .collect()
    }

    /// Hex rendering; `None` unless `d` is a multiple of 4.
    pub fn to_hex_string(&self) -> Option<String> {
        if !self.len().is_multiple_of(4) {
            return None;
        }
        let mut s = String::with_capacity(self.len() / 4);
        for nib in 0..self.len() / 4 {
            let v = (0..4).fold(0u32, |acc, j| (acc << 1) | self.bit(4 * nib + j) as u32);
            s.push(char::from_digit(v, 16).expect("nibble"));
        }
        Some(s)
    }

    pub fn parse_binary(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0u8),
                '1' => Ok(1u8),
                other => Err(Error::Parse {
                    line: 0,
                    msg: format!("invalid binary digit {other:?}"),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        NodeId::from_bits(&bits)
    }

    pub fn parse_hex(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len() * 4);
        for c in s.chars() {
            let v = c.to_digit(16).ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("invalid hex digit {c:?}"),
            })?;
            bits.extend((0..4).rev().map(|j| ((v >> j) & 1) as u8));
        }
        NodeId::from_bits(&bits)
    }

    /// Parses a `d`-bit id written either as `d` binary digits or `d/4` hex digits.
    pub fn parse_with_len(s: &str, d: usize) -> Result<Self> {
        let s = s.trim();
        if s.len() == d && s.chars().all(|c| c == '0' || c == '1') {
            return NodeId::parse_binary(s);
        }
        if d.is_multiple_of(4) && s.len() == d / 4 {
            return NodeId::parse_hex(s);
        }
        let expected = if d.is_multiple_of(4) {
            format!("{d} binary digits or {} hex digits", d / 4)
        } else {
            format!("{d} binary digits")
        };
        Err(Error::Parse {
            line: 0,
            msg: format!("expected {expected}, got {:?} ({} chars)", s, s.len()),
        })
    }
}

impl PartialOrd for NodeId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Numeric order for ids of equal length; shorter ids sort first otherwise.
impl Ord for NodeId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bits
            .cmp(&other.bits)
            .then_with(|| self.words.cmp(&other.words))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_hex_string() {
            Some(h) => write!(f, "{h}"),
            None => write!(f, "{}", self.to_binary_string()),
        }
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len() <= 32 {
            write!(f, "NodeId({})", self.to_binary_string())
        } else {
            write!(f, "NodeId({}b:{})", self.len(), self)
        }
    }
}

impl Serialize for NodeId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_binary_string())
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        NodeId::parse_binary(&s).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn same_dim(a: &NodeId, b: &NodeId) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// `δ(x, y) = Σ (x_i ⊕ y_i) 2^{d-i}`.
pub fn xor_distance(x: &NodeId, y: &NodeId) -> Result<Distance> {
    same_dim(x, y)?;
    Ok(Distance(x.xor(y).to_biguint()))
}

/// `ℓ(x, y)`: length of the common prefix, `d` when `x == y`.
pub fn common_prefix_len(x: &NodeId, y: &NodeId) -> Result<usize> {
    same_dim(x, y)?;
    Ok(x.prefix_len_with(y))
}

/// The `i` with `y ∈ 𝒟_i(x)`, i.e. `d - ℓ(x, y)`.
pub fn bucket_index(x: &NodeId, y: &NodeId) -> Result<usize> {
    let l = common_prefix_len(x, y)?;
    if l == x.len() {
        return Err(Error::UndefinedBucket);
    }
    Ok(x.len() - l)
}

/// The id farthest from `x`.
pub fn polar_opposite(x: &NodeId) -> NodeId {
    x.complement()
}

/// Orders `a` against `b` by XOR distance to `target` (`Less` = `a` is closer).
pub fn compare_by_distance(a: &NodeId, b: &NodeId, target: &NodeId) -> Result<Ordering> {
    same_dim(a, b)?;
    same_dim(a, target)?;
    Ok(a.cmp_distance(b, target))
}

/// Parses an id list, one id per line. Blank lines and `#` comments are skipped.
///
/// When `d` is `None` it is inferred from the first id: a line made only of
/// `0`/`1` is binary, anything else is hex.
pub fn parse_id_list(text: &str, d: Option<usize>) -> Result<Vec<NodeId>> {
    let mut d = d;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let width = *d.get_or_insert_with(|| {
            if line.chars().all(|c| c == '0' || c == '1') {
                line.len()
            } else {
                4 * line.len()
            }
        });
        let id = check_len(width)
            .and_then(|_| NodeId::parse_with_len(line, width))
            .map_err(|e| Error::Parse {
                line: idx + 1,
                msg: match e {
                    Error::Parse { msg, .. } => msg,
                    other => other.to_string(),
                },
            })?;
        out.push(id);
    }
    Ok(out)
}

pub fn read_id_file(path: &Path, d: Option<usize>) -> Result<Vec<NodeId>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_id_list(&text, d)
}
