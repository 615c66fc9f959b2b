//! Fixed-width keypoint coalitions.

use std::fmt;

use crate::error::{Error, Result};

pub const MAX_KEYPOINTS: usize = 64;

/// A subset of keypoint indices marked visible. Bit `i` set means keypoint
/// `i` is left unperturbed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coalition {
    bits: u64,
    width: usize,
}

#[inline]
fn width_mask(width: usize) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

impl Coalition {
    pub fn empty(width: usize) -> Self {
        assert!(width <= MAX_KEYPOINTS, "coalition width {width} exceeds {MAX_KEYPOINTS}");
        Self { bits: 0, width }
    }

    pub fn full(width: usize) -> Self {
        Self {
            bits: width_mask(width),
            ..Self::empty(width)
        }
    }

    pub fn from_bits(bits: u64, width: usize) -> Result<Self> {
        if width > MAX_KEYPOINTS || bits & !width_mask(width) != 0 {
            return Err(Error::SchemaMismatch {
                expected: width,
                actual: 64 - bits.leading_zeros() as usize,
            });
        }
        Ok(Self { bits, width })
    }

    pub fn from_indices(indices: impl IntoIterator<Item = usize>, width: usize) -> Result<Self> {
        let mut c = Self::empty(width);
        for i in indices {
            if i >= width {
                return Err(Error::SchemaMismatch {
                    expected: width,
                    actual: i + 1,
                });
            }
            c.bits |= 1 << i;
        }
        Ok(c)
    }

    #[inline]
    pub fn bits(&self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < self.width && self.bits >> i & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn with(mut self, i: usize) -> Self {
        debug_assert!(i < self.width);
        self.bits |= 1 << i;
        self
    }

    pub fn without(mut self, i: usize) -> Self {
        self.bits &= !(1 << i);
        self
    }

    pub fn union(self, other: Self) -> Self {
        debug_assert_eq!(self.width, other.width);
        Self {
            bits: self.bits | other.bits,
            width: self.width,
        }
    }

    pub fn complement(self) -> Self {
        Self {
            bits: !self.bits & width_mask(self.width),
            width: self.width,
        }
    }

    /// Visible indices in ascending order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.width).filter(move |&i| self.contains(i))
    }

    /// Lower-case hex with `0x` prefix, as used by tabular oracle files.
    pub fn to_hex(&self) -> String {
        format!("{:#x}", self.bits)
    }

    pub fn parse_hex(s: &str, width: usize) -> Result<Self> {
        let t = s.trim();
        let digits = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")).unwrap_or(t);
        let bits = u64::from_str_radix(digits, 16)
            .map_err(|_| Error::MalformedTable(format!("bad coalition bitmask {t:?}")))?;
        Self::from_bits(bits, width)
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Map a coalition over `players` (bit `k` ↔ `players[k]`) onto keypoint
/// indices, OR-ed onto `base`.
pub fn embed(sub_mask: u64, players: &[usize], base: Coalition) -> Coalition {
    players
        .iter()
        .enumerate()
        .filter(|(k, _)| sub_mask >> k & 1 == 1)
        .fold(base, |c, (_, &p)| c.with(p))
}
