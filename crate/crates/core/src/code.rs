//! Polar code construction and encoding.
//!
//! Codes use natural (non bit-reversed) indexing: `x = u · F^{⊗n}` with
//! `F = [[1, 0], [1, 1]]`. The information set is the `K + c` most reliable
//! positions of a reliability order (least reliable first), sorted ascending.
//! Payload bits occupy the first `K` information positions and CRC bits the
//! last `c`.

use std::path::Path;

use crate::error::{Error, Result};

/// Bundled reliability order for `N = 128`: the 5G NR polar sequence restricted
/// to indices below 128, least reliable first.
pub const DEFAULT_RELIABILITY_128: &str = include_str!("../data/reliability_n128.txt");

/// An immutable polar code description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolarCode {
    n_block: usize,
    n_stages: usize,
    info_set: Vec<usize>,
    frozen_set: Vec<usize>,
    n_info: usize,
    n_crc: usize,
    frozen_mask: Vec<bool>,
}

impl PolarCode {
    /// Builds a code carrying `n_info` payload bits and `n_crc` CRC bits, using
    /// the `n_info + n_crc` most reliable positions of `reliability_order`.
    pub fn new(
        n_block: usize,
        n_info: usize,
        n_crc: usize,
        reliability_order: &[usize],
    ) -> Result<Self> {
        if n_block == 0 || !n_block.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n_block));
        }
        let n_nonfrozen = n_info + n_crc;
        if n_nonfrozen > n_block {
            return Err(Error::TooManyInfoBits {
                requested: n_nonfrozen,
                block: n_block,
            });
        }
        if reliability_order.len() != n_block {
            return Err(Error::NotAPermutation(n_block));
        }
        let mut seen = vec![false; n_block];
        for &idx in reliability_order {
            if idx >= n_block || seen[idx] {
                return Err(Error::NotAPermutation(n_block));
            }
            seen[idx] = true;
        }

        let mut info_set = reliability_order[n_block - n_nonfrozen..].to_vec();
        info_set.sort_unstable();
        let mut frozen_mask = vec![true; n_block];
        for &i in &info_set {
            frozen_mask[i] = false;
        }
        let frozen_set = (0..n_block).filter(|&i| frozen_mask[i]).collect();

        Ok(Self {
            n_block,
            n_stages: n_block.trailing_zeros() as usize,
            info_set,
            frozen_set,
            n_info,
            n_crc,
            frozen_mask,
        })
    }

    /// `P(128, k)` with a `c`-bit CRC from the bundled reliability order.
    pub fn default_128(n_info: usize, n_crc: usize) -> Result<Self> {
        let order = parse_reliability(DEFAULT_RELIABILITY_128)?;
        Self::new(128, n_info, n_crc, &order)
    }

    /// Builds a code directly from an information set (ascending or not).
    pub fn from_info_set(n_block: usize, info_set: &[usize], n_crc: usize) -> Result<Self> {
        if n_block == 0 || !n_block.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n_block));
        }
        if n_crc > info_set.len() {
            return Err(Error::InvalidParameter(format!(
                "{n_crc} CRC bits exceed {} information positions",
                info_set.len()
            )));
        }
        let mut is_info = vec![false; n_block];
        for &i in info_set {
            if i >= n_block || is_info[i] {
                return Err(Error::InvalidParameter(format!(
                    "bad information index {i}"
                )));
            }
            is_info[i] = true;
        }
        // Least reliable first: frozen positions, then the information set.
        let order: Vec<usize> = (0..n_block)
            .filter(|&i| !is_info[i])
            .chain(info_set.iter().copied())
            .collect();
        Self::new(n_block, info_set.len() - n_crc, n_crc, &order)
    }

    pub fn n_block(&self) -> usize {
        self.n_block
    }

    pub fn n_stages(&self) -> usize {
        self.n_stages
    }

    /// Information set 𝒜 (payload and CRC positions), ascending.
    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn frozen_set(&self) -> &[usize] {
        &self.frozen_set
    }

    /// Payload bit count `K`.
    pub fn n_info(&self) -> usize {
        self.n_info
    }

    /// CRC bit count `c`.
    pub fn n_crc(&self) -> usize {
        self.n_crc
    }

    /// `K + c`.
    pub fn n_nonfrozen(&self) -> usize {
        self.info_set.len()
    }

    /// Payload rate `K / N`.
    pub fn rate(&self) -> f64 {
        self.n_info as f64 / self.n_block as f64
    }

    #[inline]
    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen_mask[i]
    }

    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen_mask
    }

    /// Places `K + c` information bits at their positions in a zeroed message word.
    pub fn embed(&self, info_bits: &[u8]) -> Result<Vec<u8>> {
        check_len(self.info_set.len(), info_bits.len())?;
        let mut u = vec![0u8; self.n_block];
        for (&pos, &b) in self.info_set.iter().zip(info_bits) {
            u[pos] = b & 1;
        }
        Ok(u)
    }

    /// Reads the `K + c` information bits out of a message word.
    pub fn extract(&self, u: &[u8]) -> Vec<u8> {
        self.info_set.iter().map(|&pos| u[pos]).collect()
    }

    /// Encodes a message word: `x = u · F^{⊗n}`.
    pub fn encode(&self, u: &[u8]) -> Result<Vec<u8>> {
        check_len(self.n_block, u.len())?;
        if let Some(&i) = self.frozen_set.iter().find(|&&i| u[i] != 0) {
            return Err(Error::NonzeroFrozenBit(i));
        }
        let mut x = u.to_vec();
        polar_transform(&mut x);
        Ok(x)
    }
}

/// Free-function form of [`PolarCode::new`] without CRC bits.
pub fn construct_code(
    n_block: usize,
    n_nonfrozen: usize,
    reliability_order: &[usize],
) -> Result<PolarCode> {
    PolarCode::new(n_block, n_nonfrozen, 0, reliability_order)
}

/// Free-function form of [`PolarCode::encode`].
pub fn encode(code: &PolarCode, u: &[u8]) -> Result<Vec<u8>> {
    code.encode(u)
}

/// In-place butterfly `v ← v · F^{⊗n}` over GF(2). The transform is its own inverse.
pub fn polar_transform(bits: &mut [u8]) {
    let n = bits.len();
    debug_assert!(n.is_power_of_two());
    let mut half = 1;
    while half < n {
        for block in (0..n).step_by(2 * half) {
            for k in block..block + half {
                bits[k] ^= bits[k + half];
            }
        }
        half *= 2;
    }
}

/// Parses a reliability file: one index per line, least reliable first,
/// `#` starts a comment.
pub fn parse_reliability(text: &str) -> Result<Vec<usize>> {
    let mut order = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let idx = content.parse::<usize>().map_err(|_| {
            Error::Parse(format!(
                "line {}: '{}' is not an index",
                lineno + 1,
                content
            ))
        })?;
        order.push(idx);
    }
    Ok(order)
}

pub fn load_reliability(path: &Path) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path)?;
    parse_reliability(&text)
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual })
    }
}
