//! CRC generation and verification over bit vectors.
//!
//! The register is MSB-first with no reflection and no output XOR. The
//! polynomial is stored without its leading `x^c` term.

use crate::error::{Error, Result};

/// 24-bit CRC of the 5G polar control channels (CRC24C):
/// x²⁴+x²³+x²¹+x²⁰+x¹⁷+x¹⁵+x¹³+x¹²+x⁸+x⁴+x²+x+1.
pub const CRC24C_POLY: u64 = 0xB2_B117;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrcSpec {
    length: usize,
    polynomial: u64,
    init: u64,
}

impl CrcSpec {
    pub fn new(length: usize, polynomial: u64, init: u64) -> Result<Self> {
        if length == 0 || length > 63 {
            return Err(Error::InvalidCrc(format!("length {length} not in 1..=63")));
        }
        let mask = (1u64 << length) - 1;
        if polynomial & !mask != 0 {
            return Err(Error::InvalidCrc(format!(
                "polynomial {polynomial:#x} has terms at or above x^{length}"
            )));
        }
        if polynomial & 1 == 0 {
            return Err(Error::InvalidCrc(
                "polynomial must have a constant term".to_string(),
            ));
        }
        if init & !mask != 0 {
            return Err(Error::InvalidCrc(format!(
                "init {init:#x} wider than {length} bits"
            )));
        }
        Ok(Self {
            length,
            polynomial,
            init,
        })
    }

    /// CRC24C with a zero register seed.
    pub fn crc24c() -> Self {
        Self::new(24, CRC24C_POLY, 0).expect("valid constant")
    }

    /// Parses a polynomial written in hex (with or without `0x`).
    pub fn from_hex(length: usize, poly_hex: &str, init: u64) -> Result<Self> {
        let digits = poly_hex
            .trim()
            .trim_start_matches("0x")
            .trim_start_matches("0X");
        let poly = u64::from_str_radix(digits, 16)
            .map_err(|_| Error::InvalidCrc(format!("bad hex polynomial '{poly_hex}'")))?;
        Self::new(length, poly, init)
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn polynomial(&self) -> u64 {
        self.polynomial
    }

    pub fn init(&self) -> u64 {
        self.init
    }

    fn mask(&self) -> u64 {
        (1u64 << self.length) - 1
    }

    /// Register contents after shifting `bits` through the CRC register.
    pub fn remainder(&self, bits: &[u8]) -> u64 {
        let top = self.length - 1;
        let mask = self.mask();
        let mut reg = self.init;
        for &b in bits {
            let feedback = ((reg >> top) as u8 ^ b) & 1;
            reg = (reg << 1) & mask;
            if feedback != 0 {
                reg ^= self.polynomial;
            }
        }
        reg
    }

    /// Appends `c` CRC bits to the payload.
    pub fn attach(&self, payload: &[u8]) -> Vec<u8> {
        let rem = self.remainder(payload);
        let mut word = Vec::with_capacity(payload.len() + self.length);
        word.extend_from_slice(payload);
        word.extend((0..self.length).rev().map(|k| ((rem >> k) & 1) as u8));
        word
    }

    /// True iff the trailing `c` bits of `word` are the CRC of the rest.
    pub fn check(&self, word: &[u8]) -> bool {
        if word.len() < self.length {
            return false;
        }
        let (payload, tail) = word.split_at(word.len() - self.length);
        let rem = self.remainder(payload);
        tail.iter()
            .enumerate()
            .all(|(j, &b)| ((rem >> (self.length - 1 - j)) & 1) as u8 == b)
    }
}

/// Length-checked form of [`CrcSpec::attach`].
pub fn crc_attach(payload: &[u8], n_payload: usize, spec: &CrcSpec) -> Result<Vec<u8>> {
    if payload.len() != n_payload {
        return Err(Error::LengthMismatch {
            expected: n_payload,
            actual: payload.len(),
        });
    }
    Ok(spec.attach(payload))
}

/// Length-checked form of [`CrcSpec::check`].
pub fn crc_check(word: &[u8], n_payload: usize, spec: &CrcSpec) -> Result<bool> {
    let expected = n_payload + spec.length();
    if word.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: word.len(),
        });
    }
    Ok(spec.check(word))
}
