//! Stochastic number generation and decoding.
//!
//! An SN generator compares a target value against a per-cycle sequence
//! (LFSR state, Van der Corput, or Halton base-3) and emits a 1 whenever
//! `seq[n] < value`. Two SNs produced from the same sequence are positively
//! correlated; distinct correlation classes use scrambled or reseeded
//! sequences and behave as uncorrelated.
//!
//! Class scrambling is deterministic:
//! - LFSR: per-class seed `(splitmix64(class) mod (2^w - 1)) + 1`; distinct
//!   phases of a maximal sequence make good uncorrelated pairs.
//! - Van der Corput: index XOR `splitmix64(class)` before digit reversal
//!   (class 0 is unscrambled). For a power-of-two length this is a digital
//!   shift, so each class still enumerates a full quantization grid. Shifted
//!   copies stay structured against each other, so cross-class Van der
//!   Corput pairs are distinct but not a substitute for LFSR when an
//!   operation needs genuinely uncorrelated operands.
//! - Halton-3: per-digit additive shift mod 3 derived from
//!   `splitmix64(class ^ digit)` (class 0 is unscrambled).

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BitgenError {
    #[error("SN value {0} outside [0, 1]")]
    ValueOutOfRange(f64),
    #[error("SN length must be at least 1")]
    EmptyStream,
    #[error("LFSR length {n} unsupported: need a power of two with log2 in [3, 16]")]
    UnsupportedLfsrLength { n: usize },
    #[error("LFSR width {0} unsupported: need a width in [3, 16]")]
    UnsupportedLfsrWidth(u32),
    #[error("LFSR state 0 is absorbing and not allowed")]
    ZeroLfsrState,
}

/// A finite bit sequence carrying a stochastic value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bitstream {
    bits: Vec<bool>,
}

impl Bitstream {
    pub fn from_bits(bits: Vec<bool>) -> Bitstream {
        assert!(!bits.is_empty());
        Bitstream { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit(&self, n: usize) -> bool {
        self.bits[n]
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Fraction of ones: a value in [0, 1].
    pub fn decode_unipolar(&self) -> f64 {
        self.ones() as f64 / self.len() as f64
    }

    /// Ones weighted +1 and zeros -1: a value in [-1, 1].
    pub fn decode_bipolar(&self) -> f64 {
        let n = self.len() as f64;
        (2.0 * self.ones() as f64 - n) / n
    }

    pub fn truncated(&self, len: usize) -> Bitstream {
        assert!(len >= 1 && len <= self.len());
        Bitstream {
            bits: self.bits[..len].to_vec(),
        }
    }
}

impl fmt::Display for Bitstream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Bitstream {
    type Err = String;

    /// Cycle 0 is the leftmost character.
    fn from_str(s: &str) -> Result<Bitstream, String> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(format!("invalid bitstream character `{other}`")),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if bits.is_empty() {
            return Err("empty bitstream".into());
        }
        Ok(Bitstream { bits })
    }
}

/// Which per-cycle sequence drives the SN comparator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SequenceKind {
    Lfsr,
    VanDerCorput,
    Halton3,
}

impl SequenceKind {
    pub fn name(self) -> &'static str {
        match self {
            SequenceKind::Lfsr => "lfsr",
            SequenceKind::VanDerCorput => "vdc",
            SequenceKind::Halton3 => "halton3",
        }
    }

    pub fn parse(s: &str) -> Option<SequenceKind> {
        Some(match s.to_ascii_lowercase().as_str() {
            "lfsr" => SequenceKind::Lfsr,
            "vdc" | "vandercorput" | "van_der_corput" => SequenceKind::VanDerCorput,
            "halton3" | "halton" => SequenceKind::Halton3,
            _ => return None,
        })
    }
}

/// SNs generated with equal class share the identical underlying sequence and
/// are positively correlated; distinct classes are decorrelated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CorrelationClass(pub u32);

/// Digit reversal of `n` in `base`, placed after the radix point.
pub fn radical_inverse(mut n: u64, base: u64) -> f64 {
    debug_assert!(base >= 2);
    let inv_base = 1.0 / base as f64;
    let mut scale = inv_base;
    let mut value = 0.0;
    while n > 0 {
        value += (n % base) as f64 * scale;
        n /= base;
        scale *= inv_base;
    }
    value
}

// Primitive feedback polynomial exponents per width (the constant term is
// implicit), widths 3..=16. Each realizes the maximal period 2^w - 1.
const LFSR_POLYNOMIALS: [&[u32]; 14] = [
    &[3, 2],
    &[4, 3],
    &[5, 3],
    &[6, 5],
    &[7, 6],
    &[8, 6, 5, 4],
    &[9, 5],
    &[10, 7],
    &[11, 9],
    &[12, 11, 10, 4],
    &[13, 12, 11, 8],
    &[14, 13, 12, 2],
    &[15, 14],
    &[16, 14, 13, 11],
];

// Tap mask for a right-shifting register: exponent e reads bit (width - e),
// so the x^w term anchors the mask at bit 0.
fn lfsr_taps(width: u32) -> u32 {
    LFSR_POLYNOMIALS[(width - MIN_LFSR_WIDTH) as usize]
        .iter()
        .fold(0, |mask, &e| mask | 1 << (width - e))
}

pub const MIN_LFSR_WIDTH: u32 = 3;
pub const MAX_LFSR_WIDTH: u32 = 16;

/// One Fibonacci LFSR step at the given width. The all-zero state is
/// absorbing and rejected; every nonzero state lies on the single maximal
/// cycle of period `2^width - 1`.
pub fn lfsr_next(state: u32, width: u32) -> Result<u32, BitgenError> {
    if !(MIN_LFSR_WIDTH..=MAX_LFSR_WIDTH).contains(&width) {
        return Err(BitgenError::UnsupportedLfsrWidth(width));
    }
    if state == 0 {
        return Err(BitgenError::ZeroLfsrState);
    }
    let feedback = (state & lfsr_taps(width)).count_ones() & 1;
    Ok((state >> 1) | (feedback << (width - 1)))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn vdc_scrambled(index: u64, class: CorrelationClass) -> f64 {
    let key = match class.0 {
        0 => 0,
        c => splitmix64(u64::from(c)),
    };
    radical_inverse(index ^ key, 2)
}

fn halton3_scrambled(index: u64, n_digits: u32, class: CorrelationClass) -> f64 {
    if class.0 == 0 {
        return radical_inverse(index, 3);
    }
    let mut n = index;
    let mut scale = 1.0 / 3.0;
    let mut value = 0.0;
    for k in 0..n_digits {
        let digit = n % 3;
        let shift = splitmix64(u64::from(class.0) ^ (u64::from(k) << 32)) % 3;
        value += ((digit + shift) % 3) as f64 * scale;
        n /= 3;
        scale /= 3.0;
    }
    // Digits beyond n_digits are zero for every index below 3^n_digits.
    value
}

/// Generates a length-`n` SN for `value` using the class's sequence.
/// `bit[i] = 1` iff `seq[i] < value` (strict, starting at index 0).
pub fn generate_sn(
    value: f64,
    n: usize,
    kind: SequenceKind,
    class: CorrelationClass,
) -> Result<Bitstream, BitgenError> {
    if !(0.0..=1.0).contains(&value) {
        return Err(BitgenError::ValueOutOfRange(value));
    }
    if n == 0 {
        return Err(BitgenError::EmptyStream);
    }
    let bits = match kind {
        SequenceKind::VanDerCorput => (0..n as u64)
            .map(|i| vdc_scrambled(i, class) < value)
            .collect(),
        SequenceKind::Halton3 => {
            let mut n_digits = 0;
            let mut cap: u64 = 1;
            while cap < n as u64 {
                cap *= 3;
                n_digits += 1;
            }
            (0..n as u64)
                .map(|i| halton3_scrambled(i, n_digits, class) < value)
                .collect()
        }
        SequenceKind::Lfsr => {
            if !n.is_power_of_two() {
                return Err(BitgenError::UnsupportedLfsrLength { n });
            }
            let width = n.trailing_zeros();
            if !(MIN_LFSR_WIDTH..=MAX_LFSR_WIDTH).contains(&width) {
                return Err(BitgenError::UnsupportedLfsrLength { n });
            }
            let period = (n - 1) as u64;
            let mut state = (splitmix64(u64::from(class.0)) % period) as u32 + 1;
            let threshold = value * n as f64;
            let mut bits = Vec::with_capacity(n);
            for _ in 0..n {
                bits.push((state as f64) < threshold);
                state = lfsr_next(state, width)?;
            }
            bits
        }
    };
    Ok(Bitstream { bits })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_examples() {
        assert_eq!(radical_inverse(0, 2), 0.0);
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(5, 2), 0.625);
        assert!((radical_inverse(2, 3) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn vdc_first_block_is_a_permutation_of_the_grid() {
        let n = 16u64;
        let mut seen: Vec<u64> = (0..n)
            .map(|i| (radical_inverse(i, 2) * n as f64) as u64)
            .collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn scrambled_vdc_block_still_covers_the_grid() {
        let n = 16u64;
        let class = CorrelationClass(5);
        let mut seen: Vec<u64> = (0..n)
            .map(|i| (vdc_scrambled(i, class) * n as f64).floor() as u64 % n)
            .collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn unipolar_decode_matches_worked_values() {
        let s: Bitstream = "01000011".parse().unwrap();
        assert_eq!(s.decode_unipolar(), 0.375);
        let s: Bitstream = "01100010".parse().unwrap();
        assert_eq!(s.decode_unipolar(), 0.375);
        let s: Bitstream = "11111111".parse().unwrap();
        assert_eq!(s.decode_unipolar(), 1.0);
    }

    #[test]
    fn bipolar_decode_matches_worked_values() {
        let s: Bitstream = "01000011".parse().unwrap();
        assert_eq!(s.decode_bipolar(), -0.25);
        let s: Bitstream = "1111".parse().unwrap();
        assert_eq!(s.decode_bipolar(), 1.0);
        let s: Bitstream = "00101101".parse().unwrap();
        assert_eq!(s.decode_bipolar(), 0.0);
    }

    #[test]
    fn vdc_half_has_exactly_four_ones_of_eight() {
        let s = generate_sn(0.5, 8, SequenceKind::VanDerCorput, CorrelationClass(0)).unwrap();
        assert_eq!(s.ones(), 4);
    }

    #[test]
    fn base3_radical_inverse_head() {
        let want = [
            0.0,
            1.0 / 3.0,
            2.0 / 3.0,
            1.0 / 9.0,
            4.0 / 9.0,
            7.0 / 9.0,
            2.0 / 9.0,
            5.0 / 9.0,
            8.0 / 9.0,
        ];
        for (i, &w) in want.iter().enumerate() {
            assert!(
                (radical_inverse(i as u64, 3) - w).abs() < 1e-15,
                "index {i}"
            );
        }
    }

    #[test]
    fn comparator_extremes() {
        for kind in [
            SequenceKind::VanDerCorput,
            SequenceKind::Halton3,
            SequenceKind::Lfsr,
        ] {
            let zero = generate_sn(0.0, 64, kind, CorrelationClass(1)).unwrap();
            assert_eq!(zero.ones(), 0, "{kind:?}");
            let one = generate_sn(1.0, 64, kind, CorrelationClass(1)).unwrap();
            assert_eq!(one.ones(), 64, "{kind:?}");
        }
    }

    #[test]
    fn same_class_and_gives_smaller_operand_exactly() {
        let n = 64;
        for (a, b) in [(0.25, 0.75), (0.5, 0.5), (0.125, 1.0)] {
            let sa = generate_sn(a, n, SequenceKind::VanDerCorput, CorrelationClass(2)).unwrap();
            let sb = generate_sn(b, n, SequenceKind::VanDerCorput, CorrelationClass(2)).unwrap();
            let anded: Vec<bool> = sa.iter().zip(sb.iter()).map(|(x, y)| x && y).collect();
            assert_eq!(Bitstream::from_bits(anded).decode_unipolar(), a);
        }
    }

    #[test]
    fn vdc_count_stays_within_one_of_the_quantized_value() {
        for class in [0, 1, 9] {
            for n in [8usize, 32, 256] {
                for k in 0..=20 {
                    let v = k as f64 / 20.0;
                    let s = generate_sn(v, n, SequenceKind::VanDerCorput, CorrelationClass(class))
                        .unwrap();
                    let err = s.ones() as f64 - (v * n as f64).floor();
                    assert!(
                        (-1.0..=1.0).contains(&err),
                        "class {class} n {n} v {v}: count {} vs {}",
                        s.ones(),
                        v * n as f64
                    );
                }
            }
        }
    }

    #[test]
    fn lfsr_periods_are_maximal() {
        for width in MIN_LFSR_WIDTH..=MAX_LFSR_WIDTH {
            let start = 1u32;
            let mut state = start;
            let period = (1u64 << width) - 1;
            for step in 1..=period {
                state = lfsr_next(state, width).unwrap();
                if state == start {
                    assert_eq!(step, period, "width {width} period too short");
                    break;
                }
                assert!(step < period, "width {width} never returned to start");
            }
        }
    }

    #[test]
    fn lfsr_rejects_zero_state_and_bad_width() {
        assert_eq!(lfsr_next(0, 4), Err(BitgenError::ZeroLfsrState));
        assert_eq!(lfsr_next(1, 2), Err(BitgenError::UnsupportedLfsrWidth(2)));
        assert_eq!(lfsr_next(1, 17), Err(BitgenError::UnsupportedLfsrWidth(17)));
    }

    #[test]
    fn generate_sn_rejects_bad_inputs() {
        assert!(matches!(
            generate_sn(1.5, 8, SequenceKind::VanDerCorput, CorrelationClass(0)),
            Err(BitgenError::ValueOutOfRange(_))
        ));
        assert!(matches!(
            generate_sn(0.5, 12, SequenceKind::Lfsr, CorrelationClass(0)),
            Err(BitgenError::UnsupportedLfsrLength { n: 12 })
        ));
        assert!(matches!(
            generate_sn(0.5, 4, SequenceKind::Lfsr, CorrelationClass(0)),
            Err(BitgenError::UnsupportedLfsrLength { n: 4 })
        ));
    }

    proptest::proptest! {
        #[test]
        fn bipolar_is_affine_in_unipolar(bits in proptest::collection::vec(proptest::bool::ANY, 1..200)) {
            let s = Bitstream::from_bits(bits);
            let lhs = s.decode_bipolar();
            let rhs = 2.0 * s.decode_unipolar() - 1.0;
            proptest::prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
