//! Multi-mode array multiplier and dot-product reduction.
//!
//! The 24-bit mantissa multiplier is partitioned into four 6-bit segments.
//! Segment cross-products are generated once and selectively combined per
//! execution mode; partial sums that belong to other lanes are gated to
//! zero. In dot-product modes the exposed adder tree additionally aligns
//! the per-term products (one shifter per term) and conditionally negates
//! them for subtraction before summing.

use crate::shifter::{self, ShiftDirection, ShiftMode, ShiftRequest};
use thiserror::Error;

pub const SEGMENT_BITS: u32 = 6;
pub const SEGMENT_COUNT: usize = 4;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum MultiplierError {
    #[error("invalid segmentation: {0}")]
    InvalidSegmentation(&'static str),
}

/// Execution mode of the multiplier array.
///
/// `Simd2x12` runs two 12-bit sub-multipliers (11-bit FP16 significands,
/// zero-extended); `Simd4x6` runs four 6-bit segments (4-bit FP8
/// significands). The DPA modes produce the same partial products and
/// additionally engage the reduction tree; `DpaFp4` accumulates externally
/// generated sign-magnitude partials instead of array products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MulMode {
    Scalar24,
    Simd2x12,
    Simd4x6,
    Dpa2,
    Dpa4,
    DpaFp4,
}

impl MulMode {
    /// Number of independent products the array produces in this mode.
    pub const fn lanes(self) -> usize {
        match self {
            MulMode::Scalar24 => 1,
            MulMode::Simd2x12 | MulMode::Dpa2 => 2,
            MulMode::Simd4x6 | MulMode::Dpa4 | MulMode::DpaFp4 => 4,
        }
    }

    /// Width of the magnitude field a reduction term occupies.
    pub const fn term_bits(self) -> u32 {
        match self {
            MulMode::Dpa2 => 24,
            MulMode::Dpa4 => 12,
            MulMode::DpaFp4 => 9,
            _ => 48,
        }
    }
}

/// Split a 24-bit operand into its four 6-bit segments, least significant
/// first.
#[inline]
pub fn segments(word: u32) -> [u8; SEGMENT_COUNT] {
    debug_assert!(word < 1 << 24);
    let m = (1 << SEGMENT_BITS) - 1;
    [
        (word & m) as u8,
        ((word >> 6) & m) as u8,
        ((word >> 12) & m) as u8,
        ((word >> 18) & m) as u8,
    ]
}

/// One aligned term for the dot-product reduction tree.
///
/// `rel_shift` is the right-alignment distance in bits from the
/// maximum-exponent term (which carries `rel_shift = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DpaTerm {
    pub magnitude: u64,
    pub sign: bool,
    pub rel_shift: u32,
}

/// Multiply the segmented operands in the given mode.
///
/// All sixteen 6x6 segment products are formed once; the mode selects
/// which of them combine into each lane, with cross-lane partial sums
/// gated. Returns one exact product per lane: 48-bit for `Scalar24`,
/// up to 24-bit for `Simd2x12`/`Dpa2`, up to 12-bit for `Simd4x6`/`Dpa4`.
pub fn multiply(
    mode: MulMode,
    a_segs: [u8; SEGMENT_COUNT],
    b_segs: [u8; SEGMENT_COUNT],
) -> Result<Vec<u64>, MultiplierError> {
    if mode == MulMode::DpaFp4 {
        return Err(MultiplierError::InvalidSegmentation(
            "FP4 products come from the DP2 stage, not the array",
        ));
    }
    for s in a_segs.iter().chain(b_segs.iter()) {
        if u32::from(*s) >= 1 << SEGMENT_BITS {
            return Err(MultiplierError::InvalidSegmentation(
                "segment exceeds 6 bits",
            ));
        }
    }

    // Partial-product array: pp[i][j] = a_i * b_j, each up to 12 bits.
    let mut pp = [[0u64; SEGMENT_COUNT]; SEGMENT_COUNT];
    for (i, row) in pp.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = u64::from(a_segs[i]) * u64::from(b_segs[j]);
        }
    }

    let out = match mode {
        MulMode::Scalar24 => {
            let mut acc = 0u64;
            for (i, row) in pp.iter().enumerate() {
                for (j, p) in row.iter().enumerate() {
                    acc += p << (SEGMENT_BITS * (i + j) as u32);
                }
            }
            vec![acc]
        }
        MulMode::Simd2x12 | MulMode::Dpa2 => {
            let lane = |base: usize| {
                pp[base][base]
                    + ((pp[base][base + 1] + pp[base + 1][base]) << SEGMENT_BITS)
                    + (pp[base + 1][base + 1] << (2 * SEGMENT_BITS))
            };
            vec![lane(0), lane(2)]
        }
        MulMode::Simd4x6 | MulMode::Dpa4 => (0..SEGMENT_COUNT).map(|i| pp[i][i]).collect(),
        MulMode::DpaFp4 => unreachable!(),
    };
    Ok(out)
}

/// Pack two 12-bit SIMD operands (lane 0 in the low half) into the 24-bit
/// segmented operand word.
#[inline]
pub fn pack2x12(lane0: u32, lane1: u32) -> u32 {
    debug_assert!(lane0 < 1 << 12 && lane1 < 1 << 12);
    lane0 | (lane1 << 12)
}

/// Pack four 6-bit SIMD operands into the 24-bit segmented operand word.
#[inline]
pub fn pack4x6(lanes: [u32; 4]) -> u32 {
    debug_assert!(lanes.iter().all(|&l| l < 1 << SEGMENT_BITS));
    lanes[0] | (lanes[1] << 6) | (lanes[2] << 12) | (lanes[3] << 18)
}

/// Result of a dot-product reduction: the signed window sum, and whether
/// any alignment shift dropped bits below the window (folded sticky).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReduceOutput {
    pub sum: i128,
    pub sticky: bool,
}

/// Sum aligned, conditionally negated terms over a `window_bits`-wide
/// fixed-point window.
///
/// Each term's magnitude field is placed against the window top and
/// right-shifted by its `rel_shift`; bits shifted below the window fold
/// into the sticky. Negative terms with dropped bits are floored (window
/// value decremented) so the window+sticky pair brackets the exact sum.
/// Callers size the window so nothing is dropped in normal operation;
/// the window arithmetic itself must not overflow.
pub fn dpa_reduce(
    mode: MulMode,
    terms: &[DpaTerm],
    window_bits: u32,
) -> Result<ReduceOutput, MultiplierError> {
    let expected = match mode {
        MulMode::Dpa2 => 2,
        MulMode::Dpa4 | MulMode::DpaFp4 => 4,
        _ => {
            return Err(MultiplierError::InvalidSegmentation(
                "reduction tree engaged outside a DPA mode",
            ))
        }
    };
    if terms.len() != expected {
        return Err(MultiplierError::InvalidSegmentation(
            "term count does not match mode",
        ));
    }
    let field = mode.term_bits();
    assert!(
        window_bits >= field && window_bits <= 122,
        "window missized by caller"
    );

    let mut sum = 0i128;
    let mut sticky = false;
    for t in terms {
        assert!(
            t.magnitude < 1u64 << field,
            "magnitude exceeds the mode's term field"
        );
        let placed = (t.magnitude as u128) << (window_bits - field);
        let (kept, dropped) = if t.rel_shift == 0 {
            (placed, false)
        } else if t.rel_shift >= 128 {
            (0, placed != 0)
        } else {
            // One alignment shifter per term.
            let out = shifter::shift_cfg(&ShiftRequest::new(
                128,
                ShiftMode::Full,
                placed,
                &[t.rel_shift],
                ShiftDirection::Right,
            ))
            .expect("aligned window shift");
            (out.word, out.sticky[0])
        };
        sticky |= dropped;
        // Conditional negate unit; dropped bits of a negative term floor it.
        let signed = if t.sign {
            -(kept as i128) - i128::from(dropped)
        } else {
            kept as i128
        };
        sum = sum.checked_add(signed).expect("window overflow");
    }
    debug_assert!(
        sum.unsigned_abs() < 1u128 << (window_bits + 3),
        "window overflow"
    );
    Ok(ReduceOutput { sum, sticky })
}
