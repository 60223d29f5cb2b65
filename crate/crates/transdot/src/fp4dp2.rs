//! Dedicated FP4 two-term dot-product (DP2) pre-stage.
//!
//! E2M1's dynamic range is small enough that a pair product sum fits a
//! 9-bit sign-magnitude value on one fixed grid: every E2M1 value is a
//! multiple of 0.5, so every pair product is a multiple of 0.25, and the
//! largest product sum is 6.0 * 6.0 * 2 = 72 = 288 quarter-units < 2^9.
//! Eight FP4 input pairs therefore reduce to four 9-bit partials plus
//! signs, which the multiplier's reduction tree accumulates directly.

use crate::formats::{decode, FormatSpec, FpValue};
use crate::multiplier::DpaTerm;

/// Shared anchor: every DP2 magnitude lives on the grid whose MSB weight
/// is 2^6, one position above the largest single product (36 < 2^6).
pub const DP2_ANCHOR_EXP: i32 = 6;

/// Sign-magnitude partial sum of two FP4 products.
///
/// The value is `(-1)^sign * magnitude * 2^(exp - 8)`; with the fixed
/// anchor `exp = 6` the grid LSB is 2^-2, the sub-ULP position of the
/// smallest product (0.5 * 0.5).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dp2Result {
    pub sign: bool,
    pub magnitude: u16,
    pub exp: i32,
}

impl Dp2Result {
    /// The exact value in quarter units (grid 2^-2).
    #[inline]
    pub fn quarter_units(&self) -> i32 {
        let m = i32::from(self.magnitude);
        if self.sign {
            -m
        } else {
            m
        }
    }

    #[inline]
    pub fn to_term(self) -> DpaTerm {
        DpaTerm {
            magnitude: u64::from(self.magnitude),
            sign: self.sign,
            rel_shift: 0,
        }
    }
}

/// E2M1 value in half units (grid 2^-1): `sig * 2^exp` with the
/// significand already including the hidden bit.
#[inline]
fn half_units(v: &FpValue) -> i32 {
    debug_assert!(v.is_finite());
    let m = (v.sig as i32) << v.exp;
    if v.sign {
        -m
    } else {
        m
    }
}

/// Exact `a0*b0 + a1*b1` over four E2M1 encodings, in sign-magnitude form
/// on the shared grid. Exact zeros carry a positive sign; the downstream
/// accumulation absorbs the sign of zero.
pub fn dp2(a0: u8, b0: u8, a1: u8, b1: u8) -> Dp2Result {
    let fmt = FormatSpec::FP4;
    let dec = |bits: u8| decode(fmt, u32::from(bits));
    // A product of two half-unit values is the quarter-unit product.
    let p0 = half_units(&dec(a0)) * half_units(&dec(b0));
    let p1 = half_units(&dec(a1)) * half_units(&dec(b1));
    let q = p0 + p1;
    let magnitude = q.unsigned_abs() as u16;
    debug_assert!(magnitude < 1 << 9, "DP2 magnitude must fit 9 bits");
    Dp2Result {
        sign: q < 0,
        magnitude,
        exp: DP2_ANCHOR_EXP,
    }
}

/// Four DP2 partials over the pair groups (0,1), (2,3), (4,5), (6,7) of
/// eight operand pairs, ready for the multiplier's reduction tree.
pub fn dp8_partials(a: &[u8; 8], b: &[u8; 8]) -> [Dp2Result; 4] {
    [
        dp2(a[0], b[0], a[1], b[1]),
        dp2(a[2], b[2], a[3], b[3]),
        dp2(a[4], b[4], a[5], b[5]),
        dp2(a[6], b[6], a[7], b[7]),
    ]
}
