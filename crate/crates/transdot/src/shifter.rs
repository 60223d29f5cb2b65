//! Reconfigurable barrel shifter model.
//!
//! One `n`-bit shifter serves full-width, two half-width, and four
//! quarter-width operations. Each subword shifts independently by its own
//! amount; no bit ever crosses a subword boundary, and the bits a subword
//! shifts out are collected into a per-subword sticky. The real datapath
//! instantiates non-power-of-two widths (100-bit alignment, 77-bit
//! normalization); this model zero-pads those to the next power of two and
//! masks, while the cost formulas are evaluated at the stated widths.

use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum ShiftError {
    #[error("width {0} is not a supported power of two")]
    InvalidWidth(u32),
    #[error("expected {expected} shift amounts, got {got}")]
    WrongAmountCount { expected: usize, got: usize },
    #[error("shift amount {amount} out of range for {subword}-bit subword")]
    InvalidShiftAmount { amount: u32, subword: u32 },
}

/// Partition mode. The hardware encoding is `mode[1:0]`: full = `2'b0x`,
/// half = `2'b10`, quarter = `2'b11`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShiftMode {
    Full,
    Half,
    Quarter,
}

impl ShiftMode {
    #[inline]
    pub const fn subwords(self) -> usize {
        match self {
            ShiftMode::Full => 1,
            ShiftMode::Half => 2,
            ShiftMode::Quarter => 4,
        }
    }

    /// `mode[1:0]` control encoding.
    #[inline]
    pub const fn encoding(self) -> u8 {
        match self {
            ShiftMode::Full => 0b00,
            ShiftMode::Half => 0b10,
            ShiftMode::Quarter => 0b11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftDirection {
    Left,
    Right,
}

/// One shift operation: `width` is the model width `n` (a power of two),
/// `amounts[i]` drives subword `i`, with subword 0 at the least
/// significant bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftRequest {
    pub width: u32,
    pub mode: ShiftMode,
    pub data: u128,
    pub amounts: Vec<u32>,
    pub direction: ShiftDirection,
}

impl ShiftRequest {
    pub fn new(
        width: u32,
        mode: ShiftMode,
        data: u128,
        amounts: &[u32],
        direction: ShiftDirection,
    ) -> Self {
        Self {
            width,
            mode,
            data,
            amounts: amounts.to_vec(),
            direction,
        }
    }

    fn validate(&self) -> Result<(u32, usize), ShiftError> {
        if !self.width.is_power_of_two() || self.width < 4 || self.width > 128 {
            return Err(ShiftError::InvalidWidth(self.width));
        }
        let k = self.mode.subwords();
        if self.amounts.len() != k {
            return Err(ShiftError::WrongAmountCount {
                expected: k,
                got: self.amounts.len(),
            });
        }
        let sw = self.width / k as u32;
        for &a in &self.amounts {
            if a >= sw {
                return Err(ShiftError::InvalidShiftAmount {
                    amount: a,
                    subword: sw,
                });
            }
        }
        Ok((sw, k))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftOutput {
    pub word: u128,
    /// `sticky[i]` is the OR of every bit subword `i` shifted out.
    pub sticky: Vec<bool>,
}

#[inline]
fn sub_mask(sw: u32) -> u128 {
    if sw == 128 {
        u128::MAX
    } else {
        (1u128 << sw) - 1
    }
}

/// Functional model: each subword is logically shifted by its amount,
/// blocked at the subword boundary, with shifted-out bits collected as
/// sticky. In full mode this is bit-identical to a plain logical shift.
pub fn shift_cfg(req: &ShiftRequest) -> Result<ShiftOutput, ShiftError> {
    let (sw, k) = req.validate()?;
    let mask = sub_mask(sw);
    let mut word = 0u128;
    let mut sticky = Vec::with_capacity(k);
    for i in 0..k {
        let w = (req.data >> (i as u32 * sw)) & mask;
        let a = req.amounts[i];
        let (out, dropped) = match req.direction {
            ShiftDirection::Right => {
                let dropped = if a == 0 { 0 } else { w & ((1u128 << a) - 1) };
                (w >> a, dropped)
            }
            ShiftDirection::Left => {
                let dropped = if a == 0 { 0 } else { w >> (sw - a) };
                ((w << a) & mask, dropped)
            }
        };
        word |= out << (i as u32 * sw);
        sticky.push(dropped != 0);
    }
    Ok(ShiftOutput { word, sticky })
}

/// Structural model: the `log2(n)` mux stages of the barrel shifter.
///
/// Stage `s` shifts by `2^s` wherever the subword's amount has bit `s`
/// set, blocking bits at subword boundaries. For narrower partitions the
/// final `log2(n) - log2(subword)` stages are bypassed (shift amounts
/// never reach them). The returned trace holds the word after each stage;
/// the last entry equals the [`shift_cfg`] result.
pub fn stage_trace(req: &ShiftRequest) -> Result<Vec<u128>, ShiftError> {
    let (sw, k) = req.validate()?;
    let mask = sub_mask(sw);
    let stages = req.width.trailing_zeros();
    let mut word = req.data & sub_mask(req.width);
    let mut trace = Vec::with_capacity(stages as usize);
    for s in 0..stages {
        let step = 1u32 << s;
        if step < sw {
            let mut next = 0u128;
            for i in 0..k {
                let w = (word >> (i as u32 * sw)) & mask;
                let out = if req.amounts[i] & step != 0 {
                    match req.direction {
                        ShiftDirection::Right => w >> step,
                        ShiftDirection::Left => (w << step) & mask,
                    }
                } else {
                    w
                };
                next |= out << (i as u32 * sw);
            }
            word = next;
        }
        // else: bypass stage, pass-through
        trace.push(word);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn req(
        width: u32,
        mode: ShiftMode,
        data: u128,
        amounts: &[u32],
        direction: ShiftDirection,
    ) -> ShiftRequest {
        ShiftRequest::new(width, mode, data, amounts, direction)
    }

    #[test]
    fn full_mode_plain_shift() {
        let out = shift_cfg(&req(
            8,
            ShiftMode::Full,
            0b1011_0011,
            &[3],
            ShiftDirection::Right,
        ))
        .unwrap();
        assert_eq!(out.word, 0b0001_0110);
        assert_eq!(out.sticky, vec![true]);
    }

    #[test]
    fn half_mode_blocks_boundary() {
        // 0xFF split into nibbles: hi >> 1 = 0b0111, lo >> 2 = 0b0011.
        let out = shift_cfg(&req(
            8,
            ShiftMode::Half,
            0xFF,
            &[2, 1],
            ShiftDirection::Right,
        ))
        .unwrap();
        assert_eq!(out.word, 0x73);
        assert_eq!(out.sticky, vec![true, true]);
    }

    #[test]
    fn quarter_matches_independent_shifters() {
        let mut x = 0x9E37_79B9_7F4A_7C15u64;
        for a0 in 0..16u32 {
            for case in 0..64u32 {
                x = x
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                let data = x as u128;
                let amounts = [a0, (case * 7 + 1) % 16, (case * 3) % 16, case % 16];
                let got = shift_cfg(&req(
                    64,
                    ShiftMode::Quarter,
                    data,
                    &amounts,
                    ShiftDirection::Right,
                ))
                .unwrap();
                let mut want = 0u128;
                for i in 0..4 {
                    let w = (data >> (i * 16)) & 0xFFFF;
                    want |= (w >> amounts[i as usize]) << (i * 16);
                }
                assert_eq!(got.word, want);
            }
        }
    }

    #[test]
    fn amount_out_of_range() {
        let err = shift_cfg(&req(
            8,
            ShiftMode::Quarter,
            0,
            &[0, 0, 2, 0],
            ShiftDirection::Right,
        ));
        assert_eq!(
            err,
            Err(ShiftError::InvalidShiftAmount {
                amount: 2,
                subword: 2
            })
        );
        let err = shift_cfg(&req(8, ShiftMode::Half, 0, &[1], ShiftDirection::Right));
        assert_eq!(
            err,
            Err(ShiftError::WrongAmountCount {
                expected: 2,
                got: 1
            })
        );
        let err = shift_cfg(&req(100, ShiftMode::Full, 0, &[1], ShiftDirection::Right));
        assert_eq!(err, Err(ShiftError::InvalidWidth(100)));
    }

    #[test]
    fn trace_identity_on_zero_amounts() {
        let r = req(8, ShiftMode::Full, 0xA5, &[0], ShiftDirection::Right);
        let trace = stage_trace(&r).unwrap();
        assert_eq!(trace, vec![0xA5, 0xA5, 0xA5]);
    }

    #[test]
    fn trace_quarter_final_stages_bypassed() {
        // 8-bit quarter mode: 2-bit subwords, so only stage 0 may act.
        let r = req(
            8,
            ShiftMode::Quarter,
            0b10_11_01_11,
            &[1, 1, 1, 1],
            ShiftDirection::Right,
        );
        let trace = stage_trace(&r).unwrap();
        let after = 0b01_01_00_01u128;
        assert_eq!(trace, vec![after, after, after]);
        assert_eq!(shift_cfg(&r).unwrap().word, after);
    }

    #[test]
    fn trace_final_matches_functional_bulk() {
        let mut x = 0x0123_4567_89AB_CDEFu64;
        let mut next = || {
            x = x
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            x
        };
        for _ in 0..100_000 {
            let r = next();
            let width = [64u32, 128][(r & 1) as usize];
            let mode =
                [ShiftMode::Full, ShiftMode::Half, ShiftMode::Quarter][(r >> 1) as usize % 3];
            let direction = [ShiftDirection::Left, ShiftDirection::Right][(r >> 3) as usize & 1];
            let sw = width / mode.subwords() as u32;
            let amounts: Vec<u32> = (0..mode.subwords())
                .map(|i| (r >> (8 + 8 * i)) as u32 % sw)
                .collect();
            let data = (u128::from(next()) << 64 | u128::from(next()))
                & if width == 128 {
                    u128::MAX
                } else {
                    (1 << width) - 1
                };
            let req = ShiftRequest::new(width, mode, data, &amounts, direction);
            assert_eq!(
                *stage_trace(&req).unwrap().last().unwrap(),
                shift_cfg(&req).unwrap().word
            );
        }
    }

    #[test]
    fn trace_half_last_stage_bypassed() {
        let r = req(
            64,
            ShiftMode::Half,
            0xDEAD_BEEF_0BAD_F00D,
            &[9, 17],
            ShiftDirection::Right,
        );
        let trace = stage_trace(&r).unwrap();
        assert_eq!(trace.len(), 6);
        // Last stage (shift by 32) is outside the 32-bit subword range.
        assert_eq!(trace[5], trace[4]);
        assert_eq!(*trace.last().unwrap(), shift_cfg(&r).unwrap().word);
    }

    proptest! {
        #[test]
        fn zero_shift_is_identity(data: u128, mode_sel in 0..3usize, dir in 0..2usize) {
            let mode = [ShiftMode::Full, ShiftMode::Half, ShiftMode::Quarter][mode_sel];
            let direction = [ShiftDirection::Left, ShiftDirection::Right][dir];
            let amounts = vec![0; mode.subwords()];
            let out = shift_cfg(&req(128, mode, data, &amounts, direction)).unwrap();
            prop_assert_eq!(out.word, data);
            prop_assert!(out.sticky.iter().all(|&s| !s));
        }

        #[test]
        fn sticky_iff_lossy_right_shift(data: u128, amounts in proptest::array::uniform4(0u32..32)) {
            let out = shift_cfg(&req(128, ShiftMode::Quarter, data, &amounts, ShiftDirection::Right)).unwrap();
            for (i, &a) in amounts.iter().enumerate() {
                let w = (data >> (i * 32)) & 0xFFFF_FFFF;
                let r = (out.word >> (i * 32)) & 0xFFFF_FFFF;
                // Exact reconstruction from the shifted word iff sticky clear.
                prop_assert_eq!(r << a == w, !out.sticky[i]);
            }
        }

        #[test]
        fn trace_final_equals_functional(data: u128, mode_sel in 0..3usize,
                                         raw in proptest::array::uniform4(0u32..u32::MAX),
                                         dir in 0..2usize,
                                         wsel in 0..2usize) {
            let width = [64u32, 128][wsel];
            let mode = [ShiftMode::Full, ShiftMode::Half, ShiftMode::Quarter][mode_sel];
            let direction = [ShiftDirection::Left, ShiftDirection::Right][dir];
            let sw = width / mode.subwords() as u32;
            let amounts: Vec<u32> = raw[..mode.subwords()].iter().map(|&a| a % sw).collect();
            let data = data & if width == 128 { u128::MAX } else { (1 << width) - 1 };
            let r = req(width, mode, data, &amounts, direction);
            let trace = stage_trace(&r).unwrap();
            prop_assert_eq!(trace.len(), width.trailing_zeros() as usize);
            prop_assert_eq!(*trace.last().unwrap(), shift_cfg(&r).unwrap().word);
        }
    }
}
