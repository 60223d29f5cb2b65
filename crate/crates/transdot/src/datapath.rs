//! TransDot execution engine: scalar FMA, packed-SIMD FMA, and
//! trans-precision dot-product accumulation.
//!
//! The supported mode matrix:
//!
//! | Format | Scalar/SIMD FMA | DPA    | Accumulate format |
//! |--------|-----------------|--------|-------------------|
//! | FP32   | 1-way           | 1-term | FP32              |
//! | FP16   | 2-way           | 2-term | FP32 / FP16       |
//! | FP8    | 4-way           | 4-term | FP32 / FP16       |
//! | FP4    | --              | 8-term | FP32 / FP16       |
//!
//! DPA computes `round(sum(a_i * b_i) + c)` with a single rounding of the
//! exact value: per-term products are exact array products, the product
//! sum is held exactly on a fixed-point window spanning the input format's
//! product-exponent range, and the accumulator is merged with max-anchor
//! alignment where only bits below the sticky position are folded. Every
//! result is therefore bit-identical to the exact-arithmetic oracle.
//!
//! Packed lanes fill operand words from the LSB (lane 0 at the low bits).

use crate::formats::{
    self, canonical_nan, decode, encode, ExceptionFlags, FormatName, FormatSpec, FpValue,
};
use crate::fp4dp2;
use crate::multiplier::{self, DpaTerm, MulMode};
use crate::shifter::{self, ShiftDirection, ShiftMode, ShiftRequest};
use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum DatapathError {
    #[error("unsupported mode: {0}")]
    UnsupportedMode(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    FmaScalar,
    FmaSimd,
    Dpa,
}

/// One TransDot operation over packed operand words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpRequest {
    pub kind: OpKind,
    pub fmt_in: FormatSpec,
    pub fmt_acc: FormatSpec,
    pub a_word: u32,
    pub b_word: u32,
    pub c_word: u32,
    pub terms: u32,
}

/// Latency/throughput annotation. Every supported mode runs in the
/// 4-cycle pipeline at one operation per cycle; dot-product modes engage
/// the multiplier's reconfigurable pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cycles {
    pub latency: u32,
    pub throughput: u32,
    pub dpa_stage: bool,
}

impl Cycles {
    fn new(dpa_stage: bool) -> Self {
        Self {
            latency: 4,
            throughput: 1,
            dpa_stage,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpResult {
    /// Packed result; unused high bits are zero.
    pub result_word: u32,
    /// One entry per SIMD lane; a single entry for scalar and DPA.
    pub flags: Vec<ExceptionFlags>,
    pub cycles: Cycles,
}

/// Exact fixed-point carrier inside the datapath:
/// `(-1)^sign * mag * 2^grid`.
#[derive(Debug, Clone, Copy)]
struct Wide {
    sign: bool,
    mag: u128,
    grid: i32,
}

impl Wide {
    fn msb_weight(&self) -> i32 {
        debug_assert!(self.mag != 0);
        self.grid + (127 - self.mag.leading_zeros()) as i32
    }
}

/// Internal product-sum accumulator: window value plus anchor bookkeeping.
/// The window width is chosen per mode so the product sum is exact and
/// the final accumulator merge loses information only below the sticky
/// position.
#[derive(Debug, Clone, Copy)]
pub struct InternalAccumulator {
    pub window: i128,
    pub sticky: bool,
    pub anchor_exp: i32,
}

/// Split a packed 32-bit operand word into its lanes, lane 0 first.
pub fn unpack_lanes(fmt: FormatSpec, word: u32) -> Vec<u32> {
    let k = fmt.lanes_per_word();
    (0..k)
        .map(|i| (word >> (i * fmt.total_bits)) & fmt.word_mask())
        .collect()
}

/// Pack lane encodings into a 32-bit word, lane 0 at the low bits.
pub fn pack_lanes(fmt: FormatSpec, lanes: &[u32]) -> u32 {
    let mut word = 0;
    for (i, &l) in lanes.iter().enumerate() {
        word |= (l & fmt.word_mask()) << (i as u32 * fmt.total_bits);
    }
    word
}

/// NaN / infinity / signed-zero resolution, shared by FMA and DPA.
///
/// The declared convention: invalid is raised iff some product is
/// `0 * inf` or the infinite addends conflict in sign; any NaN input (or
/// an invalid condition) yields the canonical quiet NaN; otherwise a
/// consistent infinity wins. A sum whose addends are all zeros keeps -0
/// only when every product and the accumulator are negative zeros.
fn resolve_specials(
    fmt_acc: FormatSpec,
    pairs: &[(FpValue, FpValue)],
    c: &FpValue,
) -> Option<(u32, ExceptionFlags)> {
    let mut saw_nan = c.is_nan();
    let mut saw_zero_inf = false;
    let mut inf_signs = [false, false]; // [positive seen, negative seen]
    for (a, b) in pairs {
        if a.is_nan() || b.is_nan() {
            // NaN products propagate; they are neither zeros nor infinities.
            saw_nan = true;
            continue;
        }
        let zero = a.is_zero() || b.is_zero();
        let inf = a.is_inf() || b.is_inf();
        match (zero, inf) {
            (true, true) => saw_zero_inf = true,
            (false, true) => inf_signs[(a.sign ^ b.sign) as usize] = true,
            _ => {}
        }
    }
    if c.is_inf() {
        inf_signs[c.sign as usize] = true;
    }

    if saw_zero_inf || (inf_signs[0] && inf_signs[1]) {
        return Some((canonical_nan(fmt_acc).unwrap(), ExceptionFlags::INVALID));
    }
    if saw_nan {
        return Some((canonical_nan(fmt_acc).unwrap(), ExceptionFlags::NONE));
    }
    if inf_signs[0] || inf_signs[1] {
        let sign = if inf_signs[1] { fmt_acc.sign_bit() } else { 0 };
        return Some((sign | fmt_acc.inf_bits(), ExceptionFlags::NONE));
    }
    if pairs.iter().all(|(a, b)| a.is_zero() || b.is_zero()) && c.is_zero() {
        let all_neg = c.sign && pairs.iter().all(|(a, b)| a.sign ^ b.sign);
        let sign = if all_neg { fmt_acc.sign_bit() } else { 0 };
        return Some((sign, ExceptionFlags::NONE));
    }
    None
}

/// Exact significand product through the multi-mode multiplier, in the
/// array mode matching the input format.
fn significand_product(fmt_in: FormatSpec, a_sig: u32, b_sig: u32) -> u64 {
    let (mode, a_op, b_op) = match fmt_in.name {
        FormatName::Fp32 => (MulMode::Scalar24, a_sig, b_sig),
        FormatName::Fp16 => (
            MulMode::Simd2x12,
            multiplier::pack2x12(a_sig, 0),
            multiplier::pack2x12(b_sig, 0),
        ),
        FormatName::Fp8 | FormatName::Fp4 => (
            MulMode::Simd4x6,
            multiplier::pack4x6([a_sig, 0, 0, 0]),
            multiplier::pack4x6([b_sig, 0, 0, 0]),
        ),
    };
    multiplier::multiply(mode, multiplier::segments(a_op), multiplier::segments(b_op))
        .expect("segmented significand product")[0]
}

/// Right shift with sticky through the 128-bit alignment shifter.
fn align_right(mag: u128, amount: u32) -> (u128, bool) {
    if amount == 0 {
        (mag, false)
    } else if amount >= 128 {
        (0, mag != 0)
    } else {
        let out = shifter::shift_cfg(&ShiftRequest::new(
            128,
            ShiftMode::Full,
            mag,
            &[amount],
            ShiftDirection::Right,
        ))
        .expect("alignment shift");
        (out.word, out.sticky[0])
    }
}

/// Exact sum of two nonzero fixed-point values over a clamped window.
///
/// The window bottom is the lower of the two grids, clamped to 124 bits
/// below the higher MSB; only the smaller operand can lose bits, which
/// fold into the sticky (negative contributions are floored so the
/// window+sticky pair brackets the exact sum from below).
fn exact_window_add(x: &Wide, y: &Wide) -> (bool, u128, i32, bool) {
    let top = x.msb_weight().max(y.msb_weight());
    let bottom = x.grid.min(y.grid).max(top - 124);

    let mut sticky = false;
    let mut dropped_negative = false;
    let mut place = |op: &Wide| -> i128 {
        let (mag, dropped) = if op.grid >= bottom {
            let shift = (op.grid - bottom) as u32;
            debug_assert!(128 - op.mag.leading_zeros() + shift <= 126);
            (op.mag << shift, false)
        } else {
            align_right(op.mag, (bottom - op.grid) as u32)
        };
        if dropped {
            sticky = true;
            dropped_negative = op.sign;
        }
        if op.sign {
            -(mag as i128)
        } else {
            mag as i128
        }
    };
    let w = place(x) + place(y);

    let (mag, sign) = if !sticky {
        (w.unsigned_abs(), w < 0)
    } else if dropped_negative {
        // true value = w - eps with 0 < eps < 1 window LSB
        if w > 0 {
            ((w - 1) as u128, false)
        } else {
            (w.unsigned_abs(), true)
        }
    } else {
        // true value = w + eps
        if w >= 0 {
            (w as u128, false)
        } else {
            ((-(w + 1)) as u128, true)
        }
    };
    (sign, mag, bottom, sticky)
}

/// Normalize a window value and hand it to the final rounding stage.
fn normalize_round(
    fmt_acc: FormatSpec,
    sign: bool,
    mag: u128,
    grid: i32,
    sticky: bool,
) -> (u32, ExceptionFlags) {
    if mag == 0 {
        debug_assert!(!sticky, "sticky residue without window bits");
        return (0, ExceptionFlags::NONE);
    }
    let p = fmt_acc.precision();
    let msb = 127 - mag.leading_zeros();
    let exp = grid + msb as i32;
    // Normalization left shift brings the MSB to the top of the window,
    // then the candidate-plus-guard/round field is the high p+2 bits.
    let normalized = if msb < 127 {
        shifter::shift_cfg(&ShiftRequest::new(
            128,
            ShiftMode::Full,
            mag,
            &[127 - msb],
            ShiftDirection::Left,
        ))
        .expect("normalization shift")
        .word
    } else {
        mag
    };
    let top = normalized >> (126 - p);
    let rest = normalized & ((1u128 << (126 - p)) - 1) != 0;
    let sig_ext = (top << 1) | u128::from(rest || sticky);
    formats::round_pack(fmt_acc, sign, exp, sig_ext)
}

/// Merge the exact product sum with the accumulator and round once.
fn merge_and_round(fmt_acc: FormatSpec, x: Option<Wide>, c: &FpValue) -> (u32, ExceptionFlags) {
    let c_wide = (!c.is_zero()).then(|| Wide {
        sign: c.sign,
        mag: u128::from(c.sig),
        grid: c.exp - (fmt_acc.precision() as i32 - 1),
    });
    match (x, c_wide) {
        (None, None) => (0, ExceptionFlags::NONE),
        (None, Some(_)) => (encode(fmt_acc, c), ExceptionFlags::NONE),
        (Some(x), None) => normalize_round(fmt_acc, x.sign, x.mag, x.grid, false),
        (Some(x), Some(cw)) => {
            let (sign, mag, grid, sticky) = exact_window_add(&x, &cw);
            normalize_round(fmt_acc, sign, mag, grid, sticky)
        }
    }
}

/// Scalar fused multiply-add core, trans-precision capable: operands in
/// `fmt_in`, accumulator and result in `fmt_acc`.
fn fma_core(
    fmt_in: FormatSpec,
    fmt_acc: FormatSpec,
    a_bits: u32,
    b_bits: u32,
    c_bits: u32,
) -> (u32, ExceptionFlags) {
    let a = decode(fmt_in, a_bits);
    let b = decode(fmt_in, b_bits);
    let c = decode(fmt_acc, c_bits);
    if let Some(out) = resolve_specials(fmt_acc, &[(a, b)], &c) {
        return out;
    }
    let p_in = fmt_in.precision() as i32;
    let prod = significand_product(fmt_in, a.sig, b.sig);
    let x = (prod != 0).then_some(Wide {
        sign: a.sign ^ b.sign,
        mag: u128::from(prod),
        grid: a.exp + b.exp - 2 * (p_in - 1),
    });
    merge_and_round(fmt_acc, x, &c)
}

/// Scalar FMA in one format (Table row: 1-way).
pub fn fma(
    fmt_in: FormatSpec,
    fmt_acc: FormatSpec,
    a_bits: u32,
    b_bits: u32,
    c_bits: u32,
) -> Result<(u32, ExceptionFlags), DatapathError> {
    if fmt_in.name == FormatName::Fp4 {
        return Err(DatapathError::UnsupportedMode(
            "FP4 is exposed through DPA only",
        ));
    }
    if fmt_acc != fmt_in {
        return Err(DatapathError::UnsupportedMode(
            "scalar FMA accumulates in the input format; use DPA for trans-precision",
        ));
    }
    Ok(fma_core(fmt_in, fmt_acc, a_bits, b_bits, c_bits))
}

/// Packed-SIMD FMA: independent lanes of `fmt_in` over the 32-bit words.
pub fn simd_fma(
    fmt_in: FormatSpec,
    a_word: u32,
    b_word: u32,
    c_word: u32,
) -> Result<OpResult, DatapathError> {
    if !matches!(fmt_in.name, FormatName::Fp16 | FormatName::Fp8) {
        return Err(DatapathError::UnsupportedMode(
            "SIMD FMA supports FP16 (2-way) and FP8 (4-way)",
        ));
    }
    let a = unpack_lanes(fmt_in, a_word);
    let b = unpack_lanes(fmt_in, b_word);
    let c = unpack_lanes(fmt_in, c_word);
    let mut lanes = Vec::with_capacity(a.len());
    let mut flags = Vec::with_capacity(a.len());
    for i in 0..a.len() {
        let (bits, fl) = fma_core(fmt_in, fmt_in, a[i], b[i], c[i]);
        lanes.push(bits);
        flags.push(fl);
    }
    Ok(OpResult {
        result_word: pack_lanes(fmt_in, &lanes),
        flags,
        cycles: Cycles::new(false),
    })
}

fn legal_dpa(fmt_in: FormatSpec, fmt_acc: FormatSpec) -> bool {
    match fmt_in.name {
        FormatName::Fp32 => fmt_acc == FormatSpec::FP32,
        _ => fmt_acc == FormatSpec::FP32 || fmt_acc == FormatSpec::FP16,
    }
}

/// Fixed-point window width for the product sum of a DPA mode: wide
/// enough to hold the full product-exponent range of the input format
/// exactly.
fn product_window_bits(fmt_in: FormatSpec, mode: MulMode) -> u32 {
    let span = 2 * (fmt_in.emax() - fmt_in.emin()) as u32;
    mode.term_bits() + span
}

/// Trans-precision dot-product accumulation:
/// `round(sum(a_i * b_i) + c)` with a single rounding of the exact value.
pub fn dpa(
    fmt_in: FormatSpec,
    fmt_acc: FormatSpec,
    a_word: u32,
    b_word: u32,
    c_bits: u32,
) -> Result<OpResult, DatapathError> {
    if !legal_dpa(fmt_in, fmt_acc) {
        return Err(DatapathError::UnsupportedMode(
            "illegal DPA format combination",
        ));
    }
    if fmt_in.name == FormatName::Fp32 {
        // 1-term DPA is the scalar FMA datapath.
        let (bits, fl) = fma_core(fmt_in, fmt_acc, a_word, b_word, c_bits);
        return Ok(OpResult {
            result_word: bits,
            flags: vec![fl],
            cycles: Cycles::new(false),
        });
    }

    let a = unpack_lanes(fmt_in, a_word);
    let b = unpack_lanes(fmt_in, b_word);
    let pairs: Vec<(FpValue, FpValue)> = a
        .iter()
        .zip(&b)
        .map(|(&x, &y)| (decode(fmt_in, x), decode(fmt_in, y)))
        .collect();
    let c = decode(fmt_acc, c_bits);
    if let Some((bits, fl)) = resolve_specials(fmt_acc, &pairs, &c) {
        return Ok(OpResult {
            result_word: bits,
            flags: vec![fl],
            cycles: Cycles::new(true),
        });
    }

    let acc = match fmt_in.name {
        FormatName::Fp16 | FormatName::Fp8 => {
            let mode = if fmt_in.name == FormatName::Fp16 {
                MulMode::Dpa2
            } else {
                MulMode::Dpa4
            };
            // All lane products in one pass through the array.
            let (a_op, b_op) = if mode == MulMode::Dpa2 {
                (
                    multiplier::pack2x12(pairs[0].0.sig, pairs[1].0.sig),
                    multiplier::pack2x12(pairs[0].1.sig, pairs[1].1.sig),
                )
            } else {
                (
                    multiplier::pack4x6([
                        pairs[0].0.sig,
                        pairs[1].0.sig,
                        pairs[2].0.sig,
                        pairs[3].0.sig,
                    ]),
                    multiplier::pack4x6([
                        pairs[0].1.sig,
                        pairs[1].1.sig,
                        pairs[2].1.sig,
                        pairs[3].1.sig,
                    ]),
                )
            };
            let prods =
                multiplier::multiply(mode, multiplier::segments(a_op), multiplier::segments(b_op))
                    .expect("lane products");

            let exps: Vec<i32> = pairs.iter().map(|(x, y)| x.exp + y.exp).collect();
            let anchor = *exps.iter().max().unwrap();
            let terms: Vec<DpaTerm> = prods
                .iter()
                .zip(&exps)
                .zip(&pairs)
                .map(|((&magnitude, &ep), (x, y))| DpaTerm {
                    magnitude,
                    sign: x.sign ^ y.sign,
                    rel_shift: (anchor - ep) as u32,
                })
                .collect();
            let window = product_window_bits(fmt_in, mode);
            let red = multiplier::dpa_reduce(mode, &terms, window).expect("product reduction");
            assert!(!red.sticky, "product window must hold the sum exactly");
            let p_in = fmt_in.precision() as i32;
            InternalAccumulator {
                window: red.sum,
                sticky: false,
                // Window bit 0 weight: anchored products, field-aligned.
                anchor_exp: anchor + mode.term_bits() as i32 - 2 * (p_in - 1) - window as i32,
            }
        }
        FormatName::Fp4 => {
            let nib = |w: u32, i: usize| ((w >> (4 * i)) & 0xF) as u8;
            let an: [u8; 8] = core::array::from_fn(|i| nib(a_word, i));
            let bn: [u8; 8] = core::array::from_fn(|i| nib(b_word, i));
            let partials = fp4dp2::dp8_partials(&an, &bn);
            let terms: Vec<DpaTerm> = partials.iter().map(|r| r.to_term()).collect();
            let red = multiplier::dpa_reduce(MulMode::DpaFp4, &terms, 9).expect("DP2 reduction");
            assert!(!red.sticky);
            // Shared DP2 grid: quarter units.
            InternalAccumulator {
                window: red.sum,
                sticky: false,
                anchor_exp: -2,
            }
        }
        _ => unreachable!(),
    };

    let x = (acc.window != 0).then_some(Wide {
        sign: acc.window < 0,
        mag: acc.window.unsigned_abs(),
        grid: acc.anchor_exp,
    });
    let (bits, fl) = merge_and_round(fmt_acc, x, &c);
    Ok(OpResult {
        result_word: bits,
        flags: vec![fl],
        cycles: Cycles::new(true),
    })
}

/// Comparison baseline: a chained scalar trans-precision FMA loop,
/// `r <- round(a_i * b_i + r)`, one rounding per term. Flags are the OR
/// over the chain. With one term this is identical to `fma`.
pub fn seq_dpa_reference(
    fmt_in: FormatSpec,
    fmt_acc: FormatSpec,
    a_word: u32,
    b_word: u32,
    c_bits: u32,
) -> Result<OpResult, DatapathError> {
    if !legal_dpa(fmt_in, fmt_acc) {
        return Err(DatapathError::UnsupportedMode(
            "illegal DPA format combination",
        ));
    }
    let (a, b) = if fmt_in.name == FormatName::Fp32 {
        (vec![a_word], vec![b_word])
    } else {
        (unpack_lanes(fmt_in, a_word), unpack_lanes(fmt_in, b_word))
    };
    let mut r = c_bits;
    let mut flags = ExceptionFlags::NONE;
    for i in 0..a.len() {
        let (bits, fl) = fma_core(fmt_in, fmt_acc, a[i], b[i], r);
        r = bits;
        flags = flags.merge(fl);
    }
    Ok(OpResult {
        result_word: r,
        flags: vec![flags],
        cycles: Cycles::new(false),
    })
}

/// Validate and run one request.
pub fn execute(req: &OpRequest) -> Result<OpResult, DatapathError> {
    match req.kind {
        OpKind::FmaScalar => {
            if req.terms != 1 {
                return Err(DatapathError::UnsupportedMode("scalar FMA is single-term"));
            }
            let (bits, fl) = fma(req.fmt_in, req.fmt_acc, req.a_word, req.b_word, req.c_word)?;
            Ok(OpResult {
                result_word: bits,
                flags: vec![fl],
                cycles: Cycles::new(false),
            })
        }
        OpKind::FmaSimd => {
            if req.fmt_acc != req.fmt_in {
                return Err(DatapathError::UnsupportedMode(
                    "SIMD FMA accumulates in the input format",
                ));
            }
            if req.terms != req.fmt_in.lanes_per_word() {
                return Err(DatapathError::UnsupportedMode(
                    "SIMD lane count fixed by the format",
                ));
            }
            simd_fma(req.fmt_in, req.a_word, req.b_word, req.c_word)
        }
        OpKind::Dpa => {
            let expect = match req.fmt_in.name {
                FormatName::Fp32 => 1,
                FormatName::Fp16 => 2,
                FormatName::Fp8 => 4,
                FormatName::Fp4 => 8,
            };
            if req.terms != expect {
                return Err(DatapathError::UnsupportedMode(
                    "DPA term count fixed by the format",
                ));
            }
            dpa(req.fmt_in, req.fmt_acc, req.a_word, req.b_word, req.c_word)
        }
    }
}
