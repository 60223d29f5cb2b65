//! Floating-point format descriptions, encode/decode, and final rounding.
//!
//! Four formats are supported: FP32 (E8M23), FP16 (E5M10), FP8 (E4M3) and
//! FP4 (E2M1). FP32 and FP16 always follow IEEE 754 semantics. The AI
//! formats carry a special-value profile: the default FP8 profile is the
//! OFP8 convention (no infinities, `S.1111.111` is the only NaN pattern,
//! max finite ±448) and FP4 E2M1 is finite-only (all 16 encodings are
//! numbers, max ±6.0). An IEEE-style FP8 profile remains selectable.

use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum FormatError {
    #[error("format {0:?} has no NaN encoding")]
    UnsupportedProfile(FormatName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormatName {
    Fp32,
    Fp16,
    Fp8,
    Fp4,
}

/// Special-value convention for a format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Profile {
    /// Reserved top exponent encodes infinities and NaNs.
    Ieee,
    /// Top exponent is an ordinary value range. FP8 keeps a single NaN
    /// pattern per sign (`S.1111.111`); FP4 has no NaN at all.
    FiniteExtended,
}

/// Static description of one floating-point format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FormatSpec {
    pub name: FormatName,
    pub total_bits: u32,
    pub exp_bits: u32,
    pub man_bits: u32,
    pub bias: i32,
    pub profile: Profile,
}

impl FormatSpec {
    pub const FP32: Self = Self {
        name: FormatName::Fp32,
        total_bits: 32,
        exp_bits: 8,
        man_bits: 23,
        bias: 127,
        profile: Profile::Ieee,
    };

    pub const FP16: Self = Self {
        name: FormatName::Fp16,
        total_bits: 16,
        exp_bits: 5,
        man_bits: 10,
        bias: 15,
        profile: Profile::Ieee,
    };

    /// FP8 E4M3 with the OFP8 special-value convention (default).
    pub const FP8: Self = Self {
        name: FormatName::Fp8,
        total_bits: 8,
        exp_bits: 4,
        man_bits: 3,
        bias: 7,
        profile: Profile::FiniteExtended,
    };

    /// FP8 E4M3 with IEEE-style reserved exponent (selectable per run).
    pub const FP8_IEEE: Self = Self {
        profile: Profile::Ieee,
        ..Self::FP8
    };

    /// FP4 E2M1, finite-only: no infinities and no NaN.
    pub const FP4: Self = Self {
        name: FormatName::Fp4,
        total_bits: 4,
        exp_bits: 2,
        man_bits: 1,
        bias: 1,
        profile: Profile::FiniteExtended,
    };

    /// Precision in bits, hidden bit included.
    #[inline]
    pub const fn precision(&self) -> u32 {
        self.man_bits + 1
    }

    /// Exponent of the minimum normal value.
    #[inline]
    pub const fn emin(&self) -> i32 {
        1 - self.bias
    }

    /// Largest finite exponent. Finite-extended profiles reclaim the top
    /// exponent code as an ordinary value range.
    #[inline]
    pub const fn emax(&self) -> i32 {
        match self.profile {
            Profile::Ieee => (1 << self.exp_bits) - 2 - self.bias,
            Profile::FiniteExtended => (1 << self.exp_bits) - 1 - self.bias,
        }
    }

    #[inline]
    pub const fn has_inf(&self) -> bool {
        matches!(self.profile, Profile::Ieee)
    }

    #[inline]
    pub const fn has_nan(&self) -> bool {
        matches!(self.profile, Profile::Ieee) || matches!(self.name, FormatName::Fp8)
    }

    /// Largest representable significand at `emax` (hidden bit included).
    #[inline]
    pub const fn max_finite_sig(&self) -> u32 {
        let full = (1u32 << self.precision()) - 1;
        // OFP8 spends the all-ones pattern at the top exponent on NaN.
        if matches!(self.profile, Profile::FiniteExtended) && self.has_nan() {
            full - 1
        } else {
            full
        }
    }

    #[inline]
    pub const fn word_mask(&self) -> u32 {
        if self.total_bits == 32 {
            u32::MAX
        } else {
            (1 << self.total_bits) - 1
        }
    }

    #[inline]
    pub const fn man_mask(&self) -> u32 {
        (1 << self.man_bits) - 1
    }

    /// Number of lanes of this format in a 32-bit packed word.
    #[inline]
    pub const fn lanes_per_word(&self) -> u32 {
        32 / self.total_bits
    }

    #[inline]
    pub const fn hex_digits(&self) -> usize {
        (self.total_bits as usize).div_ceil(4)
    }

    pub const fn min_subnormal_bits(&self) -> u32 {
        1
    }

    pub const fn max_subnormal_bits(&self) -> u32 {
        self.man_mask()
    }

    pub const fn min_normal_bits(&self) -> u32 {
        1 << self.man_bits
    }

    pub const fn max_finite_bits(&self) -> u32 {
        let biased = (self.emax() + self.bias) as u32;
        (biased << self.man_bits) | (self.max_finite_sig() & self.man_mask())
    }

    pub const fn one_bits(&self) -> u32 {
        (self.bias as u32) << self.man_bits
    }

    pub const fn inf_bits(&self) -> u32 {
        ((1 << self.exp_bits) - 1) << self.man_bits
    }

    #[inline]
    pub const fn sign_bit(&self) -> u32 {
        1 << (self.total_bits - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FpClass {
    Zero,
    Subnormal,
    Normal,
    Inf,
    Nan,
}

/// A decoded number: classification plus sign / unbiased exponent /
/// integer significand with the hidden bit explicit.
///
/// For finite values, `value = (-1)^sign * sig * 2^(exp - (p-1))`.
/// Subnormals and zeros carry `exp = emin` so that relation holds
/// uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FpValue {
    pub class: FpClass,
    pub sign: bool,
    pub exp: i32,
    pub sig: u32,
}

impl FpValue {
    #[inline]
    pub fn is_nan(&self) -> bool {
        self.class == FpClass::Nan
    }

    #[inline]
    pub fn is_inf(&self) -> bool {
        self.class == FpClass::Inf
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.class == FpClass::Zero
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        matches!(
            self.class,
            FpClass::Zero | FpClass::Subnormal | FpClass::Normal
        )
    }
}

/// IEEE 754 status flags raised by an operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExceptionFlags {
    pub invalid: bool,
    pub overflow: bool,
    pub underflow: bool,
    pub inexact: bool,
}

impl ExceptionFlags {
    pub const NONE: Self = Self {
        invalid: false,
        overflow: false,
        underflow: false,
        inexact: false,
    };

    pub const INVALID: Self = Self {
        invalid: true,
        ..Self::NONE
    };

    #[inline]
    pub fn merge(self, other: Self) -> Self {
        Self {
            invalid: self.invalid || other.invalid,
            overflow: self.overflow || other.overflow,
            underflow: self.underflow || other.underflow,
            inexact: self.inexact || other.inexact,
        }
    }

    /// Fixed-order code string: `i`, `o`, `u`, `x` with `-` placeholders.
    pub fn code(&self) -> String {
        let mut s = String::with_capacity(4);
        s.push(if self.invalid { 'i' } else { '-' });
        s.push(if self.overflow { 'o' } else { '-' });
        s.push(if self.underflow { 'u' } else { '-' });
        s.push(if self.inexact { 'x' } else { '-' });
        s
    }

    pub fn from_code(code: &str) -> Option<Self> {
        let b = code.as_bytes();
        if b.len() != 4 {
            return None;
        }
        let pick = |ch: u8, on: u8| match ch {
            b'-' => Some(false),
            c if c == on => Some(true),
            _ => None,
        };
        Some(Self {
            invalid: pick(b[0], b'i')?,
            overflow: pick(b[1], b'o')?,
            underflow: pick(b[2], b'u')?,
            inexact: pick(b[3], b'x')?,
        })
    }
}

impl std::fmt::Display for ExceptionFlags {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.code())
    }
}

/// Decode a raw encoding. Total over the word domain: bits above
/// `total_bits` are ignored.
pub fn decode(fmt: FormatSpec, bits: u32) -> FpValue {
    let bits = bits & fmt.word_mask();
    let sign = bits & fmt.sign_bit() != 0;
    let biased = (bits >> fmt.man_bits) & ((1 << fmt.exp_bits) - 1);
    let man = bits & fmt.man_mask();
    let top = (1 << fmt.exp_bits) - 1;

    if biased == top {
        match fmt.profile {
            Profile::Ieee => {
                return if man == 0 {
                    FpValue {
                        class: FpClass::Inf,
                        sign,
                        exp: 0,
                        sig: 0,
                    }
                } else {
                    FpValue {
                        class: FpClass::Nan,
                        sign,
                        exp: 0,
                        sig: 0,
                    }
                };
            }
            Profile::FiniteExtended => {
                if fmt.has_nan() && man == fmt.man_mask() {
                    return FpValue {
                        class: FpClass::Nan,
                        sign,
                        exp: 0,
                        sig: 0,
                    };
                }
                // fall through: ordinary normal value
            }
        }
    }

    if biased == 0 {
        if man == 0 {
            FpValue {
                class: FpClass::Zero,
                sign,
                exp: fmt.emin(),
                sig: 0,
            }
        } else {
            FpValue {
                class: FpClass::Subnormal,
                sign,
                exp: fmt.emin(),
                sig: man,
            }
        }
    } else {
        FpValue {
            class: FpClass::Normal,
            sign,
            exp: biased as i32 - fmt.bias,
            sig: man | (1 << fmt.man_bits),
        }
    }
}

/// Re-encode a decoded value. Inverse of [`decode`] for every encoding
/// the format can produce.
pub fn encode(fmt: FormatSpec, v: &FpValue) -> u32 {
    let sign = if v.sign { fmt.sign_bit() } else { 0 };
    match v.class {
        FpClass::Zero => sign,
        FpClass::Subnormal => {
            debug_assert!(v.sig > 0 && v.sig < 1 << (fmt.precision() - 1));
            sign | v.sig
        }
        FpClass::Normal => {
            debug_assert!(v.sig >= 1 << (fmt.precision() - 1) && v.sig < 1 << fmt.precision());
            debug_assert!(v.exp >= fmt.emin() && v.exp <= fmt.emax());
            let biased = (v.exp + fmt.bias) as u32;
            sign | (biased << fmt.man_bits) | (v.sig & fmt.man_mask())
        }
        FpClass::Inf => {
            debug_assert!(fmt.has_inf());
            sign | fmt.inf_bits()
        }
        FpClass::Nan => canonical_nan(fmt).expect("format without NaN"),
    }
}

pub fn classify(fmt: FormatSpec, bits: u32) -> FpClass {
    decode(fmt, bits).class
}

/// The quiet NaN this model emits for every NaN result.
pub fn canonical_nan(fmt: FormatSpec) -> Result<u32, FormatError> {
    match fmt.name {
        FormatName::Fp32 => Ok(0x7FC0_0000),
        FormatName::Fp16 => Ok(0x7E00),
        FormatName::Fp8 => Ok(0x7F),
        FormatName::Fp4 => Err(FormatError::UnsupportedProfile(fmt.name)),
    }
}

/// Corner encodings of a format, for directed test generation: signed
/// zeros, extremes of the subnormal and normal ranges, ±1, and the
/// special values the profile supports.
pub fn corner_values(fmt: FormatSpec) -> Vec<u32> {
    let mut out = Vec::new();
    let mags = [
        0,
        fmt.min_subnormal_bits(),
        fmt.max_subnormal_bits(),
        fmt.min_normal_bits(),
        fmt.max_finite_bits(),
        fmt.one_bits(),
    ];
    for m in mags {
        out.push(m);
        out.push(m | fmt.sign_bit());
    }
    if fmt.has_nan() {
        out.push(canonical_nan(fmt).unwrap());
    }
    if fmt.has_inf() {
        out.push(fmt.inf_bits());
        out.push(fmt.inf_bits() | fmt.sign_bit());
    }
    out.sort_unstable();
    out.dedup();
    out
}

#[inline]
fn shift_right_sticky(x: u128, n: u32) -> u128 {
    if n == 0 {
        x
    } else if n >= 128 {
        (x != 0) as u128
    } else {
        (x >> n) | ((x & ((1 << n) - 1) != 0) as u128)
    }
}

/// Round-to-nearest-even packing of a candidate result.
///
/// `sig_ext` holds a `p`-bit candidate significand followed by guard,
/// round and sticky bits (`p + 3` bits total); `exp` is the unbiased
/// exponent of the candidate MSB, i.e. the represented magnitude is
/// `sig_ext * 2^(exp - p - 2)`. The sticky bit stands for "nonzero value
/// strictly below the round bit" and never moves during renormalization.
///
/// Subnormal outputs are produced by shifting into the subnormal range
/// before rounding. On overflow the IEEE profile returns ±Inf; the
/// finite-extended profile clamps to ±max-finite whenever the exact
/// magnitude exceeds it (saturation). The underflow flag follows
/// tininess-after-rounding: raised only for inexact results whose
/// unbounded-range rounding stays below the minimum normal.
pub fn round_pack(fmt: FormatSpec, sign: bool, exp: i32, sig_ext: u128) -> (u32, ExceptionFlags) {
    let p = fmt.precision();
    let sign_bits = if sign { fmt.sign_bit() } else { 0 };
    if sig_ext == 0 {
        return (sign_bits, ExceptionFlags::NONE);
    }

    // Renormalize so the candidate MSB sits at bit p+2.
    let mut exp = exp;
    let mut sig_ext = sig_ext;
    let msb = 127 - sig_ext.leading_zeros();
    if msb > p + 2 {
        sig_ext = shift_right_sticky(sig_ext, msb - (p + 2));
        exp += (msb - (p + 2)) as i32;
    } else if msb < p + 2 {
        let sh = p + 2 - msb;
        let sticky = sig_ext & 1;
        sig_ext = ((sig_ext >> 1) << (sh + 1)) | sticky;
        exp -= sh as i32;
    }

    // Finite-extended saturation: the exact magnitude is compared against
    // max-finite, so e.g. E4M3 460 clamps to 448 with overflow raised.
    if fmt.profile == Profile::FiniteExtended {
        let max_ext = (fmt.max_finite_sig() as u128) << 3;
        if exp > fmt.emax() || (exp == fmt.emax() && sig_ext > max_ext) {
            let bits = sign_bits | fmt.max_finite_bits();
            let flags = ExceptionFlags {
                overflow: true,
                inexact: true,
                ..ExceptionFlags::NONE
            };
            return (bits, flags);
        }
    }

    let rne_up = |se: u128| -> bool {
        let rb = se & 7;
        rb > 4 || (rb == 4 && (se >> 3) & 1 == 1)
    };

    // Tininess after rounding: a value just below 2^emin that rounds up to
    // the minimum normal under an unbounded exponent range is not tiny.
    let mut tiny = false;
    if exp < fmt.emin() {
        let carries = rne_up(sig_ext) && (sig_ext >> 3) == (1 << p) - 1;
        tiny = !(exp == fmt.emin() - 1 && carries);
        sig_ext = shift_right_sticky(sig_ext, (fmt.emin() - exp) as u32);
        exp = fmt.emin();
    }

    let inexact = sig_ext & 7 != 0;
    let mut sig = (sig_ext >> 3) as u32 + rne_up(sig_ext) as u32;
    if sig == 1 << p {
        sig >>= 1;
        exp += 1;
    }

    if fmt.profile == Profile::Ieee && exp > fmt.emax() {
        let bits = sign_bits | fmt.inf_bits();
        let flags = ExceptionFlags {
            overflow: true,
            inexact: true,
            ..ExceptionFlags::NONE
        };
        return (bits, flags);
    }

    let flags = ExceptionFlags {
        underflow: tiny && inexact,
        inexact,
        ..ExceptionFlags::NONE
    };
    let bits = if sig == 0 {
        sign_bits
    } else if sig < 1 << (p - 1) {
        debug_assert_eq!(exp, fmt.emin());
        sign_bits | sig
    } else {
        let biased = (exp + fmt.bias) as u32;
        sign_bits | (biased << fmt.man_bits) | (sig & fmt.man_mask())
    };
    (bits, flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_parameters() {
        for fmt in [
            FormatSpec::FP32,
            FormatSpec::FP16,
            FormatSpec::FP8,
            FormatSpec::FP8_IEEE,
            FormatSpec::FP4,
        ] {
            assert_eq!(fmt.total_bits, 1 + fmt.exp_bits + fmt.man_bits);
        }
        assert_eq!(FormatSpec::FP32.precision(), 24);
        assert_eq!(FormatSpec::FP16.precision(), 11);
        assert_eq!(FormatSpec::FP8.precision(), 4);
        assert_eq!(FormatSpec::FP4.precision(), 2);
        assert_eq!(FormatSpec::FP8.emax(), 8);
        assert_eq!(FormatSpec::FP8_IEEE.emax(), 7);
        assert_eq!(FormatSpec::FP4.emax(), 2);
        assert_eq!(FormatSpec::FP4.emin(), 0);
    }

    #[test]
    fn decode_fp16_one() {
        let v = decode(FormatSpec::FP16, 0x3C00);
        assert_eq!(v.class, FpClass::Normal);
        assert!(!v.sign);
        assert_eq!(v.exp, 0);
        assert_eq!(v.sig, 1 << 10);
    }

    #[test]
    fn decode_fp8_extremes() {
        // 0x7E is the OFP8 max finite, 448; 0x7F is NaN.
        let v = decode(FormatSpec::FP8, 0x7E);
        assert_eq!(v.class, FpClass::Normal);
        assert_eq!(v.exp, 8);
        assert_eq!(v.sig, 0b1110);
        assert_eq!((v.sig as u64) << (v.exp - 3), 448);
        assert_eq!(decode(FormatSpec::FP8, 0x7F).class, FpClass::Nan);
        assert_eq!(decode(FormatSpec::FP8, 0xFF).class, FpClass::Nan);
        // Under the IEEE profile the top exponent is reserved instead.
        assert_eq!(decode(FormatSpec::FP8_IEEE, 0x78).class, FpClass::Inf);
        assert_eq!(decode(FormatSpec::FP8_IEEE, 0x79).class, FpClass::Nan);
        assert_eq!(decode(FormatSpec::FP8_IEEE, 0x77).exp, 7);
    }

    #[test]
    fn decode_fp4_table() {
        // All 16 E2M1 encodings are finite; exact value table.
        let expect = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0];
        for bits in 0u32..16 {
            let v = decode(FormatSpec::FP4, bits);
            assert!(v.is_finite());
            let mag = v.sig as f64 * (v.exp as f64 - 1.0).exp2();
            let want = expect[(bits & 7) as usize];
            assert_eq!(mag, want, "bits {bits:#x}");
            assert_eq!(v.sign, bits >= 8);
        }
    }

    #[test]
    fn decode_fp8_table_matches_reference() {
        // Cross-check the whole E4M3 code space against an independent
        // softfloat implementation of the OFP8 convention.
        use rustc_apfloat::ieee::{Float8E4M3FN, Single};
        use rustc_apfloat::{Float, FloatConvert};
        for bits in 0u32..256 {
            let v = decode(FormatSpec::FP8, bits);
            let r = Float8E4M3FN::from_bits(bits as u128);
            if v.is_nan() {
                assert!(r.is_nan(), "bits {bits:#04x}");
                continue;
            }
            let mut loses_info = false;
            let up: Single = r.convert(&mut loses_info).value;
            assert!(!loses_info);
            let mine =
                (v.sig as f64) * ((v.exp - 3) as f64).exp2() * if v.sign { -1.0 } else { 1.0 };
            let theirs = f32::from_bits(up.to_bits() as u32) as f64;
            assert_eq!(mine, theirs, "bits {bits:#04x}");
        }
    }

    #[test]
    fn classify_and_nans() {
        assert_eq!(classify(FormatSpec::FP32, 0x0000_0001), FpClass::Subnormal);
        assert_eq!(classify(FormatSpec::FP32, 0x7F80_0000), FpClass::Inf);
        assert_eq!(canonical_nan(FormatSpec::FP32), Ok(0x7FC0_0000));
        assert_eq!(canonical_nan(FormatSpec::FP16), Ok(0x7E00));
        assert_eq!(canonical_nan(FormatSpec::FP8), Ok(0x7F));
        assert_eq!(
            canonical_nan(FormatSpec::FP4),
            Err(FormatError::UnsupportedProfile(FormatName::Fp4))
        );
    }

    #[test]
    fn round_pack_exact_two() {
        // 2.0 with zero guard/round/sticky.
        let (bits, fl) = round_pack(FormatSpec::FP32, false, 1, (1u128 << 23) << 3);
        assert_eq!(bits, 0x4000_0000);
        assert_eq!(fl, ExceptionFlags::NONE);
    }

    #[test]
    fn round_pack_ties_to_even() {
        // Exactly halfway between 2048 and 2050 in FP16: guard set, rest clear.
        let sig_ext = ((1u128 << 10) << 3) | 0b100;
        let (bits, fl) = round_pack(FormatSpec::FP16, false, 11, sig_ext);
        let v = decode(FormatSpec::FP16, bits);
        assert_eq!((v.sig as u64) << (v.exp - 10), 2048);
        assert!(fl.inexact && !fl.overflow);
    }

    #[test]
    fn round_pack_fp8_saturates() {
        // 460 = 115 * 2^2: candidate 0b1110, guard 0, round 1, sticky 1.
        // Exceeds max finite 448, so the profile clamps with overflow.
        let (bits, fl) = round_pack(FormatSpec::FP8, false, 8, 115);
        assert_eq!(bits, 0x7E, "clamps to 448");
        assert!(fl.overflow && fl.inexact && !fl.invalid);
        // 448 exactly is representable and raises nothing.
        let (bits, fl) = round_pack(FormatSpec::FP8, true, 8, 0b1110u128 << 3);
        assert_eq!(bits, 0xFE);
        assert_eq!(fl, ExceptionFlags::NONE);
    }

    #[test]
    fn round_pack_underflow_to_zero() {
        // Half of the FP32 minimum subnormal ties to even zero.
        let (bits, fl) = round_pack(FormatSpec::FP32, false, -150, (1u128 << 23) << 3);
        assert_eq!(bits, 0);
        assert!(fl.underflow && fl.inexact);
    }

    #[test]
    fn round_trip_exhaustive_narrow() {
        for fmt in [
            FormatSpec::FP4,
            FormatSpec::FP8,
            FormatSpec::FP8_IEEE,
            FormatSpec::FP16,
        ] {
            for bits in 0..=fmt.word_mask() {
                let v = decode(fmt, bits);
                if v.is_nan() {
                    continue; // NaNs canonicalize
                }
                assert_eq!(encode(fmt, &v), bits, "{:?} bits {bits:#x}", fmt.name);
            }
        }
    }

    #[test]
    fn round_trip_fp32_sampled() {
        // Multiplicative LCG walk over the 32-bit space.
        let mut x = 0x1234_5678u32;
        for _ in 0..10_000_000u32 {
            x = x.wrapping_mul(0x0019_660D).wrapping_add(0x3C6E_F35F);
            let v = decode(FormatSpec::FP32, x);
            if !v.is_nan() {
                assert_eq!(encode(FormatSpec::FP32, &v), x);
            }
        }
    }

    #[test]
    fn round_pack_is_monotone() {
        // For a fixed sign and format, a larger exact input never rounds
        // to a smaller output. Exact values are sig_ext * 2^(exp - p - 2),
        // so within one exponent sig_ext ordering is value ordering.
        use proptest::prelude::*;
        let decoded_mag = |fmt: FormatSpec, bits: u32| -> (i64, u64) {
            let v = decode(fmt, bits);
            if v.class == FpClass::Inf {
                (i64::MAX, u64::MAX)
            } else {
                (i64::from(v.exp), u64::from(v.sig))
            }
        };
        let key = |fmt: FormatSpec, bits: u32| {
            let (e, s) = decoded_mag(fmt, bits);
            // Comparable magnitude key: value = sig * 2^(exp - (p-1)).
            if s == 0 {
                i128::MIN
            } else if e == i64::MAX {
                i128::MAX
            } else {
                // Lexicographic (exp, sig) is magnitude order in a format.
                (i128::from(e) << 32) + i128::from(s)
            }
        };
        let mut runner = proptest::test_runner::TestRunner::default();
        runner
            .run(
                &(0usize..4, 0u32..200, any::<u64>(), any::<u64>()),
                |(fsel, exp_off, raw_a, raw_b)| {
                    let fmt = [
                        FormatSpec::FP32,
                        FormatSpec::FP16,
                        FormatSpec::FP8,
                        FormatSpec::FP4,
                    ][fsel];
                    let p = fmt.precision();
                    let exp = fmt.emin() - 20 + exp_off as i32;
                    let lim = 1u64 << (p + 3);
                    let (lo, hi) = {
                        let a = raw_a % lim;
                        let b = raw_b % lim;
                        (a.min(b), a.max(b))
                    };
                    let (bits_lo, _) = round_pack(fmt, false, exp, u128::from(lo));
                    let (bits_hi, _) = round_pack(fmt, false, exp, u128::from(hi));
                    // Same exponent, lo <= hi as exact values: the outputs
                    // must be ordered too. Normalization inside round_pack
                    // handles the unnormalized candidates.
                    prop_assert!(
                        key(fmt, bits_lo) <= key(fmt, bits_hi),
                        "{:?} exp={exp} lo={lo:#x} hi={hi:#x} -> {bits_lo:#x} vs {bits_hi:#x}",
                        fmt.name
                    );
                    Ok(())
                },
            )
            .unwrap();
    }

    #[test]
    fn flag_codes() {
        let fl = ExceptionFlags {
            invalid: true,
            inexact: true,
            ..ExceptionFlags::NONE
        };
        assert_eq!(fl.code(), "i--x");
        assert_eq!(ExceptionFlags::from_code("i--x"), Some(fl));
        assert_eq!(
            ExceptionFlags::from_code("----"),
            Some(ExceptionFlags::NONE)
        );
        assert_eq!(ExceptionFlags::from_code("abcd"), None);
    }

    #[test]
    fn corner_sets() {
        let c32 = corner_values(FormatSpec::FP32);
        assert!(c32.contains(&0x7FC0_0000) && c32.contains(&0x7F80_0000));
        let c4 = corner_values(FormatSpec::FP4);
        assert!(c4.iter().all(|&b| decode(FormatSpec::FP4, b).is_finite()));
        let c8 = corner_values(FormatSpec::FP8);
        assert!(c8.contains(&0x7F) && c8.contains(&0x7E));
    }
}
