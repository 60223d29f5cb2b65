//! Exact-arithmetic reference implementation.
//!
//! Everything here evaluates `a*b + c` and dot-product sums over
//! unbounded integers, then applies one round-to-nearest-even step. It is
//! the ground truth the datapath is verified against, and it deliberately
//! shares no rounding or special-case code with the datapath: rounding is
//! done by quotient/remainder comparison on big integers rather than the
//! datapath's guard/round/sticky window machinery.

use crate::formats::{canonical_nan, decode, ExceptionFlags, FormatSpec, FpValue, Profile};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum OracleError {
    #[error("value is not finite")]
    NotFinite,
}

/// Exact dyadic rational: `(-1)^sign * mag * 2^scale`.
///
/// Canonical form: zero is `+0 * 2^0`; nonzero magnitudes are odd.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactNum {
    sign: bool,
    mag: BigUint,
    scale: i64,
}

impl ExactNum {
    pub fn zero() -> Self {
        Self {
            sign: false,
            mag: BigUint::zero(),
            scale: 0,
        }
    }

    pub fn new(sign: bool, mag: BigUint, scale: i64) -> Self {
        Self { sign, mag, scale }.normalized()
    }

    /// Exact value of a decoded finite number: `sig * 2^(exp - (p-1))`.
    pub fn from_fp(fmt: FormatSpec, v: &FpValue) -> Result<Self, OracleError> {
        if !v.is_finite() {
            return Err(OracleError::NotFinite);
        }
        Ok(Self {
            sign: v.sign,
            mag: BigUint::from(v.sig),
            scale: i64::from(v.exp) - i64::from(fmt.precision() - 1),
        }
        .normalized())
    }

    pub fn is_zero(&self) -> bool {
        self.mag.is_zero()
    }

    pub fn sign(&self) -> bool {
        self.sign
    }

    fn normalized(mut self) -> Self {
        if self.mag.is_zero() {
            return Self::zero();
        }
        let tz = self.mag.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.mag >>= tz;
            self.scale += tz as i64;
        }
        self
    }

    /// Exact product.
    pub fn mul(&self, rhs: &Self) -> Self {
        Self {
            sign: self.sign ^ rhs.sign,
            mag: &self.mag * &rhs.mag,
            scale: self.scale + rhs.scale,
        }
        .normalized()
    }

    /// Exact sum.
    pub fn add(&self, rhs: &Self) -> Self {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let scale = self.scale.min(rhs.scale);
        let a = &self.mag << (self.scale - scale) as u64;
        let b = &rhs.mag << (rhs.scale - scale) as u64;
        let (sign, mag) = if self.sign == rhs.sign {
            (self.sign, a + b)
        } else {
            match a.cmp(&b) {
                Ordering::Equal => return Self::zero(),
                Ordering::Greater => (self.sign, a - b),
                Ordering::Less => (rhs.sign, b - a),
            }
        };
        Self { sign, mag, scale }.normalized()
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        Self {
            sign: !self.sign,
            mag: self.mag.clone(),
            scale: self.scale,
        }
    }

    /// Exponent of the most significant bit; `None` for zero.
    pub fn msb_exp(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.scale + self.mag.bits() as i64 - 1)
        }
    }

    /// Approximate value for display purposes.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        // Keep at most 64 magnitude bits; fine for display.
        let bits = self.mag.bits();
        let (m, extra) = if bits > 64 {
            let shift = bits - 64;
            ((&self.mag >> shift).to_u64_digits()[0], shift as i64)
        } else {
            (self.mag.to_u64_digits()[0], 0)
        };
        let v = m as f64 * ((self.scale + extra) as f64).exp2();
        if self.sign {
            -v
        } else {
            v
        }
    }

    /// Compare |self| to `sig * 2^(exp - (p-1))` exactly.
    fn cmp_abs_encoded(&self, sig: u32, exp: i32, p: u32) -> Ordering {
        let rhs_scale = i64::from(exp) - i64::from(p - 1);
        let lhs_scale = self.scale;
        let common = lhs_scale.min(rhs_scale);
        let a = &self.mag << (lhs_scale - common) as u64;
        let b = BigUint::from(sig) << (rhs_scale - common) as u64;
        a.cmp(&b)
    }
}

/// True iff RNE-rounding `mag` to `p` significant bits carries out of an
/// all-ones significand (lifting the msb exponent by one).
fn unbounded_round_carries(mag: &BigUint, p: u32) -> bool {
    let bits = mag.bits();
    if bits <= u64::from(p) {
        return false;
    }
    let shift = bits - u64::from(p);
    let q: BigUint = mag >> shift;
    let r = mag - (&q << shift);
    let half = BigUint::one() << (shift - 1);
    let up = match r.cmp(&half) {
        Ordering::Greater => true,
        Ordering::Equal => (&q & BigUint::one()) == BigUint::one(),
        Ordering::Less => false,
    };
    up && q == (BigUint::one() << p) - BigUint::one()
}

/// Round an exact value into the format with a single RNE step.
///
/// Returns the encoding (sign included) and the flags of IEEE default
/// exception handling; tininess is detected after rounding. An exact zero
/// returns +0; callers that need a signed-zero result decide the sign
/// before calling.
pub fn round(fmt: FormatSpec, x: &ExactNum) -> (u32, ExceptionFlags) {
    let p = fmt.precision();
    let sign_bits = if x.sign { fmt.sign_bit() } else { 0 };
    if x.is_zero() {
        return (0, ExceptionFlags::NONE);
    }

    // Finite-extended profiles saturate whenever the exact magnitude
    // exceeds max-finite.
    if fmt.profile == Profile::FiniteExtended
        && x.cmp_abs_encoded(fmt.max_finite_sig(), fmt.emax(), p) == Ordering::Greater
    {
        let flags = ExceptionFlags {
            overflow: true,
            inexact: true,
            ..ExceptionFlags::NONE
        };
        return (sign_bits | fmt.max_finite_bits(), flags);
    }

    let msb = x.msb_exp().unwrap();
    let emin = i64::from(fmt.emin());

    // Divide onto the target grid: lsb weight max(msb, emin) - (p-1).
    let e = msb.max(emin);
    let lsb = e - i64::from(p) + 1;
    let shift = lsb - x.scale;
    let (mut q, inexact) = if shift <= 0 {
        ((&x.mag << (-shift) as u64), false)
    } else {
        let shift = shift as u64;
        let q: BigUint = &x.mag >> shift;
        let r = &x.mag - (&q << shift);
        let half = BigUint::one() << (shift - 1);
        let up = match r.cmp(&half) {
            Ordering::Greater => true,
            Ordering::Equal => (&q & BigUint::one()) == BigUint::one(),
            Ordering::Less => false,
        };
        ((q + BigUint::from(up as u32)), !r.is_zero())
    };

    // Tininess after rounding: round the magnitude at precision p anchored
    // at its own msb, as if the exponent range were unbounded. Only a
    // carry out of an all-ones significand can lift the result to 2^emin.
    let tiny = msb < emin && !(msb == emin - 1 && unbounded_round_carries(&x.mag, p));

    let mut e = e;
    if q.bits() > u64::from(p) {
        q >>= 1u8; // carry out of an all-ones significand; the low bit is zero
        e += 1;
    }

    if fmt.profile == Profile::Ieee && e > i64::from(fmt.emax()) {
        let flags = ExceptionFlags {
            overflow: true,
            inexact: true,
            ..ExceptionFlags::NONE
        };
        return (sign_bits | fmt.inf_bits(), flags);
    }

    let flags = ExceptionFlags {
        underflow: tiny && inexact,
        inexact,
        ..ExceptionFlags::NONE
    };
    let sig = q.to_u32_digits().first().copied().unwrap_or(0);
    let bits = if sig == 0 {
        sign_bits
    } else if sig < 1 << (p - 1) {
        sign_bits | sig
    } else {
        let biased = (e as i32 + fmt.bias) as u32;
        sign_bits | (biased << fmt.man_bits) | (sig & fmt.man_mask())
    };
    (bits, flags)
}

/// Special-value outcome shared by `fma` and `dpa`: NaN propagation,
/// invalid conditions, infinity handling, and the sign of an exact-zero
/// sum. `None` means every input is finite and at least one addend is
/// expected to be nonzero (the exact path decides).
fn resolve_specials(
    fmt_acc: FormatSpec,
    pairs: &[(FpValue, FpValue)],
    c: &FpValue,
) -> Option<(u32, ExceptionFlags)> {
    let mut any_nan = c.is_nan();
    let mut zero_times_inf = false;
    let mut pos_inf = false;
    let mut neg_inf = false;
    for (a, b) in pairs {
        // A NaN factor makes the product NaN; it is not an infinity and
        // cannot form 0 * inf.
        if a.is_nan() || b.is_nan() {
            any_nan = true;
        } else if (a.is_zero() && b.is_inf()) || (a.is_inf() && b.is_zero()) {
            zero_times_inf = true;
        } else if a.is_inf() || b.is_inf() {
            if a.sign ^ b.sign {
                neg_inf = true;
            } else {
                pos_inf = true;
            }
        }
    }
    if c.is_inf() {
        if c.sign {
            neg_inf = true;
        } else {
            pos_inf = true;
        }
    }

    let invalid = zero_times_inf || (pos_inf && neg_inf);
    if invalid || any_nan {
        let bits = canonical_nan(fmt_acc).expect("accumulator format has a NaN");
        let flags = if invalid {
            ExceptionFlags::INVALID
        } else {
            ExceptionFlags::NONE
        };
        return Some((bits, flags));
    }
    if pos_inf || neg_inf {
        let sign = if neg_inf { fmt_acc.sign_bit() } else { 0 };
        return Some((sign | fmt_acc.inf_bits(), ExceptionFlags::NONE));
    }

    // All finite. An exact sum of zero addends keeps -0 only if every
    // addend is a negative zero.
    if pairs.iter().all(|(a, b)| a.is_zero() || b.is_zero()) && c.is_zero() {
        let all_neg = c.sign && pairs.iter().all(|(a, b)| a.sign ^ b.sign);
        let sign = if all_neg { fmt_acc.sign_bit() } else { 0 };
        return Some((sign, ExceptionFlags::NONE));
    }
    None
}

/// Exact `a*b + c` with one rounding into `fmt_acc`.
pub fn fma(
    fmt_in: FormatSpec,
    fmt_acc: FormatSpec,
    a_bits: u32,
    b_bits: u32,
    c_bits: u32,
) -> (u32, ExceptionFlags) {
    dpa(fmt_in, fmt_acc, &[a_bits], &[b_bits], c_bits)
}

/// Exact `sum(a_i * b_i) + c` with one rounding into `fmt_acc`.
pub fn dpa(
    fmt_in: FormatSpec,
    fmt_acc: FormatSpec,
    a_lanes: &[u32],
    b_lanes: &[u32],
    c_bits: u32,
) -> (u32, ExceptionFlags) {
    assert_eq!(a_lanes.len(), b_lanes.len());
    let pairs: Vec<(FpValue, FpValue)> = a_lanes
        .iter()
        .zip(b_lanes)
        .map(|(&a, &b)| (decode(fmt_in, a), decode(fmt_in, b)))
        .collect();
    let c = decode(fmt_acc, c_bits);

    if let Some(out) = resolve_specials(fmt_acc, &pairs, &c) {
        return out;
    }

    let mut sum = ExactNum::from_fp(fmt_acc, &c).expect("finite after special handling");
    for (a, b) in &pairs {
        let pa = ExactNum::from_fp(fmt_in, a).unwrap();
        let pb = ExactNum::from_fp(fmt_in, b).unwrap();
        sum = sum.add(&pa.mul(&pb));
    }
    if sum.is_zero() {
        // Exact cancellation of nonzero addends rounds to +0 under RNE.
        return (0, ExceptionFlags::NONE);
    }
    round(fmt_acc, &sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::round_pack;
    use crate::formats::FormatName;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn exact(fmt: FormatSpec, bits: u32) -> ExactNum {
        ExactNum::from_fp(fmt, &decode(fmt, bits)).unwrap()
    }

    #[test]
    fn exact_mul_small() {
        // 1.5 * 2.0 = 3.0
        let a = exact(FormatSpec::FP32, 0x3FC0_0000);
        let b = exact(FormatSpec::FP32, 0x4000_0000);
        let p = a.mul(&b);
        assert_eq!(p, ExactNum::new(false, BigUint::from(3u32), 0));
    }

    #[test]
    fn exact_add_cancels() {
        let x = exact(FormatSpec::FP16, 0x4D00);
        assert!(x.add(&x.neg()).is_zero());
    }

    #[test]
    fn exact_of_min_subnormal_fp8() {
        let x = exact(FormatSpec::FP8, 0x01);
        assert_eq!(x, ExactNum::new(false, BigUint::one(), -9));
        assert_eq!(x.msb_exp(), Some(-9));
        assert_eq!(x.to_f64(), (-9f64).exp2());
    }

    #[test]
    fn display_value_approximation() {
        assert_eq!(exact(FormatSpec::FP32, 0xBFC0_0000).to_f64(), -1.5);
        assert_eq!(ExactNum::zero().to_f64(), 0.0);
        // Wide magnitudes keep 64 bits, plenty for display.
        let wide = ExactNum::new(false, BigUint::from(u128::MAX), 0);
        let err = (wide.to_f64() - 2f64.powi(128)).abs() / 2f64.powi(128);
        assert!(err < 1e-15);
    }

    #[test]
    fn from_fp_rejects_non_finite() {
        let inf = decode(FormatSpec::FP32, 0x7F80_0000);
        assert_eq!(
            ExactNum::from_fp(FormatSpec::FP32, &inf),
            Err(OracleError::NotFinite)
        );
    }

    #[test]
    fn round_half_min_subnormal_ties_to_zero() {
        let x = ExactNum::new(false, BigUint::one(), -150);
        let (bits, fl) = round(FormatSpec::FP32, &x);
        assert_eq!(bits, 0);
        assert!(fl.underflow && fl.inexact && !fl.invalid);
    }

    #[test]
    fn round_just_above_half_min_subnormal() {
        // 2^-150 + 2^-160 rounds up to the min subnormal.
        let x = ExactNum::new(false, BigUint::one(), -150).add(&ExactNum::new(
            false,
            BigUint::one(),
            -160,
        ));
        let (bits, fl) = round(FormatSpec::FP32, &x);
        assert_eq!(bits, 1);
        assert!(fl.underflow && fl.inexact);
    }

    #[test]
    fn round_fp8_saturation() {
        let x = ExactNum::new(false, BigUint::from(460u32), 0);
        let (bits, fl) = round(FormatSpec::FP8, &x);
        assert_eq!(bits, 0x7E);
        assert!(fl.overflow && fl.inexact);
        // IEEE-profile FP8 overflows to infinity instead.
        let (bits, fl) = round(FormatSpec::FP8_IEEE, &x);
        assert_eq!(bits, 0x78);
        assert!(fl.overflow && fl.inexact);
    }

    #[test]
    fn dpa_all_zero_inputs() {
        let (bits, fl) = dpa(FormatSpec::FP8, FormatSpec::FP32, &[0; 4], &[0; 4], 0);
        assert_eq!(bits, 0);
        assert_eq!(fl, ExceptionFlags::NONE);
        // All addends -0 keeps the negative zero.
        let (bits, _) = dpa(
            FormatSpec::FP8,
            FormatSpec::FP32,
            &[0x80; 4],
            &[0x00; 4],
            0x8000_0000,
        );
        assert_eq!(bits, 0x8000_0000);
    }

    #[test]
    fn fma_invalid_cases() {
        // 0 * inf
        let (bits, fl) = fma(FormatSpec::FP16, FormatSpec::FP16, 0x7C00, 0x0000, 0x3C00);
        assert_eq!(bits, 0x7E00);
        assert!(fl.invalid);
        // inf - inf through the addend
        let (bits, fl) = fma(FormatSpec::FP16, FormatSpec::FP16, 0x7C00, 0x3C00, 0xFC00);
        assert_eq!(bits, 0x7E00);
        assert!(fl.invalid);
        // Plain NaN propagation raises nothing.
        let (bits, fl) = fma(FormatSpec::FP16, FormatSpec::FP16, 0x7E01, 0x3C00, 0x3C00);
        assert_eq!(bits, 0x7E00);
        assert!(!fl.invalid);
    }

    #[test]
    fn algebraic_properties_randomized() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..100_000 {
            let vals: Vec<ExactNum> = (0..3)
                .map(|_| {
                    ExactNum::new(
                        rng.gen(),
                        BigUint::from(rng.gen::<u64>()),
                        i64::from(rng.gen_range(-80..80i32)),
                    )
                })
                .collect();
            let (x, y, z) = (&vals[0], &vals[1], &vals[2]);
            assert_eq!(x.add(y), y.add(x));
            assert_eq!(x.add(y).add(z), x.add(&y.add(z)));
            assert_eq!(x.mul(&y.add(z)), x.mul(y).add(&x.mul(z)));
        }
    }

    #[test]
    fn round_agrees_with_round_pack() {
        // The two independently written rounding routes must agree: feed
        // random exact values through oracle::round and through the
        // datapath's round_pack.
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let fmts = [
            FormatSpec::FP32,
            FormatSpec::FP16,
            FormatSpec::FP8,
            FormatSpec::FP8_IEEE,
            FormatSpec::FP4,
        ];
        for i in 0..1_000_000 {
            let fmt = fmts[i % fmts.len()];
            let p = fmt.precision();
            let sign = rng.gen::<bool>();
            let mag: u64 = rng.gen_range(1..1u64 << (p + 20));
            let scale =
                i64::from(rng.gen_range(-3 * fmt.total_bits as i32..2 * fmt.total_bits as i32));
            let x = ExactNum::new(sign, BigUint::from(mag), scale);

            let (want_bits, want_flags) = round(fmt, &x);

            // Express the same value as a round_pack candidate.
            let bits_len = 64 - mag.leading_zeros();
            let exp = (scale + i64::from(bits_len) - 1) as i32;
            let (sig_ext, _) = if bits_len >= p + 3 {
                let sh = bits_len - (p + 3);
                let dropped = mag & ((1u64 << sh) - 1) != 0;
                (((mag >> sh) as u128) | u128::from(dropped), dropped)
            } else {
                (u128::from(mag) << (p + 3 - bits_len), false)
            };
            let (got_bits, got_flags) = round_pack(fmt, sign, exp, sig_ext);
            assert_eq!(
                (got_bits, got_flags),
                (want_bits, want_flags),
                "{:?} {mag}x2^{scale}",
                fmt.name
            );
        }
    }

    #[test]
    fn fma_fp16_min_subnormal_addend() {
        // (1+2^-10)^2 + 2^-24, evaluated over unbounded integers and
        // rounded once; verified against an independent softfloat.
        use rustc_apfloat::ieee::Half;
        use rustc_apfloat::{Float, Round};
        let (bits, fl) = fma(FormatSpec::FP16, FormatSpec::FP16, 0x3C01, 0x3C01, 0x0001);
        let r = Half::from_bits(0x3C01).mul_add_r(
            Half::from_bits(0x3C01),
            Half::from_bits(0x0001),
            Round::NearestTiesToEven,
        );
        assert_eq!(u128::from(bits), r.value.to_bits());
        assert_eq!(bits, 0x3C02, "rounds to 1 + 2*2^-10");
        assert!(fl.inexact);
    }

    #[test]
    fn fp4_has_no_nan_output_path() {
        assert_eq!(canonical_nan(FormatSpec::FP4).ok(), None);
        assert_eq!(FormatSpec::FP4.name, FormatName::Fp4);
    }
}
