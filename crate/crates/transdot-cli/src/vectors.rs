//! Line-oriented test-vector files.
//!
//! One record per line, whitespace-separated:
//!
//! ```text
//! # transdot vectors v1
//! kind fmt_in fmt_acc terms a b c result flags
//! dpa fp8 fp32 4 38383838 38383838 00000000 40800000 ----
//! ```
//!
//! `a` and `b` are 32-bit packed words (8 hex digits). `c` and `result`
//! are as wide as the operation's accumulator: the packed word for SIMD,
//! the scalar accumulator encoding otherwise. Flags are one `ioux`/`-`
//! group of four per lane, lane 0 first, concatenated for SIMD. `#`
//! starts a comment; hex is lowercase. Records with expected fields are
//! self-checking.

use anyhow::{anyhow, bail, Context, Result};
use transdot::datapath::{OpKind, OpRequest};
use transdot::formats::{ExceptionFlags, FormatName, FormatSpec};

pub const FILE_HEADER: &str = "# transdot vectors v1";

/// One test vector, possibly carrying oracle-filled expectations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorRecord {
    pub req: OpRequest,
    pub expect_result: u32,
    pub expect_flags: Vec<ExceptionFlags>,
}

pub fn format_name(fmt: FormatSpec) -> &'static str {
    match (fmt.name, fmt.has_inf()) {
        (FormatName::Fp32, _) => "fp32",
        (FormatName::Fp16, _) => "fp16",
        (FormatName::Fp8, false) => "fp8",
        (FormatName::Fp8, true) => "fp8ieee",
        (FormatName::Fp4, _) => "fp4",
    }
}

pub fn parse_format(s: &str) -> Result<FormatSpec> {
    Ok(match s {
        "fp32" => FormatSpec::FP32,
        "fp16" => FormatSpec::FP16,
        "fp8" => FormatSpec::FP8,
        "fp8ieee" => FormatSpec::FP8_IEEE,
        "fp4" => FormatSpec::FP4,
        _ => bail!("unknown format `{s}` (expected fp32, fp16, fp8, fp8ieee, or fp4)"),
    })
}

pub fn kind_name(kind: OpKind) -> &'static str {
    match kind {
        OpKind::FmaScalar => "fma",
        OpKind::FmaSimd => "simd",
        OpKind::Dpa => "dpa",
    }
}

pub fn parse_kind(s: &str) -> Result<OpKind> {
    Ok(match s {
        "fma" => OpKind::FmaScalar,
        "simd" => OpKind::FmaSimd,
        "dpa" => OpKind::Dpa,
        _ => bail!("unknown kind `{s}` (expected fma, simd, or dpa)"),
    })
}

/// Width of the `c`/`result` fields in hex digits.
pub fn acc_hex_digits(kind: OpKind, fmt_in: FormatSpec, fmt_acc: FormatSpec) -> usize {
    match kind {
        OpKind::FmaSimd => 8,
        OpKind::FmaScalar => fmt_in.hex_digits(),
        OpKind::Dpa => fmt_acc.hex_digits(),
    }
}

/// Lanes carrying flags in the result.
pub fn flag_lanes(kind: OpKind, fmt_in: FormatSpec) -> usize {
    match kind {
        OpKind::FmaSimd => fmt_in.lanes_per_word() as usize,
        _ => 1,
    }
}

fn parse_hex(field: &str, s: &str, digits: usize) -> Result<u32> {
    if s.len() != digits {
        bail!("field `{field}`: expected {digits} hex digits, got `{s}`");
    }
    if s.chars().any(|c| c.is_ascii_uppercase()) {
        bail!("field `{field}`: hex must be lowercase: `{s}`");
    }
    u32::from_str_radix(s, 16).with_context(|| format!("field `{field}`: bad hex `{s}`"))
}

impl VectorRecord {
    pub fn to_line(&self) -> String {
        let ad = acc_hex_digits(self.req.kind, self.req.fmt_in, self.req.fmt_acc);
        let flags: String = self.expect_flags.iter().map(|f| f.code()).collect();
        format!(
            "{} {} {} {} {:08x} {:08x} {:0cw$x} {:0cw$x} {}",
            kind_name(self.req.kind),
            format_name(self.req.fmt_in),
            format_name(self.req.fmt_acc),
            self.req.terms,
            self.req.a_word,
            self.req.b_word,
            self.req.c_word,
            self.expect_result,
            flags,
            cw = ad,
        )
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 9 {
            bail!("expected 9 fields, got {}", fields.len());
        }
        let kind = parse_kind(fields[0])?;
        let fmt_in = parse_format(fields[1])?;
        let fmt_acc = parse_format(fields[2])?;
        let terms: u32 = fields[3].parse().context("field `terms`")?;
        let ad = acc_hex_digits(kind, fmt_in, fmt_acc);
        let a_word = parse_hex("a", fields[4], 8)?;
        let b_word = parse_hex("b", fields[5], 8)?;
        let c_word = parse_hex("c", fields[6], ad)?;
        let expect_result = parse_hex("result", fields[7], ad)?;
        let lanes = flag_lanes(kind, fmt_in);
        let fs = fields[8];
        if fs.len() != 4 * lanes {
            bail!("field `flags`: expected {} chars, got `{fs}`", 4 * lanes);
        }
        let expect_flags = (0..lanes)
            .map(|i| {
                ExceptionFlags::from_code(&fs[4 * i..4 * i + 4])
                    .ok_or_else(|| anyhow!("field `flags`: bad code `{fs}`"))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            req: OpRequest {
                kind,
                fmt_in,
                fmt_acc,
                a_word,
                b_word,
                c_word,
                terms,
            },
            expect_result,
            expect_flags,
        })
    }
}

/// Parse a whole vector file; comment and blank lines are skipped. Errors
/// carry 1-based line numbers.
pub fn parse_file(text: &str) -> Result<Vec<(usize, VectorRecord)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim() == FILE_HEADER => {}
        Some((_, first)) => bail!("line 1: expected header `{FILE_HEADER}`, got `{first}`"),
        None => bail!("empty vector file"),
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let rec = VectorRecord::parse_line(line).with_context(|| format!("line {}", idx + 1))?;
        out.push((idx + 1, rec));
    }
    Ok(out)
}
