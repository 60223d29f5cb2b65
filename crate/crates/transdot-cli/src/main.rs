//! Command-line front end for the TransDot FPU model.
//!
//! Subcommands: `op` evaluates one operation, `gen` emits oracle-filled
//! test-vector files, `check` runs the datapath against a vector file,
//! and `cost` prints the structural cost and throughput reports.
//!
//! Exit codes: 0 success, 1 check found mismatches, 2 usage or malformed
//! input. `TRANSDOT_THREADS` bounds check parallelism (default: all
//! processors).

mod vectors;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::PathBuf;
use transdot::costmodel;
use transdot::datapath::{self, pack_lanes, unpack_lanes, OpKind, OpRequest};
use transdot::formats::{corner_values, decode, ExceptionFlags, FormatSpec, FpClass};
use transdot::oracle;
use vectors::{
    acc_hex_digits, kind_name, parse_file, parse_format, parse_kind, VectorRecord, FILE_HEADER,
};

#[derive(Parser)]
#[command(name = "transdot", version, about = "Bit-accurate TransDot FPU model")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a single operation and print `result flags decoded`.
    Op(OpArgs),
    /// Generate a test-vector file with oracle-filled expectations.
    Gen(GenArgs),
    /// Run the datapath against a vector file and compare bit-exactly.
    Check(CheckArgs),
    /// Print multiplexer-count and throughput reports.
    Cost(CostArgs),
}

#[derive(Args)]
struct OpArgs {
    /// Operation kind: fma, simd, or dpa.
    #[arg(long = "kind")]
    kind: String,
    /// Input format: fp32, fp16, fp8, fp8ieee, fp4.
    #[arg(long = "in")]
    fmt_in: String,
    /// Accumulate format (dpa only; defaults to fp32).
    #[arg(long = "acc")]
    fmt_acc: Option<String>,
    /// First operand word, hex.
    #[arg(long)]
    a: String,
    /// Second operand word, hex.
    #[arg(long)]
    b: String,
    /// Accumulator word, hex.
    #[arg(long, default_value = "0")]
    c: String,
}

#[derive(Args)]
struct GenArgs {
    /// Mode descriptor, e.g. fp8-fma, fp16-simd, fp8-dpa4-fp32, fp4-dpa8.
    #[arg(long)]
    mode: String,
    /// Vector count (random strategy).
    #[arg(long, default_value_t = 1000)]
    count: u64,
    /// RNG seed; identical seeds give byte-identical files.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Strategy::Random)]
    strategy: Strategy,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Strategy {
    Random,
    Corners,
    Exhaustive,
}

#[derive(Args)]
struct CheckArgs {
    /// Vector file to check.
    #[arg(long)]
    file: PathBuf,
    /// How many mismatches to print in detail.
    #[arg(long, default_value_t = 10)]
    max_mismatches: usize,
}

#[derive(Args)]
struct CostArgs {
    /// Shifter width(s) to report; repeatable.
    #[arg(long = "n", default_values_t = [128u32, 64])]
    widths: Vec<u32>,
    /// Clock frequency in GHz for the throughput table.
    #[arg(long, default_value_t = 1.0)]
    clock: f64,
    #[arg(long = "format", value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

fn main() {
    // Die quietly when the output pipe closes (e.g. `transdot cost | head`).
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Op(args) => cmd_op(&args).map(|()| 0),
        Cmd::Gen(args) => cmd_gen(&args).map(|()| 0),
        Cmd::Check(args) => cmd_check(&args),
        Cmd::Cost(args) => cmd_cost(&args).map(|()| 0),
    }
}

fn parse_hex_flag(flag: &str, s: &str) -> Result<u32> {
    if s.is_empty() || s.len() > 8 {
        bail!("--{flag}: expected 1..8 hex digits, got `{s}`");
    }
    u32::from_str_radix(s, 16).with_context(|| format!("--{flag}: malformed hex `{s}`"))
}

fn decoded_decimal(fmt: FormatSpec, bits: u32) -> String {
    let v = decode(fmt, bits);
    match v.class {
        FpClass::Nan => "NaN".into(),
        FpClass::Inf => {
            if v.sign {
                "-inf".into()
            } else {
                "inf".into()
            }
        }
        _ => {
            let mag = v.sig as f64 * f64::from(v.exp - (fmt.precision() as i32 - 1)).exp2();
            let val = if v.sign { -mag } else { mag };
            if v.is_zero() && v.sign {
                "-0".into()
            } else {
                format!("{val}")
            }
        }
    }
}

fn cmd_op(args: &OpArgs) -> Result<()> {
    let kind = parse_kind(&args.kind).context("--kind")?;
    let fmt_in = parse_format(&args.fmt_in).context("--in")?;
    let fmt_acc = match (&args.fmt_acc, kind) {
        (Some(s), OpKind::Dpa) => parse_format(s).context("--acc")?,
        (Some(s), _) => {
            let f = parse_format(s).context("--acc")?;
            if f != fmt_in {
                bail!("--acc: {} accumulates in the input format", kind_name(kind));
            }
            f
        }
        (None, OpKind::Dpa) => FormatSpec::FP32,
        (None, _) => fmt_in,
    };
    let terms = match kind {
        OpKind::FmaScalar => 1,
        _ => fmt_in.lanes_per_word(),
    };
    let in_range = |flag: &str, v: u32, mask: u32| {
        if v & !mask != 0 {
            bail!(
                "--{flag}: {v:#x} exceeds the operand width ({:#x} max)",
                mask
            );
        }
        Ok(v)
    };
    let ab_mask = if kind == OpKind::FmaScalar {
        fmt_in.word_mask()
    } else {
        u32::MAX
    };
    let c_mask = match kind {
        OpKind::FmaScalar => fmt_in.word_mask(),
        OpKind::FmaSimd => u32::MAX,
        OpKind::Dpa => fmt_acc.word_mask(),
    };
    let req = OpRequest {
        kind,
        fmt_in,
        fmt_acc,
        a_word: in_range("a", parse_hex_flag("a", &args.a)?, ab_mask)?,
        b_word: in_range("b", parse_hex_flag("b", &args.b)?, ab_mask)?,
        c_word: in_range("c", parse_hex_flag("c", &args.c)?, c_mask)?,
        terms,
    };
    let out = datapath::execute(&req).map_err(|e| anyhow::anyhow!("--kind/--in/--acc: {e}"))?;
    let digits = acc_hex_digits(kind, fmt_in, fmt_acc);
    let flags: String = out.flags.iter().map(|f| f.code()).collect();
    let decimal = decoded_result(&req, out.result_word);
    println!("{:0digits$x} {} {}", out.result_word, flags, decimal);
    Ok(())
}

/// Mode descriptor: `<fmt>-<fma|simd|dpaN>[-<acc>]`.
fn parse_mode(s: &str) -> Result<(OpKind, FormatSpec, FormatSpec, u32)> {
    let parts: Vec<&str> = s.split('-').collect();
    if parts.len() < 2 || parts.len() > 3 {
        bail!("--mode: expected <fmt>-<op>[-<acc>], got `{s}`");
    }
    let fmt_in = parse_format(parts[0]).context("--mode")?;
    let dpa_terms = fmt_in.lanes_per_word();
    let (kind, terms) = match parts[1] {
        "fma" => (OpKind::FmaScalar, 1),
        "simd" => (OpKind::FmaSimd, fmt_in.lanes_per_word()),
        d if d
            .strip_prefix("dpa")
            .is_some_and(|n| n.parse() == Ok(dpa_terms)) =>
        {
            (OpKind::Dpa, dpa_terms)
        }
        d if d.starts_with("dpa") => bail!(
            "--mode: `{}` carries {} terms per word, use {}-dpa{}",
            parts[0],
            dpa_terms,
            parts[0],
            dpa_terms
        ),
        other => bail!("--mode: unknown operation `{other}`"),
    };
    let fmt_acc = match (parts.get(2), kind) {
        (Some(a), OpKind::Dpa) => parse_format(a).context("--mode accumulate format")?,
        (Some(_), _) => bail!("--mode: only dpa takes an accumulate format"),
        (None, OpKind::Dpa) => FormatSpec::FP32,
        (None, _) => fmt_in,
    };
    Ok((kind, fmt_in, fmt_acc, terms))
}

/// Oracle-computed expected result and per-lane flags for a request.
fn oracle_expected(req: &OpRequest) -> (u32, Vec<ExceptionFlags>) {
    match req.kind {
        OpKind::FmaScalar => {
            let (bits, fl) =
                oracle::fma(req.fmt_in, req.fmt_acc, req.a_word, req.b_word, req.c_word);
            (bits, vec![fl])
        }
        OpKind::FmaSimd => {
            let a = unpack_lanes(req.fmt_in, req.a_word);
            let b = unpack_lanes(req.fmt_in, req.b_word);
            let c = unpack_lanes(req.fmt_in, req.c_word);
            let mut lanes = Vec::new();
            let mut flags = Vec::new();
            for i in 0..a.len() {
                let (bits, fl) = oracle::fma(req.fmt_in, req.fmt_in, a[i], b[i], c[i]);
                lanes.push(bits);
                flags.push(fl);
            }
            (pack_lanes(req.fmt_in, &lanes), flags)
        }
        OpKind::Dpa => {
            let (bits, fl) = oracle::dpa(
                req.fmt_in,
                req.fmt_acc,
                &unpack_lanes(req.fmt_in, req.a_word),
                &unpack_lanes(req.fmt_in, req.b_word),
                req.c_word,
            );
            (bits, vec![fl])
        }
    }
}

fn record_for(
    kind: OpKind,
    fmt_in: FormatSpec,
    fmt_acc: FormatSpec,
    terms: u32,
    a: u32,
    b: u32,
    c: u32,
) -> VectorRecord {
    let req = OpRequest {
        kind,
        fmt_in,
        fmt_acc,
        a_word: a,
        b_word: b,
        c_word: c,
        terms,
    };
    let (expect_result, expect_flags) = oracle_expected(&req);
    VectorRecord {
        req,
        expect_result,
        expect_flags,
    }
}

fn gen_records(args: &GenArgs) -> Result<Vec<VectorRecord>> {
    let (kind, fmt_in, fmt_acc, terms) = parse_mode(&args.mode)?;
    let a_mask = if kind == OpKind::FmaScalar {
        fmt_in.word_mask()
    } else {
        u32::MAX
    };
    let c_mask = match kind {
        OpKind::FmaScalar => fmt_in.word_mask(),
        OpKind::FmaSimd => u32::MAX,
        OpKind::Dpa => fmt_acc.word_mask(),
    };
    let mut out = Vec::new();
    match args.strategy {
        Strategy::Random => {
            let mut rng = ChaCha12Rng::seed_from_u64(args.seed);
            for _ in 0..args.count {
                let a = rng.gen::<u32>() & a_mask;
                let b = rng.gen::<u32>() & a_mask;
                let c = rng.gen::<u32>() & c_mask;
                out.push(record_for(kind, fmt_in, fmt_acc, terms, a, b, c));
            }
        }
        Strategy::Corners => {
            let ci = corner_values(fmt_in);
            let k = fmt_in.lanes_per_word() as usize;
            match kind {
                OpKind::FmaScalar => {
                    for &a in &ci {
                        for &b in &ci {
                            for &c in &ci {
                                out.push(record_for(kind, fmt_in, fmt_acc, terms, a, b, c));
                            }
                        }
                    }
                }
                OpKind::FmaSimd => {
                    // Uniform lanes: each lane carries the same corner triple.
                    for &a in &ci {
                        for &b in &ci {
                            for &c in &ci {
                                out.push(record_for(
                                    kind,
                                    fmt_in,
                                    fmt_acc,
                                    terms,
                                    pack_lanes(fmt_in, &vec![a; k]),
                                    pack_lanes(fmt_in, &vec![b; k]),
                                    pack_lanes(fmt_in, &vec![c; k]),
                                ));
                            }
                        }
                    }
                }
                OpKind::Dpa => {
                    let ca = corner_values(fmt_acc);
                    let lanes_k = if fmt_in == FormatSpec::FP32 { 1 } else { k };
                    for &a in &ci {
                        for &b in &ci {
                            let a_uni = pack_lanes(fmt_in, &vec![a; lanes_k]);
                            let b_uni = pack_lanes(fmt_in, &vec![b; lanes_k]);
                            for &c in &ca {
                                out.push(record_for(kind, fmt_in, fmt_acc, terms, a_uni, b_uni, c));
                            }
                            // One-hot lanes.
                            for lane in 0..lanes_k {
                                let mut al = vec![0u32; lanes_k];
                                let mut bl = vec![0u32; lanes_k];
                                al[lane] = a;
                                bl[lane] = b;
                                out.push(record_for(
                                    kind,
                                    fmt_in,
                                    fmt_acc,
                                    terms,
                                    pack_lanes(fmt_in, &al),
                                    pack_lanes(fmt_in, &bl),
                                    0,
                                ));
                            }
                        }
                    }
                }
            }
        }
        Strategy::Exhaustive => {
            if kind != OpKind::FmaScalar {
                bail!(
                    "--strategy exhaustive: operand space exceeds 2^26 for `{}`",
                    args.mode
                );
            }
            let w = fmt_in.total_bits;
            if 3 * w > 26 {
                bail!(
                    "--strategy exhaustive: {} operand space is 2^{}, limit 2^26",
                    args.mode,
                    3 * w
                );
            }
            let n = 1u64 << (3 * w);
            for i in 0..n {
                let a = (i & u64::from(fmt_in.word_mask())) as u32;
                let b = ((i >> w) & u64::from(fmt_in.word_mask())) as u32;
                let c = ((i >> (2 * w)) & u64::from(fmt_in.word_mask())) as u32;
                out.push(record_for(kind, fmt_in, fmt_acc, terms, a, b, c));
            }
        }
    }
    Ok(out)
}

fn cmd_gen(args: &GenArgs) -> Result<()> {
    let records = gen_records(args)?;
    let mut text = String::with_capacity(records.len() * 48 + 128);
    text.push_str(FILE_HEADER);
    text.push('\n');
    text.push_str("# kind fmt_in fmt_acc terms a b c result flags\n");
    for rec in &records {
        text.push_str(&rec.to_line());
        text.push('\n');
    }
    match &args.out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("--out {}", path.display()))?
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

struct Mismatch {
    line: usize,
    record: VectorRecord,
    outcome: Result<(u32, Vec<ExceptionFlags>), &'static str>,
}

fn cmd_check(args: &CheckArgs) -> Result<i32> {
    if let Ok(threads) = std::env::var("TRANSDOT_THREADS") {
        let n: usize = threads
            .parse()
            .context("TRANSDOT_THREADS must be a thread count")?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
    let text = std::fs::read_to_string(&args.file)
        .with_context(|| format!("--file {}", args.file.display()))?;
    let records = parse_file(&text)?;
    let total = records.len();

    // Evaluate in parallel; mismatch order follows the input file.
    let mismatches: Vec<Mismatch> = records
        .into_par_iter()
        .filter_map(|(line, record)| match datapath::execute(&record.req) {
            Err(_) => Some(Mismatch {
                line,
                record,
                outcome: Err("unsupported mode"),
            }),
            Ok(out) => {
                if out.result_word == record.expect_result && out.flags == record.expect_flags {
                    None
                } else {
                    Some(Mismatch {
                        line,
                        record,
                        outcome: Ok((out.result_word, out.flags)),
                    })
                }
            }
        })
        .collect();

    let failed = mismatches.len();
    println!(
        "checked {total} records: {} pass, {failed} fail",
        total - failed
    );
    for m in mismatches.iter().take(args.max_mismatches) {
        let digits = acc_hex_digits(m.record.req.kind, m.record.req.fmt_in, m.record.req.fmt_acc);
        let want_flags: String = m.record.expect_flags.iter().map(|f| f.code()).collect();
        println!("line {}: {}", m.line, m.record.to_line());
        println!(
            "  expected {:0digits$x} {} ({})",
            m.record.expect_result,
            want_flags,
            decoded_result(&m.record.req, m.record.expect_result)
        );
        match &m.outcome {
            Ok((bits, flags)) => {
                let got_flags: String = flags.iter().map(|f| f.code()).collect();
                println!(
                    "  actual   {:0digits$x} {} ({})",
                    bits,
                    got_flags,
                    decoded_result(&m.record.req, *bits)
                );
            }
            Err(reason) => println!("  actual   <{reason}>"),
        }
    }
    if failed > args.max_mismatches {
        println!("... {} more mismatches", failed - args.max_mismatches);
    }
    Ok(if failed == 0 { 0 } else { 1 })
}

fn decoded_result(req: &OpRequest, bits: u32) -> String {
    match req.kind {
        OpKind::FmaSimd => unpack_lanes(req.fmt_in, bits)
            .iter()
            .map(|&l| decoded_decimal(req.fmt_in, l))
            .collect::<Vec<_>>()
            .join(","),
        OpKind::FmaScalar => decoded_decimal(req.fmt_in, bits),
        OpKind::Dpa => decoded_decimal(req.fmt_acc, bits),
    }
}

#[derive(Serialize)]
struct CostJson {
    n: u32,
    base_mux: u64,
    extra_mux_reconfig: u64,
    extra_mux_multilane: u64,
    overhead_reconfig_pct: f64,
    overhead_multilane_pct: f64,
}

#[derive(Serialize)]
struct ThroughputJson {
    mode: &'static str,
    latency: u32,
    throughput: u32,
    flops_per_cycle: u32,
    gflops: f64,
}

#[derive(Serialize)]
struct ReportJson {
    shifter: Vec<CostJson>,
    clock_ghz: f64,
    throughput: Vec<ThroughputJson>,
    area_breakdown_pct: Vec<(String, f64)>,
}

fn cmd_cost(args: &CostArgs) -> Result<()> {
    if args.clock <= 0.0 {
        bail!("--clock: must be positive");
    }
    let mut shifter = Vec::new();
    for &n in &args.widths {
        let r = costmodel::cost_report(n).map_err(|e| anyhow::anyhow!("--n: {e}"))?;
        shifter.push(r);
    }
    let table = costmodel::throughput_table(args.clock);
    let area = costmodel::area_breakdown_reference();

    match args.format {
        OutputFormat::Json => {
            let report = ReportJson {
                shifter: shifter
                    .iter()
                    .map(|r| CostJson {
                        n: r.n,
                        base_mux: r.base_mux,
                        extra_mux_reconfig: r.extra_mux_reconfig,
                        extra_mux_multilane: r.extra_mux_multilane,
                        overhead_reconfig_pct: r.overhead_reconfig_pct,
                        overhead_multilane_pct: r.overhead_multilane_pct,
                    })
                    .collect(),
                clock_ghz: args.clock,
                throughput: table
                    .iter()
                    .map(|r| ThroughputJson {
                        mode: r.mode,
                        latency: r.latency,
                        throughput: r.throughput,
                        flops_per_cycle: r.flops_per_cycle,
                        gflops: r.gflops,
                    })
                    .collect(),
                area_breakdown_pct: area.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        OutputFormat::Text => {
            for r in &shifter {
                println!("reconfigurable barrel shifter, n={}", r.n);
                println!("  baseline muxes        {:>6}", r.base_mux);
                println!(
                    "  reconfigurable extra  {:>6}  ({:.1}% overhead)",
                    r.extra_mux_reconfig, r.overhead_reconfig_pct
                );
                println!(
                    "  multi-lane extra      {:>6}  ({:.1}% overhead)",
                    r.extra_mux_multilane, r.overhead_multilane_pct
                );
            }
            println!("throughput @ {:.2} GHz", args.clock);
            for row in &table {
                println!(
                    "  {:<24} lat/T {}/{}  {:>2} FLOP/cycle  {:>5.1} GFLOP/s",
                    row.mode, row.latency, row.throughput, row.flops_per_cycle, row.gflops
                );
            }
            println!("area breakdown (reference)");
            for (name, pct) in area {
                println!("  {name:<28} {pct:>5.1}%");
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use vectors::format_name;

    #[test]
    fn mode_descriptors() {
        let (k, fi, fa, t) = parse_mode("fp8-dpa4-fp16").unwrap();
        assert_eq!(
            (k, fi, fa, t),
            (OpKind::Dpa, FormatSpec::FP8, FormatSpec::FP16, 4)
        );
        let (k, fi, fa, t) = parse_mode("fp4-dpa8").unwrap();
        assert_eq!(
            (k, fi, fa, t),
            (OpKind::Dpa, FormatSpec::FP4, FormatSpec::FP32, 8)
        );
        let (k, fa, t) = {
            let (k, _, fa, t) = parse_mode("fp16-simd").unwrap();
            (k, fa, t)
        };
        assert_eq!((k, fa, t), (OpKind::FmaSimd, FormatSpec::FP16, 2));
        assert!(parse_mode("fp4-dpa4").is_err());
        assert!(parse_mode("fp8-div").is_err());
        assert!(parse_mode("fp8-fma-fp32").is_err());
        assert_eq!(format_name(FormatSpec::FP8_IEEE), "fp8ieee");
    }

    #[test]
    fn exhaustive_guard() {
        let args = GenArgs {
            mode: "fp16-fma".into(),
            count: 0,
            seed: 0,
            strategy: Strategy::Exhaustive,
            out: None,
        };
        assert!(gen_records(&args).is_err());
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(decoded_decimal(FormatSpec::FP32, 0x4080_0000), "4");
        assert_eq!(decoded_decimal(FormatSpec::FP32, 0x7FC0_0000), "NaN");
        assert_eq!(decoded_decimal(FormatSpec::FP32, 0xFF80_0000), "-inf");
        assert_eq!(decoded_decimal(FormatSpec::FP32, 0x8000_0000), "-0");
        assert_eq!(decoded_decimal(FormatSpec::FP4, 0x7), "6");
        assert_eq!(decoded_decimal(FormatSpec::FP8, 0x01), "0.001953125");
    }
}
