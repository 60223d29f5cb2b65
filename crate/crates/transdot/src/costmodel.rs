//! Structural cost and throughput accounting.
//!
//! Closed-form multiplexer counts for the reconfigurable barrel shifter
//! against two baselines (a plain shifter and four independent per-lane
//! shifters), the per-mode latency/throughput table, and the reference
//! area-breakdown constants for reports. Gate-level effects such as
//! high-fanout buffering are outside the model.

use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum CostError {
    #[error("width {0} is not a power of two >= {1}")]
    InvalidWidth(u32, u32),
}

fn check_width(n: u32, min: u32) -> Result<u32, CostError> {
    if !n.is_power_of_two() || n < min {
        return Err(CostError::InvalidWidth(n, min));
    }
    Ok(n.trailing_zeros())
}

/// Mux count of a conventional n-bit barrel shifter: `n * log2(n)`.
pub fn barrel_mux_count(n: u32) -> Result<u64, CostError> {
    let log = check_width(n, 2)?;
    Ok(u64::from(n) * u64::from(log))
}

/// Extra muxes to make the shifter reconfigurable (mode-dependent shift
/// amounts, boundary blocking, final-stage bypass):
/// `5n/8 + 3*log2(n) - 5`.
pub fn reconfig_extra_mux(n: u32) -> Result<u64, CostError> {
    let log = check_width(n, 8)?;
    Ok(5 * u64::from(n) / 8 + 3 * u64::from(log) - 5)
}

/// Extra muxes of the multi-lane alternative (a half-width and two
/// quarter-width shifters next to the full one):
/// `(n/2)*log2(n/2) + 2*(n/4)*log2(n/4)`.
pub fn multilane_extra_mux(n: u32) -> Result<u64, CostError> {
    check_width(n, 8)?;
    let half = barrel_mux_count(n / 2)?;
    let quarter = barrel_mux_count(n / 4)?;
    Ok(half + 2 * quarter)
}

/// Mux counts and relative overheads at width `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostReport {
    pub n: u32,
    pub base_mux: u64,
    pub extra_mux_reconfig: u64,
    pub extra_mux_multilane: u64,
    pub overhead_reconfig_pct: f64,
    pub overhead_multilane_pct: f64,
}

pub fn cost_report(n: u32) -> Result<CostReport, CostError> {
    let base = barrel_mux_count(n)?;
    let reconfig = reconfig_extra_mux(n)?;
    let multilane = multilane_extra_mux(n)?;
    Ok(CostReport {
        n,
        base_mux: base,
        extra_mux_reconfig: reconfig,
        extra_mux_multilane: multilane,
        overhead_reconfig_pct: reconfig as f64 / base as f64 * 100.0,
        overhead_multilane_pct: multilane as f64 / base as f64 * 100.0,
    })
}

/// One row of the per-mode performance table.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputRow {
    pub mode: &'static str,
    /// Pipeline latency in cycles.
    pub latency: u32,
    /// Operations issued per cycle.
    pub throughput: u32,
    /// Parallel multiply-add terms per operation.
    pub terms: u32,
    pub flops_per_cycle: u32,
    pub gflops: f64,
}

/// Per-mode throughput at the given clock. Each term is one multiply and
/// one add, so `flops_per_cycle = 2 * terms * throughput`.
pub fn throughput_table(clock_ghz: f64) -> Vec<ThroughputRow> {
    let rows: [(&'static str, u32); 8] = [
        ("FP32 FMA scalar", 1),
        ("FP16 FMA scalar", 1),
        ("FP16 FMA SIMD", 2),
        ("FP16 DPA with FP32 acc", 2),
        ("FP8 FMA scalar", 1),
        ("FP8 FMA SIMD", 4),
        ("FP8 DPA with FP32 acc", 4),
        ("FP4 DPA with FP32 acc", 8),
    ];
    rows.iter()
        .map(|&(mode, terms)| {
            let flops_per_cycle = 2 * terms;
            ThroughputRow {
                mode,
                latency: 4,
                throughput: 1,
                terms,
                flops_per_cycle,
                gflops: f64::from(flops_per_cycle) * clock_ghz,
            }
        })
        .collect()
}

/// Reference area breakdown of the unit, in percent of total cell area.
pub fn area_breakdown_reference() -> [(&'static str, f64); 6] {
    [
        ("multi-mode multiplier", 34.5),
        ("normalization", 15.5),
        ("exponent", 11.8),
        ("alignment shifter and adder", 18.1),
        ("FP4 DP2", 3.9),
        ("others", 16.2),
    ]
}
