//! Bit-accurate software model of the TransDot reconfigurable FPU.
//!
//! TransDot unifies scalar FMA, packed-SIMD FMA, and trans-precision
//! dot-product accumulation (DPA) over FP32/FP16/FP8/FP4 in one shared
//! datapath. This crate models that datapath functionally and bit-exactly:
//!
//! - [`formats`]: encodings, special-value profiles, and final rounding;
//! - [`shifter`]: the reconfigurable barrel shifter (full / two half /
//!   four quarter subword modes with sticky collection);
//! - [`multiplier`]: the multi-mode array multiplier and its dot-product
//!   reduction tree;
//! - [`fp4dp2`]: the dedicated FP4 two-term dot-product pre-stage;
//! - [`datapath`]: the execution engine composing the above;
//! - [`oracle`]: an independent exact-arithmetic reference used to verify
//!   every datapath result;
//! - [`costmodel`]: closed-form multiplexer-count and throughput
//!   accounting for the reconfigurable structures.
//!
//! Every operation is a pure function over immutable inputs and is safe
//! to call concurrently.

#![forbid(unsafe_code)]

pub mod costmodel;
pub mod datapath;
pub mod formats;
pub mod fp4dp2;
pub mod multiplier;
pub mod oracle;
pub mod shifter;

pub use datapath::{OpKind, OpRequest, OpResult};
pub use formats::{decode, encode, ExceptionFlags, FormatName, FormatSpec, FpClass, FpValue};
