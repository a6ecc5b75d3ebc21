//! Deterministic report writers.
//!
//! Every file carries the configuration that produced it: JSON reports embed
//! it as a field, CSVs start with `# config ...` comment lines. Formatting
//! goes through Rust's default float display, so identical inputs give
//! byte-identical files.

use anyhow::{Context, Result};
use gvspsim_core::defense::{Verdict, WidthVerdict};
use gvspsim_core::detect::DetectorVerdict;
use serde::Serialize;
use std::fs;
use std::path::Path;

/// `# config {...}` comment line from any serializable configuration.
pub fn config_comment(label: &str, value: &impl Serialize) -> String {
    let json = serde_json::to_string(value).expect("report config serializes");
    format!("# {label} {json}\n")
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_text(path, &text)
}

pub fn detector_csv(comments: &[String], verdicts: &[DetectorVerdict]) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str(c);
    }
    out.push_str(
        "frame_index,block_id,constant_meta,frame_id,timestamp,timestamp_rate,mse,histogram,optical_flow,combined\n",
    );
    for v in verdicts {
        let flags = [
            v.constant_meta,
            v.frame_id,
            v.timestamp,
            v.timestamp_rate,
            v.mse,
            v.histogram,
            v.optical_flow,
            v.combined,
        ];
        out.push_str(&format!("{},{}", v.frame_index, v.block_id));
        for f in flags {
            out.push_str(if f { ",1" } else { ",0" });
        }
        out.push('\n');
    }
    out
}

pub fn width_csv(comments: &[String], verdicts: &[WidthVerdict]) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str(c);
    }
    out.push_str("block_id,requested_width,received_width,verdict,matched_delay,abstained\n");
    for v in verdicts {
        let requested = v.requested_width.map_or(String::new(), |w| w.to_string());
        let delay = v.matched_delay.map_or(String::new(), |d| d.to_string());
        let verdict = match v.verdict {
            Verdict::Valid => "valid",
            Verdict::Invalid => "invalid",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            v.block_id,
            requested,
            v.received_width,
            verdict,
            delay,
            u8::from(v.abstained)
        ));
    }
    out
}

/// Per-detector alert totals for summaries.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct AlertTotals {
    pub constant_meta: u64,
    pub frame_id: u64,
    pub timestamp: u64,
    pub timestamp_rate: u64,
    pub mse: u64,
    pub histogram: u64,
    pub optical_flow: u64,
    pub combined: u64,
}

impl AlertTotals {
    pub fn tally(verdicts: &[DetectorVerdict]) -> Self {
        let mut t = Self::default();
        for v in verdicts {
            t.constant_meta += u64::from(v.constant_meta);
            t.frame_id += u64::from(v.frame_id);
            t.timestamp += u64::from(v.timestamp);
            t.timestamp_rate += u64::from(v.timestamp_rate);
            t.mse += u64::from(v.mse);
            t.histogram += u64::from(v.histogram);
            t.optical_flow += u64::from(v.optical_flow);
            t.combined += u64::from(v.combined);
        }
        t
    }
}

/// Width-verifier totals for summaries.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct WidthTotals {
    pub checked: u64,
    pub invalid: u64,
    pub abstained: u64,
}

impl WidthTotals {
    pub fn tally(verdicts: &[WidthVerdict]) -> Self {
        let mut t = Self::default();
        for v in verdicts {
            t.checked += 1;
            t.invalid += u64::from(v.verdict == Verdict::Invalid);
            t.abstained += u64::from(v.abstained);
        }
        t
    }
}
