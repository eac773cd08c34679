//! Per-kernel instrumentation.
//!
//! Each rank accumulates wall time split into compute / communicate /
//! copy per (kernel, iteration), plus message and word counters (one
//! message per collective call, one word per scalar element). Records
//! are merged across ranks at export time by taking the per-rank
//! maximum, which is exact for the symmetric collectives used here. The
//! in-process backend has no host/device staging, so `copy_s` is always
//! zero; the column is kept for format stability.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kernel {
    Lanczos,
    Filter,
    Qr,
    RayleighRitz,
    Residual,
}

impl Kernel {
    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Lanczos => "Lanczos",
            Kernel::Filter => "Filter",
            Kernel::Qr => "QR",
            Kernel::RayleighRitz => "RR",
            Kernel::Residual => "Resid",
        }
    }

    pub fn from_name(s: &str) -> Option<Kernel> {
        match s {
            "Lanczos" => Some(Kernel::Lanczos),
            "Filter" => Some(Kernel::Filter),
            "QR" => Some(Kernel::Qr),
            "RR" => Some(Kernel::RayleighRitz),
            "Resid" => Some(Kernel::Residual),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Compute,
    Comm,
    Copy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelRecord {
    pub kernel: Kernel,
    pub iteration: usize,
    pub compute_s: f64,
    pub comm_s: f64,
    pub copy_s: f64,
    pub messages: u64,
    pub words: u64,
}

impl KernelRecord {
    fn empty(kernel: Kernel, iteration: usize) -> Self {
        Self {
            kernel,
            iteration,
            compute_s: 0.0,
            comm_s: 0.0,
            copy_s: 0.0,
            messages: 0,
            words: 0,
        }
    }
}

/// One rank's accumulated records; absent (kernel, iteration) pairs are
/// simply not in the map.
#[derive(Default)]
pub struct RankProfiler {
    records: BTreeMap<(usize, Kernel), KernelRecord>,
}

impl RankProfiler {
    pub fn new() -> Self {
        Self::default()
    }

    /// Accumulates a span into the (kernel, iteration) record.
    pub fn add(
        &mut self,
        kernel: Kernel,
        iteration: usize,
        phase: Phase,
        seconds: f64,
        messages: u64,
        words: u64,
    ) {
        let rec = self
            .records
            .entry((iteration, kernel))
            .or_insert_with(|| KernelRecord::empty(kernel, iteration));
        match phase {
            Phase::Compute => rec.compute_s += seconds,
            Phase::Comm => rec.comm_s += seconds,
            Phase::Copy => rec.copy_s += seconds,
        }
        rec.messages += messages;
        rec.words += words;
    }

    /// Records sorted by (iteration, kernel).
    pub fn records(&self) -> Vec<KernelRecord> {
        self.records.values().cloned().collect()
    }

    /// Total time across all records and phases.
    pub fn total_seconds(&self) -> f64 {
        self.records
            .values()
            .map(|r| r.compute_s + r.comm_s + r.copy_s)
            .sum()
    }
}

/// Merges per-rank profiles: times take the maximum over ranks (the
/// synchronized critical path), counters likewise (equal across ranks
/// for divisible layouts; the per-rank maximum otherwise).
pub fn merge_ranks(per_rank: &[RankProfiler]) -> Vec<KernelRecord> {
    let mut merged: BTreeMap<(usize, Kernel), KernelRecord> = BTreeMap::new();
    for rp in per_rank {
        for rec in rp.records.values() {
            let slot = merged
                .entry((rec.iteration, rec.kernel))
                .or_insert_with(|| KernelRecord::empty(rec.kernel, rec.iteration));
            slot.compute_s = slot.compute_s.max(rec.compute_s);
            slot.comm_s = slot.comm_s.max(rec.comm_s);
            slot.copy_s = slot.copy_s.max(rec.copy_s);
            slot.messages = slot.messages.max(rec.messages);
            slot.words = slot.words.max(rec.words);
        }
    }
    merged.into_values().collect()
}

pub const CSV_HEADER: &str = "kernel,iteration,compute_s,comm_s,copy_s,messages,words";

/// Renders records as CSV: a `# scalar=<kind>` metadata comment, the
/// fixed header, then one row per record sorted by (iteration, kernel).
pub fn render_csv(records: &[KernelRecord], scalar_kind: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# scalar={scalar_kind}");
    let _ = writeln!(out, "{CSV_HEADER}");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{:.9},{:.9},{:.9},{},{}",
            r.kernel.name(),
            r.iteration,
            r.compute_s,
            r.comm_s,
            r.copy_s,
            r.messages,
            r.words
        );
    }
    out
}

pub fn export_csv(records: &[KernelRecord], scalar_kind: &str, path: &Path) -> Result<()> {
    std::fs::write(path, render_csv(records, scalar_kind))?;
    Ok(())
}

/// Parses a CSV produced by [`render_csv`] / [`export_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<KernelRecord>> {
    let mut out = Vec::new();
    let mut saw_header = false;
    for line in text.lines() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !saw_header {
            if line != CSV_HEADER {
                return Err(Error::Config(format!("unexpected CSV header: {line}")));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Config(format!("bad CSV row: {line}")));
        }
        let kernel = Kernel::from_name(fields[0])
            .ok_or_else(|| Error::Config(format!("unknown kernel name {}", fields[0])))?;
        let parse_f = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Config(format!("bad float {s}: {e}")))
        };
        let parse_u = |s: &str| {
            s.parse::<u64>()
                .map_err(|e| Error::Config(format!("bad count {s}: {e}")))
        };
        out.push(KernelRecord {
            kernel,
            iteration: parse_u(fields[1])? as usize,
            compute_s: parse_f(fields[2])?,
            comm_s: parse_f(fields[3])?,
            copy_s: parse_f(fields[4])?,
            messages: parse_u(fields[5])?,
            words: parse_u(fields[6])?,
        });
    }
    if !saw_header {
        return Err(Error::Config("missing CSV header".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spans_accumulate() {
        let mut p = RankProfiler::new();
        p.add(Kernel::Filter, 1, Phase::Compute, 1.0, 0, 0);
        p.add(Kernel::Filter, 1, Phase::Compute, 2.0, 0, 0);
        p.add(Kernel::Filter, 1, Phase::Comm, 0.5, 3, 100);
        let recs = p.records();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].compute_s, 3.0);
        assert_eq!(recs[0].comm_s, 0.5);
        assert_eq!(recs[0].messages, 3);
        assert_eq!(recs[0].words, 100);
    }

    #[test]
    fn untouched_kernels_are_absent() {
        let mut p = RankProfiler::new();
        p.add(Kernel::Qr, 1, Phase::Compute, 0.1, 0, 0);
        let recs = p.records();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].kernel, Kernel::Qr);
    }

    #[test]
    fn rows_sorted_by_iteration_then_kernel() {
        let mut p = RankProfiler::new();
        p.add(Kernel::Residual, 2, Phase::Compute, 0.1, 0, 0);
        p.add(Kernel::Filter, 1, Phase::Compute, 0.1, 0, 0);
        p.add(Kernel::Lanczos, 0, Phase::Compute, 0.1, 0, 0);
        p.add(Kernel::Qr, 1, Phase::Compute, 0.1, 0, 0);
        let names: Vec<(usize, &str)> = p
            .records()
            .iter()
            .map(|r| (r.iteration, r.kernel.name()))
            .collect();
        assert_eq!(
            names,
            vec![(0, "Lanczos"), (1, "Filter"), (1, "QR"), (2, "Resid")]
        );
    }

    #[test]
    fn csv_roundtrip() {
        let mut p = RankProfiler::new();
        p.add(Kernel::Lanczos, 0, Phase::Comm, 0.25, 4, 64);
        p.add(Kernel::Filter, 1, Phase::Compute, 1.5, 0, 0);
        p.add(Kernel::Filter, 1, Phase::Comm, 0.5, 20, 4000);
        let recs = p.records();
        let text = render_csv(&recs, "r64");
        assert!(text.starts_with("# scalar=r64\nkernel,iteration,"));
        let back = parse_csv(&text).unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn empty_run_is_header_only() {
        let text = render_csv(&[], "c128");
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# scalar=c128"));
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), None);
        assert!(parse_csv(&text).unwrap().is_empty());
    }

    #[test]
    fn merge_takes_max_times() {
        let mut a = RankProfiler::new();
        a.add(Kernel::Qr, 1, Phase::Compute, 1.0, 2, 10);
        let mut b = RankProfiler::new();
        b.add(Kernel::Qr, 1, Phase::Compute, 3.0, 2, 10);
        b.add(Kernel::Qr, 1, Phase::Comm, 0.5, 0, 0);
        let merged = merge_ranks(&[a, b]);
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].compute_s, 3.0);
        assert_eq!(merged[0].comm_s, 0.5);
        assert_eq!(merged[0].messages, 2);
    }
}
