//! Text and CSV renderings of counters, experiment rows, bounds and chains.
//!
//! Numbers are formatted with Rust's locale-independent formatting.

use std::fmt::Write as _;

use addmul_core::bounds::{BoundReport, RuleBounds};
use addmul_core::experiments::CountRow;
use addmul_core::opcount::{additions_per_multiplication, COUNTER_FIELDS};
use addmul_core::{DiffChain, OpCounter};

pub fn counter_csv(counter: &OpCounter, products: u64) -> String {
    let mut out = COUNTER_FIELDS.join(",");
    out.push_str(",ratio\n");
    for v in counter.fields() {
        write!(out, "{v},").unwrap();
    }
    if let Ok(r) = additions_per_multiplication(counter, products) {
        write!(out, "{r:.6}").unwrap();
    }
    out.push('\n');
    out
}

pub const EXPERIMENT_HEADER: &str = "n,bits,align,trials,seed,A,B,C,D,ratio";

pub fn experiment_csv_row(row: &CountRow) -> String {
    let c = &row.config;
    format!(
        "{},{},{},{},{},{:.2},{:.2},{:.2},{:.2},{:.2}\n",
        c.n,
        c.bits,
        c.align,
        c.trials,
        c.seed,
        row.a(),
        row.b(),
        row.c(),
        row.d(),
        row.ratio
    )
}

/// Aligned table with lengths rounded to integers.
pub fn experiment_table(rows: &[CountRow]) -> String {
    let mut out = format!("{:>10} {:>5} {:>10} {:>10} {:>8} {:>8} {:>6}\n", "n", "align", "A", "B", "C", "D", "ratio");
    for r in rows {
        writeln!(
            out,
            "{:>10} {:>5} {:>10.0} {:>10.0} {:>8.0} {:>8.0} {:>6.2}",
            r.config.n,
            if r.config.align { "yes" } else { "no" },
            r.a(),
            r.b(),
            r.c(),
            r.d(),
            r.ratio
        )
        .unwrap();
    }
    out
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "none".to_string(), |v| v.to_string())
}

pub fn bound_text(report: &BoundReport) -> String {
    format!(
        "n: {}\nk: {}\nmin_j: {}\nthreshold: {}\nguaranteed_additions: {}\nfallback: {}\n",
        report.n,
        report.k,
        opt(report.min_j),
        opt(report.threshold),
        opt(report.guaranteed_additions),
        report.fallback
    )
}

pub fn bound_csv(report: &BoundReport) -> String {
    let e = |v: Option<String>| v.unwrap_or_default();
    format!(
        "n,k,min_j,threshold,guaranteed_additions,fallback\n{},{},{},{},{},{}\n",
        report.n,
        report.k,
        e(report.min_j.map(|v| v.to_string())),
        e(report.threshold.map(|v| v.to_string())),
        e(report.guaranteed_additions.map(|v| v.to_string())),
        report.fallback
    )
}

pub fn rules_text(r: &RuleBounds) -> String {
    let mut out = format!(
        "rule1: {}\nrule3_cap: {}\nrule3_cap_unaligned: {}\nrule4: {}\n",
        r.rule1, r.rule3_cap, r.rule3_cap_unaligned, r.rule4
    );
    for t in &r.theorem {
        writeln!(out, "j={}: first_term {:.2} + linear_term {:.0} = {:.2}", t.j, t.first_term, t.linear_term, t.bound)
            .unwrap();
    }
    out
}

pub const CHAIN_HEADER: &str = "level,length,segments,difference_sum,max_difference,additions";

/// One row per level, then a `base` row whose additions are the Russian
/// Peasants cost of one scalar.
pub fn chain_csv(chain: &DiffChain) -> String {
    let mut out = format!("{CHAIN_HEADER}\n");
    for (i, l) in chain.levels.iter().enumerate() {
        let sum: u64 = l.differences.iter().map(|&d| u64::from(d)).sum();
        let max = l.differences.iter().max().copied().unwrap_or(0);
        writeln!(out, "{i},{},{},{sum},{max},{}", l.len(), l.segment_count(), l.len() - l.segment_count()).unwrap();
    }
    let sum: u64 = chain.base.iter().map(|&d| u64::from(d)).sum();
    let max = chain.base.iter().max().copied().unwrap_or(0);
    writeln!(out, "base,{},,{sum},{max},{}", chain.base.len(), chain.base_cost()).unwrap();
    out
}
