//! CSV emission: comma separated, header row, LF endings, reals with six
//! significant digits.

use coded_chain::metrics::{entropy, gini};
use coded_chain::netsim::EpochRecord;

use crate::runner::Summary;

/// Formats `x` with six significant digits, dropping trailing zeros.
pub fn real(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific form");
    let exp: i32 = exp.parse().expect("exponent");
    let rounded: f64 = format!("{mantissa}e{exp}").parse().expect("round trip");
    let decimals = (5 - exp).max(0) as usize;
    let mut s = format!("{rounded:.decimals$}");
    if s.contains('.') {
        s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

pub const EPOCH_COLUMNS: &[(&str, &str)] = &[
    ("epoch", "epoch index t, starting at 1"),
    ("miners", "live miners N(t) after churn"),
    ("joined", "miners that joined at the start of the epoch"),
    ("left", "miners that left at the start of the epoch"),
    ("selected", "K(t), transactions selected by the base station"),
    ("confirmed", "|K_v(t)|, transactions appended to the block"),
    ("confirmed_valid", "appended transactions that are truly valid"),
    ("wrong_confirmations", "appended transactions that are truly invalid"),
    ("expired", "selected transactions rejected by the vote and dropped"),
    ("demoted", "accepted transactions without a majority state, returned to the backlog"),
    ("storage_fraction", "R_s of a miner holding every closed group"),
    ("gini", "Gini coefficient of the participation credits"),
    ("entropy", "base-2 entropy of the participation credits"),
    ("backlog", "backlog size at the start of the epoch"),
    ("depth_limit", "depth limit D(t) in blocks"),
    ("miners_per_tx", "M(t), miners assigned to each transaction"),
    ("reliability", "P(t), geometric mean reliability"),
    ("degraded", "1 when P(t) leaves no trust margin and M(t) = N(t)"),
];

pub const SUMMARY_COLUMNS: &[(&str, &str)] = &[
    ("scenario", "scenario name"),
    ("seed", "seed of the run"),
    ("epochs", "epochs simulated"),
    ("mean_miners", "mean N(t)"),
    ("throughput", "mean truly valid confirmations per epoch"),
    ("normalized_throughput", "throughput divided by the batch size n"),
    ("wrong_confirmations", "mean invalid confirmations per epoch"),
    ("mean_gini", "mean Gini coefficient over epochs"),
    ("mean_entropy", "mean entropy over epochs"),
    ("final_storage_fraction", "R_s after the last epoch"),
    ("mean_miners_per_tx", "mean M(t)"),
    ("mean_backlog", "mean backlog size"),
];

fn header(columns: &[(&str, &str)]) -> String {
    columns.iter().map(|(c, _)| *c).collect::<Vec<_>>().join(",")
}

pub fn epoch_csv(records: &[EpochRecord]) -> String {
    let mut out = header(EPOCH_COLUMNS);
    out.push('\n');
    for r in records {
        let row = [
            r.epoch.to_string(),
            r.miners.to_string(),
            r.joined.to_string(),
            r.left.to_string(),
            r.selected.len().to_string(),
            r.confirmed.len().to_string(),
            r.confirmed_valid.to_string(),
            r.wrong_confirmations.to_string(),
            r.expired.to_string(),
            r.demoted.to_string(),
            real(r.storage_fraction),
            real(gini(&r.credits)),
            real(entropy(&r.credits)),
            r.backlog_in.to_string(),
            r.depth_limit.to_string(),
            r.miners_per_tx.to_string(),
            real(r.reliability),
            u8::from(r.degraded).to_string(),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn summary_fields(s: &Summary) -> Vec<String> {
    vec![
        s.scenario.clone(),
        s.seed.to_string(),
        s.epochs.to_string(),
        real(s.mean_miners),
        real(s.throughput),
        real(s.normalized_throughput),
        real(s.wrong_confirmations),
        real(s.mean_gini),
        real(s.mean_entropy),
        real(s.final_storage_fraction),
        real(s.mean_miners_per_tx),
        real(s.mean_backlog),
    ]
}

pub fn summary_csv(rows: &[Summary]) -> String {
    let mut out = header(SUMMARY_COLUMNS);
    out.push('\n');
    for s in rows {
        out.push_str(&summary_fields(s).join(","));
        out.push('\n');
    }
    out
}

pub fn sweep_csv(axis: &str, rows: &[(f64, Summary)]) -> String {
    let mut out = format!("axis,value,{}\n", header(SUMMARY_COLUMNS));
    for (value, s) in rows {
        out.push_str(&format!("{axis},{},{}\n", real(*value), summary_fields(s).join(",")));
    }
    out
}

/// Column documentation for every file kind, itself a CSV.
pub fn schema_csv() -> String {
    let mut out = String::from("file,column,description\n");
    let mut add = |file: &str, cols: &[(&str, &str)]| {
        for (c, d) in cols {
            out.push_str(&format!("{file},{c},\"{d}\"\n"));
        }
    };
    add("<scenario>_seed<seed>.csv", EPOCH_COLUMNS);
    add("<scenario>_summary.csv", SUMMARY_COLUMNS);
    add("<scenario>_sweep.csv", &[("axis", "swept parameter"), ("value", "parameter value of the run")]);
    add("<scenario>_sweep.csv", SUMMARY_COLUMNS);
    out
}
