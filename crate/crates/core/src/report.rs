// SPDX-License-Identifier: Apache-2.0

//! CSV and JSONL report emission.
//!
//! Every CSV report opens with `#`-prefixed provenance lines (report kind
//! and the resolved configuration as JSON), followed by a header row whose
//! columns depend only on the configuration.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::EstimateBundle;
use crate::evaluation::{DetectionReport, Evaluation, PooledErrorReport, WinRateReport};
use crate::record::META_KEY;

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_preamble<W: Write>(w: &mut W, kind: &str, meta: &serde_json::Value) -> Result<()> {
    writeln!(w, "# report: {kind}")?;
    writeln!(w, "# meta: {}", serde_json::to_string(meta)?)?;
    Ok(())
}

/// One row per estimator; `mae_n<k>`, `rmse_n<k>`, `count_n<k>` per size.
pub fn write_error_report<W: Write>(mut w: W, r: &PooledErrorReport, meta: &serde_json::Value) -> Result<()> {
    write_preamble(&mut w, "pooled_error", meta)?;
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["estimator".to_string()];
    for n in &r.n_values {
        header.extend([format!("mae_n{n}"), format!("rmse_n{n}"), format!("count_n{n}")]);
    }
    csv.write_record(&header)?;
    for (e, row) in r.estimators.iter().zip(&r.cells) {
        let mut rec = vec![e.name().to_string()];
        for c in row {
            rec.extend([fmt_opt(c.mae()), fmt_opt(c.rmse()), c.count.to_string()]);
        }
        csv.write_record(&rec)?;
    }
    csv.flush()?;
    Ok(())
}

/// Trial-averaged absolute error per (query, n); input for `winrates`.
pub fn write_query_errors<W: Write>(mut w: W, eval: &Evaluation, meta: &serde_json::Value) -> Result<()> {
    write_preamble(&mut w, "query_errors", meta)?;
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["query_id".to_string(), "n".to_string()];
    header.extend(eval.report.estimators.iter().map(|e| e.name().to_string()));
    csv.write_record(&header)?;
    for q in &eval.query_errors {
        let mut rec = vec![q.query_id.clone(), q.n.to_string()];
        rec.extend(q.errors.iter().map(|&e| fmt_opt(e)));
        csv.write_record(&rec)?;
    }
    csv.flush()?;
    Ok(())
}

/// Read per-item error columns. `query_id` and `n` columns are ignored;
/// empty cells become `None`.
pub fn read_error_columns<R: Read>(r: R) -> Result<Vec<(String, Vec<Option<f64>>)>> {
    let mut csv = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let headers = csv.headers()?.clone();
    let keep: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| *h != "query_id" && *h != "n")
        .map(|(i, h)| (i, h.to_string()))
        .collect();
    let mut cols: Vec<(String, Vec<Option<f64>>)> =
        keep.iter().map(|(_, h)| (h.clone(), Vec::new())).collect();
    for (row_no, rec) in csv.records().enumerate() {
        let rec = rec?;
        for ((i, name), (_, col)) in keep.iter().zip(cols.iter_mut()) {
            let cell = rec.get(*i).unwrap_or("").trim();
            let v = if cell.is_empty() {
                None
            } else {
                Some(cell.parse::<f64>().map_err(|e| Error::Record {
                    line: row_no + 2,
                    message: format!("column {name}: {e}"),
                })?)
            };
            col.push(v);
        }
    }
    Ok(cols)
}

pub fn write_winrate_report<W: Write>(mut w: W, r: &WinRateReport, meta: &serde_json::Value) -> Result<()> {
    write_preamble(&mut w, "win_rates", meta)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["estimator", "baseline", "wins", "losses", "ties", "n_valid", "win_rate_pct"])?;
    for (name, wr) in &r.rows {
        let rate = wr
            .rate()
            .map(|x| format!("{:.4}", x * 100.0))
            .unwrap_or_else(|| "n/a".into());
        csv.write_record([
            r.reference.clone(),
            name.clone(),
            wr.wins.to_string(),
            wr.losses.to_string(),
            wr.ties.to_string(),
            wr.n_valid().to_string(),
            rate,
        ])?;
    }
    csv.flush()?;
    Ok(())
}

/// Long format: one row per (n, score, dataset) plus a `mean` row per
/// (n, score) whose `mean` column averages every listed AUC.
pub fn write_detection_report<W: Write>(mut w: W, r: &DetectionReport, meta: &serde_json::Value) -> Result<()> {
    write_preamble(&mut w, "detection", meta)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["n", "score", "dataset", "auc_s", "auc_r", "mean", "queries"])?;
    let avg = |v: Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    for row in &r.rows {
        let n = row.n.map(|n| n.to_string()).unwrap_or_else(|| "all".into());
        for d in &row.datasets {
            let both: Vec<f64> = [d.auc_s, d.auc_r].into_iter().flatten().collect();
            csv.write_record([
                n.clone(),
                row.score.name().to_string(),
                d.dataset.clone(),
                fmt_opt(d.auc_s),
                fmt_opt(d.auc_r),
                fmt_opt(avg(both)),
                d.queries.to_string(),
            ])?;
        }
        csv.write_record([
            n.clone(),
            row.score.name().to_string(),
            "mean".to_string(),
            fmt_opt(avg(row.datasets.iter().filter_map(|d| d.auc_s).collect())),
            fmt_opt(avg(row.datasets.iter().filter_map(|d| d.auc_r).collect())),
            fmt_opt(row.mean()),
            row.datasets.iter().map(|d| d.queries).sum::<usize>().to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

/// Scalar columns of an [`EstimateBundle`], in CSV order.
pub const BUNDLE_COLUMNS: [&str; 23] = [
    "query_id",
    "n",
    "k_obs",
    "missing_mass_gt",
    "coverage_gt",
    "missing_mass_ggt",
    "coverage_ggt",
    "s_plugin",
    "s_gt",
    "s_ggt",
    "s_soft_eigv",
    "u_eigv",
    "s_hybrid_gt",
    "s_hybrid_ggt",
    "fusion_branch",
    "s_hybrid",
    "s_final",
    "h_shade",
    "h_hybrid",
    "p_star_clamped",
    "h_plugin",
    "dse",
    "numsets",
];

pub fn write_bundles_csv<W: Write>(
    mut w: W,
    rows: &[(String, EstimateBundle)],
    meta: &serde_json::Value,
) -> Result<()> {
    write_preamble(&mut w, "estimates", meta)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(BUNDLE_COLUMNS)?;
    for (id, b) in rows {
        let branch = match b.fusion_branch {
            Some(crate::estimate::FusionBranch::Convex) => "convex",
            Some(crate::estimate::FusionBranch::LogSumExp) => "log_sum_exp",
            None => "",
        };
        csv.write_record([
            id.clone(),
            b.n.to_string(),
            b.k_obs.to_string(),
            b.missing_mass_gt.to_string(),
            b.coverage_gt.to_string(),
            b.missing_mass_ggt.to_string(),
            b.coverage_ggt.to_string(),
            b.s_plugin.to_string(),
            b.s_gt.to_string(),
            b.s_ggt.to_string(),
            fmt_opt(b.s_soft_eigv),
            fmt_opt(b.u_eigv),
            fmt_opt(b.s_hybrid_gt),
            fmt_opt(b.s_hybrid_ggt),
            branch.to_string(),
            fmt_opt(b.s_hybrid),
            fmt_opt(b.s_final),
            fmt_opt(b.h_shade),
            fmt_opt(b.h_hybrid),
            b.p_star_clamped.to_string(),
            b.h_plugin.to_string(),
            b.dse.to_string(),
            b.numsets.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct BundleLine<'a> {
    query_id: &'a str,
    #[serde(flatten)]
    bundle: &'a EstimateBundle,
}

pub fn write_bundles_jsonl<W: Write>(
    mut w: W,
    rows: &[(String, EstimateBundle)],
    meta: &serde_json::Value,
) -> Result<()> {
    serde_json::to_writer(&mut w, &serde_json::json!({ META_KEY: meta }))?;
    writeln!(w)?;
    for (id, b) in rows {
        serde_json::to_writer(&mut w, &BundleLine { query_id: id, bundle: b })?;
        writeln!(w)?;
    }
    Ok(())
}

/// Everything after the `#` preamble lines.
pub fn csv_body(text: &str) -> &str {
    let mut rest = text;
    while rest.starts_with('#') {
        rest = rest.split_once('\n').map(|(_, r)| r).unwrap_or("");
    }
    rest
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::{win_rate, WinRate};

    #[test]
    fn error_columns_round_trip() {
        let text = "# report: query_errors\nquery_id,n,shade,plugin\nq1,5,1.5,2\nq2,5,,3\n";
        let cols = read_error_columns(text.as_bytes()).unwrap();
        assert_eq!(cols[0], ("shade".to_string(), vec![Some(1.5), None]));
        assert_eq!(cols[1], ("plugin".to_string(), vec![Some(2.0), Some(3.0)]));
    }

    #[test]
    fn non_numeric_error_cell() {
        let text = "shade,plugin\n1,abc\n";
        assert!(matches!(read_error_columns(text.as_bytes()), Err(Error::Record { line: 2, .. })));
    }

    #[test]
    fn winrate_csv_marks_undecided_rows() {
        let r = WinRateReport {
            reference: "shade".into(),
            rows: vec![
                ("plugin".into(), WinRate { wins: 3372, losses: 1176, ties: 1008 }),
                ("gt".into(), win_rate(&[1.0], &[1.0]).unwrap()),
            ],
        };
        let mut buf = Vec::new();
        write_winrate_report(&mut buf, &r, &serde_json::json!({})).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let body = csv_body(&text);
        assert_eq!(
            body,
            "estimator,baseline,wins,losses,ties,n_valid,win_rate_pct\n\
             shade,plugin,3372,1176,1008,5556,74.1425\n\
             shade,gt,0,0,1,1,n/a\n"
        );
    }
}
