//! Per-date output rows produced by a filtering run and their file
//! formats. Every writer has a matching reader so outputs can be consumed
//! programmatically and round-trip exactly.

use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::filter::ParamSummary;
use crate::metric::SparsePmf;
use crate::{fmt_f64, Error, Result};

/// One row of the change-point trace: how many steps lie between the
/// current time and the most probable last change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MapTraceRow {
    pub date: NaiveDate,
    pub gap: usize,
}

/// One row of parameter summaries. The mean summary is present exactly
/// when the model carries a mean term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamsRow {
    pub date: NaiveDate,
    pub mu: Option<ParamSummary>,
    pub alpha: ParamSummary,
    pub log_sigma: ParamSummary,
}

/// One row of the one-step-ahead predictive interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictiveRow {
    pub date: NaiveDate,
    pub lo: f64,
    pub hi: f64,
}

/// The full posterior over the most recent change-point time, frozen at
/// one date.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSnapshot {
    pub date: NaiveDate,
    pub t: usize,
    pub pmf: SparsePmf,
}

fn csv_err(e: csv::Error) -> Error {
    Error::input(format!("csv error: {e}"))
}

fn fmt_date(d: NaiveDate) -> String {
    d.format("%Y-%m-%d").to_string()
}

fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|_| Error::input(format!("bad date {s:?}; expected YYYY-MM-DD")))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::input(format!("bad float {s:?}")))
}

/// `date,gap` with one row per filter step.
pub fn write_map_trace(rows: &[MapTraceRow], w: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["date", "gap"]).map_err(csv_err)?;
    for row in rows {
        wtr.write_record([fmt_date(row.date), row.gap.to_string()]).map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_map_trace(r: impl Read) -> Result<Vec<MapTraceRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
    let mut records = rdr.records();
    let header = records
        .next()
        .transpose()
        .map_err(csv_err)?
        .ok_or_else(|| Error::input("trace CSV is empty".to_string()))?;
    if header.len() != 2 || &header[0] != "date" || &header[1] != "gap" {
        return Err(Error::input("trace CSV header must be `date,gap`".to_string()));
    }
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 2 {
            return Err(Error::input("trace CSV rows must have 2 fields".to_string()));
        }
        let gap: usize =
            rec[1].parse().map_err(|_| Error::input(format!("bad gap {:?}", &rec[1])))?;
        rows.push(MapTraceRow { date: parse_date(&rec[0])?, gap });
    }
    Ok(rows)
}

const PARAM_COLS_MU: [&str; 10] = [
    "date",
    "mu",
    "mu_lo",
    "mu_hi",
    "alpha",
    "alpha_lo",
    "alpha_hi",
    "log_sigma",
    "log_sigma_lo",
    "log_sigma_hi",
];
const PARAM_COLS_NO_MU: [&str; 7] =
    ["date", "alpha", "alpha_lo", "alpha_hi", "log_sigma", "log_sigma_lo", "log_sigma_hi"];

/// Point and interval columns per parameter; the mean columns appear only
/// when the rows carry a mean summary (all rows must agree).
pub fn write_params(rows: &[ParamsRow], w: impl Write) -> Result<()> {
    let with_mu = match rows.first() {
        Some(first) => first.mu.is_some(),
        None => return Err(Error::input("no parameter rows to write".to_string())),
    };
    if rows.iter().any(|r| r.mu.is_some() != with_mu) {
        return Err(Error::input("all rows must agree on whether the mean is present".to_string()));
    }
    let mut wtr = csv::Writer::from_writer(w);
    if with_mu {
        wtr.write_record(PARAM_COLS_MU).map_err(csv_err)?;
    } else {
        wtr.write_record(PARAM_COLS_NO_MU).map_err(csv_err)?;
    }
    for row in rows {
        let mut rec = vec![fmt_date(row.date)];
        if let Some(mu) = row.mu {
            rec.extend([fmt_f64(mu.point), fmt_f64(mu.lo), fmt_f64(mu.hi)]);
        }
        for s in [row.alpha, row.log_sigma] {
            rec.extend([fmt_f64(s.point), fmt_f64(s.lo), fmt_f64(s.hi)]);
        }
        wtr.write_record(&rec).map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_params(r: impl Read) -> Result<Vec<ParamsRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
    let mut records = rdr.records();
    let header = records
        .next()
        .transpose()
        .map_err(csv_err)?
        .ok_or_else(|| Error::input("params CSV is empty".to_string()))?;
    let with_mu = if header.iter().eq(PARAM_COLS_MU) {
        true
    } else if header.iter().eq(PARAM_COLS_NO_MU) {
        false
    } else {
        return Err(Error::input("unrecognized params CSV header".to_string()));
    };
    let want_len = if with_mu { 10 } else { 7 };
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != want_len {
            return Err(Error::input(format!(
                "params CSV rows must have {want_len} fields; got {}",
                rec.len()
            )));
        }
        let date = parse_date(&rec[0])?;
        let mut vals = Vec::with_capacity(want_len - 1);
        for field in rec.iter().skip(1) {
            vals.push(parse_f64(field)?);
        }
        let summary = |chunk: &[f64]| ParamSummary { point: chunk[0], lo: chunk[1], hi: chunk[2] };
        let (mu, rest) =
            if with_mu { (Some(summary(&vals[0..3])), &vals[3..]) } else { (None, &vals[..]) };
        rows.push(ParamsRow {
            date,
            mu,
            alpha: summary(&rest[0..3]),
            log_sigma: summary(&rest[3..6]),
        });
    }
    Ok(rows)
}

/// `date,pred_lo,pred_hi`: the central predictive interval for the next
/// return, dated by the observation it conditions on.
pub fn write_predictive(rows: &[PredictiveRow], w: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["date", "pred_lo", "pred_hi"]).map_err(csv_err)?;
    for row in rows {
        wtr.write_record([fmt_date(row.date), fmt_f64(row.lo), fmt_f64(row.hi)])
            .map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_predictive(r: impl Read) -> Result<Vec<PredictiveRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
    let mut records = rdr.records();
    let header = records
        .next()
        .transpose()
        .map_err(csv_err)?
        .ok_or_else(|| Error::input("predictive CSV is empty".to_string()))?;
    if header.len() != 3
        || &header[0] != "date"
        || &header[1] != "pred_lo"
        || &header[2] != "pred_hi"
    {
        return Err(Error::input(
            "predictive CSV header must be `date,pred_lo,pred_hi`".to_string(),
        ));
    }
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 3 {
            return Err(Error::input("predictive CSV rows must have 3 fields".to_string()));
        }
        rows.push(PredictiveRow {
            date: parse_date(&rec[0])?,
            lo: parse_f64(&rec[1])?,
            hi: parse_f64(&rec[2])?,
        });
    }
    Ok(rows)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotDoc {
    date: String,
    t: usize,
    support: Vec<usize>,
    probs: Vec<f64>,
}

impl PosteriorSnapshot {
    /// JSON layout: `{"date":"2020-06-01","t":104,"support":[...],"probs":[...]}`.
    pub fn to_json_writer(&self, mut w: impl Write) -> Result<()> {
        let doc = SnapshotDoc {
            date: fmt_date(self.date),
            t: self.t,
            support: self.pmf.support().to_vec(),
            probs: self.pmf.probs().to_vec(),
        };
        serde_json::to_writer(&mut w, &doc)
            .map_err(|e| Error::input(format!("snapshot encode failed: {e}")))?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn from_json_reader(r: impl Read) -> Result<Self> {
        let doc: SnapshotDoc = serde_json::from_reader(r)
            .map_err(|e| Error::input(format!("bad snapshot JSON: {e}")))?;
        let pmf = SparsePmf::new(doc.support, doc.probs)?;
        if let Some(&last) = pmf.support().last() {
            if last >= doc.t {
                return Err(Error::input(format!(
                    "snapshot support {last} is not before its time {}",
                    doc.t
                )));
            }
        }
        Ok(PosteriorSnapshot { date: parse_date(&doc.date)?, t: doc.t, pmf })
    }
}
