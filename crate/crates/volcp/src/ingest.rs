//! Price table ingestion and log-return computation.
//!
//! Two input layouts are supported: wide CSV (`date,<ticker>,...`, one
//! column per series) and long CSV (`date,ticker,close`, one row per
//! observation). Both produce the same in-memory table: rows sorted by
//! date, columns in a deterministic ticker order (header order for wide,
//! first appearance for long). Missing cells are either a hard error or
//! cause the whole row to be dropped, per [`MissingPolicy`].

use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::{fmt_f64, Error, Result};

/// What to do with rows that have missing price cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    /// Any missing cell is an input error.
    #[default]
    Error,
    /// Rows with at least one missing cell are dropped and reported.
    DropRows,
}

/// Which rows were removed while loading a price table.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LoadReport {
    pub dropped_dates: Vec<NaiveDate>,
}

/// Prices for several series over a shared, strictly increasing date axis.
/// All prices are finite and strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl PriceTable {
    fn assemble(
        mut entries: Vec<(NaiveDate, Vec<Option<f64>>)>,
        tickers: Vec<String>,
        policy: MissingPolicy,
    ) -> Result<(PriceTable, LoadReport)> {
        if tickers.is_empty() {
            return Err(Error::input("price table needs at least one series".to_string()));
        }
        let mut sorted = tickers.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::input("duplicate ticker in price table".to_string()));
        }
        entries.sort_by_key(|(d, _)| *d);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::input(format!("duplicate date {}", w[0].0)));
            }
        }
        let mut report = LoadReport::default();
        let mut dates = Vec::with_capacity(entries.len());
        let mut rows = Vec::with_capacity(entries.len());
        for (date, cells) in entries {
            let missing: Vec<&String> =
                cells.iter().zip(&tickers).filter_map(|(c, t)| c.is_none().then_some(t)).collect();
            if !missing.is_empty() {
                match policy {
                    MissingPolicy::Error => {
                        return Err(Error::input(format!(
                            "missing price for {} on {date}",
                            missing[0]
                        )));
                    }
                    MissingPolicy::DropRows => {
                        report.dropped_dates.push(date);
                        continue;
                    }
                }
            }
            let row: Vec<f64> = cells.into_iter().map(|c| c.unwrap()).collect();
            for (&p, t) in row.iter().zip(&tickers) {
                if !p.is_finite() || p <= 0.0 {
                    return Err(Error::input(format!(
                        "price for {t} on {date} must be finite and > 0; got {p}"
                    )));
                }
            }
            dates.push(date);
            rows.push(row);
        }
        if dates.is_empty() {
            return Err(Error::input("price table has no complete rows".to_string()));
        }
        Ok((PriceTable { dates, tickers, rows }, report))
    }

    /// Parses the wide layout: header `date,<t1>,...,<tk>`, ISO dates,
    /// empty cells meaning missing.
    pub fn from_wide_csv(r: impl Read, policy: MissingPolicy) -> Result<(Self, LoadReport)> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
        let mut records = rdr.records();
        let header = records
            .next()
            .transpose()
            .map_err(csv_err)?
            .ok_or_else(|| Error::input("price CSV is empty".to_string()))?;
        if header.is_empty() || &header[0] != "date" {
            return Err(Error::input("price CSV header must start with `date`".to_string()));
        }
        let tickers: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut entries = Vec::new();
        for (line, rec) in records.enumerate() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != tickers.len() + 1 {
                return Err(Error::input(format!(
                    "row {} has {} fields, expected {}",
                    line + 2,
                    rec.len(),
                    tickers.len() + 1
                )));
            }
            let date = parse_date(&rec[0])?;
            let mut cells = Vec::with_capacity(tickers.len());
            for (field, ticker) in rec.iter().skip(1).zip(&tickers) {
                if field.is_empty() {
                    cells.push(None);
                } else {
                    let p: f64 = field.parse().map_err(|_| {
                        Error::input(format!("bad price {field:?} for {ticker} on {date}"))
                    })?;
                    cells.push(Some(p));
                }
            }
            entries.push((date, cells));
        }
        Self::assemble(entries, tickers, policy)
    }

    /// Parses the long layout: header `date,ticker,close`, one observation
    /// per row. Tickers are ordered by first appearance; (date, ticker)
    /// pairs must be unique; combinations never observed count as missing.
    pub fn from_long_csv(r: impl Read, policy: MissingPolicy) -> Result<(Self, LoadReport)> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
        let mut records = rdr.records();
        let header = records
            .next()
            .transpose()
            .map_err(csv_err)?
            .ok_or_else(|| Error::input("price CSV is empty".to_string()))?;
        if header.len() != 3
            || &header[0] != "date"
            || &header[1] != "ticker"
            || &header[2] != "close"
        {
            return Err(Error::input(
                "long price CSV header must be `date,ticker,close`".to_string(),
            ));
        }
        let mut tickers: Vec<String> = Vec::new();
        let mut obs: Vec<(NaiveDate, usize, f64)> = Vec::new();
        for (line, rec) in records.enumerate() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != 3 {
                return Err(Error::input(format!("row {} must have 3 fields", line + 2)));
            }
            let date = parse_date(&rec[0])?;
            let ticker = &rec[1];
            if ticker.is_empty() {
                return Err(Error::input(format!("empty ticker on row {}", line + 2)));
            }
            let col = match tickers.iter().position(|t| t == ticker) {
                Some(c) => c,
                None => {
                    tickers.push(ticker.to_string());
                    tickers.len() - 1
                }
            };
            let p: f64 = rec[2].parse().map_err(|_| {
                Error::input(format!("bad price {:?} for {ticker} on {date}", &rec[2]))
            })?;
            obs.push((date, col, p));
        }
        let mut dates: Vec<NaiveDate> = obs.iter().map(|(d, _, _)| *d).collect();
        dates.sort_unstable();
        dates.dedup();
        let k = tickers.len();
        let mut grid: Vec<Vec<Option<f64>>> = vec![vec![None; k]; dates.len()];
        for (date, col, p) in obs {
            let row = dates.binary_search(&date).expect("date must be present");
            if grid[row][col].is_some() {
                return Err(Error::input(format!(
                    "duplicate observation for {} on {date}",
                    tickers[col]
                )));
            }
            grid[row][col] = Some(p);
        }
        let entries = dates.into_iter().zip(grid).collect();
        Self::assemble(entries, tickers, policy)
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    /// Price of series `col` on row `row`.
    pub fn price(&self, row: usize, col: usize) -> f64 {
        self.rows[row][col]
    }

    pub fn num_rows(&self) -> usize {
        self.dates.len()
    }

    /// Log returns between consecutive rows: the return dated `d_{r+1}` is
    /// `ln p(d_{r+1}) - ln p(d_r)`. Needs at least two rows.
    pub fn log_returns(&self) -> Result<ReturnsTable> {
        if self.num_rows() < 2 {
            return Err(Error::input(format!(
                "need >= 2 price rows to form returns; got {}",
                self.num_rows()
            )));
        }
        let dates = self.dates[1..].to_vec();
        let rows: Vec<Vec<f64>> = self
            .rows
            .windows(2)
            .map(|w| w[1].iter().zip(&w[0]).map(|(&b, &a)| b.ln() - a.ln()).collect())
            .collect();
        ReturnsTable::new(dates, self.tickers.clone(), rows)
    }
}

/// Log returns for several series over a shared, strictly increasing date
/// axis. All values are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsTable {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl ReturnsTable {
    pub fn new(dates: Vec<NaiveDate>, tickers: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if tickers.is_empty() {
            return Err(Error::input("returns table needs at least one series".to_string()));
        }
        let mut sorted = tickers.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::input("duplicate ticker in returns table".to_string()));
        }
        if dates.is_empty() || dates.len() != rows.len() {
            return Err(Error::input(format!(
                "returns table has {} dates and {} rows",
                dates.len(),
                rows.len()
            )));
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::input("returns dates must be strictly increasing".to_string()));
        }
        for (date, row) in dates.iter().zip(&rows) {
            if row.len() != tickers.len() {
                return Err(Error::input(format!(
                    "row for {date} has {} values, expected {}",
                    row.len(),
                    tickers.len()
                )));
            }
            for (v, t) in row.iter().zip(&tickers) {
                if !v.is_finite() {
                    return Err(Error::input(format!(
                        "return for {t} on {date} must be finite; got {v}"
                    )));
                }
            }
        }
        Ok(ReturnsTable { dates, tickers, rows })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn num_rows(&self) -> usize {
        self.dates.len()
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.rows[row][col]
    }

    /// All returns of one series, oldest first.
    pub fn column(&self, col: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[col]).collect()
    }

    /// CSV layout: `date,<t1>,...,<tk>` with ISO dates and full-precision
    /// values.
    pub fn to_csv_writer(&self, w: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = Vec::with_capacity(self.tickers.len() + 1);
        header.push("date".to_string());
        header.extend(self.tickers.iter().cloned());
        wtr.write_record(&header).map_err(csv_err)?;
        for (date, row) in self.dates.iter().zip(&self.rows) {
            let mut rec = Vec::with_capacity(row.len() + 1);
            rec.push(date.format("%Y-%m-%d").to_string());
            rec.extend(row.iter().map(|&v| fmt_f64(v)));
            wtr.write_record(&rec).map_err(csv_err)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn from_csv_reader(r: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
        let mut records = rdr.records();
        let header = records
            .next()
            .transpose()
            .map_err(csv_err)?
            .ok_or_else(|| Error::input("returns CSV is empty".to_string()))?;
        if header.is_empty() || &header[0] != "date" {
            return Err(Error::input("returns CSV header must start with `date`".to_string()));
        }
        let tickers: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut dates = Vec::new();
        let mut rows = Vec::new();
        for (line, rec) in records.enumerate() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != tickers.len() + 1 {
                return Err(Error::input(format!(
                    "row {} has {} fields, expected {}",
                    line + 2,
                    rec.len(),
                    tickers.len() + 1
                )));
            }
            dates.push(parse_date(&rec[0])?);
            let row: Result<Vec<f64>> = rec
                .iter()
                .skip(1)
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| Error::input(format!("bad return {f:?} on row {}", line + 2)))
                })
                .collect();
            rows.push(row?);
        }
        ReturnsTable::new(dates, tickers, rows)
    }
}

fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|_| Error::input(format!("bad date {s:?}; expected YYYY-MM-DD")))
}

fn csv_err(e: csv::Error) -> Error {
    Error::input(format!("csv error: {e}"))
}
