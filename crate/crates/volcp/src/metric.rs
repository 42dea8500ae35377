//! Wasserstein-1 distance between change-point posteriors and the pairwise
//! dissimilarity matrix built from it.
//!
//! Posteriors are sparse pmfs on nonnegative integer times. For two such
//! pmfs the Wasserstein-1 distance reduces to the sum of absolute CDF
//! differences over the integers, computed here in one merged sweep of the
//! two supports: between consecutive union support points the CDF difference
//! is constant, so each stretch contributes `|F_p - F_q| * gap`. The sweep
//! is O(|support_p| + |support_q|) and touches no grid points outside the
//! supports.

use std::io::{Read, Write};

use crate::{fmt_f64, Error, Result};

/// Tolerated drift of a pmf's total mass from 1 before it is rejected
/// rather than renormalized.
pub const PMF_MASS_TOL: f64 = 1e-9;

/// A probability mass function on nonnegative integers with sparse support.
///
/// Support points are strictly increasing, every probability is positive,
/// and the probabilities sum to 1: construction renormalizes drift up to
/// [`PMF_MASS_TOL`] and rejects anything larger.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePmf {
    support: Vec<usize>,
    probs: Vec<f64>,
}

impl SparsePmf {
    pub fn new(support: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::input("pmf support must be non-empty".to_string()));
        }
        if support.len() != probs.len() {
            return Err(Error::input(format!(
                "support and probs lengths differ: {} vs {}",
                support.len(),
                probs.len()
            )));
        }
        for w in support.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::input("pmf support must be strictly increasing".to_string()));
            }
        }
        let mut sum = 0.0;
        for &p in &probs {
            if !p.is_finite() || p <= 0.0 {
                return Err(Error::input(format!(
                    "pmf probabilities must be finite and > 0; got {p}"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > PMF_MASS_TOL {
            return Err(Error::input(format!(
                "pmf mass {sum} deviates from 1 by more than {PMF_MASS_TOL:e}"
            )));
        }
        let probs = probs.into_iter().map(|p| p / sum).collect();
        Ok(SparsePmf { support, probs })
    }

    /// A unit point mass at `s`.
    pub fn delta(s: usize) -> Self {
        SparsePmf { support: vec![s], probs: vec![1.0] }
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a pmf always carries at least one support point
    }
}

/// Wasserstein-1 distance between two pmfs on the nonnegative integers.
///
/// Merged-support sweep over the CDF difference; exact up to float rounding.
pub fn w1(p: &SparsePmf, q: &SparsePmf) -> f64 {
    let (sp, pp) = (p.support(), p.probs());
    let (sq, pq) = (q.support(), q.probs());
    let mut i = 0;
    let mut j = 0;
    let mut cdf_p = 0.0f64;
    let mut cdf_q = 0.0f64;
    let mut prev: Option<usize> = None;
    let mut total = 0.0;
    while i < sp.len() || j < sq.len() {
        let s = match (sp.get(i), sq.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        if let Some(prev) = prev {
            total += (s - prev) as f64 * (cdf_p - cdf_q).abs();
        }
        if i < sp.len() && sp[i] == s {
            cdf_p += pp[i];
            i += 1;
        }
        if j < sq.len() && sq[j] == s {
            cdf_q += pq[j];
            j += 1;
        }
        prev = Some(s);
    }
    total
}

/// Symmetric nonnegative dissimilarity matrix with zero diagonal, stored
/// row-major with its series labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    labels: Vec<String>,
    values: Vec<f64>,
}

impl DissimilarityMatrix {
    pub fn new(labels: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let m = labels.len();
        if m == 0 {
            return Err(Error::input("dissimilarity matrix needs at least one label".to_string()));
        }
        if values.len() != m * m {
            return Err(Error::input(format!("expected {m}x{m} values, got {}", values.len())));
        }
        let mut sorted = labels.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::input("labels must be unique".to_string()));
        }
        for i in 0..m {
            let d_ii = values[i * m + i];
            if d_ii != 0.0 {
                return Err(Error::input(format!(
                    "diagonal entry ({i}, {i}) must be 0; got {d_ii}"
                )));
            }
            for j in 0..m {
                let v = values[i * m + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::input(format!(
                        "entry ({i}, {j}) must be finite and >= 0; got {v}"
                    )));
                }
                let vt = values[j * m + i];
                if (v - vt).abs() > 1e-12 * v.abs().max(vt.abs()).max(1.0) {
                    return Err(Error::input(format!(
                        "matrix not symmetric at ({i}, {j}): {v} vs {vt}"
                    )));
                }
            }
        }
        Ok(DissimilarityMatrix { labels, values })
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size() + j]
    }

    /// The matrix with rows, columns, and labels permuted by `order`
    /// (`order[k]` is the original index shown at position `k`).
    pub fn permuted(&self, order: &[usize]) -> Result<DissimilarityMatrix> {
        let m = self.size();
        if order.len() != m {
            return Err(Error::input(format!(
                "permutation length {} does not match matrix size {m}",
                order.len()
            )));
        }
        let mut seen = vec![false; m];
        for &k in order {
            if k >= m || seen[k] {
                return Err(Error::input("order is not a permutation".to_string()));
            }
            seen[k] = true;
        }
        let labels = order.iter().map(|&k| self.labels[k].clone()).collect();
        let mut values = Vec::with_capacity(m * m);
        for &r in order {
            for &c in order {
                values.push(self.value(r, c));
            }
        }
        DissimilarityMatrix::new(labels, values)
    }

    /// CSV layout: header `label,<l1>,...,<lm>`, then one row per series
    /// with its label and `m` full-precision values.
    pub fn to_csv_writer(&self, w: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let m = self.size();
        let mut header = Vec::with_capacity(m + 1);
        header.push("label".to_string());
        header.extend(self.labels.iter().cloned());
        wtr.write_record(&header).map_err(csv_err)?;
        for i in 0..m {
            let mut row = Vec::with_capacity(m + 1);
            row.push(self.labels[i].clone());
            for j in 0..m {
                row.push(fmt_f64(self.value(i, j)));
            }
            wtr.write_record(&row).map_err(csv_err)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn from_csv_reader(r: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
        let mut records = rdr.records();
        let header = match records.next() {
            Some(rec) => rec.map_err(csv_err)?,
            None => return Err(Error::input("dissimilarity CSV is empty".to_string())),
        };
        if header.len() < 2 || &header[0] != "label" {
            return Err(Error::input(
                "dissimilarity CSV header must be `label,<series...>`".to_string(),
            ));
        }
        let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let m = labels.len();
        let mut values = Vec::with_capacity(m * m);
        let mut row_count = 0usize;
        for rec in records {
            let rec = rec.map_err(csv_err)?;
            if row_count == m {
                return Err(Error::input(format!("expected {m} data rows, found more")));
            }
            if rec.len() != m + 1 {
                return Err(Error::input(format!(
                    "row {} has {} fields, expected {}",
                    row_count + 2,
                    rec.len(),
                    m + 1
                )));
            }
            if &rec[0] != labels[row_count].as_str() {
                return Err(Error::input(format!(
                    "row label {:?} does not match header label {:?}",
                    &rec[0], labels[row_count]
                )));
            }
            for field in rec.iter().skip(1) {
                let v: f64 = field
                    .parse()
                    .map_err(|_| Error::input(format!("bad float {field:?} in matrix")))?;
                values.push(v);
            }
            row_count += 1;
        }
        if row_count != m {
            return Err(Error::input(format!("expected {m} data rows, found {row_count}")));
        }
        DissimilarityMatrix::new(labels, values)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::input(format!("csv error: {e}"))
}

/// Pairwise Wasserstein-1 distances between labeled posteriors.
///
/// The upper triangle is computed once and mirrored, so the result is
/// symmetric to the bit, with an exactly zero diagonal.
pub fn pairwise(items: &[(String, SparsePmf)]) -> Result<DissimilarityMatrix> {
    let m = items.len();
    if m < 2 {
        return Err(Error::input(format!("pairwise distances need >= 2 series; got {m}")));
    }
    let mut values = vec![0.0; m * m];
    for i in 0..m {
        for j in (i + 1)..m {
            let d = w1(&items[i].1, &items[j].1);
            values[i * m + j] = d;
            values[j * m + i] = d;
        }
    }
    let labels = items.iter().map(|(l, _)| l.clone()).collect();
    DissimilarityMatrix::new(labels, values)
}
