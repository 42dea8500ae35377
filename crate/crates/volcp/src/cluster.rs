//! Agglomerative average-linkage clustering of a dissimilarity matrix.
//!
//! Starting from singleton clusters, the pair of active clusters at minimal
//! average distance is merged repeatedly until one cluster remains. The
//! average distance between merged clusters is maintained with the exact
//! update `d(u+v, w) = (|u| d(u,w) + |v| d(v,w)) / (|u| + |v|)`, which equals
//! the mean over all cross pairs of the original matrix. Ties are broken
//! deterministically by the lexicographically smallest id pair, so the tree
//! is a pure function of the input matrix.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::metric::DissimilarityMatrix;
use crate::{Error, Result};

/// Slack for the monotone-heights check: average linkage is monotone in
/// exact arithmetic, so anything beyond float rounding is a real defect.
const HEIGHT_SLACK: f64 = 1e-12;

/// One merge step: `left` and `right` are cluster ids (leaves are
/// `0..m-1`, the cluster created by merge `i` has id `m + i`), `height` is
/// the average distance at which they merged, `size` the resulting leaf
/// count. `left` is always the child whose subtree contains the smallest
/// original leaf index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

/// The full merge history of an average-linkage run over `m` leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    m: usize,
    merges: Vec<Merge>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DendrogramDoc {
    m: usize,
    merges: Vec<(usize, usize, f64, usize)>,
}

impl Dendrogram {
    /// Validates and assembles a merge history. Checks id ranges, single
    /// use of every child, size bookkeeping, and monotone finite heights.
    pub fn from_merges(m: usize, merges: Vec<Merge>) -> Result<Self> {
        if m < 2 {
            return Err(Error::input(format!("dendrogram needs >= 2 leaves; got {m}")));
        }
        if merges.len() != m - 1 {
            return Err(Error::input(format!(
                "expected {} merges for {m} leaves, got {}",
                m - 1,
                merges.len()
            )));
        }
        let mut size = vec![0usize; 2 * m - 1];
        let mut used = vec![false; 2 * m - 1];
        for s in size.iter_mut().take(m) {
            *s = 1;
        }
        let mut prev_height = 0.0f64;
        for (i, mg) in merges.iter().enumerate() {
            let new_id = m + i;
            if mg.left == mg.right || mg.left >= new_id || mg.right >= new_id {
                return Err(Error::input(format!(
                    "merge {i} references invalid children {} and {}",
                    mg.left, mg.right
                )));
            }
            if used[mg.left] || used[mg.right] {
                return Err(Error::input(format!("merge {i} reuses an already merged cluster")));
            }
            used[mg.left] = true;
            used[mg.right] = true;
            if !mg.height.is_finite() || mg.height < 0.0 {
                return Err(Error::input(format!("merge {i} has bad height {}", mg.height)));
            }
            if mg.height < prev_height - HEIGHT_SLACK * prev_height.abs().max(1.0) {
                return Err(Error::input(format!(
                    "heights must be nondecreasing; merge {i} at {} after {}",
                    mg.height, prev_height
                )));
            }
            prev_height = prev_height.max(mg.height);
            let want = size[mg.left] + size[mg.right];
            if mg.size != want {
                return Err(Error::input(format!(
                    "merge {i} records size {}, children sum to {want}",
                    mg.size
                )));
            }
            size[new_id] = want;
        }
        Ok(Dendrogram { m, merges })
    }

    /// Number of leaves.
    pub fn leaves(&self) -> usize {
        self.m
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// Leaf indices in dendrogram drawing order: depth-first, left child
    /// first. Because the left child always holds the smallest leaf of the
    /// pair, the order is deterministic.
    pub fn leaf_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.m);
        let mut stack = vec![2 * self.m - 2];
        while let Some(id) = stack.pop() {
            if id < self.m {
                order.push(id);
            } else {
                let mg = &self.merges[id - self.m];
                // Right is pushed first so left is visited first.
                stack.push(mg.right);
                stack.push(mg.left);
            }
        }
        order
    }

    /// Cluster labels after cutting the tree into `k` clusters: the last
    /// `k - 1` merges are undone. Labels are `0..k-1`, assigned by first
    /// appearance along [`Dendrogram::leaf_order`].
    pub fn cut(&self, k: usize) -> Result<Vec<usize>> {
        if k == 0 || k > self.m {
            return Err(Error::input(format!(
                "cut must produce between 1 and {} clusters; got {k}",
                self.m
            )));
        }
        let mut parent: Vec<usize> = (0..2 * self.m - 1).collect();
        for (i, mg) in self.merges.iter().take(self.m - k).enumerate() {
            parent[mg.left] = self.m + i;
            parent[mg.right] = self.m + i;
        }
        let root_of = |mut id: usize| {
            while parent[id] != id {
                id = parent[id];
            }
            id
        };
        let mut label_of_root = vec![usize::MAX; 2 * self.m - 1];
        let mut next = 0usize;
        let mut labels = vec![0usize; self.m];
        for leaf in self.leaf_order() {
            let r = root_of(leaf);
            if label_of_root[r] == usize::MAX {
                label_of_root[r] = next;
                next += 1;
            }
            labels[leaf] = label_of_root[r];
        }
        debug_assert_eq!(next, k);
        Ok(labels)
    }

    /// JSON layout: `{"m": 3, "merges": [[0,1,1.0,2],[3,2,5.0,3]]}`.
    pub fn to_json_writer(&self, mut w: impl Write) -> Result<()> {
        let doc = DendrogramDoc {
            m: self.m,
            merges: self.merges.iter().map(|mg| (mg.left, mg.right, mg.height, mg.size)).collect(),
        };
        serde_json::to_writer(&mut w, &doc)
            .map_err(|e| Error::input(format!("dendrogram encode failed: {e}")))?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn from_json_reader(r: impl Read) -> Result<Self> {
        let doc: DendrogramDoc = serde_json::from_reader(r)
            .map_err(|e| Error::input(format!("bad dendrogram JSON: {e}")))?;
        let merges = doc
            .merges
            .into_iter()
            .map(|(left, right, height, size)| Merge { left, right, height, size })
            .collect();
        Dendrogram::from_merges(doc.m, merges)
    }
}

/// Runs average-linkage clustering over the full matrix. Requires at least
/// two series.
pub fn average_linkage(dissim: &DissimilarityMatrix) -> Result<Dendrogram> {
    let m = dissim.size();
    if m < 2 {
        return Err(Error::input(format!("clustering needs >= 2 series; got {m}")));
    }
    let total = 2 * m - 1;
    // Distance table over all ids that will ever exist; row-major.
    let mut d = vec![0.0f64; total * total];
    for i in 0..m {
        for j in 0..m {
            d[i * total + j] = dissim.value(i, j);
        }
    }
    let mut active: Vec<usize> = (0..m).collect();
    let mut size = vec![1usize; total];
    let mut min_leaf: Vec<usize> = (0..total).collect();
    let mut merges = Vec::with_capacity(m - 1);
    for step in 0..m - 1 {
        // Scan active pairs in lexicographic id order; strict `<` keeps the
        // first minimum, which is the tie-break rule.
        let mut best: Option<(usize, usize, f64)> = None;
        for (ai, &i) in active.iter().enumerate() {
            for &j in &active[ai + 1..] {
                let dij = d[i * total + j];
                if best.is_none_or(|(_, _, b)| dij < b) {
                    best = Some((i, j, dij));
                }
            }
        }
        let (i, j, height) = best.expect("at least two active clusters");
        let new_id = m + step;
        for &w in &active {
            if w == i || w == j {
                continue;
            }
            let dw = (size[i] as f64 * d[i * total + w] + size[j] as f64 * d[j * total + w])
                / (size[i] + size[j]) as f64;
            d[new_id * total + w] = dw;
            d[w * total + new_id] = dw;
        }
        size[new_id] = size[i] + size[j];
        min_leaf[new_id] = min_leaf[i].min(min_leaf[j]);
        let (left, right) = if min_leaf[i] <= min_leaf[j] { (i, j) } else { (j, i) };
        merges.push(Merge { left, right, height, size: size[new_id] });
        active.retain(|&x| x != i && x != j);
        active.push(new_id);
    }
    Dendrogram::from_merges(m, merges)
}

/// Writes `label,cluster` rows pairing each series label with its cluster
/// id from a cut.
pub fn write_clusters_csv(labels: &[String], assignment: &[usize], w: impl Write) -> Result<()> {
    if labels.len() != assignment.len() {
        return Err(Error::input(format!(
            "{} labels vs {} assignments",
            labels.len(),
            assignment.len()
        )));
    }
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["label", "cluster"]).map_err(|e| Error::input(format!("csv error: {e}")))?;
    for (label, cl) in labels.iter().zip(assignment) {
        wtr.write_record([label.as_str(), &cl.to_string()])
            .map_err(|e| Error::input(format!("csv error: {e}")))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_clusters_csv(r: impl Read) -> Result<Vec<(String, usize)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
    let mut rows = Vec::new();
    let mut records = rdr.records();
    let header = records
        .next()
        .transpose()
        .map_err(|e| Error::input(format!("csv error: {e}")))?
        .ok_or_else(|| Error::input("cluster CSV is empty".to_string()))?;
    if header.len() != 2 || &header[0] != "label" || &header[1] != "cluster" {
        return Err(Error::input("cluster CSV header must be `label,cluster`".to_string()));
    }
    for rec in records {
        let rec = rec.map_err(|e| Error::input(format!("csv error: {e}")))?;
        if rec.len() != 2 {
            return Err(Error::input("cluster CSV rows must have 2 fields".to_string()));
        }
        let cl: usize =
            rec[1].parse().map_err(|_| Error::input(format!("bad cluster id {:?}", &rec[1])))?;
        rows.push((rec[0].to_string(), cl));
    }
    Ok(rows)
}
