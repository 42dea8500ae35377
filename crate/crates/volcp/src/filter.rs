//! Exact filtering over the time of the most recent change-point.
//!
//! The filter maintains a weighted set of [`SupportAtom`]s, one per
//! candidate change-point time `s`, each carrying the segment statistics for
//! the data observed since `s`. One [`Filter::step`] advances the posterior
//! from time `t` to `t + 1`:
//!
//! 1. a fresh atom `s = t` is born with the prior segment statistics and
//!    weight equal to the hazard-weighted mass of all existing atoms,
//! 2. every existing atom is discounted by its survival probability
//!    `1 - hazard(t - s)`,
//! 3. every atom (the fresh one included) is reweighted by its one-step
//!    predictive density at the new observation,
//! 4. every atom absorbs the observation into its statistics,
//! 5. weights are normalized in log space, and if the support now exceeds
//!    the configured cap, only the highest-probability atoms are kept
//!    (ties keep the larger `s`) and the survivors are renormalized
//!    proportionally.
//!
//! Weights live in log space throughout; the only normalization primitive is
//! log-sum-exp with max subtraction. With a cap of `n` the per-step cost is
//! O(n) regardless of how long the filter has run.

use std::cmp::Ordering;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::dist::StudentT;
use crate::metric::SparsePmf;
use crate::model::{Hyperparams, SegmentStats};
use crate::{Error, Result};

/// Distribution of the gaps between consecutive change-points, represented
/// by its CDF `G` on {1, 2, ...} with `G(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum HazardModel {
    /// `G(k) = 1 - (1-p)^k`: gaps are geometric on {1, 2, ...} and the
    /// hazard is the constant `p`.
    ShiftedGeometric { p: f64 },
    /// `G(k) = g[k]` for `k < g.len()`, constant at `g[g.len()-1]` beyond
    /// the table. A final value below 1 leaves a defective gap law whose
    /// hazard is 0 past the table; a value of 1 exhausts the support there.
    Tabulated { g: Vec<f64> },
}

impl HazardModel {
    pub fn shifted_geometric(p: f64) -> Result<Self> {
        if !p.is_finite() || p <= 0.0 || p >= 1.0 {
            return Err(Error::input(format!("hazard p must lie in (0, 1); got {p}")));
        }
        Ok(HazardModel::ShiftedGeometric { p })
    }

    pub fn tabulated(g: Vec<f64>) -> Result<Self> {
        if g.is_empty() {
            return Err(Error::input("tabulated gap CDF must be non-empty".to_string()));
        }
        if g[0] != 0.0 {
            return Err(Error::input(format!("gap CDF must start at G(0) = 0; got {}", g[0])));
        }
        for window in g.windows(2) {
            // NaN entries fail here too: they compare as incomparable.
            let ok =
                matches!(window[0].partial_cmp(&window[1]), Some(Ordering::Less | Ordering::Equal));
            if !ok {
                return Err(Error::input("gap CDF must be nondecreasing".to_string()));
            }
        }
        let last = *g.last().unwrap();
        if !last.is_finite() || last > 1.0 {
            return Err(Error::input(format!("gap CDF values must lie in [0, 1]; got {last}")));
        }
        Ok(HazardModel::Tabulated { g })
    }

    /// Gap CDF `G(k)`.
    pub fn cdf(&self, k: usize) -> f64 {
        match self {
            HazardModel::ShiftedGeometric { p } => {
                // 1 - (1-p)^k, written to stay exact at k = 0.
                if k == 0 {
                    0.0
                } else {
                    1.0 - (1.0 - p).powi(k.min(i32::MAX as usize) as i32)
                }
            }
            HazardModel::Tabulated { g } => g[k.min(g.len() - 1)],
        }
    }

    /// Conditional change probability at the given gap:
    /// `[G(gap) - G(gap-1)] / [1 - G(gap-1)]`.
    ///
    /// For the shifted geometric this is identically `p`, and the identity
    /// is used directly so the hazard stays exact at gaps where
    /// `(1-p)^gap` would underflow.
    pub fn hazard(&self, gap: usize) -> Result<f64> {
        if gap == 0 {
            return Err(Error::input("hazard is defined for gaps >= 1".to_string()));
        }
        match self {
            HazardModel::ShiftedGeometric { p } => Ok(*p),
            HazardModel::Tabulated { .. } => {
                let prev = self.cdf(gap - 1);
                let denom = 1.0 - prev;
                if denom <= 0.0 {
                    return Err(Error::numeric(format!(
                        "hazard support exhausted: gap CDF reached 1 before gap {gap}"
                    )));
                }
                Ok((self.cdf(gap) - prev) / denom)
            }
        }
    }

    /// Draws a gap by CDF inversion. `None` means the gap law is defective
    /// (tabulated CDF tops out below 1) and no further change-point occurs.
    pub fn sample_gap(&self, rng: &mut impl rand::Rng) -> Option<u64> {
        let mut u: f64 = rng.random();
        if u == 0.0 {
            u = f64::MIN_POSITIVE;
        }
        match self {
            HazardModel::ShiftedGeometric { p } => {
                let k = ((1.0 - u).ln() / (1.0 - p).ln()).ceil();
                Some((k.max(1.0)) as u64)
            }
            HazardModel::Tabulated { g } => (1..g.len()).find(|&k| g[k] >= u).map(|k| k as u64),
        }
    }
}

/// Filter configuration: segment prior, gap law, and the support cap.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub hyper: Hyperparams,
    pub hazard: HazardModel,
    /// Maximum number of atoms kept after a step. A value at least as large
    /// as the series length disables pruning entirely.
    pub max_support: usize,
}

impl FilterConfig {
    pub fn new(hyper: Hyperparams, hazard: HazardModel, max_support: usize) -> Result<Self> {
        if max_support == 0 {
            return Err(Error::input("max_support must be at least 1".to_string()));
        }
        Ok(FilterConfig { hyper, hazard, max_support })
    }
}

/// One support point of the change-point posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportAtom {
    s: usize,
    log_weight: f64,
    stats: SegmentStats,
}

impl SupportAtom {
    /// Hypothesized time of the most recent change-point.
    pub fn s(&self) -> usize {
        self.s
    }

    /// Normalized log posterior weight.
    pub fn log_weight(&self) -> f64 {
        self.log_weight
    }

    pub fn stats(&self) -> &SegmentStats {
        &self.stats
    }
}

fn log_sum_exp(xs: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Point and equal-tailed credible interval for one summarized parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSummary {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
}

///// Which parameter [`Filter::param_summary`] reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SummaryTarget {
    Mu,
    Alpha,
    /// `log sigma`, i.e. the noise variance posterior mapped through
    /// `x -> log(x) / 2`.
    LogSigma,
}

/// Online change-point filter over a single return series.
///
/// Time is indexed by the position in the return series: the filter is
/// created at `t = 0` from the first return `y_0`, and the k-th call to
/// [`Filter::step`] consumes `y_k`. After a completed step to time `t`,
/// every atom `s` has absorbed exactly `t - s` observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    config: FilterConfig,
    t: usize,
    last_y: f64,
    /// Sorted by `s` ascending; log weights normalized (log-sum-exp == 0).
    atoms: Vec<SupportAtom>,
}

impl Filter {
    /// Starts a filter at `t = 0`, conditioned on the first return `y0`.
    /// No atoms exist until the first step.
    pub fn new(y0: f64, config: FilterConfig) -> Result<Self> {
        if !y0.is_finite() {
            return Err(Error::numeric(format!("y0 must be finite; got {y0}")));
        }
        Ok(Filter { config, t: 0, last_y: y0, atoms: Vec::new() })
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn last_y(&self) -> f64 {
        self.last_y
    }

    pub fn atoms(&self) -> &[SupportAtom] {
        &self.atoms
    }

    /// Advances the posterior by one observation.
    ///
    /// Atoms whose posterior mass is exactly zero are skipped when hazards
    /// are evaluated: they contribute nothing to the change probability, and
    /// skipping them keeps an exhausted gap CDF from raising errors about
    /// hypotheses that carry no mass anyway.
    pub fn step(&mut self, y_next: f64) -> Result<()> {
        if !y_next.is_finite() {
            return Err(Error::numeric(format!("y_next must be finite; got {y_next}")));
        }
        let t = self.t;
        if t == 0 {
            // By convention the change-point at time 0 is certain, so the
            // first step creates the single atom s = 0 with weight 1.
            self.atoms.push(SupportAtom {
                s: 0,
                log_weight: 0.0,
                stats: SegmentStats::new(&self.config.hyper),
            });
        } else {
            let hazard = &self.config.hazard;
            let mut birth_terms = Vec::with_capacity(self.atoms.len());
            for atom in &mut self.atoms {
                if atom.log_weight == f64::NEG_INFINITY {
                    continue;
                }
                let h = hazard.hazard(t - atom.s)?;
                birth_terms.push(atom.log_weight + h.ln());
                atom.log_weight += (-h).ln_1p();
            }
            let birth_lw = log_sum_exp(birth_terms.into_iter());
            self.atoms.push(SupportAtom {
                s: t,
                log_weight: birth_lw,
                stats: SegmentStats::new(&self.config.hyper),
            });
        }

        // Predictive reweighting uses each atom's statistics as they stood
        // before this observation; absorption follows afterwards.
        for atom in &mut self.atoms {
            let predictive = atom.stats.predictive(&self.config.hyper, self.last_y)?;
            atom.log_weight += predictive.log_pdf(y_next);
            atom.stats.observe(y_next, self.last_y)?;
        }

        self.normalize()?;
        if self.atoms.len() > self.config.max_support {
            self.atoms.sort_by(|x, y| y.log_weight.total_cmp(&x.log_weight).then(y.s.cmp(&x.s)));
            self.atoms.truncate(self.config.max_support);
            self.atoms.sort_by_key(|atom| atom.s);
            self.normalize()?;
        }

        self.t = t + 1;
        self.last_y = y_next;
        Ok(())
    }

    fn normalize(&mut self) -> Result<()> {
        let lse = log_sum_exp(self.atoms.iter().map(|atom| atom.log_weight));
        if !lse.is_finite() {
            return Err(Error::numeric(format!(
                "posterior weights degenerate (log normalizer {lse})"
            )));
        }
        for atom in &mut self.atoms {
            atom.log_weight -= lse;
        }
        Ok(())
    }

    fn require_started(&self) -> Result<()> {
        if self.t == 0 {
            return Err(Error::input(
                "filter holds no posterior before the first step".to_string(),
            ));
        }
        Ok(())
    }

    /// Posterior over the most recent change-point time. Atoms whose weight
    /// underflowed to zero are omitted (a pmf carries positive mass only).
    pub fn posterior(&self) -> Result<SparsePmf> {
        self.require_started()?;
        let mut support = Vec::with_capacity(self.atoms.len());
        let mut probs = Vec::with_capacity(self.atoms.len());
        for atom in &self.atoms {
            let p = atom.log_weight.exp();
            if p > 0.0 {
                support.push(atom.s);
                probs.push(p);
            }
        }
        SparsePmf::new(support, probs)
    }

    /// Posterior mode of the change-point time; ties go to the larger `s`.
    pub fn map_changepoint(&self) -> Result<usize> {
        self.require_started()?;
        let mut best = (f64::NEG_INFINITY, 0usize);
        for atom in &self.atoms {
            if atom.log_weight >= best.0 {
                best = (atom.log_weight, atom.s);
            }
        }
        Ok(best.1)
    }

    fn map_atom(&self) -> Result<&SupportAtom> {
        let s = self.map_changepoint()?;
        Ok(self.atoms.iter().find(|atom| atom.s == s).unwrap())
    }

    /// Point estimate and equal-tailed credible interval for one segment
    /// parameter, conditioned on the MAP change-point time.
    pub fn param_summary(&self, target: SummaryTarget, level: f64) -> Result<ParamSummary> {
        if !(level.is_finite() && 0.0 < level && level < 1.0) {
            return Err(Error::input(format!("credible level must lie in (0, 1); got {level}")));
        }
        let stats = &self.map_atom()?.stats;
        let hyper = &self.config.hyper;
        let tail = (1.0 - level) / 2.0;
        match target {
            SummaryTarget::Mu | SummaryTarget::Alpha => {
                let marginal = if target == SummaryTarget::Mu {
                    stats.mu_posterior(hyper)?
                } else {
                    stats.alpha_posterior(hyper)?
                };
                Ok(ParamSummary {
                    point: marginal.mean()?,
                    lo: marginal.quantile(tail)?,
                    hi: marginal.quantile(1.0 - tail)?,
                })
            }
            SummaryTarget::LogSigma => {
                let sigma2 = stats.sigma2_posterior(hyper)?;
                // x -> log(x)/2 is monotone, so quantiles map through it.
                Ok(ParamSummary {
                    point: 0.5 * sigma2.mode().ln(),
                    lo: 0.5 * sigma2.quantile(tail)?.ln(),
                    hi: 0.5 * sigma2.quantile(1.0 - tail)?.ln(),
                })
            }
        }
    }

    /// One-step-ahead predictive mixture for `y_{t+1}`.
    ///
    /// One component per atom (the segment continues past `t`), in `s`
    /// order, followed by a final fresh-segment component for a change-point
    /// at `t`. Weights are the hazard-propagated posterior and sum to 1.
    pub fn predictive_mixture(&self) -> Result<Vec<(f64, StudentT)>> {
        self.require_started()?;
        let hyper = &self.config.hyper;
        let mut out = Vec::with_capacity(self.atoms.len() + 1);
        let mut birth_mass = 0.0;
        for atom in &self.atoms {
            let p = atom.log_weight.exp();
            let h = if p > 0.0 { self.config.hazard.hazard(self.t - atom.s)? } else { 0.0 };
            birth_mass += h * p;
            out.push(((1.0 - h) * p, atom.stats.predictive(hyper, self.last_y)?));
        }
        let fresh = SegmentStats::new(hyper);
        out.push((birth_mass, fresh.predictive(hyper, self.last_y)?));
        Ok(out)
    }

    /// Rebuilds a filter from checkpoint parts, enforcing every structural
    /// invariant: atoms sorted with distinct `s < t`, counts equal to
    /// `t - s`, statistics dimensioned like the prior, weights normalized
    /// (drift up to 1e-9 is renormalized away), support within the cap.
    pub fn from_parts(
        config: FilterConfig,
        t: usize,
        last_y: f64,
        atoms: Vec<SupportAtom>,
    ) -> Result<Self> {
        if !last_y.is_finite() {
            return Err(Error::input(format!("last_y must be finite; got {last_y}")));
        }
        if t == 0 && !atoms.is_empty() {
            return Err(Error::input("a filter at t = 0 holds no atoms".to_string()));
        }
        if t > 0 && atoms.is_empty() {
            return Err(Error::input("a filter past t = 0 must hold atoms".to_string()));
        }
        if atoms.len() > config.max_support {
            return Err(Error::input(format!(
                "{} atoms exceed max_support {}",
                atoms.len(),
                config.max_support
            )));
        }
        let mut prev: Option<usize> = None;
        for atom in &atoms {
            if let Some(p) = prev {
                if atom.s <= p {
                    return Err(Error::input(
                        "atoms must be sorted by strictly increasing s".to_string(),
                    ));
                }
            }
            prev = Some(atom.s);
            if atom.s >= t {
                return Err(Error::input(format!("atom s {} must be < t {t}", atom.s)));
            }
            if atom.stats.dim() != config.hyper.dim() {
                return Err(Error::input(format!(
                    "atom stats dim {} does not match model dim {}",
                    atom.stats.dim(),
                    config.hyper.dim()
                )));
            }
            let expect = (t - atom.s) as u32;
            if atom.stats.count() != expect {
                return Err(Error::input(format!(
                    "atom s {} carries count {}, expected {expect}",
                    atom.s,
                    atom.stats.count()
                )));
            }
            if atom.log_weight.is_nan() || atom.log_weight > 1e-9 {
                return Err(Error::input(format!(
                    "atom log weight {} is not a normalized log probability",
                    atom.log_weight
                )));
            }
        }
        let mut filter = Filter { config, t, last_y, atoms };
        if t > 0 {
            let lse = log_sum_exp(filter.atoms.iter().map(|a| a.log_weight));
            if !lse.is_finite() || lse.abs() > 1e-9 {
                return Err(Error::input(format!(
                    "atom weights are not normalized (log-sum {lse})"
                )));
            }
            filter.normalize()?;
        }
        Ok(filter)
    }
}

// --- checkpoint document (versioned JSON) ---

/// Version tag written into checkpoint documents.
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointDoc {
    version: u32,
    t: u64,
    last_y: f64,
    config: ConfigDoc,
    atoms: Vec<AtomDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    hyperparams: HyperDoc,
    hazard: HazardDoc,
    max_support: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HyperDoc {
    a: f64,
    b: f64,
    delta0: f64,
    delta1: f64,
    include_mu: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum HazardDoc {
    ShiftedGeometric { p: f64 },
    Tabulated { g: Vec<f64> },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomDoc {
    s: u64,
    log_weight: f64,
    stats: StatsDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StatsDoc {
    dim: u8,
    v: Vec<Vec<f64>>,
    y_tilde: Vec<f64>,
    sum_sq: f64,
    count: u32,
}

impl Filter {
    /// Writes a versioned JSON snapshot of the filter state.
    ///
    /// Atoms whose posterior mass underflowed to exactly zero are omitted:
    /// they cannot influence any later quantity, and their log weight has no
    /// JSON representation.
    pub fn to_json_writer(&self, mut w: impl Write) -> Result<()> {
        let doc = CheckpointDoc {
            version: CHECKPOINT_VERSION,
            t: self.t as u64,
            last_y: self.last_y,
            config: ConfigDoc {
                hyperparams: HyperDoc {
                    a: self.config.hyper.a(),
                    b: self.config.hyper.b(),
                    delta0: self.config.hyper.delta0(),
                    delta1: self.config.hyper.delta1(),
                    include_mu: self.config.hyper.include_mu(),
                },
                hazard: match &self.config.hazard {
                    HazardModel::ShiftedGeometric { p } => HazardDoc::ShiftedGeometric { p: *p },
                    HazardModel::Tabulated { g } => HazardDoc::Tabulated { g: g.clone() },
                },
                max_support: self.config.max_support as u64,
            },
            atoms: self
                .atoms
                .iter()
                .filter(|atom| atom.log_weight > f64::NEG_INFINITY)
                .map(|atom| {
                    let dim = atom.stats.dim();
                    let v = atom.stats.v();
                    AtomDoc {
                        s: atom.s as u64,
                        log_weight: atom.log_weight,
                        stats: StatsDoc {
                            dim: dim as u8,
                            v: (0..dim).map(|i| v[i][..dim].to_vec()).collect(),
                            y_tilde: atom.stats.y_tilde()[..dim].to_vec(),
                            sum_sq: atom.stats.sum_sq(),
                            count: atom.stats.count(),
                        },
                    }
                })
                .collect(),
        };
        serde_json::to_writer(&mut w, &doc)
            .map_err(|e| Error::input(format!("checkpoint serialization failed: {e}")))?;
        w.write_all(b"\n")?;
        Ok(())
    }

    /// Reads and fully validates a checkpoint written by
    /// [`Filter::to_json_writer`].
    pub fn from_json_reader(r: impl Read) -> Result<Self> {
        let doc: CheckpointDoc = serde_json::from_reader(r)
            .map_err(|e| Error::input(format!("malformed checkpoint JSON: {e}")))?;
        if doc.version != CHECKPOINT_VERSION {
            return Err(Error::input(format!(
                "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                doc.version
            )));
        }
        let hyper = Hyperparams::new(
            doc.config.hyperparams.a,
            doc.config.hyperparams.b,
            doc.config.hyperparams.delta0,
            doc.config.hyperparams.delta1,
            doc.config.hyperparams.include_mu,
        )?;
        let hazard = match doc.config.hazard {
            HazardDoc::ShiftedGeometric { p } => HazardModel::shifted_geometric(p)?,
            HazardDoc::Tabulated { g } => HazardModel::tabulated(g)?,
        };
        let config = FilterConfig::new(hyper, hazard, doc.config.max_support as usize)?;
        let dim = config.hyper.dim();
        let atoms = doc
            .atoms
            .into_iter()
            .map(|atom| {
                if atom.stats.dim as usize != dim
                    || atom.stats.v.len() != dim
                    || atom.stats.v.iter().any(|row| row.len() != dim)
                    || atom.stats.y_tilde.len() != dim
                {
                    return Err(Error::input(format!(
                        "atom s {} carries misshaped statistics",
                        atom.s
                    )));
                }
                let mut v = [[0.0f64; 2]; 2];
                let mut y_tilde = [0.0f64; 2];
                for (vr, src) in v.iter_mut().zip(&atom.stats.v) {
                    for (dst, &x) in vr.iter_mut().zip(src) {
                        *dst = x;
                    }
                }
                for (dst, &x) in y_tilde.iter_mut().zip(&atom.stats.y_tilde) {
                    *dst = x;
                }
                if dim == 1 {
                    // Re-embed the scalar case in the fixed 2x2 storage.
                    v[1][1] = 0.0;
                }
                Ok(SupportAtom {
                    s: atom.s as usize,
                    log_weight: atom.log_weight,
                    stats: SegmentStats::from_parts(
                        dim,
                        v,
                        y_tilde,
                        atom.stats.sum_sq,
                        atom.stats.count,
                    )?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Filter::from_parts(config, doc.t as usize, doc.last_y, atoms)
    }

    /// Convenience wrapper over [`Filter::from_json_reader`] for in-memory
    /// documents.
    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self> {
        Filter::from_json_reader(bytes)
    }
}
