//! Synthetic return series with piecewise-constant AR(1) dynamics.
//!
//! Change-point times are drawn by walking the gap distribution forward
//! from time 0; each segment gets its own mean, AR coefficient, and noise
//! scale, either drawn from the conjugate prior or supplied explicitly.
//! Generation is deterministic in the seed and independent of how many
//! draws each stage consumes: gaps, per-segment parameters, and per-segment
//! noise each use their own counter-mode RNG stream, so changing one stage
//! never shifts the randomness of another.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::filter::HazardModel;
use crate::model::Hyperparams;
use crate::{Error, Result};

/// Constant parameters of one regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentCoeffs {
    pub mu: f64,
    pub alpha: f64,
    pub sigma: f64,
}

impl SegmentCoeffs {
    fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() || !self.alpha.is_finite() {
            return Err(Error::input(format!(
                "segment mean {} and AR coefficient {} must be finite",
                self.mu, self.alpha
            )));
        }
        if !self.sigma.is_finite() || self.sigma <= 0.0 {
            return Err(Error::input(format!(
                "segment noise scale must be finite and > 0; got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Where segment parameters come from.
#[derive(Debug, Clone, PartialEq)]
pub enum SegmentParams {
    /// Draw each segment's parameters from the conjugate prior.
    FromPrior(Hyperparams),
    /// Use these parameters, one entry per segment in time order. An error
    /// if fewer entries than sampled segments.
    Explicit(Vec<SegmentCoeffs>),
}

/// Full description of one synthetic run.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    /// Number of returns to generate after the initial value.
    pub length: usize,
    pub hazard: HazardModel,
    pub params: SegmentParams,
    /// Initial value the first AR step conditions on.
    pub y0: f64,
    pub seed: u64,
}

/// Everything the generator produced, including the ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Synth {
    /// The path `y_0..y_T` (length `T + 1`; index equals time).
    pub returns: Vec<f64>,
    /// Segment start times, always beginning with 0, strictly increasing,
    /// all below `length`.
    pub changepoints: Vec<usize>,
    /// Parameters actually used, one per segment.
    pub segments: Vec<SegmentCoeffs>,
    pub seed: u64,
}

// Stream ids: gaps first, then alternating parameter/noise streams per
// segment so segment n is reproducible in isolation.
const GAP_STREAM: u64 = 0;

fn param_stream(segment: u64) -> u64 {
    2 * segment + 1
}

fn noise_stream(segment: u64) -> u64 {
    2 * segment + 2
}

/// Walks the gap distribution from time 0, keeping every change-point that
/// lands strictly before `length`. A defective gap distribution (mass at
/// infinity) simply ends the walk.
fn sample_changepoints(hazard: &HazardModel, length: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut cps = vec![0usize];
    let mut cur = 0u64;
    while let Some(gap) = hazard.sample_gap(rng) {
        cur = cur.saturating_add(gap);
        if cur >= length as u64 {
            break;
        }
        cps.push(cur as usize);
    }
    cps
}

/// Generates the series described by `spec`.
pub fn generate(spec: &SynthSpec) -> Result<Synth> {
    if spec.length < 1 {
        return Err(Error::input("synthetic series length must be >= 1".to_string()));
    }
    if !spec.y0.is_finite() {
        return Err(Error::input(format!("initial value must be finite; got {}", spec.y0)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(GAP_STREAM);
    let changepoints = sample_changepoints(&spec.hazard, spec.length, &mut rng);
    let k = changepoints.len();

    let segments: Vec<SegmentCoeffs> = match &spec.params {
        SegmentParams::Explicit(list) => {
            if list.len() < k {
                return Err(Error::input(format!(
                    "{k} segments were sampled but only {} parameter sets given",
                    list.len()
                )));
            }
            for c in &list[..k] {
                c.validate()?;
            }
            list[..k].to_vec()
        }
        SegmentParams::FromPrior(hyper) => {
            let mut out = Vec::with_capacity(k);
            for n in 0..k {
                rng.set_stream(param_stream(n as u64));
                out.push(draw_from_prior(hyper, &mut rng)?);
            }
            out
        }
    };

    let mut returns = vec![0.0; spec.length + 1];
    returns[0] = spec.y0;
    for n in 0..k {
        let start = changepoints[n];
        let end = if n + 1 < k { changepoints[n + 1] } else { spec.length };
        let c = &segments[n];
        rng.set_stream(noise_stream(n as u64));
        for t in start + 1..=end {
            let eps: f64 = StandardNormal.sample(&mut rng);
            returns[t] = c.mu + c.alpha * returns[t - 1] + c.sigma * eps;
            if !returns[t].is_finite() {
                return Err(Error::numeric(format!("generated value at time {t} is not finite")));
            }
        }
    }
    Ok(Synth { returns, changepoints, segments, seed: spec.seed })
}

/// One draw of (mu, alpha, sigma) from the conjugate prior: the noise
/// variance is inverse-gamma, and each coefficient is centered normal with
/// standard deviation `sigma * delta`. With the mean excluded, mu is 0.
fn draw_from_prior(hyper: &Hyperparams, rng: &mut ChaCha8Rng) -> Result<SegmentCoeffs> {
    let gamma = Gamma::new(hyper.a(), 1.0 / hyper.b())
        .map_err(|e| Error::input(format!("bad prior shape or scale: {e}")))?;
    let precision: f64 = gamma.sample(rng);
    let sigma2 = 1.0 / precision;
    let sigma = sigma2.sqrt();
    let z0: f64 = StandardNormal.sample(rng);
    let z1: f64 = StandardNormal.sample(rng);
    let mu = if hyper.include_mu() { sigma * hyper.delta0() * z0 } else { 0.0 };
    let alpha = sigma * hyper.delta1() * z1;
    let c = SegmentCoeffs { mu, alpha, sigma };
    if c.mu.is_finite() && c.alpha.is_finite() && c.sigma.is_finite() && c.sigma > 0.0 {
        Ok(c)
    } else {
        Err(Error::numeric(format!(
            "prior draw overflowed: mu {} alpha {} sigma {}",
            c.mu, c.alpha, c.sigma
        )))
    }
}

/// Ground truth for a single generated series, as stored next to the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truth {
    pub changepoints: Vec<usize>,
    pub segments: Vec<SegmentCoeffs>,
    pub seed: u64,
}

impl Truth {
    pub fn of(synth: &Synth) -> Truth {
        Truth {
            changepoints: synth.changepoints.clone(),
            segments: synth.segments.clone(),
            seed: synth.seed,
        }
    }

    pub fn to_json_writer(&self, mut w: impl Write) -> Result<()> {
        serde_json::to_writer(&mut w, self)
            .map_err(|e| Error::input(format!("truth encode failed: {e}")))?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn from_json_reader(r: impl Read) -> Result<Self> {
        let t: Truth =
            serde_json::from_reader(r).map_err(|e| Error::input(format!("bad truth JSON: {e}")))?;
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        if self.changepoints.first() != Some(&0) {
            return Err(Error::input("truth change-points must start at 0".to_string()));
        }
        if self.changepoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::input(
                "truth change-points must be strictly increasing".to_string(),
            ));
        }
        if self.segments.len() != self.changepoints.len() {
            return Err(Error::input(format!(
                "{} change-points but {} segment parameter sets",
                self.changepoints.len(),
                self.segments.len()
            )));
        }
        for c in &self.segments {
            c.validate()?;
        }
        Ok(())
    }
}

/// Ground truth for a batch of independently generated series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiTruth {
    pub seed: u64,
    pub series: Vec<SeriesTruth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesTruth {
    pub ticker: String,
    pub changepoints: Vec<usize>,
    pub segments: Vec<SegmentCoeffs>,
}

impl MultiTruth {
    pub fn to_json_writer(&self, mut w: impl Write) -> Result<()> {
        serde_json::to_writer(&mut w, self)
            .map_err(|e| Error::input(format!("truth encode failed: {e}")))?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn from_json_reader(r: impl Read) -> Result<Self> {
        let t: MultiTruth =
            serde_json::from_reader(r).map_err(|e| Error::input(format!("bad truth JSON: {e}")))?;
        for s in &t.series {
            Truth {
                changepoints: s.changepoints.clone(),
                segments: s.segments.clone(),
                seed: t.seed,
            }
            .validate()?;
        }
        Ok(t)
    }
}
