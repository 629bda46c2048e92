//! One-sided distance testing by restriction to random affine subspaces.
//!
//! Given f on F_p^n and a property oracle on F_p^m, each trial samples an
//! injective affine embedding A : F_p^m -> F_p^n, measures the distance of
//! the restricted function f(A(.)) to the property, and accepts when it
//! stays below delta + epsilon/2. The tester's verdict is the majority
//! vote; per-trial distances are reported so concentration can be checked
//! externally. Trial t draws from the stream (seed, t), so reports are
//! identical across runs and thread counts.

use rayon::prelude::*;
use serde::Serialize;

use crate::affine::sample_affine_embedding;
use crate::error::{Error, Result};
use crate::function::FiniteFunction;
use crate::property::PropertyOracle;
use crate::rng::DetRng;

/// Parameters of a testing run.
#[derive(Debug, Clone, Serialize)]
pub struct TesterConfig {
    /// Closeness parameter: accept functions within delta of the property.
    pub delta: f64,
    /// Proximity gap the tester must resolve.
    pub epsilon: f64,
    /// Restriction dimension m.
    pub m: usize,
    /// Number of independent restrictions.
    pub trials: u64,
    /// Master seed; trial t uses the stream (seed, t).
    pub seed: u64,
}

impl TesterConfig {
    /// Acceptance threshold delta + epsilon/2 on restricted distances.
    pub fn threshold(&self) -> f64 {
        self.delta + self.epsilon / 2.0
    }

    /// delta in [0,1], epsilon in (0,1], at least one trial. Values with
    /// delta + epsilon > 1 are legal (the tester then accepts everything at
    /// threshold >= 1); keeping delta + epsilon <= 1 is what makes the two
    /// verdict regimes distinguishable.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::Config(format!("delta must lie in [0,1], got {}", self.delta)));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::Config(format!(
                "epsilon must lie in (0,1], got {}",
                self.epsilon
            )));
        }
        if self.m == 0 {
            return Err(Error::Config("restriction dimension must be >= 1".to_string()));
        }
        if self.trials == 0 {
            return Err(Error::Config("need at least one trial".to_string()));
        }
        Ok(())
    }
}

/// Outcome of a testing run.
#[derive(Debug, Clone, Serialize)]
pub struct TesterReport {
    pub trials: u64,
    pub threshold: f64,
    /// Distance of each restriction to the property, in trial order.
    pub distances: Vec<f64>,
    pub mean_distance: f64,
    /// Fraction of trials below the threshold.
    pub accept_fraction: f64,
    /// Majority verdict.
    pub accepted: bool,
}

impl TesterReport {
    /// Fraction of trials whose restricted distance deviates from `center`
    /// by at least `tol` (the concentration failure rate).
    pub fn exceed_fraction(&self, center: f64, tol: f64) -> f64 {
        let count = self
            .distances
            .iter()
            .filter(|&&d| (d - center).abs() >= tol)
            .count();
        count as f64 / self.distances.len() as f64
    }
}

/// Runs the restriction tester for f against a property on F_p^m.
pub fn distance_tester<O>(
    f: &FiniteFunction,
    oracle: &O,
    config: &TesterConfig,
) -> Result<TesterReport>
where
    O: PropertyOracle + Sync,
{
    config.validate()?;
    let params = f.params();
    if oracle.params().p() != params.p() || oracle.params().n() != config.m {
        return Err(Error::dim(format!(
            "oracle lives on F_{}^{}, tester restricts to F_{}^{}",
            oracle.params().p(),
            oracle.params().n(),
            params.p(),
            config.m
        )));
    }
    if config.m > params.n() {
        return Err(Error::dim(format!(
            "restriction dimension {} exceeds ambient dimension {}",
            config.m,
            params.n()
        )));
    }
    let distances: Vec<f64> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = DetRng::for_task(config.seed, t);
            let map = sample_affine_embedding(&mut rng, params, config.m)?;
            let restricted = f.restrict(&map)?;
            oracle.distance(&restricted)
        })
        .collect::<Result<_>>()?;
    let threshold = config.threshold();
    let accepts = distances.iter().filter(|&&d| d < threshold).count();
    let accept_fraction = accepts as f64 / config.trials as f64;
    let mean_distance =
        crate::function::kahan_sum(distances.iter().copied()) / config.trials as f64;
    Ok(TesterReport {
        trials: config.trials,
        threshold,
        distances,
        mean_distance,
        accept_fraction,
        accepted: accept_fraction >= 0.5,
    })
}
