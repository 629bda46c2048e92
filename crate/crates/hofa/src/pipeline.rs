//! End-to-end soundness pipeline for subspace-restriction testing.
//!
//! Given a {0,1}-valued function f on F_p^n and a property oracle living on
//! the restriction space F_p^m, the pipeline certifies that structure seen
//! after restricting to a random m-dimensional affine subspace lifts back to
//! structure of f itself. The stages are:
//!
//! 1. decompose f = f1 + f2 + f3 against a polynomial factor B1, recording
//!    the certificates gamma (projection budget) and eta (residual norm);
//! 2. sample affine embeddings A : F_p^m -> F_p^n and check, per embedding,
//!    three events: the restricted factor keeps its declared degrees,
//!    depths, and (proxy) rank; the restricted error terms keep small norms;
//!    and conditional expectation commutes with restriction up to gamma
//!    plus a sampling allowance;
//! 3. on the first embedding, take the nearest property member h of the
//!    restricted function, decompose h on F_p^m refining the restricted
//!    factor, pull the newly adjoined polynomials back to F_p^n along a
//!    section of A, transfer E[h|B'] upstairs to a measurable model phi,
//!    repair f toward phi to get psi with E[psi|B2] = phi exactly, and
//!    round psi to a {0,1}-valued candidate g;
//! 4. report every measured quantity: event outcomes per trial, transfer
//!    coverage, the repair identities, and ||psi - phi||_{U^{d+1}} against
//!    its budget.
//!
//! Everything is deterministic given the seed: trial t uses the counter
//! stream t, and the final rounding uses a stream disjoint from all trials.

use serde::Serialize;

use crate::affine::{sample_affine_embedding, AffineMap};
use crate::decompose::{decompose, DecomposeConfig, Decomposition, DecompositionReport};
use crate::error::{Error, Result};
use crate::factor::PolynomialFactor;
use crate::function::{hamming_distance, l1_distance, l2_norm, FiniteFunction, RangeKind};
use crate::gowers::gowers_norm_exact_real;
use crate::property::{NearestMember, PropertyOracle};
use crate::rng::DetRng;
use crate::transfer::{construct_psi, PsiReport, TransferOperator};

/// Counter stream used for the final randomized rounding; trial streams are
/// 0..trials, so any trial count below 2^32 stays disjoint.
const ROUNDING_STREAM: u64 = 1 << 32;

/// Parameters of the soundness pipeline.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineConfig {
    /// Order parameter d: residuals are controlled in the U^{d+1} norm and
    /// factors use candidates of degree at most d.
    pub degree: usize,
    /// Energy-increment threshold for both decompositions.
    pub tau: f64,
    /// Dimension of the restriction subspace.
    pub m: usize,
    /// Event-1 bound on the restricted factor's rank proxy (largest phase
    /// bias over nontrivial combinations of its polynomials).
    pub rank_threshold: f64,
    /// Number of independent embedding trials for the event statistics.
    pub trials: usize,
    /// Master seed; every random choice derives from it.
    pub seed: u64,
}

impl PipelineConfig {
    /// Defaults: rank threshold 0.9 and a single embedding trial.
    pub fn new(degree: usize, tau: f64, m: usize, seed: u64) -> Self {
        PipelineConfig {
            degree,
            tau,
            m,
            rank_threshold: 0.9,
            trials: 1,
            seed,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.m == 0 || self.m > n {
            return Err(Error::Config(format!(
                "restriction dimension must lie in 1..={n}, got {}",
                self.m
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config("need at least one embedding trial".to_string()));
        }
        if self.trials as u64 >= ROUNDING_STREAM {
            return Err(Error::Config(format!(
                "trial count must stay below {ROUNDING_STREAM}"
            )));
        }
        if !(self.rank_threshold > 0.0) {
            return Err(Error::Config(format!(
                "rank threshold must be positive, got {}",
                self.rank_threshold
            )));
        }
        Ok(())
    }
}

/// Event 1: the restricted factor keeps its declared structure.
#[derive(Debug, Clone, Serialize)]
pub struct Event1Report {
    pub degrees_declared: Vec<usize>,
    /// Exact degree of each restricted polynomial (None if above the
    /// declared bound, which cannot happen under restriction).
    pub degrees_measured: Vec<Option<usize>>,
    pub degrees_preserved: bool,
    pub depths_preserved: bool,
    /// Largest phase bias over nontrivial combinations.
    pub rank_bias: f64,
    pub rank_threshold: f64,
    pub holds: bool,
}

/// Event 2: restricted error terms keep small norms.
#[derive(Debug, Clone, Serialize)]
pub struct Event2Report {
    pub restricted_f2_l2: f64,
    pub f2_bound: f64,
    pub restricted_f3_u: f64,
    pub f3_bound: f64,
    pub holds: bool,
}

/// Event 3: conditional expectation commutes with restriction.
#[derive(Debug, Clone, Serialize)]
pub struct Event3Report {
    /// sup over points of |E[Af | restricted factor] - A(E[f | factor])|.
    pub max_gap: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Outcome of the three events for one sampled embedding.
#[derive(Debug, Clone, Serialize)]
pub struct EmbeddingTrialReport {
    pub trial: usize,
    pub event1: Event1Report,
    pub event2: Event2Report,
    pub event3: Event3Report,
    pub all_hold: bool,
}

/// Full serializable record of a pipeline run.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub degree: usize,
    pub tau: f64,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    /// Projection budget max(||f2||_2, p^{d c} ||f3||_{U^{d+1}}) where c is
    /// the factor complexity.
    pub gamma: f64,
    /// Residual certificate ||f3||_{U^{d+1}}.
    pub eta: f64,
    pub upstairs: DecompositionReport,
    pub trial_reports: Vec<EmbeddingTrialReport>,
    /// Number of trials where all three events hold.
    pub trials_all_hold: usize,
    /// Hamming distance from the restricted function to its nearest member.
    pub h_distance: f64,
    pub downstairs: DecompositionReport,
    /// Whether restricting the lifted factor reproduces the downstairs
    /// factor label-for-label (exact consistency of the pullback).
    pub restriction_consistent: bool,
    pub transfer_unrealized_points: u64,
    pub transfer_unrealized_labels: u64,
    pub psi: PsiReport,
    /// ||g - psi||_1 introduced by randomized rounding.
    pub rounding_l1: f64,
    /// ||psi - phi||_{U^{d+1}} measured exactly.
    pub final_norm: f64,
    /// Budget gamma + 3 gamma^{1/2^{d+1}}.
    pub final_bound: f64,
    pub final_holds: bool,
}

/// Report plus the constructed objects, for callers that keep working with
/// them (the report alone serializes).
#[derive(Debug)]
pub struct PipelineOutcome {
    pub report: PipelineReport,
    /// The embedding used for the construction (trial 0).
    pub embedding: AffineMap,
    /// The lifted factor B2 on the big space.
    pub factor: PolynomialFactor,
    /// Measurable model phi = transfer of E[h|B'].
    pub phi: FiniteFunction,
    /// Repaired [0,1]-valued function with E[psi|B2] = phi.
    pub psi: FiniteFunction,
    /// Rounded {0,1}-valued candidate.
    pub g: FiniteFunction,
}

fn subtract(f: &FiniteFunction, g: &FiniteFunction) -> Result<Vec<f64>> {
    let a = f.real_table()?;
    let b = g.real_table()?;
    Ok(a.iter().zip(&b).map(|(x, y)| x - y).collect())
}

fn run_events(
    dec: &Decomposition,
    f: &FiniteFunction,
    map: &AffineMap,
    gamma: f64,
    config: &PipelineConfig,
    trial: usize,
) -> Result<(EmbeddingTrialReport, PolynomialFactor)> {
    let p = f.params().p() as f64;
    let restricted = dec.factor.restrict(map)?;
    let small = restricted.params();

    // Event 1: declared structure survives the restriction.
    let declared = restricted.degrees();
    let measured = restricted.measured_degrees(restricted.degree_bound())?;
    let degrees_preserved = declared
        .iter()
        .zip(&measured)
        .all(|(&d, m)| *m == Some(d));
    let depths_preserved = restricted.reduced_depths() == restricted.depths();
    let rank_bias = restricted.rank_proxy(false)?.max_bias;
    let event1 = Event1Report {
        degrees_declared: declared,
        degrees_measured: measured,
        degrees_preserved,
        depths_preserved,
        rank_bias,
        rank_threshold: config.rank_threshold,
        holds: degrees_preserved && depths_preserved && rank_bias <= config.rank_threshold,
    };

    // Event 2: norms of the restricted error terms. The bounds allow a
    // doubling of the upstairs certificate plus a three-sigma sampling
    // allowance at scale p^{-m/2} (an average over p^m bounded points has
    // standard deviation at most p^{-m/2}).
    let sampling = 3.0 * p.powf(-(config.m as f64) / 2.0);
    let rf2 = l2_norm(&dec.f2.restrict(map)?.real_table()?);
    let rf3 = gowers_norm_exact_real(
        small,
        &dec.f3.restrict(map)?.real_table()?,
        config.degree + 1,
    )?;
    let f2_bound = 2.0 * dec.f2_l2 + sampling;
    let f3_bound = 2.0 * dec.f3_u + sampling;
    let event2 = Event2Report {
        restricted_f2_l2: rf2,
        f2_bound,
        restricted_f3_u: rf3,
        f3_bound,
        holds: rf2 <= f2_bound && rf3 <= f3_bound,
    };

    // Event 3: E[Af | restricted] vs A(E[f|B]). The gap on each atom is the
    // atom mean of the restricted residual, so the budget is gamma plus a
    // three-sigma allowance at the atom sampling scale p^{(c-m)/2}.
    let projected = restricted.cond_expectation(&f.restrict(map)?)?;
    let lifted = dec.f1.restrict(map)?;
    let max_gap = subtract(&projected, &lifted)?
        .iter()
        .fold(0.0f64, |acc, &x| acc.max(x.abs()));
    let atom_sampling =
        3.0 * p.powf((dec.factor.complexity() as f64 - config.m as f64) / 2.0);
    let bound = gamma + atom_sampling;
    let event3 = Event3Report {
        max_gap,
        bound,
        holds: max_gap <= bound,
    };

    let all_hold = event1.holds && event2.holds && event3.holds;
    Ok((
        EmbeddingTrialReport {
            trial,
            event1,
            event2,
            event3,
            all_hold,
        },
        restricted,
    ))
}

/// Runs the full pipeline for f against a property oracle on the
/// restriction space. The oracle's space must be F_p^m with the same p as
/// f, its range must be {0,1}, and f must be {0,1}-valued.
pub fn soundness_pipeline<O: PropertyOracle + NearestMember>(
    f: &FiniteFunction,
    oracle: &O,
    config: &PipelineConfig,
) -> Result<PipelineOutcome> {
    let params = *f.params();
    config.validate(params.n())?;
    if f.range() != RangeKind::Finite(2) {
        return Err(Error::Range(format!(
            "the pipeline needs a {{0,1}}-valued input, got {:?}",
            f.range()
        )));
    }
    if oracle.range() != 2 {
        return Err(Error::Range(format!(
            "the pipeline needs a {{0,1}}-valued property, got range {}",
            oracle.range()
        )));
    }
    if oracle.params().p() != params.p() || oracle.params().n() != config.m {
        return Err(Error::dim(format!(
            "oracle lives on F_{}^{}, expected F_{}^{}",
            oracle.params().p(),
            oracle.params().n(),
            params.p(),
            config.m
        )));
    }

    let p = params.p() as f64;
    let d = config.degree;
    let dcfg = DecomposeConfig::for_degree(d, config.tau, params.p());

    // Stage 1: decompose f upstairs.
    let dec = decompose(f, &dcfg, None)?;
    let c1 = dec.factor.complexity();
    let eta = dec.f3_u;
    let gamma = dec.f2_l2.max(p.powi((d * c1) as i32) * eta);

    // Stage 2: embedding trials. Trial t draws its embedding from counter
    // stream t, so the set of trials is independent of their order.
    let mut trial_reports = Vec::with_capacity(config.trials);
    let mut construction: Option<(AffineMap, PolynomialFactor)> = None;
    for t in 0..config.trials {
        let mut rng = DetRng::for_task(config.seed, t as u64);
        let map = sample_affine_embedding(&mut rng, &params, config.m)?;
        let (report, restricted) = run_events(&dec, f, &map, gamma, config, t)?;
        trial_reports.push(report);
        if t == 0 {
            construction = Some((map, restricted));
        }
    }
    let trials_all_hold = trial_reports.iter().filter(|r| r.all_hold).count();
    let (map, restricted) = construction.expect("at least one trial ran");

    // Stage 3: nearest member downstairs and its decomposition refining the
    // restricted factor.
    let rf = f.restrict(&map)?;
    let h = oracle.nearest_member(&rf)?;
    let h_distance = hamming_distance(&rf, &h)?;
    let dec_small = decompose(&h, &dcfg, Some(restricted))?;

    // Pull the newly adjoined polynomials back upstairs along a section S
    // of the embedding (S(map(x)) = x), so each lifted table composes with
    // the embedding back to the downstairs table exactly.
    let section = map.section()?;
    let mut lifted = dec.factor.clone();
    for fp in &dec_small.factor.polys()[c1..] {
        lifted = lifted.adjoin_table(fp.table().restrict(&section)?, fp.degree())?;
    }
    let restriction_consistent =
        lifted.restrict(&map)?.atom_labels() == dec_small.factor.atom_labels();

    // Stage 4: transfer E[h|B'] upstairs, repair f toward it, round.
    let op = TransferOperator::new(&dec_small.factor, &lifted)?;
    let transferred = op.transfer(&dec_small.f1)?;
    let phi = transferred.function;
    let psi_result = construct_psi(f, &phi, &lifted)?;
    let mut rng = DetRng::for_task(config.seed, ROUNDING_STREAM);
    let g = psi_result.psi.round_randomized(&mut rng)?;
    let rounding_l1 = l1_distance(&g, &psi_result.psi)?;

    let final_norm = gowers_norm_exact_real(&params, &subtract(&psi_result.psi, &phi)?, d + 1)?;
    let final_bound = gamma + 3.0 * gamma.powf(1.0 / (1u64 << (d + 1)) as f64);

    let report = PipelineReport {
        degree: d,
        tau: config.tau,
        m: config.m,
        trials: config.trials,
        seed: config.seed,
        gamma,
        eta,
        upstairs: dec.report(),
        trial_reports,
        trials_all_hold,
        h_distance,
        downstairs: dec_small.report(),
        restriction_consistent,
        transfer_unrealized_points: transferred.unrealized_points,
        transfer_unrealized_labels: transferred.unrealized_labels,
        psi: psi_result.report(),
        rounding_l1,
        final_norm,
        final_bound,
        final_holds: final_norm <= final_bound,
    };
    Ok(PipelineOutcome {
        report,
        embedding: map,
        factor: lifted,
        phi,
        psi: psi_result.psi,
        g,
    })
}
