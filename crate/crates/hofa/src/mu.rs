//! Restriction distributions: the law of f composed with a random affine
//! embedding.
//!
//! For f on F_p^n and a uniformly random injective affine map
//! A : F_p^k -> F_p^n, the restriction f(A(.)) is a random function on
//! F_p^k. Its distribution mu assigns each outcome v : F_p^k -> {0..R-1}
//! the probability Pr[f(A(.)) = v]. For [0,1]-valued f the restriction is
//! rounded pointwise (independently, P[1] = value), and the exact law has
//! the product form E_A prod_x (v(x) ? f(Ax) : 1 - f(Ax)).
//!
//! Outcomes are packed into u64 keys: the value at point x (canonical
//! index order) is digit x in base R, so for binary outcomes bit x of the
//! key is v(x). Probabilities live in a BTreeMap for deterministic order.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::affine::{count_embeddings, enumerate_embeddings, sample_affine_embedding};
use crate::error::{Error, Result};
use crate::function::{FiniteFunction, RangeKind};
use crate::gowers::gowers_norm_exact_real;
use crate::rng::DetRng;

/// Exact enumeration visits every injective embedding; cap their number.
pub const MAX_EXACT_RESTRICTIONS: u128 = 1 << 20;

/// Cap on the outcome alphabet size R^{p^k} enumerated in exact real mode.
pub const MAX_EXACT_OUTCOMES: u128 = 1 << 20;

/// How a distribution was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MuMode {
    Exact,
    Estimate { trials: u64 },
}

/// The distribution of f restricted to a random affine k-dimensional
/// subspace (with its parametrization).
#[derive(Debug, Clone, Serialize)]
pub struct RestrictionDistribution {
    /// Source dimension of the embeddings.
    pub k: usize,
    /// Outcome alphabet size (2 for rounded real-valued inputs).
    pub range: u16,
    /// Number of points of the source space.
    pub points: u32,
    pub mode: MuMode,
    /// Probability per packed outcome key; keys with probability 0 are
    /// omitted (exact real mode keeps every enumerated outcome).
    pub probs: BTreeMap<u64, f64>,
}

impl RestrictionDistribution {
    /// Total variation distance to another distribution over the union of
    /// outcome keys. The alphabets must agree.
    pub fn stat_distance(&self, other: &RestrictionDistribution) -> Result<f64> {
        if self.k != other.k || self.range != other.range {
            return Err(Error::dim(format!(
                "distributions over different outcome spaces: (k={}, R={}) vs (k={}, R={})",
                self.k, self.range, other.k, other.range
            )));
        }
        let mut gap = 0.0f64;
        for (key, p) in &self.probs {
            let q = other.probs.get(key).copied().unwrap_or(0.0);
            gap += (p - q).abs();
        }
        for (key, q) in &other.probs {
            if !self.probs.contains_key(key) {
                gap += q;
            }
        }
        Ok(gap / 2.0)
    }

    /// Unpacks a key into per-point outcome digits.
    pub fn unpack(&self, key: u64) -> Vec<u8> {
        let mut rest = key;
        (0..self.points)
            .map(|_| {
                let d = (rest % self.range as u64) as u8;
                rest /= self.range as u64;
                d
            })
            .collect()
    }
}

fn outcome_range(f: &FiniteFunction) -> Result<u16> {
    match f.range() {
        RangeKind::Finite(r) => Ok(r),
        RangeKind::UnitInterval => Ok(2),
        other => Err(Error::Range(format!(
            "restriction distributions need finite or [0,1] values, got {other:?}"
        ))),
    }
}

fn check_key_capacity(range: u16, points: u64) -> Result<()> {
    let keys = (range as u128)
        .checked_pow(points.try_into().map_err(|_| {
            Error::capacity("outcome points", points as u128, u32::MAX as u128)
        })?)
        .unwrap_or(u128::MAX);
    if keys > u64::MAX as u128 + 1 {
        return Err(Error::capacity("outcome keys", keys, u64::MAX as u128));
    }
    Ok(())
}

/// Exact restriction distribution by enumerating every injective affine
/// embedding. Finite-valued inputs count outcomes exactly; [0,1]-valued
/// inputs use the rounding product formula over all binary outcomes.
pub fn mu_exact(f: &FiniteFunction, k: usize) -> Result<RestrictionDistribution> {
    let params = f.params();
    let range = outcome_range(f)?;
    let total = count_embeddings(params, k)?;
    if total > MAX_EXACT_RESTRICTIONS {
        return Err(Error::capacity("exact restriction scan", total, MAX_EXACT_RESTRICTIONS));
    }
    let source = crate::field::FieldParams::new(params.p(), k)?;
    let points = source.size() as u64;
    check_key_capacity(range, points)?;
    let maps = enumerate_embeddings(params, k)?;
    let mut probs = BTreeMap::new();
    match f.range() {
        RangeKind::Finite(_) => {
            let table = f.finite_table()?;
            let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
            for map in &maps {
                let images = map.image_table()?;
                let mut key = 0u64;
                for &img in images.iter().rev() {
                    key = key * range as u64 + table[img as usize] as u64;
                }
                *counts.entry(key).or_insert(0) += 1;
            }
            for (key, count) in counts {
                probs.insert(key, count as f64 / total as f64);
            }
        }
        RangeKind::UnitInterval => {
            let outcomes = (2u128).pow(points as u32);
            if outcomes > MAX_EXACT_OUTCOMES {
                return Err(Error::capacity("exact outcome alphabet", outcomes, MAX_EXACT_OUTCOMES));
            }
            let table = f.real_table()?;
            // compensated accumulator per outcome
            let mut sums = vec![(0.0f64, 0.0f64); outcomes as usize];
            let mut values = vec![0.0f64; points as usize];
            for map in &maps {
                let images = map.image_table()?;
                for (slot, &img) in values.iter_mut().zip(&images) {
                    *slot = table[img as usize];
                }
                for (v, acc) in sums.iter_mut().enumerate() {
                    let mut prod = 1.0f64;
                    for (x, &value) in values.iter().enumerate() {
                        prod *= if v >> x & 1 == 1 { value } else { 1.0 - value };
                    }
                    let y = prod - acc.1;
                    let t = acc.0 + y;
                    acc.1 = (t - acc.0) - y;
                    acc.0 = t;
                }
            }
            for (v, acc) in sums.into_iter().enumerate() {
                probs.insert(v as u64, acc.0 / total as f64);
            }
        }
        _ => unreachable!("outcome_range filtered other ranges"),
    }
    Ok(RestrictionDistribution {
        k,
        range,
        points: points as u32,
        mode: MuMode::Exact,
        probs,
    })
}

/// Monte Carlo restriction distribution. Trial t draws its embedding (and,
/// for [0,1]-valued inputs, the p^k rounding bits in canonical point order)
/// from an independent stream seeded by (seed, t), so results do not depend
/// on scheduling or thread count.
pub fn mu_estimate(
    f: &FiniteFunction,
    k: usize,
    trials: u64,
    seed: u64,
) -> Result<RestrictionDistribution> {
    if trials == 0 {
        return Err(Error::Config("need at least one trial".to_string()));
    }
    let params = f.params();
    let range = outcome_range(f)?;
    let source = crate::field::FieldParams::new(params.p(), k)?;
    let points = source.size() as u64;
    check_key_capacity(range, points)?;
    let real = matches!(f.range(), RangeKind::UnitInterval);
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for t in 0..trials {
        let mut rng = DetRng::for_task(seed, t);
        let map = sample_affine_embedding(&mut rng, params, k)?;
        let images = map.image_table()?;
        let mut key = 0u64;
        if real {
            let mut bits = Vec::with_capacity(images.len());
            for &img in &images {
                bits.push(rng.bernoulli(f.get_real(img)?) as u64);
            }
            for &b in bits.iter().rev() {
                key = key * 2 + b;
            }
        } else {
            let table = f.finite_table()?;
            for &img in images.iter().rev() {
                key = key * range as u64 + table[img as usize] as u64;
            }
        }
        *counts.entry(key).or_insert(0) += 1;
    }
    let probs = counts
        .into_iter()
        .map(|(key, c)| (key, c as f64 / trials as f64))
        .collect();
    Ok(RestrictionDistribution {
        k,
        range,
        points: points as u32,
        mode: MuMode::Estimate { trials },
        probs,
    })
}

/// Measured continuity of mu in its argument: each outcome probability
/// moves by at most p^k ||f-g||_{U^{p^k+1}}, hence the total variation
/// distance by at most 2^{p^k - 1} p^k times the norm.
#[derive(Debug, Clone, Serialize)]
pub struct MuLipschitzReport {
    pub k: usize,
    /// ||f - g|| in the Gowers norm of order p^k + 1.
    pub norm: f64,
    /// max_v |mu_f[v] - mu_g[v]|.
    pub max_outcome_gap: f64,
    /// Per-outcome bound p^k * norm.
    pub outcome_bound: f64,
    /// Total variation distance between the two laws.
    pub stat_distance: f64,
    /// Bound 2^{p^k - 1} * p^k * norm on the total variation distance.
    pub total_bound: f64,
    pub holds: bool,
}

/// Compares the exact restriction laws of two [0,1]-valued functions
/// against the Gowers-norm continuity bound.
pub fn mu_lipschitz_check(
    f: &FiniteFunction,
    g: &FiniteFunction,
    k: usize,
) -> Result<MuLipschitzReport> {
    if f.params() != g.params() {
        return Err(Error::dim("functions live on different spaces".to_string()));
    }
    let mu_f = mu_exact(f, k)?;
    let mu_g = mu_exact(g, k)?;
    let fv = f.real_table()?;
    let gv = g.real_table()?;
    let diff: Vec<f64> = fv.iter().zip(&gv).map(|(a, b)| a - b).collect();
    let points = (f.params().p() as u64).pow(k as u32);
    let norm = gowers_norm_exact_real(f.params(), &diff, points as usize + 1)?;
    let mut max_gap = 0.0f64;
    for (key, p) in &mu_f.probs {
        let q = mu_g.probs.get(key).copied().unwrap_or(0.0);
        max_gap = max_gap.max((p - q).abs());
    }
    for (key, q) in &mu_g.probs {
        if !mu_f.probs.contains_key(key) {
            max_gap = max_gap.max(*q);
        }
    }
    let stat = mu_f.stat_distance(&mu_g)?;
    let outcome_bound = points as f64 * norm;
    let total_bound = (2.0f64).powi(points as i32 - 1) * points as f64 * norm;
    Ok(MuLipschitzReport {
        k,
        norm,
        max_outcome_gap: max_gap,
        outcome_bound,
        stat_distance: stat,
        total_bound,
        holds: max_gap <= outcome_bound + 1e-9 && stat <= total_bound + 1e-9,
    })
}

/// Sample statistics of the restricted L1 distance ||f(A.) - g(A.)||_1
/// over random embeddings A.
#[derive(Debug, Clone, Serialize)]
pub struct RestrictedL1Report {
    pub k: usize,
    pub trials: u64,
    pub mean: f64,
    /// Unbiased sample variance across embeddings.
    pub variance: f64,
    /// Global distance ||f - g||_1 (the mean concentrates here).
    pub global: f64,
    /// Variance bound 2 p^{-k} used by the acceptance battery.
    pub bound: f64,
    pub holds: bool,
}

/// Samples embeddings (trial t from stream (seed, t)) and measures how the
/// restricted L1 distance concentrates around the global one.
pub fn restricted_l1_variance(
    f: &FiniteFunction,
    g: &FiniteFunction,
    k: usize,
    trials: u64,
    seed: u64,
) -> Result<RestrictedL1Report> {
    if f.params() != g.params() {
        return Err(Error::dim("functions live on different spaces".to_string()));
    }
    if trials < 2 {
        return Err(Error::Config("variance needs at least two trials".to_string()));
    }
    let params = f.params();
    let mut samples = Vec::with_capacity(trials as usize);
    for t in 0..trials {
        let mut rng = DetRng::for_task(seed, t);
        let map = sample_affine_embedding(&mut rng, params, k)?;
        let rf = f.restrict(&map)?;
        let rg = g.restrict(&map)?;
        samples.push(crate::function::l1_distance(&rf, &rg)?);
    }
    let mean = crate::function::kahan_sum(samples.iter().copied()) / trials as f64;
    let variance = crate::function::kahan_sum(samples.iter().map(|s| (s - mean) * (s - mean)))
        / (trials - 1) as f64;
    let global = crate::function::l1_distance(f, g)?;
    let bound = 2.0 * (params.p() as f64).powi(-(k as i32));
    Ok(RestrictedL1Report {
        k,
        trials,
        mean,
        variance,
        global,
        bound,
        holds: variance <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldParams;

    fn params(p: u8, n: usize) -> FieldParams {
        FieldParams::new(p, n).unwrap()
    }

    #[test]
    fn constant_half_gives_uniform_outcomes() {
        // f = 1/2 everywhere: each rounding bit is a fair coin, so all four
        // outcomes of a line restriction have probability exactly 1/4.
        let pr = params(2, 3);
        let f = FiniteFunction::constant_real(pr, 0.5).unwrap();
        let mu = mu_exact(&f, 1).unwrap();
        assert_eq!(mu.probs.len(), 4);
        for (_, p) in &mu.probs {
            assert!((p - 0.25).abs() < 1e-12);
        }
        let total: f64 = mu.probs.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn finite_constant_restricts_to_constant() {
        let pr = params(3, 2);
        let f = FiniteFunction::new_finite(pr, 2, vec![1; pr.size()]).unwrap();
        let mu = mu_exact(&f, 1).unwrap();
        // Only the all-ones outcome (key 2^3 - 1 in base 2 over 3 points).
        assert_eq!(mu.probs.len(), 1);
        let (key, p) = mu.probs.iter().next().unwrap();
        assert_eq!(mu.unpack(*key), vec![1, 1, 1]);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_and_estimated_laws_agree() {
        let pr = params(2, 4);
        let mut rng = DetRng::new(50);
        let f = FiniteFunction::random_finite(pr, 2, &mut rng).unwrap();
        let exact = mu_exact(&f, 1).unwrap();
        let approx = mu_estimate(&f, 1, 40_000, 7).unwrap();
        let gap = exact.stat_distance(&approx).unwrap();
        assert!(gap < 0.02, "gap = {gap}");
        // And for a real-valued input with rounding draws.
        let g = FiniteFunction::random_unit(pr, &mut rng).unwrap();
        let exact = mu_exact(&g, 1).unwrap();
        let approx = mu_estimate(&g, 1, 40_000, 8).unwrap();
        let gap = exact.stat_distance(&approx).unwrap();
        assert!(gap < 0.02, "gap = {gap}");
    }

    #[test]
    fn estimates_are_reproducible() {
        let pr = params(3, 3);
        let mut rng = DetRng::new(51);
        let f = FiniteFunction::random_finite(pr, 3, &mut rng).unwrap();
        let a = mu_estimate(&f, 1, 500, 9).unwrap();
        let b = mu_estimate(&f, 1, 500, 9).unwrap();
        assert_eq!(a.probs, b.probs);
        let c = mu_estimate(&f, 1, 500, 10).unwrap();
        assert!(a.stat_distance(&c).unwrap() > 0.0);
    }

    #[test]
    fn stat_distance_is_a_metric_on_laws() {
        let pr = params(2, 4);
        let mut rng = DetRng::new(52);
        let f = FiniteFunction::random_finite(pr, 2, &mut rng).unwrap();
        let g = FiniteFunction::random_finite(pr, 2, &mut rng).unwrap();
        let mf = mu_exact(&f, 1).unwrap();
        let mg = mu_exact(&g, 1).unwrap();
        assert_eq!(mf.stat_distance(&mf).unwrap(), 0.0);
        let d = mf.stat_distance(&mg).unwrap();
        assert!((0.0..=1.0).contains(&d));
        assert_eq!(d, mg.stat_distance(&mf).unwrap());
    }

    #[test]
    fn lipschitz_bound_holds_for_close_functions() {
        let pr = params(2, 4);
        for seed in 0..5u64 {
            let mut rng = DetRng::new(60 + seed);
            let f = FiniteFunction::random_unit(pr, &mut rng).unwrap();
            // g pointwise close to f.
            let fv = f.real_table().unwrap();
            let gv: Vec<f64> = fv
                .iter()
                .map(|v| (v + 0.05 * (rng.unit() - 0.5)).clamp(0.0, 1.0))
                .collect();
            let g = FiniteFunction::new_real(pr, false, gv).unwrap();
            let report = mu_lipschitz_check(&f, &g, 1).unwrap();
            assert!(
                report.holds,
                "seed {seed}: gap {} vs {}, tv {} vs {}",
                report.max_outcome_gap,
                report.outcome_bound,
                report.stat_distance,
                report.total_bound
            );
        }
    }

    #[test]
    fn identical_functions_have_identical_laws() {
        let pr = params(2, 4);
        let mut rng = DetRng::new(70);
        let f = FiniteFunction::random_unit(pr, &mut rng).unwrap();
        let report = mu_lipschitz_check(&f, &f, 1).unwrap();
        assert!(report.norm < 1e-12);
        assert!(report.stat_distance < 1e-12);
        assert!(report.holds);
    }

    #[test]
    fn restricted_l1_concentrates() {
        let pr = params(2, 6);
        let mut rng = DetRng::new(71);
        let f = FiniteFunction::random_finite(pr, 2, &mut rng).unwrap();
        let g = FiniteFunction::random_finite(pr, 2, &mut rng).unwrap();
        let report = restricted_l1_variance(&f, &g, 3, 400, 11).unwrap();
        assert!(report.holds, "variance {} > {}", report.variance, report.bound);
        assert!((report.mean - report.global).abs() < 0.1);
    }

    #[test]
    fn exact_capacity_guard() {
        let pr = params(2, 16);
        let f = FiniteFunction::constant_real(pr, 0.5).unwrap();
        assert!(matches!(mu_exact(&f, 1), Err(Error::CapacityExceeded { .. })));
    }

    #[test]
    fn key_packing_roundtrip() {
        let pr = params(2, 3);
        let mut rng = DetRng::new(72);
        let f = FiniteFunction::random_finite(pr, 2, &mut rng).unwrap();
        let mu = mu_exact(&f, 1).unwrap();
        // Reconstruct each key from its unpacked digits.
        for (&key, _) in &mu.probs {
            let digits = mu.unpack(key);
            let mut back = 0u64;
            for &d in digits.iter().rev() {
                back = back * mu.range as u64 + d as u64;
            }
            assert_eq!(back, key);
        }
    }
}
