//! Self-check battery: re-derives the library's analytic identities and
//! inequalities on deterministic random instances and reports pass/fail per
//! check. The report is fully reproducible: same scale, sabotage, and seed
//! give byte-identical JSON (no timestamps, no ambient randomness).
//!
//! The optional sabotage knob deliberately corrupts one measurement so the
//! battery demonstrably detects errors instead of vacuously passing.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::decompose::{decompose, refinement_check, DecomposeConfig};
use crate::error::{Error, Result};
use crate::factor::PolynomialFactor;
use crate::field::FieldParams;
use crate::fourier::u2_norm_fourier;
use crate::function::{l1_norm, l2_norm, FiniteFunction};
use crate::gowers::{gowers_norm_exact_complex, gowers_norm_exact_real};
use crate::linear_forms::{counting_lemma_check, LinearFormSystem};
use crate::mu::{mu_lipschitz_check, restricted_l1_variance};
use crate::poly::{enumerate_polys, NonClassicalPoly};
use crate::rng::DetRng;
use crate::transfer::construct_psi;

/// Problem sizes the battery runs at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CheckScale {
    /// Spaces up to 16 points, a handful of instances per check.
    Small,
    /// Spaces up to 64 points, more instances, higher norm orders.
    Medium,
}

impl fmt::Display for CheckScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckScale::Small => write!(f, "small"),
            CheckScale::Medium => write!(f, "medium"),
        }
    }
}

impl FromStr for CheckScale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(CheckScale::Small),
            "medium" => Ok(CheckScale::Medium),
            other => Err(Error::Config(format!(
                "unknown scale {other:?} (expected small or medium)"
            ))),
        }
    }
}

/// Deliberate corruption injected into the battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sabotage {
    /// Honest run.
    None,
    /// Inflates the measured uniformity-norm gap so the norm-vs-spectrum
    /// identity check fails.
    Gowers,
}

impl fmt::Display for Sabotage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sabotage::None => write!(f, "none"),
            Sabotage::Gowers => write!(f, "gowers"),
        }
    }
}

impl FromStr for Sabotage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Sabotage::None),
            "gowers" => Ok(Sabotage::Gowers),
            other => Err(Error::Config(format!(
                "unknown sabotage {other:?} (expected none or gowers)"
            ))),
        }
    }
}

/// Outcome of one named check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    /// Number of instances exercised.
    pub instances: usize,
    /// Worst violation observed (negative or tiny when passing).
    pub worst_gap: f64,
    pub passed: bool,
    /// Human-readable note about the worst instance.
    pub detail: String,
}

/// Full battery outcome.
#[derive(Debug, Clone, Serialize)]
pub struct CheckSuiteReport {
    pub scale: String,
    pub sabotage: String,
    pub seed: u64,
    pub checks: Vec<CheckReport>,
    pub passed: bool,
}

const TOL: f64 = 1e-9;

struct Ctx {
    scale: CheckScale,
    sabotage: Sabotage,
    seed: u64,
}

impl Ctx {
    fn rng(&self, check: u64, instance: u64) -> DetRng {
        DetRng::for_task(self.seed, check * 1_000 + instance)
    }

    fn instances(&self) -> usize {
        match self.scale {
            CheckScale::Small => 5,
            CheckScale::Medium => 12,
        }
    }

    fn dims(&self) -> &'static [(u8, usize)] {
        match self.scale {
            CheckScale::Small => &[(2, 3), (2, 4)],
            CheckScale::Medium => &[(2, 4), (2, 6), (3, 3)],
        }
    }
}

fn report(name: &str, instances: usize, worst_gap: f64, detail: String) -> CheckReport {
    CheckReport {
        name: name.to_string(),
        instances,
        worst_gap,
        passed: worst_gap <= TOL,
        detail,
    }
}

/// Order-2 uniformity norm equals the fourth-moment of the spectrum.
fn check_u2_spectrum(ctx: &Ctx) -> Result<CheckReport> {
    let mut worst = f64::NEG_INFINITY;
    let mut detail = String::new();
    let mut count = 0;
    for (di, &(p, n)) in ctx.dims().iter().enumerate() {
        let params = FieldParams::new(p, n)?;
        for i in 0..ctx.instances() {
            let mut rng = ctx.rng(0, (di * 100 + i) as u64);
            let f = FiniteFunction::random_finite(params, p as u16, &mut rng)?;
            let table = f.character_table()?;
            let direct = gowers_norm_exact_complex(&params, &table, 2)?;
            let spectral = u2_norm_fourier(&params, &table);
            let mut gap = (direct - spectral).abs();
            if ctx.sabotage == Sabotage::Gowers {
                gap += 0.05;
            }
            if gap > worst {
                worst = gap;
                detail = format!("p={p} n={n}: direct {direct:.12} vs spectral {spectral:.12}");
            }
            count += 1;
        }
    }
    Ok(report("u2_spectrum_identity", count, worst, detail))
}

/// Uniformity norms increase with the order.
fn check_norm_monotonicity(ctx: &Ctx) -> Result<CheckReport> {
    let orders: &[usize] = match ctx.scale {
        CheckScale::Small => &[1, 2],
        CheckScale::Medium => &[1, 2, 3],
    };
    let mut worst = f64::NEG_INFINITY;
    let mut detail = String::new();
    let mut count = 0;
    for (di, &(p, n)) in ctx.dims().iter().enumerate() {
        let params = FieldParams::new(p, n)?;
        for i in 0..ctx.instances() {
            let mut rng = ctx.rng(1, (di * 100 + i) as u64);
            let f = FiniteFunction::random_signed(params, &mut rng)?;
            let table = f.real_table()?;
            for &d in orders {
                let lo = gowers_norm_exact_real(&params, &table, d)?;
                let hi = gowers_norm_exact_real(&params, &table, d + 1)?;
                let gap = lo - hi;
                if gap > worst {
                    worst = gap;
                    detail = format!("p={p} n={n} d={d}: U^{d} {lo:.12} vs U^{} {hi:.12}", d + 1);
                }
                count += 1;
            }
        }
    }
    Ok(report("norm_monotonicity", count, worst, detail))
}

/// The order-1 norm |E f| is at most the mean absolute value.
fn check_l1_bound(ctx: &Ctx) -> Result<CheckReport> {
    let mut worst = f64::NEG_INFINITY;
    let mut detail = String::new();
    let mut count = 0;
    for (di, &(p, n)) in ctx.dims().iter().enumerate() {
        let params = FieldParams::new(p, n)?;
        for i in 0..ctx.instances() {
            let mut rng = ctx.rng(2, (di * 100 + i) as u64);
            let f = FiniteFunction::random_signed(params, &mut rng)?;
            let table = f.real_table()?;
            let u1 = gowers_norm_exact_real(&params, &table, 1)?;
            let l1 = l1_norm(&table);
            let gap = u1 - l1;
            if gap > worst {
                worst = gap;
                detail = format!("p={p} n={n}: U^1 {u1:.12} vs L1 {l1:.12}");
            }
            count += 1;
        }
    }
    Ok(report("u1_l1_bound", count, worst, detail))
}

/// The order-2 norm is at most the L2 norm.
fn check_u2_l2(ctx: &Ctx) -> Result<CheckReport> {
    let mut worst = f64::NEG_INFINITY;
    let mut detail = String::new();
    let mut count = 0;
    for (di, &(p, n)) in ctx.dims().iter().enumerate() {
        let params = FieldParams::new(p, n)?;
        for i in 0..ctx.instances() {
            let mut rng = ctx.rng(3, (di * 100 + i) as u64);
            let f = FiniteFunction::random_signed(params, &mut rng)?;
            let table = f.real_table()?;
            let u2 = gowers_norm_exact_real(&params, &table, 2)?;
            let l2 = l2_norm(&table);
            let gap = u2 - l2;
            if gap > worst {
                worst = gap;
                detail = format!("p={p} n={n}: U^2 {u2:.12} vs L2 {l2:.12}");
            }
            count += 1;
        }
    }
    Ok(report("u2_l2_bound", count, worst, detail))
}

/// Counting bound: pattern averages move by at most m times the norm of
/// the difference.
fn check_counting(ctx: &Ctx) -> Result<CheckReport> {
    let mut worst = f64::NEG_INFINITY;
    let mut detail = String::new();
    let mut count = 0;
    let n = match ctx.scale {
        CheckScale::Small => 3,
        CheckScale::Medium => 4,
    };
    let params = FieldParams::new(2, n)?;
    let systems = [
        ("line", LinearFormSystem::affine_line(2)?),
        ("plane", LinearFormSystem::affine_subspace(2, 2)?),
    ];
    for i in 0..ctx.instances() {
        let mut rng = ctx.rng(4, i as u64);
        let f = FiniteFunction::random_unit(params, &mut rng)?;
        let g = FiniteFunction::random_unit(params, &mut rng)?;
        for (label, system) in &systems {
            let check = counting_lemma_check(system, &f, &g)?;
            let gap = check.lhs - check.rhs;
            if gap > worst {
                worst = gap;
                detail = format!(
                    "{label} on F_2^{n}: |gap| {:.12} vs bound {:.12}",
                    check.lhs, check.rhs
                );
            }
            count += 1;
        }
    }
    Ok(report("counting_bound", count, worst, detail))
}

/// Restricting a factor commutes with restricting its atom labels.
fn check_atom_restriction(ctx: &Ctx) -> Result<CheckReport> {
    let mut worst = f64::NEG_INFINITY;
    let mut detail = String::new();
    let mut count = 0;
    let (n, k) = match ctx.scale {
        CheckScale::Small => (4, 2),
        CheckScale::Medium => (5, 3),
    };
    let params = FieldParams::new(2, n)?;
    let polys: Vec<NonClassicalPoly> = enumerate_polys(&params, 1, 0)?.skip(1).collect();
    for i in 0..ctx.instances() {
        let mut rng = ctx.rng(5, i as u64);
        let a = rng.below(polys.len() as u64) as usize;
        let b = rng.below(polys.len() as u64) as usize;
        let factor = PolynomialFactor::from_polys(params, vec![polys[a].clone(), polys[b].clone()])?;
        let map = crate::affine::sample_affine_embedding(&mut rng, &params, k)?;
        let restricted = factor.restrict(&map)?;
        let direct = restricted.atom_labels();
        let gathered: Vec<u64> = map
            .image_table()?
            .iter()
            .map(|&idx| factor.atom_of(idx))
            .collect();
        let gap = if direct == gathered { 0.0 } else { 1.0 };
        if gap > worst {
            worst = gap;
            detail = format!("polys {a},{b}: labels {}",
                if direct == gathered { "commute" } else { "disagree" });
        }
        count += 1;
    }
    Ok(report("atom_restriction", count, worst, detail))
}

/// Atom measures deviate from uniform by at most the largest phase bias.
fn check_atom_sizes(ctx: &Ctx) -> Result<CheckReport> {
    let mut worst = f64::NEG_INFINITY;
    let mut detail = String::new();
    let mut count = 0;
    let n = match ctx.scale {
        CheckScale::Small => 4,
        CheckScale::Medium => 5,
    };
    let params = FieldParams::new(2, n)?;
    let polys: Vec<NonClassicalPoly> = enumerate_polys(&params, 2, 0)?.skip(1).collect();
    for i in 0..ctx.instances() {
        let mut rng = ctx.rng(6, i as u64);
        let a = rng.below(polys.len() as u64) as usize;
        let b = rng.below(polys.len() as u64) as usize;
        let factor = PolynomialFactor::from_polys(params, vec![polys[a].clone(), polys[b].clone()])?;
        let stats = factor.atom_stats();
        let rank = factor.rank_proxy(false)?;
        let gap = stats.max_abs_deviation - rank.max_bias;
        if gap > worst {
            worst = gap;
            detail = format!(
                "polys {a},{b}: deviation {:.12} vs bias {:.12}",
                stats.max_abs_deviation, rank.max_bias
            );
        }
        count += 1;
    }
    Ok(report("atom_size_bias", count, worst, detail))
}

/// Conditional expectations are stable under refinement within the
/// decomposition certificates.
fn check_refinement(ctx: &Ctx) -> Result<CheckReport> {
    let mut worst = f64::NEG_INFINITY;
    let mut detail = String::new();
    let mut count = 0;
    let n = match ctx.scale {
        CheckScale::Small => 4,
        CheckScale::Medium => 5,
    };
    let params = FieldParams::new(2, n)?;
    let config = DecomposeConfig::for_degree(1, 0.25, 2);
    let polys: Vec<NonClassicalPoly> = enumerate_polys(&params, 1, 0)?.skip(1).collect();
    for i in 0..ctx.instances() {
        let mut rng = ctx.rng(7, i as u64);
        let f = FiniteFunction::random_unit(params, &mut rng)?;
        let dec = decompose(&f, &config, None)?;
        let extra = polys
            .iter()
            .find(|p| !dec.factor.measures(&p.value_table()))
            .cloned();
        let Some(extra) = extra else { continue };
        let finer = dec.factor.adjoin_poly(extra)?;
        let check = refinement_check(&f, &dec, &finer)?;
        let gap = check.lhs - check.rhs;
        if gap > worst {
            worst = gap;
            detail = format!("lhs {:.12} vs rhs {:.12}", check.lhs, check.rhs);
        }
        count += 1;
    }
    Ok(report("refinement_bound", count, worst, detail))
}

/// Restriction laws are Lipschitz in the uniformity norm.
fn check_mu_lipschitz(ctx: &Ctx) -> Result<CheckReport> {
    let mut worst = f64::NEG_INFINITY;
    let mut detail = String::new();
    let mut count = 0;
    let n = match ctx.scale {
        CheckScale::Small => 3,
        CheckScale::Medium => 4,
    };
    let params = FieldParams::new(2, n)?;
    for i in 0..ctx.instances() {
        let mut rng = ctx.rng(8, i as u64);
        let f = FiniteFunction::random_unit(params, &mut rng)?;
        let g = FiniteFunction::random_unit(params, &mut rng)?;
        let rep = mu_lipschitz_check(&f, &g, 1)?;
        let gap = (rep.max_outcome_gap - rep.outcome_bound)
            .max(rep.stat_distance - rep.total_bound);
        if gap > worst {
            worst = gap;
            detail = format!(
                "outcome {:.12}/{:.12}, total {:.12}/{:.12}",
                rep.max_outcome_gap, rep.outcome_bound, rep.stat_distance, rep.total_bound
            );
        }
        count += 1;
    }
    Ok(report("mu_lipschitz", count, worst, detail))
}

/// The repair construction hits its two identities exactly.
fn check_psi_identities(ctx: &Ctx) -> Result<CheckReport> {
    let mut worst = f64::NEG_INFINITY;
    let mut detail = String::new();
    let mut count = 0;
    let n = match ctx.scale {
        CheckScale::Small => 4,
        CheckScale::Medium => 5,
    };
    let params = FieldParams::new(2, n)?;
    let polys: Vec<NonClassicalPoly> = enumerate_polys(&params, 1, 0)?.skip(1).collect();
    for i in 0..ctx.instances() {
        let mut rng = ctx.rng(9, i as u64);
        let a = rng.below(polys.len() as u64) as usize;
        let factor = PolynomialFactor::from_polys(params, vec![polys[a].clone()])?;
        let f = FiniteFunction::random_unit(params, &mut rng)?;
        // A measurable [0,1] target: constant per atom.
        let labels = factor.atom_labels();
        let mut atom_value = std::collections::BTreeMap::new();
        for &l in &labels {
            atom_value.entry(l).or_insert_with(|| rng.unit());
        }
        let phi_table: Vec<f64> = labels.iter().map(|l| atom_value[l]).collect();
        let phi = FiniteFunction::new_real(params, false, phi_table)?;
        let res = construct_psi(&f, &phi, &factor)?;
        let gap = (res.moved_mass - res.projection_gap).abs().max(res.cond_exp_error) - 1e-12;
        if gap > worst {
            worst = gap;
            detail = format!(
                "moved {:.12} vs gap {:.12}, cond err {:.3e}",
                res.moved_mass, res.projection_gap, res.cond_exp_error
            );
        }
        count += 1;
    }
    Ok(report("psi_identities", count, worst, detail))
}

/// Unit lifts of degree-d polynomials have full order-(d+1) norm, and the
/// canonical quadratic is strictly non-uniform at order 2.
fn check_poly_norms(ctx: &Ctx) -> Result<CheckReport> {
    let mut worst = f64::NEG_INFINITY;
    let mut detail = String::new();
    let mut count = 0;
    let n = 2;
    let params = FieldParams::new(2, n)?;
    let max_polys = match ctx.scale {
        CheckScale::Small => 16,
        CheckScale::Medium => 128,
    };
    for (idx, poly) in enumerate_polys(&params, 2, 1)?.take(max_polys).enumerate() {
        let d = poly.degree().max(1);
        let table = poly.value_table().unit_table();
        let norm = gowers_norm_exact_complex(&params, &table, d + 1)?;
        let gap = (norm - 1.0).abs();
        if gap > worst {
            worst = gap;
            detail = format!("poly #{idx} degree {d}: U^{} = {norm:.12}", d + 1);
        }
        count += 1;
    }
    // x1*x2 on F_2^2 has order-2 norm strictly below 1.
    let quad = NonClassicalPoly::from_terms(params, &[(vec![1, 1], 0, 1)])?;
    let table = quad.value_table().unit_table();
    let u2 = gowers_norm_exact_complex(&params, &table, 2)?;
    let gap = u2 - 0.99;
    if gap > worst {
        worst = gap;
        detail = format!("quadratic phase U^2 = {u2:.12} not separated from 1");
    }
    count += 1;
    Ok(report("poly_norm_characterization", count, worst, detail))
}

/// Restricted L1 distances concentrate around the global distance.
fn check_restricted_l1(ctx: &Ctx) -> Result<CheckReport> {
    let (n, k, trials) = match ctx.scale {
        CheckScale::Small => (4, 2, 64u64),
        CheckScale::Medium => (6, 3, 200u64),
    };
    let params = FieldParams::new(2, n)?;
    let mut rng = ctx.rng(10, 0);
    let f = FiniteFunction::random_unit(params, &mut rng)?;
    let g = FiniteFunction::random_unit(params, &mut rng)?;
    let rep = restricted_l1_variance(&f, &g, k, trials, ctx.seed ^ 0xabcd)?;
    let gap = rep.variance - rep.bound;
    let detail = format!(
        "variance {:.12} vs bound {:.12} over {trials} embeddings",
        rep.variance, rep.bound
    );
    Ok(report("restricted_l1_concentration", 1, gap, detail))
}

/// Runs the whole battery.
pub fn check_suite(scale: CheckScale, sabotage: Sabotage, seed: u64) -> Result<CheckSuiteReport> {
    let ctx = Ctx {
        scale,
        sabotage,
        seed,
    };
    let checks = vec![
        check_u2_spectrum(&ctx)?,
        check_norm_monotonicity(&ctx)?,
        check_l1_bound(&ctx)?,
        check_u2_l2(&ctx)?,
        check_counting(&ctx)?,
        check_atom_restriction(&ctx)?,
        check_atom_sizes(&ctx)?,
        check_refinement(&ctx)?,
        check_mu_lipschitz(&ctx)?,
        check_psi_identities(&ctx)?,
        check_poly_norms(&ctx)?,
        check_restricted_l1(&ctx)?,
    ];
    let passed = checks.iter().all(|c| c.passed);
    Ok(CheckSuiteReport {
        scale: scale.to_string(),
        sabotage: sabotage.to_string(),
        seed,
        checks,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes_honestly() {
        let rep = check_suite(CheckScale::Small, Sabotage::None, 0).unwrap();
        let failed: Vec<&str> = rep
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        assert!(rep.passed, "failing checks: {failed:?}");
        assert_eq!(rep.checks.len(), 12);
    }

    #[test]
    fn sabotage_fails_the_spectrum_check_only() {
        let rep = check_suite(CheckScale::Small, Sabotage::Gowers, 0).unwrap();
        assert!(!rep.passed);
        for c in &rep.checks {
            if c.name == "u2_spectrum_identity" {
                assert!(!c.passed);
            } else {
                assert!(c.passed, "{} should not be affected", c.name);
            }
        }
    }

    #[test]
    fn report_is_deterministic() {
        let a = check_suite(CheckScale::Small, Sabotage::None, 7).unwrap();
        let b = check_suite(CheckScale::Small, Sabotage::None, 7).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn medium_suite_passes() {
        let rep = check_suite(CheckScale::Medium, Sabotage::None, 3).unwrap();
        let failed: Vec<String> = rep
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{}: {} ({})", c.name, c.worst_gap, c.detail))
            .collect();
        assert!(rep.passed, "failing checks: {failed:?}");
    }

    #[test]
    fn scale_and_sabotage_parse() {
        assert_eq!("small".parse::<CheckScale>().unwrap(), CheckScale::Small);
        assert_eq!("medium".parse::<CheckScale>().unwrap(), CheckScale::Medium);
        assert_eq!("none".parse::<Sabotage>().unwrap(), Sabotage::None);
        assert_eq!("gowers".parse::<Sabotage>().unwrap(), Sabotage::Gowers);
        assert!("huge".parse::<CheckScale>().is_err());
        assert!("bias".parse::<Sabotage>().is_err());
    }
}
