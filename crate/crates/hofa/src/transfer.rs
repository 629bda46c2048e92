//! Moving measurable data between matched factors on different spaces, and
//! the exact repair construction.
//!
//! Two factors match when their constituents pair up with equal declared
//! degrees and depths; atom labels then range over the same mixed-radix
//! space, and a function measurable in one factor transfers to the other
//! by copying atom values across equal labels. Labels realized only on the
//! target side receive 0 and are counted, not silently invented.
//!
//! `construct_psi` repairs a bounded function toward a measurable target:
//! given f and a factor-measurable phi with values in [0,1], it produces
//! psi with E[psi | B] = phi exactly and ||f - psi||_1 = ||E[f|B] - phi||_1
//! exactly, moving f on each atom by the cheapest monotone rescaling.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::factor::PolynomialFactor;
use crate::function::{l1_norm, FiniteFunction, RangeKind};

/// Copies atom values across equal labels between matched factors.
pub struct TransferOperator<'a> {
    source: &'a PolynomialFactor,
    target: &'a PolynomialFactor,
}

/// A transferred function plus bookkeeping about label coverage.
#[derive(Debug)]
pub struct TransferResult {
    pub function: FiniteFunction,
    /// Number of target points whose atom label never occurs on the source
    /// side (their value defaults to 0).
    pub unrealized_points: u64,
    /// Number of distinct unrealized labels.
    pub unrealized_labels: u64,
}

impl<'a> TransferOperator<'a> {
    /// Validates that the factors match constituent by constituent.
    pub fn new(source: &'a PolynomialFactor, target: &'a PolynomialFactor) -> Result<Self> {
        if source.params().p() != target.params().p() {
            return Err(Error::SignatureMismatch(format!(
                "factors over different characteristics {} and {}",
                source.params().p(),
                target.params().p()
            )));
        }
        if source.complexity() != target.complexity() {
            return Err(Error::SignatureMismatch(format!(
                "factor complexities differ: {} vs {}",
                source.complexity(),
                target.complexity()
            )));
        }
        if source.degrees() != target.degrees() || source.depths() != target.depths() {
            return Err(Error::SignatureMismatch(format!(
                "constituent signatures differ: degrees {:?}/{:?}, depths {:?}/{:?}",
                source.degrees(),
                target.degrees(),
                source.depths(),
                target.depths()
            )));
        }
        Ok(TransferOperator { source, target })
    }

    /// Transfers a source-measurable function to the target space. Fails
    /// with NotMeasurable when g is not constant on some source atom.
    pub fn transfer(&self, g: &FiniteFunction) -> Result<TransferResult> {
        if g.params() != self.source.params() {
            return Err(Error::dim("function does not live on the source space".to_string()));
        }
        let values = g.real_table()?;
        let labels = self.source.atom_labels();
        let mut atom_values: HashMap<u64, f64> = HashMap::new();
        for (&label, &v) in labels.iter().zip(&values) {
            match atom_values.get(&label) {
                Some(&prev) => {
                    if (prev - v).abs() > 1e-12 {
                        return Err(Error::NotMeasurable(format!(
                            "label {label} carries values {prev} and {v}"
                        )));
                    }
                }
                None => {
                    atom_values.insert(label, v);
                }
            }
        }
        let mut unrealized_points = 0u64;
        let mut unrealized_labels: HashMap<u64, ()> = HashMap::new();
        let target_labels = self.target.atom_labels();
        let table: Vec<f64> = target_labels
            .iter()
            .map(|label| match atom_values.get(label) {
                Some(&v) => v,
                None => {
                    unrealized_points += 1;
                    unrealized_labels.insert(*label, ());
                    0.0
                }
            })
            .collect();
        let signed = matches!(g.range(), RangeKind::SymmetricInterval);
        Ok(TransferResult {
            function: FiniteFunction::new_real(*self.target.params(), signed, table)?,
            unrealized_points,
            unrealized_labels: unrealized_labels.len() as u64,
        })
    }
}

/// The repaired function with its measured identities.
#[derive(Debug)]
pub struct PsiResult {
    pub psi: FiniteFunction,
    /// ||f - psi||_1 (exact identity: equals `projection_gap`).
    pub moved_mass: f64,
    /// ||E[f|B] - phi||_1.
    pub projection_gap: f64,
    /// sup over points of |E[psi|B] - phi|.
    pub cond_exp_error: f64,
}

/// Per-atom repair: with a = E[f|B] and b = phi on an atom,
///
/// * a = 0  -> psi = b (constant),
/// * a = 1  -> psi = b (constant),
/// * b <= a -> psi = f * b / a (scale down),
/// * b >  a -> psi = f + (b - a)(1 - f)/(1 - a) (raise toward 1),
///
/// each case preserving [0,1], hitting E[psi | atom] = b exactly, and
/// moving exactly |a - b| of L1 mass on the atom.
pub fn construct_psi(
    f: &FiniteFunction,
    phi: &FiniteFunction,
    factor: &PolynomialFactor,
) -> Result<PsiResult> {
    if f.params() != factor.params() || phi.params() != factor.params() {
        return Err(Error::dim("function and factor spaces disagree".to_string()));
    }
    match f.range() {
        RangeKind::Finite(2) | RangeKind::UnitInterval => {}
        other => {
            return Err(Error::Range(format!(
                "repair needs a [0,1]-valued function, got {other:?}"
            )))
        }
    }
    let fv = f.real_table()?;
    let pv = phi.real_table()?;
    if let Some(&v) = pv.iter().find(|&&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::Range(format!("target value {v} outside [0,1]")));
    }
    let labels = factor.atom_labels();
    // Atom means of f and atom values of phi (phi must be measurable).
    let f1 = factor.cond_expectation(f)?;
    let av = f1.real_table()?;
    let mut phi_atom: HashMap<u64, f64> = HashMap::new();
    for (&label, &b) in labels.iter().zip(&pv) {
        match phi_atom.get(&label) {
            Some(&prev) => {
                if (prev - b).abs() > 1e-12 {
                    return Err(Error::NotMeasurable(format!(
                        "repair target not constant on atom {label}: {prev} vs {b}"
                    )));
                }
            }
            None => {
                phi_atom.insert(label, b);
            }
        }
    }
    let psi_table: Vec<f64> = fv
        .iter()
        .zip(&av)
        .zip(&pv)
        .map(|((&x, &a), &b)| {
            let v = if a <= 0.0 || a >= 1.0 {
                b
            } else if b <= a {
                x * b / a
            } else {
                x + (b - a) * (1.0 - x) / (1.0 - a)
            };
            v.clamp(0.0, 1.0)
        })
        .collect();
    let psi = FiniteFunction::new_real(*f.params(), false, psi_table)?;
    let moved: Vec<f64> = fv
        .iter()
        .zip(psi.real_table()?)
        .map(|(&x, y)| x - y)
        .collect();
    let gap: Vec<f64> = av.iter().zip(&pv).map(|(&a, &b)| a - b).collect();
    let proj = factor.cond_expectation(&psi)?;
    let cond_err = proj
        .real_table()?
        .iter()
        .zip(&pv)
        .fold(0.0f64, |m, (&x, &b)| m.max((x - b).abs()));
    Ok(PsiResult {
        psi,
        moved_mass: l1_norm(&moved),
        projection_gap: l1_norm(&gap),
        cond_exp_error: cond_err,
    })
}

/// Serializable summary of the repair identities.
#[derive(Debug, Clone, Serialize)]
pub struct PsiReport {
    pub moved_mass: f64,
    pub projection_gap: f64,
    pub cond_exp_error: f64,
    pub identities_hold: bool,
}

impl PsiResult {
    pub fn report(&self) -> PsiReport {
        PsiReport {
            moved_mass: self.moved_mass,
            projection_gap: self.projection_gap,
            cond_exp_error: self.cond_exp_error,
            identities_hold: (self.moved_mass - self.projection_gap).abs() < 1e-12
                && self.cond_exp_error < 1e-12,
        }
    }
}
