//! Polynomial factors: partitions of F_p^n into joint level sets (atoms)
//! of a tuple of torsion-valued polynomials.
//!
//! A factor is an ordered tuple (P_1, .., P_C). Each P_i of depth k_i takes
//! p^{k_i+1} values, so an atom is labelled by the tuple of value
//! numerators, packed into a single u64 in mixed radix (P_1 is the fastest
//! digit). The order of the factor is the number of labels,
//! prod_i p^{k_i+1}, which may exceed the number of nonempty atoms.
//!
//! Factors may be coefficient-backed (built from polynomials in canonical
//! monomial form) or table-backed (e.g. pulled back along an affine map, in
//! which case only value tables exist). Every constituent keeps a declared
//! degree; table-backed measurements (`measured_degrees`, `reduced_depths`)
//! recover the analytic quantities for comparison.
//!
//! Text format: concatenated polynomial blocks. A header line has exactly
//! two fields `p n`; monomial lines have n + 2 >= 3 fields, so block
//! boundaries are unambiguous.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::affine::AffineMap;
use crate::error::{Error, Result};
use crate::field::FieldParams;
use crate::function::{kahan_sum, FiniteFunction, RangeKind};
use crate::gowers::gowers_norm_exact;
use crate::poly::{parse_poly_header, parse_poly_term, NonClassicalPoly, TorsionTable, VerifyMode};

/// Labels must fit in a u64.
pub const MAX_FACTOR_ORDER: u128 = 1 << 63;

/// Cap on nontrivial coefficient tuples scanned by the rank proxy.
pub const MAX_RANK_COMBOS: u128 = 1 << 16;

/// One constituent polynomial of a factor.
#[derive(Debug, Clone)]
pub struct FactorPoly {
    table: TorsionTable,
    coeffs: Option<NonClassicalPoly>,
    degree: usize,
}

impl FactorPoly {
    pub fn table(&self) -> &TorsionTable {
        &self.table
    }

    /// Canonical monomial form, present for coefficient-backed factors.
    pub fn coeffs(&self) -> Option<&NonClassicalPoly> {
        self.coeffs.as_ref()
    }

    /// Declared degree.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Declared depth (the level atoms are labelled at).
    pub fn depth(&self) -> u8 {
        self.table.level()
    }
}

/// An ordered tuple of polynomials with the induced atom partition.
#[derive(Debug, Clone)]
pub struct PolynomialFactor {
    params: FieldParams,
    polys: Vec<FactorPoly>,
    radix: Vec<u64>,
    order: u64,
}

impl PolynomialFactor {
    /// The trivial factor with a single atom.
    pub fn trivial(params: FieldParams) -> Self {
        PolynomialFactor {
            params,
            polys: Vec::new(),
            radix: Vec::new(),
            order: 1,
        }
    }

    pub fn from_polys(params: FieldParams, polys: Vec<NonClassicalPoly>) -> Result<Self> {
        let mut factor = PolynomialFactor::trivial(params);
        for poly in polys {
            factor = factor.adjoin_poly(poly)?;
        }
        Ok(factor)
    }

    /// Builds a table-backed factor with declared degrees.
    pub fn from_tables(
        params: FieldParams,
        tables: Vec<TorsionTable>,
        degrees: Vec<usize>,
    ) -> Result<Self> {
        if tables.len() != degrees.len() {
            return Err(Error::dim(format!(
                "{} tables but {} declared degrees",
                tables.len(),
                degrees.len()
            )));
        }
        let mut factor = PolynomialFactor::trivial(params);
        for (table, degree) in tables.into_iter().zip(degrees) {
            factor = factor.adjoin(FactorPoly {
                table,
                coeffs: None,
                degree,
            })?;
        }
        Ok(factor)
    }

    /// The factor extended by one more polynomial (appended last, so
    /// existing atom labels refine predictably).
    pub fn adjoin_poly(&self, poly: NonClassicalPoly) -> Result<Self> {
        if *poly.params() != self.params {
            return Err(Error::dim("polynomial lives on a different space".to_string()));
        }
        let degree = poly.degree();
        Ok(self
            .adjoin(FactorPoly {
                table: poly.value_table(),
                coeffs: Some(poly),
                degree,
            })
            .expect("order guard checked inside"))
    }

    pub fn adjoin_table(&self, table: TorsionTable, degree: usize) -> Result<Self> {
        self.adjoin(FactorPoly {
            table,
            coeffs: None,
            degree,
        })
    }

    fn adjoin(&self, poly: FactorPoly) -> Result<Self> {
        if *poly.table.params() != self.params {
            return Err(Error::dim("table lives on a different space".to_string()));
        }
        let modulus = poly.table.modulus();
        let order = self.order as u128 * modulus as u128;
        if order > MAX_FACTOR_ORDER {
            return Err(Error::capacity("factor order", order, MAX_FACTOR_ORDER));
        }
        let mut next = self.clone();
        next.radix.push(modulus);
        next.order = order as u64;
        next.polys.push(poly);
        Ok(next)
    }

    #[inline]
    pub fn params(&self) -> &FieldParams {
        &self.params
    }

    pub fn polys(&self) -> &[FactorPoly] {
        &self.polys
    }

    /// Complexity: the number of constituent polynomials.
    pub fn complexity(&self) -> usize {
        self.polys.len()
    }

    /// Number of atom labels, prod_i p^{k_i + 1}.
    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.polys.iter().map(|p| p.degree).collect()
    }

    pub fn depths(&self) -> Vec<u8> {
        self.polys.iter().map(|p| p.depth()).collect()
    }

    /// Largest declared degree (0 for the trivial factor).
    pub fn degree_bound(&self) -> usize {
        self.polys.iter().map(|p| p.degree).max().unwrap_or(0)
    }

    /// Mixed-radix atom label of a point (first polynomial fastest).
    pub fn atom_of(&self, idx: u32) -> u64 {
        let mut label = 0u64;
        for (poly, &radix) in self.polys.iter().zip(&self.radix).rev() {
            label = label * radix + poly.table.num(idx) as u64;
        }
        label
    }

    /// Decodes a label into per-polynomial value numerators.
    pub fn label_values(&self, label: u64) -> Vec<u64> {
        let mut rest = label;
        self.radix
            .iter()
            .map(|&radix| {
                let v = rest % radix;
                rest /= radix;
                v
            })
            .collect()
    }

    /// Dense per-point label table.
    pub fn atom_labels(&self) -> Vec<u64> {
        (0..self.params.size() as u32)
            .map(|idx| self.atom_of(idx))
            .collect()
    }

    /// Point counts of the nonempty atoms.
    pub fn atom_counts(&self) -> BTreeMap<u64, u64> {
        let mut counts = BTreeMap::new();
        for label in self.atom_labels() {
            *counts.entry(label).or_insert(0u64) += 1;
        }
        counts
    }

    /// Exact atom census and the worst-case deviation of atom measure from
    /// the uniform value 1/order (empty atoms contribute deviation 1/order).
    pub fn atom_stats(&self) -> AtomStats {
        let counts = self.atom_counts();
        let size = self.params.size() as u64;
        let uniform = 1.0 / self.order as f64;
        let mut max_dev = if (counts.len() as u64) < self.order {
            uniform
        } else {
            0.0
        };
        let mut min_count = u64::MAX;
        let mut max_count = 0u64;
        for &c in counts.values() {
            min_count = min_count.min(c);
            max_count = max_count.max(c);
            max_dev = max_dev.max((c as f64 / size as f64 - uniform).abs());
        }
        if counts.is_empty() {
            min_count = 0;
        }
        AtomStats {
            complexity: self.complexity(),
            order: self.order,
            nonempty: counts.len() as u64,
            min_count,
            max_count,
            uniform_measure: uniform,
            max_abs_deviation: max_dev,
            counts,
        }
    }

    /// Conditional expectation E[f | B]: on each atom, the mean of f there.
    ///
    /// Requires a real-valued view of f ({0,1}, [0,1] or [-1,1] ranges);
    /// outputs land in the same interval (clamped against rounding spill).
    pub fn cond_expectation(&self, f: &FiniteFunction) -> Result<FiniteFunction> {
        if f.params() != &self.params {
            return Err(Error::dim("function lives on a different space".to_string()));
        }
        let signed = match f.range() {
            RangeKind::Finite(2) | RangeKind::UnitInterval => false,
            RangeKind::SymmetricInterval => true,
            other => {
                return Err(Error::Range(format!(
                    "conditional expectation needs a [0,1] or [-1,1] valued function, got {other:?}"
                )))
            }
        };
        let values = f.real_table()?;
        let labels = self.atom_labels();
        let mut sums: HashMap<u64, (f64, f64, u64)> = HashMap::new();
        for (&label, &v) in labels.iter().zip(&values) {
            // compensated per-atom accumulation
            let entry = sums.entry(label).or_insert((0.0, 0.0, 0));
            let y = v - entry.1;
            let t = entry.0 + y;
            entry.1 = (t - entry.0) - y;
            entry.0 = t;
            entry.2 += 1;
        }
        let lo = if signed { -1.0 } else { 0.0 };
        let means: HashMap<u64, f64> = sums
            .into_iter()
            .map(|(label, (sum, _, count))| (label, (sum / count as f64).clamp(lo, 1.0)))
            .collect();
        let table: Vec<f64> = labels.iter().map(|label| means[label]).collect();
        FiniteFunction::new_real(self.params, signed, table)
    }

    /// True when every atom of `self` is contained in a single atom of
    /// `coarser` (label-consistency over all points).
    pub fn refines(&self, coarser: &PolynomialFactor) -> bool {
        if self.params != coarser.params {
            return false;
        }
        let mut seen: HashMap<u64, u64> = HashMap::new();
        for idx in 0..self.params.size() as u32 {
            let fine = self.atom_of(idx);
            let coarse = coarser.atom_of(idx);
            match seen.entry(fine) {
                std::collections::hash_map::Entry::Occupied(e) => {
                    if *e.get() != coarse {
                        return false;
                    }
                }
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(coarse);
                }
            }
        }
        true
    }

    /// Whether a torsion-valued table is constant on every atom.
    pub fn measures(&self, table: &TorsionTable) -> bool {
        if table.params() != &self.params {
            return false;
        }
        let mut seen: HashMap<u64, u32> = HashMap::new();
        for idx in 0..self.params.size() as u32 {
            match seen.entry(self.atom_of(idx)) {
                std::collections::hash_map::Entry::Occupied(e) => {
                    if *e.get() != table.num(idx) {
                        return false;
                    }
                }
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(table.num(idx));
                }
            }
        }
        true
    }

    /// Pullback along an affine map: each constituent is composed with the
    /// map (tables gathered; declared degrees and depths carried over).
    pub fn restrict(&self, map: &AffineMap) -> Result<PolynomialFactor> {
        let source = map.source_params()?;
        let mut out = PolynomialFactor::trivial(source);
        for poly in &self.polys {
            out = out.adjoin(FactorPoly {
                table: poly.table.restrict(map)?,
                coeffs: None,
                degree: poly.degree,
            })?;
        }
        Ok(out)
    }

    /// Analytic degree of each constituent, measured on its table.
    pub fn measured_degrees(&self, max_d: usize) -> Result<Vec<Option<usize>>> {
        self.polys
            .iter()
            .map(|p| p.table.degree_at_most(max_d))
            .collect()
    }

    /// Reduced depth of each constituent, measured on its table.
    pub fn reduced_depths(&self) -> Vec<u8> {
        self.polys.iter().map(|p| p.table.reduced_depth()).collect()
    }

    /// Scans all nontrivial coefficient tuples lambda and reports the worst
    /// (largest) bias |E e(sum_i lambda_i P_i)|. Small values certify high
    /// rank: atoms are then near-equidistributed. With `with_norms`, also
    /// reports the Gowers-norm surrogate: for each combination the norm
    /// ||e(sum lambda_i P_i)||_{U^{d_lambda}} at the combination's own
    /// measured degree d_lambda (degree can drop under integer scaling, so
    /// it is remeasured per tuple; a degree-0 combination scores 1).
    pub fn rank_proxy(&self, with_norms: bool) -> Result<RankProxyReport> {
        let combos = self.order as u128 - 1;
        if combos > MAX_RANK_COMBOS {
            return Err(Error::capacity("rank proxy scan", combos, MAX_RANK_COMBOS));
        }
        let mut report = RankProxyReport {
            combos: combos as u64,
            max_bias: 0.0,
            bias_argmax: Vec::new(),
            max_norm: if with_norms { Some(0.0) } else { None },
            norm_argmax: None,
        };
        if self.polys.is_empty() {
            return Ok(report);
        }
        let mut lambda = vec![0u64; self.polys.len()];
        loop {
            // mixed-radix odometer over coefficient tuples, skipping zero
            let mut i = 0;
            loop {
                lambda[i] += 1;
                if lambda[i] == self.radix[i] {
                    lambda[i] = 0;
                    i += 1;
                    if i == self.polys.len() {
                        return Ok(report);
                    }
                } else {
                    break;
                }
            }
            let mut combo = self.polys[0].table.scale(lambda[0]);
            for (poly, &l) in self.polys.iter().zip(&lambda).skip(1) {
                combo = combo.add(&poly.table.scale(l))?;
            }
            let bias = combo.bias();
            if bias > report.max_bias {
                report.max_bias = bias;
                report.bias_argmax = lambda.clone();
            }
            if with_norms {
                let degree = combo
                    .degree_at_most(self.degree_bound())?
                    .unwrap_or(self.degree_bound() + 1);
                let norm = if degree == 0 {
                    1.0
                } else {
                    let f = FiniteFunction::new_complex(self.params, combo.unit_table())?;
                    gowers_norm_exact(&f, degree)?.value
                };
                if norm > report.max_norm.unwrap() {
                    report.max_norm = Some(norm);
                    report.norm_argmax = Some(lambda.clone());
                }
            }
        }
    }

    /// Serializes coefficient-backed factors as concatenated poly blocks.
    pub fn to_text(&self) -> Result<String> {
        let mut out = String::new();
        for poly in &self.polys {
            let coeffs = poly.coeffs.as_ref().ok_or_else(|| {
                Error::Range("table-backed factor has no coefficient form".to_string())
            })?;
            out.push_str(&coeffs.to_text());
        }
        Ok(out)
    }

    /// Parses concatenated poly blocks; all headers must agree.
    pub fn from_text(text: &str) -> Result<PolynomialFactor> {
        let mut params: Option<FieldParams> = None;
        let mut polys: Vec<NonClassicalPoly> = Vec::new();
        let mut current: Vec<(Vec<u8>, u8, u8)> = Vec::new();
        let mut saw_header = false;
        for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
            if line.is_empty() {
                continue;
            }
            let fields = line.split_whitespace().count();
            if fields == 2 {
                let (next_params, _) = parse_poly_header(lineno, line)?;
                match params {
                    None => params = Some(next_params),
                    Some(prev) => {
                        if prev != next_params {
                            return Err(Error::parse(
                                lineno,
                                "all blocks of a factor must share one header",
                            ));
                        }
                        polys.push(NonClassicalPoly::from_terms(prev, &current)?);
                        current.clear();
                    }
                }
                saw_header = true;
            } else {
                let params = params.ok_or_else(|| {
                    Error::parse(lineno, "monomial line before any `p n` header")
                })?;
                current.push(parse_poly_term(lineno, line, &params)?);
            }
        }
        let params = params.ok_or_else(|| Error::parse(1, "empty factor file"))?;
        if saw_header {
            polys.push(NonClassicalPoly::from_terms(params, &current)?);
        }
        PolynomialFactor::from_polys(params, polys)
    }

    /// Checks declared degrees analytically (exhaustive per table).
    pub fn verify_declared_degrees(&self) -> Result<bool> {
        for poly in &self.polys {
            if !poly.table.verify_degree(poly.degree, VerifyMode::Exhaustive)? {
                return Ok(false);
            }
            if poly.degree > 0
                && poly
                    .table
                    .verify_degree(poly.degree - 1, VerifyMode::Exhaustive)?
            {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Exact atom census.
#[derive(Debug, Clone, Serialize)]
pub struct AtomStats {
    pub complexity: usize,
    pub order: u64,
    pub nonempty: u64,
    pub min_count: u64,
    pub max_count: u64,
    pub uniform_measure: f64,
    pub max_abs_deviation: f64,
    pub counts: BTreeMap<u64, u64>,
}

/// Result of the rank-proxy scan.
#[derive(Debug, Clone, Serialize)]
pub struct RankProxyReport {
    pub combos: u64,
    pub max_bias: f64,
    pub bias_argmax: Vec<u64>,
    pub max_norm: Option<f64>,
    pub norm_argmax: Option<Vec<u64>>,
}

/// Inner product E f(x) conj(e(T(x))) of a real-viewable function against
/// the unit lift of a torsion table.
pub fn phase_correlation(f: &FiniteFunction, table: &TorsionTable) -> Result<f64> {
    if f.params() != table.params() {
        return Err(Error::dim("mismatched spaces".to_string()));
    }
    let values = f.real_table()?;
    let phases = table.unit_table();
    let re = kahan_sum(values.iter().zip(&phases).map(|(v, e)| v * e.re));
    let im = kahan_sum(values.iter().zip(&phases).map(|(v, e)| v * -e.im));
    let n = values.len() as f64;
    Ok((re / n).hypot(im / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::DetRng;

    fn params(p: u8, n: usize) -> FieldParams {
        FieldParams::new(p, n).unwrap()
    }

    fn linear(pr: FieldParams, axis: usize) -> NonClassicalPoly {
        let mut exps = vec![0u8; pr.n()];
        exps[axis] = 1;
        NonClassicalPoly::from_terms(pr, &[(exps, 0, 1)]).unwrap()
    }

    #[test]
    fn trivial_factor_has_one_atom() {
        let pr = params(2, 3);
        let b = PolynomialFactor::trivial(pr);
        assert_eq!(b.order(), 1);
        assert_eq!(b.complexity(), 0);
        assert!(b.atom_labels().iter().all(|&l| l == 0));
        let stats = b.atom_stats();
        assert_eq!(stats.nonempty, 1);
        assert_eq!(stats.max_abs_deviation, 0.0);
    }

    #[test]
    fn coordinate_factor_atoms_are_exact() {
        // B = (x_1, x_2) over F_3^2: 9 atoms of size 1 each.
        let pr = params(3, 2);
        let b = PolynomialFactor::from_polys(pr, vec![linear(pr, 0), linear(pr, 1)]).unwrap();
        assert_eq!(b.order(), 9);
        let stats = b.atom_stats();
        assert_eq!(stats.nonempty, 9);
        assert_eq!((stats.min_count, stats.max_count), (1, 1));
        assert!(stats.max_abs_deviation < 1e-15);
        // Labels decode back to the coordinate values.
        for pt in pr.points() {
            let label = b.atom_of(pt.index);
            // numerators at level 0 are |x_i| directly
            assert_eq!(
                b.label_values(label),
                vec![pt.coords[0] as u64, pt.coords[1] as u64]
            );
        }
    }

    #[test]
    fn single_linear_form_atoms_and_rank() {
        let pr = params(2, 3);
        let b = PolynomialFactor::from_polys(pr, vec![linear(pr, 0)]).unwrap();
        assert_eq!(b.order(), 2);
        let stats = b.atom_stats();
        assert_eq!(stats.nonempty, 2);
        assert_eq!(stats.min_count, 4);
        // A single nonzero linear form is perfectly equidistributed.
        let rank = b.rank_proxy(true).unwrap();
        assert_eq!(rank.combos, 1);
        assert!(rank.max_bias < 1e-12);
        // U^1 norm of a mean-zero character is 0.
        assert!(rank.max_norm.unwrap() < 1e-9);
    }

    #[test]
    fn dependent_polys_score_full_bias() {
        // B = (x_1, x_1): the combination lambda = (1, 1) has bias 1.
        let pr = params(2, 2);
        let b = PolynomialFactor::from_polys(pr, vec![linear(pr, 0), linear(pr, 0)]).unwrap();
        let rank = b.rank_proxy(false).unwrap();
        assert_eq!(rank.combos, 3);
        assert!((rank.max_bias - 1.0).abs() < 1e-12);
        assert_eq!(rank.bias_argmax, vec![1, 1]);
    }

    #[test]
    fn quadratic_factor_deviation_bounded_by_bias() {
        // Atom-size deviation of a one-poly factor is controlled by the
        // worst character bias over multiples.
        let pr = params(2, 3);
        let quad = NonClassicalPoly::from_terms(pr, &[(vec![1, 1, 0], 0, 1)]).unwrap();
        let b = PolynomialFactor::from_polys(pr, vec![quad]).unwrap();
        let stats = b.atom_stats();
        let rank = b.rank_proxy(false).unwrap();
        // x1 x2 = 0 on 6 of 8 points: deviation |6/8 - 1/2| = 1/4 = bias/2.
        assert!((stats.max_abs_deviation - 0.25).abs() < 1e-12);
        assert!((rank.max_bias - 0.5).abs() < 1e-12);
        assert!(stats.max_abs_deviation <= rank.max_bias + 1e-12);
    }

    #[test]
    fn cond_expectation_is_atomwise_mean_and_idempotent() {
        let pr = params(2, 4);
        let b =
            PolynomialFactor::from_polys(pr, vec![linear(pr, 0), linear(pr, 1)]).unwrap();
        let mut rng = DetRng::new(11);
        let f = FiniteFunction::random_unit(pr, &mut rng).unwrap();
        let proj = b.cond_expectation(&f).unwrap();
        // Constant on atoms, mean preserved globally and per atom.
        let labels = b.atom_labels();
        for (i, &li) in labels.iter().enumerate() {
            for (j, &lj) in labels.iter().enumerate() {
                if li == lj {
                    assert_eq!(
                        proj.get_real(i as u32).unwrap(),
                        proj.get_real(j as u32).unwrap()
                    );
                }
            }
        }
        let again = b.cond_expectation(&proj).unwrap();
        for idx in 0..pr.size() as u32 {
            assert!((proj.get_real(idx).unwrap() - again.get_real(idx).unwrap()).abs() < 1e-12);
        }
        let mean_f = kahan_sum((0..pr.size() as u32).map(|i| f.get_real(i).unwrap()))
            / pr.size() as f64;
        let mean_p = kahan_sum((0..pr.size() as u32).map(|i| proj.get_real(i).unwrap()))
            / pr.size() as f64;
        assert!((mean_f - mean_p).abs() < 1e-12);
    }

    #[test]
    fn measurable_functions_have_zero_phase_correlation_with_residue() {
        // E[f3 | B] = 0 forces zero correlation against B-measurable phases.
        let pr = params(2, 4);
        let b = PolynomialFactor::from_polys(pr, vec![linear(pr, 2)]).unwrap();
        let mut rng = DetRng::new(13);
        let f = FiniteFunction::random_unit(pr, &mut rng).unwrap();
        let f1 = b.cond_expectation(&f).unwrap();
        let resid: Vec<f64> = (0..pr.size() as u32)
            .map(|i| f.get_real(i).unwrap() - f1.get_real(i).unwrap())
            .collect();
        let f3 = FiniteFunction::new_real(pr, true, resid).unwrap();
        let corr = phase_correlation(&f3, &b.polys()[0].table).unwrap();
        assert!(corr < 1e-12, "corr = {corr}");
    }

    #[test]
    fn refinement_detection() {
        let pr = params(2, 3);
        let coarse = PolynomialFactor::from_polys(pr, vec![linear(pr, 0)]).unwrap();
        let fine =
            PolynomialFactor::from_polys(pr, vec![linear(pr, 0), linear(pr, 1)]).unwrap();
        assert!(fine.refines(&coarse));
        assert!(!coarse.refines(&fine));
        assert!(fine.refines(&PolynomialFactor::trivial(pr)));
        // Semantic refinement also holds for reordered constituents.
        let fine_swapped =
            PolynomialFactor::from_polys(pr, vec![linear(pr, 1), linear(pr, 0)]).unwrap();
        assert!(fine_swapped.refines(&coarse));
    }

    #[test]
    fn measurability_check() {
        let pr = params(2, 3);
        let b = PolynomialFactor::from_polys(pr, vec![linear(pr, 0), linear(pr, 1)]).unwrap();
        // x_1 + x_2 is determined by the atoms; x_3 is not.
        let sum = linear(pr, 0).add(&linear(pr, 1));
        assert!(b.measures(&sum.value_table()));
        assert!(!b.measures(&linear(pr, 2).value_table()));
    }

    #[test]
    fn restriction_carries_declared_shape() {
        let pr = params(2, 4);
        let quad = NonClassicalPoly::from_terms(pr, &[(vec![1, 1, 0, 0], 0, 1)]).unwrap();
        let deep = NonClassicalPoly::from_terms(pr, &[(vec![0, 0, 1, 0], 1, 1)]).unwrap();
        let b = PolynomialFactor::from_polys(pr, vec![quad, deep]).unwrap();
        let mut rng = DetRng::new(17);
        let map = crate::affine::sample_affine_embedding(&mut rng, &pr, 2).unwrap();
        let restricted = b.restrict(&map).unwrap();
        assert_eq!(restricted.degrees(), b.degrees());
        assert_eq!(restricted.depths(), b.depths());
        assert_eq!(restricted.order(), b.order());
        // Labels commute with the embedding.
        let images = map.image_table().unwrap();
        for (src, &img) in images.iter().enumerate() {
            assert_eq!(restricted.atom_of(src as u32), b.atom_of(img));
        }
    }

    #[test]
    fn text_roundtrip() {
        let pr = params(3, 2);
        let p1 = linear(pr, 0);
        let p2 = NonClassicalPoly::from_terms(pr, &[(vec![1, 1], 0, 2), (vec![0, 1], 0, 1)])
            .unwrap();
        let b = PolynomialFactor::from_polys(pr, vec![p1, p2]).unwrap();
        let text = b.to_text().unwrap();
        let back = PolynomialFactor::from_text(&text).unwrap();
        assert_eq!(back.complexity(), 2);
        assert_eq!(back.atom_labels(), b.atom_labels());
        // Zero polynomial blocks (bare headers) survive the roundtrip.
        let with_zero = "2 2\n2 2\n0 1 1 0\n";
        let f = PolynomialFactor::from_text(with_zero).unwrap();
        assert_eq!(f.complexity(), 2);
        assert_eq!(f.polys()[0].degree(), 0);
        // Mismatched headers are rejected with the offending line.
        match PolynomialFactor::from_text("2 2\n0 1 1 0\n3 2\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn factor_order_capacity_guard() {
        let pr = params(2, 2);
        let mut b = PolynomialFactor::trivial(pr);
        let table = linear(pr, 0).value_table();
        for _ in 0..63 {
            b = b.adjoin_table(table.clone(), 1).unwrap();
        }
        assert!(matches!(
            b.adjoin_table(table.clone(), 1),
            Err(Error::CapacityExceeded { .. })
        ));
    }
}
