//! Property oracles: membership and exact distance queries for classes of
//! finite-valued functions, including bounded-degree (generalized
//! Reed-Muller) codes and explicitly enumerated affine-invariant families.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::field::{FieldParams, Fp};
use crate::function::{hamming_distance, FiniteFunction, RangeKind};
use crate::linalg::MatFp;
use crate::poly::{count_polys, enumerate_polys};
use crate::rng::DetRng;

/// Distance queries enumerate members; cap how many.
pub const MAX_MEMBERS: u128 = 1 << 22;

/// A property of functions F_p^n -> {0..R-1} with exact membership and
/// (normalized Hamming) distance queries.
pub trait PropertyOracle {
    fn name(&self) -> String;
    fn params(&self) -> &FieldParams;
    /// Outcome alphabet size.
    fn range(&self) -> u16;
    fn is_member(&self, f: &FiniteFunction) -> Result<bool>;
    /// dist(f, P) = min over members g of the fraction of disagreeing
    /// points.
    fn distance(&self, f: &FiniteFunction) -> Result<f64>;
}

/// Oracles that can also produce a witness: a member realizing the
/// distance. Ties break toward the earliest member in enumeration order.
pub trait NearestMember: PropertyOracle {
    fn nearest_member(&self, f: &FiniteFunction) -> Result<FiniteFunction>;
}

fn nearest_of<'a>(
    members: impl Iterator<Item = &'a FiniteFunction>,
    f: &FiniteFunction,
) -> Result<FiniteFunction> {
    let mut best: Option<(f64, &FiniteFunction)> = None;
    for g in members {
        let d = hamming_distance(f, g)?;
        if best.map_or(true, |(bd, _)| d < bd) {
            best = Some((d, g));
        }
    }
    best.map(|(_, g)| g.clone())
        .ok_or_else(|| Error::Config("property has no members".to_string()))
}

fn check_compatible(oracle: &dyn PropertyOracle, f: &FiniteFunction) -> Result<()> {
    if f.params() != oracle.params() {
        return Err(Error::dim(format!(
            "function on F_{}^{} queried against a property on F_{}^{}",
            f.params().p(),
            f.params().n(),
            oracle.params().p(),
            oracle.params().n()
        )));
    }
    match f.range() {
        RangeKind::Finite(r) if r == oracle.range() => Ok(()),
        other => Err(Error::Range(format!(
            "property expects values in [{}], got {other:?}",
            oracle.range()
        ))),
    }
}

/// Exact multivariate interpolation of a function F_p^n -> F_p: returns
/// the coefficient tensor c with
///
/// ```text
/// f(x) = sum_e c[e] * x_1^{e_1} .. x_n^{e_n}',   e_i in {0..p-1}
/// ```
///
/// indexed like point indices (coordinate exponent e_1 is the fastest
/// digit). Each axis is interpolated by applying the inverse Vandermonde
/// matrix at nodes 0..p-1.
pub fn classical_coefficients(f: &FiniteFunction) -> Result<Vec<u8>> {
    let params = f.params();
    let p = params.p();
    match f.range() {
        RangeKind::Finite(r) if r as u8 == p => {}
        other => {
            return Err(Error::Range(format!(
                "interpolation needs values in the field itself, got {other:?}"
            )))
        }
    }
    let fp = Fp::new(p)?;
    // Inverse of the Vandermonde matrix V[i][j] = i^j over F_p.
    let rows: Vec<Vec<u8>> = (0..p)
        .map(|i| (0..p).map(|j| fp.pow(i, j as u32)).collect())
        .collect();
    let vm = MatFp::from_rows(fp, &rows)?;
    let inv = vm.left_inverse()?;
    let mut coeffs: Vec<u8> = f.finite_table()?.to_vec();
    let n = params.n();
    let size = params.size();
    let pu = p as usize;
    // One axis at a time: transform every line along that axis.
    let mut stride = 1usize;
    for _ in 0..n {
        let block = stride * pu;
        let mut line = vec![0u8; pu];
        for base in (0..size).step_by(block) {
            for off in 0..stride {
                let start = base + off;
                for (t, slot) in line.iter_mut().enumerate() {
                    *slot = coeffs[start + t * stride];
                }
                let transformed = inv.mul_vec(&line)?;
                for (t, v) in transformed.iter().enumerate() {
                    coeffs[start + t * stride] = *v;
                }
            }
        }
        stride = block;
    }
    Ok(coeffs)
}

/// Total degree of a function F_p^n -> F_p as a classical polynomial
/// (per-variable degree at most p-1); the zero function has degree 0.
pub fn classical_degree(f: &FiniteFunction) -> Result<usize> {
    let params = f.params();
    let coeffs = classical_coefficients(f)?;
    let mut degree = 0usize;
    for (idx, &c) in coeffs.iter().enumerate() {
        if c != 0 {
            let weight: usize = params
                .coords_of(idx as u32)
                .iter()
                .map(|&e| e as usize)
                .sum();
            degree = degree.max(weight);
        }
    }
    Ok(degree)
}

/// Functions F_p^n -> F_p of total degree at most d (a generalized
/// Reed-Muller code). Affine-invariant: composing with an invertible
/// affine map preserves degree.
#[derive(Debug, Clone)]
pub struct ReedMullerOracle {
    params: FieldParams,
    degree: usize,
}

impl ReedMullerOracle {
    pub fn new(params: FieldParams, degree: usize) -> Result<Self> {
        if !matches!(params.p(), 2 | 3) {
            return Err(Error::UnsupportedField(params.p() as u64));
        }
        Ok(ReedMullerOracle { params, degree })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of members, p^{#monomials of weight <= d}.
    pub fn member_count(&self) -> Result<u128> {
        count_polys(&self.params, self.degree.max(1), 0).map(|c| {
            if self.degree == 0 {
                // constants only
                self.params.p() as u128
            } else {
                c
            }
        })
    }

    /// All members as finite functions, in the canonical coefficient
    /// enumeration order.
    pub fn enumerate_members(&self) -> Result<Vec<FiniteFunction>> {
        let count = self.member_count()?;
        if count > MAX_MEMBERS {
            return Err(Error::capacity("property members", count, MAX_MEMBERS));
        }
        let p = self.params.p();
        if self.degree == 0 {
            return (0..p)
                .map(|c| {
                    FiniteFunction::new_finite(self.params, p as u16, vec![c; self.params.size()])
                })
                .collect();
        }
        enumerate_polys(&self.params, self.degree, 0)?
            .map(|poly| {
                let table: Vec<u8> = poly.value_table().nums().iter().map(|&v| v as u8).collect();
                FiniteFunction::new_finite(self.params, p as u16, table)
            })
            .collect()
    }
}

impl PropertyOracle for ReedMullerOracle {
    fn name(&self) -> String {
        format!(
            "degree<={} polynomials on F_{}^{}",
            self.degree,
            self.params.p(),
            self.params.n()
        )
    }

    fn params(&self) -> &FieldParams {
        &self.params
    }

    fn range(&self) -> u16 {
        self.params.p() as u16
    }

    fn is_member(&self, f: &FiniteFunction) -> Result<bool> {
        check_compatible(self, f)?;
        Ok(classical_degree(f)? <= self.degree)
    }

    fn distance(&self, f: &FiniteFunction) -> Result<f64> {
        check_compatible(self, f)?;
        if self.is_member(f)? {
            return Ok(0.0);
        }
        let members = self.enumerate_members()?;
        let mut best = 1.0f64;
        for g in &members {
            best = best.min(hamming_distance(f, g)?);
        }
        Ok(best)
    }
}

impl NearestMember for ReedMullerOracle {
    fn nearest_member(&self, f: &FiniteFunction) -> Result<FiniteFunction> {
        check_compatible(self, f)?;
        let members = self.enumerate_members()?;
        nearest_of(members.iter(), f)
    }
}

/// The delta-neighborhood of a base property: members are all functions
/// within distance delta of the base. dist(f, P_delta) =
/// max(dist(f, P) - delta, 0): moving toward a nearest member one point at
/// a time crosses the delta shell.
#[derive(Debug, Clone)]
pub struct DeltaCloseOracle<O: PropertyOracle> {
    base: O,
    delta: f64,
}

impl<O: PropertyOracle> DeltaCloseOracle<O> {
    pub fn new(base: O, delta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::Config(format!("delta must lie in [0,1], got {delta}")));
        }
        Ok(DeltaCloseOracle { base, delta })
    }

    pub fn base(&self) -> &O {
        &self.base
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

impl<O: PropertyOracle> PropertyOracle for DeltaCloseOracle<O> {
    fn name(&self) -> String {
        format!("{} (within {})", self.base.name(), self.delta)
    }

    fn params(&self) -> &FieldParams {
        self.base.params()
    }

    fn range(&self) -> u16 {
        self.base.range()
    }

    fn is_member(&self, f: &FiniteFunction) -> Result<bool> {
        Ok(self.base.distance(f)? <= self.delta + 1e-12)
    }

    fn distance(&self, f: &FiniteFunction) -> Result<f64> {
        Ok((self.base.distance(f)? - self.delta).max(0.0))
    }
}

/// A property given by an explicit member list (e.g. parsed from a file of
/// concatenated function blocks).
#[derive(Debug, Clone)]
pub struct EnumeratedOracle {
    name: String,
    params: FieldParams,
    range: u16,
    members: Vec<FiniteFunction>,
    member_keys: HashSet<Vec<u8>>,
}

impl EnumeratedOracle {
    pub fn new(name: &str, members: Vec<FiniteFunction>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::Config("a property needs at least one member".to_string()))?;
        let params = *first.params();
        let range = match first.range() {
            RangeKind::Finite(r) => r,
            other => {
                return Err(Error::Range(format!(
                    "enumerated members must be finite-valued, got {other:?}"
                )))
            }
        };
        let mut member_keys = HashSet::new();
        for (i, m) in members.iter().enumerate() {
            if m.params() != &params || m.range() != RangeKind::Finite(range) {
                return Err(Error::dim(format!(
                    "member {} disagrees with the first member's space or range",
                    i + 1
                )));
            }
            member_keys.insert(m.finite_table()?.to_vec());
        }
        Ok(EnumeratedOracle {
            name: name.to_string(),
            params,
            range,
            members,
            member_keys,
        })
    }

    pub fn from_text(name: &str, text: &str) -> Result<Self> {
        EnumeratedOracle::new(name, FiniteFunction::from_text_many(text)?)
    }

    pub fn members(&self) -> &[FiniteFunction] {
        &self.members
    }

    /// Spot-check of affine invariance: samples invertible affine maps and
    /// verifies that every member stays a member after composition.
    /// Returns the first violating (member, trial) pair, if any.
    pub fn check_affine_invariance(
        &self,
        trials: u64,
        seed: u64,
    ) -> Result<Option<(usize, u64)>> {
        for t in 0..trials {
            let mut rng = DetRng::for_task(seed, t);
            let map = crate::affine::sample_affine_embedding(&mut rng, &self.params, self.params.n())?;
            for (i, m) in self.members.iter().enumerate() {
                let composed = m.restrict(&map)?;
                if !self.member_keys.contains(composed.finite_table()?) {
                    return Ok(Some((i, t)));
                }
            }
        }
        Ok(None)
    }
}

impl PropertyOracle for EnumeratedOracle {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn params(&self) -> &FieldParams {
        &self.params
    }

    fn range(&self) -> u16 {
        self.range
    }

    fn is_member(&self, f: &FiniteFunction) -> Result<bool> {
        check_compatible(self, f)?;
        Ok(self.member_keys.contains(f.finite_table()?))
    }

    fn distance(&self, f: &FiniteFunction) -> Result<f64> {
        check_compatible(self, f)?;
        let mut best = 1.0f64;
        for g in &self.members {
            best = best.min(hamming_distance(f, g)?);
            if best == 0.0 {
                break;
            }
        }
        Ok(best)
    }
}

impl NearestMember for EnumeratedOracle {
    fn nearest_member(&self, f: &FiniteFunction) -> Result<FiniteFunction> {
        check_compatible(self, f)?;
        nearest_of(self.members.iter(), f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::NonClassicalPoly;

    fn params(p: u8, n: usize) -> FieldParams {
        FieldParams::new(p, n).unwrap()
    }

    fn poly_fn(pr: FieldParams, terms: &[(Vec<u8>, u8, u8)]) -> FiniteFunction {
        let poly = NonClassicalPoly::from_terms(pr, terms).unwrap();
        let table: Vec<u8> = poly.value_table().nums().iter().map(|&v| v as u8).collect();
        FiniteFunction::new_finite(pr, pr.p() as u16, table).unwrap()
    }

    #[test]
    fn interpolation_recovers_coefficients() {
        // f = 1 + 2 x_1 + x_1 x_2^2 over F_3^2.
        let pr = params(3, 2);
        let f = poly_fn(
            pr,
            &[(vec![0, 0], 0, 1), (vec![1, 0], 0, 2), (vec![1, 2], 0, 1)],
        );
        let coeffs = classical_coefficients(&f).unwrap();
        let idx = |e: &[u8]| pr.index_of(e) as usize;
        assert_eq!(coeffs[idx(&[0, 0])], 1);
        assert_eq!(coeffs[idx(&[1, 0])], 2);
        assert_eq!(coeffs[idx(&[1, 2])], 1);
        let nonzero = coeffs.iter().filter(|&&c| c != 0).count();
        assert_eq!(nonzero, 3);
        assert_eq!(classical_degree(&f).unwrap(), 3);
    }

    #[test]
    fn interpolation_inverts_evaluation_on_random_tables() {
        for p in [2u8, 3, 5] {
            let pr = params(p, 2);
            let mut rng = DetRng::new(80 + p as u64);
            let f = FiniteFunction::random_finite(pr, p as u16, &mut rng).unwrap();
            let coeffs = classical_coefficients(&f).unwrap();
            // Evaluate the recovered polynomial at every point.
            let fp = Fp::new(p).unwrap();
            for pt in pr.points() {
                let mut total = 0u8;
                for (idx, &c) in coeffs.iter().enumerate() {
                    if c == 0 {
                        continue;
                    }
                    let exps = pr.coords_of(idx as u32);
                    let mut term = c;
                    for (&x, &e) in pt.coords.iter().zip(&exps) {
                        term = fp.mul(term, fp.pow(x, e as u32));
                    }
                    total = fp.add(total, term);
                }
                assert_eq!(total, f.get_finite(pt.index).unwrap());
            }
        }
    }

    #[test]
    fn membership_matches_degree() {
        let pr = params(2, 3);
        let oracle = ReedMullerOracle::new(pr, 2).unwrap();
        let quad = poly_fn(pr, &[(vec![1, 1, 0], 0, 1)]);
        let cubic = poly_fn(pr, &[(vec![1, 1, 1], 0, 1)]);
        assert!(oracle.is_member(&quad).unwrap());
        assert!(!oracle.is_member(&cubic).unwrap());
        assert_eq!(oracle.member_count().unwrap(), 128);
        assert_eq!(oracle.enumerate_members().unwrap().len(), 128);
    }

    #[test]
    fn cubic_monomial_distance_to_quadratics() {
        // dist(x1 x2 x3, degree<=2 family on F_2^3) = 1/8.
        let pr = params(2, 3);
        let oracle = ReedMullerOracle::new(pr, 2).unwrap();
        let cubic = poly_fn(pr, &[(vec![1, 1, 1], 0, 1)]);
        let d = oracle.distance(&cubic).unwrap();
        assert!((d - 0.125).abs() < 1e-12);
    }

    #[test]
    fn members_have_distance_zero() {
        let pr = params(3, 2);
        let oracle = ReedMullerOracle::new(pr, 1).unwrap();
        let lin = poly_fn(pr, &[(vec![1, 0], 0, 2), (vec![0, 0], 0, 1)]);
        assert_eq!(oracle.distance(&lin).unwrap(), 0.0);
    }

    #[test]
    fn delta_neighborhood_shifts_distance() {
        let pr = params(2, 3);
        let oracle = ReedMullerOracle::new(pr, 2).unwrap();
        let cubic = poly_fn(pr, &[(vec![1, 1, 1], 0, 1)]);
        let relaxed = DeltaCloseOracle::new(ReedMullerOracle::new(pr, 2).unwrap(), 0.05).unwrap();
        assert!((relaxed.distance(&cubic).unwrap() - (0.125 - 0.05)).abs() < 1e-12);
        // A wide enough shell absorbs the function entirely.
        let generous = DeltaCloseOracle::new(ReedMullerOracle::new(pr, 2).unwrap(), 0.2).unwrap();
        assert!(generous.is_member(&cubic).unwrap());
        assert_eq!(generous.distance(&cubic).unwrap(), 0.0);
        assert_eq!(oracle.distance(&cubic).unwrap(), 0.125);
    }

    #[test]
    fn unsupported_characteristic_is_rejected() {
        assert!(matches!(
            ReedMullerOracle::new(params(5, 2), 1),
            Err(Error::UnsupportedField(5))
        ));
    }

    #[test]
    fn enumerated_oracle_roundtrip_and_invariance() {
        let pr = params(2, 2);
        let oracle = ReedMullerOracle::new(pr, 1).unwrap();
        let members = oracle.enumerate_members().unwrap();
        let text: String = members.iter().map(|m| m.to_text()).collect();
        let listed = EnumeratedOracle::from_text("affine maps", &text).unwrap();
        assert_eq!(listed.members().len(), 8);
        // Degree is affine-invariant, so the spot check passes.
        assert_eq!(listed.check_affine_invariance(20, 5).unwrap(), None);
        // Distances agree with the generating oracle.
        let mut rng = DetRng::new(90);
        let f = FiniteFunction::random_finite(pr, 2, &mut rng).unwrap();
        assert_eq!(
            listed.distance(&f).unwrap(),
            oracle.distance(&f).unwrap()
        );
    }

    #[test]
    fn non_invariant_family_is_caught() {
        // The singleton {x_1} is not affine-invariant on F_2^2.
        let pr = params(2, 2);
        let member = poly_fn(pr, &[(vec![1, 0], 0, 1)]);
        let oracle = EnumeratedOracle::new("just x1", vec![member]).unwrap();
        let hit = oracle.check_affine_invariance(50, 6).unwrap();
        assert!(hit.is_some());
    }

    #[test]
    fn nearest_member_realizes_the_distance() {
        let pr = params(2, 4);
        let oracle = ReedMullerOracle::new(pr, 1).unwrap();
        let mut rng = DetRng::new(97);
        let f = FiniteFunction::random_finite(pr, 2, &mut rng).unwrap();
        let g = oracle.nearest_member(&f).unwrap();
        assert!(oracle.is_member(&g).unwrap());
        assert_eq!(
            hamming_distance(&f, &g).unwrap(),
            oracle.distance(&f).unwrap()
        );
    }

    #[test]
    fn distance_bounds_by_half_for_rm1() {
        // No binary function is further than 1/2 from an affine family
        // (complementing a member caps the distance).
        let pr = params(2, 4);
        let oracle = ReedMullerOracle::new(pr, 1).unwrap();
        for seed in 0..5 {
            let mut rng = DetRng::new(95 + seed);
            let f = FiniteFunction::random_finite(pr, 2, &mut rng).unwrap();
            assert!(oracle.distance(&f).unwrap() <= 0.5);
        }
    }
}
