//! Non-classical polynomials F_p^n -> T = R/Z and their exact arithmetic.
//!
//! A polynomial of depth at most K is stored in the canonical monomial form
//!
//! ```text
//! P(x) = sum  c * |x_1|^{d_1} ... |x_n|^{d_n} / p^{k+1}   (mod 1)
//! ```
//!
//! over monomials (d_1..d_n, k) with coefficients c in {1..p-1}, exponents
//! d_i in {0..p-1}, and |.| the integer lift of a residue. A term with all
//! exponents zero (a constant c/p) is allowed at level k = 0 only. The
//! representation is unique, and the degree of a term is
//! sum d_i + k(p-1) (0 for the constant term), so the polynomial's degree
//! and depth are read directly off the representation; `verify_degree`
//! checks the declared degree against the analytic definition (all
//! (d+1)-fold additive derivatives vanish identically).
//!
//! Text format: a header line `p n`, then one line `k c d_1 ... d_n` per
//! monomial.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{AddTable, FieldParams};
use crate::rng::DetRng;

/// An element of the p-power torsion subgroup of R/Z: num / p^{level+1},
/// stored in reduced form (num not divisible by p unless level is 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TorsionValue {
    p: u8,
    num: u64,
    level: u8,
}

impl TorsionValue {
    /// num / p^{level+1} mod 1, reduced to canonical form.
    pub fn new(p: u8, num: u64, level: u8) -> Self {
        let modulus = (p as u64).pow(level as u32 + 1);
        let mut num = num % modulus;
        let mut level = level;
        while level > 0 && num % p as u64 == 0 {
            num /= p as u64;
            level -= 1;
        }
        TorsionValue { p, num, level }
    }

    pub fn zero(p: u8) -> Self {
        TorsionValue { p, num: 0, level: 0 }
    }

    #[inline]
    pub fn p(&self) -> u8 {
        self.p
    }

    /// Reduced numerator.
    #[inline]
    pub fn num(&self) -> u64 {
        self.num
    }

    /// Reduced level: the value lies in (1/p^{level+1}) Z / Z.
    #[inline]
    pub fn level(&self) -> u8 {
        self.level
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    /// Numerator rescaled to a coarser level L >= level: the value equals
    /// numerator_at_level(L) / p^{L+1}.
    pub fn numerator_at_level(&self, target: u8) -> Result<u64> {
        if target < self.level {
            return Err(Error::Range(format!(
                "value of level {} cannot be written at level {}",
                self.level, target
            )));
        }
        Ok(self.num * (self.p as u64).pow((target - self.level) as u32))
    }

    pub fn add(&self, other: &TorsionValue) -> TorsionValue {
        assert_eq!(self.p, other.p, "mixed characteristics");
        let level = self.level.max(other.level);
        let modulus = (self.p as u64).pow(level as u32 + 1);
        let a = self.num * (self.p as u64).pow((level - self.level) as u32);
        let b = other.num * (self.p as u64).pow((level - other.level) as u32);
        TorsionValue::new(self.p, (a + b) % modulus, level)
    }

    pub fn neg(&self) -> TorsionValue {
        let modulus = (self.p as u64).pow(self.level as u32 + 1);
        TorsionValue::new(self.p, (modulus - self.num) % modulus, self.level)
    }

    pub fn sub(&self, other: &TorsionValue) -> TorsionValue {
        self.add(&other.neg())
    }

    /// Integer multiple: k * value.
    pub fn scale(&self, k: u64) -> TorsionValue {
        let modulus = (self.p as u64).pow(self.level as u32 + 1);
        TorsionValue::new(self.p, (self.num % modulus * (k % modulus)) % modulus, self.level)
    }

    /// The value as a real number in [0, 1).
    pub fn as_f64(&self) -> f64 {
        self.num as f64 / (self.p as u64).pow(self.level as u32 + 1) as f64
    }

    /// The unit-circle exponential e(value) = exp(2 pi i value).
    pub fn unit(&self) -> Complex64 {
        Complex64::from_polar(1.0, std::f64::consts::TAU * self.as_f64())
    }
}

/// A monomial key: exponent vector and level, ordered by (level, exponents).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonomialKey {
    pub level: u8,
    pub exps: Vec<u8>,
}

impl MonomialKey {
    /// Total degree sum d_i + level * (p-1); the constant key has degree 0.
    pub fn degree(&self, p: u8) -> usize {
        let s: usize = self.exps.iter().map(|&d| d as usize).sum();
        if s == 0 {
            0
        } else {
            s + self.level as usize * (p as usize - 1)
        }
    }

    fn is_constant(&self) -> bool {
        self.exps.iter().all(|&d| d == 0)
    }
}

/// A non-classical polynomial in canonical monomial form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonClassicalPoly {
    params: FieldParams,
    terms: BTreeMap<MonomialKey, u8>,
}

impl NonClassicalPoly {
    pub fn zero(params: FieldParams) -> Self {
        NonClassicalPoly {
            params,
            terms: BTreeMap::new(),
        }
    }

    /// Builds a polynomial from (exponents, level, coefficient) terms.
    /// Coefficients combine and renormalize exactly; zero terms drop out.
    pub fn from_terms(params: FieldParams, terms: &[(Vec<u8>, u8, u8)]) -> Result<Self> {
        let p = params.p();
        let mut poly = NonClassicalPoly::zero(params);
        for (exps, level, coeff) in terms {
            if exps.len() != params.n() {
                return Err(Error::dim(format!(
                    "monomial has {} exponents, space has dimension {}",
                    exps.len(),
                    params.n()
                )));
            }
            if let Some(&d) = exps.iter().find(|&&d| d >= p) {
                return Err(Error::Range(format!(
                    "exponent {d} out of range (must be < {p})"
                )));
            }
            if *coeff >= p {
                return Err(Error::Range(format!(
                    "coefficient {coeff} out of range (must be < {p})"
                )));
            }
            check_level(*level)?;
            let key = MonomialKey {
                level: *level,
                exps: exps.clone(),
            };
            if key.is_constant() && *level > 0 {
                return Err(Error::Range(
                    "constant terms are only representable at level 0".to_string(),
                ));
            }
            if *coeff == 0 {
                continue;
            }
            let add = NonClassicalPoly {
                params,
                terms: BTreeMap::from([(key, *coeff)]),
            };
            poly = poly.add(&add);
        }
        Ok(poly)
    }

    #[inline]
    pub fn params(&self) -> &FieldParams {
        &self.params
    }

    /// Monomials in canonical order with their coefficients.
    pub fn terms(&self) -> impl Iterator<Item = (&MonomialKey, u8)> {
        self.terms.iter().map(|(k, &c)| (k, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Depth: maximum level of a monomial (0 for the zero polynomial).
    pub fn depth(&self) -> u8 {
        self.terms.keys().map(|k| k.level).max().unwrap_or(0)
    }

    /// Degree read off the canonical representation (0 for the zero
    /// polynomial). Unique representation makes this the analytic degree;
    /// see `verify_degree`.
    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|k| k.degree(self.params.p()))
            .max()
            .unwrap_or(0)
    }

    /// Classical polynomials are exactly those of depth 0 (values in the
    /// image of F_p under x -> |x|/p).
    pub fn is_classical(&self) -> bool {
        self.depth() == 0
    }

    /// Sum of two polynomials, renormalized to canonical form.
    ///
    /// Same-monomial contributions accumulate at the max level and are then
    /// redistributed digit by digit (a carry at level k becomes a term at
    /// level k-1, integer carries vanish mod 1).
    pub fn add(&self, other: &NonClassicalPoly) -> NonClassicalPoly {
        assert_eq!(self.params, other.params, "mixed parameter spaces");
        let p = self.params.p() as u64;
        // Group contributions by exponent vector.
        let mut by_exps: BTreeMap<&[u8], Vec<(u8, u64)>> = BTreeMap::new();
        for (key, &c) in self.terms.iter().chain(other.terms.iter()) {
            by_exps
                .entry(key.exps.as_slice())
                .or_default()
                .push((key.level, c as u64));
        }
        let mut terms = BTreeMap::new();
        for (exps, contribs) in by_exps {
            let top = contribs.iter().map(|&(l, _)| l).max().unwrap();
            let modulus = p.pow(top as u32 + 1);
            let mut total = 0u64;
            for (level, c) in contribs {
                total = (total + c * p.pow((top - level) as u32)) % modulus;
            }
            spread_digits(&mut terms, exps, total, top, self.params.p());
        }
        NonClassicalPoly {
            params: self.params,
            terms,
        }
    }

    /// Integer multiple lambda * P, renormalized to canonical form. Note
    /// that multiplying by p lowers every level by one, so the degree of
    /// lambda * P is recomputed from the result, not inherited.
    pub fn scale(&self, lambda: u64) -> NonClassicalPoly {
        let p = self.params.p() as u64;
        let mut terms = BTreeMap::new();
        for (key, &c) in &self.terms {
            let modulus = p.pow(key.level as u32 + 1);
            let total = (c as u64 * (lambda % modulus)) % modulus;
            let mut partial = BTreeMap::new();
            spread_digits(&mut partial, &key.exps, total, key.level, self.params.p());
            for (k, c) in partial {
                merge_term(&mut terms, k, c, self.params.p());
            }
        }
        NonClassicalPoly {
            params: self.params,
            terms,
        }
    }

    pub fn neg(&self) -> NonClassicalPoly {
        let p = self.params.p() as u64;
        let mut terms = BTreeMap::new();
        for (key, &c) in &self.terms {
            let modulus = p.pow(key.level as u32 + 1);
            let total = (modulus - c as u64) % modulus;
            let mut partial = BTreeMap::new();
            spread_digits(&mut partial, &key.exps, total, key.level, self.params.p());
            for (k, c) in partial {
                merge_term(&mut terms, k, c, self.params.p());
            }
        }
        NonClassicalPoly {
            params: self.params,
            terms,
        }
    }

    pub fn sub(&self, other: &NonClassicalPoly) -> NonClassicalPoly {
        self.add(&other.neg())
    }

    /// Exact evaluation at a point given by coordinates.
    pub fn eval_coords(&self, coords: &[u8]) -> TorsionValue {
        let p = self.params.p() as u64;
        let depth = self.depth();
        let top_mod = p.pow(depth as u32 + 1);
        let mut total = 0u64;
        for (key, &c) in &self.terms {
            let modulus = p.pow(key.level as u32 + 1);
            let mut prod = c as u64 % modulus;
            for (&x, &d) in coords.iter().zip(&key.exps) {
                for _ in 0..d {
                    prod = prod * x as u64 % modulus;
                }
            }
            total = (total + prod * p.pow((depth - key.level) as u32)) % top_mod;
        }
        TorsionValue::new(self.params.p(), total, depth)
    }

    /// Exact evaluation at a canonical point index.
    pub fn eval_index(&self, index: u32) -> TorsionValue {
        self.eval_coords(&self.params.coords_of(index))
    }

    /// Dense table of values at the polynomial's depth.
    pub fn value_table(&self) -> TorsionTable {
        let depth = self.depth();
        let size = self.params.size();
        let mut nums = vec![0u32; size];
        let mut coords = vec![0u8; self.params.n()];
        for (idx, slot) in nums.iter_mut().enumerate() {
            if idx > 0 {
                // odometer over coordinates
                for c in coords.iter_mut() {
                    *c += 1;
                    if *c == self.params.p() {
                        *c = 0;
                    } else {
                        break;
                    }
                }
            }
            let v = self.eval_coords(&coords);
            *slot = v.numerator_at_level(depth).expect("depth bounds level") as u32;
        }
        TorsionTable {
            params: self.params,
            level: depth,
            nums,
        }
    }

    /// Magnitude of the mean unit-circle value, |E_x e(P(x))|.
    pub fn bias(&self) -> f64 {
        self.value_table().bias()
    }

    /// Checks the analytic degree statement "deg(P) <= d": every (d+1)-fold
    /// additive derivative vanishes identically. Derivative operators
    /// commute, so exhaustive mode enumerates direction multisets.
    pub fn verify_degree(&self, d: usize, mode: VerifyMode) -> Result<bool> {
        self.value_table().verify_degree(d, mode)
    }

    /// Serializes in the text format.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.params.p(), self.params.n());
        for (key, &c) in &self.terms {
            let exps: Vec<String> = key.exps.iter().map(|d| d.to_string()).collect();
            out.push_str(&format!("{} {} {}\n", key.level, c, exps.join(" ")));
        }
        out
    }

    /// Parses the text format; see the module docs.
    pub fn from_text(text: &str) -> Result<NonClassicalPoly> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (lineno, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty polynomial file"))?;
        let (params, _) = parse_poly_header(lineno, header)?;
        let mut terms = Vec::new();
        for (lineno, line) in lines {
            terms.push(parse_poly_term(lineno, line, &params)?);
        }
        NonClassicalPoly::from_terms(params, &terms)
    }
}

/// Highest supported monomial level (numerators stay well inside u64/u32).
pub const MAX_LEVEL: u8 = 12;

fn check_level(level: u8) -> Result<()> {
    if level > MAX_LEVEL {
        return Err(Error::capacity(
            "monomial level",
            level as u128,
            MAX_LEVEL as u128,
        ));
    }
    Ok(())
}

pub(crate) fn parse_poly_header(lineno: usize, line: &str) -> Result<(FieldParams, (u8, usize))> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() != 2 {
        return Err(Error::parse(lineno, "polynomial header must be `p n`"));
    }
    let p: u8 = toks[0]
        .parse()
        .map_err(|_| Error::parse(lineno, "bad field characteristic"))?;
    let n: usize = toks[1]
        .parse()
        .map_err(|_| Error::parse(lineno, "bad dimension"))?;
    let params = FieldParams::new(p, n)?;
    Ok((params, (p, n)))
}

pub(crate) fn parse_poly_term(
    lineno: usize,
    line: &str,
    params: &FieldParams,
) -> Result<(Vec<u8>, u8, u8)> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() != params.n() + 2 {
        return Err(Error::parse(
            lineno,
            format!(
                "monomial line must be `k c d_1 .. d_{}` ({} fields), found {} fields",
                params.n(),
                params.n() + 2,
                toks.len()
            ),
        ));
    }
    let level: u8 = toks[0]
        .parse()
        .map_err(|_| Error::parse(lineno, "bad level"))?;
    let coeff: u8 = toks[1]
        .parse()
        .map_err(|_| Error::parse(lineno, "bad coefficient"))?;
    let exps: Vec<u8> = toks[2..]
        .iter()
        .map(|t| {
            t.parse::<u8>()
                .map_err(|_| Error::parse(lineno, format!("`{t}` is not an exponent")))
        })
        .collect::<Result<_>>()?;
    Ok((exps, level, coeff))
}

/// Writes the base-p digits of `total / p^{level+1}` into monomial terms:
/// digit j goes to level `level - j`.
fn spread_digits(
    terms: &mut BTreeMap<MonomialKey, u8>,
    exps: &[u8],
    total: u64,
    level: u8,
    p: u8,
) {
    let mut rest = total;
    for j in 0..=level {
        let digit = (rest % p as u64) as u8;
        rest /= p as u64;
        if digit != 0 {
            let key = MonomialKey {
                level: level - j,
                exps: exps.to_vec(),
            };
            debug_assert!(!key.is_constant() || key.level == 0);
            terms.insert(key, digit);
        }
    }
    debug_assert_eq!(rest, 0);
}

fn merge_term(terms: &mut BTreeMap<MonomialKey, u8>, key: MonomialKey, c: u8, p: u8) {
    debug_assert!(c > 0 && c < p);
    // scale() can produce the same (exps, level) twice only via distinct
    // source levels; recombine exactly like add().
    if let Some(&existing) = terms.get(&key) {
        let total = existing as u64 + c as u64;
        let modulus = (p as u64).pow(key.level as u32 + 1);
        let exps = key.exps.clone();
        let level = key.level;
        terms.remove(&key);
        let mut partial = BTreeMap::new();
        spread_digits(&mut partial, &exps, total % modulus, level, p);
        for (k, v) in partial {
            merge_term(terms, k, v, p);
        }
    } else {
        terms.insert(key, c);
    }
}

/// How to check a degree statement.
#[derive(Debug, Clone, Copy)]
pub enum VerifyMode {
    /// Enumerate all direction multisets (exact; cost grows like
    /// binom(p^n + d, d+1) table derivations).
    Exhaustive,
    /// Sample direction tuples from the given seed.
    Sampled { tuples: u64, seed: u64 },
}

/// Cap on table derivations performed by one exhaustive degree check.
const MAX_VERIFY_STEPS: u128 = 1 << 28;

/// A dense table of torsion values at a fixed level: entry x represents
/// nums[x] / p^{level+1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TorsionTable {
    params: FieldParams,
    level: u8,
    nums: Vec<u32>,
}

impl TorsionTable {
    pub fn new(params: FieldParams, level: u8, nums: Vec<u32>) -> Result<Self> {
        check_level(level)?;
        if nums.len() != params.size() {
            return Err(Error::dim(format!(
                "table has {} entries, space has {} points",
                nums.len(),
                params.size()
            )));
        }
        let modulus = (params.p() as u64).pow(level as u32 + 1);
        if modulus > u32::MAX as u64 {
            return Err(Error::capacity("torsion table modulus", modulus as u128, u32::MAX as u128));
        }
        if let Some(&v) = nums.iter().find(|&&v| v as u64 >= modulus) {
            return Err(Error::Range(format!(
                "numerator {v} exceeds modulus {modulus}"
            )));
        }
        Ok(TorsionTable { params, level, nums })
    }

    #[inline]
    pub fn params(&self) -> &FieldParams {
        &self.params
    }

    /// The declared level of the table.
    #[inline]
    pub fn level(&self) -> u8 {
        self.level
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        (self.params.p() as u64).pow(self.level as u32 + 1)
    }

    /// Numerator at a point (at the declared level).
    #[inline]
    pub fn num(&self, idx: u32) -> u32 {
        self.nums[idx as usize]
    }

    pub fn nums(&self) -> &[u32] {
        &self.nums
    }

    pub fn value(&self, idx: u32) -> TorsionValue {
        TorsionValue::new(self.params.p(), self.nums[idx as usize] as u64, self.level)
    }

    pub fn is_zero(&self) -> bool {
        self.nums.iter().all(|&v| v == 0)
    }

    /// The reduced depth: the smallest level at which every entry is
    /// representable (0 for the zero table).
    pub fn reduced_depth(&self) -> u8 {
        let p = self.params.p() as u64;
        let mut depth = 0u8;
        for &v in &self.nums {
            if v == 0 {
                continue;
            }
            let mut v = v as u64;
            let mut lvl = self.level;
            while lvl > 0 && v % p == 0 {
                v /= p;
                lvl -= 1;
            }
            depth = depth.max(lvl);
            if depth == self.level {
                break;
            }
        }
        depth
    }

    /// Additive derivative: (D_y T)(x) = T(x + y) - T(x), exact mod p^{level+1}.
    pub fn derivative(&self, add: &AddTable, y: u32) -> TorsionTable {
        let m = self.modulus() as u32;
        let nums = (0..self.nums.len() as u32)
            .map(|x| {
                let a = self.nums[add.add(x, y) as usize];
                let b = self.nums[x as usize];
                if a >= b {
                    a - b
                } else {
                    a + m - b
                }
            })
            .collect();
        TorsionTable {
            params: self.params,
            level: self.level,
            nums,
        }
    }

    /// Pointwise sum at the max level of the operands.
    pub fn add(&self, other: &TorsionTable) -> Result<TorsionTable> {
        if self.params != other.params {
            return Err(Error::dim("tables on different spaces".to_string()));
        }
        let level = self.level.max(other.level);
        let p = self.params.p() as u64;
        let m = p.pow(level as u32 + 1);
        let sa = p.pow((level - self.level) as u32);
        let sb = p.pow((level - other.level) as u32);
        let nums = self
            .nums
            .iter()
            .zip(&other.nums)
            .map(|(&a, &b)| ((a as u64 * sa + b as u64 * sb) % m) as u32)
            .collect();
        TorsionTable::new(self.params, level, nums)
    }

    /// Pointwise integer multiple lambda * T at the declared level.
    pub fn scale(&self, lambda: u64) -> TorsionTable {
        let m = self.modulus();
        let lambda = lambda % m;
        let nums = self
            .nums
            .iter()
            .map(|&a| (a as u64 * lambda % m) as u32)
            .collect();
        TorsionTable {
            params: self.params,
            level: self.level,
            nums,
        }
    }

    /// Pullback along an affine map: (T restricted to A)(x) = T(A(x)).
    pub fn restrict(&self, map: &crate::affine::AffineMap) -> Result<TorsionTable> {
        if map.target_dim() != self.params.n() || map.p() != self.params.p() {
            return Err(Error::dim(
                "map target does not match table space".to_string(),
            ));
        }
        let images = map.image_table()?;
        let nums = images.iter().map(|&i| self.nums[i as usize]).collect();
        TorsionTable::new(map.source_params()?, self.level, nums)
    }

    /// Unit-circle lift e(T(x)) as a dense complex table.
    pub fn unit_table(&self) -> Vec<Complex64> {
        let m = self.modulus() as usize;
        let roots: Vec<Complex64> = (0..m)
            .map(|j| Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / m as f64))
            .collect();
        self.nums.iter().map(|&v| roots[v as usize]).collect()
    }

    /// |E_x e(T(x))|.
    pub fn bias(&self) -> f64 {
        let m = self.modulus() as usize;
        // Tally numerators, then one complex combination per residue class.
        let mut counts = vec![0u64; m];
        for &v in &self.nums {
            counts[v as usize] += 1;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &c) in counts.iter().enumerate() {
            if c > 0 {
                acc += Complex64::from_polar(
                    c as f64,
                    std::f64::consts::TAU * j as f64 / m as f64,
                );
            }
        }
        (acc / self.nums.len() as f64).norm()
    }

    /// Checks "degree <= d": all (d+1)-fold additive derivatives vanish.
    pub fn verify_degree(&self, d: usize, mode: VerifyMode) -> Result<bool> {
        match mode {
            VerifyMode::Exhaustive => {
                let n = self.params.size() as u128;
                // Multisets of d+1 directions from n-1 nonzero choices, each
                // costing one table derivation of p^n entries.
                let mut steps = n;
                for _ in 0..=d {
                    steps = steps.saturating_mul(n);
                }
                if steps > MAX_VERIFY_STEPS {
                    return Err(Error::capacity("degree verification", steps, MAX_VERIFY_STEPS));
                }
                let add = AddTable::new(&self.params)?;
                Ok(self.vanishes_exhaustive(&add, d + 1, 1))
            }
            VerifyMode::Sampled { tuples, seed } => {
                let add = AddTable::new(&self.params)?;
                let size = self.params.size() as u64;
                for t in 0..tuples {
                    let mut rng = DetRng::for_task(seed, t);
                    let mut table = self.clone();
                    for _ in 0..=d {
                        table = table.derivative(&add, rng.below(size) as u32);
                    }
                    if !table.is_zero() {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    /// Derivatives commute, so it suffices to check multisets: directions
    /// are enumerated in nondecreasing index order, skipping 0 (the zero
    /// direction gives the zero derivative).
    fn vanishes_exhaustive(&self, add: &AddTable, remaining: usize, start: u32) -> bool {
        if remaining == 0 {
            return self.is_zero();
        }
        let n = self.params.size() as u32;
        for y in start..n {
            let derived = self.derivative(add, y);
            // Prune: if the derivative is already zero, deeper derivatives
            // along any further directions vanish too.
            if derived.is_zero() {
                continue;
            }
            if !derived.vanishes_exhaustive(add, remaining - 1, y) {
                return false;
            }
        }
        true
    }

    /// The smallest d <= max_d with all (d+1)-fold derivatives vanishing,
    /// or None if the degree exceeds max_d.
    pub fn degree_at_most(&self, max_d: usize) -> Result<Option<usize>> {
        for d in 0..=max_d {
            if self.verify_degree(d, VerifyMode::Exhaustive)? {
                return Ok(Some(d));
            }
        }
        Ok(None)
    }
}

/// Deterministic enumeration of all polynomials with degree <= max_degree
/// and depth <= max_depth: coefficient vectors over the admissible monomial
/// list run in odometer order (first monomial fastest), so index 0 is the
/// zero polynomial.
pub struct PolyEnumerator {
    params: FieldParams,
    monomials: Vec<MonomialKey>,
    counter: Vec<u8>,
    done: bool,
}

/// Cap on the number of polynomials one enumeration may yield.
pub const MAX_ENUMERATED_POLYS: u128 = 1 << 24;

/// Admissible monomial keys for (max_degree, max_depth), in canonical
/// order: the constant key, then nonconstant keys sorted by (level, exps).
pub fn admissible_monomials(
    params: &FieldParams,
    max_degree: usize,
    max_depth: u8,
) -> Vec<MonomialKey> {
    let p = params.p();
    let n = params.n();
    let mut keys = vec![MonomialKey {
        level: 0,
        exps: vec![0; n],
    }];
    for level in 0..=max_depth {
        let weight_budget = max_degree as i64 - level as i64 * (p as i64 - 1);
        if weight_budget < 1 {
            continue;
        }
        let mut exps = vec![0u8; n];
        loop {
            // odometer over exponent vectors
            let mut i = 0;
            loop {
                if i == n {
                    break;
                }
                exps[i] += 1;
                if exps[i] == p {
                    exps[i] = 0;
                    i += 1;
                } else {
                    break;
                }
            }
            if i == n {
                break;
            }
            let weight: i64 = exps.iter().map(|&d| d as i64).sum();
            if weight >= 1 && weight <= weight_budget {
                keys.push(MonomialKey {
                    level,
                    exps: exps.clone(),
                });
            }
        }
    }
    keys.sort();
    // The constant key sorts first among level-0 keys already (all-zero
    // exponents are lexicographically minimal), so the order is canonical.
    keys
}

pub fn enumerate_polys(
    params: &FieldParams,
    max_degree: usize,
    max_depth: u8,
) -> Result<PolyEnumerator> {
    check_level(max_depth)?;
    let monomials = admissible_monomials(params, max_degree, max_depth);
    let count = (params.p() as u128)
        .checked_pow(monomials.len() as u32)
        .unwrap_or(u128::MAX);
    if count > MAX_ENUMERATED_POLYS {
        return Err(Error::capacity("polynomial enumeration", count, MAX_ENUMERATED_POLYS));
    }
    Ok(PolyEnumerator {
        params: *params,
        counter: vec![0; monomials.len()],
        monomials,
        done: false,
    })
}

/// Number of polynomials `enumerate_polys` would yield.
pub fn count_polys(params: &FieldParams, max_degree: usize, max_depth: u8) -> Result<u128> {
    check_level(max_depth)?;
    let monomials = admissible_monomials(params, max_degree, max_depth);
    Ok((params.p() as u128)
        .checked_pow(monomials.len() as u32)
        .unwrap_or(u128::MAX))
}

impl Iterator for PolyEnumerator {
    type Item = NonClassicalPoly;

    fn next(&mut self) -> Option<NonClassicalPoly> {
        if self.done {
            return None;
        }
        let mut terms = BTreeMap::new();
        for (key, &c) in self.monomials.iter().zip(&self.counter) {
            if c != 0 {
                terms.insert(key.clone(), c);
            }
        }
        let poly = NonClassicalPoly {
            params: self.params,
            terms,
        };
        // odometer increment
        let p = self.params.p();
        let mut i = 0;
        loop {
            if i == self.counter.len() {
                self.done = true;
                break;
            }
            self.counter[i] += 1;
            if self.counter[i] == p {
                self.counter[i] = 0;
                i += 1;
            } else {
                break;
            }
        }
        Some(poly)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: u8, n: usize) -> FieldParams {
        FieldParams::new(p, n).unwrap()
    }

    fn half_x1(n: usize) -> NonClassicalPoly {
        // |x_1| / 4 over F_2^n: the canonical depth-1, degree-2 example.
        let mut exps = vec![0u8; n];
        exps[0] = 1;
        NonClassicalPoly::from_terms(params(2, n), &[(exps, 1, 1)]).unwrap()
    }

    #[test]
    fn torsion_reduction_and_arithmetic() {
        let v = TorsionValue::new(2, 2, 1); // 2/4 reduces to 1/2
        assert_eq!((v.num(), v.level()), (1, 0));
        let a = TorsionValue::new(2, 1, 1); // 1/4
        let b = TorsionValue::new(2, 1, 0); // 1/2
        assert_eq!(a.add(&b), TorsionValue::new(2, 3, 1)); // 3/4
        assert_eq!(a.add(&a.neg()), TorsionValue::zero(2));
        assert_eq!(a.scale(2), b);
        assert_eq!(a.scale(4), TorsionValue::zero(2));
        assert_eq!(TorsionValue::new(3, 7, 1).as_f64(), 7.0 / 9.0);
    }

    #[test]
    fn torsion_numerator_rescaling() {
        let v = TorsionValue::new(5, 3, 0); // 3/5
        assert_eq!(v.numerator_at_level(2).unwrap(), 75); // 75/125
        assert!(v.numerator_at_level(0).is_ok());
        let w = TorsionValue::new(5, 7, 1); // 7/25
        assert!(w.numerator_at_level(0).is_err());
    }

    #[test]
    fn eval_half_x1() {
        let p = half_x1(1);
        assert_eq!(p.eval_coords(&[0]), TorsionValue::zero(2));
        assert_eq!(p.eval_coords(&[1]), TorsionValue::new(2, 1, 1));
        assert_eq!(p.depth(), 1);
        assert_eq!(p.degree(), 2);
        assert!(!p.is_classical());
    }

    #[test]
    fn derivative_of_half_x1() {
        // D_1 (|x|/4) on F_2 is [1/4, 3/4]: at x=0 it is P(1)-P(0)=1/4, at
        // x=1 it is P(0)-P(1)=-1/4=3/4.
        let p = half_x1(1);
        let table = p.value_table();
        let add = AddTable::new(table.params()).unwrap();
        let d = table.derivative(&add, 1);
        assert_eq!(d.value(0), TorsionValue::new(2, 1, 1));
        assert_eq!(d.value(1), TorsionValue::new(2, 3, 1));
    }

    #[test]
    fn degree_of_half_x1_is_two() {
        let p = half_x1(1);
        assert!(p.verify_degree(2, VerifyMode::Exhaustive).unwrap());
        assert!(!p.verify_degree(1, VerifyMode::Exhaustive).unwrap());
    }

    #[test]
    fn classical_product_degree() {
        // x_1 x_2 / 2 over F_2^2 has degree 2, and bias 1/2.
        let pr = params(2, 2);
        let p = NonClassicalPoly::from_terms(pr, &[(vec![1, 1], 0, 1)]).unwrap();
        assert_eq!(p.degree(), 2);
        assert!(p.is_classical());
        assert!(p.verify_degree(2, VerifyMode::Exhaustive).unwrap());
        assert!(!p.verify_degree(1, VerifyMode::Exhaustive).unwrap());
        assert!((p.bias() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn nonzero_linear_form_has_zero_bias() {
        let pr = params(3, 2);
        let p = NonClassicalPoly::from_terms(pr, &[(vec![1, 0], 0, 2)]).unwrap();
        assert!(p.bias() < 1e-12);
    }

    #[test]
    fn scaling_by_p_lowers_depth() {
        // 2 * (|x|/4) = |x|/2 over F_2.
        let p = half_x1(1);
        let doubled = p.scale(2);
        assert_eq!(doubled.depth(), 0);
        assert_eq!(doubled.degree(), 1);
        let expected = NonClassicalPoly::from_terms(params(2, 1), &[(vec![1], 0, 1)]).unwrap();
        assert_eq!(doubled, expected);
        assert!(p.scale(4).is_zero());
    }

    #[test]
    fn negation_spreads_digits() {
        // -(|x|/4) = |x|/4 + |x|/2 over F_2; check values agree pointwise.
        let p = half_x1(1);
        let neg = p.neg();
        for idx in 0..2 {
            assert_eq!(neg.eval_index(idx), p.eval_index(idx).neg());
        }
        assert!(p.add(&neg).is_zero());
    }

    #[test]
    fn addition_matches_pointwise_values() {
        let pr = params(3, 2);
        let mut rng = DetRng::new(5);
        let all: Vec<NonClassicalPoly> = enumerate_polys(&pr, 3, 1).unwrap().collect();
        for _ in 0..40 {
            let a = &all[rng.below(all.len() as u64) as usize];
            let b = &all[rng.below(all.len() as u64) as usize];
            let sum = a.add(b);
            for idx in 0..pr.size() as u32 {
                assert_eq!(
                    sum.eval_index(idx),
                    a.eval_index(idx).add(&b.eval_index(idx)),
                    "a={a:?} b={b:?} idx={idx}"
                );
            }
        }
    }

    #[test]
    fn scaling_matches_pointwise_values() {
        let pr = params(5, 1);
        let mut rng = DetRng::new(6);
        let all: Vec<NonClassicalPoly> = enumerate_polys(&pr, 4, 1).unwrap().collect();
        for _ in 0..40 {
            let a = &all[rng.below(all.len() as u64) as usize];
            let lambda = rng.below(25);
            let scaled = a.scale(lambda);
            for idx in 0..pr.size() as u32 {
                assert_eq!(scaled.eval_index(idx), a.eval_index(idx).scale(lambda));
            }
        }
    }

    #[test]
    fn enumeration_counts() {
        // Classical affine polynomials on F_2^3: constant + 3 linear
        // coefficients -> 2^4 = 16.
        assert_eq!(count_polys(&params(2, 3), 1, 0).unwrap(), 16);
        // Classical quadratics on F_2^3: + 3 products -> 2^7 = 128.
        assert_eq!(count_polys(&params(2, 3), 2, 0).unwrap(), 128);
        // Degree <= 2, depth <= 1 on F_2: monomials are the constant, |x|/2,
        // |x|/4 -> 2^3 = 8.
        assert_eq!(count_polys(&params(2, 1), 2, 1).unwrap(), 8);
        let all: Vec<NonClassicalPoly> = enumerate_polys(&params(2, 1), 2, 1).unwrap().collect();
        assert_eq!(all.len(), 8);
        assert!(all[0].is_zero());
        // |x|/4 must be among them.
        assert!(all.iter().any(|p| *p == half_x1(1)));
    }

    #[test]
    fn enumerated_degrees_match_formula_and_analytic_check() {
        // Small slice of the acceptance sweep: every enumerated polynomial
        // on F_2^2 with degree <= 2, depth <= 1 verifies its declared degree.
        let pr = params(2, 2);
        for poly in enumerate_polys(&pr, 2, 1).unwrap() {
            let d = poly.degree();
            assert!(poly.verify_degree(d, VerifyMode::Exhaustive).unwrap(), "{poly:?}");
            if d > 0 {
                assert!(
                    !poly.verify_degree(d - 1, VerifyMode::Exhaustive).unwrap(),
                    "{poly:?} passed degree {}",
                    d - 1
                );
            }
        }
    }

    #[test]
    fn sampled_verification_agrees_on_failures() {
        let pr = params(2, 3);
        let p = NonClassicalPoly::from_terms(pr, &[(vec![1, 1, 1], 0, 1)]).unwrap();
        assert!(!p.verify_degree(2, VerifyMode::Sampled { tuples: 64, seed: 1 }).unwrap());
        assert!(p.verify_degree(3, VerifyMode::Sampled { tuples: 64, seed: 1 }).unwrap());
    }

    #[test]
    fn depth_k_values_live_in_torsion_subgroup() {
        let pr = params(2, 2);
        for poly in enumerate_polys(&pr, 3, 1).unwrap() {
            let depth = poly.depth();
            for idx in 0..pr.size() as u32 {
                assert!(poly.eval_index(idx).level() <= depth);
            }
        }
    }

    #[test]
    fn text_roundtrip_and_errors() {
        let pr = params(2, 3);
        let p = NonClassicalPoly::from_terms(
            pr,
            &[(vec![1, 1, 0], 0, 1), (vec![1, 0, 0], 1, 1), (vec![0; 3], 0, 1)],
        )
        .unwrap();
        let q = NonClassicalPoly::from_text(&p.to_text()).unwrap();
        assert_eq!(p, q);

        match NonClassicalPoly::from_text("2 3\n0 1 1 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        // Constant terms above level 0 are not representable.
        assert!(NonClassicalPoly::from_text("2 2\n1 1 0 0\n").is_err());
    }

    #[test]
    fn unit_lift_has_full_gowers_norm_at_degree_order() {
        // For P of degree d, e(P) has Gowers norm exactly 1 at order d+1,
        // and strictly less at order d (unless P is degenerate).
        use crate::function::FiniteFunction;
        use crate::gowers::gowers_norm_exact;
        let pr = params(2, 1);
        for poly in enumerate_polys(&pr, 2, 1).unwrap() {
            let d = poly.degree();
            let f = FiniteFunction::new_complex(pr, poly.value_table().unit_table()).unwrap();
            let est = gowers_norm_exact(&f, d + 1).unwrap();
            assert!((est.value - 1.0).abs() < 1e-9, "{poly:?}: {}", est.value);
        }
        let p = half_x1(1);
        let f = FiniteFunction::new_complex(pr, p.value_table().unit_table()).unwrap();
        assert!(gowers_norm_exact(&f, 2).unwrap().value < 1.0 - 1e-6);
    }

    #[test]
    fn restricted_table_matches_composition() {
        let pr = params(2, 4);
        let poly = NonClassicalPoly::from_terms(
            pr,
            &[(vec![1, 1, 0, 0], 0, 1), (vec![0, 0, 1, 0], 1, 1)],
        )
        .unwrap();
        let table = poly.value_table();
        let mut rng = DetRng::new(8);
        let map = crate::affine::sample_affine_embedding(&mut rng, &pr, 2).unwrap();
        let restricted = table.restrict(&map).unwrap();
        let src = params(2, 2);
        for pt in src.points() {
            let image = map.apply(&pt).unwrap();
            assert_eq!(restricted.value(pt.index), table.value(image.index));
        }
    }
}
