//! Dense functions on F_p^n with finite, real, or complex values, plus
//! restriction along affine maps, distances, randomized rounding, and the
//! plain-text serialization.
//!
//! Text format: a header line `p n R` (finite range {0..R-1}) or `p n real`,
//! then p^n whitespace-separated values in canonical point order; values may
//! be split across lines arbitrarily.

use num_complex::Complex64;

use crate::affine::AffineMap;
use crate::error::{Error, Result};
use crate::field::FieldParams;
use crate::rng::DetRng;

/// The declared range of a function table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangeKind {
    /// Values in {0, 1, ..., R-1}.
    Finite(u16),
    /// Real values in [0, 1].
    UnitInterval,
    /// Real values in [-1, 1].
    SymmetricInterval,
    /// Complex values of modulus at most 1.
    ComplexDisc,
}

#[derive(Debug, Clone, PartialEq)]
enum Table {
    Finite(Vec<u8>),
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

/// A function F_p^n -> range, stored densely in canonical point order.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteFunction {
    params: FieldParams,
    range: RangeKind,
    table: Table,
}

impl FiniteFunction {
    /// A finite-range function with values in {0..r-1}.
    pub fn new_finite(params: FieldParams, r: u16, values: Vec<u8>) -> Result<Self> {
        if r == 0 || r > 256 {
            return Err(Error::Range(format!("finite range size {r} out of 1..=256")));
        }
        if values.len() != params.size() {
            return Err(Error::dim(format!(
                "table has {} entries, space has {} points",
                values.len(),
                params.size()
            )));
        }
        if let Some(&v) = values.iter().find(|&&v| v as u16 >= r) {
            return Err(Error::Range(format!("value {v} outside range [{r}]")));
        }
        Ok(FiniteFunction {
            params,
            range: RangeKind::Finite(r),
            table: Table::Finite(values),
        })
    }

    /// A real-valued function; `signed` selects [-1,1] over [0,1].
    pub fn new_real(params: FieldParams, signed: bool, values: Vec<f64>) -> Result<Self> {
        if values.len() != params.size() {
            return Err(Error::dim(format!(
                "table has {} entries, space has {} points",
                values.len(),
                params.size()
            )));
        }
        let lo = if signed { -1.0 } else { 0.0 };
        if let Some(&v) = values.iter().find(|&&v| !(lo..=1.0).contains(&v)) {
            return Err(Error::Range(format!("value {v} outside [{lo}, 1]")));
        }
        Ok(FiniteFunction {
            params,
            range: if signed {
                RangeKind::SymmetricInterval
            } else {
                RangeKind::UnitInterval
            },
            table: Table::Real(values),
        })
    }

    /// A complex-valued function on the closed unit disc.
    pub fn new_complex(params: FieldParams, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != params.size() {
            return Err(Error::dim(format!(
                "table has {} entries, space has {} points",
                values.len(),
                params.size()
            )));
        }
        if let Some(v) = values.iter().find(|v| v.norm() > 1.0 + 1e-9) {
            return Err(Error::Range(format!("value {v} outside the unit disc")));
        }
        Ok(FiniteFunction {
            params,
            range: RangeKind::ComplexDisc,
            table: Table::Complex(values),
        })
    }

    pub fn constant_real(params: FieldParams, value: f64) -> Result<Self> {
        FiniteFunction::new_real(params, value < 0.0, vec![value; params.size()])
    }

    /// Uniformly random function into {0..r-1}.
    pub fn random_finite(params: FieldParams, r: u16, rng: &mut DetRng) -> Result<Self> {
        let values = (0..params.size())
            .map(|_| rng.below(r as u64) as u8)
            .collect();
        FiniteFunction::new_finite(params, r, values)
    }

    /// Random function into [0,1] with independent uniform values.
    pub fn random_unit(params: FieldParams, rng: &mut DetRng) -> Result<Self> {
        let values = (0..params.size()).map(|_| rng.unit()).collect();
        FiniteFunction::new_real(params, false, values)
    }

    /// Random function into [-1,1] with independent uniform values.
    pub fn random_signed(params: FieldParams, rng: &mut DetRng) -> Result<Self> {
        let values = (0..params.size()).map(|_| 2.0 * rng.unit() - 1.0).collect();
        FiniteFunction::new_real(params, true, values)
    }

    #[inline]
    pub fn params(&self) -> &FieldParams {
        &self.params
    }

    #[inline]
    pub fn range(&self) -> RangeKind {
        self.range
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.params.size()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finite_range(&self) -> bool {
        matches!(self.range, RangeKind::Finite(_))
    }

    /// Finite value at a point index.
    pub fn get_finite(&self, idx: u32) -> Result<u8> {
        match &self.table {
            Table::Finite(v) => Ok(v[idx as usize]),
            _ => Err(Error::Range("function is not finite-valued".to_string())),
        }
    }

    /// Real value at a point index (finite values embed as integers).
    pub fn get_real(&self, idx: u32) -> Result<f64> {
        match &self.table {
            Table::Finite(v) => Ok(v[idx as usize] as f64),
            Table::Real(v) => Ok(v[idx as usize]),
            Table::Complex(_) => Err(Error::Range(
                "complex-valued function has no real values".to_string(),
            )),
        }
    }

    /// Borrowed finite table.
    pub fn finite_table(&self) -> Result<&[u8]> {
        match &self.table {
            Table::Finite(v) => Ok(v),
            _ => Err(Error::Range("function is not finite-valued".to_string())),
        }
    }

    /// The values as a real table; finite values embed as integers 0..R-1.
    pub fn real_table(&self) -> Result<Vec<f64>> {
        match &self.table {
            Table::Finite(v) => Ok(v.iter().map(|&x| x as f64).collect()),
            Table::Real(v) => Ok(v.clone()),
            Table::Complex(_) => Err(Error::Range(
                "complex-valued function has no real table".to_string(),
            )),
        }
    }

    /// The values as a complex table (reals embed on the real axis).
    pub fn complex_table(&self) -> Vec<Complex64> {
        match &self.table {
            Table::Finite(v) => v.iter().map(|&x| Complex64::new(x as f64, 0.0)).collect(),
            Table::Real(v) => v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            Table::Complex(v) => v.clone(),
        }
    }

    /// For an F_p-valued function (R = p), the unit-circle lift
    /// x -> exp(2 pi i f(x)/p).
    pub fn character_table(&self) -> Result<Vec<Complex64>> {
        let RangeKind::Finite(r) = self.range else {
            return Err(Error::Range("character lift needs finite values".to_string()));
        };
        if r != self.params.p() as u16 {
            return Err(Error::Range(format!(
                "character lift needs R = p, got R = {r}, p = {}",
                self.params.p()
            )));
        }
        let Table::Finite(v) = &self.table else { unreachable!() };
        let p = self.params.p() as f64;
        Ok(v.iter()
            .map(|&x| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * x as f64 / p))
            .collect())
    }

    /// Pullback along an affine map: (f restricted to A)(x) = f(A(x)).
    pub fn restrict(&self, map: &AffineMap) -> Result<FiniteFunction> {
        if map.target_dim() != self.params.n() || map.p() != self.params.p() {
            return Err(Error::dim(format!(
                "map into F_{}^{} cannot restrict a function on F_{}^{}",
                map.p(),
                map.target_dim(),
                self.params.p(),
                self.params.n()
            )));
        }
        let src = map.source_params()?;
        let images = map.image_table()?;
        let table = match &self.table {
            Table::Finite(v) => Table::Finite(images.iter().map(|&i| v[i as usize]).collect()),
            Table::Real(v) => Table::Real(images.iter().map(|&i| v[i as usize]).collect()),
            Table::Complex(v) => Table::Complex(images.iter().map(|&i| v[i as usize]).collect()),
        };
        Ok(FiniteFunction {
            params: src,
            range: self.range,
            table,
        })
    }

    /// Independent per-point rounding of a [0,1]-valued (or {0,1}-valued)
    /// function to {0,1}: point x (in canonical order) becomes 1 with
    /// probability f(x).
    pub fn round_randomized(&self, rng: &mut DetRng) -> Result<FiniteFunction> {
        let probs: Vec<f64> = match (&self.table, self.range) {
            (Table::Real(v), RangeKind::UnitInterval) => v.clone(),
            (Table::Finite(v), RangeKind::Finite(2)) => v.iter().map(|&x| x as f64).collect(),
            _ => {
                return Err(Error::Range(
                    "randomized rounding needs values in [0,1]".to_string(),
                ))
            }
        };
        let values: Vec<u8> = probs.iter().map(|&q| rng.bernoulli(q) as u8).collect();
        FiniteFunction::new_finite(self.params, 2, values)
    }

    /// Splits a finite-range function into indicator slices: slice i is the
    /// {0,1}-valued function of the level set f = i. Summing i * slice_i
    /// reconstructs f exactly.
    pub fn indicator_slices(&self) -> Result<Vec<FiniteFunction>> {
        let RangeKind::Finite(r) = self.range else {
            return Err(Error::Range("slicing needs a finite range".to_string()));
        };
        let Table::Finite(v) = &self.table else { unreachable!() };
        (0..r as u8)
            .map(|i| {
                let vals = v.iter().map(|&x| (x == i) as u8).collect();
                FiniteFunction::new_finite(self.params, 2, vals)
            })
            .collect()
    }

    /// Serializes in the text format.
    pub fn to_text(&self) -> String {
        let p = self.params.p();
        let n = self.params.n();
        match &self.table {
            Table::Finite(v) => {
                let RangeKind::Finite(r) = self.range else { unreachable!() };
                let mut out = format!("{p} {n} {r}\n");
                push_wrapped(&mut out, v.iter().map(|x| x.to_string()));
                out
            }
            Table::Real(v) => {
                let mut out = format!("{p} {n} real\n");
                push_wrapped(&mut out, v.iter().map(|x| format!("{x}")));
                out
            }
            Table::Complex(_) => {
                panic!("complex-valued functions have no text serialization")
            }
        }
    }

    /// Parses the text format.
    pub fn from_text(text: &str) -> Result<FiniteFunction> {
        let mut lines = text.lines().enumerate();
        let (header_line, header) = lines
            .by_ref()
            .map(|(i, l)| (i + 1, l.trim()))
            .find(|(_, l)| !l.is_empty())
            .ok_or_else(|| Error::parse(1, "empty function file"))?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::parse(header_line, "header must be `p n R` or `p n real`"));
        }
        let p: u8 = toks[0]
            .parse()
            .map_err(|_| Error::parse(header_line, "bad field characteristic"))?;
        let n: usize = toks[1]
            .parse()
            .map_err(|_| Error::parse(header_line, "bad dimension"))?;
        let params = FieldParams::new(p, n)?;
        let want = params.size();
        let real = toks[2] == "real";
        let r: u16 = if real {
            0
        } else {
            toks[2]
                .parse()
                .map_err(|_| Error::parse(header_line, "bad range size"))?
        };
        let mut finite_vals: Vec<u8> = Vec::new();
        let mut real_vals: Vec<f64> = Vec::new();
        for (lineno, line) in lines.map(|(i, l)| (i + 1, l)) {
            for tok in line.split_whitespace() {
                if finite_vals.len() + real_vals.len() == want {
                    return Err(Error::parse(lineno, "trailing values after full table"));
                }
                if real {
                    let v: f64 = tok
                        .parse()
                        .map_err(|_| Error::parse(lineno, format!("`{tok}` is not a real number")))?;
                    real_vals.push(v);
                } else {
                    let v: u8 = tok
                        .parse()
                        .map_err(|_| Error::parse(lineno, format!("`{tok}` is not a value in [{r}]")))?;
                    finite_vals.push(v);
                }
            }
        }
        let got = finite_vals.len() + real_vals.len();
        if got != want {
            return Err(Error::parse(0, format!("expected {want} values, found {got}")));
        }
        if real {
            let signed = real_vals.iter().any(|&v| v < 0.0);
            FiniteFunction::new_real(params, signed, real_vals)
        } else {
            FiniteFunction::new_finite(params, r, finite_vals)
        }
    }

    /// Parses a stream of concatenated function blocks. Each block is a
    /// `p n R`/`p n real` header followed by exactly p^n value tokens, so
    /// boundaries need no separators. Errors cite the 1-based block index.
    pub fn from_text_many(text: &str) -> Result<Vec<FiniteFunction>> {
        let mut toks = text.split_whitespace().peekable();
        let mut out = Vec::new();
        while toks.peek().is_some() {
            let block = out.len() + 1;
            let bad =
                |what: &str| Error::parse(block, format!("block {block}: {what}"));
            let mut header = || {
                toks.next()
                    .ok_or_else(|| Error::parse(block, format!("block {block}: truncated header")))
            };
            let p: u8 = header()?
                .parse()
                .map_err(|_| bad("bad field characteristic"))?;
            let n: usize = header()?.parse().map_err(|_| bad("bad dimension"))?;
            let kind = header()?;
            let params = FieldParams::new(p, n)?;
            let want = params.size();
            if kind == "real" {
                let mut vals = Vec::with_capacity(want);
                for _ in 0..want {
                    let tok = toks.next().ok_or_else(|| bad("truncated value table"))?;
                    vals.push(tok.parse::<f64>().map_err(|_| bad("bad real value"))?);
                }
                let signed = vals.iter().any(|&v| v < 0.0);
                out.push(FiniteFunction::new_real(params, signed, vals)?);
            } else {
                let r: u16 = kind.parse().map_err(|_| bad("bad range size"))?;
                let mut vals = Vec::with_capacity(want);
                for _ in 0..want {
                    let tok = toks.next().ok_or_else(|| bad("truncated value table"))?;
                    vals.push(tok.parse::<u8>().map_err(|_| bad("bad value"))?);
                }
                out.push(FiniteFunction::new_finite(params, r, vals)?);
            }
        }
        Ok(out)
    }
}

fn push_wrapped(out: &mut String, toks: impl Iterator<Item = String>) {
    let mut col = 0usize;
    for t in toks {
        if col > 0 {
            if col + 1 + t.len() > 78 {
                out.push('\n');
                col = 0;
            } else {
                out.push(' ');
                col += 1;
            }
        }
        out.push_str(&t);
        col += t.len();
    }
    out.push('\n');
}

fn check_same_space(f: &FiniteFunction, g: &FiniteFunction) -> Result<()> {
    if f.params != g.params {
        return Err(Error::dim(format!(
            "functions live on different spaces: F_{}^{} vs F_{}^{}",
            f.params.p(),
            f.params.n(),
            g.params.p(),
            g.params.n()
        )));
    }
    Ok(())
}

/// Mean absolute difference E_x |f(x) - g(x)|.
///
/// When both functions have finite ranges the numerator accumulates as an
/// exact integer before the single division by p^n.
pub fn l1_distance(f: &FiniteFunction, g: &FiniteFunction) -> Result<f64> {
    check_same_space(f, g)?;
    let size = f.len() as f64;
    match (&f.table, &g.table) {
        (Table::Finite(a), Table::Finite(b)) => {
            let total: u64 = a
                .iter()
                .zip(b)
                .map(|(&x, &y)| (x as i64 - y as i64).unsigned_abs())
                .sum();
            Ok(total as f64 / size)
        }
        (Table::Complex(_), _) | (_, Table::Complex(_)) => {
            let a = f.complex_table();
            let b = g.complex_table();
            Ok(kahan_sum(a.iter().zip(&b).map(|(x, y)| (x - y).norm())) / size)
        }
        _ => {
            let a = f.real_table()?;
            let b = g.real_table()?;
            Ok(kahan_sum(a.iter().zip(&b).map(|(x, y)| (x - y).abs())) / size)
        }
    }
}

/// Root mean square difference.
pub fn l2_distance(f: &FiniteFunction, g: &FiniteFunction) -> Result<f64> {
    check_same_space(f, g)?;
    let size = f.len() as f64;
    let a = f.complex_table();
    let b = g.complex_table();
    Ok((kahan_sum(a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr())) / size).sqrt())
}

/// Fraction of points where the two functions disagree exactly.
pub fn hamming_distance(f: &FiniteFunction, g: &FiniteFunction) -> Result<f64> {
    check_same_space(f, g)?;
    let count = match (&f.table, &g.table) {
        (Table::Finite(a), Table::Finite(b)) => a.iter().zip(b).filter(|(x, y)| x != y).count(),
        _ => {
            let a = f.complex_table();
            let b = g.complex_table();
            a.iter().zip(&b).filter(|(x, y)| x != y).count()
        }
    };
    Ok(count as f64 / f.len() as f64)
}

/// Mean absolute value of a real table.
pub fn l1_norm(values: &[f64]) -> f64 {
    kahan_sum(values.iter().map(|v| v.abs())) / values.len() as f64
}

/// Root mean square of a real table.
pub fn l2_norm(values: &[f64]) -> f64 {
    (kahan_sum(values.iter().map(|v| v * v)) / values.len() as f64).sqrt()
}

/// Maximum absolute value of a real table.
pub fn linf_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Compensated summation; keeps long accumulations near machine precision.
pub fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::sample_affine_embedding;

    fn params(p: u8, n: usize) -> FieldParams {
        FieldParams::new(p, n).unwrap()
    }

    #[test]
    fn constructors_validate() {
        let pr = params(2, 2);
        assert!(FiniteFunction::new_finite(pr, 2, vec![0, 1, 1, 0]).is_ok());
        assert!(FiniteFunction::new_finite(pr, 2, vec![0, 1, 2, 0]).is_err());
        assert!(FiniteFunction::new_finite(pr, 2, vec![0, 1, 1]).is_err());
        assert!(FiniteFunction::new_real(pr, false, vec![0.0, 0.5, 1.0, -0.1]).is_err());
        assert!(FiniteFunction::new_real(pr, true, vec![0.0, 0.5, 1.0, -0.1]).is_ok());
    }

    #[test]
    fn restriction_onto_shifted_plane() {
        // f(x) = x_1 on F_2^3 restricted to the plane x_1 = 1 is constantly 1.
        let pr = params(2, 3);
        let values: Vec<u8> = (0..8).map(|i| (i & 1) as u8).collect();
        let f = FiniteFunction::new_finite(pr, 2, values).unwrap();
        // Embedding F_2^2 -> F_2^3: y -> e_1 + (0, y_1, y_2).
        let fp = crate::field::Fp::new(2).unwrap();
        let mut m = crate::linalg::MatFp::zero(fp, 3, 2);
        m.set(1, 0, 1);
        m.set(2, 1, 1);
        let map = AffineMap::new(m, vec![1, 0, 0]).unwrap();
        let g = f.restrict(&map).unwrap();
        assert_eq!(g.finite_table().unwrap(), &[1, 1, 1, 1]);
    }

    #[test]
    fn l1_between_constants() {
        let pr = params(2, 3);
        let f = FiniteFunction::new_finite(pr, 2, vec![0; 8]).unwrap();
        let g = FiniteFunction::new_finite(pr, 2, vec![1; 8]).unwrap();
        assert_eq!(l1_distance(&f, &g).unwrap(), 1.0);
        assert_eq!(hamming_distance(&f, &g).unwrap(), 1.0);
        assert_eq!(l1_distance(&f, &f).unwrap(), 0.0);
    }

    #[test]
    fn l1_exact_integer_counts() {
        let pr = params(3, 2);
        let f = FiniteFunction::new_finite(pr, 5, vec![0, 4, 2, 1, 3, 0, 4, 2, 1]).unwrap();
        let g = FiniteFunction::new_finite(pr, 5, vec![4, 0, 2, 3, 3, 1, 0, 2, 0]).unwrap();
        // |0-4|+|4-0|+0+2+0+1+4+0+1 = 16, over 9 points.
        assert_eq!(l1_distance(&f, &g).unwrap(), 16.0 / 9.0);
    }

    #[test]
    fn rounding_hits_endpoints_deterministically() {
        let pr = params(2, 4);
        let mut vals = vec![0.5f64; 16];
        vals[0] = 0.0;
        vals[1] = 1.0;
        let f = FiniteFunction::new_real(pr, false, vals).unwrap();
        let mut rng = DetRng::new(9);
        let r1 = f.round_randomized(&mut rng).unwrap();
        let mut rng = DetRng::new(9);
        let r2 = f.round_randomized(&mut rng).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.get_finite(0).unwrap(), 0);
        assert_eq!(r1.get_finite(1).unwrap(), 1);
    }

    #[test]
    fn rounding_mean_tracks_probability() {
        let pr = params(2, 10);
        let f = FiniteFunction::constant_real(pr, 0.3).unwrap();
        let mut rng = DetRng::new(4);
        let r = f.round_randomized(&mut rng).unwrap();
        let mean: f64 = r.finite_table().unwrap().iter().map(|&v| v as f64).sum::<f64>() / 1024.0;
        assert!((mean - 0.3).abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn slices_reconstruct_function() {
        let pr = params(3, 2);
        let mut rng = DetRng::new(17);
        let f = FiniteFunction::random_finite(pr, 4, &mut rng).unwrap();
        let slices = f.indicator_slices().unwrap();
        assert_eq!(slices.len(), 4);
        for idx in 0..pr.size() as u32 {
            let rebuilt: u32 = slices
                .iter()
                .enumerate()
                .map(|(i, s)| i as u32 * s.get_finite(idx).unwrap() as u32)
                .sum();
            assert_eq!(rebuilt, f.get_finite(idx).unwrap() as u32);
        }
    }

    #[test]
    fn text_roundtrip_finite_and_real() {
        let pr = params(2, 3);
        let mut rng = DetRng::new(2);
        let f = FiniteFunction::random_finite(pr, 3, &mut rng).unwrap();
        let f2 = FiniteFunction::from_text(&f.to_text()).unwrap();
        assert_eq!(f, f2);

        let g = FiniteFunction::random_unit(pr, &mut rng).unwrap();
        let g2 = FiniteFunction::from_text(&g.to_text()).unwrap();
        assert_eq!(g, g2);
    }

    #[test]
    fn parse_rejects_wrong_count_and_bad_tokens() {
        assert!(matches!(
            FiniteFunction::from_text("2 2 2\n0 1 0\n"),
            Err(Error::Parse { .. })
        ));
        match FiniteFunction::from_text("2 2 2\n0 1\nx 0\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn restriction_along_random_embeddings_matches_composition() {
        let mut rng = DetRng::new(23);
        let tgt = params(3, 4);
        let f = FiniteFunction::random_finite(tgt, 3, &mut rng).unwrap();
        let a = sample_affine_embedding(&mut rng, &tgt, 2).unwrap();
        let g = f.restrict(&a).unwrap();
        let src = params(3, 2);
        for pt in src.points() {
            let image = a.apply(&pt).unwrap();
            assert_eq!(
                g.get_finite(pt.index).unwrap(),
                f.get_finite(image.index).unwrap()
            );
        }
    }
}
