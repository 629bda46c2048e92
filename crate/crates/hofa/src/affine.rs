//! Affine maps F_p^k -> F_p^n: construction, application, uniform sampling
//! of injective maps (affine embeddings), deterministic sections, and a
//! plain-text serialization.
//!
//! Text format: a header line `p k n`, then k rows giving the image of each
//! source basis vector under the linear part (n entries per row, so row i is
//! column i of the matrix), then one shift row with n entries.

use crate::error::{Error, Result};
use crate::field::{FieldParams, Point};
use crate::linalg::MatFp;
use crate::rng::DetRng;

/// An affine map x -> Lx + c from F_p^k to F_p^n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineMap {
    /// Linear part, an n x k matrix.
    pub matrix: MatFp,
    /// Shift, a point of the target space.
    pub shift: Vec<u8>,
}

impl AffineMap {
    pub fn new(matrix: MatFp, shift: Vec<u8>) -> Result<Self> {
        if shift.len() != matrix.rows {
            return Err(Error::dim(format!(
                "shift has {} coordinates, matrix has {} rows",
                shift.len(),
                matrix.rows
            )));
        }
        if let Some(&c) = shift.iter().find(|&&c| c >= matrix.fp.p) {
            return Err(Error::Range(format!(
                "shift coordinate {} is not a residue mod {}",
                c, matrix.fp.p
            )));
        }
        Ok(AffineMap { matrix, shift })
    }

    /// The identity map on F_p^n.
    pub fn identity(params: &FieldParams) -> Self {
        AffineMap {
            matrix: MatFp::identity(params.fp(), params.n()),
            shift: vec![0; params.n()],
        }
    }

    /// Coordinate inclusion F_p^k -> F_p^n onto the first k coordinates,
    /// shifted by `shift`.
    pub fn inclusion(p: u8, k: usize, n: usize, shift: Vec<u8>) -> Result<Self> {
        if k > n {
            return Err(Error::dim(format!("inclusion needs k <= n, got {k} > {n}")));
        }
        let fp = crate::field::Fp::new(p)?;
        let mut m = MatFp::zero(fp, n, k);
        for j in 0..k {
            m.set(j, j, 1);
        }
        AffineMap::new(m, shift)
    }

    #[inline]
    pub fn p(&self) -> u8 {
        self.matrix.fp.p
    }

    /// Source dimension k.
    #[inline]
    pub fn source_dim(&self) -> usize {
        self.matrix.cols
    }

    /// Target dimension n.
    #[inline]
    pub fn target_dim(&self) -> usize {
        self.matrix.rows
    }

    pub fn source_params(&self) -> Result<FieldParams> {
        FieldParams::new(self.p(), self.source_dim())
    }

    pub fn target_params(&self) -> Result<FieldParams> {
        FieldParams::new(self.p(), self.target_dim())
    }

    /// Image of a source point given by coordinates.
    pub fn apply_coords(&self, coords: &[u8]) -> Result<Vec<u8>> {
        let fp = self.matrix.fp;
        let mut out = self.matrix.mul_vec(coords)?;
        for (o, &s) in out.iter_mut().zip(&self.shift) {
            *o = fp.add(*o, s);
        }
        Ok(out)
    }

    /// Image of a source point.
    pub fn apply(&self, point: &Point) -> Result<Point> {
        let coords = self.apply_coords(&point.coords)?;
        Point::from_coords(&self.target_params()?, coords)
    }

    /// Target index of every source point, in canonical source order.
    ///
    /// Runs an odometer over the source coordinates, adding one matrix
    /// column per digit increment, so the whole table costs O(p^k * n).
    pub fn image_table(&self) -> Result<Vec<u32>> {
        let src = self.source_params()?;
        let tgt = self.target_params()?;
        let fp = tgt.fp();
        let (p, k) = (self.p(), self.source_dim());
        let size = src.size();
        let mut out = vec![0u32; size];
        let mut digits = vec![0u8; k];
        let mut cur = self.shift.clone();
        out[0] = tgt.index_of(&cur);
        for slot in out.iter_mut().skip(1) {
            let mut j = 0;
            loop {
                for (c, i) in cur.iter_mut().zip(0..self.matrix.rows) {
                    *c = fp.add(*c, self.matrix.get(i, j));
                }
                digits[j] += 1;
                if digits[j] == p {
                    digits[j] = 0;
                    j += 1;
                } else {
                    break;
                }
            }
            *slot = tgt.index_of(&cur);
        }
        Ok(out)
    }

    /// Whether the linear part has full column rank.
    pub fn is_injective(&self) -> bool {
        self.matrix.rank() == self.matrix.cols
    }

    /// Composition self after other: x -> self(other(x)).
    pub fn compose(&self, other: &AffineMap) -> Result<AffineMap> {
        if other.target_dim() != self.source_dim() || other.p() != self.p() {
            return Err(Error::dim(format!(
                "cannot compose {}^{}->{}^{} after {}^{}->{}^{}",
                self.p(),
                self.source_dim(),
                self.p(),
                self.target_dim(),
                other.p(),
                other.source_dim(),
                other.p(),
                other.target_dim()
            )));
        }
        let matrix = self.matrix.mul(&other.matrix)?;
        let shift = self.apply_coords(&other.shift)?;
        AffineMap::new(matrix, shift)
    }

    /// A deterministic section: an affine map S with S(self(x)) = x for all
    /// source points x. Requires the map to be injective.
    ///
    /// The linear part is the Gaussian-elimination left inverse of the
    /// matrix, and the shift is chosen so the composite kills the shift of
    /// self; the construction is canonical given the matrix.
    pub fn section(&self) -> Result<AffineMap> {
        let m = self.matrix.left_inverse()?;
        let fp = self.matrix.fp;
        let mc = m.mul_vec(&self.shift)?;
        let shift: Vec<u8> = mc.into_iter().map(|c| fp.neg(c)).collect();
        AffineMap::new(m, shift)
    }

    /// Serializes in the text format.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} {} {}\n",
            self.p(),
            self.source_dim(),
            self.target_dim()
        );
        for j in 0..self.source_dim() {
            let row: Vec<String> = (0..self.target_dim())
                .map(|i| self.matrix.get(i, j).to_string())
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        let shift: Vec<String> = self.shift.iter().map(|c| c.to_string()).collect();
        out.push_str(&shift.join(" "));
        out.push('\n');
        out
    }

    /// Parses the text format. Blank lines are ignored.
    pub fn from_text(text: &str) -> Result<AffineMap> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (lineno, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty affine map file"))?;
        let head = parse_ints(lineno, header)?;
        if head.len() != 3 {
            return Err(Error::parse(lineno, "header must be `p k n`"));
        }
        let (p, k, n) = (head[0] as u8, head[1] as usize, head[2] as usize);
        let fp = crate::field::Fp::new(p)?;
        FieldParams::new(p, n)?;
        FieldParams::new(p, k)?;
        let mut matrix = MatFp::zero(fp, n, k);
        for j in 0..k {
            let (lineno, line) = lines
                .next()
                .ok_or_else(|| Error::parse(lineno, format!("missing basis image row {j}")))?;
            let row = parse_ints(lineno, line)?;
            if row.len() != n {
                return Err(Error::parse(
                    lineno,
                    format!("basis image row has {} entries, expected {}", row.len(), n),
                ));
            }
            for (i, &v) in row.iter().enumerate() {
                if v >= p as i64 {
                    return Err(Error::parse(
                        lineno,
                        format!("entry {v} is not a residue mod {p}"),
                    ));
                }
                matrix.set(i, j, v as u8);
            }
        }
        let (lineno, line) = lines
            .next()
            .ok_or_else(|| Error::parse(lineno, "missing shift row"))?;
        let row = parse_ints(lineno, line)?;
        if row.len() != n {
            return Err(Error::parse(
                lineno,
                format!("shift row has {} entries, expected {}", row.len(), n),
            ));
        }
        let shift: Vec<u8> = row.iter().map(|&v| v as u8).collect();
        if let Some(&c) = shift.iter().find(|&&c| c >= p) {
            return Err(Error::parse(
                lineno,
                format!("shift entry {c} is not a residue mod {p}"),
            ));
        }
        if let Some((lineno, _)) = lines.next() {
            return Err(Error::parse(lineno, "trailing content after shift row"));
        }
        AffineMap::new(matrix, shift)
    }
}

fn parse_ints(lineno: usize, line: &str) -> Result<Vec<i64>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<i64>()
                .map_err(|_| Error::parse(lineno, format!("`{tok}` is not an integer")))
        })
        .collect()
}

/// Draws a uniformly random injective affine map F_p^k -> F_p^n by
/// rejection: sample the k basis images uniformly (column by column, each
/// column top coordinate first), retry until the linear part has full
/// column rank, then sample the shift uniformly.
pub fn sample_affine_embedding(rng: &mut DetRng, target: &FieldParams, k: usize) -> Result<AffineMap> {
    if k > target.n() {
        return Err(Error::dim(format!(
            "embedding dimension {} exceeds target dimension {}",
            k,
            target.n()
        )));
    }
    let fp = target.fp();
    let n = target.n();
    loop {
        let mut m = MatFp::zero(fp, n, k);
        for j in 0..k {
            for i in 0..n {
                m.set(i, j, rng.residue(fp.p));
            }
        }
        if m.rank() < k {
            continue;
        }
        let shift = rng.residues(fp.p, n);
        return AffineMap::new(m, shift);
    }
}

/// Enumerates every injective affine map F_p^k -> F_p^n, in a fixed order:
/// all p^{nk} linear parts in odometer order (entry (0,0) fastest, column
/// major), filtered to full column rank, each paired with all p^n shifts in
/// canonical order.
pub fn enumerate_embeddings(target: &FieldParams, k: usize) -> Result<Vec<AffineMap>> {
    let count = count_embeddings(target, k)?;
    let fp = target.fp();
    let n = target.n();
    let p = target.p() as u64;
    let cells = n * k;
    let matrices = (p as u128).pow(cells as u32);
    let mut out = Vec::with_capacity(count as usize);
    let mut entries = vec![0u8; cells];
    for _ in 0..matrices {
        let mut m = MatFp::zero(fp, n, k);
        for j in 0..k {
            for i in 0..n {
                m.set(i, j, entries[j * n + i]);
            }
        }
        if m.rank() == k {
            for shift_idx in 0..target.size() as u32 {
                let shift = target.coords_of(shift_idx);
                out.push(AffineMap::new(m.clone(), shift)?);
            }
        }
        // odometer over entries
        for e in entries.iter_mut() {
            *e += 1;
            if *e == fp.p {
                *e = 0;
            } else {
                break;
            }
        }
    }
    debug_assert_eq!(out.len() as u128, count);
    Ok(out)
}

/// Cap on exhaustive embedding enumeration.
pub const MAX_EMBEDDINGS: u128 = 1 << 24;

/// Number of injective affine maps F_p^k -> F_p^n, checking the
/// enumeration cap. The count is p^n * prod_{i<k} (p^n - p^i).
pub fn count_embeddings(target: &FieldParams, k: usize) -> Result<u128> {
    if k > target.n() {
        return Err(Error::dim(format!(
            "embedding dimension {} exceeds target dimension {}",
            k,
            target.n()
        )));
    }
    let q = target.size() as u128;
    let p = target.p() as u128;
    let mut count = q;
    let mut pi = 1u128;
    for _ in 0..k {
        count *= q - pi;
        pi *= p;
    }
    // Also bound the raw matrix scan used by enumerate_embeddings.
    let scan = (p).pow((target.n() * k) as u32);
    let needed = count.max(scan);
    if needed > MAX_EMBEDDINGS {
        return Err(Error::capacity("embedding enumeration", needed, MAX_EMBEDDINGS));
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: u8, n: usize) -> FieldParams {
        FieldParams::new(p, n).unwrap()
    }

    #[test]
    fn identity_fixes_points() {
        let pr = params(3, 3);
        let id = AffineMap::identity(&pr);
        for pt in pr.points() {
            assert_eq!(id.apply(&pt).unwrap(), pt);
        }
    }

    #[test]
    fn image_table_matches_pointwise_apply() {
        let mut rng = DetRng::new(11);
        for &(p, k, n) in &[(2u8, 3usize, 5usize), (3, 2, 3), (5, 1, 2)] {
            let tgt = params(p, n);
            let src = params(p, k);
            let map = sample_affine_embedding(&mut rng, &tgt, k).unwrap();
            let table = map.image_table().unwrap();
            for pt in src.points() {
                assert_eq!(table[pt.index as usize], map.apply(&pt).unwrap().index);
            }
        }
    }

    #[test]
    fn section_composes_to_identity() {
        let mut rng = DetRng::new(5);
        for &(p, k, n) in &[(2u8, 3usize, 6usize), (3, 2, 4), (5, 2, 3)] {
            let tgt = params(p, n);
            let src = params(p, k);
            let a = sample_affine_embedding(&mut rng, &tgt, k).unwrap();
            let s = a.section().unwrap();
            let comp = s.compose(&a).unwrap();
            for pt in src.points() {
                assert_eq!(comp.apply(&pt).unwrap(), pt, "p={p} k={k} n={n}");
            }
        }
    }

    #[test]
    fn section_of_inclusion_is_projection() {
        // Inclusion F_2^2 -> F_2^3 appending 0; its section projects back.
        let inc = AffineMap::inclusion(2, 2, 3, vec![0, 0, 0]).unwrap();
        let sec = inc.section().unwrap();
        let src = params(2, 2);
        for pt in src.points() {
            let up = inc.apply(&pt).unwrap();
            assert_eq!(sec.apply(&up).unwrap(), pt);
        }
    }

    #[test]
    fn section_rejects_non_injective() {
        let fp = crate::field::Fp::new(2).unwrap();
        let m = MatFp::from_rows(fp, &[vec![1, 1], vec![1, 1], vec![0, 0]]).unwrap();
        let a = AffineMap::new(m, vec![0, 0, 0]).unwrap();
        assert!(!a.is_injective());
        assert!(matches!(a.section(), Err(Error::NotInjective(_))));
    }

    #[test]
    fn embedding_count_small_cases() {
        // Injective affine maps F_2 -> F_2^2: 4 shifts * 3 nonzero directions.
        assert_eq!(count_embeddings(&params(2, 2), 1).unwrap(), 12);
        // F_2 -> F_2^3: 8 * 7.
        assert_eq!(count_embeddings(&params(2, 3), 1).unwrap(), 56);
        assert_eq!(enumerate_embeddings(&params(2, 2), 1).unwrap().len(), 12);
    }

    #[test]
    fn sampled_embeddings_are_uniform() {
        // Chi-square check over all 12 injective maps F_2 -> F_2^2.
        let tgt = params(2, 2);
        let all = enumerate_embeddings(&tgt, 1).unwrap();
        let mut counts = vec![0usize; all.len()];
        let mut rng = DetRng::new(0);
        let draws = 12_000;
        for _ in 0..draws {
            let m = sample_affine_embedding(&mut rng, &tgt, 1).unwrap();
            let pos = all.iter().position(|a| *a == m).expect("map enumerated");
            counts[pos] += 1;
        }
        let expected = draws as f64 / all.len() as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        // 11 degrees of freedom; 99.9th percentile is about 31.3.
        assert!(chi2 < 31.3, "chi-square statistic {chi2} too large");
    }

    #[test]
    fn text_roundtrip() {
        let mut rng = DetRng::new(3);
        let tgt = params(5, 3);
        let a = sample_affine_embedding(&mut rng, &tgt, 2).unwrap();
        let text = a.to_text();
        let b = AffineMap::from_text(&text).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "2 1 2\n0 1\n0 bogus\n";
        match AffineMap::from_text(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
