//! Dense row-major matrices over F_p and the little Gaussian elimination
//! the rest of the crate needs: rank, reduced row echelon form with a
//! recorded transform, left inverses, and span membership.

use crate::error::{Error, Result};
use crate::field::Fp;

/// A rows x cols matrix over F_p, row major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatFp {
    pub fp: Fp,
    pub rows: usize,
    pub cols: usize,
    data: Vec<u8>,
}

impl MatFp {
    pub fn zero(fp: Fp, rows: usize, cols: usize) -> Self {
        MatFp {
            fp,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(fp: Fp, n: usize) -> Self {
        let mut m = MatFp::zero(fp, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(fp: Fp, rows: &[Vec<u8>]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let mut m = MatFp::zero(fp, height, width);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::dim("ragged rows in matrix literal".to_string()));
            }
            for (j, &v) in row.iter().enumerate() {
                if v >= fp.p {
                    return Err(Error::Range(format!(
                        "entry {} is not a residue mod {}",
                        v, fp.p
                    )));
                }
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u8) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[u8] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Matrix product self * other.
    pub fn mul(&self, other: &MatFp) -> Result<MatFp> {
        if self.cols != other.rows {
            return Err(Error::dim(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let fp = self.fp;
        let mut out = MatFp::zero(fp, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = fp.add(out.get(i, j), fp.mul(a, other.get(k, j)));
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product self * v.
    pub fn mul_vec(&self, v: &[u8]) -> Result<Vec<u8>> {
        if v.len() != self.cols {
            return Err(Error::dim(format!(
                "vector length {} does not match {} columns",
                v.len(),
                self.cols
            )));
        }
        let fp = self.fp;
        let mut out = vec![0u8; self.rows];
        for i in 0..self.rows {
            let mut acc = 0u8;
            for j in 0..self.cols {
                acc = fp.add(acc, fp.mul(self.get(i, j), v[j]));
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// Reduced row echelon form of self, together with the invertible
    /// transform E such that E * self = rref, and the pivot columns in
    /// order. Fully deterministic: pivots are chosen top-down by first
    /// nonzero entry.
    pub fn rref_with_transform(&self) -> (MatFp, MatFp, Vec<(usize, usize)>) {
        let fp = self.fp;
        let mut r = self.clone();
        let mut e = MatFp::identity(fp, self.rows);
        let mut pivots = Vec::new();
        let mut pivot_row = 0;
        for col in 0..self.cols {
            if pivot_row == self.rows {
                break;
            }
            let Some(sel) = (pivot_row..self.rows).find(|&i| r.get(i, col) != 0) else {
                continue;
            };
            if sel != pivot_row {
                for j in 0..self.cols {
                    let (a, b) = (r.get(sel, j), r.get(pivot_row, j));
                    r.set(sel, j, b);
                    r.set(pivot_row, j, a);
                }
                for j in 0..self.rows {
                    let (a, b) = (e.get(sel, j), e.get(pivot_row, j));
                    e.set(sel, j, b);
                    e.set(pivot_row, j, a);
                }
            }
            let inv = fp.inv(r.get(pivot_row, col));
            if inv != 1 {
                for j in 0..self.cols {
                    r.set(pivot_row, j, fp.mul(r.get(pivot_row, j), inv));
                }
                for j in 0..self.rows {
                    e.set(pivot_row, j, fp.mul(e.get(pivot_row, j), inv));
                }
            }
            for i in 0..self.rows {
                if i == pivot_row {
                    continue;
                }
                let factor = r.get(i, col);
                if factor == 0 {
                    continue;
                }
                for j in 0..self.cols {
                    let v = fp.sub(r.get(i, j), fp.mul(factor, r.get(pivot_row, j)));
                    r.set(i, j, v);
                }
                for j in 0..self.rows {
                    let v = fp.sub(e.get(i, j), fp.mul(factor, e.get(pivot_row, j)));
                    e.set(i, j, v);
                }
            }
            pivots.push((pivot_row, col));
            pivot_row += 1;
        }
        (r, e, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref_with_transform().2.len()
    }

    /// For a matrix with full column rank, a deterministic left inverse M
    /// with M * self = identity.
    pub fn left_inverse(&self) -> Result<MatFp> {
        let (_, e, pivots) = self.rref_with_transform();
        if pivots.len() != self.cols {
            return Err(Error::NotInjective(format!(
                "rank {} < {} columns",
                pivots.len(),
                self.cols
            )));
        }
        let mut m = MatFp::zero(self.fp, self.cols, self.rows);
        for &(row, col) in &pivots {
            for j in 0..self.rows {
                m.set(col, j, e.get(row, j));
            }
        }
        Ok(m)
    }
}

/// Whether `v` lies in the F_p-linear span of `vectors`.
pub fn span_contains(fp: Fp, vectors: &[&[u8]], v: &[u8]) -> bool {
    if vectors.is_empty() {
        return v.iter().all(|&c| c == 0);
    }
    let width = v.len();
    // Eliminate with the spanning set, then check the target reduces to 0.
    let mut basis: Vec<Vec<u8>> = Vec::new();
    for vec in vectors {
        debug_assert_eq!(vec.len(), width);
        let mut cur = vec.to_vec();
        reduce_against(fp, &mut cur, &basis);
        if cur.iter().any(|&c| c != 0) {
            normalize_leading(fp, &mut cur);
            basis.push(cur);
            basis.sort_by_key(|b| b.iter().position(|&c| c != 0).unwrap_or(width));
        }
    }
    let mut cur = v.to_vec();
    reduce_against(fp, &mut cur, &basis);
    cur.iter().all(|&c| c == 0)
}

fn reduce_against(fp: Fp, cur: &mut [u8], basis: &[Vec<u8>]) {
    for b in basis {
        let lead = b.iter().position(|&c| c != 0).expect("basis rows nonzero");
        let factor = cur[lead];
        if factor != 0 {
            for (c, &bv) in cur.iter_mut().zip(b.iter()) {
                *c = fp.sub(*c, fp.mul(factor, bv));
            }
        }
    }
}

fn normalize_leading(fp: Fp, row: &mut [u8]) {
    let lead = row.iter().position(|&c| c != 0).expect("nonzero row");
    let inv = fp.inv(row[lead]);
    if inv != 1 {
        for c in row.iter_mut() {
            *c = fp.mul(*c, inv);
        }
    }
}
