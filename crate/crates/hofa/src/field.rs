//! Prime fields F_p for p in {2, 3, 5}, points of F_p^n, and canonical
//! point indexing.
//!
//! Points are indexed in base-p odometer order: a point with coordinates
//! `(c_0, ..., c_{n-1})` has index `sum_i c_i * p^i`, so coordinate 0 varies
//! fastest. Every dense table in the crate is laid out in this order.

use crate::error::{Error, Result};

/// Hard cap on the size of an enumerated point space (p^n).
pub const MAX_POINTS: u64 = 1 << 26;

/// Modular arithmetic in F_p for a small prime p.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fp {
    pub p: u8,
}

impl Fp {
    pub fn new(p: u8) -> Result<Self> {
        match p {
            2 | 3 | 5 => Ok(Fp { p }),
            other => Err(Error::UnsupportedField(other as u64)),
        }
    }

    #[inline]
    pub fn add(&self, a: u8, b: u8) -> u8 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u8, b: u8) -> u8 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u8) -> u8 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        (a as u16 * b as u16 % self.p as u16) as u8
    }

    /// Multiplicative inverse of a nonzero residue.
    ///
    /// # Panics
    /// Panics if `a == 0`.
    pub fn inv(&self, a: u8) -> u8 {
        assert!(a != 0, "zero has no multiplicative inverse");
        for x in 1..self.p {
            if self.mul(a, x) == 1 {
                return x;
            }
        }
        unreachable!("p is prime, every nonzero residue is invertible")
    }

    pub fn pow(&self, a: u8, mut e: u32) -> u8 {
        let mut base = a % self.p;
        let mut acc = 1u8;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }
}

/// The ambient space F_p^n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldParams {
    p: u8,
    n: usize,
}

impl FieldParams {
    /// Creates parameters for F_p^n, checking that p is supported and the
    /// point space fits under [`MAX_POINTS`].
    pub fn new(p: u8, n: usize) -> Result<Self> {
        Fp::new(p)?;
        let size = (p as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if size > MAX_POINTS as u128 {
            return Err(Error::capacity(
                format!("point space of F_{}^{}", p, n),
                size,
                MAX_POINTS as u128,
            ));
        }
        Ok(FieldParams { p, n })
    }

    #[inline]
    pub fn p(&self) -> u8 {
        self.p
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn fp(&self) -> Fp {
        Fp { p: self.p }
    }

    /// Number of points p^n.
    #[inline]
    pub fn size(&self) -> usize {
        (self.p as u64).pow(self.n as u32) as usize
    }

    /// Canonical index of a coordinate vector.
    pub fn index_of(&self, coords: &[u8]) -> u32 {
        debug_assert_eq!(coords.len(), self.n);
        let mut idx = 0u64;
        let mut place = 1u64;
        for &c in coords {
            debug_assert!(c < self.p);
            idx += c as u64 * place;
            place *= self.p as u64;
        }
        idx as u32
    }

    /// Coordinate vector of a canonical index.
    pub fn coords_of(&self, index: u32) -> Vec<u8> {
        let mut coords = vec![0u8; self.n];
        let mut rest = index as u64;
        for c in coords.iter_mut() {
            *c = (rest % self.p as u64) as u8;
            rest /= self.p as u64;
        }
        debug_assert_eq!(rest, 0, "index out of range");
        coords
    }

    /// Coordinate-wise sum of two point indices, digit by digit.
    pub fn add_indices(&self, x: u32, y: u32) -> u32 {
        if self.p == 2 {
            return x ^ y;
        }
        let p = self.p as u64;
        let (mut x, mut y) = (x as u64, y as u64);
        let mut out = 0u64;
        let mut place = 1u64;
        for _ in 0..self.n {
            let d = (x % p + y % p) % p;
            out += d * place;
            place *= p;
            x /= p;
            y /= p;
        }
        out as u32
    }

    /// Coordinate-wise negation of a point index.
    pub fn neg_index(&self, x: u32) -> u32 {
        if self.p == 2 {
            return x;
        }
        let p = self.p as u64;
        let mut x = x as u64;
        let mut out = 0u64;
        let mut place = 1u64;
        for _ in 0..self.n {
            let d = x % p;
            out += if d == 0 { 0 } else { p - d } * place;
            place *= p;
            x /= p;
        }
        out as u32
    }

    /// Iterates all points in canonical index order.
    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        let params = *self;
        (0..self.size() as u32).map(move |i| Point::from_index(&params, i))
    }
}

/// A point of F_p^n carrying both its coordinates and canonical index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Point {
    pub index: u32,
    pub coords: Vec<u8>,
}

impl Point {
    pub fn from_index(params: &FieldParams, index: u32) -> Self {
        Point {
            index,
            coords: params.coords_of(index),
        }
    }

    pub fn from_coords(params: &FieldParams, coords: Vec<u8>) -> Result<Self> {
        if coords.len() != params.n() {
            return Err(Error::dim(format!(
                "point has {} coordinates, space has dimension {}",
                coords.len(),
                params.n()
            )));
        }
        if let Some(c) = coords.iter().find(|&&c| c >= params.p()) {
            return Err(Error::Range(format!(
                "coordinate {} is not a residue mod {}",
                c,
                params.p()
            )));
        }
        let index = params.index_of(&coords);
        Ok(Point { index, coords })
    }
}

/// Constant-time index addition for hot enumeration kernels.
///
/// For p = 2 the canonical index of a sum is the xor of indices. For odd p a
/// pair of split lookup tables (low and high digit blocks never interact,
/// digit addition mod p has no carries) gives O(1) adds after O(p^{n+1})
/// setup, guarded by a capacity check.
pub enum AddTable {
    Xor,
    Split {
        lo_size: u32,
        hi_size: u32,
        lo: Vec<u32>,
        hi: Vec<u32>,
    },
}

/// Cap on total split-table entries (sum of both tables).
const MAX_ADD_TABLE: u64 = 1 << 24;

impl AddTable {
    pub fn new(params: &FieldParams) -> Result<Self> {
        if params.p() == 2 {
            return Ok(AddTable::Xor);
        }
        let p = params.p() as u64;
        let n = params.n();
        let b = n.div_ceil(2);
        let lo_size = p.pow(b as u32);
        let hi_size = p.pow((n - b) as u32);
        let total = lo_size * lo_size + hi_size * hi_size;
        if total > MAX_ADD_TABLE {
            return Err(Error::capacity(
                "index addition table",
                total as u128,
                MAX_ADD_TABLE as u128,
            ));
        }
        let lo_params = FieldParams::new(params.p(), b)?;
        let hi_params = FieldParams::new(params.p(), n - b)?;
        let mut lo = vec![0u32; (lo_size * lo_size) as usize];
        for x in 0..lo_size as u32 {
            for y in 0..lo_size as u32 {
                lo[(x as u64 * lo_size + y as u64) as usize] = lo_params.add_indices(x, y);
            }
        }
        let mut hi = vec![0u32; (hi_size * hi_size) as usize];
        for x in 0..hi_size as u32 {
            for y in 0..hi_size as u32 {
                hi[(x as u64 * hi_size + y as u64) as usize] =
                    hi_params.add_indices(x, y) * lo_size as u32;
            }
        }
        Ok(AddTable::Split {
            lo_size: lo_size as u32,
            hi_size: hi_size as u32,
            lo,
            hi,
        })
    }

    /// Canonical index of the coordinate-wise sum.
    #[inline]
    pub fn add(&self, x: u32, y: u32) -> u32 {
        match self {
            AddTable::Xor => x ^ y,
            AddTable::Split {
                lo_size,
                hi_size,
                lo,
                hi,
            } => {
                let m = *lo_size;
                let (xl, xh) = (x % m, x / m);
                let (yl, yh) = (y % m, y / m);
                lo[(xl * m + yl) as usize] + hi[(xh * hi_size + yh) as usize]
            }
        }
    }
}
