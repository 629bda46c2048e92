//! Systems of linear forms, their Cauchy-Schwarz complexity, and exact
//! counting averages.
//!
//! A system is a tuple of nonzero forms L_1..L_m in variables y_1..y_l
//! over F_p; applied to points it sends (x_1..x_l) in (F_p^n)^l to
//! L_i(x) = sum_j c_{ij} x_j. The counting average of a function f is
//!
//! ```text
//! avg(f) = E_{x_1..x_l} prod_i f(L_i(x))
//! ```
//!
//! and the Cauchy-Schwarz complexity s of the system controls how well
//! Gowers norms govern these averages: replacing f by g moves the average
//! by at most m * ||f - g||_{U^{s+1}} for 1-bounded functions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::AddTable;
use crate::function::{kahan_sum, FiniteFunction};
use crate::gowers::gowers_norm_exact_complex;
use crate::linalg::span_contains;
use num_complex::Complex64;

/// Cap on the number of forms in a system (the complexity search is a
/// backtracking partition search).
pub const MAX_FORMS: usize = 16;

/// Cap on the number of variable tuples one counting average may visit.
pub const MAX_COUNT_TUPLES: u128 = 1 << 26;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LinearFormSystem {
    p: u8,
    num_vars: usize,
    forms: Vec<Vec<u8>>,
}

impl LinearFormSystem {
    /// Builds a system from coefficient rows (one row per form).
    pub fn new(p: u8, forms: Vec<Vec<u8>>) -> Result<Self> {
        crate::field::Fp::new(p)?;
        if forms.is_empty() {
            return Err(Error::dim("a system needs at least one form".to_string()));
        }
        if forms.len() > MAX_FORMS {
            return Err(Error::capacity("linear forms", forms.len() as u128, MAX_FORMS as u128));
        }
        let num_vars = forms[0].len();
        if num_vars == 0 {
            return Err(Error::dim("forms need at least one variable".to_string()));
        }
        for (i, form) in forms.iter().enumerate() {
            if form.len() != num_vars {
                return Err(Error::dim(format!(
                    "form {i} has {} coefficients, expected {num_vars}",
                    form.len()
                )));
            }
            if let Some(&c) = form.iter().find(|&&c| c >= p) {
                return Err(Error::Range(format!("coefficient {c} out of range in form {i}")));
            }
            if form.iter().all(|&c| c == 0) {
                return Err(Error::Range(format!("form {i} is identically zero")));
            }
        }
        Ok(LinearFormSystem { p, num_vars, forms })
    }

    /// The forms {x + sum t_i y_i : t in F_p^k} parametrizing a random
    /// affine k-dimensional subspace; k = 1 gives the affine-line system.
    pub fn affine_subspace(p: u8, k: usize) -> Result<Self> {
        let count = (p as u128).pow(k as u32);
        if count > MAX_FORMS as u128 {
            return Err(Error::capacity("linear forms", count, MAX_FORMS as u128));
        }
        let mut forms = Vec::new();
        let mut t = vec![0u8; k];
        loop {
            let mut form = vec![1u8];
            form.extend_from_slice(&t);
            forms.push(form);
            let mut i = 0;
            loop {
                if i == k {
                    return LinearFormSystem::new(p, forms);
                }
                t[i] += 1;
                if t[i] == p {
                    t[i] = 0;
                    i += 1;
                } else {
                    break;
                }
            }
        }
    }

    pub fn affine_line(p: u8) -> Result<Self> {
        LinearFormSystem::affine_subspace(p, 1)
    }

    #[inline]
    pub fn p(&self) -> u8 {
        self.p
    }

    #[inline]
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    #[inline]
    pub fn num_forms(&self) -> usize {
        self.forms.len()
    }

    pub fn forms(&self) -> &[Vec<u8>] {
        &self.forms
    }

    /// Cauchy-Schwarz complexity: the smallest s such that for every i the
    /// remaining forms split into s+1 classes none of whose spans contains
    /// L_i. Returns None when no finite s works (some other form is a
    /// scalar multiple of L_i, so even singleton classes fail).
    pub fn cs_complexity(&self) -> Option<usize> {
        let fp = crate::field::Fp::new(self.p).expect("validated at construction");
        let mut worst = 0usize;
        for i in 0..self.forms.len() {
            let others: Vec<&[u8]> = self
                .forms
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, f)| f.as_slice())
                .collect();
            if others.is_empty() {
                continue;
            }
            let target = &self.forms[i];
            let mut found = None;
            for classes in 1..=others.len() {
                let mut assignment = vec![Vec::new(); classes];
                if assign(fp, target, &others, 0, &mut assignment, 0) {
                    found = Some(classes - 1);
                    break;
                }
            }
            match found {
                Some(s) => worst = worst.max(s),
                None => return None,
            }
        }
        Some(worst)
    }

    /// Exact counting average E prod_i f(L_i(x)) over all variable tuples.
    pub fn count_average(&self, f: &FiniteFunction) -> Result<Complex64> {
        let params = f.params();
        if params.p() != self.p {
            return Err(Error::dim(format!(
                "system over F_{} applied to a function over F_{}",
                self.p,
                params.p()
            )));
        }
        let size = params.size() as u128;
        let tuples = size
            .checked_pow(self.num_vars as u32)
            .unwrap_or(u128::MAX);
        if tuples > MAX_COUNT_TUPLES {
            return Err(Error::capacity("counting tuples", tuples, MAX_COUNT_TUPLES));
        }
        let add = AddTable::new(params)?;
        // Scalar-multiplication tables: mult[c][x] = index of c * x.
        let n = params.size() as u32;
        let mult: Vec<Vec<u32>> = (0..self.p)
            .map(|c| {
                (0..n)
                    .map(|x| {
                        let coords: Vec<u8> = params
                            .coords_of(x)
                            .iter()
                            .map(|&v| ((v as u16 * c as u16) % self.p as u16) as u8)
                            .collect();
                        params.index_of(&coords)
                    })
                    .collect()
            })
            .collect();
        let table = f.complex_table();
        let mut re = Vec::with_capacity(tuples as usize);
        let mut im = Vec::with_capacity(tuples as usize);
        let mut xs = vec![0u32; self.num_vars];
        loop {
            let mut prod = Complex64::new(1.0, 0.0);
            for form in &self.forms {
                let mut at = 0u32;
                for (&c, &x) in form.iter().zip(&xs) {
                    if c != 0 {
                        at = add.add(at, mult[c as usize][x as usize]);
                    }
                }
                prod *= table[at as usize];
            }
            re.push(prod.re);
            im.push(prod.im);
            // odometer over variable tuples
            let mut i = 0;
            loop {
                if i == self.num_vars {
                    let total = tuples as f64;
                    return Ok(Complex64::new(
                        kahan_sum(re.into_iter()) / total,
                        kahan_sum(im.into_iter()) / total,
                    ));
                }
                xs[i] += 1;
                if xs[i] == n {
                    xs[i] = 0;
                    i += 1;
                } else {
                    break;
                }
            }
        }
    }
}

/// Backtracking partition search: place each remaining form into one of the
/// classes so that no class span captures the target. Classes are opened in
/// order (a form may start class c only when classes 0..c are nonempty),
/// which quotients out class relabelling.
fn assign<'a>(
    fp: crate::field::Fp,
    target: &[u8],
    others: &[&'a [u8]],
    next: usize,
    classes: &mut Vec<Vec<&'a [u8]>>,
    used: usize,
) -> bool {
    if next == others.len() {
        // all classes that were opened stay target-free by construction
        return used == classes.len() || !classes[used..].iter().any(|c| !c.is_empty());
    }
    let form = others[next];
    let open_limit = (used + 1).min(classes.len());
    for c in 0..open_limit {
        classes[c].push(form);
        let ok = !span_contains(fp, &classes[c], target);
        if ok {
            let used_now = used.max(c + 1);
            if assign(fp, target, others, next + 1, classes, used_now) {
                classes[c].pop();
                return true;
            }
        }
        classes[c].pop();
    }
    false
}

/// Measured check of the counting bound
/// |avg(f) - avg(g)| <= m * ||f - g||_{U^{s+1}}.
#[derive(Debug, Clone, Serialize)]
pub struct CountingCheck {
    pub complexity: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub norm_used: f64,
    pub holds: bool,
}

/// Evaluates both counting averages exactly and compares their gap with
/// the Gowers-norm bound at the system's own complexity.
pub fn counting_lemma_check(
    system: &LinearFormSystem,
    f: &FiniteFunction,
    g: &FiniteFunction,
) -> Result<CountingCheck> {
    let s = system.cs_complexity().ok_or_else(|| {
        Error::Config("system has no finite Cauchy-Schwarz complexity".to_string())
    })?;
    let af = system.count_average(f)?;
    let ag = system.count_average(g)?;
    let lhs = (af - ag).norm();
    let diff: Vec<Complex64> = f
        .complex_table()
        .into_iter()
        .zip(g.complex_table())
        .map(|(a, b)| a - b)
        .collect();
    let norm = gowers_norm_exact_complex(f.params(), &diff, s + 1)?;
    let rhs = system.num_forms() as f64 * norm;
    Ok(CountingCheck {
        complexity: s,
        lhs,
        rhs,
        norm_used: norm,
        holds: lhs <= rhs + 1e-9,
    })
}
