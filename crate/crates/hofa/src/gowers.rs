//! Uniformity norms of orders d >= 1.
//!
//! The order-d norm of f: F_p^n -> C is
//!
//! ```text
//! ||f||_{U^d} = | E_{x, y_1..y_d} D_{y_1} D_{y_2} ... D_{y_d} f(x) |^{1/2^d}
//! ```
//!
//! where D_h f(x) = f(x+h) * conj(f(x)) is the multiplicative derivative.
//! For d = 1 this is |E f|, a seminorm; for d >= 2 it is a norm.
//!
//! Three routes are provided: an exact recursive evaluation that peels one
//! derivative per level (O(p^{nd}) work), a naive direct enumeration of the
//! defining average used as a cross-check on small instances, and an
//! unbiased Monte Carlo estimator of the 2^d-fold product average.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{AddTable, FieldParams, Point};
use crate::function::{kahan_sum, FiniteFunction, RangeKind};
use crate::rng::DetRng;

/// How a [`GowersEstimate`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMode {
    Exact,
    MonteCarlo,
}

/// A computed uniformity norm together with its provenance.
#[derive(Debug, Clone, Serialize)]
pub struct GowersEstimate {
    /// Norm order d.
    pub order: usize,
    /// The norm value, i.e. max(pre_root_mean, 0)^{1/2^d}.
    pub value: f64,
    /// The 2^d-fold product average before the root. Monte Carlo runs can
    /// land slightly negative; exact runs are nonnegative up to rounding.
    pub pre_root_mean: f64,
    /// Standard error of `pre_root_mean` (0 for exact computation).
    pub std_error: f64,
    /// True when a negative pre-root mean was clamped to zero.
    pub clamped: bool,
    pub mode: EstimateMode,
    /// Number of Monte Carlo samples (0 for exact computation).
    pub samples: u64,
}

impl GowersEstimate {
    fn from_mean(order: usize, mean: f64, std_error: f64, mode: EstimateMode, samples: u64) -> Self {
        let clamped = mean < 0.0;
        let base = if clamped { 0.0 } else { mean };
        GowersEstimate {
            order,
            value: base.powf(1.0 / (1u64 << order) as f64),
            pre_root_mean: mean,
            std_error,
            clamped,
            mode,
            samples,
        }
    }
}

/// Cap on the operation count of an exact norm evaluation (roughly p^{nd}).
const MAX_EXACT_OPS: u128 = 1 << 32;

fn check_exact_capacity(params: &FieldParams, d: usize) -> Result<()> {
    let ops = (params.size() as u128)
        .checked_pow(d as u32)
        .unwrap_or(u128::MAX);
    if ops > MAX_EXACT_OPS {
        return Err(Error::capacity(
            format!("exact order-{d} norm on {} points", params.size()),
            ops,
            MAX_EXACT_OPS,
        ));
    }
    Ok(())
}

/// Multiplicative derivative D_h f(x) = f(x+h) * conj(f(x)) of a
/// complex-valued (or numerically embedded) function.
pub fn mult_derivative(f: &FiniteFunction, h: &Point) -> Result<FiniteFunction> {
    let params = *f.params();
    if h.coords.len() != params.n() {
        return Err(Error::dim(format!(
            "direction has {} coordinates, space has dimension {}",
            h.coords.len(),
            params.n()
        )));
    }
    let values = f.complex_table();
    let table = derive_complex_table(&params, &values, h.index)?;
    FiniteFunction::new_complex(params, table)
}

fn derive_complex_table(
    params: &FieldParams,
    values: &[Complex64],
    h: u32,
) -> Result<Vec<Complex64>> {
    let add = AddTable::new(params)?;
    Ok((0..values.len() as u32)
        .map(|x| values[add.add(x, h) as usize] * values[x as usize].conj())
        .collect())
}

fn inner_real(add: &AddTable, g: &[f64], d: usize, bufs: &mut [Vec<f64>]) -> f64 {
    if d == 1 {
        let m = kahan_sum(g.iter().copied()) / g.len() as f64;
        return m * m;
    }
    let (head, rest) = bufs.split_first_mut().expect("buffer per recursion level");
    let n = g.len() as u32;
    let mut acc = 0.0;
    let mut comp = 0.0;
    for y in 0..n {
        for x in 0..n {
            head[x as usize] = g[add.add(x, y) as usize] * g[x as usize];
        }
        let v = inner_real(add, head, d - 1, rest);
        let t = v - comp;
        let s = acc + t;
        comp = (s - acc) - t;
        acc = s;
    }
    acc / n as f64
}

fn inner_complex(add: &AddTable, g: &[Complex64], d: usize, bufs: &mut [Vec<Complex64>]) -> f64 {
    if d == 1 {
        let mut sum = Complex64::new(0.0, 0.0);
        for v in g {
            sum += v;
        }
        return (sum / g.len() as f64).norm_sqr();
    }
    let (head, rest) = bufs.split_first_mut().expect("buffer per recursion level");
    let n = g.len() as u32;
    let mut acc = 0.0;
    let mut comp = 0.0;
    for y in 0..n {
        for x in 0..n {
            head[x as usize] = g[add.add(x, y) as usize] * g[x as usize].conj();
        }
        let v = inner_complex(add, head, d - 1, rest);
        let t = v - comp;
        let s = acc + t;
        comp = (s - acc) - t;
        acc = s;
    }
    acc / n as f64
}

/// Exact order-d norm of a real table via the level-by-level recursion,
/// parallelized over the outermost derivative direction.
pub fn gowers_norm_exact_real(params: &FieldParams, values: &[f64], d: usize) -> Result<f64> {
    let mean = pre_root_mean_real(params, values, d)?;
    Ok(GowersEstimate::from_mean(d, mean, 0.0, EstimateMode::Exact, 0).value)
}

/// Exact order-d norm of a complex table.
pub fn gowers_norm_exact_complex(
    params: &FieldParams,
    values: &[Complex64],
    d: usize,
) -> Result<f64> {
    let mean = pre_root_mean_complex(params, values, d)?;
    Ok(GowersEstimate::from_mean(d, mean, 0.0, EstimateMode::Exact, 0).value)
}

/// Exact order-d norm of a function. Finite and real-valued functions take
/// the real route; complex functions the complex route.
pub fn gowers_norm_exact(f: &FiniteFunction, d: usize) -> Result<GowersEstimate> {
    let params = *f.params();
    let mean = match f.range() {
        RangeKind::ComplexDisc => {
            let values = f.complex_table();
            pre_root_mean_complex(&params, &values, d)?
        }
        _ => {
            let values = f.real_table()?;
            pre_root_mean_real(&params, &values, d)?
        }
    };
    Ok(GowersEstimate::from_mean(d, mean, 0.0, EstimateMode::Exact, 0))
}

fn pre_root_mean_real(params: &FieldParams, values: &[f64], d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidOrder(0));
    }
    check_exact_capacity(params, d)?;
    let add = AddTable::new(params)?;
    if d == 1 {
        let m = kahan_sum(values.iter().copied()) / values.len() as f64;
        return Ok(m * m);
    }
    let n = values.len() as u32;
    let partials: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|y| {
            let mut bufs: Vec<Vec<f64>> = (0..d - 1).map(|_| vec![0.0; n as usize]).collect();
            let (head, rest) = bufs.split_first_mut().unwrap();
            for x in 0..n {
                head[x as usize] = values[add.add(x, y) as usize] * values[x as usize];
            }
            inner_real(&add, head, d - 1, rest)
        })
        .collect();
    Ok(kahan_sum(partials.into_iter()) / n as f64)
}

fn pre_root_mean_complex(params: &FieldParams, values: &[Complex64], d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidOrder(0));
    }
    check_exact_capacity(params, d)?;
    let add = AddTable::new(params)?;
    if d == 1 {
        let mut sum = Complex64::new(0.0, 0.0);
        for v in values {
            sum += v;
        }
        return Ok((sum / values.len() as f64).norm_sqr());
    }
    let n = values.len() as u32;
    let partials: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|y| {
            let mut bufs: Vec<Vec<Complex64>> = (0..d - 1)
                .map(|_| vec![Complex64::new(0.0, 0.0); n as usize])
                .collect();
            let (head, rest) = bufs.split_first_mut().unwrap();
            for x in 0..n {
                head[x as usize] = values[add.add(x, y) as usize] * values[x as usize].conj();
            }
            inner_complex(&add, head, d - 1, rest)
        })
        .collect();
    Ok(kahan_sum(partials.into_iter()) / n as f64)
}

/// Direct enumeration of the defining average, for cross-checking the
/// recursion on small instances: iterates every (x, y_1..y_d) tuple and the
/// full 2^d-fold product.
pub fn gowers_norm_direct(f: &FiniteFunction, d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidOrder(0));
    }
    let params = *f.params();
    let size = params.size() as u128;
    let tuples = size.checked_pow(d as u32 + 1).unwrap_or(u128::MAX);
    let ops = tuples.saturating_mul(1 << d);
    if ops > MAX_EXACT_OPS {
        return Err(Error::capacity("direct norm enumeration", ops, MAX_EXACT_OPS));
    }
    let values = f.complex_table();
    let add = AddTable::new(&params)?;
    let n = params.size() as u32;
    let mut dirs = vec![0u32; d];
    let mut acc = 0.0;
    let mut comp = 0.0;
    loop {
        for x in 0..n {
            // Product over all subsets of the direction set.
            let mut prod = Complex64::new(1.0, 0.0);
            for mask in 0..(1u32 << d) {
                let mut pt = x;
                for (i, &y) in dirs.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        pt = add.add(pt, y);
                    }
                }
                let v = values[pt as usize];
                prod *= if mask.count_ones() % 2 == 1 { v.conj() } else { v };
            }
            let t = prod.re - comp;
            let s = acc + t;
            comp = (s - acc) - t;
            acc = s;
        }
        // Odometer over directions.
        let mut i = 0;
        loop {
            if i == d {
                let mean = acc / (size.pow(d as u32 + 1)) as f64;
                return Ok(if mean < 0.0 { 0.0 } else { mean }.powf(1.0 / (1u64 << d) as f64));
            }
            dirs[i] += 1;
            if dirs[i] == n {
                dirs[i] = 0;
                i += 1;
            } else {
                break;
            }
        }
    }
}

/// Unbiased Monte Carlo estimate of the order-d norm.
///
/// Each sample draws (x, y_1..y_d) uniformly (in that order, from the
/// per-sample stream `DetRng::for_task(seed, sample_index)`) and evaluates
/// the 2^d-fold derivative product. The estimate is thread-count
/// independent.
pub fn gowers_norm_estimate(
    f: &FiniteFunction,
    d: usize,
    samples: u64,
    seed: u64,
) -> Result<GowersEstimate> {
    if d == 0 {
        return Err(Error::InvalidOrder(0));
    }
    if samples < 2 {
        return Err(Error::Config("need at least 2 samples".to_string()));
    }
    let params = *f.params();
    let complex = matches!(f.range(), RangeKind::ComplexDisc);
    let real_values = if complex { Vec::new() } else { f.real_table()? };
    let complex_values = if complex { f.complex_table() } else { Vec::new() };
    let n = params.size() as u64;
    let add = AddTable::new(&params)?;

    let sample_one = |idx: u64| -> f64 {
        let mut rng = DetRng::for_task(seed, idx);
        let x = rng.below(n) as u32;
        let dirs: Vec<u32> = (0..d).map(|_| rng.below(n) as u32).collect();
        let mut re = 1.0f64;
        let mut prod = Complex64::new(1.0, 0.0);
        for mask in 0..(1u32 << d) {
            let mut pt = x;
            for (i, &y) in dirs.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    pt = add.add(pt, y);
                }
            }
            if complex {
                let v = complex_values[pt as usize];
                prod *= if mask.count_ones() % 2 == 1 { v.conj() } else { v };
            } else {
                re *= real_values[pt as usize];
            }
        }
        if complex {
            prod.re
        } else {
            re
        }
    };

    let draws: Vec<f64> = (0..samples).into_par_iter().map(sample_one).collect();
    let mean = kahan_sum(draws.iter().copied()) / samples as f64;
    let var = kahan_sum(draws.iter().map(|v| {
        let e = v - mean;
        e * e
    })) / (samples - 1) as f64;
    let std_error = (var / samples as f64).sqrt();
    Ok(GowersEstimate::from_mean(
        d,
        mean,
        std_error,
        EstimateMode::MonteCarlo,
        samples,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::u2_norm_fourier;

    fn params(p: u8, n: usize) -> FieldParams {
        FieldParams::new(p, n).unwrap()
    }

    #[test]
    fn order_zero_is_rejected() {
        let pr = params(2, 2);
        let f = FiniteFunction::constant_real(pr, 1.0).unwrap();
        assert!(matches!(gowers_norm_exact(&f, 0), Err(Error::InvalidOrder(0))));
    }

    #[test]
    fn u1_is_mean_magnitude_seminorm() {
        // Balanced +1/-1 function has U^1 = 0 but is nonzero.
        let pr = params(2, 3);
        let values: Vec<f64> = (0..8).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let f = FiniteFunction::new_real(pr, true, values).unwrap();
        let est = gowers_norm_exact(&f, 1).unwrap();
        assert!(est.value < 1e-12);
    }

    #[test]
    fn point_indicator_u2() {
        // 1_{x=0} on F_2^2 has U^2 norm (4 * (1/4)^4)^{1/4} = 2^{-3/2}.
        let pr = params(2, 2);
        let mut values = vec![0.0; 4];
        values[0] = 1.0;
        let f = FiniteFunction::new_real(pr, false, values).unwrap();
        let est = gowers_norm_exact(&f, 2).unwrap();
        assert!((est.value - 2f64.powf(-1.5)).abs() < 1e-12, "{}", est.value);
    }

    #[test]
    fn mult_derivative_of_character() {
        // f(x) = (-1)^{x_1} has D_{e_1} f = -1 everywhere.
        let pr = params(2, 2);
        let values: Vec<u8> = (0..4).map(|i| (i & 1) as u8).collect();
        let f = FiniteFunction::new_finite(pr, 2, values).unwrap();
        let lifted = FiniteFunction::new_complex(pr, f.character_table().unwrap()).unwrap();
        let h = Point::from_coords(&pr, vec![1, 0]).unwrap();
        let df = mult_derivative(&lifted, &h).unwrap();
        for v in df.complex_table() {
            assert!((v - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn recursion_matches_direct_enumeration() {
        for &(p, n, d) in &[(2u8, 3usize, 2usize), (2, 3, 3), (3, 2, 2), (5, 1, 2), (2, 2, 4)] {
            let pr = params(p, n);
            let mut rng = DetRng::new((p as u64) << 8 | (n as u64) << 4 | d as u64);
            let f = FiniteFunction::random_signed(pr, &mut rng).unwrap();
            let rec = gowers_norm_exact(&f, d).unwrap().value;
            let dir = gowers_norm_direct(&f, d).unwrap();
            assert!((rec - dir).abs() < 1e-10, "p={p} n={n} d={d}: {rec} vs {dir}");
        }
    }

    #[test]
    fn recursion_matches_direct_enumeration_complex() {
        let pr = params(3, 2);
        let mut rng = DetRng::new(99);
        let values: Vec<Complex64> = (0..pr.size())
            .map(|_| Complex64::from_polar(rng.unit().sqrt(), rng.unit() * std::f64::consts::TAU))
            .collect();
        let f = FiniteFunction::new_complex(pr, values).unwrap();
        for d in 1..=3 {
            let rec = gowers_norm_exact(&f, d).unwrap().value;
            let dir = gowers_norm_direct(&f, d).unwrap();
            assert!((rec - dir).abs() < 1e-10, "d={d}: {rec} vs {dir}");
        }
    }

    #[test]
    fn u2_matches_fourier_identity() {
        for seed in 0..20 {
            let pr = params(2, 6);
            let mut rng = DetRng::new(seed);
            let f = FiniteFunction::random_signed(pr, &mut rng).unwrap();
            let rec = gowers_norm_exact(&f, 2).unwrap().value;
            let four = u2_norm_fourier(&pr, &f.complex_table());
            assert!((rec - four).abs() < 1e-10, "seed {seed}: {rec} vs {four}");
        }
    }

    #[test]
    fn norm_is_monotone_in_order() {
        for seed in 0..10 {
            let pr = params(2, 4);
            let mut rng = DetRng::new(1000 + seed);
            let f = FiniteFunction::random_signed(pr, &mut rng).unwrap();
            let u1 = gowers_norm_exact(&f, 1).unwrap().value;
            let u2 = gowers_norm_exact(&f, 2).unwrap().value;
            let u3 = gowers_norm_exact(&f, 3).unwrap().value;
            assert!(u1 <= u2 + 1e-12 && u2 <= u3 + 1e-12, "{u1} {u2} {u3}");
        }
    }

    #[test]
    fn l1_bound_on_norm() {
        // ||f||_{U^d} <= ||f||_1^{1/2^d} for 1-bounded f.
        for seed in 0..10 {
            let pr = params(2, 4);
            let mut rng = DetRng::new(2000 + seed);
            let f = FiniteFunction::random_signed(pr, &mut rng).unwrap();
            let l1 = crate::function::l1_norm(&f.real_table().unwrap());
            for d in 1..=3 {
                let u = gowers_norm_exact(&f, d).unwrap().value;
                let bound = l1.powf(1.0 / (1u64 << d) as f64);
                assert!(u <= bound + 1e-10, "d={d}: {u} > {bound}");
            }
        }
    }

    #[test]
    fn estimate_tracks_exact() {
        let pr = params(2, 6);
        let mut rng = DetRng::new(7);
        let f = FiniteFunction::random_signed(pr, &mut rng).unwrap();
        let exact = gowers_norm_exact(&f, 2).unwrap();
        let est = gowers_norm_estimate(&f, 2, 200_000, 123).unwrap();
        let dev = (est.pre_root_mean - exact.pre_root_mean).abs();
        assert!(
            dev <= 4.0 * est.std_error,
            "deviation {dev} exceeds 4 x std error {}",
            est.std_error
        );
    }

    #[test]
    fn estimate_is_seed_deterministic() {
        let pr = params(2, 5);
        let mut rng = DetRng::new(3);
        let f = FiniteFunction::random_unit(pr, &mut rng).unwrap();
        let a = gowers_norm_estimate(&f, 3, 5_000, 42).unwrap();
        let b = gowers_norm_estimate(&f, 3, 5_000, 42).unwrap();
        assert_eq!(a.pre_root_mean.to_bits(), b.pre_root_mean.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }

    #[test]
    fn exact_capacity_guard_fires() {
        let pr = params(2, 12);
        let f = FiniteFunction::constant_real(pr, 0.5).unwrap();
        assert!(matches!(
            gowers_norm_exact(&f, 3),
            Err(Error::CapacityExceeded { .. })
        ));
    }
}
