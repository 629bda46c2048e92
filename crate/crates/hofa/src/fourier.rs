//! Character (Fourier) transform on F_p^n.
//!
//! The transform is normalized as an expectation over the input side:
//! fhat(a) = E_x f(x) e^{-2 pi i <a,x>/p}, so Parseval reads
//! sum_a |fhat(a)|^2 = E_x |f(x)|^2. Computed by applying the p-point DFT
//! along each axis, O(n p^{n+1}) operations overall.

use num_complex::Complex64;

use crate::field::FieldParams;

/// Transform of a dense complex table in canonical point order.
pub fn character_transform(params: &FieldParams, values: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(values.len(), params.size());
    let p = params.p() as usize;
    let size = params.size();
    // p-point DFT matrix with the e^{-2 pi i jk/p} kernel.
    let mut dft = vec![Complex64::new(0.0, 0.0); p * p];
    for j in 0..p {
        for k in 0..p {
            let angle = -2.0 * std::f64::consts::PI * ((j * k) % p) as f64 / p as f64;
            dft[j * p + k] = Complex64::from_polar(1.0, angle);
        }
    }
    let mut out = values.to_vec();
    let mut scratch = vec![Complex64::new(0.0, 0.0); p];
    let mut stride = 1usize;
    for _axis in 0..params.n() {
        let block = stride * p;
        for block_start in (0..size).step_by(block) {
            for off in 0..stride {
                let base = block_start + off;
                for (t, s) in scratch.iter_mut().enumerate() {
                    *s = out[base + t * stride];
                }
                for j in 0..p {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (k, s) in scratch.iter().enumerate() {
                        acc += dft[j * p + k] * s;
                    }
                    out[base + j * stride] = acc;
                }
            }
        }
        stride = block;
    }
    let norm = 1.0 / size as f64;
    for v in out.iter_mut() {
        *v *= norm;
    }
    out
}

/// Inverse transform: recovers f from fhat exactly (up to rounding).
pub fn character_inverse(params: &FieldParams, coeffs: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(coeffs.len(), params.size());
    // Inverse kernel is the conjugate, with the dual normalization.
    let conj: Vec<Complex64> = coeffs.iter().map(|c| c.conj()).collect();
    let back = character_transform(params, &conj);
    back.iter()
        .map(|v| v.conj() * params.size() as f64)
        .collect()
}

/// Degree-2 uniformity norm via the Fourier route:
/// (sum_a |fhat(a)|^4)^{1/4}.
pub fn u2_norm_fourier(params: &FieldParams, values: &[Complex64]) -> f64 {
    let coeffs = character_transform(params, values);
    let sum: f64 = crate::function::kahan_sum(coeffs.iter().map(|c| {
        let m = c.norm_sqr();
        m * m
    }));
    sum.powf(0.25)
}
