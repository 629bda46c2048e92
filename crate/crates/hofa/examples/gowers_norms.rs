//! Uniformity norms of structured and random functions.
//!
//! Run with: cargo run --example gowers_norms

use hofa::field::FieldParams;
use hofa::fourier::u2_norm_fourier;
use hofa::function::FiniteFunction;
use hofa::gowers::{gowers_norm_exact_complex, gowers_norm_exact_real};
use hofa::poly::NonClassicalPoly;
use hofa::rng::DetRng;

fn main() -> hofa::Result<()> {
    let pr = FieldParams::new(2, 6)?;

    // A quadratic phase: highly structured, so its order-3 norm is 1 while
    // the order-2 norm is strictly smaller.
    let quad = NonClassicalPoly::from_terms(pr, &[(vec![1, 1, 0, 0, 0, 0], 0, 1)])?;
    let phase = quad.value_table().unit_table();
    println!("quadratic phase e(x1 x2 / 2) on F_2^6:");
    for d in 1..=4 {
        let norm = gowers_norm_exact_complex(&pr, &phase, d)?;
        println!("  U^{d} = {norm:.6}");
    }

    // A random +-1 function: all its norms are small.
    let mut rng = DetRng::for_task(0, 0);
    let noise = FiniteFunction::random_signed(pr, &mut rng)?;
    let table = noise.real_table()?;
    println!("random [-1,1] function:");
    for d in 1..=4 {
        let norm = gowers_norm_exact_real(&pr, &table, d)?;
        println!("  U^{d} = {norm:.6}");
    }

    // At order 2 the norm is a spectral quantity: the fourth moment of the
    // character coefficients.
    let complex = noise.complex_table();
    let direct = gowers_norm_exact_complex(&pr, &complex, 2)?;
    let spectral = u2_norm_fourier(&pr, &complex);
    println!("order-2 agreement: direct {direct:.12} vs spectral {spectral:.12}");
    Ok(())
}
