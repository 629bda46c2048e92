//! Polynomial factors: atoms, conditional expectation, rank.
//!
//! Run with: cargo run --example factor_atoms

use hofa::factor::{phase_correlation, PolynomialFactor};
use hofa::field::FieldParams;
use hofa::function::FiniteFunction;
use hofa::poly::NonClassicalPoly;
use hofa::rng::DetRng;

fn main() -> hofa::Result<()> {
    let pr = FieldParams::new(2, 5)?;
    let quad = NonClassicalPoly::from_terms(pr, &[(vec![1, 1, 0, 0, 0], 0, 1)])?;
    let lin = NonClassicalPoly::from_terms(pr, &[(vec![0, 0, 0, 1, 0], 0, 1)])?;
    let factor = PolynomialFactor::from_polys(pr, vec![quad, lin])?;

    let stats = factor.atom_stats();
    println!(
        "factor of complexity {} cuts F_2^5 into {} atoms (sizes {}..{}):",
        stats.complexity, stats.nonempty, stats.min_count, stats.max_count
    );
    for (label, count) in &stats.counts {
        println!("  atom {label}: {count} points");
    }
    println!(
        "measure deviation from uniform {:.4}; largest combination bias {:.4}",
        stats.max_abs_deviation,
        factor.rank_proxy(false)?.max_bias
    );

    // Conditional expectation averages within atoms; the residual is
    // uncorrelated with every phase the factor measures.
    let mut rng = DetRng::for_task(3, 0);
    let f = FiniteFunction::random_unit(pr, &mut rng)?;
    let f1 = factor.cond_expectation(&f)?;
    let residual: Vec<f64> = f
        .real_table()?
        .iter()
        .zip(&f1.real_table()?)
        .map(|(a, b)| a - b)
        .collect();
    let f3 = FiniteFunction::new_real(pr, true, residual)?;
    let corr = phase_correlation(&f3, factor.polys()[0].table())?;
    println!("phase correlation of the residual with a measured phase: {corr:.2e}");

    // Measurability: the factor recognizes its own constituents but not an
    // unrelated polynomial.
    let other = NonClassicalPoly::from_terms(pr, &[(vec![0, 0, 1, 0, 0], 0, 1)])?;
    println!(
        "measures its first constituent: {}; measures x3: {}",
        factor.measures(factor.polys()[0].table()),
        factor.measures(&other.value_table())
    );
    Ok(())
}
