//! Splitting a function into structure plus uniform noise by energy
//! increment.
//!
//! Run with: cargo run --example energy_decomposition

use hofa::decompose::{decompose, refinement_check, DecomposeConfig};
use hofa::field::FieldParams;
use hofa::function::FiniteFunction;
use hofa::poly::{enumerate_polys, NonClassicalPoly};
use hofa::rng::DetRng;

fn main() -> hofa::Result<()> {
    let pr = FieldParams::new(2, 6)?;

    // Plant a linear structure and add pointwise noise.
    let plant = NonClassicalPoly::from_terms(pr, &[(vec![1, 0, 0, 1, 0, 0], 0, 1)])?;
    let table = plant.value_table();
    let mut rng = DetRng::for_task(5, 0);
    let values: Vec<f64> = (0..pr.size() as u32)
        .map(|i| {
            let base = if table.num(i) == 0 { 0.15 } else { 0.85 };
            (base + 0.1 * (rng.unit() - 0.5)).clamp(0.0, 1.0)
        })
        .collect();
    let f = FiniteFunction::new_real(pr, false, values)?;

    let config = DecomposeConfig::for_degree(1, 0.1, 2);
    let dec = decompose(&f, &config, None)?;
    println!(
        "f = f1 + f2 + f3 with ||f2||_2 = {:.4}, ||f3||_U^2 = {:.4} (converged: {})",
        dec.f2_l2, dec.f3_u, dec.converged
    );
    for (i, round) in dec.rounds.iter().enumerate() {
        println!(
            "  round {i}: complexity {} energy {:.4} residual {:.4} adjoined corr {:?}",
            round.complexity, round.energy, round.residual_norm, round.adjoined_correlation
        );
    }
    println!(
        "planted polynomial measurable in the factor: {}",
        dec.factor.measures(&table)
    );

    // Refining the factor moves the projection by at most the certified
    // error budget.
    let extra = enumerate_polys(&pr, 1, 0)?
        .skip(1)
        .find(|p| !dec.factor.measures(&p.value_table()))
        .expect("some linear polynomial is not yet measured");
    let finer = dec.factor.adjoin_poly(extra)?;
    let check = refinement_check(&f, &dec, &finer)?;
    println!(
        "refinement stability: ||E[f|B] - E[f|B']||_1 = {:.5} <= {:.5} ({})",
        check.lhs, check.rhs, check.holds
    );
    Ok(())
}
