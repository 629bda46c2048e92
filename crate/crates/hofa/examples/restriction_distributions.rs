//! The law of a random k-dimensional restriction, exactly and by sampling.
//!
//! Run with: cargo run --example restriction_distributions

use hofa::field::FieldParams;
use hofa::function::FiniteFunction;
use hofa::mu::{mu_estimate, mu_exact, mu_lipschitz_check};
use hofa::poly::NonClassicalPoly;
use hofa::rng::DetRng;

fn main() -> hofa::Result<()> {
    let pr = FieldParams::new(2, 5)?;

    // Restricting the linear function x1 to a random line gives either a
    // constant pattern or an affine one; the law over outcomes is exact.
    let linear = NonClassicalPoly::from_terms(pr, &[(vec![1, 0, 0, 0, 0], 0, 1)])?;
    let values: Vec<u8> = (0..pr.size() as u32)
        .map(|i| linear.value_table().num(i) as u8)
        .collect();
    let f = FiniteFunction::new_finite(pr, 2, values)?;

    let exact = mu_exact(&f, 1)?;
    println!("restriction law of x1 to random lines (outcome = values at the 2 points):");
    for (key, prob) in &exact.probs {
        println!("  pattern {:?}: {prob:.6}", exact.unpack(*key));
    }

    // A sampled estimate converges to the same law.
    let estimate = mu_estimate(&f, 1, 20_000, 1)?;
    println!(
        "exact vs 20k-sample estimate, statistical distance {:.5}",
        exact.stat_distance(&estimate)?
    );

    // Functions close in uniformity norm have close restriction laws.
    let mut rng = DetRng::for_task(2, 0);
    let g = FiniteFunction::random_unit(pr, &mut rng)?;
    let h = FiniteFunction::random_unit(pr, &mut rng)?;
    let rep = mu_lipschitz_check(&g, &h, 1)?;
    println!(
        "Lipschitz check on random pair: stat distance {:.4} <= bound {:.4} ({})",
        rep.stat_distance, rep.total_bound, rep.holds
    );
    Ok(())
}
