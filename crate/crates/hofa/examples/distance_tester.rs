//! Estimating distance to a property from random subspace restrictions.
//!
//! Run with: cargo run --example distance_tester

use hofa::field::FieldParams;
use hofa::function::FiniteFunction;
use hofa::property::{PropertyOracle, ReedMullerOracle};
use hofa::rng::DetRng;
use hofa::tester::{distance_tester, TesterConfig};

fn main() -> hofa::Result<()> {
    let pr = FieldParams::new(2, 8)?;
    let oracle = ReedMullerOracle::new(FieldParams::new(2, 5)?, 1)?;
    let config = TesterConfig {
        delta: 0.05,
        epsilon: 0.2,
        m: 5,
        trials: 100,
        seed: 0,
    };

    // A degree-1 member with 3% of its points flipped.
    let mut values: Vec<u8> = pr.points().map(|pt| pt.coords[2] ^ pt.coords[5]).collect();
    let mut rng = DetRng::for_task(9, 0);
    for _ in 0..7 {
        let i = rng.below(pr.size() as u64) as usize;
        values[i] ^= 1;
    }
    let near = FiniteFunction::new_finite(pr, 2, values)?;

    let report = distance_tester(&near, &oracle, &config)?;
    println!(
        "noisy member: mean restricted distance {:.4}, accept fraction {:.2}, verdict {}",
        report.mean_distance,
        report.accept_fraction,
        if report.accepted { "accept" } else { "reject" }
    );

    // A random function sits far from every low-degree member.
    let mut rng = DetRng::for_task(9, 1);
    let far = FiniteFunction::random_finite(pr, 2, &mut rng)?;
    let exact = ReedMullerOracle::new(pr, 1)?.distance(&far)?;
    let report = distance_tester(&far, &oracle, &config)?;
    println!(
        "random function: true distance {exact:.4}, mean restricted {:.4}, verdict {}",
        report.mean_distance,
        if report.accepted { "accept" } else { "reject" }
    );
    Ok(())
}
