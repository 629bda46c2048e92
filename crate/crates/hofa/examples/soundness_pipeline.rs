//! End-to-end soundness run: decompose, restrict, repair, round.
//!
//! Run with: cargo run --example soundness_pipeline

use hofa::field::FieldParams;
use hofa::function::{hamming_distance, FiniteFunction};
use hofa::pipeline::{soundness_pipeline, PipelineConfig};
use hofa::property::ReedMullerOracle;
use hofa::rng::DetRng;

fn main() -> hofa::Result<()> {
    let pr = FieldParams::new(2, 8)?;

    // A degree-1 member with a handful of corrupted points.
    let mut values: Vec<u8> = pr.points().map(|pt| pt.coords[0] ^ pt.coords[4]).collect();
    let mut rng = DetRng::for_task(11, 0);
    for _ in 0..8 {
        let i = rng.below(pr.size() as u64) as usize;
        values[i] ^= 1;
    }
    let f = FiniteFunction::new_finite(pr, 2, values)?;

    let oracle = ReedMullerOracle::new(FieldParams::new(2, 5)?, 1)?;
    let mut config = PipelineConfig::new(1, 0.2, 5, 3);
    config.trials = 10;
    let out = soundness_pipeline(&f, &oracle, &config)?;
    let r = &out.report;

    println!(
        "decomposition: complexity {} with eta = {:.4}, budget gamma = {:.4}",
        r.upstairs.complexity, r.eta, r.gamma
    );
    println!("restriction events held in {}/{} embeddings:", r.trials_all_hold, r.trials);
    for t in &r.trial_reports {
        println!(
            "  trial {}: structure {} | norms {} ({:.3} <= {:.3}) | projection {} ({:.3} <= {:.3})",
            t.trial,
            t.event1.holds,
            t.event2.holds,
            t.event2.restricted_f3_u,
            t.event2.f3_bound,
            t.event3.holds,
            t.event3.max_gap,
            t.event3.bound
        );
    }
    println!(
        "downstairs: nearest member at distance {:.4}, refined to complexity {}",
        r.h_distance, r.downstairs.complexity
    );
    println!(
        "repair: moved mass {:.4} = projection gap {:.4} (identities hold: {})",
        r.psi.moved_mass, r.psi.projection_gap, r.psi.identities_hold
    );
    println!(
        "||psi - phi||_U^2 = {:.4} within budget {:.4}: {}",
        r.final_norm, r.final_bound, r.final_holds
    );
    println!(
        "rounded candidate g differs from f on {:.2}% of points",
        100.0 * hamming_distance(&out.g, &f)?
    );
    Ok(())
}
