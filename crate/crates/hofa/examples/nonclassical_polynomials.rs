//! Polynomials with torsion values beyond 1/p: arithmetic, degree, depth.
//!
//! Run with: cargo run --example nonclassical_polynomials

use hofa::field::FieldParams;
use hofa::poly::{count_polys, enumerate_polys, NonClassicalPoly, VerifyMode};

fn main() -> hofa::Result<()> {
    let pr = FieldParams::new(2, 1)?;

    // P(x) = |x|/4 takes values {0, 1/4}: degree 2 despite being "linear"
    // in shape, because doubling a depth-1 value needs one more derivative
    // to kill.
    let half = NonClassicalPoly::from_terms(pr, &[(vec![1], 1, 1)])?;
    println!("P = |x|/4 on F_2: degree {} depth {}", half.degree(), half.depth());
    println!(
        "  verify degree <= 2: {}",
        half.verify_degree(2, VerifyMode::Exhaustive)?
    );
    println!(
        "  verify degree <= 1: {}",
        half.verify_degree(1, VerifyMode::Exhaustive)?
    );

    // Negation wraps around the torsion group: -(1/4) = 3/4 = 1/4 + 1/2.
    let neg = half.neg();
    println!("-P in canonical form:\n{}", indent(&neg.to_text()));

    // Adding P four times cancels exactly.
    let sum = half.add(&half).add(&half).add(&half);
    println!("P+P+P+P is zero: {}", sum.is_zero());

    // Derivatives drop the degree: D_1 P has degree 1.
    let table = half.value_table();
    let add = hofa::field::AddTable::new(&pr)?;
    let derivative = table.derivative(&add, 1);
    println!(
        "(D_1 P) values as numerators mod 4: {:?} (reduced depth {})",
        derivative.nums(),
        derivative.reduced_depth()
    );

    // Enumeration agrees with the closed-form count.
    let pr3 = FieldParams::new(2, 3)?;
    let listed = enumerate_polys(&pr3, 2, 1)?.count();
    let counted = count_polys(&pr3, 2, 1)?;
    println!("degree <= 2, one torsion level on F_2^3: {listed} polynomials (count {counted})");
    Ok(())
}

fn indent(s: &str) -> String {
    s.lines()
        .map(|l| format!("  {l}"))
        .collect::<Vec<_>>()
        .join("\n")
}
