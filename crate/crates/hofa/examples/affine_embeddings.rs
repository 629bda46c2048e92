//! Affine subspace embeddings: sampling, enumeration, sections.
//!
//! Run with: cargo run --example affine_embeddings

use hofa::affine::{count_embeddings, enumerate_embeddings, sample_affine_embedding};
use hofa::field::FieldParams;
use hofa::function::FiniteFunction;
use hofa::rng::DetRng;

fn main() -> hofa::Result<()> {
    let pr = FieldParams::new(2, 4)?;

    // Every injective affine map F_2^2 -> F_2^4 can be listed.
    let total = count_embeddings(&pr, 2)?;
    let maps = enumerate_embeddings(&pr, 2)?;
    println!("injective affine maps F_2^2 -> F_2^4: {total} (listed {})", maps.len());

    // A seeded sample, its image, and a left inverse.
    let mut rng = DetRng::for_task(1, 0);
    let map = sample_affine_embedding(&mut rng, &pr, 2)?;
    println!("sampled embedding:\n{}", indent(&map.to_text()));
    println!("image point indices: {:?}", map.image_table()?);
    let section = map.section()?;
    let round_trip = section.compose(&map)?;
    println!(
        "section returns every source point: {}",
        (0..4u32).all(|i| {
            let pt = map.source_params().unwrap().points().nth(i as usize).unwrap();
            round_trip.apply(&pt).unwrap().coords == pt.coords
        })
    );

    // Restriction along the map gathers function values on the image.
    let f = FiniteFunction::new_finite(pr, 2, (0..16).map(|i| (i as u8) & 1).collect())?;
    let restricted = f.restrict(&map)?;
    println!("restricted function:\n{}", indent(&restricted.to_text()));
    Ok(())
}

fn indent(s: &str) -> String {
    s.lines()
        .map(|l| format!("  {l}"))
        .collect::<Vec<_>>()
        .join("\n")
}
