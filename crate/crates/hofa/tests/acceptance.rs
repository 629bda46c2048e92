//! Acceptance battery: ten end-to-end criteria, one test each, printing a
//! single PASS line when the criterion holds (run with `--nocapture` to see
//! them). Each test re-derives its expectations independently of the
//! library internals wherever a criterion calls for an oracle.

use num_complex::Complex64;

use hofa::decompose::{decompose, DecomposeConfig};
use hofa::factor::PolynomialFactor;
use hofa::field::FieldParams;
use hofa::function::{l1_norm, l2_norm, FiniteFunction};
use hofa::gowers::{gowers_norm_exact_complex, gowers_norm_exact_real};
use hofa::mu::{mu_lipschitz_check, restricted_l1_variance};
use hofa::poly::{enumerate_polys, NonClassicalPoly, VerifyMode};
use hofa::property::ReedMullerOracle;
use hofa::rng::DetRng;
use hofa::tester::{distance_tester, TesterConfig};
use hofa::transfer::construct_psi;

fn params(p: u8, n: usize) -> FieldParams {
    FieldParams::new(p, n).unwrap()
}

/// Criterion 1: every polynomial of degree at most 2 on F_2^3 lifts to a
/// phase with full order-3 norm, while the cubic x1 x2 x3 is strictly
/// non-uniform at order 3 yet full at order 4.
#[test]
fn criterion_1_degree_characterization() {
    let pr = params(2, 3);
    let polys: Vec<NonClassicalPoly> = enumerate_polys(&pr, 2, 0).unwrap().collect();
    assert_eq!(polys.len(), 128, "2^(1+3+3) polynomials of degree <= 2");
    for poly in &polys {
        let u3 = gowers_norm_exact_complex(&pr, &poly.value_table().unit_table(), 3).unwrap();
        assert!(
            (u3 - 1.0).abs() <= 1e-9,
            "degree-{} poly has U^3 = {u3}",
            poly.degree()
        );
    }
    let cubic = NonClassicalPoly::from_terms(pr, &[(vec![1, 1, 1], 0, 1)]).unwrap();
    let table = cubic.value_table().unit_table();
    let u3 = gowers_norm_exact_complex(&pr, &table, 3).unwrap();
    let u4 = gowers_norm_exact_complex(&pr, &table, 4).unwrap();
    assert!(u3 < 1.0 - 1e-6, "cubic must be non-uniform at order 3: {u3}");
    assert!((u4 - 1.0).abs() <= 1e-9, "cubic has U^4 = {u4}");
    println!("criterion 1: PASS (128 lifts at norm 1; cubic U^3 = {u3:.6}, U^4 = 1)");
}

/// Independent order-2 oracle: U_2(f)^4 = sum over characters of
/// |f-hat(chi)|^4, computed by a naive double loop over the group.
fn u2_by_naive_dft(pr: &FieldParams, values: &[Complex64]) -> f64 {
    let size = pr.size();
    let p = pr.p() as f64;
    let coords: Vec<Vec<u8>> = pr.points().map(|pt| pt.coords).collect();
    let mut fourth = 0.0f64;
    for chi in 0..size {
        let mut acc = Complex64::new(0.0, 0.0);
        for x in 0..size {
            let dot: u64 = coords[chi]
                .iter()
                .zip(&coords[x])
                .map(|(&a, &b)| a as u64 * b as u64)
                .sum();
            let angle = -std::f64::consts::TAU * (dot % pr.p() as u64) as f64 / p;
            acc += values[x] * Complex64::from_polar(1.0, angle);
        }
        let coeff = acc / size as f64;
        fourth += coeff.norm_sqr() * coeff.norm_sqr();
    }
    fourth.powf(0.25)
}

/// Criterion 2: the order-2 norm agrees with the naive character-sum
/// oracle on 100 seeded random functions to 1e-9.
#[test]
fn criterion_2_order_two_oracle() {
    let spaces = [params(2, 4), params(3, 2)];
    let mut worst = 0.0f64;
    for (si, pr) in spaces.iter().enumerate() {
        for seed in 0..50u64 {
            let mut rng = DetRng::for_task(1_000 + si as u64, seed);
            let f = FiniteFunction::random_signed(*pr, &mut rng).unwrap();
            let table = f.complex_table();
            let lib = gowers_norm_exact_complex(pr, &table, 2).unwrap();
            let oracle = u2_by_naive_dft(pr, &table);
            worst = worst.max((lib - oracle).abs());
        }
    }
    assert!(worst <= 1e-9, "worst gap {worst}");
    println!("criterion 2: PASS (100 seeds, worst |U^2 - oracle| = {worst:.3e})");
}

/// Criterion 3: norm inequalities on 50 random instances each:
/// monotonicity in the order, |E f| <= mean |f|, and U^2 <= L2.
#[test]
fn criterion_3_inequality_battery() {
    let pr = params(2, 4);
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..50u64 {
        let mut rng = DetRng::for_task(2_000, seed);
        let f = FiniteFunction::random_signed(pr, &mut rng).unwrap();
        let t = f.real_table().unwrap();
        let u1 = gowers_norm_exact_real(&pr, &t, 1).unwrap();
        let u2 = gowers_norm_exact_real(&pr, &t, 2).unwrap();
        let u3 = gowers_norm_exact_real(&pr, &t, 3).unwrap();
        worst = worst
            .max(u1 - u2)
            .max(u2 - u3)
            .max(u1 - l1_norm(&t))
            .max(u2 - l2_norm(&t));
    }
    assert!(worst <= 1e-9, "worst violation {worst}");
    println!("criterion 3: PASS (50 instances/inequality, worst violation {worst:.3e})");
}

/// Criterion 4: restriction laws over F_2^4 at k=1 are Lipschitz in the
/// order-3 norm on 50 random pairs.
#[test]
fn criterion_4_mu_lipschitz() {
    let pr = params(2, 4);
    let mut checked = 0;
    for seed in 0..50u64 {
        let mut rng = DetRng::for_task(3_000, seed);
        let f = FiniteFunction::random_unit(pr, &mut rng).unwrap();
        let g = FiniteFunction::random_unit(pr, &mut rng).unwrap();
        let rep = mu_lipschitz_check(&f, &g, 1).unwrap();
        assert!(
            rep.holds,
            "pair {seed}: outcome gap {} vs {} / stat {} vs {}",
            rep.max_outcome_gap, rep.outcome_bound, rep.stat_distance, rep.total_bound
        );
        checked += 1;
    }
    assert_eq!(checked, 50);
    println!("criterion 4: PASS (50 pairs, order-3 Lipschitz bounds hold)");
}

/// Criterion 5: the analytic degree verifier confirms the declared degree
/// of every enumerated polynomial (n <= 3, degree <= 3, one extra level)
/// and refutes degree - 1; the canonical depth-1 monomial has degree 2.
#[test]
fn criterion_5_degree_verifier() {
    let mut confirmed = 0u64;
    for n in 1..=3usize {
        let pr = params(2, n);
        for poly in enumerate_polys(&pr, 3, 1).unwrap() {
            let d = poly.degree();
            assert!(
                poly.verify_degree(d, VerifyMode::Exhaustive).unwrap(),
                "declared degree {d} refuted for {:?}",
                poly.to_text()
            );
            if d >= 1 {
                assert!(
                    !poly.verify_degree(d - 1, VerifyMode::Exhaustive).unwrap(),
                    "degree {d} poly passed the {}-check: {:?}",
                    d - 1,
                    poly.to_text()
                );
            }
            confirmed += 1;
        }
    }
    let pr = params(2, 1);
    let half = NonClassicalPoly::from_terms(pr, &[(vec![1], 1, 1)]).unwrap();
    assert_eq!(half.degree(), 2);
    assert!(half.verify_degree(2, VerifyMode::Exhaustive).unwrap());
    assert!(!half.verify_degree(1, VerifyMode::Exhaustive).unwrap());
    println!("criterion 5: PASS ({confirmed} polynomials verified sharply)");
}

/// Criterion 6: atom statistics agree with a brute-force recount, and the
/// measure deviation is controlled by the factor's largest phase bias.
#[test]
fn criterion_6_atom_statistics() {
    let pr = params(2, 4);
    let quad = NonClassicalPoly::from_terms(pr, &[(vec![1, 1, 0, 0], 0, 1)]).unwrap();
    let lin = NonClassicalPoly::from_terms(pr, &[(vec![0, 0, 1, 0], 0, 1)]).unwrap();
    let factor = PolynomialFactor::from_polys(pr, vec![quad.clone(), lin.clone()]).unwrap();
    let stats = factor.atom_stats();

    // Brute-force recount from the raw polynomial values.
    let qt = quad.value_table();
    let lt = lin.value_table();
    let mut counts = std::collections::BTreeMap::new();
    for idx in 0..pr.size() as u32 {
        let label = qt.num(idx) as u64 + 2 * lt.num(idx) as u64;
        *counts.entry(label).or_insert(0u64) += 1;
    }
    assert_eq!(stats.counts, counts, "atom counts must match the recount");

    let rank = factor.rank_proxy(false).unwrap();
    assert!(
        stats.max_abs_deviation <= rank.max_bias + 1e-12,
        "deviation {} vs bias {}",
        stats.max_abs_deviation,
        rank.max_bias
    );
    println!(
        "criterion 6: PASS (counts exact; deviation {:.4} <= bias {:.4})",
        stats.max_abs_deviation, rank.max_bias
    );
}

/// Criterion 7: the subspace-restriction tester on F_2^10 with m = 6,
/// delta = 0.05, epsilon = 0.2, 200 trials: a noisy member is accepted by
/// at least 2/3 of trials, a random far function by at most 1/3, and the
/// noisy member's restricted distances stay within epsilon/2 of the global
/// distance in all but at most 0.36 of trials.
#[test]
fn criterion_7_distance_tester() {
    let pr = params(2, 10);
    let oracle = ReedMullerOracle::new(params(2, 6), 1).unwrap();
    let config = TesterConfig {
        delta: 0.05,
        epsilon: 0.2,
        m: 6,
        trials: 200,
        seed: 7,
    };

    // A linear member with exactly 51 flips: distance 51/1024 < delta.
    let mut values: Vec<u8> = pr
        .points()
        .map(|pt| pt.coords[0] ^ pt.coords[3])
        .collect();
    let mut rng = DetRng::for_task(4_000, 0);
    let mut flipped = std::collections::HashSet::new();
    while flipped.len() < 51 {
        flipped.insert(rng.below(pr.size() as u64) as usize);
    }
    for &i in &flipped {
        values[i] ^= 1;
    }
    let near = FiniteFunction::new_finite(pr, 2, values).unwrap();
    let global = 51.0 / 1024.0;

    let accept = distance_tester(&near, &oracle, &config).unwrap();
    assert!(
        accept.accept_fraction >= 2.0 / 3.0,
        "noisy member accepted by only {}",
        accept.accept_fraction
    );
    let exceed = accept.exceed_fraction(global, config.epsilon / 2.0);
    assert!(
        exceed <= 0.36,
        "restricted distances failed to concentrate: {exceed}"
    );

    let mut rng = DetRng::for_task(4_000, 1);
    let far = FiniteFunction::random_finite(pr, 2, &mut rng).unwrap();
    let reject = distance_tester(&far, &oracle, &config).unwrap();
    assert!(
        reject.accept_fraction <= 1.0 / 3.0,
        "far function accepted by {}",
        reject.accept_fraction
    );
    println!(
        "criterion 7: PASS (accept {:.3}, reject-side accept {:.3}, exceed {exceed:.3})",
        accept.accept_fraction, reject.accept_fraction
    );
}

/// Criterion 8: the repair construction hits E[psi|B] = phi and
/// ||f - psi||_1 = ||E[f|B] - phi||_1 to 1e-12 on 50 random instances.
#[test]
fn criterion_8_repair_identities() {
    let pr = params(2, 4);
    let polys: Vec<NonClassicalPoly> = enumerate_polys(&pr, 1, 0).unwrap().skip(1).collect();
    for seed in 0..50u64 {
        let mut rng = DetRng::for_task(5_000, seed);
        let a = rng.below(polys.len() as u64) as usize;
        let b = rng.below(polys.len() as u64) as usize;
        let factor = PolynomialFactor::from_polys(pr, vec![polys[a].clone(), polys[b].clone()])
            .unwrap();
        let f = FiniteFunction::random_unit(pr, &mut rng).unwrap();
        let labels = factor.atom_labels();
        let mut atom_value = std::collections::BTreeMap::new();
        for &l in &labels {
            atom_value.entry(l).or_insert_with(|| rng.unit());
        }
        let phi_table: Vec<f64> = labels.iter().map(|l| atom_value[l]).collect();
        let phi = FiniteFunction::new_real(pr, false, phi_table).unwrap();
        let res = construct_psi(&f, &phi, &factor).unwrap();
        assert!(
            (res.moved_mass - res.projection_gap).abs() <= 1e-12,
            "instance {seed}: moved {} vs gap {}",
            res.moved_mass,
            res.projection_gap
        );
        assert!(
            res.cond_exp_error <= 1e-12,
            "instance {seed}: conditional expectation off by {}",
            res.cond_exp_error
        );
    }
    println!("criterion 8: PASS (50 instances, both identities at 1e-12)");
}

/// Criterion 9: across 1000 random 6-dimensional restrictions on F_2^8,
/// the sample variance of the restricted L1 distance stays below 2 * 2^-6.
#[test]
fn criterion_9_restricted_l1_variance() {
    let pr = params(2, 8);
    let mut rng = DetRng::for_task(6_000, 0);
    let f = FiniteFunction::random_unit(pr, &mut rng).unwrap();
    let g = FiniteFunction::random_unit(pr, &mut rng).unwrap();
    let rep = restricted_l1_variance(&f, &g, 6, 1000, 9).unwrap();
    assert!(
        rep.holds && rep.variance <= 2.0 * 2.0f64.powi(-6),
        "variance {} vs bound {}",
        rep.variance,
        rep.bound
    );
    println!(
        "criterion 9: PASS (variance {:.3e} <= {:.3e} over 1000 embeddings)",
        rep.variance, rep.bound
    );
}

/// Criterion 10: the check battery's artifact is byte-identical across
/// repeated runs and across thread counts.
#[test]
fn criterion_10_check_artifact_determinism() {
    let bin = env!("CARGO_BIN_EXE_hofa");
    let run = |threads: Option<&str>| {
        let mut cmd = std::process::Command::new(bin);
        cmd.args(["check", "--scale", "small", "--seed", "0"]);
        if let Some(t) = threads {
            cmd.args(["--threads", t]);
        }
        let out = cmd.output().expect("spawn hofa");
        assert!(
            out.status.success(),
            "check run failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };
    let base = run(None);
    assert!(!base.is_empty());
    assert_eq!(base, run(None), "reruns must be byte-identical");
    assert_eq!(base, run(Some("1")), "--threads 1 must not change bytes");
    assert_eq!(base, run(Some("4")), "--threads 4 must not change bytes");
    println!("criterion 10: PASS (4 runs, identical artifacts)");
}

/// Beyond the ten criteria: the energy-increment decomposition recovers
/// planted structure (regression guard for the pipeline's first stage).
#[test]
fn decomposition_recovers_planted_structure() {
    let pr = params(2, 6);
    let plant = NonClassicalPoly::from_terms(pr, &[(vec![1, 0, 0, 1, 0, 0], 0, 1)]).unwrap();
    let table = plant.value_table();
    let values: Vec<f64> = (0..pr.size() as u32)
        .map(|i| if table.num(i) == 0 { 0.1 } else { 0.9 })
        .collect();
    let f = FiniteFunction::new_real(pr, false, values).unwrap();
    let dec = decompose(&f, &DecomposeConfig::for_degree(1, 0.05, 2), None).unwrap();
    assert!(dec.converged);
    assert!(dec.factor.measures(&table), "planted polynomial not recovered");
    println!("extra: decomposition recovered the planted polynomial");
}
