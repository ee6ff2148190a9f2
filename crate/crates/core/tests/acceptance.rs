//! Acceptance suite: one PASS/FAIL line per criterion; exits nonzero if
//! any criterion fails.

use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use currentcoh::gradedbasis::{BlockKey, ComplexKind, Sector};
use currentcoh::hodge::Hodge;
use currentcoh::koszul::{cohomology_table, dbar_squares_to_zero, Bounds};
use currentcoh::liealg::{build_algebra, compact_basis, AlgebraName, LieAlgebraData};
use currentcoh::macdonald::{
    compare_series, corrupt_series, delta1_cokernel, iwahori_series_check, predicted_super_series,
    predicted_truncated_series, verify_generators_span, GradedSeries,
};
use currentcoh::Result;

fn sl(n: usize) -> LieAlgebraData {
    build_algebra(AlgebraName::sl(n)).expect("sl(n) builds")
}

/// `Π (1 + t^d q^w)` over the listed `(d, w)`.
fn exterior(bounds: Bounds, factors: &[(usize, usize)]) -> GradedSeries {
    let mut s = GradedSeries::one(bounds);
    for &(d, w) in factors {
        let f = GradedSeries::generator_factor(bounds, BlockKey::new(d, 0, w), true).unwrap();
        s = s.multiply(&f);
    }
    s
}

const SUPER_RANGE: Bounds = Bounds {
    max_d: 2,
    max_p: 3,
    max_w: 4,
};

fn criterion_1() -> Result<(bool, String)> {
    let mut ok = true;
    let mut notes = Vec::new();
    let cases: [(usize, usize, Vec<(usize, usize)>); 4] = [
        (2, 1, vec![(3, 0)]),
        (2, 2, vec![(3, 0), (3, 3)]),
        (2, 3, vec![(3, 0), (3, 4), (3, 5)]),
        (3, 2, vec![(3, 0), (3, 3), (5, 0), (5, 5)]),
    ];
    for (rank, n, factors) in cases {
        let alg = sl(rank);
        let t0 = Instant::now();
        let bounds = Bounds::new(alg.dim() * n, 0, alg.dim() * n * (n - 1) / 2);
        let table = cohomology_table(&alg, ComplexKind::Truncated(n), bounds);
        let predicted = predicted_truncated_series(&alg, n, bounds)?;
        let closed_form = exterior(bounds, &factors);
        let diffs = compare_series(&table, &predicted)?.len() + compare_series(&table, &closed_form)?.len();
        let secs = t0.elapsed().as_secs_f64();
        ok &= diffs == 0 && secs < 120.0;
        notes.push(format!("sl{rank} n={n}: {diffs} diffs in {secs:.2}s"));
    }
    Ok((ok, notes.join("; ")))
}

fn criterion_2() -> Result<(bool, String)> {
    let alg = sl(2);
    let t0 = Instant::now();
    let table = cohomology_table(&alg, ComplexKind::SuperRelative, SUPER_RANGE);
    let diffs = compare_series(&table, &predicted_super_series(&alg, SUPER_RANGE)?)?;
    let secs = t0.elapsed().as_secs_f64();
    Ok((diffs.is_empty() && secs < 300.0, format!("{} diffs in {secs:.2}s", diffs.len())))
}

fn criterion_3(h: &Hodge) -> Result<(bool, String)> {
    let worst = Bounds::new(6, 2, 6)
        .keys()
        .into_iter()
        .map(|k| h.verify_laplacian_identity(k))
        .fold(0.0, f64::max);
    let germs = h.linear_germs(6);
    let germ_worst = germs.iter().map(|g| g.deviation).fold(0.0, f64::max);
    let d_ok = germs.iter().all(|g| (g.d_op - 1.0).abs() <= 1e-10);
    Ok((
        worst <= 1e-8 && germ_worst <= 1e-10 && d_ok,
        format!("identity deviation {worst:.2e}; linear germs n<=6 deviation {germ_worst:.2e}"),
    ))
}

fn criterion_4(h: &Hodge) -> Result<(bool, String)> {
    let mut inv = 0.0f64;
    let mut full = 0.0f64;
    for k in Bounds::new(5, 2, 5).keys() {
        let r = h.verify_nakano(k, 1e-7)?;
        inv = inv.max(r.invariant_deviation);
        full = full.max(r.full_block_deviation);
    }
    Ok((
        inv <= 1e-8 && full <= 1e-8,
        format!("invariant blocks {inv:.2e}; T + deg = D on full blocks {full:.2e}"),
    ))
}

fn criterion_5(h: &Hodge, alg: &LieAlgebraData) -> Result<(bool, String)> {
    let table = cohomology_table(alg, ComplexKind::SuperRelative, SUPER_RANGE);
    let mut mismatches = 0;
    let mut distance = 0.0f64;
    for k in SUPER_RANGE.keys() {
        let r = h.harmonic_basis(k, 1e-7)?;
        let exact = table.get(&k);
        if r.basis.vectors.len() != exact || r.joint_kernel_dim != exact {
            mismatches += 1;
        }
        distance = distance.max(r.subspace_distance);
    }
    Ok((
        mismatches == 0 && distance <= 1e-7,
        format!("{mismatches} dimension mismatches; max subspace distance {distance:.2e}"),
    ))
}

fn criterion_6(alg: &LieAlgebraData) -> Result<(bool, String)> {
    let r = verify_generators_span(alg, SUPER_RANGE, 1e-7)?;
    let residual = r.generator_harmonic_residual.unwrap_or(f64::INFINITY);
    Ok((
        r.defects.is_empty() && r.generators_closed && residual <= 1e-7,
        format!(
            "closed: {}; generator residual {residual:.2e}; {} defect blocks",
            r.generators_closed,
            r.defects.len()
        ),
    ))
}

fn criterion_7() -> Result<(bool, String)> {
    let mut ok = true;
    let mut notes = Vec::new();
    for m in [1, 2] {
        for n in [0, 2, 3, 4] {
            let r = delta1_cokernel(m, n, 8)?;
            ok &= r.matches_prediction();
            notes.push(format!("(m={m},n={n}) ker {} coker {:?}", r.kernel_dim, r.cokernel_weights));
        }
    }
    Ok((ok, notes.join("; ")))
}

fn criterion_8(alg: &LieAlgebraData) -> Result<(bool, String)> {
    let r = iwahori_series_check(alg, Bounds::new(1, 2, 2))?;
    Ok((r.diffs.is_empty(), format!("{} diffs", r.diffs.len())))
}

fn criterion_9(h: &Hodge, alg: &LieAlgebraData) -> Result<(bool, String)> {
    let b = Bounds::new(6, 0, 3);
    let t = cohomology_table(alg, ComplexKind::Truncated(2), b);
    let trunc_diffs = compare_series(&t, &corrupt_series(&predicted_truncated_series(alg, 2, b)?))?.len();
    let s = cohomology_table(alg, ComplexKind::SuperRelative, SUPER_RANGE);
    let super_diffs = compare_series(&s, &corrupt_series(&predicted_super_series(alg, SUPER_RANGE)?))?.len();

    let mut rng = StdRng::seed_from_u64(0x5eed);
    let kinds = [
        ComplexKind::SuperRelative,
        ComplexKind::SuperAbsolute,
        ComplexKind::Truncated(3),
        ComplexKind::Iwahori,
    ];
    let mut d2_failures = 0;
    let mut adjoint_worst = 0.0f64;
    for _ in 0..100 {
        let kind = kinds[rng.gen_range(0..kinds.len())];
        let p = if kind.has_sigma() { rng.gen_range(0..=2) } else { 0 };
        let key = BlockKey::new(rng.gen_range(0..=3), p, rng.gen_range(0..=4));
        if !dbar_squares_to_zero(alg, kind, key, Sector::Full) {
            d2_failures += 1;
        }
        let key = BlockKey::new(rng.gen_range(0..=3), rng.gen_range(0..=2), rng.gen_range(0..=4));
        adjoint_worst = adjoint_worst.max(h.adjointness_defect(key)?);
    }
    Ok((
        trunc_diffs == 1 && super_diffs == 1 && d2_failures == 0 && adjoint_worst <= 1e-10,
        format!(
            "corrupted diffs {trunc_diffs}/{super_diffs}; d^2 failures {d2_failures}/100; adjointness {adjoint_worst:.2e}"
        ),
    ))
}

fn main() {
    let alg = sl(2);
    let compact = compact_basis(&alg);
    let hodge = Hodge::new(&alg, &compact).expect("sl(2) metric");
    let criteria: Vec<(&str, Box<dyn Fn() -> Result<(bool, String)> + '_>)> = vec![
        ("truncated algebras match their exterior algebras", Box::new(criterion_1)),
        ("super relative cohomology matches the free algebra", Box::new(criterion_2)),
        ("Laplacian identity and linear-germ coefficients", Box::new(|| criterion_3(&hodge))),
        ("Nakano decomposition", Box::new(|| criterion_4(&hodge))),
        ("harmonic forms represent cohomology", Box::new(|| criterion_5(&hodge, &alg))),
        ("S and E cocycles generate", Box::new(|| criterion_6(&alg))),
        ("first spectral-sequence differential", Box::new(criterion_7)),
        ("Iwahori factorization", Box::new(|| criterion_8(&alg))),
        ("negative controls and property suites", Box::new(|| criterion_9(&hodge, &alg))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let (ok, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {}: {name} — {detail} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            t0.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
