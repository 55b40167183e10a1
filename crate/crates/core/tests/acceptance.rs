//! Acceptance suite. Each criterion prints one PASS/FAIL line on stdout
//! (written directly so it survives output capture) and then asserts.

mod common;

use std::io::Write;
use std::time::Instant;

use common::{
    connected_slopes, crossing_indices, random_rational, random_structured_path, slope_path,
};
use num_traits::{ToPrimitive, Zero};
use pseudorot::base_group::compute_base_group;
use pseudorot::certify::{
    certify, check_chern_bound, Conclusion, ProblemInstance, CHERN_DIAGNOSTIC,
};
use pseudorot::condition_a::{
    cube_intersection, enumerate_components, search_condition_a, CubeIntersection,
};
use pseudorot::dim4::{
    blacklist, component_index_residue_with, find_length3_with, slope, ResidueOutcome,
};
use pseudorot::exact_angle::{
    format_rational, rat, rat_int, ExactAngle, IrrationalBasis, Rational,
};
use pseudorot::index_core::SymplecticPath;
use pseudorot::orbit::OrbitTable;
use pseudorot::partitions::{find_extremal, is_extremal, partitions_of, Partition};
use pseudorot::quasimorphism::{hormander_defect, SymplecticMatrix, Tolerances};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, name: &str, failures: &[String], detail: &str) {
    let status = if failures.is_empty() { "PASS" } else { "FAIL" };
    let mut line = format!("acceptance criterion {id} [{name}]: {status} ({detail})\n");
    for f in failures.iter().take(10) {
        line += &format!("    {f}\n");
    }
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(failures.is_empty(), "criterion {id} failed: {failures:?}");
}

fn sqrt_angle(radicand: i64, coeff: Rational) -> (IrrationalBasis, ExactAngle) {
    let basis = IrrationalBasis::new()
        .with_sqrt("a", rat_int(radicand))
        .unwrap();
    (basis, ExactAngle::term("a", coeff))
}

#[test]
fn criterion_1_sphere_golden() {
    let start = Instant::now();
    let mut failures = Vec::new();
    // theta / 2 pi = sqrt(m) / d, all in (1/2, 1)
    let samples = [
        (2, 2),
        (3, 2),
        (5, 3),
        (7, 3),
        (11, 4),
        (13, 4),
        (17, 5),
        (19, 5),
        (23, 6),
        (29, 6),
    ];
    for (m, d) in samples {
        let (basis, lam) = sqrt_angle(m, rat(-1, d));
        let path = SymplecticPath::new(basis, vec![lam]).unwrap();
        let mu = (path.cz_index(1).unwrap(), path.cz_index(2).unwrap());
        if mu != (-1, -3) {
            failures.push(format!("sqrt({m})/{d}: indices {mu:?}"));
        }
        let cert = certify(&ProblemInstance::new(path, 2, 2).unwrap()).unwrap();
        let parts = cert.partition.as_ref().map(|p| p.parts.clone());
        if cert.conclusion != Conclusion::DeformedQuantumProduct || parts != Some(vec![1, 1]) {
            failures.push(format!(
                "sqrt({m})/{d}: {} with {parts:?}",
                cert.conclusion.as_str()
            ));
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs_f64() >= 1.0 {
        failures.push(format!("runtime {elapsed:?}"));
    }
    report(
        1,
        "sphere golden",
        &failures,
        &format!("10 angles, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_2_example_family() {
    let mut failures = Vec::new();
    let radicands = [2, 3, 5, 7];
    // (a) small counterclockwise angles, all below 1/6
    let mut cases_a = 0;
    for n in 1..=4 {
        let mut basis = IrrationalBasis::new();
        let mut lams = Vec::new();
        for (j, m) in radicands.iter().take(n).enumerate() {
            let name = format!("a{j}");
            basis = basis.with_sqrt(&name, rat_int(*m)).unwrap();
            lams.push(ExactAngle::term(&name, rat(1, 20)));
        }
        let path = SymplecticPath::new(basis, lams).unwrap();
        for r in 1..=6usize {
            let d = Partition::evaluate(&path, &vec![1; r]).unwrap().defect;
            cases_a += 1;
            if d != (r as i64 - 1) * n as i64 {
                failures.push(format!("(a) n={n} r={r}: defect {d}"));
            }
        }
    }
    // (b) opposite angles: defect zero on every partition of every k <= 50
    let mut cases_b = 0usize;
    for (m, c) in [(2, rat(1, 3)), (3, rat(-2, 7)), (5, rat(5, 4))] {
        let (basis, alpha) = sqrt_angle(m, c);
        let path = SymplecticPath::new(basis, vec![alpha.clone(), -alpha]).unwrap();
        let cz: Vec<i64> = (0..=50)
            .map(|k| if k == 0 { 0 } else { path.cz_index(k).unwrap() })
            .collect();
        for k in 1..=50u64 {
            for parts in partitions_of(k) {
                cases_b += 1;
                let d: i64 = parts.iter().map(|&p| cz[p as usize]).sum::<i64>() - cz[k as usize];
                if d != 0 {
                    failures.push(format!("(b) sqrt({m}): defect {d} on {parts:?}"));
                }
            }
        }
    }
    // (c) all clockwise
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut cases_c = 0;
    for _ in 0..20 {
        let n = rng.gen_range(1..=4);
        let mut basis = IrrationalBasis::new();
        let mut lams = Vec::new();
        for (j, m) in radicands.iter().take(n).enumerate() {
            let name = format!("a{j}");
            basis = basis.with_sqrt(&name, rat_int(*m)).unwrap();
            let c = rat(-rng.gen_range(1..40), rng.gen_range(3..40));
            lams.push(ExactAngle::term(&name, c));
        }
        let path = SymplecticPath::new(basis, lams).unwrap();
        for r in 2..=(n + 2) {
            cases_c += 1;
            match find_extremal(&path, r, 2, 10_000, false).unwrap() {
                Some(p) if is_extremal(&path, &p.parts).unwrap() => {}
                other => failures.push(format!(
                    "(c) {:?} r={r}: {other:?}",
                    path.rotation_numbers()
                )),
            }
        }
    }
    report(
        2,
        "example family",
        &failures,
        &format!("(a) {cases_a} cases, (b) {cases_b} partitions, (c) {cases_c} searches"),
    );
}

#[test]
fn criterion_3_defect_bound() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut skipped = 0;
    for n in 1..=3usize {
        let mut done = 0;
        while done < 1000 {
            let p = SymplecticMatrix::random(n, 1.0, &mut rng);
            let q = SymplecticMatrix::random(n, 1.0, &mut rng);
            match hormander_defect(&p, &q, tol, rng.gen()) {
                Ok(d) => {
                    done += 1;
                    if d.abs() > n as i64 {
                        failures.push(format!("n={n}: defect {d}"));
                    }
                }
                Err(_) => skipped += 1,
            }
        }
    }
    let mut commuting = 0;
    while commuting < 60 {
        let n = rng.gen_range(1..=3usize);
        let a: Vec<Rational> = (0..n).map(|_| random_rational(&mut rng, 1000, 2)).collect();
        let b: Vec<Rational> = (0..n).map(|_| random_rational(&mut rng, 1000, 2)).collect();
        let ab: Vec<Rational> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let near_int = |x: &Rational| {
            let f = x.to_f64().unwrap();
            (f - f.round()).abs() < 1e-3
        };
        if a.iter().chain(&b).chain(&ab).any(near_int) {
            continue;
        }
        let closed = SymplecticPath::from_rationals(&ab).cz_index(1).unwrap()
            - SymplecticPath::from_rationals(&a).cz_index(1).unwrap()
            - SymplecticPath::from_rationals(&b).cz_index(1).unwrap();
        let f = |v: &[Rational]| v.iter().map(|x| x.to_f64().unwrap()).collect::<Vec<_>>();
        let c = SymplecticMatrix::random(n, 0.7, &mut rng);
        let p = SymplecticMatrix::rotation(&f(&a)).conjugate_by(&c);
        let q = SymplecticMatrix::rotation(&f(&b)).conjugate_by(&c);
        match hormander_defect(&p, &q, tol, 0) {
            Ok(d) if d == closed => {}
            other => failures.push(format!("commuting {a:?} {b:?}: {other:?} vs {closed}")),
        }
        commuting += 1;
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs_f64() >= 60.0 {
        failures.push(format!("runtime {elapsed:?}"));
    }
    report(
        3,
        "defect bound",
        &failures,
        &format!("3000 random pairs ({skipped} degenerate draws redrawn), {commuting} commuting pairs, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_4_subadditivity() {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let all: Vec<Vec<Vec<u64>>> = (0..=30)
        .map(|k| if k == 0 { vec![] } else { partitions_of(k) })
        .collect();
    let mut checked = 0usize;
    for _ in 0..200 {
        let n = rng.gen_range(1..=3);
        let path = random_structured_path(&mut rng, n);
        let cz: Vec<i64> = (0..=30)
            .map(|k| if k == 0 { 0 } else { path.cz_index(k).unwrap() })
            .collect();
        for k in 1..=30usize {
            for parts in &all[k] {
                checked += 1;
                let lhs: i64 = parts.iter().map(|&p| cz[p as usize]).sum::<i64>() - cz[k];
                if lhs > (parts.len() as i64 - 1) * n as i64 {
                    failures.push(format!("{:?} {parts:?}: {lhs}", path.rotation_numbers()));
                }
            }
        }
    }
    report(
        4,
        "sub-additivity",
        &failures,
        &format!("200 paths, {checked} partitions"),
    );
}

#[test]
fn criterion_5_partition_algebra() {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut extremal_cases = 0;
    let mut refinements = 0;
    for case in 0..500 {
        let n = rng.gen_range(1..=3);
        let path = random_structured_path(&mut rng, n);
        let r = rng.gen_range(2..=4);
        let parts: Vec<u64> = if case % 2 == 0 {
            match find_extremal(&path, r, 2, 2000, false).unwrap() {
                Some(p) => p.parts,
                None => (0..r).map(|_| rng.gen_range(1..20)).collect(),
            }
        } else {
            (0..r).map(|_| rng.gen_range(1..20)).collect()
        };
        let ext = is_extremal(&path, &parts).unwrap();
        // (i) loop shifts
        let shift: Vec<i64> = (0..n).map(|_| rng.gen_range(-3..=3)).collect();
        if is_extremal(&path.loop_shifted(&shift), &parts).unwrap() != ext {
            failures.push(format!("(i) case {case}: shift {shift:?}"));
        }
        // (ii) scaling
        let m = rng.gen_range(2..=4u64);
        let scaled: Vec<u64> = parts.iter().map(|k| k * m).collect();
        if is_extremal(&path.iterated(m as i64), &parts).unwrap()
            != is_extremal(&path, &scaled).unwrap()
        {
            failures.push(format!("(ii) case {case}: m = {m}"));
        }
        // (iii) direct sums
        let other_n = rng.gen_range(1..=2);
        let other = random_structured_path(&mut rng, other_n);
        let sum = path.direct_sum(&other).unwrap();
        let both = ext && is_extremal(&other, &parts).unwrap();
        if is_extremal(&sum, &parts).unwrap() != both {
            failures.push(format!("(iii) case {case}"));
        }
        // (iv) merges and refinements of extremal partitions
        if ext {
            extremal_cases += 1;
            for s in 2..=parts.len() {
                let mut merged = vec![parts[..s].iter().sum::<u64>()];
                merged.extend_from_slice(&parts[s..]);
                if !is_extremal(&path, &merged).unwrap() {
                    failures.push(format!("(iv) case {case}: merge {merged:?}"));
                }
            }
            if parts[0] <= 20 {
                for sub in partitions_of(parts[0]) {
                    if sub.len() > 1 && is_extremal(&path, &sub).unwrap() {
                        refinements += 1;
                        let mut refined = sub.clone();
                        refined.extend_from_slice(&parts[1..]);
                        if !is_extremal(&path, &refined).unwrap() {
                            failures.push(format!("(iv) case {case}: refinement {refined:?}"));
                        }
                    }
                }
            }
        }
    }
    if extremal_cases < 100 {
        failures.push(format!("only {extremal_cases} extremal cases generated"));
    }
    report(
        5,
        "partition algebra",
        &failures,
        &format!("500 cases, {extremal_cases} extremal, {refinements} refinements"),
    );
}

#[test]
fn criterion_6_condition_a_slopes() {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let expected_empty = [rat(-1, 1), rat(-2, 1), rat(-1, 2)];
    let mut empty = Vec::new();
    let slopes = connected_slopes(10);
    for &(s1, s2) in &slopes {
        let m = [2, 3, 5, 7, 11][rng.gen_range(0..5)];
        let path = slope_path(s1, s2, m, rat(1, rng.gen_range(5..40)));
        let g = compute_base_group(&path).unwrap();
        let s = rat(-s1, s2);
        let is_empty = cube_intersection(&g, 3).unwrap() == CubeIntersection::Empty;
        if is_empty != expected_empty.contains(&s) {
            failures.push(format!("slope {}: empty = {is_empty}", format_rational(&s)));
        }
        if is_empty {
            empty.push(format_rational(&s));
            continue;
        }
        match search_condition_a(&path, 3, 10_000, 4096).unwrap() {
            Some(parts) if is_extremal(&path, &parts).unwrap() => {}
            other => failures.push(format!(
                "slope {}: search gave {other:?}",
                format_rational(&s)
            )),
        }
    }
    report(
        6,
        "condition A slopes",
        &failures,
        &format!("{} slopes, empty on {{{}}}", slopes.len(), empty.join(", ")),
    );
}

#[test]
fn criterion_7_blacklist() {
    let mut failures = Vec::new();
    let mut misses = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut cases = 0;
    let mut residues_checked = 0;
    for chern in [2u64, 3] {
        for (s1, s2) in connected_slopes(8) {
            let m = [2, 3, 5, 7, 11, 13][rng.gen_range(0..6)];
            let path = slope_path(s1, s2, m, rat(1, rng.gen_range(5..60)));
            let g = compute_base_group(&path).unwrap();
            let sd = slope(&g).unwrap();
            let listed = blacklist(&sd, chern).unwrap();
            let table = OrbitTable::build(&path, 100_000).unwrap();
            let out = find_length3_with(&path, &table, chern).unwrap();
            cases += 1;
            let found = out.partition.is_some();
            if found == listed {
                let what = if found {
                    "found on blacklisted slope"
                } else {
                    "missed"
                };
                failures.push(format!(
                    "N={chern} slope {}: {what}",
                    format_rational(&sd.slope)
                ));
                if !found {
                    misses.push(format!(
                        "N={chern} slope {} ({})",
                        format_rational(&sd.slope),
                        out.notes.join("; ")
                    ));
                }
            }
            // components through the vertices (1,0), (0,1) for odd-odd negative slopes
            if chern == 2 && s1 % 2 != 0 && s2 % 2 != 0 && s2 > 0 {
                let one = Rational::from_integer(1.into());
                let zero = Rational::zero();
                for c in enumerate_components(&g).unwrap() {
                    if !(c.contains(&[one.clone(), zero.clone()])
                        || c.contains(&[zero.clone(), one.clone()]))
                    {
                        continue;
                    }
                    match component_index_residue_with(&path, &g, &table, &c, 2).unwrap() {
                        ResidueOutcome::Resolved { residue: 0, .. } => residues_checked += 1,
                        ResidueOutcome::Resolved { residue, k } => failures.push(format!(
                            "slope {}: residue {residue} at k = {k} on a vertex component",
                            format_rational(&sd.slope)
                        )),
                        ResidueOutcome::Unresolved { .. } => {}
                    }
                }
            }
        }
    }
    if residues_checked == 0 {
        failures.push("no vertex component residue was resolved".into());
    }
    let mut out = std::io::stdout().lock();
    for m in &misses {
        writeln!(out, "    bounded-search miss: {m}").unwrap();
    }
    drop(out);
    report(
        7,
        "dimension-four blacklist",
        &failures,
        &format!("{cases} searches at max_iterate 1e5, {} misses, {residues_checked} vertex residues = 0 mod 4", misses.len()),
    );
}

#[test]
fn criterion_8_crossing_oracle() {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut compared = 0;
    let mut degenerate = 0;
    for _ in 0..300 {
        let n = rng.gen_range(1..=3);
        let lams: Vec<Rational> = (0..n)
            .map(|_| loop {
                let q = rng.gen_range(1..=12);
                let p = rng.gen_range(-3 * q..=3 * q);
                if p != 0 {
                    break rat(p, q);
                }
            })
            .collect();
        let path = SymplecticPath::from_rationals(&lams);
        let f: Vec<f64> = lams.iter().map(|x| x.to_f64().unwrap()).collect();
        let oracle = crossing_indices(&f, 12);
        for k in 1..=12u64 {
            let exact = if path.is_degenerate(k) {
                None
            } else {
                Some(path.cz_index(k).unwrap())
            };
            if exact.is_none() {
                degenerate += 1;
            } else {
                compared += 1;
            }
            if exact != oracle[k as usize - 1] {
                failures.push(format!(
                    "{lams:?} k={k}: {exact:?} vs {:?}",
                    oracle[k as usize - 1]
                ));
            }
        }
    }
    report(
        8,
        "crossing oracle",
        &failures,
        &format!(
            "300 vectors, {compared} indices compared, {degenerate} degenerate iterates agreed"
        ),
    );
}

#[test]
fn criterion_9_chern_gate() {
    let mut failures = Vec::new();
    let basis = IrrationalBasis::new()
        .with_sqrt("a", rat_int(2))
        .unwrap()
        .with_sqrt("b", rat_int(3))
        .unwrap();
    let path = SymplecticPath::new(
        basis,
        vec![
            ExactAngle::term("a", rat(-1, 10)),
            ExactAngle::term("b", rat(-1, 10)),
        ],
    )
    .unwrap();
    for (chern, ok) in [(4u64, true), (5, false), (6, false)] {
        if check_chern_bound(2, chern) != ok {
            failures.push(format!("check_chern_bound(2, {chern})"));
        }
        let c = certify(
            &ProblemInstance::new(path.clone(), chern, 3)
                .unwrap()
                .with_max_iterate(5000),
        )
        .unwrap();
        let diag = c.diagnostics.iter().any(|d| d.contains(CHERN_DIAGNOSTIC));
        if c.chern_bound_ok != ok || diag == ok {
            failures.push(format!(
                "N = {chern}: chern_bound_ok {} diagnostic {diag}",
                c.chern_bound_ok
            ));
        }
        if !ok && c.conclusion != Conclusion::NoCertificate {
            failures.push(format!("N = {chern}: {}", c.conclusion.as_str()));
        }
        if ok && c.base_group.is_none() {
            failures.push(format!("N = {chern}: pipeline did not run"));
        }
    }
    if !check_chern_bound(1, 2) || check_chern_bound(1, 3) {
        failures.push("n = 1 bounds".into());
    }
    report(
        9,
        "chern gate",
        &failures,
        "N = 2n accepted, N > 2n rejected with diagnostic",
    );
}
