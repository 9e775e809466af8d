//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion
//! and fails if any criterion fails.

mod common;

use std::fmt::Debug;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_host, random_map_on, random_rose_map, random_word, word};
use upg_core::automorphism::Automorphism;
use upg_core::driver::{
    bounce_step, edge_bound, run, BounceOutcome, BounceState, EnlargeMode, Generator, KolchinConfig,
};
use upg_core::free_factor::{free_factor_support_of_words, Complexity, FreeFactorError, FreeFactorSystem, SupportSearch};
use upg_core::graph::{Graph, MarkedGraph};
use upg_core::growth::{classify_tree_growth, fit_query, sample_lengths, GrowthConfig, TreeGrowth};
use upg_core::linalg::IntMatrix;
use upg_core::subgroup::SubgroupGraph;
use upg_core::tree::{FixedSearch, Fixedness, SimplicialTree};
use upg_core::triangular::{TriangularError, TriangularMap};
use upg_core::word::{cyclic_words, CyclicWord, Word};
use upg_core::{rational, Rational};

type Outcome = Result<String, String>;

fn ok<T, E: Debug>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| format!("{e:?}"))
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn criterion(id: usize, name: &str, limit: Duration, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let res = body();
    let took = start.elapsed();
    let res = match res {
        Ok(d) if took > limit => Err(format!("{d}; took {took:?}, limit {limit:?}")),
        r => r,
    };
    let (tag, detail) = match &res {
        Ok(d) => ("PASS", d.clone()),
        Err(d) => ("FAIL", d.clone()),
    };
    println!("[{tag}] criterion {id:>2}: {name} ({:.3} s) {detail}", took.as_secs_f64());
    res.is_ok()
}

fn gen(rank: usize, images: &str, inverse: &str) -> Generator {
    Generator::new(Automorphism::parse(rank, images, inverse).unwrap())
}

fn nontrivial_groups(t: &SimplicialTree) -> Vec<SubgroupGraph> {
    t.vertex_groups().iter().filter(|g| !g.is_trivial()).cloned().collect()
}

fn single_twist() -> Outcome {
    let h = ok(Automorphism::parse(2, "a,ba", "a,bA"))?;
    let r = ok(run(2, vec![Generator::new(h.clone())], KolchinConfig::default()))?;
    let enlarge: Vec<&str> = r
        .history
        .iter()
        .filter(|e| e.outcome == "EnlargeFFS")
        .map(|e| e.detail.as_str())
        .collect();
    ensure(
        enlarge.len() == 1 && enlarge[0].starts_with("EdgeStabilizer witness a "),
        format!("enlargements {enlarge:?}"),
    )?;
    let expected = FreeFactorSystem::from_generators(2, &[vec![word("a")]]);
    ensure(r.system.same_as(&expected), "system is not {<a>}")?;
    let groups = nontrivial_groups(&r.fixed_tree);
    ensure(
        groups.len() == 1 && groups[0].is_conjugate(&SubgroupGraph::fold(2, &[word("a")])),
        "vertex group is not <a>",
    )?;
    let edges = r.fixed_tree.quotient_edges();
    ensure(edges.len() == 1, format!("{} quotient edges", edges.len()))?;
    ensure(edges[0].marking == word("b"), format!("edge marking {}", edges[0].marking))?;
    ensure(
        r.fixed_tree.is_fixed_by(&h, FixedSearch::default()).is_fixed(),
        "fixed tree not certified",
    )?;
    let m = r.graph.graph().edge_count();
    ensure(m == 2 && m <= edge_bound(2), format!("{m} edges"))?;
    let lift = ok(r.lifts[0].induced_automorphism())?;
    ensure(lift.same_outer_class(&h), "triangular lift in the wrong outer class")?;
    ensure(r.aut_lifts[0].same_outer_class(&h), "automorphism lift in the wrong outer class")?;
    Ok(format!("system {{<a>}}, loop b, {m} edges"))
}

fn shrinking_loop() -> Outcome {
    let gens = vec![gen(3, "a,ba,c", "a,bA,c"), gen(3, "a,b,Babc", "a,b,BAbc")];
    let autos: Vec<Automorphism> = gens.iter().map(|g| g.automorphism.clone()).collect();
    let config = KolchinConfig::default();

    // replay the bouncing loop, recording ℓ(b)/ℓ(bc) at each recorded snapshot
    let mut st = ok(BounceState::new(gens.clone(), FreeFactorSystem::trivial(3), config))?;
    let (b, bc) = (word("b"), word("bc"));
    let mut ratios: Vec<Option<Rational>> = Vec::new();
    let mut found = None;
    'cycles: for _ in 0..config.max_cycles {
        ensure(!st.fixed_by_all(), "fixed before the shrinking loop appeared")?;
        if ok(st.snapshot())? {
            let lb = ok(st.tree.translation_length(&b))?;
            let lbc = ok(st.tree.translation_length(&bc))?;
            ratios.push((!lbc.is_zero()).then(|| lb / lbc));
        }
        for i in 0..st.generators.len() {
            let out = bounce_step(&st, i);
            if let BounceOutcome::EnlargeFFS { mode, witness, .. } = &out {
                if *mode == EnlargeMode::ShrinkingLoop {
                    found = Some(witness.clone());
                    ok(st.apply(out))?;
                    break 'cycles;
                }
                ratios.clear();
            }
            if ok(st.apply(out))? {
                break;
            }
        }
    }
    let witness = found.ok_or("no shrinking loop detected")?;
    ensure(witness == vec![word("b")], format!("witness {witness:?}"))?;
    ensure(ratios.len() >= 3, format!("only {} snapshots", ratios.len()))?;
    let last: Vec<Rational> = ratios[ratios.len() - 3..]
        .iter()
        .map(|r| r.clone().ok_or("bc elliptic at a snapshot"))
        .collect::<Result<_, _>>()?;
    ensure(
        last[0] > last[1] && last[1] > last[2],
        format!("ratios {:?} not strictly decreasing", last.iter().map(|q| q.to_string()).collect::<Vec<_>>()),
    )?;

    let r = ok(run(3, gens, config))?;
    ensure(
        r.history.iter().any(|e| e.detail.starts_with("ShrinkingLoop witness b ")),
        "driver history lacks the shrinking loop",
    )?;
    let expected = FreeFactorSystem::from_generators(3, &[vec![word("a"), word("b")]]);
    ensure(r.system.same_as(&expected), "system is not {<a,b>}")?;
    let edges = r.fixed_tree.quotient_edges();
    ensure(
        edges.len() == 1 && edges[0].marking == word("c"),
        format!("quotient edges {edges:?}"),
    )?;
    ensure(
        autos.iter().all(|h| r.fixed_tree.is_fixed_by(h, FixedSearch::default()).is_fixed()),
        "fixed tree not certified",
    )?;
    let m = r.graph.graph().edge_count();
    ensure(m <= 3, format!("{m} edges"))?;
    for (lift, h) in r.lifts.iter().zip(&autos) {
        ensure(ok(lift.induced_automorphism())?.same_outer_class(h), "lift in the wrong outer class")?;
    }
    Ok(format!(
        "ratios {} > {} > {}, system {{<a,b>}}, loop c, {m} edges",
        last[0], last[1], last[2]
    ))
}

fn growth_exactness() -> Outcome {
    let h = ok(Automorphism::parse(2, "a,ba", "a,bA"))?;
    let tree = ok(SimplicialTree::free(MarkedGraph::standard_rose(2)))?;
    let samples = ok(sample_lengths(&tree, &h, &word("b"), 40))?;
    for (k, s) in samples.iter().enumerate() {
        ensure(*s == rational(k as i64 + 1, 1), format!("ℓ(h^{k}(b)) = {s}"))?;
    }
    let fit = ok(fit_query(&tree, &h, &word("b"), GrowthConfig::new(2)))?;
    ensure(
        fit.degree == 1 && fit.leading() == rational(1, 1) && fit.onset == 0,
        format!("fit {fit:?}"),
    )?;

    let h3 = ok(Automorphism::parse(3, "a,ba,cb", "a,bA,caB"))?;
    let tree3 = ok(SimplicialTree::free(MarkedGraph::standard_rose(3)))?;
    let samples = ok(sample_lengths(&tree3, &h3, &word("c"), 40))?;
    for (k, s) in samples.iter().enumerate() {
        let k = k as i64;
        ensure(*s == rational(2 + k * (k + 1), 2), format!("ℓ(h^{k}(c)) = {s}"))?;
    }
    let fit3 = ok(fit_query(&tree3, &h3, &word("c"), GrowthConfig::new(3)))?;
    ensure(
        fit3.degree == 2 && fit3.leading() == rational(1, 2),
        format!("fit {fit3:?}"),
    )?;
    Ok(format!("d=1 lead 1 k0=0; d=2 lead {}", fit3.leading()))
}

fn splitting() -> Outcome {
    let f = ok(TriangularMap::rose_with_suffixes(2, &["", "a"]))?;
    let omega = ok(f.host().word_to_loop(&word("bAAAAAAAAAAbaB")))?;
    let s = ok(f.split(&omega, 50))?;
    let pieces: Vec<String> = s.pieces.iter().map(|p| f.host().path_word(p).to_string()).collect();
    ensure(s.m == 10 && pieces == ["b", "baB"], format!("m={} pieces {pieces:?}", s.m))?;

    let g = ok(TriangularMap::rose_with_suffixes(3, &["", "a", "bA"]))?;
    let p = ok(g.host().word_to_loop(&word("cbA")))?;
    match g.split(&p, 50) {
        Err(TriangularError::NoSplitWithinBound { m_max: 50 }) => {}
        other => return Err(format!("non-UR split gave {other:?}")),
    }
    Ok("m=10 pieces b·baB; non-UR NoSplitWithinBound(50)".into())
}

fn bcc_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let radius = rational(8, 1);
    let mut equal = 0;
    let mut max_gap = Rational::from_integer(0.into());
    for i in 0..50 {
        let rank = rng.gen_range(1..=3);
        let f = random_rose_map(&mut rng, rank, 3);
        let (brute, bound) = f.bcc_gap(&radius);
        ensure(brute <= bound, format!("map {i}: brute force {brute} > bound {bound}"))?;
        let gap = &bound - &brute;
        if gap.is_zero() {
            equal += 1;
        }
        if gap > max_gap {
            max_gap = gap;
        }
    }
    Ok(format!("50 maps, {equal} with equality, max gap {max_gap}"))
}

fn group_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut maps = 0;
    while maps < 200 {
        let (host, filt) = random_host(&mut rng, 5);
        let f = random_map_on(&mut rng, &host, &filt, 3);
        let g = random_map_on(&mut rng, &host, &filt, 3);
        let k = random_map_on(&mut rng, &host, &filt, 3);
        for m in [&f, &g, &k] {
            let inv = m.invert();
            ensure(ok(m.compose(&inv))?.is_identity(), format!("f∘f⁻¹ ≠ id for {m:?}"))?;
            ensure(ok(inv.compose(m))?.is_identity(), format!("f⁻¹∘f ≠ id for {m:?}"))?;
        }
        let left = ok(ok(f.compose(&g))?.compose(&k))?;
        let right = ok(f.compose(&ok(g.compose(&k))?))?;
        ensure(left == right, "composition not associative")?;
        maps += 3;
    }
    Ok(format!("{maps} maps, {} triples", maps / 3))
}

fn int_matrix(rows: Vec<Vec<i64>>) -> IntMatrix {
    IntMatrix::from_rows(&rows).unwrap()
}

fn random_gl<R: Rng>(rng: &mut R, n: usize) -> IntMatrix {
    let mut p = IntMatrix::identity(n);
    for _ in 0..6 {
        let i = rng.gen_range(0..n);
        let j = (i + rng.gen_range(1..n)) % n;
        let mut e = vec![vec![0i64; n]; n];
        for (d, row) in e.iter_mut().enumerate() {
            row[d] = 1;
        }
        e[i][j] = if rng.gen_bool(0.5) { 1 } else { -1 };
        p = p.mul(&int_matrix(e));
    }
    p
}

fn random_unitriangular<R: Rng>(rng: &mut R, n: usize, step: i64) -> Vec<Vec<i64>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match i.cmp(&j) {
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Less => step * rng.gen_range(-2..=2),
                    std::cmp::Ordering::Greater => 0,
                })
                .collect()
        })
        .collect()
}

fn vectors(n: usize) -> Vec<Vec<BigInt>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|v| {
                (-2..=2).map(move |x| {
                    let mut w = v.clone();
                    w.push(BigInt::from(x));
                    w
                })
            })
            .collect();
    }
    out
}

fn unipotence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut periodic, mut rejected) = (0, 0);
    for i in 0..200 {
        let n = rng.gen_range(2..=3);
        let p = random_gl(&mut rng, n);
        let pinv = p.inverse_unimodular().ok_or("generated matrix not invertible")?;
        let u = int_matrix(random_unitriangular(&mut rng, n, 1));
        let m = p.mul(&u).mul(&pinv);
        ensure(m.is_unipotent(), format!("sample {i}: conjugate of unitriangular rejected"))?;
        let q = ok(m.unipotent_basis())?;
        let qinv = q.inverse_unimodular().ok_or("basis not unimodular")?;
        ensure(
            qinv.mul(&m).mul(&q).is_upper_unitriangular(),
            format!("sample {i}: basis does not triangularize"),
        )?;

        // negative sample: flip one diagonal entry
        let mut d = random_unitriangular(&mut rng, n, 1);
        let k = rng.gen_range(0..n);
        d[k][k] = -1;
        let neg = p.mul(&int_matrix(d)).mul(&pinv);
        ensure(
            !neg.is_unipotent() && neg.unipotent_basis().is_err(),
            format!("sample {i}: non-unipotent accepted"),
        )?;
        rejected += 1;

        for v in vectors(n) {
            let mut x = m.mul_vec(&v);
            let mut is_periodic = x == v;
            for _ in 2..=6 {
                x = m.mul_vec(&x);
                is_periodic |= x == v;
            }
            if is_periodic {
                periodic += 1;
                ensure(m.mul_vec(&v) == v, format!("sample {i}: periodic vector moved"))?;
            }
        }

        let u3 = int_matrix(random_unitriangular(&mut rng, n, 3));
        let m3 = p.mul(&u3).mul(&pinv);
        ensure(
            m3.trivial_mod3() && m3.is_unipotent(),
            format!("sample {i}: mod 3 trivial conjugate failed"),
        )?;
    }
    Ok(format!("200 samples, {rejected} negatives rejected, {periodic} periodic vectors fixed"))
}

fn random_visible<R: Rng>(rng: &mut R, rank: usize) -> FreeFactorSystem {
    let mut blocks: Vec<Vec<Word>> = vec![Vec::new(); 3];
    for g in 0..rank {
        let b = rng.gen_range(0..=3);
        if b < 3 {
            blocks[b].push(Word::generator(g));
        }
    }
    let blocks: Vec<Vec<Word>> = blocks
        .into_iter()
        .filter(|b| !b.is_empty() && b.len() < rank)
        .map(|b| {
            let c = random_word(rng, rank, 2);
            b.iter().map(|x| x.conjugate_by(&c)).collect()
        })
        .collect();
    FreeFactorSystem::from_generators(rank, &blocks)
}

fn free_factor_calculus() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..60 {
        let s = random_visible(&mut rng, 4);
        let t = random_visible(&mut rng, 4);
        let m = s.meet(&t);
        let bound = s.complexity().min(t.complexity());
        ensure(m.complexity() <= bound, format!("sample {i}: meet complexity above min"))?;
        ensure(m.is_carried_by(&s) && m.is_carried_by(&t), format!("sample {i}: meet not carried"))?;
    }
    let search = SupportSearch::default();
    match free_factor_support_of_words(2, &[CyclicWord::new(&word("abAB"))], search) {
        Err(FreeFactorError::SupportIsWholeGroup) => {}
        other => return Err(format!("support(abAB) = {other:?}")),
    }
    let s = ok(free_factor_support_of_words(2, &[CyclicWord::new(&word("ab"))], search))?;
    ensure(s.complexity() == Complexity(vec![1]), format!("support(ab) complexity {:?}", s.complexity()))?;
    Ok("60 meets, support(abAB) = F_2, support(ab) complexity (1)".into())
}

fn periodic_classes() -> Outcome {
    let h = ok(Automorphism::parse(2, "a,ba", "a,bA"))?;
    let (mut total, mut periodic) = (0, 0);
    for w in cyclic_words(2, 6) {
        total += 1;
        let mut x = w.clone();
        let mut period = None;
        for k in 1..=6 {
            x = h.apply_to_class(&x);
            if x == w {
                period = Some(k);
                break;
            }
        }
        if period.is_some() {
            periodic += 1;
            ensure(h.apply_to_class(&w) == w, format!("{} periodic but moved", w.to_word()))?;
        }
    }
    Ok(format!("{total} classes, {periodic} periodic, all fixed"))
}

fn non_grower_not_fixed() -> Outcome {
    // centre 0 carrying the collapsed a-loop, legs 0→i, loops b_i at i
    let graph = ok(Graph::new(
        4,
        &[(0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (2, 2), (3, 3)],
    ))?;
    let labels = vec![
        word("a"),
        Word::identity(),
        Word::identity(),
        Word::identity(),
        word("b"),
        word("c"),
        word("d"),
    ];
    let host = ok(MarkedGraph::new(graph, 4, 0, &[1, 2, 3], labels))?;
    let mut collapsed = vec![false; 7];
    collapsed[0] = true;
    let tree = ok(SimplicialTree::new(host, collapsed))?;
    let f = ok(TriangularMap::rose_with_suffixes(4, &["", "a", "a", "a"]))?;
    let phi = ok(f.induced_automorphism())?;
    let growth = ok(classify_tree_growth(&tree, &f, GrowthConfig::new(4)))?;
    ensure(growth == TreeGrowth::NonGrower, format!("classified {growth:?}"))?;
    match tree.is_fixed_by(&phi, FixedSearch::default()) {
        Fixedness::Refuted { witness, before, after } => Ok(format!(
            "NonGrower; ℓ({witness}) = {before} but ℓ(φ({witness})) = {after}"
        )),
        other => Err(format!("fixedness {other:?}")),
    }
}

#[test]
fn acceptance() {
    let s = Duration::from_secs;
    let results = [
        criterion(1, "single Dehn twist end to end", s(1), single_twist),
        criterion(2, "shrinking loop pair end to end", s(5), shrinking_loop),
        criterion(3, "growth exactness", s(5), growth_exactness),
        criterion(4, "splitting example", s(5), splitting),
        criterion(5, "bounded cancellation soundness", s(30), bcc_soundness),
        criterion(6, "triangular group laws", s(30), group_laws),
        criterion(7, "unipotence suite", s(30), unipotence),
        criterion(8, "free factor calculus", s(30), free_factor_calculus),
        criterion(9, "periodic classes are fixed", s(30), periodic_classes),
        criterion(10, "non-grower that is not fixed", s(30), non_grower_not_fixed),
    ];
    let passed = results.iter().filter(|&&r| r).count();
    println!("{passed}/{} criteria passed", results.len());
    assert_eq!(passed, results.len());
}
