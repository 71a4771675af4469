//! Acceptance criteria 1–9. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::HashSet;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use focal_core::boundary::{
    action_type, busemann_quasicharacter, isometry_type, schottky_semigroup_check,
    translation_number, ActionType, IsometryType,
};
use focal_core::groups::{ConfinedGroup, LampConfig, Lamplighter, NAdic, Window};
use focal_core::metric::{four_point_delta_with, DeltaMode, HalfInt};
use focal_core::trees::{
    millefeuille, regular_tree_ball, tree_act, tree_ball, tree_distance, tree_qi_probe,
    tree_transitivity_witness, BusemannGraph, TreeVertex,
};
use focal_core::word::{
    ball_points, bfs_oracle, distortion_check, BallSampler, DistortionMode, GroupPoint, Letter,
    Word, WordMetric,
};

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

const SEED: u64 = 20_240_601;
const DELTA_TIME_LIMIT: Duration = Duration::from_secs(120);

fn lamplighter() -> WordMetric<Lamplighter> {
    WordMetric::new(Lamplighter::new(2).unwrap()).unwrap()
}

fn dyadic() -> WordMetric<NAdic> {
    WordMetric::new(NAdic::new(2).unwrap()).unwrap()
}

/// `δ ≤ 16·log₂(n0 + 2)` decided in integers: `2^{2δ} ≤ (n0 + 2)^32`.
fn under_bound(delta: HalfInt, n0: u32) -> bool {
    let lhs = 1u128.checked_shl(delta.twice() as u32).unwrap_or(u128::MAX);
    lhs <= (n0 as u128 + 2).pow(32)
}

fn delta_of_ball<G: ConfinedGroup>(
    w: &WordMetric<G>,
    window: Window,
) -> std::result::Result<(HalfInt, usize, Duration), String> {
    let t = Instant::now();
    let ball = ball_points(w, 6, &BallSampler::ExhaustiveWindowed { window })
        .map_err(|e| e.to_string())?;
    let r = four_point_delta_with(&ball.matrix, DeltaMode::Exhaustive);
    Ok((r.delta, r.n_points, t.elapsed()))
}

fn c1_delta_bound() -> Check {
    let mut out = Vec::new();
    for (name, res, n0) in [
        (
            "lamplighter q=2",
            delta_of_ball(&lamplighter(), Window::new(-2, 2, 0)),
            0,
        ),
        (
            "n-adic n=2",
            delta_of_ball(&dyadic(), Window::new(-4, 4, 2)),
            1,
        ),
    ] {
        let (delta, n, took) = res?;
        ensure!(
            under_bound(delta, n0),
            "{name}: δ = {delta} exceeds 16·log₂({})",
            n0 + 2
        );
        ensure!(took < DELTA_TIME_LIMIT, "{name}: took {took:?}");
        out.push(format!(
            "{name}: δ = {delta} on {n} points in {:.1}s",
            took.as_secs_f64()
        ));
    }
    Ok(out.join("; "))
}

fn oracle_agreement<G: ConfinedGroup>(w: &WordMetric<G>, window: Window, radius: u32) -> Check {
    let report = bfs_oracle(w.group(), &window, radius).map_err(|e| e.to_string())?;
    ensure!(!report.truncated, "BFS truncated");
    let mut checked = 0;
    for e in report.entries.iter().filter(|e| e.trusted) {
        let len = w.word_length(&e.point).map_err(|e| e.to_string())?;
        ensure!(
            len == e.distance as u64,
            "{}: closed form {len} vs BFS {}",
            w.format_point(&e.point),
            e.distance
        );
        checked += 1;
    }
    ensure!(checked > 0, "no trusted entries");
    Ok(format!("{checked}/{} trusted agree", report.entries.len()))
}

fn c2_oracle() -> Check {
    let a = oracle_agreement(&lamplighter(), Window::new(-3, 3, 0), 5)?;
    let b = oracle_agreement(&dyadic(), Window::new(-4, 4, 4), 6)?;
    Ok(format!(
        "lamplighter [-3,3] r5: {a}; n-adic [-4,4]/2^4 r6: {b}"
    ))
}

/// `⌈4·log₂(n0 + 2)⌉`.
fn k0_reference(n0: u32) -> usize {
    (4.0 * (n0 as f64 + 2.0).log2()).ceil() as usize
}

fn nf_suite<G: ConfinedGroup>(w: &WordMetric<G>, rng: &mut ChaCha8Rng, gens: &[G::Elem]) -> Check {
    let k0 = k0_reference(w.group().n0());
    let mut max_k = 0;
    for _ in 0..10_000 {
        let len = rng.gen_range(0..=10);
        let letters: Vec<Letter<G::Elem>> = (0..len)
            .map(|_| match rng.gen_range(0..3) {
                0 => Letter::AlphaPlus,
                1 => Letter::AlphaMinus,
                _ => Letter::Gen(gens.choose(rng).unwrap().clone()),
            })
            .collect();
        let word = Word::new(letters);
        let x = w.evaluate(&word).map_err(|e| e.to_string())?;
        let nf = w.rewrite_to_normal_form(&word).map_err(|e| e.to_string())?;
        ensure!(
            w.evaluate_normal_form(&nf) == x,
            "rewrite changed {}",
            w.format_word(&word)
        );
        ensure!(
            nf.len() <= word.len() as u64,
            "rewrite lengthened {}",
            w.format_word(&word)
        );
        let geo = w.geodesic_normal_form(&x).map_err(|e| e.to_string())?;
        ensure!(
            w.evaluate_normal_form(&geo) == x,
            "bad witness for {}",
            w.format_point(&x)
        );
        ensure!(geo.k() <= k0, "witness k = {} > k₀ = {k0}", geo.k());
        max_k = max_k.max(geo.k());
    }
    Ok(format!("10⁴ words, max k = {max_k} ≤ k₀ = {k0}"))
}

fn c3_normal_forms() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let ll = lamplighter();
    let lg = ll.group().windowed_a(&Window::new(-4, 4, 0)).unwrap();
    let a = nf_suite(&ll, &mut rng, &lg)?;
    let dy = dyadic();
    let dg = dy.group().windowed_a(&Window::new(-4, 4, 3)).unwrap();
    let b = nf_suite(&dy, &mut rng, &dg)?;
    Ok(format!("lamplighter: {a}; n-adic: {b}"))
}

fn c4_distortion() -> Check {
    let ll = lamplighter();
    let r = distortion_check(
        &ll,
        3,
        DistortionMode::Exhaustive {
            window: Window::new(-4, 4, 0),
            max_elements: 1 << 20,
        },
    )
    .map_err(|e| e.to_string())?;
    ensure!(r.passed, "lamplighter violations: {:?}", r.levels);
    ensure!(
        r.levels.iter().all(|l| !l.incomplete),
        "lamplighter enumeration capped"
    );
    let dy = dyadic();
    let d = distortion_check(
        &dy,
        3,
        DistortionMode::Random {
            window: Window::new(-4, 4, 3),
            samples: 1000,
            seed: SEED,
        },
    )
    .map_err(|e| e.to_string())?;
    ensure!(d.passed, "n-adic violations: {:?}", d.levels);
    ensure!(
        d.levels.iter().all(|l| l.checked == 1000),
        "n-adic sample count"
    );
    let worst: Vec<String> = d
        .levels
        .iter()
        .map(|l| format!("m={}: max {} ≤ {}", l.m, l.max_length, l.bound))
        .collect();
    Ok(format!(
        "lamplighter exhaustive ok; n-adic 10³ products/level ({})",
        worst.join(", ")
    ))
}

/// `h(1, g) = d(g, α^{-N}) − d(1, α^{-N})` for `N` far beyond `|g|`.
fn horokernel_reference<G: ConfinedGroup>(w: &WordMetric<G>, g: &GroupPoint<G::Elem>) -> i64 {
    let n = 4 * w.word_length(g).unwrap() as i64 + 64;
    let far = w.alpha_power(-n);
    w.distance(g, &far).unwrap() as i64 - w.distance(&w.identity(), &far).unwrap() as i64
}

fn busemann_suite<G: ConfinedGroup>(
    w: &WordMetric<G>,
    samples: &[GroupPoint<G::Elem>],
    delta: HalfInt,
) -> std::result::Result<Ratio<i64>, String> {
    let beta = |g: &GroupPoint<G::Elem>| {
        busemann_quasicharacter(w, g, 16)
            .map(|q| q.value)
            .map_err(|e| e.to_string())
    };
    ensure!(
        beta(&w.alpha_power(1))? == Ratio::from_integer(1),
        "β(α) ≠ 1"
    );
    let bound = Ratio::new(2 * delta.twice() + 4, 2); // 2δ + 2
    let mut worst = Ratio::from_integer(0);
    for g in samples {
        let b = beta(g)?;
        if g.m == 0 {
            ensure!(
                b == Ratio::from_integer(0),
                "β ≠ 0 on H at {}",
                w.format_point(g)
            );
        }
        let off = b - Ratio::from_integer(horokernel_reference(w, g));
        let off = if off < Ratio::from_integer(0) {
            -off
        } else {
            off
        };
        ensure!(
            off <= bound,
            "|β − h(1,g)| = {off} > {bound} at {}",
            w.format_point(g)
        );
        worst = worst.max(off);
        for n in -8i64..=8 {
            ensure!(
                beta(&w.pow(g, n))? == b * n,
                "β(gⁿ) ≠ nβ(g) for n = {n} at {}",
                w.format_point(g)
            );
        }
    }
    Ok(worst)
}

fn c5_busemann() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let ll = lamplighter();
    let lsamples: Vec<_> = (0..1000)
        .map(|i| {
            let pairs: Vec<(i64, i64)> = (0..rng.gen_range(0..4))
                .map(|_| (rng.gen_range(-4..=4), 1))
                .collect();
            // every fourth sample lies in H
            let m = if i % 4 == 0 { 0 } else { rng.gen_range(-4..=4) };
            GroupPoint::new(LampConfig::from_pairs(2, pairs), m)
        })
        .collect();
    let (ld, _, _) = delta_of_ball(&ll, Window::new(-2, 2, 0))?;
    let a = busemann_suite(&ll, &lsamples, ld)?;
    let dy = dyadic();
    let dsamples: Vec<_> = (0..1000)
        .map(|i| {
            let h = dy
                .group()
                .make(rng.gen_range(-64i64..=64), rng.gen_range(0..3));
            let m = if i % 4 == 0 { 0 } else { rng.gen_range(-4..=4) };
            GroupPoint::new(h, m)
        })
        .collect();
    let (dd, _, _) = delta_of_ball(&dy, Window::new(-4, 4, 2))?;
    let b = busemann_suite(&dy, &dsamples, dd)?;
    Ok(format!(
        "β(α)=1, β|H=0, homogeneous |n|≤8; max |β−h(1,g)|: lamplighter {a} (δ = {ld}), n-adic {b} (δ = {dd})"
    ))
}

/// `n|m| ≤ |gⁿ| ≤ n|m| + 2|g|` for `n ≤ 64`, so `|g^64|/64 → |m|`.
fn translation_suite<G: ConfinedGroup>(
    w: &WordMetric<G>,
    samples: &[GroupPoint<G::Elem>],
) -> Check {
    for g in samples {
        let v = isometry_type(w, g, 8).map_err(|e| e.to_string())?;
        ensure!(
            v.kind == IsometryType::Hyperbolic,
            "{} is {:?}",
            w.format_point(g),
            v.kind
        );
        let m = g.m.unsigned_abs();
        let len = w.word_length(g).unwrap();
        let mut p = w.identity();
        for n in 1..=64u64 {
            p = w.mul(&p, g);
            let l = w.word_length(&p).unwrap();
            ensure!(
                n * m <= l && l <= n * m + 2 * len,
                "|g^{n}| = {l} outside [{}, {}] for {}",
                n * m,
                n * m + 2 * len,
                w.format_point(g)
            );
        }
        let t = translation_number(w, g, 64).map_err(|e| e.to_string())?;
        ensure!(t.exact == Some(m), "τ reported {:?}, expected {m}", t.exact);
        ensure!(
            t.estimate >= Ratio::from_integer(m as i64)
                && t.estimate <= Ratio::new((64 * m + 2 * len) as i64, 64),
            "estimate {} inconsistent with τ = {m}",
            t.estimate
        );
    }
    Ok(String::new())
}

fn c6_classification() -> Check {
    let ll = lamplighter();
    let lamp = ll.h_point(LampConfig::delta(0));
    let k = isometry_type(&ll, &lamp, 8)
        .map_err(|e| e.to_string())?
        .kind;
    ensure!(k == IsometryType::Elliptic, "lamp is {k:?}");
    let dy = dyadic();
    let unit = dy.h_point(dy.group().int(1));
    let k = isometry_type(&dy, &unit, 8)
        .map_err(|e| e.to_string())?
        .kind;
    ensure!(k == IsometryType::Parabolic, "n-adic unit is {k:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let nonzero_m = |rng: &mut ChaCha8Rng| {
        let m: i64 = rng.gen_range(1..=3);
        if rng.gen() {
            m
        } else {
            -m
        }
    };
    let ls: Vec<_> = (0..40)
        .map(|_| {
            let pairs: Vec<(i64, i64)> = (0..3)
                .map(|_| (rng.gen_range(-3..=3), rng.gen_range(0..2)))
                .collect();
            GroupPoint::new(LampConfig::from_pairs(2, pairs), nonzero_m(&mut rng))
        })
        .collect();
    translation_suite(&ll, &ls)?;
    for n in [2u32, 3, 10, 64] {
        let w = WordMetric::new(NAdic::new(n).unwrap()).unwrap();
        let ds: Vec<_> = (0..20)
            .map(|_| {
                let h = w
                    .group()
                    .make(rng.gen_range(-100i64..=100), rng.gen_range(0..3));
                GroupPoint::new(h, nonzero_m(&mut rng))
            })
            .collect();
        translation_suite(&w, &ds)?;
    }

    let horizon = 8;
    let one = HalfInt::from_int(1);
    let kind = |v: focal_core::Result<focal_core::boundary::ActionVerdict>| {
        v.map(|v| v.kind).map_err(|e| e.to_string())
    };
    let horo = kind(action_type(
        &dy,
        std::slice::from_ref(&unit),
        horizon,
        HalfInt::from_twice(3),
    ))?;
    ensure!(horo == ActionType::Horocyclic, "n-adic ⟨1⟩ is {horo:?}");
    let alpha = ll.alpha_power(1);
    let lineal = kind(action_type(&ll, std::slice::from_ref(&alpha), horizon, one))?;
    ensure!(lineal == ActionType::Lineal, "⟨α⟩ is {lineal:?}");
    let focal = kind(action_type(&ll, &[alpha, lamp], horizon, one))?;
    ensure!(focal == ActionType::Focal, "⟨α, δ₀⟩ is {focal:?}");
    let dfocal = kind(action_type(
        &dy,
        &[dy.alpha_power(1), unit],
        horizon,
        HalfInt::from_twice(3),
    ))?;
    ensure!(dfocal == ActionType::Focal, "n-adic ⟨α, 1⟩ is {dfocal:?}");
    Ok("lamp Elliptic, unit Parabolic, m≠0 Hyperbolic with τ=|m| (n≤64 powers; n-adic n∈{2,3,10,64}); ⟨1⟩ Horocyclic, ⟨α⟩ Lineal, ⟨α,δ₀⟩ Focal at L=8".into())
}

fn random_vertex(rng: &mut ChaCha8Rng, q: u32) -> TreeVertex {
    let n = rng.gen_range(-4..=4);
    let pairs: Vec<(i64, i64)> = (0..4)
        .map(|_| (rng.gen_range(n - 6..n), rng.gen_range(0..q as i64)))
        .collect();
    TreeVertex::new(n, LampConfig::from_pairs(q, pairs))
}

fn random_point(rng: &mut ChaCha8Rng, q: u32) -> GroupPoint<LampConfig> {
    let pairs: Vec<(i64, i64)> = (0..4)
        .map(|_| (rng.gen_range(-5..=5), rng.gen_range(0..q as i64)))
        .collect();
    GroupPoint::new(LampConfig::from_pairs(q, pairs), rng.gen_range(-5..=5))
}

fn regular(g: &BusemannGraph, degree: usize) -> bool {
    let s = g.stats();
    s.interior_degrees.len() == 1
        && s.interior_degrees[0].0 == degree
        && g.level_violation().is_none()
}

fn c7_trees() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let mut balls = 0;
    for q in [2u32, 3, 5] {
        let g = Lamplighter::new(q).unwrap();
        ensure!(
            g.compaction_index().unwrap() == q as u64,
            "compaction index of q={q}"
        );
        let mut centers = vec![TreeVertex::root()];
        centers.extend((0..4).map(|_| random_vertex(&mut rng, q)));
        for c in &centers {
            let radius = if q == 5 { 3 } else { 4 };
            let b = tree_ball(&g, c, radius);
            ensure!(
                regular(&b, q as usize + 1),
                "ball around {c} is not {}-regular",
                q + 1
            );
            balls += 1;
        }
    }
    for n in [2u32, 3, 7] {
        ensure!(
            NAdic::new(n).unwrap().compaction_index().unwrap() == n as u64,
            "compaction index of n={n}"
        );
    }
    let g = Lamplighter::new(2).unwrap();
    for _ in 0..1000 {
        let x = random_point(&mut rng, 2);
        let v = random_vertex(&mut rng, 2);
        let gv = tree_act(&g, &x, &v);
        ensure!(
            gv.level() == v.level() - x.m,
            "b′(g·v) ≠ b′(v) − m(g) for {v}"
        );
    }
    for _ in 0..100 {
        let (v, u) = (random_vertex(&mut rng, 2), random_vertex(&mut rng, 2));
        let x = tree_transitivity_witness(&g, &v, &u);
        ensure!(tree_act(&g, &x, &v) == u, "witness fails for {v} → {u}");
    }
    let w = lamplighter();
    let powers: Vec<_> = (0..=12).map(|n| w.alpha_power(n)).collect();
    let qi = tree_qi_probe(&w, &powers).map_err(|e| e.to_string())?;
    ensure!(
        qi.multiplicative_constant == Ratio::from_integer(1)
            && qi.additive_constant == Ratio::from_integer(0),
        "αⁿ is not isometric on the axis: {qi:?}"
    );
    for a in w.group().windowed_a(&Window::new(-4, 4, 0)).unwrap() {
        let v = tree_act(w.group(), &w.h_point(a), &TreeVertex::root());
        ensure!(
            tree_distance(&TreeVertex::root(), &v) <= 2,
            "A moves v₀ to {v}"
        );
    }
    Ok(format!(
        "{balls} balls (q+1)-regular; 10³ equivariance, 10² witnesses; compaction index = q, n"
    ))
}

fn line_times_tree() -> Check {
    let radius = 3;
    let line = regular_tree_ball(1, radius).unwrap();
    let t = regular_tree_ball(2, radius).unwrap();
    let m = millefeuille(&line, &t).map_err(|e| e.to_string())?;
    ensure!(m.len() == t.len(), "{} vertices vs {}", m.len(), t.len());
    ensure!(m.edge_count() == t.edge_count(), "edge counts differ");
    let t_index = |id: &str| t.ids().iter().position(|x| x == id);
    let proj: Vec<usize> = m
        .ids()
        .iter()
        .map(|id| {
            let inner = id
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .unwrap();
            t_index(inner.split_once(", ").unwrap().1).unwrap()
        })
        .collect();
    ensure!(
        proj.iter().collect::<HashSet<_>>().len() == t.len(),
        "projection is not a bijection"
    );
    for u in 0..m.len() {
        for &v in m.neighbors(u) {
            ensure!(
                t.neighbors(proj[u]).contains(&proj[v]),
                "edge not preserved"
            );
        }
    }
    Ok("line × T ≅ T".into())
}

fn c8_millefeuille() -> Check {
    let a = line_times_tree()?;
    let mut out = vec![a];
    for (p, q) in [(1u32, 2u32), (2, 2), (2, 3)] {
        let x = regular_tree_ball(p, 3).unwrap();
        let t = regular_tree_ball(q, 3).unwrap();
        let m = millefeuille(&x, &t).map_err(|e| e.to_string())?;
        let want = (p * q + 1) as usize;
        ensure!(
            regular(&m, want),
            "({p},{q}): interior degrees {:?}",
            m.stats().interior_degrees
        );
        let d = four_point_delta_with(
            &m.distance_matrix().map_err(|e| e.to_string())?,
            DeltaMode::Exhaustive,
        );
        ensure!(d.delta == HalfInt::ZERO, "({p},{q}): δ = {}", d.delta);
        out.push(format!(
            "({p},{q}): degree {want}, δ = 0 on {} vertices",
            m.len()
        ));
    }
    Ok(out.join("; "))
}

fn c9_schottky() -> Check {
    let w = lamplighter();
    let a = w.alpha_power(1);
    let b = w.mul(&a, &w.h_point(LampConfig::delta(0)));
    let r = schottky_semigroup_check(&w, &a, &b, 10).map_err(|e| e.to_string())?;
    ensure!(r.words == (1 << 11) - 1, "enumerated {} words", r.words);
    ensure!(r.injective, "(α, αδ₀) not injective: {:?}", r.witnesses);
    ensure!(r.accepted, "(α, αδ₀) not accepted");
    let bad = schottky_semigroup_check(
        &w,
        &w.h_point(LampConfig::delta(0)),
        &w.h_point(LampConfig::delta(1)),
        10,
    )
    .map_err(|e| e.to_string())?;
    ensure!(!bad.accepted, "(δ₀, δ₁) accepted");
    Ok(format!(
        "(α, αδ₀): {} words injective, λ = {}, c = {}; (δ₀, δ₁) rejected",
        r.words, r.qi.multiplicative_constant, r.qi.additive_constant
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("δ bound", c1_delta_bound),
        ("oracle equivalence", c2_oracle),
        ("normal forms", c3_normal_forms),
        ("distortion inclusion", c4_distortion),
        ("Busemann character", c5_busemann),
        ("classification", c6_classification),
        ("tree suite", c7_trees),
        ("millefeuille", c8_millefeuille),
        ("Schottky subsemigroup", c9_schottky),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let label = format!("{} {name}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let res = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(format!("panic: {p:?}")));
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("PASS [{label}] ({secs:.1}s) {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL [{label}] ({secs:.1}s) {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
