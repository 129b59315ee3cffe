use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use fwdlab_core::arbiterize::{arbiter_context, arbiterize};
use fwdlab_core::coherence::check_coherence;
use fwdlab_core::dynamics::{compose_typed, normalize};
use fwdlab_core::globalize::extract_global;
use fwdlab_core::logic_cll::{check_cll, dual, erase_context};
use fwdlab_core::logic_sync::{check_sync, check_sync_runtime, SyncError};
use fwdlab_core::oracle::{
    enumerate_instances, instance_context, random_arbiter_composition, random_global_type, random_instance,
    random_prop, search_sync,
};
use fwdlab_core::surface::{parse_context, parse_global_type, parse_process};
use fwdlab_core::terms::{Context, GlobalType, Name, Process};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn data(name: &str) -> String {
    let path = format!("{}/tests/data/{}", env!("CARGO_MANIFEST_DIR"), name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {}", path, e))
}

fn unprime(g: &GlobalType) -> GlobalType {
    let map = g.free_names().into_iter().map(|n| (n.clone(), Name::new(n.as_str().trim_end_matches('\'')))).collect();
    g.rename(&map)
}

/// Judgements accepted by the synchronous checker, re-checked classically in criterion 6.
type Accepted = Vec<(Process, Context)>;

fn within(start: Instant, limit: Duration, what: &str) {
    let took = start.elapsed();
    assert!(took < limit, "{} took {:?}, limit {:?}", what, took, limit);
}

fn duality() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let a = random_prop(&mut rng, 8, &["a", "b", "c", "d"]);
        assert!(a.depth() <= 8);
        assert_eq!(dual(&dual(&a)), a);
    }
    within(start, Duration::from_secs(1), "duality");
}

fn two_buyer(accepted: &mut Accepted) {
    let start = Instant::now();
    let g = parse_global_type(&data("twobuyer.gt")).unwrap();
    let delta = parse_context(&data("twobuyer_delta.llp")).unwrap();
    check_coherence(&g, &delta).unwrap();
    let p1 = parse_process(&data("p1.fwd")).unwrap();
    let arb = arbiterize(&g);
    assert!(arb.alpha_eq(&p1), "arbiter differs from P1");
    let ctx = arbiter_context(&delta);
    assert_eq!(ctx, parse_context(&data("p1.llp")).unwrap());
    check_sync(&p1, &ctx).unwrap();
    accepted.push((p1.clone(), ctx.clone()));
    let back = extract_global(&p1, &ctx).unwrap();
    assert!(unprime(&back).eq_modulo_order(&g), "globalize gave {}", back);
    within(start, Duration::from_secs(1), "two-buyer suite");
}

fn composition(accepted: &mut Accepted) {
    let start = Instant::now();
    let p1 = parse_process(&data("p1.fwd")).unwrap();
    let p2 = parse_process(&data("p2.fwd")).unwrap();
    let c1 = parse_context(&data("p1.llp")).unwrap();
    let c2 = parse_context(&data("p2.llp")).unwrap();
    let (t, ctx) = compose_typed(&p1, &c1, &Name::new("b2'"), &p2, &c2, &Name::new("b2''")).unwrap();
    assert_eq!(ctx, parse_context(&data("composed.llp")).unwrap());
    check_sync_runtime(&t, &ctx).unwrap();
    accepted.push((t.clone(), ctx.clone()));
    let trace = normalize(&t, 10_000).unwrap();
    for s in &trace.steps {
        check_sync_runtime(&s.after, &ctx).unwrap_or_else(|e| panic!("{}: {}", s.line(), e));
        accepted.push((s.after.clone(), ctx.clone()));
    }
    assert!(!trace.result.has_cut());
    check_sync(&trace.result, &ctx).unwrap();
    assert!(trace.steps.len() < 200, "{} steps", trace.steps.len());
    within(start, Duration::from_secs(2), "composition");
}

fn generated_pairs() -> Vec<(GlobalType, Context)> {
    (0..500u64).map(|i| random_global_type(1000 + i, 2 + (i as usize % 7))).collect()
}

fn soundness(accepted: &mut Accepted) {
    let start = Instant::now();
    for (g, delta) in generated_pairs() {
        let p = arbiterize(&g);
        let ctx = arbiter_context(&delta);
        check_sync(&p, &ctx).unwrap_or_else(|e| panic!("arbiter of {} rejected: {}", g, e));
        accepted.push((p, ctx));
    }
    within(start, Duration::from_secs(30), "soundness");
}

fn round_trip() {
    let start = Instant::now();
    for (g, delta) in generated_pairs() {
        let p = arbiterize(&g);
        let ctx = arbiter_context(&delta);
        let back = extract_global(&p, &ctx).unwrap_or_else(|e| panic!("extraction of {} failed: {}", g, e));
        check_coherence(&back, &fwdlab_core::logic_cll::dual_context(&ctx)).unwrap();
        assert!(unprime(&back).eq_modulo_order(&g), "{} came back as {}", g, back);
    }
    let g = parse_global_type(&data("twobuyer.gt")).unwrap();
    let variant = parse_process(&data("p1_variant.fwd")).unwrap();
    let back = extract_global(&variant, &parse_context(&data("p1.llp")).unwrap()).unwrap();
    assert!(unprime(&back).eq_modulo_order(&g));
    within(start, Duration::from_secs(60), "round trip");
}

fn classical(accepted: &Accepted) {
    assert!(!accepted.is_empty());
    let mut checked = 0;
    for (p, ctx) in accepted {
        if p.has_runtime_cut() {
            continue;
        }
        check_cll(p, &erase_context(ctx)).unwrap_or_else(|e| panic!("CLL rejects {:?}: {}", p, e));
        checked += 1;
    }
    assert!(checked >= 502, "only {} judgements checked", checked);
}

fn discussion() {
    let ctx = parse_context(&data("discussion.llp")).unwrap();
    let good = parse_process(&data("discussion_accepted.fwd")).unwrap();
    let bad = parse_process(&data("discussion_rejected.fwd")).unwrap();
    check_sync(&good, &ctx).unwrap();
    assert!(matches!(check_sync(&bad, &ctx), Err(SyncError::OrderViolation { .. })));
    check_cll(&good, &erase_context(&ctx)).unwrap();
    check_cll(&bad, &erase_context(&ctx)).unwrap();
}

fn agree(p: &Process, ctx: &Context) {
    let fast = check_sync(p, ctx);
    let all = search_sync(p, ctx, 16).unwrap();
    assert_eq!(fast.is_ok(), !all.is_empty(), "disagreement on {:?} against {:?}: {:?}", p, ctx, fast);
    if let Ok(d) = fast {
        assert!(all.contains(&d), "checker derivation missing from the search on {:?}", p);
    }
}

fn oracle_agreement() {
    let start = Instant::now();
    let all = enumerate_instances(5, &["a"], 4);
    for (p, c) in &all {
        for star in [false, true] {
            agree(p, &instance_context(c, star));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..1000 {
        let (p, c) = random_instance(&mut rng, 7, &["a", "b"]);
        agree(&p, &instance_context(&c, rand::Rng::gen_bool(&mut rng, 0.5)));
    }
    println!("  ({} enumerated instances)", all.len());
    within(start, Duration::from_secs(300), "oracle agreement");
}

fn compositions() {
    let start = Instant::now();
    for seed in 0..500u64 {
        let (p, ctx) = random_arbiter_composition(seed, 2 + (seed as usize % 5));
        let trace = normalize(&p, 10_000).unwrap_or_else(|e| panic!("seed {}: {}", seed, e));
        for s in &trace.steps {
            check_sync_runtime(&s.after, &ctx).unwrap_or_else(|e| panic!("seed {} {}: {}", seed, s.line(), e));
        }
        assert!(!trace.result.has_cut());
        check_sync(&trace.result, &ctx).unwrap_or_else(|e| panic!("seed {}: {}", seed, e));
    }
    within(start, Duration::from_secs(120), "compositions");
}

fn run(name: &str, f: impl FnOnce()) -> bool {
    let start = Instant::now();
    let ok = catch_unwind(AssertUnwindSafe(f)).is_ok();
    // written to the raw handle so the line survives test output capture
    let line = format!("criterion {}: {} ({:.2?})\n", name, if ok { "PASS" } else { "FAIL" }, start.elapsed());
    let _ = std::io::stderr().write_all(line.as_bytes());
    ok
}

#[test]
fn acceptance() {
    let mut accepted = Accepted::new();
    let results = [
        run("1 duality involution", duality),
        run("2 two-buyer golden suite", || two_buyer(&mut accepted)),
        run("3 two-buyer composition", || composition(&mut accepted)),
        run("4 arbiter soundness", || soundness(&mut accepted)),
        run("5 extraction round trip", round_trip),
        run("6 classical conservativity", || classical(&accepted)),
        run("7 discussion pair", discussion),
        run("8 checker and search agree", oracle_agreement),
        run("9 random compositions normalize", compositions),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    assert_eq!(failed, 0, "{} acceptance criteria failed", failed);
}
