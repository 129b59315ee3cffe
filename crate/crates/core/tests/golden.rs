use fwdlab_core::arbiterize::{arbiter_context, arbiterize, soundness_certificate};
use fwdlab_core::coherence::check_coherence;
use fwdlab_core::dynamics::{compose_typed, normalize, replay, step, StepKind};
use fwdlab_core::json::{trace_from_json, trace_to_json};
use fwdlab_core::logic_sync::{check_sync, explain};
use fwdlab_core::oracle::search_sync;
use fwdlab_core::surface::{
    parse_context, parse_global_type, parse_process, parse_runtime_process, print_global_type,
    print_global_type_pretty, print_process, print_process_pretty,
};
use fwdlab_core::terms::{Name, Process};

fn data(name: &str) -> String {
    let path = format!("{}/tests/data/{}", env!("CARGO_MANIFEST_DIR"), name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {}", path, e))
}

#[test]
fn two_buyer_global_type_is_a_print_parse_fixpoint() {
    let g = parse_global_type(&data("twobuyer.gt")).unwrap();
    assert_eq!(parse_global_type(&print_global_type(&g)).unwrap(), g);
    assert_eq!(parse_global_type(&print_global_type_pretty(&g)).unwrap(), g);
    let d = check_coherence(&g, &parse_context(&data("twobuyer_delta.llp")).unwrap()).unwrap();
    assert_eq!(d.size(), 13);
}

#[test]
fn two_buyer_arbiter_pipeline() {
    let g = parse_global_type(&data("twobuyer.gt")).unwrap();
    let delta = parse_context(&data("twobuyer_delta.llp")).unwrap();
    let (p, d) = soundness_certificate(&g, &delta).unwrap();
    assert!(p.alpha_eq(&parse_process(&data("p1.fwd")).unwrap()));
    assert_eq!(d.context(), &arbiter_context(&delta));
    let printed = print_process_pretty(&arbiterize(&g));
    assert!(parse_process(&printed).unwrap().alpha_eq(&p));
}

#[test]
fn p1_explanation_ends_in_units() {
    let p1 = parse_process(&data("p1.fwd")).unwrap();
    let ctx = parse_context(&data("p1.llp")).unwrap();
    let d = check_sync(&p1, &ctx).unwrap();
    let text = explain(&d);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines.len() >= 20, "{}", text);
    assert_eq!(lines.last().unwrap().trim(), "1 s' (★ consumed)");
    assert!(lines[lines.len() - 2].trim().starts_with("⊥ b2'"));
    // the oracle finds exactly one derivation, and it is the checker's
    assert_eq!(search_sync(&p1, &ctx, 100).unwrap(), vec![d]);
}

#[test]
fn discussion_pair_by_search() {
    let ctx = parse_context(&data("discussion.llp")).unwrap();
    let accepted = parse_process(&data("discussion_accepted.fwd")).unwrap();
    let rejected = parse_process(&data("discussion_rejected.fwd")).unwrap();
    assert_eq!(search_sync(&accepted, &ctx, 50).unwrap().len(), 1);
    assert!(search_sync(&rejected, &ctx, 50).unwrap().is_empty());
}

#[test]
fn link_reduction_substitutes_the_other_endpoint() {
    let t = parse_runtime_process("new (x:1 + 1)(y) (x<->w | y.case(y(). u[], y(). u[]))").unwrap();
    let s = step(&t).unwrap().unwrap();
    assert_eq!(s.kind, StepKind::Beta);
    assert_eq!(s.rule, "link");
    assert_eq!(s.after, parse_process("w.case(w(). u[], w(). u[])").unwrap());
}

#[test]
fn composed_two_buyer_trace() {
    let p1 = parse_process(&data("p1.fwd")).unwrap();
    let p2 = parse_process(&data("p2.fwd")).unwrap();
    let (t, ctx) = compose_typed(
        &p1,
        &parse_context(&data("p1.llp")).unwrap(),
        &Name::new("b2'"),
        &p2,
        &parse_context(&data("p2.llp")).unwrap(),
        &Name::new("b2''"),
    )
    .unwrap();
    let trace = normalize(&t, 10_000).unwrap();
    assert!(!trace.result.has_cut());
    assert_eq!(trace.result.free_names(), ctx.names());
    check_sync(&trace.result, &ctx).unwrap();
    for s in &trace.steps {
        let line = s.line();
        let parts: Vec<&str> = line.split(' ').collect();
        assert_eq!(parts.len(), 5, "{}", line);
        assert_eq!(parts[0], format!("k{}", s.index));
        assert!(matches!(parts[1], "β" | "κ" | "≡"));
        assert_eq!(parts[3], "@");
        assert!(parts[4] == "root" || parts[4].split('.').all(|d| d.parse::<usize>().is_ok()));
    }
    assert!(trace.steps.iter().any(|s| s.rule == "⊗⅋"));
    assert!(trace.steps.iter().any(|s| s.rule == "half-free"));
    assert!(trace.steps.iter().any(|s| s.rule.starts_with("⊕&")));
    let back = trace_from_json(&trace_to_json(&trace)).unwrap();
    assert!(replay(&back).unwrap().alpha_eq(&trace.result));
    let printed = print_process(&trace.result);
    let reparsed: Process = parse_process(&printed).unwrap();
    assert!(reparsed.alpha_eq(&trace.result));
}
