//! JSON encodings of derivations and reduction traces.
//!
//! A derivation node is `{"system", "rule", "conclusion", "premises"}` where the
//! conclusion is printed as `P |- Γ` or `G |= Δ`.

use serde_json::{json, Value};
use thiserror::Error;

use crate::dynamics::{Step, StepKind, Trace};
use crate::surface::{
    parse_coherence_judgement, parse_process_judgement, parse_runtime_process, print_context, print_global_type,
    print_process,
};
use crate::terms::{CllRule, CoherenceRule, CompoundRule, Derivation, Judgement, Rule, SyncRule, System};

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum JsonError {
    #[error("missing or malformed field `{0}`")]
    Field(&'static str),
    #[error("unknown rule `{rule}` for system `{system}`")]
    UnknownRule { system: String, rule: String },
    #[error("unknown system `{0}`")]
    UnknownSystem(String),
    #[error("cannot parse `{text}`: {message}")]
    Syntax { text: String, message: String },
}

const SYNC_RULES: [SyncRule; 18] = [
    SyncRule::Ax,
    SyncRule::One,
    SyncRule::Bot,
    SyncRule::Tensor,
    SyncRule::Par,
    SyncRule::With,
    SyncRule::PlusL,
    SyncRule::PlusR,
    SyncRule::Bang,
    SyncRule::Query,
    SyncRule::Cut,
    SyncRule::CutTensorPar,
    SyncRule::CutPlusWith1L,
    SyncRule::CutPlusWith1R,
    SyncRule::CutPlusWith2L,
    SyncRule::CutPlusWith2R,
    SyncRule::CutBangQuery1,
    SyncRule::CutBangQuery2,
];

const CLL_RULES: [CllRule; 11] = [
    CllRule::Axiom,
    CllRule::One,
    CllRule::Bot,
    CllRule::Tensor,
    CllRule::Par,
    CllRule::PlusL,
    CllRule::PlusR,
    CllRule::With,
    CllRule::Query,
    CllRule::Bang,
    CllRule::Cut,
];

const COHERENCE_RULES: [CoherenceRule; 5] = [
    CoherenceRule::Axiom,
    CoherenceRule::OneBot,
    CoherenceRule::TensorPar,
    CoherenceRule::PlusWith,
    CoherenceRule::QueryBang,
];

const COMPOUND_RULES: [CompoundRule; 8] = [
    CompoundRule::PlusWithPartial,
    CompoundRule::PlusWithFull,
    CompoundRule::QueryBangPartial,
    CompoundRule::QueryBangFull,
    CompoundRule::TensorParPartial,
    CompoundRule::TensorParFull,
    CompoundRule::OneBotPartial,
    CompoundRule::OneBotFull,
];

const SYSTEMS: [System; 3] = [System::Base, System::WithBang, System::TensorOne];

fn conclusion_text(j: &Judgement) -> String {
    match j {
        Judgement::Sync { process, context }
        | Judgement::Cll { process, context }
        | Judgement::Compound { process, context, .. } => {
            format!("{} |- {}", print_process(process), print_context(context))
        }
        Judgement::Coherence { global, context } => format!("{} |= {}", print_global_type(global), print_context(context)),
    }
}

fn system_label(j: &Judgement) -> String {
    match j {
        Judgement::Sync { .. } => "sync".into(),
        Judgement::Cll { .. } => "cll".into(),
        Judgement::Coherence { .. } => "coherence".into(),
        Judgement::Compound { system, .. } => format!("compound/{}", system.name()),
    }
}

pub fn derivation_to_json(d: &Derivation) -> Value {
    json!({
        "system": system_label(&d.conclusion),
        "rule": d.rule.label(),
        "conclusion": conclusion_text(&d.conclusion),
        "premises": d.premises.iter().map(derivation_to_json).collect::<Vec<_>>(),
    })
}

fn field<'a>(v: &'a Value, name: &'static str) -> Result<&'a str, JsonError> {
    v.get(name).and_then(Value::as_str).ok_or(JsonError::Field(name))
}

fn find_rule(system: &str, label: &str) -> Result<Rule, JsonError> {
    let hit = match system {
        "sync" => SYNC_RULES.iter().map(|r| Rule::Sync(*r)).find(|r| r.label() == label),
        "cll" => CLL_RULES.iter().map(|r| Rule::Cll(*r)).find(|r| r.label() == label),
        "coherence" => COHERENCE_RULES.iter().map(|r| Rule::Coherence(*r)).find(|r| r.label() == label),
        s if s.starts_with("compound/") => SYNC_RULES
            .iter()
            .map(|r| Rule::Sync(*r))
            .chain(COMPOUND_RULES.iter().map(|r| Rule::Compound(*r)))
            .find(|r| r.label() == label),
        other => return Err(JsonError::UnknownSystem(other.to_string())),
    };
    hit.ok_or_else(|| JsonError::UnknownRule { system: system.to_string(), rule: label.to_string() })
}

pub fn derivation_from_json(v: &Value) -> Result<Derivation, JsonError> {
    let system = field(v, "system")?;
    let rule = find_rule(system, field(v, "rule")?)?;
    let text = field(v, "conclusion")?;
    let syntax = |e: crate::surface::ParseError| JsonError::Syntax { text: text.to_string(), message: e.message };
    let conclusion = match system {
        "coherence" => {
            let (global, context) = parse_coherence_judgement(text).map_err(syntax)?;
            Judgement::Coherence { global, context }
        }
        _ => {
            let (process, context) = parse_process_judgement(text).map_err(syntax)?;
            match system {
                "sync" => Judgement::Sync { process, context },
                "cll" => Judgement::Cll { process, context },
                s => {
                    let name = s.trim_start_matches("compound/");
                    let system = SYSTEMS
                        .into_iter()
                        .find(|x| x.name() == name)
                        .ok_or_else(|| JsonError::UnknownSystem(s.to_string()))?;
                    Judgement::Compound { process, context, system }
                }
            }
        }
    };
    let premises = v
        .get("premises")
        .and_then(Value::as_array)
        .ok_or(JsonError::Field("premises"))?
        .iter()
        .map(derivation_from_json)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Derivation::new(rule, conclusion, premises))
}

pub fn trace_to_json(t: &Trace) -> Value {
    json!({
        "initial": print_process(&t.initial),
        "steps": t.steps.iter().map(|s| json!({
            "index": s.index,
            "kind": s.kind.symbol(),
            "rule": s.rule,
            "position": s.position,
            "before": print_process(&s.before),
            "after": print_process(&s.after),
        })).collect::<Vec<_>>(),
        "final": print_process(&t.result),
    })
}

fn process_field(v: &Value, name: &'static str) -> Result<crate::terms::Process, JsonError> {
    let text = field(v, name)?;
    parse_runtime_process(text).map_err(|e| JsonError::Syntax { text: text.to_string(), message: e.message })
}

pub fn trace_from_json(v: &Value) -> Result<Trace, JsonError> {
    let mut steps = Vec::new();
    for s in v.get("steps").and_then(Value::as_array).ok_or(JsonError::Field("steps"))? {
        let position = s
            .get("position")
            .and_then(Value::as_array)
            .ok_or(JsonError::Field("position"))?
            .iter()
            .map(|i| i.as_u64().map(|i| i as usize).ok_or(JsonError::Field("position")))
            .collect::<Result<Vec<_>, _>>()?;
        steps.push(Step {
            index: s.get("index").and_then(Value::as_u64).ok_or(JsonError::Field("index"))? as usize,
            kind: StepKind::from_symbol(field(s, "kind")?).ok_or(JsonError::Field("kind"))?,
            rule: field(s, "rule")?.to_string(),
            position,
            before: process_field(s, "before")?,
            after: process_field(s, "after")?,
        });
    }
    Ok(Trace { initial: process_field(v, "initial")?, steps, result: process_field(v, "final")? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherence::check_coherence;
    use crate::dynamics::{compose, normalize, replay};
    use crate::logic_sync::{check_sync, validate, SyncOptions};
    use crate::surface::{parse_context, parse_global_type, parse_process};
    use crate::terms::{Name, Prop};

    #[test]
    fn sync_derivation_round_trip() {
        let p = parse_process(include_str!("../tests/data/p1.fwd")).unwrap();
        let ctx = parse_context(include_str!("../tests/data/p1.llp")).unwrap();
        let d = check_sync(&p, &ctx).unwrap();
        let text = serde_json::to_string(&derivation_to_json(&d)).unwrap();
        let back = derivation_from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, d);
        validate(&back, SyncOptions::default()).unwrap();
    }

    #[test]
    fn coherence_derivation_round_trip() {
        let g = parse_global_type(include_str!("../tests/data/twobuyer.gt")).unwrap();
        let delta = parse_context(include_str!("../tests/data/twobuyer_delta.llp")).unwrap();
        let d = check_coherence(&g, &delta).unwrap();
        assert_eq!(derivation_from_json(&derivation_to_json(&d)).unwrap(), d);
    }

    #[test]
    fn trace_round_trip_replays() {
        let p = parse_process("x[]").unwrap();
        let q = parse_process("y(). z[]").unwrap();
        let t = compose(&p, &Name::new("x"), &q, &Name::new("y"), &Prop::One).unwrap();
        let trace = normalize(&t, 10).unwrap();
        let back = trace_from_json(&trace_to_json(&trace)).unwrap();
        assert!(replay(&back).unwrap().alpha_eq(&trace.result));
    }

    #[test]
    fn bad_rule_is_reported() {
        let v = json!({"system": "sync", "rule": "Nope", "conclusion": "x<->y |- x : a, y : ~a", "premises": []});
        assert!(matches!(derivation_from_json(&v), Err(JsonError::UnknownRule { .. })));
    }
}
