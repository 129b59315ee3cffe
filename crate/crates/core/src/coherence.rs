//! The coherence judgement `G ⊨ Δ`.

use thiserror::Error;

use crate::logic_cll::{dual, names};
use crate::terms::{
    CoherenceRule, Connective, Context, ContextError, Derivation, GlobalType, Judgement, Name, Prop, Rule,
};

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum CoherenceError {
    #[error("{rule}: endpoint {endpoint} should have top-level {expected}, found {found}")]
    EndpointRoleMismatch { rule: &'static str, endpoint: Name, expected: String, found: Prop },
    #[error("{rule}: endpoints {} are left over", names(.endpoints))]
    ResidualContext { rule: &'static str, endpoints: Vec<Name> },
    #[error("unknown endpoint {endpoint}")]
    UnknownEndpoint { endpoint: Name },
    #[error("coherence needs a basic context")]
    NotBasic,
    #[error(transparent)]
    Context(#[from] ContextError),
}

pub fn check_coherence(g: &GlobalType, delta: &Context) -> Result<Derivation, CoherenceError> {
    if !delta.is_basic() {
        return Err(CoherenceError::NotBasic);
    }
    go(g, delta)
}

fn node(rule: CoherenceRule, g: &GlobalType, ctx: &Context, premises: Vec<Derivation>) -> Derivation {
    Derivation::new(
        Rule::Coherence(rule),
        Judgement::Coherence { global: g.clone(), context: ctx.clone() },
        premises,
    )
}

fn ty<'a>(ctx: &'a Context, x: &Name) -> Result<&'a Prop, CoherenceError> {
    ctx.active(x).map(|(_, a)| a).ok_or_else(|| CoherenceError::UnknownEndpoint { endpoint: x.clone() })
}

fn role(rule: &'static str, x: &Name, expected: Connective, found: &Prop) -> CoherenceError {
    CoherenceError::EndpointRoleMismatch { rule, endpoint: x.clone(), expected: expected.to_string(), found: found.clone() }
}

fn exact(rule: &'static str, ctx: &Context, used: &[&Name]) -> Result<(), CoherenceError> {
    let extra: Vec<Name> = ctx.names().into_iter().filter(|n| !used.contains(&n)).collect();
    if extra.is_empty() {
        Ok(())
    } else {
        Err(CoherenceError::ResidualContext { rule, endpoints: extra })
    }
}

/// The context with the types of `updates` replaced.
fn retyped(ctx: &Context, updates: &[(&Name, Prop)]) -> Context {
    let mut out = Context::new();
    for t in ctx.actives() {
        let a = match updates.iter().find(|(n, _)| **n == t.name) {
            Some((_, a)) => a.clone(),
            None => t.ty.clone(),
        };
        out.push_active(t.name.clone(), a).expect("names stay unique");
    }
    out
}

fn go(g: &GlobalType, ctx: &Context) -> Result<Derivation, CoherenceError> {
    match g {
        GlobalType::Axiom(x, a, y) => {
            let tx = ty(ctx, x)?;
            let tyy = ty(ctx, y)?;
            if tx != a {
                return Err(CoherenceError::EndpointRoleMismatch {
                    rule: "Axiom",
                    endpoint: x.clone(),
                    expected: format!("{:#}", a),
                    found: tx.clone(),
                });
            }
            if *tyy != dual(a) {
                return Err(CoherenceError::EndpointRoleMismatch {
                    rule: "Axiom",
                    endpoint: y.clone(),
                    expected: format!("{:#}", dual(a)),
                    found: tyy.clone(),
                });
            }
            exact("Axiom", ctx, &[x, y])?;
            Ok(node(CoherenceRule::Axiom, g, ctx, vec![]))
        }
        GlobalType::CloseAll(xs, y) => {
            for x in xs {
                let a = ty(ctx, x)?;
                if *a != Prop::One {
                    return Err(role("1⊥", x, Connective::One, a));
                }
            }
            let b = ty(ctx, y)?;
            if *b != Prop::Bot {
                return Err(role("1⊥", y, Connective::Bot, b));
            }
            let used: Vec<&Name> = xs.iter().chain(std::iter::once(y)).collect();
            exact("1⊥", ctx, &used)?;
            Ok(node(CoherenceRule::OneBot, g, ctx, vec![]))
        }
        GlobalType::Gather(xs, y, l, r) => {
            let mut left = Context::new();
            let mut updates = Vec::new();
            for x in xs {
                let a = ty(ctx, x)?;
                let (a1, b1) = a.as_tensor().ok_or_else(|| role("⊗⅋", x, Connective::Tensor, a))?;
                left.push_active(x.clone(), a1.clone())?;
                updates.push((x, b1.clone()));
            }
            let c = ty(ctx, y)?;
            let (c1, d1) = c.as_par().ok_or_else(|| role("⊗⅋", y, Connective::Par, c))?;
            left.push_active(y.clone(), c1.clone())?;
            updates.push((y, d1.clone()));
            let right = retyped(ctx, &updates);
            Ok(node(CoherenceRule::TensorPar, g, ctx, vec![go(l, &left)?, go(r, &right)?]))
        }
        GlobalType::Branch(x, ys, l, r) => {
            let a = ty(ctx, x)?;
            let (a1, b1) = a.as_plus().ok_or_else(|| role("⊕&", x, Connective::Plus, a))?;
            let mut lu = vec![(x, a1.clone())];
            let mut ru = vec![(x, b1.clone())];
            for y in ys {
                let c = ty(ctx, y)?;
                let (c1, d1) = c.as_with().ok_or_else(|| role("⊕&", y, Connective::With, c))?;
                lu.push((y, c1.clone()));
                ru.push((y, d1.clone()));
            }
            let left = retyped(ctx, &lu);
            let right = retyped(ctx, &ru);
            Ok(node(CoherenceRule::PlusWith, g, ctx, vec![go(l, &left)?, go(r, &right)?]))
        }
        GlobalType::Serve(x, ys, body) => {
            let a = ty(ctx, x)?;
            let a1 = a.as_why_not().ok_or_else(|| role("?!", x, Connective::WhyNot, a))?;
            let mut updates = vec![(x, a1.clone())];
            for y in ys {
                let b = ty(ctx, y)?;
                let b1 = b.as_of_course().ok_or_else(|| role("?!", y, Connective::OfCourse, b))?;
                updates.push((y, b1.clone()));
            }
            let used: Vec<&Name> = std::iter::once(x).chain(ys.iter()).collect();
            exact("?!", ctx, &used)?;
            let inner = retyped(ctx, &updates);
            Ok(node(CoherenceRule::QueryBang, g, ctx, vec![go(body, &inner)?]))
        }
    }
}
