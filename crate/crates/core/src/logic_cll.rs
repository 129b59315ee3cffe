//! Duality, the plain CLL checker, and the erasure of forwarder contexts.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::terms::{
    CllRule, Connective, Context, ContextError, Derivation, Entry, Judgement, Name, Process, Prop, Rule, Typed,
};

/// The linear negation of a proposition.
pub fn dual(a: &Prop) -> Prop {
    match a {
        Prop::Atom(at) => {
            let mut at = at.clone();
            at.polarity = at.polarity.flip();
            Prop::Atom(at)
        }
        Prop::One => Prop::Bot,
        Prop::Bot => Prop::One,
        Prop::Tensor(x, y) => Prop::par(dual(x), dual(y)),
        Prop::Par(x, y) => Prop::tensor(dual(x), dual(y)),
        Prop::Plus(x, y) => Prop::with(dual(x), dual(y)),
        Prop::With(x, y) => Prop::plus(dual(x), dual(y)),
        Prop::OfCourse(x) => Prop::why_not(dual(x)),
        Prop::WhyNot(x) => Prop::of_course(dual(x)),
    }
}

/// Dualizes every type of a context.
pub fn dual_context(c: &Context) -> Context {
    c.map_types(dual)
}

/// Forgets buffers, boxes and ★, keeping every endpoint active.
pub fn erase_context(c: &Context) -> Context {
    let mut out = Context::new();
    for e in c.entries() {
        for t in e.typed() {
            out.push_active(t.name.clone(), t.ty.clone()).expect("names are unique in a context");
        }
    }
    out
}

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum CllError {
    #[error("type mismatch on {endpoint}: expected {expected}, found {found}")]
    TypeMismatch { endpoint: Name, expected: String, found: Prop },
    #[error("unused endpoints {}", names(.endpoints))]
    UnusedEndpoint { endpoints: Vec<Name> },
    #[error("unknown endpoint {endpoint}")]
    UnknownEndpoint { endpoint: Name },
    #[error("server on {endpoint} requires a ?-typed context, but {offending} : {found}")]
    NonExponentialContextUnderServer { endpoint: Name, offending: Name, found: Prop },
    #[error("runtime cut forms have no CLL typing")]
    UnsupportedRuntimeForm,
    #[error("CLL judgements need a basic context")]
    NotBasic,
    #[error(transparent)]
    Context(#[from] ContextError),
}

pub(crate) fn names(ns: &[Name]) -> String {
    ns.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", ")
}

/// Checks `P ⊢ Δ` in classical linear logic.
pub fn check_cll(p: &Process, delta: &Context) -> Result<Derivation, CllError> {
    if !delta.is_basic() {
        return Err(CllError::NotBasic);
    }
    go(p, delta)
}

fn node(rule: CllRule, p: &Process, ctx: &Context, premises: Vec<Derivation>) -> Derivation {
    Derivation::new(Rule::Cll(rule), Judgement::Cll { process: p.clone(), context: ctx.clone() }, premises)
}

fn lookup<'a>(ctx: &'a Context, x: &Name) -> Result<(usize, &'a Prop), CllError> {
    ctx.active(x).ok_or_else(|| CllError::UnknownEndpoint { endpoint: x.clone() })
}

fn mismatch(x: &Name, expected: Connective, found: &Prop) -> CllError {
    CllError::TypeMismatch { endpoint: x.clone(), expected: expected.to_string(), found: found.clone() }
}

fn exactly(ctx: &Context, names: &[&Name]) -> Result<(), CllError> {
    for n in names {
        lookup(ctx, n)?;
    }
    let extra: Vec<Name> = ctx.names().into_iter().filter(|n| !names.contains(&n)).collect();
    if extra.is_empty() {
        Ok(())
    } else {
        Err(CllError::UnusedEndpoint { endpoints: extra })
    }
}

/// Entries whose endpoint is in `fv`, and the rest.
fn split(ctx: &Context, fv: &BTreeSet<Name>) -> (Context, Context) {
    let left = ctx.filter(|e| fv.contains(e.key()));
    let right = ctx.filter(|e| !fv.contains(e.key()));
    (left.with_star(false), right.with_star(false))
}

fn with_replaced(ctx: &Context, idx: usize, x: &Name, a: Prop) -> Result<Context, CllError> {
    let mut c = ctx.clone();
    c.replace(idx, Entry::Active(Typed::new(x.clone(), a)))?;
    Ok(c)
}

fn go(p: &Process, ctx: &Context) -> Result<Derivation, CllError> {
    match p {
        Process::Link(x, y) => {
            exactly(ctx, &[x, y])?;
            let (_, a) = lookup(ctx, x)?;
            let (_, b) = lookup(ctx, y)?;
            if *b != dual(a) {
                return Err(CllError::TypeMismatch {
                    endpoint: y.clone(),
                    expected: format!("{}", dual(a)),
                    found: b.clone(),
                });
            }
            Ok(node(CllRule::Axiom, p, ctx, vec![]))
        }
        Process::Close(x) => {
            let (_, a) = lookup(ctx, x)?;
            if *a != Prop::One {
                return Err(mismatch(x, Connective::One, a));
            }
            exactly(ctx, &[x])?;
            Ok(node(CllRule::One, p, ctx, vec![]))
        }
        Process::Wait(x, q) => {
            let (i, a) = lookup(ctx, x)?;
            if *a != Prop::Bot {
                return Err(mismatch(x, Connective::Bot, a));
            }
            let mut c = ctx.clone();
            c.remove(i);
            Ok(node(CllRule::Bot, p, ctx, vec![go(q, &c)?]))
        }
        Process::Send(x, y, l, r) => {
            let (i, a) = lookup(ctx, x)?;
            let (a1, b1) = a.as_tensor().ok_or_else(|| mismatch(x, Connective::Tensor, a))?;
            let mut fv = l.free_names();
            fv.remove(y);
            fv.remove(x);
            let (mut left, _) = split(ctx, &fv);
            left.push_active(y.clone(), a1.clone())?;
            let right0 = with_replaced(ctx, i, x, b1.clone())?;
            let (_, right) = split(&right0, &fv);
            Ok(node(CllRule::Tensor, p, ctx, vec![go(l, &left)?, go(r, &right)?]))
        }
        Process::Recv(x, y, q) => {
            let (i, a) = lookup(ctx, x)?;
            let (a1, b1) = a.as_par().ok_or_else(|| mismatch(x, Connective::Par, a))?;
            let mut c = with_replaced(ctx, i, x, b1.clone())?;
            c.push_active(y.clone(), a1.clone())?;
            Ok(node(CllRule::Par, p, ctx, vec![go(q, &c)?]))
        }
        Process::InL(x, q) | Process::InR(x, q) => {
            let left = matches!(p, Process::InL(..));
            let (i, a) = lookup(ctx, x)?;
            let (a1, b1) = a.as_plus().ok_or_else(|| mismatch(x, Connective::Plus, a))?;
            let c = with_replaced(ctx, i, x, if left { a1.clone() } else { b1.clone() })?;
            let rule = if left { CllRule::PlusL } else { CllRule::PlusR };
            Ok(node(rule, p, ctx, vec![go(q, &c)?]))
        }
        Process::Case(x, l, r) => {
            let (i, a) = lookup(ctx, x)?;
            let (a1, b1) = a.as_with().ok_or_else(|| mismatch(x, Connective::With, a))?;
            let cl = with_replaced(ctx, i, x, a1.clone())?;
            let cr = with_replaced(ctx, i, x, b1.clone())?;
            Ok(node(CllRule::With, p, ctx, vec![go(l, &cl)?, go(r, &cr)?]))
        }
        Process::Client(x, y, q) => {
            let (i, a) = lookup(ctx, x)?;
            let a1 = a.as_why_not().ok_or_else(|| mismatch(x, Connective::WhyNot, a))?;
            let mut c = ctx.clone();
            c.remove(i);
            c.push_active(y.clone(), a1.clone())?;
            Ok(node(CllRule::Query, p, ctx, vec![go(q, &c)?]))
        }
        Process::Server(x, y, q) => {
            let (i, a) = lookup(ctx, x)?;
            let a1 = a.as_of_course().ok_or_else(|| mismatch(x, Connective::OfCourse, a))?;
            for t in ctx.actives() {
                if &t.name != x && t.ty.as_why_not().is_none() {
                    return Err(CllError::NonExponentialContextUnderServer {
                        endpoint: x.clone(),
                        offending: t.name.clone(),
                        found: t.ty.clone(),
                    });
                }
            }
            let mut c = ctx.clone();
            c.remove(i);
            c.push_active(y.clone(), a1.clone())?;
            Ok(node(CllRule::Bang, p, ctx, vec![go(q, &c)?]))
        }
        Process::Cut(x, a, y, l, r) => {
            let mut fv = l.free_names();
            fv.remove(x);
            let (mut left, mut right) = split(ctx, &fv);
            left.push_active(x.clone(), a.clone())?;
            right.push_active(y.clone(), dual(a))?;
            Ok(node(CllRule::Cut, p, ctx, vec![go(l, &left)?, go(r, &right)?]))
        }
        Process::CutHalf(..) | Process::CutMsg(..) => Err(CllError::UnsupportedRuntimeForm),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{parse_context, parse_process, parse_proposition};

    fn prop(s: &str) -> Prop {
        parse_proposition(s).unwrap()
    }

    #[test]
    fn dual_examples() {
        assert_eq!(dual(&prop("name * (~cost par (cost * 1))")), prop("~name par (cost * (~cost par bot))"));
        let a = prop("(a + b) & ~c");
        assert_eq!(dual(&dual(&a)), a);
        assert_eq!(dual(&prop("!(a * 1)")), prop("?(~a par bot)"));
    }

    #[test]
    fn de_morgan_one_level() {
        let (a, b) = (prop("a"), prop("~b"));
        let cases = [
            (Prop::tensor(a.clone(), b.clone()), Prop::par(dual(&a), dual(&b))),
            (Prop::par(a.clone(), b.clone()), Prop::tensor(dual(&a), dual(&b))),
            (Prop::plus(a.clone(), b.clone()), Prop::with(dual(&a), dual(&b))),
            (Prop::with(a.clone(), b.clone()), Prop::plus(dual(&a), dual(&b))),
            (Prop::of_course(a.clone()), Prop::why_not(dual(&a))),
            (Prop::why_not(a.clone()), Prop::of_course(dual(&a))),
            (Prop::One, Prop::Bot),
            (Prop::Bot, Prop::One),
        ];
        for (x, y) in cases {
            assert_eq!(dual(&x), y);
        }
    }

    #[test]
    fn axiom_and_unit() {
        let d = check_cll(&parse_process("x<->y").unwrap(), &parse_context("x : ~a, y : a").unwrap()).unwrap();
        assert_eq!(d.rule, Rule::Cll(CllRule::Axiom));
        let d = check_cll(&parse_process("x[]").unwrap(), &parse_context("x : 1").unwrap()).unwrap();
        assert_eq!(d.rule, Rule::Cll(CllRule::One));
    }

    #[test]
    fn errors() {
        let p = parse_process("x[]").unwrap();
        assert!(matches!(
            check_cll(&p, &parse_context("x : 1, y : 1").unwrap()),
            Err(CllError::UnusedEndpoint { .. })
        ));
        assert!(matches!(check_cll(&p, &parse_context("x : bot").unwrap()), Err(CllError::TypeMismatch { .. })));
        assert!(matches!(check_cll(&p, &parse_context("y : 1").unwrap()), Err(CllError::UnknownEndpoint { .. })));
        let s = parse_process("!x(y).z().y<->w").unwrap();
        assert!(matches!(
            check_cll(&s, &parse_context("x : !a, z : bot, w : ~a").unwrap()),
            Err(CllError::NonExponentialContextUnderServer { .. })
        ));
    }

    #[test]
    fn tensor_splits_by_free_names() {
        let p = parse_process("x[y].(y<->z | x().w[])").unwrap();
        let c = parse_context("x : (a * bot), z : ~a, w : 1").unwrap();
        let d = check_cll(&p, &c).unwrap();
        assert_eq!(d.premises[0].context(), &parse_context("z : ~a, y : a").unwrap());
        assert_eq!(d.premises[1].context(), &parse_context("x : bot, w : 1").unwrap());
    }

    #[test]
    fn erasure_examples() {
        let c = parse_context("x : bot, *").unwrap();
        assert_eq!(erase_context(&c), parse_context("x : bot").unwrap());
        let c = parse_context("[y : a] x : b").unwrap();
        assert_eq!(erase_context(&c), parse_context("y : a, x : b").unwrap());
        assert_eq!(erase_context(&Context::new()), Context::new());
    }
}
