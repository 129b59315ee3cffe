//! The synchronous forwarder logic and its runtime cut rules.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write;

use thiserror::Error;

use crate::logic_cll::{dual, names};
pub use crate::terms::SyncRule;
use crate::terms::{
    BoxKind, Connective, Context, ContextError, Derivation, Entry, Judgement, Location, Name, Process, Prop, Rule,
    Typed,
};

#[derive(Clone, Copy, Debug, Default)]
pub struct SyncOptions {
    /// Accept the & rule with an empty set of boxed ⊕ endpoints.
    pub allow_empty_with: bool,
}

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum SyncError {
    #[error("unknown endpoint {endpoint} in context {context}")]
    UnknownEndpoint { endpoint: Name, context: Context },
    #[error("type mismatch on {endpoint}: expected {expected}, found {found} (context {context})")]
    TypeMismatch { endpoint: Name, expected: String, found: Prop, context: Context },
    #[error("rule {rule:?} leaves endpoints {} unused (context {context})", names(.endpoints))]
    LeftoverEndpoints { rule: SyncRule, endpoints: Vec<Name>, context: Context },
    #[error("not a forwarder ({rule:?} on {endpoint}): {reason} (context {context})")]
    NotAForwarder { rule: SyncRule, endpoint: Name, reason: String, context: Context },
    #[error("order violation on {endpoint}: {reason} (context {context})")]
    OrderViolation { endpoint: Name, reason: String, context: Context },
    #[error("close on {endpoint} needs a pending ★ (context {context})")]
    StarMissing { endpoint: Name, context: Context },
    #[error("with on {endpoint} may only box ⊕ endpoints, found {found}")]
    NonPlusInWithSelection { endpoint: Name, found: Prop },
    #[error("server on {endpoint} requires a ?-typed context, but {offending} : {found} (context {context})")]
    NonExponentialContext { endpoint: Name, offending: Name, found: Prop, context: Context },
    #[error("cut endpoints {x} : {a} and {y} : {b} are not dual")]
    CutTypeMismatch { x: Name, y: Name, a: Prop, b: Prop },
    #[error("cut forms need the runtime checker")]
    RuntimeFormNotAllowed,
    #[error("no cut rule applies to {x}/{y}: {reason} (context {context})")]
    NoCutRuleApplies { x: Name, y: Name, reason: String, context: Context },
    #[error("invalid derivation node {rule}: {reason}")]
    InvalidDerivation { rule: String, reason: String },
    #[error(transparent)]
    Context(#[from] ContextError),
}

/// One way of applying a rule at a node: the rule and its premises.
struct Instance<'a> {
    rule: SyncRule,
    premises: Vec<(&'a Process, Context)>,
}

/// Checks `P ⊢ Γ` for a cut-free surface process.
pub fn check_sync(p: &Process, ctx: &Context) -> Result<Derivation, SyncError> {
    check_sync_with(p, ctx, SyncOptions::default())
}

pub fn check_sync_with(p: &Process, ctx: &Context, opts: SyncOptions) -> Result<Derivation, SyncError> {
    Checker::new(opts, false).check(p, ctx)
}

/// Checks a runtime configuration, which may contain all cut forms.
pub fn check_sync_runtime(p: &Process, ctx: &Context) -> Result<Derivation, SyncError> {
    check_sync_runtime_with(p, ctx, SyncOptions::default())
}

pub fn check_sync_runtime_with(p: &Process, ctx: &Context, opts: SyncOptions) -> Result<Derivation, SyncError> {
    Checker::new(opts, true).check(p, ctx)
}

/// Checks that the two endpoints of a prospective cut have dual types.
pub fn check_cut_types(x: &Name, a: &Prop, y: &Name, b: &Prop) -> Result<(), SyncError> {
    if dual(a) == *b {
        Ok(())
    } else {
        Err(SyncError::CutTypeMismatch { x: x.clone(), y: y.clone(), a: a.clone(), b: b.clone() })
    }
}

/// Re-checks every node of a synchronous derivation against its rule.
pub fn validate(d: &Derivation, opts: SyncOptions) -> Result<(), SyncError> {
    let (p, ctx) = match &d.conclusion {
        Judgement::Sync { process, context } => (process, context),
        _ => return Err(invalid(d, "not a synchronous judgement")),
    };
    let rule = match d.rule {
        Rule::Sync(r) => r,
        _ => return Err(invalid(d, "not a synchronous rule")),
    };
    let mut premises = Vec::new();
    for sub in &d.premises {
        match &sub.conclusion {
            Judgement::Sync { process, context } => premises.push((process, context)),
            _ => return Err(invalid(d, "premise is not a synchronous judgement")),
        }
    }
    validate_step(rule, p, ctx, &premises, opts)?;
    d.premises.iter().try_for_each(|s| validate(s, opts))
}

/// Checks a single rule application `premises / P ⊢ Γ`.
pub fn validate_step(
    rule: SyncRule,
    p: &Process,
    ctx: &Context,
    premises: &[(&Process, &Context)],
    opts: SyncOptions,
) -> Result<(), SyncError> {
    let checker = Checker::new(opts, true);
    let instances = checker.instances(p, ctx)?;
    let found = instances.iter().any(|inst| {
        inst.rule == rule
            && inst.premises.len() == premises.len()
            && inst.premises.iter().zip(premises).all(|((q, c), (q2, c2))| q == q2 && c == *c2)
    });
    if found {
        Ok(())
    } else {
        Err(SyncError::InvalidDerivation {
            rule: format!("{:?}", rule),
            reason: "premises do not match any instance of the rule".to_string(),
        })
    }
}

fn invalid(d: &Derivation, reason: &str) -> SyncError {
    SyncError::InvalidDerivation { rule: d.rule.label(), reason: reason.to_string() }
}

struct Checker {
    opts: SyncOptions,
    runtime: bool,
    failures: HashMap<(usize, Context), SyncError>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Act {
    InL,
    InR,
    Other,
}

/// The first action on free name `z` in `p`, if all paths agree.
fn first_action(p: &Process, z: &Name) -> Option<Act> {
    if p.subjects().contains(&z) {
        return Some(match p {
            Process::InL(..) => Act::InL,
            Process::InR(..) => Act::InR,
            _ => Act::Other,
        });
    }
    let mut result = None;
    for (i, c) in p.children().into_iter().enumerate() {
        if p.binder(i) == Some(z) || !c.occurs_free(z) {
            continue;
        }
        let a = first_action(c, z)?;
        match result {
            None => result = Some(a),
            Some(b) if b != a => return Some(Act::Other),
            _ => {}
        }
    }
    result
}

fn nonempty_subsets_desc<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    let n = items.len();
    let mut out: Vec<Vec<T>> = (1u32..(1 << n))
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).map(|i| items[i].clone()).collect())
        .collect();
    out.sort_by_key(|s: &Vec<T>| std::cmp::Reverse(s.len()));
    out
}

impl Checker {
    fn new(opts: SyncOptions, runtime: bool) -> Checker {
        Checker { opts, runtime, failures: HashMap::new() }
    }

    fn check(&mut self, p: &Process, ctx: &Context) -> Result<Derivation, SyncError> {
        let key = (p as *const Process as usize, ctx.clone());
        if let Some(e) = self.failures.get(&key) {
            return Err(e.clone());
        }
        let r = self.check_uncached(p, ctx);
        if let Err(e) = &r {
            self.failures.insert(key, e.clone());
        }
        r
    }

    fn check_uncached(&mut self, p: &Process, ctx: &Context) -> Result<Derivation, SyncError> {
        let instances = self.instances(p, ctx)?;
        let mut first_err = None;
        'outer: for inst in instances {
            let mut subs = Vec::with_capacity(inst.premises.len());
            for (q, c) in &inst.premises {
                match self.check(q, c) {
                    Ok(d) => subs.push(d),
                    Err(e) => {
                        first_err.get_or_insert(e);
                        continue 'outer;
                    }
                }
            }
            return Ok(Derivation::sync(inst.rule, p.clone(), ctx.clone(), subs));
        }
        Err(first_err.expect("instance lists are never empty"))
    }

    /// All rule instances for `P ⊢ Γ`, in the order the checker tries them.
    /// Fails when no instance exists.
    fn instances<'a>(&self, p: &'a Process, ctx: &Context) -> Result<Vec<Instance<'a>>, SyncError> {
        use Process::*;
        let one = |rule, premises| Ok(vec![Instance { rule, premises }]);
        match p {
            Link(x, y) => {
                let (_, a) = active(ctx, x, SyncRule::Ax)?;
                let (_, b) = active(ctx, y, SyncRule::Ax)?;
                if ctx.star {
                    return Err(not_fwd(SyncRule::Ax, x, "a pending close (★) cannot be discharged by a link", ctx));
                }
                leftover(ctx, SyncRule::Ax, &[x, y])?;
                if b != dual(&a) {
                    return Err(SyncError::TypeMismatch {
                        endpoint: y.clone(),
                        expected: format!("{:#}", dual(&a)),
                        found: b,
                        context: ctx.clone(),
                    });
                }
                one(SyncRule::Ax, vec![])
            }
            Close(x) => {
                let (_, a) = active(ctx, x, SyncRule::One)?;
                expect(x, Connective::One, &a, ctx)?;
                if !ctx.star {
                    return Err(SyncError::StarMissing { endpoint: x.clone(), context: ctx.clone() });
                }
                leftover(ctx, SyncRule::One, &[x])?;
                one(SyncRule::One, vec![])
            }
            Wait(x, q) => {
                let (i, a) = active(ctx, x, SyncRule::Bot)?;
                expect(x, Connective::Bot, &a, ctx)?;
                let mut c = ctx.clone();
                c.remove(i);
                c.star = true;
                one(SyncRule::Bot, vec![(&**q, c)])
            }
            Recv(x, y, q) => {
                let (i, a) = active(ctx, x, SyncRule::Par)?;
                let (a1, b1) = a.as_par().ok_or_else(|| mismatch(x, Connective::Par, &a, ctx))?;
                let mut c = ctx.clone();
                c.replace(
                    i,
                    Entry::Buffer { msg: Typed::new(y.clone(), a1.clone()), blocked: Typed::new(x.clone(), b1.clone()) },
                )?;
                one(SyncRule::Par, vec![(&**q, c)])
            }
            Send(x, y, l, r) => {
                let (i, a) = active(ctx, x, SyncRule::Tensor)?;
                let (a1, b1) = a.as_tensor().ok_or_else(|| mismatch(x, Connective::Tensor, &a, ctx))?;
                let mut fv = l.free_names();
                fv.remove(y);
                let mut chosen = Vec::new();
                for n in &fv {
                    match ctx.find(n) {
                        Some(Location::Message(j)) => chosen.push(j),
                        None => return Err(unknown(n, ctx)),
                        Some(_) => {
                            return Err(not_fwd(
                                SyncRule::Tensor,
                                n,
                                &format!("{} is used in the message branch of {} but is not a buffered message", n, x),
                                ctx,
                            ))
                        }
                    }
                }
                let mut left = Context::new();
                let mut right = ctx.clone();
                right.replace(i, Entry::Active(Typed::new(x.clone(), b1.clone())))?;
                for &j in &chosen {
                    if let Entry::Buffer { msg, blocked } = &ctx.entries()[j] {
                        left.push(Entry::Active(msg.clone()))?;
                        right.replace(j, Entry::Active(blocked.clone()))?;
                    }
                }
                left.push_active(y.clone(), a1.clone())?;
                one(SyncRule::Tensor, vec![(&**l, left), (&**r, right)])
            }
            InL(x, q) | InR(x, q) => {
                let (kind, rule) = if matches!(p, InL(..)) { (BoxKind::L, SyncRule::PlusL) } else { (BoxKind::R, SyncRule::PlusR) };
                let (i, j) = self.member(ctx, x, kind, rule)?;
                let mut c = ctx.clone();
                let m = c.take_member(i, j);
                let (a1, b1) = m.ty.as_plus().expect("box members carry ⊕ types");
                c.push_active(x.clone(), if kind == BoxKind::L { a1.clone() } else { b1.clone() })?;
                one(rule, vec![(&**q, c)])
            }
            Client(x, y, q) => {
                let (i, j) = self.member(ctx, x, BoxKind::Q, SyncRule::Query)?;
                let mut c = ctx.clone();
                let m = c.take_member(i, j);
                let a1 = m.ty.as_why_not().expect("Q-box members carry ? types");
                c.push_active(y.clone(), a1.clone())?;
                one(SyncRule::Query, vec![(&**q, c)])
            }
            Server(x, y, q) => {
                let (_, a) = active(ctx, x, SyncRule::Bang)?;
                let a1 = a.as_of_course().ok_or_else(|| mismatch(x, Connective::OfCourse, &a, ctx))?;
                if ctx.star {
                    return Err(not_fwd(SyncRule::Bang, x, "a pending close (★) cannot be carried into a server", ctx));
                }
                let mut members = Vec::new();
                for e in ctx.entries() {
                    match e {
                        Entry::Active(t) if &t.name == x => {}
                        Entry::Active(t) if t.ty.as_why_not().is_some() => members.push(t.clone()),
                        Entry::Active(t) => {
                            return Err(SyncError::NonExponentialContext {
                                endpoint: x.clone(),
                                offending: t.name.clone(),
                                found: t.ty.clone(),
                                context: ctx.clone(),
                            })
                        }
                        other => {
                            return Err(SyncError::OrderViolation {
                                endpoint: other.key().clone(),
                                reason: format!("server on {} cannot start while {} is buffered or boxed", x, other.key()),
                                context: ctx.clone(),
                            })
                        }
                    }
                }
                let mut c = Context::new();
                c.push(Entry::Boxed { kind: BoxKind::Q, members, pivot: Typed::new(y.clone(), a1.clone()) })?;
                one(SyncRule::Bang, vec![(&**q, c)])
            }
            Case(x, l, r) => self.with_instances(p, x, l, r, ctx),
            Cut(..) | CutHalf(..) | CutMsg(..) if !self.runtime => Err(SyncError::RuntimeFormNotAllowed),
            Cut(x, a, y, l, r) => cut_instances(x, a, y, l, r, ctx),
            CutHalf(x, b, y, q, m) => match &**m {
                CutMsg(u, a, v, pm, r) => tensor_par_instances(x, b, y, q, u, a, v, pm, r, ctx),
                _ => Err(SyncError::NoCutRuleApplies {
                    x: x.clone(),
                    y: y.clone(),
                    reason: "a half cut must enclose a message cut".to_string(),
                    context: ctx.clone(),
                }),
            },
            CutMsg(u, _, v, _, _) => Err(SyncError::NoCutRuleApplies {
                x: u.clone(),
                y: v.clone(),
                reason: "a message cut must sit under a half cut".to_string(),
                context: ctx.clone(),
            }),
        }
    }

    fn member(&self, ctx: &Context, x: &Name, kind: BoxKind, rule: SyncRule) -> Result<(usize, usize), SyncError> {
        match ctx.find(x) {
            Some(Location::Member(i, j)) => match &ctx.entries()[i] {
                Entry::Boxed { kind: k, .. } if *k == kind => Ok((i, j)),
                Entry::Boxed { kind: k, pivot, .. } => Err(SyncError::OrderViolation {
                    endpoint: x.clone(),
                    reason: format!(
                        "{} is boxed in a {}-box for {}, not a {}-box",
                        x,
                        k.symbol(),
                        pivot.name,
                        kind.symbol()
                    ),
                    context: ctx.clone(),
                }),
                _ => unreachable!(),
            },
            None => Err(unknown(x, ctx)),
            Some(Location::Active(_)) => {
                let ty = ctx.type_of(x).unwrap();
                let c = kind.member_connective();
                if ty.connective() != c {
                    Err(mismatch(x, c, ty, ctx))
                } else {
                    let what = if kind == BoxKind::Q { "request" } else { "selection" };
                    Err(SyncError::OrderViolation {
                        endpoint: x.clone(),
                        reason: format!("{} on {} does not forward a pending {}", what, x, if kind == BoxKind::Q { "request" } else { "choice" }),
                        context: ctx.clone(),
                    })
                }
            }
            Some(loc) => Err(blocked(x, loc, rule, ctx)),
        }
    }

    fn with_instances<'a>(
        &self,
        p: &'a Process,
        x: &Name,
        l: &'a Process,
        r: &'a Process,
        ctx: &Context,
    ) -> Result<Vec<Instance<'a>>, SyncError> {
        let (i, a) = active(ctx, x, SyncRule::With)?;
        let (a1, b1) = a.as_with().ok_or_else(|| mismatch(x, Connective::With, &a, ctx))?;
        // a selection hidden behind a cut may only surface after reduction
        let under_cut = self.runtime && (l.has_cut() || r.has_cut());
        let candidates: Vec<Typed> = ctx
            .actives()
            .into_iter()
            .filter(|t| {
                &t.name != x
                    && t.ty.as_plus().is_some()
                    && (under_cut
                        || (first_action(l, &t.name) == Some(Act::InL)
                            && first_action(r, &t.name) == Some(Act::InR)))
            })
            .cloned()
            .collect();
        let mut selections = nonempty_subsets_desc(&candidates);
        if self.opts.allow_empty_with {
            selections.push(vec![]);
        }
        if selections.is_empty() {
            let plus: Vec<String> = ctx
                .actives()
                .into_iter()
                .filter(|t| t.ty.as_plus().is_some())
                .map(|t| t.name.to_string())
                .collect();
            let reason = if plus.is_empty() {
                format!("case on {} has no active ⊕ endpoint to forward the choice to", x)
            } else {
                format!(
                    "case on {} must forward its choice, but none of the active ⊕ endpoints ({}) is selected first in both branches",
                    x,
                    plus.join(", ")
                )
            };
            return Err(SyncError::OrderViolation { endpoint: x.clone(), reason, context: ctx.clone() });
        }
        let _ = p;
        let mut out = Vec::new();
        for sel in selections {
            let names: BTreeSet<&Name> = sel.iter().map(|t| &t.name).collect();
            let base = ctx.filter(|e| !matches!(e, Entry::Active(t) if names.contains(&t.name)));
            let idx = base.find(x).and_then(|l| if let Location::Active(j) = l { Some(j) } else { None }).unwrap_or(i);
            let mut cl = base.clone();
            cl.replace(idx, Entry::Boxed { kind: BoxKind::L, members: sel.clone(), pivot: Typed::new(x.clone(), a1.clone()) })?;
            let mut cr = base;
            cr.replace(idx, Entry::Boxed { kind: BoxKind::R, members: sel, pivot: Typed::new(x.clone(), b1.clone()) })?;
            out.push(Instance { rule: SyncRule::With, premises: vec![(l, cl), (r, cr)] });
        }
        Ok(out)
    }
}

fn unknown(x: &Name, ctx: &Context) -> SyncError {
    SyncError::UnknownEndpoint { endpoint: x.clone(), context: ctx.clone() }
}

fn not_fwd(rule: SyncRule, x: &Name, reason: &str, ctx: &Context) -> SyncError {
    SyncError::NotAForwarder { rule, endpoint: x.clone(), reason: reason.to_string(), context: ctx.clone() }
}

fn mismatch(x: &Name, expected: Connective, found: &Prop, ctx: &Context) -> SyncError {
    SyncError::TypeMismatch {
        endpoint: x.clone(),
        expected: expected.to_string(),
        found: found.clone(),
        context: ctx.clone(),
    }
}

fn expect(x: &Name, c: Connective, a: &Prop, ctx: &Context) -> Result<(), SyncError> {
    if a.connective() == c {
        Ok(())
    } else {
        Err(mismatch(x, c, a, ctx))
    }
}

fn blocked(x: &Name, loc: Location, rule: SyncRule, ctx: &Context) -> SyncError {
    match loc {
        Location::Message(_) => not_fwd(rule, x, &format!("message {} is used, not forwarded", x), ctx),
        Location::Blocked(_) => SyncError::OrderViolation {
            endpoint: x.clone(),
            reason: format!("{} is blocked until its buffered message is forwarded", x),
            context: ctx.clone(),
        },
        Location::Member(..) => SyncError::OrderViolation {
            endpoint: x.clone(),
            reason: format!("{} is boxed and must first forward a pending choice or request", x),
            context: ctx.clone(),
        },
        Location::Pivot(_) => SyncError::OrderViolation {
            endpoint: x.clone(),
            reason: format!("{} is the pivot of a box whose members are still pending", x),
            context: ctx.clone(),
        },
        Location::Active(_) => unreachable!(),
    }
}

fn active(ctx: &Context, x: &Name, rule: SyncRule) -> Result<(usize, Prop), SyncError> {
    match ctx.find(x) {
        Some(Location::Active(i)) => Ok((i, ctx.type_of(x).unwrap().clone())),
        None => Err(unknown(x, ctx)),
        Some(loc) => Err(blocked(x, loc, rule, ctx)),
    }
}

fn leftover(ctx: &Context, rule: SyncRule, used: &[&Name]) -> Result<(), SyncError> {
    let extra: Vec<Name> = ctx.names().into_iter().filter(|n| !used.contains(&n)).collect();
    if extra.is_empty() {
        Ok(())
    } else {
        Err(SyncError::LeftoverEndpoints { rule, endpoints: extra, context: ctx.clone() })
    }
}

fn star_splits(star: bool) -> Vec<(bool, bool)> {
    if star {
        vec![(true, false), (false, true), (true, true)]
    } else {
        vec![(false, false)]
    }
}

fn no_cut(x: &Name, y: &Name, reason: String, ctx: &Context) -> SyncError {
    SyncError::NoCutRuleApplies { x: x.clone(), y: y.clone(), reason, context: ctx.clone() }
}

fn cut_instances<'a>(
    x: &Name,
    a: &Prop,
    y: &Name,
    l: &'a Process,
    r: &'a Process,
    ctx: &Context,
) -> Result<Vec<Instance<'a>>, SyncError> {
    let mut fl = l.free_names();
    fl.remove(x);
    let on_left = |n: &Name| fl.contains(n) || !r.occurs_free(n);
    let mut left = Context::new();
    let mut right = Context::new();
    let mut split = None;
    for e in ctx.entries() {
        match e {
            Entry::Boxed { kind, members, pivot } if members.iter().any(|m| on_left(&m.name) != on_left(&pivot.name)) => {
                if split.is_some() {
                    return Err(no_cut(x, y, "more than one box is shared between the two sides".into(), ctx));
                }
                split = Some((*kind, members.clone(), pivot.clone()));
            }
            _ => {
                if on_left(e.key()) {
                    left.push(e.clone())?;
                } else {
                    right.push(e.clone())?;
                }
            }
        }
    }
    let ad = dual(a);
    let mut out = Vec::new();
    match split {
        None => {
            for (sl, sr) in star_splits(ctx.star) {
                let mut cl = left.clone().with_star(sl);
                cl.push_active(x.clone(), a.clone())?;
                let mut cr = right.clone().with_star(sr);
                cr.push_active(y.clone(), ad.clone())?;
                out.push(Instance { rule: SyncRule::Cut, premises: vec![(l, cl), (r, cr)] });
            }
        }
        Some((kind, members, pivot)) => {
            // Orient so that the pivot's side is the "box side".
            let pivot_left = on_left(&pivot.name);
            let (bp, bx, bt, mut bctx, op, ox, ot, octx) = if pivot_left {
                (l, x, a.clone(), left, r, y, ad, right)
            } else {
                (r, y, ad, right, l, x, a.clone(), left)
            };
            let (d1, d2): (Vec<Typed>, Vec<Typed>) =
                members.into_iter().partition(|m| on_left(&m.name) == pivot_left);
            if kind != BoxKind::Q {
                let (rule1, rule2) = if kind == BoxKind::L {
                    (SyncRule::CutPlusWith1L, SyncRule::CutPlusWith2L)
                } else {
                    (SyncRule::CutPlusWith1R, SyncRule::CutPlusWith2R)
                };
                if let (Some(_), Process::Case(z, o1, o2)) = (bt.as_plus(), op) {
                    if z == ox {
                        let (c, d) = ot.as_with().expect("dual of ⊕ is &");
                        for (sb, so) in star_splits(ctx.star) {
                            let mut cb = bctx.clone().with_star(sb);
                            let mut m1 = d1.clone();
                            m1.push(Typed::new(bx.clone(), bt.clone()));
                            cb.push(Entry::Boxed { kind, members: m1, pivot: pivot.clone() })?;
                            let mut c1 = octx.clone().with_star(so);
                            c1.push(Entry::Boxed { kind: BoxKind::L, members: d2.clone(), pivot: Typed::new(ox.clone(), c.clone()) })?;
                            let mut c2 = octx.clone().with_star(so);
                            c2.push(Entry::Boxed { kind: BoxKind::R, members: d2.clone(), pivot: Typed::new(ox.clone(), d.clone()) })?;
                            out.push(Instance { rule: rule1, premises: vec![(bp, cb), (&**o1, c1), (&**o2, c2)] });
                        }
                    }
                }
                for (sb, so) in star_splits(ctx.star) {
                    let mut cb = bctx.clone().with_star(sb);
                    cb.push(Entry::Boxed { kind, members: d1.clone(), pivot: pivot.clone() })?;
                    cb.push_active(bx.clone(), bt.clone())?;
                    let mut co = octx.clone().with_star(so);
                    co.push(Entry::Boxed { kind, members: d2.clone(), pivot: Typed::new(ox.clone(), ot.clone()) })?;
                    out.push(Instance { rule: rule2, premises: vec![(bp, cb), (op, co)] });
                }
            } else {
                if let (Some(_), Process::Server(z, v, body)) = (bt.as_why_not(), op) {
                    if z == ox && octx.is_empty() {
                        let oa = ot.as_of_course().expect("dual of ? is !");
                        let mut m1 = d1.clone();
                        m1.push(Typed::new(bx.clone(), bt.clone()));
                        bctx.star = ctx.star;
                        let mut cb = bctx.clone();
                        cb.push(Entry::Boxed { kind, members: m1, pivot: pivot.clone() })?;
                        let mut co = Context::new();
                        co.push(Entry::Boxed { kind: BoxKind::Q, members: d2.clone(), pivot: Typed::new(v.clone(), oa.clone()) })?;
                        out.push(Instance { rule: SyncRule::CutBangQuery1, premises: vec![(bp, cb), (&**body, co)] });
                    }
                }
                for (sb, so) in star_splits(ctx.star) {
                    let mut cb = bctx.clone().with_star(sb);
                    cb.push(Entry::Boxed { kind, members: d1.clone(), pivot: pivot.clone() })?;
                    cb.push_active(bx.clone(), bt.clone())?;
                    let mut co = octx.clone().with_star(so);
                    co.push(Entry::Boxed { kind, members: d2.clone(), pivot: Typed::new(ox.clone(), ot.clone()) })?;
                    out.push(Instance { rule: SyncRule::CutBangQuery2, premises: vec![(bp, cb), (op, co)] });
                }
            }
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn tensor_par_instances<'a>(
    x: &Name,
    b: &Prop,
    y: &Name,
    q: &'a Process,
    u: &Name,
    a: &Prop,
    v: &Name,
    pm: &'a Process,
    r: &'a Process,
    ctx: &Context,
) -> Result<Vec<Instance<'a>>, SyncError> {
    let mut fp = pm.free_names();
    fp.remove(u);
    let mut fq = q.free_names();
    fq.remove(x);
    let mut msgs = Context::new();
    let mut gq = Context::new();
    let mut gr = Context::new();
    for e in ctx.entries() {
        match e {
            Entry::Buffer { msg, blocked } if fp.contains(&msg.name) => {
                if !fq.contains(&blocked.name) {
                    return Err(no_cut(x, y, format!("buffered {} is freed outside the sender", blocked.name), ctx));
                }
                msgs.push(Entry::Active(msg.clone()))?;
                gq.push(Entry::Active(blocked.clone()))?;
            }
            _ => {
                if let Some(n) = e.names().into_iter().find(|n| fp.contains(*n)) {
                    return Err(no_cut(x, y, format!("{} is used in the message but is not a buffered message", n), ctx));
                }
                if fq.contains(e.key()) {
                    gq.push(e.clone())?;
                } else {
                    gr.push(e.clone())?;
                }
            }
        }
    }
    msgs.push_active(u.clone(), a.clone())?;
    gq.push_active(x.clone(), b.clone())?;
    gr.push(Entry::Buffer { msg: Typed::new(v.clone(), dual(a)), blocked: Typed::new(y.clone(), dual(b)) })?;
    Ok(star_splits(ctx.star)
        .into_iter()
        .map(|(sq, sr)| Instance {
            rule: SyncRule::CutTensorPar,
            premises: vec![(pm, msgs.clone()), (q, gq.clone().with_star(sq)), (r, gr.clone().with_star(sr))],
        })
        .collect())
}

/// Indented rendering, one rule per line.
pub fn explain(d: &Derivation) -> String {
    let mut out = String::new();
    explain_into(d, 0, &mut out);
    out
}

fn typed_str(ctx: &Context, n: &Name) -> String {
    match ctx.type_of(n) {
        Some(a) => format!("{}:{:#}", n, a),
        None => n.to_string(),
    }
}

fn explain_line(d: &Derivation) -> String {
    let ctx = d.context();
    if let Judgement::Coherence { global, .. } = &d.conclusion {
        let ends: Vec<String> = global.endpoints().into_iter().map(|n| typed_str(ctx, n)).collect();
        return format!("{} {}", global.rule_name(), ends.join(", "));
    }
    let p = d.process();
    let head = p.subjects().first().map(|n| (*n).clone());
    let h = head.clone().unwrap_or_else(|| Name::new("?"));
    let label = match d.rule {
        Rule::Sync(r) => match r {
            SyncRule::Ax | SyncRule::One | SyncRule::Bot => None,
            _ => Some(format!("{:?}", r)),
        },
        _ => Some(d.rule.label()),
    };
    match (&d.rule, p) {
        (Rule::Sync(SyncRule::Ax), Process::Link(x, y)) | (Rule::Cll(_), Process::Link(x, y)) => {
            format!("{} {} ↔ {}", if label.is_some() { "Axiom" } else { "Ax" }, typed_str(ctx, x), typed_str(ctx, y))
        }
        (Rule::Sync(SyncRule::One), _) => format!("1 {} (★ consumed)", h),
        (Rule::Sync(SyncRule::Bot), _) => format!("⊥ {} (★ set)", h),
        (Rule::Sync(SyncRule::Par), Process::Recv(x, y, _)) => format!("⅋ {}: receive {} into the buffer of {}", typed_str(ctx, x), y, x),
        (Rule::Sync(SyncRule::Tensor), Process::Send(x, y, l, _)) => {
            let mut fv = l.free_names();
            fv.remove(y);
            let fw: Vec<String> = fv.iter().map(|n| n.to_string()).collect();
            format!(
                "⊗ {}: send {}, forwarding {}",
                typed_str(ctx, x),
                y,
                if fw.is_empty() { "nothing".to_string() } else { fw.join(", ") }
            )
        }
        (Rule::Sync(SyncRule::With), Process::Case(x, _, _)) => {
            let boxed: Vec<String> = match d.premises.first().and_then(|s| {
                s.context().entries().iter().find_map(|e| match e {
                    Entry::Boxed { members, pivot, .. } if &pivot.name == x => Some(members.clone()),
                    _ => None,
                })
            }) {
                Some(ms) => ms.iter().map(|m| m.name.to_string()).collect(),
                None => vec![],
            };
            format!("& {}: boxing {{{}}}", typed_str(ctx, x), boxed.join(", "))
        }
        (Rule::Sync(SyncRule::PlusL), _) => format!("⊕l {}", typed_str(ctx, &h)),
        (Rule::Sync(SyncRule::PlusR), _) => format!("⊕r {}", typed_str(ctx, &h)),
        (Rule::Sync(SyncRule::Query), Process::Client(x, y, _)) => format!("? {}: request {}", typed_str(ctx, x), y),
        (Rule::Sync(SyncRule::Bang), Process::Server(x, y, _)) => format!("! {}: serve {}", typed_str(ctx, x), y),
        (Rule::Sync(_), Process::Cut(x, a, y, _, _))
        | (Rule::Sync(_), Process::CutHalf(x, a, y, _, _))
        | (Rule::Cll(_), Process::Cut(x, a, y, _, _)) => {
            format!("{} {}:{:#} | {}:{:#}", label.unwrap_or_default(), x, a, y, dual(a))
        }
        _ => match head {
            Some(n) => format!("{} {}", label.unwrap_or_default(), typed_str(ctx, &n)),
            None => label.unwrap_or_default(),
        },
    }
}

fn explain_into(d: &Derivation, depth: usize, out: &mut String) {
    writeln!(out, "{}{}", "  ".repeat(depth), explain_line(d)).unwrap();
    for p in &d.premises {
        explain_into(p, depth + 1, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic_cll::check_cll;
    use crate::surface::{parse_context, parse_process, parse_runtime_process};

    fn p(s: &str) -> Process {
        parse_process(s).unwrap()
    }

    fn c(s: &str) -> Context {
        parse_context(s).unwrap()
    }

    #[test]
    fn axiom_and_one() {
        let d = check_sync(&p("x<->y"), &c("x : ~a, y : a")).unwrap();
        assert_eq!(d.rule, Rule::Sync(SyncRule::Ax));
        assert_eq!(explain(&d).trim(), "Ax x:~a ↔ y:a");
        let d = check_sync(&p("x[]"), &c("x : 1, *")).unwrap();
        assert_eq!(explain(&d).trim(), "1 x (★ consumed)");
        assert!(matches!(check_sync(&p("x[]"), &c("x : 1")), Err(SyncError::StarMissing { .. })));
    }

    #[test]
    fn wait_then_close() {
        let d = check_sync(&p("x().y[]"), &c("x : bot, y : 1")).unwrap();
        assert_eq!(d.rule, Rule::Sync(SyncRule::Bot));
        assert!(d.premises[0].context().star);
    }

    #[test]
    fn message_must_be_forwarded() {
        // y is received on x and must go out on z
        let ok = p("x(y). z[y'].(y<->y' | x().z[])");
        let ctx = c("x : a par bot, z : ~a * 1");
        check_sync(&ok, &ctx).unwrap();
        let bad = p("x(y). z[y'].(y'<->w | y().x().z[])");
        let ctx = c("x : bot par bot, z : ~a * 1, w : a");
        assert!(matches!(check_sync(&bad, &ctx), Err(SyncError::NotAForwarder { rule: SyncRule::Tensor, .. })));
    }

    #[test]
    fn blocked_endpoint_is_order_violation() {
        let q = p("x(y). x().y().z[]");
        let ctx = c("x : a par bot, z : 1");
        assert!(matches!(check_sync(&q, &ctx), Err(SyncError::OrderViolation { .. })));
    }

    #[test]
    fn discussion_pair() {
        let ctx = c(include_str!("../tests/data/discussion.llp"));
        let acc = p(include_str!("../tests/data/discussion_accepted.fwd"));
        let rej = p(include_str!("../tests/data/discussion_rejected.fwd"));
        check_sync(&acc, &ctx).unwrap();
        match check_sync(&rej, &ctx) {
            Err(SyncError::OrderViolation { endpoint, .. }) => assert_eq!(endpoint.as_str(), "x"),
            other => panic!("expected an order violation, got {:?}", other),
        }
        check_cll(&acc, &ctx).unwrap();
        check_cll(&rej, &ctx).unwrap();
    }

    #[test]
    fn two_buyer_arbiter_checks() {
        let d = check_sync(&p(include_str!("../tests/data/p1.fwd")), &c(include_str!("../tests/data/p1.llp"))).unwrap();
        validate(&d, SyncOptions::default()).unwrap();
        let text = explain(&d);
        assert!(text.lines().count() >= 20);
        assert!(text.lines().last().unwrap().trim_start().starts_with("1 s'"));
        check_sync(&p(include_str!("../tests/data/p1_variant.fwd")), &c(include_str!("../tests/data/p1.llp"))).unwrap();
        check_sync(&p(include_str!("../tests/data/p2.fwd")), &c(include_str!("../tests/data/p2.llp"))).unwrap();
    }

    #[test]
    fn with_boxes_the_forwarded_choice() {
        let q = p("x.case(z.inl; x().z[], z.inr; x().z[])");
        let ctx = c("x : bot & bot, z : 1 + 1");
        let d = check_sync(&q, &ctx).unwrap();
        assert_eq!(d.premises[0].context(), &c("@L(z : 1 + 1) x : bot"));
        assert!(explain(&d).starts_with("& x:bot & bot: boxing {z}"), "{}", explain(&d));
    }

    #[test]
    fn empty_with_needs_flag() {
        let q = p("x.case(x().z[], x().z[])");
        let ctx = c("x : bot & bot, z : 1");
        assert!(check_sync(&q, &ctx).is_err());
        check_sync_with(&q, &ctx, SyncOptions { allow_empty_with: true }).unwrap();
    }

    #[test]
    fn server_and_client() {
        let q = p("!x(y). ?z[w]. y<->w");
        let ctx = c("x : !a, z : ?~a");
        let d = check_sync(&q, &ctx).unwrap();
        assert_eq!(d.premises[0].rule, Rule::Sync(SyncRule::Query));
        let bad = c("x : !a, z : ~a");
        assert!(matches!(check_sync(&q, &bad), Err(SyncError::NonExponentialContext { .. })));
    }

    #[test]
    fn unit_cut_runtime() {
        let q = p("new (x:1)(y) (x[] | y().z[])");
        assert!(matches!(check_sync(&q, &c("z : 1")), Err(SyncError::RuntimeFormNotAllowed)));
        let d = check_sync_runtime(&q, &c("z : 1, *")).unwrap();
        assert_eq!(d.rule, Rule::Sync(SyncRule::Cut));
        assert_eq!(d.premises[0].rule, Rule::Sync(SyncRule::One));
        assert_eq!(d.premises[1].rule, Rule::Sync(SyncRule::Bot));
    }

    #[test]
    fn tensor_par_runtime_cut() {
        // ν x y (x[u].(u<->m | x[]) | y(v). v<->n ... ) after the β step
        let q = parse_runtime_process("new (x:1)([]y) (x[] | new (u:a)([v]) (u<->m | n[v'].(v<->v' | y().n[])))").unwrap();
        let ctx = c("[m : ~a] k : bot, n : a * 1");
        // m is a message buffered on k; the sender must free k
        let q2 = parse_runtime_process("new (x:1)([]y) (k().x[] | new (u:a)([v]) (u<->m | n[v'].(v<->v' | y().n[])))").unwrap();
        assert!(check_sync_runtime(&q, &ctx).is_err());
        let d = check_sync_runtime(&q2, &ctx).unwrap();
        assert_eq!(d.rule, Rule::Sync(SyncRule::CutTensorPar));
        validate(&d, SyncOptions::default()).unwrap();
    }

    #[test]
    fn cut_type_mismatch() {
        let (x, y) = (Name::new("x"), Name::new("y"));
        assert!(matches!(
            check_cut_types(&x, &Prop::atom("a"), &y, &Prop::atom("a")),
            Err(SyncError::CutTypeMismatch { .. })
        ));
        check_cut_types(&x, &Prop::atom("a"), &y, &Prop::neg_atom("a")).unwrap();
    }
}
