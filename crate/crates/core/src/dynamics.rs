//! Composition of forwarders and cut elimination as a rewriting semantics.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::logic_cll::{dual, names};
use crate::logic_sync::{check_cut_types, SyncError};
use crate::surface::print_process;
use crate::terms::{Context, Name, Process, Prop};

use Process::*;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum StepKind {
    Beta,
    Kappa,
    Equiv,
}

impl StepKind {
    pub fn symbol(self) -> &'static str {
        match self {
            StepKind::Beta => "β",
            StepKind::Kappa => "κ",
            StepKind::Equiv => "≡",
        }
    }

    pub fn from_symbol(s: &str) -> Option<StepKind> {
        match s {
            "β" => Some(StepKind::Beta),
            "κ" => Some(StepKind::Kappa),
            "≡" => Some(StepKind::Equiv),
            _ => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Step {
    pub index: usize,
    pub kind: StepKind,
    pub rule: String,
    pub position: Vec<usize>,
    pub before: Process,
    pub after: Process,
}

impl Step {
    /// `k<idx> <kind> <rule> @ <path>`
    pub fn line(&self) -> String {
        format!("k{} {} {} @ {}", self.index, self.kind.symbol(), self.rule, path_string(&self.position))
    }
}

pub fn path_string(path: &[usize]) -> String {
    if path.is_empty() {
        "root".to_string()
    } else {
        path.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
    }
}

pub fn parse_path(s: &str) -> Option<Vec<usize>> {
    if s == "root" {
        return Some(vec![]);
    }
    s.split('.').map(|p| p.parse().ok()).collect()
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Trace {
    pub initial: Process,
    pub steps: Vec<Step>,
    pub result: Process,
}

impl Trace {
    /// One line per step; with `full`, the terms before and after each step too.
    pub fn render(&self, full: bool) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&s.line());
            out.push('\n');
            if full {
                out.push_str(&format!("  before: {}\n  after:  {}\n", print_process(&s.before), print_process(&s.after)));
            }
        }
        out
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(false))
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum DynamicsError {
    #[error("free names {} occur on both sides of the composition", names(.0))]
    NameClash(Vec<Name>),
    #[error("{0} is not free in the process")]
    EndpointNotFree(Name),
    #[error(transparent)]
    CutType(#[from] SyncError),
    #[error("step limit of {limit} exceeded")]
    StepLimitExceeded { limit: usize, trace: Box<Trace> },
    #[error("stuck configuration at {}: {reason}", path_string(.position))]
    StuckConfiguration { position: Vec<usize>, reason: String },
    #[error("termination measure did not decrease at step {rule} @ {}", path_string(.position))]
    MeasureViolation { rule: String, position: Vec<usize> },
    #[error("replay diverged at step {0}")]
    ReplayMismatch(usize),
}

/// `new (x:A)(y) (P | Q)`.
pub fn compose(p: &Process, x: &Name, q: &Process, y: &Name, a: &Prop) -> Result<Process, DynamicsError> {
    let fp = p.free_names();
    let fq = q.free_names();
    if !fp.contains(x) {
        return Err(DynamicsError::EndpointNotFree(x.clone()));
    }
    if !fq.contains(y) {
        return Err(DynamicsError::EndpointNotFree(y.clone()));
    }
    let mut q = q.clone();
    let mut y = y.clone();
    if &y == x {
        let fresh = y.refresh();
        q = q.substitute(&y, &fresh);
        y = fresh;
    }
    let clash: Vec<Name> = fp.iter().filter(|n| *n != x && fq.contains(*n) && **n != y).cloned().collect();
    if !clash.is_empty() {
        return Err(DynamicsError::NameClash(clash));
    }
    Ok(Cut(x.clone(), a.clone(), y, Box::new(p.clone()), Box::new(q)).barendregt())
}

/// Composes two typed processes, checking that the endpoints are dual.
pub fn compose_typed(
    p: &Process,
    gp: &Context,
    x: &Name,
    q: &Process,
    gq: &Context,
    y: &Name,
) -> Result<(Process, Context), DynamicsError> {
    let a = gp.active(x).map(|(_, a)| a.clone()).ok_or_else(|| DynamicsError::EndpointNotFree(x.clone()))?;
    let b = gq.active(y).map(|(_, b)| b.clone()).ok_or_else(|| DynamicsError::EndpointNotFree(y.clone()))?;
    check_cut_types(x, &a, y, &b)?;
    let r = compose(p, x, q, y, &a)?;
    let mut ctx = gp.filter(|e| e.key() != x);
    for e in gq.entries() {
        if e.key() != y {
            ctx.push(e.clone()).map_err(|_| DynamicsError::NameClash(vec![e.key().clone()]))?;
        }
    }
    ctx.star = gp.star || gq.star;
    Ok((r, ctx))
}

/// The innermost-leftmost cut, with CutMsg counted as part of its CutHalf.
fn find_cut(p: &Process, path: &mut Vec<usize>, under_half: bool) -> Option<Vec<usize>> {
    for (i, c) in p.children().into_iter().enumerate() {
        path.push(i);
        let inside = matches!(p, CutHalf(..)) && i == 1;
        if let Some(found) = find_cut(c, path, inside) {
            return Some(found);
        }
        path.pop();
    }
    match p {
        Cut(..) | CutHalf(..) => Some(path.clone()),
        CutMsg(..) if !under_half => Some(path.clone()),
        _ => None,
    }
}

type Rewrite = (StepKind, String, Process);

fn stuck(reason: impl Into<String>) -> String {
    reason.into()
}

fn bx(p: Process) -> Box<Process> {
    Box::new(p)
}

/// Renames `binder` in `body` if it would capture a free name of `others`.
fn guard(binder: &Name, body: &Process, others: &[&Process]) -> (Name, Process) {
    if others.iter().any(|o| o.occurs_free(binder)) {
        let fresh = binder.refresh();
        (fresh.clone(), body.substitute(binder, &fresh))
    } else {
        (binder.clone(), body.clone())
    }
}

/// Pulls the head action of `side` out, rebuilding the cut around its continuation(s).
fn commute(side: &Process, cut_name: &Name, other: &[&Process], rebuild: &dyn Fn(Process, bool) -> Process) -> Result<(String, Process), String> {
    let r = match side {
        Wait(u, s) => ("wait", Wait(u.clone(), bx(rebuild((**s).clone(), false)))),
        Send(u, v, m, n) => {
            if m.occurs_free(cut_name) {
                return Err(stuck(format!("{} is sent inside a message", cut_name)));
            }
            ("send", Send(u.clone(), v.clone(), m.clone(), bx(rebuild((**n).clone(), false))))
        }
        Recv(u, v, s) => {
            let (v, s) = guard(v, s, other);
            ("recv", Recv(u.clone(), v, bx(rebuild(s, false))))
        }
        InL(u, s) => ("inl", InL(u.clone(), bx(rebuild((**s).clone(), false)))),
        InR(u, s) => ("inr", InR(u.clone(), bx(rebuild((**s).clone(), false)))),
        Case(u, s1, s2) => {
            ("case", Case(u.clone(), bx(rebuild((**s1).clone(), false)), bx(rebuild((**s2).clone(), true))))
        }
        Client(u, v, s) => {
            let (v, s) = guard(v, s, other);
            ("client", Client(u.clone(), v, bx(rebuild(s, false))))
        }
        Server(u, v, s) => {
            let (v, s) = guard(v, s, other);
            ("server", Server(u.clone(), v, bx(rebuild(s, false))))
        }
        _ => return Err(stuck(format!("no commuting conversion for {}", head_name(side)))),
    };
    Ok((r.0.to_string(), r.1))
}

fn head_name(p: &Process) -> &'static str {
    match p {
        Link(..) => "a link",
        Close(_) => "a close",
        Wait(..) => "a wait",
        Send(..) => "a send",
        Recv(..) => "a receive",
        InL(..) | InR(..) => "a selection",
        Case(..) => "a case",
        Client(..) => "a request",
        Server(..) => "a server",
        Cut(..) | CutHalf(..) | CutMsg(..) => "a cut",
    }
}

fn forwards_obligation(p: &Process) -> bool {
    matches!(p, InL(..) | InR(..) | Client(..))
}

fn principal(p: &Process, x: &Name) -> bool {
    match p {
        Link(a, b) => a == x || b == x,
        _ => p.subjects().first() == Some(&x),
    }
}

fn rewrite_cut(x: &Name, a: &Prop, y: &Name, p: &Process, q: &Process) -> Result<Rewrite, String> {
    if let Link(l, r) = p {
        if l == x || r == x {
            let w = if l == x { r } else { l };
            return Ok((StepKind::Beta, "link".into(), q.substitute(y, w)));
        }
    }
    if let Link(l, r) = q {
        if l == y || r == y {
            let w = if l == y { r } else { l };
            return Ok((StepKind::Beta, "link/sym".into(), p.substitute(x, w)));
        }
    }
    let left_eager = !matches!(a, Prop::Plus(..) | Prop::WhyNot(..));
    let pl = principal(p, x);
    let pr = principal(q, y);
    let kappa_left = || {
        let rebuild = |s: Process, copy: bool| {
            let q2 = if copy { q.refresh_bound() } else { q.clone() };
            Cut(x.clone(), a.clone(), y.clone(), bx(s), bx(q2))
        };
        commute(p, x, &[q], &rebuild).map(|(r, t)| (StepKind::Kappa, r, t))
    };
    let kappa_right = || {
        let rebuild = |s: Process, copy: bool| {
            let p2 = if copy { p.refresh_bound() } else { p.clone() };
            Cut(x.clone(), a.clone(), y.clone(), bx(p2), bx(s))
        };
        commute(q, y, &[p], &rebuild).map(|(r, t)| (StepKind::Kappa, format!("{}/sym", r), t))
    };
    match (pl, pr) {
        (false, false) => {
            // a pending selection or request must move before its box pivot is used
            let left_first = match (forwards_obligation(p), forwards_obligation(q)) {
                (true, false) => true,
                (false, true) => false,
                _ => left_eager,
            };
            if left_first {
                kappa_left()
            } else {
                kappa_right()
            }
        }
        (false, true) => kappa_left(),
        (true, false) => kappa_right(),
        (true, true) => beta(x, a, y, p, q),
    }
}

fn beta(x: &Name, a: &Prop, y: &Name, p: &Process, q: &Process) -> Result<Rewrite, String> {
    let mismatch = || stuck(format!("cut on {}/{} at type {:#} meets {} and {}", x, y, a, head_name(p), head_name(q)));
    let b = |r: &str, t: Process| Ok((StepKind::Beta, r.to_string(), t));
    match (p, q) {
        (Close(_), Wait(_, q1)) => b("1⊥", (**q1).clone()),
        (Wait(_, p1), Close(_)) => b("1⊥/sym", (**p1).clone()),
        (Send(_, u, m, n), Recv(_, v, r)) => {
            let (ta, tb) = a.as_tensor().ok_or_else(mismatch)?;
            let msg = CutMsg(u.clone(), ta.clone(), v.clone(), m.clone(), r.clone());
            b("⊗⅋", CutHalf(x.clone(), tb.clone(), y.clone(), n.clone(), bx(msg)))
        }
        (Recv(_, v, r), Send(_, u, m, n)) => {
            let d = dual(a);
            let (ta, tb) = d.as_tensor().ok_or_else(mismatch)?;
            let msg = CutMsg(u.clone(), ta.clone(), v.clone(), m.clone(), r.clone());
            b("⊗⅋/sym", CutHalf(y.clone(), tb.clone(), x.clone(), n.clone(), bx(msg)))
        }
        (InL(_, p1), Case(_, q1, _)) => {
            let (ta, _) = a.as_plus().ok_or_else(mismatch)?;
            b("⊕&", Cut(x.clone(), ta.clone(), y.clone(), p1.clone(), q1.clone()))
        }
        (InR(_, p1), Case(_, _, q2)) => {
            let (_, tb) = a.as_plus().ok_or_else(mismatch)?;
            b("⊕&", Cut(x.clone(), tb.clone(), y.clone(), p1.clone(), q2.clone()))
        }
        (Case(_, p1, _), InL(_, q1)) => {
            let (ta, _) = a.as_with().ok_or_else(mismatch)?;
            b("⊕&/sym", Cut(x.clone(), ta.clone(), y.clone(), p1.clone(), q1.clone()))
        }
        (Case(_, _, p2), InR(_, q1)) => {
            let (_, tb) = a.as_with().ok_or_else(mismatch)?;
            b("⊕&/sym", Cut(x.clone(), tb.clone(), y.clone(), p2.clone(), q1.clone()))
        }
        (Client(_, u, p1), Server(_, v, q1)) => {
            let ta = a.as_why_not().ok_or_else(mismatch)?;
            b("?!", Cut(u.clone(), ta.clone(), v.clone(), p1.clone(), q1.clone()))
        }
        (Server(_, v, p1), Client(_, u, q1)) => {
            let ta = a.as_of_course().ok_or_else(mismatch)?;
            b("?!/sym", Cut(v.clone(), ta.clone(), u.clone(), p1.clone(), q1.clone()))
        }
        _ => Err(mismatch()),
    }
}

#[allow(clippy::too_many_arguments)]
fn rewrite_half(
    y: &Name,
    b: &Prop,
    z: &Name,
    q: &Process,
    x: &Name,
    a: &Prop,
    w: &Name,
    p: &Process,
    r: &Process,
) -> Result<Rewrite, String> {
    let half = |r2: Process, copy: bool| {
        let (q2, p2) = if copy { (q.refresh_bound(), p.refresh_bound()) } else { (q.clone(), p.clone()) };
        let msg = CutMsg(x.clone(), a.clone(), w.clone(), bx(p2), bx(r2));
        CutHalf(y.clone(), b.clone(), z.clone(), bx(q2), bx(msg))
    };
    if let Send(u, v, m, n) = r {
        if m.occurs_free(w) {
            let (v, m) = guard(v, m, &[p]);
            let left = Cut(x.clone(), a.clone(), w.clone(), bx(p.clone()), bx(m));
            let right = Cut(y.clone(), b.clone(), z.clone(), bx(q.clone()), n.clone());
            return Ok((StepKind::Kappa, "half-free".into(), Send(u.clone(), v, bx(left), bx(right))));
        }
    }
    if r.subjects().iter().any(|s| *s == z || *s == w) {
        return Err(stuck(format!("{} acts on a buffered endpoint", head_name(r))));
    }
    let (rule, t) = commute(r, w, &[p, q], &half)?;
    Ok((StepKind::Kappa, format!("half-{}", rule), t))
}

fn rewrite(t: &Process) -> Result<Rewrite, String> {
    match t {
        Cut(x, a, y, p, q) => rewrite_cut(x, a, y, p, q),
        CutHalf(y, b, z, q, m) => match &**m {
            CutMsg(x, a, w, p, r) => rewrite_half(y, b, z, q, x, a, w, p, r),
            _ => Err(stuck("a half cut must enclose a message cut")),
        },
        CutMsg(..) => Err(stuck("message cut outside a half cut")),
        _ => Err(stuck("not a cut")),
    }
}

/// (formula size, subterm size) for each cut in `p`; a half cut and its
/// message cut count once.
pub fn cut_measure(p: &Process) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    measure_into(p, &mut out);
    out.sort();
    out
}

fn measure_into(p: &Process, out: &mut Vec<(usize, usize)>) {
    match p {
        Cut(_, a, _, l, r) => {
            out.push((a.size(), p.size()));
            measure_into(l, out);
            measure_into(r, out);
        }
        CutHalf(_, b, _, q, m) => match &**m {
            CutMsg(_, a, _, pm, r) => {
                out.push((a.size() + b.size(), p.size()));
                measure_into(q, out);
                measure_into(pm, out);
                measure_into(r, out);
            }
            other => {
                out.push((b.size(), p.size()));
                measure_into(q, out);
                measure_into(other, out);
            }
        },
        _ => {
            for c in p.children() {
                measure_into(c, out);
            }
        }
    }
}

/// Strict multiset extension of the lexicographic order on pairs.
pub fn multiset_less(after: &[(usize, usize)], before: &[(usize, usize)]) -> bool {
    let mut a: Vec<_> = after.to_vec();
    let mut b: Vec<_> = before.to_vec();
    a.sort();
    b.sort();
    let (mut i, mut j) = (0, 0);
    let mut only_a = Vec::new();
    let mut only_b = Vec::new();
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => match x.cmp(y) {
                Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
                Ordering::Less => {
                    only_a.push(*x);
                    i += 1;
                }
                Ordering::Greater => {
                    only_b.push(*y);
                    j += 1;
                }
            },
            (Some(x), None) => {
                only_a.push(*x);
                i += 1;
            }
            (None, Some(y)) => {
                only_b.push(*y);
                j += 1;
            }
            (None, None) => break,
        }
    }
    !only_b.is_empty() && only_a.iter().all(|x| only_b.iter().any(|y| y > x))
}

/// One rewrite by the normalization strategy, or `None` on a cut-free term.
pub fn step(p: &Process) -> Result<Option<Step>, DynamicsError> {
    let Some(path) = find_cut(p, &mut Vec::new(), false) else { return Ok(None) };
    let sub = p.at(&path).expect("path found by search");
    let (kind, rule, new) =
        rewrite(sub).map_err(|reason| DynamicsError::StuckConfiguration { position: path.clone(), reason })?;
    if !multiset_less(&cut_measure(&new), &cut_measure(sub)) {
        return Err(DynamicsError::MeasureViolation { rule, position: path });
    }
    let after = p.replace_at(&path, new);
    Ok(Some(Step { index: 0, kind, rule, position: path, before: p.clone(), after }))
}

/// Rewrites until no cut remains.
pub fn normalize(p: &Process, max_steps: usize) -> Result<Trace, DynamicsError> {
    let mut cur = p.clone();
    let mut steps = Vec::new();
    while let Some(mut s) = step(&cur)? {
        if steps.len() >= max_steps {
            let trace = Trace { initial: p.clone(), steps, result: cur };
            return Err(DynamicsError::StepLimitExceeded { limit: max_steps, trace: Box::new(trace) });
        }
        s.index = steps.len();
        cur = s.after.clone();
        steps.push(s);
    }
    Ok(Trace { initial: p.clone(), steps, result: cur })
}

/// Re-runs a trace and checks that every recorded step is reproduced.
pub fn replay(trace: &Trace) -> Result<Process, DynamicsError> {
    let mut cur = trace.initial.clone();
    for (i, s) in trace.steps.iter().enumerate() {
        match step(&cur)? {
            Some(t) if t.kind == s.kind && t.rule == s.rule && t.position == s.position && t.after.alpha_eq(&s.after) => {
                cur = t.after;
            }
            _ => return Err(DynamicsError::ReplayMismatch(i)),
        }
    }
    if !cur.alpha_eq(&trace.result) {
        return Err(DynamicsError::ReplayMismatch(trace.steps.len()));
    }
    Ok(cur)
}

/// The scope-rearrangement laws, read left to right.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ScopeLaw {
    /// `ν wz (P | ν xy (Q | R)) ≡ ν xy (ν wz (P | Q) | R)` when x, z ∈ fn(Q).
    Assoc,
    /// A cut inside the message of a half cut moves out, when x, v ∈ fn(P2).
    Message,
    /// A cut inside the sender side of a half cut moves out, when y, v ∈ fn(Q2).
    Sender,
    /// A cut inside the receiver side of a half cut moves out, when z, v ∈ fn(R2).
    Receiver,
}

/// Applies a scope law at the root of `p` if its shape and side condition match.
pub fn rearrange(p: &Process, law: ScopeLaw) -> Option<Process> {
    let free = |t: &Process, ns: [&Name; 2]| ns.iter().all(|n| t.occurs_free(n));
    match (law, p) {
        (ScopeLaw::Assoc, Cut(w, b, z, pp, inner)) => match &**inner {
            Cut(x, a, y, q, r) if free(q, [x, z]) => Some(Cut(
                x.clone(),
                a.clone(),
                y.clone(),
                bx(Cut(w.clone(), b.clone(), z.clone(), pp.clone(), q.clone())),
                r.clone(),
            )),
            _ => None,
        },
        (_, CutHalf(y, b, z, q, m)) => {
            let CutMsg(x, a, w, pm, r) = &**m else { return None };
            let half = |q2: Process, p2: Process, r2: Process| {
                CutHalf(y.clone(), b.clone(), z.clone(), bx(q2), bx(CutMsg(x.clone(), a.clone(), w.clone(), bx(p2), bx(r2))))
            };
            match law {
                ScopeLaw::Message => match &**pm {
                    Cut(u, c, v, p1, p2) if free(p2, [x, v]) => Some(Cut(
                        u.clone(),
                        c.clone(),
                        v.clone(),
                        p1.clone(),
                        bx(half((**q).clone(), (**p2).clone(), (**r).clone())),
                    )),
                    _ => None,
                },
                ScopeLaw::Sender => match &**q {
                    Cut(u, c, v, q1, q2) if free(q2, [y, v]) => Some(Cut(
                        u.clone(),
                        c.clone(),
                        v.clone(),
                        q1.clone(),
                        bx(half((**q2).clone(), (**pm).clone(), (**r).clone())),
                    )),
                    _ => None,
                },
                ScopeLaw::Receiver => match &**r {
                    Cut(u, c, v, r1, r2) if free(r2, [z, v]) => Some(Cut(
                        u.clone(),
                        c.clone(),
                        v.clone(),
                        r1.clone(),
                        bx(half((**q).clone(), (**pm).clone(), (**r2).clone())),
                    )),
                    _ => None,
                },
                ScopeLaw::Assoc => None,
            }
        }
        _ => None,
    }
}

/// Canonical representative up to link symmetry, cut symmetry and α.
pub fn struct_canon(p: &Process) -> Process {
    sort_links(&orient(p).canonical())
}

fn sort_links(p: &Process) -> Process {
    match p {
        Link(a, b) if b < a => Link(b.clone(), a.clone()),
        _ => p.with_children(p.children().into_iter().map(sort_links).collect()),
    }
}

fn side_key(side: &Process, binder: &Name) -> String {
    let marked = side.substitute(binder, &Name::new("%cut"));
    print_process(&sort_links(&marked.canonical()))
}

fn orient(p: &Process) -> Process {
    let p = p.with_children(p.children().into_iter().map(orient).collect());
    match &p {
        Cut(x, a, y, l, r) => {
            let kl = (side_key(l, x), crate::surface::print_proposition(a));
            let kr = (side_key(r, y), crate::surface::print_proposition(&dual(a)));
            if kr < kl {
                Cut(y.clone(), dual(a), x.clone(), r.clone(), l.clone())
            } else {
                p
            }
        }
        _ => p,
    }
}

/// Endpoints free in `p` that are not in `allowed`.
pub fn unexpected_free(p: &Process, allowed: &BTreeSet<Name>) -> Vec<Name> {
    p.free_names().into_iter().filter(|n| !allowed.contains(n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic_sync::check_sync_runtime;
    use crate::surface::{parse_context, parse_process, parse_proposition, parse_runtime_process};

    fn p(s: &str) -> Process {
        parse_process(s).unwrap()
    }

    fn rp(s: &str) -> Process {
        parse_runtime_process(s).unwrap()
    }

    fn c(s: &str) -> Context {
        parse_context(s).unwrap()
    }

    fn checked_normalize(t: &Process, ctx: &Context) -> Trace {
        check_sync_runtime(t, ctx).unwrap();
        let trace = normalize(t, 10_000).unwrap();
        for s in &trace.steps {
            if let Err(e) = check_sync_runtime(&s.after, ctx) {
                panic!("{} broke typing: {}\n{}", s.line(), e, print_process(&s.after));
            }
        }
        assert!(!trace.result.has_cut());
        trace
    }

    #[test]
    fn unit_redex() {
        let t = compose(&p("x[]"), &Name::new("x"), &p("y(). z[]"), &Name::new("y"), &Prop::One).unwrap();
        let trace = checked_normalize(&t, &c("z : 1, *"));
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.steps[0].line(), "k0 β 1⊥ @ root");
        assert_eq!(trace.result, p("z[]"));
    }

    #[test]
    fn link_redex() {
        let t = rp("new (x:a)(y) (x<->w | y<->v)");
        let s = step(&t).unwrap().unwrap();
        assert_eq!(s.kind, StepKind::Beta);
        assert_eq!(s.after, p("w<->v"));
        let trace = normalize(&t, 10).unwrap();
        assert_eq!(trace.steps.len(), 1);
    }

    #[test]
    fn tensor_par_gives_half_cut() {
        let t = rp("new (x:a * 1)(y) (x[u].(u<->m | x[]) | y(v). y(). k[n].(n<->v | k[]))");
        let s = step(&t).unwrap().unwrap();
        assert_eq!(s.rule, "⊗⅋");
        assert_eq!(s.after, rp("new (x:1)([]y) (x[] | new (u:a)([v]) (u<->m | y(). k[n].(n<->v | k[])))"));
    }

    #[test]
    fn plus_with_selects_branch() {
        let t = rp("new (x:1 + 1)(y) (x.inl; x[] | y.case(y(). z[], y(). z[]))");
        let s = step(&t).unwrap().unwrap();
        assert_eq!(s.rule, "⊕&");
        assert_eq!(s.after, rp("new (x:1)(y) (x[] | y(). z[])"));
    }

    #[test]
    fn freeing_step_splits_the_half_cut() {
        // three endpoints: m supplies the message, k receives it after the unit on y
        let left = p("x(w). z[w'].(w<->w' | x(). z[])");
        let right = p("m(r). y[u].(u<->r | m(). y[])");
        let a = parse_proposition("~a par bot").unwrap();
        let (t, ctx) = compose_typed(
            &left,
            &c("x : ~a par bot, z : a * 1, *"),
            &Name::new("x"),
            &right,
            &c("y : a * 1, m : ~a par bot, *"),
            &Name::new("y"),
        )
        .unwrap();
        assert_eq!(t, Cut(Name::new("x"), a, Name::new("y"), bx(left), bx(right)));
        let trace = checked_normalize(&t, &ctx);
        let rules: Vec<&str> = trace.steps.iter().map(|s| s.rule.as_str()).collect();
        assert!(rules.contains(&"half-free"), "{:?}", rules);
        let free = trace.steps.iter().find(|s| s.rule == "half-free").unwrap();
        let sub = free.after.at(&free.position).unwrap();
        assert!(matches!(sub, Send(_, _, l, r) if matches!(**l, Cut(..)) && matches!(**r, Cut(..))));
    }

    #[test]
    fn compose_errors() {
        let a = Prop::One;
        assert!(matches!(
            compose(&p("x[]"), &Name::new("q"), &p("y(). z[]"), &Name::new("y"), &a),
            Err(DynamicsError::EndpointNotFree(_))
        ));
        assert!(matches!(
            compose(&p("x().z[]"), &Name::new("x"), &p("y(). z[]"), &Name::new("y"), &a),
            Err(DynamicsError::NameClash(_))
        ));
        let r = compose_typed(&p("x[]"), &c("x : 1, *"), &Name::new("x"), &p("y().z[]"), &c("y : 1, z : 1"), &Name::new("y"));
        assert!(matches!(r, Err(DynamicsError::CutType(_))));
    }

    #[test]
    fn two_buyer_composition() {
        let p1 = p(include_str!("../tests/data/p1.fwd"));
        let p2 = p(include_str!("../tests/data/p2.fwd"));
        let (t, ctx) = compose_typed(
            &p1,
            &c(include_str!("../tests/data/p1.llp")),
            &Name::new("b2'"),
            &p2,
            &c(include_str!("../tests/data/p2.llp")),
            &Name::new("b2''"),
        )
        .unwrap();
        assert_eq!(ctx, c(include_str!("../tests/data/composed.llp")));
        let trace = checked_normalize(&t, &ctx);
        assert!(trace.steps.len() < 200, "{}", trace.steps.len());
        crate::logic_sync::check_sync(&trace.result, &ctx).unwrap();
        assert!(replay(&trace).unwrap().alpha_eq(&trace.result));
    }

    #[test]
    fn server_meets_client() {
        let t = rp("new (x:?a)(y) (!s(r). ?x[u]. u<->r | !y(v). ?t[w]. v<->w)");
        let ctx = c("s : !~a, t : ?a");
        check_sync_runtime(&t, &ctx).unwrap();
        let trace = checked_normalize(&t, &ctx);
        let rules: Vec<&str> = trace.steps.iter().map(|s| s.rule.as_str()).collect();
        assert!(rules.contains(&"?!"), "{:?}", rules);
        assert!(rules.contains(&"server"), "{:?}", rules);
    }

    #[test]
    fn measure_order() {
        assert!(multiset_less(&[(3, 5), (3, 5)], &[(3, 9)]));
        assert!(multiset_less(&[], &[(1, 1)]));
        assert!(!multiset_less(&[(3, 9)], &[(3, 9)]));
        assert!(!multiset_less(&[(4, 1)], &[(3, 9)]));
        assert!(multiset_less(&[(2, 50), (1, 50)], &[(3, 9)]));
    }

    #[test]
    fn canon_symmetries() {
        assert_eq!(struct_canon(&p("y<->x")), p("x<->y"));
        let a = rp("new (x:1)(y) (x[] | y(). z[])");
        let b = rp("new (y:bot)(x) (y(). z[] | x[])");
        assert_eq!(struct_canon(&a), struct_canon(&b));
        let c1 = struct_canon(&a);
        assert_eq!(struct_canon(&c1), c1);
    }

    #[test]
    fn scope_assoc() {
        let t = rp("new (w:1)(z) (w[] | new (x:1)(y) (z(). x[] | y(). k[]))");
        let r = rearrange(&t, ScopeLaw::Assoc).unwrap();
        assert_eq!(r, rp("new (x:1)(y) (new (w:1)(z) (w[] | z(). x[]) | y(). k[])"));
        let ctx = c("k : 1, *");
        check_sync_runtime(&t, &ctx).unwrap();
        check_sync_runtime(&r, &ctx).unwrap();
        assert!(rearrange(&r, ScopeLaw::Assoc).is_none());
    }
}
