//! Brute-force derivation search and random generators used to cross-validate the checkers.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::rc::Rc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::arbiterize::{arbiter_context, arbiterize};
use crate::coherence::check_coherence;
use crate::dynamics::compose;
use crate::logic_cll::dual;
use crate::terms::{
    BoxKind, CllRule, Connective, Context, Derivation, Entry, GlobalType, Judgement, Location, Name, Process, Prop,
    Rule, SyncRule, Typed,
};

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum OracleError {
    #[error("process of size {size} exceeds the search bound {bound}")]
    BoundExceeded { size: usize, bound: usize },
    #[error("the search does not cover cut forms")]
    RuntimeForm,
}

type Key = (Process, Vec<Entry>, bool);

fn key(p: &Process, ctx: &Context) -> Key {
    (p.clone(), ctx.canonical_entries(), ctx.star)
}

fn subsets<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    (0u32..(1 << items.len()))
        .map(|mask| (0..items.len()).filter(|i| mask & (1 << i) != 0).map(|i| items[i].clone()).collect())
        .collect()
}

/// Every combination of one derivation per premise.
fn product(lists: Vec<Rc<Vec<Derivation>>>) -> Vec<Vec<Derivation>> {
    let mut out = vec![vec![]];
    for l in lists {
        let mut next = Vec::new();
        for prefix in &out {
            for d in l.iter() {
                let mut v = prefix.clone();
                v.push(d.clone());
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// All synchronous derivations of `P ⊢ Γ`, by enumerating every rule instance.
pub fn search_sync(p: &Process, ctx: &Context, bound: usize) -> Result<Vec<Derivation>, OracleError> {
    if p.size() > bound {
        return Err(OracleError::BoundExceeded { size: p.size(), bound });
    }
    if p.has_cut() {
        return Err(OracleError::RuntimeForm);
    }
    let mut memo = HashMap::new();
    Ok((*sync_all(p, ctx, &mut memo)).clone())
}

fn sync_all(p: &Process, ctx: &Context, memo: &mut HashMap<Key, Rc<Vec<Derivation>>>) -> Rc<Vec<Derivation>> {
    let k = key(p, ctx);
    if let Some(r) = memo.get(&k) {
        return r.clone();
    }
    let mut out = Vec::new();
    for (rule, premises) in sync_instances(p, ctx) {
        let subs: Vec<Rc<Vec<Derivation>>> = premises.iter().map(|(q, c)| sync_all(q, c, memo)).collect();
        for ds in product(subs) {
            out.push(Derivation::sync(rule, p.clone(), ctx.clone(), ds));
        }
    }
    let r = Rc::new(out);
    memo.insert(k, r.clone());
    r
}

fn active_of<'a>(ctx: &'a Context, x: &Name) -> Option<(usize, &'a Prop)> {
    ctx.active(x)
}

fn only_actives(ctx: &Context) -> bool {
    ctx.entries().iter().all(|e| matches!(e, Entry::Active(_)))
}

fn sync_instances<'a>(p: &'a Process, ctx: &Context) -> Vec<(SyncRule, Vec<(&'a Process, Context)>)> {
    use Process::*;
    let mut out = Vec::new();
    match p {
        Link(x, y) => {
            if let (Some((_, a)), Some((_, b))) = (active_of(ctx, x), active_of(ctx, y)) {
                if ctx.len() == 2 && !ctx.star && *b == dual(a) {
                    out.push((SyncRule::Ax, vec![]));
                }
            }
        }
        Close(x) => {
            if let Some((_, Prop::One)) = active_of(ctx, x) {
                if ctx.len() == 1 && ctx.star {
                    out.push((SyncRule::One, vec![]));
                }
            }
        }
        Wait(x, q) => {
            if let Some((i, Prop::Bot)) = active_of(ctx, x) {
                let mut c = ctx.clone();
                c.remove(i);
                c.star = true;
                out.push((SyncRule::Bot, vec![(&**q, c)]));
            }
        }
        Recv(x, y, q) => {
            if let Some((i, Prop::Par(a, b))) = active_of(ctx, x) {
                let mut c = ctx.clone();
                let e = Entry::Buffer { msg: Typed::new(y.clone(), (**a).clone()), blocked: Typed::new(x.clone(), (**b).clone()) };
                if c.replace(i, e).is_ok() {
                    out.push((SyncRule::Par, vec![(&**q, c)]));
                }
            }
        }
        Send(x, y, l, r) => {
            if let Some((i, Prop::Tensor(a, b))) = active_of(ctx, x) {
                let buffers: Vec<usize> = (0..ctx.len()).filter(|j| matches!(ctx.entries()[*j], Entry::Buffer { .. })).collect();
                for chosen in subsets(&buffers) {
                    let mut left = Context::new();
                    let mut right = ctx.clone();
                    let mut ok = right.replace(i, Entry::Active(Typed::new(x.clone(), (**b).clone()))).is_ok();
                    for &j in &chosen {
                        if let Entry::Buffer { msg, blocked } = &ctx.entries()[j] {
                            ok &= left.push(Entry::Active(msg.clone())).is_ok();
                            ok &= right.replace(j, Entry::Active(blocked.clone())).is_ok();
                        }
                    }
                    ok &= left.push_active(y.clone(), (**a).clone()).is_ok();
                    if ok {
                        out.push((SyncRule::Tensor, vec![(&**l, left), (&**r, right)]));
                    }
                }
            }
        }
        InL(x, q) | InR(x, q) => {
            let (kind, rule) = if matches!(p, InL(..)) { (BoxKind::L, SyncRule::PlusL) } else { (BoxKind::R, SyncRule::PlusR) };
            if let Some(Location::Member(i, j)) = ctx.find(x) {
                if matches!(&ctx.entries()[i], Entry::Boxed { kind: k, .. } if *k == kind) {
                    let mut c = ctx.clone();
                    let m = c.take_member(i, j);
                    if let Prop::Plus(a, b) = &m.ty {
                        let t = if kind == BoxKind::L { a } else { b };
                        if c.push_active(x.clone(), (**t).clone()).is_ok() {
                            out.push((rule, vec![(&**q, c)]));
                        }
                    }
                }
            }
        }
        Case(x, l, r) => {
            if let Some((_, Prop::With(a, b))) = active_of(ctx, x) {
                let plus: Vec<Typed> = ctx
                    .actives()
                    .into_iter()
                    .filter(|t| &t.name != x && matches!(t.ty, Prop::Plus(..)))
                    .cloned()
                    .collect();
                for sel in subsets(&plus).into_iter().filter(|s| !s.is_empty()) {
                    let names: HashSet<&Name> = sel.iter().map(|t| &t.name).collect();
                    let base = ctx.filter(|e| !names.contains(e.key()) && e.key() != x);
                    let mut cl = base.clone();
                    let mut cr = base;
                    let okl = cl
                        .push(Entry::Boxed { kind: BoxKind::L, members: sel.clone(), pivot: Typed::new(x.clone(), (**a).clone()) })
                        .is_ok();
                    let okr = cr
                        .push(Entry::Boxed { kind: BoxKind::R, members: sel, pivot: Typed::new(x.clone(), (**b).clone()) })
                        .is_ok();
                    if okl && okr {
                        out.push((SyncRule::With, vec![(&**l, cl), (&**r, cr)]));
                    }
                }
            }
        }
        Client(x, y, q) => {
            if let Some(Location::Member(i, j)) = ctx.find(x) {
                if matches!(&ctx.entries()[i], Entry::Boxed { kind: BoxKind::Q, .. }) {
                    let mut c = ctx.clone();
                    let m = c.take_member(i, j);
                    if let Prop::WhyNot(a) = &m.ty {
                        if c.push_active(y.clone(), (**a).clone()).is_ok() {
                            out.push((SyncRule::Query, vec![(&**q, c)]));
                        }
                    }
                }
            }
        }
        Server(x, y, q) => {
            if let Some((_, Prop::OfCourse(a))) = active_of(ctx, x) {
                let others: Vec<Typed> = ctx.actives().into_iter().filter(|t| &t.name != x).cloned().collect();
                if !ctx.star && only_actives(ctx) && others.iter().all(|t| matches!(t.ty, Prop::WhyNot(_))) {
                    let mut c = Context::new();
                    if c.push(Entry::Boxed { kind: BoxKind::Q, members: others, pivot: Typed::new(y.clone(), (**a).clone()) }).is_ok() {
                        out.push((SyncRule::Bang, vec![(&**q, c)]));
                    }
                }
            }
        }
        Cut(..) | CutHalf(..) | CutMsg(..) => {}
    }
    out
}

/// All classical linear logic derivations of `P ⊢ Δ`, trying every context split.
pub fn search_cll(p: &Process, delta: &Context, bound: usize) -> Result<Vec<Derivation>, OracleError> {
    if p.size() > bound {
        return Err(OracleError::BoundExceeded { size: p.size(), bound });
    }
    if p.has_runtime_cut() {
        return Err(OracleError::RuntimeForm);
    }
    let mut memo = HashMap::new();
    Ok((*cll_all(p, delta, &mut memo)).clone())
}

fn cll_node(rule: CllRule, p: &Process, ctx: &Context, premises: Vec<Derivation>) -> Derivation {
    Derivation::new(Rule::Cll(rule), Judgement::Cll { process: p.clone(), context: ctx.clone() }, premises)
}

fn cll_all(p: &Process, ctx: &Context, memo: &mut HashMap<Key, Rc<Vec<Derivation>>>) -> Rc<Vec<Derivation>> {
    let k = key(p, ctx);
    if let Some(r) = memo.get(&k) {
        return r.clone();
    }
    let mut out = Vec::new();
    if only_actives(ctx) {
        for (rule, premises) in cll_instances(p, ctx) {
            let subs: Vec<Rc<Vec<Derivation>>> = premises.iter().map(|(q, c)| cll_all(q, c, memo)).collect();
            for ds in product(subs) {
                out.push(cll_node(rule, p, ctx, ds));
            }
        }
    }
    let r = Rc::new(out);
    memo.insert(k, r.clone());
    r
}

fn basic(items: Vec<Typed>) -> Option<Context> {
    let mut c = Context::new();
    for t in items {
        c.push(Entry::Active(t)).ok()?;
    }
    Some(c)
}

fn cll_instances<'a>(p: &'a Process, ctx: &Context) -> Vec<(CllRule, Vec<(&'a Process, Context)>)> {
    use Process::*;
    let all: Vec<Typed> = ctx.actives().into_iter().cloned().collect();
    let without = |x: &Name| all.iter().filter(|t| &t.name != x).cloned().collect::<Vec<_>>();
    let with = |mut v: Vec<Typed>, n: &Name, a: &Prop| {
        v.push(Typed::new(n.clone(), a.clone()));
        basic(v)
    };
    let mut out = Vec::new();
    match p {
        Link(x, y) => {
            if let (Some((_, a)), Some((_, b))) = (ctx.active(x), ctx.active(y)) {
                if all.len() == 2 && *b == dual(a) {
                    out.push((CllRule::Axiom, vec![]));
                }
            }
        }
        Close(x) => {
            if matches!(ctx.active(x), Some((_, Prop::One))) && all.len() == 1 {
                out.push((CllRule::One, vec![]));
            }
        }
        Wait(x, q) => {
            if matches!(ctx.active(x), Some((_, Prop::Bot))) {
                if let Some(c) = basic(without(x)) {
                    out.push((CllRule::Bot, vec![(&**q, c)]));
                }
            }
        }
        Send(x, y, l, r) => {
            if let Some((_, Prop::Tensor(a, b))) = ctx.active(x) {
                for left in subsets(&without(x)) {
                    let names: HashSet<&Name> = left.iter().map(|t| &t.name).collect();
                    let right: Vec<Typed> = without(x).into_iter().filter(|t| !names.contains(&t.name)).collect();
                    if let (Some(cl), Some(cr)) = (with(left.clone(), y, a), with(right, x, b)) {
                        out.push((CllRule::Tensor, vec![(&**l, cl), (&**r, cr)]));
                    }
                }
            }
        }
        Recv(x, y, q) => {
            if let Some((_, Prop::Par(a, b))) = ctx.active(x) {
                let mut v = without(x);
                v.push(Typed::new(x.clone(), (**b).clone()));
                if let Some(c) = with(v, y, a) {
                    out.push((CllRule::Par, vec![(&**q, c)]));
                }
            }
        }
        InL(x, q) | InR(x, q) => {
            if let Some((_, Prop::Plus(a, b))) = ctx.active(x) {
                let (rule, t) = if matches!(p, InL(..)) { (CllRule::PlusL, a) } else { (CllRule::PlusR, b) };
                if let Some(c) = with(without(x), x, t) {
                    out.push((rule, vec![(&**q, c)]));
                }
            }
        }
        Case(x, l, r) => {
            if let Some((_, Prop::With(a, b))) = ctx.active(x) {
                if let (Some(cl), Some(cr)) = (with(without(x), x, a), with(without(x), x, b)) {
                    out.push((CllRule::With, vec![(&**l, cl), (&**r, cr)]));
                }
            }
        }
        Client(x, y, q) => {
            if let Some((_, Prop::WhyNot(a))) = ctx.active(x) {
                if let Some(c) = with(without(x), y, a) {
                    out.push((CllRule::Query, vec![(&**q, c)]));
                }
            }
        }
        Server(x, y, q) => {
            if let Some((_, Prop::OfCourse(a))) = ctx.active(x) {
                let rest = without(x);
                if rest.iter().all(|t| matches!(t.ty, Prop::WhyNot(_))) {
                    if let Some(c) = with(rest, y, a) {
                        out.push((CllRule::Bang, vec![(&**q, c)]));
                    }
                }
            }
        }
        Cut(x, a, y, l, r) => {
            for left in subsets(&all) {
                let names: HashSet<&Name> = left.iter().map(|t| &t.name).collect();
                let right: Vec<Typed> = all.iter().filter(|t| !names.contains(&t.name)).cloned().collect();
                if let (Some(cl), Some(cr)) = (with(left.clone(), x, a), with(right, y, &dual(a))) {
                    out.push((CllRule::Cut, vec![(&**l, cl), (&**r, cr)]));
                }
            }
        }
        CutHalf(..) | CutMsg(..) => {}
    }
    out
}

/// A random proposition of depth at most `depth` (a leaf has depth 1) over `atoms`.
pub fn random_prop(rng: &mut impl Rng, depth: usize, atoms: &[&str]) -> Prop {
    let leaf = depth <= 1 || rng.gen_bool(0.25);
    if leaf {
        return match rng.gen_range(0..4) {
            0 => Prop::One,
            1 => Prop::Bot,
            2 => Prop::atom(atoms.choose(rng).expect("at least one atom")),
            _ => Prop::neg_atom(atoms.choose(rng).expect("at least one atom")),
        };
    }
    let sub = |rng: &mut _| random_prop(rng, depth - 1, atoms);
    match rng.gen_range(0..6) {
        0 => Prop::tensor(sub(rng), sub(rng)),
        1 => Prop::par(sub(rng), sub(rng)),
        2 => Prop::plus(sub(rng), sub(rng)),
        3 => Prop::with(sub(rng), sub(rng)),
        4 => Prop::of_course(sub(rng)),
        _ => Prop::why_not(sub(rng)),
    }
}

fn random_atom(rng: &mut impl Rng, atoms: &[&str]) -> Prop {
    let a = atoms.choose(rng).expect("at least one atom");
    if rng.gen_bool(0.5) {
        Prop::atom(a)
    } else {
        Prop::neg_atom(a)
    }
}

/// Partially known propositions, refined as the generator commits to rules.
#[derive(Clone, Debug)]
enum Node {
    Hole,
    Ground(Prop),
    Bin(Connective, usize, usize),
    Un(Connective, usize),
}

#[derive(Clone, Debug, Default)]
struct Arena(Vec<Node>);

fn dual_connective(c: Connective) -> Connective {
    match c {
        Connective::Tensor => Connective::Par,
        Connective::Par => Connective::Tensor,
        Connective::Plus => Connective::With,
        Connective::With => Connective::Plus,
        Connective::OfCourse => Connective::WhyNot,
        Connective::WhyNot => Connective::OfCourse,
        Connective::One => Connective::Bot,
        Connective::Bot => Connective::One,
        Connective::Atom => Connective::Atom,
    }
}

fn build(c: Connective, a: Prop, b: Option<Prop>) -> Prop {
    match c {
        Connective::Tensor => Prop::tensor(a, b.expect("binary")),
        Connective::Par => Prop::par(a, b.expect("binary")),
        Connective::Plus => Prop::plus(a, b.expect("binary")),
        Connective::With => Prop::with(a, b.expect("binary")),
        Connective::OfCourse => Prop::of_course(a),
        Connective::WhyNot => Prop::why_not(a),
        _ => unreachable!("not a compound connective"),
    }
}

fn parts(p: &Prop) -> Vec<Prop> {
    match p {
        Prop::Tensor(a, b) | Prop::Par(a, b) | Prop::Plus(a, b) | Prop::With(a, b) => vec![(**a).clone(), (**b).clone()],
        Prop::OfCourse(a) | Prop::WhyNot(a) => vec![(**a).clone()],
        _ => vec![],
    }
}

impl Arena {
    fn push(&mut self, n: Node) -> usize {
        self.0.push(n);
        self.0.len() - 1
    }

    fn hole(&mut self) -> usize {
        self.push(Node::Hole)
    }

    fn connective(&self, id: usize) -> Option<Connective> {
        match &self.0[id] {
            Node::Hole => None,
            Node::Ground(p) => Some(p.connective()),
            Node::Bin(c, ..) | Node::Un(c, _) => Some(*c),
        }
    }

    fn can_be(&self, id: usize, c: Connective) -> bool {
        self.connective(id).map_or(true, |k| k == c)
    }

    /// Commits `id` to connective `c` and returns its immediate subformulas.
    fn split(&mut self, id: usize, c: Connective) -> Option<Vec<usize>> {
        match self.0[id].clone() {
            Node::Hole => {
                let kids = if matches!(c, Connective::OfCourse | Connective::WhyNot) {
                    let a = self.hole();
                    self.0[id] = Node::Un(c, a);
                    vec![a]
                } else {
                    let (a, b) = (self.hole(), self.hole());
                    self.0[id] = Node::Bin(c, a, b);
                    vec![a, b]
                };
                Some(kids)
            }
            Node::Ground(p) if p.connective() == c => Some(parts(&p).into_iter().map(|q| self.push(Node::Ground(q))).collect()),
            Node::Bin(k, a, b) if k == c => Some(vec![a, b]),
            Node::Un(k, a) if k == c => Some(vec![a]),
            _ => None,
        }
    }

    fn unify(&mut self, id: usize, p: &Prop) -> bool {
        match self.0[id].clone() {
            Node::Hole => {
                self.0[id] = Node::Ground(p.clone());
                true
            }
            Node::Ground(q) => q == *p,
            Node::Bin(c, a, b) => {
                p.connective() == c && {
                    let ps = parts(p);
                    self.unify(a, &ps[0]) && self.unify(b, &ps[1])
                }
            }
            Node::Un(c, a) => p.connective() == c && self.unify(a, &parts(p)[0]),
        }
    }

    fn fill(&mut self, id: usize, rng: &mut impl Rng, atoms: &[&str]) {
        match self.0[id].clone() {
            Node::Hole => self.0[id] = Node::Ground(random_atom(rng, atoms)),
            Node::Ground(_) => {}
            Node::Bin(_, a, b) => {
                self.fill(a, rng, atoms);
                self.fill(b, rng, atoms);
            }
            Node::Un(_, a) => self.fill(a, rng, atoms),
        }
    }

    fn resolve(&self, id: usize) -> Option<Prop> {
        match &self.0[id] {
            Node::Hole => None,
            Node::Ground(p) => Some(p.clone()),
            Node::Bin(c, a, b) => Some(build(*c, self.resolve(*a)?, Some(self.resolve(*b)?))),
            Node::Un(c, a) => Some(build(*c, self.resolve(*a)?, None)),
        }
    }

    /// Makes `x` and `y` dual, grounding leftover holes with atoms.
    fn unify_dual(&mut self, x: usize, y: usize, rng: &mut impl Rng, atoms: &[&str]) -> bool {
        match (self.0[x].clone(), self.0[y].clone()) {
            (Node::Hole, Node::Hole) => {
                let a = random_atom(rng, atoms);
                self.unify(x, &a) && self.unify(y, &dual(&a))
            }
            (Node::Hole, _) => {
                self.fill(y, rng, atoms);
                let b = self.resolve(y).expect("filled");
                self.unify(x, &dual(&b))
            }
            (_, Node::Hole) | (Node::Ground(_), _) => {
                self.fill(x, rng, atoms);
                let a = self.resolve(x).expect("filled");
                self.unify(y, &dual(&a))
            }
            (_, Node::Ground(_)) => {
                self.fill(y, rng, atoms);
                let b = self.resolve(y).expect("filled");
                self.unify(x, &dual(&b))
            }
            (Node::Bin(c, a, b), Node::Bin(d, e, f)) => {
                d == dual_connective(c) && self.unify_dual(a, e, rng, atoms) && self.unify_dual(b, f, rng, atoms)
            }
            (Node::Un(c, a), Node::Un(d, e)) => d == dual_connective(c) && self.unify_dual(a, e, rng, atoms),
            _ => false,
        }
    }
}

const GEN_ATOMS: [&str; 2] = ["a", "b"];

struct Generator<'r, R: Rng> {
    rng: &'r mut R,
    arena: Arena,
}

type Slots = Vec<(Name, usize)>;

fn retyped(ctx: &Slots, updates: &[(Name, usize)]) -> Slots {
    ctx.iter()
        .map(|(n, t)| (n.clone(), updates.iter().find(|(m, _)| m == n).map_or(*t, |(_, u)| *u)))
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Pick {
    Gather,
    Branch,
    Serve,
}

impl<R: Rng> Generator<'_, R> {
    fn nonempty_subset(&mut self, items: Vec<usize>) -> Vec<usize> {
        loop {
            let s: Vec<usize> = items.iter().copied().filter(|_| self.rng.gen_bool(0.5)).collect();
            if !s.is_empty() {
                return s;
            }
        }
    }

    fn gen(&mut self, ctx: &Slots, budget: usize) -> Option<GlobalType> {
        if budget == 1 {
            return self.leaf(ctx);
        }
        let n = ctx.len();
        let mut options: Vec<(Pick, usize, Vec<usize>)> = Vec::new();
        for i in 0..n {
            let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let a = &self.arena;
            if a.can_be(ctx[i].1, Connective::WhyNot) && others.iter().all(|&j| a.can_be(ctx[j].1, Connective::OfCourse)) {
                options.push((Pick::Serve, i, others.clone()));
            }
            if budget >= 3 {
                let tens: Vec<usize> = others.iter().copied().filter(|&j| a.can_be(ctx[j].1, Connective::Tensor)).collect();
                if a.can_be(ctx[i].1, Connective::Par) && !tens.is_empty() {
                    options.push((Pick::Gather, i, tens));
                }
                let with: Vec<usize> = others.iter().copied().filter(|&j| a.can_be(ctx[j].1, Connective::With)).collect();
                if a.can_be(ctx[i].1, Connective::Plus) && !with.is_empty() {
                    options.push((Pick::Branch, i, with));
                }
            }
        }
        let kinds: Vec<Pick> = [Pick::Gather, Pick::Branch, Pick::Serve]
            .into_iter()
            .filter(|k| options.iter().any(|o| o.0 == *k))
            .collect();
        let kind = *kinds.choose(self.rng)?;
        let matching: Vec<&(Pick, usize, Vec<usize>)> = options.iter().filter(|o| o.0 == kind).collect();
        let (_, i, cands) = (*matching.choose(self.rng)?).clone();
        match kind {
            Pick::Serve => {
                let mut updates = Vec::new();
                let x = ctx[i].0.clone();
                updates.push((x.clone(), self.arena.split(ctx[i].1, Connective::WhyNot)?[0]));
                let mut ys = Vec::new();
                for &j in &cands {
                    updates.push((ctx[j].0.clone(), self.arena.split(ctx[j].1, Connective::OfCourse)?[0]));
                    ys.push(ctx[j].0.clone());
                }
                let body = self.gen(&retyped(ctx, &updates), budget - 1)?;
                Some(GlobalType::Serve(x, ys, Box::new(body)))
            }
            Pick::Gather => {
                let xs = self.nonempty_subset(cands);
                let lb = self.rng.gen_range(1..=budget - 2);
                let mut left = Vec::new();
                let mut updates = Vec::new();
                for &j in &xs {
                    let k = self.arena.split(ctx[j].1, Connective::Tensor)?;
                    left.push((ctx[j].0.clone(), k[0]));
                    updates.push((ctx[j].0.clone(), k[1]));
                }
                let y = ctx[i].0.clone();
                let k = self.arena.split(ctx[i].1, Connective::Par)?;
                left.push((y.clone(), k[0]));
                updates.push((y.clone(), k[1]));
                let g = self.gen(&left, lb)?;
                let h = self.gen(&retyped(ctx, &updates), budget - 1 - lb)?;
                let names = xs.iter().map(|&j| ctx[j].0.clone()).collect();
                Some(GlobalType::Gather(names, y, Box::new(g), Box::new(h)))
            }
            Pick::Branch => {
                let ys = self.nonempty_subset(cands);
                let lb = self.rng.gen_range(1..=budget - 2);
                let x = ctx[i].0.clone();
                let k = self.arena.split(ctx[i].1, Connective::Plus)?;
                let mut lu = vec![(x.clone(), k[0])];
                let mut ru = vec![(x.clone(), k[1])];
                for &j in &ys {
                    let k = self.arena.split(ctx[j].1, Connective::With)?;
                    lu.push((ctx[j].0.clone(), k[0]));
                    ru.push((ctx[j].0.clone(), k[1]));
                }
                let g = self.gen(&retyped(ctx, &lu), lb)?;
                let h = self.gen(&retyped(ctx, &ru), budget - 1 - lb)?;
                let names = ys.iter().map(|&j| ctx[j].0.clone()).collect();
                Some(GlobalType::Branch(x, names, Box::new(g), Box::new(h)))
            }
        }
    }

    fn leaf(&mut self, ctx: &Slots) -> Option<GlobalType> {
        let n = ctx.len();
        let mut options = Vec::new();
        if n == 2 {
            options.push(None);
        }
        for i in 0..n {
            if self.arena.can_be(ctx[i].1, Connective::Bot)
                && (0..n).all(|j| j == i || self.arena.can_be(ctx[j].1, Connective::One))
            {
                options.push(Some(i));
            }
        }
        match *options.choose(self.rng)? {
            None => {
                let (i, j) = if self.rng.gen_bool(0.5) { (0, 1) } else { (1, 0) };
                let mut trial = self.arena.clone();
                if !trial.unify_dual(ctx[i].1, ctx[j].1, self.rng, &GEN_ATOMS) {
                    return None;
                }
                self.arena = trial;
                let a = self.arena.resolve(ctx[i].1)?;
                Some(GlobalType::Axiom(ctx[i].0.clone(), a, ctx[j].0.clone()))
            }
            Some(i) => {
                let mut xs = Vec::new();
                for (j, (name, t)) in ctx.iter().enumerate() {
                    let target = if j == i { Prop::Bot } else { Prop::One };
                    if !self.arena.unify(*t, &target) {
                        return None;
                    }
                    if j != i {
                        xs.push(name.clone());
                    }
                }
                Some(GlobalType::CloseAll(xs, ctx[i].0.clone()))
            }
        }
    }
}

fn generate(
    rng: &mut impl Rng,
    size: usize,
    names: &[&str],
    fixed: Option<&Prop>,
) -> Option<(GlobalType, Context)> {
    let count = if size == 1 { 2 } else { rng.gen_range(2..=names.len().min(4)) };
    let mut g = Generator { rng, arena: Arena::default() };
    let mut slots: Slots = Vec::new();
    for n in &names[..count] {
        let id = g.arena.hole();
        slots.push((Name::new(n), id));
    }
    if let Some(a) = fixed {
        g.arena.unify(slots[0].1, a);
    }
    let gt = g.gen(&slots, size)?;
    let mut ctx = Context::new();
    for (n, id) in &slots {
        g.arena.fill(*id, g.rng, &GEN_ATOMS);
        ctx.push_active(n.clone(), g.arena.resolve(*id)?).ok()?;
    }
    check_coherence(&gt, &ctx).ok()?;
    Some((gt, ctx))
}

const GEN_NAMES: [&str; 4] = ["p", "q", "r", "s"];

/// A random coherent global type with exactly `size` constructors and its context.
pub fn random_global_type(seed: u64, size: usize) -> (GlobalType, Context) {
    assert!(size >= 1, "size must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        if let Some(r) = generate(&mut rng, size, &GEN_NAMES, None) {
            return r;
        }
    }
}

/// Two arbiters composed on a pair of dual endpoints, with the context of the composition.
pub fn random_arbiter_composition(seed: u64, size: usize) -> (Process, Context) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let Some((g1, d1)) = generate(&mut rng, size, &GEN_NAMES, None) else { continue };
        let Some(t) = d1.actives().choose(&mut rng).map(|t| (*t).clone()) else { continue };
        let want = dual(&t.ty);
        let mut found = None;
        for attempt in 0..200 {
            let budget = size + attempt % 8;
            if let Some(r) = generate(&mut rng, budget, &["t", "u", "v", "w"], Some(&want)) {
                found = Some(r);
                break;
            }
        }
        let Some((g2, d2)) = found else { continue };
        let p1 = arbiterize(&g1);
        let p2 = arbiterize(&g2);
        let (x, y) = (t.name.primed(), Name::new("t").primed());
        let c1 = arbiter_context(&d1);
        let c2 = arbiter_context(&d2);
        let a = c1.type_of(&x).expect("endpoint of the arbiter").clone();
        let Ok(p) = compose(&p1, &x, &p2, &y, &a) else { continue };
        let mut ctx = c1.filter(|e| e.key() != &x);
        for e in c2.entries() {
            if e.key() != &y {
                ctx.push(e.clone()).expect("disjoint endpoint names");
            }
        }
        return (p, ctx);
    }
}

/// Typed instances for cross-validation, built bottom-up by the classical rules.
pub type Instance = (Process, Vec<(Name, Prop)>);

fn var(i: usize) -> Name {
    Name::new(&format!("x{}", i))
}

fn free_in_order(p: &Process, bound: &mut Vec<Name>, out: &mut Vec<Name>) {
    let mine: Vec<&Name> = match p {
        Process::Link(x, y) => vec![x, y],
        _ => p.subjects(),
    };
    for n in mine {
        if !bound.contains(n) && !out.contains(n) {
            out.push(n.clone());
        }
    }
    for (i, c) in p.children().into_iter().enumerate() {
        let b = p.binder(i).cloned();
        if let Some(b) = &b {
            bound.push(b.clone());
        }
        free_in_order(c, bound, out);
        if b.is_some() {
            bound.pop();
        }
    }
}

/// Renames binders canonically and free names to `x0, x1, ..` in order of first use.
fn normal_instance(p: &Process, ctx: &[(Name, Prop)]) -> Instance {
    let p = p.canonical();
    let mut order = Vec::new();
    free_in_order(&p, &mut Vec::new(), &mut order);
    let map: HashMap<Name, Name> = order.iter().enumerate().map(|(i, n)| (n.clone(), var(i))).collect();
    let mut c: Vec<(Name, Prop)> = ctx.iter().map(|(n, a)| (map[n].clone(), a.clone())).collect();
    c.sort();
    (p.rename(&map), c)
}

fn shifted(p: &Process, ctx: &[(Name, Prop)], from: usize, tag: &str) -> (Process, Vec<(Name, Prop)>) {
    let map: HashMap<Name, Name> =
        ctx.iter().enumerate().map(|(i, (n, _))| (n.clone(), Name::new(&format!("{}{}", tag, from + i)))).collect();
    (p.rename(&map), ctx.iter().map(|(n, a)| (map[n].clone(), a.clone())).collect())
}

fn without(ctx: &[(Name, Prop)], x: &Name) -> Vec<(Name, Prop)> {
    ctx.iter().filter(|(n, _)| n != x).cloned().collect()
}

/// Extends instances of smaller sizes by one rule.
struct Builder<'a> {
    atoms: &'a [&'a str],
    extra: Vec<Prop>,
}

impl Builder<'_> {
    fn leaves(&self) -> Vec<Instance> {
        let mut out = Vec::new();
        for a in self.atoms {
            for t in [Prop::atom(a), Prop::neg_atom(a)] {
                out.push((Process::Link(var(0), var(1)), vec![(var(0), dual(&t)), (var(1), t)]));
            }
        }
        out.push((Process::Close(var(0)), vec![(var(0), Prop::One)]));
        out
    }

    fn unary(&self, p: &Instance) -> Vec<Instance> {
        let (q, ctx) = p;
        let fresh = Name::new("n");
        let mut out = Vec::new();
        out.push((Process::Wait(fresh.clone(), Box::new(q.clone())), {
            let mut c = ctx.clone();
            c.push((fresh.clone(), Prop::Bot));
            c
        }));
        for (x, a) in ctx {
            for (y, b) in ctx {
                if x != y {
                    let mut c = without(ctx, y);
                    c.retain(|(n, _)| n != x);
                    c.push((x.clone(), Prop::par(b.clone(), a.clone())));
                    out.push((Process::Recv(x.clone(), y.clone(), Box::new(q.clone())), c));
                }
            }
            for other in &self.extra {
                let mut c = without(ctx, x);
                c.push((x.clone(), Prop::plus(a.clone(), other.clone())));
                out.push((Process::InL(x.clone(), Box::new(q.clone())), c));
                let mut c = without(ctx, x);
                c.push((x.clone(), Prop::plus(other.clone(), a.clone())));
                out.push((Process::InR(x.clone(), Box::new(q.clone())), c));
            }
            let mut c = without(ctx, x);
            c.push((fresh.clone(), Prop::why_not(a.clone())));
            out.push((Process::Client(fresh.clone(), x.clone(), Box::new(q.clone())), c));
            let rest = without(ctx, x);
            if rest.iter().all(|(_, t)| matches!(t, Prop::WhyNot(_))) {
                let mut c = rest;
                c.push((fresh.clone(), Prop::of_course(a.clone())));
                out.push((Process::Server(fresh.clone(), x.clone(), Box::new(q.clone())), c));
            }
        }
        out
    }

    fn binary(&self, l: &Instance, r: &Instance) -> Vec<Instance> {
        let mut out = Vec::new();
        let (lp, lc) = shifted(&l.0, &l.1, 0, "l");
        let (rp, rc) = shifted(&r.0, &r.1, 0, "r");
        for (y, a) in &lc {
            for (x, b) in &rc {
                let mut c = without(&lc, y);
                c.extend(without(&rc, x));
                c.push((x.clone(), Prop::tensor(a.clone(), b.clone())));
                out.push((Process::Send(x.clone(), y.clone(), Box::new(lp.clone()), Box::new(rp.clone())), c));
            }
        }
        // case: the right branch's remaining context must match the left's under some renaming
        for (x, a) in &lc {
            let rest_l = without(&lc, x);
            for (z, b) in &rc {
                let rest_r = without(&rc, z);
                if rest_l.len() != rest_r.len() {
                    continue;
                }
                for perm in permutations(rest_r.len()) {
                    if (0..rest_l.len()).all(|i| rest_l[i].1 == rest_r[perm[i]].1) {
                        let mut map: HashMap<Name, Name> =
                            (0..rest_l.len()).map(|i| (rest_r[perm[i]].0.clone(), rest_l[i].0.clone())).collect();
                        map.insert(z.clone(), x.clone());
                        let mut c = rest_l.clone();
                        c.push((x.clone(), Prop::with(a.clone(), b.clone())));
                        out.push((Process::Case(x.clone(), Box::new(lp.clone()), Box::new(rp.rename(&map))), c));
                    }
                }
            }
        }
        out
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Every classically typable instance of size at most `max_size` (up to renaming),
/// with at most `max_names` free names.
pub fn enumerate_instances(max_size: usize, atoms: &[&str], max_names: usize) -> Vec<Instance> {
    let b = Builder { atoms, extra: vec![Prop::One, Prop::Bot] };
    let mut by_size: Vec<Vec<Instance>> = vec![vec![]];
    let mut seen = HashSet::new();
    for n in 1..=max_size {
        let mut level = Vec::new();
        let mut add = |i: Instance, level: &mut Vec<Instance>| {
            let i = normal_instance(&i.0, &i.1);
            if i.1.len() <= max_names && seen.insert(i.clone()) {
                level.push(i);
            }
        };
        if n == 1 {
            for i in b.leaves() {
                add(i, &mut level);
            }
        } else {
            for p in by_size[n - 1].clone() {
                for i in b.unary(&p) {
                    add(i, &mut level);
                }
            }
            for k in 1..n - 1 {
                for l in by_size[k].clone() {
                    for r in by_size[n - 1 - k].clone() {
                        for i in b.binary(&l, &r) {
                            add(i, &mut level);
                        }
                    }
                }
            }
        }
        by_size.push(level);
    }
    by_size.into_iter().flatten().collect()
}

/// A random classically typable instance of size at most `max_size`.
pub fn random_instance(rng: &mut impl Rng, max_size: usize, atoms: &[&str]) -> Instance {
    let b = Builder { atoms, extra: vec![Prop::One, Prop::Bot, Prop::atom(atoms[0])] };
    let size = rng.gen_range(1..=max_size);
    loop {
        if let Some(i) = random_sized(&b, rng, size, 0) {
            return normal_instance(&i.0, &i.1);
        }
    }
}

fn random_sized(b: &Builder, rng: &mut impl Rng, size: usize, depth: usize) -> Option<Instance> {
    if size == 1 {
        return b.leaves().choose(rng).cloned();
    }
    if depth > 20 {
        return None;
    }
    for _ in 0..8 {
        let cands = if size >= 3 && rng.gen_bool(0.4) {
            let k = rng.gen_range(1..=size - 2);
            let l = random_sized(b, rng, k, depth + 1)?;
            let r = random_sized(b, rng, size - 1 - k, depth + 1)?;
            let l = normal_instance(&l.0, &l.1);
            let r = normal_instance(&r.0, &r.1);
            let mut c = b.binary(&l, &r);
            if rng.gen_bool(0.3) {
                c.extend(b.binary(&l, &l));
            }
            c
        } else {
            let p = random_sized(b, rng, size - 1, depth + 1)?;
            b.unary(&normal_instance(&p.0, &p.1))
        };
        if let Some(i) = cands.choose(rng) {
            return Some(i.clone());
        }
    }
    None
}

/// The instance's context as a basic context.
pub fn instance_context(ctx: &[(Name, Prop)], star: bool) -> Context {
    let mut c = Context::new();
    for (n, a) in ctx {
        c.push_active(n.clone(), a.clone()).expect("distinct names");
    }
    c.with_star(star)
}

/// How often each coherence rule appears in a global type.
pub fn rule_histogram(g: &GlobalType, out: &mut BTreeMap<&'static str, usize>) {
    let label = match g {
        GlobalType::Axiom(..) => "Axiom",
        GlobalType::CloseAll(..) => "OneBot",
        GlobalType::Gather(..) => "TensorPar",
        GlobalType::Branch(..) => "PlusWith",
        GlobalType::Serve(..) => "QueryBang",
    };
    *out.entry(label).or_default() += 1;
    for c in g.children() {
        rule_histogram(c, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic_cll::check_cll;
    use crate::logic_sync::{check_sync, validate, SyncOptions};
    use crate::surface::{parse_context, parse_process};

    fn p(s: &str) -> Process {
        parse_process(s).unwrap()
    }

    fn c(s: &str) -> Context {
        parse_context(s).unwrap()
    }

    #[test]
    fn link_has_one_derivation() {
        let ds = search_sync(&p("x<->y"), &c("x : ~a, y : a"), 10).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(search_cll(&p("x[]"), &c("x : 1"), 10).unwrap().len(), 1);
    }

    #[test]
    fn bound_is_enforced() {
        assert!(matches!(search_sync(&p("x().y[]"), &c("x : bot, y : 1"), 1), Err(OracleError::BoundExceeded { .. })));
    }

    #[test]
    fn discussion_pair() {
        let ctx = c(include_str!("../tests/data/discussion.llp"));
        let rejected = p(include_str!("../tests/data/discussion_rejected.fwd"));
        let accepted = p(include_str!("../tests/data/discussion_accepted.fwd"));
        assert!(search_sync(&rejected, &ctx, 50).unwrap().is_empty());
        assert!(!search_sync(&accepted, &ctx, 50).unwrap().is_empty());
        assert!(!search_cll(&rejected, &ctx, 50).unwrap().is_empty());
    }

    #[test]
    fn two_buyer_derivation_is_found() {
        let p1 = p(include_str!("../tests/data/p1.fwd"));
        let ctx = c(include_str!("../tests/data/p1.llp"));
        let d = check_sync(&p1, &ctx).unwrap();
        let all = search_sync(&p1, &ctx, 100).unwrap();
        assert!(all.contains(&d));
        for d in &all {
            validate(d, SyncOptions::default()).unwrap();
        }
    }

    #[test]
    fn generator_is_coherent_and_deterministic() {
        for size in 1..=8 {
            for seed in 0..20 {
                let (g, d) = random_global_type(seed, size);
                assert_eq!(g.size(), size);
                check_coherence(&g, &d).unwrap();
                assert_eq!(random_global_type(seed, size), (g, d));
            }
        }
        let (g, _) = random_global_type(3, 1);
        assert!(matches!(g, GlobalType::Axiom(..) | GlobalType::CloseAll(..)));
    }

    #[test]
    fn generator_covers_all_rules() {
        let mut h = BTreeMap::new();
        for seed in 0..1000 {
            rule_histogram(&random_global_type(seed, 6).0, &mut h);
        }
        assert_eq!(h.len(), 5, "{:?}", h);
    }

    #[test]
    fn cll_search_agrees_with_checker() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let (q, ctx) = random_instance(&mut rng, 5, &["a"]);
            let ctx = instance_context(&ctx, false);
            assert!(check_cll(&q, &ctx).is_ok());
            assert!(!search_cll(&q, &ctx, 10).unwrap().is_empty());
            let flipped = ctx.map_types(dual);
            assert_eq!(check_cll(&q, &flipped).is_ok(), !search_cll(&q, &flipped, 10).unwrap().is_empty());
        }
    }

    #[test]
    fn enumeration_is_typable() {
        let all = enumerate_instances(3, &["a"], 3);
        assert!(all.len() > 10);
        for (q, ctx) in &all {
            check_cll(q, &instance_context(ctx, false)).unwrap();
        }
    }

    #[test]
    fn compositions_are_typed() {
        for seed in 0..10 {
            let (q, ctx) = random_arbiter_composition(seed, 4);
            crate::logic_sync::check_sync_runtime(&q, &ctx).unwrap();
        }
    }
}
