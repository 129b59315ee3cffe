use std::collections::{BTreeSet, HashMap, HashSet};

use super::{Name, Prop};

/// A forwarder process term, including the runtime cut forms.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Process {
    Link(Name, Name),
    Close(Name),
    Wait(Name, Box<Process>),
    /// `x[y].(P | Q)`, `y` bound in `P`.
    Send(Name, Name, Box<Process>, Box<Process>),
    /// `x(y).P`, `y` bound in `P`.
    Recv(Name, Name, Box<Process>),
    InL(Name, Box<Process>),
    InR(Name, Box<Process>),
    Case(Name, Box<Process>, Box<Process>),
    /// `?x[y].P`, `y` bound in `P`.
    Client(Name, Name, Box<Process>),
    /// `!x(y).P`, `y` bound in `P`.
    Server(Name, Name, Box<Process>),
    /// `new (x:A)(y) (P | Q)`: `x : A` in `P`, `y : A⊥` in `Q`.
    Cut(Name, Prop, Name, Box<Process>, Box<Process>),
    /// `new (x:B)([]y) (Q | R)`: `x : B` in `Q`; `y` is blocked in `R`, which must be a `CutMsg`.
    CutHalf(Name, Prop, Name, Box<Process>, Box<Process>),
    /// `new (u:A)([v]) (P | R)`: `u : A` in `P`, `v : A⊥` buffered in `R`.
    CutMsg(Name, Prop, Name, Box<Process>, Box<Process>),
}

use Process::*;

impl Process {
    pub fn link(x: &str, y: &str) -> Process {
        Link(x.into(), y.into())
    }

    pub fn close(x: &str) -> Process {
        Close(x.into())
    }

    pub fn wait(x: &str, p: Process) -> Process {
        Wait(x.into(), Box::new(p))
    }

    pub fn send(x: &str, y: &str, p: Process, q: Process) -> Process {
        Send(x.into(), y.into(), Box::new(p), Box::new(q))
    }

    pub fn recv(x: &str, y: &str, p: Process) -> Process {
        Recv(x.into(), y.into(), Box::new(p))
    }

    pub fn inl(x: &str, p: Process) -> Process {
        InL(x.into(), Box::new(p))
    }

    pub fn inr(x: &str, p: Process) -> Process {
        InR(x.into(), Box::new(p))
    }

    pub fn case(x: &str, p: Process, q: Process) -> Process {
        Case(x.into(), Box::new(p), Box::new(q))
    }

    pub fn client(x: &str, y: &str, p: Process) -> Process {
        Client(x.into(), y.into(), Box::new(p))
    }

    pub fn server(x: &str, y: &str, p: Process) -> Process {
        Server(x.into(), y.into(), Box::new(p))
    }

    pub fn cut(x: &str, a: Prop, y: &str, p: Process, q: Process) -> Process {
        Cut(x.into(), a, y.into(), Box::new(p), Box::new(q))
    }

    /// Immediate subterms, left to right.
    pub fn children(&self) -> Vec<&Process> {
        match self {
            Link(..) | Close(_) => vec![],
            Wait(_, p) | Recv(_, _, p) | InL(_, p) | InR(_, p) | Client(_, _, p) | Server(_, _, p) => {
                vec![p]
            }
            Send(_, _, p, q) | Case(_, p, q) => vec![p, q],
            Cut(_, _, _, p, q) | CutHalf(_, _, _, p, q) | CutMsg(_, _, _, p, q) => vec![p, q],
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Process> {
        match self {
            Link(..) | Close(_) => vec![],
            Wait(_, p) | Recv(_, _, p) | InL(_, p) | InR(_, p) | Client(_, _, p) | Server(_, _, p) => {
                vec![p]
            }
            Send(_, _, p, q) | Case(_, p, q) => vec![p, q],
            Cut(_, _, _, p, q) | CutHalf(_, _, _, p, q) | CutMsg(_, _, _, p, q) => vec![p, q],
        }
    }

    /// The same node with its immediate subterms replaced.
    pub fn with_children(&self, kids: Vec<Process>) -> Process {
        let mut out = self.clone();
        assert_eq!(kids.len(), out.children().len(), "arity mismatch");
        for (slot, k) in out.children_mut().into_iter().zip(kids) {
            *slot = k;
        }
        out
    }

    /// The name bound by this node in its `i`-th child, if any.
    pub fn binder(&self, i: usize) -> Option<&Name> {
        match (self, i) {
            (Send(_, y, _, _), 0) => Some(y),
            (Recv(_, y, _) | Client(_, y, _) | Server(_, y, _), 0) => Some(y),
            (Cut(x, _, _, _, _) | CutHalf(x, _, _, _, _) | CutMsg(x, _, _, _, _), 0) => Some(x),
            (Cut(_, _, y, _, _) | CutHalf(_, _, y, _, _) | CutMsg(_, _, y, _, _), 1) => Some(y),
            _ => None,
        }
    }

    fn binder_mut(&mut self, i: usize) -> Option<&mut Name> {
        match (self, i) {
            (Send(_, y, _, _), 0) => Some(y),
            (Recv(_, y, _) | Client(_, y, _) | Server(_, y, _), 0) => Some(y),
            (Cut(x, _, _, _, _) | CutHalf(x, _, _, _, _) | CutMsg(x, _, _, _, _), 0) => Some(x),
            (Cut(_, _, y, _, _) | CutHalf(_, _, y, _, _) | CutMsg(_, _, y, _, _), 1) => Some(y),
            _ => None,
        }
    }

    /// Names occurring free at this node itself (not in children).
    pub fn subjects(&self) -> Vec<&Name> {
        match self {
            Link(x, y) => vec![x, y],
            Close(x) | Wait(x, _) | Send(x, ..) | Recv(x, ..) | InL(x, _) | InR(x, _) | Case(x, ..) => {
                vec![x]
            }
            Client(x, ..) | Server(x, ..) => vec![x],
            Cut(..) | CutHalf(..) | CutMsg(..) => vec![],
        }
    }

    fn subjects_mut(&mut self) -> Vec<&mut Name> {
        match self {
            Link(x, y) => vec![x, y],
            Close(x) | Wait(x, _) | Send(x, ..) | Recv(x, ..) | InL(x, _) | InR(x, _) | Case(x, ..) => {
                vec![x]
            }
            Client(x, ..) | Server(x, ..) => vec![x],
            Cut(..) | CutHalf(..) | CutMsg(..) => vec![],
        }
    }

    pub fn is_cut(&self) -> bool {
        matches!(self, Cut(..) | CutHalf(..) | CutMsg(..))
    }

    pub fn is_runtime(&self) -> bool {
        matches!(self, CutHalf(..) | CutMsg(..))
    }

    /// Node count.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// True if any cut constructor occurs.
    pub fn has_cut(&self) -> bool {
        self.is_cut() || self.children().iter().any(|c| c.has_cut())
    }

    pub fn has_runtime_cut(&self) -> bool {
        self.is_runtime() || self.children().iter().any(|c| c.has_runtime_cut())
    }

    pub fn free_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<Name>) {
        for s in self.subjects() {
            out.insert(s.clone());
        }
        for (i, c) in self.children().into_iter().enumerate() {
            let mut inner = BTreeSet::new();
            c.collect_free(&mut inner);
            if let Some(b) = self.binder(i) {
                inner.remove(b);
            }
            out.extend(inner);
        }
    }

    pub fn occurs_free(&self, x: &Name) -> bool {
        if self.subjects().contains(&x) {
            return true;
        }
        self.children()
            .into_iter()
            .enumerate()
            .any(|(i, c)| self.binder(i) != Some(x) && c.occurs_free(x))
    }

    /// Capture-avoiding replacement of free `target` by `replacement`.
    pub fn substitute(&self, target: &Name, replacement: &Name) -> Process {
        let mut map = HashMap::new();
        map.insert(target.clone(), replacement.clone());
        self.rename(&map)
    }

    /// Simultaneous capture-avoiding renaming of free names.
    pub fn rename(&self, map: &HashMap<Name, Name>) -> Process {
        if map.is_empty() {
            return self.clone();
        }
        let mut out = self.clone();
        for s in out.subjects_mut() {
            if let Some(r) = map.get(s) {
                *s = r.clone();
            }
        }
        let n = self.children().len();
        for i in 0..n {
            let child = self.children()[i];
            let new_child = match self.binder(i) {
                None => child.rename(map),
                Some(b) => {
                    let mut inner: HashMap<Name, Name> =
                        map.iter().filter(|(k, _)| *k != b).map(|(k, v)| (k.clone(), v.clone())).collect();
                    let captures = inner.iter().any(|(k, v)| v == b && child.occurs_free(k));
                    if captures {
                        let b2 = b.refresh();
                        inner.insert(b.clone(), b2.clone());
                        *out.binder_mut(i).unwrap() = b2;
                    }
                    child.rename(&inner)
                }
            };
            *out.children_mut()[i] = new_child;
        }
        out
    }

    /// Bound names in DFS order (with repetitions).
    pub fn bound_names(&self) -> Vec<Name> {
        let mut out = Vec::new();
        self.collect_bound(&mut out);
        out
    }

    fn collect_bound(&self, out: &mut Vec<Name>) {
        for (i, c) in self.children().into_iter().enumerate() {
            if let Some(b) = self.binder(i) {
                out.push(b.clone());
            }
            c.collect_bound(out);
        }
    }

    /// True if bound names are pairwise distinct and distinct from free names.
    pub fn is_barendregt(&self) -> bool {
        let free = self.free_names();
        let mut seen = HashSet::new();
        self.bound_names().into_iter().all(|b| !free.contains(&b) && seen.insert(b))
    }

    /// Renames binders so that the Barendregt convention holds, keeping
    /// original names where no clash arises.
    pub fn barendregt(&self) -> Process {
        let mut used: HashSet<Name> = self.free_names().into_iter().collect();
        self.barendregt_with(&mut used)
    }

    /// As `barendregt`, with every binder renamed to a fresh name.
    pub fn refresh_bound(&self) -> Process {
        let mut out = self.clone();
        let n = out.children().len();
        for i in 0..n {
            let mut child = out.children()[i].clone();
            if let Some(b) = out.binder(i).cloned() {
                let b2 = b.refresh();
                child = child.substitute(&b, &b2);
                *out.binder_mut(i).unwrap() = b2;
            }
            *out.children_mut()[i] = child.refresh_bound();
        }
        out
    }

    fn barendregt_with(&self, used: &mut HashSet<Name>) -> Process {
        let mut out = self.clone();
        let n = out.children().len();
        for i in 0..n {
            let mut child = out.children()[i].clone();
            if let Some(b) = out.binder(i).cloned() {
                if used.contains(&b) {
                    let b2 = b.refresh();
                    child = child.substitute(&b, &b2);
                    *out.binder_mut(i).unwrap() = b2.clone();
                    used.insert(b2);
                } else {
                    used.insert(b);
                }
            }
            *out.children_mut()[i] = child.barendregt_with(used);
        }
        out
    }

    /// Binders renamed to `%0, %1, ...` in DFS order; free names untouched.
    pub fn canonical(&self) -> Process {
        let mut counter = 0;
        self.canon(&HashMap::new(), &mut counter)
    }

    fn canon(&self, env: &HashMap<Name, Name>, counter: &mut usize) -> Process {
        let mut out = self.clone();
        for s in out.subjects_mut() {
            if let Some(r) = env.get(s) {
                *s = r.clone();
            }
        }
        let n = self.children().len();
        for i in 0..n {
            let child = self.children()[i];
            let new_child = match self.binder(i) {
                None => child.canon(env, counter),
                Some(b) => {
                    let c = Name::new(&format!("%{}", counter));
                    *counter += 1;
                    let mut inner = env.clone();
                    inner.insert(b.clone(), c.clone());
                    *out.binder_mut(i).unwrap() = c;
                    child.canon(&inner, counter)
                }
            };
            *out.children_mut()[i] = new_child;
        }
        out
    }

    pub fn alpha_eq(&self, other: &Process) -> bool {
        self.canonical() == other.canonical()
    }

    /// Subterm at a child-index path.
    pub fn at(&self, path: &[usize]) -> Option<&Process> {
        match path.split_first() {
            None => Some(self),
            Some((i, rest)) => self.children().get(*i).and_then(|c| c.at(rest)),
        }
    }

    /// Replaces the subterm at `path`.
    pub fn replace_at(&self, path: &[usize], new: Process) -> Process {
        match path.split_first() {
            None => new,
            Some((i, rest)) => {
                let mut out = self.clone();
                let child = out.children()[*i].replace_at(rest, new);
                *out.children_mut()[*i] = child;
                out
            }
        }
    }
}

/// True for names produced by `canonical`.
pub fn is_canonical_binder(n: &Name) -> bool {
    n.as_str().starts_with('%')
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(s: &str) -> Name {
        Name::new(s)
    }

    #[test]
    fn free_names_respect_binders() {
        assert_eq!(Process::link("x", "y").free_names(), [n("x"), n("y")].into());
        let p = Process::send("x", "y", Process::link("y", "z"), Process::close("x"));
        assert_eq!(p.free_names(), [n("x"), n("z")].into());
        let p = Process::recv("x", "y", Process::wait("y", Process::close("x")));
        assert_eq!(p.free_names(), [n("x")].into());
    }

    #[test]
    fn substitute_skips_bound_and_avoids_capture() {
        assert_eq!(Process::close("w").substitute(&n("w"), &n("y")), Process::close("y"));
        let p = Process::recv("x", "w", Process::link("w", "z"));
        assert_eq!(p.substitute(&n("w"), &n("y")), p);
        let p = Process::recv("x", "y", Process::link("y", "w"));
        let q = p.substitute(&n("w"), &n("y"));
        assert_eq!(q.free_names(), [n("x"), n("y")].into());
        assert!(q.alpha_eq(&Process::recv("x", "k", Process::link("k", "y"))));
    }

    #[test]
    fn substitute_in_link_reduction_contract() {
        // Q = w.case(w.inl; ... ) shaped three-node term
        let q = Process::case("w", Process::inl("u", Process::close("w")), Process::close("w"));
        let r = q.substitute(&n("w"), &n("y"));
        let expected = Process::case("y", Process::inl("u", Process::close("y")), Process::close("y"));
        assert_eq!(r, expected);
    }

    #[test]
    fn alpha_eq_cases() {
        let a = Process::recv("x", "y", Process::close("y"));
        let b = Process::recv("x", "z", Process::close("z"));
        let c = Process::recv("x", "y", Process::close("x"));
        assert!(a.alpha_eq(&b));
        assert!(!a.alpha_eq(&c));
    }

    #[test]
    fn barendregt_renames_only_clashes() {
        let p = Process::send(
            "x",
            "y",
            Process::link("y", "z"),
            Process::recv("x", "y", Process::link("y", "w")),
        );
        assert!(!p.is_barendregt());
        let q = p.barendregt();
        assert!(q.is_barendregt());
        assert!(q.alpha_eq(&p));
        match &q {
            Send(_, y, _, _) => assert_eq!(y.as_str(), "y"),
            _ => unreachable!(),
        }
    }

    #[test]
    fn canonical_is_idempotent() {
        let p = Process::cut("x", Prop::One, "y", Process::close("x"), Process::wait("y", Process::close("z")));
        let c = p.canonical();
        assert_eq!(c.canonical(), c);
    }

    #[test]
    fn paths_address_subterms() {
        let p = Process::send("x", "y", Process::link("y", "z"), Process::close("x"));
        assert_eq!(p.at(&[1]), Some(&Process::close("x")));
        let q = p.replace_at(&[1], Process::close("w"));
        assert_eq!(q.at(&[1]), Some(&Process::close("w")));
    }
}
