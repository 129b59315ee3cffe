use std::collections::BTreeSet;
use std::hash::{Hash, Hasher};

use thiserror::Error;

use super::{Connective, Name, Prop};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum BoxKind {
    L,
    R,
    Q,
}

impl BoxKind {
    /// Connective that members of this box must carry.
    pub fn member_connective(self) -> Connective {
        match self {
            BoxKind::L | BoxKind::R => Connective::Plus,
            BoxKind::Q => Connective::WhyNot,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BoxKind::L => "L",
            BoxKind::R => "R",
            BoxKind::Q => "Q",
        }
    }
}

/// An endpoint with its type.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Typed {
    pub name: Name,
    pub ty: Prop,
}

impl Typed {
    pub fn new(name: Name, ty: Prop) -> Typed {
        Typed { name, ty }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Entry {
    Active(Typed),
    /// `[msg] blocked`
    Buffer { msg: Typed, blocked: Typed },
    /// `L⟦members⟧pivot`, `R⟦..⟧`, `Q⟦..⟧`; never empty once inside a `Context`.
    Boxed { kind: BoxKind, members: Vec<Typed>, pivot: Typed },
}

impl Entry {
    pub fn names(&self) -> Vec<&Name> {
        match self {
            Entry::Active(t) => vec![&t.name],
            Entry::Buffer { msg, blocked } => vec![&msg.name, &blocked.name],
            Entry::Boxed { members, pivot, .. } => {
                members.iter().map(|m| &m.name).chain(std::iter::once(&pivot.name)).collect()
            }
        }
    }

    pub fn typed(&self) -> Vec<&Typed> {
        match self {
            Entry::Active(t) => vec![t],
            Entry::Buffer { msg, blocked } => vec![msg, blocked],
            Entry::Boxed { members, pivot, .. } => members.iter().chain(std::iter::once(pivot)).collect(),
        }
    }

    fn sorted(&self) -> Entry {
        match self {
            Entry::Boxed { kind, members, pivot } => {
                let mut m = members.clone();
                m.sort();
                Entry::Boxed { kind: *kind, members: m, pivot: pivot.clone() }
            }
            e => e.clone(),
        }
    }

    /// The name that identifies the entry: the active name, the blocked
    /// endpoint of a buffer, or the pivot of a box.
    pub fn key(&self) -> &Name {
        match self {
            Entry::Active(t) => &t.name,
            Entry::Buffer { blocked, .. } => &blocked.name,
            Entry::Boxed { pivot, .. } => &pivot.name,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum ContextError {
    #[error("duplicate endpoint {0}")]
    DuplicateEndpoint(Name),
    #[error("box member {name} has type without top-level {expected}")]
    BadBoxMember { name: Name, expected: Connective },
}

/// Where an endpoint lives inside a context.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Location {
    Active(usize),
    Message(usize),
    Blocked(usize),
    Member(usize, usize),
    Pivot(usize),
}

/// An ordered context compared as a multiset, with the ★ flag.
#[derive(Clone, Debug, Default)]
pub struct Context {
    entries: Vec<Entry>,
    pub star: bool,
}

impl Context {
    pub fn new() -> Context {
        Context::default()
    }

    pub fn basic<I, N>(items: I) -> Result<Context, ContextError>
    where
        I: IntoIterator<Item = (N, Prop)>,
        N: Into<Name>,
    {
        let mut c = Context::new();
        for (n, a) in items {
            c.push_active(n.into(), a)?;
        }
        Ok(c)
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() && !self.star
    }

    pub fn with_star(mut self, star: bool) -> Context {
        self.star = star;
        self
    }

    pub fn contains(&self, n: &Name) -> bool {
        self.find(n).is_some()
    }

    pub fn names(&self) -> BTreeSet<Name> {
        self.entries.iter().flat_map(|e| e.names()).cloned().collect()
    }

    pub fn push_active(&mut self, name: Name, ty: Prop) -> Result<(), ContextError> {
        self.push(Entry::Active(Typed::new(name, ty)))
    }

    /// Appends an entry; empty boxes become their active pivot.
    pub fn push(&mut self, e: Entry) -> Result<(), ContextError> {
        self.check_new(&e)?;
        self.entries.push(normalize_entry(e));
        Ok(())
    }

    /// Replaces the entry at `idx`, keeping its position.
    pub fn replace(&mut self, idx: usize, e: Entry) -> Result<(), ContextError> {
        let old = self.entries.remove(idx);
        if let Err(err) = self.check_new(&e) {
            self.entries.insert(idx, old);
            return Err(err);
        }
        self.entries.insert(idx, normalize_entry(e));
        Ok(())
    }

    pub fn remove(&mut self, idx: usize) -> Entry {
        self.entries.remove(idx)
    }

    fn check_new(&self, e: &Entry) -> Result<(), ContextError> {
        let mut seen = BTreeSet::new();
        for n in e.names() {
            if self.contains(n) || !seen.insert(n.clone()) {
                return Err(ContextError::DuplicateEndpoint(n.clone()));
            }
        }
        if let Entry::Boxed { kind, members, .. } = e {
            for m in members {
                if m.ty.connective() != kind.member_connective() {
                    return Err(ContextError::BadBoxMember {
                        name: m.name.clone(),
                        expected: kind.member_connective(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn find(&self, n: &Name) -> Option<Location> {
        for (i, e) in self.entries.iter().enumerate() {
            match e {
                Entry::Active(t) if &t.name == n => return Some(Location::Active(i)),
                Entry::Buffer { msg, .. } if &msg.name == n => return Some(Location::Message(i)),
                Entry::Buffer { blocked, .. } if &blocked.name == n => return Some(Location::Blocked(i)),
                Entry::Boxed { members, pivot, .. } => {
                    if &pivot.name == n {
                        return Some(Location::Pivot(i));
                    }
                    if let Some(j) = members.iter().position(|m| &m.name == n) {
                        return Some(Location::Member(i, j));
                    }
                }
                _ => {}
            }
        }
        None
    }

    /// Type of an active endpoint.
    pub fn active(&self, n: &Name) -> Option<(usize, &Prop)> {
        match self.find(n) {
            Some(Location::Active(i)) => match &self.entries[i] {
                Entry::Active(t) => Some((i, &t.ty)),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn type_of(&self, n: &Name) -> Option<&Prop> {
        self.entries.iter().flat_map(|e| e.typed()).find(|t| &t.name == n).map(|t| &t.ty)
    }

    pub fn is_basic(&self) -> bool {
        !self.star && self.entries.iter().all(|e| matches!(e, Entry::Active(_)))
    }

    /// True if no boxes (L/R/Q) occur.
    pub fn has_no_boxes(&self) -> bool {
        self.entries.iter().all(|e| !matches!(e, Entry::Boxed { .. }))
    }

    /// Active entries in order.
    pub fn actives(&self) -> Vec<&Typed> {
        self.entries
            .iter()
            .filter_map(|e| match e {
                Entry::Active(t) => Some(t),
                _ => None,
            })
            .collect()
    }

    /// The context restricted to entries satisfying `keep`; the star flag is kept.
    pub fn filter(&self, mut keep: impl FnMut(&Entry) -> bool) -> Context {
        Context { entries: self.entries.iter().filter(|e| keep(e)).cloned().collect(), star: self.star }
    }

    /// Applies `f` to every type.
    pub fn map_types(&self, f: impl Fn(&Prop) -> Prop) -> Context {
        let t = |x: &Typed| Typed::new(x.name.clone(), f(&x.ty));
        let entries = self
            .entries
            .iter()
            .map(|e| match e {
                Entry::Active(x) => Entry::Active(t(x)),
                Entry::Buffer { msg, blocked } => Entry::Buffer { msg: t(msg), blocked: t(blocked) },
                Entry::Boxed { kind, members, pivot } => {
                    Entry::Boxed { kind: *kind, members: members.iter().map(t).collect(), pivot: t(pivot) }
                }
            })
            .collect();
        Context { entries, star: self.star }
    }

    /// Renames endpoints.
    pub fn rename(&self, f: impl Fn(&Name) -> Name) -> Context {
        let t = |x: &Typed| Typed::new(f(&x.name), x.ty.clone());
        let entries = self
            .entries
            .iter()
            .map(|e| match e {
                Entry::Active(x) => Entry::Active(t(x)),
                Entry::Buffer { msg, blocked } => Entry::Buffer { msg: t(msg), blocked: t(blocked) },
                Entry::Boxed { kind, members, pivot } => {
                    Entry::Boxed { kind: *kind, members: members.iter().map(t).collect(), pivot: t(pivot) }
                }
            })
            .collect();
        Context { entries, star: self.star }
    }

    /// Entries sorted, for multiset comparison.
    pub fn canonical_entries(&self) -> Vec<Entry> {
        let mut v: Vec<Entry> = self.entries.iter().map(|e| e.sorted()).collect();
        v.sort();
        v
    }

    /// Removes box member `j` of entry `i`, collapsing an emptied box to its pivot.
    pub fn take_member(&mut self, i: usize, j: usize) -> Typed {
        let (m, collapse) = match &mut self.entries[i] {
            Entry::Boxed { members, pivot, .. } => {
                let m = members.remove(j);
                (m, if members.is_empty() { Some(pivot.clone()) } else { None })
            }
            _ => panic!("take_member on a non-box entry"),
        };
        if let Some(p) = collapse {
            self.entries[i] = Entry::Active(p);
        }
        m
    }
}

fn normalize_entry(e: Entry) -> Entry {
    match e {
        Entry::Boxed { members, pivot, .. } if members.is_empty() => Entry::Active(pivot),
        e => e,
    }
}

impl PartialEq for Context {
    fn eq(&self, other: &Context) -> bool {
        self.star == other.star && self.canonical_entries() == other.canonical_entries()
    }
}

impl Eq for Context {}

impl Hash for Context {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.star.hash(state);
        self.canonical_entries().hash(state);
    }
}
