use std::collections::{BTreeSet, HashMap};

use super::{Name, Prop};

/// A coherence proof term.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum GlobalType {
    /// `close (x1,..,xn) -> y`
    CloseAll(Vec<Name>, Name),
    /// `gather (x1,..,xn) -> y { G } ; H`
    Gather(Vec<Name>, Name, Box<GlobalType>, Box<GlobalType>),
    /// `branch x -> (y1,..,yn) { G }{ H }`
    Branch(Name, Vec<Name>, Box<GlobalType>, Box<GlobalType>),
    /// `serve x -> (y1,..,yn) { G }`
    Serve(Name, Vec<Name>, Box<GlobalType>),
    /// `axiom x:A = y`
    Axiom(Name, Prop, Name),
}

use GlobalType::*;

impl GlobalType {
    pub fn size(&self) -> usize {
        match self {
            CloseAll(..) | Axiom(..) => 1,
            Gather(_, _, g, h) | Branch(_, _, g, h) => 1 + g.size() + h.size(),
            Serve(_, _, g) => 1 + g.size(),
        }
    }

    pub fn children(&self) -> Vec<&GlobalType> {
        match self {
            CloseAll(..) | Axiom(..) => vec![],
            Gather(_, _, g, h) | Branch(_, _, g, h) => vec![g, h],
            Serve(_, _, g) => vec![g],
        }
    }

    /// Endpoints named by this constructor itself.
    pub fn endpoints(&self) -> Vec<&Name> {
        match self {
            CloseAll(xs, y) | Gather(xs, y, _, _) => xs.iter().chain(std::iter::once(y)).collect(),
            Branch(x, ys, _, _) | Serve(x, ys, _) => std::iter::once(x).chain(ys.iter()).collect(),
            Axiom(x, _, y) => vec![x, y],
        }
    }

    /// Global types have no binders, so every mentioned endpoint is free.
    pub fn free_names(&self) -> BTreeSet<Name> {
        let mut out: BTreeSet<Name> = self.endpoints().into_iter().cloned().collect();
        for c in self.children() {
            out.extend(c.free_names());
        }
        out
    }

    pub fn rename(&self, map: &HashMap<Name, Name>) -> GlobalType {
        let r = |n: &Name| map.get(n).cloned().unwrap_or_else(|| n.clone());
        let rs = |ns: &[Name]| ns.iter().map(r).collect::<Vec<_>>();
        match self {
            CloseAll(xs, y) => CloseAll(rs(xs), r(y)),
            Gather(xs, y, g, h) => Gather(rs(xs), r(y), Box::new(g.rename(map)), Box::new(h.rename(map))),
            Branch(x, ys, g, h) => Branch(r(x), rs(ys), Box::new(g.rename(map)), Box::new(h.rename(map))),
            Serve(x, ys, g) => Serve(r(x), rs(ys), Box::new(g.rename(map))),
            Axiom(x, a, y) => Axiom(r(x), a.clone(), r(y)),
        }
    }

    /// Endpoint lists sorted; equality of normal forms is equality modulo list order.
    pub fn normalize_lists(&self) -> GlobalType {
        let s = |ns: &[Name]| {
            let mut v = ns.to_vec();
            v.sort();
            v
        };
        match self {
            CloseAll(xs, y) => CloseAll(s(xs), y.clone()),
            Gather(xs, y, g, h) => {
                Gather(s(xs), y.clone(), Box::new(g.normalize_lists()), Box::new(h.normalize_lists()))
            }
            Branch(x, ys, g, h) => {
                Branch(x.clone(), s(ys), Box::new(g.normalize_lists()), Box::new(h.normalize_lists()))
            }
            Serve(x, ys, g) => Serve(x.clone(), s(ys), Box::new(g.normalize_lists())),
            Axiom(..) => self.clone(),
        }
    }

    pub fn eq_modulo_order(&self, other: &GlobalType) -> bool {
        self.normalize_lists() == other.normalize_lists()
    }

    /// Which of the five coherence rules this constructor corresponds to.
    pub fn rule_name(&self) -> &'static str {
        match self {
            CloseAll(..) => "1⊥",
            Gather(..) => "⊗⅋",
            Branch(..) => "⊕&",
            Serve(..) => "?!",
            Axiom(..) => "Axiom",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(s: &str) -> Name {
        Name::new(s)
    }

    #[test]
    fn order_insensitive_equality() {
        let a = CloseAll(vec![n("b1"), n("b2")], n("s"));
        let b = CloseAll(vec![n("b2"), n("b1")], n("s"));
        assert!(a.eq_modulo_order(&b));
        assert_ne!(a, b);
    }

    #[test]
    fn rename_and_free_names() {
        let g = Gather(
            vec![n("x")],
            n("y"),
            Box::new(Axiom(n("x"), Prop::atom("a"), n("y"))),
            Box::new(CloseAll(vec![n("x")], n("y"))),
        );
        let m: HashMap<Name, Name> = [(n("x"), n("z"))].into();
        assert_eq!(g.rename(&m).free_names(), [n("y"), n("z")].into());
        assert_eq!(g.size(), 3);
    }
}
