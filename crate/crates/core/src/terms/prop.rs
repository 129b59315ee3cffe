use super::Name;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn flip(self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Atom {
    pub name: Name,
    pub polarity: Polarity,
}

/// A classical linear logic formula.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Prop {
    Atom(Atom),
    One,
    Bot,
    Tensor(Box<Prop>, Box<Prop>),
    Par(Box<Prop>, Box<Prop>),
    Plus(Box<Prop>, Box<Prop>),
    With(Box<Prop>, Box<Prop>),
    OfCourse(Box<Prop>),
    WhyNot(Box<Prop>),
}

/// Top-level connective, used in error messages.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Connective {
    Atom,
    One,
    Bot,
    Tensor,
    Par,
    Plus,
    With,
    OfCourse,
    WhyNot,
}

impl Connective {
    pub fn symbol(self) -> &'static str {
        match self {
            Connective::Atom => "atom",
            Connective::One => "1",
            Connective::Bot => "⊥",
            Connective::Tensor => "⊗",
            Connective::Par => "⅋",
            Connective::Plus => "⊕",
            Connective::With => "&",
            Connective::OfCourse => "!",
            Connective::WhyNot => "?",
        }
    }
}

impl std::fmt::Display for Connective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.symbol())
    }
}

impl Prop {
    pub fn atom(name: &str) -> Prop {
        Prop::Atom(Atom { name: Name::new(name), polarity: Polarity::Positive })
    }

    pub fn neg_atom(name: &str) -> Prop {
        Prop::Atom(Atom { name: Name::new(name), polarity: Polarity::Negative })
    }

    pub fn tensor(a: Prop, b: Prop) -> Prop {
        Prop::Tensor(Box::new(a), Box::new(b))
    }

    pub fn par(a: Prop, b: Prop) -> Prop {
        Prop::Par(Box::new(a), Box::new(b))
    }

    pub fn plus(a: Prop, b: Prop) -> Prop {
        Prop::Plus(Box::new(a), Box::new(b))
    }

    pub fn with(a: Prop, b: Prop) -> Prop {
        Prop::With(Box::new(a), Box::new(b))
    }

    pub fn of_course(a: Prop) -> Prop {
        Prop::OfCourse(Box::new(a))
    }

    pub fn why_not(a: Prop) -> Prop {
        Prop::WhyNot(Box::new(a))
    }

    pub fn connective(&self) -> Connective {
        match self {
            Prop::Atom(_) => Connective::Atom,
            Prop::One => Connective::One,
            Prop::Bot => Connective::Bot,
            Prop::Tensor(..) => Connective::Tensor,
            Prop::Par(..) => Connective::Par,
            Prop::Plus(..) => Connective::Plus,
            Prop::With(..) => Connective::With,
            Prop::OfCourse(_) => Connective::OfCourse,
            Prop::WhyNot(_) => Connective::WhyNot,
        }
    }

    /// Node count.
    pub fn size(&self) -> usize {
        match self {
            Prop::Atom(_) | Prop::One | Prop::Bot => 1,
            Prop::Tensor(a, b) | Prop::Par(a, b) | Prop::Plus(a, b) | Prop::With(a, b) => {
                1 + a.size() + b.size()
            }
            Prop::OfCourse(a) | Prop::WhyNot(a) => 1 + a.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Prop::Atom(_) | Prop::One | Prop::Bot => 1,
            Prop::Tensor(a, b) | Prop::Par(a, b) | Prop::Plus(a, b) | Prop::With(a, b) => {
                1 + a.depth().max(b.depth())
            }
            Prop::OfCourse(a) | Prop::WhyNot(a) => 1 + a.depth(),
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(self, Prop::Tensor(..) | Prop::Par(..) | Prop::Plus(..) | Prop::With(..))
    }

    pub fn as_tensor(&self) -> Option<(&Prop, &Prop)> {
        match self {
            Prop::Tensor(a, b) => Some((a, b)),
            _ => None,
        }
    }

    pub fn as_par(&self) -> Option<(&Prop, &Prop)> {
        match self {
            Prop::Par(a, b) => Some((a, b)),
            _ => None,
        }
    }

    pub fn as_plus(&self) -> Option<(&Prop, &Prop)> {
        match self {
            Prop::Plus(a, b) => Some((a, b)),
            _ => None,
        }
    }

    pub fn as_with(&self) -> Option<(&Prop, &Prop)> {
        match self {
            Prop::With(a, b) => Some((a, b)),
            _ => None,
        }
    }

    pub fn as_of_course(&self) -> Option<&Prop> {
        match self {
            Prop::OfCourse(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_why_not(&self) -> Option<&Prop> {
        match self {
            Prop::WhyNot(a) => Some(a),
            _ => None,
        }
    }

    /// Atoms occurring in the formula, by name.
    pub fn atoms(&self, out: &mut Vec<Name>) {
        match self {
            Prop::Atom(a) => {
                if !out.contains(&a.name) {
                    out.push(a.name.clone());
                }
            }
            Prop::One | Prop::Bot => {}
            Prop::Tensor(a, b) | Prop::Par(a, b) | Prop::Plus(a, b) | Prop::With(a, b) => {
                a.atoms(out);
                b.atoms(out);
            }
            Prop::OfCourse(a) | Prop::WhyNot(a) => a.atoms(out),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_counts_nodes() {
        let p = Prop::tensor(Prop::atom("a"), Prop::par(Prop::One, Prop::of_course(Prop::Bot)));
        assert_eq!(p.size(), 6);
        assert_eq!(p.depth(), 4);
    }

    #[test]
    fn destructors_match_connective() {
        let p = Prop::plus(Prop::One, Prop::Bot);
        assert!(p.as_plus().is_some());
        assert!(p.as_with().is_none());
        assert_eq!(p.connective(), Connective::Plus);
    }
}
