use std::fmt::{self, Display, Write};

use crate::terms::{Context, Entry, GlobalType, Polarity, Process, Prop, Typed};

fn op_symbol(a: &Prop) -> &'static str {
    match a {
        Prop::Tensor(..) => "*",
        Prop::Par(..) => "par",
        Prop::Plus(..) => "+",
        Prop::With(..) => "&",
        _ => unreachable!(),
    }
}

fn write_prop(a: &Prop, pretty: bool, out: &mut String) {
    match a {
        Prop::Atom(at) => {
            if at.polarity == Polarity::Negative {
                out.push('~');
            }
            out.push_str(at.name.as_str());
        }
        Prop::One => out.push('1'),
        Prop::Bot => out.push_str("bot"),
        Prop::Tensor(l, r) | Prop::Par(l, r) | Prop::Plus(l, r) | Prop::With(l, r) => {
            if pretty {
                write_operand(l, out);
                write!(out, " {} ", op_symbol(a)).unwrap();
                write_prop(r, true, out);
            } else {
                out.push('(');
                write_prop(l, false, out);
                write!(out, " {} ", op_symbol(a)).unwrap();
                write_prop(r, false, out);
                out.push(')');
            }
        }
        Prop::OfCourse(b) | Prop::WhyNot(b) => {
            out.push(if matches!(a, Prop::OfCourse(_)) { '!' } else { '?' });
            if pretty {
                write_operand(b, out);
            } else {
                write_prop(b, false, out);
            }
        }
    }
}

fn write_operand(a: &Prop, out: &mut String) {
    if a.is_binary() {
        out.push('(');
        write_prop(a, true, out);
        out.push(')');
    } else {
        write_prop(a, true, out);
    }
}

/// Fully parenthesized rendering.
pub fn print_proposition(a: &Prop) -> String {
    let mut s = String::new();
    write_prop(a, false, &mut s);
    s
}

/// Minimal parentheses under right associativity and prefix binding.
pub fn print_proposition_pretty(a: &Prop) -> String {
    let mut s = String::new();
    write_prop(a, true, &mut s);
    s
}

impl Display for Prop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if f.alternate() {
            f.write_str(&print_proposition_pretty(self))
        } else {
            f.write_str(&print_proposition(self))
        }
    }
}

fn write_process(p: &Process, pretty: bool, out: &mut String) {
    let ty = |a: &Prop| if pretty { print_proposition_pretty(a) } else { print_proposition(a) };
    match p {
        Process::Link(x, y) => write!(out, "{}<->{}", x, y).unwrap(),
        Process::Close(x) => write!(out, "{}[]", x).unwrap(),
        Process::Wait(x, q) => {
            write!(out, "{}().", x).unwrap();
            write_process(q, pretty, out);
        }
        Process::Send(x, y, a, b) => {
            write!(out, "{}[{}].(", x, y).unwrap();
            write_process(a, pretty, out);
            out.push_str(" | ");
            write_process(b, pretty, out);
            out.push(')');
        }
        Process::Recv(x, y, q) => {
            write!(out, "{}({}).", x, y).unwrap();
            write_process(q, pretty, out);
        }
        Process::InL(x, q) | Process::InR(x, q) => {
            let side = if matches!(p, Process::InL(..)) { "inl" } else { "inr" };
            write!(out, "{}.{}; ", x, side).unwrap();
            write_process(q, pretty, out);
        }
        Process::Case(x, a, b) => {
            write!(out, "{}.case(", x).unwrap();
            write_process(a, pretty, out);
            out.push_str(", ");
            write_process(b, pretty, out);
            out.push(')');
        }
        Process::Client(x, y, q) => {
            write!(out, "?{}[{}].", x, y).unwrap();
            write_process(q, pretty, out);
        }
        Process::Server(x, y, q) => {
            write!(out, "!{}({}).", x, y).unwrap();
            write_process(q, pretty, out);
        }
        Process::Cut(x, a, y, l, r) | Process::CutHalf(x, a, y, l, r) | Process::CutMsg(x, a, y, l, r) => {
            let right = match p {
                Process::Cut(..) => format!("{}", y),
                Process::CutHalf(..) => format!("[]{}", y),
                _ => format!("[{}]", y),
            };
            write!(out, "new ({}:{})({}) (", x, ty(a), right).unwrap();
            write_process(l, pretty, out);
            out.push_str(" | ");
            write_process(r, pretty, out);
            out.push(')');
        }
    }
}

pub fn print_process(p: &Process) -> String {
    let mut s = String::new();
    write_process(p, false, &mut s);
    s
}

pub fn print_process_pretty(p: &Process) -> String {
    let mut s = String::new();
    write_process(p, true, &mut s);
    s
}

impl Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if f.alternate() {
            f.write_str(&print_process_pretty(self))
        } else {
            f.write_str(&print_process(self))
        }
    }
}

fn list(ns: &[crate::terms::Name]) -> String {
    ns.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", ")
}

fn write_global(g: &GlobalType, pretty: bool, indent: usize, out: &mut String) {
    let ty = |a: &Prop| if pretty { print_proposition_pretty(a) } else { print_proposition(a) };
    let (open, sep, pad, pad_in) = if pretty {
        (" {\n", "\n", "  ".repeat(indent), "  ".repeat(indent + 1))
    } else {
        (" { ", " ", String::new(), String::new())
    };
    let close = |out: &mut String| {
        if pretty {
            write!(out, "\n{}}}", pad).unwrap();
        } else {
            out.push_str(" }");
        }
    };
    match g {
        GlobalType::CloseAll(xs, y) => write!(out, "close ({}) -> {}", list(xs), y).unwrap(),
        GlobalType::Axiom(x, a, y) => write!(out, "axiom {}:{} = {}", x, ty(a), y).unwrap(),
        GlobalType::Gather(xs, y, l, r) => {
            write!(out, "gather ({}) -> {}{}{}", list(xs), y, open, pad_in).unwrap();
            write_global(l, pretty, indent + 1, out);
            close(out);
            write!(out, ";{}{}", sep, pad).unwrap();
            write_global(r, pretty, indent, out);
        }
        GlobalType::Branch(x, ys, l, r) => {
            write!(out, "branch {} -> ({}){}{}", x, list(ys), open, pad_in).unwrap();
            write_global(l, pretty, indent + 1, out);
            close(out);
            write!(out, "{}{}", open.trim_start(), pad_in).unwrap();
            write_global(r, pretty, indent + 1, out);
            close(out);
        }
        GlobalType::Serve(x, ys, b) => {
            write!(out, "serve {} -> ({}){}{}", x, list(ys), open, pad_in).unwrap();
            write_global(b, pretty, indent + 1, out);
            close(out);
        }
    }
}

pub fn print_global_type(g: &GlobalType) -> String {
    let mut s = String::new();
    write_global(g, false, 0, &mut s);
    s
}

/// Multi-line rendering with indentation and minimal parentheses.
pub fn print_global_type_pretty(g: &GlobalType) -> String {
    let mut s = String::new();
    write_global(g, true, 0, &mut s);
    s
}

impl Display for GlobalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if f.alternate() {
            f.write_str(&print_global_type_pretty(self))
        } else {
            f.write_str(&print_global_type(self))
        }
    }
}

fn typed(t: &Typed, pretty: bool) -> String {
    let a = if pretty { print_proposition_pretty(&t.ty) } else { print_proposition(&t.ty) };
    format!("{} : {}", t.name, a)
}

fn print_ctx(c: &Context, pretty: bool) -> String {
    let mut parts: Vec<String> = c
        .entries()
        .iter()
        .map(|e| match e {
            Entry::Active(t) => typed(t, pretty),
            Entry::Buffer { msg, blocked } => format!("[{}] {}", typed(msg, pretty), typed(blocked, pretty)),
            Entry::Boxed { kind, members, pivot } => format!(
                "@{}({}) {}",
                kind.symbol(),
                members.iter().map(|m| typed(m, pretty)).collect::<Vec<_>>().join(", "),
                typed(pivot, pretty)
            ),
        })
        .collect();
    if c.star {
        parts.push("*".to_string());
    }
    parts.join(", ")
}

pub fn print_context(c: &Context) -> String {
    print_ctx(c, false)
}

pub fn print_context_pretty(c: &Context) -> String {
    print_ctx(c, true)
}

impl Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_ctx(self, f.alternate()))
    }
}
