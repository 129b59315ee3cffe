use std::collections::HashSet;

use super::lexer::{lex, Tok, Token};
use super::{ParseError, SourceSpan};
use crate::terms::{BoxKind, Context, Entry, GlobalType, Name, Prop, Process, Typed};

const KEYWORDS: &[&str] = &[
    "par", "bot", "new", "inl", "inr", "case", "close", "gather", "branch", "serve", "axiom",
];

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof: SourceSpan,
    allow_runtime: bool,
    live: Vec<Name>,
    forbidden: Vec<(Name, Option<&'static str>)>,
}

impl Parser {
    pub fn new(text: &str, file: Option<&str>) -> Result<Parser, ParseError> {
        let toks = lex(text, file)?;
        let lines = text.lines().count().max(1);
        let last = text.lines().last().map(|l| l.chars().count() + 1).unwrap_or(1);
        let eof = SourceSpan { file: file.map(str::to_string), line: lines, col: last };
        Ok(Parser { toks, pos: 0, eof, allow_runtime: false, live: vec![], forbidden: vec![] })
    }

    pub fn allow_runtime(mut self, yes: bool) -> Parser {
        self.allow_runtime = yes;
        self
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn span(&self) -> SourceSpan {
        self.toks.get(self.pos).map(|t| t.span.clone()).unwrap_or_else(|| self.eof.clone())
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::new(self.span(), msg.into()))
    }

    fn describe(&self) -> String {
        match self.peek() {
            None => "end of input".to_string(),
            Some(Tok::Ident(s)) => format!("'{}'", s),
            Some(Tok::One) => "'1'".to_string(),
            Some(Tok::Sym(s)) => format!("'{}'", s),
        }
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn expect_end(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            self.err(format!("unexpected {} after end of term", self.describe()))
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(t)) if *t == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(t)) if t == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected '{}', found {}", s, self.describe()))
        }
    }

    fn expect_kw(&mut self, k: &str) -> Result<(), ParseError> {
        if self.is_kw(k) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected '{}', found {}", k, self.describe()))
        }
    }

    fn ident(&mut self) -> Result<Name, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) if !KEYWORDS.contains(&s.as_str()) => {
                let n = Name::new(s);
                self.pos += 1;
                Ok(n)
            }
            _ => self.err(format!("expected identifier, found {}", self.describe())),
        }
    }

    // Propositions.

    pub fn proposition(&mut self) -> Result<Prop, ParseError> {
        let left = self.prefix()?;
        let op = match self.peek() {
            Some(Tok::Sym("*")) => Prop::tensor as fn(Prop, Prop) -> Prop,
            Some(Tok::Sym("+")) => Prop::plus,
            Some(Tok::Sym("&")) => Prop::with,
            Some(Tok::Ident(s)) if s == "par" => Prop::par,
            _ => return Ok(left),
        };
        self.pos += 1;
        let right = self.proposition()?;
        Ok(op(left, right))
    }

    fn prefix(&mut self) -> Result<Prop, ParseError> {
        if self.eat_sym("!") {
            return Ok(Prop::of_course(self.prefix()?));
        }
        if self.eat_sym("?") {
            return Ok(Prop::why_not(self.prefix()?));
        }
        if self.eat_sym("~") {
            let n = self.ident()?;
            return Ok(Prop::neg_atom(n.as_str()));
        }
        if self.eat_sym("(") {
            let p = self.proposition()?;
            self.expect_sym(")")?;
            return Ok(p);
        }
        match self.peek() {
            Some(Tok::One) => {
                self.pos += 1;
                Ok(Prop::One)
            }
            Some(Tok::Ident(s)) if s == "bot" => {
                self.pos += 1;
                Ok(Prop::Bot)
            }
            _ => {
                let n = self.ident().or_else(|_| self.err(format!("expected proposition, found {}", self.describe())))?;
                Ok(Prop::atom(n.as_str()))
            }
        }
    }

    // Processes.

    fn binder(&mut self) -> Result<(Name, SourceSpan), ParseError> {
        let span = self.span();
        let n = self.ident()?;
        if self.live.contains(&n) {
            return Err(ParseError::new(span, format!("rebinding of live name {}", n)));
        }
        Ok((n, span))
    }

    fn subject(&mut self) -> Result<Name, ParseError> {
        let span = self.span();
        let n = self.ident()?;
        if let Some((_, Some(why))) = self.forbidden.iter().rev().find(|(f, _)| *f == n) {
            return Err(ParseError::new(span, format!("scope violation: {} {}", n, why)));
        }
        Ok(n)
    }

    fn scoped<T>(
        &mut self,
        bind: Option<&Name>,
        forbid: Option<(&Name, &'static str)>,
        f: impl FnOnce(&mut Parser) -> Result<T, ParseError>,
    ) -> Result<T, ParseError> {
        let (nl, nf) = (self.live.len(), self.forbidden.len());
        if let Some((n, why)) = forbid {
            self.forbidden.push((n.clone(), Some(why)));
        }
        if let Some(b) = bind {
            self.live.push(b.clone());
            self.forbidden.push((b.clone(), None));
        }
        let r = f(self);
        self.live.truncate(nl);
        self.forbidden.truncate(nf);
        r
    }

    pub fn process(&mut self) -> Result<Process, ParseError> {
        if self.eat_sym("(") {
            let p = self.process()?;
            self.expect_sym(")")?;
            return Ok(p);
        }
        if self.is_kw("new") {
            return self.restriction();
        }
        if self.eat_sym("?") {
            let x = self.subject()?;
            self.expect_sym("[")?;
            let (y, _) = self.binder()?;
            self.expect_sym("]")?;
            self.expect_sym(".")?;
            let p = self.scoped(Some(&y), None, |s| s.process())?;
            return Ok(Process::Client(x, y, Box::new(p)));
        }
        if self.eat_sym("!") {
            let x = self.subject()?;
            self.expect_sym("(")?;
            let (y, _) = self.binder()?;
            self.expect_sym(")")?;
            self.expect_sym(".")?;
            let p = self.scoped(Some(&y), None, |s| s.process())?;
            return Ok(Process::Server(x, y, Box::new(p)));
        }
        let x = self.subject()?;
        if self.eat_sym("<->") {
            let y = self.subject()?;
            return Ok(Process::Link(x, y));
        }
        if self.eat_sym("[") {
            if self.eat_sym("]") {
                return Ok(Process::Close(x));
            }
            let (y, span) = self.binder()?;
            if y == x {
                return Err(ParseError::new(span, format!("sent name {} equals its channel", y)));
            }
            self.expect_sym("]")?;
            self.expect_sym(".")?;
            self.expect_sym("(")?;
            let p = self.scoped(Some(&y), None, |s| s.process())?;
            self.expect_sym("|")?;
            let q = self.scoped(None, Some((&y, "is bound in the left branch of the send")), |s| s.process())?;
            self.expect_sym(")")?;
            return Ok(Process::Send(x, y, Box::new(p), Box::new(q)));
        }
        if self.eat_sym("(") {
            if self.eat_sym(")") {
                self.expect_sym(".")?;
                let p = self.process()?;
                return Ok(Process::Wait(x, Box::new(p)));
            }
            let (y, span) = self.binder()?;
            if y == x {
                return Err(ParseError::new(span, format!("received name {} equals its channel", y)));
            }
            self.expect_sym(")")?;
            self.expect_sym(".")?;
            let p = self.scoped(Some(&y), None, |s| s.process())?;
            return Ok(Process::Recv(x, y, Box::new(p)));
        }
        if self.eat_sym(".") {
            if self.is_kw("inl") || self.is_kw("inr") {
                let left = self.is_kw("inl");
                self.pos += 1;
                self.expect_sym(";")?;
                let p = Box::new(self.process()?);
                return Ok(if left { Process::InL(x, p) } else { Process::InR(x, p) });
            }
            self.expect_kw("case")?;
            self.expect_sym("(")?;
            let p = self.process()?;
            self.expect_sym(",")?;
            let q = self.process()?;
            self.expect_sym(")")?;
            return Ok(Process::Case(x, Box::new(p), Box::new(q)));
        }
        self.err(format!("expected process action after {}, found {}", x, self.describe()))
    }

    fn restriction(&mut self) -> Result<Process, ParseError> {
        let start = self.span();
        self.expect_kw("new")?;
        self.expect_sym("(")?;
        let (x, _) = self.binder()?;
        self.expect_sym(":")?;
        let a = self.proposition()?;
        self.expect_sym(")")?;
        self.expect_sym("(")?;
        #[derive(PartialEq)]
        enum Form {
            Plain,
            Half,
            Msg,
        }
        let (form, y) = if self.eat_sym("[") {
            if self.eat_sym("]") {
                let (y, _) = self.binder()?;
                (Form::Half, y)
            } else {
                let (y, _) = self.binder()?;
                self.expect_sym("]")?;
                (Form::Msg, y)
            }
        } else {
            let (y, _) = self.binder()?;
            (Form::Plain, y)
        };
        if form != Form::Plain && !self.allow_runtime {
            return Err(ParseError::new(start, "runtime cut forms are not allowed in surface input"));
        }
        if x == y {
            return Err(ParseError::new(start, format!("cut endpoints must differ, found {} twice", x)));
        }
        self.expect_sym(")")?;
        self.expect_sym("(")?;
        let p = self.scoped(Some(&x), Some((&y, "is bound in the right branch of the cut")), |s| s.process())?;
        self.expect_sym("|")?;
        let q = self.scoped(Some(&y), Some((&x, "is bound in the left branch of the cut")), |s| s.process())?;
        self.expect_sym(")")?;
        Ok(match form {
            Form::Plain => Process::Cut(x, a, y, Box::new(p), Box::new(q)),
            Form::Half => {
                if !matches!(q, Process::CutMsg(..)) {
                    return Err(ParseError::new(start, "a half cut must enclose a message cut on its right"));
                }
                Process::CutHalf(x, a, y, Box::new(p), Box::new(q))
            }
            Form::Msg => Process::CutMsg(x, a, y, Box::new(p), Box::new(q)),
        })
    }

    // Global types.

    fn name_list(&mut self) -> Result<Vec<Name>, ParseError> {
        self.expect_sym("(")?;
        let mut out = vec![self.ident()?];
        while self.eat_sym(",") {
            out.push(self.ident()?);
        }
        self.expect_sym(")")?;
        Ok(out)
    }

    fn distinct(&self, names: &[&Name], span: SourceSpan) -> Result<(), ParseError> {
        let mut seen = HashSet::new();
        for n in names {
            if !seen.insert(*n) {
                return Err(ParseError::new(span, format!("duplicate endpoint {} in one constructor", n)));
            }
        }
        Ok(())
    }

    pub fn global_type(&mut self) -> Result<GlobalType, ParseError> {
        let span = self.span();
        if self.eat_sym("(") {
            let g = self.global_type()?;
            self.expect_sym(")")?;
            return Ok(g);
        }
        let g = match self.peek() {
            Some(Tok::Ident(k)) if k == "close" => {
                self.pos += 1;
                let xs = self.name_list()?;
                self.expect_sym("->")?;
                let y = self.ident()?;
                GlobalType::CloseAll(xs, y)
            }
            Some(Tok::Ident(k)) if k == "gather" => {
                self.pos += 1;
                let xs = self.name_list()?;
                self.expect_sym("->")?;
                let y = self.ident()?;
                self.expect_sym("{")?;
                let g = self.global_type()?;
                self.expect_sym("}")?;
                self.expect_sym(";")?;
                let h = self.global_type()?;
                GlobalType::Gather(xs, y, Box::new(g), Box::new(h))
            }
            Some(Tok::Ident(k)) if k == "branch" => {
                self.pos += 1;
                let x = self.ident()?;
                self.expect_sym("->")?;
                let ys = self.name_list()?;
                self.expect_sym("{")?;
                let g = self.global_type()?;
                self.expect_sym("}")?;
                self.expect_sym("{")?;
                let h = self.global_type()?;
                self.expect_sym("}")?;
                GlobalType::Branch(x, ys, Box::new(g), Box::new(h))
            }
            Some(Tok::Ident(k)) if k == "serve" => {
                self.pos += 1;
                let x = self.ident()?;
                self.expect_sym("->")?;
                let ys = self.name_list()?;
                self.expect_sym("{")?;
                let g = self.global_type()?;
                self.expect_sym("}")?;
                GlobalType::Serve(x, ys, Box::new(g))
            }
            Some(Tok::Ident(k)) if k == "axiom" => {
                self.pos += 1;
                let x = self.ident()?;
                self.expect_sym(":")?;
                let a = self.proposition()?;
                self.expect_sym("=")?;
                let y = self.ident()?;
                GlobalType::Axiom(x, a, y)
            }
            _ => return self.err(format!("expected global type, found {}", self.describe())),
        };
        self.distinct(&g.endpoints(), span)?;
        Ok(g)
    }

    // Contexts.

    fn typed(&mut self) -> Result<Typed, ParseError> {
        let n = self.ident()?;
        self.expect_sym(":")?;
        let a = self.proposition()?;
        Ok(Typed::new(n, a))
    }

    fn entry_start(&self) -> bool {
        matches!(self.peek(), Some(Tok::Ident(_)) | Some(Tok::Sym("*")) | Some(Tok::Sym("[")) | Some(Tok::Sym("@")))
    }

    /// A context, stopping at `---`, `|-`, `|=` or end of input.
    pub fn context(&mut self) -> Result<Context, ParseError> {
        let mut ctx = Context::new();
        while self.entry_start() {
            let span = self.span();
            if self.eat_sym("*") {
                ctx.star = true;
            } else {
                let e = if self.eat_sym("[") {
                    let msg = self.typed()?;
                    self.expect_sym("]")?;
                    let blocked = self.typed()?;
                    Entry::Buffer { msg, blocked }
                } else if self.eat_sym("@") {
                    let kind = match self.ident()?.as_str() {
                        "L" => BoxKind::L,
                        "R" => BoxKind::R,
                        "Q" => BoxKind::Q,
                        other => return Err(ParseError::new(span, format!("unknown box kind {}", other))),
                    };
                    self.expect_sym("(")?;
                    let mut members = vec![self.typed()?];
                    while self.eat_sym(",") {
                        members.push(self.typed()?);
                    }
                    self.expect_sym(")")?;
                    let pivot = self.typed()?;
                    Entry::Boxed { kind, members, pivot }
                } else {
                    Entry::Active(self.typed()?)
                };
                ctx.push(e).map_err(|e| ParseError::new(span, e.to_string()))?;
            }
            self.eat_sym(",");
        }
        Ok(ctx)
    }

    pub fn is_separator(&mut self) -> bool {
        self.eat_sym("---")
    }

    pub fn expect_turnstile(&mut self, t: &str) -> Result<(), ParseError> {
        self.expect_sym(t)
    }
}
