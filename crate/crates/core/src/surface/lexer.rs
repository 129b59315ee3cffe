use super::{ParseError, SourceSpan};

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Tok {
    Ident(String),
    One,
    Sym(&'static str),
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

const SYMBOLS: &[&str] = &[
    "<->", "---", "->", "|-", "|=", "(", ")", "[", "]", "{", "}", ".", ",", ";", ":", "|", "*", "+", "&", "!", "?",
    "~", "=", "@",
];

fn ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

pub fn lex(text: &str, file: Option<&str>) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let span = |line, col| SourceSpan { file: file.map(str::to_string), line, col };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = span(line, col);
        if ident_start(c) {
            let mut s = String::new();
            while i < chars.len() && ident_continue(chars[i]) {
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
            if i + 1 < chars.len() && chars[i] == '#' && chars[i + 1].is_ascii_digit() {
                s.push('#');
                i += 1;
                col += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    s.push(chars[i]);
                    i += 1;
                    col += 1;
                }
            }
            out.push(Token { tok: Tok::Ident(s), span: start });
            continue;
        }
        if c == '1' && !(i + 1 < chars.len() && (chars[i + 1].is_alphanumeric() || chars[i + 1] == '_')) {
            out.push(Token { tok: Tok::One, span: start });
            i += 1;
            col += 1;
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(*s)) {
            Some(s) => {
                out.push(Token { tok: Tok::Sym(s), span: start });
                i += s.chars().count();
                col += s.chars().count();
            }
            None => return Err(ParseError::new(start, format!("unknown token '{}'", c))),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s, None).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn fresh_suffix_is_part_of_identifier() {
        assert_eq!(toks("u#12 # comment"), vec![Tok::Ident("u#12".into())]);
    }

    #[test]
    fn primes_and_arrows() {
        assert_eq!(
            toks("b2''<->x"),
            vec![Tok::Ident("b2''".into()), Tok::Sym("<->"), Tok::Ident("x".into())]
        );
        assert_eq!(toks("1 ->"), vec![Tok::One, Tok::Sym("->")]);
    }

    #[test]
    fn unknown_token_has_position() {
        let e = lex("x\n  $", None).unwrap_err();
        assert_eq!((e.span.line, e.span.col), (2, 3));
    }
}
