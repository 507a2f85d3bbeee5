use super::{DslError, Span};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    /// Decimal literal, kept verbatim.
    Number(String),
    Colon,
    Arrow,
    Eq,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Semi,
    Star,
    Newline,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of file".into(),
            other => format!("`{}`", other.symbol()),
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Tok::Colon => ":",
            Tok::Arrow => "->",
            Tok::Eq => "=",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Star => "*",
            Tok::Newline => "newline",
            Tok::Eof => "end of file",
            Tok::Ident(_) => "identifier",
            Tok::Number(_) => "number",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// Splits source text into tokens. Line breaks inside brackets, braces and
/// parentheses are insignificant; elsewhere they end a statement.
pub fn lex(src: &str) -> Result<Vec<Token>, DslError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut depth = 0usize;
    while i < chars.len() {
        let ch = chars[i];
        let span = Span::new(line, col);
        let peek = chars.get(i + 1).copied();
        let single = match ch {
            ':' => Some(Tok::Colon),
            '=' => Some(Tok::Eq),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            '*' => Some(Tok::Star),
            _ => None,
        };
        if let Some(tok) = single {
            match tok {
                Tok::LBrace | Tok::LBracket | Tok::LParen => depth += 1,
                Tok::RBrace | Tok::RBracket | Tok::RParen => depth = depth.saturating_sub(1),
                _ => {}
            }
            out.push(Token { tok, span });
            i += 1;
            col += 1;
            continue;
        }
        match ch {
            '\n' => {
                if depth == 0 {
                    out.push(Token { tok: Tok::Newline, span });
                }
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                    col += 1;
                }
            }
            '-' if peek == Some('>') => {
                out.push(Token { tok: Tok::Arrow, span });
                i += 2;
                col += 2;
            }
            c if c.is_ascii_digit() || (c == '-' && peek.is_some_and(|p| p.is_ascii_digit())) => {
                let start = i;
                i += 1;
                let digits = |i: &mut usize| {
                    let s = *i;
                    while *i < chars.len() && chars[*i].is_ascii_digit() {
                        *i += 1;
                    }
                    *i > s
                };
                digits(&mut i);
                if i < chars.len() && chars[i] == '.' {
                    i += 1;
                    if !digits(&mut i) {
                        return Err(syntax_at(line, col + (i - start), &chars, i, &["digit"]));
                    }
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    i += 1;
                    if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                        i += 1;
                    }
                    if !digits(&mut i) {
                        return Err(syntax_at(line, col + (i - start), &chars, i, &["exponent digits"]));
                    }
                }
                if i < chars.len() && (chars[i].is_alphabetic() || chars[i] == '_' || chars[i] == '.') {
                    return Err(syntax_at(line, col + (i - start), &chars, i, &["delimiter after number"]));
                }
                let text: String = chars[start..i].iter().collect();
                col += i - start;
                out.push(Token { tok: Tok::Number(text), span });
            }
            c if c.is_ascii_alphabetic() || c == '_' || c == '@' => {
                let start = i;
                i += 1;
                while i < chars.len() {
                    let d = chars[i];
                    let joins = d == '-' && chars.get(i + 1).is_some_and(|n| n.is_ascii_alphabetic());
                    if d.is_ascii_alphanumeric() || d == '_' || joins {
                        i += 1;
                    } else {
                        break;
                    }
                }
                let text: String = chars[start..i].iter().collect();
                col += i - start;
                out.push(Token { tok: Tok::Ident(text), span });
            }
            _ => return Err(syntax_at(line, col, &chars, i, &["token"])),
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span::new(line, col),
    });
    Ok(out)
}

fn syntax_at(line: usize, col: usize, chars: &[char], i: usize, expected: &[&str]) -> DslError {
    DslError::Syntax {
        span: Span::new(line, col),
        expected: expected.iter().map(|s| s.to_string()).collect(),
        found: chars
            .get(i)
            .map(|c| format!("character {c:?}"))
            .unwrap_or_else(|| "end of file".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        lex(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn tokens_and_positions() {
        let toks = lex("box M : q -> q * @2 = kraus=[-0.5, 1e-3]").unwrap();
        assert_eq!(toks[4].tok, Tok::Arrow);
        assert_eq!(toks[4].span, Span::new(1, 11));
        assert_eq!(toks[7].tok, Tok::Ident("@2".into()));
        assert!(toks.iter().any(|t| t.tok == Tok::Number("-0.5".into())));
        assert!(toks.iter().any(|t| t.tok == Tok::Number("1e-3".into())));
    }

    #[test]
    fn hyphenated_backend_names() {
        assert_eq!(kinds("theory quantum-real")[1], Tok::Ident("quantum-real".into()));
    }

    #[test]
    fn newlines_inside_brackets_are_dropped() {
        let t = kinds("state r : q = dens=[[1, 0],\n  [0, 0]]\n# note\ncircuit c = r");
        assert_eq!(t.iter().filter(|t| **t == Tok::Newline).count(), 2);
    }

    #[test]
    fn located_errors() {
        match lex("system q dim=2\nstate % x").unwrap_err() {
            DslError::Syntax { span, .. } => assert_eq!(span, Span::new(2, 7)),
            e => panic!("{e}"),
        }
        assert!(lex("vec=[1.]").is_err());
        assert!(lex("vec=[1x]").is_err());
    }
}
