use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::{DslError, Span};
use crate::diagram::SystemType;
use crate::theory::BackendKind;

const RESERVED: [&str; 4] = ["I", "id", "swap", "trace"];

/// Parses a theory file into its abstract document. Only syntax is checked
/// here; references and payloads are checked by the loader.
pub fn parse(src: &str) -> Result<TheoryFile, DslError> {
    let tokens = lex(src)?;
    Parser { tokens, at: 0 }.file()
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> DslError {
        let t = self.peek();
        DslError::Syntax {
            span: t.span,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.describe(),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Span, DslError> {
        if self.peek().tok == tok {
            Ok(self.bump().span)
        } else {
            Err(self.error(&[&format!("`{}`", tok.symbol())]))
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<Span, DslError> {
        match &self.peek().tok {
            Tok::Ident(s) if s == kw => Ok(self.bump().span),
            _ => Err(self.error(&[&format!("`{kw}`")])),
        }
    }

    fn name(&mut self) -> Result<(String, Span), DslError> {
        match &self.peek().tok {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) && !s.starts_with('@') => {
                let s = s.clone();
                Ok((s, self.bump().span))
            }
            _ => Err(self.error(&["name"])),
        }
    }

    fn skip_newlines(&mut self) {
        while self.peek().tok == Tok::Newline {
            self.bump();
        }
    }

    fn end_of_statement(&mut self) -> Result<(), DslError> {
        match self.peek().tok {
            Tok::Newline | Tok::Eof => {
                self.skip_newlines();
                Ok(())
            }
            _ => Err(self.error(&["end of line"])),
        }
    }

    fn file(&mut self) -> Result<TheoryFile, DslError> {
        self.skip_newlines();
        self.keyword("theory")?;
        let backend = match &self.peek().tok {
            Tok::Ident(s) => match BackendKind::from_name(s) {
                Some(k) => {
                    self.bump();
                    k
                }
                None => return Err(self.error(&["`quantum`", "`quantum-real`", "`classical`"])),
            },
            _ => return Err(self.error(&["`quantum`", "`quantum-real`", "`classical`"])),
        };
        self.end_of_statement()?;
        let mut items = Vec::new();
        while self.peek().tok != Tok::Eof {
            items.push(self.item()?);
            self.end_of_statement()?;
        }
        Ok(TheoryFile { backend, items })
    }

    fn item(&mut self) -> Result<Item, DslError> {
        const STATEMENTS: [&str; 6] = ["`system`", "`state`", "`effect`", "`box`", "`test`", "`circuit`"];
        let kw = match &self.peek().tok {
            Tok::Ident(s) => s.clone(),
            _ => return Err(self.error(&STATEMENTS)),
        };
        let pos = Pos(self.peek().span);
        match kw.as_str() {
            "system" => {
                self.bump();
                let (name, _) = self.name()?;
                self.keyword("dim")?;
                self.expect(Tok::Eq)?;
                let dim = match &self.peek().tok {
                    Tok::Number(n) if n.bytes().all(|b| b.is_ascii_digit()) => n.parse::<usize>().ok(),
                    _ => None,
                };
                let Some(dim) = dim else {
                    return Err(self.error(&["nonnegative integer"]));
                };
                self.bump();
                Ok(Item::System(SystemDecl { name, dim, pos }))
            }
            "state" | "effect" => {
                self.bump();
                let (name, _) = self.name()?;
                self.expect(Tok::Colon)?;
                let sys = self.sys_expr()?;
                self.expect(Tok::Eq)?;
                let payload = self.payload()?;
                let unit = SysExpr {
                    system: SystemType::unit(),
                    pos: sys.pos,
                };
                Ok(if kw == "state" {
                    Item::State(Definition {
                        name,
                        input: unit,
                        output: sys,
                        payload,
                        pos,
                    })
                } else {
                    Item::Effect(Definition {
                        name,
                        input: sys,
                        output: unit,
                        payload,
                        pos,
                    })
                })
            }
            "box" => {
                self.bump();
                let (name, _) = self.name()?;
                self.expect(Tok::Colon)?;
                let input = self.sys_expr()?;
                self.expect(Tok::Arrow)?;
                let output = self.sys_expr()?;
                self.expect(Tok::Eq)?;
                let payload = self.payload()?;
                Ok(Item::Box(Definition {
                    name,
                    input,
                    output,
                    payload,
                    pos,
                }))
            }
            "test" => {
                self.bump();
                let (name, _) = self.name()?;
                self.expect(Tok::Colon)?;
                let input = self.sys_expr()?;
                self.expect(Tok::Arrow)?;
                let output = self.sys_expr()?;
                self.keyword("outcomes")?;
                self.expect(Tok::Eq)?;
                self.expect(Tok::LBrace)?;
                let mut outcomes = vec![self.label()?];
                while self.peek().tok == Tok::Comma {
                    self.bump();
                    outcomes.push(self.label()?);
                }
                self.expect(Tok::RBrace)?;
                self.expect(Tok::LBrace)?;
                let mut branches = Vec::new();
                loop {
                    if self.peek().tok == Tok::RBrace && !branches.is_empty() {
                        break;
                    }
                    let l = self.label()?;
                    self.expect(Tok::Colon)?;
                    branches.push((l, self.payload()?));
                    match self.peek().tok {
                        Tok::Semi => {
                            self.bump();
                        }
                        Tok::RBrace => break,
                        _ => return Err(self.error(&["`;`", "`}`"])),
                    }
                }
                self.expect(Tok::RBrace)?;
                Ok(Item::Test(TestDef {
                    name,
                    input,
                    output,
                    outcomes,
                    branches,
                    pos,
                }))
            }
            "circuit" => {
                self.bump();
                let (name, _) = self.name()?;
                self.expect(Tok::Eq)?;
                let expr = self.expr()?;
                Ok(Item::Circuit(CircuitDef { name, expr, pos }))
            }
            _ => Err(self.error(&STATEMENTS)),
        }
    }

    fn label(&mut self) -> Result<String, DslError> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            Tok::Number(n) if n.bytes().all(|b| b.is_ascii_digit()) => {
                let s = n.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&["outcome label"])),
        }
    }

    fn sys_expr(&mut self) -> Result<SysExpr, DslError> {
        let pos = Pos(self.peek().span);
        let mut system = self.sys_atom()?;
        while self.peek().tok == Tok::Star {
            self.bump();
            system = system.tensor(&self.sys_atom()?);
        }
        Ok(SysExpr { system, pos })
    }

    fn sys_atom(&mut self) -> Result<SystemType, DslError> {
        match &self.peek().tok {
            Tok::Ident(s) if s == "I" => {
                self.bump();
                Ok(SystemType::unit())
            }
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(SystemType::primitive(s))
            }
            _ => Err(self.error(&["system name", "`I`"])),
        }
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        let mut e = self.par_expr()?;
        while self.peek().tok == Tok::Semi {
            self.bump();
            e = Expr::Seq(Box::new(e), Box::new(self.par_expr()?));
        }
        Ok(e)
    }

    fn par_expr(&mut self) -> Result<Expr, DslError> {
        let mut e = self.atom()?;
        while self.peek().tok == Tok::Star {
            self.bump();
            e = Expr::Par(Box::new(e), Box::new(self.atom()?));
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr, DslError> {
        const ATOMS: [&str; 5] = ["name", "`id(`", "`swap(`", "`trace(`", "`(`"];
        let span = self.peek().span;
        match self.peek().tok.clone() {
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(s) if s == "id" || s == "trace" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let sys = self.sys_expr()?;
                self.expect(Tok::RParen)?;
                Ok(if s == "id" { Expr::Id(sys) } else { Expr::Trace(sys) })
            }
            Tok::Ident(s) if s == "swap" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let a = self.sys_expr()?;
                self.expect(Tok::Comma)?;
                let b = self.sys_expr()?;
                self.expect(Tok::RParen)?;
                Ok(Expr::Swap(a, b))
            }
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) && !s.starts_with('@') => {
                self.bump();
                Ok(Expr::Name(s, Pos(span)))
            }
            _ => Err(self.error(&ATOMS)),
        }
    }

    fn payload(&mut self) -> Result<PayloadLit, DslError> {
        let pos = Pos(self.peek().span);
        let kind = match &self.peek().tok {
            Tok::Ident(s) => PayloadKind::from_keyword(s),
            _ => None,
        };
        let Some(kind) = kind else {
            return Err(self.error(&["`choi=`", "`kraus=`", "`stoch=`", "`vec=`", "`dens=`"]));
        };
        self.bump();
        self.expect(Tok::Eq)?;
        let value = self.value()?;
        Ok(PayloadLit { kind, value, pos })
    }

    fn value(&mut self) -> Result<Value, DslError> {
        match self.peek().tok.clone() {
            Tok::Number(n) => {
                let v: f64 = n.parse().map_err(|_| self.error(&["number"]))?;
                if !v.is_finite() {
                    return Err(self.error(&["finite number"]));
                }
                self.bump();
                Ok(Value::Num(v))
            }
            Tok::LBracket => {
                self.bump();
                let mut items = Vec::new();
                if self.peek().tok != Tok::RBracket {
                    items.push(self.value()?);
                    while self.peek().tok == Tok::Comma {
                        self.bump();
                        items.push(self.value()?);
                    }
                }
                match self.peek().tok {
                    Tok::RBracket => {
                        self.bump();
                        Ok(Value::List(items))
                    }
                    _ => Err(self.error(&["`,`", "`]`"])),
                }
            }
            _ => Err(self.error(&["number", "`[`"])),
        }
    }
}
