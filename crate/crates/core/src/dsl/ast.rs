use super::Span;
use crate::diagram::SystemType;
use crate::theory::BackendKind;

/// Source position of a node. Positions never take part in equality, so two
/// documents compare equal when they differ only in layout.
#[derive(Clone, Copy, Debug, Default)]
pub struct Pos(pub Span);

impl PartialEq for Pos {
    fn eq(&self, _: &Pos) -> bool {
        true
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TheoryFile {
    pub backend: BackendKind,
    pub items: Vec<Item>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    System(SystemDecl),
    State(Definition),
    Effect(Definition),
    Box(Definition),
    Test(TestDef),
    Circuit(CircuitDef),
}

impl Item {
    pub fn name(&self) -> &str {
        match self {
            Item::System(s) => &s.name,
            Item::State(d) | Item::Effect(d) | Item::Box(d) => &d.name,
            Item::Test(t) => &t.name,
            Item::Circuit(c) => &c.name,
        }
    }

    pub fn pos(&self) -> Pos {
        match self {
            Item::System(s) => s.pos,
            Item::State(d) | Item::Effect(d) | Item::Box(d) => d.pos,
            Item::Test(t) => t.pos,
            Item::Circuit(c) => c.pos,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemDecl {
    pub name: String,
    pub dim: usize,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SysExpr {
    pub system: SystemType,
    pub pos: Pos,
}

/// A state (`input` is `I`), effect (`output` is `I`) or box.
#[derive(Clone, Debug, PartialEq)]
pub struct Definition {
    pub name: String,
    pub input: SysExpr,
    pub output: SysExpr,
    pub payload: PayloadLit,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestDef {
    pub name: String,
    pub input: SysExpr,
    pub output: SysExpr,
    pub outcomes: Vec<String>,
    pub branches: Vec<(String, PayloadLit)>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitDef {
    pub name: String,
    pub expr: Expr,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Name(String, Pos),
    Id(SysExpr),
    Swap(SysExpr, SysExpr),
    Trace(SysExpr),
    Seq(Box<Expr>, Box<Expr>),
    Par(Box<Expr>, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PayloadKind {
    Choi,
    Kraus,
    Stoch,
    Vec,
    Dens,
}

impl PayloadKind {
    pub fn keyword(self) -> &'static str {
        match self {
            PayloadKind::Choi => "choi",
            PayloadKind::Kraus => "kraus",
            PayloadKind::Stoch => "stoch",
            PayloadKind::Vec => "vec",
            PayloadKind::Dens => "dens",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Some(match s {
            "choi" => PayloadKind::Choi,
            "kraus" => PayloadKind::Kraus,
            "stoch" => PayloadKind::Stoch,
            "vec" => PayloadKind::Vec,
            "dens" => PayloadKind::Dens,
            _ => return None,
        })
    }

    pub const ALL: [PayloadKind; 5] = [
        PayloadKind::Choi,
        PayloadKind::Kraus,
        PayloadKind::Stoch,
        PayloadKind::Vec,
        PayloadKind::Dens,
    ];
}

/// Literal numeric tree: numbers and bracketed lists.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Num(f64),
    List(Vec<Value>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PayloadLit {
    pub kind: PayloadKind,
    pub value: Value,
    pub pos: Pos,
}
