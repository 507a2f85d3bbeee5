use std::fmt::Write;

use super::ast::*;

/// Canonical text of a document: one statement per line, single spaces, and
/// numbers in their shortest round-tripping decimal form.
pub fn print(file: &TheoryFile) -> String {
    let mut out = format!("theory {}\n", file.backend.name());
    for item in &file.items {
        match item {
            Item::System(s) => writeln!(out, "system {} dim={}", s.name, s.dim),
            Item::State(d) => writeln!(out, "state {} : {} = {}", d.name, d.output.system, payload(&d.payload)),
            Item::Effect(d) => writeln!(out, "effect {} : {} = {}", d.name, d.input.system, payload(&d.payload)),
            Item::Box(d) => writeln!(
                out,
                "box {} : {} -> {} = {}",
                d.name,
                d.input.system,
                d.output.system,
                payload(&d.payload)
            ),
            Item::Test(t) => {
                let branches: Vec<String> = t.branches.iter().map(|(l, p)| format!("{l}: {}", payload(p))).collect();
                writeln!(
                    out,
                    "test {} : {} -> {} outcomes={{{}}} {{ {} }}",
                    t.name,
                    t.input.system,
                    t.output.system,
                    t.outcomes.join(","),
                    branches.join("; ")
                )
            }
            Item::Circuit(c) => writeln!(out, "circuit {} = {}", c.name, expr(&c.expr)),
        }
        .expect("writing to a string");
    }
    out
}

pub fn payload(p: &PayloadLit) -> String {
    format!("{}={}", p.kind.keyword(), value(&p.value))
}

pub fn value(v: &Value) -> String {
    match v {
        Value::Num(x) => number(*x),
        Value::List(items) => format!("[{}]", items.iter().map(value).collect::<Vec<_>>().join(", ")),
    }
}

/// `Display` for `f64` is the shortest decimal that parses back to the same
/// value and never uses an exponent.
pub fn number(x: f64) -> String {
    format!("{x}")
}

pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Name(n, _) => n.clone(),
        Expr::Id(s) => format!("id({})", s.system),
        Expr::Trace(s) => format!("trace({})", s.system),
        Expr::Swap(a, b) => format!("swap({}, {})", a.system, b.system),
        Expr::Seq(l, r) => {
            let rhs = match **r {
                Expr::Seq(..) => format!("({})", expr(r)),
                _ => expr(r),
            };
            format!("{} ; {rhs}", expr(l))
        }
        Expr::Par(l, r) => {
            let lhs = match **l {
                Expr::Seq(..) => format!("({})", expr(l)),
                _ => expr(l),
            };
            let rhs = match **r {
                Expr::Seq(..) | Expr::Par(..) => format!("({})", expr(r)),
                _ => expr(r),
            };
            format!("{lhs} * {rhs}")
        }
    }
}
