use std::collections::HashMap;

use super::ast::*;
use super::parser::parse;
use super::{DslError, Span};
use crate::audit::is_deterministic;
use crate::diagram::{test_par, test_seq, Diagram, OutcomeSpace, SystemType, Test};
use crate::eval::Model;
use crate::linalg::{c, CMatrix, CVector, RMatrix};
use crate::theory::{BackendKind, EffectVector, Payload, StateVector, TheoryBackend, TheoryError, Tolerances, TransferMatrix};

#[derive(Clone, Debug)]
pub struct LoadedTest {
    pub test: Test,
    pub branches: Vec<TransferMatrix>,
    /// Branches sum to a deterministic transformation.
    pub complete: bool,
}

#[derive(Clone, Debug)]
pub struct LoadedCircuit {
    pub test: Test,
    /// Every leaf is a complete test or a deterministic transformation.
    pub complete: bool,
}

impl LoadedCircuit {
    /// The diagram of a circuit without non-trivial tests.
    pub fn diagram(&self) -> Option<&Diagram> {
        (self.test.outcome_space().is_singleton_epsilon()).then(|| &self.test.branches()[0])
    }
}

#[derive(Clone, Debug)]
pub enum Entry {
    State(StateVector),
    Effect(EffectVector),
    Box(TransferMatrix),
    Test(LoadedTest),
    Circuit(LoadedCircuit),
}

/// A checked document: a model holding every compiled box, plus the named
/// objects in declaration order.
#[derive(Clone, Debug)]
pub struct LoadedTheory {
    document: TheoryFile,
    model: Model,
    entries: HashMap<String, Entry>,
    order: Vec<String>,
}

impl LoadedTheory {
    pub fn document(&self) -> &TheoryFile {
        &self.document
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn backend(&self) -> &TheoryBackend {
        self.model.backend()
    }

    /// Names of states, effects, boxes, tests and circuits in declaration order.
    pub fn names(&self) -> &[String] {
        &self.order
    }

    pub fn entry(&self, name: &str) -> Option<&Entry> {
        self.entries.get(name)
    }

    pub fn state(&self, name: &str) -> Option<&StateVector> {
        match self.entries.get(name)? {
            Entry::State(s) => Some(s),
            _ => None,
        }
    }

    pub fn states(&self) -> impl Iterator<Item = (&str, &StateVector)> {
        self.order.iter().filter_map(|n| self.state(n).map(|s| (n.as_str(), s)))
    }

    pub fn test(&self, name: &str) -> Option<&LoadedTest> {
        match self.entries.get(name)? {
            Entry::Test(t) => Some(t),
            _ => None,
        }
    }

    pub fn tests(&self) -> impl Iterator<Item = (&str, &LoadedTest)> {
        self.order.iter().filter_map(|n| self.test(n).map(|t| (n.as_str(), t)))
    }

    pub fn circuit(&self, name: &str) -> Option<&LoadedCircuit> {
        match self.entries.get(name)? {
            Entry::Circuit(c) => Some(c),
            _ => None,
        }
    }

    /// Transfer matrix of a state, effect, box or test-free circuit.
    pub fn transfer(&self, name: &str) -> Option<TransferMatrix> {
        match self.entries.get(name)? {
            Entry::State(_) | Entry::Effect(_) | Entry::Box(_) => self.model.get_box(name).cloned(),
            Entry::Circuit(c) => self.model.evaluate(c.diagram()?).ok(),
            Entry::Test(_) => None,
        }
    }
}

/// Parses and loads with default tolerances.
pub fn load(src: &str) -> Result<LoadedTheory, DslError> {
    load_document(parse(src)?, Tolerances::default())
}

/// Resolves references, compiles payloads (rejecting non-physical ones) and
/// builds every circuit.
pub fn load_document(document: TheoryFile, tol: Tolerances) -> Result<LoadedTheory, DslError> {
    let mut backend = TheoryBackend::new(document.backend).with_tolerances(tol);
    for item in &document.items {
        if let Item::System(s) = item {
            if backend.declared_systems().any(|(l, _)| l == s.name) {
                return Err(DslError::DuplicateDefinition {
                    span: s.pos.0,
                    name: s.name.clone(),
                });
            }
            backend.declare_system(&s.name, s.dim).map_err(|e| DslError::DimensionMismatch {
                span: s.pos.0,
                message: e.to_string(),
            })?;
        }
    }
    let mut loader = Loader {
        model: Model::new(backend),
        entries: HashMap::new(),
        order: Vec::new(),
        deterministic: HashMap::new(),
    };
    for item in &document.items {
        if matches!(item, Item::System(_)) {
            continue;
        }
        let name = item.name().to_string();
        if loader.entries.contains_key(&name) || loader.model.backend().declared_systems().any(|(l, _)| l == name) {
            return Err(DslError::DuplicateDefinition { span: item.pos().0, name });
        }
        let entry = loader.item(item)?;
        loader.entries.insert(name.clone(), entry);
        loader.order.push(name);
    }
    Ok(LoadedTheory {
        document,
        model: loader.model,
        entries: loader.entries,
        order: loader.order,
    })
}

struct Loader {
    model: Model,
    entries: HashMap<String, Entry>,
    order: Vec<String>,
    /// Completeness of each leaf box, by box name.
    deterministic: HashMap<String, bool>,
}

impl Loader {
    fn backend(&self) -> &TheoryBackend {
        self.model.backend()
    }

    fn system(&self, s: &SysExpr) -> Result<SystemType, DslError> {
        for label in s.system.labels() {
            if self.backend().hilbert_dim(label).is_err() {
                return Err(DslError::UnknownReference {
                    span: s.pos.0,
                    name: label.clone(),
                });
            }
        }
        Ok(s.system.clone())
    }

    fn item(&mut self, item: &Item) -> Result<Entry, DslError> {
        match item {
            Item::System(_) => unreachable!("systems are declared first"),
            Item::State(d) | Item::Effect(d) | Item::Box(d) => {
                let input = self.system(&d.input)?;
                let output = self.system(&d.output)?;
                let t = self.compile(&input, &output, &d.payload)?;
                self.register(&d.name, t.clone());
                let b = self.backend();
                Ok(match item {
                    Item::State(_) => Entry::State(b.state_of(&t).expect("state payload")),
                    Item::Effect(_) => Entry::Effect(b.effect_of(&t).expect("effect payload")),
                    _ => Entry::Box(t),
                })
            }
            Item::Test(t) => self.test(t).map(Entry::Test),
            Item::Circuit(cdef) => {
                let (test, complete) = self.expr(&cdef.expr, cdef.pos.0)?;
                Ok(Entry::Circuit(LoadedCircuit { test, complete }))
            }
        }
    }

    fn register(&mut self, name: &str, t: TransferMatrix) -> Diagram {
        let det = is_deterministic(self.backend(), &t).unwrap_or(false);
        self.deterministic.insert(name.to_string(), det);
        self.model.insert_box(name, t)
    }

    fn test(&mut self, t: &TestDef) -> Result<LoadedTest, DslError> {
        let input = self.system(&t.input)?;
        let output = self.system(&t.output)?;
        for (i, l) in t.outcomes.iter().enumerate() {
            if t.outcomes[..i].contains(l) {
                return Err(DslError::DuplicateDefinition {
                    span: t.pos.0,
                    name: l.clone(),
                });
            }
        }
        let mut compiled: Vec<Option<TransferMatrix>> = vec![None; t.outcomes.len()];
        for (label, payload) in &t.branches {
            let Some(i) = t.outcomes.iter().position(|o| o == label) else {
                return Err(DslError::UnknownReference {
                    span: payload.pos.0,
                    name: label.clone(),
                });
            };
            if compiled[i].is_some() {
                return Err(DslError::DuplicateDefinition {
                    span: payload.pos.0,
                    name: label.clone(),
                });
            }
            compiled[i] = Some(self.compile(&input, &output, payload)?);
        }
        let mut branches = Vec::with_capacity(compiled.len());
        for (label, t_x) in t.outcomes.iter().zip(compiled) {
            branches.push(t_x.ok_or_else(|| DslError::InvalidPayload {
                span: t.pos.0,
                message: format!("no branch for outcome {label}"),
            })?);
        }
        let b = self.backend();
        let total = b.sum(&branches).map_err(|e| theory_error(e, t.pos.0))?;
        if let Some(v) = b.is_physical(&total).map_err(|e| theory_error(e, t.pos.0))?.violation() {
            return Err(DslError::NotPhysical {
                span: t.pos.0,
                violation: v.clone(),
            });
        }
        let complete = is_deterministic(b, &total).unwrap_or(false);
        let diagrams: Vec<Diagram> = t
            .outcomes
            .iter()
            .zip(&branches)
            .map(|(l, m)| self.model.insert_box(format!("{}[{l}]", t.name), m.clone()))
            .collect();
        let space = OutcomeSpace::from_atoms(t.outcomes.iter().cloned()).expect("outcomes checked distinct");
        let test = Test::new(space, diagrams).expect("branches share the declared type");
        Ok(LoadedTest {
            test,
            branches,
            complete,
        })
    }

    fn compile(&self, input: &SystemType, output: &SystemType, p: &PayloadLit) -> Result<TransferMatrix, DslError> {
        let b = self.backend();
        let span = p.pos.0;
        let payload = payload_value(b, input, output, p)?;
        b.compile_box(input, output, &payload).map_err(|e| theory_error(e, span))
    }

    /// Compiles an expression to a test and its completeness.
    fn expr(&mut self, e: &Expr, at: Span) -> Result<(Test, bool), DslError> {
        match e {
            Expr::Name(n, pos) => match self.entries.get(n) {
                Some(Entry::Test(t)) => Ok((t.test.clone(), t.complete)),
                Some(Entry::Circuit(c)) => Ok((c.test.clone(), c.complete)),
                Some(_) => {
                    let d = self.model.box_diagram(n).expect("registered box");
                    Ok((Test::singleton(d), self.deterministic[n]))
                }
                None => Err(DslError::UnknownReference {
                    span: pos.0,
                    name: n.clone(),
                }),
            },
            Expr::Id(s) => Ok((Test::singleton(Diagram::identity(self.system(s)?)), true)),
            Expr::Swap(a, b) => Ok((Test::singleton(Diagram::swap(self.system(a)?, self.system(b)?)), true)),
            Expr::Trace(s) => {
                let sys = self.system(s)?;
                let name = format!("trace({sys})");
                let d = match self.model.box_diagram(&name) {
                    Some(d) => d,
                    None => {
                        let t = self.backend().trace_transfer(&sys).map_err(|e| theory_error(e, s.pos.0))?;
                        self.model.insert_box(name, t)
                    }
                };
                Ok((Test::singleton(d), true))
            }
            Expr::Seq(l, r) => {
                let (t1, c1) = self.expr(l, at)?;
                let (t2, c2) = self.expr(r, at)?;
                let t = test_seq(&t1, &t2).map_err(|_| DslError::DimensionMismatch {
                    span: expr_span(r).unwrap_or(at),
                    message: format!("`;` joins {} to {}", t1.output_type(), t2.input_type()),
                })?;
                Ok((t, c1 && c2))
            }
            Expr::Par(l, r) => {
                let (t1, c1) = self.expr(l, at)?;
                let (t2, c2) = self.expr(r, at)?;
                Ok((test_par(&t1, &t2), c1 && c2))
            }
        }
    }
}

fn expr_span(e: &Expr) -> Option<Span> {
    match e {
        Expr::Name(_, p) => Some(p.0),
        Expr::Id(s) | Expr::Trace(s) | Expr::Swap(s, _) => Some(s.pos.0),
        Expr::Seq(l, _) | Expr::Par(l, _) => expr_span(l),
    }
}

fn theory_error(e: TheoryError, span: Span) -> DslError {
    match e {
        TheoryError::NotPhysical(violation) => DslError::NotPhysical { span, violation },
        TheoryError::Shape { .. } | TheoryError::InvalidSystem { .. } | TheoryError::TypeMismatch { .. } => {
            DslError::DimensionMismatch {
                span,
                message: e.to_string(),
            }
        }
        TheoryError::UnknownSystem(name) => DslError::UnknownReference { span, name },
        other => DslError::InvalidPayload {
            span,
            message: other.to_string(),
        },
    }
}

fn invalid(span: Span, message: impl Into<String>) -> DslError {
    DslError::InvalidPayload {
        span,
        message: message.into(),
    }
}

fn entry(v: &Value, span: Span) -> Result<num_complex::Complex64, DslError> {
    match v {
        Value::Num(x) => Ok(c(*x, 0.0)),
        Value::List(p) => match p[..] {
            [Value::Num(re), Value::Num(im)] => Ok(c(re, im)),
            _ => Err(invalid(span, "matrix entries are numbers or [re, im] pairs")),
        },
    }
}

fn real_entry(v: &Value, span: Span) -> Result<f64, DslError> {
    match v {
        Value::Num(x) => Ok(*x),
        Value::List(_) => Err(invalid(span, "entries of this payload are real numbers")),
    }
}

fn list(v: &Value, span: Span, what: &str) -> Result<Vec<Value>, DslError> {
    match v {
        Value::List(items) if !items.is_empty() => Ok(items.clone()),
        Value::List(_) => Err(invalid(span, format!("{what} is empty"))),
        Value::Num(_) => Err(invalid(span, format!("{what} must be a bracketed list"))),
    }
}

fn complex_vector(v: &Value, span: Span) -> Result<CVector, DslError> {
    let items = list(v, span, "vector")?;
    let entries: Vec<_> = items.iter().map(|x| entry(x, span)).collect::<Result<_, _>>()?;
    Ok(CVector::from_vec(entries))
}

fn complex_matrix(v: &Value, span: Span) -> Result<CMatrix, DslError> {
    let rows = list(v, span, "matrix")?;
    let rows: Vec<Vec<_>> = rows
        .iter()
        .map(|r| list(r, span, "matrix row")?.iter().map(|x| entry(x, span)).collect())
        .collect::<Result<_, _>>()?;
    let n = rows[0].len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(invalid(span, "matrix rows differ in length"));
    }
    Ok(CMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
}

fn real_matrix(v: &Value, span: Span) -> Result<RMatrix, DslError> {
    let rows = list(v, span, "matrix")?;
    let rows: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| list(r, span, "matrix row")?.iter().map(|x| real_entry(x, span)).collect())
        .collect::<Result<_, _>>()?;
    let n = rows[0].len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(invalid(span, "matrix rows differ in length"));
    }
    Ok(RMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
}

/// Interprets a literal according to the payload keyword and backend.
fn payload_value(b: &TheoryBackend, input: &SystemType, output: &SystemType, p: &PayloadLit) -> Result<Payload, DslError> {
    let span = p.pos.0;
    let classical = b.kind() == BackendKind::Classical;
    let unsupported = || invalid(span, format!("`{}` payloads are not available in the {} backend", p.kind.keyword(), b.name()));
    Ok(match p.kind {
        PayloadKind::Choi if !classical => Payload::Choi(complex_matrix(&p.value, span)?),
        PayloadKind::Kraus if !classical => {
            let ops = list(&p.value, span, "Kraus list")?;
            Payload::Kraus(ops.iter().map(|k| complex_matrix(k, span)).collect::<Result<_, _>>()?)
        }
        PayloadKind::Dens if !classical => Payload::Density(complex_matrix(&p.value, span)?),
        PayloadKind::Vec if !classical => {
            if !input.is_unit() && !output.is_unit() {
                return Err(invalid(span, "`vec` describes a state or an effect"));
            }
            Payload::Ket(complex_vector(&p.value, span)?)
        }
        PayloadKind::Stoch if classical => Payload::Stochastic(real_matrix(&p.value, span)?),
        PayloadKind::Vec if classical => {
            let items = list(&p.value, span, "vector")?;
            Payload::Probabilities(items.iter().map(|x| real_entry(x, span)).collect::<Result<_, _>>()?)
        }
        _ => return Err(unsupported()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::run_complete_test_circuit;

    const PLUS: &str = "theory quantum
system q dim=2
state plus : q = vec=[0.7071067811865476, 0.7071067811865476]
test z : q -> I outcomes={0,1} { 0: dens=[[1, 0], [0, 0]]; 1: dens=[[0, 0], [0, 1]] }
circuit c = plus ; z
";

    #[test]
    fn plus_state_in_the_computational_basis() {
        let th = load(PLUS).unwrap();
        let c = th.circuit("c").unwrap();
        assert!(c.complete);
        let dist = run_complete_test_circuit(&c.test, th.model()).unwrap();
        for p in dist.probs() {
            assert!((p - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn non_psd_choi_is_rejected_at_its_line() {
        let src = "theory quantum\nsystem q dim=2\nbox t : q -> q = choi=[[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]]\n";
        match load(src).unwrap_err() {
            DslError::NotPhysical { span, violation } => {
                assert_eq!(span, Span::new(3, 18));
                assert_eq!(violation.condition, "choi-positivity");
                assert!((violation.value + 0.5).abs() < 1e-12);
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn references_and_dimensions_are_checked() {
        let unknown = "theory quantum\nsystem q dim=2\ncircuit c = id(q) ; m\n";
        assert!(matches!(load(unknown), Err(DslError::UnknownReference { name, .. }) if name == "m"));
        let sys = "theory quantum\nstate r : x = vec=[1, 0]\n";
        assert!(matches!(load(sys), Err(DslError::UnknownReference { name, .. }) if name == "x"));
        let shape = "theory quantum\nsystem q dim=2\nstate r : q = vec=[1, 0, 0]\n";
        assert!(matches!(load(shape), Err(DslError::DimensionMismatch { .. })));
        let seq = "theory quantum\nsystem q dim=2\nsystem t dim=3\ncircuit c = id(q) ; id(t)\n";
        assert!(matches!(load(seq), Err(DslError::DimensionMismatch { span, .. }) if span == Span::new(4, 24)));
        let kind = "theory classical\nsystem b dim=2\nbox t : b -> b = choi=[[1]]\n";
        assert!(matches!(load(kind), Err(DslError::InvalidPayload { .. })));
        let dup = "theory classical\nsystem b dim=2\nstate b : b = vec=[1, 0]\n";
        assert!(matches!(load(dup), Err(DslError::DuplicateDefinition { .. })));
    }

    #[test]
    fn incomplete_tests_are_marked() {
        let src = "theory classical
system b dim=2
state u : b = vec=[0.5, 0.5]
test half : b -> I outcomes={yes} { yes: vec=[0.5, 0.5] }
circuit c = u ; half
";
        let th = load(src).unwrap();
        assert!(!th.test("half").unwrap().complete);
        assert!(!th.circuit("c").unwrap().complete);
        let over = "theory classical\nsystem b dim=2\ntest t : b -> I outcomes={a,b} { a: vec=[1, 1]; b: vec=[1, 0] }\n";
        assert!(matches!(load(over), Err(DslError::NotPhysical { .. })));
    }

    #[test]
    fn circuits_reuse_circuits_and_tests() {
        let src = "theory quantum
system q dim=2
state zero : q = dens=[[1, 0], [0, 0]]
box h : q -> q = kraus=[[[0.7071067811865476, 0.7071067811865476], [0.7071067811865476, -0.7071067811865476]]]
test z : q -> I outcomes={0,1} { 0: dens=[[1, 0], [0, 0]]; 1: dens=[[0, 0], [0, 1]] }
circuit prep = zero ; h
circuit c = prep * prep ; z * z
";
        let th = load(src).unwrap();
        let c = th.circuit("c").unwrap();
        assert_eq!(c.test.len(), 4);
        let dist = run_complete_test_circuit(&c.test, th.model()).unwrap();
        for p in dist.probs() {
            assert!((p - 0.25).abs() < 1e-12);
        }
        assert!(th.transfer("prep").is_some());
        assert!(th.transfer("c").is_none());
    }
}
