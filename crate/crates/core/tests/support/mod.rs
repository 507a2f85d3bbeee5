//! Helpers shared by the DSL corpus tests.
#![allow(dead_code)]

use std::path::PathBuf;

use opt_core::dsl::{self, DslError, Tok};
use rand::Rng;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Every `.opt` file of the corpus with its contents, sorted by name.
pub fn fixtures() -> Vec<(String, String)> {
    let mut files: Vec<_> = std::fs::read_dir(fixture_dir())
        .expect("fixture directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "opt"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect()
}

fn text(t: &Tok) -> String {
    match t {
        Tok::Ident(s) | Tok::Number(s) => s.clone(),
        Tok::Newline => "\n".into(),
        Tok::Eof => String::new(),
        other => other.symbol().into(),
    }
}

const VOCABULARY: [&str; 22] = [
    "theory", "system", "state", "effect", "box", "test", "circuit", "dim", "outcomes", "choi", "I", "id", "=", "->",
    ":", "{", "}", "[", "]", ";", "*", "0.5",
];

/// Renders the token stream of `src` with one token deleted, replaced,
/// duplicated or swapped with its neighbour.
pub fn corrupt(src: &str, rng: &mut impl Rng) -> String {
    let toks: Vec<String> = dsl::lex(src).expect("valid source").iter().map(|t| text(&t.tok)).filter(|s| !s.is_empty()).collect();
    let mut out = toks.clone();
    let i = rng.random_range(0..toks.len());
    match rng.random_range(0..4) {
        0 => {
            out.remove(i);
        }
        1 => out[i] = VOCABULARY[rng.random_range(0..VOCABULARY.len())].to_string(),
        2 => out.insert(i, toks[i].clone()),
        _ if i + 1 < toks.len() => out.swap(i, i + 1),
        _ => out.push(VOCABULARY[rng.random_range(0..VOCABULARY.len())].to_string()),
    }
    out.join(" ").replace(" \n ", "\n")
}

/// The error points into the text: 1-based, on an existing line (or just past the end).
pub fn located(err: &DslError, src: &str) -> bool {
    let s = err.span();
    let lines = src.lines().count().max(1);
    s.line >= 1 && s.column >= 1 && s.line <= lines + 1 && err.report().get("line").is_some()
}
