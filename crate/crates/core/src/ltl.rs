//! Reach-avoid temporal fragment: `[] (safety) && <> (p_1) && ... && <> (p_n)`.
//!
//! Specifications are parsed into a [`ReachAvoidSpec`], compiled to a
//! deterministic, complete Büchi automaton by tracking which eventualities
//! have been seen so far, and can be checked directly on finite label
//! sequences with [`evaluate_trace`].

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Set of propositions that hold in one state.
pub type LabelSet = BTreeSet<String>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unsupported fragment: {0}")]
    UnsupportedFragment(String),
    #[error("unknown proposition `{0}`")]
    UnknownProposition(String),
    #[error("invalid proposition name `{0}`")]
    InvalidProposition(String),
    #[error("specification has no eventuality to encode")]
    EmptyProgress,
    #[error("malformed automaton: {0}")]
    MalformedAutomaton(String),
}

/// Name of an atomic proposition, `[a-zA-Z_][a-zA-Z0-9_]*`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AtomicProposition(String);

impl AtomicProposition {
    pub fn new(name: impl Into<String>) -> Result<Self, SpecError> {
        let name = name.into();
        let mut chars = name.chars();
        let ok = match chars.next() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
            }
            _ => false,
        };
        if ok && !is_reserved(&name) {
            Ok(Self(name))
        } else {
            Err(SpecError::InvalidProposition(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for AtomicProposition {
    type Error = SpecError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<AtomicProposition> for String {
    fn from(value: AtomicProposition) -> Self {
        value.0
    }
}

impl fmt::Display for AtomicProposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn is_reserved(word: &str) -> bool {
    matches!(word, "true" | "false") || temporal_keyword(word)
}

fn temporal_keyword(word: &str) -> bool {
    matches!(word, "U" | "X" | "F" | "G" | "R" | "W" | "M")
}

/// Propositional formula over atomic propositions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PropFormula {
    True,
    False,
    Atom(String),
    Not(Box<PropFormula>),
    And(Vec<PropFormula>),
    Or(Vec<PropFormula>),
}

impl PropFormula {
    pub fn atom(name: &str) -> Self {
        PropFormula::Atom(name.to_string())
    }

    pub fn negate(self) -> Self {
        match self {
            PropFormula::True => PropFormula::False,
            PropFormula::False => PropFormula::True,
            PropFormula::Not(inner) => *inner,
            other => PropFormula::Not(Box::new(other)),
        }
    }

    /// Conjunction that drops `true` operands and flattens nested conjunctions.
    pub fn and_all(parts: impl IntoIterator<Item = PropFormula>) -> Self {
        let mut out = Vec::new();
        for p in parts {
            match p {
                PropFormula::True => {}
                PropFormula::False => return PropFormula::False,
                PropFormula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => PropFormula::True,
            1 => out.pop().unwrap(),
            _ => PropFormula::And(out),
        }
    }

    pub fn eval(&self, labels: &LabelSet) -> bool {
        match self {
            PropFormula::True => true,
            PropFormula::False => false,
            PropFormula::Atom(name) => labels.contains(name),
            PropFormula::Not(inner) => !inner.eval(labels),
            PropFormula::And(parts) => parts.iter().all(|p| p.eval(labels)),
            PropFormula::Or(parts) => parts.iter().any(|p| p.eval(labels)),
        }
    }

    /// Satisfiability by enumerating assignments of the formula's atoms.
    pub fn is_satisfiable(&self) -> bool {
        let atoms: Vec<String> = self.atoms().into_iter().collect();
        assert!(atoms.len() <= 20, "too many atoms for enumeration");
        (0..1u32 << atoms.len()).any(|mask| {
            let labels: LabelSet = atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, a)| a.clone())
                .collect();
            self.eval(&labels)
        })
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            PropFormula::True | PropFormula::False => {}
            PropFormula::Atom(name) => {
                out.insert(name.clone());
            }
            PropFormula::Not(inner) => inner.collect_atoms(out),
            PropFormula::And(parts) | PropFormula::Or(parts) => {
                parts.iter().for_each(|p| p.collect_atoms(out))
            }
        }
    }
}

impl fmt::Display for PropFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropFormula::True => f.write_str("true"),
            PropFormula::False => f.write_str("false"),
            PropFormula::Atom(name) => f.write_str(name),
            PropFormula::Not(inner) => write!(f, "!{}", Paren(inner)),
            PropFormula::And(parts) => join(f, parts, " && "),
            PropFormula::Or(parts) => join(f, parts, " || "),
        }
    }
}

struct Paren<'a>(&'a PropFormula);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            PropFormula::And(_) | PropFormula::Or(_) => write!(f, "({})", self.0),
            other => write!(f, "{other}"),
        }
    }
}

fn join(f: &mut fmt::Formatter<'_>, parts: &[PropFormula], sep: &str) -> fmt::Result {
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{}", Paren(p))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    Test,
}

/// `[] (safety) && <> (progress_1) && ... && <> (progress_n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachAvoidSpec {
    pub safety: Option<PropFormula>,
    pub progress: Vec<PropFormula>,
    pub role: Role,
}

impl ReachAvoidSpec {
    pub fn new(
        safety: Option<PropFormula>,
        progress: Vec<PropFormula>,
        role: Role,
    ) -> Result<Self, SpecError> {
        match role {
            Role::System if progress.len() != 1 => Err(SpecError::UnsupportedFragment(format!(
                "a system specification needs exactly one eventuality, found {}",
                progress.len()
            ))),
            Role::Test if progress.is_empty() => Err(SpecError::EmptyProgress),
            _ => Ok(Self { safety, progress, role }),
        }
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        if let Some(s) = &self.safety {
            out.extend(s.atoms());
        }
        for p in &self.progress {
            out.extend(p.atoms());
        }
        out
    }
}

impl fmt::Display for ReachAvoidSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        if let Some(s) = &self.safety {
            write!(f, "[] ({s})")?;
            first = false;
        }
        for p in &self.progress {
            if !first {
                f.write_str(" && ")?;
            }
            write!(f, "<> ({p})")?;
            first = false;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Always,
    Eventually,
    And,
    Or,
    Not,
    LParen,
    RParen,
    Ident(String),
    /// Temporal operator outside the fragment (`U`, `X`, `○`, ...).
    Temporal(String),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, SpecError> {
    let bytes: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let (pos, c) = bytes[i];
        let next = bytes.get(i + 1).map(|&(_, c)| c);
        match c {
            c if c.is_whitespace() => i += 1,
            '[' if next == Some(']') => {
                out.push((pos, Tok::Always));
                i += 2;
            }
            '<' if next == Some('>') => {
                out.push((pos, Tok::Eventually));
                i += 2;
            }
            '&' if next == Some('&') => {
                out.push((pos, Tok::And));
                i += 2;
            }
            '|' if next == Some('|') => {
                out.push((pos, Tok::Or));
                i += 2;
            }
            '□' => {
                out.push((pos, Tok::Always));
                i += 1;
            }
            '◇' => {
                out.push((pos, Tok::Eventually));
                i += 1;
            }
            '○' => {
                out.push((pos, Tok::Temporal("○".into())));
                i += 1;
            }
            '!' => {
                out.push((pos, Tok::Not));
                i += 1;
            }
            '(' => {
                out.push((pos, Tok::LParen));
                i += 1;
            }
            ')' => {
                out.push((pos, Tok::RParen));
                i += 1;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].1.is_ascii_alphanumeric() || bytes[i].1 == '_') {
                    i += 1;
                }
                let word: String = bytes[start..i].iter().map(|&(_, c)| c).collect();
                if temporal_keyword(&word) {
                    out.push((pos, Tok::Temporal(word)));
                } else {
                    out.push((pos, Tok::Ident(word)));
                }
            }
            other => {
                return Err(SpecError::Syntax { pos, msg: format!("unexpected character `{other}`") })
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
    known: &'a BTreeSet<String>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn syntax(&self, msg: impl Into<String>) -> SpecError {
        SpecError::Syntax { pos: self.pos(), msg: msg.into() }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), SpecError> {
        match self.peek() {
            Some(t) if *t == tok => {
                self.at += 1;
                Ok(())
            }
            Some(Tok::Temporal(op)) => Err(unsupported_op(op)),
            Some(Tok::Always) | Some(Tok::Eventually) => Err(nested()),
            _ => Err(self.syntax(format!("expected {what}"))),
        }
    }

    fn spec(&mut self) -> Result<(Vec<PropFormula>, Vec<PropFormula>), SpecError> {
        let mut safety = Vec::new();
        let mut progress = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Always) => {
                    self.at += 1;
                    safety.push(self.temporal_operand()?);
                }
                Some(Tok::Eventually) => {
                    self.at += 1;
                    progress.push(self.temporal_operand()?);
                }
                Some(Tok::Temporal(op)) => return Err(unsupported_op(op)),
                None => return Err(self.syntax("expected `[]` or `<>`")),
                _ => {
                    return Err(SpecError::UnsupportedFragment(
                        "top-level terms must be `[] (...)` or `<> (...)`".into(),
                    ))
                }
            }
            match self.peek() {
                None => break,
                Some(Tok::And) => self.at += 1,
                Some(Tok::Or) => {
                    return Err(SpecError::UnsupportedFragment(
                        "disjunction of temporal terms".into(),
                    ))
                }
                Some(Tok::Temporal(op)) => return Err(unsupported_op(op)),
                _ => return Err(self.syntax("expected `&&` between temporal terms")),
            }
        }
        Ok((safety, progress))
    }

    fn temporal_operand(&mut self) -> Result<PropFormula, SpecError> {
        match self.peek() {
            Some(Tok::Always) | Some(Tok::Eventually) => return Err(nested()),
            Some(Tok::Temporal(op)) => return Err(unsupported_op(op)),
            _ => {}
        }
        self.expect(Tok::LParen, "`(` after temporal operator")?;
        let f = self.or()?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(f)
    }

    fn or(&mut self) -> Result<PropFormula, SpecError> {
        let mut parts = vec![self.and()?];
        while self.peek() == Some(&Tok::Or) {
            self.at += 1;
            parts.push(self.and()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { PropFormula::Or(parts) })
    }

    fn and(&mut self) -> Result<PropFormula, SpecError> {
        let mut parts = vec![self.unary()?];
        while self.peek() == Some(&Tok::And) {
            self.at += 1;
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { PropFormula::And(parts) })
    }

    fn unary(&mut self) -> Result<PropFormula, SpecError> {
        match self.peek().cloned() {
            Some(Tok::Not) => {
                self.at += 1;
                Ok(PropFormula::Not(Box::new(self.unary()?)))
            }
            Some(Tok::LParen) => {
                self.at += 1;
                let f = self.or()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Some(Tok::Ident(name)) => {
                self.at += 1;
                match name.as_str() {
                    "true" => Ok(PropFormula::True),
                    "false" => Ok(PropFormula::False),
                    _ if self.known.contains(&name) => Ok(PropFormula::Atom(name)),
                    _ => Err(SpecError::UnknownProposition(name)),
                }
            }
            Some(Tok::Always) | Some(Tok::Eventually) => Err(nested()),
            Some(Tok::Temporal(op)) => Err(unsupported_op(&op)),
            _ => Err(self.syntax("expected a proposition")),
        }
    }
}

fn unsupported_op(op: &str) -> SpecError {
    SpecError::UnsupportedFragment(format!("temporal operator `{op}`"))
}

fn nested() -> SpecError {
    SpecError::UnsupportedFragment("nested temporal operator".into())
}

/// Parses a reach-avoid specification. Several `[]` terms are conjoined into
/// one safety formula.
pub fn parse_spec(
    text: &str,
    role: Role,
    propositions: &[AtomicProposition],
) -> Result<ReachAvoidSpec, SpecError> {
    let known: BTreeSet<String> = propositions.iter().map(|p| p.as_str().to_string()).collect();
    let toks = tokenize(text)?;
    let mut parser = Parser { toks, at: 0, end: text.len(), known: &known };
    let (safety, progress) = parser.spec()?;
    let safety = if safety.is_empty() { None } else { Some(PropFormula::and_all(safety)) };
    ReachAvoidSpec::new(safety, progress, role)
}

// ---------------------------------------------------------------------------
// Automata

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub from: usize,
    pub guard: PropFormula,
    pub to: usize,
}

/// Büchi automaton with transitions guarded by propositional formulas.
#[derive(Debug, Clone)]
pub struct BuchiAutomaton {
    names: Vec<String>,
    transitions: Vec<Transition>,
    outgoing: Vec<Vec<usize>>,
    initial: Vec<usize>,
    accepting: Vec<bool>,
    sink: Option<usize>,
}

impl BuchiAutomaton {
    pub fn new(
        names: Vec<String>,
        transitions: Vec<Transition>,
        initial: Vec<usize>,
        accepting: BTreeSet<usize>,
        sink: Option<usize>,
    ) -> Result<Self, SpecError> {
        let n = names.len();
        if let Some(t) = transitions.iter().find(|t| t.from >= n || t.to >= n) {
            return Err(SpecError::MalformedAutomaton(format!(
                "transition {} -> {} leaves the state set",
                t.from, t.to
            )));
        }
        if initial.iter().chain(accepting.iter()).chain(sink.iter()).any(|&q| q >= n) {
            return Err(SpecError::MalformedAutomaton("state index out of range".into()));
        }
        let mut outgoing = vec![Vec::new(); n];
        for (i, t) in transitions.iter().enumerate() {
            outgoing[t.from].push(i);
        }
        let mut acc = vec![false; n];
        for q in accepting {
            acc[q] = true;
        }
        Ok(Self { names, transitions, outgoing, initial, accepting: acc, sink })
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn state_name(&self, q: usize) -> &str {
        &self.names[q]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn outgoing(&self, q: usize) -> impl Iterator<Item = &Transition> + '_ {
        self.outgoing[q].iter().map(|&i| &self.transitions[i])
    }

    pub fn initial(&self) -> &[usize] {
        &self.initial
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting[q]
    }

    pub fn accepting_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_states()).filter(|&q| self.accepting[q])
    }

    /// The absorbing safety-violation state, if any.
    pub fn sink(&self) -> Option<usize> {
        self.sink
    }

    pub fn is_sink(&self, q: usize) -> bool {
        self.sink == Some(q)
    }

    pub fn propositions(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for t in &self.transitions {
            out.extend(t.guard.atoms());
        }
        out
    }

    /// All successors of `q` on `labels`.
    pub fn successors(&self, q: usize, labels: &LabelSet) -> Vec<usize> {
        self.outgoing(q).filter(|t| t.guard.eval(labels)).map(|t| t.to).collect()
    }

    /// The unique successor for a deterministic automaton; `None` when no
    /// guard is enabled. Panics in debug builds when several are.
    pub fn step(&self, q: usize, labels: &LabelSet) -> Option<usize> {
        let mut it = self.outgoing(q).filter(|t| t.guard.eval(labels));
        let first = it.next()?.to;
        debug_assert!(it.all(|t| t.to == first), "nondeterministic step from {q}");
        Some(first)
    }

    /// Deterministic run over a finite word starting in the (single) initial
    /// state. Returns the visited states, one per consumed label.
    pub fn run<'a>(&self, word: impl IntoIterator<Item = &'a LabelSet>) -> Vec<usize> {
        let mut q = self.initial[0];
        let mut out = Vec::new();
        for labels in word {
            q = self.step(q, labels).expect("automaton is complete");
            out.push(q);
        }
        out
    }

    /// Verdict of the deterministic run over `word`.
    pub fn run_verdict<'a>(&self, word: impl IntoIterator<Item = &'a LabelSet>) -> Verdict {
        let states = self.run(word);
        match states.last() {
            _ if states.iter().any(|&q| self.is_sink(q)) => Verdict::ViolatedSafety,
            Some(&q) if self.is_accepting(q) => Verdict::Satisfied,
            _ => Verdict::Pending,
        }
    }
}

/// Compiles a reach-avoid specification into a deterministic, complete Büchi
/// automaton. State `m < 2^n` records the set of eventualities already seen
/// as a bit mask; state `2^n` (when safety is present) is the absorbing
/// `fail` sink.
pub fn build_nba(spec: &ReachAvoidSpec) -> Result<BuchiAutomaton, SpecError> {
    let n = spec.progress.len();
    if n == 0 {
        return Err(SpecError::EmptyProgress);
    }
    if n > 16 {
        return Err(SpecError::UnsupportedFragment(format!("{n} eventualities")));
    }
    let full = (1usize << n) - 1;
    let mut names: Vec<String> = (0..=full).map(|m| format!("q{m}")).collect();
    let sink = spec.safety.as_ref().map(|_| {
        names.push("fail".to_string());
        full + 1
    });
    let safe = spec.safety.clone().unwrap_or(PropFormula::True);

    let mut transitions = Vec::new();
    for m in 0..=full {
        let pending: Vec<usize> = (0..n).filter(|i| m & (1 << i) == 0).collect();
        // One transition per subset of the pending eventualities that this
        // label discharges.
        for sub in 0..(1usize << pending.len()) {
            let mut target = m;
            let mut parts = vec![safe.clone()];
            for (k, &i) in pending.iter().enumerate() {
                if sub & (1 << k) != 0 {
                    target |= 1 << i;
                    parts.push(spec.progress[i].clone());
                } else {
                    parts.push(spec.progress[i].clone().negate());
                }
            }
            transitions.push(Transition { from: m, guard: PropFormula::and_all(parts), to: target });
        }
        if let Some(fail) = sink {
            transitions.push(Transition { from: m, guard: safe.clone().negate(), to: fail });
        }
    }
    if let Some(fail) = sink {
        transitions.push(Transition { from: fail, guard: PropFormula::True, to: fail });
    }
    BuchiAutomaton::new(names, transitions, vec![0], BTreeSet::from([full]), sink)
}

/// Automaton with one non-accepting state and a `true` self loop.
pub fn unit_automaton() -> BuchiAutomaton {
    BuchiAutomaton::new(
        vec!["u".into()],
        vec![Transition { from: 0, guard: PropFormula::True, to: 0 }],
        vec![0],
        BTreeSet::new(),
        None,
    )
    .expect("well-formed")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    ViolatedSafety,
    Pending,
}

/// Finite-trace semantics of a reach-avoid specification, computed directly
/// from the formulas without any automaton.
pub fn evaluate_trace(spec: &ReachAvoidSpec, trace: &[LabelSet]) -> Verdict {
    if let Some(safety) = &spec.safety {
        if trace.iter().any(|l| !safety.eval(l)) {
            return Verdict::ViolatedSafety;
        }
    }
    let all_seen = spec.progress.iter().all(|p| trace.iter().any(|l| p.eval(l)));
    if all_seen {
        Verdict::Satisfied
    } else {
        Verdict::Pending
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn props(names: &[&str]) -> Vec<AtomicProposition> {
        names.iter().map(|n| AtomicProposition::new(*n).unwrap()).collect()
    }

    fn labels(names: &[&str]) -> LabelSet {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_system_goal() {
        let spec = parse_spec("<> (goal)", Role::System, &props(&["goal"])).unwrap();
        assert_eq!(spec.safety, None);
        assert_eq!(spec.progress, vec![PropFormula::atom("goal")]);
    }

    #[test]
    fn parses_two_keys() {
        let spec =
            parse_spec("<> (key_1) && <> (key_2)", Role::Test, &props(&["key_1", "key_2"])).unwrap();
        assert_eq!(spec.progress, vec![PropFormula::atom("key_1"), PropFormula::atom("key_2")]);
    }

    #[test]
    fn parses_safety_and_composite_progress() {
        let ps = props(&["obs", "goal", "carry"]);
        let spec = parse_spec("[] (!obs) && <> (goal && carry)", Role::System, &ps).unwrap();
        assert_eq!(spec.safety, Some(PropFormula::Not(Box::new(PropFormula::atom("obs")))));
        assert_eq!(spec.to_string(), "[] (!obs) && <> (goal && carry)");
    }

    #[test]
    fn rejects_until_and_nesting() {
        let ps = props(&["goal", "key"]);
        for text in ["<> (goal U key)", "[] <> (goal)", "<> (<> goal)", "<> (X goal)", "<> (○ goal)"] {
            assert!(
                matches!(parse_spec(text, Role::Test, &ps), Err(SpecError::UnsupportedFragment(_))),
                "{text}"
            );
        }
        assert!(matches!(
            parse_spec("<> (goal) || <> (key)", Role::Test, &ps),
            Err(SpecError::UnsupportedFragment(_))
        ));
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let ps = props(&["goal"]);
        assert_eq!(
            parse_spec("<> (door)", Role::System, &ps),
            Err(SpecError::UnknownProposition("door".into()))
        );
        assert!(matches!(parse_spec("<> (goal", Role::System, &ps), Err(SpecError::Syntax { .. })));
        assert!(matches!(parse_spec("<> goal $", Role::System, &ps), Err(SpecError::Syntax { .. })));
        assert!(matches!(parse_spec("", Role::System, &ps), Err(SpecError::Syntax { .. })));
    }

    #[test]
    fn system_role_needs_one_eventuality() {
        let ps = props(&["a", "b"]);
        assert!(matches!(
            parse_spec("<> (a) && <> (b)", Role::System, &ps),
            Err(SpecError::UnsupportedFragment(_))
        ));
        assert_eq!(parse_spec("[] (a)", Role::Test, &ps), Err(SpecError::EmptyProgress));
    }

    #[test]
    fn proposition_names() {
        assert!(AtomicProposition::new("door_1").is_ok());
        assert!(AtomicProposition::new("_x9").is_ok());
        assert!(AtomicProposition::new("1door").is_err());
        assert!(AtomicProposition::new("").is_err());
        assert!(AtomicProposition::new("U").is_err());
    }

    #[test]
    fn goal_automaton_has_two_states() {
        let spec = parse_spec("<> (goal)", Role::System, &props(&["goal"])).unwrap();
        let b = build_nba(&spec).unwrap();
        assert_eq!(b.num_states(), 2);
        assert_eq!(b.initial(), &[0]);
        assert!(!b.is_accepting(0) && b.is_accepting(1));
        assert_eq!(b.step(0, &labels(&["goal"])), Some(1));
        assert_eq!(b.step(0, &labels(&[])), Some(0));
        assert_eq!(b.step(1, &labels(&[])), Some(1));
    }

    #[test]
    fn two_key_automaton_tracks_subsets() {
        let spec = parse_spec("<> (k1) && <> (k2)", Role::Test, &props(&["k1", "k2"])).unwrap();
        let b = build_nba(&spec).unwrap();
        assert_eq!(b.num_states(), 4);
        assert_eq!(b.accepting_states().collect::<Vec<_>>(), vec![3]);
        assert_eq!(b.step(0, &labels(&["k2"])), Some(2));
        assert_eq!(b.step(2, &labels(&["k1"])), Some(3));
        assert_eq!(b.step(0, &labels(&["k1", "k2"])), Some(3));
    }

    #[test]
    fn safety_violation_is_absorbing() {
        let ps = props(&["obs", "goal"]);
        let spec = parse_spec("[] (!obs) && <> (goal)", Role::System, &ps).unwrap();
        let b = build_nba(&spec).unwrap();
        let fail = b.sink().unwrap();
        let word = [labels(&["obs"]), labels(&["goal"]), labels(&[])];
        let run = b.run(word.iter());
        assert!(run.iter().all(|&q| q == fail));
        assert!(run.iter().all(|&q| !b.is_accepting(q)));
        assert_eq!(b.run_verdict(word.iter()), Verdict::ViolatedSafety);
    }

    #[test]
    fn empty_progress_rejected() {
        let spec = ReachAvoidSpec { safety: None, progress: vec![], role: Role::Test };
        assert_eq!(build_nba(&spec).unwrap_err(), SpecError::EmptyProgress);
    }

    #[test]
    fn evaluate_trace_examples() {
        let ps = props(&["k1", "k2", "goal", "obs"]);
        let keys = parse_spec("<> (k1) && <> (k2)", Role::Test, &ps).unwrap();
        let trace = [labels(&[]), labels(&["k1"]), labels(&[]), labels(&["k2"])];
        assert_eq!(evaluate_trace(&keys, &trace), Verdict::Satisfied);

        let goal = parse_spec("<> (goal)", Role::System, &ps).unwrap();
        assert_eq!(evaluate_trace(&goal, &[labels(&[]), labels(&[])]), Verdict::Pending);

        let safe_goal = parse_spec("[] (!obs) && <> (goal)", Role::System, &ps).unwrap();
        assert_eq!(
            evaluate_trace(&safe_goal, &[labels(&["obs"]), labels(&["goal"])]),
            Verdict::ViolatedSafety
        );
    }

    #[test]
    fn automaton_matches_semantics_on_short_words() {
        // every word of length <= 4 over two propositions
        let ps = props(&["k1", "k2"]);
        let spec = parse_spec("<> (k1) && <> (k2)", Role::Test, &ps).unwrap();
        let b = build_nba(&spec).unwrap();
        let alphabet: Vec<LabelSet> =
            vec![labels(&[]), labels(&["k1"]), labels(&["k2"]), labels(&["k1", "k2"])];
        for len in 0..=4u32 {
            for code in 0..4usize.pow(len) {
                let word: Vec<LabelSet> =
                    (0..len).map(|i| alphabet[(code / 4usize.pow(i)) % 4].clone()).collect();
                assert_eq!(b.run_verdict(word.iter()), evaluate_trace(&spec, &word), "{word:?}");
            }
        }
    }

    #[test]
    fn unit_automaton_is_trivial() {
        let u = unit_automaton();
        assert_eq!(u.num_states(), 1);
        assert_eq!(u.step(0, &labels(&["anything"])), Some(0));
        assert_eq!(u.accepting_states().count(), 0);
    }
}
