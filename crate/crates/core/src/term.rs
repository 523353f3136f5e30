//! Logical-form terms: constants, compounds, argument identifiers,
//! meta-variables, and second-order abstraction patterns `P[X]`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Argument slot of an abstraction application `P[..]`: either an identifier
/// meta-variable (`P[X]`) or a concrete identifier (`P[$x]`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AbsArg {
    Meta(String),
    Ident(String),
}

/// A logical-form term.
///
/// Ground terms consist of constants, compounds and identifiers. Meta-variables
/// and abstraction applications appear only inside lexicon schemes. `Hole` is
/// the placeholder of an [`Abstraction`] body and never occurs elsewhere.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Constant(String),
    Compound(String, Vec<Term>),
    /// Argument identifier, written `$name`. Identifiers are ground.
    Identifier(String),
    /// Term or identifier meta-variable, written in uppercase.
    MetaVar(String),
    /// Abstraction application `P[X]` or `P[$x]`.
    AbsApp(String, AbsArg),
    /// Placeholder inside an abstraction body, written `_`.
    Hole,
}

impl Term {
    pub fn is_ground(&self) -> bool {
        match self {
            Term::Constant(_) | Term::Identifier(_) => true,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
            Term::MetaVar(_) | Term::AbsApp(..) | Term::Hole => false,
        }
    }

    pub fn contains_identifier(&self) -> bool {
        match self {
            Term::Identifier(_) => true,
            Term::Compound(_, args) => args.iter().any(Term::contains_identifier),
            _ => false,
        }
    }

    pub fn contains_hole(&self) -> bool {
        match self {
            Term::Hole => true,
            Term::Compound(_, args) => args.iter().any(Term::contains_hole),
            _ => false,
        }
    }

    /// Identifier names in first-occurrence (preorder) order, without duplicates.
    pub fn identifiers(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_identifiers(&mut out);
        out
    }

    fn collect_identifiers(&self, out: &mut Vec<String>) {
        match self {
            Term::Identifier(name) => {
                if !out.iter().any(|n| n == name) {
                    out.push(name.clone());
                }
            }
            Term::Compound(_, args) => {
                for a in args {
                    a.collect_identifiers(out);
                }
            }
            _ => {}
        }
    }

    /// Meta-variable names in first-occurrence order (plain occurrences only,
    /// not the names inside an `AbsApp`).
    pub fn meta_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_meta_vars(&mut out);
        out
    }

    fn collect_meta_vars(&self, out: &mut Vec<String>) {
        match self {
            Term::MetaVar(name) => {
                if !out.iter().any(|n| n == name) {
                    out.push(name.clone());
                }
            }
            Term::Compound(_, args) => {
                for a in args {
                    a.collect_meta_vars(out);
                }
            }
            _ => {}
        }
    }

    /// Replace every occurrence of identifier `name` by `replacement`.
    pub fn replace_identifier(&self, name: &str, replacement: &Term) -> Term {
        match self {
            Term::Identifier(n) if n == name => replacement.clone(),
            Term::Compound(f, args) => Term::Compound(
                f.clone(),
                args.iter()
                    .map(|a| a.replace_identifier(name, replacement))
                    .collect(),
            ),
            other => other.clone(),
        }
    }

    fn replace_hole(&self, replacement: &Term) -> Term {
        match self {
            Term::Hole => replacement.clone(),
            Term::Compound(f, args) => Term::Compound(
                f.clone(),
                args.iter().map(|a| a.replace_hole(replacement)).collect(),
            ),
            other => other.clone(),
        }
    }

    /// Node count excluding argument identifiers (and holes).
    pub fn size_excluding_identifiers(&self) -> usize {
        match self {
            Term::Constant(_) | Term::MetaVar(_) => 1,
            Term::Compound(_, args) => {
                1 + args
                    .iter()
                    .map(Term::size_excluding_identifiers)
                    .sum::<usize>()
            }
            Term::Identifier(_) | Term::Hole => 0,
            Term::AbsApp(..) => 1,
        }
    }

    /// Structural equality modulo a bijective renaming of identifiers.
    pub fn alpha_eq(&self, other: &Term) -> bool {
        let mut fwd: BTreeMap<&str, &str> = BTreeMap::new();
        let mut bwd: BTreeMap<&str, &str> = BTreeMap::new();
        self.alpha_eq_inner(other, &mut fwd, &mut bwd)
    }

    fn alpha_eq_inner<'a>(
        &'a self,
        other: &'a Term,
        fwd: &mut BTreeMap<&'a str, &'a str>,
        bwd: &mut BTreeMap<&'a str, &'a str>,
    ) -> bool {
        match (self, other) {
            (Term::Identifier(a), Term::Identifier(b)) => {
                let f = fwd.entry(a).or_insert(b);
                let g = bwd.entry(b).or_insert(a);
                *f == b.as_str() && *g == a.as_str()
            }
            (Term::Compound(f, xs), Term::Compound(g, ys)) => {
                f == g
                    && xs.len() == ys.len()
                    && xs
                        .iter()
                        .zip(ys)
                        .all(|(x, y)| x.alpha_eq_inner(y, fwd, bwd))
            }
            (a, b) => a == b,
        }
    }

    /// Rename identifiers to `x1, x2, ...` in first-occurrence order.
    pub fn canonicalize_identifiers(&self) -> (Term, BTreeMap<String, String>) {
        let mut map = BTreeMap::new();
        for (i, name) in self.identifiers().into_iter().enumerate() {
            map.insert(name, format!("x{}", i + 1));
        }
        (self.rename_identifiers(&map), map)
    }

    pub fn rename_identifiers(&self, map: &BTreeMap<String, String>) -> Term {
        match self {
            Term::Identifier(n) => match map.get(n) {
                Some(m) => Term::Identifier(m.clone()),
                None => self.clone(),
            },
            Term::Compound(f, args) => Term::Compound(
                f.clone(),
                args.iter().map(|a| a.rename_identifiers(map)).collect(),
            ),
            other => other.clone(),
        }
    }
}

/// A logical-form abstraction missing one argument, e.g. `\_.s(j,_)`.
///
/// The body contains [`Term::Hole`] zero or more times; applying the
/// abstraction plugs the argument into every hole.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Abstraction {
    pub body: Term,
}

impl Abstraction {
    /// Abstract all occurrences of identifier `name` out of `ground`.
    pub fn abstract_identifier(ground: &Term, name: &str) -> Abstraction {
        Abstraction {
            body: ground.replace_identifier(name, &Term::Hole),
        }
    }

    pub fn apply(&self, arg: &Term) -> Term {
        self.body.replace_hole(arg)
    }

    /// True when the hole does not occur in the body.
    pub fn is_vacuous(&self) -> bool {
        !self.body.contains_hole()
    }
}

impl fmt::Display for Abstraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\\_.{}", self.body)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TermError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unbound meta-variable {0}")]
    Unbound(String),
}

/// Bindings produced by matching: term meta-variables to ground terms,
/// identifier meta-variables to identifier names, abstraction meta-variables
/// to abstractions. The three domains are disjoint by construction.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Substitution {
    pub terms: BTreeMap<String, Term>,
    pub idents: BTreeMap<String, String>,
    pub abstractions: BTreeMap<String, Abstraction>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty() && self.idents.is_empty() && self.abstractions.is_empty()
    }

    pub fn lookup_var(&self, name: &str) -> Option<Term> {
        if let Some(t) = self.terms.get(name) {
            return Some(t.clone());
        }
        self.idents.get(name).map(|n| Term::Identifier(n.clone()))
    }

    /// Bind a meta-variable to a ground term, routing identifiers to the
    /// identifier domain. Fails (returns false) on an inconsistent rebind.
    pub fn bind_var(&mut self, name: &str, value: &Term) -> bool {
        match self.lookup_var(name) {
            Some(existing) => existing == *value,
            None => {
                match value {
                    Term::Identifier(id) => {
                        self.idents.insert(name.to_string(), id.clone());
                    }
                    _ => {
                        self.terms.insert(name.to_string(), value.clone());
                    }
                }
                true
            }
        }
    }

    pub fn bind_abstraction(&mut self, name: &str, abs: Abstraction) -> bool {
        match self.abstractions.get(name) {
            Some(existing) => *existing == abs,
            None => {
                self.abstractions.insert(name.to_string(), abs);
                true
            }
        }
    }

    pub fn rename_identifiers(&self, map: &BTreeMap<String, String>) -> Substitution {
        Substitution {
            terms: self
                .terms
                .iter()
                .map(|(k, v)| (k.clone(), v.rename_identifiers(map)))
                .collect(),
            idents: self
                .idents
                .iter()
                .map(|(k, v)| (k.clone(), map.get(v).cloned().unwrap_or_else(|| v.clone())))
                .collect(),
            abstractions: self
                .abstractions
                .iter()
                .map(|(k, v)| {
                    (
                        k.clone(),
                        Abstraction {
                            body: v.body.rename_identifiers(map),
                        },
                    )
                })
                .collect(),
        }
    }
}

/// Apply a substitution to a scheme term, producing a ground term.
pub fn substitute(term: &Term, sub: &Substitution) -> Result<Term, TermError> {
    match term {
        Term::Constant(_) | Term::Identifier(_) => Ok(term.clone()),
        Term::Hole => Ok(term.clone()),
        Term::Compound(f, args) => {
            let args = args
                .iter()
                .map(|a| substitute(a, sub))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Term::Compound(f.clone(), args))
        }
        Term::MetaVar(name) => sub
            .lookup_var(name)
            .ok_or_else(|| TermError::Unbound(name.clone())),
        Term::AbsApp(abs_name, arg) => {
            let abstraction = sub
                .abstractions
                .get(abs_name)
                .ok_or_else(|| TermError::Unbound(abs_name.clone()))?;
            let arg_term = match arg {
                AbsArg::Ident(id) => Term::Identifier(id.clone()),
                AbsArg::Meta(x) => sub
                    .lookup_var(x)
                    .ok_or_else(|| TermError::Unbound(x.clone()))?,
            };
            Ok(abstraction.apply(&arg_term))
        }
    }
}

/// Apply an abstraction to an argument term.
pub fn apply_abstraction(abs: &Abstraction, arg: &Term) -> Term {
    abs.apply(arg)
}

/// First-order matching of a pattern (no abstraction applications) against a
/// ground term. Returns the most general matcher, or `None`.
pub fn match_first_order(pattern: &Term, ground: &Term) -> Option<Substitution> {
    let mut sub = Substitution::new();
    if match_first_order_into(pattern, ground, &mut sub) {
        Some(sub)
    } else {
        None
    }
}

pub(crate) fn match_first_order_into(
    pattern: &Term,
    ground: &Term,
    sub: &mut Substitution,
) -> bool {
    match pattern {
        Term::MetaVar(name) => sub.bind_var(name, ground),
        Term::Constant(_) | Term::Identifier(_) => pattern == ground,
        Term::Compound(f, args) => match ground {
            Term::Compound(g, gargs) if f == g && args.len() == gargs.len() => args
                .iter()
                .zip(gargs)
                .all(|(p, t)| match_first_order_into(p, t, sub)),
            _ => false,
        },
        // Abstraction applications are outside the first-order fragment.
        Term::AbsApp(..) | Term::Hole => false,
    }
}

/// Second-order matching of `P[X]` against a ground term.
///
/// With `fixed_x` given, the abstraction captures all occurrences of that
/// identifier (vacuously, if it does not occur). Otherwise one match is
/// produced per identifier occurring in `ground`, in first-occurrence order.
pub fn match_second_order(
    abs_name: &str,
    x_name: &str,
    ground: &Term,
    fixed_x: Option<&str>,
) -> Vec<Substitution> {
    let mut out = Vec::new();
    match fixed_x {
        Some(x) => {
            let mut sub = Substitution::new();
            sub.idents.insert(x_name.to_string(), x.to_string());
            sub.abstractions.insert(
                abs_name.to_string(),
                Abstraction::abstract_identifier(ground, x),
            );
            out.push(sub);
        }
        None => {
            for x in ground.identifiers() {
                let mut sub = Substitution::new();
                sub.idents.insert(x_name.to_string(), x.clone());
                sub.abstractions.insert(
                    abs_name.to_string(),
                    Abstraction::abstract_identifier(ground, &x),
                );
                out.push(sub);
            }
        }
    }
    out
}

/// General matching of a scheme pattern against a ground term under a partial
/// substitution. Meta-variables listed in `ident_vars` only match identifiers.
/// Abstraction applications may yield several alternatives, so a list of
/// extended substitutions is returned (empty when there is no match).
pub fn match_pattern(
    pattern: &Term,
    ground: &Term,
    ident_vars: &std::collections::BTreeSet<String>,
    seed: &Substitution,
) -> Vec<Substitution> {
    let mut states = vec![seed.clone()];
    if !match_pattern_inner(pattern, ground, ident_vars, &mut states) {
        return Vec::new();
    }
    states
}

fn match_pattern_inner(
    pattern: &Term,
    ground: &Term,
    ident_vars: &std::collections::BTreeSet<String>,
    states: &mut Vec<Substitution>,
) -> bool {
    match pattern {
        Term::Constant(_) | Term::Identifier(_) => pattern == ground,
        Term::Hole => false,
        Term::MetaVar(name) => {
            if ident_vars.contains(name) && !matches!(ground, Term::Identifier(_)) {
                return false;
            }
            states.retain_mut(|s| s.bind_var(name, ground));
            !states.is_empty()
        }
        Term::Compound(f, args) => match ground {
            Term::Compound(g, gargs) if f == g && args.len() == gargs.len() => {
                for (p, t) in args.iter().zip(gargs) {
                    if !match_pattern_inner(p, t, ident_vars, states) {
                        return false;
                    }
                }
                true
            }
            _ => false,
        },
        Term::AbsApp(abs_name, arg) => {
            let mut next = Vec::new();
            for state in states.iter() {
                // With the identifier already fixed the abstraction may be
                // vacuous; otherwise one alternative per identifier in the
                // ground term, in first-occurrence order.
                let fixed: Option<String> = match arg {
                    AbsArg::Ident(x) => Some(x.clone()),
                    AbsArg::Meta(x) => state.idents.get(x).cloned(),
                };
                let candidates: Vec<String> = match fixed {
                    Some(x) => vec![x],
                    None => ground.identifiers(),
                };
                for x in candidates {
                    let mut merged = state.clone();
                    let ident_ok = match arg {
                        AbsArg::Meta(xvar) => merged.bind_var(xvar, &Term::Identifier(x.clone())),
                        AbsArg::Ident(_) => true,
                    };
                    if ident_ok
                        && merged.bind_abstraction(
                            abs_name,
                            Abstraction::abstract_identifier(ground, &x),
                        )
                    {
                        next.push(merged);
                    }
                }
            }
            *states = next;
            !states.is_empty()
        }
    }
}

/// Session-scoped source of fresh argument identifiers `$x1, $x2, ...`.
#[derive(Debug, Clone, Default)]
pub struct IdentifierSource {
    next: u64,
}

impl IdentifierSource {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh(&mut self) -> String {
        self.next += 1;
        format!("x{}", self.next)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Constant(name) => write!(f, "{}", name),
            Term::Compound(functor, args) => {
                write!(f, "{}(", functor)?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{}", a)?;
                }
                write!(f, ")")
            }
            Term::Identifier(name) => write!(f, "${}", name),
            Term::MetaVar(name) => write!(f, "{}", name),
            Term::AbsApp(abs, AbsArg::Meta(x)) => write!(f, "{}[{}]", abs, x),
            Term::AbsApp(abs, AbsArg::Ident(x)) => write!(f, "{}[${}]", abs, x),
            Term::Hole => write!(f, "_"),
        }
    }
}

struct Parser<'a> {
    input: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(input: &'a str) -> Self {
        Parser { input, pos: 0 }
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, TermError> {
        Err(TermError::Syntax {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.input[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn expect(&mut self, c: char) -> Result<(), TermError> {
        if self.peek() == Some(c) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected '{}'", c))
        }
    }

    fn name(&mut self) -> Result<String, TermError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            self.bump();
        }
        if self.pos == start {
            self.error("expected a name")
        } else {
            Ok(self.input[start..self.pos].to_string())
        }
    }

    fn term(&mut self) -> Result<Term, TermError> {
        self.skip_ws();
        match self.peek() {
            Some('$') => {
                self.bump();
                let name = self.name()?;
                Ok(Term::Identifier(name))
            }
            Some(c) if c.is_ascii_uppercase() => {
                let name = self.name()?;
                if self.peek() == Some('[') {
                    self.bump();
                    self.skip_ws();
                    let arg = match self.peek() {
                        Some('$') => {
                            self.bump();
                            AbsArg::Ident(self.name()?)
                        }
                        Some(c) if c.is_ascii_uppercase() => AbsArg::Meta(self.name()?),
                        _ => return self.error("expected identifier or meta-variable in [..]"),
                    };
                    self.skip_ws();
                    self.expect(']')?;
                    Ok(Term::AbsApp(name, arg))
                } else {
                    Ok(Term::MetaVar(name))
                }
            }
            Some(c) if c.is_ascii_lowercase() || c.is_ascii_digit() => {
                let name = self.name()?;
                if self.peek() == Some('(') {
                    self.bump();
                    let mut args = Vec::new();
                    loop {
                        args.push(self.term()?);
                        self.skip_ws();
                        match self.bump() {
                            Some(',') => continue,
                            Some(')') => break,
                            _ => return self.error("expected ',' or ')'"),
                        }
                    }
                    Ok(Term::Compound(name, args))
                } else {
                    Ok(Term::Constant(name))
                }
            }
            _ => self.error("expected a term"),
        }
    }
}

/// Parse a term from its text syntax. The whole input must be consumed.
pub fn parse_term(text: &str) -> Result<Term, TermError> {
    let mut p = Parser::new(text);
    let t = p.term()?;
    p.skip_ws();
    if p.pos != p.input.len() {
        return p.error("trailing input after term");
    }
    Ok(t)
}

/// Parse a term starting at `pos`; returns the term and the byte offset just
/// past it. Used by the word and grammar parsers.
pub(crate) fn parse_term_prefix(text: &str, pos: usize) -> Result<(Term, usize), TermError> {
    let mut p = Parser::new(text);
    p.pos = pos;
    let t = p.term()?;
    Ok((t, p.pos))
}
