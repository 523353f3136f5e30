//! Grammar files: relator schemes, multi-relator schemes, the public-result
//! acceptor, morphism declarations, validation and instantiation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::analysis::MorphismSpec;
use crate::freegroup::{Atom, Generator, Sign, Word, WordError};
use crate::term::{
    parse_term_prefix, substitute, AbsArg, Substitution, Term, TermError,
};

/// One slot of a relator scheme: a phonological token or a term pattern.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemePattern {
    Phon(String),
    Pattern(Term),
}

impl SchemePattern {
    pub fn is_phon(&self) -> bool {
        matches!(self, SchemePattern::Phon(_))
    }
}

impl fmt::Display for SchemePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemePattern::Phon(tok) => write!(f, "\"{}\"", tok),
            SchemePattern::Pattern(t) => write!(f, "{}", t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SchemeAtom {
    pub pattern: SchemePattern,
    pub sign: Sign,
}

impl fmt::Display for SchemeAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            Sign::Pos => write!(f, "{}", self.pattern),
            Sign::Neg => write!(f, "{}^-1", self.pattern),
        }
    }
}

/// One part of a (multi-)relator scheme: a symbolic word over patterns,
/// cyclically reduced under the convention that distinct pattern slots never
/// cancel.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelatorScheme {
    pub atoms: Vec<SchemeAtom>,
}

impl RelatorScheme {
    pub fn inverse(&self) -> RelatorScheme {
        RelatorScheme {
            atoms: self
                .atoms
                .iter()
                .rev()
                .map(|a| SchemeAtom {
                    pattern: a.pattern.clone(),
                    sign: a.sign.flip(),
                })
                .collect(),
        }
    }

    /// Meta-variables occurring in this part (plain occurrences and the
    /// names inside abstraction applications), first occurrence order.
    pub fn meta_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut push = |name: &str| {
            if !out.iter().any(|n| n == name) {
                out.push(name.to_string());
            }
        };
        for atom in &self.atoms {
            if let SchemePattern::Pattern(t) = &atom.pattern {
                collect_scheme_vars(t, &mut push);
            }
        }
        out
    }
}

fn collect_scheme_vars(t: &Term, push: &mut impl FnMut(&str)) {
    match t {
        Term::MetaVar(n) => push(n),
        Term::AbsApp(p, arg) => {
            push(p);
            if let AbsArg::Meta(x) = arg {
                push(x);
            }
        }
        Term::Compound(_, args) => {
            for a in args {
                collect_scheme_vars(a, push);
            }
        }
        _ => {}
    }
}

impl fmt::Display for RelatorScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", a)?;
        }
        Ok(())
    }
}

/// A multiset of relator scheme parts sharing one meta-variable scope.
/// A singleton multi-relator is semantically a plain relator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiRelatorScheme {
    pub parts: Vec<RelatorScheme>,
}

impl MultiRelatorScheme {
    pub fn is_singleton(&self) -> bool {
        self.parts.len() == 1
    }

    /// Names of meta-variables that range over identifiers: those appearing
    /// as the argument of an abstraction application somewhere in the scheme.
    pub fn identifier_meta_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for part in &self.parts {
            for atom in &part.atoms {
                if let SchemePattern::Pattern(t) = &atom.pattern {
                    collect_abs_arg_vars(t, &mut out);
                }
            }
        }
        out
    }
}

fn collect_abs_arg_vars(t: &Term, out: &mut BTreeSet<String>) {
    match t {
        Term::AbsApp(_, AbsArg::Meta(x)) => {
            out.insert(x.clone());
        }
        Term::Compound(_, args) => {
            for a in args {
                collect_abs_arg_vars(a, out);
            }
        }
        _ => {}
    }
}

impl fmt::Display for MultiRelatorScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, " ; ")?;
            }
            write!(f, "{}", p)?;
        }
        Ok(())
    }
}

/// The fixed public-result shape: one ground logical atom `S` followed by
/// inverse phonological atoms `S Wn^-1 ... W1^-1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AcceptorPattern {
    _public: (),
}

/// Binding positions derived from the lexicon: a functor whose scheme pairs an
/// identifier meta-variable argument with an abstraction application binds
/// that identifier inside the abstraction's argument position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct BinderSpec {
    pub functor: String,
    pub arity: usize,
    pub bind_arg: usize,
    pub body_arg: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GrammarOptions {
    pub symmetrized: bool,
}

/// A validated grammar: phonological vocabulary, schemes, acceptor and
/// declared morphisms. Immutable after parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct Grammar {
    pub phon_vocab: Vec<String>,
    pub schemes: Vec<MultiRelatorScheme>,
    pub acceptor: AcceptorPattern,
    pub options: GrammarOptions,
    pub morphisms: BTreeMap<String, MorphismSpec>,
    binders: Vec<BinderSpec>,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GrammarError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: phonological token \"{token}\" is not declared")]
    UndeclaredToken { line: usize, token: String },
    #[error("line {line}: scheme part is not cyclically reduced: {part}")]
    NotCyclicallyReduced { line: usize, part: String },
    #[error(
        "line {line}: abstraction variable {var} does not occur as a plain \
         meta-variable in its multi-relator"
    )]
    UnsharedAbsVar { line: usize, var: String },
    #[error("instantiation error: {0}")]
    Instantiation(#[from] TermError),
    #[error("instantiated part is not reduced (degenerate binding): {0}")]
    DegenerateInstance(String),
    #[error(transparent)]
    Word(#[from] WordError),
}

impl Grammar {
    pub fn binders(&self) -> &[BinderSpec] {
        &self.binders
    }

    pub fn declares_token(&self, token: &str) -> bool {
        self.phon_vocab.iter().any(|t| t == token)
    }

    /// Identifiers of `term` that are not bound by any binder functor.
    pub fn free_identifiers(&self, term: &Term) -> Vec<String> {
        let mut free = Vec::new();
        self.collect_free(term, &mut Vec::new(), &mut free);
        free
    }

    fn collect_free(&self, term: &Term, bound: &mut Vec<String>, free: &mut Vec<String>) {
        match term {
            Term::Identifier(name) => {
                if !bound.iter().any(|b| b == name) && !free.iter().any(|f| f == name) {
                    free.push(name.clone());
                }
            }
            Term::Compound(f, args) => {
                let binder = self
                    .binders
                    .iter()
                    .find(|b| b.functor == *f && b.arity == args.len());
                match binder {
                    Some(spec) => {
                        let bound_name = match &args[spec.bind_arg] {
                            Term::Identifier(n) => Some(n.clone()),
                            _ => None,
                        };
                        for (i, a) in args.iter().enumerate() {
                            if i == spec.bind_arg && bound_name.is_some() {
                                continue;
                            }
                            if i == spec.body_arg {
                                if let Some(n) = &bound_name {
                                    bound.push(n.clone());
                                    self.collect_free(a, bound, free);
                                    bound.pop();
                                    continue;
                                }
                            }
                            self.collect_free(a, bound, free);
                        }
                    }
                    None => {
                        for a in args {
                            self.collect_free(a, bound, free);
                        }
                    }
                }
            }
            _ => {}
        }
    }

    /// Decompose a reduced word against the public acceptor: `S Wn^-1..W1^-1`
    /// with `S` ground and free of unbound identifiers. Words are returned in
    /// surface order.
    pub fn accepts(&self, word: &Word) -> Option<(Term, Vec<String>)> {
        let atoms = word.atoms();
        let first = atoms.first()?;
        let sem = match (&first.generator, first.sign) {
            (Generator::Log(term), Sign::Pos) => term.clone(),
            _ => return None,
        };
        if !sem.is_ground() || !self.free_identifiers(&sem).is_empty() {
            return None;
        }
        let mut words = Vec::new();
        for atom in &atoms[1..] {
            match (&atom.generator, atom.sign) {
                (Generator::Phon(tok), Sign::Neg) => words.push(tok.clone()),
                _ => return None,
            }
        }
        words.reverse();
        Some((sem, words))
    }
}

/// Instantiate every part of a scheme under one substitution. Each resulting
/// word must come out reduced and cyclically reduced; a binding that makes
/// adjacent slots cancel is rejected as degenerate.
pub fn instantiate(
    scheme: &MultiRelatorScheme,
    sub: &Substitution,
) -> Result<Vec<Word>, GrammarError> {
    let mut out = Vec::with_capacity(scheme.parts.len());
    for part in &scheme.parts {
        out.push(instantiate_part(part, sub)?);
    }
    Ok(out)
}

pub fn instantiate_part(
    part: &RelatorScheme,
    sub: &Substitution,
) -> Result<Word, GrammarError> {
    let mut atoms = Vec::with_capacity(part.atoms.len());
    for satom in &part.atoms {
        let generator = match &satom.pattern {
            SchemePattern::Phon(tok) => Generator::Phon(tok.clone()),
            SchemePattern::Pattern(t) => {
                let ground = substitute(t, sub)?;
                Generator::log(ground)?
            }
        };
        atoms.push(Atom {
            generator,
            sign: satom.sign,
        });
    }
    let reduced = Word::reduce(atoms.clone());
    if reduced.len() != atoms.len() || !reduced.is_cyclically_reduced() {
        return Err(GrammarError::DegenerateInstance(
            Word::reduce(atoms).to_string(),
        ));
    }
    Ok(reduced)
}

/// Match one scheme pattern against a ground generator under partial
/// substitutions, returning all consistent extensions.
pub fn match_scheme_pattern(
    pattern: &SchemePattern,
    generator: &Generator,
    ident_vars: &BTreeSet<String>,
    seed: &Substitution,
) -> Vec<Substitution> {
    match (pattern, generator) {
        (SchemePattern::Phon(tok), Generator::Phon(g)) => {
            if tok == g {
                vec![seed.clone()]
            } else {
                Vec::new()
            }
        }
        (SchemePattern::Pattern(p), Generator::Log(t)) => {
            crate::term::match_pattern(p, t, ident_vars, seed)
        }
        _ => Vec::new(),
    }
}

/// Match a whole scheme part elementwise against a ground atom sequence
/// (signs included), threading substitutions through the slots.
pub fn match_part_atoms(
    part: &RelatorScheme,
    ident_vars: &BTreeSet<String>,
    atoms: &[Atom],
    seed: &Substitution,
) -> Vec<Substitution> {
    if part.atoms.len() != atoms.len() {
        return Vec::new();
    }
    let mut states = vec![seed.clone()];
    for (satom, atom) in part.atoms.iter().zip(atoms) {
        if satom.sign != atom.sign {
            return Vec::new();
        }
        let mut next = Vec::new();
        for state in &states {
            next.extend(match_scheme_pattern(
                &satom.pattern,
                &atom.generator,
                ident_vars,
                state,
            ));
        }
        if next.is_empty() {
            return Vec::new();
        }
        states = next;
    }
    states
}

/// Cyclic reducedness at scheme level: adjacent slots (including the
/// wrap-around pair) cancel only if they are syntactically identical patterns
/// with opposite signs.
fn scheme_part_cyclically_reduced(part: &RelatorScheme) -> bool {
    let n = part.atoms.len();
    if n < 2 {
        return true;
    }
    for i in 0..n {
        let a = &part.atoms[i];
        let b = &part.atoms[(i + 1) % n];
        if i + 1 == n && n == 2 {
            // For length 2 the adjacent pair and the wrap-around pair
            // coincide; it was already checked.
            break;
        }
        if a.pattern == b.pattern && a.sign != b.sign {
            return false;
        }
    }
    true
}

fn derive_binders(schemes: &[MultiRelatorScheme]) -> Vec<BinderSpec> {
    let mut out: Vec<BinderSpec> = Vec::new();
    for scheme in schemes {
        let ident_vars = scheme.identifier_meta_vars();
        for part in &scheme.parts {
            for atom in &part.atoms {
                let SchemePattern::Pattern(Term::Compound(f, args)) = &atom.pattern else {
                    continue;
                };
                for (bind_arg, a) in args.iter().enumerate() {
                    let Term::MetaVar(x) = a else { continue };
                    if !ident_vars.contains(x) {
                        continue;
                    }
                    for (body_arg, b) in args.iter().enumerate() {
                        if matches!(b, Term::AbsApp(_, AbsArg::Meta(y)) if y == x) {
                            let spec = BinderSpec {
                                functor: f.clone(),
                                arity: args.len(),
                                bind_arg,
                                body_arg,
                            };
                            if !out.contains(&spec) {
                                out.push(spec);
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

fn parse_scheme_atom(text: &str, line: usize, pos: &mut usize) -> Result<SchemeAtom, GrammarError> {
    let bytes = text.as_bytes();
    let syntax = |pos: usize, msg: &str| GrammarError::Syntax {
        line,
        msg: format!("at byte {}: {}", pos, msg),
    };
    let pattern = if bytes[*pos] == b'"' {
        let start = *pos + 1;
        let mut end = start;
        while end < bytes.len() && bytes[end] != b'"' {
            end += 1;
        }
        if end >= bytes.len() {
            return Err(syntax(*pos, "unterminated quoted token"));
        }
        let token = text[start..end].to_string();
        if token.is_empty() || token.chars().any(|c| c.is_whitespace()) {
            return Err(syntax(*pos, "invalid phonological token"));
        }
        *pos = end + 1;
        SchemePattern::Phon(token)
    } else {
        let (term, next) = parse_term_prefix(text, *pos).map_err(|e| GrammarError::Syntax {
            line,
            msg: e.to_string(),
        })?;
        if term.contains_hole() {
            return Err(syntax(*pos, "hole is not allowed in schemes"));
        }
        *pos = next;
        SchemePattern::Pattern(term)
    };
    let sign = if text[*pos..].starts_with("^-1") {
        *pos += 3;
        Sign::Neg
    } else {
        Sign::Pos
    };
    Ok(SchemeAtom { pattern, sign })
}

fn parse_scheme_part(text: &str, line: usize) -> Result<RelatorScheme, GrammarError> {
    let mut atoms = Vec::new();
    let mut pos = 0;
    let bytes = text.as_bytes();
    loop {
        while pos < bytes.len() && (bytes[pos] as char).is_whitespace() {
            pos += 1;
        }
        if pos >= bytes.len() {
            break;
        }
        atoms.push(parse_scheme_atom(text, line, &mut pos)?);
    }
    if atoms.is_empty() {
        return Err(GrammarError::Syntax {
            line,
            msg: "empty relator part".into(),
        });
    }
    Ok(RelatorScheme { atoms })
}

/// Parse and validate a grammar file. Line oriented; `#` starts a comment.
///
/// Directives: `phon:` (repeatable token declarations), `relator:` (singleton
/// scheme), `multi:` (parts separated by `;`), `accept: public`, and
/// `morphism: <name> <key>=<ints>...`.
pub fn parse_grammar(text: &str) -> Result<Grammar, GrammarError> {
    let mut phon_vocab: Vec<String> = Vec::new();
    let mut schemes: Vec<MultiRelatorScheme> = Vec::new();
    let mut morphisms = BTreeMap::new();
    let mut scheme_lines: Vec<usize> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(i) => &raw_line[..i],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (directive, rest) = line.split_once(':').ok_or_else(|| GrammarError::Syntax {
            line: line_no,
            msg: "expected '<directive>: ...'".into(),
        })?;
        let rest = rest.trim();
        match directive.trim() {
            "phon" => {
                for tok in rest.split_whitespace() {
                    if !phon_vocab.iter().any(|t| t == tok) {
                        phon_vocab.push(tok.to_string());
                    }
                }
            }
            "relator" => {
                schemes.push(MultiRelatorScheme {
                    parts: vec![parse_scheme_part(rest, line_no)?],
                });
                scheme_lines.push(line_no);
            }
            "multi" => {
                let parts = rest
                    .split(';')
                    .map(|p| parse_scheme_part(p, line_no))
                    .collect::<Result<Vec<_>, _>>()?;
                schemes.push(MultiRelatorScheme { parts });
                scheme_lines.push(line_no);
            }
            "accept" => {
                if rest != "public" {
                    return Err(GrammarError::Syntax {
                        line: line_no,
                        msg: format!("unknown acceptor {:?} (only \"public\")", rest),
                    });
                }
            }
            "morphism" => {
                let (name, spec) =
                    MorphismSpec::parse_declaration(rest).map_err(|msg| GrammarError::Syntax {
                        line: line_no,
                        msg,
                    })?;
                morphisms.insert(name, spec);
            }
            other => {
                return Err(GrammarError::Syntax {
                    line: line_no,
                    msg: format!("unknown directive {:?}", other),
                });
            }
        }
    }

    for (scheme, &line) in schemes.iter().zip(&scheme_lines) {
        let ident_vars = scheme.identifier_meta_vars();
        let plain_vars: BTreeSet<String> = scheme
            .parts
            .iter()
            .flat_map(|p| {
                p.atoms.iter().filter_map(|a| match &a.pattern {
                    SchemePattern::Pattern(t) => Some(t.meta_vars()),
                    SchemePattern::Phon(_) => None,
                })
            })
            .flatten()
            .collect();
        for var in &ident_vars {
            if !plain_vars.contains(var) {
                return Err(GrammarError::UnsharedAbsVar {
                    line,
                    var: var.clone(),
                });
            }
        }
        for part in &scheme.parts {
            if !scheme_part_cyclically_reduced(part) {
                return Err(GrammarError::NotCyclicallyReduced {
                    line,
                    part: part.to_string(),
                });
            }
            for atom in &part.atoms {
                if let SchemePattern::Phon(tok) = &atom.pattern {
                    if !phon_vocab.iter().any(|t| t == tok) {
                        return Err(GrammarError::UndeclaredToken {
                            line,
                            token: tok.clone(),
                        });
                    }
                }
            }
        }
    }

    let binders = derive_binders(&schemes);
    Ok(Grammar {
        phon_vocab,
        schemes,
        acceptor: AcceptorPattern::default(),
        options: GrammarOptions::default(),
        morphisms,
        binders,
    })
}

/// Render a grammar back to the file format. `parse_grammar` of the output
/// reproduces the grammar.
pub fn print_grammar(g: &Grammar) -> String {
    let mut out = String::new();
    if !g.phon_vocab.is_empty() {
        out.push_str("phon:");
        for tok in &g.phon_vocab {
            out.push(' ');
            out.push_str(tok);
        }
        out.push('\n');
    }
    for scheme in &g.schemes {
        if scheme.is_singleton() {
            out.push_str(&format!("relator: {}\n", scheme.parts[0]));
        } else {
            out.push_str(&format!("multi: {}\n", scheme));
        }
    }
    for (name, spec) in &g.morphisms {
        out.push_str(&format!("morphism: {} {}\n", name, spec.declaration_body()));
    }
    out.push_str("accept: public\n");
    out
}
