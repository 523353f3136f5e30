//! Morphisms from the free group into commutative groups, balance
//! certificates for termination bounds, and the precedence-order comparison
//! with rewriting systems.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::diagram::Diagram;
use crate::freegroup::{Generator, Sign, Word};
use crate::lexicon::{Grammar, MultiRelatorScheme, RelatorScheme, SchemePattern};
use crate::term::{AbsArg, Term};

/// An integer vector in the commutative target group.
pub type Vector = Vec<i64>;

fn vec_add(a: &mut Vector, b: &Vector) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

fn vec_scaled_add(a: &mut Vector, b: &Vector, factor: i64) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += factor * y;
    }
}

fn vec_is_zero(a: &Vector) -> bool {
    a.iter().all(|x| *x == 0)
}

/// A morphism from the free group to `Z^k`, given by a valuation of
/// generators: one vector per phonological token (with a default) and one per
/// logical term-node class (functor or constant name, with a default).
/// Argument identifiers always count 0.
///
/// The valuation extends to words by signed summation, which makes it
/// invariant under conjugation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MorphismSpec {
    pub dimension: usize,
    pub phon_default: Vector,
    pub phon_overrides: BTreeMap<String, Vector>,
    pub node_default: Vector,
    pub node_overrides: BTreeMap<String, Vector>,
}

impl MorphismSpec {
    /// The built-in morphism `h = (semantic size, phonological size)`.
    pub fn preset_h() -> MorphismSpec {
        MorphismSpec {
            dimension: 2,
            phon_default: vec![0, 1],
            phon_overrides: BTreeMap::new(),
            node_default: vec![1, 0],
            node_overrides: BTreeMap::new(),
        }
    }

    /// Look up a named morphism: a grammar declaration first, then presets.
    pub fn resolve(grammar: &Grammar, name: &str) -> Option<MorphismSpec> {
        if let Some(spec) = grammar.morphisms.get(name) {
            return Some(spec.clone());
        }
        (name == "h").then(MorphismSpec::preset_h)
    }

    pub fn value_of_phon(&self, token: &str) -> Vector {
        self.phon_overrides
            .get(token)
            .cloned()
            .unwrap_or_else(|| self.phon_default.clone())
    }

    fn value_of_node(&self, name: &str) -> Vector {
        self.node_overrides
            .get(name)
            .cloned()
            .unwrap_or_else(|| self.node_default.clone())
    }

    /// Value of a ground term: sum over non-identifier nodes.
    pub fn value_of_term(&self, term: &Term) -> Vector {
        let mut acc = vec![0; self.dimension];
        self.add_term(term, &mut acc);
        acc
    }

    fn add_term(&self, term: &Term, acc: &mut Vector) {
        match term {
            Term::Constant(name) => vec_add(acc, &self.value_of_node(name)),
            Term::Compound(f, args) => {
                vec_add(acc, &self.value_of_node(f));
                for a in args {
                    self.add_term(a, acc);
                }
            }
            // Identifiers are valued 0; meta-variables and abstraction
            // applications never occur in ground terms.
            Term::Identifier(_) | Term::Hole | Term::MetaVar(_) | Term::AbsApp(..) => {}
        }
    }

    pub fn value_of_generator(&self, generator: &Generator) -> Vector {
        match generator {
            Generator::Phon(tok) => self.value_of_phon(tok),
            Generator::Log(term) => self.value_of_term(term),
        }
    }

    /// Parse the body of a `morphism:` declaration:
    /// `<name> phon=<ints> node=<ints> [tok:<t>=<ints>] [fn:<f>=<ints>]`,
    /// where `<ints>` is a comma-separated integer vector.
    pub fn parse_declaration(text: &str) -> Result<(String, MorphismSpec), String> {
        let mut fields = text.split_whitespace();
        let name = fields.next().ok_or("missing morphism name")?.to_string();
        let mut dimension = None;
        let mut phon_default = None;
        let mut node_default = None;
        let mut phon_overrides = BTreeMap::new();
        let mut node_overrides = BTreeMap::new();
        for field in fields {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| format!("expected key=ints in {:?}", field))?;
            let vector = value
                .split(',')
                .map(|s| s.parse::<i64>().map_err(|e| e.to_string()))
                .collect::<Result<Vector, _>>()?;
            match dimension {
                None => dimension = Some(vector.len()),
                Some(d) if d != vector.len() => {
                    return Err(format!("inconsistent dimension in {:?}", field));
                }
                _ => {}
            }
            if key == "phon" {
                phon_default = Some(vector);
            } else if key == "node" {
                node_default = Some(vector);
            } else if let Some(tok) = key.strip_prefix("tok:") {
                phon_overrides.insert(tok.to_string(), vector);
            } else if let Some(f) = key.strip_prefix("fn:") {
                node_overrides.insert(f.to_string(), vector);
            } else {
                return Err(format!("unknown morphism key {:?}", key));
            }
        }
        let dimension = dimension.ok_or("morphism declaration has no valuations")?;
        Ok((
            name,
            MorphismSpec {
                dimension,
                phon_default: phon_default.unwrap_or_else(|| vec![0; dimension]),
                phon_overrides,
                node_default: node_default.unwrap_or_else(|| vec![0; dimension]),
                node_overrides,
            },
        ))
    }

    pub fn declaration_body(&self) -> String {
        let ints = |v: &Vector| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut out = format!(
            "phon={} node={}",
            ints(&self.phon_default),
            ints(&self.node_default)
        );
        for (tok, v) in &self.phon_overrides {
            out.push_str(&format!(" tok:{}={}", tok, ints(v)));
        }
        for (f, v) in &self.node_overrides {
            out.push_str(&format!(" fn:{}={}", f, ints(v)));
        }
        out
    }
}

/// Number of term nodes that are not argument identifiers.
pub fn semantic_size(term: &Term) -> usize {
    term.size_excluding_identifiers()
}

/// Signed sum of the valuation over a word.
pub fn evaluate_morphism(spec: &MorphismSpec, word: &Word) -> Vector {
    let mut acc = vec![0; spec.dimension];
    for atom in word.atoms() {
        let v = spec.value_of_generator(&atom.generator);
        let factor = match atom.sign {
            Sign::Pos => 1,
            Sign::Neg => -1,
        };
        vec_scaled_add(&mut acc, &v, factor);
    }
    acc
}

/// Per-scheme outcome of the balance check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum SchemeBalance {
    /// The morphism value is the same for every grounded instance.
    Balanced(Vector),
    /// The value depends on the instantiation of these meta-variables.
    Dependent(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BalanceReport {
    pub per_scheme: Vec<SchemeBalance>,
    /// Common value when every scheme is balanced to the same vector.
    pub uniform: Option<Vector>,
}

impl BalanceReport {
    /// A nonzero uniform value certifies a step bound.
    pub fn certificate(&self) -> Option<&Vector> {
        self.uniform.as_ref().filter(|v| !vec_is_zero(v))
    }
}

/// Evaluate the morphism symbolically on every scheme: the value of a scheme
/// is a constant vector plus integer coefficients on per-meta-variable
/// indeterminates, and is instance-independent exactly when every
/// indeterminate cancels between positive and negative occurrences.
/// Identifier meta-variables contribute nothing; an abstraction application
/// `P[X]` is one indeterminate keyed by its own text.
pub fn check_balance(grammar: &Grammar, spec: &MorphismSpec) -> BalanceReport {
    let mut per_scheme = Vec::with_capacity(grammar.schemes.len());
    for scheme in &grammar.schemes {
        let (constant, coefficients) = scheme_form(spec, scheme);
        if coefficients.is_empty() {
            per_scheme.push(SchemeBalance::Balanced(constant));
        } else {
            per_scheme.push(SchemeBalance::Dependent(
                coefficients.into_keys().collect(),
            ));
        }
    }
    let mut uniform = None;
    let mut ok = true;
    for balance in &per_scheme {
        match balance {
            SchemeBalance::Balanced(v) => match &uniform {
                None => uniform = Some(v.clone()),
                Some(u) if u == v => {}
                Some(_) => {
                    ok = false;
                    break;
                }
            },
            SchemeBalance::Dependent(_) => {
                ok = false;
                break;
            }
        }
    }
    BalanceReport {
        per_scheme,
        uniform: if ok { uniform } else { None },
    }
}

fn scheme_form(
    spec: &MorphismSpec,
    scheme: &MultiRelatorScheme,
) -> (Vector, BTreeMap<String, i64>) {
    let mut constant = vec![0; spec.dimension];
    let mut coefficients: BTreeMap<String, i64> = BTreeMap::new();
    let ident_vars = scheme.identifier_meta_vars();
    for part in &scheme.parts {
        for atom in &part.atoms {
            let factor = match atom.sign {
                Sign::Pos => 1,
                Sign::Neg => -1,
            };
            match &atom.pattern {
                SchemePattern::Phon(tok) => {
                    vec_scaled_add(&mut constant, &spec.value_of_phon(tok), factor);
                }
                SchemePattern::Pattern(t) => {
                    add_pattern_form(spec, t, factor, &ident_vars, &mut constant, &mut coefficients);
                }
            }
        }
    }
    coefficients.retain(|_, c| *c != 0);
    (constant, coefficients)
}

fn add_pattern_form(
    spec: &MorphismSpec,
    t: &Term,
    factor: i64,
    ident_vars: &BTreeSet<String>,
    constant: &mut Vector,
    coefficients: &mut BTreeMap<String, i64>,
) {
    match t {
        Term::Constant(name) => {
            vec_scaled_add(constant, &spec.value_of_node(name), factor);
        }
        Term::Compound(f, args) => {
            vec_scaled_add(constant, &spec.value_of_node(f), factor);
            for a in args {
                add_pattern_form(spec, a, factor, ident_vars, constant, coefficients);
            }
        }
        Term::Identifier(_) | Term::Hole => {}
        Term::MetaVar(name) => {
            // Identifier meta-variables instantiate to identifiers, valued 0.
            if !ident_vars.contains(name) {
                *coefficients.entry(name.clone()).or_insert(0) += factor;
            }
        }
        Term::AbsApp(p, arg) => {
            let key = match arg {
                AbsArg::Meta(x) => format!("{}[{}]", p, x),
                AbsArg::Ident(x) => format!("{}[${}]", p, x),
            };
            *coefficients.entry(key).or_insert(0) += factor;
        }
    }
}

/// With a uniform nonzero scheme value `v`, a word `w` can only be the result
/// of a computation with exactly `n` multi-relator groups where `n·v = h(w)`.
/// Returns that `n`, or `None` when no such `n ≥ 0` exists (in which case `w`
/// is provably not a result).
pub fn step_bound(grammar: &Grammar, spec: &MorphismSpec, target: &Word) -> Option<usize> {
    let report = check_balance(grammar, spec);
    let v = report.certificate()?.clone();
    let t = evaluate_morphism(spec, target);
    solve_multiplier(&v, &t)
}

/// Solve `n·v = t` for a single `n ≥ 0`.
pub(crate) fn solve_multiplier(v: &Vector, t: &Vector) -> Option<usize> {
    let mut n: Option<i64> = None;
    for (vi, ti) in v.iter().zip(t) {
        if *vi == 0 {
            if *ti != 0 {
                return None;
            }
            continue;
        }
        if ti % vi != 0 {
            return None;
        }
        let k = ti / vi;
        match n {
            None => n = Some(k),
            Some(prev) if prev != k => return None,
            _ => {}
        }
    }
    let n = n.unwrap_or(0);
    (n >= 0).then_some(n as usize)
}

/// Atomic label class for the static precedence relation: phonological tokens
/// and term functors. Atoms headed by a bare meta-variable can instantiate to
/// any term and are treated as overlapping every term class.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum LabelClass {
    Phon(String),
    Functor(String),
    AnyTerm,
}

impl fmt::Display for LabelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelClass::Phon(tok) => write!(f, "\"{}\"", tok),
            LabelClass::Functor(name) => write!(f, "{}", name),
            LabelClass::AnyTerm => write!(f, "<term>"),
        }
    }
}

fn classes_overlap(a: &LabelClass, b: &LabelClass) -> bool {
    match (a, b) {
        (LabelClass::Phon(x), LabelClass::Phon(y)) => x == y,
        (LabelClass::Phon(_), _) | (_, LabelClass::Phon(_)) => false,
        (LabelClass::AnyTerm, _) | (_, LabelClass::AnyTerm) => true,
        (LabelClass::Functor(x), LabelClass::Functor(y)) => x == y,
    }
}

fn pattern_class(p: &SchemePattern) -> LabelClass {
    match p {
        SchemePattern::Phon(tok) => LabelClass::Phon(tok.clone()),
        SchemePattern::Pattern(t) => term_class(t),
    }
}

fn term_class(t: &Term) -> LabelClass {
    match t {
        Term::Constant(name) | Term::Compound(name, _) => LabelClass::Functor(name.clone()),
        _ => LabelClass::AnyTerm,
    }
}

fn generator_class(g: &Generator) -> LabelClass {
    match g {
        Generator::Phon(tok) => LabelClass::Phon(tok.clone()),
        Generator::Log(t) => term_class(t),
    }
}

/// A cell for precedence purposes: a display name plus the label classes on
/// its boundary, split by orientation.
#[derive(Debug, Clone, Serialize)]
pub struct PrecedenceCell {
    pub name: String,
    pub negative: Vec<LabelClass>,
    pub positive: Vec<LabelClass>,
}

impl PrecedenceCell {
    pub fn of_part(name: impl Into<String>, part: &RelatorScheme) -> PrecedenceCell {
        let mut negative = Vec::new();
        let mut positive = Vec::new();
        for atom in &part.atoms {
            let class = pattern_class(&atom.pattern);
            match atom.sign {
                Sign::Neg => negative.push(class),
                Sign::Pos => positive.push(class),
            }
        }
        PrecedenceCell {
            name: name.into(),
            negative,
            positive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrecedenceEdge {
    pub before: usize,
    pub after: usize,
    pub label: LabelClass,
}

/// Result of the precedence check: either a topological order of the cells or
/// a cycle witness with the labels shared along it.
#[derive(Debug, Clone, Serialize)]
pub struct PrecedenceReport {
    pub acyclic: bool,
    pub cells: Vec<String>,
    pub edges: Vec<PrecedenceEdge>,
    pub order: Option<Vec<usize>>,
    pub cycle: Option<Vec<usize>>,
    pub cycle_labels: Vec<LabelClass>,
}

fn dfs_visit(
    v: usize,
    adjacency: &[Vec<usize>],
    state: &mut [u8],
    order: &mut Vec<usize>,
    path: &mut Vec<usize>,
    cycle: &mut Option<Vec<usize>>,
) {
    if cycle.is_some() {
        return;
    }
    state[v] = 1;
    path.push(v);
    for &w in &adjacency[v] {
        match state[w] {
            0 => dfs_visit(w, adjacency, state, order, path, cycle),
            1 => {
                if cycle.is_none() {
                    let start = path.iter().position(|&x| x == w).unwrap();
                    *cycle = Some(path[start..].to_vec());
                }
            }
            _ => {}
        }
        if cycle.is_some() {
            break;
        }
    }
    path.pop();
    state[v] = 2;
    order.push(v);
}

fn report_from_edges(names: Vec<String>, edges: Vec<PrecedenceEdge>) -> PrecedenceReport {
    let n = names.len();
    let mut adjacency = vec![Vec::new(); n];
    let mut self_cycle = None;
    for e in &edges {
        if e.before == e.after {
            self_cycle.get_or_insert(e.before);
        } else {
            adjacency[e.before].push(e.after);
        }
    }
    let mut state = vec![0u8; n];
    let mut order = Vec::new();
    let mut cycle: Option<Vec<usize>> = None;
    let mut path = Vec::new();
    for v in 0..n {
        if state[v] == 0 {
            dfs_visit(v, &adjacency, &mut state, &mut order, &mut path, &mut cycle);
        }
    }
    if cycle.is_none() {
        cycle = self_cycle.map(|v| vec![v]);
    }
    let acyclic = cycle.is_none();
    order.reverse();
    let cycle_labels = match &cycle {
        None => Vec::new(),
        Some(cyc) => {
            let mut labels = Vec::new();
            for k in 0..cyc.len() {
                let i = cyc[k];
                let j = cyc[(k + 1) % cyc.len()];
                for e in &edges {
                    if e.before == i && e.after == j && !labels.contains(&e.label) {
                        labels.push(e.label.clone());
                    }
                }
            }
            labels
        }
    };
    PrecedenceReport {
        acyclic,
        cells: names,
        edges,
        order: if acyclic { Some(order) } else { None },
        cycle,
        cycle_labels,
    }
}

/// Precedence over an explicit list of cells, label-class based: cell `c`
/// precedes `c'` when `c` carries a label negatively that `c'` carries
/// positively.
pub fn precedence_of_cells(cells: Vec<PrecedenceCell>) -> PrecedenceReport {
    let mut edges = Vec::new();
    for (i, c1) in cells.iter().enumerate() {
        for (j, c2) in cells.iter().enumerate() {
            for neg in &c1.negative {
                for pos in &c2.positive {
                    if classes_overlap(neg, pos) {
                        let e = PrecedenceEdge {
                            before: i,
                            after: j,
                            label: neg.clone(),
                        };
                        if !edges.contains(&e) {
                            edges.push(e);
                        }
                    }
                }
            }
        }
    }
    report_from_edges(cells.into_iter().map(|c| c.name).collect(), edges)
}

/// Static precedence over the grammar's scheme parts.
pub fn precedence_static(grammar: &Grammar) -> PrecedenceReport {
    let mut cells = Vec::new();
    for (si, scheme) in grammar.schemes.iter().enumerate() {
        for (pi, part) in scheme.parts.iter().enumerate() {
            cells.push(PrecedenceCell::of_part(
                format!("scheme {} part {}: {}", si, pi, part),
                part,
            ));
        }
    }
    precedence_of_cells(cells)
}

/// Precedence over the interior cells of a concrete diagram: cell `c`
/// precedes `c'` when they share an edge that is negatively oriented in `c`
/// and positively oriented in `c'`.
pub fn precedence_diagram(diagram: &Diagram) -> PrecedenceReport {
    let faces = diagram.interior_faces();
    let mut edges = Vec::new();
    for (i, f) in faces.iter().enumerate() {
        for (j, g) in faces.iter().enumerate() {
            if i == j {
                continue;
            }
            for df in diagram.face_darts(f) {
                for dg in diagram.face_darts(g) {
                    if df.edge == dg.edge && !df.forward && dg.forward {
                        let e = PrecedenceEdge {
                            before: i,
                            after: j,
                            label: generator_class(diagram.edge_label(df.edge)),
                        };
                        if !edges.contains(&e) {
                            edges.push(e);
                        }
                    }
                }
            }
        }
    }
    let names = faces
        .iter()
        .map(|f| format!("cell {}", diagram.face_boundary_word(f)))
        .collect();
    report_from_edges(names, edges)
}
