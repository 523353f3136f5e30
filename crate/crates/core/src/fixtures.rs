//! Shared test fixtures: the worked computations used across module tests.

use crate::computation::{Computation, ComputationGroup, QuasiRelator};
use crate::freegroup::{parse_word, Word};
use crate::lexicon::{instantiate, parse_grammar, Grammar};
use crate::term::{parse_term, Substitution};

pub const G_GRAMMAR: &str = include_str!("../../../grammars/g-grammar.gcs");
pub const G_GRAMMAR_PRIME: &str = include_str!("../../../grammars/g-grammar-prime.gcs");
pub const ABC: &str = include_str!("../../../grammars/abc.gcs");
pub const CFG_CHART: &str = include_str!("../../../grammars/cfg-chart.gcs");
pub const PREORDER: &str = include_str!("../../../grammars/preorder.gcs");

pub fn w(text: &str) -> Word {
    parse_word(text).unwrap()
}

pub fn g_grammar() -> Grammar {
    parse_grammar(G_GRAMMAR).unwrap()
}

pub fn g_grammar_prime() -> Grammar {
    parse_grammar(G_GRAMMAR_PRIME).unwrap()
}

pub fn abc_grammar() -> Grammar {
    parse_grammar(ABC).unwrap()
}

pub fn ground_sub(pairs: &[(&str, &str)]) -> Substitution {
    let mut s = Substitution::new();
    for (k, v) in pairs {
        assert!(s.bind_var(k, &parse_term(v).unwrap()));
    }
    s
}

fn singleton_step(
    grammar: &Grammar,
    scheme: usize,
    sub: Substitution,
    conjugator: Word,
) -> (QuasiRelator, ComputationGroup) {
    let instance = instantiate(&grammar.schemes[scheme], &sub).unwrap()[0].clone();
    (
        QuasiRelator {
            scheme,
            part: 0,
            instance,
            conjugator,
        },
        ComputationGroup {
            scheme,
            substitution: sub,
            steps: Vec::new(),
        },
    )
}

pub fn computation_of_singletons(
    grammar: &Grammar,
    steps: Vec<(usize, Substitution, Word)>,
) -> Computation {
    let mut c = Computation::empty();
    for (i, (scheme, sub, conj)) in steps.into_iter().enumerate() {
        let (step, mut group) = singleton_step(grammar, scheme, sub, conj);
        group.steps.push(i);
        c.steps.push(step);
        c.groups.push(group);
    }
    c
}

/// The worked five-step computation for "john saw louise in paris".
pub fn sentence_computation(grammar: &Grammar) -> Computation {
    computation_of_singletons(
        grammar,
        vec![
            (7, ground_sub(&[("E", "s(j,l)"), ("A", "p")]), w("1")),
            (6, ground_sub(&[("A", "j"), ("B", "l")]), w("1")),
            (0, ground_sub(&[]), w("1")),
            (1, ground_sub(&[]), w("\"john\" \"saw\"")),
            (2, ground_sub(&[]), w("\"john\" \"saw\" \"louise\" \"in\"")),
        ],
    )
}

/// The worked three-step computation for c^-1 a a c^-1.
pub fn abc_computation(grammar: &Grammar) -> Computation {
    computation_of_singletons(
        grammar,
        vec![
            (0, Substitution::new(), w("1")),
            (1, Substitution::new(), w("c")),
            (2, Substitution::new(), w("c")),
        ],
    )
}

pub fn abstraction_sub(pairs: &[(&str, &str)], abs: (&str, &str, &str)) -> Substitution {
    let mut s = ground_sub(pairs);
    let (name, body, var) = abs;
    assert!(s.bind_abstraction(
        name,
        crate::term::Abstraction::abstract_identifier(&parse_term(body).unwrap(), var),
    ));
    s
}

fn multi_step(
    grammar: &Grammar,
    scheme: usize,
    part: usize,
    sub: &Substitution,
    conjugator: Word,
) -> QuasiRelator {
    let instance = instantiate(&grammar.schemes[scheme], sub).unwrap()[part].clone();
    QuasiRelator {
        scheme,
        part,
        instance,
        conjugator,
    }
}

/// The seven-step computation for "the man that louise saw ran", in
/// leftmost top-down order with token-prefix conjugators.
pub fn rel_clause_computation(grammar: &Grammar) -> Computation {
    let tt_sub = abstraction_sub(&[("N", "m"), ("X", "$x")], ("P", "s(l,$x)", "x"));
    let steps = vec![
        multi_step(
            grammar,
            5,
            0,
            &ground_sub(&[("A", "t(tt(m,$x,s(l,$x)))")]),
            w("1"),
        ),
        multi_step(
            grammar,
            8,
            0,
            &ground_sub(&[("N", "tt(m,$x,s(l,$x))")]),
            w("1"),
        ),
        multi_step(grammar, 11, 0, &tt_sub, w("\"the\"")),
        multi_step(grammar, 3, 0, &ground_sub(&[]), w("\"the\"")),
        multi_step(
            grammar,
            6,
            0,
            &ground_sub(&[("A", "l"), ("B", "$x")]),
            w("\"the\" \"man\" \"that\""),
        ),
        multi_step(
            grammar,
            1,
            0,
            &ground_sub(&[]),
            w("\"the\" \"man\" \"that\""),
        ),
        multi_step(
            grammar,
            11,
            1,
            &tt_sub,
            w("\"the\" \"man\" \"that\" \"louise\" \"saw\""),
        ),
    ];
    let mk_group = |scheme: usize, sub: Substitution, steps: Vec<usize>| ComputationGroup {
        scheme,
        substitution: sub,
        steps,
    };
    Computation {
        steps,
        groups: vec![
            mk_group(5, ground_sub(&[("A", "t(tt(m,$x,s(l,$x)))")]), vec![0]),
            mk_group(8, ground_sub(&[("N", "tt(m,$x,s(l,$x))")]), vec![1]),
            mk_group(11, tt_sub, vec![2, 6]),
            mk_group(3, ground_sub(&[]), vec![3]),
            mk_group(6, ground_sub(&[("A", "l"), ("B", "$x")]), vec![4]),
            mk_group(1, ground_sub(&[]), vec![5]),
        ],
    }
}

/// The seven-step computation for "every man saw some woman" with the
/// universal quantifier scoping widest.
pub fn scope_computation(grammar: &Grammar) -> Computation {
    let ev_sub = abstraction_sub(&[("N", "m"), ("X", "$x")], ("P", "sm(w,$y,s($x,$y))", "x"));
    let sm_sub = abstraction_sub(&[("N", "w"), ("X", "$y")], ("P", "s($x,$y)", "y"));
    let steps = vec![
        multi_step(grammar, 9, 0, &ev_sub, w("1")),
        multi_step(grammar, 10, 0, &sm_sub, w("1")),
        multi_step(
            grammar,
            6,
            0,
            &ground_sub(&[("A", "$x"), ("B", "$y")]),
            w("1"),
        ),
        multi_step(grammar, 9, 1, &ev_sub, w("1")),
        multi_step(grammar, 3, 0, &ground_sub(&[]), w("\"every\"")),
        multi_step(
            grammar,
            10,
            1,
            &sm_sub,
            w("\"every\" \"man\" \"saw\""),
        ),
        multi_step(
            grammar,
            4,
            0,
            &ground_sub(&[]),
            w("\"every\" \"man\" \"saw\" \"some\""),
        ),
    ];
    let mk_group = |scheme: usize, sub: Substitution, steps: Vec<usize>| ComputationGroup {
        scheme,
        substitution: sub,
        steps,
    };
    Computation {
        steps,
        groups: vec![
            mk_group(9, ev_sub, vec![0, 3]),
            mk_group(10, sm_sub, vec![1, 5]),
            mk_group(6, ground_sub(&[("A", "$x"), ("B", "$y")]), vec![2]),
            mk_group(3, ground_sub(&[]), vec![4]),
            mk_group(4, ground_sub(&[]), vec![6]),
        ],
    }
}
