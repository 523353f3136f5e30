//! Computations: ordered sequences of quasi-relators, grouped into
//! multi-relator instances, with their product and an independent verifier.

use std::collections::BTreeMap;
use std::fmt;

use crate::freegroup::Word;
use crate::lexicon::{instantiate, Grammar};
use crate::term::Substitution;

/// A conjugated instance of one part of a lexicon scheme. Its group value is
/// `conjugator · instance · conjugator^-1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuasiRelator {
    pub scheme: usize,
    pub part: usize,
    pub instance: Word,
    pub conjugator: Word,
}

impl QuasiRelator {
    pub fn value(&self) -> Word {
        self.instance.conjugate(&self.conjugator)
    }
}

impl fmt::Display for QuasiRelator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.conjugator.is_empty() {
            write!(f, "[{}]", self.instance)
        } else {
            write!(f, "({}) [{}]", self.conjugator, self.instance)
        }
    }
}

/// One multi-relator instance: the steps it contributed and the substitution
/// shared by all of its parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComputationGroup {
    pub scheme: usize,
    pub substitution: Substitution,
    pub steps: Vec<usize>,
}

/// An ordered list of quasi-relators whose product witnesses that a word is a
/// result. The steps are partitioned into groups; within each group every
/// part of the originating scheme occurs exactly once.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Computation {
    pub steps: Vec<QuasiRelator>,
    pub groups: Vec<ComputationGroup>,
}

impl Computation {
    pub fn empty() -> Computation {
        Computation::default()
    }

    /// Conjugate the whole computation: each step's conjugator is prefixed,
    /// so the product becomes `by · result · by^-1`.
    pub fn conjugate(&self, by: &Word) -> Computation {
        Computation {
            steps: self
                .steps
                .iter()
                .map(|s| QuasiRelator {
                    scheme: s.scheme,
                    part: s.part,
                    instance: s.instance.clone(),
                    conjugator: by.multiply(&s.conjugator),
                })
                .collect(),
            groups: self.groups.clone(),
        }
    }

    /// Rename argument identifiers consistently across instances,
    /// substitutions and conjugators.
    pub fn rename_identifiers(&self, map: &BTreeMap<String, String>) -> Computation {
        let rename_word = |w: &Word| -> Word {
            Word::reduce(w.atoms().iter().map(|a| {
                let generator = match &a.generator {
                    crate::freegroup::Generator::Log(t) => {
                        crate::freegroup::Generator::Log(t.rename_identifiers(map))
                    }
                    g => g.clone(),
                };
                crate::freegroup::Atom {
                    generator,
                    sign: a.sign,
                }
            }))
        };
        Computation {
            steps: self
                .steps
                .iter()
                .map(|s| QuasiRelator {
                    scheme: s.scheme,
                    part: s.part,
                    instance: rename_word(&s.instance),
                    conjugator: rename_word(&s.conjugator),
                })
                .collect(),
            groups: self
                .groups
                .iter()
                .map(|g| ComputationGroup {
                    scheme: g.scheme,
                    substitution: g.substitution.rename_identifiers(map),
                    steps: g.steps.clone(),
                })
                .collect(),
        }
    }
}

/// Freely reduced product of the step values, in order.
pub fn result_of(c: &Computation) -> Word {
    let mut acc = Word::identity();
    for step in &c.steps {
        acc = acc.multiply(&step.value());
    }
    acc
}

/// Why a verification failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerifyFailure {
    StepOutsideGroups(usize),
    StepInMultipleGroups(usize),
    UnknownScheme(usize),
    GroupIncomplete {
        group: usize,
        expected_parts: usize,
    },
    InstanceMismatch {
        step: usize,
        expected: String,
        found: String,
    },
    BadInstantiation {
        group: usize,
        error: String,
    },
    ProductMismatch {
        expected: String,
        found: String,
    },
}

impl fmt::Display for VerifyFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerifyFailure::StepOutsideGroups(i) => {
                write!(f, "step {} does not belong to any group", i)
            }
            VerifyFailure::StepInMultipleGroups(i) => {
                write!(f, "step {} belongs to more than one group", i)
            }
            VerifyFailure::UnknownScheme(s) => write!(f, "unknown scheme index {}", s),
            VerifyFailure::GroupIncomplete {
                group,
                expected_parts,
            } => write!(
                f,
                "group {} does not use each of the {} scheme parts exactly once",
                group, expected_parts
            ),
            VerifyFailure::InstanceMismatch {
                step,
                expected,
                found,
            } => write!(
                f,
                "step {}: instance {} differs from the instantiated part {}",
                step, found, expected
            ),
            VerifyFailure::BadInstantiation { group, error } => {
                write!(f, "group {}: {}", group, error)
            }
            VerifyFailure::ProductMismatch { expected, found } => {
                write!(f, "product {} differs from claimed result {}", found, expected)
            }
        }
    }
}

/// Check a computation against a grammar and a claimed result: the groups
/// must partition the steps, each group must use every part of its scheme
/// exactly once under one substitution, every instance must equal the
/// instantiated part, and the flattened product must equal the claim.
pub fn verify(grammar: &Grammar, c: &Computation, claimed: &Word) -> Result<(), VerifyFailure> {
    let mut owner = vec![None; c.steps.len()];
    for (gi, group) in c.groups.iter().enumerate() {
        for &si in &group.steps {
            if si >= c.steps.len() {
                return Err(VerifyFailure::StepOutsideGroups(si));
            }
            if owner[si].is_some() {
                return Err(VerifyFailure::StepInMultipleGroups(si));
            }
            owner[si] = Some(gi);
        }
    }
    if let Some(free) = owner.iter().position(Option::is_none) {
        return Err(VerifyFailure::StepOutsideGroups(free));
    }

    for (gi, group) in c.groups.iter().enumerate() {
        let scheme = grammar
            .schemes
            .get(group.scheme)
            .ok_or(VerifyFailure::UnknownScheme(group.scheme))?;
        let mut used_parts: Vec<usize> = group
            .steps
            .iter()
            .map(|&si| c.steps[si].part)
            .collect();
        used_parts.sort_unstable();
        let expected: Vec<usize> = (0..scheme.parts.len()).collect();
        if used_parts != expected
            || group.steps.iter().any(|&si| c.steps[si].scheme != group.scheme)
        {
            return Err(VerifyFailure::GroupIncomplete {
                group: gi,
                expected_parts: scheme.parts.len(),
            });
        }
        let parts = instantiate(scheme, &group.substitution).map_err(|e| {
            VerifyFailure::BadInstantiation {
                group: gi,
                error: e.to_string(),
            }
        })?;
        for &si in &group.steps {
            let step = &c.steps[si];
            let expected = &parts[step.part];
            if &step.instance != expected {
                return Err(VerifyFailure::InstanceMismatch {
                    step: si,
                    expected: expected.to_string(),
                    found: step.instance.to_string(),
                });
            }
        }
    }

    let product = result_of(c);
    if &product != claimed {
        return Err(VerifyFailure::ProductMismatch {
            expected: claimed.to_string(),
            found: product.to_string(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{
        abc_computation, sentence_computation, w, ABC, G_GRAMMAR,
    };
    use crate::lexicon::parse_grammar;
    use crate::term::parse_term;

    #[test]
    fn empty_computation_results_in_identity() {
        assert_eq!(result_of(&Computation::empty()), Word::identity());
    }

    #[test]
    fn worked_sentence_product() {
        let g = parse_grammar(G_GRAMMAR).unwrap();
        let c = sentence_computation(&g);
        assert_eq!(
            result_of(&c),
            w("i(s(j,l),p) \"paris\"^-1 \"in\"^-1 \"louise\"^-1 \"saw\"^-1 \"john\"^-1")
        );
    }

    #[test]
    fn worked_abc_product() {
        let g = parse_grammar(ABC).unwrap();
        let c = abc_computation(&g);
        assert_eq!(result_of(&c), w("c^-1 a a c^-1"));
    }

    #[test]
    fn verify_accepts_the_worked_computation() {
        let g = parse_grammar(G_GRAMMAR).unwrap();
        let c = sentence_computation(&g);
        let claimed = result_of(&c);
        assert_eq!(verify(&g, &c, &claimed), Ok(()));
    }

    #[test]
    fn verify_rejects_altered_conjugator() {
        let g = parse_grammar(G_GRAMMAR).unwrap();
        let mut c = sentence_computation(&g);
        let claimed = result_of(&c);
        c.steps[3].conjugator = Word::identity();
        assert!(matches!(
            verify(&g, &c, &claimed),
            Err(VerifyFailure::ProductMismatch { .. })
        ));
    }

    #[test]
    fn verify_rejects_incomplete_multi_relator_group() {
        let text = "phon: every\nmulti: ev(N,X,P[X]) P[X]^-1 ; X N^-1 \"every\"^-1\n";
        let g = parse_grammar(text).unwrap();
        let mut sub = Substitution::new();
        sub.bind_var("N", &parse_term("m").unwrap());
        sub.idents.insert("X".into(), "x".into());
        sub.abstractions.insert(
            "P".into(),
            crate::term::Abstraction::abstract_identifier(&parse_term("r($x)").unwrap(), "x"),
        );
        let parts = instantiate(&g.schemes[0], &sub).unwrap();
        // Only the second part is used.
        let c = Computation {
            steps: vec![QuasiRelator {
                scheme: 0,
                part: 1,
                instance: parts[1].clone(),
                conjugator: Word::identity(),
            }],
            groups: vec![ComputationGroup {
                scheme: 0,
                substitution: sub,
                steps: vec![0],
            }],
        };
        let claimed = result_of(&c);
        assert!(matches!(
            verify(&g, &c, &claimed),
            Err(VerifyFailure::GroupIncomplete { .. })
        ));
    }

    #[test]
    fn verify_rejects_ungrouped_step() {
        let g = parse_grammar(ABC).unwrap();
        let mut c = abc_computation(&g);
        c.groups.pop();
        let claimed = result_of(&c);
        assert!(matches!(
            verify(&g, &c, &claimed),
            Err(VerifyFailure::StepOutsideGroups(2))
        ));
    }

    #[test]
    fn conjugating_a_computation_conjugates_its_result() {
        let g = parse_grammar(ABC).unwrap();
        let c = abc_computation(&g);
        let by = w("b a");
        assert_eq!(result_of(&c.conjugate(&by)), result_of(&c).conjugate(&by));
    }
}
