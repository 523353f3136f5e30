//! The free group over a mixed vocabulary of phonological tokens and ground
//! logical terms: atoms, reduced words, products, inverses, conjugation and
//! cyclic reduction.

use std::fmt;

use thiserror::Error;

use crate::term::{parse_term_prefix, Term, TermError};

/// A vocabulary element: a phonological token or a ground logical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Generator {
    Phon(String),
    Log(Term),
}

impl Generator {
    pub fn phon(token: impl Into<String>) -> Result<Generator, WordError> {
        let token = token.into();
        if token.is_empty() || token.chars().any(|c| c.is_whitespace()) {
            return Err(WordError::BadToken(token));
        }
        Ok(Generator::Phon(token))
    }

    pub fn log(term: Term) -> Result<Generator, WordError> {
        if !term.is_ground() {
            return Err(WordError::NonGroundTerm(term.to_string()));
        }
        Ok(Generator::Log(term))
    }

    pub fn is_phon(&self) -> bool {
        matches!(self, Generator::Phon(_))
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Phon(tok) => write!(f, "\"{}\"", tok),
            Generator::Log(term) => write!(f, "{}", term),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Pos,
    Neg,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Pos => Sign::Neg,
            Sign::Neg => Sign::Pos,
        }
    }
}

/// A signed generator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub generator: Generator,
    pub sign: Sign,
}

impl Atom {
    pub fn pos(generator: Generator) -> Atom {
        Atom {
            generator,
            sign: Sign::Pos,
        }
    }

    pub fn neg(generator: Generator) -> Atom {
        Atom {
            generator,
            sign: Sign::Neg,
        }
    }

    pub fn inverse(&self) -> Atom {
        Atom {
            generator: self.generator.clone(),
            sign: self.sign.flip(),
        }
    }

    pub fn cancels(&self, other: &Atom) -> bool {
        self.generator == other.generator && self.sign != other.sign
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            Sign::Pos => write!(f, "{}", self.generator),
            Sign::Neg => write!(f, "{}^-1", self.generator),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum WordError {
    #[error("invalid phonological token {0:?}")]
    BadToken(String),
    #[error("logical generator must be ground: {0}")]
    NonGroundTerm(String),
    #[error("word is not cyclically reduced")]
    NotCyclicallyReduced,
    #[error("word syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error(transparent)]
    Term(#[from] TermError),
}

/// A reduced word: an element of the free group over the vocabulary.
/// The empty word denotes the group identity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    atoms: Vec<Atom>,
}

impl Word {
    pub fn identity() -> Word {
        Word::default()
    }

    /// Freely reduce an arbitrary atom sequence. The result is independent of
    /// the order cancellations are performed in.
    pub fn reduce(raw: impl IntoIterator<Item = Atom>) -> Word {
        let mut atoms: Vec<Atom> = Vec::new();
        for atom in raw {
            match atoms.last() {
                Some(last) if last.cancels(&atom) => {
                    atoms.pop();
                }
                _ => atoms.push(atom),
            }
        }
        Word { atoms }
    }

    pub fn from_atom(atom: Atom) -> Word {
        Word { atoms: vec![atom] }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn multiply(&self, other: &Word) -> Word {
        Word::reduce(self.atoms.iter().chain(other.atoms.iter()).cloned())
    }

    pub fn invert(&self) -> Word {
        Word {
            atoms: self.atoms.iter().rev().map(Atom::inverse).collect(),
        }
    }

    /// `u w u^-1`.
    pub fn conjugate(&self, by: &Word) -> Word {
        by.multiply(self).multiply(&by.invert())
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.atoms.first(), self.atoms.last()) {
            (Some(first), Some(last)) if self.atoms.len() > 1 => !first.cancels(last),
            _ => true,
        }
    }

    /// Split into a cyclically reduced core and the conjugator that restores
    /// the original: `self = conjugate(core, conjugator)`.
    pub fn cyclic_reduce(&self) -> (Word, Word) {
        let mut atoms = self.atoms.clone();
        let mut prefix = Vec::new();
        while atoms.len() > 1 && atoms.first().unwrap().cancels(atoms.last().unwrap()) {
            let first = atoms.remove(0);
            atoms.pop();
            prefix.push(first);
        }
        (Word { atoms }, Word { atoms: prefix })
    }

    /// All rotations of a cyclically reduced word (the circular word).
    pub fn cyclic_permutations(&self) -> Result<Vec<Word>, WordError> {
        if !self.is_cyclically_reduced() {
            return Err(WordError::NotCyclicallyReduced);
        }
        if self.atoms.is_empty() {
            return Ok(vec![Word::identity()]);
        }
        let n = self.atoms.len();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut atoms = self.atoms[i..].to_vec();
            atoms.extend_from_slice(&self.atoms[..i]);
            out.push(Word { atoms });
        }
        Ok(out)
    }

    /// True when every atom is a signed phonological token.
    pub fn is_phonological(&self) -> bool {
        self.atoms.iter().all(|a| a.generator.is_phon())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return write!(f, "1");
        }
        for (i, atom) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", atom)?;
        }
        Ok(())
    }
}

fn syntax_err<T>(pos: usize, msg: impl Into<String>) -> Result<T, WordError> {
    Err(WordError::Syntax {
        pos,
        msg: msg.into(),
    })
}

/// Parse a raw atom sequence from the word text syntax: whitespace-separated
/// atoms, `"tok"` for phonological generators, term text for logical ones,
/// a trailing `^-1` for inverses, and `1` for the empty word.
pub fn parse_atoms(text: &str) -> Result<Vec<Atom>, WordError> {
    let bytes = text.as_bytes();
    let mut pos = 0;
    let mut atoms = Vec::new();
    loop {
        while pos < bytes.len() && (bytes[pos] as char).is_whitespace() {
            pos += 1;
        }
        if pos >= bytes.len() {
            break;
        }
        let generator = match bytes[pos] as char {
            '"' => {
                let start = pos + 1;
                let mut end = start;
                while end < bytes.len() && bytes[end] != b'"' {
                    end += 1;
                }
                if end >= bytes.len() {
                    return syntax_err(pos, "unterminated quoted token");
                }
                let token = &text[start..end];
                pos = end + 1;
                Generator::phon(token)?
            }
            '1' if atoms.is_empty() && text.trim() == "1" => {
                return Ok(Vec::new());
            }
            _ => {
                let (term, next) = parse_term_prefix(text, pos)?;
                pos = next;
                Generator::log(term)?
            }
        };
        let sign = if text[pos..].starts_with("^-1") {
            pos += 3;
            Sign::Neg
        } else {
            Sign::Pos
        };
        if pos < bytes.len() && !(bytes[pos] as char).is_whitespace() {
            return syntax_err(pos, "expected whitespace between atoms");
        }
        atoms.push(Atom { generator, sign });
    }
    Ok(atoms)
}

/// Parse and freely reduce a word.
pub fn parse_word(text: &str) -> Result<Word, WordError> {
    Ok(Word::reduce(parse_atoms(text)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn w(text: &str) -> Word {
        parse_word(text).unwrap()
    }

    #[test]
    fn reduce_empty_is_identity() {
        assert_eq!(Word::reduce(Vec::new()), Word::identity());
        assert_eq!(w("1"), Word::identity());
    }

    #[test]
    fn reduce_single_cancellation() {
        assert_eq!(w("a a^-1"), Word::identity());
    }

    #[test]
    fn reduce_worked_product() {
        // Three relator occurrences concatenated reduce to the target word.
        let raw = parse_atoms("c^-1 c^-1 a^-1 c^-1 c a c b^-1 c^-1 c b a a c^-1").unwrap();
        assert_eq!(Word::reduce(raw), w("c^-1 a a c^-1"));
    }

    #[test]
    fn multiply_neutral_and_inverse_pair() {
        let x = w("a b^-1");
        assert_eq!(Word::identity().multiply(&x), x);
        assert_eq!(x.multiply(&w("b a^-1")), Word::identity());
    }

    #[test]
    fn multiply_with_cascading_cancellation() {
        assert_eq!(
            w("c^-1 c^-1 a^-1 c^-1").multiply(&w("c a c b^-1 c^-1")),
            w("c^-1 b^-1 c^-1")
        );
    }

    #[test]
    fn invert_definition() {
        assert_eq!(Word::identity().invert(), Word::identity());
        assert_eq!(w("a b^-1").invert(), w("b a^-1"));
    }

    #[test]
    fn conjugate_neutral() {
        let x = w("a b");
        assert_eq!(x.conjugate(&Word::identity()), x);
    }

    #[test]
    fn conjugate_matches_explicit_concatenation() {
        let cases = [("a b", "b^-1"), ("a", "b c"), ("a b a^-1", "a")];
        for (wt, ut) in cases {
            let (x, u) = (w(wt), w(ut));
            let explicit = Word::reduce(
                u.atoms()
                    .iter()
                    .chain(x.atoms())
                    .chain(u.invert().atoms())
                    .cloned(),
            );
            assert_eq!(x.conjugate(&u), explicit);
        }
    }

    #[test]
    fn conjugate_by_phrase_prefix() {
        let p = w("p");
        let u = w("\"john\" \"saw\" \"louise\" \"in\"");
        assert_eq!(
            p.conjugate(&u),
            w("\"john\" \"saw\" \"louise\" \"in\" p \"in\"^-1 \"louise\"^-1 \"saw\"^-1 \"john\"^-1")
        );
    }

    #[test]
    fn cyclic_reduce_examples() {
        assert_eq!(
            Word::identity().cyclic_reduce(),
            (Word::identity(), Word::identity())
        );
        assert_eq!(w("a b a^-1").cyclic_reduce(), (w("b"), w("a")));
        let commutator = w("a b a^-1 b^-1");
        assert_eq!(
            commutator.cyclic_reduce(),
            (commutator.clone(), Word::identity())
        );
    }

    #[test]
    fn cyclically_reduced_checks() {
        assert!(Word::identity().is_cyclically_reduced());
        assert!(!w("a b a^-1").is_cyclically_reduced());
        assert!(w("c^-1 a a c^-1").is_cyclically_reduced());
    }

    #[test]
    fn cyclic_permutations_examples() {
        assert_eq!(
            Word::identity().cyclic_permutations().unwrap(),
            vec![Word::identity()]
        );
        assert_eq!(w("a b").cyclic_permutations().unwrap(), vec![w("a b"), w("b a")]);
        let perms = w("b a a").cyclic_permutations().unwrap();
        assert_eq!(perms, vec![w("b a a"), w("a a b"), w("a b a")]);
        assert!(w("a b a^-1").cyclic_permutations().is_err());
    }

    #[test]
    fn word_text_round_trip() {
        for text in [
            "1",
            "a",
            "\"john\"^-1",
            "i(s(j,l),p) \"paris\"^-1 \"in\"^-1 \"louise\"^-1 \"saw\"^-1 \"john\"^-1",
        ] {
            assert_eq!(w(text).to_string(), text);
        }
    }

    #[test]
    fn phon_token_validation() {
        assert!(Generator::phon("").is_err());
        assert!(Generator::phon("a b").is_err());
        assert!(Generator::phon("john").is_ok());
    }

    // Property tests.

    fn arb_atom() -> impl Strategy<Value = Atom> {
        ("[abc]", prop::bool::ANY).prop_map(|(name, pos)| Atom {
            generator: Generator::Phon(name),
            sign: if pos { Sign::Pos } else { Sign::Neg },
        })
    }

    fn arb_raw(max: usize) -> impl Strategy<Value = Vec<Atom>> {
        prop::collection::vec(arb_atom(), 0..max)
    }

    fn arb_word() -> impl Strategy<Value = Word> {
        arb_raw(24).prop_map(Word::reduce)
    }

    /// Rightmost-first cancellation, as an independent reduction oracle.
    fn reduce_rightmost(raw: &[Atom]) -> Word {
        let mut atoms: Vec<Atom> = Vec::new();
        for atom in raw.iter().rev() {
            match atoms.first() {
                Some(first) if first.cancels(atom) => {
                    atoms.remove(0);
                }
                _ => atoms.insert(0, atom.clone()),
            }
        }
        Word::reduce(atoms)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn reduce_is_idempotent(raw in arb_raw(64)) {
            let once = Word::reduce(raw.clone());
            let twice = Word::reduce(once.atoms().to_vec());
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn reduce_is_confluent(raw in arb_raw(64)) {
            prop_assert_eq!(Word::reduce(raw.clone()), reduce_rightmost(&raw));
        }

        #[test]
        fn group_laws(a in arb_word(), b in arb_word(), c in arb_word()) {
            prop_assert_eq!(a.multiply(&b).multiply(&c), a.multiply(&b.multiply(&c)));
            prop_assert_eq!(a.multiply(&Word::identity()), a.clone());
            prop_assert_eq!(Word::identity().multiply(&a), a.clone());
            prop_assert_eq!(a.multiply(&a.invert()), Word::identity());
            prop_assert_eq!(a.invert().multiply(&a), Word::identity());
        }

        #[test]
        fn invert_is_involutive(a in arb_word()) {
            prop_assert_eq!(a.invert().invert(), a);
        }

        #[test]
        fn cyclic_reduce_returns_a_conjugate(a in arb_word()) {
            let (core, conj) = a.cyclic_reduce();
            prop_assert!(core.is_cyclically_reduced());
            prop_assert_eq!(core.conjugate(&conj), a);
        }

        #[test]
        fn cyclic_permutations_are_cyclically_reduced(a in arb_word()) {
            let (core, _) = a.cyclic_reduce();
            for p in core.cyclic_permutations().unwrap() {
                prop_assert!(p.is_cyclically_reduced());
                prop_assert_eq!(Word::reduce(p.atoms().to_vec()), p.clone());
            }
        }

        #[test]
        fn parse_print_round_trip(a in arb_word()) {
            prop_assert_eq!(parse_word(&a.to_string()).unwrap(), a);
        }
    }
}
