//! Formula syntax trees.
//!
//! Formulas are built from atoms, `true`/`false`, negation, conjunction,
//! disjunction, implication, and the two modalities `K[a]` (agent `a` knows)
//! and `M[a]` (agent `a` considers possible, the dual of `K[a]`). The
//! [`Display`] impl prints the concrete syntax accepted by
//! [`crate::syntax::parse_formula`] with a minimal number of parentheses, so
//! printing and re-parsing is the identity on syntax trees.

use std::collections::BTreeSet;
use std::fmt;

/// Agent name. Agents index accessibility relations in models and action
/// models and appear in `K[a]`/`M[a]` modalities.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Agent(String);

impl Agent {
    pub fn new(name: impl Into<String>) -> Self {
        Agent(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Propositional atom. Plain atoms are identifiers; atoms of the form
/// `var@value` are the one-hot encoding of a finite-domain variable (see
/// [`crate::dynamics::FiniteDomainVar`]).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Atom(String);

impl Atom {
    pub fn new(name: impl Into<String>) -> Self {
        Atom(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An epistemic formula.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    /// `K[a] f`: `f` holds in every world the agent cannot distinguish from
    /// the current one.
    Knows(Agent, Box<Formula>),
    /// `M[a] f`: `f` holds in some world the agent cannot distinguish from
    /// the current one. Abbreviates `!K[a] !f`.
    Poss(Agent, Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(Atom::new(name))
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn implies(l: Formula, r: Formula) -> Self {
        Formula::Implies(Box::new(l), Box::new(r))
    }

    pub fn knows(a: Agent, f: Formula) -> Self {
        Formula::Knows(a, Box::new(f))
    }

    pub fn poss(a: Agent, f: Formula) -> Self {
        Formula::Poss(a, Box::new(f))
    }

    /// Conjunction of `fs`; `true` when empty.
    pub fn big_and(fs: impl IntoIterator<Item = Formula>) -> Self {
        let mut it = fs.into_iter();
        match it.next() {
            None => Formula::True,
            Some(first) => it.fold(first, Formula::and),
        }
    }

    /// Disjunction of `fs`; `false` when empty.
    pub fn big_or(fs: impl IntoIterator<Item = Formula>) -> Self {
        let mut it = fs.into_iter();
        match it.next() {
            None => Formula::False,
            Some(first) => it.fold(first, Formula::or),
        }
    }

    /// Maximum nesting depth of `K`/`M` modalities. Propositional formulas
    /// have depth 0.
    pub fn modal_depth(&self) -> u32 {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => 0,
            Formula::Not(f) => f.modal_depth(),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) => {
                l.modal_depth().max(r.modal_depth())
            }
            Formula::Knows(_, f) | Formula::Poss(_, f) => 1 + f.modal_depth(),
        }
    }

    pub fn is_propositional(&self) -> bool {
        self.modal_depth() == 0
    }

    /// Collects every atom occurring in the formula into `out`.
    pub fn collect_atoms(&self, out: &mut BTreeSet<Atom>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(p) => {
                out.insert(p.clone());
            }
            Formula::Not(f) => f.collect_atoms(out),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
            Formula::Knows(_, f) | Formula::Poss(_, f) => f.collect_atoms(out),
        }
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    /// Collects every agent occurring under a modality into `out`.
    pub fn collect_agents(&self, out: &mut BTreeSet<Agent>) {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => {}
            Formula::Not(f) => f.collect_agents(out),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) => {
                l.collect_agents(out);
                r.collect_agents(out);
            }
            Formula::Knows(a, f) | Formula::Poss(a, f) => {
                out.insert(a.clone());
                f.collect_agents(out);
            }
        }
    }

    pub fn agents(&self) -> BTreeSet<Agent> {
        let mut out = BTreeSet::new();
        self.collect_agents(&mut out);
        out
    }

    /// Replaces every occurrence of an atom in the domain of `map` by the
    /// mapped formula. Atoms outside the domain are kept.
    pub fn substitute_atoms(&self, map: &std::collections::BTreeMap<Atom, Formula>) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Atom(p) => match map.get(p) {
                Some(g) => g.clone(),
                None => self.clone(),
            },
            Formula::Not(f) => Formula::not(f.substitute_atoms(map)),
            Formula::And(l, r) => {
                Formula::and(l.substitute_atoms(map), r.substitute_atoms(map))
            }
            Formula::Or(l, r) => Formula::or(l.substitute_atoms(map), r.substitute_atoms(map)),
            Formula::Implies(l, r) => {
                Formula::implies(l.substitute_atoms(map), r.substitute_atoms(map))
            }
            Formula::Knows(a, f) => Formula::knows(a.clone(), f.substitute_atoms(map)),
            Formula::Poss(a, f) => Formula::poss(a.clone(), f.substitute_atoms(map)),
        }
    }

    /// Evaluates a propositional formula against a set of true atoms.
    /// Returns `None` if the formula contains a modality.
    pub fn eval_propositional(&self, truth: &BTreeSet<Atom>) -> Option<bool> {
        match self {
            Formula::True => Some(true),
            Formula::False => Some(false),
            Formula::Atom(p) => Some(truth.contains(p)),
            Formula::Not(f) => f.eval_propositional(truth).map(|b| !b),
            Formula::And(l, r) => {
                Some(l.eval_propositional(truth)? && r.eval_propositional(truth)?)
            }
            Formula::Or(l, r) => {
                Some(l.eval_propositional(truth)? || r.eval_propositional(truth)?)
            }
            Formula::Implies(l, r) => {
                Some(!l.eval_propositional(truth)? || r.eval_propositional(truth)?)
            }
            Formula::Knows(..) | Formula::Poss(..) => None,
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Implies(..) => 1,
            Formula::Or(..) => 2,
            Formula::And(..) => 3,
            Formula::Not(_) | Formula::Knows(..) | Formula::Poss(..) => 4,
            Formula::True | Formula::False | Formula::Atom(_) => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let prec = self.precedence();
        let parens = prec < min;
        if parens {
            f.write_str("(")?;
        }
        match self {
            Formula::True => f.write_str("true")?,
            Formula::False => f.write_str("false")?,
            Formula::Atom(p) => write!(f, "{p}")?,
            Formula::Not(g) => {
                f.write_str("!")?;
                g.fmt_prec(f, 4)?;
            }
            Formula::And(l, r) => {
                l.fmt_prec(f, 3)?;
                f.write_str(" & ")?;
                r.fmt_prec(f, 4)?;
            }
            Formula::Or(l, r) => {
                l.fmt_prec(f, 2)?;
                f.write_str(" | ")?;
                r.fmt_prec(f, 3)?;
            }
            Formula::Implies(l, r) => {
                l.fmt_prec(f, 2)?;
                f.write_str(" -> ")?;
                r.fmt_prec(f, 1)?;
            }
            Formula::Knows(a, g) => {
                write!(f, "K[{a}] ")?;
                g.fmt_prec(f, 4)?;
            }
            Formula::Poss(a, g) => {
                write!(f, "M[{a}] ")?;
                g.fmt_prec(f, 4)?;
            }
        }
        if parens {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}
