//! Finite-domain variables encoded with atomic propositions, in one-hot
//! form (`name@value`, exactly one true) or binary form (`name@bit0`,
//! `name@bit1`, ...). Exactly-one for the one-hot form is an invariant the
//! encoders maintain, not something re-tested inside every formula.

use std::collections::{BTreeMap, BTreeSet};

use super::{DynResult, DynamicsError};
use crate::logic::{Atom, Formula};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FiniteDomainVar {
    name: String,
    domain: Vec<String>,
}

impl FiniteDomainVar {
    pub fn new(
        name: impl Into<String>,
        domain: impl IntoIterator<Item = String>,
    ) -> DynResult<Self> {
        let name = name.into();
        let domain: Vec<String> = domain.into_iter().collect();
        if domain.is_empty() {
            return Err(DynamicsError::UnknownDomainValue {
                var: name,
                value: "<empty domain>".into(),
            });
        }
        let mut seen = BTreeSet::new();
        for value in &domain {
            if !seen.insert(value.clone()) {
                return Err(DynamicsError::UnknownDomainValue {
                    var: name,
                    value: format!("<duplicate {value}>"),
                });
            }
        }
        Ok(FiniteDomainVar { name, domain })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn atom(&self, value: &str) -> DynResult<Atom> {
        if !self.domain.iter().any(|v| v == value) {
            return Err(DynamicsError::UnknownDomainValue {
                var: self.name.clone(),
                value: value.into(),
            });
        }
        Ok(Atom::new(format!("{}@{}", self.name, value)))
    }

    /// One atom per domain value, in domain order.
    pub fn atoms(&self) -> Vec<Atom> {
        self.domain
            .iter()
            .map(|v| Atom::new(format!("{}@{}", self.name, v)))
            .collect()
    }

    /// The domain value currently set, when exactly one is.
    pub fn read<'a>(&'a self, v: &BTreeSet<Atom>) -> Option<&'a str> {
        let mut hits = self.holding(v);
        match (hits.len(), hits.pop()) {
            (1, Some(value)) => Some(value),
            _ => None,
        }
    }

    /// All domain values whose atoms hold in `v`, for diagnostics when the
    /// exactly-one invariant is in doubt.
    pub fn holding<'a>(&'a self, v: &BTreeSet<Atom>) -> Vec<&'a str> {
        self.domain
            .iter()
            .filter(|value| v.contains(&Atom::new(format!("{}@{}", self.name, value))))
            .map(|value| value.as_str())
            .collect()
    }
}

/// The formula testing `v = value`: just the one-hot atom.
pub fn fdvar_test(v: &FiniteDomainVar, value: &str) -> DynResult<Formula> {
    Ok(Formula::Atom(v.atom(value)?))
}

/// Postcondition entries for `v := value`: the chosen atom becomes true,
/// every sibling false.
pub fn fdvar_assign(v: &FiniteDomainVar, value: &str) -> DynResult<Vec<(Atom, Formula)>> {
    let chosen = v.atom(value)?;
    let mut out = vec![(chosen.clone(), Formula::True)];
    for atom in v.atoms() {
        if atom != chosen {
            out.push((atom, Formula::False));
        }
    }
    Ok(out)
}

/// A finite-domain variable in binary encoding: `ceil(log2(|domain|))`
/// bit atoms, each value identified with its index in domain order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BinaryVar {
    name: String,
    domain: Vec<String>,
    width: usize,
}

impl BinaryVar {
    pub fn new(
        name: impl Into<String>,
        domain: impl IntoIterator<Item = String>,
    ) -> DynResult<Self> {
        let inner = FiniteDomainVar::new(name, domain)?;
        let width = usize::BITS as usize - (inner.domain.len() - 1).leading_zeros() as usize;
        Ok(BinaryVar {
            name: inner.name,
            domain: inner.domain,
            width: width.max(1),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bit_atom(&self, bit: usize) -> Atom {
        Atom::new(format!("{}@bit{bit}", self.name))
    }

    pub fn atoms(&self) -> Vec<Atom> {
        (0..self.width).map(|i| self.bit_atom(i)).collect()
    }

    pub fn index(&self, value: &str) -> DynResult<usize> {
        self.domain.iter().position(|v| v == value).ok_or_else(|| {
            DynamicsError::UnknownDomainValue {
                var: self.name.clone(),
                value: value.into(),
            }
        })
    }

    /// The conjunction of bit literals identifying `value`.
    pub fn test(&self, value: &str) -> DynResult<Formula> {
        let index = self.index(value)?;
        Ok(Formula::big_and((0..self.width).map(|bit| {
            let literal = Formula::Atom(self.bit_atom(bit));
            if index & (1 << bit) != 0 {
                literal
            } else {
                Formula::not(literal)
            }
        })))
    }

    /// The atoms true in the valuation encoding `value`.
    pub fn valuation(&self, value: &str) -> DynResult<Vec<Atom>> {
        let index = self.index(value)?;
        Ok((0..self.width)
            .filter(|bit| index & (1 << bit) != 0)
            .map(|bit| self.bit_atom(bit))
            .collect())
    }

    /// Postcondition entries applying a total value-to-value map in one
    /// step: each bit is assigned the disjunction of the tests of all old
    /// values whose image sets that bit.
    pub fn assign_map(&self, map: &BTreeMap<String, String>) -> DynResult<Vec<(Atom, Formula)>> {
        for value in &self.domain {
            if !map.contains_key(value) {
                return Err(DynamicsError::PartialAssignmentMap {
                    var: self.name.clone(),
                });
            }
        }
        let mut out = Vec::with_capacity(self.width);
        for bit in 0..self.width {
            let mut cases = Vec::new();
            for (src, dst) in map {
                if self.index(dst)? & (1 << bit) != 0 {
                    cases.push(self.test(src)?);
                }
            }
            out.push((self.bit_atom(bit), Formula::big_or(cases)));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn turn() -> FiniteDomainVar {
        FiniteDomainVar::new("turn", ["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn one_hot_test_and_assign() {
        let v = turn();
        assert_eq!(fdvar_test(&v, "a").unwrap(), Formula::atom("turn@a"));
        let assign = fdvar_assign(&v, "b").unwrap();
        assert_eq!(
            assign,
            vec![
                (Atom::new("turn@b"), Formula::True),
                (Atom::new("turn@a"), Formula::False),
            ]
        );
        assert!(matches!(
            fdvar_test(&v, "c"),
            Err(DynamicsError::UnknownDomainValue { .. })
        ));
    }

    #[test]
    fn one_hot_read_requires_exactly_one() {
        let v = turn();
        let mut val: BTreeSet<Atom> = [Atom::new("turn@a")].into();
        assert_eq!(v.read(&val), Some("a"));
        val.insert(Atom::new("turn@b"));
        assert_eq!(v.read(&val), None);
        assert_eq!(v.holding(&val), vec!["a", "b"]);
        assert_eq!(v.read(&BTreeSet::new()), None);
    }

    #[test]
    fn rejects_empty_and_duplicate_domains() {
        assert!(FiniteDomainVar::new("x", []).is_err());
        assert!(FiniteDomainVar::new("x", ["v".into(), "v".into()]).is_err());
    }

    #[test]
    fn binary_width_and_tests() {
        let q = BinaryVar::new(
            "q",
            ["s0".into(), "s1".into(), "s2".into()],
        )
        .unwrap();
        assert_eq!(q.width(), 2);
        assert_eq!(q.valuation("s0").unwrap(), vec![]);
        assert_eq!(q.valuation("s1").unwrap(), vec![q.bit_atom(0)]);
        assert_eq!(q.valuation("s2").unwrap(), vec![q.bit_atom(1)]);
        let v: BTreeSet<Atom> = q.valuation("s2").unwrap().into_iter().collect();
        assert_eq!(q.test("s2").unwrap().eval_propositional(&v), Some(true));
        assert_eq!(q.test("s1").unwrap().eval_propositional(&v), Some(false));
    }

    #[test]
    fn binary_assign_map_tracks_transition_images() {
        let q = BinaryVar::new("q", ["s0".into(), "s1".into()]).unwrap();
        let map: BTreeMap<String, String> =
            [("s0".into(), "s1".into()), ("s1".into(), "s1".into())].into();
        let entries = q.assign_map(&map).unwrap();
        assert_eq!(entries.len(), 1);
        let (atom, formula) = &entries[0];
        assert_eq!(atom, &q.bit_atom(0));
        for value in ["s0", "s1"] {
            let v: BTreeSet<Atom> = q.valuation(value).unwrap().into_iter().collect();
            assert_eq!(formula.eval_propositional(&v), Some(true));
        }

        let partial: BTreeMap<String, String> = [("s0".into(), "s1".into())].into();
        assert!(matches!(
            q.assign_map(&partial),
            Err(DynamicsError::PartialAssignmentMap { .. })
        ));
    }
}
