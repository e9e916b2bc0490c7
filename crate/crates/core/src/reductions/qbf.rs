//! Quantified Boolean formulas and their encoding as announcement games.

use std::collections::{BTreeMap, BTreeSet};

use super::{bad, ControllerEncoding, RedResult, ReductionError};
use crate::dynamics::{ActionId, ActionModel, OwnerTag};
use crate::logic::{Agent, Atom, EpistemicModel, Formula, PointedModel, WorldId};

/// Quantifier of one prefix entry.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Quantifier {
    Exists,
    Forall,
}

impl Quantifier {
    fn flip(self) -> Self {
        match self {
            Quantifier::Exists => Quantifier::Forall,
            Quantifier::Forall => Quantifier::Exists,
        }
    }
}

/// A prenex quantified Boolean formula: a quantifier prefix over distinct
/// variables and a propositional matrix mentioning only those variables.
///
/// [`qbf_to_controller`] consumes the normal form where the prefix
/// strictly alternates starting existentially and has even length.
/// [`QbfInstance::normalize`] brings any instance into that shape by
/// inserting quantified dummy variables the matrix never mentions, which
/// leaves the truth value unchanged.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct QbfInstance {
    prefix: Vec<(Quantifier, Atom)>,
    matrix: Formula,
}

impl QbfInstance {
    pub fn new(prefix: Vec<(Quantifier, Atom)>, matrix: Formula) -> RedResult<Self> {
        let mut seen = BTreeSet::new();
        for (_, var) in &prefix {
            if !seen.insert(var.clone()) {
                return Err(bad(format!("variable `{var}` is quantified twice")));
            }
        }
        if !matrix.is_propositional() {
            return Err(bad("the matrix must be propositional"));
        }
        if let Some(stray) = matrix.atoms().into_iter().find(|a| !seen.contains(a)) {
            return Err(bad(format!("the matrix mentions unquantified `{stray}`")));
        }
        Ok(QbfInstance { prefix, matrix })
    }

    pub fn prefix(&self) -> &[(Quantifier, Atom)] {
        &self.prefix
    }

    pub fn matrix(&self) -> &Formula {
        &self.matrix
    }

    /// Whether the prefix strictly alternates exists/forall starting
    /// existentially and has even length.
    pub fn is_normalized(&self) -> bool {
        self.prefix.len() % 2 == 0
            && self
                .prefix
                .iter()
                .zip([Quantifier::Exists, Quantifier::Forall].into_iter().cycle())
                .all(|((q, _), expected)| *q == expected)
    }

    /// Pads the prefix with fresh dummy variables until it strictly
    /// alternates starting existentially and has even length. The dummies
    /// never occur in the matrix, so quantifying over them either way
    /// changes nothing; [`qbf_brute_force`] agrees on the two instances.
    pub fn normalize(&self) -> QbfInstance {
        let mut dummies = DummyNames::new(&self.prefix);
        let mut prefix = Vec::with_capacity(self.prefix.len());
        let mut expected = Quantifier::Exists;
        for (quant, var) in &self.prefix {
            if *quant != expected {
                prefix.push((expected, dummies.next()));
                expected = expected.flip();
            }
            prefix.push((*quant, var.clone()));
            expected = expected.flip();
        }
        if prefix.len() % 2 != 0 {
            prefix.push((expected, dummies.next()));
        }
        QbfInstance {
            prefix,
            matrix: self.matrix.clone(),
        }
    }
}

struct DummyNames {
    taken: BTreeSet<String>,
    counter: usize,
}

impl DummyNames {
    fn new(prefix: &[(Quantifier, Atom)]) -> Self {
        DummyNames {
            taken: prefix.iter().map(|(_, v)| v.to_string()).collect(),
            counter: 0,
        }
    }

    fn next(&mut self) -> Atom {
        loop {
            self.counter += 1;
            let candidate = format!("d{}", self.counter);
            if !self.taken.contains(&candidate) {
                return Atom::new(candidate);
            }
        }
    }
}

/// Marker atoms `pend1..pendN`, with the stem prefixed by underscores
/// until it collides with no variable name.
fn marker_atoms(prefix: &[(Quantifier, Atom)]) -> Vec<Atom> {
    let taken: BTreeSet<&str> = prefix.iter().map(|(_, v)| v.as_str()).collect();
    let mut stem = String::from("pend");
    loop {
        if (1..=prefix.len()).all(|i| !taken.contains(format!("{stem}{i}").as_str())) {
            return (1..=prefix.len())
                .map(|i| Atom::new(format!("{stem}{i}")))
                .collect();
        }
        stem.insert(0, '_');
    }
}

/// Encodes a normalized instance as an announcement game for a single
/// agent `a`.
///
/// Each prefix position `i` gets two worlds next to the designated blank
/// one: a marker world carrying only the pending-atom for `i` and a
/// variable world carrying only the variable itself, all of them
/// `a`-indistinguishable. Assigning variable `i` means announcing one of
/// two formulas sharing a guard that holds exactly while positions before
/// `i` are decided and the rest are not: `set_<var>` removes just the
/// marker world (the variable world survives, the variable counts as
/// true), `clear_<var>` also removes the variable world. Odd positions
/// are controller announcements, even ones environment announcements, so
/// play alternates exactly as the prefix does. The goal requires every
/// marker gone and the matrix satisfied with each variable read as "its
/// world survived".
pub fn qbf_to_controller(q: &QbfInstance) -> RedResult<ControllerEncoding> {
    if !q.is_normalized() {
        return Err(ReductionError::NotNormalized(
            "the prefix must strictly alternate exists/forall starting existentially \
             and have even length; call normalize() first"
                .into(),
        ));
    }
    let a = Agent::new("a");
    let n = q.prefix.len();
    let markers = marker_atoms(&q.prefix);

    let mut model = EpistemicModel::new([a.clone()]);
    let base = WorldId::new("base");
    model.add_world(base.clone(), [])?;
    let mut all_worlds = vec![base.clone()];
    for (i, (_, var)) in q.prefix.iter().enumerate() {
        let marker_world = WorldId::new(format!("u{}", i + 1));
        let var_world = WorldId::new(format!("w{}", i + 1));
        model.add_world(marker_world.clone(), [markers[i].clone()])?;
        model.add_world(var_world.clone(), [var.clone()])?;
        all_worlds.push(marker_world);
        all_worlds.push(var_world);
    }
    model.add_obs_class(&a, &all_worlds)?;
    let model = PointedModel::new(model, base)?;

    let mut actions = ActionModel::new([a.clone()]);
    for (i, (_, var)) in q.prefix.iter().enumerate() {
        let owner = if (i + 1) % 2 == 1 {
            OwnerTag::Controller
        } else {
            OwnerTag::Environment
        };
        let decided_before: Vec<Formula> = (0..i)
            .map(|j| Formula::knows(a.clone(), Formula::not(Formula::Atom(markers[j].clone()))))
            .collect();
        let pending_from: Vec<Formula> = (i..n)
            .map(|j| Formula::poss(a.clone(), Formula::Atom(markers[j].clone())))
            .collect();
        let guard = decided_before.into_iter().chain(pending_from);
        let set_pre = Formula::big_and(
            guard
                .clone()
                .chain([Formula::not(Formula::Atom(markers[i].clone()))]),
        );
        let clear_pre = Formula::big_and(guard.chain([
            Formula::not(Formula::Atom(var.clone())),
            Formula::not(Formula::Atom(markers[i].clone())),
        ]));
        actions.add_action(ActionId::new(format!("set_{var}")), set_pre, owner.clone())?;
        actions.add_action(ActionId::new(format!("clear_{var}")), clear_pre, owner)?;
    }
    actions.close_reflexive();

    let survives: BTreeMap<Atom, Formula> = q
        .prefix
        .iter()
        .map(|(_, v)| {
            (
                v.clone(),
                Formula::poss(a.clone(), Formula::Atom(v.clone())),
            )
        })
        .collect();
    let goal = Formula::big_and(
        markers
            .iter()
            .map(|m| Formula::knows(a.clone(), Formula::not(Formula::Atom(m.clone()))))
            .chain([q.matrix.substitute_atoms(&survives)]),
    );

    Ok(ControllerEncoding {
        agents: vec![a],
        model,
        actions,
        goal,
        notes: Vec::new(),
    })
}

/// Evaluates the instance by plain recursion over all assignments, no game
/// machinery involved.
pub fn qbf_brute_force(q: &QbfInstance) -> bool {
    fn go(prefix: &[(Quantifier, Atom)], matrix: &Formula, truth: &mut BTreeSet<Atom>) -> bool {
        let Some(((quant, var), rest)) = prefix.split_first() else {
            return matrix.eval_propositional(truth) == Some(true);
        };
        let when_false = go(rest, matrix, truth);
        truth.insert(var.clone());
        let when_true = go(rest, matrix, truth);
        truth.remove(var);
        match quant {
            Quantifier::Exists => when_false || when_true,
            Quantifier::Forall => when_false && when_true,
        }
    }
    go(&q.prefix, &q.matrix, &mut BTreeSet::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::solve_controller_announcements;
    use crate::dynamics::classify;
    use crate::game::DeadlockMode;
    use crate::syntax::parse_formula;

    fn instance(prefix: &[(Quantifier, &str)], matrix: &str) -> QbfInstance {
        QbfInstance::new(
            prefix
                .iter()
                .map(|(q, v)| (*q, Atom::new(*v)))
                .collect(),
            parse_formula(matrix).unwrap(),
        )
        .unwrap()
    }

    use Quantifier::{Exists, Forall};

    #[test]
    fn brute_force_on_small_truths() {
        assert!(qbf_brute_force(&instance(
            &[(Exists, "p1"), (Forall, "p2")],
            "p1 | p2"
        )));
        assert!(!qbf_brute_force(&instance(
            &[(Exists, "p1"), (Forall, "p2")],
            "p1 & p2"
        )));
        assert!(qbf_brute_force(&instance(
            &[(Forall, "x"), (Exists, "y")],
            "x & y | !x & !y"
        )));
    }

    #[test]
    fn normalize_pads_without_changing_the_value() {
        let short = instance(&[(Exists, "p1")], "p1");
        let padded = short.normalize();
        assert!(padded.is_normalized());
        assert_eq!(padded.prefix().len(), 2);
        assert_eq!(padded.prefix()[1].0, Forall);
        assert_eq!(qbf_brute_force(&short), qbf_brute_force(&padded));

        let forall_first = instance(&[(Forall, "x")], "x | !x");
        let padded = forall_first.normalize();
        assert!(padded.is_normalized());
        assert_eq!(padded.prefix()[0].0, Exists);
        assert_eq!(padded.prefix()[1].1, Atom::new("x"));
        assert_eq!(qbf_brute_force(&forall_first), qbf_brute_force(&padded));

        let already = instance(&[(Exists, "p1"), (Forall, "p2")], "p1");
        assert_eq!(already.normalize(), already);
    }

    #[test]
    fn normalize_skips_clashing_dummy_names() {
        let inst = instance(&[(Forall, "d1")], "d1");
        let padded = inst.normalize();
        assert!(padded.is_normalized());
        assert_eq!(padded.prefix()[0].1, Atom::new("d2"));
    }

    #[test]
    fn rejects_malformed_instances() {
        let dup = QbfInstance::new(
            vec![(Exists, Atom::new("p")), (Forall, Atom::new("p"))],
            Formula::atom("p"),
        );
        assert!(matches!(dup, Err(ReductionError::BadInstance(_))));

        let stray = QbfInstance::new(vec![(Exists, Atom::new("p"))], Formula::atom("q"));
        assert!(matches!(stray, Err(ReductionError::BadInstance(_))));

        let modal = QbfInstance::new(
            vec![(Exists, Atom::new("p"))],
            Formula::knows(Agent::new("a"), Formula::atom("p")),
        );
        assert!(matches!(modal, Err(ReductionError::BadInstance(_))));
    }

    #[test]
    fn encoder_requires_the_normal_form() {
        let odd = instance(&[(Exists, "p1")], "p1");
        assert!(matches!(
            qbf_to_controller(&odd),
            Err(ReductionError::NotNormalized(_))
        ));
    }

    #[test]
    fn encoding_shape_for_two_variables() {
        let q = instance(&[(Exists, "p1"), (Forall, "p2")], "p1 | p2");
        let enc = qbf_to_controller(&q).unwrap();
        assert_eq!(enc.model.model().world_count(), 5);
        assert_eq!(enc.actions.action_count(), 4);

        let a = Agent::new("a");
        let expected_goal = Formula::big_and([
            Formula::knows(a.clone(), Formula::not(Formula::atom("pend1"))),
            Formula::knows(a.clone(), Formula::not(Formula::atom("pend2"))),
            Formula::or(
                Formula::poss(a.clone(), Formula::atom("p1")),
                Formula::poss(a.clone(), Formula::atom("p2")),
            ),
        ]);
        assert_eq!(enc.goal, expected_goal);
        enc.into_problem().unwrap();
    }

    #[test]
    fn every_emitted_action_is_a_public_announcement() {
        let q = instance(&[(Exists, "p1"), (Forall, "p2")], "p1 | p2");
        let enc = qbf_to_controller(&q).unwrap();
        for id in enc.actions.actions() {
            let class = classify(&enc.actions, Some(&id));
            assert_eq!(class.public_announcement, Some(id.clone()));
            assert!(class.s5);
        }
    }

    #[test]
    fn solver_verdict_matches_the_truth_value() {
        let yes = instance(&[(Exists, "p1"), (Forall, "p2")], "p1 | p2");
        let enc = qbf_to_controller(&yes).unwrap();
        let verdict =
            solve_controller_announcements(&enc.model, &enc.actions, &enc.goal, DeadlockMode::Lose)
                .unwrap();
        assert!(verdict.is_yes());

        let no = instance(&[(Exists, "p1"), (Forall, "p2")], "p1 & p2");
        let enc = qbf_to_controller(&no).unwrap();
        let verdict =
            solve_controller_announcements(&enc.model, &enc.actions, &enc.goal, DeadlockMode::Lose)
                .unwrap();
        assert!(!verdict.is_yes());
    }
}
