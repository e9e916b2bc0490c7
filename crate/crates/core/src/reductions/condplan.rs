//! Conditional planning with nondeterministic effects, encoded as a
//! public-action controller game.

use std::collections::{BTreeMap, BTreeSet};

use super::{bad, plain_ident, ControllerEncoding, RedResult};
use crate::dynamics::{fdvar_assign, ActionId, ActionModel, FiniteDomainVar, OwnerTag};
use crate::logic::{Agent, Atom, EpistemicModel, Formula, PointedModel, WorldId};

/// One planning action: a propositional guard and the alternative effects
/// the environment may pick from. An effect maps atoms to the
/// propositional formulas that become their new values, read in the state
/// the action fires in; unmentioned atoms keep their values.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CondPlanAction {
    name: String,
    pre: Formula,
    effects: Vec<BTreeMap<Atom, Formula>>,
}

fn check_plain_atoms(atoms: impl IntoIterator<Item = Atom>, place: &str) -> RedResult<()> {
    for atom in atoms {
        if !plain_ident(atom.as_str()) {
            return Err(bad(format!(
                "atom `{atom}` in {place} is not a plain identifier; \
                 `@` names are reserved for the scheduling variable"
            )));
        }
    }
    Ok(())
}

impl CondPlanAction {
    pub fn new(
        name: impl Into<String>,
        pre: Formula,
        effects: Vec<BTreeMap<Atom, Formula>>,
    ) -> RedResult<Self> {
        let name = name.into();
        if !plain_ident(&name) {
            return Err(bad(format!("`{name}` is not a valid action name")));
        }
        if name == "none" {
            return Err(bad("the action name `none` is reserved"));
        }
        if !pre.is_propositional() {
            return Err(bad(format!("the guard of `{name}` must be propositional")));
        }
        check_plain_atoms(pre.atoms(), &format!("the guard of `{name}`"))?;
        if effects.is_empty() {
            return Err(bad(format!("`{name}` needs at least one effect")));
        }
        for effect in &effects {
            for (atom, value) in effect {
                if !value.is_propositional() {
                    return Err(bad(format!(
                        "the effect on `{atom}` in `{name}` must be propositional"
                    )));
                }
                check_plain_atoms(
                    effect.keys().cloned().chain(value.atoms()),
                    &format!("an effect of `{name}`"),
                )?;
            }
        }
        Ok(CondPlanAction { name, pre, effects })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn pre(&self) -> &Formula {
        &self.pre
    }

    pub fn effects(&self) -> &[BTreeMap<Atom, Formula>] {
        &self.effects
    }
}

/// Encodes a planning task as a strictly alternating public-action game.
///
/// A one-hot variable `action` remembers which planning action is in
/// flight; it starts at `none`. Picking action `x` is the controller move
/// `do_x`, guarded by `x`'s own guard, whose only effect is `action:=x`.
/// For each of `x`'s effects there is an environment move `resolve_x_<i>`,
/// guarded by `action@x`, which applies that effect and resets `action` to
/// `none`. The goal passes through untouched: it is checked before every
/// move, and at the half-step where `action` is not `none` the plain atoms
/// still hold their previous checked values, so no spurious win appears.
pub fn condplan_to_controller(
    init: &BTreeSet<Atom>,
    plan_actions: &[CondPlanAction],
    goal: &Formula,
) -> RedResult<ControllerEncoding> {
    check_plain_atoms(init.iter().cloned(), "the initial state")?;
    if !goal.is_propositional() {
        return Err(bad("the goal must be propositional"));
    }
    check_plain_atoms(goal.atoms(), "the goal")?;
    let mut names = BTreeSet::new();
    for action in plan_actions {
        if !names.insert(action.name.as_str()) {
            return Err(bad(format!("two actions are named `{}`", action.name)));
        }
    }

    let a = Agent::new("a");
    let scheduler = FiniteDomainVar::new(
        "action",
        ["none"]
            .into_iter()
            .chain(plan_actions.iter().map(|p| p.name.as_str())),
    )?;

    let mut model = EpistemicModel::new([a.clone()]);
    let start = WorldId::new("start");
    let mut atoms = init.clone();
    atoms.insert(scheduler.atom("none")?);
    model.add_world(start.clone(), atoms)?;
    model.close_reflexive();
    let model = PointedModel::new(model, start)?;

    let mut actions = ActionModel::new([a.clone()]);
    for plan in plan_actions {
        let pick = ActionId::new(format!("do_{}", plan.name));
        actions.add_action(pick.clone(), plan.pre.clone(), OwnerTag::Controller)?;
        for (atom, value) in fdvar_assign(&scheduler, &plan.name)? {
            actions.set_post(&pick, atom, value)?;
        }
        for (i, effect) in plan.effects.iter().enumerate() {
            let resolve = ActionId::new(format!("resolve_{}_{}", plan.name, i + 1));
            actions.add_action(
                resolve.clone(),
                Formula::Atom(scheduler.atom(&plan.name)?),
                OwnerTag::Environment,
            )?;
            for (atom, value) in effect {
                actions.set_post(&resolve, atom.clone(), value.clone())?;
            }
            for (atom, value) in fdvar_assign(&scheduler, "none")? {
                actions.set_post(&resolve, atom, value)?;
            }
        }
    }
    actions.close_reflexive();

    Ok(ControllerEncoding {
        agents: vec![a],
        model,
        actions,
        goal: goal.clone(),
        notes: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::solve_controller_public;
    use crate::game::DeadlockMode;
    use crate::syntax::parse_formula;

    fn effect(pairs: &[(&str, &str)]) -> BTreeMap<Atom, Formula> {
        pairs
            .iter()
            .map(|(atom, value)| (Atom::new(*atom), parse_formula(value).unwrap()))
            .collect()
    }

    fn solve(enc: &ControllerEncoding) -> bool {
        solve_controller_public(&enc.model, &enc.actions, &enc.goal, DeadlockMode::Lose)
            .unwrap()
            .is_yes()
    }

    #[test]
    fn goal_already_true_wins_immediately() {
        let noop = CondPlanAction::new("wait", Formula::True, vec![effect(&[])]).unwrap();
        let init = BTreeSet::from([Atom::new("g")]);
        let enc = condplan_to_controller(&init, &[noop], &Formula::atom("g")).unwrap();
        assert!(solve(&enc));
    }

    #[test]
    fn deterministic_action_reaches_the_goal() {
        let flip = CondPlanAction::new(
            "flip",
            parse_formula("!g").unwrap(),
            vec![effect(&[("g", "true")])],
        )
        .unwrap();
        let enc = condplan_to_controller(&BTreeSet::new(), &[flip], &Formula::atom("g")).unwrap();
        assert_eq!(enc.actions.action_count(), 2);
        assert!(solve(&enc));
    }

    #[test]
    fn unfavorable_nondeterminism_cannot_be_retried() {
        let toss = CondPlanAction::new(
            "toss",
            parse_formula("!done").unwrap(),
            vec![
                effect(&[("coin", "true"), ("done", "true")]),
                effect(&[("coin", "false"), ("done", "true")]),
            ],
        )
        .unwrap();
        let enc =
            condplan_to_controller(&BTreeSet::new(), &[toss], &Formula::atom("coin")).unwrap();
        assert!(!solve(&enc));
    }

    #[test]
    fn effects_read_the_state_the_action_fired_in() {
        let swap = CondPlanAction::new(
            "swap",
            Formula::True,
            vec![effect(&[("p", "q"), ("q", "p")])],
        )
        .unwrap();
        let init = BTreeSet::from([Atom::new("p")]);
        let goal = parse_formula("q & !p").unwrap();
        let enc = condplan_to_controller(&init, &[swap], &goal).unwrap();
        assert!(solve(&enc));
    }

    #[test]
    fn rejects_reserved_and_duplicate_names() {
        assert!(CondPlanAction::new("none", Formula::True, vec![effect(&[])]).is_err());
        assert!(CondPlanAction::new("a b", Formula::True, vec![effect(&[])]).is_err());
        assert!(CondPlanAction::new("x", Formula::True, vec![]).is_err());

        let one = CondPlanAction::new("x", Formula::True, vec![effect(&[])]).unwrap();
        let two = one.clone();
        let err = condplan_to_controller(&BTreeSet::new(), &[one, two], &Formula::True);
        assert!(err.is_err());
    }

    #[test]
    fn rejects_atoms_with_reserved_names() {
        let sneaky = CondPlanAction::new(
            "x",
            Formula::atom("action@none"),
            vec![effect(&[])],
        );
        assert!(sneaky.is_err());

        let init = BTreeSet::from([Atom::new("p@1")]);
        let ok = CondPlanAction::new("x", Formula::True, vec![effect(&[])]).unwrap();
        assert!(condplan_to_controller(&init, &[ok], &Formula::True).is_err());
    }
}
