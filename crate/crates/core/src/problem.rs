//! A complete problem instance: agents, initial pointed model, action
//! model, solving mode, optional turn variable and team split, and goal.
//!
//! Construction validates the cross-references between the parts, so every
//! downstream solver can assume a well-formed instance.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::distributed::{SplitError, TeamSplit};
use crate::dynamics::{ActionId, ActionModel, FiniteDomainVar, OwnerTag};
use crate::logic::{Agent, Atom, Formula, PointedModel};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    Plan,
    Controller,
    Distributed,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Plan => "plan",
            Mode::Controller => "controller",
            Mode::Distributed => "distributed",
        })
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ProblemError {
    #[error("no agents declared")]
    NoAgents,
    #[error("agent `{0}` declared twice")]
    DuplicateAgent(Agent),
    #[error("agent `{0}` is not declared")]
    UndeclaredAgent(Agent),
    #[error("model agents do not match the declared agent set")]
    ModelAgentMismatch,
    #[error("action-model agents do not match the declared agent set")]
    ActionAgentMismatch,
    #[error("action point `{0}` is not a declared action")]
    UnknownActionPoint(ActionId),
    #[error("actions mix ctr/env owners with per-agent owners")]
    MixedOwnerScheme,
    #[error("mode {mode} does not allow owner `{owner}` (action `{action}`)")]
    WrongOwnerScheme {
        mode: Mode,
        action: ActionId,
        owner: OwnerTag,
    },
    #[error("mode distributed requires a turn variable declaration")]
    MissingTurnVar,
    #[error("mode distributed requires an `exists` team declaration")]
    MissingSplit,
    #[error("`{0}` declarations require mode distributed")]
    DistributedOnly(&'static str),
    #[error("turn value `{0}` is not a declared agent")]
    TurnValueNotAgent(String),
    #[error(transparent)]
    Split(#[from] SplitError),
}

pub type ProblemResult<T> = Result<T, ProblemError>;

/// A validated problem instance.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Problem {
    agents: Vec<Agent>,
    model: PointedModel,
    actions: ActionModel,
    action_point: Option<ActionId>,
    mode: Mode,
    turnvar: Option<FiniteDomainVar>,
    split: Option<TeamSplit>,
    goal: Formula,
}

impl Problem {
    /// Assembles and validates a problem. `existential` lists the
    /// existential team for distributed mode (the remaining agents form the
    /// universal team) and must be absent otherwise.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        agents: Vec<Agent>,
        model: PointedModel,
        actions: ActionModel,
        action_point: Option<ActionId>,
        mode: Mode,
        turnvar: Option<FiniteDomainVar>,
        existential: Option<Vec<Agent>>,
        goal: Formula,
    ) -> ProblemResult<Self> {
        if agents.is_empty() {
            return Err(ProblemError::NoAgents);
        }
        let mut declared: BTreeSet<Agent> = BTreeSet::new();
        for a in &agents {
            if !declared.insert(a.clone()) {
                return Err(ProblemError::DuplicateAgent(a.clone()));
            }
        }

        let model_agents: BTreeSet<Agent> = model.model().agents().cloned().collect();
        if model_agents != declared {
            return Err(ProblemError::ModelAgentMismatch);
        }
        let action_agents: BTreeSet<Agent> = actions.agents().cloned().collect();
        if action_agents != declared {
            return Err(ProblemError::ActionAgentMismatch);
        }

        let mut formula_agents = goal.agents();
        for id in actions.actions() {
            let pre = actions.pre(id).expect("iterated action is declared");
            pre.collect_agents(&mut formula_agents);
        }
        for a in formula_agents {
            if !declared.contains(&a) {
                return Err(ProblemError::UndeclaredAgent(a));
            }
        }

        if let Some(point) = &action_point {
            if !actions.has_action(point) {
                return Err(ProblemError::UnknownActionPoint(point.clone()));
            }
        }

        let tags = actions.owner_tags();
        let two_sided = tags
            .iter()
            .all(|t| matches!(t, OwnerTag::Controller | OwnerTag::Environment));
        let per_agent = tags.iter().all(|t| matches!(t, OwnerTag::Agent(_)));
        if !two_sided && !per_agent {
            return Err(ProblemError::MixedOwnerScheme);
        }
        for tag in &tags {
            let allowed = match mode {
                Mode::Plan => true,
                Mode::Controller => {
                    matches!(tag, OwnerTag::Controller | OwnerTag::Environment)
                }
                Mode::Distributed => match tag {
                    OwnerTag::Agent(a) => declared.contains(a),
                    _ => false,
                },
            };
            if !allowed {
                let action = actions
                    .actions_owned_by(tag)
                    .into_iter()
                    .next()
                    .expect("tag in use has an owner");
                return Err(ProblemError::WrongOwnerScheme {
                    mode,
                    action,
                    owner: tag.clone(),
                });
            }
            if let OwnerTag::Agent(a) = tag {
                if !declared.contains(a) {
                    return Err(ProblemError::UndeclaredAgent(a.clone()));
                }
            }
        }

        let split = match mode {
            Mode::Distributed => {
                let Some(turn) = &turnvar else {
                    return Err(ProblemError::MissingTurnVar);
                };
                for value in turn.domain() {
                    if !declared.contains(&Agent::new(value.clone())) {
                        return Err(ProblemError::TurnValueNotAgent(value.clone()));
                    }
                }
                let Some(existential) = existential else {
                    return Err(ProblemError::MissingSplit);
                };
                for a in &existential {
                    if !declared.contains(a) {
                        return Err(ProblemError::UndeclaredAgent(a.clone()));
                    }
                }
                let exist_set: BTreeSet<Agent> = existential.into_iter().collect();
                let universal: Vec<Agent> =
                    declared.difference(&exist_set).cloned().collect();
                Some(TeamSplit::new(exist_set, universal)?)
            }
            _ => {
                if turnvar.is_some() {
                    return Err(ProblemError::DistributedOnly("turnvar"));
                }
                if existential.is_some() {
                    return Err(ProblemError::DistributedOnly("exists"));
                }
                None
            }
        };

        Ok(Problem {
            agents,
            model,
            actions,
            action_point,
            mode,
            turnvar,
            split,
            goal,
        })
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn model(&self) -> &PointedModel {
        &self.model
    }

    pub fn actions(&self) -> &ActionModel {
        &self.actions
    }

    pub fn action_point(&self) -> Option<&ActionId> {
        self.action_point.as_ref()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn turnvar(&self) -> Option<&FiniteDomainVar> {
        self.turnvar.as_ref()
    }

    pub fn split(&self) -> Option<&TeamSplit> {
        self.split.as_ref()
    }

    pub fn goal(&self) -> &Formula {
        &self.goal
    }

    /// The working alphabet: every atom mentioned by the model, the
    /// actions, the goal, or the turn variable.
    pub fn alphabet(&self) -> BTreeSet<Atom> {
        let mut out = self.model.model().atoms();
        out.extend(self.actions.atoms());
        out.extend(self.goal.atoms());
        if let Some(turn) = &self.turnvar {
            out.extend(turn.atoms());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::EpistemicModel;
    use crate::logic::WorldId;

    fn agent(s: &str) -> Agent {
        Agent::new(s)
    }

    fn tiny_model(agents: &[&str]) -> PointedModel {
        let mut m = EpistemicModel::new(agents.iter().map(|a| Agent::new(*a)));
        m.add_world(WorldId::new("w"), [Atom::new("p")]).unwrap();
        m.close_reflexive();
        PointedModel::new(m, WorldId::new("w")).unwrap()
    }

    fn tiny_actions(agents: &[&str], owner: OwnerTag) -> ActionModel {
        let mut a = ActionModel::new(agents.iter().map(|x| Agent::new(*x)));
        a.add_action(ActionId::new("go"), Formula::True, owner).unwrap();
        a.close_reflexive();
        a
    }

    #[test]
    fn accepts_matching_controller_problem() {
        let p = Problem::new(
            vec![agent("a")],
            tiny_model(&["a"]),
            tiny_actions(&["a"], OwnerTag::Controller),
            None,
            Mode::Controller,
            None,
            None,
            Formula::atom("p"),
        )
        .unwrap();
        assert_eq!(p.mode(), Mode::Controller);
        assert!(p.alphabet().contains(&Atom::new("p")));
    }

    #[test]
    fn rejects_owner_scheme_mismatches() {
        let err = Problem::new(
            vec![agent("a")],
            tiny_model(&["a"]),
            tiny_actions(&["a"], OwnerTag::Agent(agent("a"))),
            None,
            Mode::Controller,
            None,
            None,
            Formula::True,
        )
        .unwrap_err();
        assert!(matches!(err, ProblemError::WrongOwnerScheme { .. }));

        let mut mixed = tiny_actions(&["a"], OwnerTag::Controller);
        mixed
            .add_action(ActionId::new("other"), Formula::True, OwnerTag::Agent(agent("a")))
            .unwrap();
        mixed.close_reflexive();
        let err = Problem::new(
            vec![agent("a")],
            tiny_model(&["a"]),
            mixed,
            None,
            Mode::Plan,
            None,
            None,
            Formula::True,
        )
        .unwrap_err();
        assert_eq!(err, ProblemError::MixedOwnerScheme);
    }

    #[test]
    fn distributed_mode_requires_turn_and_split() {
        let build = |turn: Option<FiniteDomainVar>, exists: Option<Vec<Agent>>| {
            Problem::new(
                vec![agent("a"), agent("b")],
                tiny_model(&["a", "b"]),
                tiny_actions(&["a", "b"], OwnerTag::Agent(agent("a"))),
                None,
                Mode::Distributed,
                turn,
                exists,
                Formula::True,
            )
        };
        assert_eq!(build(None, None).unwrap_err(), ProblemError::MissingTurnVar);
        let turn = FiniteDomainVar::new("turn", ["a".into(), "b".into()]).unwrap();
        assert_eq!(
            build(Some(turn.clone()), None).unwrap_err(),
            ProblemError::MissingSplit
        );
        let p = build(Some(turn), Some(vec![agent("a")])).unwrap();
        let split = p.split().unwrap();
        assert!(split.is_existential(&agent("a")));
        assert!(split.is_universal(&agent("b")));
    }

    #[test]
    fn turn_values_must_name_agents() {
        let turn = FiniteDomainVar::new("turn", ["a".into(), "c".into()]).unwrap();
        let err = Problem::new(
            vec![agent("a"), agent("b")],
            tiny_model(&["a", "b"]),
            tiny_actions(&["a", "b"], OwnerTag::Agent(agent("a"))),
            None,
            Mode::Distributed,
            Some(turn),
            Some(vec![agent("a")]),
            Formula::True,
        )
        .unwrap_err();
        assert_eq!(err, ProblemError::TurnValueNotAgent("c".into()));
    }

    #[test]
    fn undeclared_goal_agent_is_rejected() {
        let err = Problem::new(
            vec![agent("a")],
            tiny_model(&["a"]),
            tiny_actions(&["a"], OwnerTag::Controller),
            None,
            Mode::Controller,
            None,
            None,
            Formula::knows(agent("zz"), Formula::True),
        )
        .unwrap_err();
        assert_eq!(err, ProblemError::UndeclaredAgent(agent("zz")));
    }
}
