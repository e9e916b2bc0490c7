//! Problem-file parser and writer.
//!
//! A problem file is a sequence of blocks, each introduced by a keyword:
//! `agents`, `exists` (distributed mode), `model { ... }`, `actions
//! { ... }`, `mode`, `turnvar`, and `goal`. Worlds, actions, and agents
//! must be declared before they are referenced. Relations can be given as
//! `obs` partition classes (with unlisted elements forming singleton
//! classes) or as explicit `rel` pairs; for an agent described only by
//! `rel` lines, exactly the listed pairs are used, with no implicit
//! reflexive closure. The two styles cannot be mixed for one agent.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::formula::parse_formula_tokens;
use super::lexer::{ParseError, ParseResult, TokKind, TokenStream};
use crate::dynamics::{ActionId, ActionModel, FiniteDomainVar, OwnerTag};
use crate::logic::{Agent, Atom, EpistemicModel, Formula, PointedModel, WorldId};
use crate::problem::{Mode, Problem, ProblemError};

const BLOCK_KEYWORDS: [&str; 7] = [
    "agents", "exists", "model", "actions", "mode", "turnvar", "goal",
];

pub fn parse_problem(input: &str) -> ParseResult<Problem> {
    let mut ts = TokenStream::lex(input)?;
    let mut agents: Option<Vec<Agent>> = None;
    let mut exists: Option<(Vec<Agent>, Pos)> = None;
    let mut model: Option<PointedModel> = None;
    let mut actions: Option<(ActionModel, Option<ActionId>)> = None;
    let mut mode: Option<(Mode, Pos)> = None;
    let mut turnvar: Option<(FiniteDomainVar, Pos)> = None;
    let mut goal: Option<(Formula, Pos)> = None;

    while !ts.at_eof() {
        let pos = position(&ts);
        let word = match &ts.peek().kind {
            TokKind::Ident(word) => word.clone(),
            _ => return Err(ts.error_here("expected a block keyword")),
        };
        match word.as_str() {
            "agents" => {
                reject_duplicate(&ts, agents.is_some(), "agents")?;
                ts.next();
                agents = Some(parse_agent_list(&mut ts)?);
            }
            "exists" => {
                reject_duplicate(&ts, exists.is_some(), "exists")?;
                ts.next();
                let declared = declared_agents(&ts, &agents, "exists")?;
                let mut team = Vec::new();
                while let TokKind::Ident(name) = &ts.peek().kind {
                    if BLOCK_KEYWORDS.contains(&name.as_str()) {
                        break;
                    }
                    let apos = position(&ts);
                    let a = Agent::new(ts.expect_ident("agent name")?);
                    if !declared.contains(&a) {
                        return Err(ParseError::new(
                            apos.0,
                            apos.1,
                            format!("agent `{a}` in exists is not declared"),
                        ));
                    }
                    team.push(a);
                }
                exists = Some((team, pos));
            }
            "model" => {
                reject_duplicate(&ts, model.is_some(), "model")?;
                ts.next();
                let declared = declared_agents(&ts, &agents, "model")?;
                model = Some(parse_model_block(&mut ts, &declared)?);
            }
            "actions" => {
                reject_duplicate(&ts, actions.is_some(), "actions")?;
                ts.next();
                let declared = declared_agents(&ts, &agents, "actions")?;
                actions = Some(parse_actions_block(&mut ts, &declared)?);
            }
            "mode" => {
                reject_duplicate(&ts, mode.is_some(), "mode")?;
                ts.next();
                let word = ts.expect_ident("mode name")?;
                let m = match word.as_str() {
                    "plan" => Mode::Plan,
                    "controller" => Mode::Controller,
                    "distributed" => Mode::Distributed,
                    other => {
                        return Err(ParseError::new(
                            pos.0,
                            pos.1,
                            format!("unknown mode `{other}`, expected plan, controller or distributed"),
                        ))
                    }
                };
                mode = Some((m, pos));
            }
            "turnvar" => {
                reject_duplicate(&ts, turnvar.is_some(), "turnvar")?;
                ts.next();
                let name = ts.expect_ident("turn variable name")?;
                ts.expect_keyword("in", "turnvar declaration")?;
                ts.expect(&TokKind::LBrace, "turnvar domain")?;
                let mut domain = Vec::new();
                while !ts.eat(&TokKind::RBrace) {
                    domain.push(ts.expect_ident("turn value")?);
                }
                let var = FiniteDomainVar::new(name, domain)
                    .map_err(|e| ParseError::new(pos.0, pos.1, e.to_string()))?;
                turnvar = Some((var, pos));
            }
            "goal" => {
                reject_duplicate(&ts, goal.is_some(), "goal")?;
                ts.next();
                goal = Some((parse_formula_tokens(&mut ts)?, pos));
            }
            other => {
                return Err(ts.error_here(format!("unknown block keyword `{other}`")));
            }
        }
    }

    let eof = ParseError::new(ts.peek().line, ts.peek().col, "");
    let missing = |what: &str| {
        ParseError::new(eof.line, eof.col, format!("problem file has no {what} block"))
    };
    let agents = agents.ok_or_else(|| missing("agents"))?;
    let model = model.ok_or_else(|| missing("model"))?;
    let (mode, mode_pos) = mode.ok_or_else(|| missing("mode"))?;
    let (goal, goal_pos) = goal.ok_or_else(|| missing("goal"))?;
    let (actions, action_point) =
        actions.unwrap_or_else(|| (ActionModel::new(agents.iter().cloned()), None));

    let turn_pos = turnvar.as_ref().map(|(_, pos)| *pos);
    let exists_pos = exists.as_ref().map(|(_, pos)| *pos);
    Problem::new(
        agents,
        model,
        actions,
        action_point,
        mode,
        turnvar.map(|(v, _)| v),
        exists.map(|(team, _)| team),
        goal,
    )
    .map_err(|err| {
        let pos = match &err {
            ProblemError::TurnValueNotAgent(_) | ProblemError::DistributedOnly("turnvar") => {
                turn_pos.unwrap_or(mode_pos)
            }
            ProblemError::DistributedOnly(_) => exists_pos.unwrap_or(mode_pos),
            ProblemError::UndeclaredAgent(_) => goal_pos,
            _ => mode_pos,
        };
        ParseError::new(pos.0, pos.1, err.to_string())
    })
}

type Pos = (u32, u32);

fn position(ts: &TokenStream) -> Pos {
    (ts.peek().line, ts.peek().col)
}

fn reject_duplicate(ts: &TokenStream, present: bool, what: &str) -> ParseResult<()> {
    if present {
        return Err(ts.error_here(format!("duplicate {what} block")));
    }
    Ok(())
}

fn declared_agents<'a>(
    ts: &TokenStream,
    agents: &'a Option<Vec<Agent>>,
    block: &str,
) -> ParseResult<&'a [Agent]> {
    agents
        .as_deref()
        .ok_or_else(|| ts.error_here(format!("`{block}` requires an earlier agents block")))
}

fn parse_agent_list(ts: &mut TokenStream) -> ParseResult<Vec<Agent>> {
    let mut out = Vec::new();
    while let TokKind::Ident(name) = &ts.peek().kind {
        if BLOCK_KEYWORDS.contains(&name.as_str()) {
            break;
        }
        out.push(Agent::new(ts.expect_ident("agent name")?));
    }
    if out.is_empty() {
        return Err(ts.error_here("agents block declares no agents"));
    }
    Ok(out)
}

/// Which relation style each agent was declared with, to reject mixing and
/// to decide which agents get the implicit reflexive closure.
#[derive(Clone, Copy, PartialEq, Eq)]
enum RelStyle {
    Obs,
    Rel,
}

fn note_style(
    ts: &TokenStream,
    styles: &mut BTreeMap<Agent, RelStyle>,
    agent: &Agent,
    style: RelStyle,
) -> ParseResult<()> {
    match styles.insert(agent.clone(), style) {
        Some(previous) if previous != style => Err(ts.error_here(format!(
            "agent `{agent}` mixes obs and rel declarations"
        ))),
        _ => Ok(()),
    }
}

fn resolve_agent(ts: &mut TokenStream, declared: &[Agent]) -> ParseResult<Agent> {
    let pos = position(ts);
    let agent = Agent::new(ts.expect_ident("agent name")?);
    if !declared.contains(&agent) {
        return Err(ParseError::new(
            pos.0,
            pos.1,
            format!("agent `{agent}` is not declared"),
        ));
    }
    Ok(agent)
}

fn parse_model_block(ts: &mut TokenStream, declared: &[Agent]) -> ParseResult<PointedModel> {
    ts.expect(&TokKind::LBrace, "model block")?;
    let mut m = EpistemicModel::new(declared.iter().cloned());
    let mut styles: BTreeMap<Agent, RelStyle> = BTreeMap::new();
    let mut point: Option<WorldId> = None;
    loop {
        if ts.eat(&TokKind::RBrace) {
            break;
        }
        if ts.eat_keyword("world") {
            let pos = position(ts);
            let id = WorldId::new(ts.expect_ident("world name")?);
            ts.expect(&TokKind::LBrace, "world atom list")?;
            let mut atoms = Vec::new();
            while !ts.eat(&TokKind::RBrace) {
                atoms.push(Atom::new(ts.expect_ident("atom name")?));
            }
            m.add_world(id, atoms)
                .map_err(|e| ParseError::new(pos.0, pos.1, e.to_string()))?;
        } else if ts.eat_keyword("obs") {
            let agent = resolve_agent(ts, declared)?;
            note_style(ts, &mut styles, &agent, RelStyle::Obs)?;
            ts.expect(&TokKind::LBrace, "obs class")?;
            let mut class = Vec::new();
            while !ts.eat(&TokKind::RBrace) {
                class.push(known_world(ts, &m)?);
            }
            m.add_obs_class(&agent, &class)
                .map_err(|e| ts.error_here(e.to_string()))?;
        } else if ts.eat_keyword("rel") {
            let agent = resolve_agent(ts, declared)?;
            note_style(ts, &mut styles, &agent, RelStyle::Rel)?;
            while ts.eat(&TokKind::LParen) {
                let from = known_world(ts, &m)?;
                let to = known_world(ts, &m)?;
                ts.expect(&TokKind::RParen, "rel pair")?;
                m.add_edge(&agent, &from, &to)
                    .map_err(|e| ts.error_here(e.to_string()))?;
            }
        } else if ts.eat_keyword("point") {
            if point.is_some() {
                return Err(ts.error_here("duplicate point declaration"));
            }
            point = Some(known_world(ts, &m)?);
        } else {
            return Err(ts.error_here(
                "expected world, obs, rel, point or `}` in model block",
            ));
        }
    }
    let worlds: Vec<WorldId> = m.worlds().cloned().collect();
    for agent in declared {
        if styles.get(agent) == Some(&RelStyle::Rel) {
            continue;
        }
        for w in &worlds {
            m.add_edge(agent, w, w).expect("declared agent and world");
        }
    }
    let Some(point) = point else {
        return Err(ts.error_here("model block has no point declaration"));
    };
    PointedModel::new(m, point).map_err(|e| ts.error_here(e.to_string()))
}

fn known_world(ts: &mut TokenStream, m: &EpistemicModel) -> ParseResult<WorldId> {
    let pos = position(ts);
    let id = WorldId::new(ts.expect_ident("world name")?);
    if !m.has_world(&id) {
        return Err(ParseError::new(
            pos.0,
            pos.1,
            format!("world `{id}` is not declared"),
        ));
    }
    Ok(id)
}

fn parse_actions_block(
    ts: &mut TokenStream,
    declared: &[Agent],
) -> ParseResult<(ActionModel, Option<ActionId>)> {
    ts.expect(&TokKind::LBrace, "actions block")?;
    let mut a = ActionModel::new(declared.iter().cloned());
    let mut styles: BTreeMap<Agent, RelStyle> = BTreeMap::new();
    let mut point: Option<ActionId> = None;
    loop {
        if ts.eat(&TokKind::RBrace) {
            break;
        }
        if ts.eat_keyword("action") {
            parse_action_decl(ts, declared, &mut a)?;
        } else if ts.eat_keyword("obs") {
            let agent = resolve_agent(ts, declared)?;
            note_style(ts, &mut styles, &agent, RelStyle::Obs)?;
            ts.expect(&TokKind::LBrace, "obs class")?;
            let mut class = Vec::new();
            while !ts.eat(&TokKind::RBrace) {
                class.push(known_action(ts, &a)?);
            }
            a.add_obs_class(&agent, &class)
                .map_err(|e| ts.error_here(e.to_string()))?;
        } else if ts.eat_keyword("rel") {
            let agent = resolve_agent(ts, declared)?;
            note_style(ts, &mut styles, &agent, RelStyle::Rel)?;
            while ts.eat(&TokKind::LParen) {
                let from = known_action(ts, &a)?;
                let to = known_action(ts, &a)?;
                ts.expect(&TokKind::RParen, "rel pair")?;
                a.add_edge(&agent, &from, &to)
                    .map_err(|e| ts.error_here(e.to_string()))?;
            }
        } else if ts.eat_keyword("point") {
            if point.is_some() {
                return Err(ts.error_here("duplicate point declaration"));
            }
            point = Some(known_action(ts, &a)?);
        } else {
            return Err(ts.error_here(
                "expected action, obs, rel, point or `}` in actions block",
            ));
        }
    }
    let ids: Vec<ActionId> = a.actions().cloned().collect();
    for agent in declared {
        if styles.get(agent) == Some(&RelStyle::Rel) {
            continue;
        }
        for id in &ids {
            a.add_edge(agent, id, id).expect("declared agent and action");
        }
    }
    Ok((a, point))
}

fn parse_action_decl(
    ts: &mut TokenStream,
    declared: &[Agent],
    a: &mut ActionModel,
) -> ParseResult<()> {
    let pos = position(ts);
    let id = ActionId::new(ts.expect_ident("action name")?);
    ts.expect_keyword("owner", "action declaration")?;
    let owner_pos = position(ts);
    let owner = match ts.expect_ident("owner tag")?.as_str() {
        "ctr" => OwnerTag::Controller,
        "env" => OwnerTag::Environment,
        name => {
            let agent = Agent::new(name);
            if !declared.contains(&agent) {
                return Err(ParseError::new(
                    owner_pos.0,
                    owner_pos.1,
                    format!("owner `{agent}` is neither ctr, env nor a declared agent"),
                ));
            }
            OwnerTag::Agent(agent)
        }
    };
    a.add_action(id.clone(), Formula::True, owner)
        .map_err(|e| ParseError::new(pos.0, pos.1, e.to_string()))?;
    ts.expect(&TokKind::LBrace, "action body")?;
    let mut saw_pre = false;
    loop {
        if ts.eat(&TokKind::RBrace) {
            break;
        }
        if ts.eat_keyword("pre") {
            if saw_pre {
                return Err(ts.error_here(format!("action `{id}` has two pre declarations")));
            }
            saw_pre = true;
            let pre_pos = position(ts);
            let f = parse_formula_tokens(ts)?;
            for agent in f.agents() {
                if !declared.contains(&agent) {
                    return Err(ParseError::new(
                        pre_pos.0,
                        pre_pos.1,
                        format!("agent `{agent}` is not declared"),
                    ));
                }
            }
            ts.expect(&TokKind::Semi, "pre declaration")?;
            a.replace_pre(&id, f).expect("action was just declared");
        } else if ts.eat_keyword("post") {
            let post_pos = position(ts);
            let atom = Atom::new(ts.expect_ident("postcondition atom")?);
            ts.expect(&TokKind::Assign, "postcondition")?;
            let f = parse_formula_tokens(ts)?;
            ts.expect(&TokKind::Semi, "postcondition")?;
            a.set_post(&id, atom, f)
                .map_err(|e| ParseError::new(post_pos.0, post_pos.1, e.to_string()))?;
        } else {
            return Err(ts.error_here("expected pre, post or `}` in action body"));
        }
    }
    Ok(())
}

fn known_action(ts: &mut TokenStream, a: &ActionModel) -> ParseResult<ActionId> {
    let pos = position(ts);
    let id = ActionId::new(ts.expect_ident("action name")?);
    if !a.has_action(&id) {
        return Err(ParseError::new(
            pos.0,
            pos.1,
            format!("action `{id}` is not declared"),
        ));
    }
    Ok(id)
}

/// Renders a problem in the same syntax [`parse_problem`] reads, with all
/// relations written as explicit `rel` pairs. Parsing the output
/// reconstructs the problem exactly.
///
/// A per-agent owner whose agent is literally named `ctr` or `env` cannot
/// be distinguished from the two-sided tags in this syntax; such problems
/// are expressible only programmatically.
pub fn write_problem(p: &Problem) -> String {
    let mut out = String::new();
    let agents: Vec<String> = p.agents().iter().map(|a| a.to_string()).collect();
    writeln!(out, "agents {}", agents.join(" ")).unwrap();
    if let Some(split) = p.split() {
        let team: Vec<String> = split.existential().iter().map(|a| a.to_string()).collect();
        writeln!(out, "exists {}", team.join(" ")).unwrap();
    }

    writeln!(out, "model {{").unwrap();
    let model = p.model().model();
    for w in model.worlds() {
        let atoms: Vec<String> = model
            .world_atoms(w)
            .expect("iterated world")
            .iter()
            .map(|a| a.to_string())
            .collect();
        writeln!(out, "  world {w} {{ {} }}", atoms.join(" ")).unwrap();
    }
    for agent in p.agents() {
        let edges = model.edges(agent).expect("declared agent");
        if edges.is_empty() {
            continue;
        }
        let pairs: Vec<String> = edges.iter().map(|(x, y)| format!("({x} {y})")).collect();
        writeln!(out, "  rel {agent} {}", pairs.join(" ")).unwrap();
    }
    writeln!(out, "  point {}", p.model().point()).unwrap();
    writeln!(out, "}}").unwrap();

    let actions = p.actions();
    if actions.action_count() > 0 {
        writeln!(out, "actions {{").unwrap();
        for id in actions.actions() {
            let owner = actions.owner(id).expect("iterated action");
            writeln!(out, "  action {id} owner {owner} {{").unwrap();
            writeln!(out, "    pre {};", actions.pre(id).expect("iterated action")).unwrap();
            for (atom, f) in actions.post_map(id).expect("iterated action") {
                writeln!(out, "    post {atom} := {f};").unwrap();
            }
            writeln!(out, "  }}").unwrap();
        }
        for agent in p.agents() {
            let edges = actions.edges(agent);
            if edges.is_empty() {
                continue;
            }
            let pairs: Vec<String> = edges.iter().map(|(x, y)| format!("({x} {y})")).collect();
            writeln!(out, "  rel {agent} {}", pairs.join(" ")).unwrap();
        }
        if let Some(point) = p.action_point() {
            writeln!(out, "  point {point}").unwrap();
        }
        writeln!(out, "}}").unwrap();
    }

    writeln!(out, "mode {}", p.mode()).unwrap();
    if let Some(turn) = p.turnvar() {
        writeln!(out, "turnvar {} in {{ {} }}", turn.name(), turn.domain().join(" ")).unwrap();
    }
    writeln!(out, "goal {}", p.goal()).unwrap();
    out
}
