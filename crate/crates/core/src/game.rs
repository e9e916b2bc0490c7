//! Two-player reachability arenas and the backward-induction solver shared
//! by the synthesis methods.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::logic::{Agent, Atom};

/// The two sides of a reachability game. `Zero` moves toward the goal,
/// `One` against it.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Player {
    Zero,
    One,
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Player::Zero => "P0",
            Player::One => "P1",
        })
    }
}

/// What a vertex without outgoing edges means for the side that is stuck
/// there. `Lose` treats being unable to move as losing for Player 0 even at
/// Player-1 vertices (no move for the scheduled side fails the play);
/// `Vacuous` gives deadlocked Player-1 vertices to Player 0.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum DeadlockMode {
    #[default]
    Lose,
    Vacuous,
}

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum GameError {
    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("vertex index {0} out of range")]
    BadIndex(usize),
    #[error("no initial vertex set")]
    NoInitial,
}

pub type GameResult<T> = Result<T, GameError>;

/// Index of a vertex inside its arena.
pub type VertexIx = usize;

#[derive(Clone, PartialEq, Eq, Debug)]
struct Vertex {
    name: String,
    owner: Player,
    atoms: BTreeSet<Atom>,
}

/// A finite two-player game graph with per-agent indistinguishability
/// relations and an atomic valuation on vertices.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GameArena {
    vertices: Vec<Vertex>,
    by_name: BTreeMap<String, VertexIx>,
    initial: Option<VertexIx>,
    edges: Vec<BTreeSet<VertexIx>>,
    relations: BTreeMap<Agent, Vec<BTreeSet<VertexIx>>>,
}

impl GameArena {
    pub fn new() -> Self {
        GameArena {
            vertices: Vec::new(),
            by_name: BTreeMap::new(),
            initial: None,
            edges: Vec::new(),
            relations: BTreeMap::new(),
        }
    }

    pub fn add_vertex(
        &mut self,
        name: impl Into<String>,
        owner: Player,
        atoms: impl IntoIterator<Item = Atom>,
    ) -> GameResult<VertexIx> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(GameError::DuplicateVertex(name));
        }
        let ix = self.vertices.len();
        self.by_name.insert(name.clone(), ix);
        self.vertices.push(Vertex {
            name,
            owner,
            atoms: atoms.into_iter().collect(),
        });
        self.edges.push(BTreeSet::new());
        for succ in self.relations.values_mut() {
            succ.push(BTreeSet::new());
        }
        Ok(ix)
    }

    pub fn set_initial(&mut self, v: VertexIx) -> GameResult<()> {
        self.check(v)?;
        self.initial = Some(v);
        Ok(())
    }

    pub fn add_edge(&mut self, from: VertexIx, to: VertexIx) -> GameResult<()> {
        self.check(from)?;
        self.check(to)?;
        self.edges[from].insert(to);
        Ok(())
    }

    pub fn add_relation(&mut self, agent: &Agent, from: VertexIx, to: VertexIx) -> GameResult<()> {
        self.check(from)?;
        self.check(to)?;
        let succ = self
            .relations
            .entry(agent.clone())
            .or_insert_with(|| vec![BTreeSet::new(); self.vertices.len()]);
        succ[from].insert(to);
        Ok(())
    }

    fn check(&self, v: VertexIx) -> GameResult<()> {
        if v < self.vertices.len() {
            Ok(())
        } else {
            Err(GameError::BadIndex(v))
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn initial(&self) -> GameResult<VertexIx> {
        self.initial.ok_or(GameError::NoInitial)
    }

    pub fn name(&self, v: VertexIx) -> &str {
        &self.vertices[v].name
    }

    pub fn owner(&self, v: VertexIx) -> Player {
        self.vertices[v].owner
    }

    pub fn atoms(&self, v: VertexIx) -> &BTreeSet<Atom> {
        &self.vertices[v].atoms
    }

    pub fn lookup(&self, name: &str) -> GameResult<VertexIx> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| GameError::UnknownVertex(name.to_string()))
    }

    pub fn successors(&self, v: VertexIx) -> &BTreeSet<VertexIx> {
        &self.edges[v]
    }

    /// Relation successors of `v` under `agent`; empty for agents the arena
    /// does not mention.
    pub fn related(&self, agent: &Agent, v: VertexIx) -> BTreeSet<VertexIx> {
        self.relations
            .get(agent)
            .map(|succ| succ[v].clone())
            .unwrap_or_default()
    }

    pub fn agents(&self) -> impl Iterator<Item = &Agent> {
        self.relations.keys()
    }
}

impl Default for GameArena {
    fn default() -> Self {
        GameArena::new()
    }
}

/// Result of solving a reachability objective: the set of vertices from
/// which Player 0 forces the goal, and a positional choice of successor for
/// each winning Player-0 vertex that needs a move.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Attractor {
    pub winning: BTreeSet<VertexIx>,
    pub strategy: BTreeMap<VertexIx, VertexIx>,
}

impl Attractor {
    pub fn initial_wins(&self, g: &GameArena) -> GameResult<bool> {
        Ok(self.winning.contains(&g.initial()?))
    }
}

/// Backward fixpoint of the vertices from which Player 0 can force a visit
/// to the goal set. Goal vertices are winning outright. A Player-0 vertex
/// joins when some successor is winning (the recorded move, first such
/// successor in index order); a Player-1 vertex joins when all of its
/// successors are winning, where a successor-free Player-1 vertex counts as
/// losing under [`DeadlockMode::Lose`] and as winning under
/// [`DeadlockMode::Vacuous`].
pub fn solve_attractor(
    g: &GameArena,
    goal: impl Fn(VertexIx) -> bool,
    mode: DeadlockMode,
) -> Attractor {
    let n = g.vertex_count();
    let mut preds: Vec<Vec<VertexIx>> = vec![Vec::new(); n];
    for v in 0..n {
        for &u in g.successors(v) {
            preds[u].push(v);
        }
    }

    let mut winning: BTreeSet<VertexIx> = (0..n).filter(|&v| goal(v)).collect();
    let mut strategy = BTreeMap::new();
    let mut pending: Vec<usize> = (0..n).map(|v| g.successors(v).len()).collect();
    let mut queue: VecDeque<VertexIx> = winning.iter().copied().collect();

    if mode == DeadlockMode::Vacuous {
        for v in 0..n {
            if g.owner(v) == Player::One && pending[v] == 0 && winning.insert(v) {
                queue.push_back(v);
            }
        }
    }

    while let Some(w) = queue.pop_front() {
        for &u in &preds[w] {
            if winning.contains(&u) {
                continue;
            }
            match g.owner(u) {
                Player::Zero => {
                    winning.insert(u);
                    strategy.insert(u, w);
                    queue.push_back(u);
                }
                Player::One => {
                    pending[u] -= 1;
                    if pending[u] == 0 {
                        winning.insert(u);
                        queue.push_back(u);
                    }
                }
            }
        }
    }

    Attractor { winning, strategy }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arena(spec: &[(&str, Player)], edges: &[(usize, usize)]) -> GameArena {
        let mut g = GameArena::new();
        for (name, owner) in spec {
            g.add_vertex(*name, *owner, []).unwrap();
        }
        for &(a, b) in edges {
            g.add_edge(a, b).unwrap();
        }
        g.set_initial(0).unwrap();
        g
    }

    #[test]
    fn goal_at_initial_wins_immediately() {
        let g = arena(&[("v0", Player::Zero)], &[]);
        let att = solve_attractor(&g, |v| v == 0, DeadlockMode::Lose);
        assert!(att.initial_wins(&g).unwrap());
        assert!(att.strategy.is_empty());
    }

    #[test]
    fn forced_chain_is_winning() {
        let g = arena(
            &[
                ("v0", Player::Zero),
                ("v1", Player::One),
                ("v2", Player::Zero),
                ("v3", Player::Zero),
            ],
            &[(0, 1), (1, 2), (2, 3)],
        );
        let att = solve_attractor(&g, |v| v == 3, DeadlockMode::Lose);
        assert_eq!(att.winning, [0, 1, 2, 3].into());
        assert_eq!(att.strategy, [(0, 1), (2, 3)].into());
    }

    #[test]
    fn opponent_escape_defeats_the_chain() {
        let g = arena(
            &[
                ("v0", Player::Zero),
                ("v1", Player::One),
                ("v2", Player::Zero),
                ("sink", Player::Zero),
            ],
            &[(0, 1), (1, 2), (1, 3), (3, 3)],
        );
        let att = solve_attractor(&g, |v| v == 2, DeadlockMode::Lose);
        assert_eq!(att.winning, [2].into());
    }

    #[test]
    fn deadlocked_opponent_vertex_depends_on_mode() {
        let g = arena(
            &[("v0", Player::Zero), ("stuck", Player::One)],
            &[(0, 1)],
        );
        let lose = solve_attractor(&g, |_| false, DeadlockMode::Lose);
        assert!(lose.winning.is_empty());
        let vacuous = solve_attractor(&g, |_| false, DeadlockMode::Vacuous);
        assert_eq!(vacuous.winning, [0, 1].into());
        assert_eq!(vacuous.strategy, [(0, 1)].into());
    }

    #[test]
    fn goalless_cycle_is_losing() {
        let g = arena(
            &[("v0", Player::Zero), ("v1", Player::Zero), ("goal", Player::Zero)],
            &[(0, 1), (1, 0)],
        );
        let att = solve_attractor(&g, |v| v == 2, DeadlockMode::Lose);
        assert!(!att.initial_wins(&g).unwrap());
    }

    #[test]
    fn own_deadlock_is_always_losing() {
        let g = arena(&[("v0", Player::Zero), ("v1", Player::Zero)], &[(0, 1)]);
        for mode in [DeadlockMode::Lose, DeadlockMode::Vacuous] {
            let att = solve_attractor(&g, |_| false, mode);
            assert!(att.winning.is_empty(), "{mode:?}");
        }
    }

    #[test]
    fn duplicate_and_unknown_vertices_are_rejected() {
        let mut g = GameArena::new();
        g.add_vertex("v", Player::Zero, []).unwrap();
        assert_eq!(
            g.add_vertex("v", Player::One, []),
            Err(GameError::DuplicateVertex("v".into()))
        );
        assert_eq!(g.lookup("w"), Err(GameError::UnknownVertex("w".into())));
        assert_eq!(g.initial(), Err(GameError::NoInitial));
    }
}
