//! A common interface over explicit protocols and protocols whose states and
//! transitions are generated on demand.
//!
//! The constructions that remove leaders or helpers, and the final product,
//! have far too many states to list. They implement [`Population`] by
//! producing, for any one or two agent states, the moves those agents can
//! make together. Exploration and simulation only ever ask about states that
//! actually occur.

use std::fmt::Debug;
use std::hash::Hash;

use smallvec::SmallVec;

use crate::error::Result;
use crate::formula::Valuation;
use crate::protocol::{Config, Multiset, Opinion, Protocol, StateIdx};

/// One interaction: each entry moves one agent from `.0` to `.1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Move<S> {
    pub agents: SmallVec<[(S, S); 2]>,
    pub rule: u32,
}

impl<S: Clone + Ord> Move<S> {
    pub fn new(agents: impl IntoIterator<Item = (S, S)>, rule: u32) -> Move<S> {
        Move { agents: agents.into_iter().collect(), rule }
    }

    pub fn pre(&self) -> Multiset<S> {
        Multiset::from_elems(self.agents.iter().map(|a| a.0.clone()))
    }

    pub fn post(&self) -> Multiset<S> {
        Multiset::from_elems(self.agents.iter().map(|a| a.1.clone()))
    }

    pub fn is_identity(&self) -> bool {
        self.pre() == self.post()
    }

    /// Canonical effect, used to drop duplicate moves.
    pub fn effect(&self) -> (Multiset<S>, Multiset<S>) {
        (self.pre(), self.post())
    }
}

pub trait Population: Sync {
    type State: Clone + Ord + Hash + Debug + Send + Sync;

    fn variables(&self) -> &[String];

    fn initial_config(&self, v: &Valuation) -> Result<Config<Self::State>>;

    fn opinion(&self, s: &Self::State) -> Opinion;

    fn render(&self, s: &Self::State) -> String;

    /// All non-identity moves in which exactly the given agents (one or two)
    /// participate.
    fn local_moves(&self, agents: &[Self::State]) -> Vec<Move<Self::State>>;

    fn rule_name(&self, rule: u32) -> String;

    /// True when [`Population::moves`] is cheaper than the cached pairwise
    /// enumeration, e.g. for indexed explicit protocols.
    fn direct_moves(&self) -> bool {
        false
    }

    /// Distinct non-identity moves enabled in `c`.
    fn moves(&self, c: &Config<Self::State>) -> Vec<Move<Self::State>> {
        collect_moves(c, |g| self.local_moves(g))
    }

    fn output_of(&self, c: &Config<Self::State>) -> Opinion {
        Opinion::consensus(c.support().map(|s| self.opinion(s)))
    }

    fn apply(&self, c: &Config<Self::State>, m: &Move<Self::State>) -> Config<Self::State> {
        let mut d = c.clone();
        for (a, _) in &m.agents {
            assert!(d.remove(a, 1), "move not enabled");
        }
        for (_, b) in &m.agents {
            d.insert(b.clone(), 1);
        }
        d
    }
}

/// Enumerates single agents and agent pairs of `c`, deduplicating moves with
/// the same effect.
pub fn collect_moves<S, F, V>(c: &Config<S>, mut local: F) -> Vec<Move<S>>
where
    S: Clone + Ord + Hash,
    F: FnMut(&[S]) -> V,
    V: AsRef<[Move<S>]>,
{
    let items = c.items();
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut push = |ms: &[Move<S>], out: &mut Vec<Move<S>>| {
        for m in ms {
            if seen.insert(m.effect()) {
                out.push(m.clone());
            }
        }
    };
    for (i, (a, na)) in items.iter().enumerate() {
        push(local(std::slice::from_ref(a)).as_ref(), &mut out);
        if *na >= 2 {
            push(local(&[a.clone(), a.clone()]).as_ref(), &mut out);
        }
        for (b, _) in &items[i + 1..] {
            push(local(&[a.clone(), b.clone()]).as_ref(), &mut out);
        }
    }
    out
}

impl Population for Protocol {
    type State = StateIdx;

    fn variables(&self) -> &[String] {
        &self.variables
    }

    fn initial_config(&self, v: &Valuation) -> Result<Config<StateIdx>> {
        Protocol::initial_config(self, v)
    }

    fn opinion(&self, s: &StateIdx) -> Opinion {
        self.outputs[*s as usize]
    }

    fn render(&self, s: &StateIdx) -> String {
        self.state_name(*s).to_string()
    }

    fn local_moves(&self, agents: &[StateIdx]) -> Vec<Move<StateIdx>> {
        let ids = match agents {
            [a] => self.single_transitions(*a),
            [a, b] => self.pair_transitions(*a, *b),
            _ => &[],
        };
        ids.iter()
            .map(|k| {
                let t = &self.transitions()[*k as usize];
                Move::new(t.pre.iter().copied().zip(t.post.iter().copied()), *k)
            })
            .collect()
    }

    fn rule_name(&self, rule: u32) -> String {
        self.transitions()[rule as usize].label.clone()
    }

    fn direct_moves(&self) -> bool {
        true
    }

    fn moves(&self, c: &Config<StateIdx>) -> Vec<Move<StateIdx>> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for k in self.enabled_transitions(c) {
            let t = &self.transitions()[k];
            let m = Move::new(t.pre.iter().copied().zip(t.post.iter().copied()), k as u32);
            if seen.insert(m.effect()) {
                out.push(m);
            }
        }
        out
    }
}

/// A population whose initial configurations are built from one state per
/// input variable plus a fixed multiset of leaders.
pub trait Agents: Population {
    fn input_state(&self, x: usize) -> Self::State;

    fn leader_states(&self) -> Vec<Self::State>;
}

/// `L + Σ v(x)·I(x)`, rejecting unknown variables and populations below two.
pub fn initial_from<P: Agents + ?Sized>(sys: &P, v: &Valuation) -> Result<Config<P::State>> {
    let vars = sys.variables();
    if let Some(x) = v.keys().find(|x| !vars.contains(x)) {
        return Err(crate::error::Error::VariableMismatch(format!("unknown variable `{x}`")));
    }
    let mut c = Multiset::from_elems(sys.leader_states());
    for (i, x) in vars.iter().enumerate() {
        let n = v.get(x).copied().unwrap_or(0);
        if n > 0 {
            c.insert(sys.input_state(i), n as u32);
        }
    }
    if c.size() < 2 {
        return Err(crate::error::Error::PopulationTooSmall(c.size()));
    }
    Ok(c)
}

impl Agents for Protocol {
    fn input_state(&self, x: usize) -> StateIdx {
        self.inputs[x]
    }

    fn leader_states(&self) -> Vec<StateIdx> {
        self.leaders.elems().copied().collect()
    }
}

/// Post-states of `m` listed in the order of `pre`, matching agents by
/// their pre-state.
pub fn posts_in_order<S: Clone + PartialEq>(m: &Move<S>, pre: &[S]) -> Vec<S> {
    let mut used = [false; 8];
    pre.iter()
        .map(|s| {
            let j = (0..m.agents.len()).find(|&j| !used[j] && m.agents[j].0 == *s).expect("agent of move");
            used[j] = true;
            m.agents[j].1.clone()
        })
        .collect()
}
