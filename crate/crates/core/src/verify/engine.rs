//! State interning and memoized move generation shared by the explorer and
//! the simulator.

use std::collections::HashMap;
use std::rc::Rc;

use smallvec::SmallVec;

use crate::protocol::{Config, Multiset};
use crate::system::{collect_moves, Move, Population};

pub type Id = u32;

pub struct Engine<'a, P: Population + ?Sized> {
    pub system: &'a P,
    states: Vec<P::State>,
    ids: HashMap<P::State, Id>,
    local: HashMap<SmallVec<[Id; 2]>, Rc<Vec<Move<Id>>>>,
}

impl<'a, P: Population + ?Sized> Engine<'a, P> {
    pub fn new(system: &'a P) -> Self {
        Engine { system, states: Vec::new(), ids: HashMap::new(), local: HashMap::new() }
    }

    pub fn intern(&mut self, s: &P::State) -> Id {
        if let Some(i) = self.ids.get(s) {
            return *i;
        }
        let i = self.states.len() as Id;
        self.states.push(s.clone());
        self.ids.insert(s.clone(), i);
        i
    }

    pub fn state(&self, i: Id) -> &P::State {
        &self.states[i as usize]
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn intern_config(&mut self, c: &Config<P::State>) -> Config<Id> {
        Multiset::from_counts(c.items().iter().map(|(s, n)| (self.intern(s), *n)).collect::<Vec<_>>())
    }

    pub fn resolve_config(&self, c: &Config<Id>) -> Config<P::State> {
        c.map(|i| self.states[*i as usize].clone())
    }

    fn intern_move(&mut self, m: &Move<P::State>) -> Move<Id> {
        Move { agents: m.agents.iter().map(|(a, b)| (self.intern(a), self.intern(b))).collect(), rule: m.rule }
    }

    fn local_moves(&mut self, group: &[Id]) -> Rc<Vec<Move<Id>>> {
        if let Some(v) = self.local.get(group) {
            return v.clone();
        }
        let states: Vec<P::State> = group.iter().map(|i| self.states[*i as usize].clone()).collect();
        let ms = self.system.local_moves(&states);
        let v: Vec<Move<Id>> = ms.iter().map(|m| self.intern_move(m)).collect();
        let v = Rc::new(v);
        self.local.insert(group.iter().copied().collect(), v.clone());
        v
    }

    /// Distinct non-identity moves enabled in `c`.
    pub fn moves(&mut self, c: &Config<Id>) -> Vec<Move<Id>> {
        if self.system.direct_moves() {
            let full = self.resolve_config(c);
            let ms = self.system.moves(&full);
            return ms.iter().map(|m| self.intern_move(m)).collect();
        }
        collect_moves(c, |g| RcSlice(self.local_moves(g)))
    }

    pub fn opinion_of(&self, c: &Config<Id>) -> crate::protocol::Opinion {
        crate::protocol::Opinion::consensus(c.support().map(|i| self.system.opinion(&self.states[*i as usize])))
    }
}

pub fn apply(c: &Config<Id>, m: &Move<Id>) -> Config<Id> {
    let mut d = c.clone();
    for (a, _) in &m.agents {
        assert!(d.remove(a, 1), "move not enabled");
    }
    for (_, b) in &m.agents {
        d.insert(*b, 1);
    }
    d
}

struct RcSlice<T>(Rc<Vec<T>>);

impl<T> AsRef<[T]> for RcSlice<T> {
    fn as_ref(&self) -> &[T] {
        &self.0
    }
}

impl<P: Population + ?Sized> Engine<'_, P> {
    pub fn into_states(self) -> Vec<P::State> {
        self.states
    }
}
