//! Population protocols with explicit state and transition sets.
//!
//! A transition lists its participating agents in order: agent `j` moves from
//! `pre[j]` to `post[j]`. Firing only depends on the multisets, but the
//! ordering lets constructions that annotate agents (tags, input origins)
//! keep each annotation attached to the right agent.

pub mod convert;
pub mod fixtures;
pub mod json;
pub mod multiset;
pub mod name;

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::Valuation;
pub use multiset::Multiset;
pub use name::Name;

pub type StateIdx = u32;
pub type Config<S> = Multiset<S>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Opinion {
    Zero,
    One,
    Bot,
}

impl Opinion {
    pub fn from_bool(b: bool) -> Opinion {
        if b {
            Opinion::One
        } else {
            Opinion::Zero
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Opinion::Zero => Some(false),
            Opinion::One => Some(true),
            Opinion::Bot => None,
        }
    }

    pub fn negate(self) -> Opinion {
        match self {
            Opinion::Zero => Opinion::One,
            Opinion::One => Opinion::Zero,
            Opinion::Bot => Opinion::Bot,
        }
    }

    /// Consensus of a collection of opinions: `b` if some agent says `b` and
    /// none says the opposite, `Bot` otherwise.
    pub fn consensus<I: IntoIterator<Item = Opinion>>(ops: I) -> Opinion {
        let (mut zero, mut one) = (false, false);
        for o in ops {
            match o {
                Opinion::Zero => zero = true,
                Opinion::One => one = true,
                Opinion::Bot => {}
            }
        }
        match (zero, one) {
            (true, false) => Opinion::Zero,
            (false, true) => Opinion::One,
            _ => Opinion::Bot,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flavor {
    General,
    Simple,
    Halting,
    FullOutput,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Transition {
    pub pre: Vec<StateIdx>,
    pub post: Vec<StateIdx>,
    pub label: String,
}

impl Transition {
    pub fn width(&self) -> usize {
        self.pre.len()
    }

    pub fn pre_ms(&self) -> Multiset<StateIdx> {
        Multiset::from_elems(self.pre.iter().copied())
    }

    pub fn post_ms(&self) -> Multiset<StateIdx> {
        Multiset::from_elems(self.post.iter().copied())
    }

    pub fn is_identity(&self) -> bool {
        self.pre_ms() == self.post_ms()
    }
}

#[derive(Default)]
struct Index {
    by_min: Vec<Vec<u32>>,
    singles: Vec<Vec<u32>>,
    pairs: HashMap<(StateIdx, StateIdx), Vec<u32>>,
    pre: Vec<Multiset<StateIdx>>,
    post: Vec<Multiset<StateIdx>>,
}

#[derive(Clone, Debug)]
pub struct Protocol {
    states: Vec<String>,
    lookup: HashMap<String, StateIdx>,
    transitions: Vec<Transition>,
    seen: HashSet<(Vec<StateIdx>, Vec<StateIdx>)>,
    pub leaders: Multiset<StateIdx>,
    pub variables: Vec<String>,
    pub inputs: Vec<StateIdx>,
    pub outputs: Vec<Opinion>,
    pub flavor: Flavor,
    index: OnceLock<std::sync::Arc<Index>>,
}

impl std::fmt::Debug for Index {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Index")
    }
}

impl PartialEq for Protocol {
    fn eq(&self, other: &Self) -> bool {
        self.states == other.states
            && self.transitions == other.transitions
            && self.leaders == other.leaders
            && self.variables == other.variables
            && self.inputs == other.inputs
            && self.outputs == other.outputs
            && self.flavor == other.flavor
    }
}

impl Protocol {
    /// Empty protocol over `variables`; inputs must be set before use.
    pub fn new(variables: Vec<String>, flavor: Flavor) -> Protocol {
        let n = variables.len();
        Protocol {
            states: Vec::new(),
            lookup: HashMap::new(),
            transitions: Vec::new(),
            seen: HashSet::new(),
            leaders: Multiset::new(),
            variables,
            inputs: vec![StateIdx::MAX; n],
            outputs: Vec::new(),
            flavor,
            index: OnceLock::new(),
        }
    }

    /// Interns a state and returns its index; new states output `Bot`.
    pub fn add_state(&mut self, name: impl Into<String>) -> StateIdx {
        let name = name.into();
        if let Some(&i) = self.lookup.get(&name) {
            return i;
        }
        let i = self.states.len() as StateIdx;
        self.lookup.insert(name.clone(), i);
        self.states.push(name);
        self.outputs.push(Opinion::Bot);
        self.index = OnceLock::new();
        i
    }

    pub fn state(&self, name: &str) -> Option<StateIdx> {
        self.lookup.get(name).copied()
    }

    pub fn expect_state(&self, name: &str) -> Result<StateIdx> {
        self.state(name).ok_or_else(|| Error::UnknownState(name.to_string()))
    }

    pub fn state_name(&self, s: StateIdx) -> &str {
        &self.states[s as usize]
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn set_output(&mut self, s: StateIdx, o: Opinion) {
        self.outputs[s as usize] = o;
    }

    pub fn set_input(&mut self, var: &str, s: StateIdx) -> Result<()> {
        let i = self.var_index(var)?;
        self.inputs[i] = s;
        Ok(())
    }

    pub fn var_index(&self, var: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|x| x == var)
            .ok_or_else(|| Error::VariableMismatch(format!("unknown variable `{var}`")))
    }

    pub fn input_of(&self, var: &str) -> Result<StateIdx> {
        Ok(self.inputs[self.var_index(var)?])
    }

    pub fn add_leader(&mut self, s: StateIdx, n: u32) {
        self.leaders.insert(s, n);
    }

    /// Adds a transition unless it is an identity or a duplicate.
    pub fn add_transition(&mut self, pre: Vec<StateIdx>, post: Vec<StateIdx>, label: impl Into<String>) -> bool {
        assert_eq!(pre.len(), post.len(), "transition width mismatch");
        assert!(!pre.is_empty(), "empty transition");
        if Multiset::from_elems(pre.iter().copied()) == Multiset::from_elems(post.iter().copied()) {
            return false;
        }
        if !self.seen.insert((pre.clone(), post.clone())) {
            return false;
        }
        self.transitions.push(Transition { pre, post, label: label.into() });
        self.index = OnceLock::new();
        true
    }

    /// Adds a transition given by state names, interning unknown names.
    pub fn add_named(&mut self, pre: &[&str], post: &[&str], label: impl Into<String>) -> bool {
        let pre = pre.iter().map(|s| self.add_state(*s)).collect();
        let post = post.iter().map(|s| self.add_state(*s)).collect();
        self.add_transition(pre, post, label)
    }

    /// Appends a transition without the identity and duplicate filters; used
    /// when reloading documents so that indices are preserved.
    pub(crate) fn push_raw(&mut self, t: Transition) {
        self.seen.insert((t.pre.clone(), t.post.clone()));
        self.transitions.push(t);
        self.index = OnceLock::new();
    }

    pub fn helpers(&self) -> u64 {
        self.leaders.size()
    }

    pub fn max_width(&self) -> usize {
        self.transitions.iter().map(|t| t.width()).max().unwrap_or(0)
    }

    fn index(&self) -> &Index {
        self.index.get_or_init(|| {
            let n = self.states.len();
            let mut ix = Index { by_min: vec![Vec::new(); n], singles: vec![Vec::new(); n], ..Index::default() };
            for (k, t) in self.transitions.iter().enumerate() {
                let pre = t.pre_ms();
                let lo = *pre.support().next().unwrap();
                ix.by_min[lo as usize].push(k as u32);
                match t.pre.len() {
                    1 => ix.singles[t.pre[0] as usize].push(k as u32),
                    2 => {
                        let key = (t.pre[0].min(t.pre[1]), t.pre[0].max(t.pre[1]));
                        ix.pairs.entry(key).or_default().push(k as u32);
                    }
                    _ => {}
                }
                ix.pre.push(pre);
                ix.post.push(t.post_ms());
            }
            std::sync::Arc::new(ix)
        })
    }

    /// Transitions of width two whose participants are exactly `{a, b}`.
    pub fn pair_transitions(&self, a: StateIdx, b: StateIdx) -> &[u32] {
        self.index().pairs.get(&(a.min(b), a.max(b))).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Transitions of width one starting in `a`.
    pub fn single_transitions(&self, a: StateIdx) -> &[u32] {
        &self.index().singles[a as usize]
    }

    /// `L + Σ v(x)·I(x)`.
    pub fn initial_config(&self, v: &Valuation) -> Result<Config<StateIdx>> {
        for x in v.keys() {
            if !self.variables.contains(x) {
                return Err(Error::VariableMismatch(format!("unknown variable `{x}`")));
            }
        }
        let mut c = self.leaders.clone();
        for (i, x) in self.variables.iter().enumerate() {
            let n = v.get(x).copied().unwrap_or(0);
            if n > 0 {
                c.insert(self.inputs[i], n as u32);
            }
        }
        if c.size() < 2 {
            return Err(Error::PopulationTooSmall(c.size()));
        }
        Ok(c)
    }

    pub fn output_of(&self, c: &Config<StateIdx>) -> Opinion {
        Opinion::consensus(c.support().map(|s| self.outputs[*s as usize]))
    }

    pub fn enabled(&self, c: &Config<StateIdx>, t: usize) -> bool {
        c.contains(&self.index().pre[t])
    }

    /// `C - pre + post`; panics if `t` is not enabled.
    pub fn fire(&self, c: &Config<StateIdx>, t: usize) -> Config<StateIdx> {
        let ix = self.index();
        let mut d = c.clone();
        assert!(d.subtract(&ix.pre[t]), "fired a disabled transition");
        d.add(&ix.post[t]);
        d
    }

    /// Indices of enabled transitions.
    pub fn enabled_transitions(&self, c: &Config<StateIdx>) -> Vec<usize> {
        let ix = self.index();
        let mut out = Vec::new();
        for s in c.support() {
            for &k in &ix.by_min[*s as usize] {
                if c.contains(&ix.pre[k as usize]) {
                    out.push(k as usize);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Distinct configurations reachable in one non-identity step, each with
    /// the first transition producing it.
    pub fn successors(&self, c: &Config<StateIdx>) -> Vec<(usize, Config<StateIdx>)> {
        let mut out: Vec<(usize, Config<StateIdx>)> = Vec::new();
        let mut seen = HashSet::new();
        for t in self.enabled_transitions(c) {
            let d = self.fire(c, t);
            if seen.insert(d.clone()) {
                out.push((t, d));
            }
        }
        out
    }

    /// Structural problems, empty if the protocol is well formed.
    pub fn validate(&self) -> Vec<String> {
        let n = self.states.len() as StateIdx;
        let mut v = Vec::new();
        for (i, s) in self.inputs.iter().enumerate() {
            if *s >= n {
                v.push(format!("input of `{}` undefined", self.variables[i]));
            }
        }
        for t in &self.transitions {
            if t.pre.len() != t.post.len() {
                v.push(format!("width mismatch in `{}`", t.label));
            }
            if t.pre.is_empty() {
                v.push(format!("empty transition `{}`", t.label));
            }
            if t.pre.iter().chain(&t.post).any(|s| *s >= n) {
                v.push(format!("transition `{}` uses an unknown state", t.label));
            }
            if t.pre.len() == t.post.len() && !t.pre.is_empty() && t.is_identity() {
                v.push(format!("identity transition `{}` stored", t.label));
            }
        }
        if self.leaders.support().any(|s| *s >= n) {
            v.push("leader outside the state set".into());
        }
        let zeros = self.outputs.iter().filter(|o| **o == Opinion::Zero).count();
        let ones = self.outputs.iter().filter(|o| **o == Opinion::One).count();
        match self.flavor {
            Flavor::Simple | Flavor::Halting => {
                if zeros != 1 || ones != 1 {
                    v.push(format!("simple protocol needs one 0-state and one 1-state, found {zeros} and {ones}"));
                }
            }
            Flavor::FullOutput => {
                if self.outputs.contains(&Opinion::Bot) {
                    v.push("full-output protocol has a state without output".into());
                }
            }
            Flavor::General => {}
        }
        v
    }

    /// States with the given output.
    pub fn states_with(&self, o: Opinion) -> Vec<StateIdx> {
        (0..self.states.len() as StateIdx).filter(|s| self.outputs[*s as usize] == o).collect()
    }

    /// For simple protocols, the unique states with output 0 and 1.
    pub fn simple_outputs(&self) -> Result<(StateIdx, StateIdx)> {
        match (self.states_with(Opinion::Zero).as_slice(), self.states_with(Opinion::One).as_slice()) {
            ([f], [t]) => Ok((*f, *t)),
            _ => Err(Error::Precondition("protocol is not simple".into())),
        }
    }

    /// States a single agent can occupy when it starts in `start`, following
    /// its own position through transitions (partners unconstrained).
    pub fn agent_closure(&self, start: &[StateIdx]) -> Vec<bool> {
        let n = self.states.len();
        let mut by_pre: Vec<Vec<StateIdx>> = vec![Vec::new(); n];
        for t in &self.transitions {
            for (p, q) in t.pre.iter().zip(&t.post) {
                by_pre[*p as usize].push(*q);
            }
        }
        let mut mark = vec![false; n];
        let mut stack: Vec<StateIdx> = start.to_vec();
        while let Some(s) = stack.pop() {
            if std::mem::replace(&mut mark[s as usize], true) {
                continue;
            }
            for q in &by_pre[s as usize] {
                if !mark[*q as usize] {
                    stack.push(*q);
                }
            }
        }
        mark
    }
}

/// One transition system with `k` output maps.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiOutputProtocol {
    pub protocol: Protocol,
    pub outputs: Vec<Vec<Opinion>>,
}

impl MultiOutputProtocol {
    pub fn k(&self) -> usize {
        self.outputs.len()
    }

    /// The simple protocol computing output `i`.
    pub fn projection(&self, i: usize) -> Protocol {
        let mut p = self.protocol.clone();
        p.outputs = self.outputs[i].clone();
        p.outputs.resize(p.num_states(), Opinion::Bot);
        p.flavor = Flavor::Simple;
        p
    }
}

/// Atom decided by an RDI protocol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RdiAtom {
    /// `a·w >= bound`.
    Threshold { coeffs: Vec<i64>, bound: i64 },
    /// `(a·w mod modulus) >= bound`.
    Remainder { coeffs: Vec<i64>, bound: i64, modulus: i64 },
}

impl RdiAtom {
    pub fn coeffs(&self) -> &[i64] {
        match self {
            RdiAtom::Threshold { coeffs, .. } | RdiAtom::Remainder { coeffs, .. } => coeffs,
        }
    }

    pub fn dot(&self, w: &[u64]) -> i128 {
        self.coeffs().iter().zip(w).map(|(a, x)| *a as i128 * *x as i128).sum()
    }

    pub fn holds(&self, w: &[u64]) -> bool {
        let s = self.dot(w);
        match self {
            RdiAtom::Threshold { bound, .. } => s >= *bound as i128,
            RdiAtom::Remainder { bound, modulus, .. } => s.rem_euclid(*modulus as i128) >= *bound as i128,
        }
    }
}

/// Protocol with reversible dynamic initialization: `protocol` carries the
/// permanent transitions and `dagger` the reversal transitions.
#[derive(Clone, Debug, PartialEq)]
pub struct RdiProtocol {
    pub protocol: Protocol,
    pub dagger: Vec<Transition>,
    pub atom: RdiAtom,
    /// Value contributed by an agent in each state.
    pub values: Vec<i64>,
    pub n: u32,
}

impl RdiProtocol {
    pub fn num_states(&self) -> usize {
        self.protocol.num_states()
    }

    pub fn helpers(&self) -> u64 {
        self.protocol.helpers()
    }

    /// The protocol with both transition sets.
    pub fn full(&self) -> Protocol {
        let mut p = self.protocol.clone();
        for t in &self.dagger {
            p.add_transition(t.pre.clone(), t.post.clone(), t.label.clone());
        }
        p
    }

    pub fn value(&self, c: &Config<StateIdx>) -> i64 {
        c.items().iter().map(|(s, n)| self.values[*s as usize] * *n as i64).sum()
    }

    pub fn max_width(&self) -> usize {
        self.protocol.max_width().max(self.dagger.iter().map(|t| t.width()).max().unwrap_or(0))
    }

    pub fn num_transitions(&self) -> usize {
        self.protocol.transitions().len() + self.dagger.len()
    }
}
