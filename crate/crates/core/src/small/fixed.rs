//! One leader combining protocols for the sizes `2..ℓ-1`.
//!
//! The leader counts the agents it has met. After meeting its `c`-th agent
//! it switches to part `c` and restarts everybody it meets from their inputs
//! in that part, and it copies every opinion it sees from part `c` into its
//! own bit. Since the leader is one of the agents, part `c` runs on `c`
//! regular agents plus the leader, which simulates the part's leader. When
//! the count reaches `ℓ` the answer is `1` and `⊤` floods.

use crate::error::{Error, Result};
use crate::formula::Valuation;
use crate::protocol::{Config, Opinion};
use crate::system::{initial_from, Agents, Move, Population};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FState<S> {
    /// Not yet counted.
    Input(u32),
    /// Agent with input `x` running part `i`; `None` when there is no part.
    Sim { x: u32, i: u32, s: Option<S> },
    Top,
    Leader { c: u32, b: bool, s: Option<S> },
}

const INCR: u32 = 0;
const THRESHOLD: u32 = 1;
const TRUE: u32 = 2;
const CONV: u32 = 3;
const BOOL: u32 = 4;
const SIM: u32 = 5;

#[derive(Clone, Debug)]
pub struct FixedSize<P> {
    vars: Vec<String>,
    /// `parts[i]` runs on populations of `i + 1` agents counting the leader.
    parts: Vec<Option<P>>,
    ell: u32,
}

impl<P: Agents> FixedSize<P> {
    /// `parts[i - 2]` must compute the predicate at input size `i`, for `i`
    /// in `2..ell`.
    pub fn new(vars: Vec<String>, parts: Vec<P>, ell: u32) -> Result<FixedSize<P>> {
        if ell < 3 || parts.len() != ell as usize - 2 {
            return Err(Error::Precondition(format!("need parts for sizes 2..{ell}, got {}", parts.len())));
        }
        for (i, p) in parts.iter().enumerate() {
            if p.variables() != vars.as_slice() {
                return Err(Error::VariableMismatch(format!("part for size {}", i + 2)));
            }
            if p.leader_states().len() > 1 {
                return Err(Error::Precondition(format!("part for size {} has several leaders", i + 2)));
            }
        }
        let mut slots: Vec<Option<P>> = vec![None, None];
        slots.extend(parts.into_iter().map(Some));
        Ok(FixedSize { vars, parts: slots, ell })
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn part(&self, i: u32) -> Option<&P> {
        self.parts.get(i as usize).and_then(|p| p.as_ref())
    }

    fn part_input(&self, i: u32, x: u32) -> Option<P::State> {
        self.part(i).map(|p| p.input_state(x as usize))
    }

    fn part_leader(&self, i: u32) -> Option<P::State> {
        self.part(i).and_then(|p| p.leader_states().into_iter().next())
    }

    /// Moves of part `i` between two simulated agents, or one.
    fn part_moves(&self, i: u32, states: &[P::State]) -> Vec<Move<P::State>> {
        self.part(i).map(|p| p.local_moves(states)).unwrap_or_default()
    }

    fn leader_pair(&self, x: u32, i: u32, s: &P::State, c: u32, b: bool, ls: &P::State, out: &mut Vec<Move<FState<P::State>>>) {
        let a = FState::Sim { x, i, s: Some(s.clone()) };
        let l = FState::Leader { c, b, s: Some(ls.clone()) };
        for m in self.part_moves(c, &[s.clone(), ls.clone()]) {
            // identify which simulated agent is the leader
            let (ms, ml) = if m.agents[0].0 == *s && m.agents[1].0 == *ls { (0, 1) } else { (1, 0) };
            let s2 = m.agents[ms].1.clone();
            let l2 = m.agents[ml].1.clone();
            out.push(Move::new(
                [(a.clone(), FState::Sim { x, i, s: Some(s2) }), (l.clone(), FState::Leader { c, b, s: Some(l2) })],
                SIM,
            ));
        }
    }
}

impl<P: Agents> Population for FixedSize<P> {
    type State = FState<P::State>;

    fn variables(&self) -> &[String] {
        &self.vars
    }

    fn initial_config(&self, v: &Valuation) -> Result<Config<Self::State>> {
        initial_from(self, v)
    }

    fn opinion(&self, s: &Self::State) -> Opinion {
        match s {
            FState::Input(_) => Opinion::Zero,
            FState::Sim { i, s, .. } => match (self.part(*i), s) {
                (Some(p), Some(s)) => p.opinion(s),
                _ => Opinion::Bot,
            },
            FState::Top => Opinion::One,
            FState::Leader { b, .. } => Opinion::from_bool(*b),
        }
    }

    fn render(&self, s: &Self::State) -> String {
        let sim = |i: u32, s: &Option<P::State>| match (self.part(i), s) {
            (Some(p), Some(s)) => p.render(s),
            _ => "-".into(),
        };
        match s {
            FState::Input(x) => self.vars[*x as usize].clone(),
            FState::Sim { x, i, s } => format!("[{},{i},{}]", self.vars[*x as usize], sim(*i, s)),
            FState::Top => "⊤".into(),
            FState::Leader { c, b, s } => format!("L[{c},{},{}]", *b as u8, sim(*c, s)),
        }
    }

    fn local_moves(&self, agents: &[Self::State]) -> Vec<Move<Self::State>> {
        use FState::*;
        let mut out = Vec::new();
        match agents {
            [a] => match a {
                Sim { x, i, s: Some(s) } => {
                    for m in self.part_moves(*i, std::slice::from_ref(s)) {
                        out.push(Move::new([(a.clone(), Sim { x: *x, i: *i, s: Some(m.agents[0].1.clone()) })], SIM));
                    }
                }
                Leader { c, b, s: Some(ls) } => {
                    for m in self.part_moves(*c, std::slice::from_ref(ls)) {
                        out.push(Move::new([(a.clone(), Leader { c: *c, b: *b, s: Some(m.agents[0].1.clone()) })], SIM));
                    }
                    let o = self.part(*c).map(|p| p.opinion(ls)).unwrap_or(Opinion::Bot);
                    if let Some(v) = o.as_bool() {
                        out.push(Move::new([(a.clone(), Leader { c: *c, b: v, s: Some(ls.clone()) })], BOOL));
                    }
                }
                _ => {}
            },
            [a, b] => {
                for (p, q, flip) in [(a, b, false), (b, a, true)] {
                    let mut ms = Vec::new();
                    self.ordered(p, q, &mut ms);
                    if flip {
                        for m in &mut ms {
                            m.agents.swap(0, 1);
                        }
                    }
                    out.extend(ms);
                    if a == b {
                        break;
                    }
                }
            }
            _ => {}
        }
        out.retain(|m| !m.is_identity());
        out
    }

    fn rule_name(&self, rule: u32) -> String {
        ["incr", "threshold", "true", "conv", "bool", "sim"][rule as usize].into()
    }
}

impl<P: Agents> FixedSize<P> {
    /// Moves where `p` plays the first role of the rule; agent order is kept.
    fn ordered(&self, p: &FState<P::State>, q: &FState<P::State>, out: &mut Vec<Move<FState<P::State>>>) {
        use FState::*;
        let ell = self.ell;
        match (p, q) {
            (Top, q) if *q != Top => out.push(Move::new([(p.clone(), Top), (q.clone(), Top)], TRUE)),
            (Leader { c, .. }, q) if *c == ell && *q != Top => {
                out.push(Move::new([(p.clone(), Top), (q.clone(), Top)], THRESHOLD))
            }
            (Input(x), Leader { c, b, .. }) if *c < ell => {
                let n = c + 1;
                out.push(Move::new(
                    [
                        (p.clone(), Sim { x: *x, i: n, s: self.part_input(n, *x) }),
                        (q.clone(), Leader { c: n, b: *b, s: self.part_leader(n) }),
                    ],
                    INCR,
                ));
            }
            (Sim { x, i, s }, Leader { c, b, s: ls }) if *c < ell => {
                if i != c {
                    out.push(Move::new([(p.clone(), Sim { x: *x, i: *c, s: self.part_input(*c, *x) }), (q.clone(), q.clone())], CONV));
                } else if let Some(s) = s {
                    let o = self.part(*c).map(|pp| pp.opinion(s)).unwrap_or(Opinion::Bot);
                    if let Some(v) = o.as_bool() {
                        out.push(Move::new([(p.clone(), p.clone()), (q.clone(), Leader { c: *c, b: v, s: ls.clone() })], BOOL));
                    }
                    if let Some(ls) = ls {
                        self.leader_pair(*x, *i, s, *c, *b, ls, out);
                    }
                }
            }
            (Sim { x, i, s: Some(s) }, Sim { x: y, i: j, s: Some(r) }) if i == j
                // both orders are produced by the caller; only emit once
                && p <= q => {
                    for m in self.part_moves(*i, &[s.clone(), r.clone()]) {
                        let (ms, mr) = if m.agents[0].0 == *s && m.agents[1].0 == *r { (0, 1) } else { (1, 0) };
                        out.push(Move::new(
                            [
                                (p.clone(), Sim { x: *x, i: *i, s: Some(m.agents[ms].1.clone()) }),
                                (q.clone(), Sim { x: *y, i: *j, s: Some(m.agents[mr].1.clone()) }),
                            ],
                            SIM,
                        ));
                    }
                }
            _ => {}
        }
    }
}

impl<P: Agents> Agents for FixedSize<P> {
    fn input_state(&self, x: usize) -> Self::State {
        FState::Input(x as u32)
    }

    fn leader_states(&self) -> Vec<Self::State> {
        vec![FState::Leader { c: 0, b: false, s: None }]
    }
}
