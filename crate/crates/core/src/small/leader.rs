//! Removing the leaders of a protocol that is only needed below `ℓ` agents.
//!
//! Every agent starts as a leader candidate carrying the original leaders
//! and a counter of how many agents it represents. Two candidates merge by
//! adding their counters; once a sum reaches `ℓ` the population is known to
//! be large and `⊤` floods. After every merge the survivor restarts the
//! simulation: it freezes every agent it meets and resets it to its input,
//! then thaws them one by one. Only after it has thawed as many agents as it
//! represents does it take part in the simulation, so the last survivor runs
//! the original protocol from a clean initial configuration.

use crate::error::Result;
use crate::formula::Valuation;
use crate::protocol::{Config, Opinion};
use crate::system::{initial_from, Agents, Move, Population};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KState<S> {
    Lead {
        leaders: Vec<S>,
        popsize: u32,
        resetcounter: u32,
        init: u32,
        q: S,
    },
    Reg {
        x: u32,
        q: S,
        active: bool,
    },
    Top,
}

const ELECT: u32 = 0;
const TOP: u32 = 1;
const FREEZE: u32 = 2;
const ACTIVATE: u32 = 3;
/// Simulated base moves are `BASE + rule`.
const BASE: u32 = 4;

#[derive(Clone, Debug)]
pub struct KillLeader<P> {
    pub base: P,
    ell: u32,
}

pub fn remove_single_leader<P: Agents>(base: P, ell: u32) -> KillLeader<P> {
    KillLeader { base, ell }
}

impl<P: Agents> KillLeader<P> {
    pub fn ell(&self) -> u32 {
        self.ell
    }

    fn fresh_lead(&self, popsize: u32, init: u32) -> KState<P::State> {
        KState::Lead {
            leaders: self.base.leader_states(),
            popsize,
            resetcounter: 1,
            init,
            q: self.base.input_state(init as usize),
        }
    }

    /// Base moves among the components of a ready leader, optionally
    /// together with one active regular agent `(x, r)`.
    fn simulate(&self, lead: &KState<P::State>, other: Option<(u32, &P::State)>, out: &mut Vec<Move<KState<P::State>>>) {
        let KState::Lead { leaders, popsize, resetcounter, init, q } = lead else { return };
        if popsize != resetcounter {
            return;
        }
        // slot k < leaders.len() is a simulated leader, the next one is `q`
        let mut slots: Vec<P::State> = leaders.clone();
        slots.push(q.clone());
        let rebuild = |slots: &[P::State]| KState::Lead {
            leaders: slots[..slots.len() - 1].to_vec(),
            popsize: *popsize,
            resetcounter: *resetcounter,
            init: *init,
            q: slots[slots.len() - 1].clone(),
        };
        let n = slots.len();
        let apply = |m: &Move<P::State>, idx: &[usize], slots: &[P::State]| {
            let mut s2 = slots.to_vec();
            let mut used = vec![false; m.agents.len()];
            for &k in idx {
                let j = (0..m.agents.len()).find(|&j| !used[j] && m.agents[j].0 == slots[k]).expect("move agent");
                used[j] = true;
                s2[k] = m.agents[j].1.clone();
            }
            (s2, used)
        };
        match other {
            None => {
                for a in 0..n {
                    for m in self.base.local_moves(std::slice::from_ref(&slots[a])) {
                        let (s2, _) = apply(&m, &[a], &slots);
                        out.push(Move::new([(lead.clone(), rebuild(&s2))], BASE + m.rule));
                    }
                    for b in a + 1..n {
                        for m in self.base.local_moves(&[slots[a].clone(), slots[b].clone()]) {
                            let (s2, _) = apply(&m, &[a, b], &slots);
                            out.push(Move::new([(lead.clone(), rebuild(&s2))], BASE + m.rule));
                        }
                    }
                }
            }
            Some((x, r)) => {
                let reg = KState::Reg { x, q: r.clone(), active: true };
                for a in 0..n {
                    for m in self.base.local_moves(&[slots[a].clone(), r.clone()]) {
                        let (s2, used) = apply(&m, &[a], &slots);
                        let j = used.iter().position(|u| !u).expect("regular agent");
                        let r2 = KState::Reg { x, q: m.agents[j].1.clone(), active: true };
                        out.push(Move::new([(lead.clone(), rebuild(&s2)), (reg.clone(), r2)], BASE + m.rule));
                    }
                }
            }
        }
    }

    fn ordered(&self, p: &KState<P::State>, q: &KState<P::State>, out: &mut Vec<Move<KState<P::State>>>) {
        use KState::*;
        match (p, q) {
            (Top, q) if *q != Top => out.push(Move::new([(p.clone(), Top), (q.clone(), Top)], TOP)),
            (Lead { popsize: a, init, .. }, Lead { popsize: b, init: init2, .. }) => {
                if a + b >= self.ell {
                    // only one orientation is needed
                    if p <= q {
                        out.push(Move::new([(p.clone(), Top), (q.clone(), Top)], TOP));
                    }
                } else {
                    let frozen = Reg { x: *init2, q: self.base.input_state(*init2 as usize), active: false };
                    out.push(Move::new([(p.clone(), self.fresh_lead(a + b, *init)), (q.clone(), frozen)], ELECT));
                }
            }
            (Lead { popsize, resetcounter, init, .. }, Reg { x, q: r, active }) => {
                if resetcounter < popsize {
                    if *active {
                        let l = Lead {
                            leaders: self.base.leader_states(),
                            popsize: *popsize,
                            resetcounter: 1,
                            init: *init,
                            q: self.base.input_state(*init as usize),
                        };
                        let f = Reg { x: *x, q: self.base.input_state(*x as usize), active: false };
                        out.push(Move::new([(p.clone(), l), (q.clone(), f)], FREEZE));
                    } else {
                        let Lead { leaders, q: lq, .. } = p else { unreachable!() };
                        let l = Lead {
                            leaders: leaders.clone(),
                            popsize: *popsize,
                            resetcounter: resetcounter + 1,
                            init: *init,
                            q: lq.clone(),
                        };
                        out.push(Move::new([(p.clone(), l), (q.clone(), Reg { x: *x, q: r.clone(), active: true })], ACTIVATE));
                    }
                } else if *active {
                    self.simulate(p, Some((*x, r)), out);
                }
            }
            (Reg { x, q: a, active: true }, Reg { x: y, q: b, active: true }) if p <= q => {
                for m in self.base.local_moves(&[a.clone(), b.clone()]) {
                    let (ia, ib) = if m.agents[0].0 == *a && m.agents[1].0 == *b { (0, 1) } else { (1, 0) };
                    out.push(Move::new(
                        [
                            (p.clone(), Reg { x: *x, q: m.agents[ia].1.clone(), active: true }),
                            (q.clone(), Reg { x: *y, q: m.agents[ib].1.clone(), active: true }),
                        ],
                        BASE + m.rule,
                    ));
                }
            }
            _ => {}
        }
    }
}

impl<P: Agents> Population for KillLeader<P> {
    type State = KState<P::State>;

    fn variables(&self) -> &[String] {
        self.base.variables()
    }

    fn initial_config(&self, v: &Valuation) -> Result<Config<Self::State>> {
        initial_from(self, v)
    }

    /// A candidate reports the consensus of its simulated leaders and its
    /// own agent, so a base protocol that answers through its leader is
    /// still visible.
    fn opinion(&self, s: &Self::State) -> Opinion {
        match s {
            KState::Lead { leaders, q, .. } => {
                Opinion::consensus(leaders.iter().chain(std::iter::once(q)).map(|s| self.base.opinion(s)))
            }
            KState::Reg { q, .. } => self.base.opinion(q),
            KState::Top => Opinion::One,
        }
    }

    fn render(&self, s: &Self::State) -> String {
        match s {
            KState::Lead { leaders, popsize, resetcounter, init, q } => {
                let ls: Vec<String> = leaders.iter().map(|l| self.base.render(l)).collect();
                format!(
                    "({};{popsize},{resetcounter},{},{})",
                    ls.join(","),
                    self.base.variables()[*init as usize],
                    self.base.render(q)
                )
            }
            KState::Reg { x, q, active } => {
                format!("({},{},{})", self.base.variables()[*x as usize], self.base.render(q), if *active { "a" } else { "z" })
            }
            KState::Top => "⊤".into(),
        }
    }

    fn local_moves(&self, agents: &[Self::State]) -> Vec<Move<Self::State>> {
        let mut out = Vec::new();
        match agents {
            [a @ KState::Lead { .. }] => self.simulate(a, None, &mut out),
            [a @ KState::Reg { x, q, active: true }] => {
                for m in self.base.local_moves(std::slice::from_ref(q)) {
                    out.push(Move::new([(a.clone(), KState::Reg { x: *x, q: m.agents[0].1.clone(), active: true })], BASE + m.rule));
                }
            }
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
                }
            }
            _ => {}
        }
        out.retain(|m| !m.is_identity());
        out
    }

    fn rule_name(&self, rule: u32) -> String {
        match rule {
            ELECT => "elect".into(),
            TOP => "top".into(),
            FREEZE => "freeze".into(),
            ACTIVATE => "activate".into(),
            r => format!("sim:{}", self.base.rule_name(r - BASE)),
        }
    }
}

impl<P: Agents> Agents for KillLeader<P> {
    fn input_state(&self, x: usize) -> Self::State {
        self.fresh_lead(1, x as u32)
    }

    fn leader_states(&self) -> Vec<Self::State> {
        Vec::new()
    }
}
