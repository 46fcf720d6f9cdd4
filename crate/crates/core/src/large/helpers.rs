//! Removing helpers from a two-way protocol.
//!
//! Every agent first counts up to `ℓ`, the number of helpers. Once some
//! agent has seen `ℓ` agents, agents turn into pairs: their own input state
//! together with the state of one helper. Two pairs interact by firing any
//! transition of the original protocol on the four simulated agents and
//! redistributing the result. The population is large enough to carry all
//! helpers exactly when `|v| >= ℓ`; on smaller inputs nobody reaches `ℓ`
//! and the output stays 1.

use smallvec::smallvec;

use crate::error::{Error, Result};
use crate::formula::Valuation;
use crate::protocol::{Config, Multiset, Opinion, Protocol, StateIdx};
use crate::system::{Agents, Move, Population};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HState {
    /// Input agent for variable `.0` that has counted to `.1`.
    Count(u32, u32),
    /// Agent simulating two agents of the original protocol; `.0 <= .1`.
    Pair(StateIdx, StateIdx),
}

fn pair(a: StateIdx, b: StateIdx) -> HState {
    HState::Pair(a.min(b), a.max(b))
}

const COUNT: u32 = 0;
const INIT: u32 = 1;
const SHUFFLE: u32 = 2;
const SIMUL: u32 = 3;

#[derive(Clone, Debug)]
pub struct HelperFree {
    pub base: Protocol,
    /// `h_1..h_ℓ`.
    pub helpers: Vec<StateIdx>,
}

impl HelperFree {
    pub fn ell(&self) -> u32 {
        self.helpers.len() as u32
    }

    /// `ℓ|X| + |Q|(|Q|+1)/2`.
    pub fn nominal_states(&self) -> u64 {
        let q = self.base.num_states() as u64;
        self.ell() as u64 * self.base.variables.len() as u64 + q * (q + 1) / 2
    }

    /// Pair transitions plus count and init transitions, counted over all
    /// nominal states. Too many to list; this is only an estimate used in
    /// statistics: each base transition yields one rule family.
    pub fn nominal_rule_families(&self) -> u64 {
        3 + self.base.transitions().len() as u64
    }

    fn start(&self, x: u32, i: u32) -> HState {
        pair(self.base.inputs[x as usize], self.helpers[i as usize - 1])
    }

    /// All states reachable from four simulated agents by one transition of
    /// the base protocol (or none), split into two pairs.
    fn simul(&self, a: [StateIdx; 4], out: &mut Vec<Move<HState>>) {
        let before = (pair(a[0], a[1]), pair(a[2], a[3]));
        let mut results: Vec<([StateIdx; 4], u32)> = vec![(a, SHUFFLE)];
        for i in 0..4 {
            for &t in self.base.single_transitions(a[i]) {
                let mut b = a;
                b[i] = self.base.transitions()[t as usize].post[0];
                results.push((b, SIMUL + t));
            }
            for j in i + 1..4 {
                for &t in self.base.pair_transitions(a[i], a[j]) {
                    let tr = &self.base.transitions()[t as usize];
                    let mut b = a;
                    if tr.pre[0] == a[i] {
                        b[i] = tr.post[0];
                        b[j] = tr.post[1];
                    } else {
                        b[i] = tr.post[1];
                        b[j] = tr.post[0];
                    }
                    results.push((b, SIMUL + t));
                }
            }
        }
        for (b, rule) in results {
            for (x, y, z, w) in [(0, 1, 2, 3), (0, 2, 1, 3), (0, 3, 1, 2)] {
                let after = (pair(b[x], b[y]), pair(b[z], b[w]));
                let same = (after.0 == before.0 && after.1 == before.1) || (after.0 == before.1 && after.1 == before.0);
                if !same {
                    out.push(Move { agents: smallvec![(before.0, after.0), (before.1, after.1)], rule });
                }
            }
        }
    }
}

/// Removes the helpers of a two-way protocol. Helpers are ordered by state
/// name, with multiplicities expanded.
pub fn remove_helpers(p: &Protocol) -> Result<HelperFree> {
    if p.max_width() > 2 {
        return Err(Error::Precondition("helper removal needs a two-way protocol".into()));
    }
    let mut helpers: Vec<StateIdx> = p.leaders.elems().copied().collect();
    helpers.sort_by(|a, b| p.state_name(*a).cmp(p.state_name(*b)).then(a.cmp(b)));
    if helpers.is_empty() {
        return Err(Error::Precondition("protocol has no helpers".into()));
    }
    Ok(HelperFree { base: p.clone(), helpers })
}

impl Population for HelperFree {
    type State = HState;

    fn variables(&self) -> &[String] {
        &self.base.variables
    }

    fn initial_config(&self, v: &Valuation) -> Result<Config<HState>> {
        let mut c = Multiset::new();
        for x in v.keys() {
            self.base.var_index(x)?;
        }
        for (i, x) in self.base.variables.iter().enumerate() {
            let n = v.get(x).copied().unwrap_or(0);
            if n > 0 {
                c.insert(HState::Count(i as u32, 1), n as u32);
            }
        }
        if c.size() < 2 {
            return Err(Error::PopulationTooSmall(c.size()));
        }
        Ok(c)
    }

    fn opinion(&self, s: &HState) -> Opinion {
        match s {
            HState::Count(..) => Opinion::One,
            HState::Pair(a, b) => Opinion::consensus([self.base.outputs[*a as usize], self.base.outputs[*b as usize]]),
        }
    }

    fn render(&self, s: &HState) -> String {
        match s {
            HState::Count(x, i) => format!("({},{i})", self.base.variables[*x as usize]),
            HState::Pair(a, b) => format!("<{},{}>", self.base.state_name(*a), self.base.state_name(*b)),
        }
    }

    fn local_moves(&self, agents: &[HState]) -> Vec<Move<HState>> {
        let ell = self.ell();
        let mut out = Vec::new();
        let [a, b] = agents else { return out };
        match (*a, *b) {
            (HState::Count(x, i), HState::Count(y, j)) => {
                if i == j && i < ell {
                    out.push(Move::new([(*a, HState::Count(x, i + 1)), (*b, *b)], COUNT));
                }
                if i == ell {
                    out.push(Move::new([(*a, self.start(x, ell)), (*b, self.start(y, j))], INIT));
                }
                if j == ell && i != ell {
                    out.push(Move::new([(*a, self.start(x, i)), (*b, self.start(y, ell))], INIT));
                }
            }
            (HState::Pair(..), HState::Count(y, j)) => {
                out.push(Move::new([(*a, *a), (*b, self.start(y, j))], INIT));
            }
            (HState::Count(x, i), HState::Pair(..)) => {
                out.push(Move::new([(*a, self.start(x, i)), (*b, *b)], INIT));
            }
            (HState::Pair(p, q), HState::Pair(r, s)) => self.simul([p, q, r, s], &mut out),
        }
        out.retain(|m| !m.is_identity());
        out
    }

    fn rule_name(&self, rule: u32) -> String {
        match rule {
            COUNT => "count".into(),
            INIT => "init".into(),
            SHUFFLE => "shuffle".into(),
            t => format!("simul:{}", self.base.transitions()[(t - SIMUL) as usize].label),
        }
    }
}

impl Agents for HelperFree {
    fn input_state(&self, x: usize) -> HState {
        HState::Count(x as u32, 1)
    }

    fn leader_states(&self) -> Vec<HState> {
        Vec::new()
    }
}
