//! Halting protocol with one leader deciding `a·v > c` on populations of a
//! fixed size `i`.
//!
//! Regular agents keep their coefficient and a flag. The leader compares the
//! sums of positive and negative parts bit by bit, most significant bit
//! first. To learn bit `tgt` it adds up bits `1..=tgt` of every agent,
//! carrying between positions, and uses the flags to make sure each agent is
//! counted exactly once per position. The constant is folded into whichever
//! side keeps it nonnegative and added by the leader itself.

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::formula::bit_length;
use crate::protocol::{Flavor, Opinion, Protocol, StateIdx};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Leader {
    tgt: u32,
    pos: u32,
    met: u64,
    reset: bool,
    vx: u64,
    vy: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Next {
    Leader(Leader),
    Verdict(bool),
}

fn bit(v: u64, pos: u32) -> u64 {
    if pos == 0 || pos > 64 {
        0
    } else {
        v >> (pos - 1) & 1
    }
}

/// Bits needed for the largest sum either side can reach at size `i`.
pub fn bit_bound(coeffs: &[i64], c: i64, i: u64) -> u32 {
    let pos = coeffs.iter().filter(|a| **a > 0).map(|a| *a as u64).max().unwrap_or(0);
    let neg = coeffs.iter().filter(|a| **a < 0).map(|a| a.unsigned_abs()).max().unwrap_or(0);
    let (cx, cy) = if c >= 0 { (0, c as u64) } else { (c.unsigned_abs(), 0) };
    bit_length((i * pos + cx).max(i * neg + cy)).max(1)
}

pub fn regular_name(positive: bool, gamma: u64, flag: bool) -> String {
    format!("{}{gamma}:{}", if positive { 'A' } else { 'B' }, flag as u8)
}

fn leader_name(l: &Leader) -> String {
    format!("L({},{},{},{},{},{})", l.tgt, l.pos, l.met, l.reset as u8, l.vx, l.vy)
}

pub const F: &str = "f";
pub const T: &str = "t";

/// Protocol for `a·v > c` on inputs of size exactly `i`.
pub fn greater_sum(vars: &[String], coeffs: &BTreeMap<String, i64>, c: i64, i: u64) -> Result<Protocol> {
    if i < 2 {
        return Err(Error::Precondition(format!("fixed size must be at least 2, got {i}")));
    }
    let a: Vec<i64> = vars.iter().map(|x| coeffs.get(x).copied().unwrap_or(0)).collect();
    let m = bit_bound(&a, c, i);
    let (cx, cy) = if c >= 0 { (0u64, c as u64) } else { (c.unsigned_abs(), 0u64) };
    let mut p = Protocol::new(vars.to_vec(), Flavor::Halting);
    let mut kinds: Vec<(bool, u64)> = Vec::new();
    for (x, ax) in vars.iter().zip(&a) {
        let kind = (*ax >= 0, ax.unsigned_abs());
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
        let s = p.add_state(regular_name(kind.0, kind.1, false));
        p.add_state(regular_name(kind.0, kind.1, true));
        p.set_input(x, s)?;
    }
    let f = p.add_state(F);
    let t = p.add_state(T);
    p.set_output(f, Opinion::Zero);
    p.set_output(t, Opinion::One);

    let start = Leader { tgt: m, pos: 1, met: 0, reset: false, vx: 0, vy: 0 };
    let mut ids: HashMap<Leader, StateIdx> = HashMap::new();
    let mut queue = VecDeque::from([start]);
    ids.insert(start, p.add_state(leader_name(&start)));
    p.add_leader(ids[&start], 1);
    while let Some(l) = queue.pop_front() {
        let me = ids[&l];
        for &(positive, gamma) in &kinds {
            let flagged = p.state(&regular_name(positive, gamma, true)).unwrap();
            let fresh = p.state(&regular_name(positive, gamma, false)).unwrap();
            let (agent_pre, agent_post, next, label) = if l.reset {
                let met = (l.met + 1) % i;
                (flagged, fresh, Next::Leader(Leader { met, reset: met != 0, ..l }), "unset")
            } else {
                let mut inc = l;
                if positive {
                    inc.vx += bit(gamma, l.pos);
                } else {
                    inc.vy += bit(gamma, l.pos);
                }
                let (next, label) = if l.met < i - 1 {
                    (Next::Leader(Leader { met: l.met + 1, ..inc }), "probe")
                } else {
                    let fx = inc.vx + bit(cx, l.pos);
                    let fy = inc.vy + bit(cy, l.pos);
                    if l.pos < l.tgt {
                        let n = Leader { tgt: l.tgt, pos: l.pos + 1, met: 0, reset: true, vx: fx / 2, vy: fy / 2 };
                        (Next::Leader(n), "advance")
                    } else if fx % 2 != fy % 2 {
                        (Next::Verdict(fx % 2 > fy % 2), "decide")
                    } else if l.tgt > 1 {
                        let n = Leader { tgt: l.tgt - 1, pos: 1, met: 0, reset: true, vx: 0, vy: 0 };
                        (Next::Leader(n), "next")
                    } else {
                        (Next::Verdict(false), "equal")
                    }
                };
                (fresh, flagged, next, label)
            };
            let target = match next {
                Next::Verdict(true) => t,
                Next::Verdict(false) => f,
                Next::Leader(n) => *ids.entry(n).or_insert_with(|| {
                    queue.push_back(n);
                    p.add_state(leader_name(&n))
                }),
            };
            p.add_transition(vec![agent_pre, me], vec![agent_post, target], label);
        }
    }
    p.outputs.resize(p.num_states(), Opinion::Bot);
    Ok(p)
}

/// `α·x - β·y > 0` for variables split into a positive and a negative
/// group.
pub fn build_greater_sum_halting(
    vars: &[String],
    alpha: &BTreeMap<String, u64>,
    beta: &BTreeMap<String, u64>,
    i: u64,
) -> Result<Protocol> {
    let mut a: BTreeMap<String, i64> = BTreeMap::new();
    for (x, v) in alpha {
        *a.entry(x.clone()).or_default() += *v as i64;
    }
    for (x, v) in beta {
        *a.entry(x.clone()).or_default() -= *v as i64;
    }
    greater_sum(vars, &a, 0, i)
}
