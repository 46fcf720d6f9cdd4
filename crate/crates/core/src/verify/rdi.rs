//! Checks for protocols with reversible dynamic initialization.
//!
//! Initialization sequences interleave transitions with pseudo-steps that
//! add an agent to an input state (`in_x`) or remove one (`out_x`). The
//! effective input `w` counts additions minus removals.

use std::collections::{HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::check::{check_config, Verdict};
use super::explore::explore;
use crate::formula::Valuation;
use crate::protocol::{Config, Protocol, RdiAtom, RdiProtocol, StateIdx};

#[derive(Clone, Copy, Debug)]
pub struct RdiCheckParams {
    /// Largest `|w|` reached by the sequences.
    pub max_pop: u64,
    /// Longest initialization sequence.
    pub max_depth: usize,
    /// `(C, D)` pairs sampled for reversibility.
    pub samples: usize,
    pub node_cap: usize,
    pub seed: u64,
}

impl Default for RdiCheckParams {
    fn default() -> Self {
        RdiCheckParams { max_pop: 3, max_depth: 64, samples: 200, node_cap: super::DEFAULT_NODE_CAP, seed: 0 }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct PropertyReport {
    pub checked: usize,
    pub violations: usize,
    pub inconclusive: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub example: Option<String>,
}

impl PropertyReport {
    fn record(&mut self, ok: Option<bool>, example: impl FnOnce() -> String) {
        self.checked += 1;
        match ok {
            Some(true) => {}
            Some(false) => {
                self.violations += 1;
                if self.example.is_none() {
                    self.example = Some(example());
                }
            }
            None => self.inconclusive += 1,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.inconclusive == 0 && self.checked > 0
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct RdiReport {
    /// Distinct `(C, w)` pairs reached.
    pub configurations: usize,
    /// True when the depth bound or node cap cut the search short.
    pub truncated: bool,
    pub input_bound: PropertyReport,
    pub reversibility: PropertyReport,
    pub computation: PropertyReport,
}

impl RdiReport {
    pub fn passed(&self) -> bool {
        self.input_bound.passed() && self.reversibility.passed() && self.computation.passed()
    }
}

type Node = (Config<StateIdx>, Vec<i64>);

fn render(p: &Protocol, c: &Config<StateIdx>) -> String {
    let parts: Vec<String> = c.items().iter().map(|(s, n)| format!("{n}*{}", p.state_name(*s))).collect();
    format!("{{{}}}", parts.join(", "))
}

fn valuation(vars: &[String], w: &[i64]) -> Valuation {
    vars.iter().cloned().zip(w.iter().map(|x| (*x).max(0) as u64)).collect()
}

/// Configurations reachable from `c` (as state-index configurations).
fn reach(full: &Protocol, c: &Config<StateIdx>, cap: usize) -> Option<Vec<Config<StateIdx>>> {
    let g = explore(full, c, cap);
    if g.truncated {
        return None;
    }
    Some(g.nodes.iter().map(|n| n.map(|i| g.states[*i as usize])).collect())
}

/// `[C]`: configurations that agree with `C` except for how the agents in
/// `f` and `t` are split.
fn variants(c: &Config<StateIdx>, f: StateIdx, t: StateIdx) -> Vec<Config<StateIdx>> {
    let k = c.count(&f) + c.count(&t);
    let mut base = c.clone();
    base.remove(&f, c.count(&f));
    base.remove(&t, c.count(&t));
    (0..=k)
        .map(|i| {
            let mut d = base.clone();
            d.insert(f, i);
            d.insert(t, k - i);
            d
        })
        .collect()
}

fn same_class(a: &Config<StateIdx>, b: &Config<StateIdx>, f: StateIdx, t: StateIdx) -> bool {
    a.count(&f) + a.count(&t) == b.count(&f) + b.count(&t)
        && a.items().iter().filter(|(s, _)| *s != f && *s != t).eq(b.items().iter().filter(|(s, _)| *s != f && *s != t))
}

/// Every `(C, w)` reachable by initialization sequences from the leaders
/// within the bounds, in BFS order.
fn initialization_space(rdi: &RdiProtocol, full: &Protocol, params: &RdiCheckParams) -> (Vec<Node>, bool) {
    let p = &rdi.protocol;
    let k = p.variables.len();
    let start: Node = (p.leaders.clone(), vec![0; k]);
    let mut seen: HashMap<Node, usize> = HashMap::new();
    let mut order = vec![start.clone()];
    let mut queue = VecDeque::from([(start.clone(), 0usize)]);
    seen.insert(start, 0);
    let mut truncated = false;
    while let Some(((c, w), depth)) = queue.pop_front() {
        let mut next: Vec<Node> = full.successors(&c).into_iter().map(|(_, d)| (d, w.clone())).collect();
        for x in 0..k {
            let i = p.inputs[x];
            if w.iter().map(|v| v.unsigned_abs()).sum::<u64>() < params.max_pop {
                let mut d = c.clone();
                d.insert(i, 1);
                let mut w2 = w.clone();
                w2[x] += 1;
                next.push((d, w2));
            }
            if c.count(&i) > 0 {
                let mut d = c.clone();
                d.remove(&i, 1);
                let mut w2 = w.clone();
                w2[x] -= 1;
                next.push((d, w2));
            }
        }
        for n in next {
            if seen.contains_key(&n) {
                continue;
            }
            if depth + 1 > params.max_depth || order.len() >= params.node_cap {
                truncated = true;
                continue;
            }
            seen.insert(n.clone(), order.len());
            order.push(n.clone());
            queue.push_back((n, depth + 1));
        }
    }
    (order, truncated)
}

/// Checks the input bound, reversibility (on sampled pairs) and that the
/// permanent transitions compute the atom from every reached configuration.
pub fn check_rdi(rdi: &RdiProtocol, params: RdiCheckParams) -> RdiReport {
    let full = rdi.full();
    let p = &rdi.protocol;
    let (f, t) = p.simple_outputs().expect("RDI protocols are simple");
    let (space, truncated) = initialization_space(rdi, &full, &params);
    let mut report = RdiReport { configurations: space.len(), truncated, ..Default::default() };

    for (c, w) in &space {
        let ok = p.inputs.iter().zip(w).all(|(i, wx)| c.count(i) as i64 <= *wx);
        report.input_bound.record(Some(ok), || format!("{} with w = {w:?}", render(p, c)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut picks: Vec<usize> = (0..space.len()).collect();
    picks.shuffle(&mut rng);
    picks.truncate(params.samples);
    let seeds: Vec<u64> = picks.iter().map(|_| rng.gen()).collect();
    let rev: Vec<(Option<bool>, String)> = picks
        .par_iter()
        .zip(seeds)
        .map(|(&i, seed)| {
            let c = &space[i].0;
            let Some(from_c) = reach(&full, c, params.node_cap) else { return (None, String::new()) };
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let d = from_c.choose(&mut r).expect("C reaches itself");
            for d2 in variants(d, f, t) {
                match reach(&full, &d2, params.node_cap) {
                    None => return (None, String::new()),
                    Some(back) if !back.iter().any(|e| same_class(e, c, f, t)) => {
                        return (Some(false), format!("{} does not return to [{}]", render(p, &d2), render(p, c)))
                    }
                    _ => {}
                }
            }
            (Some(true), String::new())
        })
        .collect();
    for (ok, ex) in rev {
        report.reversibility.record(ok, || ex);
    }

    let vars = &p.variables;
    let rows: Vec<_> = space
        .par_iter()
        .filter(|(c, _)| c.size() >= 2)
        .map(|(c, w)| {
            let expected = w.iter().all(|x| *x >= 0) && rdi.atom.holds(&w.iter().map(|x| *x as u64).collect::<Vec<_>>());
            (check_config(p, c, &valuation(vars, w), expected, params.node_cap), c)
        })
        .collect();
    for (row, c) in rows {
        let ok = match row.verdict {
            Verdict::Pass => Some(true),
            Verdict::Fail => Some(false),
            Verdict::Inconclusive => None,
        };
        report.computation.record(ok, || format!("from {}: {}", render(p, c), row.detail.clone().unwrap_or_default()));
    }
    report
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct InvariantReport {
    pub sequences: usize,
    pub steps: usize,
    pub violations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub example: Option<String>,
}

enum Kind {
    Port,
    Number,
    Tagged(usize),
    Output,
}

/// Runs `count` random initialization sequences of length at most
/// `max_len` and checks after every step that
/// - `val(C) = a·w` for thresholds; for remainders `val(C) = a·w - m·k`
///   with `k` the number of reductions minus reversed reductions, hence
///   `val(C) ≡ a·w (mod m)` and `val(C) <= a·w` while `k >= 0`,
/// - `|C| = C(N) + C(B) + |w|`,
/// - the plain numbers keep at least their leaders,
/// - `C(N_x) + C(x) = w(x)`.
pub fn random_init_sequences(rdi: &RdiProtocol, count: usize, max_len: usize, seed: u64) -> InvariantReport {
    let full = rdi.full();
    let p = &rdi.protocol;
    let k = p.variables.len();
    let kinds: Vec<Kind> = (0..p.num_states() as StateIdx)
        .map(|s| {
            let name = p.state_name(s);
            if let Some(x) = p.inputs.iter().position(|i| *i == s) {
                let _ = x;
                Kind::Port
            } else if let Some((_, x)) = name.split_once('@') {
                Kind::Tagged(p.variables.iter().position(|v| v == x).expect("tag names a variable"))
            } else if name == "f" || name == "t" {
                Kind::Output
            } else {
                Kind::Number
            }
        })
        .collect();
    let leaders_n: u64 = p.leaders.items().iter().filter(|(s, _)| matches!(kinds[*s as usize], Kind::Number)).map(|(_, n)| *n as u64).sum();
    let a = rdi.atom.coeffs();
    // +1 for `modulo`, -1 for its reversal
    let reductions: Vec<i128> = full
        .transitions()
        .iter()
        .map(|t| match t.label.as_str() {
            l if l.starts_with("modulo^-1") => -1,
            l if l.starts_with("modulo") => 1,
            _ => 0,
        })
        .collect();
    let check = |c: &Config<StateIdx>, w: &[i64], reduced: i128| -> Option<String> {
        let val = rdi.value(c) as i128;
        let aw: i128 = a.iter().zip(w).map(|(a, w)| *a as i128 * *w as i128).sum();
        let val_ok = match rdi.atom {
            RdiAtom::Threshold { .. } => val == aw,
            // the bound `val <= a·w` needs every reversed reduction to
            // have happened before; the exact accounting covers the rest
            RdiAtom::Remainder { modulus, .. } => {
                let m = modulus as i128;
                (val - aw).rem_euclid(m) == 0 && val == aw - m * reduced && (reduced < 0 || val <= aw)
            }
        };
        if !val_ok {
            return Some(format!("val = {val}, a·w = {aw}"));
        }
        let (mut n, mut b) = (0u64, 0u64);
        let mut per_x = vec![0i64; k];
        for (s, m) in c.items() {
            match kinds[*s as usize] {
                Kind::Number => n += *m as u64,
                Kind::Output => b += *m as u64,
                Kind::Tagged(x) => per_x[x] += *m as i64,
                Kind::Port => {}
            }
        }
        for x in 0..k {
            per_x[x] += c.count(&p.inputs[x]) as i64;
        }
        let w_abs: i64 = w.iter().sum();
        if c.size() as i64 != (n + b) as i64 + w_abs {
            return Some(format!("|C| = {} but C(N) + C(B) + |w| = {}", c.size(), (n + b) as i64 + w_abs));
        }
        if n < leaders_n {
            return Some(format!("C(N) = {n} below {leaders_n}"));
        }
        if per_x != w {
            return Some(format!("C(N_x) + C(x) = {per_x:?} but w = {w:?}"));
        }
        None
    };
    let results: Vec<(usize, Option<String>)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let mut c = p.leaders.clone();
            let mut w = vec![0i64; k];
            let mut reduced = 0i128;
            let len = rng.gen_range(0..=max_len);
            let mut steps = 0;
            for _ in 0..len {
                // 0..k: in_x, k..2k: out_x, then transitions
                let ts = full.enabled_transitions(&c);
                let outs: Vec<usize> = (0..k).filter(|x| c.count(&p.inputs[*x]) > 0).collect();
                let choice = rng.gen_range(0..k + outs.len() + ts.len());
                if choice < k {
                    c.insert(p.inputs[choice], 1);
                    w[choice] += 1;
                } else if choice < k + outs.len() {
                    let x = outs[choice - k];
                    c.remove(&p.inputs[x], 1);
                    w[x] -= 1;
                } else {
                    let t = ts[choice - k - outs.len()];
                    c = full.fire(&c, t);
                    reduced += reductions[t];
                }
                steps += 1;
                if let Some(e) = check(&c, &w, reduced) {
                    return (steps, Some(format!("{e} in {}", render(p, &c))));
                }
            }
            (steps, None)
        })
        .collect();
    let mut r = InvariantReport { sequences: count, ..Default::default() };
    for (steps, e) in results {
        r.steps += steps;
        if let Some(e) = e {
            r.violations += 1;
            r.example.get_or_insert(e);
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::large::{build_remainder_rdi, build_threshold_rdi};
    use std::collections::BTreeMap;

    fn one(a: i64) -> (Vec<String>, BTreeMap<String, i64>) {
        (vec!["x".to_string()], [("x".to_string(), a)].into_iter().collect())
    }

    #[test]
    fn threshold_rdi_passes() {
        let (v, a) = one(1);
        let r = build_threshold_rdi(&v, &a, 2).unwrap();
        let rep = check_rdi(&r, RdiCheckParams { max_pop: 3, samples: 30, ..Default::default() });
        assert!(!rep.truncated);
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn only_inputs_give_effective_input() {
        let (v, a) = one(1);
        let r = build_threshold_rdi(&v, &a, 2).unwrap();
        let params = RdiCheckParams { max_pop: 2, max_depth: 2, ..Default::default() };
        let (space, _) = initialization_space(&r, &r.full(), &params);
        let two_in = space.iter().find(|(c, _)| c.count(&r.protocol.inputs[0]) == 2).unwrap();
        assert_eq!(two_in.1, vec![2]);
    }

    #[test]
    fn remainder_rdi_passes() {
        let (v, a) = one(1);
        let r = build_remainder_rdi(&v, &a, 1, 2).unwrap();
        let rep = check_rdi(&r, RdiCheckParams { max_pop: 4, samples: 20, ..Default::default() });
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn invariants_hold() {
        let (v, a) = one(3);
        let r = build_threshold_rdi(&v, &a, 2).unwrap();
        let rep = random_init_sequences(&r, 200, 30, 1);
        assert_eq!(rep.violations, 0, "{:?}", rep.example);
        let r = build_remainder_rdi(&v, &a, 2, 5).unwrap();
        let rep = random_init_sequences(&r, 200, 30, 1);
        assert_eq!(rep.violations, 0, "{:?}", rep.example);
    }

    #[test]
    fn broken_protocol_is_caught() {
        let (v, a) = one(1);
        let mut r = build_threshold_rdi(&v, &a, 2).unwrap();
        // inflate the value of the input port
        r.values[r.protocol.inputs[0] as usize] = 2;
        assert!(random_init_sequences(&r, 50, 30, 1).violations > 0);
    }
}
