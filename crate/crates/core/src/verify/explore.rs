//! Breadth-first reachability and bottom strongly connected components.

use std::collections::HashMap;

use super::engine::{apply, Engine, Id};
use crate::protocol::{Config, Opinion};
use crate::system::Population;

pub const DEFAULT_NODE_CAP: usize = 2_000_000;

/// Node cap from `PPF_NODE_CAP`, falling back to [`DEFAULT_NODE_CAP`].
pub fn default_node_cap() -> usize {
    std::env::var("PPF_NODE_CAP").ok().and_then(|s| s.parse().ok()).unwrap_or(DEFAULT_NODE_CAP)
}

/// Explored configuration graph. Configurations are over interned state ids;
/// `states` maps ids back. Edges are stored in compressed rows; the implicit
/// self-loop of every configuration is not stored.
#[derive(Debug)]
pub struct ReachGraph<S> {
    pub states: Vec<S>,
    pub nodes: Vec<Config<Id>>,
    pub offsets: Vec<u32>,
    pub targets: Vec<u32>,
    pub rules: Vec<u32>,
    /// BFS tree: `(parent, rule)` for every node but the root.
    pub parent: Vec<(u32, u32)>,
    pub node_cap: usize,
    pub truncated: bool,
}

impl<S> ReachGraph<S> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn successors(&self, n: usize) -> &[u32] {
        &self.targets[self.offsets[n] as usize..self.offsets[n + 1] as usize]
    }

    pub fn edge_rules(&self, n: usize) -> &[u32] {
        &self.rules[self.offsets[n] as usize..self.offsets[n + 1] as usize]
    }

    /// Rules along the BFS path from the root to `n`.
    pub fn trace_to(&self, mut n: usize) -> Vec<u32> {
        let mut out = Vec::new();
        while n != 0 {
            let (p, r) = self.parent[n];
            out.push(r);
            n = p as usize;
        }
        out.reverse();
        out
    }

    /// Outputs of all nodes.
    pub fn outputs<P: Population<State = S> + ?Sized>(&self, sys: &P) -> Vec<Opinion> {
        let table: Vec<Opinion> = self.states.iter().map(|s| sys.opinion(s)).collect();
        self.nodes
            .iter()
            .map(|c| Opinion::consensus(c.support().map(|i| table[*i as usize])))
            .collect()
    }
}

/// Explores every configuration reachable from `c0`, stopping after
/// `node_cap` nodes. Node order is the deterministic BFS order.
pub fn explore<P: Population + ?Sized>(sys: &P, c0: &Config<P::State>, node_cap: usize) -> ReachGraph<P::State> {
    let mut eng = Engine::new(sys);
    let root = eng.intern_config(c0);
    let mut index: HashMap<Config<Id>, u32> = HashMap::new();
    index.insert(root.clone(), 0);
    let mut nodes = vec![root];
    let mut offsets = vec![0u32];
    let mut targets = Vec::new();
    let mut rules = Vec::new();
    let mut parent = vec![(0u32, 0u32)];
    let mut truncated = false;
    let mut head = 0;
    while head < nodes.len() {
        let c = nodes[head].clone();
        let mut local: Vec<(u32, u32)> = Vec::new();
        for m in eng.moves(&c) {
            let d = apply(&c, &m);
            let id = match index.get(&d) {
                Some(i) => *i,
                None => {
                    if nodes.len() >= node_cap {
                        truncated = true;
                        continue;
                    }
                    let i = nodes.len() as u32;
                    index.insert(d.clone(), i);
                    nodes.push(d);
                    parent.push((head as u32, m.rule));
                    i
                }
            };
            if id as usize != head && !local.iter().any(|(t, _)| *t == id) {
                local.push((id, m.rule));
            }
        }
        for (t, r) in local {
            targets.push(t);
            rules.push(r);
        }
        offsets.push(targets.len() as u32);
        head += 1;
    }
    ReachGraph { states: eng.into_states(), nodes, offsets, targets, rules, parent, node_cap, truncated }
}

/// Strongly connected components of a graph in compressed-row form.
/// Returns the component of every node; components are numbered in the
/// order Tarjan's algorithm completes them (reverse topological order).
pub fn scc(n: usize, offsets: &[u32], targets: &[u32]) -> (Vec<u32>, usize) {
    const UNSEEN: u32 = u32::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut call: Vec<(u32, u32)> = Vec::new();
    let mut next = 0u32;
    let mut ncomp = 0usize;
    for start in 0..n {
        if index[start] != UNSEEN {
            continue;
        }
        call.push((start as u32, offsets[start]));
        index[start] = next;
        low[start] = next;
        next += 1;
        stack.push(start as u32);
        on_stack[start] = true;
        while let Some(&mut (v, ref mut e)) = call.last_mut() {
            let v = v as usize;
            if *e < offsets[v + 1] {
                let w = targets[*e as usize] as usize;
                *e += 1;
                if index[w] == UNSEEN {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w as u32);
                    on_stack[w] = true;
                    call.push((w as u32, offsets[w]));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    let u = u as usize;
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().unwrap() as usize;
                        on_stack[w] = false;
                        comp[w] = ncomp as u32;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }
    (comp, ncomp)
}

/// For each node, whether it lies in a bottom SCC.
pub fn bottom_nodes(n: usize, offsets: &[u32], targets: &[u32]) -> Vec<bool> {
    let (comp, ncomp) = scc(n, offsets, targets);
    let mut bottom = vec![true; ncomp];
    for v in 0..n {
        for &w in &targets[offsets[v] as usize..offsets[v + 1] as usize] {
            if comp[w as usize] != comp[v] {
                bottom[comp[v] as usize] = false;
            }
        }
    }
    (0..n).map(|v| bottom[comp[v] as usize]).collect()
}

impl<S> ReachGraph<S> {
    pub fn bottom(&self) -> Vec<bool> {
        bottom_nodes(self.len(), &self.offsets, &self.targets)
    }
}
