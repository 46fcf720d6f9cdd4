//! Boolean combinations of halting protocols by concatenation.
//!
//! Every agent carries a tag: its input variable, or `□` for the leader.
//! Tags never change, so an agent can always be restarted in another part
//! from its initial state there. When the leader of a part halts, the value
//! travels up the tree: `¬` flips it, the left child of `∧` continues into
//! the right child on `true` and short-circuits on `false`, `∨` dually. At
//! the root the leader becomes a final state. Agents left behind in an
//! earlier part are moved forward when they meet an agent of a later one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::Valuation;
use crate::protocol::{Config, Flavor, Opinion, Protocol, StateIdx};
use crate::system::{initial_from, Agents, Move, Population};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HaltNode {
    Leaf(usize),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HaltState {
    /// Agent with tag `tag` in state `s` of leaf `leaf`.
    Run { tag: u32, leaf: u32, s: StateIdx },
    Done(bool),
}

#[derive(Clone, Debug)]
struct Leaf {
    leader: StateIdx,
    f: StateIdx,
    t: StateIdx,
    node: usize,
    rule_offset: u32,
}

/// Halting protocol for a boolean tree over simple halting leaves, each with
/// exactly one leader.
#[derive(Clone, Debug)]
pub struct HaltTree {
    vars: Vec<String>,
    parts: Vec<Protocol>,
    nodes: Vec<HaltNode>,
    root: usize,
    parent: Vec<Option<usize>>,
    leaves: Vec<Leaf>,
    /// `forward[a][b]`: node an agent of leaf `a` restarts in when it meets
    /// an agent of leaf `b`.
    forward: Vec<Vec<Option<usize>>>,
    convert_rule: u32,
}

impl HaltTree {
    /// `nodes[root]` is the root; leaves refer to `parts` by index.
    pub fn new(parts: Vec<Protocol>, nodes: Vec<HaltNode>, root: usize) -> Result<HaltTree> {
        let vars = parts.first().map(|p| p.variables.clone()).ok_or_else(|| Error::Precondition("no parts".into()))?;
        let mut parent = vec![None; nodes.len()];
        for (i, n) in nodes.iter().enumerate() {
            let children = match n {
                HaltNode::Leaf(_) => vec![],
                HaltNode::Not(a) => vec![*a],
                HaltNode::And(a, b) | HaltNode::Or(a, b) => vec![*a, *b],
            };
            for c in children {
                if c >= nodes.len() || parent[c].is_some() {
                    return Err(Error::Precondition("halting tree is not a tree".into()));
                }
                parent[c] = Some(i);
            }
        }
        let mut leaves = Vec::new();
        let mut offset = 0u32;
        for (j, p) in parts.iter().enumerate() {
            if p.flavor != Flavor::Halting {
                return Err(Error::Precondition(format!("part {j} is not halting")));
            }
            if p.variables != vars {
                return Err(Error::VariableMismatch(format!("part {j} has other variables")));
            }
            let ls: Vec<StateIdx> = p.leaders.elems().copied().collect();
            let [leader] = ls[..] else {
                return Err(Error::Precondition(format!("part {j} needs exactly one leader")));
            };
            let (f, t) = p.simple_outputs()?;
            let node = nodes
                .iter()
                .position(|n| *n == HaltNode::Leaf(j))
                .ok_or_else(|| Error::Precondition(format!("part {j} is not used")))?;
            leaves.push(Leaf { leader, f, t, node, rule_offset: offset });
            offset += p.transitions().len() as u32;
        }
        let mut tree = HaltTree {
            vars,
            parts,
            nodes,
            root,
            parent,
            leaves,
            forward: Vec::new(),
            convert_rule: offset,
        };
        tree.forward = (0..tree.leaves.len())
            .map(|a| (0..tree.leaves.len()).map(|b| tree.forward_node(a, b)).collect())
            .collect();
        Ok(tree)
    }

    fn ancestors(&self, mut n: usize) -> Vec<usize> {
        let mut out = vec![n];
        while let Some(p) = self.parent[n] {
            out.push(p);
            n = p;
        }
        out
    }

    fn forward_node(&self, a: usize, b: usize) -> Option<usize> {
        if a == b {
            return None;
        }
        let pa = self.ancestors(self.leaves[a].node);
        let pb = self.ancestors(self.leaves[b].node);
        let lca = *pa.iter().find(|n| pb.contains(n))?;
        match self.nodes[lca] {
            HaltNode::And(c1, c2) | HaltNode::Or(c1, c2) if pa.contains(&c1) && pb.contains(&c2) => Some(c2),
            _ => None,
        }
    }

    pub fn parts(&self) -> &[Protocol] {
        &self.parts
    }

    pub fn nodes(&self) -> &[HaltNode] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.root
    }

    const LEADER: u32 = u32::MAX;

    fn start(&self, node: usize, tag: u32) -> HaltState {
        match self.nodes[node] {
            HaltNode::Leaf(j) => {
                let p = &self.parts[j];
                let s = if tag == Self::LEADER { self.leaves[j].leader } else { p.inputs[tag as usize] };
                HaltState::Run { tag, leaf: j as u32, s }
            }
            HaltNode::Not(c) | HaltNode::And(c, _) | HaltNode::Or(c, _) => self.start(c, tag),
        }
    }

    /// State of an agent whose subtree `node` just finished with `val`.
    fn resolve(&self, node: usize, tag: u32, val: bool) -> HaltState {
        let Some(p) = self.parent[node] else { return HaltState::Done(val) };
        match self.nodes[p] {
            HaltNode::Not(_) => self.resolve(p, tag, !val),
            HaltNode::And(c1, c2) if node == c1 && val => self.start(c2, tag),
            HaltNode::Or(c1, c2) if node == c1 && !val => self.start(c2, tag),
            _ => self.resolve(p, tag, val),
        }
    }

    fn lift(&self, tag: u32, leaf: u32, s: StateIdx) -> HaltState {
        let l = &self.leaves[leaf as usize];
        if s == l.f {
            self.resolve(l.node, tag, false)
        } else if s == l.t {
            self.resolve(l.node, tag, true)
        } else {
            HaltState::Run { tag, leaf, s }
        }
    }

    /// `Σ |Y|·|Q_j| + 2` with `Y = X ∪ {□}`.
    pub fn nominal_states(&self) -> u64 {
        let y = self.vars.len() as u64 + 1;
        self.parts.iter().map(|p| y * p.num_states() as u64).sum::<u64>() + 2
    }

    pub fn nominal_transitions(&self) -> u64 {
        let y = self.vars.len() as u64 + 1;
        self.parts.iter().map(|p| y * y * p.transitions().len() as u64).sum()
    }
}

impl Population for HaltTree {
    type State = HaltState;

    fn variables(&self) -> &[String] {
        &self.vars
    }

    fn initial_config(&self, v: &Valuation) -> Result<Config<HaltState>> {
        initial_from(self, v)
    }

    fn opinion(&self, s: &HaltState) -> Opinion {
        match s {
            HaltState::Done(b) => Opinion::from_bool(*b),
            HaltState::Run { .. } => Opinion::Bot,
        }
    }

    fn render(&self, s: &HaltState) -> String {
        match s {
            HaltState::Done(b) => if *b { "t" } else { "f" }.into(),
            HaltState::Run { tag, leaf, s } => {
                let tag = if *tag == Self::LEADER { "□" } else { &self.vars[*tag as usize] };
                format!("{tag}|{leaf}:{}", self.parts[*leaf as usize].state_name(*s))
            }
        }
    }

    fn local_moves(&self, agents: &[HaltState]) -> Vec<Move<HaltState>> {
        let mut out = Vec::new();
        match agents {
            [a @ HaltState::Run { tag, leaf, s }] => {
                let p = &self.parts[*leaf as usize];
                for &k in p.single_transitions(*s) {
                    let post = p.transitions()[k as usize].post[0];
                    out.push(Move::new([(*a, self.lift(*tag, *leaf, post))], self.leaves[*leaf as usize].rule_offset + k));
                }
            }
            [a @ HaltState::Run { tag: ta, leaf: la, s: sa }, b @ HaltState::Run { tag: tb, leaf: lb, s: sb }] => {
                if la == lb {
                    let p = &self.parts[*la as usize];
                    let off = self.leaves[*la as usize].rule_offset;
                    for &k in p.pair_transitions(*sa, *sb) {
                        let t = &p.transitions()[k as usize];
                        let (pa, pb) = if t.pre[0] == *sa { (t.post[0], t.post[1]) } else { (t.post[1], t.post[0]) };
                        out.push(Move::new([(*a, self.lift(*ta, *la, pa)), (*b, self.lift(*tb, *lb, pb))], off + k));
                    }
                } else if let Some(n) = self.forward[*la as usize][*lb as usize] {
                    out.push(Move::new([(*a, self.start(n, *ta)), (*b, *b)], self.convert_rule));
                } else if let Some(n) = self.forward[*lb as usize][*la as usize] {
                    out.push(Move::new([(*a, *a), (*b, self.start(n, *tb))], self.convert_rule));
                }
            }
            _ => {}
        }
        out.retain(|m| !m.is_identity());
        out
    }

    fn rule_name(&self, rule: u32) -> String {
        if rule == self.convert_rule {
            return "forward".into();
        }
        let j = self.leaves.iter().rposition(|l| l.rule_offset <= rule).unwrap_or(0);
        format!("{j}:{}", self.parts[j].transitions()[(rule - self.leaves[j].rule_offset) as usize].label)
    }
}

impl Agents for HaltTree {
    fn input_state(&self, x: usize) -> HaltState {
        self.start(self.root, x as u32)
    }

    fn leader_states(&self) -> Vec<HaltState> {
        vec![self.start(self.root, Self::LEADER)]
    }
}

/// Shape of a boolean combination, with leaves numbered left to right.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Shape {
    Leaf,
    Not(Box<Shape>),
    And(Box<Shape>, Box<Shape>),
    Or(Box<Shape>, Box<Shape>),
}

fn flatten(s: &Shape, nodes: &mut Vec<HaltNode>, leaf: &mut usize) -> usize {
    let n = match s {
        Shape::Leaf => {
            *leaf += 1;
            HaltNode::Leaf(*leaf - 1)
        }
        Shape::Not(a) => HaltNode::Not(flatten(a, nodes, leaf)),
        Shape::And(a, b) => {
            let a = flatten(a, nodes, leaf);
            HaltNode::And(a, flatten(b, nodes, leaf))
        }
        Shape::Or(a, b) => {
            let a = flatten(a, nodes, leaf);
            HaltNode::Or(a, flatten(b, nodes, leaf))
        }
    };
    nodes.push(n);
    nodes.len() - 1
}

/// Combines `parts` (one per leaf of `shape`, left to right).
pub fn halting_boolean_combine(parts: Vec<Protocol>, shape: &Shape) -> Result<HaltTree> {
    let mut nodes = Vec::new();
    let mut leaf = 0;
    let root = flatten(shape, &mut nodes, &mut leaf);
    if leaf != parts.len() {
        return Err(Error::Precondition(format!("{} parts for {leaf} leaves", parts.len())));
    }
    HaltTree::new(parts, nodes, root)
}
