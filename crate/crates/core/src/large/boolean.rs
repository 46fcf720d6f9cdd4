//! Boolean combination of the outputs of a multi-output protocol.
//!
//! Every connective gets its own output pair and one helper that starts at
//! the pair's `f`. The helper repeatedly reads the output helpers of its
//! children and rewrites its own value.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::formula::{Atom, Node};
use crate::protocol::{Flavor, MultiOutputProtocol, Opinion, Protocol, StateIdx};

/// `(f, t)` states of one output.
type Pair = (StateIdx, StateIdx);

fn leaf_pair(mop: &MultiOutputProtocol, i: usize) -> Result<Pair> {
    let o = &mop.outputs[i];
    let find = |want| {
        let v: Vec<usize> = (0..o.len()).filter(|s| o[*s] == want).collect();
        match v.as_slice() {
            [s] => Ok(*s as StateIdx),
            _ => Err(Error::Precondition(format!("output {i} is not simple"))),
        }
    };
    Ok((find(Opinion::Zero)?, find(Opinion::One)?))
}

struct Combiner<'a> {
    p: Protocol,
    leaves: Vec<Pair>,
    index: &'a HashMap<Atom, usize>,
    next: usize,
}

impl Combiner<'_> {
    fn fresh(&mut self) -> Pair {
        let j = self.next;
        self.next += 1;
        let f = self.p.add_state(format!("b{j}:f"));
        let t = self.p.add_state(format!("b{j}:t"));
        self.p.add_leader(f, 1);
        (f, t)
    }

    fn build(&mut self, node: &Node) -> Result<Pair> {
        match node {
            Node::Atom(a) => {
                let i = *self.index.get(a).ok_or_else(|| Error::Precondition(format!("atom `{a}` has no output")))?;
                Ok(self.leaves[i])
            }
            Node::Not(a) => {
                let q = self.build(a)?;
                let o = self.fresh();
                let j = self.next - 1;
                for (val, qs) in [(false, q.0), (true, q.1)] {
                    let (wrong, right) = if val { (o.1, o.0) } else { (o.0, o.1) };
                    self.p.add_transition(vec![qs, wrong], vec![qs, right], format!("not{j}_{}", val as u8));
                }
                Ok(o)
            }
            Node::And(a, b) | Node::Or(a, b) => {
                let and = matches!(node, Node::And(..));
                let q = self.build(a)?;
                let r = self.build(b)?;
                let o = self.fresh();
                let j = self.next - 1;
                let name = if and { "and" } else { "or" };
                for x in [false, true] {
                    for y in [false, true] {
                        let c = if and { x && y } else { x || y };
                        let (wrong, right) = if c { (o.0, o.1) } else { (o.1, o.0) };
                        let qs = if x { q.1 } else { q.0 };
                        let rs = if y { r.1 } else { r.0 };
                        let label = format!("{name}{j}_{}{}", x as u8, y as u8);
                        if q == r {
                            // both children share one output helper
                            if x == y {
                                self.p.add_transition(vec![qs, wrong], vec![qs, right], label);
                            }
                        } else {
                            self.p.add_transition(vec![qs, rs, wrong], vec![qs, rs, right], label);
                        }
                    }
                }
                Ok(o)
            }
        }
    }
}

/// Simple protocol for the boolean combination `phi` of the outputs of
/// `mop`, where atom `a` is read from output `atom_index[a]`.
pub fn boolean_combine(mop: &MultiOutputProtocol, phi: &Node, atom_index: &HashMap<Atom, usize>) -> Result<Protocol> {
    let leaves = (0..mop.k()).map(|i| leaf_pair(mop, i)).collect::<Result<Vec<_>>>()?;
    if let Node::Atom(a) = phi {
        let i = *atom_index.get(a).ok_or_else(|| Error::Precondition(format!("atom `{a}` has no output")))?;
        return Ok(mop.projection(i));
    }
    let mut p = mop.protocol.clone();
    p.outputs = vec![Opinion::Bot; p.num_states()];
    let mut c = Combiner { p, leaves, index: atom_index, next: 0 };
    let (f, t) = c.build(phi)?;
    let mut p = c.p;
    p.outputs.resize(p.num_states(), Opinion::Bot);
    p.set_output(f, Opinion::Zero);
    p.set_output(t, Opinion::One);
    p.flavor = Flavor::Simple;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Formula;
    use crate::protocol::fixtures::pp_n;
    use crate::verify::{check_computes, inputs_of_size};

    /// Two-output protocol: output 0 is `x >= 2`, output 1 is `y >= 1`,
    /// each with its own flag agent.
    fn two_flags() -> (MultiOutputProtocol, Formula) {
        let mut p = Protocol::new(vec!["x".into(), "y".into()], Flavor::General);
        let x = p.add_state("x");
        let y = p.add_state("y");
        let x2 = p.add_state("x2");
        let f0 = p.add_state("f0");
        let t0 = p.add_state("t0");
        let f1 = p.add_state("f1");
        let t1 = p.add_state("t1");
        p.set_input("x", x).unwrap();
        p.set_input("y", y).unwrap();
        p.add_leader(f0, 1);
        p.add_leader(f1, 1);
        p.add_transition(vec![x, x], vec![x2, x2], "pair");
        p.add_transition(vec![x2, x], vec![x2, x2], "spread");
        p.add_transition(vec![x2, f0], vec![x2, t0], "seen_x");
        p.add_transition(vec![y, f1], vec![y, t1], "seen_y");
        let n = p.num_states();
        let mut o0 = vec![Opinion::Bot; n];
        o0[f0 as usize] = Opinion::Zero;
        o0[t0 as usize] = Opinion::One;
        let mut o1 = vec![Opinion::Bot; n];
        o1[f1 as usize] = Opinion::Zero;
        o1[t1 as usize] = Opinion::One;
        let phi = Formula::parse("x > 1 & !(y > 0)").unwrap();
        (MultiOutputProtocol { protocol: p, outputs: vec![o0, o1] }, phi)
    }

    fn index_of(phi: &Formula) -> HashMap<Atom, usize> {
        let mut ix = HashMap::new();
        for a in phi.node.atoms() {
            let k = ix.len();
            ix.entry(a.clone()).or_insert(k);
        }
        ix
    }

    #[test]
    fn adds_two_states_and_one_helper_per_connective() {
        let (m, phi) = two_flags();
        let p = boolean_combine(&m, &phi.node, &index_of(&phi)).unwrap();
        assert_eq!(p.num_states(), m.protocol.num_states() + 4);
        assert_eq!(p.helpers(), m.protocol.helpers() + 2);
        assert!(p.validate().is_empty(), "{:?}", p.validate());
    }

    #[test]
    fn and_transitions_present() {
        let (m, _) = two_flags();
        let phi = Formula::parse("x > 1 & y > 0").unwrap();
        let p = boolean_combine(&m, &phi.node, &index_of(&phi)).unwrap();
        let t0 = p.state("t0").unwrap();
        let t1 = p.state("t1").unwrap();
        let (bf, bt) = (p.state("b0:f").unwrap(), p.state("b0:t").unwrap());
        assert!(p.transitions().iter().any(|t| t.pre == vec![t0, t1, bf] && t.post == vec![t0, t1, bt]));
    }

    #[test]
    fn combination_is_correct() {
        let (m, phi) = two_flags();
        let p = boolean_combine(&m, &phi.node, &index_of(&phi)).unwrap();
        let inputs = inputs_of_size(&p.variables, 1..=4);
        let r = check_computes(&p, |v| phi.evaluate(v), &inputs, 100_000);
        assert!(r.all_pass(), "{:?}", r.rows.iter().find(|r| r.detail.is_some()));
    }

    #[test]
    fn shared_child() {
        let (m, _) = two_flags();
        let phi = Formula::parse("x > 1 | x > 1").unwrap();
        let p = boolean_combine(&m, &phi.node, &index_of(&phi)).unwrap();
        let inputs = inputs_of_size(&p.variables, 0..=4);
        assert!(check_computes(&p, |v| phi.evaluate(v), &inputs, 100_000).all_pass());
    }

    #[test]
    fn atomic_is_projection() {
        let p = pp_n(1);
        let m = MultiOutputProtocol { protocol: p.clone(), outputs: vec![p.outputs.clone()] };
        let phi = Formula::parse("x > 1").unwrap();
        // a full-output fixture is not simple, so leaf lookup fails
        assert!(boolean_combine(&m, &phi.node, &index_of(&phi)).is_err());
        let (m, _) = two_flags();
        let q = boolean_combine(&m, &phi.node, &index_of(&phi)).unwrap();
        assert_eq!(q, m.projection(0));
    }
}
