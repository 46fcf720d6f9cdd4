//! Replaces wide transitions by two-agent gadgets.
//!
//! For a transition `p_1..p_k -> q_1..q_k` the gadget gathers the
//! participants one at a time into states `W_1..W_{k-1}` and `H_2..H_k`
//! (each step reversible), commits once `H_k` exists, and then emits the
//! post-states through the opinion-less states `E_{k-1}..E_2`. Agents whose
//! pre-state carries an opinion are gathered last, so such an agent goes
//! straight from `H_k` to its post-state and never passes through `E`.

use crate::protocol::{Flavor, Opinion, Protocol, StateIdx, Transition};

pub fn kway_to_2way(p: &Protocol) -> Protocol {
    if p.max_width() <= 2 {
        return p.clone();
    }
    let mut out = Protocol::new(p.variables.clone(), Flavor::General);
    for s in p.states() {
        out.add_state(s.clone());
    }
    out.inputs = p.inputs.clone();
    out.leaders = p.leaders.clone();
    out.outputs = p.outputs.clone();
    for (j, t) in p.transitions().iter().enumerate() {
        if t.width() <= 2 {
            out.add_transition(t.pre.clone(), t.post.clone(), t.label.clone());
        } else {
            gadget(&mut out, p, j, t);
        }
    }
    out.outputs.resize(out.num_states(), Opinion::Bot);
    out
}

fn gadget(out: &mut Protocol, p: &Protocol, j: usize, t: &Transition) {
    let mut agents: Vec<(StateIdx, StateIdx)> = t.pre.iter().copied().zip(t.post.iter().copied()).collect();
    agents.sort_by_key(|(a, _)| p.outputs[*a as usize] != Opinion::Bot);
    let k = agents.len();
    let pre: Vec<StateIdx> = agents.iter().map(|a| a.0).collect();
    let post: Vec<StateIdx> = agents.iter().map(|a| a.1).collect();
    // 1-based names, as in the module docs
    let mut state = |kind: &str, i: usize, o: Opinion| {
        let s = out.add_state(format!("g{j}:{kind}{i}"));
        out.outputs.resize(out.num_states(), Opinion::Bot);
        out.outputs[s as usize] = o;
        s
    };
    let w: Vec<StateIdx> = (1..k).map(|i| state("W", i, p.outputs[pre[i - 1] as usize])).collect();
    let h: Vec<StateIdx> = (2..=k).map(|i| state("H", i, p.outputs[pre[i - 1] as usize])).collect();
    let e: Vec<StateIdx> = (2..k).map(|i| state("E", i, Opinion::Bot)).collect();
    let (w, h, e) = (|i: usize| w[i - 1], |i: usize| h[i - 2], |i: usize| e[i - 2]);
    let label = &t.label;
    out.add_transition(vec![pre[0], pre[1]], vec![w(1), h(2)], format!("{label}/gather2"));
    out.add_transition(vec![w(1), h(2)], vec![pre[0], pre[1]], format!("{label}/release2"));
    for i in 3..=k {
        out.add_transition(vec![h(i - 1), pre[i - 1]], vec![w(i - 1), h(i)], format!("{label}/gather{i}"));
        out.add_transition(vec![w(i - 1), h(i)], vec![h(i - 1), pre[i - 1]], format!("{label}/release{i}"));
    }
    // E_k is H_k
    for i in (3..=k).rev() {
        let from = if i == k { h(k) } else { e(i) };
        out.add_transition(vec![from, w(i - 1)], vec![post[i - 1], e(i - 1)], format!("{label}/emit{i}"));
    }
    out.add_transition(vec![e(2), w(1)], vec![post[1], post[0]], format!("{label}/emit2"));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Formula;
    use crate::large::rdi::build_threshold_rdi;
    use crate::protocol::fixtures::pp_n;
    use crate::verify::{check_computes, inputs_of_size};
    use std::collections::BTreeMap;

    #[test]
    fn two_way_unchanged() {
        let p = pp_n(2);
        assert_eq!(kway_to_2way(&p), p);
    }

    #[test]
    fn three_way_gadget_size() {
        let mut p = Protocol::new(vec!["x".into()], Flavor::General);
        for s in ["a", "b", "c", "d", "e", "f"] {
            p.add_state(s);
        }
        p.set_input("x", 0).unwrap();
        p.add_named(&["a", "b", "c"], &["d", "e", "f"], "t");
        let q = kway_to_2way(&p);
        assert_eq!(q.num_states() - p.num_states(), 5);
        assert!(q.num_states() - p.num_states() <= 9);
        assert_eq!(q.max_width(), 2);
    }

    #[test]
    fn threshold_rdi_equivalent() {
        let vars = vec!["x".to_string()];
        let coeffs: BTreeMap<String, i64> = [("x".to_string(), 1)].into_iter().collect();
        let r = build_threshold_rdi(&vars, &coeffs, 2).unwrap();
        let q = kway_to_2way(&r.protocol);
        assert_eq!(q.max_width(), 2);
        let bound = r.protocol.num_states() + 3 * r.max_width() * r.protocol.transitions().len();
        assert!(q.num_states() <= bound);
        let phi = Formula::parse("x >= 2").unwrap();
        let inputs = inputs_of_size(&vars, 0..=3);
        let a = check_computes(&r.protocol, |v| phi.evaluate(v), &inputs, 2_000_000);
        let b = check_computes(&q, |v| phi.evaluate(v), &inputs, 2_000_000);
        assert!(a.all_pass());
        assert!(b.all_pass(), "{:?}", b.rows.iter().find(|r| r.detail.is_some()));
    }
}
