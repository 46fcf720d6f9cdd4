//! Runs `k` RDI protocols side by side on one population.
//!
//! Each input agent for `x` is split into one input for every sub-protocol,
//! either `k` agents at once (`x^hi`) or one agent plus `k-1` helpers
//! (`x^lo`). The splits are undone only while some input agent is still
//! unsplit, so once all inputs are dispatched each sub-protocol sees an
//! effective input `w` with `v(x) = k·w(x^hi) + w(x^lo)`.

use crate::error::{Error, Result};
use crate::formula::{hi_var, lo_var};
use crate::protocol::{Flavor, MultiOutputProtocol, Opinion, Protocol, RdiProtocol, StateIdx};

use super::rdi::port;

pub fn helper_state(x: &str) -> String {
    format!("h:{x}")
}

pub fn sub_state(i: usize, name: &str) -> String {
    format!("a{i}:{name}")
}

pub fn combine_multi_output(rdis: &[RdiProtocol], vars: &[String]) -> Result<MultiOutputProtocol> {
    let k = rdis.len();
    if k < 2 {
        return Err(Error::Precondition("dispatch needs at least two sub-protocols".into()));
    }
    let split_vars: Vec<String> = vars.iter().flat_map(|x| [hi_var(x), lo_var(x)]).collect();
    for r in rdis {
        if r.protocol.variables != split_vars {
            return Err(Error::VariableMismatch(format!(
                "sub-protocol over {:?}, expected {:?}",
                r.protocol.variables, split_vars
            )));
        }
    }
    let mut p = Protocol::new(vars.to_vec(), Flavor::General);
    let mut ports = Vec::new();
    let mut helpers = Vec::new();
    for x in vars {
        let s = p.add_state(port(x));
        p.set_input(x, s)?;
        ports.push(s);
        let h = p.add_state(helper_state(x));
        p.add_leader(h, ((k - 1) * (k - 1)) as u32);
        helpers.push(h);
    }
    let mut maps: Vec<Vec<StateIdx>> = Vec::new();
    for (i, r) in rdis.iter().enumerate() {
        let map: Vec<StateIdx> = r.protocol.states().iter().map(|s| p.add_state(sub_state(i, s))).collect();
        for (s, n) in r.protocol.leaders.items() {
            p.add_leader(map[*s as usize], *n);
        }
        maps.push(map);
    }
    let sub_input = |i: usize, var: &str| -> StateIdx {
        let r = &rdis[i].protocol;
        maps[i][r.input_of(var).expect("split variable") as usize]
    };

    let mut splits: Vec<(Vec<StateIdx>, Vec<StateIdx>, String)> = Vec::new();
    for (j, x) in vars.iter().enumerate() {
        let hi: Vec<StateIdx> = (0..k).map(|i| sub_input(i, &hi_var(x))).collect();
        let lo: Vec<StateIdx> = (0..k).map(|i| sub_input(i, &lo_var(x))).collect();
        splits.push((vec![ports[j]; k], hi, format!("split_hi_{x}")));
        let mut pre = vec![ports[j]];
        pre.extend(std::iter::repeat_n(helpers[j], k - 1));
        splits.push((pre, lo, format!("split_lo_{x}")));
    }
    for (pre, post, label) in &splits {
        p.add_transition(pre.clone(), post.clone(), label.clone());
    }
    let guarded = |p: &mut Protocol, pre: &[StateIdx], post: &[StateIdx], label: &str| {
        for (j, y) in vars.iter().enumerate() {
            let mut a = pre.to_vec();
            a.push(ports[j]);
            let mut b = post.to_vec();
            b.push(ports[j]);
            p.add_transition(a, b, format!("{label}|{y}"));
        }
    };
    for (pre, post, label) in &splits {
        guarded(&mut p, post, pre, &format!("{label}^-1"));
    }
    for (i, r) in rdis.iter().enumerate() {
        let lift = |v: &[StateIdx]| -> Vec<StateIdx> { v.iter().map(|s| maps[i][*s as usize]).collect() };
        for t in r.protocol.transitions() {
            p.add_transition(lift(&t.pre), lift(&t.post), sub_state(i, &t.label));
        }
        for t in &r.dagger {
            guarded(&mut p, &lift(&t.pre), &lift(&t.post), &sub_state(i, &t.label));
        }
    }
    let outputs = rdis
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut o = vec![Opinion::Bot; p.num_states()];
            for (s, out) in r.protocol.outputs.iter().enumerate() {
                o[maps[i][s] as usize] = *out;
            }
            o
        })
        .collect();
    Ok(MultiOutputProtocol { protocol: p, outputs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{tilde_transform, Atom};
    use crate::large::rdi::build_threshold_rdi;
    use std::collections::BTreeMap;

    fn rdi_for(k: i64) -> RdiProtocol {
        let atom = Atom::threshold([("x".to_string(), 1)].into_iter().collect::<BTreeMap<_, _>>(), 1);
        let t = tilde_transform(&atom, k);
        let vars = vec![hi_var("x"), lo_var("x")];
        build_threshold_rdi(&vars, &t.coeffs, 2).unwrap()
    }

    #[test]
    fn helper_contribution() {
        let rdis: Vec<RdiProtocol> = (0..5).map(|_| rdi_for(5)).collect();
        let m = combine_multi_output(&rdis, &["x".to_string()]).unwrap();
        let h = m.protocol.state("h:x").unwrap();
        assert_eq!(m.protocol.leaders.count(&h), 16);
        let sub: u64 = rdis.iter().map(|r| r.helpers()).sum();
        assert_eq!(m.protocol.helpers(), 16 + sub);
        assert_eq!(m.k(), 5);
        let hi = m.protocol.transitions().iter().find(|t| t.label == "split_hi_x").unwrap();
        assert_eq!(hi.pre.len(), 5);
        assert_eq!(hi.post.len(), 5);
    }

    #[test]
    fn dispatch_of_seventeen() {
        // 17 = 5·3 + 2: three hi splits and two lo splits consume 17 agents
        // and 8 helpers, and produce 25 sub-protocol inputs
        let rdis: Vec<RdiProtocol> = (0..5).map(|_| rdi_for(5)).collect();
        let m = combine_multi_output(&rdis, &["x".to_string()]).unwrap();
        let p = &m.protocol;
        let v = [("x".to_string(), 17)].into_iter().collect();
        let mut c = p.initial_config(&v).unwrap();
        let hi = p.transitions().iter().position(|t| t.label == "split_hi_x").unwrap();
        let lo = p.transitions().iter().position(|t| t.label == "split_lo_x").unwrap();
        for _ in 0..3 {
            c = p.fire(&c, hi);
        }
        for _ in 0..2 {
            c = p.fire(&c, lo);
        }
        assert_eq!(c.count(&p.state("in:x").unwrap()), 0);
        let dispatched: u32 = (0..5)
            .map(|i| {
                c.count(&p.state(&sub_state(i, "in:x^hi")).unwrap()) + c.count(&p.state(&sub_state(i, "in:x^lo")).unwrap())
            })
            .sum();
        assert_eq!(dispatched, 25);
        for i in 0..5 {
            assert_eq!(c.count(&p.state(&sub_state(i, "in:x^hi")).unwrap()), 3);
            assert_eq!(c.count(&p.state(&sub_state(i, "in:x^lo")).unwrap()), 2);
        }
    }

    #[test]
    fn rejects_single_protocol() {
        assert!(combine_multi_output(&[rdi_for(1)], &["x".to_string()]).is_err());
    }
}
