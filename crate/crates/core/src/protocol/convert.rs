//! Conversions between simple and full-output protocols.

use super::{Flavor, Opinion, Protocol, StateIdx};
use crate::error::{Error, Result};

/// Name of the copy of `s` carrying opinion bit `b`.
pub fn copy_name(s: &str, b: bool) -> String {
    format!("{s}#{}", b as u8)
}

/// Doubles the state set into an opinion-0 copy and an opinion-1 copy.
///
/// Lifted transitions may reassign bits freely unless all participants
/// agree, in which case the common bit is kept. States with output 0 pull
/// every agent towards bit 0, states with output 1 towards bit 1. For a
/// simple protocol those are exactly `f` and `t`; other protocols are handled
/// the same way using all opinionated states.
pub fn spp_to_fopp(p: &Protocol) -> Result<Protocol> {
    if p.flavor == Flavor::FullOutput && p.outputs.contains(&Opinion::Bot) {
        return Err(Error::Precondition("full-output protocol with a state lacking output".into()));
    }
    let n = p.num_states() as StateIdx;
    let mut q = Protocol::new(p.variables.clone(), Flavor::FullOutput);
    for s in 0..n {
        let name = p.state_name(s);
        for b in [false, true] {
            let c = q.add_state(copy_name(name, b));
            q.set_output(c, Opinion::from_bool(b));
        }
    }
    let cp = |s: StateIdx, b: bool| 2 * s + b as StateIdx;
    let lift = |q: &mut Protocol, pre: &[StateIdx], post: &[StateIdx], label: &str| {
        let k = pre.len();
        for pb in 0u32..(1 << k) {
            let bits: Vec<bool> = (0..k).map(|j| pb >> j & 1 == 1).collect();
            let uniform = bits.iter().all(|b| *b == bits[0]);
            let pre_c: Vec<StateIdx> = pre.iter().zip(&bits).map(|(s, b)| cp(*s, *b)).collect();
            if uniform {
                let post_c = post.iter().map(|s| cp(*s, bits[0])).collect();
                q.add_transition(pre_c, post_c, label);
            } else {
                for qb in 0u32..(1 << k) {
                    let post_c = post.iter().enumerate().map(|(j, s)| cp(*s, qb >> j & 1 == 1)).collect();
                    q.add_transition(pre_c.clone(), post_c, label);
                }
            }
        }
    };
    for t in p.transitions() {
        lift(&mut q, &t.pre, &t.post, &t.label);
    }
    // the implicit identities also re-colour agents whose bits disagree
    for a in 0..n {
        for b in a..n {
            lift(&mut q, &[a, b], &[a, b], "id");
        }
    }
    for s in 0..n {
        match p.outputs[s as usize] {
            Opinion::Zero => {
                q.add_transition(vec![cp(s, true)], vec![cp(s, false)], "sink0");
                for a in 0..n {
                    q.add_transition(vec![cp(a, true), cp(s, false)], vec![cp(a, false), cp(s, false)], "pull0");
                }
            }
            Opinion::One => {
                q.add_transition(vec![cp(s, false)], vec![cp(s, true)], "sink1");
                for a in 0..n {
                    q.add_transition(vec![cp(a, false), cp(s, true)], vec![cp(a, true), cp(s, true)], "pull1");
                }
            }
            Opinion::Bot => {}
        }
    }
    for (i, s) in p.inputs.iter().enumerate() {
        q.inputs[i] = cp(*s, false);
    }
    for (s, k) in p.leaders.items() {
        q.add_leader(cp(*s, false), *k);
    }
    Ok(q)
}

pub const OUT_F: &str = "out:f";
pub const OUT_T: &str = "out:t";
pub const OUT_BOT: &str = "out:_";

/// Adds witness states `f`, `t` and an undecided state holding one extra
/// leader that copies the opinion of whoever it meets.
pub fn fopp_to_spp(p: &Protocol) -> Result<Protocol> {
    if p.outputs.contains(&Opinion::Bot) {
        return Err(Error::Precondition("fopp_to_spp needs an output for every state".into()));
    }
    let mut q = p.clone();
    q.outputs = vec![Opinion::Bot; q.num_states()];
    q.flavor = Flavor::Simple;
    let f = q.add_state(OUT_F);
    let t = q.add_state(OUT_T);
    let u = q.add_state(OUT_BOT);
    q.set_output(f, Opinion::Zero);
    q.set_output(t, Opinion::One);
    q.add_leader(u, 1);
    for s in 0..p.num_states() as StateIdx {
        let target = if p.outputs[s as usize] == Opinion::Zero { f } else { t };
        for w in [f, t, u] {
            q.add_transition(vec![s, w], vec![s, target], "witness");
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::fixtures::{p_n, pp_n};

    #[test]
    fn doubling() {
        let p = pp_n(2);
        let q = spp_to_fopp(&p).unwrap();
        assert_eq!(q.num_states(), 2 * p.num_states());
        assert!(q.validate().is_empty());
    }

    #[test]
    fn simple_input_has_the_sink_rules() {
        let p = fopp_to_spp(&pp_n(1)).unwrap();
        let q = spp_to_fopp(&p).unwrap();
        let f1 = q.state(&copy_name(OUT_F, true)).unwrap();
        let f0 = q.state(&copy_name(OUT_F, false)).unwrap();
        assert!(q.transitions().iter().any(|t| t.pre == vec![f1] && t.post == vec![f0]));
        let a1 = q.state(&copy_name("0", true)).unwrap();
        let a0 = q.state(&copy_name("0", false)).unwrap();
        assert!(q.transitions().iter().any(|t| t.pre == vec![a1, f0] && t.post == vec![a0, f0]));
    }

    #[test]
    fn witness_accounting() {
        let p = p_n(1);
        let q = fopp_to_spp(&p).unwrap();
        assert_eq!(q.num_states(), p.num_states() + 3);
        assert_eq!(q.helpers(), p.helpers() + 1);
        assert!(q.validate().is_empty());
    }
}
