//! JSON interchange for explicit protocols.
//!
//! Maps are ordered so that serialization is byte-for-byte deterministic.
//! Each transition also lists its agents as `[pre, post]` pairs, which keeps
//! the per-agent ordering across a round trip.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Flavor, MultiOutputProtocol, Opinion, Protocol, RdiAtom, RdiProtocol, StateIdx, Transition};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionDoc {
    pub pre: BTreeMap<String, u32>,
    pub post: BTreeMap<String, u32>,
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub agents: Vec<[String; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdiDoc {
    pub coeffs: Vec<i64>,
    pub bound: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<i64>,
    pub values: Vec<i64>,
    pub n: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolDoc {
    pub states: Vec<String>,
    pub transitions: Vec<TransitionDoc>,
    #[serde(default)]
    pub leaders: BTreeMap<String, u32>,
    pub variables: Vec<String>,
    pub inputs: BTreeMap<String, String>,
    #[serde(default)]
    pub outputs: BTreeMap<String, u8>,
    pub flavor: Flavor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multi_outputs: Option<Vec<BTreeMap<String, u8>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rdi_transitions: Option<Vec<TransitionDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rdi: Option<RdiDoc>,
}

fn counts(p: &Protocol, states: &[StateIdx]) -> BTreeMap<String, u32> {
    let mut m = BTreeMap::new();
    for s in states {
        *m.entry(p.state_name(*s).to_string()).or_insert(0) += 1;
    }
    m
}

fn transition_doc(p: &Protocol, t: &Transition) -> TransitionDoc {
    TransitionDoc {
        pre: counts(p, &t.pre),
        post: counts(p, &t.post),
        label: t.label.clone(),
        agents: t
            .pre
            .iter()
            .zip(&t.post)
            .map(|(a, b)| [p.state_name(*a).to_string(), p.state_name(*b).to_string()])
            .collect(),
    }
}

fn output_map(p: &Protocol, outs: &[Opinion]) -> BTreeMap<String, u8> {
    outs.iter()
        .enumerate()
        .filter_map(|(s, o)| match o {
            Opinion::Zero => Some((p.state_name(s as StateIdx).to_string(), 0)),
            Opinion::One => Some((p.state_name(s as StateIdx).to_string(), 1)),
            Opinion::Bot => None,
        })
        .collect()
}

pub fn to_doc(p: &Protocol) -> ProtocolDoc {
    ProtocolDoc {
        states: p.states().to_vec(),
        transitions: p.transitions().iter().map(|t| transition_doc(p, t)).collect(),
        leaders: p.leaders.items().iter().map(|(s, n)| (p.state_name(*s).to_string(), *n)).collect(),
        variables: p.variables.clone(),
        inputs: p
            .variables
            .iter()
            .zip(&p.inputs)
            .map(|(x, s)| (x.clone(), p.state_name(*s).to_string()))
            .collect(),
        outputs: output_map(p, &p.outputs),
        flavor: p.flavor,
        k: None,
        multi_outputs: None,
        rdi_transitions: None,
        rdi: None,
    }
}

fn parse_transition(p: &Protocol, t: &TransitionDoc) -> Result<Transition> {
    let (pre, post) = if t.agents.is_empty() {
        let expand = |m: &BTreeMap<String, u32>| -> Result<Vec<StateIdx>> {
            let mut v = Vec::new();
            for (s, n) in m {
                let i = p.expect_state(s)?;
                v.extend(std::iter::repeat_n(i, *n as usize));
            }
            Ok(v)
        };
        (expand(&t.pre)?, expand(&t.post)?)
    } else {
        let mut pre = Vec::new();
        let mut post = Vec::new();
        for [a, b] in &t.agents {
            pre.push(p.expect_state(a)?);
            post.push(p.expect_state(b)?);
        }
        (pre, post)
    };
    let tr = Transition { pre, post, label: t.label.clone() };
    if counts(p, &tr.pre) != t.pre || counts(p, &tr.post) != t.post {
        return Err(Error::Document(format!("agents of `{}` disagree with pre/post", t.label)));
    }
    Ok(tr)
}

fn parse_opinions(p: &Protocol, m: &BTreeMap<String, u8>) -> Result<Vec<Opinion>> {
    let mut out = vec![Opinion::Bot; p.num_states()];
    for (s, b) in m {
        out[p.expect_state(s)? as usize] = match b {
            0 => Opinion::Zero,
            1 => Opinion::One,
            _ => return Err(Error::Document(format!("output of `{s}` must be 0 or 1"))),
        };
    }
    Ok(out)
}

pub fn from_doc(d: &ProtocolDoc) -> Result<Protocol> {
    let mut p = Protocol::new(d.variables.clone(), d.flavor);
    for s in &d.states {
        if p.state(s).is_some() {
            return Err(Error::Document(format!("duplicate state `{s}`")));
        }
        p.add_state(s.clone());
    }
    for t in &d.transitions {
        let tr = parse_transition(&p, t)?;
        if tr.pre.len() != tr.post.len() || tr.pre.is_empty() {
            return Err(Error::Document(format!("transition `{}` has a width mismatch", t.label)));
        }
        p.push_raw(tr);
    }
    for (s, n) in &d.leaders {
        let i = p.expect_state(s)?;
        p.add_leader(i, *n);
    }
    for x in &d.variables {
        let s = d.inputs.get(x).ok_or_else(|| Error::Document(format!("no input state for `{x}`")))?;
        let i = p.expect_state(s)?;
        p.set_input(x, i)?;
    }
    if d.inputs.len() != d.variables.len() {
        return Err(Error::Document("inputs name an undeclared variable".into()));
    }
    p.outputs = parse_opinions(&p, &d.outputs)?;
    Ok(p)
}

pub fn multi_to_doc(m: &MultiOutputProtocol) -> ProtocolDoc {
    let mut d = to_doc(&m.protocol);
    d.k = Some(m.k());
    d.multi_outputs = Some(m.outputs.iter().map(|o| output_map(&m.protocol, o)).collect());
    d
}

pub fn multi_from_doc(d: &ProtocolDoc) -> Result<MultiOutputProtocol> {
    let protocol = from_doc(d)?;
    let outs = d.multi_outputs.as_ref().ok_or_else(|| Error::Document("missing multi_outputs".into()))?;
    if d.k != Some(outs.len()) {
        return Err(Error::Document("k disagrees with multi_outputs".into()));
    }
    let outputs = outs.iter().map(|o| parse_opinions(&protocol, o)).collect::<Result<_>>()?;
    Ok(MultiOutputProtocol { protocol, outputs })
}

pub fn rdi_to_doc(r: &RdiProtocol) -> ProtocolDoc {
    let mut d = to_doc(&r.protocol);
    d.rdi_transitions = Some(r.dagger.iter().map(|t| transition_doc(&r.protocol, t)).collect());
    let (bound, modulus) = match &r.atom {
        RdiAtom::Threshold { bound, .. } => (*bound, None),
        RdiAtom::Remainder { bound, modulus, .. } => (*bound, Some(*modulus)),
    };
    d.rdi = Some(RdiDoc { coeffs: r.atom.coeffs().to_vec(), bound, modulus, values: r.values.clone(), n: r.n });
    d
}

pub fn rdi_from_doc(d: &ProtocolDoc) -> Result<RdiProtocol> {
    let protocol = from_doc(d)?;
    let dagger = d
        .rdi_transitions
        .as_ref()
        .ok_or_else(|| Error::Document("missing rdi_transitions".into()))?
        .iter()
        .map(|t| parse_transition(&protocol, t))
        .collect::<Result<Vec<_>>>()?;
    let r = d.rdi.as_ref().ok_or_else(|| Error::Document("missing rdi".into()))?;
    if r.values.len() != protocol.num_states() || r.coeffs.len() != protocol.variables.len() {
        return Err(Error::Document("rdi metadata has the wrong length".into()));
    }
    let atom = match r.modulus {
        None => RdiAtom::Threshold { coeffs: r.coeffs.clone(), bound: r.bound },
        Some(modulus) => RdiAtom::Remainder { coeffs: r.coeffs.clone(), bound: r.bound, modulus },
    };
    Ok(RdiProtocol { protocol, dagger, atom, values: r.values.clone(), n: r.n })
}

pub fn to_json(p: &Protocol) -> String {
    serde_json::to_string_pretty(&to_doc(p)).expect("protocol documents always serialize")
}

pub fn from_json(s: &str) -> Result<Protocol> {
    from_doc(&serde_json::from_str(s)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::fixtures::{p_n, pp_n};

    #[test]
    fn round_trip_fixtures() {
        for p in [p_n(2), pp_n(3)] {
            let s = to_json(&p);
            let q = from_json(&s).unwrap();
            assert_eq!(p, q);
            assert_eq!(s, to_json(&q));
        }
    }

    #[test]
    fn unknown_state_is_rejected() {
        let mut d = to_doc(&pp_n(1));
        d.transitions[0].agents[0][0] = "nope".into();
        assert!(matches!(from_doc(&d), Err(Error::UnknownState(_))));
    }

    #[test]
    fn plain_multisets_are_accepted() {
        let mut d = to_doc(&pp_n(2));
        for t in &mut d.transitions {
            t.agents.clear();
        }
        let q = from_doc(&d).unwrap();
        assert_eq!(q.transitions().len(), pp_n(2).transitions().len());
    }
}
