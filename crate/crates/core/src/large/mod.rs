//! Protocols that are correct on all populations of size at least `ℓ`.
//!
//! The chain is: normalize atoms, build one RDI protocol per distinct atom,
//! run them side by side ([`dispatch`]), combine their outputs
//! ([`boolean`]), make all transitions two-way ([`kway`]) and finally
//! replace the helpers by counting ([`helpers`]).

pub mod boolean;
pub mod dispatch;
pub mod helpers;
pub mod kway;
pub mod rdi;

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::formula::{hi_var, lo_var, normalize_remainder, normalize_threshold, tilde_transform, Atom, AtomKind, Formula, Node};
use crate::protocol::{MultiOutputProtocol, Protocol, RdiProtocol};

pub use boolean::boolean_combine;
pub use dispatch::combine_multi_output;
pub use helpers::{remove_helpers, HState, HelperFree};
pub use kway::kway_to_2way;
pub use rdi::{build_remainder_rdi, build_threshold_rdi, canonical_rep};

fn nonzero(coeffs: &BTreeMap<String, i64>) -> BTreeMap<String, i64> {
    coeffs.iter().filter(|(_, a)| **a != 0).map(|(x, a)| (x.clone(), *a)).collect()
}

/// `0 > 0`, used for mod-thresholds that are constant.
fn falsum() -> Node {
    Node::Atom(Atom::threshold(BTreeMap::new(), 0))
}

fn mod_case(coeffs: &BTreeMap<String, i64>, b: i64, m: i64) -> Result<Node> {
    if b <= 0 {
        return Ok(Node::not(falsum()));
    }
    if b >= m {
        return Ok(falsum());
    }
    let reduced = coeffs.iter().map(|(x, a)| (x.clone(), a.rem_euclid(m))).collect();
    Ok(Node::Atom(Atom::mod_threshold(nonzero(&reduced), b, m)?))
}

/// Rewrites `node` so that every threshold atom `a·v > c` has `c >= 0` and
/// every other atom is a mod-threshold `(a·v mod m) >= b` with `0 < b < m`
/// and reduced coefficients.
pub fn normalize(node: &Node) -> Result<Node> {
    Ok(match node {
        Node::Atom(a) => match a.kind {
            AtomKind::Threshold => {
                let (ge, neg) = normalize_threshold(a)?;
                let n = Node::Atom(Atom::threshold(nonzero(&ge.coeffs), ge.bound - 1));
                if neg {
                    Node::not(n)
                } else {
                    n
                }
            }
            AtomKind::Remainder => normalize(&normalize_remainder(a)?)?,
            AtomKind::ModThreshold => mod_case(&a.coeffs, a.bound, a.modulus)?,
        },
        Node::And(a, b) => Node::and(normalize(a)?, normalize(b)?),
        Node::Or(a, b) => Node::or(normalize(a)?, normalize(b)?),
        Node::Not(a) => Node::not(normalize(a)?),
    })
}

/// Distinct atoms in order of first occurrence.
pub fn distinct_atoms(node: &Node) -> Vec<Atom> {
    let mut out: Vec<Atom> = Vec::new();
    for a in node.atoms() {
        if !out.contains(a) {
            out.push(a.clone());
        }
    }
    out
}

/// RDI protocol for a normalized atom over `vars`; for `k >= 2` the atom is
/// first rewritten over the split variables `x^hi`, `x^lo`.
pub fn atom_rdi(atom: &Atom, vars: &[String], k: usize) -> Result<RdiProtocol> {
    let (vars, atom) = if k >= 2 {
        let split: Vec<String> = vars.iter().flat_map(|x| [hi_var(x), lo_var(x)]).collect();
        (split, tilde_transform(atom, k as i64))
    } else {
        (vars.to_vec(), atom.clone())
    };
    match atom.kind {
        AtomKind::Threshold => build_threshold_rdi(&vars, &atom.coeffs, atom.bound + 1),
        AtomKind::ModThreshold => {
            let m = atom.modulus;
            let reduced = atom.coeffs.iter().map(|(x, a)| (x.clone(), a.rem_euclid(m))).collect();
            build_remainder_rdi(&vars, &reduced, atom.bound, m)
        }
        AtomKind::Remainder => Err(Error::Precondition("remainder atoms must be normalized first".into())),
    }
}

/// Every intermediate protocol of the large-input chain.
#[derive(Clone, Debug)]
pub struct LargeBuild {
    pub normalized: Node,
    pub atoms: Vec<Atom>,
    pub rdis: Vec<RdiProtocol>,
    /// `None` when there is a single atom and dispatch is skipped.
    pub dispatched: Option<MultiOutputProtocol>,
    pub combined: Protocol,
    pub two_way: Protocol,
    pub helper_free: HelperFree,
    /// Number of helpers of `two_way`.
    pub ell: u64,
}

pub fn compile_large(phi: &Formula) -> Result<LargeBuild> {
    let normalized = normalize(&phi.node)?;
    let atoms = distinct_atoms(&normalized);
    let k = atoms.len();
    let rdis = atoms.iter().map(|a| atom_rdi(a, &phi.vars, k)).collect::<Result<Vec<_>>>()?;
    let index: HashMap<Atom, usize> = atoms.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
    let (mop, dispatched) = if k == 1 {
        let p = rdis[0].protocol.clone();
        let outputs = vec![p.outputs.clone()];
        (MultiOutputProtocol { protocol: p, outputs }, None)
    } else {
        let m = combine_multi_output(&rdis, &phi.vars)?;
        (m.clone(), Some(m))
    };
    let combined = boolean_combine(&mop, &normalized, &index)?;
    let two_way = kway_to_2way(&combined);
    let ell = two_way.helpers();
    let helper_free = remove_helpers(&two_way)?;
    Ok(LargeBuild { normalized, atoms, rdis, dispatched, combined, two_way, helper_free, ell })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Valuation;
    use proptest::prelude::*;

    #[test]
    fn single_threshold_has_five_helpers() {
        let phi = Formula::parse("x >= 2").unwrap();
        let b = compile_large(&phi).unwrap();
        assert_eq!(b.ell, 5);
        assert!(b.dispatched.is_none());
        assert_eq!(b.rdis[0].num_states(), 17);
    }

    #[test]
    fn negative_bound_is_negated() {
        let phi = Formula::parse("x - y > -2").unwrap();
        let n = normalize(&phi.node).unwrap();
        assert!(matches!(n, Node::Not(_)));
    }

    #[test]
    fn constant_mod_thresholds() {
        let phi = Formula::parse("x >= 0 (mod 3) & x >= 5 (mod 3)").unwrap();
        let n = normalize(&phi.node).unwrap();
        assert_eq!(distinct_atoms(&n).len(), 1);
        assert_eq!(n, Node::and(Node::not(falsum()), falsum()));
    }

    #[test]
    fn repeated_atoms_share_an_output() {
        let phi = Formula::parse("x > 1 | !(x > 1)").unwrap();
        let b = compile_large(&phi).unwrap();
        assert_eq!(b.atoms.len(), 1);
        assert_eq!(b.ell, 5 + 2);
    }

    #[test]
    fn two_atoms_dispatch() {
        let phi = Formula::parse("x > 0 & x = 1 (mod 2)").unwrap();
        let b = compile_large(&phi).unwrap();
        assert_eq!(b.atoms.len(), 3);
        let m = b.dispatched.as_ref().unwrap();
        assert_eq!(m.k(), 3);
        assert_eq!(b.two_way.max_width(), 2);
        assert!(b.ell >= 4);
    }

    fn lin(a: i64, b: i64) -> String {
        let op = if b < 0 { '-' } else { '+' };
        format!("{a}*x {op} {}*y", b.abs())
    }

    fn arb_formula() -> impl Strategy<Value = String> {
        let atom = prop_oneof![
            (-3i64..=3, -3i64..=3, -4i64..=4).prop_map(|(a, b, c)| format!("{} > {c}", lin(a, b))),
            (0i64..=4, 0i64..=4, 0i64..=5, 2i64..=5).prop_map(|(a, b, c, m)| format!("{} = {c} (mod {m})", lin(a, b))),
            (0i64..=4, -1i64..=6, 2i64..=5).prop_map(|(a, c, m)| format!("{a}*x >= {c} (mod {m})")),
        ];
        atom.prop_recursive(2, 6, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) & ({b})")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) | ({b})")),
                inner.prop_map(|a| format!("!({a})")),
            ]
        })
    }

    proptest! {
        #[test]
        fn normalization_preserves_meaning(text in arb_formula(), x in 0u64..12, y in 0u64..12) {
            let phi = Formula::parse(&text).unwrap();
            let n = normalize(&phi.node).unwrap();
            let v: Valuation = [("x".to_string(), x), ("y".to_string(), y)].into_iter().collect();
            prop_assert_eq!(n.evaluate(&v), phi.node.evaluate(&v));
            for a in n.atoms() {
                match a.kind {
                    AtomKind::Threshold => prop_assert!(a.bound >= 0),
                    AtomKind::ModThreshold => prop_assert!(0 < a.bound && a.bound < a.modulus),
                    AtomKind::Remainder => prop_assert!(false),
                }
            }
        }
    }
}
