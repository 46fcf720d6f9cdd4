//! Protocols that are correct on all populations of size below `ℓ`.
//!
//! For every size `i` in `2..ℓ` the predicate is decided by a halting
//! protocol with one leader ([`halting`], built from [`greater_sum`]
//! atoms). [`fixed`] runs the right one of them depending on the population
//! size, and [`leader`] removes the remaining leader.

pub mod fixed;
pub mod greater_sum;
pub mod halting;
pub mod leader;

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::formula::{Atom, AtomKind, Formula, Node};
use crate::large::normalize;
use crate::protocol::Protocol;
use crate::system::Population;

pub use fixed::{FState, FixedSize};
pub use greater_sum::{build_greater_sum_halting, greater_sum};
pub use halting::{halting_boolean_combine, HaltNode, HaltState, HaltTree, Shape};
pub use leader::{remove_single_leader, KState, KillLeader};

/// The leaderless protocol for `(|v| < ℓ) -> φ(v)`.
pub type SmallProtocol = KillLeader<FixedSize<HaltTree>>;

fn gs_leaf(vars: &[String], coeffs: &BTreeMap<String, i64>, c: i64, i: u64, parts: &mut Vec<Protocol>) -> Result<Shape> {
    parts.push(greater_sum(vars, coeffs, c, i)?);
    Ok(Shape::Leaf)
}

/// `lo <= a·v <= hi` as a conjunction of two strict thresholds.
fn between(vars: &[String], a: &BTreeMap<String, i64>, lo: i64, hi: i64, i: u64, parts: &mut Vec<Protocol>) -> Result<Shape> {
    let ge = gs_leaf(vars, a, lo - 1, i, parts)?;
    let gt = gs_leaf(vars, a, hi, i, parts)?;
    Ok(Shape::And(Box::new(ge), Box::new(Shape::Not(Box::new(gt)))))
}

fn disjunction(mut ds: Vec<Shape>) -> Shape {
    let last = ds.pop().expect("at least one disjunct");
    ds.into_iter().rev().fold(last, |acc, d| Shape::Or(Box::new(d), Box::new(acc)))
}

fn reduced(coeffs: &BTreeMap<String, i64>, m: i64) -> BTreeMap<String, i64> {
    coeffs.iter().map(|(x, a)| (x.clone(), a.rem_euclid(m))).filter(|(_, a)| *a != 0).collect()
}

/// Shape and parts for `a·v ≡ b (mod m)` at size `i`: the disjunction over
/// `j < i` of `a'·v = j·m + b'`, where `'` reduces mod `m`. Since every
/// reduced coefficient is below `m`, `a'·v < i·m` and `i` disjuncts suffice.
fn congruence_shape(vars: &[String], coeffs: &BTreeMap<String, i64>, m: i64, b: i64, i: u64, parts: &mut Vec<Protocol>) -> Result<Shape> {
    let a = reduced(coeffs, m);
    let b = b.rem_euclid(m);
    let ds = (0..i as i64).map(|j| between(vars, &a, j * m + b, j * m + b, i, parts)).collect::<Result<Vec<_>>>()?;
    Ok(disjunction(ds))
}

/// Halting protocol for `a·v ≡ b (mod m)` on inputs of size `i`.
pub fn build_remainder_halting(vars: &[String], coeffs: &BTreeMap<String, i64>, m: i64, b: i64, i: u64) -> Result<HaltTree> {
    if m < 2 {
        return Err(Error::InvalidModulus(m));
    }
    let mut parts = Vec::new();
    let shape = congruence_shape(vars, coeffs, m, b, i, &mut parts)?;
    halting_boolean_combine(parts, &shape)
}

/// `(a·v mod m) >= b` at size `i`, as the disjunction of the windows
/// `[j·m + b, j·m + m - 1]` that the sum can reach.
fn mod_threshold_shape(vars: &[String], atom: &Atom, i: u64, parts: &mut Vec<Protocol>) -> Result<Shape> {
    let m = atom.modulus;
    let a = reduced(&atom.coeffs, m);
    let top = i as i64 * a.values().copied().max().unwrap_or(0);
    let ds = (0..=top / m)
        .map(|j| between(vars, &a, j * m + atom.bound, j * m + m - 1, i, parts))
        .collect::<Result<Vec<_>>>()?;
    Ok(disjunction(ds))
}

fn shape_for(node: &Node, vars: &[String], i: u64, parts: &mut Vec<Protocol>) -> Result<Shape> {
    Ok(match node {
        Node::Atom(a) => match a.kind {
            AtomKind::Threshold => gs_leaf(vars, &a.coeffs, a.bound, i, parts)?,
            AtomKind::ModThreshold => mod_threshold_shape(vars, a, i, parts)?,
            AtomKind::Remainder => congruence_shape(vars, &a.coeffs, a.modulus, a.bound, i, parts)?,
        },
        Node::Not(a) => Shape::Not(Box::new(shape_for(a, vars, i, parts)?)),
        Node::And(a, b) => {
            let a = shape_for(a, vars, i, parts)?;
            Shape::And(Box::new(a), Box::new(shape_for(b, vars, i, parts)?))
        }
        Node::Or(a, b) => {
            let a = shape_for(a, vars, i, parts)?;
            Shape::Or(Box::new(a), Box::new(shape_for(b, vars, i, parts)?))
        }
    })
}

/// Halting protocol for `φ` on inputs of size exactly `i`.
pub fn fixed_size_part(phi: &Formula, i: u64) -> Result<HaltTree> {
    let node = normalize(&phi.node)?;
    let mut parts = Vec::new();
    let shape = shape_for(&node, &phi.vars, i, &mut parts)?;
    halting_boolean_combine(parts, &shape)
}

/// Nominal state counts of the small-input stages.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SmallCounts {
    pub parts: u64,
    pub fixed: u64,
    pub leaderless: u64,
}

pub fn combine_fixed_sizes(vars: Vec<String>, parts: Vec<HaltTree>, ell: u32) -> Result<FixedSize<HaltTree>> {
    FixedSize::new(vars, parts, ell)
}

pub fn compile_small(phi: &Formula, ell: u32) -> Result<SmallProtocol> {
    if ell < 3 {
        return Err(Error::Precondition(format!("cutoff must be at least 3, got {ell}")));
    }
    let parts = (2..ell as u64).into_par_iter().map(|i| fixed_size_part(phi, i)).collect::<Result<Vec<_>>>()?;
    let fixed = combine_fixed_sizes(phi.vars.clone(), parts, ell)?;
    Ok(remove_single_leader(fixed, ell))
}

impl SmallProtocol {
    /// Nominal state counts: all tagged part states; the dispatcher bound
    /// `|X| + |X|·m·ℓ + 1 + 2ℓ` with `m` the largest part; and
    /// `|X|·ℓ²·m^{|L|+1} + 2|X|·m + 1` for the leaderless protocol with
    /// `m` the dispatcher's size and `|L| = 1`. Counts saturate at
    /// `u64::MAX`.
    pub fn counts(&self) -> SmallCounts {
        let fixed = &self.base;
        let ell = fixed.ell() as u64;
        let x = fixed.variables().len() as u64;
        let sizes: Vec<u64> = (2..fixed.ell()).filter_map(|i| fixed.part(i)).map(|p| p.nominal_states()).collect();
        let m = sizes.iter().copied().max().unwrap_or(0);
        let f = x.saturating_mul(m).saturating_mul(ell).saturating_add(x + 1 + 2 * ell);
        let leaderless = [x, ell, ell, f, f]
            .into_iter()
            .fold(1u64, u64::saturating_mul)
            .saturating_add((2 * x).saturating_mul(f))
            .saturating_add(1);
        SmallCounts { parts: sizes.iter().sum(), fixed: f, leaderless }
    }
}
