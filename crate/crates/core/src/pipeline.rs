//! End-to-end compilation.
//!
//! `ℓ` is the number of helpers of the two-way large-input protocol (at
//! least 3). The helper-free protocol decides `(|v| >= ℓ) -> φ`, the small
//! side decides `(|v| < ℓ) -> φ`, and their product, with the conjunction
//! of both outputs, decides `φ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::{Formula, Valuation};
use crate::large::{compile_large, HelperFree, LargeBuild};
use crate::protocol::json::{to_doc, ProtocolDoc};
use crate::protocol::{Config, Opinion, Protocol};
use crate::small::{compile_small, SmallProtocol};
use crate::system::{initial_from, posts_in_order, Agents, Move, Population};

const RECOLOUR: u32 = 0;
const SINK: u32 = 1;
const PULL: u32 = 2;
const LIFTED: u32 = 3;

/// Every state gets an opinion bit. Transitions of the base protocol keep a
/// common bit and may set any bits otherwise; opinionated base states pull
/// the bits towards their output.
#[derive(Clone, Debug)]
pub struct FullOutput<P> {
    pub base: P,
}

impl<P: Agents> FullOutput<P> {
    fn coloured(&self, pre: &[(P::State, bool)], posts: Vec<P::State>, rule: u32, out: &mut Vec<Move<(P::State, bool)>>) {
        let uniform = pre.iter().all(|a| a.1 == pre[0].1);
        let k = pre.len();
        let colourings: Vec<u32> = if uniform { vec![if pre[0].1 { (1 << k) - 1 } else { 0 }] } else { (0..1 << k).collect() };
        for bits in colourings {
            let agents = pre.iter().zip(&posts).enumerate().map(|(j, (a, s))| (a.clone(), (s.clone(), bits >> j & 1 == 1)));
            out.push(Move::new(agents, rule));
        }
    }
}

impl<P: Agents> Population for FullOutput<P> {
    type State = (P::State, bool);

    fn variables(&self) -> &[String] {
        self.base.variables()
    }

    fn initial_config(&self, v: &Valuation) -> Result<Config<Self::State>> {
        initial_from(self, v)
    }

    fn opinion(&self, s: &Self::State) -> Opinion {
        Opinion::from_bool(s.1)
    }

    fn render(&self, s: &Self::State) -> String {
        format!("{}#{}", self.base.render(&s.0), s.1 as u8)
    }

    fn local_moves(&self, agents: &[Self::State]) -> Vec<Move<Self::State>> {
        let mut out = Vec::new();
        let base: Vec<P::State> = agents.iter().map(|a| a.0.clone()).collect();
        for m in self.base.local_moves(&base) {
            self.coloured(agents, posts_in_order(&m, &base), LIFTED + m.rule, &mut out);
        }
        match agents {
            [a] => {
                if let Some(o) = self.base.opinion(&a.0).as_bool() {
                    out.push(Move::new([(a.clone(), (a.0.clone(), o))], SINK));
                }
            }
            [a, b] => {
                if a.1 != b.1 {
                    self.coloured(agents, base.clone(), RECOLOUR, &mut out);
                }
                for (x, y, flip) in [(a, b, false), (b, a, true)] {
                    if let Some(o) = self.base.opinion(&y.0).as_bool() {
                        if y.1 == o && x.1 != o {
                            let mut m = Move::new([(x.clone(), (x.0.clone(), o)), (y.clone(), y.clone())], PULL);
                            if flip {
                                m.agents.swap(0, 1);
                            }
                            out.push(m);
                        }
                    }
                }
            }
            _ => {}
        }
        out.retain(|m| !m.is_identity());
        out
    }

    fn rule_name(&self, rule: u32) -> String {
        match rule {
            RECOLOUR => "recolour".into(),
            SINK => "sink".into(),
            PULL => "pull".into(),
            r => self.base.rule_name(r - LIFTED),
        }
    }
}

impl<P: Agents> Agents for FullOutput<P> {
    fn input_state(&self, x: usize) -> Self::State {
        (self.base.input_state(x), false)
    }

    fn leader_states(&self) -> Vec<Self::State> {
        self.base.leader_states().into_iter().map(|s| (s, false)).collect()
    }
}

/// Two leaderless protocols side by side; every move advances one of them.
#[derive(Clone, Debug)]
pub struct Product<A, B> {
    pub a: A,
    pub b: B,
}

impl<A: Agents, B: Agents> Population for Product<A, B> {
    type State = (A::State, B::State);

    fn variables(&self) -> &[String] {
        self.a.variables()
    }

    fn initial_config(&self, v: &Valuation) -> Result<Config<Self::State>> {
        initial_from(self, v)
    }

    fn opinion(&self, s: &Self::State) -> Opinion {
        match (self.a.opinion(&s.0), self.b.opinion(&s.1)) {
            (Opinion::Zero, _) | (_, Opinion::Zero) => Opinion::Zero,
            (Opinion::One, Opinion::One) => Opinion::One,
            _ => Opinion::Bot,
        }
    }

    fn render(&self, s: &Self::State) -> String {
        format!("<{} | {}>", self.a.render(&s.0), self.b.render(&s.1))
    }

    fn local_moves(&self, agents: &[Self::State]) -> Vec<Move<Self::State>> {
        let mut out = Vec::new();
        let xs: Vec<A::State> = agents.iter().map(|s| s.0.clone()).collect();
        for m in self.a.local_moves(&xs) {
            let posts = posts_in_order(&m, &xs);
            let moved = agents.iter().zip(posts).map(|(s, p)| (s.clone(), (p, s.1.clone())));
            out.push(Move::new(moved, 2 * m.rule));
        }
        let ys: Vec<B::State> = agents.iter().map(|s| s.1.clone()).collect();
        for m in self.b.local_moves(&ys) {
            let posts = posts_in_order(&m, &ys);
            let moved = agents.iter().zip(posts).map(|(s, p)| (s.clone(), (s.0.clone(), p)));
            out.push(Move::new(moved, 2 * m.rule + 1));
        }
        out.retain(|m| !m.is_identity());
        out
    }

    fn rule_name(&self, rule: u32) -> String {
        if rule.is_multiple_of(2) {
            format!("1:{}", self.a.rule_name(rule / 2))
        } else {
            format!("2:{}", self.b.rule_name(rule / 2))
        }
    }
}

impl<A: Agents, B: Agents> Agents for Product<A, B> {
    fn input_state(&self, x: usize) -> Self::State {
        (self.a.input_state(x), self.b.input_state(x))
    }

    fn leader_states(&self) -> Vec<Self::State> {
        Vec::new()
    }
}

/// Product of the full-output versions of `a` and `b` with the conjunction
/// of their outputs.
pub fn product_and<A: Agents, B: Agents>(a: A, b: B) -> Result<Product<FullOutput<A>, FullOutput<B>>> {
    if a.variables() != b.variables() {
        return Err(Error::VariableMismatch(format!("{:?} against {:?}", a.variables(), b.variables())));
    }
    if !a.leader_states().is_empty() || !b.leader_states().is_empty() {
        return Err(Error::Precondition("product needs leaderless protocols".into()));
    }
    Ok(Product { a: FullOutput { base: a }, b: FullOutput { base: b } })
}

pub type CompiledProtocol = Product<FullOutput<HelperFree>, FullOutput<SmallProtocol>>;

/// `max(3, helpers of the two-way large-input protocol)`.
pub fn compute_cutoff(phi: &Formula) -> Result<u32> {
    Ok(cutoff_of(&compile_large(phi)?))
}

fn cutoff_of(large: &LargeBuild) -> u32 {
    (large.ell as u32).max(3)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageStat {
    pub stage: String,
    pub states: u64,
    /// Rule families for stages whose transitions are generated on demand.
    pub transitions: u64,
    pub helpers: u64,
    pub max_width: u64,
}

impl StageStat {
    pub fn of(stage: &str, p: &Protocol) -> StageStat {
        StageStat {
            stage: stage.into(),
            states: p.num_states() as u64,
            transitions: p.transitions().len() as u64,
            helpers: p.helpers(),
            max_width: p.max_width() as u64,
        }
    }

    fn lazy(stage: &str, states: u64, transitions: u64, helpers: u64) -> StageStat {
        StageStat { stage: stage.into(), states, transitions, helpers, max_width: 2 }
    }
}

pub const STAGES: [&str; 9] =
    ["rdi", "dispatch", "boolean", "2way", "helpers-removed", "small-parts", "fixed-size", "leaderless-small", "product"];

pub fn large_stats(large: &LargeBuild) -> Vec<StageStat> {
    let rdi = StageStat {
        stage: "rdi".into(),
        states: large.rdis.iter().map(|r| r.num_states() as u64).sum(),
        transitions: large.rdis.iter().map(|r| r.num_transitions() as u64).sum(),
        helpers: large.rdis.iter().map(|r| r.helpers()).sum(),
        max_width: large.rdis.iter().map(|r| r.max_width() as u64).max().unwrap_or(0),
    };
    let dispatch = match &large.dispatched {
        Some(m) => StageStat::of("dispatch", &m.protocol),
        None => StageStat { stage: "dispatch".into(), ..rdi.clone() },
    };
    let hf = &large.helper_free;
    vec![
        rdi,
        dispatch,
        StageStat::of("boolean", &large.combined),
        StageStat::of("2way", &large.two_way),
        StageStat::lazy("helpers-removed", hf.nominal_states(), hf.nominal_rule_families(), 0),
    ]
}

pub fn small_stats(small: &SmallProtocol) -> Vec<StageStat> {
    let counts = small.counts();
    let fixed = &small.base;
    let trees: Vec<_> = (2..fixed.ell()).filter_map(|i| fixed.part(i)).collect();
    let part_rules: u64 = trees.iter().map(|t| t.nominal_transitions()).sum();
    let leaves: u64 = trees.iter().map(|t| t.parts().len() as u64).sum();
    vec![
        StageStat::lazy("small-parts", counts.parts, part_rules, leaves),
        StageStat::lazy("fixed-size", counts.fixed, part_rules + 5, 1),
        StageStat::lazy("leaderless-small", counts.leaderless, part_rules + 5 + 4, 0),
    ]
}

/// `|Q₁'|·|Q₂'|` with `|Qᵢ'| = 2|Qᵢ|`, saturating; rule families add up.
pub fn product_stat(large: &StageStat, small: &StageStat) -> StageStat {
    let states = large.states.saturating_mul(2).saturating_mul(small.states.saturating_mul(2));
    StageStat::lazy("product", states, large.transitions + small.transitions + 6, 0)
}

pub struct CompilationResult {
    pub formula: Formula,
    pub ell: u32,
    pub large: LargeBuild,
    pub protocol: CompiledProtocol,
    pub stage_stats: Vec<StageStat>,
}

impl CompilationResult {
    pub fn small(&self) -> &SmallProtocol {
        &self.protocol.b.base
    }
}

pub fn compile(phi: &Formula) -> Result<CompilationResult> {
    let large = compile_large(phi)?;
    let ell = cutoff_of(&large);
    let small = compile_small(phi, ell)?;
    let mut stage_stats = large_stats(&large);
    stage_stats.extend(small_stats(&small));
    let product = product_stat(&stage_stats[4], &stage_stats[7]);
    stage_stats.push(product);
    let protocol = product_and(large.helper_free.clone(), small)?;
    Ok(CompilationResult { formula: phi.clone(), ell, large, protocol, stage_stats })
}

/// What `compile` writes. Explicit protocols are embedded; the generated
/// stages are rebuilt from the formula and cutoff when loaded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompiledDoc {
    pub kind: String,
    pub formula: String,
    /// Variable order of the protocol; printing the formula may reorder it.
    #[serde(default)]
    pub variables: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<u64>,
    pub stage_stats: Vec<StageStat>,
    /// The explicit protocol; for `large` this is the two-way protocol
    /// whose helpers are removed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolDoc>,
}

impl CompilationResult {
    pub fn to_doc(&self) -> CompiledDoc {
        CompiledDoc {
            kind: "full".into(),
            formula: self.formula.to_string(),
            variables: self.formula.vars.clone(),
            ell: Some(self.ell),
            size: None,
            stage_stats: self.stage_stats.clone(),
            protocol: Some(to_doc(&self.large.two_way)),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("documents always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::fixtures::pp_n;
    use crate::verify::{check_computes, inputs_of_size};

    #[test]
    fn cutoff() {
        assert_eq!(compute_cutoff(&Formula::parse("x >= 2").unwrap()).unwrap(), 5);
        assert!(compute_cutoff(&Formula::parse("x > 0").unwrap()).unwrap() >= 3);
    }

    #[test]
    fn stages_in_order() {
        let r = compile(&Formula::parse("x > 1").unwrap()).unwrap();
        let names: Vec<&str> = r.stage_stats.iter().map(|s| s.stage.as_str()).collect();
        assert_eq!(names, STAGES);
        assert!(r.protocol.leader_states().is_empty());
        assert_eq!(r.ell, 5);
    }

    #[test]
    fn product_of_pp1_with_itself() {
        let p = pp_n(1);
        let prod = product_and(p.clone(), p.clone()).unwrap();
        let inputs = inputs_of_size(&p.variables, 2..=5);
        let r = check_computes(&prod, |v| v["x"] >= 2, &inputs, 1_000_000);
        assert!(r.all_pass(), "{:?}", r.rows.iter().find(|r| r.detail.is_some()));
    }

    #[test]
    fn product_with_true_is_identity() {
        let p = pp_n(2);
        let mut t = Protocol::new(p.variables.clone(), crate::protocol::Flavor::General);
        let s = t.add_state("1");
        t.set_input("x", s).unwrap();
        t.set_output(s, Opinion::One);
        let prod = product_and(p.clone(), t).unwrap();
        let inputs = inputs_of_size(&p.variables, 2..=6);
        assert!(check_computes(&prod, |v| v["x"] >= 4, &inputs, 1_000_000).all_pass());
    }

    #[test]
    fn lazy_full_output_matches_explicit() {
        use crate::protocol::convert::spp_to_fopp;
        let p = pp_n(2);
        let lazy = FullOutput { base: p.clone() };
        let explicit = spp_to_fopp(&p).unwrap();
        for v in inputs_of_size(&p.variables, 2..=5) {
            let a = crate::verify::explore(&lazy, &lazy.initial_config(&v).unwrap(), 100_000);
            let b = crate::verify::explore(&explicit, &explicit.initial_config(&v).unwrap(), 100_000);
            assert_eq!(a.len(), b.len());
        }
    }

    #[test]
    fn compile_is_deterministic() {
        let phi = Formula::parse("x - y > 0 | x >= 1 (mod 2)").unwrap();
        assert_eq!(compile(&phi).unwrap().to_json(), compile(&phi).unwrap().to_json());
    }
}
