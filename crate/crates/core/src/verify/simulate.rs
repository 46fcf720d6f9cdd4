//! Randomized simulation for populations too large to explore.
//!
//! The scheduler picks uniformly among the distinct non-identity moves
//! enabled in the current configuration, not among agent pairs. On a finite
//! reachability graph this is fair with probability one.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::engine::{apply, Engine};
use crate::error::Result;
use crate::formula::Valuation;
use crate::protocol::Opinion;
use crate::system::Population;

pub const DEFAULT_WINDOW: u64 = 50_000;
pub const DEFAULT_MAX_STEPS: u64 = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "outcome", content = "output")]
pub enum Outcome {
    Stabilized(bool),
    Undecided,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationReport {
    pub outcome: Outcome,
    pub steps: u64,
    /// Steps at which the output last changed.
    pub settled_at: u64,
    pub terminal: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<String>>,
}

#[derive(Clone, Copy, Debug)]
pub struct SimulationParams {
    pub seed: u64,
    pub max_steps: u64,
    pub window: u64,
    pub record_trace: bool,
}

impl Default for SimulationParams {
    fn default() -> Self {
        SimulationParams { seed: 0, max_steps: DEFAULT_MAX_STEPS, window: DEFAULT_WINDOW, record_trace: false }
    }
}

/// Simulates from the initial configuration of `v`. Reports
/// `Stabilized(b)` once the output has been `b` for `window` consecutive
/// steps, or immediately if no move is enabled and the output is `b`.
pub fn simulate<P: Population + ?Sized>(sys: &P, v: &Valuation, params: SimulationParams) -> Result<SimulationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut eng = Engine::new(sys);
    let c0 = sys.initial_config(v)?;
    let mut c = eng.intern_config(&c0);
    let mut trace = params.record_trace.then(Vec::new);
    let mut current = eng.opinion_of(&c);
    let mut since = 0u64;
    let mut steps = 0u64;
    let decided = |o: Opinion| match o {
        Opinion::Zero => Some(false),
        Opinion::One => Some(true),
        Opinion::Bot => None,
    };
    loop {
        if let Some(b) = decided(current) {
            if steps - since >= params.window {
                return Ok(SimulationReport { outcome: Outcome::Stabilized(b), steps, settled_at: since, terminal: false, trace });
            }
        }
        if steps >= params.max_steps {
            return Ok(SimulationReport { outcome: Outcome::Undecided, steps, settled_at: since, terminal: false, trace });
        }
        let moves = eng.moves(&c);
        if moves.is_empty() {
            let outcome = decided(current).map_or(Outcome::Undecided, Outcome::Stabilized);
            return Ok(SimulationReport { outcome, steps, settled_at: since, terminal: true, trace });
        }
        let m = &moves[rng.gen_range(0..moves.len())];
        if let Some(t) = trace.as_mut() {
            t.push(sys.rule_name(m.rule));
        }
        c = apply(&c, m);
        steps += 1;
        let o = eng.opinion_of(&c);
        if o != current {
            current = o;
            since = steps;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::fixtures::pp_n;
    use crate::protocol::{Flavor, Protocol};

    #[test]
    fn pp2_stabilizes_to_one() {
        let p = pp_n(2);
        let v: Valuation = [("x".to_string(), 4)].into_iter().collect();
        for seed in 0..10 {
            let r = simulate(&p, &v, SimulationParams { seed, window: 100, ..Default::default() }).unwrap();
            assert_eq!(r.outcome, Outcome::Stabilized(true));
        }
    }

    #[test]
    fn identity_only() {
        let mut p = Protocol::new(vec!["x".into()], Flavor::General);
        let a = p.add_state("a");
        p.set_input("x", a).unwrap();
        let v: Valuation = [("x".to_string(), 3)].into_iter().collect();
        let r = simulate(&p, &v, SimulationParams::default()).unwrap();
        assert_eq!(r.outcome, Outcome::Undecided);
        assert!(r.terminal);
        p.set_output(a, Opinion::One);
        let r = simulate(&p, &v, SimulationParams::default()).unwrap();
        assert_eq!(r.outcome, Outcome::Stabilized(true));
    }

    #[test]
    fn deterministic_given_seed() {
        let p = pp_n(3);
        let v: Valuation = [("x".to_string(), 9)].into_iter().collect();
        let params = SimulationParams { seed: 7, window: 50, record_trace: true, ..Default::default() };
        let a = simulate(&p, &v, params).unwrap();
        let b = simulate(&p, &v, params).unwrap();
        assert_eq!(a.trace, b.trace);
    }
}
