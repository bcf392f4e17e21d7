//! Exhaustive enumeration of delivery orders.
//!
//! Depth-first search over the choice of the next pending message, with
//! global states deduplicated by a 128-bit fingerprint of all engine states
//! plus the pending multiset. Identical pending copies are one choice. The
//! number of deliveries so far is a function of the state, so memoised
//! results are valid for every path that reaches it.
//!
//! With `reduce`, a state that has a pending delivery whose receipt commutes
//! with everything its receiver may still receive is expanded with that
//! delivery only. Such a delivery commutes with every other transition and
//! stays enabled, so this keeps every quiescent state reachable from every
//! visited state, and every reachable state has a visited extension with
//! the same reachable decisions. It does not keep horizon cut-offs, so it
//! is meant for runs to quiescence.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::hash::{Hash, Hasher};
use std::rc::Rc;

use depthlab_core::{ProcessId, ProcessSet};
use depthlab_protocols::{protocol_factory, Context, Engine, Input, Message, Value};

use crate::error::SimError;
use crate::run::{follow_up, initial_inputs};
use crate::scenario::{Scenario, Strategy};

/// Decisions of processes `0..n`, three bits each: 0, 1 and ⊥.
pub type DecisionSet = u64;

const MAX_PROCESSES: usize = 21;

pub fn decision_bit(p: ProcessId, v: Value) -> DecisionSet {
    let k = match v {
        Value::Bit(b) => b.as_u8() as usize,
        Value::Bot => 2,
    };
    1 << (3 * p.index() + k)
}

/// Values `p` decides in some state of the set.
pub fn decisions_of(set: DecisionSet, p: ProcessId) -> Vec<Value> {
    [Value::ZERO, Value::ONE, Value::Bot].into_iter().filter(|v| set & decision_bit(p, *v) != 0).collect()
}

/// One decision per process, or `None`.
pub type Outcome = Vec<Option<Value>>;

#[derive(Clone, Debug)]
pub struct ExploreConfig {
    /// Deliveries per path.
    pub horizon: u64,
    pub state_cap: usize,
    /// Processes whose decisions mark decision points.
    pub watch: ProcessSet,
    pub reduce: bool,
}

impl ExploreConfig {
    /// To quiescence, with reduction.
    pub fn full(watch: ProcessSet, state_cap: usize) -> Self {
        ExploreConfig { horizon: u64::MAX, state_cap, watch, reduce: true }
    }
}

/// States where some watched process has decided, grouped by their
/// decisions and reachable decisions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecisionPoint {
    pub decided: Outcome,
    /// Every decision some process makes in some extension (including this state).
    pub reachable: DecisionSet,
    /// Deliveries leading here, as (from, to, message).
    pub path: Vec<(ProcessId, ProcessId, Message)>,
    /// Distinct states in the group.
    pub count: u64,
}

#[derive(Clone, Debug, Default)]
pub struct Exploration {
    pub n: usize,
    pub states: usize,
    pub transitions: u64,
    /// States expanded with a single commuting delivery.
    pub reduced: usize,
    /// Delivery orders to a leaf in the explored graph, saturating.
    pub interleavings: u128,
    /// Outcomes of quiescent states.
    pub terminal_outcomes: BTreeMap<Outcome, u64>,
    /// Outcomes of states cut off by the horizon with messages still pending.
    pub truncated_outcomes: BTreeMap<Outcome, u64>,
    pub decision_points: Vec<DecisionPoint>,
    /// Union of every decision in every reachable state.
    pub reachable: DecisionSet,
}

impl Exploration {
    /// True if no leaf was cut off by the horizon.
    pub fn complete(&self) -> bool {
        self.truncated_outcomes.is_empty()
    }

    /// All leaf outcomes, terminal or truncated.
    pub fn outcomes(&self) -> impl Iterator<Item = &Outcome> {
        self.terminal_outcomes.keys().chain(self.truncated_outcomes.keys())
    }
}

#[derive(Clone)]
struct Pending {
    from: ProcessId,
    to: ProcessId,
    msg: Message,
    hash: u128,
}

#[derive(Clone)]
struct State {
    engines: Vec<(Rc<Engine>, u128)>,
    pending: Vec<Pending>,
}

fn fingerprint<T: Hash + ?Sized>(x: &T) -> u128 {
    let mut a = DefaultHasher::new();
    0xa5u8.hash(&mut a);
    x.hash(&mut a);
    let mut b = DefaultHasher::new();
    0x5au8.hash(&mut b);
    x.hash(&mut b);
    ((a.finish() as u128) << 64) | b.finish() as u128
}

impl State {
    fn key(&self) -> u128 {
        let engines: Vec<u128> = self.engines.iter().map(|(_, h)| *h).collect();
        let pending = self.pending.iter().fold(0u128, |acc, p| acc.wrapping_add(p.hash));
        fingerprint(&(engines, pending))
    }
}

fn decision(e: &Engine) -> Option<Value> {
    match e {
        Engine::Bca(b) => b.decided(),
        Engine::Consensus(c) => c.decided().map(|(_, v)| Value::Bit(v)),
        _ => None,
    }
}

struct Explorer<'a> {
    ctx: &'a Context,
    faults: ProcessSet,
    rounds: u32,
    cfg: &'a ExploreConfig,
    /// Every correct process proposed the same bit and nothing else is in flight.
    one_value: bool,
    memo: HashMap<u128, (DecisionSet, u128)>,
    points: BTreeMap<(Outcome, DecisionSet), DecisionPoint>,
    out: Exploration,
    path: Vec<(ProcessId, ProcessId, Message)>,
}

impl Explorer<'_> {
    fn outcome(&self, s: &State) -> Outcome {
        s.engines.iter().map(|(e, _)| decision(e)).collect()
    }

    fn decided_set(&self, s: &State) -> DecisionSet {
        s.engines
            .iter()
            .enumerate()
            .filter_map(|(i, (e, _))| decision(e).map(|v| decision_bit(ProcessId(i as u8), v)))
            .fold(0, |a, b| a | b)
    }

    fn watched_decided(&self, s: &State) -> bool {
        self.cfg.watch.iter().any(|p| decision(&s.engines[p.index()].0).is_some())
    }

    /// Feeds one input to `p` and everything it causes locally.
    fn step(&self, s: &mut State, p: ProcessId, input: Input) {
        let mut work = vec![input];
        while let Some(input) = work.pop() {
            let (rc, h) = &mut s.engines[p.index()];
            let engine = Rc::make_mut(rc);
            let fx = engine.step(self.ctx, input);
            *h = fingerprint(&*engine);
            for o in &fx.outputs {
                work.extend(follow_up(self.ctx.kind, self.rounds, o));
            }
            for msg in fx.messages {
                for to in self.ctx.quorums.processes().filter(|q| !self.faults.contains(*q)) {
                    let hash = fingerprint(&(p, to, &msg));
                    s.pending.push(Pending { from: p, to, msg: msg.clone(), hash });
                }
            }
        }
    }

    fn visit(&mut self, s: &State, depth: u64) -> Result<(DecisionSet, u128), SimError> {
        let key = s.key();
        if let Some(&r) = self.memo.get(&key) {
            return Ok(r);
        }
        if self.memo.len() >= self.cfg.state_cap {
            return Err(SimError::Explosion(self.memo.len()));
        }
        // reserve the slot; the state graph is acyclic since every step delivers
        self.memo.insert(key, (0, 0));
        self.out.states += 1;

        let here = self.decided_set(s);
        let result = if s.pending.is_empty() || depth >= self.cfg.horizon {
            let outcomes =
                if s.pending.is_empty() { &mut self.out.terminal_outcomes } else { &mut self.out.truncated_outcomes };
            *outcomes.entry(s.engines.iter().map(|(e, _)| decision(e)).collect()).or_default() += 1;
            (here, 1)
        } else {
            let mut seen = Vec::new();
            let mut reach = here;
            let mut paths = 0u128;
            let single = if self.cfg.reduce {
                s.pending
                    .iter()
                    .position(|e| s.engines[e.to.index()].0.receipt_commutes(self.ctx, &e.msg, self.one_value))
            } else {
                None
            };
            if single.is_some() {
                self.out.reduced += 1;
            }
            let choices: Vec<usize> = match single {
                Some(i) => vec![i],
                None => (0..s.pending.len()).collect(),
            };
            for i in choices {
                let h = s.pending[i].hash;
                if seen.contains(&h) {
                    continue;
                }
                seen.push(h);
                let mut next = s.clone();
                let env = next.pending.swap_remove(i);
                self.out.transitions += 1;
                self.path.push((env.from, env.to, env.msg.clone()));
                self.step(&mut next, env.to, Input::Receive { from: env.from, msg: env.msg });
                let (r, c) = self.visit(&next, depth + 1)?;
                self.path.pop();
                reach |= r;
                paths = paths.saturating_add(c);
            }
            (reach, paths)
        };
        if self.watched_decided(s) {
            self.record_point(s, result.0);
        }
        self.memo.insert(key, result);
        Ok(result)
    }

    fn record_point(&mut self, s: &State, reachable: DecisionSet) {
        let decided = self.outcome(s);
        let path = &self.path;
        self.points.entry((decided.clone(), reachable)).and_modify(|p| p.count += 1).or_insert_with(|| DecisionPoint {
            decided,
            reachable,
            path: path.clone(),
            count: 1,
        });
    }
}

/// Explores every delivery order of the scenario up to `cfg.horizon`
/// deliveries. Faulty processes must be silent.
pub fn explore(sc: &Scenario, cfg: &ExploreConfig) -> Result<Exploration, SimError> {
    sc.validate()?;
    for p in sc.faults {
        if sc.strategy(p).unwrap_or(Strategy::Silent) != Strategy::Silent {
            return Err(SimError::Unsupported(format!(
                "exhaustive exploration needs silent faulty processes; {p} is {}",
                sc.strategy(p).map_or("unset", |s| s.name())
            )));
        }
    }
    let (ctx, engines) = protocol_factory(sc.protocol, &sc.quorums, sc.factory_params())
        .map_err(|e| SimError::Invalid(e.to_string()))?;
    let inputs: Vec<_> = initial_inputs(sc).into_iter().filter(|(p, _)| !sc.faults.contains(*p)).collect();
    explore_from(&ctx, engines, sc.faults, sc.rounds, inputs, Vec::new(), cfg)
}

/// Explores from explicit engines: `inputs` are applied first, in order,
/// and `pending` is added to the messages in flight.
pub fn explore_from(
    ctx: &Context,
    engines: Vec<Engine>,
    faults: ProcessSet,
    rounds: u32,
    inputs: Vec<(ProcessId, Input)>,
    pending: Vec<(ProcessId, ProcessId, Message)>,
    cfg: &ExploreConfig,
) -> Result<Exploration, SimError> {
    let n = engines.len();
    if n > MAX_PROCESSES {
        return Err(SimError::Unsupported(format!(
            "exhaustive exploration supports at most {MAX_PROCESSES} processes"
        )));
    }
    let proposals: Vec<_> = inputs
        .iter()
        .filter_map(|(_, i)| match i {
            Input::Propose(v) => Some(*v),
            _ => None,
        })
        .collect();
    let one_value = pending.is_empty() && proposals.len() == inputs.len() && proposals.windows(2).all(|w| w[0] == w[1]);
    let mut ex = Explorer {
        ctx,
        faults,
        rounds,
        cfg,
        one_value,
        memo: HashMap::new(),
        points: BTreeMap::new(),
        out: Exploration { n, ..Default::default() },
        path: Vec::new(),
    };
    let mut s = State {
        engines: engines.into_iter().map(|e| (Rc::new(e.clone()), fingerprint(&e))).collect(),
        pending: pending
            .into_iter()
            .map(|(from, to, msg)| Pending { from, to, hash: fingerprint(&(from, to, &msg)), msg })
            .collect(),
    };
    for (p, input) in inputs {
        ex.step(&mut s, p, input);
    }
    let (reach, paths) = ex.visit(&s, 0)?;
    ex.out.reachable = reach;
    ex.out.interleavings = paths;
    ex.out.decision_points = ex.points.into_values().collect();
    Ok(ex.out)
}
