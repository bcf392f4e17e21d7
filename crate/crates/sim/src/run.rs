//! The seeded discrete-event run.

use depthlab_core::{ExecutionContext, ProcessId, ProcessSet};
use depthlab_protocols::{protocol_factory, Bit, Context, Effects, Engine, Input, Message, Output, ProtocolKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adversary::Adversary;
use crate::error::SimError;
use crate::scenario::{Scenario, SchedulePolicy};
use crate::trace::{Event, Invocation, Trace};

const SCHEDULE_STREAM: u64 = 1;
const ADVERSARY_STREAM: u64 = 2;

/// The environment's reaction to an output: the coin protocol releases the
/// next round once the previous coin is out.
pub fn follow_up(kind: ProtocolKind, rounds: u32, out: &Output) -> Option<Input> {
    match (kind, out) {
        (ProtocolKind::Cc, Output::Coin { round, .. }) if *round < rounds => Some(Input::Release(round + 1)),
        _ => None,
    }
}

/// Initial invocation of every process, faulty or not.
pub fn initial_inputs(sc: &Scenario) -> Vec<(ProcessId, Input)> {
    let mut inputs = Vec::new();
    for p in sc.quorums.processes() {
        let input = match sc.protocol {
            ProtocolKind::Rb3 | ProtocolKind::RbPremature => {
                if sc.sender != Some(p) {
                    continue;
                }
                Input::Broadcast(sc.payload.clone())
            }
            ProtocolKind::Cc => Input::Release(1),
            ProtocolKind::Bca | ProtocolKind::Consensus => {
                Input::Propose(Bit::from_u8(sc.proposals[p.index()]).expect("validated"))
            }
        };
        inputs.push((p, input));
    }
    inputs
}

fn invocation(input: &Input) -> Option<Invocation> {
    match input {
        Input::Broadcast(m) => Some(Invocation::Broadcast(m.clone())),
        Input::Propose(v) => Some(Invocation::Propose(*v)),
        Input::Release(r) => Some(Invocation::Release(*r)),
        Input::Receive { .. } => None,
    }
}

/// A message in flight.
#[derive(Clone, Debug)]
pub struct Envelope {
    pub id: u64,
    pub from: ProcessId,
    pub to: ProcessId,
    pub msg: Message,
    /// Logical time at sending.
    pub sent_at: u64,
    /// Sent by a correct process; the fairness bound applies.
    pub fair: bool,
    /// Held back until nothing else is pending.
    pub postponed: bool,
}

struct Sim<'a> {
    sc: &'a Scenario,
    ctx: Context,
    engines: Vec<Engine>,
    faults: ProcessSet,
    adversary: Adversary,
    rng: ChaCha8Rng,
    victim: Option<ProcessId>,
    pending: Vec<Envelope>,
    next_id: u64,
    now: u64,
    events: Vec<Event>,
}

impl Sim<'_> {
    fn post(&mut self, from: ProcessId, to: ProcessId, msg: Message, forged: bool) {
        let id = self.next_id;
        self.next_id += 1;
        self.events.push(Event::Send { id, from, to, msg: msg.clone(), forged });
        if self.faults.contains(to) {
            self.adversary.observe(from, to, msg);
        } else {
            let postponed = forged && self.adversary.postponed(from);
            self.pending.push(Envelope { id, from, to, msg, sent_at: self.now, fair: !forged, postponed });
        }
    }

    fn apply(&mut self, p: ProcessId, fx: Effects, what: impl Fn() -> String) {
        for reason in fx.notes {
            self.events.push(Event::Drop { p, what: what(), reason });
        }
        let mut next = Vec::new();
        for out in fx.outputs {
            if let Some(input) = follow_up(self.ctx.kind, self.sc.rounds, &out) {
                next.push(input);
            }
            self.events.push(Event::Output { p, out });
        }
        for msg in fx.messages {
            for to in self.ctx.quorums.processes() {
                self.post(p, to, msg.clone(), false);
            }
        }
        for input in next {
            self.invoke(p, input);
        }
    }

    fn invoke(&mut self, p: ProcessId, input: Input) {
        let inv = invocation(&input).expect("local invocation");
        self.events.push(Event::Input { p, input: inv.clone() });
        let fx = self.engines[p.index()].step(&self.ctx, input);
        self.apply(p, fx, || inv.to_string());
    }

    fn adversary_turn(&mut self, mut mark: usize) {
        loop {
            let sends = self.adversary.act(&self.ctx, self.now, &self.events[mark..]);
            if sends.is_empty() {
                return;
            }
            mark = self.events.len();
            for (from, to, msg) in sends {
                self.post(from, to, msg, true);
            }
        }
    }

    /// Index of the fair envelope that must go now so that every fair
    /// envelope can still meet its deadline, if any.
    fn forced(&self) -> Option<usize> {
        let mut first = None;
        let mut rank = 0u64;
        for (i, e) in self.pending.iter().enumerate() {
            if !e.fair {
                continue;
            }
            rank += 1;
            first.get_or_insert(i);
            // delivered at now + 1 + rank at the earliest if we wait one step
            if e.sent_at + self.sc.max_delay < self.now + 1 + rank {
                return first;
            }
        }
        None
    }

    fn pick(&mut self) -> usize {
        if let Some(i) = self.forced() {
            return i;
        }
        let preferred: Vec<usize> = match self.sc.schedule {
            SchedulePolicy::Adversarial => {
                let victim = self.victim;
                (0..self.pending.len())
                    .filter(|&i| !self.pending[i].postponed && Some(self.pending[i].from) != victim)
                    .collect()
            }
            _ => (0..self.pending.len()).filter(|&i| !self.pending[i].postponed).collect(),
        };
        let candidates: Vec<usize> = if !preferred.is_empty() {
            preferred
        } else {
            let unpostponed: Vec<usize> = (0..self.pending.len()).filter(|&i| !self.pending[i].postponed).collect();
            if unpostponed.is_empty() {
                (0..self.pending.len()).collect()
            } else {
                unpostponed
            }
        };
        match self.sc.schedule {
            SchedulePolicy::Fifo => candidates[0],
            SchedulePolicy::Random | SchedulePolicy::Adversarial => {
                candidates[self.rng.gen_range(0..candidates.len() as u64) as usize]
            }
        }
    }
}

/// Runs a scenario to quiescence or to its horizon.
pub fn run(sc: &Scenario) -> Result<Trace, SimError> {
    sc.validate()?;
    let context = ExecutionContext::new(&sc.quorums, &sc.fail_prone, sc.faults);
    let (ctx, engines) = protocol_factory(sc.protocol, &sc.quorums, sc.factory_params())
        .map_err(|e| SimError::Invalid(e.to_string()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    rng.set_stream(SCHEDULE_STREAM);
    let mut adv_rng = ChaCha8Rng::seed_from_u64(sc.seed);
    adv_rng.set_stream(ADVERSARY_STREAM);

    let correct = ProcessSet::full(sc.n()) - sc.faults;
    let victim = match sc.schedule {
        SchedulePolicy::Adversarial if !correct.is_empty() => {
            let members: Vec<ProcessId> = correct.iter().collect();
            Some(members[rng.gen_range(0..members.len() as u64) as usize])
        }
        _ => None,
    };
    let inputs = initial_inputs(sc);
    let (faulty_inputs, correct_inputs): (Vec<_>, Vec<_>) =
        inputs.into_iter().partition(|(p, _)| sc.faults.contains(*p));
    let adversary = Adversary::new(sc, &ctx, faulty_inputs, &mut adv_rng);

    let mut sim = Sim {
        sc,
        ctx,
        engines,
        faults: sc.faults,
        adversary,
        rng,
        victim,
        pending: Vec::new(),
        next_id: 0,
        now: 0,
        events: Vec::new(),
    };
    for (p, input) in correct_inputs {
        sim.invoke(p, input);
    }
    sim.adversary_turn(0);

    while !sim.pending.is_empty() && sim.now < sc.horizon {
        let i = sim.pick();
        let env = sim.pending.remove(i);
        sim.now += 1;
        let mark = sim.events.len();
        sim.events.push(Event::Deliver { id: env.id, from: env.from, to: env.to, msg: env.msg.clone() });
        let text = env.msg.to_string();
        let fx = sim.engines[env.to.index()].step(&sim.ctx, Input::Receive { from: env.from, msg: env.msg });
        sim.apply(env.to, fx, || text.clone());
        sim.adversary_turn(mark);
    }

    Ok(Trace {
        scenario: sc.clone(),
        context,
        complete: sim.pending.is_empty(),
        delivered: sim.now,
        events: sim.events,
    })
}
