use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{DeliveryMode, FaultKind, FaultSpec, SimWorld};
use crate::codegen::VOTING_WINDOW_MS;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowStats {
    pub src_fn: String,
    pub dst_fn: String,
    pub sent: u64,
    pub delivered: u64,
    /// One sample per delivered sequence number, in delivery order.
    pub latency_samples: Vec<f64>,
}

impl FlowStats {
    /// 1.0 when nothing was due.
    pub fn delivery_ratio(&self) -> f64 {
        if self.sent == 0 {
            1.0
        } else {
            self.delivered as f64 / self.sent as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeState {
    pub at_ms: f64,
    pub up: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkState {
    pub at_ms: f64,
    pub drop_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub seed: u64,
    pub horizon_ms: u64,
    /// Keyed by edge id.
    pub flows: BTreeMap<String, FlowStats>,
    pub nodes: BTreeMap<String, Vec<NodeState>>,
    pub links: BTreeMap<String, Vec<LinkState>>,
}

#[derive(Debug, Clone, Copy)]
enum Event {
    Fault(usize),
    Emit { flow: usize, replica: usize, seq: u64 },
    Hop { msg: usize, hop: usize },
}

struct Scheduled {
    at: f64,
    serial: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // Reversed: BinaryHeap pops the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .at
            .total_cmp(&self.at)
            .then_with(|| other.serial.cmp(&self.serial))
    }
}

struct Message {
    flow: usize,
    replica: usize,
    seq: u64,
    consumer: usize,
    src: usize,
    dst: usize,
    emitted: f64,
}

#[derive(Default)]
struct VoteState {
    first: f64,
    count: u32,
    done: bool,
}

struct Queue {
    heap: BinaryHeap<Scheduled>,
    serial: u64,
}

impl Queue {
    fn push(&mut self, at: f64, event: Event) {
        self.heap.push(Scheduled {
            at,
            serial: self.serial,
            event,
        });
        self.serial += 1;
    }
}

fn drop_draw(seed: u64, edge: &str, msg: &Message, link: &str) -> f64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(edge.as_bytes());
    h.update([0]);
    h.update(msg.seq.to_le_bytes());
    h.update((msg.replica as u64).to_le_bytes());
    h.update((msg.consumer as u64).to_le_bytes());
    h.update(link.as_bytes());
    let bytes = h.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&bytes[..8]);
    // 53 bits give a uniform double in [0, 1).
    (u64::from_le_bytes(word) >> 11) as f64 / (1u64 << 53) as f64
}

fn emissions(period_ms: f64, horizon_ms: f64) -> u64 {
    if !(period_ms.is_finite() && period_ms > 0.0) {
        return 0;
    }
    let mut k = 0u64;
    while (k as f64) * period_ms < horizon_ms {
        k += 1;
    }
    k
}

/// Runs the world for `horizon_ms`. Faults after the horizon never fire;
/// messages emitted before it are followed to delivery or loss. Faults on
/// unknown targets are ignored, see [`SimWorld::check_faults`].
pub fn run(world: &SimWorld, faults: &[FaultSpec], horizon_ms: u64, seed: u64) -> SimReport {
    let horizon = horizon_ms as f64;
    let mut queue = Queue {
        heap: BinaryHeap::new(),
        serial: 0,
    };
    for (i, f) in faults.iter().enumerate() {
        if f.at_ms <= horizon {
            queue.push(f.at_ms, Event::Fault(i));
        }
    }
    let mut stats: Vec<FlowStats> = world
        .flows
        .iter()
        .map(|f| FlowStats {
            src_fn: f.src_fn.clone(),
            dst_fn: f.dst_fn.clone(),
            sent: emissions(f.period_ms, horizon),
            delivered: 0,
            latency_samples: Vec::new(),
        })
        .collect();
    for (fi, f) in world.flows.iter().enumerate() {
        for seq in 0..stats[fi].sent {
            for replica in 0..f.producers.len() {
                queue.push(seq as f64 * f.period_ms, Event::Emit { flow: fi, replica, seq });
            }
        }
    }

    let mut up = vec![true; world.nodes.len()];
    let mut drop_p = vec![0.0f64; world.links.len()];
    let mut link_faults: Vec<Vec<f64>> = vec![Vec::new(); world.links.len()];
    let mut node_tl: Vec<Vec<NodeState>> = vec![vec![NodeState { at_ms: 0.0, up: true }]; world.nodes.len()];
    let mut link_tl: Vec<Vec<LinkState>> = vec![vec![LinkState { at_ms: 0.0, drop_p: 0.0 }]; world.links.len()];

    let mut msgs: Vec<Message> = Vec::new();
    let mut accepted: HashSet<(usize, usize, u64)> = HashSet::new();
    let mut votes: HashMap<(usize, usize, u64), VoteState> = HashMap::new();
    let mut delivered_seq: HashSet<(usize, u64)> = HashSet::new();

    while let Some(Scheduled { at, event, .. }) = queue.heap.pop() {
        match event {
            Event::Fault(i) => {
                let f = &faults[i];
                match f.kind {
                    FaultKind::NodeCrash => {
                        if let Some(n) = world.node_index(&f.target) {
                            if up[n] {
                                up[n] = false;
                                node_tl[n].push(NodeState { at_ms: at, up: false });
                            }
                        }
                    }
                    FaultKind::LinkDrop => {
                        if let Some(l) = world.link_index(&f.target) {
                            link_faults[l].push(f.p.unwrap_or(0.0));
                            let p = link_faults[l].iter().copied().fold(0.0, f64::max);
                            if p != drop_p[l] {
                                drop_p[l] = p;
                                link_tl[l].push(LinkState { at_ms: at, drop_p: p });
                            }
                        }
                    }
                }
            }
            Event::Emit { flow, replica, seq } => {
                let f = &world.flows[flow];
                let src = f.producers[replica];
                if !up[src] {
                    continue;
                }
                for (consumer, &dst) in f.consumers.iter().enumerate() {
                    if world.routes[src][dst].is_none() {
                        continue;
                    }
                    msgs.push(Message {
                        flow,
                        replica,
                        seq,
                        consumer,
                        src,
                        dst,
                        emitted: at,
                    });
                    queue.push(at, Event::Hop { msg: msgs.len() - 1, hop: 0 });
                }
            }
            Event::Hop { msg, hop } => {
                let m = &msgs[msg];
                let route = world.routes[m.src][m.dst].as_ref().expect("checked at emission");
                if !up[route.nodes[hop]] {
                    continue;
                }
                if hop < route.links.len() {
                    let l = route.links[hop];
                    if drop_p[l] > 0.0 {
                        let edge = &world.flows[m.flow].edge;
                        if drop_draw(seed, edge, m, &world.links[l]) < drop_p[l] {
                            continue;
                        }
                    }
                    queue.push(m.emitted + route.offsets_ms[hop + 1], Event::Hop { msg, hop: hop + 1 });
                    continue;
                }
                let accept = match world.flows[m.flow].mode {
                    DeliveryMode::FirstArrival => accepted.insert((m.flow, m.consumer, m.seq)),
                    DeliveryMode::Voting { quorum } => {
                        let v = votes.entry((m.flow, m.consumer, m.seq)).or_default();
                        if v.count == 0 {
                            v.first = at;
                        }
                        if v.done || at - v.first > VOTING_WINDOW_MS {
                            false
                        } else {
                            v.count += 1;
                            v.done = v.count >= quorum;
                            v.done
                        }
                    }
                };
                if accept && delivered_seq.insert((m.flow, m.seq)) {
                    let s = &mut stats[m.flow];
                    s.delivered += 1;
                    s.latency_samples.push(route.latency_ms);
                }
            }
        }
    }

    SimReport {
        seed,
        horizon_ms,
        flows: world.flows.iter().map(|f| f.edge.clone()).zip(stats).collect(),
        nodes: world.nodes.iter().cloned().zip(node_tl).collect(),
        links: world.links.iter().cloned().zip(link_tl).collect(),
    }
}
