//! The epoch loop: churn, batching, selection, assignment, voting,
//! consensus, block append and group encoding.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use log::{debug, warn};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::depth::{adjust_depth_limit, depth_candidates};
use super::roster::{Behavior, Roster};
use super::storage::{encode_group_boundary, ClosedGroup, FetchPath};
use super::{NetsimError, NetworkConfig};
use crate::consensus::{
    aggregate_reliability, assign_miners, form_block, required_miners, tally_state_updates, tally_transaction_votes,
    Block, BlockRow, CommitmentBoard, ReliabilityTracker, StateOutcome, Vote, VoteRecord,
};
use crate::gf::SymbolVector;
use crate::raptor::{choose_group_size, lt_encode_parity, rnm_repair, CodedBlock, GroupSize};
use crate::txpool::{depth_cost, generate_fresh, select_transactions, SelectionMode, StateValue, Transaction};
use crate::MinerId;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchStats {
    pub local: usize,
    pub repaired: usize,
    pub decoded: usize,
    pub unavailable: usize,
}

impl FetchStats {
    fn count(&mut self, path: FetchPath) {
        match path {
            FetchPath::Local => self.local += 1,
            FetchPath::Repaired => self.repaired += 1,
            FetchPath::Decoded => self.decoded += 1,
            FetchPath::Unavailable => self.unavailable += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEvent {
    pub group: u32,
    pub first: u64,
    pub last: u64,
    pub sources: usize,
    pub outputs: usize,
    pub failure: f64,
    pub feasible: bool,
}

/// Everything observable about one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: u64,
    /// N(t) after churn.
    pub miners: usize,
    pub joined: usize,
    pub left: usize,
    pub dishonest: usize,
    pub stragglers: usize,
    pub silent: usize,
    /// Υ(t).
    pub backlog_in: usize,
    pub fresh: usize,
    pub batch: usize,
    pub depth_limit: u64,
    /// Ids of 𝒯_s(t) in batch order.
    pub selected: Vec<u64>,
    pub selected_valid: Vec<bool>,
    pub relaxed_objective: f64,
    pub selected_reward: f64,
    /// P(t).
    pub reliability: f64,
    /// M(t).
    pub miners_per_tx: usize,
    pub degraded: bool,
    pub assignment_digest: String,
    pub vote_digest: String,
    pub votes_cast: usize,
    pub abstentions: usize,
    pub missing_votes: usize,
    /// v*(t), aligned with `selected`.
    pub decisions: Vec<bool>,
    /// 𝒦_v(t): ids appended in this epoch's block.
    pub confirmed: Vec<u64>,
    pub confirmed_valid: usize,
    pub wrong_confirmations: usize,
    pub wrong_rejections: usize,
    pub wrong_states: usize,
    /// Confirmed without a majority state; returned to the backlog.
    pub demoted: usize,
    /// Rejected by the vote; removed from the system.
    pub expired: usize,
    pub backlog_out: usize,
    /// φ_j(t) for every live miner in id order.
    pub credits: Vec<u32>,
    pub fetch: FetchStats,
    /// Q, the last confirmed height.
    pub height: u64,
    /// W_ℓ of every closed group.
    pub group_sizes: Vec<usize>,
    /// Blocks held by a miner that has every closed group: open raw blocks
    /// plus one coded block per group, measured from the roster.
    pub storage_blocks: usize,
    /// R_s.
    pub storage_fraction: f64,
    pub boundary: Option<BoundaryEvent>,
    pub deferred_boundary: bool,
    pub block_digest: String,
}

impl EpochRecord {
    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> [u8; 32] {
        let bytes = serde_json::to_vec(self).expect("records serialize");
        Sha256::digest(bytes).into()
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn corrupt(state: StateValue) -> StateValue {
    state.map(|b| b ^ 0xFF)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Independent random streams, one per concern, so that changing one
/// behavior does not shift the draws of another.
#[derive(Debug, Clone)]
struct Streams {
    population: ChaCha8Rng,
    transactions: ChaCha8Rng,
    selection: ChaCha8Rng,
    assignment: ChaCha8Rng,
    behavior: ChaCha8Rng,
    salts: ChaCha8Rng,
    encoding: ChaCha8Rng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        Streams {
            population: stream(seed, 1),
            transactions: stream(seed, 2),
            selection: stream(seed, 3),
            assignment: stream(seed, 4),
            behavior: stream(seed, 5),
            salts: stream(seed, 6),
            encoding: stream(seed, 7),
        }
    }
}

const GROUP_SIZING_STREAM: u64 = 1 << 32;

pub struct Engine {
    config: NetworkConfig,
    epoch: u64,
    streams: Streams,
    roster: Roster,
    tracker: ReliabilityTracker,
    /// Υ, oldest submission first.
    backlog: Vec<Transaction>,
    next_tx: u64,
    /// Digest of the block at each height, index `h − 1`.
    headers: Vec<[u8; 32]>,
    open: Vec<Block>,
    open_first: u64,
    groups: Vec<ClosedGroup>,
    target: Option<GroupSize>,
    sizes: HashMap<usize, GroupSize>,
}

impl Engine {
    pub fn new(config: NetworkConfig) -> Result<Self, NetsimError> {
        config.validate()?;
        let mut streams = Streams::new(config.seed);
        let roster = Roster::initial(&config, &mut streams.population);
        let mut tracker = ReliabilityTracker::new(config.forgetting)?;
        for id in roster.ids() {
            tracker.join(id, &mut streams.population);
        }
        Ok(Engine {
            config,
            epoch: 0,
            streams,
            roster,
            tracker,
            backlog: Vec::new(),
            next_tx: 0,
            headers: Vec::new(),
            open: Vec::new(),
            open_first: 1,
            groups: Vec::new(),
            target: None,
            sizes: HashMap::new(),
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    /// Last completed epoch.
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn roster(&self) -> &Roster {
        &self.roster
    }

    pub fn tracker(&self) -> &ReliabilityTracker {
        &self.tracker
    }

    pub fn backlog(&self) -> &[Transaction] {
        &self.backlog
    }

    pub fn groups(&self) -> &[ClosedGroup] {
        &self.groups
    }

    pub fn open_blocks(&self) -> &[Block] {
        &self.open
    }

    pub fn headers(&self) -> &[[u8; 32]] {
        &self.headers
    }

    pub fn run(&mut self, epochs: u64) -> Result<Vec<EpochRecord>, NetsimError> {
        (0..epochs).map(|_| self.run_epoch()).collect()
    }

    fn group_size(&mut self, miners: usize) -> Result<GroupSize, NetsimError> {
        if let Some(s) = self.sizes.get(&miners) {
            return Ok(*s);
        }
        let mut rng = stream(self.config.seed, GROUP_SIZING_STREAM + miners as u64);
        let size = choose_group_size(miners, &self.config.group, &mut rng)?;
        if !size.feasible {
            warn!("no group size meets the failure budget at N = {miners}; using {size:?}");
        }
        self.sizes.insert(miners, size);
        Ok(size)
    }

    /// Whether a backlogged transaction stays excluded at depth limit `d`.
    fn blocked(&self, tx: &Transaction, d: u64) -> bool {
        match self.config.selection.mode {
            SelectionMode::Deterministic => tx.depth > d,
            SelectionMode::Stochastic => {
                let budget = -self.config.selection.q3.ln();
                depth_cost(d, tx.depth_mean).map_or(true, |c| c > budget)
            }
        }
    }

    fn cache_intermediates(&mut self, miner: MinerId, group: u32, intermediates: &[SymbolVector]) {
        let budget = self.config.cache_budget.min(intermediates.len());
        if budget == 0 {
            return;
        }
        let picks = sample(&mut self.streams.encoding, intermediates.len(), budget);
        if let Some(m) = self.roster.get_mut(miner) {
            let cache = m.cache.entry(group).or_default();
            for k in picks {
                cache.insert(k, intermediates[k].clone());
            }
        }
    }

    fn step_population(&mut self, epoch: u64) -> Result<(usize, usize), NetsimError> {
        let (change, departed) = self.roster.step_population(&self.config, epoch, &mut self.streams.population)?;
        for m in &departed {
            self.tracker.leave(m.id);
            for (g, block) in &m.coded {
                if block.is_systematic() {
                    self.groups[*g as usize].systematic[block.neighbors()[0] as usize] = None;
                }
            }
        }
        for &id in &change.joined {
            self.tracker.join(id, &mut self.streams.population);
        }
        if !change.joined.is_empty() {
            // Joiners rebuild each decodable group from the miners already
            // present and store one fresh parity block for it.
            for g in 0..self.groups.len() {
                let intermediates = {
                    let group = &mut self.groups[g];
                    let blocks: Vec<&CodedBlock> =
                        self.roster.iter().filter_map(|m| m.coded.get(&group.index)).collect();
                    if group.recovered.is_none() && !group.decodable(blocks.iter().copied()) {
                        debug!("group {g} not decodable at epoch {epoch}; joiners skip it");
                        continue;
                    }
                    match group.recover(blocks) {
                        Ok(v) => v.to_vec(),
                        Err(e) => {
                            warn!("group {g} recovery failed: {e}");
                            continue;
                        }
                    }
                };
                let index = self.groups[g].index;
                for &id in &change.joined {
                    let block =
                        lt_encode_parity(&intermediates, &self.groups[g].dist, id, index, &mut self.streams.encoding)?;
                    if let Some(m) = self.roster.get_mut(id) {
                        m.coded.insert(index, block);
                    }
                    self.cache_intermediates(id, index, &intermediates);
                }
            }
        }
        Ok((change.joined.len(), change.left.len()))
    }

    fn encode_boundary(&mut self, size: GroupSize) -> Result<BoundaryEvent, NetsimError> {
        let index = self.groups.len() as u32;
        let blocks: Vec<Block> = self.open.drain(..size.sources).collect();
        let live = self.roster.ids();
        let encoded = encode_group_boundary(
            index,
            self.open_first,
            &blocks,
            &live,
            size,
            &self.config.group,
            &mut self.streams.encoding,
        )?;
        for block in encoded.coded {
            if let Some(m) = self.roster.get_mut(block.owner()) {
                m.coded.insert(index, block);
            }
        }
        for &id in &live {
            self.cache_intermediates(id, index, &encoded.intermediates);
        }
        let g = encoded.group;
        let event = BoundaryEvent {
            group: index,
            first: g.first,
            last: g.last,
            sources: size.sources,
            outputs: size.outputs,
            failure: size.failure,
            feasible: size.feasible,
        };
        self.open_first = g.last + 1;
        self.groups.push(g);
        Ok(event)
    }

    pub fn run_epoch(&mut self) -> Result<EpochRecord, NetsimError> {
        let t = self.epoch + 1;
        debug_assert!(self.config.discrepancy >= 1);
        let n = self.config.batch_size;

        let (joined, left) = if t > 1 { self.step_population(t)? } else { (0, 0) };
        let live = self.roster.ids();
        let silence = self.config.straggler_silence;
        let silent: BTreeSet<MinerId> = self
            .roster
            .iter()
            .filter(|m| m.behavior == Behavior::Straggler)
            .map(|m| m.id)
            .collect::<Vec<_>>()
            .into_iter()
            .filter(|_| self.streams.behavior.random_bool(silence))
            .collect();

        // Stage 1: batch, depth limit, selection.
        let backlog_in = self.backlog.len();
        let carried = backlog_in.min(n);
        let mut batch: Vec<Transaction> = self.backlog.drain(..carried).collect();
        let fresh = n - carried;
        batch.extend(generate_fresh(
            fresh,
            self.next_tx,
            t,
            t - 1,
            &self.config.transactions,
            &mut self.streams.transactions,
        )?);
        self.next_tx += fresh as u64;
        let boundaries: Vec<u64> = self.groups.iter().map(|g| g.last).collect();
        let candidates = depth_candidates(t, &boundaries);
        let depth_limit = adjust_depth_limit(&candidates, batch.len(), |d| {
            batch[..carried].iter().filter(|tx| self.blocked(tx, d)).count()
        });
        let problem = crate::txpool::SelectionProblem { depth_limit, ..self.config.selection.clone() };
        let selection = select_transactions(&batch, &problem, &mut self.streams.selection)?;
        let selected: Vec<&Transaction> = selection.chosen.iter().map(|&j| &batch[j]).collect();

        // Stage 1 (ii): M(t) and random assignment.
        let reliabilities: Vec<f64> = live.iter().map(|id| self.tracker.get(*id).unwrap_or(0.0)).collect();
        let reliability = aggregate_reliability(&reliabilities)?;
        let requirement = required_miners(reliability, self.config.epsilon, live.len())?;
        let plan = assign_miners(t, selected.len(), requirement.miners, &live, &mut self.streams.assignment)?;
        let by_miner = plan.by_miner();

        // Stage 2: data access and votes.
        let mut responders: HashMap<u32, Vec<&CodedBlock>> = HashMap::new();
        let mut shared: HashMap<(u32, usize), FetchPath> = HashMap::new();
        let mut fetch = FetchStats::default();
        let locate = |h: u64, groups: &[ClosedGroup]| -> Option<(u32, usize)> {
            let g = groups.partition_point(|g| g.last < h);
            groups.get(g).and_then(|grp| grp.position(h).map(|k| (grp.index, k)))
        };
        let targets: Vec<Option<(u32, usize)>> = selected
            .iter()
            .map(|tx| tx.required_height(t).filter(|&h| h < self.open_first).and_then(|h| locate(h, &self.groups)))
            .collect();

        let mut board = CommitmentBoard::new(t);
        let mut cast: BTreeMap<MinerId, Vec<Vote>> = BTreeMap::new();
        let mut proposals: BTreeMap<MinerId, Vec<Option<StateValue>>> = BTreeMap::new();
        let (mut votes_cast, mut abstentions) = (0usize, 0usize);
        for (&miner, assigned) in &by_miner {
            if silent.contains(&miner) {
                continue;
            }
            let state = self.roster.get(miner).ok_or(NetsimError::UnknownMiner(miner))?;
            let mut votes = Vec::with_capacity(assigned.len());
            let mut states = Vec::with_capacity(assigned.len());
            for &i in assigned {
                let tx = selected[i];
                if state.behavior == Behavior::Dishonest {
                    votes.push(if tx.valid { Vote::Reject } else { Vote::Accept });
                    states.push(Some(corrupt(tx.honest_state())));
                    continue;
                }
                let path = match targets[i] {
                    None => FetchPath::Local,
                    Some((g, k)) => {
                        let own = state.coded.get(&g).is_some_and(|b| b.is_systematic() && b.neighbors()[0] as usize == k)
                            || state.cache.get(&g).is_some_and(|c| c.contains_key(&k));
                        if own {
                            FetchPath::Local
                        } else {
                            let blocks = responders.entry(g).or_insert_with(|| {
                                self.roster
                                    .iter()
                                    .filter(|m| !silent.contains(&m.id))
                                    .filter_map(|m| m.coded.get(&g))
                                    .collect()
                            });
                            let common = *shared.entry((g, k)).or_insert_with(|| {
                                let group = &mut self.groups[g as usize];
                                let empty: BTreeMap<usize, SymbolVector> = BTreeMap::new();
                                let repaired = rnm_repair(k, blocks.iter().copied(), &empty)
                                    .ok()
                                    .and_then(|r| Block::from_symbol(&r.value).ok())
                                    .is_some_and(|b| b.digest() == group.digests[k]);
                                if repaired {
                                    FetchPath::Repaired
                                } else if (group.recovered.is_some() || group.decodable(blocks.iter().copied()))
                                    && group.recover(blocks.iter().copied()).is_ok()
                                {
                                    FetchPath::Decoded
                                } else {
                                    FetchPath::Unavailable
                                }
                            });
                            match (common, state.cache.get(&g)) {
                                (FetchPath::Decoded | FetchPath::Unavailable, Some(cache)) => {
                                    let digest = self.groups[g as usize].digests[k];
                                    let ok = rnm_repair(k, blocks.iter().copied(), cache)
                                        .ok()
                                        .and_then(|r| Block::from_symbol(&r.value).ok())
                                        .is_some_and(|b| b.digest() == digest);
                                    if ok {
                                        FetchPath::Repaired
                                    } else {
                                        common
                                    }
                                }
                                _ => common,
                            }
                        }
                    }
                };
                fetch.count(path);
                if path == FetchPath::Unavailable {
                    votes.push(Vote::Abstain);
                    states.push(None);
                    abstentions += 1;
                } else {
                    votes.push(if tx.valid { Vote::Accept } else { Vote::Reject });
                    states.push(Some(tx.honest_state()));
                }
            }
            let mut salt = [0u8; 16];
            self.streams.salts.fill(&mut salt);
            let record = VoteRecord::new(t, miner, votes, salt);
            board.commit(miner, record.commitment)?;
            board.reveal(&record)?;
            votes_cast += record.votes.len();
            cast.insert(miner, record.votes);
            proposals.insert(miner, states);
        }
        drop(responders);
        let assigned_total: usize = by_miner.values().map(Vec::len).sum();
        let missing_votes = assigned_total - votes_cast;
        let mut vote_hasher = Sha256::new();
        for (miner, votes) in board.verified() {
            let record_digest = crate::consensus::commit_vote(t, *miner, votes, &[0; 16]);
            vote_hasher.update(record_digest);
        }
        let vote_digest = hex(&vote_hasher.finalize());
        let mut assignment_hasher = Sha256::new();
        for set in &plan.sets {
            assignment_hasher.update((set.len() as u64).to_le_bytes());
            for m in set {
                assignment_hasher.update(m.to_le_bytes());
            }
        }
        let assignment_digest = hex(&assignment_hasher.finalize());

        // Stage 3: per-transaction decisions and state consensus.
        let decisions = tally_transaction_votes(&plan, board.verified());
        let outcomes = tally_state_updates(&plan, &decisions, &proposals);

        for (&miner, assigned) in &by_miner {
            let correct = cast.get(&miner).map_or(0, |votes| {
                assigned
                    .iter()
                    .zip(votes)
                    .filter(|(&i, v)| matches!((**v, decisions[i]), (Vote::Accept, true) | (Vote::Reject, false)))
                    .count()
            });
            self.tracker.record(miner, correct, assigned.len())?;
        }

        let mut rows = Vec::new();
        let mut confirmed_mask = vec![false; selected.len()];
        let (mut wrong_confirmations, mut wrong_rejections, mut wrong_states) = (0, 0, 0);
        let (mut demoted_ids, mut expired) = (BTreeSet::new(), 0usize);
        for (i, tx) in selected.iter().enumerate() {
            match outcomes[i] {
                StateOutcome::Agreed(s) => {
                    confirmed_mask[i] = true;
                    wrong_confirmations += usize::from(!tx.valid);
                    wrong_states += usize::from(s != tx.honest_state());
                    rows.push(BlockRow::confirmed(tx, s));
                }
                StateOutcome::NoMajority => {
                    demoted_ids.insert(tx.id);
                }
                StateOutcome::Rejected => {
                    expired += 1;
                    wrong_rejections += usize::from(tx.valid);
                }
            }
        }
        let confirmed: Vec<u64> = rows.iter().map(|r| r.id).collect();
        let confirmed_valid = selected.iter().zip(&confirmed_mask).filter(|(tx, c)| **c && tx.valid).count();

        let position: HashMap<MinerId, usize> = live.iter().enumerate().map(|(k, m)| (*m, k)).collect();
        let mut credits = vec![0u32; live.len()];
        for (miner, votes) in &cast {
            let assigned = &by_miner[miner];
            let c = assigned.iter().zip(votes).filter(|(&i, v)| confirmed_mask[i] && **v == Vote::Accept).count();
            credits[position[miner]] += c as u32;
        }

        let parent = self.headers.last().copied().unwrap_or([0; 32]);
        let block = form_block(t, rows, parent);
        let block_digest = block.digest();
        self.headers.push(block_digest);
        self.open.push(block);

        let selected_ids: Vec<u64> = selected.iter().map(|tx| tx.id).collect();
        let selected_valid: Vec<bool> = selected.iter().map(|tx| tx.valid).collect();

        // Unselected and demoted transactions return to the backlog one epoch older.
        let chosen: BTreeSet<usize> = selection.chosen.iter().copied().collect();
        let mut next: Vec<Transaction> = std::mem::take(&mut self.backlog);
        for (j, mut tx) in batch.into_iter().enumerate() {
            if !chosen.contains(&j) || demoted_ids.contains(&tx.id) {
                tx.age += 1;
                next.push(tx);
            }
        }
        next.sort_by_key(|tx| (tx.submitted_epoch, tx.id));
        self.backlog = next;

        // Stage 4: close the group once it holds W blocks.
        let mut boundary = None;
        let mut deferred_boundary = false;
        let size = match self.target {
            Some(s) => s,
            None => {
                let s = self.group_size(live.len())?;
                self.target = Some(s);
                s
            }
        };
        if self.open.len() >= size.sources {
            if self.roster.len() > size.outputs {
                boundary = Some(self.encode_boundary(size)?);
                let next_size = self.group_size(self.roster.len())?;
                self.target = Some(next_size);
            } else {
                deferred_boundary = true;
                let resized = self.group_size(self.roster.len())?;
                self.target = Some(resized);
            }
        }

        let group_sizes: Vec<usize> = self.groups.iter().map(|g| g.sources()).collect();
        let held = self.roster.iter().map(|m| m.coded.len()).max().unwrap_or(0);
        let storage_blocks = self.open.len() + held;
        let storage_fraction = crate::metrics::storage_fraction(t, &group_sizes)?;

        self.epoch = t;
        Ok(EpochRecord {
            epoch: t,
            miners: live.len(),
            joined,
            left,
            dishonest: self.roster.count(Behavior::Dishonest),
            stragglers: self.roster.count(Behavior::Straggler),
            silent: silent.len(),
            backlog_in,
            fresh,
            batch: n,
            depth_limit,
            selected: selected_ids,
            selected_valid,
            relaxed_objective: selection.relaxed_objective,
            selected_reward: selection.reward(),
            reliability,
            miners_per_tx: requirement.miners,
            degraded: requirement.degraded,
            assignment_digest,
            vote_digest,
            votes_cast,
            abstentions,
            missing_votes,
            decisions,
            confirmed,
            confirmed_valid,
            wrong_confirmations,
            wrong_rejections,
            wrong_states,
            demoted: demoted_ids.len(),
            expired,
            backlog_out: self.backlog.len(),
            credits,
            fetch,
            height: t,
            group_sizes,
            storage_blocks,
            storage_fraction,
            boundary,
            deferred_boundary,
            block_digest: hex(&block_digest),
        })
    }
}
