use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{AssignmentPlan, ConsensusError};
use crate::txpool::StateValue;
use crate::MinerId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Vote {
    Reject,
    Accept,
    Abstain,
}

impl Vote {
    fn byte(self) -> u8 {
        match self {
            Vote::Reject => 0,
            Vote::Accept => 1,
            Vote::Abstain => 0xFF,
        }
    }

    pub fn from_byte(b: u8) -> Option<Vote> {
        match b {
            0 => Some(Vote::Reject),
            1 => Some(Vote::Accept),
            0xFF => Some(Vote::Abstain),
            _ => None,
        }
    }
}

/// SHA-256 of `epoch (u64 LE) ‖ miner (u64 LE) ‖ vote bytes ‖ salt`.
pub fn commit_vote(epoch: u64, miner: MinerId, votes: &[Vote], salt: &[u8; 16]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(epoch.to_le_bytes());
    h.update(miner.to_le_bytes());
    h.update(votes.iter().map(|v| v.byte()).collect::<Vec<u8>>());
    h.update(salt);
    h.finalize().into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub epoch: u64,
    pub miner: MinerId,
    /// One vote per assigned transaction, in ascending transaction order.
    pub votes: Vec<Vote>,
    pub salt: [u8; 16],
    pub commitment: [u8; 32],
}

impl VoteRecord {
    pub fn new(epoch: u64, miner: MinerId, votes: Vec<Vote>, salt: [u8; 16]) -> Self {
        let commitment = commit_vote(epoch, miner, &votes, &salt);
        VoteRecord { epoch, miner, votes, salt, commitment }
    }

    pub fn verify(&self) -> bool {
        commit_vote(self.epoch, self.miner, &self.votes, &self.salt) == self.commitment
    }
}

/// Commit-then-reveal bookkeeping for one epoch. A miner's first reveal that
/// matches its commitment is kept; any further reveal is rejected.
#[derive(Debug, Clone, Default)]
pub struct CommitmentBoard {
    epoch: u64,
    commitments: HashMap<MinerId, [u8; 32]>,
    revealed: BTreeMap<MinerId, Vec<Vote>>,
}

impl CommitmentBoard {
    pub fn new(epoch: u64) -> Self {
        CommitmentBoard { epoch, ..Default::default() }
    }

    pub fn commit(&mut self, miner: MinerId, digest: [u8; 32]) -> Result<(), ConsensusError> {
        if self.commitments.contains_key(&miner) {
            return Err(ConsensusError::Equivocation(miner));
        }
        self.commitments.insert(miner, digest);
        Ok(())
    }

    pub fn reveal(&mut self, record: &VoteRecord) -> Result<(), ConsensusError> {
        if record.epoch != self.epoch {
            return Err(ConsensusError::Malformed(format!("epoch {} on board {}", record.epoch, self.epoch)));
        }
        let committed = self.commitments.get(&record.miner).ok_or(ConsensusError::Uncommitted(record.miner))?;
        if self.revealed.contains_key(&record.miner) {
            return Err(ConsensusError::Equivocation(record.miner));
        }
        if *committed != record.commitment || !record.verify() {
            return Err(ConsensusError::CommitmentMismatch(record.miner));
        }
        self.revealed.insert(record.miner, record.votes.clone());
        Ok(())
    }

    pub fn verified(&self) -> &BTreeMap<MinerId, Vec<Vote>> {
        &self.revealed
    }
}

/// v*_i = 1 iff accepts exceed half of |𝓜_i|. Missing and malformed vote
/// vectors count toward the denominator only.
pub fn tally_transaction_votes(plan: &AssignmentPlan, verified: &BTreeMap<MinerId, Vec<Vote>>) -> Vec<bool> {
    let mut accepts = vec![0usize; plan.sets.len()];
    for (miner, assigned) in plan.by_miner() {
        let Some(votes) = verified.get(&miner) else { continue };
        if votes.len() != assigned.len() {
            continue;
        }
        for (&i, v) in assigned.iter().zip(votes) {
            if *v == Vote::Accept {
                accepts[i] += 1;
            }
        }
    }
    plan.sets.iter().zip(accepts).map(|(set, a)| 2 * a > set.len()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateOutcome {
    /// Transaction was not confirmed by the vote tally.
    Rejected,
    /// Confirmed, but no state held a strict majority of 𝓜_i; back to the backlog.
    NoMajority,
    Agreed(StateValue),
}

/// Per confirmed transaction, the state proposed byte-identically by a
/// strict majority of its assigned set. `proposals` maps each miner to its
/// proposals in the order of its assigned transactions.
pub fn tally_state_updates(
    plan: &AssignmentPlan,
    confirmed: &[bool],
    proposals: &BTreeMap<MinerId, Vec<Option<StateValue>>>,
) -> Vec<StateOutcome> {
    let mut counts: Vec<BTreeMap<StateValue, usize>> = vec![BTreeMap::new(); plan.sets.len()];
    for (miner, assigned) in plan.by_miner() {
        let Some(states) = proposals.get(&miner) else { continue };
        if states.len() != assigned.len() {
            continue;
        }
        for (&i, s) in assigned.iter().zip(states) {
            if let Some(s) = s {
                *counts[i].entry(*s).or_default() += 1;
            }
        }
    }
    plan.sets
        .iter()
        .enumerate()
        .map(|(i, set)| {
            if !confirmed.get(i).copied().unwrap_or(false) {
                return StateOutcome::Rejected;
            }
            counts[i]
                .iter()
                .find(|(_, &c)| 2 * c > set.len())
                .map_or(StateOutcome::NoMajority, |(s, _)| StateOutcome::Agreed(*s))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(sets: Vec<Vec<MinerId>>) -> AssignmentPlan {
        AssignmentPlan { epoch: 1, miners_per_tx: sets.first().map_or(0, |s| s.len()), sets }
    }

    fn votes(pairs: &[(MinerId, Vote)]) -> BTreeMap<MinerId, Vec<Vote>> {
        pairs.iter().map(|(m, v)| (*m, vec![*v])).collect()
    }

    #[test]
    fn commitments_bind_votes() {
        let salt = [7u8; 16];
        let v = vec![Vote::Accept, Vote::Reject, Vote::Abstain];
        assert_eq!(commit_vote(3, 9, &v, &salt), commit_vote(3, 9, &v, &salt));
        let mut flipped = v.clone();
        flipped[1] = Vote::Accept;
        assert_ne!(commit_vote(3, 9, &v, &salt), commit_vote(3, 9, &flipped, &salt));
        assert_ne!(commit_vote(3, 9, &v, &salt), commit_vote(4, 9, &v, &salt));
        assert_eq!(Vote::from_byte(0xFF), Some(Vote::Abstain));
        assert_eq!(Vote::from_byte(2), None);
    }

    #[test]
    fn second_reveal_is_rejected() {
        let mut board = CommitmentBoard::new(5);
        let first = VoteRecord::new(5, 1, vec![Vote::Accept], [1; 16]);
        let second = VoteRecord::new(5, 1, vec![Vote::Reject], [2; 16]);
        board.commit(1, first.commitment).unwrap();
        assert_eq!(board.commit(1, second.commitment), Err(ConsensusError::Equivocation(1)));
        assert_eq!(board.reveal(&second), Err(ConsensusError::CommitmentMismatch(1)));
        board.reveal(&first).unwrap();
        assert_eq!(board.reveal(&first), Err(ConsensusError::Equivocation(1)));
        assert_eq!(board.verified()[&1], vec![Vote::Accept]);
        let stranger = VoteRecord::new(5, 2, vec![Vote::Accept], [0; 16]);
        assert_eq!(board.reveal(&stranger), Err(ConsensusError::Uncommitted(2)));
        let mut forged = VoteRecord::new(5, 3, vec![Vote::Accept], [0; 16]);
        board.commit(3, forged.commitment).unwrap();
        forged.votes[0] = Vote::Reject;
        assert_eq!(board.reveal(&forged), Err(ConsensusError::CommitmentMismatch(3)));
    }

    #[test]
    fn strict_majority_examples() {
        let p = plan(vec![vec![1, 2, 3]]);
        let v = votes(&[(1, Vote::Accept), (2, Vote::Accept), (3, Vote::Reject)]);
        assert_eq!(tally_transaction_votes(&p, &v), vec![true]);
        let p = plan(vec![vec![1, 2, 3, 4]]);
        let v = votes(&[(1, Vote::Accept), (2, Vote::Accept), (3, Vote::Reject), (4, Vote::Abstain)]);
        assert_eq!(tally_transaction_votes(&p, &v), vec![false]);
        // Silent miners count against acceptance.
        let v = votes(&[(1, Vote::Accept), (2, Vote::Accept)]);
        assert_eq!(tally_transaction_votes(&p, &v), vec![false]);
        assert_eq!(tally_transaction_votes(&p, &v), tally_transaction_votes(&p, &v));
    }

    #[test]
    fn vote_vectors_follow_assignment_order() {
        let p = plan(vec![vec![1, 2, 3], vec![2, 3, 4], vec![1, 3, 4]]);
        let mut v = BTreeMap::new();
        v.insert(1, vec![Vote::Accept, Vote::Reject]);
        v.insert(2, vec![Vote::Accept, Vote::Accept]);
        v.insert(3, vec![Vote::Reject, Vote::Accept, Vote::Reject]);
        v.insert(4, vec![Vote::Accept, Vote::Reject]);
        assert_eq!(tally_transaction_votes(&p, &v), vec![true, true, false]);
        // A vector of the wrong length is discarded.
        v.insert(2, vec![Vote::Accept]);
        assert_eq!(tally_transaction_votes(&p, &v), vec![false, true, false]);
    }

    #[test]
    fn state_majority_examples() {
        let p = plan(vec![vec![1, 2, 3, 4], vec![1, 2, 3, 4], vec![1, 2, 3, 4]]);
        let a = [1u8; 8];
        let b = [2u8; 8];
        let c = [3u8; 8];
        let mut props = BTreeMap::new();
        props.insert(1, vec![Some(a), Some(a), Some(a)]);
        props.insert(2, vec![Some(a), Some(b), Some(a)]);
        props.insert(3, vec![Some(a), Some(c), None]);
        props.insert(4, vec![Some(a), Some(a), Some(b)]);
        let out = tally_state_updates(&p, &[true, true, false], &props);
        assert_eq!(out, vec![StateOutcome::Agreed(a), StateOutcome::NoMajority, StateOutcome::Rejected]);
    }
}
