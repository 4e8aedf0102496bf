use std::collections::BTreeMap;

use coded_chain::consensus::{
    assign_miners, form_block, tally_state_updates, tally_transaction_votes, Block, BlockRow, CommitmentBoard,
    StateOutcome, Vote, VoteRecord,
};
use coded_chain::gf::SymbolVector;
use coded_chain::metrics::{entropy, gini, storage_fraction, throughput};
use coded_chain::netsim::{encode_group_boundary, Engine, NetworkConfig};
use coded_chain::raptor::{rnm_repair, GroupPolicy, GroupSize};
use coded_chain::txpool::{generate_fresh, select_transactions, SelectionMode, SelectionProblem, TxDistributions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn chain(len: usize, seed: u64) -> Vec<Block> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parent = [0u8; 32];
    (1..=len as u64)
        .map(|t| {
            let txs = generate_fresh(3 + t as usize % 4, t * 10, t, t - 1, &TxDistributions::default(), &mut rng).unwrap();
            let rows = txs.iter().map(|tx| BlockRow::confirmed(tx, tx.honest_state())).collect();
            let b = form_block(t, rows, parent);
            parent = b.digest();
            b
        })
        .collect()
}

#[test]
fn erased_blocks_come_back_by_repair_or_decode() {
    let blocks = chain(8, 1);
    let size = GroupSize { sources: 8, outputs: 10, failure: 0.0, feasible: true };
    let live: Vec<u64> = (0..40).collect();
    let policy = GroupPolicy::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut enc = encode_group_boundary(0, 1, &blocks, &live, size, &policy, &mut rng).unwrap();
    // Systematic holders 0..10 go silent; only parity holders answer.
    let parity: Vec<_> = enc.coded.iter().filter(|b| !b.is_systematic()).cloned().collect();
    let cache: BTreeMap<usize, SymbolVector> = (0..10).map(|k| (k, enc.intermediates[k].clone())).collect();
    let mut repaired = 0;
    for k in 0..8 {
        let mut partial = cache.clone();
        partial.remove(&k);
        if let Ok(r) = rnm_repair(k, &parity, &partial) {
            assert_eq!(Block::from_symbol(&r.value).unwrap(), blocks[k]);
            repaired += 1;
        }
    }
    assert!(repaired > 0);
    let mut all = parity.clone();
    all.extend(enc.coded.iter().filter(|b| b.is_systematic() && b.neighbors()[0] % 2 == 0).cloned());
    assert!(enc.group.decodable(&all));
    let recovered = enc.group.recover(&all).unwrap().to_vec();
    for (k, b) in blocks.iter().enumerate() {
        assert_eq!(&Block::from_symbol(&recovered[k]).unwrap(), b);
    }
}

#[test]
fn selection_to_block_with_committed_votes() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pool = generate_fresh(200, 0, 3, 2, &TxDistributions::default(), &mut rng).unwrap();
    let problem = SelectionProblem { mode: SelectionMode::Deterministic, depth_limit: 3, ..Default::default() };
    let sel = select_transactions(&pool, &problem, &mut rng).unwrap();
    assert!(sel.count() > 0);
    let chosen: Vec<_> = sel.chosen.iter().map(|&j| &pool[j]).collect();
    let live: Vec<u64> = (100..160).collect();
    let plan = assign_miners(3, chosen.len(), 9, &live, &mut rng).unwrap();
    let mut board = CommitmentBoard::new(3);
    let mut states = BTreeMap::new();
    for (miner, txs) in plan.by_miner() {
        let votes: Vec<Vote> = txs.iter().map(|&i| if chosen[i].valid { Vote::Accept } else { Vote::Reject }).collect();
        let record = VoteRecord::new(3, miner, votes, [miner as u8; 16]);
        board.commit(miner, record.commitment).unwrap();
        board.reveal(&record).unwrap();
        states.insert(miner, txs.iter().map(|&i| Some(chosen[i].honest_state())).collect::<Vec<_>>());
    }
    let decisions = tally_transaction_votes(&plan, board.verified());
    assert_eq!(decisions, chosen.iter().map(|t| t.valid).collect::<Vec<_>>());
    let outcomes = tally_state_updates(&plan, &decisions, &states);
    let rows: Vec<BlockRow> = outcomes
        .iter()
        .zip(&chosen)
        .filter_map(|(o, tx)| match o {
            StateOutcome::Agreed(s) => Some(BlockRow::confirmed(tx, *s)),
            _ => None,
        })
        .collect();
    let block = form_block(3, rows, [0; 32]);
    assert_eq!(Block::from_bytes(&block.to_bytes()).unwrap(), block);
    assert_eq!(block.rows.len(), chosen.iter().filter(|t| t.valid).count());
}

#[test]
fn honest_network_throughput_matches_valid_selection() {
    let config = NetworkConfig {
        initial_miners: 120,
        batch_size: 80,
        dishonest_fraction: 0.0,
        straggler_cap: 0.0,
        join_mean: 1.0,
        leave_mean: 1.0,
        seed: 21,
        ..NetworkConfig::default()
    };
    let records = Engine::new(config).unwrap().run(30).unwrap();
    let oracle = records
        .iter()
        .map(|r| r.selected_valid.iter().filter(|v| **v).count() as f64)
        .sum::<f64>()
        / records.len() as f64;
    let tp = throughput(&records, 80);
    assert_eq!(tp.mean, oracle);
    assert_eq!(tp.normalized, oracle / 80.0);
    assert_eq!(tp.wrong_confirmations, 0.0);
    for r in &records {
        assert_eq!(r.storage_fraction, storage_fraction(r.height, &r.group_sizes).unwrap());
        let credits: u64 = r.credits.iter().map(|&c| c as u64).sum();
        assert_eq!(credits, (r.confirmed.len() * r.miners_per_tx) as u64);
        assert!(gini(&r.credits) < 1.0);
        assert!(entropy(&r.credits) <= (r.miners as f64).log2() + 1e-9);
    }
}

#[test]
fn storage_sawtooth_in_a_growing_network() {
    let mut config = NetworkConfig { initial_miners: 200, join_mean: 3.0, leave_mean: 1.0, seed: 4, ..NetworkConfig::default() };
    config.group.max_sources = 10;
    let records = Engine::new(config).unwrap().run(45).unwrap();
    assert_eq!(records[0].storage_fraction, 1.0);
    let mut drops = 0;
    for pair in records.windows(2) {
        if pair[1].boundary.is_some() {
            assert!(pair[1].storage_fraction < pair[0].storage_fraction);
            drops += 1;
        } else {
            assert!(pair[1].storage_fraction >= pair[0].storage_fraction);
        }
    }
    assert!(drops >= 3);
}
