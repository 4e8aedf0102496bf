//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use coded_chain::consensus::{assign_miners, required_miners, tally_transaction_votes, Vote};
use coded_chain::gf::SymbolVector;
use coded_chain::netsim::{Engine, NetworkConfig};
use coded_chain::precode::{precode_encode, precode_erasure_decode, PrecodeMatrix};
use coded_chain::raptor::{full_decode, lt_encode_parity, rnm_repair, systematic_block, DegreeDistribution};
use coded_chain::txpool::{
    brute_force_select, compute_rewards, deterministic_budgets, generate_fresh, randomized_round, select_transactions,
    solve_relaxed, SelectionMode, SelectionProblem, TxDistributions,
};
use coded_chain_cli::{preset, run, simulate, sweep_summaries, Axis};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};
use sha2::{Digest, Sha256};

type Outcome = (bool, String);

fn vectors(rng: &mut ChaCha8Rng, count: usize, bytes: usize, bits: u32) -> Vec<SymbolVector> {
    (0..count)
        .map(|_| {
            let mut b = vec![0u8; bytes];
            rng.fill(&mut b[..]);
            SymbolVector::from_bytes(bits, b).unwrap()
        })
        .collect()
}

fn codec_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut failures = 0;
    let mut trials = 0;
    for (w, wbar) in [(4, 5), (8, 10), (40, 50)] {
        let code = PrecodeMatrix::new(w, wbar).unwrap();
        for _ in 0..1000 {
            let src = vectors(&mut rng, w, 16, code.bits());
            let out = precode_encode(&src, &code).unwrap();
            let keep = rng.random_range(w..=wbar);
            let idx = sample(&mut rng, wbar, keep).into_vec();
            let present: Vec<(usize, &SymbolVector)> = idx.iter().map(|&k| (k, &out[k])).collect();
            trials += 1;
            if precode_erasure_decode(&present, &code).ok().as_ref() != Some(&src) {
                failures += 1;
            }
        }
    }
    (failures == 0, format!("{failures} mismatches in {trials} erasure patterns"))
}

fn rnm_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let wbar = 50;
    let dist = DegreeDistribution::build(wbar, 0.15, 0.5).unwrap();
    let (mut successes, mut false_successes) = (0, 0);
    for _ in 0..1000 {
        let d = vectors(&mut rng, wbar, 8, 8);
        let parity = rng.random_range(10..80);
        let mut blocks: Vec<_> =
            (0..parity).map(|j| lt_encode_parity(&d, &dist, j as u64, 0, &mut rng).unwrap()).collect();
        for k in 0..wbar {
            if rng.random_bool(0.2) {
                blocks.push(systematic_block(&d, k, 1000 + k as u64, 0).unwrap());
            }
        }
        let cache: BTreeMap<usize, SymbolVector> =
            (0..wbar).filter(|_| rng.random_bool(0.7)).map(|k| (k, d[k].clone())).collect();
        let target = rng.random_range(0..wbar);
        if let Ok(r) = rnm_repair(target, &blocks, &cache) {
            successes += 1;
            if r.value != d[target] {
                false_successes += 1;
            }
        }
    }
    (false_successes == 0 && successes > 0, format!("{successes} repairs, {false_successes} false"))
}

/// Successes of the erased trials over the pinned seeds 0..200.
const RAPTOR_SUCCESSES: usize = 200;

fn raptor_reliability() -> Outcome {
    // A 130-miner network: the first W̄ miners hold systematic intermediates
    // and the other 30 hold parity. Each trial decodes once from all 130
    // blocks and once after erasing every block with the straggler-silence
    // probability used for group sizing.
    let (w, wbar, miners) = (80, 100, 130);
    let erasure = 0.4 / 3.0;
    let code = PrecodeMatrix::new(w, wbar).unwrap();
    let dist = DegreeDistribution::build(wbar, 0.15, 0.5).unwrap();
    let (mut full, mut erased) = (0, 0);
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = vectors(&mut rng, w, 8, 8);
        let d = precode_encode(&src, &code).unwrap();
        let blocks: Vec<_> = (0..miners)
            .map(|j| {
                if j < wbar {
                    systematic_block(&d, j, j as u64, 0).unwrap()
                } else {
                    lt_encode_parity(&d, &dist, j as u64, 0, &mut rng).unwrap()
                }
            })
            .collect();
        if full_decode(&blocks, &code).ok().as_ref() == Some(&src) {
            full += 1;
        }
        let kept: Vec<_> = blocks.iter().filter(|_| !rng.random_bool(erasure)).collect();
        if full_decode(kept, &code).ok().as_ref() == Some(&src) {
            erased += 1;
        }
    }
    let (r_full, r_erased) = (full as f64 / 200.0, erased as f64 / 200.0);
    (
        r_full >= 0.95 && r_erased >= 0.95 && erased == RAPTOR_SUCCESSES,
        format!("success rate {r_full:.3} with all blocks, {r_erased:.3} ({erased}/200, pinned {RAPTOR_SUCCESSES}) after erasure"),
    )
}

fn degree_distribution() -> Outcome {
    let mut worst_tv: f64 = 0.0;
    let mut worst_sum: f64 = 0.0;
    let mut omega1 = 0.0;
    for (k, wbar) in [50usize, 100, 1000].into_iter().enumerate() {
        let dist = DegreeDistribution::build(wbar, 0.15, 0.5).unwrap();
        omega1 += dist.prob(1);
        worst_sum = worst_sum.max((dist.probs().iter().sum::<f64>() - 1.0).abs());
        let mut rng = ChaCha8Rng::seed_from_u64(400 + k as u64);
        let draws = 100_000;
        let mut counts = vec![0usize; wbar + 1];
        for _ in 0..draws {
            counts[dist.sample(&mut rng)] += 1;
        }
        let tv = 0.5 * (0..=wbar).map(|l| (counts[l] as f64 / draws as f64 - dist.prob(l)).abs()).sum::<f64>();
        worst_tv = worst_tv.max(tv);
    }
    (
        omega1 == 0.0 && worst_sum <= 1e-9 && worst_tv <= 0.02,
        format!("Ω(1) = {omega1}, max |ΣΩ − 1| = {worst_sum:.2e}, max TV = {worst_tv:.4}"),
    )
}

fn selection_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let (instances, n) = (50, 12);
    let (mut good, mut infeasible) = (0, 0);
    for _ in 0..instances {
        let txs = generate_fresh(n, 0, 1, 20, &TxDistributions::default(), &mut rng).unwrap();
        let frac = rng.random_range(0.3..0.7);
        let problem = SelectionProblem {
            mode: SelectionMode::Deterministic,
            compute_budget: frac * 63_000.0 * n as f64,
            size_budget: frac * 3000.0 * n as f64,
            depth_limit: 15,
            ..Default::default()
        };
        let v: Vec<f64> = txs.iter().map(|t| t.vitality as f64).collect();
        let a: Vec<f64> = txs.iter().map(|t| t.age as f64).collect();
        let f: Vec<f64> = txs.iter().map(|t| t.fee).collect();
        let rewards = compute_rewards(&v, &a, &f).unwrap();
        let budgets = deterministic_budgets(&problem, &txs).unwrap();
        let value = |s: &[bool]| rewards.iter().zip(s).filter(|(_, s)| **s).map(|(r, _)| r).sum::<f64>();
        let exact = |s: &[bool]| {
            let chosen: Vec<_> = txs.iter().zip(s).filter(|(_, s)| **s).map(|(t, _)| t).collect();
            chosen.iter().fold(0.0, |acc, t| acc + t.compute) <= problem.compute_budget
                && chosen.iter().fold(0.0, |acc, t| acc + t.size) <= problem.size_budget
                && chosen.iter().all(|t| t.depth <= problem.depth_limit)
        };
        let opt = brute_force_select(&rewards, &budgets).unwrap();
        let x = solve_relaxed(&rewards, &budgets).unwrap();
        let rounds: Vec<Vec<bool>> = (0..100).map(|_| randomized_round(&x, &budgets, &rewards, &mut rng)).collect();
        infeasible += usize::from(!exact(&opt)) + rounds.iter().filter(|r| !exact(r)).count();
        let best = rounds.iter().map(|r| value(r)).fold(0.0, f64::max);
        if best >= 0.9 * value(&opt) {
            good += 1;
        }
    }
    (
        good * 100 >= 95 * instances && infeasible == 0,
        format!("{good}/{instances} reach 0.9 × optimum, {infeasible} infeasible sets"),
    )
}

fn stochastic_feasibility() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let trials = 100_000;
    let mut worst = [1.0f64; 3];
    for k in 0..20u64 {
        let n = rng.random_range(100..=500);
        let height = rng.random_range(10..=80);
        let txs = generate_fresh(n, 0, 1, height, &TxDistributions::default(), &mut rng).unwrap();
        let problem = SelectionProblem {
            mode: SelectionMode::Stochastic,
            depth_limit: rng.random_range(height / 2..=height),
            ..Default::default()
        };
        let sel = select_transactions(&txs, &problem, &mut ChaCha8Rng::seed_from_u64(k)).unwrap();
        let chosen: Vec<_> = sel.chosen.iter().map(|&j| &txs[j]).collect();
        let omega = problem.size_variance;
        let compute: Vec<Gamma<f64>> =
            chosen.iter().map(|t| Gamma::new(t.compute_shape, problem.gamma_scale).unwrap()).collect();
        let size: Vec<Normal<f64>> =
            chosen.iter().map(|t| Normal::new(t.size_mean, (omega * t.size_mean).sqrt()).unwrap()).collect();
        let depth: Vec<Option<Poisson<f64>>> =
            chosen.iter().map(|t| (t.depth_mean > 0.0).then(|| Poisson::new(t.depth_mean).unwrap())).collect();
        let mut mc = ChaCha8Rng::seed_from_u64(1000 + k);
        let mut ok = [0usize; 3];
        for _ in 0..trials {
            ok[0] += usize::from(compute.iter().map(|g| g.sample(&mut mc)).sum::<f64>() <= problem.compute_budget);
            ok[1] += usize::from(size.iter().map(|g| g.sample(&mut mc)).sum::<f64>() <= problem.size_budget);
            ok[2] += usize::from(
                depth.iter().all(|p| p.as_ref().is_none_or(|p| p.sample(&mut mc) as u64 <= problem.depth_limit)),
            );
        }
        for i in 0..3 {
            worst[i] = worst[i].min(ok[i] as f64 / trials as f64);
        }
    }
    let floor = 0.9 - 0.02;
    (
        worst.iter().all(|&p| p >= floor),
        format!("worst certified P(ξ) = {:.4}, P(η) = {:.4}, P(d) = {:.4}, floor {floor}", worst[0], worst[1], worst[2]),
    )
}

fn miner_count() -> Outcome {
    let m90 = required_miners(0.9, 0.01, 10_000).unwrap().miners;
    let m75 = required_miners(0.75, 0.01, 10_000).unwrap().miners;
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let live: Vec<u64> = (0..500).collect();
    let count = 10_000;
    let plan = assign_miners(1, count, 52, &live, &mut rng).unwrap();
    let truth: Vec<bool> = (0..count).map(|_| rng.random_bool(0.9)).collect();
    let votes: BTreeMap<u64, Vec<Vote>> = plan
        .by_miner()
        .into_iter()
        .map(|(miner, txs)| {
            let v = txs
                .iter()
                .map(|&i| if rng.random_bool(0.9) == truth[i] { Vote::Accept } else { Vote::Reject })
                .collect();
            (miner, v)
        })
        .collect();
    let decisions = tally_transaction_votes(&plan, &votes);
    let wrong = decisions.iter().zip(&truth).filter(|(d, t)| d != t).count();
    let rate = wrong as f64 / count as f64;
    (
        m90 == 52 && m75 == 111 && rate <= 0.01,
        format!("M(0.9) = {m90}, M(0.75) = {m75}, wrong-decision rate {rate:.4} at M = 52"),
    )
}

fn read_column(path: &Path, column: &str) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let k = lines.next().unwrap().split(',').position(|c| c == column).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().to_string()).collect()
}

fn storage_trajectory() -> Outcome {
    let s = preset("fig4").unwrap();
    let records = simulate(&s, s.seeds[0]).unwrap();
    let mut exact = true;
    for r in &records {
        let q = r.height as f64;
        let covered: usize = r.group_sizes.iter().sum();
        let formula = (q - covered as f64 + r.group_sizes.len() as f64) / q;
        exact &= r.storage_fraction == formula && r.storage_blocks as f64 / q == formula;
    }
    let rs: Vec<f64> = records.iter().map(|r| r.storage_fraction).collect();
    let drops = rs.windows(2).filter(|w| w[1] < w[0]).count();
    let dir = tempfile::tempdir().unwrap();
    run(&s, dir.path()).unwrap();
    let column = read_column(&dir.path().join(format!("fig4_seed{}.csv", s.seeds[0])), "storage_fraction");
    let last = *rs.last().unwrap();
    (
        exact && column[0] == "1" && drops >= 3 && last < 0.5,
        format!("exact = {exact}, first CSV value {}, {drops} drops, final R_s {last:.4}", column[0]),
    )
}

fn decentralization() -> Outcome {
    let s = preset("fig5").unwrap();
    let records = simulate(&s, s.seeds[0]).unwrap();
    let summary = coded_chain_cli::summarize(&s.name, s.seeds[0], s.batch_size, &records);
    let bound = 0.8 * summary.mean_miners.log2();
    (
        summary.mean_gini < 0.2 && summary.mean_entropy > bound,
        format!(
            "mean Gini {:.4} (< 0.2), mean entropy {:.3} (> {bound:.3}), mean N {:.1}",
            summary.mean_gini, summary.mean_entropy, summary.mean_miners
        ),
    )
}

fn discrepancy_immunity() -> Outcome {
    let streams: Vec<Vec<u8>> = (1..=3)
        .map(|d| {
            let config =
                NetworkConfig { dishonest_fraction: 0.2, straggler_cap: 0.0, discrepancy: d, seed: 10, ..Default::default() };
            let records = Engine::new(config).unwrap().run(60).unwrap();
            records.iter().flat_map(|r| serde_json_bytes(r)).collect()
        })
        .collect();
    let same = streams[0] == streams[1] && streams[1] == streams[2];
    (same, format!("record stream digests {}", streams.iter().map(|s| short(&Sha256::digest(s))).collect::<Vec<_>>().join(" ")))
}

fn serde_json_bytes(r: &coded_chain::netsim::EpochRecord) -> Vec<u8> {
    let mut v = r.digest().to_vec();
    v.extend(format!("{r:?}").into_bytes());
    v
}

fn short(d: &[u8]) -> String {
    d[..6].iter().map(|b| format!("{b:02x}")).collect()
}

fn straggler_resilience() -> Outcome {
    let s = preset("fig9").unwrap();
    let rows = sweep_summaries(&s, Axis::StragglerCap, &[0.0, 0.2, 0.4]).unwrap();
    let tp: Vec<f64> = rows.iter().map(|(_, r)| r.normalized_throughput).collect();
    (tp[2] >= 0.9 * tp[0], format!("normalized throughput {:.4} / {:.4} / {:.4} at 0 / 20 / 40%", tp[0], tp[1], tp[2]))
}

fn dishonesty_trend() -> Outcome {
    let s = preset("fig7").unwrap();
    let rows = sweep_summaries(&s, Axis::DishonestFraction, &[0.05, 0.3, 0.45]).unwrap();
    let tp: Vec<f64> = rows.iter().map(|(_, r)| r.throughput).collect();
    let monotone = tp[0] >= tp[1] && tp[1] >= tp[2];
    let accelerating = tp[0] - tp[1] < tp[1] - tp[2];
    (monotone && accelerating, format!("throughput {:.2} / {:.2} / {:.2} at μ = 5 / 30 / 45%", tp[0], tp[1], tp[2]))
}

fn dir_digest(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        files.insert(path.file_name().unwrap().to_string_lossy().into_owned(), Sha256::digest(fs::read(&path).unwrap()).to_vec());
    }
    files
}

fn determinism() -> Outcome {
    let mut detail = Vec::new();
    let mut same = true;
    for name in ["fig4", "fig8"] {
        let s = preset(name).unwrap();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        if s.sweep_axis.is_some() {
            let axis = Axis::parse(s.sweep_axis.as_deref().unwrap()).unwrap();
            coded_chain_cli::sweep(&s, axis, &s.sweep_values, a.path()).unwrap();
            coded_chain_cli::sweep(&s, axis, &s.sweep_values, b.path()).unwrap();
        } else {
            run(&s, a.path()).unwrap();
            run(&s, b.path()).unwrap();
        }
        let (da, db) = (dir_digest(a.path()), dir_digest(b.path()));
        same &= da == db && !da.is_empty();
        detail.push(format!("{name}: {} files", da.len()));
    }
    (same, detail.join(", "))
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Outcome); 13] = [
        ("codec round trip", Duration::from_secs(10), codec_round_trip),
        ("RNM exactness", Duration::from_secs(10), rnm_exactness),
        ("raptor reliability", Duration::from_secs(60), raptor_reliability),
        ("degree distribution", Duration::from_secs(5), degree_distribution),
        ("selection optimality", Duration::from_secs(60), selection_optimality),
        ("stochastic feasibility", Duration::from_secs(120), stochastic_feasibility),
        ("miner count and consensus error", Duration::from_secs(30), miner_count),
        ("storage trajectory (fig4)", Duration::from_secs(300), storage_trajectory),
        ("decentralization (fig5)", Duration::from_secs(300), decentralization),
        ("discrepancy immunity", Duration::from_secs(120), discrepancy_immunity),
        ("straggler resilience (fig9)", Duration::from_secs(300), straggler_resilience),
        ("dishonesty trend (fig7)", Duration::from_secs(300), dishonesty_trend),
        ("determinism", Duration::from_secs(600), determinism),
    ];
    let mut failed = 0;
    for (k, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = check();
        let elapsed = start.elapsed();
        let within = elapsed <= *budget;
        let pass = ok && within;
        failed += usize::from(!pass);
        println!(
            "criterion {:>2} {} {name}: {detail} [{:.1}s of {}s]",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
