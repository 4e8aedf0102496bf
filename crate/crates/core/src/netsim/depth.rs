//! Dynamic depth limit D.

/// Candidate limits at epoch `t`, shallowest first: `t − b` for each closed
/// group end height `b`, newest group first, and finally `t` (full history).
pub fn depth_candidates(epoch: u64, boundaries: &[u64]) -> Vec<u64> {
    let mut out: Vec<u64> = boundaries.iter().rev().filter(|&&b| b <= epoch).map(|&b| epoch - b).collect();
    out.push(epoch);
    out.dedup();
    out
}

/// First candidate at which the backlogged transactions still excluded by
/// the limit are a strict minority of the batch; saturates at the last
/// candidate. `blocked(D)` counts backlogged batch members excluded at `D`.
pub fn adjust_depth_limit<F: FnMut(u64) -> usize>(candidates: &[u64], batch_len: usize, mut blocked: F) -> u64 {
    for &d in candidates {
        if 2 * blocked(d) < batch_len {
            return d;
        }
    }
    candidates.last().copied().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidates_walk_back_through_boundaries() {
        assert_eq!(depth_candidates(7, &[]), vec![7]);
        assert_eq!(depth_candidates(130, &[50, 100]), vec![30, 80, 130]);
    }

    #[test]
    fn empty_backlog_keeps_baseline() {
        let c = depth_candidates(130, &[50, 100]);
        assert_eq!(adjust_depth_limit(&c, 500, |_| 0), 30);
    }

    #[test]
    fn persistent_backlog_saturates() {
        let c = depth_candidates(130, &[50, 100]);
        assert_eq!(adjust_depth_limit(&c, 500, |_| 400), 130);
    }

    #[test]
    fn constructed_batch_clears_at_second_boundary() {
        // 260 of 500 are backlogged with depths in (30, 80].
        let depths: Vec<u64> = (0..260).map(|k| 31 + k % 50).collect();
        let c = depth_candidates(130, &[50, 100]);
        let d = adjust_depth_limit(&c, 500, |d| depths.iter().filter(|&&x| x > d).count());
        assert_eq!(d, 130 - 50);
    }
}
