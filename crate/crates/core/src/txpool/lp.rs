//! Bounded-variable primal simplex for `max c·x  s.t.  A x <= b, 0 <= x <= 1`
//! with `b >= 0` and a handful of rows.
//!
//! The all-zero point is feasible, so the slack basis starts the method
//! directly. Bland's rule picks entering and leaving variables, which rules
//! out cycling on degenerate pivots.

use thiserror::Error;

const TOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("row {row} has {got} coefficients, expected {expected}")]
    Shape { row: usize, got: usize, expected: usize },
    #[error("row {0} has a negative right-hand side")]
    NegativeLimit(usize),
    #[error("non-finite or negative data in row {0}")]
    BadCoefficient(usize),
    #[error("simplex did not converge within {0} pivots")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

/// Solves the box-constrained packing LP. Coefficients must be non-negative.
pub fn solve_box_lp(objective: &[f64], rows: &[Vec<f64>], limits: &[f64]) -> Result<LpSolution, LpError> {
    let n = objective.len();
    let m = rows.len();
    for (k, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(LpError::Shape { row: k, got: row.len(), expected: n });
        }
        if row.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(LpError::BadCoefficient(k));
        }
    }
    if limits.len() != m {
        return Err(LpError::Shape { row: m, got: limits.len(), expected: m });
    }
    if let Some(k) = limits.iter().position(|b| !(*b >= 0.0)) {
        return Err(LpError::NegativeLimit(k));
    }

    // Variables with non-positive reward never help; those using no
    // capacity sit at their upper bound. The rest enter the simplex, with
    // each row scaled to unit right-hand side.
    let mut x = vec![0.0; n];
    let mut free: Vec<usize> = Vec::new();
    for j in 0..n {
        if objective[j] <= 0.0 {
            continue;
        }
        let blocked = (0..m).any(|k| limits[k] == 0.0 && rows[k][j] > 0.0);
        if blocked {
            continue;
        }
        if (0..m).all(|k| rows[k][j] == 0.0) {
            x[j] = 1.0;
        } else {
            free.push(j);
        }
    }
    let live_rows: Vec<usize> = (0..m).filter(|&k| limits[k] > 0.0).collect();
    let nf = free.len();
    let mr = live_rows.len();
    let mut pivots = 0;
    if nf > 0 && mr > 0 {
        let total = nf + mr;
        // Tableau B⁻¹[A I] and current basic values.
        let mut tab: Vec<Vec<f64>> = live_rows
            .iter()
            .enumerate()
            .map(|(r, &k)| {
                let mut row: Vec<f64> = free.iter().map(|&j| rows[k][j] / limits[k]).collect();
                row.extend((0..mr).map(|s| if s == r { 1.0 } else { 0.0 }));
                row
            })
            .collect();
        let cost: Vec<f64> = free.iter().map(|&j| objective[j]).chain(std::iter::repeat_n(0.0, mr)).collect();
        let upper = |v: usize| if v < nf { 1.0 } else { f64::INFINITY };
        let mut basis: Vec<usize> = (nf..total).collect();
        let mut value: Vec<f64> = vec![1.0; mr];
        let mut at_upper = vec![false; total];
        let mut is_basic = vec![false; total];
        for &b in &basis {
            is_basic[b] = true;
        }
        let limit = 50 * (total + 10);
        loop {
            if pivots > limit {
                return Err(LpError::IterationLimit(limit));
            }
            // Reduced costs d_j = c_j - c_B B⁻¹ A_j; Bland: first improving index.
            let entering = (0..total).find(|&v| {
                if is_basic[v] {
                    return false;
                }
                let d = cost[v] - (0..mr).map(|r| cost[basis[r]] * tab[r][v]).sum::<f64>();
                (!at_upper[v] && d > TOL) || (at_upper[v] && d < -TOL)
            });
            let Some(e) = entering else { break };
            let dir = if at_upper[e] { -1.0 } else { 1.0 };
            // Ratio test; ties resolved toward the smallest variable index.
            let mut step = upper(e);
            let mut leave: Option<(usize, bool)> = None;
            for r in 0..mr {
                let alpha = dir * tab[r][e];
                let (room, to_upper) = if alpha > TOL {
                    (value[r] / alpha, false)
                } else if alpha < -TOL && upper(basis[r]).is_finite() {
                    ((upper(basis[r]) - value[r]) / -alpha, true)
                } else {
                    continue;
                };
                let room = room.max(0.0);
                let better = match leave {
                    None => room < step - TOL || (room <= step + TOL && step.is_finite() && room <= step),
                    Some((cur, _)) => room < step - TOL || (room <= step + TOL && basis[r] < basis[cur]),
                };
                if better {
                    step = room;
                    leave = Some((r, to_upper));
                }
            }
            pivots += 1;
            for r in 0..mr {
                value[r] -= dir * step * tab[r][e];
            }
            match leave {
                None => {
                    // Bound flip of the entering variable.
                    at_upper[e] = !at_upper[e];
                }
                Some((r, to_upper)) => {
                    let old = basis[r];
                    is_basic[old] = false;
                    at_upper[old] = to_upper;
                    let start = if at_upper[e] { 1.0 } else { 0.0 };
                    is_basic[e] = true;
                    at_upper[e] = false;
                    basis[r] = e;
                    value[r] = start + dir * step;
                    let piv = tab[r][e];
                    for c in 0..total {
                        tab[r][c] /= piv;
                    }
                    for rr in 0..mr {
                        if rr != r {
                            let f = tab[rr][e];
                            if f != 0.0 {
                                for c in 0..total {
                                    tab[rr][c] -= f * tab[r][c];
                                }
                            }
                        }
                    }
                }
            }
        }
        for (v, &j) in free.iter().enumerate() {
            x[j] = if at_upper[v] { 1.0 } else { 0.0 };
        }
        for r in 0..mr {
            if basis[r] < nf {
                x[free[basis[r]]] = value[r].clamp(0.0, 1.0);
            }
        }
    } else if nf > 0 {
        // Only zero-limit rows remain and they were handled above.
        for &j in &free {
            x[j] = 1.0;
        }
    }
    let objective_value = x.iter().zip(objective).map(|(a, c)| a * c).sum();
    Ok(LpSolution { x, objective: objective_value, pivots })
}
