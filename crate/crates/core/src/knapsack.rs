//! 0/1 selection problems `max sum_{l in I} v_l  s.t.  sum_{l in I} chi_l <= s`
//! shared by the weighted-sparsity norm, best block approximation and the
//! condition checker.

/// Items may be selected when their total weight is within this slack of the
/// budget.
pub(crate) fn budget_slack(capacity: f64) -> f64 {
    1e-12 * capacity.abs().max(1.0)
}

/// Largest branch-and-bound instance solved exactly.
pub(crate) const BNB_MAX_ITEMS: usize = 25;
const DP_MAX_CAPACITY: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Selection {
    pub value: f64,
    pub chosen: Vec<usize>,
    pub exact: bool,
}

/// Integer representation of the weights when every weight is (within
/// `1e-9`) a positive integer.
pub(crate) fn integer_weights(weights: &[f64]) -> Option<Vec<u64>> {
    weights
        .iter()
        .map(|&w| {
            let r = w.round();
            if r >= 1.0 && (w - r).abs() <= 1e-9 && r <= DP_MAX_CAPACITY as f64 {
                Some(r as u64)
            } else {
                None
            }
        })
        .collect()
}

/// Exact maximization when possible: dynamic programming for integer
/// weights, branch and bound for at most [`BNB_MAX_ITEMS`] items. `None`
/// when neither applies.
pub(crate) fn solve_exact(values: &[f64], weights: &[f64], capacity: f64) -> Option<Selection> {
    if let Some(sel) = trivial(values, weights, capacity) {
        return Some(sel);
    }
    if let Some(iw) = integer_weights(weights) {
        let total: u64 = iw.iter().sum();
        let cap = (capacity + budget_slack(capacity)).floor().max(0.0) as u64;
        let cap = cap.min(total);
        if cap <= DP_MAX_CAPACITY {
            return Some(dynamic_program(values, &iw, cap));
        }
    }
    if values.len() <= BNB_MAX_ITEMS {
        return Some(branch_and_bound(values, weights, capacity));
    }
    None
}

/// Ratio-greedy feasible selection; a lower bound on the optimum.
pub(crate) fn greedy(values: &[f64], weights: &[f64], capacity: f64) -> Selection {
    let slack = budget_slack(capacity);
    let mut used = 0.0;
    let mut chosen = Vec::new();
    let mut value = 0.0;
    for l in ratio_order(values, weights) {
        if used + weights[l] <= capacity + slack {
            used += weights[l];
            value += values[l];
            chosen.push(l);
        }
    }
    chosen.sort_unstable();
    Selection {
        value,
        chosen,
        exact: false,
    }
}

/// Continuous relaxation with per-item caps `min(1, floor(s / chi_l))`,
/// solved greedily by ratio. Always an upper bound on the 0/1 optimum.
pub(crate) fn relaxed(values: &[f64], weights: &[f64], capacity: f64) -> f64 {
    if capacity < 0.0 {
        return 0.0;
    }
    let slack = budget_slack(capacity);
    let mut left = capacity;
    let mut total = 0.0;
    for l in ratio_order(values, weights) {
        let cap: f64 = if weights[l] <= capacity + slack { 1.0 } else { 0.0 };
        if cap == 0.0 || left <= 0.0 {
            continue;
        }
        let take = cap.min(left / weights[l]);
        total += take * values[l];
        left -= take * weights[l];
    }
    total
}

fn trivial(values: &[f64], weights: &[f64], capacity: f64) -> Option<Selection> {
    let total: f64 = weights.iter().sum();
    if total <= capacity + budget_slack(capacity) {
        return Some(Selection {
            value: values.iter().sum(),
            chosen: (0..values.len()).collect(),
            exact: true,
        });
    }
    if capacity < 0.0 || values.is_empty() {
        return Some(Selection {
            value: 0.0,
            chosen: Vec::new(),
            exact: true,
        });
    }
    None
}

fn ratio_order(values: &[f64], weights: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = values[a] / weights[a];
        let rb = values[b] / weights[b];
        rb.partial_cmp(&ra)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

fn dynamic_program(values: &[f64], weights: &[u64], capacity: u64) -> Selection {
    let k = values.len();
    let c = capacity as usize;
    // best[i][w]: optimum over the first i items with budget w.
    let mut best = vec![vec![0.0f64; c + 1]; k + 1];
    for i in 0..k {
        let wi = weights[i] as usize;
        for w in 0..=c {
            let skip = best[i][w];
            let take = if wi <= w {
                best[i][w - wi] + values[i]
            } else {
                f64::NEG_INFINITY
            };
            best[i + 1][w] = if take > skip { take } else { skip };
        }
    }
    let mut chosen = Vec::new();
    let mut w = c;
    for i in (0..k).rev() {
        if best[i + 1][w] != best[i][w] {
            chosen.push(i);
            w -= weights[i] as usize;
        }
    }
    chosen.reverse();
    Selection {
        value: best[k][c],
        chosen,
        exact: true,
    }
}

fn branch_and_bound(values: &[f64], weights: &[f64], capacity: f64) -> Selection {
    let order = ratio_order(values, weights);
    let slack = budget_slack(capacity);
    let v: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let w: Vec<f64> = order.iter().map(|&i| weights[i]).collect();

    struct Search<'a> {
        v: &'a [f64],
        w: &'a [f64],
        slack: f64,
        best: f64,
        best_set: Vec<bool>,
        current: Vec<bool>,
    }

    impl Search<'_> {
        fn bound(&self, i: usize, left: f64, value: f64) -> f64 {
            let mut left = left;
            let mut b = value;
            for j in i..self.v.len() {
                if left <= 0.0 {
                    break;
                }
                if self.w[j] <= left + self.slack {
                    b += self.v[j];
                    left -= self.w[j];
                } else {
                    b += self.v[j] * left / self.w[j];
                    break;
                }
            }
            b
        }

        fn run(&mut self, i: usize, left: f64, value: f64) {
            if value > self.best {
                self.best = value;
                self.best_set.clone_from(&self.current);
            }
            if i == self.v.len() || self.bound(i, left, value) <= self.best {
                return;
            }
            if self.w[i] <= left + self.slack {
                self.current[i] = true;
                self.run(i + 1, left - self.w[i], value + self.v[i]);
                self.current[i] = false;
            }
            self.run(i + 1, left, value);
        }
    }

    let mut search = Search {
        v: &v,
        w: &w,
        slack,
        best: 0.0,
        best_set: vec![false; v.len()],
        current: vec![false; v.len()],
    };
    search.run(0, capacity, 0.0);
    let mut chosen: Vec<usize> = search
        .best_set
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(j, _)| order[j])
        .collect();
    chosen.sort_unstable();
    Selection {
        value: search.best,
        chosen,
        exact: true,
    }
}
