use std::collections::HashSet;

use crate::error::{Error, Result};

use super::StrategySet;

/// Clustering game over strategies identified by `(task, device)`.
///
/// With game order 3, `π(n1, n2, n3)` is the mean score of the three
/// strategies when their tasks are pairwise distinct and their devices are
/// pairwise distinct, otherwise 0. Order 2 applies the same rule to pairs and
/// order 1 pays each strategy its own score.
///
/// Expected payoffs are evaluated in `O(N + M + D)` per step by
/// inclusion-exclusion over the strategies sharing a task or a device, using
/// that a `(task, device)` pair identifies at most one strategy.
#[derive(Debug, Clone)]
pub struct Game {
    task: Vec<usize>,
    device: Vec<usize>,
    score: Vec<f64>,
    by_task: Vec<Vec<usize>>,
    by_device: Vec<Vec<usize>>,
    order: usize,
}

/// Result of one replicator update.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub q: Vec<f64>,
    /// Population payoff before the update.
    pub payoff: f64,
    /// Set when the population payoff is zero and `q` was left unchanged.
    pub stagnated: bool,
}

struct Sums {
    total: f64,
    by_task: Vec<f64>,
    by_device: Vec<f64>,
}

impl Game {
    pub fn new(task: Vec<usize>, device: Vec<usize>, score: Vec<f64>) -> Result<Self> {
        let n = task.len();
        if device.len() != n || score.len() != n {
            return Err(Error::Experiment(
                "strategy vectors differ in length".into(),
            ));
        }
        let mut seen = HashSet::with_capacity(n);
        for k in 0..n {
            if !seen.insert((task[k], device[k])) {
                return Err(Error::Experiment(format!(
                    "duplicate strategy for task {} on device {}",
                    task[k], device[k]
                )));
            }
        }
        let n_tasks = task.iter().max().map_or(0, |&t| t + 1);
        let n_devices = device.iter().max().map_or(0, |&d| d + 1);
        let mut by_task = vec![Vec::new(); n_tasks];
        let mut by_device = vec![Vec::new(); n_devices];
        for k in 0..n {
            by_task[task[k]].push(k);
            by_device[device[k]].push(k);
        }
        Ok(Self {
            task,
            device,
            score,
            by_task,
            by_device,
            order: 3,
        })
    }

    pub fn from_strategies(set: &StrategySet) -> Self {
        Self::new(
            set.strategies.iter().map(|s| s.subtask).collect(),
            set.strategies.iter().map(|s| s.device).collect(),
            set.strategies.iter().map(|s| s.score).collect(),
        )
        .expect("strategy sets hold one strategy per (subtask, device)")
    }

    pub fn with_order(mut self, order: usize) -> Self {
        assert!((1..=3).contains(&order), "game order must be 1, 2 or 3");
        self.order = order;
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.score.len()
    }

    pub fn is_empty(&self) -> bool {
        self.score.is_empty()
    }

    pub fn task(&self, n: usize) -> usize {
        self.task[n]
    }

    pub fn device(&self, n: usize) -> usize {
        self.device[n]
    }

    pub fn score(&self, n: usize) -> f64 {
        self.score[n]
    }

    /// Pairwise-distinct tasks and pairwise-distinct devices.
    pub fn consistent(&self, group: &[usize]) -> bool {
        group.iter().enumerate().all(|(k, &a)| {
            group[k + 1..]
                .iter()
                .all(|&b| self.task[a] != self.task[b] && self.device[a] != self.device[b])
        })
    }

    /// Payoff of the ordered triple under order-3 rules.
    pub fn triple_payoff(&self, n1: usize, n2: usize, n3: usize) -> f64 {
        if self.consistent(&[n1, n2, n3]) {
            (self.score[n1] + self.score[n2] + self.score[n3]) / 3.0
        } else {
            0.0
        }
    }

    /// Size of the largest consistent group of positive-score strategies,
    /// capped at 3. Computed exactly as a maximum bipartite matching between
    /// tasks and devices.
    pub fn effective_order(&self) -> usize {
        let mut owner: Vec<Option<usize>> = vec![None; self.by_device.len()];
        let mut size = 0;
        for t in 0..self.by_task.len() {
            let mut seen = vec![false; self.by_device.len()];
            if self.augment(t, &mut seen, &mut owner) {
                size += 1;
                if size == 3 {
                    break;
                }
            }
        }
        size.max(1)
    }

    fn augment(&self, t: usize, seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &k in &self.by_task[t] {
            let d = self.device[k];
            if self.score[k] <= 0.0 || seen[d] {
                continue;
            }
            seen[d] = true;
            if owner[d].is_none_or(|u| self.augment(u, seen, owner)) {
                owner[d] = Some(t);
                return true;
            }
        }
        false
    }

    fn sums(&self, g: &[f64]) -> Sums {
        let mut by_task = vec![0.0; self.by_task.len()];
        let mut by_device = vec![0.0; self.by_device.len()];
        for (k, &x) in g.iter().enumerate() {
            by_task[self.task[k]] += x;
            by_device[self.device[k]] += x;
        }
        Sums {
            total: g.iter().sum(),
            by_task,
            by_device,
        }
    }

    /// Sum of `g` over the strategies consistent with `n`.
    fn compatible(&self, s: &Sums, g: &[f64], n: usize) -> f64 {
        s.total - s.by_task[self.task[n]] - s.by_device[self.device[n]] + g[n]
    }

    /// `u(θ^n, q, ..., q)` for every strategy `n`.
    pub fn payoffs(&self, q: &[f64]) -> Vec<f64> {
        let n = self.len();
        match self.order {
            1 => self.score.clone(),
            2 => {
                let sq: Vec<f64> = (0..n).map(|k| self.score[k] * q[k]).collect();
                let (qs, ss) = (self.sums(q), self.sums(&sq));
                (0..n)
                    .map(|k| {
                        let u = (self.score[k] * self.compatible(&qs, q, k)
                            + self.compatible(&ss, &sq, k))
                            / 2.0;
                        u.max(0.0)
                    })
                    .collect()
            }
            _ => {
                let sq: Vec<f64> = (0..n).map(|k| self.score[k] * q[k]).collect();
                let f_q = self.pair_mass(q, q);
                let f_sq = self.pair_mass(q, &sq);
                (0..n)
                    .map(|k| ((self.score[k] * f_q[k] + 2.0 * f_sq[k]) / 3.0).max(0.0))
                    .collect()
            }
        }
    }

    /// For every `n`: `Σ a[n2]·q[n3]` over ordered pairs `(n2, n3)` such that
    /// `{n, n2, n3}` is consistent.
    fn pair_mass(&self, q: &[f64], a: &[f64]) -> Vec<f64> {
        let n = self.len();
        let qs = self.sums(q);
        let as_ = self.sums(a);
        // L[k]: q-mass sharing a task or a device with k.
        let la: Vec<f64> = (0..n)
            .map(|k| a[k] * (qs.by_task[self.task[k]] + qs.by_device[self.device[k]] - q[k]))
            .collect();
        let las = self.sums(&la);
        // Strategies that share k's task on n2's device, or n2's task on k's
        // device, were subtracted twice through L; add them back. The sums
        // over k's task (device) are shared by every strategy on it.
        let cross_t: Vec<f64> = (0..n)
            .map(|m| q[m] * (as_.by_device[self.device[m]] - a[m]))
            .collect();
        let cross_d: Vec<f64> = (0..n)
            .map(|m| q[m] * (as_.by_task[self.task[m]] - a[m]))
            .collect();
        let (ct, cd) = (self.sums(&cross_t), self.sums(&cross_d));
        (0..n)
            .map(|k| {
                let compat_q = self.compatible(&qs, q, k);
                compat_q * self.compatible(&as_, a, k) - self.compatible(&las, &la, k)
                    + (ct.by_task[self.task[k]] - cross_t[k])
                    + (cd.by_device[self.device[k]] - cross_d[k])
            })
            .collect()
    }

    /// `u(q, ..., q)`.
    pub fn population_payoff(&self, q: &[f64]) -> f64 {
        self.payoffs(q).iter().zip(q).map(|(u, x)| u * x).sum()
    }
}

pub fn barycenter(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// `q'_n = q_n·u(θ^n, q, q) / u(q, q, q)`.
pub fn replicator_step(game: &Game, q: &[f64]) -> Step {
    let u = game.payoffs(q);
    let payoff: f64 = u.iter().zip(q).map(|(a, b)| a * b).sum();
    if payoff.is_nan() || payoff <= 0.0 {
        return Step {
            q: q.to_vec(),
            payoff,
            stagnated: true,
        };
    }
    let mut next: Vec<f64> = q
        .iter()
        .zip(&u)
        .map(|(x, y)| (x * y / payoff).max(0.0))
        .collect();
    let total: f64 = next.iter().sum();
    next.iter_mut().for_each(|x| *x /= total);
    Step {
        q: next,
        payoff,
        stagnated: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct `O(N^3)` evaluation of the order-3 expected payoffs.
    fn dense_payoffs(g: &Game, q: &[f64]) -> Vec<f64> {
        let n = g.len();
        (0..n)
            .map(|a| {
                let mut u = 0.0;
                for b in 0..n {
                    for c in 0..n {
                        u += g.triple_payoff(a, b, c) * q[b] * q[c];
                    }
                }
                u
            })
            .collect()
    }

    fn dense_pair_payoffs(g: &Game, q: &[f64]) -> Vec<f64> {
        let n = g.len();
        (0..n)
            .map(|a| {
                (0..n)
                    .filter(|&b| g.consistent(&[a, b]))
                    .map(|b| (g.score(a) + g.score(b)) / 2.0 * q[b])
                    .sum()
            })
            .collect()
    }

    fn arb_game() -> impl Strategy<Value = (Game, Vec<f64>)> {
        (1usize..6, 1usize..9).prop_flat_map(|(tasks, devices)| {
            let cells =
                prop::collection::vec((any::<bool>(), 0.01f64..1.0, 0.0f64..1.0), tasks * devices);
            cells.prop_filter_map("need a strategy", move |cells| {
                let (mut t, mut d, mut s, mut q) = (vec![], vec![], vec![], vec![]);
                for (k, &(on, score, w)) in cells.iter().enumerate() {
                    if on {
                        t.push(k / devices);
                        d.push(k % devices);
                        s.push(score);
                        q.push(w + 1e-3);
                    }
                }
                if t.is_empty() {
                    return None;
                }
                let total: f64 = q.iter().sum();
                q.iter_mut().for_each(|x| *x /= total);
                Some((Game::new(t, d, s).unwrap(), q))
            })
        })
    }

    #[test]
    fn payoff_examples() {
        // strategies: (task, device)
        let g = Game::new(vec![0, 0, 1, 2], vec![0, 1, 2, 3], vec![0.9, 0.5, 0.6, 0.3]).unwrap();
        assert_eq!(g.triple_payoff(0, 1, 2), 0.0);
        assert!((g.triple_payoff(0, 2, 3) - 0.6).abs() < 1e-15);
        let g = Game::new(vec![0, 1, 2], vec![0, 0, 1], vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(g.triple_payoff(0, 1, 2), 0.0);
    }

    #[test]
    fn fewer_than_three_strategies_pay_nothing() {
        let g = Game::new(vec![0, 1], vec![0, 1], vec![0.7, 0.8]).unwrap();
        assert_eq!(g.population_payoff(&barycenter(2)), 0.0);
        assert!(replicator_step(&g, &barycenter(2)).stagnated);
        assert_eq!(g.effective_order(), 2);
        let single = Game::new(vec![0], vec![0], vec![0.4]).unwrap();
        assert_eq!(single.effective_order(), 1);
    }

    #[test]
    fn two_devices_cap_order_at_two() {
        // Four strategies over three tasks but only two devices: no
        // consistent triple exists.
        let g = Game::new(
            vec![0, 1, 1, 2],
            vec![0, 0, 1, 0],
            vec![0.03, 0.03, 0.5, 0.03],
        )
        .unwrap();
        assert_eq!(g.effective_order(), 2);
        assert!(
            g.clone()
                .with_order(3)
                .population_payoff(&barycenter(4))
                .abs()
                < 1e-12
        );
    }

    fn brute_order(g: &Game) -> usize {
        let live: Vec<usize> = (0..g.len()).filter(|&k| g.score(k) > 0.0).collect();
        for &a in &live {
            for &b in &live {
                for &c in &live {
                    if g.consistent(&[a, b, c]) {
                        return 3;
                    }
                }
            }
        }
        let pair = live
            .iter()
            .any(|&a| live.iter().any(|&b| g.consistent(&[a, b])));
        if pair {
            2
        } else {
            1
        }
    }

    #[test]
    fn duplicate_pairs_rejected() {
        assert!(Game::new(vec![0, 0], vec![1, 1], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn constant_payoff_is_fixed_point() {
        // three tasks, three devices, one strategy each: every ordered
        // permutation pays the same.
        let g = Game::new(vec![0, 1, 2], vec![0, 1, 2], vec![0.4, 0.4, 0.4]).unwrap();
        let q = barycenter(3);
        let step = replicator_step(&g, &q);
        for (a, b) in step.q.iter().zip(&q) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn dominant_strategy_takes_over() {
        // Two strategies; only those triples involving strategy 0 pay, at
        // order 1 that means strategy 0 alone scores.
        let g = Game::new(vec![0, 1], vec![0, 1], vec![1.0, 0.0])
            .unwrap()
            .with_order(1);
        let mut q = vec![0.5, 0.5];
        for _ in 0..50 {
            q = replicator_step(&g, &q).q;
        }
        assert!(q[0] > 1.0 - 1e-12);
    }

    #[test]
    fn pure_state_is_fixed_point() {
        let g = Game::new(vec![0, 1, 2, 0], vec![0, 1, 2, 3], vec![0.5, 0.6, 0.7, 0.8])
            .unwrap()
            .with_order(1);
        let q = vec![0.0, 0.0, 1.0, 0.0];
        assert_eq!(replicator_step(&g, &q).q, q);
    }

    proptest! {
        #[test]
        fn effective_order_matches_enumeration((g, _) in arb_game()) {
            prop_assert_eq!(g.effective_order(), brute_order(&g));
        }

        #[test]
        fn fast_payoffs_match_dense((g, q) in arb_game()) {
            let fast = g.payoffs(&q);
            let dense = dense_payoffs(&g, &q);
            for (a, b) in fast.iter().zip(&dense) {
                prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
            let g2 = g.clone().with_order(2);
            for (a, b) in g2.payoffs(&q).iter().zip(dense_pair_payoffs(&g2, &q)) {
                prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }

        #[test]
        fn replicator_keeps_simplex_and_raises_payoff((g, q) in arb_game()) {
            let mut q = q;
            let mut last = g.population_payoff(&q);
            for _ in 0..200 {
                let step = replicator_step(&g, &q);
                q = step.q;
                prop_assert!((q.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                prop_assert!(q.iter().all(|&x| x >= 0.0));
                let now = g.population_payoff(&q);
                prop_assert!(now >= last - 1e-10, "{now} < {last}");
                last = now;
            }
        }
    }
}
