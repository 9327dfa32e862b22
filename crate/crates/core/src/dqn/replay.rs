use rand::Rng;

use super::{DqnError, Transition};

/// Binary sum tree over a fixed number of leaves.
#[derive(Debug, Clone)]
struct SumTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    fn new(capacity: usize) -> Self {
        let leaves = capacity.next_power_of_two();
        Self { leaves, nodes: vec![0.0; 2 * leaves] }
    }

    fn set(&mut self, i: usize, value: f64) {
        let mut at = i + self.leaves;
        self.nodes[at] = value;
        while at > 1 {
            at /= 2;
            self.nodes[at] = self.nodes[2 * at] + self.nodes[2 * at + 1];
        }
    }

    fn get(&self, i: usize) -> f64 {
        self.nodes[i + self.leaves]
    }

    fn total(&self) -> f64 {
        self.nodes[1]
    }

    /// Leaf whose cumulative interval contains `mass`.
    fn find(&self, mut mass: f64) -> usize {
        let mut at = 1;
        while at < self.leaves {
            let left = self.nodes[2 * at];
            if mass < left {
                at *= 2;
            } else {
                mass -= left;
                at = 2 * at + 1;
            }
        }
        at - self.leaves
    }
}

/// A prioritized sample.
#[derive(Debug, Clone)]
pub struct Sample {
    pub indices: Vec<usize>,
    pub transitions: Vec<Transition>,
    /// Importance-sampling weights, normalised so the largest is 1.
    pub weights: Vec<f64>,
}

/// Ring buffer with proportional prioritisation: item `i` is drawn with
/// probability `p_i^alpha / sum_j p_j^alpha`.
#[derive(Debug, Clone)]
pub struct PrioritizedReplayBuffer {
    capacity: usize,
    alpha: f64,
    epsilon: f64,
    items: Vec<Transition>,
    next: usize,
    tree: SumTree,
    max_priority: f64,
}

impl PrioritizedReplayBuffer {
    pub fn new(capacity: usize, alpha: f64) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            alpha,
            epsilon: 1e-6,
            items: Vec::new(),
            next: 0,
            tree: SumTree::new(capacity),
            max_priority: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Stores `t` with the largest priority seen so far, overwriting the
    /// oldest item once full.
    pub fn push(&mut self, t: Transition) {
        let slot = self.next;
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[slot] = t;
        }
        self.tree.set(slot, self.max_priority.powf(self.alpha));
        self.next = (slot + 1) % self.capacity;
    }

    /// Items from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.items.len() < self.capacity { 0 } else { self.next };
        self.items[split..].iter().chain(&self.items[..split])
    }

    pub fn priority(&self, i: usize) -> f64 {
        self.tree.get(i).powf(1.0 / self.alpha)
    }

    /// Sets the raw priority of slot `i`; floored at the priority epsilon.
    pub fn set_priority(&mut self, i: usize, priority: f64) {
        assert!(i < self.items.len(), "slot {i} is empty");
        let p = priority.max(self.epsilon);
        self.max_priority = self.max_priority.max(p);
        self.tree.set(i, p.powf(self.alpha));
    }

    /// Refreshes priorities to `|td| + epsilon`.
    pub fn update_priorities(&mut self, indices: &[usize], td_errors: &[f64]) {
        for (&i, &td) in indices.iter().zip(td_errors) {
            self.set_priority(i, td.abs() + self.epsilon);
        }
    }

    /// Draws `batch_size` independent indices. Weights are
    /// `(N * P(i))^-beta` divided by the largest weight in the batch.
    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, beta: f64, rng: &mut R) -> Result<Sample, DqnError> {
        if batch_size == 0 || self.items.len() < batch_size {
            return Err(DqnError::Underfull { have: self.items.len(), need: batch_size.max(1) });
        }
        let total = self.tree.total();
        let n = self.items.len() as f64;
        let mut indices = Vec::with_capacity(batch_size);
        let mut weights = Vec::with_capacity(batch_size);
        for _ in 0..batch_size {
            let mass = rng.gen::<f64>() * total;
            let i = self.tree.find(mass).min(self.items.len() - 1);
            let prob = self.tree.get(i) / total;
            indices.push(i);
            weights.push((n * prob).powf(-beta));
        }
        let max_w = weights.iter().cloned().fold(f64::MIN, f64::max);
        weights.iter_mut().for_each(|w| *w /= max_w);
        let transitions = indices.iter().map(|&i| self.items[i].clone()).collect();
        Ok(Sample { indices, transitions, weights })
    }
}
