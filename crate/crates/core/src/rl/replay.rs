use rand::Rng;

use crate::error::{Error, Result};

/// One interaction: `(s, a, s′, r, y)` with `y = 1` at episode end.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: f64,
    pub next_state: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

/// Fixed-capacity FIFO transition store. States live in flat arrays so that a
/// long run keeps no per-transition heap allocations.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    dim: usize,
    states: Vec<f64>,
    next_states: Vec<f64>,
    actions: Vec<f64>,
    rewards: Vec<f64>,
    dones: Vec<bool>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer capacity must be positive");
        Self {
            capacity,
            dim: 0,
            states: Vec::new(),
            next_states: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            dones: Vec::new(),
            next: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    /// State dimension, fixed by the first push.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Appends, overwriting the oldest entry once full. Every transition must
    /// have the state dimension of the first one.
    pub fn push(&mut self, t: Transition) -> Result<()> {
        if self.is_empty() {
            self.dim = t.state.len();
            let n = self.capacity * self.dim;
            self.states.reserve_exact(n);
            self.next_states.reserve_exact(n);
            self.actions.reserve_exact(self.capacity);
            self.rewards.reserve_exact(self.capacity);
            self.dones.reserve_exact(self.capacity);
        }
        for len in [t.state.len(), t.next_state.len()] {
            if len != self.dim {
                return Err(Error::LengthMismatch {
                    expected: self.dim,
                    got: len,
                });
            }
        }
        if self.len() < self.capacity {
            self.states.extend_from_slice(&t.state);
            self.next_states.extend_from_slice(&t.next_state);
            self.actions.push(t.action);
            self.rewards.push(t.reward);
            self.dones.push(t.done);
        } else {
            let i = self.next;
            let span = i * self.dim..(i + 1) * self.dim;
            self.states[span.clone()].copy_from_slice(&t.state);
            self.next_states[span].copy_from_slice(&t.next_state);
            self.actions[i] = t.action;
            self.rewards[i] = t.reward;
            self.dones[i] = t.done;
        }
        self.next = (self.next + 1) % self.capacity;
        Ok(())
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn next_state(&self, i: usize) -> &[f64] {
        &self.next_states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn action(&self, i: usize) -> f64 {
        self.actions[i]
    }

    pub fn reward(&self, i: usize) -> f64 {
        self.rewards[i]
    }

    pub fn done(&self, i: usize) -> bool {
        self.dones[i]
    }

    /// Copy of the transition in slot `i`.
    pub fn get(&self, i: usize) -> Transition {
        Transition {
            state: self.state(i).to_vec(),
            action: self.actions[i],
            next_state: self.next_state(i).to_vec(),
            reward: self.rewards[i],
            done: self.dones[i],
        }
    }

    /// Slot indices drawn uniformly with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<usize> {
        (0..batch).map(|_| rng.random_range(0..self.len())).collect()
    }

    /// Transitions from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = Transition> + '_ {
        let split = if self.len() < self.capacity { 0 } else { self.next };
        (split..self.len()).chain(0..split).map(|i| self.get(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tr(r: f64) -> Transition {
        Transition {
            state: vec![r],
            action: 0.0,
            next_state: vec![r],
            reward: r,
            done: false,
        }
    }

    #[test]
    fn fifo_eviction() {
        let mut b = ReplayBuffer::new(3);
        for i in 0..5 {
            b.push(tr(i as f64)).unwrap();
        }
        let rewards: Vec<f64> = b.iter().map(|t| t.reward).collect();
        assert_eq!(rewards, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn rejects_dimension_change() {
        let mut b = ReplayBuffer::new(4);
        b.push(tr(1.0)).unwrap();
        let mut t = tr(2.0);
        t.state.push(0.0);
        assert!(b.push(t).is_err());
        assert_eq!(b.len(), 1);
    }

    #[test]
    fn sampling_is_reproducible() {
        let mut b = ReplayBuffer::new(100);
        for i in 0..50 {
            b.push(tr(i as f64)).unwrap();
        }
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            b.sample(16, &mut rng).iter().map(|&i| b.reward(i)).collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    proptest! {
        #[test]
        fn never_exceeds_capacity(cap in 1usize..20, pushes in 0usize..100) {
            let mut b = ReplayBuffer::new(cap);
            for i in 0..pushes {
                b.push(tr(i as f64)).unwrap();
                prop_assert!(b.len() <= cap);
            }
            prop_assert_eq!(b.len(), pushes.min(cap));
            let newest: Vec<f64> = b.iter().map(|t| t.reward).collect();
            let expected: Vec<f64> = (pushes.saturating_sub(cap)..pushes).map(|i| i as f64).collect();
            prop_assert_eq!(newest, expected);
        }
    }
}
