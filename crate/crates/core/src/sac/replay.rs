//! Fixed-capacity experience buffer with oldest-first eviction and
//! uniform minibatch sampling.

use super::real::Real;
use ndarray::{Array1, Array2};
use rand::Rng;

/// One environment transition, stored at training precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<R: Real> {
    pub state: Vec<R>,
    pub action: Vec<R>,
    pub reward: R,
    pub next_state: Vec<R>,
    pub done: bool,
}

/// Minibatch in array form, ready for the networks.
#[derive(Debug, Clone)]
pub struct Batch<R: Real> {
    pub states: Array2<R>,
    pub actions: Array2<R>,
    pub rewards: Array1<R>,
    pub next_states: Array2<R>,
    /// 1.0 where the transition ended the episode, else 0.0.
    pub dones: Array1<R>,
}

/// Ring buffer: once full, each push overwrites the oldest transition.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<R: Real> {
    capacity: usize,
    data: Vec<Transition<R>>,
    cursor: usize,
}

impl<R: Real> ReplayBuffer<R> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            data: Vec::new(),
            cursor: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Write position for the next push (needed to checkpoint the ring).
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition<R>> {
        self.data.iter()
    }

    pub fn push(&mut self, t: Transition<R>) {
        if self.data.len() < self.capacity {
            self.data.push(t);
        } else {
            self.data[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    /// Rebuilds the buffer from checkpointed storage.
    pub fn from_parts(capacity: usize, data: Vec<Transition<R>>, cursor: usize) -> Self {
        assert!(data.len() <= capacity && cursor < capacity.max(1));
        ReplayBuffer {
            capacity,
            data,
            cursor,
        }
    }

    /// Uniform sample with replacement; draws exactly `batch` indices from
    /// the RNG, in order, so the consumption pattern is reproducible.
    pub fn sample<G: Rng>(&self, batch: usize, rng: &mut G) -> Batch<R> {
        assert!(!self.data.is_empty(), "cannot sample an empty buffer");
        let n = self.data.len();
        let obs_dim = self.data[0].state.len();
        let act_dim = self.data[0].action.len();
        let mut states = Array2::from_elem((batch, obs_dim), R::zero());
        let mut actions = Array2::from_elem((batch, act_dim), R::zero());
        let mut rewards = Array1::from_elem(batch, R::zero());
        let mut next_states = Array2::from_elem((batch, obs_dim), R::zero());
        let mut dones = Array1::from_elem(batch, R::zero());
        for b in 0..batch {
            let t = &self.data[rng.random_range(0..n)];
            for (dst, &src) in states.row_mut(b).iter_mut().zip(&t.state) {
                *dst = src;
            }
            for (dst, &src) in actions.row_mut(b).iter_mut().zip(&t.action) {
                *dst = src;
            }
            for (dst, &src) in next_states.row_mut(b).iter_mut().zip(&t.next_state) {
                *dst = src;
            }
            rewards[b] = t.reward;
            dones[b] = if t.done { R::one() } else { R::zero() };
        }
        Batch {
            states,
            actions,
            rewards,
            next_states,
            dones,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::seeded_rng;

    fn tr(tag: f64) -> Transition<f64> {
        Transition {
            state: vec![tag, tag + 0.1],
            action: vec![-tag],
            reward: tag * 10.0,
            next_state: vec![tag + 1.0, tag + 1.1],
            done: (tag as usize).is_multiple_of(2),
        }
    }

    #[test]
    fn fills_then_evicts_oldest_first() {
        let mut buf = ReplayBuffer::new(4);
        for k in 0..6 {
            buf.push(tr(k as f64));
        }
        assert_eq!(buf.len(), 4);
        // 0 and 1 were overwritten by 4 and 5; slots hold [4, 5, 2, 3].
        let tags: Vec<f64> = buf.iter().map(|t| t.state[0]).collect();
        assert_eq!(tags, vec![4.0, 5.0, 2.0, 3.0]);
        // Next eviction target is the now-oldest slot (holding 2).
        assert_eq!(buf.cursor(), 2);
        buf.push(tr(6.0));
        let tags: Vec<f64> = buf.iter().map(|t| t.state[0]).collect();
        assert_eq!(tags, vec![4.0, 5.0, 6.0, 3.0]);
    }

    #[test]
    fn sample_has_right_shapes_and_values() {
        let mut buf = ReplayBuffer::new(8);
        for k in 0..5 {
            buf.push(tr(k as f64));
        }
        let mut rng = seeded_rng(1, "replay");
        let batch = buf.sample(3, &mut rng);
        assert_eq!(batch.states.dim(), (3, 2));
        assert_eq!(batch.actions.dim(), (3, 1));
        assert_eq!(batch.next_states.dim(), (3, 2));
        assert_eq!(batch.rewards.len(), 3);
        assert_eq!(batch.dones.len(), 3);
        // Every sampled row must be one of the stored transitions, intact.
        for b in 0..3 {
            let tag = batch.states[(b, 0)];
            assert!((0.0..5.0).contains(&tag));
            assert_eq!(batch.states[(b, 1)], tag + 0.1);
            assert_eq!(batch.actions[(b, 0)], -tag);
            assert_eq!(batch.rewards[b], tag * 10.0);
            assert_eq!(batch.next_states[(b, 0)], tag + 1.0);
            let done_expected = if (tag as usize).is_multiple_of(2) { 1.0 } else { 0.0 };
            assert_eq!(batch.dones[b], done_expected);
        }
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let mut buf = ReplayBuffer::new(16);
        for k in 0..10 {
            buf.push(tr(k as f64));
        }
        let mut r1 = seeded_rng(7, "replay-det");
        let mut r2 = seeded_rng(7, "replay-det");
        let b1 = buf.sample(5, &mut r1);
        let b2 = buf.sample(5, &mut r2);
        assert_eq!(b1.states, b2.states);
        assert_eq!(b1.actions, b2.actions);
    }

    #[test]
    fn round_trips_through_parts() {
        let mut buf = ReplayBuffer::new(4);
        for k in 0..6 {
            buf.push(tr(k as f64));
        }
        let rebuilt = ReplayBuffer::from_parts(
            buf.capacity(),
            buf.iter().cloned().collect(),
            buf.cursor(),
        );
        assert_eq!(rebuilt.cursor(), buf.cursor());
        let a: Vec<f64> = buf.iter().map(|t| t.reward).collect();
        let b: Vec<f64> = rebuilt.iter().map(|t| t.reward).collect();
        assert_eq!(a, b);
    }
}
