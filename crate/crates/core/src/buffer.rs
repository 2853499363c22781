//! Bounded FIFO store of learner transitions.

use std::collections::VecDeque;

use rand::Rng;

use crate::env::{ObservedTransition, SimRng, Trajectory};
use crate::error::{Error, Result};

pub const DEFAULT_CAPACITY: usize = 200_000;

#[derive(Clone, Debug)]
pub struct RolloutBuffer {
    storage: VecDeque<ObservedTransition>,
    capacity: usize,
    insert_count: u64,
}

impl RolloutBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidArgument("buffer capacity must be positive".into()));
        }
        Ok(RolloutBuffer { storage: VecDeque::with_capacity(capacity.min(1 << 16)), capacity, insert_count: 0 })
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Total transitions ever inserted, evicted ones included.
    pub fn insert_count(&self) -> u64 {
        self.insert_count
    }

    pub fn push_transitions<I: IntoIterator<Item = ObservedTransition>>(&mut self, transitions: I) {
        for t in transitions {
            if self.storage.len() == self.capacity {
                self.storage.pop_front();
            }
            self.storage.push_back(t);
            self.insert_count += 1;
        }
    }

    /// Appends a trajectory with its rewards stripped.
    pub fn push(&mut self, trajectory: &Trajectory) {
        self.push_transitions(trajectory.transitions.iter().map(|t| t.observed()));
    }

    /// Uniform sampling with replacement.
    pub fn sample(&self, batch_size: usize, rng: &mut SimRng) -> Result<Vec<ObservedTransition>> {
        sample_uniform(self.storage.as_slices(), batch_size, rng)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ObservedTransition> {
        self.storage.iter()
    }
}

fn sample_uniform(
    (head, tail): (&[ObservedTransition], &[ObservedTransition]),
    batch_size: usize,
    rng: &mut SimRng,
) -> Result<Vec<ObservedTransition>> {
    let len = head.len() + tail.len();
    if len == 0 {
        return Err(Error::Empty("rollout buffer"));
    }
    if batch_size == 0 {
        return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
    }
    Ok((0..batch_size)
        .map(|_| {
            let i = rng.random_range(0..len);
            if i < head.len() {
                head[i]
            } else {
                tail[i - head.len()]
            }
        })
        .collect())
}

/// Uniform sampling with replacement from a plain slice (expert data).
pub fn sample_slice(data: &[ObservedTransition], batch_size: usize, rng: &mut SimRng) -> Result<Vec<ObservedTransition>> {
    sample_uniform((data, &[]), batch_size, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Action, State, Transition};
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn trajectory(ids: std::ops::Range<usize>) -> Trajectory {
        Trajectory {
            transitions: ids
                .map(|i| Transition {
                    state: State::Cell(i),
                    action: Action::Discrete(0),
                    next_state: State::Cell(i + 1),
                    done: false,
                    true_reward: 0.5,
                })
                .collect(),
            seed: 0,
        }
    }

    #[test]
    fn fifo_eviction() {
        let mut b = RolloutBuffer::new(3).unwrap();
        b.push(&trajectory(0..5));
        let cells: Vec<_> = b.iter().map(|t| t.state.cell().unwrap()).collect();
        assert_eq!(cells, vec![2, 3, 4]);
    }

    #[test]
    fn empty_push_and_counter() {
        let mut b = RolloutBuffer::new(5).unwrap();
        b.push(&trajectory(0..0));
        assert_eq!(b.len(), 0);
        b.push(&trajectory(0..10));
        b.push(&trajectory(0..7));
        assert_eq!(b.insert_count(), 17);
        assert_eq!(b.len(), 5);
    }

    #[test]
    fn single_element_sampling() {
        let mut b = RolloutBuffer::new(5).unwrap();
        b.push(&trajectory(3..4));
        let batch = b.sample(4, &mut SimRng::seed_from_u64(0)).unwrap();
        assert_eq!(batch.len(), 4);
        assert!(batch.iter().all(|t| t.state == State::Cell(3)));
    }

    #[test]
    fn sampling_is_seeded_and_checked() {
        let mut b = RolloutBuffer::new(50).unwrap();
        assert!(matches!(b.sample(1, &mut SimRng::seed_from_u64(0)), Err(Error::Empty(_))));
        b.push(&trajectory(0..30));
        let x = b.sample(16, &mut SimRng::seed_from_u64(9)).unwrap();
        let y = b.sample(16, &mut SimRng::seed_from_u64(9)).unwrap();
        assert_eq!(x, y);
        assert!(b.sample(0, &mut SimRng::seed_from_u64(0)).is_err());
        assert!(RolloutBuffer::new(0).is_err());
    }

    proptest! {
        #[test]
        fn size_never_exceeds_capacity(cap in 1usize..20, ops in proptest::collection::vec((0usize..12, any::<bool>()), 1..40)) {
            let mut b = RolloutBuffer::new(cap).unwrap();
            let mut rng = SimRng::seed_from_u64(1);
            let mut total = 0u64;
            for (len, sample) in ops {
                b.push(&trajectory(0..len));
                total += len as u64;
                prop_assert!(b.len() <= cap);
                if sample && !b.is_empty() {
                    let before: Vec<_> = b.iter().copied().collect();
                    b.sample(8, &mut rng).unwrap();
                    let after: Vec<_> = b.iter().copied().collect();
                    prop_assert_eq!(before, after);
                }
            }
            prop_assert_eq!(b.insert_count(), total);
        }
    }
}
