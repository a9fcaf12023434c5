use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Fixed-capacity ring buffer with a seeded uniform sampler.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    items: Vec<T>,
    next: usize,
    rng: ChaCha8Rng,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize, seed: u64) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            items: Vec::with_capacity(capacity.min(4096)),
            next: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Overwrites the oldest entry once full.
    pub fn push(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[self.next] = item;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Distinct indices, uniform over the stored entries.
    pub fn sample_indices(&mut self, batch: usize) -> Result<Vec<usize>> {
        if batch == 0 || batch > self.items.len() {
            return Err(Error::Argument(format!(
                "cannot sample {batch} from a buffer holding {}",
                self.items.len()
            )));
        }
        Ok(sample(&mut self.rng, self.items.len(), batch).into_vec())
    }

    pub fn sample(&mut self, batch: usize) -> Result<Vec<&T>> {
        let idx = self.sample_indices(batch)?;
        Ok(idx.into_iter().map(|i| &self.items[i]).collect())
    }

    pub fn get(&self, index: usize) -> Option<&T> {
        self.items.get(index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_never_exceeds_capacity() {
        let mut buf = ReplayBuffer::new(3, 0);
        for i in 0..10 {
            buf.push(i);
            assert!(buf.len() <= 3);
        }
        let mut held: Vec<i32> = (0..3).map(|i| *buf.get(i).unwrap()).collect();
        held.sort_unstable();
        assert_eq!(held, vec![7, 8, 9]);
    }

    #[test]
    fn sample_requires_enough_items() {
        let mut buf = ReplayBuffer::new(5, 0);
        buf.push(1);
        assert!(buf.sample(2).is_err());
        assert_eq!(buf.sample(1).unwrap(), vec![&1]);
    }

    #[test]
    fn batch_has_no_duplicates() {
        let mut buf = ReplayBuffer::new(10, 3);
        (0..10).for_each(|i| buf.push(i));
        for _ in 0..100 {
            let mut idx = buf.sample_indices(6).unwrap();
            idx.sort_unstable();
            idx.dedup();
            assert_eq!(idx.len(), 6);
        }
    }

    #[test]
    fn sampling_is_uniform_chi_square() {
        let mut buf = ReplayBuffer::new(10, 11);
        (0..10).for_each(|i| buf.push(i));
        let mut counts = [0f64; 10];
        let draws = 100_000;
        for _ in 0..draws {
            counts[*buf.sample(1).unwrap()[0]] += 1.0;
        }
        let expected = draws as f64 / 10.0;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        // 99.9th percentile of chi-square with 9 degrees of freedom
        assert!(chi2 < 27.88, "chi2 = {chi2}");
    }
}
