use rand::Rng;

use super::HarnessError;

/// One environment step as stored: raw rewards, episode flags.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub next_obs: Vec<f64>,
    pub r: f64,
    pub r_c: f64,
    pub terminal: bool,
    pub timeout: bool,
}

impl Transition {
    pub fn done(&self) -> bool {
        self.terminal || self.timeout
    }
}

/// Fixed-capacity ring with FIFO eviction and uniform sampling.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    /// Next slot to overwrite once full.
    cursor: usize,
    /// Total pushes ever made; logical index of the next push.
    pushed: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            cursor: 0,
            pushed: 0,
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

    pub fn pushed(&self) -> u64 {
        self.pushed
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        self.pushed += 1;
    }

    pub fn extend<I: IntoIterator<Item = Transition>>(&mut self, batch: I) {
        for t in batch {
            self.push(t);
        }
    }

    /// Oldest logical index still held.
    fn oldest(&self) -> u64 {
        self.pushed - self.items.len() as u64
    }

    /// Transition by logical push index, if still held.
    pub fn by_logical(&self, logical: u64) -> Option<&Transition> {
        if logical < self.oldest() || logical >= self.pushed {
            return None;
        }
        Some(&self.items[(logical % self.capacity as u64) as usize])
    }

    /// Uniformly drawn logical indices, with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<u64>, HarnessError> {
        if self.items.is_empty() {
            return Err(HarnessError::EmptyBuffer);
        }
        let base = self.oldest();
        let len = self.items.len() as u64;
        Ok((0..n).map(|_| base + rng.random_range(0..len)).collect())
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<&Transition>, HarnessError> {
        Ok(self
            .sample_indices(n, rng)?
            .into_iter()
            .map(|i| self.by_logical(i).expect("index drawn from held range"))
            .collect())
    }

    /// Held transitions from oldest to newest.
    pub fn iter_ordered(&self) -> impl Iterator<Item = &Transition> {
        let start = if self.items.len() < self.capacity { 0 } else { self.cursor };
        let n = self.items.len();
        (0..n).map(move |k| &self.items[(start + k) % n])
    }

    /// Rebuilds a buffer from ordered contents and its push counter.
    pub fn from_ordered(capacity: usize, items: Vec<Transition>, pushed: u64) -> Result<Self, HarnessError> {
        if items.len() > capacity || (items.len() as u64) > pushed {
            return Err(HarnessError::Checkpoint("replay contents exceed capacity".into()));
        }
        let mut buf = Self::new(capacity);
        let skipped = pushed - items.len() as u64;
        buf.pushed = skipped;
        buf.cursor = (skipped % capacity as u64) as usize;
        if items.len() == capacity {
            // Place every item at its logical slot.
            let mut slots = vec![None; capacity];
            for (k, t) in items.into_iter().enumerate() {
                slots[((skipped + k as u64) % capacity as u64) as usize] = Some(t);
            }
            buf.items = slots.into_iter().map(|s| s.expect("full ring")).collect();
            buf.pushed = pushed;
            buf.cursor = (pushed % capacity as u64) as usize;
        } else {
            if skipped != 0 {
                return Err(HarnessError::Checkpoint("partial ring with evictions".into()));
            }
            buf.extend(items);
        }
        Ok(buf)
    }
}
