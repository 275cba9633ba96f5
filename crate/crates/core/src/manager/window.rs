use std::collections::VecDeque;

use crate::model::Query;

/// The last `capacity` queries, oldest first.
#[derive(Clone, Debug)]
pub struct SlidingWindow {
    capacity: usize,
    buf: VecDeque<Query>,
}

impl SlidingWindow {
    pub fn new(capacity: usize) -> Self {
        SlidingWindow { capacity, buf: VecDeque::with_capacity(capacity + 1) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, query: Query) {
        self.buf.push_back(query);
        while self.buf.len() > self.capacity {
            self.buf.pop_front();
        }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Query> {
        self.buf.iter()
    }

    pub fn to_vec(&self) -> Vec<Query> {
        self.buf.iter().cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifo_eviction() {
        let mut w = SlidingWindow::new(2);
        assert!(w.is_empty());
        for s in 0..3 {
            w.push(Query::new(s, vec![]));
        }
        assert_eq!(w.iter().map(|q| q.seq).collect::<Vec<_>>(), vec![1, 2]);
        let mut z = SlidingWindow::new(0);
        z.push(Query::new(0, vec![]));
        assert_eq!(z.len(), 0);
    }
}
