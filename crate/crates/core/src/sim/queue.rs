use alloc::collections::BinaryHeap;
use core::cmp::Ordering;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("event at {time} is earlier than the clock ({now})")]
pub struct PastEvent {
    pub time: f64,
    pub now: f64,
}

#[derive(Debug, Clone)]
struct Entry<E> {
    time: f64,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    // Reversed so the max-heap pops the earliest entry.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Pending events ordered by `(time, insertion sequence)`.
#[derive(Debug, Clone)]
pub struct EventQueue<E> {
    heap: BinaryHeap<Entry<E>>,
    next_seq: u64,
    now: f64,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        EventQueue { heap: BinaryHeap::new(), next_seq: 0, now: 0.0 }
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Time of the most recently popped event.
    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Returns the sequence number assigned to the event.
    pub fn schedule(&mut self, time: f64, event: E) -> Result<u64, PastEvent> {
        if time.is_nan() || time < self.now {
            return Err(PastEvent { time, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry { time, seq, event });
        Ok(seq)
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|e| e.time)
    }

    /// Removes the earliest event and advances the clock to it.
    pub fn pop(&mut self) -> Option<(f64, u64, E)> {
        let e = self.heap.pop()?;
        self.now = e.time;
        Some((e.time, e.seq, e.event))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    #[test]
    fn equal_times_pop_in_insertion_order() {
        let mut q = EventQueue::new();
        q.schedule(1.0, 'a').unwrap();
        q.schedule(1.0, 'b').unwrap();
        q.schedule(0.5, 'c').unwrap();
        let order: Vec<char> = core::iter::from_fn(|| q.pop().map(|e| e.2)).collect();
        assert_eq!(order, ['c', 'a', 'b']);
    }

    #[test]
    fn event_at_current_time_comes_first() {
        let mut q = EventQueue::new();
        q.schedule(2.0, 1).unwrap();
        q.schedule(3.0, 2).unwrap();
        q.pop();
        q.schedule(2.0, 3).unwrap();
        assert_eq!(q.pop().map(|e| e.2), Some(3));
    }

    #[test]
    fn past_events_rejected() {
        let mut q = EventQueue::new();
        q.schedule(2.0, ()).unwrap();
        q.pop();
        assert_eq!(q.schedule(1.0, ()), Err(PastEvent { time: 1.0, now: 2.0 }));
        assert!(q.schedule(f64::NAN, ()).is_err());
    }

    proptest! {
        #[test]
        fn pops_are_sorted_and_stable(times in proptest::collection::vec(0u8..20, 0..200)) {
            let mut q = EventQueue::new();
            for (i, t) in times.iter().enumerate() {
                q.schedule(f64::from(*t), i).unwrap();
            }
            let mut last: Option<(f64, usize)> = None;
            while let Some((t, _, i)) = q.pop() {
                if let Some((lt, li)) = last {
                    prop_assert!(t > lt || (t == lt && i > li));
                }
                last = Some((t, i));
            }
        }
    }
}
