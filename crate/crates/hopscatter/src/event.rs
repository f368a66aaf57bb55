//! Time-ordered event queue with deterministic tie-breaking.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Processing order among events scheduled for the same instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Priority {
    Announce,
    EdgeWake,
    DownlinkSend,
    DownlinkArrive,
    ExcitationStart,
    BackscatterEmit,
    ReceiverDecode,
}

struct Entry<E> {
    time_ns: u64,
    priority: Priority,
    seq: u64,
    event: E,
}

impl<E> Entry<E> {
    fn key(&self) -> (u64, Priority, u64) {
        (self.time_ns, self.priority, self.seq)
    }
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    // Reversed so the max-heap pops the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key().cmp(&self.key())
    }
}

/// Pops events by time, then priority, then insertion order.
pub struct EventQueue<E> {
    heap: BinaryHeap<Entry<E>>,
    next_seq: u64,
    now_ns: u64,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            next_seq: 0,
            now_ns: 0,
        }
    }

    /// Time of the last popped event.
    pub fn now_ns(&self) -> u64 {
        self.now_ns
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Schedules `event`. Times in the past are clamped to now.
    pub fn push(&mut self, time_ns: u64, priority: Priority, event: E) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry {
            time_ns: time_ns.max(self.now_ns),
            priority,
            seq,
            event,
        });
    }

    pub fn pop(&mut self) -> Option<(u64, Priority, E)> {
        let e = self.heap.pop()?;
        self.now_ns = e.time_ns;
        Some((e.time_ns, e.priority, e.event))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_by_time_priority_then_insertion() {
        let mut q = EventQueue::new();
        q.push(10, Priority::ReceiverDecode, "late decode");
        q.push(5, Priority::ExcitationStart, "excite");
        q.push(5, Priority::DownlinkArrive, "arrive");
        q.push(5, Priority::ExcitationStart, "excite again");
        q.push(1, Priority::ReceiverDecode, "early");
        let order: Vec<_> = std::iter::from_fn(|| q.pop().map(|(_, _, e)| e)).collect();
        assert_eq!(
            order,
            ["early", "arrive", "excite", "excite again", "late decode"]
        );
    }

    #[test]
    fn never_goes_back_in_time() {
        let mut q = EventQueue::new();
        q.push(100, Priority::Announce, 1);
        q.pop();
        q.push(50, Priority::Announce, 2);
        assert_eq!(q.pop().unwrap().0, 100);
    }
}
