use alloc::collections::VecDeque;

/// FIFO with a hard capacity. A push onto a full queue hands the item back
/// so the producer can stall and retry; nothing is ever dropped.
#[derive(Clone, Debug)]
pub struct BoundedQueue<T> {
    capacity: usize,
    entries: VecDeque<T>,
}

impl<T> BoundedQueue<T> {
    pub fn new(capacity: usize) -> Self {
        BoundedQueue { capacity, entries: VecDeque::with_capacity(capacity) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() >= self.capacity
    }

    pub fn free(&self) -> usize {
        self.capacity.saturating_sub(self.entries.len())
    }

    pub fn try_push(&mut self, item: T) -> Result<(), T> {
        if self.is_full() {
            return Err(item);
        }
        self.entries.push_back(item);
        Ok(())
    }

    /// Put an item back at the head, e.g. after a dequeue that could not
    /// complete.
    pub fn try_push_front(&mut self, item: T) -> Result<(), T> {
        if self.is_full() {
            return Err(item);
        }
        self.entries.push_front(item);
        Ok(())
    }

    pub fn pop(&mut self) -> Option<T> {
        self.entries.pop_front()
    }

    pub fn peek(&self) -> Option<&T> {
        self.entries.front()
    }

    pub fn peek_mut(&mut self) -> Option<&mut T> {
        self.entries.front_mut()
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.entries.iter()
    }
}
