use core::fmt;

/// Half-open interval `[start, end)` of global word addresses.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct AddressRange {
    pub start: u32,
    pub end: u32,
}

impl fmt::Debug for AddressRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

/// How a task's data range sits relative to a node's local range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RangeRelation {
    /// No overlap: forward the token unchanged.
    Disjoint,
    /// Entirely local (equality included): execute here.
    Subset,
    /// Strictly contains the local range: split three ways.
    Superset,
    /// Overlaps on one side only: split two ways.
    PartialOverlap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RangeError {
    #[error("range start {start} exceeds end {end}")]
    Inverted { start: u32, end: u32 },
    #[error("cannot classify an empty task range {0:?}")]
    EmptyTask(AddressRange),
    #[error("local range {0:?} is empty")]
    EmptyLocal(AddressRange),
}

impl AddressRange {
    pub const EMPTY: AddressRange = AddressRange { start: 0, end: 0 };

    /// Panics if `start > end`; use [`AddressRange::try_new`] for untrusted input.
    pub const fn new(start: u32, end: u32) -> Self {
        assert!(start <= end, "inverted address range");
        AddressRange { start, end }
    }

    pub fn try_new(start: u32, end: u32) -> Result<Self, RangeError> {
        if start > end {
            return Err(RangeError::Inverted { start, end });
        }
        Ok(AddressRange { start, end })
    }

    pub const fn len(&self) -> u32 {
        self.end - self.start
    }

    pub const fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub const fn contains(&self, addr: u32) -> bool {
        self.start <= addr && addr < self.end
    }

    /// `self ⊆ other`. The empty range is a subset of everything.
    pub const fn is_within(&self, other: &AddressRange) -> bool {
        self.is_empty() || (other.start <= self.start && self.end <= other.end)
    }

    pub fn intersect(&self, other: &AddressRange) -> AddressRange {
        let start = self.start.max(other.start);
        let end = self.end.min(other.end);
        if start < end {
            AddressRange { start, end }
        } else {
            AddressRange::EMPTY
        }
    }

    pub fn overlaps(&self, other: &AddressRange) -> bool {
        !self.intersect(other).is_empty()
    }

    pub fn iter(&self) -> core::ops::Range<u32> {
        self.start..self.end
    }
}

/// Classify `task` against `local`.
pub fn range_relation(task: AddressRange, local: AddressRange) -> Result<RangeRelation, RangeError> {
    if task.is_empty() {
        return Err(RangeError::EmptyTask(task));
    }
    if local.is_empty() {
        return Err(RangeError::EmptyLocal(local));
    }
    let rel = if !task.overlaps(&local) {
        RangeRelation::Disjoint
    } else if task.is_within(&local) {
        RangeRelation::Subset
    } else if local.is_within(&task) {
        RangeRelation::Superset
    } else {
        RangeRelation::PartialOverlap
    };
    Ok(rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(s: u32, e: u32) -> AddressRange {
        AddressRange::new(s, e)
    }

    #[test]
    fn classifies_the_four_cases() {
        assert_eq!(range_relation(r(10, 20), r(0, 100)), Ok(RangeRelation::Subset));
        assert_eq!(range_relation(r(0, 400), r(100, 200)), Ok(RangeRelation::Superset));
        assert_eq!(range_relation(r(90, 150), r(100, 200)), Ok(RangeRelation::PartialOverlap));
        assert_eq!(range_relation(r(500, 600), r(100, 200)), Ok(RangeRelation::Disjoint));
    }

    #[test]
    fn boundary_ties() {
        // equality executes locally rather than splitting into empty pieces
        assert_eq!(range_relation(r(100, 200), r(100, 200)), Ok(RangeRelation::Subset));
        assert_eq!(range_relation(r(100, 300), r(100, 200)), Ok(RangeRelation::Superset));
        assert_eq!(range_relation(r(0, 200), r(100, 200)), Ok(RangeRelation::Superset));
        // touching but not overlapping
        assert_eq!(range_relation(r(200, 250), r(100, 200)), Ok(RangeRelation::Disjoint));
        assert_eq!(range_relation(r(50, 100), r(100, 200)), Ok(RangeRelation::Disjoint));
        assert_eq!(range_relation(r(199, 250), r(100, 200)), Ok(RangeRelation::PartialOverlap));
    }

    #[test]
    fn empty_task_is_an_error() {
        assert_eq!(range_relation(r(5, 5), r(0, 10)), Err(RangeError::EmptyTask(r(5, 5))));
        assert!(AddressRange::try_new(3, 2).is_err());
    }

    proptest! {
        #[test]
        fn relation_is_total_and_exclusive(a in 0u32..64, la in 1u32..64, b in 0u32..64, lb in 1u32..64) {
            let task = r(a, a + la);
            let local = r(b, b + lb);
            let rel = range_relation(task, local).unwrap();
            let inter = task.intersect(&local);
            let subset = local.start <= task.start && task.end <= local.end;
            let superset = task.start <= local.start && local.end <= task.end && task != local;
            let expected = if inter.is_empty() {
                RangeRelation::Disjoint
            } else if subset {
                RangeRelation::Subset
            } else if superset {
                RangeRelation::Superset
            } else {
                RangeRelation::PartialOverlap
            };
            prop_assert_eq!(rel, expected);
            prop_assert!(!(subset && superset));
        }
    }
}
