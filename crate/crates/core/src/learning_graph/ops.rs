//! Ordered partial subsets: length-`k` tuples over `X ∪ {⋆}` whose non-star
//! entries are pairwise distinct.

use std::fmt;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OpsError {
    #[error("element {0} appears twice")]
    Duplicate(u32),
    #[error("no free slot left for {0}")]
    Full(u32),
    #[error("element {0} not present")]
    Missing(u32),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrderedPartialSubset {
    slots: Vec<Option<u32>>,
}

impl OrderedPartialSubset {
    /// All stars.
    pub fn empty(k: usize) -> Self {
        Self { slots: vec![None; k] }
    }

    pub fn from_slots(slots: Vec<Option<u32>>) -> Result<Self, OpsError> {
        let mut seen: Vec<u32> = slots.iter().flatten().copied().collect();
        seen.sort_unstable();
        if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
            return Err(OpsError::Duplicate(w[0]));
        }
        Ok(Self { slots })
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    /// Number of non-star slots.
    pub fn size(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    pub fn is_full(&self) -> bool {
        self.slots.iter().all(Option::is_some)
    }

    pub fn slots(&self) -> &[Option<u32>] {
        &self.slots
    }

    pub fn get(&self, pos: usize) -> Option<u32> {
        self.slots.get(pos).copied().flatten()
    }

    pub fn contains(&self, v: u32) -> bool {
        self.slots.contains(&Some(v))
    }

    pub fn position(&self, v: u32) -> Option<usize> {
        self.slots.iter().position(|s| *s == Some(v))
    }

    /// Elements as a sorted set, ignoring positions.
    pub fn elements(&self) -> Vec<u32> {
        let mut e: Vec<u32> = self.slots.iter().flatten().copied().collect();
        e.sort_unstable();
        e
    }

    /// `A ⊆ B`: every non-star slot of `self` holds the same element in `other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.slots.len() == other.slots.len()
            && self.slots.iter().zip(&other.slots).all(|(a, b)| a.is_none() || a == b)
    }

    /// `A ∪ {v}` filling the lowest-index star.
    pub fn insert(&self, v: u32) -> Result<Self, OpsError> {
        let free = self.slots.iter().position(Option::is_none).ok_or(OpsError::Full(v))?;
        self.insert_at(free, v)
    }

    /// `A ∪ {v}` filling a uniformly random star.
    pub fn insert_random<R: Rng + ?Sized>(&self, v: u32, rng: &mut R) -> Result<Self, OpsError> {
        let free: Vec<usize> = (0..self.slots.len()).filter(|&i| self.slots[i].is_none()).collect();
        if free.is_empty() {
            return Err(OpsError::Full(v));
        }
        self.insert_at(free[rng.gen_range(0..free.len())], v)
    }

    pub fn insert_at(&self, pos: usize, v: u32) -> Result<Self, OpsError> {
        if self.contains(v) {
            return Err(OpsError::Duplicate(v));
        }
        if self.slots.get(pos).is_none_or(Option::is_some) {
            return Err(OpsError::Full(v));
        }
        let mut slots = self.slots.clone();
        slots[pos] = Some(v);
        Ok(Self { slots })
    }

    /// Replaces `v` by a star.
    pub fn remove(&self, v: u32) -> Result<Self, OpsError> {
        let pos = self.position(v).ok_or(OpsError::Missing(v))?;
        let mut slots = self.slots.clone();
        slots[pos] = None;
        Ok(Self { slots })
    }
}

impl fmt::Display for OrderedPartialSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, s) in self.slots.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            match s {
                Some(v) => write!(f, "{v}")?,
                None => f.write_str("*")?,
            }
        }
        f.write_str(")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::stream_rng;

    #[test]
    fn lowest_star_fill() {
        let a = OrderedPartialSubset::from_slots(vec![Some(4), None, None]).unwrap();
        let b = a.insert(7).unwrap();
        assert_eq!(b.slots(), &[Some(4), Some(7), None]);
        assert!(a.is_subset_of(&b));
        assert!(!b.is_subset_of(&a));
        assert_eq!(b.size(), 2);
        assert_eq!(b.to_string(), "(4,7,*)");
        assert_eq!(b.insert(4).unwrap_err(), OpsError::Duplicate(4));
        let full = b.insert(1).unwrap();
        assert!(full.is_full());
        assert_eq!(full.insert(9).unwrap_err(), OpsError::Full(9));
    }

    #[test]
    fn duplicates_only_among_stars() {
        assert!(OrderedPartialSubset::from_slots(vec![None, None]).is_ok());
        assert_eq!(OrderedPartialSubset::from_slots(vec![Some(2), Some(2)]).unwrap_err(), OpsError::Duplicate(2));
    }

    #[test]
    fn random_fill_stays_a_superset() {
        let mut rng = stream_rng(3, 0);
        let mut a = OrderedPartialSubset::empty(5);
        for v in [10, 20, 30] {
            let b = a.insert_random(v, &mut rng).unwrap();
            assert!(a.is_subset_of(&b));
            a = b;
        }
        assert_eq!(a.elements(), vec![10, 20, 30]);
        let back = a.remove(20).unwrap();
        assert!(back.is_subset_of(&a));
        assert_eq!(back.size(), 2);
    }
}
