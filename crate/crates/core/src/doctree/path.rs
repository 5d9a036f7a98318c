use std::collections::btree_set;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A list of 0-based child indices addressing one node from the root.
///
/// The derived ordering is lexicographic with a prefix sorting before its
/// extensions, which is exactly document (pre-)order.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path(Vec<usize>);

impl Path {
    pub fn root() -> Self {
        Path(Vec::new())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    /// Depth below the root; [`Path::is_root`] is the empty case.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, index: usize) -> Path {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(index);
        Path(v)
    }

    pub fn parent(&self) -> Option<Path> {
        self.0.split_last().map(|(_, init)| Path(init.to_vec()))
    }

    /// Last child index, `None` for the root.
    pub fn last(&self) -> Option<usize> {
        self.0.last().copied()
    }

    /// `self` is a (not necessarily proper) prefix of `other`.
    pub fn is_prefix_of(&self, other: &Path) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn is_proper_ancestor_of(&self, other: &Path) -> bool {
        self.0.len() < other.0.len() && self.is_prefix_of(other)
    }

    /// The prefix of length `len`.
    pub fn truncated(&self, len: usize) -> Path {
        Path(self.0[..len.min(self.0.len())].to_vec())
    }

    /// Proper prefixes, nearest first.
    pub fn ancestors(&self) -> impl Iterator<Item = Path> + '_ {
        (0..self.0.len()).rev().map(move |n| Path(self.0[..n].to_vec()))
    }
}

impl From<Vec<usize>> for Path {
    fn from(v: Vec<usize>) -> Self {
        Path(v)
    }
}

impl<const N: usize> From<[usize; N]> for Path {
    fn from(v: [usize; N]) -> Self {
        Path(v.to_vec())
    }
}

impl fmt::Debug for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, idx) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{idx}")?;
        }
        f.write_str("]")
    }
}

/// A finite set of paths, iterated in document order.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PathSet(BTreeSet<Path>);

impl PathSet {
    pub fn new() -> Self {
        PathSet(BTreeSet::new())
    }

    pub fn single(path: Path) -> Self {
        let mut s = PathSet::new();
        s.insert(path);
        s
    }

    pub fn insert(&mut self, path: Path) -> bool {
        self.0.insert(path)
    }

    pub fn contains(&self, path: &Path) -> bool {
        self.0.contains(path)
    }

    pub(crate) fn contains_indices(&self, indices: &[usize]) -> bool {
        // BTreeSet<Path> can only be probed with a &Path
        self.0.contains(&Path(indices.to_vec()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> btree_set::Iter<'_, Path> {
        self.0.iter()
    }

    pub fn first(&self) -> Option<&Path> {
        self.0.first()
    }

    pub fn last(&self) -> Option<&Path> {
        self.0.last()
    }

    pub fn is_subset(&self, other: &PathSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &PathSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn union(&self, other: &PathSet) -> PathSet {
        PathSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn intersection(&self, other: &PathSet) -> PathSet {
        PathSet(self.0.intersection(&other.0).cloned().collect())
    }

    pub fn difference(&self, other: &PathSet) -> PathSet {
        PathSet(self.0.difference(&other.0).cloned().collect())
    }

    /// Whether some member lies strictly below `path`.
    pub fn has_proper_descendant(&self, path: &Path) -> bool {
        use std::ops::Bound::{Excluded, Unbounded};
        // descendants sort immediately after their ancestor
        self.0
            .range((Excluded(path), Unbounded))
            .next()
            .is_some_and(|next| path.is_proper_ancestor_of(next))
    }
}

impl fmt::Debug for PathSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}

impl FromIterator<Path> for PathSet {
    fn from_iter<I: IntoIterator<Item = Path>>(iter: I) -> Self {
        PathSet(iter.into_iter().collect())
    }
}

impl Extend<Path> for PathSet {
    fn extend<I: IntoIterator<Item = Path>>(&mut self, iter: I) {
        self.0.extend(iter)
    }
}

impl IntoIterator for PathSet {
    type Item = Path;
    type IntoIter = btree_set::IntoIter<Path>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a> IntoIterator for &'a PathSet {
    type Item = &'a Path;
    type IntoIter = btree_set::Iter<'a, Path>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_document_order() {
        let mut v = vec![
            Path::from([0, 1]),
            Path::from([0]),
            Path::root(),
            Path::from([0, 0, 5]),
            Path::from([1]),
        ];
        v.sort();
        assert_eq!(
            v,
            vec![
                Path::root(),
                Path::from([0]),
                Path::from([0, 0, 5]),
                Path::from([0, 1]),
                Path::from([1]),
            ]
        );
    }

    #[test]
    fn ancestors_nearest_first() {
        let p = Path::from([2, 0, 1]);
        let a: Vec<Path> = p.ancestors().collect();
        assert_eq!(a, vec![Path::from([2, 0]), Path::from([2]), Path::root()]);
        assert!(Path::root().ancestors().next().is_none());
    }

    #[test]
    fn proper_descendant_probe() {
        let s: PathSet = [Path::from([0]), Path::from([0, 1, 2]), Path::from([1])]
            .into_iter()
            .collect();
        assert!(s.has_proper_descendant(&Path::from([0])));
        assert!(s.has_proper_descendant(&Path::from([0, 1])));
        assert!(!s.has_proper_descendant(&Path::from([0, 1, 2])));
        assert!(!s.has_proper_descendant(&Path::from([1])));
        assert!(s.has_proper_descendant(&Path::root()));
    }

    #[test]
    fn display() {
        assert_eq!(Path::from([0, 0, 1, 0]).to_string(), "[0,0,1,0]");
        assert_eq!(Path::root().to_string(), "[]");
    }
}
