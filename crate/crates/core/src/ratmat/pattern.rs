use std::fmt;

/// Boolean mask of entries allowed to be nonzero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsityPattern {
    rows: usize,
    cols: usize,
    mask: Vec<bool>,
}

impl SparsityPattern {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut mask = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                mask.push(f(i, j));
            }
        }
        SparsityPattern { rows, cols, mask }
    }

    /// From nested rows; `None` if the rows are ragged.
    pub fn from_rows(rows: &[Vec<bool>]) -> Option<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return None;
        }
        Some(Self::from_fn(rows.len(), cols, |i, j| rows[i][j]))
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| true)
    }

    /// Everything forced to zero.
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| false)
    }

    pub fn diagonal(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| i == j)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.cols + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<bool>> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn with_diagonal(&self, value: bool) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| if i == j { value } else { self.get(i, j) })
    }

    /// Every allowed entry of `self` is allowed in `other`.
    pub fn is_subset_of(&self, other: &SparsityPattern) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for SparsityPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let line: String = (0..self.cols).map(|j| if self.get(i, j) { '*' } else { '.' }).collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_toggles() {
        let p = SparsityPattern::from_rows(&[vec![true, true], vec![false, true]]).unwrap();
        let y = p.with_diagonal(false);
        assert!(!y.get(0, 0) && y.get(0, 1) && !y.get(1, 1));
        assert_eq!(y.with_diagonal(true), p);
        assert!(y.is_subset_of(&p));
        assert!(SparsityPattern::from_rows(&[vec![true], vec![]]).is_none());
    }
}
