//! Flat storage for per-path random fields on the time grid.
//!
//! All fields are immutable after construction and store `f64` entries in
//! node-major order, so per-node slices across paths are contiguous. A field
//! built with `paths == 1` acts as a path-invariant (deterministic) field:
//! accessors broadcast the single stored path to every requested path index.

/// One vector per path, no time index (terminal values, regression targets).
#[derive(Debug, Clone, PartialEq)]
pub struct PathVectors {
    pub paths: usize,
    pub dim: usize,
    data: Vec<f64>,
}

impl PathVectors {
    pub fn zeros(paths: usize, dim: usize) -> Self {
        Self { paths, dim, data: vec![0.0; paths * dim] }
    }

    pub fn from_fn<F: FnMut(usize, &mut [f64])>(paths: usize, dim: usize, mut f: F) -> Self {
        let mut v = Self::zeros(paths, dim);
        for p in 0..paths {
            f(p, &mut v.data[p * dim..(p + 1) * dim]);
        }
        v
    }

    pub fn from_data(paths: usize, dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), paths * dim);
        Self { paths, dim, data }
    }

    #[inline]
    pub fn get(&self, path: usize) -> &[f64] {
        let p = if self.paths == 1 { 0 } else { path };
        &self.data[p * self.dim..(p + 1) * self.dim]
    }

    #[inline]
    pub fn get_mut(&mut self, path: usize) -> &mut [f64] {
        &mut self.data[path * self.dim..(path + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// A vector-valued process: one `dim`-vector per (node, path).
#[derive(Debug, Clone, PartialEq)]
pub struct StateField {
    pub paths: usize,
    pub nodes: usize,
    pub dim: usize,
    data: Vec<f64>,
}

impl StateField {
    pub fn zeros(paths: usize, nodes: usize, dim: usize) -> Self {
        Self { paths, nodes, dim, data: vec![0.0; paths * nodes * dim] }
    }

    pub fn from_fn<F: FnMut(usize, usize, &mut [f64])>(
        paths: usize,
        nodes: usize,
        dim: usize,
        mut f: F,
    ) -> Self {
        let mut field = Self::zeros(paths, nodes, dim);
        for node in 0..nodes {
            for p in 0..paths {
                let o = (node * paths + p) * dim;
                f(node, p, &mut field.data[o..o + dim]);
            }
        }
        field
    }

    #[inline]
    pub fn get(&self, node: usize, path: usize) -> &[f64] {
        let p = if self.paths == 1 { 0 } else { path };
        let o = (node * self.paths + p) * self.dim;
        &self.data[o..o + self.dim]
    }

    #[inline]
    pub fn get_mut(&mut self, node: usize, path: usize) -> &mut [f64] {
        let o = (node * self.paths + path) * self.dim;
        &mut self.data[o..o + self.dim]
    }

    /// Contiguous slice of all paths at one node.
    pub fn node_slice(&self, node: usize) -> &[f64] {
        let o = node * self.paths * self.dim;
        &self.data[o..o + self.paths * self.dim]
    }

    pub fn node_slice_mut(&mut self, node: usize) -> &mut [f64] {
        let o = node * self.paths * self.dim;
        &mut self.data[o..o + self.paths * self.dim]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Per-path vector at a fixed node.
    pub fn node_vectors(&self, node: usize, paths_out: usize) -> PathVectors {
        PathVectors::from_fn(paths_out, self.dim, |p, out| {
            out.copy_from_slice(self.get(node, p));
        })
    }
}

/// A matrix-valued process: one `rows x cols` matrix per (node, path),
/// row-major entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    pub paths: usize,
    pub nodes: usize,
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl MatrixField {
    pub fn zeros(paths: usize, nodes: usize, rows: usize, cols: usize) -> Self {
        Self { paths, nodes, rows, cols, data: vec![0.0; paths * nodes * rows * cols] }
    }

    #[inline]
    pub fn entry_len(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub fn get(&self, node: usize, path: usize) -> &[f64] {
        let p = if self.paths == 1 { 0 } else { path };
        let o = (node * self.paths + p) * self.entry_len();
        &self.data[o..o + self.entry_len()]
    }

    #[inline]
    pub fn get_mut(&mut self, node: usize, path: usize) -> &mut [f64] {
        let len = self.entry_len();
        let o = (node * self.paths + path) * len;
        &mut self.data[o..o + len]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// A matrix-valued field on the node triangle `{(i, k): i <= k <= N}`
/// (or `i < k <= N` when `strict`), one `rows x cols` matrix per
/// (pair, path).
///
/// Row `i` is the first index (the `t` coordinate), column `k` the second
/// (the `s`/`u` coordinate). Strict fields exclude the diagonal `k == i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularField {
    pub paths: usize,
    /// Number of grid nodes, i.e. `N + 1` for a grid with `N` steps.
    pub node_count: usize,
    pub rows: usize,
    pub cols: usize,
    pub strict: bool,
    row_offsets: Vec<usize>,
    data: Vec<f64>,
}

impl TriangularField {
    pub fn zeros(
        paths: usize,
        node_count: usize,
        rows: usize,
        cols: usize,
        strict: bool,
    ) -> Self {
        let mut row_offsets = Vec::with_capacity(node_count + 1);
        let mut total = 0usize;
        for i in 0..node_count {
            row_offsets.push(total);
            total += Self::row_len_for(node_count, i, strict);
        }
        row_offsets.push(total);
        Self {
            paths,
            node_count,
            rows,
            cols,
            strict,
            row_offsets,
            data: vec![0.0; total * paths * rows * cols],
        }
    }

    fn row_len_for(node_count: usize, i: usize, strict: bool) -> usize {
        let last = node_count - 1;
        let first = if strict { i + 1 } else { i };
        if first > last {
            0
        } else {
            last - first + 1
        }
    }

    /// First stored column index of row `i`.
    #[inline]
    pub fn first_col(&self, i: usize) -> usize {
        if self.strict {
            i + 1
        } else {
            i
        }
    }

    /// Number of stored pairs in row `i`.
    pub fn row_len(&self, i: usize) -> usize {
        Self::row_len_for(self.node_count, i, self.strict)
    }

    /// Total number of stored (i, k) pairs.
    pub fn pair_count(&self) -> usize {
        *self.row_offsets.last().unwrap()
    }

    #[inline]
    pub fn entry_len(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    fn pair_index(&self, i: usize, k: usize) -> usize {
        debug_assert!(k >= self.first_col(i) && k < self.node_count, "pair ({i},{k}) outside domain");
        self.row_offsets[i] + (k - self.first_col(i))
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize, path: usize) -> &[f64] {
        let p = if self.paths == 1 { 0 } else { path };
        let o = (self.pair_index(i, k) * self.paths + p) * self.entry_len();
        &self.data[o..o + self.entry_len()]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, k: usize, path: usize) -> &mut [f64] {
        let len = self.entry_len();
        let o = (self.pair_index(i, k) * self.paths + path) * len;
        &mut self.data[o..o + len]
    }

    /// Contiguous slice of all paths at one pair.
    pub fn pair_slice(&self, i: usize, k: usize) -> &[f64] {
        let len = self.paths * self.entry_len();
        let o = self.pair_index(i, k) * len;
        &self.data[o..o + len]
    }

    pub fn pair_slice_mut(&mut self, i: usize, k: usize) -> &mut [f64] {
        let len = self.paths * self.entry_len();
        let o = self.pair_index(i, k) * len;
        &mut self.data[o..o + len]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.data {
            *v *= factor;
        }
    }

    /// Entry-wise difference; both fields must share shape and domain.
    pub fn difference(&self, other: &Self) -> Self {
        assert_eq!(self.node_count, other.node_count);
        assert_eq!(self.strict, other.strict);
        assert_eq!(self.entry_len(), other.entry_len());
        assert_eq!(self.paths, other.paths);
        let mut out = self.clone();
        for (o, b) in out.data.iter_mut().zip(&other.data) {
            *o -= *b;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangular_domain_bookkeeping() {
        let tri = TriangularField::zeros(3, 5, 1, 1, false);
        // rows 0..4, cols i..=4
        assert_eq!(tri.row_len(0), 5);
        assert_eq!(tri.row_len(4), 1);
        assert_eq!(tri.pair_count(), 15);

        let strict = TriangularField::zeros(3, 5, 1, 1, true);
        assert_eq!(strict.row_len(0), 4);
        assert_eq!(strict.row_len(4), 0);
        assert_eq!(strict.pair_count(), 10);
        assert_eq!(strict.first_col(2), 3);
    }

    #[test]
    fn path_invariant_broadcast() {
        let mut f = StateField::zeros(1, 2, 1);
        f.get_mut(1, 0)[0] = 7.0;
        assert_eq!(f.get(1, 5)[0], 7.0);
    }

    #[test]
    fn triangular_entries_round_trip() {
        let mut tri = TriangularField::zeros(2, 4, 2, 1, true);
        tri.get_mut(1, 3, 1).copy_from_slice(&[1.0, 2.0]);
        assert_eq!(tri.get(1, 3, 1), &[1.0, 2.0]);
        assert_eq!(tri.get(1, 2, 1), &[0.0, 0.0]);
    }
}
