//! Sparse LU factorization of simplex basis matrices.
//!
//! Left-looking (Gilbert–Peierls style) factorization. Columns are
//! processed in ascending-sparsity order and pivots use threshold partial
//! pivoting with a sparsest-row tie-break, which keeps fill-in tolerable
//! on large bases while staying numerically safe. The factors are stored
//! column-wise so FTRAN/BTRAN are a pair of sparse triangular solves over
//! a dense work array.

/// Column-major sparse matrix slice: each column is a list of (row, value).
pub type SparseCol = Vec<(usize, f64)>;

/// Accept a pivot within this factor of the column's maximum.
const PIVOT_THRESHOLD: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct LuFactors {
    m: usize,
    /// Pivot row of each factorization step.
    pivot_row: Vec<usize>,
    /// Position of each row in the pivot order (inverse of `pivot_row`).
    row_pos: Vec<usize>,
    /// Basis slot factorized at each step (column preordering).
    slot_of_step: Vec<usize>,
    /// Below-diagonal L entries per step, keyed by original row index.
    l_cols: Vec<Vec<(usize, f64)>>,
    /// Above-diagonal U entries per step, keyed by the earlier step index.
    u_cols: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
}

#[derive(Debug)]
pub enum LuError {
    Singular { step: usize },
}

impl LuFactors {
    /// Factorize the m x m matrix whose k-th column is `cols[k]`.
    pub fn factorize(m: usize, cols: &[&SparseCol]) -> Result<LuFactors, LuError> {
        assert_eq!(cols.len(), m);
        // Columns in ascending sparsity; static row degrees for tie-breaks.
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&j| (cols[j].len(), j));
        let mut row_degree = vec![0usize; m];
        for col in cols {
            for &(r, _) in col.iter() {
                row_degree[r] += 1;
            }
        }

        let mut lu = LuFactors {
            m,
            pivot_row: Vec::with_capacity(m),
            row_pos: vec![usize::MAX; m],
            slot_of_step: order.clone(),
            l_cols: Vec::with_capacity(m),
            u_cols: Vec::with_capacity(m),
            diag: Vec::with_capacity(m),
        };
        let mut work = vec![0.0_f64; m];
        let mut reach: Vec<usize> = Vec::new();
        let mut update_steps: Vec<usize> = Vec::new();
        let mut stack: Vec<(usize, usize)> = Vec::new();
        let mut visited = vec![u32::MAX; m];

        for (k, &slot) in order.iter().enumerate() {
            let col = cols[slot];
            reach.clear();
            update_steps.clear();
            let stamp = k as u32;
            for &(r0, _) in col {
                if visited[r0] == stamp {
                    continue;
                }
                visited[r0] = stamp;
                reach.push(r0);
                stack.push((r0, 0));
                while let Some(top) = stack.last_mut() {
                    let row = top.0;
                    let step = lu.row_pos[row];
                    if step == usize::MAX {
                        stack.pop();
                        continue;
                    }
                    let lcol = &lu.l_cols[step];
                    if top.1 < lcol.len() {
                        let child = lcol[top.1].0;
                        top.1 += 1;
                        if visited[child] != stamp {
                            visited[child] = stamp;
                            reach.push(child);
                            stack.push((child, 0));
                        }
                    } else {
                        stack.pop();
                        update_steps.push(step);
                    }
                }
            }
            for &(r, v) in col {
                work[r] = v;
            }
            for &step in update_steps.iter().rev() {
                let t = work[lu.pivot_row[step]];
                if t != 0.0 {
                    for &(r, v) in &lu.l_cols[step] {
                        work[r] -= v * t;
                    }
                }
            }

            // Threshold pivoting: among candidates within PIVOT_THRESHOLD
            // of the column max, prefer the sparsest row.
            let mut max_abs = 0.0_f64;
            for &r in &reach {
                if lu.row_pos[r] == usize::MAX {
                    max_abs = max_abs.max(work[r].abs());
                }
            }
            let col_scale = col
                .iter()
                .map(|&(_, v)| v.abs())
                .fold(1.0_f64, f64::max);
            if max_abs <= 1e-11 * col_scale {
                for &r in &reach {
                    work[r] = 0.0;
                }
                return Err(LuError::Singular { step: k });
            }
            let mut best_row = usize::MAX;
            let mut best_key = (usize::MAX, usize::MAX);
            for &r in &reach {
                if lu.row_pos[r] == usize::MAX && work[r].abs() >= PIVOT_THRESHOLD * max_abs {
                    let key = (row_degree[r], r);
                    if key < best_key {
                        best_key = key;
                        best_row = r;
                    }
                }
            }
            let piv = work[best_row];

            let mut ucol: Vec<(usize, f64)> = Vec::new();
            let mut lcol: Vec<(usize, f64)> = Vec::new();
            for &r in &reach {
                let v = work[r];
                work[r] = 0.0;
                if v == 0.0 {
                    continue;
                }
                let pos = lu.row_pos[r];
                if pos != usize::MAX {
                    ucol.push((pos, v));
                } else if r != best_row {
                    let lv = v / piv;
                    if lv.abs() > 1e-14 {
                        lcol.push((r, lv));
                    }
                }
            }
            ucol.sort_unstable_by_key(|&(p, _)| p);
            lcol.sort_unstable_by_key(|&(r, _)| r);

            lu.row_pos[best_row] = k;
            lu.pivot_row.push(best_row);
            lu.l_cols.push(lcol);
            lu.u_cols.push(ucol);
            lu.diag.push(piv);
        }
        Ok(lu)
    }

    /// Solve B x = b. `work` holds b scattered by row on entry and is
    /// fully zeroed on exit; the solution is written to `out`, indexed by
    /// basis slot. Both slices must have length m.
    pub fn ftran(&self, work: &mut [f64], out: &mut [f64]) {
        for k in 0..self.m {
            let t = work[self.pivot_row[k]];
            if t != 0.0 {
                for &(r, v) in &self.l_cols[k] {
                    work[r] -= v * t;
                }
            }
        }
        for k in (0..self.m).rev() {
            let pr = self.pivot_row[k];
            let x = work[pr] / self.diag[k];
            out[self.slot_of_step[k]] = x;
            work[pr] = 0.0;
            if x != 0.0 {
                for &(j, v) in &self.u_cols[k] {
                    work[self.pivot_row[j]] -= v * x;
                }
            }
        }
    }

    /// Solve B^T y = c. `c` is indexed by basis slot; the result is written
    /// to `out`, indexed by row. `out` and `scratch` are fully overwritten.
    pub fn btran(&self, c: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        for k in 0..self.m {
            let mut t = c[self.slot_of_step[k]];
            for &(j, v) in &self.u_cols[k] {
                t -= v * scratch[j];
            }
            scratch[k] = t / self.diag[k];
        }
        for k in 0..self.m {
            out[self.pivot_row[k]] = scratch[k];
        }
        for k in (0..self.m).rev() {
            let mut t = out[self.pivot_row[k]];
            for &(r, v) in &self.l_cols[k] {
                t -= v * out[r];
            }
            out[self.pivot_row[k]] = t;
        }
    }

    /// Total entries stored in the factors (fill diagnostic).
    pub fn fill(&self) -> usize {
        self.l_cols.iter().map(|c| c.len()).sum::<usize>()
            + self.u_cols.iter().map(|c| c.len()).sum::<usize>()
            + self.m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_mul(m: usize, cols: &[SparseCol], x: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; m];
        for (j, col) in cols.iter().enumerate() {
            for &(i, v) in col {
                r[i] += v * x[j];
            }
        }
        r
    }

    fn dense_mul_t(m: usize, cols: &[SparseCol], y: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; m];
        for (j, col) in cols.iter().enumerate() {
            for &(i, v) in col {
                r[j] += v * y[i];
            }
        }
        r
    }

    #[test]
    fn factorize_and_solve_small() {
        let cols: Vec<SparseCol> = vec![
            vec![(0, 2.0), (2, 1.0)],
            vec![(0, 1.0), (1, 3.0)],
            vec![(1, 1.0), (2, 4.0)],
        ];
        let refs: Vec<&SparseCol> = cols.iter().collect();
        let lu = LuFactors::factorize(3, &refs).unwrap();

        let b = vec![5.0, -1.0, 2.0];
        let mut work = b.clone();
        let mut x = vec![0.0; 3];
        lu.ftran(&mut work, &mut x);
        assert!(work.iter().all(|&w| w == 0.0));
        let bx = dense_mul(3, &cols, &x);
        for i in 0..3 {
            assert!((bx[i] - b[i]).abs() < 1e-12, "B x != b at {i}");
        }

        let c = vec![1.0, 2.0, -3.0];
        let mut y = vec![0.0; 3];
        let mut scratch = vec![0.0; 3];
        lu.btran(&c, &mut y, &mut scratch);
        let bty = dense_mul_t(3, &cols, &y);
        for i in 0..3 {
            assert!((bty[i] - c[i]).abs() < 1e-12, "B^T y != c at {i}");
        }
    }

    #[test]
    fn detects_singular() {
        let cols: Vec<SparseCol> = vec![vec![(0, 1.0), (1, 1.0)], vec![(0, 2.0), (1, 2.0)]];
        let refs: Vec<&SparseCol> = cols.iter().collect();
        assert!(LuFactors::factorize(2, &refs).is_err());
    }

    #[test]
    fn random_matrices_roundtrip() {
        let mut state = 0x12345678_u64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 33) as f64 / (1u64 << 31) as f64
        };
        for m in [1usize, 2, 5, 17, 40, 120] {
            let mut cols: Vec<SparseCol> = Vec::new();
            for j in 0..m {
                let mut col: SparseCol = vec![(j, 1.0 + next())];
                for i in 0..m {
                    if i != j && next() < 0.2 {
                        col.push((i, next() * 2.0 - 1.0));
                    }
                }
                col.sort_unstable_by_key(|&(i, _)| i);
                cols.push(col);
            }
            let refs: Vec<&SparseCol> = cols.iter().collect();
            let lu = match LuFactors::factorize(m, &refs) {
                Ok(lu) => lu,
                Err(_) => continue,
            };
            let b: Vec<f64> = (0..m).map(|_| next() * 10.0 - 5.0).collect();
            let mut work = b.clone();
            let mut x = vec![0.0; m];
            lu.ftran(&mut work, &mut x);
            let bx = dense_mul(m, &cols, &x);
            for i in 0..m {
                assert!((bx[i] - b[i]).abs() < 1e-7, "m={m} ftran residual at {i}");
            }
            let c: Vec<f64> = (0..m).map(|_| next() * 4.0 - 2.0).collect();
            let mut y = vec![0.0; m];
            let mut scratch = vec![0.0; m];
            lu.btran(&c, &mut y, &mut scratch);
            let bty = dense_mul_t(m, &cols, &y);
            for i in 0..m {
                assert!((bty[i] - c[i]).abs() < 1e-7, "m={m} btran residual at {i}");
            }
        }
    }
}
