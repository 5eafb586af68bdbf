use crate::error::{Error, Result};

/// Dense row-major `rows × cols` matrix of reals (time along rows).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "grid {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// Keeps only the first `rows` rows.
    pub fn truncate_rows(&mut self, rows: usize) {
        if rows < self.rows {
            self.rows = rows;
            self.data.truncate(rows * self.cols);
        }
    }

    /// Appends zero columns until the grid is `cols` wide.
    pub fn pad_cols(&self, cols: usize) -> Grid {
        if cols <= self.cols {
            return self.clone();
        }
        let mut out = Grid::zeros(self.rows, cols);
        for r in 0..self.rows {
            out.row_mut(r)[..self.cols].copy_from_slice(self.row(r));
        }
        out
    }

    /// Bilinear resize with corner alignment: the first and last rows/columns map onto
    /// each other exactly, so a same-shape resize is the identity.
    pub fn resize_bilinear(&self, rows: usize, cols: usize) -> Result<Grid> {
        if rows == 0 || cols == 0 || self.rows == 0 || self.cols == 0 {
            return Err(Error::invalid("cannot resize an empty grid"));
        }
        if rows == self.rows && cols == self.cols {
            return Ok(self.clone());
        }
        let scale = |n_out: usize, n_in: usize| {
            if n_out > 1 {
                (n_in - 1) as f64 / (n_out - 1) as f64
            } else {
                0.0
            }
        };
        let (sy, sx) = (scale(rows, self.rows), scale(cols, self.cols));
        let mut out = Grid::zeros(rows, cols);
        for r in 0..rows {
            let y = r as f64 * sy;
            let y0 = (y.floor() as usize).min(self.rows - 1);
            let y1 = (y0 + 1).min(self.rows - 1);
            let fy = y - y0 as f64;
            for c in 0..cols {
                let x = c as f64 * sx;
                let x0 = (x.floor() as usize).min(self.cols - 1);
                let x1 = (x0 + 1).min(self.cols - 1);
                let fx = x - x0 as f64;
                let top = self.get(y0, x0) * (1.0 - fx) + self.get(y0, x1) * fx;
                let bottom = self.get(y1, x0) * (1.0 - fx) + self.get(y1, x1) * fx;
                out.data[r * cols + c] = top * (1.0 - fy) + bottom * fy;
            }
        }
        Ok(out)
    }
}
