use crate::error::{ensure_dim, invalid, Result};

/// Values of finitely many functions on `m` points; row `k` is function `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionTable {
    m: usize,
    values: Vec<f64>,
}

impl FunctionTable {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if m == 0 {
            return Err(invalid("function table needs at least one function and one point"));
        }
        let mut values = Vec::with_capacity(rows.len() * m);
        for r in &rows {
            ensure_dim(m, r.len())?;
            values.extend_from_slice(r);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("function table has non-finite values"));
        }
        Ok(FunctionTable { m, values })
    }

    /// Number of points.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of functions.
    pub fn len(&self) -> usize {
        self.values.len() / self.m
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.m..(k + 1) * self.m]
    }

    /// Empirical L2 distance `√((1/m) Σ (f(x_i) − g(x_i))²)`.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let s: f64 = self.row(a).iter().zip(self.row(b)).map(|(x, y)| (x - y) * (x - y)).sum();
        (s / self.m as f64).sqrt()
    }
}
