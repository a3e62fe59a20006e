//! Small grid helpers shared by experiments and the CLI.

use crate::error::{Error, Result};

/// n points from a to b inclusive, uniformly spaced.
pub fn linspace(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(b > a) {
        return Err(Error::invalid("linspace needs n >= 2 and b > a"));
    }
    Ok((0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect())
}

/// n points from a to b inclusive, geometrically spaced (a, b > 0).
pub fn geomspace(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(a > 0.0) || !(b > a) {
        return Err(Error::invalid("geomspace needs n >= 2 and b > a > 0"));
    }
    let la = a.ln();
    let lb = b.ln();
    let mut g: Vec<f64> = (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect();
    g[0] = a;
    g[n - 1] = b;
    Ok(g)
}
