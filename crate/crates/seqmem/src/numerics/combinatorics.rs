use crate::error::{invalid, Result};

/// `k!!` for odd `k >= -1`, with `(-1)!! = 1`.
pub fn double_factorial(k: i64) -> Result<u128> {
    if k < -1 || k % 2 == 0 {
        return Err(invalid(format!("double factorial needs odd k >= -1, got {k}")));
    }
    let mut acc: u128 = 1;
    let mut j = k;
    while j > 1 {
        acc = acc
            .checked_mul(j as u128)
            .ok_or_else(|| invalid(format!("{k}!! overflows 128 bits")))?;
        j -= 2;
    }
    Ok(acc)
}

/// `ln(k!!)` for odd `k >= -1`.
pub fn ln_double_factorial(k: i64) -> Result<f64> {
    if k < -1 || k % 2 == 0 {
        return Err(invalid(format!("double factorial needs odd k >= -1, got {k}")));
    }
    Ok((1..=k.max(0)).step_by(2).map(|j| (j as f64).ln()).sum())
}

/// `ln C(n, h)` for `h = 0..=n`.
pub fn ln_binomial_row(n: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(n + 1);
    let mut acc = 0.0f64;
    row.push(0.0);
    for h in 1..=n {
        acc += ((n - h + 1) as f64).ln() - (h as f64).ln();
        row.push(acc);
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        assert_eq!(double_factorial(-1).unwrap(), 1);
        assert_eq!(double_factorial(1).unwrap(), 1);
        assert_eq!(double_factorial(5).unwrap(), 15);
        assert_eq!(double_factorial(7).unwrap(), 105);
        assert!(double_factorial(4).is_err());
        assert!(double_factorial(-3).is_err());
        assert!((ln_double_factorial(7).unwrap() - 105f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn binomial_row_matches_pascal() {
        let row = ln_binomial_row(6);
        let exact = [1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0f64];
        for (a, b) in row.iter().zip(exact) {
            assert!((a.exp() - b).abs() < 1e-9);
        }
    }
}
