use crate::error::{Error, Result};

/// Arithmetic mean and standard error of the mean (sample std with n-1
/// denominator, divided by √n). A single value has SEM 0.
pub fn aggregate(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_checked_values() {
        assert_eq!(aggregate(&[1.0, 1.0, 1.0]).unwrap(), (1.0, 0.0));
        let (m, s) = aggregate(&[0.0, 1.0]).unwrap();
        assert_eq!(m, 0.5);
        // sample std √½ over √2
        assert!((s - 0.5).abs() < 1e-15);
        let (m, s) = aggregate(&[-1.0, 1.0]).unwrap();
        assert_eq!(m, 0.0);
        assert!((s - 1.0).abs() < 1e-15);
        assert_eq!(aggregate(&[]), Err(Error::EmptyInput));
    }
}
