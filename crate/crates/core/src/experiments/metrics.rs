/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// How multi-dimensional errors collapse into one squared error per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorNorm {
    /// Mean over coordinates.
    Mean,
    /// Sum over coordinates (squared Euclidean distance).
    Sum,
}

impl ErrorNorm {
    pub fn name(self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::Sum => "sum",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mean" => Some(Self::Mean),
            "sum" => Some(Self::Sum),
            _ => None,
        }
    }

    pub fn squared_error(self, estimate: &[f64], truth: &[f64]) -> f64 {
        let total: f64 = estimate.iter().zip(truth).map(|(a, b)| (a - b).powi(2)).sum();
        match self {
            Self::Mean => total / truth.len() as f64,
            Self::Sum => total,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value_has_zero_std() {
        assert_eq!(mean_std(&[0.3]), (0.3, 0.0));
    }

    #[test]
    fn sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn error_norms() {
        assert_eq!(ErrorNorm::Sum.squared_error(&[1.0, 2.0], &[0.0, 0.0]), 5.0);
        assert_eq!(ErrorNorm::Mean.squared_error(&[1.0, 2.0], &[0.0, 0.0]), 2.5);
    }
}
