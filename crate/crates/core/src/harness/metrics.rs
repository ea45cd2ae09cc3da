//! Multiprogram performance metrics.

use crate::{Error, Result};

fn mean_ratio(value: &[f64], baseline: &[f64]) -> Result<f64> {
    if value.len() != baseline.len() || value.is_empty() {
        return Err(Error::MismatchedApps {
            left: value.len(),
            right: baseline.len(),
        });
    }
    if let Some(app) = baseline.iter().position(|&b| !(b > 0.0)) {
        return Err(Error::NonPositiveBaseline { app });
    }
    Ok(value.iter().zip(baseline).map(|(v, b)| v / b).sum::<f64>() / value.len() as f64)
}

/// Mean over applications of `ipc_rm / ipc_base`. Higher is better.
pub fn weighted_speedup(ipc_rm: &[f64], ipc_base: &[f64]) -> Result<f64> {
    mean_ratio(ipc_rm, ipc_base)
}

/// Average normalised turnaround time: mean of `cpi_rm / cpi_base`. Lower is
/// better.
pub fn antt(cpi_rm: &[f64], cpi_base: &[f64]) -> Result<f64> {
    mean_ratio(cpi_rm, cpi_base)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(weighted_speedup(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(weighted_speedup(&[2.0, 0.5], &[1.0, 1.0]).unwrap(), 1.25);
        assert_eq!(weighted_speedup(&[1.2], &[1.0]).unwrap(), 1.2);
        assert_eq!(antt(&[0.5, 1.5], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(antt(&[2.0], &[1.0]).unwrap(), 2.0);
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(weighted_speedup(&[1.0], &[1.0, 1.0]), Err(Error::MismatchedApps { .. })));
        assert!(matches!(antt(&[1.0, 1.0], &[1.0, 0.0]), Err(Error::NonPositiveBaseline { app: 1 })));
        assert!(weighted_speedup(&[], &[]).is_err());
    }
}
