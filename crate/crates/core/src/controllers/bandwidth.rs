//! Bandwidth allocation proportional to queuing delay.
//!
//! Every application is guaranteed `min_alloc`; the remaining bandwidth is
//! split in proportion to each application's accumulated queuing delay. When
//! no application has queued at all, the remainder is split equally.
//!
//! Shares are computed in exact rational arithmetic so that they always sum
//! to the total bandwidth.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::{Error, Ps, Result};

/// Bandwidth per application, in GB/s, as exact rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BwPlan(pub Vec<BigRational>);

impl BwPlan {
    pub fn to_gbps(&self) -> Vec<f64> {
        self.0.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn total(&self) -> BigRational {
        self.0.iter().fold(BigRational::zero(), |acc, x| acc + x)
    }
}

/// Exact rational value of an `f64` (panics on non-finite input).
pub fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite bandwidth value")
}

/// Splits `total` among applications with accumulated queuing `delays`.
pub fn allocate_bandwidth(delays: &[Ps], total: &BigRational, min_alloc: &BigRational) -> Result<BwPlan> {
    let cores = BigRational::from_integer(BigInt::from(delays.len()));
    let reserved = min_alloc * &cores;
    if delays.is_empty() || &reserved > total || min_alloc < &BigRational::zero() {
        return Err(Error::InsufficientBandwidth {
            apps: delays.len(),
            total: total.to_string(),
            needed: reserved.to_string(),
        });
    }
    let remaining = total - &reserved;
    let total_delay: u128 = delays.iter().map(|&d| u128::from(d)).sum();
    let plan = if total_delay == 0 {
        let each = &remaining / &cores;
        delays.iter().map(|_| min_alloc + &each).collect()
    } else {
        let denom = BigInt::from(total_delay);
        delays
            .iter()
            .map(|&d| min_alloc + &remaining * BigRational::new(BigInt::from(d), denom.clone()))
            .collect()
    };
    Ok(BwPlan(plan))
}

/// `total / apps` each.
pub fn equal_bandwidth(apps: usize, total_gbps: f64) -> Vec<f64> {
    vec![total_gbps / apps as f64; apps]
}
