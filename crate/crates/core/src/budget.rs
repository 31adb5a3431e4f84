//! Process-wide memory budget for operator construction.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};

/// Default cap on `d^t`, the row count of any operator on the tensor space.
pub const DEFAULT_MAX_DIM: usize = 65536;
/// Dense matrices are additionally capped; `65536²` complex entries do not fit in memory.
pub const DEFAULT_MAX_DENSE_DIM: usize = 4096;
/// Environment variable mirrored by the CLI's `--budget-dim`.
pub const BUDGET_ENV: &str = "DESIGNLAB_BUDGET_DIM";

static MAX_DIM: AtomicUsize = AtomicUsize::new(0);

/// Current cap on `d^t`. Reads [`BUDGET_ENV`] on first use.
pub fn max_dim() -> usize {
    let v = MAX_DIM.load(Ordering::Relaxed);
    if v != 0 {
        return v;
    }
    let from_env = std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(DEFAULT_MAX_DIM);
    MAX_DIM.store(from_env, Ordering::Relaxed);
    from_env
}

pub fn set_max_dim(dim: usize) {
    MAX_DIM.store(dim.max(1), Ordering::Relaxed);
}

pub fn max_dense_dim() -> usize {
    DEFAULT_MAX_DENSE_DIM.min(max_dim())
}

/// `d^t`, or a budget error if it overflows or exceeds the cap.
pub fn tensor_dim(d: usize, t: usize) -> Result<usize> {
    let budget = max_dim();
    let mut dim: usize = 1;
    for _ in 0..t {
        dim = dim.checked_mul(d).filter(|&v| v <= budget).ok_or_else(|| Error::Budget {
            what: format!("d^t with d={d}, t={t}"),
            needed: d.saturating_pow(t as u32),
            budget,
        })?;
    }
    Ok(dim)
}

pub fn check_dense(dim: usize) -> Result<()> {
    let budget = max_dense_dim();
    if dim > budget {
        return Err(Error::Budget {
            what: "dense operator".into(),
            needed: dim,
            budget,
        });
    }
    Ok(())
}
