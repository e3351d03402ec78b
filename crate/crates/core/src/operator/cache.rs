use std::sync::Arc;

use parking_lot::Mutex;

use super::DenseBlock;
use crate::error::{Error, Result};

#[derive(Debug)]
struct Slot {
    rows: usize,
    cols: usize,
    block: Arc<DenseBlock>,
    last_used: u64,
}

#[derive(Debug, Default)]
struct Inner {
    slots: Vec<Slot>,
    bytes: usize,
    clock: u64,
}

/// Least-recently-used store of leading dense sections, bounded in bytes.
/// Blocks are computed outside the lock; a request contained in a cached
/// block is served by copying its leading part.
#[derive(Debug)]
pub struct BlockCache {
    budget: usize,
    inner: Mutex<Inner>,
}

impl BlockCache {
    pub fn new(budget: usize) -> Self {
        BlockCache {
            budget,
            inner: Mutex::new(Inner::default()),
        }
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    /// Bytes currently held.
    pub fn held(&self) -> usize {
        self.inner.lock().bytes
    }

    pub fn len(&self) -> usize {
        self.inner.lock().slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        let mut g = self.inner.lock();
        g.slots.clear();
        g.bytes = 0;
    }

    pub(super) fn get_or_insert(
        &self,
        rows: usize,
        cols: usize,
        compute: impl FnOnce() -> Result<DenseBlock>,
    ) -> Result<Arc<DenseBlock>> {
        let bytes = rows * cols * std::mem::size_of::<num_complex::Complex64>();
        if bytes > self.budget {
            return Err(Error::BudgetExceeded {
                rows,
                cols,
                bytes,
                budget: self.budget,
            });
        }
        let containing = {
            let mut g = self.inner.lock();
            g.clock += 1;
            let now = g.clock;
            let hit = g
                .slots
                .iter_mut()
                .filter(|s| s.rows >= rows && s.cols >= cols)
                .min_by_key(|s| s.rows * s.cols);
            match hit {
                Some(s) => {
                    s.last_used = now;
                    if s.rows == rows && s.cols == cols {
                        return Ok(s.block.clone());
                    }
                    Some(s.block.clone())
                }
                None => None,
            }
        };
        if let Some(big) = containing {
            let rows_idx: Vec<usize> = (0..rows).collect();
            return Ok(Arc::new(big.select_rows(&rows_idx)?.leading_columns(cols)));
        }
        let block = Arc::new(compute()?);
        let mut g = self.inner.lock();
        g.clock += 1;
        let now = g.clock;
        if !g.slots.iter().any(|s| s.rows == rows && s.cols == cols) {
            while g.bytes + bytes > self.budget && !g.slots.is_empty() {
                let (i, _) = g
                    .slots
                    .iter()
                    .enumerate()
                    .min_by_key(|(_, s)| s.last_used)
                    .expect("nonempty");
                let old = g.slots.swap_remove(i);
                g.bytes -= old.block.bytes();
            }
            g.bytes += bytes;
            g.slots.push(Slot {
                rows,
                cols,
                block: block.clone(),
                last_used: now,
            });
        }
        Ok(block)
    }
}
