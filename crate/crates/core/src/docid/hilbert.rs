//! Hilbert curve over a `2^order x 2^order` grid.
//!
//! Orientation: `d = 0` at cell (0, 0) and the order-1 curve visits
//! (0,0) -> (0,1) -> (1,1) -> (1,0).

use crate::{Error, Result};

/// Largest order whose distances fit in a `u64`.
pub const MAX_ORDER: u32 = 31;
/// Order used for place-recognition identifiers (2^17 cells per side).
pub const DEFAULT_ORDER: u32 = 17;

fn check_order(order: u32) -> Result<()> {
    if order == 0 || order > MAX_ORDER {
        Err(Error::OutOfRange {
            value: u64::from(order),
            order,
        })
    } else {
        Ok(())
    }
}

#[inline]
fn rotate(n: u64, x: &mut u64, y: &mut u64, rx: u64, ry: u64) {
    if ry == 0 {
        if rx == 1 {
            *x = n - 1 - *x;
            *y = n - 1 - *y;
        }
        core::mem::swap(x, y);
    }
}

/// Distance along the curve of cell `(x, y)`.
pub fn xy_to_d(x: u64, y: u64, order: u32) -> Result<u64> {
    check_order(order)?;
    let n = 1u64 << order;
    if x >= n || y >= n {
        return Err(Error::OutOfRange { value: x.max(y), order });
    }
    let (mut x, mut y) = (x, y);
    let mut d = 0u64;
    let mut s = n >> 1;
    while s > 0 {
        let rx = u64::from(x & s != 0);
        let ry = u64::from(y & s != 0);
        d += s * s * ((3 * rx) ^ ry);
        rotate(n, &mut x, &mut y, rx, ry);
        s >>= 1;
    }
    Ok(d)
}

/// Cell at distance `d` along the curve.
pub fn d_to_xy(d: u64, order: u32) -> Result<(u64, u64)> {
    check_order(order)?;
    let n = 1u64 << order;
    if d > n * n - 1 {
        return Err(Error::OutOfRange { value: d, order });
    }
    let (mut x, mut y) = (0u64, 0u64);
    let mut t = d;
    let mut s = 1u64;
    while s < n {
        let rx = 1 & (t / 2);
        let ry = 1 & (t ^ rx);
        rotate(s, &mut x, &mut y, rx, ry);
        x += s * rx;
        y += s * ry;
        t /= 4;
        s <<= 1;
    }
    Ok((x, y))
}

/// Number of cells, `4^order`.
pub fn cell_count(order: u32) -> Result<u64> {
    check_order(order)?;
    let n = 1u64 << order;
    // 4^31 = 2^62 fits.
    Ok(n * n)
}
