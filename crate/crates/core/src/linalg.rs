//! Small dense linear solves used by the circuit assembly and the implicit
//! integrator. Systems here are tiny (a handful of nodes or states), so a
//! scaled partial-pivot LU is all that is needed.

use crate::error::{CoreError, Result};

/// Solves `a * x = b` in place for a row-major `n x n` matrix. On success
/// `b` holds the solution; `a` is destroyed.
///
/// Rows are implicitly equilibrated when choosing pivots, which keeps the
/// factorization stable when branch conductances span many orders of
/// magnitude (collapsed Starling resistors).
pub fn solve_in_place(a: &mut [f64], b: &mut [f64], n: usize) -> Result<()> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);

    // Per-row scale factors for pivot selection.
    let mut scale = vec![0.0_f64; n];
    for (i, s) in scale.iter_mut().enumerate() {
        let mut big = 0.0_f64;
        for j in 0..n {
            big = big.max(a[i * n + j].abs());
        }
        if big == 0.0 || !big.is_finite() {
            return Err(CoreError::NumericalBlowUp(
                "singular or non-finite row in linear system".into(),
            ));
        }
        *s = 1.0 / big;
    }

    for k in 0..n {
        // Pick the pivot on the scaled column.
        let mut pivot_row = k;
        let mut best = 0.0_f64;
        for i in k..n {
            let m = scale[i] * a[i * n + k].abs();
            if m > best {
                best = m;
                pivot_row = i;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return Err(CoreError::NumericalBlowUp(
                "singular linear system in network solve".into(),
            ));
        }
        if pivot_row != k {
            for j in 0..n {
                a.swap(k * n + j, pivot_row * n + j);
            }
            b.swap(k, pivot_row);
            scale.swap(k, pivot_row);
        }

        let pivot = a[k * n + k];
        for i in (k + 1)..n {
            let factor = a[i * n + k] / pivot;
            if factor != 0.0 {
                for j in (k + 1)..n {
                    a[i * n + j] -= factor * a[k * n + j];
                }
                b[i] -= factor * b[k];
            }
            a[i * n + k] = 0.0;
        }
    }

    // Back substitution.
    for i in (0..n).rev() {
        let mut sum = b[i];
        for j in (i + 1)..n {
            sum -= a[i * n + j] * b[j];
        }
        b[i] = sum / a[i * n + i];
    }

    if b.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::NumericalBlowUp(
            "non-finite solution of linear system".into(),
        ));
    }
    Ok(())
}
