//! Integer lattice bookkeeping and compensated summation.

use std::ops::AddAssign;

/// Kahan–Babuška–Neumaier accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl AddAssign<f64> for NeumaierSum {
    fn add_assign(&mut self, rhs: f64) {
        let t = self.sum + rhs;
        if self.sum.abs() >= rhs.abs() {
            self.compensation += (self.sum - t) + rhs;
        } else {
            self.compensation += (rhs - t) + self.sum;
        }
        self.sum = t;
    }
}

/// Number of lattice points of `ℤⁿ` with `‖j‖∞ = m`.
pub fn shell_size(dim: usize, m: usize) -> usize {
    if m == 0 {
        1
    } else {
        (2 * m + 1).pow(dim as u32) - (2 * m - 1).pow(dim as u32)
    }
}

/// Calls `visit` for every `j ∈ ℤⁿ` with `‖j‖∞ = m`, in a fixed order.
///
/// The shell is partitioned by the first axis `d` on which `|j_d| = m`:
/// axes before `d` range over `(-m, m)`, axis `d` is `±m`, later axes range
/// over `[-m, m]`.
pub fn for_each_in_shell(dim: usize, m: usize, mut visit: impl FnMut(&[i64])) {
    let m = m as i64;
    let mut j = vec![0i64; dim];
    if m == 0 {
        visit(&j);
        return;
    }
    for d in 0..dim {
        for sign in [-1i64, 1] {
            // odometer over the free axes
            let lo: Vec<i64> = (0..dim)
                .map(|i| if i < d { -(m - 1) } else { -m })
                .collect();
            let hi: Vec<i64> = (0..dim).map(|i| if i < d { m - 1 } else { m }).collect();
            if (0..d).any(|i| lo[i] > hi[i]) {
                continue;
            }
            j.copy_from_slice(&lo);
            j[d] = sign * m;
            loop {
                visit(&j);
                // advance, skipping axis d
                let mut axis = dim;
                let mut carried = true;
                while carried && axis > 0 {
                    axis -= 1;
                    if axis == d {
                        continue;
                    }
                    if j[axis] < hi[axis] {
                        j[axis] += 1;
                        carried = false;
                    } else {
                        j[axis] = lo[axis];
                    }
                }
                if carried {
                    break;
                }
            }
        }
    }
}

/// All nonzero `j` with `‖j‖∞ ≤ radius`, ordered by shell then by
/// [`for_each_in_shell`] order.
pub fn nonzero_points_within(dim: usize, radius: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    for m in 1..=radius {
        for_each_in_shell(dim, m, |j| out.push(j.to_vec()));
    }
    out
}
