//! Distance-based channel allocation.
//!
//! Each D2D link reuses the uplink resource block of the CUE *farthest* from
//! its receiver, which keeps the strongest cross-tier interferer (the sharing
//! CUE) as far away as possible. With CUE positions uniform in the cell, the
//! marginal probability of landing in any given group is exactly `1/M`, so
//! each group behaves *on average* like a density `lambda/M` process; the
//! groups are not independent thinnings though, because the rule is spatial
//! (see the crate-level fidelity note).

use crate::geometry::{distance, Point2D};

/// Assignment of every link to one CUE group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationResult {
    /// `assignment[k]` is the CUE index of link `k`.
    pub assignment: Vec<usize>,
    /// Links per CUE; sums to the link count.
    pub group_sizes: Vec<usize>,
}

impl AllocationResult {
    /// Link indices of group `m`.
    pub fn group(&self, m: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &g)| g == m)
            .map(|(k, _)| k)
            .collect()
    }
}

/// Assigns each receiver to the farthest CUE (ties to the lowest CUE index).
/// Runs in `O(M * K)`.
///
/// ```
/// use d2d_underlay::allocation::allocate;
/// use d2d_underlay::geometry::Point2D;
/// let rx = [Point2D::new(0.0, 0.0)];
/// let cues = [Point2D::new(100.0, 0.0), Point2D::new(-200.0, 0.0)];
/// let alloc = allocate(&rx, &cues);
/// assert_eq!(alloc.assignment, vec![1]); // 200 m beats 100 m
/// ```
pub fn allocate(d2d_receivers: &[Point2D], cues: &[Point2D]) -> AllocationResult {
    assert!(!cues.is_empty(), "allocation needs at least one CUE");
    let mut assignment = Vec::with_capacity(d2d_receivers.len());
    let mut group_sizes = vec![0usize; cues.len()];
    for rx in d2d_receivers {
        let mut best = 0usize;
        let mut best_d = distance(*rx, cues[0]);
        for (m, cue) in cues.iter().enumerate().skip(1) {
            let d = distance(*rx, *cue);
            if d > best_d {
                best = m;
                best_d = d;
            }
        }
        assignment.push(best);
        group_sizes[best] += 1;
    }
    AllocationResult {
        assignment,
        group_sizes,
    }
}

/// Per-group density `q * lambda = lambda / M`.
///
/// ```
/// use d2d_underlay::allocation::effective_density;
/// assert_eq!(effective_density(5e-5, 2), 2.5e-5);
/// assert_eq!(effective_density(3e-4, 1), 3e-4);
/// ```
pub fn effective_density(lambda: f64, m: usize) -> f64 {
    assert!(m >= 1 && lambda >= 0.0);
    lambda / m as f64
}
