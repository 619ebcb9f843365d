//! Spatial sampling and distance distributions.
//!
//! Deployments are built from two primitives: a homogeneous Poisson point
//! process restricted to a disk (Poisson count, then conditionally uniform
//! placement) and area-uniform points in a disk (inverse-cdf radius
//! `R*sqrt(u)`). Also provides the pairwise-distance pdf between two uniform
//! points in a disk and its farthest-of-two conditional mean, which the
//! closed-form coverage expressions use as the typical CUE-to-receiver
//! distance.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A point in the plane, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const ORIGIN: Point2D = Point2D { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point2D { x, y }
    }
}

/// Euclidean distance.
///
/// ```
/// use d2d_underlay::geometry::{distance, Point2D};
/// assert_eq!(distance(Point2D::new(0.0, 0.0), Point2D::new(3.0, 4.0)), 5.0);
/// ```
pub fn distance(a: Point2D, b: Point2D) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Deterministic pseudo-random stream, constructed from `(seed, index)`.
///
/// Distinct indices of the same seed give statistically independent streams;
/// the same pair reproduces the same draw sequence. One stream must not be
/// shared between concurrent callers.
#[derive(Debug, Clone)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        RngStream(rng)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}

/// One area-uniform point in the disk of `radius` around `center`.
///
/// ```
/// use d2d_underlay::geometry::{distance, sample_uniform_disk, Point2D, RngStream};
/// let mut rng = RngStream::new(42, 0); // (seed, trial index)
/// let p = sample_uniform_disk(Point2D::ORIGIN, 500.0, &mut rng);
/// assert!(distance(p, Point2D::ORIGIN) <= 500.0);
/// ```
pub fn sample_uniform_disk(center: Point2D, radius: f64, rng: &mut RngStream) -> Point2D {
    assert!(radius > 0.0);
    let r = radius * rng.gen::<f64>().sqrt();
    let theta = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
    Point2D::new(center.x + r * theta.cos(), center.y + r * theta.sin())
}

/// Homogeneous PPP of `density` in the disk of `radius` around `center`:
/// Poisson(density * pi * radius^2) count, then i.i.d. uniform placement.
pub fn sample_ppp_disk(
    density: f64,
    radius: f64,
    center: Point2D,
    rng: &mut RngStream,
) -> Vec<Point2D> {
    assert!(density >= 0.0 && radius > 0.0);
    let mean = density * std::f64::consts::PI * radius * radius;
    if mean == 0.0 {
        return Vec::new();
    }
    let count = rng.sample(rand_distr::Poisson::new(mean).expect("finite positive mean"));
    (0..count as usize)
        .map(|_| sample_uniform_disk(center, radius, rng))
        .collect()
}

/// Pdf of the distance between two independent area-uniform points in a disk
/// of radius `R`; supported on `[0, 2R]` and zero outside.
///
/// `f(r) = (2r/R^2) * (2/pi) * (acos(t) - t*sqrt(1-t^2))` with `t = r/(2R)`.
///
/// ```
/// use d2d_underlay::geometry::pdf_pairwise_distance;
/// assert_eq!(pdf_pairwise_distance(0.0, 500.0), 0.0);
/// assert_eq!(pdf_pairwise_distance(1001.0, 500.0), 0.0);
/// ```
pub fn pdf_pairwise_distance(r: f64, big_r: f64) -> f64 {
    assert!(big_r > 0.0);
    if !(0.0..=2.0 * big_r).contains(&r) {
        return 0.0;
    }
    let t = r / (2.0 * big_r);
    let angular = t.acos() - t * (1.0 - t * t).max(0.0).sqrt();
    (2.0 * r / (big_r * big_r)) * (2.0 / std::f64::consts::PI) * angular
}

/// Mean of the *larger* of two i.i.d. pairwise distances, `512 R / (45 pi^2)`.
///
/// This is the typical distance from a D2D receiver to its allocated CUE when
/// the allocation picks the farther of two uniformly placed CUEs.
///
/// ```
/// use d2d_underlay::geometry::conditional_mean_farthest;
/// assert!((conditional_mean_farthest(500.0) - 576.40).abs() < 0.01);
/// ```
pub fn conditional_mean_farthest(big_r: f64) -> f64 {
    assert!(big_r > 0.0);
    512.0 * big_r / (45.0 * std::f64::consts::PI * std::f64::consts::PI)
}

/// Unconditional pairwise mean, `128 R / (45 pi)`.
///
/// ```
/// use d2d_underlay::geometry::mean_pairwise_distance;
/// assert!((mean_pairwise_distance(500.0) - 452.707).abs() < 1e-2);
/// ```
pub fn mean_pairwise_distance(big_r: f64) -> f64 {
    assert!(big_r > 0.0);
    128.0 * big_r / (45.0 * std::f64::consts::PI)
}
