//! Chart-level vector types.

use nalgebra::{Matrix2, Vector2};

/// A point (or tangent vector) in chart coordinates.
pub type Point = Vector2<f64>;

/// A 2x2 tensor in chart coordinates; metric tensors are symmetric.
pub type Tensor = Matrix2<f64>;

/// Counterclockwise rotation by a right angle in the chart.
pub fn rot90(v: Point) -> Point {
    Point::new(-v.y, v.x)
}

/// Euclidean cross product of two chart vectors.
pub fn cross(a: Point, b: Point) -> f64 {
    a.x * b.y - a.y * b.x
}
