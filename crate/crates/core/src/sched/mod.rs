//! Schedulers: tree schedules for uniform and partition matroids, coloring
//! compositions for graphic and laminar matroids, the exact period-`T`
//! pipeline for arbitrary matroids, and the general-set-system schedulers.

pub mod color;
pub mod exact;
pub mod fun;
pub mod general;
