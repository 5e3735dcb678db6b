//! Initial meshes for the benchmark domains.

use super::Mesh;
use crate::{Point, Result};

/// Structured `nx × ny` grid of rectangles on `[x0, x1] × [y0, y1]`, each split
/// along its (x0, y0)–(x1, y1) diagonal. Boundary faces are tagged `bottom`,
/// `right`, `top` and `left`.
pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Result<Mesh> {
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices: Vec<Point> = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            // Snap the last row/column so boundary coordinates are exact.
            let x = if i == nx {
                x1
            } else {
                x0 + (x1 - x0) * i as f64 / nx as f64
            };
            let y = if j == ny {
                y1
            } else {
                y0 + (y1 - y0) * j as f64 / ny as f64
            };
            vertices.push([x, y]);
        }
    }
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            cells.push([a, b, c]);
            cells.push([a, c, d]);
        }
    }
    let mut tags = Vec::new();
    for i in 0..nx {
        tags.push(((idx(i, 0), idx(i + 1, 0)), "bottom"));
        tags.push(((idx(i, ny), idx(i + 1, ny)), "top"));
    }
    for j in 0..ny {
        tags.push(((idx(nx, j), idx(nx, j + 1)), "right"));
        tags.push(((idx(0, j), idx(0, j + 1)), "left"));
    }
    Mesh::new(vertices, cells, tags)
}

pub fn unit_square(n: usize) -> Result<Mesh> {
    rectangle(0.0, 1.0, 0.0, 1.0, n, n)
}

/// Six-triangle fan around the re-entrant corner of (−1,1)² \ (−1,0]².
/// All boundary faces are tagged `boundary`.
pub fn lshape_fan() -> Result<Mesh> {
    let vertices = vec![
        [0.0, 0.0],
        [0.0, -1.0],
        [1.0, -1.0],
        [1.0, 0.0],
        [1.0, 1.0],
        [0.0, 1.0],
        [-1.0, 1.0],
        [-1.0, 0.0],
    ];
    let cells = (1..7).map(|k| [0, k, k + 1]).collect();
    let mut tags: Vec<((usize, usize), &str)> = (1..7).map(|k| ((k, k + 1), "boundary")).collect();
    tags.push(((0, 1), "boundary"));
    tags.push(((0, 7), "boundary"));
    Mesh::new(vertices, cells, tags)
}
