//! Mesh generation, conforming refinement and the plain-text mesh format.

use resmin::mesh::{generators, io};

/// Refines the L-shape fan around its corner, writes it, reads it back and
/// returns `(cells, identical)`.
pub fn run_example() -> resmin::Result<(usize, bool)> {
    let mut mesh = generators::lshape_fan()?;
    for _ in 0..4 {
        let corner: Vec<usize> = (0..mesh.num_cells())
            .filter(|&c| mesh.cells()[c].contains(&0))
            .collect();
        mesh = mesh.refine(&corner);
    }
    let path = std::env::temp_dir().join(format!("resmin-mesh-{}.txt", std::process::id()));
    io::write(&mesh, &path)?;
    let back = io::read(&path)?;
    std::fs::remove_file(&path)?;
    let identical = back.vertices() == mesh.vertices()
        && back.cells() == mesh.cells()
        && back.boundary_tags() == mesh.boundary_tags();
    Ok((mesh.num_cells(), identical))
}

fn main() -> resmin::Result<()> {
    let (cells, identical) = run_example()?;
    println!("{cells} cells after four corner refinements; file round trip exact: {identical}");
    let square = generators::unit_square(2)?;
    print!("{}", io::to_string(&square));
    Ok(())
}
