//! Drives the same study pipeline as the `resmin run` command: CSV table,
//! SVG convergence plot and JSON metadata per degree.

use std::path::PathBuf;

use resmin::cli::{self, ConfigOverrides};

pub fn run_example_in(out: PathBuf, levels: usize) -> resmin::Result<Vec<PathBuf>> {
    let cfg = cli::parse_config_text("benchmark = lshape\ndegrees = 1, 2\nplots = true\n")?;
    let cfg = cli::parse_config(
        None,
        ConfigOverrides {
            levels: Some(levels),
            out_dir: Some(out.clone()),
            ..cfg
        },
    )?;
    cli::run(&cfg)?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(&out)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    files.sort();
    Ok(files)
}

pub fn run_example() -> resmin::Result<Vec<PathBuf>> {
    let out = std::env::temp_dir().join(format!("resmin-study-{}", std::process::id()));
    let files = run_example_in(out.clone(), 4);
    std::fs::remove_dir_all(&out)?;
    files
}

fn main() -> resmin::Result<()> {
    for f in run_example_in(PathBuf::from("study"), 10)? {
        println!("wrote {}", f.display());
    }
    Ok(())
}
