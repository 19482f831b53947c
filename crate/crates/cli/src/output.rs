//! Text formatting shared by subcommands.

use std::fs;
use std::path::Path;

use nalgebra::SMatrix;

/// Titled matrix dump, one row per line.
pub fn matrix_block<const R: usize, const C: usize>(title: &str, m: &SMatrix<f64, R, C>) -> String {
    let mut s = format!("{title}:\n");
    for i in 0..R {
        for j in 0..C {
            s.push_str(&format!("{:>14.6e}", m[(i, j)]));
        }
        s.push('\n');
    }
    s
}

pub fn write_or_print(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
