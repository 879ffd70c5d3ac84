//! Legacy ASCII VTK export, one file per time sample.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use tpflow::Field;

/// The body of one `STRUCTURED_POINTS` file for time sample `t`.
pub fn vtk_slice(field: &Field, name: &str, t: usize) -> String {
    let grid = field.grid();
    let n = grid.n();
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(out, "{name} t={t} time={:.17e}", t as f64 * grid.dt());
    out.push_str("ASCII\nDATASET STRUCTURED_POINTS\n");
    let _ = writeln!(out, "DIMENSIONS {} {} {}", n[0], n[1], n[2]);
    out.push_str("ORIGIN 0 0 0\n");
    let _ = writeln!(
        out,
        "SPACING {:.17e} {:.17e} {:.17e}",
        grid.spacing(0),
        grid.spacing(1),
        grid.spacing(2)
    );
    let _ = writeln!(out, "POINT_DATA {}", grid.cells());
    if field.ncomp() == 1 {
        let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in field.slice(t, 0) {
            let _ = writeln!(out, "{v:.17e}");
        }
    } else {
        let _ = writeln!(out, "VECTORS {name} double");
        let (a, b, c) = (field.slice(t, 0), field.slice(t, 1), field.slice(t, 2));
        for i in 0..grid.cells() {
            let _ = writeln!(out, "{:.17e} {:.17e} {:.17e}", a[i], b[i], c[i]);
        }
    }
    out
}

/// Writes `<dir>/<prefix>_tNNNN.vtk` for every time sample and returns the paths.
pub fn export_vtk(field: &Field, dir: &Path, prefix: &str) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(field.grid().nt());
    for t in 0..field.grid().nt() {
        let path = dir.join(format!("{prefix}_t{t:04}.vtk"));
        fs::write(&path, vtk_slice(field, prefix, t))?;
        paths.push(path);
    }
    Ok(paths)
}
