use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::fft::FftNd;

/// Spatial operator set attached to a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Fourier differentiation on every axis; no obstacle.
    Spectral,
    /// Second-order centered differences in space (7-point Laplacian),
    /// spectral in time; may carry a voxelized obstacle.
    Exterior,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Spectral => "spectral",
            Backend::Exterior => "exterior",
        }
    }
}

/// A fluid cell touching the body through one of its six faces.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCell {
    pub cell: usize,
    /// Outward unit normal (pointing from the body into the fluid).
    pub normal: [f64; 3],
}

/// Voxelized ball of radius `r_star` plus the annulus radius `r_zero`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleMask {
    pub center: [f64; 3],
    pub r_star: f64,
    pub r_zero: f64,
    pub solid: Vec<bool>,
    pub boundary: Vec<BoundaryCell>,
}

impl ObstacleMask {
    pub fn solid_count(&self) -> usize {
        self.solid.iter().filter(|s| **s).count()
    }
}

/// Cell subsets used by norms and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// Every cell of the box, solid included.
    All,
    /// Every non-solid cell.
    Fluid,
    /// Fluid cells that are not boundary cells (where the equations hold).
    Interior,
    /// Fluid cells with `|x - c| < r_zero` (whole box without obstacle).
    Annulus,
    /// Fluid cells with `|x - c| < rho`.
    Within(f64),
    /// Fluid cells with `|x - c| > rho`.
    Beyond(f64),
}

/// Uniform space-time grid on `[0,T) x [0,L)^3` with periodic wrap on every axis.
///
/// Sample `i` along a spatial axis sits at `x = i * L / n`.
pub struct PeriodicGrid {
    period: f64,
    nt: usize,
    n: [usize; 3],
    box_len: f64,
    backend: Backend,
    obstacle: Option<ObstacleMask>,
    interior: Vec<bool>,
    space_fft: OnceLock<FftNd>,
    full_fft: OnceLock<FftNd>,
}

impl std::fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PeriodicGrid")
            .field("period", &self.period)
            .field("nt", &self.nt)
            .field("n", &self.n)
            .field("box_len", &self.box_len)
            .field("backend", &self.backend)
            .field("obstacle", &self.obstacle.as_ref().map(|o| (o.r_star, o.r_zero)))
            .finish()
    }
}

impl PartialEq for PeriodicGrid {
    fn eq(&self, other: &Self) -> bool {
        self.period == other.period
            && self.nt == other.nt
            && self.n == other.n
            && self.box_len == other.box_len
            && self.backend == other.backend
            && self.obstacle.as_ref().map(|o| (o.r_star, o.r_zero))
                == other.obstacle.as_ref().map(|o| (o.r_star, o.r_zero))
    }
}

impl PeriodicGrid {
    pub fn new(period: f64, nt: usize, n: [usize; 3], box_len: f64, backend: Backend) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidGrid(format!("period must be positive, got {period}")));
        }
        if !(box_len > 0.0 && box_len.is_finite()) {
            return Err(Error::InvalidGrid(format!("box length must be positive, got {box_len}")));
        }
        if nt < 2 || nt % 2 != 0 {
            return Err(Error::InvalidGrid(format!("n_t must be even and >= 2, got {nt}")));
        }
        for (axis, &count) in ["x", "y", "z"].iter().zip(&n) {
            if count < 4 || count % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "n_{axis} must be even and >= 4, got {count}"
                )));
            }
        }
        let cells = n.iter().product();
        Ok(Self {
            period,
            nt,
            n,
            box_len,
            backend,
            obstacle: None,
            interior: vec![true; cells],
            space_fft: OnceLock::new(),
            full_fft: OnceLock::new(),
        })
    }

    pub fn spectral(period: f64, nt: usize, n: [usize; 3], box_len: f64) -> Result<Self> {
        Self::new(period, nt, n, box_len, Backend::Spectral)
    }

    /// Exterior-backend grid with a ball of radius `r_star` at the box center.
    pub fn exterior(
        period: f64,
        nt: usize,
        n: [usize; 3],
        box_len: f64,
        r_star: f64,
        r_zero: f64,
    ) -> Result<Self> {
        let grid = Self::new(period, nt, n, box_len, Backend::Exterior)?;
        grid.with_obstacle(r_star, r_zero)
    }

    fn with_obstacle(mut self, r_star: f64, r_zero: f64) -> Result<Self> {
        if !(r_star > 0.0) || !(r_zero > r_star) {
            return Err(Error::InvalidGrid(format!(
                "obstacle radii must satisfy 0 < R* < R0, got R*={r_star}, R0={r_zero}"
            )));
        }
        let half = 0.5 * self.box_len;
        for axis in 0..3 {
            let h = self.spacing(axis);
            if r_star + 2.0 * h > half {
                return Err(Error::InvalidGrid(format!(
                    "obstacle of radius {r_star} leaves less than 2 cells of clearance on axis {axis}"
                )));
            }
        }
        if r_zero >= half {
            return Err(Error::InvalidGrid(format!(
                "annulus radius {r_zero} must be smaller than half the box ({half})"
            )));
        }
        let center = [half; 3];
        let cells = self.cells();
        let mut solid = vec![false; cells];
        for (cell, s) in solid.iter_mut().enumerate() {
            *s = self.center_distance(cell) < r_star;
        }
        if !solid.iter().any(|s| *s) {
            return Err(Error::InvalidGrid(format!(
                "obstacle of radius {r_star} contains no grid point"
            )));
        }
        let mut boundary = Vec::new();
        let mut interior = vec![true; cells];
        for cell in 0..cells {
            if solid[cell] {
                interior[cell] = false;
                continue;
            }
            let touches = self.face_neighbors(cell).iter().any(|&nb| solid[nb]);
            if touches {
                interior[cell] = false;
                let x = self.position(cell);
                let d = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
                let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                boundary.push(BoundaryCell {
                    cell,
                    normal: [d[0] / r, d[1] / r, d[2] / r],
                });
            }
        }
        self.obstacle = Some(ObstacleMask {
            center,
            r_star,
            r_zero,
            solid,
            boundary,
        });
        self.interior = interior;
        Ok(self)
    }

    pub fn into_shared(self) -> Arc<Self> {
        Arc::new(self)
    }

    pub fn period(&self) -> f64 {
        self.period
    }
    pub fn nt(&self) -> usize {
        self.nt
    }
    /// Samples per spatial axis as `[n_x, n_y, n_z]`.
    pub fn n(&self) -> [usize; 3] {
        self.n
    }
    pub fn box_len(&self) -> f64 {
        self.box_len
    }
    pub fn backend(&self) -> Backend {
        self.backend
    }
    pub fn obstacle(&self) -> Option<&ObstacleMask> {
        self.obstacle.as_ref()
    }
    pub fn cells(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }
    pub fn spacing(&self, axis: usize) -> f64 {
        self.box_len / self.n[axis] as f64
    }
    pub fn dt(&self) -> f64 {
        self.period / self.nt as f64
    }
    pub fn cell_volume(&self) -> f64 {
        self.spacing(0) * self.spacing(1) * self.spacing(2)
    }
    /// Base angular frequency `2 pi / T`.
    pub fn omega(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.period
    }
    /// Spatial shape in storage order `[n_z, n_y, n_x]`.
    pub fn space_shape(&self) -> [usize; 3] {
        [self.n[2], self.n[1], self.n[0]]
    }
    /// Highest temporal mode kept by the solvers (`n_t/2 - 1`).
    pub fn max_mode(&self) -> usize {
        self.nt / 2 - 1
    }
    pub fn center(&self) -> [f64; 3] {
        self.obstacle
            .as_ref()
            .map(|o| o.center)
            .unwrap_or([0.5 * self.box_len; 3])
    }

    pub fn cell_index(&self, x: usize, y: usize, z: usize) -> usize {
        (z * self.n[1] + y) * self.n[0] + x
    }

    /// `(x, y, z)` integer coordinates of a cell.
    pub fn cell_coords(&self, cell: usize) -> [usize; 3] {
        let x = cell % self.n[0];
        let y = (cell / self.n[0]) % self.n[1];
        let z = cell / (self.n[0] * self.n[1]);
        [x, y, z]
    }

    pub fn position(&self, cell: usize) -> [f64; 3] {
        let c = self.cell_coords(cell);
        [
            c[0] as f64 * self.spacing(0),
            c[1] as f64 * self.spacing(1),
            c[2] as f64 * self.spacing(2),
        ]
    }

    /// Distance from the box center, computed from integer offsets so that
    /// mirror-image cells get bit-identical radii.
    fn center_distance(&self, cell: usize) -> f64 {
        let c = self.cell_coords(cell);
        (0..3)
            .map(|a| ((2 * c[a]) as f64 - self.n[a] as f64) * 0.5 * self.spacing(a))
            .map(|d| d * d)
            .sum::<f64>()
            .sqrt()
    }

    /// Distance of a cell from the box center (the obstacle center).
    pub fn radius(&self, cell: usize) -> f64 {
        self.center_distance(cell)
    }

    /// Periodic neighbor of `cell` shifted by `step` along `axis` (0 = x).
    pub fn neighbor(&self, cell: usize, axis: usize, step: isize) -> usize {
        let mut c = self.cell_coords(cell);
        let n = self.n[axis] as isize;
        c[axis] = ((c[axis] as isize + step).rem_euclid(n)) as usize;
        self.cell_index(c[0], c[1], c[2])
    }

    fn face_neighbors(&self, cell: usize) -> [usize; 6] {
        [
            self.neighbor(cell, 0, 1),
            self.neighbor(cell, 0, -1),
            self.neighbor(cell, 1, 1),
            self.neighbor(cell, 1, -1),
            self.neighbor(cell, 2, 1),
            self.neighbor(cell, 2, -1),
        ]
    }

    pub fn is_solid(&self, cell: usize) -> bool {
        self.obstacle.as_ref().is_some_and(|o| o.solid[cell])
    }

    pub fn is_interior(&self, cell: usize) -> bool {
        self.interior[cell]
    }

    pub fn in_region(&self, cell: usize, region: Region) -> bool {
        match region {
            Region::All => true,
            Region::Fluid => !self.is_solid(cell),
            Region::Interior => self.interior[cell],
            Region::Annulus => match &self.obstacle {
                Some(o) => !o.solid[cell] && self.radius(cell) < o.r_zero,
                None => true,
            },
            Region::Within(rho) => !self.is_solid(cell) && self.radius(cell) < rho,
            Region::Beyond(rho) => !self.is_solid(cell) && self.radius(cell) > rho,
        }
    }

    pub fn region_mask(&self, region: Region) -> Vec<bool> {
        (0..self.cells()).map(|c| self.in_region(c, region)).collect()
    }

    pub fn region_volume(&self, region: Region) -> f64 {
        let count = (0..self.cells()).filter(|&c| self.in_region(c, region)).count();
        count as f64 * self.cell_volume()
    }

    /// Number of boundary cells (zero without obstacle).
    pub fn boundary_len(&self) -> usize {
        self.obstacle.as_ref().map_or(0, |o| o.boundary.len())
    }

    /// Face area attributed to each boundary cell in discrete flux sums.
    pub fn boundary_face_area(&self) -> f64 {
        let h = [self.spacing(0), self.spacing(1), self.spacing(2)];
        (h[0] * h[1] * h[2]).powf(2.0 / 3.0)
    }

    pub(crate) fn space_fft(&self) -> &FftNd {
        self.space_fft.get_or_init(|| FftNd::new(&self.space_shape()))
    }

    pub(crate) fn full_fft(&self) -> &FftNd {
        self.full_fft.get_or_init(|| {
            let s = self.space_shape();
            FftNd::new(&[self.nt, s[0], s[1], s[2]])
        })
    }

    /// Angular spatial wavenumber of storage index `i` along `axis`.
    pub fn wavenumber(&self, axis: usize, i: usize) -> f64 {
        let k = crate::fft::signed_index(i, self.n[axis]);
        2.0 * std::f64::consts::PI * k as f64 / self.box_len
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_or_small_counts() {
        assert!(PeriodicGrid::spectral(1.0, 3, [8, 8, 8], 1.0).is_err());
        assert!(PeriodicGrid::spectral(1.0, 4, [2, 8, 8], 1.0).is_err());
        assert!(PeriodicGrid::spectral(1.0, 4, [8, 7, 8], 1.0).is_err());
        assert!(PeriodicGrid::spectral(0.0, 4, [8, 8, 8], 1.0).is_err());
        assert!(PeriodicGrid::spectral(1.0, 2, [4, 4, 4], 1.0).is_ok());
    }

    #[test]
    fn obstacle_clearance_enforced() {
        // h = 1, half box = 4: R* + 2 must stay <= 4
        assert!(PeriodicGrid::exterior(1.0, 4, [8, 8, 8], 8.0, 2.5, 3.0).is_err());
        assert!(PeriodicGrid::exterior(1.0, 4, [8, 8, 8], 8.0, 1.5, 3.0).is_ok());
        assert!(PeriodicGrid::exterior(1.0, 4, [8, 8, 8], 8.0, 1.5, 1.0).is_err());
    }

    #[test]
    fn boundary_cells_are_fluid_neighbors_of_solid() {
        let g = PeriodicGrid::exterior(1.0, 2, [16, 16, 16], 8.0, 1.3, 2.5).unwrap();
        let o = g.obstacle().unwrap();
        for b in &o.boundary {
            assert!(!o.solid[b.cell]);
            assert!(g.face_neighbors(b.cell).iter().any(|&n| o.solid[n]));
            let len = b.normal.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((len - 1.0).abs() < 1e-12);
        }
        let count = (0..g.cells())
            .filter(|&c| !o.solid[c] && g.face_neighbors(c).iter().any(|&n| o.solid[n]))
            .count();
        assert_eq!(count, o.boundary.len());
        // the voxelization is symmetric about the center, so normals cancel
        let sum: [f64; 3] = o.boundary.iter().fold([0.0; 3], |acc, b| {
            [acc[0] + b.normal[0], acc[1] + b.normal[1], acc[2] + b.normal[2]]
        });
        assert!(sum.iter().all(|s| s.abs() < 1e-10));
    }
}
