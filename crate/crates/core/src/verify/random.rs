use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::fields::{Field, PeriodicGrid};

/// Which temporal modes a random field carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeContent {
    Steady,
    Oscillatory,
    Full,
}

fn signed(i: usize, n: usize) -> i64 {
    if 2 * i <= n {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Random real field with coefficients on `|index| <= n/4` along every axis.
///
/// The coefficients are standard complex normals; the zero spatial wavenumber
/// is left empty so every time slice has zero spatial mean. The real part of
/// the inverse transform is kept, which is the Hermitian-symmetrized spectrum.
pub fn band_limited_field(grid: &Arc<PeriodicGrid>, ncomp: usize, content: TimeContent, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [nz, ny, nx] = grid.space_shape();
    let nt = grid.nt();
    let block = nt * grid.cells();
    let inside = |i: usize, n: usize| 4 * signed(i, n).unsigned_abs() <= n as u64 && 2 * i != n;
    let mut coeffs = vec![Complex64::default(); ncomp * block];
    let mut i = 0;
    for _ in 0..ncomp {
        for k in 0..nt {
            let time_ok = match content {
                TimeContent::Steady => k == 0,
                TimeContent::Oscillatory => k != 0 && inside(k, nt),
                TimeContent::Full => inside(k, nt),
            };
            for z in 0..nz {
                for y in 0..ny {
                    for x in 0..nx {
                        let space_ok = inside(z, nz) && inside(y, ny) && inside(x, nx) && (x, y, z) != (0, 0, 0);
                        if time_ok && space_ok {
                            let re: f64 = StandardNormal.sample(&mut rng);
                            let im: f64 = StandardNormal.sample(&mut rng);
                            coeffs[i] = Complex64::new(re, im);
                        }
                        i += 1;
                    }
                }
            }
        }
    }
    let f = Field::from_spectral(grid, ncomp, &coeffs).expect("coefficient count matches the grid");
    Field::from_samples(grid, ncomp, f.into_samples()).expect("finite samples")
}
