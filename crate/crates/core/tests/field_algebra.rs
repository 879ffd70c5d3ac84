use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use tpflow::fields::io::{field_to_bytes, read_field_standalone};
use tpflow::fields::{dealias, divergence, leray_project, project_oscillatory, project_steady, Field, PeriodicGrid};
use tpflow::norms::lq_spacetime_norm;
use tpflow::verify::{band_limited_field, TimeContent};

fn grid() -> Arc<PeriodicGrid> {
    PeriodicGrid::spectral(1.5, 8, [8, 8, 8], 2.0 * PI).unwrap().into_shared()
}

/// Random samples with every Fourier mode populated, unlike the band-limited draws.
fn rough_field(g: &Arc<PeriodicGrid>, ncomp: usize, seed: u64) -> Field {
    let mut state = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
    let len = ncomp * g.nt() * g.cells();
    let data = (0..len)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    Field::from_samples(g, ncomp, data).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn time_projections_form_a_complementary_pair(seed in any::<u64>()) {
        let g = grid();
        let f = rough_field(&g, 3, seed);
        let scale = f.max_abs();
        let p = project_steady(&f);
        let q = project_oscillatory(&f);
        prop_assert!(project_steady(&p).max_abs_diff(&p) <= 1e-13 * scale);
        prop_assert!(project_oscillatory(&q).max_abs_diff(&q) <= 1e-13 * scale);
        prop_assert!((&p + &q).max_abs_diff(&f) <= 1e-13 * scale);
        prop_assert!(project_steady(&q).max_abs() <= 1e-13 * scale);
        prop_assert!(project_oscillatory(&p).max_abs() <= 1e-13 * scale);
    }

    #[test]
    fn parseval_matches_the_coefficient_sum(seed in any::<u64>()) {
        let g = grid();
        let f = rough_field(&g, 3, seed);
        let sampled = lq_spacetime_norm(&f, 2.0).powi(2);
        let spec = f.to_spectral();
        let coeffs: f64 = spec.spectrum().unwrap().iter().map(|c| c.norm_sqr()).sum();
        let weighted = coeffs * g.box_len().powi(3);
        prop_assert!((sampled - weighted).abs() <= 1e-10 * sampled);
    }

    #[test]
    fn spectral_round_trip(seed in any::<u64>()) {
        let g = grid();
        let f = rough_field(&g, 1, seed);
        let spec = f.to_spectral();
        let back = Field::from_spectral(&g, 1, spec.spectrum().unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(&f) <= 1e-12 * f.max_abs());
    }

    #[test]
    fn leray_projection_is_idempotent_and_solenoidal(seed in any::<u64>()) {
        let g = grid();
        let u = band_limited_field(&g, 3, TimeContent::Full, seed);
        let pu = leray_project(&u).unwrap();
        prop_assert!(divergence(&pu).max_abs() <= 1e-11 * u.max_abs());
        let ppu = leray_project(&pu).unwrap();
        prop_assert!(ppu.max_abs_diff(&pu) <= 1e-12 * u.max_abs());
    }

    #[test]
    fn dealiasing_is_a_projection(seed in any::<u64>()) {
        let g = grid();
        let f = rough_field(&g, 1, seed);
        let d = dealias(&f);
        prop_assert!(dealias(&d).max_abs_diff(&d) <= 1e-13 * f.max_abs());
        let lo = band_limited_field(&g, 1, TimeContent::Full, seed);
        let scale = lo.max_abs();
        // |k| <= n/4 lies inside the kept band 3|k| < n
        prop_assert!(dealias(&lo).max_abs_diff(&lo) <= 1e-13 * scale);
    }

    #[test]
    fn binary_format_round_trips_bit_for_bit(seed in any::<u64>(), ncomp in prop::sample::select(vec![1usize, 3])) {
        let g = grid();
        let f = rough_field(&g, ncomp, seed);
        let bytes = field_to_bytes(&f);
        let back = read_field_standalone(bytes.as_slice()).unwrap();
        prop_assert_eq!(back.samples(), f.samples());
        prop_assert_eq!(back.ncomp(), ncomp);
        prop_assert_eq!(back.grid().period(), g.period());
    }
}

#[test]
fn parseval_against_a_brute_force_dft() {
    let g = PeriodicGrid::spectral(1.0, 4, [4, 4, 4], 1.0).unwrap().into_shared();
    let f = rough_field(&g, 1, 11);
    let spec = f.to_spectral();
    let coeffs = spec.spectrum().unwrap();
    let n = 4usize;
    let total = (n * n * n * n) as f64;
    for (idx, c) in coeffs.iter().enumerate() {
        let kx = idx % n;
        let ky = (idx / n) % n;
        let kz = (idx / n / n) % n;
        let kt = idx / n / n / n;
        let (mut re, mut im) = (0.0, 0.0);
        for t in 0..n {
            for cell in 0..g.cells() {
                let [x, y, z] = g.cell_coords(cell);
                let phase = -2.0 * PI * ((kt * t + kz * z + ky * y + kx * x) as f64) / n as f64;
                let v = f.get(t, 0, cell);
                re += v * phase.cos();
                im += v * phase.sin();
            }
        }
        assert!((c.re - re / total).abs() < 1e-13, "coefficient {idx}");
        assert!((c.im - im / total).abs() < 1e-13, "coefficient {idx}");
    }
}
