//! Property tests for the crate-wide invariants.

use despeckle_core::data_fidelity::{
    combined_prox, idiv_prox, nakagami_prox, DEFAULT_PROX_TOL,
};
use despeckle_core::filter_bank::{BankSource, Filter, FilterBank, Kernel};
use despeckle_core::foe_prior::{convolve, convolve_adjoint, prior_energy};
use despeckle_core::image::Image;
use despeckle_core::metrics::{psnr, ssim};
use despeckle_core::speckle::{add_speckle, NoiseSpec};
use proptest::prelude::*;

fn image_strategy(w: usize, h: usize, lo: f64, hi: f64) -> impl Strategy<Value = Image> {
    proptest::collection::vec(lo..hi, w * h).prop_map(move |v| Image::from_pixels(w, h, v))
}

fn kernel_strategy(s: usize) -> impl Strategy<Value = Kernel> {
    proptest::collection::vec(-1.0..1.0f64, s * s).prop_map(move |v| Kernel::new(s, v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prior_energy_is_nonnegative(
        img in image_strategy(10, 8, -300.0, 300.0),
        taps in proptest::collection::vec(-1.0..1.0f64, 9),
        weight in 0.01..10.0f64,
    ) {
        let bank = FilterBank::from_filters(
            vec![Filter { kernel: Kernel::new(3, taps), weight }],
            BankSource::Imported,
        );
        prop_assert!(prior_energy(&img, &bank) >= 0.0);
    }

    #[test]
    fn adjoint_identity_holds(
        x in image_strategy(9, 7, -10.0, 10.0),
        y in image_strategy(9, 7, -10.0, 10.0),
        k in kernel_strategy(5),
    ) {
        let kx = convolve(&x, &k).unwrap();
        let kty = convolve_adjoint(&y, &k).unwrap();
        let gap = (kx.dot(&y) - x.dot(&kty)).abs();
        prop_assert!(gap <= 1e-10 * x.norm() * y.norm());
    }

    #[test]
    fn foebank_text_round_trips_bit_exactly(
        taps in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::ZERO, 9),
        weight in proptest::num::f64::POSITIVE,
    ) {
        let bank = FilterBank::from_filters(
            vec![Filter { kernel: Kernel::new(3, taps), weight }],
            BankSource::Imported,
        );
        let reparsed = FilterBank::parse_foebank(&bank.to_foebank_text()).unwrap();
        let a = &bank.filters()[0];
        let b = &reparsed.filters()[0];
        prop_assert_eq!(a.weight.to_bits(), b.weight.to_bits());
        for (ta, tb) in a.kernel.taps().iter().zip(b.kernel.taps()) {
            prop_assert_eq!(ta.to_bits(), tb.to_bits());
        }
    }

    #[test]
    fn prox_maps_are_monotone_in_the_anchor(
        a in -3.0..8.0f64,
        gap in 0.001..2.0f64,
        f in 1.0..255.0f64,
        // solver-scale steps; far larger tau pushes |phi| evaluation noise
        // past the absolute default tolerance
        tau in 0.0001..0.05f64,
    ) {
        let lo = Image::constant(1, 1, a);
        let hi = Image::constant(1, 1, a + gap);
        let f_img = Image::constant(1, 1, f);

        let n_lo = nakagami_prox(&lo, &f_img, tau, DEFAULT_PROX_TOL).unwrap().image.pixels()[0];
        let n_hi = nakagami_prox(&hi, &f_img, tau, DEFAULT_PROX_TOL).unwrap().image.pixels()[0];
        prop_assert!(n_hi >= n_lo - 1e-11);

        let c_lo = combined_prox(&lo, &f_img, tau, 550.0, 0.02, DEFAULT_PROX_TOL).unwrap().image.pixels()[0];
        let c_hi = combined_prox(&hi, &f_img, tau, 550.0, 0.02, DEFAULT_PROX_TOL).unwrap().image.pixels()[0];
        prop_assert!(c_hi >= c_lo - 1e-11);

        let u_lo = Image::constant(1, 1, 30.0 * (a + 4.0));
        let u_hi = Image::constant(1, 1, 30.0 * (a + 4.0 + gap));
        let i_lo = idiv_prox(&u_lo, &f_img, tau).pixels()[0];
        let i_hi = idiv_prox(&u_hi, &f_img, tau).pixels()[0];
        prop_assert!(i_hi >= i_lo);
        prop_assert!(i_lo > 0.0);
    }

    #[test]
    fn speckle_scales_exactly_under_powers_of_two(
        seed in any::<u64>(),
        looks in 1u32..16,
        level in 1.0..200.0f64,
    ) {
        let u = Image::from_fn(8, 8, |x, y| level + (x * 8 + y) as f64);
        let spec = NoiseSpec { looks, seed };
        let base = add_speckle(&u, &spec);
        for c in [0.5f64, 2.0, 8.0] {
            let scaled = add_speckle(&u.map(|p| c * p), &spec);
            for (s, b) in scaled.pixels().iter().zip(base.pixels()) {
                prop_assert_eq!(s.to_bits(), (c * b).to_bits());
            }
        }
    }

    #[test]
    fn metric_symmetry_and_ssim_range(
        a in image_strategy(16, 16, 0.0, 255.0),
        b in image_strategy(16, 16, 0.0, 255.0),
    ) {
        prop_assert_eq!(psnr(&a, &b, 255.0).unwrap(), psnr(&b, &a, 255.0).unwrap());
        let s_ab = ssim(&a, &b, 255.0).unwrap();
        let s_ba = ssim(&b, &a, 255.0).unwrap();
        prop_assert!((s_ab - s_ba).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&s_ab));
    }
}
