//! Property tests over randomly generated measures: the structural
//! identities that must hold for every admissible input, not just the
//! canned examples.

use heatw::grid::GridFunction;
use heatw::measure::{substitution_check, vague_distance, MeasureSpec};
use heatw::resolvent::{energy_residual, solve_shifted};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::TAU;

/// Random valid measure: a handful of density cells and up to three atoms,
/// renormalized to total mass one.
fn arb_measure() -> impl Strategy<Value = MeasureSpec> {
    (
        prop::collection::vec(0.05f64..0.95, 0..4),
        prop::collection::vec(0.1f64..3.0, 1..6),
        prop::collection::btree_set(1u32..39, 0..4),
        prop::collection::vec(0.05f64..1.0, 3),
    )
        .prop_map(|(mut cuts, raw_density, atom_slots, raw_mass)| {
            cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            let mut breakpoints: Vec<f64> = vec![0.0];
            breakpoints.extend(cuts.iter().copied());
            breakpoints.push(1.0);
            let cells = breakpoints.len() - 1;
            let densities: Vec<f64> = (0..cells)
                .map(|i| raw_density[i % raw_density.len()])
                .collect();
            // atoms on a lattice distinct from breakpoints
            let atoms: Vec<(f64, f64)> = atom_slots
                .iter()
                .enumerate()
                .map(|(k, &slot)| (slot as f64 / 40.0 + 0.0125, raw_mass[k % 3]))
                .collect();
            let density_mass: f64 = densities
                .iter()
                .zip(breakpoints.windows(2))
                .map(|(d, w)| d * (w[1] - w[0]))
                .sum();
            let atom_mass: f64 = atoms.iter().map(|&(_, c)| c).sum();
            let total = density_mass + atom_mass;
            let densities = densities.iter().map(|d| d / total).collect();
            let atoms = atoms.iter().map(|&(p, c)| (p, c / total)).collect();
            MeasureSpec::new(breakpoints, densities, atoms).expect("normalized by construction")
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generalized_inverse_is_a_left_inverse(spec in arb_measure(), x in 0.0f64..1.0) {
        let round = spec.inverse_cdf(spec.cdf(x));
        prop_assert!((round - x).abs() <= 1e-12, "w(W({x})) = {round}");
    }

    #[test]
    fn cdf_of_inverse_recovers_mass_off_plateaus(spec in arb_measure(), s in 0.0f64..1.0) {
        // skip s inside a plateau image [W(p⁻), W(p)]
        let inside_plateau = spec.atoms().iter().any(|&(p, _)| {
            let left = if p == 0.0 { spec.cdf_left(1.0) } else { spec.cdf_left(p) };
            let right = if p == 0.0 { 1.0 } else { spec.cdf(p) };
            (left - 1e-9..=right + 1e-9).contains(&s)
        });
        if !inside_plateau {
            let round = spec.cdf(spec.inverse_cdf(s));
            prop_assert!((round - s).abs() <= 1e-12, "W(w({s})) = {round}");
        }
    }

    #[test]
    fn capacity_averages_to_one(spec in arb_measure(), n in 4usize..700) {
        let prof = spec.capacity(n).unwrap();
        let total: f64 = prof.a().iter().sum::<f64>() / n as f64;
        prop_assert!((total - 1.0).abs() <= 1e-12, "Σ a/n = {total}");
        for &a in prof.a() {
            prop_assert!(a >= 0.0);
        }
    }

    #[test]
    fn plateau_lengths_equal_atom_masses(spec in arb_measure()) {
        let prof = spec.capacity(64).unwrap();
        prop_assert_eq!(prof.plateaus().len(), spec.atoms().len());
        for (plateau, &(_, mass)) in prof.plateaus().iter().zip(spec.atoms()) {
            prop_assert!((plateau.length() - mass).abs() <= 1e-12);
        }
    }

    #[test]
    fn vague_distance_is_a_pseudometric_sample(a in arb_measure(), b in arb_measure()) {
        prop_assert_eq!(vague_distance(&a, &a), 0.0);
        let d_ab = vague_distance(&a, &b);
        let d_ba = vague_distance(&b, &a);
        prop_assert!((d_ab - d_ba).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&d_ab));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn substitution_identities_hold(spec in arb_measure(), c1 in -1.0f64..1.0, s1 in -1.0f64..1.0) {
        let h = move |y: f64| c1 * (TAU * y).cos() + s1 * (2.0 * TAU * y).sin() + 0.3;
        let chk = substitution_check(&spec, h, 1.0, 2048);
        prop_assert!(
            (chk.capacity_lhs - chk.capacity_rhs).abs() <= 1e-6,
            "capacity sides {} vs {}", chk.capacity_lhs, chk.capacity_rhs
        );
        prop_assert!(
            (chk.stieltjes_lhs - chk.stieltjes_rhs).abs() <= 1e-6,
            "stieltjes sides {} vs {}", chk.stieltjes_lhs, chk.stieltjes_rhs
        );
    }

    #[test]
    fn energy_identity_on_random_systems(
        spec in arb_measure(),
        xi in prop::sample::select(vec![0.3, 1.0, 7.7, 191.0, 2048.0]),
        re in -1.0f64..1.0,
        im in -1.0f64..1.0,
    ) {
        let n = 128;
        let profile = spec.capacity(n).unwrap();
        let rhs: Vec<Complex64> = (0..n)
            .map(|j| {
                let x = (j as f64 + 0.5) / n as f64;
                Complex64::new(re * (TAU * x).cos(), im * (3.0 * TAU * x).sin())
            })
            .collect();
        let u = solve_shifted(xi, &profile, &rhs).unwrap();
        let res = energy_residual(xi, profile.a(), &rhs, u.values());
        prop_assert!(res <= 1e-10, "energy residual {res:e}");
    }

    #[test]
    fn oracle_conserves_weighted_mean(spec in arb_measure(), amp in 0.1f64..2.0) {
        use heatw::oracle::{step_scheme, SchemeConfig, Theta};
        let n = 128;
        let profile = spec.capacity(n).unwrap();
        let f0 = GridFunction::sample(n, |x| amp * (TAU * x).sin() + 0.2);
        let sol = step_scheme(
            &profile,
            &f0,
            &SchemeConfig { dt: 1e-3, theta: Theta::Implicit, t_end: 0.05 },
            &[0.0, 0.025, 0.05],
        ).unwrap();
        prop_assert!(sol.conservation_error(&profile) <= 1e-13 * amp.max(1.0));
    }
}
