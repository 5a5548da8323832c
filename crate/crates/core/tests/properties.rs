use bosemix::boxsum::{s0_summand, LatticeKind, MomentumLattice};
use bosemix::lhy::{bog_g, e_lhy, e_lhy_alternative, e_main};
use bosemix::mixture::{diagonalize_coupling, eigenvalues, mu_pm, rotation, Mat2, MixtureParams};
use bosemix::potentials::{make_potential, scaled_soft_potential, Family, PotentialDescriptor};
use bosemix::quasifree::{mode_objective, pairing_from_generator};
use bosemix::scattering::{solve_scattering, GridConfig};
use bosemix::thermo::{grand_functional, hessian_f, GrandFunctionalParams};
use nalgebra::{SymmetricEigen, Vector3};
use proptest::prelude::*;

use std::f64::consts::PI;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn piecewise(values: Vec<f64>, radius: f64) -> PotentialDescriptor {
    let n = values.len();
    let breaks = (1..=n).map(|i| radius * i as f64 / n as f64).collect();
    PotentialDescriptor { family: Family::Piecewise { breaks, values }, support_radius: radius, non_increasing: false }
}

fn brute_count(kind: LatticeKind, side: f64, k_max: f64) -> u64 {
    let sp = kind.spacing(side);
    let n = (k_max / sp).ceil() as i64 + 1;
    let lo = if kind == LatticeKind::Neumann { 0 } else { -n };
    let mut count = 0;
    for i in lo..=n {
        for j in lo..=n {
            for l in lo..=n {
                let k = sp * ((i * i + j * j + l * l) as f64).sqrt();
                if (i, j, l) != (0, 0, 0) && k <= k_max * (1.0 + 1e-12) {
                    count += 1;
                }
            }
        }
    }
    count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shell_multiplicities_match_brute_force(side in 1.0f64..20.0, frac in 0.0f64..1.0, kind_ix in 0usize..3) {
        let kind = [LatticeKind::Periodic, LatticeKind::Neumann, LatticeKind::NeumannSigned][kind_ix];
        let k_max = frac * 12.0 * kind.spacing(side);
        let lat = MomentumLattice::new(kind, side, k_max).unwrap();
        prop_assert_eq!(lat.point_count(), brute_count(kind, side, k_max));
    }

    #[test]
    fn bogoliubov_summand_is_nonnegative(x in 1e-6f64..1e3, y in 0.0f64..1e3) {
        prop_assert!(bog_g(x, y) >= 0.0);
        prop_assert_eq!(bog_g(x, 0.0), 0.0);
    }

    #[test]
    fn s0_sum_is_additive_over_shell_partitions(side in 20.0f64..200.0, cut in 0.0f64..1.0, ra in 1e-4f64..1e-2, rb in 0.0f64..1e-2) {
        let p = MixtureParams::constant(ra, rb, 1.0, 0.7, 0.3).unwrap();
        let lat = MomentumLattice::for_sums(LatticeKind::Periodic, side).unwrap();
        let k_cut = cut * lat.k_max();
        let f = |k: f64| s0_summand(&p, k, k * k).unwrap();
        let total = lat.sum(f);
        let low = lat.sum(|k| if k <= k_cut { f(k) } else { 0.0 });
        let high = lat.sum(|k| if k > k_cut { f(k) } else { 0.0 });
        prop_assert!(rel(low + high, total) < 1e-12);
    }

    #[test]
    fn fourier_transform_at_zero_is_the_l1_norm(vals in prop::collection::vec(0.0f64..10.0, 1..6), radius in 0.2f64..3.0) {
        let v = make_potential(&piecewise(vals, radius)).unwrap();
        prop_assert!((v.fourier_radial(0.0) - v.l1_norm()).abs() <= 1e-10 * v.l1_norm().max(1e-300));
    }

    #[test]
    fn scaled_soft_preserves_the_integral(h in 0.1f64..10.0, scale in 0.1f64..10.0, strength in 0.0f64..5.0) {
        let base = make_potential(&PotentialDescriptor::square_well(h, 1.0)).unwrap();
        let v = scaled_soft_potential(&base, scale, strength).unwrap();
        prop_assert!((v.l1_norm() - strength * base.l1_norm()).abs() <= 1e-12 * strength * base.l1_norm() + 1e-300);
        prop_assert!(rel(v.support_radius(), scale) < 1e-15);
    }

    #[test]
    fn mixture_mode_algebra(ra in 0.0f64..2.0, rb in 0.0f64..2.0, ga in 0.0f64..5.0, gb in 0.0f64..5.0, t in 0.0f64..1.0, tau in 1e-3f64..10.0) {
        let gab = t * (ga * gb).sqrt();
        let b = bosemix::mixture::coupling_from(ra, rb, ga, gb, gab);
        let (lp, lm) = eigenvalues(&b);
        let eig = SymmetricEigen::new(b).eigenvalues;
        let (hi, lo) = (eig.max(), eig.min());
        let scale = b.norm().max(1e-300);
        prop_assert!(lp >= lm);
        prop_assert!((lp - hi).abs() <= 1e-12 * scale && (lm - lo).abs() <= 1e-12 * scale);
        let u = rotation(&b);
        prop_assert!((u.transpose() * u - Mat2::identity()).norm() <= 1e-12);
        let mode = diagonalize_coupling(b, 1.0, tau).unwrap();
        let (d, beta) = (mode.d_matrix(), mode.beta_matrix());
        let s = (Mat2::identity() * tau + b).norm();
        prop_assert!((d * beta * 2.0 - b).norm() <= 1e-10 * s);
        prop_assert!((d + beta * d * beta - Mat2::identity() * tau - b).norm() <= 1e-10 * s);
        prop_assert!(mode.d_diag.iter().all(|&x| x >= 0.0));
        prop_assert!(mode.beta_diag.iter().all(|&x| x.abs() < 1.0));
        let (al, ga_) = (mode.alpha, mode.gamma);
        prop_assert!((ga_ * (ga_ + Mat2::identity()) - al * al).norm() <= 1e-10 * (1.0 + ga_.norm()).powi(2));
    }

    #[test]
    fn mu_pm_identities(xi in 0.0f64..=1.0) {
        let (mp, mm) = mu_pm(xi).unwrap();
        prop_assert!((mp * mp + mm * mm - 1.0).abs() < 1e-14);
        prop_assert!(mp >= mm && mm >= 0.0);
    }

    #[test]
    fn lhy_forms_agree_and_scale(ra in 0.0f64..1e-3, rb in 0.0f64..1e-3, aa in 0.01f64..2.0, ab in 0.01f64..2.0, t in 0.0f64..1.0, s in 0.1f64..10.0) {
        let p = MixtureParams::constant(ra, rb, aa, ab, t * (aa * ab).sqrt()).unwrap();
        let (x, y) = (e_lhy(&p).unwrap(), e_lhy_alternative(&p).unwrap());
        prop_assert!((x - y).abs() <= 1e-12 * x.max(y).max(1e-300));
        let q = p.with_densities(s * ra, s * rb);
        prop_assert!(rel(e_main(&q), s * s * e_main(&p)) < 1e-13 || e_main(&p) == 0.0);
        prop_assert!(rel(e_lhy(&q).unwrap(), s.powf(2.5) * x) < 1e-12 || x == 0.0);
    }

    #[test]
    fn generator_states_are_on_the_admissible_boundary(s11 in -3.0f64..3.0, s12 in -3.0f64..3.0, s22 in -3.0f64..3.0) {
        let (a, g) = pairing_from_generator(&Mat2::new(s11, s12, s12, s22));
        prop_assert!((g * (g + Mat2::identity()) - a * a).norm() <= 1e-10 * (1.0 + g.norm()).powi(2));
        prop_assert!(rel(a[(0, 1)], a[(1, 0)]) < 1e-14 || a[(0, 1)].abs() < 1e-300);
    }

    #[test]
    fn mode_gradient_matches_finite_differences(x in prop::array::uniform3(-1.0f64..1.0), tau in 0.01f64..2.0, ga in 0.0f64..3.0, gb in 0.0f64..3.0, t in 0.0f64..1.0) {
        let b = bosemix::mixture::coupling_from(0.5, 0.3, ga, gb, t * (ga * gb).sqrt());
        let x = Vector3::from(x);
        let (_, g) = mode_objective(tau, &b, &x);
        let h = 1e-6;
        let fd = Vector3::from_fn(|i, _| {
            let e = Vector3::ith(i, h);
            (mode_objective(tau, &b, &(x + e)).0 - mode_objective(tau, &b, &(x - e)).0) / (2.0 * h)
        });
        prop_assert!((g - fd).norm() <= 1e-6 * g.norm().max(1e-3), "{} {}", g, fd);
    }

    #[test]
    fn grand_functional_swap_symmetry(ra in 0.0f64..1e4, rb in 0.0f64..1e4, aa in 0.1f64..1.0, ab in 0.1f64..1.0, t in 0.0f64..1.0, mua in 0.0f64..1e-6, mub in 0.0f64..1e-6) {
        let gp = GrandFunctionalParams::new(1e9, [aa, ab, t * (aa * ab).sqrt()], 1e-6, 10.0).unwrap().with_mu(mua, mub);
        let sw = GrandFunctionalParams { a_a: ab, a_b: aa, mu_a: mub, mu_b: mua, ..gp };
        let (f, g) = (grand_functional(ra, rb, &gp).unwrap(), grand_functional(rb, ra, &sw).unwrap());
        prop_assert!((f - g).abs() <= 1e-13 * f.abs().max(1e-300) + 1e-300);
    }

    #[test]
    fn regime_hessian_is_psd(u in 0.0f64..1.0, v in 0.0f64..1.0, aa in 0.1f64..1.0, ab in 0.1f64..1.0, t in 0.0f64..1.0, e in 6.0f64..9.0) {
        let a_bar = aa.max(ab);
        let rho_a3 = 10f64.powf(-e);
        let rho = rho_a3 / a_bar.powi(3);
        let k_z = rho_a3.powf(-1e-4);
        let gp = GrandFunctionalParams::new((1e3 * a_bar).powi(3), [aa, ab, t * (aa * ab).sqrt()], rho, k_z).unwrap();
        let r = gp.region_bound();
        let (ra, rb) = (u * r, (1.0 - u) * v * r);
        let h = hessian_f(ra, rb, &gp).unwrap();
        let low = SymmetricEigen::new(h).eigenvalues.min();
        prop_assert!(low >= -1e-14 * h.abs().max());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn scattering_profile_invariants(vals in prop::collection::vec(0.0f64..20.0, 1..4), radius in 0.3f64..2.0) {
        let v = make_potential(&piecewise(vals, radius)).unwrap();
        let sol = solve_scattering(&v, &GridConfig::default()).unwrap();
        let a = sol.a();
        prop_assert!(a >= 0.0 && a <= radius * (1.0 + 1e-12));
        let mut prev = 0.0;
        for i in 0..=200 {
            let r = 2.0 * radius * i as f64 / 200.0;
            let (phi, _) = sol.phi_at(r.max(1e-12));
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&phi));
            prop_assert!(phi >= prev - 1e-10);
            prev = phi;
            if r >= radius {
                prop_assert!((phi - (1.0 - a / r)).abs() <= 1e-8);
            }
        }
        prop_assert!((sol.g_hat(0.0) - 8.0 * PI * a).abs() <= 1e-8 * (8.0 * PI * a).max(1.0));
    }

    #[test]
    fn scattering_length_is_monotone_in_the_potential(vals in prop::collection::vec(0.0f64..10.0, 1..4), bump in prop::collection::vec(0.0f64..5.0, 3), radius in 0.3f64..2.0) {
        let bigger: Vec<f64> = vals.iter().zip(bump.iter().cycle()).map(|(v, b)| v + b).collect();
        let a1 = solve_scattering(&make_potential(&piecewise(vals, radius)).unwrap(), &GridConfig::default()).unwrap().a();
        let a2 = solve_scattering(&make_potential(&piecewise(bigger, radius)).unwrap(), &GridConfig::default()).unwrap().a();
        prop_assert!(a1 <= a2 + 1e-10);
    }
}
