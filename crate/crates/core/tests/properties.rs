mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rank1_agc::agc::{
    plant_equilibrium, plant_state_matrix, AreaSpec, GeneratorSpec, NetworkSpec, TieLine,
};
use rank1_agc::diagstab::{
    certificate, check_rank1, lyapunov_max_eig, oracle_diagstab, perturbation_bound, OracleVerdict,
    PerturbedSystem, Rank1System,
};
use rank1_agc::numerics::{hurwitz_verdict, spectral_norm, svd, sym_eig, Mat};
use rank1_agc::reduced::{
    equilibrium, lyapunov_weights, reduced_is_stable, reduced_rhs, sensitivity,
    sensitivity_closed_form, steady_ace, steady_deviations, LyapunovFn, PhiMap, PhiUnit,
    ReducedModel,
};

use common::{spectral_abscissa, Dense};

fn mat(n: usize, m: usize, lo: f64, hi: f64) -> impl Strategy<Value = Mat> {
    prop::collection::vec(lo..hi, n * m).prop_map(move |v| Mat::from_vec(n, m, v).unwrap())
}

fn square(max_n: usize) -> impl Strategy<Value = Mat> {
    (1..=max_n).prop_flat_map(|n| mat(n, n, -3.0, 3.0))
}

fn dense(m: &Mat) -> Dense {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let mut c = Mat::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            c[(i, j)] = (0..a.cols()).map(|l| a[(i, l)] * b[(l, j)]).sum();
        }
    }
    c
}

fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

/// Rank-1 system with `y ≥ 0` and a condition value at least `gap` away from 1.
fn rank1(max_n: usize) -> impl Strategy<Value = Rank1System> {
    (1..=max_n)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(0.2f64..5.0, n),
                prop::collection::vec(-3.0f64..3.0, n),
                prop::collection::vec(0.0f64..3.0, n),
            )
        })
        .prop_map(|(d, x, y)| Rank1System::new(d, x, y).unwrap())
        .prop_filter("away from the boundary", |s| {
            (s.condition_value() - 1.0).abs() > 1e-6
        })
}

/// Certifiable rank-1 system: nonzero `x`, positive `y`, condition below 1.
fn stable_rank1(max_n: usize) -> impl Strategy<Value = Rank1System> {
    (1..=max_n)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(0.2f64..5.0, n),
                prop::collection::vec((0.05f64..3.0, any::<bool>()), n),
                prop::collection::vec(0.1f64..3.0, n),
                0.05f64..0.95,
            )
        })
        .prop_map(|(d, xs, y, target)| {
            let mut x: Vec<f64> = xs.iter().map(|&(m, s)| if s { m } else { -m }).collect();
            let probe = Rank1System::new(d.clone(), x.clone(), y.clone()).unwrap();
            let c = probe.condition_value();
            if c > 0.0 {
                x.iter_mut().for_each(|v| *v *= target / c);
            }
            Rank1System::new(d, x, y).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn eigenvalues_sum_to_trace(a in square(8)) {
        let s = a.symmetric_part();
        let e = sym_eig(&s).unwrap();
        let sum: f64 = e.eigenvalues.iter().sum();
        prop_assert!((sum - s.trace()).abs() <= 1e-9 * s.norm_fro().max(1.0));
    }

    #[test]
    fn spectral_norm_is_submultiplicative((a, b) in (1usize..=5).prop_flat_map(|n| (mat(n, n, -3.0, 3.0), mat(n, n, -3.0, 3.0)))) {
        let ab = spectral_norm(&matmul(&a, &b)).unwrap();
        prop_assert!(ab <= spectral_norm(&a).unwrap() * spectral_norm(&b).unwrap() + 1e-9);
    }

    #[test]
    fn singular_values_survive_permutations(
        (a, p, q) in (1usize..=5).prop_flat_map(|n| (mat(n, n, -3.0, 3.0), permutation(n), permutation(n)))
    ) {
        let n = a.rows();
        let mut b = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                b[(i, j)] = a[(p[i], q[j])];
            }
        }
        let sa = svd(&a).unwrap().sigma;
        let sb = svd(&b).unwrap().sigma;
        for (x, y) in sa.iter().zip(&sb) {
            prop_assert!((x - y).abs() <= 1e-9 * sa[0].max(1.0));
        }
    }

    #[test]
    fn hurwitz_test_matches_abscissa(a in square(4), shift in 0.0f64..3.0) {
        let mut a = a;
        for i in 0..a.rows() {
            a[(i, i)] -= shift;
        }
        let abscissa = spectral_abscissa(&dense(&a));
        prop_assume!(abscissa.abs() > 1e-6);
        prop_assert_eq!(hurwitz_verdict(&a).unwrap(), abscissa < 0.0);
    }

    #[test]
    fn certificate_is_sound(sys in stable_rank1(6)) {
        let r = certificate(&sys).unwrap();
        let d = r.certificate_d.unwrap();
        let lmax = lyapunov_max_eig(&sys.matrix(), &d).unwrap();
        let min_dd = d.iter().zip(sys.delta()).map(|(a, b)| a * b).fold(f64::INFINITY, f64::min);
        prop_assert!(lmax <= -2.0 * r.margin_mu * min_dd + 1e-8);
    }

    #[test]
    fn verdict_survives_diagonal_scaling(
        (sys, l, r) in rank1(5).prop_flat_map(|s| {
            let n = s.dim();
            (Just(s), prop::collection::vec(0.1f64..10.0, n), prop::collection::vec(0.1f64..10.0, n))
        })
    ) {
        // Δ₁(−Δ + xyᵀ)Δ₂ = −Δ₁ΔΔ₂ + (Δ₁x)(Δ₂y)ᵀ
        let delta: Vec<f64> = (0..sys.dim()).map(|i| l[i] * sys.delta()[i] * r[i]).collect();
        let x: Vec<f64> = (0..sys.dim()).map(|i| l[i] * sys.x()[i]).collect();
        let y: Vec<f64> = (0..sys.dim()).map(|i| r[i] * sys.y()[i]).collect();
        let scaled = Rank1System::new(delta, x, y).unwrap();
        prop_assert_eq!(check_rank1(&sys).stable, check_rank1(&scaled).stable);
    }

    #[test]
    fn verdict_survives_permutation(
        (sys, p) in rank1(5).prop_flat_map(|s| { let n = s.dim(); (Just(s), permutation(n)) })
    ) {
        let pick = |v: &[f64]| p.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let permuted = Rank1System::new(pick(sys.delta()), pick(sys.x()), pick(sys.y())).unwrap();
        prop_assert_eq!(check_rank1(&sys).stable, check_rank1(&permuted).stable);
    }

    #[test]
    fn verdict_survives_transpose(sys in rank1(5)) {
        prop_assume!(sys.x().iter().all(|&v| v >= 0.0));
        let t = Rank1System::new(sys.delta().to_vec(), sys.y().to_vec(), sys.x().to_vec()).unwrap();
        prop_assert_eq!(check_rank1(&sys).stable, check_rank1(&t).stable);
        prop_assert!(sys.matrix().transpose() == t.matrix());
    }

    #[test]
    fn block_triangular_of_stable_blocks_is_stable(
        a in stable_rank1(2),
        b in stable_rank1(2),
        coupling in prop::collection::vec(-5.0f64..5.0, 4),
        seed in any::<u64>(),
    ) {
        let (na, nb) = (a.dim(), b.dim());
        let mut m = Mat::zeros(na + nb, na + nb);
        let (ma, mb) = (a.matrix(), b.matrix());
        for i in 0..na {
            for j in 0..na {
                m[(i, j)] = ma[(i, j)];
            }
            for j in 0..nb {
                m[(i, na + j)] = coupling[i * 2 + j];
            }
        }
        for i in 0..nb {
            for j in 0..nb {
                m[(na + i, na + j)] = mb[(i, j)];
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = oracle_diagstab(&m, 20_000, &mut rng).unwrap();
        prop_assert_eq!(r.verdict, OracleVerdict::Yes);
    }

    #[test]
    fn hurwitz_but_not_diagonally_stable(alpha in 1.0001f64..100.0, neg in any::<bool>()) {
        let alpha = if neg { -alpha } else { alpha };
        let sys = Rank1System::new(vec![1.0, 1.0], vec![alpha, -alpha], vec![1.0, 1.0]).unwrap();
        prop_assert!(!check_rank1(&sys).stable);
        prop_assert!(hurwitz_verdict(&sys.matrix()).unwrap());
    }

    #[test]
    fn perturbation_bound_is_sound(
        (sys, e, frac) in stable_rank1(5).prop_flat_map(|s| {
            let n = s.dim();
            (Just(s), mat(n, n, -2.0, 2.0), -0.95f64..0.95)
        })
    ) {
        prop_assume!(spectral_norm(&e).unwrap() > 1e-6);
        let p = PerturbedSystem::new(sys.clone(), 0.0, e).unwrap();
        let bound = perturbation_bound(&p).unwrap();
        let d = certificate(&sys).unwrap().certificate_d.unwrap();
        let lmax = lyapunov_max_eig(&p.with_sigma(frac * bound).matrix(), &d).unwrap();
        prop_assert!(lmax < 0.0);
    }
}

// ---------------------------------------------------------------------------
// Power-system properties.

fn generator() -> impl Strategy<Value = GeneratorSpec> {
    (
        0.02f64..0.3,
        0.2f64..2.0,
        0.1f64..1.0,
        0.05f64..0.8,
        0.05f64..0.8,
    )
        .prop_map(|(r, tt, base, lo, hi)| GeneratorSpec {
            droop_r: r,
            turbine_tc: tt,
            base_setpoint: base,
            lower: base - lo,
            upper: base + hi,
            participation: 0.0,
            in_agc: true,
        })
}

fn area_spec() -> impl Strategy<Value = AreaSpec> {
    (
        prop::collection::vec((generator(), 0.05f64..1.0), 1..=3),
        5.0f64..20.0,
        0.5f64..2.0,
        0.3f64..3.0,
        30.0f64..200.0,
        -0.3f64..0.3,
    )
        .prop_map(|(gens, m, d, bias_scale, tau, load)| {
            let total: f64 = gens.iter().map(|g| g.1).sum();
            let generators: Vec<GeneratorSpec> = gens
                .into_iter()
                .map(|(g, w)| GeneratorSpec {
                    participation: w / total,
                    ..g
                })
                .collect();
            let mut a = AreaSpec {
                name: String::new(),
                inertia_m: m,
                load_damping: d,
                generators,
                bias_b: 1.0,
                agc_tc: tau,
                sched_freq: 60.0,
                load_dev: load,
            };
            a.bias_b = bias_scale * a.beta();
            a
        })
}

/// Random connected network: spanning tree plus optional extra ties.
fn network() -> impl Strategy<Value = NetworkSpec> {
    (1usize..=4)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(area_spec(), n),
                prop::collection::vec((any::<prop::sample::Index>(), 0.5f64..5.0), n - 1),
                prop::collection::vec((0..n, 0..n, 0.5f64..5.0), 0..3),
            )
        })
        .prop_map(|(areas, tree, extra)| {
            let mut ties = Vec::new();
            for (k, (parent, t)) in tree.into_iter().enumerate() {
                ties.push(TieLine {
                    from: parent.index(k + 1),
                    to: k + 1,
                    stiffness_t: t,
                });
            }
            ties.extend(extra.into_iter().filter(|(a, b, _)| a != b).map(
                |(from, to, stiffness_t)| TieLine {
                    from,
                    to,
                    stiffness_t,
                },
            ));
            let n = areas.len();
            NetworkSpec::new(areas, ties, vec![0.0; n], 1.0).unwrap()
        })
}

/// Setpoints drawn inside the generator limits.
fn with_setpoints() -> impl Strategy<Value = (NetworkSpec, Vec<f64>)> {
    network()
        .prop_flat_map(|net| {
            let g = net.n_generators();
            (Just(net), prop::collection::vec(0.0f64..1.0, g))
        })
        .prop_map(|(net, w)| {
            let u = net
                .areas
                .iter()
                .flat_map(|a| a.generators.iter())
                .zip(w)
                .map(|(g, w)| g.lower + w * (g.upper - g.lower))
                .collect();
            (net, u)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn equilibrium_is_synchronous_and_balanced((net, u) in with_setpoints()) {
        let ss = plant_equilibrium(&net, &u).unwrap();
        let fmax = ss.freq_dev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let fmin = ss.freq_dev.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(fmax - fmin <= 1e-10);
        prop_assert!(ss.ni_dev.iter().sum::<f64>().abs() <= 1e-10);

        let off = net.generator_offsets();
        let base = net.base_setpoints();
        let du: Vec<f64> = (0..net.n_areas())
            .map(|k| (off[k]..off[k + 1]).map(|g| u[g] - base[g]).sum())
            .collect();
        let beta = net.betas();
        let total_beta: f64 = beta.iter().sum();
        let imbalance: f64 = du.iter().zip(net.load_devs()).map(|(u, l)| u - l).sum();
        for k in 0..net.n_areas() {
            let balance = du[k] - ss.ni_dev[k] - beta[k] * ss.freq_dev[k] - net.areas[k].load_dev;
            prop_assert!(balance.abs() <= 1e-10);
            prop_assert!((ss.freq_dev[k] - imbalance / total_beta).abs() <= 1e-10);
        }
    }

    #[test]
    fn plant_alone_is_hurwitz(net in network()) {
        let (a, _) = plant_state_matrix(&net);
        prop_assert!(hurwitz_verdict(&a).unwrap());
    }
}

// ---------------------------------------------------------------------------
// Reduced-model properties.

fn phi_map() -> impl Strategy<Value = PhiMap> {
    prop::collection::vec((0.05f64..1.0, 0.01f64..1.0, 0.01f64..1.0), 1..=4).prop_map(|units| {
        let total: f64 = units.iter().map(|u| u.0).sum();
        PhiMap::new(
            units
                .into_iter()
                .map(|(a, lo, hi)| PhiUnit {
                    alpha: a / total,
                    lo: -lo,
                    hi,
                })
                .collect(),
        )
        .unwrap()
    })
}

/// Saturating model with a feasible disturbance in every area.
fn reduced_model() -> impl Strategy<Value = ReducedModel> {
    (1usize..=5)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(1.0f64..50.0, n),
                prop::collection::vec(0.1f64..10.0, n),
                prop::collection::vec(30.0f64..200.0, n),
                prop::collection::vec(phi_map(), n),
                prop::collection::vec(0.02f64..0.98, n),
            )
        })
        .prop_map(|(beta, scale, tau, phi, pos)| {
            let load: Vec<f64> = phi
                .iter()
                .zip(&pos)
                .map(|(p, w)| {
                    let (lo, hi) = p.capacity();
                    lo + w * (hi - lo)
                })
                .collect();
            let bias = beta.iter().zip(&scale).map(|(b, s)| b * s).collect();
            ReducedModel::from_parts(beta, bias, tau, phi, load).unwrap()
        })
}

fn model_and_eta() -> impl Strategy<Value = (ReducedModel, Vec<f64>)> {
    reduced_model().prop_flat_map(|m| {
        let n = m.dim();
        (Just(m), prop::collection::vec(-5.0f64..5.0, n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn reduced_dynamics_always_diagonally_stable(
        (beta, bias) in (1usize..=8).prop_flat_map(|n| (
            prop::collection::vec(0.01f64..100.0, n),
            prop::collection::vec(0.01f64..100.0, n),
        ))
    ) {
        let m = ReducedModel::linear(beta, bias, 1.0).unwrap();
        prop_assert!(reduced_is_stable(&m).stable);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn phi_round_trip((phi, w) in (phi_map(), 0.001f64..0.999)) {
        let (lo, hi) = phi.preimage_interval();
        let eta = lo + w * (hi - lo);
        let back = phi.invert(phi.eval(eta)).unwrap();
        prop_assert!((back - eta).abs() <= 1e-10);
    }

    #[test]
    fn equilibrium_is_a_rest_point(m in reduced_model()) {
        let eq = equilibrium(&m).unwrap();
        for (k, e) in eq.eta_bar.iter().enumerate() {
            let (lo, hi) = eq.preimage_intervals[k];
            prop_assert!(lo < *e && *e < hi);
            prop_assert!((m.phi_eval(k, *e) - m.load_dev[k]).abs() <= 1e-10);
        }
        prop_assert!(reduced_rhs(&m, &eq.eta_bar).iter().all(|v| v.abs() <= 1e-10));
        prop_assert!(steady_ace(&m, &eq.eta_bar).iter().all(|v| v.abs() <= 1e-10));
    }

    #[test]
    fn steady_ace_matches_interchange_formulas((m, eta) in model_and_eta()) {
        let ss = steady_deviations(&m, &m.phi_vec(&eta));
        for (a, b) in ss.ace.iter().zip(steady_ace(&m, &eta)) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn flat_bias_row_is_minus_unit((m, k) in reduced_model().prop_flat_map(|m| { let n = m.dim(); (Just(m), 0..n) })) {
        let mut bias = m.bias_b.clone();
        bias[k] = m.beta_k[k];
        let tau: Vec<f64> = m.tau_tilde.iter().map(|t| t * m.tau_scale).collect();
        let flat = ReducedModel::from_parts(m.beta_k.clone(), bias, tau, m.phi.clone(), m.load_dev.clone()).unwrap();
        for j in 0..flat.dim() {
            let want = if j == k { -1.0 } else { 0.0 };
            prop_assert_eq!(flat.b_matrix[(k, j)], want);
        }
    }

    #[test]
    fn sensitivity_routes_agree(
        (beta, bias, logw) in (1usize..=5).prop_flat_map(|n| (
            prop::collection::vec(1.0f64..50.0, n),
            prop::collection::vec(0.5f64..80.0, n),
            -4.0f64..4.0,
        ))
    ) {
        let m = ReducedModel::linear(beta, bias, 60.0).unwrap();
        let w = 10f64.powf(logw) / 60.0;
        for i in 0..m.dim() {
            for j in 0..m.dim() {
                let a = sensitivity(&m, i, j, w).unwrap();
                let c = sensitivity_closed_form(&m, i, j, w).unwrap();
                prop_assert!((a - c).norm() <= 1e-8 * c.norm());
            }
        }
    }

    #[test]
    fn lyapunov_function_decreases((m, eta) in model_and_eta()) {
        let d = lyapunov_weights(&m).unwrap();
        let v = LyapunovFn::new(&m, d).unwrap();
        let value = v.value(&m, &eta);
        let rate = v.decrease(&m, &eta);
        prop_assert!(value >= -1e-15);
        prop_assert!(rate <= 1e-10);
        let moved = (0..m.dim()).any(|k| (m.phi_eval(k, eta[k]) - m.load_dev[k]).abs() > 1e-9);
        if moved {
            prop_assert!(rate < 0.0);
            prop_assert!(value > 0.0);
        }
    }
}
