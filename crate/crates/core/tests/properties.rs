use cake_core::io::{parse_division, parse_instance, serialize_division, serialize_instance};
use cake_core::metrics::*;
use cake_core::oracle::grid_oracle;
use cake_core::random::{random_division, rng_from_seed, seeded_instance};
use cake_core::rational::int;
use cake_core::solver::*;
use cake_core::*;
use proptest::prelude::*;

fn grid(j: i64) -> Rational {
    rat(j, 32)
}

fn ordered_triple() -> impl Strategy<Value = (i64, i64, i64)> {
    (0i64..=32, 0i64..=32, 0i64..=32).prop_map(|(a, b, c)| {
        let mut v = [a, b, c];
        v.sort_unstable();
        (v[0], v[1], v[2])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn value_is_additive_and_bounded(seed in any::<u64>(), n in 1usize..4, (a, b, c) in ordered_triple()) {
        let inst = seeded_instance(seed, n, 4).unwrap();
        for v in inst.players() {
            let ab = v.value_of(&Interval::new(grid(a), grid(b)).unwrap());
            let bc = v.value_of(&Interval::new(grid(b), grid(c)).unwrap());
            let ac = v.value_of(&Interval::new(grid(a), grid(c)).unwrap());
            prop_assert_eq!(&ab + &bc, ac.clone());
            prop_assert!(ab <= ac && bc <= ac);
            prop_assert!(ac >= int(0) && ac <= int(1));
            prop_assert_eq!(v.value_of(&Interval::empty_at(grid(b)).unwrap()), int(0));
            prop_assert_eq!(v.value_of(&Interval::whole()), int(1));
        }
    }

    #[test]
    fn refine_covers_breakpoints(seed in any::<u64>(), n in 1usize..4) {
        let inst = seeded_instance(seed, n, 4).unwrap();
        let cells = refine(&inst);
        for v in inst.players() {
            for b in v.breakpoints() {
                prop_assert!(cells.boundaries().contains(b));
            }
        }
        let again = cells.with_points(cells.boundaries().iter());
        prop_assert_eq!(again.boundaries(), cells.boundaries());
    }

    #[test]
    fn documents_round_trip(seed in any::<u64>(), n in 1usize..4, complete in any::<bool>()) {
        let inst = seeded_instance(seed, n, 4).unwrap();
        prop_assert_eq!(parse_instance(&serialize_instance(&inst)).unwrap(), inst);
        let d = random_division(&mut rng_from_seed(seed), n, complete);
        prop_assert_eq!(parse_division(&serialize_division(&d)).unwrap(), d);
    }

    #[test]
    fn envy_free_iff_diagonal_is_row_max(seed in any::<u64>(), n in 1usize..4, complete in any::<bool>()) {
        let inst = seeded_instance(seed, n, 4).unwrap();
        let d = random_division(&mut rng_from_seed(seed ^ 0x5eed), n, complete);
        let m = envy_matrix(&inst, &d).unwrap();
        let by_rows = (0..n).all(|i| m.row(i).iter().all(|x| x <= m.get(i, i)));
        prop_assert_eq!(m.check().is_envy_free(), by_rows);
        prop_assert_eq!(m.diagonal(), utilities(&inst, &d).unwrap());
        let u = welfare(&inst, &d, WelfareKind::Utilitarian).unwrap().value;
        let e = welfare(&inst, &d, WelfareKind::Egalitarian).unwrap().value;
        prop_assert!(e <= u && u <= int(n as i64));
    }

    #[test]
    fn relabelling_players_permutes_the_matrix(seed in any::<u64>(), complete in any::<bool>()) {
        let n = 3;
        let inst = seeded_instance(seed, n, 4).unwrap();
        let d = random_division(&mut rng_from_seed(seed.wrapping_add(1)), n, complete);
        let perm = [2usize, 0, 1];
        let players: Vec<Valuation> = perm.iter().map(|&p| inst.player(p).clone()).collect();
        let pieces: Vec<Interval> = perm.iter().map(|&p| d.piece(p).clone()).collect();
        let inst2 = Instance::new(players, "permuted").unwrap();
        let d2 = Division::new(pieces);
        let m = envy_matrix(&inst, &d).unwrap();
        let m2 = envy_matrix(&inst2, &d2).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(m2.get(i, j), m.get(perm[i], perm[j]));
            }
        }
        for kind in [WelfareKind::Utilitarian, WelfareKind::Egalitarian] {
            prop_assert_eq!(welfare(&inst, &d, kind).unwrap(), welfare(&inst2, &d2, kind).unwrap());
        }
    }

    #[test]
    fn absorbing_never_hurts(seed in any::<u64>(), n in 1usize..4) {
        let inst = seeded_instance(seed, n, 4).unwrap();
        let d = random_division(&mut rng_from_seed(seed ^ 0xab), n, false);
        match absorb_leftover(&inst, &d) {
            Ok(full) => {
                prop_assert!(full.classify().unwrap().is_complete());
                let before = utilities(&inst, &d).unwrap();
                let after = utilities(&inst, &full).unwrap();
                prop_assert!(before.iter().zip(&after).all(|(b, a)| a >= b));
            }
            Err(e) => prop_assert_eq!(e, CakeError::NoAllocatedPiece),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn partial_optimum_dominates_complete(seed in any::<u64>(), n in 1usize..4, egalitarian in any::<bool>()) {
        let inst = seeded_instance(seed, n, 3).unwrap();
        let kind = if egalitarian { WelfareKind::Egalitarian } else { WelfareKind::Utilitarian };
        let report = dumping_report(&inst, kind, &SolverOptions::new(Mode::Complete, kind.into())).unwrap();
        prop_assert!(report.partial.value >= report.complete.value);
        for r in [&report.complete, &report.partial] {
            prop_assert!(envy_matrix(&inst, &r.witness).unwrap().check().is_envy_free());
            prop_assert_eq!(&welfare(&inst, &r.witness, kind).unwrap().value, &r.value);
        }
    }

    #[test]
    fn lp_objective_is_affine_in_cuts(seed in any::<u64>(), n in 1usize..4, pick in any::<prop::sample::Index>(),
                                      fractions in prop::collection::vec(0i64..=8, 6), partial in any::<bool>()) {
        let inst = seeded_instance(seed, n, 4).unwrap();
        let mode = if partial { Mode::Partial } else { Mode::Complete };
        let opts = SolverOptions::new(mode, Objective::Utilitarian);
        let (_, configs) = enumerate_configurations(&inst, &opts).unwrap();
        let configs: Vec<Configuration> = configs.collect();
        let config = &configs[pick.index(configs.len())];
        let lp = build_lp(&inst, mode, config, &Objective::Utilitarian).unwrap();
        let vars = mode.variables(n);
        let mut point: Vec<Rational> = Vec::with_capacity(lp.variables.len());
        for (k, var) in lp.variables.iter().enumerate() {
            let f = if k < vars { rat(fractions[k % fractions.len()], 8) } else { int(0) };
            let mut x = &var.lower + (&var.upper - &var.lower) * f;
            if k > 0 && k < vars && x < point[k - 1] {
                x = point[k - 1].clone();
            }
            point.push(x);
        }
        let division = configuration_division(&inst, mode, config, &point[..vars]).unwrap();
        prop_assert_eq!(
            lp.objective.eval(&point),
            welfare(&inst, &division, WelfareKind::Utilitarian).unwrap().value
        );
    }

    #[test]
    fn solver_is_deterministic(seed in any::<u64>(), n in 2usize..4) {
        let inst = seeded_instance(seed, n, 3).unwrap();
        let opts = SolverOptions::new(Mode::Partial, Objective::Egalitarian);
        let a = optimize(&inst, &opts.clone().with_parallelism(1)).unwrap();
        let b = optimize(&inst, &opts.with_parallelism(3)).unwrap();
        prop_assert_eq!(&a.witness, &b.witness);
        prop_assert_eq!(&a.value, &b.value);
        prop_assert_eq!(&a.config, &b.config);
    }

    #[test]
    fn grid_oracle_is_a_lower_bound(seed in any::<u64>(), n in 1usize..3) {
        let inst = seeded_instance(seed, n, 3).unwrap();
        let opts = SolverOptions::new(Mode::Partial, Objective::Utilitarian);
        let exact = optimize(&inst, &opts).unwrap();
        let grid = grid_oracle(&inst, &opts, 16).unwrap();
        prop_assert!(grid.value <= exact.value);
    }
}
