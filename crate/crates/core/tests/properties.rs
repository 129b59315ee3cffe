use fwdlab_core::arbiterize::{arbiter_context, arbiterize};
use fwdlab_core::dynamics::struct_canon;
use fwdlab_core::logic_cll::{dual, dual_context};
use fwdlab_core::oracle::{random_global_type, random_prop};
use fwdlab_core::surface::{
    parse_context, parse_global_type, parse_process, parse_proposition, print_context, print_global_type,
    print_process, print_process_pretty, print_proposition,
};
use fwdlab_core::terms::{Name, Process, Prop};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn prop_strategy() -> impl Strategy<Value = Prop> {
    (any::<u64>(), 1usize..8).prop_map(|(seed, depth)| {
        random_prop(&mut ChaCha8Rng::seed_from_u64(seed), depth, &["a", "b", "cost"])
    })
}

fn arbiter_strategy() -> impl Strategy<Value = Process> {
    (0u64..5000, 1usize..9).prop_map(|(seed, size)| arbiterize(&random_global_type(seed, size).0))
}

proptest! {
    #[test]
    fn dual_is_an_involution(a in prop_strategy()) {
        prop_assert_eq!(dual(&dual(&a)), a.clone());
        prop_assert_eq!(dual(&a).size(), a.size());
    }

    #[test]
    fn proposition_round_trip(a in prop_strategy()) {
        prop_assert_eq!(parse_proposition(&print_proposition(&a)).unwrap(), a);
    }

    #[test]
    fn process_round_trip(p in arbiter_strategy()) {
        let back = parse_process(&print_process(&p)).unwrap();
        prop_assert!(back.alpha_eq(&p));
        let pretty = parse_process(&print_process_pretty(&p)).unwrap();
        prop_assert!(pretty.alpha_eq(&p));
    }

    #[test]
    fn global_and_context_round_trip(seed in 0u64..5000, size in 1usize..9) {
        let (g, delta) = random_global_type(seed, size);
        prop_assert_eq!(parse_global_type(&print_global_type(&g)).unwrap(), g);
        prop_assert_eq!(parse_context(&print_context(&delta)).unwrap(), delta.clone());
        prop_assert_eq!(dual_context(&dual_context(&delta)), delta.clone());
        prop_assert_eq!(arbiter_context(&delta).len(), delta.len());
    }

    #[test]
    fn substitution_moves_one_free_name(p in arbiter_strategy(), pick in any::<prop::sample::Index>()) {
        let free: Vec<Name> = p.free_names().into_iter().collect();
        let x = pick.get(&free).clone();
        let z = Name::new("zz");
        let q = p.substitute(&x, &z);
        let mut expected = p.free_names();
        expected.remove(&x);
        expected.insert(z.clone());
        prop_assert_eq!(q.free_names(), expected);
        prop_assert!(q.substitute(&z, &x).alpha_eq(&p));
    }

    #[test]
    fn alpha_equivalence_ignores_binder_names(p in arbiter_strategy()) {
        prop_assert!(p.refresh_bound().alpha_eq(&p));
        prop_assert_eq!(p.refresh_bound().canonical(), p.canonical());
    }

    #[test]
    fn canonical_forms_are_idempotent(p in arbiter_strategy()) {
        let c = p.canonical();
        prop_assert_eq!(c.canonical(), c.clone());
        let s = struct_canon(&p);
        prop_assert_eq!(struct_canon(&s), s.clone());
        prop_assert_eq!(struct_canon(&p.refresh_bound()), s);
    }
}
