//! Randomized invariants across the library. Inputs come from a proptest
//! seed fed to the library's seeded generators, so failures shrink to a seed.

use std::collections::BTreeSet;

use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::Rng;

use slalom_core::chain::{is_centered, kelley_number, linked_partition, saturation_witness};
use slalom_core::construct::{bounding_search, independent_subsets, pattern_counts, Bounding};
use slalom_core::forcing::{cohen_project, d, d_split, lift, mathias_embed, mathias_le, q_order, CohenCondition};
use slalom_core::gen;
use slalom_core::ideal::{status_of, Ideal, Status};
use slalom_core::measure::{mu, nu, term_measure, SlalomName};
use slalom_core::omega::{
    canonicalize, conjunct_infinitude, enum_omega, eval_term, member, Conjunct, Generator, MeetVerdict, OmegaPoint,
    Term,
};
use slalom_core::slalom::{almost_subset, diagonal_real, enum_bijection, enum_bijection_inverse, graph_of, localizes};
use slalom_core::{Exec, Slalom};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn window<R: Rng>(rng: &mut R, max_level: u32) -> OmegaPoint {
    let level = rng.gen_range(1..=max_level);
    OmegaPoint::new(gen::slalom(rng, level, 2).below(level)).unwrap()
}

fn overlap_sum(a: &Slalom, b: &Slalom) -> slalom_core::Rational {
    (0..a.horizon().max(b.horizon()))
        .map(|n| {
            let both = a.level_or_empty(n).intersection(&b.level_or_empty(n)).len();
            slalom_core::rational::density(both, n)
        })
        .sum()
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn union_sum_is_inclusion_exclusion(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let a = gen::slalom(&mut rng, 9, 4);
        let b = gen::slalom(&mut rng, 9, 4);
        let u = a.union(&b).unwrap();
        prop_assert_eq!(u.partial_sum(), a.partial_sum() + b.partial_sum() - overlap_sum(&a, &b));
        let sub = gen::subslalom(&mut rng, &a);
        prop_assert!(sub.partial_sum() <= a.partial_sum());
    }

    #[test]
    fn graphs_are_light(seed in any::<u64>(), h in 1u32..16) {
        let f = gen::path(&mut gen::rng(seed), h);
        let g = graph_of(&f);
        prop_assert_eq!(status_of(&g, Ideal::W), Status::Yes);
        prop_assert!(g.partial_sum() < slalom_core::Rational::one());
    }

    #[test]
    fn level_enumeration_round_trips(level in 0u32..40, raw in any::<u64>()) {
        let column = raw % (1u64 << level);
        let x = enum_bijection(level, column).unwrap();
        prop_assert!(x > 0);
        prop_assert_eq!(enum_bijection_inverse(x).unwrap(), (level, column));
    }

    #[test]
    fn diagonal_escapes(seed in any::<u64>()) {
        let s = gen::slalom(&mut gen::rng(seed), 10, 3);
        let f = diagonal_real(&s).unwrap();
        prop_assert!(!localizes(&s, &[f])[0].is_yes());
    }

    #[test]
    fn almost_subset_is_a_preorder(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let c = gen::slalom(&mut rng, 8, 4);
        let b = gen::subslalom(&mut rng, &c);
        let a = gen::subslalom(&mut rng, &b);
        prop_assert!(almost_subset(&a, &a).is_yes());
        prop_assert!(almost_subset(&a, &b).is_yes() && almost_subset(&b, &c).is_yes());
        prop_assert!(almost_subset(&a, &c).is_yes());
    }

    #[test]
    fn canonical_form_is_idempotent(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let w = window(&mut rng, 4);
        let a = gen::slalom_maybe_saturated(&mut rng, 7, 3, 0.2);
        if let Ok(p) = canonicalize(&a, &w) {
            prop_assert_eq!(canonicalize(p.set_part(), p.window()).unwrap(), p);
        }
    }

    #[test]
    fn measure_is_additive_and_monotone(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let pos: Vec<Slalom> = (0..rng.gen_range(1..=2)).map(|_| gen::slalom(&mut rng, 7, 3)).collect();
        let b = gen::slalom(&mut rng, 7, 3);
        let name = if rng.gen_bool(0.5) { SlalomName::Generic } else { SlalomName::Windowed(window(&mut rng, 3)) };
        let whole = term_measure(&pos, &[], &name).unwrap().value;
        let mut with_b = pos.clone();
        with_b.push(b.clone());
        let inside = term_measure(&with_b, &[], &name).unwrap().value;
        let outside = term_measure(&pos, &[b], &name).unwrap().value;
        prop_assert_eq!(&inside + &outside, whole.clone());
        prop_assert!(inside <= whole);
    }

    #[test]
    fn nu_vanishes_on_finite_meets(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let sat = gen::slalom_maybe_saturated(&mut rng, 6, 3, 1.0);
        let c = Conjunct::new(vec![Generator::Set(sat), Generator::Set(gen::slalom(&mut rng, 6, 2))], vec![]);
        if matches!(conjunct_infinitude(&c).unwrap(), MeetVerdict::Infinite(_)) {
            return Ok(());
        }
        let t = Term::conjunct(c);
        for _ in 0..5 {
            let p = window(&mut rng, 6);
            prop_assert!(nu(&p, &t, Exec::Sequential).unwrap().value.is_zero());
        }
    }

    #[test]
    fn mu_lower_bound_grows_with_k(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let t = Term::generator(Generator::Set(gen::slalom(&mut rng, 6, 2)))
            .and(&Term::generator(Generator::Window(window(&mut rng, 2))));
        let a = mu(&t, 8, Exec::Sequential).unwrap().value;
        let b = mu(&t, 24, Exec::Sequential).unwrap().value;
        prop_assert!(a.lo <= b.lo && b.hi <= a.hi);
    }

    #[test]
    fn centeredness_is_antitone_and_matches_kelley(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let mut terms: Vec<Term> = (0..2)
            .map(|_| {
                let g = if rng.gen_bool(0.5) { Generator::Window(window(&mut rng, 2)) } else { Generator::Set(gen::slalom(&mut rng, 4, 2)) };
                if rng.gen_bool(0.3) { Term::not_generator(g) } else { Term::generator(g) }
            })
            .collect();
        let before = is_centered(&terms).unwrap();
        terms.push(Term::generator(Generator::Window(window(&mut rng, 2))));
        let after = is_centered(&terms).unwrap();
        prop_assert!(!after || before);
        if terms.iter().all(|t| slalom_core::omega::term_is_infinite(t).unwrap()) {
            let k = kelley_number(&terms, 3, Exec::Sequential).unwrap();
            prop_assert_eq!(k.is_one(), after);
        }
    }

    #[test]
    fn bounding_matches_saturation(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let family: Vec<Slalom> = (0..rng.gen_range(1..5)).map(|_| gen::slalom(&mut rng, 5, 6)).collect();
        let bound = bounding_search(&family, 5).unwrap();
        prop_assert_eq!(matches!(bound, Bounding::Bound(_)), saturation_witness(&family).is_none());
        if let Bounding::Bound(u) = bound {
            prop_assert!(family.iter().all(|s| s.is_levelwise_subset(&u)));
        }
    }

    #[test]
    fn linked_buckets_have_unions_in_s(seed in any::<u64>(), n in 2u32..5) {
        let mut rng = gen::rng(seed);
        let family: Vec<Slalom> = (0..12).map(|_| gen::slalom(&mut rng, 7, 1)).collect();
        let p = linked_partition(&family, n).unwrap();
        prop_assert!(p.verified());
    }

    #[test]
    fn d_splits_below_half(n in 2u32..6, seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let f = gen::level_set(&mut rng, n, (1u64 << (n - 1)) - 1);
        let (b, c) = d_split(n, &f).unwrap();
        prop_assert!(f.is_subset(&b) && f.is_subset(&c));
        prop_assert_eq!(b.len(), (1u64 << n) - 1);
        prop_assert_eq!(c.len(), (1u64 << n) - 1);
        prop_assert_ne!(d(n, &b).unwrap(), d(n, &c).unwrap());
    }
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn empty_generator_holds_everywhere_and_membership_is_antitone(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let b = gen::slalom(&mut rng, 4, 3);
        let a = gen::subslalom(&mut rng, &b);
        let empty = Generator::Set(Slalom::empty(0));
        for p in enum_omega(3, Exec::Sequential).unwrap() {
            prop_assert!(member(&empty, &p));
            prop_assert!(!member(&Generator::Set(b.clone()), &p) || member(&Generator::Set(a.clone()), &p));
        }
    }

    #[test]
    fn projection_preserves_order_and_lifts_hit(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let level = rng.gen_range(2..=3);
        let w = OmegaPoint::new(gen::slalom(&mut rng, level, 2).below(level)).unwrap();
        let Ok(q) = canonicalize(&gen::slalom(&mut rng, 5, 2), &w) else { return Ok(()) };
        let sigma = cohen_project(&q, 6).unwrap();
        let mut entries = sigma.entries().clone();
        for k in q.window().level().max(2)..6 {
            if !entries.contains_key(&k) && rng.gen_bool(0.5) {
                entries.insert(k, rng.gen_bool(0.5));
            }
        }
        let tau = CohenCondition::new(entries).unwrap();
        let p = lift(&q, &tau).unwrap();
        prop_assert!(q_order(&p, &q));
        let image = cohen_project(&p, 7).unwrap();
        prop_assert_eq!(&image, &tau);
        prop_assert!(image.extends(&sigma));
        prop_assert!(mathias_le(&mathias_embed(&p), &mathias_embed(&q)));
    }

    #[test]
    fn embedding_separates_and_reflects_order(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let (wp, wq) = (window(&mut rng, 3), window(&mut rng, 3));
        let (Ok(p), Ok(q)) = (
            canonicalize(&gen::slalom(&mut rng, 5, 2), &wp),
            canonicalize(&gen::slalom(&mut rng, 5, 2), &wq),
        ) else { return Ok(()) };
        let (ep, eq) = (mathias_embed(&p), mathias_embed(&q));
        prop_assert_eq!(p == q, ep == eq);
        prop_assert_eq!(q_order(&p, &q), mathias_le(&ep, &eq));
        prop_assert!(ep.violations(8).is_empty() && ep.in_range());
    }

    #[test]
    fn pattern_counts_are_exact(r in 1u32..6, t in 1u64..4) {
        let m = t << r;
        let sets = independent_subsets(r, t, m).unwrap();
        let counts = pattern_counts(&sets, m);
        prop_assert!(counts.iter().all(|&c| c == t));
        let scanned: BTreeSet<u64> = (0..m)
            .filter(|x| sets.iter().all(|s| s.contains(x)))
            .collect();
        prop_assert_eq!(scanned.len() as u64, t);
    }

    #[test]
    fn witness_points_satisfy_their_meets(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let c = Conjunct::new(
            vec![Generator::Set(gen::slalom(&mut rng, 5, 3)), Generator::Window(window(&mut rng, 3))],
            vec![Generator::Set(gen::slalom(&mut rng, 5, 1))],
        );
        if let MeetVerdict::Infinite(schema) = conjunct_infinitude(&c).unwrap() {
            let t = Term::conjunct(c);
            for m in schema.start()..schema.start() + 5 {
                prop_assert!(eval_term(&t, &schema.point(m).unwrap()));
            }
        }
    }
}
