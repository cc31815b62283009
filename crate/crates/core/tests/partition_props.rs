use proptest::prelude::*;

use indset_core::partition::{self, Selection};
use indset_core::{Graph, GraphFamily};

fn family() -> impl Strategy<Value = GraphFamily> {
    prop_oneof![
        (1usize..80, 0.0..0.5f64).prop_map(|(n, p)| GraphFamily::ErdosRenyi { n, p }),
        (2usize..80, 1usize..4)
            .prop_map(|(n, m)| GraphFamily::BarabasiAlbert { n: n.max(m + 1), m }),
        (5usize..80, 0.0..1.0f64).prop_map(|(n, p)| GraphFamily::SmallWorld { n, k: 4, p }),
    ]
}

fn brute_force_exposure(g: &Graph, z: &[bool], v: usize) -> f64 {
    let nb = g.neighbors(v);
    if nb.is_empty() {
        return 0.0;
    }
    nb.iter().filter(|&&u| z[u]).count() as f64 / nb.len() as f64
}

proptest! {
    #[test]
    fn greedy_partition_is_maximal_independent(f in family(), seed: u64, min_degree: bool) {
        let g = f.generate(seed).unwrap();
        g.check_invariants().unwrap();
        let sel = if min_degree { Selection::MinDegree } else { Selection::Uniform };
        let p = partition::greedy_independent_set_with(&g, seed ^ 0x5a, sel);
        p.check(&g).unwrap();
        prop_assert_eq!(p.n_independent() + p.n_auxiliary(), g.n());
        for &u in p.independent() {
            for &v in p.independent() {
                prop_assert!(!g.has_edge(u, v));
            }
        }
        for &a in p.auxiliary() {
            prop_assert!(g.neighbors(a).iter().any(|v| p.independent().contains(v)));
        }
        prop_assert_eq!(p, partition::greedy_independent_set_with(&g, seed ^ 0x5a, sel));
    }

    #[test]
    fn exposure_matches_neighbor_counts(f in family(), seed: u64, coins: Vec<bool>) {
        let g = f.generate(seed).unwrap();
        let p = partition::greedy_independent_set(&g, seed);
        let gamma = partition::interference_matrix(&g, &p);
        prop_assert_eq!(gamma.rows(), p.n_independent());
        prop_assert_eq!(gamma.cols(), p.n_auxiliary());
        let z_a: Vec<bool> = (0..gamma.cols()).map(|c| coins.get(c).copied().unwrap_or(c % 3 == 0)).collect();
        let mut z = vec![false; g.n()];
        for (&v, &b) in p.auxiliary().iter().zip(&z_a) {
            z[v] = b;
        }
        let rho = partition::exposure(&gamma, &z_a).unwrap();
        let full = partition::full_exposure(&g, &z).unwrap();
        for (r, &v) in p.independent().iter().enumerate() {
            prop_assert!((0.0..=1.0).contains(&rho[r]));
            prop_assert!((rho[r] - brute_force_exposure(&g, &z, v)).abs() < 1e-15);
            prop_assert_eq!(rho[r], full[v]);
            let row_sum: f64 = (0..gamma.cols()).map(|c| gamma.entry(r, c)).sum();
            let expect = if gamma.is_isolated(r) { 0.0 } else { 1.0 };
            prop_assert!((row_sum - expect).abs() < 1e-12);
        }
        prop_assert!(partition::exposure(&gamma, &vec![false; gamma.cols() + 1]).is_err());
    }
}

#[test]
fn many_random_graphs_partition_correctly() {
    let mut checked = 0;
    for seed in 0..300u64 {
        let n = 50 + (seed as usize * 37) % 450;
        let f = match seed % 3 {
            0 => GraphFamily::ErdosRenyi {
                n,
                p: 8.0 / n as f64,
            },
            1 => GraphFamily::BarabasiAlbert {
                n,
                m: 1 + seed as usize % 3,
            },
            _ => GraphFamily::SmallWorld { n, k: 4, p: 0.1 },
        };
        let g = f.generate(seed).unwrap();
        partition::greedy_independent_set(&g, seed)
            .check(&g)
            .unwrap();
        checked += 1;
    }
    assert_eq!(checked, 300);
}
