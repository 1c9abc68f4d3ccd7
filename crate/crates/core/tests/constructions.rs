use deltasys::constructions::{
    block_product_family, chain_family, check_tree_properties, hadamard_family, hadamard_matrix, parity_triple_family,
    residue_avoiding_family, tree_family,
};
use deltasys::oracle::{exact_clique_number, verify_no_l_sunflower};
use deltasys::SizeSet;

#[test]
fn chain_families_have_no_sunflower_with_m_plus_one_petals() {
    for (k, m, n) in [(2, 2, 3), (2, 3, 4), (3, 2, 3), (3, 2, 4), (4, 2, 2)] {
        let c = chain_family(k, m, n).unwrap();
        assert_eq!(c.family.len(), n.pow(k as u32 - 2) * m.pow(k as u32));
        assert!(
            verify_no_l_sunflower(&c.family, &SizeSet::new([1]), m + 1).0,
            "k={k} m={m} n={n}"
        );
        assert!(!verify_no_l_sunflower(&c.family, &SizeSet::new([1]), m).0 || n < m);
    }
}

#[test]
fn tree_families_pass_oracle() {
    for (k, l, m, n) in [
        (3, vec![1, 2], 2, 3),
        (3, vec![1], 2, 2),
        (4, vec![1, 2], 2, 2),
        (4, vec![1, 3], 2, 2),
        (4, vec![1, 2, 3], 2, 2),
    ] {
        let tf = tree_family(k, &l, m, n).unwrap();
        assert!(check_tree_properties(&tf).is_empty(), "k={k} L={l:?}");
        let sizes = SizeSet::new(l.iter().copied());
        assert!(
            verify_no_l_sunflower(&tf.construction.family, &sizes, m + 1).0,
            "k={k} L={l:?}"
        );
    }
}

#[test]
fn product_family_has_no_m_petal_sunflower() {
    let base = chain_family(2, 2, 3).unwrap().family;
    let c = block_product_family(3, &[0, 2], 3, &base, 1).unwrap();
    assert_eq!(c.family.len(), 2 * base.len());
    c.check_guarantee().unwrap();
    assert!(verify_no_l_sunflower(&c.family, &SizeSet::new([0, 2]), 3).0);
}

#[test]
fn residue_families_avoid_the_residue() {
    for (k, p, a, n) in [(4, 2, 1, 12), (6, 3, 2, 20), (6, 3, 1, 20), (4, 2, 1, 20)] {
        let c = residue_avoiding_family(k, p, a, n).unwrap();
        let f = &c.family;
        for i in 0..f.len() {
            for j in i + 1..f.len() {
                assert_ne!(f.inter(i, j) % p, a, "k={k} p={p} a={a}");
            }
        }
    }
}

#[test]
fn hadamard_rows_orthogonal_and_family_even() {
    for order in [2, 4, 8, 12, 20, 28] {
        let h = hadamard_matrix(order).unwrap();
        for i in 0..order {
            for j in 0..order {
                let dot: i32 = (0..order).map(|c| (h[i][c] as i32) * (h[j][c] as i32)).sum();
                assert_eq!(dot, if i == j { order as i32 } else { 0 });
            }
        }
    }
    let c = hadamard_family(2, 4).unwrap();
    assert_eq!(c.family.len(), 14);
    for i in 0..c.family.len() {
        for j in i + 1..c.family.len() {
            assert_eq!(c.family.inter(i, j) % 2, 0);
        }
    }
}

#[test]
fn parity_family_clique_number() {
    let c = parity_triple_family(4, 5).unwrap();
    assert_eq!(c.family.len(), 40);
    let odd = SizeSet::new([1, 3]);
    assert!(exact_clique_number(&c.family, &odd, 10_000).unwrap() <= 4);
}
