use dsi3d_core::descindex::{exact_search, hamming, lsh_build, lsh_search, DescriptorMatrix};
use dsi3d_core::seed::named_rng;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn random_matrix(rng: &mut impl Rng, n: usize, d: usize) -> DescriptorMatrix {
    let mut m = DescriptorMatrix::new(d);
    for i in 0..n {
        let row: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        m.push(i, &row).unwrap();
    }
    m
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

#[test]
fn exact_search_matches_full_sort() {
    let mut rng = named_rng(1, "exact");
    for _ in 0..20 {
        let m = random_matrix(&mut rng, 50, 16);
        let q: Vec<f64> = (0..16).map(|_| rng.sample(StandardNormal)).collect();
        let mut all: Vec<(usize, f64)> = m.rows().map(|(id, r)| (id, cosine(&q, r))).collect();
        all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let got = exact_search(&q, &m, 50, |_| false).unwrap();
        assert_eq!(got.len(), 50);
        for (g, w) in got.iter().zip(&all) {
            assert_eq!(g.0, w.0);
            assert!((g.1 - w.1).abs() < 1e-12);
        }
    }
}

#[test]
fn exact_search_self_match_and_orthogonal_ties() {
    let mut rng = named_rng(2, "exact-self");
    let m = random_matrix(&mut rng, 30, 8);
    let q = m.row(17).to_vec();
    let top = exact_search(&q, &m, 1, |_| false).unwrap();
    assert_eq!(top[0].0, 17);
    assert!((top[0].1 - 1.0).abs() < 1e-12);

    let mut axis = DescriptorMatrix::new(3);
    for i in 0..4 {
        axis.push(i, &[0.0, 1.0 + i as f64, 0.0]).unwrap();
    }
    let got = exact_search(&[1.0, 0.0, 0.0], &axis, 4, |_| false).unwrap();
    assert_eq!(got.iter().map(|h| h.0).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    assert!(got.iter().all(|h| h.1 == 0.0));
}

#[test]
fn lsh_matches_brute_force_hamming() {
    let mut rng = named_rng(3, "lsh");
    for seed in 0..10 {
        let m = random_matrix(&mut rng, 60, 12);
        let idx = lsh_build(&m, 40, seed).unwrap();
        let q: Vec<f64> = (0..12).map(|_| rng.sample(StandardNormal)).collect();
        // Independent bit computation from the stored hyperplanes.
        let bits = |v: &[f64]| -> Vec<bool> {
            (0..40)
                .map(|h| {
                    let plane = &idx.hyperplanes()[h * 12..(h + 1) * 12];
                    plane.iter().zip(v).map(|(&a, b)| a as f64 * b).sum::<f64>() >= 0.0
                })
                .collect()
        };
        let qb = bits(&q);
        let mut all: Vec<(usize, u32)> = m
            .rows()
            .map(|(id, r)| (id, bits(r).iter().zip(&qb).filter(|(a, b)| a != b).count() as u32))
            .collect();
        all.sort_by_key(|&(id, d)| (d, id));
        let excluded = |id: usize| id.is_multiple_of(7);
        all.retain(|(id, _)| !excluded(*id));
        let got = lsh_search(&q, &idx, 10, excluded).unwrap();
        assert_eq!(got, all[..10].to_vec());
    }
}

#[test]
fn lsh_sign_symmetries() {
    let mut rng = named_rng(4, "lsh-sign");
    let m = random_matrix(&mut rng, 5, 9);
    let idx = lsh_build(&m, 70, 1).unwrap();
    let v = m.row(2).to_vec();
    let neg: Vec<f64> = v.iter().map(|x| -x).collect();
    assert_eq!(idx.hash(&v).unwrap(), idx.hash(&v).unwrap());
    assert_eq!(hamming(&idx.hash(&v).unwrap(), &idx.hash(&neg).unwrap()), 70);
    let top = lsh_search(&v, &idx, 1, |_| false).unwrap();
    assert_eq!(top[0], (2, 0));

    let one = lsh_build(&m, 1, 1).unwrap();
    let hits = lsh_search(&v, &one, 5, |_| false).unwrap();
    assert!(hits.iter().all(|h| h.1 <= 1));
    assert!(hits.windows(2).all(|w| w[0].1 <= w[1].1));
}

#[test]
fn near_duplicates_hash_closer_than_random_pairs() {
    let mut rng = named_rng(5, "lsh-near");
    let m = random_matrix(&mut rng, 100, 16);
    let idx = lsh_build(&m, 32, 9).unwrap();
    let (mut near, mut random) = (0.0, 0.0);
    for i in 0..100 {
        let v: Vec<f64> = m.row(i).iter().map(|x| x + 0.05 * rng.sample::<f64, _>(StandardNormal)).collect();
        near += hamming(&idx.hash(&v).unwrap(), idx.code(i)) as f64;
        random += hamming(idx.code(i), idx.code((i + 37) % 100)) as f64;
    }
    assert!(near < random);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_search_prefix_of_full_ranking(seed in 0u64..10_000, n in 1usize..40, k in 1usize..10) {
        let mut rng = named_rng(seed, "exact-prop");
        let m = random_matrix(&mut rng, n, 6);
        let q: Vec<f64> = (0..6).map(|_| rng.sample(StandardNormal)).collect();
        let full = exact_search(&q, &m, n, |_| false).unwrap();
        let top = exact_search(&q, &m, k, |_| false).unwrap();
        prop_assert_eq!(&full[..k.min(n)], &top[..]);
        prop_assert!(full.windows(2).all(|w| w[0].1 >= w[1].1));
    }
}
