use nalgebra::DMatrix;
use proptest::prelude::*;

use xlign::embeddings::{parse_vec, write_vec, EmbeddingSpace, ReadOptions};
use xlign::map::{parse_map, write_map, LinearMap};

fn round_trip(space: &EmbeddingSpace) -> EmbeddingSpace {
    let mut buf = Vec::new();
    write_vec(space, &mut buf).unwrap();
    parse_vec(buf.as_slice(), ReadOptions::default()).unwrap()
}

fn agree_to_12_digits(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

proptest! {
    #[test]
    fn vec_files_round_trip(
        (n, d, values) in (1usize..20, 1usize..12)
            .prop_flat_map(|(n, d)| (Just(n), Just(d), prop::collection::vec(-1e6f64..1e6, n * d)))
    ) {
        let vocab = (0..n).map(|i| format!("w{i}·x")).collect();
        let space = EmbeddingSpace::new(vocab, DMatrix::from_vec(d, n, values)).unwrap();
        let back = round_trip(&space);
        prop_assert_eq!(back.vocab(), space.vocab());
        for (a, b) in space.matrix().iter().zip(back.matrix().iter()) {
            prop_assert!(agree_to_12_digits(*a, *b), "{} vs {}", a, b);
        }
    }

    #[test]
    fn map_files_round_trip(values in prop::collection::vec(-10f64..10.0, 16)) {
        let map = LinearMap::new(DMatrix::from_vec(4, 4, values), false).unwrap();
        let mut buf = Vec::new();
        write_map(&map, &mut buf).unwrap();
        prop_assert_eq!(parse_map(buf.as_slice()).unwrap(), map);
    }
}

#[test]
fn random_50_by_100_space_is_bit_stable() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(50);
    let m = xlign::linalg::gaussian_matrix(50, 100, &mut rng);
    let space = EmbeddingSpace::new((0..100).map(|i| i.to_string()).collect(), m).unwrap();
    assert_eq!(round_trip(&space), space);
}
