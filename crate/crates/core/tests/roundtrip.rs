mod common;

use common::random_space;
use emofit::embedding_io::{read_embeddings, write_embeddings};
use emofit::{load_embeddings, save_embeddings, EmbeddingFormat, LoadOptions, VectorSpace};
use proptest::prelude::*;

const FORMATS: [EmbeddingFormat; 2] = [EmbeddingFormat::GloveText, EmbeddingFormat::Word2VecText];

fn assert_same(a: &VectorSpace, b: &VectorSpace) {
    assert_eq!(a.tokens(), b.tokens());
    assert_eq!(a.dim(), b.dim());
    for (x, y) in a.matrix().iter().zip(b.matrix().iter()) {
        assert!((x - y).abs() <= 1e-6, "{} vs {}", x, y);
    }
}

#[test]
fn thousand_word_space_survives_both_formats() {
    let space = random_space(7, 1000, 50);
    let dir = tempfile::tempdir().unwrap();
    for format in FORMATS {
        let path = dir.path().join(format!("{:?}.txt", format));
        save_embeddings(&space, &path, format).unwrap();
        let (back, stats) = load_embeddings(&path, format, &LoadOptions::default()).unwrap();
        assert_eq!(stats.records, 1000);
        assert_same(&space, &back);
        // Shortest round-trip formatting makes the values bit-identical.
        assert_eq!(space.matrix(), back.matrix());
    }
}

#[test]
fn saving_a_loaded_file_reproduces_its_bytes() {
    let space = random_space(8, 200, 9);
    let dir = tempfile::tempdir().unwrap();
    for format in FORMATS {
        let first = dir.path().join("first.txt");
        let second = dir.path().join("second.txt");
        save_embeddings(&space, &first, format).unwrap();
        let (loaded, _) = load_embeddings(&first, format, &LoadOptions::default()).unwrap();
        save_embeddings(&loaded, &second, format).unwrap();
        assert_eq!(
            std::fs::read(&first).unwrap(),
            std::fs::read(&second).unwrap()
        );
    }
}

#[test]
fn word2vec_output_carries_a_matching_header() {
    let space = random_space(9, 13, 4);
    let mut out = Vec::new();
    write_embeddings(&space, &mut out, EmbeddingFormat::Word2VecText).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "13 4");
    assert_eq!(text.lines().count(), 14);
}

#[test]
fn committed_toy_fixture_loads_in_order() {
    let (space, stats) = load_embeddings(
        common::fixture("toy_space.txt"),
        EmbeddingFormat::GloveText,
        &LoadOptions::default(),
    )
    .unwrap();
    assert_eq!(space.len(), 12);
    assert_eq!(space.dim(), 6);
    assert_eq!(&space.tokens()[..4], ["joy", "sadness", "anger", "fear"]);
    assert_eq!(stats.duplicates_skipped, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn arbitrary_spaces_round_trip(
        rows in prop::collection::vec(prop::collection::vec(-1e30f32..1e30f32, 3), 1..20),
        glove in any::<bool>(),
    ) {
        let space = VectorSpace::from_rows(
            rows.into_iter().enumerate().map(|(i, r)| (format!("tok{}·ü", i), r)),
        )
        .unwrap();
        let format = if glove { EmbeddingFormat::GloveText } else { EmbeddingFormat::Word2VecText };
        let mut buf = Vec::new();
        write_embeddings(&space, &mut buf, format).unwrap();
        let (back, _) = read_embeddings(&buf[..], format, &LoadOptions::default()).unwrap();
        prop_assert_eq!(space.tokens(), back.tokens());
        prop_assert_eq!(space.matrix(), back.matrix());
    }

    #[test]
    fn f64_values_are_written_in_round_trip_form(values in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..40)) {
        let rows: Vec<(String, Vec<f64>)> = values.iter().enumerate().map(|(i, &v)| (format!("w{}", i), vec![v, -v])).collect();
        let space = VectorSpace::<f64>::from_rows(rows).unwrap();
        let mut buf = Vec::new();
        write_embeddings(&space, &mut buf, EmbeddingFormat::GloveText).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for (line, &v) in text.lines().zip(&values) {
            let fields: Vec<f64> = line.split(' ').skip(1).map(|f| f.parse().unwrap()).collect();
            prop_assert_eq!(fields, vec![v, -v]);
        }
    }
}
