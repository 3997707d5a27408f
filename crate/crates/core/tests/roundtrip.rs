use mrmkg::convert::{convert_facts, extract_hyperfacts};
use mrmkg::rdf_io::{parse_turtle_star, parse_wd50k, serialize, Format, PrefixTable};
use mrmkg::synthetic::{clustered_hrkg, random_hyperfacts, to_csv, ClusteredConfig};
use mrmkg::{HyperFact, Mrm};
use proptest::prelude::*;

fn sorted(facts: &[HyperFact]) -> Vec<String> {
    let mut v: Vec<String> = facts.iter().map(|f| format!("{f:?}")).collect();
    v.sort();
    v
}

#[test]
fn bundled_csv_is_the_generator_output() {
    let text = include_str!("../data/synthetic50.csv");
    assert_eq!(text, to_csv(&clustered_hrkg(&ClusteredConfig::bundled())));
    assert_eq!(parse_wd50k(text, false).unwrap().len(), 50);
}

#[test]
fn csv_parse_is_inverse_of_write() {
    let facts = clustered_hrkg(&ClusteredConfig { facts: 300, seed: 11, ..ClusteredConfig::default() });
    let back = parse_wd50k(&to_csv(&facts), false).unwrap();
    assert_eq!(sorted(&facts), sorted(&back));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn files_round_trip_every_model(n in 1usize..60, q in 0usize..5, seed in any::<u64>(), m in 0usize..3,
                                   nt in any::<bool>()) {
        let mrm = Mrm::ALL[m];
        let facts = random_hyperfacts(n, q, seed);
        let g = convert_facts(&facts, mrm, false).unwrap();
        let format = if nt { Format::NTriplesStar } else { Format::TurtleStar };
        let prefixes = PrefixTable::default();
        let text = serialize(&g, format, &prefixes).unwrap();
        let parsed = parse_turtle_star(&text, &prefixes).unwrap();
        prop_assert_eq!(parsed.len(), g.len());
        let back = extract_hyperfacts(&parsed, mrm).unwrap();
        prop_assert_eq!(sorted(&facts), sorted(&back));
    }

    #[test]
    fn model_to_model_through_facts(n in 1usize..40, seed in any::<u64>(), a in 0usize..3, b in 0usize..3) {
        let facts = random_hyperfacts(n, 3, seed);
        let ga = convert_facts(&facts, Mrm::ALL[a], false).unwrap();
        let mid = extract_hyperfacts(&ga, Mrm::ALL[a]).unwrap();
        let gb = convert_facts(&mid, Mrm::ALL[b], false).unwrap();
        prop_assert_eq!(sorted(&extract_hyperfacts(&gb, Mrm::ALL[b]).unwrap()), sorted(&facts));
    }
}
