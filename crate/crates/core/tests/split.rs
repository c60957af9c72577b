use relgraph_core::corpus::{Dataset, Vertical, Website};
use relgraph_core::eval::{make_split, SplitSpec};
use relgraph_core::RawPage;

fn site(v: &str, w: &str, pages: usize) -> Website {
    Website {
        id: w.into(),
        vertical_id: v.into(),
        pages: (0..pages).map(|p| RawPage::new(format!("p{p}"), w, v, "<p>x</p>")).collect(),
        annotations: Vec::new(),
        sidecars: Default::default(),
    }
}

fn dataset(shape: &[(&str, &[usize])]) -> Dataset {
    Dataset {
        verticals: shape
            .iter()
            .map(|(v, sizes)| Vertical {
                id: v.to_string(),
                keywords: Vec::new(),
                websites: sizes.iter().enumerate().map(|(i, &n)| site(v, &format!("w{i}"), n)).collect(),
            })
            .collect(),
        diagnostics: Vec::new(),
    }
}

fn pages(ds: &Dataset, keys: &[relgraph_core::eval::WebsiteKey]) -> usize {
    keys.iter()
        .map(|k| ds.vertical(&k.vertical).unwrap().websites.iter().find(|w| w.id == k.website).unwrap().pages.len())
        .sum()
}

#[test]
fn intra_split_lands_near_half_the_pages() {
    let ds = dataset(&[("a", &[300, 100, 100])]);
    for seed in 0..20 {
        let s = make_split(&ds, &SplitSpec::intra(seed)).unwrap();
        let train = pages(&ds, &s.train);
        // 300 first gives 300; 100,100,300 gives 200; 100,300,100 ties
        // between 100 and 400 and takes the larger prefix.
        assert!([200, 300, 400].contains(&train), "seed {seed}: {train}");
        assert_eq!(train + pages(&ds, &s.test), 500);
        assert!(s.train.iter().all(|k| !s.test.contains(k)));
    }
}

#[test]
fn intra_split_skips_single_site_verticals() {
    let ds = dataset(&[("a", &[5, 5]), ("solo", &[7])]);
    let s = make_split(&ds, &SplitSpec::intra(1)).unwrap();
    assert_eq!(s.single_website_verticals, ["solo"]);
    assert_eq!((s.train.len(), s.test.len()), (1, 1));
}

#[test]
fn inter_split_holds_out_the_whole_vertical() {
    let ds = dataset(&[("a", &[3, 4]), ("b", &[5, 6, 7]), ("c", &[2])]);
    let s = make_split(&ds, &SplitSpec::inter("b", 0)).unwrap();
    assert!(s.train.iter().all(|k| k.vertical != "b"));
    assert!(s.test.iter().all(|k| k.vertical == "b"));
    assert_eq!(pages(&ds, &s.test), 18);
    assert_eq!(pages(&ds, &s.train), 9);
    assert!(make_split(&ds, &SplitSpec::inter("zzz", 0)).is_err());
}

#[test]
fn split_is_a_function_of_the_seed() {
    let ds = dataset(&[("a", &[10, 20, 30, 40]), ("b", &[5, 5, 5])]);
    assert_eq!(make_split(&ds, &SplitSpec::intra(4)).unwrap(), make_split(&ds, &SplitSpec::intra(4)).unwrap());
}
