//! Fuzzes the merge-tree JSON reader and checks the write/read fixpoint,
//! plus every flat cut the tree admits.

#![no_main]

use libfuzzer_sys::fuzz_target;
use volcp::cluster::Dendrogram;

fuzz_target!(|data: &[u8]| {
    if let Ok(tree) = Dendrogram::from_json_reader(data) {
        let mut first = Vec::new();
        tree.to_json_writer(&mut first).expect("serialize parsed tree");
        let reread =
            Dendrogram::from_json_reader(first.as_slice()).expect("reparse serialized tree");
        let mut second = Vec::new();
        reread.to_json_writer(&mut second).expect("serialize reparsed tree");
        assert_eq!(first, second, "dendrogram round-trip is not a fixpoint");

        // Every admissible flat cut must label all leaves with ids 0..k.
        let m = tree.leaf_order().len();
        for k in 1..=m {
            let labels = tree.cut(k).expect("cut a validated tree");
            assert_eq!(labels.len(), m, "cut lost leaves");
            assert!(labels.iter().all(|&l| l < k), "cut produced an out-of-range label");
        }
    }
});
