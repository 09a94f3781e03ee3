//! Hand-counted expectations for the JATS fixtures in `fixtures/jats`.
//! Shared with the CLI acceptance suite.

use std::path::PathBuf;

pub struct Case {
    pub file: &'static str,
    pub doc_id: &'static str,
    pub year: i32,
    pub paragraphs: usize,
    pub markers: usize,
    /// (ref id, resolved identifier or `None` when unidentifiable)
    pub refs: &'static [(&'static str, Option<&'static str>)],
    pub dangling: &'static [&'static str],
    pub spans: &'static [&'static str],
}

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/jats")
}

pub const CASES: &[Case] = &[
    Case {
        file: "mini.xml",
        doc_id: "pmid:20001",
        year: 2009,
        paragraphs: 2,
        markers: 3,
        refs: &[("R1", Some("pmid:17081983")), ("R2", Some("meta:janedoe_cell_2006_127_635"))],
        dangling: &[],
        spans: &[
            "Protein kinases phosphorylate substrates ⟦CITE:pmid:17081983⟧ . Prediction tools exist ⟦CITE:meta:janedoe_cell_2006_127_635⟧ .",
            "Motif scanning is common ⟦CITE:pmid:17081983⟧ .",
        ],
    },
    Case {
        file: "pmid_refs.xml",
        doc_id: "pmid:21000001",
        year: 2011,
        paragraphs: 2,
        markers: 3,
        refs: &[("B1", Some("pmid:111")), ("B2", Some("pmcid:123456")), ("B3", Some("pmid:333"))],
        dangling: &[],
        spans: &[
            "SGNS was introduced earlier ⟦CITE:pmid:111⟧ and extended ⟦CITE:pmcid:123456⟧ .",
            "Open data ⟦CITE:pmid:333⟧ helps.",
        ],
    },
    Case {
        file: "meta_fallback.xml",
        doc_id: "meta:anagomez_jbiolchem_2013_288_12",
        year: 2013,
        paragraphs: 1,
        markers: 2,
        refs: &[
            ("R1", Some("meta:jurgenmuller_naturegenetics_2004_36_s1")),
            ("R2", Some("meta:weili_plosone_2012_7_e1001")),
        ],
        dangling: &[],
        spans: &[
            "Variants were called as before ⟦CITE:meta:jurgenmuller_naturegenetics_2004_36_s1⟧ ; see also ⟦CITE:meta:weili_plosone_2012_7_e1001⟧ .",
        ],
    },
    Case {
        file: "unidentifiable.xml",
        doc_id: "pmid:40000004",
        year: 2014,
        paragraphs: 3,
        markers: 4,
        refs: &[
            ("c1", Some("pmid:1234")),
            ("c2", Some("meta:bobstone_bioinformatics_2010_26_1000")),
            ("c3", None),
        ],
        dangling: &[],
        spans: &["Two tools agree ⟦CITE:pmid:1234⟧ , ⟦CITE:meta:bobstone_bioinformatics_2010_26_1000⟧ , ."],
    },
    Case {
        file: "dangling.xml",
        doc_id: "pmid:50000005",
        year: 2015,
        paragraphs: 2,
        markers: 3,
        refs: &[("r1", Some("pmid:555"))],
        dangling: &["r9", "r8"],
        spans: &["Known ⟦CITE:pmid:555⟧ and missing ."],
    },
    Case {
        file: "multi_xref.xml",
        doc_id: "pmid:60000006",
        year: 2016,
        paragraphs: 2,
        markers: 5,
        refs: &[
            ("m1", Some("pmid:601")),
            ("m2", Some("pmid:602")),
            ("m3", Some("pmid:603")),
            ("m4", Some("pmcid:604")),
        ],
        dangling: &[],
        spans: &[
            "Many groups reported this ⟦CITE:pmid:601⟧ ⟦CITE:pmid:602⟧ ⟦CITE:pmid:603⟧ .",
            "Also ⟦CITE:pmid:602⟧ ⟦CITE:pmcid:604⟧ with inline emphasis text .",
        ],
    },
];
