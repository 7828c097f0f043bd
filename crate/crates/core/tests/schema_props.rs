use proptest::prelude::*;

use hybridq::schema::{derive_relational_view, extract_abstract_from_ddl, EntityKind};
use hybridq::tablegen::{apply_manifest, ReplacementManifest};
use hybridq::Dtype;

const TYPES: [(&str, Dtype); 6] = [
    ("int", Dtype::Integer),
    ("integer", Dtype::Integer),
    ("real", Dtype::Real),
    ("text", Dtype::Text),
    ("varchar(20)", Dtype::Text),
    ("bool", Dtype::Boolean),
];

type Table = (String, Vec<(String, usize)>);

fn tables() -> impl Strategy<Value = Vec<Table>> {
    prop::collection::btree_map(
        "[a-z][a-z0-9_]{0,6}",
        prop::collection::btree_map("[a-z][a-z0-9_]{0,6}", 0..TYPES.len(), 1..5),
        1..5,
    )
    .prop_map(|m| {
        m.into_iter()
            .map(|(t, cols)| {
                (
                    format!("t_{t}"),
                    cols.into_iter().map(|(c, k)| (format!("c_{c}"), k)).collect(),
                )
            })
            .collect()
    })
}

fn render(tables: &[Table]) -> String {
    tables
        .iter()
        .map(|(name, cols)| {
            let defs: Vec<String> = cols.iter().map(|(c, k)| format!("  \"{c}\" {}", TYPES[*k].0)).collect();
            format!("CREATE TABLE \"{name}\" (\n{}\n);\n", defs.join(",\n"))
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ddl_round_trips_through_the_view(ts in tables()) {
        let ddl = render(&ts);
        let view = derive_relational_view(&extract_abstract_from_ddl(&ddl).unwrap(), &[]).unwrap();
        prop_assert_eq!(view.tables.len(), ts.len());
        for (name, cols) in &ts {
            let t = view.table(name).expect("table survives");
            prop_assert!(!t.is_virtual);
            let got: Vec<(String, Dtype)> = t.columns.clone();
            let want: Vec<(String, Dtype)> = cols.iter().map(|(c, k)| (c.clone(), TYPES[*k].1)).collect();
            prop_assert_eq!(got, want);
        }
        let again = derive_relational_view(&extract_abstract_from_ddl(&view.ddl_text).unwrap(), &[]).unwrap();
        prop_assert_eq!(again.tables, view.tables);
    }

    #[test]
    fn replacement_flips_exactly_the_manifest(ts in tables(), mask in prop::collection::vec(any::<bool>(), 5)) {
        let schema = extract_abstract_from_ddl(&render(&ts)).unwrap();
        let replaced: Vec<String> = ts.iter().zip(&mask).filter(|(_, m)| **m).map(|((n, _), _)| n.clone()).collect();
        let manifest = ReplacementManifest {
            database: "db".into(),
            fraction: 0.0,
            seed: 0,
            replaced_tables: replaced.clone(),
        };
        let (s, mappings) = apply_manifest(&schema, &manifest, "http://127.0.0.1:9").unwrap();
        let view = derive_relational_view(&s, &mappings).unwrap();
        for (name, _) in &ts {
            let want = replaced.contains(name);
            prop_assert_eq!(s.entity(name).unwrap().kind == EntityKind::Api, want);
            prop_assert_eq!(view.is_virtual(name), want);
        }
        let virt: Vec<&String> = view.virtual_tables.keys().collect();
        let base: Vec<&String> = view.tables.iter().filter(|t| !t.is_virtual).map(|t| &t.name).collect();
        prop_assert!(virt.iter().all(|v| !base.iter().any(|b| b.eq_ignore_ascii_case(v))));
        prop_assert_eq!(virt.len() + base.len(), ts.len());
        let view2 = derive_relational_view(&s, &mappings).unwrap();
        prop_assert_eq!(view, view2);
    }
}
