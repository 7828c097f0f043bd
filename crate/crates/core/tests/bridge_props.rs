//! Bridge and scalar-API properties against live local servers.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::OnceLock;

use proptest::prelude::*;

use hybridq::bridge::{BindingSpec, Bridge, InvocationRequest, ScalarRegistry};
use hybridq::data::{load_database_dir, DatabaseData};
use hybridq::http_server::ServerHandle;
use hybridq::scalar::{self, attach_scalar_apis, geo, serve_scalars, Gazetteer};
use hybridq::schema::{abstract_from_tables, derive_relational_view, extract_abstract_from_ddl, RelationalView};
use hybridq::sql::{Atom, DnfConstraint};
use hybridq::tablegen::{apply_manifest, endpoint_for, serve_tables, ReplacementManifest, TableApiEndpoint};
use hybridq::{ResultTable, Value};

struct Servers {
    scalars: ServerHandle,
    _tables: ServerHandle,
    scalar_view: RelationalView,
    table_view: RelationalView,
    visitor: TableApiEndpoint,
}

fn servers() -> &'static Servers {
    static S: OnceLock<Servers> = OnceLock::new();
    S.get_or_init(|| {
        let scalars = serve_scalars("127.0.0.1:0", Box::new(Gazetteer::bundled().clone()), 4).unwrap();
        let mut schema = extract_abstract_from_ddl("CREATE TABLE anchor (id int)").unwrap();
        let mappings = attach_scalar_apis(&mut schema, &scalars.url());
        let scalar_view = derive_relational_view(&schema, &mappings).unwrap();

        let data: DatabaseData =
            load_database_dir(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/desk/museum_visit")).unwrap();
        let visitor = endpoint_for(data.table("visitor").unwrap()).unwrap();
        let tables = serve_tables(vec![visitor.clone()], "127.0.0.1:0", 4).unwrap();
        let ddls: Vec<_> = data.tables.iter().map(|t| t.ddl.clone()).collect();
        let manifest = ReplacementManifest {
            database: data.id.clone(),
            fraction: 0.0,
            seed: 0,
            replaced_tables: vec!["visitor".into()],
        };
        let (s, m) = apply_manifest(&abstract_from_tables(&ddls).unwrap(), &manifest, &tables.url()).unwrap();
        let table_view = derive_relational_view(&s, &m).unwrap();
        Servers {
            scalars,
            _tables: tables,
            scalar_view,
            table_view,
            visitor,
        }
    })
}

fn row_set(t: &ResultTable) -> BTreeSet<Vec<String>> {
    t.rows.iter().map(|r| r.iter().map(Value::key).collect()).collect()
}

fn scalar_args() -> impl Strategy<Value = (String, Vec<Value>)> {
    let names: Vec<String> = scalar::signatures().into_iter().map(|s| s.name).collect();
    let places: Vec<String> = Gazetteer::bundled().records().iter().map(|p| p.name.clone()).collect();
    let text = prop::strategy::Union::new(vec![
        "[A-Za-z ]{0,20}".prop_map(Value::Text).boxed(),
        prop::sample::select(places).prop_map(Value::Text).boxed(),
        Just(Value::Text("Atlantis".into())).boxed(),
    ]);
    let number = prop::strategy::Union::new(vec![
        (-1_000_000i64..1_000_000).prop_map(Value::Integer).boxed(),
        (-1.0e6f64..1.0e6).prop_map(Value::Real).boxed(),
        Just(Value::Null).boxed(),
    ]);
    (
        prop::sample::select(names),
        prop::collection::vec(text, 2),
        prop::collection::vec(number, 2),
    )
        .prop_map(|(name, texts, numbers)| {
            let sig = scalar::signature(&name).unwrap();
            let args = sig
                .params
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    if p.dtype == hybridq::Dtype::Text {
                        texts[i].clone()
                    } else {
                        numbers[i].clone()
                    }
                })
                .collect();
            (name, args)
        })
}

fn visitor_atom() -> impl Strategy<Value = Atom> {
    prop_oneof![
        (1i64..8).prop_map(|n| Atom::eq("v", "ID", Value::Integer(n))),
        (0i64..10).prop_map(|n| Atom::eq("v", "Level_of_membership", Value::Integer(n))),
        prop::sample::select(vec![25i64, 27, 28, 35, 36, 56, 40]).prop_map(|n| Atom::eq("v", "Age", Value::Integer(n))),
    ]
}

fn conjunction() -> impl Strategy<Value = Vec<Atom>> {
    prop::collection::vec(visitor_atom(), 1..3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn scalar_apis_agree_in_process_and_over_http((name, args) in scalar_args()) {
        let local = ScalarRegistry::local().invoke_scalar(&name, &args);
        let remote = ScalarRegistry::remote(&servers().scalars.url()).invoke_scalar(&name, &args);
        match (local, remote) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.key(), b.key(), "{}({:?})", name, args),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{}({:?}): {:?} vs {:?}", name, args, a, b),
        }
    }

    #[test]
    fn is_prime_matches_trial_division(n in -1_000_000i64..=1_000_000) {
        let oracle = n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0);
        prop_assert_eq!(scalar::numeric::is_prime(n), oracle);
    }

    #[test]
    fn is_fibonacci_matches_the_sequence(n in 0i64..=1_000_000_000_000, near in any::<bool>()) {
        let mut fibs = vec![0i64, 1];
        while *fibs.last().unwrap() <= 1_000_000_000_000 {
            let k = fibs.len();
            fibs.push(fibs[k - 1] + fibs[k - 2]);
        }
        // Half the cases probe a Fibonacci number or a neighbour of one.
        let n = if near { fibs[(n as usize) % fibs.len()] + (n % 3 - 1) } else { n };
        prop_assert_eq!(scalar::numeric::is_fibonacci(n), fibs.contains(&n));
    }

    #[test]
    fn is_square_matches_integer_sqrt(n in -1000i64..=4_000_000_000_000) {
        let r = (n.max(0) as f64).sqrt() as i64;
        let oracle = n >= 0 && (r.saturating_sub(1)..=r + 1).any(|k| k * k == n);
        prop_assert_eq!(scalar::numeric::is_square(n), oracle);
    }

    #[test]
    fn distances_satisfy_the_triangle_inequality(i in any::<prop::sample::Index>(), j in any::<prop::sample::Index>(), k in any::<prop::sample::Index>()) {
        let g = Gazetteer::bundled();
        let recs = g.records();
        let (a, b, c) = (&recs[i.index(recs.len())].name, &recs[j.index(recs.len())].name, &recs[k.index(recs.len())].name);
        let d = |x: &str, y: &str| geo::distance_between(g, x, y).unwrap();
        prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-6);
        prop_assert!((d(a, b) - d(b, a)).abs() < 1e-9);
    }

    #[test]
    fn calls_never_exceed_distinct_bindings(ns in prop::collection::vec(0i64..30, 0..40)) {
        let vt = servers().scalar_view.virtual_table("is_prime").unwrap();
        let tuples: Vec<Vec<Value>> = ns.iter().map(|n| vec![Value::Integer(*n)]).collect();
        let distinct: BTreeSet<i64> = ns.iter().copied().collect();
        let req = InvocationRequest::for_table(vt, BindingSpec::Tuples { columns: vec!["number".into()], tuples });
        let out = Bridge::default().invoke_detailed(&req).unwrap();
        prop_assert!(out.http_calls <= distinct.len());
        prop_assert_eq!(out.table.rows.len(), distinct.len());
    }

    #[test]
    fn disjunct_union_matches_separate_calls(c1 in conjunction(), c2 in conjunction()) {
        let s = servers();
        let vt = s.table_view.virtual_table("visitor").unwrap();
        let bridge = Bridge::default();
        let run = |d: Vec<Vec<Atom>>| {
            let req = InvocationRequest::for_table(vt, BindingSpec::Dnf(DnfConstraint { disjuncts: d }));
            bridge.invoke(&req).unwrap()
        };
        let both = run(vec![c1.clone(), c2.clone()]);
        let mut union = row_set(&run(vec![c1]));
        union.extend(row_set(&run(vec![c2.clone()])));
        prop_assert_eq!(row_set(&both), union);
        prop_assert_eq!(both.rows.len(), row_set(&both).len());
        let again = run(vec![c2.clone()]);
        prop_assert_eq!(&again, &run(vec![c2]));
    }

    #[test]
    fn residual_filter_is_a_no_op_for_pushed_equalities(c in conjunction()) {
        let s = servers();
        let vt = s.table_view.virtual_table("visitor").unwrap();
        let body: serde_json::Map<String, serde_json::Value> = c
            .iter()
            .map(|a| match &a.operand {
                hybridq::sql::Operand::Literal(v) => (a.column.1.clone(), v.to_json()),
                _ => unreachable!("equality atoms"),
            })
            .collect();
        let contradictory = c.iter().any(|a| c.iter().any(|b| a.column == b.column && a.operand != b.operand));
        let served = s.visitor.filter(&serde_json::Value::Object(body)).unwrap();
        let req = InvocationRequest::for_table(vt, BindingSpec::Dnf(DnfConstraint { disjuncts: vec![c] }));
        let got = Bridge::default().invoke(&req).unwrap();
        if contradictory {
            prop_assert!(got.rows.is_empty());
        } else {
            prop_assert_eq!(row_set(&got), row_set(&served));
        }
    }
}
