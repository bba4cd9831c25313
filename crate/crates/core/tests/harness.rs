use nsx_core::harness::{
    builtin, builtin_names, classify_guard, loop_suite, materialize_request, process_request, run_loop_task, sample, split,
    validate_witness, GuardType, HttpParser, LoopTaskConfig, SampleRun, TargetProgram, Validation,
};
use nsx_core::lang::{parse_constraint, VarDecl, VarKind};
use nsx_core::value::{Assignment, Value};

fn ints(kv: &[(&str, i64)]) -> Assignment {
    kv.iter().map(|(k, v)| (k.to_string(), Value::Int(*v))).collect()
}

#[test]
fn fig8_exits_immediately_when_the_guard_is_false() {
    let p = builtin("fig8").unwrap();
    let run = p.run(&ints(&[("a", 1), ("b", 3)])).unwrap();
    assert_eq!(run.rows, vec![(0, ints(&[("c", 1), ("d", 3)]))]);
    let run = p.run(&ints(&[("a", 5), ("b", 2)])).unwrap();
    let cs: Vec<(usize, i64, i64)> =
        run.rows.iter().map(|(n, s)| (*n, s.num("c").unwrap() as i64, s.num("d").unwrap() as i64)).collect();
    assert_eq!(&cs[..3], &[(0, 5, 2), (1, 8, 3), (2, 12, 4)]);
}

#[test]
fn sampling_is_reproducible_and_splits_partition() {
    let p = builtin("fig8").unwrap();
    let (a, sa) = sample(p.as_ref(), 200, 3).unwrap();
    let (b, sb) = sample(p.as_ref(), 200, 3).unwrap();
    assert_eq!(a.rows, b.rows);
    assert_eq!(sa, sb);
    assert_eq!(sa.rows, a.len());
    let names: Vec<&str> = a.columns.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, ["a", "b", "cnt", "c", "d"]);
    let (c, _) = sample(p.as_ref(), 200, 4).unwrap();
    assert_ne!(a.rows, c.rows);

    let (tr, te) = split(&a, 0.8, 1).unwrap();
    assert_eq!(tr.len() + te.len(), a.len());
    let mut all: Vec<String> = tr.rows.iter().chain(&te.rows).map(|r| format!("{r:?}")).collect();
    let mut orig: Vec<String> = a.rows.iter().map(|r| format!("{r:?}")).collect();
    all.sort();
    orig.sort();
    assert_eq!(all, orig);
    assert!(split(&a, 1.0, 1).is_err());
    assert!(sample(p.as_ref(), 0, 1).is_err());
}

#[test]
fn suite_is_twenty_named_programs() {
    let suite = loop_suite();
    assert_eq!(suite.len(), 20);
    let names = builtin_names();
    assert!(names.contains(&"http".to_string()));
    assert!(builtin("nope").is_err());
    for p in &suite {
        assert!(p.guard.dual().is_some(), "{}", p.name);
    }
}

#[test]
fn guards_classify_by_operator() {
    let t = |s: &str| classify_guard(&parse_constraint(s).unwrap());
    assert_eq!(t("x <= 3"), GuardType::T1);
    assert_eq!(t("x > 3"), GuardType::T2);
    assert_eq!(t("x != 3"), GuardType::T3);
    assert_eq!(t("x < 3 || y == 1"), GuardType::T4);
}

/// `while (x < n) x += 2`, run by hand.
struct Stride {
    inputs: Vec<VarDecl>,
    observed: Vec<VarDecl>,
}

impl Stride {
    fn new() -> Self {
        Stride {
            inputs: vec![VarDecl::new("n", VarKind::Int).with_range(0.0, 12.0)],
            observed: vec![VarDecl::new("x", VarKind::Int)],
        }
    }
}

impl TargetProgram for Stride {
    fn name(&self) -> &str {
        "stride"
    }
    fn inputs(&self) -> &[VarDecl] {
        &self.inputs
    }
    fn observed(&self) -> &[VarDecl] {
        &self.observed
    }
    fn step_limit(&self) -> usize {
        10
    }
    fn default_runs(&self) -> usize {
        400
    }
    fn run(&self, inputs: &Assignment) -> Result<SampleRun, String> {
        let n = inputs.num("n").ok_or("no n")? as i64;
        let mut x = 0;
        let mut rows = vec![(0, ints(&[("x", x)]))];
        while x < n {
            x += 2;
            rows.push((rows.len(), ints(&[("x", x)])));
        }
        Ok(SampleRun { inputs: inputs.clone(), rows })
    }
}

#[test]
fn witnesses_are_checked_by_re_execution() {
    let p = Stride::new();
    let guard = parse_constraint("x < n").unwrap();
    assert_eq!(validate_witness(&p, &guard, &ints(&[("n", 5), ("cnt", 3), ("x", 6)])), Validation::Concrete);
    assert!(matches!(validate_witness(&p, &guard, &ints(&[("n", 5), ("cnt", 1), ("x", 6)])), Validation::ModelRelative(_)));
    assert!(matches!(validate_witness(&p, &guard, &ints(&[("n", 5), ("cnt", 7), ("x", 14)])), Validation::ModelRelative(_)));
    assert!(matches!(validate_witness(&p, &guard, &ints(&[("n", 5)])), Validation::ModelRelative(_)));
}

#[test]
fn custom_program_task_is_validated() {
    let p = Stride::new();
    let guard = parse_constraint("x < n").unwrap();
    let rep = run_loop_task(&p, &guard, &LoopTaskConfig::default()).unwrap();
    assert!(rep.validated, "{}", rep.to_kv());
    let w = rep.witness.unwrap();
    assert_eq!(validate_witness(&p, &guard, &w), Validation::Concrete);
    assert!(w.num("x").unwrap() >= w.num("n").unwrap());
}

#[test]
fn requests_are_built_with_the_protocol_prefix() {
    let r = materialize_request("abc", "zzzzzzzzzz");
    assert_eq!(r, "GET abc HTTP/1.1zz\n");
    let o = process_request(&r).unwrap();
    assert_eq!((o.uri_len, o.ver_len, o.ptr, o.overflow), (3, 10, 14, false));
    let long = materialize_request(&"u".repeat(95), "vvvvvvvv");
    let o = process_request(&long).unwrap();
    assert_eq!(o.ptr, 104);
    assert!(o.overflow);
    assert!(process_request("POST x HTTP/1.1\n").is_err());
    assert!(process_request("GET x HTTP/2.0\n").is_err());
    assert!(process_request("GET x HTTP\n").is_err());
}

#[test]
fn http_sampling_records_field_lengths() {
    let p = HttpParser::new(20);
    let (d, stats) = sample(&p, 300, 0).unwrap();
    assert_eq!(stats.runs, 300);
    let col = |n: &str| d.columns.iter().position(|c| c.name == n).unwrap();
    let (u, v, ptr) = (col("uri_length"), col("ver_length"), col("ptr"));
    for r in &d.rows {
        assert_eq!(r[ptr], r[u] + r[v] + 1.0);
        assert!(r[v] >= 8.0);
    }
    assert!(stats.skipped > 0);
}
