use std::path::Path;

use mrws_cli::run_cli_with;

fn run(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_cli_with(std::iter::once("mrws").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(err).unwrap())
}

#[test]
fn thread_cap_from_environment() {
    let problem = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/p3.problem.json");
    let problem = problem.to_str().unwrap();
    std::env::set_var("MRWS_THREADS", "many");
    let (code, err) = run(&["solve", problem]);
    assert_eq!(code, 1);
    assert!(err.contains("MRWS_THREADS"));
    std::env::set_var("MRWS_THREADS", "1");
    assert_eq!(run(&["solve", problem]).0, 0);
    assert_eq!(mrws_core::par::current_threads(), 1);
    std::env::remove_var("MRWS_THREADS");
}
