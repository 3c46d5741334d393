fn main() {
    let text = std::fs::read_to_string("crates/streamforge/tests/data/kurtosis.off").unwrap();
    let p = streamforge::ir::parse_program(&text).unwrap();
    let phi = streamforge::rfs::construct_rfs(&p);
    let (_, specs) = streamforge::decompose::decompose(&phi, &p);
    let m4 = specs.get(&1).unwrap().clone();
    let t0 = std::time::Instant::now();
    let (t, _atoms) = streamforge::eval::unroll(&m4, 4, "x").unwrap();
    eprintln!("unroll m4 k=4 ok in {:.2}s, nodes {}", t0.elapsed().as_secs_f64(), t.node_count());
    let t1 = std::time::Instant::now();
    let m = streamforge::mine::mine_expressions(&phi, &m4, 4, 10_000);
    eprintln!("mine k=4: {:?} templates in {:.2}s", m.map(|v| v.len()), t1.elapsed().as_secs_f64());
}
