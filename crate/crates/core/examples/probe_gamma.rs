fn main() {
    let spec = dirac1d::DisorderSpec::bernoulli(3f64.sqrt(), 0.5, 11).unwrap();
    let tm = dirac1d::transfer_matrix(0.0, -3f64.sqrt(), 1.0, 1.0);
    let tp = dirac1d::transfer_matrix(0.0, 3f64.sqrt(), 1.0, 1.0);
    let red = dirac1d::transfer::LinePairReduction::detect(&tm, &tp);
    println!("detect: {:?}", red.is_some());
    if let Some(r) = &red {
        println!("basis {:?}", r.basis);
    }
    for n in [10_000usize, 100_000] {
        let est = dirac1d::lyapunov_exponent(0.0, &spec, 1.0, 1.0, n, 4).unwrap();
        println!("n={n}: gamma={} se={}", est.gamma, est.std_error);
    }
}
