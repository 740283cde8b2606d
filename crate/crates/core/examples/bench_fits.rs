use std::time::Instant;

use tabutune::dataset::{normalize_minmax, stratified_split, synth_generate, MissingProfile};
use tabutune::learners::{self, Algo};

fn main() {
    let d = synth_generate(500, &MissingProfile::none(), 0.2, 1).unwrap();
    let (train, _test) = stratified_split(&d, 0.3, 1).unwrap();
    let train_bal = tabutune::resampling::smote(&train, &Default::default()).unwrap();
    let fit_rows: Vec<usize> = (0..train_bal.n_rows()).collect();
    let (norm, _) = normalize_minmax(&train_bal, &fit_rows).unwrap();
    println!("train rows: {}", train_bal.n_rows());

    for (name, algo, params, data) in [
        ("gbt small", Algo::Gbt, vec![5.0, 3.0, 0.1, 0.5, 2.0, 1.0], &train_bal),
        ("gbt mid", Algo::Gbt, vec![15.0, 10.0, 0.1, 0.5, 2.0, 3.0], &train_bal),
        ("gbt big", Algo::Gbt, vec![50.0, 50.0, 0.1, 0.5, 2.0, 10.0], &train_bal),
        ("adab small", Algo::Adab, vec![5.0, 0.1, 3.0, 2.0, 1.0], &train_bal),
        ("adab mid", Algo::Adab, vec![15.0, 0.1, 10.0, 5.0, 3.0], &train_bal),
        ("adab big", Algo::Adab, vec![50.0, 0.1, 50.0, 2.0, 1.0], &train_bal),
        ("mlp small", Algo::Mlp, vec![3.0, 3.0, 3.0, 0.05, 0.1, 0.01], &norm),
        ("mlp mid", Algo::Mlp, vec![10.0, 10.0, 10.0, 0.05, 0.1, 0.01], &norm),
        ("mlp big", Algo::Mlp, vec![30.0, 30.0, 30.0, 0.05, 0.1, 0.01], &norm),
    ] {
        let t = Instant::now();
        let _ = learners::fit(algo, data, &params, 1).unwrap();
        println!("{name}: {:.1} ms", t.elapsed().as_secs_f64() * 1000.0);
    }
}
