//! The command-line workflow driven in-process: write a CSV, fit, reload
//! the archive, predict and summarise sensitivities. Equivalent to
//!
//!     khaos fit data.csv -o model.json --summary summary.txt
//!     khaos predict model.json data.csv -o predictions.csv
//!     khaos sobol model.json -o sobol.csv
//!
//!     cargo run --release --example cli_workflow

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let dir = std::env::temp_dir().join("khaos-cli-workflow");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let data = dir.join("data.csv");
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut text = String::from("pressure,temperature,flow,yield\n");
    for _ in 0..300 {
        let (p, t, f): (f64, f64, f64) = (rng.random_range(1.0..5.0), rng.random_range(250.0..350.0), rng.random_range(0.0..1.0));
        let y = p.ln() * (t / 300.0) + 0.1 * f + 0.02 * rng.random::<f64>();
        text.push_str(&format!("{p},{t},{f},{y}\n"));
    }
    std::fs::write(&data, text).expect("write data");

    let path = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let data = data.to_string_lossy().into_owned();
    let steps: [Vec<String>; 3] = [
        vec!["fit".into(), data.clone(), "-o".into(), path("model.json"), "--summary".into(), path("summary.txt")],
        vec!["predict".into(), path("model.json"), data, "-o".into(), path("predictions.csv")],
        vec!["sobol".into(), path("model.json"), "-o".into(), path("sobol.csv")],
    ];
    for args in steps {
        let argv = std::iter::once("khaos".to_string()).chain(args.iter().cloned());
        let code = khaos::cli::run(argv);
        println!("khaos {} -> exit {code}", args[0]);
        assert_eq!(code, 0);
    }
    println!("{}", std::fs::read_to_string(dir.join("summary.txt")).expect("summary"));
    println!("{}", std::fs::read_to_string(dir.join("sobol.csv")).expect("sobol"));
    println!("outputs in {}", dir.display());
}
