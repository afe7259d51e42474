use packd::fixtures;
use packd::metrics::{converge_experiment, renorm_contraction, periodic_multiplier, Target, ExperimentOptions, FaceWord};

fn main() {
    let opts = ExperimentOptions { jobs: 4, ..Default::default() };
    let skew = fixtures::skew_square();
    for j in [1u32, 2] {
        let t = std::time::Instant::now();
        let r = converge_experiment(&skew, &Target::Polygon("Q".into()), j, 1..=5, &opts).unwrap();
        println!("skew j={j}: d={:?}\n  delta={:?} resid={:?} ({}s)", r.distances, r.delta, r.fit_residual, t.elapsed().as_secs_f64());
    }
    let t = std::time::Instant::now();
    let r = renorm_contraction(&skew, "Q", &FaceWord(vec![7]), 4, 6, &opts).unwrap();
    println!("skew renorm: d={:?} delta={:?} ({}s)", r.distances, r.delta, t.elapsed().as_secs_f64());

    let inner = fixtures::inner_square();
    let t = std::time::Instant::now();
    let m = periodic_multiplier(&inner, "Q", &FaceWord(vec![8]), 5, 1e-4, &opts).unwrap();
    println!("inner central mu={} class={:?} drift={} ({}s)", m.dynamics.multiplier, m.dynamics.class, m.relative_drift, t.elapsed().as_secs_f64());
    let apo = fixtures::apollonian();
    let m = periodic_multiplier(&apo, "T", &FaceWord(vec![0]), 6, 1e-2, &opts).unwrap();
    println!("apollonian corner trace_sq={} class={:?} drift={}", m.dynamics.trace_sq, m.dynamics.class, m.relative_drift);
}
