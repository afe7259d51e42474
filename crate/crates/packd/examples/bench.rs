use packd::fixtures;
use packd::subdivision::{iterate, Chooser};
use packd::packer::{pack, PackOptions};

fn main() {
    let skew = fixtures::skew_square();
    for n in [5u32, 6, 7, 8] {
        let c = iterate(&skew, "Q", n, &Chooser::default()).unwrap();
        let t = std::time::Instant::now();
        let opts = PackOptions { tolerance: 1e-12, ..Default::default() };
        match pack(&c, &opts) {
            Ok(p) => println!(
                "level {n}: V={} packed in {:.2}s residual={:.2e} tangency={:.2e}",
                c.vertex_count(), t.elapsed().as_secs_f64(), p.residual, p.tangency_error
            ),
            Err(e) => println!("level {n}: V={} error {e}", c.vertex_count()),
        }
    }
}
