//! Simulate a random MAG with Gaussian data, learn its equivalence class and
//! compare the estimate with the truth.
//!
//! ```text
//! cargo run --release --example recover -- 10 5000
//! ```

use gesmag_core::eval::compare;
use gesmag_core::exec::Executor;
use gesmag_core::pag::mag_to_pag;
use gesmag_core::simulate::{replicate, SimConfig};
use gesmag_core::textfmt::write_graph;
use gesmag_core::{gesmag, SearchConfig};

fn main() -> gesmag_core::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("numeric argument"));
    let n = args.next().unwrap_or(8);
    let n_samples = args.next().unwrap_or(5000);

    let sim = SimConfig { n, n_samples, seed: 1, ..Default::default() };
    let rep = replicate(&sim, 0)?;
    let truth = mag_to_pag(&rep.mag, true)?.graph;

    let cfg = SearchConfig { max_head_size: Some(3), ..Default::default() };
    let result = gesmag(&rep.data, &cfg, &Executor::new(0))?;
    let report = compare(&result.pag.graph, &truth)?;

    println!("true PAG:\n{}", write_graph(&truth));
    println!("estimated PAG:\n{}", write_graph(&result.pag.graph));
    println!("edge-mark accuracy {:.3}", report.accuracy);
    for r in &report.rates {
        println!("{:?}: tpr {:?} fpr {:?}", r.edge_type, r.tpr, r.fpr);
    }
    Ok(())
}
