use biolit_core::latency::{run_benchmark, BenchConfig};

fn main() {
    let report = run_benchmark(&BenchConfig::default()).expect("benchmark");
    for row in &report.rows {
        println!("{:>3} tokens  {:>8.4} ms ± {:.4}", row.token_count, row.mean_ms, row.stderr_ms);
    }
    println!("slope {:.5} ms/token, R = {:.3}", report.slope, report.r);
}
