//! Global homogeneity test on a small grouped dataset read from CSV.
//!
//! ```text
//! cargo run --example global_test
//! ```

use mhomog::counts::read_dataset;
use mhomog::decision::{pooled_chi_square, run_global_test};
use mhomog::variance::Estimator;

const DATA: &str = "\
group,population,a,b,c,d
north,1,12,7,5,6
north,2,5,9,8,8
south,1,10,10,6,4
south,2,9,11,5,5
east,1,4,6,10,10
east,2,3,7,11,9
west,1,8,8,7,7
west,2,14,6,5,5
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = read_dataset(DATA.as_bytes())?;
    println!("k = {} groups, d = {} categories", ds.k(), ds.dim());

    for est in [Estimator::Test1, Estimator::Test2, Estimator::Test3] {
        let r = run_global_test(&ds, est, 0.05, None)?;
        println!(
            "{est}: T_U = {:.4}  var = {:.5}  z = {}  p = {:.4}  reject = {}",
            r.statistic,
            r.variance_estimate.value,
            r.z.map_or("-".into(), |z| format!("{z:.3}")),
            r.p_value,
            r.reject
        );
    }

    let chi = pooled_chi_square(&ds);
    println!("pooled chi-square: {:.3} on {} df, p = {:.4}", chi.statistic, chi.df, chi.p_value);
    Ok(())
}
