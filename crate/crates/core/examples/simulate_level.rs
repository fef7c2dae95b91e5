//! Empirical level of the proposed tests and the classical aggregates.

use mhomog::sim::{estimate_rejection_rate, Procedure, RunOptions, Setting, SettingSpec};
use mhomog::variance::Estimator;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SettingSpec::constant(Setting::One, 5, 200, 10, 10, 42)?;
    let procs = [
        Procedure::Test(Estimator::Test1),
        Procedure::Test(Estimator::Test2),
        Procedure::Test(Estimator::Test3),
        Procedure::Wk,
        Procedure::WkPrime,
        Procedure::Vk,
    ];
    for r in estimate_rejection_rate(&spec, &procs, 2000, RunOptions::default())? {
        println!("{:<10} {:.4} ± {:.4}", r.procedure.to_string(), r.rate, r.se);
    }
    Ok(())
}
