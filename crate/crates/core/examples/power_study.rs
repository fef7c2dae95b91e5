//! Power against a departure confined to a fifth of the groups.

use mhomog::sim::{estimate_rejection_rate, Pi0, Procedure, RunOptions, Setting, SettingSpec};
use mhomog::variance::Estimator;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let procs = [Procedure::Test(Estimator::Test2), Procedure::Chi2Pooled];
    for setting in [Setting::Three(Pi0::Pi4), Setting::Four(Pi0::Pi4), Setting::Five] {
        for k in [20, 50, 200] {
            let spec = SettingSpec::constant(setting, 5, k, 20, 30, 11)?;
            let r = estimate_rejection_rate(&spec, &procs, 500, RunOptions::default())?;
            println!("{setting} k={k:<4} test2 {:.3}  chi2 {:.3}", r[0].rate, r[1].rate);
        }
    }
    Ok(())
}
