//! Compare the seven null-variance estimators with the true null variance.

use mhomog::counts::ProbVector;
use mhomog::sim::{generate_replicate, Setting, SettingSpec};
use mhomog::variance::{var0_estimate, var0_true, BootstrapOptions, Estimator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (d, k, n1, n2) = (5, 100, 10, 20);
    let spec = SettingSpec::constant(Setting::One, d, k, n1, n2, 1)?;
    let truth = var0_true(&vec![ProbVector::uniform(d)?; k], &vec![(n1, n2); k])?;
    println!("true var_0(T_U) = {truth:.6}");

    let reps = 200;
    for est in Estimator::ALL {
        let mut sum = 0.0;
        for rep in 0..reps {
            let (ds, _) = generate_replicate(&spec, rep)?;
            let boot = BootstrapOptions { b: 100, seed: rep };
            sum += var0_estimate(&ds, est, boot)?.value;
        }
        let mean = sum / reps as f64;
        println!("{est}: mean estimate {mean:.6}  ratio {:.3}", mean / truth);
    }
    Ok(())
}
