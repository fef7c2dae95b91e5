//! The closed-form group statistic against its defining kernel average.

use mhomog::counts::{CountVector, GroupPair};
use mhomog::ustat::{group_ustat, group_ustat_kernel_oracle};

fn counts(labels: &[char], cats: &[char]) -> CountVector {
    CountVector::new(cats.iter().map(|c| labels.iter().filter(|l| *l == c).count() as u64).collect()).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cats = ['a', 'b', 'c'];
    let x1 = ['a', 'a', 'b', 'c', 'a'];
    let x2 = ['b', 'c', 'c', 'b'];
    let pair = GroupPair::new("demo", counts(&x1, &cats), counts(&x2, &cats))?;
    println!("closed form: {:.12}", group_ustat(&pair)?);
    println!("kernel:      {:.12}", group_ustat_kernel_oracle(&x1, &x2)?);
    Ok(())
}
