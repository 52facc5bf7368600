// Library-level use of the batch driver: a sweep written to a directory,
// then the table read back and refitted.

use std::path::Path;

use moment_measure::cli::{cmd_rates, cmd_sweep, error_file_name, Slopes};
use moment_measure::solver::SolverConfig;
use moment_measure::Result;

pub fn run_example(out: &Path) -> Result<Slopes> {
    let (records, slopes) = cmd_sweep(1, &[8, 16, 32], &SolverConfig::default(), out, Some(2))?;
    for r in &records {
        println!("{r}");
    }
    let reread = cmd_rates(&out.join(error_file_name(1)))?;
    println!("{}", slopes.expect("three resolutions"));
    println!("reread {reread}");
    Ok(reread)
}

fn main() -> Result<()> {
    let out = std::env::temp_dir().join("moment-measure-sweep");
    run_example(&out)?;
    println!("tables in {}", out.display());
    Ok(())
}
