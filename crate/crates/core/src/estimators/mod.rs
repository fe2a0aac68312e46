//! Numerical estimators: separated-set entropy, Markov-partition bounds, Lyapunov spectra
//! and volume growth.

pub mod lyapunov;
pub mod markov;
pub mod separated;
pub mod volume;

use std::io::Write;

pub use lyapunov::{lyapunov_periodic, lyapunov_qr, measure_index, LyapunovSpectrumEstimate, MeasureIndex};
pub use markov::{markov_pruned_entropy, MarkovBound, MarkovPartition, PartitionFile};
pub use separated::{separated_set_entropy, verify_separated, EntropyEstimate, EstimateRole};
pub use volume::{volume_growth, VolumeGrowthEstimate};

use crate::Error;

/// Writes `n,epsilon,count,rate` rows.
pub fn write_entropy_csv<W: Write>(out: W, rows: &[EntropyEstimate]) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "epsilon", "count", "rate"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([r.n.to_string(), r.epsilon.to_string(), r.count.to_string(), format!("{:.6}", r.rate)])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows() {
        let row = EntropyEstimate {
            n: 3,
            epsilon: 0.1,
            count: 20,
            rate: (20f64).ln() / 3.0,
            role: EstimateRole::LowerBound,
            samples_used: 100,
            seed: 1,
            set: Vec::new(),
        };
        let mut buf = Vec::new();
        write_entropy_csv(&mut buf, &[row]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,epsilon,count,rate\n3,0.1,20,0.998577\n");
    }
}
