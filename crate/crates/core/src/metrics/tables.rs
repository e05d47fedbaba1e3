//! Plot-ready CSV tables.

use std::io::Write;

use super::{ExposureDistribution, HitRatioCurve, ProbeConditionedMatrix};

fn io_err(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

/// Rows are probe groups, columns gallery groups. Absent rows are empty.
pub fn write_matrix_csv<W: Write>(w: W, m: &ProbeConditionedMatrix) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["probe_group".to_owned()];
    header.extend(m.groups.iter().map(ToString::to_string));
    wtr.write_record(&header).map_err(io_err)?;
    for (group, row) in m.groups.iter().zip(&m.cells) {
        let mut rec = vec![group.to_string()];
        rec.extend(row.iter().map(|c| c.map(|v| v.to_string()).unwrap_or_default()));
        wtr.write_record(&rec).map_err(io_err)?;
    }
    wtr.flush()
}

/// One row per cutoff `k' = 1..=k`.
pub fn write_hit_ratio_csv<W: Write>(w: W, curve: &HitRatioCurve) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["k", "hit_ratio"]).map_err(io_err)?;
    for p in &curve.points {
        wtr.write_record([p.k.to_string(), p.hit_ratio.to_string()]).map_err(io_err)?;
    }
    wtr.flush()
}

/// One row per ranking, one column per group. All distributions must come
/// from the same ranking set.
pub fn write_distributions_csv<W: Write>(w: W, dists: &[ExposureDistribution]) -> std::io::Result<()> {
    let n = dists.first().map_or(0, |d| d.per_ranking_values.len());
    if dists.iter().any(|d| d.per_ranking_values.len() != n) {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "exposure distributions differ in length",
        ));
    }
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["ranking".to_owned()];
    header.extend(dists.iter().map(|d| d.group.to_string()));
    wtr.write_record(&header).map_err(io_err)?;
    for i in 0..n {
        let mut rec = vec![(i + 1).to_string()];
        rec.extend(dists.iter().map(|d| d.per_ranking_values[i].to_string()));
        wtr.write_record(&rec).map_err(io_err)?;
    }
    wtr.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Group;
    use crate::metrics::{HitRatioPoint, Metric};

    #[test]
    fn matrix_csv_is_square_with_blank_absent_rows() {
        let m = ProbeConditionedMatrix {
            metric: Metric::Visibility,
            exclude_mates: false,
            k: 2,
            groups: vec![Group::new(["A"]), Group::new(["B"])],
            probe_counts: vec![1, 0],
            cells: vec![vec![Some(0.5), Some(0.5)], vec![None, None]],
        };
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &m).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "probe_group,A,B\nA,0.5,0.5\nB,,\n");
    }

    #[test]
    fn hit_ratio_and_distribution_tables() {
        let curve = HitRatioCurve {
            points: vec![HitRatioPoint { k: 1, hit_ratio: 0.5 }, HitRatioPoint { k: 2, hit_ratio: 1.0 }],
        };
        let mut buf = Vec::new();
        write_hit_ratio_csv(&mut buf, &curve).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "k,hit_ratio\n1,0.5\n2,1\n");

        let d = |g: &str, v: Vec<f64>| ExposureDistribution {
            group: Group::new([g]),
            k: 1,
            per_ranking_values: v,
        };
        let mut buf = Vec::new();
        write_distributions_csv(&mut buf, &[d("A", vec![1.0, 0.0]), d("B", vec![0.0, 1.0])]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "ranking,A,B\n1,1,0\n2,0,1\n");
        assert!(write_distributions_csv(Vec::new(), &[d("A", vec![1.0]), d("B", vec![])]).is_err());
    }
}
