//! File formats: clouds as CSV and as a compact binary container, graphs as
//! edge lists, distance matrices and analysis curves as CSV. All text output
//! prints floats with shortest-roundtrip formatting, so identical data gives
//! byte-identical files.

use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::metric::MetricGraph;
use crate::setdef::SampleCloud;

/// Magic header of the binary cloud container (16 bytes).
pub const CLOUD_MAGIC: &[u8; 16] = b"LIPGEO-CLOUD\0\0\0\0";

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad magic header")]
    BadMagic,
    #[error("malformed {what} at line {line}: {msg}")]
    Malformed { what: &'static str, line: usize, msg: String },
}

/// Cloud CSV: header `x1,..,xn,piece_label,residual`, one point per row.
pub fn write_cloud_csv<W: Write>(mut w: W, cloud: &SampleCloud) -> Result<(), IoError> {
    let mut header: Vec<String> = (1..=cloud.dim).map(|i| format!("x{i}")).collect();
    header.push("piece_label".into());
    header.push("residual".into());
    writeln!(w, "{}", header.join(","))?;
    for i in 0..cloud.len() {
        let mut row: Vec<String> = cloud.points[i].iter().map(|c| format!("{c}")).collect();
        row.push(format!("{}", cloud.piece_label[i]));
        row.push(format!("{}", cloud.residual[i]));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_cloud_csv<R: Read>(r: R, density_target: f64, seed: u64) -> Result<SampleCloud, IoError> {
    let mut text = String::new();
    let mut r = io::BufReader::new(r);
    r.read_to_string(&mut text)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(IoError::Malformed {
        what: "cloud csv",
        line: 1,
        msg: "missing header".into(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[cols.len() - 2] != "piece_label" || cols[cols.len() - 1] != "residual"
    {
        return Err(IoError::Malformed {
            what: "cloud csv",
            line: 1,
            msg: "expected x1..xn,piece_label,residual".into(),
        });
    }
    let dim = cols.len() - 2;
    let mut cloud = SampleCloud {
        dim,
        points: Vec::new(),
        piece_label: Vec::new(),
        residual: Vec::new(),
        density_target,
        seed,
    };
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 2 {
            return Err(IoError::Malformed {
                what: "cloud csv",
                line: lineno + 1,
                msg: format!("expected {} fields, got {}", dim + 2, fields.len()),
            });
        }
        let parse = |s: &str, lineno: usize| -> Result<f64, IoError> {
            s.parse().map_err(|_| IoError::Malformed {
                what: "cloud csv",
                line: lineno + 1,
                msg: format!("bad number `{s}`"),
            })
        };
        let point: Vec<f64> =
            fields[..dim].iter().map(|s| parse(s, lineno)).collect::<Result<_, _>>()?;
        let label: usize = fields[dim].parse().map_err(|_| IoError::Malformed {
            what: "cloud csv",
            line: lineno + 1,
            msg: format!("bad label `{}`", fields[dim]),
        })?;
        let residual = parse(fields[dim + 1], lineno)?;
        cloud.push(point, label, residual);
    }
    Ok(cloud)
}

/// Binary container: 16-byte magic, then little-endian u64 dim, u64 count,
/// f64 density, u64 seed, then count*dim point coordinates, count labels
/// (u64), count residuals — all little-endian 64-bit.
pub fn write_cloud_binary<W: Write>(mut w: W, cloud: &SampleCloud) -> Result<(), IoError> {
    w.write_all(CLOUD_MAGIC)?;
    w.write_all(&(cloud.dim as u64).to_le_bytes())?;
    w.write_all(&(cloud.len() as u64).to_le_bytes())?;
    w.write_all(&cloud.density_target.to_le_bytes())?;
    w.write_all(&cloud.seed.to_le_bytes())?;
    for p in &cloud.points {
        for c in p {
            w.write_all(&c.to_le_bytes())?;
        }
    }
    for l in &cloud.piece_label {
        w.write_all(&(*l as u64).to_le_bytes())?;
    }
    for r in &cloud.residual {
        w.write_all(&r.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_cloud_binary<R: Read>(mut r: R) -> Result<SampleCloud, IoError> {
    let mut magic = [0u8; 16];
    r.read_exact(&mut magic)?;
    if &magic != CLOUD_MAGIC {
        return Err(IoError::BadMagic);
    }
    let mut buf8 = [0u8; 8];
    let mut read_u64 = |r: &mut R| -> Result<u64, IoError> {
        r.read_exact(&mut buf8)?;
        Ok(u64::from_le_bytes(buf8))
    };
    let dim = read_u64(&mut r)? as usize;
    let count = read_u64(&mut r)? as usize;
    let mut fbuf = [0u8; 8];
    r.read_exact(&mut fbuf)?;
    let density_target = f64::from_le_bytes(fbuf);
    r.read_exact(&mut fbuf)?;
    let seed = u64::from_le_bytes(fbuf);
    let mut cloud = SampleCloud {
        dim,
        points: Vec::with_capacity(count),
        piece_label: vec![0; count],
        residual: vec![0.0; count],
        density_target,
        seed,
    };
    for _ in 0..count {
        let mut p = Vec::with_capacity(dim);
        for _ in 0..dim {
            r.read_exact(&mut fbuf)?;
            p.push(f64::from_le_bytes(fbuf));
        }
        cloud.points.push(p);
    }
    for l in cloud.piece_label.iter_mut() {
        r.read_exact(&mut fbuf)?;
        *l = u64::from_le_bytes(fbuf) as usize;
    }
    for v in cloud.residual.iter_mut() {
        r.read_exact(&mut fbuf)?;
        *v = f64::from_le_bytes(fbuf);
    }
    Ok(cloud)
}

/// Edge-list text format: `# lipgeo-graph v1 rule=<rule>` then `u v weight`
/// lines with u < v.
pub fn write_graph_edges<W: Write>(mut w: W, graph: &MetricGraph) -> Result<(), IoError> {
    writeln!(w, "# lipgeo-graph v1 rule={}", graph.rule.describe())?;
    for (u, row) in graph.adjacency.iter().enumerate() {
        for &(v, weight) in row {
            if u < v {
                writeln!(w, "{u} {v} {weight}")?;
            }
        }
    }
    Ok(())
}

/// Distance matrix CSV; unreachable pairs print as the string `unreachable`,
/// never as an IEEE infinity.
pub fn write_distance_matrix<W: Write>(mut w: W, rows: &[Vec<Option<f64>>]) -> Result<(), IoError> {
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .map(|d| match d {
                Some(v) => format!("{v}"),
                None => "unreachable".to_string(),
            })
            .collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Two-column curve CSV with a named header, e.g. (t, ratio) pairs.
pub fn write_curve_csv<W: Write>(
    mut w: W,
    x_name: &str,
    y_name: &str,
    points: &[(f64, f64)],
) -> Result<(), IoError> {
    writeln!(w, "{x_name},{y_name}")?;
    for (x, y) in points {
        writeln!(w, "{x},{y}")?;
    }
    Ok(())
}

/// Paired CSV for a sampled map: domain row then image row, repeated.
pub fn write_sampled_map<W: Write>(
    mut w: W,
    map: &crate::transforms::SampledMap,
) -> Result<(), IoError> {
    for (d, i) in map.domain_points.iter().zip(&map.image_points) {
        let row: Vec<String> = d.iter().map(|c| format!("{c}")).collect();
        writeln!(w, "{}", row.join(","))?;
        let row: Vec<String> = i.iter().map(|c| format!("{c}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn save_cloud_csv(path: &Path, cloud: &SampleCloud) -> Result<(), IoError> {
    write_cloud_csv(std::fs::File::create(path)?, cloud)
}

pub fn save_cloud_binary(path: &Path, cloud: &SampleCloud) -> Result<(), IoError> {
    write_cloud_binary(std::fs::File::create(path)?, cloud)
}

pub fn load_cloud_binary(path: &Path) -> Result<SampleCloud, IoError> {
    read_cloud_binary(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{build_graph_on, GraphRule};

    fn sample() -> SampleCloud {
        let mut cloud = SampleCloud {
            dim: 2,
            points: Vec::new(),
            piece_label: Vec::new(),
            residual: Vec::new(),
            density_target: 0.25,
            seed: 99,
        };
        cloud.push(vec![0.0, 1.5], 0, 0.0);
        cloud.push(vec![0.1, -2.25e-7], 1, 3.5e-12);
        cloud.push(vec![1.0 / 3.0, 2.0f64.sqrt()], 0, 0.0);
        cloud
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let cloud = sample();
        let mut buf = Vec::new();
        write_cloud_csv(&mut buf, &cloud).unwrap();
        let back = read_cloud_csv(&buf[..], cloud.density_target, cloud.seed).unwrap();
        assert_eq!(back, cloud);
    }

    #[test]
    fn binary_roundtrip_is_exact_with_magic() {
        let cloud = sample();
        let mut buf = Vec::new();
        write_cloud_binary(&mut buf, &cloud).unwrap();
        assert_eq!(&buf[..16], CLOUD_MAGIC);
        let back = read_cloud_binary(&buf[..]).unwrap();
        assert_eq!(back, cloud);
        // corrupted magic is rejected
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_cloud_binary(&bad[..]), Err(IoError::BadMagic)));
    }

    #[test]
    fn graph_header_carries_the_rule() {
        let g = build_graph_on(
            &[vec![0.0, 0.0], vec![0.01, 0.0]],
            GraphRule::EpsilonBall(0.03),
        );
        let mut buf = Vec::new();
        write_graph_edges(&mut buf, &g).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# lipgeo-graph v1 rule=eps=0.03");
        assert_eq!(lines.next().unwrap(), "0 1 0.01");
    }

    #[test]
    fn unreachable_serializes_as_a_word() {
        let mut buf = Vec::new();
        write_distance_matrix(&mut buf, &[vec![Some(0.0), None]]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0,unreachable\n");
    }
}
