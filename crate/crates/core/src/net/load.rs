//! File ingestion for street networks, fixed-route lines, and zone maps.
//!
//! The street file is a single CSV with two header-delimited sections (nodes,
//! then links). `#` starts a comment anywhere; a `# coords:` comment before
//! the node header declares coordinate units. Links are directed as listed —
//! a two-way street appears as two rows.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

use super::{CoordUnits, FrtLine, Network, Node, NodeId, StreetLink, TimeBasis};

/// Load the street file plus the line file and build the auto- and walk-time
/// networks over the shared topology. `land_use` optionally overrides node
/// job counts. Returns `(auto, walk, lines)`.
pub fn load_networks(
    street: &Path,
    frt: &Path,
    land_use: Option<&Path>,
    walk_speed_mph: f64,
) -> Result<(Network, Network, Vec<FrtLine>)> {
    let (mut nodes, links, coords) = parse_street(street)?;
    if let Some(path) = land_use {
        apply_jobs(&mut nodes, path)?;
    }
    let auto = Network::from_street(nodes.clone(), &links, TimeBasis::Auto, coords)?;
    let walk = Network::from_street(
        nodes,
        &links,
        TimeBasis::Walk {
            speed_mph: walk_speed_mph,
        },
        coords,
    )?;
    let lines = parse_frt_lines(frt, &walk)?;
    Ok((auto, walk, lines))
}

fn parse_street(path: &Path) -> Result<(Vec<Node>, Vec<StreetLink>, CoordUnits)> {
    let text = std::fs::read_to_string(path)?;
    let mut coords = CoordUnits::Meters;
    let mut nodes = Vec::new();
    let mut links = Vec::new();

    #[derive(PartialEq)]
    enum Section {
        Preamble,
        Nodes,
        Links,
    }
    let mut section = Section::Preamble;

    for (ix, raw) in text.lines().enumerate() {
        let lineno = ix + 1;
        let line = match raw.find('#') {
            Some(p) => {
                let comment = raw[p + 1..].trim();
                if let Some(units) = comment.strip_prefix("coords:") {
                    coords = match units.trim() {
                        "meters" => CoordUnits::Meters,
                        "degrees" => CoordUnits::Degrees,
                        other => {
                            return Err(Error::parse(
                                path,
                                lineno,
                                format!("unknown coordinate units {other:?}"),
                            ))
                        }
                    };
                }
                &raw[..p]
            }
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }

        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields == ["node_id", "x", "y", "jobs"] {
            if section != Section::Preamble {
                return Err(Error::parse(path, lineno, "repeated node header"));
            }
            section = Section::Nodes;
            continue;
        }
        if fields == ["from", "to", "length_mi", "auto_time_s"] {
            if section != Section::Nodes {
                return Err(Error::parse(
                    path,
                    lineno,
                    "link header must follow the node section",
                ));
            }
            section = Section::Links;
            continue;
        }

        match section {
            Section::Preamble => {
                return Err(Error::parse(
                    path,
                    lineno,
                    "expected node header `node_id,x,y,jobs`",
                ))
            }
            Section::Nodes => {
                if fields.len() != 4 {
                    return Err(Error::parse(
                        path,
                        lineno,
                        format!("expected 4 node fields, got {}", fields.len()),
                    ));
                }
                nodes.push(Node {
                    id: num(path, lineno, fields[0], "node_id")?,
                    x: num(path, lineno, fields[1], "x")?,
                    y: num(path, lineno, fields[2], "y")?,
                    jobs: num(path, lineno, fields[3], "jobs")?,
                    zone: 0,
                });
            }
            Section::Links => {
                if fields.len() != 4 {
                    return Err(Error::parse(
                        path,
                        lineno,
                        format!("expected 4 link fields, got {}", fields.len()),
                    ));
                }
                let link = StreetLink {
                    from: num(path, lineno, fields[0], "from")?,
                    to: num(path, lineno, fields[1], "to")?,
                    length_mi: num(path, lineno, fields[2], "length_mi")?,
                    auto_time_s: num(path, lineno, fields[3], "auto_time_s")?,
                };
                if !(link.length_mi >= 0.0) || !(link.auto_time_s >= 0.0) {
                    return Err(Error::parse(
                        path,
                        lineno,
                        "length_mi and auto_time_s must be non-negative",
                    ));
                }
                links.push(link);
            }
        }
    }

    if nodes.is_empty() {
        return Err(Error::parse(path, text.lines().count().max(1), "no nodes"));
    }
    // dangling references are caught here with their line numbers lost;
    // re-check per link so the message names the row
    let ids: std::collections::HashSet<NodeId> = nodes.iter().map(|n| n.id).collect();
    for l in &links {
        for end in [l.from, l.to] {
            if !ids.contains(&end) {
                return Err(Error::invalid(format!(
                    "{}: link {}->{} references unknown node {}",
                    path.display(),
                    l.from,
                    l.to,
                    end
                )));
            }
        }
    }
    Ok((nodes, links, coords))
}

fn num<T: std::str::FromStr>(path: &Path, lineno: usize, s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(path, lineno, format!("bad {what} value {s:?}")))
}

/// Parse the line file: one row per (route, direction, stop). Rows of a route
/// must agree on headway, duration, length, and operating hours. Direction 1
/// is optional and defaults to the reversed outbound stop pattern. An empty
/// file (or header only) means no fixed routes.
fn parse_frt_lines(path: &Path, street: &Network) -> Result<Vec<FrtLine>> {
    let text = std::fs::read_to_string(path)?;
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }

    struct Row {
        route_id: String,
        direction: u8,
        stop_seq: u32,
        node_id: NodeId,
        headway_min: f64,
        duration_min: f64,
        length_mi: f64,
        operating_hr: f64,
        lineno: usize,
    }

    let mut rows: Vec<Row> = Vec::new();
    let mut saw_header = false;
    for (ix, raw) in text.lines().enumerate() {
        let lineno = ix + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !saw_header {
            let expect = [
                "route_id",
                "direction",
                "stop_seq",
                "node_id",
                "headway_min",
                "duration_min",
                "length_mi",
                "operating_hr",
            ];
            if fields != expect {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("expected header `{}`", expect.join(",")),
                ));
            }
            saw_header = true;
            continue;
        }
        if fields.len() != 8 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 8 fields, got {}", fields.len()),
            ));
        }
        let direction: u8 = num(path, lineno, fields[1], "direction")?;
        if direction > 1 {
            return Err(Error::parse(path, lineno, "direction must be 0 or 1"));
        }
        rows.push(Row {
            route_id: fields[0].to_string(),
            direction,
            stop_seq: num(path, lineno, fields[2], "stop_seq")?,
            node_id: num(path, lineno, fields[3], "node_id")?,
            headway_min: num(path, lineno, fields[4], "headway_min")?,
            duration_min: num(path, lineno, fields[5], "duration_min")?,
            length_mi: num(path, lineno, fields[6], "length_mi")?,
            operating_hr: num(path, lineno, fields[7], "operating_hr")?,
            lineno,
        });
    }

    // group rows by route in first-appearance order
    let mut order: Vec<String> = Vec::new();
    let mut grouped: BTreeMap<String, Vec<&Row>> = BTreeMap::new();
    for r in &rows {
        if !grouped.contains_key(&r.route_id) {
            order.push(r.route_id.clone());
        }
        grouped.entry(r.route_id.clone()).or_default().push(r);
    }

    let mut lines = Vec::new();
    for route_id in order {
        let rows = &grouped[&route_id];
        let first = rows[0];
        for r in rows.iter() {
            if r.headway_min != first.headway_min
                || r.duration_min != first.duration_min
                || r.length_mi != first.length_mi
                || r.operating_hr != first.operating_hr
            {
                return Err(Error::parse(
                    path,
                    r.lineno,
                    format!("line {route_id}: attributes differ between rows"),
                ));
            }
        }
        let stops = |dir: u8| -> Result<Vec<NodeId>> {
            let mut dir_rows: Vec<&&Row> = rows.iter().filter(|r| r.direction == dir).collect();
            dir_rows.sort_by_key(|r| r.stop_seq);
            for w in dir_rows.windows(2) {
                if w[0].stop_seq == w[1].stop_seq {
                    return Err(Error::parse(
                        path,
                        w[1].lineno,
                        format!("line {route_id}: duplicate stop_seq {}", w[1].stop_seq),
                    ));
                }
            }
            for r in &dir_rows {
                if street.index_of(r.node_id).is_none() {
                    return Err(Error::parse(
                        path,
                        r.lineno,
                        format!("line {route_id}: stop {} is not a street node", r.node_id),
                    ));
                }
            }
            Ok(dir_rows.iter().map(|r| r.node_id).collect())
        };
        let stops_out = stops(0)?;
        let stops_back = stops(1)?;
        let line = FrtLine {
            route_id: route_id.clone(),
            headway_min: first.headway_min,
            duration_min: first.duration_min,
            length_mi: first.length_mi,
            operating_hr: first.operating_hr,
            stops_out,
            stops_back,
        };
        line.validate()
            .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        lines.push(line);
    }
    Ok(lines)
}

fn apply_jobs(nodes: &mut [Node], path: &Path) -> Result<()> {
    let map = parse_two_column(path, "node_id", &["jobs"])?;
    let mut index: BTreeMap<NodeId, usize> = BTreeMap::new();
    for (ix, n) in nodes.iter().enumerate() {
        index.insert(n.id, ix);
    }
    for (id, jobs) in map {
        let ix = *index
            .get(&id)
            .ok_or_else(|| Error::invalid(format!("{}: unknown node {id}", path.display())))?;
        nodes[ix].jobs = jobs;
    }
    Ok(())
}

/// Load a node -> zone assignment (`node_id,zone_id` CSV; the legacy `zone`
/// header is also accepted; `#` comments allowed).
pub fn load_zone_map(path: &Path) -> Result<BTreeMap<NodeId, u32>> {
    parse_two_column(path, "node_id", &["zone_id", "zone"])
}

fn parse_two_column(path: &Path, col_a: &str, col_b: &[&str]) -> Result<BTreeMap<NodeId, u32>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = BTreeMap::new();
    let mut saw_header = false;
    for (ix, raw) in text.lines().enumerate() {
        let lineno = ix + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !saw_header {
            if fields.len() != 2 || fields[0] != col_a || !col_b.contains(&fields[1]) {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("expected header `{col_a},{}`", col_b[0]),
                ));
            }
            saw_header = true;
            continue;
        }
        if fields.len() != 2 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 2 fields, got {}", fields.len()),
            ));
        }
        let id: NodeId = num(path, lineno, fields[0], col_a)?;
        let val: u32 = num(path, lineno, fields[1], col_b[0])?;
        if out.insert(id, val).is_some() {
            return Err(Error::parse(
                path,
                lineno,
                format!("duplicate {col_a} {id}"),
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_tmp(name: &str, content: &str) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        let mut f = std::fs::File::create(dir.path().join(name)).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        dir
    }

    const STREET: &str = "\
# a short two-block street
# coords: meters
node_id,x,y,jobs
0,0.0,0.0,5
1,150.2,0.0,0
2,300.4,0.0,12
from,to,length_mi,auto_time_s
0,1,0.0933,13.4   # eastbound
1,0,0.0933,13.4
1,2,0.0933,13.4
2,1,0.0933,13.4
";

    #[test]
    fn street_round_trip_and_walk_time() {
        let dir = write_tmp("street.csv", STREET);
        std::fs::write(dir.path().join("lines.csv"), "").unwrap();
        let (auto, walk, lines) = load_networks(
            &dir.path().join("street.csv"),
            &dir.path().join("lines.csv"),
            None,
            2.8,
        )
        .unwrap();
        assert!(lines.is_empty());
        assert_eq!(auto.n(), 3);
        assert_eq!(auto.links().len(), 4);
        assert_eq!(auto.coords, CoordUnits::Meters);
        assert_eq!(auto.link(0).time_s, 13.4);
        // 0.0933 mi at 2.8 mph is just under two minutes on foot
        let t = walk.link(0).time_s;
        assert!((t - 0.0933 / 2.8 * 3600.0).abs() < 1e-12);
        assert!((t - 120.0).abs() < 0.05);
        assert_eq!(auto.node(auto.index_of(2).unwrap()).jobs, 12);
    }

    #[test]
    fn parse_errors_carry_file_and_line() {
        let dir = write_tmp(
            "street.csv",
            "node_id,x,y,jobs\n0,0,0,1\n1,1,0,oops\nfrom,to,length_mi,auto_time_s\n",
        );
        let err = parse_street(&dir.path().join("street.csv")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("street.csv:3"), "{msg}");
        assert!(msg.contains("jobs"), "{msg}");
    }

    #[test]
    fn dangling_link_is_rejected() {
        let dir = write_tmp(
            "street.csv",
            "node_id,x,y,jobs\n0,0,0,1\n1,1,0,1\nfrom,to,length_mi,auto_time_s\n0,7,0.1,10\n",
        );
        let err = parse_street(&dir.path().join("street.csv")).unwrap_err();
        assert!(err.to_string().contains("unknown node 7"));
    }

    #[test]
    fn frt_lines_group_sort_and_default_return_direction() {
        let dir = write_tmp("street.csv", STREET);
        let lines_csv = "\
route_id,direction,stop_seq,node_id,headway_min,duration_min,length_mi,operating_hr
R1,0,2,2,15,6,0.19,19
R1,0,1,1,15,6,0.19,19   # out of order on purpose
R1,0,0,0,15,6,0.19,19
";
        std::fs::write(dir.path().join("lines.csv"), lines_csv).unwrap();
        let (_, _, lines) = load_networks(
            &dir.path().join("street.csv"),
            &dir.path().join("lines.csv"),
            None,
            2.8,
        )
        .unwrap();
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].stops_out, vec![0, 1, 2]);
        assert!(lines[0].stops_back.is_empty()); // filled at build time
        assert_eq!(lines[0].headway_min, 15.0);
    }

    #[test]
    fn inconsistent_line_attributes_are_rejected_with_line_number() {
        let dir = write_tmp("street.csv", STREET);
        let lines_csv = "\
route_id,direction,stop_seq,node_id,headway_min,duration_min,length_mi,operating_hr
R1,0,0,0,15,6,0.19,19
R1,0,1,2,10,6,0.19,19
";
        std::fs::write(dir.path().join("lines.csv"), lines_csv).unwrap();
        let err = load_networks(
            &dir.path().join("street.csv"),
            &dir.path().join("lines.csv"),
            None,
            2.8,
        )
        .unwrap_err();
        assert!(err.to_string().contains("lines.csv:3"), "{err}");
    }

    #[test]
    fn unknown_stop_node_is_rejected() {
        let dir = write_tmp("street.csv", STREET);
        let lines_csv = "\
route_id,direction,stop_seq,node_id,headway_min,duration_min,length_mi,operating_hr
R1,0,0,0,15,6,0.19,19
R1,0,1,9,15,6,0.19,19
";
        std::fs::write(dir.path().join("lines.csv"), lines_csv).unwrap();
        let err = load_networks(
            &dir.path().join("street.csv"),
            &dir.path().join("lines.csv"),
            None,
            2.8,
        )
        .unwrap_err();
        assert!(err.to_string().contains("stop 9"), "{err}");
    }

    #[test]
    fn zone_map_and_jobs_override() {
        let dir = write_tmp("street.csv", STREET);
        std::fs::write(dir.path().join("zones.csv"), "node_id,zone\n0,1\n1,1\n2,2\n").unwrap();
        let zones = load_zone_map(&dir.path().join("zones.csv")).unwrap();
        assert_eq!(zones.len(), 3);
        assert_eq!(zones[&2], 2);

        std::fs::write(dir.path().join("jobs.csv"), "node_id,jobs\n1,44\n").unwrap();
        std::fs::write(dir.path().join("lines.csv"), "").unwrap();
        let (auto, _, _) = load_networks(
            &dir.path().join("street.csv"),
            &dir.path().join("lines.csv"),
            Some(&dir.path().join("jobs.csv")),
            2.8,
        )
        .unwrap();
        assert_eq!(auto.node(auto.index_of(1).unwrap()).jobs, 44);
    }
}
