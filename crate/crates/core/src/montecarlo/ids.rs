use std::collections::HashSet;
use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::idspace::{read_id_file, NodeId};

/// Where the `n` IDs of an experiment come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum IdSource {
    /// Uniform over `{0,1}^d` without replacement.
    Random,
    /// `0, 1, …, n-1` as `d`-bit values.
    Sequential,
    /// A share `fraction` of the IDs start with `prefix`; the rest are uniform.
    Clustered { prefix: String, fraction: f64 },
    /// The first `n` IDs of a text file.
    File { path: PathBuf },
}

impl IdSource {
    pub fn is_random(&self) -> bool {
        matches!(self, IdSource::Random | IdSource::Clustered { .. })
    }
}

fn capacity_ok(n: u64, bits: usize) -> bool {
    bits >= 64 || n <= 1u64 << bits
}

/// Largest `d` for which random IDs are drawn as a subset of `0..2^d`.
const DENSE_BITS: usize = 26;

/// Draws `n` distinct IDs, returned in generation order.
pub fn generate_ids<R: Rng + ?Sized>(
    source: &IdSource,
    n: u64,
    d: usize,
    rng: &mut R,
) -> Result<Vec<NodeId>> {
    if !capacity_ok(n, d) {
        return Err(Error::Capacity { n, d });
    }
    match source {
        IdSource::Random => Ok(random_distinct(n as usize, d, &mut HashSet::new(), rng)),
        IdSource::Sequential => (0..n).map(|v| NodeId::from_u64(v, d)).collect(),
        IdSource::Clustered { prefix, fraction } => clustered(prefix, *fraction, n, d, rng),
        IdSource::File { path } => {
            let ids = read_id_file(path, Some(d))?;
            if (ids.len() as u64) < n {
                return Err(Error::Config(vec![format!(
                    "{} holds {} ids, fewer than n = {n}",
                    path.display(),
                    ids.len()
                )]));
            }
            let mut seen = HashSet::new();
            let ids: Vec<NodeId> = ids.into_iter().take(n as usize).collect();
            for id in &ids {
                if !seen.insert(*id) {
                    return Err(Error::Duplicate(*id));
                }
            }
            Ok(ids)
        }
    }
}

/// `n` uniform IDs not already in `taken`, all of which are added to it.
fn random_distinct<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    taken: &mut HashSet<NodeId>,
    rng: &mut R,
) -> Vec<NodeId> {
    let mut out = Vec::with_capacity(n);
    if d <= DENSE_BITS && taken.is_empty() {
        for v in rand::seq::index::sample(rng, 1usize << d, n) {
            let id = NodeId::from_u64(v as u64, d).expect("value fits");
            taken.insert(id);
            out.push(id);
        }
        return out;
    }
    while out.len() < n {
        let id = NodeId::random(d, rng);
        if taken.insert(id) {
            out.push(id);
        }
    }
    out
}

fn clustered<R: Rng + ?Sized>(
    prefix: &str,
    fraction: f64,
    n: u64,
    d: usize,
    rng: &mut R,
) -> Result<Vec<NodeId>> {
    let prefix = NodeId::parse_binary(prefix)?;
    let p = prefix.len();
    if p > d {
        return Err(Error::Config(vec![format!(
            "cluster prefix has {p} bits but d = {d}"
        )]));
    }
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Config(vec![format!(
            "cluster fraction {fraction} is outside [0, 1]"
        )]));
    }
    let inside = (fraction * n as f64).round() as u64;
    if !capacity_ok(inside, d - p) {
        return Err(Error::Capacity {
            n: inside,
            d: d - p,
        });
    }
    let mut taken = HashSet::new();
    let mut out = Vec::with_capacity(n as usize);
    let prefixed = |id: NodeId| (0..p).fold(id, |acc, i| acc.with_bit(i, prefix.bit(i)));
    while (out.len() as u64) < inside {
        let id = prefixed(NodeId::random(d, rng));
        if taken.insert(id) {
            out.push(id);
        }
    }
    out.extend(random_distinct((n - inside) as usize, d, &mut taken, rng));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::trial_rng;
    use std::io::Write;

    #[test]
    fn sequential_ids() {
        let mut rng = trial_rng(1, 0);
        let ids = generate_ids(&IdSource::Sequential, 4, 3, &mut rng).unwrap();
        let text: Vec<String> = ids.iter().map(|i| i.to_binary_string()).collect();
        assert_eq!(text, ["000", "001", "010", "011"]);
    }

    #[test]
    fn random_full_space() {
        let mut rng = trial_rng(2, 0);
        let mut ids = generate_ids(&IdSource::Random, 16, 4, &mut rng).unwrap();
        ids.sort();
        let all: Vec<NodeId> = (0..16).map(|v| NodeId::from_u64(v, 4).unwrap()).collect();
        assert_eq!(ids, all);
    }

    #[test]
    fn random_wide_ids_are_distinct() {
        let mut rng = trial_rng(3, 0);
        let ids = generate_ids(&IdSource::Random, 1000, 128, &mut rng).unwrap();
        let set: HashSet<NodeId> = ids.iter().copied().collect();
        assert_eq!(set.len(), 1000);
        assert!(ids.iter().all(|i| i.len() == 128));
    }

    #[test]
    fn capacity_errors() {
        let mut rng = trial_rng(4, 0);
        for src in [IdSource::Random, IdSource::Sequential] {
            assert!(matches!(
                generate_ids(&src, 9, 3, &mut rng),
                Err(Error::Capacity { n: 9, d: 3 })
            ));
        }
        let src = IdSource::Clustered {
            prefix: "11".into(),
            fraction: 1.0,
        };
        assert!(generate_ids(&src, 5, 4, &mut rng).is_err());
    }

    #[test]
    fn clustered_ids() {
        let mut rng = trial_rng(5, 0);
        let src = IdSource::Clustered {
            prefix: "101".into(),
            fraction: 0.25,
        };
        let ids = generate_ids(&src, 400, 20, &mut rng).unwrap();
        let set: HashSet<NodeId> = ids.iter().copied().collect();
        assert_eq!(set.len(), 400);
        assert!(ids[..100]
            .iter()
            .all(|i| i.to_binary_string().starts_with("101")));
        let rest = ids[100..]
            .iter()
            .filter(|i| i.to_binary_string().starts_with("101"))
            .count();
        assert!(rest < 40, "{rest}");
    }

    #[test]
    fn file_ids() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "# four ids\n0001\n0010\n\n1100\n1111").unwrap();
        let src = IdSource::File {
            path: file.path().to_path_buf(),
        };
        let mut rng = trial_rng(6, 0);
        let ids = generate_ids(&src, 3, 4, &mut rng).unwrap();
        assert_eq!(ids.len(), 3);
        assert_eq!(ids[2].to_binary_string(), "1100");
        assert!(generate_ids(&src, 5, 4, &mut rng).is_err());

        let mut bad = tempfile::NamedTempFile::new().unwrap();
        writeln!(bad, "0001\n01x1").unwrap();
        let src = IdSource::File {
            path: bad.path().to_path_buf(),
        };
        match generate_ids(&src, 2, 4, &mut rng) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
