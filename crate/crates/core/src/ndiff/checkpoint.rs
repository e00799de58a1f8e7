//! Portable text checkpoints.
//!
//! Layout: a schema-version header, optional `meta` key/value lines,
//! then one `param` line (name + shape) followed by one line of flat
//! values per parameter, parameters in byte-stable name order. Values
//! use the shortest exponential form that round-trips f64 exactly.
//!
//! ```text
//! beamtag-checkpoint 1
//! meta\tvariant\tmain
//! param\tlm.b\t128
//! 0e0 1.25e-1 ...
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{ParamSet, Tensor};
use crate::{Error, Result};

const HEADER: &str = "beamtag-checkpoint 1";

pub fn write_checkpoint(
    w: &mut impl Write,
    params: &ParamSet,
    meta: &[(String, String)],
) -> Result<()> {
    writeln!(w, "{HEADER}")?;
    for (k, v) in meta {
        assert!(
            !k.contains(['\t', '\n']) && !v.contains(['\t', '\n']),
            "meta entries must not contain tabs or newlines"
        );
        writeln!(w, "meta\t{k}\t{v}")?;
    }
    for (name, tensor) in params.iter_sorted() {
        let dims: Vec<String> = tensor.shape().iter().map(|d| d.to_string()).collect();
        writeln!(w, "param\t{name}\t{}", dims.join(" "))?;
        let mut line = String::with_capacity(tensor.len() * 12);
        for (i, v) in tensor.data().iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{v:e}"));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn save_checkpoint(path: &Path, params: &ParamSet, meta: &[(String, String)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(&mut w, params, meta)?;
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(r: impl BufRead) -> Result<(ParamSet, Vec<(String, String)>)> {
    let mut lines = r.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(Error::Data("empty checkpoint".to_string())),
    };
    if header != HEADER {
        return Err(Error::Data(format!(
            "unsupported checkpoint header {header:?} (expected {HEADER:?})"
        )));
    }
    let mut params = ParamSet::new();
    let mut meta = Vec::new();
    let mut pending: Option<(String, Vec<usize>)> = None;
    for (lineno, line) in lines {
        let line = line?;
        let err = |msg: String| Error::Parse {
            line: lineno + 1,
            msg,
        };
        if let Some((name, shape)) = pending.take() {
            let data = line
                .split(' ')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| err(format!("bad value in {name}: {e}")))?;
            let expected: usize = shape.iter().product();
            if data.len() != expected {
                return Err(err(format!(
                    "{name}: expected {expected} values, found {}",
                    data.len()
                )));
            }
            params.add(&name, Tensor::new(shape, data));
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        match fields[0] {
            "meta" if fields.len() == 3 => {
                meta.push((fields[1].to_string(), fields[2].to_string()));
            }
            "param" if fields.len() == 3 => {
                let shape = fields[2]
                    .split(' ')
                    .map(|d| d.parse::<usize>())
                    .collect::<std::result::Result<Vec<usize>, _>>()
                    .map_err(|e| err(format!("bad shape: {e}")))?;
                pending = Some((fields[1].to_string(), shape));
            }
            other => {
                return Err(err(format!("unexpected record kind {other:?}")));
            }
        }
    }
    if let Some((name, _)) = pending {
        return Err(Error::Data(format!("truncated checkpoint: {name} has no values")));
    }
    Ok((params, meta))
}

pub fn load_checkpoint(path: &Path) -> Result<(ParamSet, Vec<(String, String)>)> {
    read_checkpoint(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndiff::{embedding_table, glorot};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::io::Cursor;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut params = ParamSet::new();
        params.add("z.weight", glorot(3, 5, &mut rng));
        params.add("a.emb", embedding_table(4, 2, &mut rng));
        params.add("m.bias", Tensor::new(vec![3], vec![0.0, -1.5e-9, 3.25e11]));
        let meta = vec![("variant".to_string(), "main".to_string())];

        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &params, &meta).unwrap();
        let (loaded, got_meta) = read_checkpoint(Cursor::new(&buf)).unwrap();
        assert_eq!(got_meta, meta);
        assert_eq!(loaded.len(), params.len());
        for (name, tensor) in params.iter_sorted() {
            let id = loaded.id(name).expect("parameter survived");
            let lt = loaded.get(id);
            assert_eq!(lt.shape(), tensor.shape());
            for (a, b) in lt.data().iter().zip(tensor.data()) {
                assert_eq!(a.to_bits(), b.to_bits(), "{name}");
            }
        }

        // byte-stable: writing the loaded set reproduces the file
        let mut buf2 = Vec::new();
        write_checkpoint(&mut buf2, &loaded, &got_meta).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn params_sorted_by_name() {
        let mut params = ParamSet::new();
        params.add("zz", Tensor::new(vec![1], vec![1.0]));
        params.add("aa", Tensor::new(vec![1], vec![2.0]));
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &params, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let aa = text.find("param\taa").unwrap();
        let zz = text.find("param\tzz").unwrap();
        assert!(aa < zz);
    }

    #[test]
    fn rejects_bad_header_and_truncation() {
        assert!(read_checkpoint(Cursor::new("nonsense\n")).is_err());
        let text = format!("{HEADER}\nparam\tw\t2\n");
        assert!(read_checkpoint(Cursor::new(text)).is_err());
        let text = format!("{HEADER}\nparam\tw\t2\n1.0 2.0 3.0\n");
        assert!(read_checkpoint(Cursor::new(text)).is_err());
    }
}
