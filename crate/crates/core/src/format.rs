//! Text formats for tensors and TCP instances.
//!
//! Tensor file:
//! ```text
//! tensor <m> <n>
//! <i1> <i2> ... <im> <value>
//! # comment
//! ```
//! Unlisted coefficients are zero; indices are 1-based. An instance file is a
//! tensor file followed by one `q <v1> <v2> ... <vn>` line.

use crate::error::ParseError;
use crate::solver::TCPInstance;
use crate::tensor::Tensor;

struct Parsed {
    tensor: Tensor,
    q: Option<Vec<f64>>,
}

fn parse_inner(src: &str) -> Result<Parsed, ParseError> {
    let mut header: Option<(usize, usize)> = None;
    let mut entries: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut q: Option<Vec<f64>> = None;
    for (idx, raw) in src.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if header.is_none() {
            if fields.len() != 3 || fields[0] != "tensor" {
                return Err(ParseError::Syntax {
                    line: line_no,
                    msg: format!("expected `tensor <order> <dim>`, got `{line}`"),
                });
            }
            let order = fields[1].parse::<usize>().map_err(|e| ParseError::Syntax {
                line: line_no,
                msg: format!("bad order `{}`: {e}", fields[1]),
            })?;
            let dim = fields[2].parse::<usize>().map_err(|e| ParseError::Syntax {
                line: line_no,
                msg: format!("bad dimension `{}`: {e}", fields[2]),
            })?;
            header = Some((order, dim));
            continue;
        }
        let (order, dim) = header.unwrap();
        if fields[0] == "q" {
            if q.is_some() {
                return Err(ParseError::Syntax {
                    line: line_no,
                    msg: "duplicate q line".into(),
                });
            }
            if fields.len() != dim + 1 {
                return Err(ParseError::Syntax {
                    line: line_no,
                    msg: format!("q line needs {dim} values, got {}", fields.len() - 1),
                });
            }
            let values = fields[1..]
                .iter()
                .map(|s| {
                    s.parse::<f64>().map_err(|e| ParseError::Syntax {
                        line: line_no,
                        msg: format!("bad value `{s}`: {e}"),
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            q = Some(values);
            continue;
        }
        if q.is_some() {
            return Err(ParseError::Syntax {
                line: line_no,
                msg: "entry after q line".into(),
            });
        }
        if fields.len() != order + 1 {
            return Err(ParseError::Syntax {
                line: line_no,
                msg: format!("entry needs {order} indices and a value, got {} fields", fields.len()),
            });
        }
        let tuple = fields[..order]
            .iter()
            .map(|s| {
                s.parse::<usize>().map_err(|e| ParseError::Syntax {
                    line: line_no,
                    msg: format!("bad index `{s}`: {e}"),
                })
            })
            .collect::<Result<Vec<usize>, _>>()?;
        let value = fields[order].parse::<f64>().map_err(|e| ParseError::Syntax {
            line: line_no,
            msg: format!("bad value `{}`: {e}", fields[order]),
        })?;
        entries.push((tuple, value));
    }
    let (order, dim) = header.ok_or(ParseError::MissingHeader)?;
    let tensor = Tensor::from_entries(order, dim, entries).map_err(|source| ParseError::Tensor {
        line: 0,
        source,
    })?;
    Ok(Parsed { tensor, q })
}

/// Parses a tensor file. A `q` line is rejected; use [`parse_instance`].
pub fn parse_tensor(src: &str) -> Result<Tensor, ParseError> {
    let parsed = parse_inner(src)?;
    if parsed.q.is_some() {
        return Err(ParseError::Syntax {
            line: 0,
            msg: "unexpected q line in tensor file".into(),
        });
    }
    Ok(parsed.tensor)
}

/// Parses an instance file: a tensor followed by its constant vector.
pub fn parse_instance(src: &str) -> Result<TCPInstance, ParseError> {
    let parsed = parse_inner(src)?;
    let q = parsed.q.ok_or(ParseError::MissingQ)?;
    TCPInstance::new(parsed.tensor, q).map_err(|source| ParseError::Tensor { line: 0, source })
}

/// Writes a tensor in the text format; one line per nonzero coefficient in
/// row-major order. Values round-trip exactly.
pub fn write_tensor(t: &Tensor) -> String {
    let mut out = format!("tensor {} {}\n", t.order(), t.dim());
    for (flat, &c) in t.coeffs().iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let tuple = t.tuple_of(flat);
        for i in tuple {
            out.push_str(&i.to_string());
            out.push(' ');
        }
        out.push_str(&c.to_string());
        out.push('\n');
    }
    out
}

/// Writes an instance file (tensor plus `q` line).
pub fn write_instance(inst: &TCPInstance) -> String {
    let mut out = write_tensor(inst.tensor());
    out.push('q');
    for v in inst.q() {
        out.push(' ');
        out.push_str(&v.to_string());
    }
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures;

    #[test]
    fn parses_header_entries_and_comments() {
        let src = "# example tensor\n\ntensor 4 2\n1 1 2 2 1\n2 2 2 2 1\n2 1 1 2 -1\n";
        let t = parse_tensor(src).unwrap();
        assert!(t.coeffs_equal(&fixtures::example_3_1()));
    }

    #[test]
    fn parse_errors_name_lines() {
        let err = parse_tensor("tensor 3 2\n1 2 1.5\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = parse_tensor("tonsor 3 2\n").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
        let err = parse_tensor("tensor 3 2\n1 2 3 1.0\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(parse_tensor("").is_err());
    }

    #[test]
    fn instance_requires_q() {
        let src = "tensor 3 2\n1 2 2 1\nq -4 1\n";
        let inst = parse_instance(src).unwrap();
        assert_eq!(inst.q(), &[-4.0, 1.0]);
        assert!(parse_instance("tensor 3 2\n1 2 2 1\n").is_err());
        // tensor parser rejects instance files
        assert!(parse_tensor(src).is_err());
        // wrong arity on the q line
        assert!(parse_instance("tensor 3 2\nq 1\n").is_err());
    }

    #[test]
    fn write_parse_roundtrip_is_exact() {
        for t in [
            fixtures::example_3_1(),
            fixtures::example_3_2(),
            crate::corpus::example51_family(7).unwrap(),
        ] {
            let text = write_tensor(&t);
            let back = parse_tensor(&text).unwrap();
            assert!(back.coeffs_equal(&t));
        }
    }

    #[test]
    fn roundtrip_preserves_awkward_values() {
        let t = Tensor::from_entries(
            3,
            2,
            vec![
                (vec![1, 1, 1], 0.1),
                (vec![1, 2, 2], 1.0 / 3.0),
                (vec![2, 1, 2], -1e-17),
                (vec![2, 2, 2], 12345.678901234567),
            ],
        )
        .unwrap();
        let back = parse_tensor(&write_tensor(&t)).unwrap();
        assert!(back.coeffs_equal(&t));
    }
}
