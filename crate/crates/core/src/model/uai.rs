//! UAI `MARKOV` text format.
//!
//! ```text
//! MARKOV
//! <n>
//! <card_1> … <card_n>
//! <F>
//! <scope_size> <v_1> … <v_k>      (F lines)
//! <table_size> <entries…>         (F blocks, row-major, last variable fastest)
//! ```
//!
//! Entries are non-negative reals stored as natural logs (`0 ↦ −∞`).

use super::{Factor, GraphicalModel};
use crate::error::{Error, Result};
use std::fmt::Write;

struct Tokens<'a> {
    inner: Box<dyn Iterator<Item = (usize, &'a str)> + 'a>,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let inner = text
            .lines()
            .enumerate()
            .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)));
        Tokens {
            inner: Box::new(inner),
            last_line: 0,
        }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((line, tok)) => {
                self.last_line = line;
                Ok((line, tok))
            }
            None => Err(Error::Parse {
                line: self.last_line,
                message: format!("unexpected end of input, expected {what}"),
            }),
        }
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        let (line, tok) = self.next(what)?;
        tok.parse().map_err(|_| Error::Parse {
            line,
            message: format!("expected {what}, found {tok:?}"),
        })
    }

    fn real(&mut self, what: &str) -> Result<f64> {
        let (line, tok) = self.next(what)?;
        tok.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Parse {
                line,
                message: format!("expected {what}, found {tok:?}"),
            })
    }
}

/// Parses a UAI `MARKOV` model.
pub fn load_uai(text: &str) -> Result<GraphicalModel> {
    let mut tok = Tokens::new(text);
    let (line, kind) = tok.next("MARKOV header")?;
    if !kind.eq_ignore_ascii_case("MARKOV") {
        return Err(Error::Parse {
            line,
            message: format!("expected MARKOV header, found {kind:?}"),
        });
    }
    let n = tok.usize("variable count")?;
    if n == 0 {
        return Err(Error::Parse {
            line: tok.last_line,
            message: "variable count must be positive".into(),
        });
    }
    let mut cards = Vec::with_capacity(n);
    for _ in 0..n {
        cards.push(tok.usize("cardinality")?);
    }
    let f = tok.usize("factor count")?;
    let mut scopes = Vec::with_capacity(f);
    for _ in 0..f {
        let k = tok.usize("scope size")?;
        let mut scope = Vec::with_capacity(k);
        for _ in 0..k {
            let v = tok.usize("scope variable")?;
            if v >= n {
                return Err(Error::ScopeOutOfRange {
                    index: v,
                    variables: n,
                });
            }
            scope.push(v);
        }
        scopes.push(scope);
    }
    let mut factors = Vec::with_capacity(f);
    for (fi, scope) in scopes.into_iter().enumerate() {
        let size = tok.usize("table size")?;
        let expected: usize = scope.iter().map(|&v| cards[v]).product();
        if size != expected {
            return Err(Error::TableLength {
                factor: fi,
                expected,
                found: size,
            });
        }
        let mut table = Vec::with_capacity(size);
        for _ in 0..size {
            let p = tok.real("table entry")?;
            if p < 0.0 {
                return Err(Error::NegativeEntry { factor: fi, value: p });
            }
            table.push(p.ln());
        }
        factors.push(Factor::new(scope, table));
    }
    GraphicalModel::new(cards, factors)
}

/// The double `y` nearest `exp(x)` for which `ln y` reproduces `x` best;
/// exact whenever `x` is itself the log of a double.
fn probability_for(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    let y = x.exp();
    if y.ln() == x || !y.is_normal() {
        return y;
    }
    let mut best = y;
    let mut best_err = (y.ln() - x).abs();
    let (mut up, mut down) = (y, y);
    for _ in 0..8 {
        up = up.next_up();
        down = down.next_down();
        for cand in [up, down] {
            let err = (cand.ln() - x).abs();
            if err < best_err {
                best = cand;
                best_err = err;
            }
        }
        if best_err == 0.0 {
            break;
        }
    }
    best
}

/// Writes a model in UAI `MARKOV` format, entries printed with 17
/// significant digits.
pub fn save_uai(model: &GraphicalModel) -> String {
    let mut out = String::new();
    out.push_str("MARKOV\n");
    let _ = writeln!(out, "{}", model.variable_count());
    let cards: Vec<String> = model.cardinalities().iter().map(|c| c.to_string()).collect();
    let _ = writeln!(out, "{}", cards.join(" "));
    let _ = writeln!(out, "{}", model.factors().len());
    for f in model.factors() {
        let _ = write!(out, "{}", f.scope().len());
        for v in f.scope() {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    for f in model.factors() {
        out.push('\n');
        let _ = writeln!(out, "{}", f.log_table().len());
        let entries: Vec<String> = f
            .log_table()
            .iter()
            .map(|&x| format!("{:.16e}", probability_for(x)))
            .collect();
        let _ = writeln!(out, " {}", entries.join(" "));
    }
    out
}
