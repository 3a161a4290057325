//! TOML rule files.
//!
//! ```toml
//! kind = "finite-kernel"
//! alphabet = ["0", "1"]
//! cemetery = "w"        # optional
//! horizon = 2           # optional; later times reuse the k = horizon rows
//!
//! [[row]]
//! k = 0                 # optional; a row without k applies at every time
//! own = "1"
//! hist = [2, 1]         # neighbor counts per symbol
//! p = [0.25, 0.75]
//! ```
//!
//! or `kind = "gaussian-affine"` with numeric `a`, `b`, `c`.

use std::collections::HashMap;
use std::ops::Range;

use serde::Deserialize;
use toml::Spanned;

use crate::{AffineRule, CoreError, FiniteRule, StateSpace, Sym, TransitionRule};

type RowKey = (Option<usize>, Sym, Vec<u32>);

/// Kernel rows keyed by `(time, own state, neighbor histogram)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleTable {
    alphabet: usize,
    horizon: Option<usize>,
    rows: HashMap<RowKey, Vec<f64>>,
}

impl RuleTable {
    pub fn new(alphabet: usize, horizon: Option<usize>) -> Self {
        RuleTable { alphabet, horizon, rows: HashMap::new() }
    }

    /// Add a row, validating its shape and normalization.
    pub fn insert(&mut self, k: Option<usize>, own: Sym, hist: Vec<u32>, p: Vec<f64>) -> Result<(), CoreError> {
        if own as usize >= self.alphabet {
            return Err(CoreError::Precondition(format!("own symbol {own} outside the alphabet")));
        }
        if hist.len() != self.alphabet || p.len() != self.alphabet {
            return Err(CoreError::Precondition(format!(
                "hist and p need {} entries each, got {} and {}",
                self.alphabet,
                hist.len(),
                p.len()
            )));
        }
        let kk = k.unwrap_or(0);
        if let Some(v) = p.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(CoreError::BadProbability { k: kk, value: *v });
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(CoreError::NotNormalized { k: kk, sum });
        }
        if self.rows.insert((k, own, hist), p).is_some() {
            return Err(CoreError::Precondition("duplicate row".into()));
        }
        Ok(())
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn effective_horizon(&self) -> Option<usize> {
        self.horizon.or_else(|| self.rows.keys().filter_map(|r| r.0).max())
    }

    /// Write the row for the current states into `out`.
    pub fn fill(&self, k: usize, own: &[Sym], nbrs: &[&[Sym]], out: &mut [f64]) -> Result<(), CoreError> {
        let me = own[own.len() - 1];
        let mut hist = vec![0u32; self.alphabet];
        for n in nbrs {
            let s = n[n.len() - 1] as usize;
            if s >= self.alphabet {
                return Err(CoreError::BadOutput(s as u8));
            }
            hist[s] += 1;
        }
        let timed = self.effective_horizon().map(|h| k.min(h));
        let mut key = (timed, me, hist);
        let row = match self.rows.get(&key) {
            Some(r) => r,
            None => {
                key.0 = None;
                self.rows.get(&key).ok_or_else(|| CoreError::MissingRow {
                    k,
                    own: me.to_string(),
                    hist: key.2.clone(),
                })?
            }
        };
        out[..self.alphabet].copy_from_slice(row);
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    kind: Spanned<String>,
    alphabet: Option<Spanned<Vec<String>>>,
    cemetery: Option<Spanned<String>>,
    horizon: Option<usize>,
    a: Option<f64>,
    b: Option<f64>,
    c: Option<f64>,
    #[serde(default)]
    row: Vec<Spanned<RawRow>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRow {
    k: Option<usize>,
    own: Spanned<String>,
    hist: Spanned<Vec<u32>>,
    p: Spanned<Vec<f64>>,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(offset, |i| offset - i - 1) + 1;
    (line, col)
}

fn err_at(text: &str, span: Range<usize>, msg: impl Into<String>) -> CoreError {
    let (line, col) = line_col(text, span.start);
    CoreError::Parse { line, col, msg: msg.into() }
}

/// Parse a rule file into a dynamically typed rule.
pub fn parse_rule_file(text: &str) -> Result<TransitionRule, CoreError> {
    let raw: RawFile = toml::from_str(text).map_err(|e| {
        let span = e.span().unwrap_or(0..0);
        err_at(text, span, e.message().to_string())
    })?;
    match raw.kind.get_ref().as_str() {
        "gaussian-affine" => {
            let (Some(a), Some(b), Some(c)) = (raw.a, raw.b, raw.c) else {
                return Err(err_at(text, raw.kind.span(), "gaussian-affine needs a, b and c"));
            };
            if !raw.row.is_empty() {
                return Err(err_at(text, raw.row[0].span(), "gaussian-affine takes no rows"));
            }
            if ![a, b, c].iter().all(|x| x.is_finite()) {
                return Err(err_at(text, raw.kind.span(), "coefficients must be finite"));
            }
            Ok(TransitionRule::Affine(AffineRule::new(a, b, c)))
        }
        "finite-kernel" => {
            let Some(alpha) = raw.alphabet else {
                return Err(err_at(text, raw.kind.span(), "finite-kernel needs an alphabet"));
            };
            let mut space = StateSpace::finite(alpha.get_ref())
                .map_err(|e| err_at(text, alpha.span(), e.to_string()))?;
            if let Some(c) = &raw.cemetery {
                space = space.with_cemetery(c.get_ref()).map_err(|e| err_at(text, c.span(), e.to_string()))?;
            }
            let mut table = RuleTable::new(space.size(), raw.horizon);
            for row in &raw.row {
                let r = row.get_ref();
                let own = match space.symbol_index(r.own.get_ref()) {
                    Some(s) if (s as usize) < space.size() => s,
                    _ => return Err(err_at(text, r.own.span(), format!("unknown symbol {:?}", r.own.get_ref()))),
                };
                if r.hist.get_ref().len() != space.size() {
                    return Err(err_at(text, r.hist.span(), format!("hist needs {} counts", space.size())));
                }
                table
                    .insert(r.k, own, r.hist.get_ref().clone(), r.p.get_ref().clone())
                    .map_err(|e| err_at(text, r.p.span(), e.to_string()))?;
            }
            if table.is_empty() {
                return Err(err_at(text, raw.kind.span(), "finite-kernel needs at least one [[row]]"));
            }
            let name = "rule-file";
            Ok(TransitionRule::Finite(FiniteRule::from_table(name, space, table)?))
        }
        other => Err(err_at(text, raw.kind.span(), format!("unknown kind {other:?}"))),
    }
}
