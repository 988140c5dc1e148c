// Copyright (c) The SRB Authors
// SPDX-License-Identifier: Apache-2.0

//! Generalized Reed-Solomon error decoding over arbitrary evaluation points.
//!
//! A codeword is the evaluation of a polynomial of degree `< dim` at distinct
//! points. [`decode`] recovers the polynomial from `n` evaluations of which at
//! most `(n - dim) / 2` are wrong, using the Berlekamp-Welch key equation
//! solved by Gaussian elimination.

use thiserror::Error;

use crate::field::{Field, Symbol};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("need at least {dim} points, got {got}")]
    TooFewPoints { dim: usize, got: usize },
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("evaluation point {0} appears more than once")]
    DuplicatePoint(Symbol),
    #[error("no codeword within {budget} errors of the received word")]
    TooManyErrors { budget: usize },
}

/// Result of a successful decode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    /// Coefficients, lowest degree first, length `dim`.
    pub coefficients: Vec<Symbol>,
    /// Indices (into the supplied points) whose values disagree with the
    /// decoded polynomial.
    pub error_positions: Vec<usize>,
}

/// Largest number of errors a decode over `n` points at dimension `dim` corrects.
pub fn error_budget(n: usize, dim: usize) -> usize {
    n.saturating_sub(dim) / 2
}

/// Decode `dim` coefficients from `(x, y)` evaluations.
///
/// On success the returned polynomial agrees with at least `n - budget` of the
/// points. Anything else is reported as [`DecodeError::TooManyErrors`].
pub fn decode(field: &Field, points: &[(Symbol, Symbol)], dim: usize) -> Result<Decoded, DecodeError> {
    let n = points.len();
    if dim == 0 {
        return Err(DecodeError::ZeroDimension);
    }
    if n < dim {
        return Err(DecodeError::TooFewPoints { dim, got: n });
    }
    check_distinct(points)?;
    let budget = error_budget(n, dim);

    // Honest case: the interpolant through the first `dim` points explains all.
    let xs: Vec<Symbol> = points[..dim].iter().map(|p| p.0).collect();
    let ys: Vec<Symbol> = points[..dim].iter().map(|p| p.1).collect();
    let candidate = interpolate(field, &xs, &ys);
    if points[dim..]
        .iter()
        .all(|&(x, y)| field.poly_eval(&candidate, x) == y)
    {
        return Ok(Decoded {
            coefficients: candidate,
            error_positions: Vec::new(),
        });
    }
    if budget == 0 {
        return Err(DecodeError::TooManyErrors { budget });
    }

    let coefficients =
        berlekamp_welch(field, points, dim, budget).ok_or(DecodeError::TooManyErrors { budget })?;
    let error_positions: Vec<usize> = points
        .iter()
        .enumerate()
        .filter(|(_, &(x, y))| field.poly_eval(&coefficients, x) != y)
        .map(|(i, _)| i)
        .collect();
    if error_positions.len() > budget {
        return Err(DecodeError::TooManyErrors { budget });
    }
    Ok(Decoded {
        coefficients,
        error_positions,
    })
}

fn check_distinct(points: &[(Symbol, Symbol)]) -> Result<(), DecodeError> {
    let mut xs: Vec<Symbol> = points.iter().map(|p| p.0).collect();
    xs.sort_unstable();
    match xs.windows(2).find(|w| w[0] == w[1]) {
        Some(w) => Err(DecodeError::DuplicatePoint(w[0])),
        None => Ok(()),
    }
}

/// Solve `Q(x_i) = y_i E(x_i)` with `E` monic of degree `e` and `deg Q < e + dim`,
/// then return `Q / E` when the division is exact.
fn berlekamp_welch(
    field: &Field,
    points: &[(Symbol, Symbol)],
    dim: usize,
    e: usize,
) -> Option<Vec<Symbol>> {
    let q_len = e + dim;
    let unknowns = q_len + e;
    let mut rows = Vec::with_capacity(points.len());
    for &(x, y) in points {
        let powers = field.vandermonde_row(x, q_len.max(e + 1));
        let mut row = Vec::with_capacity(unknowns + 1);
        row.extend_from_slice(&powers[..q_len]);
        row.extend(powers[..e].iter().map(|&p| field.neg(field.mul(y, p))));
        row.push(field.mul(y, powers[e]));
        rows.push(row);
    }
    let solution = solve(field, rows, unknowns)?;
    let q_poly = &solution[..q_len];
    let mut e_poly = solution[q_len..].to_vec();
    e_poly.push(1);
    let (quotient, remainder) = poly_divmod(field, q_poly, &e_poly);
    if remainder.iter().any(|&r| r != 0) {
        return None;
    }
    let mut coefficients = quotient;
    coefficients.resize(dim.max(coefficients.len()), 0);
    if coefficients[dim..].iter().any(|&c| c != 0) {
        return None;
    }
    coefficients.truncate(dim);
    Some(coefficients)
}

/// Gaussian elimination on an augmented matrix (`unknowns` columns plus the
/// right-hand side). Returns one solution with free variables set to zero, or
/// `None` when the system is inconsistent.
pub(crate) fn solve(field: &Field, mut rows: Vec<Vec<Symbol>>, unknowns: usize) -> Option<Vec<Symbol>> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..unknowns {
        let Some(p) = (r..rows.len()).find(|&i| rows[i][c] != 0) else {
            continue;
        };
        rows.swap(r, p);
        let inv = field.inv(rows[r][c]).expect("pivot is nonzero");
        for v in rows[r].iter_mut().skip(c) {
            *v = field.mul(*v, inv);
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c] == 0 {
                continue;
            }
            let factor = row[c];
            for (v, &pv) in row.iter_mut().zip(&pivot_row).skip(c) {
                *v = field.sub(*v, field.mul(factor, pv));
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    if rows[r..].iter().any(|row| row[unknowns] != 0) {
        return None;
    }
    let mut x = vec![0; unknowns];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = rows[i][unknowns];
    }
    Some(x)
}

/// Polynomial long division, coefficients lowest degree first.
pub(crate) fn poly_divmod(field: &Field, num: &[Symbol], den: &[Symbol]) -> (Vec<Symbol>, Vec<Symbol>) {
    let den_deg = den.iter().rposition(|&c| c != 0).expect("nonzero divisor");
    let lead_inv = field.inv(den[den_deg]).unwrap();
    let mut rem = num.to_vec();
    if rem.len() <= den_deg {
        return (vec![0], rem);
    }
    let mut quot = vec![0; rem.len() - den_deg];
    for i in (den_deg..rem.len()).rev() {
        let coef = field.mul(rem[i], lead_inv);
        if coef == 0 {
            continue;
        }
        quot[i - den_deg] = coef;
        for (j, &d) in den[..=den_deg].iter().enumerate() {
            let idx = i - den_deg + j;
            rem[idx] = field.sub(rem[idx], field.mul(coef, d));
        }
    }
    rem.truncate(den_deg);
    (quot, rem)
}

/// Newton interpolation through distinct points, returned in monomial form.
pub fn interpolate(field: &Field, xs: &[Symbol], ys: &[Symbol]) -> Vec<Symbol> {
    let n = xs.len();
    let mut dd = ys.to_vec();
    for level in 1..n {
        for i in (level..n).rev() {
            let num = field.sub(dd[i], dd[i - 1]);
            let den = field.sub(xs[i], xs[i - level]);
            dd[i] = field.div(num, den).expect("interpolation points are distinct");
        }
    }
    // Horner over the Newton basis: p = dd[n-1]; p = p*(x - x_i) + dd[i].
    let mut coeffs = vec![0; n];
    coeffs[0] = dd[n - 1];
    let mut len = 1;
    for i in (0..n - 1).rev() {
        // multiply by (x - xs[i])
        for j in (0..=len).rev() {
            let shifted = if j > 0 { coeffs[j - 1] } else { 0 };
            let scaled = if j < len {
                field.mul(coeffs[j], xs[i])
            } else {
                0
            };
            coeffs[j] = field.sub(shifted, scaled);
        }
        len += 1;
        coeffs[0] = field.add(coeffs[0], dd[i]);
    }
    coeffs
}
