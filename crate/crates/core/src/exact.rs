//! Exact scaled pmf by enumeration of compositions.
//!
//! `h_k(n; λ)` is the sum of `λ^{n_1+…+n_k} / (n_1! … n_k!)` over all
//! non-negative solutions of `n_1 + 2 n_2 + … + k n_k = n`. Grouping terms by
//! `s = n_1 + … + n_k` gives a polynomial in `λ` with rational coefficients.
//! Enumeration is exponential in `n`, so this serves as an oracle for the
//! recurrence in [`crate::distribution`], not as a production path.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Default cap on the number of compositions visited.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 5_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactPmfPolynomial {
    pub k: u32,
    pub n: usize,
    /// `coefficients[j]` multiplies `λ^j`.
    pub coefficients: Vec<BigRational>,
}

impl ExactPmfPolynomial {
    pub fn eval(&self, lambda: &BigRational) -> BigRational {
        // Horner
        let mut acc = BigRational::zero();
        for c in self.coefficients.iter().rev() {
            acc = acc * lambda + c;
        }
        acc
    }

    pub fn eval_f64(&self, lambda: &BigRational) -> f64 {
        self.eval(lambda).to_f64().unwrap_or(f64::NAN)
    }

    pub fn degree(&self) -> usize {
        self.coefficients
            .iter()
            .rposition(|c| !c.is_zero())
            .unwrap_or(0)
    }

    pub fn to_serializable(&self) -> Vec<(usize, String)> {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(j, c)| (j, c.to_string()))
            .collect()
    }
}

impl Serialize for ExactPmfPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ExactPmfPolynomial", 3)?;
        st.serialize_field("k", &self.k)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("coefficients", &self.to_serializable())?;
        st.end()
    }
}

pub fn exact_pmf_polynomial(k: u32, n: usize) -> Result<ExactPmfPolynomial> {
    exact_pmf_polynomial_with_budget(k, n, DEFAULT_ENUMERATION_BUDGET)
}

pub fn exact_pmf_polynomial_with_budget(
    k: u32,
    n: usize,
    budget: u64,
) -> Result<ExactPmfPolynomial> {
    if k == 0 {
        return Err(Error::invalid("order k must be at least 1"));
    }
    let factorials = factorial_table(n);
    let mut enumerator = Enumerator {
        factorials: &factorials,
        sums: vec![BigUint::zero(); n + 1],
        visited: 0,
        budget,
    };
    let top = (k as usize).min(n.max(1));
    enumerator.visit(top, n, 0, BigUint::one())?;
    let coefficients = enumerator
        .sums
        .into_iter()
        .enumerate()
        .map(|(s, multinomial_sum)| {
            BigRational::new(
                BigInt::from(multinomial_sum),
                BigInt::from(factorials[s].clone()),
            )
        })
        .collect();
    Ok(ExactPmfPolynomial { k, n, coefficients })
}

fn factorial_table(n: usize) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(BigUint::one());
    for i in 1..=n {
        let next = &out[i - 1] * BigUint::from(i);
        out.push(next);
    }
    out
}

struct Enumerator<'a> {
    factorials: &'a [BigUint],
    /// `sums[s] = Σ s! / (n_1! … n_k!)` over compositions with `s` parts.
    sums: Vec<BigUint>,
    visited: u64,
    budget: u64,
}

impl Enumerator<'_> {
    /// Chooses `n_part` for `part = top, top-1, …, 2`; `n_1` takes the rest.
    fn visit(&mut self, part: usize, remaining: usize, parts: usize, denom: BigUint) -> Result<()> {
        if part <= 1 {
            self.visited += 1;
            if self.visited > self.budget {
                return Err(Error::ResourceLimit(format!(
                    "composition enumeration exceeded {} terms",
                    self.budget
                )));
            }
            let s = parts + remaining;
            let denom = denom * &self.factorials[remaining];
            self.sums[s] += &self.factorials[s] / denom;
            return Ok(());
        }
        for count in 0..=remaining / part {
            let d = if count > 1 {
                &denom * &self.factorials[count]
            } else {
                denom.clone()
            };
            self.visit(part - 1, remaining - count * part, parts + count, d)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(num: i64, den: i64) -> BigRational {
        BigRational::new(num.into(), den.into())
    }

    #[test]
    fn order_three_degree_three() {
        let p = exact_pmf_polynomial(3, 3).unwrap();
        assert_eq!(p.coefficients, vec![r(0, 1), r(1, 1), r(1, 1), r(1, 6)]);
    }

    #[test]
    fn order_one_is_poisson_term() {
        let p = exact_pmf_polynomial(1, 4).unwrap();
        assert_eq!(
            p.coefficients,
            vec![r(0, 1), r(0, 1), r(0, 1), r(0, 1), r(1, 24)]
        );
    }

    #[test]
    fn order_two_degree_two() {
        let p = exact_pmf_polynomial(2, 2).unwrap();
        assert_eq!(p.coefficients, vec![r(0, 1), r(1, 1), r(1, 2)]);
        assert_eq!(p.eval(&r(1, 1)), r(3, 2));
    }

    #[test]
    fn structural_coefficient_facts() {
        for k in 1..=6 {
            assert_eq!(
                exact_pmf_polynomial(k, 0).unwrap().coefficients,
                vec![r(1, 1)]
            );
            for n in 1..=12 {
                let p = exact_pmf_polynomial(k, n).unwrap();
                assert!(p.coefficients[0].is_zero());
                assert!(p.coefficients.iter().all(|c| *c >= BigRational::zero()));
                assert_eq!(p.degree(), n);
                // only n_1 = n contributes to λ^n
                assert_eq!(
                    p.coefficients[n],
                    r(1, 1) / BigRational::from(BigInt::from(factorial_table(n)[n].clone()))
                );
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(
            exact_pmf_polynomial_with_budget(10, 60, 1000),
            Err(Error::ResourceLimit(_))
        ));
    }
}
