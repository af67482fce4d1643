//! Named matrices and polynomials, and exact checks of their identities.

use std::f64::consts::PI;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::polyarena::Polynomial;
use crate::rational::{parse_rational, rat, Rational};
use crate::symlin::{FloatMat, RatMat};

const HORN_ROWS: [[i64; 5]; 5] = [
    [1, 1, -1, -1, 1],
    [1, 1, 1, -1, -1],
    [-1, 1, 1, 1, -1],
    [-1, -1, 1, 1, 1],
    [1, -1, -1, 1, 1],
];

pub fn horn() -> RatMat {
    RatMat::from_fn(5, |i, j| rat(HORN_ROWS[i][j]))
}

/// Horn matrix with every entry equal to 1 replaced by `t`.
pub fn horn_scaled(t: &Rational) -> RatMat {
    RatMat::from_fn(5, |i, j| if HORN_ROWS[i][j] == 1 { t.clone() } else { rat(-1) })
}

/// `[[0,1,0],[1,0,0],[0,0,0]]`.
pub fn matrix_m() -> RatMat {
    RatMat::from_fn(3, |i, j| if i + j == 1 { Rational::one() } else { Rational::zero() })
}

/// `(m I_m - J_m) / (m - 1)`, for `m >= 2`.
pub fn padding_block(m: usize) -> Result<RatMat> {
    if m < 2 {
        return Err(Error::Precondition("padding block needs m >= 2".into()));
    }
    let d = Rational::new((m as i64 - 1).into(), (m as i64 - 1).into()) * rat(1);
    let off = Rational::new((-1i64).into(), (m as i64 - 1).into());
    Ok(RatMat::from_fn(m, |i, j| if i == j { d.clone() } else { off.clone() }))
}

/// `H ⊕ 0`.
pub fn horn_plus_zero() -> RatMat {
    horn().direct_sum(&RatMat::zeros(1))
}

/// `H ⊕ [[1,-1],[-1,1]]`.
pub fn horn_plus_rank_one() -> RatMat {
    horn().direct_sum(&rank_one_block())
}

/// `H_t ⊕ [[1,-1],[-1,1]]`, whose only zero is `(0,...,0,1/2,1/2)` for `1 < t < √5 - 1`.
pub fn scaled_horn_plus_rank_one(t: &Rational) -> RatMat {
    horn_scaled(t).direct_sum(&rank_one_block())
}

fn rank_one_block() -> RatMat {
    RatMat::from_fn(2, |i, j| if i == j { rat(1) } else { rat(-1) })
}

/// `H ⊕ (m I - J)/(m - 1)`.
pub fn horn_plus_padding(m: usize) -> Result<RatMat> {
    Ok(horn().direct_sum(&padding_block(m)?))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TPsiParams {
    pub psi: [f64; 5],
}

impl TPsiParams {
    pub fn new(psi: [f64; 5]) -> Result<TPsiParams> {
        let p = TPsiParams { psi };
        if !p.is_valid() {
            return Err(Error::Precondition(format!("angles {psi:?} need positive entries summing below pi")));
        }
        Ok(p)
    }

    pub fn is_valid(&self) -> bool {
        self.psi.iter().all(|&v| v > 0.0 && v.is_finite()) && self.psi.iter().sum::<f64>() < PI
    }
}

/// The cosine-patterned matrix `T(ψ)`.
pub fn t_psi(p: &TPsiParams) -> FloatMat {
    let [p1, p2, p3, p4, p5] = p.psi;
    let c = f64::cos;
    let rows = [
        [1.0, -c(p4), c(p4 + p5), c(p2 + p3), -c(p3)],
        [-c(p4), 1.0, -c(p5), c(p5 + p1), c(p3 + p4)],
        [c(p4 + p5), -c(p5), 1.0, -c(p1), c(p1 + p2)],
        [c(p2 + p3), c(p5 + p1), -c(p1), 1.0, -c(p2)],
        [-c(p3), c(p3 + p4), c(p1 + p2), -c(p2), 1.0],
    ];
    FloatMat::from_fn(5, |i, j| rows[i][j])
}

/// The five zeros of `T(ψ)`, normalized to the simplex.
pub fn t_psi_zeros(p: &TPsiParams) -> [[f64; 5]; 5] {
    let [p1, p2, p3, p4, p5] = p.psi;
    let s = f64::sin;
    let raw = [
        [s(p5), s(p4 + p5), s(p4), 0.0, 0.0],
        [s(p3 + p4), s(p3), 0.0, 0.0, s(p4)],
        [0.0, s(p1), s(p1 + p5), s(p5), 0.0],
        [0.0, 0.0, s(p2), s(p1 + p2), s(p1)],
        [s(p2), 0.0, 0.0, s(p3), s(p2 + p3)],
    ];
    raw.map(|u| {
        let norm: f64 = u.iter().sum();
        u.map(|v| v / norm)
    })
}

fn x(n: usize, i: usize) -> Polynomial {
    Polynomial::var(n, i)
}

fn c(n: usize, v: i64) -> Polynomial {
    Polynomial::constant(n, rat(v))
}

/// `h(x, y) = x^4 y^2 + x^2 y^4 - 3 x^2 y^2 + 1`.
pub fn motzkin_poly() -> Polynomial {
    Polynomial::from_terms(2, [(vec![4, 2], rat(1)), (vec![2, 4], rat(1)), (vec![2, 2], rat(-3)), (vec![0, 0], rat(1))])
        .expect("two variables")
}

/// `m(x, y, z) = x^4 y^2 + x^2 y^4 - 3 x^2 y^2 z^2 + z^6`.
pub fn motzkin_form() -> Polynomial {
    Polynomial::from_terms(
        3,
        [(vec![4, 2, 0], rat(1)), (vec![2, 4, 0], rat(1)), (vec![2, 2, 2], rat(-3)), (vec![0, 0, 6], rat(1))],
    )
    .expect("three variables")
}

/// `q(x, y, z, w) = m^2 + w^6 m`.
pub fn q_poly() -> Polynomial {
    let m3 = motzkin_form();
    let m4 = Polynomial::from_terms(4, m3.terms().iter().map(|(e, v)| {
        let mut ent = e.entries().to_vec();
        ent.push(0);
        (ent, v.clone())
    }))
    .expect("four variables");
    &(&m4 * &m4) + &(&x(4, 3).pow(6) * &m4)
}

/// Named matrices used across the test suite and the CLI.
pub fn block_examples() -> Vec<(&'static str, RatMat)> {
    vec![
        ("horn_plus_zero", horn_plus_zero()),
        ("horn_plus_rank_one", horn_plus_rank_one()),
        ("horn_plus_padding_2", horn_plus_padding(2).expect("m >= 2")),
        ("scaled_horn_plus_rank_one", scaled_horn_plus_rank_one(&Rational::new(11.into(), 10.into()))),
        ("matrix_m", matrix_m()),
    ]
}

/// Right-hand side of the Horn sum-of-squares identity; `four` is the
/// coefficient of the five cubic monomial terms (4 in the true identity).
pub fn horn_identity_rhs(four: &Rational) -> Polynomial {
    let n = 5;
    let s: Vec<Polynomial> = (0..n).map(|i| x(n, i).pow(2)).collect();
    // (weight index, plus indices, minus indices), 0-based
    let squares: [(usize, [usize; 3], [usize; 2]); 5] = [
        (0, [0, 1, 4], [2, 3]),
        (1, [0, 1, 2], [3, 4]),
        (2, [1, 2, 3], [4, 0]),
        (3, [2, 3, 4], [0, 1]),
        (4, [0, 3, 4], [1, 2]),
    ];
    let mut rhs = Polynomial::zero(n);
    for (w, plus, minus) in squares {
        let mut inner = Polynomial::zero(n);
        for i in plus {
            inner = &inner + &s[i];
        }
        for i in minus {
            inner = &inner - &s[i];
        }
        rhs = &rhs + &(&s[w] * &inner.pow(2));
    }
    let triples = [[0, 1, 4], [0, 1, 2], [1, 2, 3], [2, 3, 4], [3, 4, 0]];
    for t in triples {
        let mono = &(&s[t[0]] * &s[t[1]]) * &s[t[2]];
        rhs = &rhs + &mono.scale(four);
    }
    rhs
}

/// `(Σ x_i^2) (x∘x)^T M (x∘x)`.
pub fn k1_lhs(m: &RatMat) -> Polynomial {
    let n = m.n();
    &Polynomial::sum_of_squares(n) * &Polynomial::quad_form(m).substitute_squares()
}

pub fn horn_identity_holds(m: &RatMat, four: &Rational) -> bool {
    k1_lhs(m) == horn_identity_rhs(four)
}

pub fn verify_horn_identity() -> bool {
    horn_identity_holds(&horn(), &rat(4))
}

/// Sides of `(x^2 + y^2)^2 h = x^2 y^2 (x^2 + y^2 + 1)(x^2 + y^2 - 2)^2 + (x^2 - y^2)^2`.
pub fn motzkin_certificate_sides(with_last_square: bool) -> (Polynomial, Polynomial) {
    let n = 2;
    let (xx, yy) = (x(n, 0).pow(2), x(n, 1).pow(2));
    let r = &xx + &yy;
    let lhs = &r.pow(2) * &motzkin_poly();
    let mut rhs = &(&(&xx * &yy) * &(&r + &c(n, 1))) * &(&r - &c(n, 2)).pow(2);
    if with_last_square {
        rhs = &rhs + &(&xx - &yy).pow(2);
    }
    (lhs, rhs)
}

pub fn verify_motzkin_certificate() -> bool {
    let (l, r) = motzkin_certificate_sides(true);
    l == r
}

/// Resolves a catalog name: `horn`, `horn_scaled:T`, `matrix_m`,
/// `horn_plus_zero`, `horn_plus_rank_one`, `scaled_horn_plus_rank_one:T`,
/// `horn_plus_padding:M`, `padding:M`, `identity:N`.
pub fn matrix_by_name(name: &str) -> Result<RatMat> {
    let (kind, arg) = name.split_once(':').unwrap_or((name, ""));
    let order = || arg.parse::<usize>().map_err(|_| Error::Parse(format!("bad order in {name:?}")));
    match kind {
        "horn" => Ok(horn()),
        "horn_scaled" => Ok(horn_scaled(&parse_rational(arg)?)),
        "matrix_m" => Ok(matrix_m()),
        "horn_plus_zero" => Ok(horn_plus_zero()),
        "horn_plus_rank_one" => Ok(horn_plus_rank_one()),
        "scaled_horn_plus_rank_one" => Ok(scaled_horn_plus_rank_one(&parse_rational(arg)?)),
        "horn_plus_padding" => horn_plus_padding(order()?),
        "padding" => padding_block(order()?),
        "identity" => Ok(RatMat::identity(order()?)),
        _ => Err(Error::Parse(format!("unknown catalog matrix {name:?}"))),
    }
}

/// Parses `tpsi:a,b,c,d,e`.
pub fn tpsi_by_name(name: &str) -> Result<TPsiParams> {
    let arg = name.strip_prefix("tpsi:").ok_or_else(|| Error::Parse(format!("not a tpsi name: {name:?}")))?;
    let v: Vec<f64> = arg
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad angle {t:?}"))))
        .collect::<Result<_>>()?;
    let psi: [f64; 5] = v.try_into().map_err(|_| Error::Parse("tpsi needs five angles".into()))?;
    TPsiParams::new(psi)
}

/// Resolves a catalog polynomial: `motzkin`, `motzkin_form`, `q`.
pub fn polynomial_by_name(name: &str) -> Result<Polynomial> {
    match name {
        "motzkin" => Ok(motzkin_poly()),
        "motzkin_form" => Ok(motzkin_form()),
        "q" => Ok(q_poly()),
        _ => Err(Error::Parse(format!("unknown catalog polynomial {name:?}"))),
    }
}
