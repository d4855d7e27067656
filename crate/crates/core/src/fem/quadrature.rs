//! Symmetric quadrature rules on the reference tetrahedron
//! `{(0,0,0), (1,0,0), (0,1,0), (0,0,1)}` and the reference triangle
//! `{(0,0), (1,0), (0,1)}`. Weights sum to the reference measure (1/6 and
//! 1/2 respectively).

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct TetRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

/// Rule exact for polynomials of total degree `order` (1 to 4).
pub fn tet_quadrature(order: usize) -> Result<TetRule> {
    let mut rule = TetRule {
        points: Vec::new(),
        weights: Vec::new(),
    };
    // points given in barycentric coordinates (l0, l1, l2, l3)
    let mut push = |bary: [f64; 4], weight: f64| {
        rule.points.push([bary[1], bary[2], bary[3]]);
        rule.weights.push(weight);
    };
    match order {
        1 => push([0.25; 4], 1.0 / 6.0),
        2 => {
            let a = 0.585_410_196_624_968_5;
            let b = 0.138_196_601_125_010_5;
            for k in 0..4 {
                let mut bary = [b; 4];
                bary[k] = a;
                push(bary, 1.0 / 24.0);
            }
        }
        3 => {
            push([0.25; 4], -2.0 / 15.0);
            for k in 0..4 {
                let mut bary = [1.0 / 6.0; 4];
                bary[k] = 0.5;
                push(bary, 3.0 / 40.0);
            }
        }
        4 => {
            // Keast, 11 points
            push([0.25; 4], -74.0 / 5625.0);
            let a = 1.0 / 14.0;
            for k in 0..4 {
                let mut bary = [a; 4];
                bary[k] = 1.0 - 3.0 * a;
                push(bary, 343.0 / 45000.0);
            }
            let c = 0.25 * (1.0 + (5.0f64 / 14.0).sqrt());
            let d = 0.5 - c;
            for (p, q) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
                let mut bary = [d; 4];
                bary[p] = c;
                bary[q] = c;
                push(bary, 56.0 / 2250.0);
            }
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "tetrahedron quadrature order {order} not in 1..=4"
            )))
        }
    }
    Ok(rule)
}

pub fn triangle_quadrature(order: usize) -> Result<TriangleRule> {
    let mut rule = TriangleRule {
        points: Vec::new(),
        weights: Vec::new(),
    };
    fn push(rule: &mut TriangleRule, bary: [f64; 3], weight: f64) {
        rule.points.push([bary[1], bary[2]]);
        rule.weights.push(weight);
    }
    fn orbit3(rule: &mut TriangleRule, a: f64, weight: f64) {
        let b = 1.0 - 2.0 * a;
        for bary in [[b, a, a], [a, b, a], [a, a, b]] {
            push(rule, bary, weight);
        }
    }
    match order {
        1 => push(&mut rule, [1.0 / 3.0; 3], 0.5),
        2 => orbit3(&mut rule, 1.0 / 6.0, 1.0 / 6.0),
        3 => {
            push(&mut rule, [1.0 / 3.0; 3], -27.0 / 96.0);
            orbit3(&mut rule, 0.2, 25.0 / 96.0);
        }
        4 => {
            // Dunavant, 6 points
            orbit3(&mut rule, 0.445_948_490_915_965, 0.5 * 0.223_381_589_678_011);
            orbit3(&mut rule, 0.091_576_213_509_771, 0.5 * 0.109_951_743_655_322);
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "triangle quadrature order {order} not in 1..=4"
            )))
        }
    }
    Ok(rule)
}
